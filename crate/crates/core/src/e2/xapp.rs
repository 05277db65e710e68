//! RIC endpoint with the `Sched` xApp, and the RAN-side E2 agent.
//!
//! Both actors run on the simulation thread and are driven by simulated
//! time, so every exchange is reproducible.

use super::{
    AckStatus, ControlRequest, E2Message, LinkEnd, MessageType, Payload, ProtocolError,
    Subscription,
};
use crate::mac::{MacState, SchedulingPolicy};
use crate::metrics::KpmRecord;
use crate::{Error, Result};

/// Number of (eMBB, URLLC) policy pairs the xApp cycles through.
pub const XAPP_CYCLE: usize = 9;

/// Pair `index mod 9` in lexicographic order over RR < WF < PF.
pub fn policy_pair(index: usize) -> (SchedulingPolicy, SchedulingPolicy) {
    let i = index % XAPP_CYCLE;
    (SchedulingPolicy::ALL[i / 3], SchedulingPolicy::ALL[i % 3])
}

/// The xApp decision at `elapsed_ms`: a control request exactly at each
/// whole second, cycling the nine policy pairs.
pub fn sched_xapp_step(elapsed_ms: u64) -> Option<ControlRequest> {
    if elapsed_ms % 1000 != 0 {
        return None;
    }
    let (embb, urllc) = policy_pair((elapsed_ms / 1000) as usize);
    Some(ControlRequest::pair(embb, urllc))
}

/// Stateful wrapper that emits each second's request at most once.
#[derive(Debug, Clone, Default)]
pub struct SchedXapp {
    next_second: u64,
}

impl SchedXapp {
    pub fn step(&mut self, elapsed_ms: u64) -> Option<ControlRequest> {
        if elapsed_ms < self.next_second * 1000 {
            return None;
        }
        let req = sched_xapp_step(elapsed_ms)?;
        self.next_second = elapsed_ms / 1000 + 1;
        Some(req)
    }
}

/// RIC side: subscribes to KPMs, stores indications and runs the xApp.
#[derive(Debug)]
pub struct RicEndpoint {
    link: LinkEnd,
    xapp: Option<SchedXapp>,
    next_correlation: u32,
    subscribed: Option<bool>,
    indications: Vec<(u64, Vec<KpmRecord>)>,
    acks: Vec<(u32, AckStatus)>,
    sent_controls: Vec<(u64, u32, ControlRequest)>,
}

impl RicEndpoint {
    pub fn new(link: LinkEnd, xapp_enabled: bool) -> Self {
        Self {
            link,
            xapp: xapp_enabled.then(SchedXapp::default),
            next_correlation: 1,
            subscribed: None,
            indications: Vec::new(),
            acks: Vec::new(),
            sent_controls: Vec::new(),
        }
    }

    fn correlation(&mut self) -> u32 {
        let c = self.next_correlation;
        self.next_correlation = self.next_correlation.wrapping_add(1);
        c
    }

    pub fn subscribe(&mut self, subscription: Subscription) {
        let id = self.correlation();
        self.link
            .send(&E2Message::new(id, Payload::SubscriptionRequest(subscription)));
    }

    /// Sends an arbitrary control request; returns its correlation id.
    pub fn send_control(&mut self, now_ms: u64, request: ControlRequest) -> u32 {
        let id = self.correlation();
        self.link
            .send(&E2Message::new(id, Payload::ControlRequest(request.clone())));
        self.sent_controls.push((now_ms, id, request));
        id
    }

    /// Consumes pending messages, then lets the xApp act at `now_ms`.
    pub fn step(&mut self, now_ms: u64) -> Result<()> {
        self.drain()?;
        if let Some(req) = self.xapp.as_mut().and_then(|x| x.step(now_ms)) {
            self.send_control(now_ms, req);
        }
        Ok(())
    }

    /// Consumes every message the agent has sent so far.
    pub fn drain(&mut self) -> Result<()> {
        while let Some(msg) = self.link.try_recv() {
            let msg = msg?;
            match msg.payload {
                Payload::SubscriptionResponse { status } => self.subscribed = Some(status == 0),
                Payload::Indication {
                    window_end_ms,
                    records,
                } => self.indications.push((window_end_ms, records)),
                Payload::ControlAck(status) => self.acks.push((msg.correlation_id, status)),
                other => {
                    return Err(Error::ContractViolation(format!(
                        "RIC received unexpected {:?}",
                        E2Message::new(msg.correlation_id, other).msg_type()
                    )))
                }
            }
        }
        Ok(())
    }

    /// `Some(accepted)` once the subscription response arrived.
    pub fn subscribed(&self) -> Option<bool> {
        self.subscribed
    }

    pub fn indications(&self) -> &[(u64, Vec<KpmRecord>)] {
        &self.indications
    }

    pub fn acks(&self) -> &[(u32, AckStatus)] {
        &self.acks
    }

    /// `(sent_at_ms, correlation_id, request)` for every control sent.
    pub fn sent_controls(&self) -> &[(u64, u32, ControlRequest)] {
        &self.sent_controls
    }
}

/// Collects KPM records and releases one indication per period with the
/// records whose timestamps fall in `((N−1)·P, N·P]`.
#[derive(Debug, Clone)]
pub struct KpmReporter {
    subscription: Subscription,
    pending: Vec<KpmRecord>,
    last_end_ms: u64,
}

impl KpmReporter {
    pub fn new(subscription: Subscription) -> Result<Self> {
        if subscription.kpm_period_ms == 0 {
            return Err(Error::invalid("KPM period must be at least 1 ms"));
        }
        Ok(Self {
            subscription,
            pending: Vec::new(),
            last_end_ms: 0,
        })
    }

    pub fn push(&mut self, records: &[KpmRecord]) {
        let filter = self.subscription.slice_filter;
        self.pending.extend(
            records
                .iter()
                .filter(|r| filter.is_none_or(|s| r.slice == s))
                .cloned(),
        );
    }

    /// The indication due at `now_ms`, if `now_ms` closes a period that
    /// has not been reported yet.
    pub fn tick(&mut self, now_ms: u64) -> Option<(u64, Vec<KpmRecord>)> {
        let period = u64::from(self.subscription.kpm_period_ms);
        if now_ms <= self.last_end_ms || now_ms % period != 0 {
            return None;
        }
        self.last_end_ms = now_ms;
        let start = now_ms - period;
        let (due, later): (Vec<_>, Vec<_>) = std::mem::take(&mut self.pending)
            .into_iter()
            .filter(|r| r.timestamp_ms > start)
            .partition(|r| r.timestamp_ms <= now_ms);
        self.pending = later;
        Some((now_ms, due))
    }
}

/// A control request applied by the agent.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AppliedControl {
    pub correlation_id: u32,
    /// First TTI scheduled under the new policies.
    pub effective_tti: u64,
    pub request: ControlRequest,
}

/// RAN side: answers subscriptions, applies controls at TTI boundaries and
/// streams indications.
#[derive(Debug)]
pub struct RanAgent {
    link: LinkEnd,
    reporter: Option<KpmReporter>,
    applied: Vec<AppliedControl>,
    indications_sent: usize,
}

impl RanAgent {
    pub fn new(link: LinkEnd) -> Self {
        Self {
            link,
            reporter: None,
            applied: Vec::new(),
            indications_sent: 0,
        }
    }

    /// Handles every frame received so far. Called at a TTI boundary, right
    /// before `mac` schedules its next TTI, so controls that arrived during
    /// the previous TTI take effect now.
    pub fn poll(&mut self, mac: &mut MacState) -> Result<()> {
        while let Some(raw) = self.link.try_recv_raw() {
            let corr = raw.correlation_id;
            match raw.parse() {
                Ok(msg) => match msg.payload {
                    Payload::SubscriptionRequest(sub) => {
                        let status = match KpmReporter::new(sub) {
                            Ok(r) => {
                                self.reporter = Some(r);
                                0
                            }
                            Err(_) => 1,
                        };
                        self.link
                            .send(&E2Message::new(corr, Payload::SubscriptionResponse { status }));
                    }
                    Payload::ControlRequest(req) => {
                        let status = if req.covers_all_slices() {
                            for (&slice, &policy) in &req.policies {
                                mac.set_policy(slice, policy);
                            }
                            self.applied.push(AppliedControl {
                                correlation_id: corr,
                                effective_tti: mac.tti(),
                                request: req,
                            });
                            AckStatus::Ok
                        } else {
                            AckStatus::Malformed
                        };
                        self.link.send(&E2Message::new(corr, Payload::ControlAck(status)));
                    }
                    other => {
                        return Err(Error::ContractViolation(format!(
                            "RAN agent received unexpected {:?}",
                            E2Message::new(corr, other).msg_type()
                        )))
                    }
                },
                Err(e) if raw.msg_type == MessageType::ControlRequest as u8 => {
                    let status = match e {
                        ProtocolError::UnknownSlice(_) => AckStatus::UnknownSlice,
                        _ => AckStatus::Malformed,
                    };
                    self.link.send(&E2Message::new(corr, Payload::ControlAck(status)));
                }
                Err(e) => return Err(e.into()),
            }
        }
        Ok(())
    }

    /// Feeds closed KPM windows and sends the indication due at `now_ms`.
    pub fn report(&mut self, now_ms: u64, records: &[KpmRecord]) {
        let Some(reporter) = self.reporter.as_mut() else {
            return;
        };
        reporter.push(records);
        if let Some((window_end_ms, records)) = reporter.tick(now_ms) {
            let id = self.indications_sent as u32;
            self.indications_sent += 1;
            self.link.send(&E2Message::new(
                id,
                Payload::Indication {
                    window_end_ms,
                    records,
                },
            ));
        }
    }

    pub fn applied(&self) -> &[AppliedControl] {
        &self.applied
    }

    pub fn indications_sent(&self) -> usize {
        self.indications_sent
    }
}
