//! E2-lite: a small length-prefixed binary protocol between the RIC and the
//! RAN agent.
//!
//! Every frame is `payload length (u32 BE) ‖ type (u8) ‖ correlation id
//! (u32 BE) ‖ payload`. Payloads are flat big-endian fields:
//!
//! | type | name        | payload |
//! |------|-------------|---------|
//! | 0x01 | SUB_REQ     | period_ms u32, slice filter u8 (0xFF = all) |
//! | 0x02 | SUB_RESP    | status u8 (0 = accepted) |
//! | 0x03 | INDICATION  | window_end_ms u64, count u32, count × 39-byte records |
//! | 0x04 | CONTROL_REQ | count u8, count × (slice u8, policy u8) |
//! | 0x05 | CONTROL_ACK | status u8 (0 ok, 1 unknown slice, 2 malformed) |
//!
//! A KPM record is `timestamp_ms u64, ue_id u32, slice u8, throughput f64
//! (IEEE-754 bits), buffer_bytes u64, cqi u8, mcs u8, granted u32,
//! requested u32`. Slice codes: eMBB 0, URLLC 1. Policy codes: RR 0, WF 1,
//! PF 2.

mod transport;
mod xapp;

use std::collections::BTreeMap;

pub use transport::{duplex, read_frame, write_frame, FrameBuffer, LinkEnd, RawFrame};
pub use xapp::{
    policy_pair, sched_xapp_step, AppliedControl, KpmReporter, RanAgent, RicEndpoint,
    SchedXapp, XAPP_CYCLE,
};

use crate::mac::{SchedulingPolicy, Slice};
use crate::metrics::KpmRecord;

pub const HEADER_LEN: usize = 9;
pub const KPM_RECORD_LEN: usize = 39;
pub const NO_SLICE_FILTER: u8 = 0xFF;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ProtocolError {
    #[error("truncated frame: need {needed} bytes, have {available}")]
    Truncated { needed: usize, available: usize },
    #[error("bad length: {0}")]
    BadLength(String),
    #[error("unknown message type {0:#04x}")]
    UnknownType(u8),
    #[error("unknown slice code {0}")]
    UnknownSlice(u8),
    #[error("malformed payload: {0}")]
    Malformed(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MessageType {
    SubscriptionRequest = 0x01,
    SubscriptionResponse = 0x02,
    Indication = 0x03,
    ControlRequest = 0x04,
    ControlAck = 0x05,
}

impl MessageType {
    pub fn as_str(self) -> &'static str {
        match self {
            MessageType::SubscriptionRequest => "SUB_REQ",
            MessageType::SubscriptionResponse => "SUB_RESP",
            MessageType::Indication => "INDICATION",
            MessageType::ControlRequest => "CONTROL_REQ",
            MessageType::ControlAck => "CONTROL_ACK",
        }
    }

    pub fn from_code(code: u8) -> Result<Self, ProtocolError> {
        Ok(match code {
            0x01 => MessageType::SubscriptionRequest,
            0x02 => MessageType::SubscriptionResponse,
            0x03 => MessageType::Indication,
            0x04 => MessageType::ControlRequest,
            0x05 => MessageType::ControlAck,
            other => return Err(ProtocolError::UnknownType(other)),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Subscription {
    pub kpm_period_ms: u32,
    pub slice_filter: Option<Slice>,
}

/// Scheduling policy per slice. Valid requests cover both slices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ControlRequest {
    pub policies: BTreeMap<Slice, SchedulingPolicy>,
}

impl ControlRequest {
    pub fn pair(embb: SchedulingPolicy, urllc: SchedulingPolicy) -> Self {
        Self {
            policies: BTreeMap::from([(Slice::Embb, embb), (Slice::Urllc, urllc)]),
        }
    }

    pub fn covers_all_slices(&self) -> bool {
        Slice::ALL.iter().all(|s| self.policies.contains_key(s))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AckStatus {
    Ok = 0,
    UnknownSlice = 1,
    Malformed = 2,
}

impl AckStatus {
    fn from_code(code: u8) -> Result<Self, ProtocolError> {
        match code {
            0 => Ok(AckStatus::Ok),
            1 => Ok(AckStatus::UnknownSlice),
            2 => Ok(AckStatus::Malformed),
            other => Err(ProtocolError::Malformed(format!("ACK status {other}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Payload {
    SubscriptionRequest(Subscription),
    SubscriptionResponse { status: u8 },
    Indication { window_end_ms: u64, records: Vec<KpmRecord> },
    ControlRequest(ControlRequest),
    ControlAck(AckStatus),
}

#[derive(Debug, Clone, PartialEq)]
pub struct E2Message {
    pub correlation_id: u32,
    pub payload: Payload,
}

impl E2Message {
    pub fn new(correlation_id: u32, payload: Payload) -> Self {
        Self {
            correlation_id,
            payload,
        }
    }

    pub fn msg_type(&self) -> MessageType {
        match self.payload {
            Payload::SubscriptionRequest(_) => MessageType::SubscriptionRequest,
            Payload::SubscriptionResponse { .. } => MessageType::SubscriptionResponse,
            Payload::Indication { .. } => MessageType::Indication,
            Payload::ControlRequest(_) => MessageType::ControlRequest,
            Payload::ControlAck(_) => MessageType::ControlAck,
        }
    }
}

/// Serialises one message into a complete frame.
pub fn encode(msg: &E2Message) -> Vec<u8> {
    let mut p = Vec::new();
    match &msg.payload {
        Payload::SubscriptionRequest(s) => {
            p.extend_from_slice(&s.kpm_period_ms.to_be_bytes());
            p.push(s.slice_filter.map_or(NO_SLICE_FILTER, Slice::code));
        }
        Payload::SubscriptionResponse { status } => p.push(*status),
        Payload::Indication {
            window_end_ms,
            records,
        } => {
            p.extend_from_slice(&window_end_ms.to_be_bytes());
            p.extend_from_slice(&(records.len() as u32).to_be_bytes());
            for r in records {
                encode_record(&mut p, r);
            }
        }
        Payload::ControlRequest(c) => {
            p.push(c.policies.len() as u8);
            for (slice, policy) in &c.policies {
                p.push(slice.code());
                p.push(policy.code());
            }
        }
        Payload::ControlAck(status) => p.push(*status as u8),
    }
    let mut frame = Vec::with_capacity(HEADER_LEN + p.len());
    frame.extend_from_slice(&(p.len() as u32).to_be_bytes());
    frame.push(msg.msg_type() as u8);
    frame.extend_from_slice(&msg.correlation_id.to_be_bytes());
    frame.extend_from_slice(&p);
    frame
}

fn encode_record(p: &mut Vec<u8>, r: &KpmRecord) {
    p.extend_from_slice(&r.timestamp_ms.to_be_bytes());
    p.extend_from_slice(&r.ue_id.to_be_bytes());
    p.push(r.slice.code());
    p.extend_from_slice(&r.throughput_bps.to_bits().to_be_bytes());
    p.extend_from_slice(&r.buffer_bytes.to_be_bytes());
    p.push(r.cqi);
    p.push(r.mcs);
    p.extend_from_slice(&r.granted_prbs.to_be_bytes());
    p.extend_from_slice(&r.requested_prbs.to_be_bytes());
}

/// Decodes exactly one frame; trailing bytes are a length error.
pub fn decode(bytes: &[u8]) -> Result<E2Message, ProtocolError> {
    let raw = RawFrame::split(bytes)?;
    if raw.frame_len() != bytes.len() {
        return Err(ProtocolError::BadLength(format!(
            "frame declares {} bytes but {} were supplied",
            raw.frame_len(),
            bytes.len()
        )));
    }
    raw.parse()
}

/// Big-endian cursor over a payload.
struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], ProtocolError> {
        let end = self.pos + n;
        if end > self.bytes.len() {
            return Err(ProtocolError::BadLength(format!(
                "payload of {} bytes ends inside a field at offset {}",
                self.bytes.len(),
                self.pos
            )));
        }
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u8(&mut self) -> Result<u8, ProtocolError> {
        Ok(self.take(1)?[0])
    }

    fn u32(&mut self) -> Result<u32, ProtocolError> {
        Ok(u32::from_be_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn u64(&mut self) -> Result<u64, ProtocolError> {
        Ok(u64::from_be_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }

    fn slice(&mut self) -> Result<Slice, ProtocolError> {
        let code = self.u8()?;
        Slice::from_code(code).ok_or(ProtocolError::UnknownSlice(code))
    }

    fn finish(&self) -> Result<(), ProtocolError> {
        if self.pos != self.bytes.len() {
            return Err(ProtocolError::BadLength(format!(
                "{} unread payload bytes",
                self.bytes.len() - self.pos
            )));
        }
        Ok(())
    }
}

pub(crate) fn parse_payload(msg_type: MessageType, payload: &[u8]) -> Result<Payload, ProtocolError> {
    let mut r = Reader {
        bytes: payload,
        pos: 0,
    };
    let out = match msg_type {
        MessageType::SubscriptionRequest => {
            let kpm_period_ms = r.u32()?;
            let filter = r.u8()?;
            let slice_filter = if filter == NO_SLICE_FILTER {
                None
            } else {
                Some(Slice::from_code(filter).ok_or(ProtocolError::UnknownSlice(filter))?)
            };
            Payload::SubscriptionRequest(Subscription {
                kpm_period_ms,
                slice_filter,
            })
        }
        MessageType::SubscriptionResponse => Payload::SubscriptionResponse { status: r.u8()? },
        MessageType::Indication => {
            let window_end_ms = r.u64()?;
            let count = r.u32()? as usize;
            let expected = count.checked_mul(KPM_RECORD_LEN).map(|n| n + 12);
            if expected != Some(payload.len()) {
                return Err(ProtocolError::BadLength(format!(
                    "indication with {count} records in {} payload bytes",
                    payload.len()
                )));
            }
            let mut records = Vec::with_capacity(count);
            for _ in 0..count {
                records.push(KpmRecord {
                    timestamp_ms: r.u64()?,
                    ue_id: r.u32()?,
                    slice: r.slice()?,
                    throughput_bps: f64::from_bits(r.u64()?),
                    buffer_bytes: r.u64()?,
                    cqi: r.u8()?,
                    mcs: r.u8()?,
                    granted_prbs: r.u32()?,
                    requested_prbs: r.u32()?,
                });
            }
            Payload::Indication {
                window_end_ms,
                records,
            }
        }
        MessageType::ControlRequest => {
            let count = usize::from(r.u8()?);
            if payload.len() != 1 + 2 * count {
                return Err(ProtocolError::BadLength(format!(
                    "control request with {count} entries in {} payload bytes",
                    payload.len()
                )));
            }
            let mut policies = BTreeMap::new();
            for _ in 0..count {
                let slice = r.slice()?;
                let code = r.u8()?;
                let policy = SchedulingPolicy::from_code(code)
                    .ok_or_else(|| ProtocolError::Malformed(format!("policy code {code}")))?;
                if policies.insert(slice, policy).is_some() {
                    return Err(ProtocolError::Malformed(format!("slice {slice} repeated")));
                }
            }
            Payload::ControlRequest(ControlRequest { policies })
        }
        MessageType::ControlAck => Payload::ControlAck(AckStatus::from_code(r.u8()?)?),
    };
    r.finish()?;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn control_request_frame_prefix() {
        let msg = E2Message::new(
            7,
            Payload::ControlRequest(ControlRequest::pair(
                SchedulingPolicy::WaterFilling,
                SchedulingPolicy::RoundRobin,
            )),
        );
        let f = encode(&msg);
        assert_eq!(&f[..9], &[0, 0, 0, 5, 0x04, 0, 0, 0, 7]);
        assert_eq!(&f[9..], &[2, 0, 1, 1, 0]);
        assert_eq!(decode(&f).unwrap(), msg);
    }

    #[test]
    fn sub_req_layout() {
        let msg = E2Message::new(
            1,
            Payload::SubscriptionRequest(Subscription {
                kpm_period_ms: 100,
                slice_filter: None,
            }),
        );
        assert_eq!(encode(&msg), vec![0, 0, 0, 5, 1, 0, 0, 0, 1, 0, 0, 0, 100, 0xFF]);
    }

    #[test]
    fn truncated_and_bad_lengths() {
        let msg = E2Message::new(3, Payload::ControlAck(AckStatus::Ok));
        let f = encode(&msg);
        assert!(matches!(decode(&f[..5]), Err(ProtocolError::Truncated { .. })));
        assert!(matches!(decode(&f[..f.len() - 1]), Err(ProtocolError::Truncated { .. })));
        let mut long = f.clone();
        long.push(0);
        assert!(matches!(decode(&long), Err(ProtocolError::BadLength(_))));

        // Length field claims more than is present.
        let mut lying = f.clone();
        lying[3] = 40;
        assert!(matches!(decode(&lying), Err(ProtocolError::Truncated { .. })));

        // Internally inconsistent control payload.
        let bad = [0, 0, 0, 2, 4, 0, 0, 0, 1, 2, 0];
        assert!(matches!(decode(&bad), Err(ProtocolError::BadLength(_))));
    }

    #[test]
    fn unknown_type_and_slice() {
        let f = [0, 0, 0, 1, 9, 0, 0, 0, 1, 0];
        assert_eq!(decode(&f), Err(ProtocolError::UnknownType(9)));
        let f = [0, 0, 0, 3, 4, 0, 0, 0, 1, 1, 7, 0];
        assert_eq!(decode(&f), Err(ProtocolError::UnknownSlice(7)));
        let f = [0, 0, 0, 5, 4, 0, 0, 0, 1, 2, 0, 0, 0, 1];
        assert!(matches!(decode(&f), Err(ProtocolError::Malformed(_))));
    }

    #[test]
    fn empty_indication_is_a_heartbeat() {
        let msg = E2Message::new(
            0,
            Payload::Indication {
                window_end_ms: 100,
                records: vec![],
            },
        );
        let f = encode(&msg);
        assert_eq!(f.len(), HEADER_LEN + 12);
        assert_eq!(decode(&f).unwrap(), msg);
    }
}
