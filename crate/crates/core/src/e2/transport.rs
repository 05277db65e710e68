//! Byte-stream transports for E2 frames.

use std::io::{self, Read, Write};
use std::sync::mpsc::{channel, Receiver, Sender, TryRecvError};

use super::{encode, parse_payload, E2Message, MessageType, ProtocolError, HEADER_LEN};

/// A frame split into header fields and an unparsed payload.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawFrame {
    pub msg_type: u8,
    pub correlation_id: u32,
    pub payload: Vec<u8>,
}

impl RawFrame {
    /// Splits the first frame off `bytes`, ignoring anything after it.
    pub fn split(bytes: &[u8]) -> Result<Self, ProtocolError> {
        if bytes.len() < HEADER_LEN {
            return Err(ProtocolError::Truncated {
                needed: HEADER_LEN,
                available: bytes.len(),
            });
        }
        let len = u32::from_be_bytes(bytes[..4].try_into().expect("4 bytes")) as usize;
        let needed = HEADER_LEN + len;
        if bytes.len() < needed {
            return Err(ProtocolError::Truncated {
                needed,
                available: bytes.len(),
            });
        }
        Ok(Self {
            msg_type: bytes[4],
            correlation_id: u32::from_be_bytes(bytes[5..9].try_into().expect("4 bytes")),
            payload: bytes[HEADER_LEN..needed].to_vec(),
        })
    }

    pub fn frame_len(&self) -> usize {
        HEADER_LEN + self.payload.len()
    }

    pub fn parse(&self) -> Result<E2Message, ProtocolError> {
        let msg_type = MessageType::from_code(self.msg_type)?;
        Ok(E2Message {
            correlation_id: self.correlation_id,
            payload: parse_payload(msg_type, &self.payload)?,
        })
    }
}

/// Reassembles frames from arbitrarily chunked stream bytes.
#[derive(Debug, Default, Clone)]
pub struct FrameBuffer {
    pending: Vec<u8>,
}

impl FrameBuffer {
    pub fn push(&mut self, bytes: &[u8]) {
        self.pending.extend_from_slice(bytes);
    }

    /// The next complete frame, or `None` if more bytes are needed.
    pub fn next_raw(&mut self) -> Option<RawFrame> {
        match RawFrame::split(&self.pending) {
            Ok(raw) => {
                self.pending.drain(..raw.frame_len());
                Some(raw)
            }
            Err(_) => None,
        }
    }

    pub fn buffered(&self) -> usize {
        self.pending.len()
    }
}

/// One end of an in-process, ordered, reliable byte stream.
#[derive(Debug)]
pub struct LinkEnd {
    tx: Sender<Vec<u8>>,
    rx: Receiver<Vec<u8>>,
    buffer: FrameBuffer,
    /// Frames are written in chunks of at most this many bytes so that the
    /// receiver always exercises reassembly.
    chunk: usize,
}

/// Creates the two connected ends of an in-process duplex link.
pub fn duplex() -> (LinkEnd, LinkEnd) {
    let (a_tx, b_rx) = channel();
    let (b_tx, a_rx) = channel();
    let end = |tx, rx| LinkEnd {
        tx,
        rx,
        buffer: FrameBuffer::default(),
        chunk: 16,
    };
    (end(a_tx, a_rx), end(b_tx, b_rx))
}

impl LinkEnd {
    /// Queues `msg` for the peer. Sending to a dropped peer is silently
    /// discarded, like writing into a closed in-memory pipe.
    pub fn send(&self, msg: &E2Message) {
        for piece in encode(msg).chunks(self.chunk) {
            let _ = self.tx.send(piece.to_vec());
        }
    }

    /// Writes raw bytes to the stream, e.g. a hand-built or damaged frame.
    pub fn send_raw(&self, bytes: &[u8]) {
        let _ = self.tx.send(bytes.to_vec());
    }

    /// Moves everything the peer has sent so far into the reassembly buffer
    /// and returns the next complete frame, if any.
    pub fn try_recv_raw(&mut self) -> Option<RawFrame> {
        loop {
            match self.rx.try_recv() {
                Ok(bytes) => self.buffer.push(&bytes),
                Err(TryRecvError::Empty | TryRecvError::Disconnected) => break,
            }
        }
        self.buffer.next_raw()
    }

    pub fn try_recv(&mut self) -> Option<Result<E2Message, ProtocolError>> {
        self.try_recv_raw().map(|raw| raw.parse())
    }
}

/// Writes one frame to a blocking byte stream.
pub fn write_frame<W: Write>(w: &mut W, msg: &E2Message) -> io::Result<()> {
    w.write_all(&encode(msg))?;
    w.flush()
}

/// Reads exactly one frame from a blocking byte stream.
pub fn read_frame<R: Read>(r: &mut R) -> crate::Result<E2Message> {
    let mut header = [0u8; HEADER_LEN];
    read_exact(r, &mut header)?;
    let len = u32::from_be_bytes(header[..4].try_into().expect("4 bytes")) as usize;
    let mut frame = header.to_vec();
    frame.resize(HEADER_LEN + len, 0);
    read_exact(r, &mut frame[HEADER_LEN..])?;
    Ok(RawFrame::split(&frame)?.parse()?)
}

fn read_exact<R: Read>(r: &mut R, buf: &mut [u8]) -> crate::Result<()> {
    r.read_exact(buf).map_err(|e| {
        if e.kind() == io::ErrorKind::UnexpectedEof {
            ProtocolError::Truncated {
                needed: buf.len(),
                available: 0,
            }
            .into()
        } else {
            crate::Error::io("<e2 stream>", e)
        }
    })
}
