//! Session-scoped, ordered message channel between C1, C2 and Bob.
//!
//! Frame layout (all integers big-endian):
//!
//! ```text
//! "SKNN" | version (1) | msg_type (1) | session_id (16) | payload_len (4) | payload
//! ```
//!
//! Payload vectors carry a 4-byte element count; big integers use the
//! length-prefixed encoding from [`crate::codec`].

use std::fmt;
use std::io::{Read, Write};
use std::net::{TcpStream, ToSocketAddrs};
use std::sync::mpsc::{channel, Receiver, Sender};

use num_bigint::BigUint;
use rand::RngCore;
use thiserror::Error;

use crate::codec::{put_biguint, put_bytes, put_u32, Reader};
use crate::paillier::Ciphertext;

pub const MAGIC: &[u8; 4] = b"SKNN";
pub const PROTOCOL_VERSION: u8 = 0x01;
pub const HEADER_LEN: usize = 4 + 1 + 1 + 16 + 4;
pub const DEFAULT_MAX_FRAME: usize = 16 * 1024 * 1024;

#[derive(Debug, Error)]
pub enum TransportError {
    #[error("bad frame magic")]
    BadMagic,
    #[error("protocol version mismatch: peer sent {0:#04x}")]
    VersionMismatch(u8),
    #[error("frame of {len} bytes exceeds maximum {max}")]
    FrameTooLarge { len: usize, max: usize },
    #[error("unknown message type {0:#04x}")]
    UnknownType(u8),
    #[error("frame carries session {got}, expected {expected}")]
    SessionMismatch { expected: SessionId, got: SessionId },
    #[error("public key fingerprint mismatch")]
    FingerprintMismatch,
    #[error("handshake failed: {0}")]
    Handshake(String),
    #[error("malformed payload: {0}")]
    Malformed(String),
    #[error("session closed")]
    Closed,
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SessionId(pub [u8; 16]);

impl SessionId {
    pub fn random<R: RngCore>(rng: &mut R) -> Self {
        let mut id = [0u8; 16];
        rng.fill_bytes(&mut id);
        Self(id)
    }

    /// Id of the `i`-th extra C1-C2 session belonging to this query; `0`
    /// returns the id itself.
    pub fn derive(&self, i: usize) -> Self {
        if i == 0 {
            return *self;
        }
        let mut b = self.0;
        b[0] ^= 0x80;
        b[14] ^= (i >> 8) as u8;
        b[15] = b[15].wrapping_add(i as u8);
        Self(b)
    }
}

impl fmt::Display for SessionId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&hex::encode(self.0))
    }
}

impl fmt::Debug for SessionId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "SessionId({self})")
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
#[repr(u8)]
pub enum Role {
    C1 = 1,
    C2 = 2,
    Bob = 3,
}

impl Role {
    fn from_u8(v: u8) -> Option<Self> {
        match v {
            1 => Some(Role::C1),
            2 => Some(Role::C2),
            3 => Some(Role::Bob),
            _ => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[repr(u8)]
pub enum ProtocolKind {
    Basic = 1,
    Full = 2,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[repr(u8)]
pub enum MsgType {
    SmReq = 0x01,
    SmResp = 0x02,
    SbdLsbReq = 0x03,
    SbdLsbResp = 0x04,
    SminReq = 0x05,
    SminResp = 0x06,
    Beta = 0x07,
    UVec = 0x08,
    DistList = 0x09,
    IndexList = 0x0A,
    Gamma = 0x0B,
    GammaPrime = 0x0C,
    Query = 0x0D,
    Blinds = 0x0E,
    Result = 0x0F,
    SmBatchReq = 0x10,
    SmBatchResp = 0x11,
    Error = 0x12,
    Hello = 0x13,
}

impl MsgType {
    pub fn from_u8(v: u8) -> Option<Self> {
        use MsgType::*;
        Some(match v {
            0x01 => SmReq,
            0x02 => SmResp,
            0x03 => SbdLsbReq,
            0x04 => SbdLsbResp,
            0x05 => SminReq,
            0x06 => SminResp,
            0x07 => Beta,
            0x08 => UVec,
            0x09 => DistList,
            0x0A => IndexList,
            0x0B => Gamma,
            0x0C => GammaPrime,
            0x0D => Query,
            0x0E => Blinds,
            0x0F => Result,
            0x10 => SmBatchReq,
            0x11 => SmBatchResp,
            0x12 => Error,
            0x13 => Hello,
            _ => return None,
        })
    }
}

pub type CiphertextMatrix = Vec<Vec<Ciphertext>>;
pub type PlainMatrix = Vec<Vec<BigUint>>;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Message {
    SmReq { a: Ciphertext, b: Ciphertext },
    SmResp(Ciphertext),
    SbdLsbReq(Ciphertext),
    SbdLsbResp(Ciphertext),
    SminReq { gamma: Vec<Ciphertext>, l: Vec<Ciphertext> },
    SminResp { m: Vec<Ciphertext>, alpha: Ciphertext },
    Beta(Vec<Ciphertext>),
    UVec(Vec<Ciphertext>),
    /// `k` precedes the `(row index, E(d_i))` pairs so C2 knows how many to select.
    DistList { k: u32, entries: Vec<(u32, Ciphertext)> },
    IndexList(Vec<u32>),
    Gamma(CiphertextMatrix),
    GammaPrime(PlainMatrix),
    Query { enc_query: Vec<Ciphertext>, k: u32, protocol: ProtocolKind },
    Blinds(PlainMatrix),
    Result(PlainMatrix),
    SmBatchReq(Vec<(Ciphertext, Ciphertext)>),
    SmBatchResp(Vec<Ciphertext>),
    Error { code: u32, text: String },
    Hello { role: Role, fingerprint: [u8; 32] },
}

impl Message {
    pub fn msg_type(&self) -> MsgType {
        match self {
            Message::SmReq { .. } => MsgType::SmReq,
            Message::SmResp(_) => MsgType::SmResp,
            Message::SbdLsbReq(_) => MsgType::SbdLsbReq,
            Message::SbdLsbResp(_) => MsgType::SbdLsbResp,
            Message::SminReq { .. } => MsgType::SminReq,
            Message::SminResp { .. } => MsgType::SminResp,
            Message::Beta(_) => MsgType::Beta,
            Message::UVec(_) => MsgType::UVec,
            Message::DistList { .. } => MsgType::DistList,
            Message::IndexList(_) => MsgType::IndexList,
            Message::Gamma(_) => MsgType::Gamma,
            Message::GammaPrime(_) => MsgType::GammaPrime,
            Message::Query { .. } => MsgType::Query,
            Message::Blinds(_) => MsgType::Blinds,
            Message::Result(_) => MsgType::Result,
            Message::SmBatchReq(_) => MsgType::SmBatchReq,
            Message::SmBatchResp(_) => MsgType::SmBatchResp,
            Message::Error { .. } => MsgType::Error,
            Message::Hello { .. } => MsgType::Hello,
        }
    }

    pub fn name(&self) -> String {
        format!("{:?}", self.msg_type())
    }

    pub fn encode_payload(&self) -> Vec<u8> {
        let mut buf = Vec::new();
        match self {
            Message::SmReq { a, b } => {
                put_ct(&mut buf, a);
                put_ct(&mut buf, b);
            }
            Message::SmResp(c)
            | Message::SbdLsbReq(c)
            | Message::SbdLsbResp(c) => put_ct(&mut buf, c),
            Message::SminReq { gamma, l } => {
                put_ct_vec(&mut buf, gamma);
                put_ct_vec(&mut buf, l);
            }
            Message::SminResp { m, alpha } => {
                put_ct_vec(&mut buf, m);
                put_ct(&mut buf, alpha);
            }
            Message::Beta(v) | Message::UVec(v) | Message::SmBatchResp(v) => {
                put_ct_vec(&mut buf, v)
            }
            Message::DistList { k, entries } => {
                put_u32(&mut buf, *k);
                put_u32(&mut buf, entries.len() as u32);
                for (i, c) in entries {
                    put_u32(&mut buf, *i);
                    put_ct(&mut buf, c);
                }
            }
            Message::IndexList(idx) => {
                put_u32(&mut buf, idx.len() as u32);
                for i in idx {
                    put_u32(&mut buf, *i);
                }
            }
            Message::Gamma(rows) => {
                put_u32(&mut buf, rows.len() as u32);
                for row in rows {
                    put_ct_vec(&mut buf, row);
                }
            }
            Message::GammaPrime(rows) | Message::Blinds(rows) | Message::Result(rows) => {
                put_u32(&mut buf, rows.len() as u32);
                for row in rows {
                    put_u32(&mut buf, row.len() as u32);
                    for v in row {
                        put_biguint(&mut buf, v);
                    }
                }
            }
            Message::Query { enc_query, k, protocol } => {
                put_ct_vec(&mut buf, enc_query);
                put_u32(&mut buf, *k);
                buf.push(*protocol as u8);
            }
            Message::SmBatchReq(pairs) => {
                put_u32(&mut buf, pairs.len() as u32);
                for (a, b) in pairs {
                    put_ct(&mut buf, a);
                    put_ct(&mut buf, b);
                }
            }
            Message::Error { code, text } => {
                put_u32(&mut buf, *code);
                put_bytes(&mut buf, text.as_bytes());
            }
            Message::Hello { role, fingerprint } => {
                buf.push(*role as u8);
                buf.extend_from_slice(fingerprint);
            }
        }
        buf
    }

    pub fn decode_payload(msg_type: MsgType, payload: &[u8]) -> Result<Self, TransportError> {
        let mut r = Reader::new(payload);
        let msg = decode_body(msg_type, &mut r).map_err(malformed)?;
        r.finish().map_err(malformed)?;
        Ok(msg)
    }
}

fn malformed(e: crate::error::Error) -> TransportError {
    TransportError::Malformed(e.to_string())
}

fn put_ct(buf: &mut Vec<u8>, c: &Ciphertext) {
    put_biguint(buf, c.value());
}

fn put_ct_vec(buf: &mut Vec<u8>, v: &[Ciphertext]) {
    put_u32(buf, v.len() as u32);
    for c in v {
        put_ct(buf, c);
    }
}

fn get_ct(r: &mut Reader<'_>) -> crate::error::Result<Ciphertext> {
    Ok(Ciphertext::from_raw(r.biguint()?))
}

fn get_ct_vec(r: &mut Reader<'_>) -> crate::error::Result<Vec<Ciphertext>> {
    let n = r.count(4)?;
    (0..n).map(|_| get_ct(r)).collect()
}

fn get_plain_matrix(r: &mut Reader<'_>) -> crate::error::Result<PlainMatrix> {
    let rows = r.count(4)?;
    (0..rows)
        .map(|_| {
            let cols = r.count(4)?;
            (0..cols).map(|_| r.biguint()).collect()
        })
        .collect()
}

fn decode_body(t: MsgType, r: &mut Reader<'_>) -> crate::error::Result<Message> {
    use crate::error::Error;
    Ok(match t {
        MsgType::SmReq => Message::SmReq { a: get_ct(r)?, b: get_ct(r)? },
        MsgType::SmResp => Message::SmResp(get_ct(r)?),
        MsgType::SbdLsbReq => Message::SbdLsbReq(get_ct(r)?),
        MsgType::SbdLsbResp => Message::SbdLsbResp(get_ct(r)?),
        MsgType::SminReq => Message::SminReq { gamma: get_ct_vec(r)?, l: get_ct_vec(r)? },
        MsgType::SminResp => Message::SminResp { m: get_ct_vec(r)?, alpha: get_ct(r)? },
        MsgType::Beta => Message::Beta(get_ct_vec(r)?),
        MsgType::UVec => Message::UVec(get_ct_vec(r)?),
        MsgType::SmBatchResp => Message::SmBatchResp(get_ct_vec(r)?),
        MsgType::DistList => {
            let k = r.u32()?;
            let n = r.count(8)?;
            let entries = (0..n)
                .map(|_| Ok((r.u32()?, get_ct(r)?)))
                .collect::<crate::error::Result<_>>()?;
            Message::DistList { k, entries }
        }
        MsgType::IndexList => {
            let n = r.count(4)?;
            Message::IndexList((0..n).map(|_| r.u32()).collect::<crate::error::Result<_>>()?)
        }
        MsgType::Gamma => {
            let rows = r.count(4)?;
            Message::Gamma((0..rows).map(|_| get_ct_vec(r)).collect::<crate::error::Result<_>>()?)
        }
        MsgType::GammaPrime => Message::GammaPrime(get_plain_matrix(r)?),
        MsgType::Blinds => Message::Blinds(get_plain_matrix(r)?),
        MsgType::Result => Message::Result(get_plain_matrix(r)?),
        MsgType::Query => {
            let enc_query = get_ct_vec(r)?;
            let k = r.u32()?;
            let protocol = match r.u8()? {
                1 => ProtocolKind::Basic,
                2 => ProtocolKind::Full,
                p => return Err(Error::Decode(format!("unknown protocol id {p}"))),
            };
            Message::Query { enc_query, k, protocol }
        }
        MsgType::SmBatchReq => {
            let n = r.count(8)?;
            Message::SmBatchReq(
                (0..n)
                    .map(|_| Ok((get_ct(r)?, get_ct(r)?)))
                    .collect::<crate::error::Result<_>>()?,
            )
        }
        MsgType::Error => {
            let code = r.u32()?;
            let text = String::from_utf8(r.bytes()?.to_vec())
                .map_err(|_| Error::Decode("error text is not UTF-8".into()))?;
            Message::Error { code, text }
        }
        MsgType::Hello => {
            let role = Role::from_u8(r.u8()?)
                .ok_or_else(|| Error::Decode("unknown role".into()))?;
            let mut fingerprint = [0u8; 32];
            fingerprint.copy_from_slice(r.take(32)?);
            Message::Hello { role, fingerprint }
        }
    })
}

/// A decoded frame.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Frame {
    pub msg_type: u8,
    pub session_id: SessionId,
    pub payload: Vec<u8>,
}

impl Frame {
    pub fn new(session_id: SessionId, msg: &Message) -> Self {
        Self {
            msg_type: msg.msg_type() as u8,
            session_id,
            payload: msg.encode_payload(),
        }
    }

    pub fn encode(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(HEADER_LEN + self.payload.len());
        out.extend_from_slice(MAGIC);
        out.push(PROTOCOL_VERSION);
        out.push(self.msg_type);
        out.extend_from_slice(&self.session_id.0);
        out.extend_from_slice(&(self.payload.len() as u32).to_be_bytes());
        out.extend_from_slice(&self.payload);
        out
    }

    /// Validates a frame header and returns the declared payload length.
    pub fn check_header(header: &[u8; HEADER_LEN], max_frame: usize) -> Result<usize, TransportError> {
        if &header[..4] != MAGIC {
            return Err(TransportError::BadMagic);
        }
        if header[4] != PROTOCOL_VERSION {
            return Err(TransportError::VersionMismatch(header[4]));
        }
        let len = u32::from_be_bytes([header[22], header[23], header[24], header[25]]) as usize;
        if HEADER_LEN + len > max_frame {
            return Err(TransportError::FrameTooLarge { len: HEADER_LEN + len, max: max_frame });
        }
        Ok(len)
    }

    pub fn decode(bytes: &[u8], max_frame: usize) -> Result<Self, TransportError> {
        if bytes.len() < HEADER_LEN {
            return Err(TransportError::Malformed("truncated header".into()));
        }
        let header: &[u8; HEADER_LEN] = bytes[..HEADER_LEN].try_into().unwrap();
        let len = Self::check_header(header, max_frame)?;
        if bytes.len() != HEADER_LEN + len {
            return Err(TransportError::Malformed(format!(
                "payload length {len} but frame has {} bytes",
                bytes.len() - HEADER_LEN
            )));
        }
        let mut sid = [0u8; 16];
        sid.copy_from_slice(&bytes[6..22]);
        Ok(Self {
            msg_type: bytes[5],
            session_id: SessionId(sid),
            payload: bytes[HEADER_LEN..].to_vec(),
        })
    }

    pub fn message(&self) -> Result<Message, TransportError> {
        let t = MsgType::from_u8(self.msg_type).ok_or(TransportError::UnknownType(self.msg_type))?;
        Message::decode_payload(t, &self.payload)
    }
}

/// Byte-frame carrier under a [`PartyEndpoint`].
pub trait Link: Send {
    fn send_frame(&mut self, frame: Vec<u8>) -> Result<(), TransportError>;
    fn recv_frame(&mut self, max_frame: usize) -> Result<Vec<u8>, TransportError>;
}

pub struct InProcessLink {
    tx: Sender<Vec<u8>>,
    rx: Receiver<Vec<u8>>,
}

impl InProcessLink {
    pub fn pair() -> (Self, Self) {
        let (tx_a, rx_b) = channel();
        let (tx_b, rx_a) = channel();
        (Self { tx: tx_a, rx: rx_a }, Self { tx: tx_b, rx: rx_b })
    }
}

impl Link for InProcessLink {
    fn send_frame(&mut self, frame: Vec<u8>) -> Result<(), TransportError> {
        self.tx.send(frame).map_err(|_| TransportError::Closed)
    }

    fn recv_frame(&mut self, max_frame: usize) -> Result<Vec<u8>, TransportError> {
        let frame = self.rx.recv().map_err(|_| TransportError::Closed)?;
        if frame.len() > max_frame {
            return Err(TransportError::FrameTooLarge { len: frame.len(), max: max_frame });
        }
        Ok(frame)
    }
}

pub struct TcpLink {
    stream: TcpStream,
}

impl TcpLink {
    pub fn new(stream: TcpStream) -> Self {
        let _ = stream.set_nodelay(true);
        Self { stream }
    }
}

impl Link for TcpLink {
    fn send_frame(&mut self, frame: Vec<u8>) -> Result<(), TransportError> {
        self.stream.write_all(&frame)?;
        self.stream.flush()?;
        Ok(())
    }

    fn recv_frame(&mut self, max_frame: usize) -> Result<Vec<u8>, TransportError> {
        let mut header = [0u8; HEADER_LEN];
        match self.stream.read_exact(&mut header) {
            Ok(()) => {}
            Err(e) if e.kind() == std::io::ErrorKind::UnexpectedEof => {
                return Err(TransportError::Closed)
            }
            Err(e) => return Err(e.into()),
        }
        // Length is validated before the payload buffer is allocated.
        let len = Frame::check_header(&header, max_frame)?;
        let mut frame = vec![0u8; HEADER_LEN + len];
        frame[..HEADER_LEN].copy_from_slice(&header);
        self.stream.read_exact(&mut frame[HEADER_LEN..])?;
        Ok(frame)
    }
}

/// One side of a protocol session.
pub struct PartyEndpoint {
    session_id: SessionId,
    role: Role,
    peer_role: Option<Role>,
    link: Box<dyn Link>,
    max_frame: usize,
    aborted: bool,
}

impl PartyEndpoint {
    pub fn new(session_id: SessionId, role: Role, link: Box<dyn Link>) -> Self {
        Self {
            session_id,
            role,
            peer_role: None,
            link,
            max_frame: DEFAULT_MAX_FRAME,
            aborted: false,
        }
    }

    pub fn with_max_frame(mut self, max_frame: usize) -> Self {
        self.max_frame = max_frame;
        self
    }

    pub fn session_id(&self) -> SessionId {
        self.session_id
    }

    pub fn role(&self) -> Role {
        self.role
    }

    pub fn peer_role(&self) -> Option<Role> {
        self.peer_role
    }

    pub fn send(&mut self, msg: &Message) -> Result<(), TransportError> {
        if self.aborted {
            return Err(TransportError::Closed);
        }
        let frame = Frame::new(self.session_id, msg).encode();
        if frame.len() > self.max_frame {
            return Err(TransportError::FrameTooLarge { len: frame.len(), max: self.max_frame });
        }
        self.link.send_frame(frame)
    }

    /// Receives the next message. Any framing or decoding error aborts the
    /// session; later calls return [`TransportError::Closed`].
    pub fn recv(&mut self) -> Result<Message, TransportError> {
        if self.aborted {
            return Err(TransportError::Closed);
        }
        let result = self.recv_inner();
        if result.is_err() {
            self.aborted = true;
        }
        result
    }

    fn recv_inner(&mut self) -> Result<Message, TransportError> {
        let bytes = self.link.recv_frame(self.max_frame)?;
        let frame = Frame::decode(&bytes, self.max_frame)?;
        if frame.session_id != self.session_id {
            return Err(TransportError::SessionMismatch {
                expected: self.session_id,
                got: frame.session_id,
            });
        }
        frame.message()
    }

    pub fn send_hello(&mut self, fingerprint: &[u8; 32]) -> Result<(), TransportError> {
        self.send(&Message::Hello { role: self.role, fingerprint: *fingerprint })
    }

    pub fn finish_handshake(&mut self, fingerprint: &[u8; 32]) -> Result<Role, TransportError> {
        match self.recv()? {
            Message::Hello { role, fingerprint: theirs } => {
                if &theirs != fingerprint {
                    self.aborted = true;
                    return Err(TransportError::FingerprintMismatch);
                }
                self.peer_role = Some(role);
                Ok(role)
            }
            Message::Error { text, .. } => Err(TransportError::Handshake(text)),
            other => Err(TransportError::Handshake(format!("expected HELLO, got {}", other.name()))),
        }
    }

    /// Client-side handshake: announce, then verify the peer's announcement.
    pub fn handshake(&mut self, fingerprint: &[u8; 32]) -> Result<Role, TransportError> {
        self.send_hello(fingerprint)?;
        self.finish_handshake(fingerprint)
    }
}

/// Two connected endpoints without a handshake.
pub fn raw_in_process_pair(session_id: SessionId, a: Role, b: Role) -> (PartyEndpoint, PartyEndpoint) {
    let (la, lb) = InProcessLink::pair();
    (
        PartyEndpoint::new(session_id, a, Box::new(la)),
        PartyEndpoint::new(session_id, b, Box::new(lb)),
    )
}

/// Two connected endpoints that have completed the handshake on `fingerprint`.
pub fn in_process_pair(
    session_id: SessionId,
    a: Role,
    b: Role,
    fingerprint: &[u8; 32],
) -> Result<(PartyEndpoint, PartyEndpoint), TransportError> {
    let (mut ea, mut eb) = raw_in_process_pair(session_id, a, b);
    ea.send_hello(fingerprint)?;
    eb.send_hello(fingerprint)?;
    ea.finish_handshake(fingerprint)?;
    eb.finish_handshake(fingerprint)?;
    Ok((ea, eb))
}

pub fn connect_tcp<A: ToSocketAddrs>(
    addr: A,
    session_id: SessionId,
    role: Role,
    fingerprint: &[u8; 32],
    max_frame: usize,
) -> Result<PartyEndpoint, TransportError> {
    let stream = TcpStream::connect(addr)?;
    let mut ep = PartyEndpoint::new(session_id, role, Box::new(TcpLink::new(stream)))
        .with_max_frame(max_frame);
    ep.handshake(fingerprint)?;
    Ok(ep)
}

/// Server-side handshake on an accepted connection. The session id is
/// taken from the client's HELLO frame.
pub fn accept_tcp(
    stream: TcpStream,
    role: Role,
    fingerprint: &[u8; 32],
    max_frame: usize,
) -> Result<PartyEndpoint, TransportError> {
    let mut link = TcpLink::new(stream);
    let bytes = link.recv_frame(max_frame)?;
    let frame = Frame::decode(&bytes, max_frame)?;
    let msg = frame.message()?;
    let mut ep = PartyEndpoint::new(frame.session_id, role, Box::new(link)).with_max_frame(max_frame);
    match msg {
        Message::Hello { role: peer, fingerprint: theirs } => {
            if &theirs != fingerprint {
                let _ = ep.send(&Message::Error {
                    code: ERR_FINGERPRINT,
                    text: "public key fingerprint mismatch".into(),
                });
                return Err(TransportError::FingerprintMismatch);
            }
            ep.peer_role = Some(peer);
            ep.send_hello(fingerprint)?;
            Ok(ep)
        }
        other => Err(TransportError::Handshake(format!("expected HELLO, got {}", other.name()))),
    }
}

/// ERROR codes carried in [`Message::Error`].
pub const ERR_UNEXPECTED: u32 = 1;
pub const ERR_DECRYPT: u32 = 2;
pub const ERR_FAULT: u32 = 3;
pub const ERR_FINGERPRINT: u32 = 4;
pub const ERR_NO_RECIPIENT: u32 = 5;
pub const ERR_PRECONDITION: u32 = 6;

#[cfg(test)]
mod tests {
    use super::*;
    use crate::test_keys::keypair_512;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;
    use std::net::TcpListener;

    fn sid(b: u8) -> SessionId {
        SessionId([b; 16])
    }

    #[test]
    fn derived_ids_are_distinct() {
        let base = sid(7);
        assert_eq!(base.derive(0), base);
        let ids: std::collections::HashSet<_> = (0..600).map(|i| base.derive(i)).collect();
        assert_eq!(ids.len(), 600);
    }

    #[test]
    fn loopback_delivers_ciphertext() {
        let (pk, sk) = keypair_512();
        let fp = pk.fingerprint();
        let (mut a, mut b) = in_process_pair(sid(1), Role::C1, Role::C2, &fp).unwrap();
        assert_eq!(a.peer_role(), Some(Role::C2));
        let c = pk.encrypt_u64(5, &mut ChaCha20Rng::seed_from_u64(1)).unwrap();
        a.send(&Message::SmResp(c)).unwrap();
        match b.recv().unwrap() {
            Message::SmResp(got) => assert_eq!(sk.decrypt(&got).unwrap(), 5u32.into()),
            m => panic!("{m:?}"),
        }
    }

    #[test]
    fn in_process_fingerprint_mismatch() {
        let (mut a, mut b) = raw_in_process_pair(sid(2), Role::C1, Role::C2);
        a.send_hello(&[1; 32]).unwrap();
        b.send_hello(&[2; 32]).unwrap();
        assert!(matches!(a.finish_handshake(&[1; 32]), Err(TransportError::FingerprintMismatch)));
    }

    #[test]
    fn sm_req_bytes_are_identical() {
        let (pk, _) = keypair_512();
        let mut rng = ChaCha20Rng::seed_from_u64(2);
        let fp = pk.fingerprint();
        let (mut a, mut b) = in_process_pair(sid(3), Role::C1, Role::C2, &fp).unwrap();
        let x = pk.encrypt_u64(1, &mut rng).unwrap();
        let y = pk.encrypt_u64(2, &mut rng).unwrap();
        a.send(&Message::SmReq { a: x.clone(), b: y.clone() }).unwrap();
        let got = b.recv().unwrap();
        assert_eq!(got, Message::SmReq { a: x.clone(), b: y.clone() });
        if let Message::SmReq { a: ga, b: gb } = got {
            assert_eq!(ga.to_bytes(), x.to_bytes());
            assert_eq!(gb.to_bytes(), y.to_bytes());
        }
    }

    #[test]
    fn wrong_magic_aborts_session() {
        let (mut la, lb) = InProcessLink::pair();
        let mut ep = PartyEndpoint::new(sid(4), Role::C2, Box::new(lb));
        let mut frame = Frame::new(sid(4), &Message::IndexList(vec![1])).encode();
        frame[0] = b'X';
        la.send_frame(frame).unwrap();
        la.send_frame(Frame::new(sid(4), &Message::IndexList(vec![2])).encode()).unwrap();
        assert!(matches!(ep.recv(), Err(TransportError::BadMagic)));
        assert!(matches!(ep.recv(), Err(TransportError::Closed)));
    }

    #[test]
    fn foreign_session_frames_are_rejected() {
        let (mut la, lb) = InProcessLink::pair();
        let mut ep = PartyEndpoint::new(sid(5), Role::C2, Box::new(lb));
        la.send_frame(Frame::new(sid(6), &Message::IndexList(vec![])).encode()).unwrap();
        assert!(matches!(ep.recv(), Err(TransportError::SessionMismatch { .. })));
    }

    #[test]
    fn batch_of_1000_ciphertexts() {
        let (pk, _) = keypair_512();
        let mut rng = ChaCha20Rng::seed_from_u64(3);
        let v: Vec<_> = (0..1000u64).map(|i| pk.encrypt_u64(i, &mut rng).unwrap()).collect();
        let frame = Frame::new(sid(7), &Message::SmBatchResp(v.clone())).encode();
        let decoded = Frame::decode(&frame, DEFAULT_MAX_FRAME).unwrap().message().unwrap();
        match decoded {
            Message::SmBatchResp(got) => {
                assert_eq!(got.len(), 1000);
                assert_eq!(got, v);
            }
            m => panic!("{m:?}"),
        }
    }

    #[test]
    fn oversized_frames_rejected_from_header() {
        let mut header = [0u8; HEADER_LEN];
        header[..4].copy_from_slice(MAGIC);
        header[4] = PROTOCOL_VERSION;
        header[22..26].copy_from_slice(&(DEFAULT_MAX_FRAME as u32).to_be_bytes());
        assert!(matches!(
            Frame::check_header(&header, DEFAULT_MAX_FRAME),
            Err(TransportError::FrameTooLarge { .. })
        ));
        header[4] = 0x02;
        assert!(matches!(
            Frame::check_header(&header, DEFAULT_MAX_FRAME),
            Err(TransportError::VersionMismatch(2))
        ));
    }

    #[test]
    fn tcp_handshake_and_version_mismatch() {
        let fp = keypair_512().0.fingerprint();
        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let addr = listener.local_addr().unwrap();
        let server = std::thread::spawn(move || {
            let (s, _) = listener.accept().unwrap();
            let mut ep = accept_tcp(s, Role::C2, &fp, DEFAULT_MAX_FRAME).unwrap();
            let msg = ep.recv().unwrap();
            ep.send(&msg).unwrap();
            let (s, _) = listener.accept().unwrap();
            accept_tcp(s, Role::C2, &fp, DEFAULT_MAX_FRAME).map(|_| ())
        });
        let mut ep = connect_tcp(addr, sid(8), Role::C1, &fp, DEFAULT_MAX_FRAME).unwrap();
        assert_eq!(ep.peer_role(), Some(Role::C2));
        ep.send(&Message::IndexList(vec![4, 5])).unwrap();
        assert_eq!(ep.recv().unwrap(), Message::IndexList(vec![4, 5]));

        let mut raw = TcpStream::connect(addr).unwrap();
        let mut frame = Frame::new(sid(9), &Message::Hello { role: Role::C1, fingerprint: fp }).encode();
        frame[4] = 0x02;
        raw.write_all(&frame).unwrap();
        let result = server.join().unwrap();
        assert!(matches!(result, Err(TransportError::VersionMismatch(2))), "{result:?}");
    }

    #[test]
    fn tcp_fingerprint_mismatch() {
        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let addr = listener.local_addr().unwrap();
        let server = std::thread::spawn(move || {
            let (s, _) = listener.accept().unwrap();
            accept_tcp(s, Role::C2, &[1; 32], DEFAULT_MAX_FRAME).map(|_| ())
        });
        let client = connect_tcp(addr, sid(10), Role::C1, &[2; 32], DEFAULT_MAX_FRAME);
        assert!(client.is_err());
        assert!(matches!(server.join().unwrap(), Err(TransportError::FingerprintMismatch)));
    }

    #[test]
    fn interleaved_sessions_keep_order() {
        let fp = [7u8; 32];
        let mut receivers = Vec::new();
        let mut senders = Vec::new();
        for s in 0..4u8 {
            let (a, b) = in_process_pair(sid(20 + s), Role::C1, Role::C2, &fp).unwrap();
            senders.push(a);
            receivers.push(b);
        }
        let handles: Vec<_> = receivers
            .into_iter()
            .map(|mut rx| {
                std::thread::spawn(move || {
                    for expected in 0..2500u32 {
                        match rx.recv().unwrap() {
                            Message::IndexList(v) => assert_eq!(v, vec![expected]),
                            m => panic!("{m:?}"),
                        }
                    }
                })
            })
            .collect();
        // Round-robin across the four sessions: 10,000 messages total.
        for seq in 0..2500u32 {
            for tx in senders.iter_mut() {
                tx.send(&Message::IndexList(vec![seq])).unwrap();
            }
        }
        for h in handles {
            h.join().unwrap();
        }
    }

    fn arb_ct() -> impl Strategy<Value = Ciphertext> {
        proptest::collection::vec(any::<u8>(), 0..80)
            .prop_map(|b| Ciphertext::from_raw(BigUint::from_bytes_be(&b)))
    }

    fn arb_plain_matrix() -> impl Strategy<Value = PlainMatrix> {
        proptest::collection::vec(
            proptest::collection::vec(any::<u64>().prop_map(BigUint::from), 0..4),
            0..4,
        )
    }

    fn arb_message() -> impl Strategy<Value = Message> {
        let cts = || proptest::collection::vec(arb_ct(), 0..6);
        prop_oneof![
            (arb_ct(), arb_ct()).prop_map(|(a, b)| Message::SmReq { a, b }),
            arb_ct().prop_map(Message::SmResp),
            arb_ct().prop_map(Message::SbdLsbReq),
            arb_ct().prop_map(Message::SbdLsbResp),
            (cts(), cts()).prop_map(|(gamma, l)| Message::SminReq { gamma, l }),
            (cts(), arb_ct()).prop_map(|(m, alpha)| Message::SminResp { m, alpha }),
            cts().prop_map(Message::Beta),
            cts().prop_map(Message::UVec),
            (any::<u32>(), proptest::collection::vec((any::<u32>(), arb_ct()), 0..5))
                .prop_map(|(k, entries)| Message::DistList { k, entries }),
            proptest::collection::vec(any::<u32>(), 0..8).prop_map(Message::IndexList),
            proptest::collection::vec(cts(), 0..3).prop_map(Message::Gamma),
            arb_plain_matrix().prop_map(Message::GammaPrime),
            (cts(), any::<u32>(), any::<bool>()).prop_map(|(enc_query, k, full)| Message::Query {
                enc_query,
                k,
                protocol: if full { ProtocolKind::Full } else { ProtocolKind::Basic },
            }),
            arb_plain_matrix().prop_map(Message::Blinds),
            arb_plain_matrix().prop_map(Message::Result),
            proptest::collection::vec((arb_ct(), arb_ct()), 0..4).prop_map(Message::SmBatchReq),
            cts().prop_map(Message::SmBatchResp),
            (any::<u32>(), ".{0,20}").prop_map(|(code, text)| Message::Error { code, text }),
            (any::<[u8; 32]>(), 1u8..=3).prop_map(|(fingerprint, r)| Message::Hello {
                role: Role::from_u8(r).unwrap(),
                fingerprint,
            }),
        ]
    }

    proptest! {
        #[test]
        fn frames_round_trip(msg in arb_message(), id in any::<[u8; 16]>()) {
            let frame = Frame::new(SessionId(id), &msg);
            let bytes = frame.encode();
            let decoded = Frame::decode(&bytes, DEFAULT_MAX_FRAME).unwrap();
            prop_assert_eq!(&decoded, &frame);
            prop_assert_eq!(decoded.encode(), bytes);
            prop_assert_eq!(decoded.message().unwrap(), msg);
        }

        #[test]
        fn garbage_never_panics(bytes in proptest::collection::vec(any::<u8>(), 0..120), t in 0u8..0x20) {
            if let Some(t) = MsgType::from_u8(t) {
                let _ = Message::decode_payload(t, &bytes);
            }
            let _ = Frame::decode(&bytes, DEFAULT_MAX_FRAME);
        }
    }
}
