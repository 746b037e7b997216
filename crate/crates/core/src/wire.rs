//! Debug Adapter Protocol base framing.
//!
//! Every message travels as `Content-Length: <n>\r\n\r\n` followed by exactly
//! `n` bytes of UTF-8 JSON. [`encode`] produces that frame, [`FrameDecoder`]
//! reassembles frames from arbitrarily chunked input and [`SeqCounter`] hands
//! out the per-sender sequence numbers.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde_json::{Map, Value};

/// Upper bound on the header block. Anything longer without a blank line is
/// treated as garbage rather than buffered forever.
const MAX_HEADER_BYTES: usize = 16 * 1024;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum WireError {
    #[error("malformed header: {0:?}")]
    MalformedHeader(String),
    #[error("missing Content-Length header in {0:?}")]
    MissingContentLength(String),
    #[error("invalid message body: {0}")]
    InvalidBody(String),
    #[error("invalid message: {0}")]
    InvalidMessage(String),
    #[error("could not serialize message: {0}")]
    Encode(String),
    #[error("decoder is unusable after an earlier protocol error")]
    Poisoned,
}

/// The three message kinds of the base protocol.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MessageKind {
    Request,
    Response,
    Event,
}

impl MessageKind {
    pub fn as_str(self) -> &'static str {
        match self {
            MessageKind::Request => "request",
            MessageKind::Response => "response",
            MessageKind::Event => "event",
        }
    }
}

/// One protocol message.
///
/// `body`/`arguments` distinguish "absent" (`None`) from an explicit JSON
/// `null` so that decoding an encoded message yields the same value. Top-level
/// fields this crate does not know about are kept in `extra`.
#[derive(Debug, Clone, PartialEq)]
pub enum DapMessage {
    Request {
        seq: u64,
        command: String,
        arguments: Option<Value>,
        extra: Map<String, Value>,
    },
    Response {
        seq: u64,
        request_seq: u64,
        success: bool,
        command: String,
        message: Option<String>,
        body: Option<Value>,
        extra: Map<String, Value>,
    },
    Event {
        seq: u64,
        event: String,
        body: Option<Value>,
        extra: Map<String, Value>,
    },
}

impl DapMessage {
    pub fn request(seq: u64, command: impl Into<String>, arguments: Option<Value>) -> Self {
        DapMessage::Request {
            seq,
            command: command.into(),
            arguments,
            extra: Map::new(),
        }
    }

    pub fn response(
        seq: u64,
        request_seq: u64,
        command: impl Into<String>,
        success: bool,
        body: Option<Value>,
    ) -> Self {
        DapMessage::Response {
            seq,
            request_seq,
            success,
            command: command.into(),
            message: None,
            body,
            extra: Map::new(),
        }
    }

    pub fn error_response(
        seq: u64,
        request_seq: u64,
        command: impl Into<String>,
        message: impl Into<String>,
    ) -> Self {
        DapMessage::Response {
            seq,
            request_seq,
            success: false,
            command: command.into(),
            message: Some(message.into()),
            body: None,
            extra: Map::new(),
        }
    }

    pub fn event(seq: u64, event: impl Into<String>, body: Option<Value>) -> Self {
        DapMessage::Event {
            seq,
            event: event.into(),
            body,
            extra: Map::new(),
        }
    }

    pub fn kind(&self) -> MessageKind {
        match self {
            DapMessage::Request { .. } => MessageKind::Request,
            DapMessage::Response { .. } => MessageKind::Response,
            DapMessage::Event { .. } => MessageKind::Event,
        }
    }

    pub fn seq(&self) -> u64 {
        match self {
            DapMessage::Request { seq, .. }
            | DapMessage::Response { seq, .. }
            | DapMessage::Event { seq, .. } => *seq,
        }
    }

    /// Command name of a request or response.
    pub fn command(&self) -> Option<&str> {
        match self {
            DapMessage::Request { command, .. } | DapMessage::Response { command, .. } => {
                Some(command)
            }
            DapMessage::Event { .. } => None,
        }
    }

    pub fn event_name(&self) -> Option<&str> {
        match self {
            DapMessage::Event { event, .. } => Some(event),
            _ => None,
        }
    }

    /// `body` of responses and events, `arguments` of requests.
    pub fn payload(&self) -> Option<&Value> {
        match self {
            DapMessage::Request { arguments, .. } => arguments.as_ref(),
            DapMessage::Response { body, .. } | DapMessage::Event { body, .. } => body.as_ref(),
        }
    }

    pub fn is_success(&self) -> bool {
        matches!(self, DapMessage::Response { success: true, .. })
    }

    pub fn to_value(&self) -> Value {
        let mut map = Map::new();
        let (extra, kind) = match self {
            DapMessage::Request {
                seq,
                command,
                arguments,
                extra,
            } => {
                map.insert("seq".into(), Value::from(*seq));
                map.insert("command".into(), Value::from(command.as_str()));
                if let Some(arguments) = arguments {
                    map.insert("arguments".into(), arguments.clone());
                }
                (extra, MessageKind::Request)
            }
            DapMessage::Response {
                seq,
                request_seq,
                success,
                command,
                message,
                body,
                extra,
            } => {
                map.insert("seq".into(), Value::from(*seq));
                map.insert("request_seq".into(), Value::from(*request_seq));
                map.insert("success".into(), Value::from(*success));
                map.insert("command".into(), Value::from(command.as_str()));
                if let Some(message) = message {
                    map.insert("message".into(), Value::from(message.as_str()));
                }
                if let Some(body) = body {
                    map.insert("body".into(), body.clone());
                }
                (extra, MessageKind::Response)
            }
            DapMessage::Event {
                seq,
                event,
                body,
                extra,
            } => {
                map.insert("seq".into(), Value::from(*seq));
                map.insert("event".into(), Value::from(event.as_str()));
                if let Some(body) = body {
                    map.insert("body".into(), body.clone());
                }
                (extra, MessageKind::Event)
            }
        };
        map.insert("type".into(), Value::from(kind.as_str()));
        for (key, value) in extra {
            map.entry(key.clone()).or_insert_with(|| value.clone());
        }
        Value::Object(map)
    }

    pub fn from_value(value: Value) -> Result<Self, WireError> {
        let Value::Object(mut map) = value else {
            return Err(WireError::InvalidMessage("message is not a JSON object".into()));
        };
        let kind = match take_string(&mut map, "type")?.as_str() {
            "request" => MessageKind::Request,
            "response" => MessageKind::Response,
            "event" => MessageKind::Event,
            other => {
                return Err(WireError::InvalidMessage(format!(
                    "unknown message type {other:?}"
                )))
            }
        };
        let seq = take_positive(&mut map, "seq")?;
        let message = match kind {
            MessageKind::Request => {
                let command = take_string(&mut map, "command")?;
                let arguments = map.remove("arguments");
                DapMessage::Request {
                    seq,
                    command,
                    arguments,
                    extra: map,
                }
            }
            MessageKind::Response => {
                let request_seq = take_positive(&mut map, "request_seq")?;
                let success = match map.remove("success") {
                    Some(Value::Bool(b)) => b,
                    _ => return Err(WireError::InvalidMessage("response without boolean success".into())),
                };
                let command = take_string(&mut map, "command")?;
                let message = match map.remove("message") {
                    None => None,
                    Some(Value::String(s)) => Some(s),
                    Some(other) => {
                        // Keep non-string messages rather than rejecting the response.
                        map.insert("message".into(), other);
                        None
                    }
                };
                let body = map.remove("body");
                DapMessage::Response {
                    seq,
                    request_seq,
                    success,
                    command,
                    message,
                    body,
                    extra: map,
                }
            }
            MessageKind::Event => {
                let event = take_string(&mut map, "event")?;
                let body = map.remove("body");
                DapMessage::Event {
                    seq,
                    event,
                    body,
                    extra: map,
                }
            }
        };
        Ok(message)
    }
}

fn take_string(map: &mut Map<String, Value>, key: &str) -> Result<String, WireError> {
    match map.remove(key) {
        Some(Value::String(s)) => Ok(s),
        _ => Err(WireError::InvalidMessage(format!("missing string field {key:?}"))),
    }
}

fn take_positive(map: &mut Map<String, Value>, key: &str) -> Result<u64, WireError> {
    match map.remove(key).as_ref().and_then(Value::as_u64) {
        Some(n) if n > 0 => Ok(n),
        _ => Err(WireError::InvalidMessage(format!(
            "field {key:?} must be a positive integer"
        ))),
    }
}

/// Serializes `msg` into one complete frame.
pub fn encode(msg: &DapMessage) -> Result<Vec<u8>, WireError> {
    let body = serde_json::to_vec(&msg.to_value()).map_err(|e| WireError::Encode(e.to_string()))?;
    let mut out = Vec::with_capacity(body.len() + 32);
    out.extend_from_slice(b"Content-Length: ");
    out.extend_from_slice(body.len().to_string().as_bytes());
    out.extend_from_slice(b"\r\n\r\n");
    out.extend_from_slice(&body);
    Ok(out)
}

/// Incremental frame reassembly.
///
/// Bytes are pushed in whatever chunks the transport delivers; complete
/// messages come out in order. After the first protocol error the decoder
/// refuses further input.
#[derive(Debug, Default)]
pub struct FrameDecoder {
    buf: Vec<u8>,
    pending_body: Option<usize>,
    poisoned: bool,
}

impl FrameDecoder {
    pub fn new() -> Self {
        Self::default()
    }

    /// Number of buffered bytes not yet turned into a message.
    pub fn buffered(&self) -> usize {
        self.buf.len()
    }

    pub fn is_poisoned(&self) -> bool {
        self.poisoned
    }

    /// Appends `chunk` and returns every message completed by it.
    pub fn push(&mut self, chunk: &[u8]) -> Result<Vec<DapMessage>, WireError> {
        if self.poisoned {
            return Err(WireError::Poisoned);
        }
        self.buf.extend_from_slice(chunk);
        let mut out = Vec::new();
        loop {
            match self.next_message() {
                Ok(Some(msg)) => out.push(msg),
                Ok(None) => return Ok(out),
                Err(e) => {
                    self.poisoned = true;
                    return Err(e);
                }
            }
        }
    }

    fn next_message(&mut self) -> Result<Option<DapMessage>, WireError> {
        let len = match self.pending_body {
            Some(len) => len,
            None => {
                let Some(end) = find_blank_line(&self.buf) else {
                    if self.buf.len() > MAX_HEADER_BYTES {
                        return Err(WireError::MalformedHeader(lossy(&self.buf[..64])));
                    }
                    return Ok(None);
                };
                let len = parse_headers(&self.buf[..end])?;
                self.buf.drain(..end + 4);
                self.pending_body = Some(len);
                len
            }
        };
        if self.buf.len() < len {
            return Ok(None);
        }
        let body: Vec<u8> = self.buf.drain(..len).collect();
        self.pending_body = None;
        let value: Value =
            serde_json::from_slice(&body).map_err(|e| WireError::InvalidBody(e.to_string()))?;
        DapMessage::from_value(value).map(Some)
    }
}

fn find_blank_line(buf: &[u8]) -> Option<usize> {
    buf.windows(4).position(|w| w == b"\r\n\r\n")
}

fn lossy(bytes: &[u8]) -> String {
    String::from_utf8_lossy(bytes).into_owned()
}

fn parse_headers(block: &[u8]) -> Result<usize, WireError> {
    let text = core::str::from_utf8(block).map_err(|_| WireError::MalformedHeader(lossy(block)))?;
    let mut length = None;
    for line in text.split("\r\n") {
        let Some((name, value)) = line.split_once(':') else {
            return Err(WireError::MalformedHeader(line.to_string()));
        };
        if name.trim().eq_ignore_ascii_case("content-length") {
            let n = value
                .trim()
                .parse::<usize>()
                .map_err(|_| WireError::MalformedHeader(line.to_string()))?;
            length = Some(n);
        }
    }
    length.ok_or_else(|| WireError::MissingContentLength(text.to_string()))
}

/// Per-sender sequence numbers: 1, 2, 3, ...
#[derive(Debug, Default, Clone)]
pub struct SeqCounter {
    last: u64,
}

impl SeqCounter {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn next_seq(&mut self) -> u64 {
        self.last += 1;
        self.last
    }

    pub fn last(&self) -> u64 {
        self.last
    }
}
