//! Serving an adapter implementation over the frame protocol.

use std::io::{Read, Write};

use super::protocol::{read_frame, write_frame, Frame, Header, ProtocolError};
use super::Capability;

/// Server side of an adapter.
pub trait Handler: Send {
    fn name(&self) -> &str;
    fn capabilities(&self) -> Vec<Capability>;
    fn stochastic(&self) -> bool {
        false
    }
    /// Handles `extract`, `generate` and `embed`; the response op and
    /// request id are filled in by [`respond`].
    fn handle(&mut self, request: &Frame) -> Result<Frame, String>;
}

fn error_frame(request_id: u64, msg: String) -> Frame {
    let mut h = Header::new("error", request_id);
    h.error = Some(msg);
    Frame::new(h, vec![])
}

/// Produces the response to one request, never failing.
pub fn respond(handler: &mut dyn Handler, request: &Frame) -> Frame {
    let id = request.header.request_id;
    let op = request.header.op.as_str();
    match op {
        "hello" => {
            let mut h = Header::new("hello", id);
            h.name = Some(handler.name().to_string());
            h.capabilities = Some(handler.capabilities().iter().map(|c| c.to_string()).collect());
            h.stochastic = Some(handler.stochastic());
            Frame::new(h, vec![])
        }
        "shutdown" => Frame::new(Header::new("shutdown", id), vec![]),
        "extract" | "generate" | "embed" => {
            let cap: Capability = op.parse().expect("known op");
            if !handler.capabilities().contains(&cap) {
                return error_frame(id, format!("{} does not support {op}", handler.name()));
            }
            match handler.handle(request) {
                Ok(mut f) => {
                    f.header.op = op.to_string();
                    f.header.request_id = id;
                    f.header.tensor_count = f.tensors.len();
                    f
                }
                Err(e) => error_frame(id, e),
            }
        }
        other => error_frame(id, format!("unknown op {other:?}")),
    }
}

/// Answers frames from `input` until `shutdown` or end of stream. A frame
/// that cannot be parsed is answered with an error frame and ends the session.
pub fn serve(handler: &mut dyn Handler, input: &mut impl Read, output: &mut impl Write) -> Result<(), ProtocolError> {
    loop {
        let frame = match read_frame(input) {
            Ok(Some(f)) => f,
            Ok(None) => return Ok(()),
            Err(e) => {
                let _ = write_frame(output, &error_frame(0, e.to_string()));
                return Err(e);
            }
        };
        let resp = respond(handler, &frame);
        write_frame(output, &resp)?;
        if frame.header.op == "shutdown" {
            return Ok(());
        }
    }
}
