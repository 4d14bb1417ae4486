//! External adapters running as child processes.

use std::io::{BufReader, BufWriter, Write};
use std::process::{Child, ChildStdin, Command, Stdio};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError};
use std::thread::JoinHandle;
use std::time::Duration;

use super::protocol::{read_frame, write_frame, Frame, ProtocolError};
use super::{AdapterError, Transport};

/// Environment variable overriding the per-request timeout.
pub const TIMEOUT_ENV: &str = "GSC_ADAPTER_TIMEOUT_MS";
pub const DEFAULT_TIMEOUT_MS: u64 = 60_000;

type Incoming = Result<Option<Frame>, ProtocolError>;

pub fn timeout_ms() -> u64 {
    std::env::var(TIMEOUT_ENV)
        .ok()
        .and_then(|v| v.trim().parse().ok())
        .unwrap_or(DEFAULT_TIMEOUT_MS)
}

pub struct Subprocess {
    child: Child,
    stdin: Option<BufWriter<ChildStdin>>,
    incoming: Receiver<Incoming>,
    reader: Option<JoinHandle<()>>,
    timeout: Duration,
    dead: bool,
}

impl Subprocess {
    pub fn spawn(command: &[String]) -> Result<Subprocess, AdapterError> {
        let (prog, args) = command.split_first().ok_or_else(|| AdapterError::Spawn {
            command: String::new(),
            source: std::io::Error::new(std::io::ErrorKind::InvalidInput, "empty command"),
        })?;
        let mut child = Command::new(prog)
            .args(args)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::inherit())
            .spawn()
            .map_err(|source| AdapterError::Spawn {
                command: command.join(" "),
                source,
            })?;
        let stdin = child.stdin.take().map(BufWriter::new);
        let stdout = child.stdout.take().expect("piped stdout");
        let (tx, incoming) = mpsc::channel();
        let reader = std::thread::spawn(move || {
            let mut r = BufReader::new(stdout);
            loop {
                let msg = read_frame(&mut r);
                let stop = !matches!(msg, Ok(Some(_)));
                if tx.send(msg).is_err() || stop {
                    return;
                }
            }
        });
        Ok(Subprocess {
            child,
            stdin,
            incoming,
            reader: Some(reader),
            timeout: Duration::from_millis(timeout_ms()),
            dead: false,
        })
    }

    pub fn with_timeout(mut self, timeout: Duration) -> Self {
        self.timeout = timeout;
        self
    }

    fn exit_reason(&mut self) -> String {
        match self.child.wait() {
            Ok(s) => s.to_string(),
            Err(e) => e.to_string(),
        }
    }

    fn kill(&mut self) {
        self.dead = true;
        self.stdin = None;
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}

impl Transport for Subprocess {
    fn call(&mut self, request: Frame) -> Result<Frame, AdapterError> {
        if self.dead {
            return Err(AdapterError::Exited("adapter is no longer running".into()));
        }
        let sent = match self.stdin.as_mut() {
            Some(w) => write_frame(w, &request).and_then(|_| w.flush()),
            None => Err(std::io::ErrorKind::BrokenPipe.into()),
        };
        if sent.is_err() {
            self.kill();
            let why = self.exit_reason();
            return Err(AdapterError::Exited(why));
        }
        match self.incoming.recv_timeout(self.timeout) {
            Ok(Ok(Some(frame))) => Ok(frame),
            Ok(Ok(None)) | Err(RecvTimeoutError::Disconnected) => {
                self.dead = true;
                let why = self.exit_reason();
                Err(AdapterError::Exited(format!("closed its output ({why})")))
            }
            Ok(Err(e)) => {
                self.kill();
                Err(AdapterError::Protocol(e))
            }
            Err(RecvTimeoutError::Timeout) => {
                self.kill();
                Err(AdapterError::Timeout(self.timeout.as_millis() as u64))
            }
        }
    }

    fn close(&mut self) {
        self.stdin = None;
        if !self.dead {
            let deadline = std::time::Instant::now() + Duration::from_secs(2);
            while std::time::Instant::now() < deadline {
                if let Ok(Some(_)) = self.child.try_wait() {
                    break;
                }
                std::thread::sleep(Duration::from_millis(10));
            }
        }
        self.kill();
        if let Some(h) = self.reader.take() {
            let _ = h.join();
        }
    }
}

impl Drop for Subprocess {
    fn drop(&mut self) {
        if !self.dead {
            self.kill();
        }
    }
}
