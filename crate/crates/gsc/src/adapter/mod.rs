//! Extractor, generator and embedder adapters.
//!
//! Every adapter, built-in or external, is driven through the same framed
//! request/response protocol ([`protocol`]). Built-ins answer in process;
//! external adapters are child processes speaking the protocol over their
//! standard input and output.

pub mod builtin;
pub mod external;
pub mod protocol;
pub mod server;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use gsc_core::image::Image;
use gsc_core::tensor::Tensor;
use serde::{Deserialize, Serialize};

use crate::item::{image_to_tensor, tensor_to_image, Item};
use protocol::{Frame, Header, ProtocolError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Capability {
    Extract,
    Generate,
    Embed,
}

impl Capability {
    pub fn as_str(self) -> &'static str {
        match self {
            Capability::Extract => "extract",
            Capability::Generate => "generate",
            Capability::Embed => "embed",
        }
    }
}

impl fmt::Display for Capability {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Capability {
    type Err = AdapterError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "extract" => Ok(Capability::Extract),
            "generate" => Ok(Capability::Generate),
            "embed" => Ok(Capability::Embed),
            _ => Err(AdapterError::BadResponse(format!("unknown capability {s:?}"))),
        }
    }
}

/// How to reach an adapter.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum AdapterSpec {
    Builtin {
        name: String,
    },
    External {
        command: Vec<String>,
        /// Capabilities the handshake must confirm.
        #[serde(default, skip_serializing_if = "Vec::is_empty")]
        capabilities: Vec<Capability>,
    },
}

impl AdapterSpec {
    pub fn builtin(name: &str) -> Self {
        AdapterSpec::Builtin { name: name.to_string() }
    }

    /// A built-in name, or else a whitespace-separated command line.
    pub fn parse_cli(s: &str) -> Self {
        if builtin::NAMES.contains(&s) {
            AdapterSpec::builtin(s)
        } else {
            AdapterSpec::External {
                command: s.split_whitespace().map(str::to_string).collect(),
                capabilities: Vec::new(),
            }
        }
    }

    pub fn label(&self) -> String {
        match self {
            AdapterSpec::Builtin { name } => name.clone(),
            AdapterSpec::External { command, .. } => command.join(" "),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum AdapterError {
    #[error("protocol error: {0}")]
    Protocol(#[from] ProtocolError),
    #[error("adapter did not answer within {0} ms")]
    Timeout(u64),
    #[error("adapter exited: {0}")]
    Exited(String),
    #[error("could not start adapter {command:?}: {source}")]
    Spawn {
        command: String,
        #[source]
        source: std::io::Error,
    },
    #[error("adapter does not declare capability {0}")]
    Undeclared(Capability),
    #[error("adapter reported: {0}")]
    Remote(String),
    #[error("malformed adapter response: {0}")]
    BadResponse(String),
    #[error("unknown built-in adapter {0:?}")]
    UnknownBuiltin(String),
    #[error("handshake has not completed")]
    NoHandshake,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Capabilities {
    pub name: String,
    pub ops: BTreeSet<Capability>,
    pub stochastic: bool,
}

/// Output of an `extract` call.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Extraction {
    pub task: Vec<Tensor>,
    pub perceptual: Vec<Tensor>,
    pub text: Option<String>,
    pub flops: Option<u64>,
}

/// Inputs of a `generate` call.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct GenerateRequest {
    pub task: Vec<Tensor>,
    pub perceptual: Vec<Tensor>,
    pub text: Option<String>,
    /// Shape of the item to produce, when known.
    pub width: Option<usize>,
    pub height: Option<usize>,
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Generated {
    pub image: Image,
    pub flops: Option<u64>,
}

/// Delivers one request frame and returns the matching response.
pub trait Transport: Send {
    fn call(&mut self, request: Frame) -> Result<Frame, AdapterError>;
    fn close(&mut self) {}
}

/// Protocol client for one adapter connection.
pub struct AdapterClient {
    transport: Box<dyn Transport>,
    caps: Option<Capabilities>,
    next_id: u64,
    label: String,
}

impl fmt::Debug for AdapterClient {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("AdapterClient")
            .field("label", &self.label)
            .field("caps", &self.caps)
            .finish()
    }
}

/// Starts the adapter and completes its handshake.
pub fn open_adapter(spec: &AdapterSpec) -> Result<AdapterClient, AdapterError> {
    let transport: Box<dyn Transport> = match spec {
        AdapterSpec::Builtin { name } => Box::new(builtin::in_process(name)?),
        AdapterSpec::External { command, .. } => Box::new(external::Subprocess::spawn(command)?),
    };
    let mut client = AdapterClient::new(transport, spec.label());
    let caps = client.handshake()?;
    if let AdapterSpec::External { capabilities, .. } = spec {
        if let Some(&c) = capabilities.iter().find(|c| !caps.ops.contains(c)) {
            return Err(AdapterError::Undeclared(c));
        }
    }
    Ok(client)
}

fn meta_usize(v: Option<usize>) -> Option<String> {
    v.map(|x| x.to_string())
}

impl AdapterClient {
    pub fn new(transport: Box<dyn Transport>, label: String) -> Self {
        AdapterClient {
            transport,
            caps: None,
            next_id: 1,
            label,
        }
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn capabilities(&self) -> Option<&Capabilities> {
        self.caps.as_ref()
    }

    fn request(&mut self, mut frame: Frame) -> Result<Frame, AdapterError> {
        let id = self.next_id;
        self.next_id += 1;
        frame.header.request_id = id;
        frame.header.tensor_count = frame.tensors.len();
        let op = frame.header.op.clone();
        let resp = self.transport.call(frame)?;
        if resp.header.op == "error" {
            return Err(AdapterError::Remote(
                resp.header.error.unwrap_or_else(|| "unspecified error".to_string()),
            ));
        }
        if resp.header.request_id != id {
            return Err(AdapterError::BadResponse(format!(
                "response id {} for request {id}",
                resp.header.request_id
            )));
        }
        if resp.header.op != op {
            return Err(AdapterError::BadResponse(format!(
                "response op {:?} for request {op:?}",
                resp.header.op
            )));
        }
        Ok(resp)
    }

    pub fn handshake(&mut self) -> Result<Capabilities, AdapterError> {
        let resp = self.request(Frame::new(Header::new("hello", 0), vec![]))?;
        let ops = resp
            .header
            .capabilities
            .as_ref()
            .ok_or_else(|| AdapterError::BadResponse("hello response lacks capabilities".into()))?
            .iter()
            .map(|s| s.parse())
            .collect::<Result<_, _>>()?;
        let caps = Capabilities {
            name: resp.header.name.clone().unwrap_or_else(|| self.label.clone()),
            ops,
            stochastic: resp.header.stochastic.unwrap_or(false),
        };
        self.caps = Some(caps.clone());
        Ok(caps)
    }

    fn require(&self, c: Capability) -> Result<&Capabilities, AdapterError> {
        let caps = self.caps.as_ref().ok_or(AdapterError::NoHandshake)?;
        if caps.ops.contains(&c) {
            Ok(caps)
        } else {
            Err(AdapterError::Undeclared(c))
        }
    }

    fn seed_for(&self, seed: Option<u64>) -> Option<u64> {
        match &self.caps {
            Some(c) if c.stochastic => Some(seed.unwrap_or(0)),
            _ => None,
        }
    }

    pub fn extract(&mut self, item: &Item, seed: Option<u64>) -> Result<Extraction, AdapterError> {
        self.require(Capability::Extract)?;
        let mut h = Header::new("extract", 0);
        h.stochastic_seed = self.seed_for(seed);
        h.roles = vec!["image".to_string()];
        h.meta = item.metadata.clone();
        h.meta.insert("name".to_string(), item.name.clone());
        let resp = self.request(Frame::new(h, vec![image_to_tensor(&item.image)]))?;
        let roles = roles_of(&resp)?;
        let mut out = Extraction {
            text: resp.header.text.clone(),
            flops: resp.header.flops,
            ..Extraction::default()
        };
        for (t, role) in resp.tensors.into_iter().zip(roles) {
            match role.as_str() {
                "task" => out.task.push(t),
                "perceptual" => out.perceptual.push(t),
                other => return Err(AdapterError::BadResponse(format!("unexpected tensor role {other:?}"))),
            }
        }
        Ok(out)
    }

    pub fn generate(&mut self, req: &GenerateRequest) -> Result<Generated, AdapterError> {
        self.require(Capability::Generate)?;
        let mut h = Header::new("generate", 0);
        h.stochastic_seed = self.seed_for(req.seed);
        h.text = req.text.clone();
        let mut tensors = Vec::new();
        for t in &req.task {
            h.roles.push("task".to_string());
            tensors.push(t.clone());
        }
        for t in &req.perceptual {
            h.roles.push("perceptual".to_string());
            tensors.push(t.clone());
        }
        let shape: BTreeMap<String, String> = [("width", meta_usize(req.width)), ("height", meta_usize(req.height))]
            .into_iter()
            .filter_map(|(k, v)| v.map(|v| (k.to_string(), v)))
            .collect();
        h.meta = shape;
        let resp = self.request(Frame::new(h, tensors))?;
        let t = resp
            .tensors
            .first()
            .ok_or_else(|| AdapterError::BadResponse("generate returned no tensor".into()))?;
        let image = tensor_to_image(t).map_err(AdapterError::BadResponse)?;
        Ok(Generated {
            image,
            flops: resp.header.flops,
        })
    }

    pub fn embed(&mut self, item: &Item) -> Result<(Vec<f64>, Option<u64>), AdapterError> {
        self.require(Capability::Embed)?;
        let mut h = Header::new("embed", 0);
        h.roles = vec!["image".to_string()];
        h.meta.insert("name".to_string(), item.name.clone());
        let resp = self.request(Frame::new(h, vec![image_to_tensor(&item.image)]))?;
        let t = resp
            .tensors
            .first()
            .ok_or_else(|| AdapterError::BadResponse("embed returned no tensor".into()))?;
        Ok((t.to_f64(), resp.header.flops))
    }

    pub fn shutdown(mut self) -> Result<(), AdapterError> {
        let r = self.request(Frame::new(Header::new("shutdown", 0), vec![])).map(|_| ());
        self.transport.close();
        r
    }
}

fn roles_of(resp: &Frame) -> Result<Vec<String>, AdapterError> {
    let n = resp.tensors.len();
    match resp.header.roles.len() {
        0 => Ok(vec!["task".to_string(); n]),
        m if m == n => Ok(resp.header.roles.clone()),
        m => Err(AdapterError::BadResponse(format!("{m} roles for {n} tensors"))),
    }
}
