use std::io::{Read, Write};
use std::process::{Command, Stdio};
use std::time::{Duration, Instant};

use gsc::adapter::external::Subprocess;
use gsc::adapter::protocol::{decode_frame, encode_frame, read_frame, Frame, Header};
use gsc::adapter::{open_adapter, AdapterClient, AdapterError, AdapterSpec, Capability, GenerateRequest};
use gsc::item::Item;
use gsc_core::image::Image;

fn serve_command(name: &str) -> Vec<String> {
    vec![env!("CARGO_BIN_EXE_gsc").into(), "adapters".into(), "serve".into(), name.into()]
}

fn gradient(w: usize, h: usize) -> Item {
    let data = (0..w * h).map(|i| ((i % w) * 3 + (i / w) * 2) as f32).collect();
    Item::new("g", Image::new(w, h, 1, data).unwrap())
}

#[test]
fn subprocess_matches_in_process() {
    let item = gradient(32, 24);
    let mut local = open_adapter(&AdapterSpec::builtin("segment-depth")).unwrap();
    let mut remote = open_adapter(&AdapterSpec::External {
        command: serve_command("segment-depth"),
        capabilities: vec![Capability::Extract],
    })
    .unwrap();
    assert_eq!(local.extract(&item, None).unwrap(), remote.extract(&item, None).unwrap());
    local.shutdown().unwrap();
    remote.shutdown().unwrap();
}

#[test]
fn subprocess_generate_round_trip() {
    let mut c = open_adapter(&AdapterSpec::External {
        command: serve_command("upsample"),
        capabilities: vec![],
    })
    .unwrap();
    let task = gsc_core::tensor::Tensor::f32(vec![6, 8], vec![100.0; 48]).unwrap();
    let g = c
        .generate(&GenerateRequest {
            task: vec![task],
            width: Some(32),
            height: Some(24),
            ..GenerateRequest::default()
        })
        .unwrap();
    assert_eq!((g.image.width(), g.image.height()), (32, 24));
    assert!(g.image.data().iter().all(|&v| (v - 100.0).abs() < 1e-3));
    c.shutdown().unwrap();
}

#[test]
fn missing_capability_is_refused() {
    let e = open_adapter(&AdapterSpec::External {
        command: serve_command("upsample"),
        capabilities: vec![Capability::Extract],
    })
    .unwrap_err();
    assert!(matches!(e, AdapterError::Undeclared(Capability::Extract)), "{e}");
}

#[test]
fn undeclared_op_yields_remote_error() {
    let mut c: AdapterClient = open_adapter(&AdapterSpec::External {
        command: serve_command("captioner"),
        capabilities: vec![],
    })
    .unwrap();
    let e = c.generate(&GenerateRequest::default()).unwrap_err();
    assert!(matches!(e, AdapterError::Undeclared(_) | AdapterError::Remote(_)), "{e}");
}

#[test]
fn malformed_frame_gets_error_reply_and_server_stops() {
    let mut child = Command::new(env!("CARGO_BIN_EXE_gsc"))
        .args(["adapters", "serve", "identity"])
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::null())
        .spawn()
        .unwrap();
    let frame = Frame::new(
        Header::new("extract", 5),
        vec![gsc_core::tensor::Tensor::f32(vec![2], vec![1.0, 2.0]).unwrap()],
    );
    let mut bytes = encode_frame(&frame);
    let json_len = serde_json::to_vec(&frame.header).unwrap().len();
    bytes[4 + json_len] = b'?';
    assert!(decode_frame(&bytes).is_err());
    let mut stdin = child.stdin.take().unwrap();
    stdin.write_all(&bytes).unwrap();
    drop(stdin);
    let mut out = Vec::new();
    child.stdout.take().unwrap().read_to_end(&mut out).unwrap();
    let reply = read_frame(&mut out.as_slice()).unwrap().unwrap();
    assert_eq!(reply.header.op, "error");
    assert!(reply.header.error.unwrap().contains("offset 0"));
    assert!(!child.wait().unwrap().success());
}

#[test]
fn silent_adapter_times_out() {
    let sub = Subprocess::spawn(&["sleep".into(), "5".into()])
        .unwrap()
        .with_timeout(Duration::from_millis(200));
    let mut c = AdapterClient::new(Box::new(sub), "sleep".into());
    let start = Instant::now();
    let e = c.handshake().unwrap_err();
    assert!(matches!(e, AdapterError::Timeout(200)), "{e}");
    assert!(start.elapsed() < Duration::from_secs(3));
}

#[test]
fn exiting_adapter_is_reported() {
    let e = open_adapter(&AdapterSpec::External {
        command: vec!["true".into()],
        capabilities: vec![],
    })
    .unwrap_err();
    assert!(matches!(e, AdapterError::Exited(_)), "{e}");
}

#[test]
fn missing_program_fails_to_spawn() {
    let e = open_adapter(&AdapterSpec::External {
        command: vec!["/nonexistent/adapter".into()],
        capabilities: vec![],
    })
    .unwrap_err();
    assert!(matches!(e, AdapterError::Spawn { .. }), "{e}");
}
