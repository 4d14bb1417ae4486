//! Built-in synthetic adapters standing in for foundation and generative
//! models.
//!
//! | name            | ops                | output                                              |
//! |-----------------|--------------------|-----------------------------------------------------|
//! | `identity`      | extract, generate  | the image as one task tensor, and back              |
//! | `sobel-edge`    | extract, embed     | Sobel gradient magnitude of luma, `[H, W]`           |
//! | `depth-proxy`   | extract, embed     | luma downsampled 4× (bilinear), `[H/4, W/4]`         |
//! | `segment-depth` | extract            | depth-proxy task map plus full-resolution residual  |
//! | `upsample`      | generate           | bilinear 4× + residual + unsharp, task-consistent    |
//! | `captioner`     | extract            | template caption plus depth-proxy perceptual map    |

use gsc_core::image::{resize_bilinear, sobel_magnitude, unsharp, Image, Plane};
use gsc_core::tensor::Tensor;

use super::protocol::{Frame, Header};
use super::server::{respond, Handler};
use super::{AdapterError, Capability, Transport};
use crate::item::tensor_to_image;

pub const NAMES: [&str; 6] = ["identity", "sobel-edge", "depth-proxy", "segment-depth", "upsample", "captioner"];

/// Downsampling factor of the depth proxy.
pub const FACTOR: usize = 4;
/// Unsharp-mask gain used by the upsample generator.
pub const UNSHARP_AMOUNT: f64 = 0.5;
/// Smooth back-projection passes before the exact correction.
pub const GUIDE_PASSES: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Kind {
    Identity,
    Sobel,
    DepthProxy,
    SegmentDepth,
    Upsample,
    Captioner,
}

#[derive(Debug, Clone)]
pub struct Builtin {
    kind: Kind,
    name: &'static str,
}

impl Builtin {
    pub fn new(name: &str) -> Result<Self, AdapterError> {
        let kind = match name {
            "identity" => Kind::Identity,
            "sobel-edge" => Kind::Sobel,
            "depth-proxy" => Kind::DepthProxy,
            "segment-depth" => Kind::SegmentDepth,
            "upsample" => Kind::Upsample,
            "captioner" => Kind::Captioner,
            _ => return Err(AdapterError::UnknownBuiltin(name.to_string())),
        };
        let name = NAMES.iter().find(|n| **n == name).expect("listed");
        Ok(Builtin { kind, name })
    }
}

pub fn capabilities_of(name: &str) -> Option<Vec<Capability>> {
    Builtin::new(name).ok().map(|b| b.capabilities())
}

/// Runs a built-in in the caller's thread.
pub struct InProcess(Builtin);

pub fn in_process(name: &str) -> Result<InProcess, AdapterError> {
    Builtin::new(name).map(InProcess)
}

impl Transport for InProcess {
    fn call(&mut self, request: Frame) -> Result<Frame, AdapterError> {
        Ok(respond(&mut self.0, &request))
    }
}

fn plane_tensor(p: &Plane) -> Tensor {
    Tensor::f32(vec![p.height, p.width], p.data.iter().map(|&v| v as f32).collect()).expect("plane shape")
}

fn tensor_plane(t: &Tensor) -> Result<Plane, String> {
    match *t.dims() {
        [h, w] => Ok(Plane::new(w, h, t.to_f64())),
        [h, w, 1] => Ok(Plane::new(w, h, t.to_f64())),
        ref d => Err(format!("expected a [H, W] tensor, got dims {d:?}")),
    }
}

fn input_image(req: &Frame) -> Result<Image, String> {
    let t = req.tensors.first().ok_or("request carries no image tensor")?;
    tensor_to_image(t)
}

pub fn down_size(n: usize) -> usize {
    n.div_ceil(FACTOR).max(1)
}

/// Depth-proxy map: luma downsampled by [`FACTOR`].
pub fn depth_proxy(img: &Image) -> Plane {
    let l = img.luma();
    resize_bilinear(&l, down_size(l.width), down_size(l.height))
}

fn px(w: usize, h: usize) -> u64 {
    (w * h) as u64
}

fn luma_flops(img: &Image) -> u64 {
    if img.channels() == 3 {
        5 * px(img.width(), img.height())
    } else {
        0
    }
}

/// Pulls `x` toward agreement with the task map `t` under the depth-proxy
/// downsampler: a few smooth back-projection passes, then, when the sizes
/// are exact multiples, a block correction that makes the agreement exact.
pub fn guide_to_task(x: &Plane, t: &Plane) -> Plane {
    let mut x = x.clone();
    let residual = |x: &Plane| {
        let d = resize_bilinear(x, t.width, t.height);
        Plane::new(t.width, t.height, t.data.iter().zip(&d.data).map(|(a, b)| a - b).collect())
    };
    for _ in 0..GUIDE_PASSES {
        let up = resize_bilinear(&residual(&x), x.width, x.height);
        x.data.iter_mut().zip(&up.data).for_each(|(v, e)| *v += e);
    }
    if x.width == t.width * FACTOR && x.height == t.height * FACTOR {
        let e = residual(&x);
        for y in 0..x.height {
            for xx in 0..x.width {
                x.data[y * x.width + xx] += e.at(xx / FACTOR, y / FACTOR);
            }
        }
    }
    x
}

/// Fixed caption template filled from item metadata.
pub fn caption(meta: &std::collections::BTreeMap<String, String>) -> String {
    let get = |k: &str, d: &str| meta.get(k).cloned().unwrap_or_else(|| d.to_string());
    format!(
        "{} observed at {} ({})",
        get("objects", "no objects"),
        get("location", "unknown location"),
        get("time", "unknown time")
    )
}

fn response(roles: &[&str], tensors: Vec<Tensor>, flops: u64) -> Frame {
    let mut h = Header::new("", 0);
    h.roles = roles.iter().map(|r| r.to_string()).collect();
    h.flops = Some(flops);
    Frame::new(h, tensors)
}

impl Builtin {
    fn extract(&self, req: &Frame) -> Result<Frame, String> {
        let img = input_image(req)?;
        let (w, h) = (img.width(), img.height());
        Ok(match self.kind {
            Kind::Identity => response(&["task"], vec![req.tensors[0].clone()], 0),
            Kind::Sobel => response(
                &["task"],
                vec![plane_tensor(&sobel_magnitude(&img.luma()))],
                luma_flops(&img) + 24 * px(w, h),
            ),
            Kind::DepthProxy => {
                let d = depth_proxy(&img);
                let f = luma_flops(&img) + 8 * px(d.width, d.height);
                response(&["task"], vec![plane_tensor(&d)], f)
            }
            Kind::SegmentDepth => {
                let l = img.luma();
                let d = resize_bilinear(&l, down_size(w), down_size(h));
                let up = resize_bilinear(&d, w, h);
                let r = Plane::new(w, h, l.data.iter().zip(&up.data).map(|(a, b)| a - b).collect());
                let f = luma_flops(&img) + 8 * px(d.width, d.height) + 9 * px(w, h);
                response(&["task", "perceptual"], vec![plane_tensor(&d), plane_tensor(&r)], f)
            }
            Kind::Captioner => {
                let d = depth_proxy(&img);
                let f = luma_flops(&img) + 8 * px(d.width, d.height);
                let mut frame = response(&["perceptual"], vec![plane_tensor(&d)], f);
                frame.header.text = Some(caption(&req.header.meta));
                frame
            }
            Kind::Upsample => return Err("upsample does not extract".into()),
        })
    }

    fn generate(&self, req: &Frame) -> Result<Frame, String> {
        let roles = if req.header.roles.is_empty() {
            vec!["task".to_string(); req.tensors.len()]
        } else {
            req.header.roles.clone()
        };
        match self.kind {
            Kind::Identity => {
                let t = req.tensors.first().ok_or("generate needs a tensor")?;
                tensor_to_image(t)?;
                Ok(response(&["image"], vec![t.clone()], 0))
            }
            Kind::Upsample => {
                let planes: Vec<(String, Plane)> = roles
                    .into_iter()
                    .zip(&req.tensors)
                    .map(|(r, t)| tensor_plane(t).map(|p| (r, p)))
                    .collect::<Result<_, _>>()?;
                let task = planes.iter().find(|(r, _)| r == "task").map(|(_, p)| p);
                let base = task
                    .or_else(|| planes.iter().map(|(_, p)| p).min_by_key(|p| p.width * p.height))
                    .ok_or("generate needs at least one tensor")?;
                let meta = |k: &str| req.header.meta.get(k).and_then(|v| v.parse::<usize>().ok());
                let w = meta("width").unwrap_or(base.width * FACTOR);
                let h = meta("height").unwrap_or(base.height * FACTOR);
                let mut x = resize_bilinear(base, w, h);
                let mut flops = 8 * px(w, h);
                if let Some((_, r)) = planes.iter().find(|(r, p)| r == "perceptual" && p.width == w && p.height == h) {
                    x.data.iter_mut().zip(&r.data).for_each(|(v, e)| *v += e);
                    flops += px(w, h);
                }
                x = unsharp(&x, UNSHARP_AMOUNT);
                flops += 23 * px(w, h);
                if let Some(t) = task {
                    x = guide_to_task(&x, t);
                    flops += (GUIDE_PASSES as u64 + 1) * (8 * px(t.width, t.height) + 9 * px(w, h));
                }
                let out = x.clamp_pixels();
                Ok(response(&["image"], vec![plane_tensor(&out)], flops))
            }
            _ => Err(format!("{} does not generate", self.name)),
        }
    }

    fn embed(&self, req: &Frame) -> Result<Frame, String> {
        let mut f = self.extract(req)?;
        let t = f.tensors.swap_remove(0);
        let v: Vec<f32> = t.to_f64().into_iter().map(|x| x as f32).collect();
        let n = v.len();
        f.tensors = vec![Tensor::f32(vec![n], v).expect("vector")];
        f.header.roles = vec!["embedding".to_string()];
        Ok(f)
    }
}

impl Handler for Builtin {
    fn name(&self) -> &str {
        self.name
    }

    fn capabilities(&self) -> Vec<Capability> {
        use Capability::*;
        match self.kind {
            Kind::Identity => vec![Extract, Generate],
            Kind::Sobel | Kind::DepthProxy => vec![Extract, Embed],
            Kind::SegmentDepth | Kind::Captioner => vec![Extract],
            Kind::Upsample => vec![Generate],
        }
    }

    fn handle(&mut self, request: &Frame) -> Result<Frame, String> {
        match request.header.op.as_str() {
            "extract" => self.extract(request),
            "generate" => self.generate(request),
            "embed" => self.embed(request),
            op => Err(format!("unsupported op {op:?}")),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::adapter::{open_adapter, AdapterSpec, GenerateRequest};
    use crate::item::Item;
    use gsc_core::metrics::nmse;

    fn gradient(w: usize, h: usize) -> Image {
        Image::new(w, h, 1, (0..w * h).map(|i| ((i % w) + 2 * (i / w)) as f32 * 0.8).collect()).unwrap()
    }

    #[test]
    fn identity_handshake() {
        let c = open_adapter(&AdapterSpec::builtin("identity")).unwrap();
        let caps = c.capabilities().unwrap();
        assert_eq!(caps.ops.iter().copied().collect::<Vec<_>>(), [Capability::Extract, Capability::Generate]);
        assert!(!caps.stochastic);
    }

    #[test]
    fn sobel_shape() {
        let mut c = open_adapter(&AdapterSpec::builtin("sobel-edge")).unwrap();
        let e = c.extract(&Item::new("g", gradient(64, 64)), None).unwrap();
        assert_eq!(e.task.len(), 1);
        assert_eq!(e.task[0].dims(), &[64, 64]);
        assert!(matches!(e.task[0].data(), gsc_core::tensor::TensorData::F32(_)));
    }

    #[test]
    fn depth_proxy_of_constant_is_constant() {
        let mut c = open_adapter(&AdapterSpec::builtin("depth-proxy")).unwrap();
        let img = Image::new(40, 24, 3, vec![90.0; 40 * 24 * 3]).unwrap();
        let e = c.extract(&Item::new("c", img), None).unwrap();
        assert_eq!(e.task[0].dims(), &[6, 10]);
        assert!(e.task[0].to_f64().iter().all(|&v| (v - 90.0).abs() < 1e-4));
    }

    #[test]
    fn down_up_of_smooth_gradient() {
        let img = gradient(64, 64);
        let d = depth_proxy(&img);
        let u = resize_bilinear(&d, 64, 64);
        assert!(nmse(&img.luma().data, &u.data).unwrap() < 0.01);
    }

    #[test]
    fn upsample_restores_source_shape_and_task() {
        let img = gradient(64, 48);
        let mut ext = open_adapter(&AdapterSpec::builtin("segment-depth")).unwrap();
        let mut gen = open_adapter(&AdapterSpec::builtin("upsample")).unwrap();
        let e = ext.extract(&Item::new("g", img.clone()), None).unwrap();
        let out = gen
            .generate(&GenerateRequest {
                task: e.task.clone(),
                perceptual: e.perceptual.clone(),
                width: Some(64),
                height: Some(48),
                ..Default::default()
            })
            .unwrap();
        assert_eq!((out.image.width(), out.image.height()), (64, 48));
        let again = depth_proxy(&out.image);
        assert!(nmse(&e.task[0].to_f64(), &again.data).unwrap() < 1e-12);
        let only_task = gen
            .generate(&GenerateRequest {
                task: e.task,
                ..Default::default()
            })
            .unwrap();
        assert_eq!((only_task.image.width(), only_task.image.height()), (64, 48));
    }

    #[test]
    fn captioner_template() {
        let mut c = open_adapter(&AdapterSpec::builtin("captioner")).unwrap();
        let mut item = Item::new("cam", gradient(32, 32));
        item.metadata.insert("objects".into(), "two cars and a cyclist".into());
        item.metadata.insert("location".into(), "Elm St crossing".into());
        item.metadata.insert("time".into(), "08:15".into());
        let e = c.extract(&item, None).unwrap();
        assert_eq!(e.text.as_deref(), Some("two cars and a cyclist observed at Elm St crossing (08:15)"));
        assert_eq!(e.perceptual[0].dims(), &[8, 8]);
        item.metadata.clear();
        let e = c.extract(&item, None).unwrap();
        assert_eq!(e.text.as_deref(), Some("no objects observed at unknown location (unknown time)"));
    }

    #[test]
    fn undeclared_ops_are_refused_client_side() {
        let mut c = open_adapter(&AdapterSpec::builtin("upsample")).unwrap();
        let err = c.extract(&Item::new("x", gradient(8, 8)), None).unwrap_err();
        assert!(matches!(err, AdapterError::Undeclared(Capability::Extract)));
    }

    #[test]
    fn unknown_builtin() {
        assert!(matches!(
            open_adapter(&AdapterSpec::builtin("sam")),
            Err(AdapterError::UnknownBuiltin(_))
        ));
    }
}
