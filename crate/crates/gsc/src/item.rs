//! Source and destination items: images on disk (PGM/PPM or GSCT tensors)
//! with optional metadata sidecars.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use gsc_core::image::Image;
use gsc_core::tensor::{Tensor, TensorData};

#[derive(Debug, thiserror::Error)]
pub enum ItemError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {reason}")]
    Format { path: PathBuf, reason: String },
    #[error("dataset {0} contains no items")]
    EmptyDataset(PathBuf),
}

/// One media item moving through the pipeline.
#[derive(Debug, Clone, PartialEq)]
pub struct Item {
    pub name: String,
    pub image: Image,
    pub metadata: BTreeMap<String, String>,
}

impl Item {
    pub fn new(name: impl Into<String>, image: Image) -> Self {
        Item {
            name: name.into(),
            image,
            metadata: BTreeMap::new(),
        }
    }
}

fn format_err(path: &Path, reason: impl ToString) -> ItemError {
    ItemError::Format {
        path: path.to_path_buf(),
        reason: reason.to_string(),
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> ItemError + '_ {
    move |source| ItemError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Reads a binary or ASCII PGM/PPM file.
pub fn read_pnm(path: &Path) -> Result<Image, ItemError> {
    let bytes = fs::read(path).map_err(io_err(path))?;
    decode_pnm(&bytes).map_err(|e| format_err(path, e))
}

pub fn decode_pnm(bytes: &[u8]) -> Result<Image, image::ImageError> {
    let img = image::load_from_memory_with_format(bytes, image::ImageFormat::Pnm)?;
    let (w, h) = (img.width() as usize, img.height() as usize);
    let image = if img.color().has_color() {
        let rgb = img.into_rgb8();
        Image::new(w, h, 3, rgb.into_raw().into_iter().map(f32::from).collect())
    } else {
        let l = img.into_luma8();
        Image::new(w, h, 1, l.into_raw().into_iter().map(f32::from).collect())
    };
    Ok(image.expect("decoded image dimensions are consistent"))
}

/// Encodes as P5 (gray) or P6 (RGB), rounding and clamping samples to 8 bits.
pub fn encode_pnm(img: &Image) -> Vec<u8> {
    let magic = if img.channels() == 1 { "P5" } else { "P6" };
    let mut out = format!("{magic}\n{} {}\n255\n", img.width(), img.height()).into_bytes();
    out.extend(img.to_u8());
    out
}

pub fn write_pnm(path: &Path, img: &Image) -> Result<(), ItemError> {
    fs::write(path, encode_pnm(img)).map_err(io_err(path))
}

/// Interprets a tensor of dims `[H, W]` or `[H, W, C]` (C ∈ {1, 3}) as an image.
pub fn tensor_to_image(t: &Tensor) -> Result<Image, String> {
    let (h, w, c) = match *t.dims() {
        [h, w] => (h, w, 1),
        [h, w, c] if c == 1 || c == 3 => (h, w, c),
        ref d => return Err(format!("tensor dims {d:?} are not an image")),
    };
    let data: Vec<f32> = match t.data() {
        TensorData::U8(v) => v.iter().map(|&x| f32::from(x)).collect(),
        TensorData::F32(v) => v.clone(),
        TensorData::F64(v) => v.iter().map(|&x| x as f32).collect(),
    };
    Image::new(w, h, c, data).map_err(|e| e.to_string())
}

/// `[H, W]` for gray, `[H, W, 3]` for colour, `f32` samples.
pub fn image_to_tensor(img: &Image) -> Tensor {
    let dims = if img.channels() == 1 {
        vec![img.height(), img.width()]
    } else {
        vec![img.height(), img.width(), img.channels()]
    };
    Tensor::f32(dims, img.data().to_vec()).expect("image shape")
}

pub fn read_item(path: &Path) -> Result<Item, ItemError> {
    let ext = path
        .extension()
        .and_then(|e| e.to_str())
        .map(str::to_ascii_lowercase)
        .unwrap_or_default();
    let image = match ext.as_str() {
        "pgm" | "ppm" | "pnm" => read_pnm(path)?,
        "gsct" => {
            let bytes = fs::read(path).map_err(io_err(path))?;
            let t = Tensor::decode(&bytes).map_err(|e| format_err(path, e))?;
            tensor_to_image(&t).map_err(|e| format_err(path, e))?
        }
        _ => return Err(format_err(path, "unsupported item type")),
    };
    let name = path.file_stem().and_then(|s| s.to_str()).unwrap_or("item").to_string();
    let mut item = Item::new(name, image);
    let sidecar = path.with_extension("json");
    if sidecar.exists() {
        item.metadata = read_metadata(&sidecar)?;
    }
    Ok(item)
}

/// Flat JSON object; numbers and booleans are kept in their JSON spelling.
fn read_metadata(path: &Path) -> Result<BTreeMap<String, String>, ItemError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    let v: serde_json::Value = serde_json::from_str(&text).map_err(|e| format_err(path, e))?;
    let obj = v.as_object().ok_or_else(|| format_err(path, "metadata must be a JSON object"))?;
    obj.iter()
        .map(|(k, v)| match v {
            serde_json::Value::String(s) => Ok((k.clone(), s.clone())),
            serde_json::Value::Number(_) | serde_json::Value::Bool(_) => Ok((k.clone(), v.to_string())),
            _ => Err(format_err(path, format!("metadata value for {k:?} must be a scalar"))),
        })
        .collect()
}

fn is_item_file(p: &Path) -> bool {
    matches!(
        p.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase).as_deref(),
        Some("pgm" | "ppm" | "pnm" | "gsct")
    )
}

/// All items in `dir`, ordered by file name.
pub fn load_dataset(dir: &Path) -> Result<Vec<Item>, ItemError> {
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(io_err(dir))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_file() && is_item_file(p))
        .collect();
    paths.sort();
    if paths.is_empty() {
        return Err(ItemError::EmptyDataset(dir.to_path_buf()));
    }
    paths.iter().map(|p| read_item(p)).collect()
}
