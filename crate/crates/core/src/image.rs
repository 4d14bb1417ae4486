//! Raster images and the single-channel filters the built-in adapters and
//! metrics need.

use alloc::vec;
use alloc::vec::Vec;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ImageError {
    #[error("image {width}x{height}x{channels} needs {expected} samples, got {got}")]
    SampleCount {
        width: usize,
        height: usize,
        channels: usize,
        expected: usize,
        got: usize,
    },
    #[error("unsupported channel count {0}")]
    Channels(usize),
    #[error("image must be non-empty")]
    Empty,
}

/// Interleaved image with 1 (gray) or 3 (RGB) channels, nominal range 0..=255.
#[derive(Debug, Clone, PartialEq)]
pub struct Image {
    width: usize,
    height: usize,
    channels: usize,
    data: Vec<f32>,
}

impl Image {
    pub fn new(width: usize, height: usize, channels: usize, data: Vec<f32>) -> Result<Self, ImageError> {
        if channels != 1 && channels != 3 {
            return Err(ImageError::Channels(channels));
        }
        if width == 0 || height == 0 {
            return Err(ImageError::Empty);
        }
        let expected = width * height * channels;
        if data.len() != expected {
            return Err(ImageError::SampleCount {
                width,
                height,
                channels,
                expected,
                got: data.len(),
            });
        }
        Ok(Image {
            width,
            height,
            channels,
            data,
        })
    }

    pub fn from_plane(p: &Plane) -> Self {
        Image {
            width: p.width,
            height: p.height,
            channels: 1,
            data: p.data.iter().map(|&v| v as f32).collect(),
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    /// One channel as a plane.
    pub fn channel(&self, c: usize) -> Plane {
        Plane {
            width: self.width,
            height: self.height,
            data: self
                .data
                .iter()
                .skip(c)
                .step_by(self.channels)
                .map(|&v| f64::from(v))
                .collect(),
        }
    }

    /// Rec. 601 luma (`0.299 R + 0.587 G + 0.114 B`); the plane itself for gray.
    pub fn luma(&self) -> Plane {
        if self.channels == 1 {
            return self.channel(0);
        }
        Plane {
            width: self.width,
            height: self.height,
            data: self
                .data
                .chunks_exact(3)
                .map(|p| 0.299 * f64::from(p[0]) + 0.587 * f64::from(p[1]) + 0.114 * f64::from(p[2]))
                .collect(),
        }
    }

    /// Interleaves per-channel planes of equal size.
    pub fn from_channels(planes: &[Plane]) -> Result<Self, ImageError> {
        let first = planes.first().ok_or(ImageError::Empty)?;
        let (w, h) = (first.width, first.height);
        let mut data = Vec::with_capacity(w * h * planes.len());
        for i in 0..w * h {
            for p in planes {
                data.push(p.data[i] as f32);
            }
        }
        Image::new(w, h, planes.len(), data)
    }

    /// Samples rounded and clamped to `u8`.
    pub fn to_u8(&self) -> Vec<u8> {
        self.data.iter().map(|&v| clamp_u8(f64::from(v))).collect()
    }
}

pub fn clamp_u8(v: f64) -> u8 {
    let r = libm::round(v);
    if r.is_nan() || r <= 0.0 {
        0
    } else if r >= 255.0 {
        255
    } else {
        r as u8
    }
}

/// Single-channel row-major grid of `f64` samples.
#[derive(Debug, Clone, PartialEq)]
pub struct Plane {
    pub width: usize,
    pub height: usize,
    pub data: Vec<f64>,
}

impl Plane {
    pub fn new(width: usize, height: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), width * height, "plane sample count");
        Plane { width, height, data }
    }

    pub fn filled(width: usize, height: usize, v: f64) -> Self {
        Plane::new(width, height, vec![v; width * height])
    }

    #[inline]
    pub fn at(&self, x: usize, y: usize) -> f64 {
        self.data[y * self.width + x]
    }

    /// Sample with edge replication.
    #[inline]
    pub fn at_clamped(&self, x: isize, y: isize) -> f64 {
        let x = x.clamp(0, self.width as isize - 1) as usize;
        let y = y.clamp(0, self.height as isize - 1) as usize;
        self.at(x, y)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Plane {
        Plane::new(self.width, self.height, self.data.iter().map(|&v| f(v)).collect())
    }

    pub fn clamp_pixels(&self) -> Plane {
        self.map(|v| v.clamp(0.0, 255.0))
    }
}

/// Bilinear resampling with half-pixel centers and edge replication.
pub fn resize_bilinear(p: &Plane, width: usize, height: usize) -> Plane {
    let sx = p.width as f64 / width as f64;
    let sy = p.height as f64 / height as f64;
    let mut out = Vec::with_capacity(width * height);
    for y in 0..height {
        let fy = ((y as f64 + 0.5) * sy - 0.5).max(0.0);
        let y0 = libm::floor(fy) as isize;
        let wy = fy - y0 as f64;
        for x in 0..width {
            let fx = ((x as f64 + 0.5) * sx - 0.5).max(0.0);
            let x0 = libm::floor(fx) as isize;
            let wx = fx - x0 as f64;
            let top = p.at_clamped(x0, y0) * (1.0 - wx) + p.at_clamped(x0 + 1, y0) * wx;
            let bot = p.at_clamped(x0, y0 + 1) * (1.0 - wx) + p.at_clamped(x0 + 1, y0 + 1) * wx;
            out.push(top * (1.0 - wy) + bot * wy);
        }
    }
    Plane::new(width, height, out)
}

/// Normalized sampled Gaussian kernel of odd length `size`.
pub fn gaussian_kernel(size: usize, sigma: f64) -> Vec<f64> {
    let half = (size / 2) as f64;
    let k: Vec<f64> = (0..size)
        .map(|i| {
            let d = i as f64 - half;
            libm::exp(-d * d / (2.0 * sigma * sigma))
        })
        .collect();
    let s: f64 = k.iter().sum();
    k.into_iter().map(|v| v / s).collect()
}

/// Separable convolution with edge replication.
pub fn convolve_separable(p: &Plane, kernel: &[f64]) -> Plane {
    let r = (kernel.len() / 2) as isize;
    let mut tmp = vec![0.0; p.data.len()];
    for y in 0..p.height {
        for x in 0..p.width {
            let mut acc = 0.0;
            for (i, k) in kernel.iter().enumerate() {
                acc += k * p.at_clamped(x as isize + i as isize - r, y as isize);
            }
            tmp[y * p.width + x] = acc;
        }
    }
    let tmp = Plane::new(p.width, p.height, tmp);
    let mut out = vec![0.0; p.data.len()];
    for y in 0..p.height {
        for x in 0..p.width {
            let mut acc = 0.0;
            for (i, k) in kernel.iter().enumerate() {
                acc += k * tmp.at_clamped(x as isize, y as isize + i as isize - r);
            }
            out[y * p.width + x] = acc;
        }
    }
    Plane::new(p.width, p.height, out)
}

pub fn gaussian_blur(p: &Plane, size: usize, sigma: f64) -> Plane {
    convolve_separable(p, &gaussian_kernel(size, sigma))
}

/// `p + amount · (p − blur(p))` with a 5-tap, σ = 1 Gaussian.
pub fn unsharp(p: &Plane, amount: f64) -> Plane {
    let b = gaussian_blur(p, 5, 1.0);
    Plane::new(
        p.width,
        p.height,
        p.data.iter().zip(&b.data).map(|(x, bl)| x + amount * (x - bl)).collect(),
    )
}

/// Gradient magnitude from 3×3 Sobel operators, edges replicated.
pub fn sobel_magnitude(p: &Plane) -> Plane {
    let mut out = Vec::with_capacity(p.data.len());
    for y in 0..p.height as isize {
        for x in 0..p.width as isize {
            let a = |dx: isize, dy: isize| p.at_clamped(x + dx, y + dy);
            let gx = (a(1, -1) + 2.0 * a(1, 0) + a(1, 1)) - (a(-1, -1) + 2.0 * a(-1, 0) + a(-1, 1));
            let gy = (a(-1, 1) + 2.0 * a(0, 1) + a(1, 1)) - (a(-1, -1) + 2.0 * a(0, -1) + a(1, -1));
            out.push(libm::sqrt(gx * gx + gy * gy));
        }
    }
    Plane::new(p.width, p.height, out)
}
