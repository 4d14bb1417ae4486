//! Shared PCA codebooks fitted on calibration data.

use std::collections::BTreeMap;

use gsc_core::payload::StreamKind;
use gsc_core::pca::{fit_basis, PcaBasis, PcaError};

use super::patches::to_vectors;
use crate::adapter::Extraction;

/// Basis identifier of the `index`-th stream of a kind.
pub fn stream_id(kind: StreamKind, index: usize) -> String {
    match kind {
        StreamKind::Task => format!("task{index}"),
        StreamKind::Perceptual => format!("perc{index}"),
    }
}

/// Bases known to both ends, keyed by stream id. Each is fitted at the
/// largest rank the calibration data supports and truncated on use.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Codebook {
    bases: BTreeMap<String, PcaBasis>,
}

impl Codebook {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, basis: PcaBasis) {
        self.bases.insert(basis.basis_id().to_string(), basis);
    }

    pub fn get(&self, id: &str) -> Option<&PcaBasis> {
        self.bases.get(id)
    }

    pub fn len(&self) -> usize {
        self.bases.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bases.is_empty()
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.bases.keys().map(String::as_str)
    }

    /// Fits one basis per stream id from the given sample vectors.
    pub fn fit(samples: &BTreeMap<String, Vec<Vec<f64>>>) -> Result<Self, PcaError> {
        let mut book = Codebook::new();
        for (id, vectors) in samples {
            let dim = vectors.first().map_or(0, Vec::len);
            let rank = dim.min(vectors.len());
            book.insert(fit_basis(vectors, rank, id)?);
        }
        Ok(book)
    }

    /// Fits bases on the task and perceptual tensors of `extractions`.
    pub fn calibrate(extractions: &[Extraction]) -> Result<Self, PcaError> {
        let mut samples: BTreeMap<String, Vec<Vec<f64>>> = BTreeMap::new();
        for e in extractions {
            for (kind, tensors) in [(StreamKind::Task, &e.task), (StreamKind::Perceptual, &e.perceptual)] {
                for (i, t) in tensors.iter().enumerate() {
                    samples.entry(stream_id(kind, i)).or_default().extend(to_vectors(t).1);
                }
            }
        }
        Codebook::fit(&samples)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use gsc_core::tensor::Tensor;

    #[test]
    fn calibration_ranks() {
        let t = Tensor::f32(vec![16, 16], (0..256).map(|i| ((i * 31) % 17) as f32).collect()).unwrap();
        let small = Tensor::f32(vec![8, 8], (0..64).map(|i| (i % 5) as f32).collect()).unwrap();
        let e = Extraction {
            task: vec![t],
            perceptual: vec![small],
            ..Extraction::default()
        };
        let book = Codebook::calibrate(&[e.clone(), e]).unwrap();
        assert_eq!(book.ids().collect::<Vec<_>>(), ["perc0", "task0"]);
        assert_eq!(book.get("task0").unwrap().rank(), 8);
        assert_eq!(book.get("perc0").unwrap().rank(), 2);
        assert_eq!(book.get("task0").unwrap().dim(), 64);
    }
}
