//! K-nearest-neighbor detector under Hamming distance.
//!
//! Training rows are bit-packed into `u64` words so a distance is a handful
//! of XOR + popcount operations. Neighbor ties at equal distance resolve to
//! the lower training index, which makes predictions order-independent and
//! exactly reproducible by a brute-force scan.

use alloc::vec;
use alloc::vec::Vec;

use crate::dataset::LabeledDataset;
use crate::error::{Error, Result};
use crate::matrix::Matrix;

use super::HyperParams;

#[derive(Debug, Clone, PartialEq)]
pub struct KnnClassifier {
    pub k: usize,
    pub num_features: usize,
    words_per_row: usize,
    packed: Vec<u64>,
    labels: Vec<u8>,
}

fn pack_row(row: &[f64], words: usize, out: &mut [u64]) {
    out[..words].iter_mut().for_each(|w| *w = 0);
    for (j, &v) in row.iter().enumerate() {
        if v > 0.5 {
            out[j / 64] |= 1u64 << (j % 64);
        }
    }
}

impl KnnClassifier {
    pub fn fit(params: &HyperParams, data: &LabeledDataset) -> Result<Self> {
        if params.knn_k == 0 || params.knn_k > data.len() {
            return Err(Error::InvalidParam {
                name: "knn_k",
                reason: "must be between 1 and the number of training rows",
            });
        }
        let m = data.num_features();
        let words_per_row = m.div_ceil(64);
        let x = data.features();
        let mut packed = vec![0u64; data.len() * words_per_row];
        for i in 0..data.len() {
            pack_row(x.row(i), words_per_row, &mut packed[i * words_per_row..]);
        }
        Ok(KnnClassifier {
            k: params.knn_k,
            num_features: m,
            words_per_row,
            packed,
            labels: data.labels().to_vec(),
        })
    }

    /// Internal storage, exposed for serialization:
    /// (words_per_row, packed bit rows, labels).
    pub fn storage(&self) -> (usize, &[u64], &[u8]) {
        (self.words_per_row, &self.packed, &self.labels)
    }

    /// Rebuilds a classifier from previously captured storage, validating
    /// the packing geometry.
    pub fn from_storage(
        k: usize,
        num_features: usize,
        words_per_row: usize,
        packed: Vec<u64>,
        labels: Vec<u8>,
    ) -> Result<Self> {
        if words_per_row != num_features.div_ceil(64) {
            return Err(Error::InvalidParam {
                name: "words_per_row",
                reason: "does not match the feature width",
            });
        }
        if packed.len() != labels.len() * words_per_row {
            return Err(Error::InvalidParam {
                name: "packed",
                reason: "length must be rows * words_per_row",
            });
        }
        if k == 0 || k > labels.len() {
            return Err(Error::InvalidParam {
                name: "knn_k",
                reason: "must be between 1 and the number of training rows",
            });
        }
        Ok(KnnClassifier {
            k,
            num_features,
            words_per_row,
            packed,
            labels,
        })
    }

    fn neighbors(&self, query: &[u64]) -> Vec<(u32, usize)> {
        // Fixed-size best list kept sorted by (distance, index); scanning
        // indices in order makes the tie rule fall out of the strict
        // comparison.
        let mut best: Vec<(u32, usize)> = Vec::with_capacity(self.k);
        let n = self.labels.len();
        for i in 0..n {
            let row = &self.packed[i * self.words_per_row..(i + 1) * self.words_per_row];
            let dist: u32 = row.iter().zip(query).map(|(a, b)| (a ^ b).count_ones()).sum();
            if best.len() < self.k {
                let pos = best.partition_point(|&(d, _)| d <= dist);
                best.insert(pos, (dist, i));
            } else if dist < best[self.k - 1].0 {
                best.pop();
                let pos = best.partition_point(|&(d, _)| d <= dist);
                best.insert(pos, (dist, i));
            }
        }
        best
    }

    /// Fraction of malicious rows among the k nearest training rows.
    pub fn predict_proba(&self, x: &Matrix) -> Vec<f64> {
        let mut query = vec![0u64; self.words_per_row];
        (0..x.rows())
            .map(|r| {
                pack_row(x.row(r), self.words_per_row, &mut query);
                let hits = self
                    .neighbors(&query)
                    .iter()
                    .filter(|&&(_, i)| self.labels[i] == 1)
                    .count();
                hits as f64 / self.k as f64
            })
            .collect()
    }
}
