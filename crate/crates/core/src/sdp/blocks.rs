//! Block-diagonal Hermitian operators on `B ⊗ A`.
//!
//! A map whose Kraus operators each shift the basis label by a fixed amount
//! (`⟨b|K|a⟩ ≠ 0` only for `b − a = c_K`) has a Choi matrix that commutes with
//! `q_B ⊗ 1 − 1 ⊗ q_A`, `q` the basis label. Its Choi matrix then splits into
//! sectors `{(b, a) : b − a = c}`, and the optimal probe marginal can be taken
//! diagonal. Attenuators, diagonal unitaries and their differences are of
//! this type.

use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

use crate::error::{EcdError, Result};
use crate::matrix::{c, ComplexMatrix, HermitianMatrix, C64};
use crate::quantum::HermitianPreservingMap;

/// Largest `d_A · d_B` for which a dense Choi matrix is formed.
pub const DENSE_CHOI_CAP: usize = 2048;

/// One diagonal block: `indices` are positions in the `B ⊗ A` basis
/// (`b · d_A + a`), `matrix` the restriction to them.
#[derive(Clone, Debug, PartialEq)]
pub struct Block {
    pub indices: Vec<usize>,
    pub matrix: HermitianMatrix,
}

/// Block-diagonal Hermitian matrix; entries outside the blocks are zero.
#[derive(Clone, Debug, PartialEq)]
pub struct BlockHermitian {
    pub dim: usize,
    pub blocks: Vec<Block>,
}

impl BlockHermitian {
    pub fn dense(m: HermitianMatrix) -> Self {
        let dim = m.dim();
        Self { dim, blocks: vec![Block { indices: (0..dim).collect(), matrix: m }] }
    }

    pub fn to_dense(&self) -> HermitianMatrix {
        let mut out = ComplexMatrix::zeros(self.dim, self.dim);
        for b in &self.blocks {
            for (i, &gi) in b.indices.iter().enumerate() {
                for (j, &gj) in b.indices.iter().enumerate() {
                    out.set(gi, gj, b.matrix.get(i, j));
                }
            }
        }
        out.hermitian_part()
    }

    pub fn max_abs(&self) -> f64 {
        self.blocks.iter().fold(0.0, |m, b| m.max(b.matrix.matrix().max_abs()))
    }

    /// `tr_B` of the operator, as a `d_A × d_A` matrix.
    pub fn partial_trace_output(&self, dim_in: usize) -> HermitianMatrix {
        let mut out = ComplexMatrix::zeros(dim_in, dim_in);
        for b in &self.blocks {
            for (i, &gi) in b.indices.iter().enumerate() {
                for (j, &gj) in b.indices.iter().enumerate() {
                    if gi / dim_in == gj / dim_in {
                        let (a, a2) = (gi % dim_in, gj % dim_in);
                        out.set(a, a2, out.get(a, a2) + b.matrix.get(i, j));
                    }
                }
            }
        }
        out.hermitian_part()
    }

    pub fn is_single_block(&self) -> bool {
        self.blocks.len() == 1 && self.blocks[0].indices.len() == self.dim
    }
}

/// Sector label `b − a` of a basis index.
fn sector_of(index: usize, dim_in: usize) -> i64 {
    (index / dim_in) as i64 - (index % dim_in) as i64
}

/// Choi matrix of `delta` in block form. Returns `(choi, structured)` where
/// `structured` means the sector decomposition holds.
pub fn choi_blocks(delta: &HermitianPreservingMap) -> Result<(BlockHermitian, bool)> {
    let (di, dout) = (delta.dim_in(), delta.dim_out());
    let n = di * dout;

    // per-Kraus sector test
    let mut per_kraus: Vec<(f64, Vec<C64>, i64)> = Vec::new();
    let mut all_single = true;
    'outer: for (w, m) in delta.terms() {
        for k in m.kraus() {
            let v = k.to_row_major();
            let mut sector = None;
            for (idx, z) in v.iter().enumerate() {
                if *z != C64::default() {
                    let s = sector_of(idx, di);
                    match sector {
                        None => sector = Some(s),
                        Some(t) if t != s => {
                            all_single = false;
                            break 'outer;
                        }
                        _ => {}
                    }
                }
            }
            if let Some(s) = sector {
                per_kraus.push((*w, v, s));
            }
        }
    }

    if all_single {
        let mut grouped: BTreeMap<i64, Vec<(f64, Vec<C64>)>> = BTreeMap::new();
        for (w, v, s) in per_kraus {
            grouped.entry(s).or_default().push((w, v));
        }
        let mut blocks = Vec::new();
        for (s, vecs) in grouped {
            let indices: Vec<usize> = (0..n).filter(|&i| sector_of(i, di) == s).collect();
            let m = indices.len();
            let mut acc = ComplexMatrix::zeros(m, m);
            for (w, v) in vecs {
                let sub: Vec<C64> = indices.iter().map(|&i| v[i]).collect();
                for i in 0..m {
                    if sub[i] == C64::default() {
                        continue;
                    }
                    for j in 0..m {
                        acc.set(i, j, acc.get(i, j) + sub[i] * sub[j].conj() * w);
                    }
                }
            }
            blocks.push(Block { indices, matrix: acc.hermitian_part() });
        }
        return Ok((BlockHermitian { dim: n, blocks }, true));
    }

    if n > DENSE_CHOI_CAP {
        return Err(EcdError::Capacity { dim: n, budget: DENSE_CHOI_CAP });
    }
    let j = delta.choi();
    Ok(split_dense(&j, di))
}

/// Splits a dense Choi matrix into sectors when its off-sector entries vanish.
pub fn split_dense(j: &HermitianMatrix, dim_in: usize) -> (BlockHermitian, bool) {
    let n = j.dim();
    let scale = j.matrix().max_abs().max(1e-300);
    let mut structured = true;
    'check: for r in 0..n {
        for col in 0..n {
            if sector_of(r, dim_in) != sector_of(col, dim_in) && j.get(r, col).norm() > 1e-13 * scale {
                structured = false;
                break 'check;
            }
        }
    }
    if !structured {
        return (BlockHermitian::dense(j.clone()), false);
    }
    let mut sectors: BTreeMap<i64, Vec<usize>> = BTreeMap::new();
    for i in 0..n {
        sectors.entry(sector_of(i, dim_in)).or_default().push(i);
    }
    let blocks = sectors
        .into_values()
        .filter_map(|indices| {
            let m = indices.len();
            let sub = ComplexMatrix::from_fn(m, m, |a, b| j.get(indices[a], indices[b]));
            if sub.max_abs() == 0.0 {
                None
            } else {
                Some(Block { indices, matrix: sub.hermitian_part() })
            }
        })
        .collect();
    (BlockHermitian { dim: n, blocks }, true)
}

/// Serialized matrix: rows of `[re, im]` pairs.
pub type MatrixJson = Vec<Vec<[f64; 2]>>;

pub fn matrix_to_json(m: &ComplexMatrix) -> MatrixJson {
    (0..m.rows()).map(|i| (0..m.cols()).map(|j| [m.get(i, j).re, m.get(i, j).im]).collect()).collect()
}

pub fn matrix_from_json(rows: &MatrixJson) -> Result<ComplexMatrix> {
    let r = rows.len();
    let cols = rows.first().map_or(0, |x| x.len());
    if rows.iter().any(|x| x.len() != cols) {
        return Err(EcdError::DimensionMismatch("ragged matrix rows".into()));
    }
    ComplexMatrix::from_row_major(r, cols, rows.iter().flatten().map(|p| c(p[0], p[1])).collect())
}

/// Serde adapter for a `HermitianMatrix` field stored as [`MatrixJson`].
pub mod hermitian_json {
    use super::*;

    pub fn serialize<S: serde::Serializer>(m: &HermitianMatrix, s: S) -> std::result::Result<S::Ok, S::Error> {
        matrix_to_json(m.matrix()).serialize(s)
    }

    pub fn deserialize<'de, D: serde::Deserializer<'de>>(d: D) -> std::result::Result<HermitianMatrix, D::Error> {
        use serde::de::Error;
        let rows = MatrixJson::deserialize(d)?;
        let m = matrix_from_json(&rows).map_err(D::Error::custom)?;
        HermitianMatrix::new(m).map_err(D::Error::custom)
    }
}

#[derive(Serialize, Deserialize)]
struct BlockJson {
    indices: Vec<usize>,
    matrix: MatrixJson,
}

#[derive(Serialize, Deserialize)]
struct BlockHermitianJson {
    dim: usize,
    blocks: Vec<BlockJson>,
}

impl Serialize for BlockHermitian {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        BlockHermitianJson {
            dim: self.dim,
            blocks: self
                .blocks
                .iter()
                .map(|b| BlockJson { indices: b.indices.clone(), matrix: matrix_to_json(b.matrix.matrix()) })
                .collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for BlockHermitian {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error;
        let raw = BlockHermitianJson::deserialize(d)?;
        let mut blocks = Vec::with_capacity(raw.blocks.len());
        for b in raw.blocks {
            let m = matrix_from_json(&b.matrix).map_err(D::Error::custom)?;
            if m.rows() != b.indices.len() {
                return Err(D::Error::custom("block size does not match its index list"));
            }
            blocks.push(Block { indices: b.indices, matrix: HermitianMatrix::new(m).map_err(D::Error::custom)? });
        }
        Ok(BlockHermitian { dim: raw.dim, blocks })
    }
}
