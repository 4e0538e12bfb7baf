//! Systematic MDS codes over the reals, applied block-wise.
//!
//! A code with `k` message blocks and `r = 2t` parity blocks has generator
//! `G = [I_k | A]` (k × (k+r)) and parity check `H = [Aᵀ | -I_r]`. Every
//! operation acts on sequences of equal-length real vectors, i.e. it realises
//! `(Gᵀ ⊗ I_b)` and `(H ⊗ I_b)` without ever forming the Kronecker product.
//!
//! Decoding is an exhaustive search over error supports of size `1..=t`,
//! which is exact for the small `t` used in practice and never guesses: an
//! ambiguous minimal support is reported as [`DecodeStatus::Uncorrectable`].

use itertools::Itertools;
use thiserror::Error;

use crate::linalg::{self, Matrix};

/// Relative detection threshold on the syndrome.
pub const TOL_DETECT: f64 = 1e-8;
/// Relative acceptance threshold on a candidate support's residual.
pub const TOL_DECODE: f64 = 1e-6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CodecError {
    #[error("message block count must be at least 1")]
    EmptyMessage,
    #[error("parity matrix must have {expected} rows, got {got}")]
    ParityShape { expected: usize, got: usize },
    #[error("parity count must be even (r = 2t), got {0}")]
    OddParity(usize),
    #[error("parity matrix does not give an MDS code (singular {size}x{size} minor)")]
    NotMds { size: usize },
    #[error("expected {expected} blocks, got {got}")]
    BlockCount { expected: usize, got: usize },
    #[error("block {index} has length {got}, expected {expected}")]
    BlockLength { index: usize, expected: usize, got: usize },
    #[error("block index {0} out of range")]
    BadIndex(usize),
    #[error("the chosen blocks do not determine the message")]
    Singular,
}

/// Detection/decoding thresholds, both relative to `1 + max|word|`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    pub detect: f64,
    pub decode: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            detect: TOL_DETECT,
            decode: TOL_DECODE,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MdsCode {
    k: usize,
    r: usize,
    generator: Matrix,
    parity_check: Matrix,
    tol: Tolerances,
}

impl MdsCode {
    /// Cauchy-parity code: `A[i][j] = 1 / (x_i - y_j)` with `x_i = i + 1`,
    /// `y_j = -(j + 1)`. All square minors of a Cauchy matrix are nonzero,
    /// so `[I | A]` is MDS.
    pub fn cauchy(k: usize, t: usize) -> Result<Self, CodecError> {
        if k == 0 {
            return Err(CodecError::EmptyMessage);
        }
        let r = 2 * t;
        let parity = Matrix::from_fn(k, r, |i, j| {
            let x = (i + 1) as f64;
            let y = -((j + 1) as f64);
            1.0 / (x - y)
        });
        Ok(Self::assemble(parity))
    }

    /// Code with an explicit `k × r` parity part. The MDS property is
    /// checked by enumerating every square minor, so keep `k`, `r` small.
    pub fn with_parity(parity: Matrix) -> Result<Self, CodecError> {
        let (k, r) = parity.shape();
        if k == 0 {
            return Err(CodecError::EmptyMessage);
        }
        if r % 2 != 0 {
            return Err(CodecError::OddParity(r));
        }
        if let Some(size) = singular_minor(&parity) {
            return Err(CodecError::NotMds { size });
        }
        Ok(Self::assemble(parity))
    }

    fn assemble(parity: Matrix) -> Self {
        let (k, r) = parity.shape();
        let generator = Matrix::from_fn(k, k + r, |i, c| {
            if c < k {
                if i == c {
                    1.0
                } else {
                    0.0
                }
            } else {
                parity[(i, c - k)]
            }
        });
        let parity_check = parity_check_of(&generator, k);
        Self {
            k,
            r,
            generator,
            parity_check,
            tol: Tolerances::default(),
        }
    }

    pub fn with_tolerances(mut self, tol: Tolerances) -> Self {
        self.tol = tol;
        self
    }

    /// Message block count.
    pub fn k(&self) -> usize {
        self.k
    }

    /// Parity block count (`2t`).
    pub fn r(&self) -> usize {
        self.r
    }

    /// Correctable error count.
    pub fn t(&self) -> usize {
        self.r / 2
    }

    /// Codeword length in blocks.
    pub fn len(&self) -> usize {
        self.k + self.r
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn generator(&self) -> &Matrix {
        &self.generator
    }

    pub fn parity_check(&self) -> &Matrix {
        &self.parity_check
    }

    pub fn tolerances(&self) -> Tolerances {
        self.tol
    }

    /// Coefficient of message block `u` in codeword block `i`.
    #[inline]
    pub fn coeff(&self, u: usize, i: usize) -> f64 {
        self.generator[(u, i)]
    }

    /// Codeword block `index` as a linear combination of message slices.
    pub fn encode_one(&self, index: usize, message: &[&[f64]]) -> Vec<f64> {
        assert_eq!(message.len(), self.k, "message block count");
        assert!(index < self.len(), "codeword index out of range");
        if index < self.k {
            return message[index].to_vec();
        }
        let mut out = vec![0.0; message[0].len()];
        for (u, m) in message.iter().enumerate() {
            let c = self.coeff(u, index);
            if c != 0.0 {
                linalg::axpy(c, m, &mut out);
            }
        }
        out
    }

    /// Block `i` of the result is `Σ_u G[u][i] · message_u`; the first `k`
    /// blocks are copies of the message.
    pub fn encode(&self, message: &[Vec<f64>]) -> Result<BlockVector, CodecError> {
        if message.len() != self.k {
            return Err(CodecError::BlockCount {
                expected: self.k,
                got: message.len(),
            });
        }
        let b = message[0].len();
        check_lengths(message, b)?;
        let refs: Vec<&[f64]> = message.iter().map(Vec::as_slice).collect();
        let blocks = (0..self.len()).map(|i| self.encode_one(i, &refs)).collect();
        Ok(BlockVector { blocks, block_len: b })
    }

    /// The `r` syndrome blocks `(H ⊗ I) word`.
    pub fn syndrome(&self, word: &BlockVector) -> Result<Vec<Vec<f64>>, CodecError> {
        self.check_word(word)?;
        Ok(self.syndrome_unchecked(&word.blocks, word.block_len))
    }

    fn syndrome_unchecked(&self, blocks: &[Vec<f64>], b: usize) -> Vec<Vec<f64>> {
        (0..self.r)
            .map(|q| {
                let mut s = vec![0.0; b];
                for (i, blk) in blocks.iter().enumerate() {
                    let h = self.parity_check[(q, i)];
                    if h != 0.0 {
                        linalg::axpy(h, blk, &mut s);
                    }
                }
                s
            })
            .collect()
    }

    /// `1 + max|word|`, the scale both thresholds are relative to.
    pub fn scale_of(word: &BlockVector) -> f64 {
        1.0 + word.blocks.iter().map(|b| linalg::max_abs(b)).fold(0.0, f64::max)
    }

    /// True when the syndrome exceeds the detection threshold.
    pub fn detects_error(&self, word: &BlockVector) -> Result<bool, CodecError> {
        let syn = self.syndrome(word)?;
        Ok(self.syndrome_fires(&syn, Self::scale_of(word)))
    }

    fn syndrome_fires(&self, syn: &[Vec<f64>], scale: f64) -> bool {
        let m = syn.iter().map(|s| linalg::max_abs(s)).fold(0.0, f64::max);
        m > self.tol.detect * scale
    }

    /// Clean / Corrected / Uncorrectable classification with the decoded
    /// message. Only malformed input is an `Err`.
    pub fn decode(&self, word: &BlockVector) -> Result<DecodeOutcome, CodecError> {
        self.check_word(word)?;
        let b = word.block_len;
        let scale = Self::scale_of(word);
        let syn = self.syndrome_unchecked(&word.blocks, b);
        if self.r == 0 || !self.syndrome_fires(&syn, scale) {
            return Ok(DecodeOutcome {
                status: DecodeStatus::Clean,
                message: Some(word.blocks[..self.k].to_vec()),
                error_locations: Vec::new(),
            });
        }

        // r × b right-hand side, one column per block coordinate.
        let rhs = Matrix::from_fn(self.r, b, |q, c| syn[q][c]);
        for size in 1..=self.t() {
            let mut consistent = Vec::new();
            for support in (0..self.len()).combinations(size) {
                let h_s = self.parity_check.select_columns(&support);
                let Some(e) = linalg::least_squares(&h_s, &rhs) else {
                    continue;
                };
                let fitted = h_s.matmul(&e);
                let resid = linalg::max_abs_diff(fitted.as_slice(), rhs.as_slice());
                if resid <= self.tol.decode * scale {
                    consistent.push(support);
                    if consistent.len() > 1 {
                        break;
                    }
                }
            }
            match consistent.len() {
                0 => continue,
                1 => {
                    let support = consistent.pop().unwrap();
                    let refs: Vec<&[f64]> = word.blocks.iter().map(Vec::as_slice).collect();
                    let message = self.recover_excluding(&refs, &support)?;
                    return Ok(DecodeOutcome {
                        status: DecodeStatus::Corrected,
                        message: Some(message),
                        error_locations: support,
                    });
                }
                _ => break,
            }
        }
        Ok(DecodeOutcome {
            status: DecodeStatus::Uncorrectable,
            message: None,
            error_locations: Vec::new(),
        })
    }

    /// Message from the first `k` codeword blocks whose index is not in
    /// `exclude`.
    pub fn recover_excluding(&self, blocks: &[&[f64]], exclude: &[usize]) -> Result<Vec<Vec<f64>>, CodecError> {
        if blocks.len() != self.len() {
            return Err(CodecError::BlockCount {
                expected: self.len(),
                got: blocks.len(),
            });
        }
        let chosen: Vec<usize> = (0..self.len()).filter(|i| !exclude.contains(i)).take(self.k).collect();
        if chosen.len() < self.k {
            return Err(CodecError::Singular);
        }
        let avail: Vec<(usize, &[f64])> = chosen.iter().map(|&i| (i, blocks[i])).collect();
        self.recover_message(&avail)
    }

    /// Erasure decoding: the message from exactly `k` known codeword blocks
    /// given as `(index, block)`. Systematic blocks pass through unchanged.
    pub fn recover_message(&self, available: &[(usize, &[f64])]) -> Result<Vec<Vec<f64>>, CodecError> {
        if available.len() != self.k {
            return Err(CodecError::BlockCount {
                expected: self.k,
                got: available.len(),
            });
        }
        let b = available[0].1.len();
        for (pos, &(idx, blk)) in available.iter().enumerate() {
            if idx >= self.len() {
                return Err(CodecError::BadIndex(idx));
            }
            if blk.len() != b {
                return Err(CodecError::BlockLength {
                    index: pos,
                    expected: b,
                    got: blk.len(),
                });
            }
        }
        // Known systematic blocks are copied; only the missing message blocks
        // are solved for, from the parity blocks with the known part removed.
        let mut message: Vec<Option<Vec<f64>>> = vec![None; self.k];
        let mut parity = Vec::new();
        for &(idx, blk) in available {
            if idx < self.k {
                if message[idx].is_some() {
                    return Err(CodecError::Singular);
                }
                message[idx] = Some(blk.to_vec());
            } else {
                parity.push((idx, blk));
            }
        }
        let unknown: Vec<usize> = (0..self.k).filter(|&u| message[u].is_none()).collect();
        if !unknown.is_empty() {
            let sys = Matrix::from_fn(unknown.len(), unknown.len(), |a, c| self.coeff(unknown[c], parity[a].0));
            let mut rhs = Matrix::zeros(unknown.len(), b);
            for (a, &(p, blk)) in parity.iter().enumerate() {
                let row = rhs.row_mut(a);
                row.copy_from_slice(blk);
                for (u, m) in message.iter().enumerate() {
                    if let Some(m) = m {
                        linalg::axpy(-self.coeff(u, p), m, row);
                    }
                }
            }
            let sol = linalg::solve(&sys, &rhs).ok_or(CodecError::Singular)?;
            for (a, &u) in unknown.iter().enumerate() {
                message[u] = Some(sol.row(a).to_vec());
            }
        }
        Ok(message.into_iter().map(|m| m.expect("all blocks solved")).collect())
    }

    fn check_word(&self, word: &BlockVector) -> Result<(), CodecError> {
        if word.blocks.len() != self.len() {
            return Err(CodecError::BlockCount {
                expected: self.len(),
                got: word.blocks.len(),
            });
        }
        check_lengths(&word.blocks, word.block_len)
    }
}

/// `H = [Aᵀ | -I_r]` for a systematic generator `[I_k | A]`.
pub fn parity_check_of(generator: &Matrix, k: usize) -> Matrix {
    let r = generator.cols() - k;
    Matrix::from_fn(r, k + r, |q, c| {
        if c < k {
            generator[(c, k + q)]
        } else if c - k == q {
            -1.0
        } else {
            0.0
        }
    })
}

fn check_lengths(blocks: &[Vec<f64>], b: usize) -> Result<(), CodecError> {
    for (index, blk) in blocks.iter().enumerate() {
        if blk.len() != b {
            return Err(CodecError::BlockLength {
                index,
                expected: b,
                got: blk.len(),
            });
        }
    }
    Ok(())
}

/// Size of the first singular square minor of `a`, if any.
fn singular_minor(a: &Matrix) -> Option<usize> {
    let (k, r) = a.shape();
    for size in 1..=k.min(r) {
        for rows in (0..k).combinations(size) {
            for cols in (0..r).combinations(size) {
                let sub = Matrix::from_fn(size, size, |i, j| a[(rows[i], cols[j])]);
                if linalg::rank(&sub, 1e-12) < size {
                    return Some(size);
                }
            }
        }
    }
    None
}

/// A codeword-shaped sequence of equal-length real blocks.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockVector {
    blocks: Vec<Vec<f64>>,
    block_len: usize,
}

impl BlockVector {
    pub fn new(blocks: Vec<Vec<f64>>) -> Result<Self, CodecError> {
        let block_len = blocks.first().map_or(0, Vec::len);
        check_lengths(&blocks, block_len)?;
        Ok(Self { blocks, block_len })
    }

    pub fn blocks(&self) -> &[Vec<f64>] {
        &self.blocks
    }

    pub fn blocks_mut(&mut self) -> &mut [Vec<f64>] {
        &mut self.blocks
    }

    pub fn block_len(&self) -> usize {
        self.block_len
    }

    pub fn into_blocks(self) -> Vec<Vec<f64>> {
        self.blocks
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DecodeStatus {
    Clean,
    Corrected,
    Uncorrectable,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecodeOutcome {
    pub status: DecodeStatus,
    /// The `k` message blocks; `None` when uncorrectable.
    pub message: Option<Vec<Vec<f64>>>,
    /// Flagged codeword block indices, sorted.
    pub error_locations: Vec<usize>,
}

/// Tallies of [`correction_trials`].
#[derive(Debug, Clone, Copy, PartialEq, Default, serde::Serialize)]
pub struct TrialStats {
    pub trials: u64,
    /// Words with `1..=t` corrupted blocks decoded to the true message.
    pub corrected: u64,
    /// Largest relative message error among those.
    pub max_rel_error: f64,
    /// Words with `t + 1` corrupted blocks whose syndrome fired.
    pub over_detected: u64,
    pub over_uncorrectable: u64,
    /// `t + 1` corruptions that still decoded to the true message.
    pub over_corrected_to_truth: u64,
    /// `t + 1` corruptions decoded to a wrong message.
    pub over_silent: u64,
}

impl TrialStats {
    pub fn all_pass(&self, tol: f64) -> bool {
        self.corrected == self.trials
            && self.max_rel_error <= tol
            && self.over_detected == self.trials
            && self.over_silent == 0
    }
}

/// Random messages with block length `b`: each trial corrupts `1..=t`
/// random blocks of one codeword with Gaussian noise and `t + 1` blocks of
/// another.
pub fn correction_trials(code: &MdsCode, b: usize, trials: u64, seed: u64) -> TrialStats {
    use rand::seq::index::sample;
    use rand::{Rng, SeedableRng};
    use rand_distr::{Distribution, StandardNormal};

    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut stats = TrialStats {
        trials,
        ..TrialStats::default()
    };
    let len = code.len();
    let rel = |got: &[Vec<f64>], want: &[Vec<f64>]| {
        let scale = 1.0 + want.iter().map(|v| linalg::max_abs(v)).fold(0.0, f64::max);
        got.iter()
            .zip(want)
            .map(|(g, w)| linalg::max_abs_diff(g, w))
            .fold(0.0, f64::max)
            / scale
    };
    for _ in 0..trials {
        let msg: Vec<Vec<f64>> = (0..code.k())
            .map(|_| (0..b).map(|_| rng.random_range(-1.0..1.0)).collect())
            .collect();
        let clean = code.encode(&msg).expect("well-formed message");
        let corrupt = |count: usize, rng: &mut rand_chacha::ChaCha8Rng| {
            let mut word = clean.clone();
            for i in sample(rng, len, count.min(len)) {
                for v in &mut word.blocks_mut()[i] {
                    let e: f64 = StandardNormal.sample(rng);
                    *v += e;
                }
            }
            word
        };
        if code.t() > 0 {
            let count = rng.random_range(1..=code.t());
            let word = corrupt(count, &mut rng);
            let out = code.decode(&word).expect("well-formed word");
            if out.status == DecodeStatus::Corrected {
                let e = rel(out.message.as_deref().unwrap_or_default(), &msg);
                stats.max_rel_error = stats.max_rel_error.max(e);
                stats.corrected += 1;
            }
        } else {
            stats.corrected += 1;
        }
        let word = corrupt(code.t() + 1, &mut rng);
        if code.detects_error(&word).expect("well-formed word") {
            stats.over_detected += 1;
        }
        let out = code.decode(&word).expect("well-formed word");
        match out.status {
            DecodeStatus::Uncorrectable => stats.over_uncorrectable += 1,
            _ => {
                let m = out.message.expect("decoded message");
                if rel(&m, &msg) <= 1e-9 {
                    stats.over_corrected_to_truth += 1;
                } else {
                    stats.over_silent += 1;
                }
            }
        }
    }
    stats
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    fn toy_row_code() -> MdsCode {
        MdsCode::with_parity(Matrix::from_rows(&[[1.0, 1.0], [1.0, -1.0]])).unwrap()
    }

    fn toy_col_code() -> MdsCode {
        MdsCode::with_parity(Matrix::from_rows(&[[1.0, 1.0], [1.0, 2.0]])).unwrap()
    }

    fn randn(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
        (0..n).map(|_| rng.sample(StandardNormal)).collect()
    }

    #[test]
    fn explicit_parity_reproduces_toy_generator() {
        let g = toy_row_code();
        let expected = Matrix::from_rows(&[[1.0, 0.0, 1.0, 1.0], [0.0, 1.0, 1.0, -1.0]]);
        assert_eq!(g.generator(), &expected);
    }

    #[test]
    fn no_redundancy_code_is_identity() {
        let c = MdsCode::cauchy(3, 0).unwrap();
        assert_eq!(c.generator(), &Matrix::identity(3));
        assert_eq!(c.parity_check().shape(), (0, 3));
    }

    #[test]
    fn rejects_empty_message_and_non_mds_parity() {
        assert_eq!(MdsCode::cauchy(0, 1), Err(CodecError::EmptyMessage));
        let bad = Matrix::from_rows(&[[1.0, 2.0], [2.0, 4.0]]);
        assert_eq!(MdsCode::with_parity(bad), Err(CodecError::NotMds { size: 2 }));
        let odd = Matrix::from_rows(&[[1.0], [1.0]]);
        assert_eq!(MdsCode::with_parity(odd), Err(CodecError::OddParity(1)));
    }

    #[test]
    fn toy_parity_check_matches_hand_computation() {
        let h = toy_row_code().parity_check().clone();
        let expected = Matrix::from_rows(&[[1.0, 1.0, -1.0, 0.0], [1.0, -1.0, 0.0, -1.0]]);
        assert_eq!(h, expected);
        let g = toy_row_code().generator().clone();
        assert_eq!(h.matmul(&g.transpose()).max_abs(), 0.0);
    }

    #[test]
    fn cauchy_parity_check_annihilates_generator() {
        let c = MdsCode::cauchy(3, 1).unwrap();
        let prod = c.parity_check().matmul(&c.generator().transpose());
        assert!(prod.max_abs() <= 1e-12);
        assert_eq!(linalg::rank(c.parity_check(), 1e-12), 2);
    }

    #[test]
    fn toy_column_code_encodes_vectors() {
        let c = toy_col_code();
        let x0 = vec![1.0, 2.0];
        let x1 = vec![-3.0, 0.5];
        let w = c.encode(&[x0.clone(), x1.clone()]).unwrap();
        assert_eq!(w.blocks()[0], x0);
        assert_eq!(w.blocks()[1], x1);
        assert_eq!(w.blocks()[2], vec![-2.0, 2.5]);
        assert_eq!(w.blocks()[3], vec![-5.0, 3.0]);
    }

    #[test]
    fn encode_rejects_ragged_message() {
        let c = MdsCode::cauchy(2, 1).unwrap();
        let err = c.encode(&[vec![1.0, 2.0], vec![1.0]]).unwrap_err();
        assert!(matches!(err, CodecError::BlockLength { index: 1, .. }));
    }

    #[test]
    fn zero_message_gives_zero_codeword() {
        let c = MdsCode::cauchy(3, 1).unwrap();
        let w = c.encode(&vec![vec![0.0; 4]; 3]).unwrap();
        assert!(w.blocks().iter().flatten().all(|&v| v == 0.0));
    }

    #[test]
    fn toy_single_error_is_located_and_corrected() {
        let c = toy_row_code();
        let s0 = vec![0.3, -1.2, 2.0];
        let s1 = vec![1.5, 0.25, -0.75];
        let mut w = c.encode(&[s0.clone(), s1.clone()]).unwrap();
        let e1 = [0.7, -2.1, 0.4];
        for (v, e) in w.blocks_mut()[1].iter_mut().zip(e1) {
            *v += e;
        }
        // "Is s0 + s1 + e1 = s~2?" fails.
        assert!(c.detects_error(&w).unwrap());
        let out = c.decode(&w).unwrap();
        assert_eq!(out.status, DecodeStatus::Corrected);
        assert_eq!(out.error_locations, vec![1]);
        let msg = out.message.unwrap();
        assert_eq!(msg[0], s0);
        // s1 = s~2 - s0 exactly.
        let via_parity: Vec<f64> = w.blocks()[2].iter().zip(&s0).map(|(a, b)| a - b).collect();
        assert_eq!(msg[1], via_parity);
        assert!(linalg::max_abs_diff(&msg[1], &s1) < 1e-15);
    }

    #[test]
    fn injected_noise_syndrome_is_column_of_h_times_noise() {
        let c = MdsCode::cauchy(3, 1).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let msg: Vec<Vec<f64>> = (0..3).map(|_| randn(&mut rng, 5)).collect();
        let mut w = c.encode(&msg).unwrap();
        let e = randn(&mut rng, 5);
        let idx = 3;
        for (v, ei) in w.blocks_mut()[idx].iter_mut().zip(&e) {
            *v += ei;
        }
        let syn = c.syndrome(&w).unwrap();
        for (q, sq) in syn.iter().enumerate() {
            let expected: Vec<f64> = e.iter().map(|v| c.parity_check()[(q, idx)] * v).collect();
            assert!(linalg::max_abs_diff(sq, &expected) < 1e-12);
        }
    }

    #[test]
    fn t_zero_always_clean() {
        let c = MdsCode::cauchy(2, 0).unwrap();
        let w = BlockVector::new(vec![vec![1.0, 9.0], vec![-4.0, 2.0]]).unwrap();
        let out = c.decode(&w).unwrap();
        assert_eq!(out.status, DecodeStatus::Clean);
        assert_eq!(out.message.unwrap(), w.blocks().to_vec());
    }

    #[test]
    fn decode_rejects_wrong_block_count() {
        let c = MdsCode::cauchy(2, 1).unwrap();
        let w = BlockVector::new(vec![vec![1.0]; 3]).unwrap();
        assert_eq!(c.decode(&w), Err(CodecError::BlockCount { expected: 4, got: 3 }));
    }

    #[test]
    fn erasure_recovery_from_parity_blocks() {
        let c = MdsCode::cauchy(3, 2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let msg: Vec<Vec<f64>> = (0..3).map(|_| randn(&mut rng, 4)).collect();
        let w = c.encode(&msg).unwrap();
        let avail: Vec<(usize, &[f64])> = [6, 1, 4].iter().map(|&i| (i, w.blocks()[i].as_slice())).collect();
        let rec = c.recover_message(&avail).unwrap();
        for (a, b) in rec.iter().zip(&msg) {
            assert!(linalg::max_abs_diff(a, b) < 1e-10);
        }
    }
}
