//! Finite-N realizations: Bernoulli adjacency matrices, their shifted and
//! rescaled versions, and synthetic Wigner-type noise with a spike.
//!
//! Every row `i` of the upper triangle draws from its own ChaCha8 stream
//! keyed by `(master_seed, stream_id)` with stream number `i`, so a matrix
//! does not depend on the order in which rows are filled.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result, SpecError};
use crate::model::{validate_spec, GsbmSpec, NoiseKind, SbmParams};

pub use crate::matrix::SymMatrix;

/// Identifies one reproducible random matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SampleSeed {
    pub master_seed: u64,
    pub stream_id: u64,
}

impl SampleSeed {
    pub fn new(master_seed: u64, stream_id: u64) -> Self {
        SampleSeed {
            master_seed,
            stream_id,
        }
    }

    fn row_rng(&self, domain: u64, row: usize) -> ChaCha8Rng {
        let mut key = [0u8; 32];
        key[..8].copy_from_slice(&self.master_seed.to_le_bytes());
        key[8..16].copy_from_slice(&self.stream_id.to_le_bytes());
        key[16..24].copy_from_slice(&domain.to_le_bytes());
        let mut rng = ChaCha8Rng::from_seed(key);
        rng.set_stream(row as u64);
        rng
    }
}

// Separate key domains so the adjacency and noise samplers never share draws.
const DOMAIN_ADJACENCY: u64 = 1;
const DOMAIN_NOISE: u64 = 2;

fn fill_rows(n: usize, seed: SampleSeed, domain: u64, mut entry: impl FnMut(&mut ChaCha8Rng, usize, usize) -> f64) -> SymMatrix {
    let rows = (0..n)
        .map(|i| {
            let mut rng = seed.row_rng(domain, i);
            (i..n).map(|j| entry(&mut rng, i, j)).collect()
        })
        .collect();
    SymMatrix::from_upper_rows(n, rows)
}

/// Samples the 0/1 adjacency matrix of a two-block Bernoulli model.
///
/// Only structural validity is required, so degenerate probabilities such as
/// `q ∈ {0, 1}` are allowed here.
pub fn sample_sbm_adjacency(params: &SbmParams, seed: SampleSeed) -> Result<SymMatrix> {
    params.validate_structure()?;
    let n1 = params.n1;
    Ok(fill_rows(params.n, seed, DOMAIN_ADJACENCY, |rng, i, j| {
        if i == j && params.zero_diagonal {
            return 0.0;
        }
        let p = match (i < n1, j < n1) {
            (true, true) => params.p1,
            (false, false) => params.p2,
            _ => params.q,
        };
        if rng.random::<f64>() < p {
            1.0
        } else {
            0.0
        }
    }))
}

/// `scale · (adj − E)` with `E` the model's constant shift matrix.
pub fn shift_and_rescale(adj: &SymMatrix, params: &SbmParams) -> Result<SymMatrix> {
    if adj.dim() != params.n {
        return Err(Error::DimensionMismatch {
            expected: params.n,
            found: adj.dim(),
        });
    }
    let scale = params.scale()?;
    let shift = params.shift_matrix().value;
    Ok(adj.map(|a| scale * (a - shift)))
}

/// Convenience pipeline: sample the adjacency matrix, then shift and rescale.
pub fn sample_shifted_sbm(params: &SbmParams, seed: SampleSeed) -> Result<SymMatrix> {
    params.validate()?;
    let adj = sample_sbm_adjacency(params, seed)?;
    shift_and_rescale(&adj, params)
}

/// Block-constant spike vector of a spec with `n` set, renormalized to unit
/// length when `γ n` is not an integer.
pub fn spike_vector(spec: &GsbmSpec) -> Result<Vec<f64>> {
    let n = spec
        .n
        .ok_or_else(|| Error::InvalidArgument("spec has no dimension n".into()))?;
    let n1 = spec.n1().expect("n is set");
    let mut u: Vec<f64> = (0..n)
        .map(|i| if i < n1 { spec.theta1 } else { spec.theta2 })
        .collect();
    let norm = u.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm == 0.0 {
        return Err(SpecError::Normalization(0.0).into());
    }
    if (norm - 1.0).abs() > 1e-12 {
        log::warn!("spike vector has norm {norm}; renormalizing");
        u.iter_mut().for_each(|x| *x /= norm);
    }
    Ok(u)
}

/// One realization `M = H + λ u uᵀ`.
#[derive(Debug, Clone)]
pub struct GsbmSample {
    pub m: SymMatrix,
    pub h: SymMatrix,
    pub u: Vec<f64>,
}

/// Samples a GSBM with the diagonal convention of `kind`
/// (see [`NoiseKind::default_zero_diagonal`]).
pub fn sample_gsbm(spec: &GsbmSpec, kind: NoiseKind, seed: SampleSeed) -> Result<GsbmSample> {
    sample_gsbm_with_diagonal(spec, kind, kind.default_zero_diagonal(), seed)
}

/// Samples a GSBM. Off-diagonal and (unless `zero_diagonal`) diagonal entries
/// of `H` have variance `α₁/N`, `α₂/N` or `1/N` by block.
pub fn sample_gsbm_with_diagonal(
    spec: &GsbmSpec,
    kind: NoiseKind,
    zero_diagonal: bool,
    seed: SampleSeed,
) -> Result<GsbmSample> {
    let spec = validate_spec(*spec)?;
    let n = spec
        .n
        .ok_or_else(|| Error::InvalidArgument("sampling requires the dimension n".into()))?;
    let n1 = spec.n1().expect("n is set");
    let u = spike_vector(&spec)?;
    let nf = n as f64;
    let block = |i: usize, j: usize| match (i < n1, j < n1) {
        (true, true) => 0usize,
        (false, false) => 1,
        _ => 2,
    };
    let variance = [spec.alpha1 / nf, spec.alpha2 / nf, 1.0 / nf];
    let sd = variance.map(f64::sqrt);

    let h = match kind {
        NoiseKind::CenteredBernoulli { .. } => {
            let (p1, p2, q) = kind
                .bernoulli_probabilities(&spec)?
                .expect("bernoulli noise");
            let probs = [p1, p2, q];
            let scale = 1.0 / (nf * q * (1.0 - q)).sqrt();
            fill_rows(n, seed, DOMAIN_NOISE, |rng, i, j| {
                if i == j && zero_diagonal {
                    return 0.0;
                }
                let p = probs[block(i, j)];
                let b = if rng.random::<f64>() < p { 1.0 } else { 0.0 };
                (b - p) * scale
            })
        }
        NoiseKind::Gaussian => fill_rows(n, seed, DOMAIN_NOISE, |rng, i, j| {
            if i == j && zero_diagonal {
                return 0.0;
            }
            let z: f64 = rng.sample(StandardNormal);
            sd[block(i, j)] * z
        }),
        NoiseKind::Rademacher => fill_rows(n, seed, DOMAIN_NOISE, |rng, i, j| {
            if i == j && zero_diagonal {
                return 0.0;
            }
            if rng.random::<bool>() {
                sd[block(i, j)]
            } else {
                -sd[block(i, j)]
            }
        }),
    };
    let m = h.add_rank_one(spec.lambda, &u)?;
    Ok(GsbmSample { m, h, u })
}
