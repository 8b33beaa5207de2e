//! Dense symmetric eigensolving and the empirical checks run on sampled
//! matrices: eigenvalue interlacing under the rank-one spike, the resolvent
//! quadratic form, the anisotropic local law and spectral community
//! detection.

use std::io::Write;

use faer::{Mat, Side};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::format::fmt_sig;
use crate::matrix::SymMatrix;
use crate::model::GsbmSpec;
use crate::prediction::OutlierPrediction;
use crate::qve::solve_reduced;

/// Largest accepted `‖Mv − μv‖ / ‖M‖` over returned eigenpairs.
pub const EIGEN_RESIDUAL_TOL: f64 = 1e-10;
/// Slack in the interlacing inequalities.
pub const INTERLACING_SLACK: f64 = 1e-9;
/// Minimum distance between a real `z` and the spectrum in
/// [`resolvent_quadratic_form`].
pub const SPECTRUM_CLEARANCE: f64 = 1e-6;

/// Eigenvalues in descending order with the leading eigenvectors.
#[derive(Debug, Clone)]
pub struct Eigen {
    pub values: Vec<f64>,
    n: usize,
    // Column-major, column k is the eigenvector of values[k].
    vectors: Vec<f64>,
    /// Largest relative residual over the returned eigenpairs.
    pub max_residual: f64,
}

impl Eigen {
    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn vector_count(&self) -> usize {
        if self.n == 0 {
            0
        } else {
            self.vectors.len() / self.n
        }
    }

    /// Eigenvector of `values[k]`; panics when it was not requested.
    pub fn vector(&self, k: usize) -> &[f64] {
        &self.vectors[k * self.n..(k + 1) * self.n]
    }

    /// `⟨x, (A − z)⁻¹ y⟩ = Σₖ ⟨x,vₖ⟩⟨vₖ,y⟩/(μₖ − z)`; needs the full basis.
    pub fn resolvent_form(&self, x: &[f64], y: &[f64], z: Complex64) -> Result<Complex64> {
        if self.vector_count() != self.n {
            return Err(Error::InvalidArgument("resolvent needs all eigenvectors".into()));
        }
        for v in [x, y] {
            if v.len() != self.n {
                return Err(Error::DimensionMismatch {
                    expected: self.n,
                    found: v.len(),
                });
            }
        }
        let mut acc = Complex64::new(0.0, 0.0);
        for (k, &mu) in self.values.iter().enumerate() {
            let vk = self.vector(k);
            let px: f64 = vk.iter().zip(x).map(|(a, b)| a * b).sum();
            let py: f64 = vk.iter().zip(y).map(|(a, b)| a * b).sum();
            acc += px * py / (mu - z);
        }
        Ok(acc)
    }

    /// `(1/n) tr (A − z)⁻¹`.
    pub fn stieltjes(&self, z: Complex64) -> Complex64 {
        let sum: Complex64 = self.values.iter().map(|&mu| 1.0 / (mu - z)).sum();
        sum / self.n as f64
    }

    /// One-column CSV with header `eigenvalue`.
    pub fn write_values_csv(&self, mut w: impl Write, precision: usize) -> std::io::Result<()> {
        writeln!(w, "eigenvalue")?;
        for &v in &self.values {
            writeln!(w, "{}", fmt_sig(v, precision))?;
        }
        w.flush()
    }
}

/// All eigenvalues of `mat` in descending order, plus the `want_vectors`
/// leading eigenvectors (clamped to the dimension).
pub fn eigen_symmetric(mat: &SymMatrix, want_vectors: usize) -> Result<Eigen> {
    if !mat.is_finite() {
        return Err(Error::NonFinite);
    }
    let n = mat.dim();
    let k = want_vectors.min(n);
    if n == 0 {
        return Ok(Eigen {
            values: Vec::new(),
            n,
            vectors: Vec::new(),
            max_residual: 0.0,
        });
    }
    let a = mat.to_faer();
    if k == 0 {
        let mut values = a
            .self_adjoint_eigenvalues(Side::Lower)
            .map_err(|e| Error::Eigen(format!("{e:?}")))?;
        values.reverse();
        return Ok(Eigen {
            values,
            n,
            vectors: Vec::new(),
            max_residual: 0.0,
        });
    }
    let evd = a
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| Error::Eigen(format!("{e:?}")))?;
    let s = evd.S();
    let u = evd.U();
    let values: Vec<f64> = (0..n).rev().map(|i| s[i]).collect();
    // Leading k columns, descending.
    let lead: Mat<f64> = Mat::from_fn(n, k, |i, j| u[(i, n - 1 - j)]);
    let product = &a * &lead;
    let norm = values[0].abs().max(values[n - 1].abs()).max(f64::MIN_POSITIVE);
    let mut max_residual = 0.0f64;
    for j in 0..k {
        let r = (0..n)
            .map(|i| {
                let d = product[(i, j)] - values[j] * lead[(i, j)];
                d * d
            })
            .sum::<f64>()
            .sqrt();
        max_residual = max_residual.max(r / norm);
    }
    if max_residual > EIGEN_RESIDUAL_TOL {
        return Err(Error::Eigen(format!("eigen residual {max_residual:e} exceeds tolerance")));
    }
    let mut vectors = Vec::with_capacity(n * k);
    for j in 0..k {
        vectors.extend((0..n).map(|i| lead[(i, j)]));
    }
    Ok(Eigen {
        values,
        n,
        vectors,
        max_residual,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SpectralReport {
    pub eigenvalues_m: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eigenvalues_h: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub top_vector: Option<Vec<f64>>,
    /// `λ₁ − λ₂`.
    pub gap: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub predicted: Option<OutlierPrediction>,
}

impl SpectralReport {
    pub fn new(m: &Eigen, h: Option<&Eigen>, predicted: Option<OutlierPrediction>) -> SpectralReport {
        let v = &m.values;
        let gap = if v.len() >= 2 { v[0] - v[1] } else { 0.0 };
        SpectralReport {
            eigenvalues_m: v.clone(),
            eigenvalues_h: h.map(|e| e.values.clone()),
            top_vector: (m.vector_count() > 0).then(|| m.vector(0).to_vec()),
            gap,
            predicted,
        }
    }

    pub fn lambda1(&self) -> f64 {
        self.eigenvalues_m.first().copied().unwrap_or(f64::NAN)
    }

    pub fn lambda2(&self) -> f64 {
        self.eigenvalues_m.get(1).copied().unwrap_or(f64::NAN)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InterlacingCheck {
    pub holds: bool,
    /// Smallest slack over `μᵢ ≤ λᵢ ≤ μᵢ₋₁`; negative when violated.
    pub worst_margin: f64,
}

/// Interlacing of `M = H + λuuᵀ` (`λ ≥ 0`) against `H`:
/// `μᵢ ≤ λᵢ ≤ μᵢ₋₁` for every `i`, which contains `μ₂ ≤ λ₂ ≤ μ₁ ≤ λ₁`.
pub fn check_interlacing(report: &SpectralReport) -> Result<InterlacingCheck> {
    let lam = &report.eigenvalues_m;
    let mu = report
        .eigenvalues_h
        .as_ref()
        .ok_or_else(|| Error::InvalidArgument("interlacing needs the spectrum of H".into()))?;
    if lam.len() != mu.len() {
        return Err(Error::DimensionMismatch {
            expected: mu.len(),
            found: lam.len(),
        });
    }
    let mut worst = f64::INFINITY;
    for i in 0..lam.len() {
        worst = worst.min(lam[i] - mu[i]);
        if i > 0 {
            worst = worst.min(mu[i - 1] - lam[i]);
        }
    }
    if lam.is_empty() {
        worst = 0.0;
    }
    Ok(InterlacingCheck {
        holds: worst >= -INTERLACING_SLACK,
        worst_margin: worst,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OutlierBounds {
    pub holds: bool,
    /// `λ₁ − (λ − μ₁)`.
    pub lower_margin: f64,
    /// `(λ + μ₁) − λ₁`.
    pub upper_margin: f64,
    /// `λ₁ − (λ + μ_N)`; nonnegative for any unit `u` since `λ₁ ≥ uᵀMu`.
    pub rayleigh_margin: f64,
}

/// `λ − μ₁ ≤ λ₁ ≤ λ + μ₁` together with the Rayleigh bound `λ₁ ≥ λ + μ_N`,
/// for a unit spike vector.
pub fn check_outlier_bounds(report: &SpectralReport, lambda: f64) -> Result<OutlierBounds> {
    let mu = report
        .eigenvalues_h
        .as_ref()
        .ok_or_else(|| Error::InvalidArgument("bounds need the spectrum of H".into()))?;
    let (Some(&mu1), Some(&mu_n)) = (mu.first(), mu.last()) else {
        return Err(Error::InvalidArgument("empty spectrum".into()));
    };
    let l1 = report.lambda1();
    let lower_margin = l1 - (lambda - mu1);
    let upper_margin = lambda + mu1 - l1;
    let rayleigh_margin = l1 - (lambda + mu_n);
    Ok(OutlierBounds {
        holds: [lower_margin, upper_margin, rayleigh_margin]
            .iter()
            .all(|&m| m >= -INTERLACING_SLACK),
        lower_margin,
        upper_margin,
        rayleigh_margin,
    })
}

/// `⟨u, (H − z)⁻¹ u⟩` for real `z` outside the spectrum.
pub fn resolvent_quadratic_form(h: &SymMatrix, u: &[f64], z: f64) -> Result<f64> {
    let eig = eigen_symmetric(h, h.dim())?;
    resolvent_quadratic_form_with(&eig, u, z)
}

/// [`resolvent_quadratic_form`] on a precomputed full decomposition.
pub fn resolvent_quadratic_form_with(eig: &Eigen, u: &[f64], z: f64) -> Result<f64> {
    let distance = eig
        .values
        .iter()
        .map(|&mu| (mu - z).abs())
        .fold(f64::INFINITY, f64::min);
    if distance < SPECTRUM_CLEARANCE {
        return Err(Error::TooCloseToSpectrum { z, distance });
    }
    Ok(eig.resolvent_form(u, u, Complex64::new(z, 0.0))?.re)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LocalLawReport {
    pub z: Complex64,
    /// `⟨u, G(z) u⟩`.
    pub empirical: Complex64,
    /// `Σᵢ mᵢ(z) uᵢ²`.
    pub deterministic: Complex64,
    pub deviation: f64,
    /// `(1 + √ρ)/√(bN) + 1/(bN)` with `ρ = Im⟨m⟩/π` and `b = Im z`.
    pub reference_scale: f64,
    /// `N^0.1 · reference_scale`.
    pub threshold: f64,
    pub flagged: bool,
    /// `|(1/N) tr G − ⟨m⟩|`.
    pub trace_deviation: f64,
}

/// Compares `⟨u, G(z)u⟩` with its deterministic equivalent built from the
/// reduced solution; `G = (H − z)⁻¹`.
pub fn check_local_law(h: &SymMatrix, spec: &GsbmSpec, u: &[f64], z: Complex64) -> Result<LocalLawReport> {
    let eig = eigen_symmetric(h, h.dim())?;
    check_local_law_with(&eig, spec, u, z)
}

/// [`check_local_law`] on a precomputed full decomposition of `H`.
pub fn check_local_law_with(eig: &Eigen, spec: &GsbmSpec, u: &[f64], z: Complex64) -> Result<LocalLawReport> {
    let n = eig.dim();
    let nf = n as f64;
    if !(z.im >= nf.powf(-0.9)) {
        return Err(Error::InvalidArgument(format!("local law needs Im z >= N^-0.9, got {z}")));
    }
    let n1 = ((spec.gamma * nf).round() as usize).min(n);
    let sol = solve_reduced(spec, z, 1e-12)?;
    let empirical = eig.resolvent_form(u, u, z)?;
    let w1: f64 = u[..n1].iter().map(|x| x * x).sum();
    let w2: f64 = u[n1..].iter().map(|x| x * x).sum();
    let deterministic = sol.m1 * w1 + sol.m_n * w2;
    let deviation = (empirical - deterministic).norm();
    let b = z.im;
    let rho = (sol.m_avg.im / std::f64::consts::PI).max(0.0);
    let reference_scale = (1.0 + rho.sqrt()) / (b * nf).sqrt() + 1.0 / (b * nf);
    let threshold = nf.powf(0.1) * reference_scale;
    Ok(LocalLawReport {
        z,
        empirical,
        deterministic,
        deviation,
        reference_scale,
        threshold,
        flagged: deviation > threshold,
        trace_deviation: (eig.stieltjes(z) - sol.m_avg).norm(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CommunityDetection {
    pub labels: Vec<i8>,
    pub overlap: f64,
}

/// Labels from the top eigenvector of `m` and their chance-corrected
/// agreement with the planted blocks (first `round(γN)` indices form block 1).
pub fn detect_communities(m: &SymMatrix, spec: &GsbmSpec) -> Result<CommunityDetection> {
    let eig = eigen_symmetric(m, 1)?;
    detect_from_vector(eig.vector(0), spec)
}

/// [`detect_communities`] from an already computed top eigenvector.
pub fn detect_from_vector(v: &[f64], spec: &GsbmSpec) -> Result<CommunityDetection> {
    let n = v.len();
    let n1 = ((spec.gamma * n as f64).round() as usize).min(n);
    let labels: Vec<i8> = if spec.theta2 == 0.0 || spec.theta1 == 0.0 {
        let cut = two_means_midpoint(v);
        v.iter().map(|&x| if x >= cut { 1 } else { -1 }).collect()
    } else {
        v.iter().map(|&x| if x >= 0.0 { 1 } else { -1 }).collect()
    };
    let truth: Vec<i8> = (0..n).map(|i| if i < n1 { 1 } else { -1 }).collect();
    Ok(CommunityDetection {
        overlap: overlap(&truth, &labels),
        labels,
    })
}

/// Midpoint of the two cluster means of the optimal 1-D two-means split.
fn two_means_midpoint(v: &[f64]) -> f64 {
    let mut sorted = v.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    if n < 2 {
        return sorted.first().copied().unwrap_or(0.0);
    }
    let total: f64 = sorted.iter().sum();
    let total_sq: f64 = sorted.iter().map(|x| x * x).sum();
    let (mut s, mut s2) = (0.0, 0.0);
    let mut best = (f64::INFINITY, 0.0);
    for k in 1..n {
        s += sorted[k - 1];
        s2 += sorted[k - 1] * sorted[k - 1];
        let (l, r) = (k as f64, (n - k) as f64);
        let sse = (s2 - s * s / l) + ((total_sq - s2) - (total - s) * (total - s) / r);
        if sse < best.0 {
            best = (sse, 0.5 * (s / l + (total - s) / r));
        }
    }
    best.1
}

/// Cohen's kappa between `truth` and `pred`, maximized over a global label
/// flip and clipped to `[0, 1]`.
pub fn overlap(truth: &[i8], pred: &[i8]) -> f64 {
    assert_eq!(truth.len(), pred.len());
    let n = truth.len() as f64;
    if truth.is_empty() {
        return 0.0;
    }
    let p_true = truth.iter().filter(|&&t| t > 0).count() as f64 / n;
    let matched = truth.iter().zip(pred).filter(|(a, b)| a == b).count() as f64 / n;
    let p_pred = pred.iter().filter(|&&t| t > 0).count() as f64 / n;
    let kappa = |agree: f64, pp: f64| {
        let chance = p_true * pp + (1.0 - p_true) * (1.0 - pp);
        if chance >= 1.0 {
            0.0
        } else {
            (agree - chance) / (1.0 - chance)
        }
    };
    kappa(matched, p_pred)
        .max(kappa(1.0 - matched, 1.0 - p_pred))
        .clamp(0.0, 1.0)
}

/// CDF of the standard semicircle law on `[−2, 2]`.
pub fn semicircle_cdf(x: f64) -> f64 {
    if x <= -2.0 {
        0.0
    } else if x >= 2.0 {
        1.0
    } else {
        0.5 + x * (4.0 - x * x).sqrt() / (4.0 * std::f64::consts::PI) + (x / 2.0).asin() / std::f64::consts::PI
    }
}

/// Kolmogorov–Smirnov distance between the empirical law of `values` and `cdf`.
pub fn ks_distance(values: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    sorted
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
        })
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{NoiseKind, SbmParams};
    use crate::sampler::{sample_gsbm, sample_shifted_sbm, spike_vector, SampleSeed};
    use approx::assert_abs_diff_eq;

    fn wigner(n: usize, seed: u64) -> SymMatrix {
        let spec = GsbmSpec::flat_spike(0.5, 1.0, 1.0, 0.0, Some(n));
        sample_gsbm(&spec, NoiseKind::Gaussian, SampleSeed::new(seed, 0)).unwrap().h
    }

    #[test]
    fn trivial_spectra() {
        let id = SymMatrix::from_diagonal(&[1.0, 1.0]);
        assert_eq!(eigen_symmetric(&id, 0).unwrap().values, vec![1.0, 1.0]);
        let d = eigen_symmetric(&SymMatrix::from_diagonal(&[3.0, 1.0, 2.0]), 3).unwrap();
        assert_eq!(d.values, vec![3.0, 2.0, 1.0]);
        assert_abs_diff_eq!(d.vector(0)[0].abs(), 1.0, epsilon = 1e-14);
        assert!(eigen_symmetric(&SymMatrix::zeros(0), 1).unwrap().values.is_empty());
    }

    #[test]
    fn rejects_non_finite() {
        let m = SymMatrix::from_diagonal(&[1.0, f64::NAN]);
        assert!(matches!(eigen_symmetric(&m, 0), Err(Error::NonFinite)));
    }

    #[test]
    fn residuals_orthonormality_and_trace() {
        let m = wigner(200, 4);
        let eig = eigen_symmetric(&m, 5).unwrap();
        assert!(eig.max_residual <= EIGEN_RESIDUAL_TOL);
        assert!(eig.values.windows(2).all(|w| w[0] >= w[1]));
        for a in 0..5 {
            for b in 0..5 {
                let dot: f64 = eig.vector(a).iter().zip(eig.vector(b)).map(|(x, y)| x * y).sum();
                assert_abs_diff_eq!(dot, if a == b { 1.0 } else { 0.0 }, epsilon = 1e-10);
            }
        }
        let sum: f64 = eig.values.iter().sum();
        assert!((sum - m.trace()).abs() < 1e-8 * 200.0);
        let only = eigen_symmetric(&m, 0).unwrap();
        for (a, b) in only.values.iter().zip(&eig.values) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-10);
        }
    }

    #[test]
    fn wigner_esd_is_semicircle() {
        let eig = eigen_symmetric(&wigner(2000, 11), 0).unwrap();
        let ks = ks_distance(&eig.values, semicircle_cdf);
        assert!(ks < 0.03, "KS distance {ks}");
    }

    #[test]
    fn semicircle_cdf_shape() {
        assert_eq!(semicircle_cdf(-3.0), 0.0);
        assert_abs_diff_eq!(semicircle_cdf(0.0), 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(semicircle_cdf(1.999999), 1.0, epsilon = 1e-7);
    }

    #[test]
    fn interlacing_with_zero_spike_is_tight() {
        let h = wigner(30, 1);
        let eig = eigen_symmetric(&h, 0).unwrap();
        let report = SpectralReport::new(&eig, Some(&eig), None);
        let check = check_interlacing(&report).unwrap();
        assert!(check.holds);
        assert!(check.worst_margin <= 0.0 && check.worst_margin > -1e-12);
    }

    #[test]
    fn interlacing_over_many_seeds() {
        let spec = GsbmSpec::planted_spike(0.3, 2.0, 0.5, 1.7, Some(50));
        for seed in 0..100 {
            let s = sample_gsbm(&spec, NoiseKind::Gaussian, SampleSeed::new(seed, 0)).unwrap();
            let em = eigen_symmetric(&s.m, 0).unwrap();
            let eh = eigen_symmetric(&s.h, 0).unwrap();
            let report = SpectralReport::new(&em, Some(&eh), None);
            assert!(check_interlacing(&report).unwrap().holds, "seed {seed}");
            assert!(check_outlier_bounds(&report, 1.7).unwrap().holds, "seed {seed}");
        }
    }

    #[test]
    fn interlacing_dimension_mismatch() {
        let a = eigen_symmetric(&SymMatrix::from_diagonal(&[1.0, 2.0]), 0).unwrap();
        let b = eigen_symmetric(&SymMatrix::from_diagonal(&[1.0]), 0).unwrap();
        let report = SpectralReport::new(&a, Some(&b), None);
        assert!(matches!(check_interlacing(&report), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn largest_eigenvalue_monotone_in_spike() {
        let spec = GsbmSpec::planted_spike(0.25, 1.0, 1.0, 0.0, Some(300));
        let s = sample_gsbm(&spec, NoiseKind::Gaussian, SampleSeed::new(8, 0)).unwrap();
        let mut last = f64::NEG_INFINITY;
        for lambda in [0.0, 0.5, 1.0, 2.0] {
            let m = s.h.add_rank_one(lambda, &s.u).unwrap();
            let l1 = eigen_symmetric(&m, 0).unwrap().values[0];
            assert!(l1 >= last);
            last = l1;
        }
    }

    #[test]
    fn resolvent_trivial_and_guarded() {
        let h = SymMatrix::zeros(3);
        let u = [1.0, 0.0, 0.0];
        assert_abs_diff_eq!(resolvent_quadratic_form(&h, &u, -2.0).unwrap(), 0.5, epsilon = 1e-15);
        assert!(matches!(
            resolvent_quadratic_form(&h, &u, 1e-8),
            Err(Error::TooCloseToSpectrum { .. })
        ));
    }

    #[test]
    fn resolvent_matches_semicircle_transform() {
        let n = 2000;
        let h = wigner(n, 21);
        let spec = GsbmSpec::flat_spike(0.5, 1.0, 1.0, 0.0, Some(n));
        let u = spike_vector(&spec).unwrap();
        let value = resolvent_quadratic_form(&h, &u, 3.0).unwrap();
        let oracle = (-3.0 + 5f64.sqrt()) / 2.0;
        assert!((value - oracle).abs() < 5.0 / (n as f64).sqrt(), "{value} vs {oracle}");
    }

    #[test]
    fn local_law_far_field_and_bulk() {
        let n = 400;
        let spec = GsbmSpec::flat_spike(0.5, 1.0, 1.0, 0.0, Some(n));
        let h = wigner(n, 2);
        let u = spike_vector(&spec).unwrap();
        let eig = eigen_symmetric(&h, n).unwrap();
        let far = check_local_law_with(&eig, &spec, &u, Complex64::new(0.0, 10.0)).unwrap();
        assert!(far.deviation < 1e-2);
        let bulk = check_local_law_with(&eig, &spec, &u, Complex64::new(1.0, 0.1)).unwrap();
        assert!(!bulk.flagged, "{bulk:?}");
        assert!(check_local_law_with(&eig, &spec, &u, Complex64::new(1.0, 1e-6)).is_err());
    }

    #[test]
    fn overlap_statistic() {
        let truth = [1, 1, -1, -1, -1, -1];
        assert_eq!(overlap(&truth, &truth), 1.0);
        let flipped: Vec<i8> = truth.iter().map(|t| -t).collect();
        assert_eq!(overlap(&truth, &flipped), 1.0);
        assert_eq!(overlap(&truth, &[1; 6]), 0.0);
        let partial = overlap(&truth, &[1, -1, -1, -1, -1, -1]);
        assert!(partial > 0.0 && partial < 1.0);
    }

    #[test]
    fn noiseless_spike_is_recovered() {
        let spec = crate::model::from_sbm(&SbmParams::unbalanced(100, 30, 0.3, 0.2)).unwrap().spec;
        let u = spike_vector(&spec).unwrap();
        let m = SymMatrix::zeros(100).add_rank_one(3.0, &u).unwrap();
        let det = detect_communities(&m, &spec).unwrap();
        assert_eq!(det.overlap, 1.0);
        let planted = GsbmSpec::planted_spike(0.3, 1.0, 1.0, 3.0, Some(100));
        let u = spike_vector(&planted).unwrap();
        let m = SymMatrix::zeros(100).add_rank_one(3.0, &u).unwrap();
        assert_eq!(detect_communities(&m, &planted).unwrap().overlap, 1.0);
    }

    #[test]
    fn no_signal_gives_no_overlap() {
        let n = 1000;
        let spec = GsbmSpec::flat_spike(0.5, 1.0, 1.0, 0.0, Some(n));
        let mean = (0..20)
            .map(|seed| detect_communities(&wigner(n, 100 + seed), &spec).unwrap().overlap)
            .sum::<f64>()
            / 20.0;
        assert!(mean < 0.1, "mean overlap {mean}");
    }

    #[test]
    fn hidden_community_is_detected() {
        let params = SbmParams::hidden(1000, 250, 0.3, 0.2);
        let spec = crate::model::from_sbm(&params).unwrap().spec;
        let m = sample_shifted_sbm(&params, SampleSeed::new(5, 0)).unwrap();
        let det = detect_communities(&m, &spec).unwrap();
        assert!(det.overlap > 0.5, "{}", det.overlap);
    }

    #[test]
    fn eigenvalue_csv() {
        let eig = eigen_symmetric(&SymMatrix::from_diagonal(&[0.5, 2.0]), 0).unwrap();
        let mut buf = Vec::new();
        eig.write_values_csv(&mut buf, 17).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "eigenvalue\n2\n0.5\n");
    }
}
