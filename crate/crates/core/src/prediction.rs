//! Deterministic large-N predictions: the upper spectral edge `L+`, the
//! outlier location `z(λ)`, the critical spike strength `λc`, and the closed
//! forms available for the hidden-community and unbalanced models.
//!
//! # Edge via quartic elimination
//!
//! Write `a = α₁`, `b = α₂`, `g = γ`, `h = 1 − γ` and `m = m₁`. The first
//! line of the reduced system gives `m_N = −P/(h m)` with
//! `P = 1 + z m + a g m²`. Substituting into the second line and multiplying
//! by `h m²` gives
//!
//! ```text
//! f(z, m) = h m² − (z m + g m²) P + b P² = c₀ + c₁ m + c₂ m² + c₃ m³ + c₄ m⁴
//!   c₀ = b
//!   c₁ = (2b − 1) z
//!   c₂ = h − g + 2abg + (b − 1) z²
//!   c₃ = g (2ab − a − 1) z
//!   c₄ = a g² (ab − 1)
//! ```
//!
//! For `a = b = 1` this is `1 + z m + m²`. The same polynomial is quadratic in
//! `z`: `f = A z² + B z + C` with `A = (b−1) m²`,
//! `B = (2b−1) m + g(2ab−a−1) m³` and `C = b + (h−g+2abg) m² + a g²(ab−1) m⁴`.
//!
//! For real `z > L+` the physical solution `m₁(z)` is real, negative and
//! increasing. Its inverse `z(m)` is followed from `m → 0⁻` (where
//! `z ≈ −1/m`) towards more negative `m`; `L+` is the first point where
//! `dz/dm = −f_m/f_z` vanishes, i.e. where `f = ∂f/∂m = 0` holds together.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result, SpecError};
use crate::model::{validate_spec, GsbmSpec};
use crate::qve::{solve_reduced_with, QveOptions};

/// Minimum distance `z − L+` for an outlier to be reported.
pub const MARGINAL_GAP: f64 = 1e-6;
/// Bisection tolerance on `z` in [`predict_outlier`].
pub const OUTLIER_TOL: f64 = 1e-12;
const SUPPORT_DENSITY_THRESHOLD: f64 = 1e-6;
const SCAN_ETAS: [f64; 4] = [1e-2, 1e-4, 1e-6, 1e-9];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EdgeMethod {
    Discriminant,
    DensitySupportScan,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EdgeResult {
    pub l_plus: f64,
    /// `(m₁, m_N)` at the edge.
    pub double_root_m: [Complex64; 2],
    pub method: EdgeMethod,
    pub certified_window: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OutlierPrediction {
    pub lambda: f64,
    pub lambda_c: f64,
    pub l_plus: f64,
    /// Limit of the largest eigenvalue; `None` when subcritical.
    pub z: Option<f64>,
    /// `z − L+`; `None` when subcritical.
    pub gap: Option<f64>,
    pub method: EdgeMethod,
    /// Set when an outlier exists but sits within [`MARGINAL_GAP`] of the edge.
    pub marginal: bool,
}

/// Coefficients of the eliminated polynomial `f(z, m)`.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Quartic {
    a: f64,
    b: f64,
    g: f64,
    h: f64,
}

impl Quartic {
    pub fn new(alpha1: f64, alpha2: f64, gamma: f64) -> Self {
        Quartic {
            a: alpha1,
            b: alpha2,
            g: gamma,
            h: 1.0 - gamma,
        }
    }

    /// Coefficients `[c₀, …, c₄]` of `f` as a polynomial in `m`.
    pub fn coefficients(&self, z: f64) -> [f64; 5] {
        let Quartic { a, b, g, h } = *self;
        [
            b,
            (2.0 * b - 1.0) * z,
            h - g + 2.0 * a * b * g + (b - 1.0) * z * z,
            g * (2.0 * a * b - a - 1.0) * z,
            a * g * g * (a * b - 1.0),
        ]
    }

    #[cfg(test)]
    pub fn f(&self, z: f64, m: f64) -> f64 {
        let c = self.coefficients(z);
        c[0] + m * (c[1] + m * (c[2] + m * (c[3] + m * c[4])))
    }

    pub fn f_m(&self, z: f64, m: f64) -> f64 {
        let c = self.coefficients(z);
        c[1] + m * (2.0 * c[2] + m * (3.0 * c[3] + m * 4.0 * c[4]))
    }

    /// `(A, B, C)` of `f` as a quadratic in `z`.
    fn z_quadratic(&self, m: f64) -> (f64, f64, f64) {
        let Quartic { a, b, g, h } = *self;
        let m2 = m * m;
        (
            (b - 1.0) * m2,
            (2.0 * b - 1.0) * m + g * (2.0 * a * b - a - 1.0) * m2 * m,
            b + (h - g + 2.0 * a * b * g) * m2 + a * g * g * (a * b - 1.0) * m2 * m2,
        )
    }

    fn f_z(&self, z: f64, m: f64) -> f64 {
        let (qa, qb, _) = self.z_quadratic(m);
        2.0 * qa * z + qb
    }

    /// Real roots `z` of `f(z, m) = 0`.
    fn z_roots(&self, m: f64) -> Vec<f64> {
        let (qa, qb, qc) = self.z_quadratic(m);
        if qa.abs() <= 1e-14 * (qb.abs() + qc.abs()) {
            return if qb != 0.0 { vec![-qc / qb] } else { Vec::new() };
        }
        let disc = qb * qb - 4.0 * qa * qc;
        if disc < 0.0 {
            return Vec::new();
        }
        let q = -0.5 * (qb + qb.signum() * disc.sqrt());
        if q == 0.0 {
            return vec![0.0];
        }
        vec![q / qa, qc / q]
    }

    fn nearest_root(&self, m: f64, target: f64) -> Option<f64> {
        self.z_roots(m)
            .into_iter()
            .filter(|z| z.is_finite())
            .min_by(|x, y| (x - target).abs().total_cmp(&(y - target).abs()))
    }

    /// `dz/dm` along the root branch through `(z, m)`.
    fn slope(&self, z: f64, m: f64) -> f64 {
        -self.f_m(z, m) / self.f_z(z, m)
    }

    /// `m_N` from `m₁` via the first line of the reduced system.
    fn partner(&self, z: f64, m: f64) -> f64 {
        -(1.0 + z * m + self.a * self.g * m * m) / (self.h * m)
    }
}

/// Real physical branch `m₁ ↦ z` for `z ≥ L+`, sampled on a grid from
/// `m₁ ≈ 0⁻` down to the fold.
#[derive(Debug, Clone)]
struct TrackedBranch {
    quartic: Quartic,
    // (m, z) pairs, m decreasing.
    nodes: Vec<(f64, f64)>,
    m_edge: f64,
    l_plus: f64,
    window: f64,
}

const TRACK_START: f64 = -1e-3;
const TRACK_RATIO: f64 = 1.01;
const TRACK_LIMIT: f64 = -1e4;

impl TrackedBranch {
    fn track(quartic: Quartic) -> Result<TrackedBranch> {
        let mut m = TRACK_START;
        let mut z = quartic
            .nearest_root(m, -1.0 / m)
            .ok_or_else(|| Error::EdgeSearch("no real root near the large-z asymptote".into()))?;
        let mut nodes = vec![(m, z)];
        let mut slope = quartic.slope(z, m);
        if !(slope > 0.0) {
            return Err(Error::EdgeSearch("branch does not start increasing".into()));
        }
        loop {
            let next_m = m * TRACK_RATIO;
            if next_m < TRACK_LIMIT {
                return Err(Error::EdgeSearch("no fold found along the real branch".into()));
            }
            let predicted = z + slope * (next_m - m);
            let next_z = quartic
                .nearest_root(next_m, predicted)
                .ok_or_else(|| Error::EdgeSearch(format!("branch turned complex at m = {next_m}")))?;
            let next_slope = quartic.slope(next_z, next_m);
            if !next_slope.is_finite() {
                return Err(Error::EdgeSearch(format!("singular slope at m = {next_m}")));
            }
            nodes.push((next_m, next_z));
            if next_slope <= 0.0 {
                break;
            }
            m = next_m;
            z = next_z;
            slope = next_slope;
        }
        // Bisect the sign change of dz/dm between the last two nodes.
        let (mut hi, z_hi) = nodes[nodes.len() - 2];
        let (mut lo, _) = nodes[nodes.len() - 1];
        let mut z_ref = z_hi;
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid == lo || mid == hi {
                break;
            }
            let zm = quartic
                .nearest_root(mid, z_ref)
                .ok_or_else(|| Error::EdgeSearch("branch lost during bisection".into()))?;
            if quartic.slope(zm, mid) > 0.0 {
                hi = mid;
            } else {
                lo = mid;
            }
            z_ref = zm;
        }
        let m_edge = 0.5 * (lo + hi);
        let l_plus = quartic
            .nearest_root(m_edge, z_ref)
            .ok_or_else(|| Error::EdgeSearch("branch lost at the fold".into()))?;
        Ok(TrackedBranch {
            quartic,
            nodes,
            m_edge,
            l_plus,
            window: hi - lo,
        })
    }

    /// `z` on the branch at `m ∈ [m_edge, 0)`.
    fn z_at(&self, m: f64) -> Option<f64> {
        let guess = if m >= self.nodes[0].0 {
            -1.0 / m
        } else if m <= self.m_edge {
            self.l_plus
        } else {
            let k = self.nodes.partition_point(|&(mk, _)| mk > m);
            let (m0, z0) = self.nodes[k - 1];
            let (m1, z1) = self.nodes[k.min(self.nodes.len() - 1)];
            if m1 == m0 {
                z0
            } else {
                z0 + (z1 - z0) * (m - m0) / (m1 - m0)
            }
        };
        self.quartic.nearest_root(m, guess)
    }

    /// Physical `(m₁, m_N)` at real `z ≥ L+`.
    fn solve(&self, z: f64) -> Result<(f64, f64)> {
        if z <= self.l_plus {
            return Ok((self.m_edge, self.quartic.partner(self.l_plus, self.m_edge)));
        }
        // z(m) increases from L+ at m_edge to +∞ as m → 0⁻.
        let mut lo = self.m_edge;
        let mut hi = (-1.0 / z).min(-f64::MIN_POSITIVE);
        while self.z_at(hi).is_some_and(|zh| zh < z) {
            hi *= 0.5;
            if hi > -1e-300 {
                return Err(Error::EdgeSearch(format!("cannot bracket z = {z}")));
            }
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid == lo || mid == hi {
                break;
            }
            let zm = self
                .z_at(mid)
                .ok_or_else(|| Error::EdgeSearch(format!("branch lost at m = {mid}")))?;
            if zm < z {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let m1 = 0.5 * (lo + hi);
        Ok((m1, self.quartic.partner(z, m1)))
    }
}

/// Evaluator of the physical real solution above the edge.
#[derive(Debug, Clone)]
enum Branch {
    Tracked { branch: TrackedBranch, swapped: bool },
    Continuation { spec: GsbmSpec },
}

impl Branch {
    fn solve(&self, z: f64) -> Result<(f64, f64)> {
        match self {
            Branch::Tracked { branch, swapped } => {
                let (m1, mn) = branch.solve(z)?;
                Ok(if *swapped { (mn, m1) } else { (m1, mn) })
            }
            Branch::Continuation { spec } => {
                let sol = solve_reduced_with(spec, Complex64::new(z, 0.0), &QveOptions::default(), None)?;
                Ok((sol.m1.re, sol.m_n.re))
            }
        }
    }
}

/// Edge together with the machinery to evaluate the real branch above it.
#[derive(Debug, Clone)]
pub struct EdgeAnalysis {
    pub edge: EdgeResult,
    branch: Branch,
}

impl EdgeAnalysis {
    pub fn new(spec: &GsbmSpec) -> Result<EdgeAnalysis> {
        let spec = validate_spec(*spec)?;
        match discriminant_edge(&spec) {
            Ok(found) => Ok(found),
            Err(e) => {
                log::info!("discriminant edge search failed ({e}); scanning the density support");
                scan_edge(&spec)
            }
        }
    }

    /// Real `(m₁, m_N)` on the physical branch at `z ≥ L+`.
    pub fn branch_at(&self, z: f64) -> Result<(f64, f64)> {
        self.branch.solve(z)
    }
}

fn discriminant_edge(spec: &GsbmSpec) -> Result<EdgeAnalysis> {
    // The elimination divides by m₁ and needs α₂ > 0; swap blocks otherwise.
    let swapped = spec.alpha2 <= 0.0;
    let oriented = if swapped { spec.swap_blocks() } else { *spec };
    if oriented.alpha2 <= 0.0 {
        return Err(Error::EdgeSearch("both intra-block variances vanish".into()));
    }
    let quartic = Quartic::new(oriented.alpha1, oriented.alpha2, oriented.gamma);
    let branch = TrackedBranch::track(quartic)?;
    let m1 = branch.m_edge;
    let mn = quartic.partner(branch.l_plus, m1);
    let pair = if swapped { [mn, m1] } else { [m1, mn] };
    Ok(EdgeAnalysis {
        edge: EdgeResult {
            l_plus: branch.l_plus,
            double_root_m: pair.map(|v| Complex64::new(v, 0.0)),
            method: EdgeMethod::Discriminant,
            certified_window: branch.window,
        },
        branch: Branch::Tracked { branch, swapped },
    })
}

/// Im ⟨m⟩(x + i·1e-9)/π reached by continuation in η.
fn support_density(spec: &GsbmSpec, x: f64) -> Result<(f64, [Complex64; 2])> {
    let opts = QveOptions::default();
    let mut warm = None;
    let mut last = None;
    for &eta in &SCAN_ETAS {
        let sol = solve_reduced_with(spec, Complex64::new(x, eta), &opts, warm)?;
        warm = Some([sol.m1, sol.m_n]);
        last = Some(sol);
    }
    let sol = last.expect("nonempty eta schedule");
    Ok((sol.m_avg.im / std::f64::consts::PI, [sol.m1, sol.m_n]))
}

fn scan_edge(spec: &GsbmSpec) -> Result<EdgeAnalysis> {
    const STEP: f64 = 0.01;
    let upper = 2.0 * spec.max_row_variance().sqrt() + 0.1;
    let mut x = upper;
    let mut inside = None;
    while x > -upper {
        if support_density(spec, x)?.0 > SUPPORT_DENSITY_THRESHOLD {
            inside = Some(x);
            break;
        }
        x -= STEP;
    }
    let mut lo = inside.ok_or_else(|| Error::EdgeSearch("no support found by density scan".into()))?;
    let mut hi = lo + STEP;
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if support_density(spec, mid)?.0 > SUPPORT_DENSITY_THRESHOLD {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let (_, m) = support_density(spec, hi)?;
    Ok(EdgeAnalysis {
        edge: EdgeResult {
            l_plus: hi,
            double_root_m: m,
            method: EdgeMethod::DensitySupportScan,
            certified_window: hi - lo,
        },
        branch: Branch::Continuation { spec: *spec },
    })
}

/// Upper edge `L+` of the limiting spectral density of `H`.
pub fn find_upper_edge(spec: &GsbmSpec) -> Result<EdgeResult> {
    Ok(EdgeAnalysis::new(spec)?.edge)
}

/// `N (γ m₁ θ₁² + (1−γ) m_N θ₂²)` at real `z ≥ L+`; this equals `−1/λ` at
/// the outlier.
fn spike_form(spec: &GsbmSpec, analysis: &EdgeAnalysis, z: f64) -> Result<f64> {
    let (w1, w2) = spec.spike_weights();
    let (m1, mn) = analysis.branch_at(z)?;
    Ok(w1 * m1 + w2 * mn)
}

fn outlier_exists(spec: &GsbmSpec, analysis: &EdgeAnalysis, lambda: f64) -> Result<bool> {
    if lambda <= 0.0 {
        return Ok(false);
    }
    Ok(spike_form(spec, analysis, analysis.edge.l_plus)? + 1.0 / lambda < 0.0)
}

fn critical_lambda_with(spec: &GsbmSpec, analysis: &EdgeAnalysis) -> Result<f64> {
    let mut hi = 1.0;
    while !outlier_exists(spec, analysis, hi)? {
        hi *= 2.0;
        if hi > 1e12 {
            return Err(Error::EdgeSearch("no supercritical spike strength found".into()));
        }
    }
    let mut lo = 0.0;
    while hi - lo > 1e-15 * hi {
        let mid = 0.5 * (lo + hi);
        if mid == lo || mid == hi {
            break;
        }
        if outlier_exists(spec, analysis, mid)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Critical spike strength: the smallest `λ` whose outlier equation has a
/// real solution above `L+`.
pub fn critical_lambda(spec: &GsbmSpec) -> Result<f64> {
    let analysis = EdgeAnalysis::new(spec)?;
    critical_lambda_with(spec, &analysis)
}

/// Predicted limit of the largest eigenvalue of `M` for spike strength
/// `lambda`; the `lambda` field of `spec` is ignored.
pub fn predict_outlier(spec: &GsbmSpec, lambda: f64) -> Result<OutlierPrediction> {
    let analysis = EdgeAnalysis::new(spec)?;
    predict_outlier_with(spec, &analysis, lambda)
}

/// [`predict_outlier`] reusing a precomputed edge analysis.
pub fn predict_outlier_with(spec: &GsbmSpec, analysis: &EdgeAnalysis, lambda: f64) -> Result<OutlierPrediction> {
    if !(lambda >= 0.0) || !lambda.is_finite() {
        return Err(SpecError::NegativeLambda(lambda).into());
    }
    let l_plus = analysis.edge.l_plus;
    let lambda_c = critical_lambda_with(spec, analysis)?;
    let mut out = OutlierPrediction {
        lambda,
        lambda_c,
        l_plus,
        z: None,
        gap: None,
        method: analysis.edge.method,
        marginal: false,
    };
    if !outlier_exists(spec, analysis, lambda)? {
        return Ok(out);
    }
    let target = -1.0 / lambda;
    let excess = |z: f64| spike_form(spec, analysis, z).map(|v| v - target);

    let lo = l_plus + 1e-9;
    let hi = (l_plus + 100.0).max(2.0 * lambda + 2.0);
    // Coarse scan for sign changes, denser near the edge.
    const SCAN: usize = 64;
    let points: Vec<f64> = (0..=SCAN)
        .map(|k| lo + (hi - lo) * (k as f64 / SCAN as f64).powi(3))
        .collect();
    let values = points.iter().map(|&z| excess(z)).collect::<Result<Vec<_>>>()?;
    let brackets: Vec<usize> = (0..SCAN)
        .filter(|&k| values[k] < 0.0 && values[k + 1] >= 0.0 || values[k] > 0.0 && values[k + 1] <= 0.0)
        .collect();
    if brackets.len() > 1 {
        log::warn!(
            "outlier equation changes sign {} times above L+; returning the smallest root",
            brackets.len()
        );
    }
    let Some(&k) = brackets.first() else {
        log::warn!("outlier equation has no sign change in ({lo}, {hi}]");
        return Ok(out);
    };
    let (mut a, mut b) = (points[k], points[k + 1]);
    let fa_negative = values[k] < 0.0;
    while b - a > OUTLIER_TOL {
        let mid = 0.5 * (a + b);
        if mid == a || mid == b {
            break;
        }
        if (excess(mid)? < 0.0) == fa_negative {
            a = mid;
        } else {
            b = mid;
        }
    }
    let z = 0.5 * (a + b);
    if z - l_plus < MARGINAL_GAP {
        out.marginal = true;
        return Ok(out);
    }
    out.z = Some(z);
    out.gap = Some(z - l_plus);
    Ok(out)
}

fn check_q(q: f64) -> Result<f64, SpecError> {
    if q > 0.0 && q < 1.0 {
        Ok((q * (1.0 - q)).sqrt())
    } else {
        Err(SpecError::DegenerateScale(q))
    }
}

fn check_gamma(gamma: f64) -> Result<(), SpecError> {
    if gamma > 0.0 && gamma < 1.0 {
        Ok(())
    } else {
        Err(SpecError::GammaOutOfRange(gamma))
    }
}

fn check_w(w: f64) -> Result<(), SpecError> {
    if w > 0.0 && w.is_finite() {
        Ok(())
    } else {
        Err(SpecError::Other(format!("w must be positive, got {w}")))
    }
}

/// Hidden-community edge probability above which an outlier appears:
/// `q + √(q(1−q))/(γ√n)`.
pub fn hidden_threshold(q: f64, gamma: f64, n: usize) -> Result<f64, SpecError> {
    let sd = check_q(q)?;
    check_gamma(gamma)?;
    Ok(q + sd / (gamma * (n as f64).sqrt()))
}

/// Unbalanced-model threshold `q + 2√(q(1−q))/√n`, independent of `γ`.
pub fn unbalanced_threshold(q: f64, n: usize) -> Result<f64, SpecError> {
    let sd = check_q(q)?;
    Ok(q + 2.0 * sd / (n as f64).sqrt())
}

/// Critical `w = (p − q)√N` of the hidden-community model.
pub fn hidden_critical_w(q: f64, gamma: f64) -> Result<f64, SpecError> {
    let sd = check_q(q)?;
    check_gamma(gamma)?;
    Ok(sd / gamma)
}

/// Critical `w` of the unbalanced model.
pub fn unbalanced_critical_w(q: f64) -> Result<f64, SpecError> {
    Ok(2.0 * check_q(q)?)
}

/// `x + 1/x` above the transition, `2` below.
fn bbp_limit(x: f64) -> f64 {
    if x > 1.0 {
        x + 1.0 / x
    } else {
        2.0
    }
}

/// Limit of the largest eigenvalue in the hidden-community model.
pub fn hidden_lambda1(w: f64, q: f64, gamma: f64) -> Result<f64, SpecError> {
    check_w(w)?;
    let sd = check_q(q)?;
    check_gamma(gamma)?;
    Ok(bbp_limit(gamma * w / sd))
}

/// Limit of the largest eigenvalue in the unbalanced model.
pub fn unbalanced_lambda1(w: f64, q: f64) -> Result<f64, SpecError> {
    check_w(w)?;
    let sd = check_q(q)?;
    Ok(bbp_limit(w / (2.0 * sd)))
}
