//! Quadratic vector equation (QVE) solvers.
//!
//! For a variance profile `S_ij = E[H_ij²]` the QVE reads
//! `−1/m_i = z + Σ_j S_ij m_j`. Its unique solution with `Im m_i > 0` on the
//! upper half-plane gives the limiting diagonal of the resolvent
//! `(H − z)⁻¹`, and `Im ⟨m⟩ / π` is the limiting eigenvalue density.
//!
//! For the two-block profile of a [`GsbmSpec`] the solution is constant on
//! each block, and the system collapses to
//!
//! ```text
//! −1 = z m₁ + α₁ γ m₁² + (1−γ) m₁ m_N
//! −1 = z m_N + γ m₁ m_N + α₂ (1−γ) m_N²
//! ```
//!
//! Both forms are solved by damped fixed-point iteration from `m = −1/z`,
//! finished with Newton steps once the iterate is close. Newton iterates are
//! only accepted when they keep every imaginary part positive, which pins the
//! physical (Herglotz) branch.

use std::io::Write;

use faer::prelude::Solve;
use faer::{Col, Mat};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::format::fmt_sig;
use crate::matrix::SymMatrix;
use crate::model::{validate_spec, GsbmSpec};

pub const DEFAULT_TOL: f64 = 1e-10;
pub const DEFAULT_DAMPING: f64 = 0.5;
pub const DEFAULT_MAX_ITER: usize = 10_000;
pub const DEFAULT_ETA: f64 = 1e-4;
pub const DEFAULT_GRID_POINTS: usize = 600;

/// Imaginary parts used to approach a real spectral parameter.
pub const CONTINUATION_ETAS: [f64; 3] = [1e-2, 1e-4, 1e-6];

// Residual below which Newton polishing is attempted.
const NEWTON_SWITCH: f64 = 1e-2;
const NEWTON_STEPS: usize = 40;
// Iterations to wait before retrying Newton after a rejected attempt.
const NEWTON_BACKOFF: usize = 50;
// Im ⟨m⟩ at the smallest continuation eta above which a real point counts as
// inside the support.
const INSIDE_SUPPORT_IM: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QveOptions {
    pub tol: f64,
    pub damping: f64,
    pub max_iter: usize,
}

impl Default for QveOptions {
    fn default() -> Self {
        QveOptions {
            tol: DEFAULT_TOL,
            damping: DEFAULT_DAMPING,
            max_iter: DEFAULT_MAX_ITER,
        }
    }
}

impl QveOptions {
    pub fn with_tol(tol: f64) -> Self {
        QveOptions {
            tol,
            ..Default::default()
        }
    }
}

/// Block values of the QVE solution at one spectral parameter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QveSolution {
    pub z: Complex64,
    pub m1: Complex64,
    #[serde(rename = "mN")]
    pub m_n: Complex64,
    /// `γ m₁ + (1−γ) m_N`, the limit of `N⁻¹ Tr G`.
    pub m_avg: Complex64,
    pub residual: f64,
    pub iterations: usize,
}

/// Coefficients of the reduced two-block system.
#[derive(Debug, Clone, Copy)]
pub(crate) struct ReducedSystem {
    pub gamma: f64,
    // α₁γ, 1−γ, γ, α₂(1−γ)
    a11: f64,
    a12: f64,
    a21: f64,
    a22: f64,
}

impl ReducedSystem {
    pub fn new(spec: &GsbmSpec) -> Self {
        let g = spec.gamma;
        ReducedSystem {
            gamma: g,
            a11: spec.alpha1 * g,
            a12: 1.0 - g,
            a21: g,
            a22: spec.alpha2 * (1.0 - g),
        }
    }

    /// Equation defects `1 + z m₁ + …` of both lines.
    pub fn defects(&self, z: Complex64, m: [Complex64; 2]) -> [Complex64; 2] {
        let [m1, mn] = m;
        [
            1.0 + m1 * (z + self.a11 * m1 + self.a12 * mn),
            1.0 + mn * (z + self.a21 * m1 + self.a22 * mn),
        ]
    }

    pub fn residual(&self, z: Complex64, m: [Complex64; 2]) -> f64 {
        let [f1, f2] = self.defects(z, m);
        f1.norm().max(f2.norm())
    }

    fn fixed_point(&self, z: Complex64, m: [Complex64; 2], damping: f64) -> [Complex64; 2] {
        let [m1, mn] = m;
        let t1 = -1.0 / (z + self.a11 * m1 + self.a12 * mn);
        let t2 = -1.0 / (z + self.a21 * m1 + self.a22 * mn);
        [
            (1.0 - damping) * m1 + damping * t1,
            (1.0 - damping) * mn + damping * t2,
        ]
    }

    fn newton_step(&self, z: Complex64, m: [Complex64; 2]) -> Option<[Complex64; 2]> {
        let [m1, mn] = m;
        let [f1, f2] = self.defects(z, m);
        let j11 = z + 2.0 * self.a11 * m1 + self.a12 * mn;
        let j12 = self.a12 * m1;
        let j21 = self.a21 * mn;
        let j22 = z + self.a21 * m1 + 2.0 * self.a22 * mn;
        let det = j11 * j22 - j12 * j21;
        if det.norm() == 0.0 {
            return None;
        }
        let d1 = (j22 * f1 - j12 * f2) / det;
        let d2 = (j11 * f2 - j21 * f1) / det;
        let next = [m1 - d1, mn - d2];
        next.iter().all(|v| v.is_finite()).then_some(next)
    }

    pub fn average(&self, m: [Complex64; 2]) -> Complex64 {
        self.gamma * m[0] + (1.0 - self.gamma) * m[1]
    }
}

fn upper_half_ok(z: Complex64, m: &[Complex64]) -> bool {
    z.im <= 0.0 || m.iter().all(|v| v.im > 0.0)
}

/// Newton polish; returns the polished point only if it converged and stayed
/// on the Herglotz branch.
fn polish<const K: usize>(
    z: Complex64,
    mut m: [Complex64; K],
    tol: f64,
    residual: impl Fn([Complex64; K]) -> f64,
    step: impl Fn([Complex64; K]) -> Option<[Complex64; K]>,
) -> Option<([Complex64; K], f64, usize)> {
    for k in 1..=NEWTON_STEPS {
        m = step(m)?;
        let r = residual(m);
        if r <= tol {
            return upper_half_ok(z, &m).then_some((m, r, k));
        }
    }
    None
}

fn solve_pair(
    sys: &ReducedSystem,
    z: Complex64,
    init: [Complex64; 2],
    opts: &QveOptions,
) -> Result<([Complex64; 2], f64, usize)> {
    let mut m = init;
    let mut next_newton = 0;
    let mut r = sys.residual(z, m);
    for it in 0..=opts.max_iter {
        r = sys.residual(z, m);
        if r <= opts.tol && upper_half_ok(z, &m) {
            return Ok((m, r, it));
        }
        if r < NEWTON_SWITCH && it >= next_newton {
            if let Some((mp, rp, k)) = polish(
                z,
                m,
                opts.tol,
                |x| sys.residual(z, x),
                |x| sys.newton_step(z, x),
            ) {
                return Ok((mp, rp, it + k));
            }
            next_newton = it + NEWTON_BACKOFF;
        }
        m = sys.fixed_point(z, m, opts.damping);
    }
    Err(Error::NonConvergence {
        z,
        iterations: opts.max_iter,
        residual: r,
    })
}

/// Solves the reduced two-block system at `z`.
///
/// With `Im z > 0` this returns the Herglotz solution. With `Im z = 0` the
/// point must lie outside the support; the solution is followed down from
/// `z + iη` over [`CONTINUATION_ETAS`], Richardson-extrapolated to `η = 0`
/// and polished on the real equations. Points closer than about `1e-6` to the
/// support edge are not reliably classified.
pub fn solve_reduced(spec: &GsbmSpec, z: Complex64, tol: f64) -> Result<QveSolution> {
    solve_reduced_with(spec, z, &QveOptions::with_tol(tol), None)
}

/// [`solve_reduced`] with explicit options and an optional warm start.
pub fn solve_reduced_with(
    spec: &GsbmSpec,
    z: Complex64,
    opts: &QveOptions,
    init: Option<[Complex64; 2]>,
) -> Result<QveSolution> {
    let spec = validate_spec(*spec)?;
    if !(z.re.is_finite() && z.im.is_finite()) {
        return Err(Error::InvalidArgument(format!("non-finite spectral parameter {z}")));
    }
    if z.im < 0.0 {
        return Err(Error::InvalidArgument(format!(
            "spectral parameter {z} lies in the lower half-plane"
        )));
    }
    if z.im == 0.0 && z.re == 0.0 {
        return Err(Error::InsideSupport(0.0));
    }
    let sys = ReducedSystem::new(&spec);
    let cold = [-1.0 / z, -1.0 / z];
    if z.im > 0.0 {
        let start = init.filter(|m| upper_half_ok(z, m)).unwrap_or(cold);
        let (m, residual, iterations) = match solve_pair(&sys, z, start, opts) {
            Ok(ok) => ok,
            Err(_) if init.is_some() => solve_pair(&sys, z, cold, opts)?,
            Err(e) => return Err(e),
        };
        return Ok(QveSolution {
            z,
            m1: m[0],
            m_n: m[1],
            m_avg: sys.average(m),
            residual,
            iterations,
        });
    }
    solve_real(&sys, z.re, opts)
}

fn solve_real(sys: &ReducedSystem, x: f64, opts: &QveOptions) -> Result<QveSolution> {
    let mut m = [Complex64::new(-1.0 / x, 0.0); 2];
    let mut stages = Vec::with_capacity(CONTINUATION_ETAS.len());
    let mut iterations = 0;
    for &eta in &CONTINUATION_ETAS {
        let z = Complex64::new(x, eta);
        let init = [
            Complex64::new(m[0].re, m[0].im.max(eta)),
            Complex64::new(m[1].re, m[1].im.max(eta)),
        ];
        let (sol, _, its) = solve_pair(sys, z, init, opts)?;
        iterations += its;
        m = sol;
        stages.push((eta, sol));
    }
    if sys.average(m).im > INSIDE_SUPPORT_IM {
        return Err(Error::InsideSupport(x));
    }
    // Re m(x + iη) = m(x) + O(η²) off the support.
    let (e2, m2) = stages[stages.len() - 2];
    let (e3, m3) = stages[stages.len() - 1];
    let w = e2 * e2 / (e2 * e2 - e3 * e3);
    let extrapolated = [
        Complex64::new(w * m3[0].re + (1.0 - w) * m2[0].re, 0.0),
        Complex64::new(w * m3[1].re + (1.0 - w) * m2[1].re, 0.0),
    ];
    let z = Complex64::new(x, 0.0);
    let mut real = extrapolated;
    let mut residual = sys.residual(z, real);
    if residual > opts.tol {
        let (mp, rp, k) = polish(
            z,
            real,
            opts.tol,
            |v| sys.residual(z, v),
            |v| sys.newton_step(z, v),
        )
        .ok_or(Error::NonConvergence {
            z,
            iterations,
            residual,
        })?;
        real = mp;
        residual = rp;
        iterations += k;
    }
    Ok(QveSolution {
        z,
        m1: real[0],
        m_n: real[1],
        m_avg: sys.average(real),
        residual,
        iterations,
    })
}

/// Full `N × N` variance profile `S_ij = E[H_ij²]` of a spec with `n` set,
/// diagonal included.
pub fn variance_profile(spec: &GsbmSpec) -> Result<SymMatrix> {
    let spec = validate_spec(*spec)?;
    let n = spec
        .n
        .ok_or_else(|| Error::InvalidArgument("variance profile needs the dimension n".into()))?;
    let n1 = spec.n1().expect("n is set");
    let nf = n as f64;
    Ok(SymMatrix::from_upper(n, |i, j| match (i < n1, j < n1) {
        (true, true) => spec.alpha1 / nf,
        (false, false) => spec.alpha2 / nf,
        _ => 1.0 / nf,
    }))
}

/// Componentwise defects `|1 + m_i (z + (S m)_i)|` of the full QVE.
pub fn full_defects(profile: &SymMatrix, z: Complex64, m: &[Complex64]) -> Vec<f64> {
    let sm = profile_mul(profile, m);
    m.iter()
        .zip(&sm)
        .map(|(&mi, &si)| (1.0 + mi * (z + si)).norm())
        .collect()
}

fn profile_mul(profile: &SymMatrix, m: &[Complex64]) -> Vec<Complex64> {
    (0..profile.dim())
        .map(|i| {
            profile
                .row(i)
                .iter()
                .zip(m)
                .fold(Complex64::new(0.0, 0.0), |acc, (&s, &mj)| acc + s * mj)
        })
        .collect()
}

fn full_newton_step(profile: &SymMatrix, z: Complex64, m: &[Complex64]) -> Option<Vec<Complex64>> {
    let n = m.len();
    let sm = profile_mul(profile, m);
    let jac = Mat::<Complex64>::from_fn(n, n, |i, j| {
        let diag = if i == j { z + sm[i] } else { Complex64::new(0.0, 0.0) };
        diag + m[i] * profile.get(i, j)
    });
    let rhs = Col::<Complex64>::from_fn(n, |i| -(1.0 + m[i] * (z + sm[i])));
    let delta = jac.partial_piv_lu().solve(&rhs);
    let next: Vec<Complex64> = (0..n).map(|i| m[i] + delta[i]).collect();
    next.iter().all(|v| v.is_finite()).then_some(next)
}

/// Solves the full QVE for an arbitrary nonnegative variance profile at a
/// point of the upper half-plane.
pub fn solve_full(profile: &SymMatrix, z: Complex64, tol: f64) -> Result<Vec<Complex64>> {
    solve_full_with(profile, z, &QveOptions::with_tol(tol))
}

pub fn solve_full_with(profile: &SymMatrix, z: Complex64, opts: &QveOptions) -> Result<Vec<Complex64>> {
    if !(z.im > 0.0) || !z.re.is_finite() || !z.im.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "full QVE needs Im z > 0, got {z}"
        )));
    }
    if profile.as_slice().iter().any(|&s| !(s >= 0.0) || !s.is_finite()) {
        return Err(Error::InvalidArgument(
            "variance profile entries must be finite and nonnegative".into(),
        ));
    }
    let n = profile.dim();
    let mut m = vec![-1.0 / z; n];
    let max_of = |v: Vec<f64>| v.into_iter().fold(0.0f64, f64::max);
    let mut next_newton = 0;
    let mut r = f64::INFINITY;
    for it in 0..=opts.max_iter {
        r = max_of(full_defects(profile, z, &m));
        if r <= opts.tol && upper_half_ok(z, &m) {
            return Ok(m);
        }
        if r < NEWTON_SWITCH && it >= next_newton {
            let mut trial = m.clone();
            for _ in 0..NEWTON_STEPS {
                match full_newton_step(profile, z, &trial) {
                    Some(next) => trial = next,
                    None => break,
                }
                if max_of(full_defects(profile, z, &trial)) <= opts.tol {
                    if upper_half_ok(z, &trial) {
                        return Ok(trial);
                    }
                    break;
                }
            }
            next_newton = it + NEWTON_BACKOFF;
        }
        let sm = profile_mul(profile, &m);
        for (mi, si) in m.iter_mut().zip(&sm) {
            *mi = (1.0 - opts.damping) * *mi - opts.damping / (z + si);
        }
    }
    Err(Error::NonConvergence {
        z,
        iterations: opts.max_iter,
        residual: r,
    })
}

/// Smoothed limiting density `ρ(x) = Im ⟨m⟩(x + iη) / π` on a grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityCurve {
    pub grid: Vec<f64>,
    pub rho: Vec<f64>,
    pub eta: f64,
}

impl DensityCurve {
    /// Trapezoid-rule integral of `rho` over the grid.
    pub fn trapezoid_mass(&self) -> f64 {
        self.grid
            .windows(2)
            .zip(self.rho.windows(2))
            .map(|(x, r)| 0.5 * (x[1] - x[0]) * (r[0] + r[1]))
            .sum()
    }

    pub fn write_csv(&self, mut w: impl Write, precision: usize) -> std::io::Result<()> {
        writeln!(w, "x,rho")?;
        for (x, r) in self.grid.iter().zip(&self.rho) {
            writeln!(w, "{},{}", fmt_sig(*x, precision), fmt_sig(*r, precision))?;
        }
        w.flush()
    }
}

/// Evenly spaced grid of `points` abscissae over `[from, to]`.
pub fn linear_grid(from: f64, to: f64, points: usize) -> Vec<f64> {
    match points {
        0 => Vec::new(),
        1 => vec![from],
        _ => {
            let step = (to - from) / (points - 1) as f64;
            (0..points).map(|k| from + step * k as f64).collect()
        }
    }
}

/// Evaluates the density on `grid`, warm-starting each point from its
/// neighbour.
pub fn density(spec: &GsbmSpec, grid: &[f64], eta: f64) -> Result<DensityCurve> {
    density_with(spec, grid, eta, &QveOptions::default())
}

pub fn density_with(spec: &GsbmSpec, grid: &[f64], eta: f64, opts: &QveOptions) -> Result<DensityCurve> {
    if !(eta > 0.0) {
        return Err(Error::InvalidArgument(format!("eta must be positive, got {eta}")));
    }
    if grid.iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidArgument("density grid must be finite".into()));
    }
    let mut rho = Vec::with_capacity(grid.len());
    let mut warm = None;
    for &x in grid {
        let z = Complex64::new(x, eta);
        let sol = solve_reduced_with(spec, z, opts, warm)?;
        warm = Some([sol.m1, sol.m_n]);
        rho.push((sol.m_avg.im / std::f64::consts::PI).max(0.0));
    }
    Ok(DensityCurve {
        grid: grid.to_vec(),
        rho,
        eta,
    })
}
