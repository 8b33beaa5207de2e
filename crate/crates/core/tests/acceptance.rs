//! Acceptance checks. Runs as a plain binary and prints one `PASS` or `FAIL`
//! line per criterion; exits nonzero if any criterion fails.

use std::cell::RefCell;
use std::f64::consts::PI;
use std::time::Instant;

use gsbm_core::model::SbmParams;
use gsbm_core::prediction::{hidden_critical_w, hidden_lambda1, unbalanced_lambda1, EdgeAnalysis};
use gsbm_core::qve::{solve_full, solve_reduced, variance_profile};
use gsbm_core::sampler::spike_vector;
use gsbm_core::spectra::{
    check_interlacing, check_local_law_with, check_outlier_bounds, eigen_symmetric, Eigen, SpectralReport,
};
use gsbm_core::{
    density, find_upper_edge, from_sbm, predict_outlier, sample_gsbm, sample_shifted_sbm, GsbmSpec, NoiseKind,
    SampleSeed, SymMatrix,
};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const THRESHOLD_TOL: f64 = 1e-12;
const SEMICIRCLE_EDGE_TOL: f64 = 1e-8;
const SEMICIRCLE_DENSITY_TOL: f64 = 0.01;
const SEMICIRCLE_DENSITY_RANGE: f64 = 1.9;
const SEMICIRCLE_ETA: f64 = 1e-4;
const QVE_AGREEMENT_TOL: f64 = 1e-8;
const QVE_SOLVE_TOL: f64 = 1e-13;
const BBP_Z_TOL: f64 = 1e-9;
const BBP_LAMBDA_C_TOL: f64 = 1e-6;
const FIGURE_N: usize = 2500;
const FIGURE_GAMMA: f64 = 0.25;
const FIGURE_Q: f64 = 0.2;
const FIGURE_P_SUPER: f64 = 0.25;
const FIGURE_SEEDS: u64 = 10;
const FIGURE_MIN_RUNS: usize = 9;
const OUTLIER_CUT: f64 = 2.1;
const NULL_CUT: f64 = 2.15;
const HIDDEN_LAMBDA1_TOL: f64 = 0.1;
const UNBALANCED_LAMBDA1_TOL: f64 = 0.15;
const GAP_TRIALS: u64 = 10;
const GAP_SUBCRITICAL_MAX: f64 = 0.15;
const GAP_SUPERCRITICAL_TOL: f64 = 0.15;
const INTERLACING_SLACK: f64 = 1e-9;
const RESIDUAL_TOL: f64 = 1e-10;
const LOCAL_LAW_N: usize = 2000;
const LOCAL_LAW_SEEDS: u64 = 10;
const RESOLVENT_SEEDS: u64 = 10;
const RESOLVENT_CONSTANT: f64 = 5.0;
const MASTER_SEED: u64 = 20240601;

/// Invariant bookkeeping shared by every criterion.
#[derive(Default)]
struct Ledger {
    instances: usize,
    solves: usize,
    violations: Vec<String>,
}

thread_local! {
    static LEDGER: RefCell<Ledger> = RefCell::new(Ledger::default());
}

fn violation(msg: String) {
    LEDGER.with(|l| l.borrow_mut().violations.push(msg));
}

/// Decomposes `M` and `H`, checks interlacing, the outlier bounds and
/// eigen residuals, and returns the report.
fn analyze(label: &str, m: &SymMatrix, h: &SymMatrix, lambda: f64, vectors: usize) -> SpectralReport {
    LEDGER.with(|l| l.borrow_mut().instances += 1);
    let em = eigen_symmetric(m, vectors).expect("eigen of M");
    let eh = eigen_symmetric(h, 0).expect("eigen of H");
    let report = SpectralReport::new(&em, Some(&eh), None);
    record_invariants(label, &report, &em, lambda);
    report
}

fn record_invariants(label: &str, report: &SpectralReport, em: &Eigen, lambda: f64) {
    let il = check_interlacing(report).expect("interlacing");
    if il.worst_margin < -INTERLACING_SLACK {
        violation(format!("{label}: interlacing margin {:e}", il.worst_margin));
    }
    let ob = check_outlier_bounds(report, lambda).expect("bounds");
    if ob.lower_margin < -INTERLACING_SLACK || ob.upper_margin < -INTERLACING_SLACK {
        violation(format!(
            "{label}: outlier bounds lower {:e} upper {:e}",
            ob.lower_margin, ob.upper_margin
        ));
    }
    if em.max_residual > RESIDUAL_TOL {
        violation(format!("{label}: eigen residual {:e}", em.max_residual));
    }
}

/// Solves the reduced equation and records the Herglotz property.
fn solve_checked(spec: &GsbmSpec, z: Complex64) -> [Complex64; 2] {
    LEDGER.with(|l| l.borrow_mut().solves += 1);
    let sol = solve_reduced(spec, z, QVE_SOLVE_TOL).expect("reduced solve");
    let m = [sol.m1, sol.m_n];
    if z.im > 0.0 && m.iter().any(|x| x.im < 0.0) {
        violation(format!("Im m < 0 at z = {z}: {m:?}"));
    }
    m
}

struct Outcome {
    pass: bool,
    detail: String,
    /// Ungraded observations printed as `INFO` lines.
    notes: Vec<String>,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome {
        pass,
        detail,
        notes: Vec::new(),
    }
}

fn criterion_thresholds() -> Outcome {
    let h = gsbm_core::hidden_threshold(0.2, 0.25, 2500).unwrap();
    let u = gsbm_core::unbalanced_threshold(0.2, 2500).unwrap();
    let (dh, du) = ((h - 0.232).abs(), (u - 0.216).abs());
    outcome(
        dh <= THRESHOLD_TOL && du <= THRESHOLD_TOL,
        format!("hidden {h} (err {dh:e}), unbalanced {u} (err {du:e})"),
    )
}

fn semicircle(x: f64) -> f64 {
    (4.0 - x * x).max(0.0).sqrt() / (2.0 * PI)
}

fn criterion_semicircle() -> Outcome {
    let spec = GsbmSpec::flat_spike(0.5, 1.0, 1.0, 0.0, None);
    let edge = find_upper_edge(&spec).unwrap().l_plus;
    let grid: Vec<f64> = (0..=380).map(|i| -SEMICIRCLE_DENSITY_RANGE + 0.01 * i as f64).collect();
    let curve = density(&spec, &grid, SEMICIRCLE_ETA).unwrap();
    let err = grid
        .iter()
        .zip(&curve.rho)
        .map(|(&x, &r)| (r - semicircle(x)).abs())
        .fold(0.0, f64::max);
    for &x in &[-1.5, 0.0, 1.5] {
        solve_checked(&spec, Complex64::new(x, SEMICIRCLE_ETA));
    }
    let de = (edge - 2.0).abs();
    outcome(
        de < SEMICIRCLE_EDGE_TOL && err < SEMICIRCLE_DENSITY_TOL,
        format!("L+ = {edge} (err {de:e}); max density error {err:e}"),
    )
}

fn criterion_full_vs_reduced() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(MASTER_SEED);
    let n = 200;
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let alpha1 = rng.random_range(0.2..3.0);
        let alpha2 = rng.random_range(0.2..3.0);
        let n1 = rng.random_range(20..=180usize);
        let gamma = n1 as f64 / n as f64;
        let spec = GsbmSpec::flat_spike(gamma, alpha1, alpha2, 0.0, Some(n));
        let profile = variance_profile(&spec).unwrap();
        for _ in 0..10 {
            let z = Complex64::new(rng.random_range(-4.0..4.0), rng.random_range(0.01..2.0));
            let [m1, mn] = solve_checked(&spec, z);
            let full = solve_full(&profile, z, QVE_SOLVE_TOL).unwrap();
            let dev = full
                .iter()
                .enumerate()
                .map(|(i, &m)| (m - if i < n1 { m1 } else { mn }).norm())
                .fold(0.0, f64::max);
            worst = worst.max(dev);
        }
    }
    outcome(worst <= QVE_AGREEMENT_TOL, format!("max |m_full - m_reduced| = {worst:e} over 200 points"))
}

fn criterion_bbp() -> Outcome {
    let mut worst = 0.0f64;
    for lambda in [1.5, 2.0, 3.0] {
        let spec = GsbmSpec::flat_spike(0.5, 1.0, 1.0, lambda, None);
        let z = predict_outlier(&spec, lambda).unwrap().z.unwrap_or(f64::NAN);
        worst = worst.max((z - (lambda + 1.0 / lambda)).abs());
    }
    let spec = GsbmSpec::flat_spike(0.5, 1.0, 1.0, 1.0, None);
    let lc = gsbm_core::critical_lambda(&spec).unwrap();
    let dl = (lc - 1.0).abs();
    outcome(
        worst <= BBP_Z_TOL && dl <= BBP_LAMBDA_C_TOL,
        format!("max |z - (λ + 1/λ)| = {worst:e}; λc = {lc} (err {dl:e})"),
    )
}

/// Shifted SBM instance: `(M, H, u, spec)`.
fn sbm_instance(params: &SbmParams, seed: SampleSeed) -> (SymMatrix, SymMatrix, Vec<f64>, GsbmSpec) {
    let spec = from_sbm(params).unwrap().spec;
    let m = sample_shifted_sbm(params, seed).unwrap();
    let u = spike_vector(&spec).unwrap();
    let h = m.add_rank_one(-spec.lambda, &u).unwrap();
    (m, h, u, spec)
}

struct FigureRun {
    lambda1: Vec<f64>,
    above: Vec<usize>,
}

fn figure_runs(label: &str, make: impl Fn(f64) -> SbmParams, p: f64, cut: f64, stream: u64) -> FigureRun {
    let mut run = FigureRun {
        lambda1: Vec::new(),
        above: Vec::new(),
    };
    for s in 0..FIGURE_SEEDS {
        let params = make(p);
        let (m, h, _, spec) = sbm_instance(&params, SampleSeed::new(MASTER_SEED, (stream << 32) | s));
        let report = analyze(&format!("{label} p={p} seed={s}"), &m, &h, spec.lambda, 1);
        run.lambda1.push(report.lambda1());
        run.above.push(report.eigenvalues_m.iter().take_while(|&&x| x > cut).count());
    }
    run
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

fn figure_n1() -> usize {
    (FIGURE_GAMMA * FIGURE_N as f64).round() as usize
}

fn criterion_figure(label: &str, make: fn(f64) -> SbmParams, target: f64, tol: f64, stream: u64) -> Outcome {
    let sup = figure_runs(label, make, FIGURE_P_SUPER, OUTLIER_CUT, stream);
    let null = figure_runs(label, make, FIGURE_Q, NULL_CUT, stream + 1);
    let one = sup.above.iter().filter(|&&c| c == 1).count();
    let none = null.above.iter().filter(|&&c| c == 0).count();
    let m = mean(&sup.lambda1);
    outcome(
        one >= FIGURE_MIN_RUNS && none >= FIGURE_MIN_RUNS && (m - target).abs() <= tol,
        format!(
            "p={FIGURE_P_SUPER}: {one}/{FIGURE_SEEDS} runs with one eigenvalue > {OUTLIER_CUT}, mean λ1 {m:.4} vs {target:.4}; \
             p={FIGURE_Q}: {none}/{FIGURE_SEEDS} runs with none > {NULL_CUT}"
        ),
    )
}

fn hidden_params(p: f64) -> SbmParams {
    SbmParams::hidden(FIGURE_N, figure_n1(), p, FIGURE_Q)
}

fn unbalanced_params(p: f64) -> SbmParams {
    SbmParams::unbalanced(FIGURE_N, figure_n1(), p, FIGURE_Q)
}

fn criterion_figure1() -> Outcome {
    let w = (FIGURE_P_SUPER - FIGURE_Q) * (FIGURE_N as f64).sqrt();
    let target = hidden_lambda1(w, FIGURE_Q, FIGURE_GAMMA).unwrap();
    criterion_figure("hidden", hidden_params, target, HIDDEN_LAMBDA1_TOL, 10)
}

fn criterion_figure2() -> Outcome {
    let w = (FIGURE_P_SUPER - FIGURE_Q) * (FIGURE_N as f64).sqrt();
    let target = unbalanced_lambda1(w, FIGURE_Q).unwrap();
    criterion_figure("unbalanced", unbalanced_params, target, UNBALANCED_LAMBDA1_TOL, 20)
}

fn criterion_gap_dichotomy() -> Outcome {
    let wc = hidden_critical_w(FIGURE_Q, FIGURE_GAMMA).unwrap();
    let sqrt_n = (FIGURE_N as f64).sqrt();
    let mut gaps = Vec::new();
    let mut predicted = f64::NAN;
    for (k, factor) in [0.75, 1.5].into_iter().enumerate() {
        let p = FIGURE_Q + factor * wc / sqrt_n;
        let params = hidden_params(p);
        let spec = from_sbm(&params).unwrap().spec;
        if k == 1 {
            predicted = predict_outlier(&spec, spec.lambda).unwrap().gap.unwrap_or(f64::NAN);
        }
        let g: Vec<f64> = (0..GAP_TRIALS)
            .map(|t| {
                let (m, h, _, spec) = sbm_instance(&params, SampleSeed::new(MASTER_SEED, ((30 + k as u64) << 32) | t));
                analyze(&format!("gap w={factor}w_c trial={t}"), &m, &h, spec.lambda, 1).gap
            })
            .collect();
        gaps.push(mean(&g));
    }
    outcome(
        gaps[0] < GAP_SUBCRITICAL_MAX && (gaps[1] - predicted).abs() <= GAP_SUPERCRITICAL_TOL,
        format!(
            "w_c = {wc}; mean gap {:.4} at 0.75 w_c; mean gap {:.4} vs predicted {predicted:.4} at 1.5 w_c",
            gaps[0], gaps[1]
        ),
    )
}

#[derive(Default)]
struct LocalLawTally {
    passed: usize,
    total: usize,
    worst_ratio: f64,
    flagged: Vec<String>,
}

impl LocalLawTally {
    fn run(&mut self, label: &str, m: &SymMatrix, h: &SymMatrix, u: &[f64], spec: &GsbmSpec, seed: u64) {
        let nf = LOCAL_LAW_N as f64;
        let eh = eigen_symmetric(h, LOCAL_LAW_N).expect("full decomposition of H");
        let em = eigen_symmetric(m, 0).expect("eigen of M");
        LEDGER.with(|l| l.borrow_mut().instances += 1);
        let report = SpectralReport::new(&em, Some(&eh), None);
        record_invariants(&format!("local law {label} seed={seed}"), &report, &eh, spec.lambda);
        let l_plus = find_upper_edge(spec).unwrap().l_plus;
        let mut ok = true;
        for z in [Complex64::new(1.0, 0.1), Complex64::new(l_plus + 0.3, nf.powf(-0.5))] {
            solve_checked(spec, z);
            let r = check_local_law_with(&eh, spec, u, z).unwrap();
            self.worst_ratio = self.worst_ratio.max(r.deviation / r.threshold);
            if r.flagged {
                self.flagged.push(format!(
                    "{label} seed={seed} z={z:.4}: deviation {:.3e} > {:.3e}",
                    r.deviation, r.threshold
                ));
            }
            ok &= !r.flagged;
        }
        self.total += 1;
        self.passed += ok as usize;
    }

    fn summary(&self) -> String {
        format!(
            "{}/{} (model, seed) pairs unflagged at both z; max deviation/threshold {:.3}{}",
            self.passed,
            self.total,
            self.worst_ratio,
            if self.flagged.is_empty() { String::new() } else { format!("; flagged: {}", self.flagged.join("; ")) }
        )
    }
}

/// Balanced and hidden-community models, both spectral parameters.
fn criterion_local_law() -> Outcome {
    let n1 = (FIGURE_GAMMA * LOCAL_LAW_N as f64).round() as usize;
    let hidden = SbmParams::hidden(LOCAL_LAW_N, n1, FIGURE_P_SUPER, FIGURE_Q);
    let balanced = GsbmSpec::flat_spike(0.5, 1.0, 1.0, 2.0, Some(LOCAL_LAW_N));
    let anisotropic = GsbmSpec::flat_spike(0.3, 2.0, 0.5, 1.5, Some(LOCAL_LAW_N));
    let mut tally = LocalLawTally::default();
    let mut extra = LocalLawTally::default();
    for s in 0..LOCAL_LAW_SEEDS {
        let (m, h, u, spec) = sbm_instance(&hidden, SampleSeed::new(MASTER_SEED, (40 << 32) | s));
        tally.run("hidden", &m, &h, &u, &spec, s);
        let g = sample_gsbm(&balanced, NoiseKind::Gaussian, SampleSeed::new(MASTER_SEED, (42 << 32) | s)).unwrap();
        tally.run("balanced", &g.m, &g.h, &g.u, &balanced, s);
        let g = sample_gsbm(&anisotropic, NoiseKind::Gaussian, SampleSeed::new(MASTER_SEED, (41 << 32) | s)).unwrap();
        extra.run("anisotropic", &g.m, &g.h, &g.u, &anisotropic, s);
    }
    let mut o = outcome(tally.passed == tally.total, tally.summary());
    o.notes.push(format!("local law, anisotropic profile (2, 0.5), not graded: {}", extra.summary()));
    o
}

fn criterion_resolvent_equation() -> Outcome {
    let params = hidden_params(FIGURE_P_SUPER);
    let spec = from_sbm(&params).unwrap().spec;
    let analysis = EdgeAnalysis::new(&spec).unwrap();
    let pred = gsbm_core::prediction::predict_outlier_with(&spec, &analysis, spec.lambda).unwrap();
    let Some(z) = pred.z else {
        return outcome(false, format!("no supercritical prediction: {pred:?}"));
    };
    let [m1, mn] = solve_checked(&spec, Complex64::new(z, 0.0));
    if m1.re >= 0.0 || mn.re >= 0.0 {
        violation(format!("real z = {z} above the edge gave nonnegative m: {m1}, {mn}"));
    }
    let bound = RESOLVENT_CONSTANT / (FIGURE_N as f64).sqrt();
    let mut worst = 0.0f64;
    let mut passed = 0;
    for s in 0..RESOLVENT_SEEDS {
        let (m, h, u, _) = sbm_instance(&params, SampleSeed::new(MASTER_SEED, (50 << 32) | s));
        let eh = eigen_symmetric(&h, FIGURE_N).expect("full decomposition of H");
        let em = eigen_symmetric(&m, 0).expect("eigen of M");
        LEDGER.with(|l| l.borrow_mut().instances += 1);
        let report = SpectralReport::new(&em, Some(&eh), None);
        record_invariants(&format!("resolvent seed={s}"), &report, &eh, spec.lambda);
        let form = gsbm_core::spectra::resolvent_quadratic_form_with(&eh, &u, z).unwrap();
        let dev = (form + 1.0 / spec.lambda).abs();
        worst = worst.max(dev);
        passed += (dev < bound) as usize;
    }
    outcome(
        passed as u64 == RESOLVENT_SEEDS,
        format!("z = {z:.5}; {passed}/{RESOLVENT_SEEDS} seeds with |<u,G(z)u> + 1/λ| < {bound}; worst {worst:e}"),
    )
}

/// Extra small instances across every noise kind, then the verdict over
/// everything sampled or solved above.
fn criterion_structural_invariants() -> Outcome {
    let specs = [
        (GsbmSpec::flat_spike(0.3, 2.0, 0.5, 2.0, Some(300)), NoiseKind::Gaussian),
        (GsbmSpec::planted_spike(0.25, 1.5, 1.0, 3.0, Some(300)), NoiseKind::Rademacher),
        (
            GsbmSpec::flat_spike(0.4, 1.2, 0.8, 1.0, Some(300)),
            NoiseKind::CenteredBernoulli { q: 0.2 },
        ),
    ];
    for (k, (spec, noise)) in specs.into_iter().enumerate() {
        for s in 0..5 {
            let sample = sample_gsbm(&spec, noise, SampleSeed::new(MASTER_SEED, ((60 + k as u64) << 32) | s)).unwrap();
            analyze(&format!("{noise:?} seed={s}"), &sample.m, &sample.h, spec.lambda, 300);
            for &(re, im) in &[(-2.5, 0.01), (0.3, 0.5), (2.2, 1e-3), (4.0, 2.0)] {
                solve_checked(&spec, Complex64::new(re, im));
            }
        }
    }
    LEDGER.with(|l| {
        let l = l.borrow();
        let shown: Vec<&str> = l.violations.iter().take(5).map(String::as_str).collect();
        outcome(
            l.violations.is_empty(),
            format!(
                "{} instances, {} QVE solves, {} violations{}",
                l.instances,
                l.solves,
                l.violations.len(),
                if shown.is_empty() { String::new() } else { format!(": {}", shown.join("; ")) }
            ),
        )
    })
}

fn main() {
    // `cargo test -- <filter>` passes arguments; a filter selects criteria by name.
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("threshold_closed_forms", criterion_thresholds),
        ("semicircle_degeneration", criterion_semicircle),
        ("reduced_full_qve_equivalence", criterion_full_vs_reduced),
        ("bbp_closed_form", criterion_bbp),
        ("hidden_community_outlier", criterion_figure1),
        ("unbalanced_outlier", criterion_figure2),
        ("gap_dichotomy", criterion_gap_dichotomy),
        ("local_law_diagnostic", criterion_local_law),
        ("resolvent_equation", criterion_resolvent_equation),
        // Last, so it sees every instance sampled by the others.
        ("structural_invariants", criterion_structural_invariants),
    ];
    let mut failed = 0;
    for (name, run) in criteria {
        if !filter.is_empty() && !filter.iter().any(|f| name.contains(f.as_str())) {
            continue;
        }
        let start = Instant::now();
        let o = run();
        let status = if o.pass { "PASS" } else { "FAIL" };
        failed += (!o.pass) as usize;
        println!("{status} {name} [{:.1}s]: {}", start.elapsed().as_secs_f64(), o.detail);
        for note in &o.notes {
            println!("INFO {note}");
        }
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
