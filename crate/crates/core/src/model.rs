//! Parameter types for the two-block generalized stochastic block model.
//!
//! A [`GsbmSpec`] describes `M = H + λ u uᵀ` where `H` is a symmetric
//! Wigner-type matrix whose entry variances are `α₁/N` inside the first
//! community, `α₂/N` inside the second and `1/N` across, and where the unit
//! spike `u` is constant on each community (`θ₁` on the first `N₁` indices,
//! `θ₂` on the rest).
//!
//! [`SbmParams`] holds raw Bernoulli block-model probabilities;
//! [`from_sbm`] shifts and rescales them into a [`GsbmSpec`].

use serde::{Deserialize, Serialize};

use crate::error::SpecError;

const NORMALIZATION_TOL: f64 = 1e-12;

/// Limiting model parameters.
///
/// When `n` is set the `theta` values are per-entry spike values of a unit
/// vector of length `n`, so `γ n θ₁² + (1−γ) n θ₂² = 1`. When `n` is unset
/// the factor `1/√N` is absorbed into the thetas and the normalization reads
/// `γ θ₁² + (1−γ) θ₂² = 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GsbmSpec {
    pub gamma: f64,
    pub alpha1: f64,
    pub alpha2: f64,
    pub theta1: f64,
    pub theta2: f64,
    pub lambda: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
}

impl GsbmSpec {
    /// Balanced spike `u = (1,…,1)/√N` on a two-block variance profile.
    pub fn flat_spike(gamma: f64, alpha1: f64, alpha2: f64, lambda: f64, n: Option<usize>) -> Self {
        let theta = n.map_or(1.0, |n| 1.0 / (n as f64).sqrt());
        GsbmSpec {
            gamma,
            alpha1,
            alpha2,
            theta1: theta,
            theta2: theta,
            lambda,
            n,
        }
    }

    /// Spike supported on the first community only (`θ₂ = 0`).
    pub fn planted_spike(gamma: f64, alpha1: f64, alpha2: f64, lambda: f64, n: Option<usize>) -> Self {
        let theta1 = match n {
            Some(n) => 1.0 / (gamma * n as f64).sqrt(),
            None => 1.0 / gamma.sqrt(),
        };
        GsbmSpec {
            gamma,
            alpha1,
            alpha2,
            theta1,
            theta2: 0.0,
            lambda,
            n,
        }
    }

    pub fn with_lambda(self, lambda: f64) -> Self {
        GsbmSpec { lambda, ..self }
    }

    /// Size of the first community, `round(γ n)`.
    pub fn n1(&self) -> Option<usize> {
        self.n.map(|n| (self.gamma * n as f64).round() as usize)
    }

    /// Weights `(w₁, w₂)` such that `⟨u, diag(m) u⟩ ≈ w₁ m₁ + w₂ m_N`.
    ///
    /// These sum to one for a validated spec.
    pub fn spike_weights(&self) -> (f64, f64) {
        let scale = self.n.map_or(1.0, |n| n as f64);
        (
            scale * self.gamma * self.theta1 * self.theta1,
            scale * (1.0 - self.gamma) * self.theta2 * self.theta2,
        )
    }

    /// Exchanges the roles of the two communities.
    pub fn swap_blocks(&self) -> Self {
        GsbmSpec {
            gamma: 1.0 - self.gamma,
            alpha1: self.alpha2,
            alpha2: self.alpha1,
            theta1: self.theta2,
            theta2: self.theta1,
            lambda: self.lambda,
            n: self.n,
        }
    }

    /// Largest row sum of the limiting variance profile, `max_i Σ_j N·E[H_ij²]`.
    pub fn max_row_variance(&self) -> f64 {
        let g = self.gamma;
        (self.alpha1 * g + (1.0 - g)).max(g + self.alpha2 * (1.0 - g))
    }

    pub fn validate(self) -> Result<Self, SpecError> {
        validate_spec(self)
    }
}

/// Checks every [`GsbmSpec`] invariant and returns the spec unchanged.
pub fn validate_spec(spec: GsbmSpec) -> Result<GsbmSpec, SpecError> {
    let fields = [
        ("gamma", spec.gamma),
        ("alpha1", spec.alpha1),
        ("alpha2", spec.alpha2),
        ("theta1", spec.theta1),
        ("theta2", spec.theta2),
        ("lambda", spec.lambda),
    ];
    if let Some((name, _)) = fields.iter().find(|(_, v)| !v.is_finite()) {
        return Err(SpecError::NonFinite(name));
    }
    if !(spec.gamma > 0.0 && spec.gamma < 1.0) {
        return Err(SpecError::GammaOutOfRange(spec.gamma));
    }
    if spec.alpha1 < 0.0 {
        return Err(SpecError::NegativeVariance {
            name: "alpha1",
            value: spec.alpha1,
        });
    }
    if spec.alpha2 < 0.0 {
        return Err(SpecError::NegativeVariance {
            name: "alpha2",
            value: spec.alpha2,
        });
    }
    if spec.lambda < 0.0 {
        return Err(SpecError::NegativeLambda(spec.lambda));
    }
    if let Some(n) = spec.n {
        let exact = spec.gamma * n as f64;
        let n1 = exact.round();
        if (exact - n1).abs() > 0.5 {
            return Err(SpecError::BlockSizeMismatch(exact));
        }
        let n1 = n1 as usize;
        if n1 < 2 || n1 + 2 > n {
            return Err(SpecError::BlockTooSmall { n1, n });
        }
        if (exact - n1 as f64).abs() > 1e-9 {
            log::warn!(
                "gamma*n = {exact} is not an integer; using n1 = {n1} and renormalizing the spike"
            );
        }
    }
    let (w1, w2) = spec.spike_weights();
    if ((w1 + w2) - 1.0).abs() > NORMALIZATION_TOL {
        return Err(SpecError::Normalization(w1 + w2));
    }
    Ok(spec)
}

/// Which constant matrix is subtracted from the adjacency matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Shift {
    /// `E₀ = q`; needs `p₂ = q`.
    #[serde(alias = "hidden")]
    HiddenCommunity,
    /// `E₁ = (p+q)/2`; needs `p₁ = p₂`.
    #[serde(alias = "unbalanced")]
    Balanced,
}

impl Shift {
    pub fn name(self) -> &'static str {
        match self {
            Shift::HiddenCommunity => "hidden_community",
            Shift::Balanced => "balanced",
        }
    }
}

/// Raw two-block Bernoulli model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SbmParams {
    pub n: usize,
    pub n1: usize,
    pub p1: f64,
    pub p2: f64,
    pub q: f64,
    #[serde(default = "default_true")]
    pub zero_diagonal: bool,
    pub shift: Shift,
}

fn default_true() -> bool {
    true
}

/// Edge probability `q + w/√N` of the critical-window parametrization.
pub fn p_from_w(q: f64, w: f64, n: usize) -> f64 {
    q + w / (n as f64).sqrt()
}

/// Inverse of [`p_from_w`].
pub fn w_from_p(q: f64, p: f64, n: usize) -> f64 {
    (p - q) * (n as f64).sqrt()
}

impl SbmParams {
    /// One planted community of size `n1` with edge probability `p`.
    pub fn hidden(n: usize, n1: usize, p: f64, q: f64) -> Self {
        SbmParams {
            n,
            n1,
            p1: p,
            p2: q,
            q,
            zero_diagonal: true,
            shift: Shift::HiddenCommunity,
        }
    }

    /// Two communities of sizes `n1` and `n − n1` with equal intra-block
    /// probability `p`.
    pub fn unbalanced(n: usize, n1: usize, p: f64, q: f64) -> Self {
        SbmParams {
            n,
            n1,
            p1: p,
            p2: p,
            q,
            zero_diagonal: true,
            shift: Shift::Balanced,
        }
    }

    pub fn gamma(&self) -> f64 {
        self.n1 as f64 / self.n as f64
    }

    /// Checks block sizes and that probabilities lie in `[0, 1]`.
    ///
    /// This is all the adjacency sampler needs; [`SbmParams::validate`] adds
    /// the conditions required for shifting and rescaling.
    pub fn validate_structure(&self) -> Result<(), SpecError> {
        if self.n1 < 2 || self.n1 + 2 > self.n {
            return Err(SpecError::BlockTooSmall {
                n1: self.n1,
                n: self.n,
            });
        }
        for (name, value) in [("p1", self.p1), ("p2", self.p2), ("q", self.q)] {
            if !(0.0..=1.0).contains(&value) {
                return Err(SpecError::Probability { name, value });
            }
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<(), SpecError> {
        self.validate_structure()?;
        if !(self.q > 0.0 && self.q < 1.0) {
            return Err(SpecError::DegenerateScale(self.q));
        }
        match self.shift {
            Shift::HiddenCommunity if self.p2 != self.q => Err(SpecError::ShiftMismatch {
                shift: "hidden_community",
                requirement: "p2 = q",
            }),
            Shift::Balanced if self.p1 != self.p2 => Err(SpecError::ShiftMismatch {
                shift: "balanced",
                requirement: "p1 = p2",
            }),
            _ => Ok(()),
        }
    }

    /// `1/√(N q (1−q))`.
    pub fn scale(&self) -> Result<f64, SpecError> {
        if !(self.q > 0.0 && self.q < 1.0) {
            return Err(SpecError::DegenerateScale(self.q));
        }
        Ok(1.0 / (self.n as f64 * self.q * (1.0 - self.q)).sqrt())
    }

    /// The constant subtracted from every adjacency entry.
    pub fn shift_matrix(&self) -> ShiftMatrix {
        let value = match self.shift {
            Shift::HiddenCommunity => self.q,
            Shift::Balanced => 0.5 * (self.p1 + self.q),
        };
        ShiftMatrix {
            shift: self.shift,
            value,
        }
    }
}

/// A constant `N × N` matrix (`E₀` or `E₁`), stored as its single value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShiftMatrix {
    pub shift: Shift,
    pub value: f64,
}

/// Output of [`from_sbm`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SbmConversion {
    pub spec: GsbmSpec,
    pub shift: ShiftMatrix,
    pub scale: f64,
}

/// Converts Bernoulli block-model probabilities into the shifted, rescaled
/// model `M = scale · (Ĥ − E)`.
pub fn from_sbm(params: &SbmParams) -> Result<SbmConversion, SpecError> {
    params.validate()?;
    let scale = params.scale()?;
    let n = params.n as f64;
    let n1 = params.n1 as f64;
    let gamma = params.gamma();
    let noise = params.q * (1.0 - params.q);
    let alpha1 = params.p1 * (1.0 - params.p1) / noise;
    let alpha2 = params.p2 * (1.0 - params.p2) / noise;

    let (theta1, theta2, lambda) = match params.shift {
        Shift::HiddenCommunity => (1.0 / n1.sqrt(), 0.0, n1 * (params.p1 - params.q) * scale),
        Shift::Balanced => (
            1.0 / n.sqrt(),
            -1.0 / n.sqrt(),
            0.5 * n * (params.p1 - params.q) * scale,
        ),
    };
    let spec = validate_spec(GsbmSpec {
        gamma,
        alpha1,
        alpha2,
        theta1,
        theta2,
        lambda,
        n: Some(params.n),
    })?;
    Ok(SbmConversion {
        spec,
        shift: params.shift_matrix(),
        scale,
    })
}

/// Distribution of the noise entries `H_ij`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NoiseKind {
    /// `(B − p)/√(N q (1−q))` with `B ~ Bernoulli(p)`; the per-block `p` is
    /// the root of `p(1−p) = α q(1−q)` lying on the same side of 1/2 as `q`.
    CenteredBernoulli { q: f64 },
    Gaussian,
    Rademacher,
}

impl NoiseKind {
    /// Bernoulli noise conventionally has no self-loops; continuous noise
    /// keeps its diagonal.
    pub fn default_zero_diagonal(&self) -> bool {
        matches!(self, NoiseKind::CenteredBernoulli { .. })
    }

    /// Per-block Bernoulli probabilities `(p₁, p₂, q)` implied by a spec.
    pub fn bernoulli_probabilities(&self, spec: &GsbmSpec) -> Result<Option<(f64, f64, f64)>, SpecError> {
        let NoiseKind::CenteredBernoulli { q } = *self else {
            return Ok(None);
        };
        if !(q > 0.0 && q < 1.0) {
            return Err(SpecError::DegenerateScale(q));
        }
        let implied = |alpha: f64, name: &'static str| {
            let disc = 1.0 - 4.0 * alpha * q * (1.0 - q);
            if disc < 0.0 {
                return Err(SpecError::Probability {
                    name,
                    value: f64::NAN,
                });
            }
            let root = 0.5 * (1.0 - disc.sqrt());
            let p = if q <= 0.5 { root } else { 1.0 - root };
            if p > 0.0 && p < 1.0 {
                Ok(p)
            } else {
                Err(SpecError::Probability { name, value: p })
            }
        };
        Ok(Some((implied(spec.alpha1, "p1")?, implied(spec.alpha2, "p2")?, q)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn hidden_community_spec_is_valid() {
        let n = 2500;
        let spec = GsbmSpec::planted_spike(0.25, 1.0, 1.0, 1.0, Some(n));
        assert_relative_eq!(spec.theta1, 1.0 / (0.25f64 * 2500.0).sqrt());
        assert!(validate_spec(spec).is_ok());
    }

    #[test]
    fn balanced_null_model_is_valid() {
        let spec = GsbmSpec::flat_spike(0.5, 1.0, 1.0, 0.0, Some(100));
        assert_eq!(validate_spec(spec), Ok(spec));
    }

    #[test]
    fn rejects_bad_gamma() {
        let spec = GsbmSpec {
            gamma: 1.2,
            ..GsbmSpec::flat_spike(0.5, 1.0, 1.0, 0.0, Some(100))
        };
        let err = validate_spec(spec).unwrap_err();
        assert_eq!(err, SpecError::GammaOutOfRange(1.2));
        assert!(err.to_string().contains("gamma out of range"));
    }

    #[test]
    fn rejects_negative_variance_and_bad_normalization() {
        let base = GsbmSpec::flat_spike(0.5, 1.0, 1.0, 0.0, Some(100));
        assert!(matches!(
            validate_spec(GsbmSpec { alpha2: -0.1, ..base }),
            Err(SpecError::NegativeVariance { name: "alpha2", .. })
        ));
        assert!(matches!(
            validate_spec(GsbmSpec { theta1: 0.2, ..base }),
            Err(SpecError::Normalization(_))
        ));
        assert!(matches!(
            validate_spec(GsbmSpec { lambda: -1.0, ..base }),
            Err(SpecError::NegativeLambda(_))
        ));
        assert!(matches!(
            validate_spec(GsbmSpec { gamma: 0.01, ..base }),
            Err(SpecError::BlockTooSmall { n1: 1, n: 100 })
        ));
    }

    #[test]
    fn absorbed_thetas_without_n() {
        let spec = GsbmSpec::planted_spike(0.3, 2.0, 1.0, 1.0, None);
        assert!(validate_spec(spec).is_ok());
        let (w1, w2) = spec.spike_weights();
        assert_relative_eq!(w1, 1.0, epsilon = 1e-15);
        assert_eq!(w2, 0.0);
    }

    #[test]
    fn hidden_conversion_matches_closed_forms() {
        let conv = from_sbm(&SbmParams::hidden(2500, 625, 0.25, 0.2)).unwrap();
        assert_relative_eq!(conv.spec.alpha1, 1.171875, epsilon = 1e-12);
        assert_relative_eq!(conv.spec.alpha2, 1.0, epsilon = 1e-12);
        assert_relative_eq!(conv.spec.lambda, 1.5625, epsilon = 1e-12);
        // λ = γ w / √(q(1−q)) with w = (p − q)√N = 2.5
        let w = w_from_p(0.2, 0.25, 2500);
        assert_relative_eq!(conv.spec.lambda, 0.25 * w / 0.16f64.sqrt(), epsilon = 1e-12);
        assert_eq!(conv.spec.theta2, 0.0);
        assert_eq!(conv.shift.value, 0.2);
    }

    #[test]
    fn balanced_conversion_matches_closed_forms() {
        let conv = from_sbm(&SbmParams::unbalanced(2500, 625, 0.25, 0.2)).unwrap();
        assert_relative_eq!(conv.spec.lambda, 3.125, epsilon = 1e-12);
        assert_relative_eq!(conv.spec.lambda, 2.5 / (2.0 * 0.16f64.sqrt()), epsilon = 1e-12);
        assert_relative_eq!(conv.spec.theta1, -conv.spec.theta2);
        assert_relative_eq!(conv.shift.value, 0.225);
    }

    #[test]
    fn null_model_has_unit_variances_and_no_spike() {
        let conv = from_sbm(&SbmParams::hidden(400, 100, 0.3, 0.3)).unwrap();
        assert_eq!(conv.spec.alpha1, 1.0);
        assert_eq!(conv.spec.alpha2, 1.0);
        assert_eq!(conv.spec.lambda, 0.0);
    }

    #[test]
    fn conversion_errors() {
        assert_eq!(
            from_sbm(&SbmParams::hidden(100, 20, 0.3, 0.0)).unwrap_err(),
            SpecError::DegenerateScale(0.0)
        );
        let mut bad = SbmParams::hidden(100, 20, 0.3, 0.2);
        bad.p2 = 0.25;
        assert!(matches!(from_sbm(&bad), Err(SpecError::ShiftMismatch { .. })));
        let mut bad = SbmParams::unbalanced(100, 20, 0.3, 0.2);
        bad.p2 = 0.35;
        assert!(matches!(from_sbm(&bad), Err(SpecError::ShiftMismatch { .. })));
    }

    #[test]
    fn alpha_peaks_at_half() {
        let q = 0.2;
        let peak = 0.25 / (q * (1.0 - q));
        for k in 0..=100 {
            let p1 = k as f64 / 100.0;
            let conv = from_sbm(&SbmParams {
                shift: Shift::HiddenCommunity,
                ..SbmParams::hidden(200, 50, p1, q)
            })
            .map(|c| c.spec.alpha1);
            // p1 < q gives a negative spike, which the conversion rejects.
            let alpha1 = p1 * (1.0 - p1) / (q * (1.0 - q));
            assert!(alpha1 <= peak + 1e-15);
            if let Ok(a) = conv {
                assert_relative_eq!(a, alpha1, epsilon = 1e-14);
            }
        }
        assert_relative_eq!(0.5 * 0.5 / (q * (1.0 - q)), peak);
    }

    #[test]
    fn implied_bernoulli_probabilities() {
        let spec = from_sbm(&SbmParams::hidden(2500, 625, 0.25, 0.2)).unwrap().spec;
        let (p1, p2, q) = NoiseKind::CenteredBernoulli { q: 0.2 }
            .bernoulli_probabilities(&spec)
            .unwrap()
            .unwrap();
        assert_relative_eq!(p1, 0.25, epsilon = 1e-12);
        assert_relative_eq!(p2, 0.2, epsilon = 1e-12);
        assert_eq!(q, 0.2);
        let zero = GsbmSpec { alpha1: 0.0, ..spec };
        assert!(NoiseKind::CenteredBernoulli { q: 0.2 }
            .bernoulli_probabilities(&zero)
            .is_err());
    }

    #[test]
    fn json_keys() {
        let spec = GsbmSpec::flat_spike(0.5, 1.0, 1.0, 0.0, Some(100));
        let json = serde_json::to_value(spec).unwrap();
        for key in ["gamma", "alpha1", "alpha2", "theta1", "theta2", "lambda", "n"] {
            assert!(json.get(key).is_some(), "missing {key}");
        }
        let params: SbmParams = serde_json::from_str(
            r#"{"n":100,"n1":25,"p1":0.3,"p2":0.2,"q":0.2,"zero_diagonal":true,"shift":"hidden_community"}"#,
        )
        .unwrap();
        assert_eq!(params.shift, Shift::HiddenCommunity);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn converted_specs_validate(
                n in 20usize..5000,
                frac in 0.1f64..0.9,
                q in 0.01f64..0.99,
                dp in 0.0f64..0.3,
                hidden in any::<bool>(),
            ) {
                let n1 = ((frac * n as f64).round() as usize).clamp(2, n - 2);
                let p = (q + dp).min(1.0);
                let params = if hidden {
                    SbmParams::hidden(n, n1, p, q)
                } else {
                    SbmParams::unbalanced(n, n1, p, q)
                };
                let conv = from_sbm(&params).unwrap();
                prop_assert!(validate_spec(conv.spec).is_ok());
                let check = conv.scale * conv.scale * n as f64 * q * (1.0 - q);
                prop_assert!((check - 1.0).abs() < 1e-12);
            }
        }
    }
}
