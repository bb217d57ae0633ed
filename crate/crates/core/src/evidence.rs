//! The evidential layer: threshold design, classification, misleading-evidence
//! probabilities, sample-size search, and post-data effect-size calculations.
//!
//! Evidence lives on the Delta-SIC scale. For a nested comparison with q
//! restrictions, n observations, and r full-model parameters, the evidence
//! value is a monotone transform of the F statistic,
//! `n log(1 + q F / (n - r)) - q log(n)`, so every probability statement
//! about it maps to a noncentral-F tail. Pre-data design puts the generating
//! noncentrality at the indifference-zone boundary `lambda = n delta^2`,
//! which maximizes both misleading-evidence probabilities; post-data
//! quantities use the same boundary convention.

use crate::error::{Error, Result};
use crate::ncf::NcfParams;

/// Default misleading-evidence budget for both tails.
pub const DEFAULT_GAMMA: f64 = 0.05;

/// Default noncentrality cap for the critical effect-size search.
pub const DEFAULT_DELTA_MAX: f64 = 10.0;

/// Default cap for the sample-size search.
pub const DEFAULT_N_MAX: usize = 1_000_000;

/// Per-observation relative effect size delta (in units of sigma) together
/// with the comparison dimensions q (restrictions) and r (full parameters).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EffectSpec {
    pub delta: f64,
    pub q: usize,
    pub r: usize,
}

impl EffectSpec {
    pub fn new(delta: f64, q: usize, r: usize) -> Result<Self> {
        if !delta.is_finite() || delta < 0.0 {
            return Err(Error::InvalidParameter {
                name: "delta",
                reason: format!("effect size must be finite and >= 0, got {delta}"),
            });
        }
        if q < 1 {
            return Err(Error::InvalidParameter {
                name: "q",
                reason: "at least one restriction is required".into(),
            });
        }
        if r < q + 1 {
            return Err(Error::InvalidParameter {
                name: "r",
                reason: format!("full parameter count r = {r} must be >= q + 1 = {}", q + 1),
            });
        }
        Ok(Self { delta, q, r })
    }

    /// Boundary noncentrality n delta^2.
    pub fn lambda(&self, n: usize) -> f64 {
        n as f64 * self.delta * self.delta
    }
}

/// A complete evidence design: thresholds k1 < k2 on the evidence scale,
/// their F-scale preimages psi1, psi2, and the budgets they were set from.
#[derive(Debug, Clone, Copy)]
pub struct EvidenceDesign {
    pub n: usize,
    pub effect: EffectSpec,
    pub gamma1: f64,
    pub gamma2: f64,
    pub lambda: f64,
    pub psi1: f64,
    pub psi2: f64,
    pub k1: f64,
    pub k2: f64,
}

/// Trichotomy verdict for an observed evidence value.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EvidenceVerdict {
    StrongModel1,
    Inconclusive,
    StrongModel2,
}

impl std::fmt::Display for EvidenceVerdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            EvidenceVerdict::StrongModel1 => f.write_str("strong evidence for model 1"),
            EvidenceVerdict::Inconclusive => f.write_str("inconclusive"),
            EvidenceVerdict::StrongModel2 => f.write_str("strong evidence for model 2"),
        }
    }
}

/// Misleading / weak / veridical probabilities under a single generating
/// noncentrality: m2 is the mass below k1, m1 the mass above k2, w the mass
/// between, and v_j = 1 - (w_j + m_j).
#[derive(Debug, Clone, Copy)]
pub struct ErrorTable {
    pub m1: f64,
    pub m2: f64,
    pub w1: f64,
    pub w2: f64,
    pub v1: f64,
    pub v2: f64,
}

/// Which threshold a sample-size search holds fixed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ThresholdSide {
    /// k1, the strong-evidence-for-model-1 cutoff; budgets the lower tail.
    Lower,
    /// k2, the strong-evidence-for-model-2 cutoff; budgets the upper tail.
    Upper,
}

/// Which model the observed evidence favors.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FavoredModel {
    Model1,
    Model2,
}

/// Maps an F value to the evidence scale (monotone increasing).
pub fn delta_sic_from_f(f: f64, n: usize, q: usize, r: usize) -> f64 {
    let nf = n as f64;
    nf * (1.0 + q as f64 * f / (n - r) as f64).ln() - q as f64 * nf.ln()
}

/// Inverse map from the evidence scale to the F scale.
///
/// Values below the attainable floor `-q log n` (the image of F = 0) have no
/// preimage; tiny negative images from rounding are clamped to zero.
pub fn f_from_delta_sic(delta_sic: f64, n: usize, q: usize, r: usize) -> Result<f64> {
    let nf = n as f64;
    let qf = q as f64;
    let f = (n - r) as f64 / qf * ((qf * nf.ln() + delta_sic) / nf).exp_m1();
    if f < -1e-10 {
        return Err(Error::Domain(format!(
            "evidence value {delta_sic} lies below the attainable floor {}",
            -qf * nf.ln()
        )));
    }
    Ok(f.max(0.0))
}

/// Sets the evidence thresholds for a planned sample size.
///
/// psi1 is the gamma2 quantile and psi2 the (1 - gamma1) quantile of the
/// boundary noncentral F(q, n - r, n delta^2); k1 and k2 are their images on
/// the evidence scale, so the misleading probabilities at the boundary equal
/// the budgets.
pub fn design_thresholds(
    n: usize,
    effect: &EffectSpec,
    gamma1: f64,
    gamma2: f64,
) -> Result<EvidenceDesign> {
    if n <= effect.r {
        return Err(Error::InsufficientData { n, r: effect.r });
    }
    for (name, g) in [("gamma1", gamma1), ("gamma2", gamma2)] {
        if !(g > 0.0 && g < 1.0) {
            return Err(Error::InvalidParameter {
                name,
                reason: format!("budget must lie in (0, 1), got {g}"),
            });
        }
    }
    let lambda = effect.lambda(n);
    let boundary = NcfParams::new(effect.q, n - effect.r, lambda)?;
    let psi1 = boundary.quantile(gamma2)?;
    let psi2 = boundary.quantile(1.0 - gamma1)?;
    let k1 = delta_sic_from_f(psi1, n, effect.q, effect.r);
    let k2 = delta_sic_from_f(psi2, n, effect.q, effect.r);
    Ok(EvidenceDesign {
        n,
        effect: *effect,
        gamma1,
        gamma2,
        lambda,
        psi1,
        psi2,
        k1,
        k2,
    })
}

/// Classifies an observed evidence value against the design thresholds.
/// Boundary ties are inconclusive.
pub fn classify(delta_sic: f64, design: &EvidenceDesign) -> EvidenceVerdict {
    if delta_sic < design.k1 {
        EvidenceVerdict::StrongModel1
    } else if delta_sic > design.k2 {
        EvidenceVerdict::StrongModel2
    } else {
        EvidenceVerdict::Inconclusive
    }
}

/// Trichotomy probabilities of a design evaluated at a caller-supplied true
/// noncentrality. The boundary `lambda = n delta^2` gives the design's worst
/// case for both tails.
pub fn misleading_probs(design: &EvidenceDesign, lambda_true: f64) -> Result<ErrorTable> {
    trichotomy_probs(
        design.n,
        design.effect.q,
        design.effect.r,
        design.k1,
        design.k2,
        lambda_true,
    )
}

/// Trichotomy probabilities for arbitrary fixed thresholds at sample size n.
pub fn trichotomy_probs(
    n: usize,
    q: usize,
    r: usize,
    k1: f64,
    k2: f64,
    lambda_true: f64,
) -> Result<ErrorTable> {
    if n <= r {
        return Err(Error::InsufficientData { n, r });
    }
    let dist = NcfParams::new(q, n - r, lambda_true)?;
    let lower = |k: f64| -> Result<f64> {
        match f_from_delta_sic(k, n, q, r) {
            Ok(img) => dist.cdf(img),
            // Threshold below the attainable floor: no mass below it.
            Err(Error::Domain(_)) => Ok(0.0),
            Err(e) => Err(e),
        }
    };
    let c1 = lower(k1)?;
    let c2 = lower(k2)?;
    let m2 = c1;
    let m1 = (1.0 - c2).clamp(0.0, 1.0);
    let w = (c2 - c1).clamp(0.0, 1.0);
    Ok(ErrorTable {
        m1,
        m2,
        w1: w,
        w2: w,
        v1: (1.0 - (w + m1)).clamp(0.0, 1.0),
        v2: (1.0 - (w + m2)).clamp(0.0, 1.0),
    })
}

/// Smallest n > r whose misleading-evidence probability at the boundary
/// noncentrality satisfies the budget, holding one threshold fixed.
///
/// The search scans upward from r + 1 (the tail probability is not monotone
/// in n near the floor, so a scan is the only way to honor "smallest") and
/// verifies the returned n directly: n satisfies the budget and n - 1 does
/// not (or is not a valid design size).
pub fn sample_size(
    k_fixed: f64,
    side: ThresholdSide,
    effect: &EffectSpec,
    gamma: f64,
    n_max: usize,
) -> Result<usize> {
    if !(gamma > 0.0 && gamma < 1.0) {
        return Err(Error::InvalidParameter {
            name: "gamma",
            reason: format!("budget must lie in (0, 1), got {gamma}"),
        });
    }
    if effect.delta <= 0.0 {
        return Err(Error::InvalidParameter {
            name: "delta",
            reason: "sample-size search requires a positive effect size".into(),
        });
    }
    let budget = |n: usize| -> Result<f64> {
        let table = trichotomy_probs(n, effect.q, effect.r, k_fixed, k_fixed, effect.lambda(n))?;
        Ok(match side {
            ThresholdSide::Lower => table.m2,
            ThresholdSide::Upper => table.m1,
        })
    };
    for n in (effect.r + 1)..=n_max {
        if budget(n)? <= gamma {
            if n > effect.r + 1 {
                debug_assert!(budget(n - 1).map(|m| m > gamma).unwrap_or(true));
            }
            return Ok(n);
        }
    }
    Err(Error::SearchExhausted { cap: n_max })
}

/// Post-data misleading-evidence probability of the observed evidence value
/// under the disfavored model at the boundary noncentrality.
///
/// When model 1 is favored this is P2, the probability (under the boundary
/// alternative) of evidence at least as favorable to model 1 as observed;
/// when model 2 is favored it is P1 = 1 - P2.
pub fn post_data_p(
    delta_sic_obs: f64,
    n: usize,
    effect: &EffectSpec,
    favored: FavoredModel,
) -> Result<f64> {
    if n <= effect.r {
        return Err(Error::InsufficientData { n, r: effect.r });
    }
    let img = f_from_delta_sic(delta_sic_obs, n, effect.q, effect.r)?;
    let dist = NcfParams::new(effect.q, n - effect.r, effect.lambda(n))?;
    let p2 = dist.cdf(img)?;
    Ok(match favored {
        FavoredModel::Model1 => p2,
        FavoredModel::Model2 => 1.0 - p2,
    })
}

/// The effect size delta* at which the post-data P2 of the observed evidence
/// equals gamma. P2 is strictly decreasing in delta, so the root is unique;
/// it is found by bisection on [0, delta_max].
pub fn critical_delta(
    delta_sic_obs: f64,
    n: usize,
    q: usize,
    r: usize,
    gamma: f64,
    delta_max: f64,
) -> Result<f64> {
    if !(gamma > 0.0 && gamma < 1.0) {
        return Err(Error::InvalidParameter {
            name: "gamma",
            reason: format!("target probability must lie in (0, 1), got {gamma}"),
        });
    }
    let p2_at = |delta: f64| -> Result<f64> {
        let effect = EffectSpec::new(delta, q, r)?;
        post_data_p(delta_sic_obs, n, &effect, FavoredModel::Model1)
    };
    let p_lo = p2_at(0.0)?;
    let p_hi = p2_at(delta_max)?;
    if !(p_lo > gamma && p_hi < gamma) {
        return Err(Error::NoSolution(format!(
            "P2 does not cross {gamma} on [0, {delta_max}]: P2(0) = {p_lo:.6}, \
             P2({delta_max}) = {p_hi:.6}"
        )));
    }
    let (mut lo, mut hi) = (0.0_f64, delta_max);
    let mut mid = 0.5 * (lo + hi);
    for _ in 0..200 {
        mid = 0.5 * (lo + hi);
        let p = p2_at(mid)?;
        if (p - gamma).abs() < 1e-6 || (hi - lo) < 1e-10 {
            return Ok(mid);
        }
        if p > gamma {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(mid)
}

/// Per-observation divergence-difference estimate: the evidence value over n.
pub fn delta_k_hat(delta_sic: f64, n: usize) -> f64 {
    delta_sic / n as f64
}
