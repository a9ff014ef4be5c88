//! Ball-mass scaling fits, off-center concentration bound checks with their
//! explicit Taylor constants, and the Morrey-to-H^{-1} embedding chain.

use crate::energies::{h_minus1_with_grid, morrey_norm, riesz_constant, EnergyError, MorreyConfig,
    QuadratureGrid};
use crate::geom::PlanePoint;
use crate::measure::{Measure, MeasureError};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConcentrationError {
    #[error("ball mass vanishes at r = {0}; shrink the fit window")]
    WindowTooWide(f64),
    #[error("operation needs a nonnegative measure; decompose signed input first")]
    SignedInput,
    #[error("no valid samples under 2r < |x| <= R0; support too small")]
    NoValidSamples,
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error(transparent)]
    Measure(#[from] MeasureError),
    #[error(transparent)]
    Energy(#[from] EnergyError),
}

/// Result of a log-log regression of ball mass against radius.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScalingFit {
    pub alpha_hat: f64,
    pub c1_hat: f64,
    pub r_range: (f64, f64),
    /// Coefficient of determination of the regression.
    pub residual: f64,
    /// (radius, ball mass) samples behind the fit.
    pub series: Vec<(f64, f64)>,
}

/// Least-squares line through (ln r, ln mu(B(center, r))): the slope
/// estimates the scaling exponent alpha, the intercept ln c1.
pub fn scaling_exponent_fit(
    mu: &Measure,
    center: PlanePoint,
    radii: &[f64],
) -> Result<ScalingFit, ConcentrationError> {
    if !mu.is_nonnegative() {
        return Err(ConcentrationError::SignedInput);
    }
    if radii.len() < 2 {
        return Err(ConcentrationError::InvalidParameter(
            "need at least 2 radii to fit".into(),
        ));
    }
    let masses = mu.ball_mass_profile(center, radii)?;
    for (r, m) in radii.iter().zip(&masses) {
        if *m <= 0.0 {
            return Err(ConcentrationError::WindowTooWide(*r));
        }
    }
    let xs: Vec<f64> = radii.iter().map(|r| r.ln()).collect();
    let ys: Vec<f64> = masses.iter().map(|m| m.ln()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| {
            let e = y - (slope * x + intercept);
            e * e
        })
        .sum();
    let ss_tot: f64 = ys.iter().map(|y| (y - my) * (y - my)).sum();
    let residual = if ss_tot > 0.0 {
        (1.0 - ss_res / ss_tot).clamp(0.0, 1.0)
    } else {
        1.0
    };
    Ok(ScalingFit {
        alpha_hat: slope,
        c1_hat: intercept.exp(),
        r_range: (radii[0], radii[radii.len() - 1]),
        residual,
        series: radii.iter().copied().zip(masses).collect(),
    })
}

/// Taylor remainder coefficient
/// `c(alpha) = (alpha |alpha-1| / 2) ((1/2)^{alpha-2} + (3/2)^{alpha-2})`,
/// the worst-case second-order term of the annulus expansion over offsets
/// below half the center radius.
pub fn taylor_remainder_coefficient(alpha: f64) -> f64 {
    (alpha * (alpha - 1.0).abs() / 2.0) * (0.5f64.powf(alpha - 2.0) + 1.5f64.powf(alpha - 2.0))
}

/// Explicit concentration constant for off-center ball masses of a measure
/// obeying `mu(B(0, r)) = c1 r^alpha` up to radius R0:
/// `C = c1 (2 alpha + c(alpha)/2) R0^{alpha-1}` when alpha >= 1 (bounding
/// `mu(B(x, r)) <= C r`), and `C = c1 (2 alpha + c(alpha)/2)` when
/// alpha < 1 (bounding `mu(B(x, r)) <= C r |x|^{alpha-1}`), both on the
/// sample region 2r < |x| <= R0.
pub fn taylor_constant(alpha: f64, c1: f64, r0: f64) -> f64 {
    let base = c1 * (2.0 * alpha + 0.5 * taylor_remainder_coefficient(alpha));
    if alpha >= 1.0 {
        base * r0.powf(alpha - 1.0)
    } else {
        base
    }
}

/// Scaling regime selector for the off-center bound.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScalingRegime {
    AlphaGeqOne,
    AlphaLtOne,
}

/// Configuration of the seeded off-center sampling.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct BoundCheckConfig {
    pub alpha: f64,
    pub c1: f64,
    pub r0: f64,
    pub n_samples: usize,
    pub seed: u64,
    /// Lower bound on |x|; set to twice the truncation radius for model
    /// spirals whose ball-mass law only holds above a cutoff.
    pub x_min: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BoundCheckReport {
    /// Empirical constant: max of mu(B(x,r))/r (alpha >= 1) or
    /// mu(B(x,r))/(r |x|^{alpha-1}) (alpha < 1) over the samples.
    pub worst_ratio: f64,
    pub worst_center: PlanePoint,
    pub worst_radius: f64,
    pub n_samples: usize,
    pub n_valid: usize,
    pub regime: ScalingRegime,
    /// The proof-side constant for the same parameters, for comparison.
    pub taylor_constant: f64,
}

/// Empirically bounds off-center ball masses over seeded samples with
/// 2r < |x| <= R0, drawn in a tube around the support with log-uniform
/// center radii. Deterministic for a fixed seed; extending `n_samples`
/// reuses the earlier draws.
pub fn offcenter_bound_check(
    mu: &Measure,
    cfg: &BoundCheckConfig,
) -> Result<BoundCheckReport, ConcentrationError> {
    if !mu.is_nonnegative() {
        return Err(ConcentrationError::SignedInput);
    }
    if !cfg.r0.is_finite() || cfg.r0 <= 0.0 || !cfg.alpha.is_finite() || cfg.alpha <= 0.0 {
        return Err(ConcentrationError::InvalidParameter(
            "need alpha > 0 and R0 > 0".into(),
        ));
    }
    if cfg.n_samples == 0 {
        return Err(ConcentrationError::InvalidParameter(
            "need at least one sample".into(),
        ));
    }
    // Anchor points spread along the support (atoms, or points spaced along
    // each mass-carrying segment), sorted by radius for tube sampling.
    let mut anchors: Vec<PlanePoint> = Vec::new();
    match mu {
        Measure::Atomic(m) => anchors.extend(m.atoms().iter().map(|(p, _)| *p)),
        Measure::Curve(c) => {
            let target = cfg.r0 / 256.0;
            for seg in c.segments().filter(|s| s.density != 0.0) {
                let k = ((seg.len() / target).ceil() as usize).clamp(1, 1024);
                for i in 0..k {
                    anchors.push(seg.a.lerp(seg.b, (i as f64 + 0.5) / k as f64));
                }
            }
        }
    }
    let mut by_radius: Vec<(f64, PlanePoint)> = anchors
        .into_iter()
        .map(|p| (p.norm(), p))
        .filter(|(r, _)| *r > 0.0)
        .collect();
    by_radius.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    if by_radius.is_empty() {
        return Err(ConcentrationError::NoValidSamples);
    }
    let r_lo = cfg
        .x_min
        .max(by_radius[0].0)
        .max(1e-9 * cfg.r0);
    let r_hi = cfg.r0;
    if r_lo >= r_hi {
        return Err(ConcentrationError::NoValidSamples);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    // Draws happen serially so a longer run extends a shorter one.
    let mut samples: Vec<(PlanePoint, f64)> = Vec::with_capacity(cfg.n_samples);
    let (ln_lo, ln_hi) = (r_lo.ln(), r_hi.ln());
    for _ in 0..cfg.n_samples {
        let target = (rng.gen_range(ln_lo..ln_hi)).exp();
        let idx = by_radius
            .partition_point(|(r, _)| *r < target)
            .min(by_radius.len() - 1);
        let anchor = by_radius[idx].1;
        let r_ball = (rng.gen_range((5e-4f64).ln()..(0.4995f64).ln())).exp() * target;
        // Jitter the center within half a ball radius of the support point.
        let ang = rng.gen_range(0.0..2.0 * PI);
        let rad = 0.5 * r_ball * rng.gen_range(0.0f64..1.0).sqrt();
        let x = anchor + PlanePoint::new(rad * ang.cos(), rad * ang.sin());
        let xn = x.norm();
        if xn < r_lo || xn > r_hi {
            continue;
        }
        // Enforce 2r < |x| after the jitter.
        let r_eff = r_ball.min(0.4995 * xn);
        samples.push((x, r_eff));
    }
    if samples.is_empty() {
        return Err(ConcentrationError::NoValidSamples);
    }
    let regime = if cfg.alpha >= 1.0 {
        ScalingRegime::AlphaGeqOne
    } else {
        ScalingRegime::AlphaLtOne
    };
    let alpha = cfg.alpha;
    let ratios: Vec<f64> = samples
        .par_iter()
        .map(|&(x, r)| {
            let m = mu.ball_mass(x, r).expect("validated sample");
            match regime {
                ScalingRegime::AlphaGeqOne => m / r,
                ScalingRegime::AlphaLtOne => m / (r * x.norm().powf(alpha - 1.0)),
            }
        })
        .collect();
    let mut worst = f64::MIN;
    let mut worst_idx = 0;
    for (i, &v) in ratios.iter().enumerate() {
        if v > worst {
            worst = v;
            worst_idx = i;
        }
    }
    Ok(BoundCheckReport {
        worst_ratio: worst,
        worst_center: samples[worst_idx].0,
        worst_radius: samples[worst_idx].1,
        n_samples: cfg.n_samples,
        n_valid: samples.len(),
        regime,
        taylor_constant: taylor_constant(cfg.alpha, cfg.c1, cfg.r0),
    })
}

/// Both sides of the Morrey-to-H^{-1} embedding chain at one cutoff.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EmbeddingReport {
    pub p: f64,
    pub s: f64,
    pub cutoff: f64,
    /// Truncated H^{-1} norm squared of the measure.
    pub lhs: f64,
    /// Explicit chain bound using the measured total variation.
    pub rhs: f64,
    /// Bound with |mu|(Omega) also expressed through the Morrey norm.
    pub rhs_morrey_only: f64,
    pub morrey_norm: f64,
    pub total_variation: f64,
    pub diameter: f64,
    pub holds: bool,
}

/// Checks `||mu||_{H^-1}^2 <= (2 pi)^2 c(s,2)^{-1} 2 s ||mu||_{M^p}
/// [1/(2 - 2/p - s) + (diam)^{2(1-1/p)} / s] |mu|(Omega)` at a truncation
/// cutoff (truncation only shrinks the left side), plus the fully
/// Morrey-expressed variant via |mu|(Omega) <= (diam)^{2(1-1/p)} ||mu||_{M^p}.
pub fn embedding_chain_check(
    mu: &Measure,
    p: f64,
    s: f64,
    cutoff: f64,
    morrey_cfg: &MorreyConfig,
) -> Result<EmbeddingReport, ConcentrationError> {
    if !p.is_finite() || p <= 1.0 {
        return Err(ConcentrationError::InvalidParameter(format!(
            "need p > 1 (tests use p > n/2 = 1), got {p}"
        )));
    }
    let s_max = 2.0 - 2.0 / p;
    if !s.is_finite() || s <= 0.0 || s >= s_max {
        return Err(ConcentrationError::Energy(EnergyError::BoundExponent {
            s,
            max: s_max,
        }));
    }
    if mu.is_empty() {
        return Ok(EmbeddingReport {
            p,
            s,
            cutoff,
            lhs: 0.0,
            rhs: 0.0,
            rhs_morrey_only: 0.0,
            morrey_norm: 0.0,
            total_variation: 0.0,
            diameter: 0.0,
            holds: true,
        });
    }
    let grid = QuadratureGrid::auto(cutoff, mu)?;
    let lhs = h_minus1_with_grid(mu, &grid)?.value;
    let morrey = morrey_norm(mu, p, morrey_cfg)?.value;
    let tv = mu.total_variation();
    let diam = mu.diameter();
    let np = 2.0 * (1.0 - 1.0 / p);
    let bracket = 1.0 / (s_max - s) + diam.powf(np) / s;
    let front = (2.0 * PI).powi(2) / riesz_constant(s, 2) * 2.0 * s * morrey * bracket;
    let rhs = front * tv;
    let rhs_morrey_only = front * diam.powf(np) * morrey;
    Ok(EmbeddingReport {
        p,
        s,
        cutoff,
        lhs,
        rhs,
        rhs_morrey_only,
        morrey_norm: morrey,
        total_variation: tv,
        diameter: diam,
        holds: lhs <= rhs && lhs <= rhs_morrey_only,
    })
}
