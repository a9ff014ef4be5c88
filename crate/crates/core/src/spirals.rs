//! Spiral vortex-sheet generators: the Prandtl two-branch spiral, the
//! self-similar ansatz, and a similitude-law Kaden-class model spiral.
//!
//! The Prandtl curve is z = tau^q Gamma^nu for Gamma > 0 and
//! z = -tau^q |Gamma|^nu for Gamma < 0, with nu = 1/2 + i b,
//! q = 1/2 + i b mu, tau = p t + 1. Cumulated vorticity Gamma is the
//! parametrization variable, so generated polylines store it exactly.

use crate::geom::PlanePoint;
use crate::measure::{CurveMeasure, MeasureError};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SpiralError {
    #[error("collapse regime: tau = p*t + 1 = {tau}, need tau > 0")]
    Collapse { tau: f64 },
    #[error("circulation must be finite and nonzero, got {0}")]
    InvalidGamma(f64),
    #[error("similitude exponent needs m > 1/2, got m = {0}")]
    DegenerateExponent(f64),
    #[error("invalid sampling: {0}")]
    InvalidSampling(String),
    #[error("invalid profile: {0}")]
    InvalidProfile(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error(transparent)]
    Measure(#[from] MeasureError),
}

/// Parameters of the Prandtl spiral family.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct PrandtlParams {
    pub b: f64,
    pub mu: f64,
    /// Rate in tau = p t + 1; p < 0 collapses the spiral at t = -1/p.
    pub p: f64,
    pub t: f64,
}

impl PrandtlParams {
    pub fn tau(&self) -> f64 {
        self.p * self.t + 1.0
    }

    pub fn nu(&self) -> Complex64 {
        Complex64::new(0.5, self.b)
    }

    pub fn q(&self) -> Complex64 {
        Complex64::new(0.5, self.b * self.mu)
    }

    /// Spiral radius at circulation `gamma_max`: |z| = sqrt(tau * Gamma).
    pub fn reach(&self, gamma_max: f64) -> f64 {
        (self.tau() * gamma_max).sqrt()
    }

    fn checked_tau(&self) -> Result<f64, SpiralError> {
        if ![self.b, self.mu, self.p, self.t].iter().all(|v| v.is_finite()) {
            return Err(SpiralError::InvalidParameter(
                "Prandtl parameters must be finite".into(),
            ));
        }
        let tau = self.tau();
        if tau <= 0.0 {
            return Err(SpiralError::Collapse { tau });
        }
        Ok(tau)
    }
}

/// Discretization control for circulation-parametrized spirals: samples on
/// `(0, gamma_max]`, geometrically clustered toward 0 by the grading
/// exponent.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SpiralSampling {
    pub gamma_max: f64,
    pub n_samples: usize,
    pub grading: f64,
}

impl SpiralSampling {
    pub fn new(gamma_max: f64, n_samples: usize, grading: f64) -> Result<Self, SpiralError> {
        if !gamma_max.is_finite() || gamma_max <= 0.0 {
            return Err(SpiralError::InvalidSampling(format!(
                "gamma_max must be positive, got {gamma_max}"
            )));
        }
        if n_samples < 2 {
            return Err(SpiralError::InvalidSampling(format!(
                "n_samples must be >= 2, got {n_samples}"
            )));
        }
        if !grading.is_finite() || grading < 1.0 {
            return Err(SpiralError::InvalidSampling(format!(
                "grading must be >= 1, got {grading}"
            )));
        }
        Ok(SpiralSampling {
            gamma_max,
            n_samples,
            grading,
        })
    }

    /// Ascending circulation samples Gamma_j = gamma_max (j/n)^grading,
    /// j = 1..=n.
    fn gamma_values(&self) -> Vec<f64> {
        let n = self.n_samples;
        (1..=n)
            .map(|j| self.gamma_max * (j as f64 / n as f64).powf(self.grading))
            .collect()
    }
}

/// Branch selector for single-branch Prandtl generation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Branch {
    Positive,
    Negative,
}

/// Evaluates the Prandtl spiral point for a nonzero circulation. The modulus
/// satisfies |z| = sqrt(tau |Gamma|).
pub fn prandtl_point(params: &PrandtlParams, gamma: f64) -> Result<PlanePoint, SpiralError> {
    let tau = params.checked_tau()?;
    if !gamma.is_finite() || gamma == 0.0 {
        return Err(SpiralError::InvalidGamma(gamma));
    }
    // Principal logs: both bases are positive reals.
    let w = params.q() * tau.ln() + params.nu() * gamma.abs().ln();
    let z = w.exp();
    let sign = if gamma > 0.0 { 1.0 } else { -1.0 };
    Ok(PlanePoint::new(sign * z.re, sign * z.im))
}

/// Exact mass of `B(0, r)` under the positive branch: r^2 / (p t + 1).
/// Closed-form oracle for ball-mass convergence studies.
pub fn prandtl_ball_mass_exact(params: &PrandtlParams, r: f64) -> Result<f64, SpiralError> {
    let tau = params.checked_tau()?;
    if !r.is_finite() || r < 0.0 {
        return Err(SpiralError::InvalidParameter(format!(
            "radius must be nonnegative, got {r}"
        )));
    }
    Ok(r * r / tau)
}

/// Single branch of the Prandtl spiral as a polyline anchored at the origin.
/// The stored cumulative vorticity at vertex j is exactly the (signed)
/// circulation sample.
pub fn prandtl_branch(
    params: &PrandtlParams,
    sampling: &SpiralSampling,
    branch: Branch,
) -> Result<CurveMeasure, SpiralError> {
    params.checked_tau()?;
    let gammas = sampling.gamma_values();
    let sign = match branch {
        Branch::Positive => 1.0,
        Branch::Negative => -1.0,
    };
    let mut verts = Vec::with_capacity(gammas.len() + 1);
    let mut cum = Vec::with_capacity(gammas.len() + 1);
    verts.push(PlanePoint::ORIGIN);
    cum.push(0.0);
    for &g in &gammas {
        verts.push(prandtl_point(params, sign * g)?);
        cum.push(sign * g);
    }
    let dens = densities_from_cumulative(&verts, &cum)?;
    Ok(CurveMeasure::from_trusted_parts(verts, dens, cum))
}

/// Two-branch signed Prandtl measure on a single polyline, traversed from
/// the outer end of the negative branch through the origin to the outer end
/// of the positive branch. The stored cumulative vorticity is the prefix
/// integral from the traversal start; relative to the origin vertex it
/// equals the signed circulation samples on both branches.
pub fn prandtl_curve(
    params: &PrandtlParams,
    sampling: &SpiralSampling,
) -> Result<CurveMeasure, SpiralError> {
    params.checked_tau()?;
    let gammas = sampling.gamma_values();
    let n = gammas.len();
    let gmax = gammas[n - 1];
    let mut verts = Vec::with_capacity(2 * n + 1);
    let mut cum = Vec::with_capacity(2 * n + 1);
    for (k, &g) in gammas.iter().rev().enumerate() {
        verts.push(prandtl_point(params, -g)?);
        // Prefix mass from the outer negative end: Gamma_j - Gamma_max.
        cum.push(g - gmax);
        let _ = k;
    }
    verts.push(PlanePoint::ORIGIN);
    cum.push(-gmax);
    for &g in &gammas {
        verts.push(prandtl_point(params, g)?);
        cum.push(g - gmax);
    }
    let dens = densities_from_cumulative(&verts, &cum)?;
    Ok(CurveMeasure::from_trusted_parts(verts, dens, cum))
}

fn densities_from_cumulative(
    verts: &[PlanePoint],
    cum: &[f64],
) -> Result<Vec<f64>, SpiralError> {
    let mut dens = Vec::with_capacity(verts.len().saturating_sub(1));
    for k in 0..verts.len() - 1 {
        let len = verts[k].dist(verts[k + 1]);
        if !(len > 0.0) {
            return Err(SpiralError::InvalidSampling(format!(
                "degenerate segment at vertex {k}; increase sampling resolution"
            )));
        }
        dens.push((cum[k + 1] - cum[k]) / len);
    }
    Ok(dens)
}

/// Similitude exponent lambda = 2 - 1/m, defined for m > 1/2.
pub fn similitude_exponent(m: f64) -> Result<f64, SpiralError> {
    if !m.is_finite() || m <= 0.5 {
        return Err(SpiralError::DegenerateExponent(m));
    }
    Ok(2.0 - 1.0 / m)
}

/// Tabulated profile function of the angle, evaluated by linear
/// interpolation on a strictly increasing knot grid.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Profile {
    thetas: Vec<f64>,
    values: Vec<f64>,
}

impl Profile {
    pub fn new(thetas: Vec<f64>, values: Vec<f64>) -> Result<Self, SpiralError> {
        if thetas.len() < 2 || thetas.len() != values.len() {
            return Err(SpiralError::InvalidProfile(format!(
                "need matching knot/value lists of length >= 2, got {}/{}",
                thetas.len(),
                values.len()
            )));
        }
        if thetas.iter().chain(values.iter()).any(|v| !v.is_finite()) {
            return Err(SpiralError::InvalidProfile("non-finite profile entry".into()));
        }
        if !thetas.windows(2).all(|w| w[0] < w[1]) {
            return Err(SpiralError::InvalidProfile(
                "profile knots must be strictly increasing".into(),
            ));
        }
        Ok(Profile { thetas, values })
    }

    /// Dense sampling of a closure over `[theta0, theta1]`.
    pub fn from_fn(
        theta0: f64,
        theta1: f64,
        n: usize,
        f: impl Fn(f64) -> f64,
    ) -> Result<Self, SpiralError> {
        if n < 2 || !(theta1 > theta0) {
            return Err(SpiralError::InvalidProfile(
                "need theta1 > theta0 and at least 2 knots".into(),
            ));
        }
        let thetas: Vec<f64> = (0..n)
            .map(|i| theta0 + (theta1 - theta0) * i as f64 / (n - 1) as f64)
            .collect();
        let values = thetas.iter().map(|&t| f(t)).collect();
        Profile::new(thetas, values)
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.thetas[0], *self.thetas.last().unwrap())
    }

    pub fn eval(&self, theta: f64) -> Result<f64, SpiralError> {
        let (lo, hi) = self.domain();
        if !(theta >= lo && theta <= hi) {
            return Err(SpiralError::InvalidProfile(format!(
                "theta = {theta} outside profile domain [{lo}, {hi}]"
            )));
        }
        let idx = match self
            .thetas
            .binary_search_by(|t| t.partial_cmp(&theta).unwrap())
        {
            Ok(i) => return Ok(self.values[i]),
            Err(i) => i,
        };
        let (t0, t1) = (self.thetas[idx - 1], self.thetas[idx]);
        let w = (theta - t0) / (t1 - t0);
        Ok(self.values[idx - 1] * (1.0 - w) + self.values[idx] * w)
    }
}

/// Self-similar sheet data: positions t^m f(theta) e^{i theta} carrying
/// cumulated vorticity t^{2m-1} g(theta).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SelfSimilarParams {
    pub m: f64,
    pub t: f64,
    pub f_profile: Profile,
    pub g_profile: Profile,
}

/// Samples the self-similar ansatz on `n_samples` uniform angles in
/// `theta_range`. The cumulative vorticity is anchored at the first sample,
/// so it equals t^{2m-1} g(theta) exactly when g vanishes there. The
/// vorticity profile must be monotone over the sampled branch.
pub fn self_similar_curve(
    params: &SelfSimilarParams,
    theta_range: (f64, f64),
    n_samples: usize,
) -> Result<CurveMeasure, SpiralError> {
    similitude_exponent(params.m)?;
    if !params.t.is_finite() || params.t <= 0.0 {
        return Err(SpiralError::InvalidParameter(format!(
            "time must be positive, got {}",
            params.t
        )));
    }
    if n_samples < 2 {
        return Err(SpiralError::InvalidSampling(format!(
            "n_samples must be >= 2, got {n_samples}"
        )));
    }
    let (th0, th1) = theta_range;
    if !(th1 > th0) || !th0.is_finite() || !th1.is_finite() {
        return Err(SpiralError::InvalidSampling(format!(
            "need an increasing finite theta range, got ({th0}, {th1})"
        )));
    }
    let pos_scale = params.t.powf(params.m);
    let gamma_scale = params.t.powf(2.0 * params.m - 1.0);
    let mut verts = Vec::with_capacity(n_samples);
    let mut gamma = Vec::with_capacity(n_samples);
    for i in 0..n_samples {
        let th = th0 + (th1 - th0) * i as f64 / (n_samples - 1) as f64;
        let f = params.f_profile.eval(th)?;
        let g = params.g_profile.eval(th)?;
        let (sin_t, cos_t) = th.sin_cos();
        verts.push(PlanePoint::new(pos_scale * f * cos_t, pos_scale * f * sin_t));
        gamma.push(gamma_scale * g);
    }
    let nondecreasing = gamma.windows(2).all(|w| w[1] >= w[0]);
    let nonincreasing = gamma.windows(2).all(|w| w[1] <= w[0]);
    if !(nondecreasing || nonincreasing) {
        return Err(SpiralError::InvalidProfile(
            "vorticity profile must be monotone on the sampled branch".into(),
        ));
    }
    let cum: Vec<f64> = gamma.iter().map(|g| g - gamma[0]).collect();
    let dens = densities_from_cumulative(&verts, &cum)?;
    Ok(CurveMeasure::from_trusted_parts(verts, dens, cum))
}

/// Parameters of the similitude-law model spiral.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct KadenParams {
    pub c2: f64,
    pub m: f64,
    pub r_min: f64,
    pub r_max: f64,
    pub n_samples: usize,
}

/// Model spiral r(theta) = theta^{-m} winding into the origin, truncated at
/// `r_min`, whose cumulated vorticity is assigned so that the mass of
/// `B(0, r)` equals `c2 r^lambda` with lambda = 2 - 1/m, exactly at the
/// construction radii. Mass below `r_min` rides on a chord from the origin,
/// so the law holds at every vertex radius despite the truncation.
///
/// The angular step is kept below 2m/theta (uniform sampling in theta^2),
/// which makes every chord's distance to the origin monotone along the
/// chord; the sample count is raised above `n_samples` when necessary.
pub fn kaden_model(params: &KadenParams) -> Result<CurveMeasure, SpiralError> {
    let lambda = similitude_exponent(params.m)?;
    if !params.c2.is_finite() || params.c2 <= 0.0 {
        return Err(SpiralError::InvalidParameter(format!(
            "c2 must be positive, got {}",
            params.c2
        )));
    }
    if !(params.r_min.is_finite() && params.r_max.is_finite())
        || params.r_min <= 0.0
        || params.r_max <= params.r_min
    {
        return Err(SpiralError::InvalidParameter(format!(
            "need 0 < r_min < r_max, got [{}, {}]",
            params.r_min, params.r_max
        )));
    }
    if params.n_samples < 2 {
        return Err(SpiralError::InvalidSampling(format!(
            "n_samples must be >= 2, got {}",
            params.n_samples
        )));
    }
    let theta_outer = params.r_max.powf(-1.0 / params.m);
    let theta_inner = params.r_min.powf(-1.0 / params.m);
    let u_lo = theta_outer * theta_outer;
    let u_hi = theta_inner * theta_inner;
    let n_exact = ((u_hi - u_lo) / (2.0 * params.m)).ceil() as usize;
    let n = params.n_samples.max(n_exact).max(2);

    let mut verts = Vec::with_capacity(n + 2);
    let mut cum = Vec::with_capacity(n + 2);
    verts.push(PlanePoint::ORIGIN);
    cum.push(0.0);
    // k = n is the innermost sample (theta_inner), k = 0 the outermost.
    for k in (0..=n).rev() {
        let u = u_lo + (u_hi - u_lo) * k as f64 / n as f64;
        let theta = u.sqrt();
        let r = theta.powf(-params.m);
        let (sin_t, cos_t) = theta.sin_cos();
        verts.push(PlanePoint::new(r * cos_t, r * sin_t));
        cum.push(params.c2 * r.powf(lambda));
    }
    let dens = densities_from_cumulative(&verts, &cum)?;
    Ok(CurveMeasure::from_trusted_parts(verts, dens, cum))
}

/// Uniform positive measure of the given total mass on a regular polygon
/// inscribed in the circle of the given radius. Standard analysis fixture.
pub fn circle_measure(radius: f64, mass: f64, n: usize) -> Result<CurveMeasure, SpiralError> {
    if !(radius.is_finite() && mass.is_finite()) || radius <= 0.0 || mass <= 0.0 {
        return Err(SpiralError::InvalidParameter(format!(
            "need positive radius and mass, got {radius}, {mass}"
        )));
    }
    if n < 3 {
        return Err(SpiralError::InvalidSampling(format!(
            "a polygon needs at least 3 vertices, got {n}"
        )));
    }
    let mut verts = Vec::with_capacity(n + 1);
    let mut cum = Vec::with_capacity(n + 1);
    for k in 0..=n {
        let th = 2.0 * std::f64::consts::PI * (k % n) as f64 / n as f64;
        let (sin_t, cos_t) = th.sin_cos();
        verts.push(PlanePoint::new(radius * cos_t, radius * sin_t));
        cum.push(mass * k as f64 / n as f64);
    }
    let dens = densities_from_cumulative(&verts, &cum)?;
    Ok(CurveMeasure::from_trusted_parts(verts, dens, cum))
}
