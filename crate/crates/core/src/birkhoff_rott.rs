//! Regularized Birkhoff-Rott evolution of a discretized vortex sheet.
//!
//! Markers carry circulation increments (the sheet is sampled in the
//! circulation variable), and the principal-value kernel is replaced by the
//! blob-regularized form with smoothing length delta:
//!
//! `d/dt conj(z_j) = (1/2 pi i) sum_{k != j} dGamma_k (conj(z_j) - conj(z_k))
//!                    / (|z_j - z_k|^2 + delta^2)`
//!
//! The regularized dynamics conserve total circulation, linear impulse, and
//! the blob Hamiltonian exactly; time stepping is classical RK4, so observed
//! drifts measure the integrator.

use crate::energies::{h_minus1_truncated, EnergyError};
use crate::measure::Measure;
use crate::spirals::{prandtl_branch, Branch, PrandtlParams, SpiralError, SpiralSampling};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum BrError {
    #[error("coincident markers {i} and {j} with delta = 0")]
    SingularConfiguration { i: usize, j: usize },
    #[error("delta = 0 is reserved for analytic comparisons with at most 4 markers, got {0}")]
    UnregularizedTooLarge(usize),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("non-finite marker after step {step} (t = {time}); last valid state retained")]
    BlowUp {
        step: usize,
        time: f64,
        last: Box<SheetState>,
    },
    #[error("collapse diagnostic requires p < 0, got p = {0}")]
    CollapseRequiresNegativeP(f64),
    #[error("time {t} is not strictly below the collapse time {t_collapse}")]
    BeyondCollapse { t: f64, t_collapse: f64 },
    #[error(transparent)]
    Spiral(#[from] SpiralError),
    #[error(transparent)]
    Energy(#[from] EnergyError),
    #[error(transparent)]
    Measure(#[from] crate::measure::MeasureError),
}

/// Marker discretization of a vortex sheet: complex positions, per-marker
/// circulation increments (a material label, never mutated by evolution),
/// and the current time.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SheetState {
    pub markers: Vec<Complex64>,
    pub d_gamma: Vec<f64>,
    pub time: f64,
}

impl SheetState {
    pub fn new(markers: Vec<Complex64>, d_gamma: Vec<f64>, time: f64) -> Result<Self, BrError> {
        if markers.len() != d_gamma.len() {
            return Err(BrError::InvalidConfig(format!(
                "{} markers but {} circulation increments",
                markers.len(),
                d_gamma.len()
            )));
        }
        if markers.iter().any(|z| !z.re.is_finite() || !z.im.is_finite())
            || d_gamma.iter().any(|g| !g.is_finite())
        {
            return Err(BrError::InvalidConfig("non-finite marker data".into()));
        }
        Ok(SheetState {
            markers,
            d_gamma,
            time,
        })
    }

    /// Samples a curve measure into markers: segment midpoints carrying the
    /// segment masses as circulation increments.
    pub fn from_curve(curve: &crate::measure::CurveMeasure, time: f64) -> Self {
        let mut markers = Vec::new();
        let mut d_gamma = Vec::new();
        for seg in curve.segments() {
            if seg.density == 0.0 {
                continue;
            }
            let m = seg.midpoint();
            markers.push(Complex64::new(m.x, m.y));
            d_gamma.push(seg.mass());
        }
        SheetState {
            markers,
            d_gamma,
            time,
        }
    }

    pub fn len(&self) -> usize {
        self.markers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.markers.is_empty()
    }

    fn is_finite(&self) -> bool {
        self.markers
            .iter()
            .all(|z| z.re.is_finite() && z.im.is_finite())
    }
}

/// Evolution parameters; the integrator is fixed fourth-order Runge-Kutta.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct BrConfig {
    /// Blob smoothing length; must be positive except for tiny
    /// analytic-comparison systems.
    pub delta: f64,
    pub dt: f64,
    pub steps: usize,
    /// Observation stride in steps (0 means observe only start and end).
    pub observe_every: usize,
}

impl BrConfig {
    fn validate(&self, n_markers: usize) -> Result<(), BrError> {
        if !self.delta.is_finite() || self.delta < 0.0 {
            return Err(BrError::InvalidConfig(format!(
                "delta must be nonnegative, got {}",
                self.delta
            )));
        }
        if self.delta == 0.0 && n_markers > 4 {
            return Err(BrError::UnregularizedTooLarge(n_markers));
        }
        if !self.dt.is_finite() || self.dt == 0.0 {
            return Err(BrError::InvalidConfig(format!(
                "dt must be nonzero and finite, got {}",
                self.dt
            )));
        }
        Ok(())
    }
}

/// Blob-regularized sheet velocities: O(N^2) sum, rows evaluated in parallel
/// and reduced in fixed order.
pub fn br_velocity(state: &SheetState, delta: f64) -> Result<Vec<Complex64>, BrError> {
    if !delta.is_finite() || delta < 0.0 {
        return Err(BrError::InvalidConfig(format!(
            "delta must be nonnegative, got {delta}"
        )));
    }
    if delta == 0.0 && state.len() > 4 {
        return Err(BrError::UnregularizedTooLarge(state.len()));
    }
    let d2 = delta * delta;
    let z = &state.markers;
    let g = &state.d_gamma;
    // Fail fast on singular pairs when unregularized.
    if delta == 0.0 {
        for i in 0..z.len() {
            for j in (i + 1)..z.len() {
                if z[i] == z[j] {
                    return Err(BrError::SingularConfiguration { i, j });
                }
            }
        }
    }
    let vel: Vec<Complex64> = (0..z.len())
        .into_par_iter()
        .map(|j| {
            let zj = z[j];
            let mut acc = Complex64::new(0.0, 0.0);
            for k in 0..z.len() {
                if k == j {
                    continue;
                }
                let dz = zj - z[k];
                let denom = dz.norm_sqr() + d2;
                acc += (g[k] / denom) * dz;
            }
            // conj of (1 / 2 pi i) * conj(acc) = (i / 2 pi) * acc.
            Complex64::new(0.0, 1.0 / (2.0 * std::f64::consts::PI)) * acc
        })
        .collect();
    Ok(vel)
}

/// One classical RK4 step; circulation increments ride along unchanged.
pub fn step(state: &SheetState, config: &BrConfig) -> Result<SheetState, BrError> {
    config.validate(state.len())?;
    let dt = config.dt;
    let at = |base: &SheetState, k: &[Complex64], h: f64| -> SheetState {
        SheetState {
            markers: base
                .markers
                .iter()
                .zip(k)
                .map(|(z, v)| z + v * h)
                .collect(),
            d_gamma: base.d_gamma.clone(),
            time: base.time,
        }
    };
    let k1 = br_velocity(state, config.delta)?;
    let s2 = at(state, &k1, 0.5 * dt);
    let k2 = br_velocity(&s2, config.delta)?;
    let s3 = at(state, &k2, 0.5 * dt);
    let k3 = br_velocity(&s3, config.delta)?;
    let s4 = at(state, &k3, dt);
    let k4 = br_velocity(&s4, config.delta)?;
    let markers = state
        .markers
        .iter()
        .enumerate()
        .map(|(j, z)| z + (k1[j] + (k2[j] + k3[j]) * 2.0 + k4[j]) * (dt / 6.0))
        .collect();
    Ok(SheetState {
        markers,
        d_gamma: state.d_gamma.clone(),
        time: state.time + dt,
    })
}

/// Total circulation carried by the markers.
pub fn total_circulation(state: &SheetState) -> f64 {
    state.d_gamma.iter().sum()
}

/// Linear impulse `sum dGamma_j z_j`, conserved by the regularized dynamics
/// through the antisymmetry of the pair interactions.
pub fn linear_impulse(state: &SheetState) -> Complex64 {
    state
        .markers
        .iter()
        .zip(&state.d_gamma)
        .map(|(z, g)| z * *g)
        .sum()
}

/// Blob Hamiltonian
/// `H = -(1/8 pi) sum_{j != k} dGamma_j dGamma_k ln(|z_j - z_k|^2 + delta^2)`,
/// an exact invariant of the regularized flow.
pub fn hamiltonian(state: &SheetState, delta: f64) -> f64 {
    let d2 = delta * delta;
    let z = &state.markers;
    let g = &state.d_gamma;
    let mut acc = 0.0;
    for j in 0..z.len() {
        for k in (j + 1)..z.len() {
            acc += g[j] * g[k] * ((z[j] - z[k]).norm_sqr() + d2).ln();
        }
    }
    -acc / (4.0 * std::f64::consts::PI)
}

/// Smallest pairwise marker distance; a growing nearest-neighbor spacing
/// signals under-resolution of the sheet.
pub fn min_spacing(state: &SheetState) -> f64 {
    let z = &state.markers;
    let mut best = f64::INFINITY;
    for j in 0..z.len() {
        for k in (j + 1)..z.len() {
            best = best.min((z[j] - z[k]).norm());
        }
    }
    best
}

/// Conservation snapshot emitted along a trajectory.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Observation {
    pub step: usize,
    pub time: f64,
    pub circulation: f64,
    pub impulse: (f64, f64),
    pub hamiltonian: f64,
    pub max_radius: f64,
    pub min_spacing: f64,
}

fn observe(step_idx: usize, state: &SheetState, delta: f64) -> Observation {
    let imp = linear_impulse(state);
    Observation {
        step: step_idx,
        time: state.time,
        circulation: total_circulation(state),
        impulse: (imp.re, imp.im),
        hamiltonian: hamiltonian(state, delta),
        max_radius: state.markers.iter().map(|z| z.norm()).fold(0.0, f64::max),
        min_spacing: min_spacing(state),
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Trajectory {
    pub observations: Vec<Observation>,
    pub final_state: SheetState,
}

/// Runs `steps` RK4 steps, recording observations at the configured stride
/// (plus the initial and final states). A non-finite position aborts with
/// the last valid state.
pub fn evolve(initial: &SheetState, config: &BrConfig) -> Result<Trajectory, BrError> {
    evolve_with(initial, config, |_, _| {})
}

/// `evolve` with a callback invoked at every observation.
pub fn evolve_with(
    initial: &SheetState,
    config: &BrConfig,
    mut on_observe: impl FnMut(&Observation, &SheetState),
) -> Result<Trajectory, BrError> {
    config.validate(initial.len())?;
    let stride = if config.observe_every == 0 {
        usize::MAX
    } else {
        config.observe_every
    };
    let mut observations = Vec::new();
    let first = observe(0, initial, config.delta);
    on_observe(&first, initial);
    observations.push(first);
    let mut state = initial.clone();
    for k in 1..=config.steps {
        let next = step(&state, config)?;
        if !next.is_finite() {
            return Err(BrError::BlowUp {
                step: k,
                time: state.time,
                last: Box::new(state),
            });
        }
        state = next;
        if k % stride == 0 || k == config.steps {
            let obs = observe(k, &state, config.delta);
            on_observe(&obs, &state);
            observations.push(obs);
        }
    }
    Ok(Trajectory {
        observations,
        final_state: state,
    })
}

/// Controls for the analytic collapse scenario.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct CollapseConfig {
    pub gamma_max: f64,
    pub n_samples: usize,
    pub grading: f64,
    /// Ball radius the measure is restricted to before the norm; defaults to
    /// the initial support radius.
    pub restriction_radius: Option<f64>,
    /// Frequency cutoff for the truncated norm series.
    pub cutoff: f64,
}

/// Collapse series of the analytic Prandtl family (not the simulator): the
/// support radius sqrt(tau Gamma_max) measured from the generated curve, and
/// the truncated H^{-1} norm of the restricted positive part, along times
/// approaching the collapse time -1/p from below.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CollapseReport {
    pub p: f64,
    pub times: Vec<f64>,
    pub support_radius: Vec<f64>,
    pub h_minus1: Vec<f64>,
    pub restriction_radius: f64,
    pub cutoff: f64,
}

pub fn collapse_diagnostic(
    base: &PrandtlParams,
    times: &[f64],
    cfg: &CollapseConfig,
) -> Result<CollapseReport, BrError> {
    if base.p >= 0.0 {
        return Err(BrError::CollapseRequiresNegativeP(base.p));
    }
    let t_collapse = -1.0 / base.p;
    for &t in times {
        if !(t < t_collapse) {
            return Err(BrError::BeyondCollapse { t, t_collapse });
        }
    }
    if times.is_empty() {
        return Err(BrError::InvalidConfig("need at least one time".into()));
    }
    let sampling = SpiralSampling::new(cfg.gamma_max, cfg.n_samples, cfg.grading)?;
    let r0 = cfg
        .restriction_radius
        .unwrap_or_else(|| cfg.gamma_max.sqrt() * 1.0000001);
    let mut support_radius = Vec::with_capacity(times.len());
    let mut h_series = Vec::with_capacity(times.len());
    for &t in times {
        let params = PrandtlParams { t, ..*base };
        // The branches are point reflections, so the positive branch carries
        // the concentration; the signed total cancels at zero frequency.
        let branch = prandtl_branch(&params, &sampling, Branch::Positive)?;
        let restricted: Measure = branch.restrict(crate::geom::PlanePoint::ORIGIN, r0)?.into();
        support_radius.push(restricted.max_radius_about(crate::geom::PlanePoint::ORIGIN));
        h_series.push(h_minus1_truncated(&restricted, cfg.cutoff)?.value);
    }
    Ok(CollapseReport {
        p: base.p,
        times: times.to_vec(),
        support_radius,
        h_minus1: h_series,
        restriction_radius: r0,
        cutoff: cfg.cutoff,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    fn pair(sep: f64, g1: f64, g2: f64) -> SheetState {
        SheetState::new(
            vec![Complex64::new(0.0, 0.0), Complex64::new(sep, 0.0)],
            vec![g1, g2],
            0.0,
        )
        .unwrap()
    }

    #[test]
    fn single_marker_is_stationary() {
        let s = SheetState::new(vec![Complex64::new(0.3, -0.2)], vec![1.0], 0.0).unwrap();
        let v = br_velocity(&s, 0.0).unwrap();
        assert_eq!(v[0], Complex64::new(0.0, 0.0));
    }

    #[test]
    fn corotating_pair_velocities() {
        let d = 0.7;
        let s = pair(d, 2.0 * PI, 2.0 * PI);
        let v = br_velocity(&s, 0.0).unwrap();
        // Perpendicular to the separation, antiparallel, speed 1/d.
        assert_relative_eq!(v[0].im, -1.0 / d, max_relative = 1e-14);
        assert_relative_eq!(v[1].im, 1.0 / d, max_relative = 1e-14);
        assert!(v[0].re.abs() < 1e-15 && v[1].re.abs() < 1e-15);
    }

    #[test]
    fn counterrotating_pair_translates() {
        let d = 0.5;
        let s = pair(d, 2.0 * PI, -2.0 * PI);
        let v = br_velocity(&s, 0.0).unwrap();
        assert_relative_eq!(v[0].im, v[1].im, max_relative = 1e-14);
        assert_relative_eq!(v[0].im.abs(), 1.0 / d, max_relative = 1e-14);
        assert!(v[0].re.abs() < 1e-15);
    }

    #[test]
    fn kernel_pair_contributions_are_antisymmetric() {
        // Circulation-weighted pair terms cancel: the basis of impulse
        // conservation.
        let z = [Complex64::new(0.1, 0.4), Complex64::new(-0.7, 0.2)];
        let g = [1.3, -0.8];
        let d2 = 0.01;
        let dz = z[0] - z[1];
        let denom = dz.norm_sqr() + d2;
        let i2pi = Complex64::new(0.0, 1.0 / (2.0 * PI));
        let v01 = i2pi * (g[1] / denom) * dz;
        let v10 = i2pi * (g[0] / denom) * (-dz);
        let weighted = v01 * g[0] + v10 * g[1];
        assert!(weighted.norm() < 1e-16);
    }

    #[test]
    fn unregularized_guards() {
        let s = SheetState::new(
            vec![Complex64::new(0.0, 0.0); 5],
            vec![1.0; 5],
            0.0,
        )
        .unwrap();
        assert!(matches!(
            br_velocity(&s, 0.0),
            Err(BrError::UnregularizedTooLarge(5))
        ));
        let dup = SheetState::new(
            vec![Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0)],
            vec![1.0, 1.0],
            0.0,
        )
        .unwrap();
        assert!(matches!(
            br_velocity(&dup, 0.0),
            Err(BrError::SingularConfiguration { .. })
        ));
    }

    #[test]
    fn corotating_pair_completes_period() {
        // Two vortices of strength 2 pi at distance d orbit with period
        // T = 2 pi^2 d^2 / Gamma = pi d^2.
        let d = 1.0;
        let period = PI * d * d;
        let n = 2000;
        let config = BrConfig {
            delta: 0.0,
            dt: period / n as f64,
            steps: n,
            observe_every: 0,
        };
        let s0 = pair(d, 2.0 * PI, 2.0 * PI);
        let traj = evolve(&s0, &config).unwrap();
        for (a, b) in s0.markers.iter().zip(&traj.final_state.markers) {
            assert!((a - b).norm() < 1e-6 * d);
        }
    }

    #[test]
    fn zero_circulation_is_frozen() {
        let s = pair(1.0, 0.0, 0.0);
        let config = BrConfig {
            delta: 0.1,
            dt: 0.05,
            steps: 20,
            observe_every: 0,
        };
        let traj = evolve(&s, &config).unwrap();
        assert_eq!(traj.final_state.markers, s.markers);
    }

    #[test]
    fn time_reversal_roundtrip() {
        let s0 = SheetState::new(
            vec![
                Complex64::new(0.0, 0.0),
                Complex64::new(1.0, 0.1),
                Complex64::new(0.4, -0.6),
            ],
            vec![2.0, -1.0, 1.5],
            0.0,
        )
        .unwrap();
        let dt = 1e-2;
        let fwd = step(&s0, &BrConfig { delta: 0.05, dt, steps: 1, observe_every: 0 }).unwrap();
        let back = step(&fwd, &BrConfig { delta: 0.05, dt: -dt, steps: 1, observe_every: 0 })
            .unwrap();
        for (a, b) in s0.markers.iter().zip(&back.markers) {
            assert!((a - b).norm() < 1e-10, "local error must be O(dt^5)");
        }
    }

    #[test]
    fn conservation_over_thousand_steps() {
        // Off-center pair so the impulse is nonzero.
        let s0 = SheetState::new(
            vec![Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)],
            vec![2.0 * PI, 2.0 * PI],
            0.0,
        )
        .unwrap();
        let delta = 0.05;
        let config = BrConfig {
            delta,
            dt: 1e-3,
            steps: 1000,
            observe_every: 100,
        };
        let traj = evolve(&s0, &config).unwrap();
        let i0 = linear_impulse(&s0);
        let h0 = hamiltonian(&s0, delta);
        for obs in &traj.observations {
            assert_eq!(obs.circulation, 4.0 * PI, "circulation is exact");
            let drift = (Complex64::new(obs.impulse.0, obs.impulse.1) - i0).norm() / i0.norm();
            assert!(drift < 1e-8, "impulse drift {drift}");
            assert!(((obs.hamiltonian - h0) / h0).abs() < 1e-6);
        }
    }

    #[test]
    fn impulse_drift_shows_fourth_order() {
        let s0 = SheetState::new(
            vec![Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)],
            vec![2.0 * PI, 2.0 * PI],
            0.0,
        )
        .unwrap();
        let delta = 0.0;
        let run = |dt: f64, steps: usize| {
            let config = BrConfig { delta, dt, steps, observe_every: 0 };
            let traj = evolve(&s0, &config).unwrap();
            // Compare marker positions against the exact rotation about the
            // centroid after the integrated time.
            let t = dt * steps as f64;
            let center = Complex64::new(0.5, 0.0);
            let omega = 2.0; // Gamma_total / (2 pi (d/2)^2) / 2 = 2 for this setup
            let rot = Complex64::from_polar(1.0, omega * t);
            traj.final_state
                .markers
                .iter()
                .zip(&s0.markers)
                .map(|(z, z0)| (z - (center + rot * (z0 - center))).norm())
                .fold(0.0, f64::max)
        };
        let coarse = run(PI / 250.0, 250);
        let fine = run(PI / 500.0, 500);
        let ratio = coarse / fine;
        assert!(ratio > 12.0, "expected ~16x error drop, got {ratio}");
    }

    #[test]
    fn rotation_equivariance() {
        let s0 = SheetState::new(
            vec![
                Complex64::new(0.2, 0.0),
                Complex64::new(1.0, 0.3),
                Complex64::new(-0.5, 0.8),
                Complex64::new(0.1, -0.9),
            ],
            vec![1.0, 0.5, -0.7, 1.2],
            0.0,
        )
        .unwrap();
        let phi = 0.83;
        let rot = Complex64::from_polar(1.0, phi);
        let rotated =
            SheetState::new(s0.markers.iter().map(|z| rot * z).collect(), s0.d_gamma.clone(), 0.0)
                .unwrap();
        let config = BrConfig { delta: 0.07, dt: 5e-3, steps: 10, observe_every: 0 };
        let a = evolve(&s0, &config).unwrap().final_state;
        let b = evolve(&rotated, &config).unwrap().final_state;
        for (za, zb) in a.markers.iter().zip(&b.markers) {
            assert!((rot * za - zb).norm() < 1e-10);
        }
    }

    #[test]
    fn blowup_reports_last_state() {
        // A huge step on a near-singular pair overflows the positions.
        let s0 = pair(1e-160, 1e160, 1e160);
        let config = BrConfig { delta: 0.0, dt: 1e300, steps: 3, observe_every: 0 };
        match evolve(&s0, &config) {
            Err(BrError::BlowUp { last, .. }) => assert!(last.is_finite()),
            other => panic!("expected blow-up, got {other:?}"),
        }
    }

    #[test]
    fn collapse_support_radius_matches_closed_form() {
        let base = PrandtlParams { b: 0.2, mu: 0.5, p: -1.0, t: 0.0 };
        let times: Vec<f64> = (0..10).map(|k| 0.11 * k as f64).collect();
        let cfg = CollapseConfig {
            gamma_max: 1.0,
            n_samples: 256,
            grading: 2.0,
            restriction_radius: None,
            cutoff: 20.0,
        };
        let rep = collapse_diagnostic(&base, &times, &cfg).unwrap();
        for (t, r) in rep.times.iter().zip(&rep.support_radius) {
            let tau = 1.0 - t;
            assert_relative_eq!(*r, tau.sqrt(), max_relative = 1e-12);
        }
        for w in rep.h_minus1.windows(2) {
            assert!(w[1] > w[0], "truncated norm must grow toward collapse");
        }
        // t = 0.75 support radius is 0.5 exactly.
        let single = collapse_diagnostic(&base, &[0.75], &cfg).unwrap();
        assert_relative_eq!(single.support_radius[0], 0.5, max_relative = 1e-12);
    }

    #[test]
    fn collapse_rejects_bad_times() {
        let base = PrandtlParams { b: 0.2, mu: 0.5, p: -1.0, t: 0.0 };
        let cfg = CollapseConfig {
            gamma_max: 1.0,
            n_samples: 64,
            grading: 2.0,
            restriction_radius: None,
            cutoff: 10.0,
        };
        assert!(matches!(
            collapse_diagnostic(&base, &[1.0], &cfg),
            Err(BrError::BeyondCollapse { .. })
        ));
        let positive_p = PrandtlParams { p: 1.0, ..base };
        assert!(matches!(
            collapse_diagnostic(&positive_p, &[0.5], &cfg),
            Err(BrError::CollapseRequiresNegativeP(_))
        ));
    }
}
