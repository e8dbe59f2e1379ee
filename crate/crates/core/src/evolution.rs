//! Nonlinear time integration of ∂_τ w = ℒw - (v·∇)w in similarity
//! variables, the exact map back to unscaled solutions, and the on-line
//! conservation and energy monitors.
//!
//! The stiff Laplacian is handled by an exact integrating factor
//! e^{-|p|²dt} per Runge-Kutta stage; the dilation term ½ξ·∇w + w and the
//! advection are treated explicitly inside classical RK4, which is stable
//! at the CFL-limited step the advection already requires. State is kept
//! in spectral space between stages.

use crate::biot_savart::{velocity_from_spectral, HybridBasis};
use crate::error::{Error, Result};
use crate::field::{Axis, RealField, SpectralField, VectorField, WeightSpec};
use crate::grid::Grid;
use crate::moments::{extract_moments, MomentSet};
use crate::operator::{apply_l_checked, semigroup_apply};
use ndarray::Array2;
use serde::{Deserialize, Serialize};
use std::io::Write;

/// Norm ceiling of the blow-up guard. Global existence theory says this
/// never fires for valid runs; it catches configuration mistakes.
pub const BLOWUP_GUARD: f64 = 1e6;

/// Time-step limits: half the advective CFL (dilation speed dominates at
/// the box corner; 0.1 is the velocity allowance for the small-amplitude
/// corpus) and the inverse of the largest retained |p|².
pub fn stable_dt(grid: Grid, dealias: bool) -> f64 {
    let u_max = 0.5 * std::f64::consts::SQRT_2 * grid.half_width() + 0.1;
    let cfl = grid.spacing() / u_max;
    let p_axis = if dealias {
        grid.max_dealiased_wavenumber()
    } else {
        grid.max_wavenumber()
    };
    let nu_max = 2.0 * p_axis * p_axis;
    (0.5 * cfl).min(1.0 / nu_max)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    /// rescaled-time step
    pub dt: f64,
    /// final rescaled time
    pub tau_end: f64,
    /// diagnostic stride in τ
    pub record_every: f64,
    /// apply the 2/3 rule to the advection product
    pub dealias: bool,
    /// closed-form velocities for the named part of the field
    pub hybrid_velocity: bool,
    /// weight exponent of the recorded ‖w‖_m column
    pub wm_exponent: f64,
    /// store field snapshots at this τ stride
    pub snapshot_every: Option<f64>,
}

impl SimConfig {
    /// Stability-limited defaults for a grid: dt at the stable limit,
    /// records every 0.1 τ-units.
    pub fn suggested(grid: Grid, tau_end: f64) -> Self {
        Self {
            dt: stable_dt(grid, true),
            tau_end,
            record_every: 0.1,
            dealias: true,
            hybrid_velocity: true,
            wm_exponent: 4.0,
            snapshot_every: None,
        }
    }

    pub fn validate(&self, grid: Grid) -> Result<()> {
        if !(self.dt > 0.0) {
            return Err(Error::InvalidParameter(format!("dt must be positive, got {}", self.dt)));
        }
        let limit = stable_dt(grid, self.dealias);
        if self.dt > limit * (1.0 + 1e-12) {
            return Err(Error::InvalidParameter(format!(
                "dt = {} exceeds the stability limit {limit:.3e} (half advective CFL and 1/nu_max)",
                self.dt
            )));
        }
        if !(self.tau_end > 0.0) {
            return Err(Error::InvalidParameter("tau_end must be positive".into()));
        }
        if !(self.record_every > 0.0) {
            return Err(Error::InvalidParameter("record_every must be positive".into()));
        }
        WeightSpec::new(self.wm_exponent)?;
        Ok(())
    }
}

/// One diagnostic record along a trajectory.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct TrajectoryRecord {
    pub tau: f64,
    pub moments: MomentSet,
    pub l1: f64,
    pub l2: f64,
    pub wm_norm: f64,
    /// |v|₂ of the advecting velocity
    pub v_l2: f64,
    /// quadratures (∫v₁², ∫v₁v₂, ∫v₂²)
    pub v_quad: [f64; 3],
    /// |∇v|₂ via the spectral identity |∇v|₂ = |w - mean(w)|₂
    pub grad_v_l2: f64,
}

/// Time series of diagnostics (and optionally fields) at rescaled times.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub records: Vec<TrajectoryRecord>,
    pub snapshots: Vec<(f64, RealField)>,
    pub wm_exponent: f64,
    /// count of dilation-term truncation warnings seen during the run
    pub truncation_warnings: usize,
}

impl Trajectory {
    pub fn times(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.tau).collect()
    }

    pub fn observable(&self, f: impl Fn(&TrajectoryRecord) -> f64) -> Vec<f64> {
        self.records.iter().map(f).collect()
    }

    /// Trajectory CSV with the fixed column set.
    pub fn write_csv(&self, out: &mut impl Write) -> std::io::Result<()> {
        writeln!(out, "tau,alpha,beta1,beta2,gamma1,gamma2,gamma3,l1,l2,wm_norm,v_l2")?;
        for r in &self.records {
            let m = r.moments;
            writeln!(
                out,
                "{:.12e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e}",
                r.tau,
                m.alpha,
                m.beta[0],
                m.beta[1],
                m.gamma[0],
                m.gamma[1],
                m.gamma[2],
                r.l1,
                r.l2,
                r.wm_norm,
                r.v_l2
            )?;
        }
        Ok(())
    }
}

/// The advecting velocity for a state, by the configured path.
fn advecting_velocity(
    wh: &SpectralField,
    w: &RealField,
    basis: Option<&HybridBasis>,
) -> VectorField {
    match basis {
        Some(b) => b.velocity(w),
        None => velocity_from_spectral(wh),
    }
}

struct Stepper {
    grid: Grid,
    config: SimConfig,
    basis: Option<HybridBasis>,
    /// e^{-|p|² dt/2} and e^{-|p|² dt}
    exp_half: Array2<f64>,
    exp_full: Array2<f64>,
    truncation_warnings: usize,
}

impl Stepper {
    fn new(grid: Grid, config: SimConfig) -> Self {
        let n = grid.n();
        let mut exp_half = Array2::zeros((n, n));
        let mut exp_full = Array2::zeros((n, n));
        for k1 in 0..n {
            let p1 = grid.wavenumber(k1);
            for k2 in 0..n {
                let p2 = grid.wavenumber(k2);
                let psq = p1 * p1 + p2 * p2;
                exp_half[[k1, k2]] = (-psq * config.dt / 2.0).exp();
                exp_full[[k1, k2]] = (-psq * config.dt).exp();
            }
        }
        let basis = config.hybrid_velocity.then(|| HybridBasis::new(grid));
        Self { grid, config, basis, exp_half, exp_full, truncation_warnings: 0 }
    }

    /// The explicitly-treated part ½ξ·∇w + w - (v·∇)w, in spectral space.
    fn nonstiff(&mut self, wh: &SpectralField) -> SpectralField {
        let g = self.grid;
        let n = g.n();
        let w = wh.backward();
        let d1 = wh.derivative(Axis::Xi1).backward();
        let d2 = wh.derivative(Axis::Xi2).backward();
        let v = advecting_velocity(wh, &w, self.basis.as_ref());

        let mut dil = Array2::zeros((n, n));
        let mut adv = Array2::zeros((n, n));
        let mut dil_max = 0.0f64;
        let mut dil_edge = 0.0f64;
        for i in 0..n {
            let x1 = g.coord(i);
            for j in 0..n {
                let x2 = g.coord(j);
                let g1 = d1.values[[i, j]];
                let g2 = d2.values[[i, j]];
                let d = 0.5 * (x1 * g1 + x2 * g2) + w.values[[i, j]];
                dil[[i, j]] = d;
                adv[[i, j]] = v.v1[[i, j]] * g1 + v.v2[[i, j]] * g2;
                let a = d.abs();
                dil_max = dil_max.max(a);
                if i == 0 || j == 0 || i == n - 1 || j == n - 1 {
                    dil_edge = dil_edge.max(a);
                }
            }
        }
        if dil_max > 0.0 && dil_edge > 1e-8 * dil_max {
            self.truncation_warnings += 1;
        }
        let dil_hat = RealField::from_values(g, dil).expect("same grid").forward();
        let mut adv_hat = RealField::from_values(g, adv).expect("same grid").forward();
        if self.config.dealias {
            adv_hat = adv_hat.dealias();
        }
        dil_hat.add_scaled(-1.0, &adv_hat)
    }

    fn apply_factor(&self, wh: &SpectralField, factor: &Array2<f64>) -> SpectralField {
        let mut out = wh.clone();
        for (c, &f) in out.coeffs.iter_mut().zip(factor.iter()) {
            *c *= f;
        }
        out
    }

    /// One integrating-factor RK4 step.
    fn step(&mut self, wh: &SpectralField) -> SpectralField {
        let dt = self.config.dt;
        let a = self.nonstiff(wh);
        let b = self.nonstiff(&self.apply_factor(&wh.add_scaled(dt / 2.0, &a), &self.exp_half));
        let c = self.nonstiff(&self.apply_factor(wh, &self.exp_half).add_scaled(dt / 2.0, &b));
        let d = self.nonstiff(
            &self
                .apply_factor(wh, &self.exp_full)
                .add_scaled(dt, &self.apply_factor(&c, &self.exp_half)),
        );
        let mut out = self.apply_factor(wh, &self.exp_full);
        out = out.add_scaled(dt / 6.0, &self.apply_factor(&a, &self.exp_full));
        out = out.add_scaled(dt / 3.0, &self.apply_factor(&b.add_scaled(1.0, &c), &self.exp_half));
        out.add_scaled(dt / 6.0, &d)
    }

    fn record(&self, tau: f64, wh: &SpectralField) -> Result<TrajectoryRecord> {
        let g = self.grid;
        let w = wh.backward();
        if !w.is_finite() {
            return Err(Error::BlowUp(format!("non-finite field at tau = {tau}")));
        }
        let moments = extract_moments(&w);
        let l1 = w.lp_norm(1.0)?;
        let l2 = w.l2_norm();
        let wm_norm = w.weighted_norm(WeightSpec::new(self.config.wm_exponent)?);
        if l2 > BLOWUP_GUARD || wm_norm > BLOWUP_GUARD {
            return Err(Error::BlowUp(format!(
                "norm exceeded the blow-up guard {BLOWUP_GUARD:.0e} at tau = {tau} (l2 = {l2:.3e})"
            )));
        }
        let v = advecting_velocity(wh, &w, self.basis.as_ref());
        let h2 = g.spacing() * g.spacing();
        let mut q = [0.0f64; 3];
        for (a, b) in v.v1.iter().zip(v.v2.iter()) {
            q[0] += a * a;
            q[1] += a * b;
            q[2] += b * b;
        }
        let v_quad = [q[0] * h2, q[1] * h2, q[2] * h2];
        let v_l2 = (v_quad[0] + v_quad[2]).sqrt();
        let mean = moments.alpha / (4.0 * g.half_width() * g.half_width());
        let grad_sq = (l2 * l2 - mean * mean * 4.0 * g.half_width() * g.half_width()).max(0.0);
        Ok(TrajectoryRecord {
            tau,
            moments,
            l1,
            l2,
            wm_norm,
            v_l2,
            v_quad,
            grad_v_l2: grad_sq.sqrt(),
        })
    }
}

/// ∂_τ w = ℒw - (v·∇)w, the full right-hand side evaluated at one state.
/// Uses the hybrid velocity path when a basis is supplied.
pub fn rhs(w: &RealField, basis: Option<&HybridBasis>, dealias: bool) -> RealField {
    let (lw, _) = apply_l_checked(w);
    let wh = w.forward();
    let d1 = wh.derivative(Axis::Xi1).backward();
    let d2 = wh.derivative(Axis::Xi2).backward();
    let v = advecting_velocity(&wh, w, basis);
    let adv = RealField::from_values(
        w.grid(),
        Array2::from_shape_fn(d1.values.dim(), |idx| {
            v.v1[idx] * d1.values[idx] + v.v2[idx] * d2.values[idx]
        }),
    )
    .expect("same grid");
    let adv = if dealias {
        adv.forward().dealias().backward()
    } else {
        adv
    };
    lw.sub(&adv)
}

/// Integrate from w0 up to config.tau_end, recording diagnostics on the
/// record stride. Aborts via the blow-up guard if norms leave the valid
/// regime.
pub fn run(w0: &RealField, config: &SimConfig) -> Result<Trajectory> {
    let grid = w0.grid();
    config.validate(grid)?;
    if !w0.is_finite() {
        return Err(Error::InvalidParameter("initial data contains non-finite values".into()));
    }
    // snap dt so that it divides the record stride: records then land on
    // exact multiples of record_every regardless of the requested dt
    let record_every = config.record_every.min(config.tau_end);
    let sub = (record_every / config.dt).ceil().max(1.0) as usize;
    let dt = record_every / sub as f64;
    let n_records = (config.tau_end / record_every - 1e-9).ceil().max(1.0) as usize;
    let n_steps = n_records * sub;
    let mut cfg = *config;
    cfg.dt = dt;
    let mut stepper = Stepper::new(grid, cfg);

    let snap_steps = config
        .snapshot_every
        .map(|s| ((s / dt).round().max(1.0)) as usize);
    let mut wh = w0.forward();
    let mut records = Vec::new();
    let mut snapshots = Vec::new();
    records.push(stepper.record(0.0, &wh)?);
    if snap_steps.is_some() {
        snapshots.push((0.0, w0.clone()));
    }
    for step in 1..=n_steps {
        wh = stepper.step(&wh);
        let is_last = step == n_steps;
        if step % sub == 0 {
            // exact record time, free of accumulated rounding
            let tau = (step / sub) as f64 * record_every;
            records.push(stepper.record(tau, &wh)?);
        }
        if let Some(k) = snap_steps {
            if step % k == 0 || is_last {
                snapshots.push((step as f64 * dt, wh.backward()));
            }
        }
    }
    Ok(Trajectory {
        records,
        snapshots,
        wm_exponent: config.wm_exponent,
        truncation_warnings: stepper.truncation_warnings,
    })
}

/// Exact change of variables back to the unscaled solution at rescaled
/// time τ: t = e^τ - 1, ω(x) = w(x/√(1+t))/(1+t) sampled on the x-grid of
/// half width Λ√(1+t). Grid nodes map onto grid nodes, so no interpolation
/// is involved.
pub fn unscale(w: &RealField, tau: f64) -> (RealField, f64) {
    let t = tau.exp() - 1.0;
    let scale = (1.0 + t).sqrt();
    let g = w.grid();
    let unscaled_grid = Grid::new(g.n(), g.half_width() * scale).expect("valid grid");
    let omega = RealField::from_values(unscaled_grid, w.values.mapv(|v| v / (1.0 + t)))
        .expect("same shape");
    (omega, t)
}

/// Companion velocity map: u(x) = v(x/√(1+t))/√(1+t) on the same x-grid.
pub fn unscale_velocity(v: &VectorField, tau: f64) -> (VectorField, f64) {
    let t = tau.exp() - 1.0;
    let scale = (1.0 + t).sqrt();
    let g = v.grid();
    let unscaled_grid = Grid::new(g.n(), g.half_width() * scale).expect("valid grid");
    let u = VectorField::from_components(
        RealField::from_values(unscaled_grid, v.v1.mapv(|a| a / scale)).expect("same shape"),
        RealField::from_values(unscaled_grid, v.v2.mapv(|a| a / scale)).expect("same shape"),
    )
    .expect("same grid");
    (u, t)
}

/// Conservation-law audit of a trajectory: α is conserved, β_i follows the
/// e^{-τ/2} law, γ₁ follows the e^{-τ} law.
#[derive(Debug, Clone, Serialize)]
pub struct ConservationReport {
    pub alpha_drift: f64,
    pub beta_max_err: f64,
    pub gamma1_max_rel_err: f64,
    pub alpha_ok: bool,
    pub beta_ok: bool,
    pub gamma1_ok: bool,
}

pub const ALPHA_DRIFT_TOL: f64 = 1e-9;
pub const BETA_LAW_TOL: f64 = 1e-7;
pub const GAMMA1_LAW_REL_TOL: f64 = 1e-6;

pub fn monitor_conservation(traj: &Trajectory) -> Result<ConservationReport> {
    if traj.records.len() < 3 {
        return Err(Error::Precondition("need at least 3 records to audit conservation".into()));
    }
    let first = &traj.records[0];
    let mut alpha_drift = 0.0f64;
    let mut beta_max_err = 0.0f64;
    let mut gamma1_max_rel = 0.0f64;
    for r in &traj.records {
        alpha_drift = alpha_drift.max((r.moments.alpha - first.moments.alpha).abs());
        let decay_half = (-r.tau / 2.0).exp();
        for i in 0..2 {
            let expected = first.moments.beta[i] * decay_half;
            let err = (r.moments.beta[i] - expected).abs() / (1.0 + first.moments.beta[i].abs());
            beta_max_err = beta_max_err.max(err);
        }
        let expected_g1 = first.moments.gamma[0] * (-r.tau).exp();
        let scale = (first.moments.gamma[0] * (-r.tau).exp()).abs().max(1e-30);
        if first.moments.gamma[0].abs() > 1e-12 {
            gamma1_max_rel = gamma1_max_rel.max((r.moments.gamma[0] - expected_g1).abs() / scale);
        } else {
            // zero stays zero, measured absolutely
            gamma1_max_rel = gamma1_max_rel.max(r.moments.gamma[0].abs());
        }
    }
    Ok(ConservationReport {
        alpha_drift,
        beta_max_err,
        gamma1_max_rel_err: gamma1_max_rel,
        alpha_ok: alpha_drift <= ALPHA_DRIFT_TOL,
        beta_ok: beta_max_err <= BETA_LAW_TOL,
        gamma1_ok: gamma1_max_rel <= GAMMA1_LAW_REL_TOL,
    })
}

/// ‖w(τ) - e^{τℒ}w₀ + ∫₀^τ e^{-(τ-s)/2} ∇·e^{(τ-s)ℒ}(v(s)w(s)) ds‖₂,
/// the integral-form self-consistency of a stored trajectory, with the
/// s-integral approximated by the trapezoid rule over snapshots.
pub fn duhamel_residual(
    traj: &Trajectory,
    tau: f64,
    basis: Option<&HybridBasis>,
) -> Result<f64> {
    let snaps: Vec<&(f64, RealField)> =
        traj.snapshots.iter().filter(|(s, _)| *s <= tau + 1e-12).collect();
    if snaps.len() < 9 {
        return Err(Error::Precondition(format!(
            "need at least 9 snapshots up to tau = {tau}, have {}",
            snaps.len()
        )));
    }
    let max_gap = snaps.windows(2).map(|w| w[1].0 - w[0].0).fold(0.0f64, f64::max);
    if max_gap > 0.26 {
        return Err(Error::Precondition(format!(
            "snapshot spacing {max_gap:.3} too sparse for the quadrature in s"
        )));
    }
    let (t_last, w_tau) = snaps.last().unwrap();
    if (t_last - tau).abs() > 1e-9 {
        return Err(Error::Precondition(format!(
            "no snapshot stored at tau = {tau} (closest {t_last})"
        )));
    }
    let w0 = &snaps[0].1;
    let mut acc = semigroup_apply(w0, tau)?;
    // trapezoid in s of e^{-(τ-s)/2} ∇·e^{(τ-s)L}(v w)
    for (idx, (s, w_s)) in snaps.iter().enumerate() {
        let weight = if idx == 0 || idx + 1 == snaps.len() {
            // non-uniform trapezoid endpoints
            if idx == 0 {
                (snaps[1].0 - snaps[0].0) / 2.0
            } else {
                (snaps[idx].0 - snaps[idx - 1].0) / 2.0
            }
        } else {
            (snaps[idx + 1].0 - snaps[idx - 1].0) / 2.0
        };
        let v = advecting_velocity(&w_s.forward(), w_s, basis);
        let sigma = tau - s;
        let u1 = RealField::from_values(w_s.grid(), &v.v1 * &w_s.values).expect("same grid");
        let u2 = RealField::from_values(w_s.grid(), &v.v2 * &w_s.values).expect("same grid");
        let a1 = semigroup_apply(&u1, sigma)?.derivative(Axis::Xi1);
        let a2 = semigroup_apply(&u2, sigma)?.derivative(Axis::Xi2);
        let term = a1.add(&a2).scale((-sigma / 2.0).exp() * weight);
        acc = acc.sub(&term);
    }
    Ok(w_tau.sub(&acc).l2_norm())
}

/// Energy audit: |v(τ)|₂ must be non-increasing for mean-zero vorticity,
/// and its squared decrement matches 2∫|∇v|² ds.
#[derive(Debug, Clone, Serialize)]
pub struct EnergyReport {
    pub mean_zero: bool,
    pub nonincreasing: bool,
    pub max_increase: f64,
    /// |Δ(|v|₂²) + 2∫|∇v|²ds| / |Δ(|v|₂²)| over the full window
    pub dissipation_rel_err: f64,
}

pub const ENERGY_SLACK: f64 = 1e-9;

pub fn energy_monotonicity(traj: &Trajectory) -> Result<EnergyReport> {
    if traj.records.len() < 3 {
        return Err(Error::Precondition("need at least 3 records".into()));
    }
    let mean_zero = traj.records[0].moments.alpha.abs() <= 1e-8;
    let mut max_increase = 0.0f64;
    for pair in traj.records.windows(2) {
        max_increase = max_increase.max(pair[1].v_l2 - pair[0].v_l2);
    }
    // trapezoid of 2|∇v|² against the drop of |v|₂²
    let mut dissipated = 0.0;
    for pair in traj.records.windows(2) {
        let g0 = pair[0].grad_v_l2 * pair[0].grad_v_l2;
        let g1 = pair[1].grad_v_l2 * pair[1].grad_v_l2;
        dissipated += (pair[1].tau - pair[0].tau) * (g0 + g1);
    }
    let first = traj.records.first().unwrap();
    let last = traj.records.last().unwrap();
    let drop = first.v_l2 * first.v_l2 - last.v_l2 * last.v_l2;
    let dissipation_rel_err = if drop.abs() > 0.0 {
        (drop - dissipated).abs() / drop.abs()
    } else {
        0.0
    };
    Ok(EnergyReport {
        mean_zero,
        nonincreasing: max_increase <= ENERGY_SLACK,
        max_increase,
        dissipation_rel_err,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::profiles::NamedProfile;

    fn grid() -> Grid {
        Grid::new(64, 12.0).unwrap()
    }

    fn basis() -> HybridBasis {
        HybridBasis::new(grid())
    }

    #[test]
    fn rhs_vanishes_on_the_oseen_vortex() {
        let g = grid();
        let b = basis();
        for amp in [1.0, 0.3] {
            let w = NamedProfile::G.field(g).scale(amp);
            let r = rhs(&w, Some(&b), true);
            assert!(r.l2_norm() < 1e-7, "rhs({amp}G) = {:.2e}", r.l2_norm());
        }
        let zero = rhs(&RealField::zeros(g), Some(&b), true);
        assert_eq!(zero.l2_norm(), 0.0);
    }

    #[test]
    fn config_rejects_unstable_dt() {
        let g = grid();
        let mut c = SimConfig::suggested(g, 1.0);
        assert!(c.validate(g).is_ok());
        c.dt = stable_dt(g, true) * 4.0;
        assert!(c.validate(g).is_err());
        c.dt = -0.1;
        assert!(c.validate(g).is_err());
    }

    #[test]
    fn oseen_vortex_is_stationary_under_the_full_stepper() {
        let g = grid();
        let w0 = NamedProfile::G.field(g);
        let config = SimConfig::suggested(g, 2.0);
        let traj = run(&w0, &config).unwrap();
        let last = traj.records.last().unwrap();
        // replay the final state from moments: compare the final L2 distance
        // to G via a dedicated short integration instead
        assert!((last.moments.alpha - 1.0).abs() < 1e-9);
        // distance to G at the end
        let cfg2 = SimConfig { snapshot_every: Some(2.0), ..config };
        let traj2 = run(&w0, &cfg2).unwrap();
        let (_, w_end) = traj2.snapshots.last().unwrap();
        let dist = w_end.sub(&w0).l2_norm();
        assert!(dist <= 1e-6, "G drifted by {dist:.2e}");
    }

    #[test]
    fn zero_data_stays_zero() {
        let g = grid();
        let traj = run(&RealField::zeros(g), &SimConfig::suggested(g, 1.0)).unwrap();
        for r in &traj.records {
            assert_eq!(r.l2, 0.0);
        }
    }

    #[test]
    fn fourth_order_convergence_in_dt() {
        let g = grid();
        let w0 = NamedProfile::F1
            .field(g)
            .scale(0.05)
            .add_scaled(0.05, &NamedProfile::H2.field(g));
        let tau_end = 0.4;
        let dt0 = stable_dt(g, true);
        let run_with = |dt: f64| {
            let cfg = SimConfig {
                dt,
                tau_end,
                record_every: tau_end,
                dealias: true,
                hybrid_velocity: true,
                wm_exponent: 4.0,
                snapshot_every: Some(tau_end),
            };
            let traj = run(&w0, &cfg).unwrap();
            traj.snapshots.last().unwrap().1.clone()
        };
        let reference = run_with(dt0 / 8.0);
        let e1 = run_with(dt0).sub(&reference).l2_norm();
        let e2 = run_with(dt0 / 2.0).sub(&reference).l2_norm();
        let ratio = e1 / e2;
        assert!(
            (11.0..24.0).contains(&ratio),
            "expected ~16x error reduction, got {ratio} ({e1:.2e}/{e2:.2e})"
        );
    }

    #[test]
    fn unscale_identities() {
        let g = grid();
        let w = NamedProfile::G.field(g);
        let (omega0, t0) = unscale(&w, 0.0);
        assert_eq!(t0, 0.0);
        assert_eq!(omega0.values, w.values);

        // w = G at τ = 1 is the self-similar profile with |ω|₁ = 1
        let (omega, t) = unscale(&w, 1.0);
        assert!((t - (1f64.exp() - 1.0)).abs() < 1e-14);
        assert!((omega.lp_norm(1.0).unwrap() - 1.0).abs() < 1e-9);

        // |ω|_p = (1+t)^{1/p-1}|w|_p exactly, for any snapshot
        let w2 = NamedProfile::H2.field(g).scale(0.4);
        let (omega2, t2) = unscale(&w2, 1.7);
        for p in [1.0, 2.0, 4.0] {
            let lhs = omega2.lp_norm(p).unwrap();
            let rhs = (1.0 + t2).powf(1.0 / p - 1.0) * w2.lp_norm(p).unwrap();
            assert!((lhs - rhs).abs() <= 1e-12 * rhs.abs(), "p = {p}: {lhs} vs {rhs}");
        }
    }

    #[test]
    fn conservation_laws_hold_along_a_run() {
        let g = grid();
        let w0 = NamedProfile::G
            .field(g)
            .scale(0.05)
            .add_scaled(0.05, &NamedProfile::F1.field(g))
            .add_scaled(0.02, &NamedProfile::H1.field(g));
        let traj = run(&w0, &SimConfig::suggested(g, 3.0)).unwrap();
        let report = monitor_conservation(&traj).unwrap();
        assert!(report.alpha_ok, "alpha drift {:.2e}", report.alpha_drift);
        assert!(report.beta_ok, "beta law error {:.2e}", report.beta_max_err);
        assert!(report.gamma1_ok, "gamma1 law error {:.2e}", report.gamma1_max_rel_err);
    }

    #[test]
    fn mass_zero_stays_zero() {
        let g = grid();
        let w0 = NamedProfile::H2.field(g).scale(0.1);
        let traj = run(&w0, &SimConfig::suggested(g, 2.0)).unwrap();
        for r in &traj.records {
            assert!(r.moments.alpha.abs() < 1e-10);
        }
    }

    #[test]
    fn duhamel_residual_is_small() {
        let g = grid();
        // stationary case: both sides constant
        let cfg = SimConfig {
            snapshot_every: Some(0.1),
            ..SimConfig::suggested(g, 1.0)
        };
        let traj = run(&NamedProfile::G.field(g), &cfg).unwrap();
        let b = basis();
        let res = duhamel_residual(&traj, 1.0, Some(&b)).unwrap();
        assert!(res < 1e-6, "stationary residual {res:.2e}");

        // genuinely evolving data
        let w0 = NamedProfile::F1.field(g).scale(0.05);
        let cfg_fine = SimConfig { snapshot_every: Some(0.02), ..cfg };
        let traj = run(&w0, &cfg_fine).unwrap();
        let res_fine = duhamel_residual(&traj, 1.0, Some(&b)).unwrap();
        assert!(res_fine < 1e-4, "residual {res_fine:.2e}");

        // quadrature order: doubling the snapshot spacing costs ~4x
        let cfg_coarse = SimConfig { snapshot_every: Some(0.04), ..cfg };
        let traj_coarse = run(&w0, &cfg_coarse).unwrap();
        let res_coarse = duhamel_residual(&traj_coarse, 1.0, Some(&b)).unwrap();
        let ratio = res_coarse / res_fine;
        assert!(
            (2.0..8.0).contains(&ratio),
            "trapezoid order ratio {ratio} ({res_coarse:.2e}/{res_fine:.2e})"
        );
    }

    #[test]
    fn duhamel_rejects_sparse_snapshots() {
        let g = grid();
        let cfg = SimConfig {
            snapshot_every: Some(0.5),
            ..SimConfig::suggested(g, 1.0)
        };
        let traj = run(&NamedProfile::G.field(g), &cfg).unwrap();
        assert!(duhamel_residual(&traj, 1.0, None).is_err());
    }

    #[test]
    fn energy_decreases_for_mean_zero_data() {
        let g = grid();
        let w0 = NamedProfile::H2.field(g).scale(0.1);
        let traj = run(&w0, &SimConfig::suggested(g, 2.0)).unwrap();
        let report = energy_monotonicity(&traj).unwrap();
        assert!(report.mean_zero);
        assert!(report.nonincreasing, "max increase {:.2e}", report.max_increase);
        // strict decrease
        let first = traj.records.first().unwrap().v_l2;
        let last = traj.records.last().unwrap().v_l2;
        assert!(last < first);
        // energy identity within 5%
        assert!(
            report.dissipation_rel_err < 0.05,
            "dissipation mismatch {:.3}",
            report.dissipation_rel_err
        );
    }

    #[test]
    fn energy_report_flags_nonzero_mass() {
        let g = grid();
        let traj = run(&NamedProfile::G.field(g).scale(0.1), &SimConfig::suggested(g, 1.0)).unwrap();
        let report = energy_monotonicity(&traj).unwrap();
        assert!(!report.mean_zero);
    }

    #[test]
    fn global_boundedness_and_decay_in_weighted_norm() {
        let g = grid();
        let weight = WeightSpec::new(3.0).unwrap();
        let w0 = NamedProfile::F1
            .field(g)
            .scale(0.06)
            .add_scaled(0.04, &NamedProfile::H3.field(g));
        let norm0 = w0.weighted_norm(weight);
        let cfg = SimConfig { wm_exponent: 3.0, ..SimConfig::suggested(g, 4.0) };
        let traj = run(&w0, &cfg).unwrap();
        let max_wm = traj.records.iter().fold(0.0f64, |m, r| m.max(r.wm_norm));
        assert!(max_wm <= 3.0 * norm0, "sup norm {max_wm} vs 3x initial {norm0}");
        // mean-zero data decay monotonically after the transient
        let records = &traj.records;
        let start = records.len() / 4;
        for pair in records[start..].windows(2) {
            assert!(pair[1].wm_norm <= pair[0].wm_norm * (1.0 + 1e-9));
        }
        assert!(records.last().unwrap().wm_norm < norm0 * 0.5);
    }

    #[test]
    fn halving_dt_leaves_recorded_moments_unchanged() {
        let g = grid();
        let w0 = NamedProfile::F1.field(g).scale(0.05);
        let cfg = SimConfig { record_every: 0.5, ..SimConfig::suggested(g, 1.0) };
        let halved = SimConfig { dt: cfg.dt / 2.0, ..cfg };
        let t1 = run(&w0, &cfg).unwrap();
        let t2 = run(&w0, &halved).unwrap();
        for (r1, r2) in t1.records.iter().zip(t2.records.iter()) {
            assert!((r1.tau - r2.tau).abs() < 1e-12);
            for (a, b) in r1.moments.as_array().iter().zip(r2.moments.as_array().iter()) {
                assert!((a - b).abs() <= 1e-8 * (1.0 + a.abs()), "moment moved: {a} vs {b}");
            }
        }
    }

    #[test]
    fn unscaled_decay_exponents() {
        let g = grid();
        // mean-zero data: t^{1-1/p}|ω(t)|_p decreases toward 0
        let w0 = NamedProfile::H2.field(g).scale(0.08);
        let traj = run(&w0, &SimConfig::suggested(g, 4.0)).unwrap();
        let mut previous = f64::INFINITY;
        for r in traj.records.iter().skip(traj.records.len() / 3) {
            let t = r.tau.exp() - 1.0;
            // |ω|_p = (1+t)^{1/p-1}|w|_p, so t^{1-1/p}|ω|_p = (t/(1+t))^{1-1/p}|w|_p
            let val = (t / (1.0 + t)).sqrt() * r.l2;
            assert!(val <= previous * (1.0 + 1e-9), "t^{{1/2}}|omega|_2 increased");
            previous = val;
        }
    }
}
