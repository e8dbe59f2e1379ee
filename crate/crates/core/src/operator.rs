//! The linear operator ℒw = Δw + ½(ξ·∇)w + w, its Hermite eigenstructure,
//! the spectral projections P_n/Q_n, and the exact semigroup e^{τℒ}.
//!
//! In Fourier variables ℒ has symbol -(|p|² + ½p·∇_p), and the semigroup is
//! (Ŝ(τ)f)(p) = e^{-a(τ)|p|²} f̂(p e^{-τ/2}) with a(τ) = 1-e^{-τ}. On the
//! grid the dilated transform f̂(p e^{-τ/2}) is evaluated by trigonometric
//! interpolation: the forward DFT sum evaluated at the contracted tensor
//! frequencies, which is spectrally exact for resolved fields. The unpaired
//! Nyquist row breaks exact conjugate symmetry, but its contribution carries
//! the factor e^{-a(τ)|p_max|²}·f̂(p_max e^{-τ/2}), which for resolved data
//! is below round-off uniformly in τ.

use crate::error::{Error, Result};
use crate::field::{Axis, RealField, WeightSpec};
use crate::fitting::{fit_decay, DecayFit};
use crate::grid::Grid;
use crate::profiles::{hermite_function, hermite_polynomial, HermiteIndex};
use ndarray::Array2;
use rand::Rng;
use rustfft::num_complex::Complex;
use serde::Serialize;
use std::io::Write;

/// ℒw = Δw + ½(ξ·∇)w + w. The Laplacian and gradient are spectral, the
/// dilation product is formed in real space.
pub fn apply_l(w: &RealField) -> RealField {
    apply_l_checked(w).0
}

/// Same as [`apply_l`], also reporting whether the dilation term is
/// truncation-limited: true when |ξ·∇w| on the box edge exceeds 1e-8 of its
/// maximum, i.e. the field is not negligible at the boundary.
pub fn apply_l_checked(w: &RealField) -> (RealField, bool) {
    let g = w.grid();
    let wh = w.forward();
    let lap = wh.laplacian().backward();
    let d1 = wh.derivative(Axis::Xi1).backward();
    let d2 = wh.derivative(Axis::Xi2).backward();
    let n = g.n();
    let mut dilation = Array2::zeros((n, n));
    let mut max_abs = 0.0f64;
    let mut edge_abs = 0.0f64;
    for i in 0..n {
        let x1 = g.coord(i);
        for j in 0..n {
            let x2 = g.coord(j);
            let v = x1 * d1.values[[i, j]] + x2 * d2.values[[i, j]];
            dilation[[i, j]] = v;
            let a = v.abs();
            max_abs = max_abs.max(a);
            if i == 0 || j == 0 || i == n - 1 || j == n - 1 {
                edge_abs = edge_abs.max(a);
            }
        }
    }
    let warn = max_abs > 0.0 && edge_abs > 1e-8 * max_abs;
    let out = RealField::from_values(g, &lap.values + &(dilation * 0.5) + &w.values)
        .expect("same grid");
    (out, warn)
}

/// Relative eigen-residual ‖ℒφ_α + (|α|/2)φ_α‖₂ / ‖φ_α‖₂.
pub fn eigen_residual(alpha: HermiteIndex, grid: Grid) -> Result<f64> {
    let phi = hermite_function(alpha, grid)?;
    let l_phi = apply_l(&phi);
    let lambda = -(alpha.order() as f64) / 2.0;
    let res = l_phi.add_scaled(-lambda, &phi).l2_norm();
    Ok(res / phi.l2_norm())
}

/// Spectral projection specification: P_n retains the eigenvalues
/// 0, -1/2, …, -n/2 inside L²(m). Isolation of these eigenvalues requires
/// n + 1 < m.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProjectionSpec {
    n: u32,
    m: f64,
}

impl ProjectionSpec {
    pub fn new(n: u32, m: f64) -> Result<Self> {
        if !(f64::from(n) + 1.0 < m) {
            return Err(Error::Precondition(format!(
                "projection requires n + 1 < m, got n = {n}, m = {m}"
            )));
        }
        Ok(Self { n, m })
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn m(&self) -> f64 {
        self.m
    }

    pub fn weight(&self) -> WeightSpec {
        WeightSpec::new(self.m).expect("validated m")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Part {
    P,
    Q,
}

/// P_n w = Σ_{|α| ≤ n} (∫H_α w) φ_α, or the complement Q_n w = w - P_n w.
pub fn project(w: &RealField, spec: ProjectionSpec, part: Part) -> RealField {
    let g = w.grid();
    let mut p_part = RealField::zeros(g);
    for alpha in HermiteIndex::up_to_order(spec.n) {
        let h_alpha = hermite_polynomial(alpha).expect("order bounded by spec").field(g);
        let coeff = h_alpha.inner(w);
        let phi = hermite_function(alpha, g).expect("order bounded by spec");
        p_part = p_part.add_scaled(coeff, &phi);
    }
    match part {
        Part::P => p_part,
        Part::Q => w.sub(&p_part),
    }
}

/// Exact semigroup e^{τℒ} applied to a field; rejects τ < 0. Mass (the
/// p = 0 coefficient) is preserved exactly, and τ = 0 is the identity.
pub fn semigroup_apply(w: &RealField, tau: f64) -> Result<RealField> {
    if tau < 0.0 {
        return Err(Error::InvalidParameter(format!(
            "semigroup is defined for tau >= 0, got {tau}"
        )));
    }
    if tau == 0.0 {
        return Ok(w.clone());
    }
    let g = w.grid();
    let n = g.n();
    let h = g.spacing();
    let contraction = (-tau / 2.0).exp();

    // E[a, j] = e^{-i q_a ξ_j} with q_a = p_a e^{-τ/2}
    let mut e_re = Array2::zeros((n, n));
    let mut e_im = Array2::zeros((n, n));
    for a in 0..n {
        let q = g.wavenumber(a) * contraction;
        for j in 0..n {
            let phase = -q * g.coord(j);
            e_re[[a, j]] = phase.cos();
            e_im[[a, j]] = phase.sin();
        }
    }

    // f̂(q_a, q_b) = h² Σ_{j,l} F[j,l] e^{-i q_a ξ_j} e^{-i q_b ξ_l}
    let g1_re = e_re.dot(&w.values);
    let g1_im = e_im.dot(&w.values);
    let e_re_t = e_re.t();
    let e_im_t = e_im.t();
    let dil_re = &g1_re.dot(&e_re_t) - &g1_im.dot(&e_im_t);
    let dil_im = &g1_re.dot(&e_im_t) + &g1_im.dot(&e_re_t);

    let a_tau = 1.0 - (-tau).exp();
    let mut out = crate::field::SpectralField::zeros(g);
    for k1 in 0..n {
        let p1 = g.wavenumber(k1);
        for k2 in 0..n {
            let p2 = g.wavenumber(k2);
            let damp = (-a_tau * (p1 * p1 + p2 * p2)).exp() * h * h;
            out.coeffs[[k1, k2]] = Complex::new(dil_re[[k1, k2]] * damp, dil_im[[k1, k2]] * damp);
        }
    }
    Ok(out.backward())
}

/// Gaussian-enveloped random polynomial, the corpus member for the
/// semigroup decay checks: w(ξ) = P(ξ)·e^{-|ξ|²/4}, deg P ≤ 4, normalized
/// to the requested L² amplitude.
pub fn random_envelope_field(grid: Grid, rng: &mut impl Rng, amplitude: f64) -> RealField {
    let degree = 4usize;
    let mut coeffs = Vec::new();
    for i in 0..=degree {
        for j in 0..=degree - i {
            coeffs.push((i as i32, j as i32, rng.gen_range(-1.0..1.0)));
        }
    }
    let raw = RealField::from_fn(grid, |x1, x2| {
        let mut p = 0.0;
        for &(i, j, c) in &coeffs {
            p += c * x1.powi(i) * x2.powi(j);
        }
        p * (-(x1 * x1 + x2 * x2) / 4.0).exp()
    });
    let norm = raw.l2_norm();
    raw.scale(amplitude / norm)
}

/// One sampled point of the semigroup decay verification.
#[derive(Debug, Clone, Serialize)]
pub struct SgestimSample {
    pub field_index: usize,
    pub m: f64,
    pub n: u32,
    pub tau: f64,
    pub norm: f64,
}

/// Summary of [`verify_sgestim`].
#[derive(Debug, Clone, Serialize)]
pub struct SgestimReport {
    pub m: f64,
    pub n: u32,
    pub fitted_rate: f64,
    /// spectral-gap decay rate -(n+1)/2
    pub bound: f64,
    pub pass: bool,
    #[serde(skip)]
    pub samples: Vec<SgestimSample>,
}

impl SgestimReport {
    /// CSV rows (m, n, tau, norm).
    pub fn write_csv(&self, out: &mut impl Write) -> std::io::Result<()> {
        writeln!(out, "m,n,tau,norm")?;
        for s in &self.samples {
            writeln!(out, "{},{},{},{:.17e}", s.m, s.n, s.tau, s.norm)?;
        }
        Ok(())
    }
}

/// Fit the decay rate of ‖e^{τℒ}Q_n f‖_m over a random corpus and compare
/// the worst case against the spectral-gap bound -(n+1)/2. The regime
/// requires m ≥ n + 2; fields already in span{φ_α, |α| ≤ n} have Q_n f = 0
/// and are excluded from the fit.
pub fn verify_sgestim(
    grid: Grid,
    m: f64,
    n: u32,
    tau_grid: &[f64],
    corpus_size: usize,
    rng: &mut impl Rng,
) -> Result<SgestimReport> {
    if f64::from(n) + 2.0 > m {
        return Err(Error::Precondition(format!(
            "semigroup decay regime requires m >= n + 2, got n = {n}, m = {m}"
        )));
    }
    if tau_grid.len() < 3 {
        return Err(Error::Precondition("tau grid needs at least 3 points".into()));
    }
    let spec = ProjectionSpec::new(n, m)?;
    let weight = spec.weight();
    let mut worst: Option<f64> = None;
    let mut samples = Vec::new();
    for idx in 0..corpus_size {
        let f = random_envelope_field(grid, rng, 1.0);
        let qf = project(&f, spec, Part::Q);
        if qf.weighted_norm(weight) < 1e-12 * f.weighted_norm(weight) {
            continue;
        }
        let mut taus = Vec::new();
        let mut norms = Vec::new();
        for &tau in tau_grid {
            let evolved = semigroup_apply(&qf, tau)?;
            let nrm = evolved.weighted_norm(weight);
            samples.push(SgestimSample { field_index: idx, m, n, tau, norm: nrm });
            taus.push(tau);
            norms.push(nrm);
        }
        let fit = fit_decay(&taus, &norms, (tau_grid[0], *tau_grid.last().unwrap()))?;
        worst = Some(match worst {
            Some(w) => w.max(fit.rate),
            None => fit.rate,
        });
    }
    let fitted_rate = worst.ok_or_else(|| {
        Error::Precondition("entire corpus fell inside the retained subspace".into())
    })?;
    let bound = -(f64::from(n) + 1.0) / 2.0;
    Ok(SgestimReport { m, n, fitted_rate, bound, pass: fitted_rate <= bound + 0.05, samples })
}

/// Decay fit of ‖e^{τℒ}f‖_m for one prepared field over a τ grid.
pub fn semigroup_decay_fit(f: &RealField, weight: WeightSpec, tau_grid: &[f64]) -> Result<DecayFit> {
    let mut norms = Vec::new();
    for &tau in tau_grid {
        norms.push(semigroup_apply(f, tau)?.weighted_norm(weight));
    }
    fit_decay(tau_grid, &norms, (tau_grid[0], *tau_grid.last().unwrap()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::profiles::NamedProfile;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn grid() -> Grid {
        Grid::new(128, 12.0).unwrap()
    }

    #[test]
    fn gaussian_is_in_the_kernel() {
        let g = NamedProfile::G.field(grid());
        let lg = apply_l(&g);
        assert!(lg.l2_norm() <= 1e-8 * g.l2_norm(), "|LG| = {}", lg.l2_norm());
    }

    #[test]
    fn first_order_eigenfunctions() {
        let g = grid();
        let f1 = NamedProfile::F1.field(g);
        let res = apply_l(&f1).add_scaled(0.5, &f1).l2_norm();
        assert!(res <= 1e-8 * f1.l2_norm(), "F1 residual {res}");

        let h2 = NamedProfile::H2.field(g);
        let res = apply_l(&h2).add_scaled(1.0, &h2).l2_norm();
        assert!(res <= 1e-8 * h2.l2_norm(), "H2 residual {res}");
    }

    #[test]
    fn eigen_residual_table_low_orders() {
        // λ_k = -k/2 for every |α| ≤ 3; tolerance doubled at n = 128
        let g = grid();
        for alpha in HermiteIndex::up_to_order(3) {
            let r = eigen_residual(alpha, g).unwrap();
            assert!(r <= 2e-7, "eigen residual for {alpha:?}: {r:.3e}");
        }
    }

    #[test]
    fn truncation_warning_fires_for_delocalized_fields() {
        let g = grid();
        let (_, warn) = apply_l_checked(&NamedProfile::G.field(g));
        assert!(!warn);
        let bad = RealField::from_fn(g, |x1, _| (std::f64::consts::PI * x1 / 12.0).cos());
        let (_, warn) = apply_l_checked(&bad);
        assert!(warn);
    }

    #[test]
    fn projection_examples() {
        let g = grid();
        let spec0 = ProjectionSpec::new(0, 2.0).unwrap();
        let gauss = NamedProfile::G.field(g);
        let p0 = project(&gauss, spec0, Part::P);
        assert!(p0.sub(&gauss).l2_norm() < 1e-10);

        // Q₂ annihilates span{|α| ≤ 2}
        let spec2 = ProjectionSpec::new(2, 4.0).unwrap();
        let w = gauss.add(&NamedProfile::H2.field(g));
        let q2 = project(&w, spec2, Part::Q);
        assert!(q2.l2_norm() < 1e-8, "Q2(G + H2) = {}", q2.l2_norm());

        // K is a third-order Hermite function: P₂K = 0
        let k = NamedProfile::K.field(g);
        let p2k = project(&k, spec2, Part::P);
        assert!(p2k.l2_norm() < 1e-8, "P2 K = {}", p2k.l2_norm());
    }

    #[test]
    fn projection_is_idempotent_and_complementary() {
        let g = grid();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let w = random_envelope_field(g, &mut rng, 1.0);
        let spec = ProjectionSpec::new(2, 4.0).unwrap();
        let p = project(&w, spec, Part::P);
        let q = project(&w, spec, Part::Q);
        assert!(p.add(&q).sub(&w).l2_norm() < 1e-12);
        let pp = project(&p, spec, Part::P);
        assert!(pp.sub(&p).l2_norm() < 1e-10);
    }

    #[test]
    fn projection_spec_requires_isolation() {
        assert!(ProjectionSpec::new(2, 3.0).is_err());
        assert!(ProjectionSpec::new(2, 3.5).is_ok());
    }

    #[test]
    fn semigroup_is_identity_at_zero_and_rejects_negative_time() {
        let w = NamedProfile::H3.field(grid());
        let s0 = semigroup_apply(&w, 0.0).unwrap();
        assert_eq!(s0, w);
        assert!(semigroup_apply(&w, -0.1).is_err());
    }

    #[test]
    fn semigroup_eigen_action() {
        let g = grid();
        for alpha in HermiteIndex::up_to_order(2) {
            let phi = hermite_function(alpha, g).unwrap();
            for tau in [0.5, 1.0, 2.0] {
                let evolved = semigroup_apply(&phi, tau).unwrap();
                let expected = phi.scale((-(alpha.order() as f64) * tau / 2.0).exp());
                let err = evolved.sub(&expected).l2_norm() / phi.l2_norm();
                assert!(err < 1e-6, "eigen action {alpha:?} at tau={tau}: {err:.2e}");
            }
        }
    }

    #[test]
    fn gaussian_is_a_fixed_point() {
        let g = NamedProfile::G.field(grid());
        let evolved = semigroup_apply(&g, 5.0).unwrap();
        let err = evolved.sub(&g).l2_norm() / g.l2_norm();
        assert!(err < 1e-6, "G fixed point error {err:.2e}");
    }

    #[test]
    fn semigroup_property() {
        let g = grid();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let w = random_envelope_field(g, &mut rng, 1.0);
        for (t1, t2) in [(0.3, 0.7), (1.0, 1.0), (0.1, 1.9)] {
            let two_step = semigroup_apply(&semigroup_apply(&w, t1).unwrap(), t2).unwrap();
            let one_step = semigroup_apply(&w, t1 + t2).unwrap();
            let err = two_step.sub(&one_step).l2_norm();
            assert!(err < 1e-8, "semigroup property at ({t1},{t2}): {err:.2e}");
        }
    }

    #[test]
    fn commutes_with_derivatives_up_to_dilation_factor() {
        // ∂_i e^{τℒ} = e^{τ/2} e^{τℒ} ∂_i
        let g = grid();
        let w = NamedProfile::H1.field(g);
        let tau = 0.8;
        let lhs = semigroup_apply(&w, tau).unwrap().derivative(Axis::Xi1);
        let rhs = semigroup_apply(&w.derivative(Axis::Xi1), tau)
            .unwrap()
            .scale((tau / 2.0).exp());
        let err = lhs.sub(&rhs).l2_norm() / lhs.l2_norm();
        assert!(err < 1e-7, "commutation error {err:.2e}");
    }

    #[test]
    fn generator_consistency() {
        // (S(h)w - w)/h → ℒw with first-order convergence in h
        let g = grid();
        let w = NamedProfile::H2.field(g);
        let lw = apply_l(&w);
        let diff_quot = |h: f64| {
            semigroup_apply(&w, h).unwrap().sub(&w).scale(1.0 / h).sub(&lw).l2_norm()
        };
        let e1 = diff_quot(0.02);
        let e2 = diff_quot(0.01);
        assert!(e2 < e1, "error must shrink with h: {e1:.3e} vs {e2:.3e}");
        let order = (e1 / e2).log2();
        assert!((order - 1.0).abs() < 0.35, "observed order {order}");
    }

    #[test]
    fn sgestim_rates_meet_the_bound() {
        let g = grid();
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let taus: Vec<f64> = (0..9).map(|i| 1.0 + 0.5 * i as f64).collect();
        let report = verify_sgestim(g, 4.0, 2, &taus, 5, &mut rng).unwrap();
        assert!(report.pass, "fitted rate {} vs bound {}", report.fitted_rate, report.bound);
        assert!(report.fitted_rate <= -1.45);

        let report = verify_sgestim(g, 3.0, 1, &taus, 5, &mut rng).unwrap();
        assert!(report.fitted_rate <= -0.95, "n=1 rate {}", report.fitted_rate);
    }

    #[test]
    fn sgestim_rejects_bad_regime() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert!(verify_sgestim(grid(), 3.0, 2, &[1.0, 2.0, 3.0], 2, &mut rng).is_err());
    }

    #[test]
    fn retained_subspace_has_zero_stable_part() {
        let g = grid();
        let gauss = NamedProfile::G.field(g);
        let spec = ProjectionSpec::new(2, 4.0).unwrap();
        let q = project(&gauss, spec, Part::Q);
        assert!(q.weighted_norm(spec.weight()) < 1e-12 * gauss.weighted_norm(spec.weight()));
    }

    #[test]
    fn weighted_l1_to_l2_semigroup_bound_is_bounded() {
        // spot check of the (q,p) = (1,2) smoothing estimate:
        // |b^m S(τ)f|₂ · a(τ)^{1/2} / |b^m f|₁ stays bounded over the sweep
        let g = grid();
        let w = NamedProfile::H2.field(g);
        let m = WeightSpec::new(2.0).unwrap();
        let weighted_l1 = RealField::from_fn(g, |x1, x2| 1.0 + x1 * x1 + x2 * x2)
            .mul(&w)
            .lp_norm(1.0)
            .unwrap();
        let mut ratios = Vec::new();
        for tau in [0.25f64, 0.5, 1.0, 2.0, 4.0] {
            let a = 1.0 - (-tau).exp();
            let nrm = semigroup_apply(&w, tau).unwrap().weighted_norm(m);
            ratios.push(nrm * a.sqrt() / weighted_l1);
        }
        let max = ratios.iter().cloned().fold(0.0f64, f64::max);
        assert!(max.is_finite() && max > 0.0);
        // the estimate is an upper bound, so only uniform boundedness is
        // assertable; measured maximum is ~0.052, generous headroom below
        assert!(max < 0.5, "compensated ratio {max}");
    }
}
