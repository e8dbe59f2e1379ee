//! Closed-form profiles of the Gaussian family and the Hermite basis.
//!
//! Everything here is a polynomial times the Gaussian envelope
//! e^{-|ξ|²/4}, evaluated from explicit coefficients rather than by
//! numerical differentiation, so there is no cancellation error at high
//! order.
//!
//! Normalizations:
//!   G    = (4π)^{-1} e^{-|ξ|²/4},               ∫G = 1
//!   F_i  = ∂_i G = -(ξ_i/2) G
//!   H₁   = ¼(|ξ|²-4) G,  H₂ = ¼(ξ₁²-ξ₂²) G,  H₃ = ¼ ξ₁ξ₂ G
//!   K    = ∂₁H₁ = ξ₁(1-|ξ|²/8) G
//!   Φ    = (8π²|ξ|⁴)^{-1} e^{-|ξ|²/4} (e^{-|ξ|²/4}-1+|ξ|²/4)
//!   Ψ₂   = (ξ₁²-ξ₂²)Φ - κH₂,  Ψ₃ = ξ₁ξ₂Φ - κH₃,  κ = 1/(32π)
//!
//! H₃ carries the ¼ so that the dual pairing with p₃ = ξ₁ξ₂ is exactly 1.

use crate::error::{Error, Result};
use crate::field::RealField;
use crate::grid::Grid;
use std::f64::consts::PI;

/// κ = ∫ ξ₁²ξ₂² Φ dξ = 1/(32π), the resonance constant.
pub const KAPPA: f64 = 1.0 / (32.0 * PI);

/// Gaussian vorticity profile G(ξ).
pub fn gauss(x1: f64, x2: f64) -> f64 {
    (1.0 / (4.0 * PI)) * (-(x1 * x1 + x2 * x2) / 4.0).exp()
}

/// Interaction profile Φ(ξ); the removable singularity at ξ = 0 is
/// evaluated by the power series of (e^{-s/4}-1+s/4)/s² in s = |ξ|².
pub fn phi_interaction(x1: f64, x2: f64) -> f64 {
    let s = x1 * x1 + x2 * x2;
    let psi = if s < 1.0 {
        // Σ_{k≥2} (-1)^k s^{k-2} / (4^k k!)
        let mut sum = 0.0;
        let mut term = 1.0 / 32.0; // k = 2
        let mut k = 2.0;
        loop {
            sum += term;
            k += 1.0;
            term *= -s / (4.0 * k);
            if term.abs() < 1e-22 {
                break;
            }
        }
        sum
    } else {
        let e = (-s / 4.0).exp();
        (e - 1.0 + s / 4.0) / (s * s)
    };
    (1.0 / (8.0 * PI * PI)) * (-s / 4.0).exp() * psi
}

/// The named closed-form profiles.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NamedProfile {
    G,
    F1,
    F2,
    H1,
    H2,
    H3,
    K,
    Phi,
    Psi2,
    Psi3,
}

impl NamedProfile {
    pub const ALL: [NamedProfile; 10] = [
        NamedProfile::G,
        NamedProfile::F1,
        NamedProfile::F2,
        NamedProfile::H1,
        NamedProfile::H2,
        NamedProfile::H3,
        NamedProfile::K,
        NamedProfile::Phi,
        NamedProfile::Psi2,
        NamedProfile::Psi3,
    ];

    pub fn parse(tag: &str) -> Result<Self> {
        match tag.trim().to_ascii_uppercase().as_str() {
            "G" => Ok(Self::G),
            "F1" => Ok(Self::F1),
            "F2" => Ok(Self::F2),
            "H1" => Ok(Self::H1),
            "H2" => Ok(Self::H2),
            "H3" => Ok(Self::H3),
            "K" => Ok(Self::K),
            "PHI" => Ok(Self::Phi),
            "PSI2" => Ok(Self::Psi2),
            "PSI3" => Ok(Self::Psi3),
        _ => Err(Error::Parse(format!("unknown profile tag '{tag}'"))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::G => "G",
            Self::F1 => "F1",
            Self::F2 => "F2",
            Self::H1 => "H1",
            Self::H2 => "H2",
            Self::H3 => "H3",
            Self::K => "K",
            Self::Phi => "Phi",
            Self::Psi2 => "Psi2",
            Self::Psi3 => "Psi3",
        }
    }

    /// Pointwise evaluation.
    pub fn eval(&self, x1: f64, x2: f64) -> f64 {
        let g = gauss(x1, x2);
        let s = x1 * x1 + x2 * x2;
        match self {
            Self::G => g,
            Self::F1 => -(x1 / 2.0) * g,
            Self::F2 => -(x2 / 2.0) * g,
            Self::H1 => 0.25 * (s - 4.0) * g,
            Self::H2 => 0.25 * (x1 * x1 - x2 * x2) * g,
            Self::H3 => 0.25 * x1 * x2 * g,
            Self::K => x1 * (1.0 - s / 8.0) * g,
            Self::Phi => phi_interaction(x1, x2),
            Self::Psi2 => {
                (x1 * x1 - x2 * x2) * phi_interaction(x1, x2)
                    - KAPPA * 0.25 * (x1 * x1 - x2 * x2) * g
            }
            Self::Psi3 => x1 * x2 * phi_interaction(x1, x2) - KAPPA * 0.25 * x1 * x2 * g,
        }
    }

    /// Sample on a grid.
    pub fn field(&self, grid: Grid) -> RealField {
        RealField::from_fn(grid, |x1, x2| self.eval(x1, x2))
    }
}

/// Multi-index α = (α₁, α₂) of a Hermite function or polynomial.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct HermiteIndex {
    pub a1: u32,
    pub a2: u32,
}

impl HermiteIndex {
    pub fn new(a1: u32, a2: u32) -> Self {
        Self { a1, a2 }
    }

    /// |α| = α₁ + α₂.
    pub fn order(&self) -> u32 {
        self.a1 + self.a2
    }

    /// All indices with |α| = k.
    pub fn of_order(k: u32) -> Vec<Self> {
        (0..=k).map(|a1| Self::new(a1, k - a1)).collect()
    }

    /// All indices with |α| ≤ k, by increasing order.
    pub fn up_to_order(k: u32) -> Vec<Self> {
        (0..=k).flat_map(Self::of_order).collect()
    }

    pub fn factorial(&self) -> f64 {
        fn fact(k: u32) -> f64 {
            (1..=k).map(|i| i as f64).product()
        }
        fact(self.a1) * fact(self.a2)
    }
}

const MAX_HERMITE_ORDER: u32 = 6;

/// Univariate polynomial with explicit coefficients (index = power).
#[derive(Debug, Clone, PartialEq)]
pub struct Poly1 {
    pub coeffs: Vec<f64>,
}

impl Poly1 {
    pub fn eval(&self, x: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, &c| acc * x + c)
    }

    fn derivative(&self) -> Poly1 {
        if self.coeffs.len() <= 1 {
            return Poly1 { coeffs: vec![0.0] };
        }
        Poly1 {
            coeffs: self
                .coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(k, &c)| k as f64 * c)
                .collect(),
        }
    }
}

/// q_k, the polynomial factor of d^k/ds^k e^{-s²/4}: q₀ = 1 and
/// q_{k+1} = q_k' - (s/2) q_k. The coefficients are exact dyadic rationals.
fn gaussian_derivative_poly(k: u32) -> Poly1 {
    let mut q = Poly1 { coeffs: vec![1.0] };
    for _ in 0..k {
        let d = q.derivative();
        // q' - (s/2) q
        let mut coeffs = vec![0.0; q.coeffs.len() + 1];
        for (i, &c) in d.coeffs.iter().enumerate() {
            coeffs[i] += c;
        }
        for (i, &c) in q.coeffs.iter().enumerate() {
            coeffs[i + 1] -= 0.5 * c;
        }
        q = Poly1 { coeffs };
    }
    q
}

/// Hermite function φ_α = ∂^α φ₀ with φ₀ = G, as polynomial × Gaussian.
///
/// φ₀ = G, φ_{(1,0)} = F₁, and the |α| = 2 functions span {H₁,H₂,H₃}.
pub fn hermite_function(alpha: HermiteIndex, grid: Grid) -> Result<RealField> {
    if alpha.order() > MAX_HERMITE_ORDER {
        return Err(Error::InvalidParameter(format!(
            "hermite_function supports |alpha| <= {MAX_HERMITE_ORDER}, got {}",
            alpha.order()
        )));
    }
    let q1 = gaussian_derivative_poly(alpha.a1);
    let q2 = gaussian_derivative_poly(alpha.a2);
    Ok(RealField::from_fn(grid, |x1, x2| {
        q1.eval(x1) * q2.eval(x2) * gauss(x1, x2)
    }))
}

/// Pointwise evaluator for φ_α, for callers that need off-grid values.
pub fn hermite_function_eval(alpha: HermiteIndex) -> impl Fn(f64, f64) -> f64 {
    let q1 = gaussian_derivative_poly(alpha.a1);
    let q2 = gaussian_derivative_poly(alpha.a2);
    move |x1, x2| q1.eval(x1) * q2.eval(x2) * gauss(x1, x2)
}

/// Hermite polynomial H_α(ξ) = (2^{|α|}/α!) e^{|ξ|²/4} ∂^α e^{-|ξ|²/4},
/// the dual basis of the φ_α: ∫ H_α φ_β = δ_{αβ}.
#[derive(Debug, Clone)]
pub struct HermitePolynomial {
    scale: f64,
    p1: Poly1,
    p2: Poly1,
}

impl HermitePolynomial {
    pub fn eval(&self, x1: f64, x2: f64) -> f64 {
        self.scale * self.p1.eval(x1) * self.p2.eval(x2)
    }

    /// Monomial coefficients c[i][j] of Σ c_{ij} ξ₁^i ξ₂^j.
    pub fn coefficients(&self) -> Vec<Vec<f64>> {
        self.p1
            .coeffs
            .iter()
            .map(|&a| self.p2.coeffs.iter().map(|&b| self.scale * a * b).collect())
            .collect()
    }

    pub fn field(&self, grid: Grid) -> RealField {
        RealField::from_fn(grid, |x1, x2| self.eval(x1, x2))
    }
}

pub fn hermite_polynomial(alpha: HermiteIndex) -> Result<HermitePolynomial> {
    if alpha.order() > MAX_HERMITE_ORDER {
        return Err(Error::InvalidParameter(format!(
            "hermite_polynomial supports |alpha| <= {MAX_HERMITE_ORDER}, got {}",
            alpha.order()
        )));
    }
    Ok(HermitePolynomial {
        scale: 2f64.powi(alpha.order() as i32) / alpha.factorial(),
        p1: gaussian_derivative_poly(alpha.a1),
        p2: gaussian_derivative_poly(alpha.a2),
    })
}

/// The quadratic moment weights p₁ = ¼(|ξ|²-4), p₂ = ¼(ξ₁²-ξ₂²), p₃ = ξ₁ξ₂
/// dual to (H₁, H₂, H₃).
pub fn moment_weight(j: usize, x1: f64, x2: f64) -> f64 {
    match j {
        1 => 0.25 * (x1 * x1 + x2 * x2 - 4.0),
        2 => 0.25 * (x1 * x1 - x2 * x2),
        3 => x1 * x2,
        _ => panic!("moment weight index must be 1, 2 or 3"),
    }
}
