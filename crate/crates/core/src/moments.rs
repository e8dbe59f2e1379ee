//! The six spectral coefficients (α, β₁, β₂, γ₁, γ₂, γ₃) of a vorticity
//! field, i.e. its coordinates along G, F₁, F₂, H₁, H₂, H₃.
//!
//! These are the dual pairings
//!   α   = ∫ w,
//!   β_i = -∫ ξ_i w,
//!   γ_j = ∫ p_j w,   p₁ = ¼(|ξ|²-4), p₂ = ¼(ξ₁²-ξ₂²), p₃ = ξ₁ξ₂,
//! and extraction is exactly biorthogonal on span{G, F₁, F₂, H₁, H₂, H₃}.

use crate::field::RealField;
use crate::profiles::moment_weight;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentSet {
    pub alpha: f64,
    pub beta: [f64; 2],
    pub gamma: [f64; 3],
}

impl MomentSet {
    pub const ZERO: MomentSet = MomentSet { alpha: 0.0, beta: [0.0; 2], gamma: [0.0; 3] };

    /// Flatten to (α, β₁, β₂, γ₁, γ₂, γ₃).
    pub fn as_array(&self) -> [f64; 6] {
        [self.alpha, self.beta[0], self.beta[1], self.gamma[0], self.gamma[1], self.gamma[2]]
    }

    pub fn max_abs(&self) -> f64 {
        self.as_array().iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }
}

/// Six quadratures; linear in w.
pub fn extract_moments(w: &RealField) -> MomentSet {
    let g = w.grid();
    let h2 = g.spacing() * g.spacing();
    let n = g.n();
    let mut alpha = 0.0;
    let mut beta = [0.0; 2];
    let mut gamma = [0.0; 3];
    for i in 0..n {
        let x1 = g.coord(i);
        for j in 0..n {
            let x2 = g.coord(j);
            let v = w.values[[i, j]];
            alpha += v;
            beta[0] -= x1 * v;
            beta[1] -= x2 * v;
            gamma[0] += moment_weight(1, x1, x2) * v;
            gamma[1] += moment_weight(2, x1, x2) * v;
            gamma[2] += moment_weight(3, x1, x2) * v;
        }
    }
    MomentSet {
        alpha: alpha * h2,
        beta: [beta[0] * h2, beta[1] * h2],
        gamma: [gamma[0] * h2, gamma[1] * h2, gamma[2] * h2],
    }
}
