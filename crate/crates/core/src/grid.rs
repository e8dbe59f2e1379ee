//! Uniform periodic tensor grid on the square [-Λ,Λ)².

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Discretization of the ξ-plane: n uniformly spaced points per axis on
/// [-Λ,Λ), with angular wavenumbers p_k = πk/Λ, k ∈ {-n/2,…,n/2-1}.
///
/// With this convention the discrete Fourier symbol of differential
/// operators matches the continuum one without unit conversion.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    n: usize,
    half_width: f64,
}

impl Grid {
    pub fn new(n: usize, half_width: f64) -> Result<Self> {
        if n < 16 || n % 2 != 0 {
            return Err(Error::InvalidGrid(format!(
                "n must be even and >= 16, got {n}"
            )));
        }
        if !(half_width > 0.0) || !half_width.is_finite() {
            return Err(Error::InvalidGrid(format!(
                "half_width must be positive and finite, got {half_width}"
            )));
        }
        Ok(Self { n, half_width })
    }

    /// Production default: Λ = 12, n = 256. All Gaussian-dominated profiles
    /// are below 1e-14 at the boundary of this box.
    pub fn default_production() -> Self {
        Self { n: 256, half_width: 12.0 }
    }

    /// Points per axis.
    pub fn n(&self) -> usize {
        self.n
    }

    /// Box half width Λ.
    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    /// Mesh spacing h = 2Λ/n.
    pub fn spacing(&self) -> f64 {
        2.0 * self.half_width / self.n as f64
    }

    /// Coordinate of node i along either axis: ξ = -Λ + i·h.
    pub fn coord(&self, i: usize) -> f64 {
        -self.half_width + self.spacing() * i as f64
    }

    /// All node coordinates along one axis.
    pub fn coords(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.coord(i)).collect()
    }

    /// Signed wavenumber index for FFT slot k: 0,1,…,n/2-1,-n/2,…,-1.
    pub fn wave_index(&self, k: usize) -> i64 {
        let n = self.n as i64;
        let k = k as i64;
        if k < n / 2 {
            k
        } else {
            k - n
        }
    }

    /// Angular wavenumber for FFT slot k: p = π·k_signed/Λ.
    pub fn wavenumber(&self, k: usize) -> f64 {
        PI * self.wave_index(k) as f64 / self.half_width
    }

    /// Wavenumbers for all FFT slots along one axis.
    pub fn wavenumbers(&self) -> Vec<f64> {
        (0..self.n).map(|k| self.wavenumber(k)).collect()
    }

    /// Largest resolved |p| along one axis.
    pub fn max_wavenumber(&self) -> f64 {
        PI * (self.n as f64 / 2.0) / self.half_width
    }

    /// Largest |p| along one axis that survives the 2/3-rule truncation.
    pub fn max_dealiased_wavenumber(&self) -> f64 {
        PI * (self.n as f64 / 3.0).floor() / self.half_width
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_parameters() {
        assert!(Grid::new(8, 12.0).is_err());
        assert!(Grid::new(33, 12.0).is_err());
        assert!(Grid::new(64, 0.0).is_err());
        assert!(Grid::new(64, -3.0).is_err());
    }

    #[test]
    fn spacing_times_n_is_exactly_the_box() {
        let g = Grid::new(128, 12.0).unwrap();
        assert_eq!(g.spacing() * g.n() as f64, 2.0 * g.half_width());
    }

    #[test]
    fn wavenumbers_are_conjugate_symmetric() {
        let g = Grid::new(64, 10.0).unwrap();
        let p = g.wavenumbers();
        // every +k has a matching -k except the unpaired -n/2 slot
        for k in 1..g.n() / 2 {
            assert_eq!(p[k], -p[g.n() - k]);
        }
        assert_eq!(p[0], 0.0);
        assert_eq!(g.wave_index(g.n() / 2), -(g.n() as i64) / 2);
    }
}
