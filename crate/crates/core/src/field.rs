//! Scalar and vector fields on a [`Grid`], spectral transforms, quadrature
//! and the weighted norms used throughout.
//!
//! Transform convention: f̂(p) = ∫ f(ξ) e^{-ip·ξ} dξ, approximated by
//! h²·DFT on the periodic box, with the inverse carrying (2π)^{-2}.
//! Trapezoidal quadrature on the periodic grid is spectrally accurate for
//! smooth decaying integrands, so `integrate` is plain h²·Σ.

use crate::error::{Error, Result};
use crate::fft::fft2;
use crate::grid::Grid;
use ndarray::Array2;
use rustfft::num_complex::Complex;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

/// Axis selector for derivatives (ξ₁ varies along array rows).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    Xi1,
    Xi2,
}

/// Weight exponent m for the norm ‖f‖_m = |b^m f|₂ with b(ξ) = (1+|ξ|²)^{1/2}.
///
/// Supported range is 0 ≤ m ≤ 6; beyond that the weight overwhelms the box.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeightSpec {
    m: f64,
}

impl WeightSpec {
    pub fn new(m: f64) -> Result<Self> {
        if !(0.0..=6.0).contains(&m) {
            return Err(Error::InvalidParameter(format!(
                "weight exponent must satisfy 0 <= m <= 6, got {m}"
            )));
        }
        Ok(Self { m })
    }

    pub fn m(&self) -> f64 {
        self.m
    }

    /// True when the weighted integrand of f at the box corner is below
    /// 1e-10 of its maximum, i.e. the norm is not truncation-limited.
    pub fn truncation_ok(&self, f: &RealField) -> bool {
        let g = f.grid();
        let mut max = 0.0f64;
        let mut corner = 0.0f64;
        let n = g.n();
        for i in 0..n {
            let x1 = g.coord(i);
            for j in 0..n {
                let x2 = g.coord(j);
                let b2 = 1.0 + x1 * x1 + x2 * x2;
                let v = b2.powf(self.m) * f.values[[i, j]] * f.values[[i, j]];
                if v > max {
                    max = v;
                }
                if i == 0 && j == 0 {
                    corner = v;
                }
            }
        }
        max == 0.0 || corner < 1e-10 * max
    }
}

/// Real scalar field sampled on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct RealField {
    grid: Grid,
    pub values: Array2<f64>,
}

impl RealField {
    pub fn zeros(grid: Grid) -> Self {
        let n = grid.n();
        Self { grid, values: Array2::zeros((n, n)) }
    }

    /// Sample a closed-form function of (ξ₁, ξ₂) on the grid.
    pub fn from_fn(grid: Grid, f: impl Fn(f64, f64) -> f64) -> Self {
        let n = grid.n();
        let values = Array2::from_shape_fn((n, n), |(i, j)| f(grid.coord(i), grid.coord(j)));
        Self { grid, values }
    }

    pub fn from_values(grid: Grid, values: Array2<f64>) -> Result<Self> {
        if values.dim() != (grid.n(), grid.n()) {
            return Err(Error::GridMismatch);
        }
        Ok(Self { grid, values })
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    /// |∫ f dξ| ≤ tol, the invariant carried by mean-zero tagged fields.
    pub fn is_mean_zero(&self, tol: f64) -> bool {
        self.integrate().abs() <= tol
    }

    /// Quadrature of ∫ f dξ: h²·Σ values.
    pub fn integrate(&self) -> f64 {
        let h = self.grid.spacing();
        h * h * self.values.iter().sum::<f64>()
    }

    /// Quadrature of ∫ f·g dξ.
    pub fn inner(&self, other: &RealField) -> f64 {
        debug_assert_eq!(self.grid, other.grid);
        let h = self.grid.spacing();
        h * h
            * self
                .values
                .iter()
                .zip(other.values.iter())
                .map(|(a, b)| a * b)
                .sum::<f64>()
    }

    /// Lebesgue norm |f|_p; p = ∞ gives max |f|. Rejects p < 1.
    pub fn lp_norm(&self, p: f64) -> Result<f64> {
        if p < 1.0 {
            return Err(Error::InvalidParameter(format!("lp_norm requires p >= 1, got {p}")));
        }
        if p.is_infinite() {
            return Ok(self.values.iter().fold(0.0f64, |m, v| m.max(v.abs())));
        }
        let h = self.grid.spacing();
        let sum: f64 = self.values.iter().map(|v| v.abs().powf(p)).sum();
        Ok((h * h * sum).powf(1.0 / p))
    }

    /// Weighted norm ‖f‖_m = (∫ (1+|ξ|²)^m f² dξ)^{1/2}.
    pub fn weighted_norm(&self, spec: WeightSpec) -> f64 {
        let g = self.grid;
        let h = g.spacing();
        let m = spec.m();
        let mut sum = 0.0;
        for i in 0..g.n() {
            let x1 = g.coord(i);
            for j in 0..g.n() {
                let x2 = g.coord(j);
                let b2 = 1.0 + x1 * x1 + x2 * x2;
                let v = self.values[[i, j]];
                sum += b2.powf(m) * v * v;
            }
        }
        (h * h * sum).sqrt()
    }

    /// Shorthand for the L² norm.
    pub fn l2_norm(&self) -> f64 {
        self.weighted_norm(WeightSpec { m: 0.0 })
    }

    /// Forward transform to spectral coefficients.
    pub fn forward(&self) -> SpectralField {
        let n = self.grid.n();
        let h = self.grid.spacing();
        let mut buf: Vec<Complex<f64>> =
            self.values.iter().map(|&v| Complex::new(v, 0.0)).collect();
        fft2(&mut buf, n, false);
        // phase (-1)^{k1+k2} shifts the origin to the box center; h² makes
        // the coefficients approximate the continuum transform
        let mut coeffs = Array2::default((n, n));
        for k1 in 0..n {
            for k2 in 0..n {
                let sign = if (k1 + k2) % 2 == 0 { 1.0 } else { -1.0 };
                coeffs[[k1, k2]] = buf[k1 * n + k2] * (h * h * sign);
            }
        }
        SpectralField { grid: self.grid, coeffs }
    }

    /// Spectral derivative along one axis; exact for band-limited fields.
    pub fn derivative(&self, axis: Axis) -> RealField {
        self.forward().derivative(axis).backward()
    }

    pub fn scale(&self, c: f64) -> RealField {
        RealField { grid: self.grid, values: &self.values * c }
    }

    pub fn add(&self, other: &RealField) -> RealField {
        debug_assert_eq!(self.grid, other.grid);
        RealField { grid: self.grid, values: &self.values + &other.values }
    }

    pub fn sub(&self, other: &RealField) -> RealField {
        debug_assert_eq!(self.grid, other.grid);
        RealField { grid: self.grid, values: &self.values - &other.values }
    }

    /// self + c·other, the workhorse for linear combinations.
    pub fn add_scaled(&self, c: f64, other: &RealField) -> RealField {
        debug_assert_eq!(self.grid, other.grid);
        RealField { grid: self.grid, values: &self.values + &(&other.values * c) }
    }

    /// Pointwise product.
    pub fn mul(&self, other: &RealField) -> RealField {
        debug_assert_eq!(self.grid, other.grid);
        RealField { grid: self.grid, values: &self.values * &other.values }
    }

    /// Binary snapshot: header (n, Λ as little-endian 64-bit values), then
    /// row-major f64 values.
    pub fn write_binary(&self, path: &Path) -> Result<()> {
        let mut w = BufWriter::new(std::fs::File::create(path)?);
        w.write_all(&(self.grid.n() as u64).to_le_bytes())?;
        w.write_all(&self.grid.half_width().to_le_bytes())?;
        for v in self.values.iter() {
            w.write_all(&v.to_le_bytes())?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_binary(path: &Path) -> Result<Self> {
        let mut r = BufReader::new(std::fs::File::open(path)?);
        let mut b8 = [0u8; 8];
        r.read_exact(&mut b8)?;
        let n = u64::from_le_bytes(b8) as usize;
        r.read_exact(&mut b8)?;
        let half_width = f64::from_le_bytes(b8);
        let grid = Grid::new(n, half_width)?;
        let mut values = Array2::zeros((n, n));
        for v in values.iter_mut() {
            r.read_exact(&mut b8)?;
            *v = f64::from_le_bytes(b8);
        }
        Ok(Self { grid, values })
    }

    /// Plot-ready CSV rows (xi1, xi2, value).
    pub fn write_csv(&self, out: &mut impl Write) -> Result<()> {
        writeln!(out, "xi1,xi2,value")?;
        let g = self.grid;
        for i in 0..g.n() {
            for j in 0..g.n() {
                writeln!(out, "{:.17e},{:.17e},{:.17e}", g.coord(i), g.coord(j), self.values[[i, j]])?;
            }
        }
        Ok(())
    }
}

/// Fourier coefficients of a real field, stored at FFT-ordered wavenumbers.
#[derive(Debug, Clone)]
pub struct SpectralField {
    grid: Grid,
    pub coeffs: Array2<Complex<f64>>,
}

impl SpectralField {
    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn zeros(grid: Grid) -> Self {
        let n = grid.n();
        Self { grid, coeffs: Array2::default((n, n)) }
    }

    /// Inverse transform back to physical space.
    pub fn backward(&self) -> RealField {
        let n = self.grid.n();
        let h = self.grid.spacing();
        let mut buf: Vec<Complex<f64>> = Vec::with_capacity(n * n);
        for k1 in 0..n {
            for k2 in 0..n {
                let sign = if (k1 + k2) % 2 == 0 { 1.0 } else { -1.0 };
                buf.push(self.coeffs[[k1, k2]] * sign);
            }
        }
        fft2(&mut buf, n, true);
        let norm = 1.0 / (h * h * (n * n) as f64);
        let values = Array2::from_shape_fn((n, n), |(i, j)| buf[i * n + j].re * norm);
        RealField { grid: self.grid, values }
    }

    /// Coefficient at signed wavenumber index (k1, k2).
    pub fn at(&self, k1: i64, k2: i64) -> Complex<f64> {
        let n = self.grid.n() as i64;
        let m1 = k1.rem_euclid(n) as usize;
        let m2 = k2.rem_euclid(n) as usize;
        self.coeffs[[m1, m2]]
    }

    /// Multiply by i·p along the chosen axis.
    pub fn derivative(&self, axis: Axis) -> SpectralField {
        let n = self.grid.n();
        let mut out = self.clone();
        for k1 in 0..n {
            let p1 = self.grid.wavenumber(k1);
            for k2 in 0..n {
                let p = match axis {
                    Axis::Xi1 => p1,
                    Axis::Xi2 => self.grid.wavenumber(k2),
                };
                out.coeffs[[k1, k2]] *= Complex::new(0.0, p);
            }
        }
        out
    }

    /// Multiply by -|p|².
    pub fn laplacian(&self) -> SpectralField {
        let n = self.grid.n();
        let mut out = self.clone();
        for k1 in 0..n {
            let p1 = self.grid.wavenumber(k1);
            for k2 in 0..n {
                let p2 = self.grid.wavenumber(k2);
                out.coeffs[[k1, k2]] *= -(p1 * p1 + p2 * p2);
            }
        }
        out
    }

    /// 2/3-rule truncation: zero all modes with |k| > n/3 on either axis.
    pub fn dealias(&self) -> SpectralField {
        let n = self.grid.n();
        let cut = (n / 3) as i64;
        let mut out = self.clone();
        for k1 in 0..n {
            let s1 = self.grid.wave_index(k1);
            for k2 in 0..n {
                let s2 = self.grid.wave_index(k2);
                if s1.abs() > cut || s2.abs() > cut {
                    out.coeffs[[k1, k2]] = Complex::default();
                }
            }
        }
        out
    }

    /// Spectral energy Σ|f̂|², used by the Parseval check.
    pub fn energy(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm_sqr()).sum()
    }

    pub fn scale(&self, c: f64) -> SpectralField {
        SpectralField { grid: self.grid, coeffs: self.coeffs.mapv(|z| z * c) }
    }

    pub fn add_scaled(&self, c: f64, other: &SpectralField) -> SpectralField {
        debug_assert_eq!(self.grid, other.grid);
        SpectralField {
            grid: self.grid,
            coeffs: Array2::from_shape_fn(self.coeffs.dim(), |idx| {
                self.coeffs[idx] + other.coeffs[idx] * c
            }),
        }
    }
}

/// Two-component velocity field sampled on a grid.
#[derive(Debug, Clone)]
pub struct VectorField {
    grid: Grid,
    pub v1: Array2<f64>,
    pub v2: Array2<f64>,
}

impl VectorField {
    pub fn zeros(grid: Grid) -> Self {
        let n = grid.n();
        Self { grid, v1: Array2::zeros((n, n)), v2: Array2::zeros((n, n)) }
    }

    pub fn from_fn(grid: Grid, f: impl Fn(f64, f64) -> (f64, f64)) -> Self {
        let n = grid.n();
        let mut v1 = Array2::zeros((n, n));
        let mut v2 = Array2::zeros((n, n));
        for i in 0..n {
            for j in 0..n {
                let (a, b) = f(grid.coord(i), grid.coord(j));
                v1[[i, j]] = a;
                v2[[i, j]] = b;
            }
        }
        Self { grid, v1, v2 }
    }

    pub fn from_components(c1: RealField, c2: RealField) -> Result<Self> {
        if c1.grid() != c2.grid() {
            return Err(Error::GridMismatch);
        }
        Ok(Self { grid: c1.grid(), v1: c1.values, v2: c2.values })
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn component(&self, axis: Axis) -> RealField {
        let values = match axis {
            Axis::Xi1 => self.v1.clone(),
            Axis::Xi2 => self.v2.clone(),
        };
        RealField { grid: self.grid, values }
    }

    /// Pointwise modulus |v|.
    pub fn magnitude(&self) -> RealField {
        let values = Array2::from_shape_fn(self.v1.dim(), |idx| {
            (self.v1[idx] * self.v1[idx] + self.v2[idx] * self.v2[idx]).sqrt()
        });
        RealField { grid: self.grid, values }
    }

    /// |v|_q of the pointwise modulus (the paper's convention for vector norms).
    pub fn lp_norm(&self, q: f64) -> Result<f64> {
        self.magnitude().lp_norm(q)
    }

    /// Spectral divergence ∂₁v₁ + ∂₂v₂.
    pub fn divergence(&self) -> RealField {
        let d1 = self.component(Axis::Xi1).derivative(Axis::Xi1);
        let d2 = self.component(Axis::Xi2).derivative(Axis::Xi2);
        d1.add(&d2)
    }

    /// Spectral curl ∂₁v₂ - ∂₂v₁.
    pub fn rot(&self) -> RealField {
        let d1 = self.component(Axis::Xi2).derivative(Axis::Xi1);
        let d2 = self.component(Axis::Xi1).derivative(Axis::Xi2);
        d1.sub(&d2)
    }

    /// L² norm of the gradient tensor, (Σ_{ij} |∂_i v_j|₂²)^{1/2}.
    pub fn gradient_l2(&self) -> f64 {
        let mut sum = 0.0;
        for comp in [Axis::Xi1, Axis::Xi2] {
            let c = self.component(comp);
            for ax in [Axis::Xi1, Axis::Xi2] {
                let d = c.derivative(ax);
                let nrm = d.l2_norm();
                sum += nrm * nrm;
            }
        }
        sum.sqrt()
    }

    pub fn add_scaled(&self, c: f64, other: &VectorField) -> VectorField {
        debug_assert_eq!(self.grid, other.grid);
        VectorField {
            grid: self.grid,
            v1: &self.v1 + &(&other.v1 * c),
            v2: &self.v2 + &(&other.v2 * c),
        }
    }

    pub fn scale(&self, c: f64) -> VectorField {
        VectorField { grid: self.grid, v1: &self.v1 * c, v2: &self.v2 * c }
    }
}

/// CSV reader for fields written by [`RealField::write_csv`].
#[allow(dead_code)]
pub fn read_field_csv(path: &Path) -> Result<Vec<(f64, f64, f64)>> {
    let r = BufReader::new(std::fs::File::open(path)?);
    let mut rows = Vec::new();
    for (i, line) in r.lines().enumerate() {
        let line = line?;
        if i == 0 && line.starts_with("xi1") {
            continue;
        }
        let parts: Vec<&str> = line.split(',').collect();
        if parts.len() != 3 {
            return Err(Error::Parse(format!("expected 3 columns, got {}", parts.len())));
        }
        let x: f64 = parts[0].trim().parse().map_err(|e| Error::Parse(format!("{e}")))?;
        let y: f64 = parts[1].trim().parse().map_err(|e| Error::Parse(format!("{e}")))?;
        let v: f64 = parts[2].trim().parse().map_err(|e| Error::Parse(format!("{e}")))?;
        rows.push((x, y, v));
    }
    Ok(rows)
}
