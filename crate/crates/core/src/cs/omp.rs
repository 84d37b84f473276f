//! Preamble detection by orthogonal matching pursuit.
//!
//! Each iteration picks the column most correlated with the residual, appends
//! it to an orthonormal basis (modified Gram-Schmidt, two passes) and projects
//! it out of the residual, which keeps the residual equal to the
//! least-squares misfit on the current support. After `K_b` iterations the
//! gains come from back substitution in the triangular factor.

use std::ops::{Add, Mul, Sub};

use num_complex::Complex64;

use crate::cs::sensing::SensingMatrix;
use crate::error::{invalid, Error, Result};
use crate::tx::channel::Samples;

/// One detected preamble.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Detection {
    pub index: u64,
    pub gain: Complex64,
}

/// `K_b` detections with distinct indices, by decreasing `|gain|`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct CsDetection {
    pub entries: Vec<Detection>,
}

impl CsDetection {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn contains(&self, index: u64) -> bool {
        self.entries.iter().any(|d| d.index == index)
    }

    pub fn gain_of(&self, index: u64) -> Option<Complex64> {
        self.entries.iter().find(|d| d.index == index).map(|d| d.gain)
    }
}

trait Scalar: Copy + Add<Output = Self> + Sub<Output = Self> + Mul<Output = Self> {
    const ZERO: Self;
    fn conj(self) -> Self;
    fn abs2(self) -> f64;
    fn scale(self, s: f64) -> Self;
    fn from_c(c: Complex64) -> Self;
    fn to_c(self) -> Complex64;
    fn div(self, other: Self) -> Self;
}

impl Scalar for f64 {
    const ZERO: Self = 0.0;
    fn conj(self) -> Self {
        self
    }
    fn abs2(self) -> f64 {
        self * self
    }
    fn scale(self, s: f64) -> Self {
        self * s
    }
    fn from_c(c: Complex64) -> Self {
        c.re
    }
    fn to_c(self) -> Complex64 {
        Complex64::new(self, 0.0)
    }
    fn div(self, other: Self) -> Self {
        self / other
    }
}

impl Scalar for Complex64 {
    const ZERO: Self = Complex64::new(0.0, 0.0);
    fn conj(self) -> Self {
        Complex64::conj(&self)
    }
    fn abs2(self) -> f64 {
        self.norm_sqr()
    }
    fn scale(self, s: f64) -> Self {
        self * s
    }
    fn from_c(c: Complex64) -> Self {
        c
    }
    fn to_c(self) -> Complex64 {
        self
    }
    fn div(self, other: Self) -> Self {
        self / other
    }
}

/// `sum conj(a_i) b_i`.
fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).fold(T::ZERO, |acc, (&x, &y)| acc + x.conj() * y)
}

fn axpy<T: Scalar>(alpha: T, x: &[T], y: &mut [T]) {
    for (yi, &xi) in y.iter_mut().zip(x) {
        *yi = *yi - alpha * xi;
    }
}

fn to_samples<T: Scalar>(v: &[T], complex: bool) -> Samples {
    if complex {
        Samples::Complex(v.iter().map(|x| x.to_c()).collect())
    } else {
        Samples::Real(v.iter().map(|x| x.to_c().re).collect())
    }
}

fn omp<T: Scalar>(y: &[T], sensing: &SensingMatrix, k_b: usize, complex: bool) -> Result<CsDetection> {
    let len = y.len();
    let mut residual = y.to_vec();
    let mut basis: Vec<Vec<T>> = Vec::with_capacity(k_b);
    // column-major upper triangle: r_cols[j][i] = <q_i, a_j>
    let mut r_cols: Vec<Vec<T>> = Vec::with_capacity(k_b);
    let mut qty: Vec<T> = Vec::with_capacity(k_b);
    let mut support: Vec<usize> = Vec::with_capacity(k_b);
    let mut selected = vec![false; sensing.num_columns()];
    let mut degenerate: Vec<usize> = Vec::new();

    while support.len() + degenerate.len() < k_b {
        let corr = sensing.correlate(&to_samples(&residual, complex))?;
        let mut best = None;
        let mut best_mag = -1.0;
        for (j, c) in corr.iter().enumerate() {
            if !selected[j] && c.norm_sqr() > best_mag {
                best_mag = c.norm_sqr();
                best = Some(j);
            }
        }
        let j = best.expect("K_b <= M_p leaves an unselected column");
        selected[j] = true;

        let mut v = vec![T::ZERO; len];
        sensing.for_each_entry(j, |i, x| v[i] = T::from_c(x));
        let col_norm2: f64 = v.iter().map(|x| x.abs2()).sum();
        let mut coeffs = vec![T::ZERO; basis.len()];
        for _ in 0..2 {
            for (i, q) in basis.iter().enumerate() {
                let c = dot(q, &v);
                axpy(c, q, &mut v);
                coeffs[i] = coeffs[i] + c;
            }
        }
        let norm = v.iter().map(|x| x.abs2()).sum::<f64>().sqrt();
        if norm * norm <= 1e-20 * col_norm2.max(f64::MIN_POSITIVE) {
            // column in the span of the support: no new direction, zero gain
            degenerate.push(j);
            continue;
        }
        for x in v.iter_mut() {
            *x = x.scale(1.0 / norm);
        }
        coeffs.push(T::from_c(Complex64::new(norm, 0.0)));
        qty.push(dot(&v, y));
        let proj = dot(&v, &residual);
        axpy(proj, &v, &mut residual);
        basis.push(v);
        r_cols.push(coeffs);
        support.push(j);
    }

    // back substitution R g = Q^H y
    let k = support.len();
    let mut gains = vec![T::ZERO; k];
    for i in (0..k).rev() {
        let mut acc = qty[i];
        for (jcol, g) in gains.iter().enumerate().skip(i + 1) {
            acc = acc - r_cols[jcol][i] * *g;
        }
        gains[i] = acc.div(r_cols[i][i]);
    }
    let mut entries: Vec<Detection> = support
        .iter()
        .zip(&gains)
        .map(|(&j, g)| Detection {
            index: j as u64,
            gain: g.to_c(),
        })
        .chain(degenerate.iter().map(|&j| Detection {
            index: j as u64,
            gain: Complex64::new(0.0, 0.0),
        }))
        .collect();
    entries.sort_by(|a, b| {
        b.gain
            .norm_sqr()
            .total_cmp(&a.gain.norm_sqr())
            .then(a.index.cmp(&b.index))
    });
    Ok(CsDetection { entries })
}

/// Runs `K_b` OMP iterations on the preamble observation.
///
/// Always returns exactly `K_b` distinct indices; gains are the final
/// least-squares coefficients.
pub fn cs_detect(y_p: &Samples, sensing: &SensingMatrix, k_b: usize) -> Result<CsDetection> {
    if k_b > sensing.num_columns() {
        return Err(invalid(format!(
            "K_b = {k_b} exceeds the {} preamble columns",
            sensing.num_columns()
        )));
    }
    if y_p.len() != sensing.measurement_len() {
        return Err(Error::LengthMismatch {
            expected: sensing.measurement_len(),
            actual: y_p.len(),
        });
    }
    match y_p {
        Samples::Real(v) if !sensing.mode().is_complex() => omp(v, sensing, k_b, false),
        Samples::Complex(v) if sensing.mode().is_complex() => omp(v, sensing, k_b, true),
        _ => Err(invalid("observation and sensing matrix disagree on real/complex")),
    }
}

/// Returns column `w_p` of the sensing matrix.
pub fn cs_encode(w_p: u64, sensing: &SensingMatrix) -> Result<Samples> {
    sensing.column(usize::try_from(w_p).unwrap_or(usize::MAX))
}
