//! Axis linearizations and their spectral structure.
//!
//! Every member of the constraint class fixes each coordinate axis, so the
//! linearization at `alpha * e_i` is the matrix `L = 2 alpha B(e_i, .)`. Its
//! row `i` vanishes, `L e_i = 0` (the radial direction is always neutral),
//! the trace is zero entry-by-entry, and the principal minor obtained by
//! deleting row and column `i` is a hollow matrix. Hyperbolicity of the axis
//! means: exactly one eigenvalue on the imaginary axis (the structural zero)
//! and at least one eigenvalue with positive real part.

pub mod eigen;

use alloc::vec::Vec;

use num_complex::Complex64;

use crate::error::{CoreError, Result};
use crate::math;
use crate::matrix::Mat;
use crate::tensor::CoefficientTensor;

pub use eigen::{eigen_decompose, spectrum, EigenDecomposition};

/// Default relative tolerance for calling an eigenvalue "center".
pub const CENTER_TOL_REL: f64 = 1e-7;

/// Linearization `L = 2 alpha B(e_axis, .)`, i.e. `L[k][j] = 2 alpha b^k_{axis,j}`.
pub fn linearization(b: &CoefficientTensor, axis: usize, alpha: f64) -> Result<Mat> {
    let d = b.dim();
    if axis >= d {
        return Err(CoreError::IndexError { index: axis, d });
    }
    Ok(Mat::from_fn(d, d, |k, j| 2.0 * alpha * b.get(k, axis, j)))
}

/// Eigenvalue class relative to the imaginary axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpectralClass {
    Stable,
    Unstable,
    Center,
}

pub fn classify(re: f64, tol_center: f64) -> SpectralClass {
    if math::abs(re) <= tol_center {
        SpectralClass::Center
    } else if re < 0.0 {
        SpectralClass::Stable
    } else {
        SpectralClass::Unstable
    }
}

/// Per-axis spectral counts.
#[derive(Debug, Clone)]
pub struct AxisSpectrum {
    pub axis: usize,
    pub eigenvalues: Vec<Complex64>,
    pub n_stable: usize,
    pub n_unstable: usize,
    pub n_center: usize,
    /// Smallest `|Re lambda|` over the non-center eigenvalues (0 if none).
    pub margin: f64,
    /// The center tolerance actually used (absolute).
    pub tol_center: f64,
}

/// Hyperbolicity verdict over all axes.
#[derive(Debug, Clone)]
pub struct HyperbolicityReport {
    pub axes: Vec<AxisSpectrum>,
    /// Pass iff every axis has exactly one center eigenvalue and at least
    /// one unstable eigenvalue.
    pub verdict: bool,
}

impl HyperbolicityReport {
    pub fn min_margin(&self) -> f64 {
        self.axes.iter().map(|a| a.margin).fold(f64::INFINITY, f64::min)
    }
}

fn axis_spectrum(
    b: &CoefficientTensor,
    axis: usize,
    alpha: f64,
    tol_center_rel: f64,
) -> Result<AxisSpectrum> {
    let l = linearization(b, axis, alpha)?;
    let tol_center = tol_center_rel * l.frobenius_norm();
    let eigenvalues = spectrum(&l)?;
    let mut n_stable = 0;
    let mut n_unstable = 0;
    let mut n_center = 0;
    let mut margin = f64::INFINITY;
    for ev in &eigenvalues {
        match classify(ev.re, tol_center) {
            SpectralClass::Stable => n_stable += 1,
            SpectralClass::Unstable => n_unstable += 1,
            SpectralClass::Center => n_center += 1,
        }
        if math::abs(ev.re) > tol_center {
            margin = margin.min(math::abs(ev.re));
        }
    }
    if !margin.is_finite() {
        margin = 0.0;
    }
    Ok(AxisSpectrum { axis, eigenvalues, n_stable, n_unstable, n_center, margin, tol_center })
}

/// Classifies the spectrum of every axis linearization at radius `alpha`.
///
/// `tol_center`, when given, is a relative tolerance on `|Re lambda|` (times
/// the Frobenius norm of `L`); the default is [`CENTER_TOL_REL`].
pub fn hyperbolicity_report(
    b: &CoefficientTensor,
    alpha: f64,
    tol_center: Option<f64>,
) -> Result<HyperbolicityReport> {
    let rel = tol_center.unwrap_or(CENTER_TOL_REL);
    let mut axes = Vec::with_capacity(b.dim());
    for axis in 0..b.dim() {
        axes.push(axis_spectrum(b, axis, alpha, rel)?);
    }
    let verdict = axes.iter().all(|a| a.n_center == 1 && a.n_unstable >= 1);
    Ok(HyperbolicityReport { axes, verdict })
}

/// Stable/unstable/center decomposition of an axis linearization.
#[derive(Debug, Clone)]
pub struct SpectralSplit {
    pub axis: usize,
    pub alpha: f64,
    pub eigenvalues: Vec<Complex64>,
    pub basis_s: Mat,
    pub basis_u: Mat,
    pub basis_c: Mat,
    pub proj_s: Mat,
    pub proj_u: Mat,
    pub proj_c: Mat,
    pub margin: f64,
}

impl SpectralSplit {
    pub fn dim_stable(&self) -> usize {
        self.basis_s.cols()
    }
    pub fn dim_unstable(&self) -> usize {
        self.basis_u.cols()
    }
    pub fn dim_center(&self) -> usize {
        self.basis_c.cols()
    }
}

/// Builds the invariant-subspace split for a hyperbolic axis (at `alpha = 1`).
///
/// Complex pairs contribute their packed (real, imaginary) columns, so all
/// bases are real. Projectors are assembled from the inverse of the full
/// basis matrix. Fails with [`CoreError::NotHyperbolic`] when the axis does
/// not have exactly one center eigenvalue.
pub fn spectral_split(b: &CoefficientTensor, axis: usize) -> Result<SpectralSplit> {
    let alpha = 1.0;
    let d = b.dim();
    let l = linearization(b, axis, alpha)?;
    let tol_center = CENTER_TOL_REL * l.frobenius_norm();
    let dec = eigen_decompose(&l, 100 * d)?;

    let mut stable_cols: Vec<Vec<f64>> = Vec::new();
    let mut unstable_cols: Vec<Vec<f64>> = Vec::new();
    let mut center_cols: Vec<Vec<f64>> = Vec::new();
    let mut n_center = 0usize;
    let mut margin = f64::INFINITY;

    let mut j = 0;
    while j < d {
        let re = dec.re[j];
        let pair = dec.im[j] != 0.0;
        let class = classify(re, tol_center);
        if math::abs(re) > tol_center {
            margin = margin.min(math::abs(re));
        }
        let mut push = |cols: &mut Vec<Vec<f64>>| {
            cols.push(normalized(dec.vectors.column(j)));
            if pair {
                cols.push(normalized(dec.vectors.column(j + 1)));
            }
        };
        match class {
            SpectralClass::Stable => push(&mut stable_cols),
            SpectralClass::Unstable => push(&mut unstable_cols),
            SpectralClass::Center => {
                n_center += if pair { 2 } else { 1 };
                push(&mut center_cols);
            }
        }
        j += if pair { 2 } else { 1 };
    }

    if n_center != 1 {
        return Err(CoreError::NotHyperbolic { axis, n_center });
    }
    if !margin.is_finite() {
        margin = 0.0;
    }

    let n_s = stable_cols.len();
    let n_u = unstable_cols.len();
    let mut all = stable_cols.clone();
    all.extend(unstable_cols.iter().cloned());
    all.extend(center_cols.iter().cloned());
    let q = Mat::from_columns(&all);
    let qinv = q.inverse().ok_or(CoreError::NotHyperbolic { axis, n_center })?;

    let proj_block = |from: usize, to: usize| -> Mat {
        let mut p = Mat::zeros(d, d);
        for col in from..to {
            for i in 0..d {
                let qi = q[(i, col)];
                if qi == 0.0 {
                    continue;
                }
                for jj in 0..d {
                    p[(i, jj)] += qi * qinv[(col, jj)];
                }
            }
        }
        p
    };

    Ok(SpectralSplit {
        axis,
        alpha,
        eigenvalues: dec.sorted_eigenvalues(),
        basis_s: Mat::from_columns(&stable_cols),
        basis_u: Mat::from_columns(&unstable_cols),
        basis_c: Mat::from_columns(&center_cols),
        proj_s: proj_block(0, n_s),
        proj_u: proj_block(n_s, n_s + n_u),
        proj_c: proj_block(n_s + n_u, d),
        margin,
    })
}

fn normalized(mut v: Vec<f64>) -> Vec<f64> {
    let n = crate::matrix::norm(&v);
    if n > 0.0 {
        for x in v.iter_mut() {
            *x /= n;
        }
    }
    v
}
