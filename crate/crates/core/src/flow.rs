//! The conservative flow `dx/dt = B(x, x)`: integration, derivative
//! polynomials, and kernel-passthrough scans.
//!
//! Solutions conserve `|x|^2` exactly; the fixed-step RK4 integrator keeps
//! the drift measurable and small over the short horizons used here. The
//! `j`-th time derivative of a trajectory at `t = 0` is a homogeneous
//! polynomial `P_{j+1}` of degree `j+1` in the initial state, computed by a
//! Leibniz recursion on the bilinear field. Scanning the smallest `j` whose
//! derivative sticks out of the undamped subspace quantifies how fast
//! kernel-bound trajectories pass through to the damped directions.

use alloc::vec::Vec;

use crate::error::{CoreError, Result};
use crate::math;
use crate::matrix::norm;
use crate::rng::{self, Stream};
use crate::tensor::CoefficientTensor;

/// The undamped subspace `span{e_0 .. e_{J-1}}` (0-based indices).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct KernelSpec {
    d: usize,
    j: usize,
}

impl KernelSpec {
    /// `1 <= j < d`.
    pub fn new(d: usize, j: usize) -> Result<Self> {
        if j == 0 || j >= d {
            return Err(CoreError::InvalidDimension {
                d: j,
                requirement: "kernel dimension must satisfy 1 <= J < d",
            });
        }
        Ok(KernelSpec { d, j })
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    /// Kernel dimension `J`.
    pub fn kernel_dim(&self) -> usize {
        self.j
    }

    pub fn contains_index(&self, m: usize) -> bool {
        m < self.j
    }

    /// Projection onto the kernel (coordinates `>= J` zeroed).
    pub fn proj_k(&self, x: &[f64]) -> Vec<f64> {
        let mut y = x.to_vec();
        for v in y.iter_mut().skip(self.j) {
            *v = 0.0;
        }
        y
    }

    /// Projection onto the damped complement.
    pub fn proj_k_perp(&self, x: &[f64]) -> Vec<f64> {
        let mut y = x.to_vec();
        for v in y.iter_mut().take(self.j) {
            *v = 0.0;
        }
        y
    }

    /// `|Pi_K^perp x|` without allocating.
    pub fn perp_norm(&self, x: &[f64]) -> f64 {
        math::sqrt(x.iter().skip(self.j).map(|v| v * v).sum())
    }
}

/// A fixed-step trajectory, states at `t = n * dt`.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub dt: f64,
    pub states: Vec<Vec<f64>>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn final_state(&self) -> &[f64] {
        self.states.last().expect("trajectory always holds the initial state")
    }

    pub fn time(&self, n: usize) -> f64 {
        n as f64 * self.dt
    }
}

/// Step-size heuristic keeping the relative displacement per step small.
pub fn default_flow_dt(b: &CoefficientTensor, x0: &[f64]) -> f64 {
    let scale = 1.0 + b.max_abs() * norm(x0);
    (0.1 / scale).min(1e-2)
}

/// Classical RK4 on `dx/dt = B(x,x)` with `round(t_final/dt)` steps.
pub fn integrate(b: &CoefficientTensor, x0: &[f64], t_final: f64, dt: f64) -> Result<Trajectory> {
    let d = b.dim();
    if x0.len() != d {
        return Err(CoreError::DimensionError { expected: d, got: x0.len() });
    }
    assert!(dt > 0.0 && t_final > 0.0, "integration needs positive dt and horizon");
    let steps = (math::round(t_final / dt) as usize).max(1);
    let mut states = Vec::with_capacity(steps + 1);
    states.push(x0.to_vec());
    let mut x = x0.to_vec();
    let mut k1 = vec![0.0; d];
    let mut k2 = vec![0.0; d];
    let mut k3 = vec![0.0; d];
    let mut k4 = vec![0.0; d];
    let mut tmp = vec![0.0; d];
    for step in 0..steps {
        b.evaluate_into(&x, &x, &mut k1);
        for i in 0..d {
            tmp[i] = x[i] + 0.5 * dt * k1[i];
        }
        b.evaluate_into(&tmp, &tmp, &mut k2);
        for i in 0..d {
            tmp[i] = x[i] + 0.5 * dt * k2[i];
        }
        b.evaluate_into(&tmp, &tmp, &mut k3);
        for i in 0..d {
            tmp[i] = x[i] + dt * k3[i];
        }
        b.evaluate_into(&tmp, &tmp, &mut k4);
        for i in 0..d {
            x[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        if !x.iter().all(|v| v.is_finite()) {
            return Err(CoreError::BlowupDetected { step });
        }
        states.push(x.clone());
    }
    Ok(Trajectory { dt, states })
}

/// Derivative polynomials `[P_1, ..., P_{j_max+1}]` at `x`.
///
/// `P_1 = x` and `P_{j+1} = sum_{m=0}^{j-1} C(j-1, m) B(P_{m+1}, P_{j-m})`,
/// the Leibniz expansion of `d^j/dt^j x(t)` at `t = 0`. `P_{j+1}` is
/// homogeneous of degree `j+1` in `x` and degree `j` in the coefficients.
pub fn derivative_polynomials(
    b: &CoefficientTensor,
    x: &[f64],
    j_max: usize,
) -> Result<Vec<Vec<f64>>> {
    let d = b.dim();
    if x.len() != d {
        return Err(CoreError::DimensionError { expected: d, got: x.len() });
    }
    assert!(j_max >= 1, "j_max must be at least 1");
    let mut polys: Vec<Vec<f64>> = Vec::with_capacity(j_max + 1);
    polys.push(x.to_vec());
    let mut term = vec![0.0; d];
    for j in 1..=j_max {
        let mut next = vec![0.0; d];
        let mut binom = 1.0f64;
        for m in 0..j {
            // binom = C(j-1, m)
            b.evaluate_into(&polys[m], &polys[j - 1 - m], &mut term);
            for i in 0..d {
                next[i] += binom * term[i];
            }
            binom = binom * (j - 1 - m) as f64 / (m + 1) as f64;
        }
        polys.push(next);
    }
    Ok(polys)
}

/// Smallest `j >= 1` whose derivative escapes the kernel, with its margin.
///
/// Returns `None` when every `P_{j+1}` up to `j_max` stays inside `K` below
/// the degree-scaled zero threshold `1e-12 * max|b|^j * |x|^{j+1}`.
pub fn kernel_escape(
    b: &CoefficientTensor,
    kernel: &KernelSpec,
    x: &[f64],
    j_max: usize,
) -> Result<Option<(usize, f64)>> {
    let polys = derivative_polynomials(b, x, j_max)?;
    let bmax = b.max_abs();
    let xnorm = norm(x);
    let mut scale = 1.0; // max|b|^j * |x|^j, built incrementally
    for j in 1..=j_max {
        scale *= bmax * xnorm;
        let threshold = 1e-12 * scale * xnorm;
        let perp = kernel.perp_norm(&polys[j]);
        if perp > threshold {
            return Ok(Some((j, perp)));
        }
    }
    Ok(None)
}

/// One scanned point of the escape scan.
#[derive(Debug, Clone)]
pub struct EscapePoint {
    pub x: Vec<f64>,
    pub j_min: Option<usize>,
    pub margin: f64,
}

/// Aggregate of a kernel-shell escape scan.
#[derive(Debug, Clone)]
pub struct EscapeScan {
    pub delta: f64,
    pub samples: Vec<EscapePoint>,
    /// Largest escape order observed (over points that did escape).
    pub j_delta: Option<usize>,
    /// Smallest escape margin observed (over points that did escape).
    pub c_delta: f64,
    /// Points where no derivative up to `j_max` left the kernel.
    pub n_unresolved: usize,
}

/// Distance from `x` to the union of coordinate axes.
pub fn dist_to_axes(x: &[f64]) -> f64 {
    let n2: f64 = x.iter().map(|v| v * v).sum();
    let max_sq = x.iter().map(|v| v * v).fold(0.0, f64::max);
    math::sqrt((n2 - max_sq).max(0.0))
}

/// Samples the compact shell `{x in K : 1/2 <= |x| <= 3/2,
/// dist(x, axes) >= delta}` by rejection and records the escape order and
/// margin of every point.
pub fn kdelta_scan(
    b: &CoefficientTensor,
    kernel: &KernelSpec,
    delta: f64,
    n_samples: usize,
    j_max: usize,
    rng: &mut Stream,
) -> Result<EscapeScan> {
    const MAX_ATTEMPTS: usize = 1_000_000;
    assert!(delta > 0.0, "delta must be positive");
    if delta >= 0.5 {
        // dist to the axes cannot exceed |x| in a 1-d kernel, and the pre
        // of the scan caps delta below the inner shell radius anyway
        return Err(CoreError::SamplingError { attempts: 0 });
    }
    let d = kernel.dim();
    let jdim = kernel.kernel_dim();
    let mut samples = Vec::with_capacity(n_samples);
    let mut attempts = 0usize;
    while samples.len() < n_samples {
        attempts += 1;
        if attempts > MAX_ATTEMPTS {
            return Err(CoreError::SamplingError { attempts: MAX_ATTEMPTS });
        }
        // uniform direction in the kernel, radius uniform in shell volume
        let mut x = vec![0.0; d];
        let mut dir_norm2 = 0.0;
        for slot in x.iter_mut().take(jdim) {
            let g = rng::normal(rng);
            *slot = g;
            dir_norm2 += g * g;
        }
        if dir_norm2 == 0.0 {
            continue;
        }
        let dir_norm = math::sqrt(dir_norm2);
        let u = rng::uniform(rng, 0.0, 1.0);
        let lo = math::powi(0.5, jdim as i32);
        let hi = math::powi(1.5, jdim as i32);
        let radius = math::powf(lo + u * (hi - lo), 1.0 / jdim as f64);
        for slot in x.iter_mut().take(jdim) {
            *slot *= radius / dir_norm;
        }
        if dist_to_axes(&x) < delta {
            continue;
        }
        let escape = kernel_escape(b, kernel, &x, j_max)?;
        let (j_min, margin) = match escape {
            Some((j, m)) => (Some(j), m),
            None => (None, 0.0),
        };
        samples.push(EscapePoint { x, j_min, margin });
    }
    let j_delta = samples.iter().filter_map(|s| s.j_min).max();
    let c_delta = samples
        .iter()
        .filter(|s| s.j_min.is_some())
        .map(|s| s.margin)
        .fold(f64::INFINITY, f64::min);
    let c_delta = if c_delta.is_finite() { c_delta } else { 0.0 };
    let n_unresolved = samples.iter().filter(|s| s.j_min.is_none()).count();
    Ok(EscapeScan { delta, samples, j_delta, c_delta, n_unresolved })
}

/// The two routes to the `2 x 2` transversality determinant for the index
/// triple `(k, m, p)`: the closed form `4 (x^k)^2 (xdot^p x^m - xdot^m x^p)`
/// and the explicit matrix determinant.
pub fn transversality_det_d(
    b: &CoefficientTensor,
    x: &[f64],
    k: usize,
    m: usize,
    p: usize,
) -> Result<(f64, f64)> {
    let d = b.dim();
    if x.len() != d {
        return Err(CoreError::DimensionError { expected: d, got: x.len() });
    }
    for idx in [k, m, p] {
        if idx >= d {
            return Err(CoreError::IndexError { index: idx, d });
        }
    }
    if k == m || k == p || m == p {
        return Err(CoreError::IndexError { index: p, d });
    }
    let xdot = b.evaluate(x, x)?;
    let det_formula = 4.0 * x[k] * x[k] * (xdot[p] * x[m] - xdot[m] * x[p]);
    let a11 = 2.0 * x[k] * x[m];
    let a12 = 2.0 * x[k] * x[p];
    let a21 = 2.0 * xdot[k] * x[m] + 2.0 * xdot[m] * x[k];
    let a22 = 2.0 * xdot[k] * x[p] + 2.0 * xdot[p] * x[k];
    let det_matrix = a11 * a22 - a12 * a21;
    Ok((det_formula, det_matrix))
}
