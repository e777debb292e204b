//! Tamed Euler–Maruyama simulation of the partially damped, degenerately
//! forced SDE and its high-energy rescaling.
//!
//! The drift `B(x,x) - eps A x` is quadratic, so a plain explicit scheme
//! diverges with positive probability; taming the drift by
//! `1 / (1 + dt |drift|)` keeps the scheme explicit, preserves weak order
//! one, and rules out blow-up. The plain equation is the `eps = 1` case of
//! the rescaled one (drift `B - eps A x`, noise amplitude `eps^{3/2}`).
//!
//! Determinism contract: every path is a pure function of its seed and
//! parameters. Noise uses one counter-derived stream per coordinate, so
//! coordinates with zero amplitude never consume randomness and ensembles
//! reproduce bitwise under any scheduling.

use alloc::vec::Vec;

use crate::error::{CoreError, Result};
use crate::flow::KernelSpec;
use crate::math;
use crate::matrix::{dot, norm, Mat};
use crate::rng::{self, seed_derive};
use crate::stats::{self, KahanSum, Summary};
use crate::tensor::CoefficientTensor;

/// Damping matrix with an explicit kernel plus per-coordinate noise
/// amplitudes.
#[derive(Debug, Clone)]
pub struct DampingSpec {
    d: usize,
    j: usize,
    a: Mat,
    sigma: Vec<f64>,
}

impl DampingSpec {
    /// Validates symmetry (to 1e-14 relative), positive semidefiniteness
    /// (eigenvalues above `-1e-12 |A|`), and that `A e_m = 0` exactly for
    /// the first `j` coordinates.
    pub fn new(a: Mat, j: usize, sigma: Vec<f64>) -> Result<Self> {
        let d = a.rows();
        if a.cols() != d {
            return Err(CoreError::InvalidDamping("damping matrix must be square"));
        }
        if sigma.len() != d {
            return Err(CoreError::InvalidDamping("sigma length must match dimension"));
        }
        if j > d {
            return Err(CoreError::InvalidDamping("kernel dimension exceeds d"));
        }
        let scale = a.max_abs();
        for i in 0..d {
            for c in 0..d {
                if math::abs(a[(i, c)] - a[(c, i)]) > 1e-14 * scale {
                    return Err(CoreError::InvalidDamping("damping matrix must be symmetric"));
                }
            }
        }
        for m in 0..j {
            for i in 0..d {
                if a[(i, m)] != 0.0 || a[(m, i)] != 0.0 {
                    return Err(CoreError::InvalidDamping("kernel columns must vanish exactly"));
                }
            }
        }
        if scale > 0.0 {
            let eigs = crate::spectral::spectrum(&a)?;
            for ev in eigs {
                if ev.re < -1e-12 * scale {
                    return Err(CoreError::InvalidDamping(
                        "damping matrix must be positive semidefinite",
                    ));
                }
            }
        }
        Ok(DampingSpec { d, j, a, sigma })
    }

    /// Diagonal damping: zero on the first `j` coordinates, the given rates
    /// on the rest.
    pub fn diagonal(d: usize, j: usize, rates: &[f64], sigma: Vec<f64>) -> Result<Self> {
        if rates.len() != d - j {
            return Err(CoreError::InvalidDamping("need one rate per damped coordinate"));
        }
        let mut a = Mat::zeros(d, d);
        for (k, &r) in rates.iter().enumerate() {
            if r < 0.0 {
                return Err(CoreError::InvalidDamping("damping rates must be nonnegative"));
            }
            a[(j + k, j + k)] = r;
        }
        DampingSpec::new(a, j, sigma)
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    /// Kernel dimension `J` (`A e_m = 0` for `m < J`).
    pub fn kernel_dim(&self) -> usize {
        self.j
    }

    pub fn matrix(&self) -> &Mat {
        &self.a
    }

    pub fn sigma(&self) -> &[f64] {
        &self.sigma
    }

    pub fn n_forced(&self) -> usize {
        self.sigma.iter().filter(|s| **s != 0.0).count()
    }

    pub fn sigma_sq_sum(&self) -> f64 {
        self.sigma.iter().map(|s| s * s).sum()
    }

    /// Sum of `sigma_m^2` over kernel coordinates.
    pub fn kernel_sigma_sq_sum(&self) -> f64 {
        self.sigma.iter().take(self.j).map(|s| s * s).sum()
    }

    /// The kernel as a projection spec (needs `1 <= J < d`).
    pub fn kernel(&self) -> Result<KernelSpec> {
        KernelSpec::new(self.d, self.j)
    }

    /// `A x . x`.
    pub fn dissipation(&self, x: &[f64]) -> f64 {
        dot(&self.a.matvec(x), x)
    }
}

/// Default step size for a simulation starting at `x0`.
///
/// The drift magnitude scales like `max|b| |x|^2`, so the step must shrink
/// quadratically in the state norm or the taming denominator distorts the
/// dynamics instead of merely stabilizing it.
pub fn default_dt(b: &CoefficientTensor, x0_norm: f64) -> f64 {
    (0.1 / (1.0 + b.max_abs() * x0_norm * x0_norm)).min(1e-3)
}

/// A stored simulation path sampled at `t = n dt`.
#[derive(Debug, Clone)]
pub struct SdePath {
    pub dt: f64,
    pub states: Vec<Vec<f64>>,
    pub seed: u64,
    pub scheme: &'static str,
}

impl SdePath {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn time(&self, n: usize) -> f64 {
        n as f64 * self.dt
    }

    pub fn final_state(&self) -> &[f64] {
        self.states.last().expect("paths always contain the initial state")
    }
}

/// Per-step record passed to streaming observers.
pub struct StepRecord<'a> {
    pub step: usize,
    /// State before the step.
    pub state: &'a [f64],
    /// Raw (untamed) drift at `state`.
    pub drift: &'a [f64],
    /// Tamed drift actually applied.
    pub tamed_drift: &'a [f64],
    /// Noise increment applied (already scaled by `sqrt(dt) * amp * sigma`).
    pub noise: &'a [f64],
    /// State after the step.
    pub next: &'a [f64],
}

/// Core tamed Euler–Maruyama loop; `eps = 1` recovers the unscaled SDE.
///
/// The observer sees every one of the `round(t_final/dt)` steps. Returns
/// the final state.
pub fn run_tamed_em<F: FnMut(&StepRecord)>(
    b: &CoefficientTensor,
    damping: &DampingSpec,
    eps: f64,
    x0: &[f64],
    t_final: f64,
    dt: f64,
    seed: u64,
    mut observer: F,
) -> Result<Vec<f64>> {
    let d = b.dim();
    if x0.len() != d {
        return Err(CoreError::DimensionError { expected: d, got: x0.len() });
    }
    if damping.dim() != d {
        return Err(CoreError::DimensionError { expected: d, got: damping.dim() });
    }
    assert!(dt > 0.0, "dt must be positive");
    assert!((0.0..=1.0).contains(&eps), "eps must lie in [0, 1]");
    let steps = if t_final > 0.0 { (math::round(t_final / dt) as usize).max(1) } else { 0 };
    let amp = eps * math::sqrt(eps); // eps^{3/2}
    let sqrt_dt = math::sqrt(dt);

    // one stream per coordinate; zero-amplitude coordinates never draw
    let mut streams: Vec<Option<rng::Stream>> = damping
        .sigma()
        .iter()
        .enumerate()
        .map(|(m, &s)| {
            if s != 0.0 && amp != 0.0 {
                Some(rng::substream(seed, m as u64))
            } else {
                None
            }
        })
        .collect();

    let mut x = x0.to_vec();
    let mut drift = vec![0.0; d];
    let mut tamed = vec![0.0; d];
    let mut noise = vec![0.0; d];
    let mut next = vec![0.0; d];
    for step in 0..steps {
        b.evaluate_into(&x, &x, &mut drift);
        if eps != 0.0 {
            let ax = damping.matrix().matvec(&x);
            for i in 0..d {
                drift[i] -= eps * ax[i];
            }
        }
        let dnorm = norm(&drift);
        let tame = 1.0 / (1.0 + dt * dnorm);
        for i in 0..d {
            tamed[i] = drift[i] * tame;
        }
        for (i, stream) in streams.iter_mut().enumerate() {
            noise[i] = match stream {
                Some(s) => sqrt_dt * amp * damping.sigma()[i] * rng::normal(s),
                None => 0.0,
            };
        }
        for i in 0..d {
            next[i] = x[i] + dt * tamed[i] + noise[i];
        }
        if !next.iter().all(|v| v.is_finite()) {
            return Err(CoreError::BlowupDetected { step });
        }
        observer(&StepRecord {
            step,
            state: &x,
            drift: &drift,
            tamed_drift: &tamed,
            noise: &noise,
            next: &next,
        });
        core::mem::swap(&mut x, &mut next);
    }
    Ok(x)
}

/// Simulates the unscaled SDE (`dx = B(x,x) dt - A x dt + sigma dW`) and
/// stores the whole path.
pub fn em_simulate(
    b: &CoefficientTensor,
    damping: &DampingSpec,
    x0: &[f64],
    t_final: f64,
    dt: f64,
    seed: u64,
) -> Result<SdePath> {
    simulate_rescaled(b, damping, 1.0, x0, t_final, dt, seed)
}

/// Simulates the rescaled SDE (`dx = B dt - eps A x dt + eps^{3/2} sigma dW`).
pub fn simulate_rescaled(
    b: &CoefficientTensor,
    damping: &DampingSpec,
    eps: f64,
    x0: &[f64],
    t_final: f64,
    dt: f64,
    seed: u64,
) -> Result<SdePath> {
    let mut states = Vec::with_capacity((t_final / dt) as usize + 2);
    states.push(x0.to_vec());
    run_tamed_em(b, damping, eps, x0, t_final, dt, seed, |rec| {
        states.push(rec.next.to_vec());
    })?;
    Ok(SdePath { dt, states, seed, scheme: "tamed-euler-maruyama" })
}

/// Energy-balance residual of one path:
/// `|x_T|^2 + 2 int_0^T Ax.x dt - |x_0|^2 - T sum sigma^2`.
pub fn energy_balance_path(
    b: &CoefficientTensor,
    damping: &DampingSpec,
    x0: &[f64],
    t_final: f64,
    dt: f64,
    seed: u64,
) -> Result<f64> {
    let mut dissipation = KahanSum::new();
    let mut prev = damping.dissipation(x0);
    let xt = run_tamed_em(b, damping, 1.0, x0, t_final, dt, seed, |rec| {
        let cur = damping.dissipation(rec.next);
        dissipation.add(0.5 * (prev + cur) * dt);
        prev = cur;
    })?;
    let n0 = norm(x0);
    let nt = norm(&xt);
    let steps = math::round(t_final / dt).max(1.0);
    Ok(nt * nt + 2.0 * dissipation.value() - n0 * n0 - steps * dt * damping.sigma_sq_sum())
}

/// Monte Carlo energy-balance report.
#[derive(Debug, Clone, Copy)]
pub struct EnergyBalanceReport {
    pub residual: f64,
    pub se: f64,
    pub n_paths: usize,
    pub dt: f64,
    pub t_final: f64,
}

/// Runs `n_paths` independent paths (seeds derived from `master_seed`) and
/// reports the mean residual of the energy identity with its standard error.
pub fn energy_balance(
    b: &CoefficientTensor,
    damping: &DampingSpec,
    x0: &[f64],
    t_final: f64,
    dt: f64,
    n_paths: usize,
    master_seed: u64,
) -> Result<EnergyBalanceReport> {
    let mut residuals = Vec::with_capacity(n_paths);
    for p in 0..n_paths {
        residuals.push(energy_balance_path(
            b,
            damping,
            x0,
            t_final,
            dt,
            seed_derive(master_seed, p as u64),
        )?);
    }
    Ok(energy_balance_from_residuals(&residuals, dt, t_final))
}

/// Aggregates per-path residuals (used by parallel runners so that the
/// aggregation is identical to the sequential one).
pub fn energy_balance_from_residuals(
    residuals: &[f64],
    dt: f64,
    t_final: f64,
) -> EnergyBalanceReport {
    let s = stats::summarize(residuals);
    EnergyBalanceReport { residual: s.mean, se: s.se, n_paths: s.n, dt, t_final }
}

/// Time-averaged kernel flux of a stored path:
/// `(1/T) int <Pi_K x, Pi_K B(x,x)> dt` by the trapezoid rule.
pub fn flux_average(path: &SdePath, b: &CoefficientTensor, kernel: &KernelSpec) -> f64 {
    let d = b.dim();
    let mut bxx = vec![0.0; d];
    let values: Vec<f64> = path
        .states
        .iter()
        .map(|x| {
            b.evaluate_into(x, x, &mut bxx);
            kernel_bracket(kernel, x, &bxx)
        })
        .collect();
    let t_total = path.dt * (path.states.len().saturating_sub(1)) as f64;
    if t_total == 0.0 {
        return 0.0;
    }
    stats::trapezoid(&values, path.dt) / t_total
}

fn kernel_bracket(kernel: &KernelSpec, x: &[f64], bxx: &[f64]) -> f64 {
    let j = kernel.kernel_dim();
    x.iter().zip(bxx).take(j).map(|(a, b)| a * b).sum()
}

/// Streaming flux run with the per-path discrete energy bookkeeping on the
/// kernel component.
#[derive(Debug, Clone, Copy)]
pub struct FluxReport {
    /// `(1/T) int <Pi_K x, Pi_K B(x,x)> dt` (trapezoid on the grid).
    pub bracket_avg: f64,
    /// `(1/2) sum_{m in K} sigma_m^2`, the magnitude the bracket average
    /// attains in a statistically stationary run (its sign is negative: the
    /// balance bleeds kernel energy into the damped directions).
    pub target: f64,
    /// `sum_n 2 <Pi_K x_n, Pi_K tamed_drift_n> dt`.
    pub drift_term: f64,
    /// `sum_n 2 <Pi_K x_n, noise_n,K>`.
    pub martingale_term: f64,
    /// `sum_n |Delta_K x_n|^2` (realizes `T sum_K sigma^2` in the mean).
    pub quadratic_term: f64,
    /// `|Pi_K x_T|^2 - |Pi_K x_0|^2`; equals the sum of the three terms
    /// above up to rounding.
    pub kernel_energy_change: f64,
    pub t_final: f64,
}

pub fn flux_run(
    b: &CoefficientTensor,
    damping: &DampingSpec,
    x0: &[f64],
    t_final: f64,
    dt: f64,
    seed: u64,
) -> Result<FluxReport> {
    let kernel = damping.kernel()?;
    let d = b.dim();
    let mut bxx = vec![0.0; d];
    b.evaluate_into(x0, x0, &mut bxx);
    let mut prev_bracket = kernel_bracket(&kernel, x0, &bxx);
    let mut bracket_int = KahanSum::new();
    let mut drift_term = KahanSum::new();
    let mut martingale_term = KahanSum::new();
    let mut quadratic_term = KahanSum::new();
    let j = kernel.kernel_dim();
    let mut cur = vec![0.0; d];
    let xt = run_tamed_em(b, damping, 1.0, x0, t_final, dt, seed, |rec| {
        b.evaluate_into(rec.next, rec.next, &mut cur);
        let cur_bracket = kernel_bracket(&kernel, rec.next, &cur);
        bracket_int.add(0.5 * (prev_bracket + cur_bracket) * dt);
        prev_bracket = cur_bracket;

        let mut drift_dot = 0.0;
        let mut mart_dot = 0.0;
        let mut quad = 0.0;
        for i in 0..j {
            drift_dot += rec.state[i] * rec.tamed_drift[i];
            mart_dot += rec.state[i] * rec.noise[i];
            let delta = dt * rec.tamed_drift[i] + rec.noise[i];
            quad += delta * delta;
        }
        drift_term.add(2.0 * drift_dot * dt);
        martingale_term.add(2.0 * mart_dot);
        quadratic_term.add(quad);
    })?;
    let n0 = kernel_norm(&kernel, x0);
    let nt = kernel_norm(&kernel, &xt);
    let t_total = math::round(t_final / dt).max(1.0) * dt;
    Ok(FluxReport {
        bracket_avg: bracket_int.value() / t_total,
        target: 0.5 * damping.kernel_sigma_sq_sum(),
        drift_term: drift_term.value(),
        martingale_term: martingale_term.value(),
        quadratic_term: quadratic_term.value(),
        kernel_energy_change: nt * nt - n0 * n0,
        t_final: t_total,
    })
}

fn kernel_norm(kernel: &KernelSpec, x: &[f64]) -> f64 {
    math::sqrt(x.iter().take(kernel.kernel_dim()).map(|v| v * v).sum())
}

/// Result of one exit-time simulation.
#[derive(Debug, Clone, Copy)]
pub struct StoppingRecord {
    pub epsilon: f64,
    pub delta: f64,
    /// First grid time in the target shell, or `None` if censored.
    pub tau: Option<f64>,
    pub horizon: f64,
    pub dt: f64,
    pub seed: u64,
}

impl StoppingRecord {
    pub fn censored(&self) -> bool {
        self.tau.is_none()
    }
}

/// First grid time at which the rescaled path enters the shell
/// `{dist(x, axes) >= delta, 1/2 <= |x| <= 3/2}`; censored at the horizon.
pub fn exit_time(
    b: &CoefficientTensor,
    damping: &DampingSpec,
    eps: f64,
    delta: f64,
    x0: &[f64],
    horizon: f64,
    dt: f64,
    seed: u64,
) -> Result<StoppingRecord> {
    let in_shell = |x: &[f64]| {
        let r = norm(x);
        (0.5..=1.5).contains(&r) && crate::flow::dist_to_axes(x) >= delta
    };
    let mut record = StoppingRecord { epsilon: eps, delta, tau: None, horizon, dt, seed };
    if in_shell(x0) {
        record.tau = Some(0.0);
        return Ok(record);
    }
    let mut tau: Option<f64> = None;
    run_tamed_em(b, damping, eps, x0, horizon, dt, seed, |rec| {
        if tau.is_none() && in_shell(rec.next) {
            tau = Some((rec.step + 1) as f64 * dt);
        }
    })?;
    record.tau = tau;
    Ok(record)
}

/// One path's dissipation integral `int_0^{horizon} A x . x dt` on the
/// rescaled dynamics.
pub fn coercivity_path(
    b: &CoefficientTensor,
    damping: &DampingSpec,
    eps: f64,
    x0: &[f64],
    horizon: f64,
    dt: f64,
    seed: u64,
) -> Result<f64> {
    let mut acc = KahanSum::new();
    let mut prev = damping.dissipation(x0);
    run_tamed_em(b, damping, eps, x0, horizon, dt, seed, |rec| {
        let cur = damping.dissipation(rec.next);
        acc.add(0.5 * (prev + cur) * dt);
        prev = cur;
    })?;
    Ok(acc.value())
}

/// Monte Carlo coercivity estimate over the `C_0 |log eps|` window.
#[derive(Debug, Clone, Copy)]
pub struct CoercivityReport {
    pub eps: f64,
    pub horizon: f64,
    pub estimate: f64,
    pub se: f64,
    pub n_paths: usize,
}

pub fn coercivity(
    b: &CoefficientTensor,
    damping: &DampingSpec,
    eps: f64,
    x0: &[f64],
    c0: f64,
    dt: f64,
    n_paths: usize,
    master_seed: u64,
) -> Result<CoercivityReport> {
    assert!(eps > 0.0 && eps < 1.0, "coercivity window needs eps in (0,1)");
    let horizon = c0 * math::abs(math::ln(eps));
    let mut integrals = Vec::with_capacity(n_paths);
    for p in 0..n_paths {
        integrals.push(coercivity_path(
            b,
            damping,
            eps,
            x0,
            horizon,
            dt,
            seed_derive(master_seed, p as u64),
        )?);
    }
    let s: Summary = stats::summarize(&integrals);
    Ok(CoercivityReport { eps, horizon, estimate: s.mean, se: s.se, n_paths })
}
