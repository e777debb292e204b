//! The coefficient-switched Markov chain: at every step draw a fresh tensor
//! from a small ball in the constraint class and a duration uniform on
//! `[1/2, 3/2]`, then run the damped SDE for that long.
//!
//! Switching the nonlinearity breaks invariant sets inside the undamped
//! subspace that a single fixed tensor cannot escape, which is what makes a
//! single damped mode enough for the chain to dissipate. The chain state is
//! Markov by construction: every step consumes fresh, counter-derived
//! randomness for both the switch draw and the path noise.

use alloc::vec::Vec;

use crate::error::{CoreError, Result};
use crate::math;
use crate::rng::{self, seed_derive};
use crate::sde::{run_tamed_em, DampingSpec};
use crate::stats::{self, KahanSum};
use crate::tensor::{class_basis, ClassBasis, CoefficientTensor};

/// Stream id for the switch draw inside a step (noise uses ids `0..d`).
const SWITCH_STREAM: u64 = u64::MAX;

/// Genericity margins of a ball center, recorded when the ball is built
/// with certificates.
#[derive(Debug, Clone, Copy)]
pub struct CenterMargins {
    /// Min over axes of the spectral margin relative to `|L|_F`.
    pub hyperbolicity_rel: f64,
    /// Min over ordered pairs of `|G_normalized|`.
    pub min_g_normalized: f64,
    /// Largest escape order observed on the kernel shell.
    pub passthrough_j_delta: usize,
    /// Smallest degree-normalized escape margin observed.
    pub passthrough_c_rel: f64,
}

impl CenterMargins {
    pub fn smallest(&self) -> f64 {
        self.hyperbolicity_rel
            .min(self.min_g_normalized)
            .min(self.passthrough_c_rel)
    }
}

/// An open ball in free coordinates around a certified center tensor.
#[derive(Debug, Clone)]
pub struct SwitchBall {
    center: CoefficientTensor,
    center_free: Vec<f64>,
    basis: ClassBasis,
    radius: f64,
    margins: Option<CenterMargins>,
}

impl SwitchBall {
    /// A ball with an explicit radius (in the Euclidean norm on free
    /// coordinates); no certificates are computed.
    pub fn new(center: CoefficientTensor, radius: f64) -> Result<Self> {
        if !(radius >= 0.0) {
            return Err(CoreError::InvalidDamping("ball radius must be nonnegative"));
        }
        let basis = class_basis(center.dim())?;
        let center_free = basis.extract(&center);
        Ok(SwitchBall { center, center_free, basis, radius, margins: None })
    }

    /// Certifies the center (hyperbolicity, ladder determinants, kernel
    /// passthrough) and sets the radius to `0.1` times the smallest margin
    /// times the free-coordinate norm of the center.
    ///
    /// The margins are dimensionless; the free-coordinate norm restores the
    /// scale of the center. This is a documented heuristic standing in for
    /// the open set of generic tensors, which has no computable description.
    pub fn certified(
        center: CoefficientTensor,
        damping: &DampingSpec,
        delta: f64,
        n_scan: usize,
        seed: u64,
    ) -> Result<Self> {
        let d = center.dim();
        let hyp = crate::spectral::hyperbolicity_report(&center, 1.0, None)?;
        let mut hyp_rel = f64::INFINITY;
        for ax in &hyp.axes {
            let l = crate::spectral::linearization(&center, ax.axis, 1.0)?;
            let f = l.frobenius_norm();
            if f > 0.0 {
                hyp_rel = hyp_rel.min(ax.margin / f);
            } else {
                hyp_rel = 0.0;
            }
        }
        if !hyp_rel.is_finite() {
            hyp_rel = 0.0;
        }

        let hypo = crate::ladder::generic_hypoellipticity(&center, 0.0)?;

        let kernel = damping.kernel()?;
        let mut rng = rng::stream(seed);
        let scan = crate::flow::kdelta_scan(&center, &kernel, delta, n_scan, 2 * d, &mut rng)?;
        let bmax = center.max_abs();
        let mut c_rel = f64::INFINITY;
        for s in &scan.samples {
            if let Some(j) = s.j_min {
                let xn = crate::matrix::norm(&s.x);
                let scale = math::powi(bmax.max(1e-300), j as i32) * math::powi(xn, j as i32 + 1);
                c_rel = c_rel.min(s.margin / scale);
            }
        }
        if !c_rel.is_finite() {
            c_rel = 0.0;
        }

        let margins = CenterMargins {
            hyperbolicity_rel: hyp_rel,
            min_g_normalized: hypo.min_margin,
            passthrough_j_delta: scan.j_delta.unwrap_or(0),
            passthrough_c_rel: c_rel,
        };
        let basis = class_basis(d)?;
        let center_free = basis.extract(&center);
        let scale = crate::matrix::norm(&center_free);
        let radius = 0.1 * margins.smallest().max(0.0) * scale;
        Ok(SwitchBall { center, center_free, basis, radius, margins: Some(margins) })
    }

    pub fn center(&self) -> &CoefficientTensor {
        &self.center
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn margins(&self) -> Option<&CenterMargins> {
        self.margins.as_ref()
    }

    pub fn dim(&self) -> usize {
        self.center.dim()
    }

    /// One switch draw: a tensor uniform on the ball (Gaussian direction,
    /// radius scaled by `u^{1/n}`) and a duration uniform on `[1/2, 3/2]`.
    pub fn sample(&self, rng: &mut rng::Stream) -> (CoefficientTensor, f64) {
        let n = self.basis.len();
        let tensor = if self.radius == 0.0 {
            self.center.clone()
        } else {
            let mut dir: Vec<f64> = (0..n).map(|_| rng::normal(rng)).collect();
            let dn = crate::matrix::norm(&dir);
            let u = rng::uniform(rng, 0.0, 1.0);
            let r = self.radius * math::powf(u, 1.0 / n as f64);
            if dn > 0.0 {
                for c in dir.iter_mut() {
                    *c *= r / dn;
                }
            }
            let free: Vec<f64> =
                self.center_free.iter().zip(&dir).map(|(c, d)| c + d).collect();
            self.basis.combine(&free)
        };
        let t = rng::uniform(rng, 0.5, 1.5);
        (tensor, t)
    }

    /// Euclidean distance of a tensor from the center in free coordinates.
    pub fn free_distance(&self, t: &CoefficientTensor) -> f64 {
        let free = self.basis.extract(t);
        let diff: Vec<f64> =
            free.iter().zip(&self.center_free).map(|(a, b)| a - b).collect();
        crate::matrix::norm(&diff)
    }
}

/// State of the switched chain.
#[derive(Debug, Clone)]
pub struct ChainState {
    pub x: Vec<f64>,
    /// Completed steps.
    pub n: usize,
    /// Duration drawn and duration actually simulated (grid-rounded) in the
    /// last step, if any.
    pub last_durations: Option<(f64, f64)>,
}

impl ChainState {
    pub fn start(x: Vec<f64>) -> Self {
        ChainState { x, n: 0, last_durations: None }
    }

    /// `V(x) = 1 + |x|^2`, the drift-condition Lyapunov function.
    pub fn lyapunov(&self) -> f64 {
        let n = crate::matrix::norm(&self.x);
        1.0 + n * n
    }
}

/// Advances the chain one step.
///
/// The step consumes `step_seed`: the switch draw comes from its dedicated
/// substream, path noise from the per-coordinate substreams. The drawn
/// duration is rounded to the nearest step-grid multiple (at least one
/// step); both durations are recorded so the grid bias is visible.
pub fn chain_step(
    state: &ChainState,
    ball: &SwitchBall,
    damping: &DampingSpec,
    dt: f64,
    step_seed: u64,
) -> Result<ChainState> {
    let mut switch_rng = rng::substream(step_seed, SWITCH_STREAM);
    let (b_n, t_n) = ball.sample(&mut switch_rng);
    let steps = (math::round(t_n / dt) as usize).max(1);
    let t_used = steps as f64 * dt;
    let x = run_tamed_em(&b_n, damping, 1.0, &state.x, t_used, dt, step_seed, |_| {})?;
    Ok(ChainState { x, n: state.n + 1, last_durations: Some((t_n, t_used)) })
}

/// Per-path two-step Lyapunov increments: `(V(Phi_1) - V(x0), V(Phi_2) - V(x0))`.
pub fn lyapunov_path(
    ball: &SwitchBall,
    damping: &DampingSpec,
    x0: &[f64],
    dt: f64,
    path_seed: u64,
) -> Result<(f64, f64)> {
    let s0 = ChainState::start(x0.to_vec());
    let v0 = s0.lyapunov();
    let s1 = chain_step(&s0, ball, damping, dt, seed_derive(path_seed, 0))?;
    let s2 = chain_step(&s1, ball, damping, dt, seed_derive(path_seed, 1))?;
    Ok((s1.lyapunov() - v0, s2.lyapunov() - v0))
}

/// Monte Carlo estimate of the two-step Lyapunov drift.
#[derive(Debug, Clone, Copy)]
pub struct DriftReport {
    /// `E[V(Phi_2)] - V(x0)` and its standard error.
    pub drift: f64,
    pub se: f64,
    /// `E[V(Phi_1)] - V(x0)` and its standard error (for the one-step
    /// energy-input bound `<= (3/2) sum sigma^2`).
    pub one_step: f64,
    pub one_step_se: f64,
    pub n_paths: usize,
}

pub fn lyapunov_drift(
    ball: &SwitchBall,
    damping: &DampingSpec,
    x0: &[f64],
    n_paths: usize,
    dt: f64,
    master_seed: u64,
) -> Result<DriftReport> {
    let mut one = Vec::with_capacity(n_paths);
    let mut two = Vec::with_capacity(n_paths);
    for p in 0..n_paths {
        let (d1, d2) = lyapunov_path(ball, damping, x0, dt, seed_derive(master_seed, p as u64))?;
        one.push(d1);
        two.push(d2);
    }
    Ok(drift_from_increments(&one, &two))
}

/// Aggregates per-path increments (shared with parallel runners).
pub fn drift_from_increments(one_step: &[f64], two_step: &[f64]) -> DriftReport {
    let s1 = stats::summarize(one_step);
    let s2 = stats::summarize(two_step);
    DriftReport { drift: s2.mean, se: s2.se, one_step: s1.mean, one_step_se: s1.se, n_paths: s2.n }
}

/// Record of one chain step in a long run.
#[derive(Debug, Clone, Copy)]
pub struct ChainStepRecord {
    pub n: usize,
    pub t_drawn: f64,
    pub t_used: f64,
    pub x_norm: f64,
    pub lyapunov: f64,
}

/// Runs a chain for `n_steps` and records per-step summaries. The full
/// states are folded into the observer to keep memory flat.
pub fn run_chain<F: FnMut(&ChainState)>(
    ball: &SwitchBall,
    damping: &DampingSpec,
    x0: Vec<f64>,
    n_steps: usize,
    dt: f64,
    chain_seed: u64,
    mut observer: F,
) -> Result<Vec<ChainStepRecord>> {
    let mut state = ChainState::start(x0);
    let mut records = Vec::with_capacity(n_steps);
    for step in 0..n_steps {
        state = chain_step(&state, ball, damping, dt, seed_derive(chain_seed, step as u64))?;
        let (t_drawn, t_used) = state.last_durations.expect("step just ran");
        records.push(ChainStepRecord {
            n: state.n,
            t_drawn,
            t_used,
            x_norm: crate::matrix::norm(&state.x),
            lyapunov: state.lyapunov(),
        });
        observer(&state);
    }
    Ok(records)
}

/// One row of the time-averaged moment table.
#[derive(Debug, Clone, Copy)]
pub struct MomentEstimate {
    pub p: f64,
    pub estimate: f64,
    /// Batch-means standard error (the chain is serially correlated).
    pub se: f64,
}

/// Time-averaged moments `E |x|^p` over the post-burn-in steps of a run.
pub fn empirical_measure(
    records: &[ChainStepRecord],
    burn_in: usize,
    p_list: &[f64],
) -> Vec<MomentEstimate> {
    let tail = &records[burn_in.min(records.len())..];
    p_list
        .iter()
        .map(|&p| {
            let values: Vec<f64> = tail.iter().map(|r| math::powf(r.x_norm, p)).collect();
            let mut acc = KahanSum::new();
            for &v in &values {
                acc.add(v);
            }
            let estimate = if values.is_empty() { 0.0 } else { acc.value() / values.len() as f64 };
            MomentEstimate { p, estimate, se: stats::batch_means_se(&values) }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::norm;
    use crate::rng::stream;
    use crate::tensor::{lorenz96, sample, CoefficientTensor, ALGEBRAIC_TOL};

    fn free_dim(d: usize) -> usize {
        2 * (d * (d - 1) * (d - 2) / 6)
    }

    #[test]
    fn radius_zero_always_returns_center() {
        let center = lorenz96(5).unwrap();
        let ball = SwitchBall::new(center.clone(), 0.0).unwrap();
        let mut rng = stream(5);
        for _ in 0..10 {
            let (b, t) = ball.sample(&mut rng);
            assert_eq!(b, center);
            assert!((0.5..=1.5).contains(&t));
        }
    }

    #[test]
    fn switch_draws_are_uniform_on_ball_and_interval() {
        let mut rng = stream(11);
        let center = sample(5, 1.0, &mut rng).unwrap();
        let radius = 0.3;
        let ball = SwitchBall::new(center.clone(), radius).unwrap();
        let n = 20_000;
        let mut t_sum = KahanSum::new();
        let mut coord_sums = vec![KahanSum::new(); free_dim(5)];
        for _ in 0..n {
            let (b, t) = ball.sample(&mut rng);
            t_sum.add(t);
            // membership is inherited exactly from the free-coordinate chart
            assert!(b.membership().passes(ALGEBRAIC_TOL));
            let dist = ball.free_distance(&b);
            assert!(dist <= radius * (1.0 + 1e-12), "sample left the ball: {dist}");
            let basis = crate::tensor::class_basis(5).unwrap();
            for (acc, c) in coord_sums.iter_mut().zip(basis.extract(&b)) {
                acc.add(c);
            }
        }
        let t_mean = t_sum.value() / n as f64;
        // se of U[1/2,3/2] mean ~ 0.289/sqrt(n)
        assert!((t_mean - 1.0).abs() <= 3.0 * 0.289 / (n as f64).sqrt() + 1e-3);
        let basis = crate::tensor::class_basis(5).unwrap();
        let center_free = basis.extract(&center);
        // per-coordinate mean of a uniform ball is the center; sd per
        // coordinate is about radius/sqrt(dim+2)
        let coord_se = radius / ((free_dim(5) + 2) as f64).sqrt() / (n as f64).sqrt();
        for (acc, want) in coord_sums.iter().zip(center_free) {
            let mean = acc.value() / n as f64;
            assert!((mean - want).abs() <= 5.0 * coord_se + 1e-4, "{mean} vs {want}");
        }
    }

    #[test]
    fn certified_ball_records_margins() {
        let mut rng = stream(17);
        let center = loop {
            let cand = sample(5, 1.0, &mut rng).unwrap();
            if crate::spectral::hyperbolicity_report(&cand, 1.0, None).unwrap().verdict {
                break cand;
            }
        };
        let damping =
            DampingSpec::diagonal(5, 3, &[1.0, 1.0], vec![1.0, 1.0, 0.0, 0.0, 0.0]).unwrap();
        let ball = SwitchBall::certified(center, &damping, 0.2, 200, 23).unwrap();
        let m = ball.margins().unwrap();
        assert!(m.hyperbolicity_rel > 0.0);
        assert!(m.min_g_normalized > 0.0);
        assert!(m.passthrough_c_rel > 0.0);
        assert!(m.passthrough_j_delta >= 1);
        assert!(ball.radius() > 0.0);
    }

    #[test]
    fn deterministic_step_matches_flow() {
        // radius 0, sigma = 0, A = 0: the step is the deterministic flow of
        // the center for the drawn duration
        let center = lorenz96(5).unwrap();
        let ball = SwitchBall::new(center.clone(), 0.0).unwrap();
        let damping = DampingSpec::diagonal(5, 5, &[], vec![0.0; 5]).unwrap();
        let x0 = vec![0.7, -0.1, 0.3, -0.5, 0.2];
        let dt = 1e-3;
        let state = chain_step(&ChainState::start(x0.clone()), &ball, &damping, dt, 99).unwrap();
        let (_, t_used) = state.last_durations.unwrap();
        let rk = crate::flow::integrate(&center, &x0, t_used, dt).unwrap();
        let mut err = 0.0f64;
        for (a, b) in state.x.iter().zip(rk.final_state()) {
            err = err.max(math::abs(a - b));
        }
        assert!(err <= 2e-3, "chain step strayed from the flow by {err}");
    }

    #[test]
    fn chain_is_reproducible_from_its_seed() {
        let mut rng = stream(29);
        let center = sample(4, 1.0, &mut rng).unwrap();
        let ball = SwitchBall::new(center, 0.05).unwrap();
        let damping = DampingSpec::diagonal(4, 3, &[1.0], vec![1.0, 1.0, 0.0, 0.0]).unwrap();
        let x0 = vec![2.0, -1.0, 0.5, 0.0];
        let run = |seed: u64| {
            let mut states = Vec::new();
            run_chain(&ball, &damping, x0.clone(), 5, 1e-3, seed, |s| states.push(s.x.clone()))
                .unwrap();
            states
        };
        assert_eq!(run(7), run(7));
        assert_ne!(run(7), run(8));
    }

    #[test]
    fn radius_zero_drift_equals_composed_sde_runs() {
        // with a zero radius the chain is just two composed SDE runs; the
        // drift path must reproduce them bitwise given the same seeds
        let center = lorenz96(4).unwrap();
        let ball = SwitchBall::new(center.clone(), 0.0).unwrap();
        let damping = DampingSpec::diagonal(4, 3, &[1.0], vec![1.0, 1.0, 0.0, 0.0]).unwrap();
        let x0 = vec![3.0, -2.0, 1.0, 0.5];
        let dt = 1e-3;
        let path_seed = 4242;
        let (d1, d2) = lyapunov_path(&ball, &damping, &x0, dt, path_seed).unwrap();

        let manual = |step_seed: u64, from: &[f64]| -> Vec<f64> {
            let mut switch_rng = rng::substream(step_seed, SWITCH_STREAM);
            let (_, t_n) = ball.sample(&mut switch_rng);
            let steps = (math::round(t_n / dt) as usize).max(1);
            run_tamed_em(&center, &damping, 1.0, from, steps as f64 * dt, dt, step_seed, |_| {})
                .unwrap()
        };
        let x1 = manual(seed_derive(path_seed, 0), &x0);
        let x2 = manual(seed_derive(path_seed, 1), &x1);
        let v0 = 1.0 + norm(&x0).powi(2);
        assert_eq!(d1, (1.0 + norm(&x1).powi(2)) - v0);
        assert_eq!(d2, (1.0 + norm(&x2).powi(2)) - v0);
    }

    #[test]
    fn conservative_chain_has_no_drift() {
        let center = lorenz96(5).unwrap();
        let ball = SwitchBall::new(center.clone(), 0.0).unwrap();
        let damping = DampingSpec::diagonal(5, 5, &[], vec![0.0; 5]).unwrap();
        let x0 = vec![2.0, 1.0, -1.0, 0.5, -0.5];
        let dt = 1e-3;
        let report = lyapunov_drift(&ball, &damping, &x0, 20, dt, 3).unwrap();
        // energy is conserved in law; what remains is the integrator's
        // quadratic-in-dt step drift, about dt^2 |B(x,x)|^2 per step
        let n0 = norm(&x0);
        let bsup = center.max_abs() * 5.0 * n0 * n0;
        let bound = 4.0 * dt * bsup * bsup;
        assert!(report.drift.abs() <= bound, "conservative drift {} vs {bound}", report.drift);
        assert!(report.one_step.abs() <= bound);
        // and the drift must shrink roughly linearly with dt
        let finer = lyapunov_drift(&ball, &damping, &x0, 20, dt / 4.0, 3).unwrap();
        assert!(finer.drift.abs() <= report.drift.abs() / 2.0);
    }

    #[test]
    fn ou_chain_moments_match_stationary_law() {
        // center 0, radius 0, A = I: the chain samples an OU process at
        // random times; after burn-in E|x|^2 = d sigma^2 / 2
        let d = 3;
        let sigma = 1.0;
        let center = CoefficientTensor::zero(d).unwrap();
        let ball = SwitchBall::new(center, 0.0).unwrap();
        let damping = DampingSpec::diagonal(d, 0, &[1.0; 3], vec![sigma; 3]).unwrap();
        let records = run_chain(&ball, &damping, vec![1.0, 0.0, 0.0], 3000, 1e-2, 31, |_| {}).unwrap();
        let moments = empirical_measure(&records, 200, &[0.0, 2.0]);
        assert_eq!(moments[0].estimate, 1.0);
        assert_eq!(moments[0].se, 0.0);
        let want = d as f64 * sigma * sigma / 2.0;
        let tol = 3.0 * moments[1].se + 0.05 * want;
        assert!(
            (moments[1].estimate - want).abs() <= tol,
            "OU chain moment {} vs {want} (tol {tol})",
            moments[1].estimate
        );
    }

    #[test]
    fn moments_are_monotone_in_p_on_large_states() {
        let mut rng = stream(37);
        let center = sample(4, 1.0, &mut rng).unwrap();
        let ball = SwitchBall::new(center, 0.02).unwrap();
        let damping = DampingSpec::diagonal(4, 3, &[1.0], vec![1.0, 1.0, 0.0, 0.0]).unwrap();
        let records = run_chain(&ball, &damping, vec![4.0, 1.0, 0.0, 0.0], 400, 1e-3, 41, |_| {}).unwrap();
        // restrict to |x| >= 1 where t -> t^p is pointwise monotone
        let large: Vec<ChainStepRecord> =
            records.into_iter().filter(|r| r.x_norm >= 1.0).collect();
        assert!(large.len() > 50);
        let moments = empirical_measure(&large, 0, &[1.0, 2.0, 3.0]);
        assert!(moments[0].estimate <= moments[1].estimate);
        assert!(moments[1].estimate <= moments[2].estimate);
    }

    #[test]
    fn increment_law_depends_only_on_the_state() {
        // two ensembles from the same state but different seed histories
        // must produce statistically indistinguishable next increments
        let mut rng = stream(43);
        let center = sample(4, 1.0, &mut rng).unwrap();
        let ball = SwitchBall::new(center, 0.05).unwrap();
        let damping = DampingSpec::diagonal(4, 3, &[1.0], vec![1.0, 1.0, 0.0, 0.0]).unwrap();
        let x_star = vec![1.5, -0.5, 0.8, 0.3];
        let n = 500;
        let increments = |master: u64| -> Vec<f64> {
            let mut out: Vec<f64> = (0..n)
                .map(|p| {
                    let s =
                        chain_step(&ChainState::start(x_star.clone()), &ball, &damping, 1e-3,
                            seed_derive(master, p as u64))
                        .unwrap();
                    norm(&s.x)
                })
                .collect();
            out.sort_by(|a, b| a.partial_cmp(b).unwrap());
            out
        };
        let a = increments(1001);
        let b = increments(2002);
        // two-sample KS distance
        let mut ks = 0.0f64;
        let (mut i, mut j) = (0usize, 0usize);
        while i < a.len() && j < b.len() {
            if a[i] <= b[j] {
                i += 1;
            } else {
                j += 1;
            }
            ks = ks.max(math::abs(i as f64 / n as f64 - j as f64 / n as f64));
        }
        // 1.36 sqrt(2/n) is the 5% critical value; allow slack
        assert!(ks <= 2.0 * 1.36 * math::sqrt(2.0 / n as f64), "KS distance {ks} too large");
    }
}
