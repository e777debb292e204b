//! The inductive Lie-bracket ladder and its determinant certificate.
//!
//! For a pair of distinct forcing directions `(i, j)` the ladder starts from
//! `v_1 = e_i`, `v_2 = e_j` and repeatedly applies the exact double bracket
//! `[v, [w, drift]] = 2 B(v, w)`, subtracting the combination of earlier
//! vectors that zeroes the leading components. The determinant
//! `G = det[v_1 ... v_d]` is a polynomial in the tensor coefficients; it is
//! nonzero exactly when the ladder spans `R^d`, which certifies the bracket
//! condition for the degenerately forced diffusion regardless of the damping
//! strength or any linear perturbation of the drift (the double bracket of
//! constant fields kills linear terms twice over).
//!
//! Pairs other than the canonical one are handled by relabeling coordinates,
//! exactly as the inductive construction dictates. For the built-in witness
//! tensor the ladder reproduces the coordinate basis: `v_m` is a positive
//! multiple of `e_m` and the scale-free determinant equals 1 exactly.

use alloc::vec::Vec;

use crate::error::{CoreError, Result};
use crate::math;
use crate::matrix::{norm, Mat};
use crate::tensor::CoefficientTensor;

pub use crate::polyfield::{fd_double_bracket, numeric_bracket_span, BracketSpan};

/// Pivot tolerance (relative) for the triangular correction solve.
const CORRECTION_PIVOT_TOL: f64 = 1e-13;

/// The ladder vectors and determinant for one ordered pair.
#[derive(Debug, Clone)]
pub struct LadderCertificate {
    /// Forcing pair `(i, j)`, 0-based.
    pub pair: (usize, usize),
    /// Ladder vectors `v_1 ... v_d` in the original coordinate frame.
    pub vectors: Vec<Vec<f64>>,
    /// Raw determinant `det[v_1 ... v_d]`.
    pub g: f64,
    /// `g` divided by the product of the vector norms (scale-free margin).
    pub g_normalized: f64,
}

impl LadderCertificate {
    /// Unit-normalized ladder vectors (zero vectors stay zero).
    pub fn unit_vectors(&self) -> Vec<Vec<f64>> {
        self.vectors
            .iter()
            .map(|v| {
                let n = norm(v);
                if n > 0.0 {
                    v.iter().map(|c| c / n).collect()
                } else {
                    v.clone()
                }
            })
            .collect()
    }
}

/// Computes the ladder certificate for the pair `(i, j)` using the exact
/// closed-form double bracket `2 B(v, w)`.
///
/// The recursion runs in the canonical frame `[i, j, remaining indices
/// ascending]`; see [`ladder_with_frame`] for other completions. Ordered
/// pairs carry distinct determinant polynomials (later stages bracket
/// against the slot-1 vector), which is why reports range over ordered
/// pairs.
pub fn ladder(b: &CoefficientTensor, i: usize, j: usize) -> Result<LadderCertificate> {
    ladder_impl(b, i, j, &closed_form_bracket)
}

fn closed_form_bracket(c: &CoefficientTensor, v: &[f64], w: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; c.dim()];
    c.evaluate_into(v, w, &mut out);
    for o in out.iter_mut() {
        *o *= 2.0;
    }
    out
}

/// Ladder recursion in an explicit frame (a permutation mapping recursion
/// slots to original coordinates; the pair is `(frame[0], frame[1])`).
///
/// The determinant depends on the completion order, not just the pair: the
/// correction stages zero leading components *of the frame*. Relabeling the
/// tensor and transporting the frame accordingly leaves `G` unchanged.
pub fn ladder_with_frame(b: &CoefficientTensor, frame: &[usize]) -> Result<LadderCertificate> {
    let d = b.dim();
    if frame.len() != d {
        return Err(CoreError::DimensionError { expected: d, got: frame.len() });
    }
    let mut seen = vec![false; d];
    for &f in frame {
        if f >= d || seen[f] {
            return Err(CoreError::IndexError { index: f, d });
        }
        seen[f] = true;
    }
    ladder_in_frame(b, frame, &closed_form_bracket)
}

/// Same recursion, but every double bracket is evaluated through exact
/// polynomial Lie brackets of the drift `B(x,x) + eps * M x`.
///
/// The linear augmentation drops out of the double bracket identically, so
/// the result agrees with [`ladder`] for every `eps` and `M`; exposed so
/// that independence can be demonstrated rather than assumed.
pub fn ladder_with_linear_drift(
    b: &CoefficientTensor,
    i: usize,
    j: usize,
    eps: f64,
    m: &Mat,
) -> Result<LadderCertificate> {
    use crate::polyfield::PolyVec;
    let d = b.dim();
    if m.rows() != d || m.cols() != d {
        return Err(CoreError::DimensionError { expected: d, got: m.rows() });
    }
    let bracket = move |c: &CoefficientTensor, v: &[f64], w: &[f64]| {
        let mut drift = PolyVec::quadratic(c);
        drift.add_scaled(&PolyVec::linear(m), eps);
        let inner = PolyVec::constant(w).bracket(&drift);
        let outer = PolyVec::constant(v).bracket(&inner);
        outer.eval(&vec![0.0; c.dim()])
    };
    ladder_impl(b, i, j, &bracket)
}

/// Shared recursion over the canonical frame of a pair;
/// `double_bracket(c, v, w)` supplies `[v, [w, drift]]` for the relabeled
/// tensor `c`.
pub fn ladder_impl(
    b: &CoefficientTensor,
    i: usize,
    j: usize,
    double_bracket: &dyn Fn(&CoefficientTensor, &[f64], &[f64]) -> Vec<f64>,
) -> Result<LadderCertificate> {
    let d = b.dim();
    if i >= d {
        return Err(CoreError::IndexError { index: i, d });
    }
    if j >= d || i == j {
        return Err(CoreError::IndexError { index: j, d });
    }
    let mut frame = Vec::with_capacity(d);
    frame.push(i);
    frame.push(j);
    frame.extend((0..d).filter(|&a| a != i && a != j));
    ladder_in_frame(b, &frame, double_bracket)
}

fn ladder_in_frame(
    b: &CoefficientTensor,
    perm: &[usize],
    double_bracket: &dyn Fn(&CoefficientTensor, &[f64], &[f64]) -> Vec<f64>,
) -> Result<LadderCertificate> {
    let d = b.dim();
    let (i, j) = (perm[0], perm[1]);
    let c = relabel(b, perm);

    let mut vectors: Vec<Vec<f64>> = Vec::with_capacity(d);
    vectors.push(crate::matrix::basis_vec(d, 0));
    vectors.push(crate::matrix::basis_vec(d, 1));
    for stage in 0..(d - 2) {
        let w = double_bracket(&c, &vectors[stage], &vectors[stage + 1]);
        // zero the first stage+2 components against v_1..v_{stage+2}
        let lead = stage + 2;
        let a = Mat::from_fn(lead, lead, |r, col| vectors[col][r]);
        let rhs: Vec<f64> = w[..lead].to_vec();
        let kappa = solve_rank_truncated(&a, &rhs, CORRECTION_PIVOT_TOL);
        let mut v_next = w;
        for (col, &k) in kappa.iter().enumerate() {
            if k != 0.0 {
                for (vn, vc) in v_next.iter_mut().zip(&vectors[col]) {
                    *vn -= k * vc;
                }
            }
        }
        vectors.push(v_next);
    }

    // determinant in the relabeled frame, then map vectors back
    let g_rel = Mat::from_fn(d, d, |r, col| vectors[col][r]).det();
    let mut norms_prod = 1.0;
    let mut any_zero = false;
    for v in &vectors {
        let n = norm(v);
        if n == 0.0 {
            any_zero = true;
        }
        norms_prod *= n;
    }
    let g_normalized = if any_zero || norms_prod == 0.0 { 0.0 } else { g_rel / norms_prod };

    let vectors_orig: Vec<Vec<f64>> = vectors
        .iter()
        .map(|v| {
            let mut o = vec![0.0; d];
            for (new_idx, &old_idx) in perm.iter().enumerate() {
                o[old_idx] = v[new_idx];
            }
            o
        })
        .collect();

    Ok(LadderCertificate { pair: (i, j), vectors: vectors_orig, g: g_rel, g_normalized })
}

/// Relabels coordinates: `out^a_{bc} = b^{perm[a]}_{perm[b], perm[c]}`.
pub fn relabel(b: &CoefficientTensor, perm: &[usize]) -> CoefficientTensor {
    let d = b.dim();
    assert_eq!(perm.len(), d, "permutation length mismatch");
    let basis = crate::tensor::class_basis(d).expect("relabel only called with valid d");
    let coeffs: Vec<f64> = basis
        .free_index_map()
        .iter()
        .map(|fc| {
            let (a, bb, cc) = fc.triple;
            match fc.slot {
                crate::tensor::FreeSlot::Low => b.get(perm[a], perm[bb], perm[cc]),
                crate::tensor::FreeSlot::Mid => b.get(perm[bb], perm[a], perm[cc]),
            }
        })
        .collect();
    basis.combine(&coeffs)
}

/// Gaussian elimination with partial pivoting; pivots below the relative
/// tolerance are skipped and their unknowns set to zero, so the solve
/// degrades gracefully on degenerate ladders (zero tensor and friends).
fn solve_rank_truncated(a: &Mat, rhs: &[f64], rel_tol: f64) -> Vec<f64> {
    let m = a.rows();
    let n = a.cols();
    let scale = a.max_abs();
    if scale == 0.0 {
        return vec![0.0; n];
    }
    let tol = rel_tol * scale;
    let mut aug = Mat::zeros(m, n + 1);
    for r in 0..m {
        for c in 0..n {
            aug[(r, c)] = a[(r, c)];
        }
        aug[(r, n)] = rhs[r];
    }
    let mut pivots: Vec<(usize, usize)> = Vec::new();
    let mut row = 0;
    for col in 0..n {
        if row >= m {
            break;
        }
        let mut p = row;
        let mut best = math::abs(aug[(row, col)]);
        for r in (row + 1)..m {
            let v = math::abs(aug[(r, col)]);
            if v > best {
                best = v;
                p = r;
            }
        }
        if best <= tol {
            continue;
        }
        if p != row {
            for cc in 0..=n {
                let tmp = aug[(row, cc)];
                aug[(row, cc)] = aug[(p, cc)];
                aug[(p, cc)] = tmp;
            }
        }
        let pivot = aug[(row, col)];
        for r in (row + 1)..m {
            let f = aug[(r, col)] / pivot;
            if f != 0.0 {
                for cc in col..=n {
                    aug[(r, cc)] -= f * aug[(row, cc)];
                }
            }
        }
        pivots.push((row, col));
        row += 1;
    }
    let mut x = vec![0.0; n];
    for &(r, c) in pivots.iter().rev() {
        let mut acc = aug[(r, n)];
        for cc in (c + 1)..n {
            acc -= aug[(r, cc)] * x[cc];
        }
        x[c] = acc / aug[(r, c)];
    }
    x
}

/// Per-pair margin of the determinant certificate.
#[derive(Debug, Clone, Copy)]
pub struct PairMargin {
    pub i: usize,
    pub j: usize,
    pub g: f64,
    pub g_normalized: f64,
    pub pass: bool,
}

/// All ordered pairs with their margins and the overall verdict.
#[derive(Debug, Clone)]
pub struct HypoellipticityReport {
    pub pairs: Vec<PairMargin>,
    /// `min |g_normalized|` over all ordered pairs.
    pub min_margin: f64,
    /// Pass iff the minimum margin strictly exceeds the tolerance.
    pub pass: bool,
}

/// Evaluates the ladder certificate for every ordered pair `(i, j)`, `i != j`.
pub fn generic_hypoellipticity(b: &CoefficientTensor, tol: f64) -> Result<HypoellipticityReport> {
    let d = b.dim();
    let mut pairs = Vec::with_capacity(d * (d - 1));
    let mut min_margin = f64::INFINITY;
    for i in 0..d {
        for j in 0..d {
            if i == j {
                continue;
            }
            let cert = ladder(b, i, j)?;
            let margin = math::abs(cert.g_normalized);
            min_margin = min_margin.min(margin);
            pairs.push(PairMargin { i, j, g: cert.g, g_normalized: cert.g_normalized, pass: margin > tol });
        }
    }
    if !min_margin.is_finite() {
        min_margin = 0.0;
    }
    Ok(HypoellipticityReport { pairs, min_margin, pass: min_margin > tol })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::basis_vec;
    use crate::rng::{self, stream};
    use crate::tensor::{sample, witness_tensor, CoefficientTensor};

    #[test]
    fn witness_ladder_is_coordinate_basis() {
        for d in [3, 4, 6, 10] {
            let w = witness_tensor(d).unwrap();
            let cert = ladder(&w, 0, 1).unwrap();
            for (m, v) in cert.unit_vectors().iter().enumerate() {
                let e = basis_vec(d, m);
                assert_eq!(v, &e, "unit ladder vector {m} must be exactly e_{m}");
            }
            assert_eq!(cert.g_normalized, 1.0, "scale-free determinant must be exactly 1");
            assert!(cert.g > 0.0);
        }
    }

    #[test]
    fn zero_tensor_degenerates() {
        let b = CoefficientTensor::zero(5).unwrap();
        let cert = ladder(&b, 0, 1).unwrap();
        assert_eq!(norm(&cert.vectors[2]), 0.0);
        assert_eq!(cert.g, 0.0);
        assert_eq!(cert.g_normalized, 0.0);
        let report = generic_hypoellipticity(&b, 1e-10).unwrap();
        assert_eq!(report.min_margin, 0.0);
        assert!(!report.pass);
    }

    #[test]
    fn ladder_rejects_bad_pairs() {
        let b = witness_tensor(4).unwrap();
        assert!(ladder(&b, 2, 2).is_err());
        assert!(ladder(&b, 0, 4).is_err());
    }

    #[test]
    fn generic_samples_have_nonzero_margin() {
        let mut rng = stream(51);
        let mut pass = 0;
        for _ in 0..50 {
            let b = sample(5, 1.0, &mut rng).unwrap();
            if generic_hypoellipticity(&b, 1e-10).unwrap().pass {
                pass += 1;
            }
        }
        assert!(pass >= 49, "hypoellipticity pass rate too low: {pass}/50");
    }

    #[test]
    fn witness_certifies_its_own_pair_only_in_general() {
        // the witness is built for (0, 1); other pairs may or may not pass,
        // but the (0, 1) margin must be exactly 1
        let w = witness_tensor(5).unwrap();
        let report = generic_hypoellipticity(&w, 1e-10).unwrap();
        let own = report.pairs.iter().find(|p| p.i == 0 && p.j == 1).unwrap();
        assert_eq!(own.g_normalized, 1.0);
        assert!(own.pass);
    }

    #[test]
    fn linear_drift_does_not_move_the_ladder() {
        let mut rng = stream(53);
        let b = sample(5, 1.0, &mut rng).unwrap();
        let base = ladder(&b, 0, 1).unwrap();
        for _ in 0..10 {
            let eps = rng::uniform(&mut rng, 0.0, 1.0);
            let m = Mat::from_fn(5, 5, |_, _| rng::uniform(&mut rng, -2.0, 2.0));
            let aug = ladder_with_linear_drift(&b, 0, 1, eps, &m).unwrap();
            let scale = base.g.abs().max(1e-300);
            assert!((aug.g - base.g).abs() <= 1e-12 * scale);
            for (u, v) in aug.vectors.iter().zip(&base.vectors) {
                for (a, c) in u.iter().zip(v) {
                    assert!((a - c).abs() <= 1e-12 * norm(v).max(1.0));
                }
            }
        }
    }

    #[test]
    fn fd_oracle_reproduces_determinant() {
        let mut rng = stream(57);
        for _ in 0..5 {
            let b = sample(5, 1.0, &mut rng).unwrap();
            let exact = ladder(&b, 0, 1).unwrap();
            let fd = ladder_impl(&b, 0, 1, &|c, v, w| {
                let field = |y: &[f64]| c.evaluate(y, y).unwrap();
                fd_double_bracket(&field, v, w, &vec![0.0; 5], 1e-4)
            })
            .unwrap();
            let scale = exact.g.abs().max(1e-300);
            assert!(
                (fd.g - exact.g).abs() <= 1e-8 * scale,
                "fd {} vs exact {}",
                fd.g,
                exact.g
            );
        }
    }

    #[test]
    fn determinant_is_homogeneous_of_predicted_degree() {
        // deg(v_1) = deg(v_2) = 0, deg(v_{m+2}) = deg(v_m) + deg(v_{m+1}) + 1
        let d = 5;
        let mut degs = vec![0u32, 0];
        for m in 0..(d - 2) {
            let next = degs[m] + degs[m + 1] + 1;
            degs.push(next);
        }
        let total: u32 = degs.iter().sum();

        let mut rng = stream(59);
        let basis = crate::tensor::class_basis(d).unwrap();
        let coeffs: Vec<f64> = (0..basis.len()).map(|_| rng::uniform(&mut rng, -1.0, 1.0)).collect();
        let b = basis.combine(&coeffs);
        let b2 = basis.combine(&coeffs.iter().map(|c| 2.0 * c).collect::<Vec<_>>());
        let g1 = ladder(&b, 0, 1).unwrap().g;
        let g2 = ladder(&b2, 0, 1).unwrap().g;
        let factor = libm_pow2(total);
        assert!((g2 - factor * g1).abs() <= 1e-12 * (factor * g1).abs().max(1e-300));
    }

    fn libm_pow2(p: u32) -> f64 {
        let mut f = 1.0;
        for _ in 0..p {
            f *= 2.0;
        }
        f
    }

    #[test]
    fn ordered_pairs_are_distinct_certificates() {
        // stage >= 1 brackets against the slot-1 vector, so (i, j) and
        // (j, i) are different polynomials; both must still anchor their
        // own pair correctly
        let mut rng = stream(61);
        let b = sample(5, 1.0, &mut rng).unwrap();
        for (i, j) in [(0usize, 1usize), (2, 4)] {
            let fwd = ladder(&b, i, j).unwrap();
            let rev = ladder(&b, j, i).unwrap();
            assert_eq!(fwd.vectors[0], basis_vec(5, i));
            assert_eq!(fwd.vectors[1], basis_vec(5, j));
            assert_eq!(rev.vectors[0], basis_vec(5, j));
            assert_eq!(rev.vectors[1], basis_vec(5, i));
            assert!(fwd.g != 0.0 && rev.g != 0.0);
        }
    }

    #[test]
    fn transported_frame_is_exactly_invariant() {
        let mut rng = stream(63);
        let b = sample(5, 1.0, &mut rng).unwrap();
        // pi maps new -> old coordinates; t is the pulled-back tensor
        let pi = [3usize, 0, 4, 1, 2];
        let t = relabel(&b, &pi);
        let mut pi_inv = [0usize; 5];
        for (new, &old) in pi.iter().enumerate() {
            pi_inv[old] = new;
        }
        let frame_b = [0usize, 1, 2, 3, 4];
        let frame_t: Vec<usize> = frame_b.iter().map(|&s| pi_inv[s]).collect();
        let g_b = ladder_with_frame(&b, &frame_b).unwrap().g;
        let g_t = ladder_with_frame(&t, &frame_t).unwrap().g;
        assert_eq!(g_b, g_t, "transported frames must agree bit for bit");
    }
}
