//! Coefficient tensors of conservative bilinear vector fields.
//!
//! A bilinear field `B(x,y)` on `R^d` is stored through its coefficient
//! tensor `b = (b^i_{jk})`, symmetric in the lower indices. The admissible
//! tensors form a linear subspace cut out by three families of identities:
//!
//! * symmetry `b^i_{jk} = b^i_{kj}` (guaranteed by storage here),
//! * the zero pattern `b^i_{ii} = b^i_{ij} = b^i_{jj} = 0`,
//! * the cyclic identity `b^i_{jk} + b^j_{ik} + b^k_{ij} = 0`.
//!
//! Together these are equivalent to the quadratic field `B(x,x)` conserving
//! `|x|^2`, being divergence-free, and vanishing on all coordinate axes. The
//! subspace has exactly `2 * C(d,3)` degrees of freedom: per unordered triple
//! `{i,j,k}` the two slots with the smaller superscripts are free and the
//! third is determined by the cyclic identity.
//!
//! All indices in this module are 0-based.

use alloc::vec::Vec;

use crate::error::{CoreError, Result};
use crate::math;
use crate::rng::{self, Stream};

/// Tolerance for the linear membership identities, relative to `max|b|`.
pub const ALGEBRAIC_TOL: f64 = 1e-12;

/// A symmetric coefficient tensor with the constraint-class zero pattern.
///
/// Storage is dense triangular: for each output index `i` the entries
/// `b^i_{jk}` with `j <= k` are kept, so lower-index symmetry holds exactly.
/// Instances are immutable once built and cheap to share between threads.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientTensor {
    d: usize,
    /// `d` blocks of `d*(d+1)/2` upper-triangle entries.
    coeffs: Vec<f64>,
}

#[inline(always)]
fn tri_index(d: usize, j: usize, k: usize) -> usize {
    debug_assert!(j <= k && k < d);
    j * (2 * d - j + 1) / 2 + (k - j)
}

impl CoefficientTensor {
    /// The zero tensor (a valid member for any `d >= 3`).
    pub fn zero(d: usize) -> Result<Self> {
        if d < 3 {
            return Err(CoreError::InvalidDimension { d, requirement: "constraint class needs d >= 3" });
        }
        Ok(CoefficientTensor { d, coeffs: vec![0.0; d * (d * (d + 1) / 2)] })
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    /// Coefficient `b^i_{jk}`.
    #[inline(always)]
    pub fn get(&self, i: usize, j: usize, k: usize) -> f64 {
        let (lo, hi) = if j <= k { (j, k) } else { (k, j) };
        self.coeffs[i * (self.d * (self.d + 1) / 2) + tri_index(self.d, lo, hi)]
    }

    #[inline(always)]
    fn set(&mut self, i: usize, j: usize, k: usize, v: f64) {
        let (lo, hi) = if j <= k { (j, k) } else { (k, j) };
        let idx = i * (self.d * (self.d + 1) / 2) + tri_index(self.d, lo, hi);
        self.coeffs[idx] = v;
    }

    /// Largest absolute coefficient.
    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().fold(0.0, |m, c| m.max(math::abs(*c)))
    }

    /// The tensor scaled by `s` (the class is linear, so membership is
    /// preserved).
    pub fn scaled(&self, s: f64) -> Self {
        let mut t = self.clone();
        for c in t.coeffs.iter_mut() {
            *c *= s;
        }
        t
    }

    /// `B(x, y)`, written into `out`. This is the hot path of every
    /// integrator, so it avoids allocation.
    pub fn evaluate_into(&self, x: &[f64], y: &[f64], out: &mut [f64]) {
        let d = self.d;
        debug_assert!(x.len() == d && y.len() == d && out.len() == d);
        let block = d * (d + 1) / 2;
        for i in 0..d {
            let row = &self.coeffs[i * block..(i + 1) * block];
            let mut acc = 0.0;
            let mut idx = 0;
            for j in 0..d {
                let xj = x[j];
                let yj = y[j];
                // j == k term (always a zero coefficient for members, but kept
                // so the contraction is faithful to the stored array)
                acc += row[idx] * xj * yj;
                idx += 1;
                for k in (j + 1)..d {
                    acc += row[idx] * (xj * y[k] + x[k] * yj);
                    idx += 1;
                }
            }
            out[i] = acc;
        }
    }

    /// `B(x, y)` with dimension checking.
    pub fn evaluate(&self, x: &[f64], y: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.d {
            return Err(CoreError::DimensionError { expected: self.d, got: x.len() });
        }
        if y.len() != self.d {
            return Err(CoreError::DimensionError { expected: self.d, got: y.len() });
        }
        let mut out = vec![0.0; self.d];
        self.evaluate_into(x, y, &mut out);
        Ok(out)
    }

    /// Divergence of the quadratic field at `x`: `2 sum_{i,k} b^i_{ik} x^k`.
    ///
    /// Identically zero on members of the class (the zero pattern forces
    /// every `b^i_{ik}` to vanish); exposed so raw arrays can be checked.
    pub fn divergence(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.d {
            return Err(CoreError::DimensionError { expected: self.d, got: x.len() });
        }
        let mut acc = 0.0;
        for i in 0..self.d {
            for k in 0..self.d {
                acc += self.get(i, i, k) * x[k];
            }
        }
        Ok(2.0 * acc)
    }

    /// Dense `d^3` expansion with layout `vals[(i*d + j)*d + k] = b^i_{jk}`.
    pub fn to_raw(&self) -> RawTensor {
        let d = self.d;
        let mut vals = vec![0.0; d * d * d];
        for i in 0..d {
            for j in 0..d {
                for k in 0..d {
                    vals[(i * d + j) * d + k] = self.get(i, j, k);
                }
            }
        }
        RawTensor { d, vals }
    }

    /// Frobenius norm of the dense `d^3` expansion.
    pub fn frobenius_norm(&self) -> f64 {
        let mut acc = 0.0;
        for i in 0..self.d {
            for j in 0..self.d {
                for k in j..self.d {
                    let c = self.get(i, j, k);
                    acc += if j == k { c * c } else { 2.0 * c * c };
                }
            }
        }
        math::sqrt(acc)
    }

    /// Membership report for this tensor (symmetry residual is structurally
    /// zero thanks to the triangular storage).
    pub fn membership(&self) -> MembershipReport {
        verify_membership(&self.to_raw())
    }
}

/// An arbitrary dense `d x d x d` array, not necessarily in the class.
#[derive(Debug, Clone, PartialEq)]
pub struct RawTensor {
    d: usize,
    vals: Vec<f64>,
}

impl RawTensor {
    pub fn new(d: usize, vals: Vec<f64>) -> Result<Self> {
        if vals.len() != d * d * d {
            return Err(CoreError::DimensionError { expected: d * d * d, got: vals.len() });
        }
        Ok(RawTensor { d, vals })
    }

    pub fn zeros(d: usize) -> Self {
        RawTensor { d, vals: vec![0.0; d * d * d] }
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    #[inline(always)]
    pub fn get(&self, i: usize, j: usize, k: usize) -> f64 {
        self.vals[(i * self.d + j) * self.d + k]
    }

    pub fn set(&mut self, i: usize, j: usize, k: usize, v: f64) {
        self.vals[(i * self.d + j) * self.d + k] = v;
    }

    pub fn max_abs(&self) -> f64 {
        self.vals.iter().fold(0.0, |m, c| m.max(math::abs(*c)))
    }

    pub fn frobenius_norm(&self) -> f64 {
        math::sqrt(self.vals.iter().map(|c| c * c).sum())
    }
}

/// Which of the two free slots of a triple a basis element excites.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FreeSlot {
    /// `b^i_{jk}` for the triple `i < j < k`.
    Low,
    /// `b^j_{ik}` for the triple `i < j < k`.
    Mid,
}

/// Coordinates of one free degree of freedom.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FreeCoord {
    /// The unordered triple, stored as `i < j < k`.
    pub triple: (usize, usize, usize),
    pub slot: FreeSlot,
}

/// A basis of the constraint class in free coordinates.
///
/// Basis elements are enumerated per triple `{i<j<k}` in lexicographic
/// order, `Low` slot before `Mid` slot, so the layout of free-coordinate
/// vectors is canonical.
#[derive(Debug, Clone)]
pub struct ClassBasis {
    d: usize,
    free_index_map: Vec<FreeCoord>,
}

/// Builds the canonical basis of the class for dimension `d`.
///
/// Each triple `{i<j<k}` contributes two elements: one with `b^i_{jk} = 1`
/// and one with `b^j_{ik} = 1`, both completed by `b^k_{ij} = -(b^i_{jk} +
/// b^j_{ik})`. The count is `2 * C(d,3)`.
pub fn class_basis(d: usize) -> Result<ClassBasis> {
    if d < 3 {
        return Err(CoreError::InvalidDimension { d, requirement: "constraint class needs d >= 3" });
    }
    let mut free_index_map = Vec::with_capacity(2 * binomial3(d));
    for i in 0..d {
        for j in (i + 1)..d {
            for k in (j + 1)..d {
                free_index_map.push(FreeCoord { triple: (i, j, k), slot: FreeSlot::Low });
                free_index_map.push(FreeCoord { triple: (i, j, k), slot: FreeSlot::Mid });
            }
        }
    }
    Ok(ClassBasis { d, free_index_map })
}

fn binomial3(d: usize) -> usize {
    d * (d - 1) * (d - 2) / 6
}

impl ClassBasis {
    pub fn dim(&self) -> usize {
        self.d
    }

    /// Number of free coordinates, `2 * C(d,3)`.
    pub fn len(&self) -> usize {
        self.free_index_map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.free_index_map.is_empty()
    }

    pub fn free_index_map(&self) -> &[FreeCoord] {
        &self.free_index_map
    }

    /// The `m`-th basis tensor.
    pub fn element(&self, m: usize) -> CoefficientTensor {
        let mut c = vec![0.0; self.len()];
        c[m] = 1.0;
        self.combine(&c)
    }

    /// All basis tensors. Mostly useful for rank checks; prefer
    /// [`ClassBasis::combine`] for building members.
    pub fn elements(&self) -> Vec<CoefficientTensor> {
        (0..self.len()).map(|m| self.element(m)).collect()
    }

    /// `sum_m coeffs[m] * basis_m`, assembled directly in tensor storage.
    pub fn combine(&self, coeffs: &[f64]) -> CoefficientTensor {
        assert_eq!(coeffs.len(), self.len(), "free coordinate count mismatch");
        let mut t = CoefficientTensor::zero(self.d).expect("basis dimension already validated");
        for (pair, fc) in coeffs.chunks_exact(2).zip(self.free_index_map.chunks_exact(2)) {
            let (i, j, k) = fc[0].triple;
            let (low, mid) = (pair[0], pair[1]);
            if low != 0.0 || mid != 0.0 {
                t.set(i, j, k, low);
                t.set(j, i, k, mid);
                t.set(k, i, j, -(low + mid));
            }
        }
        t
    }

    /// Reads the free coordinates of a member back out of its storage.
    pub fn extract(&self, t: &CoefficientTensor) -> Vec<f64> {
        assert_eq!(t.dim(), self.d, "tensor dimension mismatch");
        self.free_index_map
            .iter()
            .map(|fc| {
                let (i, j, k) = fc.triple;
                match fc.slot {
                    FreeSlot::Low => t.get(i, j, k),
                    FreeSlot::Mid => t.get(j, i, k),
                }
            })
            .collect()
    }

    /// Flattens all basis elements into a `len x d^3` matrix (for rank checks).
    pub fn flattened(&self) -> crate::matrix::Mat {
        let n = self.len();
        let d3 = self.d * self.d * self.d;
        let mut m = crate::matrix::Mat::zeros(n, d3);
        for r in 0..n {
            let raw = self.element(r).to_raw();
            for c in 0..d3 {
                m[(r, c)] = raw.vals[c];
            }
        }
        m
    }
}

/// Draws a member of the class with free coordinates i.i.d. uniform on
/// `[-scale, scale]`.
///
/// Any absolutely continuous law realizes "generic"; the uniform box is
/// reproducible and bounded.
pub fn sample(d: usize, scale: f64, rng: &mut Stream) -> Result<CoefficientTensor> {
    let basis = class_basis(d)?;
    let coeffs: Vec<f64> = (0..basis.len()).map(|_| rng::uniform(rng, -scale, scale)).collect();
    Ok(basis.combine(&coeffs))
}

/// Euclidean-orthogonal projection of a raw array onto the class.
///
/// Basis elements of distinct triples touch disjoint slots, so the Gram
/// matrix is block diagonal with identical `[[4,2],[2,4]]` blocks and the
/// projection reduces to a closed form per triple. Idempotent; fixes
/// members; contracts the Frobenius norm.
pub fn project(raw: &RawTensor) -> Result<CoefficientTensor> {
    let d = raw.d;
    let basis = class_basis(d)?;
    let mut coeffs = Vec::with_capacity(basis.len());
    for fc in basis.free_index_map.chunks_exact(2) {
        let (i, j, k) = fc[0].triple;
        // inner products with the two basis elements of this triple
        let a = raw.get(i, j, k) + raw.get(i, k, j) - raw.get(k, i, j) - raw.get(k, j, i);
        let b = raw.get(j, i, k) + raw.get(j, k, i) - raw.get(k, i, j) - raw.get(k, j, i);
        coeffs.push((2.0 * a - b) / 6.0);
        coeffs.push((2.0 * b - a) / 6.0);
    }
    Ok(basis.combine(&coeffs))
}

/// Residuals of the three identity families on a raw array.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MembershipReport {
    pub d: usize,
    /// `max |b^i_{jk} - b^i_{kj}|`.
    pub symmetry: f64,
    /// `max` over `|b^i_{ii}|`, `|b^i_{ij}|`, `|b^i_{jj}|`.
    pub zero_pattern: f64,
    /// `max |b^i_{jk} + b^j_{ik} + b^k_{ij}|`.
    pub jacobi: f64,
    /// `max |b|`, the scale the relative tolerance refers to.
    pub scale: f64,
}

impl MembershipReport {
    pub fn max_residual(&self) -> f64 {
        self.symmetry.max(self.zero_pattern).max(self.jacobi)
    }

    /// Pass/fail at a relative tolerance (`tol = 0` demands exact zeros).
    pub fn passes(&self, tol: f64) -> bool {
        self.max_residual() <= tol * self.scale
    }
}

/// Checks all identity families on a raw `d^3` array.
pub fn verify_membership(raw: &RawTensor) -> MembershipReport {
    let d = raw.d;
    let mut symmetry = 0.0f64;
    let mut zero_pattern = 0.0f64;
    let mut jacobi = 0.0f64;
    for i in 0..d {
        for j in 0..d {
            for k in j..d {
                symmetry = symmetry.max(math::abs(raw.get(i, j, k) - raw.get(i, k, j)));
                if i == j || i == k || j == k {
                    zero_pattern = zero_pattern.max(math::abs(raw.get(i, j, k)));
                }
                jacobi = jacobi.max(math::abs(
                    raw.get(i, j, k) + raw.get(j, i, k) + raw.get(k, i, j),
                ));
            }
        }
    }
    MembershipReport { d, symmetry, zero_pattern, jacobi, scale: raw.max_abs() }
}

/// The cyclic advection tensor: `(B(x,x))_k = (x_{k+1} - x_{k-2}) x_{k-1}`
/// with indices mod `d`.
///
/// Coefficients: `b^k_{k-1,k+1} = 1/2` and `b^k_{k-2,k-1} = -1/2`. Needs
/// `d >= 4`; below that the two slots collide.
pub fn lorenz96(d: usize) -> Result<CoefficientTensor> {
    if d < 4 {
        return Err(CoreError::InvalidDimension { d, requirement: "cyclic advection needs d >= 4" });
    }
    let mut t = CoefficientTensor::zero(d)?;
    for k in 0..d {
        let km1 = (k + d - 1) % d;
        let km2 = (k + d - 2) % d;
        let kp1 = (k + 1) % d;
        t.set(k, km1, kp1, 0.5);
        t.set(k, km2, km1, -0.5);
    }
    Ok(t)
}

/// The inductive witness tensor certifying the bracket-ladder determinant.
///
/// Stage `m` (0-based, `m <= d-3`) arranges `b^{m+2}_{m,m+1} = 1` by setting
/// the free slots of the triple `{m, m+1, m+2}` to `b^m_{m+1,m+2} = -1` and
/// `b^{m+1}_{m,m+2} = 0`; every other triple is zero. All entries are exact
/// small integers.
pub fn witness_tensor(d: usize) -> Result<CoefficientTensor> {
    let mut t = CoefficientTensor::zero(d)?;
    for m in 0..=(d - 3) {
        t.set(m, m + 1, m + 2, -1.0);
        t.set(m + 2, m, m + 1, 1.0);
    }
    Ok(t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix;
    use crate::rng::stream;

    fn random_vec(d: usize, rng: &mut Stream) -> Vec<f64> {
        (0..d).map(|_| rng::uniform(rng, -1.0, 1.0)).collect()
    }

    #[test]
    fn basis_cardinality() {
        assert_eq!(class_basis(3).unwrap().len(), 2);
        assert_eq!(class_basis(4).unwrap().len(), 8);
        assert_eq!(class_basis(5).unwrap().len(), 20);
        assert!(matches!(class_basis(2), Err(CoreError::InvalidDimension { .. })));
    }

    #[test]
    fn basis_elements_are_members_and_independent() {
        for d in [3, 4, 5] {
            let basis = class_basis(d).unwrap();
            for el in basis.elements() {
                assert!(el.membership().passes(0.0), "basis element violates identities");
            }
            // linear independence via the rank of the flattened matrix
            assert_eq!(basis.flattened().rank(1e-12), basis.len());
        }
    }

    #[test]
    fn sample_satisfies_identities() {
        let mut rng = stream(7);
        for d in [3, 5, 8] {
            let b = sample(d, 1.0, &mut rng).unwrap();
            let rep = b.membership();
            assert_eq!(rep.symmetry, 0.0);
            assert_eq!(rep.zero_pattern, 0.0);
            assert!(rep.passes(ALGEBRAIC_TOL));
        }
    }

    #[test]
    fn sample_scale_zero_gives_zero_tensor() {
        let mut rng = stream(3);
        let b = sample(4, 0.0, &mut rng).unwrap();
        assert_eq!(b.max_abs(), 0.0);
        assert!(b.membership().passes(0.0));
    }

    #[test]
    fn sample_is_deterministic_in_the_seed() {
        let a = sample(5, 2.0, &mut stream(123)).unwrap();
        let b = sample(5, 2.0, &mut stream(123)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn energy_and_divergence_vanish_on_members() {
        let mut rng = stream(11);
        let b = sample(6, 1.0, &mut rng).unwrap();
        let scale = b.max_abs();
        for _ in 0..200 {
            let x = random_vec(6, &mut rng);
            let bx = b.evaluate(&x, &x).unwrap();
            let nx = matrix::norm(&x);
            assert!(matrix::dot(&x, &bx).abs() <= 1e-10 * scale * nx * nx * nx);
            assert!(b.divergence(&x).unwrap().abs() <= 1e-12 * scale * nx);
        }
    }

    #[test]
    fn evaluate_vanishes_on_axes_and_is_symmetric() {
        let mut rng = stream(13);
        let b = sample(5, 1.0, &mut rng).unwrap();
        for j in 0..5 {
            let e = matrix::basis_vec(5, j);
            assert!(matrix::norm(&b.evaluate(&e, &e).unwrap()) == 0.0);
        }
        let x = random_vec(5, &mut rng);
        let y = random_vec(5, &mut rng);
        assert_eq!(b.evaluate(&x, &y).unwrap(), b.evaluate(&y, &x).unwrap());
    }

    #[test]
    fn evaluate_checks_dimensions() {
        let b = lorenz96(5).unwrap();
        let short = vec![1.0; 4];
        let ok = vec![1.0; 5];
        assert!(matches!(b.evaluate(&short, &ok), Err(CoreError::DimensionError { .. })));
    }

    #[test]
    fn divergence_detects_pattern_violation() {
        // b^0_{01} = 1 symmetrized violates the zero pattern; its divergence
        // at e_1 is 2 * b^0_{01} = 2.
        let mut t = CoefficientTensor::zero(3).unwrap();
        t.set(0, 0, 1, 1.0);
        let x = matrix::basis_vec(3, 1);
        assert!((t.divergence(&x).unwrap() - 2.0).abs() < 1e-15);
        let zero = CoefficientTensor::zero(3).unwrap();
        assert_eq!(zero.divergence(&x).unwrap(), 0.0);
    }

    #[test]
    fn projection_fixes_members_and_contracts() {
        let mut rng = stream(17);
        let b = sample(5, 1.0, &mut rng).unwrap();
        let p = project(&b.to_raw()).unwrap();
        let diff_scale = b.max_abs();
        for i in 0..5 {
            for j in 0..5 {
                for k in 0..5 {
                    assert!((p.get(i, j, k) - b.get(i, j, k)).abs() <= 1e-12 * diff_scale);
                }
            }
        }
        assert_eq!(project(&RawTensor::zeros(4)).unwrap().max_abs(), 0.0);

        let raw = RawTensor::new(4, (0..64).map(|n| ((n * 37 % 19) as f64) - 9.0).collect()).unwrap();
        let proj = project(&raw).unwrap();
        assert!(proj.frobenius_norm() <= raw.frobenius_norm() + 1e-12);
        assert!(proj.membership().passes(ALGEBRAIC_TOL));
        // idempotence
        let twice = project(&proj.to_raw()).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                for k in 0..4 {
                    assert!((twice.get(i, j, k) - proj.get(i, j, k)).abs() <= 1e-12 * proj.max_abs());
                }
            }
        }
    }

    #[test]
    fn lorenz96_membership_and_oracle() {
        assert!(matches!(lorenz96(3), Err(CoreError::InvalidDimension { .. })));
        for d in [4, 5, 6, 9] {
            let b = lorenz96(d).unwrap();
            assert!(b.membership().passes(0.0), "cyclic advection must pass exactly");
            let mut rng = stream(d as u64);
            for _ in 0..50 {
                let x = random_vec(d, &mut rng);
                let bx = b.evaluate(&x, &x).unwrap();
                for k in 0..d {
                    let km1 = (k + d - 1) % d;
                    let km2 = (k + d - 2) % d;
                    let kp1 = (k + 1) % d;
                    let oracle = (x[kp1] - x[km2]) * x[km1];
                    assert!((bx[k] - oracle).abs() <= 1e-14);
                }
            }
        }
    }

    #[test]
    fn lorenz96_uniform_state_is_stationary() {
        let b = lorenz96(5).unwrap();
        let x = vec![1.0; 5];
        assert_eq!(matrix::norm(&b.evaluate(&x, &x).unwrap()), 0.0);
    }

    #[test]
    fn lorenz96_mixed_basis_contraction() {
        // evaluate(b, e_{k-1}, e_{k+1}) = (1/2) e_k, indices mod 5
        let b = lorenz96(5).unwrap();
        for k in 0..5 {
            let ekm1 = matrix::basis_vec(5, (k + 4) % 5);
            let ekp1 = matrix::basis_vec(5, (k + 1) % 5);
            let v = b.evaluate(&ekm1, &ekp1).unwrap();
            for i in 0..5 {
                let want = if i == k { 0.5 } else { 0.0 };
                assert_eq!(v[i], want);
            }
        }
    }

    #[test]
    fn membership_flags_bad_jacobi() {
        // symmetric b^0_{12} = 1 alone: cyclic residual 1 on the triple {0,1,2}
        let mut raw = RawTensor::zeros(3);
        raw.set(0, 1, 2, 1.0);
        raw.set(0, 2, 1, 1.0);
        let rep = verify_membership(&raw);
        assert_eq!(rep.symmetry, 0.0);
        assert_eq!(rep.zero_pattern, 0.0);
        assert_eq!(rep.jacobi, 1.0);
        assert!(!rep.passes(ALGEBRAIC_TOL));
    }

    #[test]
    fn witness_is_exact_member() {
        for d in [3, 4, 7, 10] {
            let w = witness_tensor(d).unwrap();
            assert!(w.membership().passes(0.0));
        }
        // evaluate(witness, e_0, e_1) has third component 1
        let w = witness_tensor(6).unwrap();
        let v = w
            .evaluate(&matrix::basis_vec(6, 0), &matrix::basis_vec(6, 1))
            .unwrap();
        assert_eq!(v[2], 1.0);
        for (i, &c) in v.iter().enumerate() {
            if i != 2 {
                assert_eq!(c, 0.0);
            }
        }
    }

    #[test]
    fn free_coordinates_round_trip() {
        let basis = class_basis(6).unwrap();
        let mut rng = stream(23);
        let coeffs: Vec<f64> = (0..basis.len()).map(|_| rng::uniform(&mut rng, -2.0, 2.0)).collect();
        let t = basis.combine(&coeffs);
        assert_eq!(basis.extract(&t), coeffs);
    }
}
