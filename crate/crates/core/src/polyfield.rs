//! Polynomial vector fields with exact Lie brackets.
//!
//! All drift fields in this project are polynomial (the bilinear drift has
//! degree 2, forcing directions are constant), and iterated Lie brackets of
//! polynomial fields stay polynomial. Representing fields exactly as sparse
//! multivariate polynomials lets bracket spans be computed without any
//! differencing error. The bracket convention is `[X, Y] = DY.X - DX.Y`.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use crate::error::{CoreError, Result};
use crate::matrix::Mat;
use crate::tensor::CoefficientTensor;

/// Exponent multi-index of a monomial.
type Exps = Vec<u8>;

/// A scalar polynomial in `d` variables: monomial exponents -> coefficient.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Poly {
    terms: BTreeMap<Exps, f64>,
}

impl Poly {
    fn insert(&mut self, exps: Exps, coeff: f64) {
        if coeff == 0.0 {
            return;
        }
        match self.terms.entry(exps) {
            alloc::collections::btree_map::Entry::Vacant(e) => {
                e.insert(coeff);
            }
            alloc::collections::btree_map::Entry::Occupied(mut e) => {
                let v = e.get_mut();
                *v += coeff;
                if *v == 0.0 {
                    e.remove();
                }
            }
        }
    }

    fn derivative(&self, var: usize) -> Poly {
        let mut out = Poly::default();
        for (exps, &c) in &self.terms {
            let p = exps[var];
            if p > 0 {
                let mut e = exps.clone();
                e[var] = p - 1;
                out.insert(e, c * p as f64);
            }
        }
        out
    }

    fn mul(&self, other: &Poly) -> Poly {
        let mut out = Poly::default();
        for (ea, &ca) in &self.terms {
            for (eb, &cb) in &other.terms {
                let e: Exps = ea.iter().zip(eb).map(|(a, b)| a + b).collect();
                out.insert(e, ca * cb);
            }
        }
        out
    }

    fn add_scaled(&mut self, other: &Poly, s: f64) {
        for (e, &c) in &other.terms {
            self.insert(e.clone(), s * c);
        }
    }

    fn eval(&self, x: &[f64]) -> f64 {
        let mut acc = 0.0;
        for (exps, &c) in &self.terms {
            let mut m = c;
            for (var, &p) in exps.iter().enumerate() {
                for _ in 0..p {
                    m *= x[var];
                }
            }
            acc += m;
        }
        acc
    }

    fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    fn degree(&self) -> usize {
        self.terms
            .keys()
            .map(|e| e.iter().map(|&p| p as usize).sum())
            .max()
            .unwrap_or(0)
    }
}

/// A polynomial vector field on `R^d`.
#[derive(Debug, Clone, PartialEq)]
pub struct PolyVec {
    d: usize,
    components: Vec<Poly>,
}

impl PolyVec {
    pub fn zero(d: usize) -> Self {
        PolyVec { d, components: vec![Poly::default(); d] }
    }

    /// The constant field `x -> v`.
    pub fn constant(v: &[f64]) -> Self {
        let d = v.len();
        let mut f = PolyVec::zero(d);
        for (i, &c) in v.iter().enumerate() {
            f.components[i].insert(vec![0; d], c);
        }
        f
    }

    /// The linear field `x -> M x`.
    pub fn linear(m: &Mat) -> Self {
        let d = m.rows();
        assert_eq!(m.cols(), d);
        let mut f = PolyVec::zero(d);
        for i in 0..d {
            for j in 0..d {
                let c = m[(i, j)];
                if c != 0.0 {
                    let mut e = vec![0u8; d];
                    e[j] = 1;
                    f.components[i].insert(e, c);
                }
            }
        }
        f
    }

    /// The quadratic field `x -> B(x, x)` of a coefficient tensor.
    pub fn quadratic(b: &CoefficientTensor) -> Self {
        let d = b.dim();
        let mut f = PolyVec::zero(d);
        for i in 0..d {
            for j in 0..d {
                for k in j..d {
                    let c = b.get(i, j, k);
                    if c != 0.0 {
                        let mut e = vec![0u8; d];
                        e[j] += 1;
                        e[k] += 1;
                        let w = if j == k { c } else { 2.0 * c };
                        f.components[i].insert(e, w);
                    }
                }
            }
        }
        f
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn add_scaled(&mut self, other: &PolyVec, s: f64) {
        assert_eq!(self.d, other.d);
        for (a, b) in self.components.iter_mut().zip(&other.components) {
            a.add_scaled(b, s);
        }
    }

    pub fn is_zero(&self) -> bool {
        self.components.iter().all(Poly::is_zero)
    }

    pub fn degree(&self) -> usize {
        self.components.iter().map(Poly::degree).max().unwrap_or(0)
    }

    pub fn eval(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.d);
        self.components.iter().map(|p| p.eval(x)).collect()
    }

    /// Lie bracket `[self, other] = D(other).self - D(self).other`.
    pub fn bracket(&self, other: &PolyVec) -> PolyVec {
        assert_eq!(self.d, other.d);
        let d = self.d;
        let mut out = PolyVec::zero(d);
        for i in 0..d {
            let mut comp = Poly::default();
            for j in 0..d {
                let dy = other.components[i].derivative(j);
                if !dy.is_zero() && !self.components[j].is_zero() {
                    comp.add_scaled(&dy.mul(&self.components[j]), 1.0);
                }
                let dx = self.components[i].derivative(j);
                if !dx.is_zero() && !other.components[j].is_zero() {
                    comp.add_scaled(&dx.mul(&other.components[j]), -1.0);
                }
            }
            out.components[i] = comp;
        }
        out
    }
}

/// Maximum supported bracket depth; the field count grows geometrically.
pub const MAX_BRACKET_DEPTH: usize = 4;

/// Result of a numeric bracket-span computation.
#[derive(Debug, Clone)]
pub struct BracketSpan {
    /// Rank of the collected field values at the evaluation point.
    pub rank: usize,
    /// Number of distinct fields collected.
    pub n_fields: usize,
    pub depth: usize,
}

/// Builds the bracket sets `V_0, ..., V_depth` for the drift
/// `B(x,x) - eps * A x` and the constant forcing fields `sigma_m e_m`, and
/// returns the rank of the collected field values at `x`.
///
/// `V_0` holds the forcing fields; `V_k` extends `V_{k-1}` with the brackets
/// of every generator (drift plus forcing fields) against every element of
/// `V_{k-1}`. Fields are kept exactly as polynomials and deduped.
pub fn numeric_bracket_span(
    b: &CoefficientTensor,
    damp_a: &Mat,
    eps: f64,
    sigma: &[f64],
    x: &[f64],
    depth: usize,
) -> Result<BracketSpan> {
    let d = b.dim();
    if depth > MAX_BRACKET_DEPTH {
        return Err(CoreError::DepthError { depth, max: MAX_BRACKET_DEPTH });
    }
    if sigma.len() != d {
        return Err(CoreError::DimensionError { expected: d, got: sigma.len() });
    }
    if x.len() != d {
        return Err(CoreError::DimensionError { expected: d, got: x.len() });
    }

    let mut drift = PolyVec::quadratic(b);
    drift.add_scaled(&PolyVec::linear(damp_a), -eps);

    let mut forcing: Vec<PolyVec> = Vec::new();
    for (m, &s) in sigma.iter().enumerate() {
        if s != 0.0 {
            let mut e = vec![0.0; d];
            e[m] = s;
            forcing.push(PolyVec::constant(&e));
        }
    }

    let mut generators: Vec<PolyVec> = Vec::with_capacity(forcing.len() + 1);
    generators.push(drift);
    generators.extend(forcing.iter().cloned());

    let mut collected: Vec<PolyVec> = forcing.clone();
    let mut frontier: Vec<PolyVec> = forcing;
    for _ in 0..depth {
        let mut next: Vec<PolyVec> = Vec::new();
        for g in &generators {
            for y in &frontier {
                let br = g.bracket(y);
                if br.is_zero() || collected.contains(&br) || next.contains(&br) {
                    continue;
                }
                next.push(br);
            }
        }
        collected.extend(next.iter().cloned());
        frontier = next;
        if frontier.is_empty() {
            break;
        }
    }

    let n_fields = collected.len();
    let rank = if n_fields == 0 {
        0
    } else {
        let mut m = Mat::zeros(n_fields, d);
        for (r, f) in collected.iter().enumerate() {
            let v = f.eval(x);
            for c in 0..d {
                m[(r, c)] = v[c];
            }
        }
        m.rank(1e-9)
    };
    Ok(BracketSpan { rank, n_fields, depth })
}

/// Central-difference evaluation of the double bracket `[v, [w, F]](x)` for
/// constant directions `v`, `w` and an arbitrary field `F`.
///
/// Second-order central differences are exact (up to rounding) on quadratic
/// fields, which covers the bilinear drift and its linear augmentations;
/// this is the independent oracle for the closed-form brackets used by the
/// inductive ladder.
pub fn fd_double_bracket(
    field: &dyn Fn(&[f64]) -> Vec<f64>,
    v: &[f64],
    w: &[f64],
    x: &[f64],
    h: f64,
) -> Vec<f64> {
    let d = x.len();
    let shift = |base: &[f64], dir: &[f64], s: f64| -> Vec<f64> {
        base.iter().zip(dir).map(|(a, b)| a + s * b).collect()
    };
    // g(y) = DF(y) . w via central difference
    let g = |y: &[f64]| -> Vec<f64> {
        let fp = field(&shift(y, w, h));
        let fm = field(&shift(y, w, -h));
        fp.iter().zip(&fm).map(|(a, b)| (a - b) / (2.0 * h)).collect()
    };
    let gp = g(&shift(x, v, h));
    let gm = g(&shift(x, v, -h));
    (0..d).map(|i| (gp[i] - gm[i]) / (2.0 * h)).collect()
}
