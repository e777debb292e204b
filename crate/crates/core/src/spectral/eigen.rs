//! Dense real eigensolver: Householder reduction to Hessenberg form followed
//! by implicitly shifted (Francis double-shift) QR iteration, with eigenvector
//! recovery by back substitution.
//!
//! This is the classic EISPACK/JAMA algorithm. Eigenvectors come out packed
//! in a real matrix: a real eigenvalue owns one column; a complex conjugate
//! pair `a ± ib` owns two adjacent columns holding the real and imaginary
//! parts of the eigenvector for `a + ib`. Those column pairs span the real
//! 2-dimensional invariant subspace of the pair, which is exactly what the
//! spectral splittings downstream need.

use alloc::vec::Vec;

use num_complex::Complex64;

use crate::error::{CoreError, Result};
use crate::math;
use crate::matrix::Mat;

const EPS: f64 = 2.220_446_049_250_313e-16;

/// Eigenvalues and packed real eigenvectors of a square real matrix.
#[derive(Debug, Clone)]
pub struct EigenDecomposition {
    /// Real parts, in QR deflation order (not sorted).
    pub re: Vec<f64>,
    /// Imaginary parts; complex pairs occupy adjacent slots `(+b, -b)`.
    pub im: Vec<f64>,
    /// Packed eigenvector matrix, columns aligned with `re`/`im`.
    pub vectors: Mat,
}

impl EigenDecomposition {
    pub fn n(&self) -> usize {
        self.re.len()
    }

    /// Eigenvalues sorted by `(Re, Im)` with multiplicity.
    pub fn sorted_eigenvalues(&self) -> Vec<Complex64> {
        let mut ev: Vec<Complex64> = self
            .re
            .iter()
            .zip(&self.im)
            .map(|(&a, &b)| Complex64::new(a, b))
            .collect();
        ev.sort_by(|p, q| {
            p.re.partial_cmp(&q.re)
                .unwrap_or(core::cmp::Ordering::Equal)
                .then(p.im.partial_cmp(&q.im).unwrap_or(core::cmp::Ordering::Equal))
        });
        ev
    }
}

/// Eigenvalues of `m` sorted by `(Re, Im)`.
///
/// The iteration cap is `100 * n` QR sweeps; exceeding it reports the
/// matrix's bit hash so the offending input can be identified.
pub fn spectrum(m: &Mat) -> Result<Vec<Complex64>> {
    let n = m.rows();
    Ok(eigen_decompose(m, 100 * n.max(1))?.sorted_eigenvalues())
}

/// Full decomposition with the given sweep cap.
pub fn eigen_decompose(a: &Mat, sweep_cap: usize) -> Result<EigenDecomposition> {
    assert_eq!(a.rows(), a.cols(), "eigendecomposition requires a square matrix");
    let n = a.rows();
    if n == 0 {
        return Ok(EigenDecomposition { re: vec![], im: vec![], vectors: Mat::zeros(0, 0) });
    }
    for v in a.data() {
        if !v.is_finite() {
            return Err(CoreError::SpectralFailure { sweeps: 0, matrix_hash: a.bit_hash() });
        }
    }
    let mut h: Vec<f64> = a.data().to_vec();
    let mut v = Mat::identity(n);
    orthes(n, &mut h, &mut v);
    let mut re = vec![0.0; n];
    let mut im = vec![0.0; n];
    hqr2(n, &mut h, &mut v, &mut re, &mut im, sweep_cap)
        .map_err(|sweeps| CoreError::SpectralFailure { sweeps, matrix_hash: a.bit_hash() })?;
    Ok(EigenDecomposition { re, im, vectors: v })
}

#[inline(always)]
fn idx(n: usize, i: usize, j: usize) -> usize {
    i * n + j
}

/// Householder reduction to upper Hessenberg form, accumulating the
/// orthogonal transformation in `v`.
fn orthes(n: usize, h: &mut [f64], v: &mut Mat) {
    if n < 3 {
        return;
    }
    let low = 0usize;
    let high = n - 1;
    let mut ort = vec![0.0; n];

    for m in (low + 1)..high {
        let mut scale = 0.0;
        for i in m..=high {
            scale += math::abs(h[idx(n, i, m - 1)]);
        }
        if scale != 0.0 {
            let mut hh = 0.0;
            for i in (m..=high).rev() {
                ort[i] = h[idx(n, i, m - 1)] / scale;
                hh += ort[i] * ort[i];
            }
            let mut g = math::sqrt(hh);
            if ort[m] > 0.0 {
                g = -g;
            }
            hh -= ort[m] * g;
            ort[m] -= g;

            for j in m..n {
                let mut f = 0.0;
                for i in (m..=high).rev() {
                    f += ort[i] * h[idx(n, i, j)];
                }
                f /= hh;
                for i in m..=high {
                    h[idx(n, i, j)] -= f * ort[i];
                }
            }
            for i in 0..=high {
                let mut f = 0.0;
                for j in (m..=high).rev() {
                    f += ort[j] * h[idx(n, i, j)];
                }
                f /= hh;
                for j in m..=high {
                    h[idx(n, i, j)] -= f * ort[j];
                }
            }
            ort[m] *= scale;
            h[idx(n, m, m - 1)] = scale * g;
        }
    }

    for m in ((low + 1)..high).rev() {
        if h[idx(n, m, m - 1)] != 0.0 {
            for i in (m + 1)..=high {
                ort[i] = h[idx(n, i, m - 1)];
            }
            for j in m..=high {
                let mut g = 0.0;
                for i in m..=high {
                    g += ort[i] * v[(i, j)];
                }
                g = (g / ort[m]) / h[idx(n, m, m - 1)];
                for i in m..=high {
                    v[(i, j)] += g * ort[i];
                }
            }
        }
    }
}

/// Robust complex division `(xr + i*xi) / (yr + i*yi)`.
fn cdiv(xr: f64, xi: f64, yr: f64, yi: f64) -> (f64, f64) {
    if math::abs(yr) > math::abs(yi) {
        let r = yi / yr;
        let den = yr + r * yi;
        ((xr + r * xi) / den, (xi - r * xr) / den)
    } else {
        let r = yr / yi;
        let den = r * yr + yi;
        ((r * xr + xi) / den, (r * xi - xr) / den)
    }
}

/// QR iteration on the Hessenberg matrix plus eigenvector back substitution.
/// Returns `Err(total_sweeps)` when the sweep cap is exhausted.
fn hqr2(
    nn: usize,
    h: &mut [f64],
    v: &mut Mat,
    d: &mut [f64],
    e: &mut [f64],
    sweep_cap: usize,
) -> core::result::Result<(), usize> {
    let low = 0usize;
    let high = nn - 1;
    let mut exshift = 0.0;
    let (mut p, mut q, mut r, mut s, mut z) = (0.0, 0.0, 0.0, 0.0, 0.0);
    let (mut w, mut x, mut y);

    // Norm over the Hessenberg part (one subdiagonal included).
    let mut norm = 0.0;
    for i in 0..nn {
        for j in i.saturating_sub(1)..nn {
            norm += math::abs(h[idx(nn, i, j)]);
        }
    }
    if norm == 0.0 {
        // zero matrix: spectrum {0}, eigenvectors already in V
        for i in 0..nn {
            d[i] = 0.0;
            e[i] = 0.0;
        }
        return Ok(());
    }

    let mut en = high as isize;
    let mut iter = 0usize;
    let mut total_sweeps = 0usize;
    while en >= low as isize {
        let n = en as usize;

        // look for a single small subdiagonal element
        let mut l = n;
        while l > low {
            s = math::abs(h[idx(nn, l - 1, l - 1)]) + math::abs(h[idx(nn, l, l)]);
            if s == 0.0 {
                s = norm;
            }
            if math::abs(h[idx(nn, l, l - 1)]) < EPS * s {
                break;
            }
            l -= 1;
        }

        if l == n {
            // one root found
            h[idx(nn, n, n)] += exshift;
            d[n] = h[idx(nn, n, n)];
            e[n] = 0.0;
            en -= 1;
            iter = 0;
        } else if l == n - 1 {
            // two roots found
            w = h[idx(nn, n, n - 1)] * h[idx(nn, n - 1, n)];
            p = (h[idx(nn, n - 1, n - 1)] - h[idx(nn, n, n)]) / 2.0;
            q = p * p + w;
            z = math::sqrt(math::abs(q));
            h[idx(nn, n, n)] += exshift;
            h[idx(nn, n - 1, n - 1)] += exshift;
            x = h[idx(nn, n, n)];
            if q >= 0.0 {
                // real pair
                z = if p >= 0.0 { p + z } else { p - z };
                d[n - 1] = x + z;
                d[n] = d[n - 1];
                if z != 0.0 {
                    d[n] = x - w / z;
                }
                e[n - 1] = 0.0;
                e[n] = 0.0;
                x = h[idx(nn, n, n - 1)];
                s = math::abs(x) + math::abs(z);
                p = x / s;
                q = z / s;
                r = math::sqrt(p * p + q * q);
                p /= r;
                q /= r;
                for j in (n - 1)..nn {
                    z = h[idx(nn, n - 1, j)];
                    h[idx(nn, n - 1, j)] = q * z + p * h[idx(nn, n, j)];
                    h[idx(nn, n, j)] = q * h[idx(nn, n, j)] - p * z;
                }
                for i in 0..=n {
                    z = h[idx(nn, i, n - 1)];
                    h[idx(nn, i, n - 1)] = q * z + p * h[idx(nn, i, n)];
                    h[idx(nn, i, n)] = q * h[idx(nn, i, n)] - p * z;
                }
                for i in low..=high {
                    z = v[(i, n - 1)];
                    v[(i, n - 1)] = q * z + p * v[(i, n)];
                    v[(i, n)] = q * v[(i, n)] - p * z;
                }
            } else {
                // complex pair
                d[n - 1] = x + p;
                d[n] = x + p;
                e[n - 1] = z;
                e[n] = -z;
            }
            en -= 2;
            iter = 0;
        } else {
            // no convergence yet; form a shift
            x = h[idx(nn, n, n)];
            y = 0.0;
            w = 0.0;
            if l < n {
                y = h[idx(nn, n - 1, n - 1)];
                w = h[idx(nn, n, n - 1)] * h[idx(nn, n - 1, n)];
            }

            // exceptional shift after 10 and 20 stalled sweeps
            if iter == 10 || iter == 20 {
                exshift += x;
                for i in low..=n {
                    h[idx(nn, i, i)] -= x;
                }
                s = math::abs(h[idx(nn, n, n - 1)]) + math::abs(h[idx(nn, n - 1, n - 2)]);
                x = 0.75 * s;
                y = x;
                w = -0.4375 * s * s;
            }

            // ad hoc shift after 30 stalled sweeps
            if iter == 30 {
                s = (y - x) / 2.0;
                s = s * s + w;
                if s > 0.0 {
                    s = math::sqrt(s);
                    if y < x {
                        s = -s;
                    }
                    s = x - w / ((y - x) / 2.0 + s);
                    for i in low..=n {
                        h[idx(nn, i, i)] -= s;
                    }
                    exshift += s;
                    x = 0.964;
                    y = x;
                    w = x;
                }
            }

            iter += 1;
            total_sweeps += 1;
            if total_sweeps > sweep_cap {
                return Err(total_sweeps);
            }

            // look for two consecutive small sub-diagonal elements
            let mut m = n - 2;
            loop {
                z = h[idx(nn, m, m)];
                r = x - z;
                s = y - z;
                p = (r * s - w) / h[idx(nn, m + 1, m)] + h[idx(nn, m, m + 1)];
                q = h[idx(nn, m + 1, m + 1)] - z - r - s;
                r = h[idx(nn, m + 2, m + 1)];
                s = math::abs(p) + math::abs(q) + math::abs(r);
                p /= s;
                q /= s;
                r /= s;
                if m == l {
                    break;
                }
                if math::abs(h[idx(nn, m, m - 1)]) * (math::abs(q) + math::abs(r))
                    < EPS
                        * (math::abs(p)
                            * (math::abs(h[idx(nn, m - 1, m - 1)])
                                + math::abs(z)
                                + math::abs(h[idx(nn, m + 1, m + 1)])))
                {
                    break;
                }
                m -= 1;
            }

            for i in (m + 2)..=n {
                h[idx(nn, i, i - 2)] = 0.0;
                if i > m + 2 {
                    h[idx(nn, i, i - 3)] = 0.0;
                }
            }

            // double QR step on rows l..=n and columns m..=n
            for k in m..n {
                let notlast = k != n - 1;
                if k != m {
                    p = h[idx(nn, k, k - 1)];
                    q = h[idx(nn, k + 1, k - 1)];
                    r = if notlast { h[idx(nn, k + 2, k - 1)] } else { 0.0 };
                    x = math::abs(p) + math::abs(q) + math::abs(r);
                    if x == 0.0 {
                        continue;
                    }
                    p /= x;
                    q /= x;
                    r /= x;
                }
                s = math::sqrt(p * p + q * q + r * r);
                if p < 0.0 {
                    s = -s;
                }
                if s != 0.0 {
                    if k != m {
                        h[idx(nn, k, k - 1)] = -s * x;
                    } else if l != m {
                        h[idx(nn, k, k - 1)] = -h[idx(nn, k, k - 1)];
                    }
                    p += s;
                    x = p / s;
                    y = q / s;
                    z = r / s;
                    q /= p;
                    r /= p;

                    for j in k..nn {
                        p = h[idx(nn, k, j)] + q * h[idx(nn, k + 1, j)];
                        if notlast {
                            p += r * h[idx(nn, k + 2, j)];
                            h[idx(nn, k + 2, j)] -= p * z;
                        }
                        h[idx(nn, k, j)] -= p * x;
                        h[idx(nn, k + 1, j)] -= p * y;
                    }
                    for i in 0..=n.min(k + 3) {
                        p = x * h[idx(nn, i, k)] + y * h[idx(nn, i, k + 1)];
                        if notlast {
                            p += z * h[idx(nn, i, k + 2)];
                            h[idx(nn, i, k + 2)] -= p * r;
                        }
                        h[idx(nn, i, k)] -= p;
                        h[idx(nn, i, k + 1)] -= p * q;
                    }
                    for i in low..=high {
                        p = x * v[(i, k)] + y * v[(i, k + 1)];
                        if notlast {
                            p += z * v[(i, k + 2)];
                            v[(i, k + 2)] -= p * r;
                        }
                        v[(i, k)] -= p;
                        v[(i, k + 1)] -= p * q;
                    }
                }
            }
        }
    }

    // back substitution to find vectors of the upper triangular form
    if norm == 0.0 {
        return Ok(());
    }
    for n in (0..nn).rev() {
        p = d[n];
        q = e[n];
        if q == 0.0 {
            // real vector
            let mut l = n;
            h[idx(nn, n, n)] = 1.0;
            for i in (0..n).rev() {
                w = h[idx(nn, i, i)] - p;
                r = 0.0;
                for j in l..=n {
                    r += h[idx(nn, i, j)] * h[idx(nn, j, n)];
                }
                if e[i] < 0.0 {
                    z = w;
                    s = r;
                } else {
                    l = i;
                    if e[i] == 0.0 {
                        h[idx(nn, i, n)] = if w != 0.0 { -r / w } else { -r / (EPS * norm) };
                    } else {
                        // solve the real 2x2 block
                        x = h[idx(nn, i, i + 1)];
                        y = h[idx(nn, i + 1, i)];
                        q = (d[i] - p) * (d[i] - p) + e[i] * e[i];
                        let t = (x * s - z * r) / q;
                        h[idx(nn, i, n)] = t;
                        h[idx(nn, i + 1, n)] = if math::abs(x) > math::abs(z) {
                            (-r - w * t) / x
                        } else {
                            (-s - y * t) / z
                        };
                        q = e[n];
                    }
                    // overflow control
                    let t = math::abs(h[idx(nn, i, n)]);
                    if (EPS * t) * t > 1.0 {
                        for j in i..=n {
                            h[idx(nn, j, n)] /= t;
                        }
                    }
                }
            }
        } else if q < 0.0 && n > 0 {
            // complex vector, second slot of the pair
            let mut l = n - 1;
            if math::abs(h[idx(nn, n, n - 1)]) > math::abs(h[idx(nn, n - 1, n)]) {
                h[idx(nn, n - 1, n - 1)] = q / h[idx(nn, n, n - 1)];
                h[idx(nn, n - 1, n)] = -(h[idx(nn, n, n)] - p) / h[idx(nn, n, n - 1)];
            } else {
                let (cr, ci) = cdiv(0.0, -h[idx(nn, n - 1, n)], h[idx(nn, n - 1, n - 1)] - p, q);
                h[idx(nn, n - 1, n - 1)] = cr;
                h[idx(nn, n - 1, n)] = ci;
            }
            h[idx(nn, n, n - 1)] = 0.0;
            h[idx(nn, n, n)] = 1.0;
            for i in (0..n.saturating_sub(1)).rev() {
                let mut ra = 0.0;
                let mut sa = 0.0;
                for j in l..=n {
                    ra += h[idx(nn, i, j)] * h[idx(nn, j, n - 1)];
                    sa += h[idx(nn, i, j)] * h[idx(nn, j, n)];
                }
                w = h[idx(nn, i, i)] - p;

                if e[i] < 0.0 {
                    z = w;
                    r = ra;
                    s = sa;
                } else {
                    l = i;
                    if e[i] == 0.0 {
                        let (cr, ci) = cdiv(-ra, -sa, w, q);
                        h[idx(nn, i, n - 1)] = cr;
                        h[idx(nn, i, n)] = ci;
                    } else {
                        // solve complex 2x2 block
                        x = h[idx(nn, i, i + 1)];
                        y = h[idx(nn, i + 1, i)];
                        let mut vr = (d[i] - p) * (d[i] - p) + e[i] * e[i] - q * q;
                        let vi = (d[i] - p) * 2.0 * q;
                        if vr == 0.0 && vi == 0.0 {
                            vr = EPS
                                * norm
                                * (math::abs(w)
                                    + math::abs(q)
                                    + math::abs(x)
                                    + math::abs(y)
                                    + math::abs(z));
                        }
                        let (cr, ci) =
                            cdiv(x * r - z * ra + q * sa, x * s - z * sa - q * ra, vr, vi);
                        h[idx(nn, i, n - 1)] = cr;
                        h[idx(nn, i, n)] = ci;
                        if math::abs(x) > math::abs(z) + math::abs(q) {
                            h[idx(nn, i + 1, n - 1)] =
                                (-ra - w * h[idx(nn, i, n - 1)] + q * h[idx(nn, i, n)]) / x;
                            h[idx(nn, i + 1, n)] =
                                (-sa - w * h[idx(nn, i, n)] - q * h[idx(nn, i, n - 1)]) / x;
                        } else {
                            let (cr, ci) = cdiv(
                                -r - y * h[idx(nn, i, n - 1)],
                                -s - y * h[idx(nn, i, n)],
                                z,
                                q,
                            );
                            h[idx(nn, i + 1, n - 1)] = cr;
                            h[idx(nn, i + 1, n)] = ci;
                        }
                    }
                    // overflow control
                    let t = math::abs(h[idx(nn, i, n - 1)]).max(math::abs(h[idx(nn, i, n)]));
                    if (EPS * t) * t > 1.0 {
                        for j in i..=n {
                            h[idx(nn, j, n - 1)] /= t;
                            h[idx(nn, j, n)] /= t;
                        }
                    }
                }
            }
        }
    }

    // back transformation to get eigenvectors of the original matrix
    for j in (low..nn).rev() {
        for i in low..=high {
            z = 0.0;
            for k in low..=j.min(high) {
                z += v[(i, k)] * h[idx(nn, k, j)];
            }
            v[(i, j)] = z;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::norm;
    use crate::rng::{self, stream};

    fn mat(rows: usize, vals: &[f64]) -> Mat {
        Mat::from_fn(rows, vals.len() / rows, |i, j| vals[i * (vals.len() / rows) + j])
    }

    #[test]
    fn symmetric_hollow_2x2() {
        let ev = spectrum(&mat(2, &[0.0, 1.0, 1.0, 0.0])).unwrap();
        assert!((ev[0].re + 1.0).abs() < 1e-14 && ev[0].im == 0.0);
        assert!((ev[1].re - 1.0).abs() < 1e-14 && ev[1].im == 0.0);
    }

    #[test]
    fn rotation_generator_2x2() {
        // purely imaginary spectrum: hollow 2x2 matrices can dodge
        // hyperbolicity, which is why the hollow genericity story needs m >= 3
        let ev = spectrum(&mat(2, &[0.0, 1.0, -1.0, 0.0])).unwrap();
        assert!(ev[0].re.abs() < 1e-14 && (ev[0].im + 1.0).abs() < 1e-14);
        assert!(ev[1].re.abs() < 1e-14 && (ev[1].im - 1.0).abs() < 1e-14);
    }

    #[test]
    fn triangular_eigenvalues_are_diagonal() {
        let m = mat(3, &[3.0, 1.0, -2.0, 0.0, -1.0, 0.5, 0.0, 0.0, 4.0]);
        let ev = spectrum(&m).unwrap();
        let mut want = [-1.0, 3.0, 4.0];
        want.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for (got, want) in ev.iter().zip(want) {
            assert!((got.re - want).abs() < 1e-12 && got.im.abs() < 1e-14);
        }
    }

    #[test]
    fn repeated_eigenvalue_jordan_block() {
        let ev = spectrum(&mat(2, &[2.0, 1.0, 0.0, 2.0])).unwrap();
        for v in ev {
            assert!((v.re - 2.0).abs() < 1e-12 && v.im.abs() < 1e-12);
        }
    }

    #[test]
    fn eigenvalue_sum_matches_trace() {
        let mut rng = stream(5);
        for trial in 0..20 {
            let n = 3 + trial % 5;
            let m = Mat::from_fn(n, n, |_, _| rng::uniform(&mut rng, -1.0, 1.0));
            let ev = spectrum(&m).unwrap();
            let trace: f64 = (0..n).map(|i| m[(i, i)]).sum();
            let sum_re: f64 = ev.iter().map(|l| l.re).sum();
            let sum_im: f64 = ev.iter().map(|l| l.im).sum();
            let scale = m.frobenius_norm();
            assert!((sum_re - trace).abs() <= 1e-10 * scale.max(1.0));
            assert!(sum_im.abs() <= 1e-10 * scale.max(1.0));
        }
    }

    #[test]
    fn eigenpairs_satisfy_residual_bound() {
        let mut rng = stream(6);
        for _ in 0..10 {
            let n = 6;
            let m = Mat::from_fn(n, n, |_, _| rng::uniform(&mut rng, -1.0, 1.0));
            let dec = eigen_decompose(&m, 100 * n).unwrap();
            let scale = m.frobenius_norm();
            let mut j = 0;
            while j < n {
                if dec.im[j] == 0.0 {
                    let v = dec.vectors.column(j);
                    let mv = m.matvec(&v);
                    let res: Vec<f64> =
                        mv.iter().zip(&v).map(|(a, b)| a - dec.re[j] * b).collect();
                    assert!(norm(&res) <= 1e-10 * scale * norm(&v).max(1e-300));
                    j += 1;
                } else {
                    // columns j, j+1 hold Re and Im of the eigenvector for a + ib
                    let (a, b) = (dec.re[j], dec.im[j]);
                    let u = dec.vectors.column(j);
                    let w = dec.vectors.column(j + 1);
                    let mu = m.matvec(&u);
                    let mw = m.matvec(&w);
                    let vnorm = (norm(&u) + norm(&w)).max(1e-300);
                    let r1: Vec<f64> = mu
                        .iter()
                        .zip(u.iter().zip(&w))
                        .map(|(mu_i, (u_i, w_i))| mu_i - (a * u_i - b * w_i))
                        .collect();
                    let r2: Vec<f64> = mw
                        .iter()
                        .zip(u.iter().zip(&w))
                        .map(|(mw_i, (u_i, w_i))| mw_i - (a * w_i + b * u_i))
                        .collect();
                    assert!(norm(&r1) <= 1e-9 * scale * vnorm);
                    assert!(norm(&r2) <= 1e-9 * scale * vnorm);
                    j += 2;
                }
            }
        }
    }

    #[test]
    fn rejects_nonfinite_input() {
        let mut m = Mat::zeros(2, 2);
        m[(0, 0)] = f64::NAN;
        assert!(matches!(spectrum(&m), Err(CoreError::SpectralFailure { .. })));
    }
}

