//! Property tests for the algebraic invariants of the constraint class.

use eulerflow_core::flow::derivative_polynomials;
use eulerflow_core::ladder::ladder;
use eulerflow_core::matrix::{dot, norm};
use eulerflow_core::spectral::linearization;
use eulerflow_core::tensor::{class_basis, project, verify_membership, RawTensor, ALGEBRAIC_TOL};
use proptest::prelude::*;

fn free_coords(d: usize) -> impl Strategy<Value = Vec<f64>> {
    let n = 2 * (d * (d - 1) * (d - 2) / 6);
    proptest::collection::vec(-10.0..10.0f64, n)
}

fn state(d: usize) -> impl Strategy<Value = Vec<f64>> {
    proptest::collection::vec(-5.0..5.0f64, d)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn members_satisfy_all_identities(d in 3usize..7, coeffs in free_coords(6)) {
        let basis = class_basis(d).unwrap();
        let b = basis.combine(&coeffs[..basis.len()]);
        prop_assert!(b.membership().passes(ALGEBRAIC_TOL));
    }

    #[test]
    fn energy_conservation_holds_pointwise(coeffs in free_coords(5), x in state(5)) {
        let basis = class_basis(5).unwrap();
        let b = basis.combine(&coeffs);
        let bxx = b.evaluate(&x, &x).unwrap();
        let nx = norm(&x);
        prop_assert!(dot(&x, &bxx).abs() <= 1e-10 * b.max_abs().max(1e-300) * nx * nx * nx);
        prop_assert!(b.divergence(&x).unwrap().abs() <= 1e-12 * b.max_abs().max(1e-300) * nx);
    }

    #[test]
    fn evaluate_is_symmetric_in_its_arguments(coeffs in free_coords(5), x in state(5), y in state(5)) {
        let basis = class_basis(5).unwrap();
        let b = basis.combine(&coeffs);
        prop_assert_eq!(b.evaluate(&x, &y).unwrap(), b.evaluate(&y, &x).unwrap());
    }

    #[test]
    fn projection_is_idempotent_and_contracting(vals in proptest::collection::vec(-3.0..3.0f64, 64)) {
        let raw = RawTensor::new(4, vals).unwrap();
        let p = project(&raw).unwrap();
        prop_assert!(p.frobenius_norm() <= raw.frobenius_norm() * (1.0 + 1e-12) + 1e-12);
        let twice = project(&p.to_raw()).unwrap();
        let scale = p.max_abs().max(1e-300);
        for i in 0..4 {
            for j in 0..4 {
                for k in 0..4 {
                    prop_assert!((twice.get(i, j, k) - p.get(i, j, k)).abs() <= 1e-12 * scale);
                }
            }
        }
        prop_assert!(verify_membership(&p.to_raw()).passes(ALGEBRAIC_TOL));
    }

    #[test]
    fn linearization_scaling_is_exact(coeffs in free_coords(5), alpha in 0.1..8.0f64, axis in 0usize..5) {
        let basis = class_basis(5).unwrap();
        let b = basis.combine(&coeffs);
        let l1 = linearization(&b, axis, 1.0).unwrap();
        let la = linearization(&b, axis, alpha).unwrap();
        for i in 0..5 {
            for j in 0..5 {
                prop_assert_eq!(la[(i, j)], alpha * l1[(i, j)]);
            }
        }
    }

    #[test]
    fn derivative_polynomials_scale_homogeneously(coeffs in free_coords(5), x in state(5), lambda in 0.25..4.0f64) {
        let basis = class_basis(5).unwrap();
        let b = basis.combine(&coeffs);
        let xl: Vec<f64> = x.iter().map(|v| lambda * v).collect();
        let p = derivative_polynomials(&b, &x, 3).unwrap();
        let pl = derivative_polynomials(&b, &xl, 3).unwrap();
        for j in 0..=3 {
            let factor = lambda.powi(j as i32 + 1);
            let scale = p[j].iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1e-300) * factor.max(1.0);
            for i in 0..5 {
                prop_assert!((pl[j][i] - factor * p[j][i]).abs() <= 1e-10 * scale);
            }
        }
    }

    #[test]
    fn ladder_anchors_its_pair(coeffs in free_coords(4), i in 0usize..4, j in 0usize..4) {
        prop_assume!(i != j);
        let basis = class_basis(4).unwrap();
        let b = basis.combine(&coeffs);
        let cert = ladder(&b, i, j).unwrap();
        prop_assert_eq!(cert.vectors[0][i], 1.0);
        prop_assert_eq!(cert.vectors[1][j], 1.0);
        prop_assert_eq!(norm(&cert.vectors[0]), 1.0);
        prop_assert_eq!(norm(&cert.vectors[1]), 1.0);
    }
}
