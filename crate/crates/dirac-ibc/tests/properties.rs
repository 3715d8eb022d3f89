//! Property-based checks over randomly generated matrices and vectors.

use proptest::prelude::*;

use dirac_ibc::lagrangian::{r_matrix_from, r_matrix_product_form};
use dirac_ibc::matrix::{c, cr, CMatrix, CVector};
use dirac_ibc::spin::{normal_matrix, weyl_rep};
use dirac_ibc::split::HermitianSplit;

fn finite_f64() -> impl Strategy<Value = f64> {
    prop_oneof![
        -1e6..1e6f64,
        -1.0..1.0f64,
        prop_oneof![Just(0.0), Just(1.0 / 3.0), Just(-2.0f64.sqrt())],
    ]
}

fn complex_matrix(max_dim: usize) -> impl Strategy<Value = CMatrix> {
    (1..=max_dim, 1..=max_dim).prop_flat_map(|(r, cdim)| {
        proptest::collection::vec((finite_f64(), finite_f64()), r * cdim).prop_map(
            move |entries| {
                CMatrix::from_fn(r, cdim, |i, j| {
                    let (re, im) = entries[i * cdim + j];
                    c(re, im)
                })
            },
        )
    })
}

fn hermitian_matrix(max_dim: usize) -> impl Strategy<Value = CMatrix> {
    complex_matrix(max_dim).prop_map(|m| {
        let sq = if m.rows() == m.cols() {
            m
        } else {
            let n = m.rows().min(m.cols());
            m.submatrix(0, 0, n, n)
        };
        (&sq + &sq.adjoint()).scale(cr(0.5))
    })
}

proptest! {
    // JSON round trips reproduce every double bit for bit.
    #[test]
    fn matrix_json_roundtrip_is_exact(m in complex_matrix(5)) {
        let text = serde_json::to_string(&m).unwrap();
        let back: CMatrix = serde_json::from_str(&text).unwrap();
        prop_assert_eq!(m, back);
    }

    #[test]
    fn vector_json_roundtrip_is_exact(data in proptest::collection::vec((finite_f64(), finite_f64()), 1..8)) {
        let v = CVector::from_slice(&data.iter().map(|&(re, im)| c(re, im)).collect::<Vec<_>>());
        let text = serde_json::to_string(&v).unwrap();
        let back: CVector = serde_json::from_str(&text).unwrap();
        prop_assert_eq!(v.data, back.data);
    }

    // The spectral split always resolves the identity and inverts the matrix
    // away from its kernel.
    #[test]
    fn split_resolves_identity(a in hermitian_matrix(6)) {
        let s = HermitianSplit::with_default_tol(&a).unwrap();
        let n = a.rows();
        let sum = &(&s.p0 + &s.pplus) + &s.pminus;
        let scale = a.max_abs().max(1.0);
        prop_assert!(sum.approx_eq(&CMatrix::identity(n), 1e-12));
        let inv_identity = &(&s.ainv * &s.a) + &s.p0;
        prop_assert!(inv_identity.approx_eq(&CMatrix::identity(n), 1e-11 * scale));
        for p in [&s.p0, &s.pplus, &s.pminus] {
            prop_assert!((&(p * p) - p).max_abs() <= 1e-12);
        }
    }

    // The boundary-normal matrix is linear in the normal direction.
    #[test]
    fn normal_matrix_is_linear(
        n1 in (-1.0..1.0f64, -1.0..1.0f64, -1.0..1.0f64),
        n2 in (-1.0..1.0f64, -1.0..1.0f64, -1.0..1.0f64),
        t in 0.05..0.95f64,
    ) {
        let norm = |v: &[f64; 3]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
        let v1 = [n1.0, n1.1, n1.2];
        let v2 = [n2.0, n2.1, n2.2];
        prop_assume!(norm(&v1) > 0.1 && norm(&v2) > 0.1);
        let u1 = v1.map(|x| x / norm(&v1));
        let u2 = v2.map(|x| x / norm(&v2));
        let mut mix = [0.0; 3];
        for k in 0..3 {
            mix[k] = t * u1[k] + (1.0 - t) * u2[k];
        }
        prop_assume!(norm(&mix) > 0.1);
        let unit = mix.map(|x| x / norm(&mix));

        let alphas = weyl_rep().alphas;
        let direct = normal_matrix(&alphas, &unit).unwrap();
        let m1 = normal_matrix(&alphas, &u1).unwrap();
        let m2 = normal_matrix(&alphas, &u2).unwrap();
        let combined = (&m1.scale(cr(t)) + &m2.scale(cr(1.0 - t))).scale(cr(1.0 / norm(&mix)));
        prop_assert!(direct.approx_eq(&combined, 1e-12));
    }

    // Both closed forms of the boundary constraint matrix agree for any
    // unitary phase pair on the chiral split.
    #[test]
    fn r_matrix_forms_agree(theta in 0.0..std::f64::consts::TAU, phi in 0.0..std::f64::consts::TAU) {
        let split = HermitianSplit::with_default_tol(&weyl_rep().alphas[2]).unwrap();
        let mut l = CMatrix::zeros(4, 4);
        l[(0, 1)] = c(theta.cos(), theta.sin());
        l[(3, 2)] = c(phi.cos(), phi.sin());
        let r1 = r_matrix_from(&split, &l);
        let r2 = r_matrix_product_form(&split, &l);
        prop_assert!(r1.approx_eq(&r2, 1e-12));
    }
}
