//! Property tests of the spectral operator identities on random band-limited
//! fields.

use std::sync::Arc;

use num_complex::Complex64 as C;
use proptest::prelude::*;

use descat::s3::basis::{Basis, BasisSpec};
use descat::s3::field::{ScalarField, TangentOneForm};
use descat::s3::ops;

fn shared_basis() -> Arc<Basis> {
    use std::sync::OnceLock;
    static BASIS: OnceLock<Arc<Basis>> = OnceLock::new();
    BASIS
        .get_or_init(|| Basis::new(BasisSpec::with_band_limit(3)).unwrap())
        .clone()
}

fn coeff_vec(n: usize) -> impl Strategy<Value = Vec<C>> {
    proptest::collection::vec((-1.0f64..1.0, -1.0f64..1.0), n)
        .prop_map(|v| v.into_iter().map(|(re, im)| C::new(re, im)).collect())
}

fn scalar_field() -> impl Strategy<Value = ScalarField> {
    let basis = shared_basis();
    coeff_vec(basis.n_coeffs()).prop_map(move |c| ScalarField::from_coeffs(basis.clone(), c))
}

fn one_form() -> impl Strategy<Value = TangentOneForm> {
    (scalar_field(), scalar_field(), scalar_field())
        .prop_map(|(a, b, c)| TangentOneForm::from_components([a, b, c]))
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 24, ..ProptestConfig::default() })]

    #[test]
    fn transform_round_trip(f in scalar_field()) {
        let basis = f.basis().clone();
        let back = basis.forward(f.values());
        let err: f64 = f.coeffs().iter().zip(back.iter()).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>().sqrt();
        prop_assert!(err <= 1e-12 * (1.0 + f.l2_norm_sq().sqrt()));
    }

    #[test]
    fn adjointness_and_curl_grad(f in scalar_field(), a in one_form()) {
        let lhs = ops::l2_inner_oneform(&ops::grad(&f), &a).unwrap();
        let rhs = ops::l2_inner(&f, &ops::div(&a)).unwrap();
        let scale = 1.0 + f.l2_norm_sq().sqrt() * a.l2_norm_sq().sqrt();
        prop_assert!((lhs + rhs).norm() <= 1e-11 * scale);
        let cg = ops::curl(&ops::grad(&f));
        prop_assert!(cg.l2_norm_sq().sqrt() <= 1e-10 * (1.0 + f.l2_norm_sq().sqrt()));
    }

    #[test]
    fn projector_is_idempotent_and_kills_divergence(a in one_form()) {
        let p1 = ops::project_divfree(&a);
        let p2 = ops::project_divfree(&p1);
        let scale = 1.0 + a.l2_norm_sq().sqrt();
        prop_assert!(ops::div(&p1).l2_norm_sq().sqrt() <= 1e-11 * scale);
        prop_assert!(p2.sub(&p1).l2_norm_sq().sqrt() <= 1e-10 * scale);
        // div(curl A) = 0 as well
        prop_assert!(ops::div(&ops::curl(&a)).l2_norm_sq().sqrt() <= 1e-10 * scale);
    }

    #[test]
    fn div_grad_is_the_laplacian(f in scalar_field()) {
        let dg = ops::div(&ops::grad(&f));
        let lap = descat::s3::ops::laplacian_scalar(&f);
        prop_assert!(dg.sub(&lap).l2_norm_sq().sqrt() <= 1e-10 * (1.0 + f.l2_norm_sq().sqrt()));
    }

    #[test]
    fn sobolev_orders_nest(f in scalar_field()) {
        let m0 = ops::sobolev_norm_sq(&f, 0).unwrap();
        let m1 = ops::sobolev_norm_sq(&f, 1).unwrap();
        let m2 = ops::sobolev_norm_sq(&f, 2).unwrap();
        let m3 = ops::sobolev_norm_sq(&f, 3).unwrap();
        prop_assert!(m0 <= m1 && m1 <= m2 && m2 <= m3);
    }
}
