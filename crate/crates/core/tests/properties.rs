use std::sync::Arc;

use polydisk::k11::{automorphism_fixing_one, automorphism_transform, k11_check, K11Point};
use polydisk::pade::{approximant_series, detect_rational_inner, pade_step_eval, PadeOptions};
use polydisk::polyseries::{
    cayley_forward, cayley_inverse, enumerate_box, poly_mul_trunc, reflect, series_inverse, taylor_default,
};
use polydisk::takagi::{build_con_matrix, con_eig_max};
use polydisk::{c64, Complex64 as C64, FourierTable, MultiIndex, TruncatedPoly};
use proptest::prelude::*;

fn complex() -> impl Strategy<Value = C64> {
    (-1.0..1.0f64, -1.0..1.0f64).prop_map(|(a, b)| c64(a, b))
}

fn bound(max_d: usize, max_n: usize) -> impl Strategy<Value = MultiIndex> {
    prop::collection::vec(0..=max_n, 1..=max_d).prop_map(|v| MultiIndex::new(v).unwrap())
}

fn poly(max_d: usize, max_n: usize) -> impl Strategy<Value = TruncatedPoly> {
    bound(max_d, max_n).prop_flat_map(|n| {
        let len = enumerate_box(&n).len();
        prop::collection::vec(complex(), len).prop_map(move |c| {
            TruncatedPoly::from_coeffs(Arc::new(enumerate_box(&n)), c).unwrap()
        })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn reflection_is_an_isometric_involution(p in poly(3, 3)) {
        let n = p.bound().clone();
        let r = reflect(&p, &n).unwrap();
        prop_assert!((r.norm2() - p.norm2()).abs() <= 1e-14 * (1.0 + p.norm2()));
        prop_assert_eq!(reflect(&r, &n).unwrap(), p);
    }

    #[test]
    fn series_inverse_inverts(p in poly(2, 3), c0 in 1.0..3.0f64) {
        let mut p = p;
        p.coeffs_mut()[0] = c64(c0 * 3.0, 0.0);
        let inv = series_inverse(&p).unwrap();
        let prod = poly_mul_trunc(&p, &inv, p.bx()).unwrap();
        for (i, c) in prod.coeffs().iter().enumerate() {
            let want = if i == 0 { 1.0 } else { 0.0 };
            prop_assert!((c - want).norm() < 1e-12);
        }
    }

    #[test]
    fn cayley_round_trip(p in poly(2, 2)) {
        let mut p = p.scale(c64(0.2, 0.0));
        p.coeffs_mut()[0] = c64(0.1, -0.05);
        let f = FourierTable::exact(p.clone());
        let back = cayley_inverse(&cayley_forward(&f).unwrap()).unwrap();
        prop_assert!(back.coeffs.max_abs_diff(&p) < 1e-12);
    }

    #[test]
    fn fft_recovers_polynomial_coefficients(p in poly(2, 3)) {
        let table = taylor_default(&|z: &[C64]| p.eval(z), p.bound()).unwrap();
        prop_assert!(table.coeffs.max_abs_diff(&p) < 1e-12);
    }

    #[test]
    fn con_eigenpair_residual_and_sign(p in poly(2, 2), n in bound(2, 2)) {
        prop_assume!(n.dim() == p.dim());
        let f = FourierTable::exact(p);
        let a = build_con_matrix(&f, &n);
        let pair = con_eig_max(&a).unwrap();
        let scale = a.matrix().iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        prop_assert!(pair.sigma >= 0.0);
        prop_assert!(pair.residual <= 1e-10 * scale.max(1.0));
        // −q is a con-eigenvector too; i·q is one only when σ = 0
        let neg: Vec<C64> = pair.q.coeffs().iter().map(|c| -c).collect();
        let r = a.apply(&neg);
        let dev: f64 = r.iter().zip(&neg).map(|(x, y)| (x - y * pair.sigma).norm_sqr()).sum::<f64>().sqrt();
        prop_assert!(dev <= 1e-10 * scale.max(1.0));
    }

    #[test]
    fn sigma_grows_with_the_box(p in poly(2, 2), extra in prop::collection::vec(0..=2usize, 2)) {
        let d = p.dim();
        let f_bound = MultiIndex::uniform(d, 6);
        let f = FourierTable::exact(p.embed(Arc::new(enumerate_box(&f_bound))).unwrap());
        let n = MultiIndex::uniform(d, 1);
        let m = MultiIndex::new((0..d).map(|j| 1 + extra[j]).collect()).unwrap();
        let sn = con_eig_max(&build_con_matrix(&f, &n)).unwrap().sigma;
        let sm = con_eig_max(&build_con_matrix(&f, &m)).unwrap().sigma;
        prop_assert!(sm >= sn - 1e-12, "sigma_n={sn} sigma_m={sm}");
    }

    #[test]
    fn k11_membership_is_rotation_invariant(c01 in complex(), c10 in complex(), c11 in complex(), t in 0.0..6.3f64, s in 0.0..6.3f64) {
        let a = k11_check(c01, c10, c11 * 2.0);
        let (u, v) = (C64::from_polar(1.0, t), C64::from_polar(1.0, s));
        let b = k11_check(c01 * u, c10 * v, c11 * 2.0 * u * v);
        prop_assert!((a.slack1 - b.slack1).abs() < 1e-12);
        prop_assert!((a.slack2 - b.slack2).abs() < 1e-12);
    }

    #[test]
    fn automorphisms_fixing_one_preserve_membership(c01 in complex(), c10 in complex(), c11 in complex(), theta in 0.0..6.3f64) {
        let p = K11Point::normalized(c01, c10, c11 * 2.0);
        let m = automorphism_fixing_one(theta);
        let q = automorphism_transform(&p, m.deriv(c64(1.0, 0.0)), m.deriv2(c64(1.0, 0.0)));
        let a = k11_check(p.c01, p.c10, p.c11);
        let b = k11_check(q.c01, q.c10, q.c11);
        let margin = a.slack1.abs().min(a.slack2.abs());
        prop_assume!(margin > 1e-9);
        prop_assert_eq!(a.member, b.member);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn remainder_obeys_the_orthogonal_bound(p in poly(2, 2), k in 1..=3usize) {
        prop_assume!(p.dim() == 2);
        let eval = |z: &[C64]| p.eval(z);
        let rep = pade_step_eval(&eval, &MultiIndex::uniform(2, k), None, &PadeOptions::default()).unwrap();
        prop_assert!(rep.sigma <= rep.sup_f * (1.0 + 1e-2) + 1e-7);
        prop_assert!(rep.remainder_l2 <= rep.orthogonal_bound_l2 + 1e-7);
    }

    #[test]
    fn detected_inner_functions_match_on_the_doubled_box(alpha in prop::collection::vec(0..=2usize, 1..=2), a in 0.0..0.7f64, t in 0.0..6.3f64) {
        let zero = C64::from_polar(a, t);
        let al = alpha.clone();
        // z^α times a Blaschke factor in the first variable
        let f = move |z: &[C64]| {
            let mono: C64 = z.iter().zip(&al).map(|(x, &k)| x.powi(k as i32)).product();
            mono * (z[0] - zero) / (1.0 - zero.conj() * z[0])
        };
        let mut nv: Vec<usize> = alpha.clone();
        nv[0] += 1;
        let n = MultiIndex::new(nv).unwrap();
        let opts = PadeOptions::default();
        let rep = pade_step_eval(&f, &n, None, &opts).unwrap();
        prop_assert!(detect_rational_inner(&rep, 1e-7, &opts), "sigma={} remainder={}", rep.sigma, rep.remainder_l2);
        let big = n.scaled(2);
        let table = taylor_default(&f, &big).unwrap();
        let series = approximant_series(rep.sigma, &rep.q, &rep.q_star, &big, 1e-8).unwrap();
        prop_assert!(series.max_abs_diff(&table.coeffs) <= 1e-8);
    }
}
