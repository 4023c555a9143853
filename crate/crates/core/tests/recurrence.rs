//! Exact rational re-evaluation of the recurrence kernels.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use rabi_core::gfunction::{eval_g, eval_r, eval_rbar};
use rabi_core::recurrence::{
    continued_fraction_demo, f_coeff, f_coeff_eps, forward_ratios, k_table, minimal_solution,
};
use rabi_core::{Branch, NormalizedParams, Parity, Tolerances};

fn q(v: f64) -> BigRational {
    BigRational::from_float(v).unwrap()
}

fn qi(n: usize) -> BigRational {
    BigRational::from_integer(BigInt::from(n))
}

/// `f_n` with the branch shift `s`, exactly.
fn f_exact(n: usize, x: &BigRational, s: &BigRational, g: &BigRational, d2: &BigRational) -> BigRational {
    let two = qi(2);
    let xn = x - qi(n);
    let inner = s - &xn + d2 / (&xn + s);
    &two * g + inner / (&two * g)
}

fn k_exact(x: f64, shift: f64, p: &NormalizedParams, len: usize) -> Vec<BigRational> {
    let (x, s, g) = (q(x), q(shift), q(p.g));
    let d = q(p.delta);
    let d2 = &d * &d;
    let mut k = vec![BigRational::one(), f_exact(0, &x, &s, &g, &d2)];
    for n in 2..len {
        let next = (f_exact(n - 1, &x, &s, &g, &d2) * &k[n - 1] - &k[n - 2]) / qi(n);
        k.push(next);
    }
    k
}

fn to_f64(v: &BigRational) -> f64 {
    v.to_f64().unwrap()
}

#[test]
fn k_table_matches_exact_recurrence() {
    let p = NormalizedParams::rabi(0.7, 0.4).unwrap();
    let t = k_table(0.3, &p, &Tolerances::default()).unwrap();
    assert!(t.converged);
    let exact = k_exact(0.3, 0.0, &p, t.values.len());
    for (n, (v, e)) in t.values.iter().zip(&exact).enumerate() {
        let e = to_f64(e);
        assert!((v - e).abs() <= 1e-12 * e.abs(), "n={n}: {v} vs {e}");
    }
}

#[test]
fn f_values_match_exact_evaluation() {
    let p = NormalizedParams::rabi(0.7, 0.4).unwrap();
    let d2 = q(0.4) * q(0.4);
    let e = to_f64(&f_exact(2, &q(0.35), &BigRational::zero(), &q(0.7), &d2));
    assert!((f_coeff(2, 0.35, &p).unwrap() - e).abs() <= 1e-15 * e.abs());

    // branch minus shifts the pole to x = n + ε
    let p = NormalizedParams::new(0.7, 0.7, 0.2).unwrap();
    let d2 = q(0.7) * q(0.7);
    let e = to_f64(&f_exact(0, &q(0.5), &q(-0.2), &q(0.7), &d2));
    assert!((f_coeff_eps(0, 0.5, &p, Branch::Minus).unwrap() - e).abs() <= 1e-15 * e.abs());
}

#[test]
fn g_plus_matches_exact_series() {
    let p = NormalizedParams::rabi(0.7, 0.4).unwrap();
    let x = 0.3;
    let k = k_exact(x, 0.0, &p, 120);
    let (g, d, xq) = (q(0.7), q(0.4), q(x));
    let mut sum = BigRational::zero();
    let mut gp = BigRational::one();
    for (n, kn) in k.iter().enumerate() {
        sum += kn * &gp * (BigRational::one() - &d / (&xq - qi(n)));
        gp *= &g;
    }
    let want = to_f64(&sum);
    let got = eval_g(Parity::Plus, x, &p, &Tolerances::default()).unwrap().value;
    assert!((got - want).abs() <= 1e-12 * want.abs(), "{got} vs {want}");
}

#[test]
fn eps_series_match_exact_evaluation() {
    let p = NormalizedParams::new(0.3, 0.7, 0.2).unwrap();
    let x = 0.5;
    let tol = Tolerances::default();
    for branch in [Branch::Plus, Branch::Minus] {
        let shift = branch.shift(&p);
        let k = k_exact(x, shift, &p, 80);
        let (g, xs) = (q(0.3), q(x) + q(shift));
        let (mut r, mut rbar) = (BigRational::zero(), BigRational::zero());
        let mut gp = BigRational::one();
        for (n, kn) in k.iter().enumerate() {
            r += kn * &gp;
            rbar += kn * &gp / (&xs - qi(n));
            gp *= &g;
        }
        let (r, rbar) = (to_f64(&r), to_f64(&rbar));
        let got_r = eval_r(branch, x, &p, &tol).unwrap();
        let got_rbar = eval_rbar(branch, x, &p, &tol).unwrap();
        assert!((got_r - r).abs() <= 1e-12 * r.abs(), "{branch:?} R {got_r} vs {r}");
        assert!((got_rbar - rbar).abs() <= 1e-12 * rbar.abs(), "{branch:?} Rbar {got_rbar} vs {rbar}");
    }
}

#[test]
fn forward_identity_reproduces_the_finite_fraction() {
    // exactly: seeding V_1 = f_0 and running forward, the backward fraction
    // from V_20 returns f_0 again; the condition it "imposes" is f_0 = f_0
    let p = NormalizedParams::rabi(0.7, 0.4).unwrap();
    let (x, s, g) = (q(0.3), BigRational::zero(), q(0.7));
    let d2 = q(0.4) * q(0.4);
    let f0 = f_exact(0, &x, &s, &g, &d2);
    let mut v = vec![f0.clone()];
    for n in 2..=20 {
        let next = (f_exact(n - 1, &x, &s, &g, &d2) - BigRational::one() / &v[n - 2]) / qi(n);
        v.push(next);
    }
    let mut back = v[19].clone();
    for n in (1..20).rev() {
        back = BigRational::one() / (f_exact(n, &x, &s, &g, &d2) - qi(n + 1) * back);
    }
    assert_eq!(back, f0);
    // the f64 forward ratios follow the exact ones
    let fwd = forward_ratios(0.3, &p, 20).unwrap();
    for (a, e) in fwd.iter().zip(&v) {
        let e = to_f64(e);
        assert!((a - e).abs() <= 1e-10 * e.abs());
    }
}

#[test]
fn tail_choice_matters_only_at_shallow_depth() {
    let p = NormalizedParams::rabi(0.7, 0.4).unwrap();
    let x = 0.3;
    let dominant = 1.0 / (2.0 * p.g);
    let min = minimal_solution(x, &p, 100).unwrap().v1();
    let zero_tail = continued_fraction_demo(x, &p, 200, 0.0).unwrap();
    assert!((zero_tail - min).abs() < 1e-10 * min.abs());
    // shallowest depth at which the zero tail is already good to 1e-4
    let n = (2..200)
        .find(|&n| (continued_fraction_demo(x, &p, n, 0.0).unwrap() - min).abs() < 1e-4)
        .unwrap();
    let shift = (continued_fraction_demo(x, &p, n, dominant).unwrap() - min).abs();
    assert!(shift > 1e-4, "N={n}: {shift}");
    // deep fractions forget any tail: backward recursion damps it
    let a = continued_fraction_demo(x, &p, 200, dominant).unwrap();
    let b = continued_fraction_demo(x, &p, 400, dominant).unwrap();
    assert!((a - b).abs() < 1e-12);
}
