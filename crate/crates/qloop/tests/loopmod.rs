use qloop::formal::Direction;
use qloop::linalg::Matrix;
use qloop::loopmod::*;
use qloop::scalar::{Scalar, SpectralPoint};
use std::time::Instant;

fn a() -> SpectralPoint {
    SpectralPoint::param(1, 0)
}

fn q(k: i64) -> Scalar {
    Scalar::q_pow(k)
}

#[test]
fn w1_basic_shape() {
    let w = evaluation_module(1, &a(), 6).unwrap();
    assert_eq!(w.dim, 2);
    assert_eq!(spectrum(&w), vec![q(1), q(-1)]);
    let x0 = w.op(Mode::XPlus(0));
    assert!(x0.mul(x0).is_zero());
}

#[test]
fn relations_hold_on_segments() {
    for n in 1..=3 {
        let start = Instant::now();
        let w = evaluation_module(n, &a(), 6).unwrap();
        assert_eq!(w.dim, n + 1);
        let rep = check_loop_relations(&w, 6).unwrap();
        assert!(rep.all_passed(), "n={} {:?}", n, rep.results);
        eprintln!("W_{} checked in {:?}", n, start.elapsed());
    }
}

#[test]
fn spectrum_of_segments() {
    let w2 = evaluation_module(2, &a(), 2).unwrap();
    assert_eq!(spectrum(&w2), vec![q(2), Scalar::one(), q(-2)]);
    let w3 = evaluation_module(3, &a(), 2).unwrap();
    assert_eq!(spectrum(&w3), vec![q(3), q(1), q(-1), q(-3)]);
}

#[test]
fn highest_lweight_of_segment_matches_formula() {
    for n in 1..=3 {
        let p = DrinfeldPoly::segment(n, &a());
        let w = evaluation_module(n, &a(), 6).unwrap();
        let top = w.top_index();
        let kp = highest_lweight_series(&p, 1, 6).unwrap();
        let km = highest_lweight_series(&p, -1, 6).unwrap();
        for k in 0..=6 {
            assert_eq!(
                w.op(Mode::KPlus(k)).get(top, top),
                &kp.coeff(k),
                "n={} k={}",
                n,
                k
            );
            assert_eq!(
                w.op(Mode::KMinus(k)).get(top, top),
                &km.coeff(k),
                "n={} k={}",
                n,
                k
            );
        }
    }
}

#[test]
fn tensor_of_w1s() {
    let w = evaluation_module(1, &a(), 6).unwrap();
    let w2 = evaluation_module(1, &a().shift(2), 6).unwrap();
    let t = tensor(&w, &w2, 6).unwrap();
    assert_eq!(t.dim, 4);
    assert!(check_loop_relations(&t, 6).unwrap().all_passed());
    // Grouplike k on the product of highest vectors.
    let p1 = DrinfeldPoly::new(vec![a()]);
    let p2 = DrinfeldPoly::new(vec![a().shift(2)]);
    let prod = highest_lweight_series(&p1, 1, 6)
        .unwrap()
        .mul(&highest_lweight_series(&p2, 1, 6).unwrap());
    for k in 0..=6 {
        assert_eq!(t.op(Mode::KPlus(k)).get(0, 0), &prod.coeff(k));
    }
}

#[test]
fn tensor_with_trivial_is_identity() {
    let w = evaluation_module(1, &a(), 4).unwrap();
    let t = tensor(&w, &GradedRep::trivial(4), 4).unwrap();
    for (m, mat) in &w.ops {
        assert_eq!(t.op(*m), mat);
    }
}

#[test]
fn perturbed_rep_fails_xpxm() {
    let mut w = evaluation_module(1, &a(), 4).unwrap();
    let mut m = w.op(Mode::XMinus(1)).clone();
    m.set(1, 0, m.get(1, 0) + Scalar::one());
    w.ops.insert(Mode::XMinus(1), m);
    let rep = check_loop_relations(&w, 4).unwrap();
    let r = rep.get("x+x-").unwrap();
    assert!(!r.passed());
    assert!(r.failure.as_ref().unwrap().contains("s=1"));
}

#[test]
fn decomposition_of_small_modules() {
    let w = evaluation_module(1, &a(), 4).unwrap();
    let blocks = lweight_decompose(&w, 4).unwrap();
    assert_eq!(
        blocks.iter().map(|b| b.dim()).collect::<Vec<_>>(),
        vec![1, 1]
    );
    let triv = lweight_decompose(&GradedRep::trivial(4), 4).unwrap();
    assert_eq!(triv.len(), 1);
    assert!(triv[0].kappa_plus.coeff(0).is_one());
    let w2 = evaluation_module(1, &a().shift(2), 4).unwrap();
    let t = tensor(&w, &w2, 4).unwrap();
    let blocks = lweight_decompose(&t, 4).unwrap();
    assert_eq!(blocks.iter().map(|b| b.dim()).sum::<usize>(), 4);
    // Brute-force oracle: every block vector is annihilated by (k - kappa)^4.
    for b in &blocks {
        for k in 0..=4 {
            let lam = b.kappa_plus.coeff(k);
            let shifted = t.op(Mode::KPlus(k)).sub(&Matrix::identity(4).scale(&lam));
            let p = shifted.mul(&shifted).mul(&shifted).mul(&shifted);
            for v in &b.basis {
                assert!(p.mul_vec(v).iter().all(|x| x.is_zero()));
            }
        }
    }
}

#[test]
fn highest_times_lowest_is_one() {
    let p = DrinfeldPoly::segment(2, &a());
    for sign in [1, -1] {
        let h = highest_lweight_series(&p, sign, 8).unwrap();
        let l = lowest_lweight_series(&p, sign, 8).unwrap();
        let dir = if sign > 0 {
            Direction::AtInfinity
        } else {
            Direction::AtZero
        };
        assert!(h.mul(&l).eq_window(&qloop::formal::Series::one(dir, 8)));
    }
}
