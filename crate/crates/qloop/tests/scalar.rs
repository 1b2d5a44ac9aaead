use qloop::scalar::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn q(k: i64) -> Scalar {
    Scalar::q_pow(k)
}

#[test]
fn qint_small_values() {
    assert!(qint(0).is_zero());
    assert_eq!(qint(2), q(1) + q(-1));
    assert_eq!(qint(3), q(2) + Scalar::one() + q(-2));
    assert_eq!(qint(-3), -(q(2) + Scalar::one() + q(-2)));
}

#[test]
fn qint_matches_defining_quotient() {
    for n in -7..=7 {
        let oracle = (q(n) - q(-n)) / (q(1) - q(-1));
        assert_eq!(qint(n), oracle, "n = {}", n);
    }
}

#[test]
fn qint_is_bar_invariant() {
    for n in -6..=6 {
        assert_eq!(qint(n).invert_t(), qint(n));
        assert_eq!(-qint(-n), qint(n));
    }
}

#[test]
fn qfact_and_qbinom() {
    assert!(qfact(0).is_one());
    for n in 0..6 {
        assert!(qbinom(n, 0).unwrap().is_one());
        for m in 0..=n {
            assert_eq!(qbinom(n, m).unwrap(), qbinom(n, n - m).unwrap());
        }
    }
    let expect = q(4) + q(2) + Scalar::from_int(2) + q(-2) + q(-4);
    assert_eq!(qbinom(4, 2).unwrap(), expect);
    assert!(qbinom(2, 3).is_err());
}

#[test]
fn qratio_product_cancels_formally() {
    assert!(qratio_product(&[2, 0], &[0, 2]).unwrap().is_one());
    assert_eq!(
        qratio_product(&[3], &[1]).unwrap(),
        q(2) + Scalar::one() + q(-2)
    );
    assert!(qratio_product(&[0], &[2]).unwrap().is_zero());
    assert!(qratio_product(&[1], &[0]).is_err());
}

#[test]
fn display_is_canonical() {
    let x = (q(2) + Scalar::one()) / q(1);
    assert_eq!(x.to_string(), "(t^4+1)/t^2");
    let p = SpectralPoint::param(1, 3);
    assert_eq!(p.to_string(), "a*q^3");
    assert_eq!(SpectralPoint::parse("a*q^3", &DEFAULT_NAMES).unwrap(), p);
    assert_eq!(
        SpectralPoint::parse("b*q^-2", &DEFAULT_NAMES).unwrap(),
        SpectralPoint::param(2, -2)
    );
}

fn random_scalar(rng: &mut ChaCha8Rng) -> Scalar {
    let mut s = Scalar::zero();
    for _ in 0..rng.gen_range(1..4) {
        let c = Scalar::from_int(rng.gen_range(-3..=3));
        let m = Scalar::t_pow(rng.gen_range(-3..=3)) * Scalar::param(1).pow(rng.gen_range(0..3));
        s += c * m;
    }
    let mut d = Scalar::one();
    for _ in 0..rng.gen_range(0..3) {
        let f = Scalar::one()
            - Scalar::t_pow(rng.gen_range(1..4)) * Scalar::param(1).pow(rng.gen_range(0..2));
        d *= f;
    }
    s / d
}

#[test]
fn field_axioms_on_random_triples() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..60 {
        let (a, b, c) = (
            random_scalar(&mut rng),
            random_scalar(&mut rng),
            random_scalar(&mut rng),
        );
        assert_eq!((&a + &b) + &c, &a + (&b + &c));
        assert_eq!((&a * &b) * &c, &a * (&b * &c));
        assert_eq!(&a * (&b + &c), &a * &b + &a * &c);
        assert_eq!(&a - &a, Scalar::zero());
        if !a.is_zero() {
            assert!((&a / &a).is_one());
        }
        // Equality agrees with cross multiplication.
        if !b.is_zero() {
            let x = &a / &b;
            assert_eq!(&x * &b, a);
        }
    }
}
