use qloop::formal::{Direction, RatFn};
use qloop::heisen::*;
use qloop::Scalar;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn t(k: i64) -> Scalar {
    Scalar::t_pow(k)
}

fn mono(l: &[u32], r: &[u32], e: i64) -> Monomial {
    Monomial {
        l: l.to_vec(),
        r: r.to_vec(),
        e,
    }
}

fn rat_eq(f: &RatFn, g: &RatFn) -> bool {
    f.num.mul(&g.den) == g.num.mul(&f.den)
}

fn random_word(rng: &mut ChaCha8Rng) -> Vec<Gen> {
    let len = rng.gen_range(1..=6);
    (0..len)
        .map(|_| {
            let m = rng.gen_range(1..=4);
            if rng.gen_bool(0.5) {
                Gen::L(m)
            } else {
                Gen::R(m)
            }
        })
        .collect()
}

#[test]
fn theta_values() {
    for s in [1, -1] {
        let th = theta_series(s, 6);
        assert!(th.coeff(0).is_one());
        // (1-w)(1-T^2 w)(1 + 2 T w + ...) at order w: 2T - 1 - T^2.
        let tt = t(4 * s);
        assert_eq!(
            th.coeff(1),
            &tt * Scalar::from_int(2) - Scalar::one() - &tt * &tt
        );
    }
    let plus = theta_rational(1)
        .scale_arg(&t(-8))
        .expand(Direction::AtZero, 8)
        .unwrap();
    assert!(plus.eq_window(&theta_series(-1, 8)));
}

#[test]
fn normal_order_examples() {
    let x = normal_order(1, &[Gen::L(1), Gen::R(1)]);
    assert_eq!(
        x,
        PBWElement::monomial(1, mono(&[1], &[1], 0), Scalar::one())
    );
    let y = normal_order(1, &[Gen::R(1), Gen::L(1)]);
    let th1 = theta_series(1, 2).coeff(1);
    let expect = PBWElement::monomial(1, mono(&[1], &[1], 0), Scalar::one())
        .add(&PBWElement::monomial(1, mono(&[], &[], 1), th1.clone()));
    assert_eq!(y, expect);
    // Mirrored convention: L_0 = alpha for sign -.
    let y = normal_order(-1, &[Gen::R(1), Gen::L(1)]);
    let th1 = theta_series(-1, 2).coeff(1);
    let expect = PBWElement::monomial(-1, mono(&[1], &[1], 0), Scalar::one())
        .add(&PBWElement::monomial(-1, mono(&[], &[], 1), th1));
    assert_eq!(y, expect);
    assert_eq!(
        normal_order(1, &[Gen::R(0), Gen::L(0)]),
        PBWElement::alpha_pow(1, 1)
    );
}

#[test]
fn normal_order_matches_rewriting_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let word = [Gen::R(2), Gen::L(1), Gen::R(1), Gen::L(2)];
    for s in [1, -1] {
        let nf = normal_order(s, &word);
        for _ in 0..10 {
            let mut pick = |k: usize| rng.gen_range(0..k);
            assert_eq!(normal_order_by_rewriting(s, &word, &mut pick), nf);
        }
    }
    for _ in 0..30 {
        let w = random_word(&mut rng);
        for s in [1, -1] {
            let nf = normal_order(s, &w);
            let mut pick = |k: usize| rng.gen_range(0..k);
            assert_eq!(normal_order_by_rewriting(s, &w, &mut pick), nf, "{:?}", w);
        }
    }
}

#[test]
fn product_is_associative() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for _ in 0..10 {
        let s = if rng.gen_bool(0.5) { 1 } else { -1 };
        let a = normal_order(s, &random_word(&mut rng));
        let b = normal_order(s, &random_word(&mut rng));
        let c = normal_order(s, &random_word(&mut rng));
        assert_eq!(a.mul(&b).mul(&c), a.mul(&b.mul(&c)));
    }
}

#[test]
fn theta_mn_forms_agree() {
    for s in [1, -1] {
        assert!(rat_eq(&theta_mn_closed(s, 1, 1), &theta_rational(s)));
        assert!(rat_eq(&theta_mn_product(s, 1, 0), &RatFn::one()));
        for m in [-2i64, -1, 1, 2] {
            for n in [-2i64, -1, 1, 2] {
                let closed = theta_mn_closed(s, m, n)
                    .expand(Direction::AtZero, 8)
                    .unwrap();
                assert!(
                    theta_mn_series(s, m, n, 8).eq_window(&closed),
                    "s={} m={} n={}",
                    s,
                    m,
                    n
                );
            }
        }
    }
}

#[test]
fn lr_identities() {
    for s in [1, -1] {
        for m in [-2i64, -1, 1, 2] {
            for n in [-2i64, -1, 1, 2] {
                for c in lr_identities_check(s, m, n, 6).unwrap() {
                    assert!(c.pass, "{}", c.name);
                }
            }
        }
    }
}

#[test]
fn h_identities() {
    for s in [1, -1] {
        for m in [-2i64, -1, 1, 2] {
            for n in [-2i64, -1, 1, 2] {
                for c in h_identities_check(s, m, n, 6).unwrap() {
                    assert!(c.pass, "{}", c.name);
                }
            }
        }
    }
}

#[test]
fn rl_relation_and_theta_commutation() {
    for s in [1, -1] {
        assert_eq!(rl_relation_check(s, 1, 1, 6).unwrap(), None);
        assert!(theta_commutation_check(s, 1, 1, 4).unwrap());
        assert!(theta_commutation_check(s, 1, -1, 4).unwrap());
        for m in [-2i64, -1, 1, 2] {
            for n in [-2i64, -1, 1, 2] {
                assert!(
                    theta_commutation_check(s, m, n, 6).unwrap(),
                    "s={} m={} n={}",
                    s,
                    m,
                    n
                );
            }
        }
        for m in [-2i64, -1, 1, 2] {
            let f = big_theta_closed(s, m, m);
            let x = RatFn {
                num: f.num.reflect(),
                den: f.den.reflect(),
            };
            assert!(rat_eq(&f.mul(&x), &RatFn::one()), "s={} m={}", s, m);
        }
    }
}

#[test]
fn dressed_action_identities() {
    for s in [1, -1] {
        for m in 1..=3 {
            for mm in [m, -m] {
                for c in dressed_action_check(s, mm) {
                    assert!(c.pass, "{}", c.name);
                }
            }
        }
    }
}

#[test]
fn loop_action_on_currents() {
    // k^+(v) |> L^+(z) = lambda^{+,+}(v,z) L^+(z), including dressed currents.
    for m in [1i64, 2] {
        let l = dress_l(1, m, 5).unwrap();
        assert_eq!(
            current_action_check(1, &l, &lambda_rational(1, m)).unwrap(),
            None,
            "m={}",
            m
        );
    }
    // The displays are consistent mode by mode for k^+ on L-currents and
    // k^- on R-currents, for both signs.
    for s in [1i64, -1] {
        let l = dress(s, CurrentKind::L, s, 4).unwrap();
        assert_eq!(
            current_action_check(1, &l, &lambda_rational(s, s)).unwrap(),
            None
        );
        let r = dress(s, CurrentKind::R, s, 4).unwrap();
        assert_eq!(
            current_action_check(-1, &r, &rho_rational(s, s)).unwrap(),
            None
        );
    }
    let x = normal_order(1, &[Gen::R(2), Gen::L(1)]);
    assert!(triangle_action(LoopMode::X { eps: 1, n: 0 }, &x)
        .unwrap()
        .is_zero());
    assert!(
        triangle_action(LoopMode::X { eps: -1, n: 3 }, &PBWElement::one(-1))
            .unwrap()
            .is_zero()
    );
}
