use qloop::formal::Direction;
use qloop::loopmod::{evaluation_module, lweight_decompose, tensor, DrinfeldPoly};
use qloop::qchar::*;
use qloop::scalar::{PointBase, Scalar, SpectralPoint};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeSet;

fn a(e: i64) -> SpectralPoint {
    SpectralPoint::param(1, e)
}

fn b(e: i64) -> SpectralPoint {
    SpectralPoint::param(2, e)
}

fn ms(pts: &[SpectralPoint]) -> Multiset {
    multiset_of(&DrinfeldPoly::new(pts.to_vec()))
}

#[test]
fn monomial_reads_multiplicities() {
    let lw = LWeightRational::new(DrinfeldPoly::new(vec![a(0)]), DrinfeldPoly::one(), -1).unwrap();
    assert_eq!(monomial_of(&lw), YMonomial::y(a(0)));
    let one = LWeightRational::new(DrinfeldPoly::one(), DrinfeldPoly::one(), 1).unwrap();
    assert!(monomial_of(&one).is_one());
    let lw = LWeightRational::new(
        DrinfeldPoly::new(vec![a(0), a(0)]),
        DrinfeldPoly::new(vec![b(0)]),
        1,
    )
    .unwrap();
    assert_eq!(
        monomial_of(&lw),
        YMonomial::from_pairs([(a(0), 2), (b(0), -1)])
    );
    assert_eq!(monomial_of(&lw).to_string(), "Y_a^2 Y_b^-1");
    assert!(LWeightRational::new(
        DrinfeldPoly::new(vec![a(0)]),
        DrinfeldPoly::new(vec![a(0)]),
        1
    )
    .is_err());
}

#[test]
fn h_shift_expansions() {
    for m in 1..=3 {
        let h = h_shift_series(m, &a(0), 1, 8).unwrap();
        assert!(h.coeff(0).is_one());
        // First coefficient: a (q^2 + q^{-2(m+1)} - q^-2 - q^{-2(m-1)}).
        let c1 = Scalar::param(1)
            * (Scalar::q_pow(2) + Scalar::q_pow(-2 * (m + 1))
                - Scalar::q_pow(-2)
                - Scalar::q_pow(-2 * (m - 1)));
        assert_eq!(h.coeff(1), c1);
        for sign in [1, -1] {
            let h = h_shift_series(m, &a(0), sign, 8).unwrap();
            let hinv = h_shift_rational(m, &a(0)).unwrap().inv().unwrap();
            let dir = if sign > 0 {
                Direction::AtInfinity
            } else {
                Direction::AtZero
            };
            let prod = h.mul(&hinv.expand(dir, 8).unwrap());
            assert!(prod.eq_window(&qloop::formal::Series::one(dir, 8)));
        }
    }
    assert!(h_shift_series(0, &a(0), 1, 4).is_err());
}

#[test]
fn monomials_match_shift_series() {
    for sign in [1, -1] {
        let lhs = a_monomial(&a(0)).series(sign, 8).unwrap();
        assert!(lhs.eq_window(&a_shift_series(&a(0), sign, 8).unwrap()));
        for m in 1..=3 {
            let lhs = h_monomial(m, &a(1)).series(sign, 8).unwrap();
            assert!(lhs.eq_window(&h_shift_series(m, &a(1), sign, 8).unwrap()));
        }
    }
    assert_eq!(
        h_monomial(1, &a(0)),
        YMonomial::from_pairs([(a(-2), -1), (a(2), 1)])
    );
    assert!(h_monomial(0, &a(0)).is_one());
}

#[test]
fn gamma_moves() {
    let nu = ms(&[a(-2), a(0)]);
    assert_eq!(gamma_apply(1, &a(0), &nu).unwrap(), ms(&[a(0), a(2)]));
    let nu = ms(&[a(0), a(2), b(0)]);
    assert_eq!(gamma_apply(0, &a(0), &nu).unwrap(), nu);
    for m in -3..=3 {
        let fwd = gamma_apply(m, &a(0), &ms(&[a(-2 * m), a(2 - 2 * m), b(1)])).unwrap();
        let back = gamma_apply(-m, &a(-2 * m), &fwd).unwrap();
        assert_eq!(back, ms(&[a(-2 * m), a(2 - 2 * m), b(1)]));
    }
    assert!(gamma_apply(1, &a(0), &ms(&[a(0)])).is_err());
}

#[test]
fn gamma_acts_by_h_monomial() {
    let nu = ms(&[a(-4), a(-2), a(6)]);
    let m = 2;
    let lhs = gamma_apply(m, &a(0), &nu).unwrap();
    let y = |n: &Multiset| YMonomial::from_pairs(n.iter().map(|(x, &k)| (x.clone(), k as i64)));
    assert_eq!(y(&lhs), h_monomial(m, &a(0)).mul(&y(&nu)));
}

#[test]
fn equivalence_search() {
    let nu = ms(&[a(0), a(2), b(0)]);
    assert!(multiset_equivalent(&nu, &nu, 0));
    let moved = gamma_apply(2, &a(4), &nu).unwrap();
    assert!(multiset_equivalent(&moved, &nu, 1));
    assert!(!multiset_equivalent(&moved, &nu, 0));
    let twice = gamma_apply(-1, &a(0), &moved).unwrap_or_else(|_| moved.clone());
    assert!(multiset_equivalent(&twice, &nu, DEFAULT_EQUIV_DEPTH));
    for d in 0..=4 {
        assert!(!multiset_equivalent(&ms(&[a(0)]), &ms(&[b(0)]), d));
        assert!(!multiset_equivalent(&ms(&[a(0)]), &ms(&[a(1)]), d));
    }
}

#[test]
fn reconstruction_round_trip() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..25 {
        let mut pick = |n: usize| -> Vec<SpectralPoint> {
            (0..n)
                .map(|_| SpectralPoint::param(rng.gen_range(1..=2), rng.gen_range(-3..=3)))
                .collect()
        };
        let p = pick(2);
        let q: Vec<SpectralPoint> = pick(2).into_iter().filter(|x| !p.contains(x)).collect();
        let sign = if p.len() % 2 == 0 { -1 } else { 1 };
        let lw = LWeightRational::new(DrinfeldPoly::new(p), DrinfeldPoly::new(q), sign).unwrap();
        let kp = lw.series(1, 10).unwrap();
        let km = lw.series(-1, 10).unwrap();
        assert_eq!(reconstruct_lweight(&kp, &km, 4).unwrap(), lw);
    }
}

#[test]
fn reconstruction_edge_cases() {
    let one = qloop::formal::Series::one(Direction::AtInfinity, 6);
    let one_m = qloop::formal::Series::one(Direction::AtZero, 6);
    let lw = reconstruct_lweight(&one, &one_m, 2).unwrap();
    assert_eq!(
        lw,
        LWeightRational::new(DrinfeldPoly::one(), DrinfeldPoly::one(), 1).unwrap()
    );
    // A dominant l-weight of the zero-level convention.
    let p = DrinfeldPoly::segment(2, &a(0));
    let lw = LWeightRational::dominant(p.clone());
    let got =
        reconstruct_lweight(&lw.series(1, 8).unwrap(), &lw.series(-1, 8).unwrap(), 2).unwrap();
    assert_eq!(got, lw);
    // A constant that is not +-q^k has no rational form.
    let c = Scalar::from_int(3);
    let cp = qloop::formal::Series::constant(Direction::AtInfinity, c.clone(), 6);
    let cm = qloop::formal::Series::constant(Direction::AtZero, c, 6);
    assert!(reconstruct_lweight(&cp, &cm, 2).is_err());
    // Degree bound too small.
    let big = LWeightRational::dominant(DrinfeldPoly::segment(3, &a(0)));
    assert!(
        reconstruct_lweight(&big.series(1, 10).unwrap(), &big.series(-1, 10).unwrap(), 1).is_err()
    );
    // Roots off the declared orbits.
    let lw = LWeightRational::dominant(DrinfeldPoly::new(vec![b(0)]));
    let r = reconstruct_lweight_on(
        &lw.series(1, 6).unwrap(),
        &lw.series(-1, 6).unwrap(),
        1,
        &[PointBase::Param(1)],
    );
    assert!(r.is_err());
}

fn qchar_of(rep: &qloop::loopmod::GradedRep, bound: usize) -> BTreeSet<(usize, YMonomial)> {
    lweight_decompose(rep, 10)
        .unwrap()
        .into_iter()
        .map(|blk| {
            let lw = reconstruct_lweight(&blk.kappa_plus, &blk.kappa_minus, bound).unwrap();
            assert_eq!(lw.sign, 1);
            (blk.dim(), monomial_of(&lw))
        })
        .collect()
}

#[test]
fn fundamental_module_qcharacter() {
    let w = evaluation_module(1, &a(0), 6).unwrap();
    let expect: BTreeSet<_> = [
        (1, YMonomial::y(a(0))),
        (1, YMonomial::from_pairs([(a(2), -1)])),
    ]
    .into();
    assert_eq!(qchar_of(&w, 2), expect);
}

#[test]
fn tensor_qcharacter_is_product_set() {
    let wa = evaluation_module(1, &a(0), 6).unwrap();
    let wb = evaluation_module(1, &b(0), 6).unwrap();
    let got = qchar_of(&tensor(&wa, &wb, 6).unwrap(), 2);
    let fa = [YMonomial::y(a(0)), YMonomial::y(a(2)).inv()];
    let fb = [YMonomial::y(b(0)), YMonomial::y(b(2)).inv()];
    let expect: BTreeSet<_> = fa
        .iter()
        .flat_map(|x| fb.iter().map(move |y| (1, x.mul(y))))
        .collect();
    assert_eq!(got, expect);
}

#[test]
fn segment_qcharacter() {
    let w = evaluation_module(2, &a(0), 6).unwrap();
    let got: Vec<YMonomial> = qchar_of(&w, 3).into_iter().map(|(_, m)| m).collect();
    // Highest monomial Y_{aq^-1} Y_{aq}, each lower one obtained by A^-1.
    let top = YMonomial::from_pairs([(a(-1), 1), (a(1), 1)]);
    let mid = top.mul(&a_monomial(&a(1)).inv());
    let low = mid.mul(&a_monomial(&a(-1)).inv());
    let expect: BTreeSet<_> = [top, mid, low].into();
    assert_eq!(got.into_iter().collect::<BTreeSet<_>>(), expect);
}

#[test]
fn dominance_predicates() {
    let p1 = LWeightRational::dominant(DrinfeldPoly::new(vec![a(0), a(2)]));
    let p2 = LWeightRational::dominant(DrinfeldPoly::new(vec![a(-4), a(-2)]));
    assert!(is_l_dominant(&[p1.clone(), p2.clone()]));
    let p3 = LWeightRational::dominant(DrinfeldPoly::new(vec![a(0)]));
    assert!(!is_l_dominant(&[p1.clone(), p3]));
    let mixed = LWeightRational::new(
        DrinfeldPoly::new(vec![a(0), a(4)]),
        DrinfeldPoly::new(vec![b(0)]),
        1,
    )
    .unwrap();
    assert_eq!(classical_weight(&mixed), 1);
    assert!(!is_l_dominant(&[mixed]));

    let lws = [p1, p2];
    assert!(is_t_dominant(&lws, &[]));
    // p1 = p2 * H_{2,a}: Gamma_{2,a} moves (aq^-4, aq^-2) to (a, aq^2).
    let good = AdjacencyRecord {
        source: 0,
        target: 1,
        current: AdjacencyCurrent::K { m: 2, sign: 1 },
        point: a(0),
    };
    assert!(adjacency_consistent(&lws, &good));
    assert!(is_t_dominant(&lws, &[good.clone()]));
    let bad = AdjacencyRecord {
        point: a(6),
        ..good.clone()
    };
    assert!(!is_t_dominant(&lws, &[bad]));
    // Reverse direction with the opposite sign needs a, aq^2 in P of the target.
    let rev = AdjacencyRecord {
        source: 1,
        target: 0,
        current: AdjacencyCurrent::K { m: 2, sign: -1 },
        point: a(0),
    };
    assert!(adjacency_consistent(&lws, &rev));
    assert!(is_t_dominant(&lws, &[rev]));
}

#[test]
fn unit_shift_criterion() {
    let p1 = LWeightRational::dominant(DrinfeldPoly::new(vec![a(0), a(2)]));
    let p2 = LWeightRational::dominant(DrinfeldPoly::new(vec![a(-2), a(0)]));
    let lws = [p1, p2];
    let rec = AdjacencyRecord {
        source: 0,
        target: 1,
        current: AdjacencyCurrent::K { m: 1, sign: 1 },
        point: a(0),
    };
    assert!(adjacency_consistent(&lws, &rec));
    assert!(satisfies_unit_shift_criterion(&lws, &[rec.clone()]));
    assert!(is_t_dominant(&lws, &[rec]));
    let off = AdjacencyRecord {
        source: 0,
        target: 1,
        current: AdjacencyCurrent::K { m: 1, sign: 1 },
        point: a(4),
    };
    assert!(!satisfies_unit_shift_criterion(&lws, &[off]));
}
