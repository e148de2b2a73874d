use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use refinekit::independence::{index_word, zero_set, Annihilation, CoefVector};
use refinekit::mask::{builtin_mask, rational_mask, Family, Mask};
use refinekit::scalar::parse_rational;
use refinekit::{
    annihilation_search, build_two_scale, build_two_scale_exact, classify, Dichotomy, Evaluator, Rational,
};

fn trapezoid() -> Mask {
    rational_mask("trapezoid", &[(1, 2), (1, 2), (1, 2), (1, 2)]).unwrap()
}

fn ints(v: &[i64]) -> CoefVector<Rational> {
    CoefVector::new(
        v.iter()
            .map(|k| parse_rational(&k.to_string()).unwrap())
            .collect(),
    )
}

/// First annihilating word by enumerating every word up to `depth`.
fn brute_force(mask: &Mask, c: &CoefVector<Rational>, depth: u32) -> Option<String> {
    let pair = build_two_scale_exact(mask).unwrap();
    for len in 0..=depth {
        for index in 0..1usize << len {
            let w = index_word(index, len);
            if pair
                .apply_word(&w, c.components())
                .iter()
                .all(|x| *x == Rational::from_integer(0.into()))
            {
                return Some(w.iter().map(|d| char::from(b'0' + d.bit())).collect());
            }
        }
    }
    None
}

#[test]
fn search_agrees_with_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for mask in [trapezoid(), builtin_mask(Family::Bspline, 3).unwrap()] {
        let pair = build_two_scale_exact(&mask).unwrap();
        let mut found = 0;
        for _ in 0..60 {
            let v: Vec<i64> = (0..3).map(|_| rng.gen_range(-2..=2)).collect();
            if v.iter().all(|x| *x == 0) {
                continue;
            }
            let c = ints(&v);
            let fast = annihilation_search(&pair, &c, 7).unwrap();
            let slow = brute_force(&mask, &c, 7);
            let fast_word = fast
                .word()
                .map(|w| w.iter().map(|d| char::from(b'0' + d.bit())).collect::<String>());
            assert_eq!(fast_word, slow, "{} c={v:?}", mask.name());
            found += slow.is_some() as usize;
        }
        if mask.name() == "trapezoid" {
            assert!(found > 0);
        }
    }
}

#[test]
fn dichotomy_matches_zero_set_measure() {
    // annihilated vectors vanish on a whole cell; certified ones on a null grid set
    let mask = trapezoid();
    let pair = build_two_scale_exact(&mask).unwrap();
    let ev = Evaluator::new(build_two_scale(&mask).unwrap()).unwrap();
    for v in [[1, -1, 1], [1, 0, -1], [2, -1, 0], [0, 1, 1], [1, -1, 0]] {
        let c = ints(&v);
        let cf = CoefVector::new(v.iter().map(|x| *x as f64).collect());
        let k = zero_set(&ev, &cf, 12, 1e-9).unwrap();
        match classify(&pair, &c, 10).unwrap() {
            Dichotomy::Annihilated { word } => {
                let cell = 2f64.powi(-(word.len() as i32));
                assert!(k.measure() >= cell, "{v:?}: {}", k.measure());
            }
            Dichotomy::Certified(cert) => {
                assert!(cert.min_norm > 0.0);
                assert!(k.measure() <= 2f64.powi(-10), "{v:?}: {}", k.measure());
            }
            Dichotomy::Indeterminate(_) => panic!("exact mode is never indeterminate"),
        }
    }
}

#[test]
fn zero_sets_of_random_combinations_are_null() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for family in [Family::Bspline, Family::Daubechies] {
        for order in 2..=4 {
            let m = builtin_mask(family, order).unwrap();
            let ev = Evaluator::new(build_two_scale(&m).unwrap()).unwrap();
            for _ in 0..10 {
                let c: Vec<f64> = (0..m.support()).map(|_| rng.gen_range(-1.0..1.0)).collect();
                let cv = CoefVector::new(c);
                let k = zero_set(&ev, &cv, 12, 1e-9).unwrap();
                assert!(k.measure() <= 2f64.powi(-10), "{}: {}", m.name(), k.measure());
                match classify(ev.pair(), &cv, 12).unwrap() {
                    Dichotomy::Certified(_) => {}
                    other => panic!("{}: {other:?}", m.name()),
                }
            }
        }
    }
}

#[test]
fn hat_never_annihilates_small_integer_vectors() {
    let pair = build_two_scale_exact(&builtin_mask(Family::Bspline, 2).unwrap()).unwrap();
    for a in -3i64..=3 {
        for b in -3i64..=3 {
            if a == 0 && b == 0 {
                continue;
            }
            let r = annihilation_search(&pair, &ints(&[a, b]), 10).unwrap();
            assert!(matches!(r, Annihilation::NotFound { .. }), "({a}, {b})");
        }
    }
}

#[test]
fn zero_set_measure_shrinks_with_resolution() {
    // one more grid level and half the tolerance at each step
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for m in refinekit::mask::continuous_catalog() {
        let ev = Evaluator::new(build_two_scale(&m).unwrap()).unwrap();
        for _ in 0..5 {
            let c: Vec<f64> = (0..m.support()).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let cv = CoefVector::new(c);
            let measures: Vec<f64> = (8..=14)
                .map(|r| zero_set(&ev, &cv, r, 2f64.powi(4 - r as i32)).unwrap().measure())
                .collect();
            for w in measures.windows(2) {
                assert!(w[1] <= w[0], "{}: {measures:?}", m.name());
            }
            assert!(measures[6] <= measures[0] / 8.0 || measures[6] == 0.0, "{}: {measures:?}", m.name());
        }
    }
}
