//! Direction solving against dense-sampling oracles, dominance coherence,
//! and class algebra invariants.

use rand::Rng;
use stokes_core::fixtures::{random_class, seeded_rng, weber_class, ClassBounds};
use stokes_core::irregular::{Dominance, ExponentialFactor, IrregularClass};
use stokes_core::scalar::{cos_sign_pi, rat, reduce_mod2, Rat, Sign};

fn fig1_class() -> IrregularClass {
    // three circles <a z^-2> with coefficients 1, i, -1: all pairwise
    // differences have distinct arguments, so the twelve maximal-decay
    // directions are distinct
    let q1 = ExponentialFactor::monomial(rat(2, 1), rat(1, 1), rat(0, 1)).unwrap();
    let q2 = ExponentialFactor::monomial(rat(2, 1), rat(1, 1), rat(1, 2)).unwrap();
    let q3 = ExponentialFactor::monomial(rat(2, 1), rat(1, 1), rat(1, 1)).unwrap();
    IrregularClass::from_factors(vec![(q1, 1), (q2, 1), (q3, 1)]).unwrap()
}

#[test]
fn fig1_has_twelve_singular_directions_one_arrow_each() {
    let c = fig1_class();
    let sing = c.singular_directions().unwrap();
    assert_eq!(sing.len(), 12);
    for d in &sing {
        assert_eq!(c.stokes_arrows_at(d).unwrap().len(), 1);
    }
}

#[test]
fn directions_agree_with_dense_sampling() {
    // sign changes of the dominance comparison located by scanning 10^4
    // rational angles must be bracketed by the exact direction lists
    let mut rng = seeded_rng(311);
    for _ in 0..12 {
        let class = random_class(
            &mut rng,
            &ClassBounds {
                max_rank: 4,
                max_levels: 2,
                max_ram: 3,
            },
        );
        let stokes = class.stokes_directions().unwrap();
        let fiber = class.fiber();
        let samples = 10_000i64;
        let mut located: Vec<Rat> = Vec::new();
        for i in &fiber {
            for j in &fiber {
                if i >= j {
                    continue;
                }
                let mut prev: Option<Dominance> = None;
                for s in 0..samples {
                    let theta = rat(2 * s, samples);
                    let d = class.dominance_compare(i, j, &theta).unwrap();
                    if let Some(p) = prev {
                        if p != d {
                            // a change in (s-1, s]: the exact solver must
                            // list a Stokes direction there
                            let lo = rat(2 * (s - 1), samples);
                            let hi = theta.clone();
                            let witness = stokes
                                .iter()
                                .find(|t| (**t > lo && **t <= hi) || (lo.clone()..=hi.clone()).contains(t));
                            assert!(
                                witness.is_some(),
                                "sign change near {}/{} without an exact direction",
                                2 * s,
                                samples
                            );
                            located.push(witness.unwrap().clone());
                        }
                    }
                    prev = Some(d);
                }
            }
        }
        // every exact direction is genuinely oscillatory for some pair
        for t in &stokes {
            let mut oscillates = false;
            for i in &fiber {
                for j in &fiber {
                    if i < j
                        && class.dominance_compare(i, j, t).unwrap() == Dominance::Oscillatory
                    {
                        oscillates = true;
                    }
                }
            }
            assert!(oscillates);
        }
    }
}

#[test]
fn arrows_dominate_on_a_neighbourhood() {
    // an arrow at d forces strict dominance on both sides of d
    let mut rng = seeded_rng(313);
    for _ in 0..15 {
        let class = random_class(&mut rng, &ClassBounds::default());
        let sing = class.singular_directions().unwrap();
        let stokes = class.stokes_directions().unwrap();
        let mut all: Vec<Rat> = sing.iter().chain(stokes.iter()).cloned().collect();
        all.sort();
        all.dedup();
        // a gap below the spacing of special directions
        let eps = if all.len() < 2 {
            rat(1, 100)
        } else {
            let mut min_gap = rat(2, 1);
            for w in all.windows(2) {
                min_gap = min_gap.min(&w[1] - &w[0]);
            }
            min_gap / rat(3, 1)
        };
        for d in &sing {
            for a in class.stokes_arrows_at(d).unwrap() {
                for e in [d - &eps, d + &eps] {
                    assert_eq!(
                        class
                            .dominance_compare(&a.target, &a.source, &e)
                            .unwrap(),
                        Dominance::Less
                    );
                }
            }
        }
    }
}

#[test]
fn dominance_constant_on_components() {
    let mut rng = seeded_rng(317);
    for _ in 0..10 {
        let class = random_class(&mut rng, &ClassBounds::default());
        let stokes = class.stokes_directions().unwrap();
        if stokes.is_empty() {
            continue;
        }
        let m = stokes.len();
        for t in 0..m {
            let lo = stokes[t].clone();
            let hi = if t + 1 == m {
                &stokes[0] + rat(2, 1)
            } else {
                stokes[t + 1].clone()
            };
            let width = &hi - &lo;
            let probes = [
                &lo + &(&width * rat(1, 4)),
                &lo + &(&width * rat(1, 2)),
                &lo + &(&width * rat(3, 4)),
            ];
            let orders: Vec<_> = probes
                .iter()
                .map(|p| class.dominance_order_at(p).unwrap())
                .collect();
            assert_eq!(orders[0], orders[1]);
            assert_eq!(orders[1], orders[2]);
        }
    }
}

#[test]
fn cover_monodromy_respects_dominance() {
    // transporting the fibre once around maps the order at d to itself
    let mut rng = seeded_rng(331);
    for _ in 0..10 {
        let class = random_class(&mut rng, &ClassBounds::default());
        let stokes = class.stokes_directions().unwrap();
        let d = stokes
            .first()
            .map(|s| s + rat(1, 17))
            .unwrap_or_else(|| rat(1, 17));
        if class.dominance_order_at(&d).is_err() {
            continue;
        }
        let at_d = class.dominance_order_at(&d).unwrap();
        let lifted = class.dominance_order_at(&(&d + rat(2, 1))).unwrap();
        let transported: Vec<_> = lifted
            .iter()
            .map(|p| class.cover_monodromy_pow(p, 1))
            .collect();
        assert_eq!(at_d, transported);
    }
}

#[test]
fn end_class_invariants() {
    let mut rng = seeded_rng(337);
    for _ in 0..15 {
        let class = random_class(&mut rng, &ClassBounds::default());
        let end = class.end().unwrap();
        assert_eq!(end.rank(), class.rank() * class.rank());
        let ti = end.tame_index().expect("end class contains the tame circle");
        assert!(end.multiplicity(ti) as usize >= class.circles().len());
        // levels from End match pairwise in-fibre difference slopes
        assert_eq!(class.levels().unwrap(), class.levels_rel(None).unwrap());
        // dual is an involution on classes
        assert_eq!(class.dual().dual(), class);
    }
}

#[test]
fn fission_tree_structure() {
    let mut rng = seeded_rng(347);
    for _ in 0..15 {
        let class = random_class(&mut rng, &ClassBounds::default());
        let tree = class.fission_tree().unwrap();
        assert_eq!(tree.levels, class.levels().unwrap());
        // degrees strictly decrease, stage maps are onto
        let mut prev = class.fiber().len();
        let mut prev_class = class.clone();
        for stage in &tree.stages {
            let deg = stage.class.fiber().len();
            assert!(deg < prev);
            assert_eq!(stage.map.len(), prev_class.fiber().len());
            let mut images: Vec<_> = stage.map.values().collect();
            images.sort();
            images.dedup();
            assert_eq!(images.len(), deg);
            prev = deg;
            prev_class = stage.class.clone();
        }
    }
}

#[test]
fn quotient_below_all_levels_is_bijective() {
    let mut rng = seeded_rng(349);
    for _ in 0..10 {
        let class = random_class(&mut rng, &ClassBounds::default());
        let levels = class.levels().unwrap();
        let k = match levels.first() {
            Some(k0) => k0 / rat(2, 1),
            None => rat(1, 2),
        };
        if !num_traits::Signed::is_positive(&k) {
            continue;
        }
        let (quot, map) = class.natural_quotient(&k).unwrap();
        assert_eq!(quot.fiber().len(), class.fiber().len());
        assert_eq!(map.len(), class.fiber().len());
    }
}

#[test]
fn scalar_arithmetic_matches_f64() {
    let mut rng = seeded_rng(353);
    for _ in 0..1000 {
        let a = rat(rng.gen_range(-50..=50), rng.gen_range(1..=20));
        let b = rat(rng.gen_range(-50..=50), rng.gen_range(1..=20));
        let to_f = |r: &Rat| -> f64 {
            let n: f64 = r.numer().to_string().parse().unwrap();
            let d: f64 = r.denom().to_string().parse().unwrap();
            n / d
        };
        assert!((to_f(&(&a + &b)) - (to_f(&a) + to_f(&b))).abs() < 1e-9);
        assert!((to_f(&(&a * &b)) - (to_f(&a) * to_f(&b))).abs() < 1e-9);
        // cos sign agrees with floating point evaluation away from zeros
        let c = cos_sign_pi(&a);
        let fv = (to_f(&a) * core::f64::consts::PI).cos();
        match c {
            Sign::Positive => assert!(fv > -1e-9),
            Sign::Negative => assert!(fv < 1e-9),
            Sign::Zero => assert!(fv.abs() < 1e-9),
        }
    }
}

#[test]
fn cos_sign_symmetries() {
    let mut rng = seeded_rng(359);
    for _ in 0..1000 {
        let t = rat(rng.gen_range(-200..=200), rng.gen_range(1..=40));
        let neg = cos_sign_pi(&-t.clone());
        assert_eq!(cos_sign_pi(&t), neg);
        let shifted = cos_sign_pi(&(&t + rat(1, 1)));
        let expect = match cos_sign_pi(&t) {
            Sign::Positive => Sign::Negative,
            Sign::Negative => Sign::Positive,
            Sign::Zero => Sign::Zero,
        };
        assert_eq!(shifted, expect);
        // normalization is idempotent
        assert_eq!(reduce_mod2(&reduce_mod2(&t)), reduce_mod2(&t));
    }
}

#[test]
fn weber_end_levels() {
    let w = weber_class();
    assert_eq!(w.levels().unwrap(), vec![rat(2, 1)]);
    let e = w.end().unwrap();
    let slopes: Vec<Rat> = e.circles().iter().map(|c| c.slope().clone()).collect();
    assert_eq!(slopes.iter().filter(|s| !num_traits::Zero::is_zero(*s)).count(), 2);
}
