//! Round trips and jump-condition behaviour of the three presentations.

use stokes_core::fixtures::{
    random_class, random_filtered, random_graded, random_surface_graded, random_weber_filtered,
    seeded_rng, weber_class, weber_filtered, ClassBounds,
};
use stokes_core::flagged::Subspace;
use stokes_core::irregular::{CoverPoint, ExponentialFactor, IrregularClass};
use stokes_core::linalg::Matrix;
use stokes_core::scalar::rat;
use stokes_core::structures::{
    associated_graded_ls, canonical_splitting, canonical_splitting_with, dual_filtered,
    filtered_equal, graded_equal, graded_to_stokes_ls, grading_to_filtration,
    moderate_sections_filtered, moderate_sections_graded, moderate_sections_sls, one_level_splitting,
    refine_graded_to_full, stokes_ls_to_graded, tensor_filtered, SplitStrategy,
};

#[test]
fn weber_valid_fixture_passes() {
    let s = weber_filtered([[1, 0], [0, 1], [1, 1], [1, -1]]).unwrap();
    let report = s.validate().unwrap();
    assert!(report.is_valid(), "{:?}", report.failures());
}

#[test]
fn weber_broken_fixture_fails_with_certificate() {
    // adjacent equal lines violate the jump condition
    let s = weber_filtered([[1, 0], [1, 0], [1, 1], [1, -1]]).unwrap();
    let report = s.validate().unwrap();
    assert!(!report.is_valid());
    let fail = &report.failures()[0];
    assert_eq!(fail.what, "jump-splitting");
}

#[test]
fn weber_canonical_splitting_pairs_adjacent_lines() {
    let s = weber_filtered([[1, 0], [0, 1], [1, 1], [1, -1]]).unwrap();
    let g = canonical_splitting(&s).unwrap();
    let report = g.validate().unwrap();
    assert!(report.is_valid());
    // on the component containing direction 0 the pieces are the two
    // adjacent recessive lines L3 (dominant label) and L0 (recessive)
    let comps: Vec<_> = g.comps.clone();
    // component 0 contains the basepoint 15/8, between 7/4 and 9/4
    let g0 = &comps[0];
    let line = |v: [i64; 2]| {
        Subspace::from_rows(Matrix::from_ints(&[&[v[0], v[1]]]))
    };
    let pieces: Vec<Subspace> = g0.pieces().values().cloned().collect();
    assert!(pieces.contains(&line([1, 0]))); // L0
    assert!(pieces.contains(&line([1, -1]))); // L3
}

#[test]
fn weber_one_level_supersector() {
    let s = weber_filtered([[1, 0], [0, 1], [1, 1], [1, -1]]).unwrap();
    // the singular sector containing direction 1/4 pi is (0, 1/2) pi
    let (g, su) = one_level_splitting(&s, &rat(1, 4)).unwrap();
    assert_eq!(su.width(), rat(1, 1)); // pi/2 sector + 2 * pi/4
    let line = |v: [i64; 2]| Subspace::from_rows(Matrix::from_ints(&[&[v[0], v[1]]]));
    let pieces: Vec<Subspace> = g.pieces().values().cloned().collect();
    assert!(pieces.contains(&line([1, 0]))); // L0 at the subdominant label
    assert!(pieces.contains(&line([0, 1]))); // L1 at the dominant label
}

#[test]
fn random_graded_fixtures_are_valid() {
    let mut rng = seeded_rng(7);
    for _ in 0..25 {
        let class = random_class(&mut rng, &ClassBounds::default());
        let g = random_graded(&mut rng, &class).unwrap();
        let report = g.validate().unwrap();
        assert!(report.is_valid(), "{:?}", report.failures());
    }
}

#[test]
fn round_trip_split_after_phi() {
    let mut rng = seeded_rng(11);
    for i in 0..40 {
        let class = random_class(&mut rng, &ClassBounds::default());
        let g = random_graded(&mut rng, &class).unwrap();
        let f = grading_to_filtration(&g).unwrap();
        assert!(f.validate().unwrap().is_valid(), "fixture {i}");
        let g2 = canonical_splitting(&f).unwrap();
        let g_ref = refine_graded_to_full(&g).unwrap();
        assert!(graded_equal(&g_ref, &g2), "fixture {i}: splitting disagrees");
    }
}

#[test]
fn round_trip_phi_after_split() {
    let mut rng = seeded_rng(13);
    for _ in 0..15 {
        let class = random_class(&mut rng, &ClassBounds::default());
        let f = random_filtered(&mut rng, &class).unwrap();
        let g = canonical_splitting(&f).unwrap();
        let back = grading_to_filtration(&g).unwrap();
        let f_ref = stokes_core::structures::refine_to_full(&f).unwrap();
        assert!(filtered_equal(&back, &f_ref));
    }
}

#[test]
fn split_strategy_independent() {
    let mut rng = seeded_rng(17);
    // a three-level class to make the strategies differ
    let q3 = ExponentialFactor::monomial(rat(3, 1), rat(1, 1), rat(0, 1)).unwrap();
    let q2 = ExponentialFactor::monomial(rat(2, 1), rat(1, 1), rat(1, 2)).unwrap();
    let q1 = ExponentialFactor::monomial(rat(1, 1), rat(1, 1), rat(1, 4)).unwrap();
    let class = IrregularClass::from_factors(vec![
        (q3, 1),
        (q2, 1),
        (q1, 1),
        (ExponentialFactor::zero(), 1),
    ])
    .unwrap();
    assert_eq!(class.levels().unwrap().len(), 3);
    for _ in 0..3 {
        let g = random_graded(&mut rng, &class).unwrap();
        let f = grading_to_filtration(&g).unwrap();
        let a = canonical_splitting_with(&f, SplitStrategy::LowestFirst).unwrap();
        let b = canonical_splitting_with(&f, SplitStrategy::HighestFirst).unwrap();
        assert!(graded_equal(&a, &b));
    }
}

#[test]
fn spurious_jump_changes_nothing() {
    let mut rng = seeded_rng(19);
    let class = random_class(&mut rng, &ClassBounds::default());
    let f = random_filtered(&mut rng, &class).unwrap();
    let g = canonical_splitting(&f).unwrap();
    let f2 = f.refine(&rat(1, 7)).unwrap();
    assert!(f2.validate().unwrap().is_valid());
    let g2 = canonical_splitting(&f2).unwrap();
    // compare at a common refinement
    let g_ref = refine_graded_to_full(&g.refine(&rat(1, 7)).unwrap()).unwrap();
    let g2_ref = refine_graded_to_full(&g2).unwrap();
    assert!(graded_equal(&g_ref, &g2_ref));
}

#[test]
fn sls_round_trip() {
    let mut rng = seeded_rng(23);
    for _ in 0..20 {
        let class = random_class(&mut rng, &ClassBounds::default());
        let g = random_graded(&mut rng, &class).unwrap();
        let sls = graded_to_stokes_ls(&g).unwrap();
        assert!(sls.validate().unwrap().is_valid());
        let back = stokes_ls_to_graded(&sls).unwrap();
        // the reconstruction lives on the singular-direction window
        let g_ref = refine_graded_to_full(&g).unwrap();
        let back_ref = refine_graded_to_full(&back).unwrap();
        assert!(graded_equal(&g_ref, &back_ref));
    }
}

#[test]
fn weber_stokes_ls_relation() {
    let mut rng = seeded_rng(29);
    let s = random_weber_filtered(&mut rng).unwrap();
    let g = canonical_splitting(&s).unwrap();
    let sls = graded_to_stokes_ls(&g).unwrap();
    assert_eq!(sls.stokes.len(), 4);
    // genus zero on the plane: h S4 S3 S2 S1 = rho = 1
    let mut prod = sls.formal_monodromy.clone();
    for (_, s) in sls.stokes.iter().rev() {
        prod = &prod * s;
    }
    assert!(prod.is_identity());
    // determinant of the formal monodromy equals det(rho) = 1
    assert_eq!(
        sls.formal_monodromy.det().unwrap(),
        stokes_core::scalar::Gaussian::one()
    );
}

#[test]
fn formal_monodromy_of_tame_class_is_rho() {
    let mut rng = seeded_rng(31);
    let class = IrregularClass::tame(3);
    let g = random_graded(&mut rng, &class).unwrap();
    let f = grading_to_filtration(&g).unwrap();
    let gls = associated_graded_ls(&f).unwrap();
    assert_eq!(gls.monodromy, f.core.boundary.monodromy);
}

#[test]
fn associated_graded_matches_sls_route() {
    // the two graded local systems attached to a graded structure agree up
    // to a graded intertwiner: block coordinates -> lifts -> corrected into
    // the splitting pieces at the basepoint component
    let mut rng = seeded_rng(37);
    for _ in 0..10 {
        let class = random_class(&mut rng, &ClassBounds::default());
        let g = random_graded(&mut rng, &class).unwrap();
        let f = grading_to_filtration(&g).unwrap();
        let (gls, embed) = stokes_core::structures::associated_graded_with_embedding(&f).unwrap();
        let sls = graded_to_stokes_ls(&g).unwrap();
        let g_ref = refine_graded_to_full(&g).unwrap();
        let correct =
            stokes_core::flagged::splitting_iso(&g_ref.comps[0], &f.comps[0]).unwrap();
        let psi = &correct * &embed.transpose();
        let lhs = &psi * &gls.monodromy;
        let rhs = &sls.formal_monodromy * &psi;
        assert_eq!(lhs, rhs, "formal monodromies not intertwined");
    }
}

#[test]
fn moderate_sections_agree_across_encodings() {
    let mut rng = seeded_rng(41);
    for _ in 0..15 {
        let class = random_class(&mut rng, &ClassBounds::default());
        let g = random_graded(&mut rng, &class).unwrap();
        let f = grading_to_filtration(&g).unwrap();
        let sls = graded_to_stokes_ls(&g).unwrap();
        let a = moderate_sections_graded(&g).unwrap();
        let b = moderate_sections_filtered(&f).unwrap();
        let c = moderate_sections_sls(&sls).unwrap();
        assert_eq!(a, b);
        assert_eq!(a, c);
    }
}

#[test]
fn tame_trivial_monodromy_sections_full() {
    let class = IrregularClass::tame(3);
    let base = stokes_core::reps::generic_basepoint(&class).unwrap();
    let boundary = stokes_core::structures::Boundary::new(
        class.clone(),
        base,
        Matrix::identity(3),
    )
    .unwrap();
    let g0 = {
        let mut pieces = std::collections::BTreeMap::new();
        pieces.insert(CoverPoint { circle: 0, sheet: 0 }, Subspace::full(3));
        stokes_core::flagged::Grading::new(3, pieces).unwrap()
    };
    let g = stokes_core::structures::StokesGraded::new(boundary, vec![], vec![g0]).unwrap();
    let sec = moderate_sections_graded(&g).unwrap();
    assert_eq!(sec.dim(), 3);
}

#[test]
fn sections_vanish_without_tame_circle() {
    let mut rng = seeded_rng(43);
    let class = weber_class();
    assert!(class.tame_index().is_none());
    let g = random_graded(&mut rng, &class).unwrap();
    assert_eq!(moderate_sections_graded(&g).unwrap().dim(), 0);
    let f = grading_to_filtration(&g).unwrap();
    assert_eq!(moderate_sections_filtered(&f).unwrap().dim(), 0);
}

#[test]
fn dual_is_involution_and_tensor_cancels() {
    let mut rng = seeded_rng(47);
    for _ in 0..6 {
        let class = random_class(&mut rng, &ClassBounds { max_rank: 4, max_levels: 2, max_ram: 2 });
        let f = random_filtered(&mut rng, &class).unwrap();
        let d = match dual_filtered(&f) {
            Ok(d) => d,
            // the dual class can collide with the chosen basepoint
            Err(_) => continue,
        };
        assert!(d.validate().unwrap().is_valid());
        let dd = dual_filtered(&d).unwrap();
        assert_eq!(dd.class(), f.class());
        let f_ref = stokes_core::structures::refine_to_full(&f).unwrap();
        let dd_ref = stokes_core::structures::refine_to_full(&dd).unwrap();
        assert!(filtered_equal(&f_ref, &dd_ref));
    }
}

#[test]
fn rank_one_tensor_with_dual_is_tame() {
    // <q> ⊗ <-q> is tame of rank one
    let q = ExponentialFactor::monomial(rat(1, 1), rat(1, 1), rat(1, 2)).unwrap();
    let class = IrregularClass::from_factors(vec![(q, 1)]).unwrap();
    let mut rng = seeded_rng(53);
    let f = random_filtered(&mut rng, &class).unwrap();
    let d = dual_filtered(&f).unwrap();
    let t = tensor_filtered(&f, &d).unwrap();
    assert_eq!(t.class(), &IrregularClass::tame(1));
    assert!(t.validate().unwrap().is_valid());
}

#[test]
fn hom_of_self_contains_identity() {
    let mut rng = seeded_rng(59);
    let class = random_class(&mut rng, &ClassBounds { max_rank: 3, max_levels: 1, max_ram: 2 });
    let f = random_filtered(&mut rng, &class).unwrap();
    let sections = match stokes_core::structures::morphism_space(&f, &f) {
        Ok(s) => s,
        Err(_) => return, // dual basepoint collision; covered elsewhere
    };
    // the identity endomorphism: sum of e_i ⊗ e_i^* in kron coordinates
    let n = f.rank();
    let mut v = vec![stokes_core::scalar::Gaussian::zero(); n * n];
    for i in 0..n {
        v[i * n + i] = stokes_core::scalar::Gaussian::one();
    }
    assert!(sections.contains_vec(&v), "identity not a moderate section of End");
}

#[test]
fn surface_fixture_weber_relation() {
    let mut rng = seeded_rng(61);
    for _ in 0..5 {
        let g = canonical_splitting(&random_weber_filtered(&mut rng).unwrap()).unwrap();
        assert!(g.core.boundary.surface_consistent());
        let sls = graded_to_stokes_ls(&g).unwrap();
        assert!(sls.validate().unwrap().is_valid());
    }
}

#[test]
fn surface_fixture_cancelling_pairs() {
    let mut rng = seeded_rng(67);
    let mut made = 0;
    for _ in 0..40 {
        let class = random_class(
            &mut rng,
            &ClassBounds {
                max_rank: 4,
                max_levels: 1,
                max_ram: 1,
            },
        );
        let Ok(g) = random_surface_graded(&mut rng, &class, 0) else {
            continue;
        };
        assert!(g.core.boundary.surface_consistent());
        assert!(g.validate().unwrap().is_valid());
        made += 1;
    }
    assert!(made >= 5, "made only {made} surface fixtures");
}

#[test]
fn weber_intermediate_filtration_at_oscillation() {
    // at an oscillating direction the intermediate steps are the
    // intersections of the adjacent lines, and the partial order drops the
    // oscillating pair
    let s = weber_filtered([[1, 0], [0, 1], [1, 1], [1, -1]]).unwrap();
    let pos = s.core.window.window_pos(&rat(1, 4));
    let inter = s.intermediate_at(&pos).unwrap();
    // the two labels are incomparable there
    assert!(inter.lt.is_empty());
    let dims: Vec<usize> = inter.steps.values().map(|x| x.dim()).collect();
    // L0 and L1 are distinct lines: both one-step intersections are lines
    // of the opposite kind: F(q-) = L0 ∩ V = L0, F(q+) = V ∩ L1 = L1
    assert_eq!(dims, vec![1, 1]);
    // and the cumulative steps match Lemma-style splitting by any local
    // splitting: here the canonical one
    let g = canonical_splitting(&s).unwrap();
    let grading = g.grading_at(&(&pos + rat(1, 100))).unwrap();
    for (l, step) in &inter.steps {
        let mut span = grading.piece(l).unwrap().clone();
        for (a, b) in &inter.lt {
            if b == l {
                span = span.sum(grading.piece(a).unwrap());
            }
        }
        assert_eq!(&span, &inter.cumulative_step(l));
        assert_eq!(step, grading.piece(l).unwrap());
    }
}

#[test]
fn intermediate_equals_split_filtration_on_random_fixtures() {
    // the intermediate filtration is the associated filtration of any
    // local splitting under the partial order
    let mut rng = seeded_rng(71);
    for _ in 0..8 {
        let class = random_class(&mut rng, &ClassBounds::default());
        let g = random_graded(&mut rng, &class).unwrap();
        let f = grading_to_filtration(&g).unwrap();
        let split = canonical_splitting(&f).unwrap();
        for idx in 0..f.core.window.jumps.len() {
            let pos = f.core.window.jumps[idx].clone();
            let inter = f.intermediate_at(&pos).unwrap();
            // the splitting grading on either side of pos splits the
            // intermediate cumulative steps
            let just_after = &pos + rat(1, 10_000);
            let local = split.grading_at(&just_after).unwrap();
            for l in class.fiber() {
                let mut span = local.piece(&l).unwrap().clone();
                for (a, b) in &inter.lt {
                    if *b == l {
                        span = span.sum(local.piece(a).unwrap());
                    }
                }
                assert_eq!(span, inter.cumulative_step(&l));
            }
        }
    }
}

#[test]
fn levels_of_two_unramified_circles_without_tame() {
    // all pairwise germ differences of <z^-1> + <z^-2> have slope 2, so
    // there is a single level and a single fission stage
    let q1 = ExponentialFactor::monomial(rat(1, 1), rat(1, 1), rat(0, 1)).unwrap();
    let q2 = ExponentialFactor::monomial(rat(2, 1), rat(1, 1), rat(0, 1)).unwrap();
    let class = IrregularClass::from_factors(vec![(q1, 1), (q2, 1)]).unwrap();
    assert_eq!(class.levels().unwrap(), vec![rat(2, 1)]);
    let tree = class.fission_tree().unwrap();
    assert_eq!(tree.stages.len(), 1);
}

#[test]
fn incompatible_gradings_report_certificate() {
    use stokes_core::flagged::wild_monodromy;
    // two full gradings of the plane with no common piece cannot be
    // connected by a wild monodromy
    let mut p1 = std::collections::BTreeMap::new();
    p1.insert(1u32, Subspace::from_rows(Matrix::from_ints(&[&[1, 0]])));
    p1.insert(2u32, Subspace::from_rows(Matrix::from_ints(&[&[0, 1]])));
    let g1 = stokes_core::flagged::Grading::new(2, p1).unwrap();
    let mut p2 = std::collections::BTreeMap::new();
    p2.insert(1u32, Subspace::from_rows(Matrix::from_ints(&[&[1, 1]])));
    p2.insert(2u32, Subspace::from_rows(Matrix::from_ints(&[&[1, -1]])));
    let g2 = stokes_core::flagged::Grading::new(2, p2).unwrap();
    let err = wild_monodromy(&g1, &g2).unwrap_err();
    assert!(matches!(err, stokes_core::Error::Incompatible(_)));
}

#[test]
fn median_at_singular_directions_bisects() {
    let mut rng = seeded_rng(73);
    let g = canonical_splitting(&random_weber_filtered(&mut rng).unwrap()).unwrap();
    for idx in 0..g.core.window.jumps.len() {
        let pos = g.core.window.jumps[idx].clone();
        let med = g.median_at(&pos).unwrap();
        let (left, right) = g.jump_sides_at(&pos).unwrap();
        let a = stokes_core::flagged::wild_monodromy(&left, &med).unwrap();
        let b = stokes_core::flagged::wild_monodromy(&med, &right).unwrap();
        assert_eq!(a, b);
        assert_eq!(&a * &a, stokes_core::flagged::wild_monodromy(&left, &right).unwrap());
    }
}

#[test]
fn graded_hom_of_self_has_identity_section() {
    let mut rng = seeded_rng(79);
    let class = random_class(&mut rng, &ClassBounds { max_rank: 3, max_levels: 1, max_ram: 2 });
    let g = random_graded(&mut rng, &class).unwrap();
    let Ok(h) = stokes_core::structures::hom_graded(&g, &g) else {
        return; // dual basepoint collision
    };
    assert!(h.validate().unwrap().is_valid());
    let sections = stokes_core::structures::moderate_sections_graded(&h).unwrap();
    let n = g.rank();
    let mut v = vec![stokes_core::scalar::Gaussian::zero(); n * n];
    for i in 0..n {
        v[i * n + i] = stokes_core::scalar::Gaussian::one();
    }
    assert!(sections.contains_vec(&v));
}

#[test]
fn quotient_basis_extends() {
    let a = Subspace::from_rows(Matrix::from_ints(&[&[1, 0, 0]]));
    let q = a.quotient_basis(&Subspace::full(3)).unwrap();
    assert_eq!(q.n_rows(), 2);
    let all = a.sum(&Subspace::from_rows(q));
    assert_eq!(all.dim(), 3);
}
