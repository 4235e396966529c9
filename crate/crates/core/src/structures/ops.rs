//! Moderate sections and the dual/tensor/hom operations on Stokes
//! structures.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::flagged::{Filtration, Grading, Subspace};
use crate::irregular::{CoverPoint, Dominance, ExponentialFactor, IrregularClass};
use crate::linalg::Matrix;
use crate::scalar::Rat;

use super::{
    stokes_ls_to_graded, Boundary, StokesFiltered, StokesGraded, StokesLocalSys, StructureCore,
    Window,
};

/// Fixed vectors of a matrix: `ker(m - 1)`.
fn fixed_space(m: &Matrix) -> Subspace {
    let n = m.n_rows();
    let diff = m - &Matrix::identity(n);
    Subspace::from_rows(diff.kernel())
}

/// Vectors fixed by every interior generator and the boundary monodromy.
fn invariant_space(b: &Boundary) -> Subspace {
    let mut acc = fixed_space(&b.monodromy);
    for (x, y) in &b.handles {
        acc = acc.intersect(&fixed_space(x));
        acc = acc.intersect(&fixed_space(y));
    }
    acc
}

/// Sections of the underlying local system with moderate growth in every
/// direction: monodromy-invariant vectors constrained into the tame step of
/// every component filtration.
pub fn moderate_sections_filtered(s: &StokesFiltered) -> Result<Subspace> {
    let mut acc = invariant_space(&s.core.boundary);
    let zero = ExponentialFactor::zero();
    for t in 0..s.comps.len() {
        let mid = s.core.window.component_midpoint(t);
        acc = acc.intersect(&super::step_versus_germ(s, &mid, &zero)?);
    }
    Ok(acc)
}

/// Moderate sections of a graded presentation: invariant vectors lying in
/// the tame graded piece of every component.
pub fn moderate_sections_graded(s: &StokesGraded) -> Result<Subspace> {
    let mut acc = invariant_space(&s.core.boundary);
    let Some(tame) = s.class().tame_index() else {
        return Ok(Subspace::zero(s.rank()));
    };
    let tame_label = CoverPoint {
        circle: tame,
        sheet: 0,
    };
    for g in &s.comps {
        acc = acc.intersect(g.piece(&tame_label).expect("tame piece"));
    }
    Ok(acc)
}

/// Moderate sections of a Stokes local system.
pub fn moderate_sections_sls(s: &StokesLocalSys) -> Result<Subspace> {
    moderate_sections_graded(&stokes_ls_to_graded(s)?)
}

/// The strictly-below step against an arbitrary germ: the sum of the full
/// steps of the labels strictly subdominant to it.
pub fn step_strictly_below_germ(
    s: &StokesFiltered,
    x: &Rat,
    germ: &ExponentialFactor,
) -> Result<Subspace> {
    let class = s.class();
    let mut acc = Subspace::zero(s.rank());
    for l in class.fiber() {
        let lg = class.germ(&l);
        let diff = lg.sub(germ)?;
        if diff.is_zero() {
            continue;
        }
        if matches!(
            crate::irregular::dominance_of_diff(&diff, x),
            Dominance::Less
        ) {
            acc = acc.sum(&s.step_at(x, &l)?);
        }
    }
    Ok(acc)
}

fn dual_boundary(b: &Boundary, class: IrregularClass) -> Result<Boundary> {
    let contragredient = |m: &Matrix| -> Result<Matrix> { Ok(m.inverse()?.transpose()) };
    let mut out = Boundary::new(class, b.base_pi.clone(), contragredient(&b.monodromy)?)?;
    let mut handles = Vec::new();
    for (x, y) in &b.handles {
        handles.push((contragredient(x)?, contragredient(y)?));
    }
    out = out.with_handles(handles);
    out.genus = b.genus;
    Ok(out)
}

/// The dual Stokes filtered local system: steps are annihilators of the
/// strictly-below steps at the negated germs.
pub fn dual_filtered(s: &StokesFiltered) -> Result<StokesFiltered> {
    let dual_class = s.class().dual();
    let boundary = dual_boundary(&s.core.boundary, dual_class.clone())?;
    let jumps = StructureCore::full_jump_set(&dual_class)?;
    let window = Window::new(boundary.base_pi.clone(), jumps)?;
    let mut comps = Vec::with_capacity(window.n_components());
    for t in 0..window.n_components() {
        let mid = window.component_midpoint(t);
        let order = dual_class.dominance_order_at(&mid)?;
        let mut steps = Vec::with_capacity(order.len());
        for q in &order {
            let neg = dual_class.germ(q).neg();
            let below = step_strictly_below_germ(s, &mid, &neg)?;
            steps.push(below.perp());
        }
        comps.push(Filtration::new(order, steps)?);
    }
    StokesFiltered::new(boundary, StructureCore::full_jump_set(&dual_class)?, comps)
}

/// The dual Stokes graded local system: each piece is the annihilator of
/// the sum of the pieces at the other labels.
pub fn dual_graded(s: &StokesGraded) -> Result<StokesGraded> {
    let dual_class = s.class().dual();
    let boundary = dual_boundary(&s.core.boundary, dual_class.clone())?;
    let jumps = StructureCore::full_jump_set(&dual_class)?;
    let window = Window::new(boundary.base_pi.clone(), jumps.clone())?;
    let n = s.rank();
    let mut comps = Vec::with_capacity(window.n_components());
    for t in 0..window.n_components() {
        let mid = window.component_midpoint(t);
        let g = s.grading_at(&mid)?;
        let mut pieces = BTreeMap::new();
        for q in dual_class.fiber() {
            let neg = dual_class.germ(&q).neg();
            let mut others = Subspace::zero(n);
            for l in s.class().fiber() {
                if s.class().germ(&l) != neg {
                    others = others.sum(g.piece(&l).expect("fibre piece"));
                }
            }
            pieces.insert(q, others.perp());
        }
        comps.push(Grading::new(n, pieces)?);
    }
    StokesGraded::new(boundary, jumps, comps)
}

fn tensor_boundary(a: &Boundary, b: &Boundary, class: IrregularClass) -> Result<Boundary> {
    if a.base_pi != b.base_pi {
        return Err(Error::Shape("tensor operands use different basepoints".into()));
    }
    if a.genus != b.genus {
        return Err(Error::Shape("tensor operands live on different surfaces".into()));
    }
    let mut out = Boundary::new(
        class,
        a.base_pi.clone(),
        a.monodromy.kron(&b.monodromy),
    )?;
    let mut handles = Vec::new();
    for ((x1, y1), (x2, y2)) in a.handles.iter().zip(&b.handles) {
        handles.push((x1.kron(x2), y1.kron(y2)));
    }
    out = out.with_handles(handles);
    out.genus = a.genus;
    Ok(out)
}

/// All label pairs of the two operand fibres whose germ sum equals a given
/// germ.
fn matching_pairs(
    a: &IrregularClass,
    b: &IrregularClass,
    germ: &ExponentialFactor,
) -> Result<Vec<(CoverPoint, CoverPoint)>> {
    let mut out = Vec::new();
    for l1 in a.fiber() {
        for l2 in b.fiber() {
            if a.germ(&l1).add(&b.germ(&l2))? == *germ {
                out.push((l1, l2));
            }
        }
    }
    Ok(out)
}

/// Tensor product of Stokes filtered local systems.
pub fn tensor_filtered(a: &StokesFiltered, b: &StokesFiltered) -> Result<StokesFiltered> {
    let class = a.class().tensor(b.class())?;
    let boundary = tensor_boundary(&a.core.boundary, &b.core.boundary, class.clone())?;
    let jumps = StructureCore::full_jump_set(&class)?;
    let window = Window::new(boundary.base_pi.clone(), jumps.clone())?;
    let n = class.rank() as usize;
    let mut comps = Vec::with_capacity(window.n_components());
    for t in 0..window.n_components() {
        let mid = window.component_midpoint(t);
        let order = class.dominance_order_at(&mid)?;
        let mut steps: Vec<Subspace> = Vec::with_capacity(order.len());
        for q in &order {
            let mut acc = Subspace::zero(n);
            for (l1, l2) in matching_pairs(a.class(), b.class(), &class.germ(q))? {
                let s1 = a.step_at(&mid, &l1)?;
                let s2 = b.step_at(&mid, &l2)?;
                acc = acc.sum(&s1.tensor(&s2));
            }
            // steps accumulate along the order
            if let Some(prev) = steps.last() {
                acc = acc.sum(prev);
            }
            steps.push(acc);
        }
        comps.push(Filtration::new(order, steps)?);
    }
    StokesFiltered::new(boundary, jumps, comps)
}

/// Tensor product of Stokes graded local systems.
pub fn tensor_graded(a: &StokesGraded, b: &StokesGraded) -> Result<StokesGraded> {
    let class = a.class().tensor(b.class())?;
    let boundary = tensor_boundary(&a.core.boundary, &b.core.boundary, class.clone())?;
    let jumps = StructureCore::full_jump_set(&class)?;
    let window = Window::new(boundary.base_pi.clone(), jumps.clone())?;
    let n = class.rank() as usize;
    let mut comps = Vec::with_capacity(window.n_components());
    for t in 0..window.n_components() {
        let mid = window.component_midpoint(t);
        let ga = a.grading_at(&mid)?;
        let gb = b.grading_at(&mid)?;
        let mut pieces = BTreeMap::new();
        for q in class.fiber() {
            let mut acc = Subspace::zero(n);
            for (l1, l2) in matching_pairs(a.class(), b.class(), &class.germ(&q))? {
                acc = acc.sum(
                    &ga.piece(&l1)
                        .expect("piece")
                        .tensor(gb.piece(&l2).expect("piece")),
                );
            }
            pieces.insert(q, acc);
        }
        comps.push(Grading::new(n, pieces)?);
    }
    StokesGraded::new(boundary, jumps, comps)
}

/// Internal hom `Hom(S1, S2) = S2 ⊗ S1^dual` of filtered structures.
pub fn hom_filtered(a: &StokesFiltered, b: &StokesFiltered) -> Result<StokesFiltered> {
    tensor_filtered(b, &dual_filtered(a)?)
}

/// Internal hom of graded structures.
pub fn hom_graded(a: &StokesGraded, b: &StokesGraded) -> Result<StokesGraded> {
    tensor_graded(b, &dual_graded(a)?)
}

/// Morphism space: moderate sections of the internal hom.
pub fn morphism_space(a: &StokesFiltered, b: &StokesFiltered) -> Result<Subspace> {
    moderate_sections_filtered(&hom_filtered(a, b)?)
}
