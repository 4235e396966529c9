//! The canonical splitting of a Stokes filtration: one-level splittings on
//! supersectors, and the level recursion that composes them.
//!
//! The recursion works with relative structures: a vector space with a
//! global quotient grading, a finer filtration per component, and the germ
//! data of the covering labels. Splitting off the lowest level `k` yields a
//! coarser filtered structure on the same space and a finer one on the
//! associated graded; both have fewer levels and the two splittings
//! compose.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::flagged::{congruent_element, Filtration, Grading, Subspace};
use crate::irregular::{CoverPoint, ExponentialFactor};
use crate::linalg::Matrix;
use crate::scalar::{rat, rat_to_string, reduce_mod2, Rat};

use super::{
    filtered_equal, grading_to_filtration, sweep_positions, Position, RamifiedInterval,
    StokesFiltered, StokesGraded, StructureCore, Window,
};

/// Which level to peel first in the multi-level recursion. The result is
/// independent of the choice; `HighestFirst` exists to check that.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SplitStrategy {
    LowestFirst,
    HighestFirst,
}

/// Leading datum of a germ difference: its slope and the argument of the
/// top coefficient. Dominance at any position is the sign of
/// `cos(psi - slope * theta)`.
#[derive(Clone, Debug)]
pub(crate) struct PairLead {
    pub slope: Rat,
    pub psi: Rat,
}

/// Cover-label data of a relative structure `I -> K`.
#[derive(Clone)]
pub(crate) struct RelClass {
    /// Fibre labels of `I`, sorted.
    pub labels: Vec<CoverPoint>,
    /// Window germ per label (sheet offsets folded in).
    pub germs: BTreeMap<CoverPoint, ExponentialFactor>,
    /// Positive-turn label monodromy.
    pub rho_hat: BTreeMap<CoverPoint, CoverPoint>,
    /// Part map to `K`, sending each label to its part's minimal label.
    pub part_of: BTreeMap<CoverPoint, CoverPoint>,
    /// Leading data of the in-part germ differences, both orientations.
    leads: BTreeMap<(CoverPoint, CoverPoint), PairLead>,
    /// Members per part.
    members: BTreeMap<CoverPoint, Vec<CoverPoint>>,
}

impl RelClass {
    pub fn new(
        labels: Vec<CoverPoint>,
        germs: BTreeMap<CoverPoint, ExponentialFactor>,
        rho_hat: BTreeMap<CoverPoint, CoverPoint>,
        part_of: BTreeMap<CoverPoint, CoverPoint>,
    ) -> Result<Self> {
        let mut leads = BTreeMap::new();
        for i in &labels {
            for j in &labels {
                if i != j && part_of[i] == part_of[j] {
                    let d = germs[i].sub(&germs[j])?;
                    let lead = d
                        .leading()
                        .ok_or_else(|| Error::Invalid("labels with identical germs".into()))?;
                    leads.insert(
                        (*i, *j),
                        PairLead {
                            slope: lead.exponent.clone(),
                            psi: lead.coeff.arg_pi.clone(),
                        },
                    );
                }
            }
        }
        let mut members: BTreeMap<CoverPoint, Vec<CoverPoint>> = BTreeMap::new();
        for l in &labels {
            members.entry(part_of[l]).or_default().push(*l);
        }
        Ok(RelClass {
            labels,
            germs,
            rho_hat,
            part_of,
            leads,
            members,
        })
    }
    fn rho_hat_pow(&self, l: &CoverPoint, w: i64) -> CoverPoint {
        let mut cur = *l;
        if w >= 0 {
            for _ in 0..w {
                cur = self.rho_hat[&cur];
            }
        } else {
            let inverse: BTreeMap<CoverPoint, CoverPoint> =
                self.rho_hat.iter().map(|(a, b)| (*b, *a)).collect();
            for _ in 0..(-w) {
                cur = inverse[&cur];
            }
        }
        cur
    }

    /// Monodromy induced on the part representatives.
    fn rho_hat_part(&self, k: &CoverPoint) -> CoverPoint {
        self.part_of[&self.rho_hat[k]]
    }

    fn rho_hat_part_pow(&self, k: &CoverPoint, w: i64) -> CoverPoint {
        let mut cur = *k;
        if w >= 0 {
            for _ in 0..w {
                cur = self.rho_hat_part(&cur);
            }
        } else {
            let parts: Vec<CoverPoint> = self.part_reps();
            let inverse: BTreeMap<CoverPoint, CoverPoint> = parts
                .iter()
                .map(|p| (self.rho_hat_part(p), *p))
                .collect();
            for _ in 0..(-w) {
                cur = inverse[&cur];
            }
        }
        cur
    }

    fn part_reps(&self) -> Vec<CoverPoint> {
        let mut v: Vec<CoverPoint> = self.part_of.values().copied().collect();
        v.sort();
        v.dedup();
        v
    }

    fn members(&self, part: &CoverPoint) -> &[CoverPoint] {
        self.members.get(part).map(Vec::as_slice).unwrap_or(&[])
    }

    /// Distinct slopes of in-part germ differences.
    fn levels(&self) -> Result<Vec<Rat>> {
        let mut out: Vec<Rat> = self.leads.values().map(|l| l.slope.clone()).collect();
        out.sort();
        out.dedup();
        Ok(out)
    }

    /// Window positions of the in-part maximal-decay directions.
    fn singular_positions(&self, window: &Window) -> Result<Vec<Rat>> {
        let mut dirs = Vec::new();
        for lead in self.leads.values() {
            dirs.extend(crate::irregular::solve_max_decay(&lead.psi, &lead.slope));
        }
        let dirs = crate::scalar::sort_angles(dirs);
        Ok(super::window_positions(window, &dirs))
    }

    /// Strict in-part dominance at an unreduced position.
    fn lt_at(&self, i: &CoverPoint, j: &CoverPoint, x: &Rat) -> bool {
        let Some(lead) = self.leads.get(&(*i, *j)) else {
            return false;
        };
        let phase = &lead.psi - &(&lead.slope * x);
        matches!(crate::scalar::cos_sign_pi(&phase), crate::scalar::Sign::Negative)
    }
}

/// A relative Stokes filtered structure: the ambient space carries a global
/// quotient grading; the filtrations refine it component by component.
#[derive(Clone)]
pub(crate) struct RelFiltered {
    pub n: usize,
    /// Monodromy of the ambient local system.
    pub rho: Matrix,
    pub rel: RelClass,
    /// Global grading by the part representatives, twist-compatible.
    pub quotient_grading: BTreeMap<CoverPoint, Subspace>,
    pub window: Window,
    pub comps: Vec<Filtration<CoverPoint>>,
}

impl RelFiltered {
    fn rho_pow(&self, w: i64) -> Matrix {
        if w >= 0 {
            self.rho.pow(w as u64)
        } else {
            self.rho.inverse().expect("invertible monodromy").pow((-w) as u64)
        }
    }

    fn transport_filtration(&self, f: &Filtration<CoverPoint>, w: i64) -> Filtration<CoverPoint> {
        if w == 0 {
            return f.clone();
        }
        let m = self.rho_pow(-w);
        f.apply(&m).relabel(|l| self.rel.rho_hat_pow(l, -w))
    }

    fn transport_grading(&self, g: &Grading<CoverPoint>, w: i64) -> Grading<CoverPoint> {
        if w == 0 {
            return g.clone();
        }
        let m = self.rho_pow(-w);
        g.apply(&m).relabel(|l| self.rel.rho_hat_pow(l, -w))
    }

    /// Quotient-grading piece of a part at a universal-cover position.
    fn quotient_piece_at(&self, part: &CoverPoint, x: &Rat) -> Subspace {
        let w = self.turns_from_window(x);
        let m = self.rho_pow(-w);
        self.quotient_grading[&self.rel.rho_hat_part_pow(part, w)].apply(&m)
    }

    fn turns_from_window(&self, x: &Rat) -> i64 {
        match self.window.locate(x) {
            Position::Interior { w, .. } | Position::Jump { w, .. } => w,
        }
    }

    fn jump_sides_at(&self, x: &Rat) -> Result<(Filtration<CoverPoint>, Filtration<CoverPoint>)> {
        match self.window.locate(x) {
            Position::Jump { w, idx } => {
                let (lo, hi) = self.window.jump_sides(idx);
                let left = self.transport_filtration(&self.comps[lo], w);
                let right = if hi == 0 {
                    self.transport_filtration(&self.comps[0], w + 1)
                } else {
                    self.transport_filtration(&self.comps[hi], w)
                };
                Ok((left, right))
            }
            Position::Interior { .. } => Err(Error::Invalid("not a jump position".into())),
        }
    }

    /// Materialized data at one position: the full (or intermediate) step
    /// of every label cut to its part's quotient piece.
    fn materialize(&self, x: &Rat) -> Result<MaterializedAt> {
        let mut qpieces: BTreeMap<CoverPoint, Subspace> = BTreeMap::new();
        for part in self.rel.part_reps() {
            qpieces.insert(part, self.quotient_piece_at(&part, x));
        }
        let cut = |step: &Subspace, part: &CoverPoint| -> Subspace {
            let q = &qpieces[part];
            if q.dim() == q.ambient() {
                step.clone()
            } else {
                step.intersect(q)
            }
        };
        let mut in_steps = BTreeMap::new();
        match self.window.locate(x) {
            Position::Interior { w, comp } => {
                let stored = &self.comps[comp];
                let f_shifted;
                let f = if w == 0 {
                    stored
                } else {
                    f_shifted = self.transport_filtration(stored, w);
                    &f_shifted
                };
                for l in &self.rel.labels {
                    in_steps.insert(*l, cut(f.step(l)?, &self.rel.part_of[l]));
                }
            }
            Position::Jump { .. } => {
                let (fl, fr) = self.jump_sides_at(x)?;
                for l in &self.rel.labels {
                    let s = fl.step(l)?.intersect(fr.step(l)?);
                    in_steps.insert(*l, cut(&s, &self.rel.part_of[l]));
                }
            }
        }
        Ok(MaterializedAt { in_steps })
    }
}

/// In-part steps of every label at one universal-cover position.
struct MaterializedAt {
    in_steps: BTreeMap<CoverPoint, Subspace>,
}

/// The splitting of a one-level relative structure on the supersector of
/// one singular sector `(lo, hi)`: pieces indexed by all labels, built from
/// the opposite in-part filtrations at `d ± pi/2k` and then verified to
/// split everything inside the open supersector.
fn one_level_sector_splitting(
    s: &RelFiltered,
    level: &Rat,
    lo: &Rat,
    hi: &Rat,
) -> Result<Grading<CoverPoint>> {
    let half = rat(1, 2) / level;
    // deterministic interior construction point: first jump-free midpoint
    let d = sweep_positions(&s.window, lo, hi)
        .into_iter()
        .find(|(_, is_jump)| !is_jump)
        .map(|(x, _)| x)
        .expect("a sector has interior points");
    let e_lo = &d - &half;
    let e_hi = &d + &half;
    let at_lo = s.materialize(&e_lo)?;
    let at_hi = s.materialize(&e_hi)?;
    let mut pieces = BTreeMap::new();
    for l in &s.rel.labels {
        let a = in_part_cumulative(s, &at_lo, &e_lo, l);
        let b = in_part_cumulative(s, &at_hi, &e_hi, l);
        pieces.insert(*l, a.intersect(&b));
    }
    let g = Grading::new(s.n, pieces).map_err(|e| {
        Error::Invalid(format!(
            "no splitting on the sector at {}·π: {e}",
            rat_to_string(&reduce_mod2(&d))
        ))
    })?;
    // the grading must split every in-part filtration strictly inside the
    // supersector, including intermediate filtrations at interior jumps
    let su_lo = lo - &half;
    let su_hi = hi + &half;
    for (x, _) in sweep_positions(&s.window, &su_lo, &su_hi) {
        assert_splits_at(s, &g, &x)?;
    }
    Ok(g)
}

/// Sum of in-part steps of labels `<=` the given one at a position (with
/// the partial order on jumps).
fn in_part_cumulative(
    s: &RelFiltered,
    at: &MaterializedAt,
    x: &Rat,
    l: &CoverPoint,
) -> Subspace {
    let mut acc = at.in_steps[l].clone();
    for m in s.rel.members(&s.rel.part_of[l]) {
        if m != l && s.rel.lt_at(m, l, x) {
            acc = acc.sum(&at.in_steps[m]);
        }
    }
    acc
}

fn assert_splits_at(s: &RelFiltered, g: &Grading<CoverPoint>, x: &Rat) -> Result<()> {
    let at = s.materialize(x)?;
    for l in &s.rel.labels {
        let mut span = g.piece(l).expect("label piece").clone();
        for m in s.rel.members(&s.rel.part_of[l]) {
            if m != l && s.rel.lt_at(m, l, x) {
                span = span.sum(g.piece(m).expect("label piece"));
            }
        }
        let target = in_part_cumulative(s, &at, x, l);
        if span != target {
            return Err(Error::Invalid(format!(
                "splitting fails at {}·π on label {}",
                rat_to_string(&reduce_mod2(x)),
                l.label()
            )));
        }
    }
    Ok(())
}

/// One-level case: the preferred splitting on every singular sector,
/// assigned to each component.
fn one_level_split(s: &RelFiltered, level: &Rat) -> Result<Vec<Grading<CoverPoint>>> {
    let sing = s.rel.singular_positions(&s.window)?;
    if sing.is_empty() {
        return Err(Error::Invalid("one-level structure without singular directions".into()));
    }
    // sectors in window coordinates: the wrap sector contains the basepoint
    let mut sectors: Vec<(Rat, Rat)> = Vec::new();
    let r = sing.len();
    sectors.push((&sing[r - 1] - rat(2, 1), sing[0].clone()));
    for t in 1..r {
        sectors.push((sing[t - 1].clone(), sing[t].clone()));
    }
    let mut sector_gradings: Vec<Option<Grading<CoverPoint>>> = alloc::vec![None; sectors.len()];
    let mut out = Vec::with_capacity(s.comps.len());
    for t in 0..s.comps.len() {
        let mid = s.window.component_midpoint(t);
        // find the sector lift containing this component
        let mut found = None;
        'search: for (si, (a, b)) in sectors.iter().enumerate() {
            for w in [-1i64, 0, 1] {
                let shifted = &mid - &(rat(2, 1) * rat(w, 1));
                if &shifted > a && &shifted < b {
                    found = Some((si, w));
                    break 'search;
                }
            }
        }
        let (si, w) = found.ok_or_else(|| {
            Error::Invalid("component midpoint escapes every singular sector".into())
        })?;
        if sector_gradings[si].is_none() {
            let (a, b) = &sectors[si];
            sector_gradings[si] = Some(one_level_sector_splitting(s, level, a, b)?);
        }
        let g = sector_gradings[si].as_ref().unwrap();
        out.push(s.transport_grading(g, w));
    }
    Ok(out)
}

/// Group labels by truncation at level `k`: the quotient `I(k)` with each
/// part named by its minimal label.
fn quotient_parts(
    rel: &RelClass,
    k: &Rat,
) -> (BTreeMap<CoverPoint, CoverPoint>, Vec<CoverPoint>) {
    let mut groups: BTreeMap<ExponentialFactor, Vec<CoverPoint>> = BTreeMap::new();
    for l in &rel.labels {
        let t = rel.germs[l].truncate_above(k);
        groups.entry(t).or_default().push(*l);
    }
    let mut part_of = BTreeMap::new();
    let mut reps = Vec::new();
    for (_, members) in groups {
        let rep = *members.iter().min().expect("nonempty group");
        reps.push(rep);
        for m in members {
            part_of.insert(m, rep);
        }
    }
    reps.sort();
    (part_of, reps)
}

/// The lift bases of `Gr(V, F)` for a J-labelled filtration: for each
/// component and J-label, rows spanning a complement of the lower step.
struct GrData {
    /// Per component, per label: lift rows.
    lifts: Vec<BTreeMap<CoverPoint, Matrix>>,
    dims: BTreeMap<CoverPoint, usize>,
    order: Vec<CoverPoint>,
}

fn block_start(data: &GrData, l: &CoverPoint) -> usize {
    let mut start = 0;
    for k in &data.order {
        if k == l {
            return start;
        }
        start += data.dims[k];
    }
    unreachable!("label present")
}

/// The induced coarse filtration `F^(k)`: J-labelled steps per component.
fn coarse_filtration(
    f: &Filtration<CoverPoint>,
    part_of: &BTreeMap<CoverPoint, CoverPoint>,
) -> Result<Filtration<CoverPoint>> {
    let mut order: Vec<CoverPoint> = Vec::new();
    let mut steps: Vec<Subspace> = Vec::new();
    let mut seen: BTreeSet<CoverPoint> = BTreeSet::new();
    for (i, l) in f.order().iter().enumerate() {
        let part = part_of[l];
        let next_same = f.order().get(i + 1).map(|m| part_of[m] == part);
        if next_same == Some(true) {
            continue;
        }
        // end of a block
        if seen.contains(&part) {
            return Err(Error::Invalid(
                "filtration does not refine the quotient: split block".into(),
            ));
        }
        seen.insert(part);
        order.push(part);
        steps.push(f.step(l)?.clone());
    }
    Filtration::new(order, steps)
}

/// Canonical splitting of a relative filtered structure. Returns one
/// grading per component.
pub(crate) fn canonical_split_rel(
    s: &RelFiltered,
    strategy: SplitStrategy,
) -> Result<Vec<Grading<CoverPoint>>> {
    let levels = s.rel.levels()?;
    if levels.is_empty() {
        // every part is a singleton: the quotient grading, relabelled
        let mut out = Vec::with_capacity(s.comps.len());
        for _t in 0..s.comps.len() {
            let mut pieces = BTreeMap::new();
            for l in &s.rel.labels {
                pieces.insert(*l, s.quotient_grading[&s.rel.part_of[l]].clone());
            }
            out.push(Grading::new(s.n, pieces)?);
        }
        return Ok(out);
    }
    if levels.len() == 1 {
        return one_level_split(s, &levels[0]);
    }
    let k = match strategy {
        SplitStrategy::LowestFirst => levels[0].clone(),
        SplitStrategy::HighestFirst => levels[levels.len() - 2].clone(),
    };
    let (part_j, reps_j) = quotient_parts(&s.rel, &k);

    // coarse structure (V, F^(k)) indexed by J -> K
    let mut coarse_comps = Vec::with_capacity(s.comps.len());
    for f in &s.comps {
        coarse_comps.push(coarse_filtration(f, &part_j)?);
    }
    let rel_j = RelClass::new(
        reps_j.clone(),
        reps_j
            .iter()
            .map(|r| (*r, s.rel.germs[r].truncate_above(&k)))
            .collect(),
        reps_j
            .iter()
            .map(|r| (*r, part_j[&s.rel.rho_hat[r]]))
            .collect(),
        reps_j.iter().map(|r| (*r, s.rel.part_of[r])).collect(),
    )?;
    let coarse = RelFiltered {
        n: s.n,
        rho: s.rho.clone(),
        rel: rel_j,
        quotient_grading: s.quotient_grading.clone(),
        window: s.window.clone(),
        comps: coarse_comps.clone(),
    };
    let coarse_split = canonical_split_rel(&coarse, strategy)?;

    // associated graded W = Gr(V, F^(k)) in block coordinates
    let gr = GrData {
        lifts: coarse_comps
            .iter()
            .map(|f| f.assoc_graded().lifts)
            .collect(),
        dims: {
            let mut d = BTreeMap::new();
            for r in &reps_j {
                d.insert(*r, coarse_comps[0].dims()[r]);
            }
            d
        },
        order: reps_j.clone(),
    };
    // transports[t] carries component-0 graded coordinates to component-t
    // coordinates along the positive path; the graded monodromy closes the
    // loop
    let (rho_w, transports) = graded_monodromy(s, &coarse, &gr)?;

    // induced fine filtration F^k on W, component by component
    let mut fine_comps = Vec::with_capacity(s.comps.len());
    for (t, f) in s.comps.iter().enumerate() {
        let coarse_f = &coarse_comps[t];
        let mut steps = Vec::new();
        for l in f.order() {
            let mut rows: Vec<Vec<crate::scalar::Gaussian>> = Vec::new();
            for r in &reps_j {
                let cut = f.step(l)?.intersect(coarse_f.step(r)?);
                let below = coarse_f.step_below(r)?;
                let basis = &gr.lifts[t][r];
                let start = block_start(&gr, r);
                for i in 0..cut.dim() {
                    let v = cut.basis().row(i).to_vec();
                    let stacked = basis.vstack(below.basis());
                    let rhs = Matrix::from_rows(alloc::vec![v]);
                    let Ok(c) = stacked.solve_rows(&rhs) else {
                        return Err(Error::Invalid(
                            "fine step escapes the coarse step".into(),
                        ));
                    };
                    let mut w = alloc::vec![crate::scalar::Gaussian::zero(); s.n];
                    for j in 0..basis.n_rows() {
                        w[start + j] = c[(0, j)].clone();
                    }
                    rows.push(w);
                }
            }
            let sub = if rows.is_empty() {
                Subspace::zero(s.n)
            } else {
                Subspace::from_rows(Matrix::from_rows(rows))
            };
            steps.push(sub);
        }
        // re-base from component-t graded coordinates to the constant
        // (component-0) presentation of W
        let t_inv = transports[t].inverse()?;
        let steps = steps.into_iter().map(|x| x.apply(&t_inv)).collect();
        fine_comps.push(Filtration::new(f.order().to_vec(), steps)?);
    }
    let fine = RelFiltered {
        n: s.n,
        rho: rho_w,
        rel: RelClass::new(
            s.rel.labels.clone(),
            s.rel.germs.clone(),
            s.rel.rho_hat.clone(),
            part_j.clone(),
        )?,
        // for the fine structure the quotient is the J-grading of W
        quotient_grading: {
            let mut q = BTreeMap::new();
            for r in &reps_j {
                let start = block_start(&gr, r);
                let mut rows = Vec::new();
                for i in 0..gr.dims[r] {
                    let mut v = alloc::vec![crate::scalar::Gaussian::zero(); s.n];
                    v[start + i] = crate::scalar::Gaussian::one();
                    rows.push(v);
                }
                q.insert(
                    *r,
                    if rows.is_empty() {
                        Subspace::zero(s.n)
                    } else {
                        Subspace::from_rows(Matrix::from_rows(rows))
                    },
                );
            }
            q
        },
        window: s.window.clone(),
        comps: fine_comps,
    };
    let fine_split = canonical_split_rel(&fine, strategy)?;

    // compose: carry the fine splitting of W into V through the splitting
    // isomorphism of the coarse structure on each component
    let mut out = Vec::with_capacity(s.comps.len());
    for (t, coarse_g) in coarse_split.iter().enumerate() {
        let coarse_f = &coarse_comps[t];
        let mut cols: Vec<Vec<crate::scalar::Gaussian>> = alloc::vec![Vec::new(); s.n];
        for r in &reps_j {
            let below = coarse_f.step_below(r)?;
            let piece = coarse_g.piece(r).expect("coarse label piece");
            let basis = &gr.lifts[t][r];
            let start = block_start(&gr, r);
            for i in 0..basis.n_rows() {
                let v = congruent_element(basis.row(i), &below, piece)?;
                cols[start + i] = v;
            }
        }
        let phi = Matrix::from_rows(cols).transpose();
        // fine pieces are stored in the constant presentation; bring them to
        // component-t coordinates first
        let map = &phi * &transports[t];
        let mut pieces = BTreeMap::new();
        for l in &s.rel.labels {
            let w_piece = fine_split[t].piece(l).expect("fine label piece");
            pieces.insert(*l, w_piece.apply(&map));
        }
        out.push(Grading::new(s.n, pieces)?);
    }
    Ok(out)
}

/// Monodromy of the associated graded of the coarse filtration, in the
/// block coordinates of `gr`: canonical gluings at each jump compose with
/// the wrap across the cut. Also returns the partial transports from
/// component 0 to every component.
fn graded_monodromy(
    s: &RelFiltered,
    coarse: &RelFiltered,
    gr: &GrData,
) -> Result<(Matrix, Vec<Matrix>)> {
    let n = s.n;
    let mut transports = alloc::vec![Matrix::identity(n)];
    let mut h = Matrix::identity(n);
    for idx in 0..s.window.jumps.len() {
        let pos = s.window.jumps[idx].clone();
        let (left, right) = coarse.jump_sides_at(&pos)?;
        let (lo, hi) = s.window.jump_sides(idx);
        let right_lifts: BTreeMap<CoverPoint, Matrix> = if hi == 0 {
            coarse
                .transport_filtration(&coarse.comps[0], 1)
                .assoc_graded()
                .lifts
        } else {
            gr.lifts[hi].clone()
        };
        let mut chi = Matrix::zero(n, n);
        for r in &gr.order {
            let below_l = left.step_below(r)?;
            let inter = left.step(r)?.intersect(right.step(r)?);
            let below_r = right.step_below(r)?;
            let basis_r = &right_lifts[r];
            let lifts_l = &gr.lifts[lo][r];
            let start = block_start(gr, r);
            for i in 0..lifts_l.n_rows() {
                let v = congruent_element(lifts_l.row(i), &below_l, &inter).map_err(|_| {
                    Error::Invalid(format!(
                        "gluing at {}·π fails: jump condition violated",
                        rat_to_string(&reduce_mod2(&pos))
                    ))
                })?;
                let stacked = basis_r.vstack(below_r.basis());
                let rhs = Matrix::from_rows(alloc::vec![v]);
                let c = stacked
                    .solve_rows(&rhs)
                    .map_err(|_| Error::Invalid("glued vector misses the right step".into()))?;
                for j in 0..basis_r.n_rows() {
                    chi[(start + j, start + i)] = c[(0, j)].clone();
                }
            }
        }
        h = &chi * &h;
        if idx + 1 < s.window.jumps.len() {
            transports.push(h.clone());
        }
    }
    // wrap
    let wrapped = coarse.transport_filtration(&coarse.comps[0], 1);
    let wrapped_lifts = wrapped.assoc_graded().lifts;
    let f0 = &coarse.comps[0];
    let mut wrap = Matrix::zero(n, n);
    for r in &gr.order {
        let lw = &wrapped_lifts[r];
        let target = coarse.rel.rho_hat[r];
        let basis_r = &gr.lifts[0][&target];
        let below_r = f0.step_below(&target)?;
        let start_src = block_start(gr, r);
        let start_dst = block_start(gr, &target);
        for i in 0..lw.n_rows() {
            let v = s.rho.mul_vec(lw.row(i));
            let stacked = basis_r.vstack(below_r.basis());
            let rhs = Matrix::from_rows(alloc::vec![v]);
            let c = stacked
                .solve_rows(&rhs)
                .map_err(|_| Error::Invalid("wrap transport misses the step".into()))?;
            for j in 0..basis_r.n_rows() {
                wrap[(start_dst + j, start_src + i)] = c[(0, j)].clone();
            }
        }
    }
    Ok((&wrap * &h, transports))
}

/// Builds the top-level relative structure of a Stokes filtered local
/// system (quotient = the point, i.e. the plain canonical splitting
/// problem).
pub(crate) fn top_relative(s: &StokesFiltered) -> Result<RelFiltered> {
    let class = s.class();
    let labels = class.fiber();
    let root = *labels.first().expect("nonempty fibre");
    let germs = labels.iter().map(|l| (*l, class.germ(l))).collect();
    let rho_hat = labels
        .iter()
        .map(|l| (*l, class.cover_monodromy(l)))
        .collect();
    let part_of: BTreeMap<CoverPoint, CoverPoint> =
        labels.iter().map(|l| (*l, root)).collect();
    let mut quotient_grading = BTreeMap::new();
    quotient_grading.insert(root, Subspace::full(s.rank()));
    Ok(RelFiltered {
        n: s.rank(),
        rho: s.core.boundary.monodromy.clone(),
        rel: RelClass::new(labels, germs, rho_hat, part_of)?,
        quotient_grading,
        window: s.core.window.clone(),
        comps: s.comps.clone(),
    })
}

/// Re-presents a filtered structure on its natural window: one component
/// per Stokes sector. Data must be constant across any extra jumps.
pub fn natural_filtered(s: &StokesFiltered) -> Result<StokesFiltered> {
    let dirs = s.class().stokes_directions()?;
    let window = Window::new(s.core.boundary.base_pi.clone(), dirs.clone())?;
    let mut comps = Vec::with_capacity(window.n_components());
    for t in 0..window.n_components() {
        let (lo, hi) = window.component_interval(t);
        let mut gathered: Option<Filtration<CoverPoint>> = None;
        for (x, is_jump) in sweep_positions(&s.core.window, &lo, &hi) {
            if is_jump {
                continue;
            }
            let f = s.filtration_at(&x)?;
            match &gathered {
                None => gathered = Some(f),
                Some(g) if *g == f => {}
                Some(_) => {
                    return Err(Error::Invalid(
                        "filtration jumps at a non-Stokes direction".into(),
                    ))
                }
            }
        }
        comps.push(gathered.expect("component has interior points"));
    }
    StokesFiltered::new(s.core.boundary.clone(), dirs, comps)
}

/// Re-presents a graded structure on its natural window: one component per
/// singular sector.
pub fn natural_graded(s: &StokesGraded) -> Result<StokesGraded> {
    let dirs = s.class().singular_directions()?;
    let window = Window::new(s.core.boundary.base_pi.clone(), dirs.clone())?;
    let mut comps = Vec::with_capacity(window.n_components());
    for t in 0..window.n_components() {
        let (lo, hi) = window.component_interval(t);
        let mut gathered: Option<Grading<CoverPoint>> = None;
        for (x, is_jump) in sweep_positions(&s.core.window, &lo, &hi) {
            if is_jump {
                continue;
            }
            let g = s.grading_at(&x)?;
            match &gathered {
                None => gathered = Some(g),
                Some(h) if *h == g => {}
                Some(_) => {
                    return Err(Error::Invalid(
                        "grading jumps at a non-singular direction".into(),
                    ))
                }
            }
        }
        comps.push(gathered.expect("component has interior points"));
    }
    StokesGraded::new(s.core.boundary.clone(), dirs, comps)
}

/// Refines a filtered structure so its window contains every Stokes and
/// singular direction of the class.
pub fn refine_to_full(s: &StokesFiltered) -> Result<StokesFiltered> {
    let dirs = StructureCore::full_jump_set(s.class())?;
    let mut cur = s.clone();
    for d in dirs {
        cur = cur.refine(&d)?;
    }
    Ok(cur)
}

/// Refines a graded structure the same way.
pub fn refine_graded_to_full(s: &StokesGraded) -> Result<StokesGraded> {
    let dirs = StructureCore::full_jump_set(s.class())?;
    let mut cur = s.clone();
    for d in dirs {
        cur = cur.refine(&d)?;
    }
    Ok(cur)
}

/// The unique Stokes grading splitting a Stokes filtration.
///
/// The output is validated: it must pass the graded jump conditions and its
/// associated filtration must reproduce the input exactly.
pub fn canonical_splitting(s: &StokesFiltered) -> Result<StokesGraded> {
    canonical_splitting_with(s, SplitStrategy::LowestFirst)
}

pub fn canonical_splitting_with(
    s: &StokesFiltered,
    strategy: SplitStrategy,
) -> Result<StokesGraded> {
    let refined = refine_to_full(s)?;
    let rel = top_relative(&refined)?;
    let comps = canonical_split_rel(&rel, strategy)?;
    let out = StokesGraded {
        core: StructureCore {
            boundary: refined.core.boundary.clone(),
            window: refined.core.window.clone(),
        },
        comps,
    };
    let report = out.validate()?;
    if !report.is_valid() {
        let fail = report.failures().first().map(|c| c.what.clone()).unwrap_or_default();
        return Err(Error::Invalid(format!(
            "canonical splitting is not a Stokes grading ({fail})"
        )));
    }
    let back = grading_to_filtration(&out)?;
    if !filtered_equal(&back, &refined) {
        return Err(Error::Invalid(
            "canonical splitting does not reproduce the filtration".into(),
        ));
    }
    Ok(out)
}

/// The unique splitting on the supersector of the singular sector
/// containing `dir`, for a one-level structure. Returns the grading and the
/// supersector.
pub fn one_level_splitting(
    s: &StokesFiltered,
    dir: &Rat,
) -> Result<(Grading<CoverPoint>, RamifiedInterval)> {
    let refined = refine_to_full(s)?;
    let rel = top_relative(&refined)?;
    let levels = rel.rel.levels()?;
    if levels.len() != 1 {
        return Err(Error::Invalid(format!(
            "one-level splitting needs exactly one level, found {}",
            levels.len()
        )));
    }
    let level = levels[0].clone();
    let sing = rel.rel.singular_positions(&rel.window)?;
    if sing.is_empty() {
        return Err(Error::Invalid("no singular directions".into()));
    }
    let pos = rel.window.window_pos(dir);
    if sing.contains(&pos) {
        return Err(Error::Invalid(
            "the base direction of a singular sector must not be singular".into(),
        ));
    }
    // the sector containing pos
    let r = sing.len();
    let (lo, hi) = {
        let mut found = (sing[r - 1].clone() - rat(2, 1), sing[0].clone());
        for t in 1..r {
            if sing[t - 1] < pos && pos < sing[t] {
                found = (sing[t - 1].clone(), sing[t].clone());
            }
        }
        found
    };
    let g = one_level_sector_splitting(&rel, &level, &lo, &hi)?;
    let half = rat(1, 2) / &level;
    let base = (&lo + &hi) / rat(2, 1);
    let supersector = RamifiedInterval::open(
        base.clone(),
        &base - &(&lo - &half),
        &(&hi + &half) - &base,
    )?;
    Ok((g, supersector))
}
