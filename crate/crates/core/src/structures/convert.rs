//! Intermediate filtrations at jump directions, the associated graded local
//! system of a Stokes filtration, and the functor from Stokes gradings to
//! Stokes filtrations.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::flagged::{Grading, Subspace};
use crate::irregular::{CoverPoint, Dominance};
use crate::linalg::Matrix;
use crate::scalar::{rat_to_string, Rat};

use super::{StokesFiltered, StokesGraded, StructureCore};

/// The canonical filtration of the fibre at a jump direction, indexed by
/// the partial dominance order there: `F_d(i) = F_L(i) ∩ F_R(i)`.
#[derive(Clone, Debug)]
pub struct IntermediateFiltration {
    /// Step subspace per label.
    pub steps: BTreeMap<CoverPoint, Subspace>,
    /// Strict relations `(i, j)` with `i` below `j`; the intersection of
    /// the two adjacent total orders.
    pub lt: Vec<(CoverPoint, CoverPoint)>,
}

impl StokesFiltered {
    /// Intermediate filtration at a jump position (window coordinates).
    pub fn intermediate_at(&self, pos: &Rat) -> Result<IntermediateFiltration> {
        let (left, right) = self.jump_sides_at(pos)?;
        let class = self.class();
        let mut steps = BTreeMap::new();
        for l in class.fiber() {
            steps.insert(l, left.step(&l)?.intersect(right.step(&l)?));
        }
        let mut lt = Vec::new();
        let fiber = class.fiber();
        for i in &fiber {
            for j in &fiber {
                if i != j && matches!(class.dominance_compare(i, j, pos)?, Dominance::Less) {
                    lt.push((*i, *j));
                }
            }
        }
        Ok(IntermediateFiltration { steps, lt })
    }
}

impl IntermediateFiltration {
    /// The step-sum of every label `<=` the given one under the partial
    /// order (the displayed form of the intermediate step).
    pub fn cumulative_step(&self, l: &CoverPoint) -> Subspace {
        let mut acc = self.steps[l].clone();
        for (i, j) in &self.lt {
            if j == l {
                acc = acc.sum(&self.steps[i]);
            }
        }
        acc
    }
}

/// A graded local system on the boundary circle in standard coordinates:
/// blocks in canonical fibre order, with a monodromy permuting the blocks
/// by the cover monodromy.
#[derive(Clone, Debug)]
pub struct GradedLocalSystem {
    pub labels: Vec<CoverPoint>,
    pub dims: BTreeMap<CoverPoint, usize>,
    pub monodromy: Matrix,
}

impl GradedLocalSystem {
    pub fn rank(&self) -> usize {
        self.dims.values().sum()
    }

    /// Column range of a label's block.
    pub fn block_range(&self, l: &CoverPoint) -> core::ops::Range<usize> {
        let mut start = 0;
        for k in &self.labels {
            if k == l {
                return start..start + self.dims[k];
            }
            start += self.dims[k];
        }
        0..0
    }

    /// The coordinate-block grading of the standard fibre.
    pub fn standard_grading(&self) -> Grading<CoverPoint> {
        let n = self.rank();
        let mut pieces = BTreeMap::new();
        for l in &self.labels {
            let r = self.block_range(l);
            let rows: Vec<Vec<crate::scalar::Gaussian>> = r
                .clone()
                .map(|i| {
                    let mut v = alloc::vec![crate::scalar::Gaussian::zero(); n];
                    v[i] = crate::scalar::Gaussian::one();
                    v
                })
                .collect();
            let s = if rows.is_empty() {
                Subspace::zero(n)
            } else {
                Subspace::from_rows(Matrix::from_rows(rows))
            };
            pieces.insert(*l, s);
        }
        Grading::new(n, pieces).expect("coordinate blocks decompose the fibre")
    }

    /// Whether the monodromy permutes the blocks by the given label map.
    pub fn monodromy_is_twisted(&self, rho_hat: impl Fn(&CoverPoint) -> CoverPoint) -> bool {
        let g = self.standard_grading();
        for l in &self.labels {
            let img = g.piece(l).unwrap().apply(&self.monodromy);
            if &img != g.piece(&rho_hat(l)).unwrap() {
                return false;
            }
        }
        true
    }
}

/// Per-component lift bases of the associated graded: the working data for
/// the canonical gluings.
pub(crate) struct GrPresentation {
    pub labels: Vec<CoverPoint>,
    pub dims: BTreeMap<CoverPoint, usize>,
    /// `lifts[t][l]`: rows lifting `Gr_l` into `V_b` for component `t`.
    pub lifts: Vec<BTreeMap<CoverPoint, Matrix>>,
}

pub(crate) fn gr_presentation(s: &StokesFiltered) -> Result<GrPresentation> {
    let labels = s.class().fiber();
    let mut dims = BTreeMap::new();
    for l in &labels {
        dims.insert(*l, s.class().mult_of(l) as usize);
    }
    let mut lifts = Vec::new();
    for f in &s.comps {
        let ag = f.assoc_graded();
        lifts.push(ag.lifts);
    }
    Ok(GrPresentation { labels, dims, lifts })
}

/// The unique element of `(u + span(below)) ∩ (inter)`, written in the
/// coordinates of `basis` modulo `below_r`.
fn glue_vector(
    u: &[crate::scalar::Gaussian],
    below_l: &Subspace,
    inter: &Subspace,
    basis_r: &Matrix,
    below_r: &Subspace,
) -> Result<Vec<crate::scalar::Gaussian>> {
    // v in inter with v ≡ u mod below_l
    let stacked = inter.basis().vstack(below_l.basis());
    let rhs = Matrix::from_rows(alloc::vec![u.to_vec()]);
    let coeffs = stacked.solve_rows(&rhs).map_err(|_| {
        Error::Invalid("no intermediate representative: jump condition fails".into())
    })?;
    let k = inter.dim();
    let v = if k == 0 {
        alloc::vec![crate::scalar::Gaussian::zero(); below_l.ambient()]
    } else {
        let pc = Matrix::from_fn(1, k, |_, j| coeffs[(0, j)].clone());
        (&pc * inter.basis()).row(0).to_vec()
    };
    // coordinates of v w.r.t. basis_r modulo below_r
    let stacked_r = basis_r.vstack(below_r.basis());
    let rhs_r = Matrix::from_rows(alloc::vec![v]);
    let c = stacked_r
        .solve_rows(&rhs_r)
        .map_err(|_| Error::Invalid("glued vector misses the right-side step".into()))?;
    Ok((0..basis_r.n_rows()).map(|j| c[(0, j)].clone()).collect())
}

/// The associated graded local system of a Stokes filtered local system:
/// graded fibre in canonical block coordinates and its formal monodromy,
/// assembled from the canonical inclusion-induced gluings at each jump and
/// the wrap across the cut.
pub fn associated_graded_ls(s: &StokesFiltered) -> Result<GradedLocalSystem> {
    let (gls, _) = associated_graded_with_embedding(s)?;
    Ok(gls)
}

/// As `associated_graded_ls`, additionally returning for component 0 the
/// lift matrix whose rows embed the standard graded fibre into `V_b`.
pub fn associated_graded_with_embedding(
    s: &StokesFiltered,
) -> Result<(GradedLocalSystem, Matrix)> {
    let pres = gr_presentation(s)?;
    let n = s.rank();
    let m = s.core.window.jumps.len();
    let block_of = |l: &CoverPoint| -> usize {
        let mut start = 0;
        for k in &pres.labels {
            if k == l {
                return start;
            }
            start += pres.dims[k];
        }
        unreachable!("label in fibre")
    };
    let mut h = Matrix::identity(n);
    // gluings at each jump in positive order
    for idx in 0..m {
        let pos = s.core.window.jumps[idx].clone();
        let (left, right) = s.jump_sides_at(&pos)?;
        let (lo, hi) = s.core.window.jump_sides(idx);
        let right_lifts: BTreeMap<CoverPoint, Matrix> = if hi == 0 {
            // lifts of the wrapped component-0 filtration
            let f = s.transport_filtration(&s.comps[0], 1);
            f.assoc_graded().lifts
        } else {
            pres.lifts[hi].clone()
        };
        let mut chi = Matrix::zero(n, n);
        for l in &pres.labels {
            let below_l = left.step_below(l)?;
            let inter = left.step(l)?.intersect(right.step(l)?);
            let basis_r = &right_lifts[l];
            let below_r = right.step_below(l)?;
            let lifts_l = &pres.lifts[lo][l];
            for i in 0..lifts_l.n_rows() {
                let coords = glue_vector(lifts_l.row(i), &below_l, &inter, basis_r, &below_r)
                    .map_err(|e| {
                        Error::Invalid(format!(
                            "gluing at {}·π failed: {e}",
                            rat_to_string(&crate::scalar::reduce_mod2(&pos))
                        ))
                    })?;
                let col = block_of(l) + i;
                for (j, c) in coords.iter().enumerate() {
                    chi[(block_of(l) + j, col)] = c.clone();
                }
            }
        }
        h = &chi * &h;
    }
    // wrap: carry classes from the component-0 data one turn up back to the
    // stored component-0 lifts, permuting labels by the cover monodromy
    let rho = &s.core.boundary.monodromy;
    let class = s.class();
    let wrapped = s.transport_filtration(&s.comps[0], 1);
    let wrapped_lifts = wrapped.assoc_graded().lifts;
    let f0 = &s.comps[0];
    let mut wrap = Matrix::zero(n, n);
    for l in &pres.labels {
        let lw = &wrapped_lifts[l];
        let target = class.cover_monodromy(l);
        let basis_r = &pres.lifts[0][&target];
        let below_r = f0.step_below(&target)?;
        for i in 0..lw.n_rows() {
            // transport the lift across the cut and express in the stored
            // component-0 graded basis
            let v = rho.mul_vec(lw.row(i));
            let stacked = basis_r.vstack(below_r.basis());
            let rhs = Matrix::from_rows(alloc::vec![v]);
            let c = stacked
                .solve_rows(&rhs)
                .map_err(|_| Error::Invalid("wrap transport misses the step".into()))?;
            let col = block_of(l) + i;
            for j in 0..basis_r.n_rows() {
                wrap[(block_of(&target) + j, col)] = c[(0, j)].clone();
            }
        }
    }
    h = &wrap * &h;
    let gls = GradedLocalSystem {
        labels: pres.labels.clone(),
        dims: pres.dims.clone(),
        monodromy: h,
    };
    // embedding of the standard fibre via component 0's lifts
    let mut rows: Vec<Vec<crate::scalar::Gaussian>> = Vec::with_capacity(n);
    for l in &pres.labels {
        let b = &pres.lifts[0][l];
        for i in 0..b.n_rows() {
            rows.push(b.row(i).to_vec());
        }
    }
    Ok((gls, Matrix::from_rows(rows)))
}

/// The Stokes filtration associated to a Stokes grading by the dominance
/// orders: the functor from graded to filtered structures.
pub fn grading_to_filtration(s: &StokesGraded) -> Result<StokesFiltered> {
    let mut comps = Vec::with_capacity(s.comps.len());
    for (t, g) in s.comps.iter().enumerate() {
        let mid = s.core.window.component_midpoint(t);
        let order = s.class().dominance_order_at(&mid)?;
        comps.push(g.assoc_filtration(&order)?);
    }
    let out = StokesFiltered {
        core: StructureCore {
            boundary: s.core.boundary.clone(),
            window: s.core.window.clone(),
        },
        comps,
    };
    // across jumps where the dominance order does not change, both sides
    // must give the same filtration
    for idx in 0..out.core.window.jumps.len() {
        let pos = out.core.window.jumps[idx].clone();
        let (left, right) = out.jump_sides_at(&pos)?;
        if left.order() == right.order() && left != right {
            return Err(Error::Invalid(format!(
                "associated filtrations disagree across {}·π",
                rat_to_string(&crate::scalar::reduce_mod2(&pos))
            )));
        }
    }
    Ok(out)
}

/// Structural equality of two filtered presentations over the same class:
/// same window and identical component data.
pub fn filtered_equal(a: &StokesFiltered, b: &StokesFiltered) -> bool {
    a.core.window == b.core.window && a.comps == b.comps
}

/// Structural equality of graded presentations.
pub fn graded_equal(a: &StokesGraded, b: &StokesGraded) -> bool {
    a.core.window == b.core.window && a.comps == b.comps
}
