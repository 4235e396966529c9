//! Finite presentations of Stokes filtered, Stokes graded, and Stokes local
//! systems on the boundary circle of a marked point, and the conversions
//! between them.
//!
//! Presentation. The circle is cut at a basepoint `b` avoiding every jump
//! direction. All per-component data (filtrations, gradings) are subspaces
//! of the fibre `V_b`, expressed by transporting along the positive path
//! inside the cut circle, where transport is the identity. Positions are
//! unreduced multiples of pi on the universal cover; crossing the cut at
//! `b + 2` applies the monodromy and shifts cover labels by one sheet.
//! Concretely, the data of label `l` at position `x + 2w` equals
//! `rho^(-w) * (data of monodromy^w(l) at position x)`.

mod convert;
mod ops;
mod sls;
mod split;
mod validate;

pub use convert::*;
pub use ops::*;
pub use sls::*;
pub use split::*;
pub use validate::*;

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use num_traits::Signed;

use crate::error::{Error, Result};
use crate::flagged::{Filtration, Grading, Subspace};
use crate::irregular::{CoverPoint, Dominance, IrregularClass};
use crate::linalg::Matrix;
use crate::scalar::{rat, reduce_mod2, Rat};

/// The fibre data at the basepoint of one marked point: rank, basepoint,
/// monodromy of the underlying local system, and optional interior handle
/// generators when the structure lives on a closed surface of genus `g`.
#[derive(Clone, Debug)]
pub struct Boundary {
    pub class: IrregularClass,
    /// Basepoint as a multiple of pi in `[0, 2)`; must avoid every Stokes
    /// and singular direction.
    pub base_pi: Rat,
    /// Monodromy of the underlying local system around the positive loop.
    pub monodromy: Matrix,
    pub genus: u32,
    /// Handle generators `(A_i, B_i)`, one pair per genus.
    pub handles: Vec<(Matrix, Matrix)>,
}

impl Boundary {
    pub fn new(class: IrregularClass, base_pi: Rat, monodromy: Matrix) -> Result<Self> {
        let b = Boundary {
            class,
            base_pi: reduce_mod2(&base_pi),
            monodromy,
            genus: 0,
            handles: Vec::new(),
        };
        b.check_base()?;
        Ok(b)
    }

    pub fn with_handles(mut self, handles: Vec<(Matrix, Matrix)>) -> Self {
        self.genus = handles.len() as u32;
        self.handles = handles;
        self
    }

    fn check_base(&self) -> Result<()> {
        let n = self.class.rank() as usize;
        if self.monodromy.n_rows() != n || !self.monodromy.is_square() {
            return Err(Error::Shape("monodromy size must equal the rank".into()));
        }
        self.monodromy
            .inverse()
            .map_err(|_| Error::Invalid("monodromy must be invertible".into()))?;
        let mut bad = self.class.stokes_directions()?;
        bad.extend(self.class.singular_directions()?);
        if bad.contains(&self.base_pi) {
            return Err(Error::Invalid(format!(
                "basepoint {} lies on a jump direction",
                crate::scalar::rat_to_string(&self.base_pi)
            )));
        }
        Ok(())
    }

    pub fn rank(&self) -> usize {
        self.class.rank() as usize
    }

    /// Whether the boundary monodromy matches the handle generators, i.e.
    /// the structure is a local system on a genus-`g` surface with this
    /// single marked point.
    pub fn surface_consistent(&self) -> bool {
        let mut prod = Matrix::identity(self.rank());
        for (a, b) in &self.handles {
            let comm = match (a.inverse(), b.inverse()) {
                (Ok(ai), Ok(bi)) => &(&(a * b) * &ai) * &bi,
                _ => return false,
            };
            prod = &prod * &comm;
        }
        (&prod * &self.monodromy).is_identity()
    }

    /// `rho^w` for any integer `w`.
    pub fn monodromy_pow(&self, w: i64) -> Matrix {
        if w >= 0 {
            self.monodromy.pow(w as u64)
        } else {
            self.monodromy
                .inverse()
                .expect("invertible monodromy")
                .pow((-w) as u64)
        }
    }
}

/// Where a universal-cover position sits relative to the stored components.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Position {
    /// Inside component `comp`, shifted by `w` full turns from the stored
    /// window.
    Interior { w: i64, comp: usize },
    /// Exactly on the lift of jump `idx`, shifted by `w` turns.
    Jump { w: i64, idx: usize },
}

/// The cut-circle component structure: sorted jump positions in
/// `(base, base + 2)`. Component 0 contains the basepoint and occupies
/// `(jumps[m-1] - 2, jumps[0])`; component `t > 0` occupies
/// `(jumps[t-1], jumps[t])`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Window {
    pub base: Rat,
    pub jumps: Vec<Rat>,
}

impl Window {
    pub fn new(base: Rat, mut jump_dirs: Vec<Rat>) -> Result<Self> {
        let base = reduce_mod2(&base);
        for d in jump_dirs.iter_mut() {
            *d = reduce_mod2(d);
            if *d == base {
                return Err(Error::Invalid("jump at the basepoint".into()));
            }
            if *d < base {
                *d += rat(2, 1);
            }
        }
        jump_dirs.sort();
        jump_dirs.dedup();
        Ok(Window {
            base,
            jumps: jump_dirs,
        })
    }

    pub fn n_components(&self) -> usize {
        self.jumps.len().max(1)
    }

    /// Window position of a direction given in `[0, 2)`.
    pub fn window_pos(&self, dir: &Rat) -> Rat {
        let d = reduce_mod2(dir);
        if d > self.base {
            d
        } else {
            d + rat(2, 1)
        }
    }

    /// Start of the fundamental domain.
    fn domain_start(&self) -> Rat {
        match self.jumps.last() {
            Some(j) => j - rat(2, 1),
            None => self.base.clone(),
        }
    }

    pub fn locate(&self, x: &Rat) -> Position {
        let s = self.domain_start();
        let w_r = ((x - &s) / rat(2, 1)).floor();
        let w = w_r
            .to_integer()
            .try_into()
            .unwrap_or_else(|_| panic!("position overflow"));
        let y = x - &(rat(2, 1) * w_r);
        if self.jumps.is_empty() {
            return Position::Interior { w, comp: 0 };
        }
        let m = self.jumps.len();
        if y == self.domain_start() {
            return Position::Jump { w: w - 1, idx: m - 1 };
        }
        for (i, j) in self.jumps.iter().enumerate() {
            if &y == j {
                return Position::Jump { w, idx: i };
            }
            if &y < j {
                return Position::Interior { w, comp: i };
            }
        }
        // y in (jumps[m-1] - 2, jumps[0]) wrapped low side cannot reach here
        Position::Interior { w, comp: 0 }
    }

    /// A deterministic interior direction of component `t`: the midpoint of
    /// its window interval.
    pub fn component_midpoint(&self, t: usize) -> Rat {
        let (lo, hi) = self.component_interval(t);
        (lo + hi) / rat(2, 1)
    }

    /// Window interval of component `t`.
    pub fn component_interval(&self, t: usize) -> (Rat, Rat) {
        if self.jumps.is_empty() {
            return (self.base.clone(), &self.base + rat(2, 1));
        }
        let m = self.jumps.len();
        if t == 0 {
            (&self.jumps[m - 1] - rat(2, 1), self.jumps[0].clone())
        } else {
            (self.jumps[t - 1].clone(), self.jumps[t].clone())
        }
    }

    /// Component just below jump `idx` and just above it.
    pub fn jump_sides(&self, idx: usize) -> (usize, usize) {
        let m = self.jumps.len();
        (idx, if idx + 1 == m { 0 } else { idx + 1 })
    }
}

/// Shared base of the filtered/graded presentations.
#[derive(Clone, Debug)]
pub struct StructureCore {
    pub boundary: Boundary,
    pub window: Window,
}

impl StructureCore {
    /// The canonical refinement: all Stokes and singular directions.
    pub fn full_jump_set(class: &IrregularClass) -> Result<Vec<Rat>> {
        let mut dirs = class.stokes_directions()?;
        dirs.extend(class.singular_directions()?);
        Ok(crate::scalar::sort_angles(dirs))
    }

    pub fn label_monodromy_pow(&self, l: &CoverPoint, w: i64) -> CoverPoint {
        self.boundary.class.cover_monodromy_pow(l, w)
    }
}

/// A Stokes filtered local system in cut presentation: one exact filtration
/// of `V_b` per component, indexed by the cover fibre and ordered by the
/// component's dominance order.
#[derive(Clone, Debug)]
pub struct StokesFiltered {
    pub core: StructureCore,
    pub comps: Vec<Filtration<CoverPoint>>,
}

/// A Stokes graded local system in cut presentation: one grading of `V_b`
/// per component.
#[derive(Clone, Debug)]
pub struct StokesGraded {
    pub core: StructureCore,
    pub comps: Vec<Grading<CoverPoint>>,
}

impl StokesFiltered {
    pub fn new(
        boundary: Boundary,
        jump_dirs: Vec<Rat>,
        comps: Vec<Filtration<CoverPoint>>,
    ) -> Result<Self> {
        let window = Window::new(boundary.base_pi.clone(), jump_dirs)?;
        if comps.len() != window.n_components() {
            return Err(Error::Shape(format!(
                "{} components for {} jumps",
                comps.len(),
                window.jumps.len()
            )));
        }
        Ok(StokesFiltered {
            core: StructureCore { boundary, window },
            comps,
        })
    }

    pub fn rank(&self) -> usize {
        self.core.boundary.rank()
    }

    pub fn class(&self) -> &IrregularClass {
        &self.core.boundary.class
    }

    /// The filtration seen at a universal-cover position strictly inside a
    /// component, expressed in `V_b`.
    pub fn filtration_at(&self, x: &Rat) -> Result<Filtration<CoverPoint>> {
        match self.core.window.locate(x) {
            Position::Interior { w, comp } => Ok(self.transport_filtration(&self.comps[comp], w)),
            Position::Jump { .. } => Err(Error::Invalid(format!(
                "position {} is a jump",
                crate::scalar::rat_to_string(x)
            ))),
        }
    }

    /// Full step of label `l` at a position: the filtration step off jumps,
    /// the intermediate step `F_L(l) ∩ F_R(l)` on a jump.
    pub fn step_at(&self, x: &Rat, l: &CoverPoint) -> Result<Subspace> {
        match self.core.window.locate(x) {
            Position::Interior { w, comp } => {
                let f = self.transport_filtration(&self.comps[comp], w);
                Ok(f.step(l)?.clone())
            }
            Position::Jump { .. } => {
                let (fl, fr) = self.jump_sides_at(x)?;
                Ok(fl.step(l)?.intersect(fr.step(l)?))
            }
        }
    }

    /// The filtrations just below and just above a jump position, both in
    /// `V_b` with labels at that position.
    pub fn jump_sides_at(&self, x: &Rat) -> Result<(Filtration<CoverPoint>, Filtration<CoverPoint>)> {
        match self.core.window.locate(x) {
            Position::Jump { w, idx } => {
                let (lo, hi) = self.core.window.jump_sides(idx);
                let left = self.transport_filtration(&self.comps[lo], w);
                // the component above the last jump is component 0 one turn up
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

    /// Express a stored component filtration `w` turns up the cover.
    pub fn transport_filtration(&self, f: &Filtration<CoverPoint>, w: i64) -> Filtration<CoverPoint> {
        transport_filtration(&self.core, f, w)
    }

    /// Insert an extra (spurious or real) jump direction, duplicating the
    /// containing component's data.
    pub fn refine(&self, dir: &Rat) -> Result<StokesFiltered> {
        let window = refined_window(&self.core.window, dir);
        let mut comps = Vec::with_capacity(window.n_components());
        for t in 0..window.n_components() {
            comps.push(self.filtration_at(&window.component_midpoint(t))?);
        }
        Ok(StokesFiltered {
            core: StructureCore {
                boundary: self.core.boundary.clone(),
                window,
            },
            comps,
        })
    }
}

impl StokesGraded {
    pub fn new(
        boundary: Boundary,
        jump_dirs: Vec<Rat>,
        comps: Vec<Grading<CoverPoint>>,
    ) -> Result<Self> {
        let window = Window::new(boundary.base_pi.clone(), jump_dirs)?;
        if comps.len() != window.n_components() {
            return Err(Error::Shape(format!(
                "{} components for {} jumps",
                comps.len(),
                window.jumps.len()
            )));
        }
        Ok(StokesGraded {
            core: StructureCore { boundary, window },
            comps,
        })
    }

    pub fn rank(&self) -> usize {
        self.core.boundary.rank()
    }

    pub fn class(&self) -> &IrregularClass {
        &self.core.boundary.class
    }

    pub fn grading_at(&self, x: &Rat) -> Result<Grading<CoverPoint>> {
        match self.core.window.locate(x) {
            Position::Interior { w, comp } => Ok(self.transport_grading(&self.comps[comp], w)),
            Position::Jump { .. } => Err(Error::Invalid("position is a jump".into())),
        }
    }

    /// The gradings just below and just above a jump position.
    pub fn jump_sides_at(&self, x: &Rat) -> Result<(Grading<CoverPoint>, Grading<CoverPoint>)> {
        match self.core.window.locate(x) {
            Position::Jump { w, idx } => {
                let (lo, hi) = self.core.window.jump_sides(idx);
                let left = self.transport_grading(&self.comps[lo], w);
                let right = if hi == 0 {
                    self.transport_grading(&self.comps[0], w + 1)
                } else {
                    self.transport_grading(&self.comps[hi], w)
                };
                Ok((left, right))
            }
            Position::Interior { .. } => Err(Error::Invalid("not a jump position".into())),
        }
    }

    pub fn transport_grading(&self, g: &Grading<CoverPoint>, w: i64) -> Grading<CoverPoint> {
        transport_grading(&self.core, g, w)
    }

    pub fn refine(&self, dir: &Rat) -> Result<StokesGraded> {
        let window = refined_window(&self.core.window, dir);
        let mut comps = Vec::with_capacity(window.n_components());
        for t in 0..window.n_components() {
            comps.push(self.grading_at(&window.component_midpoint(t))?);
        }
        Ok(StokesGraded {
            core: StructureCore {
                boundary: self.core.boundary.clone(),
                window,
            },
            comps,
        })
    }
}

pub(crate) fn transport_filtration(
    core: &StructureCore,
    f: &Filtration<CoverPoint>,
    w: i64,
) -> Filtration<CoverPoint> {
    if w == 0 {
        return f.clone();
    }
    let m = core.boundary.monodromy_pow(-w);
    let shifted = f.apply(&m);
    shifted.relabel(|l| core.boundary.class.cover_monodromy_pow(l, -w))
}

pub(crate) fn transport_grading(
    core: &StructureCore,
    g: &Grading<CoverPoint>,
    w: i64,
) -> Grading<CoverPoint> {
    if w == 0 {
        return g.clone();
    }
    let m = core.boundary.monodromy_pow(-w);
    g.apply(&m).relabel(|l| core.boundary.class.cover_monodromy_pow(l, -w))
}

fn refined_window(window: &Window, dir: &Rat) -> Window {
    let pos = window.window_pos(dir);
    if window.jumps.contains(&pos) {
        return window.clone();
    }
    let mut jumps = window.jumps.clone();
    jumps.push(pos);
    jumps.sort();
    Window {
        base: window.base.clone(),
        jumps,
    }
}

/// A closed or open interval on the universal cover around a base
/// direction.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RamifiedInterval {
    /// Base direction, as an unreduced position.
    pub base: Rat,
    /// Width below the base (positive).
    pub alpha: Rat,
    /// Width above the base (positive).
    pub beta: Rat,
    pub closed_lo: bool,
    pub closed_hi: bool,
}

impl RamifiedInterval {
    pub fn open(base: Rat, alpha: Rat, beta: Rat) -> Result<Self> {
        if !alpha.is_positive() || !beta.is_positive() {
            return Err(Error::Invalid("interval widths must be positive".into()));
        }
        Ok(RamifiedInterval {
            base,
            alpha,
            beta,
            closed_lo: false,
            closed_hi: false,
        })
    }

    pub fn lo(&self) -> Rat {
        &self.base - &self.alpha
    }

    pub fn hi(&self) -> Rat {
        &self.base + &self.beta
    }

    pub fn contains(&self, x: &Rat) -> bool {
        let lo = self.lo();
        let hi = self.hi();
        (x > &lo || (self.closed_lo && x == &lo)) && (x < &hi || (self.closed_hi && x == &hi))
    }

    /// Total width as a multiple of pi; may exceed a full turn.
    pub fn width(&self) -> Rat {
        &self.alpha + &self.beta
    }
}

/// One validation check with its location and outcome.
#[derive(Clone, Debug)]
pub struct Check {
    /// Direction in `[0, 2)` the check happened at, when applicable.
    pub at: Option<Rat>,
    pub what: String,
    pub pass: bool,
    pub detail: String,
}

/// A validation report: a list of checks; valid iff all passed.
#[derive(Clone, Debug, Default)]
pub struct Report {
    pub checks: Vec<Check>,
}

impl Report {
    pub fn push(&mut self, at: Option<Rat>, what: &str, pass: bool, detail: String) {
        self.checks.push(Check {
            at,
            what: String::from(what),
            pass,
            detail,
        });
    }

    pub fn is_valid(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn failures(&self) -> Vec<&Check> {
        self.checks.iter().filter(|c| !c.pass).collect()
    }
}

/// Dominance order of the fibre at an unreduced position, most subdominant
/// first.
pub fn dominance_order(class: &IrregularClass, x: &Rat) -> Result<Vec<CoverPoint>> {
    class.dominance_order_at(x)
}

/// The partial dominance relation at a position (total off Stokes lifts):
/// `lt(i, j)` iff the comparison is strictly `Less`.
pub fn dominance_lt(class: &IrregularClass, x: &Rat, i: &CoverPoint, j: &CoverPoint) -> Result<bool> {
    Ok(matches!(
        class.dominance_compare(i, j, x)?,
        Dominance::Less
    ))
}

/// Builds the full-step sum of all labels `<=` a given exponential germ at
/// a position x (used for the tame step and the dual formulas): the sum of
/// the full steps of the labels strictly below the germ, plus the step of
/// the label realizing the germ when present.
pub fn step_versus_germ(
    s: &StokesFiltered,
    x: &Rat,
    germ: &crate::irregular::ExponentialFactor,
) -> Result<Subspace> {
    let class = s.class();
    let mut acc = Subspace::zero(s.rank());
    for l in class.fiber() {
        let lg = class.germ(&l);
        if &lg == germ {
            acc = acc.sum(&s.step_at(x, &l)?);
            continue;
        }
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

/// Window positions of a set of directions given in `[0, 2)`.
pub fn window_positions(window: &Window, dirs: &[Rat]) -> Vec<Rat> {
    let mut v: Vec<Rat> = dirs.iter().map(|d| window.window_pos(d)).collect();
    v.sort();
    v
}

/// Check positions covering an interval: every jump lift strictly inside,
/// plus one interior point of every maximal jump-free open piece.
pub fn sweep_positions(window: &Window, lo: &Rat, hi: &Rat) -> Vec<(Rat, bool)> {
    let mut jumps_in = Vec::new();
    if !window.jumps.is_empty() {
        // lifts of each jump inside (lo, hi)
        for j in &window.jumps {
            // j + 2w in (lo, hi)
            let wlo = ((lo - j) / rat(2, 1)).floor();
            let mut w = wlo.to_integer();
            loop {
                let cand = j + &(rat(2, 1) * Rat::from_integer(w.clone()));
                if &cand >= hi {
                    break;
                }
                if &cand > lo {
                    jumps_in.push(cand);
                }
                w += 1;
            }
        }
    }
    jumps_in.sort();
    jumps_in.dedup();
    let mut out = Vec::new();
    let mut cursor = lo.clone();
    for j in &jumps_in {
        let mid = (&cursor + j) / rat(2, 1);
        out.push((mid, false));
        out.push((j.clone(), true));
        cursor = j.clone();
    }
    let mid = (&cursor + hi) / rat(2, 1);
    out.push((mid, false));
    out
}
