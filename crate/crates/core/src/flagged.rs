//! Filtered and graded linear algebra over `Q(i)`.
//!
//! Gradings and filtrations of a fixed vector space indexed by an abstract
//! finite label set, splittings of filtrations by gradings, the unipotent
//! wild monodromy connecting two compatible gradings, median gradings via
//! exact unipotent square roots, quiver-shaped Stokes groups, and the
//! two-filtration compatibility test driving the jump conditions.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::ToString;
use alloc::vec;
use alloc::vec::Vec;

use num_traits::One;

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::scalar::{rat, Gaussian, Rat};

/// A subspace of `Q(i)^n`, stored as a reduced row-echelon basis so that
/// equality of subspaces is equality of data.
#[derive(Clone, PartialEq, Eq)]
pub struct Subspace {
    ambient: usize,
    /// RREF basis matrix; rows are independent.
    basis: Matrix,
}

impl Subspace {
    pub fn zero(ambient: usize) -> Self {
        Subspace {
            ambient,
            basis: Matrix::zero(0, ambient),
        }
    }

    pub fn full(ambient: usize) -> Self {
        Subspace::from_rows(Matrix::identity(ambient))
    }

    /// Span of the rows of `m`.
    pub fn from_rows(m: Matrix) -> Self {
        let ambient = m.n_cols();
        let (r, pivots) = m.rref();
        let rows = (0..pivots.len()).map(|i| r.row(i).to_vec()).collect();
        Subspace {
            ambient,
            basis: if pivots.is_empty() {
                Matrix::zero(0, ambient)
            } else {
                Matrix::from_rows(rows)
            },
        }
    }

    pub fn ambient(&self) -> usize {
        self.ambient
    }

    pub fn dim(&self) -> usize {
        self.basis.n_rows()
    }

    pub fn basis(&self) -> &Matrix {
        &self.basis
    }

    pub fn contains_vec(&self, v: &[Gaussian]) -> bool {
        let m = Matrix::from_rows(vec![v.to_vec()]);
        self.basis.solve_rows(&m).is_ok()
    }

    pub fn contains(&self, other: &Subspace) -> bool {
        other.dim() == 0 || self.basis.solve_rows(other.basis()).is_ok()
    }

    pub fn sum(&self, other: &Subspace) -> Subspace {
        assert_eq!(self.ambient, other.ambient, "ambient mismatch");
        Subspace::from_rows(self.basis.vstack(&other.basis))
    }

    /// Exact intersection via the kernel of the stacked bases.
    pub fn intersect(&self, other: &Subspace) -> Subspace {
        assert_eq!(self.ambient, other.ambient, "ambient mismatch");
        if self.dim() == 0 || other.dim() == 0 {
            return Subspace::zero(self.ambient);
        }
        let stacked = self.basis.vstack(&other.basis);
        let ker = stacked.transpose().kernel();
        // kernel rows (a | b) with a*B1 + b*B2 = 0 give vectors a*B1 in the
        // intersection
        let mut rows = Vec::new();
        for i in 0..ker.n_rows() {
            let kr = ker.row(i);
            let coeffs = &kr[0..self.dim()];
            let v = Matrix::from_rows(vec![coeffs.to_vec()]);
            let vec = (&v * &self.basis).row(0).to_vec();
            rows.push(vec);
        }
        if rows.is_empty() {
            Subspace::zero(self.ambient)
        } else {
            Subspace::from_rows(Matrix::from_rows(rows))
        }
    }

    /// Image under an invertible map (rows transform by the transpose).
    pub fn apply(&self, m: &Matrix) -> Subspace {
        if self.dim() == 0 {
            return Subspace::zero(m.n_rows());
        }
        Subspace::from_rows(&self.basis * &m.transpose())
    }

    /// Deterministic complement of `self` inside `within`: extend the RREF
    /// basis of `self` by rows of `within`, taking pivots leftmost-first.
    pub fn complement_in(&self, within: &Subspace) -> Result<Subspace> {
        if !within.contains(self) {
            return Err(Error::Invalid("complement_in: not a subspace".into()));
        }
        let mut acc = self.basis.clone();
        let mut rows = Vec::new();
        for i in 0..within.dim() {
            let cand = Matrix::from_rows(vec![within.basis.row(i).to_vec()]);
            let stacked = acc.vstack(&cand);
            if stacked.rank() > acc.rank() {
                rows.push(within.basis.row(i).to_vec());
                acc = stacked;
            }
        }
        if rows.is_empty() {
            Ok(Subspace::zero(self.ambient))
        } else {
            Ok(Subspace::from_rows(Matrix::from_rows(rows)))
        }
    }

    /// Deterministic basis of the quotient `within / self`: representatives
    /// extending this subspace's basis to one of `within`.
    pub fn quotient_basis(&self, within: &Subspace) -> Result<Matrix> {
        Ok(self.complement_in(within)?.basis().clone())
    }

    /// Annihilator in the dual space, with rows in the dual standard basis.
    pub fn perp(&self) -> Subspace {
        if self.dim() == 0 {
            return Subspace::full(self.ambient);
        }
        Subspace::from_rows(self.basis.kernel())
    }

    /// Tensor product subspace inside the Kronecker ambient.
    pub fn tensor(&self, other: &Subspace) -> Subspace {
        if self.dim() == 0 || other.dim() == 0 {
            return Subspace::zero(self.ambient * other.ambient);
        }
        Subspace::from_rows(self.basis.kron(&other.basis))
    }

    pub fn conj(&self) -> Subspace {
        Subspace::from_rows(self.basis.conj())
    }
}

impl core::fmt::Debug for Subspace {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        write!(f, "Subspace(dim {} of {}) {:?}", self.dim(), self.ambient, self.basis)
    }
}

/// A grading of `Q(i)^n` by an ordered label set: a direct sum decomposition.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Grading<L: Ord + Clone> {
    ambient: usize,
    pieces: BTreeMap<L, Subspace>,
}

impl<L: Ord + Clone + core::fmt::Debug> Grading<L> {
    pub fn new(ambient: usize, pieces: BTreeMap<L, Subspace>) -> Result<Self> {
        let mut total = 0;
        let mut stacked = Matrix::zero(0, ambient);
        for s in pieces.values() {
            if s.ambient() != ambient {
                return Err(Error::Shape("grading piece ambient mismatch".into()));
            }
            total += s.dim();
            stacked = stacked.vstack(s.basis());
        }
        if total != ambient || stacked.rank() != ambient {
            return Err(Error::Invalid(format!(
                "pieces do not form a direct sum decomposition (dims {total}, rank {})",
                stacked.rank()
            )));
        }
        Ok(Grading { ambient, pieces })
    }

    pub fn ambient(&self) -> usize {
        self.ambient
    }

    pub fn labels(&self) -> impl Iterator<Item = &L> {
        self.pieces.keys()
    }

    pub fn piece(&self, l: &L) -> Option<&Subspace> {
        self.pieces.get(l)
    }

    pub fn pieces(&self) -> &BTreeMap<L, Subspace> {
        &self.pieces
    }

    pub fn dims(&self) -> BTreeMap<L, usize> {
        self.pieces.iter().map(|(l, s)| (l.clone(), s.dim())).collect()
    }

    /// Apply an invertible map to every piece.
    pub fn apply(&self, m: &Matrix) -> Grading<L> {
        let pieces = self
            .pieces
            .iter()
            .map(|(l, s)| (l.clone(), s.apply(m)))
            .collect();
        Grading {
            ambient: self.ambient,
            pieces,
        }
    }

    /// Relabel pieces by a map on labels (must be injective on keys).
    pub fn relabel<M: Ord + Clone>(&self, mut f: impl FnMut(&L) -> M) -> Grading<M> {
        let pieces: BTreeMap<M, Subspace> =
            self.pieces.iter().map(|(l, s)| (f(l), s.clone())).collect();
        assert_eq!(pieces.len(), self.pieces.len(), "relabel collision");
        Grading {
            ambient: self.ambient,
            pieces,
        }
    }

    pub fn conj(&self) -> Grading<L> {
        Grading {
            ambient: self.ambient,
            pieces: self.pieces.iter().map(|(l, s)| (l.clone(), s.conj())).collect(),
        }
    }

    /// The filtration associated to a total order on the labels.
    pub fn assoc_filtration(&self, order: &[L]) -> Result<Filtration<L>> {
        let keys: Vec<&L> = self.pieces.keys().collect();
        if order.len() != keys.len() || !order.iter().all(|l| self.pieces.contains_key(l)) {
            return Err(Error::Shape("order does not enumerate the label set".into()));
        }
        let mut steps = Vec::with_capacity(order.len());
        let mut acc = Subspace::zero(self.ambient);
        for l in order {
            acc = acc.sum(&self.pieces[l]);
            steps.push(acc.clone());
        }
        Filtration::new(order.to_vec(), steps)
    }

    /// Whether a matrix preserves every piece.
    pub fn is_graded_auto(&self, m: &Matrix) -> bool {
        self.pieces.values().all(|s| s.apply(m) == *s)
    }
}

/// A filtration of `Q(i)^n` indexed by a totally ordered label list:
/// `order[0] <= order[1] <= ...` with nested cumulative steps.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Filtration<L: Ord + Clone> {
    /// Labels in increasing filtration order.
    order: Vec<L>,
    /// `steps[k]` is the subspace at `order[k]`; nested.
    steps: Vec<Subspace>,
}

impl<L: Ord + Clone + core::fmt::Debug> Filtration<L> {
    pub fn new(order: Vec<L>, steps: Vec<Subspace>) -> Result<Self> {
        if order.len() != steps.len() || order.is_empty() {
            return Err(Error::Shape("filtration order/steps mismatch".into()));
        }
        for w in steps.windows(2) {
            if !w[1].contains(&w[0]) {
                return Err(Error::Invalid("filtration steps not nested".into()));
            }
        }
        let n = steps[0].ambient();
        if steps.last().map(Subspace::dim) != Some(n) {
            return Err(Error::Invalid("filtration does not exhaust the space".into()));
        }
        Ok(Filtration { order, steps })
    }

    pub fn ambient(&self) -> usize {
        self.steps[0].ambient()
    }

    pub fn order(&self) -> &[L] {
        &self.order
    }

    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }

    pub fn position(&self, l: &L) -> Option<usize> {
        self.order.iter().position(|x| x == l)
    }

    /// The step at a label.
    pub fn step(&self, l: &L) -> Result<&Subspace> {
        self.position(l)
            .map(|i| &self.steps[i])
            .ok_or_else(|| Error::Shape(format!("label {l:?} not in filtration")))
    }

    /// The strictly-below step `F(<l)`.
    pub fn step_below(&self, l: &L) -> Result<Subspace> {
        let i = self
            .position(l)
            .ok_or_else(|| Error::Shape(format!("label {l:?} not in filtration")))?;
        Ok(if i == 0 {
            Subspace::zero(self.ambient())
        } else {
            self.steps[i - 1].clone()
        })
    }

    pub fn steps(&self) -> &[Subspace] {
        &self.steps
    }

    /// Dimension vector of the associated graded.
    pub fn dims(&self) -> BTreeMap<L, usize> {
        let mut out = BTreeMap::new();
        let mut prev = 0;
        for (l, s) in self.order.iter().zip(&self.steps) {
            out.insert(l.clone(), s.dim() - prev);
            prev = s.dim();
        }
        out
    }

    pub fn apply(&self, m: &Matrix) -> Filtration<L> {
        Filtration {
            order: self.order.clone(),
            steps: self.steps.iter().map(|s| s.apply(m)).collect(),
        }
    }

    pub fn relabel<M: Ord + Clone>(&self, mut f: impl FnMut(&L) -> M) -> Filtration<M> {
        Filtration {
            order: self.order.iter().map(&mut f).collect(),
            steps: self.steps.clone(),
        }
    }

    /// Whether `g` splits this filtration: the associated filtration of `g`
    /// under this order equals `self`.
    pub fn is_split_by(&self, g: &Grading<L>) -> bool {
        match g.assoc_filtration(&self.order) {
            Ok(f) => f == *self,
            Err(_) => false,
        }
    }
}

/// Associated graded data of a filtration: for each label, a chosen lift
/// basis (rows spanning a complement of `F(<l)` in `F(l)`).
pub struct AssocGraded<L: Ord + Clone> {
    pub order: Vec<L>,
    /// Row-bases of the chosen lifts, one block per label, possibly empty.
    pub lifts: BTreeMap<L, Matrix>,
}

impl<L: Ord + Clone + core::fmt::Debug> Filtration<L> {
    /// Deterministic choice of lift bases for `Gr_l = F(l)/F(<l)`.
    pub fn assoc_graded(&self) -> AssocGraded<L> {
        let mut lifts = BTreeMap::new();
        let mut below = Subspace::zero(self.ambient());
        for (l, s) in self.order.iter().zip(&self.steps) {
            let c = below
                .complement_in(s)
                .expect("nested filtration has complements");
            lifts.insert(l.clone(), c.basis().clone());
            below = s.clone();
        }
        AssocGraded {
            order: self.order.clone(),
            lifts,
        }
    }
}

/// True iff the grading splits the filtration, and if so the canonical
/// isomorphism from the chosen associated-graded lifts onto the pieces,
/// with identity induced map on the graded quotients.
pub fn splitting_iso<L: Ord + Clone + core::fmt::Debug>(
    g: &Grading<L>,
    f: &Filtration<L>,
) -> Result<Matrix> {
    if !f.is_split_by(g) {
        return Err(Error::Invalid("grading does not split filtration".into()));
    }
    let n = f.ambient();
    let ag = f.assoc_graded();
    // Send each lift basis vector to the unique element of the piece that is
    // congruent to it mod F(<l).
    let mut src_rows: Vec<Vec<Gaussian>> = Vec::new();
    let mut dst_rows: Vec<Vec<Gaussian>> = Vec::new();
    for l in f.order() {
        let lift = &ag.lifts[l];
        let below = f.step_below(l)?;
        let piece = g.piece(l).expect("label sets match");
        for i in 0..lift.n_rows() {
            let v = lift.row(i).to_vec();
            let w = congruent_element(&v, &below, piece)?;
            src_rows.push(v);
            dst_rows.push(w);
        }
    }
    let src = Matrix::from_rows(src_rows);
    let dst = Matrix::from_rows(dst_rows);
    // matrix mapping src rows to dst rows: x -> x * (src^-1 dst) in row form,
    // i.e. as an operator on column vectors: dst^T * (src^T)^-1.
    let op = &dst.transpose() * &src.transpose().inverse()?;
    let _ = n;
    Ok(op)
}

/// The unique element of `(v + below) ∩ piece`, if it exists.
pub(crate) fn congruent_element(
    v: &[Gaussian],
    below: &Subspace,
    piece: &Subspace,
) -> Result<Vec<Gaussian>> {
    // Solve v = w - u with w in piece, u in below: express v in the stacked
    // basis [piece; below].
    let stacked = piece.basis().vstack(below.basis());
    let rhs = Matrix::from_rows(vec![v.to_vec()]);
    let coeffs = stacked
        .solve_rows(&rhs)
        .map_err(|_| Error::Invalid("vector not in piece + below".into()))?;
    let pc = Matrix::from_fn(1, piece.dim(), |_, j| coeffs[(0, j)].clone());
    if piece.dim() == 0 {
        return Ok(vec![Gaussian::zero(); below.ambient()]);
    }
    Ok((&pc * piece.basis()).row(0).to_vec())
}

/// Searches for a total order making the two gradings' associated
/// filtrations equal; returns all valid orders up to the given cap.
fn witness_orders<L: Ord + Clone + core::fmt::Debug>(
    g1: &Grading<L>,
    g2: &Grading<L>,
    cap: usize,
) -> Vec<Vec<L>> {
    let labels: Vec<L> = g1.labels().cloned().collect();
    let n = g1.ambient();
    let mut found = Vec::new();
    // Depth-first: a prefix is viable iff the two prefix sums agree at each
    // step.
    struct Dfs<'a, L: Ord + Clone> {
        g1: &'a Grading<L>,
        g2: &'a Grading<L>,
        cap: usize,
    }
    fn go<L: Ord + Clone + core::fmt::Debug>(
        d: &Dfs<'_, L>,
        prefix: &mut Vec<L>,
        remaining: &mut Vec<L>,
        sum1: &Subspace,
        sum2: &Subspace,
        found: &mut Vec<Vec<L>>,
    ) {
        if found.len() >= d.cap {
            return;
        }
        if remaining.is_empty() {
            found.push(prefix.clone());
            return;
        }
        for i in 0..remaining.len() {
            let l = remaining[i].clone();
            let s1 = sum1.sum(d.g1.piece(&l).unwrap());
            let s2 = sum2.sum(d.g2.piece(&l).unwrap());
            if s1 == s2 {
                prefix.push(l.clone());
                remaining.remove(i);
                go(d, prefix, remaining, &s1, &s2, found);
                remaining.insert(i, l);
                prefix.pop();
                if found.len() >= d.cap {
                    return;
                }
            }
        }
    }
    let dfs = Dfs { g1, g2, cap };
    let mut remaining = labels;
    go(
        &dfs,
        &mut Vec::new(),
        &mut remaining,
        &Subspace::zero(n),
        &Subspace::zero(n),
        &mut found,
    );
    found
}

/// The unique unipotent map taking one compatible grading to the other with
/// identity induced map on the common associated graded.
pub fn wild_monodromy<L: Ord + Clone + core::fmt::Debug>(
    g1: &Grading<L>,
    g2: &Grading<L>,
) -> Result<Matrix> {
    if g1.ambient() != g2.ambient() {
        return Err(Error::Shape("gradings in different spaces".into()));
    }
    let k1: Vec<&L> = g1.labels().collect();
    let k2: Vec<&L> = g2.labels().collect();
    if k1 != k2 {
        return Err(Error::Shape("gradings with different label sets".into()));
    }
    if g1.dims() != g2.dims() {
        return Err(Error::Incompatible("dimension vectors differ".into()));
    }
    let orders = witness_orders(g1, g2, 1);
    let Some(order) = orders.first() else {
        return Err(Error::Incompatible(format!(
            "no common refining order for labels {:?}",
            k1
        )));
    };
    let f = g1.assoc_filtration(order)?;
    // g = Psi_2^{-1} Psi_1: send each basis vector of a Gamma_1 piece to its
    // unique congruent element of the matching Gamma_2 piece mod F(<l).
    let mut src_rows: Vec<Vec<Gaussian>> = Vec::new();
    let mut dst_rows: Vec<Vec<Gaussian>> = Vec::new();
    for l in order {
        let below = f.step_below(l)?;
        let p1 = g1.piece(l).unwrap();
        let p2 = g2.piece(l).unwrap();
        for i in 0..p1.basis().n_rows() {
            let v = p1.basis().row(i).to_vec();
            let w = congruent_element(&v, &below, p2)?;
            src_rows.push(v);
            dst_rows.push(w);
        }
    }
    let src = Matrix::from_rows(src_rows).transpose();
    let dst = Matrix::from_rows(dst_rows).transpose();
    let g = &dst * &src.inverse()?;
    debug_assert!(is_unipotent(&g));
    Ok(g)
}

/// All wild monodromies recomputed under every witness order (small label
/// sets only); used to check independence of the choice.
pub fn wild_monodromy_all_orders<L: Ord + Clone + core::fmt::Debug>(
    g1: &Grading<L>,
    g2: &Grading<L>,
    cap: usize,
) -> Result<Vec<Matrix>> {
    let orders = witness_orders(g1, g2, cap);
    if orders.is_empty() {
        return Err(Error::Incompatible("no common refining order".into()));
    }
    let mut out = Vec::new();
    for order in orders {
        let f = g1.assoc_filtration(&order)?;
        let mut src_rows = Vec::new();
        let mut dst_rows = Vec::new();
        for l in &order {
            let below = f.step_below(l)?;
            let p1 = g1.piece(l).unwrap();
            let p2 = g2.piece(l).unwrap();
            for i in 0..p1.basis().n_rows() {
                let v = p1.basis().row(i).to_vec();
                let w = congruent_element(&v, &below, p2)?;
                src_rows.push(v);
                dst_rows.push(w);
            }
        }
        let src = Matrix::from_rows(src_rows).transpose();
        let dst = Matrix::from_rows(dst_rows).transpose();
        out.push(&dst * &src.inverse()?);
    }
    Ok(out)
}

pub fn is_unipotent(m: &Matrix) -> bool {
    if !m.is_square() {
        return false;
    }
    let n = m.n_rows();
    let nil = m - &Matrix::identity(n);
    nil.pow(n as u64).is_zero()
}

pub fn is_nilpotent(m: &Matrix) -> bool {
    m.is_square() && m.pow(m.n_rows() as u64).is_zero()
}

/// Nilpotent logarithm of a unipotent matrix via the finite series.
pub fn unipotent_log(u: &Matrix) -> Result<Matrix> {
    if !is_unipotent(u) {
        return Err(Error::NotUnipotent("log of non-unipotent matrix".into()));
    }
    let n = u.n_rows();
    let nil = u - &Matrix::identity(n);
    let mut acc = Matrix::zero(n, n);
    let mut pw = Matrix::identity(n);
    for k in 1..=n as i64 {
        pw = &pw * &nil;
        if pw.is_zero() {
            break;
        }
        let sign = if k % 2 == 1 { 1 } else { -1 };
        let coeff = Gaussian::from_rat(rat(sign, k));
        acc = &acc + &pw.scale(&coeff);
    }
    Ok(acc)
}

/// Exponential of a nilpotent matrix via the finite series.
pub fn nilpotent_exp(x: &Matrix) -> Result<Matrix> {
    if !is_nilpotent(x) {
        return Err(Error::NotUnipotent("exp of non-nilpotent matrix".into()));
    }
    let n = x.n_rows();
    let mut acc = Matrix::identity(n);
    let mut pw = Matrix::identity(n);
    let mut fact = Rat::one();
    for k in 1..=n as i64 {
        pw = &pw * x;
        if pw.is_zero() {
            break;
        }
        fact *= rat(k, 1);
        let coeff = Gaussian::from_rat(Rat::one() / &fact);
        acc = &acc + &pw.scale(&coeff);
    }
    Ok(acc)
}

/// The unique unipotent square root: `exp(log(u)/2)`.
pub fn unipotent_sqrt(u: &Matrix) -> Result<Matrix> {
    unipotent_power(u, &rat(1, 2))
}

/// Rational power `exp(t log u)` of a unipotent matrix.
pub fn unipotent_power(u: &Matrix, t: &Rat) -> Result<Matrix> {
    let x = unipotent_log(u)?;
    nilpotent_exp(&x.scale(&Gaussian::from_rat(t.clone())))
}

/// Median grading between two compatible gradings.
pub fn median_grading<L: Ord + Clone + core::fmt::Debug>(
    g1: &Grading<L>,
    g2: &Grading<L>,
) -> Result<Grading<L>> {
    let g = wild_monodromy(g1, g2)?;
    let s = unipotent_sqrt(&g)?;
    Ok(g1.apply(&s))
}

/// A strict partial order on labels, viewed as a quiver: a relation
/// `i < j` is an arrow from `j` to `i`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QuiverOrder<L: Ord + Clone> {
    nodes: Vec<L>,
    /// Transitively closed set of (lesser, greater) pairs.
    relations: Vec<(L, L)>,
}

impl<L: Ord + Clone + core::fmt::Debug> QuiverOrder<L> {
    pub fn new(nodes: Vec<L>, arrows: Vec<(L, L)>) -> Result<Self> {
        for (a, b) in &arrows {
            if a == b {
                return Err(Error::Invalid("reflexive relation in partial order".into()));
            }
            if !nodes.contains(a) || !nodes.contains(b) {
                return Err(Error::Shape("relation endpoint not a node".into()));
            }
        }
        let mut relations = arrows;
        relations.sort();
        relations.dedup();
        // transitive closure
        loop {
            let mut added = Vec::new();
            for (a, b) in &relations {
                for (c, d) in &relations {
                    if b == c {
                        let pair = (a.clone(), d.clone());
                        if !relations.contains(&pair) && !added.contains(&pair) {
                            added.push(pair);
                        }
                    }
                }
            }
            if added.is_empty() {
                break;
            }
            relations.extend(added);
            relations.sort();
            relations.dedup();
        }
        for (a, b) in &relations {
            if relations.contains(&(b.clone(), a.clone())) {
                return Err(Error::Invalid(format!("cycle through {a:?} and {b:?}")));
            }
        }
        Ok(QuiverOrder { nodes, relations })
    }

    pub fn empty(nodes: Vec<L>) -> Self {
        QuiverOrder {
            nodes,
            relations: Vec::new(),
        }
    }

    pub fn nodes(&self) -> &[L] {
        &self.nodes
    }

    pub fn relations(&self) -> &[(L, L)] {
        &self.relations
    }

    pub fn lt(&self, a: &L, b: &L) -> bool {
        self.relations.iter().any(|(x, y)| x == a && y == b)
    }

    /// Labels strictly below `b`.
    pub fn below(&self, b: &L) -> Vec<L> {
        self.relations
            .iter()
            .filter(|(_, y)| y == b)
            .map(|(x, _)| x.clone())
            .collect()
    }

    /// Whether the total order given as a list extends this partial order.
    pub fn extended_by(&self, order: &[L]) -> bool {
        self.relations.iter().all(|(a, b)| {
            let pa = order.iter().position(|x| x == a);
            let pb = order.iter().position(|x| x == b);
            matches!((pa, pb), (Some(i), Some(j)) if i < j)
        })
    }
}

/// Membership of `u` in the unipotent group whose Lie algebra is spanned by
/// the maps along the quiver arrows of `order` in the grading `g`:
/// `(u - 1)` must send each piece into the sum of the pieces strictly below.
pub fn stokes_group_membership<L: Ord + Clone + core::fmt::Debug>(
    u: &Matrix,
    g: &Grading<L>,
    order: &QuiverOrder<L>,
) -> bool {
    if u.n_rows() != g.ambient() || !u.is_square() {
        return false;
    }
    let nil = u - &Matrix::identity(g.ambient());
    for l in g.labels() {
        let mut target = Subspace::zero(g.ambient());
        for b in order.below(l) {
            target = target.sum(g.piece(&b).expect("quiver node in grading"));
        }
        let piece = g.piece(l).unwrap();
        let img = if piece.dim() == 0 {
            Subspace::zero(g.ambient())
        } else {
            Subspace::from_rows(piece.basis() * &nil.transpose())
        };
        if !target.contains(&img) {
            return false;
        }
    }
    true
}

/// Checks the jump condition for a pair of gradings against a quiver order
/// and returns the unique connecting element when it holds.
pub fn check_grading_pair<L: Ord + Clone + core::fmt::Debug>(
    g1: &Grading<L>,
    g2: &Grading<L>,
    order: &QuiverOrder<L>,
) -> Option<Matrix> {
    let g = wild_monodromy(g1, g2).ok()?;
    if stokes_group_membership(&g, g1, order) && stokes_group_membership(&g, g2, order) {
        Some(g)
    } else {
        None
    }
}

/// Outcome of the two-filtration compatibility test.
pub enum SplittingOutcome<L: Ord + Clone> {
    /// A grading splitting both filtrations, built deterministically.
    Split(Grading<L>),
    /// An off-diagonal witness `(i, j, m(i,j))` showing incompatibility.
    Certificate(L, L, i64),
}

/// Decides whether two filtrations of the same dimension vector admit a
/// common splitting, via the relative-position matrix
/// `m(i,j) = dim(F1(i) ∩ F2(j)) - dim(F1(<i) ∩ F2(j)) - dim(F1(i) ∩ F2(<j)) + dim(F1(<i) ∩ F2(<j))`,
/// and constructs the deterministic splitting when it exists. The
/// construction is verified to split both inputs, which is the final
/// arbiter.
pub fn common_splitting<L: Ord + Clone + core::fmt::Debug>(
    f1: &Filtration<L>,
    f2: &Filtration<L>,
) -> Result<SplittingOutcome<L>> {
    let mut l1: Vec<L> = f1.order().to_vec();
    let mut l2: Vec<L> = f2.order().to_vec();
    l1.sort();
    l2.sort();
    if l1 != l2 {
        return Err(Error::Shape("filtrations index different label sets".into()));
    }
    let d1 = f1.dims();
    if d1 != f2.dims() {
        return Err(Error::Shape("filtrations have different dimension vectors".into()));
    }
    let dim_int = |a: &Subspace, b: &Subspace| a.intersect(b).dim() as i64;
    for i in f1.order() {
        for j in f2.order() {
            let a = f1.step(i)?;
            let ab = f1.step_below(i)?;
            let b = f2.step(j)?;
            let bb = f2.step_below(j)?;
            let m = dim_int(a, b) - dim_int(&ab, b) - dim_int(a, &bb) + dim_int(&ab, &bb);
            let expect = if i == j { d1[i] as i64 } else { 0 };
            if m != expect {
                return Ok(SplittingOutcome::Certificate(i.clone(), j.clone(), m));
            }
        }
    }
    // Build the splitting: a deterministic complement inside each double
    // intersection.
    let mut pieces = BTreeMap::new();
    for l in f1.order() {
        let inter = f1.step(l)?.intersect(f2.step(l)?);
        let low = f1
            .step_below(l)?
            .intersect(f2.step(l)?)
            .sum(&f1.step(l)?.intersect(&f2.step_below(l)?));
        let low_in = low.intersect(&inter);
        let piece = low_in.complement_in(&inter)?;
        pieces.insert(l.clone(), piece);
    }
    let g = Grading::new(f1.ambient(), pieces)?;
    if !f1.is_split_by(&g) || !f2.is_split_by(&g) {
        return Err(Error::Invalid(
            "relative-position criterion passed but constructed grading fails to split"
                .to_string(),
        ));
    }
    Ok(SplittingOutcome::Split(g))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::g;

    fn line(v: &[i64]) -> Subspace {
        Subspace::from_rows(Matrix::from_rows(vec![v
            .iter()
            .map(|&x| Gaussian::from_int(x))
            .collect()]))
    }

    #[test]
    fn subspace_algebra() {
        let e1 = line(&[1, 0]);
        let e2 = line(&[0, 1]);
        let diag = line(&[1, 1]);
        assert_eq!(diag.intersect(&e1).dim(), 0);
        assert_eq!(e1.sum(&e2), Subspace::full(2));
        let c = line(&[1, 0, 0])
            .complement_in(&Subspace::full(3))
            .unwrap();
        assert_eq!(c, line(&[0, 1, 0]).sum(&line(&[0, 0, 1])));
    }

    fn grading2(a: &[i64], b: &[i64]) -> Grading<u32> {
        let mut p = BTreeMap::new();
        p.insert(1u32, line(a));
        p.insert(2u32, line(b));
        Grading::new(2, p).unwrap()
    }

    #[test]
    fn wild_monodromy_rank2() {
        let g1 = grading2(&[1, 0], &[0, 1]);
        let g2 = grading2(&[1, 0], &[1, 1]);
        let w = wild_monodromy(&g1, &g2).unwrap();
        // fixes e1, sends e2 to e1 + e2
        assert_eq!(w.mul_vec(&[g(1, 1), g(0, 1)]), vec![g(1, 1), g(0, 1)]);
        assert_eq!(w.mul_vec(&[g(0, 1), g(1, 1)]), vec![g(1, 1), g(1, 1)]);
        assert!(is_unipotent(&w));
        // identity on equal gradings
        let id = wild_monodromy(&g1, &g1).unwrap();
        assert!(id.is_identity());
    }

    #[test]
    fn unipotent_calculus() {
        let u = Matrix::from_ints(&[&[1, 2], &[0, 1]]);
        let s = unipotent_sqrt(&u).unwrap();
        assert_eq!(s, Matrix::from_ints(&[&[1, 1], &[0, 1]]));
        assert_eq!(nilpotent_exp(&unipotent_log(&u).unwrap()).unwrap(), u);
        assert!(unipotent_log(&Matrix::from_ints(&[&[2, 0], &[0, 1]])).is_err());
        assert_eq!(unipotent_sqrt(&Matrix::identity(3)).unwrap(), Matrix::identity(3));
    }

    #[test]
    fn median_of_pair() {
        let g1 = grading2(&[1, 0], &[0, 1]);
        let g2 = grading2(&[1, 0], &[2, 1]);
        let m = median_grading(&g1, &g2).unwrap();
        // midpoint on the affine line of splittings
        assert_eq!(m.piece(&2).unwrap(), &line(&[1, 1]));
        assert_eq!(m.piece(&1).unwrap(), &line(&[1, 0]));
    }

    #[test]
    fn stokes_membership_block_pattern() {
        let g1 = grading2(&[1, 0], &[0, 1]);
        let arrows = QuiverOrder::new(vec![1u32, 2], vec![(1, 2)]).unwrap();
        let u = Matrix::from_ints(&[&[1, 5], &[0, 1]]);
        assert!(stokes_group_membership(&u, &g1, &arrows));
        let l = Matrix::from_ints(&[&[1, 0], &[5, 1]]);
        assert!(!stokes_group_membership(&l, &g1, &arrows));
        let empty = QuiverOrder::empty(vec![1u32, 2]);
        assert!(stokes_group_membership(&Matrix::identity(2), &g1, &empty));
        assert!(!stokes_group_membership(&u, &g1, &empty));
    }

    #[test]
    fn grading_pair_condition() {
        let g1 = grading2(&[1, 0], &[0, 1]);
        let g2 = grading2(&[1, 0], &[1, 1]);
        let arrows = QuiverOrder::new(vec![1u32, 2], vec![(1, 2)]).unwrap();
        assert!(check_grading_pair(&g1, &g2, &arrows).is_some());
        let empty = QuiverOrder::empty(vec![1u32, 2]);
        assert!(check_grading_pair(&g1, &g2, &empty).is_none());
        assert!(check_grading_pair(&g1, &g1, &empty).is_some());
    }

    #[test]
    fn common_splitting_weber_style() {
        // four pairwise-distinct lines; adjacent filtrations with opposite
        // orders split
        let f1 = Filtration::new(vec![1u32, 2], vec![line(&[1, 0]), Subspace::full(2)]).unwrap();
        let f2 = Filtration::new(vec![2u32, 1], vec![line(&[1, 1]), Subspace::full(2)]).unwrap();
        match common_splitting(&f1, &f2).unwrap() {
            SplittingOutcome::Split(g) => {
                assert_eq!(g.piece(&1).unwrap(), &line(&[1, 0]));
                assert_eq!(g.piece(&2).unwrap(), &line(&[1, 1]));
            }
            SplittingOutcome::Certificate(..) => panic!("expected splitting"),
        }
        // same flag, opposite orders, dims (1,1): impossible
        let f3 = Filtration::new(vec![2u32, 1], vec![line(&[1, 0]), Subspace::full(2)]).unwrap();
        match common_splitting(&f1, &f3).unwrap() {
            SplittingOutcome::Certificate(i, j, m) => {
                assert_ne!(i, j);
                assert_ne!(m, 0);
            }
            SplittingOutcome::Split(_) => panic!("expected certificate"),
        }
    }

    #[test]
    fn splitting_iso_identity_on_graded() {
        let f = Filtration::new(vec![1u32, 2], vec![line(&[1, 2]), Subspace::full(2)]).unwrap();
        let mut p = BTreeMap::new();
        p.insert(1u32, line(&[1, 2]));
        p.insert(2u32, line(&[0, 1]));
        let g = Grading::new(2, p).unwrap();
        let iso = splitting_iso(&g, &f).unwrap();
        // maps the chosen lifts into the pieces with identity graded map
        for l in [1u32, 2] {
            let piece = g.piece(&l).unwrap();
            let lift = &f.assoc_graded().lifts[&l];
            for i in 0..lift.n_rows() {
                let img = iso.mul_vec(lift.row(i));
                assert!(piece.contains_vec(&img));
            }
        }
    }
}
