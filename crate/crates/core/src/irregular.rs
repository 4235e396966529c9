//! Exponential factors, their Galois-orbit circles, irregular classes, and
//! the topological data they determine: dominance orderings, Stokes and
//! singular directions, Stokes arrows, levels, natural quotients and fission
//! trees.
//!
//! Conventions. Factors are written in a local coordinate `z` vanishing at
//! the marked point, as sums of terms `a z^(-k)` with `k` a positive
//! rational. Along the ray of direction `theta` on sheet `b`, the term
//! `a z^(-m/r)` contributes real part proportional to
//! `cos(arg a - (m/r)(theta + 2 pi b))`. One positive turn sends sheet `b`
//! to sheet `b + 1`. Working with unreduced angles on the universal cover
//! keeps every transport computation a plain formula in this convention.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;

use num_integer::Integer;
use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::scalar::{cos_sign_pi, rat, reduce_mod2, Angle, Rat, Sign};

/// Exact positive real of the form `q * prod 2 sin(pi t_j)` with `q` a
/// positive rational and each `t_j` in `(0, 1/2]` canonical.
///
/// This is the closure needed for coefficients of derived factors (pair
/// differences, tensor sums): their arguments stay rational multiples of pi
/// while moduli pick up `2 sin` factors. Rational values of `2 sin(pi t)`
/// (`t = 1/6` and `t = 1/2`) are folded into the rational part, so equality
/// of these moduli is structural equality of the data.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Modulus {
    pub q: Rat,
    pub sin_factors: Vec<Rat>,
}

impl Modulus {
    pub fn from_rat(q: Rat) -> Result<Self> {
        if !q.is_positive() {
            return Err(Error::Invalid("modulus must be positive".into()));
        }
        Ok(Modulus {
            q,
            sin_factors: Vec::new(),
        })
    }

    pub fn one() -> Self {
        Modulus {
            q: Rat::one(),
            sin_factors: Vec::new(),
        }
    }

    pub fn as_rat(&self) -> Option<&Rat> {
        if self.sin_factors.is_empty() {
            Some(&self.q)
        } else {
            None
        }
    }

    /// Multiply by `|2 sin(pi t)|` for `t` in `(0, 1)`, folding rational
    /// values.
    fn mul_sin2(&mut self, t: &Rat) {
        let mut t = t.clone();
        if t > rat(1, 2) {
            t = Rat::one() - t;
        }
        if t == rat(1, 2) {
            self.q *= rat(2, 1);
        } else if t == rat(1, 6) {
            // 2 sin(pi/6) = 1
        } else {
            self.sin_factors.push(t);
            self.sin_factors.sort();
        }
    }

    fn same_factors(&self, other: &Modulus) -> bool {
        self.sin_factors == other.sin_factors
    }

    pub fn to_display(&self) -> String {
        let mut s = crate::scalar::rat_to_string(&self.q);
        for t in &self.sin_factors {
            s = format!("{s}*2sin({}pi)", crate::scalar::rat_to_string(t));
        }
        s
    }
}

impl core::fmt::Debug for Modulus {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        write!(f, "{}", self.to_display())
    }
}

/// A nonzero coefficient `modulus * exp(i * arg_pi * pi)`.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Coeff {
    pub modulus: Modulus,
    /// Argument in `[0, 2) * pi`.
    pub arg_pi: Rat,
}

impl Coeff {
    pub fn new(modulus: Modulus, arg_pi: Rat) -> Self {
        Coeff {
            modulus,
            arg_pi: reduce_mod2(&arg_pi),
        }
    }

    pub fn from_polar(modulus: Rat, arg_pi: Rat) -> Result<Self> {
        Ok(Coeff::new(Modulus::from_rat(modulus)?, arg_pi))
    }

    pub fn neg(&self) -> Coeff {
        Coeff::new(self.modulus.clone(), &self.arg_pi + Rat::one())
    }

    pub fn rotate(&self, delta_pi: &Rat) -> Coeff {
        Coeff::new(self.modulus.clone(), &self.arg_pi + delta_pi)
    }

    /// Exact sum; `None` for zero. Fails when the sum leaves the class of
    /// coefficients with rational-pi argument.
    pub fn add(&self, other: &Coeff) -> Result<Option<Coeff>> {
        let delta = reduce_mod2(&(&other.arg_pi - &self.arg_pi));
        if delta.is_zero() {
            if self.modulus.same_factors(&other.modulus) {
                return Ok(Some(Coeff::new(
                    Modulus {
                        q: &self.modulus.q + &other.modulus.q,
                        sin_factors: self.modulus.sin_factors.clone(),
                    },
                    self.arg_pi.clone(),
                )));
            }
            return Err(Error::Invalid(
                "coefficient sum needs aligned moduli of the same form".into(),
            ));
        }
        if delta == Rat::one() {
            if self.modulus.same_factors(&other.modulus) {
                let d = &self.modulus.q - &other.modulus.q;
                return Ok(match d.cmp(&Rat::zero()) {
                    Ordering::Equal => None,
                    Ordering::Greater => Some(Coeff::new(
                        Modulus {
                            q: d,
                            sin_factors: self.modulus.sin_factors.clone(),
                        },
                        self.arg_pi.clone(),
                    )),
                    Ordering::Less => Some(Coeff::new(
                        Modulus {
                            q: -d,
                            sin_factors: self.modulus.sin_factors.clone(),
                        },
                        other.arg_pi.clone(),
                    )),
                });
            }
            return Err(Error::Invalid(
                "coefficient sum needs aligned moduli of the same form".into(),
            ));
        }
        if self.modulus == other.modulus {
            // a(u(x) + u(y)) = 2 a cos(pi (y-x)/2) u((x+y)/2)
            let half = rat(1, 2);
            let s = &delta * &half; // in (0, 1)
            let mid = &self.arg_pi + &(&delta * &half);
            // 2 cos(pi s): zero handled by delta == 1 above
            let (mag_t, flip) = if s < half {
                (half - &s, false)
            } else {
                (&s - half, true)
            };
            // 2 cos(pi s) = 2 sin(pi (1/2 - s)), negative past s = 1/2
            let mut m = self.modulus.clone();
            if mag_t.is_zero() {
                return Ok(None);
            }
            m.mul_sin2(&mag_t);
            let arg = if flip { &mid + Rat::one() } else { mid };
            return Ok(Some(Coeff::new(m, arg)));
        }
        Err(Error::Invalid(
            "coefficient sum has an argument outside rational multiples of pi".into(),
        ))
    }
}

impl core::fmt::Debug for Coeff {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        write!(
            f,
            "{}·e^({}·iπ)",
            self.modulus.to_display(),
            crate::scalar::rat_to_string(&self.arg_pi)
        )
    }
}

/// One term `coeff * z^(-exponent)` of an exponential factor.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct Term {
    pub exponent: Rat,
    pub coeff: Coeff,
}

/// A ramified exponential factor: a finite sum of terms with strictly
/// decreasing positive rational exponents. The empty sum is the tame
/// factor 0.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct ExponentialFactor {
    terms: Vec<Term>,
}

impl ExponentialFactor {
    pub fn zero() -> Self {
        ExponentialFactor { terms: Vec::new() }
    }

    pub fn new(mut terms: Vec<Term>) -> Result<Self> {
        terms.sort_by(|a, b| b.exponent.cmp(&a.exponent));
        for w in terms.windows(2) {
            if w[0].exponent == w[1].exponent {
                return Err(Error::Invalid("duplicate exponent in factor".into()));
            }
        }
        if terms.iter().any(|t| !t.exponent.is_positive()) {
            return Err(Error::Invalid("factor exponents must be positive".into()));
        }
        Ok(ExponentialFactor { terms })
    }

    /// `a z^(-k)` with polar coefficient.
    pub fn monomial(k: Rat, modulus: Rat, arg_pi: Rat) -> Result<Self> {
        ExponentialFactor::new(vec![Term {
            exponent: k,
            coeff: Coeff::from_polar(modulus, arg_pi)?,
        }])
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    /// Largest exponent, or 0 for the tame factor.
    pub fn slope(&self) -> Rat {
        self.terms
            .first()
            .map_or_else(Rat::zero, |t| t.exponent.clone())
    }

    pub fn leading(&self) -> Option<&Term> {
        self.terms.first()
    }

    /// Lcm of the exponent denominators: the degree of the circle cover.
    pub fn ram(&self) -> u32 {
        let mut l = num_bigint::BigInt::one();
        for t in &self.terms {
            l = l.lcm(t.exponent.denom());
        }
        u32::try_from(l).expect("ramification fits in u32")
    }

    pub fn neg(&self) -> ExponentialFactor {
        ExponentialFactor {
            terms: self
                .terms
                .iter()
                .map(|t| Term {
                    exponent: t.exponent.clone(),
                    coeff: t.coeff.neg(),
                })
                .collect(),
        }
    }

    /// Exact sum of two factors.
    pub fn add(&self, other: &ExponentialFactor) -> Result<ExponentialFactor> {
        let mut by_exp: BTreeMap<Rat, Vec<Coeff>> = BTreeMap::new();
        for t in self.terms.iter().chain(&other.terms) {
            by_exp
                .entry(t.exponent.clone())
                .or_default()
                .push(t.coeff.clone());
        }
        let mut terms = Vec::new();
        for (k, coeffs) in by_exp {
            let mut acc: Option<Coeff> = None;
            let mut sorted = coeffs;
            sorted.sort();
            for c in sorted {
                acc = match acc {
                    None => Some(c),
                    Some(a) => a.add(&c)?,
                };
            }
            if let Some(c) = acc {
                terms.push(Term {
                    exponent: k,
                    coeff: c,
                });
            }
        }
        ExponentialFactor::new(terms)
    }

    pub fn sub(&self, other: &ExponentialFactor) -> Result<ExponentialFactor> {
        self.add(&other.neg())
    }

    /// Drop all terms of exponent `<= k`.
    pub fn truncate_above(&self, k: &Rat) -> ExponentialFactor {
        ExponentialFactor {
            terms: self
                .terms
                .iter()
                .filter(|t| &t.exponent > k)
                .cloned()
                .collect(),
        }
    }

    /// The determination of this factor on sheet `b`: each term
    /// `a z^(-m/r)` has its argument shifted by `-2 m b / r` (times pi).
    pub fn sheet(&self, b: i64) -> ExponentialFactor {
        ExponentialFactor {
            terms: self
                .terms
                .iter()
                .map(|t| {
                    let shift = -&t.exponent * rat(2 * b, 1);
                    Term {
                        exponent: t.exponent.clone(),
                        coeff: t.coeff.rotate(&shift),
                    }
                })
                .collect(),
        }
    }

    /// Key used for the canonical orbit representative: the argument
    /// sequence in decreasing-exponent order.
    fn arg_key(&self) -> Vec<Rat> {
        self.terms.iter().map(|t| t.coeff.arg_pi.clone()).collect()
    }

    pub fn to_display(&self) -> String {
        if self.terms.is_empty() {
            return "0".into();
        }
        let parts: Vec<String> = self
            .terms
            .iter()
            .map(|t| {
                format!(
                    "{:?}·z^-{}",
                    t.coeff,
                    crate::scalar::rat_to_string(&t.exponent)
                )
            })
            .collect();
        parts.join(" + ")
    }
}

impl PartialOrd for ExponentialFactor {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for ExponentialFactor {
    fn cmp(&self, other: &Self) -> Ordering {
        // higher slope first, then term data
        other
            .slope()
            .cmp(&self.slope())
            .then_with(|| self.terms.cmp(&other.terms))
    }
}

/// The Galois-orbit circle of a factor: canonical representative, cover
/// degree and slope. Two factors give equal circles iff one is a sheet
/// determination of the other.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Debug)]
pub struct Circle {
    rep: ExponentialFactor,
    ram: u32,
    slope: Rat,
}

impl Circle {
    /// Canonicalize: among all sheet determinations, pick the one with the
    /// lexicographically minimal argument sequence.
    pub fn new(q: &ExponentialFactor) -> Circle {
        let ram = q.ram();
        let mut best = q.sheet(0);
        let mut best_key = best.arg_key();
        for b in 1..ram as i64 {
            let cand = q.sheet(b);
            let key = cand.arg_key();
            if key < best_key {
                best = cand;
                best_key = key;
            }
        }
        Circle {
            slope: best.slope(),
            ram,
            rep: best,
        }
    }

    pub fn tame() -> Circle {
        Circle::new(&ExponentialFactor::zero())
    }

    pub fn is_tame(&self) -> bool {
        self.rep.is_zero()
    }

    pub fn rep(&self) -> &ExponentialFactor {
        &self.rep
    }

    pub fn ram(&self) -> u32 {
        self.ram
    }

    pub fn slope(&self) -> &Rat {
        &self.slope
    }

    /// Sheet determination `b` (mod ram).
    pub fn sheet(&self, b: i64) -> ExponentialFactor {
        let r = self.ram as i64;
        self.rep.sheet(b.rem_euclid(r))
    }

    pub fn dual(&self) -> Circle {
        Circle::new(&self.rep.neg())
    }

    /// Which sheet of this circle a factor is, if any.
    pub fn sheet_of(&self, q: &ExponentialFactor) -> Option<u32> {
        (0..self.ram as i64).find(|&b| self.sheet(b) == *q).map(|b| b as u32)
    }
}

/// A point of the fiber of the cover `I -> boundary circle`.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct CoverPoint {
    /// Index into the class's circle list.
    pub circle: usize,
    pub sheet: u32,
}

impl CoverPoint {
    pub fn label(&self) -> String {
        format!("c{}s{}", self.circle, self.sheet)
    }
}

/// An irregular class: finitely many circles with positive multiplicities.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct IrregularClass {
    circles: Vec<Circle>,
    mults: Vec<u32>,
}

/// Outcome of one exact dominance comparison at a direction.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Dominance {
    /// First point is subdominant (its exponential decays relative to the
    /// second).
    Less,
    Greater,
    /// The comparison degenerates: the leading real part vanishes.
    Oscillatory,
}

impl IrregularClass {
    pub fn new(entries: Vec<(Circle, u32)>) -> Result<Self> {
        let mut merged: BTreeMap<Circle, u32> = BTreeMap::new();
        for (c, m) in entries {
            if m == 0 {
                return Err(Error::Invalid("zero multiplicity".into()));
            }
            *merged.entry(c).or_insert(0) += m;
        }
        if merged.is_empty() {
            return Err(Error::Invalid("empty irregular class".into()));
        }
        let (circles, mults) = merged.into_iter().unzip();
        Ok(IrregularClass { circles, mults })
    }

    pub fn from_factors(factors: Vec<(ExponentialFactor, u32)>) -> Result<Self> {
        IrregularClass::new(
            factors
                .into_iter()
                .map(|(q, m)| (Circle::new(&q), m))
                .collect(),
        )
    }

    /// The tame class of a given rank.
    pub fn tame(rank: u32) -> Self {
        IrregularClass {
            circles: vec![Circle::tame()],
            mults: vec![rank],
        }
    }

    pub fn circles(&self) -> &[Circle] {
        &self.circles
    }

    pub fn multiplicity(&self, i: usize) -> u32 {
        self.mults[i]
    }

    pub fn multiplicities(&self) -> &[u32] {
        &self.mults
    }

    pub fn rank(&self) -> u32 {
        self.circles
            .iter()
            .zip(&self.mults)
            .map(|(c, m)| c.ram() * m)
            .sum()
    }

    /// Index of the tame circle, if active.
    pub fn tame_index(&self) -> Option<usize> {
        self.circles.iter().position(Circle::is_tame)
    }

    /// The abstract fiber of the cover, in canonical order.
    pub fn fiber(&self) -> Vec<CoverPoint> {
        let mut out = Vec::new();
        for (ci, c) in self.circles.iter().enumerate() {
            for s in 0..c.ram() {
                out.push(CoverPoint { circle: ci, sheet: s });
            }
        }
        out
    }

    /// Multiplicity of a fiber point (constant on each circle).
    pub fn mult_of(&self, p: &CoverPoint) -> u32 {
        self.mults[p.circle]
    }

    /// The permutation of the fiber induced by one positive turn: sheets
    /// shift by +1 on each circle.
    pub fn cover_monodromy(&self, p: &CoverPoint) -> CoverPoint {
        let r = self.circles[p.circle].ram();
        CoverPoint {
            circle: p.circle,
            sheet: (p.sheet + 1) % r,
        }
    }

    /// Iterated cover monodromy (negative powers allowed).
    pub fn cover_monodromy_pow(&self, p: &CoverPoint, k: i64) -> CoverPoint {
        let r = self.circles[p.circle].ram() as i64;
        CoverPoint {
            circle: p.circle,
            sheet: (p.sheet as i64 + k).rem_euclid(r) as u32,
        }
    }

    /// The germ of a fiber point: the sheet determination of its circle.
    pub fn germ(&self, p: &CoverPoint) -> ExponentialFactor {
        self.circles[p.circle].sheet(p.sheet as i64)
    }

    /// Difference of germs `q_i - q_j`; errors if the two points coincide.
    pub fn germ_diff(&self, i: &CoverPoint, j: &CoverPoint) -> Result<ExponentialFactor> {
        if i == j {
            return Err(Error::Invalid("difference of a fiber point with itself".into()));
        }
        let d = self.germ(i).sub(&self.germ(j))?;
        if d.is_zero() {
            return Err(Error::Invalid(
                "distinct fiber points with identical germs".into(),
            ));
        }
        Ok(d)
    }

    /// Exact dominance comparison of two fiber points at an (unreduced)
    /// direction `theta = t * pi` on the universal cover.
    pub fn dominance_compare(
        &self,
        i: &CoverPoint,
        j: &CoverPoint,
        theta_pi: &Rat,
    ) -> Result<Dominance> {
        let d = self.germ_diff(i, j)?;
        Ok(dominance_of_diff(&d, theta_pi))
    }

    /// All ordered-pair germ differences, each with the source/target pair.
    fn pair_diffs(&self) -> Result<Vec<(CoverPoint, CoverPoint, ExponentialFactor)>> {
        let fiber = self.fiber();
        let mut out = Vec::new();
        for i in &fiber {
            for j in &fiber {
                if i != j {
                    out.push((*i, *j, self.germ_diff(i, j)?));
                }
            }
        }
        Ok(out)
    }

    /// Stokes (oscillating) directions, sorted in `[0, 2) * pi`.
    pub fn stokes_directions(&self) -> Result<Vec<Rat>> {
        let mut dirs = Vec::new();
        for (_, _, d) in self.pair_diffs()? {
            let lead = d.leading().expect("nonzero difference");
            // cos(psi - k theta) = 0: psi - k theta = 1/2 + j (mod 2)
            for target in [rat(1, 2), rat(3, 2)] {
                dirs.extend(solve_angle(&lead.coeff.arg_pi, &lead.exponent, &target));
            }
        }
        Ok(crate::scalar::sort_angles(dirs))
    }

    /// Singular (anti-Stokes) directions, sorted in `[0, 2) * pi`.
    pub fn singular_directions(&self) -> Result<Vec<Rat>> {
        let mut dirs = Vec::new();
        for (_, _, d) in self.pair_diffs()? {
            let lead = d.leading().expect("nonzero difference");
            dirs.extend(solve_angle(&lead.coeff.arg_pi, &lead.exponent, &Rat::one()));
        }
        Ok(crate::scalar::sort_angles(dirs))
    }

    /// The Stokes arrows over a direction: ordered pairs whose germ
    /// difference has maximal decay there. Empty when the direction is not
    /// singular. Each arrow goes from the dominant point to the point of
    /// maximal decay (`target` is below `source`).
    pub fn stokes_arrows_at(&self, theta_pi: &Rat) -> Result<Vec<StokesArrow>> {
        let mut out = Vec::new();
        for (i, j, d) in self.pair_diffs()? {
            let lead = d.leading().expect("nonzero difference");
            // maximal decay of e^(q_i - q_j): arg - k theta = pi (mod 2 pi)
            let phase = reduce_mod2(&(&lead.coeff.arg_pi - &(&lead.exponent * theta_pi)));
            if phase == Rat::one() {
                out.push(StokesArrow {
                    direction: Angle::bounded(theta_pi.clone()),
                    source: j,
                    target: i,
                    level: lead.exponent.clone(),
                });
            }
        }
        out.sort_by_key(|a| (a.source, a.target));
        Ok(out)
    }

    /// The total dominance order of the fiber at a non-Stokes direction,
    /// listed from most subdominant to most dominant. Errors at a Stokes
    /// direction, naming an oscillatory pair.
    pub fn dominance_order_at(&self, theta_pi: &Rat) -> Result<Vec<CoverPoint>> {
        let fiber = self.fiber();
        // insertion sort with exact comparisons; transitivity asserted below
        let mut order: Vec<CoverPoint> = Vec::new();
        for p in fiber {
            let mut at = order.len();
            for (k, q) in order.iter().enumerate() {
                match self.dominance_compare(&p, q, theta_pi)? {
                    Dominance::Less => {
                        at = k;
                        break;
                    }
                    Dominance::Greater => {}
                    Dominance::Oscillatory => {
                        return Err(Error::Invalid(format!(
                            "oscillatory pair {} / {} at direction {}·π",
                            p.label(),
                            q.label(),
                            crate::scalar::rat_to_string(theta_pi)
                        )));
                    }
                }
            }
            order.insert(at, p);
        }
        // transitivity check: consecutive comparisons determine all others
        for a in 0..order.len() {
            for b in a + 1..order.len() {
                if self.dominance_compare(&order[a], &order[b], theta_pi)? != Dominance::Less {
                    return Err(Error::Invalid("dominance order not transitive".into()));
                }
            }
        }
        Ok(order)
    }

    /// Dual class: every circle negated.
    pub fn dual(&self) -> IrregularClass {
        IrregularClass::new(
            self.circles
                .iter()
                .zip(&self.mults)
                .map(|(c, m)| (c.dual(), *m))
                .collect(),
        )
        .expect("dual of a valid class")
    }

    /// Tensor product class via the Galois-closed list of pairwise germ
    /// sums.
    pub fn tensor(&self, other: &IrregularClass) -> Result<IrregularClass> {
        let mut counts: BTreeMap<Circle, u32> = BTreeMap::new();
        for (ci, c1) in self.circles.iter().enumerate() {
            for (di, c2) in other.circles.iter().enumerate() {
                let m = self.mults[ci] * other.mults[di];
                for a in 0..c1.ram() as i64 {
                    for b in 0..c2.ram() as i64 {
                        let s = c1.sheet(a).add(&c2.sheet(b))?;
                        *counts.entry(Circle::new(&s)).or_insert(0) += m;
                    }
                }
            }
        }
        let mut entries = Vec::new();
        for (c, n) in counts {
            let r = c.ram();
            if n % r != 0 {
                return Err(Error::Invalid(
                    "tensor list is not Galois closed (coefficient coincidence?)".into(),
                ));
            }
            entries.push((c, n / r));
        }
        IrregularClass::new(entries)
    }

    pub fn end(&self) -> Result<IrregularClass> {
        self.tensor(&self.dual())
    }

    pub fn hom(&self, other: &IrregularClass) -> Result<IrregularClass> {
        other.tensor(&self.dual())
    }

    /// Levels: distinct nonzero slopes of the circles of `End`.
    pub fn levels(&self) -> Result<Vec<Rat>> {
        let end = self.end()?;
        let mut out: Vec<Rat> = end
            .circles
            .iter()
            .map(|c| c.slope().clone())
            .filter(|s| !s.is_zero())
            .collect();
        out.sort();
        out.dedup();
        Ok(out)
    }

    /// Levels of the relative cover `I -> I(k)`: slopes of in-part germ
    /// differences, i.e. the levels that are `<= k`. `None` means `I -> I`.
    pub fn levels_rel(&self, quotient_at: Option<&Rat>) -> Result<Vec<Rat>> {
        let mut out = Vec::new();
        for (_, _, d) in self.pair_diffs()? {
            let s = d.slope();
            if let Some(k) = quotient_at {
                if &s > k {
                    continue;
                }
            }
            out.push(s);
        }
        out.sort();
        out.dedup();
        Ok(out)
    }

    /// The natural quotient `I(k)`: truncate every germ to its terms of
    /// exponent `> k` and re-canonicalize. Returns the quotient class and
    /// the map on fiber points.
    pub fn natural_quotient(&self, k: &Rat) -> Result<(IrregularClass, BTreeMap<CoverPoint, CoverPoint>)> {
        if !k.is_positive() {
            return Err(Error::Invalid("quotient level must be positive".into()));
        }
        // group fiber germs by truncation
        let fiber = self.fiber();
        let mut truncated: Vec<(CoverPoint, ExponentialFactor)> = fiber
            .iter()
            .map(|p| (*p, self.germ(p).truncate_above(k)))
            .collect();
        // quotient circles: canonical circles of the truncations, with
        // multiplicity = sum of multiplicities of preimages / ram
        let mut counts: BTreeMap<Circle, u32> = BTreeMap::new();
        for (p, t) in &truncated {
            *counts.entry(Circle::new(t)).or_insert(0) += self.mult_of(p);
        }
        let mut entries = Vec::new();
        for (c, n) in counts {
            let r = c.ram();
            if n % r != 0 {
                return Err(Error::Invalid("quotient multiplicities not divisible".into()));
            }
            entries.push((c, n / r));
        }
        let quot = IrregularClass::new(entries)?;
        let mut map = BTreeMap::new();
        for (p, t) in truncated.drain(..) {
            let ci = quot
                .circles
                .iter()
                .position(|c| c.sheet_of(&t).is_some())
                .expect("truncation lands in quotient");
            let sheet = quot.circles[ci].sheet_of(&t).unwrap();
            map.insert(p, CoverPoint { circle: ci, sheet });
        }
        Ok((quot, map))
    }

    /// The canonical nested sequence of natural quotients at the levels.
    pub fn fission_tree(&self) -> Result<FissionTree> {
        let levels = self.levels_rel(None)?;
        let mut stages = Vec::new();
        let mut current = self.clone();
        let mut degrees = vec![self.fiber().len()];
        for k in &levels {
            let (quot, map_from_prev) = current.natural_quotient(k)?;
            degrees.push(quot.fiber().len());
            stages.push(FissionStage {
                level: k.clone(),
                class: quot.clone(),
                map: map_from_prev,
            });
            current = quot;
        }
        for w in degrees.windows(2) {
            if w[1] >= w[0] {
                return Err(Error::Invalid("fission degrees must strictly decrease".into()));
            }
        }
        if let Some(last) = stages.last() {
            // the factorization ends with a degree-one cover of the circle
            if last.class.fiber().len() != 1 {
                return Err(Error::Invalid("fission tree must end at a trivial cover".into()));
            }
        }
        Ok(FissionTree { levels, stages })
    }
}

/// Dominance of a germ difference at an unreduced direction.
pub fn dominance_of_diff(diff: &ExponentialFactor, theta_pi: &Rat) -> Dominance {
    let lead = diff.leading().expect("nonzero difference");
    let phase = &lead.coeff.arg_pi - &(&lead.exponent * theta_pi);
    match cos_sign_pi(&phase) {
        Sign::Negative => Dominance::Less,
        Sign::Positive => Dominance::Greater,
        Sign::Zero => Dominance::Oscillatory,
    }
}

/// Directions in `[0, 2)` where a term `a z^(-k)` with `arg a = psi * pi`
/// has maximal decay.
pub fn solve_max_decay(psi: &Rat, k: &Rat) -> Vec<Rat> {
    solve_angle(psi, k, &Rat::one())
}

/// Solutions `theta` in `[0, 2)` of `psi - k*theta = target (mod 2)`.
fn solve_angle(psi: &Rat, k: &Rat, target: &Rat) -> Vec<Rat> {
    // theta = (psi - target - 2 j) / k for integer j; theta in [0, 2)
    let base = psi - target;
    let mut out = Vec::new();
    // theta in [0,2) <=> j in (base/2 - k, base/2]
    let half = &base / rat(2, 1);
    let lo = &half - k; // exclusive
    let hi = half; // inclusive
    let mut j = hi.floor().to_integer();
    loop {
        let jr = Rat::from_integer(j.clone());
        if jr <= lo {
            break;
        }
        if jr <= hi {
            let theta = (&base - &(rat(2, 1) * &jr)) / k;
            debug_assert!(!theta.is_negative() && theta < rat(2, 1));
            out.push(theta);
        }
        j -= 1;
    }
    out
}

/// A Stokes arrow at a singular direction: `target` is strictly below
/// `source` there, with maximal decay of the difference.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct StokesArrow {
    pub direction: Angle,
    pub source: CoverPoint,
    pub target: CoverPoint,
    /// Slope of the germ difference.
    pub level: Rat,
}

/// One stage of the fission tree: the quotient class at a level together
/// with the part map from the previous stage's fiber.
#[derive(Clone, Debug)]
pub struct FissionStage {
    pub level: Rat,
    pub class: IrregularClass,
    pub map: BTreeMap<CoverPoint, CoverPoint>,
}

/// The canonical factorization of the cover through its natural quotients,
/// one stage per level.
#[derive(Clone, Debug)]
pub struct FissionTree {
    pub levels: Vec<Rat>,
    pub stages: Vec<FissionStage>,
}
