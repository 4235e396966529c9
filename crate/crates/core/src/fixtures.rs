//! Deterministic random fixtures: irregular classes, valid Stokes graded
//! and filtered structures, surface-closed structures and representations.
//!
//! Everything is driven by a seeded ChaCha stream, so a fixture is a pure
//! function of its seed and bounds.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

use crate::error::{Error, Result};
use crate::flagged::{Grading, QuiverOrder, Subspace};
use crate::irregular::{CoverPoint, ExponentialFactor, IrregularClass};
use crate::linalg::Matrix;
use crate::reps::{generic_basepoint, rep_from_sgls, StokesRep};
use crate::scalar::{rat, Gaussian, Rat};
use crate::structures::{
    arrow_order_at, grading_to_filtration, window_positions, Boundary, StokesFiltered,
    StokesGraded, StructureCore, Window,
};

pub fn seeded_rng(seed: u64) -> ChaCha20Rng {
    ChaCha20Rng::seed_from_u64(seed)
}

/// Bounds for the random class generator.
#[derive(Clone, Copy, Debug)]
pub struct ClassBounds {
    pub max_rank: u32,
    pub max_levels: u32,
    pub max_ram: u32,
}

impl Default for ClassBounds {
    fn default() -> Self {
        ClassBounds {
            max_rank: 6,
            max_levels: 2,
            max_ram: 3,
        }
    }
}

fn small_rat(rng: &mut ChaCha20Rng) -> Rat {
    rat(rng.gen_range(1..=4), rng.gen_range(1..=3))
}

/// A random class within the bounds. Coefficients are kept aligned per
/// exponent (arguments differing by multiples of pi, ramified exponents
/// with equal moduli), so every derived pairwise difference and tensor sum
/// stays inside the exactly representable coefficient domain.
pub fn random_class(rng: &mut ChaCha20Rng, bounds: &ClassBounds) -> IrregularClass {
    loop {
        if let Ok(c) = try_random_class(rng, bounds) {
            if c.rank() <= bounds.max_rank {
                if let Ok(levels) = c.levels() {
                    if levels.len() as u32 <= bounds.max_levels {
                        return c;
                    }
                }
            }
        }
    }
}

fn try_random_class(rng: &mut ChaCha20Rng, bounds: &ClassBounds) -> Result<IrregularClass> {
    // candidate exponents: denominators within the ramification bound
    let mut exponents: Vec<Rat> = Vec::new();
    for den in 1..=bounds.max_ram.min(4) {
        for num in 1..=3u32 {
            let k = rat(num as i64, den as i64);
            if !exponents.contains(&k) {
                exponents.push(k);
            }
        }
    }
    let n_exp = rng.gen_range(1..=2usize);
    let mut chosen: Vec<Rat> = Vec::new();
    while chosen.len() < n_exp {
        let k = exponents[rng.gen_range(0..exponents.len())].clone();
        if !chosen.contains(&k) {
            chosen.push(k);
        }
    }
    // one base argument line per exponent
    let args: Vec<Rat> = chosen
        .iter()
        .map(|_| rat(rng.gen_range(0..8), 4))
        .collect();
    let mut factors: Vec<(ExponentialFactor, u32)> = Vec::new();
    let n_circ = rng.gen_range(1..=3usize);
    for _ in 0..n_circ {
        let mut terms = Vec::new();
        for (k, base_arg) in chosen.iter().zip(&args) {
            if rng.gen_bool(0.7) {
                let ramified = !num_traits::One::is_one(k.denom());
                let modulus = if ramified { rat(1, 1) } else { small_rat(rng) };
                let flip = if rng.gen_bool(0.5) { rat(1, 1) } else { rat(0, 1) };
                terms.push(crate::irregular::Term {
                    exponent: k.clone(),
                    coeff: crate::irregular::Coeff::from_polar(modulus, base_arg + &flip)?,
                });
            }
        }
        let f = ExponentialFactor::new(terms)?;
        factors.push((f, rng.gen_range(1..=2u32)));
    }
    if rng.gen_bool(0.4) && !factors.iter().any(|(f, _)| f.is_zero()) {
        factors.push((ExponentialFactor::zero(), rng.gen_range(1..=2u32)));
    }
    IrregularClass::from_factors(factors)
}

/// A random invertible matrix with small Gaussian integer entries, built as
/// a product of elementary operations (so the determinant is 1).
pub fn random_unimodular(rng: &mut ChaCha20Rng, n: usize) -> Matrix {
    let mut m = Matrix::identity(n);
    if n < 2 {
        return m;
    }
    for _ in 0..2 * n {
        let i = rng.gen_range(0..n);
        let mut j = rng.gen_range(0..n);
        while j == i {
            j = rng.gen_range(0..n);
        }
        let c = random_small_gaussian(rng);
        // row_i += c * row_j
        for col in 0..n {
            let delta = &c * &m[(j, col)];
            m[(i, col)] = &m[(i, col)] + &delta;
        }
    }
    m
}

fn random_small_gaussian(rng: &mut ChaCha20Rng) -> Gaussian {
    let re = rng.gen_range(-2..=2i64);
    let im = if rng.gen_bool(0.3) {
        rng.gen_range(-1..=1i64)
    } else {
        0
    };
    Gaussian::new(rat(re, 1), rat(im, 1))
}

/// A random grading with the dimension vector of a class: the image of the
/// coordinate blocks under a random unimodular map.
pub fn random_grading(rng: &mut ChaCha20Rng, class: &IrregularClass) -> Grading<CoverPoint> {
    let n = class.rank() as usize;
    let u = random_unimodular(rng, n);
    let mut pieces = BTreeMap::new();
    let mut start = 0;
    for l in class.fiber() {
        let d = class.mult_of(&l) as usize;
        let rows: Vec<Vec<Gaussian>> = (start..start + d)
            .map(|i| {
                let mut v = alloc::vec![Gaussian::zero(); n];
                v[i] = Gaussian::one();
                v
            })
            .collect();
        let block = Subspace::from_rows(Matrix::from_rows(rows));
        pieces.insert(l, block.apply(&u));
        start += d;
    }
    Grading::new(n, pieces).expect("random grading decomposes")
}

/// A random element of the unipotent group of a quiver order with respect
/// to a grading.
pub fn random_stokes_element<L: Ord + Clone + core::fmt::Debug>(
    rng: &mut ChaCha20Rng,
    g: &Grading<L>,
    order: &QuiverOrder<L>,
) -> Matrix {
    let n = g.ambient();
    // basis adapted to the grading: pieces' bases as columns
    let mut rows: Vec<Vec<Gaussian>> = Vec::with_capacity(n);
    let mut offsets: BTreeMap<L, usize> = BTreeMap::new();
    for (l, s) in g.pieces() {
        offsets.insert(l.clone(), rows.len());
        for i in 0..s.dim() {
            rows.push(s.basis().row(i).to_vec());
        }
    }
    let basis = Matrix::from_rows(rows).transpose();
    let mut pattern = Matrix::identity(n);
    for (lo, hi) in order.relations() {
        let (ro, co) = (offsets[lo], offsets[hi]);
        let (dl, dh) = (g.piece(lo).unwrap().dim(), g.piece(hi).unwrap().dim());
        for i in 0..dl {
            for j in 0..dh {
                if rng.gen_bool(0.8) {
                    pattern[(ro + i, co + j)] = random_small_gaussian(rng);
                }
            }
        }
    }
    let binv = basis.inverse().expect("grading basis invertible");
    &(&basis * &pattern) * &binv
}

/// A valid random Stokes graded local system over a class: a free chain of
/// Stokes-group jumps with the boundary monodromy closing the wrap. The
/// structure is local (genus 0, no handle constraints on the monodromy).
pub fn random_graded(rng: &mut ChaCha20Rng, class: &IrregularClass) -> Result<StokesGraded> {
    let base = generic_basepoint(class)?;
    let jumps = StructureCore::full_jump_set(class)?;
    let window = Window::new(base.clone(), jumps.clone())?;
    let singular = window_positions(&window, &class.singular_directions()?);
    let g0 = random_grading(rng, class);
    let mut comps = alloc::vec![g0.clone()];
    let mut current = g0.clone();
    let mut end = g0.clone();
    for t in 0..window.jumps.len() {
        let pos = window.jumps[t].clone();
        let next = if singular.contains(&pos) {
            let order = arrow_order_at(class, &pos)?;
            let u = random_stokes_element(rng, &current, &order);
            current.apply(&u)
        } else {
            current.clone()
        };
        if t + 1 < window.jumps.len() {
            comps.push(next.clone());
        } else {
            end = next.clone();
        }
        current = next;
    }
    // wrap closure: a monodromy carrying the final grading onto the shifted
    // initial one
    let rho = wrap_monodromy(rng, class, &end, &g0);
    let boundary = Boundary::new(class.clone(), base, rho)?;
    let out = StokesGraded::new(boundary, jumps, comps)?;
    debug_assert!(out.validate()?.is_valid());
    Ok(out)
}

/// Any invertible map carrying `end(l)` onto `start(monodromy(l))`, with a
/// random block twist.
fn wrap_monodromy(
    rng: &mut ChaCha20Rng,
    class: &IrregularClass,
    end: &Grading<CoverPoint>,
    start: &Grading<CoverPoint>,
) -> Matrix {
    let n = end.ambient();
    let mut src_rows: Vec<Vec<Gaussian>> = Vec::with_capacity(n);
    let mut dst_rows: Vec<Vec<Gaussian>> = Vec::with_capacity(n);
    for l in class.fiber() {
        let e = end.piece(&l).expect("piece");
        let s = start.piece(&class.cover_monodromy(&l)).expect("piece");
        let d = e.dim();
        // random invertible mixing inside the target block
        let mix = random_unimodular(rng, d);
        let mixed = &mix * s.basis();
        for i in 0..d {
            src_rows.push(e.basis().row(i).to_vec());
            dst_rows.push(mixed.row(i).to_vec());
        }
    }
    let src = Matrix::from_rows(src_rows).transpose();
    let dst = Matrix::from_rows(dst_rows).transpose();
    &dst * &src.inverse().expect("grading basis invertible")
}

/// A valid random Stokes filtered local system: the associated filtration
/// of a random graded structure.
pub fn random_filtered(rng: &mut ChaCha20Rng, class: &IrregularClass) -> Result<StokesFiltered> {
    grading_to_filtration(&random_graded(rng, class)?)
}

/// A surface-closed random graded structure of the given genus: the
/// boundary monodromy is the inverse commutator product of the handles.
///
/// Construction families:
/// - tame classes: no jumps, free handles;
/// - unramified classes: chains of cancelling Stokes-group pairs at
///   singular directions with matching arrow patterns, with graded handles.
pub fn random_surface_graded(
    rng: &mut ChaCha20Rng,
    class: &IrregularClass,
    genus: u32,
) -> Result<StokesGraded> {
    let unramified = class.circles().iter().all(|c| c.ram() == 1);
    if !unramified {
        return Err(Error::Invalid(
            "surface fixtures require an unramified class".into(),
        ));
    }
    let base = generic_basepoint(class)?;
    let jumps = StructureCore::full_jump_set(class)?;
    let window = Window::new(base.clone(), jumps.clone())?;
    let singular = window_positions(&window, &class.singular_directions()?);
    let n = class.rank() as usize;
    let g0 = random_grading(rng, class);

    // group singular jumps by arrow pattern and pick sequential cancelling
    // pairs
    let mut by_pattern: BTreeMap<Vec<(CoverPoint, CoverPoint)>, Vec<usize>> = BTreeMap::new();
    for (idx, pos) in window.jumps.iter().enumerate() {
        if singular.contains(pos) {
            let arrows = class.stokes_arrows_at(pos)?;
            let mut key: Vec<(CoverPoint, CoverPoint)> =
                arrows.iter().map(|a| (a.target, a.source)).collect();
            key.sort();
            if !key.is_empty() {
                by_pattern.entry(key).or_default().push(idx);
            }
        }
    }
    let mut pairs: Vec<(usize, usize)> = Vec::new();
    for slots in by_pattern.values() {
        let mut it = slots.iter();
        while let (Some(&a), Some(&b)) = (it.next(), it.next()) {
            pairs.push((a, b));
        }
    }
    pairs.sort();
    // keep a sequential non-overlapping subset
    let mut chosen: Vec<(usize, usize)> = Vec::new();
    let mut cursor = 0usize;
    for (a, b) in pairs {
        if a >= cursor {
            chosen.push((a, b));
            cursor = b + 1;
        }
    }
    let mut jump_maps: BTreeMap<usize, Matrix> = BTreeMap::new();
    for (a, b) in &chosen {
        let order = arrow_order_at(class, &window.jumps[*a])?;
        let v = random_stokes_element(rng, &g0, &order);
        jump_maps.insert(*a, v.clone());
        jump_maps.insert(*b, v.inverse()?);
    }
    let mut comps = alloc::vec![g0.clone()];
    let mut current = g0.clone();
    for t in 0..window.jumps.len() {
        let next = match jump_maps.get(&t) {
            Some(u) => current.apply(u),
            None => current.clone(),
        };
        if t + 1 < window.jumps.len() {
            comps.push(next.clone());
        }
        current = next;
    }
    if current != g0 {
        return Err(Error::Invalid("cancelling chain failed to close".into()));
    }
    // handles: graded automorphisms, so the commutator fixes the gradings
    let mut handles = Vec::new();
    let mut rho = Matrix::identity(n);
    for _ in 0..genus {
        let a = random_graded_auto(rng, &g0);
        let b = random_graded_auto(rng, &g0);
        let comm = &(&(&a * &b) * &a.inverse()?) * &b.inverse()?;
        rho = &rho * &comm;
        handles.push((a, b));
    }
    let rho = rho.inverse()?;
    let boundary = Boundary::new(class.clone(), base, rho)?.with_handles(handles);
    let out = StokesGraded::new(boundary, jumps, comps)?;
    let report = out.validate()?;
    if !report.is_valid() {
        return Err(Error::Invalid("surface fixture failed validation".into()));
    }
    Ok(out)
}

/// A random graded automorphism of a grading (block-diagonal in an adapted
/// basis).
pub fn random_graded_auto(rng: &mut ChaCha20Rng, g: &Grading<CoverPoint>) -> Matrix {
    let n = g.ambient();
    let mut rows: Vec<Vec<Gaussian>> = Vec::with_capacity(n);
    let mut mixed_rows: Vec<Vec<Gaussian>> = Vec::with_capacity(n);
    for s in g.pieces().values() {
        let d = s.dim();
        let mix = random_unimodular(rng, d);
        let mixed = &mix * s.basis();
        for i in 0..d {
            rows.push(s.basis().row(i).to_vec());
            mixed_rows.push(mixed.row(i).to_vec());
        }
    }
    let src = Matrix::from_rows(rows).transpose();
    let dst = Matrix::from_rows(mixed_rows).transpose();
    &dst * &src.inverse().expect("basis invertible")
}

/// The Weber class `<z^-2/4> + <-z^-2/4>`.
pub fn weber_class() -> IrregularClass {
    let qp = ExponentialFactor::monomial(rat(2, 1), rat(1, 4), rat(0, 1)).unwrap();
    let qm = ExponentialFactor::monomial(rat(2, 1), rat(1, 4), rat(1, 1)).unwrap();
    IrregularClass::from_factors(alloc::vec![(qp, 1), (qm, 1)]).unwrap()
}

/// A Weber-type filtered fixture from four recessive lines: the line of
/// component `t` is recessive on the sector around direction `t/2 * pi`.
/// Adjacent lines (cyclically) must differ; the monodromy is trivial as on
/// the plane.
pub fn weber_filtered(lines: [[i64; 2]; 4]) -> Result<StokesFiltered> {
    weber_filtered_gaussian(lines.map(|l| [Gaussian::from_int(l[0]), Gaussian::from_int(l[1])]))
}

pub fn weber_filtered_gaussian(lines: [[Gaussian; 2]; 4]) -> Result<StokesFiltered> {
    let class = weber_class();
    let base = generic_basepoint(&class)?; // 15/8, inside (7/4, 2)
    let boundary = Boundary::new(class.clone(), base, Matrix::identity(2))?;
    let jumps = StructureCore::full_jump_set(&class)?;
    let window = Window::new(boundary.base_pi.clone(), jumps.clone())?;
    let mut comps = Vec::new();
    for t in 0..window.n_components() {
        let mid = window.component_midpoint(t);
        let order = class.dominance_order_at(&mid)?;
        // the component around direction t/2 has recessive line `lines[k]`
        // where k is the nearest singular direction index
        let k = nearest_quadrant(&mid);
        let line = Subspace::from_rows(Matrix::from_rows(alloc::vec![lines[k].to_vec()]));
        if line.dim() != 1 {
            return Err(Error::Invalid("line must be nonzero".into()));
        }
        let steps = alloc::vec![line, Subspace::full(2)];
        comps.push(crate::flagged::Filtration::new(order, steps)?);
    }
    StokesFiltered::new(boundary, jumps, comps)
}

fn nearest_quadrant(mid: &Rat) -> usize {
    // mid is a window position; reduce and find the nearest multiple of 1/2
    let r = crate::scalar::reduce_mod2(mid);
    let scaled = &r * rat(2, 1); // in [0, 4)
    let rounded = (&scaled + rat(1, 2)).floor();
    let idx = rounded.to_integer() % num_bigint::BigInt::from(4);
    let idx: i64 = idx.try_into().unwrap();
    idx.rem_euclid(4) as usize
}

/// A random valid Weber filtered fixture: four pairwise-adjacent-distinct
/// random lines.
pub fn random_weber_filtered(rng: &mut ChaCha20Rng) -> Result<StokesFiltered> {
    loop {
        let mut lines: [[Gaussian; 2]; 4] =
            core::array::from_fn(|_| [Gaussian::zero(), Gaussian::zero()]);
        for l in lines.iter_mut() {
            loop {
                let a = random_small_gaussian(rng);
                let b = random_small_gaussian(rng);
                if !a.is_zero() || !b.is_zero() {
                    *l = [a, b];
                    break;
                }
            }
        }
        let distinct = |x: &[Gaussian; 2], y: &[Gaussian; 2]| {
            // lines differ iff the 2x2 determinant is nonzero
            !(&(&x[0] * &y[1]) - &(&x[1] * &y[0])).is_zero()
        };
        if (0..4).all(|i| distinct(&lines[i], &lines[(i + 1) % 4])) {
            return weber_filtered_gaussian(lines);
        }
    }
}

/// A random Stokes representation from a surface fixture.
pub fn random_rep(
    rng: &mut ChaCha20Rng,
    class: &IrregularClass,
    genus: u32,
) -> Result<StokesRep> {
    let s = random_surface_graded(rng, class, genus)?;
    rep_from_sgls(&s, None)
}
