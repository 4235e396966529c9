//! Wild surface group presentations, Stokes representations, twisted
//! conjugation and wild Wilson loop invariants.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::flagged::{stokes_group_membership, Grading, QuiverOrder, Subspace};
use crate::irregular::{CoverPoint, IrregularClass};
use crate::linalg::Matrix;
use crate::scalar::{rat, Rat};
use crate::structures::{
    arrow_order_at, graded_to_stokes_ls, stokes_ls_to_graded, Boundary, Report, StokesGraded,
    StokesLocalSys, Window,
};

/// The combinatorial data of the wild surface group for one marked point:
/// genus, irregular class, basepoint, the singular directions in positive
/// order, and the standard graded fibre.
#[derive(Clone, Debug)]
pub struct WildSurfaceData {
    pub genus: u32,
    pub class: IrregularClass,
    pub base_pi: Rat,
    /// Window positions of the singular directions, in positive order from
    /// the basepoint.
    pub singular: Vec<Rat>,
    pub labels: Vec<CoverPoint>,
    pub dims: BTreeMap<CoverPoint, usize>,
}

impl WildSurfaceData {
    pub fn new(genus: u32, class: IrregularClass, base_pi: Rat) -> Result<Self> {
        let window = Window::new(base_pi.clone(), StructureJumps::all(&class)?)?;
        let singular = crate::structures::window_positions(&window, &class.singular_directions()?);
        let labels = class.fiber();
        let dims = labels
            .iter()
            .map(|l| (*l, class.mult_of(l) as usize))
            .collect();
        Ok(WildSurfaceData {
            genus,
            class,
            base_pi,
            singular,
            labels,
            dims,
        })
    }

    pub fn rank(&self) -> usize {
        self.dims.values().sum()
    }

    /// Generator names in presentation order.
    pub fn generator_names(&self) -> Vec<String> {
        let mut names = Vec::new();
        for i in 1..=self.genus {
            names.push(format!("A{i}"));
            names.push(format!("B{i}"));
        }
        names.push("h".to_string());
        for j in 1..=self.singular.len() {
            names.push(format!("S{j}"));
        }
        names
    }

    /// The defining relation `prod [A_i, B_i] * h * S_r ... S_1` as a word.
    pub fn relation_word(&self) -> String {
        let mut toks: Vec<String> = Vec::new();
        for i in 1..=self.genus {
            toks.push(format!("A{i}"));
            toks.push(format!("B{i}"));
            toks.push(format!("A{i}'"));
            toks.push(format!("B{i}'"));
        }
        toks.push("h".to_string());
        for j in (1..=self.singular.len()).rev() {
            toks.push(format!("S{j}"));
        }
        toks.join(" ")
    }

    /// Block start of a label in the standard fibre.
    pub fn block_start(&self, l: &CoverPoint) -> usize {
        let mut start = 0;
        for k in &self.labels {
            if k == l {
                return start;
            }
            start += self.dims[k];
        }
        unreachable!("label in fibre")
    }

    /// Coordinate-block grading of the standard fibre.
    pub fn standard_grading(&self) -> Grading<CoverPoint> {
        let n = self.rank();
        let mut pieces = BTreeMap::new();
        for l in &self.labels {
            let start = self.block_start(l);
            let rows: Vec<Vec<crate::scalar::Gaussian>> = (0..self.dims[l])
                .map(|i| {
                    let mut v = alloc::vec![crate::scalar::Gaussian::zero(); n];
                    v[start + i] = crate::scalar::Gaussian::one();
                    v
                })
                .collect();
            pieces.insert(
                *l,
                if rows.is_empty() {
                    Subspace::zero(n)
                } else {
                    Subspace::from_rows(Matrix::from_rows(rows))
                },
            );
        }
        Grading::new(n, pieces).expect("block grading")
    }

    /// The Stokes arrows at the `j`-th singular direction (0-based),
    /// transported to the basepoint along the positive path.
    pub fn stokes_order(&self, j: usize) -> Result<QuiverOrder<CoverPoint>> {
        arrow_order_at(&self.class, &self.singular[j])
    }
}

struct StructureJumps;

impl StructureJumps {
    fn all(class: &IrregularClass) -> Result<Vec<Rat>> {
        let mut dirs = class.stokes_directions()?;
        dirs.extend(class.singular_directions()?);
        Ok(crate::scalar::sort_angles(dirs))
    }
}

/// A point of the wild representation variety: matrices for every
/// generator of the presentation.
#[derive(Clone, Debug)]
pub struct StokesRep {
    pub data: WildSurfaceData,
    pub mats: BTreeMap<String, Matrix>,
}

impl StokesRep {
    pub fn generator(&self, name: &str) -> Result<&Matrix> {
        self.mats
            .get(name)
            .ok_or_else(|| Error::UnknownGenerator(name.to_string()))
    }

    /// Ordered product of generator matrices along a word. Tokens are
    /// generator names separated by whitespace, with a trailing `'` for the
    /// inverse; the product is taken in written order.
    pub fn transport(&self, word: &str) -> Result<Matrix> {
        let n = self.data.rank();
        let mut acc = Matrix::identity(n);
        for tok in word.split_whitespace() {
            let (name, inv) = match tok.strip_suffix('\'') {
                Some(base) => (base, true),
                None => (tok, false),
            };
            let m = self.generator(name)?;
            let m = if inv { m.inverse()? } else { m.clone() };
            acc = &acc * &m;
        }
        Ok(acc)
    }

    /// Twist, Stokes membership and relation checks.
    pub fn validate(&self) -> Result<Report> {
        let mut report = Report::default();
        let n = self.data.rank();
        let g = self.data.standard_grading();
        for name in self.data.generator_names() {
            match self.mats.get(&name) {
                Some(m) if m.is_square() && m.n_rows() == n => {}
                Some(_) => {
                    report.push(None, "generator-shape", false, format!("{name} has wrong size"));
                    return Ok(report);
                }
                None => {
                    report.push(None, "generator-missing", false, name.clone());
                    return Ok(report);
                }
            }
        }
        // twist of h
        let h = self.generator("h")?;
        let mut ok = true;
        for l in &self.data.labels {
            let img = g.piece(l).expect("label").apply(h);
            if Some(&img) != g.piece(&self.data.class.cover_monodromy(l)) {
                ok = false;
            }
        }
        report.push(None, "twist", ok, String::new());
        // Stokes memberships
        for j in 0..self.data.singular.len() {
            let s = self.generator(&format!("S{}", j + 1))?;
            let order = self.data.stokes_order(j)?;
            let pass = stokes_group_membership(s, &g, &order);
            report.push(
                Some(crate::scalar::reduce_mod2(&self.data.singular[j])),
                "stokes-membership",
                pass,
                String::new(),
            );
        }
        // relation
        let rel = self.transport(&self.data.relation_word())?;
        report.push(None, "relation", rel.is_identity(), String::new());
        Ok(report)
    }

    /// Conjugate every generator by a graded automorphism.
    pub fn twisted_conjugate(&self, u: &Matrix) -> Result<StokesRep> {
        let g = self.data.standard_grading();
        if !g.is_graded_auto(u) {
            return Err(Error::Invalid("conjugator is not graded".into()));
        }
        let uinv = u.inverse()?;
        let mats = self
            .mats
            .iter()
            .map(|(k, m)| (k.clone(), &(u * m) * &uinv))
            .collect();
        Ok(StokesRep {
            data: self.data.clone(),
            mats,
        })
    }

    /// Wild Wilson loop: the trace of the block composition of the
    /// monodromy of `word` along a cycle in the complete quiver on the
    /// fibre labels.
    pub fn wilson_loop(&self, cycle: &[CoverPoint], word: &str) -> Result<crate::scalar::Gaussian> {
        if cycle.is_empty() {
            return Err(Error::Invalid("empty quiver cycle".into()));
        }
        for c in cycle {
            if !self.data.labels.contains(c) {
                return Err(Error::Shape(format!("cycle node {} not in the fibre", c.label())));
            }
        }
        let m = self.transport(word)?;
        let block = |to: &CoverPoint, from: &CoverPoint| -> Matrix {
            let rs = self.data.block_start(to);
            let cs = self.data.block_start(from);
            Matrix::from_fn(self.data.dims[to], self.data.dims[from], |i, j| {
                m[(rs + i, cs + j)].clone()
            })
        };
        // compose blocks M_{c2,c1}, M_{c3,c2}, ..., M_{c1,cp}
        let p = cycle.len();
        let mut acc = block(&cycle[1 % p], &cycle[0]);
        for t in 1..p {
            let next = &cycle[(t + 1) % p];
            acc = &block(next, &cycle[t]) * &acc;
        }
        acc.trace()
    }
}

/// Reads a Stokes representation off a Stokes graded local system on a
/// surface, with an optional graded framing of the standard fibre into
/// `(V_b, Γ_b)`; the default framing concatenates the piece bases.
pub fn rep_from_sgls(s: &StokesGraded, framing: Option<&Matrix>) -> Result<StokesRep> {
    if !s.core.boundary.surface_consistent() {
        return Err(Error::Invalid(
            "boundary monodromy does not match the handle generators".into(),
        ));
    }
    let sls = graded_to_stokes_ls(s)?;
    rep_from_sls(&sls, framing)
}

/// As `rep_from_sgls`, starting from the Stokes local system.
pub fn rep_from_sls(sls: &StokesLocalSys, framing: Option<&Matrix>) -> Result<StokesRep> {
    let data = WildSurfaceData::new(
        sls.boundary.genus,
        sls.boundary.class.clone(),
        sls.boundary.base_pi.clone(),
    )?;
    let n = data.rank();
    // default framing: piece bases as columns, in label order
    let phi = match framing {
        Some(m) => m.clone(),
        None => {
            let mut rows: Vec<Vec<crate::scalar::Gaussian>> = Vec::with_capacity(n);
            for l in &data.labels {
                let b = sls.grading.piece(l).expect("label piece").basis();
                for i in 0..b.n_rows() {
                    rows.push(b.row(i).to_vec());
                }
            }
            Matrix::from_rows(rows).transpose()
        }
    };
    // the framing must carry coordinate blocks onto the grading pieces
    let std_g = data.standard_grading();
    for l in &data.labels {
        let img = std_g.piece(l).expect("label").apply(&phi);
        if Some(&img) != sls.grading.piece(l) {
            return Err(Error::Invalid("framing is not graded".into()));
        }
    }
    let phi_inv = phi.inverse()?;
    let conj = |m: &Matrix| -> Matrix { &(&phi_inv * m) * &phi };
    let mut mats = BTreeMap::new();
    mats.insert("h".to_string(), conj(&sls.formal_monodromy));
    for (j, (_, sm)) in sls.stokes.iter().enumerate() {
        mats.insert(format!("S{}", j + 1), conj(sm));
    }
    for (i, (a, b)) in sls.boundary.handles.iter().enumerate() {
        mats.insert(format!("A{}", i + 1), conj(a));
        mats.insert(format!("B{}", i + 1), conj(b));
    }
    let rep = StokesRep { data, mats };
    let report = rep.validate()?;
    if !report.is_valid() {
        return Err(Error::Invalid("constructed representation fails validation".into()));
    }
    Ok(rep)
}

/// Rebuilds the Stokes graded local system of a representation on the
/// standard fibre (framing taken to be the identity).
pub fn sgls_from_rep(rep: &StokesRep) -> Result<StokesGraded> {
    let report = rep.validate()?;
    if !report.is_valid() {
        return Err(Error::Invalid("invalid representation".into()));
    }
    let n = rep.data.rank();
    let h = rep.generator("h")?.clone();
    let mut stokes = Vec::new();
    let mut rho = h.clone();
    for j in (0..rep.data.singular.len()).rev() {
        let s = rep.generator(&format!("S{}", j + 1))?.clone();
        rho = &rho * &s;
        stokes.push((rep.data.singular[j].clone(), s));
    }
    stokes.reverse();
    let mut handles = Vec::new();
    for i in 1..=rep.data.genus {
        handles.push((
            rep.generator(&format!("A{i}"))?.clone(),
            rep.generator(&format!("B{i}"))?.clone(),
        ));
    }
    let boundary = Boundary::new(
        rep.data.class.clone(),
        rep.data.base_pi.clone(),
        rho,
    )?
    .with_handles(handles);
    let _ = n;
    let sls = StokesLocalSys {
        boundary,
        grading: rep.data.standard_grading(),
        formal_monodromy: h,
        stokes,
    };
    stokes_ls_to_graded(&sls)
}

/// A deterministic basepoint avoiding every jump direction of a class.
pub fn generic_basepoint(class: &IrregularClass) -> Result<Rat> {
    let mut bad = class.stokes_directions()?;
    bad.extend(class.singular_directions()?);
    let bad = crate::scalar::sort_angles(bad);
    if bad.is_empty() {
        return Ok(rat(0, 1));
    }
    // midpoint of the last gap (wrapping to 2)
    let last = bad.last().unwrap();
    Ok((last + rat(2, 1)) / rat(2, 1))
}
