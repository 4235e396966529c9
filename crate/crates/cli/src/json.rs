//! Versioned JSON models for classes, the three structure presentations,
//! representations and reports, with exact `"p/q"` scalars.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use stokes_core::error::{Error, Result};
use stokes_core::flagged::{Filtration, Grading, Subspace};
use stokes_core::irregular::{Circle, Coeff, CoverPoint, ExponentialFactor, IrregularClass, Modulus, Term};
use stokes_core::linalg::Matrix;
use stokes_core::reps::{StokesRep, WildSurfaceData};
use stokes_core::scalar::{rat_from_str, rat_to_string, Gaussian, Rat};
use stokes_core::structures::{
    natural_filtered, natural_graded, Boundary, StokesFiltered, StokesGraded, StokesLocalSys,
    Window,
};

pub const VERSION: u32 = 1;

fn invalid(msg: &str) -> Error {
    Error::Invalid(msg.into())
}

/// An angle as a rational multiple of pi.
#[derive(Serialize, Deserialize, Clone)]
pub struct AngleJson {
    pub pi_multiple: String,
}

pub fn angle_json(r: &Rat) -> AngleJson {
    AngleJson {
        pi_multiple: rat_to_string(r),
    }
}

pub fn angle_from_json(a: &AngleJson) -> Result<Rat> {
    rat_from_str(&a.pi_multiple)
}

#[derive(Serialize, Deserialize, Clone)]
pub struct TermJson {
    pub k: String,
    pub modulus: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub sin2_factors: Vec<String>,
    pub arg_pi: String,
}

#[derive(Serialize, Deserialize, Clone)]
pub struct ClassEntryJson {
    pub multiplicity: u32,
    pub terms: Vec<TermJson>,
}

#[derive(Serialize, Deserialize, Clone)]
pub struct GaussianJson {
    pub re: String,
    pub im: String,
}

pub type MatrixJson = Vec<Vec<GaussianJson>>;

#[derive(Serialize, Deserialize, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct LabelJson {
    pub circle: usize,
    pub sheet: u32,
}

#[derive(Serialize, Deserialize, Clone)]
pub struct HandleJson {
    pub a: MatrixJson,
    pub b: MatrixJson,
}

#[derive(Serialize, Deserialize, Clone)]
pub struct FiltrationJson {
    /// Labels in increasing dominance order.
    pub order: Vec<LabelJson>,
    /// Cumulative step bases, row-major.
    pub steps: Vec<MatrixJson>,
}

#[derive(Serialize, Deserialize, Clone)]
pub struct PieceJson {
    pub index: LabelJson,
    pub basis: MatrixJson,
}

#[derive(Serialize, Deserialize, Clone)]
pub struct StokesAutJson {
    pub direction: AngleJson,
    pub matrix: MatrixJson,
}

/// Any of the file payloads, discriminated by the `kind` tag.
#[derive(Serialize, Deserialize, Clone)]
#[serde(tag = "kind")]
pub enum FileJson {
    #[serde(rename = "irregular-class")]
    Class {
        version: u32,
        entries: Vec<ClassEntryJson>,
    },
    #[serde(rename = "stokes-filtered")]
    Filtered {
        version: u32,
        class: Vec<ClassEntryJson>,
        base: AngleJson,
        monodromy: MatrixJson,
        genus: u32,
        #[serde(default, skip_serializing_if = "Vec::is_empty")]
        handles: Vec<HandleJson>,
        components: Vec<FiltrationJson>,
    },
    #[serde(rename = "stokes-graded")]
    Graded {
        version: u32,
        class: Vec<ClassEntryJson>,
        base: AngleJson,
        monodromy: MatrixJson,
        genus: u32,
        #[serde(default, skip_serializing_if = "Vec::is_empty")]
        handles: Vec<HandleJson>,
        components: Vec<Vec<PieceJson>>,
    },
    #[serde(rename = "stokes-local-system")]
    LocalSystem {
        version: u32,
        class: Vec<ClassEntryJson>,
        base: AngleJson,
        genus: u32,
        #[serde(default, skip_serializing_if = "Vec::is_empty")]
        handles: Vec<HandleJson>,
        grading: Vec<PieceJson>,
        formal_monodromy: MatrixJson,
        stokes: Vec<StokesAutJson>,
    },
    #[serde(rename = "stokes-representation")]
    Representation {
        version: u32,
        class: Vec<ClassEntryJson>,
        base: AngleJson,
        genus: u32,
        generators: BTreeMap<String, MatrixJson>,
    },
}

#[derive(Serialize, Clone)]
pub struct CheckJson {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub at: Option<AngleJson>,
    pub what: String,
    pub pass: bool,
    #[serde(skip_serializing_if = "String::is_empty")]
    pub detail: String,
}

#[derive(Serialize, Clone)]
pub struct ReportJson {
    pub kind: String,
    pub version: u32,
    pub valid: bool,
    pub checks: Vec<CheckJson>,
}

// conversions

pub fn gaussian_to_json(g: &Gaussian) -> GaussianJson {
    GaussianJson {
        re: rat_to_string(&g.re),
        im: rat_to_string(&g.im),
    }
}

pub fn gaussian_from_json(g: &GaussianJson) -> Result<Gaussian> {
    Ok(Gaussian::new(rat_from_str(&g.re)?, rat_from_str(&g.im)?))
}

pub fn matrix_to_json(m: &Matrix) -> MatrixJson {
    (0..m.n_rows())
        .map(|i| m.row(i).iter().map(gaussian_to_json).collect())
        .collect()
}

pub fn matrix_from_json(m: &MatrixJson) -> Result<Matrix> {
    if m.is_empty() {
        return Err(invalid("empty matrix"));
    }
    let rows = m
        .iter()
        .map(|r| r.iter().map(gaussian_from_json).collect::<Result<Vec<_>>>())
        .collect::<Result<Vec<_>>>()?;
    if rows.iter().any(|r| r.len() != rows[0].len()) {
        return Err(invalid("ragged matrix"));
    }
    Ok(Matrix::from_rows(rows))
}

fn subspace_to_json(s: &Subspace) -> MatrixJson {
    // a zero subspace serializes as a single zero row to keep the width
    if s.dim() == 0 {
        vec![vec![gaussian_to_json(&Gaussian::zero()); s.ambient()]]
    } else {
        matrix_to_json(s.basis())
    }
}

fn subspace_from_json(m: &MatrixJson) -> Result<Subspace> {
    Ok(Subspace::from_rows(matrix_from_json(m)?))
}

pub fn class_to_entries(class: &IrregularClass) -> Vec<ClassEntryJson> {
    class
        .circles()
        .iter()
        .zip(class.multiplicities())
        .map(|(c, m)| ClassEntryJson {
            multiplicity: *m,
            terms: c
                .rep()
                .terms()
                .iter()
                .map(|t| TermJson {
                    k: rat_to_string(&t.exponent),
                    modulus: rat_to_string(&t.coeff.modulus.q),
                    sin2_factors: t
                        .coeff
                        .modulus
                        .sin_factors
                        .iter()
                        .map(rat_to_string)
                        .collect(),
                    arg_pi: rat_to_string(&t.coeff.arg_pi),
                })
                .collect(),
        })
        .collect()
}

pub fn class_from_entries(entries: &[ClassEntryJson]) -> Result<IrregularClass> {
    let mut factors = Vec::new();
    for e in entries {
        let mut terms = Vec::new();
        for t in &e.terms {
            let mut modulus = Modulus::from_rat(rat_from_str(&t.modulus)?)?;
            for f in &t.sin2_factors {
                let q = rat_from_str(f)?;
                modulus = Modulus {
                    q: modulus.q.clone(),
                    sin_factors: {
                        let mut v = modulus.sin_factors.clone();
                        v.push(q);
                        v.sort();
                        v
                    },
                };
            }
            terms.push(Term {
                exponent: rat_from_str(&t.k)?,
                coeff: Coeff::new(modulus, rat_from_str(&t.arg_pi)?),
            });
        }
        factors.push((ExponentialFactor::new(terms)?, e.multiplicity));
    }
    IrregularClass::from_factors(factors)
}

fn label_to_json(l: &CoverPoint) -> LabelJson {
    LabelJson {
        circle: l.circle,
        sheet: l.sheet,
    }
}

fn label_from_json(class: &IrregularClass, l: &LabelJson) -> Result<CoverPoint> {
    let circles: &[Circle] = class.circles();
    if l.circle >= circles.len() || l.sheet >= circles[l.circle].ram() {
        return Err(invalid("label outside the cover fibre"));
    }
    Ok(CoverPoint {
        circle: l.circle,
        sheet: l.sheet,
    })
}

fn handles_to_json(b: &Boundary) -> Vec<HandleJson> {
    b.handles
        .iter()
        .map(|(a, bb)| HandleJson {
            a: matrix_to_json(a),
            b: matrix_to_json(bb),
        })
        .collect()
}

fn handles_from_json(hs: &[HandleJson]) -> Result<Vec<(Matrix, Matrix)>> {
    hs.iter()
        .map(|h| Ok((matrix_from_json(&h.a)?, matrix_from_json(&h.b)?)))
        .collect()
}

pub fn filtered_to_json(s: &StokesFiltered) -> Result<FileJson> {
    let natural = natural_filtered(s)?;
    Ok(FileJson::Filtered {
        version: VERSION,
        class: class_to_entries(natural.class()),
        base: angle_json(&natural.core.boundary.base_pi),
        monodromy: matrix_to_json(&natural.core.boundary.monodromy),
        genus: natural.core.boundary.genus,
        handles: handles_to_json(&natural.core.boundary),
        components: natural
            .comps
            .iter()
            .map(|f| FiltrationJson {
                order: f.order().iter().map(label_to_json).collect(),
                steps: f.steps().iter().map(subspace_to_json).collect(),
            })
            .collect(),
    })
}

pub fn graded_to_json(s: &StokesGraded) -> Result<FileJson> {
    let natural = natural_graded(s)?;
    Ok(FileJson::Graded {
        version: VERSION,
        class: class_to_entries(natural.class()),
        base: angle_json(&natural.core.boundary.base_pi),
        monodromy: matrix_to_json(&natural.core.boundary.monodromy),
        genus: natural.core.boundary.genus,
        handles: handles_to_json(&natural.core.boundary),
        components: natural
            .comps
            .iter()
            .map(|g| {
                g.pieces()
                    .iter()
                    .map(|(l, s)| PieceJson {
                        index: label_to_json(l),
                        basis: subspace_to_json(s),
                    })
                    .collect()
            })
            .collect(),
    })
}

pub fn sls_to_json(s: &StokesLocalSys) -> Result<FileJson> {
    Ok(FileJson::LocalSystem {
        version: VERSION,
        class: class_to_entries(&s.boundary.class),
        base: angle_json(&s.boundary.base_pi),
        genus: s.boundary.genus,
        handles: handles_to_json(&s.boundary),
        grading: s
            .grading
            .pieces()
            .iter()
            .map(|(l, sub)| PieceJson {
                index: label_to_json(l),
                basis: subspace_to_json(sub),
            })
            .collect(),
        formal_monodromy: matrix_to_json(&s.formal_monodromy),
        stokes: s
            .stokes
            .iter()
            .map(|(pos, m)| StokesAutJson {
                direction: angle_json(&stokes_core::scalar::reduce_mod2(pos)),
                matrix: matrix_to_json(m),
            })
            .collect(),
    })
}

pub fn rep_to_json(r: &StokesRep) -> FileJson {
    FileJson::Representation {
        version: VERSION,
        class: class_to_entries(&r.data.class),
        base: angle_json(&r.data.base_pi),
        genus: r.data.genus,
        generators: r
            .mats
            .iter()
            .map(|(k, v)| (k.clone(), matrix_to_json(v)))
            .collect(),
    }
}

pub fn filtered_from_json(f: &FileJson) -> Result<StokesFiltered> {
    let FileJson::Filtered {
        class,
        base,
        monodromy,
        handles,
        components,
        ..
    } = f
    else {
        return Err(invalid("expected a stokes-filtered file"));
    };
    let class = class_from_entries(class)?;
    let boundary = Boundary::new(class.clone(), angle_from_json(base)?, matrix_from_json(monodromy)?)?
        .with_handles(handles_from_json(handles)?);
    let dirs = class.stokes_directions()?;
    let mut comps = Vec::with_capacity(components.len());
    for c in components {
        let order = c
            .order
            .iter()
            .map(|l| label_from_json(&class, l))
            .collect::<Result<Vec<_>>>()?;
        let steps = c
            .steps
            .iter()
            .map(subspace_from_json)
            .collect::<Result<Vec<_>>>()?;
        comps.push(Filtration::new(order, steps)?);
    }
    StokesFiltered::new(boundary, dirs, comps)
}

pub fn graded_from_json(f: &FileJson) -> Result<StokesGraded> {
    let FileJson::Graded {
        class,
        base,
        monodromy,
        handles,
        components,
        ..
    } = f
    else {
        return Err(invalid("expected a stokes-graded file"));
    };
    let class = class_from_entries(class)?;
    let boundary = Boundary::new(class.clone(), angle_from_json(base)?, matrix_from_json(monodromy)?)?
        .with_handles(handles_from_json(handles)?);
    let dirs = class.singular_directions()?;
    let n = class.rank() as usize;
    let mut comps = Vec::with_capacity(components.len());
    for c in components {
        let mut pieces = BTreeMap::new();
        for p in c {
            let l = label_from_json(&class, &p.index)?;
            pieces.insert(l, subspace_from_json(&p.basis)?);
        }
        comps.push(Grading::new(n, pieces)?);
    }
    StokesGraded::new(boundary, dirs, comps)
}

pub fn sls_from_json(f: &FileJson) -> Result<StokesLocalSys> {
    let FileJson::LocalSystem {
        class,
        base,
        handles,
        grading,
        formal_monodromy,
        stokes,
        ..
    } = f
    else {
        return Err(invalid("expected a stokes-local-system file"));
    };
    let class = class_from_entries(class)?;
    let n = class.rank() as usize;
    let mut pieces = BTreeMap::new();
    for p in grading {
        pieces.insert(label_from_json(&class, &p.index)?, subspace_from_json(&p.basis)?);
    }
    let grading = Grading::new(n, pieces)?;
    let h = matrix_from_json(formal_monodromy)?;
    let handles = handles_from_json(handles)?;
    let base = angle_from_json(base)?;
    let window = Window::new(base.clone(), class.singular_directions()?)?;
    let mut auts = Vec::new();
    let mut rho = h.clone();
    for a in stokes {
        auts.push((
            window.window_pos(&angle_from_json(&a.direction)?),
            matrix_from_json(&a.matrix)?,
        ));
    }
    auts.sort_by(|a, b| a.0.cmp(&b.0));
    for (_, s) in auts.iter().rev() {
        rho = &rho * s;
    }
    let boundary = Boundary::new(class, base, rho)?.with_handles(handles);
    Ok(StokesLocalSys {
        boundary,
        grading,
        formal_monodromy: h,
        stokes: auts,
    })
}

pub fn rep_from_json(f: &FileJson) -> Result<StokesRep> {
    let FileJson::Representation {
        class,
        base,
        genus,
        generators,
        ..
    } = f
    else {
        return Err(invalid("expected a stokes-representation file"));
    };
    let class = class_from_entries(class)?;
    let data = WildSurfaceData::new(*genus, class, angle_from_json(base)?)?;
    let mats = generators
        .iter()
        .map(|(k, v)| Ok((k.clone(), matrix_from_json(v)?)))
        .collect::<Result<BTreeMap<_, _>>>()?;
    Ok(StokesRep { data, mats })
}

pub fn report_to_json(kind: &str, r: &stokes_core::structures::Report) -> ReportJson {
    ReportJson {
        kind: format!("{kind}-report"),
        version: VERSION,
        valid: r.is_valid(),
        checks: r
            .checks
            .iter()
            .map(|c| CheckJson {
                at: c.at.as_ref().map(angle_json),
                what: c.what.clone(),
                pass: c.pass,
                detail: c.detail.clone(),
            })
            .collect(),
    }
}

/// Parse a cycle given as comma-separated `c<i>s<j>` labels.
pub fn parse_cycle(class: &IrregularClass, s: &str) -> Result<Vec<CoverPoint>> {
    let mut out = Vec::new();
    for tok in s.split(',') {
        let tok = tok.trim();
        let rest = tok
            .strip_prefix('c')
            .ok_or_else(|| invalid("cycle node must look like c0s0"))?;
        let (c, sh) = rest
            .split_once('s')
            .ok_or_else(|| invalid("cycle node must look like c0s0"))?;
        let circle: usize = c.parse().map_err(|_| invalid("bad circle index"))?;
        let sheet: u32 = sh.parse().map_err(|_| invalid("bad sheet index"))?;
        out.push(label_from_json(
            class,
            &LabelJson { circle, sheet },
        )?);
    }
    Ok(out)
}
