//! The Stokes local system presentation: a graded fibre at the basepoint,
//! the formal monodromy, and one Stokes automorphism per singular
//! direction, tied to the graded presentation by wild transport through
//! median gradings.

use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::flagged::{
    median_grading, stokes_group_membership, wild_monodromy, Grading,
};
use crate::irregular::CoverPoint;
use crate::linalg::Matrix;
use crate::scalar::{rat_to_string, reduce_mod2, Rat};

use super::{arrow_order_at, refine_graded_to_full, Boundary, StokesGraded, StructureCore};

/// A Stokes local system in cut presentation. The underlying graded local
/// system is stored by its fibre at the basepoint (`grading` of `V_b`) and
/// its formal monodromy; each singular direction carries its Stokes
/// automorphism, expressed at the basepoint along the positive path.
#[derive(Clone, Debug)]
pub struct StokesLocalSys {
    pub boundary: Boundary,
    /// Grading of `V_b`: the fibre of the graded local system at `b`.
    pub grading: Grading<CoverPoint>,
    /// Monodromy of the graded local system around the boundary.
    pub formal_monodromy: Matrix,
    /// Stokes automorphisms at the singular directions, in positive window
    /// order from the basepoint: `(window position, matrix)`.
    pub stokes: Vec<(Rat, Matrix)>,
}

impl StokesLocalSys {
    pub fn rank(&self) -> usize {
        self.boundary.rank()
    }

    /// Twist, membership and relation checks.
    pub fn validate(&self) -> Result<super::Report> {
        let mut report = super::Report::default();
        let class = &self.boundary.class;
        // twist: h maps each graded piece to the piece of the shifted label
        let mut ok = true;
        for l in class.fiber() {
            let img = self
                .grading
                .piece(&l)
                .expect("fibre label")
                .apply(&self.formal_monodromy);
            if Some(&img) != self.grading.piece(&class.cover_monodromy(&l)) {
                ok = false;
            }
        }
        report.push(None, "formal-monodromy-twist", ok, String::new());
        // memberships
        for (pos, s) in &self.stokes {
            let order = arrow_order_at(class, pos)?;
            let pass = stokes_group_membership(s, &self.grading, &order);
            report.push(
                Some(reduce_mod2(pos)),
                "stokes-automorphism-membership",
                pass,
                String::new(),
            );
        }
        // monodromy relation: the boundary monodromy factors as
        // h * S_r * ... * S_1, and the handles close it up on a surface
        let mut prod = self.formal_monodromy.clone();
        for (_, s) in self.stokes.iter().rev() {
            prod = &prod * s;
        }
        let pass = prod == self.boundary.monodromy;
        report.push(None, "boundary-factorization", pass, String::new());
        if self.boundary.genus > 0 || !self.boundary.handles.is_empty() {
            report.push(
                None,
                "surface-relation",
                self.boundary.surface_consistent(),
                String::new(),
            );
        }
        Ok(report)
    }
}

use alloc::string::String;

impl StokesGraded {
    /// The median grading of the two sides of a jump position.
    pub fn median_at(&self, pos: &Rat) -> Result<Grading<CoverPoint>> {
        let (left, right) = self.jump_sides_at(pos)?;
        median_grading(&left, &right)
    }
}

/// Builds the Stokes local system of a Stokes graded local system: the
/// graded fibre at the basepoint, the formal monodromy accumulated from the
/// wild transports and the cut, and the Stokes automorphisms transported
/// back to the basepoint.
pub fn graded_to_stokes_ls(s: &StokesGraded) -> Result<StokesLocalSys> {
    let refined = refine_graded_to_full(s)?;
    let class = refined.class().clone();
    let singular: Vec<Rat> = super::window_positions(
        &refined.core.window,
        &class.singular_directions()?,
    );
    let n = refined.rank();
    let mut transport = Matrix::identity(n); // P_t: product of wild transports so far
    let mut stokes = Vec::new();
    let m = refined.core.window.jumps.len();
    for idx in 0..m {
        let pos = refined.core.window.jumps[idx].clone();
        let (left, right) = refined.jump_sides_at(&pos)?;
        let u = wild_monodromy(&left, &right).map_err(|e| {
            Error::Invalid(format!(
                "wild transport at {}·π: {e}",
                rat_to_string(&reduce_mod2(&pos))
            ))
        })?;
        if singular.contains(&pos) {
            // Stokes automorphism at this direction, based at b:
            // inverse wild transport conjugated back along the positive path
            let pinv = transport.inverse()?;
            let s_at_b = &(&pinv * &u.inverse()?) * &transport;
            stokes.push((pos.clone(), s_at_b));
        } else if !u.is_identity() {
            return Err(Error::Invalid(format!(
                "grading jumps at the non-singular direction {}·π",
                rat_to_string(&reduce_mod2(&pos))
            )));
        }
        transport = &u * &transport;
    }
    let h = &refined.core.boundary.monodromy * &transport;
    let out = StokesLocalSys {
        boundary: refined.core.boundary.clone(),
        grading: refined.comps[0].clone(),
        formal_monodromy: h,
        stokes,
    };
    let report = out.validate()?;
    if !report.is_valid() {
        return Err(Error::Invalid(
            "constructed Stokes local system fails validation".into(),
        ));
    }
    Ok(out)
}

/// Reconstructs the Stokes graded local system from a Stokes local system:
/// gradings are the transported images of the graded fibre.
pub fn stokes_ls_to_graded(sls: &StokesLocalSys) -> Result<StokesGraded> {
    let report = sls.validate()?;
    if !report.is_valid() {
        return Err(Error::Invalid("invalid Stokes local system".into()));
    }
    let class = sls.boundary.class.clone();
    let dirs = class.singular_directions()?;
    let window = super::Window::new(sls.boundary.base_pi.clone(), dirs.clone())?;
    // expected positions must match the stored ones
    let expect: Vec<Rat> = super::window_positions(&window, &dirs);
    let got: Vec<Rat> = sls.stokes.iter().map(|(p, _)| p.clone()).collect();
    if expect != got {
        return Err(Error::Shape(
            "Stokes automorphisms do not enumerate the singular directions".into(),
        ));
    }
    let mut comps = Vec::with_capacity(window.n_components());
    let mut transport = Matrix::identity(sls.rank());
    comps.push(sls.grading.clone());
    for (t, (_, s)) in sls.stokes.iter().enumerate() {
        // P_{t+1} = P_t * S_{t+1}^{-1}
        transport = &transport * &s.inverse()?;
        if t + 1 < window.n_components() {
            comps.push(sls.grading.apply(&transport));
        }
    }
    let graded = StokesGraded {
        core: StructureCore {
            boundary: sls.boundary.clone(),
            window,
        },
        comps,
    };
    let rep = graded.validate()?;
    if !rep.is_valid() {
        return Err(Error::Invalid(
            "reconstructed grading fails the jump conditions".into(),
        ));
    }
    Ok(graded)
}
