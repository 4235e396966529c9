//! Validation of the jump conditions of the filtered and graded
//! presentations: a common splitting across each Stokes direction, and
//! wild monodromy inside the Stokes group across each singular direction.

use alloc::format;
use alloc::vec::Vec;

use crate::error::Result;
use crate::flagged::{
    check_grading_pair, common_splitting, QuiverOrder, SplittingOutcome,
};
use crate::irregular::CoverPoint;
use crate::scalar::{rat_to_string, reduce_mod2, Rat};

use super::{Report, StokesFiltered, StokesGraded};

impl StokesFiltered {
    /// Full validation: structural checks per component, then the jump
    /// condition (existence of a common splitting) at every jump
    /// direction, including the wrap across the cut.
    pub fn validate(&self) -> Result<Report> {
        let mut report = Report::default();
        self.structural_checks(&mut report)?;
        for idx in 0..self.core.window.jumps.len() {
            let pos = self.core.window.jumps[idx].clone();
            let dir = reduce_mod2(&pos);
            let (left, right) = self.jump_sides_at(&pos)?;
            match common_splitting(&left, &right) {
                Ok(SplittingOutcome::Split(_)) => {
                    report.push(Some(dir), "jump-splitting", true, String::new())
                }
                Ok(SplittingOutcome::Certificate(i, j, m)) => report.push(
                    Some(dir),
                    "jump-splitting",
                    false,
                    format!(
                        "relative position m({}, {}) = {m} forbids a common splitting",
                        i.label(),
                        j.label()
                    ),
                ),
                Err(e) => report.push(Some(dir), "jump-splitting", false, format!("{e}")),
            }
        }
        Ok(report)
    }

    fn structural_checks(&self, report: &mut Report) -> Result<()> {
        let class = self.class();
        let fiber = class.fiber();
        let theta: alloc::collections::BTreeMap<CoverPoint, usize> = fiber
            .iter()
            .map(|p| (*p, class.mult_of(p) as usize))
            .collect();
        for (t, f) in self.comps.iter().enumerate() {
            let mid = self.core.window.component_midpoint(t);
            let mut sorted: Vec<CoverPoint> = f.order().to_vec();
            sorted.sort();
            if sorted != fiber {
                report.push(
                    None,
                    "component-labels",
                    false,
                    format!("component {t} does not index the cover fibre"),
                );
                continue;
            }
            match class.dominance_order_at(&mid) {
                Ok(order) => {
                    let pass = order == f.order();
                    report.push(
                        Some(reduce_mod2(&mid)),
                        "component-order",
                        pass,
                        if pass {
                            String::new()
                        } else {
                            format!("component {t} order does not match dominance")
                        },
                    );
                }
                Err(e) => report.push(
                    Some(reduce_mod2(&mid)),
                    "component-order",
                    false,
                    format!("component {t}: {e}"),
                ),
            }
            let dims: alloc::collections::BTreeMap<CoverPoint, usize> = f.dims();
            let pass = dims == theta;
            report.push(
                None,
                "component-dimensions",
                pass,
                if pass {
                    String::new()
                } else {
                    format!("component {t} dimension vector differs from the class")
                },
            );
        }
        Ok(())
    }
}

use alloc::string::String;

impl StokesGraded {
    /// Full validation: structural checks, then across every jump the wild
    /// monodromy must exist and lie in the Stokes group of the arrows
    /// there (at non-singular refinement points this forces equality).
    pub fn validate(&self) -> Result<Report> {
        let mut report = Report::default();
        self.structural_checks(&mut report)?;
        let class = self.class();
        for idx in 0..self.core.window.jumps.len() {
            let pos = self.core.window.jumps[idx].clone();
            let dir = reduce_mod2(&pos);
            let (left, right) = self.jump_sides_at(&pos)?;
            let arrows = class.stokes_arrows_at(&pos)?;
            let nodes: Vec<CoverPoint> = class.fiber();
            let rels: Vec<(CoverPoint, CoverPoint)> = arrows
                .iter()
                .map(|a| (a.target, a.source))
                .collect();
            let order = QuiverOrder::new(nodes, rels)?;
            match check_grading_pair(&left, &right, &order) {
                Some(_) => report.push(Some(dir), "jump-stokes-group", true, String::new()),
                None => {
                    let detail = format!(
                        "gradings across {}·π are not related by the Stokes group",
                        rat_to_string(&dir)
                    );
                    report.push(Some(dir), "jump-stokes-group", false, detail);
                }
            }
        }
        Ok(report)
    }

    fn structural_checks(&self, report: &mut Report) -> Result<()> {
        let class = self.class();
        let fiber = class.fiber();
        let theta: alloc::collections::BTreeMap<CoverPoint, usize> = fiber
            .iter()
            .map(|p| (*p, class.mult_of(p) as usize))
            .collect();
        for (t, g) in self.comps.iter().enumerate() {
            let labels: Vec<CoverPoint> = g.labels().copied().collect();
            if labels != fiber {
                report.push(
                    None,
                    "component-labels",
                    false,
                    format!("component {t} does not index the cover fibre"),
                );
                continue;
            }
            let pass = g.dims() == theta;
            report.push(
                None,
                "component-dimensions",
                pass,
                if pass {
                    String::new()
                } else {
                    format!("component {t} dimension vector differs from the class")
                },
            );
        }
        Ok(())
    }
}

/// Quiver order of the Stokes arrows at an unreduced position.
pub fn arrow_order_at(
    class: &crate::irregular::IrregularClass,
    pos: &Rat,
) -> Result<QuiverOrder<CoverPoint>> {
    let arrows = class.stokes_arrows_at(pos)?;
    QuiverOrder::new(
        class.fiber(),
        arrows.iter().map(|a| (a.target, a.source)).collect(),
    )
}
