use serde::Serialize;

use super::catalog::{crccm_cap_rows, i};
use super::{CompiledTemplate, RegionTemplate, TemplateRow};
use crate::error::{Error, Result};
use crate::expr::LinExpr;
use crate::infocalc::{induced_joint, Factor, FamilySpec, JointPmf};
use crate::netmodel::{DiscreteChannel, NetworkTopology};
use crate::ratepoly::{same_vertices, RatePolytope};

/// Vertex tolerance of the reduction match.
pub const CRCCM_MATCH_TOL: f64 = 1e-9;

/// Split-rate superposition rows with the common codeword `wb`, the private
/// codeword `vb` and the first transmitter's codeword `w1`.
pub(crate) fn crccm_sup_rows(w1: &str, wb: &str, vb: &str) -> Vec<TemplateRow> {
    vec![
        TemplateRow::new("R0+R20", vec![i(wb, "Y1", w1)]),
        TemplateRow::new("R0+R20+R1", vec![i(&format!("{wb},{w1}"), "Y1", "")]),
        TemplateRow::new("R22", vec![i(vb, "Y2", &format!("{wb},{w1}"))]),
        TemplateRow::new("R0+R2", vec![i(&format!("{vb},{wb}"), "Y2", w1)]),
        TemplateRow::new("R0+R1+R2", vec![i(&format!("{w1},{wb},{vb}"), "Y2", "")]),
        // R2 = R20 + R22
        TemplateRow { terms: vec![("R2".into(), 1.0), ("R20".into(), -1.0), ("R22".into(), -1.0)], bounds: vec![LinExpr::zero()] },
        TemplateRow { terms: vec![("R2".into(), -1.0), ("R20".into(), 1.0), ("R22".into(), 1.0)], bounds: vec![LinExpr::zero()] },
    ]
}

#[derive(Debug, Clone, Serialize)]
pub struct CrccmReduction {
    /// Split-rate system projected onto `(R0,R1,R2)`.
    pub reduced: RatePolytope,
    /// Capacity-form polytope built directly at the same pmf.
    pub direct: RatePolytope,
    pub matches: bool,
}

fn uxx_family(pmf: &JointPmf) -> Result<FamilySpec> {
    let mut cards = Vec::new();
    for name in ["U", "X1", "X2"] {
        cards.push((name.to_string(), pmf.card(name).map_err(|_| Error::FamilyViolation(format!("pmf lacks {name}")))?));
    }
    if pmf.vars().len() != 3 {
        return Err(Error::FamilyViolation(format!("expected a pmf over U,X1,X2, got {:?}", pmf.names())));
    }
    Ok(FamilySpec::new(cards, vec![Factor::marginal(&["U", "X1", "X2"])]))
}

fn check_layout(channel: &DiscreteChannel) -> Result<()> {
    let want = NetworkTopology::crccm();
    let t = &channel.topology;
    if t.tx_messages != want.tx_messages || t.rx_messages != want.rx_messages {
        return Err(Error::TopologyMismatch("expected the cognitive radio layout with a common message".into()));
    }
    Ok(())
}

fn build(id: &str, rates: &[&str], eliminate: &[&str], family: FamilySpec, rows: Vec<TemplateRow>, joint: &JointPmf) -> Result<RatePolytope> {
    let tpl = RegionTemplate {
        id: id.into(),
        rates: rates.iter().map(|s| s.to_string()).collect(),
        eliminate: eliminate.iter().map(|s| s.to_string()).collect(),
        family,
        rows,
        notes: vec![],
    };
    CompiledTemplate::new(&tpl, joint)?.polytope(joint)
}

/// Capacity-form polytope of the more-capable layout at a pmf over `U,X1,X2`.
pub fn crccm_capacity_polytope(channel: &DiscreteChannel, pmf: &JointPmf) -> Result<RatePolytope> {
    check_layout(channel)?;
    let family = uxx_family(pmf)?;
    let joint = induced_joint(pmf, channel)?;
    Ok(build("T-CRCCM-CAP", &["R0", "R1", "R2"], &[], family, crccm_cap_rows(), &joint)?.remove_redundant())
}

/// Substitutes the first transmitter's input, `U` and the cognitive input for
/// the three codewords of the split-rate system, eliminates the split rates
/// and compares with the capacity form.
pub fn crccm_fm_reduction(channel: &DiscreteChannel, pmf: &JointPmf) -> Result<CrccmReduction> {
    check_layout(channel)?;
    let family = uxx_family(pmf)?;
    let joint = induced_joint(pmf, channel)?;
    let reduced = build(
        "T-CRCCM-SUP",
        &["R0", "R1", "R2", "R20", "R22"],
        &["R20", "R22"],
        family.clone(),
        crccm_sup_rows("X1", "U", "X2"),
        &joint,
    )?
    .remove_redundant();
    let direct = build("T-CRCCM-CAP", &["R0", "R1", "R2"], &[], family, crccm_cap_rows(), &joint)?.remove_redundant();
    let matches = same_vertices(&reduced, &direct, CRCCM_MATCH_TOL)?;
    Ok(CrccmReduction { reduced, direct, matches })
}
