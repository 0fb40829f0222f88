use serde::{Deserialize, Serialize};

use super::{CompiledTemplate, RegionTemplate, TemplateRow};
use crate::error::{Error, Result};
use crate::expr::{LinExpr, MiTerm};
use crate::infocalc::{induced_joint, Factor, FamilySpec, JointPmf};
use crate::netmodel::{enumerate_right_sided, input_name, output_name, DiscreteChannel, MaccmPlan, NetworkTopology};
use crate::ratepoly::RatePolytope;

/// Cap on the number of deterministic encoder maps per transmitter.
pub const MAX_ENCODER_MAPS: u64 = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum SuperpositionMode {
    All,
    Own,
}

pub fn rate_name(message: &str) -> String {
    format!("R{}", message.strip_prefix('M').unwrap_or(message))
}

pub(crate) fn rate_names(topo: &NetworkTopology) -> Vec<String> {
    topo.messages.iter().map(|m| rate_name(m)).collect()
}

fn rates_of(messages: &[String]) -> String {
    messages.iter().map(|m| rate_name(m)).collect::<Vec<_>>().join("+")
}

fn mi(a: &[String], b: &str, c: &[String]) -> LinExpr {
    LinExpr::sum([MiTerm::new(a, &[b.to_string()], c)])
}

fn subsets<T: Clone>(items: &[T]) -> Vec<(Vec<T>, Vec<T>)> {
    (1u64..(1 << items.len()))
        .map(|mask| {
            let (mut inside, mut outside) = (Vec::new(), Vec::new());
            for (b, it) in items.iter().enumerate() {
                if mask >> b & 1 == 1 {
                    inside.push(it.clone());
                } else {
                    outside.push(it.clone());
                }
            }
            (inside, outside)
        })
        .collect()
}

/// Family `prod P(M) prod 1{X_i = f_i(messages of i)}` with every message
/// variable over `msg_card` symbols.
pub(crate) fn message_family(channel: &DiscreteChannel, msg_card: usize) -> Result<FamilySpec> {
    let topo = &channel.topology;
    let mut cards: Vec<(String, usize)> = topo.messages.iter().map(|m| (m.clone(), msg_card)).collect();
    let mut factors: Vec<Factor> = topo.messages.iter().map(|m| Factor::marginal(&[m.as_str()])).collect();
    for (i, msgs) in topo.tx_messages.iter().enumerate() {
        let x = channel.input_alphabets[i];
        let domain = (msg_card as u64).checked_pow(msgs.len() as u32).unwrap_or(u64::MAX);
        let maps = u32::try_from(domain).ok().and_then(|d| (x as u64).checked_pow(d)).unwrap_or(u64::MAX);
        if maps > MAX_ENCODER_MAPS {
            return Err(Error::TooLarge(maps.min(usize::MAX as u64) as usize));
        }
        cards.push((input_name(i), x));
        let given: Vec<&str> = msgs.iter().map(String::as_str).collect();
        factors.push(Factor::new(&[input_name(i).as_str()], &given).deterministic());
    }
    Ok(FamilySpec::new(cards, factors))
}

/// Every receiver decodes every message: `R_O <= min_j I(O; Y_j | M - O)`.
pub(crate) fn han_rows(topo: &NetworkTopology) -> Vec<TemplateRow> {
    subsets(&topo.messages)
        .into_iter()
        .map(|(om, rest)| TemplateRow::new(&rates_of(&om), (0..topo.k2).map(|j| mi(&om, &output_name(j), &rest)).collect()))
        .collect()
}

/// Receiver `j` decodes every message it hears, conditioning on the rest of
/// what it hears.
pub(crate) fn compound_rows(topo: &NetworkTopology) -> Vec<TemplateRow> {
    let mut rows = Vec::new();
    for j in 0..topo.k2 {
        let heard = topo.connected_messages(j);
        for (om, rest) in subsets(&heard) {
            rows.push(TemplateRow::new(&rates_of(&om), vec![mi(&om, &output_name(j), &rest)]));
        }
    }
    rows
}

pub(crate) fn message_template(id: &str, channel: &DiscreteChannel, msg_card: usize, rows: Vec<TemplateRow>) -> Result<RegionTemplate> {
    Ok(RegionTemplate {
        id: id.to_string(),
        rates: rate_names(&channel.topology),
        eliminate: vec![],
        family: message_family(channel, msg_card)?,
        rows,
        notes: vec![format!("message alphabets {msg_card}, deterministic encoders")],
    })
}

/// Family of the superposition scheme: each group codeword is drawn given
/// the codewords of strictly larger sender sets, and each input given the
/// codewords of the groups it sends.
pub fn maccm_family(plan: &MaccmPlan, channel: &DiscreteChannel, aux_card: usize) -> FamilySpec {
    let mut cards = Vec::new();
    let mut factors = Vec::new();
    for g in &plan.groups {
        cards.push((g.label(), aux_card));
        let parents: Vec<String> = plan
            .groups
            .iter()
            .filter(|h| h.senders.len() > g.senders.len() && g.senders.iter().all(|s| h.senders.contains(s)))
            .map(|h| h.label())
            .collect();
        factors.push(Factor::new(&[g.label()], &parents));
    }
    for (i, &x) in channel.input_alphabets.iter().enumerate() {
        cards.push((input_name(i), x));
        let parents: Vec<String> = plan.groups.iter().filter(|g| g.senders.contains(&i)).map(|g| g.label()).collect();
        factors.push(Factor::new(&[input_name(i)], &parents));
    }
    FamilySpec::new(cards, factors)
}

/// Rows of the superposition region: for every receiver and every nonempty
/// right-sided set of connected groups, the group rates are bounded by the
/// information those codewords carry given the other connected codewords.
pub fn superposition_rows(plan: &MaccmPlan, topo: &NetworkTopology, mode: SuperpositionMode) -> Result<Vec<TemplateRow>> {
    let mut rows = Vec::new();
    for j in 0..topo.k2 {
        let conn = plan.connected_groups(topo, j);
        for set in enumerate_right_sided(plan, &conn) {
            if set.is_empty() {
                continue;
            }
            if !plan.is_right_sided(&set, &conn) {
                let labels: Vec<String> = set.iter().map(|&g| plan.groups[g].label()).collect();
                return Err(Error::NotRightSidedClosure(labels.join(",")));
            }
            if mode == SuperpositionMode::Own
                && !set.iter().any(|&g| plan.groups[g].messages.iter().any(|m| topo.rx_messages[j].contains(m)))
            {
                continue;
            }
            let messages: Vec<String> = set.iter().flat_map(|&g| plan.groups[g].messages.iter().cloned()).collect();
            let inside: Vec<String> = set.iter().map(|&g| plan.groups[g].label()).collect();
            let outside: Vec<String> = conn.iter().filter(|g| !set.contains(g)).map(|&g| plan.groups[g].label()).collect();
            let ordered = topo.in_message_order(messages);
            rows.push(TemplateRow::new(&rates_of(&ordered), vec![mi(&inside, &output_name(j), &outside)]));
        }
    }
    Ok(rows)
}

pub(crate) fn superposition_template(
    id: &str,
    plan: &MaccmPlan,
    channel: &DiscreteChannel,
    aux_card: usize,
    mode: SuperpositionMode,
) -> Result<RegionTemplate> {
    Ok(RegionTemplate {
        id: id.to_string(),
        rates: rate_names(&channel.topology),
        eliminate: vec![],
        family: maccm_family(plan, channel, aux_card),
        rows: superposition_rows(plan, &channel.topology, mode)?,
        notes: vec![format!("group codeword alphabets {aux_card}")],
    })
}

/// Superposition polytope at a pmf over the group codewords and inputs.
pub fn superposition_polytope(
    plan: &MaccmPlan,
    channel: &DiscreteChannel,
    pmf: &JointPmf,
    mode: SuperpositionMode,
) -> Result<RatePolytope> {
    let tpl = RegionTemplate {
        id: format!("superposition-{}", if mode == SuperpositionMode::All { "all" } else { "own" }),
        rates: rate_names(&channel.topology),
        eliminate: vec![],
        family: maccm_family(plan, channel, 2),
        rows: superposition_rows(plan, &channel.topology, mode)?,
        notes: vec![],
    };
    let joint = induced_joint(pmf, channel)?;
    CompiledTemplate::new(&tpl, &joint)?.polytope(&joint)
}
