use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::netmodel::{output_name, NetworkTopology};

/// Upper bound on the number of plans [`enumerate_th11_plans`] will produce.
pub const MAX_TH11_PLANS: usize = 100_000;
const MAX_RESIDUAL: usize = 6;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Th11Stage {
    /// Receivers (0-based) whose outputs are pooled at this stage.
    pub receivers: Vec<usize>,
    pub messages: Vec<String>,
}

/// Ordered decoding stages for one receiver's interfering messages.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Th11Plan {
    pub receiver: usize,
    pub stages: Vec<Th11Stage>,
}

impl Th11Plan {
    pub fn describe(&self) -> String {
        let stages: Vec<String> = self
            .stages
            .iter()
            .map(|s| {
                let ys: Vec<String> = s.receivers.iter().map(|&r| output_name(r)).collect();
                format!("[{}]<-{{{}}}", ys.join(","), s.messages.join(","))
            })
            .collect();
        format!("{}: {}", output_name(self.receiver), if stages.is_empty() { "-".into() } else { stages.join(" ") })
    }
}

/// Messages heard by receiver `j` that it does not demand.
pub fn residual_messages(topo: &NetworkTopology, j: usize) -> Vec<String> {
    let own: BTreeSet<&String> = topo.rx_messages[j].iter().collect();
    topo.in_message_order(
        topo.connected_messages(j).into_iter().filter(|m| !own.contains(m)).collect::<Vec<_>>(),
    )
}

fn invalid(why: String) -> Error {
    Error::InvalidTopology(why)
}

pub fn validate_th11_plan(topo: &NetworkTopology, plan: &Th11Plan) -> Result<()> {
    let j = plan.receiver;
    if j >= topo.k2 {
        return Err(invalid(format!("plan receiver {} out of range", j + 1)));
    }
    let residual: BTreeSet<String> = residual_messages(topo, j).into_iter().collect();
    let mut seen = BTreeSet::new();
    for st in &plan.stages {
        if st.receivers.is_empty() || st.messages.is_empty() {
            return Err(invalid(format!("{}: empty stage", plan.describe())));
        }
        if st.receivers.iter().any(|&r| r == j || r >= topo.k2) {
            return Err(invalid(format!("{}: stage receivers must be other receivers", plan.describe())));
        }
        let demanded: BTreeSet<&String> = st.receivers.iter().flat_map(|&r| topo.rx_messages[r].iter()).collect();
        for m in &st.messages {
            if !residual.contains(m) || !seen.insert(m.clone()) {
                return Err(invalid(format!("{}: stages must partition the interfering messages", plan.describe())));
            }
            if !demanded.contains(m) {
                return Err(invalid(format!("{}: {m} is not demanded by its stage receivers", plan.describe())));
            }
        }
    }
    if seen != residual {
        return Err(invalid(format!("{}: stages must partition the interfering messages", plan.describe())));
    }
    Ok(())
}

/// Groups each interfering message by its first demanding receiver, stages
/// ordered by receiver index.
pub fn default_th11_plan(topo: &NetworkTopology, j: usize) -> Th11Plan {
    let mut stages: Vec<Th11Stage> = Vec::new();
    for m in residual_messages(topo, j) {
        let Some(r) = (0..topo.k2).find(|&r| r != j && topo.rx_messages[r].contains(&m)) else {
            continue;
        };
        match stages.iter_mut().find(|s| s.receivers == [r]) {
            Some(s) => s.messages.push(m),
            None => stages.push(Th11Stage { receivers: vec![r], messages: vec![m] }),
        }
    }
    stages.sort_by_key(|s| s.receivers[0]);
    Th11Plan { receiver: j, stages }
}

fn ordered_partitions(items: &[String]) -> Vec<Vec<Vec<String>>> {
    if items.is_empty() {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    let n = items.len();
    // choose the first block as a nonempty subset, recurse on the rest
    for mask in 1u32..(1 << n) {
        let block: Vec<String> = (0..n).filter(|b| mask >> b & 1 == 1).map(|b| items[b].clone()).collect();
        let rest: Vec<String> = (0..n).filter(|b| mask >> b & 1 == 0).map(|b| items[b].clone()).collect();
        for mut tail in ordered_partitions(&rest) {
            tail.insert(0, block.clone());
            out.push(tail);
        }
    }
    out
}

/// Every valid plan for receiver `j`: ordered partitions of its interfering
/// messages, each block paired with every receiver subset that demands it.
pub fn enumerate_th11_plans(topo: &NetworkTopology, j: usize) -> Result<Vec<Th11Plan>> {
    if j >= topo.k2 {
        return Err(invalid(format!("receiver {} out of range", j + 1)));
    }
    let residual = residual_messages(topo, j);
    if residual.len() > MAX_RESIDUAL {
        return Err(Error::TooLarge(residual.len()));
    }
    let others: Vec<usize> = (0..topo.k2).filter(|&r| r != j).collect();
    if others.len() > 16 {
        return Err(Error::TooLarge(others.len()));
    }
    let covering = |block: &[String]| -> Vec<Vec<usize>> {
        (1u32..(1 << others.len()))
            .map(|mask| (0..others.len()).filter(|b| mask >> b & 1 == 1).map(|b| others[b]).collect::<Vec<_>>())
            .filter(|rs| block.iter().all(|m| rs.iter().any(|&r| topo.rx_messages[r].contains(m))))
            .collect()
    };
    let mut plans = Vec::new();
    for part in ordered_partitions(&residual) {
        let choices: Vec<Vec<Vec<usize>>> = part.iter().map(|b| covering(b)).collect();
        if choices.iter().any(|c| c.is_empty()) {
            continue;
        }
        let mut idx = vec![0usize; part.len()];
        loop {
            let stages = part
                .iter()
                .zip(&idx)
                .zip(&choices)
                .map(|((msgs, &k), c)| Th11Stage { receivers: c[k].clone(), messages: msgs.clone() })
                .collect();
            plans.push(Th11Plan { receiver: j, stages });
            if plans.len() > MAX_TH11_PLANS {
                return Err(Error::TooLarge(plans.len()));
            }
            let mut pos = 0;
            loop {
                if pos == idx.len() {
                    break;
                }
                idx[pos] += 1;
                if idx[pos] < choices[pos].len() {
                    break;
                }
                idx[pos] = 0;
                pos += 1;
            }
            if pos == idx.len() {
                break;
            }
        }
    }
    Ok(plans)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn three_user_default_plans_validate() {
        let t = NetworkTopology::k_user_cic(3, None).unwrap();
        for j in 0..3 {
            let p = default_th11_plan(&t, j);
            validate_th11_plan(&t, &p).unwrap();
            assert_eq!(p.stages.len(), 2);
        }
    }

    #[test]
    fn enumeration_counts() {
        let t = NetworkTopology::k_user_cic(3, None).unwrap();
        // {M2}{M3} and {M3}{M2} with two covering receiver sets per block,
        // plus the single block {M2,M3} covered only by both receivers
        let plans = enumerate_th11_plans(&t, 0).unwrap();
        assert_eq!(plans.len(), 9);
        for p in &plans {
            validate_th11_plan(&t, p).unwrap();
        }
    }

    #[test]
    fn bad_plan_rejected() {
        let t = NetworkTopology::k_user_cic(3, None).unwrap();
        let p = Th11Plan { receiver: 0, stages: vec![Th11Stage { receivers: vec![1], messages: vec!["M2".into()] }] };
        assert!(validate_th11_plan(&t, &p).is_err());
    }
}
