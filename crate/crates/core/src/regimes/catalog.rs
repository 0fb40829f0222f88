use std::collections::BTreeSet;

use super::partition::{default_th11_plan, validate_th11_plan, Th11Plan};
use super::{BoundaryRegion, ConditionRow, ConditionSpec};
use crate::error::{Error, Result};
use crate::expr::{LinExpr, MiTerm};
use crate::infocalc::{Factor, FamilySpec};
use crate::netmodel::{input_name, output_name, DiscreteChannel, NetworkTopology};

/// Discrete condition ids, in catalog order.
pub const DISCRETE_IDS: &[&str] = &[
    "C-2CIC",
    "C-VSI",
    "C-ZIC",
    "C-CRC-13",
    "C-CRC-NEW",
    "C-CIC-LN",
    "C-CICCM-SI",
    "C-CIC-1SIDED",
    "C-BCCR-SI",
    "C-BCCR-LN",
    "C-BCCR-Z",
    "C-2RX-GEN",
    "C-2RX-CONN",
    "C-3CIC-A",
    "C-3CIC-B",
    "C-3CIC-CYC",
    "C-3CIC-ALMOST",
    "C-MANY2ONE",
    "C-KCIC",
    "C-GEN-TH11",
    "C-COR4",
    "C-MAIN",
    "C-CYCZ",
    "C-O2M",
    "C-MAIN2-WEAK",
    "C-CRCCM-MC",
    "C-BC-MC-SEQ",
];

#[derive(Debug, Clone, PartialEq)]
pub struct CatalogOptions {
    /// Cardinality of the auxiliary V in the less-noisy families.
    pub aux_card: usize,
    /// Cardinality of the auxiliary D in C-MAIN2-WEAK.
    pub d_card: usize,
    /// Receiver plans for C-GEN-TH11; `None` uses [`default_th11_plan`] for
    /// every receiver.
    pub th11: Option<Vec<Th11Plan>>,
}

impl Default for CatalogOptions {
    fn default() -> Self {
        CatalogOptions { aux_card: 2, d_card: 2, th11: None }
    }
}

fn names(idx: &[usize], f: fn(usize) -> String) -> String {
    idx.iter().map(|&i| f(i)).collect::<Vec<_>>().join(",")
}

fn xs(idx: &[usize]) -> String {
    names(idx, input_name)
}

fn ys(idx: &[usize]) -> String {
    names(idx, output_name)
}

fn mi(a: &str, b: &str, c: &str) -> LinExpr {
    LinExpr::from(MiTerm::of(a, b, c))
}

fn mismatch(id: &str, why: &str) -> Error {
    Error::TopologyMismatch(format!("{id}: {why}"))
}

fn complement(k: usize, set: &[usize]) -> Vec<usize> {
    (0..k).filter(|i| !set.contains(i)).collect()
}

struct Builder<'a> {
    ch: &'a DiscreteChannel,
    topo: &'a NetworkTopology,
    id: &'a str,
}

impl<'a> Builder<'a> {
    fn k1(&self) -> usize {
        self.topo.k1
    }

    fn k2(&self) -> usize {
        self.topo.k2
    }

    fn require(&self, ok: bool, why: &str) -> Result<()> {
        if ok {
            Ok(())
        } else {
            Err(mismatch(self.id, why))
        }
    }

    fn sizes(&self, k1: usize, k2: usize) -> Result<()> {
        self.require(self.k1() == k1 && self.k2() == k2, &format!("needs {k1} transmitters and {k2} receivers"))
    }

    fn connected_exactly(&self, j: usize, set: &[usize]) -> bool {
        (0..self.k1()).all(|i| self.topo.adjacency[j][i] == set.contains(&i))
    }

    /// Family with one joint factor per listed input group, a marginal for
    /// every other input, then the auxiliary factors.
    fn family(&self, groups: &[Vec<usize>], aux: Vec<(String, usize, Factor)>) -> FamilySpec {
        let mut cards: Vec<(String, usize)> =
            (0..self.k1()).map(|i| (input_name(i), self.ch.input_alphabets[i])).collect();
        let mut factors = Vec::new();
        let mut covered = BTreeSet::new();
        for g in groups.iter().filter(|g| !g.is_empty()) {
            let vars: Vec<String> = g.iter().map(|&i| input_name(i)).collect();
            factors.push(Factor::marginal(&vars));
            covered.extend(g.iter().copied());
        }
        for i in 0..self.k1() {
            if !covered.contains(&i) {
                factors.push(Factor::marginal(&[input_name(i)]));
            }
        }
        for (name, card, f) in aux {
            cards.push((name, card));
            factors.push(f);
        }
        FamilySpec::new(cards, factors)
    }

    fn row(&self, lhs: LinExpr, rhs: LinExpr, family: FamilySpec) -> ConditionRow {
        ConditionRow { label: format!("{lhs} <= {rhs}"), lhs, rhs, family, sample_family: None, boundary: None }
    }

    /// `I(X_a; Y_ya | X_c) <= I(X_a; Y_yb | X_c)` over `P_{X_a} prod P_{X_i in c}`.
    /// `None` when `a` is empty (the inequality is trivial).
    fn xs_row(&self, a: &[usize], ya: &[usize], yb: &[usize], c: &[usize]) -> Option<ConditionRow> {
        if a.is_empty() {
            return None;
        }
        let fam = self.family(&[a.to_vec()], vec![]);
        Some(self.row(mi(&xs(a), &ys(ya), &xs(c)), mi(&xs(a), &ys(yb), &xs(c)), fam))
    }

    /// Transmitters whose whole message set lies in `s`.
    fn within(&self, s: &BTreeSet<String>) -> Vec<usize> {
        let v: Vec<String> = s.iter().cloned().collect();
        self.topo.inputs_within(&v)
    }

    fn demanded(&self, j: usize) -> BTreeSet<String> {
        self.topo.rx_messages[j].iter().cloned().collect()
    }

    fn unconnected(&self, j: usize) -> BTreeSet<String> {
        self.topo.unconnected_messages(j).into_iter().collect()
    }

    /// Row of the generic form with `S` given as a message set: the inputs
    /// carried entirely inside `S` are conditioned on.
    fn s_row(&self, s: &BTreeSet<String>, ya: &[usize], yb: &[usize]) -> Option<ConditionRow> {
        let c = self.within(s);
        let a = complement(self.k1(), &c);
        self.xs_row(&a, ya, yb, &c)
    }

    /// Transmitter groups `G_j` = inputs whose messages are all demanded by
    /// receiver j; they must partition the inputs.
    fn receiver_groups(&self) -> Result<Vec<Vec<usize>>> {
        let groups: Vec<Vec<usize>> = (0..self.k2()).map(|j| self.within(&self.demanded(j))).collect();
        let mut seen = BTreeSet::new();
        for g in &groups {
            self.require(!g.is_empty(), "every receiver needs its own transmitter group")?;
            for &i in g {
                self.require(seen.insert(i), "transmitter groups overlap")?;
            }
        }
        self.require(seen.len() == self.k1(), "transmitter groups must cover all inputs")?;
        Ok(groups)
    }
}

fn region_208() -> BoundaryRegion {
    let r = |c: [f64; 3], a: &str, b: &str, g: &str| (c.to_vec(), mi(a, b, g));
    BoundaryRegion {
        rates: vec!["R1".into(), "R2".into(), "R3".into()],
        rows: vec![
            r([1.0, 0.0, 0.0], "X1", "Y1", "X2,X3"),
            r([0.0, 1.0, 0.0], "X2", "Y2", "X1,X3"),
            r([0.0, 0.0, 1.0], "X3", "Y3", "X1,X2"),
            r([1.0, 1.0, 0.0], "X1,X2", "Y1", "X3"),
            r([1.0, 1.0, 0.0], "X1,X2", "Y2", "X3"),
            r([0.0, 1.0, 1.0], "X2,X3", "Y2", "X1"),
            r([0.0, 1.0, 1.0], "X2,X3", "Y3", "X1"),
            r([1.0, 0.0, 1.0], "X1,X3", "Y3", "X2"),
            r([1.0, 1.0, 1.0], "X1,X2,X3", "Y2", ""),
            r([1.0, 1.0, 1.0], "X1,X2,X3", "Y3", ""),
        ],
    }
}

fn region_47() -> BoundaryRegion {
    BoundaryRegion {
        rates: vec!["R1".into(), "R2".into()],
        rows: vec![(vec![1.0, 0.0], mi("X1", "Y1", "X2")), (vec![1.0, 1.0], mi("X1,X2", "Y2", ""))],
    }
}

/// Builds the condition `id` for the topology and alphabets of `channel`.
pub fn discrete_condition(id: &str, channel: &DiscreteChannel, opts: &CatalogOptions) -> Result<ConditionSpec> {
    let b = Builder { ch: channel, topo: &channel.topology, id };
    let mut notes = Vec::new();
    let rows: Vec<ConditionRow> = match id {
        "C-2CIC" | "C-CICCM-SI" => {
            b.sizes(2, 2)?;
            [b.xs_row(&[0], &[0], &[1], &[1]), b.xs_row(&[1], &[1], &[0], &[0])].into_iter().flatten().collect()
        }
        "C-VSI" => {
            b.sizes(2, 2)?;
            let fam = b.family(&[], vec![]);
            vec![
                b.row(mi("X1", "Y1", "X2"), mi("X1", "Y2", ""), fam.clone()),
                b.row(mi("X2", "Y2", "X1"), mi("X2", "Y1", ""), fam),
            ]
        }
        "C-ZIC" | "C-CIC-1SIDED" => {
            b.sizes(2, 2)?;
            b.require(!channel.topology.adjacency[1][0], "receiver 2 must not hear transmitter 1")?;
            vec![b.row(mi("X2", "Y2", ""), mi("X2", "Y1", "X1"), b.family(&[], vec![]))]
        }
        "C-CRC-13" => {
            b.sizes(2, 2)?;
            let fam = b.family(&[vec![0, 1]], vec![]);
            vec![
                b.row(mi("X1,X2", "Y2", ""), mi("X1,X2", "Y1", ""), fam.clone()),
                b.row(mi("X1", "Y1", "X2"), mi("X1", "Y2", "X2"), fam),
            ]
        }
        "C-CRC-NEW" => {
            b.sizes(2, 2)?;
            let mut boundary = b.row(mi("X1,X2", "Y2", ""), mi("X1,X2", "Y1", ""), b.family(&[vec![0, 1]], vec![]));
            boundary.boundary = Some(region_47());
            notes.push("sum-rate comparison required only on support-maximizing pmfs of the decode-at-receiver-2 region".into());
            vec![b.row(mi("X1", "Y1", "X2"), mi("X1", "Y2", "X2"), b.family(&[], vec![])), boundary]
        }
        "C-CIC-LN" => {
            b.sizes(2, 2)?;
            let fam = b.family(&[], vec![]);
            let v = ("V".to_string(), opts.aux_card, Factor::marginal(&["V", "X1"]));
            let mut aux_fam = fam.clone();
            aux_fam.factors.retain(|f| f.vars != ["X1"]);
            aux_fam.cards.push((v.0, v.1));
            aux_fam.factors.insert(0, v.2);
            vec![
                b.row(mi("V", "Y2", "X2"), mi("V", "Y1", "X2"), aux_fam),
                b.row(mi("X2", "Y2", "X1"), mi("X2", "Y1", "X1"), fam),
            ]
        }
        "C-BCCR-SI" => {
            b.sizes(3, 2)?;
            vec![
                b.row(mi("X1,X3", "Y1", "X2"), mi("X1,X3", "Y2", "X2"), b.family(&[vec![0, 2]], vec![])),
                b.row(mi("X2,X3", "Y2", "X1"), mi("X2,X3", "Y1", "X1"), b.family(&[vec![1, 2]], vec![])),
            ]
        }
        "C-BCCR-LN" => {
            b.sizes(3, 2)?;
            let mut aux_fam = b.family(&[], vec![]);
            aux_fam.factors.retain(|f| f.vars != ["X1"] && f.vars != ["X3"]);
            aux_fam.cards.push(("V".into(), opts.aux_card));
            aux_fam.factors.insert(0, Factor::marginal(&["V", "X1", "X3"]));
            vec![
                b.row(mi("V", "Y2", "X2"), mi("V", "Y1", "X2"), aux_fam),
                b.row(mi("X2,X3", "Y2", "X1"), mi("X2,X3", "Y1", "X1"), b.family(&[vec![1, 2]], vec![])),
            ]
        }
        "C-BCCR-Z" => {
            b.sizes(3, 2)?;
            b.require(b.connected_exactly(1, &[1]), "receiver 2 must hear transmitter 2 only")?;
            vec![b.row(mi("X2", "Y2", ""), mi("X2,X3", "Y1", "X1"), b.family(&[vec![1, 2]], vec![]))]
        }
        "C-2RX-GEN" => {
            b.require(b.k2() == 2, "needs two receivers")?;
            [b.s_row(&b.demanded(1), &[0], &[1]), b.s_row(&b.demanded(0), &[1], &[0])].into_iter().flatten().collect()
        }
        "C-2RX-CONN" => {
            b.require(b.k2() == 2, "needs two receivers")?;
            let s2: BTreeSet<String> = b.demanded(1).union(&b.unconnected(1)).cloned().collect();
            let s1: BTreeSet<String> = b.demanded(0).union(&b.unconnected(0)).cloned().collect();
            [b.s_row(&s2, &[0], &[1]), b.s_row(&s1, &[1], &[0])].into_iter().flatten().collect()
        }
        "C-3CIC-A" => {
            b.sizes(3, 3)?;
            [
                b.xs_row(&[1, 2], &[2], &[0], &[0]),
                b.xs_row(&[0, 2], &[0], &[1], &[1]),
                b.xs_row(&[0, 1], &[1], &[2], &[2]),
            ]
            .into_iter()
            .flatten()
            .collect()
        }
        "C-3CIC-B" => {
            b.sizes(3, 3)?;
            [
                b.xs_row(&[2], &[2], &[1], &[0, 1]),
                b.xs_row(&[1, 2], &[1], &[0], &[0]),
                b.xs_row(&[0, 2], &[0], &[1], &[1]),
                b.xs_row(&[0, 1], &[1], &[2], &[2]),
            ]
            .into_iter()
            .flatten()
            .collect()
        }
        "C-3CIC-CYC" => {
            b.sizes(3, 3)?;
            b.require(
                b.connected_exactly(0, &[0, 1]) && b.connected_exactly(1, &[1, 2]) && b.connected_exactly(2, &[0, 2]),
                "needs the cyclic Z adjacency",
            )?;
            [
                b.xs_row(&[1], &[1], &[0], &[0, 2]),
                b.xs_row(&[2], &[2], &[1], &[0, 1]),
                b.xs_row(&[0], &[0], &[2], &[1, 2]),
            ]
            .into_iter()
            .flatten()
            .collect()
        }
        "C-3CIC-ALMOST" => {
            b.sizes(3, 3)?;
            let mut first = b.row(mi("X3", "Y3", "X1,X2"), mi("X3", "Y1", ""), b.family(&[], vec![]));
            first.boundary = Some(region_208());
            notes.push("first row required only on support-maximizing pmfs of the almost-decodable region".into());
            let mut rows = vec![first];
            rows.extend(
                [
                    b.xs_row(&[1], &[1], &[0], &[0, 2]),
                    b.xs_row(&[2], &[2], &[0], &[0, 1]),
                    b.xs_row(&[0, 2], &[0], &[1], &[1]),
                    b.xs_row(&[0, 1], &[1], &[2], &[2]),
                ]
                .into_iter()
                .flatten(),
            );
            rows
        }
        "C-MANY2ONE" => {
            b.sizes(3, 3)?;
            b.require(
                b.connected_exactly(1, &[1]) && b.connected_exactly(2, &[2]),
                "receivers 2 and 3 must hear only their own transmitters",
            )?;
            vec![b.row(mi("X2,X3", "Y2,Y3", ""), mi("X2,X3", "Y1", "X1"), b.family(&[vec![1, 2]], vec![]))]
        }
        "C-KCIC" => {
            let k = b.k1();
            b.require(k >= 2 && b.k2() == k, "needs K transmitters and K receivers")?;
            b.require(
                (0..k).all(|j| b.topo.tx_messages[j].len() == 1 && b.topo.tx_messages[j] == b.topo.rx_messages[j]),
                "needs one private message per transmitter-receiver pair",
            )?;
            (0..k)
                .filter_map(|j| {
                    let prev = (j + k - 1) % k;
                    b.xs_row(&complement(k, &[j]), &[prev], &[j], &[j])
                })
                .collect()
        }
        "C-MAIN" => {
            let k2 = b.k2();
            b.require(k2 >= 2, "needs at least two receivers")?;
            let groups = b.receiver_groups()?;
            (0..k2)
                .filter_map(|j| {
                    let prev = (j + k2 - 1) % k2;
                    b.xs_row(&complement(b.k1(), &groups[j]), &[prev], &[j], &groups[j])
                })
                .collect()
        }
        "C-CYCZ" => {
            let k2 = b.k2();
            b.require(k2 >= 2, "needs at least two receivers")?;
            let groups = b.receiver_groups()?;
            for j in 0..k2 {
                let mut hear = groups[j].clone();
                hear.extend(&groups[(j + 1) % k2]);
                b.require(b.connected_exactly(j, &hear), "needs the cyclic Z adjacency")?;
            }
            (0..k2)
                .filter_map(|j| {
                    let next = (j + 1) % k2;
                    b.xs_row(&groups[next], &[next], &[j], &complement(b.k1(), &groups[next]))
                })
                .collect()
        }
        "C-O2M" => {
            let k2 = b.k2();
            b.require(k2 >= 2, "needs at least two receivers")?;
            let groups = b.receiver_groups()?;
            b.require(b.connected_exactly(0, &groups[0]), "receiver 1 must hear only its own group")?;
            for j in 1..k2 {
                let mut hear = groups[0].clone();
                hear.extend(&groups[j]);
                b.require(b.connected_exactly(j, &hear), "receiver j must hear group 1 and its own group only")?;
            }
            let g1 = xs(&groups[0]);
            (1..k2)
                .map(|j| {
                    b.row(mi(&g1, "Y1", ""), mi(&g1, &output_name(j), &xs(&groups[j])), b.family(&[groups[0].clone()], vec![]))
                })
                .collect()
        }
        "C-GEN-TH11" => {
            let plans: Vec<Th11Plan> = match &opts.th11 {
                Some(p) => p.clone(),
                None => (0..b.k2()).map(|j| default_th11_plan(b.topo, j)).collect(),
            };
            let mut rows = Vec::new();
            for plan in &plans {
                validate_th11_plan(b.topo, plan)?;
                rows.extend(th11_rows(&b, plan));
            }
            notes.push(format!(
                "receiver plans: {}",
                plans.iter().map(|p| p.describe()).collect::<Vec<_>>().join("; ")
            ));
            rows
        }
        "C-COR4" => {
            let k2 = b.k2();
            let last = k2 - 1;
            b.require(k2 >= 2, "needs at least two receivers")?;
            b.require(b.topo.rx_messages[last] == b.topo.messages, "the last receiver must demand every message")?;
            (0..last)
                .filter_map(|j| {
                    let s: BTreeSet<String> = b.demanded(j).union(&b.unconnected(j)).cloned().collect();
                    b.s_row(&s, &[last], &[j])
                })
                .collect()
        }
        "C-MAIN2-WEAK" => {
            b.sizes(3, 2)?;
            let g1 = b.within(&b.demanded(0));
            let g2 = b.within(&b.demanded(1));
            b.require(g1 == vec![0, 1] && g2 == vec![2], "needs receiver 1 served by X1,X2 and receiver 2 by X3")?;
            let d = ("D".to_string(), opts.d_card);
            let grid = b.family(&[], vec![(d.0.clone(), d.1, Factor::new(&["D"], &["X1", "X2", "X3"]).deterministic())]);
            let sample = b.family(&[], vec![(d.0, d.1, Factor::new(&["D"], &["X1", "X2", "X3"]))]);
            notes.push(format!(
                "D gridded as a deterministic function of the inputs (|D|={}); random samples use stochastic D",
                opts.d_card
            ));
            let mut r1 = b.row(mi("X1,X2", "Y1", "X3,D"), mi("X1,X2", "Y2", "X3,D"), grid.clone());
            let mut r2 = b.row(mi("X3", "Y2", "X1,X2,D"), mi("X3", "Y1", "X1,X2,D"), grid);
            r1.sample_family = Some(sample.clone());
            r2.sample_family = Some(sample);
            vec![r1, r2]
        }
        "C-CRCCM-MC" => {
            b.sizes(2, 2)?;
            vec![b.row(mi("X1,X2", "Y1", ""), mi("X1,X2", "Y2", ""), b.family(&[vec![0, 1]], vec![]))]
        }
        "C-BC-MC-SEQ" => {
            b.require(b.k1() == 1 && b.k2() >= 2, "needs one transmitter and at least two receivers")?;
            let fam = b.family(&[], vec![]);
            (0..b.k2() - 1)
                .map(|j| b.row(mi("X1", &output_name(j + 1), ""), mi("X1", &output_name(j), ""), fam.clone()))
                .collect()
        }
        other => return Err(Error::CatalogUnknown(other.to_string())),
    };
    Ok(ConditionSpec {
        id: id.to_string(),
        k1: channel.topology.k1,
        k2: channel.topology.k2,
        input_alphabets: channel.input_alphabets.clone(),
        rows,
        notes,
    })
}

/// Rows for one receiver plan: consecutive stages compared under the
/// messages of later stages, then the last stage against the receiver.
fn th11_rows(b: &Builder<'_>, plan: &Th11Plan) -> Vec<ConditionRow> {
    let j = plan.receiver;
    let base: BTreeSet<String> = b.demanded(j).union(&b.unconnected(j)).cloned().collect();
    let lam = plan.stages.len();
    let mut rows = Vec::new();
    for l in 0..lam.saturating_sub(1) {
        let mut s = base.clone();
        for st in &plan.stages[l + 1..] {
            s.extend(st.messages.iter().cloned());
        }
        rows.extend(b.s_row(&s, &plan.stages[l].receivers, &plan.stages[l + 1].receivers));
    }
    if let Some(last) = plan.stages.last() {
        rows.extend(b.s_row(&base, &last.receivers, &[j]));
    }
    rows
}
