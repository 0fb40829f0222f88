//! Single-hop interference network topologies, discrete and Gaussian channel
//! objects, connectivity detection and the MACCM message plan.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Marginal differences at or below this are treated as "no dependence".
pub const CONNECTIVITY_TOL: f64 = 1e-12;
/// Differences in `(AMBIGUITY_LOW, AMBIGUITY_HIGH]` are too close to call.
pub const AMBIGUITY_LOW: f64 = 1e-13;
pub const AMBIGUITY_HIGH: f64 = 1e-11;
/// Default cap on any terminal's alphabet.
pub const DEFAULT_ALPHABET_CAP: usize = 6;

/// Name of transmitter `i` (0-based) as a pmf variable.
pub fn input_name(i: usize) -> String {
    format!("X{}", i + 1)
}

/// Name of receiver `j` (0-based) as a pmf variable.
pub fn output_name(j: usize) -> String {
    format!("Y{}", j + 1)
}

/// Orders identifiers like `M2 < M10` by splitting a trailing number off.
pub fn natural_key(s: &str) -> (String, u64, String) {
    let digits: String = s.chars().rev().take_while(|c| c.is_ascii_digit()).collect::<Vec<_>>().into_iter().rev().collect();
    let stem = s[..s.len() - digits.len()].to_string();
    let num = digits.parse().unwrap_or(0);
    (stem, num, s.to_string())
}

pub fn sort_natural(v: &mut [String]) {
    v.sort_by_key(|a| natural_key(a));
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NetworkTopology {
    pub k1: usize,
    pub k2: usize,
    pub messages: Vec<String>,
    pub tx_messages: Vec<Vec<String>>,
    pub rx_messages: Vec<Vec<String>>,
    /// `adjacency[j][i]`: transmitter i reaches receiver j.
    pub adjacency: Vec<Vec<bool>>,
}

fn to_sorted(v: &[&str]) -> Vec<String> {
    let mut out: Vec<String> = v.iter().map(|s| s.to_string()).collect();
    sort_natural(&mut out);
    out.dedup();
    out
}

pub fn build_topology(
    k1: usize,
    k2: usize,
    tx_messages: Vec<Vec<String>>,
    rx_messages: Vec<Vec<String>>,
    adjacency: Vec<Vec<bool>>,
) -> Result<NetworkTopology> {
    if k1 == 0 || k2 == 0 {
        return Err(Error::InvalidTopology("need at least one transmitter and one receiver".into()));
    }
    if tx_messages.len() != k1 || rx_messages.len() != k2 {
        return Err(Error::InvalidTopology("message assignment lengths must equal k1 and k2".into()));
    }
    if adjacency.len() != k2 || adjacency.iter().any(|r| r.len() != k1) {
        return Err(Error::InvalidTopology("adjacency must be k2 x k1".into()));
    }
    let norm = |v: Vec<Vec<String>>| -> Vec<Vec<String>> {
        v.into_iter()
            .map(|mut s| {
                sort_natural(&mut s);
                s.dedup();
                s
            })
            .collect()
    };
    let tx_messages = norm(tx_messages);
    let rx_messages = norm(rx_messages);
    let sent: BTreeSet<&String> = tx_messages.iter().flatten().collect();
    let demanded: BTreeSet<&String> = rx_messages.iter().flatten().collect();
    for m in sent.symmetric_difference(&demanded) {
        return Err(Error::OrphanMessage((*m).clone()));
    }
    let mut messages: Vec<String> = sent.into_iter().cloned().collect();
    sort_natural(&mut messages);
    for (j, rx) in rx_messages.iter().enumerate() {
        for m in rx {
            let carried = (0..k1).any(|i| adjacency[j][i] && tx_messages[i].contains(m));
            if !carried {
                return Err(Error::CoverageViolation { receiver: j + 1, message: m.clone() });
            }
        }
    }
    Ok(NetworkTopology { k1, k2, messages, tx_messages, rx_messages, adjacency })
}

impl NetworkTopology {
    pub fn from_lists(tx: &[&[&str]], rx: &[&[&str]], adjacency: Vec<Vec<bool>>) -> Result<Self> {
        build_topology(
            tx.len(),
            rx.len(),
            tx.iter().map(|s| to_sorted(s)).collect(),
            rx.iter().map(|s| to_sorted(s)).collect(),
            adjacency,
        )
    }

    /// K-user classical interference channel with the given adjacency
    /// (`None` = fully connected).
    pub fn k_user_cic(k: usize, adjacency: Option<Vec<Vec<bool>>>) -> Result<Self> {
        let names: Vec<String> = (1..=k).map(|i| format!("M{i}")).collect();
        let sets: Vec<Vec<String>> = names.iter().map(|m| vec![m.clone()]).collect();
        build_topology(k, k, sets.clone(), sets, adjacency.unwrap_or_else(|| vec![vec![true; k]; k]))
    }

    pub fn two_user_cic() -> Self {
        Self::k_user_cic(2, None).expect("valid")
    }

    /// Two-user interference channel in which both transmitters also carry a
    /// common message M0 demanded by both receivers.
    pub fn two_user_cic_common() -> Self {
        Self::from_lists(&[&["M0", "M1"], &["M0", "M2"]], &[&["M0", "M1"], &["M0", "M2"]], vec![vec![true; 2]; 2])
            .expect("valid")
    }

    /// Cognitive radio channel: transmitter 2 knows both messages.
    pub fn crc() -> Self {
        Self::from_lists(&[&["M1"], &["M1", "M2"]], &[&["M1"], &["M2"]], vec![vec![true; 2]; 2]).expect("valid")
    }

    /// Cognitive radio channel with a common message: transmitter 1 carries M1,
    /// the cognitive transmitter 2 carries M0, M1 and M2.
    pub fn crccm() -> Self {
        Self::from_lists(&[&["M1"], &["M0", "M1", "M2"]], &[&["M0", "M1"], &["M0", "M2"]], vec![vec![true; 2]; 2])
            .expect("valid")
    }

    /// Broadcast channel with two cognitive relays; transmitter 3 is the
    /// broadcasting node.
    pub fn bccr(common: bool) -> Self {
        if common {
            Self::from_lists(&[&["M1"], &["M2"], &["M0", "M1", "M2"]], &[&["M0", "M1"], &["M0", "M2"]], vec![vec![true; 3]; 2])
                .expect("valid")
        } else {
            Self::from_lists(&[&["M1"], &["M2"], &["M1", "M2"]], &[&["M1"], &["M2"]], vec![vec![true; 3]; 2]).expect("valid")
        }
    }

    pub fn tx_index(&self, i: usize) -> Result<()> {
        if i < self.k1 {
            Ok(())
        } else {
            Err(Error::InvalidTopology(format!("transmitter {} out of range", i + 1)))
        }
    }

    /// Transmitters reaching receiver `j`.
    pub fn connected_tx(&self, j: usize) -> Vec<usize> {
        (0..self.k1).filter(|&i| self.adjacency[j][i]).collect()
    }

    /// Messages carried by some transmitter connected to receiver `j`.
    pub fn connected_messages(&self, j: usize) -> Vec<String> {
        let mut out: BTreeSet<String> = BTreeSet::new();
        for i in self.connected_tx(j) {
            out.extend(self.tx_messages[i].iter().cloned());
        }
        self.in_message_order(out)
    }

    /// Messages at unconnected transmitters that no connected transmitter
    /// carries.
    pub fn unconnected_messages(&self, j: usize) -> Vec<String> {
        let connected: BTreeSet<String> = self.connected_messages(j).into_iter().collect();
        let mut out = BTreeSet::new();
        for i in 0..self.k1 {
            if !self.adjacency[j][i] {
                for m in &self.tx_messages[i] {
                    if !connected.contains(m) {
                        out.insert(m.clone());
                    }
                }
            }
        }
        self.in_message_order(out)
    }

    pub fn all_unconnected_messages(&self) -> Vec<Vec<String>> {
        (0..self.k2).map(|j| self.unconnected_messages(j)).collect()
    }

    pub fn in_message_order<I: IntoIterator<Item = String>>(&self, set: I) -> Vec<String> {
        let set: BTreeSet<String> = set.into_iter().collect();
        self.messages.iter().filter(|m| set.contains(*m)).cloned().collect()
    }

    /// Transmitters carrying message `m`.
    pub fn senders(&self, m: &str) -> Vec<usize> {
        (0..self.k1).filter(|&i| self.tx_messages[i].iter().any(|x| x == m)).collect()
    }

    /// Receivers demanding message `m`.
    pub fn demanders(&self, m: &str) -> Vec<usize> {
        (0..self.k2).filter(|&j| self.rx_messages[j].iter().any(|x| x == m)).collect()
    }

    /// Transmitters whose whole message set lies inside `omega`.
    pub fn inputs_within(&self, omega: &[String]) -> Vec<usize> {
        (0..self.k1)
            .filter(|&i| self.tx_messages[i].iter().all(|m| omega.contains(m)))
            .collect()
    }

    pub fn input_names(&self) -> Vec<String> {
        (0..self.k1).map(input_name).collect()
    }

    pub fn output_names(&self) -> Vec<String> {
        (0..self.k2).map(output_name).collect()
    }
}

/// Discrete memoryless network law `P(y1..yk2 | x1..xk1)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscreteChannel {
    pub topology: NetworkTopology,
    pub input_alphabets: Vec<usize>,
    pub output_alphabets: Vec<usize>,
    /// Row-major: row = input tuple (X1 most significant), column = output tuple.
    pub tensor: Vec<f64>,
}

pub fn mixed_radix_decode(mut flat: usize, radices: &[usize]) -> Vec<usize> {
    let mut d = vec![0; radices.len()];
    for i in (0..radices.len()).rev() {
        d[i] = flat % radices[i];
        flat /= radices[i];
    }
    d
}

pub fn mixed_radix_encode(digits: &[usize], radices: &[usize]) -> usize {
    digits.iter().zip(radices).fold(0, |acc, (d, r)| acc * r + d)
}

impl DiscreteChannel {
    /// Validates and builds a channel with the default alphabet cap.
    pub fn new(
        topology: NetworkTopology,
        input_alphabets: Vec<usize>,
        output_alphabets: Vec<usize>,
        tensor: Vec<f64>,
    ) -> Result<Self> {
        Self::with_cap(topology, input_alphabets, output_alphabets, tensor, DEFAULT_ALPHABET_CAP)
    }

    pub fn with_cap(
        topology: NetworkTopology,
        input_alphabets: Vec<usize>,
        output_alphabets: Vec<usize>,
        tensor: Vec<f64>,
        cap: usize,
    ) -> Result<Self> {
        let ch = Self::unchecked(topology, input_alphabets, output_alphabets, tensor, cap)?;
        ch.validate_law()?;
        ch.check_adjacency()?;
        Ok(ch)
    }

    fn unchecked(
        topology: NetworkTopology,
        input_alphabets: Vec<usize>,
        output_alphabets: Vec<usize>,
        tensor: Vec<f64>,
        cap: usize,
    ) -> Result<Self> {
        if input_alphabets.len() != topology.k1 || output_alphabets.len() != topology.k2 {
            return Err(Error::AlphabetMismatch("alphabet list lengths must equal k1 and k2".into()));
        }
        if let Some(c) = input_alphabets.iter().chain(&output_alphabets).find(|&&c| c == 0 || c > cap) {
            return Err(Error::AlphabetTooLarge(format!("alphabet size {c} outside 1..={cap}")));
        }
        let n_in: usize = input_alphabets.iter().product();
        let n_out: usize = output_alphabets.iter().product();
        if tensor.len() != n_in * n_out {
            return Err(Error::InvalidChannel(format!(
                "tensor has {} entries, expected {}",
                tensor.len(),
                n_in * n_out
            )));
        }
        Ok(DiscreteChannel { topology, input_alphabets, output_alphabets, tensor })
    }

    /// Builds from a law given per input tuple, deriving the declared
    /// adjacency from the law itself.
    pub fn from_law<F>(
        tx_messages: &[&[&str]],
        rx_messages: &[&[&str]],
        input_alphabets: Vec<usize>,
        output_alphabets: Vec<usize>,
        law: F,
    ) -> Result<Self>
    where
        F: Fn(&[usize]) -> Vec<f64>,
    {
        let k1 = input_alphabets.len();
        let k2 = output_alphabets.len();
        let n_in: usize = input_alphabets.iter().product();
        let n_out: usize = output_alphabets.iter().product();
        let mut tensor = Vec::with_capacity(n_in * n_out);
        for x in 0..n_in {
            let row = law(&mixed_radix_decode(x, &input_alphabets));
            if row.len() != n_out {
                return Err(Error::InvalidChannel("law row has wrong length".into()));
            }
            tensor.extend(row);
        }
        let probe_topo = NetworkTopology {
            k1,
            k2,
            messages: vec![],
            tx_messages: vec![vec![]; k1],
            rx_messages: vec![vec![]; k2],
            adjacency: vec![vec![true; k1]; k2],
        };
        let probe = Self::unchecked(probe_topo, input_alphabets.clone(), output_alphabets.clone(), tensor, usize::MAX)?;
        probe.validate_law()?;
        let adjacency = derive_connectivity(&probe);
        let topology = NetworkTopology::from_lists(tx_messages, rx_messages, adjacency)?;
        Self::new(topology, input_alphabets, output_alphabets, probe.tensor)
    }

    /// Deterministic channel `y = f(x)`.
    pub fn deterministic<F>(
        tx_messages: &[&[&str]],
        rx_messages: &[&[&str]],
        input_alphabets: Vec<usize>,
        output_alphabets: Vec<usize>,
        f: F,
    ) -> Result<Self>
    where
        F: Fn(&[usize]) -> Vec<usize>,
    {
        let outs = output_alphabets.clone();
        let n_out: usize = outs.iter().product();
        Self::from_law(tx_messages, rx_messages, input_alphabets, output_alphabets, move |x| {
            let mut row = vec![0.0; n_out];
            row[mixed_radix_encode(&f(x), &outs)] = 1.0;
            row
        })
    }

    /// Channel whose outputs are conditionally independent given the inputs,
    /// each with marginal law `per_rx[j](x)`.
    pub fn from_marginals(
        tx_messages: &[&[&str]],
        rx_messages: &[&[&str]],
        input_alphabets: Vec<usize>,
        output_alphabets: Vec<usize>,
        per_rx: &dyn Fn(usize, &[usize]) -> Vec<f64>,
    ) -> Result<Self> {
        let outs = output_alphabets.clone();
        Self::from_law(tx_messages, rx_messages, input_alphabets, output_alphabets, |x| {
            let margs: Vec<Vec<f64>> = (0..outs.len()).map(|j| per_rx(j, x)).collect();
            let n_out: usize = outs.iter().product();
            (0..n_out)
                .map(|y| {
                    let d = mixed_radix_decode(y, &outs);
                    d.iter().enumerate().map(|(j, &yj)| margs[j][yj]).product()
                })
                .collect()
        })
    }

    pub fn n_inputs(&self) -> usize {
        self.input_alphabets.iter().product()
    }

    pub fn n_outputs(&self) -> usize {
        self.output_alphabets.iter().product()
    }

    pub fn row(&self, x: usize) -> &[f64] {
        let n = self.n_outputs();
        &self.tensor[x * n..(x + 1) * n]
    }

    fn validate_law(&self) -> Result<()> {
        let n_out = self.n_outputs();
        for x in 0..self.n_inputs() {
            let row = &self.tensor[x * n_out..(x + 1) * n_out];
            if row.iter().any(|p| !(*p >= 0.0) || !p.is_finite()) {
                return Err(Error::InvalidChannel(format!("negative or non-finite entry in row {x}")));
            }
            let s = crate::infocalc::pmf::neumaier_sum(row.iter().copied());
            if (s - 1.0).abs() > 1e-12 {
                return Err(Error::InvalidChannel(format!("row {x} sums to {s}")));
            }
        }
        Ok(())
    }

    /// Marginal law of receiver `j` for each input tuple.
    pub fn receiver_marginals(&self, j: usize) -> Vec<Vec<f64>> {
        let n_out = self.n_outputs();
        let cj = self.output_alphabets[j];
        (0..self.n_inputs())
            .map(|x| {
                let mut m = vec![0.0; cj];
                for y in 0..n_out {
                    let d = mixed_radix_decode(y, &self.output_alphabets);
                    m[d[j]] += self.tensor[x * n_out + y];
                }
                m
            })
            .collect()
    }

    /// Largest change of receiver `j`'s marginal caused by transmitter `i`.
    pub fn max_marginal_difference(&self, j: usize, i: usize) -> f64 {
        let margs = self.receiver_marginals(j);
        let mut worst: f64 = 0.0;
        for x in 0..self.n_inputs() {
            let d = mixed_radix_decode(x, &self.input_alphabets);
            if d[i] != 0 {
                continue;
            }
            for v in 1..self.input_alphabets[i] {
                let mut d2 = d.clone();
                d2[i] = v;
                let x2 = mixed_radix_encode(&d2, &self.input_alphabets);
                for (a, b) in margs[x].iter().zip(&margs[x2]) {
                    worst = worst.max((a - b).abs());
                }
            }
        }
        worst
    }

    fn check_adjacency(&self) -> Result<()> {
        for j in 0..self.topology.k2 {
            for i in 0..self.topology.k1 {
                let diff = self.max_marginal_difference(j, i);
                if diff > AMBIGUITY_LOW && diff <= AMBIGUITY_HIGH {
                    return Err(Error::AmbiguousConnectivity { receiver: j + 1, transmitter: i + 1, diff });
                }
                let derived = diff > CONNECTIVITY_TOL;
                if derived != self.topology.adjacency[j][i] {
                    return Err(Error::AdjacencyMismatch(format!(
                        "receiver {} / transmitter {}: declared {}, law says {}",
                        j + 1,
                        i + 1,
                        self.topology.adjacency[j][i],
                        derived
                    )));
                }
            }
        }
        Ok(())
    }

    /// Input cardinalities keyed by pmf variable name.
    pub fn input_vars(&self) -> Vec<(String, usize)> {
        self.input_alphabets.iter().enumerate().map(|(i, &c)| (input_name(i), c)).collect()
    }
}

/// Connectivity matrix derived from the channel law.
pub fn derive_connectivity(channel: &DiscreteChannel) -> Vec<Vec<bool>> {
    let k1 = channel.input_alphabets.len();
    let k2 = channel.output_alphabets.len();
    (0..k2)
        .map(|j| (0..k1).map(|i| channel.max_marginal_difference(j, i) > CONNECTIVITY_TOL).collect())
        .collect()
}

pub fn unconnected_messages(topology: &NetworkTopology) -> Vec<Vec<String>> {
    topology.all_unconnected_messages()
}

/// Gaussian network `Y_j = sum_i a_ji X_i + Z_j` with unit-variance noise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianNetwork {
    pub topology: NetworkTopology,
    /// `gains[j][i]` = a_ji.
    pub gains: Vec<Vec<f64>>,
    pub powers: Vec<f64>,
}

impl GaussianNetwork {
    pub fn new(topology: NetworkTopology, gains: Vec<Vec<f64>>, powers: Vec<f64>) -> Result<Self> {
        if gains.len() != topology.k2 || gains.iter().any(|r| r.len() != topology.k1) {
            return Err(Error::InvalidChannel("gain matrix must be k2 x k1".into()));
        }
        if powers.len() != topology.k1 {
            return Err(Error::InvalidChannel("need one power per transmitter".into()));
        }
        if gains.iter().flatten().chain(&powers).any(|v| !v.is_finite()) {
            return Err(Error::InvalidChannel("gains and powers must be finite".into()));
        }
        if powers.iter().any(|&p| p < 0.0) {
            return Err(Error::InvalidChannel("powers must be nonnegative".into()));
        }
        Ok(GaussianNetwork { topology, gains, powers })
    }

    /// Network whose topology adjacency follows the nonzero gains, with the
    /// K-user interference message assignment when k1 = k2.
    pub fn cic(gains: Vec<Vec<f64>>, powers: Vec<f64>) -> Result<Self> {
        let k = gains.len();
        let adj = gains.iter().map(|r| r.iter().map(|&g| g != 0.0).collect()).collect();
        let topo = NetworkTopology::k_user_cic(k, Some(adj))?;
        Self::new(topo, gains, powers)
    }
}

/// MACCM plan: messages grouped by their sender set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaccmPlan {
    /// Groups ordered by sender-set size, then lexicographically.
    pub groups: Vec<MessageGroup>,
    /// `(from, to)` group indices with `from` ⊂ `to` and sizes differing by one.
    pub edges: Vec<(usize, usize)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MessageGroup {
    /// Sender set Δ (0-based transmitter indices, sorted).
    pub senders: Vec<usize>,
    pub messages: Vec<String>,
    /// Demander set of each message, aligned with `messages`.
    pub demanders: Vec<Vec<usize>>,
}

impl MessageGroup {
    pub fn label(&self) -> String {
        let s: Vec<String> = self.senders.iter().map(|i| (i + 1).to_string()).collect();
        format!("W{}", s.join("_"))
    }
}

pub fn build_maccm_plan(topology: &NetworkTopology) -> MaccmPlan {
    let mut by_delta: BTreeMap<(usize, Vec<usize>), Vec<String>> = BTreeMap::new();
    for m in &topology.messages {
        let delta = topology.senders(m);
        by_delta.entry((delta.len(), delta)).or_default().push(m.clone());
    }
    let groups: Vec<MessageGroup> = by_delta
        .into_iter()
        .map(|((_, senders), messages)| MessageGroup {
            demanders: messages.iter().map(|m| topology.demanders(m)).collect(),
            senders,
            messages,
        })
        .collect();
    let mut edges = Vec::new();
    for (a, ga) in groups.iter().enumerate() {
        for (b, gb) in groups.iter().enumerate() {
            if gb.senders.len() == ga.senders.len() + 1 && ga.senders.iter().all(|s| gb.senders.contains(s)) {
                edges.push((a, b));
            }
        }
    }
    MaccmPlan { groups, edges }
}

impl MaccmPlan {
    /// Groups whose messages reach receiver `j` through a connected transmitter.
    pub fn connected_groups(&self, topology: &NetworkTopology, j: usize) -> Vec<usize> {
        (0..self.groups.len())
            .filter(|&g| self.groups[g].senders.iter().any(|&i| topology.adjacency[j][i]))
            .collect()
    }

    fn strictly_below(&self, a: usize, b: usize) -> bool {
        let (sa, sb) = (&self.groups[a].senders, &self.groups[b].senders);
        sa.len() < sb.len() && sa.iter().all(|s| sb.contains(s))
    }

    /// Whether `subset` is closed under taking groups with smaller sender sets
    /// among `universe`.
    pub fn is_right_sided(&self, subset: &[usize], universe: &[usize]) -> bool {
        subset.iter().all(|&b| {
            universe
                .iter()
                .filter(|&&a| self.strictly_below(a, b))
                .all(|a| subset.contains(a))
        })
    }
}

/// Right-sided subsets of `restrict_to` (group indices), including the empty
/// set, in increasing bitmask order over `restrict_to`.
pub fn enumerate_right_sided(plan: &MaccmPlan, restrict_to: &[usize]) -> Vec<Vec<usize>> {
    let n = restrict_to.len();
    let mut out = Vec::new();
    for mask in 0u64..(1u64 << n) {
        let subset: Vec<usize> = (0..n).filter(|b| mask & (1 << b) != 0).map(|b| restrict_to[b]).collect();
        if plan.is_right_sided(&subset, restrict_to) {
            out.push(subset);
        }
    }
    out
}

/// Parsed channel-spec file.
#[derive(Debug, Clone, PartialEq)]
pub enum Network {
    Discrete(DiscreteChannel),
    Gaussian(GaussianNetwork),
}

impl Network {
    pub fn topology(&self) -> &NetworkTopology {
        match self {
            Network::Discrete(c) => &c.topology,
            Network::Gaussian(g) => &g.topology,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct RawSpec {
    k1: usize,
    k2: usize,
    #[serde(default)]
    messages: Option<Vec<String>>,
    tx_messages: Vec<Vec<String>>,
    rx_messages: Vec<Vec<String>>,
    adjacency: Vec<Vec<serde_json::Value>>,
    kind: String,
    #[serde(default)]
    discrete: Option<RawDiscrete>,
    #[serde(default)]
    gaussian: Option<RawGaussian>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct RawDiscrete {
    alphabets_in: Vec<usize>,
    alphabets_out: Vec<usize>,
    tensor: Vec<serde_json::Value>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct RawGaussian {
    gains: Vec<Vec<serde_json::Value>>,
    powers: Vec<serde_json::Value>,
}

fn number(v: &serde_json::Value) -> Result<f64> {
    match v {
        serde_json::Value::Number(n) => n.as_f64().ok_or_else(|| Error::Parse(format!("bad number {n}"))),
        serde_json::Value::String(s) => s.trim().parse::<f64>().map_err(|_| Error::Parse(format!("bad decimal string {s:?}"))),
        other => Err(Error::Parse(format!("expected number, got {other}"))),
    }
}

fn boolean(v: &serde_json::Value) -> Result<bool> {
    match v {
        serde_json::Value::Bool(b) => Ok(*b),
        serde_json::Value::Number(n) if n.as_f64() == Some(0.0) => Ok(false),
        serde_json::Value::Number(n) if n.as_f64() == Some(1.0) => Ok(true),
        other => Err(Error::Parse(format!("expected boolean adjacency entry, got {other}"))),
    }
}

pub fn parse_channel_spec(text: &str) -> Result<Network> {
    parse_channel_spec_with_cap(text, DEFAULT_ALPHABET_CAP)
}

pub fn parse_channel_spec_with_cap(text: &str, cap: usize) -> Result<Network> {
    let raw: RawSpec = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    let adjacency: Vec<Vec<bool>> = raw
        .adjacency
        .iter()
        .map(|r| r.iter().map(boolean).collect::<Result<Vec<_>>>())
        .collect::<Result<_>>()?;
    let topo = build_topology(raw.k1, raw.k2, raw.tx_messages, raw.rx_messages, adjacency)?;
    if let Some(msgs) = &raw.messages {
        let mut m = msgs.clone();
        sort_natural(&mut m);
        m.dedup();
        if m != topo.messages {
            return Err(Error::InvalidTopology(format!(
                "declared messages {:?} differ from assigned {:?}",
                m, topo.messages
            )));
        }
    }
    match raw.kind.as_str() {
        "discrete" => {
            let d = raw.discrete.ok_or_else(|| Error::Parse("missing discrete section".into()))?;
            let tensor = d.tensor.iter().map(number).collect::<Result<Vec<_>>>()?;
            Ok(Network::Discrete(DiscreteChannel::with_cap(topo, d.alphabets_in, d.alphabets_out, tensor, cap)?))
        }
        "gaussian" => {
            let g = raw.gaussian.ok_or_else(|| Error::Parse("missing gaussian section".into()))?;
            let gains = g
                .gains
                .iter()
                .map(|r| r.iter().map(number).collect::<Result<Vec<_>>>())
                .collect::<Result<_>>()?;
            let powers = g.powers.iter().map(number).collect::<Result<_>>()?;
            Ok(Network::Gaussian(GaussianNetwork::new(topo, gains, powers)?))
        }
        other => Err(Error::Parse(format!("unknown kind {other:?}"))),
    }
}

pub fn load_channel_spec(path: &Path) -> Result<Network> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
    parse_channel_spec(&text)
}

/// Serializes a network back into the channel-spec format.
pub fn channel_spec_json(net: &Network) -> serde_json::Value {
    let t = net.topology();
    let mut v = serde_json::json!({
        "k1": t.k1,
        "k2": t.k2,
        "messages": t.messages,
        "tx_messages": t.tx_messages,
        "rx_messages": t.rx_messages,
        "adjacency": t.adjacency,
    });
    match net {
        Network::Discrete(c) => {
            v["kind"] = "discrete".into();
            v["discrete"] = serde_json::json!({
                "alphabets_in": c.input_alphabets,
                "alphabets_out": c.output_alphabets,
                "tensor": c.tensor,
            });
        }
        Network::Gaussian(g) => {
            v["kind"] = "gaussian".into();
            v["gaussian"] = serde_json::json!({"gains": g.gains, "powers": g.powers});
        }
    }
    v
}
