//! Unified outer-bound templates: enumeration over message selections,
//! specialization to named auxiliaries and numeric evaluation.

use std::collections::HashSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expr::MiTerm;
use crate::netmodel::{output_name, NetworkTopology};
use crate::regions::rate_name;

mod evaluate;
mod registry;
mod specialize;

pub use evaluate::{
    check_message_factorization, evaluate_bound, evaluate_bounds, evaluate_specialized, random_message_pmf, BoundValue,
};
pub use registry::{replay_registry, run_replays, Replay, ReplayOutcome};
pub use specialize::{specialize_bound, AuditStep, Identification, Relation, SpecializedBound};

/// Name of the auxiliary shared by the two receiver groups.
pub const AUX: &str = "Z";
/// Name of the time-sharing variable.
pub const TIME_SHARING: &str = "Q";
/// Default ceiling on the raw number of selections visited.
pub const DEFAULT_SELECTION_CAP: u64 = 2_000_000;
/// Default bound on the size of each receiver group in multi-receiver mode.
pub const DEFAULT_GROUP_SIZE: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BoundMode {
    #[serde(rename = "TWO_RX")]
    TwoRx,
    #[serde(rename = "MULTI_RX")]
    MultiRx,
}

impl std::str::FromStr for BoundMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().replace('-', "_").as_str() {
            "TWO_RX" => Ok(BoundMode::TwoRx),
            "MULTI_RX" => Ok(BoundMode::MultiRx),
            other => Err(Error::Parse(format!("unknown bound mode {other:?}"))),
        }
    }
}

/// How the messages of a selection are arranged.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Shape {
    /// Ordered layers of messages for the first and second receiver groups;
    /// the right side ends with a two-way minimum over the shared auxiliary.
    Layered { first: Vec<Vec<String>>, second: Vec<Vec<String>> },
    /// Four-slot form: `common` is decoded by both groups, `first` and
    /// `second` by one each. `form` picks one of six inequalities.
    Reduced { form: u8, common: Vec<String>, first: Vec<String>, second: Vec<String> },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundTemplate {
    /// Receiver groups, 1-based.
    pub j1: Vec<usize>,
    pub j2: Vec<usize>,
    pub shape: Shape,
    /// Messages given to both groups as side information.
    pub side: Vec<String>,
    /// Messages whose rates are summed on the left.
    pub lhs: Vec<String>,
    pub terms: Vec<MiTerm>,
    pub tail: Option<(MiTerm, MiTerm)>,
}

fn outputs(group: &[usize]) -> Vec<String> {
    group.iter().map(|j| output_name(j - 1)).collect()
}

fn demanded(topo: &NetworkTopology, group: &[usize]) -> Vec<String> {
    topo.in_message_order(group.iter().flat_map(|j| topo.rx_messages[j - 1].iter().cloned()))
}

fn cat(parts: &[&[String]]) -> Vec<String> {
    parts.iter().flat_map(|p| p.iter().cloned()).collect()
}

fn one(s: &str) -> Vec<String> {
    vec![s.to_string()]
}

/// `I(a;b|c)` with `Q` appended to the conditioning; `None` when `a` is empty.
fn term(a: Vec<String>, b: &[String], c: Vec<String>) -> Option<MiTerm> {
    if a.is_empty() {
        return None;
    }
    let mut c = c;
    c.push(TIME_SHARING.to_string());
    Some(MiTerm { a, b: b.to_vec(), c })
}

fn sorted_term(t: &MiTerm) -> String {
    let s = |v: &[String]| {
        let mut v = v.to_vec();
        v.sort();
        v.join(",")
    };
    format!("I({};{}|{})", s(&t.a), s(&t.b), s(&t.c))
}

fn set_str(v: &[String]) -> String {
    format!("{{{}}}", v.join(","))
}

impl BoundTemplate {
    /// Layered template for one receiver-group pair. Empty layers are removed.
    pub fn layered(
        topo: &NetworkTopology,
        j1: &[usize],
        j2: &[usize],
        first: Vec<Vec<String>>,
        second: Vec<Vec<String>>,
        side: Vec<String>,
    ) -> Result<Self> {
        if first.len() != second.len() {
            return Err(Error::InvalidTopology("layer lists must have equal length".into()));
        }
        if j2.is_empty() {
            return Err(Error::InvalidTopology("the layered form needs two receiver groups".into()));
        }
        let (first, second): (Vec<_>, Vec<_>) = first
            .into_iter()
            .zip(second)
            .filter(|(a, b)| !a.is_empty() || !b.is_empty())
            .map(|(a, b)| (topo.in_message_order(a), topo.in_message_order(b)))
            .unzip();
        let side = topo.in_message_order(side);
        let (y1, y2) = (outputs(j1), outputs(j2));
        let z = one(AUX);
        let mut terms = Vec::new();
        let mut prev: Vec<String> = Vec::new();
        for (f, s) in first.iter().zip(&second) {
            terms.extend(term(f.clone(), &y1, cat(&[&z, &prev, s, &side])));
            terms.extend(term(s.clone(), &y2, cat(&[&z, &prev, &side])));
            prev.extend(f.iter().cloned());
            prev.extend(s.iter().cloned());
        }
        let tail = Some((
            term(z.clone(), &y1, side.clone()).expect("nonempty"),
            term(z, &y2, side.clone()).expect("nonempty"),
        ));
        let lhs = topo.in_message_order(prev);
        let t = BoundTemplate {
            j1: j1.to_vec(),
            j2: j2.to_vec(),
            shape: Shape::Layered { first, second },
            side,
            lhs,
            terms,
            tail,
        };
        t.check_disjoint(topo).map_err(Error::InvalidTopology)?;
        Ok(t)
    }

    /// Four-slot template in one of the six forms.
    #[allow(clippy::too_many_arguments)]
    pub fn reduced(
        topo: &NetworkTopology,
        j1: &[usize],
        j2: &[usize],
        form: u8,
        common: Vec<String>,
        first: Vec<String>,
        second: Vec<String>,
        side: Vec<String>,
    ) -> Result<Self> {
        if !(1..=6).contains(&form) {
            return Err(Error::InvalidTopology(format!("form {form} is not one of 1..6")));
        }
        if j2.is_empty() && form != 1 {
            return Err(Error::InvalidTopology("only form 1 exists with a single receiver group".into()));
        }
        let (c, f, s, side) = (
            topo.in_message_order(common),
            topo.in_message_order(first),
            topo.in_message_order(second),
            topo.in_message_order(side),
        );
        let (y1, y2) = (outputs(j1), outputs(j2));
        let z = one(AUX);
        let (terms, lhs): (Vec<Option<MiTerm>>, Vec<&[String]>) = match form {
            1 => (vec![term(cat(&[&z, &c, &f]), &y1, side.clone())], vec![&c, &f]),
            2 => (vec![term(cat(&[&z, &c, &s]), &y2, side.clone())], vec![&c, &s]),
            3 => (
                vec![term(f.clone(), &y1, cat(&[&z, &c, &s, &side])), term(cat(&[&z, &c, &s]), &y2, side.clone())],
                vec![&c, &f, &s],
            ),
            4 => (
                vec![term(s.clone(), &y2, cat(&[&z, &c, &f, &side])), term(cat(&[&z, &c, &f]), &y1, side.clone())],
                vec![&c, &f, &s],
            ),
            5 => (
                vec![
                    term(f.clone(), &y1, cat(&[&z, &c, &s, &side])),
                    term(s.clone(), &y2, cat(&[&z, &c, &side])),
                    term(cat(&[&z, &c]), &y1, side.clone()),
                ],
                vec![&c, &f, &s],
            ),
            _ => (
                vec![
                    term(s.clone(), &y2, cat(&[&z, &c, &f, &side])),
                    term(f.clone(), &y1, cat(&[&z, &c, &side])),
                    term(cat(&[&z, &c]), &y2, side.clone()),
                ],
                vec![&c, &f, &s],
            ),
        };
        let lhs = topo.in_message_order(lhs.into_iter().flat_map(|v| v.iter().cloned()));
        let t = BoundTemplate {
            j1: j1.to_vec(),
            j2: j2.to_vec(),
            shape: Shape::Reduced { form, common: c, first: f, second: s },
            side,
            lhs,
            terms: terms.into_iter().flatten().collect(),
            tail: None,
        };
        t.check_disjoint(topo).map_err(Error::InvalidTopology)?;
        Ok(t)
    }

    /// Number of layers (1 for four-slot forms).
    pub fn mu(&self) -> usize {
        match &self.shape {
            Shape::Layered { first, .. } => first.len(),
            Shape::Reduced { .. } => 1,
        }
    }

    pub fn form(&self) -> Option<u8> {
        match self.shape {
            Shape::Reduced { form, .. } => Some(form),
            Shape::Layered { .. } => None,
        }
    }

    pub fn lhs_rates(&self) -> Vec<String> {
        self.lhs.iter().map(|m| rate_name(m)).collect()
    }

    /// Order-insensitive identity of the inequality itself.
    pub fn key(&self) -> String {
        let mut lhs = self.lhs.clone();
        lhs.sort();
        let mut terms: Vec<String> = self.terms.iter().map(sorted_term).collect();
        terms.sort();
        let tail = self.tail.as_ref().map(|(a, b)| {
            let mut v = [sorted_term(a), sorted_term(b)];
            v.sort();
            v.join("&")
        });
        format!("{}<={}|min={}", lhs.join(","), terms.join("+"), tail.unwrap_or_default())
    }

    /// Every message slot in the selection.
    fn slots(&self) -> Vec<(&'static str, &[String])> {
        let mut out: Vec<(&'static str, &[String])> = Vec::new();
        match &self.shape {
            Shape::Layered { first, second } => {
                out.extend(first.iter().map(|v| ("first", v.as_slice())));
                out.extend(second.iter().map(|v| ("second", v.as_slice())));
            }
            Shape::Reduced { common, first, second, .. } => {
                out.push(("common", common));
                out.push(("first", first));
                out.push(("second", second));
            }
        }
        out.push(("side", &self.side));
        out
    }

    /// Pairwise disjointness of all slots plus the demand constraints of
    /// each slot. Returns a description of the first violation.
    pub fn check_disjoint(&self, topo: &NetworkTopology) -> std::result::Result<(), String> {
        let m1 = demanded(topo, &self.j1);
        let m2 = demanded(topo, &self.j2);
        let mut seen: HashSet<&str> = HashSet::new();
        for (role, slot) in self.slots() {
            for m in slot {
                if !topo.messages.contains(m) {
                    return Err(format!("{m} is not a message"));
                }
                if !seen.insert(m.as_str()) {
                    return Err(format!("{m} appears in two slots"));
                }
                let ok = match role {
                    "first" => m1.contains(m),
                    "second" => m2.contains(m),
                    "common" => m1.contains(m) && m2.contains(m),
                    _ => true,
                };
                if !ok {
                    return Err(format!("{m} is not demanded by the receivers of its {role} slot"));
                }
            }
        }
        if self.j1.iter().any(|j| self.j2.contains(j)) {
            return Err("receiver groups overlap".into());
        }
        Ok(())
    }

    pub fn rhs_string(&self) -> String {
        let mut parts: Vec<String> = self.terms.iter().map(|t| t.to_string()).collect();
        if let Some((a, b)) = &self.tail {
            parts.push(format!("min{{{a},{b}}}"));
        }
        if parts.is_empty() {
            "0".into()
        } else {
            parts.join("+")
        }
    }

    pub fn selection_string(&self) -> String {
        let groups = format!("J1={} J2={}", set_str(&self.j1.iter().map(|j| j.to_string()).collect::<Vec<_>>()), set_str(&self.j2.iter().map(|j| j.to_string()).collect::<Vec<_>>()));
        match &self.shape {
            Shape::Layered { first, second } => {
                let layers: Vec<String> =
                    first.iter().zip(second).map(|(a, b)| format!("({};{})", set_str(a), set_str(b))).collect();
                format!("{groups} layers={} side={}", layers.join(""), set_str(&self.side))
            }
            Shape::Reduced { form, common, first, second } => format!(
                "{groups} form={form} common={} first={} second={} side={}",
                set_str(common),
                set_str(first),
                set_str(second),
                set_str(&self.side)
            ),
        }
    }

    pub fn to_json(&self) -> serde_json::Value {
        let mut v = serde_json::to_value(self).expect("serializable");
        let obj = v.as_object_mut().expect("object");
        obj.insert("lhs_rates".into(), serde_json::json!(self.lhs_rates()));
        obj.insert("mu".into(), serde_json::json!(self.mu()));
        obj.insert("terms".into(), serde_json::json!(self.terms.iter().map(|t| t.to_string()).collect::<Vec<_>>()));
        obj.insert(
            "tail".into(),
            match &self.tail {
                Some((a, b)) => serde_json::json!([a.to_string(), b.to_string()]),
                None => serde_json::Value::Null,
            },
        );
        obj.insert("inequality".into(), serde_json::json!(self.to_string()));
        v
    }
}

impl fmt::Display for BoundTemplate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} <= {}", self.lhs_rates().join("+"), self.rhs_string())
    }
}

#[derive(Debug, Clone)]
pub struct EnumerateOptions {
    pub mu_max: usize,
    pub mode: BoundMode,
    /// Largest receiver group in multi-receiver mode.
    pub group_size: usize,
    pub cap: u64,
}

impl EnumerateOptions {
    pub fn new(mu_max: usize, mode: BoundMode) -> Self {
        EnumerateOptions { mu_max, mode, group_size: DEFAULT_GROUP_SIZE, cap: DEFAULT_SELECTION_CAP }
    }
}

fn subsets_upto(k: usize, size: usize) -> Vec<Vec<usize>> {
    let mut out: Vec<Vec<usize>> = (1u32..(1 << k))
        .map(|mask| (0..k).filter(|i| mask & (1 << i) != 0).map(|i| i + 1).collect::<Vec<_>>())
        .filter(|s| s.len() <= size)
        .collect();
    out.sort_by(|a, b| a.len().cmp(&b.len()).then(a.cmp(b)));
    out
}

/// Receiver-group pairs visited for a mode.
pub fn receiver_pairs(topo: &NetworkTopology, mode: BoundMode, group_size: usize) -> Result<Vec<(Vec<usize>, Vec<usize>)>> {
    if topo.k2 == 1 {
        return Ok(vec![(vec![1], vec![])]);
    }
    match mode {
        BoundMode::TwoRx => {
            if topo.k2 != 2 {
                return Err(Error::TopologyMismatch(format!("two-receiver mode needs 2 receivers, got {}", topo.k2)));
            }
            Ok(vec![(vec![1], vec![2])])
        }
        BoundMode::MultiRx => {
            let groups = subsets_upto(topo.k2, group_size.max(1));
            let mut out = Vec::new();
            for a in &groups {
                for b in &groups {
                    if a.iter().all(|j| !b.contains(j)) {
                        out.push((a.clone(), b.clone()));
                    }
                }
            }
            Ok(out)
        }
    }
}

/// Effective layer count for a pair: at most the larger demand set.
fn layer_count(mu_max: usize, m1: &[String], m2: &[String]) -> usize {
    mu_max.min(m1.len().max(m2.len())).max(1)
}

#[derive(Clone, Copy, PartialEq)]
enum Place {
    Out,
    Side,
    First(usize),
    Second(usize),
    Common,
}

fn options(m: &str, m1: &[String], m2: &[String], layers: Option<usize>) -> Vec<Place> {
    let mut v = vec![Place::Out, Place::Side];
    let in1 = m1.iter().any(|x| x == m);
    let in2 = m2.iter().any(|x| x == m);
    match layers {
        Some(mu) => {
            for l in 0..mu {
                if in1 {
                    v.push(Place::First(l));
                }
                if in2 {
                    v.push(Place::Second(l));
                }
            }
        }
        None => {
            if in1 && in2 {
                v.push(Place::Common);
            }
            if in1 {
                v.push(Place::First(0));
            }
            if in2 {
                v.push(Place::Second(0));
            }
        }
    }
    v
}

fn product_len(opts: &[Vec<Place>]) -> u64 {
    opts.iter().fold(1u64, |acc, o| acc.saturating_mul(o.len() as u64))
}

/// Visits every assignment of places, odometer style.
fn for_each_assignment(opts: &[Vec<Place>], mut f: impl FnMut(&[Place]) -> Result<()>) -> Result<()> {
    let mut idx = vec![0usize; opts.len()];
    loop {
        let places: Vec<Place> = idx.iter().zip(opts).map(|(&i, o)| o[i]).collect();
        f(&places)?;
        let mut k = 0;
        loop {
            if k == idx.len() {
                return Ok(());
            }
            idx[k] += 1;
            if idx[k] < opts[k].len() {
                break;
            }
            idx[k] = 0;
            k += 1;
        }
    }
}

/// Raw number of selections a run would visit.
pub fn selection_count(topo: &NetworkTopology, opts: &EnumerateOptions) -> Result<u64> {
    let mut total = 0u64;
    for (j1, j2) in receiver_pairs(topo, opts.mode, opts.group_size)? {
        let (m1, m2) = (demanded(topo, &j1), demanded(topo, &j2));
        let reduced: Vec<Vec<Place>> = topo.messages.iter().map(|m| options(m, &m1, &m2, None)).collect();
        total = total.saturating_add(product_len(&reduced).saturating_mul(6));
        if !j2.is_empty() {
            let mu = layer_count(opts.mu_max, &m1, &m2);
            let layered: Vec<Vec<Place>> = topo.messages.iter().map(|m| options(m, &m1, &m2, Some(mu))).collect();
            total = total.saturating_add(product_len(&layered));
        }
    }
    Ok(total)
}

/// All admissible templates, duplicate-free. Four-slot forms come first for
/// each receiver-group pair, then the layered forms by increasing depth.
pub fn enumerate_bound_templates_with(topo: &NetworkTopology, opts: &EnumerateOptions) -> Result<Vec<BoundTemplate>> {
    if opts.mu_max == 0 {
        return Err(Error::Parse("the layer count must be at least 1".into()));
    }
    let count = selection_count(topo, opts)?;
    if count > opts.cap {
        return Err(Error::TooLarge(usize::try_from(count).unwrap_or(usize::MAX)));
    }
    let mut seen: HashSet<String> = HashSet::new();
    let mut out = Vec::new();
    let mut push = |t: BoundTemplate, out: &mut Vec<BoundTemplate>| {
        if !t.lhs.is_empty() && seen.insert(format!("{:?}|{:?}|{}", t.j1, t.j2, t.key())) {
            out.push(t);
        }
    };
    for (j1, j2) in receiver_pairs(topo, opts.mode, opts.group_size)? {
        let (m1, m2) = (demanded(topo, &j1), demanded(topo, &j2));
        let reduced: Vec<Vec<Place>> = topo.messages.iter().map(|m| options(m, &m1, &m2, None)).collect();
        let mut selections = Vec::new();
        for_each_assignment(&reduced, |places| {
            let pick = |want: Place| -> Vec<String> {
                topo.messages.iter().zip(places).filter(|(_, p)| **p == want).map(|(m, _)| m.clone()).collect()
            };
            selections.push((pick(Place::Common), pick(Place::First(0)), pick(Place::Second(0)), pick(Place::Side)));
            Ok(())
        })?;
        // Smallest selections first so that the kept representative of a
        // duplicate class is the sparsest one.
        selections.sort_by_key(|(c, f, s, side)| (c.len() + f.len() + s.len(), side.len()));
        let forms: &[u8] = if j2.is_empty() { &[1] } else { &[1, 2, 3, 4, 5, 6] };
        for (c, f, s, side) in &selections {
            for &form in forms {
                let fits = match form {
                    1 => s.is_empty() && !(c.is_empty() && f.is_empty()),
                    2 => f.is_empty() && !(c.is_empty() && s.is_empty()),
                    _ => !(c.is_empty() && f.is_empty() && s.is_empty()),
                };
                if fits {
                    let t = BoundTemplate::reduced(topo, &j1, &j2, form, c.clone(), f.clone(), s.clone(), side.clone())?;
                    push(t, &mut out);
                }
            }
        }
        if j2.is_empty() {
            continue;
        }
        let mu = layer_count(opts.mu_max, &m1, &m2);
        let layered: Vec<Vec<Place>> = topo.messages.iter().map(|m| options(m, &m1, &m2, Some(mu))).collect();
        let mut found = Vec::new();
        for_each_assignment(&layered, |places| {
            let mut first = vec![Vec::new(); mu];
            let mut second = vec![Vec::new(); mu];
            let mut side = Vec::new();
            for (m, p) in topo.messages.iter().zip(places) {
                match p {
                    Place::First(l) => first[*l].push(m.clone()),
                    Place::Second(l) => second[*l].push(m.clone()),
                    Place::Side => side.push(m.clone()),
                    _ => {}
                }
            }
            if first.iter().chain(&second).any(|v| !v.is_empty()) {
                found.push(BoundTemplate::layered(topo, &j1, &j2, first, second, side)?);
            }
            Ok(())
        })?;
        found.sort_by_key(|t| (t.mu(), t.lhs.len(), t.side.len()));
        for t in found {
            push(t, &mut out);
        }
    }
    Ok(out)
}

pub fn enumerate_bound_templates(topo: &NetworkTopology, mu_max: usize, mode: BoundMode) -> Result<Vec<BoundTemplate>> {
    enumerate_bound_templates_with(topo, &EnumerateOptions::new(mu_max, mode))
}

/// JSON dump of a template list.
pub fn templates_json(list: &[BoundTemplate]) -> serde_json::Value {
    serde_json::Value::Array(list.iter().map(|t| t.to_json()).collect())
}

#[cfg(test)]
mod tests;
