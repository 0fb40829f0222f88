use std::collections::BTreeSet;
use std::fmt;

use serde::{Serialize, Serializer};

use super::{BoundTemplate, AUX, TIME_SHARING};
use crate::error::{Error, Result};
use crate::expr::MiTerm;
use crate::netmodel::{input_name, output_name, NetworkTopology};

/// Named auxiliaries, each standing for a bundle of the shared auxiliary,
/// messages and the time-sharing variable.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Identification {
    pub bundles: Vec<(String, Vec<String>)>,
}

impl Identification {
    pub fn new(pairs: &[(&str, &[&str])]) -> Self {
        Identification {
            bundles: pairs.iter().map(|(n, v)| (n.to_string(), v.iter().map(|s| s.to_string()).collect())).collect(),
        }
    }

    /// Parses `U=Z,M1;V=Z,M2;W=M0,Q`.
    pub fn parse(s: &str) -> Result<Self> {
        let mut bundles = Vec::new();
        for part in s.split(';').map(str::trim).filter(|p| !p.is_empty()) {
            let (name, vars) =
                part.split_once('=').ok_or_else(|| Error::Parse(format!("expected NAME=vars, got {part:?}")))?;
            let vars: Vec<String> =
                vars.split(',').map(|v| v.trim().to_string()).filter(|v| !v.is_empty()).collect();
            bundles.push((name.trim().to_string(), vars));
        }
        Ok(Identification { bundles })
    }

    fn validate(&self, topo: &NetworkTopology) -> Result<()> {
        let bad = |m: String| Err(Error::InconsistentIdentification(m));
        let mut reserved: BTreeSet<String> = topo.messages.iter().cloned().collect();
        reserved.extend((0..topo.k1).map(input_name));
        reserved.extend((0..topo.k2).map(output_name));
        reserved.insert(AUX.into());
        reserved.insert(TIME_SHARING.into());
        let mut names = BTreeSet::new();
        for (name, vars) in &self.bundles {
            if name.is_empty() || reserved.contains(name) || !names.insert(name.clone()) {
                return bad(format!("auxiliary name {name:?} is empty, reserved or repeated"));
            }
            if vars.is_empty() {
                return bad(format!("{name} stands for nothing"));
            }
            for v in vars {
                if !(topo.messages.contains(v) || v == AUX || v == TIME_SHARING) {
                    return bad(format!("{name} contains {v}, which is neither a message, {AUX} nor {TIME_SHARING}"));
                }
            }
        }
        Ok(())
    }

    fn raw_time_sharing(&self) -> bool {
        !self.bundles.iter().any(|(_, v)| v.iter().any(|x| x == TIME_SHARING))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Equal,
    AtMost,
}

impl Relation {
    pub fn as_str(self) -> &'static str {
        match self {
            Relation::Equal => "=",
            Relation::AtMost => "<=",
        }
    }
}

impl Serialize for Relation {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AuditStep {
    /// Index into the term list; tail sides follow the plain terms.
    pub term: usize,
    pub relation: Relation,
    pub action: String,
    pub result: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpecializedBound {
    pub lhs: Vec<String>,
    pub lhs_rates: Vec<String>,
    /// Terms over the named auxiliaries.
    pub terms: Vec<MiTerm>,
    pub tail: Option<(MiTerm, MiTerm)>,
    /// The same terms with every auxiliary replaced by its bundle.
    pub expanded_terms: Vec<MiTerm>,
    pub expanded_tail: Option<(MiTerm, MiTerm)>,
    pub audit: Vec<AuditStep>,
}

impl SpecializedBound {
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
}

impl fmt::Display for SpecializedBound {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} <= {}", self.lhs_rates.join("+"), self.rhs_string())
    }
}

struct Rewriter<'a> {
    topo: &'a NetworkTopology,
    ident: &'a Identification,
    raw_q: bool,
}

type Set = BTreeSet<String>;

fn render(topo: &NetworkTopology, set: &Set) -> Vec<String> {
    let rank = |v: &str| -> (usize, usize) {
        if v == AUX {
            (0, 0)
        } else if let Some(k) = topo.messages.iter().position(|m| m == v) {
            (1, k)
        } else if v == TIME_SHARING {
            (3, 0)
        } else {
            (2, v.trim_start_matches('X').parse().unwrap_or(usize::MAX))
        }
    };
    let mut v: Vec<String> = set.iter().cloned().collect();
    v.sort_by_key(|x| rank(x));
    v
}

fn raw_term(topo: &NetworkTopology, a: &Set, b: &[String], c: &Set) -> String {
    MiTerm { a: render(topo, a), b: b.to_vec(), c: render(topo, c) }.to_string()
}

fn list(v: &[String]) -> String {
    v.join(",")
}

impl Rewriter<'_> {
    fn is_input(&self, v: &str) -> bool {
        (0..self.topo.k1).any(|i| input_name(i) == v)
    }

    /// Inputs reaching any output in `b`.
    fn connected_inputs(&self, b: &[String]) -> Vec<String> {
        (0..self.topo.k1)
            .filter(|&i| (0..self.topo.k2).any(|j| b.contains(&output_name(j)) && self.topo.adjacency[j][i]))
            .map(input_name)
            .collect()
    }

    fn bundle_within(&self, members: &[String], set: &Set) -> bool {
        members.iter().all(|m| set.contains(m))
    }

    /// Rewrites one term; returns the named and expanded forms, or `None`
    /// when the term is identically zero.
    fn rewrite(&self, idx: usize, t: &MiTerm, audit: &mut Vec<AuditStep>) -> Result<Option<(MiTerm, MiTerm)>> {
        let topo = self.topo;
        let b = t.b.clone();
        let mut c: Set = t.c.iter().cloned().collect();
        let mut a: Set = t.a.iter().filter(|v| !c.contains(*v)).cloned().collect();
        let step = |rel: Relation, action: String, a: &Set, c: &Set, audit: &mut Vec<AuditStep>| {
            audit.push(AuditStep { term: idx, relation: rel, action, result: raw_term(topo, a, &b, c) });
        };

        // inputs fixed by the conditioning or by argument and conditioning
        let mut to_c = Vec::new();
        let mut to_a = Vec::new();
        for i in 0..topo.k1 {
            let x = input_name(i);
            if a.contains(&x) || c.contains(&x) || !c.contains(TIME_SHARING) {
                continue;
            }
            let msgs = &topo.tx_messages[i];
            if msgs.iter().all(|m| c.contains(m)) {
                to_c.push(x);
            } else if msgs.iter().all(|m| a.contains(m) || c.contains(m)) {
                to_a.push(x);
            }
        }
        if !to_c.is_empty() {
            c.extend(to_c.iter().cloned());
            step(Relation::Equal, format!("condition on {}, fixed by the conditioning", list(&to_c)), &a, &c, audit);
        }
        if !to_a.is_empty() {
            a.extend(to_a.iter().cloned());
            step(Relation::Equal, format!("add {} to the argument, fixed by argument and conditioning", list(&to_a)), &a, &c, audit);
        }

        let reaching = self.connected_inputs(&b);
        if reaching.iter().all(|x| a.contains(x) || c.contains(x)) {
            let kept_a: Set = a.iter().filter(|v| reaching.contains(*v)).cloned().collect();
            let dropped: Vec<String> = render(topo, &a).into_iter().filter(|v| !kept_a.contains(v)).collect();
            if kept_a.is_empty() {
                step(Relation::Equal, "term vanishes: every input reaching the outputs is conditioned on".into(), &Set::new(), &c, audit);
                return Ok(None);
            }
            if !dropped.is_empty() {
                a = kept_a;
                step(Relation::Equal, format!("drop {} from the argument: outputs see only the inputs", list(&dropped)), &a, &c, audit);
            }
            let mut keep: Set = c.iter().filter(|v| reaching.contains(*v)).cloned().collect();
            for (_, members) in &self.ident.bundles {
                if self.bundle_within(members, &c) {
                    keep.extend(members.iter().cloned());
                }
            }
            if self.raw_q && c.contains(TIME_SHARING) {
                keep.insert(TIME_SHARING.into());
            }
            let dropped: Vec<String> = render(topo, &c).into_iter().filter(|v| !keep.contains(v)).collect();
            if !dropped.is_empty() {
                c = keep;
                step(
                    Relation::AtMost,
                    format!("drop {} from the conditioning: all inputs reaching the outputs are present", list(&dropped)),
                    &a,
                    &c,
                    audit,
                );
            }
        } else {
            let covered: Set = self
                .ident
                .bundles
                .iter()
                .filter(|(_, m)| self.bundle_within(m, &c))
                .flat_map(|(_, m)| m.iter().cloned())
                .collect();
            let moved: Vec<String> = render(topo, &c)
                .into_iter()
                .filter(|v| !self.is_input(v) && !covered.contains(v) && !(self.raw_q && v == TIME_SHARING))
                .collect();
            if !moved.is_empty() {
                for v in &moved {
                    c.remove(v);
                    a.insert(v.clone());
                }
                step(Relation::AtMost, format!("move {} from the conditioning into the argument", list(&moved)), &a, &c, audit);
            }
        }
        self.name(idx, &a, &b, &c, audit).map(Some)
    }

    fn name(&self, idx: usize, a: &Set, b: &[String], c: &Set, audit: &mut Vec<AuditStep>) -> Result<(MiTerm, MiTerm)> {
        let topo = self.topo;
        let mut union: Set = a.clone();
        union.extend(c.iter().cloned());
        let mut a_names = Vec::new();
        let mut c_names = Vec::new();
        let mut a_cover = Set::new();
        let mut c_cover = Set::new();
        for (name, members) in &self.ident.bundles {
            let inside_c = self.bundle_within(members, c);
            if inside_c {
                c_names.push(name.clone());
                c_cover.extend(members.iter().cloned());
            } else if self.bundle_within(members, &union) && members.iter().any(|m| a.contains(m)) {
                a_names.push(name.clone());
                a_cover.extend(members.iter().cloned());
            }
        }
        let plain = |v: &str| self.is_input(v) || (self.raw_q && v == TIME_SHARING);
        for (set, cover, role) in [(a, &a_cover, "argument"), (c, &c_cover, "conditioning")] {
            if let Some(v) = render(topo, set).into_iter().find(|v| !plain(v) && !cover.contains(v)) {
                return Err(Error::InconsistentIdentification(format!(
                    "{v} in the {role} of {} is not covered by any auxiliary",
                    raw_term(topo, a, b, c)
                )));
            }
        }
        let inputs = |s: &Set| -> Vec<String> { render(topo, s).into_iter().filter(|v| self.is_input(v)).collect() };
        let q = |s: &Set| -> Vec<String> {
            if self.raw_q && s.contains(TIME_SHARING) {
                vec![TIME_SHARING.to_string()]
            } else {
                vec![]
            }
        };
        let named_a: Vec<String> = a_names.iter().cloned().chain(inputs(a)).chain(q(a)).collect();
        let named_c: Vec<String> = inputs(c).into_iter().chain(c_names.iter().cloned()).chain(q(c)).collect();
        let mut exp_a: Set = a.clone();
        exp_a.extend(a_cover);
        let named = MiTerm { a: named_a, b: b.to_vec(), c: named_c };
        let expanded = MiTerm { a: render(topo, &exp_a), b: b.to_vec(), c: render(topo, c) };
        if !a_names.is_empty() || !c_names.is_empty() {
            let names: Vec<String> = a_names.iter().chain(&c_names).cloned().collect();
            audit.push(AuditStep {
                term: idx,
                relation: Relation::Equal,
                action: format!("write the bundles of {} by name", list(&names)),
                result: named.to_string(),
            });
        }
        Ok((named, expanded))
    }
}

/// Rewrites a template over the named auxiliaries of `ident`, applying the
/// input-determination, Markov and chain-rule steps term by term.
pub fn specialize_bound(template: &BoundTemplate, topo: &NetworkTopology, ident: &Identification) -> Result<SpecializedBound> {
    ident.validate(topo)?;
    template.check_disjoint(topo).map_err(Error::InconsistentIdentification)?;
    let rw = Rewriter { topo, ident, raw_q: ident.raw_time_sharing() };
    let mut audit = Vec::new();
    let mut terms = Vec::new();
    let mut expanded_terms = Vec::new();
    for (k, t) in template.terms.iter().enumerate() {
        if let Some((n, e)) = rw.rewrite(k, t, &mut audit)? {
            terms.push(n);
            expanded_terms.push(e);
        }
    }
    let (mut tail, mut expanded_tail) = (None, None);
    if let Some((x, y)) = &template.tail {
        let base = template.terms.len();
        let left = rw.rewrite(base, x, &mut audit)?;
        let right = rw.rewrite(base + 1, y, &mut audit)?;
        match (left, right) {
            (Some((nx, ex)), Some((ny, ey))) => {
                tail = Some((nx, ny));
                expanded_tail = Some((ex, ey));
            }
            _ => audit.push(AuditStep {
                term: base,
                relation: Relation::Equal,
                action: "the minimum has a vanishing side and drops out".into(),
                result: "0".into(),
            }),
        }
    }
    Ok(SpecializedBound {
        lhs: template.lhs.clone(),
        lhs_rates: template.lhs_rates(),
        terms,
        tail,
        expanded_terms,
        expanded_tail,
        audit,
    })
}
