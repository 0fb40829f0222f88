use std::collections::HashMap;

use serde::Serialize;

use super::{
    enumerate_bound_templates_with, sorted_term, specialize_bound, BoundMode, BoundTemplate, EnumerateOptions,
    Identification, SpecializedBound,
};
use crate::error::Result;
use crate::expr::MiTerm;
use crate::netmodel::NetworkTopology;

/// A named specialization: a four-slot selection, the auxiliaries it is
/// written over and the inequality it must produce.
#[derive(Debug, Clone, Serialize)]
pub struct Replay {
    pub id: String,
    pub network: &'static str,
    pub j1: Vec<usize>,
    pub j2: Vec<usize>,
    pub form: u8,
    pub common: Vec<String>,
    pub first: Vec<String>,
    pub second: Vec<String>,
    pub side: Vec<String>,
    pub identification: Identification,
    pub expected_lhs: Vec<String>,
    pub expected: Vec<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ReplayOutcome {
    pub id: String,
    pub network: &'static str,
    pub expected: String,
    pub obtained: String,
    /// The selection's template appears in the enumerated list.
    pub enumerated: bool,
    pub matches: bool,
    pub specialized: SpecializedBound,
}

fn networks() -> Vec<(&'static str, NetworkTopology, BoundMode)> {
    vec![
        ("cic-common", NetworkTopology::two_user_cic_common(), BoundMode::TwoRx),
        ("bccr", NetworkTopology::bccr(true), BoundMode::TwoRx),
        ("cic3", NetworkTopology::k_user_cic(3, None).expect("valid"), BoundMode::MultiRx),
    ]
}

fn v(s: &str) -> Vec<String> {
    s.split(',').map(str::trim).filter(|x| !x.is_empty()).map(String::from).collect()
}

struct Builder {
    network: &'static str,
    j: (Vec<usize>, Vec<usize>),
    ident: Identification,
    out: Vec<Replay>,
}

impl Builder {
    /// `slots` is `common|first|second|side`; `rhs` joins terms with `+`.
    fn add(&mut self, form: u8, slots: &str, lhs: &str, rhs: &str) {
        let parts: Vec<&str> = slots.split('|').collect();
        let id = format!(
            "{}/J{}-{}/form{}/{}",
            self.network,
            self.j.0.iter().map(|x| x.to_string()).collect::<String>(),
            self.j.1.iter().map(|x| x.to_string()).collect::<String>(),
            form,
            slots
        );
        self.out.push(Replay {
            id,
            network: self.network,
            j1: self.j.0.clone(),
            j2: self.j.1.clone(),
            form,
            common: v(parts[0]),
            first: v(parts[1]),
            second: v(parts[2]),
            side: v(parts[3]),
            identification: self.ident.clone(),
            expected_lhs: v(lhs),
            expected: rhs.split('+').map(|t| t.trim().to_string()).collect(),
        });
    }
}

/// Named specializations of the two-user interference channel with a common
/// message, the broadcast channel with cognitive relays and the three-user
/// interference channel.
pub fn replay_registry() -> Vec<Replay> {
    let mut all = Vec::new();

    let mut b = Builder {
        network: "cic-common",
        j: (vec![1], vec![2]),
        ident: Identification::new(&[("U", &["Z", "M1"]), ("V", &["Z", "M2"]), ("W", &["M0", "Q"])]),
        out: vec![],
    };
    b.add(1, "|M1||M0,M2", "M1", "I(X1;Y1|X2,W)");
    b.add(3, "|M1||M0,M2", "M1", "I(X1;Y1|X2,V,W) + I(V;Y2|X2,W)");
    b.add(1, "|M1||M0", "M1", "I(U,X1;Y1|W)");
    b.add(2, "||M2|M0,M1", "M2", "I(X2;Y2|X1,W)");
    b.add(4, "||M2|M0,M1", "M2", "I(X2;Y2|X1,U,W) + I(U;Y1|X1,W)");
    b.add(2, "||M2|M0", "M2", "I(V,X2;Y2|W)");
    b.add(1, "M0|M1|M2|", "M0,M1", "I(W,U,X1;Y1)");
    b.add(2, "M0|M1|M2|", "M0,M2", "I(W,V,X2;Y2)");
    b.add(3, "|M1|M2|M0", "M1,M2", "I(X1;Y1|X2,V,W) + I(V,X2;Y2|W)");
    b.add(4, "|M1|M2|M0", "M1,M2", "I(X2;Y2|X1,U,W) + I(U,X1;Y1|W)");
    b.add(3, "M0|M1|M2|", "M0,M1,M2", "I(X1;Y1|X2,V,W) + I(W,V,X2;Y2)");
    b.add(4, "M0|M1|M2|", "M0,M1,M2", "I(X2;Y2|X1,U,W) + I(W,U,X1;Y1)");
    all.append(&mut b.out);

    let mut b = Builder {
        network: "bccr",
        j: (vec![1], vec![2]),
        ident: Identification::new(&[("U", &["Z", "M0", "M1"]), ("V", &["Z", "M0", "M2"]), ("W", &["Z", "M0"])]),
        out: vec![],
    };
    for (form, y) in [(1u8, "Y1"), (2, "Y2")] {
        b.add(form, "M0|||M1", "M0", &format!("I(U,W;{y}|X1,Q)"));
        b.add(form, "M0|||M2", "M0", &format!("I(V,W;{y}|X2,Q)"));
        b.add(form, "M0|||M1,M2", "M0", &format!("I(X3;{y}|X1,X2,Q)"));
        b.add(form, "M0|||", "M0", &format!("I(W;{y}|Q)"));
    }
    b.add(1, "M0|M1||M2", "M0,M1", "I(X1,X3;Y1|X2,Q)");
    b.add(3, "M0|M1||", "M0,M1", "I(U,X1;Y1|W,Q) + I(W;Y2|Q)");
    b.add(2, "M0||M2|M1", "M0,M2", "I(X2,X3;Y2|X1,Q)");
    b.add(4, "M0||M2|", "M0,M2", "I(V,X2;Y2|W,Q) + I(W;Y1|Q)");
    b.add(3, "M0|M1||M2", "M0,M1", "I(X1,X3;Y1|X2,V,W,Q) + I(V,W;Y2|X2,Q)");
    b.add(4, "M0||M2|M1", "M0,M2", "I(X2,X3;Y2|X1,U,W,Q) + I(U,W;Y1|X1,Q)");
    b.add(1, "M0|M1|M2|", "M0,M1", "I(U,W,X1;Y1|Q)");
    b.add(2, "M0|M1|M2|", "M0,M2", "I(V,W,X2;Y2|Q)");
    b.add(3, "M0|M1|M2|", "M0,M1,M2", "I(X1,X3;Y1|X2,V,W,Q) + I(V,W,X2;Y2|Q)");
    b.add(4, "M0|M1|M2|", "M0,M1,M2", "I(X2,X3;Y2|X1,U,W,Q) + I(U,W,X1;Y1|Q)");
    b.add(5, "M0|M1|M2|", "M0,M1,M2", "I(X1,X3;Y1|X2,V,W,Q) + I(V,X2;Y2|W,Q) + I(W;Y1|Q)");
    b.add(6, "M0|M1|M2|", "M0,M1,M2", "I(X2,X3;Y2|X1,U,W,Q) + I(U,X1;Y1|W,Q) + I(W;Y2|Q)");
    all.append(&mut b.out);

    let mut b = Builder {
        network: "cic3",
        j: (vec![1], vec![2, 3]),
        ident: Identification::new(&[("U1_23", &["Z", "M1"]), ("V1_23", &["Z", "M2", "M3"])]),
        out: vec![],
    };
    b.add(1, "|M1||M2,M3", "M1", "I(X1;Y1|X2,X3,Q)");
    b.add(1, "|M1||", "M1", "I(U1_23,X1;Y1|Q)");
    b.add(2, "||M2,M3|", "M2,M3", "I(V1_23,X2,X3;Y2,Y3|Q)");
    b.add(3, "|M1|M2,M3|", "M1,M2,M3", "I(X1;Y1|X2,X3,V1_23,Q) + I(V1_23,X2,X3;Y2,Y3|Q)");
    b.add(4, "|M1|M2,M3|", "M1,M2,M3", "I(X2,X3;Y2,Y3|X1,U1_23,Q) + I(U1_23,X1;Y1|Q)");
    all.append(&mut b.out);

    let mut b = Builder {
        network: "cic3",
        j: (vec![1], vec![2]),
        ident: Identification::new(&[("U1", &["Z", "M1", "M3"]), ("V1", &["Z", "M2", "M3"])]),
        out: vec![],
    };
    b.add(1, "|M1||M3", "M1", "I(U1,X1;Y1|X3,Q)");
    b.add(2, "||M2|M3", "M2", "I(V1,X2;Y2|X3,Q)");
    b.add(3, "|M1|M2|M3", "M1,M2", "I(X1;Y1|X2,X3,V1,Q) + I(V1,X2;Y2|X3,Q)");
    b.add(4, "|M1|M2|M3", "M1,M2", "I(X2;Y2|X1,X3,U1,Q) + I(U1,X1;Y1|X3,Q)");
    all.append(&mut b.out);
    all
}

fn normalized(terms: &[MiTerm]) -> Vec<String> {
    let mut v: Vec<String> = terms.iter().map(sorted_term).collect();
    v.sort();
    v
}

fn sorted(v: &[String]) -> Vec<String> {
    let mut v = v.to_vec();
    v.sort();
    v
}

/// Rebuilds every registry entry from the enumerated templates and checks
/// the specialized inequality against the expected one.
pub fn run_replays(mu_max: usize) -> Result<Vec<ReplayOutcome>> {
    let nets = networks();
    let mut listed: HashMap<&'static str, Vec<BoundTemplate>> = HashMap::new();
    for (name, topo, mode) in &nets {
        listed.insert(name, enumerate_bound_templates_with(topo, &EnumerateOptions::new(mu_max, *mode))?);
    }
    let mut out = Vec::new();
    for r in replay_registry() {
        let (_, topo, _) = nets.iter().find(|(n, _, _)| *n == r.network).expect("registered network");
        let t = BoundTemplate::reduced(
            topo,
            &r.j1,
            &r.j2,
            r.form,
            r.common.clone(),
            r.first.clone(),
            r.second.clone(),
            r.side.clone(),
        )?;
        let key = t.key();
        let enumerated = listed[r.network].iter().any(|e| e.j1 == t.j1 && e.j2 == t.j2 && e.key() == key);
        let spec = specialize_bound(&t, topo, &r.identification)?;
        let expected: Vec<MiTerm> = r.expected.iter().map(|s| MiTerm::parse(s)).collect::<Result<_>>()?;
        let matches = spec.tail.is_none()
            && sorted(&spec.lhs) == sorted(&r.expected_lhs)
            && normalized(&spec.terms) == normalized(&expected);
        let lhs: Vec<String> = r.expected_lhs.iter().map(|m| crate::regions::rate_name(m)).collect();
        out.push(ReplayOutcome {
            id: r.id.clone(),
            network: r.network,
            expected: format!("{} <= {}", lhs.join("+"), r.expected.join("+")),
            obtained: spec.to_string(),
            enumerated,
            matches,
            specialized: spec,
        });
    }
    Ok(out)
}
