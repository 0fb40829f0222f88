use super::crccm::crccm_sup_rows;
use super::generic::{compound_rows, han_rows, message_template, superposition_template, SuperpositionMode};
use super::{AuxCards, RegionTemplate, TemplateRow};
use crate::error::{Error, Result};
use crate::expr::{LinExpr, MiTerm};
use crate::infocalc::{Factor, FamilySpec};
use crate::netmodel::{build_maccm_plan, DiscreteChannel, NetworkTopology};

pub const TEMPLATE_IDS: &[&str] = &[
    "T-CRC-NEW",
    "T-CRC-SUP",
    "T-CICCM-SW",
    "T-CICCM-HAN",
    "T-CICCM-STRONG",
    "T-CIC-1SIDED",
    "T-BCCR-STRONG",
    "T-BCCR-LN-ACH",
    "T-BCCR-1SIDED",
    "T-M2ONE",
    "T-3CIC-ALL",
    "T-3CIC-STRONG",
    "T-3CIC-ALMOST",
    "T-GEN-COMPOUND",
    "T-GEN-SUP-ALL",
    "T-GEN-SUP-OWN",
    "T-MAIN2-OUTER",
    "T-CRCCM-OUTER",
    "T-CRCCM-CAP",
    "T-CRCCM-SUP",
];

/// `I(a;b|c)`, sets comma-separated.
pub(crate) fn i(a: &str, b: &str, c: &str) -> LinExpr {
    LinExpr::sum([MiTerm::of(a, b, c)])
}

/// Sum of several `I(a;b|c)` terms.
pub(crate) fn isum(terms: &[(&str, &str, &str)]) -> LinExpr {
    LinExpr::sum(terms.iter().map(|(a, b, c)| MiTerm::of(a, b, c)))
}

/// Two transmitters with private messages and an optional shared one; the
/// demand sets are free since every receiver decodes everything.
fn two_user_senders(topo: &NetworkTopology) -> Option<bool> {
    let plain = NetworkTopology::two_user_cic();
    let common = NetworkTopology::two_user_cic_common();
    if topo.k1 != 2 || topo.k2 != 2 {
        None
    } else if topo.tx_messages == common.tx_messages {
        Some(true)
    } else if topo.tx_messages == plain.tx_messages {
        Some(false)
    } else {
        None
    }
}

fn same_messages(topo: &NetworkTopology, want: &NetworkTopology) -> bool {
    topo.k1 == want.k1 && topo.k2 == want.k2 && topo.tx_messages == want.tx_messages && topo.rx_messages == want.rx_messages
}

fn require(id: &str, ok: bool, what: &str) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(Error::TopologyMismatch(format!("{id} needs {what}")))
    }
}

fn inputs(channel: &DiscreteChannel) -> Vec<(String, usize)> {
    channel.input_vars()
}

fn product_family(channel: &DiscreteChannel) -> FamilySpec {
    FamilySpec::product(&inputs(channel))
}

fn joint_inputs_family(channel: &DiscreteChannel) -> FamilySpec {
    let names: Vec<String> = inputs(channel).into_iter().map(|(n, _)| n).collect();
    FamilySpec::new(inputs(channel), vec![Factor::marginal(&names)])
}

/// `P(W) P(X1|W) P(X2|W)`.
fn w_family(channel: &DiscreteChannel, w: usize) -> FamilySpec {
    let mut cards = vec![("W".to_string(), w)];
    cards.extend(inputs(channel));
    FamilySpec::new(cards, vec![Factor::marginal(&["W"]), Factor::new(&["X1"], &["W"]), Factor::new(&["X2"], &["W"])])
}

/// `P(X1) P(X2) P(X3|X1,X2)`.
fn relay_family(channel: &DiscreteChannel) -> FamilySpec {
    FamilySpec::new(
        inputs(channel),
        vec![Factor::marginal(&["X1"]), Factor::marginal(&["X2"]), Factor::new(&["X3"], &["X1", "X2"])],
    )
}

fn tpl(id: &str, rates: &[&str], family: FamilySpec, rows: Vec<TemplateRow>) -> RegionTemplate {
    RegionTemplate {
        id: id.to_string(),
        rates: rates.iter().map(|s| s.to_string()).collect(),
        eliminate: vec![],
        family,
        rows,
        notes: vec![],
    }
}

/// Drops `R0` from rows when the network has no common message; rows left
/// without rates are removed.
fn without_common(mut t: RegionTemplate) -> RegionTemplate {
    t.rates.retain(|r| r != "R0");
    t.rows = t
        .rows
        .into_iter()
        .filter_map(|mut r| {
            r.terms.retain(|(n, _)| n != "R0");
            (!r.terms.is_empty()).then_some(r)
        })
        .collect();
    t
}

fn row(rates: &str, bounds: Vec<LinExpr>) -> TemplateRow {
    TemplateRow::new(rates, bounds)
}

/// The `R_S <= min_j I(X_S; Y_j | X_rest)` rows over the receivers listed per
/// subset, for three-transmitter product families.
fn three_user_rows(spec: &[(&str, &[&str])]) -> Vec<TemplateRow> {
    spec.iter()
        .map(|(set, outs)| {
            let idx: Vec<usize> = set.chars().filter_map(|c| c.to_digit(10)).map(|d| d as usize).collect();
            let xs: Vec<String> = idx.iter().map(|&k| format!("X{k}")).collect();
            let rest: Vec<String> = (1..=3).filter(|k| !idx.contains(k)).map(|k| format!("X{k}")).collect();
            let rates: Vec<String> = idx.iter().map(|k| format!("R{k}")).collect();
            let bounds = outs.iter().map(|y| i(&xs.join(","), y, &rest.join(","))).collect();
            row(&rates.join("+"), bounds)
        })
        .collect()
}

pub fn region_template(id: &str, channel: &DiscreteChannel, aux: &AuxCards) -> Result<RegionTemplate> {
    let topo = &channel.topology;
    let three = NetworkTopology::k_user_cic(3, None)?;
    match id {
        "T-CRC-NEW" | "T-CRC-SUP" => {
            require(id, same_messages(topo, &NetworkTopology::crc()), "the cognitive radio message layout")?;
            let rows = if id == "T-CRC-NEW" {
                vec![row("R1", vec![i("X1", "Y1", "X2")]), row("R1+R2", vec![i("X1,X2", "Y2", "")])]
            } else {
                vec![
                    row("R1", vec![i("X1", "Y1", "X2"), i("X1", "Y2", "X2")]),
                    row("R1+R2", vec![i("X1,X2", "Y1", ""), i("X1,X2", "Y2", "")]),
                ]
            };
            Ok(tpl(id, &["R1", "R2"], joint_inputs_family(channel), rows))
        }
        "T-CICCM-SW" | "T-CICCM-STRONG" | "T-CIC-1SIDED" => {
            let layout = two_user_senders(topo);
            require(id, layout.is_some(), "two transmitters with their own messages")?;
            let common = layout == Some(true);
            let rows = match id {
                "T-CICCM-SW" => vec![
                    row("R1", vec![i("X1", "Y1", "X2,W"), i("X1", "Y2", "X2,W")]),
                    row("R2", vec![i("X2", "Y2", "X1,W"), i("X2", "Y1", "X1,W")]),
                    row("R1+R2", vec![i("X1,X2", "Y1", "W"), i("X1,X2", "Y2", "W")]),
                    row("R0+R1+R2", vec![i("X1,X2", "Y1", ""), i("X1,X2", "Y2", "")]),
                ],
                "T-CICCM-STRONG" => vec![
                    row("R1", vec![i("X1", "Y1", "X2,W")]),
                    row("R2", vec![i("X2", "Y2", "X1,W")]),
                    row("R1+R2", vec![i("X1,X2", "Y1", "W"), i("X1,X2", "Y2", "W")]),
                    row("R0+R1+R2", vec![i("X1,X2", "Y1", ""), i("X1,X2", "Y2", "")]),
                ],
                _ => vec![
                    row("R2", vec![i("X2", "Y2", "W")]),
                    row("R0+R2", vec![i("X2", "Y2", "")]),
                    row("R1", vec![i("X1", "Y1", "X2,W")]),
                    row("R2", vec![i("X2", "Y1", "X1,W")]),
                    row("R1+R2", vec![i("X1,X2", "Y1", "W")]),
                    row("R0+R1+R2", vec![i("X1,X2", "Y1", "")]),
                ],
            };
            let t = tpl(id, &["R0", "R1", "R2"], w_family(channel, aux.w), rows);
            Ok(if common { t } else { without_common(t) })
        }
        "T-CICCM-HAN" => {
            require(id, two_user_senders(topo).is_some(), "two transmitters with their own messages")?;
            message_template(id, channel, aux.messages, han_rows(topo))
        }
        "T-BCCR-STRONG" | "T-BCCR-LN-ACH" | "T-BCCR-1SIDED" => {
            let common = same_messages(topo, &NetworkTopology::bccr(true));
            require(id, common || same_messages(topo, &NetworkTopology::bccr(false)), "the broadcast-with-relays message layout")?;
            let rows = match id {
                "T-BCCR-STRONG" => vec![
                    row("R0", vec![i("X3", "Y1", "X1,X2"), i("X3", "Y2", "X1,X2")]),
                    row("R0+R1", vec![i("X1,X3", "Y1", "X2")]),
                    row("R0+R2", vec![i("X2,X3", "Y2", "X1")]),
                    row("R0+R1+R2", vec![i("X1,X2,X3", "Y1", ""), i("X1,X2,X3", "Y2", "")]),
                ],
                "T-BCCR-LN-ACH" => vec![
                    row("R0", vec![LinExpr::zero()]),
                    row("R1", vec![i("X1,X3", "Y1", "X2")]),
                    row("R2", vec![i("X2", "Y2", ""), i("X2", "Y1", "")]),
                ],
                _ => vec![
                    row("R0", vec![LinExpr::zero()]),
                    row("R2", vec![i("X2", "Y2", "")]),
                    row("R1", vec![i("X1,X3", "Y1", "X2")]),
                    row("R2", vec![i("X2,X3", "Y1", "X1")]),
                    row("R1+R2", vec![i("X1,X2,X3", "Y1", "")]),
                ],
            };
            let t = tpl(id, &["R0", "R1", "R2"], relay_family(channel), rows);
            Ok(if common { t } else { without_common(t) })
        }
        "T-M2ONE" | "T-3CIC-ALL" | "T-3CIC-STRONG" | "T-3CIC-ALMOST" => {
            require(id, same_messages(topo, &three), "a three-user interference layout")?;
            let rows = match id {
                "T-M2ONE" => {
                    let mut r = three_user_rows(&[
                        ("1", &["Y1"]),
                        ("12", &["Y1"]),
                        ("13", &["Y1"]),
                        ("123", &["Y1"]),
                    ]);
                    r.insert(1, row("R2", vec![i("X2", "Y2", "")]));
                    r.insert(2, row("R3", vec![i("X3", "Y3", "")]));
                    r
                }
                "T-3CIC-ALL" => {
                    let all: &[&str] = &["Y1", "Y2", "Y3"];
                    three_user_rows(&[("1", all), ("2", all), ("3", all), ("12", all), ("13", all), ("23", all), ("123", all)])
                }
                "T-3CIC-STRONG" => three_user_rows(&[
                    ("1", &["Y1"]),
                    ("2", &["Y2"]),
                    ("3", &["Y3"]),
                    ("12", &["Y1", "Y2"]),
                    ("13", &["Y1", "Y3"]),
                    ("23", &["Y2", "Y3"]),
                    ("123", &["Y1", "Y2", "Y3"]),
                ]),
                _ => three_user_rows(&[
                    ("1", &["Y1"]),
                    ("2", &["Y2"]),
                    ("3", &["Y3"]),
                    ("12", &["Y1", "Y2"]),
                    ("13", &["Y3"]),
                    ("23", &["Y2", "Y3"]),
                    ("123", &["Y2", "Y3"]),
                ]),
            };
            Ok(tpl(id, &["R1", "R2", "R3"], product_family(channel), rows))
        }
        "T-GEN-COMPOUND" => message_template(id, channel, aux.messages, compound_rows(topo)),
        "T-GEN-SUP-ALL" | "T-GEN-SUP-OWN" => {
            let mode = if id == "T-GEN-SUP-ALL" { SuperpositionMode::All } else { SuperpositionMode::Own };
            superposition_template(id, &build_maccm_plan(topo), channel, aux.w, mode)
        }
        "T-MAIN2-OUTER" => {
            let want = NetworkTopology::from_lists(&[&["M1"], &["M2"], &["M3"]], &[&["M1", "M2"], &["M3"]], vec![vec![true; 3]; 2])?;
            require(id, same_messages(topo, &want), "transmitters X1,X2 for receiver 1 and X3 for receiver 2")?;
            let mut cards = vec![("U1".to_string(), aux.u), ("U2".to_string(), aux.u), ("V".to_string(), aux.v)];
            cards.extend(inputs(channel));
            let family = FamilySpec::new(
                cards,
                vec![
                    Factor::marginal(&["X1"]),
                    Factor::marginal(&["X2"]),
                    Factor::marginal(&["X3"]),
                    Factor::new(&["U1", "U2", "V"], &["X1", "X2", "X3"]),
                ],
            );
            let rows = vec![
                row("R1", vec![i("X1", "Y1", "X2,X3"), isum(&[("X1", "Y1", "U2,V,X2,X3"), ("U2,V", "Y2", "X2,X3")])]),
                row("R2", vec![i("X2", "Y1", "X1,X3"), isum(&[("X2", "Y1", "U1,V,X1,X3"), ("U1,V", "Y2", "X1,X3")])]),
                row("R3", vec![i("X3", "Y2", "X1,X2"), isum(&[("X3", "Y2", "U1,U2,X1,X2"), ("U1,U2", "Y1", "X1,X2")])]),
                row("R1+R2", vec![i("X1,X2", "Y1", "X3"), isum(&[("X1,X2", "Y1", "V,X3"), ("V", "Y2", "X3")])]),
                row(
                    "R2+R3",
                    vec![
                        isum(&[("X2", "Y1", "U1,V,X1,X3"), ("U1,V,X3", "Y2", "X1")]),
                        isum(&[("X3", "Y2", "U1,U2,X1,X2"), ("U1,U2,X2", "Y1", "X1")]),
                    ],
                ),
                row(
                    "R1+R3",
                    vec![
                        isum(&[("X1", "Y1", "U2,V,X2,X3"), ("U2,V,X3", "Y2", "X2")]),
                        isum(&[("X3", "Y2", "U1,U2,X1,X2"), ("U1,U2,X1", "Y1", "X2")]),
                    ],
                ),
                row(
                    "R1+R2+R3",
                    vec![
                        isum(&[("X1,X2", "Y1", "V,X3"), ("V,X3", "Y2", "")]),
                        isum(&[("X3", "Y2", "U1,U2,X1,X2"), ("U1,U2,X1,X2", "Y1", "")]),
                    ],
                ),
            ];
            Ok(tpl(id, &["R1", "R2", "R3"], family, rows))
        }
        "T-CRCCM-OUTER" | "T-CRCCM-CAP" | "T-CRCCM-SUP" => {
            require(id, same_messages(topo, &NetworkTopology::crccm()), "the cognitive radio layout with a common message")?;
            let rates = &["R0", "R1", "R2"];
            match id {
                "T-CRCCM-OUTER" => {
                    let mut cards = vec![("W".to_string(), aux.w), ("U".to_string(), aux.u), ("V".to_string(), aux.v)];
                    cards.extend(inputs(channel));
                    let family = FamilySpec::new(
                        cards,
                        vec![
                            Factor::marginal(&["W", "U", "V"]),
                            Factor::new(&["X1"], &["U"]).deterministic(),
                            Factor::new(&["X2"], &["U", "V"]).deterministic(),
                        ],
                    );
                    let rows = vec![
                        row(
                            "R0",
                            vec![
                                i("W", "Y1", ""),
                                i("W", "Y2", ""),
                                i("U,W", "Y1", "X1"),
                                i("U,W", "Y2", "X1"),
                                i("X2", "Y1", "X1"),
                                i("X2", "Y2", "X1"),
                            ],
                        ),
                        row(
                            "R0+R1",
                            vec![i("X1,X2", "Y1", ""), i("U,W,X1", "Y1", ""), isum(&[("U,X1", "Y1", "W"), ("W", "Y2", "")])],
                        ),
                        row(
                            "R0+R2",
                            vec![
                                i("X2", "Y2", "X1"),
                                i("V,W", "Y2", ""),
                                isum(&[("V", "Y2", "W"), ("W", "Y1", "")]),
                                isum(&[("X2", "Y2", "X1,U,W"), ("U,W", "Y1", "X1")]),
                            ],
                        ),
                        row(
                            "R0+R1+R2",
                            vec![
                                isum(&[("X1,X2", "Y1", "V,W"), ("V,W", "Y2", "")]),
                                isum(&[("X2", "Y2", "X1,U,W"), ("U,W,X1", "Y1", "")]),
                                isum(&[("X1,X2", "Y1", "V,W"), ("V", "Y2", "W"), ("W", "Y1", "")]),
                                isum(&[("X2", "Y2", "X1,U,W"), ("U,X1", "Y1", "W"), ("W", "Y2", "")]),
                            ],
                        ),
                    ];
                    let mut t = tpl(id, rates, family, rows);
                    t.notes.push("X2 carries the cognitive transmitter's input".into());
                    Ok(t)
                }
                "T-CRCCM-CAP" => {
                    let mut cards = vec![("U".to_string(), aux.u)];
                    cards.extend(inputs(channel));
                    let family = FamilySpec::new(cards, vec![Factor::marginal(&["U", "X1", "X2"])]);
                    Ok(tpl(id, rates, family, crccm_cap_rows()))
                }
                _ => {
                    let mut cards = vec![("W1".to_string(), aux.w), ("WB".to_string(), aux.w), ("VB".to_string(), aux.v)];
                    cards.extend(inputs(channel));
                    let family = FamilySpec::new(
                        cards,
                        vec![
                            Factor::marginal(&["W1"]),
                            Factor::new(&["X1"], &["W1"]),
                            Factor::new(&["WB", "VB"], &["W1"]),
                            Factor::new(&["X2"], &["X1", "VB", "WB", "W1"]),
                        ],
                    );
                    let mut t = tpl(id, &["R0", "R1", "R2", "R20", "R22"], family, crccm_sup_rows("W1", "WB", "VB"));
                    t.eliminate = vec!["R20".into(), "R22".into()];
                    Ok(t)
                }
            }
        }
        _ if TEMPLATE_IDS.contains(&id) => unreachable!("every listed template is matched"),
        _ => Err(Error::TemplateUnknown(id.to_string())),
    }
}

pub(crate) fn crccm_cap_rows() -> Vec<TemplateRow> {
    vec![
        row("R0", vec![i("U", "Y1", "X1")]),
        row("R0+R1", vec![i("U,X1", "Y1", "")]),
        row("R0+R2", vec![i("X2", "Y2", "X1"), isum(&[("X2", "Y2", "U,X1"), ("U", "Y1", "X1")])]),
        row("R0+R1+R2", vec![isum(&[("X2", "Y2", "U,X1"), ("U,X1", "Y1", "")]), i("X1,X2", "Y2", "")]),
    ]
}

/// Template ids whose message layout matches the channel, in catalog order.
pub fn templates_for(channel: &DiscreteChannel) -> Vec<&'static str> {
    TEMPLATE_IDS
        .iter()
        .copied()
        .filter(|id| !matches!(region_template(id, channel, &AuxCards::default()), Err(Error::TopologyMismatch(_))))
        .collect()
}
