use anyhow::{anyhow, bail, Context, Result};
use serde_json::{json, Value};

use ifnetlab::boundsgen::{
    enumerate_bound_templates_with, run_replays, templates_json, BoundMode, EnumerateOptions,
};
use ifnetlab::netmodel::{load_channel_spec, DiscreteChannel, GaussianNetwork, Network};
use ifnetlab::ratepoly::{region_compare, CompareVerdict, RegionEstimate};
use ifnetlab::regimes::{
    check_catalog, gaussian_gain_check, gaussian_gain_check_split, lemma2_witness, verify_extension_lemma,
    verify_two_letter, CatalogOptions, CheckOptions, LemmaInequality, DISCRETE_IDS, GAUSSIAN_IDS,
};
use ifnetlab::regions::{
    lessnoisy_sumrate, region_template, sweep_template, templates_for, AuxCards, SumRateKind, SumRateOptions,
    SweepOptions, TEMPLATE_IDS,
};

use crate::output::{Sink, Status};
use crate::{BoundsAction, Command, Config, Mode};

/// Alphabet cap of the two-use extension in `verify-lemma 3`.
const TWO_LETTER_CAP: usize = 16;
/// Largest symbolic residual accepted by `verify-lemma 2`.
const WITNESS_RESIDUAL: f64 = 1e-12;

struct Ctx<'a> {
    cfg: &'a Config,
    aux: AuxCards,
    sink: Sink,
    network: Option<Network>,
}

impl Ctx<'_> {
    fn network(&self) -> Result<&Network> {
        self.network.as_ref().ok_or_else(|| anyhow!("this command needs --channel <path>"))
    }

    fn discrete(&self) -> Result<&DiscreteChannel> {
        match self.network()? {
            Network::Discrete(c) => Ok(c),
            Network::Gaussian(_) => bail!("this command needs a discrete channel"),
        }
    }

    fn gaussian(&self) -> Result<&GaussianNetwork> {
        match self.network()? {
            Network::Gaussian(g) => Ok(g),
            Network::Discrete(_) => bail!("this command needs a Gaussian network"),
        }
    }

    fn check_options(&self, samples: usize) -> CheckOptions {
        CheckOptions {
            grid: self.cfg.grid,
            tol: self.cfg.tol,
            samples,
            seed: self.cfg.seed,
            workers: self.cfg.workers,
            ..CheckOptions::default()
        }
    }

    fn sweep_options(&self) -> SweepOptions {
        SweepOptions { grid: self.cfg.grid, workers: self.cfg.workers }
    }

    /// Run parameters echoed into every report; the worker count is left out
    /// since it never changes the output.
    fn config_json(&self, command: &str) -> Value {
        json!({
            "command": command,
            "channel": self.cfg.channel.as_ref().map(|p| p.display().to_string()),
            "grid": self.cfg.grid,
            "aux": self.aux,
            "tol": self.cfg.tol,
            "seed": self.cfg.seed,
        })
    }
}

fn validate_config(cfg: &Config) -> Result<()> {
    if let Some(p) = &cfg.channel {
        if !p.is_file() {
            bail!("channel spec {} is not a readable file", p.display());
        }
    }
    if !(cfg.tol.is_finite() && cfg.tol > 0.0) {
        bail!("--tol must be a positive number");
    }
    if cfg.grid == Some(0) {
        bail!("--grid must be at least 1");
    }
    if cfg.workers == Some(0) {
        bail!("--workers must be at least 1");
    }
    Ok(())
}

pub fn dispatch(cfg: &Config, command: Command) -> Result<Status> {
    validate_config(cfg)?;
    let aux = match &cfg.aux {
        Some(s) => AuxCards::parse(s)?,
        None => AuxCards::default(),
    };
    let sink = Sink::prepare(cfg.out.as_deref())?;
    let listing = matches!(command, Command::Check { list: true, .. } | Command::Region { list: true, .. });
    let needs_channel = !listing && !matches!(command, Command::Bounds { action: BoundsAction::Replay { .. } });
    let network = match &cfg.channel {
        Some(p) => Some(load_channel_spec(p).with_context(|| format!("loading {}", p.display()))?),
        None if needs_channel => bail!("this command needs --channel <path>"),
        None => None,
    };
    let ctx = Ctx { cfg, aux, sink, network };
    match command {
        Command::Validate => validate(&ctx),
        Command::Check { list: true, .. } => {
            for id in DISCRETE_IDS.iter().chain(GAUSSIAN_IDS) {
                println!("{id}");
            }
            Ok(Status::Success)
        }
        Command::Check { id, samples, .. } => check(&ctx, &required(id, "condition id")?, samples),
        Command::Region { list: true, .. } => {
            let ids = match &ctx.network {
                Some(Network::Discrete(c)) => templates_for(c),
                _ => TEMPLATE_IDS.to_vec(),
            };
            for id in ids {
                println!("{id}");
            }
            Ok(Status::Success)
        }
        Command::Region { id, .. } => region(&ctx, &required(id, "template id")?),
        Command::Compare { a, b } => compare(&ctx, &a, &b),
        Command::Bounds { action: BoundsAction::Enumerate { mu, mode, group_size, cap } } => {
            bounds_enumerate(&ctx, mu, mode, group_size, cap)
        }
        Command::Bounds { action: BoundsAction::Replay { mu } } => bounds_replay(&ctx, mu),
        Command::VerifyLemma { which, samples, row, split } => match which {
            2 => lemma_gaussian(&ctx, split),
            _ => lemma_discrete(&ctx, which, samples, row.as_deref()),
        },
        Command::Sumrate { kind, waive_condition } => sumrate(&ctx, &kind, waive_condition),
    }
}

fn required(id: Option<String>, what: &str) -> Result<String> {
    id.ok_or_else(|| anyhow!("missing {what} (use --list to see the known ids)"))
}

fn validate(ctx: &Ctx) -> Result<Status> {
    let net = ctx.network()?;
    let t = net.topology();
    let mut report = json!({
        "config": ctx.config_json("validate"),
        "valid": true,
        "kind": match net { Network::Discrete(_) => "discrete", Network::Gaussian(_) => "gaussian" },
        "k1": t.k1,
        "k2": t.k2,
        "messages": t.messages,
        "adjacency": t.adjacency,
    });
    if let Network::Discrete(c) = net {
        report["input_alphabets"] = json!(c.input_alphabets);
        report["output_alphabets"] = json!(c.output_alphabets);
        report["region_templates"] = json!(templates_for(c));
    }
    ctx.sink.report("validate", report)?;
    Ok(Status::Success)
}

fn check(ctx: &Ctx, id: &str, samples: usize) -> Result<Status> {
    if GAUSSIAN_IDS.contains(&id) {
        let r = gaussian_gain_check(ctx.gaussian()?, id)?;
        let report = json!({
            "config": ctx.config_json("check"),
            "id": r.id,
            "verdict": if r.holds { "HOLDS" } else { "FAILS" },
            "witnesses": r.witnesses,
            "notes": r.notes,
        });
        ctx.sink.report(&format!("check_{id}"), report)?;
        return Ok(Status::of_bool(r.holds));
    }
    let catalog = CatalogOptions { aux_card: ctx.aux.v, d_card: ctx.aux.d, ..CatalogOptions::default() };
    let r = check_catalog(ctx.discrete()?, id, &catalog, &ctx.check_options(samples))?;
    let mut report = r.to_json();
    report["config"] = ctx.config_json("check");
    ctx.sink.report(&format!("check_{id}"), report)?;
    Ok(Status::of_verdict(r.verdict))
}

fn sweep(ctx: &Ctx, id: &str) -> Result<RegionEstimate> {
    let channel = ctx.discrete()?;
    let tpl = region_template(id, channel, &ctx.aux)?;
    Ok(sweep_template(&tpl, channel, &ctx.sweep_options())?)
}

/// Support along each coordinate axis.
fn caps(est: &RegionEstimate) -> Value {
    let mut out = serde_json::Map::new();
    for (k, name) in est.variables.iter().enumerate() {
        let axis = est.directions.iter().position(|d| d.iter().enumerate().all(|(i, &x)| x == if i == k { 1.0 } else { 0.0 }));
        out.insert(name.clone(), json!(axis.map(|a| est.support[a])));
    }
    Value::Object(out)
}

fn write_region(ctx: &Ctx, stem: &str, est: &RegionEstimate) -> Result<(String, String)> {
    let (support, samples) = (format!("{stem}_support.csv"), format!("{stem}_samples.csv"));
    let mut buf = Vec::new();
    est.write_support_csv(&mut buf)?;
    ctx.sink.write(&support, &buf)?;
    buf.clear();
    est.write_samples_csv(&mut buf)?;
    ctx.sink.write(&samples, &buf)?;
    Ok((support, samples))
}

fn region(ctx: &Ctx, id: &str) -> Result<Status> {
    let est = sweep(ctx, id)?;
    let stem = format!("region_{id}");
    let (support, samples) = write_region(ctx, &stem, &est)?;
    let report = json!({
        "config": ctx.config_json("region"),
        "id": id,
        "variables": est.variables,
        "grid_version": est.grid_version,
        "directions": est.directions.len(),
        "caps": caps(&est),
        "extreme_points": est.distinct_samples().len(),
        "support_csv": support,
        "samples_csv": samples,
    });
    ctx.sink.report(&stem, report)?;
    Ok(Status::Success)
}

fn compare(ctx: &Ctx, a: &str, b: &str) -> Result<Status> {
    let (ea, eb) = (sweep(ctx, a)?, sweep(ctx, b)?);
    let stem = format!("compare_{a}_{b}");
    write_region(ctx, &format!("{stem}_a"), &ea)?;
    write_region(ctx, &format!("{stem}_b"), &eb)?;
    let r = region_compare(&ea, &eb, ctx.cfg.tol)?;
    let report = json!({
        "config": ctx.config_json("compare"),
        "a": a,
        "b": b,
        "variables": ea.variables,
        "verdict": r.verdict,
        "max_gap": r.max_gap,
        "a_exceeds_b": r.a_exceeds_b,
        "b_exceeds_a": r.b_exceeds_a,
        "worst_direction": r.worst_direction,
    });
    ctx.sink.report(&stem, report)?;
    Ok(Status::of_bool(r.verdict == CompareVerdict::Equal))
}

fn bounds_enumerate(ctx: &Ctx, mu: Option<usize>, mode: Mode, group_size: usize, cap: u64) -> Result<Status> {
    let topo = ctx.network()?.topology();
    let mode = match mode {
        Mode::TwoRx => BoundMode::TwoRx,
        Mode::MultiRx => BoundMode::MultiRx,
    };
    let mu = mu.unwrap_or_else(|| topo.rx_messages.iter().map(Vec::len).max().unwrap_or(1).max(1));
    let opts = EnumerateOptions { group_size, cap, ..EnumerateOptions::new(mu, mode) };
    let list = enumerate_bound_templates_with(topo, &opts)?;
    let report = json!({
        "config": ctx.config_json("bounds enumerate"),
        "mode": mode,
        "mu_max": mu,
        "count": list.len(),
        "templates": templates_json(&list),
    });
    ctx.sink.report("bounds_enumerate", report)?;
    Ok(Status::Success)
}

fn bounds_replay(ctx: &Ctx, mu: usize) -> Result<Status> {
    let outcomes = run_replays(mu)?;
    let ok = outcomes.iter().all(|o| o.matches && o.enumerated);
    let rows: Vec<Value> = outcomes
        .iter()
        .map(|o| {
            json!({
                "id": o.id,
                "network": o.network,
                "expected": o.expected,
                "obtained": o.obtained,
                "enumerated": o.enumerated,
                "matches": o.matches,
                "audit": o.specialized.audit,
            })
        })
        .collect();
    let report = json!({
        "config": ctx.config_json("bounds replay"),
        "mu_max": mu,
        "total": outcomes.len(),
        "matched": outcomes.iter().filter(|o| o.matches && o.enumerated).count(),
        "replays": rows,
    });
    ctx.sink.report("bounds_replay", report)?;
    Ok(Status::of_bool(ok))
}

fn index_list(s: &str, what: &str) -> Result<Vec<usize>> {
    s.split(',')
        .map(str::trim)
        .filter(|x| !x.is_empty())
        .map(|x| match x.parse::<usize>() {
            Ok(n) if n >= 1 => Ok(n - 1),
            _ => Err(anyhow!("bad {what} index {x:?} in --row")),
        })
        .collect()
}

fn parse_row(s: &str) -> Result<LemmaInequality> {
    let parts: Vec<&str> = s.split('|').collect();
    if parts.len() != 4 {
        bail!("--row expects four |-separated lists, got {s:?}");
    }
    Ok(LemmaInequality {
        signal: index_list(parts[0], "signal")?,
        given: index_list(parts[1], "input")?,
        weaker: index_list(parts[2], "receiver")?,
        stronger: index_list(parts[3], "receiver")?,
        aux_u: None,
    })
}

fn lemma_rows(channel: &DiscreteChannel, row: Option<&str>) -> Result<Vec<LemmaInequality>> {
    if let Some(r) = row {
        return Ok(vec![parse_row(r)?]);
    }
    let t = &channel.topology;
    if t.k1 != 2 || t.k2 != 2 {
        bail!("the default inequalities need two inputs and two outputs; pass --row");
    }
    let row = |s, g| LemmaInequality { signal: vec![s], given: vec![g], weaker: vec![s], stronger: vec![g], aux_u: None };
    Ok(vec![row(0, 1), row(1, 0)])
}

fn lemma_discrete(ctx: &Ctx, which: u8, samples: Option<usize>, row: Option<&str>) -> Result<Status> {
    let channel = ctx.discrete()?;
    let opts = ctx.check_options(CheckOptions::default().samples);
    let samples = samples.unwrap_or(if which == 3 { 100 } else { 200 });
    let mut ok = true;
    let mut results = Vec::new();
    for mut ineq in lemma_rows(channel, row)? {
        if which == 4 {
            ineq.aux_u = Some(ctx.aux.u);
        }
        let r = if which == 3 {
            verify_two_letter(channel, &ineq, samples, ctx.aux.d, TWO_LETTER_CAP, &opts)?
        } else {
            verify_extension_lemma(channel, &ineq, samples, ctx.aux.d, &opts)?
        };
        ok &= r.violations_over_tol == 0;
        results.push(json!({ "inequality": ineq, "result": r }));
    }
    let report = json!({
        "config": ctx.config_json("verify-lemma"),
        "lemma": which,
        "verdict": if ok { "HOLDS" } else { "FAILS" },
        "inequalities": results,
    });
    ctx.sink.report(&format!("verify_lemma_{which}"), report)?;
    Ok(Status::of_bool(ok))
}

fn lemma_gaussian(ctx: &Ctx, split: usize) -> Result<Status> {
    let net = ctx.gaussian()?;
    let gain = gaussian_gain_check_split(net, "G-LEMMA2", split)?;
    let mut report = json!({
        "config": ctx.config_json("verify-lemma"),
        "lemma": 2,
        "split": [split, net.topology.k1.saturating_sub(split)],
        "ratio_check": gain,
    });
    let alpha = gain.witnesses.iter().find(|(n, _)| n == "alpha").map(|(_, a)| *a);
    let ok = match (gain.holds, alpha) {
        (true, Some(alpha)) => {
            let w = lemma2_witness(net, (split, net.topology.k1 - split), alpha)?;
            let ok = w.mean_residual <= WITNESS_RESIDUAL && w.variance_residual <= WITNESS_RESIDUAL;
            report["construction"] = json!(w);
            ok
        }
        _ => false,
    };
    report["verdict"] = json!(if ok { "HOLDS" } else { "FAILS" });
    ctx.sink.report("verify_lemma_2", report)?;
    Ok(Status::of_bool(ok))
}

fn sumrate(ctx: &Ctx, kind: &str, waive: bool) -> Result<Status> {
    let kind: SumRateKind = kind.parse()?;
    let opts = SumRateOptions { grid: ctx.cfg.grid, waive_condition: waive, workers: ctx.cfg.workers };
    let r = lessnoisy_sumrate(kind, ctx.network()?, &opts)?;
    let mut report = r.to_json();
    report["config"] = ctx.config_json("sumrate");
    report["kind"] = json!(kind);
    ctx.sink.report(&format!("sumrate_{}", json!(kind).as_str().unwrap_or("kind")), report)?;
    Ok(Status::Success)
}
