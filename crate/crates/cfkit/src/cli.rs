//! Command-line surface: file-driven validation, transformation, witness
//! checking and search, factor diagnostics, and report emission.
//!
//! Exit codes: 0 = verdict pass / success, 1 = verdict fail / not found,
//! 2 = input error. Reports are human-readable by default; `--json` switches
//! to the machine format, which is byte-identical across runs on identical
//! inputs.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Parser, Subcommand, ValueEnum};
use num::BigRational;
use serde::Deserialize;
use serde_json::json;

use crate::error::{CfError, Result};
use crate::factor::{
    build_factor_map, check_factor_witness, check_topological_quotient, odometer_defects,
    search_odometer_telescoping, FactorWitness, OdometerSpec,
};
use crate::iso::{
    build_auxiliary, build_isomorphism, check_witness, default_eps, search_witness, IsoWitness,
    SearchBounds, WitnessDoc,
};
use crate::maps::{calibrate, reduce, standardize, telescope, CylinderMap};
use crate::report::{parse_ratio, ratio_string};
use crate::seq::CfSequence;
use crate::space::SeqRef;
use crate::subset::FiniteSubset;

#[derive(Debug, Parser)]
#[command(
    name = "cfkit",
    about = "Exact combinatorics for cutting-and-stacking parameter sequences",
    version
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Emit the machine-readable report instead of prose
    #[arg(long, global = true)]
    pub json: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check the structural clauses of a sequence file and report masses
    Validate {
        path: PathBuf,
    },
    /// Apply an elementary transformation and write the result
    Transform {
        path: PathBuf,
        #[arg(long, value_enum)]
        op: TransformOp,
        /// JSON parameter file: {"z": [...]}, {"l": [...]} or {"A": [[...]]}
        #[arg(long)]
        params: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Check an isomorphism witness against two sequence files
    IsoCheck {
        t: PathBuf,
        tt: PathBuf,
        witness: PathBuf,
    },
    /// Search for an isomorphism witness within bounds
    IsoSearch {
        t: PathBuf,
        tt: PathBuf,
        /// comma-separated tolerances, e.g. "2,1/8,1/16"
        #[arg(long)]
        eps: Option<String>,
        /// deepest level index to use
        #[arg(long)]
        depth: Option<usize>,
        /// cap on candidate subset size
        #[arg(long)]
        budget: Option<usize>,
        /// worker threads (the result does not depend on this)
        #[arg(long, default_value_t = 1)]
        workers: usize,
        /// write the found witness here
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check a factor witness against two sequence files
    FactorCheck {
        t: PathBuf,
        tt: PathBuf,
        witness: PathBuf,
    },
    /// Build the factor map of a passing witness and sample it
    FactorMap {
        t: PathBuf,
        tt: PathBuf,
        witness: PathBuf,
        /// depth at which to tabulate the map (default: deepest witness level)
        #[arg(long)]
        depth: Option<usize>,
    },
    /// Block divisibility defects against an adding-machine spec
    OdometerCheck {
        t: PathBuf,
        odometer: PathBuf,
        /// comma-separated thresholds for the greedy index search
        #[arg(long)]
        threshold: Option<String>,
    },
    /// Telescope and check the quotient conditions for given index and set data
    QuotientCheck {
        t: PathBuf,
        tt: PathBuf,
        /// JSON parameter file: {"k": [...], "A": [[...]]}
        #[arg(long)]
        params: PathBuf,
    },
    /// Find a telescoping and reduction absorbing a window of group elements
    Standardize {
        path: PathBuf,
        /// comma-separated window elements in the text encoding, e.g. "1,-1"
        #[arg(long)]
        window: String,
        #[arg(long, default_value_t = 4)]
        budget: usize,
        /// write {"l": [...], "A": [[...]]} here on success
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum TransformOp {
    Calibrate,
    Telescope,
    Reduce,
}

pub struct CommandOutcome {
    pub exit_code: i32,
    pub human: String,
    pub json: Option<serde_json::Value>,
}

impl CommandOutcome {
    fn pass(human: String, json: serde_json::Value) -> Self {
        CommandOutcome {
            exit_code: 0,
            human,
            json: Some(json),
        }
    }

    fn fail(human: String, json: serde_json::Value) -> Self {
        CommandOutcome {
            exit_code: 1,
            human,
            json: Some(json),
        }
    }

    fn verdict(pass: bool, human: String, json: serde_json::Value) -> Self {
        if pass {
            Self::pass(human, json)
        } else {
            Self::fail(human, json)
        }
    }
}

/// Entry point used by the binary: run, print, return the exit code.
pub fn main_entry() -> i32 {
    let cli = Cli::parse();
    let json_mode = cli.json;
    match run(cli) {
        Ok(outcome) => {
            if json_mode {
                if let Some(doc) = &outcome.json {
                    println!("{}", serde_json::to_string(doc).expect("report serializes"));
                } else {
                    println!("{{}}");
                }
            } else {
                println!("{}", outcome.human.trim_end());
            }
            outcome.exit_code
        }
        Err(err) => {
            eprintln!("error: {err}");
            2
        }
    }
}

pub fn run(cli: Cli) -> Result<CommandOutcome> {
    match cli.command {
        Command::Validate { path } => cmd_validate(&path),
        Command::Transform {
            path,
            op,
            params,
            out,
        } => cmd_transform(&path, op, &params, &out),
        Command::IsoCheck { t, tt, witness } => cmd_iso_check(&t, &tt, &witness),
        Command::IsoSearch {
            t,
            tt,
            eps,
            depth,
            budget,
            workers,
            out,
        } => cmd_iso_search(&t, &tt, eps.as_deref(), depth, budget, workers, out.as_deref()),
        Command::FactorCheck { t, tt, witness } => cmd_factor_check(&t, &tt, &witness),
        Command::FactorMap {
            t,
            tt,
            witness,
            depth,
        } => cmd_factor_map(&t, &tt, &witness, depth),
        Command::OdometerCheck {
            t,
            odometer,
            threshold,
        } => cmd_odometer_check(&t, &odometer, threshold.as_deref()),
        Command::QuotientCheck { t, tt, params } => cmd_quotient_check(&t, &tt, &params),
        Command::Standardize {
            path,
            window,
            budget,
            out,
        } => cmd_standardize(&path, &window, budget, out.as_deref()),
    }
}

fn load_seq(path: &Path) -> Result<SeqRef> {
    let text = std::fs::read_to_string(path)?;
    Ok(Arc::new(CfSequence::from_json(&text)?))
}

fn parse_eps_list(text: &str) -> Result<Vec<BigRational>> {
    text.split(',').map(|p| parse_ratio(p.trim())).collect()
}

fn cmd_validate(path: &Path) -> Result<CommandOutcome> {
    let seq = load_seq(path)?;
    let report = seq.validate();
    let mut human = String::new();
    human.push_str(&format!(
        "sequence with {} block levels\nbase level singleton: {}\n",
        seq.levels(),
        if report.f0_singleton { "ok" } else { "FAIL" }
    ));
    for l in &report.levels {
        human.push_str(&format!(
            "level {}: block size {} | inclusion {} | disjointness {}\n",
            l.level,
            if l.c_size_ok { "ok" } else { "FAIL" },
            if l.inclusion_ok { "ok" } else { "FAIL" },
            if l.disjoint_ok { "ok" } else { "FAIL" },
        ));
        if let Some(d) = &l.detail {
            human.push_str(&format!("  {d}\n"));
        }
    }
    human.push_str(&format!(
        "identity in every tower shape: {}\nidentity in every block set: {}\n",
        report.identity_in_f.iter().all(|&b| b),
        report.identity_in_c.iter().all(|&b| b)
    ));
    human.push_str("masses: ");
    human.push_str(
        &report
            .mass_profile
            .iter()
            .map(ratio_string)
            .collect::<Vec<_>>()
            .join(" "),
    );
    human.push_str(&format!(
        "\nverdict: {}\n",
        if report.accepted { "accepted" } else { "rejected" }
    ));
    let accepted = report.accepted;
    Ok(CommandOutcome::verdict(
        accepted,
        human,
        serde_json::to_value(&report)?,
    ))
}

#[derive(Debug, Deserialize)]
struct TransformParams {
    #[serde(default)]
    z: Option<Vec<String>>,
    #[serde(default)]
    l: Option<Vec<usize>>,
    #[serde(default, rename = "A")]
    a: Option<Vec<Vec<String>>>,
}

fn cmd_transform(
    path: &Path,
    op: TransformOp,
    params_path: &Path,
    out: &Path,
) -> Result<CommandOutcome> {
    let seq = load_seq(path)?;
    let params: TransformParams = serde_json::from_str(&std::fs::read_to_string(params_path)?)?;
    let result = match op {
        TransformOp::Calibrate => {
            let z_texts = params
                .z
                .ok_or_else(|| CfError::ParseError("calibrate needs a \"z\" list".into()))?;
            let z = z_texts
                .iter()
                .map(|t| seq.group().parse(t))
                .collect::<Result<Vec<_>>>()?;
            calibrate(&seq, &z).map(|(s, _)| s)
        }
        TransformOp::Telescope => {
            let l = params
                .l
                .ok_or_else(|| CfError::ParseError("telescope needs an \"l\" list".into()))?;
            telescope(&seq, &l).map(|(s, _)| s)
        }
        TransformOp::Reduce => {
            let lists = params
                .a
                .ok_or_else(|| CfError::ParseError("reduce needs an \"A\" list".into()))?;
            let sets = lists
                .iter()
                .map(|texts| FiniteSubset::parse_canonical(seq.group(), texts))
                .collect::<Result<Vec<_>>>()?;
            reduce(&seq, &sets).map(|(s, _, _)| s)
        }
    };
    match result {
        Ok(transformed) => {
            std::fs::write(out, transformed.to_json() + "\n")?;
            let human = format!(
                "wrote transformed sequence with {} block levels to {}",
                transformed.levels(),
                out.display()
            );
            let doc = json!({"ok": true, "levels": transformed.levels()});
            Ok(CommandOutcome::pass(human, doc))
        }
        Err(CfError::InvariantViolation(msg)) | Err(CfError::PreconditionError(msg)) => Ok(
            CommandOutcome::fail(format!("transform failed: {msg}"), json!({"ok": false, "error": msg})),
        ),
        Err(e) => Err(e),
    }
}

fn load_iso_witness(path: &Path, t: &CfSequence, tt: &CfSequence) -> Result<IsoWitness> {
    let doc: WitnessDoc = serde_json::from_str(&std::fs::read_to_string(path)?)?;
    IsoWitness::from_doc(&doc, t, tt)
}

fn cmd_iso_check(t_path: &Path, tt_path: &Path, witness: &Path) -> Result<CommandOutcome> {
    let t = load_seq(t_path)?;
    let tt = load_seq(tt_path)?;
    let w = load_iso_witness(witness, &t, &tt)?;
    let report = check_witness(&t, &tt, &w)?;
    let mut human = String::new();
    for s in &report.steps {
        human.push_str(&format!("step {}:", s.n));
        if let Some(b) = s.inclusion_ok {
            human.push_str(&format!(" incl {}", if b { "ok" } else { "FAIL" }));
        }
        if let Some(b) = s.injective_ok {
            human.push_str(&format!(" inj {}", if b { "ok" } else { "FAIL" }));
        }
        if let Some(d) = &s.block_defect {
            human.push_str(&format!(" defect {}", ratio_string(d)));
        }
        if let Some(b) = s.inclusion_primed_ok {
            human.push_str(&format!(" | incl' {}", if b { "ok" } else { "FAIL" }));
        }
        if let Some(b) = s.injective_primed_ok {
            human.push_str(&format!(" inj' {}", if b { "ok" } else { "FAIL" }));
        }
        if let Some(d) = &s.block_defect_primed {
            human.push_str(&format!(" defect' {}", ratio_string(d)));
        }
        human.push_str(&format!(" (bound {})\n", ratio_string(&s.bound)));
    }
    human.push_str(&format!("verdict: {}\n", if report.pass { "pass" } else { "fail" }));
    if report.pass {
        // surface the auxiliary pair so callers can take the pipeline further
        let aux = build_auxiliary(&t, &tt, &w)?;
        human.push_str(&format!(
            "auxiliary pair: {} levels, defect sums {}\n",
            aux.depth,
            aux.sums.iter().map(ratio_string).collect::<Vec<_>>().join(" ")
        ));
        let phi = build_isomorphism(&t, &tt, &w)?;
        human.push_str(&format!(
            "isomorphism assembled with {} levels on each side\n",
            phi.source().levels().min(phi.target().levels())
        ));
    }
    let pass = report.pass;
    Ok(CommandOutcome::verdict(pass, human, serde_json::to_value(&report)?))
}

fn cmd_iso_search(
    t_path: &Path,
    tt_path: &Path,
    eps: Option<&str>,
    depth: Option<usize>,
    budget: Option<usize>,
    workers: usize,
    out: Option<&Path>,
) -> Result<CommandOutcome> {
    let t = load_seq(t_path)?;
    let tt = load_seq(tt_path)?;
    let max_level = depth.unwrap_or_else(|| t.levels().min(tt.levels()));
    let eps = match eps {
        Some(text) => parse_eps_list(text)?,
        None => default_eps(max_level.max(2)),
    };
    let mut bounds = SearchBounds::desk(max_level);
    if let Some(b) = budget {
        bounds.max_subset = b;
    }
    match search_witness(&t, &tt, &eps, &bounds, workers)? {
        Some(w) => {
            let doc = w.to_doc();
            let text = serde_json::to_string_pretty(&doc)? + "\n";
            if let Some(path) = out {
                std::fs::write(path, &text)?;
            }
            let human = format!(
                "witness found: k = {:?}, l = {:?}{}",
                w.k,
                w.l,
                out.map(|p| format!(", written to {}", p.display()))
                    .unwrap_or_default()
            );
            Ok(CommandOutcome::pass(human, serde_json::to_value(&doc)?))
        }
        None => Ok(CommandOutcome::fail(
            "not found within bounds".into(),
            json!({"found": false}),
        )),
    }
}

fn load_factor_witness(path: &Path, t: &CfSequence, tt: &CfSequence) -> Result<FactorWitness> {
    let doc: crate::factor::FactorWitnessDoc =
        serde_json::from_str(&std::fs::read_to_string(path)?)?;
    FactorWitness::from_doc(&doc, t, tt)
}

fn cmd_factor_check(t_path: &Path, tt_path: &Path, witness: &Path) -> Result<CommandOutcome> {
    let t = load_seq(t_path)?;
    let tt = load_seq(tt_path)?;
    let w = load_factor_witness(witness, &t, &tt)?;
    let report = check_factor_witness(&t, &tt, &w)?;
    let mut human = String::new();
    for s in &report.steps {
        human.push_str(&format!(
            "step {}: incl {} | inj {} | fill {} | block {}\n",
            s.n,
            if s.inclusion_ok { "ok" } else { "FAIL" },
            if s.injective_ok { "ok" } else { "FAIL" },
            ratio_string(&s.fill_defect),
            ratio_string(&s.block_defect),
        ));
    }
    if !report.mass_warnings.is_empty() {
        human.push_str(&format!(
            "warning: factor mass below target at levels {:?} (telescope the factor)\n",
            report.mass_warnings
        ));
    }
    human.push_str(&format!("verdict: {}\n", if report.pass { "pass" } else { "fail" }));
    let pass = report.pass;
    Ok(CommandOutcome::verdict(pass, human, serde_json::to_value(&report)?))
}

fn cmd_factor_map(
    t_path: &Path,
    tt_path: &Path,
    witness: &Path,
    depth: Option<usize>,
) -> Result<CommandOutcome> {
    let t = load_seq(t_path)?;
    let tt = load_seq(tt_path)?;
    let w = load_factor_witness(witness, &t, &tt)?;
    let report = check_factor_witness(&t, &tt, &w)?;
    if !report.pass {
        return Ok(CommandOutcome::fail(
            "witness does not pass; no map built".into(),
            serde_json::to_value(&report)?,
        ));
    }
    let fm = build_factor_map(&t, &tt, &w)?;
    let probe = depth.unwrap_or(*w.k.last().unwrap());
    let mut mapped = Vec::new();
    for v in t.f(probe).iter() {
        let p = crate::space::DepthPoint::new(t.clone(), probe, v.clone())?;
        match fm.map.apply_point(&p)? {
            Some((img, _)) => mapped.push(json!({
                "from": v.to_string(),
                "to": img.value().to_string(),
                "to_level": img.depth(),
            })),
            None => mapped.push(json!({"from": v.to_string(), "to": null})),
        }
    }
    let fractions: Vec<String> = fm.domain_fractions.iter().map(ratio_string).collect();
    let human = format!(
        "factor map built; domain fractions per level: {}\nsampled {} points at depth {probe}",
        fractions.join(" "),
        mapped.len()
    );
    Ok(CommandOutcome::pass(
        human,
        json!({"domain_fractions": fractions, "depth": probe, "points": mapped}),
    ))
}

fn cmd_odometer_check(
    t_path: &Path,
    odo_path: &Path,
    threshold: Option<&str>,
) -> Result<CommandOutcome> {
    let t = load_seq(t_path)?;
    let odo: OdometerSpec = serde_json::from_str(&std::fs::read_to_string(odo_path)?)?;
    odo.validate()?;
    let thresholds = match threshold {
        Some(text) => parse_eps_list(text)?,
        None => (1..=t.levels().max(1))
            .map(|n| crate::report::ratio(1, 1usize << n.min(30)))
            .collect(),
    };
    match search_odometer_telescoping(&t, &odo, &thresholds)? {
        Some(k) => {
            let defects = odometer_defects(&t, &odo, &k)?;
            let mut human = format!("indices found: {k:?}\n");
            let mut total = crate::report::zero();
            for d in &defects {
                human.push_str(&format!(
                    "block ({}, {}] mod {}: raw {} best {} at residue {}\n",
                    d.from,
                    d.to,
                    d.modulus,
                    ratio_string(&d.raw),
                    ratio_string(&d.best),
                    d.best_residue
                ));
                total += d.best.clone();
            }
            human.push_str(&format!("best-residue defect partial sum: {}\n", ratio_string(&total)));
            Ok(CommandOutcome::pass(
                human,
                json!({"found": true, "k": k, "blocks": serde_json::to_value(&defects)?,
                       "partial_sum": ratio_string(&total)}),
            ))
        }
        None => Ok(CommandOutcome::fail(
            "not found within the stored prefix".into(),
            json!({"found": false}),
        )),
    }
}

#[derive(Debug, Deserialize)]
struct QuotientParams {
    k: Vec<usize>,
    #[serde(rename = "A")]
    a: Vec<Vec<String>>,
}

fn cmd_quotient_check(t_path: &Path, tt_path: &Path, params: &Path) -> Result<CommandOutcome> {
    let t = load_seq(t_path)?;
    let tt = load_seq(tt_path)?;
    let p: QuotientParams = serde_json::from_str(&std::fs::read_to_string(params)?)?;
    let sets = p
        .a
        .iter()
        .map(|texts| FiniteSubset::parse_canonical(t.group(), texts))
        .collect::<Result<Vec<_>>>()?;
    let (report, map) = check_topological_quotient(&t, &tt, &p.k, &sets)?;
    let mut human = String::new();
    for l in &report.levels {
        human.push_str(&format!(
            "level {}: sandwich {}/{} | triviality {} | intertwine {}\n",
            l.level,
            if l.lower_inclusion_ok { "ok" } else { "FAIL" },
            if l.upper_inclusion_ok { "ok" } else { "FAIL" },
            if l.triviality_ok { "ok" } else { "FAIL" },
            if l.intertwine_ok { "ok" } else { "FAIL" },
        ));
        if let Some(d) = &l.detail {
            human.push_str(&format!("  {d}\n"));
        }
    }
    human.push_str(&format!(
        "verdict: {}\n",
        if map.is_some() { "pass (factor map built)" } else { "fail" }
    ));
    let pass = report.pass;
    Ok(CommandOutcome::verdict(pass, human, serde_json::to_value(&report)?))
}

fn cmd_standardize(
    path: &Path,
    window: &str,
    budget: usize,
    out: Option<&Path>,
) -> Result<CommandOutcome> {
    let seq = load_seq(path)?;
    let elems = window
        .split(',')
        .map(|t| seq.group().parse(t.trim()))
        .collect::<Result<Vec<_>>>()?;
    match standardize(&seq, &elems, budget)? {
        Some(found) => {
            let doc = json!({
                "l": found.telescope_indices,
                "A": found.reduction_sets.iter().map(|s| s.to_strings()).collect::<Vec<_>>(),
            });
            if let Some(p) = out {
                std::fs::write(p, serde_json::to_string_pretty(&doc)? + "\n")?;
            }
            let human = format!(
                "standardization found: telescope {:?}, reduced block sizes {:?}",
                found.telescope_indices,
                found
                    .reduction_sets
                    .iter()
                    .map(|s| s.len())
                    .collect::<Vec<_>>()
            );
            Ok(CommandOutcome::pass(human, doc))
        }
        None => Ok(CommandOutcome::fail(
            "not found within budget".into(),
            json!({"found": false}),
        )),
    }
}
