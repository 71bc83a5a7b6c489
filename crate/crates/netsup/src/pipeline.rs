//! End-to-end driver: requirement completion, networked plant construction,
//! synthesis, composition, verification and artifact export.

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use thiserror::Error;

use crate::compose::{compose, SupervisedPlant};
use crate::dot::to_dot;
use crate::events::{EventId, EventTable};
use crate::model::{emit_model_string, parse_model, ModelError};
use crate::netplant::{build_networked_plant, NetplantError, NetworkConfig, NetworkedPlant, TickRule};
use crate::synthesis::{synthesize, SynthesisOutcome, SynthesisResult};
use crate::tdes::{Tdes, TdesError};
use crate::verify::{
    verify_controllability, verify_nonblocking, verify_safety, verify_tlf, CheckReport,
};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Netplant(#[from] NetplantError),
    #[error(transparent)]
    Tdes(#[from] TdesError),
    #[error("requirement alphabet contains `{0}`, which the plant does not have")]
    RequirementAlphabet(String),
    #[error(transparent)]
    Compose(#[from] crate::compose::ComposeError),
    #[error("io error on `{path}`: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error(transparent)]
    Events(#[from] crate::events::EventTableError),
}

fn write(path: &Path, contents: &str) -> Result<(), PipelineError> {
    fs::write(path, contents).map_err(|source| PipelineError::Io {
        path: path.display().to_string(),
        source,
    })
}

#[derive(Debug, Serialize)]
struct ConfigDump {
    nc: u32,
    no: u32,
    lmax: usize,
    mmax: usize,
    control_channel: &'static str,
    tick_rule: &'static str,
    enabling_forcible: bool,
    bad_set: &'static str,
    strict_assumptions: bool,
    depth: usize,
}

impl ConfigDump {
    fn of(cfg: &NetworkConfig) -> Self {
        ConfigDump {
            nc: cfg.nc,
            no: cfg.no,
            lmax: cfg.lmax,
            mmax: cfg.mmax,
            control_channel: if cfg.fifo_control { "fifo" } else { "non-fifo" },
            tick_rule: match cfg.tick_rule {
                TickRule::Figure => "figure",
                TickRule::Literal => "literal",
            },
            enabling_forcible: cfg.enabling_forcible,
            bad_set: match cfg.bad_set {
                crate::netplant::BadSetMode::Both => "both",
                crate::netplant::BadSetMode::BlockingOnly => "blocking",
                crate::netplant::BadSetMode::TlfOnly => "tlf",
            },
            strict_assumptions: cfg.strict_assumptions,
            depth: cfg.depth,
        }
    }
}

#[derive(Debug, Serialize)]
struct AssumptionsDump {
    initial_ticks_ok: bool,
    initial_ticks_witness: Option<String>,
    required_lmax: String,
    lmax_ok: bool,
    required_mmax: String,
    mmax_ok: bool,
    control_drops: usize,
    observation_drops: usize,
    predictive_stalls: usize,
}

#[derive(Debug, Serialize)]
struct SynthesisDump {
    outcome: &'static str,
    iterations: usize,
    reason: Option<String>,
    iteration_log: Vec<crate::synthesis::IterationLog>,
}

#[derive(Debug, Serialize)]
struct Report {
    plant: String,
    requirement: Option<String>,
    config: ConfigDump,
    note: &'static str,
    assumptions: AssumptionsDump,
    synthesis: SynthesisDump,
    checks: Vec<CheckReport>,
}

/// Everything a pipeline run produced.
pub struct PipelineOutcome {
    /// 0 = supervisor found and all checks pass, 2 = no supervisor exists,
    /// 1 = a check failed.
    pub exit_code: i32,
    pub summary: String,
    pub networked_plant: NetworkedPlant,
    pub synthesis: SynthesisOutcome,
    pub supervised: Option<SupervisedPlant>,
    pub checks: Vec<CheckReport>,
    pub written: Vec<PathBuf>,
}

/// Builds the networked plant only, writing it with its decode sidecar and
/// DOT export. Used by the `netplant` subcommand.
pub fn build_netplant_artifacts(
    plant_path: &Path,
    requirement_path: Option<&Path>,
    cfg: &NetworkConfig,
    out_dir: &Path,
) -> Result<(NetworkedPlant, Vec<PathBuf>), PipelineError> {
    let (plant, mut events) = parse_model(plant_path)?;
    let requirement = match requirement_path {
        Some(p) => {
            let (r, r_events) = parse_model(p)?;
            Some(remap_events(&r, &r_events, &events)?)
        }
        None => None,
    };
    events.derive_network_events()?;
    fs::create_dir_all(out_dir).map_err(|source| PipelineError::Io {
        path: out_dir.display().to_string(),
        source,
    })?;
    let synthesis_plant = match &requirement {
        Some(r) => plant.sync_product(&r.complete()).reach(),
        None => plant,
    };
    let np = build_networked_plant(&synthesis_plant, &events, cfg)?;
    let mut written = Vec::new();
    for (name, contents) in [
        ("gprime.tdes", emit_model_string(&np.gprime, &events)),
        ("np.tdes", emit_model_string(&np.tdes, &events)),
        ("np.dot", to_dot(&np.tdes, &events)),
        ("np.decode.txt", decode_table(&np.tdes)),
    ] {
        let path = out_dir.join(name);
        write(&path, &contents)?;
        written.push(path);
    }
    Ok((np, written))
}

/// Runs the full pipeline and writes all artifacts under `out_dir`.
pub fn run_pipeline(
    plant_path: &Path,
    requirement_path: Option<&Path>,
    cfg: &NetworkConfig,
    out_dir: &Path,
) -> Result<PipelineOutcome, PipelineError> {
    let (plant, mut events) = parse_model(plant_path)?;
    let requirement = match requirement_path {
        Some(p) => {
            let (r, r_events) = parse_model(p)?;
            Some(remap_events(&r, &r_events, &events)?)
        }
        None => None,
    };
    events.derive_network_events()?;

    fs::create_dir_all(out_dir).map_err(|source| PipelineError::Io {
        path: out_dir.display().to_string(),
        source,
    })?;
    let mut written = Vec::new();
    let save = |name: &str, contents: String, written: &mut Vec<PathBuf>| -> Result<PathBuf, PipelineError> {
        let path = out_dir.join(name);
        write(&path, &contents)?;
        written.push(path.clone());
        Ok(path)
    };

    // Completion and product when a requirement is present.
    let synthesis_plant = match &requirement {
        Some(r) => {
            let completed = r.complete();
            save(
                "requirement_complete.tdes",
                emit_model_string(&completed, &events),
                &mut written,
            )?;
            let product = plant.sync_product(&completed).reach();
            save("plant_product.tdes", emit_model_string(&product, &events), &mut written)?;
            product
        }
        None => plant.clone(),
    };

    let np = build_networked_plant(&synthesis_plant, &events, cfg)?;
    save("gprime.tdes", emit_model_string(&np.gprime, &events), &mut written)?;
    save("np.tdes", emit_model_string(&np.tdes, &events), &mut written)?;
    save("np.dot", to_dot(&np.tdes, &events), &mut written)?;
    save("np.decode.txt", decode_table(&np.tdes), &mut written)?;

    let outcome = synthesize(&np, &events, cfg);
    save(
        "synthesis_log.json",
        serde_json::to_string_pretty(&SynthesisDump {
            outcome: match outcome.result {
                SynthesisResult::Supervisor(_) => "supervisor",
                SynthesisResult::NoResult { .. } => "no-result",
            },
            iterations: outcome.iterations,
            reason: match &outcome.result {
                SynthesisResult::NoResult { reason } => Some(reason.clone()),
                _ => None,
            },
            iteration_log: outcome.log.clone(),
        })
        .expect("log serializes")
            + "\n",
        &mut written,
    )?;

    let mut checks: Vec<CheckReport> = Vec::new();
    let mut supervised = None;
    let exit_code;
    let summary;
    match &outcome.result {
        SynthesisResult::NoResult { reason } => {
            exit_code = 2;
            summary = format!("no networked supervisor exists: {reason}");
        }
        SynthesisResult::Supervisor(ns) => {
            save("ns.tdes", emit_model_string(ns, &events), &mut written)?;
            save("ns.dot", to_dot(ns, &events), &mut written)?;
            let nsp = compose(ns, &synthesis_plant, &events, cfg)?;
            save("nsp.tdes", emit_model_string(&nsp.tdes, &events), &mut written)?;
            save("nsp.dot", to_dot(&nsp.tdes, &events), &mut written)?;
            save("nsp.decode.txt", decode_table(&nsp.tdes), &mut written)?;

            checks.push(verify_nonblocking(&nsp, &events));
            checks.push(verify_tlf(&nsp, &events));
            checks.push(verify_controllability(&nsp, &synthesis_plant, &events, cfg));
            if let Some(r) = &requirement {
                checks.push(verify_safety(&nsp, r, &events));
            }
            let all_pass = checks.iter().all(|c| c.passed());
            exit_code = if all_pass { 0 } else { 1 };
            summary = if all_pass {
                format!(
                    "supervisor with {} states, all {} checks pass",
                    ns.state_count(),
                    checks.len()
                )
            } else {
                "supervisor found but verification failed".to_string()
            };
            supervised = Some(nsp);
        }
    }

    let report = Report {
        plant: plant_path.display().to_string(),
        requirement: requirement_path.map(|p| p.display().to_string()),
        config: ConfigDump::of(cfg),
        note: "tick gating follows the configured tick_rule; `figure` admits tick alongside pending commands, `literal` makes commands urgent",
        assumptions: AssumptionsDump {
            initial_ticks_ok: np.assumptions.initial_ticks_ok,
            initial_ticks_witness: np
                .assumptions
                .initial_ticks_witness
                .as_ref()
                .map(|w| events.render_word(w)),
            required_lmax: np.assumptions.required_lmax.to_string(),
            lmax_ok: np.assumptions.lmax_ok,
            required_mmax: np.assumptions.required_mmax.to_string(),
            mmax_ok: np.assumptions.mmax_ok,
            control_drops: np.diagnostics.control_drops.len(),
            observation_drops: np.diagnostics.obs_drops.len(),
            predictive_stalls: np.diagnostics.predictive_stalls,
        },
        synthesis: SynthesisDump {
            outcome: match outcome.result {
                SynthesisResult::Supervisor(_) => "supervisor",
                SynthesisResult::NoResult { .. } => "no-result",
            },
            iterations: outcome.iterations,
            reason: match &outcome.result {
                SynthesisResult::NoResult { reason } => Some(reason.clone()),
                _ => None,
            },
            iteration_log: outcome.log.clone(),
        },
        checks: checks.clone(),
    };
    save(
        "report.json",
        serde_json::to_string_pretty(&report).expect("report serializes") + "\n",
        &mut written,
    )?;

    Ok(PipelineOutcome {
        exit_code,
        summary,
        networked_plant: np,
        synthesis: outcome,
        supervised,
        checks,
        written,
    })
}

fn decode_table(t: &Tdes) -> String {
    let mut out = String::new();
    for s in t.states() {
        out.push_str(t.state_name(s));
        out.push_str(" -> ");
        out.push_str(t.decode(s).unwrap_or("-"));
        out.push('\n');
    }
    out
}

/// Rebuilds `t` over `to`, translating events by name. Fails when a name is
/// missing from the target table.
pub fn remap_events(t: &Tdes, from: &EventTable, to: &EventTable) -> Result<Tdes, PipelineError> {
    let mut alphabet = BTreeSet::new();
    let mut map: Vec<Option<EventId>> = vec![None; from.len()];
    for &e in &t.alphabet {
        let name = from.name(e);
        let target = to
            .lookup(name)
            .ok_or_else(|| PipelineError::RequirementAlphabet(name.to_string()))?;
        map[e.0] = Some(target);
        alphabet.insert(target);
    }
    let mut out = Tdes::new(&t.name, alphabet, t.state_name(t.initial));
    for s in t.states() {
        let id = out.add_state(t.state_name(s));
        if t.marked.contains(&s) {
            out.mark(id);
        }
        if let Some(d) = t.decode(s) {
            out.set_decode(id, d.to_string());
        }
    }
    for (s, e, d) in t.transitions() {
        let s2 = out.state_by_name(t.state_name(s)).unwrap();
        let d2 = out.state_by_name(t.state_name(d)).unwrap();
        out.add_trans(s2, map[e.0].unwrap(), d2)
            .expect("source was deterministic");
    }
    Ok(out)
}
