//! Command-line front end for the networked supervisory control toolkit.

use std::collections::BTreeSet;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use netsup::model::{emit_model, parse_model};
use netsup::netplant::{BadSetMode, NetworkConfig, TickRule};
use netsup::pipeline::run_pipeline;

#[derive(Parser)]
#[command(name = "netsup", about = "Networked supervisory control synthesis for timed DES")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum ControlChannelKind {
    Fifo,
    NonFifo,
}

#[derive(Clone, Copy, ValueEnum)]
enum TickRuleArg {
    Figure,
    Literal,
}

#[derive(Clone, Copy, ValueEnum)]
enum BadSetArg {
    Both,
    Blocking,
    Tlf,
}

#[derive(Args)]
struct NetworkArgs {
    /// Control-channel delay in ticks.
    #[arg(long, default_value_t = 0)]
    nc: u32,
    /// Observation-channel delay in ticks.
    #[arg(long = "no", default_value_t = 0)]
    no_delay: u32,
    /// Control-channel capacity.
    #[arg(long, default_value_t = 1)]
    lmax: usize,
    /// Observation-channel capacity.
    #[arg(long, default_value_t = 1)]
    mmax: usize,
    #[arg(long, value_enum, default_value_t = ControlChannelKind::Fifo)]
    control_channel: ControlChannelKind,
    #[arg(long, value_enum, default_value_t = TickRuleArg::Figure)]
    tick_rule: TickRuleArg,
    /// Treat enabling events as not forcible.
    #[arg(long)]
    no_forcible_enabling: bool,
    #[arg(long, value_enum, default_value_t = BadSetArg::Both)]
    bad_set: BadSetArg,
    /// Fail instead of warn when channel assumptions do not hold.
    #[arg(long)]
    strict_assumptions: bool,
    /// Depth for bounded language-level checks.
    #[arg(long, default_value_t = 10)]
    depth: usize,
}

impl NetworkArgs {
    fn to_config(&self) -> NetworkConfig {
        NetworkConfig {
            nc: self.nc,
            no: self.no_delay,
            lmax: self.lmax,
            mmax: self.mmax,
            fifo_control: matches!(self.control_channel, ControlChannelKind::Fifo),
            tick_rule: match self.tick_rule {
                TickRuleArg::Figure => TickRule::Figure,
                TickRuleArg::Literal => TickRule::Literal,
            },
            enabling_forcible: !self.no_forcible_enabling,
            bad_set: match self.bad_set {
                BadSetArg::Both => BadSetMode::Both,
                BadSetArg::Blocking => BadSetMode::BlockingOnly,
                BadSetArg::Tlf => BadSetMode::TlfOnly,
            },
            forcible_clause: Default::default(),
            strict_assumptions: self.strict_assumptions,
            depth: self.depth,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Check a model file for well-formedness.
    Validate { model: PathBuf },
    /// Project a model onto a subset of its events.
    Project {
        model: PathBuf,
        /// Comma-separated events to keep (tick is always kept).
        #[arg(long, value_delimiter = ',')]
        keep: Vec<String>,
        #[arg(short, long)]
        out: PathBuf,
    },
    /// Synchronous product of two models.
    Product {
        left: PathBuf,
        right: PathBuf,
        #[arg(short, long)]
        out: PathBuf,
    },
    /// Totalize a requirement automaton with a dead state.
    Complete {
        model: PathBuf,
        #[arg(short, long)]
        out: PathBuf,
    },
    /// Build the networked plant and write it with its decode table.
    Netplant {
        #[arg(long)]
        plant: PathBuf,
        #[arg(long)]
        req: Option<PathBuf>,
        #[command(flatten)]
        net: NetworkArgs,
        #[arg(long, default_value = "out")]
        out_dir: PathBuf,
    },
    /// Full pipeline: networked plant, synthesis, composition, verification.
    Synth {
        #[arg(long)]
        plant: PathBuf,
        #[arg(long)]
        req: Option<PathBuf>,
        #[command(flatten)]
        net: NetworkArgs,
        #[arg(long, default_value = "out")]
        out_dir: PathBuf,
    },
    /// Alias for `synth` that highlights the verification verdicts.
    Verify {
        #[arg(long)]
        plant: PathBuf,
        #[arg(long)]
        req: Option<PathBuf>,
        #[command(flatten)]
        net: NetworkArgs,
        #[arg(long, default_value = "out")]
        out_dir: PathBuf,
    },
    /// Replay a word through a model, printing each step.
    Simulate {
        model: PathBuf,
        /// Event names, in order.
        events: Vec<String>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode, String> {
    match cli.command {
        Command::Validate { model } => {
            let (t, ev) = parse_model(&model).map_err(|e| e.to_string())?;
            let problems = t.validate(&ev);
            if problems.is_empty() {
                println!(
                    "ok: {} states, {} transitions, {} marked",
                    t.state_count(),
                    t.transition_count(),
                    t.marked.len()
                );
                Ok(ExitCode::SUCCESS)
            } else {
                for p in problems {
                    println!("violation: {p}");
                }
                Ok(ExitCode::from(1))
            }
        }
        Command::Project { model, keep, out } => {
            let (t, ev) = parse_model(&model).map_err(|e| e.to_string())?;
            let mut keep_set = BTreeSet::from([ev.tick()]);
            for name in keep {
                let e = ev.lookup(&name).ok_or(format!("unknown event `{name}`"))?;
                keep_set.insert(e);
            }
            let p = t.natural_projection(&keep_set, &ev).map_err(|e| e.to_string())?;
            emit_model(&p, &ev, &out).map_err(|e| e.to_string())?;
            println!("wrote {} ({} states)", out.display(), p.state_count());
            Ok(ExitCode::SUCCESS)
        }
        Command::Product { left, right, out } => {
            let (a, ev_a) = parse_model(&left).map_err(|e| e.to_string())?;
            let (b, ev_b) = parse_model(&right).map_err(|e| e.to_string())?;
            let b = netsup::pipeline::remap_events(&b, &ev_b, &ev_a)
                .map_err(|e| format!("product needs a shared event table: {e}"))?;
            let p = a.sync_product(&b);
            emit_model(&p, &ev_a, &out).map_err(|e| e.to_string())?;
            println!("wrote {} ({} states)", out.display(), p.state_count());
            Ok(ExitCode::SUCCESS)
        }
        Command::Complete { model, out } => {
            let (t, ev) = parse_model(&model).map_err(|e| e.to_string())?;
            let c = t.complete();
            emit_model(&c, &ev, &out).map_err(|e| e.to_string())?;
            println!("wrote {} ({} states)", out.display(), c.state_count());
            Ok(ExitCode::SUCCESS)
        }
        Command::Netplant {
            plant,
            req,
            net,
            out_dir,
        } => {
            let cfg = net.to_config();
            let (np, written) =
                netsup::pipeline::build_netplant_artifacts(&plant, req.as_deref(), &cfg, &out_dir)
                    .map_err(|e| e.to_string())?;
            println!(
                "networked plant: {} states, {} transitions; required capacities: control {} (ok: {}), observation {} (ok: {})",
                np.tdes.state_count(),
                np.tdes.transition_count(),
                np.assumptions.required_lmax,
                np.assumptions.lmax_ok,
                np.assumptions.required_mmax,
                np.assumptions.mmax_ok,
            );
            for p in written {
                println!("wrote {}", p.display());
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Synth {
            plant,
            req,
            net,
            out_dir,
        }
        | Command::Verify {
            plant,
            req,
            net,
            out_dir,
        } => {
            let cfg = net.to_config();
            let outcome = run_pipeline(&plant, req.as_deref(), &cfg, &out_dir)
                .map_err(|e| e.to_string())?;
            for check in &outcome.checks {
                println!(
                    "{}: {}",
                    check.check,
                    match check.verdict {
                        netsup::verify::Verdict::Pass => "pass".to_string(),
                        netsup::verify::Verdict::Fail => format!(
                            "FAIL ({}; counterexample: {})",
                            check.detail,
                            check.counterexample.join(" ")
                        ),
                        netsup::verify::Verdict::NotEvaluated => "not evaluated".to_string(),
                    }
                );
            }
            println!("{}", outcome.summary);
            Ok(ExitCode::from(outcome.exit_code as u8))
        }
        Command::Simulate { model, events } => {
            let (t, ev) = parse_model(&model).map_err(|e| e.to_string())?;
            let mut state = t.initial;
            for name in &events {
                let e = ev.lookup(name).ok_or(format!("unknown event `{name}`"))?;
                match t.step(state, e) {
                    Some(next) => {
                        println!("{} | {} | {}", t.state_name(state), name, t.state_name(next));
                        state = next;
                    }
                    None => {
                        let enabled: Vec<&str> = t
                            .enabled_events(state)
                            .iter()
                            .map(|&e| ev.name(e))
                            .collect();
                        return Err(format!(
                            "event `{name}` not enabled at `{}`; enabled: {}",
                            t.state_name(state),
                            enabled.join(" ")
                        ));
                    }
                }
            }
            println!(
                "final: {}{}",
                t.state_name(state),
                if t.marked.contains(&state) { " (marked)" } else { "" }
            );
            Ok(ExitCode::SUCCESS)
        }
    }
}
