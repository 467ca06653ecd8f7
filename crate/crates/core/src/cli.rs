//! Command-line front end.
//!
//! Exit codes: 0 on success, 1 on a domain failure (syntax, merge, centroid,
//! failed verdict, invalid log), 2 on usage or I/O errors. Data goes to
//! standard output and diagnostics to standard error.

use std::collections::BTreeMap;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use log::info;

use crate::analysis::{
    check_deadlock_freedom, check_encoding_bisim, check_trace_equivalence, config_traces_with, global_traces_with,
    ExplorationReport, ExploreOptions, DEFAULT_DEPTH, DEFAULT_STATE_CAP,
};
use crate::codegen::{emit_skeleton, emit_with_template, Flavor, Template};
use crate::efsm::{build_efsm, render_dot};
use crate::encoding::encode_global;
use crate::projection::project;
use crate::scribble::{parse_module_named, pretty_print, Module};
use crate::simulator::{
    check_router_transparency, run_session, validate_log, ChoicePolicy, Delivery, Scheduler, SimConfig,
};
use crate::types::{GlobalType, Role};
use crate::wellformed::{check_wf, check_wf_routed};

#[derive(Debug, Parser)]
#[command(name = "routed-mpst", version, about = "Routed multiparty session type toolkit")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Parse a module and pretty-print it.
    Parse { file: PathBuf },
    /// Print the local type of a role.
    Project { file: PathBuf, protocol: String, role: String },
    /// Check well-formedness, optionally with respect to a router.
    Check {
        file: PathBuf,
        protocol: String,
        #[arg(long)]
        router: Option<String>,
    },
    /// Print the protocol routed through a router.
    Encode {
        file: PathBuf,
        protocol: String,
        #[arg(long)]
        router: String,
    },
    /// List bounded traces of the global type or of its configuration.
    Traces {
        file: PathBuf,
        protocol: String,
        #[arg(long, default_value_t = DEFAULT_DEPTH)]
        depth: usize,
        /// Use the configuration semantics instead of the global one.
        #[arg(long)]
        config: bool,
        /// Encode through this router first.
        #[arg(long)]
        router: Option<String>,
    },
    /// Run trace equivalence, deadlock freedom and encoding correspondence.
    Verify {
        file: PathBuf,
        protocol: String,
        #[arg(long)]
        router: String,
        #[arg(long, default_value_t = DEFAULT_DEPTH)]
        depth: usize,
        #[arg(long, default_value_t = DEFAULT_STATE_CAP)]
        state_cap: usize,
        /// Also write the report to this file.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Build the state machine of a role.
    Efsm {
        file: PathBuf,
        protocol: String,
        role: String,
        #[arg(long)]
        dot: Option<PathBuf>,
        #[arg(long)]
        ir: Option<PathBuf>,
        /// Project the protocol routed through this router.
        #[arg(long)]
        router: Option<String>,
    },
    /// Emit an endpoint skeleton under DIR/<protocol>/<role>/.
    Gen {
        file: PathBuf,
        protocol: String,
        role: String,
        #[arg(long)]
        flavor: String,
        #[arg(short = 'o', long = "out")]
        out: PathBuf,
        /// Custom template file.
        #[arg(long)]
        template: Option<PathBuf>,
        /// Project the protocol routed through this router.
        #[arg(long)]
        router: Option<String>,
    },
    /// Run a simulated session and print its log.
    Simulate {
        file: PathBuf,
        protocol: String,
        #[arg(long)]
        router: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Cancel the session as ROLE at scheduler step STEP.
        #[arg(long, value_name = "ROLE@STEP")]
        cancel: Option<String>,
        /// Every role picks its first label for N-1 selections, then its last.
        #[arg(long)]
        rounds: Option<usize>,
        /// Deliver client-to-client messages directly.
        #[arg(long)]
        direct: bool,
        /// Use round-robin scheduling instead of the seeded scheduler.
        #[arg(long)]
        round_robin: bool,
        #[arg(long, default_value_t = 100_000)]
        max_steps: usize,
        /// Also compare observations against the other delivery mode.
        #[arg(long)]
        transparency: bool,
    },
}

#[derive(Debug)]
enum Failure {
    Usage(String),
    Domain(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Domain(_) => 1,
            Failure::Usage(_) => 2,
        }
    }
}

type Outcome = Result<(), Failure>;

fn read_module(file: &Path) -> Result<Module, Failure> {
    let text = fs::read_to_string(file).map_err(|e| Failure::Usage(format!("{}: error: {e}", file.display())))?;
    parse_module_named(&text, &file.display().to_string())
        .map_err(|e| Failure::Domain(format!("{}: error: {e}", e.span())))
}

fn load(file: &Path, protocol: &str) -> Result<GlobalType, Failure> {
    let module = read_module(file)?;
    module.elaborate(protocol, None).map_err(|e| Failure::Domain(format!("{}: error: {e}", e.span())))
}

fn role(name: &str) -> Result<Role, Failure> {
    Role::new(name).map_err(|e| Failure::Usage(format!("error: {e}")))
}

fn maybe_encode(g: GlobalType, router: Option<&str>) -> Result<GlobalType, Failure> {
    match router {
        None => Ok(g),
        Some(s) => encode_global(&g, &role(s)?).map_err(|e| Failure::Domain(format!("error: {e}"))),
    }
}

/// Write to standard output. A closed pipe is not an error.
fn emit(text: &str) -> Outcome {
    match io::stdout().lock().write_all(text.as_bytes()) {
        Err(e) if e.kind() != io::ErrorKind::BrokenPipe => Err(Failure::Usage(format!("error: {e}"))),
        _ => Ok(()),
    }
}

fn write_file(path: &Path, text: &str) -> Outcome {
    fs::write(path, text).map_err(|e| Failure::Usage(format!("{}: error: {e}", path.display())))
}

fn run(cmd: Command) -> Outcome {
    match cmd {
        Command::Parse { file } => {
            let module = read_module(&file)?;
            emit(&pretty_print(&module))
        }
        Command::Project { file, protocol, role: r } => {
            let g = load(&file, &protocol)?;
            let t = project(&g, &role(&r)?).map_err(|e| Failure::Domain(format!("error: {e}")))?;
            emit(&format!("{t}\n"))
        }
        Command::Check { file, protocol, router } => {
            let g = load(&file, &protocol)?;
            let report = match &router {
                Some(s) => check_wf_routed(&g, &role(s)?),
                None => check_wf(&g),
            };
            if report.is_ok() {
                match router {
                    Some(s) => emit(&format!("well-formed with router {s}\n")),
                    None => emit("well-formed\n"),
                }
            } else {
                Err(Failure::Domain(format!("error: {report}")))
            }
        }
        Command::Encode { file, protocol, router } => {
            let g = maybe_encode(load(&file, &protocol)?, Some(&router))?;
            emit(&format!("{g}\n"))
        }
        Command::Traces { file, protocol, depth, config, router } => {
            let g = maybe_encode(load(&file, &protocol)?, router.as_deref())?;
            let opts = ExploreOptions::with_depth(depth);
            let traces = if config { config_traces_with(&g, opts) } else { global_traces_with(&g, opts) }
                .map_err(|e| Failure::Domain(format!("error: {e}")))?;
            let mut text = String::new();
            for t in &traces.traces {
                let labels: Vec<String> = t.iter().map(ToString::to_string).collect();
                text.push_str(&if labels.is_empty() { "-".to_string() } else { labels.join(" ") });
                text.push('\n');
            }
            emit(&text)
        }
        Command::Verify { file, protocol, router, depth, state_cap, report } => {
            verify(&file, &protocol, &router, ExploreOptions { depth, state_cap, ..Default::default() }, report)
        }
        Command::Efsm { file, protocol, role: r, dot, ir, router } => {
            let g = maybe_encode(load(&file, &protocol)?, router.as_deref())?;
            let me = role(&r)?;
            let t = project(&g, &me).map_err(|e| Failure::Domain(format!("error: {e}")))?;
            let e = build_efsm(&t, &me);
            if let Some(p) = &dot {
                write_file(p, &render_dot(&e))?;
            }
            if let Some(p) = &ir {
                write_file(p, &e.to_json_string())?;
            }
            if dot.is_none() && ir.is_none() {
                emit(&e.to_string())?;
            }
            Ok(())
        }
        Command::Gen { file, protocol, role: r, flavor, out, template, router } => {
            let flavor: Flavor = flavor.parse().map_err(|e| Failure::Usage(format!("error: {e}")))?;
            let g = maybe_encode(load(&file, &protocol)?, router.as_deref())?;
            let me = role(&r)?;
            let t = project(&g, &me).map_err(|e| Failure::Domain(format!("error: {e}")))?;
            let e = build_efsm(&t, &me);
            let skeleton = match template {
                Some(p) => {
                    let text = fs::read_to_string(&p)
                        .map_err(|err| Failure::Usage(format!("{}: error: {err}", p.display())))?;
                    let tpl = Template::parse(&text)
                        .map_err(|err| Failure::Usage(format!("{}: error: {err}", p.display())))?;
                    emit_with_template(&e, &protocol, &tpl)
                }
                None => emit_skeleton(&e, &protocol, flavor),
            }
            .map_err(|err| Failure::Domain(format!("error: {err}")))?;
            let dir = out.join(&protocol);
            skeleton.write_to(&dir).map_err(|err| Failure::Usage(format!("{}: error: {err}", dir.display())))?;
            let listing: String = skeleton.files.keys().map(|name| format!("{}\n", dir.join(name).display())).collect();
            emit(&listing)
        }
        Command::Simulate {
            file,
            protocol,
            router,
            seed,
            cancel,
            rounds,
            direct,
            round_robin,
            max_steps,
            transparency,
        } => {
            let g = load(&file, &protocol)?;
            let s = role(&router)?;
            let cancel = match cancel {
                None => None,
                Some(spec) => {
                    let (who, at) = spec
                        .split_once('@')
                        .ok_or_else(|| Failure::Usage(format!("error: --cancel expects ROLE@STEP, got `{spec}`")))?;
                    let at = at.parse().map_err(|_| Failure::Usage(format!("error: bad step `{at}`")))?;
                    Some((role(who)?, at))
                }
            };
            let cfg = SimConfig {
                seed,
                scheduler: if round_robin { Scheduler::RoundRobin } else { Scheduler::SeededRandom },
                max_steps,
                cancel,
                delivery: if direct { Delivery::Direct } else { Delivery::Routed },
            };
            let scripts: BTreeMap<Role, ChoicePolicy> = match rounds {
                Some(n) => g.participants().into_iter().map(|p| (p, ChoicePolicy::Rounds(n))).collect(),
                None => BTreeMap::new(),
            };
            let log = run_session(&g, &s, &scripts, &cfg).map_err(|e| Failure::Domain(format!("error: {e}")))?;
            emit(&log.to_text())?;
            info!("{} data envelopes, completed={}", log.data_entries().count(), log.completed);
            if let Some(c) = &log.cancellation {
                let names: Vec<&str> = c.notified.iter().map(Role::as_str).collect();
                eprintln!("cancelled by {} at step {}; notified {}", c.initiator, c.step, names.join(","));
            }
            validate_log(&g, &s, &log).map_err(|e| Failure::Domain(format!("error: {e}")))?;
            if transparency {
                if let Some(r) = check_router_transparency(&g, &s, &scripts, &cfg)
                    .map_err(|e| Failure::Domain(format!("error: {e}")))?
                {
                    return Err(Failure::Domain(format!("error: observations of {r} differ under routing")));
                }
            }
            Ok(())
        }
    }
}

fn verify(file: &Path, protocol: &str, router: &str, opts: ExploreOptions, report: Option<PathBuf>) -> Outcome {
    let g = load(file, protocol)?;
    let s = role(router)?;
    let domain = |e: crate::analysis::AnalysisError| Failure::Domain(format!("error: {e}"));
    let mut out = String::new();
    let mut all_pass = true;
    let mut record = |name: &str, r: &ExplorationReport, out: &mut String| {
        all_pass &= r.passed();
        out.push_str(&r.to_key_values(name));
        out.push('\n');
    };
    let canonical = g.is_canonical_mpst();
    let encoded =
        if canonical { encode_global(&g, &s).map_err(|e| Failure::Domain(format!("error: {e}")))? } else { g.clone() };
    if canonical {
        record("trace-equivalence", &check_trace_equivalence(&g, opts).map_err(domain)?, &mut out);
    }
    record("trace-equivalence-routed", &check_trace_equivalence(&encoded, opts).map_err(domain)?, &mut out);
    record("deadlock-freedom", &check_deadlock_freedom(&encoded, &s, opts).map_err(domain)?, &mut out);
    if canonical {
        record("encoding-bisimulation", &check_encoding_bisim(&g, &s, opts).map_err(domain)?, &mut out);
    }
    out.push_str(&format!("verdict={}\n", if all_pass { "pass" } else { "fail" }));
    emit(&out)?;
    if let Some(p) = report {
        write_file(&p, &out)?;
    }
    if all_pass {
        Ok(())
    } else {
        Err(Failure::Domain("error: verification failed".to_string()))
    }
}

/// Parse `args` (including the program name) and run the command.
pub fn run_with_args<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            let (Failure::Usage(msg) | Failure::Domain(msg)) = &f;
            eprintln!("{msg}");
            ExitCode::from(f.code())
        }
    }
}
