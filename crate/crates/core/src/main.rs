use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand};

use archdelta::extract::{scan_repository_with, MarkerProfile, ScanOptions, ServiceNames};
use archdelta::history::{self, ArtifactWriter, ReplayConfig, DELTA_SET_SCHEMA};
use archdelta::impact::{impact_graph, impact_set, ImpactOptions};
use archdelta::ir::{
    deserialize_delta, deserialize_ir, deserialize_service_ir, document_schema, read_document_value,
    serialize_delta, serialize_ir, serialize_service_ir, validate_delta, Delta, DELTA_SCHEMA,
};
use archdelta::link::{build_system_ir, link_report, DEFAULT_OVERLAP_THRESHOLD};
use archdelta::merge::apply_deltas;
use archdelta::rules::{builtin_rules, evaluate_many, load_rules_file, render_text, ViolationReport};

const EXIT_VIOLATIONS: u8 = 1;
const EXIT_INPUT: u8 = 2;
const EXIT_INTERNAL: u8 = 3;

#[derive(Parser)]
#[command(name = "archdelta", version, about = "Incremental architecture reconstruction for microservice systems")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Scan one service tree into a service IR document.
    Extract {
        tree: PathBuf,
        /// Marker profile; defaults to $ARCHDELTA_PROFILE, then the built-in profile.
        #[arg(long)]
        profile: Option<PathBuf>,
        /// Service name; defaults to the directory name.
        #[arg(long)]
        service: Option<String>,
        #[arg(long, default_value = "0")]
        version: String,
        /// Service-name mapping document.
        #[arg(long)]
        names: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Link service IRs into a system IR document.
    Link {
        #[arg(required = true)]
        irs: Vec<PathBuf>,
        #[arg(long, default_value_t = DEFAULT_OVERLAP_THRESHOLD)]
        overlap_threshold: f64,
        /// Version label; defaults to the per-service rendering.
        #[arg(long, default_value = "")]
        label: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Diff two service IRs into a delta document.
    Delta {
        old: PathBuf,
        new: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Apply deltas to a system IR.
    Merge {
        baseline: PathBuf,
        #[arg(required = true)]
        deltas: Vec<PathBuf>,
        #[arg(long, default_value_t = DEFAULT_OVERLAP_THRESHOLD)]
        overlap_threshold: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Apply deltas, evaluate rules and compute impact.
    Analyze {
        baseline: PathBuf,
        #[arg(required = true)]
        deltas: Vec<PathBuf>,
        /// Rule document; defaults to the built-in rules.
        #[arg(long)]
        rules: Option<PathBuf>,
        #[arg(long, default_value_t = DEFAULT_OVERLAP_THRESHOLD)]
        overlap_threshold: f64,
        #[command(flatten)]
        impact: ImpactArgs,
        /// Directory for increment.json, violations.json and impact.json.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        fail_on_violation: bool,
    },
    /// Impact report of deltas over a system IR.
    Impact {
        baseline: PathBuf,
        #[arg(required = true)]
        deltas: Vec<PathBuf>,
        #[command(flatten)]
        impact: ImpactArgs,
        /// Directory for impact.json and impact-graph.json.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Replay a version history described by a TOML config.
    Replay {
        config: PathBuf,
        /// Overrides the config's `out`.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        fail_on_violation: bool,
    },
}

#[derive(Args)]
struct ImpactArgs {
    /// Total hop bound (unlimited when absent).
    #[arg(long)]
    max_hops: Option<usize>,
    /// Hop bound over cross-service edges.
    #[arg(long, default_value_t = 2)]
    max_cross_hops: usize,
    /// Do not traverse data-overlap edges.
    #[arg(long)]
    no_data_overlap: bool,
    /// Follow changed entities to components using them.
    #[arg(long)]
    entity_usage: bool,
}

impl ImpactArgs {
    fn options(&self) -> ImpactOptions {
        ImpactOptions {
            max_hops: self.max_hops,
            max_cross_service_hops: Some(self.max_cross_hops),
            include_data_overlap: !self.no_data_overlap,
            include_entity_usage: self.entity_usage,
        }
    }
}

/// Failure classes mapped onto exit codes.
enum Failure {
    Input(anyhow::Error),
    Internal(anyhow::Error),
}

impl<E: Into<anyhow::Error>> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure::Input(e.into())
    }
}

fn internal(e: impl Into<anyhow::Error>) -> Failure {
    Failure::Internal(e.into())
}

type Outcome = Result<bool, Failure>;

fn read(path: &Path) -> anyhow::Result<Vec<u8>> {
    std::fs::read(path).with_context(|| format!("cannot read {}", path.display()))
}

fn write_out(path: Option<&Path>, bytes: &[u8]) -> Result<(), Failure> {
    match path {
        Some(p) => {
            if let Some(parent) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
                std::fs::create_dir_all(parent).map_err(internal)?;
            }
            std::fs::write(p, bytes)
                .with_context(|| format!("cannot write {}", p.display()))
                .map_err(internal)
        }
        None => std::io::stdout().write_all(bytes).map_err(internal),
    }
}

/// Text reports go to stdout when documents go to files, else to stderr.
fn report(to_file: bool, text: &str) {
    if to_file {
        print!("{text}");
    } else {
        eprint!("{text}");
    }
}

/// A delta document, or a delta-set document as written by `replay`.
fn load_deltas(paths: &[PathBuf]) -> anyhow::Result<Vec<Delta>> {
    let mut out = Vec::new();
    for p in paths {
        let bytes = read(p)?;
        match document_schema(&bytes).as_deref() {
            Some(DELTA_SET_SCHEMA) => {
                #[derive(serde::Deserialize)]
                struct Set {
                    deltas: Vec<Delta>,
                }
                let value: serde_json::Value = serde_json::from_slice(&bytes)?;
                let set: Set = read_document_value(DELTA_SET_SCHEMA, value)
                    .with_context(|| p.display().to_string())?;
                for d in &set.deltas {
                    validate_delta(d).with_context(|| p.display().to_string())?;
                }
                out.extend(set.deltas);
            }
            Some(DELTA_SCHEMA) | None | Some(_) => {
                out.push(deserialize_delta(&bytes).with_context(|| p.display().to_string())?)
            }
        }
    }
    Ok(out)
}

fn run(cli: Cli) -> Outcome {
    match cli.command {
        Command::Extract {
            tree,
            profile,
            service,
            version,
            names,
            out,
        } => {
            let profile = MarkerProfile::resolve(profile.as_deref())?;
            let names = match names {
                Some(p) => ServiceNames::load(&p)?,
                None => ServiceNames::default(),
            };
            let service = match service {
                Some(s) => s,
                None => {
                    let dir = std::fs::canonicalize(&tree)
                        .with_context(|| format!("cannot read {}", tree.display()))?;
                    let base = dir.file_name().map(|n| n.to_string_lossy().into_owned());
                    names.service_for_dir(&base.ok_or_else(|| anyhow!("cannot name service of {}", tree.display()))?)
                }
            };
            let opts = ScanOptions {
                names: Some(&names),
                cache: None,
            };
            let scan = scan_repository_with(&tree, &profile, &service, &version, opts)?;
            write_out(out.as_deref(), &serialize_service_ir(&scan.ir))?;
            let mut text = format!(
                "{}@{}: {} component(s), {} endpoint(s), {} rest call(s)\n",
                scan.ir.name,
                scan.ir.version_id,
                scan.ir.components.len(),
                scan.ir.endpoints().count(),
                scan.ir.rest_calls().count()
            );
            for w in &scan.warnings {
                text.push_str(&format!("warning: {}: {}\n", w.path, w.message));
            }
            report(out.is_some(), &text);
            Ok(false)
        }
        Command::Link {
            irs,
            overlap_threshold,
            label,
            out,
        } => {
            let mut services = Vec::new();
            for p in &irs {
                services.push(deserialize_service_ir(&read(p)?).with_context(|| p.display().to_string())?);
            }
            let ir = build_system_ir(services, overlap_threshold, &label)?;
            write_out(out.as_deref(), &serialize_ir(&ir))?;
            let r = link_report(&ir);
            let text = format!(
                "{}: {} service(s), {} component(s), {}/{} call(s) matched, {} uncalled endpoint(s), {} remote and {} overlap edge(s)\n",
                ir.version_label,
                r.services,
                r.components,
                r.matched_calls,
                r.rest_calls,
                r.uncalled_endpoints.len(),
                r.remote_call_edges,
                r.overlap_edges
            );
            report(out.is_some(), &text);
            Ok(false)
        }
        Command::Delta { old, new, out } => {
            let o = deserialize_service_ir(&read(&old)?).with_context(|| old.display().to_string())?;
            let n = deserialize_service_ir(&read(&new)?).with_context(|| new.display().to_string())?;
            let d = archdelta::delta::compute_delta(&o, &n)?;
            write_out(out.as_deref(), &serialize_delta(&d))?;
            let mut text = format!(
                "{} {} -> {}: {} change(s)\n",
                d.microservice,
                d.old_version_id,
                d.new_version_id,
                d.changes.len()
            );
            for c in &d.changes {
                text.push_str(&format!("  {} {}\n", c.change_kind, c.component_id));
            }
            report(out.is_some(), &text);
            Ok(false)
        }
        Command::Merge {
            baseline,
            deltas,
            overlap_threshold,
            out,
        } => {
            let base = deserialize_ir(&read(&baseline)?).with_context(|| baseline.display().to_string())?;
            let ds = load_deltas(&deltas)?;
            let inc = apply_deltas(&base, &ds, overlap_threshold)?;
            write_out(out.as_deref(), &serialize_ir(&inc))?;
            report(out.is_some(), &format!("{} -> {}\n", base.version_label, inc.version_label));
            Ok(false)
        }
        Command::Analyze {
            baseline,
            deltas,
            rules,
            overlap_threshold,
            impact,
            out,
            fail_on_violation,
        } => {
            let base = deserialize_ir(&read(&baseline)?).with_context(|| baseline.display().to_string())?;
            let ds = load_deltas(&deltas)?;
            let rules = match rules {
                Some(p) => load_rules_file(&p)?,
                None => builtin_rules(),
            };
            let inc = apply_deltas(&base, &ds, overlap_threshold)?;
            let refs: Vec<&Delta> = ds.iter().collect();
            let violations = evaluate_many(&base, &refs, &inc, &rules)?;
            let vr = ViolationReport::new(inc.version_label.clone(), violations);
            let opts = impact.options();
            let reports: Vec<_> = ds.iter().map(|d| impact_set(&base, d, &opts)).collect();
            let mut text = render_text(&vr);
            for r in &reports {
                text.push_str(&archdelta::impact::render_text(r));
            }
            match &out {
                Some(dir) => {
                    write_out(Some(&dir.join("increment.json")), &serialize_ir(&inc))?;
                    write_out(Some(&dir.join("violations.json")), &vr.to_json())?;
                    write_impact(dir, &reports)?;
                    print!("{text}");
                }
                None => {
                    write_out(None, &vr.to_json())?;
                    eprint!("{text}");
                }
            }
            Ok(fail_on_violation && !vr.violations.is_empty())
        }
        Command::Impact {
            baseline,
            deltas,
            impact,
            out,
        } => {
            let base = deserialize_ir(&read(&baseline)?).with_context(|| baseline.display().to_string())?;
            let ds = load_deltas(&deltas)?;
            let opts = impact.options();
            let reports: Vec<_> = ds.iter().map(|d| impact_set(&base, d, &opts)).collect();
            let text: String = reports.iter().map(archdelta::impact::render_text).collect();
            match &out {
                Some(dir) => {
                    write_impact(dir, &reports)?;
                    print!("{text}");
                }
                None => {
                    write_out(None, &impact_document(&reports))?;
                    eprint!("{text}");
                }
            }
            Ok(false)
        }
        Command::Replay {
            config,
            out,
            fail_on_violation,
        } => {
            let cfg = ReplayConfig::load(&config)?;
            let settings = cfg.settings()?;
            let versions = cfg.versions()?;
            let dir = out.unwrap_or_else(|| cfg.out_dir());
            let writer = ArtifactWriter::new(&dir)?;
            let record = history::replay(&versions, &settings, |s| writer.observe(s))?;
            let summary = writer.finish(&record, &cfg.project_name())?;
            print!("{}", history::render_summary_table(&summary));
            let any = record.versions.iter().any(|v| !v.violations.is_empty());
            Ok(fail_on_violation && any)
        }
    }
}

fn impact_document(reports: &[archdelta::impact::ImpactReport]) -> Vec<u8> {
    #[derive(serde::Serialize)]
    struct Reports<'a> {
        reports: &'a [archdelta::impact::ImpactReport],
    }
    archdelta::ir::write_document(archdelta::impact::IMPACT_SCHEMA, &Reports { reports })
}

fn write_impact(dir: &Path, reports: &[archdelta::impact::ImpactReport]) -> Result<(), Failure> {
    write_out(Some(&dir.join("impact.json")), &impact_document(reports))?;
    #[derive(serde::Serialize)]
    struct Graphs {
        graphs: Vec<archdelta::impact::ImpactGraph>,
    }
    let graphs = Graphs {
        graphs: reports.iter().map(impact_graph).collect(),
    };
    write_out(
        Some(&dir.join("impact-graph.json")),
        &archdelta::ir::write_document(archdelta::impact::IMPACT_GRAPH_SCHEMA, &graphs),
    )
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match std::panic::catch_unwind(|| run(cli)) {
        Ok(Ok(false)) => ExitCode::SUCCESS,
        Ok(Ok(true)) => ExitCode::from(EXIT_VIOLATIONS),
        Ok(Err(Failure::Input(e))) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_INPUT)
        }
        Ok(Err(Failure::Internal(e))) => {
            eprintln!("internal error: {e:#}");
            ExitCode::from(EXIT_INTERNAL)
        }
        Err(_) => ExitCode::from(EXIT_INTERNAL),
    }
}
