mod num;

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;

use redlab::fault_injection::{
    gate_level_masking_check, guaranteed_from_counts, masked_counts_by_cardinality, max_from_counts, Sampling,
};
use redlab::function_units::{exhaustive_equivalence, EquivalenceReport};
use redlab::netlist::GateCensus;
use redlab::reliability::{
    binomial, closed_form_reliability, monte_carlo_reliability, reliability_delta_sweep, uniform_grid,
};
use redlab::voters::{build_redundant_system, build_voter};
use redlab::{Error, FaultModel, FaultPattern, FunctionUnitSpec, GateKind, Netlist, RedundancyScheme, SchemeKind};

use num::sig;

/// Build, verify and fault-inject NMR and MMR redundant netlists.
#[derive(Parser, Debug)]
#[command(name = "redlab", version)]
struct Cli {
    /// Worker threads; results do not depend on this.
    #[arg(long, global = true, env = "REDLAB_THREADS", value_parser = clap::value_parser!(u16).range(1..))]
    threads: Option<u16>,
    /// Output format for commands that emit tables.
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Check a function unit and its fault-free redundant system exhaustively.
    Verify {
        #[arg(long)]
        unit: FunctionUnitSpec,
        #[arg(long)]
        scheme: RedundancyScheme,
    },
    /// Inject faults into replicas and check that the system still computes the unit.
    Inject {
        #[arg(long)]
        unit: FunctionUnitSpec,
        #[arg(long)]
        scheme: RedundancyScheme,
        /// Comma-separated 1-based unit indices; empty for none.
        #[arg(long, default_value = "")]
        faults: FaultPattern,
        #[arg(long, default_value_t = FaultModel::Inversion)]
        model: FaultModel,
        /// Check this many random vectors instead of all of them.
        #[arg(long)]
        samples: Option<u64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Masked fault patterns per fault count.
    Counts {
        #[arg(long)]
        scheme: RedundancyScheme,
        #[arg(long, default_value_t = FaultModel::Inversion)]
        model: FaultModel,
    },
    /// Largest tolerable fault counts.
    Tolerance {
        #[arg(long)]
        scheme: RedundancyScheme,
        #[arg(long, default_value_t = FaultModel::Inversion)]
        model: FaultModel,
    },
    /// System reliability over a grid of unit reliabilities.
    Sweep {
        #[arg(long, value_delimiter = ',', required = true)]
        schemes: Vec<RedundancyScheme>,
        #[arg(long, default_value_t = 0.9)]
        r_min: f64,
        #[arg(long, default_value_t = 0.99)]
        r_max: f64,
        #[arg(long, default_value_t = 10)]
        steps: usize,
        /// Monte Carlo trials per point; 0 skips the simulation.
        #[arg(long, default_value_t = 100_000)]
        trials: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Write here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Gate counts and logic depth of voters and, optionally, whole systems.
    Metrics {
        #[arg(long, value_delimiter = ',', required = true)]
        schemes: Vec<RedundancyScheme>,
        #[arg(long)]
        unit: Option<FunctionUnitSpec>,
    },
}

struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn new(code: u8, message: impl Into<String>) -> Self {
        Failure {
            code,
            message: message.into(),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::TooLarge(_) => 3,
            Error::InvalidParameter(_) | Error::InvalidArity(_) | Error::InvalidPattern(_) => 2,
            _ => 1,
        };
        Failure::new(code, e.to_string())
    }
}

type Outcome = Result<(), Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n.into()).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    }
    match run(cli.command, cli.format) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            if !f.message.is_empty() {
                eprintln!("error: {}", f.message);
            }
            ExitCode::from(f.code)
        }
    }
}

fn run(command: Command, format: Option<Format>) -> Outcome {
    match command {
        Command::Verify { unit, scheme } => verify(unit, scheme),
        Command::Inject {
            unit,
            scheme,
            faults,
            model,
            samples,
            seed,
        } => inject(
            unit,
            scheme,
            faults,
            model,
            samples.map(|samples| Sampling { samples, seed }),
        ),
        Command::Counts { scheme, model } => counts(scheme, model, format.unwrap_or(Format::Csv)),
        Command::Tolerance { scheme, model } => tolerance(scheme, model, format),
        Command::Sweep {
            schemes,
            r_min,
            r_max,
            steps,
            trials,
            seed,
            out,
        } => sweep(
            &schemes,
            r_min,
            r_max,
            steps,
            trials,
            seed,
            out.as_deref(),
            format.unwrap_or(Format::Csv),
        ),
        Command::Metrics { schemes, unit } => metrics(&schemes, unit, format.unwrap_or(Format::Json)),
    }
}

fn assignment(netlist: &Netlist, bits: &[bool]) -> String {
    netlist
        .inputs()
        .iter()
        .zip(bits)
        .map(|(&n, &b)| format!("{}={}", netlist.net_name(n), u8::from(b)))
        .collect::<Vec<_>>()
        .join(" ")
}

fn bit_string(value: u64, width: usize) -> String {
    // Most significant output first, as arithmetic results are read.
    (0..width)
        .rev()
        .map(|i| if (value >> i) & 1 == 1 { '1' } else { '0' })
        .collect()
}

fn report_equivalence(label: &str, netlist: &Netlist, report: &EquivalenceReport) -> bool {
    match &report.counterexample {
        None => {
            println!("{label}: OK ({} vectors)", report.vectors_checked);
            true
        }
        Some(cx) => {
            let width = netlist.output_count();
            println!("{label}: MISMATCH");
            println!(
                "  inputs:   {}",
                assignment(netlist, &cx.input_bits(netlist.input_count()))
            );
            println!("  expected: {}", bit_string(cx.expected, width));
            println!("  actual:   {}", bit_string(cx.actual, width));
            false
        }
    }
}

fn verify(unit: FunctionUnitSpec, scheme: RedundancyScheme) -> Outcome {
    let netlist = unit.build()?;
    let bare = exhaustive_equivalence(&netlist, |v| unit.oracle(v))?;
    let system = build_redundant_system(&netlist, scheme)?;
    let voted = exhaustive_equivalence(&system.netlist, |v| unit.oracle(v))?;
    let ok = report_equivalence(&format!("unit {unit}"), &netlist, &bare)
        & report_equivalence(&format!("system {scheme} x {unit}"), &system.netlist, &voted);
    if ok {
        Ok(())
    } else {
        Err(Failure::new(1, ""))
    }
}

fn inject(
    unit: FunctionUnitSpec,
    scheme: RedundancyScheme,
    faults: FaultPattern,
    model: FaultModel,
    sampling: Option<Sampling>,
) -> Outcome {
    let netlist = unit.build()?;
    let report = gate_level_masking_check(&netlist, scheme, faults, model, sampling)?;
    let how = if report.exhaustive { "exhaustive" } else { "sampled" };
    if report.masked {
        println!("MASKED ({} vectors, {how})", report.vectors_checked);
        return Ok(());
    }
    println!("NOT-MASKED ({} vectors, {how})", report.vectors_checked);
    if let Some(v) = &report.failing_vector {
        println!("failing vector: {}", assignment(&netlist, v));
    }
    Err(Failure::new(1, ""))
}

fn counts(scheme: RedundancyScheme, model: FaultModel, format: Format) -> Outcome {
    let table = masked_counts_by_cardinality(scheme, model)?;
    let units = scheme.unit_count() as u64;
    match format {
        Format::Csv => {
            println!("f,masked,patterns");
            for (f, c) in table.iter().enumerate() {
                println!("{f},{c},{}", binomial(units, f as u64));
            }
        }
        Format::Json => {
            let rows: Vec<_> = table
                .iter()
                .enumerate()
                .map(|(f, c)| json!({"f": f, "masked": c, "patterns": binomial(units, f as u64)}))
                .collect();
            print_json(&json!({"scheme": scheme, "model": model.to_string(), "counts": rows}));
        }
    }
    Ok(())
}

fn tolerance(scheme: RedundancyScheme, model: FaultModel, format: Option<Format>) -> Outcome {
    let table = masked_counts_by_cardinality(scheme, model)?;
    let (max, guaranteed) = (max_from_counts(&table), guaranteed_from_counts(&table));
    if format == Some(Format::Json) {
        print_json(&json!({
            "scheme": scheme,
            "model": model.to_string(),
            "max_tolerable": max,
            "guaranteed": guaranteed,
        }));
    } else {
        println!("max_tolerable={max}  # best-placement maximum");
        println!("guaranteed={guaranteed}  # any-placement guarantee");
    }
    Ok(())
}

#[derive(Serialize)]
struct SweepRow {
    scheme: RedundancyScheme,
    units: usize,
    r: f64,
    reliability_analytic: f64,
    reliability_mc: Option<f64>,
    mc_std_error: Option<f64>,
    trials: u64,
    seed: u64,
}

#[allow(clippy::too_many_arguments)]
fn sweep(
    schemes: &[RedundancyScheme],
    r_min: f64,
    r_max: f64,
    steps: usize,
    trials: u64,
    seed: u64,
    out: Option<&Path>,
    format: Format,
) -> Outcome {
    let grid = uniform_grid(r_min, r_max, steps)?;
    let mut rows = Vec::with_capacity(schemes.len() * grid.len());
    for &scheme in schemes {
        for &r in &grid {
            let mc = if trials == 0 {
                None
            } else {
                Some(monte_carlo_reliability(scheme, r, trials, seed)?)
            };
            rows.push(SweepRow {
                scheme,
                units: scheme.unit_count(),
                r,
                reliability_analytic: closed_form_reliability(scheme, r)?,
                reliability_mc: mc.map(|m| m.estimate),
                mc_std_error: mc.map(|m| m.std_error),
                trials,
                seed,
            });
        }
    }

    // The i-th NMR scheme is compared with the i-th MMR scheme.
    let of = |kind| schemes.iter().copied().filter(move |s| s.kind() == kind);
    let pairs: Vec<_> = of(SchemeKind::Nmr).zip(of(SchemeKind::Mmr)).collect();
    let deltas = reliability_delta_sweep(&pairs, r_min, r_max, steps)?;

    let text = match format {
        Format::Csv => {
            let opt = |v: Option<f64>| v.map(|x| sig(x, 12)).unwrap_or_default();
            let mut s = String::from("scheme,units,R,reliability_analytic,reliability_mc,mc_std_error,trials,seed\n");
            for row in &rows {
                let _ = writeln!(
                    s,
                    "{},{},{},{},{},{},{},{}",
                    row.scheme,
                    row.units,
                    sig(row.r, 12),
                    sig(row.reliability_analytic, 12),
                    opt(row.reliability_mc),
                    opt(row.mc_std_error),
                    row.trials,
                    row.seed
                );
            }
            let _ = writeln!(
                s,
                "# grid: R from {} to {} in {steps} steps",
                sig(r_min, 12),
                sig(r_max, 12)
            );
            for d in &deltas {
                let _ = writeln!(s, "# delta {} vs {}: {}%", d.mmr, d.nmr, sig(d.mean_percent_delta, 12));
            }
            s
        }
        Format::Json => {
            let summary: Vec<_> = deltas
                .iter()
                .map(|d| json!({"nmr": d.nmr, "mmr": d.mmr, "mean_percent_delta": d.mean_percent_delta}))
                .collect();
            let doc = json!({
                "grid": {"r_min": r_min, "r_max": r_max, "steps": steps},
                "rows": rows,
                "deltas": summary,
            });
            serde_json::to_string_pretty(&doc).expect("serializable") + "\n"
        }
    };

    match out {
        None => print!("{text}"),
        Some(path) => {
            write_atomically(path, &text)
                .map_err(|e| Failure::new(4, format!("cannot write {}: {e}", path.display())))?;
            for line in text.lines().filter(|l| l.starts_with('#')) {
                println!("{line}");
            }
        }
    }
    Ok(())
}

/// Writes through a temporary file in the target directory so a failed run
/// never leaves a truncated file behind.
fn write_atomically(path: &Path, text: &str) -> std::io::Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(text.as_bytes())?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}

#[derive(Serialize)]
struct Structure {
    gates: GateCensus,
    depth: usize,
}

fn structure(netlist: &Netlist) -> Result<Structure, Failure> {
    Ok(Structure {
        gates: netlist.gate_count(),
        depth: netlist.logic_depth()?,
    })
}

fn metrics(schemes: &[RedundancyScheme], unit: Option<FunctionUnitSpec>, format: Format) -> Outcome {
    let unit_netlist = unit.map(|u| u.build()).transpose()?;
    let mut entries = Vec::new();
    for &scheme in schemes {
        let voter = structure(&build_voter(scheme)?)?;
        let system = match &unit_netlist {
            Some(n) => Some(structure(&build_redundant_system(n, scheme)?.netlist)?),
            None => None,
        };
        entries.push((scheme, voter, system));
    }
    match format {
        Format::Json => {
            let doc: Vec<_> = entries
                .iter()
                .map(|(scheme, voter, system)| {
                    let mut e = json!({"scheme": scheme, "voter": voter});
                    if let (Some(sys), Some(u)) = (system, unit) {
                        e["system"] = json!({"unit": u.to_string(), "gates": sys.gates, "depth": sys.depth});
                    }
                    e
                })
                .collect();
            print_json(&doc);
        }
        Format::Csv => {
            let kinds: Vec<&str> = GateKind::ALL.iter().map(|k| k.name()).collect();
            println!(
                "scheme,voter_total,voter_depth,{},system_total,system_depth",
                kinds.join(",")
            );
            for (scheme, voter, system) in &entries {
                let per_kind: Vec<String> = GateKind::ALL.iter().map(|&k| voter.gates.get(k).to_string()).collect();
                let (total, depth) = system
                    .as_ref()
                    .map(|s| (s.gates.total.to_string(), s.depth.to_string()))
                    .unwrap_or_default();
                println!(
                    "{scheme},{},{},{},{total},{depth}",
                    voter.gates.total,
                    voter.depth,
                    per_kind.join(",")
                );
            }
        }
    }
    Ok(())
}

fn print_json(value: &impl Serialize) {
    println!("{}", serde_json::to_string_pretty(value).expect("serializable"));
}
