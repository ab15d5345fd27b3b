//! Command-line front end.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use crate::config::{Config, Loaded};
use crate::error::{Error, Result};
use crate::reach::{
    append_cell_rows, backward_reach, build_transition_maps, cell_csv_header, forward_reach, safe_cells,
    simulate_cells, Engine,
};
use crate::scenario_gen::write_networks;

/// Exit status for a verified-safe outcome.
pub const EXIT_SAFE: i32 = 0;
/// Exit status for unsafe or inconclusive outcomes.
pub const EXIT_UNSAFE: i32 = 1;
/// Exit status for configuration and analysis errors.
pub const EXIT_ERROR: i32 = 2;

#[derive(Parser)]
#[command(name = "nncs-reach", version, about = "Grid reachability for neural-network control loops")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Forward fixpoint from the initial set.
    Forward(RunArgs),
    /// Backward fixpoint from the unsafe set; lists cells proven safe.
    Backward(RunArgs),
    /// Random closed-loop runs from every cell; lists cells seen to fail.
    Simulate(SimArgs),
    /// Per-cell successor maps.
    Maps(RunArgs),
    /// Regenerate the shipped surrogate networks and goldens.
    Gen {
        #[arg(long, default_value = "scenarios/networks")]
        out: PathBuf,
    },
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    /// Override the unrolling depth.
    #[arg(long)]
    m: Option<usize>,
    /// Override the engine (baseline, ibp_composed, star_composed).
    #[arg(long, value_parser = parse_engine)]
    engine: Option<Engine>,
    #[arg(long)]
    output_dir: Option<PathBuf>,
}

#[derive(Args)]
struct SimArgs {
    #[command(flatten)]
    run: RunArgs,
    #[arg(long, default_value_t = 500)]
    runs: usize,
    #[arg(long, default_value_t = 60)]
    horizon: usize,
}

fn parse_engine(s: &str) -> std::result::Result<Engine, String> {
    serde_json::from_value(json!(s)).map_err(|_| format!("unknown engine {s:?}"))
}

pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_ERROR } else { EXIT_SAFE };
        }
    };
    match dispatch(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_ERROR
        }
    }
}

fn dispatch(command: Command) -> Result<i32> {
    match command {
        Command::Forward(a) => {
            let (loaded, out) = prepare(&a)?;
            let sc = &loaded.scenario;
            let r0 = loaded.r0.as_ref().ok_or_else(|| Error::Config("forward analysis needs \"r0\"".into()))?;
            let result = forward_reach(sc, r0)?;
            write(&out, "forward.json", &pretty(&result.to_json(&sc.grid))?)?;
            write(&out, "forward.csv", &result.to_csv(&sc.grid))?;
            eprintln!(
                "global cells: {}, converged at: {:?}, safe: {}",
                result.global_cells(&sc.grid),
                result.converged_at,
                result.is_safe
            );
            Ok(if result.is_safe { EXIT_SAFE } else { EXIT_UNSAFE })
        }
        Command::Backward(a) => {
            let (loaded, out) = prepare(&a)?;
            let sc = &loaded.scenario;
            let maps = build_transition_maps(sc)?;
            let possibly_unsafe = backward_reach(sc, &maps);
            let safe = safe_cells(sc, &possibly_unsafe);
            let doc = json!({
                "m": sc.m,
                "safe_count": safe.len(),
                "safe": sc.grid.index_tuples(&safe),
                "possibly_unsafe": sc.grid.index_tuples(&possibly_unsafe),
                "degraded": sc.grid.index_tuples(&maps.degraded),
                "unverifiable": sc.grid.index_tuples(&maps.unverifiable),
            });
            write(&out, "backward.json", &pretty(&doc)?)?;
            let mut csv = cell_csv_header(&sc.grid);
            append_cell_rows(&mut csv, &sc.grid, "safe", &safe);
            write(&out, "safe.csv", &csv)?;
            eprintln!("safe cells: {} of {}", safe.len(), sc.grid.total());
            let verified = match &loaded.r0 {
                Some(r0) => sc.grid.alpha_box(r0)?.is_subset(&safe),
                None => safe.len() + sc.unsafe_cells().len() - 1 == sc.grid.total(),
            };
            Ok(if verified { EXIT_SAFE } else { EXIT_UNSAFE })
        }
        Command::Simulate(a) => {
            let (loaded, out) = prepare(&a.run)?;
            let sc = &loaded.scenario;
            let flagged = simulate_cells(sc, a.runs, a.horizon);
            let doc = json!({
                "runs_per_cell": a.runs,
                "horizon": a.horizon,
                "seed": sc.seed,
                "unsafe_count": flagged.len(),
                "unsafe": sc.grid.index_tuples(&flagged),
            });
            write(&out, "simulate.json", &pretty(&doc)?)?;
            eprintln!("cells with unsafe runs: {}", flagged.len());
            Ok(if flagged.is_empty() { EXIT_SAFE } else { EXIT_UNSAFE })
        }
        Command::Maps(a) => {
            let (loaded, out) = prepare(&a)?;
            let sc = &loaded.scenario;
            let maps = build_transition_maps(sc)?;
            let fwd: Vec<Vec<serde_json::Value>> = maps
                .fwd
                .iter()
                .map(|per_cell| {
                    (0..sc.grid.total())
                        .map(|c| {
                            json!({
                                "cell": sc.grid.unflat(c),
                                "next": sc.grid.index_tuples(&per_cell[c]),
                                "exits": per_cell[c].contains(sc.out_node()),
                            })
                        })
                        .collect()
                })
                .collect();
            write(&out, "maps.json", &pretty(&json!({ "m": sc.m, "fwd": fwd }))?)?;
            Ok(EXIT_SAFE)
        }
        Command::Gen { out } => {
            write_networks(&out)?;
            eprintln!("wrote networks to {}", out.display());
            Ok(EXIT_SAFE)
        }
    }
}

fn prepare(a: &RunArgs) -> Result<(Loaded, PathBuf)> {
    let mut loaded = Config::load(&a.config)?;
    if let Some(m) = a.m {
        loaded.scenario.m = m;
    }
    if let Some(e) = a.engine {
        loaded.scenario.engine = e;
    }
    loaded.scenario.validate()?;
    let out = a
        .output_dir
        .clone()
        .or_else(|| loaded.output_dir.clone())
        .unwrap_or_else(|| PathBuf::from("out"));
    Ok((loaded, out))
}

fn pretty(v: &serde_json::Value) -> Result<String> {
    Ok(serde_json::to_string_pretty(v)? + "\n")
}

fn write(dir: &Path, name: &str, text: &str) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    std::fs::write(dir.join(name), text)?;
    Ok(())
}
