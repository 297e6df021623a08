use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use codim::ccd_bench::{parse_corpus, run_bench};
use codim::scene::{load_scene, run_scene};
use codim::Error;

/// Codimensional contact simulator.
#[derive(Debug, Parser)]
#[command(name = "codim", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run a scene and write one OBJ per frame plus `stats.csv`.
    Simulate {
        scene: PathBuf,
        /// Number of frames (overrides the scene).
        #[arg(long)]
        frames: Option<usize>,
        /// Output directory (overrides the scene; default `out`).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Request bit-reproducible output.
        #[arg(long)]
        deterministic: bool,
    },
    /// Replay a CCD query corpus against the sampling oracle.
    CcdBench {
        corpus: PathBuf,
        /// Oracle samples per query.
        #[arg(long, default_value_t = 10_000)]
        samples: usize,
    },
    /// Load a scene and audit its initial state.
    Check { scene: PathBuf },
}

fn is_scene_error(e: &Error) -> bool {
    matches!(
        e,
        Error::Parse { .. }
            | Error::MissingMesh(_)
            | Error::InitialIntersection(_)
            | Error::InvalidParameter(_)
            | Error::DegenerateElement { .. }
            | Error::StrainLimitBreach { .. }
    )
}

fn fail(e: &Error, scene_stage: bool) -> ExitCode {
    eprintln!("error: {e}");
    if matches!(e, Error::Unconverged { .. }) {
        ExitCode::from(3)
    } else if scene_stage || is_scene_error(e) {
        ExitCode::from(2)
    } else {
        ExitCode::from(1)
    }
}

fn simulate(
    path: &Path,
    frames: Option<usize>,
    out: Option<PathBuf>,
    deterministic: bool,
) -> ExitCode {
    let scene = match load_scene(path) {
        Ok(s) => s,
        Err(e) => return fail(&e, true),
    };
    let frames = frames.unwrap_or(scene.config.sim.frames);
    let out = out.unwrap_or_else(|| match &scene.config.sim.output {
        Some(o) => scene.base_dir.join(o),
        None => PathBuf::from("out"),
    });
    // The solver is sequential, so every run is reproducible; the flag is
    // accepted for scripts that request it explicitly.
    let _ = deterministic || scene.config.sim.deterministic;
    let result = run_scene(&scene, frames, Some(&out), |st| {
        if !st.converged {
            eprintln!(
                "warning: step {} unconverged after {} iterations",
                st.step, st.newton_iterations
            );
        }
    });
    match result {
        Ok(s) => {
            println!(
                "{} frames, {} steps, {} unconverged, output in {}",
                s.frames_written,
                s.steps,
                s.unconverged_steps,
                out.display()
            );
            ExitCode::SUCCESS
        }
        Err(e) => fail(&e, false),
    }
}

fn ccd_bench(path: &Path, samples: usize) -> ExitCode {
    let text = match std::fs::read_to_string(path) {
        Ok(t) => t,
        Err(e) => return fail(&Error::Io(e), true),
    };
    let queries = match parse_corpus(&text, path) {
        Ok(q) => q,
        Err(e) => return fail(&e, true),
    };
    match run_bench(&queries, samples) {
        Ok(r) => {
            print!("{}", r.render());
            if r.mismatches() == 0 {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => fail(&e, true),
    }
}

fn check(path: &Path) -> ExitCode {
    match load_scene(path) {
        Ok(s) => {
            println!(
                "ok: {} nodes, {} shell triangles, {} rod segments, {} tets, {} contact faces",
                s.mesh.n_nodes(),
                s.mesh.shells.len(),
                s.mesh.rods.len(),
                s.mesh.tets.len(),
                s.mesh.faces.len()
            );
            ExitCode::SUCCESS
        }
        Err(e) => fail(&e, true),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Simulate {
            scene,
            frames,
            out,
            deterministic,
        } => simulate(&scene, frames, out, deterministic),
        Command::CcdBench { corpus, samples } => ccd_bench(&corpus, samples),
        Command::Check { scene } => check(&scene),
    }
}
