//! `untangle`: scene generation, intersection analysis, static untangling and
//! simulation from the command line.
//!
//! Exit codes: 0 clean, 1 internal or solver failure, 2 bad input, 3 the
//! result still has intersecting triangle pairs.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use cloth_untangle::energy::ElasticRest;
use cloth_untangle::graph::{build_input_graph, BodyFrame, GraphConfig, WorldGraph};
use cloth_untangle::icloss::ic_loss_value;
use cloth_untangle::io::*;
use cloth_untangle::mesh::TriMesh;
use cloth_untangle::scenes::{generate, SceneKind, SceneRecipe};
use cloth_untangle::solver::{
    resolve_static, simulate_sequence, Ablation, BodySequence, ResolveStatus, SimState, SolverError,
};
use cloth_untangle::Vec3;

#[derive(Parser)]
#[command(name = "untangle", version, about = "Cloth intersection analysis and untangling")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a synthetic scene: garment.obj, body.mseq (when the scene has a
    /// body) and config.json.
    Genscene {
        #[arg(long)]
        kind: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
        /// Grid cells per sheet side (scene default when omitted).
        #[arg(long)]
        resolution: Option<usize>,
        /// Body frames.
        #[arg(long, default_value_t = 100)]
        frames: usize,
        #[arg(long, default_value_t = 1.0)]
        scale: f64,
    },
    /// Count intersections and contours of an OBJ mesh or of every frame of
    /// an .mseq sequence.
    Analyze {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        csv: PathBuf,
        /// Contours of the last frame as OBJ polylines.
        #[arg(long)]
        contours: Option<PathBuf>,
        /// World graph of the last frame as JSON.
        #[arg(long)]
        graph: Option<PathBuf>,
    },
    /// Untangle a static mesh.
    Resolve {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        config: PathBuf,
        /// Untangled mesh (OBJ).
        #[arg(long)]
        out: PathBuf,
        /// Per-iteration intersection counts; defaults to the output path
        /// with a .csv extension.
        #[arg(long)]
        trajectory: Option<PathBuf>,
        /// Optional body; its first frame is used.
        #[arg(long)]
        body: Option<PathBuf>,
    },
    /// Simulate a garment on a moving body, one step per body frame.
    Simulate {
        #[arg(long)]
        garment: PathBuf,
        #[arg(long)]
        body: PathBuf,
        #[arg(long)]
        config: PathBuf,
        /// Overrides the ablation in the config file.
        #[arg(long)]
        ablation: Option<String>,
        /// Write the garment every this many frames (0 disables).
        #[arg(long, default_value_t = 0)]
        dump_every: usize,
        /// Output directory for stats.csv and frame meshes.
        #[arg(long)]
        out: PathBuf,
        /// Keep wall-clock times in stats.csv (otherwise written as 0 so that
        /// reruns produce identical files).
        #[arg(long)]
        record_timing: bool,
        /// Simulate only the first this many body frames.
        #[arg(long)]
        frames: Option<usize>,
    },
}

/// Failure with its exit code.
enum Failure {
    Internal(String),
    Input(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Internal(_) => 1,
            Failure::Input(_) => 2,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Internal(m) | Failure::Input(m) => m,
        }
    }
}

impl From<IoError> for Failure {
    fn from(e: IoError) -> Self {
        Failure::Input(e.to_string())
    }
}

impl From<SolverError> for Failure {
    fn from(e: SolverError) -> Self {
        Failure::Internal(e.to_string())
    }
}

/// Whether a command finished with intersections left.
enum Outcome {
    Clean,
    Intersecting,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    if let Err(e) = configure_threads() {
        eprintln!("error: {}", e.message());
        return ExitCode::from(e.code());
    }
    let result = match cli.command {
        Command::Genscene {
            kind,
            seed,
            out,
            resolution,
            frames,
            scale,
        } => genscene(&kind, seed, &out, resolution, frames, scale),
        Command::Analyze {
            input,
            csv,
            contours,
            graph,
        } => analyze(&input, &csv, contours.as_deref(), graph.as_deref()),
        Command::Resolve {
            input,
            config,
            out,
            trajectory,
            body,
        } => resolve(&input, &config, &out, trajectory.as_deref(), body.as_deref()),
        Command::Simulate {
            garment,
            body,
            config,
            ablation,
            dump_every,
            out,
            record_timing,
            frames,
        } => simulate(SimulateArgs {
            garment: &garment,
            body: &body,
            config: &config,
            ablation: ablation.as_deref(),
            dump_every,
            out: &out,
            record_timing,
            frames,
        }),
    };
    match result {
        Ok(Outcome::Clean) => ExitCode::SUCCESS,
        Ok(Outcome::Intersecting) => ExitCode::from(3),
        Err(e) => {
            eprintln!("error: {}", e.message());
            ExitCode::from(e.code())
        }
    }
}

/// Caps rayon's worker count from `CONTOUR_THREADS`.
fn configure_threads() -> Result<(), Failure> {
    let Ok(value) = std::env::var("CONTOUR_THREADS") else {
        return Ok(());
    };
    let threads: usize = value
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| Failure::Input(format!("CONTOUR_THREADS must be a positive integer, got '{value}'")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| Failure::Internal(e.to_string()))
}

fn create_dir(dir: &Path) -> Result<(), Failure> {
    fs::create_dir_all(dir).map_err(|e| Failure::Input(format!("{}: {e}", dir.display())))
}

fn genscene(
    kind: &str,
    seed: u64,
    out: &Path,
    resolution: Option<usize>,
    frames: usize,
    scale: f64,
) -> Result<Outcome, Failure> {
    let kind: SceneKind = kind.parse().map_err(|e: cloth_untangle::scenes::SceneError| Failure::Input(e.to_string()))?;
    let mut recipe = SceneRecipe::new(kind, seed);
    if let Some(r) = resolution {
        recipe.resolution = r;
    }
    recipe.frames = frames;
    recipe.scale = scale;
    let scene = generate(&recipe).map_err(|e| Failure::Input(e.to_string()))?;
    create_dir(out)?;
    let g = &scene.garment;
    write_obj(&out.join("garment.obj"), &g.positions, &g.faces, &g.pieces)?;
    if let Some(body) = &scene.body {
        write_motion_sequence(&out.join("body.mseq"), body)?;
    }
    write_config(&out.join("config.json"), &scene.config)?;
    Ok(Outcome::Clean)
}

/// Garment topology plus one or more position frames.
struct Frames {
    mesh: TriMesh,
    frames: Vec<Vec<Vec3>>,
}

fn read_frames(path: &Path) -> Result<Frames, Failure> {
    if path.extension().is_some_and(|e| e == "mseq") {
        let seq = read_motion_sequence(path)?;
        let first = seq
            .frames
            .first()
            .ok_or_else(|| Failure::Input(format!("{}: sequence has no frames", path.display())))?;
        let mesh = TriMesh::build(first, seq.faces.clone(), 1.0).map_err(|e| Failure::Input(e.to_string()))?;
        Ok(Frames {
            mesh,
            frames: seq.frames,
        })
    } else {
        let (mesh, positions) = read_obj(path)?.into_trimesh(1.0)?;
        Ok(Frames {
            mesh,
            frames: vec![positions],
        })
    }
}

fn graph_at(mesh: &TriMesh, positions: &[Vec3]) -> WorldGraph {
    build_input_graph(mesh, positions, None, None, &GraphConfig::default())
}

fn analyze(input: &Path, csv_path: &Path, contours: Option<&Path>, graph_path: Option<&Path>) -> Result<Outcome, Failure> {
    let Frames { mesh, frames } = read_frames(input)?;
    let mut rows = Vec::with_capacity(frames.len());
    let mut last = None;
    for (k, positions) in frames.iter().enumerate() {
        let graph = graph_at(&mesh, positions);
        let non_repelled = graph.node_class.non_repelled_count();
        rows.push(vec![
            k.to_string(),
            graph.intersections.len().to_string(),
            format!("{:?}", ic_loss_value(&graph.intersections)),
            graph.open_contour_count().to_string(),
            graph.closed_contour_count().to_string(),
            (mesh.vertex_count() - non_repelled).to_string(),
            non_repelled.to_string(),
        ]);
        last = Some(graph);
    }
    let mut w = csv::Writer::from_path(csv_path).map_err(|e| Failure::Input(e.to_string()))?;
    let header = [
        "frame",
        "intersecting_pairs",
        "ic_loss",
        "open_contours",
        "closed_contours",
        "repelled_nodes",
        "non_repelled_nodes",
    ];
    let write = |w: &mut csv::Writer<fs::File>, row: &[String]| w.write_record(row).map_err(|e| Failure::Input(e.to_string()));
    write(&mut w, &header.map(String::from))?;
    for row in &rows {
        write(&mut w, row)?;
    }
    w.flush().map_err(|e| Failure::Input(e.to_string()))?;
    let last = last.expect("at least one frame");
    if let Some(path) = contours {
        write_contours_obj(path, &last)?;
    }
    if let Some(path) = graph_path {
        write_graph_json(path, &last)?;
    }
    Ok(if last.intersections.is_empty() {
        Outcome::Clean
    } else {
        Outcome::Intersecting
    })
}

fn read_body(path: &Path) -> Result<(TriMesh, MotionSequence), Failure> {
    let seq = read_motion_sequence(path)?;
    let first = seq
        .frames
        .first()
        .ok_or_else(|| Failure::Input(format!("{}: body sequence has no frames", path.display())))?;
    let mesh = TriMesh::build(first, seq.faces.clone(), 1.0).map_err(|e| Failure::Input(e.to_string()))?;
    Ok((mesh, seq))
}

fn resolve(input: &Path, config: &Path, out: &Path, trajectory: Option<&Path>, body: Option<&Path>) -> Result<Outcome, Failure> {
    let cfg = read_config(config)?;
    let obj = read_obj(input)?;
    let pieces = obj.pieces.clone();
    let (mesh, positions) = obj.into_trimesh(cfg.material.density)?;
    let body = body.map(read_body).transpose()?;
    let rest = ElasticRest::from_mesh(&mesh);
    let frame = body.as_ref().map(|(m, seq)| BodyFrame {
        mesh: m,
        positions: &seq.frames[0],
    });
    let outcome = resolve_static(&SimState::at_rest(positions), &mesh, &rest, frame, &cfg.material, &cfg.solver)?;
    write_obj(out, &outcome.state.positions, mesh.faces(), &pieces)?;
    let trajectory_path = trajectory.map(Path::to_path_buf).unwrap_or_else(|| out.with_extension("csv"));
    let mut w = csv::Writer::from_path(&trajectory_path).map_err(|e| Failure::Input(e.to_string()))?;
    let io = |e: csv::Error| Failure::Input(e.to_string());
    w.write_record(["iteration", "intersecting_pairs"]).map_err(io)?;
    for (k, count) in outcome.trajectory.iter().enumerate() {
        w.write_record([k.to_string(), count.to_string()]).map_err(io)?;
    }
    w.flush().map_err(|e| Failure::Input(e.to_string()))?;
    Ok(match outcome.status {
        ResolveStatus::Resolved => Outcome::Clean,
        ResolveStatus::Unresolved => Outcome::Intersecting,
    })
}

struct SimulateArgs<'a> {
    garment: &'a Path,
    body: &'a Path,
    config: &'a Path,
    ablation: Option<&'a str>,
    dump_every: usize,
    out: &'a Path,
    record_timing: bool,
    frames: Option<usize>,
}

fn simulate(args: SimulateArgs<'_>) -> Result<Outcome, Failure> {
    // Every input is read and checked before anything is written.
    let mut cfg = read_config(args.config)?;
    if let Some(name) = args.ablation {
        cfg.solver.ablation = Ablation::parse(name).ok_or_else(|| {
            let names: Vec<&str> = Ablation::ALL.iter().map(|a| a.name()).collect();
            Failure::Input(format!("unknown ablation '{name}' (expected one of {})", names.join(", ")))
        })?;
    }
    let obj = read_obj(args.garment)?;
    let pieces = obj.pieces.clone();
    let (mesh, positions) = obj.into_trimesh(cfg.material.density)?;
    let (body_mesh, seq) = read_body(args.body)?;
    let frames = match args.frames {
        Some(n) if n > seq.frames.len() => {
            return Err(Failure::Input(format!("--frames {n} exceeds the {} body frames", seq.frames.len())))
        }
        Some(n) => &seq.frames[..n],
        None => &seq.frames[..],
    };
    if (1.0 / seq.fps - cfg.solver.dt).abs() > 1e-9 * cfg.solver.dt {
        log::warn!("body sequence runs at {} fps but the solver step is {} s", seq.fps, cfg.solver.dt);
    }

    create_dir(args.out)?;
    let dump = |state: &SimState| -> Result<(), Failure> {
        let frame = state.frame_index - 1;
        if args.dump_every > 0 && frame % args.dump_every == 0 {
            let path = args.out.join(format!("frame_{frame:05}.obj"));
            write_obj(&path, &state.positions, mesh.faces(), &pieces)?;
        }
        Ok(())
    };
    let stats = simulate_sequence(
        &mesh,
        SimState::at_rest(positions),
        BodySequence {
            mesh: &body_mesh,
            frames,
        },
        &cfg.material,
        &cfg.solver,
        dump,
    )?;
    let records: Vec<StatsRecord> = stats.iter().map(|s| StatsRecord::from_stats(s, args.record_timing)).collect();
    write_stats_csv(&records, &args.out.join("stats.csv"))?;
    Ok(match stats.last() {
        Some(s) if s.intersecting_pairs > 0 => Outcome::Intersecting,
        _ => Outcome::Clean,
    })
}
