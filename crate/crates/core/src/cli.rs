//! Command-line front end.
//!
//! Every subcommand writes into `<out>/<subcommand>/` with fixed file names.
//! Exit codes: 0 success, 1 usage or configuration error, 2 data error.

use std::collections::BTreeSet;
use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use crate::ballflow::{build_bfn_with, top_corridors};
use crate::coordination::{
    alignment_fraction, coordination_network, estimate_velocities, mean_coordination, CoordinationParams, Denominator,
    LinkThreshold, PhaseKind,
};
use crate::error::{Error, Result};
use crate::graphio::{export_graph, ExportFormat};
use crate::grid::{CrossingMode, GridSpec};
use crate::ingest::{
    parse_tracking_with, phase_duration, segment_possession, Ingested, ParseOptions, PossessionParams,
};
use crate::marking::{accumulate_marking_with, marking_network, matrix_metadata, top_markers, MarkingOptions};
use crate::model::{MatchRecording, Phase, PhaseTimeline, PlayerId, Side, TeamId, WeightedGraph};
use crate::proximity::{build_spn_frame, triangle_profile, SpnOptions};
use crate::synth::{generate_synthetic, Scenario, SynthSpec};

#[derive(Debug, Parser)]
#[command(name = "tracknets", version, about = "Tracking networks from football tracking data")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Parse the input files and report warnings.
    Validate(InputArgs),
    /// Write the per-frame possession timeline.
    Phases(InputArgs),
    /// Ball flow networks.
    Bfn(BfnArgs),
    /// Signed proximity networks and the triangle profile.
    Spn(SpnArgs),
    /// Marking matrices and networks.
    Marking(MarkingArgs),
    /// Functional coordination matrices and networks.
    Fcn(FcnArgs),
    /// Generate a synthetic match with ground truth.
    Synth(SynthArgs),
}

#[derive(Debug, Args)]
struct InputArgs {
    #[arg(long)]
    tracking: PathBuf,
    #[arg(long)]
    metadata: PathBuf,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Ignore the possession column and infer phases from ball proximity.
    #[arg(long)]
    heuristic: bool,
    #[arg(long, default_value_t = 2.0)]
    control_radius: f64,
    #[arg(long, default_value_t = 13)]
    hysteresis: usize,
    /// Tolerance outside the pitch before positions are clamped.
    #[arg(long, default_value_t = crate::model::DEFAULT_MARGIN_M)]
    margin: f64,
}

#[derive(Debug, Args)]
struct OutputArgs {
    /// Comma-separated graph formats: graphjson, graphml, dot, csv.
    #[arg(long, default_value = "graphjson", value_parser = parse_formats)]
    formats: Formats,
}

#[derive(Debug, Clone)]
struct Formats(Vec<ExportFormat>);

#[derive(Debug, Args)]
struct BfnArgs {
    #[command(flatten)]
    input: InputArgs,
    #[command(flatten)]
    output: OutputArgs,
    /// Grid as COLSxROWS.
    #[arg(long, default_value = "5x5", value_parser = parse_grid)]
    grid: (usize, usize),
    /// home, away, both, or a team id.
    #[arg(long, default_value = "both")]
    team: String,
    #[arg(long, value_enum, default_value_t = ModeArg::Traversal)]
    crossing_mode: ModeArg,
    #[arg(long, default_value_t = 10)]
    top: usize,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ModeArg {
    Traversal,
    Endpoints,
}

#[derive(Debug, Args)]
struct SpnArgs {
    #[command(flatten)]
    input: InputArgs,
    #[command(flatten)]
    output: OutputArgs,
    /// Radius sweep as start:stop:step (stop included when hit) or a comma list.
    #[arg(long, default_value = "1:15:1", value_parser = parse_radii)]
    radii: Radii,
    /// Radius of the single-frame network export.
    #[arg(long, default_value_t = 7.0)]
    snapshot_radius: f64,
    /// frame_index of the exported frame; defaults to the first alive frame.
    #[arg(long)]
    snapshot_frame: Option<u64>,
    /// Only players within this distance of the ball take part.
    #[arg(long)]
    ball_window: Option<f64>,
    #[arg(long)]
    include_dead: bool,
    /// Comma-separated player ids left out of the networks.
    #[arg(long, value_delimiter = ',')]
    exclude_players: Vec<String>,
}

#[derive(Debug, Clone)]
struct Radii(Vec<f64>);

#[derive(Debug, Args)]
struct MarkingArgs {
    #[command(flatten)]
    input: InputArgs,
    #[command(flatten)]
    output: OutputArgs,
    #[arg(long, default_value_t = 1.5)]
    radius: f64,
    #[arg(long, default_value_t = 7.0)]
    t_min: f64,
    #[arg(long, default_value = "both")]
    team: String,
    #[arg(long)]
    nearest_only: bool,
    #[arg(long, default_value_t = 10)]
    top: usize,
}

#[derive(Debug, Args)]
struct FcnArgs {
    #[command(flatten)]
    input: InputArgs,
    #[command(flatten)]
    output: OutputArgs,
    #[arg(long, default_value_t = 10.0)]
    theta: f64,
    #[arg(long, default_value_t = 0.5)]
    v_min: f64,
    #[arg(long, default_value_t = 1)]
    window: u64,
    #[arg(long, value_enum, default_value_t = DenominatorArg::PairEligible)]
    denominator: DenominatorArg,
    /// "mean" or a number.
    #[arg(long, default_value = "mean", value_parser = parse_link_threshold)]
    link_threshold: LinkThreshold,
    #[arg(long, default_value = "both")]
    team: String,
    #[arg(long, value_delimiter = ',')]
    exclude_players: Vec<String>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum DenominatorArg {
    PairEligible,
    PhaseFrames,
}

#[derive(Debug, Args)]
struct SynthArgs {
    #[arg(long, value_parser = ["frozen_lattice", "scripted_paths", "random_walk"])]
    scenario: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 600.0)]
    duration: f64,
    #[arg(long, default_value_t = 25.0)]
    fps: f64,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    #[arg(long)]
    home_spacing: Option<f64>,
    #[arg(long)]
    away_spacing: Option<f64>,
    #[arg(long)]
    player_sigma: Option<f64>,
    #[arg(long)]
    ball_sigma: Option<f64>,
}

fn parse_grid(s: &str) -> std::result::Result<(usize, usize), String> {
    let (a, b) = s
        .split_once(['x', 'X'])
        .ok_or_else(|| format!("expected COLSxROWS, got '{s}'"))?;
    let n: usize = a.trim().parse().map_err(|_| format!("bad column count '{a}'"))?;
    let m: usize = b.trim().parse().map_err(|_| format!("bad row count '{b}'"))?;
    if n == 0 || m == 0 {
        return Err("grid dimensions must be >= 1".into());
    }
    Ok((n, m))
}

/// `start:stop:step`, inclusive of `stop` when the sweep lands on it (within
/// 1e-9 of a step), or a comma-separated list.
fn parse_radii(s: &str) -> std::result::Result<Radii, String> {
    let num = |t: &str| t.trim().parse::<f64>().map_err(|_| format!("bad radius '{t}'"));
    let parts: Vec<&str> = s.split(':').collect();
    let radii = match parts.as_slice() {
        [start, stop, step] => {
            let (start, stop, step) = (num(start)?, num(stop)?, num(step)?);
            if !(step > 0.0) || !start.is_finite() || !stop.is_finite() || stop < start {
                return Err(format!("invalid sweep '{s}'"));
            }
            let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
            (0..count).map(|i| start + i as f64 * step).collect()
        }
        [list] => list.split(',').map(num).collect::<std::result::Result<Vec<_>, _>>()?,
        _ => return Err(format!("expected start:stop:step or a list, got '{s}'")),
    };
    Ok(Radii(radii))
}

fn parse_formats(s: &str) -> std::result::Result<Formats, String> {
    let mut out = Vec::new();
    for part in s.split(',') {
        let f: ExportFormat = part.trim().parse().map_err(|e: Error| e.to_string())?;
        if !out.contains(&f) {
            out.push(f);
        }
    }
    Ok(Formats(out))
}

fn parse_link_threshold(s: &str) -> std::result::Result<LinkThreshold, String> {
    if s == "mean" {
        return Ok(LinkThreshold::Mean);
    }
    s.parse::<f64>()
        .map(LinkThreshold::Value)
        .map_err(|_| format!("expected 'mean' or a number, got '{s}'"))
}

/// Entry point: returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    let result = match threads_from_env() {
        Ok(Some(n)) => match rayon::ThreadPoolBuilder::new().num_threads(n).build() {
            Ok(pool) => pool.install(|| execute(cli.command)),
            Err(e) => Err(Error::Config(e.to_string())),
        },
        Ok(None) => execute(cli.command),
        Err(e) => Err(e),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Config(_) => 1,
                _ => 2,
            }
        }
    }
}

fn threads_from_env() -> Result<Option<usize>> {
    match std::env::var("TRACKNETS_THREADS") {
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(Error::Config(format!(
                "TRACKNETS_THREADS must be a positive integer, got '{v}'"
            ))),
        },
        Err(_) => Ok(None),
    }
}

fn execute(cmd: Command) -> Result<()> {
    match cmd {
        Command::Validate(a) => validate(&a),
        Command::Phases(a) => phases(&a),
        Command::Bfn(a) => bfn(&a),
        Command::Spn(a) => spn(&a),
        Command::Marking(a) => marking(&a),
        Command::Fcn(a) => fcn(&a),
        Command::Synth(a) => synth(&a),
    }
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })
}

fn write(dir: &Path, name: &str, text: &str) -> Result<()> {
    let path = dir.join(name);
    fs::write(&path, text).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })
}

fn out_dir(root: &Path, sub: &str) -> Result<PathBuf> {
    let dir = root.join(sub);
    fs::create_dir_all(&dir).map_err(|source| Error::Io {
        path: dir.display().to_string(),
        source,
    })?;
    Ok(dir)
}

fn to_json(v: &serde_json::Value) -> Result<String> {
    let mut s = serde_json::to_string_pretty(v).map_err(|e| Error::Serialization(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

struct Loaded {
    ingested: Ingested,
    timeline: PhaseTimeline,
    possession: PossessionParams,
}

fn load(a: &InputArgs) -> Result<Loaded> {
    let tracking = read(&a.tracking)?;
    let metadata = read(&a.metadata)?;
    if !(a.margin >= 0.0) {
        return Err(Error::Config(format!("margin must be >= 0, got {}", a.margin)));
    }
    let ingested = parse_tracking_with(&tracking, &metadata, &ParseOptions { margin_m: a.margin })?;
    let possession = PossessionParams {
        control_radius_m: a.control_radius,
        hysteresis_frames: a.hysteresis,
        use_explicit_column: !a.heuristic,
    };
    if !(a.control_radius > 0.0) || a.hysteresis == 0 {
        return Err(Error::Config("control radius must be > 0 and hysteresis >= 1".into()));
    }
    let timeline = segment_possession(&ingested.recording, ingested.explicit.as_ref(), &possession)?;
    Ok(Loaded {
        ingested,
        timeline,
        possession,
    })
}

impl Loaded {
    fn rec(&self) -> &MatchRecording {
        &self.ingested.recording
    }

    fn common_meta(&self) -> serde_json::Value {
        json!({
            "phase_source": self.timeline.source.as_str(),
            "control_radius_m": self.possession.control_radius_m,
            "hysteresis_frames": self.possession.hysteresis_frames,
        })
    }
}

fn sides(rec: &MatchRecording, team: &str) -> Result<Vec<Side>> {
    match team {
        "both" => Ok(vec![Side::Home, Side::Away]),
        "home" => Ok(vec![Side::Home]),
        "away" => Ok(vec![Side::Away]),
        id => Ok(vec![rec.side_of(&TeamId::from(id))?]),
    }
}

fn write_graph(dir: &Path, stem: &str, g: &WeightedGraph, formats: &Formats) -> Result<()> {
    for fmt in &formats.0 {
        let name = match fmt {
            ExportFormat::Csv => format!("{stem}_edges.csv"),
            f => format!("{stem}.{}", f.extension()),
        };
        write(dir, &name, &export_graph(g, *fmt)?)?;
    }
    Ok(())
}

fn merge(g: &mut WeightedGraph, meta: serde_json::Value) {
    if let serde_json::Value::Object(m) = meta {
        g.metadata.extend(m);
    }
}

fn validate(a: &InputArgs) -> Result<()> {
    let l = load(a)?;
    let dir = out_dir(&a.out, "validate")?;
    let rec = l.rec();
    let report = json!({
        "frames": rec.len(),
        "fps": rec.fps(),
        "home_team_id": rec.home().team_id.as_str(),
        "away_team_id": rec.away().team_id.as_str(),
        "explicit_possession": l.ingested.explicit.is_some(),
        "report": l.ingested.report,
    });
    write(&dir, "report.json", &to_json(&report)?)?;
    for w in &l.ingested.report.warnings {
        eprintln!("warning: {w}");
    }
    Ok(())
}

fn phases(a: &InputArgs) -> Result<()> {
    let l = load(a)?;
    let dir = out_dir(&a.out, "phases")?;
    let rec = l.rec();
    let mut csv = String::from("frame,period,time_ms,phase\n");
    for (f, p) in rec.frames().iter().zip(&l.timeline.labels) {
        csv.push_str(&format!(
            "{},{},{},{}\n",
            f.frame_index,
            f.period,
            f.time_ms,
            p.as_str()
        ));
    }
    write(&dir, "timeline.csv", &csv)?;
    let fps = rec.fps();
    let t = &l.timeline;
    let summary = json!({
        "frames": rec.len(),
        "fps": fps,
        "frame_counts": {
            "home": t.count(Phase::HomePossession),
            "away": t.count(Phase::AwayPossession),
            "dead": t.count(Phase::Dead),
        },
        "duration_s": {
            "home": phase_duration(t, Phase::HomePossession, fps),
            "away": phase_duration(t, Phase::AwayPossession, fps),
            "dead": phase_duration(t, Phase::Dead, fps),
        },
        "params": l.common_meta(),
    });
    write(&dir, "summary.json", &to_json(&summary)?)
}

fn bfn(a: &BfnArgs) -> Result<()> {
    let l = load(&a.input)?;
    let dir = out_dir(&a.input.out, "bfn")?;
    let rec = l.rec();
    let grid = GridSpec::new(a.grid.0, a.grid.1, *rec.pitch())?;
    let mode = match a.crossing_mode {
        ModeArg::Traversal => CrossingMode::Traversal,
        ModeArg::Endpoints => CrossingMode::Endpoints,
    };
    for side in sides(rec, &a.team)? {
        let team = rec.team_id(side).clone();
        let net = build_bfn_with(rec, &l.timeline, &team, &grid, mode)?;
        let mut g = net.to_graph();
        merge(&mut g, l.common_meta());
        write_graph(&dir, &format!("bfn_{}", side.as_str()), &g, &a.output.formats)?;
        let mut top = String::from("rank,src,dst,crossings\n");
        for (k, ((s, d), w)) in top_corridors(&net, a.top).into_iter().enumerate() {
            top.push_str(&format!("{},{},{},{w}\n", k + 1, s.node_id(), d.node_id()));
        }
        write(&dir, &format!("corridors_{}.csv", side.as_str()), &top)?;
    }
    Ok(())
}

fn excluded(ids: &[String]) -> BTreeSet<PlayerId> {
    ids.iter()
        .filter(|s| !s.is_empty())
        .map(|s| PlayerId::from(s.as_str()))
        .collect()
}

fn spn(a: &SpnArgs) -> Result<()> {
    let l = load(&a.input)?;
    let dir = out_dir(&a.input.out, "spn")?;
    let rec = l.rec();
    let opts = SpnOptions {
        excluded_players: excluded(&a.exclude_players),
        ball_window_m: a.ball_window,
        include_dead: a.include_dead,
    };
    let profile = triangle_profile(rec, &a.radii.0, &opts)?;
    write(&dir, "triangle_profile.csv", &profile.to_csv())?;
    let mut meta = profile.metadata();
    if let serde_json::Value::Object(m) = &mut meta {
        if let serde_json::Value::Object(c) = l.common_meta() {
            m.extend(c);
        }
    }
    write(&dir, "triangle_profile.json", &to_json(&meta)?)?;

    let frame = match a.snapshot_frame {
        Some(idx) => rec
            .position_of_frame(idx)
            .map(|i| &rec.frames()[i])
            .ok_or_else(|| Error::InvalidInput(format!("frame {idx} not in recording")))?,
        None => rec
            .frames()
            .iter()
            .find(|f| f.ball_alive)
            .or_else(|| rec.frames().first())
            .ok_or(Error::NoFrames)?,
    };
    if !(a.snapshot_radius >= 0.0) {
        return Err(Error::Config(format!(
            "snapshot radius must be >= 0, got {}",
            a.snapshot_radius
        )));
    }
    let mut g = build_spn_frame(frame, a.snapshot_radius, &opts).to_graph();
    merge(&mut g, l.common_meta());
    write_graph(&dir, "spn_frame", &g, &a.output.formats)
}

fn marking(a: &MarkingArgs) -> Result<()> {
    let l = load(&a.input)?;
    let dir = out_dir(&a.input.out, "marking")?;
    let rec = l.rec();
    if !(a.radius > 0.0) || !(a.t_min >= 0.0) {
        return Err(Error::Config("radius must be > 0 and t_min >= 0".into()));
    }
    let opts = MarkingOptions {
        nearest_only: a.nearest_only,
    };
    for side in sides(rec, &a.team)? {
        let team = rec.team_id(side).clone();
        let m = accumulate_marking_with(rec, &l.timeline, &team, a.radius, opts)?;
        write(&dir, &format!("matrix_{}.csv", side.as_str()), &m.to_csv())?;
        let top: Vec<_> = top_markers(&m, a.top)
            .into_iter()
            .map(|(d, o, s)| json!({ "defender": d.as_str(), "opponent": o.as_str(), "seconds": s }))
            .collect();
        let mut meta = matrix_metadata(&m);
        meta["t_min_s"] = json!(a.t_min);
        meta["top_markers"] = json!(top);
        write(&dir, &format!("matrix_{}.json", side.as_str()), &to_json(&meta)?)?;
        let mut net = marking_network(&m, rec, &l.timeline, a.t_min)?;
        merge(&mut net.graph, l.common_meta());
        write_graph(
            &dir,
            &format!("marking_{}", side.as_str()),
            &net.graph,
            &a.output.formats,
        )?;
    }
    Ok(())
}

fn fcn(a: &FcnArgs) -> Result<()> {
    let l = load(&a.input)?;
    let dir = out_dir(&a.input.out, "fcn")?;
    let rec = l.rec();
    let params = CoordinationParams {
        theta_threshold_deg: a.theta,
        v_min_mps: a.v_min,
        window_frames: a.window,
        denominator: match a.denominator {
            DenominatorArg::PairEligible => Denominator::PairEligible,
            DenominatorArg::PhaseFrames => Denominator::PhaseFrames,
        },
        excluded_players: excluded(&a.exclude_players),
    };
    params.validate()?;
    let vel = estimate_velocities(rec, a.window)?;
    let mut summary = serde_json::Map::new();
    for side in sides(rec, &a.team)? {
        let team = rec.team_id(side).clone();
        for kind in [PhaseKind::Defensive, PhaseKind::Offensive] {
            let m = alignment_fraction(&vel, rec, &l.timeline, &team, kind, &params)?;
            let stem = format!("{}_{}", side.as_str(), kind.as_str());
            write(&dir, &format!("matrix_{stem}.csv"), &m.to_csv())?;
            let mut meta = m.metadata();
            let mean = mean_coordination(&m).ok();
            meta["mean_coordination"] = json!(mean.map(|s| s.mean));
            meta["eligible_pairs"] = json!(mean.map(|s| s.pairs).unwrap_or(0));
            if let serde_json::Value::Object(c) = l.common_meta() {
                meta.as_object_mut().expect("object").extend(c);
            }
            write(&dir, &format!("params_{stem}.json"), &to_json(&meta)?)?;
            summary.insert(stem.clone(), json!(mean.map(|s| s.mean)));
            let mut g = coordination_network(&m, rec, &l.timeline, a.link_threshold)?;
            merge(&mut g, l.common_meta());
            write_graph(&dir, &format!("fcn_{stem}"), &g, &a.output.formats)?;
        }
    }
    write(
        &dir,
        "mean_coordination.json",
        &to_json(&serde_json::Value::Object(summary))?,
    )
}

fn synth(a: &SynthArgs) -> Result<()> {
    let mut scenario: Scenario = a.scenario.parse()?;
    match &mut scenario {
        Scenario::FrozenLattice {
            home_spacing_m,
            away_spacing_m,
        } => {
            *home_spacing_m = a.home_spacing.unwrap_or(*home_spacing_m);
            *away_spacing_m = a.away_spacing.unwrap_or(*away_spacing_m);
        }
        Scenario::RandomWalk {
            player_sigma_m,
            ball_sigma_m,
        } => {
            *player_sigma_m = a.player_sigma.unwrap_or(*player_sigma_m);
            *ball_sigma_m = a.ball_sigma.unwrap_or(*ball_sigma_m);
        }
        Scenario::ScriptedPaths => {}
    }
    let spec = SynthSpec {
        seed: a.seed,
        duration_s: a.duration,
        fps: a.fps,
        scenario,
    };
    let out = generate_synthetic(&spec)?;
    let dir = out_dir(&a.out, "synth")?;
    write(&dir, "tracking.csv", &out.tracking)?;
    write(&dir, "metadata.json", &out.metadata)?;
    write(&dir, "truth.json", &out.truth)
}
