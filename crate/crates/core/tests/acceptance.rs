//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Tolerances are fixed here and nowhere else:
//! * grid oracle: exact sequence equality, total runtime < 5 s
//! * flow conservation: exact integer totals; summed seconds within 4 ulp
//! * triangle census and parity: exact
//! * marking: |seconds - truth| <= 1/fps per pair, exact set equality at t_min
//! * velocity: speed error < 1e-3 m/s, direction error < 0.1 deg
//! * coordination: exact 1.0 / 0.0, |value - 0.3| <= 1/eligible, exact symmetry
//! * phase partition: exact frame counts; summed seconds within 4 ulp
//! * round trip and CLI output: exact equality
//! * end to end: < 30 s wall clock

use std::collections::{BTreeMap, BTreeSet};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use tracknets::ballflow::build_bfn;
use tracknets::coordination::{
    alignment_fraction, coordination_network, estimate_velocities, CoordinationMatrix, CoordinationParams,
    LinkThreshold, PhaseKind,
};
use tracknets::graphio::{export_graph, import_graph, ExportFormat};
use tracknets::grid::{cell_index, segment_crossings, CellId, GridSpec};
use tracknets::ingest::{parse_tracking, phase_duration, segment_possession, PossessionParams};
use tracknets::marking::{accumulate_marking, marking_network, MarkingNetwork};
use tracknets::model::{
    standard_attack_directions, AttackDirection, Frame, MatchRecording, Phase, PhaseSource, PhaseTimeline, PitchSpec,
    Position, Side, Sign, TeamId, TeamSheet,
};
use tracknets::proximity::{build_spn_frame, enumerate_triangles, triangle_census, SpnOptions, TriangleCounts};
use tracknets::synth::{synthesize, Scenario, SynthMatch, SynthSpec, AWAY_TEAM, HOME_TEAM};

type Outcome = std::result::Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

fn within_ulps(a: f64, b: f64, ulps: f64) -> bool {
    (a - b).abs() <= ulps * f64::EPSILON * a.abs().max(b.abs())
}

fn scripted_10min() -> SynthMatch {
    synthesize(&SynthSpec::new(7, 600.0, Scenario::ScriptedPaths)).unwrap()
}

fn random_walk_10min(seed: u64) -> SynthMatch {
    synthesize(&SynthSpec::new(seed, 600.0, "random_walk".parse().unwrap())).unwrap()
}

// ---------------------------------------------------------------- grid

/// Cell of `p` computed from scratch: half-open cells, clamped at the border.
fn oracle_cell(p: Position, g: &GridSpec) -> CellId {
    let idx = |v: f64, lo: f64, size: f64, n: usize| ((v - lo) / size).floor().clamp(0.0, (n - 1) as f64) as usize;
    CellId::new(
        idx(
            p.x,
            -g.pitch.length_m / 2.0,
            g.pitch.length_m / g.n_cols as f64,
            g.n_cols,
        ),
        idx(p.y, -g.pitch.width_m / 2.0, g.pitch.width_m / g.n_rows as f64, g.n_rows),
    )
}

fn lerp(p0: Position, p1: Position, t: f64) -> Position {
    Position::new(p0.x + (p1.x - p0.x) * t, p0.y + (p1.y - p0.y) * t)
}

/// Fills in the moves between two samples that are not 4-neighbours by
/// bisection; an unresolvable diagonal step is taken x first.
fn refine(
    p0: Position,
    p1: Position,
    g: &GridSpec,
    t0: f64,
    c0: CellId,
    t1: f64,
    c1: CellId,
    out: &mut Vec<(CellId, CellId)>,
) {
    if c0 == c1 {
        return;
    }
    if c0.col.abs_diff(c1.col) + c0.row.abs_diff(c1.row) == 1 {
        out.push((c0, c1));
        return;
    }
    if t1 - t0 < 1e-13 {
        let mid = CellId::new(c1.col, c0.row);
        refine(p0, p1, g, t0, c0, t0, mid, out);
        refine(p0, p1, g, t1, mid, t1, c1, out);
        return;
    }
    let tm = 0.5 * (t0 + t1);
    let cm = oracle_cell(lerp(p0, p1, tm), g);
    refine(p0, p1, g, t0, c0, tm, cm, out);
    refine(p0, p1, g, tm, cm, t1, c1, out);
}

fn sampled_crossings(p0: Position, p1: Position, g: &GridSpec) -> Vec<(CellId, CellId)> {
    const SAMPLES: usize = 10_000;
    let mut out = Vec::new();
    let mut prev = (0.0, oracle_cell(p0, g));
    for i in 1..=SAMPLES {
        let t = i as f64 / SAMPLES as f64;
        let c = oracle_cell(if i == SAMPLES { p1 } else { lerp(p0, p1, t) }, g);
        refine(p0, p1, g, prev.0, prev.1, t, c, &mut out);
        prev = (t, c);
    }
    out
}

fn grid_oracle() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let pitch = PitchSpec::default();
    let mut checked = 0;
    let mut total_moves = 0;
    for (n, m) in [(5, 5), (7, 4)] {
        let g = GridSpec::new(n, m, pitch).unwrap();
        for _ in 0..1000 {
            let mut p = || Position::new(rng.gen_range(-52.5..52.5), rng.gen_range(-34.0..34.0));
            let (p0, p1) = (p(), p());
            let got = segment_crossings(p0, p1, &g);
            let want = sampled_crossings(p0, p1, &g);
            ensure!(
                got == want,
                "{n}x{m} segment {p0:?} -> {p1:?}: got {got:?}, oracle {want:?}"
            );
            ensure!(
                cell_index(p0, &g) == oracle_cell(p0, &g),
                "cell_index mismatch at {p0:?}"
            );
            checked += 1;
            total_moves += got.len();
        }
    }
    let elapsed = start.elapsed();
    ensure!(elapsed < Duration::from_secs(5), "took {elapsed:?}");
    Ok(format!(
        "{checked}/2000 segments match ({total_moves} moves), {:.2} s",
        elapsed.as_secs_f64()
    ))
}

// ---------------------------------------------------------------- flow

fn bfn_conservation() -> Outcome {
    let m = random_walk_10min(99);
    let (r, t) = (&m.recording, &m.timeline);
    let g = GridSpec::new(5, 5, PitchSpec::default()).unwrap();
    let frames = r.frames();
    let mut report = Vec::new();
    for (team, side) in [(HOME_TEAM, Side::Home), (AWAY_TEAM, Side::Away)] {
        let bfn = build_bfn(r, t, &team.into(), &g).unwrap();
        let own = Phase::possession(side);
        let flip = |p: Position, period: u8| {
            let reversed = (side == Side::Home) == (period == 2);
            if reversed {
                Position::new(-p.x, -p.y)
            } else {
                p
            }
        };
        let mut changes = 0u64;
        for k in 0..frames.len().saturating_sub(1) {
            let (a, b) = (&frames[k], &frames[k + 1]);
            if t.labels[k] != own || t.labels[k + 1] != own || a.period != b.period {
                continue;
            }
            if let (Some(ba), Some(bb)) = (a.ball, b.ball) {
                let (ca, cb) = (oracle_cell(flip(ba, a.period), &g), oracle_cell(flip(bb, b.period), &g));
                changes += (ca.col.abs_diff(cb.col) + ca.row.abs_diff(cb.row)) as u64;
            }
        }
        let possession = t.labels.iter().filter(|l| **l == own).count() as u64;
        let dwell_frames: u64 = bfn.dwell_frames.values().sum();
        let dwell_s: f64 = g.cells().map(|c| bfn.dwell_s(c)).sum();
        let expected_s = possession as f64 / r.fps();
        ensure!(
            bfn.total_crossings() == changes,
            "{team}: edges {} vs oracle {changes}",
            bfn.total_crossings()
        );
        ensure!(
            dwell_frames == possession,
            "{team}: dwell frames {dwell_frames} vs {possession}"
        );
        ensure!(
            within_ulps(dwell_s, expected_s, 4.0),
            "{team}: dwell {dwell_s} s vs {expected_s} s"
        );
        report.push(format!("{team}: {changes} crossings, {possession} frames"));
    }
    Ok(report.join("; "))
}

// ---------------------------------------------------------------- spn

fn random_frame(rng: &mut ChaCha8Rng, k: u64) -> Frame {
    let mut f = Frame::new(k, k as i64 * 40, 1).with_ball(Position::new(0.0, 0.0), true);
    for i in 1..=11 {
        for (side, prefix) in [(Side::Home, "h"), (Side::Away, "a")] {
            let p = Position::new(rng.gen_range(-52.5..52.5), rng.gen_range(-34.0..34.0));
            f = f.with_player(format!("{prefix}{i}"), side, p);
        }
    }
    f
}

fn spn_combinatorics() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let opts = SpnOptions::default();
    let complete = triangle_census(&build_spn_frame(&random_frame(&mut rng, 0), 200.0, &opts));
    let want = TriangleCounts {
        aaa: 165,
        bbb: 165,
        aab: 605,
        abb: 605,
    };
    ensure!(complete == want, "complete graph census {complete:?}");
    let mut comparisons = 0;
    for k in 0..200 {
        let f = random_frame(&mut rng, k);
        let mut prev: Option<(BTreeSet<(usize, usize)>, TriangleCounts)> = None;
        for r in 1..=15 {
            let g = build_spn_frame(&f, r as f64, &opts);
            let edges: BTreeSet<_> = g.edges.iter().map(|(i, j, _)| (*i, *j)).collect();
            let c = triangle_census(&g);
            if let Some((pe, pc)) = &prev {
                ensure!(pe.is_subset(&edges), "frame {k}: edge set shrinks at r={r}");
                ensure!(
                    c.aaa >= pc.aaa && c.bbb >= pc.bbb && c.aab >= pc.aab && c.abb >= pc.abb,
                    "frame {k}: census decreases at r={r}"
                );
                comparisons += 1;
            }
            prev = Some((edges, c));
        }
    }
    Ok(format!(
        "complete graph (165, 165, 605, 605); {comparisons} radius steps monotone"
    ))
}

fn sign_parity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(32);
    let mut triangles = 0u64;
    for k in 0..200 {
        let f = random_frame(&mut rng, k);
        for r in 1..=15 {
            let g = build_spn_frame(&f, r as f64, &SpnOptions::default());
            let sign: BTreeMap<(usize, usize), Sign> = g.edges.iter().map(|(i, j, s)| ((*i, *j), *s)).collect();
            let tri = enumerate_triangles(&g);
            ensure!(
                tri.len() as u64 == triangle_census(&g).total(),
                "frame {k} r={r}: enumeration and census disagree"
            );
            for [a, b, c] in tri {
                let neg = [(a, b), (a, c), (b, c)]
                    .iter()
                    .filter(|e| sign[e] == Sign::Negative)
                    .count();
                ensure!(
                    neg == 0 || neg == 2,
                    "frame {k} r={r}: triangle {a},{b},{c} has {neg} negative edges"
                );
                triangles += 1;
            }
        }
    }
    Ok(format!("{triangles} triangles, 0 violations"))
}

// ---------------------------------------------------------------- marking

fn networks_bipartite(nets: &[&MarkingNetwork]) -> bool {
    nets.iter().all(|n| n.is_bipartite())
}

fn marking_oracle() -> Outcome {
    let m = scripted_10min();
    let (r, t) = (&m.recording, &m.timeline);
    let fps = r.fps();
    let mut nets = Vec::new();
    let mut worst: f64 = 0.0;
    for (team, side) in [(HOME_TEAM, "home"), (AWAY_TEAM, "away")] {
        let mm = accumulate_marking(r, t, &team.into(), 1.5).unwrap();
        for pair in m.truth["marking"]["pairs"].as_array().unwrap() {
            if pair["defending"] != side {
                continue;
            }
            let got = mm
                .seconds_for(
                    &pair["defender"].as_str().unwrap().into(),
                    &pair["opponent"].as_str().unwrap().into(),
                )
                .unwrap();
            let want = pair["seconds"].as_f64().unwrap();
            worst = worst.max((got - want).abs());
            ensure!((got - want).abs() <= 1.0 / fps, "{pair}: got {got} s");
        }
        nets.push(marking_network(&mm, r, t, 7.0).unwrap());
    }
    let kept: BTreeSet<(String, String)> = nets
        .iter()
        .flat_map(|n| n.graph.edges.iter().map(|e| (e.src.clone(), e.dst.clone())))
        .collect();
    let truth: BTreeSet<(String, String)> = m.truth["marking"]["pairs"]
        .as_array()
        .unwrap()
        .iter()
        .filter(|p| p["above_t_min"].as_bool().unwrap())
        .map(|p| {
            let (d, o) = (p["defender"].as_str().unwrap(), p["opponent"].as_str().unwrap());
            let (ds, os) = if p["defending"] == "home" {
                ("home", "away")
            } else {
                ("away", "home")
            };
            let (a, b) = (format!("{ds}:{d}"), format!("{os}:{o}"));
            if a <= b {
                (a, b)
            } else {
                (b, a)
            }
        })
        .collect();
    let canonical: BTreeSet<(String, String)> = kept
        .into_iter()
        .map(|(a, b)| if a <= b { (a, b) } else { (b, a) })
        .collect();
    ensure!(canonical == truth, "t_min edges {canonical:?} vs truth {truth:?}");

    let walk = random_walk_10min(5);
    let mut walk_nets = Vec::new();
    for team in [HOME_TEAM, AWAY_TEAM] {
        let mm = accumulate_marking(&walk.recording, &walk.timeline, &team.into(), 1.5).unwrap();
        walk_nets.push(marking_network(&mm, &walk.recording, &walk.timeline, 0.0).unwrap());
    }
    let all: Vec<&MarkingNetwork> = nets.iter().chain(walk_nets.iter()).collect();
    ensure!(networks_bipartite(&all), "non-bipartite marking network");
    Ok(format!(
        "max |error| {worst} s (limit {}), t_min set {:?}, {} networks bipartite",
        1.0 / fps,
        truth,
        all.len()
    ))
}

// ---------------------------------------------------------------- coordination

fn single_player_recording(path: impl Fn(f64) -> Position, n: usize) -> MatchRecording {
    let frames = (0..n)
        .map(|k| {
            Frame::new(k as u64, k as i64 * 40, 1)
                .with_ball(Position::new(0.0, 0.0), true)
                .with_player("p", Side::Home, path(k as f64 / 25.0))
        })
        .collect();
    MatchRecording::new(
        PitchSpec::default(),
        25.0,
        TeamSheet::new("H", vec!["p".into()]).unwrap(),
        TeamSheet::new("A", vec!["q".into()]).unwrap(),
        standard_attack_directions(AttackDirection::PositiveX),
        frames,
    )
    .unwrap()
}

fn velocity_accuracy() -> Outcome {
    let (r0, w) = (10.0, 0.1);
    let n = 25 * 120;
    let rec = single_player_recording(|t| Position::new(r0 * (w * t).cos(), r0 * (w * t).sin()), n);
    let v = estimate_velocities(&rec, 1).unwrap();
    let (mut max_speed, mut max_dir) = (0.0f64, 0.0f64);
    for k in 1..n - 1 {
        let t = k as f64 / 25.0;
        let est = v.get(k, &"p".into()).ok_or("missing velocity")?;
        let (tx, ty) = (-(w * t).sin(), (w * t).cos());
        max_speed = max_speed.max((est.speed() - r0 * w).abs());
        let cos = ((est.vx * tx + est.vy * ty) / est.speed()).clamp(-1.0, 1.0);
        max_dir = max_dir.max(cos.acos().to_degrees());
    }
    ensure!(max_speed < 1e-3, "speed error {max_speed}");
    ensure!(max_dir < 0.1, "direction error {max_dir} deg");
    Ok(format!(
        "{} interior frames, max speed error {max_speed:.2e} m/s, max direction error {max_dir:.2e} deg",
        n - 2
    ))
}

fn symmetric(m: &CoordinationMatrix) -> bool {
    let n = m.players.len();
    (0..n).all(|i| (0..n).all(|j| m.values[i][j] == m.values[j][i] && m.eligible[i][j] == m.eligible[j][i]))
}

fn orthogonal_fixture() -> (MatchRecording, PhaseTimeline) {
    let n = 500;
    let frames = (0..n)
        .map(|k| {
            let s = k as f64 * 0.06;
            Frame::new(k as u64, k as i64 * 40, 1)
                .with_ball(Position::new(0.0, 0.0), true)
                .with_player("p1", Side::Home, Position::new(-20.0 + s, 0.0))
                .with_player("p2", Side::Home, Position::new(10.0, -15.0 + s))
                .with_player("p3", Side::Home, Position::new(20.0 - s, 5.0))
        })
        .collect();
    let rec = MatchRecording::new(
        PitchSpec::default(),
        25.0,
        TeamSheet::new("H", vec!["p1".into(), "p2".into(), "p3".into()]).unwrap(),
        TeamSheet::new("A", vec!["q".into()]).unwrap(),
        standard_attack_directions(AttackDirection::PositiveX),
        frames,
    )
    .unwrap();
    (
        rec,
        PhaseTimeline::new(vec![Phase::HomePossession; n], PhaseSource::Explicit),
    )
}

fn coordination_limits() -> Outcome {
    let mut matrices = Vec::new();

    let walk = random_walk_10min(8);
    let v = estimate_velocities(&walk.recording, 1).unwrap();
    let wide = CoordinationParams {
        theta_threshold_deg: 180.0,
        ..Default::default()
    };
    let mut eligible_pairs = 0;
    for team in [HOME_TEAM, AWAY_TEAM] {
        for kind in [PhaseKind::Offensive, PhaseKind::Defensive] {
            let m = alignment_fraction(&v, &walk.recording, &walk.timeline, &team.into(), kind, &wide).unwrap();
            let n = m.players.len();
            for i in 0..n {
                for j in i + 1..n {
                    if m.eligible[i][j] > 0 {
                        eligible_pairs += 1;
                        ensure!(
                            m.values[i][j] == 1.0,
                            "theta=180: {team} {kind:?} pair {i},{j} = {}",
                            m.values[i][j]
                        );
                    }
                }
            }
            matrices.push(m);
        }
    }
    ensure!(eligible_pairs > 0, "no eligible pairs in the random walk");

    let (rec, t) = orthogonal_fixture();
    let v = estimate_velocities(&rec, 1).unwrap();
    let m = alignment_fraction(&v, &rec, &t, &"H".into(), PhaseKind::Offensive, &Default::default()).unwrap();
    ensure!(
        m.values[0][1] == 0.0 && m.eligible[0][1] == 500,
        "orthogonal pair: {} over {}",
        m.values[0][1],
        m.eligible[0][1]
    );
    ensure!(m.values[1][2] == 0.0, "orthogonal pair p2-p3: {}", m.values[1][2]);
    matrices.push(m);

    let s = scripted_10min();
    let v = estimate_velocities(&s.recording, 1).unwrap();
    let mut scripted = Vec::new();
    for kind in [PhaseKind::Offensive, PhaseKind::Defensive] {
        let m = alignment_fraction(
            &v,
            &s.recording,
            &s.timeline,
            &HOME_TEAM.into(),
            kind,
            &Default::default(),
        )
        .unwrap();
        let value = m.value_for(&"h2".into(), &"h3".into()).unwrap();
        let (i, j) = (1, 2);
        let elig = m.eligible[i][j];
        ensure!(elig > 0, "scripted pair never eligible");
        ensure!(
            (value - 0.3).abs() <= 1.0 / elig as f64,
            "{kind:?}: {value} over {elig} frames"
        );
        scripted.push(format!("{}={value:.3}/{elig}", kind.as_str()));
        matrices.push(m);
    }
    ensure!(matrices.iter().all(symmetric), "asymmetric matrix");
    Ok(format!(
        "theta=180 -> 1.0 on {eligible_pairs} eligible pairs; orthogonal -> 0.0; scripted {}; {} matrices symmetric",
        scripted.join(", "),
        matrices.len()
    ))
}

// ---------------------------------------------------------------- phases

fn corpus() -> Vec<(String, String, String)> {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data");
    let mut files: Vec<PathBuf> = std::fs::read_dir(&dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.to_string_lossy().ends_with(".tracking.csv"))
        .collect();
    files.sort();
    let mut out: Vec<(String, String, String)> = files
        .into_iter()
        .map(|p| {
            let name = p.file_name().unwrap().to_string_lossy().replace(".tracking.csv", "");
            let meta = dir.join(format!("{name}.metadata.json"));
            (
                name,
                std::fs::read_to_string(&p).unwrap(),
                std::fs::read_to_string(meta).unwrap(),
            )
        })
        .collect();
    for (seed, scenario) in [(1, "random_walk"), (2, "scripted_paths"), (3, "frozen_lattice")] {
        let o = tracknets::synth::generate_synthetic(&SynthSpec::new(seed, 90.0, scenario.parse().unwrap())).unwrap();
        out.push((format!("synth_{scenario}"), o.tracking, o.metadata));
    }
    out
}

fn phase_partition() -> Outcome {
    let mut checked = Vec::new();
    for (name, tracking, meta) in corpus() {
        let ing = parse_tracking(&tracking, &meta).map_err(|e| format!("{name}: {e}"))?;
        let rec = &ing.recording;
        let mut timelines = vec![segment_possession(
            rec,
            None,
            &PossessionParams {
                use_explicit_column: false,
                ..Default::default()
            },
        )
        .unwrap()];
        if let Some(ex) = &ing.explicit {
            timelines.push(segment_possession(rec, Some(ex), &PossessionParams::default()).unwrap());
        }
        for t in &timelines {
            let counts = [Phase::HomePossession, Phase::AwayPossession, Phase::Dead].map(|p| t.count(p));
            ensure!(
                counts.iter().sum::<usize>() == rec.len(),
                "{name}: counts {counts:?} do not sum to {}",
                rec.len()
            );
            let fps = rec.fps();
            let total: f64 = [Phase::HomePossession, Phase::AwayPossession, Phase::Dead]
                .iter()
                .map(|p| phase_duration(t, *p, fps))
                .sum();
            let expected = rec.len() as f64 / fps;
            ensure!(within_ulps(total, expected, 4.0), "{name}: {total} s vs {expected} s");
        }
        checked.push(format!("{name}({})", timelines.len()));
    }
    Ok(format!("partition holds for {}", checked.join(", ")))
}

// ---------------------------------------------------------------- round trip

fn round_trip() -> Outcome {
    let s = synthesize(&SynthSpec::new(4, 120.0, Scenario::ScriptedPaths)).unwrap();
    let (r, t) = (&s.recording, &s.timeline);
    let team: TeamId = HOME_TEAM.into();
    let grid = GridSpec::new(5, 5, PitchSpec::default()).unwrap();
    let frame = r.frames().iter().find(|f| f.ball_alive).unwrap();
    let mm = accumulate_marking(r, t, &AWAY_TEAM.into(), 1.5).unwrap();
    let v = estimate_velocities(r, 1).unwrap();
    let cm = alignment_fraction(&v, r, t, &team, PhaseKind::Offensive, &Default::default()).unwrap();
    let graphs = [
        ("ball_flow", build_bfn(r, t, &team, &grid).unwrap().to_graph()),
        (
            "signed_proximity",
            build_spn_frame(frame, 7.0, &SpnOptions::default()).to_graph(),
        ),
        ("marking", marking_network(&mm, r, t, 0.0).unwrap().graph),
        (
            "coordination",
            coordination_network(&cm, r, t, LinkThreshold::Value(0.0)).unwrap(),
        ),
    ];
    for (name, g) in &graphs {
        ensure!(!g.edges.is_empty(), "{name} graph has no edges");
        let text = export_graph(g, ExportFormat::GraphJson).unwrap();
        let back = import_graph(&text, ExportFormat::GraphJson).map_err(|e| format!("{name}: {e}"))?;
        ensure!(back == g.canonical(), "{name}: re-imported graph differs");
        ensure!(
            export_graph(&back, ExportFormat::GraphJson).unwrap() == text,
            "{name}: re-export differs"
        );
    }

    let bin = env!("CARGO_BIN_EXE_tracknets");
    let dirs = [tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap()];
    for d in &dirs {
        run_pipeline(bin, d.path(), 60.0, "graphjson,graphml,dot,csv")?;
    }
    let a = collect_files(dirs[0].path());
    let b = collect_files(dirs[1].path());
    ensure!(a.len() > 10, "only {} output files", a.len());
    ensure!(a.keys().eq(b.keys()), "different output file sets");
    for (name, bytes) in &a {
        ensure!(b[name] == *bytes, "{name} differs between runs");
    }
    Ok(format!(
        "4 network types round-trip; {} CLI output files byte-identical",
        a.len()
    ))
}

fn collect_files(root: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in std::fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.insert(
                    p.strip_prefix(root).unwrap().display().to_string(),
                    std::fs::read(&p).unwrap(),
                );
            }
        }
    }
    out
}

fn run_pipeline(bin: &str, out: &Path, duration_s: f64, formats: &str) -> std::result::Result<(), String> {
    let o = out.to_str().unwrap();
    let dur = duration_s.to_string();
    let synth = [
        "synth",
        "--scenario",
        "scripted_paths",
        "--seed",
        "42",
        "--duration",
        &dur,
        "--out",
        o,
    ];
    let status = Command::new(bin).args(synth).status().map_err(|e| e.to_string())?;
    ensure!(status.success(), "synth exited with {status}");
    let tracking = out.join("synth/tracking.csv");
    let metadata = out.join("synth/metadata.json");
    for sub in ["bfn", "spn", "marking", "fcn"] {
        let status = Command::new(bin)
            .arg(sub)
            .args(["--tracking", tracking.to_str().unwrap()])
            .args(["--metadata", metadata.to_str().unwrap()])
            .args(["--out", o, "--formats", formats])
            .status()
            .map_err(|e| e.to_string())?;
        ensure!(status.success(), "{sub} exited with {status}");
    }
    Ok(())
}

// ---------------------------------------------------------------- end to end

fn end_to_end() -> Outcome {
    let bin = env!("CARGO_BIN_EXE_tracknets");
    let dir = tempfile::tempdir().unwrap();
    let start = Instant::now();
    run_pipeline(bin, dir.path(), 600.0, "graphjson")?;
    let elapsed = start.elapsed();
    let out = dir.path();
    let tracking = std::fs::read_to_string(out.join("synth/tracking.csv")).unwrap();
    let object_frames = tracking.lines().count() - 1;
    ensure!(object_frames == 15_000 * 23, "{object_frames} object-frames");
    for f in [
        "bfn/bfn_home.json",
        "bfn/bfn_away.json",
        "spn/spn_frame.json",
        "marking/marking_home.json",
        "marking/marking_away.json",
        "fcn/fcn_home_defensive.json",
        "fcn/fcn_away_offensive.json",
    ] {
        let text = std::fs::read_to_string(out.join(f)).map_err(|e| format!("{f}: {e}"))?;
        import_graph(&text, ExportFormat::GraphJson).map_err(|e| format!("{f}: {e}"))?;
    }
    let profile = std::fs::read_to_string(out.join("spn/triangle_profile.csv")).unwrap();
    ensure!(
        profile.lines().count() == 16,
        "triangle profile has {} lines",
        profile.lines().count()
    );
    ensure!(elapsed < Duration::from_secs(30), "pipeline took {elapsed:?}");
    Ok(format!(
        "{object_frames} object-frames, 4 networks + profile in {:.2} s",
        elapsed.as_secs_f64()
    ))
}

#[test]
fn acceptance() {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("grid oracle", grid_oracle),
        ("BFN conservation", bfn_conservation),
        ("SPN combinatorics", spn_combinatorics),
        ("signed-triangle parity", sign_parity),
        ("marking oracle", marking_oracle),
        ("velocity accuracy", velocity_accuracy),
        ("coordination limits", coordination_limits),
        ("phase partition", phase_partition),
        ("round trip and determinism", round_trip),
        ("end-to-end pipeline", end_to_end),
    ];
    let mut failed = Vec::new();
    for (name, f) in criteria {
        let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        match outcome {
            Ok(detail) => println!("PASS  {name}: {detail}"),
            Err(detail) => {
                println!("FAIL  {name}: {detail}");
                failed.push(name);
            }
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
