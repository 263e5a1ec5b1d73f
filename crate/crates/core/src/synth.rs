//! Synthetic matches with known ground truth.
//!
//! Three scenarios are available:
//!
//! * `frozen_lattice`: both teams stand still on rectangular lattices and the
//!   ball rests next to a home player for the whole match.
//! * `scripted_paths`: a repeating 1512-frame script with ball runs, marking
//!   pairs and a pair of teammates moving back and forth out of phase. The
//!   ground truth is obtained by counting frames of the script, not by
//!   measuring the generated positions.
//! * `random_walk`: Gaussian random walks for players and ball with explicit
//!   alternating possession blocks.
//!
//! Randomness comes from `ChaCha8Rng::seed_from_u64(seed)`; Gaussian steps use
//! the Box-Muller transform on pairs of `gen::<f64>()` draws.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use crate::error::{Error, Result};
use crate::ingest::{write_metadata, write_tracking};
use crate::model::{
    standard_attack_directions, AttackDirection, Frame, MatchRecording, Phase, PhaseSource, PhaseTimeline, PitchSpec,
    PlayerId, Position, Side, TeamSheet,
};

pub const HOME_TEAM: &str = "H";
pub const AWAY_TEAM: &str = "A";

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Scenario {
    FrozenLattice { home_spacing_m: f64, away_spacing_m: f64 },
    ScriptedPaths,
    RandomWalk { player_sigma_m: f64, ball_sigma_m: f64 },
}

impl Scenario {
    pub fn name(&self) -> &'static str {
        match self {
            Scenario::FrozenLattice { .. } => "frozen_lattice",
            Scenario::ScriptedPaths => "scripted_paths",
            Scenario::RandomWalk { .. } => "random_walk",
        }
    }
}

impl FromStr for Scenario {
    type Err = Error;

    /// Scenario with its default parameters.
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "frozen_lattice" => Ok(Scenario::FrozenLattice {
                home_spacing_m: 4.0,
                away_spacing_m: 8.0,
            }),
            "scripted_paths" => Ok(Scenario::ScriptedPaths),
            "random_walk" => Ok(Scenario::RandomWalk {
                player_sigma_m: 0.1,
                ball_sigma_m: 0.4,
            }),
            other => Err(Error::Config(format!("unknown scenario '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SynthSpec {
    pub seed: u64,
    pub duration_s: f64,
    pub fps: f64,
    pub scenario: Scenario,
}

impl SynthSpec {
    pub fn new(seed: u64, duration_s: f64, scenario: Scenario) -> Self {
        Self {
            seed,
            duration_s,
            fps: 25.0,
            scenario,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.duration_s > 0.0 && self.duration_s.is_finite()) {
            return Err(Error::Config(format!("duration must be > 0, got {}", self.duration_s)));
        }
        if !(self.fps > 0.0 && self.fps.is_finite()) {
            return Err(Error::Config(format!("fps must be > 0, got {}", self.fps)));
        }
        if self.frame_count() == 0 {
            return Err(Error::Config("duration is shorter than one frame".into()));
        }
        match self.scenario {
            Scenario::FrozenLattice {
                home_spacing_m,
                away_spacing_m,
            } => {
                for s in [home_spacing_m, away_spacing_m] {
                    if !(s > 0.0 && s <= 10.0) {
                        return Err(Error::Config(format!("lattice spacing must be in (0, 10], got {s}")));
                    }
                }
            }
            Scenario::ScriptedPaths => {}
            Scenario::RandomWalk {
                player_sigma_m,
                ball_sigma_m,
            } => {
                for s in [player_sigma_m, ball_sigma_m] {
                    if !(0.0..=5.0).contains(&s) {
                        return Err(Error::Config(format!("walk sigma must be in [0, 5], got {s}")));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn frame_count(&self) -> usize {
        (self.duration_s * self.fps).round() as usize
    }
}

#[derive(Debug, Clone)]
pub struct SynthMatch {
    pub recording: MatchRecording,
    pub timeline: PhaseTimeline,
    pub truth: serde_json::Value,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthOutput {
    pub tracking: String,
    pub metadata: String,
    pub truth: String,
}

pub fn generate_synthetic(spec: &SynthSpec) -> Result<SynthOutput> {
    let m = synthesize(spec)?;
    let mut truth = serde_json::to_string_pretty(&m.truth).map_err(|e| Error::Serialization(e.to_string()))?;
    truth.push('\n');
    Ok(SynthOutput {
        tracking: write_tracking(&m.recording, Some(&m.timeline))?,
        metadata: write_metadata(&m.recording)?,
        truth,
    })
}

pub fn synthesize(spec: &SynthSpec) -> Result<SynthMatch> {
    spec.validate()?;
    match spec.scenario {
        Scenario::FrozenLattice {
            home_spacing_m,
            away_spacing_m,
        } => frozen_lattice(spec, home_spacing_m, away_spacing_m),
        Scenario::ScriptedPaths => scripted(spec),
        Scenario::RandomWalk {
            player_sigma_m,
            ball_sigma_m,
        } => random_walk(spec, player_sigma_m, ball_sigma_m),
    }
}

fn roster(prefix: &str) -> Vec<PlayerId> {
    (1..=11).map(|i| PlayerId::from(format!("{prefix}{i}"))).collect()
}

fn time_ms(k: usize, fps: f64) -> i64 {
    (k as f64 * 1000.0 / fps).round() as i64
}

fn recording(spec: &SynthSpec, frames: Vec<Frame>) -> Result<MatchRecording> {
    MatchRecording::new(
        PitchSpec::default(),
        spec.fps,
        TeamSheet::new(HOME_TEAM, roster("h"))?,
        TeamSheet::new(AWAY_TEAM, roster("a"))?,
        standard_attack_directions(AttackDirection::PositiveX),
        frames,
    )
}

fn possession_counts(labels: &[Phase]) -> serde_json::Value {
    let count = |p| labels.iter().filter(|l| **l == p).count();
    json!({
        "home": count(Phase::HomePossession),
        "away": count(Phase::AwayPossession),
        "dead": count(Phase::Dead),
    })
}

fn lattice(center: Position, spacing: f64) -> Vec<Position> {
    let mut out = Vec::new();
    for row in [-1.0, 0.0, 1.0] {
        for col in [-1.5, -0.5, 0.5, 1.5] {
            out.push(Position::new(center.x + col * spacing, center.y + row * spacing));
        }
    }
    out.truncate(11);
    out
}

fn frozen_lattice(spec: &SynthSpec, home_spacing: f64, away_spacing: f64) -> Result<SynthMatch> {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut jitter = || Position::new(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0));
    let hc = jitter();
    let ac = jitter();
    let home = lattice(Position::new(-20.0 + hc.x, hc.y), home_spacing);
    let away = lattice(Position::new(20.0 + ac.x, ac.y), away_spacing);
    let ball = Position::new(home[0].x + 0.5, home[0].y);
    let (hid, aid) = (roster("h"), roster("a"));

    let n = spec.frame_count();
    let frames = (0..n)
        .map(|k| {
            let mut f = Frame::new(k as u64, time_ms(k, spec.fps), 1).with_ball(ball, true);
            for (id, p) in hid.iter().zip(&home) {
                f = f.with_player(id.clone(), Side::Home, *p);
            }
            for (id, p) in aid.iter().zip(&away) {
                f = f.with_player(id.clone(), Side::Away, *p);
            }
            f
        })
        .collect();
    let labels = vec![Phase::HomePossession; n];
    let truth = json!({
        "scenario": "frozen_lattice",
        "seed": spec.seed,
        "fps": spec.fps,
        "frames": n,
        "home_spacing_m": home_spacing,
        "away_spacing_m": away_spacing,
        "possession_frames": possession_counts(&labels),
        "bfn": { "crossings": { "home": 0, "away": 0 } },
    });
    Ok(SynthMatch {
        recording: recording(spec, frames)?,
        timeline: PhaseTimeline::new(labels, PhaseSource::Explicit),
        truth,
    })
}

/// Length of one script cycle in frames.
pub const CYCLE: usize = 1512;
const HOME_WINDOW: (usize, usize) = (126, 630);
const AWAY_WINDOW: (usize, usize) = (882, 1386);
const RUN_FRAMES: usize = 400;
const RUN_STEP_M: f64 = 0.2;
const WAVE_HALF: usize = 252;
const WAVE_SHIFT: usize = 176;
const WAVE_STEP_M: f64 = 0.04;

/// (defender, opponent, marking-frame predicate on cycle position and cycle index)
type MarkRule = (&'static str, &'static str, fn(usize, usize) -> bool);

const MARK_RULES: [MarkRule; 3] = [
    ("a4", "h9", |c, _| (126..376).contains(&c)),
    ("a5", "h8", |c, n| n == 0 && (126..251).contains(&c)),
    ("h4", "a9", |c, _| (882..1082).contains(&c)),
];

const FILLERS: [(&str, Side, f64, f64); 12] = [
    ("h1", Side::Home, -48.0, 0.0),
    ("h5", Side::Home, -30.0, 12.0),
    ("h6", Side::Home, -10.0, 15.0),
    ("h7", Side::Home, 10.0, 12.0),
    ("h11", Side::Home, 30.0, -25.0),
    ("a1", Side::Away, 48.0, 0.0),
    ("a2", Side::Away, -30.0, -20.0),
    ("a3", Side::Away, -10.0, -20.0),
    ("a6", Side::Away, 10.0, -20.0),
    ("a7", Side::Away, 0.0, 18.0),
    ("a8", Side::Away, 30.0, 12.0),
    ("a11", Side::Away, -40.0, 20.0),
];

fn script_phase(c: usize) -> Phase {
    if (HOME_WINDOW.0..HOME_WINDOW.1).contains(&c) {
        Phase::HomePossession
    } else if (AWAY_WINDOW.0..AWAY_WINDOW.1).contains(&c) {
        Phase::AwayPossession
    } else {
        Phase::Dead
    }
}

fn triangle(c: usize) -> usize {
    let m = c % (2 * WAVE_HALF);
    if m < WAVE_HALF {
        m
    } else {
        2 * WAVE_HALF - m
    }
}

/// Frame at which the second period starts, or `n` for a single period.
pub fn scripted_half_time(n: usize) -> usize {
    let ht = ((n as f64 / 2.0) / CYCLE as f64).round() as usize * CYCLE;
    if ht == 0 || ht >= n {
        n
    } else {
        ht
    }
}

/// Positions of the script at cycle position `c`, in the home team's
/// attacking frame (home attacks +x).
fn script_positions(c: usize, cycle_index: usize, t_s: f64) -> (Position, Vec<(&'static str, Side, Position)>) {
    let home_run = c.clamp(HOME_WINDOW.0, HOME_WINDOW.0 + RUN_FRAMES) - HOME_WINDOW.0;
    let away_run = c.clamp(AWAY_WINDOW.0, AWAY_WINDOW.0 + RUN_FRAMES) - AWAY_WINDOW.0;
    let home_ball = Position::new(-40.0 + RUN_STEP_M * home_run as f64, 0.0);
    let away_ball = Position::new(40.0 - RUN_STEP_M * away_run as f64, -10.0);
    let ball = match c {
        c if c < HOME_WINDOW.1 => home_ball,
        c if c < AWAY_WINDOW.1 => away_ball,
        _ => Position::new(-40.0, 0.0),
    };
    let h10 = if (HOME_WINDOW.0..HOME_WINDOW.1).contains(&c) {
        Position::new(home_ball.x - 0.5, 0.0)
    } else {
        Position::new(-40.5, 0.0)
    };
    let a10 = if (AWAY_WINDOW.0..AWAY_WINDOW.1).contains(&c) {
        Position::new(away_ball.x + 0.5, -10.0)
    } else {
        Position::new(40.5, -10.0)
    };

    let marking = |rule: usize, near: f64, far: f64| {
        if MARK_RULES[rule].2(c, cycle_index) {
            near
        } else {
            far
        }
    };
    let mut out = vec![
        ("h10", Side::Home, h10),
        ("a10", Side::Away, a10),
        ("h9", Side::Home, Position::new(20.0, 25.0)),
        ("a4", Side::Away, Position::new(marking(0, 21.0, 23.0), 25.0)),
        ("h8", Side::Home, Position::new(-20.0, 25.0)),
        ("a5", Side::Away, Position::new(marking(1, -18.8, -16.0), 25.0)),
        ("a9", Side::Away, Position::new(-20.0, -25.0)),
        ("h4", Side::Home, Position::new(marking(2, -21.0, -24.0), -25.0)),
        (
            "h2",
            Side::Home,
            Position::new(-5.0 + WAVE_STEP_M * triangle(c) as f64, 30.0),
        ),
        (
            "h3",
            Side::Home,
            Position::new(-5.0 + WAVE_STEP_M * triangle(c + WAVE_SHIFT) as f64, -30.0),
        ),
    ];
    for (k, (id, side, x, y)) in FILLERS.iter().enumerate() {
        let a = 0.5 * t_s + 0.7 * k as f64;
        out.push((id, *side, Position::new(x + 2.0 * a.cos(), y + 2.0 * a.sin())));
    }
    (ball, out)
}

/// Number of x frontiers of a 5-column grid passed by a run that starts at
/// `x0`, heads to +x and has advanced `steps` frames.
fn frontiers_crossed(x0: f64, steps: usize) -> u64 {
    let x1 = x0 + RUN_STEP_M * steps.min(RUN_FRAMES) as f64;
    (1..5)
        .map(|k| -52.5 + k as f64 * 21.0)
        .filter(|f| x0 < *f && *f <= x1)
        .count() as u64
}

fn scripted(spec: &SynthSpec) -> Result<SynthMatch> {
    let n = spec.frame_count();
    let ht = scripted_half_time(n);
    let mut frames = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    for k in 0..n {
        let c = k % CYCLE;
        let period = if k < ht { 1 } else { 2 };
        let (ball, players) = script_positions(c, k / CYCLE, k as f64 / spec.fps);
        let real = |p: Position| if period == 1 { p } else { p.reflected() };
        let phase = script_phase(c);
        let mut f = Frame::new(k as u64, time_ms(k, spec.fps), period).with_ball(real(ball), phase != Phase::Dead);
        for (id, side, p) in players {
            f = f.with_player(id, side, real(p));
        }
        frames.push(f);
        labels.push(phase);
    }

    // ground truth by counting script frames
    let mut crossings = [0u64, 0u64];
    let mut window_run: Option<(Phase, usize)> = None;
    let mut flush = |run: Option<(Phase, usize)>| {
        if let Some((p, len)) = run {
            // a window of `len` frames has `len - 1` steps
            let steps = len.saturating_sub(1);
            match p {
                Phase::HomePossession => crossings[0] += frontiers_crossed(-40.0, steps),
                // the away run heads to -x in the home frame, +x in its own
                Phase::AwayPossession => crossings[1] += frontiers_crossed(-40.0, steps),
                Phase::Dead => {}
            }
        }
    };
    for k in 0..n {
        let p = labels[k];
        let continues = k > 0 && labels[k - 1] == p && (k != ht);
        match (&mut window_run, continues) {
            (Some((_, len)), true) => *len += 1,
            _ => {
                flush(window_run.take());
                window_run = Some((p, 1));
            }
        }
    }
    flush(window_run.take());

    let mut pairs = Vec::new();
    for (defender, opponent, rule) in MARK_RULES {
        let defending = if defender.starts_with('h') {
            Side::Home
        } else {
            Side::Away
        };
        let phase = Phase::possession(defending.opponent());
        let frames_in = (0..n)
            .filter(|k| labels[*k] == phase && rule(k % CYCLE, k / CYCLE))
            .count();
        let seconds = frames_in as f64 / spec.fps;
        pairs.push(json!({
            "defending": defending.as_str(),
            "defender": defender,
            "opponent": opponent,
            "frames": frames_in,
            "seconds": seconds,
            "above_t_min": seconds > 7.0,
        }));
    }

    // h2/h3 direction per frame from the integer triangle waves
    let dir = |c: usize, shift: usize| {
        let before = triangle((c + CYCLE - 1) + shift) as i64;
        let after = triangle(c + 1 + shift) as i64;
        (after - before).signum()
    };
    let mut coord = BTreeMap::new();
    for (kind, phase) in [
        ("offensive", Phase::HomePossession),
        ("defensive", Phase::AwayPossession),
    ] {
        let (mut eligible, mut aligned) = (0u64, 0u64);
        for k in (0..n).filter(|k| labels[*k] == phase) {
            let c = k % CYCLE;
            let (a, b) = (dir(c, 0), dir(c, WAVE_SHIFT));
            if a != 0 && b != 0 {
                eligible += 1;
                if a == b {
                    aligned += 1;
                }
            }
        }
        let value = if eligible == 0 {
            0.0
        } else {
            aligned as f64 / eligible as f64
        };
        coord.insert(
            kind,
            json!({ "eligible": eligible, "aligned": aligned, "value": value }),
        );
    }

    let truth = json!({
        "scenario": "scripted_paths",
        "seed": spec.seed,
        "fps": spec.fps,
        "frames": n,
        "cycle_frames": CYCLE,
        "second_period_start": ht,
        "possession_frames": possession_counts(&labels),
        "bfn": {
            "grid": "5x5",
            "crossing_mode": "traversal",
            "crossings": { "home": crossings[0], "away": crossings[1] },
        },
        "marking": { "radius_m": 1.5, "t_min_s": 7.0, "pairs": pairs },
        "coordination": {
            "team": "home",
            "pair": ["h2", "h3"],
            "theta_threshold_deg": 10.0,
            "v_min_mps": 0.5,
            "window_frames": 1,
            "offensive": coord["offensive"],
            "defensive": coord["defensive"],
        },
    });
    Ok(SynthMatch {
        recording: recording(spec, frames)?,
        timeline: PhaseTimeline::new(labels, PhaseSource::Explicit),
        truth,
    })
}

fn gaussian(rng: &mut ChaCha8Rng) -> (f64, f64) {
    let u1: f64 = 1.0 - rng.gen::<f64>();
    let u2: f64 = rng.gen::<f64>();
    let r = (-2.0 * u1.ln()).sqrt();
    (r * (2.0 * PI * u2).cos(), r * (2.0 * PI * u2).sin())
}

fn reflect(mut v: f64, half: f64) -> f64 {
    while v.abs() > half {
        v = if v > half { 2.0 * half - v } else { -2.0 * half - v };
    }
    v
}

fn walk(rng: &mut ChaCha8Rng, p: Position, sigma: f64, pitch: &PitchSpec) -> Position {
    let (dx, dy) = gaussian(rng);
    Position::new(
        reflect(p.x + sigma * dx, pitch.half_length()),
        reflect(p.y + sigma * dy, pitch.half_width()),
    )
}

fn random_walk(spec: &SynthSpec, player_sigma: f64, ball_sigma: f64) -> Result<SynthMatch> {
    let pitch = PitchSpec::default();
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let n = spec.frame_count();
    let ht = if n >= 2 { n / 2 } else { n };
    let ids: Vec<(PlayerId, Side)> = roster("h")
        .into_iter()
        .map(|p| (p, Side::Home))
        .chain(roster("a").into_iter().map(|p| (p, Side::Away)))
        .collect();
    let uniform = |rng: &mut ChaCha8Rng| {
        Position::new(
            rng.gen_range(-pitch.half_length()..pitch.half_length()),
            rng.gen_range(-pitch.half_width()..pitch.half_width()),
        )
    };
    let mut pos: Vec<Position> = ids.iter().map(|_| uniform(&mut rng)).collect();
    let mut ball = uniform(&mut rng);

    let mut labels = Vec::with_capacity(n);
    let mut side = if rng.gen::<bool>() { Side::Home } else { Side::Away };
    while labels.len() < n {
        let own = (rng.gen_range(5.0..20.0) * spec.fps).round() as usize;
        let dead = (rng.gen_range(1.0..4.0) * spec.fps).round() as usize;
        labels.extend(std::iter::repeat_n(Phase::possession(side), own.max(1)));
        labels.extend(std::iter::repeat_n(Phase::Dead, dead.max(1)));
        side = side.opponent();
    }
    labels.truncate(n);

    let mut frames = Vec::with_capacity(n);
    for (k, label) in labels.iter().enumerate() {
        if k > 0 {
            for p in pos.iter_mut() {
                *p = walk(&mut rng, *p, player_sigma, &pitch);
            }
            ball = walk(&mut rng, ball, ball_sigma, &pitch);
        }
        let period = if k < ht { 1 } else { 2 };
        let mut f = Frame::new(k as u64, time_ms(k, spec.fps), period).with_ball(ball, *label != Phase::Dead);
        for ((id, s), p) in ids.iter().zip(&pos) {
            f = f.with_player(id.clone(), *s, *p);
        }
        frames.push(f);
    }
    let truth = json!({
        "scenario": "random_walk",
        "seed": spec.seed,
        "fps": spec.fps,
        "frames": n,
        "second_period_start": ht,
        "player_sigma_m": player_sigma,
        "ball_sigma_m": ball_sigma,
        "generator": "ChaCha8Rng::seed_from_u64 + Box-Muller",
        "possession_frames": possession_counts(&labels),
    });
    Ok(SynthMatch {
        recording: recording(spec, frames)?,
        timeline: PhaseTimeline::new(labels, PhaseSource::Explicit),
        truth,
    })
}
