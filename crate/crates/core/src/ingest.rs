//! Tracking/metadata file parsing and possession segmentation.
//!
//! The tracking file is a CSV with the exact header
//! `frame,period,time_ms,obj,team,player,x,y,z,ball_status,possession`,
//! one row per object per frame. The metadata file is a JSON object that
//! declares the pitch, frame rate, team sheets and attack directions.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{
    AttackDirection, AttackDirections, Frame, MatchRecording, Phase, PhaseSource, PhaseTimeline, PitchSpec, PlayerId,
    PlayerState, Position, Side, TeamSheet, DEFAULT_MARGIN_M,
};

pub const TRACKING_HEADER: &str = "frame,period,time_ms,obj,team,player,x,y,z,ball_status,possession";

#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct IngestReport {
    pub frame_count: usize,
    /// Frame indices that appeared in the input but produced no valid row.
    pub dropped_frames: usize,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParseOptions {
    pub margin_m: f64,
}

impl Default for ParseOptions {
    fn default() -> Self {
        Self {
            margin_m: DEFAULT_MARGIN_M,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Ingested {
    pub recording: MatchRecording,
    pub explicit: Option<PhaseTimeline>,
    pub report: IngestReport,
}

/// On-disk metadata document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetadataFile {
    pub pitch_length_m: f64,
    pub pitch_width_m: f64,
    pub fps: f64,
    pub home_team_id: String,
    pub away_team_id: String,
    pub home_players: Vec<String>,
    pub away_players: Vec<String>,
    /// period -> team id -> "+x" | "-x"
    pub attack_direction: BTreeMap<String, BTreeMap<String, AttackDirection>>,
}

impl MetadataFile {
    pub fn from_recording(rec: &MatchRecording) -> Self {
        let mut attack_direction: BTreeMap<String, BTreeMap<String, AttackDirection>> = BTreeMap::new();
        for ((side, period), dir) in rec.attack_directions() {
            attack_direction
                .entry(period.to_string())
                .or_default()
                .insert(rec.team_id(*side).0.clone(), *dir);
        }
        let ids = |s: &TeamSheet| s.player_ids.iter().map(|p| p.0.clone()).collect();
        Self {
            pitch_length_m: rec.pitch().length_m,
            pitch_width_m: rec.pitch().width_m,
            fps: rec.fps(),
            home_team_id: rec.home().team_id.0.clone(),
            away_team_id: rec.away().team_id.0.clone(),
            home_players: ids(rec.home()),
            away_players: ids(rec.away()),
            attack_direction,
        }
    }

    fn directions(&self) -> Result<AttackDirections> {
        let mut map = AttackDirections::new();
        for (period, teams) in &self.attack_direction {
            let period: u8 = period
                .trim()
                .parse()
                .map_err(|_| Error::Metadata(format!("attack_direction period '{period}' is not an integer")))?;
            for (team, dir) in teams {
                let side = if *team == self.home_team_id {
                    Side::Home
                } else if *team == self.away_team_id {
                    Side::Away
                } else {
                    return Err(Error::Metadata(format!("attack_direction names unknown team '{team}'")));
                };
                map.insert((side, period), *dir);
            }
        }
        Ok(map)
    }
}

pub fn parse_metadata(text: &str) -> Result<MetadataFile> {
    serde_json::from_str(text).map_err(|e| Error::Metadata(e.to_string()))
}

#[derive(Default)]
struct FrameAcc {
    period: u8,
    time_ms: i64,
    ball: Option<Option<Position>>,
    ball_alive: Option<bool>,
    possession: Option<Phase>,
    players: BTreeMap<PlayerId, PlayerState>,
    duplicated: bool,
}

fn field(rec: &csv::StringRecord, i: usize) -> &str {
    rec.get(i).unwrap_or("").trim()
}

fn parse_num<T: std::str::FromStr>(s: &str, name: &str) -> std::result::Result<T, String> {
    s.parse::<T>().map_err(|_| format!("bad {name} '{s}'"))
}

fn parse_coord(s: &str, name: &str) -> std::result::Result<f64, String> {
    let v: f64 = parse_num(s, name)?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(format!("non-finite {name}"))
    }
}

pub fn parse_tracking(tracking_text: &str, metadata_text: &str) -> Result<Ingested> {
    parse_tracking_with(tracking_text, metadata_text, &ParseOptions::default())
}

pub fn parse_tracking_with(tracking_text: &str, metadata_text: &str, opts: &ParseOptions) -> Result<Ingested> {
    let meta = parse_metadata(metadata_text)?;
    let pitch = PitchSpec::with_margin(meta.pitch_length_m, meta.pitch_width_m, opts.margin_m)
        .map_err(|e| Error::Metadata(e.to_string()))?;
    let home = TeamSheet::new(
        meta.home_team_id.as_str(),
        meta.home_players.iter().map(|p| PlayerId::from(p.as_str())).collect(),
    )
    .map_err(|e| Error::Metadata(e.to_string()))?;
    let away = TeamSheet::new(
        meta.away_team_id.as_str(),
        meta.away_players.iter().map(|p| PlayerId::from(p.as_str())).collect(),
    )
    .map_err(|e| Error::Metadata(e.to_string()))?;
    let directions = meta.directions()?;

    let mut report = IngestReport::default();
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(tracking_text.as_bytes());
    let header = reader
        .headers()
        .map_err(|e| Error::TrackingFormat(e.to_string()))?
        .iter()
        .map(|h| h.trim().trim_start_matches('\u{feff}'))
        .collect::<Vec<_>>()
        .join(",");
    if header != TRACKING_HEADER {
        return Err(Error::TrackingFormat(format!(
            "expected header '{TRACKING_HEADER}', found '{header}'"
        )));
    }

    let mut frames: BTreeMap<u64, FrameAcc> = BTreeMap::new();
    let mut seen_indices = std::collections::BTreeSet::new();

    for row in reader.records() {
        let row = match row {
            Ok(r) => r,
            Err(e) => {
                report.warnings.push(format!("unreadable row: {e}"));
                continue;
            }
        };
        let line = row.position().map(|p| p.line()).unwrap_or(0);
        if let Ok(idx) = field(&row, 0).parse::<u64>() {
            seen_indices.insert(idx);
        }
        match ingest_row(&row, &meta, &pitch, &home, &away, &mut frames) {
            Ok(None) => {}
            Ok(Some(note)) => report.warnings.push(format!("line {line}: {note}")),
            Err(msg) => report.warnings.push(format!("line {line}: {msg}; row skipped")),
        }
    }

    let mut out = Vec::with_capacity(frames.len());
    let mut possession = Vec::with_capacity(frames.len());
    let mut all_possession = true;
    for (idx, acc) in frames {
        if acc.duplicated {
            report
                .warnings
                .push(format!("frame {idx}: duplicate rows, last row wins"));
        }
        let alive = match acc.ball_alive {
            Some(a) => a,
            None => {
                report
                    .warnings
                    .push(format!("frame {idx}: no ball_status, treated as dead"));
                false
            }
        };
        match acc.possession {
            Some(p) => possession.push(p),
            None => all_possession = false,
        }
        out.push(Frame {
            frame_index: idx,
            time_ms: acc.time_ms,
            period: acc.period,
            ball: acc.ball.flatten(),
            ball_alive: alive,
            players: acc.players,
        });
    }
    report.dropped_frames = seen_indices.len() - out.len();
    if out.is_empty() {
        return Err(Error::NoFrames);
    }
    let gap_limit = meta.fps.max(1.0);
    for w in out.windows(2) {
        let step = w[1].frame_index - w[0].frame_index;
        if step as f64 > gap_limit {
            report
                .warnings
                .push(format!("gap of {} frames after frame {}", step - 1, w[0].frame_index));
        }
    }
    report.frame_count = out.len();

    let recording = MatchRecording::new(pitch, meta.fps, home, away, directions, out).map_err(|e| match e {
        Error::MissingMetadata(m) => Error::Metadata(m),
        other => other,
    })?;
    let explicit = all_possession.then(|| PhaseTimeline::new(possession, PhaseSource::Explicit));
    Ok(Ingested {
        recording,
        explicit,
        report,
    })
}

fn ingest_row(
    row: &csv::StringRecord,
    meta: &MetadataFile,
    pitch: &PitchSpec,
    home: &TeamSheet,
    away: &TeamSheet,
    frames: &mut BTreeMap<u64, FrameAcc>,
) -> std::result::Result<Option<String>, String> {
    if row.len() != 11 {
        return Err(format!("expected 11 fields, found {}", row.len()));
    }
    let frame_index: u64 = parse_num(field(row, 0), "frame")?;
    let period: u8 = parse_num(field(row, 1), "period")?;
    if !(period == 1 || period == 2) {
        return Err(format!("period must be 1 or 2, got {period}"));
    }
    let time_ms: i64 = parse_num(field(row, 2), "time_ms")?;
    let status = match field(row, 9) {
        "alive" => Some(true),
        "dead" => Some(false),
        "" => None,
        other => return Err(format!("bad ball_status '{other}'")),
    };
    let possession = match field(row, 10) {
        "home" => Some(Phase::HomePossession),
        "away" => Some(Phase::AwayPossession),
        "dead" => Some(Phase::Dead),
        "" => None,
        other => return Err(format!("bad possession '{other}'")),
    };
    let z = field(row, 8);
    if !z.is_empty() {
        parse_coord(z, "z")?;
    }

    enum Object {
        Ball(Option<Position>),
        Player(PlayerId, Side, Position),
    }
    let mut clamped = None;
    let mut read_pos = || -> std::result::Result<Position, String> {
        let p = Position::new(parse_coord(field(row, 6), "x")?, parse_coord(field(row, 7), "y")?);
        if !pitch.in_bounds(&p) {
            clamped = Some(p);
            return Ok(pitch.clamp(&p));
        }
        Ok(p)
    };
    let object = match field(row, 3) {
        "ball" => {
            if field(row, 6).is_empty() && field(row, 7).is_empty() {
                Object::Ball(None)
            } else {
                Object::Ball(Some(read_pos()?))
            }
        }
        "player" => {
            let team = field(row, 4);
            let side = if team == meta.home_team_id {
                Side::Home
            } else if team == meta.away_team_id {
                Side::Away
            } else {
                return Err(format!("team '{team}' is not in either team sheet"));
            };
            let player = PlayerId::from(field(row, 5));
            let sheet = if side == Side::Home { home } else { away };
            if !sheet.contains(&player) {
                return Err(format!("player '{player}' is not on the {team} team sheet"));
            }
            Object::Player(player, side, read_pos()?)
        }
        other => return Err(format!("bad obj '{other}'")),
    };

    let acc = frames.entry(frame_index).or_default();
    acc.period = period;
    acc.time_ms = time_ms;
    if status.is_some() {
        acc.ball_alive = status;
    }
    if possession.is_some() {
        acc.possession = possession;
    }
    match object {
        Object::Ball(b) => {
            if acc.ball.is_some() {
                acc.duplicated = true;
            }
            acc.ball = Some(b);
        }
        Object::Player(id, side, pos) => {
            if acc.players.insert(id, PlayerState { side, pos }).is_some() {
                acc.duplicated = true;
            }
        }
    }
    Ok(clamped.map(|p| format!("position ({}, {}) out of bounds, clamped", p.x, p.y)))
}

/// Writes the recording back out in the tracking CSV format. Every frame gets
/// a ball row (with empty coordinates when the ball was not tracked) so that
/// frame-level fields survive a round trip.
pub fn write_tracking(rec: &MatchRecording, timeline: Option<&PhaseTimeline>) -> Result<String> {
    if let Some(t) = timeline {
        t.check_against(rec)?;
    }
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
    let ser = |e: csv::Error| Error::Serialization(e.to_string());
    w.write_record(TRACKING_HEADER.split(',')).map_err(ser)?;
    for (i, f) in rec.frames().iter().enumerate() {
        let frame = f.frame_index.to_string();
        let period = f.period.to_string();
        let time = f.time_ms.to_string();
        let status = if f.ball_alive { "alive" } else { "dead" };
        let poss = timeline.map(|t| t.labels[i].as_str()).unwrap_or("");
        let (bx, by, bz) = match f.ball {
            Some(b) => (b.x.to_string(), b.y.to_string(), "0".to_string()),
            None => (String::new(), String::new(), String::new()),
        };
        w.write_record([&frame, &period, &time, "ball", "", "", &bx, &by, &bz, status, poss])
            .map_err(ser)?;
        for (id, st) in &f.players {
            let team = rec.team_id(st.side);
            w.write_record([
                frame.as_str(),
                &period,
                &time,
                "player",
                team.as_str(),
                id.as_str(),
                &st.pos.x.to_string(),
                &st.pos.y.to_string(),
                "",
                status,
                poss,
            ])
            .map_err(ser)?;
        }
    }
    let bytes = w.into_inner().map_err(|e| Error::Serialization(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::Serialization(e.to_string()))
}

pub fn write_metadata(rec: &MatchRecording) -> Result<String> {
    serde_json::to_string_pretty(&MetadataFile::from_recording(rec)).map_err(|e| Error::Serialization(e.to_string()))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PossessionParams {
    pub control_radius_m: f64,
    pub hysteresis_frames: usize,
    pub use_explicit_column: bool,
}

impl Default for PossessionParams {
    fn default() -> Self {
        Self {
            control_radius_m: 2.0,
            hysteresis_frames: 13,
            use_explicit_column: true,
        }
    }
}

/// Team uniquely nearest the ball within `radius`, if any.
fn candidate(frame: &Frame, radius: f64) -> Option<Side> {
    let ball = frame.ball?;
    let mut best = f64::INFINITY;
    let mut sides: Option<(Side, bool)> = None;
    for st in frame.players.values() {
        let d = st.pos.distance(&ball);
        if d < best {
            best = d;
            sides = Some((st.side, false));
        } else if d == best {
            if let Some((s, tie)) = sides {
                sides = Some((s, tie || s != st.side));
            }
        }
    }
    match sides {
        Some((side, false)) if best < radius => Some(side),
        _ => None,
    }
}

/// Labels every frame with a possession phase.
///
/// With an explicit timeline (and `use_explicit_column`) the labels are taken
/// verbatim, except that dead-ball frames are forced to `Dead`. Otherwise
/// the nearest player within the control radius nominates a candidate team;
/// the first candidate takes possession immediately and a change of holder
/// requires the challenger to be candidate for `hysteresis_frames`
/// consecutive alive frames.
pub fn segment_possession(
    rec: &MatchRecording,
    explicit: Option<&PhaseTimeline>,
    params: &PossessionParams,
) -> Result<PhaseTimeline> {
    if !(params.control_radius_m > 0.0) {
        return Err(Error::InvalidInput("control radius must be > 0".into()));
    }
    if params.hysteresis_frames == 0 {
        return Err(Error::InvalidInput("hysteresis must be at least one frame".into()));
    }
    if let (Some(t), true) = (explicit, params.use_explicit_column) {
        t.check_against(rec)?;
        let labels = t
            .labels
            .iter()
            .zip(rec.frames())
            .map(|(l, f)| if f.ball_alive { *l } else { Phase::Dead })
            .collect();
        return Ok(PhaseTimeline::new(labels, PhaseSource::Explicit));
    }

    let mut holder: Option<Side> = None;
    let mut challenger: Option<(Side, usize)> = None;
    let mut labels = Vec::with_capacity(rec.len());
    for f in rec.frames() {
        if !f.ball_alive || f.ball.is_none() {
            challenger = None;
            labels.push(Phase::Dead);
            continue;
        }
        match (candidate(f, params.control_radius_m), holder) {
            (Some(c), None) => {
                holder = Some(c);
                challenger = None;
            }
            (Some(c), Some(h)) if c == h => challenger = None,
            (Some(c), Some(_)) => {
                let run = match challenger {
                    Some((s, n)) if s == c => n + 1,
                    _ => 1,
                };
                if run >= params.hysteresis_frames {
                    holder = Some(c);
                    challenger = None;
                } else {
                    challenger = Some((c, run));
                }
            }
            (None, _) => challenger = None,
        }
        labels.push(holder.map(Phase::possession).unwrap_or(Phase::Dead));
    }
    Ok(PhaseTimeline::new(labels, PhaseSource::Heuristic))
}

pub fn phase_duration(timeline: &PhaseTimeline, phase: Phase, fps: f64) -> f64 {
    timeline.count(phase) as f64 / fps
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    pub(crate) const META: &str = r#"{
        "pitch_length_m": 105, "pitch_width_m": 68, "fps": 25,
        "home_team_id": "H", "away_team_id": "A",
        "home_players": ["h1", "h2"], "away_players": ["a1", "a2"],
        "attack_direction": {"1": {"H": "+x", "A": "-x"}, "2": {"H": "-x", "A": "+x"}}
    }"#;

    fn csv(rows: &[&str]) -> String {
        let mut s = format!("{TRACKING_HEADER}\n");
        for r in rows {
            s.push_str(r);
            s.push('\n');
        }
        s
    }

    #[test]
    fn two_frame_file() {
        let text = csv(&[
            "0,1,0,ball,,,0,0,0,alive,home",
            "0,1,0,player,H,h1,-1,0,,alive,home",
            "0,1,0,player,A,a1,5,5,,alive,home",
            "1,1,40,ball,,,0.5,0,0,alive,home",
            "1,1,40,player,H,h1,-0.5,0,,alive,home",
        ]);
        let ing = parse_tracking(&text, META).unwrap();
        assert_eq!(ing.recording.len(), 2);
        assert!(ing.report.warnings.is_empty(), "{:?}", ing.report.warnings);
        assert_eq!(ing.explicit.unwrap().labels, vec![Phase::HomePossession; 2]);
        assert_eq!(ing.recording.frames()[1].ball, Some(Position::new(0.5, 0.0)));
    }

    #[test]
    fn unknown_team_row_skipped() {
        let text = csv(&[
            "0,1,0,ball,,,0,0,0,alive,",
            "0,1,0,player,X,h1,-1,0,,alive,",
            "1,1,40,ball,,,0,0,0,alive,",
        ]);
        let ing = parse_tracking(&text, META).unwrap();
        assert_eq!(ing.report.warnings.len(), 1);
        assert!(ing.report.warnings[0].contains("'X'"));
        assert!(ing.recording.frames()[0].players.is_empty());
        assert!(ing.explicit.is_none());
    }

    #[test]
    fn duplicate_frame_last_row_wins() {
        let text = csv(&[
            "0,1,0,ball,,,0,0,0,alive,",
            "1,1,40,ball,,,1,0,0,alive,",
            "1,1,40,ball,,,2,0,0,alive,",
            "2,1,80,ball,,,3,0,0,alive,",
        ]);
        let ing = parse_tracking(&text, META).unwrap();
        assert_eq!(ing.recording.len(), 3);
        assert_eq!(ing.report.warnings.len(), 1);
        assert_eq!(ing.recording.frames()[1].ball, Some(Position::new(2.0, 0.0)));
    }

    #[test]
    fn malformed_rows_are_warnings() {
        let text = csv(&[
            "0,1,0,ball,,,0,0,0,alive,",
            "0,1,0,player,H,h1,abc,0,,alive,",
            "0,1,0,ball,,,0,0",
            "1,9,40,ball,,,0,0,0,alive,",
            "2,1,80,ball,,,0,0,0,sleeping,",
        ]);
        let ing = parse_tracking(&text, META).unwrap();
        assert_eq!(ing.recording.len(), 1);
        assert_eq!(ing.report.warnings.len(), 4);
        assert_eq!(ing.report.dropped_frames, 2);
    }

    #[test]
    fn out_of_bounds_is_clamped() {
        let text = csv(&["0,1,0,ball,,,90,0,0,alive,", "0,1,0,player,H,h1,0,-50,,alive,"]);
        let ing = parse_tracking(&text, META).unwrap();
        let f = &ing.recording.frames()[0];
        assert_eq!(f.ball, Some(Position::new(57.5, 0.0)));
        assert_eq!(f.players[&PlayerId::from("h1")].pos, Position::new(0.0, -39.0));
        assert_eq!(ing.report.warnings.len(), 2);
    }

    #[test]
    fn fatal_errors() {
        let ok = csv(&["0,1,0,ball,,,0,0,0,alive,"]);
        assert!(matches!(parse_tracking(&ok, "{\"fps\": 25}"), Err(Error::Metadata(_))));
        assert!(matches!(parse_tracking(&csv(&[]), META), Err(Error::NoFrames)));
        assert!(matches!(
            parse_tracking(&csv(&["0,1,0,rock,,,0,0,0,alive,"]), META),
            Err(Error::NoFrames)
        ));
        assert!(matches!(
            parse_tracking("frame,x\n0,1\n", META),
            Err(Error::TrackingFormat(_))
        ));
        let one_period = META.replace(r#", "2": {"H": "-x", "A": "+x"}"#, "");
        assert!(matches!(parse_tracking(&ok, &one_period), Err(Error::Metadata(_))));
    }

    #[test]
    fn gap_warning() {
        let text = csv(&["0,1,0,ball,,,0,0,0,alive,", "100,1,4000,ball,,,0,0,0,alive,"]);
        let ing = parse_tracking(&text, META).unwrap();
        assert!(ing.report.warnings.iter().any(|w| w.contains("gap of 99")));
    }

    fn recording_with(frames: Vec<Frame>) -> MatchRecording {
        let meta = parse_metadata(META).unwrap();
        MatchRecording::new(
            PitchSpec::default(),
            25.0,
            TeamSheet::new("H", vec!["h1".into(), "h2".into()]).unwrap(),
            TeamSheet::new("A", vec!["a1".into(), "a2".into()]).unwrap(),
            meta.directions().unwrap(),
            frames,
        )
        .unwrap()
    }

    #[test]
    fn explicit_passthrough_with_dead_override() {
        let frames = (0..4u64)
            .map(|i| Frame::new(i, i as i64 * 40, 1).with_ball(Position::default(), i != 2))
            .collect();
        let rec = recording_with(frames);
        let explicit = PhaseTimeline::new(vec![Phase::AwayPossession; 4], PhaseSource::Explicit);
        let t = segment_possession(&rec, Some(&explicit), &PossessionParams::default()).unwrap();
        assert_eq!(
            t.labels,
            vec![
                Phase::AwayPossession,
                Phase::AwayPossession,
                Phase::Dead,
                Phase::AwayPossession
            ]
        );
        let short = PhaseTimeline::new(vec![Phase::Dead; 3], PhaseSource::Explicit);
        assert!(matches!(
            segment_possession(&rec, Some(&short), &PossessionParams::default()),
            Err(Error::TimelineMismatch { expected: 4, got: 3 })
        ));
    }

    #[test]
    fn single_holder_owns_every_alive_frame() {
        let frames = (0..50u64)
            .map(|i| {
                let b = Position::new(i as f64 * 0.2, 0.0);
                Frame::new(i, i as i64 * 40, 1)
                    .with_ball(b, i % 10 != 9)
                    .with_player("h1", Side::Home, Position::new(b.x - 0.5, 0.0))
                    .with_player("a1", Side::Away, Position::new(b.x, 8.0))
            })
            .collect();
        let rec = recording_with(frames);
        let t = segment_possession(&rec, None, &PossessionParams::default()).unwrap();
        for (f, l) in rec.frames().iter().zip(&t.labels) {
            let want = if f.ball_alive {
                Phase::HomePossession
            } else {
                Phase::Dead
            };
            assert_eq!(*l, want);
        }
        assert_eq!(t.source, PhaseSource::Heuristic);
    }

    /// Reference hysteresis automaton written directly from the rule text.
    fn simulate(cands: &[Option<Side>], k: usize) -> Vec<Phase> {
        let mut out = vec![];
        let mut cur: Option<Side> = None;
        let mut streak: Vec<Side> = vec![];
        for c in cands {
            match c {
                None => streak.clear(),
                Some(s) if cur.is_none() => {
                    cur = Some(*s);
                    streak.clear();
                }
                Some(s) if Some(*s) == cur => streak.clear(),
                Some(s) => {
                    if streak.last() != Some(s) {
                        streak.clear();
                    }
                    streak.push(*s);
                    if streak.len() >= k {
                        cur = Some(*s);
                        streak.clear();
                    }
                }
            }
            out.push(cur.map(Phase::possession).unwrap_or(Phase::Dead));
        }
        out
    }

    #[test]
    fn alternating_control_never_flips() {
        let frames: Vec<Frame> = (0..200u64)
            .map(|i| {
                let b = Position::new(0.0, 0.0);
                let (h, a) = if (i / 5) % 2 == 0 { (0.5, 3.0) } else { (3.0, 0.5) };
                Frame::new(i, i as i64 * 40, 1)
                    .with_ball(b, true)
                    .with_player("h1", Side::Home, Position::new(-h, 0.0))
                    .with_player("a1", Side::Away, Position::new(a, 0.0))
            })
            .collect();
        let cands: Vec<_> = frames.iter().map(|f| candidate(f, 2.0)).collect();
        let rec = recording_with(frames);
        let t = segment_possession(&rec, None, &PossessionParams::default()).unwrap();
        assert_eq!(t.labels, simulate(&cands, 13));
        assert!(t.labels.iter().all(|l| *l == Phase::HomePossession));
    }

    #[test]
    fn equidistant_rivals_keep_holder() {
        let mk = |i: u64, h: f64, a: f64| {
            Frame::new(i, 0, 1)
                .with_ball(Position::default(), true)
                .with_player("h1", Side::Home, Position::new(-h, 0.0))
                .with_player("a1", Side::Away, Position::new(a, 0.0))
        };
        let mut frames = vec![mk(0, 1.0, 1.0)];
        frames.extend((1..30).map(|i| mk(i, 1.0, 1.0)));
        let rec = recording_with(frames);
        let t = segment_possession(&rec, None, &PossessionParams::default()).unwrap();
        assert!(t.labels.iter().all(|l| *l == Phase::Dead));

        let mut frames = vec![mk(0, 0.5, 1.5)];
        frames.extend((1..30).map(|i| mk(i, 1.0, 1.0)));
        let rec = recording_with(frames);
        let t = segment_possession(&rec, None, &PossessionParams::default()).unwrap();
        assert!(t.labels.iter().all(|l| *l == Phase::HomePossession));
    }

    #[test]
    fn durations() {
        let t = PhaseTimeline::new(vec![Phase::HomePossession; 250], PhaseSource::Explicit);
        assert_eq!(phase_duration(&t, Phase::HomePossession, 25.0), 10.0);
        assert_eq!(phase_duration(&t, Phase::AwayPossession, 25.0), 0.0);
    }

    proptest! {
        #[test]
        fn hysteresis_matches_reference(
            seq in proptest::collection::vec(0u8..3, 1..400),
            k in 1usize..20,
        ) {
            let frames: Vec<Frame> = seq.iter().enumerate().map(|(i, c)| {
                let (h, a) = match c { 0 => (0.5, 5.0), 1 => (5.0, 0.5), _ => (5.0, 5.5) };
                Frame::new(i as u64, i as i64 * 40, 1)
                    .with_ball(Position::default(), true)
                    .with_player("h1", Side::Home, Position::new(-h, 0.0))
                    .with_player("a1", Side::Away, Position::new(a, 0.0))
            }).collect();
            let cands: Vec<_> = frames.iter().map(|f| candidate(f, 2.0)).collect();
            let rec = recording_with(frames);
            let params = PossessionParams { hysteresis_frames: k, ..Default::default() };
            let t = segment_possession(&rec, None, &params).unwrap();
            prop_assert_eq!(t.labels, simulate(&cands, k));
        }

        #[test]
        fn durations_partition_the_match(labels in proptest::collection::vec(0u8..3, 0..2000)) {
            let labels: Vec<Phase> = labels.into_iter().map(|l| match l {
                0 => Phase::HomePossession, 1 => Phase::AwayPossession, _ => Phase::Dead,
            }).collect();
            let n = labels.len();
            let t = PhaseTimeline::new(labels, PhaseSource::Explicit);
            let counts: usize = [Phase::HomePossession, Phase::AwayPossession, Phase::Dead]
                .iter().map(|p| t.count(*p)).sum();
            prop_assert_eq!(counts, n);
            let secs: f64 = [Phase::HomePossession, Phase::AwayPossession, Phase::Dead]
                .iter().map(|p| phase_duration(&t, *p, 25.0)).sum();
            let total = n as f64 / 25.0;
            prop_assert!((secs - total).abs() <= 4.0 * f64::EPSILON * total.max(1.0));
        }
    }
}
