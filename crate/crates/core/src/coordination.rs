//! Functional Coordination Networks: per-frame velocity estimates and the
//! fraction of phase frames in which two teammates move in the same direction.

use std::collections::{BTreeMap, BTreeSet};
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::error::{Error, Result};
use crate::marking::csv_field;
use crate::model::{
    player_node_id, Edge, MatchRecording, Node, Phase, PhaseSource, PhaseTimeline, PlayerId, Position, Side, TeamId,
    WeightedGraph,
};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Velocity {
    pub vx: f64,
    pub vy: f64,
}

impl Velocity {
    pub fn new(vx: f64, vy: f64) -> Self {
        Self { vx, vy }
    }

    pub fn speed(&self) -> f64 {
        self.vx.hypot(self.vy)
    }
}

/// Per-frame velocities in each player's own canonical frame. `None` marks a
/// player on the pitch whose velocity could not be estimated.
#[derive(Debug, Clone, PartialEq)]
pub struct VelocityField {
    pub window_frames: u64,
    pub frames: Vec<BTreeMap<PlayerId, Option<Velocity>>>,
}

impl VelocityField {
    pub fn get(&self, frame: usize, player: &PlayerId) -> Option<Velocity> {
        self.frames.get(frame)?.get(player).copied().flatten()
    }
}

/// Central difference `(p(t+w) - p(t-w)) / (2w / fps)`, falling back to a
/// one-sided difference when only one neighbour frame (same period, player
/// present) exists.
pub fn estimate_velocities(rec: &MatchRecording, window_frames: u64) -> Result<VelocityField> {
    if window_frames == 0 {
        return Err(Error::InvalidInput("velocity window must be >= 1 frame".into()));
    }
    let frames = rec.frames();
    let dt = window_frames as f64 / rec.fps();
    let neighbour = |i: usize, forward: bool| {
        let f = &frames[i];
        let idx = if forward {
            f.frame_index.checked_add(window_frames)
        } else {
            f.frame_index.checked_sub(window_frames)
        }?;
        let j = rec.position_of_frame(idx)?;
        (frames[j].period == f.period).then_some(&frames[j])
    };

    let mut out = Vec::with_capacity(frames.len());
    for (i, f) in frames.iter().enumerate() {
        let (prev, next) = (neighbour(i, false), neighbour(i, true));
        let mut row = BTreeMap::new();
        for (id, st) in &f.players {
            let at = |fr: Option<&crate::model::Frame>| -> Result<Option<Position>> {
                match fr.and_then(|fr| fr.players.get(id)) {
                    Some(s) if s.side == st.side => Ok(Some(rec.canonical(s.pos, st.side, f.period)?)),
                    _ => Ok(None),
                }
            };
            let here = rec.canonical(st.pos, st.side, f.period)?;
            let v = match (at(prev)?, at(next)?) {
                (Some(a), Some(b)) => Some(Velocity::new((b.x - a.x) / (2.0 * dt), (b.y - a.y) / (2.0 * dt))),
                (None, Some(b)) => Some(Velocity::new((b.x - here.x) / dt, (b.y - here.y) / dt)),
                (Some(a), None) => Some(Velocity::new((here.x - a.x) / dt, (here.y - a.y) / dt)),
                (None, None) => None,
            };
            row.insert(id.clone(), v);
        }
        out.push(row);
    }
    Ok(VelocityField {
        window_frames,
        frames: out,
    })
}

/// Angle between two velocities in degrees, in `[0, 180]`.
pub fn pair_angle(vi: Velocity, vj: Velocity) -> Result<f64> {
    let (si, sj) = (vi.speed(), vj.speed());
    if !(si > 0.0 && sj > 0.0) || !si.is_finite() || !sj.is_finite() {
        return Err(Error::UndefinedAngle);
    }
    let cos = (vi.vx * vj.vx + vi.vy * vj.vy) / (si * sj);
    Ok(cos.clamp(-1.0, 1.0).acos().to_degrees())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Denominator {
    /// Frames in which the pair was eligible.
    #[default]
    PairEligible,
    /// Every frame of the phase.
    PhaseFrames,
}

impl Denominator {
    pub fn as_str(self) -> &'static str {
        match self {
            Denominator::PairEligible => "pair_eligible",
            Denominator::PhaseFrames => "phase_frames",
        }
    }
}

impl FromStr for Denominator {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "pair_eligible" => Ok(Denominator::PairEligible),
            "phase_frames" => Ok(Denominator::PhaseFrames),
            other => Err(Error::Config(format!("unknown denominator '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoordinationParams {
    pub theta_threshold_deg: f64,
    pub v_min_mps: f64,
    pub window_frames: u64,
    pub denominator: Denominator,
    pub excluded_players: BTreeSet<PlayerId>,
}

impl Default for CoordinationParams {
    fn default() -> Self {
        Self {
            theta_threshold_deg: 10.0,
            v_min_mps: 0.5,
            window_frames: 1,
            denominator: Denominator::PairEligible,
            excluded_players: BTreeSet::new(),
        }
    }
}

impl CoordinationParams {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=180.0).contains(&self.theta_threshold_deg) {
            return Err(Error::Config(format!(
                "theta must be within [0, 180], got {}",
                self.theta_threshold_deg
            )));
        }
        if !(self.v_min_mps >= 0.0 && self.v_min_mps.is_finite()) {
            return Err(Error::Config(format!("v_min must be >= 0, got {}", self.v_min_mps)));
        }
        if self.window_frames == 0 {
            return Err(Error::Config("window must be >= 1 frame".into()));
        }
        Ok(())
    }

    fn aligned(&self, theta: f64) -> bool {
        theta < self.theta_threshold_deg || self.theta_threshold_deg >= 180.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PhaseKind {
    Offensive,
    Defensive,
}

impl PhaseKind {
    pub fn as_str(self) -> &'static str {
        match self {
            PhaseKind::Offensive => "offensive",
            PhaseKind::Defensive => "defensive",
        }
    }

    pub fn phase_for(self, side: Side) -> Phase {
        match self {
            PhaseKind::Offensive => Phase::possession(side),
            PhaseKind::Defensive => Phase::possession(side.opponent()),
        }
    }
}

impl FromStr for PhaseKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "offensive" => Ok(PhaseKind::Offensive),
            "defensive" => Ok(PhaseKind::Defensive),
            other => Err(Error::Config(format!("unknown phase '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoordinationMatrix {
    pub team_id: TeamId,
    pub side: Side,
    pub phase_kind: PhaseKind,
    pub phase: Phase,
    pub players: Vec<PlayerId>,
    /// Symmetric, diagonal fixed at 1.
    pub values: Vec<Vec<f64>>,
    pub eligible: Vec<Vec<u64>>,
    pub aligned: Vec<Vec<u64>>,
    pub phase_frames: u64,
    pub params: CoordinationParams,
    pub phase_source: PhaseSource,
}

impl CoordinationMatrix {
    pub fn value_for(&self, a: &PlayerId, b: &PlayerId) -> Option<f64> {
        let i = self.players.iter().position(|p| p == a)?;
        let j = self.players.iter().position(|p| p == b)?;
        Some(self.values[i][j])
    }

    /// Rows and columns are players, values fractions to three decimals.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("player");
        for p in &self.players {
            s.push(',');
            s.push_str(&csv_field(p.as_str()));
        }
        s.push('\n');
        for (i, p) in self.players.iter().enumerate() {
            s.push_str(&csv_field(p.as_str()));
            for v in &self.values[i] {
                s.push_str(&format!(",{v:.3}"));
            }
            s.push('\n');
        }
        s
    }

    pub fn metadata(&self) -> serde_json::Value {
        json!({
            "team_id": self.team_id.as_str(),
            "side": self.side.as_str(),
            "phase": self.phase_kind.as_str(),
            "phase_frames": self.phase_frames,
            "phase_source": self.phase_source.as_str(),
            "frame_universe": "phase",
            "theta_threshold_deg": self.params.theta_threshold_deg,
            "v_min_mps": self.params.v_min_mps,
            "window_frames": self.params.window_frames,
            "denominator": self.params.denominator.as_str(),
            "excluded_players": self.params.excluded_players.iter().map(|p| p.as_str()).collect::<Vec<_>>(),
        })
    }
}

/// Builds the alignment matrix of `team` over the frames of one phase.
///
/// A teammate pair is eligible in a frame when both have valid velocities
/// with speed at least `v_min` (and non-zero), and aligned when their angle
/// is below the threshold. A threshold of 180 degrees aligns every eligible
/// pair.
pub fn alignment_fraction(
    vel: &VelocityField,
    rec: &MatchRecording,
    timeline: &PhaseTimeline,
    team: &TeamId,
    phase_kind: PhaseKind,
    params: &CoordinationParams,
) -> Result<CoordinationMatrix> {
    params.validate()?;
    let side = rec.side_of(team)?;
    timeline.check_against(rec)?;
    if vel.frames.len() != rec.len() {
        return Err(Error::InvalidInput(format!(
            "velocity field has {} frames, recording has {}",
            vel.frames.len(),
            rec.len()
        )));
    }
    let phase = phase_kind.phase_for(side);
    let players: Vec<PlayerId> = rec
        .sheet(side)
        .player_ids
        .iter()
        .filter(|p| !params.excluded_players.contains(*p))
        .cloned()
        .collect();
    let n = players.len();
    let frames = rec.frames();

    let phase_idx: Vec<usize> = (0..frames.len()).filter(|i| timeline.labels[*i] == phase).collect();
    let zero = || (vec![0u64; n * n], vec![0u64; n * n]);
    let (elig, align) = phase_idx
        .par_iter()
        .fold(zero, |(mut e, mut a), &fi| {
            let f = &frames[fi];
            let moving: Vec<(usize, Velocity)> = players
                .iter()
                .enumerate()
                .filter(|(_, p)| f.players.get(*p).is_some_and(|s| s.side == side))
                .filter_map(|(i, p)| vel.get(fi, p).map(|v| (i, v)))
                .filter(|(_, v)| v.speed() > 0.0 && v.speed() >= params.v_min_mps)
                .collect();
            for (x, (i, vi)) in moving.iter().enumerate() {
                for (j, vj) in &moving[x + 1..] {
                    e[i * n + j] += 1;
                    if pair_angle(*vi, *vj).is_ok_and(|t| params.aligned(t)) {
                        a[i * n + j] += 1;
                    }
                }
            }
            (e, a)
        })
        .reduce(zero, |(mut e1, mut a1), (e2, a2)| {
            e1.iter_mut().zip(e2).for_each(|(x, y)| *x += y);
            a1.iter_mut().zip(a2).for_each(|(x, y)| *x += y);
            (e1, a1)
        });

    let phase_frames = phase_idx.len() as u64;
    let mut values = vec![vec![0.0; n]; n];
    let mut eligible = vec![vec![0; n]; n];
    let mut aligned = vec![vec![0; n]; n];
    for i in 0..n {
        values[i][i] = 1.0;
        for j in i + 1..n {
            let (e, a) = (elig[i * n + j], align[i * n + j]);
            let denom = match params.denominator {
                Denominator::PairEligible => e,
                Denominator::PhaseFrames => phase_frames,
            };
            let v = if denom == 0 { 0.0 } else { a as f64 / denom as f64 };
            values[i][j] = v;
            values[j][i] = v;
            eligible[i][j] = e;
            eligible[j][i] = e;
            aligned[i][j] = a;
            aligned[j][i] = a;
        }
    }
    Ok(CoordinationMatrix {
        team_id: team.clone(),
        side,
        phase_kind,
        phase,
        players,
        values,
        eligible,
        aligned,
        phase_frames,
        params: params.clone(),
        phase_source: timeline.source,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MeanCoordination {
    pub mean: f64,
    pub pairs: usize,
}

/// Mean over the upper triangle, skipping pairs that were never eligible.
pub fn mean_coordination(m: &CoordinationMatrix) -> Result<MeanCoordination> {
    let n = m.players.len();
    let vals: Vec<f64> = (0..n)
        .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
        .filter(|(i, j)| m.eligible[*i][*j] > 0)
        .map(|(i, j)| m.values[i][j])
        .collect();
    if vals.is_empty() {
        return Err(Error::UndefinedMean);
    }
    Ok(MeanCoordination {
        mean: vals.iter().sum::<f64>() / vals.len() as f64,
        pairs: vals.len(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LinkThreshold {
    Mean,
    Value(f64),
}

/// Nodes at each player's mean canonical position over the phase, sized by
/// the row sum of off-diagonal values; edges where the value exceeds the
/// threshold.
pub fn coordination_network(
    m: &CoordinationMatrix,
    rec: &MatchRecording,
    timeline: &PhaseTimeline,
    link_threshold: LinkThreshold,
) -> Result<WeightedGraph> {
    timeline.check_against(rec)?;
    let mean = mean_coordination(m).ok();
    let threshold = match link_threshold {
        LinkThreshold::Mean => mean.map(|s| s.mean),
        LinkThreshold::Value(v) => Some(v),
    };

    let mut sums: BTreeMap<&PlayerId, (f64, f64, u64)> = BTreeMap::new();
    for (f, label) in rec.frames().iter().zip(&timeline.labels) {
        if *label != m.phase {
            continue;
        }
        for p in &m.players {
            if let Some(st) = f.players.get(p).filter(|s| s.side == m.side) {
                let c = rec.canonical(st.pos, m.side, f.period)?;
                let e = sums.entry(p).or_default();
                e.0 += c.x;
                e.1 += c.y;
                e.2 += 1;
            }
        }
    }

    let mut g = WeightedGraph::new(false, false)
        .with_meta("network", "functional_coordination")
        .with_meta("size_value", "coordination_row_sum")
        .with_meta("weight", "alignment_fraction")
        .with_meta(
            "link_threshold",
            match link_threshold {
                LinkThreshold::Mean => json!("mean"),
                LinkThreshold::Value(v) => json!(v),
            },
        )
        .with_meta(
            "mean_coordination",
            mean.map(|s| json!(s.mean)).unwrap_or(serde_json::Value::Null),
        )
        .with_meta("eligible_pairs", mean.map(|s| s.pairs).unwrap_or(0));
    if let serde_json::Value::Object(meta) = m.metadata() {
        g.metadata.extend(meta);
    }

    for (i, p) in m.players.iter().enumerate() {
        let Some((sx, sy, k)) = sums.get(p) else { continue };
        let row: f64 = (0..m.players.len()).filter(|j| *j != i).map(|j| m.values[i][j]).sum();
        let pos = Position::new(sx / *k as f64, sy / *k as f64);
        g.nodes
            .push(Node::new(player_node_id(m.side, p), p.as_str(), pos, row).with_attr("side", m.side.as_str()));
    }
    if let Some(t) = threshold {
        let n = m.players.len();
        for i in 0..n {
            for j in i + 1..n {
                if m.eligible[i][j] > 0 && m.values[i][j] > t {
                    g.edges.push(
                        Edge::new(
                            player_node_id(m.side, &m.players[i]),
                            player_node_id(m.side, &m.players[j]),
                            m.values[i][j],
                        )
                        .with_attr("eligible_frames", m.eligible[i][j] as i64)
                        .with_attr("aligned_frames", m.aligned[i][j] as i64),
                    );
                }
            }
        }
    }
    g.validate()?;
    Ok(g)
}
