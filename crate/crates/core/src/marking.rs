//! Marking Networks: bipartite defender-opponent proximity time accumulated
//! during the defending team's defensive phase.

use std::collections::BTreeMap;

use serde_json::json;

use crate::error::{Error, Result};
use crate::model::{
    player_node_id, AttrValue, Edge, Frame, MatchRecording, Node, Phase, PhaseSource, PhaseTimeline, PlayerId,
    Position, Side, TeamId, WeightedGraph,
};

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct MarkingOptions {
    /// Each defender only accrues time against its single nearest opponent
    /// inside the radius in a given frame.
    pub nearest_only: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MarkingMatrix {
    pub defending_team: TeamId,
    pub defending_side: Side,
    pub radius_m: f64,
    pub fps: f64,
    pub nearest_only: bool,
    pub defenders: Vec<PlayerId>,
    pub opponents: Vec<PlayerId>,
    /// `[defender][opponent]` count of qualifying frames.
    pub frames: Vec<Vec<u64>>,
    /// Frames in the defensive phase.
    pub phase_frames: u64,
    pub phase_source: PhaseSource,
}

impl MarkingMatrix {
    pub fn seconds(&self, d: usize, o: usize) -> f64 {
        self.frames[d][o] as f64 / self.fps
    }

    pub fn seconds_for(&self, defender: &PlayerId, opponent: &PlayerId) -> Option<f64> {
        let d = self.defenders.iter().position(|p| p == defender)?;
        let o = self.opponents.iter().position(|p| p == opponent)?;
        Some(self.seconds(d, o))
    }

    pub fn total_seconds(&self) -> f64 {
        self.frames.iter().flatten().sum::<u64>() as f64 / self.fps
    }

    /// Rows are defenders, columns opponents, values minutes to two decimals.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("defender");
        for o in &self.opponents {
            s.push(',');
            s.push_str(&csv_field(o.as_str()));
        }
        s.push('\n');
        for (d, id) in self.defenders.iter().enumerate() {
            s.push_str(&csv_field(id.as_str()));
            for o in 0..self.opponents.len() {
                s.push_str(&format!(",{:.2}", self.seconds(d, o) / 60.0));
            }
            s.push('\n');
        }
        s
    }
}

pub(crate) fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_owned()
    }
}

/// Qualifying `(defender index, opponent index, defender pos, opponent pos)`
/// tuples for one frame.
fn qualifying<'a>(
    frame: &'a Frame,
    defending: Side,
    d_index: &BTreeMap<&'a PlayerId, usize>,
    o_index: &BTreeMap<&'a PlayerId, usize>,
    radius_m: f64,
    nearest_only: bool,
) -> Vec<(usize, usize, Position, Position)> {
    let opponents: Vec<_> = frame.players_of(defending.opponent()).collect();
    let mut out = Vec::new();
    for (did, dpos) in frame.players_of(defending) {
        let Some(&d) = d_index.get(did) else { continue };
        let close = opponents
            .iter()
            .filter_map(|(oid, opos)| {
                let dist = dpos.distance(opos);
                (dist < radius_m).then(|| (dist, o_index.get(oid).copied(), **opos))
            })
            .filter_map(|(dist, o, opos)| o.map(|o| (dist, o, opos)));
        if nearest_only {
            if let Some((_, o, opos)) = close.min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1))) {
                out.push((d, o, *dpos, opos));
            }
        } else {
            out.extend(close.map(|(_, o, opos)| (d, o, *dpos, opos)));
        }
    }
    out
}

pub fn accumulate_marking(
    rec: &MatchRecording,
    timeline: &PhaseTimeline,
    defending_team: &TeamId,
    radius_m: f64,
) -> Result<MarkingMatrix> {
    accumulate_marking_with(rec, timeline, defending_team, radius_m, MarkingOptions::default())
}

/// Accumulates, for every frame in which the opponent has the ball, one frame
/// per defender-opponent pair closer than `radius_m`. A defender may accrue
/// time against several opponents in the same frame.
pub fn accumulate_marking_with(
    rec: &MatchRecording,
    timeline: &PhaseTimeline,
    defending_team: &TeamId,
    radius_m: f64,
    opts: MarkingOptions,
) -> Result<MarkingMatrix> {
    if !(radius_m.is_finite() && radius_m > 0.0) {
        return Err(Error::InvalidInput(format!(
            "marking radius must be > 0, got {radius_m}"
        )));
    }
    let side = rec.side_of(defending_team)?;
    timeline.check_against(rec)?;
    let defenders = rec.sheet(side).player_ids.clone();
    let opponents = rec.sheet(side.opponent()).player_ids.clone();
    let d_index: BTreeMap<_, _> = defenders.iter().enumerate().map(|(i, p)| (p, i)).collect();
    let o_index: BTreeMap<_, _> = opponents.iter().enumerate().map(|(i, p)| (p, i)).collect();
    let defensive = Phase::possession(side.opponent());

    let mut frames = vec![vec![0u64; opponents.len()]; defenders.len()];
    let mut phase_frames = 0;
    for (f, label) in rec.frames().iter().zip(&timeline.labels) {
        if *label != defensive {
            continue;
        }
        phase_frames += 1;
        for (d, o, _, _) in qualifying(f, side, &d_index, &o_index, radius_m, opts.nearest_only) {
            frames[d][o] += 1;
        }
    }
    Ok(MarkingMatrix {
        defending_team: defending_team.clone(),
        defending_side: side,
        radius_m,
        fps: rec.fps(),
        nearest_only: opts.nearest_only,
        defenders,
        opponents,
        frames,
        phase_frames,
        phase_source: timeline.source,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct MarkingNetwork {
    pub graph: WeightedGraph,
}

impl MarkingNetwork {
    /// True when every edge joins a defender to an opponent.
    pub fn is_bipartite(&self) -> bool {
        let role = |id: &str| self.graph.node(id).and_then(|n| n.attrs.get("role")).cloned();
        self.graph.edges.iter().all(|e| match (role(&e.src), role(&e.dst)) {
            (Some(a), Some(b)) => a != b,
            _ => false,
        })
    }
}

#[derive(Default, Clone, Copy)]
struct Mean {
    x: f64,
    y: f64,
    n: u64,
}

impl Mean {
    fn push(&mut self, p: Position) {
        self.x += p.x;
        self.y += p.y;
        self.n += 1;
    }

    fn get(&self) -> Position {
        Position::new(self.x / self.n as f64, self.y / self.n as f64)
    }
}

/// Filters the matrix to pairs with more than `t_min_s` seconds and lays the
/// players out at their mean defensive-phase position, in the defending
/// team's attacking frame. Each edge also carries the mean midpoint of the
/// pair over the frames in which the marking happened (`mark_x`, `mark_y`).
pub fn marking_network(
    m: &MarkingMatrix,
    rec: &MatchRecording,
    timeline: &PhaseTimeline,
    t_min_s: f64,
) -> Result<MarkingNetwork> {
    if t_min_s.is_nan() || t_min_s < 0.0 {
        return Err(Error::InvalidInput(format!("t_min must be >= 0, got {t_min_s}")));
    }
    timeline.check_against(rec)?;
    let side = m.defending_side;
    let defensive = Phase::possession(side.opponent());
    let d_index: BTreeMap<_, _> = m.defenders.iter().enumerate().map(|(i, p)| (p, i)).collect();
    let o_index: BTreeMap<_, _> = m.opponents.iter().enumerate().map(|(i, p)| (p, i)).collect();

    let mut keep = vec![vec![false; m.opponents.len()]; m.defenders.len()];
    for (d, row) in keep.iter_mut().enumerate() {
        for (o, k) in row.iter_mut().enumerate() {
            *k = m.frames[d][o] > 0 && m.seconds(d, o) > t_min_s;
        }
    }

    let mut player_pos: BTreeMap<(Side, &PlayerId), Mean> = BTreeMap::new();
    let mut pair_pos: BTreeMap<(usize, usize), Mean> = BTreeMap::new();
    for (f, label) in rec.frames().iter().zip(&timeline.labels) {
        if *label != defensive {
            continue;
        }
        for (id, st) in &f.players {
            player_pos
                .entry((st.side, id))
                .or_default()
                .push(rec.canonical(st.pos, side, f.period)?);
        }
        for (d, o, dp, op) in qualifying(f, side, &d_index, &o_index, m.radius_m, m.nearest_only) {
            if keep[d][o] {
                pair_pos
                    .entry((d, o))
                    .or_default()
                    .push(rec.canonical(dp.midpoint(&op), side, f.period)?);
            }
        }
    }

    let mut g = WeightedGraph::new(false, false)
        .with_meta("network", "marking")
        .with_meta("defending_team", m.defending_team.as_str())
        .with_meta("defending_side", side.as_str())
        .with_meta("radius_m", m.radius_m)
        .with_meta("t_min_s", t_min_s)
        .with_meta("nearest_only", m.nearest_only)
        .with_meta("phase_source", m.phase_source.as_str())
        .with_meta("size_value", "marking_s")
        .with_meta("weight", "marking_s");

    for ((s, id), mean) in &player_pos {
        let total_frames: u64 = if *s == side {
            d_index.get(id).map(|d| m.frames[*d].iter().sum()).unwrap_or(0)
        } else {
            o_index
                .get(id)
                .map(|o| m.frames.iter().map(|r| r[*o]).sum())
                .unwrap_or(0)
        };
        let role = if *s == side { "defender" } else { "opponent" };
        g.nodes.push(
            Node::new(
                player_node_id(*s, id),
                id.as_str(),
                mean.get(),
                total_frames as f64 / m.fps,
            )
            .with_attr("side", s.as_str())
            .with_attr("role", role),
        );
    }
    for ((d, o), mean) in &pair_pos {
        let secs = m.seconds(*d, *o);
        let mark = mean.get();
        let mut e = Edge::new(
            player_node_id(side, &m.defenders[*d]),
            player_node_id(side.opponent(), &m.opponents[*o]),
            secs,
        );
        e.attrs.insert("minutes".into(), AttrValue::Float(secs / 60.0));
        e.attrs.insert("mark_x".into(), AttrValue::Float(mark.x));
        e.attrs.insert("mark_y".into(), AttrValue::Float(mark.y));
        g.edges.push(e);
    }
    g.validate()?;
    Ok(MarkingNetwork { graph: g })
}

/// Highest accumulated pairs first; ties by `(defender, opponent)` id.
pub fn top_markers(m: &MarkingMatrix, k: usize) -> Vec<(PlayerId, PlayerId, f64)> {
    let mut all = Vec::new();
    for (d, row) in m.frames.iter().enumerate() {
        for (o, n) in row.iter().enumerate() {
            if *n > 0 {
                all.push((*n, &m.defenders[d], &m.opponents[o], m.seconds(d, o)));
            }
        }
    }
    all.sort_by(|a, b| b.0.cmp(&a.0).then_with(|| (a.1, a.2).cmp(&(b.1, b.2))));
    all.into_iter()
        .take(k)
        .map(|(_, d, o, s)| (d.clone(), o.clone(), s))
        .collect()
}

pub fn matrix_metadata(m: &MarkingMatrix) -> serde_json::Value {
    json!({
        "defending_team": m.defending_team.as_str(),
        "defending_side": m.defending_side.as_str(),
        "radius_m": m.radius_m,
        "nearest_only": m.nearest_only,
        "phase_frames": m.phase_frames,
        "phase_source": m.phase_source.as_str(),
        "units": "minutes",
    })
}
