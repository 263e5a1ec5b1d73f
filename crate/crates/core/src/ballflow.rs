//! Ball Flow Networks: directed frontier-crossing counts between grid cells
//! and per-cell ball dwell, for one team's possession.

use std::collections::BTreeMap;

use serde_json::json;

use crate::error::Result;
use crate::grid::{cell_index, transitions, CellId, CrossingMode, GridSpec};
use crate::model::{Edge, MatchRecording, Node, Phase, PhaseSource, PhaseTimeline, Side, TeamId, WeightedGraph};

#[derive(Debug, Clone, PartialEq)]
pub struct BallFlowNetwork {
    pub team_id: TeamId,
    pub side: Side,
    pub grid: GridSpec,
    pub crossing_mode: CrossingMode,
    pub edge_weights: BTreeMap<(CellId, CellId), u64>,
    /// Possession frames with the ball inside each cell.
    pub dwell_frames: BTreeMap<CellId, u64>,
    pub possession_frames: u64,
    pub fps: f64,
    pub phase_source: PhaseSource,
}

impl BallFlowNetwork {
    pub fn dwell_s(&self, cell: CellId) -> f64 {
        self.dwell_frames.get(&cell).copied().unwrap_or(0) as f64 / self.fps
    }

    pub fn possession_s(&self) -> f64 {
        self.possession_frames as f64 / self.fps
    }

    pub fn total_crossings(&self) -> u64 {
        self.edge_weights.values().sum()
    }

    /// Graph with one node per cell at its centre (canonical coordinates),
    /// node size = dwell seconds, edge weight = crossing count.
    pub fn to_graph(&self) -> WeightedGraph {
        let mut g = WeightedGraph::new(true, false)
            .with_meta("network", "ball_flow")
            .with_meta("team_id", self.team_id.as_str())
            .with_meta("side", self.side.as_str())
            .with_meta(
                "grid",
                json!({ "n_cols": self.grid.n_cols, "n_rows": self.grid.n_rows }),
            )
            .with_meta(
                "pitch",
                json!({ "length_m": self.grid.pitch.length_m, "width_m": self.grid.pitch.width_m }),
            )
            .with_meta("crossing_mode", self.crossing_mode.as_str())
            .with_meta("phase_source", self.phase_source.as_str())
            .with_meta("possession_s", self.possession_s())
            .with_meta("size_value", "dwell_s")
            .with_meta("weight", "crossings");
        for c in self.grid.cells() {
            g.nodes.push(
                Node::new(c.node_id(), c.to_string(), self.grid.cell_center(c), self.dwell_s(c))
                    .with_attr("col", c.col as i64)
                    .with_attr("row", c.row as i64),
            );
        }
        for ((a, b), w) in &self.edge_weights {
            g.edges.push(Edge::new(a.node_id(), b.node_id(), *w as f64));
        }
        g
    }
}

pub fn build_bfn(
    rec: &MatchRecording,
    timeline: &PhaseTimeline,
    team: &TeamId,
    g: &GridSpec,
) -> Result<BallFlowNetwork> {
    build_bfn_with(rec, timeline, team, g, CrossingMode::Traversal)
}

/// Builds `team`'s ball flow network.
///
/// Only consecutive frame pairs that are both labelled with the team's
/// possession, share a period and both carry a ball position contribute
/// crossings; pairs spanning a turnover or a stoppage contribute nothing.
pub fn build_bfn_with(
    rec: &MatchRecording,
    timeline: &PhaseTimeline,
    team: &TeamId,
    g: &GridSpec,
    mode: CrossingMode,
) -> Result<BallFlowNetwork> {
    let side = rec.side_of(team)?;
    timeline.check_against(rec)?;
    let own = Phase::possession(side);
    let frames = rec.frames();

    let mut canon = Vec::with_capacity(frames.len());
    for f in frames {
        canon.push(match f.ball {
            Some(b) => Some(rec.canonical(b, side, f.period)?),
            None => None,
        });
    }

    let mut edge_weights = BTreeMap::new();
    let mut dwell_frames = BTreeMap::new();
    for (i, f) in frames.iter().enumerate() {
        if timeline.labels[i] != own {
            continue;
        }
        if let Some(b) = canon[i] {
            *dwell_frames.entry(cell_index(b, g)).or_insert(0) += 1;
        }
        if i + 1 < frames.len() && timeline.labels[i + 1] == own && frames[i + 1].period == f.period {
            if let (Some(b0), Some(b1)) = (canon[i], canon[i + 1]) {
                for edge in transitions(b0, b1, g, mode) {
                    *edge_weights.entry(edge).or_insert(0) += 1;
                }
            }
        }
    }

    Ok(BallFlowNetwork {
        team_id: team.clone(),
        side,
        grid: *g,
        crossing_mode: mode,
        edge_weights,
        dwell_frames,
        possession_frames: timeline.count(own) as u64,
        fps: rec.fps(),
        phase_source: timeline.source,
    })
}

/// The `k` heaviest edges, ties broken by `(src, dst)` cell order.
pub fn top_corridors(bfn: &BallFlowNetwork, k: usize) -> Vec<((CellId, CellId), u64)> {
    let mut edges: Vec<_> = bfn.edge_weights.iter().map(|(e, w)| (*e, *w)).collect();
    edges.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
    edges.truncate(k);
    edges
}
