//! Signed Proximity Networks and their four-class triangle census.
//!
//! For a frame and a radius, two players are linked when their distance is
//! strictly below the radius; the link is `+1` between teammates and `-1`
//! between opponents. Team A is the home team and team B the away team, so
//! `aaa` counts all-home triangles and `aab` two home players with one away
//! player.

use std::collections::BTreeSet;

use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use crate::error::{Error, Result};
use crate::graphio::fmt_num;
use crate::model::{player_node_id, Edge, Frame, MatchRecording, Node, PlayerId, Position, Side, Sign, WeightedGraph};

#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct SpnOptions {
    /// Players left out of every graph (e.g. goalkeepers).
    pub excluded_players: BTreeSet<PlayerId>,
    /// Keep only players within this distance of the ball; frames without a
    /// ball then yield empty graphs.
    pub ball_window_m: Option<f64>,
    /// Average over dead-ball frames as well as alive ones.
    pub include_dead: bool,
}

impl SpnOptions {
    pub fn mode(&self) -> &'static str {
        if self.ball_window_m.is_some() {
            "ball_window"
        } else {
            "global"
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpnNode {
    pub player: PlayerId,
    pub side: Side,
    pub pos: Position,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SignedGraph {
    pub frame_index: u64,
    pub radius_m: f64,
    /// Sorted by `(side, player)`.
    pub nodes: Vec<SpnNode>,
    /// Node index pairs with `i < j`, in lexicographic order.
    pub edges: Vec<(usize, usize, Sign)>,
}

fn select_nodes(frame: &Frame, options: &SpnOptions) -> Vec<SpnNode> {
    let ball = frame.ball;
    let mut nodes: Vec<SpnNode> = frame
        .players
        .iter()
        .filter(|(id, _)| !options.excluded_players.contains(*id))
        .filter(|(_, st)| match options.ball_window_m {
            None => true,
            Some(w) => ball.is_some_and(|b| st.pos.distance(&b) <= w),
        })
        .map(|(id, st)| SpnNode {
            player: id.clone(),
            side: st.side,
            pos: st.pos,
        })
        .collect();
    nodes.sort_by(|a, b| (a.side, &a.player).cmp(&(b.side, &b.player)));
    nodes
}

fn link(nodes: &[SpnNode], radius_m: f64) -> Vec<(usize, usize, Sign)> {
    let mut edges = Vec::new();
    for i in 0..nodes.len() {
        for j in i + 1..nodes.len() {
            if nodes[i].pos.distance(&nodes[j].pos) < radius_m {
                let sign = if nodes[i].side == nodes[j].side {
                    Sign::Positive
                } else {
                    Sign::Negative
                };
                edges.push((i, j, sign));
            }
        }
    }
    edges
}

pub fn build_spn_frame(frame: &Frame, radius_m: f64, options: &SpnOptions) -> SignedGraph {
    let nodes = select_nodes(frame, options);
    let edges = link(&nodes, radius_m);
    SignedGraph {
        frame_index: frame.frame_index,
        radius_m,
        nodes,
        edges,
    }
}

impl SignedGraph {
    pub fn to_graph(&self) -> WeightedGraph {
        let mut degree = vec![0usize; self.nodes.len()];
        for (i, j, _) in &self.edges {
            degree[*i] += 1;
            degree[*j] += 1;
        }
        let mut g = WeightedGraph::new(false, true)
            .with_meta("network", "signed_proximity")
            .with_meta("frame_index", self.frame_index)
            .with_meta("radius_m", self.radius_m)
            .with_meta("size_value", "degree");
        for (n, d) in self.nodes.iter().zip(degree) {
            g.nodes.push(
                Node::new(player_node_id(n.side, &n.player), n.player.as_str(), n.pos, d as f64)
                    .with_attr("side", n.side.as_str()),
            );
        }
        for (i, j, s) in &self.edges {
            let a = &self.nodes[*i];
            let b = &self.nodes[*j];
            g.edges.push(
                Edge::new(
                    player_node_id(a.side, &a.player),
                    player_node_id(b.side, &b.player),
                    1.0,
                )
                .signed(*s),
            );
        }
        g
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct TriangleCounts {
    pub aaa: u64,
    pub bbb: u64,
    pub aab: u64,
    pub abb: u64,
}

impl TriangleCounts {
    pub fn total(&self) -> u64 {
        self.aaa + self.bbb + self.aab + self.abb
    }

    fn add(&mut self, other: &TriangleCounts) {
        self.aaa += other.aaa;
        self.bbb += other.bbb;
        self.aab += other.aab;
        self.abb += other.abb;
    }
}

/// Counts all 3-cliques by team composition.
///
/// Adjacency is held as bitsets; for each edge `(i, j)` the common
/// neighbours above `j` close triangles, split by team with popcounts.
pub fn triangle_census(g: &SignedGraph) -> TriangleCounts {
    let sides: Vec<Side> = g.nodes.iter().map(|n| n.side).collect();
    census(&sides, &g.edges)
}

fn census(sides: &[Side], edges: &[(usize, usize, Sign)]) -> TriangleCounts {
    let n = sides.len();
    let words = n.div_ceil(64).max(1);
    let mut adj = vec![vec![0u64; words]; n];
    let mut home = vec![0u64; words];
    for (i, side) in sides.iter().enumerate() {
        if *side == Side::Home {
            home[i / 64] |= 1 << (i % 64);
        }
    }
    for (i, j, _) in edges {
        adj[*i][*j / 64] |= 1 << (*j % 64);
        adj[*j][*i / 64] |= 1 << (*i % 64);
    }
    let mut counts = TriangleCounts::default();
    for (i, j, _) in edges {
        let (mut h, mut a) = (0u64, 0u64);
        for w in 0..words {
            let mut common = adj[*i][w] & adj[*j][w];
            // keep only k > j
            let lo = w * 64;
            if *j + 1 > lo {
                let shift = (*j + 1 - lo).min(64);
                common = if shift == 64 { 0 } else { common & (!0u64 << shift) };
            }
            h += (common & home[w]).count_ones() as u64;
            a += (common & !home[w]).count_ones() as u64;
        }
        let homes_in_edge = [*i, *j].iter().filter(|k| sides[**k] == Side::Home).count();
        match homes_in_edge {
            2 => {
                counts.aaa += h;
                counts.aab += a;
            }
            1 => {
                counts.aab += h;
                counts.abb += a;
            }
            _ => {
                counts.abb += h;
                counts.bbb += a;
            }
        }
    }
    counts
}

/// Every triangle as node index triples `i < j < k`.
pub fn enumerate_triangles(g: &SignedGraph) -> Vec<[usize; 3]> {
    let n = g.nodes.len();
    let mut adj = vec![BTreeSet::new(); n];
    for (i, j, _) in &g.edges {
        adj[*i].insert(*j);
    }
    let mut out = Vec::new();
    for i in 0..n {
        for &j in &adj[i] {
            for &k in adj[j].iter() {
                if adj[i].contains(&k) {
                    out.push([i, j, k]);
                }
            }
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct EdgeBalance {
    pub positive_home: u64,
    pub positive_away: u64,
    pub negative: u64,
}

pub fn edge_balance(g: &SignedGraph) -> EdgeBalance {
    let mut b = EdgeBalance::default();
    for (i, _, sign) in &g.edges {
        match (sign, g.nodes[*i].side) {
            (Sign::Negative, _) => b.negative += 1,
            (Sign::Positive, Side::Home) => b.positive_home += 1,
            (Sign::Positive, Side::Away) => b.positive_away += 1,
        }
    }
    b
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct MeanTriangleCounts {
    pub aaa: f64,
    pub bbb: f64,
    pub aab: f64,
    pub abb: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TriangleProfile {
    pub radii: Vec<f64>,
    pub mean_counts: Vec<MeanTriangleCounts>,
    pub frame_count: usize,
    pub mode: &'static str,
    pub include_dead: bool,
}

impl TriangleProfile {
    /// `radius_m,aaa,bbb,aab,abb`, one row per radius.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("radius_m,aaa,bbb,aab,abb\n");
        for (r, m) in self.radii.iter().zip(&self.mean_counts) {
            s.push_str(&format!(
                "{},{},{},{},{}\n",
                fmt_num(*r),
                fmt_num(m.aaa),
                fmt_num(m.bbb),
                fmt_num(m.aab),
                fmt_num(m.abb)
            ));
        }
        s
    }

    pub fn metadata(&self) -> serde_json::Value {
        json!({
            "network": "signed_proximity",
            "mode": self.mode,
            "include_dead": self.include_dead,
            "frame_count": self.frame_count,
            "radii": self.radii,
        })
    }
}

/// Per-frame mean of the triangle census at each radius.
pub fn triangle_profile(rec: &MatchRecording, radii: &[f64], options: &SpnOptions) -> Result<TriangleProfile> {
    if radii.iter().any(|r| !(r.is_finite() && *r >= 0.0)) {
        return Err(Error::InvalidInput("radii must be finite and >= 0".into()));
    }
    if radii.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidInput("radii must be strictly increasing".into()));
    }
    let frames: Vec<&Frame> = rec
        .frames()
        .iter()
        .filter(|f| options.include_dead || f.ball_alive)
        .collect();
    let zero = || vec![TriangleCounts::default(); radii.len()];
    let totals = frames
        .par_iter()
        .map(|f| {
            let nodes = select_nodes(f, options);
            let sides: Vec<Side> = nodes.iter().map(|n| n.side).collect();
            radii
                .iter()
                .map(|r| census(&sides, &link(&nodes, *r)))
                .collect::<Vec<_>>()
        })
        .reduce(zero, |mut acc, x| {
            for (a, b) in acc.iter_mut().zip(&x) {
                a.add(b);
            }
            acc
        });
    let n = frames.len();
    let mean = |v: u64| if n == 0 { 0.0 } else { v as f64 / n as f64 };
    Ok(TriangleProfile {
        radii: radii.to_vec(),
        mean_counts: totals
            .iter()
            .map(|t| MeanTriangleCounts {
                aaa: mean(t.aaa),
                bbb: mean(t.bbb),
                aab: mean(t.aab),
                abb: mean(t.abb),
            })
            .collect(),
        frame_count: n,
        mode: options.mode(),
        include_dead: options.include_dead,
    })
}
