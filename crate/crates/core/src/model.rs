//! Domain types shared by every network builder.
//!
//! Coordinates are metric with the origin at the centre spot: `x` runs along
//! the length of the pitch and `y` along its width. A recording stores raw
//! positions; builders that need a consistent orientation map them through
//! [`MatchRecording::canonical`] so the analysed team always attacks `+x`.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_PITCH_LENGTH_M: f64 = 105.0;
pub const DEFAULT_PITCH_WIDTH_M: f64 = 68.0;
/// Slack around the touchlines accepted before a position counts as out of bounds.
pub const DEFAULT_MARGIN_M: f64 = 5.0;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Position {
    pub x: f64,
    pub y: f64,
}

impl Position {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn distance(&self, other: &Position) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    pub fn midpoint(&self, other: &Position) -> Position {
        Position::new((self.x + other.x) / 2.0, (self.y + other.y) / 2.0)
    }

    /// Point reflection through the centre spot.
    pub fn reflected(&self) -> Position {
        Position::new(-self.x, -self.y)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PitchSpec {
    pub length_m: f64,
    pub width_m: f64,
    pub margin_m: f64,
}

impl Default for PitchSpec {
    fn default() -> Self {
        Self {
            length_m: DEFAULT_PITCH_LENGTH_M,
            width_m: DEFAULT_PITCH_WIDTH_M,
            margin_m: DEFAULT_MARGIN_M,
        }
    }
}

impl PitchSpec {
    pub fn new(length_m: f64, width_m: f64) -> Result<Self> {
        Self::with_margin(length_m, width_m, DEFAULT_MARGIN_M)
    }

    pub fn with_margin(length_m: f64, width_m: f64, margin_m: f64) -> Result<Self> {
        if !(length_m.is_finite() && length_m > 0.0) {
            return Err(Error::InvalidInput(format!("pitch length must be > 0, got {length_m}")));
        }
        if !(width_m.is_finite() && width_m > 0.0) {
            return Err(Error::InvalidInput(format!("pitch width must be > 0, got {width_m}")));
        }
        if !(margin_m.is_finite() && margin_m >= 0.0) {
            return Err(Error::InvalidInput(format!(
                "pitch margin must be >= 0, got {margin_m}"
            )));
        }
        Ok(Self {
            length_m,
            width_m,
            margin_m,
        })
    }

    pub fn half_length(&self) -> f64 {
        self.length_m / 2.0
    }

    pub fn half_width(&self) -> f64 {
        self.width_m / 2.0
    }

    pub fn in_bounds(&self, p: &Position) -> bool {
        p.x.abs() <= self.half_length() + self.margin_m && p.y.abs() <= self.half_width() + self.margin_m
    }

    /// Clamp a position into the touchline box extended by the margin.
    pub fn clamp(&self, p: &Position) -> Position {
        let hx = self.half_length() + self.margin_m;
        let hy = self.half_width() + self.margin_m;
        Position::new(p.x.clamp(-hx, hx), p.y.clamp(-hy, hy))
    }
}

macro_rules! string_id {
    ($name:ident) => {
        #[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
        #[serde(transparent)]
        pub struct $name(pub String);

        impl $name {
            pub fn as_str(&self) -> &str {
                &self.0
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(&self.0)
            }
        }

        impl From<&str> for $name {
            fn from(s: &str) -> Self {
                Self(s.to_owned())
            }
        }

        impl From<String> for $name {
            fn from(s: String) -> Self {
                Self(s)
            }
        }
    };
}

string_id!(TeamId);
string_id!(PlayerId);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Home,
    Away,
}

impl Side {
    pub fn opponent(self) -> Side {
        match self {
            Side::Home => Side::Away,
            Side::Away => Side::Home,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Side::Home => "home",
            Side::Away => "away",
        }
    }
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TeamSheet {
    pub team_id: TeamId,
    pub player_ids: Vec<PlayerId>,
}

impl TeamSheet {
    pub fn new(team_id: impl Into<TeamId>, player_ids: Vec<PlayerId>) -> Result<Self> {
        let mut seen = BTreeSet::new();
        for id in &player_ids {
            if !seen.insert(id) {
                return Err(Error::InvalidInput(format!("player '{id}' listed twice in team sheet")));
            }
        }
        Ok(Self {
            team_id: team_id.into(),
            player_ids,
        })
    }

    pub fn contains(&self, player: &PlayerId) -> bool {
        self.player_ids.contains(player)
    }
}

pub fn roster_size(sheet: &TeamSheet) -> usize {
    sheet.player_ids.len()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum AttackDirection {
    #[serde(rename = "+x")]
    PositiveX,
    #[serde(rename = "-x")]
    NegativeX,
}

impl AttackDirection {
    pub fn reversed(self) -> Self {
        match self {
            AttackDirection::PositiveX => AttackDirection::NegativeX,
            AttackDirection::NegativeX => AttackDirection::PositiveX,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            AttackDirection::PositiveX => "+x",
            AttackDirection::NegativeX => "-x",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlayerState {
    pub side: Side,
    pub pos: Position,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    pub frame_index: u64,
    pub time_ms: i64,
    pub period: u8,
    pub ball: Option<Position>,
    pub ball_alive: bool,
    pub players: BTreeMap<PlayerId, PlayerState>,
}

impl Frame {
    pub fn new(frame_index: u64, time_ms: i64, period: u8) -> Self {
        Self {
            frame_index,
            time_ms,
            period,
            ball: None,
            ball_alive: false,
            players: BTreeMap::new(),
        }
    }

    pub fn with_ball(mut self, ball: Position, alive: bool) -> Self {
        self.ball = Some(ball);
        self.ball_alive = alive;
        self
    }

    pub fn with_player(mut self, id: impl Into<PlayerId>, side: Side, pos: Position) -> Self {
        self.players.insert(id.into(), PlayerState { side, pos });
        self
    }

    pub fn players_of(&self, side: Side) -> impl Iterator<Item = (&PlayerId, &Position)> {
        self.players
            .iter()
            .filter(move |(_, s)| s.side == side)
            .map(|(id, s)| (id, &s.pos))
    }
}

pub type AttackDirections = BTreeMap<(Side, u8), AttackDirection>;

/// Builds the attack-direction table from the home team's direction in the
/// first period; the away team always attacks the other way and both swap at
/// half time.
pub fn standard_attack_directions(home_first_period: AttackDirection) -> AttackDirections {
    let mut map = BTreeMap::new();
    map.insert((Side::Home, 1), home_first_period);
    map.insert((Side::Away, 1), home_first_period.reversed());
    map.insert((Side::Home, 2), home_first_period.reversed());
    map.insert((Side::Away, 2), home_first_period);
    map
}

/// A tracked match. Immutable once built; every constructor path validates.
#[derive(Debug, Clone, PartialEq)]
pub struct MatchRecording {
    pitch: PitchSpec,
    fps: f64,
    home: TeamSheet,
    away: TeamSheet,
    attack_direction: AttackDirections,
    frames: Vec<Frame>,
}

impl MatchRecording {
    pub fn new(
        pitch: PitchSpec,
        fps: f64,
        home: TeamSheet,
        away: TeamSheet,
        attack_direction: AttackDirections,
        frames: Vec<Frame>,
    ) -> Result<Self> {
        if !(fps.is_finite() && fps > 0.0) {
            return Err(Error::InvalidInput(format!("fps must be > 0, got {fps}")));
        }
        if home.player_ids.is_empty() || away.player_ids.is_empty() {
            return Err(Error::InvalidInput("team sheets must list at least one player".into()));
        }
        if home.team_id == away.team_id {
            return Err(Error::InvalidInput(format!(
                "home and away share team id '{}'",
                home.team_id
            )));
        }
        for period in [1u8, 2] {
            let h = attack_direction.get(&(Side::Home, period));
            let a = attack_direction.get(&(Side::Away, period));
            match (h, a) {
                (Some(h), Some(a)) if *h != *a => {}
                (Some(_), Some(_)) => {
                    return Err(Error::InvalidInput(format!(
                        "both teams attack the same way in period {period}"
                    )))
                }
                _ => {
                    return Err(Error::MissingMetadata(format!(
                        "attack direction for period {period} is not defined for both teams"
                    )))
                }
            }
        }
        for w in frames.windows(2) {
            if w[0].frame_index >= w[1].frame_index {
                return Err(Error::InvalidInput(format!(
                    "frames out of order: {} followed by {}",
                    w[0].frame_index, w[1].frame_index
                )));
            }
        }
        for f in &frames {
            if !(f.period == 1 || f.period == 2) {
                return Err(Error::InvalidInput(format!(
                    "frame {} has period {}",
                    f.frame_index, f.period
                )));
            }
            if let Some(b) = &f.ball {
                if !pitch.in_bounds(b) {
                    return Err(Error::InvalidInput(format!(
                        "ball out of bounds in frame {}",
                        f.frame_index
                    )));
                }
            }
            for (id, st) in &f.players {
                let sheet = match st.side {
                    Side::Home => &home,
                    Side::Away => &away,
                };
                if !sheet.contains(id) {
                    return Err(Error::InvalidInput(format!(
                        "player '{id}' in frame {} is not on the {} team sheet",
                        f.frame_index, st.side
                    )));
                }
                if !pitch.in_bounds(&st.pos) {
                    return Err(Error::InvalidInput(format!(
                        "player '{id}' out of bounds in frame {}",
                        f.frame_index
                    )));
                }
            }
        }
        Ok(Self {
            pitch,
            fps,
            home,
            away,
            attack_direction,
            frames,
        })
    }

    pub fn pitch(&self) -> &PitchSpec {
        &self.pitch
    }

    pub fn fps(&self) -> f64 {
        self.fps
    }

    pub fn home(&self) -> &TeamSheet {
        &self.home
    }

    pub fn away(&self) -> &TeamSheet {
        &self.away
    }

    pub fn sheet(&self, side: Side) -> &TeamSheet {
        match side {
            Side::Home => &self.home,
            Side::Away => &self.away,
        }
    }

    pub fn frames(&self) -> &[Frame] {
        &self.frames
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn attack_directions(&self) -> &AttackDirections {
        &self.attack_direction
    }

    pub fn side_of(&self, team: &TeamId) -> Result<Side> {
        if *team == self.home.team_id {
            Ok(Side::Home)
        } else if *team == self.away.team_id {
            Ok(Side::Away)
        } else {
            Err(Error::UnknownTeam(team.clone()))
        }
    }

    pub fn team_id(&self, side: Side) -> &TeamId {
        &self.sheet(side).team_id
    }

    pub fn attack_direction(&self, side: Side, period: u8) -> Result<AttackDirection> {
        self.attack_direction
            .get(&(side, period))
            .copied()
            .ok_or_else(|| Error::MissingMetadata(format!("no attack direction for {side} in period {period}")))
    }

    /// Maps `p` into the frame of reference where `side` attacks `+x`.
    pub fn canonical(&self, p: Position, side: Side, period: u8) -> Result<Position> {
        Ok(match self.attack_direction(side, period)? {
            AttackDirection::PositiveX => p,
            AttackDirection::NegativeX => p.reflected(),
        })
    }

    /// Index of the frame carrying `frame_index`, if any.
    pub fn position_of_frame(&self, frame_index: u64) -> Option<usize> {
        self.frames.binary_search_by_key(&frame_index, |f| f.frame_index).ok()
    }

    /// The same match seen from the other end: all coordinates point-reflected
    /// and every attack direction reversed.
    pub fn mirrored(&self) -> MatchRecording {
        let frames = self
            .frames
            .iter()
            .map(|f| {
                let mut g = f.clone();
                g.ball = f.ball.map(|b| b.reflected());
                for st in g.players.values_mut() {
                    st.pos = st.pos.reflected();
                }
                g
            })
            .collect();
        let attack_direction = self.attack_direction.iter().map(|(k, d)| (*k, d.reversed())).collect();
        MatchRecording {
            pitch: self.pitch,
            fps: self.fps,
            home: self.home.clone(),
            away: self.away.clone(),
            attack_direction,
            frames,
        }
    }
}

/// Maps a position into `team`'s attacking frame for `period`.
pub fn canonical_position(p: Position, team: &TeamId, period: u8, rec: &MatchRecording) -> Result<Position> {
    let side = rec
        .side_of(team)
        .map_err(|_| Error::MissingMetadata(format!("no attack direction for team '{team}'")))?;
    rec.canonical(p, side, period)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Phase {
    HomePossession,
    AwayPossession,
    Dead,
}

impl Phase {
    pub fn possession(side: Side) -> Phase {
        match side {
            Side::Home => Phase::HomePossession,
            Side::Away => Phase::AwayPossession,
        }
    }

    pub fn holder(self) -> Option<Side> {
        match self {
            Phase::HomePossession => Some(Side::Home),
            Phase::AwayPossession => Some(Side::Away),
            Phase::Dead => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Phase::HomePossession => "home",
            Phase::AwayPossession => "away",
            Phase::Dead => "dead",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PhaseSource {
    Explicit,
    Heuristic,
}

impl PhaseSource {
    pub fn as_str(self) -> &'static str {
        match self {
            PhaseSource::Explicit => "explicit",
            PhaseSource::Heuristic => "heuristic",
        }
    }
}

/// One phase label per recording frame.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseTimeline {
    pub labels: Vec<Phase>,
    pub source: PhaseSource,
}

impl PhaseTimeline {
    pub fn new(labels: Vec<Phase>, source: PhaseSource) -> Self {
        Self { labels, source }
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn count(&self, phase: Phase) -> usize {
        self.labels.iter().filter(|l| **l == phase).count()
    }

    pub fn check_against(&self, rec: &MatchRecording) -> Result<()> {
        if self.labels.len() != rec.len() {
            return Err(Error::TimelineMismatch {
                expected: rec.len(),
                got: self.labels.len(),
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Sign {
    #[serde(rename = "+1")]
    Positive,
    #[serde(rename = "-1")]
    Negative,
}

impl Sign {
    pub fn value(self) -> i8 {
        match self {
            Sign::Positive => 1,
            Sign::Negative => -1,
        }
    }

    pub fn from_value(v: i64) -> Option<Sign> {
        match v {
            1 => Some(Sign::Positive),
            -1 => Some(Sign::Negative),
            _ => None,
        }
    }
}

/// Extra node or edge attribute carried through to the exports.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum AttrValue {
    Bool(bool),
    Int(i64),
    Float(f64),
    Text(String),
}

impl From<f64> for AttrValue {
    fn from(v: f64) -> Self {
        AttrValue::Float(v)
    }
}

impl From<i64> for AttrValue {
    fn from(v: i64) -> Self {
        AttrValue::Int(v)
    }
}

impl From<&str> for AttrValue {
    fn from(v: &str) -> Self {
        AttrValue::Text(v.to_owned())
    }
}

impl From<String> for AttrValue {
    fn from(v: String) -> Self {
        AttrValue::Text(v)
    }
}

impl From<bool> for AttrValue {
    fn from(v: bool) -> Self {
        AttrValue::Bool(v)
    }
}

pub type Attributes = BTreeMap<String, AttrValue>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Node {
    pub id: String,
    pub label: String,
    pub x: f64,
    pub y: f64,
    pub size_value: f64,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub attrs: Attributes,
}

impl Node {
    pub fn new(id: impl Into<String>, label: impl Into<String>, pos: Position, size_value: f64) -> Self {
        Self {
            id: id.into(),
            label: label.into(),
            x: pos.x,
            y: pos.y,
            size_value,
            attrs: Attributes::new(),
        }
    }

    pub fn with_attr(mut self, key: &str, value: impl Into<AttrValue>) -> Self {
        self.attrs.insert(key.to_owned(), value.into());
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub src: String,
    pub dst: String,
    pub weight: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sign: Option<Sign>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub attrs: Attributes,
}

impl Edge {
    pub fn new(src: impl Into<String>, dst: impl Into<String>, weight: f64) -> Self {
        Self {
            src: src.into(),
            dst: dst.into(),
            weight,
            sign: None,
            attrs: Attributes::new(),
        }
    }

    pub fn signed(mut self, sign: Sign) -> Self {
        self.sign = Some(sign);
        self
    }

    pub fn with_attr(mut self, key: &str, value: impl Into<AttrValue>) -> Self {
        self.attrs.insert(key.to_owned(), value.into());
        self
    }
}

/// Common export shape for all four network kinds.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct WeightedGraph {
    pub directed: bool,
    pub signed: bool,
    #[serde(default)]
    pub metadata: BTreeMap<String, serde_json::Value>,
    pub nodes: Vec<Node>,
    pub edges: Vec<Edge>,
}

impl WeightedGraph {
    pub fn new(directed: bool, signed: bool) -> Self {
        Self {
            directed,
            signed,
            ..Default::default()
        }
    }

    pub fn with_meta(mut self, key: &str, value: impl Into<serde_json::Value>) -> Self {
        self.metadata.insert(key.to_owned(), value.into());
        self
    }

    pub fn node(&self, id: &str) -> Option<&Node> {
        self.nodes.iter().find(|n| n.id == id)
    }

    pub fn validate(&self) -> Result<()> {
        let mut ids = BTreeSet::new();
        for n in &self.nodes {
            if !ids.insert(n.id.as_str()) {
                return Err(Error::GraphValidation(format!("duplicate node '{}'", n.id)));
            }
        }
        let mut seen = BTreeSet::new();
        for e in &self.edges {
            let name = format!("{} -> {}", e.src, e.dst);
            if !ids.contains(e.src.as_str()) || !ids.contains(e.dst.as_str()) {
                return Err(Error::GraphValidation(format!(
                    "edge {name} references an unknown node"
                )));
            }
            if !(e.weight >= 0.0) {
                return Err(Error::GraphValidation(format!(
                    "edge {name} has negative or NaN weight"
                )));
            }
            if e.sign.is_some() != self.signed {
                return Err(Error::GraphValidation(format!(
                    "edge {name} sign presence does not match signed={}",
                    self.signed
                )));
            }
            let key = self.edge_key(e);
            if !seen.insert(key) {
                return Err(Error::GraphValidation(format!("duplicate edge {name}")));
            }
        }
        Ok(())
    }

    fn edge_key<'a>(&self, e: &'a Edge) -> (&'a str, &'a str) {
        if self.directed || e.src <= e.dst {
            (e.src.as_str(), e.dst.as_str())
        } else {
            (e.dst.as_str(), e.src.as_str())
        }
    }

    /// Canonical form: nodes sorted by id, undirected edges oriented
    /// `src <= dst`, edges sorted by `(src, dst)`.
    pub fn canonicalize(&mut self) {
        self.nodes.sort_by(|a, b| a.id.cmp(&b.id));
        if !self.directed {
            for e in &mut self.edges {
                if e.src > e.dst {
                    std::mem::swap(&mut e.src, &mut e.dst);
                }
            }
        }
        self.edges.sort_by(|a, b| (&a.src, &a.dst).cmp(&(&b.src, &b.dst)));
    }

    pub fn canonical(&self) -> WeightedGraph {
        let mut g = self.clone();
        g.canonicalize();
        g
    }
}

/// Node id for a player, unique across both teams.
pub fn player_node_id(side: Side, player: &PlayerId) -> String {
    format!("{}:{}", side.as_str(), player)
}
