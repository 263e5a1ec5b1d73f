//! Graph export to GraphJson, GraphML, DOT and CSV edge lists, plus GraphJson
//! import.
//!
//! Every export works on the canonical form of the graph, so the output bytes
//! do not depend on the order in which nodes and edges were built.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::model::{AttrValue, Attributes, WeightedGraph};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExportFormat {
    GraphJson,
    GraphMl,
    Dot,
    Csv,
}

impl ExportFormat {
    pub const ALL: [ExportFormat; 4] = [
        ExportFormat::GraphJson,
        ExportFormat::GraphMl,
        ExportFormat::Dot,
        ExportFormat::Csv,
    ];

    pub fn extension(self) -> &'static str {
        match self {
            ExportFormat::GraphJson => "json",
            ExportFormat::GraphMl => "graphml",
            ExportFormat::Dot => "dot",
            ExportFormat::Csv => "csv",
        }
    }
}

impl FromStr for ExportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "graphjson" | "json" => Ok(ExportFormat::GraphJson),
            "graphml" => Ok(ExportFormat::GraphMl),
            "dot" => Ok(ExportFormat::Dot),
            "csv" => Ok(ExportFormat::Csv),
            other => Err(Error::Config(format!("unknown export format '{other}'"))),
        }
    }
}

/// `%g`-style text with six significant digits.
pub fn fmt_num(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    if !v.is_finite() {
        return v.to_string();
    }
    let sci = format!("{v:.5e}");
    let (mant, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-4..6).contains(&exp) {
        format!("{}e{}", trim_zeros(mant), exp)
    } else {
        let decimals = (5 - exp).max(0) as usize;
        trim_zeros(&format!("{v:.decimals$}")).to_owned()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

fn check_finite(g: &WeightedGraph) -> Result<()> {
    let bad = |what: String| Err(Error::Serialization(format!("{what} is not finite")));
    for n in &g.nodes {
        for (k, v) in [("x", n.x), ("y", n.y), ("size_value", n.size_value)] {
            if !v.is_finite() {
                return bad(format!("node {} {k}", n.id));
            }
        }
        if let Some((k, _)) = n
            .attrs
            .iter()
            .find(|(_, v)| matches!(v, AttrValue::Float(f) if !f.is_finite()))
        {
            return bad(format!("node {} attribute {k}", n.id));
        }
    }
    for e in &g.edges {
        if !e.weight.is_finite() {
            return bad(format!("edge {} -> {} weight", e.src, e.dst));
        }
        if let Some((k, _)) = e
            .attrs
            .iter()
            .find(|(_, v)| matches!(v, AttrValue::Float(f) if !f.is_finite()))
        {
            return bad(format!("edge {} -> {} attribute {k}", e.src, e.dst));
        }
    }
    Ok(())
}

pub fn export_graph(g: &WeightedGraph, fmt: ExportFormat) -> Result<String> {
    g.validate()?;
    check_finite(g)?;
    let g = g.canonical();
    match fmt {
        ExportFormat::GraphJson => {
            let mut s = serde_json::to_string_pretty(&g).map_err(|e| Error::Serialization(e.to_string()))?;
            s.push('\n');
            Ok(s)
        }
        ExportFormat::GraphMl => graphml(&g),
        ExportFormat::Dot => Ok(dot(&g)),
        ExportFormat::Csv => Ok(csv(&g)),
    }
}

/// Only GraphJson can be read back.
pub fn import_graph(text: &str, fmt: ExportFormat) -> Result<WeightedGraph> {
    if fmt != ExportFormat::GraphJson {
        return Err(Error::Config(format!(
            "cannot import {fmt:?}; only GraphJson is readable"
        )));
    }
    let g: WeightedGraph = serde_json::from_str(text).map_err(|e| Error::GraphParse {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    g.validate()?;
    Ok(g)
}

fn attr_type(v: &AttrValue) -> &'static str {
    match v {
        AttrValue::Bool(_) => "boolean",
        AttrValue::Int(_) => "long",
        AttrValue::Float(_) => "double",
        AttrValue::Text(_) => "string",
    }
}

fn attr_text(v: &AttrValue) -> String {
    match v {
        AttrValue::Bool(b) => b.to_string(),
        AttrValue::Int(i) => i.to_string(),
        AttrValue::Float(f) => fmt_num(*f),
        AttrValue::Text(s) => s.clone(),
    }
}

fn attr_types<'a>(all: impl Iterator<Item = &'a Attributes>, what: &str) -> Result<BTreeMap<&'a str, &'static str>> {
    let mut types = BTreeMap::new();
    for attrs in all {
        for (k, v) in attrs {
            let t = attr_type(v);
            if let Some(prev) = types.insert(k.as_str(), t) {
                if prev != t {
                    return Err(Error::Serialization(format!(
                        "{what} attribute '{k}' has conflicting types {prev} and {t}"
                    )));
                }
            }
        }
    }
    Ok(types)
}

fn xml_escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            c => out.push(c),
        }
    }
    out
}

const NODE_FIELDS: [&str; 4] = ["label", "x", "y", "size_value"];

fn graphml(g: &WeightedGraph) -> Result<String> {
    let node_types = attr_types(g.nodes.iter().map(|n| &n.attrs), "node")?;
    let edge_types = attr_types(g.edges.iter().map(|e| &e.attrs), "edge")?;
    for k in node_types.keys() {
        if NODE_FIELDS.contains(k) {
            return Err(Error::Serialization(format!(
                "node attribute '{k}' shadows a built-in key"
            )));
        }
    }
    for k in edge_types.keys() {
        if ["weight", "sign"].contains(k) {
            return Err(Error::Serialization(format!(
                "edge attribute '{k}' shadows a built-in key"
            )));
        }
    }

    let mut s = String::new();
    s.push_str("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
    s.push_str("<graphml xmlns=\"http://graphml.graphdrawing.org/xmlns\">\n");
    let mut key = |id: String, domain: &str, name: &str, ty: &str| {
        let _ = writeln!(
            s,
            "  <key id=\"{}\" for=\"{domain}\" attr.name=\"{}\" attr.type=\"{ty}\"/>",
            xml_escape(&id),
            xml_escape(name)
        );
    };
    key("metadata".into(), "graph", "metadata", "string");
    key("label".into(), "node", "label", "string");
    for k in ["x", "y", "size_value"] {
        key(k.into(), "node", k, "double");
    }
    for (k, t) in &node_types {
        key(format!("n_{k}"), "node", k, t);
    }
    key("weight".into(), "edge", "weight", "double");
    if g.signed {
        key("sign".into(), "edge", "sign", "int");
    }
    for (k, t) in &edge_types {
        key(format!("e_{k}"), "edge", k, t);
    }

    let edgedefault = if g.directed { "directed" } else { "undirected" };
    let _ = writeln!(s, "  <graph id=\"G\" edgedefault=\"{edgedefault}\">");
    let meta = serde_json::to_string(&g.metadata).map_err(|e| Error::Serialization(e.to_string()))?;
    let _ = writeln!(s, "    <data key=\"metadata\">{}</data>", xml_escape(&meta));
    for n in &g.nodes {
        let _ = writeln!(s, "    <node id=\"{}\">", xml_escape(&n.id));
        let _ = writeln!(s, "      <data key=\"label\">{}</data>", xml_escape(&n.label));
        for (k, v) in [("x", n.x), ("y", n.y), ("size_value", n.size_value)] {
            let _ = writeln!(s, "      <data key=\"{k}\">{}</data>", fmt_num(v));
        }
        for (k, v) in &n.attrs {
            let _ = writeln!(
                s,
                "      <data key=\"n_{}\">{}</data>",
                xml_escape(k),
                xml_escape(&attr_text(v))
            );
        }
        s.push_str("    </node>\n");
    }
    for e in &g.edges {
        let _ = writeln!(
            s,
            "    <edge source=\"{}\" target=\"{}\">",
            xml_escape(&e.src),
            xml_escape(&e.dst)
        );
        let _ = writeln!(s, "      <data key=\"weight\">{}</data>", fmt_num(e.weight));
        if let Some(sign) = e.sign {
            let _ = writeln!(s, "      <data key=\"sign\">{}</data>", sign.value());
        }
        for (k, v) in &e.attrs {
            let _ = writeln!(
                s,
                "      <data key=\"e_{}\">{}</data>",
                xml_escape(k),
                xml_escape(&attr_text(v))
            );
        }
        s.push_str("    </edge>\n");
    }
    s.push_str("  </graph>\n</graphml>\n");
    Ok(s)
}

fn dot_quote(s: &str) -> String {
    format!("\"{}\"", s.replace('\\', "\\\\").replace('"', "\\\""))
}

fn dot(g: &WeightedGraph) -> String {
    let (kw, arrow) = if g.directed { ("digraph", "->") } else { ("graph", "--") };
    let max_w = g.edges.iter().map(|e| e.weight).fold(0.0, f64::max);
    let mut s = format!("{kw} G {{\n");
    for n in &g.nodes {
        let _ = writeln!(
            s,
            "  {} [label={}, pos=\"{},{}!\", size_value={}];",
            dot_quote(&n.id),
            dot_quote(&n.label),
            fmt_num(n.x),
            fmt_num(n.y),
            fmt_num(n.size_value)
        );
    }
    for e in &g.edges {
        let pen = if max_w > 0.0 { 0.5 + 4.5 * e.weight / max_w } else { 1.0 };
        let mut attrs = format!("weight={}, penwidth={}", fmt_num(e.weight), fmt_num(pen));
        if let Some(sign) = e.sign {
            let color = if sign.value() > 0 { "darkgreen" } else { "red" };
            let _ = write!(attrs, ", sign={}, color={color}", sign.value());
        }
        let _ = writeln!(s, "  {} {arrow} {} [{attrs}];", dot_quote(&e.src), dot_quote(&e.dst));
    }
    s.push_str("}\n");
    s
}

fn csv(g: &WeightedGraph) -> String {
    use crate::marking::csv_field;
    let mut s = String::from(if g.signed {
        "src,dst,weight,sign\n"
    } else {
        "src,dst,weight\n"
    });
    for e in &g.edges {
        let _ = write!(s, "{},{},{}", csv_field(&e.src), csv_field(&e.dst), fmt_num(e.weight));
        if let Some(sign) = e.sign {
            let _ = write!(s, ",{}", sign.value());
        }
        s.push('\n');
    }
    s
}
