//! File formats: TNTP network and flow files, the JSON network document, and
//! matrix CSV.
//!
//! Every format presents 1-based node ids; networks use 0-based indices
//! internally.

use std::collections::{HashMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{DirectedNetwork, Link};
use crate::matrix::ArcMatrix;

/// Significant digits of every number the library writes.
pub const SIG_DIGITS: usize = 12;

/// Formats with 12 significant digits, trailing zeros removed.
///
/// Decimal notation for exponents in `[-6, 15)`, scientific otherwise.
///
/// ```
/// use idealflow::io::fmt_sig;
/// assert_eq!(fmt_sig(12.0), "12");
/// assert_eq!(fmt_sig(1.0 / 3.0), "0.333333333333");
/// assert_eq!(fmt_sig(2.5e-9), "2.5e-9");
/// assert_eq!(fmt_sig(2632809.3), "2632809.3");
/// ```
pub fn fmt_sig(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    if !v.is_finite() {
        return v.to_string();
    }
    let sci = format!("{:.*e}", SIG_DIGITS - 1, v);
    let (mantissa, exp) = sci.split_once('e').expect("scientific format");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-6..15).contains(&exp) {
        let (sign, mantissa) = match mantissa.strip_prefix('-') {
            Some(m) => ("-", m),
            None => ("", mantissa),
        };
        let digits: String = mantissa.chars().filter(|c| *c != '.').collect();
        let body = if exp >= 0 {
            let split = exp as usize + 1;
            if split >= digits.len() {
                format!("{digits}{}", "0".repeat(split - digits.len()))
            } else {
                format!("{}.{}", &digits[..split], &digits[split..])
            }
        } else {
            format!("0.{}{digits}", "0".repeat((-exp - 1) as usize))
        };
        format!("{sign}{}", trim_zeros(&body))
    } else {
        format!("{}e{exp}", trim_zeros(mantissa))
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// Rounds to 12 significant digits, the precision of every written number.
pub fn round_sig(v: f64) -> f64 {
    fmt_sig(v).parse().unwrap_or(v)
}

/// Serializes an `f64` field through [`round_sig`].
pub fn serialize_sig<S: serde::Serializer>(v: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_f64(round_sig(*v))
}

/// Metadata block of a TNTP network file.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct TntpMetadata {
    pub num_zones: Option<usize>,
    pub num_nodes: usize,
    pub first_thru_node: Option<usize>,
    pub num_links: usize,
}

/// One link row of a TNTP network file. Node ids are 1-based.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct TntpLinkRecord {
    pub init_node: usize,
    pub term_node: usize,
    pub capacity: f64,
    pub length: f64,
    pub free_flow_time: f64,
    pub b: f64,
    pub power: f64,
    pub speed: f64,
    pub toll: f64,
    pub link_type: i64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TntpNetworkFile {
    pub metadata: TntpMetadata,
    pub records: Vec<TntpLinkRecord>,
}

impl TntpNetworkFile {
    pub fn to_text(&self) -> String {
        let m = &self.metadata;
        let mut s = String::new();
        if let Some(z) = m.num_zones {
            s.push_str(&format!("<NUMBER OF ZONES> {z}\n"));
        }
        s.push_str(&format!("<NUMBER OF NODES> {}\n", m.num_nodes));
        if let Some(f) = m.first_thru_node {
            s.push_str(&format!("<FIRST THRU NODE> {f}\n"));
        }
        s.push_str(&format!("<NUMBER OF LINKS> {}\n", m.num_links));
        s.push_str("<END OF METADATA>\n\n\n");
        s.push_str("~\tinit_node\tterm_node\tcapacity\tlength\tfree_flow_time\tb\tpower\tspeed\ttoll\tlink_type\t;\n");
        for r in &self.records {
            s.push_str(&format!(
                "\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t;\n",
                r.init_node,
                r.term_node,
                fmt_sig(r.capacity),
                fmt_sig(r.length),
                fmt_sig(r.free_flow_time),
                fmt_sig(r.b),
                fmt_sig(r.power),
                fmt_sig(r.speed),
                fmt_sig(r.toll),
                r.link_type
            ));
        }
        s
    }
}

fn parse_err(line: usize, reason: impl Into<String>) -> Error {
    Error::Parse {
        line,
        reason: reason.into(),
    }
}

fn num<T: std::str::FromStr>(tok: &str, line: usize, what: &str) -> Result<T> {
    tok.parse()
        .map_err(|_| parse_err(line, format!("{what} {tok:?} is not a number")))
}

/// Content of a data line without a trailing `;`, or `None` for blank and `~` lines.
fn data_line(raw: &str) -> Option<&str> {
    let t = raw.trim();
    if t.is_empty() || t.starts_with('~') {
        return None;
    }
    let t = t.strip_suffix(';').unwrap_or(t).trim_end();
    (!t.is_empty()).then_some(t)
}

/// Parses a TNTP network file. Capacity becomes link capacity.
pub fn parse_tntp_net(text: &str) -> Result<(DirectedNetwork, TntpNetworkFile)> {
    let mut meta: HashMap<String, (usize, String)> = HashMap::new();
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
    let mut ended = false;
    for (no, raw) in lines.by_ref() {
        let t = raw.trim();
        if t.is_empty() || t.starts_with('~') {
            continue;
        }
        let Some(rest) = t.strip_prefix('<') else {
            return Err(parse_err(no, "expected a <TAG> line before <END OF METADATA>"));
        };
        let (tag, value) = rest
            .split_once('>')
            .ok_or_else(|| parse_err(no, "unterminated metadata tag"))?;
        let tag = tag.trim().to_ascii_uppercase();
        if tag == "END OF METADATA" {
            ended = true;
            break;
        }
        meta.insert(tag, (no, value.trim().to_string()));
    }
    if !ended {
        return Err(parse_err(text.lines().count().max(1), "missing <END OF METADATA>"));
    }
    let get =
        |tag: &str| -> Result<Option<usize>> { meta.get(tag).map(|(no, v)| num::<usize>(v, *no, tag)).transpose() };
    let num_nodes = get("NUMBER OF NODES")?.ok_or_else(|| parse_err(1, "missing <NUMBER OF NODES>"))?;
    let num_links = get("NUMBER OF LINKS")?.ok_or_else(|| parse_err(1, "missing <NUMBER OF LINKS>"))?;
    let metadata = TntpMetadata {
        num_zones: get("NUMBER OF ZONES")?,
        num_nodes,
        first_thru_node: get("FIRST THRU NODE")?,
        num_links,
    };

    let mut records = Vec::new();
    let mut seen = HashSet::new();
    for (no, raw) in lines {
        let Some(t) = data_line(raw) else { continue };
        let tok: Vec<&str> = t.split_whitespace().collect();
        if tok.len() != 10 {
            return Err(parse_err(no, format!("expected 10 columns, found {}", tok.len())));
        }
        let node = |k: usize, what: &str| -> Result<usize> {
            let v: usize = num(tok[k], no, what)?;
            if v == 0 || v > num_nodes {
                return Err(parse_err(no, format!("{what} {v} outside 1..={num_nodes}")));
            }
            Ok(v)
        };
        let rec = TntpLinkRecord {
            init_node: node(0, "init_node")?,
            term_node: node(1, "term_node")?,
            capacity: num(tok[2], no, "capacity")?,
            length: num(tok[3], no, "length")?,
            free_flow_time: num(tok[4], no, "free_flow_time")?,
            b: num(tok[5], no, "b")?,
            power: num(tok[6], no, "power")?,
            speed: num(tok[7], no, "speed")?,
            toll: num(tok[8], no, "toll")?,
            link_type: num(tok[9], no, "link_type")?,
        };
        if !(rec.capacity > 0.0) || !rec.capacity.is_finite() {
            return Err(parse_err(no, format!("capacity {} is not positive", rec.capacity)));
        }
        if !seen.insert((rec.init_node, rec.term_node)) {
            return Err(parse_err(
                no,
                format!("duplicate link {}->{}", rec.init_node, rec.term_node),
            ));
        }
        records.push(rec);
    }
    if records.len() != num_links {
        return Err(Error::MetadataMismatch {
            what: "links",
            declared: num_links,
            found: records.len(),
        });
    }
    let net = DirectedNetwork::new(
        num_nodes,
        records
            .iter()
            .map(|r| Link::new(r.init_node - 1, r.term_node - 1, r.capacity)),
    )?;
    Ok((net, TntpNetworkFile { metadata, records }))
}

/// One row of a link-flow file. Node ids are 1-based.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TntpFlowRecord {
    pub from: usize,
    pub to: usize,
    pub volume: f64,
    pub cost: Option<f64>,
}

/// Parses whitespace-separated `From To Volume [Cost]` rows after an optional
/// header line.
pub fn parse_tntp_flow(text: &str) -> Result<Vec<TntpFlowRecord>> {
    let mut out = Vec::new();
    let mut seen = HashSet::new();
    let mut first = true;
    for (i, raw) in text.lines().enumerate() {
        let no = i + 1;
        let Some(t) = data_line(raw) else { continue };
        let tok: Vec<&str> = t.split_whitespace().collect();
        if std::mem::take(&mut first) && tok[0].parse::<f64>().is_err() {
            continue;
        }
        if tok.len() < 3 || tok.len() > 4 {
            return Err(parse_err(no, format!("expected 3 or 4 columns, found {}", tok.len())));
        }
        let from: usize = num(tok[0], no, "from node")?;
        let to: usize = num(tok[1], no, "to node")?;
        if from == 0 || to == 0 {
            return Err(parse_err(no, "node ids are 1-based"));
        }
        let volume: f64 = num(tok[2], no, "volume")?;
        if !(volume >= 0.0) || !volume.is_finite() {
            return Err(parse_err(no, format!("volume {volume} is negative")));
        }
        let cost = tok.get(3).map(|c| num(c, no, "cost")).transpose()?;
        if !seen.insert((from, to)) {
            return Err(parse_err(no, format!("duplicate link {from}->{to}")));
        }
        out.push(TntpFlowRecord { from, to, volume, cost });
    }
    Ok(out)
}

/// Volumes of flow records on the links of `net`.
///
/// With `strict`, a record naming a link absent from `net` is an error;
/// otherwise it is skipped and returned in the second element.
pub fn flows_on_network(
    net: &DirectedNetwork,
    records: &[TntpFlowRecord],
    strict: bool,
) -> Result<(ArcMatrix, Vec<(usize, usize)>)> {
    let n = net.node_count();
    let mut entries = Vec::new();
    let mut skipped = Vec::new();
    for r in records {
        let known = r.from <= n && r.to <= n && net.contains(r.from - 1, r.to - 1);
        if known {
            entries.push((r.from - 1, r.to - 1, r.volume));
        } else if strict {
            return Err(Error::UnknownArc { from: r.from, to: r.to });
        } else {
            skipped.push((r.from, r.to));
        }
    }
    Ok((ArcMatrix::from_entries(n, entries)?, skipped))
}

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DocNode {
    pub id: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub y: Option<f64>,
}

fn unit_capacity() -> f64 {
    1.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DocArc {
    pub tail: usize,
    pub head: usize,
    #[serde(default = "unit_capacity")]
    pub capacity: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DocFlow {
    pub tail: usize,
    pub head: usize,
    pub volume: f64,
}

/// JSON network document.
///
/// ```
/// use idealflow::io::{load_document, save_document};
///
/// let doc = load_document(r#"{
///     "schemaVersion": 1,
///     "nodes": [{"id": 1, "label": "A"}, {"id": 2}],
///     "arcs": [{"tail": 1, "head": 2}, {"tail": 2, "head": 1, "capacity": 3}]
/// }"#)?;
/// let net = doc.to_network()?;
/// assert_eq!(net.link_count(), 2);
/// assert_eq!(net.capacity(1, 0), Some(3.0));
/// assert_eq!(load_document(&save_document(&doc))?, doc);
/// # Ok::<(), idealflow::Error>(())
/// ```
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct NetworkDocument {
    pub schema_version: u32,
    pub nodes: Vec<DocNode>,
    pub arcs: Vec<DocArc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub observed_flows: Option<Vec<DocFlow>>,
}

fn schema(path: impl Into<String>, reason: impl Into<String>) -> Error {
    Error::Schema {
        path: path.into(),
        reason: reason.into(),
    }
}

impl NetworkDocument {
    /// Document with nodes `1..=n` labelled from `net` when it has labels.
    pub fn from_network(net: &DirectedNetwork) -> Self {
        NetworkDocument {
            schema_version: SCHEMA_VERSION,
            nodes: (0..net.node_count())
                .map(|i| DocNode {
                    id: i + 1,
                    label: net.labels().map(|l| l[i].clone()),
                    x: None,
                    y: None,
                })
                .collect(),
            arcs: net
                .links()
                .iter()
                .map(|l| DocArc {
                    tail: l.tail.0 + 1,
                    head: l.head.0 + 1,
                    capacity: l.capacity,
                })
                .collect(),
            observed_flows: None,
        }
    }

    fn index(&self) -> HashMap<usize, usize> {
        self.nodes.iter().enumerate().map(|(i, n)| (n.id, i)).collect()
    }

    /// Checks ids, references and capacities.
    pub fn validate(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(schema(
                "schemaVersion",
                format!("unsupported version {}", self.schema_version),
            ));
        }
        let mut ids = HashSet::new();
        for (i, node) in self.nodes.iter().enumerate() {
            if !ids.insert(node.id) {
                return Err(schema(format!("nodes[{i}].id"), format!("duplicate id {}", node.id)));
            }
        }
        let mut pairs = HashSet::new();
        for (i, a) in self.arcs.iter().enumerate() {
            for (field, id) in [("tail", a.tail), ("head", a.head)] {
                if !ids.contains(&id) {
                    return Err(schema(format!("arcs[{i}].{field}"), format!("unknown node id {id}")));
                }
            }
            if !(a.capacity > 0.0) || !a.capacity.is_finite() {
                return Err(schema(format!("arcs[{i}].capacity"), "capacity must be positive"));
            }
            if !pairs.insert((a.tail, a.head)) {
                return Err(schema(
                    format!("arcs[{i}]"),
                    format!("duplicate arc {}->{}", a.tail, a.head),
                ));
            }
        }
        if let Some(flows) = &self.observed_flows {
            let mut seen = HashSet::new();
            for (i, f) in flows.iter().enumerate() {
                if !pairs.contains(&(f.tail, f.head)) {
                    return Err(schema(
                        format!("observedFlows[{i}]"),
                        format!("no arc {}->{}", f.tail, f.head),
                    ));
                }
                if !(f.volume >= 0.0) || !f.volume.is_finite() {
                    return Err(schema(
                        format!("observedFlows[{i}].volume"),
                        "volume must be nonnegative",
                    ));
                }
                if !seen.insert((f.tail, f.head)) {
                    return Err(schema(format!("observedFlows[{i}]"), "duplicate flow"));
                }
            }
        }
        Ok(())
    }

    /// Network with nodes in document order, labelled by label or id.
    pub fn to_network(&self) -> Result<DirectedNetwork> {
        self.validate()?;
        let idx = self.index();
        let net = DirectedNetwork::new(
            self.nodes.len(),
            self.arcs
                .iter()
                .map(|a| Link::new(idx[&a.tail], idx[&a.head], a.capacity)),
        )?;
        let labels = self
            .nodes
            .iter()
            .map(|n| n.label.clone().unwrap_or_else(|| n.id.to_string()))
            .collect();
        net.with_labels(labels)
    }

    /// Observed volumes as a matrix over document node order.
    pub fn observed_matrix(&self) -> Result<Option<ArcMatrix>> {
        self.validate()?;
        let idx = self.index();
        self.observed_flows
            .as_ref()
            .map(|fs| {
                ArcMatrix::from_entries(
                    self.nodes.len(),
                    fs.iter().map(|f| (idx[&f.tail], idx[&f.head], f.volume)),
                )
            })
            .transpose()
    }
}

/// Parses and validates a network document.
pub fn load_document(text: &str) -> Result<NetworkDocument> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let doc: NetworkDocument = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        let inner = e.into_inner();
        if inner.is_syntax() || inner.is_eof() {
            parse_err(inner.line().max(1), inner.to_string())
        } else {
            schema(path, inner.to_string())
        }
    })?;
    doc.validate()?;
    Ok(doc)
}

pub fn save_document(doc: &NetworkDocument) -> String {
    let mut s = serde_json::to_string_pretty(doc).expect("document serializes");
    s.push('\n');
    s
}

/// Square matrix as CSV: a header of labels, then one row of values per node.
pub fn export_matrix_csv(rows: &[Vec<f64>], labels: &[String]) -> String {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    w.write_record(labels).expect("in-memory write");
    for r in rows {
        w.write_record(r.iter().map(|&v| fmt_sig(v))).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 output")
}

/// Inverse of [`export_matrix_csv`].
pub fn parse_matrix_csv(text: &str) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let mut r = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(text.as_bytes());
    let mut records = r.records();
    let labels: Vec<String> = match records.next() {
        Some(rec) => rec
            .map_err(|e| parse_err(1, e.to_string()))?
            .iter()
            .map(str::to_string)
            .collect(),
        None => return Err(parse_err(1, "empty matrix file")),
    };
    let mut rows = Vec::new();
    for (i, rec) in records.enumerate() {
        let no = i + 2;
        let rec = rec.map_err(|e| parse_err(no, e.to_string()))?;
        if rec.len() != labels.len() {
            return Err(parse_err(
                no,
                format!("expected {} values, found {}", labels.len(), rec.len()),
            ));
        }
        rows.push(rec.iter().map(|v| num(v.trim(), no, "value")).collect::<Result<_>>()?);
    }
    if rows.len() != labels.len() {
        return Err(Error::DimensionMismatch {
            expected: labels.len(),
            found: rows.len(),
        });
    }
    Ok((labels, rows))
}

/// Node labels of `net`, 1-based numbers when it has none.
pub fn node_labels(net: &DirectedNetwork) -> Vec<String> {
    (0..net.node_count()).map(|i| net.label(i)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    const NET: &str = "<NUMBER OF ZONES> 3\n<NUMBER OF NODES> 3\n<FIRST THRU NODE> 1\n<NUMBER OF LINKS> 3\n<END OF METADATA>\n\n~ init term cap len fft b power speed toll type ;\n\t1\t2\t100\t6\t6\t0.15\t4\t0\t0\t1\t;\n  2   3  50.5 4 4 0.15 4 0 0 1 ;\n3\t\t1\t25 1 1 0.15 4 0 0 1\n";

    #[test]
    fn sig_formatting() {
        assert_eq!(fmt_sig(0.0), "0");
        assert_eq!(fmt_sig(1.0), "1");
        assert_eq!(fmt_sig(-3.5), "-3.5");
        assert_eq!(fmt_sig(123456789012345.0), "123456789012000");
        assert_eq!(fmt_sig(1e15), "1e15");
        assert_eq!(fmt_sig(1.23456789012345e-6), "0.00000123456789012");
        assert_eq!(fmt_sig(1.5e-7), "1.5e-7");
        assert_eq!(fmt_sig(0.1 + 0.2), "0.3");
        assert_eq!(fmt_sig(11.999999999999998), "12");
        assert_eq!(round_sig(2.0 / 3.0), 0.666666666667);
    }

    #[test]
    fn tntp_net_whitespace_and_terminators() {
        let (net, file) = parse_tntp_net(NET).unwrap();
        assert_eq!(net.node_count(), 3);
        assert_eq!(net.link_count(), 3);
        assert_eq!(net.capacity(1, 2), Some(50.5));
        assert_eq!(file.metadata.num_zones, Some(3));
        assert_eq!(file.records[0].free_flow_time, 6.0);
        let crlf = NET.replace('\n', "\r\n");
        assert_eq!(parse_tntp_net(&crlf).unwrap().0, net);
    }

    #[test]
    fn tntp_net_round_trip() {
        let (net, file) = parse_tntp_net(NET).unwrap();
        let (net2, file2) = parse_tntp_net(&file.to_text()).unwrap();
        assert_eq!(net, net2);
        assert_eq!(file, file2);
    }

    #[test]
    fn tntp_net_errors() {
        let short = NET.replace("<NUMBER OF LINKS> 3", "<NUMBER OF LINKS> 4");
        assert_eq!(
            parse_tntp_net(&short).unwrap_err(),
            Error::MetadataMismatch {
                what: "links",
                declared: 4,
                found: 3
            }
        );
        let bad = NET.replace("50.5", "wide");
        match parse_tntp_net(&bad).unwrap_err() {
            Error::Parse { line, reason } => {
                assert_eq!(line, 9);
                assert!(reason.contains("capacity"));
            }
            e => panic!("{e:?}"),
        }
        let out = NET.replace("3\t\t1", "4\t\t1");
        assert!(matches!(parse_tntp_net(&out), Err(Error::Parse { line: 10, .. })));
        let dup = NET.replace("3\t\t1", "1\t\t2");
        assert!(matches!(parse_tntp_net(&dup), Err(Error::Parse { line: 10, .. })));
        let no_end = NET.replace("<END OF METADATA>", "");
        assert!(matches!(parse_tntp_net(&no_end), Err(Error::Parse { .. })));
    }

    #[test]
    fn flow_file() {
        let text = "From \tTo \tVolume \tCost \n1\t2\t10.5\t3\n2 3 4 1\n\n3\t1\t7\t2\n";
        let recs = parse_tntp_flow(text).unwrap();
        assert_eq!(recs.len(), 3);
        assert_eq!(recs[0].volume, 10.5);
        let (net, _) = parse_tntp_net(NET).unwrap();
        let (m, skipped) = flows_on_network(&net, &recs, true).unwrap();
        assert_eq!(m.get(0, 1), 10.5);
        assert!(skipped.is_empty());

        let extra = format!("{text}1 3 2 1\n");
        let recs = parse_tntp_flow(&extra).unwrap();
        assert_eq!(
            flows_on_network(&net, &recs, true).unwrap_err(),
            Error::UnknownArc { from: 1, to: 3 }
        );
        assert_eq!(flows_on_network(&net, &recs, false).unwrap().1, vec![(1, 3)]);

        let dup = format!("{text}1 2 1 1\n");
        assert!(matches!(parse_tntp_flow(&dup), Err(Error::Parse { line: 6, .. })));
        assert!(parse_tntp_flow("From To Volume Cost\n").unwrap().is_empty());
        assert!(parse_tntp_flow("").unwrap().is_empty());
    }

    #[test]
    fn document_round_trip_and_errors() {
        let net = DirectedNetwork::new(3, [Link::unit(0, 1), Link::new(1, 2, 2.5), Link::unit(2, 0)]).unwrap();
        let doc = NetworkDocument::from_network(&net);
        let text = save_document(&doc);
        let back = load_document(&text).unwrap();
        assert_eq!(back, doc);
        assert_eq!(back.to_network().unwrap().links(), net.links());

        let missing = text.replacen("\"head\": 2", "\"head\": 9", 1);
        assert_eq!(
            load_document(&missing).unwrap_err(),
            Error::Schema {
                path: "arcs[0].head".into(),
                reason: "unknown node id 9".into()
            }
        );
        let wrong_type = text.replacen("\"head\": 2", "\"head\": \"two\"", 1);
        match load_document(&wrong_type).unwrap_err() {
            Error::Schema { path, .. } => assert_eq!(path, "arcs[0].head"),
            e => panic!("{e:?}"),
        }
        assert!(matches!(
            load_document("{\"schemaVersion\": 1,"),
            Err(Error::Parse { .. })
        ));
        let v2 = text.replace("\"schemaVersion\": 1", "\"schemaVersion\": 2");
        assert!(matches!(load_document(&v2), Err(Error::Schema { path, .. }) if path == "schemaVersion"));
    }

    #[test]
    fn matrix_csv_round_trip() {
        let rows = vec![vec![0.0, 2.0, 1.0 / 3.0], vec![1e-9, 0.0, 12.0], vec![5.0, 7.25, 0.0]];
        let labels: Vec<String> = ["a", "b", "c"].map(String::from).to_vec();
        let text = export_matrix_csv(&rows, &labels);
        assert_eq!(text.lines().count(), 4);
        assert!(text.starts_with("a,b,c\n0,2,0.333333333333\n"));
        let (l2, r2) = parse_matrix_csv(&text).unwrap();
        assert_eq!(l2, labels);
        for (a, b) in rows.iter().flatten().zip(r2.iter().flatten()) {
            assert!((a - b).abs() <= 1e-10 * a.abs().max(1e-300));
        }
        assert_eq!(export_matrix_csv(&[vec![0.0]], &["1".into()]), "1\n0\n");
    }
}
