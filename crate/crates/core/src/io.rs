//! Instance and solution documents.
//!
//! Two instance formats are supported: a JSON document holding a plain
//! Newick tree plus a taxon table, and annotated Newick where every leaf
//! label is followed by `[&a=..,b=..,c=..]` and a leading `[&budget=..]`
//! comment carries the budget. The grammar is documented in `docs/FORMAT.md`.

use std::collections::{BTreeMap, HashMap};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::baselines::ExactSolution;
use crate::instance::{Instance, InstanceMeta, Node, NodeId, PhyloTree, Taxon, ValidationError, Violation};
use crate::solver::NapxSolution;

/// Significant digits kept when writing real numbers.
pub const SIGNIFICANT_DIGITS: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Json,
    Newick,
}

impl Format {
    /// Guesses the format from a file name (`.json` or `.nwk`/`.newick`).
    pub fn from_path(path: &Path) -> Option<Format> {
        let name = path.file_name()?.to_str()?;
        if name.ends_with(".json") {
            Some(Format::Json)
        } else if name.ends_with(".nwk") || name.ends_with(".newick") {
            Some(Format::Newick)
        } else {
            None
        }
    }

    pub fn extension(&self) -> &'static str {
        match self {
            Format::Json => "nap.json",
            Format::Newick => "nap.nwk",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParseError {
    #[error("syntax error at line {line}, column {col}: {msg}")]
    Syntax { line: usize, col: usize, msg: String },
    #[error("{0}")]
    Document(String),
    #[error(transparent)]
    Invalid(#[from] ValidationError),
}

/// Rounds to [`SIGNIFICANT_DIGITS`] significant digits.
pub fn round_sig(x: f64) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    format!("{:.*e}", SIGNIFICANT_DIGITS - 1, x).parse().unwrap_or(x)
}

/// Shortest decimal text of `round_sig(x)`.
pub fn format_real(x: f64) -> String {
    let r = round_sig(x);
    if r == 0.0 {
        "0".to_string()
    } else {
        format!("{r}")
    }
}

// ---------------------------------------------------------------------------
// Newick scanning

struct Cursor<'a> {
    text: &'a str,
    bytes: &'a [u8],
    pos: usize,
}

/// A `[&...]` comment and where it started.
struct Annotation {
    body: String,
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn new(text: &'a str) -> Self {
        Self { text, bytes: text.as_bytes(), pos: 0 }
    }

    fn peek(&self) -> Option<u8> {
        self.bytes.get(self.pos).copied()
    }

    fn error(&self, pos: usize, msg: impl Into<String>) -> ParseError {
        let (line, col) = line_col(self.text, pos);
        ParseError::Syntax { line, col, msg: msg.into() }
    }

    /// Skips whitespace and comments, returning any `[&...]` annotations.
    fn skip_trivia(&mut self) -> Result<Vec<Annotation>, ParseError> {
        let mut found = Vec::new();
        loop {
            match self.peek() {
                Some(c) if c.is_ascii_whitespace() => self.pos += 1,
                Some(b'[') => {
                    let start = self.pos;
                    let close = self.text[start..].find(']').ok_or_else(|| self.error(start, "unterminated comment"))?;
                    let body = &self.text[start + 1..start + close];
                    if let Some(rest) = body.strip_prefix('&') {
                        found.push(Annotation { body: rest.to_string(), pos: start });
                    }
                    self.pos = start + close + 1;
                }
                _ => return Ok(found),
            }
        }
    }

    fn label(&mut self) -> Result<Option<String>, ParseError> {
        match self.peek() {
            Some(q @ (b'\'' | b'"')) => {
                let start = self.pos;
                self.pos += 1;
                let mut out = String::new();
                loop {
                    let rest = &self.text[self.pos..];
                    let Some(ch) = rest.chars().next() else {
                        return Err(self.error(start, "unterminated quoted label"));
                    };
                    self.pos += ch.len_utf8();
                    if ch as u32 == q as u32 {
                        // '' inside single quotes is an escaped quote
                        if q == b'\'' && self.peek() == Some(b'\'') {
                            self.pos += 1;
                            out.push('\'');
                            continue;
                        }
                        return Ok(Some(out));
                    }
                    out.push(ch);
                }
            }
            _ => {
                let start = self.pos;
                while let Some(ch) = self.text[self.pos..].chars().next() {
                    if ch.is_whitespace() || "()[]':;,\"".contains(ch) {
                        break;
                    }
                    self.pos += ch.len_utf8();
                }
                Ok((self.pos > start).then(|| self.text[start..self.pos].to_string()))
            }
        }
    }

    fn number(&mut self) -> Result<f64, ParseError> {
        let start = self.pos;
        while let Some(c) = self.peek() {
            if c.is_ascii_digit() || matches!(c, b'.' | b'e' | b'E' | b'+' | b'-') {
                self.pos += 1;
            } else {
                break;
            }
        }
        let token = &self.text[start..self.pos];
        token
            .parse::<f64>()
            .ok()
            .filter(|x| x.is_finite())
            .ok_or_else(|| self.error(start, format!("expected a branch length, found '{token}'")))
    }
}

fn line_col(text: &str, pos: usize) -> (usize, usize) {
    let before = &text[..pos.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let col = before.rsplit('\n').next().map_or(0, |s| s.chars().count()) + 1;
    (line, col)
}

/// A parsed tree before taxa are bound to leaves.
struct RawTree {
    nodes: Vec<Node>,
    /// Leaf node, label, annotation and label position, in left-to-right order.
    leaves: Vec<(NodeId, String, Option<Annotation>, usize)>,
}

/// Parses one Newick tree. Leaf annotations are kept only when `annotated`.
fn parse_tree(cur: &mut Cursor, annotated: bool) -> Result<RawTree, ParseError> {
    let mut nodes: Vec<Node> = Vec::new();
    let mut leaves = Vec::new();
    let mut open: Vec<NodeId> = Vec::new();
    let new_node = |nodes: &mut Vec<Node>, open: &[NodeId]| {
        let id = nodes.len();
        nodes.push(Node { parent: open.last().copied(), children: Vec::new(), length: 0.0, taxon: None });
        if let Some(&p) = open.last() {
            nodes[p].children.push(id);
        }
        id
    };
    loop {
        // node start
        cur.skip_trivia()?;
        let current = if cur.peek() == Some(b'(') {
            cur.pos += 1;
            let id = new_node(&mut nodes, &open);
            open.push(id);
            continue;
        } else {
            let at = cur.pos;
            let Some(label) = cur.label()? else {
                return Err(match cur.peek() {
                    None => cur.error(at, "unexpected end of input"),
                    Some(c) => cur.error(at, format!("expected a leaf label, found '{}'", c as char)),
                });
            };
            let id = new_node(&mut nodes, &open);
            let mut notes = cur.skip_trivia()?;
            if !annotated {
                if let Some(note) = notes.first() {
                    return Err(cur.error(note.pos, "leaf annotations are not allowed in JSON documents"));
                }
            }
            if notes.len() > 1 {
                return Err(cur.error(notes[1].pos, format!("leaf '{label}' has several annotations")));
            }
            leaves.push((id, label, notes.pop(), at));
            id
        };
        let mut current = current;
        // node end: optional length, then ',' / ')' / end of tree
        loop {
            cur.skip_trivia()?;
            if cur.peek() == Some(b':') {
                cur.pos += 1;
                cur.skip_trivia()?;
                nodes[current].length = cur.number()?;
                cur.skip_trivia()?;
            }
            if open.is_empty() {
                return Ok(RawTree { nodes, leaves });
            }
            match cur.peek() {
                Some(b',') => {
                    cur.pos += 1;
                    break;
                }
                Some(b')') => {
                    cur.pos += 1;
                    current = open.pop().expect("checked non-empty");
                    // interior labels are ignored
                    cur.skip_trivia()?;
                    cur.label()?;
                }
                Some(c) => return Err(cur.error(cur.pos, format!("expected ',' or ')', found '{}'", c as char))),
                None => return Err(cur.error(cur.pos, "unexpected end of input: unbalanced parentheses")),
            }
        }
    }
}

fn expect_end(cur: &mut Cursor) -> Result<(), ParseError> {
    cur.skip_trivia()?;
    if cur.peek() != Some(b';') {
        return Err(cur.error(cur.pos, "expected ';' after the tree"));
    }
    cur.pos += 1;
    cur.skip_trivia()?;
    if cur.pos < cur.bytes.len() {
        return Err(cur.error(cur.pos, "unexpected text after ';'"));
    }
    Ok(())
}

/// Parses a bare Newick tree whose leaves carry no attributes. Returns the
/// tree and its leaf labels in left-to-right order.
pub fn parse_newick(text: &str) -> Result<(PhyloTree, Vec<String>), ParseError> {
    let mut cur = Cursor::new(text);
    let raw = parse_tree(&mut cur, false)?;
    expect_end(&mut cur)?;
    let mut nodes = raw.nodes;
    let mut labels = Vec::with_capacity(raw.leaves.len());
    for (i, (id, label, _, _)) in raw.leaves.into_iter().enumerate() {
        nodes[id].taxon = Some(i);
        labels.push(label);
    }
    Ok((PhyloTree::from_nodes(nodes, 0)?, labels))
}

// ---------------------------------------------------------------------------
// Annotation bodies

fn parse_pairs(note: &Annotation, text: &str) -> Result<Vec<(String, String)>, ParseError> {
    let err = |msg: String| {
        let (line, col) = line_col(text, note.pos);
        ParseError::Syntax { line, col, msg }
    };
    let mut out = Vec::new();
    let body = note.body.as_str();
    let mut rest = body.trim_start();
    while !rest.is_empty() {
        let eq = rest.find('=').ok_or_else(|| err(format!("expected key=value in annotation '[&{body}]'")))?;
        let key = rest[..eq].trim().to_string();
        rest = rest[eq + 1..].trim_start();
        let value;
        if let Some(stripped) = rest.strip_prefix('"') {
            let mut v = String::new();
            let mut chars = stripped.char_indices();
            let mut end = None;
            while let Some((i, ch)) = chars.next() {
                match ch {
                    '\\' => {
                        if let Some((_, esc)) = chars.next() {
                            v.push(esc);
                        }
                    }
                    '"' => {
                        end = Some(i + 1);
                        break;
                    }
                    _ => v.push(ch),
                }
            }
            let end = end.ok_or_else(|| err("unterminated string in annotation".into()))?;
            value = v;
            rest = stripped[end..].trim_start();
        } else {
            let stop = rest.find(',').unwrap_or(rest.len());
            value = rest[..stop].trim().to_string();
            rest = &rest[stop..];
        }
        out.push((key, value));
        rest = rest.trim_start();
        if let Some(r) = rest.strip_prefix(',') {
            rest = r.trim_start();
        } else if !rest.is_empty() {
            return Err(err(format!("expected ',' in annotation '[&{body}]'")));
        }
    }
    Ok(out)
}

fn parse_cost(taxon: &str, value: &str) -> Result<u64, Violation> {
    value
        .parse::<u64>()
        .ok()
        .or_else(|| value.parse::<f64>().ok().filter(|x| *x >= 0.0 && x.fract() == 0.0 && *x < u64::MAX as f64).map(|x| x as u64))
        .ok_or_else(|| Violation::NonIntegerCost { taxon: taxon.to_string(), value: value.to_string() })
}

fn parse_budget(value: &str) -> Result<u64, ParseError> {
    parse_cost("", value).map_err(|_| ParseError::Document(format!("budget must be a non-negative integer, got '{value}'")))
}

// ---------------------------------------------------------------------------
// Instances

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TaxonDoc {
    a: f64,
    b: f64,
    c: serde_json::Number,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct InstanceDocument {
    budget: serde_json::Number,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    name: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    seed: Option<u64>,
    newick: String,
    taxa: BTreeMap<String, TaxonDoc>,
}

pub fn parse_instance(text: &str, format: Format) -> Result<Instance, ParseError> {
    match format {
        Format::Json => parse_json(text),
        Format::Newick => parse_annotated(text),
    }
}

/// Binds leaves to taxa (in leaf order); extra taxa are appended so that
/// validation reports them.
fn assemble(
    raw: RawTree,
    mut attrs: HashMap<String, (f64, f64, u64)>,
    extra_order: Vec<String>,
    budget: u64,
    mut violations: Vec<Violation>,
    meta: InstanceMeta,
) -> Result<Instance, ParseError> {
    let mut nodes = raw.nodes;
    let mut taxa = Vec::new();
    let mut seen = HashMap::new();
    for (id, label, _, _) in raw.leaves {
        if seen.insert(label.clone(), id).is_some() {
            violations.push(Violation::Structure(format!("duplicate leaf label '{label}'")));
            continue;
        }
        match attrs.remove(&label) {
            Some((a, b, c)) => {
                nodes[id].taxon = Some(taxa.len());
                taxa.push(Taxon::new(label, a, b, c));
            }
            None => violations.push(Violation::Structure(format!("leaf '{label}' is missing attributes a, b, c"))),
        }
    }
    for id in extra_order {
        if let Some((a, b, c)) = attrs.remove(&id) {
            taxa.push(Taxon::new(id, a, b, c));
        }
    }
    if violations.iter().any(|v| matches!(v, Violation::Structure(_))) {
        // Leaves without taxa would only repeat the same problems.
        for t in taxa.iter().filter(|t| !seen.contains_key(&t.id)) {
            violations.push(Violation::TaxonNotInTree(t.id.clone()));
        }
        return Err(ValidationError { violations }.into());
    }
    let tree = PhyloTree::from_nodes(nodes, 0)?;
    Ok(Instance::with_extra_violations(tree, taxa, budget, violations)?.with_meta(meta))
}

fn parse_json(text: &str) -> Result<Instance, ParseError> {
    let doc: InstanceDocument = serde_json::from_str(text).map_err(|e| ParseError::Syntax {
        line: e.line(),
        col: e.column(),
        msg: e.to_string(),
    })?;
    let budget = parse_budget(&doc.budget.to_string())?;
    let mut cur = Cursor::new(&doc.newick);
    let raw = parse_tree(&mut cur, false).map_err(|e| in_field("newick", e))?;
    expect_end(&mut cur).map_err(|e| in_field("newick", e))?;
    let mut violations = Vec::new();
    let mut attrs = HashMap::new();
    for (id, t) in &doc.taxa {
        let c = parse_cost(id, &t.c.to_string()).unwrap_or_else(|v| {
            violations.push(v);
            0
        });
        attrs.insert(id.clone(), (t.a, t.b, c));
    }
    let extra = doc.taxa.keys().cloned().collect();
    assemble(raw, attrs, extra, budget, violations, InstanceMeta { name: doc.name, seed: doc.seed })
}

fn in_field(field: &str, e: ParseError) -> ParseError {
    match e {
        ParseError::Syntax { line, col, msg } => ParseError::Syntax { line, col, msg: format!("in '{field}': {msg}") },
        other => other,
    }
}

fn parse_annotated(text: &str) -> Result<Instance, ParseError> {
    let mut cur = Cursor::new(text);
    let header = cur.skip_trivia()?;
    let mut budget = None;
    let mut meta = InstanceMeta::default();
    for note in &header {
        for (key, value) in parse_pairs(note, text)? {
            match key.as_str() {
                "budget" => budget = Some(parse_budget(&value)?),
                "name" => meta.name = Some(value),
                "seed" => {
                    meta.seed = Some(value.parse().map_err(|_| ParseError::Document(format!("seed must be an unsigned integer, got '{value}'")))?)
                }
                other => return Err(cur.error(note.pos, format!("unknown header key '{other}'"))),
            }
        }
    }
    let budget = budget.ok_or_else(|| ParseError::Document("missing budget: expected a leading [&budget=...] comment".into()))?;
    let mut raw = parse_tree(&mut cur, true)?;
    expect_end(&mut cur)?;
    let mut attrs = HashMap::new();
    let mut violations = Vec::new();
    for (_, label, note, at) in raw.leaves.iter_mut() {
        let Some(note) = note.take() else {
            continue;
        };
        let (mut a, mut b, mut c) = (None, None, None);
        for (key, value) in parse_pairs(&note, text)? {
            let real = || value.parse::<f64>().map_err(|_| cur.error(note.pos, format!("leaf '{label}': '{value}' is not a number")));
            match key.as_str() {
                "a" => a = Some(real()?),
                "b" => b = Some(real()?),
                "c" => match parse_cost(label, &value) {
                    Ok(v) => c = Some(v),
                    Err(v) => {
                        violations.push(v);
                        c = Some(0);
                    }
                },
                other => return Err(cur.error(note.pos, format!("leaf '{label}': unknown attribute '{other}'"))),
            }
        }
        match (a, b, c) {
            (Some(a), Some(b), Some(c)) => {
                attrs.entry(label.clone()).or_insert((a, b, c));
            }
            _ => return Err(cur.error(*at, format!("leaf '{label}' is missing one of the attributes a, b, c"))),
        }
    }
    assemble(raw, attrs, Vec::new(), budget, violations, meta)
}

/// Leaf labels that need quoting are written in single quotes.
fn write_label(out: &mut String, label: &str) {
    let plain = !label.is_empty() && !label.chars().any(|ch| ch.is_whitespace() || "()[]':;,\"".contains(ch));
    if plain {
        out.push_str(label);
    } else {
        out.push('\'');
        out.push_str(&label.replace('\'', "''"));
        out.push('\'');
    }
}

/// Canonical Newick text: children ordered by their smallest leaf label.
fn write_tree(instance: &Instance, annotate: bool) -> String {
    let tree = instance.tree();
    let taxa = instance.taxa();
    // smallest leaf label below every node
    let mut key: Vec<Option<&str>> = vec![None; tree.len()];
    for id in tree.postorder() {
        let node = tree.node(id);
        key[id] = match node.taxon {
            Some(t) => Some(taxa[t].id.as_str()),
            None => node.children.iter().filter_map(|&c| key[c]).min(),
        };
    }
    let mut out = String::new();
    // (node, child cursor) stack
    let mut stack: Vec<(NodeId, usize)> = vec![(tree.root(), 0)];
    let mut sorted: HashMap<NodeId, Vec<NodeId>> = HashMap::new();
    while let Some((id, next)) = stack.pop() {
        let node = tree.node(id);
        if let Some(t) = node.taxon {
            let taxon = &taxa[t];
            write_label(&mut out, &taxon.id);
            if annotate {
                out.push_str(&format!("[&a={},b={},c={}]", format_real(taxon.a), format_real(taxon.b), taxon.c));
            }
        } else {
            let kids = sorted.entry(id).or_insert_with(|| {
                let mut k = node.children.clone();
                k.sort_by(|&x, &y| key[x].cmp(&key[y]));
                k
            });
            if next < kids.len() {
                out.push(if next == 0 { '(' } else { ',' });
                let child = kids[next];
                stack.push((id, next + 1));
                stack.push((child, 0));
                continue;
            }
            out.push(')');
        }
        if id != tree.root() {
            out.push(':');
            out.push_str(&format_real(node.length));
        } else if node.length != 0.0 {
            out.push(':');
            out.push_str(&format_real(node.length));
        }
    }
    out.push(';');
    out
}

fn quote_value(value: &str) -> String {
    format!("\"{}\"", value.replace('\\', "\\\\").replace('"', "\\\""))
}

/// Canonical, newline-terminated text of an instance.
pub fn write_instance(instance: &Instance, format: Format) -> String {
    match format {
        Format::Json => {
            let taxa = instance
                .taxa()
                .iter()
                .map(|t| (t.id.clone(), TaxonDoc { a: round_sig(t.a), b: round_sig(t.b), c: t.c.into() }))
                .collect();
            let doc = InstanceDocument {
                budget: instance.budget().into(),
                name: instance.meta.name.clone(),
                seed: instance.meta.seed,
                newick: write_tree(instance, false),
                taxa,
            };
            let mut s = serde_json::to_string_pretty(&doc).expect("instance documents serialize");
            s.push('\n');
            s
        }
        Format::Newick => {
            let mut header = format!("[&budget={}", instance.budget());
            if let Some(name) = &instance.meta.name {
                header.push_str(&format!(",name={}", quote_value(name)));
            }
            if let Some(seed) = instance.meta.seed {
                header.push_str(&format!(",seed={seed}"));
            }
            header.push(']');
            format!("{header}\n{}\n", write_tree(instance, true))
        }
    }
}

/// Structural equality: same budget and metadata, same taxa by id (values
/// within `tol`), and the same tree up to child order (lengths within `tol`).
pub fn same_instance(x: &Instance, y: &Instance, tol: f64) -> bool {
    if x.budget() != y.budget() || x.meta != y.meta || x.num_taxa() != y.num_taxa() {
        return false;
    }
    for t in x.taxa() {
        let Some(j) = y.taxon_index(&t.id) else {
            return false;
        };
        let u = &y.taxa()[j];
        if (t.a - u.a).abs() > tol || (t.b - u.b).abs() > tol || t.c != u.c {
            return false;
        }
    }
    let (sx, sy) = (Shape::of(x), Shape::of(y));
    sx.matches(&sy, tol)
}

/// Tree with children sorted by their smallest leaf label.
enum Shape {
    Leaf(String, f64),
    Inner(f64, Vec<(String, Shape)>),
}

impl Shape {
    fn of(instance: &Instance) -> Shape {
        let tree = instance.tree();
        let mut built: Vec<Option<(String, Shape)>> = (0..tree.len()).map(|_| None).collect();
        for id in tree.postorder() {
            let node = tree.node(id);
            built[id] = Some(match node.taxon {
                Some(t) => {
                    let label = instance.taxa()[t].id.clone();
                    (label.clone(), Shape::Leaf(label, node.length))
                }
                None => {
                    let mut kids: Vec<(String, Shape)> = node.children.iter().map(|&c| built[c].take().expect("postorder")).collect();
                    kids.sort_by(|a, b| a.0.cmp(&b.0));
                    (kids[0].0.clone(), Shape::Inner(node.length, kids))
                }
            });
        }
        built[tree.root()].take().expect("root built").1
    }

    fn matches(&self, other: &Shape, tol: f64) -> bool {
        match (self, other) {
            (Shape::Leaf(a, x), Shape::Leaf(b, y)) => a == b && (x - y).abs() <= tol,
            (Shape::Inner(x, a), Shape::Inner(y, b)) => {
                (x - y).abs() <= tol && a.len() == b.len() && a.iter().zip(b).all(|(p, q)| p.0 == q.0 && p.1.matches(&q.1, tol))
            }
            _ => false,
        }
    }
}

// ---------------------------------------------------------------------------
// Solutions

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SolverKind {
    Napx,
    Exact,
    Pg,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamsBlock {
    pub epsilon: f64,
    pub alpha: f64,
    pub p_min: f64,
    pub t: usize,
    pub k: u32,
    pub h: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleBlock {
    pub score: f64,
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolutionDocument {
    pub solver: SolverKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub instance: Option<String>,
    /// Expected PD of the selected set.
    pub score: f64,
    /// Value read from the DP table, when it differs from `score`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reported_score: Option<f64>,
    pub selected: Vec<String>,
    pub total_cost: u64,
    pub budget: u64,
    /// Cost paid for every selected taxon.
    pub allocation: BTreeMap<String, u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub params: Option<ParamsBlock>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub oracle: Option<OracleBlock>,
}

impl SolutionDocument {
    fn base(instance: &Instance, solver: SolverKind, selected: &[usize], score: f64) -> Self {
        let allocation: BTreeMap<String, u64> = selected.iter().map(|&i| (instance.taxa()[i].id.clone(), instance.taxa()[i].c)).collect();
        Self {
            solver,
            instance: instance.meta.name.clone(),
            score,
            reported_score: None,
            selected: allocation.keys().cloned().collect(),
            total_cost: allocation.values().sum(),
            budget: instance.budget(),
            allocation,
            params: None,
            oracle: None,
        }
    }

    pub fn from_napx(instance: &Instance, sol: &NapxSolution) -> Self {
        let mut doc = Self::base(instance, SolverKind::Napx, &sol.selected, sol.score());
        doc.reported_score = Some(sol.reported_score);
        doc.params = sol.params.as_ref().map(|d| ParamsBlock {
            epsilon: d.epsilon().unwrap_or(f64::NAN),
            alpha: d.alpha(),
            p_min: d.p_min(),
            t: d.t(),
            k: d.k(),
            h: sol.height,
        });
        doc
    }

    pub fn from_exact(instance: &Instance, sol: &ExactSolution, solver: SolverKind) -> Self {
        Self::base(instance, solver, &sol.selected, sol.score)
    }

    pub fn with_oracle(mut self, oracle_score: f64) -> Self {
        let ratio = if oracle_score > 0.0 { self.score / oracle_score } else { 1.0 };
        self.oracle = Some(OracleBlock { score: oracle_score, ratio });
        self
    }
}

/// Pretty JSON, newline-terminated.
pub fn write_solution(doc: &SolutionDocument) -> String {
    let mut s = serde_json::to_string_pretty(doc).expect("solution documents serialize");
    s.push('\n');
    s
}

pub fn parse_solution(text: &str) -> Result<SolutionDocument, ParseError> {
    serde_json::from_str(text).map_err(|e| ParseError::Syntax { line: e.line(), col: e.column(), msg: e.to_string() })
}
