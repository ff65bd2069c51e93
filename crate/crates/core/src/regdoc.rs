//! Regulation text parsing: identifiers, document trees, and tree statistics.
//!
//! Input is a plain-text regulation export with one clause per identifier
//! line (e.g. `164.502(a)(1) Permitted uses.`). The parser builds a tree
//! whose edges follow identifier containment: `164.502(a)` is the parent of
//! `164.502(a)(1)`, and every `part.section` id hangs off the synthetic root.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

/// Grammar for a full regulation identifier, e.g. `164.502(a)(1)(iv)`.
pub const ID_GRAMMAR: &str = r"[0-9]+\.[0-9]+(?:\([0-9A-Za-z]+\))*";

fn id_regex() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(ID_GRAMMAR).expect("id grammar compiles"))
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum RegdocError {
    #[error("malformed regulation id `{input}`: {reason}")]
    MalformedId { input: String, reason: String },
    #[error("no regulation identifiers found in input")]
    NoIdentifiersFound,
    #[error("duplicate identifier `{0}`")]
    DuplicateIdentifier(String),
    #[error("node `{0}` is not a leaf")]
    NotALeaf(String),
    #[error("unknown node `{0}`")]
    UnknownNode(String),
}

/// A structured regulation identifier: part, section, and paren segments.
///
/// Segments are case-normalized to lowercase, so `164.502(A)(1)(I)` and
/// `164.502(a)(1)(i)` canonicalize identically.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct RegulationId {
    part: u32,
    section: u32,
    segments: Vec<String>,
}

impl RegulationId {
    pub fn new(part: u32, section: u32, segments: Vec<String>) -> Result<Self, RegdocError> {
        if part == 0 || section == 0 {
            return Err(RegdocError::MalformedId {
                input: format!("{part}.{section}"),
                reason: "part and section must be positive".into(),
            });
        }
        let mut normalized = Vec::with_capacity(segments.len());
        for seg in segments {
            let seg = seg.to_lowercase();
            if seg.is_empty() || !seg.chars().all(|c| c.is_ascii_alphanumeric()) {
                return Err(RegdocError::MalformedId {
                    input: seg,
                    reason: "segment must be a nonempty alphanumeric token".into(),
                });
            }
            normalized.push(seg);
        }
        Ok(Self { part, section, segments: normalized })
    }

    pub fn part(&self) -> u32 {
        self.part
    }

    pub fn section(&self) -> u32 {
        self.section
    }

    pub fn segments(&self) -> &[String] {
        &self.segments
    }

    /// Parent id: one segment shorter, or `None` for a bare `part.section`.
    pub fn parent(&self) -> Option<RegulationId> {
        if self.segments.is_empty() {
            return None;
        }
        let mut segments = self.segments.clone();
        segments.pop();
        Some(Self { part: self.part, section: self.section, segments })
    }

    /// Child id extending this one by a single segment.
    pub fn child(&self, segment: &str) -> Result<RegulationId, RegdocError> {
        let mut segments = self.segments.clone();
        segments.push(segment.to_string());
        Self::new(self.part, self.section, segments)
    }

    /// Canonical rendering, e.g. `164.502(a)(1)(i)`.
    pub fn canonical(&self) -> String {
        self.to_string()
    }

    /// True iff `self` extends `other` by exactly one segment.
    pub fn is_child_of(&self, other: &RegulationId) -> bool {
        self.parent().as_ref() == Some(other)
    }
}

impl fmt::Display for RegulationId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{}", self.part, self.section)?;
        for seg in &self.segments {
            write!(f, "({seg})")?;
        }
        Ok(())
    }
}

impl FromStr for RegulationId {
    type Err = RegdocError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_regulation_id(s)
    }
}

impl Serialize for RegulationId {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.canonical())
    }
}

impl<'de> Deserialize<'de> for RegulationId {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        parse_regulation_id(&s).map_err(serde::de::Error::custom)
    }
}

/// Parse a regulation identifier, stripping surrounding `§` marks and
/// whitespace first. The remainder must match the id grammar exactly.
pub fn parse_regulation_id(s: &str) -> Result<RegulationId, RegdocError> {
    let trimmed = s.trim().trim_start_matches(['§', ' ', '\t']).trim();
    let malformed = |reason: &str| RegdocError::MalformedId {
        input: s.to_string(),
        reason: reason.to_string(),
    };
    if trimmed.is_empty() {
        return Err(malformed("empty identifier"));
    }
    let m = id_regex().find(trimmed).ok_or_else(|| malformed("no part.section prefix"))?;
    if m.start() != 0 || m.end() != trimmed.len() {
        return Err(malformed("identifier does not match the id grammar exactly"));
    }
    let (numeric, rest) = match trimmed.find('(') {
        Some(i) => (&trimmed[..i], &trimmed[i..]),
        None => (trimmed, ""),
    };
    let (part_str, section_str) = numeric
        .split_once('.')
        .ok_or_else(|| malformed("missing `.` between part and section"))?;
    let part: u32 = part_str.parse().map_err(|_| malformed("part is not a valid number"))?;
    let section: u32 =
        section_str.parse().map_err(|_| malformed("section is not a valid number"))?;
    let segments: Vec<String> = rest
        .split_terminator(')')
        .map(|chunk| chunk.trim_start_matches('(').to_string())
        .collect();
    RegulationId::new(part, section, segments).map_err(|e| match e {
        RegdocError::MalformedId { reason, .. } => {
            RegdocError::MalformedId { input: s.to_string(), reason }
        }
        other => other,
    })
}

/// All maximal id-grammar matches in `text`, in order of appearance.
/// Duplicates are preserved.
pub fn extract_references(text: &str) -> Vec<RegulationId> {
    id_regex()
        .find_iter(text)
        .filter_map(|m| parse_regulation_id(m.as_str()).ok())
        .collect()
}

/// One node of the document tree. The node's identifier is its map key in
/// [`DocumentTree::nodes`]: the canonical id string, or the root label.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RegulationNode {
    /// Clause text owned by this node; empty for pure containers.
    pub text: String,
    /// Child node keys in document order.
    pub children: Vec<String>,
    /// Identifiers referenced verbatim in `text`.
    pub references: Vec<RegulationId>,
    /// Parent node key; `None` only for the root.
    pub parent: Option<String>,
}

/// Counts over a parsed tree. The root participates in the counts: it is
/// internal when it has children and a leaf otherwise, which keeps the
/// identity `internal + leaf == edges + 1` exact on every tree.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct TreeStats {
    pub internal_count: usize,
    pub leaf_count: usize,
    pub edge_count: usize,
    pub cross_reference_count: usize,
}

/// Hierarchical regulation text keyed by canonical identifiers.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DocumentTree {
    pub root: String,
    pub nodes: BTreeMap<String, RegulationNode>,
    pub stats: TreeStats,
}

impl DocumentTree {
    /// An empty tree holding only the root label.
    pub fn new(root_label: &str) -> Self {
        let mut nodes = BTreeMap::new();
        nodes.insert(
            root_label.to_string(),
            RegulationNode {
                text: String::new(),
                children: Vec::new(),
                references: Vec::new(),
                parent: None,
            },
        );
        let mut tree = Self { root: root_label.to_string(), nodes, stats: TreeStats::default() };
        tree.stats = tree_stats(&tree);
        tree
    }

    pub fn node(&self, key: &str) -> Option<&RegulationNode> {
        self.nodes.get(key)
    }

    /// True iff the key names a node with no children.
    pub fn is_leaf(&self, key: &str) -> bool {
        self.nodes.get(key).is_some_and(|n| n.children.is_empty())
    }

    /// True iff the canonical form of `id` names a node.
    pub fn contains_id(&self, id: &RegulationId) -> bool {
        self.nodes.contains_key(&id.canonical())
    }

    /// Node keys in document order (pre-order, root first).
    pub fn document_order(&self) -> Vec<String> {
        let mut order = Vec::with_capacity(self.nodes.len());
        let mut stack = vec![self.root.clone()];
        while let Some(key) = stack.pop() {
            if let Some(node) = self.nodes.get(&key) {
                for child in node.children.iter().rev() {
                    stack.push(child.clone());
                }
            }
            order.push(key);
        }
        order
    }

    /// Leaf node keys in document order (excludes a childless root).
    pub fn leaves(&self) -> Vec<String> {
        self.document_order()
            .into_iter()
            .filter(|k| *k != self.root && self.is_leaf(k))
            .collect()
    }

    /// Check structural invariants: mutually consistent parent/child links,
    /// full reachability from the root, one-segment containment, and the
    /// edge-count identity.
    pub fn validate(&self) -> Result<(), String> {
        let root = self.nodes.get(&self.root).ok_or("root node missing from map")?;
        if root.parent.is_some() {
            return Err("root must not have a parent".into());
        }
        for (key, node) in &self.nodes {
            if *key != self.root {
                let parent_key =
                    node.parent.as_ref().ok_or(format!("node {key} has no parent"))?;
                let parent = self
                    .nodes
                    .get(parent_key)
                    .ok_or(format!("node {key} has unknown parent {parent_key}"))?;
                if !parent.children.contains(key) {
                    return Err(format!("parent {parent_key} does not list child {key}"));
                }
                let id = parse_regulation_id(key)
                    .map_err(|e| format!("non-root key {key} is not an id: {e}"))?;
                match id.parent() {
                    Some(pid) => {
                        if pid.canonical() != *parent_key {
                            return Err(format!(
                                "node {key} should hang under {} but has parent {parent_key}",
                                pid.canonical()
                            ));
                        }
                    }
                    None => {
                        if *parent_key != self.root {
                            return Err(format!("top-level node {key} must hang under the root"));
                        }
                    }
                }
            }
            for child in &node.children {
                let child_node = self
                    .nodes
                    .get(child)
                    .ok_or(format!("node {key} lists unknown child {child}"))?;
                if child_node.parent.as_deref() != Some(key) {
                    return Err(format!("child {child} does not point back at {key}"));
                }
            }
        }
        let reachable = self.document_order();
        if reachable.len() != self.nodes.len() {
            return Err("tree contains nodes unreachable from the root".into());
        }
        let stats = tree_stats(self);
        if stats.internal_count + stats.leaf_count != stats.edge_count + 1 {
            return Err("edge-count identity violated".into());
        }
        if stats != self.stats {
            return Err("stored stats disagree with recount".into());
        }
        Ok(())
    }
}

/// Parse a plain-text regulation export into a document tree.
///
/// Each clause line starts with an identifier (optionally prefixed by `§`);
/// lines that do not start with an identifier continue the previous clause.
/// Identifiers that only ever appear as prefixes of deeper identifiers get
/// synthesized as empty-text container nodes.
pub fn parse_document(text: &str, root_label: &str) -> Result<DocumentTree, RegdocError> {
    let mut tree = DocumentTree::new(root_label);
    let mut explicit: Vec<String> = Vec::new();
    let mut current: Option<String> = None;

    for line in text.lines() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let stripped = line.trim_start_matches(['§', ' ', '\t']);
        let leading = id_regex()
            .find(stripped)
            .filter(|m| m.start() == 0)
            .and_then(|m| parse_regulation_id(m.as_str()).ok().map(|id| (id, m.end())));
        match leading {
            Some((id, end)) => {
                let key = id.canonical();
                if explicit.contains(&key) {
                    return Err(RegdocError::DuplicateIdentifier(key));
                }
                ensure_node(&mut tree, &id);
                explicit.push(key.clone());
                let clause = stripped[end..].trim();
                let node = tree.nodes.get_mut(&key).expect("node just ensured");
                node.text = clause.to_string();
                current = Some(key);
            }
            None => {
                // Continuation of the previous clause; text before the
                // first identifier (headings, preamble) is dropped.
                if let Some(key) = &current {
                    let node = tree.nodes.get_mut(key).expect("current node exists");
                    if node.text.is_empty() {
                        node.text = stripped.to_string();
                    } else {
                        node.text.push(' ');
                        node.text.push_str(stripped);
                    }
                }
            }
        }
    }

    if explicit.is_empty() {
        return Err(RegdocError::NoIdentifiersFound);
    }

    let keys: Vec<String> = tree.nodes.keys().cloned().collect();
    for key in keys {
        let refs = extract_references(&tree.nodes[&key].text);
        tree.nodes.get_mut(&key).expect("key from map").references = refs;
    }
    tree.stats = tree_stats(&tree);
    Ok(tree)
}

fn ensure_node(tree: &mut DocumentTree, id: &RegulationId) {
    let key = id.canonical();
    if tree.nodes.contains_key(&key) {
        return;
    }
    let parent_key = match id.parent() {
        Some(pid) => {
            ensure_node(tree, &pid);
            pid.canonical()
        }
        None => tree.root.clone(),
    };
    tree.nodes.insert(
        key.clone(),
        RegulationNode {
            text: String::new(),
            children: Vec::new(),
            references: Vec::new(),
            parent: Some(parent_key.clone()),
        },
    );
    tree.nodes
        .get_mut(&parent_key)
        .expect("parent ensured above")
        .children
        .push(key);
}

/// Render a tree back to the plain-text clause format accepted by
/// [`parse_document`]. Parsing the result reproduces the tree exactly.
pub fn render_document(tree: &DocumentTree) -> String {
    let mut out = String::new();
    for key in tree.document_order() {
        if key == tree.root {
            continue;
        }
        let node = &tree.nodes[&key];
        out.push_str(&key);
        if !node.text.is_empty() {
            out.push(' ');
            out.push_str(&node.text);
        }
        out.push('\n');
    }
    out
}

/// Concatenate node texts on the root-to-leaf path, skipping empty texts.
pub fn full_specification(tree: &DocumentTree, leaf: &str) -> Result<String, RegdocError> {
    let node = tree.nodes.get(leaf).ok_or_else(|| RegdocError::UnknownNode(leaf.into()))?;
    if !node.children.is_empty() {
        return Err(RegdocError::NotALeaf(leaf.into()));
    }
    let mut path = vec![leaf.to_string()];
    let mut cursor = node.parent.clone();
    while let Some(key) = cursor {
        cursor = tree.nodes[&key].parent.clone();
        path.push(key);
    }
    path.reverse();
    let texts: Vec<&str> = path
        .iter()
        .map(|k| tree.nodes[k].text.as_str())
        .filter(|t| !t.is_empty())
        .collect();
    Ok(texts.join(" "))
}

/// Recount tree statistics from scratch.
pub fn tree_stats(tree: &DocumentTree) -> TreeStats {
    let mut stats = TreeStats::default();
    for node in tree.nodes.values() {
        if node.children.is_empty() {
            stats.leaf_count += 1;
        } else {
            stats.internal_count += 1;
        }
        stats.cross_reference_count += node.references.len();
    }
    stats.edge_count = tree.nodes.len().saturating_sub(1);
    stats
}
