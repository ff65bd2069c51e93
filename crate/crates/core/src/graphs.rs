//! Role and attribute subsumption graphs.
//!
//! Both graphs store directed child-to-parent edges carrying a single
//! relation: the child is subsumed by the parent. The role graph is built by
//! chasing taxonomy hypernyms up to the role root and by folding in
//! regulation-defined roles; the attribute graph ingests pre-annotated
//! ontology records.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use serde::{Deserialize, Serialize};

use crate::embedding::{cosine, EmbedError, EmbeddingProvider, SimilarityError};

/// Synset label every resolvable role chains up to.
pub const ROLE_ROOT: &str = "person.n.01";

#[derive(Debug, Clone, thiserror::Error)]
pub enum GraphError {
    #[error("taxonomy provider returned a cycle through `{0}`")]
    CyclicTaxonomy(String),
    #[error("ontology records contain a cycle through `{0}`")]
    CycleDetected(String),
    #[error("graph has no vertices")]
    EmptyGraph,
    #[error("invalid record: {0}")]
    InvalidRecord(String),
    #[error(transparent)]
    Embed(#[from] EmbedError),
    #[error(transparent)]
    Similarity(#[from] SimilarityError),
}

/// Taxonomy backend (e.g. WordNet-derived data) behind a narrow interface:
/// surface-to-label lookup and one-step hypernym expansion.
pub trait TaxonomyProvider {
    /// Parent labels of a taxonomy label; empty when the label tops out.
    fn hypernyms(&self, label: &str) -> Vec<String>;
    /// Candidate labels for a surface string, best sense first.
    fn lookup(&self, surface: &str) -> Vec<String>;
}

/// Taxonomy loaded from a line-delimited `child<TAB>parent` fixture file.
#[derive(Debug, Clone, Default)]
pub struct FixtureTaxonomy {
    parents: BTreeMap<String, Vec<String>>,
    labels: BTreeSet<String>,
}

impl FixtureTaxonomy {
    pub fn from_tsv(text: &str) -> Result<Self, GraphError> {
        let mut tax = Self::default();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (child, parent) = line.split_once('\t').ok_or_else(|| {
                GraphError::InvalidRecord(format!(
                    "taxonomy line {}: expected `child<TAB>parent`",
                    lineno + 1
                ))
            })?;
            tax.add(child.trim(), parent.trim());
        }
        Ok(tax)
    }

    pub fn add(&mut self, child: &str, parent: &str) {
        let child = child.to_lowercase();
        let parent = parent.to_lowercase();
        self.labels.insert(child.clone());
        self.labels.insert(parent.clone());
        let parents = self.parents.entry(child).or_default();
        if !parents.contains(&parent) {
            parents.push(parent);
        }
    }
}

impl TaxonomyProvider for FixtureTaxonomy {
    fn hypernyms(&self, label: &str) -> Vec<String> {
        self.parents.get(&label.to_lowercase()).cloned().unwrap_or_default()
    }

    fn lookup(&self, surface: &str) -> Vec<String> {
        let key = surface.to_lowercase();
        if self.labels.contains(&key) {
            vec![key]
        } else {
            Vec::new()
        }
    }
}

/// Subsumption graph over role labels rooted at [`ROLE_ROOT`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoleGraph {
    pub root: String,
    pub vertices: BTreeSet<String>,
    /// Child label to its parent labels (child is subsumed by each parent).
    pub edges: BTreeMap<String, BTreeSet<String>>,
    /// Vertices with no parent path to the root; retained for exact matching.
    pub unresolved: BTreeSet<String>,
    /// Build diagnostics, e.g. alternative taxonomy senses that were skipped.
    pub notes: Vec<String>,
}

impl Default for RoleGraph {
    fn default() -> Self {
        Self {
            root: ROLE_ROOT.to_string(),
            vertices: BTreeSet::new(),
            edges: BTreeMap::new(),
            unresolved: BTreeSet::new(),
            notes: Vec::new(),
        }
    }
}

impl RoleGraph {
    pub fn edge_count(&self) -> usize {
        self.edges.values().map(BTreeSet::len).sum()
    }

    pub fn contains(&self, label: &str) -> bool {
        self.vertices.contains(&label.to_lowercase())
    }

    /// Reflexive subsumption: true iff `parent` is reachable from `child`
    /// by following child-to-parent edges.
    pub fn is_subsumed_by(&self, child: &str, parent: &str) -> bool {
        reachable_up(&self.edges, &child.to_lowercase(), &parent.to_lowercase())
    }
}

/// Subsumption graph over private-attribute labels.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct AttributeGraph {
    pub vertices: BTreeSet<String>,
    pub edges: BTreeMap<String, BTreeSet<String>>,
}

impl AttributeGraph {
    pub fn edge_count(&self) -> usize {
        self.edges.values().map(BTreeSet::len).sum()
    }

    pub fn is_subsumed_by(&self, child: &str, parent: &str) -> bool {
        reachable_up(&self.edges, &child.to_lowercase(), &parent.to_lowercase())
    }
}

fn reachable_up(edges: &BTreeMap<String, BTreeSet<String>>, from: &str, to: &str) -> bool {
    if from == to {
        return true;
    }
    let mut seen = BTreeSet::new();
    let mut queue = VecDeque::from([from.to_string()]);
    while let Some(current) = queue.pop_front() {
        if let Some(parents) = edges.get(&current) {
            for parent in parents {
                if parent == to {
                    return true;
                }
                if seen.insert(parent.clone()) {
                    queue.push_back(parent.clone());
                }
            }
        }
    }
    false
}

/// Build the role graph: resolve each role surface through the taxonomy,
/// recursively append hypernyms until the role root, then fold in
/// regulation-defined roles as parents of their member roles. Roles the
/// taxonomy cannot chain to the root are kept and flagged unresolved.
pub fn build_role_graph(
    roles: &[String],
    tax: &dyn TaxonomyProvider,
    defined_roles: &BTreeMap<String, Vec<String>>,
) -> Result<RoleGraph, GraphError> {
    let mut graph = RoleGraph::default();
    graph.vertices.insert(graph.root.clone());

    for role in roles {
        let surface = role.trim().to_lowercase();
        if surface.is_empty() {
            continue;
        }
        resolve_surface(&mut graph, &surface, tax)?;
    }

    for (name, members) in defined_roles {
        let name = name.trim().to_lowercase();
        let known: Vec<String> = members
            .iter()
            .map(|m| m.trim().to_lowercase())
            .filter(|m| graph.vertices.contains(m))
            .collect();
        if known.is_empty() {
            graph.notes.push(format!("defined role `{name}` has no members in the graph"));
            continue;
        }
        graph.vertices.insert(name.clone());
        for member in known {
            graph.edges.entry(member).or_default().insert(name.clone());
        }
        // The defined role itself may still be a taxonomy term.
        resolve_surface(&mut graph, &name, tax)?;
    }

    let rooted = root_reaching(&graph);
    graph.unresolved =
        graph.vertices.iter().filter(|v| !rooted.contains(*v)).cloned().collect();
    Ok(graph)
}

fn resolve_surface(
    graph: &mut RoleGraph,
    surface: &str,
    tax: &dyn TaxonomyProvider,
) -> Result<(), GraphError> {
    let senses = tax.lookup(surface);
    let label = match senses.first() {
        Some(label) => label.to_lowercase(),
        None => {
            graph.vertices.insert(surface.to_string());
            return Ok(());
        }
    };
    if senses.len() > 1 {
        graph.notes.push(format!(
            "surface `{surface}`: took sense `{label}`, skipped {}",
            senses[1..].join(", ")
        ));
    }
    if label != surface {
        // Keep the surface itself queryable under its resolved label.
        graph.vertices.insert(surface.to_string());
        graph.edges.entry(surface.to_string()).or_default().insert(label.clone());
    }
    let mut path = BTreeSet::new();
    expand_hypernyms(graph, &label, tax, &mut path)
}

fn expand_hypernyms(
    graph: &mut RoleGraph,
    label: &str,
    tax: &dyn TaxonomyProvider,
    path: &mut BTreeSet<String>,
) -> Result<(), GraphError> {
    graph.vertices.insert(label.to_string());
    if label == graph.root {
        return Ok(());
    }
    if !path.insert(label.to_string()) {
        return Err(GraphError::CyclicTaxonomy(label.to_string()));
    }
    for parent in tax.hypernyms(label) {
        let parent = parent.to_lowercase();
        if path.contains(&parent) {
            return Err(GraphError::CyclicTaxonomy(parent));
        }
        graph.edges.entry(label.to_string()).or_default().insert(parent.clone());
        expand_hypernyms(graph, &parent, tax, path)?;
    }
    path.remove(label);
    Ok(())
}

fn root_reaching(graph: &RoleGraph) -> BTreeSet<String> {
    // Walk downward from the root over reversed edges.
    let mut children: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
    for (child, parents) in &graph.edges {
        for parent in parents {
            children.entry(parent).or_default().push(child);
        }
    }
    let mut reached = BTreeSet::from([graph.root.clone()]);
    let mut queue = VecDeque::from([graph.root.as_str()]);
    while let Some(current) = queue.pop_front() {
        if let Some(kids) = children.get(current) {
            for kid in kids {
                if reached.insert((*kid).to_string()) {
                    queue.push_back(kid);
                }
            }
        }
    }
    reached
}

/// Build the attribute graph from `(child, parent)` inclusion records.
/// Records are deduplicated; a cycle is an error.
pub fn ingest_attribute_ontology(
    records: &[(String, String)],
) -> Result<AttributeGraph, GraphError> {
    let mut graph = AttributeGraph::default();
    for (child, parent) in records {
        let child = child.trim().to_lowercase();
        let parent = parent.trim().to_lowercase();
        if child.is_empty() || parent.is_empty() {
            return Err(GraphError::InvalidRecord("empty attribute label".into()));
        }
        graph.vertices.insert(child.clone());
        graph.vertices.insert(parent.clone());
        graph.edges.entry(child).or_default().insert(parent);
    }
    if let Some(node) = find_cycle(&graph.edges) {
        return Err(GraphError::CycleDetected(node));
    }
    Ok(graph)
}

fn find_cycle(edges: &BTreeMap<String, BTreeSet<String>>) -> Option<String> {
    #[derive(Clone, Copy, PartialEq)]
    enum Mark {
        Visiting,
        Done,
    }
    fn visit(
        node: &str,
        edges: &BTreeMap<String, BTreeSet<String>>,
        marks: &mut BTreeMap<String, Mark>,
    ) -> Option<String> {
        match marks.get(node) {
            Some(Mark::Done) => return None,
            Some(Mark::Visiting) => return Some(node.to_string()),
            None => {}
        }
        marks.insert(node.to_string(), Mark::Visiting);
        if let Some(parents) = edges.get(node) {
            for parent in parents {
                if let Some(cycle) = visit(parent, edges, marks) {
                    return Some(cycle);
                }
            }
        }
        marks.insert(node.to_string(), Mark::Done);
        None
    }
    let mut marks = BTreeMap::new();
    for node in edges.keys() {
        if let Some(cycle) = visit(node, edges, &mut marks) {
            return Some(cycle);
        }
    }
    None
}

/// Ontology ingestion file: `child<TAB>parent<TAB>kind` with kind either
/// `class-class` or `class-individual`.
pub fn parse_ontology_tsv(text: &str) -> Result<Vec<(String, String)>, GraphError> {
    let mut records = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 3 {
            return Err(GraphError::InvalidRecord(format!(
                "ontology line {}: expected `child<TAB>parent<TAB>kind`",
                lineno + 1
            )));
        }
        match fields[2].trim() {
            "class-class" | "class-individual" => {}
            other => {
                return Err(GraphError::InvalidRecord(format!(
                    "ontology line {}: unknown kind `{other}`",
                    lineno + 1
                )))
            }
        }
        records.push((fields[0].trim().to_string(), fields[1].trim().to_string()));
    }
    Ok(records)
}

/// Defined-roles file: `name<TAB>member`, one member per line.
pub fn parse_defined_roles_tsv(text: &str) -> Result<BTreeMap<String, Vec<String>>, GraphError> {
    let mut map: BTreeMap<String, Vec<String>> = BTreeMap::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (name, member) = line.split_once('\t').ok_or_else(|| {
            GraphError::InvalidRecord(format!(
                "defined-roles line {}: expected `name<TAB>member`",
                lineno + 1
            ))
        })?;
        map.entry(name.trim().to_lowercase())
            .or_default()
            .push(member.trim().to_lowercase());
    }
    Ok(map)
}

/// The graph role whose embedding is closest to the surface string, with its
/// cosine similarity. Ties break lexicographically.
pub fn nearest_role(
    graph: &RoleGraph,
    surface: &str,
    embed: &dyn EmbeddingProvider,
) -> Result<(String, f64), GraphError> {
    if graph.vertices.is_empty() {
        return Err(GraphError::EmptyGraph);
    }
    let labels: Vec<String> = graph.vertices.iter().cloned().collect();
    let mut texts = Vec::with_capacity(labels.len() + 1);
    texts.push(surface.to_lowercase());
    texts.extend(labels.iter().cloned());
    let vectors = embed.embed(&texts)?;
    let (query, label_vectors) = vectors.split_first().expect("embed returns all rows");

    let mut best: Option<(String, f64)> = None;
    for (label, vector) in labels.iter().zip(label_vectors) {
        let score = cosine(query, vector)?;
        let better = match &best {
            None => true,
            Some((_, best_score)) => score > *best_score,
        };
        if better {
            best = Some((label.clone(), score));
        }
    }
    best.ok_or(GraphError::EmptyGraph)
}
