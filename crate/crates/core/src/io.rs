//! JSON group and network files.

use std::path::{Path as FsPath, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::algebra::{AlgebraError, Permutation, ReactionGroup, StateSet};
use crate::network::{Marking, NetworkError, RelationGraph};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum IoError {
    #[error("{path}: {message}")]
    Read { path: String, message: String },
    #[error("{origin}: line {line}, column {column}: {message}")]
    Parse { origin: String, line: usize, column: usize, message: String },
    #[error("unknown builtin group `{0}` (try sign, cyclic:N, symmetric:N)")]
    UnknownBuiltin(String),
    #[error("edge {edge}: unknown node `{node}`")]
    UnknownNode { edge: usize, node: String },
    #[error("edge {edge} ({from} -> {to}): {source}")]
    Reaction { edge: usize, from: String, to: String, source: AlgebraError },
    #[error(transparent)]
    Algebra(#[from] AlgebraError),
    #[error(transparent)]
    Network(#[from] NetworkError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ElementSpec {
    pub name: String,
    pub perm: Vec<usize>,
}

/// `{ "states": [...], "elements": [{"name", "perm"}], "identity": "e" }`
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupFile {
    pub states: Vec<String>,
    pub elements: Vec<ElementSpec>,
    pub identity: String,
}

impl GroupFile {
    pub fn build(&self) -> Result<ReactionGroup, AlgebraError> {
        let states = StateSet::new(self.states.iter().cloned())?;
        let elements = self
            .elements
            .iter()
            .map(|e| Ok((e.name.clone(), Permutation::new(e.perm.clone())?)))
            .collect::<Result<Vec<_>, AlgebraError>>()?;
        ReactionGroup::new(states, elements, &self.identity)
    }

    pub fn from_group(group: &ReactionGroup) -> Self {
        GroupFile {
            states: group.states().labels().to_vec(),
            elements: group
                .elements()
                .map(|g| ElementSpec { name: group.name(g).to_owned(), perm: group.permutation(g).images().to_vec() })
                .collect(),
            identity: group.name(group.identity()).to_owned(),
        }
    }
}

/// Builtin name, path to a group file, or an inline group.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GroupSource {
    Inline(GroupFile),
    Named(String),
}

impl GroupSource {
    /// `sign`, `cyclic:N` and `symmetric:N` are builtins; any other name is a
    /// path, relative to `base` when not absolute.
    pub fn resolve(&self, base: Option<&FsPath>) -> Result<ReactionGroup, IoError> {
        match self {
            GroupSource::Inline(file) => Ok(file.build()?),
            GroupSource::Named(name) => {
                if let Some(group) = builtin_group(name)? {
                    return Ok(group);
                }
                let path = match base {
                    Some(b) if FsPath::new(name).is_relative() => b.join(name),
                    _ => PathBuf::from(name),
                };
                let text = read(&path)?;
                let file: GroupFile = parse(&text, &path.display().to_string())?;
                Ok(file.build()?)
            }
        }
    }
}

pub fn builtin_group(name: &str) -> Result<Option<ReactionGroup>, IoError> {
    let sized = |prefix: &str| {
        name.strip_prefix(prefix)
            .map(|n| n.parse::<usize>().map_err(|_| IoError::UnknownBuiltin(name.to_owned())))
    };
    if name == "sign" || name == "sign_flip" {
        return Ok(Some(ReactionGroup::sign_flip()));
    }
    if let Some(n) = sized("cyclic:") {
        return Ok(Some(ReactionGroup::cyclic(n?)?));
    }
    if let Some(n) = sized("symmetric:") {
        return Ok(Some(ReactionGroup::symmetric(n?)?));
    }
    if name.ends_with(".json") || name.contains('/') {
        return Ok(None);
    }
    Err(IoError::UnknownBuiltin(name.to_owned()))
}

/// Node given by index or by label.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum NodeRef {
    Index(usize),
    Label(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgeSpec {
    pub from: NodeRef,
    pub to: NodeRef,
    pub reaction: String,
}

/// `{ "group": ..., "nodes": [...], "edges": [{"from", "to", "reaction"}] }`
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkFile {
    pub group: GroupSource,
    pub nodes: Vec<String>,
    pub edges: Vec<EdgeSpec>,
}

impl NetworkFile {
    pub fn build(&self, base: Option<&FsPath>) -> Result<Marking, IoError> {
        let group = Arc::new(self.group.resolve(base)?);
        let resolve = |edge: usize, r: &NodeRef| match r {
            NodeRef::Index(i) => Ok(*i),
            NodeRef::Label(l) => self
                .nodes
                .iter()
                .position(|n| n == l)
                .ok_or_else(|| IoError::UnknownNode { edge, node: l.clone() }),
        };
        let mut directed = Vec::with_capacity(self.edges.len());
        for (k, e) in self.edges.iter().enumerate() {
            directed.push((resolve(k, &e.from)?, resolve(k, &e.to)?));
        }
        let graph = Arc::new(RelationGraph::from_directed(self.nodes.clone(), directed.iter().copied())?);
        let mut marks = vec![group.identity(); graph.edge_count()];
        for (k, (e, &(i, j))) in self.edges.iter().zip(&directed).enumerate() {
            let g = group.by_name(&e.reaction).map_err(|source| IoError::Reaction {
                edge: k,
                from: graph.label(i).to_owned(),
                to: graph.label(j).to_owned(),
                source,
            })?;
            marks[graph.edge_id(i, j).unwrap()] = g;
        }
        Ok(Marking::new(graph, group, marks)?)
    }

    /// Inline-group file with edges in edge-index order.
    pub fn from_marking(marking: &Marking) -> Self {
        let graph = marking.graph();
        let group = marking.group();
        NetworkFile {
            group: GroupSource::Inline(GroupFile::from_group(group)),
            nodes: graph.labels().to_vec(),
            edges: graph
                .edges()
                .iter()
                .zip(marking.marks())
                .map(|(&(i, j), &g)| EdgeSpec {
                    from: NodeRef::Index(i),
                    to: NodeRef::Index(j),
                    reaction: group.name(g).to_owned(),
                })
                .collect(),
        }
    }
}

fn read(path: &FsPath) -> Result<String, IoError> {
    std::fs::read_to_string(path)
        .map_err(|e| IoError::Read { path: path.display().to_string(), message: e.to_string() })
}

/// Parses JSON, reporting the line and column of any error.
pub fn parse<T: serde::de::DeserializeOwned>(text: &str, origin: &str) -> Result<T, IoError> {
    serde_json::from_str(text).map_err(|e| IoError::Parse {
        origin: origin.to_owned(),
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })
}

pub fn parse_network(text: &str, origin: &str, base: Option<&FsPath>) -> Result<Marking, IoError> {
    parse::<NetworkFile>(text, origin)?.build(base)
}

pub fn load_network(path: impl AsRef<FsPath>) -> Result<Marking, IoError> {
    let path = path.as_ref();
    parse_network(&read(path)?, &path.display().to_string(), path.parent())
}

pub fn load_group(path: impl AsRef<FsPath>) -> Result<ReactionGroup, IoError> {
    let path = path.as_ref();
    Ok(parse::<GroupFile>(&read(path)?, &path.display().to_string())?.build()?)
}
