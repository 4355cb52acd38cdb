// SPDX-License-Identifier: Apache-2.0

//! A mutable collection of uploaded MUD files plus one deployment context.
//!
//! Every mutation bumps the revision; [`Workspace::analyze`] derives an immutable
//! [`Analysis`] from the current state.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::acetree::{merge, MergedRuleset};
use crate::context::{bind_files, ContextError, DeploymentContext};
use crate::finding::Finding;
use crate::graph::{to_graph, FlowGraph};
use crate::parser::{parse_mud_file, ParseResult};

pub type FileId = u64;

#[derive(Debug, Error)]
pub enum WorkspaceError {
    #[error("document is not valid UTF-8")]
    NonUtf8,
    #[error("unknown MUD file id {0}")]
    UnknownFile(FileId),
    #[error(transparent)]
    Context(#[from] ContextError),
    #[error("invalid workspace state: {0}")]
    State(String),
}

#[derive(Debug, Clone)]
pub struct StoredFile {
    pub id: FileId,
    pub raw: String,
    pub result: ParseResult,
}

impl StoredFile {
    /// Label used for the synthetic device when no context is set.
    pub fn label(&self) -> String {
        if let Some(file) = &self.result.file {
            if let Ok(url) = url::Url::parse(&file.mud_url) {
                let stem = url
                    .path_segments()
                    .and_then(|mut s| s.next_back())
                    .map(|s| s.trim_end_matches(".json"))
                    .filter(|s| !s.is_empty());
                if let Some(stem) = stem {
                    return stem.to_owned();
                }
            }
        }
        format!("file-{}", self.id)
    }
}

/// A finding tagged with the uploaded file it came from, when it came from one.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WorkspaceFinding {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub file: Option<FileId>,
    #[serde(flatten)]
    pub finding: Finding,
}

/// Everything derived from one revision of a workspace.
#[derive(Debug, Clone)]
pub struct Analysis {
    pub revision: u64,
    pub ruleset: MergedRuleset,
    pub graph: FlowGraph,
    pub findings: Vec<WorkspaceFinding>,
}

#[derive(Debug, Clone, Default)]
pub struct Workspace {
    files: BTreeMap<FileId, StoredFile>,
    context: Option<DeploymentContext>,
    revision: u64,
    next_id: FileId,
}

#[derive(Serialize, Deserialize)]
struct PersistedFile {
    id: FileId,
    raw: String,
}

#[derive(Serialize, Deserialize)]
struct Persisted {
    revision: u64,
    next_id: FileId,
    files: Vec<PersistedFile>,
    context: Option<DeploymentContext>,
}

impl Workspace {
    pub fn new() -> Self {
        Workspace {
            next_id: 1,
            ..Default::default()
        }
    }

    pub fn revision(&self) -> u64 {
        self.revision
    }

    pub fn files(&self) -> impl Iterator<Item = &StoredFile> {
        self.files.values()
    }

    pub fn file(&self, id: FileId) -> Option<&StoredFile> {
        self.files.get(&id)
    }

    pub fn context(&self) -> Option<&DeploymentContext> {
        self.context.as_ref()
    }

    /// Store a document under a fresh id, even when it fails protocol checks.
    pub fn add_file(&mut self, bytes: &[u8]) -> Result<(FileId, Vec<Finding>), WorkspaceError> {
        let raw = std::str::from_utf8(bytes)
            .map_err(|_| WorkspaceError::NonUtf8)?
            .to_owned();
        let result = parse_mud_file(raw.as_bytes());
        let id = self.next_id;
        self.next_id += 1;
        let findings = result.findings.clone();
        self.files.insert(id, StoredFile { id, raw, result });
        self.revision += 1;
        Ok((id, findings))
    }

    pub fn remove_file(&mut self, id: FileId) -> Result<(), WorkspaceError> {
        self.files
            .remove(&id)
            .ok_or(WorkspaceError::UnknownFile(id))?;
        self.revision += 1;
        Ok(())
    }

    pub fn set_context(&mut self, context: Option<DeploymentContext>) {
        self.context = context;
        self.revision += 1;
    }

    pub fn set_context_json(&mut self, bytes: &[u8]) -> Result<(), WorkspaceError> {
        let ctx = DeploymentContext::from_json(bytes)?;
        self.set_context(Some(ctx));
        Ok(())
    }

    /// Merge every file that parsed without errors over the context.
    pub fn analyze(&self) -> Analysis {
        let mut findings: Vec<WorkspaceFinding> = self
            .files
            .values()
            .flat_map(|f| {
                f.result.findings.iter().map(|finding| WorkspaceFinding {
                    file: Some(f.id),
                    finding: finding.clone(),
                })
            })
            .collect();

        let usable: Vec<(String, crate::model::MudFile)> = self
            .files
            .values()
            .filter_map(|f| f.result.file.clone().map(|file| (f.label(), file)))
            .collect();
        let binding = bind_files(&usable, self.context.as_ref());
        let ruleset = merge(&binding.entries, &binding.context);

        findings.extend(
            binding
                .findings
                .into_iter()
                .chain(ruleset.findings.iter().cloned())
                .map(|finding| WorkspaceFinding {
                    file: None,
                    finding,
                }),
        );
        Analysis {
            revision: self.revision,
            graph: to_graph(&ruleset),
            ruleset,
            findings,
        }
    }

    pub fn to_json(&self) -> String {
        let persisted = Persisted {
            revision: self.revision,
            next_id: self.next_id,
            files: self
                .files
                .values()
                .map(|f| PersistedFile {
                    id: f.id,
                    raw: f.raw.clone(),
                })
                .collect(),
            context: self.context.clone(),
        };
        serde_json::to_string_pretty(&persisted).expect("workspace serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, WorkspaceError> {
        let p: Persisted =
            serde_json::from_str(text).map_err(|e| WorkspaceError::State(e.to_string()))?;
        let mut files = BTreeMap::new();
        for f in p.files {
            if f.id >= p.next_id {
                return Err(WorkspaceError::State(format!(
                    "file id {} not below next id",
                    f.id
                )));
            }
            let result = parse_mud_file(f.raw.as_bytes());
            files.insert(
                f.id,
                StoredFile {
                    id: f.id,
                    raw: f.raw,
                    result,
                },
            );
        }
        Ok(Workspace {
            files,
            context: p.context,
            revision: p.revision,
            next_id: p.next_id,
        })
    }
}
