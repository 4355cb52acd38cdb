// SPDX-License-Identifier: Apache-2.0

//! Toolkit for Manufacturer Usage Description (RFC 8520) files.
//!
//! The pipeline is: [`parser::parse_mud_file`] turns JSON into a checked [`MudFile`];
//! [`resolver::resolve_file`] expands MUD abstractions against a [`DeploymentContext`]
//! into [`ConcreteFlow`]s; [`acetree::merge`] builds and prunes the ACE tree over many
//! files; [`graph`] and [`summary`] project the result for review.

pub mod acetree;
pub mod context;
pub mod finding;
pub mod graph;
pub mod model;
pub mod parser;
pub mod resolver;
pub mod summary;
pub mod workspace;

#[cfg(feature = "service")]
pub mod service;

#[cfg(feature = "cli")]
pub mod cli;

pub use acetree::{
    build_tree, flows_between, is_allowed, merge, prune_tree, AceTree, MergedRuleset,
};
pub use context::{bind_files, DeploymentContext};
pub use finding::{Finding, FindingCode, FindingKind, Severity};
pub use graph::{export_graph, to_graph, ExportFormat, FlowGraph};
pub use model::{ConcreteFlow, DeviceId, EndpointSpec, MudFile, ResolvedEndpoint, RuleRef};
pub use parser::{parse_mud_file, serialize_mud_file, validate_semantics, ParseResult};
pub use resolver::{resolve_endpoint, resolve_file};
pub use summary::{summarize, DeviceSummary};
pub use workspace::Workspace;
