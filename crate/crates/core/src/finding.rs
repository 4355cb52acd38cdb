// SPDX-License-Identifier: Apache-2.0

//! Diagnostics produced by every analysis stage.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::model::{ConcreteFlow, RuleRef};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FindingKind {
    ProtocolError,
    SemanticWarning,
    UnresolvedAbstraction,
    Duplicate,
    Subsumed,
    Overlap,
    Conflict,
}

impl FindingKind {
    pub fn as_str(self) -> &'static str {
        match self {
            FindingKind::ProtocolError => "protocol_error",
            FindingKind::SemanticWarning => "semantic_warning",
            FindingKind::UnresolvedAbstraction => "unresolved_abstraction",
            FindingKind::Duplicate => "duplicate",
            FindingKind::Subsumed => "subsumed",
            FindingKind::Overlap => "overlap",
            FindingKind::Conflict => "conflict",
        }
    }

    /// Kinds that relate two or more rules and therefore carry at least two refs.
    pub fn is_relational(self) -> bool {
        matches!(
            self,
            FindingKind::Duplicate
                | FindingKind::Subsumed
                | FindingKind::Overlap
                | FindingKind::Conflict
        )
    }
}

impl fmt::Display for FindingKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Info,
    Warning,
    Error,
}

impl fmt::Display for Severity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Severity::Info => "info",
            Severity::Warning => "warning",
            Severity::Error => "error",
        })
    }
}

/// Stable machine-readable identifier of the specific check that fired.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FindingCode {
    // document structure
    MalformedJson,
    InvalidUtf8,
    MissingField,
    InvalidType,
    InvalidValue,
    UnknownExtensionNode,
    UnsupportedNode,
    // header
    UnsupportedVersion,
    InvalidMudUrl,
    MissingUrlAuthority,
    InvalidTimestamp,
    CacheValidityOutOfRange,
    // ACL references
    DanglingAclReference,
    DuplicateAclName,
    DuplicateAceName,
    EmptyAcl,
    UnusedAcl,
    // matches
    EmptyMatch,
    MissingEndpoint,
    CombinedAbstractions,
    InvalidEndpoint,
    AddressFamilyMismatch,
    UnsupportedPortOperator,
    InvertedPortRange,
    PortsWithoutTransport,
    TransportMismatch,
    DirectionInitiatedRequiresTcp,
    EndpointOnWrongSide,
    DropInAllowList,
    // deployment
    UnresolvedAbstraction,
    DeviceUrlMismatch,
    UnboundFile,
    UnreadableFile,
    // ACE tree
    DuplicateRule,
    SubsumedRule,
    OverlappingRules,
    ConflictingRules,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Finding {
    pub kind: FindingKind,
    pub severity: Severity,
    pub code: FindingCode,
    pub message: String,
    /// JSON path of the offending node, for document-level findings.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub location: Option<String>,
    #[serde(default)]
    pub refs: Vec<RuleRef>,
    #[serde(default)]
    pub flows: Vec<ConcreteFlow>,
}

impl Finding {
    pub fn new(
        kind: FindingKind,
        severity: Severity,
        code: FindingCode,
        message: impl Into<String>,
    ) -> Self {
        Finding {
            kind,
            severity,
            code,
            message: message.into(),
            location: None,
            refs: Vec::new(),
            flows: Vec::new(),
        }
    }

    pub fn protocol_error(code: FindingCode, message: impl Into<String>) -> Self {
        Self::new(FindingKind::ProtocolError, Severity::Error, code, message)
    }

    pub fn semantic_warning(code: FindingCode, message: impl Into<String>) -> Self {
        Self::new(
            FindingKind::SemanticWarning,
            Severity::Warning,
            code,
            message,
        )
    }

    pub fn at(mut self, location: impl Into<String>) -> Self {
        self.location = Some(location.into());
        self
    }

    pub fn with_refs(mut self, refs: impl IntoIterator<Item = RuleRef>) -> Self {
        self.refs.extend(refs);
        self
    }

    pub fn with_flows(mut self, flows: impl IntoIterator<Item = ConcreteFlow>) -> Self {
        self.flows.extend(flows);
        self
    }

    pub fn is_error(&self) -> bool {
        self.severity == Severity::Error
    }
}

impl fmt::Display for Finding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {}: {}", self.severity, self.kind, self.message)?;
        if let Some(loc) = self.location.as_deref().filter(|l| !l.is_empty()) {
            write!(f, " (at {loc})")?;
        }
        Ok(())
    }
}

pub fn count_errors(findings: &[Finding]) -> usize {
    findings.iter().filter(|f| f.is_error()).count()
}
