// SPDX-License-Identifier: Apache-2.0

//! Canonical domain types shared by the parser, resolver, ACE tree and views.
//!
//! Nothing in here performs I/O. Values are plain data: cheap to clone, `Send + Sync`,
//! and totally ordered so they can key the ACE tree directly.

use std::collections::BTreeSet;
use std::fmt;

use ipnet::IpNet;
use serde::{Deserialize, Serialize};
use serde_json::Value;

/// The only MUD version this crate understands.
pub const SUPPORTED_MUD_VERSION: u32 = 1;
/// Cache validity (hours) applied when a document omits it.
pub const DEFAULT_CACHE_VALIDITY: u32 = 48;
pub const CACHE_VALIDITY_RANGE: std::ops::RangeInclusive<u32> = 1..=168;

pub const PROTO_TCP: u8 = 6;
pub const PROTO_UDP: u8 = 17;

/// Typed form of one MUD document.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MudFile {
    pub mud_version: u32,
    pub mud_url: String,
    pub last_update: String,
    pub cache_validity: u32,
    pub is_supported: bool,
    pub systeminfo: Option<String>,
    pub mfg_name: Option<String>,
    pub model_name: Option<String>,
    pub documentation: Option<String>,
    /// Carried opaquely, never verified.
    pub mud_signature: Option<String>,
    /// Declared extension names (`extensions` leaf-list).
    pub extensions: Vec<String>,
    pub from_device_policy: Vec<String>,
    pub to_device_policy: Vec<String>,
    pub acls: Vec<Acl>,
    /// Unrecognised members of the `ietf-mud:mud` container, in document order.
    pub extension_nodes: serde_json::Map<String, Value>,
    /// Unrecognised members of the document root, in document order.
    pub foreign_nodes: serde_json::Map<String, Value>,
}

impl MudFile {
    /// A file with no policies; handy as a starting point in code and tests.
    pub fn new(mud_url: impl Into<String>, last_update: impl Into<String>) -> Self {
        MudFile {
            mud_version: SUPPORTED_MUD_VERSION,
            mud_url: mud_url.into(),
            last_update: last_update.into(),
            cache_validity: DEFAULT_CACHE_VALIDITY,
            is_supported: true,
            systeminfo: None,
            mfg_name: None,
            model_name: None,
            documentation: None,
            mud_signature: None,
            extensions: Vec::new(),
            from_device_policy: Vec::new(),
            to_device_policy: Vec::new(),
            acls: Vec::new(),
            extension_nodes: Default::default(),
            foreign_nodes: Default::default(),
        }
    }

    pub fn acl(&self, name: &str) -> Option<&Acl> {
        self.acls.iter().find(|acl| acl.name == name)
    }

    /// ACL names of one policy, tagged with the flow direction the policy implies.
    pub fn policies(&self) -> impl Iterator<Item = (Direction, &str)> {
        let from = self
            .from_device_policy
            .iter()
            .map(|n| (Direction::FromDevice, n.as_str()));
        let to = self
            .to_device_policy
            .iter()
            .map(|n| (Direction::ToDevice, n.as_str()));
        from.chain(to)
    }

    /// Lower-cased `host[:port]` of the MUD-URL, if it has one.
    pub fn authority(&self) -> Option<String> {
        url_authority(&self.mud_url)
    }
}

/// Returns the authority component (`host[:port]`, lower-cased) of a URL.
pub fn url_authority(raw: &str) -> Option<String> {
    let url = url::Url::parse(raw).ok()?;
    let host = url.host_str().filter(|h| !h.is_empty())?;
    let host = host.to_ascii_lowercase();
    Some(match url.port() {
        Some(port) => format!("{host}:{port}"),
        None => host,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum IpVersion {
    V4,
    V6,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Acl {
    pub name: String,
    pub ip_version: IpVersion,
    pub aces: Vec<Ace>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Ace {
    pub name: String,
    pub matches: MatchSet,
    pub action: Action,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Action {
    Accept,
    Drop,
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Action::Accept => "accept",
            Action::Drop => "drop",
        })
    }
}

/// Direction of traffic relative to the device, and also the value space of the
/// `direction-initiated` TCP match.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Direction {
    FromDevice,
    ToDevice,
}

impl Direction {
    pub fn as_str(self) -> &'static str {
        match self {
            Direction::FromDevice => "from-device",
            Direction::ToDevice => "to-device",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "from-device" | "from_device" => Some(Direction::FromDevice),
            "to-device" | "to_device" => Some(Direction::ToDevice),
            _ => None,
        }
    }
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatchSet {
    /// IP protocol number; `None` matches any protocol.
    pub protocol: Option<u8>,
    pub endpoint: EndpointSpec,
    pub src_port: Option<PortSpec>,
    pub dst_port: Option<PortSpec>,
    pub direction_initiated: Option<Direction>,
}

impl MatchSet {
    pub fn new(endpoint: EndpointSpec) -> Self {
        MatchSet {
            protocol: None,
            endpoint,
            src_port: None,
            dst_port: None,
            direction_initiated: None,
        }
    }

    /// Canonical form: endpoint normalised, and port specs equal to the full range
    /// collapsed to `None`. Idempotent.
    pub fn canonical(&self) -> MatchSet {
        let collapse = |p: Option<PortSpec>| p.filter(|p| *p != PortSpec::FULL);
        MatchSet {
            protocol: self.protocol,
            endpoint: self.endpoint.canonical(),
            src_port: collapse(self.src_port),
            dst_port: collapse(self.dst_port),
            direction_initiated: self.direction_initiated,
        }
    }
}

/// The remote side of an ACE. Exactly one per ACE.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "kebab-case")]
pub enum EndpointSpec {
    DnsName(String),
    LocalNetworks,
    Controller(String),
    MyController,
    Manufacturer(String),
    SameManufacturer,
    Model(String),
    ExplicitNetwork(IpNet),
}

impl EndpointSpec {
    pub fn kind(&self) -> AbstractionKind {
        match self {
            EndpointSpec::DnsName(_) => AbstractionKind::DomainName,
            EndpointSpec::LocalNetworks => AbstractionKind::LocalNetworks,
            EndpointSpec::Controller(_) => AbstractionKind::Controller,
            EndpointSpec::MyController => AbstractionKind::MyController,
            EndpointSpec::Manufacturer(_) => AbstractionKind::Manufacturer,
            EndpointSpec::SameManufacturer => AbstractionKind::SameManufacturer,
            EndpointSpec::Model(_) => AbstractionKind::Model,
            EndpointSpec::ExplicitNetwork(_) => AbstractionKind::ExplicitNetwork,
        }
    }

    pub fn canonical(&self) -> EndpointSpec {
        match self {
            EndpointSpec::DnsName(d) => EndpointSpec::DnsName(canonical_domain(d)),
            EndpointSpec::Manufacturer(a) => EndpointSpec::Manufacturer(a.to_ascii_lowercase()),
            EndpointSpec::ExplicitNetwork(net) => EndpointSpec::ExplicitNetwork(net.trunc()),
            other => other.clone(),
        }
    }

    /// Argument of the abstraction, if it has one, for display.
    pub fn detail(&self) -> Option<String> {
        match self {
            EndpointSpec::DnsName(s)
            | EndpointSpec::Controller(s)
            | EndpointSpec::Manufacturer(s)
            | EndpointSpec::Model(s) => Some(s.clone()),
            EndpointSpec::ExplicitNetwork(net) => Some(net.to_string()),
            _ => None,
        }
    }
}

impl fmt::Display for EndpointSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.detail() {
            Some(detail) => write!(f, "{}({})", self.kind(), detail),
            None => write!(f, "{}", self.kind()),
        }
    }
}

/// Lower-case and strip a trailing root dot; domains compare by exact string after this.
pub fn canonical_domain(domain: &str) -> String {
    domain.trim_end_matches('.').to_ascii_lowercase()
}

/// Tag naming which MUD abstraction produced a flow.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AbstractionKind {
    DomainName,
    LocalNetworks,
    Manufacturer,
    SameManufacturer,
    Controller,
    MyController,
    Model,
    ExplicitNetwork,
}

impl AbstractionKind {
    pub fn as_str(self) -> &'static str {
        match self {
            AbstractionKind::DomainName => "domain-name",
            AbstractionKind::LocalNetworks => "local-networks",
            AbstractionKind::Manufacturer => "manufacturer",
            AbstractionKind::SameManufacturer => "same-manufacturer",
            AbstractionKind::Controller => "controller",
            AbstractionKind::MyController => "my-controller",
            AbstractionKind::Model => "model",
            AbstractionKind::ExplicitNetwork => "explicit-network",
        }
    }
}

impl fmt::Display for AbstractionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Inclusive port range. `eq p` is `[p, p]`; an absent match is [`PortSpec::FULL`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct PortSpec {
    pub lo: u16,
    pub hi: u16,
}

impl PortSpec {
    pub const FULL: PortSpec = PortSpec {
        lo: 0,
        hi: u16::MAX,
    };

    /// Checked constructor; `None` when `lo > hi`.
    pub fn range(lo: u16, hi: u16) -> Option<Self> {
        (lo <= hi).then_some(PortSpec { lo, hi })
    }

    pub fn eq(port: u16) -> Self {
        PortSpec { lo: port, hi: port }
    }

    pub fn is_valid(&self) -> bool {
        self.lo <= self.hi
    }

    pub fn is_full(&self) -> bool {
        *self == Self::FULL
    }

    pub fn contains_port(&self, port: u16) -> bool {
        self.lo <= port && port <= self.hi
    }

    pub fn contains(&self, other: &PortSpec) -> bool {
        self.lo <= other.lo && other.hi <= self.hi
    }

    pub fn intersects(&self, other: &PortSpec) -> bool {
        self.lo <= other.hi && other.lo <= self.hi
    }
}

impl fmt::Display for PortSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_full() {
            f.write_str("any")
        } else if self.lo == self.hi {
            write!(f, "{}", self.lo)
        } else {
            write!(f, "{}-{}", self.lo, self.hi)
        }
    }
}

/// Identifier of a device in a deployment context.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct DeviceId(pub String);

impl DeviceId {
    pub fn new(id: impl Into<String>) -> Self {
        DeviceId(id.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for DeviceId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for DeviceId {
    fn from(s: &str) -> Self {
        DeviceId(s.to_owned())
    }
}

/// Where an ACE's endpoint ended up after resolution against a deployment context.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "kebab-case")]
pub enum ResolvedEndpoint {
    InternetDomain(String),
    InternetNetwork(IpNet),
    LocalDevice(DeviceId),
    LocalAny,
    UnresolvedAbstraction(EndpointSpec),
}

impl ResolvedEndpoint {
    pub fn is_unresolved(&self) -> bool {
        matches!(self, ResolvedEndpoint::UnresolvedAbstraction(_))
    }

    /// Set containment over the packets each endpoint denotes.
    ///
    /// Domains and addresses are disjoint atom spaces; unresolved endpoints denote nothing.
    pub fn contains(&self, other: &ResolvedEndpoint) -> bool {
        use ResolvedEndpoint::*;
        match (self, other) {
            (UnresolvedAbstraction(_), _) | (_, UnresolvedAbstraction(_)) => false,
            (LocalAny, LocalAny | LocalDevice(_)) => true,
            (InternetNetwork(a), InternetNetwork(b)) => a.contains(b),
            (a, b) => a == b,
        }
    }

    pub fn intersects(&self, other: &ResolvedEndpoint) -> bool {
        self.contains(other) || other.contains(self)
    }
}

impl fmt::Display for ResolvedEndpoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ResolvedEndpoint::InternetDomain(d) => f.write_str(d),
            ResolvedEndpoint::InternetNetwork(n) => write!(f, "{n}"),
            ResolvedEndpoint::LocalDevice(id) => write!(f, "{id}"),
            ResolvedEndpoint::LocalAny => f.write_str("local-networks"),
            ResolvedEndpoint::UnresolvedAbstraction(spec) => write!(f, "unresolved {spec}"),
        }
    }
}

/// Provenance of a flow: which ACE in which file produced it.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct RuleRef {
    pub source_file: String,
    pub acl: String,
    pub ace: String,
    pub abstraction: Option<AbstractionKind>,
}

impl fmt::Display for RuleRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}#{}/{}", self.source_file, self.acl, self.ace)
    }
}

/// One fully resolved allow/deny tuple.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ConcreteFlow {
    pub device: DeviceId,
    pub direction: Direction,
    pub remote: ResolvedEndpoint,
    pub protocol: Option<u8>,
    pub src_port: PortSpec,
    pub dst_port: PortSpec,
    pub direction_initiated: Option<Direction>,
    pub action: Action,
    pub provenance: BTreeSet<RuleRef>,
}

impl ConcreteFlow {
    /// Whether every packet matched by `other` is matched by `self` (actions ignored).
    pub fn match_contains(&self, other: &ConcreteFlow) -> bool {
        self.device == other.device
            && self.direction == other.direction
            && self.remote.contains(&other.remote)
            && match (self.protocol, other.protocol) {
                (None, _) => true,
                (Some(a), Some(b)) => a == b,
                (Some(_), None) => false,
            }
            && self.dst_port.contains(&other.dst_port)
            && self.src_port.contains(&other.src_port)
            && match (self.direction_initiated, other.direction_initiated) {
                (None, _) => true,
                (Some(a), Some(b)) => a == b,
                (Some(_), None) => false,
            }
    }

    /// Whether some packet is matched by both flows (actions ignored).
    pub fn match_intersects(&self, other: &ConcreteFlow) -> bool {
        self.device == other.device
            && self.direction == other.direction
            && self.remote.intersects(&other.remote)
            && match (self.protocol, other.protocol) {
                (Some(a), Some(b)) => a == b,
                _ => true,
            }
            && self.dst_port.intersects(&other.dst_port)
            && self.src_port.intersects(&other.src_port)
            && match (self.direction_initiated, other.direction_initiated) {
                (Some(a), Some(b)) => a == b,
                _ => true,
            }
    }

    /// Identical match tuple; action and provenance ignored.
    pub fn same_match(&self, other: &ConcreteFlow) -> bool {
        self.device == other.device
            && self.direction == other.direction
            && self.remote == other.remote
            && self.protocol == other.protocol
            && self.src_port == other.src_port
            && self.dst_port == other.dst_port
            && self.direction_initiated == other.direction_initiated
    }
}
