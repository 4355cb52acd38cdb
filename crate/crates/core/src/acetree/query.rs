// SPDX-License-Identifier: Apache-2.0

use std::fmt;
use std::net::IpAddr;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{InitiationKey, MergedRuleset, ProtocolKey};
use crate::model::{
    canonical_domain, Action, DeviceId, Direction, ResolvedEndpoint, RuleRef, PROTO_TCP,
};

/// The remote party of a single concrete packet.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "kebab-case")]
pub enum Remote {
    /// A device of the deployment.
    Device(DeviceId),
    /// A local host that is not one of the deployment's devices.
    UnlistedLocal,
    Domain(String),
    Address(IpAddr),
}

impl Remote {
    /// Whether a leaf endpoint matches this remote.
    pub fn matched_by(&self, endpoint: &ResolvedEndpoint) -> bool {
        match (endpoint, self) {
            (ResolvedEndpoint::LocalDevice(id), Remote::Device(d)) => id == d,
            (ResolvedEndpoint::LocalAny, Remote::Device(_) | Remote::UnlistedLocal) => true,
            (ResolvedEndpoint::InternetDomain(name), Remote::Domain(d)) => {
                *name == canonical_domain(d)
            }
            (ResolvedEndpoint::InternetNetwork(net), Remote::Address(a)) => net.contains(a),
            _ => false,
        }
    }
}

impl fmt::Display for Remote {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Remote::Device(id) => write!(f, "device:{id}"),
            Remote::UnlistedLocal => f.write_str("local"),
            Remote::Domain(d) => f.write_str(d),
            Remote::Address(a) => write!(f, "{a}"),
        }
    }
}

/// `device:<id>`, `local`, an IP address, or a domain name.
impl FromStr for Remote {
    type Err = QueryError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if let Some(id) = s.strip_prefix("device:") {
            return Ok(Remote::Device(DeviceId::new(id)));
        }
        if s == "local" {
            return Ok(Remote::UnlistedLocal);
        }
        if let Ok(addr) = s.parse::<IpAddr>() {
            return Ok(Remote::Address(addr));
        }
        if crate::parser::is_hostname(s) {
            return Ok(Remote::Domain(canonical_domain(s)));
        }
        Err(QueryError::InvalidRemote(s.to_owned()))
    }
}

/// A single concrete packet; no wildcards.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PacketQuery {
    pub device: DeviceId,
    pub direction: Direction,
    pub remote: Remote,
    pub protocol: u8,
    pub src_port: u16,
    pub dst_port: u16,
    /// Which side opened the TCP connection. Entries constrained on initiation only match
    /// TCP queries that state it.
    #[serde(default)]
    pub initiated: Option<Direction>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Decision {
    Accept,
    Drop,
    /// Nothing matched; MUD is default-deny.
    NoMatch,
}

impl fmt::Display for Decision {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Decision::Accept => "accept",
            Decision::Drop => "drop",
            Decision::NoMatch => "no_match",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QueryOutcome {
    pub decision: Decision,
    pub refs: Vec<RuleRef>,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum QueryError {
    #[error("unknown device \"{0}\"")]
    UnknownDevice(DeviceId),
    #[error("\"{0}\" is not a device:<id>, local, address or domain name")]
    InvalidRemote(String),
}

/// Decide a packet against the ruleset.
///
/// Any matching drop entry wins, with every matching entry reported.
pub fn is_allowed(
    ruleset: &MergedRuleset,
    query: &PacketQuery,
) -> Result<QueryOutcome, QueryError> {
    if !ruleset.has_device(&query.device) {
        return Err(QueryError::UnknownDevice(query.device.clone()));
    }
    let initiated = if query.protocol == PROTO_TCP {
        query.initiated
    } else {
        None
    };

    let mut accept = Vec::new();
    let mut drop = Vec::new();
    let Some(endpoints) = ruleset.tree.endpoints(&query.device, query.direction) else {
        return Ok(QueryOutcome {
            decision: Decision::NoMatch,
            refs: Vec::new(),
        });
    };
    for (_, protos) in endpoints
        .iter()
        .filter(|(ep, _)| query.remote.matched_by(ep))
    {
        for key in [ProtocolKey::Any, ProtocolKey::Number(query.protocol)] {
            let Some(dsts) = protos.get(&key) else {
                continue;
            };
            for (_, srcs) in dsts.iter().filter(|(r, _)| r.contains_port(query.dst_port)) {
                for (_, inits) in srcs.iter().filter(|(r, _)| r.contains_port(query.src_port)) {
                    for (init, actions) in inits {
                        let applies = match init {
                            InitiationKey::Any => true,
                            InitiationKey::Initiated(d) => initiated == Some(*d),
                        };
                        if !applies {
                            continue;
                        }
                        for (action, leaf) in actions {
                            let bucket = match action {
                                Action::Accept => &mut accept,
                                Action::Drop => &mut drop,
                            };
                            bucket.extend(leaf.provenance.iter().cloned());
                        }
                    }
                }
            }
        }
    }

    let decision = if !drop.is_empty() {
        Decision::Drop
    } else if !accept.is_empty() {
        Decision::Accept
    } else {
        Decision::NoMatch
    };
    let mut refs = accept;
    refs.extend(drop);
    refs.sort();
    refs.dedup();
    Ok(QueryOutcome { decision, refs })
}
