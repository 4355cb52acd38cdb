// SPDX-License-Identifier: Apache-2.0

//! Per-device digest of what a merged ruleset allows.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::acetree::MergedRuleset;
use crate::model::{Action, DeviceId, PortSpec, ResolvedEndpoint};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("unknown device \"{0}\"")]
pub struct UnknownDevice(pub DeviceId);

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProtocolTally {
    /// `None` is any protocol.
    pub protocol: Option<u8>,
    /// Destination port ranges, coalesced.
    pub dst_ports: Vec<PortSpec>,
    pub flows: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RuleCount {
    pub before: usize,
    pub after: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DeviceSummary {
    pub device: DeviceId,
    pub allowed_remote_hosts: Vec<String>,
    pub allowed_networks: Vec<String>,
    pub allowed_local_peers: Vec<DeviceId>,
    /// Set when the device may talk to any local host.
    pub local_any: bool,
    /// Abstractions declared but not bound in this deployment.
    pub unresolved: Vec<String>,
    pub protocols: Vec<ProtocolTally>,
    pub rule_count: RuleCount,
}

/// Sort and merge overlapping or adjacent ranges.
pub fn coalesce(mut ranges: Vec<PortSpec>) -> Vec<PortSpec> {
    ranges.sort();
    let mut out: Vec<PortSpec> = Vec::with_capacity(ranges.len());
    for r in ranges {
        match out.last_mut() {
            Some(last) if r.lo as u32 <= last.hi as u32 + 1 => last.hi = last.hi.max(r.hi),
            _ => out.push(r),
        }
    }
    out
}

/// Summarize accepted traffic of one device. Counts cover every entry of the device.
pub fn summarize(
    ruleset: &MergedRuleset,
    device: &DeviceId,
) -> Result<DeviceSummary, UnknownDevice> {
    if !ruleset.has_device(device) {
        return Err(UnknownDevice(device.clone()));
    }
    let mut hosts = BTreeSet::new();
    let mut networks = BTreeSet::new();
    let mut peers = BTreeSet::new();
    let mut local_any = false;
    let mut unresolved = BTreeSet::new();
    let mut tally: BTreeMap<Option<u8>, (Vec<PortSpec>, usize)> = BTreeMap::new();

    for flow in ruleset.flows_of(device) {
        if let ResolvedEndpoint::UnresolvedAbstraction(spec) = &flow.remote {
            unresolved.insert(spec.to_string());
            continue;
        }
        if flow.action != Action::Accept {
            continue;
        }
        match &flow.remote {
            ResolvedEndpoint::InternetDomain(d) => {
                hosts.insert(d.clone());
            }
            ResolvedEndpoint::InternetNetwork(n) => {
                networks.insert(n.to_string());
            }
            ResolvedEndpoint::LocalDevice(id) => {
                peers.insert(id.clone());
            }
            ResolvedEndpoint::LocalAny => local_any = true,
            ResolvedEndpoint::UnresolvedAbstraction(_) => unreachable!(),
        }
        let entry = tally.entry(flow.protocol).or_default();
        entry.0.push(flow.dst_port);
        entry.1 += 1;
    }

    Ok(DeviceSummary {
        device: device.clone(),
        allowed_remote_hosts: hosts.into_iter().collect(),
        allowed_networks: networks.into_iter().collect(),
        allowed_local_peers: peers.into_iter().collect(),
        local_any,
        unresolved: unresolved.into_iter().collect(),
        protocols: tally
            .into_iter()
            .map(|(protocol, (ports, flows))| ProtocolTally {
                protocol,
                dst_ports: coalesce(ports),
                flows,
            })
            .collect(),
        rule_count: RuleCount {
            before: ruleset.resolved_counts.get(device).copied().unwrap_or(0),
            after: ruleset.flows_of(device).count(),
        },
    })
}

impl fmt::Display for DeviceSummary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "device {}", self.device)?;
        let list = |items: &[String]| {
            if items.is_empty() {
                "-".to_owned()
            } else {
                items.join(", ")
            }
        };
        writeln!(f, "  remote hosts:  {}", list(&self.allowed_remote_hosts))?;
        if !self.allowed_networks.is_empty() {
            writeln!(f, "  networks:      {}", list(&self.allowed_networks))?;
        }
        let mut peers: Vec<String> = self
            .allowed_local_peers
            .iter()
            .map(ToString::to_string)
            .collect();
        if self.local_any {
            peers.insert(0, "any local host".to_owned());
        }
        writeln!(f, "  local peers:   {}", list(&peers))?;
        if !self.unresolved.is_empty() {
            writeln!(f, "  unresolved:    {}", list(&self.unresolved))?;
        }
        for t in &self.protocols {
            let proto = t
                .protocol
                .map_or_else(|| "any".to_owned(), |p| p.to_string());
            let ports: Vec<String> = t.dst_ports.iter().map(ToString::to_string).collect();
            let entries = if t.flows == 1 { "entry" } else { "entries" };
            writeln!(
                f,
                "  protocol {proto:>3}:  ports {} ({} {entries})",
                ports.join(","),
                t.flows
            )?;
        }
        write!(
            f,
            "  rules: {} resolved, {} after pruning",
            self.rule_count.before, self.rule_count.after
        )
    }
}
