// SPDX-License-Identifier: Apache-2.0

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{build_tree, prune_tree, AceTree};
use crate::context::DeploymentContext;
use crate::finding::{Finding, FindingKind};
use crate::model::{canonical_domain, ConcreteFlow, DeviceId, MudFile, ResolvedEndpoint};
use crate::resolver::resolve_file;

/// Result of merging one or more files over a deployment.
#[derive(Debug, Clone, Default)]
pub struct MergedRuleset {
    pub tree: AceTree,
    /// Leaf set of `tree`, in path order.
    pub flows: Vec<ConcreteFlow>,
    pub findings: Vec<Finding>,
    /// Every device of the deployment, whether or not it has flows.
    pub devices: Vec<DeviceId>,
    /// Flows removed as subsumed.
    pub pruned: Vec<ConcreteFlow>,
    /// Resolved flow count per device before deduplication and pruning.
    pub resolved_counts: BTreeMap<DeviceId, usize>,
}

impl MergedRuleset {
    pub fn has_device(&self, id: &DeviceId) -> bool {
        self.devices.contains(id)
    }

    pub fn flows_of<'a>(
        &'a self,
        device: &'a DeviceId,
    ) -> impl Iterator<Item = &'a ConcreteFlow> + 'a {
        self.flows.iter().filter(move |f| &f.device == device)
    }
}

/// Resolve each entry, build the ACE tree from all flows, and prune it.
pub fn merge(entries: &[(DeviceId, MudFile)], ctx: &DeploymentContext) -> MergedRuleset {
    let mut flows = Vec::new();
    let mut findings = Vec::new();
    let mut resolved_counts: BTreeMap<DeviceId, usize> = BTreeMap::new();
    for (device, file) in entries {
        let (f, r) = resolve_file(device, file, ctx);
        *resolved_counts.entry(device.clone()).or_default() += f.len();
        flows.extend(f);
        findings.extend(r);
    }

    let mut devices: Vec<DeviceId> = ctx.devices().iter().map(|d| d.id.clone()).collect();
    for (device, _) in entries {
        if !devices.contains(device) {
            devices.push(device.clone());
        }
    }
    for device in &devices {
        resolved_counts.entry(device.clone()).or_default();
    }

    let (tree, prune_findings) = prune_tree(build_tree(flows));
    let pruned = prune_findings
        .iter()
        .filter(|f| f.kind == FindingKind::Subsumed)
        .map(|f| f.flows[0].clone())
        .collect();
    findings.extend(prune_findings);

    MergedRuleset {
        flows: tree.flows(),
        tree,
        findings,
        devices,
        pruned,
        resolved_counts,
    }
}

/// The other side of a [`flows_between`] lookup.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "kebab-case")]
pub enum Peer {
    Device(DeviceId),
    Domain(String),
}

/// Flows of device `a`, either direction, whose endpoint covers `b`.
pub fn flows_between(ruleset: &MergedRuleset, a: &DeviceId, b: &Peer) -> Vec<ConcreteFlow> {
    let covers = |remote: &ResolvedEndpoint| match (remote, b) {
        (ResolvedEndpoint::LocalDevice(id), Peer::Device(other)) => id == other,
        (ResolvedEndpoint::LocalAny, Peer::Device(_)) => true,
        (ResolvedEndpoint::InternetDomain(d), Peer::Domain(other)) => *d == canonical_domain(other),
        _ => false,
    };
    ruleset
        .flows_of(a)
        .filter(|f| covers(&f.remote))
        .cloned()
        .collect()
}
