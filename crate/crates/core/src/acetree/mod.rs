// SPDX-License-Identifier: Apache-2.0

//! The ACE tree: merged flows keyed by a fixed dimension order, with pruning and queries.
//!
//! Levels, root to leaf: device, direction, remote endpoint, protocol, destination port
//! range, source port range, `direction-initiated`, action. A full path identifies a
//! match tuple plus action, so inserting an identical flow twice merges provenance
//! instead of adding a leaf.

mod merge;
mod prune;
mod query;

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::model::{
    Action, ConcreteFlow, DeviceId, Direction, PortSpec, ResolvedEndpoint, RuleRef,
};

pub use merge::{flows_between, merge, MergedRuleset, Peer};
pub use prune::prune_tree;
pub use query::{is_allowed, Decision, PacketQuery, QueryError, QueryOutcome, Remote};

/// Protocol level key; `Any` is the unconstrained protocol.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ProtocolKey {
    Any,
    Number(u8),
}

impl From<Option<u8>> for ProtocolKey {
    fn from(p: Option<u8>) -> Self {
        p.map_or(ProtocolKey::Any, ProtocolKey::Number)
    }
}

impl From<ProtocolKey> for Option<u8> {
    fn from(k: ProtocolKey) -> Self {
        match k {
            ProtocolKey::Any => None,
            ProtocolKey::Number(p) => Some(p),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum InitiationKey {
    Any,
    Initiated(Direction),
}

impl From<Option<Direction>> for InitiationKey {
    fn from(d: Option<Direction>) -> Self {
        d.map_or(InitiationKey::Any, InitiationKey::Initiated)
    }
}

impl From<InitiationKey> for Option<Direction> {
    fn from(k: InitiationKey) -> Self {
        match k {
            InitiationKey::Any => None,
            InitiationKey::Initiated(d) => Some(d),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Leaf {
    pub provenance: BTreeSet<RuleRef>,
    /// Provenance of every flow merged into this leaf, in insertion order.
    pub occurrences: Vec<RuleRef>,
    /// Number of flows merged into this leaf.
    pub inserts: usize,
}

type ActionLevel = BTreeMap<Action, Leaf>;
type InitiationLevel = BTreeMap<InitiationKey, ActionLevel>;
type SrcLevel = BTreeMap<PortSpec, InitiationLevel>;
type DstLevel = BTreeMap<PortSpec, SrcLevel>;
type ProtocolLevel = BTreeMap<ProtocolKey, DstLevel>;
type EndpointLevel = BTreeMap<ResolvedEndpoint, ProtocolLevel>;
type DirectionLevel = BTreeMap<Direction, EndpointLevel>;

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct AceTree {
    devices: BTreeMap<DeviceId, DirectionLevel>,
    len: usize,
}

/// Borrowed view of one leaf together with its path.
#[derive(Debug, Clone, Copy)]
pub struct LeafView<'t> {
    pub device: &'t DeviceId,
    pub direction: Direction,
    pub remote: &'t ResolvedEndpoint,
    pub protocol: ProtocolKey,
    pub dst_port: PortSpec,
    pub src_port: PortSpec,
    pub initiated: InitiationKey,
    pub action: Action,
    pub leaf: &'t Leaf,
}

impl LeafView<'_> {
    pub fn to_flow(&self) -> ConcreteFlow {
        ConcreteFlow {
            device: self.device.clone(),
            direction: self.direction,
            remote: self.remote.clone(),
            protocol: self.protocol.into(),
            src_port: self.src_port,
            dst_port: self.dst_port,
            direction_initiated: self.initiated.into(),
            action: self.action,
            provenance: self.leaf.provenance.clone(),
        }
    }
}

/// Build a tree from canonical flows, merging flows with identical paths.
pub fn build_tree(flows: impl IntoIterator<Item = ConcreteFlow>) -> AceTree {
    let mut tree = AceTree::new();
    for flow in flows {
        tree.insert(flow);
    }
    tree
}

impl AceTree {
    pub fn new() -> Self {
        Self::default()
    }

    /// Number of leaves.
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Insert a flow; returns `true` when it merged into an existing leaf.
    pub fn insert(&mut self, flow: ConcreteFlow) -> bool {
        let leaf = self
            .devices
            .entry(flow.device)
            .or_default()
            .entry(flow.direction)
            .or_default()
            .entry(flow.remote)
            .or_default()
            .entry(flow.protocol.into())
            .or_default()
            .entry(flow.dst_port)
            .or_default()
            .entry(flow.src_port)
            .or_default()
            .entry(flow.direction_initiated.into())
            .or_default()
            .entry(flow.action)
            .or_default();
        let merged = leaf.inserts > 0;
        if !merged {
            self.len += 1;
        }
        leaf.inserts += 1;
        leaf.occurrences.extend(flow.provenance.iter().cloned());
        leaf.provenance.extend(flow.provenance);
        merged
    }

    /// Leaf at the flow's path, if any.
    pub fn get(&self, flow: &ConcreteFlow) -> Option<&Leaf> {
        self.devices
            .get(&flow.device)?
            .get(&flow.direction)?
            .get(&flow.remote)?
            .get(&flow.protocol.into())?
            .get(&flow.dst_port)?
            .get(&flow.src_port)?
            .get(&flow.direction_initiated.into())?
            .get(&flow.action)
    }

    /// Remove the leaf at the flow's path, dropping interior nodes left empty.
    pub fn remove(&mut self, flow: &ConcreteFlow) -> Option<Leaf> {
        let leaf = self
            .devices
            .get_mut(&flow.device)?
            .get_mut(&flow.direction)?
            .get_mut(&flow.remote)?
            .get_mut(&flow.protocol.into())?
            .get_mut(&flow.dst_port)?
            .get_mut(&flow.src_port)?
            .get_mut(&flow.direction_initiated.into())?
            .remove(&flow.action)?;
        self.len -= 1;
        self.compact();
        Some(leaf)
    }

    fn compact(&mut self) {
        self.devices.retain(|_, dirs| {
            dirs.retain(|_, eps| {
                eps.retain(|_, protos| {
                    protos.retain(|_, dsts| {
                        dsts.retain(|_, srcs| {
                            srcs.retain(|_, inits| {
                                inits.retain(|_, actions| !actions.is_empty());
                                !inits.is_empty()
                            });
                            !srcs.is_empty()
                        });
                        !dsts.is_empty()
                    });
                    !protos.is_empty()
                });
                !eps.is_empty()
            });
            !dirs.is_empty()
        });
    }

    /// Every leaf in path order.
    pub fn leaves(&self) -> impl Iterator<Item = LeafView<'_>> {
        self.devices.iter().flat_map(|(device, dirs)| {
            dirs.iter().flat_map(move |(direction, eps)| {
                eps.iter().flat_map(move |(remote, protos)| {
                    protos.iter().flat_map(move |(protocol, dsts)| {
                        dsts.iter().flat_map(move |(dst_port, srcs)| {
                            srcs.iter().flat_map(move |(src_port, inits)| {
                                inits.iter().flat_map(move |(initiated, actions)| {
                                    actions.iter().map(move |(action, leaf)| LeafView {
                                        device,
                                        direction: *direction,
                                        remote,
                                        protocol: *protocol,
                                        dst_port: *dst_port,
                                        src_port: *src_port,
                                        initiated: *initiated,
                                        action: *action,
                                        leaf,
                                    })
                                })
                            })
                        })
                    })
                })
            })
        })
    }

    /// The leaf set as flows, in path order.
    pub fn flows(&self) -> Vec<ConcreteFlow> {
        self.leaves().map(|l| l.to_flow()).collect()
    }

    pub fn devices(&self) -> impl Iterator<Item = &DeviceId> {
        self.devices.keys()
    }

    /// Endpoint subtree for one device and direction.
    fn endpoints(&self, device: &DeviceId, direction: Direction) -> Option<&EndpointLevel> {
        self.devices.get(device)?.get(&direction)
    }
}
