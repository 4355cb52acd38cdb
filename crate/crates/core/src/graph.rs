// SPDX-License-Identifier: Apache-2.0

//! Node/edge projection of a merged ruleset, as consumed by the web UI.
//!
//! JSON schema (version 1): `{"nodes": [Node], "edges": [Edge]}` where
//! `Node = {id, kind, label}` and
//! `Edge = {id, source, target, protocol, dst_ports, src_ports, direction_initiated, action, provenance}`.
//! Port lists hold `{lo, hi}` ranges; `protocol` and `direction_initiated` may be null.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::acetree::MergedRuleset;
use crate::model::{
    Action, ConcreteFlow, DeviceId, Direction, EndpointSpec, PortSpec, ResolvedEndpoint, RuleRef,
};

pub const GRAPH_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NodeKind {
    Device,
    Domain,
    Network,
    LocalAny,
    ControllerClass,
    Unresolved,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphNode {
    pub id: String,
    pub kind: NodeKind,
    pub label: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphEdge {
    pub id: String,
    pub source: String,
    pub target: String,
    pub protocol: Option<u8>,
    pub dst_ports: Vec<PortSpec>,
    pub src_ports: Vec<PortSpec>,
    pub direction_initiated: Option<Direction>,
    pub action: Action,
    pub provenance: Vec<RuleRef>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FlowGraph {
    pub nodes: Vec<GraphNode>,
    pub edges: Vec<GraphEdge>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExportFormat {
    Json,
    Dot,
}

fn device_node(id: &DeviceId) -> GraphNode {
    GraphNode {
        id: format!("device:{id}"),
        kind: NodeKind::Device,
        label: id.to_string(),
    }
}

fn endpoint_node(remote: &ResolvedEndpoint) -> GraphNode {
    let (id, kind, label) = match remote {
        ResolvedEndpoint::LocalDevice(id) => return device_node(id),
        ResolvedEndpoint::InternetDomain(d) => (format!("domain:{d}"), NodeKind::Domain, d.clone()),
        ResolvedEndpoint::InternetNetwork(n) => {
            (format!("network:{n}"), NodeKind::Network, n.to_string())
        }
        ResolvedEndpoint::LocalAny => (
            "local-any".to_owned(),
            NodeKind::LocalAny,
            "local networks".to_owned(),
        ),
        ResolvedEndpoint::UnresolvedAbstraction(EndpointSpec::Controller(class)) => (
            format!("controller:{class}"),
            NodeKind::ControllerClass,
            class.clone(),
        ),
        ResolvedEndpoint::UnresolvedAbstraction(spec) => {
            let id = match spec.detail() {
                Some(detail) => format!("unresolved:{}:{detail}", spec.kind()),
                None => format!("unresolved:{}", spec.kind()),
            };
            (id, NodeKind::Unresolved, format!("{spec} (unbound)"))
        }
    };
    GraphNode { id, kind, label }
}

/// One node per device and distinct endpoint, one edge per leaf.
///
/// A from-device leaf of one device and a to-device leaf of its peer can describe the
/// same edge; such leaves share one edge with the union of their provenance.
///
/// Edges point from sender to receiver: device to endpoint for from-device flows,
/// endpoint to device for to-device flows.
pub fn to_graph(ruleset: &MergedRuleset) -> FlowGraph {
    let mut graph = FlowGraph::default();
    let mut seen = BTreeSet::new();
    let mut add = |graph: &mut FlowGraph, node: GraphNode| {
        let id = node.id.clone();
        if seen.insert(id.clone()) {
            graph.nodes.push(node);
        }
        id
    };

    for device in &ruleset.devices {
        add(&mut graph, device_node(device));
    }
    let mut index: BTreeMap<EdgeKey, usize> = BTreeMap::new();
    for flow in &ruleset.flows {
        let device = add(&mut graph, device_node(&flow.device));
        let remote = add(&mut graph, endpoint_node(&flow.remote));
        let (source, target) = match flow.direction {
            Direction::FromDevice => (device, remote),
            Direction::ToDevice => (remote, device),
        };
        let key = (
            source.clone(),
            target.clone(),
            flow.protocol,
            flow.dst_port,
            flow.src_port,
            flow.direction_initiated,
            flow.action,
        );
        match index.get(&key) {
            Some(&i) => {
                let provenance = &mut graph.edges[i].provenance;
                provenance.extend(flow.provenance.iter().cloned());
                provenance.sort();
                provenance.dedup();
            }
            None => {
                index.insert(key, graph.edges.len());
                let n = graph.edges.len();
                graph.edges.push(edge(n, source, target, flow));
            }
        }
    }
    graph
}

type EdgeKey = (
    String,
    String,
    Option<u8>,
    PortSpec,
    PortSpec,
    Option<Direction>,
    Action,
);

fn edge(n: usize, source: String, target: String, flow: &ConcreteFlow) -> GraphEdge {
    GraphEdge {
        id: format!("e{n}"),
        source,
        target,
        protocol: flow.protocol,
        dst_ports: vec![flow.dst_port],
        src_ports: vec![flow.src_port],
        direction_initiated: flow.direction_initiated,
        action: flow.action,
        provenance: flow.provenance.iter().cloned().collect(),
    }
}

pub fn export_graph(graph: &FlowGraph, format: ExportFormat) -> Vec<u8> {
    match format {
        ExportFormat::Json => {
            let mut out = serde_json::to_vec_pretty(graph).expect("graph serializes");
            out.push(b'\n');
            out
        }
        ExportFormat::Dot => to_dot(graph).into_bytes(),
    }
}

fn quote(s: &str) -> String {
    format!("\"{}\"", s.replace('\\', "\\\\").replace('"', "\\\""))
}

fn ports_label(ports: &[PortSpec]) -> String {
    ports
        .iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join(",")
}

/// Edge label `proto/ports/action`, e.g. `6/443/accept` or `any/any/drop`.
pub fn edge_label(edge: &GraphEdge) -> String {
    let proto = edge
        .protocol
        .map_or_else(|| "any".to_owned(), |p| p.to_string());
    format!("{proto}/{}/{}", ports_label(&edge.dst_ports), edge.action)
}

fn to_dot(graph: &FlowGraph) -> String {
    let mut out = String::from("digraph mud {\n  rankdir=LR;\n");
    for node in &graph.nodes {
        let shape = match node.kind {
            NodeKind::Device => "box",
            NodeKind::Domain | NodeKind::Network => "ellipse",
            NodeKind::LocalAny => "hexagon",
            NodeKind::ControllerClass => "component",
            NodeKind::Unresolved => "octagon",
        };
        let style = if node.kind == NodeKind::Unresolved {
            ", style=dashed"
        } else {
            ""
        };
        let _ = writeln!(
            out,
            "  {} [label={}, shape={shape}{style}];",
            quote(&node.id),
            quote(&node.label)
        );
    }
    for edge in &graph.edges {
        let color = match edge.action {
            Action::Accept => "",
            Action::Drop => ", color=red",
        };
        let _ = writeln!(
            out,
            "  {} -> {} [label={}{color}];",
            quote(&edge.source),
            quote(&edge.target),
            quote(&edge_label(edge))
        );
    }
    out.push_str("}\n");
    out
}
