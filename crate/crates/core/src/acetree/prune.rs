// SPDX-License-Identifier: Apache-2.0

use crate::finding::{Finding, FindingCode, FindingKind, Severity};
use crate::model::{Action, ConcreteFlow};

use super::AceTree;

fn refs_of<'a>(flows: impl IntoIterator<Item = &'a ConcreteFlow>) -> Vec<crate::model::RuleRef> {
    flows
        .into_iter()
        .flat_map(|f| f.provenance.iter().cloned())
        .collect()
}

/// Report duplicates, remove subsumed leaves, and report overlaps and conflicts.
///
/// A leaf is removed when another leaf with the same action matches a strict superset of
/// its packets; every removed leaf is reported against a subsumer that is itself kept,
/// so the permitted-packet set is unchanged. Leaves with unresolved endpoints take no part.
pub fn prune_tree(mut tree: AceTree) -> (AceTree, Vec<Finding>) {
    let mut findings = Vec::new();

    for view in tree.leaves().filter(|v| v.leaf.inserts > 1) {
        let flow = view.to_flow();
        findings.push(
            Finding::new(
                FindingKind::Duplicate,
                Severity::Info,
                FindingCode::DuplicateRule,
                format!(
                    "{} identical entries for {} {} {} merged",
                    view.leaf.inserts, flow.device, flow.direction, flow.remote
                ),
            )
            .with_refs(view.leaf.occurrences.iter().cloned())
            .with_flows([flow]),
        );
    }

    let flows: Vec<ConcreteFlow> = tree
        .leaves()
        .filter(|v| !v.remote.is_unresolved())
        .map(|v| v.to_flow())
        .collect();
    let mut removed = Vec::new();

    // Leaves come out in path order, so each (device, direction) group is contiguous.
    for group in flows.chunk_by(|a, b| a.device == b.device && a.direction == b.direction) {
        let contains = |i: usize, j: usize| {
            i != j && group[i].action == group[j].action && group[i].match_contains(&group[j])
        };
        let subsumed: Vec<bool> = (0..group.len())
            .map(|j| (0..group.len()).any(|i| contains(i, j)))
            .collect();

        for j in (0..group.len()).filter(|&j| subsumed[j]) {
            // Among the containers of j, a maximal one is never itself subsumed.
            let by = (0..group.len())
                .find(|&i| !subsumed[i] && contains(i, j))
                .expect("a maximal container exists");
            let (small, big) = (&group[j], &group[by]);
            findings.push(
                Finding::new(
                    FindingKind::Subsumed,
                    Severity::Info,
                    FindingCode::SubsumedRule,
                    format!(
                        "{} {} {} {}/{} is covered by {}/{} and was pruned",
                        small.device,
                        small.direction,
                        small.remote,
                        proto_label(small.protocol),
                        small.dst_port,
                        big.remote,
                        big.dst_port
                    ),
                )
                .with_refs(refs_of([small, big]))
                .with_flows([small.clone(), big.clone()]),
            );
            removed.push(small.clone());
        }

        let kept: Vec<&ConcreteFlow> = group
            .iter()
            .zip(&subsumed)
            .filter(|(_, s)| !**s)
            .map(|(f, _)| f)
            .collect();
        for (i, a) in kept.iter().enumerate() {
            for b in &kept[i + 1..] {
                if !a.match_intersects(b) {
                    continue;
                }
                if a.action != b.action {
                    let (accept, drop) = if a.action == Action::Accept {
                        (a, b)
                    } else {
                        (b, a)
                    };
                    findings.push(
                        Finding::new(
                            FindingKind::Conflict,
                            Severity::Warning,
                            FindingCode::ConflictingRules,
                            format!(
                                "{} {}: accept toward {} and drop toward {} match common packets",
                                a.device, a.direction, accept.remote, drop.remote
                            ),
                        )
                        .with_refs(refs_of([*accept, *drop]))
                        .with_flows([(*accept).clone(), (*drop).clone()]),
                    );
                } else if !a.match_contains(b) && !b.match_contains(a) {
                    findings.push(
                        Finding::new(
                            FindingKind::Overlap,
                            Severity::Info,
                            FindingCode::OverlappingRules,
                            format!(
                                "{} {}: entries toward {} ({}) and {} ({}) partially overlap",
                                a.device, a.direction, a.remote, a.dst_port, b.remote, b.dst_port
                            ),
                        )
                        .with_refs(refs_of([*a, *b]))
                        .with_flows([(*a).clone(), (*b).clone()]),
                    );
                }
            }
        }
    }

    for flow in &removed {
        tree.remove(flow);
    }
    (tree, findings)
}

fn proto_label(p: Option<u8>) -> String {
    p.map_or_else(|| "any".to_owned(), |p| p.to_string())
}
