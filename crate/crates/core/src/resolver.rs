// SPDX-License-Identifier: Apache-2.0

//! Expansion of MUD abstractions into concrete flows.

use std::collections::BTreeSet;

use crate::context::DeploymentContext;
use crate::finding::{Finding, FindingCode, FindingKind, Severity};
use crate::model::{
    url_authority, ConcreteFlow, DeviceId, EndpointSpec, MudFile, PortSpec, ResolvedEndpoint,
    RuleRef,
};

/// Resolve one abstraction for `device` against the context.
///
/// An empty result always comes with an `unresolved_abstraction` finding. Same-manufacturer,
/// manufacturer and model never resolve to the device itself.
pub fn resolve_endpoint(
    spec: &EndpointSpec,
    device: &DeviceId,
    ctx: &DeploymentContext,
) -> (Vec<ResolvedEndpoint>, Option<Finding>) {
    let peers = |keep: &dyn Fn(&crate::context::Device) -> bool| -> Vec<ResolvedEndpoint> {
        ctx.devices()
            .iter()
            .filter(|d| &d.id != device && keep(d))
            .map(|d| ResolvedEndpoint::LocalDevice(d.id.clone()))
            .collect()
    };

    let (endpoints, missing) = match spec {
        EndpointSpec::DnsName(domain) => {
            let mut out = vec![ResolvedEndpoint::InternetDomain(domain.clone())];
            out.extend(
                ctx.dns_addresses(domain)
                    .map(|net| ResolvedEndpoint::InternetNetwork(*net)),
            );
            (out, None)
        }
        EndpointSpec::LocalNetworks => (vec![ResolvedEndpoint::LocalAny], None),
        EndpointSpec::ExplicitNetwork(net) => {
            (vec![ResolvedEndpoint::InternetNetwork(net.trunc())], None)
        }
        EndpointSpec::Manufacturer(authority) => (
            peers(&|d| url_authority(&d.mud_url).as_deref() == Some(authority.as_str())),
            Some((
                Severity::Info,
                format!("no other device in the deployment is made by {authority}"),
            )),
        ),
        EndpointSpec::SameManufacturer => {
            let own = ctx.authority(device).map(str::to_owned);
            let found = match &own {
                Some(own) => peers(&|d| url_authority(&d.mud_url).as_deref() == Some(own.as_str())),
                None => Vec::new(),
            };
            let who = own.unwrap_or_else(|| "an unknown manufacturer".to_owned());
            (
                found,
                Some((
                    Severity::Info,
                    format!("no other device made by {who} is deployed"),
                )),
            )
        }
        EndpointSpec::Model(model) => (
            peers(&|d| &d.mud_url == model),
            Some((
                Severity::Info,
                format!("no other instance of model {model} is deployed"),
            )),
        ),
        EndpointSpec::Controller(class) => (
            ctx.controllers(class)
                .map(|id| ResolvedEndpoint::LocalDevice(id.clone()))
                .collect(),
            Some((
                Severity::Warning,
                format!("no controller is bound for class {class}"),
            )),
        ),
        EndpointSpec::MyController => (
            ctx.my_controllers(device)
                .map(|id| ResolvedEndpoint::LocalDevice(id.clone()))
                .collect(),
            Some((
                Severity::Warning,
                format!("device {device} has no my-controller binding"),
            )),
        ),
    };

    let finding = match missing {
        Some((severity, message)) if endpoints.is_empty() => Some(Finding::new(
            FindingKind::UnresolvedAbstraction,
            severity,
            FindingCode::UnresolvedAbstraction,
            message,
        )),
        _ => None,
    };
    (endpoints, finding)
}

/// Resolve every ACE reachable from the file's policies into flows for `device`.
///
/// A flow's direction comes from the policy that referenced its ACL. ACEs that resolve to
/// nothing yield one placeholder flow with an unresolved endpoint, plus a finding.
pub fn resolve_file(
    device: &DeviceId,
    file: &MudFile,
    ctx: &DeploymentContext,
) -> (Vec<ConcreteFlow>, Vec<Finding>) {
    let mut flows = Vec::new();
    let mut findings = Vec::new();

    match ctx.device(device) {
        Some(d) if d.mud_url != file.mud_url => findings.push(Finding::semantic_warning(
            FindingCode::DeviceUrlMismatch,
            format!(
                "device {device} announces {} but was given the file for {}",
                d.mud_url, file.mud_url
            ),
        )),
        _ => {}
    }

    for (direction, acl_name) in file.policies() {
        let Some(acl) = file.acl(acl_name) else {
            continue;
        };
        for ace in &acl.aces {
            let m = &ace.matches;
            let rule = RuleRef {
                source_file: file.mud_url.clone(),
                acl: acl.name.clone(),
                ace: ace.name.clone(),
                abstraction: Some(m.endpoint.kind()),
            };
            let flow = |remote: ResolvedEndpoint| ConcreteFlow {
                device: device.clone(),
                direction,
                remote,
                protocol: m.protocol,
                src_port: m.src_port.unwrap_or(PortSpec::FULL),
                dst_port: m.dst_port.unwrap_or(PortSpec::FULL),
                direction_initiated: m.direction_initiated,
                action: ace.action,
                provenance: BTreeSet::from([rule.clone()]),
            };

            let (endpoints, finding) = resolve_endpoint(&m.endpoint, device, ctx);
            match finding {
                Some(finding) => {
                    let placeholder =
                        flow(ResolvedEndpoint::UnresolvedAbstraction(m.endpoint.clone()));
                    let message = format!("{}/{}: {}", acl.name, ace.name, finding.message);
                    findings.push(
                        Finding { message, ..finding }
                            .with_refs([rule.clone()])
                            .with_flows([placeholder.clone()]),
                    );
                    flows.push(placeholder);
                }
                None => flows.extend(endpoints.into_iter().map(flow)),
            }
        }
    }
    (flows, findings)
}
