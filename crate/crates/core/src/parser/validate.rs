// SPDX-License-Identifier: Apache-2.0

use std::collections::{BTreeMap, BTreeSet};

use super::keys;
use crate::finding::{Finding, FindingCode};
use crate::model::{
    url_authority, Acl, Action, EndpointSpec, IpVersion, MudFile, RuleRef, CACHE_VALIDITY_RANGE,
    PROTO_TCP, PROTO_UDP, SUPPORTED_MUD_VERSION,
};

/// Semantic protocol checks over a typed file. Total; returns every finding at once.
///
/// Covered: header values (version, MUD-URL authority, timestamp, cache validity), ACL
/// reference integrity, duplicate names, endpoint syntax and address family, port and
/// transport consistency, `direction-initiated` on non-TCP, unused ACLs and explicit drops.
pub fn validate_semantics(file: &MudFile) -> Vec<Finding> {
    validate_filtered(file, &BTreeSet::new())
}

pub(super) fn validate_filtered(file: &MudFile, partial_acls: &BTreeSet<String>) -> Vec<Finding> {
    let mut out = Vec::new();
    let mud = format!("/{}", keys::MUD);
    let acl_root = format!("/{}/acl", keys::ACLS);

    if file.mud_version != SUPPORTED_MUD_VERSION {
        out.push(
            Finding::protocol_error(
                FindingCode::UnsupportedVersion,
                format!("unsupported mud-version {}", file.mud_version),
            )
            .at(format!("{mud}/{}", keys::MUD_VERSION)),
        );
    }

    match url::Url::parse(&file.mud_url) {
        Err(e) => out.push(
            Finding::protocol_error(
                FindingCode::InvalidMudUrl,
                format!("mud-url \"{}\" is not a URL: {e}", file.mud_url),
            )
            .at(format!("{mud}/{}", keys::MUD_URL)),
        ),
        Ok(_) if url_authority(&file.mud_url).is_none() => out.push(
            Finding::protocol_error(
                FindingCode::MissingUrlAuthority,
                format!("mud-url \"{}\" has no authority component", file.mud_url),
            )
            .at(format!("{mud}/{}", keys::MUD_URL)),
        ),
        Ok(_) => {}
    }

    if chrono::DateTime::parse_from_rfc3339(&file.last_update).is_err() {
        out.push(
            Finding::protocol_error(
                FindingCode::InvalidTimestamp,
                format!(
                    "last-update \"{}\" is not an ISO-8601 date-time",
                    file.last_update
                ),
            )
            .at(format!("{mud}/{}", keys::LAST_UPDATE)),
        );
    }

    if !CACHE_VALIDITY_RANGE.contains(&file.cache_validity) {
        out.push(
            Finding::protocol_error(
                FindingCode::CacheValidityOutOfRange,
                format!(
                    "cache-validity {} outside {}..={} hours",
                    file.cache_validity,
                    CACHE_VALIDITY_RANGE.start(),
                    CACHE_VALIDITY_RANGE.end()
                ),
            )
            .at(format!("{mud}/{}", keys::CACHE_VALIDITY)),
        );
    }

    if let Some(doc) = &file.documentation {
        if url::Url::parse(doc).is_err() {
            out.push(
                Finding::protocol_error(
                    FindingCode::InvalidValue,
                    format!("documentation \"{doc}\" is not a URL"),
                )
                .at(format!("{mud}/{}", keys::DOCUMENTATION)),
            );
        }
    }

    let mut seen: BTreeMap<&str, usize> = BTreeMap::new();
    for (i, acl) in file.acls.iter().enumerate() {
        if seen.insert(acl.name.as_str(), i).is_some() {
            out.push(
                Finding::protocol_error(
                    FindingCode::DuplicateAclName,
                    format!("ACL \"{}\" is defined more than once", acl.name),
                )
                .at(format!("{acl_root}/{i}")),
            );
        }
    }

    for (policy_key, names) in [
        (keys::FROM_DEVICE_POLICY, &file.from_device_policy),
        (keys::TO_DEVICE_POLICY, &file.to_device_policy),
    ] {
        for (i, name) in names.iter().enumerate() {
            if !seen.contains_key(name.as_str()) {
                out.push(
                    Finding::protocol_error(
                        FindingCode::DanglingAclReference,
                        format!("dangling ACL reference: {policy_key} names \"{name}\" which is not defined"),
                    )
                    .at(format!("{mud}/{policy_key}/access-lists/access-list/{i}")),
                );
            }
        }
    }

    let referenced: BTreeSet<&str> = file
        .from_device_policy
        .iter()
        .chain(&file.to_device_policy)
        .map(String::as_str)
        .collect();

    for (i, acl) in file.acls.iter().enumerate() {
        let at = format!("{acl_root}/{i}");
        if !referenced.contains(acl.name.as_str()) {
            out.push(
                Finding::semantic_warning(
                    FindingCode::UnusedAcl,
                    format!(
                        "unused ACL \"{}\" is referenced by neither policy",
                        acl.name
                    ),
                )
                .at(at.clone()),
            );
        }
        if acl.aces.is_empty() && !partial_acls.contains(&acl.name) {
            out.push(
                Finding::protocol_error(
                    FindingCode::EmptyAcl,
                    format!("ACL \"{}\" has no ACEs", acl.name),
                )
                .at(at.clone()),
            );
        }
        check_aces(file, acl, &at, &mut out);
    }

    out
}

fn check_aces(file: &MudFile, acl: &Acl, acl_at: &str, out: &mut Vec<Finding>) {
    let mut names = BTreeSet::new();
    for (j, ace) in acl.aces.iter().enumerate() {
        let at = format!("{acl_at}/aces/ace/{j}");
        let rule = RuleRef {
            source_file: file.mud_url.clone(),
            acl: acl.name.clone(),
            ace: ace.name.clone(),
            abstraction: Some(ace.matches.endpoint.kind()),
        };
        let mut push = |f: Finding| out.push(f.at(at.clone()).with_refs([rule.clone()]));

        if !names.insert(ace.name.as_str()) {
            push(Finding::protocol_error(
                FindingCode::DuplicateAceName,
                format!(
                    "ACE name \"{}\" repeats within ACL \"{}\"",
                    ace.name, acl.name
                ),
            ));
        }

        if let Some(problem) = endpoint_problem(&ace.matches.endpoint, acl.ip_version) {
            push(problem);
        }

        let m = &ace.matches;
        for port in [m.src_port, m.dst_port].into_iter().flatten() {
            if !port.is_valid() {
                push(Finding::protocol_error(
                    FindingCode::InvertedPortRange,
                    format!(
                        "port range {}..{} has lower bound above upper bound",
                        port.lo, port.hi
                    ),
                ));
            }
        }
        let has_ports = m.src_port.is_some() || m.dst_port.is_some();
        if has_ports && !matches!(m.protocol, Some(PROTO_TCP | PROTO_UDP)) {
            push(Finding::protocol_error(
                FindingCode::PortsWithoutTransport,
                "port matches require protocol TCP (6) or UDP (17)",
            ));
        }
        if m.direction_initiated.is_some() && m.protocol != Some(PROTO_TCP) {
            push(Finding::protocol_error(
                FindingCode::DirectionInitiatedRequiresTcp,
                match m.protocol {
                    Some(p) => format!("direction-initiated requires TCP, but protocol is {p}"),
                    None => {
                        "direction-initiated requires TCP, but no protocol is matched".to_owned()
                    }
                },
            ));
        }
        if ace.action == Action::Drop {
            push(Finding::semantic_warning(
                FindingCode::DropInAllowList,
                format!(
                    "ACE \"{}\" drops traffic; MUD policies are allow-lists with default deny",
                    ace.name
                ),
            ));
        }
    }
}

fn endpoint_problem(spec: &EndpointSpec, family: IpVersion) -> Option<Finding> {
    let invalid = |msg: String| Some(Finding::protocol_error(FindingCode::InvalidEndpoint, msg));
    match spec {
        EndpointSpec::DnsName(name) if !is_hostname(name) => {
            invalid(format!("\"{name}\" is not a valid host name"))
        }
        EndpointSpec::Manufacturer(a) if !is_authority(a) => {
            invalid(format!("manufacturer \"{a}\" is not a valid DNS authority"))
        }
        EndpointSpec::Model(u) | EndpointSpec::Controller(u) if url::Url::parse(u).is_err() => {
            invalid(format!("{} \"{u}\" is not a URI", spec.kind()))
        }
        EndpointSpec::ExplicitNetwork(net) => {
            let net_family = match net {
                ipnet::IpNet::V4(_) => IpVersion::V4,
                ipnet::IpNet::V6(_) => IpVersion::V6,
            };
            (net_family != family).then(|| {
                Finding::protocol_error(
                    FindingCode::AddressFamilyMismatch,
                    format!("network {net} does not belong to the ACL's address family"),
                )
            })
        }
        _ => None,
    }
}

/// RFC 1123 host name: dot-separated labels of letters, digits and inner hyphens.
pub(crate) fn is_hostname(name: &str) -> bool {
    let name = name.strip_suffix('.').unwrap_or(name);
    !name.is_empty()
        && name.len() <= 253
        && name.split('.').all(|label| {
            !label.is_empty()
                && label.len() <= 63
                && !label.starts_with('-')
                && !label.ends_with('-')
                && label
                    .bytes()
                    .all(|b| b.is_ascii_alphanumeric() || b == b'-')
        })
}

/// `host[:port]`.
pub(crate) fn is_authority(authority: &str) -> bool {
    match authority.rsplit_once(':') {
        Some((host, port)) => is_hostname(host) && !port.is_empty() && port.parse::<u16>().is_ok(),
        None => is_hostname(authority),
    }
}
