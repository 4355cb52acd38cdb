// SPDX-License-Identifier: Apache-2.0

use std::collections::{BTreeMap, BTreeSet};

use ipnet::IpNet;
use serde_json::{Map, Value};

use super::keys;
use crate::finding::{Finding, FindingCode};
use crate::model::{
    canonical_domain, Ace, Acl, Action, Direction, EndpointSpec, IpVersion, MatchSet, MudFile,
    PortSpec, DEFAULT_CACHE_VALIDITY, PROTO_TCP, PROTO_UDP,
};

pub(super) struct Candidate {
    pub file: MudFile,
    /// ACLs that lost ACEs to decode errors; their emptiness is not reported again.
    pub partial_acls: BTreeSet<String>,
}

/// Which side of the packet an address-style endpoint was written on.
#[derive(Clone, Copy, PartialEq, Eq)]
enum Side {
    Source,
    Destination,
}

struct Decoder {
    findings: Vec<Finding>,
}

pub(super) fn decode(bytes: &[u8]) -> (Option<Candidate>, Vec<Finding>) {
    let mut d = Decoder {
        findings: Vec::new(),
    };
    let text = match std::str::from_utf8(bytes) {
        Ok(t) => t,
        Err(e) => {
            d.error(
                FindingCode::InvalidUtf8,
                "",
                format!("document is not valid UTF-8: {e}"),
            );
            return (None, d.findings);
        }
    };
    let root: Value = match serde_json::from_str(text) {
        Ok(v) => v,
        Err(e) => {
            d.error(
                FindingCode::MalformedJson,
                "",
                format!("malformed JSON: {e}"),
            );
            return (None, d.findings);
        }
    };
    let candidate = d.document(&root);
    (candidate, d.findings)
}

fn ptr(parent: &str, key: &str) -> String {
    format!("{parent}/{}", key.replace('~', "~0").replace('/', "~1"))
}

fn idx(parent: &str, i: usize) -> String {
    format!("{parent}/{i}")
}

fn type_name(v: &Value) -> &'static str {
    match v {
        Value::Null => "null",
        Value::Bool(_) => "boolean",
        Value::Number(_) => "number",
        Value::String(_) => "string",
        Value::Array(_) => "array",
        Value::Object(_) => "object",
    }
}

impl Decoder {
    fn error(&mut self, code: FindingCode, at: &str, message: impl Into<String>) {
        self.findings
            .push(Finding::protocol_error(code, message).at(at));
    }

    fn warn(&mut self, code: FindingCode, at: &str, message: impl Into<String>) {
        self.findings
            .push(Finding::semantic_warning(code, message).at(at));
    }

    fn wrong_type(&mut self, at: &str, expected: &str, got: &Value) {
        self.error(
            FindingCode::InvalidType,
            at,
            format!("expected {expected}, found {}", type_name(got)),
        );
    }

    fn object<'v>(&mut self, v: &'v Value, at: &str) -> Option<&'v Map<String, Value>> {
        match v {
            Value::Object(m) => Some(m),
            other => {
                self.wrong_type(at, "object", other);
                None
            }
        }
    }

    fn array<'v>(&mut self, v: &'v Value, at: &str) -> Option<&'v Vec<Value>> {
        match v {
            Value::Array(a) => Some(a),
            other => {
                self.wrong_type(at, "array", other);
                None
            }
        }
    }

    fn string(&mut self, v: &Value, at: &str) -> Option<String> {
        match v {
            Value::String(s) => Some(s.clone()),
            other => {
                self.wrong_type(at, "string", other);
                None
            }
        }
    }

    fn uint(&mut self, v: &Value, at: &str, max: u64) -> Option<u64> {
        match v.as_u64() {
            Some(n) if n <= max => Some(n),
            Some(n) => {
                self.error(
                    FindingCode::InvalidValue,
                    at,
                    format!("value {n} exceeds {max}"),
                );
                None
            }
            None => {
                self.wrong_type(at, "non-negative integer", v);
                None
            }
        }
    }

    fn required<'v>(
        &mut self,
        m: &'v Map<String, Value>,
        key: &str,
        at: &str,
    ) -> Option<&'v Value> {
        let v = m.get(key);
        if v.is_none() {
            self.error(
                FindingCode::MissingField,
                &ptr(at, key),
                format!("missing required member \"{key}\""),
            );
        }
        v
    }

    fn reject_unknown(&mut self, m: &Map<String, Value>, known: &[&str], at: &str) {
        for key in m.keys().filter(|k| !known.contains(&k.as_str())) {
            self.error(
                FindingCode::UnsupportedNode,
                &ptr(at, key),
                format!("unsupported member \"{key}\""),
            );
        }
    }

    fn document(&mut self, root: &Value) -> Option<Candidate> {
        let root = self.object(root, "")?;
        let mut foreign_nodes = Map::new();
        for (key, value) in root {
            if key != keys::MUD && key != keys::ACLS {
                self.warn(
                    FindingCode::UnknownExtensionNode,
                    &ptr("", key),
                    format!("unknown top-level node \"{key}\" preserved"),
                );
                foreign_nodes.insert(key.clone(), value.clone());
            }
        }

        let header = match self.required(root, keys::MUD, "") {
            Some(v) => self.header(v, &ptr("", keys::MUD)),
            None => None,
        };

        let acls_at = ptr("", keys::ACLS);
        let (acls, partial_acls, sides) = match root.get(keys::ACLS) {
            Some(v) => self.acls(v, &acls_at),
            None => Default::default(),
        };

        let mut file = header?;
        file.acls = acls;
        file.foreign_nodes = foreign_nodes;
        self.check_sides(&file, &sides);
        Some(Candidate { file, partial_acls })
    }

    /// Decodes the `ietf-mud:mud` container. `None` when a required leaf is unusable.
    fn header(&mut self, v: &Value, at: &str) -> Option<MudFile> {
        let m = self.object(v, at)?;

        let version = self
            .required(m, keys::MUD_VERSION, at)
            .and_then(|v| self.uint(v, &ptr(at, keys::MUD_VERSION), u32::MAX as u64));
        let url = self
            .required(m, keys::MUD_URL, at)
            .and_then(|v| self.string(v, &ptr(at, keys::MUD_URL)));
        let last_update = self
            .required(m, keys::LAST_UPDATE, at)
            .and_then(|v| self.string(v, &ptr(at, keys::LAST_UPDATE)));
        let is_supported = self
            .required(m, keys::IS_SUPPORTED, at)
            .and_then(|v| match v {
                Value::Bool(b) => Some(*b),
                other => {
                    self.wrong_type(&ptr(at, keys::IS_SUPPORTED), "boolean", other);
                    None
                }
            });
        let cache_validity = match m.get(keys::CACHE_VALIDITY) {
            Some(v) => self.uint(v, &ptr(at, keys::CACHE_VALIDITY), u32::MAX as u64),
            None => Some(DEFAULT_CACHE_VALIDITY as u64),
        };

        let mut optional = |key: &str| m.get(key).and_then(|v| self.string(v, &ptr(at, key)));
        let systeminfo = optional(keys::SYSTEMINFO);
        let mfg_name = optional(keys::MFG_NAME);
        let model_name = optional(keys::MODEL_NAME);
        let documentation = optional(keys::DOCUMENTATION);
        let mud_signature = optional(keys::MUD_SIGNATURE);

        let extensions = match m.get(keys::EXTENSIONS) {
            Some(v) => {
                let at = ptr(at, keys::EXTENSIONS);
                self.array(v, &at)
                    .map(|items| {
                        items
                            .iter()
                            .enumerate()
                            .filter_map(|(i, item)| self.string(item, &idx(&at, i)))
                            .collect()
                    })
                    .unwrap_or_default()
            }
            None => Vec::new(),
        };

        let from_device_policy = match m.get(keys::FROM_DEVICE_POLICY) {
            Some(v) => self.policy(v, &ptr(at, keys::FROM_DEVICE_POLICY)),
            None => Vec::new(),
        };
        let to_device_policy = match m.get(keys::TO_DEVICE_POLICY) {
            Some(v) => self.policy(v, &ptr(at, keys::TO_DEVICE_POLICY)),
            None => Vec::new(),
        };

        const KNOWN: &[&str] = &[
            keys::MUD_VERSION,
            keys::MUD_URL,
            keys::LAST_UPDATE,
            keys::MUD_SIGNATURE,
            keys::CACHE_VALIDITY,
            keys::IS_SUPPORTED,
            keys::SYSTEMINFO,
            keys::MFG_NAME,
            keys::MODEL_NAME,
            keys::DOCUMENTATION,
            keys::EXTENSIONS,
            keys::FROM_DEVICE_POLICY,
            keys::TO_DEVICE_POLICY,
        ];
        let mut extension_nodes = Map::new();
        for (key, value) in m.iter().filter(|(k, _)| !KNOWN.contains(&k.as_str())) {
            if !keys::PASSTHROUGH.contains(&key.as_str()) {
                self.warn(
                    FindingCode::UnknownExtensionNode,
                    &ptr(at, key),
                    format!("unknown MUD extension node \"{key}\" preserved"),
                );
            }
            extension_nodes.insert(key.clone(), value.clone());
        }

        Some(MudFile {
            mud_version: version? as u32,
            mud_url: url?,
            last_update: last_update?,
            cache_validity: cache_validity? as u32,
            is_supported: is_supported?,
            systeminfo,
            mfg_name,
            model_name,
            documentation,
            mud_signature,
            extensions,
            from_device_policy,
            to_device_policy,
            acls: Vec::new(),
            extension_nodes,
            foreign_nodes: Map::new(),
        })
    }

    fn policy(&mut self, v: &Value, at: &str) -> Vec<String> {
        let Some(m) = self.object(v, at) else {
            return Vec::new();
        };
        self.reject_unknown(m, &[keys::ACCESS_LISTS], at);
        let Some(lists) = m.get(keys::ACCESS_LISTS) else {
            return Vec::new();
        };
        let at = ptr(at, keys::ACCESS_LISTS);
        let Some(lists) = self.object(lists, &at) else {
            return Vec::new();
        };
        self.reject_unknown(lists, &[keys::ACCESS_LIST], &at);
        let Some(list) = lists.get(keys::ACCESS_LIST) else {
            return Vec::new();
        };
        let at = ptr(&at, keys::ACCESS_LIST);
        let Some(items) = self.array(list, &at) else {
            return Vec::new();
        };
        let mut names = Vec::new();
        for (i, item) in items.iter().enumerate() {
            let at = idx(&at, i);
            let Some(entry) = self.object(item, &at) else {
                continue;
            };
            self.reject_unknown(entry, &[keys::NAME], &at);
            if let Some(name) = self
                .required(entry, keys::NAME, &at)
                .and_then(|v| self.string(v, &ptr(&at, keys::NAME)))
            {
                names.push(name);
            }
        }
        names
    }

    #[allow(clippy::type_complexity)]
    fn acls(
        &mut self,
        v: &Value,
        at: &str,
    ) -> (Vec<Acl>, BTreeSet<String>, BTreeMap<(String, String), Side>) {
        let mut out = (Vec::new(), BTreeSet::new(), BTreeMap::new());
        let Some(m) = self.object(v, at) else {
            return out;
        };
        self.reject_unknown(m, &[keys::ACL], at);
        let Some(list) = m.get(keys::ACL) else {
            return out;
        };
        let at = ptr(at, keys::ACL);
        let Some(items) = self.array(list, &at) else {
            return out;
        };
        for (i, item) in items.iter().enumerate() {
            let at = idx(&at, i);
            if let Some((acl, partial)) = self.acl(item, &at, &mut out.2) {
                if partial {
                    out.1.insert(acl.name.clone());
                }
                out.0.push(acl);
            }
        }
        out
    }

    fn acl(
        &mut self,
        v: &Value,
        at: &str,
        sides: &mut BTreeMap<(String, String), Side>,
    ) -> Option<(Acl, bool)> {
        let m = self.object(v, at)?;
        self.reject_unknown(m, &[keys::NAME, keys::TYPE, keys::ACES], at);
        let name = self
            .required(m, keys::NAME, at)
            .and_then(|v| self.string(v, &ptr(at, keys::NAME)))?;

        let ip_version = match self
            .required(m, keys::TYPE, at)
            .and_then(|v| self.string(v, &ptr(at, keys::TYPE)))
        {
            Some(t) => match t.strip_prefix("ietf-access-control-list:").unwrap_or(&t) {
                keys::IPV4_ACL_TYPE => IpVersion::V4,
                keys::IPV6_ACL_TYPE => IpVersion::V6,
                other => {
                    self.error(
                        FindingCode::InvalidValue,
                        &ptr(at, keys::TYPE),
                        format!("unsupported ACL type \"{other}\""),
                    );
                    IpVersion::V4
                }
            },
            None => IpVersion::V4,
        };

        let mut aces = Vec::new();
        let mut partial = false;
        let aces_at = ptr(at, keys::ACES);
        if let Some(container) = self.required(m, keys::ACES, at) {
            if let Some(container) = self.object(container, &aces_at) {
                self.reject_unknown(container, &[keys::ACE], &aces_at);
                let list_at = ptr(&aces_at, keys::ACE);
                let items = match container.get(keys::ACE) {
                    Some(list) => self.array(list, &list_at).map(Vec::as_slice).unwrap_or(&[]),
                    None => &[],
                };
                for (i, item) in items.iter().enumerate() {
                    let ace_at = idx(&list_at, i);
                    let before = self.findings.len();
                    match self.ace(item, &ace_at, ip_version) {
                        Some((ace, side)) => {
                            if let Some(side) = side {
                                sides.insert((name.clone(), ace.name.clone()), side);
                            }
                            aces.push(ace);
                        }
                        None => {
                            debug_assert!(self.findings.len() > before);
                            partial = true;
                        }
                    }
                }
            } else {
                partial = true;
            }
        } else {
            partial = true;
        }

        Some((
            Acl {
                name,
                ip_version,
                aces,
            },
            partial,
        ))
    }

    fn ace(&mut self, v: &Value, at: &str, family: IpVersion) -> Option<(Ace, Option<Side>)> {
        let m = self.object(v, at)?;
        self.reject_unknown(m, &[keys::NAME, keys::MATCHES, keys::ACTIONS], at);
        let errors_before = self.error_count();

        let name = self
            .required(m, keys::NAME, at)
            .and_then(|v| self.string(v, &ptr(at, keys::NAME)));

        let matches = match m.get(keys::MATCHES) {
            Some(v) => self.matches(v, &ptr(at, keys::MATCHES), family),
            None => {
                self.error(FindingCode::EmptyMatch, at, "ACE has no matches");
                None
            }
        };

        let action = self.required(m, keys::ACTIONS, at).and_then(|v| {
            let at = ptr(at, keys::ACTIONS);
            let actions = self.object(v, &at)?;
            self.reject_unknown(actions, &[keys::FORWARDING], &at);
            let fwd = self.required(actions, keys::FORWARDING, &at)?;
            let fwd_at = ptr(&at, keys::FORWARDING);
            let fwd = self.string(fwd, &fwd_at)?;
            match fwd
                .strip_prefix("ietf-access-control-list:")
                .unwrap_or(&fwd)
            {
                "accept" => Some(Action::Accept),
                "drop" => Some(Action::Drop),
                other => {
                    self.error(
                        FindingCode::InvalidValue,
                        &fwd_at,
                        format!("unsupported forwarding action \"{other}\""),
                    );
                    None
                }
            }
        });

        if self.error_count() > errors_before {
            return None;
        }
        let (matches, side) = matches?;
        Some((
            Ace {
                name: name?,
                matches,
                action: action?,
            },
            side,
        ))
    }

    fn error_count(&self) -> usize {
        self.findings.iter().filter(|f| f.is_error()).count()
    }

    fn matches(
        &mut self,
        v: &Value,
        at: &str,
        family: IpVersion,
    ) -> Option<(MatchSet, Option<Side>)> {
        let m = self.object(v, at)?;
        if m.is_empty() {
            self.error(FindingCode::EmptyMatch, at, "ACE match set is empty");
            return None;
        }
        self.reject_unknown(
            m,
            &[keys::IPV4, keys::IPV6, keys::TCP, keys::UDP, keys::MUD],
            at,
        );

        let errors_before = self.error_count();
        let mut endpoints: Vec<(EndpointSpec, Option<Side>)> = Vec::new();
        let mut protocol: Option<u8> = None;

        for (l3_key, l3_family) in [(keys::IPV4, IpVersion::V4), (keys::IPV6, IpVersion::V6)] {
            let Some(l3) = m.get(l3_key) else { continue };
            let l3_at = ptr(at, l3_key);
            if l3_family != family {
                self.error(
                    FindingCode::AddressFamilyMismatch,
                    &l3_at,
                    format!("\"{l3_key}\" match inside an ACL of the other address family"),
                );
                continue;
            }
            let Some(l3) = self.object(l3, &l3_at) else {
                continue;
            };
            let (src_net, dst_net) = match l3_family {
                IpVersion::V4 => (keys::SRC_IPV4_NETWORK, keys::DST_IPV4_NETWORK),
                IpVersion::V6 => (keys::SRC_IPV6_NETWORK, keys::DST_IPV6_NETWORK),
            };
            self.reject_unknown(
                l3,
                &[
                    keys::PROTOCOL,
                    keys::SRC_DNSNAME,
                    keys::DST_DNSNAME,
                    src_net,
                    dst_net,
                ],
                &l3_at,
            );
            if let Some(p) = l3.get(keys::PROTOCOL) {
                protocol = self
                    .uint(p, &ptr(&l3_at, keys::PROTOCOL), 255)
                    .map(|p| p as u8);
            }
            for (key, side) in [
                (keys::SRC_DNSNAME, Side::Source),
                (keys::DST_DNSNAME, Side::Destination),
            ] {
                if let Some(v) = l3.get(key) {
                    if let Some(name) = self.string(v, &ptr(&l3_at, key)) {
                        endpoints
                            .push((EndpointSpec::DnsName(canonical_domain(&name)), Some(side)));
                    }
                }
            }
            for (key, side) in [(src_net, Side::Source), (dst_net, Side::Destination)] {
                if let Some(v) = l3.get(key) {
                    let net_at = ptr(&l3_at, key);
                    if let Some(raw) = self.string(v, &net_at) {
                        match raw.parse::<IpNet>() {
                            Ok(net) => endpoints
                                .push((EndpointSpec::ExplicitNetwork(net.trunc()), Some(side))),
                            Err(_) => self.error(
                                FindingCode::InvalidEndpoint,
                                &net_at,
                                format!("\"{raw}\" is not a CIDR prefix"),
                            ),
                        }
                    }
                }
            }
        }

        let mut transport = None;
        let mut src_port = None;
        let mut dst_port = None;
        let mut direction_initiated = None;
        for (l4_key, l4_proto) in [(keys::TCP, PROTO_TCP), (keys::UDP, PROTO_UDP)] {
            let Some(l4) = m.get(l4_key) else { continue };
            let l4_at = ptr(at, l4_key);
            if transport.is_some() {
                self.error(
                    FindingCode::TransportMismatch,
                    &l4_at,
                    "both tcp and udp matches present",
                );
                continue;
            }
            transport = Some(l4_proto);
            let Some(l4) = self.object(l4, &l4_at) else {
                continue;
            };
            self.reject_unknown(
                l4,
                &[
                    keys::SOURCE_PORT,
                    keys::DESTINATION_PORT,
                    keys::DIRECTION_INITIATED,
                ],
                &l4_at,
            );
            if let Some(p) = l4.get(keys::SOURCE_PORT) {
                src_port = self.port(p, &ptr(&l4_at, keys::SOURCE_PORT));
            }
            if let Some(p) = l4.get(keys::DESTINATION_PORT) {
                dst_port = self.port(p, &ptr(&l4_at, keys::DESTINATION_PORT));
            }
            if let Some(d) = l4.get(keys::DIRECTION_INITIATED) {
                let d_at = ptr(&l4_at, keys::DIRECTION_INITIATED);
                if let Some(raw) = self.string(d, &d_at) {
                    match Direction::parse(&raw) {
                        Some(dir) => direction_initiated = Some(dir),
                        None => self.error(
                            FindingCode::InvalidValue,
                            &d_at,
                            format!("direction-initiated must be from-device or to-device, not \"{raw}\""),
                        ),
                    }
                }
            }
        }
        match (protocol, transport) {
            (None, Some(t)) => protocol = Some(t),
            (Some(p), Some(t)) if p != t => {
                self.error(
                    FindingCode::TransportMismatch,
                    at,
                    format!(
                        "protocol {p} does not match the {} match container",
                        if t == PROTO_TCP { "tcp" } else { "udp" }
                    ),
                );
            }
            _ => {}
        }

        if let Some(mud) = m.get(keys::MUD) {
            let mud_at = ptr(at, keys::MUD);
            if let Some(mud) = self.object(mud, &mud_at) {
                self.reject_unknown(
                    mud,
                    &[
                        keys::MANUFACTURER,
                        keys::SAME_MANUFACTURER,
                        keys::MODEL,
                        keys::LOCAL_NETWORKS,
                        keys::CONTROLLER,
                        keys::MY_CONTROLLER,
                    ],
                    &mud_at,
                );
                for (key, value) in mud {
                    let key_at = ptr(&mud_at, key);
                    let spec = match key.as_str() {
                        keys::MANUFACTURER => self
                            .string(value, &key_at)
                            .map(|a| EndpointSpec::Manufacturer(a.to_ascii_lowercase())),
                        keys::MODEL => self.string(value, &key_at).map(EndpointSpec::Model),
                        keys::CONTROLLER => {
                            self.string(value, &key_at).map(EndpointSpec::Controller)
                        }
                        keys::SAME_MANUFACTURER => self
                            .empty_leaf(value, &key_at)
                            .then_some(EndpointSpec::SameManufacturer),
                        keys::LOCAL_NETWORKS => self
                            .empty_leaf(value, &key_at)
                            .then_some(EndpointSpec::LocalNetworks),
                        keys::MY_CONTROLLER => self
                            .empty_leaf(value, &key_at)
                            .then_some(EndpointSpec::MyController),
                        _ => None,
                    };
                    if let Some(spec) = spec {
                        endpoints.push((spec, None));
                    }
                }
            }
        }

        match endpoints.len() {
            0 if self.error_count() > errors_before => None,
            0 => {
                self.error(
                    FindingCode::MissingEndpoint,
                    at,
                    "ACE names no endpoint (domain name, network or MUD abstraction)",
                );
                None
            }
            1 => {
                let (endpoint, side) = endpoints.pop().expect("one endpoint");
                let set = MatchSet {
                    protocol,
                    endpoint,
                    src_port,
                    dst_port,
                    direction_initiated,
                };
                Some((set.canonical(), side))
            }
            n => {
                let names: Vec<String> = endpoints
                    .iter()
                    .map(|(e, _)| e.kind().to_string())
                    .collect();
                self.error(
                    FindingCode::CombinedAbstractions,
                    at,
                    format!(
                        "ACE combines {n} endpoint abstractions ({})",
                        names.join(", ")
                    ),
                );
                None
            }
        }
    }

    /// YANG `empty` leaves are encoded as `[null]`.
    fn empty_leaf(&mut self, v: &Value, at: &str) -> bool {
        match v {
            Value::Array(items) if items.len() == 1 && items[0].is_null() => true,
            Value::Null => true,
            other => {
                self.wrong_type(at, "empty leaf [null]", other);
                false
            }
        }
    }

    fn port(&mut self, v: &Value, at: &str) -> Option<PortSpec> {
        let m = self.object(v, at)?;
        let max = u16::MAX as u64;
        if m.contains_key(keys::LOWER_PORT) || m.contains_key(keys::UPPER_PORT) {
            self.reject_unknown(m, &[keys::LOWER_PORT, keys::UPPER_PORT], at);
            let lo = self
                .required(m, keys::LOWER_PORT, at)
                .and_then(|v| self.uint(v, &ptr(at, keys::LOWER_PORT), max));
            let hi = self
                .required(m, keys::UPPER_PORT, at)
                .and_then(|v| self.uint(v, &ptr(at, keys::UPPER_PORT), max));
            // Inverted ranges are kept so the semantic pass can report them.
            return Some(PortSpec {
                lo: lo? as u16,
                hi: hi? as u16,
            });
        }
        self.reject_unknown(m, &[keys::OPERATOR, keys::PORT], at);
        if let Some(op) = m.get(keys::OPERATOR) {
            let op_at = ptr(at, keys::OPERATOR);
            let op = self.string(op, &op_at)?;
            if op != "eq" {
                self.error(
                    FindingCode::UnsupportedPortOperator,
                    &op_at,
                    format!(
                        "port operator \"{op}\" is not supported (use eq or lower-port/upper-port)"
                    ),
                );
                return None;
            }
        }
        let port = self
            .required(m, keys::PORT, at)
            .and_then(|v| self.uint(v, &ptr(at, keys::PORT), max))?;
        Some(PortSpec::eq(port as u16))
    }

    /// Address-style endpoints belong on the remote side: destination for
    /// from-device ACLs, source for to-device ACLs.
    fn check_sides(&mut self, file: &MudFile, sides: &BTreeMap<(String, String), Side>) {
        for (acl_index, acl) in file.acls.iter().enumerate() {
            let in_from = file.from_device_policy.contains(&acl.name);
            let in_to = file.to_device_policy.contains(&acl.name);
            let expected = match (in_from, in_to) {
                (true, false) => Side::Destination,
                (false, true) => Side::Source,
                _ => continue,
            };
            for ace in &acl.aces {
                if let Some(side) = sides.get(&(acl.name.clone(), ace.name.clone())) {
                    if *side != expected {
                        let (found, wanted) = match expected {
                            Side::Destination => ("source", "destination"),
                            Side::Source => ("destination", "source"),
                        };
                        self.warn(
                            FindingCode::EndpointOnWrongSide,
                            &format!("/{}/acl/{acl_index}", keys::ACLS),
                            format!(
                                "ACE \"{}\" in ACL \"{}\" names its remote endpoint as {found}; expected {wanted}",
                                ace.name, acl.name
                            ),
                        );
                    }
                }
            }
        }
    }
}
