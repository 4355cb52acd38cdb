// SPDX-License-Identifier: Apache-2.0

use serde_json::{json, Map, Value};

use super::keys;
use crate::model::{Ace, Acl, Direction, EndpointSpec, IpVersion, MudFile, PortSpec, PROTO_UDP};

/// Encode a file in the same JSON dialect [`super::parse_mud_file`] reads.
pub fn serialize_mud_file(file: &MudFile) -> String {
    let mut text =
        serde_json::to_string_pretty(&to_json_value(file)).expect("JSON values always serialize");
    text.push('\n');
    text
}

pub fn to_json_value(file: &MudFile) -> Value {
    let mut mud = Map::new();
    mud.insert(keys::MUD_VERSION.into(), json!(file.mud_version));
    mud.insert(keys::MUD_URL.into(), json!(file.mud_url));
    mud.insert(keys::LAST_UPDATE.into(), json!(file.last_update));
    if let Some(sig) = &file.mud_signature {
        mud.insert(keys::MUD_SIGNATURE.into(), json!(sig));
    }
    mud.insert(keys::CACHE_VALIDITY.into(), json!(file.cache_validity));
    mud.insert(keys::IS_SUPPORTED.into(), json!(file.is_supported));
    for (key, value) in [
        (keys::SYSTEMINFO, &file.systeminfo),
        (keys::MFG_NAME, &file.mfg_name),
        (keys::MODEL_NAME, &file.model_name),
        (keys::DOCUMENTATION, &file.documentation),
    ] {
        if let Some(v) = value {
            mud.insert(key.into(), json!(v));
        }
    }
    if !file.extensions.is_empty() {
        mud.insert(keys::EXTENSIONS.into(), json!(file.extensions));
    }
    for (key, names) in [
        (keys::FROM_DEVICE_POLICY, &file.from_device_policy),
        (keys::TO_DEVICE_POLICY, &file.to_device_policy),
    ] {
        if !names.is_empty() {
            let list: Vec<Value> = names.iter().map(|n| json!({ keys::NAME: n })).collect();
            mud.insert(
                key.into(),
                json!({ keys::ACCESS_LISTS: { keys::ACCESS_LIST: list } }),
            );
        }
    }
    for (key, value) in &file.extension_nodes {
        mud.insert(key.clone(), value.clone());
    }

    let mut root = Map::new();
    root.insert(keys::MUD.into(), Value::Object(mud));
    if !file.acls.is_empty() {
        let acls: Vec<Value> = file
            .acls
            .iter()
            .map(|acl| acl_value(acl, remote_side(file, acl)))
            .collect();
        root.insert(keys::ACLS.into(), json!({ keys::ACL: acls }));
    }
    for (key, value) in &file.foreign_nodes {
        root.insert(key.clone(), value.clone());
    }
    Value::Object(root)
}

/// The packet side the remote endpoint sits on for ACEs of this ACL.
fn remote_side(file: &MudFile, acl: &Acl) -> Direction {
    let to_only =
        file.to_device_policy.contains(&acl.name) && !file.from_device_policy.contains(&acl.name);
    if to_only {
        Direction::ToDevice
    } else {
        Direction::FromDevice
    }
}

fn acl_value(acl: &Acl, policy: Direction) -> Value {
    let ty = match acl.ip_version {
        IpVersion::V4 => keys::IPV4_ACL_TYPE,
        IpVersion::V6 => keys::IPV6_ACL_TYPE,
    };
    let aces: Vec<Value> = acl
        .aces
        .iter()
        .map(|ace| ace_value(ace, acl.ip_version, policy))
        .collect();
    json!({
        keys::NAME: acl.name,
        keys::TYPE: ty,
        keys::ACES: { keys::ACE: aces },
    })
}

fn port_value(port: PortSpec) -> Value {
    if port.lo == port.hi {
        json!({ keys::OPERATOR: "eq", keys::PORT: port.lo })
    } else {
        json!({ keys::LOWER_PORT: port.lo, keys::UPPER_PORT: port.hi })
    }
}

fn ace_value(ace: &Ace, family: IpVersion, policy: Direction) -> Value {
    let m = &ace.matches;
    let mut matches = Map::new();

    let mut l3 = Map::new();
    if let Some(p) = m.protocol {
        l3.insert(keys::PROTOCOL.into(), json!(p));
    }
    let remote_is_dst = policy == Direction::FromDevice;
    let mut mud = Map::new();
    let empty = || json!([null]);
    match &m.endpoint {
        EndpointSpec::DnsName(name) => {
            let key = if remote_is_dst {
                keys::DST_DNSNAME
            } else {
                keys::SRC_DNSNAME
            };
            l3.insert(key.into(), json!(name));
        }
        EndpointSpec::ExplicitNetwork(net) => {
            let key = match (family, remote_is_dst) {
                (IpVersion::V4, true) => keys::DST_IPV4_NETWORK,
                (IpVersion::V4, false) => keys::SRC_IPV4_NETWORK,
                (IpVersion::V6, true) => keys::DST_IPV6_NETWORK,
                (IpVersion::V6, false) => keys::SRC_IPV6_NETWORK,
            };
            l3.insert(key.into(), json!(net.to_string()));
        }
        EndpointSpec::Manufacturer(a) => {
            mud.insert(keys::MANUFACTURER.into(), json!(a));
        }
        EndpointSpec::Model(u) => {
            mud.insert(keys::MODEL.into(), json!(u));
        }
        EndpointSpec::Controller(u) => {
            mud.insert(keys::CONTROLLER.into(), json!(u));
        }
        EndpointSpec::SameManufacturer => {
            mud.insert(keys::SAME_MANUFACTURER.into(), empty());
        }
        EndpointSpec::LocalNetworks => {
            mud.insert(keys::LOCAL_NETWORKS.into(), empty());
        }
        EndpointSpec::MyController => {
            mud.insert(keys::MY_CONTROLLER.into(), empty());
        }
    }
    if !l3.is_empty() {
        let key = match family {
            IpVersion::V4 => keys::IPV4,
            IpVersion::V6 => keys::IPV6,
        };
        matches.insert(key.into(), Value::Object(l3));
    }

    let mut l4 = Map::new();
    if let Some(p) = m.src_port {
        l4.insert(keys::SOURCE_PORT.into(), port_value(p));
    }
    if let Some(p) = m.dst_port {
        l4.insert(keys::DESTINATION_PORT.into(), port_value(p));
    }
    if let Some(d) = m.direction_initiated {
        l4.insert(keys::DIRECTION_INITIATED.into(), json!(d.as_str()));
    }
    if !l4.is_empty() {
        let key = if m.protocol == Some(PROTO_UDP) {
            keys::UDP
        } else {
            keys::TCP
        };
        matches.insert(key.into(), Value::Object(l4));
    }

    if !mud.is_empty() {
        matches.insert(keys::MUD.into(), Value::Object(mud));
    }

    json!({
        keys::NAME: ace.name,
        keys::MATCHES: matches,
        keys::ACTIONS: { keys::FORWARDING: ace.action.to_string() },
    })
}
