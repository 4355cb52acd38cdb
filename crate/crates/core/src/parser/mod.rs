// SPDX-License-Identifier: Apache-2.0

//! Decoding, protocol checking and encoding of MUD JSON documents.
//!
//! The accepted grammar is a hand-written subset of the RFC 8520 / RFC 8519 YANG
//! models; field names are listed in [`keys`] and in `docs/formats.md`.

mod decode;
mod serialize;
mod validate;

use serde::{Deserialize, Serialize};

use crate::finding::Finding;
use crate::model::MudFile;

pub use serialize::{serialize_mud_file, to_json_value};
pub(crate) use validate::is_hostname;
pub use validate::validate_semantics;

/// JSON member names of the supported MUD subset.
pub mod keys {
    pub const MUD: &str = "ietf-mud:mud";
    pub const ACLS: &str = "ietf-access-control-list:acls";

    pub const MUD_VERSION: &str = "mud-version";
    pub const MUD_URL: &str = "mud-url";
    pub const LAST_UPDATE: &str = "last-update";
    pub const MUD_SIGNATURE: &str = "mud-signature";
    pub const CACHE_VALIDITY: &str = "cache-validity";
    pub const IS_SUPPORTED: &str = "is-supported";
    pub const SYSTEMINFO: &str = "systeminfo";
    pub const MFG_NAME: &str = "mfg-name";
    pub const MODEL_NAME: &str = "model-name";
    pub const DOCUMENTATION: &str = "documentation";
    pub const EXTENSIONS: &str = "extensions";
    pub const FROM_DEVICE_POLICY: &str = "from-device-policy";
    pub const TO_DEVICE_POLICY: &str = "to-device-policy";
    /// Standard leaves that are kept verbatim without being interpreted.
    pub const PASSTHROUGH: &[&str] = &["firmware-rev", "software-rev"];

    pub const ACCESS_LISTS: &str = "access-lists";
    pub const ACCESS_LIST: &str = "access-list";

    pub const ACL: &str = "acl";
    pub const NAME: &str = "name";
    pub const TYPE: &str = "type";
    pub const ACES: &str = "aces";
    pub const ACE: &str = "ace";
    pub const MATCHES: &str = "matches";
    pub const ACTIONS: &str = "actions";
    pub const FORWARDING: &str = "forwarding";

    pub const IPV4_ACL_TYPE: &str = "ipv4-acl-type";
    pub const IPV6_ACL_TYPE: &str = "ipv6-acl-type";

    pub const IPV4: &str = "ipv4";
    pub const IPV6: &str = "ipv6";
    pub const TCP: &str = "tcp";
    pub const UDP: &str = "udp";
    pub const PROTOCOL: &str = "protocol";
    pub const SRC_DNSNAME: &str = "ietf-acldns:src-dnsname";
    pub const DST_DNSNAME: &str = "ietf-acldns:dst-dnsname";
    pub const SRC_IPV4_NETWORK: &str = "source-ipv4-network";
    pub const DST_IPV4_NETWORK: &str = "destination-ipv4-network";
    pub const SRC_IPV6_NETWORK: &str = "source-ipv6-network";
    pub const DST_IPV6_NETWORK: &str = "destination-ipv6-network";

    pub const SOURCE_PORT: &str = "source-port";
    pub const DESTINATION_PORT: &str = "destination-port";
    pub const OPERATOR: &str = "operator";
    pub const PORT: &str = "port";
    pub const LOWER_PORT: &str = "lower-port";
    pub const UPPER_PORT: &str = "upper-port";
    pub const DIRECTION_INITIATED: &str = "ietf-mud:direction-initiated";

    pub const MANUFACTURER: &str = "manufacturer";
    pub const SAME_MANUFACTURER: &str = "same-manufacturer";
    pub const MODEL: &str = "model";
    pub const LOCAL_NETWORKS: &str = "local-networks";
    pub const CONTROLLER: &str = "controller";
    pub const MY_CONTROLLER: &str = "my-controller";
}

/// Outcome of [`parse_mud_file`]: the typed file when no error was found, plus every finding.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParseResult {
    pub file: Option<MudFile>,
    pub findings: Vec<Finding>,
}

impl ParseResult {
    pub fn has_errors(&self) -> bool {
        self.findings.iter().any(Finding::is_error)
    }
}

/// Decode and protocol-check a MUD document.
///
/// Never panics. All findings are collected in one pass; the file is only returned when
/// none of them is an error.
pub fn parse_mud_file(bytes: &[u8]) -> ParseResult {
    let (candidate, mut findings) = decode::decode(bytes);
    let file = match candidate {
        Some(candidate) => {
            findings.extend(validate::validate_filtered(
                &candidate.file,
                &candidate.partial_acls,
            ));
            (!findings.iter().any(Finding::is_error)).then_some(candidate.file)
        }
        None => None,
    };
    ParseResult { file, findings }
}
