// SPDX-License-Identifier: Apache-2.0

//! Helpers shared by the integration tests: corpus access, a raw HTTP client, a
//! throwaway server, and an independent packet-level oracle over small universes.

#![allow(dead_code)]

use std::collections::BTreeSet;
use std::io::{Read, Write};
use std::net::{IpAddr, Ipv4Addr, SocketAddr, TcpStream};
use std::path::PathBuf;
use std::time::Duration;

use mudkit::acetree::{Decision, Remote};
use mudkit::context::DeploymentContext;
use mudkit::model::{
    Ace, Acl, Action, ConcreteFlow, DeviceId, Direction, EndpointSpec, IpVersion, MatchSet,
    MudFile, PortSpec, ResolvedEndpoint, RuleRef,
};
use rand::seq::IndexedRandom;
use rand::Rng;

pub fn corpus(rel: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests/corpus")
        .join(rel)
}

pub fn read_corpus(rel: &str) -> Vec<u8> {
    std::fs::read(corpus(rel)).unwrap_or_else(|e| panic!("{rel}: {e}"))
}

/// Sorted `(file name, bytes)` of every JSON file in a corpus directory.
pub fn corpus_dir(rel: &str) -> Vec<(String, Vec<u8>)> {
    let mut out: Vec<_> = std::fs::read_dir(corpus(rel))
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .map(|p| {
            (
                p.file_name().unwrap().to_string_lossy().into_owned(),
                std::fs::read(&p).unwrap(),
            )
        })
        .collect();
    out.sort();
    out
}

// ---------------------------------------------------------------------------
// HTTP

pub struct HttpResponse {
    pub status: u16,
    pub body: Vec<u8>,
}

impl HttpResponse {
    pub fn json(&self) -> serde_json::Value {
        serde_json::from_slice(&self.body).unwrap_or_else(|e| {
            panic!(
                "status {}: {e}: {}",
                self.status,
                String::from_utf8_lossy(&self.body)
            )
        })
    }
}

fn dechunk(mut raw: &[u8]) -> Vec<u8> {
    let mut out = Vec::new();
    loop {
        let line_end = raw
            .windows(2)
            .position(|w| w == b"\r\n")
            .expect("chunk size line");
        let size_text = std::str::from_utf8(&raw[..line_end]).unwrap();
        let size = usize::from_str_radix(size_text.split(';').next().unwrap().trim(), 16).unwrap();
        raw = &raw[line_end + 2..];
        if size == 0 {
            return out;
        }
        out.extend_from_slice(&raw[..size]);
        raw = &raw[size + 2..];
    }
}

/// One HTTP/1.1 exchange over a fresh connection.
pub fn http(addr: SocketAddr, method: &str, path: &str, body: Option<&[u8]>) -> HttpResponse {
    let mut stream = TcpStream::connect(addr).expect("connect");
    stream
        .set_read_timeout(Some(Duration::from_secs(30)))
        .unwrap();
    let body = body.unwrap_or_default();
    let head = format!(
        "{method} {path} HTTP/1.1\r\nHost: {addr}\r\nConnection: close\r\nContent-Type: application/json\r\nContent-Length: {}\r\n\r\n",
        body.len()
    );
    stream.write_all(head.as_bytes()).unwrap();
    stream.write_all(body).unwrap();
    let mut raw = Vec::new();
    stream.read_to_end(&mut raw).unwrap();

    let split = raw
        .windows(4)
        .position(|w| w == b"\r\n\r\n")
        .expect("header end");
    let head = String::from_utf8_lossy(&raw[..split]).to_ascii_lowercase();
    let status = head.split_whitespace().nth(1).unwrap().parse().unwrap();
    let payload = &raw[split + 4..];
    let body = if head.contains("transfer-encoding: chunked") {
        dechunk(payload)
    } else {
        payload.to_vec()
    };
    HttpResponse { status, body }
}

/// A service instance on an ephemeral port, stopped on drop.
pub struct TestServer {
    pub addr: SocketAddr,
    stop: Option<tokio::sync::oneshot::Sender<()>>,
    thread: Option<std::thread::JoinHandle<()>>,
}

impl TestServer {
    pub fn start(config: mudkit::service::ServiceConfig) -> Self {
        let (addr_tx, addr_rx) = std::sync::mpsc::channel();
        let (stop_tx, stop_rx) = tokio::sync::oneshot::channel::<()>();
        let thread = std::thread::spawn(move || {
            let rt = tokio::runtime::Builder::new_multi_thread()
                .worker_threads(2)
                .enable_all()
                .build()
                .unwrap();
            rt.block_on(async move {
                let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
                addr_tx.send(listener.local_addr().unwrap()).unwrap();
                mudkit::service::serve(listener, config, async {
                    let _ = stop_rx.await;
                })
                .await
                .unwrap();
            });
        });
        let addr = addr_rx
            .recv_timeout(Duration::from_secs(10))
            .expect("server address");
        TestServer {
            addr,
            stop: Some(stop_tx),
            thread: Some(thread),
        }
    }

    pub fn get(&self, path: &str) -> HttpResponse {
        http(self.addr, "GET", path, None)
    }

    pub fn send(&self, method: &str, path: &str, body: &[u8]) -> HttpResponse {
        http(self.addr, method, path, Some(body))
    }
}

impl Drop for TestServer {
    fn drop(&mut self) {
        if let Some(stop) = self.stop.take() {
            let _ = stop.send(());
        }
        if let Some(t) = self.thread.take() {
            let _ = t.join();
        }
    }
}

// ---------------------------------------------------------------------------
// Small universes and a brute-force packet oracle

pub const MAX_PORT: u16 = 30;
pub const DOMAINS: [&str; 2] = ["a.example.com", "b.example.com"];
/// (network, prefix length) pairs; the first two nest.
pub const NETWORKS: [([u8; 4], u8); 3] = [
    ([10, 0, 0, 0], 24),
    ([10, 0, 0, 0], 28),
    ([10, 0, 1, 0], 24),
];
/// Probe addresses: inside both nested networks, inside only the wider one, inside the
/// third, and outside all of them.
pub const ADDRESSES: [[u8; 4]; 4] = [
    [10, 0, 0, 5],
    [10, 0, 0, 200],
    [10, 0, 1, 9],
    [192, 0, 2, 1],
];

#[derive(Debug, Clone)]
pub struct Universe {
    pub devices: Vec<DeviceId>,
    pub flows: Vec<ConcreteFlow>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Packet {
    pub device: DeviceId,
    pub direction: Direction,
    pub remote: Remote,
    pub protocol: u8,
    pub src: u16,
    pub dst: u16,
    pub initiated: Option<Direction>,
}

fn random_ports(rng: &mut impl Rng) -> PortSpec {
    if rng.random_bool(0.3) {
        return PortSpec::FULL;
    }
    let lo = rng.random_range(0..=MAX_PORT);
    let width = if rng.random_bool(0.5) {
        0
    } else {
        rng.random_range(0..=12)
    };
    PortSpec {
        lo,
        hi: (lo + width).min(MAX_PORT),
    }
}

fn random_direction(rng: &mut impl Rng) -> Direction {
    if rng.random_bool(0.5) {
        Direction::FromDevice
    } else {
        Direction::ToDevice
    }
}

pub fn net(i: usize) -> ipnet::IpNet {
    let (octets, len) = NETWORKS[i];
    ipnet::IpNet::V4(ipnet::Ipv4Net::new(Ipv4Addr::from(octets), len).unwrap())
}

/// Up to 4 devices, protocols 6 and 17 (or any), ports 0-30, up to 12 flows.
/// Some flows are variants of earlier ones so containment and overlap are common.
pub fn random_universe(rng: &mut impl Rng, accept_only: bool) -> Universe {
    let n_devices = rng.random_range(1..=4);
    let devices: Vec<DeviceId> = (0..n_devices)
        .map(|i| DeviceId::new(format!("d{i}")))
        .collect();
    let n_flows = rng.random_range(1..=12);
    let mut flows: Vec<ConcreteFlow> = Vec::with_capacity(n_flows);
    for i in 0..n_flows {
        if i > 0 && rng.random_bool(0.4) {
            let base = flows.choose(rng).unwrap().clone();
            flows.push(variant_of(rng, &base, i, accept_only));
            continue;
        }
        flows.push({
            let remote = match rng.random_range(0..10) {
                0..=2 => ResolvedEndpoint::LocalDevice(devices.choose(rng).unwrap().clone()),
                3..=4 => ResolvedEndpoint::LocalAny,
                5..=6 => ResolvedEndpoint::InternetDomain(DOMAINS.choose(rng).unwrap().to_string()),
                7..=8 => {
                    ResolvedEndpoint::InternetNetwork(net(rng.random_range(0..NETWORKS.len())))
                }
                _ => ResolvedEndpoint::UnresolvedAbstraction(EndpointSpec::MyController),
            };
            let protocol = *[None, Some(6u8), Some(17u8)].choose(rng).unwrap();
            let direction_initiated = match protocol {
                Some(6) => *[None, Some(Direction::FromDevice), Some(Direction::ToDevice)]
                    .choose(rng)
                    .unwrap(),
                _ => None,
            };
            let action = if !accept_only && rng.random_bool(0.2) {
                Action::Drop
            } else {
                Action::Accept
            };
            ConcreteFlow {
                device: devices.choose(rng).unwrap().clone(),
                direction: random_direction(rng),
                remote,
                protocol,
                src_port: random_ports(rng),
                dst_port: random_ports(rng),
                direction_initiated,
                action,
                provenance: BTreeSet::from([RuleRef {
                    source_file: "https://mfg.example.com/universe.json".into(),
                    acl: "acl".into(),
                    ace: format!("f{i}"),
                    abstraction: None,
                }]),
            }
        });
    }
    Universe { devices, flows }
}

/// A flow sharing the match prefix of `base`, with some dimensions narrowed or widened.
fn variant_of(
    rng: &mut impl Rng,
    base: &ConcreteFlow,
    i: usize,
    accept_only: bool,
) -> ConcreteFlow {
    let mut f = base.clone();
    let mut reshape = |r: PortSpec| match rng.random_range(0..4) {
        0 => r,
        1 => PortSpec::FULL,
        2 => {
            let lo = rng.random_range(r.lo.min(MAX_PORT)..=r.hi.min(MAX_PORT));
            PortSpec {
                lo,
                hi: rng.random_range(lo..=r.hi.min(MAX_PORT)),
            }
        }
        _ => random_ports(rng),
    };
    f.dst_port = reshape(f.dst_port);
    f.src_port = reshape(f.src_port);
    if rng.random_bool(0.2) {
        f.protocol = None;
        f.direction_initiated = None;
    }
    if rng.random_bool(0.2) && matches!(f.remote, ResolvedEndpoint::LocalDevice(_)) {
        f.remote = ResolvedEndpoint::LocalAny;
    }
    if !accept_only && rng.random_bool(0.2) {
        f.action = Action::Drop;
    }
    f.provenance = BTreeSet::from([RuleRef {
        source_file: "https://mfg.example.com/universe.json".into(),
        acl: "acl".into(),
        ace: format!("f{i}"),
        abstraction: None,
    }]);
    f
}

pub fn remotes(devices: &[DeviceId]) -> Vec<Remote> {
    let mut out: Vec<Remote> = devices.iter().cloned().map(Remote::Device).collect();
    out.push(Remote::UnlistedLocal);
    out.extend(DOMAINS.iter().map(|d| Remote::Domain(d.to_string())));
    out.extend(ADDRESSES.iter().map(|a| Remote::Address(IpAddr::from(*a))));
    out
}

/// Every packet of the universe that differs in anything but ports, in a fixed order.
/// Ports are enumerated separately by the callers.
pub fn packet_classes(
    devices: &[DeviceId],
) -> Vec<(DeviceId, Direction, Remote, u8, Option<Direction>)> {
    let mut out = Vec::new();
    for device in devices {
        for direction in [Direction::FromDevice, Direction::ToDevice] {
            for remote in remotes(devices) {
                for (protocol, inits) in [
                    (
                        6u8,
                        &[None, Some(Direction::FromDevice), Some(Direction::ToDevice)][..],
                    ),
                    (17u8, &[None][..]),
                ] {
                    for init in inits {
                        out.push((device.clone(), direction, remote.clone(), protocol, *init));
                    }
                }
            }
        }
    }
    out
}

fn in_v4(addr: [u8; 4], (net, len): ([u8; 4], u8)) -> bool {
    let mask = if len == 0 { 0 } else { u32::MAX << (32 - len) };
    u32::from_be_bytes(addr) & mask == u32::from_be_bytes(net) & mask
}

/// Whether a flow's endpoint covers a remote, decided from first principles.
fn endpoint_covers(endpoint: &ResolvedEndpoint, remote: &Remote) -> bool {
    match (endpoint, remote) {
        (ResolvedEndpoint::LocalDevice(id), Remote::Device(d)) => id == d,
        (ResolvedEndpoint::LocalAny, Remote::Device(_) | Remote::UnlistedLocal) => true,
        (ResolvedEndpoint::InternetDomain(a), Remote::Domain(b)) => a.eq_ignore_ascii_case(b),
        (
            ResolvedEndpoint::InternetNetwork(ipnet::IpNet::V4(n)),
            Remote::Address(IpAddr::V4(a)),
        ) => in_v4(a.octets(), (n.network().octets(), n.prefix_len())),
        _ => false,
    }
}

/// Match on everything except ports.
fn class_matches(
    f: &ConcreteFlow,
    (device, direction, remote, protocol, init): &(
        DeviceId,
        Direction,
        Remote,
        u8,
        Option<Direction>,
    ),
) -> bool {
    f.device == *device
        && f.direction == *direction
        && endpoint_covers(&f.remote, remote)
        && f.protocol.is_none_or(|p| p == *protocol)
        && f.direction_initiated
            .is_none_or(|d| *protocol == 6 && *init == Some(d))
}

fn port_in(p: u16, r: &PortSpec) -> bool {
    r.lo <= p && p <= r.hi
}

pub fn oracle_matches(f: &ConcreteFlow, p: &Packet) -> bool {
    class_matches(
        f,
        &(
            p.device.clone(),
            p.direction,
            p.remote.clone(),
            p.protocol,
            p.initiated,
        ),
    ) && port_in(p.src, &f.src_port)
        && port_in(p.dst, &f.dst_port)
}

/// Fail-closed decision of a flow list for one packet.
pub fn oracle_decision(flows: &[ConcreteFlow], p: &Packet) -> Decision {
    let mut decision = Decision::NoMatch;
    for f in flows.iter().filter(|f| oracle_matches(f, p)) {
        match f.action {
            Action::Drop => return Decision::Drop,
            Action::Accept => decision = Decision::Accept,
        }
    }
    decision
}

fn decision_code(d: Decision) -> u8 {
    match d {
        Decision::NoMatch => 0,
        Decision::Accept => 1,
        Decision::Drop => 2,
    }
}

/// Decision of every concrete packet of the universe, enumerated exhaustively.
pub fn decision_table(flows: &[ConcreteFlow], devices: &[DeviceId]) -> Vec<u8> {
    let ports = (MAX_PORT as usize + 1).pow(2);
    let classes = packet_classes(devices);
    let mut out = Vec::with_capacity(classes.len() * ports);
    for class in &classes {
        let relevant: Vec<&ConcreteFlow> =
            flows.iter().filter(|f| class_matches(f, class)).collect();
        for src in 0..=MAX_PORT {
            for dst in 0..=MAX_PORT {
                let mut d = Decision::NoMatch;
                for f in relevant
                    .iter()
                    .filter(|f| port_in(src, &f.src_port) && port_in(dst, &f.dst_port))
                {
                    match f.action {
                        Action::Drop => {
                            d = Decision::Drop;
                            break;
                        }
                        Action::Accept => d = Decision::Accept,
                    }
                }
                out.push(decision_code(d));
            }
        }
    }
    out
}

pub fn random_packet(rng: &mut impl Rng, devices: &[DeviceId]) -> Packet {
    let protocol = if rng.random_bool(0.5) { 6 } else { 17 };
    Packet {
        device: devices.choose(rng).unwrap().clone(),
        direction: random_direction(rng),
        remote: remotes(devices).choose(rng).unwrap().clone(),
        protocol,
        src: rng.random_range(0..=MAX_PORT),
        dst: rng.random_range(0..=MAX_PORT),
        initiated: if protocol == 6 {
            *[None, Some(Direction::FromDevice), Some(Direction::ToDevice)]
                .choose(rng)
                .unwrap()
        } else {
            None
        },
    }
}

pub fn to_query(p: &Packet) -> mudkit::acetree::PacketQuery {
    mudkit::acetree::PacketQuery {
        device: p.device.clone(),
        direction: p.direction,
        remote: p.remote.clone(),
        protocol: p.protocol,
        src_port: p.src,
        dst_port: p.dst,
        initiated: p.initiated,
    }
}

/// A ruleset holding exactly the given pruned tree.
pub fn ruleset_of(tree: mudkit::AceTree, devices: &[DeviceId]) -> mudkit::MergedRuleset {
    mudkit::MergedRuleset {
        flows: tree.flows(),
        tree,
        devices: devices.to_vec(),
        ..Default::default()
    }
}

// ---------------------------------------------------------------------------
// Random deployments

pub const AUTHORITIES: [&str; 2] = ["mfg1.example.com", "mfg2.example.com"];
pub const CONTROLLER_CLASS: &str = "https://ctl.example.com/hub";

pub fn random_match(rng: &mut impl Rng, urls: &[String]) -> MatchSet {
    let endpoint = match rng.random_range(0..8) {
        0 => EndpointSpec::DnsName(DOMAINS.choose(rng).unwrap().to_string()),
        1 => EndpointSpec::LocalNetworks,
        2 => EndpointSpec::Controller(
            [CONTROLLER_CLASS, "https://ctl.example.com/unbound"]
                .choose(rng)
                .unwrap()
                .to_string(),
        ),
        3 => EndpointSpec::MyController,
        4 => EndpointSpec::Manufacturer(AUTHORITIES.choose(rng).unwrap().to_string()),
        5 => EndpointSpec::SameManufacturer,
        6 => EndpointSpec::Model(urls.choose(rng).unwrap().clone()),
        _ => EndpointSpec::ExplicitNetwork(net(rng.random_range(0..NETWORKS.len()))),
    };
    let mut m = MatchSet::new(endpoint);
    m.protocol = *[None, Some(6u8), Some(17u8)].choose(rng).unwrap();
    if m.protocol.is_some() {
        let mut ports = || {
            rng.random_bool(0.6).then(|| {
                let lo = rng.random_range(0..=MAX_PORT);
                PortSpec {
                    lo,
                    hi: (lo + rng.random_range(0..=8)).min(MAX_PORT),
                }
            })
        };
        m.dst_port = ports();
        m.src_port = ports();
    }
    if m.protocol == Some(6) {
        m.direction_initiated = *[None, Some(Direction::FromDevice), Some(Direction::ToDevice)]
            .choose(rng)
            .unwrap();
    }
    m.canonical()
}

pub fn random_acl(rng: &mut impl Rng, name: &str, max: usize, urls: &[String]) -> Acl {
    let n = rng.random_range(0..=max);
    Acl {
        name: name.into(),
        ip_version: IpVersion::V4,
        aces: (0..n)
            .map(|i| Ace {
                name: format!("{name}{i}"),
                matches: random_match(rng, urls),
                action: if rng.random_bool(0.15) {
                    Action::Drop
                } else {
                    Action::Accept
                },
            })
            .collect(),
    }
}

pub fn random_deployment(rng: &mut impl Rng) -> (DeploymentContext, Vec<(DeviceId, MudFile)>) {
    let n = rng.random_range(2..=4);
    let mut ctx = DeploymentContext::new();
    let mut devices = Vec::new();
    let mut urls = Vec::new();
    for i in 0..n {
        let url = format!(
            "https://{}/m{}.json",
            AUTHORITIES.choose(rng).unwrap(),
            rng.random_range(0..2)
        );
        let id = DeviceId::new(format!("d{i}"));
        ctx.add_device(id.clone(), url.clone()).unwrap();
        devices.push(id);
        urls.push(url);
    }
    if rng.random_bool(0.7) {
        ctx.bind_controller(CONTROLLER_CLASS, devices.choose(rng).unwrap().clone())
            .unwrap();
    }
    if rng.random_bool(0.7) {
        let owner = devices.choose(rng).unwrap().clone();
        ctx.bind_my_controller(owner, devices.choose(rng).unwrap().clone())
            .unwrap();
    }
    let mut entries = Vec::new();
    for (id, url) in devices.iter().zip(&urls) {
        if rng.random_bool(0.15) {
            continue;
        }
        let mut file = MudFile::new(url.clone(), "2024-01-01T00:00:00Z");
        let from = random_acl(rng, "from", 4, &urls);
        let to = random_acl(rng, "to", 3, &urls);
        for (acl, policy) in [
            (from, &mut file.from_device_policy),
            (to, &mut file.to_device_policy),
        ] {
            if !acl.aces.is_empty() {
                policy.push(acl.name.clone());
                file.acls.push(acl);
            }
        }
        entries.push((id.clone(), file));
    }
    (ctx, entries)
}
