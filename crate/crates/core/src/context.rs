// SPDX-License-Identifier: Apache-2.0

//! The concrete network a set of MUD files is deployed on.

use std::collections::{BTreeMap, BTreeSet};

use ipnet::IpNet;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::finding::{Finding, FindingCode};
use crate::model::{canonical_domain, url_authority, DeviceId, MudFile};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ContextError {
    #[error("invalid context document: {0}")]
    Json(String),
    #[error("device id \"{0}\" is declared more than once")]
    DuplicateDevice(DeviceId),
    #[error("{binding} references unknown device id \"{device}\"")]
    UnknownDevice { binding: String, device: DeviceId },
}

impl ContextError {
    /// Whether the document was well formed but referred to devices it does not declare.
    pub fn is_reference_error(&self) -> bool {
        matches!(self, ContextError::UnknownDevice { .. })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Device {
    pub id: DeviceId,
    pub mud_url: String,
}

/// Raw on-disk form, validated into [`DeploymentContext`].
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ContextDocument {
    #[serde(default)]
    devices: Vec<Device>,
    #[serde(default)]
    controller_bindings: BTreeMap<String, BTreeSet<DeviceId>>,
    #[serde(default)]
    my_controller_bindings: BTreeMap<DeviceId, BTreeSet<DeviceId>>,
    #[serde(default)]
    local_prefixes: Vec<IpNet>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    dns_bindings: Option<BTreeMap<String, BTreeSet<IpNet>>>,
}

/// Devices, their MUD-URLs and the bindings abstractions resolve through.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "ContextDocument", into = "ContextDocument")]
pub struct DeploymentContext {
    devices: Vec<Device>,
    authorities: BTreeMap<DeviceId, Option<String>>,
    controller_bindings: BTreeMap<String, BTreeSet<DeviceId>>,
    my_controller_bindings: BTreeMap<DeviceId, BTreeSet<DeviceId>>,
    local_prefixes: Vec<IpNet>,
    dns_bindings: Option<BTreeMap<String, BTreeSet<IpNet>>>,
}

impl TryFrom<ContextDocument> for DeploymentContext {
    type Error = ContextError;

    fn try_from(doc: ContextDocument) -> Result<Self, Self::Error> {
        let mut ctx = DeploymentContext::default();
        for device in doc.devices {
            ctx.add_device(device.id, device.mud_url)?;
        }
        for (class, targets) in doc.controller_bindings {
            for target in targets {
                ctx.bind_controller(class.clone(), target)?;
            }
        }
        for (owner, targets) in doc.my_controller_bindings {
            for target in targets {
                ctx.bind_my_controller(owner.clone(), target)?;
            }
        }
        ctx.local_prefixes = doc.local_prefixes.into_iter().map(|p| p.trunc()).collect();
        if let Some(dns) = doc.dns_bindings {
            for (domain, nets) in dns {
                for net in nets {
                    ctx.bind_dns(&domain, net);
                }
            }
        }
        Ok(ctx)
    }
}

impl From<DeploymentContext> for ContextDocument {
    fn from(ctx: DeploymentContext) -> Self {
        ContextDocument {
            devices: ctx.devices,
            controller_bindings: ctx.controller_bindings,
            my_controller_bindings: ctx.my_controller_bindings,
            local_prefixes: ctx.local_prefixes,
            dns_bindings: ctx.dns_bindings,
        }
    }
}

impl DeploymentContext {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_json(bytes: &[u8]) -> Result<Self, ContextError> {
        let doc: ContextDocument =
            serde_json::from_slice(bytes).map_err(|e| ContextError::Json(e.to_string()))?;
        doc.try_into()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("context serializes")
    }

    pub fn add_device(
        &mut self,
        id: DeviceId,
        mud_url: impl Into<String>,
    ) -> Result<(), ContextError> {
        if self.authorities.contains_key(&id) {
            return Err(ContextError::DuplicateDevice(id));
        }
        let mud_url = mud_url.into();
        self.authorities.insert(id.clone(), url_authority(&mud_url));
        self.devices.push(Device { id, mud_url });
        Ok(())
    }

    fn require(&self, binding: impl FnOnce() -> String, id: &DeviceId) -> Result<(), ContextError> {
        if self.contains(id) {
            Ok(())
        } else {
            Err(ContextError::UnknownDevice {
                binding: binding(),
                device: id.clone(),
            })
        }
    }

    pub fn bind_controller(
        &mut self,
        class: impl Into<String>,
        device: DeviceId,
    ) -> Result<(), ContextError> {
        let class = class.into();
        self.require(|| format!("controller binding \"{class}\""), &device)?;
        self.controller_bindings
            .entry(class)
            .or_default()
            .insert(device);
        Ok(())
    }

    pub fn bind_my_controller(
        &mut self,
        owner: DeviceId,
        controller: DeviceId,
    ) -> Result<(), ContextError> {
        self.require(|| "my-controller binding".to_owned(), &owner)?;
        self.require(
            || format!("my-controller binding of \"{owner}\""),
            &controller,
        )?;
        self.my_controller_bindings
            .entry(owner)
            .or_default()
            .insert(controller);
        Ok(())
    }

    pub fn add_local_prefix(&mut self, prefix: IpNet) {
        self.local_prefixes.push(prefix.trunc());
    }

    pub fn bind_dns(&mut self, domain: &str, net: IpNet) {
        self.dns_bindings
            .get_or_insert_with(Default::default)
            .entry(canonical_domain(domain))
            .or_default()
            .insert(net.trunc());
    }

    pub fn devices(&self) -> &[Device] {
        &self.devices
    }

    pub fn device(&self, id: &DeviceId) -> Option<&Device> {
        self.devices.iter().find(|d| &d.id == id)
    }

    pub fn contains(&self, id: &DeviceId) -> bool {
        self.authorities.contains_key(id)
    }

    /// Authority of the device's MUD-URL, lower-cased.
    pub fn authority(&self, id: &DeviceId) -> Option<&str> {
        self.authorities.get(id).and_then(|a| a.as_deref())
    }

    pub fn controllers(&self, class: &str) -> impl Iterator<Item = &DeviceId> {
        self.controller_bindings.get(class).into_iter().flatten()
    }

    pub fn my_controllers(&self, device: &DeviceId) -> impl Iterator<Item = &DeviceId> {
        self.my_controller_bindings
            .get(device)
            .into_iter()
            .flatten()
    }

    pub fn local_prefixes(&self) -> &[IpNet] {
        &self.local_prefixes
    }

    pub fn dns_addresses(&self, domain: &str) -> impl Iterator<Item = &IpNet> {
        self.dns_bindings
            .as_ref()
            .and_then(|m| m.get(domain))
            .into_iter()
            .flatten()
    }
}

/// Result of attaching parsed files to the devices of a context.
#[derive(Debug, Clone, Default)]
pub struct Binding {
    pub context: DeploymentContext,
    pub entries: Vec<(DeviceId, MudFile)>,
    pub findings: Vec<Finding>,
}

/// Pair each device with the file whose MUD-URL it announces.
///
/// Without a context, every file becomes one device named after its label, so a file
/// analysed on its own behaves like a single-device deployment. The first file wins when
/// several share a MUD-URL.
pub fn bind_files(files: &[(String, MudFile)], context: Option<&DeploymentContext>) -> Binding {
    let Some(context) = context else {
        let mut ctx = DeploymentContext::new();
        let mut entries = Vec::new();
        for (label, file) in files {
            let mut id = DeviceId::new(label.clone());
            let mut n = 2;
            while ctx.contains(&id) {
                id = DeviceId::new(format!("{label}-{n}"));
                n += 1;
            }
            ctx.add_device(id.clone(), file.mud_url.clone())
                .expect("fresh id is unique");
            entries.push((id, file.clone()));
        }
        return Binding {
            context: ctx,
            entries,
            findings: Vec::new(),
        };
    };

    let mut entries = Vec::new();
    for device in context.devices() {
        if let Some((_, file)) = files.iter().find(|(_, f)| f.mud_url == device.mud_url) {
            entries.push((device.id.clone(), file.clone()));
        }
    }
    let findings = files
        .iter()
        .filter(|(_, f)| !context.devices().iter().any(|d| d.mud_url == f.mud_url))
        .map(|(label, f)| {
            Finding::semantic_warning(
                FindingCode::UnboundFile,
                format!(
                    "{label}: no device in the context announces MUD-URL {}",
                    f.mud_url
                ),
            )
        })
        .collect();
    Binding {
        context: context.clone(),
        entries,
        findings,
    }
}
