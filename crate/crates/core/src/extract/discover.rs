//! Locating microservice roots inside a checkout and naming them.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use walkdir::WalkDir;

use super::ExtractError;
use crate::ir::{read_document, write_document};

pub const SERVICE_NAMES_SCHEMA: &str = "archdelta.service-names";

const BUILD_DESCRIPTORS: &[&str] = &["pom.xml", "build.gradle", "build.gradle.kts"];

const SKIPPED_DIRS: &[&str] = &["target", "build", "node_modules", "out", "bin"];

/// Overrides for service names.
///
/// `directories` renames discovered service directories; `hosts` maps the
/// host part of remote-call URLs (as written in source or deployment
/// descriptors) to logical service names.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ServiceNames {
    #[serde(default)]
    pub directories: BTreeMap<String, String>,
    #[serde(default)]
    pub hosts: BTreeMap<String, String>,
}

impl ServiceNames {
    pub fn from_json(bytes: &[u8]) -> Result<Self, ExtractError> {
        read_document(SERVICE_NAMES_SCHEMA, bytes).map_err(|e| ExtractError::Profile(e.to_string()))
    }

    pub fn to_json(&self) -> Vec<u8> {
        write_document(SERVICE_NAMES_SCHEMA, self)
    }

    pub fn load(path: &Path) -> Result<Self, ExtractError> {
        let bytes = std::fs::read(path).map_err(|source| ExtractError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_json(&bytes)
    }

    pub fn service_for_dir(&self, dir_name: &str) -> String {
        self.directories
            .get(dir_name)
            .cloned()
            .unwrap_or_else(|| dir_name.to_string())
    }

    pub fn service_for_host(&self, host: &str) -> String {
        self.hosts
            .get(host)
            .or_else(|| self.directories.get(host))
            .cloned()
            .unwrap_or_else(|| host.to_string())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ServiceRoot {
    pub name: String,
    pub path: PathBuf,
}

pub(crate) fn is_skipped_dir(name: &str) -> bool {
    name.starts_with('.') || SKIPPED_DIRS.contains(&name)
}

fn has_descriptor(dir: &Path) -> bool {
    BUILD_DESCRIPTORS.iter().any(|d| dir.join(d).is_file())
}

/// Finds microservice roots under `root`.
///
/// Every directory holding a build descriptor with no descriptor directory
/// beneath it is one service (aggregator parents are skipped). A tree with
/// no descriptors at all is treated as a single service rooted at `root`.
pub fn discover_services(root: &Path, names: &ServiceNames) -> Result<Vec<ServiceRoot>, ExtractError> {
    if !root.is_dir() {
        return Err(ExtractError::UnreadableTree {
            path: root.to_path_buf(),
            message: "not a directory".into(),
        });
    }
    let mut descriptor_dirs = Vec::new();
    let walker = WalkDir::new(root)
        .sort_by_file_name()
        .into_iter()
        .filter_entry(|e| {
            e.depth() == 0 || !e.file_type().is_dir() || !is_skipped_dir(&e.file_name().to_string_lossy())
        });
    for entry in walker {
        let entry = entry.map_err(|e| ExtractError::UnreadableTree {
            path: root.to_path_buf(),
            message: e.to_string(),
        })?;
        if entry.file_type().is_dir() && has_descriptor(entry.path()) {
            descriptor_dirs.push(entry.path().to_path_buf());
        }
    }
    let leaves: Vec<&PathBuf> = descriptor_dirs
        .iter()
        .filter(|d| !descriptor_dirs.iter().any(|o| o != *d && o.starts_with(d)))
        .collect();
    let dir_name = |p: &Path| {
        p.file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_else(|| "service".to_string())
    };
    let mut out: Vec<ServiceRoot> = if leaves.is_empty() {
        vec![ServiceRoot {
            name: names.service_for_dir(&dir_name(root)),
            path: root.to_path_buf(),
        }]
    } else {
        leaves
            .into_iter()
            .map(|p| ServiceRoot {
                name: names.service_for_dir(&dir_name(p)),
                path: p.clone(),
            })
            .collect()
    };
    out.sort_by(|a, b| a.name.cmp(&b.name));
    for w in out.windows(2) {
        if w[0].name == w[1].name {
            return Err(ExtractError::DuplicateService(w[0].name.clone()));
        }
    }
    Ok(out)
}
