//! Marker profiles: the annotation vocabulary and remote-call patterns that
//! drive component classification and extraction for one framework stack.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::ExtractError;
use crate::ir::{read_document, write_document, ComponentType, HttpMethod};

pub const PROFILE_SCHEMA: &str = "archdelta.profile";

/// Environment variable naming the default profile file.
pub const PROFILE_ENV: &str = "ARCHDELTA_PROFILE";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum EndpointMarker {
    /// The marker fixes the HTTP verb, like `GetMapping`.
    Verb(HttpMethod),
    /// The verb comes from a named attribute, like `RequestMapping(method = ...)`.
    /// Without the attribute the endpoint gets `default`.
    MethodAttribute { attribute: String, default: HttpMethod },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum VerbSource {
    Fixed(HttpMethod),
    /// Zero-based argument holding an expression like `HttpMethod.POST`.
    Argument(usize),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct RemoteCallPattern {
    /// Declared type of the receiver, e.g. `RestTemplate`.
    pub receiver_type: String,
    pub method: String,
    /// Zero-based argument holding the URL expression.
    pub url_argument: usize,
    pub verb: VerbSource,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct MarkerProfile {
    pub controller_markers: BTreeSet<String>,
    pub service_markers: BTreeSet<String>,
    pub repository_markers: BTreeSet<String>,
    pub entity_markers: BTreeSet<String>,
    pub endpoint_markers: BTreeMap<String, EndpointMarker>,
    /// Type-level marker carrying the controller's base path.
    #[serde(default = "default_base_path_markers")]
    pub base_path_markers: BTreeSet<String>,
    /// Annotation attributes that hold a path, in lookup order.
    #[serde(default = "default_path_attributes")]
    pub path_attributes: Vec<String>,
    /// Field markers that exclude a field from an entity.
    #[serde(default = "default_transient_markers")]
    pub transient_markers: BTreeSet<String>,
    pub remote_call_patterns: Vec<RemoteCallPattern>,
}

fn default_base_path_markers() -> BTreeSet<String> {
    set(&["RequestMapping"])
}

fn default_path_attributes() -> Vec<String> {
    vec!["value".into(), "path".into()]
}

fn default_transient_markers() -> BTreeSet<String> {
    set(&["Transient"])
}

fn set(items: &[&str]) -> BTreeSet<String> {
    items.iter().map(|s| s.to_string()).collect()
}

impl Default for MarkerProfile {
    /// Java Spring vocabulary with rest-template style remote calls.
    fn default() -> Self {
        use HttpMethod::*;
        let mut endpoint_markers = BTreeMap::new();
        for (token, verb) in [
            ("GetMapping", Get),
            ("PostMapping", Post),
            ("PutMapping", Put),
            ("DeleteMapping", Delete),
            ("PatchMapping", Patch),
        ] {
            endpoint_markers.insert(token.to_string(), EndpointMarker::Verb(verb));
        }
        endpoint_markers.insert(
            "RequestMapping".into(),
            EndpointMarker::MethodAttribute {
                attribute: "method".into(),
                default: Get,
            },
        );
        let rt = |method: &str, verb: VerbSource| RemoteCallPattern {
            receiver_type: "RestTemplate".into(),
            method: method.into(),
            url_argument: 0,
            verb,
        };
        MarkerProfile {
            controller_markers: set(&["RestController", "Controller"]),
            service_markers: set(&["Service"]),
            repository_markers: set(&["Repository"]),
            entity_markers: set(&["Entity", "Document"]),
            endpoint_markers,
            base_path_markers: default_base_path_markers(),
            path_attributes: default_path_attributes(),
            transient_markers: default_transient_markers(),
            remote_call_patterns: vec![
                rt("exchange", VerbSource::Argument(1)),
                rt("getForObject", VerbSource::Fixed(Get)),
                rt("getForEntity", VerbSource::Fixed(Get)),
                rt("postForObject", VerbSource::Fixed(Post)),
                rt("postForEntity", VerbSource::Fixed(Post)),
                rt("postForLocation", VerbSource::Fixed(Post)),
                rt("put", VerbSource::Fixed(Put)),
                rt("patchForObject", VerbSource::Fixed(Patch)),
                rt("delete", VerbSource::Fixed(Delete)),
            ],
        }
    }
}

impl MarkerProfile {
    pub fn markers_for(&self, ctype: ComponentType) -> &BTreeSet<String> {
        match ctype {
            ComponentType::Controller => &self.controller_markers,
            ComponentType::Service => &self.service_markers,
            ComponentType::Repository => &self.repository_markers,
            ComponentType::Entity => &self.entity_markers,
        }
    }

    /// Checks that the four classification marker sets are pairwise disjoint.
    pub fn validate(&self) -> Result<(), ExtractError> {
        let types = ComponentType::ALL;
        for (i, a) in types.iter().enumerate() {
            for b in &types[i + 1..] {
                if let Some(shared) = self.markers_for(*a).intersection(self.markers_for(*b)).next()
                {
                    return Err(ExtractError::Profile(format!(
                        "marker `{shared}` appears in both {a} and {b} sets"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn from_json(bytes: &[u8]) -> Result<Self, ExtractError> {
        let profile: MarkerProfile = read_document(PROFILE_SCHEMA, bytes)
            .map_err(|e| ExtractError::Profile(e.to_string()))?;
        profile.validate()?;
        Ok(profile)
    }

    pub fn to_json(&self) -> Vec<u8> {
        write_document(PROFILE_SCHEMA, self)
    }

    pub fn load(path: &Path) -> Result<Self, ExtractError> {
        let bytes = std::fs::read(path).map_err(|source| ExtractError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_json(&bytes)
    }

    /// Loads `path` if given, else the file named by `ARCHDELTA_PROFILE`, else the default.
    pub fn resolve(path: Option<&Path>) -> Result<Self, ExtractError> {
        match path {
            Some(p) => Self::load(p),
            None => match std::env::var_os(PROFILE_ENV) {
                Some(p) if !p.is_empty() => Self::load(Path::new(&p)),
                _ => Ok(Self::default()),
            },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_profile_is_disjoint() {
        MarkerProfile::default().validate().unwrap();
    }

    #[test]
    fn overlapping_markers_rejected() {
        let mut p = MarkerProfile::default();
        p.repository_markers.insert("Service".into());
        assert!(matches!(p.validate(), Err(ExtractError::Profile(_))));
    }

    #[test]
    fn profile_document_round_trips() {
        let p = MarkerProfile::default();
        assert_eq!(MarkerProfile::from_json(&p.to_json()).unwrap(), p);
    }
}
