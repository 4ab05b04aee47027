//! Rule documents and violation records.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::RuleError;
use crate::ir::{ChangeKind, ComponentId, ComponentType, Endpoint, RestCall};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum AnalysisLevel {
    Delta,
    System,
}

/// Component vocabulary of rule filters. `Endpoint` and `Call` are members
/// of controllers and other components, treated here as nodes of their own.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum RuleComponentType {
    Endpoint,
    Call,
    Controller,
    Service,
    Repository,
}

impl RuleComponentType {
    pub fn of_component(t: ComponentType) -> Option<Self> {
        match t {
            ComponentType::Controller => Some(Self::Controller),
            ComponentType::Service => Some(Self::Service),
            ComponentType::Repository => Some(Self::Repository),
            ComponentType::Entity => None,
        }
    }

    pub fn component_type(self) -> Option<ComponentType> {
        match self {
            Self::Controller => Some(ComponentType::Controller),
            Self::Service => Some(ComponentType::Service),
            Self::Repository => Some(ComponentType::Repository),
            Self::Endpoint | Self::Call => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ChangeType {
    Add,
    #[serde(alias = "Modify")]
    Update,
    Delete,
    All,
}

impl ChangeType {
    pub fn admits(self, kind: ChangeKind) -> bool {
        matches!(
            (self, kind),
            (ChangeType::All, _)
                | (ChangeType::Add, ChangeKind::Add)
                | (ChangeType::Update, ChangeKind::Modify)
                | (ChangeType::Delete, ChangeKind::Delete)
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ImpactType {
    Unused,
    Inconsistent,
    Unmatched,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChangeFilter {
    #[serde(rename = "ComponentType")]
    pub component_types: Vec<RuleComponentType>,
    #[serde(rename = "ChangeType")]
    pub change_types: Vec<ChangeType>,
}

impl ChangeFilter {
    pub fn admits(&self, t: RuleComponentType, kind: ChangeKind) -> bool {
        self.component_types.contains(&t) && self.change_types.iter().any(|c| c.admits(kind))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MonitoredImpact {
    #[serde(rename = "ComponentType")]
    pub component_type: RuleComponentType,
    #[serde(rename = "ImpactType")]
    pub impact_type: ImpactType,
}

fn default_hops() -> usize {
    1
}

fn is_default_hops(h: &usize) -> bool {
    *h == 1
}

/// One potential-conflict rule: where it runs, which changes trigger it,
/// and what impact it watches for.
///
/// `Binding` names a built-in detector; when absent, a rule whose name is a
/// built-in detector name binds to it. `MaxHops` bounds generic traversal.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Rule {
    pub name: String,
    #[serde(rename = "AnalysisLevels")]
    pub analysis_levels: Vec<AnalysisLevel>,
    #[serde(rename = "ChangedComponents", default)]
    pub changed_components: Vec<ChangeFilter>,
    #[serde(rename = "MonitoredImpact")]
    pub monitored_impact: MonitoredImpact,
    #[serde(rename = "Binding", default, skip_serializing_if = "Option::is_none")]
    pub binding: Option<String>,
    #[serde(rename = "MaxHops", default = "default_hops", skip_serializing_if = "is_default_hops")]
    pub max_hops: usize,
}

impl Rule {
    pub fn levels(&self) -> BTreeSet<AnalysisLevel> {
        self.analysis_levels.iter().copied().collect()
    }

    pub fn validate(&self) -> Result<(), RuleError> {
        let invalid = |message: &str| RuleError::Invalid {
            rule: self.name.clone(),
            message: message.to_string(),
        };
        if self.name.trim().is_empty() {
            return Err(invalid("rule name must not be empty"));
        }
        if self.analysis_levels.is_empty() {
            return Err(invalid("AnalysisLevels must not be empty"));
        }
        for f in &self.changed_components {
            if f.component_types.is_empty() || f.change_types.is_empty() {
                return Err(invalid("ChangedComponents entries need ComponentType and ChangeType"));
            }
        }
        Ok(())
    }
}

/// A change that led to a violation.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Trigger {
    pub component_id: ComponentId,
    pub change_kind: ChangeKind,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "camelCase")]
pub enum Evidence {
    /// A remote call with no partner endpoint.
    Call { call: RestCall },
    Endpoint { endpoint: Endpoint },
    /// A method whose observable behavior may have shifted.
    #[serde(rename_all = "camelCase")]
    Method {
        method: String,
        arity: usize,
        reasons: Vec<String>,
    },
    /// A component reached from the primary item.
    #[serde(rename_all = "camelCase")]
    Reached { from: ComponentId },
    Component { reason: String },
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ImpactedItem {
    pub component_id: ComponentId,
    pub evidence: Evidence,
}

impl ImpactedItem {
    /// Stable identity used by the dedup key.
    pub fn identity(&self) -> String {
        match &self.evidence {
            Evidence::Call { call } => call_identity(call),
            Evidence::Endpoint { endpoint } => endpoint_identity(endpoint),
            Evidence::Method { method, arity, .. } => {
                format!("{}#{method}/{arity}", self.component_id)
            }
            Evidence::Reached { .. } | Evidence::Component { .. } => self.component_id.to_string(),
        }
    }
}

pub fn call_identity(c: &RestCall) -> String {
    format!(
        "{}|{}|{}|{}|{}",
        c.owning_component, c.site_method, c.http_method, c.target_service, c.path
    )
}

pub fn endpoint_identity(e: &Endpoint) -> String {
    format!("{}|{}|{}", e.owning_component, e.http_method, e.path)
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Violation {
    pub rule_name: String,
    pub dedup_key: String,
    pub system_version_label: String,
    pub triggering: Vec<Trigger>,
    pub impacted: Vec<ImpactedItem>,
}

impl Violation {
    /// Builds a violation; the first impacted item is the primary one and
    /// alone determines the dedup key.
    pub fn new(
        rule_name: &str,
        label: &str,
        triggering: Vec<Trigger>,
        impacted: Vec<ImpactedItem>,
    ) -> Self {
        assert!(!impacted.is_empty(), "a violation names at least one item");
        let dedup_key = dedup_key(rule_name, &impacted[0]);
        let mut triggering = triggering;
        triggering.sort();
        triggering.dedup();
        Violation {
            rule_name: rule_name.to_string(),
            dedup_key,
            system_version_label: label.to_string(),
            triggering,
            impacted,
        }
    }

    pub fn primary(&self) -> &ImpactedItem {
        &self.impacted[0]
    }
}

pub fn dedup_key(rule_name: &str, primary: &ImpactedItem) -> String {
    crate::ir::hash::sha256_hex(format!("{rule_name}\n{}", primary.identity()))
}
