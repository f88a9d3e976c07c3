//! The manifest of tool predicates available to plans.

use std::collections::HashSet;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::logic::{ArgMode, PredKey};

pub const DEFAULT_MANIFEST: &str = include_str!("../../assets/registry.json");

/// Tools every registry must provide.
pub const REQUIRED: [(&str, usize); 7] = [
    ("query_data", 4),
    ("filter", 3),
    ("project", 3),
    ("count", 2),
    ("anomaly", 2),
    ("aggregate", 4),
    ("sort_rel", 5),
];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ToolKind {
    Data,
    Algorithm,
    View,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Implementation {
    Core,
    Composed,
    ViewStub,
}

/// Mode flag as written in the manifest: `-` input, `+` output.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
enum Flag {
    #[serde(rename = "-")]
    In,
    #[serde(rename = "+")]
    Out,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ToolSpec {
    pub name: String,
    pub arity: usize,
    modes: Vec<Flag>,
    #[serde(default)]
    pub args: Vec<String>,
    pub kind: ToolKind,
    pub implementation: Implementation,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub definition: Option<String>,
    #[serde(default)]
    pub doc: String,
}

impl ToolSpec {
    pub fn key(&self) -> PredKey {
        PredKey::new(&self.name, self.arity)
    }

    pub fn modes(&self) -> Vec<ArgMode> {
        self.modes
            .iter()
            .map(|f| match f {
                Flag::In => ArgMode::In,
                Flag::Out => ArgMode::Out,
            })
            .collect()
    }

    /// `name(-A, -B, +C)` in the manifest's notation.
    pub fn signature(&self) -> String {
        let args: Vec<String> = self
            .modes
            .iter()
            .enumerate()
            .map(|(i, f)| {
                let sign = if *f == Flag::In { '-' } else { '+' };
                let name = self.args.get(i).cloned().unwrap_or_else(|| format!("A{}", i + 1));
                format!("{sign}{name}")
            })
            .collect();
        format!("{}({})", self.name, args.join(", "))
    }
}

#[derive(Debug, thiserror::Error)]
pub enum RegistryError {
    #[error("manifest is not valid JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("{0} declares {1} modes")]
    ModeCount(PredKey, usize),
    #[error("{0} is listed twice")]
    Duplicate(PredKey),
    #[error("required tool {0} is missing")]
    Missing(PredKey),
    #[error("composed tool {0} has no definition")]
    NoDefinition(PredKey),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ToolRegistry {
    tools: Vec<ToolSpec>,
}

impl ToolRegistry {
    pub fn from_json(text: &str) -> Result<ToolRegistry, RegistryError> {
        let reg: ToolRegistry = serde_json::from_str(text)?;
        reg.validate()?;
        Ok(reg)
    }

    pub fn builtin() -> ToolRegistry {
        ToolRegistry::from_json(DEFAULT_MANIFEST).expect("bundled manifest is valid")
    }

    fn validate(&self) -> Result<(), RegistryError> {
        let mut seen = HashSet::new();
        for t in &self.tools {
            if t.modes.len() != t.arity {
                return Err(RegistryError::ModeCount(t.key(), t.modes.len()));
            }
            if !seen.insert(t.key()) {
                return Err(RegistryError::Duplicate(t.key()));
            }
            if t.implementation == Implementation::Composed && t.definition.is_none() {
                return Err(RegistryError::NoDefinition(t.key()));
            }
        }
        for (name, arity) in REQUIRED {
            let key = PredKey::new(name, arity);
            if !seen.contains(&key) {
                return Err(RegistryError::Missing(key));
            }
        }
        Ok(())
    }

    pub fn tools(&self) -> &[ToolSpec] {
        &self.tools
    }

    pub fn get(&self, key: &PredKey) -> Option<&ToolSpec> {
        self.tools.iter().find(|t| t.name == *key.name && t.arity == key.arity)
    }

    pub fn modes(&self, key: &PredKey) -> Option<Vec<ArgMode>> {
        self.get(key).map(ToolSpec::modes)
    }

    /// One line per tool: signature, then its doc.
    pub fn listing(&self) -> String {
        let mut out = String::new();
        for t in &self.tools {
            let _ = writeln!(out, "{}.", t.signature());
            if !t.doc.is_empty() {
                let _ = writeln!(out, "    % {}", t.doc);
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_manifest_loads() {
        let reg = ToolRegistry::builtin();
        for (name, arity) in REQUIRED {
            assert!(reg.get(&PredKey::new(name, arity)).is_some());
        }
        let q = reg.get(&PredKey::new("query_data", 4)).unwrap();
        assert_eq!(q.modes(), vec![ArgMode::In, ArgMode::In, ArgMode::In, ArgMode::Out]);
        assert_eq!(q.signature(), "query_data(-TableName, -Filter, -Projection, +[Header | Data])");
        assert!(reg.tools().iter().any(|t| t.name == "get_payments_data"));
        assert_eq!(reg.tools().iter().filter(|t| t.name.starts_with("display_")).count(), 10);
    }

    #[test]
    fn rejects_bad_manifests() {
        let bad_modes = r#"{"tools":[{"name":"x","arity":2,"modes":["-"],"kind":"data","implementation":"core"}]}"#;
        assert!(matches!(ToolRegistry::from_json(bad_modes), Err(RegistryError::ModeCount(..))));
        let missing = r#"{"tools":[]}"#;
        assert!(matches!(ToolRegistry::from_json(missing), Err(RegistryError::Missing(_))));
        let mut reg = ToolRegistry::builtin();
        let first = reg.tools[0].clone();
        reg.tools.push(first);
        let text = serde_json::to_string(&reg).unwrap();
        assert!(matches!(ToolRegistry::from_json(&text), Err(RegistryError::Duplicate(_))));
    }
}
