use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use super::{from_json, to_json, AnnotationError};
use crate::urn::Cite2Urn;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Person {
    pub name: String,
    #[serde(flatten)]
    pub extra: Map<String, Value>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Organization {
    pub name: String,
    #[serde(flatten)]
    pub extra: Map<String, Value>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AttributionData {
    #[serde(default)]
    pub references: Vec<Cite2Urn>,
    #[serde(flatten)]
    pub extra: Map<String, Value>,
}

/// Credit for one contributor's work on a set of annotation records.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AttributionRecord {
    pub role: String,
    pub person: Person,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub organization: Option<Organization>,
    #[serde(default)]
    pub data: AttributionData,
    #[serde(flatten)]
    pub extra: Map<String, Value>,
}

impl AttributionRecord {
    pub fn references(&self) -> &[Cite2Urn] {
        &self.data.references
    }

    /// "Name, Organization" as shown in the contribution report.
    pub fn contributor(&self) -> String {
        match &self.organization {
            Some(o) if !o.name.is_empty() => format!("{}, {}", self.person.name, o.name),
            _ => self.person.name.clone(),
        }
    }
}

pub fn parse_attributions(bytes: &[u8]) -> Result<Vec<AttributionRecord>, AnnotationError> {
    let records: Vec<AttributionRecord> = from_json(bytes)?;
    for (i, r) in records.iter().enumerate() {
        if r.role.trim().is_empty() {
            return Err(AnnotationError::Schema(format!("record {i}: empty role")));
        }
        if r.person.name.trim().is_empty() {
            return Err(AnnotationError::Schema(format!("record {i}: empty person name")));
        }
    }
    Ok(records)
}

pub fn write_attributions(records: &[AttributionRecord]) -> Vec<u8> {
    to_json(&records)
}
