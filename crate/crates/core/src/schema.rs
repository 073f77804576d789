//! Feature schemas for the seven detection systems and categorical encoding.
//!
//! A categorical dimension only needs an ordering of its values; each value
//! maps to its position in that ordering and is then handled exactly like a
//! continuous dimension by the forest.
//!
//! Shipped orderings:
//!
//! | dimension         | ordering (ordinal 0, 1, ...)                                   |
//! |-------------------|----------------------------------------------------------------|
//! | `match_rule`      | [`MATCH_RULES`] in the order the authentication system lists them |
//! | `signature_check` | `N`, `Y`                                                       |
//! | `device_check`    | `NN`, `YN`, `YY`                                               |
//! | `browser`         | [`BROWSERS`], alphabetical                                     |
//!
//! `day_of_week` (Monday = 0) and `hour_of_day` are continuous.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::forest::FeatureVector;
use crate::ingest::LogRecord;
use crate::scalar::Scalar;

pub const MATCH_RULES: [&str; 8] = [
    "DEVICEIDCHECK",
    "DEVICEVELOCITY",
    "USER_DEVICE_ASSOCIATED_AND_DEVICE_MFP_MATCHED",
    "USER_DEVICE_ASSOCIATED_AND_DEVICE_MFP_NOT_MATCHED",
    "USER_DEVICE_NOT_ASSOCIATED_AND_DEVICE_MFP_MATCHED",
    "USER_DEVICE_NOT_ASSOCIATED_AND_DEVICE_MFP_NOT_MATCHED",
    "USERVELOCITY",
    "USERKNOWN",
];

pub const SIGNATURE_VALUES: [&str; 2] = ["N", "Y"];

pub const DEVICE_VALUES: [&str; 3] = ["NN", "YN", "YY"];

pub const BROWSERS: [&str; 8] = [
    "Android",
    "Chrome",
    "Firefox",
    "Internet Explorer",
    "Opera",
    "PSP",
    "Safari",
    "SeaMonkey",
];

pub const MATCH_RULE: &str = "match_rule";
pub const SIGNATURE_CHECK: &str = "signature_check";
pub const DEVICE_CHECK: &str = "device_check";
pub const BROWSER: &str = "browser";
pub const DAY_OF_WEEK: &str = "day_of_week";
pub const HOUR_OF_DAY: &str = "hour_of_day";

pub const SYSTEM_IDS: [u8; 7] = [1, 2, 3, 4, 5, 6, 7];

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum DimensionKind {
    Continuous,
    Categorical { ordering: Vec<String> },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DimensionSpec {
    pub name: String,
    #[serde(flatten)]
    pub kind: DimensionKind,
}

impl DimensionSpec {
    pub fn continuous(name: impl Into<String>) -> Self {
        DimensionSpec {
            name: name.into(),
            kind: DimensionKind::Continuous,
        }
    }

    /// Categorical dimension; ordinals follow the order of `values`.
    pub fn categorical<S: AsRef<str>>(name: impl Into<String>, values: &[S]) -> Result<Self> {
        let name = name.into();
        let ordering: Vec<String> = values.iter().map(|v| v.as_ref().to_owned()).collect();
        for (i, v) in ordering.iter().enumerate() {
            if ordering[..i].contains(v) {
                return Err(Error::invalid(format!(
                    "duplicate value {v:?} in ordering of {name}"
                )));
            }
        }
        Ok(DimensionSpec {
            name,
            kind: DimensionKind::Categorical { ordering },
        })
    }

    pub fn is_categorical(&self) -> bool {
        matches!(self.kind, DimensionKind::Categorical { .. })
    }

    pub fn ordering(&self) -> Option<&[String]> {
        match &self.kind {
            DimensionKind::Categorical { ordering } => Some(ordering),
            DimensionKind::Continuous => None,
        }
    }

    /// Ordinal of `raw` in this dimension's ordering.
    pub fn ordinal(&self, raw: &str) -> Result<usize> {
        let ordering = self.ordering().ok_or_else(|| {
            Error::invalid(format!("dimension {} is not categorical", self.name))
        })?;
        ordering
            .iter()
            .position(|v| v == raw)
            .ok_or_else(|| Error::UnknownCategory {
                dimension: self.name.clone(),
                value: raw.to_owned(),
            })
    }

    /// Inverse of [`DimensionSpec::ordinal`].
    pub fn decode(&self, ordinal: usize) -> Option<&str> {
        self.ordering()?.get(ordinal).map(String::as_str)
    }
}

/// Encodes a categorical raw value as its ordinal.
pub fn encode_categorical<F: Scalar>(spec: &DimensionSpec, raw: &str) -> Result<F> {
    let ord = spec.ordinal(raw)?;
    Ok(F::from_usize(ord).expect("ordinal fits scalar"))
}

/// Ordered dimensions of one detection system.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "SchemaDocument")]
pub struct FeatureSchema {
    system_id: u8,
    dimensions: Vec<DimensionSpec>,
}

#[derive(Deserialize)]
struct SchemaDocument {
    system_id: u8,
    dimensions: Vec<DimensionSpec>,
}

impl TryFrom<SchemaDocument> for FeatureSchema {
    type Error = Error;

    fn try_from(doc: SchemaDocument) -> Result<Self> {
        let expected = build_schema(doc.system_id)?;
        if expected.dimensions != doc.dimensions {
            return Err(Error::invalid(format!(
                "schema dimensions do not match system {}",
                doc.system_id
            )));
        }
        Ok(expected)
    }
}

fn match_rule_dim() -> DimensionSpec {
    DimensionSpec::categorical(MATCH_RULE, &MATCH_RULES).expect("distinct match rules")
}

fn signature_dim() -> DimensionSpec {
    DimensionSpec::categorical(SIGNATURE_CHECK, &SIGNATURE_VALUES).expect("distinct values")
}

fn device_dim() -> DimensionSpec {
    DimensionSpec::categorical(DEVICE_CHECK, &DEVICE_VALUES).expect("distinct values")
}

fn browser_dim() -> DimensionSpec {
    DimensionSpec::categorical(BROWSER, &BROWSERS).expect("distinct browsers")
}

fn time_dims() -> [DimensionSpec; 2] {
    [
        DimensionSpec::continuous(DAY_OF_WEEK),
        DimensionSpec::continuous(HOUR_OF_DAY),
    ]
}

/// Schema for detection system `system_id` (1..=7).
///
/// Systems 1-4 use a single categorical feature, system 5 the log time
/// (day of week and hour of day), system 6 the four categorical features
/// and system 7 all of them.
pub fn build_schema(system_id: u8) -> Result<FeatureSchema> {
    let dimensions = match system_id {
        1 => vec![match_rule_dim()],
        2 => vec![signature_dim()],
        3 => vec![device_dim()],
        4 => vec![browser_dim()],
        5 => time_dims().to_vec(),
        6 => vec![match_rule_dim(), signature_dim(), device_dim(), browser_dim()],
        7 => {
            let mut d = vec![match_rule_dim(), signature_dim(), device_dim(), browser_dim()];
            d.extend(time_dims());
            d
        }
        other => {
            return Err(Error::invalid(format!(
                "system id {other} out of range 1..=7"
            )))
        }
    };
    Ok(FeatureSchema {
        system_id,
        dimensions,
    })
}

/// Human-readable row label for a system.
pub fn system_label(system_id: u8) -> &'static str {
    match system_id {
        1 => "System 1: Match Rule",
        2 => "System 2: Signature Check",
        3 => "System 3: Device Check",
        4 => "System 4: Browser",
        5 => "System 5: Log Time",
        6 => "System 6: Combined 4 features",
        7 => "System 7: Combined 4 features + time",
        _ => "unknown system",
    }
}

impl FeatureSchema {
    pub fn system_id(&self) -> u8 {
        self.system_id
    }

    pub fn dimensions(&self) -> &[DimensionSpec] {
        &self.dimensions
    }

    pub fn len(&self) -> usize {
        self.dimensions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dimensions.is_empty()
    }

    pub fn dimension(&self, name: &str) -> Option<&DimensionSpec> {
        self.dimensions.iter().find(|d| d.name == name)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

fn categorical_field<'r>(record: &'r LogRecord, name: &str) -> Result<&'r str> {
    let value = match name {
        MATCH_RULE => record.match_rule.as_str(),
        SIGNATURE_CHECK => record.signature_check.as_str(),
        DEVICE_CHECK => record.device_check.as_str(),
        BROWSER => record.browser.as_str(),
        _ => "",
    };
    if value.is_empty() {
        return Err(Error::MissingField {
            field: name.to_owned(),
        });
    }
    Ok(value)
}

fn continuous_field(record: &LogRecord, name: &str) -> Result<f64> {
    match name {
        DAY_OF_WEEK => Ok(record.day_of_week as f64),
        HOUR_OF_DAY => Ok(record.hour_of_day as f64),
        _ => Err(Error::MissingField {
            field: name.to_owned(),
        }),
    }
}

/// Encodes `record` into one value per schema dimension.
pub fn extract_features<F: Scalar>(
    schema: &FeatureSchema,
    record: &LogRecord,
) -> Result<FeatureVector<F>> {
    let mut values = Vec::with_capacity(schema.len());
    for dim in &schema.dimensions {
        let v = match &dim.kind {
            DimensionKind::Categorical { .. } => {
                encode_categorical(dim, categorical_field(record, &dim.name)?)?
            }
            DimensionKind::Continuous => F::from_f64_lossy(continuous_field(record, &dim.name)?),
        };
        values.push(v);
    }
    FeatureVector::new(values)
}
