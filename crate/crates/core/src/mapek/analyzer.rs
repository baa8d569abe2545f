use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::knowledge::{InfluentialElement, QualityRecord, Quantifier, Snapshot, Threshold};
use super::MapekError;
use crate::hlpn::Value;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub record: QualityRecord,
    pub violated: bool,
}

/// Check every record against its threshold, in quality-name order.
pub fn verification(
    records: &BTreeMap<String, QualityRecord>,
    thresholds: &BTreeMap<String, Threshold>,
) -> Result<Vec<Verdict>, MapekError> {
    records
        .values()
        .map(|r| {
            let th = thresholds
                .get(&r.name)
                .ok_or_else(|| MapekError::MissingThreshold(r.name.clone()))?;
            let v = r
                .value
                .as_number()
                .ok_or_else(|| MapekError::NotComparable {
                    quality: r.name.clone(),
                    value: r.value.clone(),
                })?;
            Ok(Verdict {
                record: r.clone(),
                violated: !th.satisfied(v),
            })
        })
        .collect()
}

pub fn adaptation_required(verdicts: &[Verdict]) -> bool {
    verdicts.iter().any(|v| v.violated)
}

/// Attribute each violated quality to the elements its quantifier read.
/// Quantifiers without attribution yield a single `unknown` element.
pub fn determine_influential_elements(
    verdicts: &[Verdict],
    quantifiers: &[Box<dyn Quantifier>],
    snapshot: &Snapshot,
) -> Result<Vec<InfluentialElement>, MapekError> {
    if !adaptation_required(verdicts) {
        return Err(MapekError::NoViolation);
    }
    let mut out: Vec<InfluentialElement> = Vec::new();
    for v in verdicts.iter().filter(|v| v.violated) {
        let elems = quantifiers
            .iter()
            .find(|q| q.name() == v.record.name)
            .and_then(|q| q.attribution(snapshot))
            .unwrap_or_else(|| {
                vec![InfluentialElement::new(
                    "unknown",
                    Value::sym(&v.record.name),
                )]
            });
        for e in elems {
            if !out.contains(&e) {
                out.push(e);
            }
        }
    }
    Ok(out)
}
