//! JSON form of a QUBO instance: `{n, sense, entries: [[i, j, value]...], labels}`
//! with entries in row-major order, `i <= j`.

use serde::{Deserialize, Serialize};

use qsqs_core::{QuboInstance, Sense};

use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuboJson {
    pub n: usize,
    pub sense: String,
    pub entries: Vec<(usize, usize, f64)>,
    pub labels: Vec<usize>,
}

pub fn sense_name(s: Sense) -> &'static str {
    match s {
        Sense::Maximize => "maximize",
        Sense::Minimize => "minimize",
    }
}

impl From<&QuboInstance> for QuboJson {
    fn from(q: &QuboInstance) -> Self {
        Self {
            n: q.n(),
            sense: sense_name(q.sense()).to_owned(),
            entries: q.entries().collect(),
            labels: q.labels().to_vec(),
        }
    }
}

impl TryFrom<&QuboJson> for QuboInstance {
    type Error = Error;

    fn try_from(j: &QuboJson) -> Result<Self> {
        let sense = match j.sense.as_str() {
            "maximize" => Sense::Maximize,
            "minimize" => Sense::Minimize,
            other => return Err(Error::Validation(format!("unknown sense '{other}'"))),
        };
        Ok(QuboInstance::from_entries(
            j.n,
            sense,
            j.entries.iter().copied(),
            j.labels.clone(),
        )?)
    }
}
