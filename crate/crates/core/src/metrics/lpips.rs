//! Externally computed LPIPS scores, read from `scene_id,gain_db,lpips` CSV.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::noise::gain_key;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LpipsSource {
    External,
    Absent,
}

impl LpipsSource {
    pub fn as_str(self) -> &'static str {
        match self {
            LpipsSource::External => "external",
            LpipsSource::Absent => "absent",
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct LpipsTable {
    scores: BTreeMap<(String, String), f64>,
    loaded: bool,
}

impl LpipsTable {
    /// A table with no scores; every lookup reports `Absent`.
    pub fn absent() -> Self {
        Self::default()
    }

    pub fn is_loaded(&self) -> bool {
        self.loaded
    }

    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }

    /// Score and its provenance; missing entries count as 0 and `Absent`.
    pub fn lookup(&self, scene_id: &str, gain_db: f64) -> (f64, LpipsSource) {
        match self.scores.get(&(scene_id.to_string(), gain_key(gain_db))) {
            Some(&v) => (v, LpipsSource::External),
            None => (0.0, LpipsSource::Absent),
        }
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(true)
            .trim(csv::Trim::All)
            .from_reader(text.as_bytes());
        let headers = rdr
            .headers()
            .map_err(|e| Error::Csv { line: 1, reason: e.to_string() })?
            .clone();
        if headers.iter().collect::<Vec<_>>() != ["scene_id", "gain_db", "lpips"] {
            return Err(Error::Csv {
                line: 1,
                reason: format!("header must be scene_id,gain_db,lpips, got {}", headers.iter().collect::<Vec<_>>().join(",")),
            });
        }
        let mut scores = BTreeMap::new();
        for rec in rdr.records() {
            let rec = rec.map_err(|e| Error::Csv {
                line: e.position().map_or(0, |p| p.line()),
                reason: e.to_string(),
            })?;
            let line = rec.position().map_or(0, |p| p.line());
            let bad = |reason: String| Error::Csv { line, reason };
            if rec.len() != 3 {
                return Err(bad(format!("expected 3 fields, found {}", rec.len())));
            }
            let scene = rec[0].to_string();
            if scene.is_empty() {
                return Err(bad("empty scene_id".into()));
            }
            let gain: f64 = rec[1]
                .parse()
                .map_err(|_| bad(format!("gain_db {:?} is not a number", &rec[1])))?;
            let lpips: f64 = rec[2]
                .parse()
                .map_err(|_| bad(format!("lpips {:?} is not a number", &rec[2])))?;
            if !(lpips >= 0.0 && lpips.is_finite()) {
                return Err(bad(format!("lpips {lpips} must be finite and non-negative")));
            }
            if scores.insert((scene.clone(), gain_key(gain)), lpips).is_some() {
                return Err(bad(format!("duplicate row for ({scene}, {gain})")));
            }
        }
        Ok(LpipsTable { scores, loaded: true })
    }

    /// Reads a score file; a missing file yields an absent table.
    pub fn load(path: &Path) -> Result<Self> {
        match std::fs::read_to_string(path) {
            Ok(text) => Self::parse(&text),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(Self::absent()),
            Err(e) => Err(Error::io(path, e)),
        }
    }
}
