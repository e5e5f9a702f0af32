//! Synthetic case generator with tunable discrimination.
//!
//! Every outcome gets a random signature assigning each parameter to one of
//! the three regions. A case of that outcome draws each parameter from a
//! normal distribution whose standard deviation is the interval half-width:
//! centred on the interval for a `Within` signature, and `separation`
//! half-widths beyond the matching edge for `Above`/`Below`. Values are then
//! blanked independently at `missing_rate`.

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::ingest::{cases_to_csv, write_file, CaseRecord, IngestError, ReferenceIntervals, RegionClass};
use crate::prune::{ParameterGroup, ParameterGroups};

#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub outcomes: usize,
    pub params: usize,
    pub cases: usize,
    pub seed: u64,
    pub separation: f64,
    pub missing_rate: f64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            outcomes: 14,
            params: 12,
            cases: 280,
            seed: 42,
            separation: 1.5,
            missing_rate: 0.1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthData {
    pub outcomes: Vec<String>,
    pub cases: Vec<CaseRecord>,
    pub intervals: ReferenceIntervals,
    pub groups: ParameterGroups,
    /// `signatures[o][p]`: region parameter `p` is drawn towards for outcome `o`.
    pub signatures: Vec<Vec<RegionClass>>,
}

pub fn param_name(j: usize) -> String {
    format!("P{:02}", j + 1)
}

pub fn generate(config: &SynthConfig) -> SynthData {
    assert!(
        config.outcomes >= 1 && config.params >= 1,
        "need at least one outcome and one parameter"
    );
    assert!(
        (0.0..=1.0).contains(&config.missing_rate),
        "missing rate must lie in [0, 1]"
    );
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);

    let outcomes: Vec<String> = (1..=config.outcomes).map(|i| i.to_string()).collect();
    let mut intervals = ReferenceIntervals::new();
    let mut groups = ParameterGroups::new();
    let mut centres = Vec::with_capacity(config.params);
    let split = config.params.div_ceil(2);
    for j in 0..config.params {
        let centre = 10.0 * (j + 1) as f64;
        let half = centre / 10.0;
        intervals
            .insert(param_name(j), centre - half, centre + half)
            .expect("generated interval is valid");
        let group = if j < split {
            ParameterGroup::Biochemical
        } else {
            ParameterGroup::Hematologic
        };
        groups.insert(param_name(j), group);
        centres.push((centre, half));
    }

    let signatures: Vec<Vec<RegionClass>> = (0..config.outcomes)
        .map(|_| {
            (0..config.params)
                .map(|_| RegionClass::ALL[rng.random_range(0..3)])
                .collect()
        })
        .collect();

    let mut cases = Vec::with_capacity(config.cases);
    for i in 0..config.cases {
        let outcome = rng.random_range(0..config.outcomes);
        let mut values = std::collections::BTreeMap::new();
        for (j, &(centre, half)) in centres.iter().enumerate() {
            let offset = match signatures[outcome][j] {
                RegionClass::Within => 0.0,
                RegionClass::Above => half * (1.0 + config.separation),
                RegionClass::Below => -half * (1.0 + config.separation),
            };
            let z: f64 = StandardNormal.sample(&mut rng);
            let value = centre + offset + half * z;
            let missing = rng.random_bool(config.missing_rate);
            values.insert(param_name(j), (!missing).then_some(round6(value)));
        }
        cases.push(CaseRecord {
            case_id: format!("s{:04}", i + 1),
            outcome: outcomes[outcome].clone(),
            values,
        });
    }
    SynthData {
        outcomes,
        cases,
        intervals,
        groups,
        signatures,
    }
}

// Keeps CSV text short and makes the written values the exact values used.
fn round6(v: f64) -> f64 {
    (v * 1e6).round() / 1e6
}

/// Writes `cases.csv`, `intervals.csv`, `groups.csv` and `frame.txt`, plus
/// `train.csv`/`test.csv` when `test_cases` is given (the last `test_cases`
/// cases form the test set).
pub fn write(data: &SynthData, out_dir: &Path, test_cases: Option<usize>) -> Result<(), IngestError> {
    std::fs::create_dir_all(out_dir).map_err(|source| IngestError::Io {
        path: out_dir.to_owned(),
        source,
    })?;
    write_file(&out_dir.join("cases.csv"), cases_to_csv(&data.cases)?.as_bytes())?;
    write_file(&out_dir.join("intervals.csv"), data.intervals.to_csv().as_bytes())?;
    write_file(&out_dir.join("groups.csv"), data.groups.to_csv().as_bytes())?;
    let frame: String = data.outcomes.iter().map(|o| format!("{o}\n")).collect();
    write_file(&out_dir.join("frame.txt"), frame.as_bytes())?;
    if let Some(k) = test_cases {
        let k = k.min(data.cases.len());
        let (train, test) = data.cases.split_at(data.cases.len() - k);
        write_file(&out_dir.join("train.csv"), cases_to_csv(train)?.as_bytes())?;
        write_file(&out_dir.join("test.csv"), cases_to_csv(test)?.as_bytes())?;
    }
    Ok(())
}
