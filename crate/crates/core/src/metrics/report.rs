use std::collections::{BTreeMap, BTreeSet, HashSet};

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::fingerprint::{fingerprint, tanimoto};
use crate::chem::{canonical_smiles, parse_smiles, MolGraph};
use crate::codecs::Representation;

/// Distinct molecules above this count are subsampled for diversity.
pub const DIVERSITY_EXACT_LIMIT: usize = 2000;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error, Serialize)]
pub enum MetricError {
    #[error("sample is empty")]
    EmptySample,
    #[error("no valid molecules")]
    NoValid,
    #[error("fewer than two distinct valid molecules")]
    TooFewDistinct,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationSample {
    pub lines: Vec<String>,
    pub representation: Representation,
    pub temperature: Option<f64>,
    pub top_k: Option<u32>,
    pub source_checkpoint: Option<String>,
}

impl GenerationSample {
    pub fn new(lines: Vec<String>, representation: Representation) -> Self {
        GenerationSample {
            lines,
            representation,
            temperature: None,
            top_k: None,
            source_checkpoint: None,
        }
    }
}

/// Canonical keys of a training set.
#[derive(Debug, Clone, Default)]
pub struct ReferenceSet {
    keys: HashSet<String>,
    /// Lines that did not parse as SMILES.
    pub rejected: usize,
}

impl ReferenceSet {
    /// Each line is re-canonicalized so any valid spelling matches.
    pub fn from_lines<'a, I: IntoIterator<Item = &'a str>>(lines: I) -> ReferenceSet {
        let mut set = ReferenceSet::default();
        for l in lines.into_iter().map(str::trim).filter(|l| !l.is_empty()) {
            match parse_smiles(l) {
                Ok(g) => {
                    set.keys.insert(canonical_smiles(&g));
                }
                Err(_) => set.rejected += 1,
            }
        }
        set
    }

    pub fn len(&self) -> usize {
        self.keys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.keys.is_empty()
    }

    pub fn contains(&self, canonical: &str) -> bool {
        self.keys.contains(canonical)
    }
}

fn decode_all(lines: &[String], repr: Representation) -> Vec<Option<MolGraph>> {
    lines.par_iter().map(|l| repr.decode(l).ok()).collect()
}

pub fn validity(sample: &GenerationSample) -> Result<f64, MetricError> {
    if sample.lines.is_empty() {
        return Err(MetricError::EmptySample);
    }
    let valid = decode_all(&sample.lines, sample.representation)
        .iter()
        .filter(|g| g.is_some())
        .count();
    Ok(valid as f64 / sample.lines.len() as f64)
}

fn distinct_keys(graphs: &[Option<MolGraph>]) -> (usize, BTreeMap<String, usize>) {
    let keys: Vec<(String, usize)> = graphs
        .par_iter()
        .enumerate()
        .filter_map(|(i, g)| g.as_ref().map(|g| (canonical_smiles(g), i)))
        .collect();
    let valid = keys.len();
    let mut distinct = BTreeMap::new();
    for (k, i) in keys {
        distinct.entry(k).or_insert(i);
    }
    (valid, distinct)
}

pub fn uniqueness(sample: &GenerationSample) -> Result<f64, MetricError> {
    let (valid, distinct) = distinct_keys(&decode_all(&sample.lines, sample.representation));
    if valid == 0 {
        return Err(MetricError::NoValid);
    }
    Ok(distinct.len() as f64 / valid as f64)
}

fn novelty_of(distinct: &BTreeMap<String, usize>, reference: &ReferenceSet) -> Result<f64, MetricError> {
    if distinct.is_empty() {
        return Err(MetricError::NoValid);
    }
    let novel = distinct.keys().filter(|k| !reference.contains(k)).count();
    Ok(novel as f64 / distinct.len() as f64)
}

pub fn novelty(sample: &GenerationSample, reference: &ReferenceSet) -> Result<f64, MetricError> {
    let (_, distinct) = distinct_keys(&decode_all(&sample.lines, sample.representation));
    novelty_of(&distinct, reference)
}

fn diversity_of(graphs: &[&MolGraph], seed: u64) -> Result<f64, MetricError> {
    if graphs.len() < 2 {
        return Err(MetricError::TooFewDistinct);
    }
    let picked: Vec<&MolGraph> = if graphs.len() > DIVERSITY_EXACT_LIMIT {
        let mut idx = sample(
            &mut ChaCha8Rng::seed_from_u64(seed),
            graphs.len(),
            DIVERSITY_EXACT_LIMIT,
        )
        .into_vec();
        idx.sort_unstable();
        idx.into_iter().map(|i| graphs[i]).collect()
    } else {
        graphs.to_vec()
    };
    let fps: Vec<_> = picked.par_iter().map(|g| fingerprint(g)).collect();
    let rows: Vec<f64> = (0..fps.len())
        .into_par_iter()
        .map(|i| fps[i + 1..].iter().map(|f| tanimoto(&fps[i], f)).sum())
        .collect();
    let pairs = fps.len() * (fps.len() - 1) / 2;
    Ok(1.0 - rows.iter().sum::<f64>() / pairs as f64)
}

/// One minus the mean pairwise Tanimoto similarity over distinct valid molecules.
pub fn diversity(sample: &GenerationSample, seed: u64) -> Result<f64, MetricError> {
    let graphs = decode_all(&sample.lines, sample.representation);
    let (_, distinct) = distinct_keys(&graphs);
    let reps: Vec<&MolGraph> = distinct.values().map(|&i| graphs[i].as_ref().expect("valid")).collect();
    diversity_of(&reps, seed)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MetricCounts {
    pub total: usize,
    pub valid: usize,
    pub unique: usize,
}

/// The four metrics in table order. A metric that cannot be computed is
/// `None` with the reason alongside.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricReport {
    pub validity: Option<f64>,
    pub uniqueness: Option<f64>,
    pub diversity: Option<f64>,
    pub novelty: Option<f64>,
    pub counts: MetricCounts,
    pub reasons: BTreeMap<&'static str, String>,
    pub warnings: Vec<String>,
}

pub fn metric_report(sample: &GenerationSample, reference: &ReferenceSet, seed: u64) -> MetricReport {
    let mut reasons = BTreeMap::new();
    let mut warnings = Vec::new();
    let graphs = decode_all(&sample.lines, sample.representation);
    let (valid, distinct) = distinct_keys(&graphs);
    let counts = MetricCounts {
        total: sample.lines.len(),
        valid,
        unique: distinct.len(),
    };
    let mut keep = |name: &'static str, r: Result<f64, MetricError>| match r {
        Ok(v) => Some(v),
        Err(e) => {
            reasons.insert(name, e.to_string());
            None
        }
    };
    let validity = keep(
        "validity",
        if counts.total == 0 {
            Err(MetricError::EmptySample)
        } else {
            Ok(valid as f64 / counts.total as f64)
        },
    );
    let uniqueness = keep(
        "uniqueness",
        if valid == 0 {
            Err(MetricError::NoValid)
        } else {
            Ok(distinct.len() as f64 / valid as f64)
        },
    );
    let reps: Vec<&MolGraph> = distinct.values().map(|&i| graphs[i].as_ref().expect("valid")).collect();
    let diversity = keep("diversity", diversity_of(&reps, seed));
    if reference.is_empty() {
        warnings.push("empty reference set; every molecule counts as novel".to_string());
    }
    let novelty = keep("novelty", novelty_of(&distinct, reference));
    MetricReport {
        validity,
        uniqueness,
        diversity,
        novelty,
        counts,
        reasons,
        warnings,
    }
}

/// A generated line with its sampling settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleLine {
    pub line: String,
    #[serde(default)]
    pub temperature: Option<f64>,
    #[serde(default)]
    pub top_k: Option<u32>,
    #[serde(default)]
    pub checkpoint: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GroupBy {
    None,
    /// (temperature, top-k)
    Sampling,
    Checkpoint,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub group: String,
    pub report: MetricReport,
}

fn sampling_label(t: Option<f64>, k: Option<u32>) -> String {
    let t = t.map_or("-".to_string(), |t| format!("{t}"));
    let k = k.map_or("-".to_string(), |k| k.to_string());
    format!("T={t};k={k}")
}

/// One report per setting group, groups in sorted label order.
pub fn sweep_reports(
    lines: &[SampleLine],
    repr: Representation,
    group_by: GroupBy,
    reference: &ReferenceSet,
    seed: u64,
) -> Vec<SweepRow> {
    let mut groups: BTreeMap<String, Vec<String>> = BTreeMap::new();
    for l in lines {
        let key = match group_by {
            GroupBy::None => "all".to_string(),
            GroupBy::Sampling => sampling_label(l.temperature, l.top_k),
            GroupBy::Checkpoint => l.checkpoint.clone().unwrap_or_else(|| "-".to_string()),
        };
        groups.entry(key).or_default().push(l.line.clone());
    }
    groups
        .into_iter()
        .map(|(group, lines)| SweepRow {
            report: metric_report(&GenerationSample::new(lines, repr), reference, seed),
            group,
        })
        .collect()
}

fn cell(v: Option<f64>) -> String {
    v.map_or(String::new(), |v| format!("{v:.4}"))
}

/// CSV with the metric columns in table order; unavailable values are empty
/// cells and their reasons go to the last column.
pub fn metrics_csv(label: &str, rows: &[SweepRow]) -> String {
    let mut out = format!("{label},Validity,Uniqueness,Diversity,Novelty,total,valid,unique,notes\n");
    for row in rows {
        let r = &row.report;
        let notes: BTreeSet<String> = r.reasons.iter().map(|(k, v)| format!("{k}: {v}")).collect();
        let notes = notes.into_iter().collect::<Vec<_>>().join("; ");
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{}\n",
            csv_field(&row.group),
            cell(r.validity),
            cell(r.uniqueness),
            cell(r.diversity),
            cell(r.novelty),
            r.counts.total,
            r.counts.valid,
            r.counts.unique,
            csv_field(&notes)
        ));
    }
    out
}

pub(crate) fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample(lines: &[&str]) -> GenerationSample {
        GenerationSample::new(lines.iter().map(|s| s.to_string()).collect(), Representation::Smiles)
    }

    #[test]
    fn validity_cases() {
        assert_eq!(validity(&sample(&["CCO", "C1CC"])).unwrap(), 0.5);
        assert_eq!(validity(&sample(&["CCO", "c1ccccc1", "N"])).unwrap(), 1.0);
        assert_eq!(validity(&sample(&[])), Err(MetricError::EmptySample));
    }

    #[test]
    fn uniqueness_cases() {
        assert_eq!(uniqueness(&sample(&["CCO", "OCC"])).unwrap(), 0.5);
        assert_eq!(uniqueness(&sample(&["CCO", "CCN", "c1ccccc1"])).unwrap(), 1.0);
        let ten = [
            "CCO", "OCC", "C(O)C", "CCN", "NCC", "c1ccccc1", "CC", "CCC", "CCCC", "CCCCC",
        ];
        // seven molecules once the ethanol and ethylamine spellings collapse
        assert_eq!(uniqueness(&sample(&ten)).unwrap(), 0.7);
        assert_eq!(uniqueness(&sample(&["C1CC"])), Err(MetricError::NoValid));
    }

    #[test]
    fn novelty_cases() {
        let refs = ReferenceSet::from_lines(["CCO", "CCN", "c1ccccc1", "CC"]);
        assert_eq!(novelty(&sample(&["OCC", "NCC"]), &refs).unwrap(), 0.0);
        assert_eq!(novelty(&sample(&["CCCl", "CCBr"]), &refs).unwrap(), 1.0);
        assert_eq!(novelty(&sample(&["CCO", "CCCl", "CCBr", "CCI"]), &refs).unwrap(), 0.75);
    }

    #[test]
    fn diversity_cases() {
        assert_eq!(diversity(&sample(&["CCO", "OCC"]), 0), Err(MetricError::TooFewDistinct));
        // methane and a single chlorine atom share no environments
        let d = diversity(&sample(&["C", "[Cl-]"]), 0).unwrap();
        assert_eq!(d, 1.0);
    }

    #[test]
    fn report_with_nothing_valid() {
        let r = metric_report(&sample(&["C1CC", "C(("]), &ReferenceSet::default(), 0);
        assert_eq!(r.validity, Some(0.0));
        assert_eq!((r.uniqueness, r.diversity, r.novelty), (None, None, None));
        assert_eq!(r.reasons.len(), 3);
        assert_eq!(
            r.counts,
            MetricCounts {
                total: 2,
                valid: 0,
                unique: 0
            }
        );
        let csv = metrics_csv(
            "Sample",
            &[SweepRow {
                group: "all".into(),
                report: r,
            }],
        );
        assert!(csv.starts_with("Sample,Validity,Uniqueness,Diversity,Novelty,"));
        assert!(csv.lines().nth(1).unwrap().starts_with("all,0.0000,,,,2,0,0,"));
    }

    #[test]
    fn all_valid_distinct_novel() {
        let r = metric_report(
            &sample(&["CCO", "c1ccccc1", "CCN"]),
            &ReferenceSet::from_lines(["CC"]),
            0,
        );
        assert_eq!((r.validity, r.uniqueness, r.novelty), (Some(1.0), Some(1.0), Some(1.0)));
        let d = r.diversity.unwrap();
        assert!(d > 0.0 && d <= 1.0);
    }

    #[test]
    fn sweep_groups_by_setting() {
        let mk = |l: &str, t: f64, k: Option<u32>| SampleLine {
            line: l.into(),
            temperature: Some(t),
            top_k: k,
            checkpoint: None,
        };
        let lines = [
            mk("CCO", 1.0, None),
            mk("CCN", 1.0, None),
            mk("C1CC", 0.7, Some(50)),
            mk("CC", 0.7, Some(50)),
        ];
        let rows = sweep_reports(
            &lines,
            Representation::Smiles,
            GroupBy::Sampling,
            &ReferenceSet::default(),
            0,
        );
        let groups: Vec<&str> = rows.iter().map(|r| r.group.as_str()).collect();
        assert_eq!(groups, ["T=0.7;k=50", "T=1;k=-"]);
        assert_eq!(rows[0].report.validity, Some(0.5));
        assert_eq!(rows[1].report.validity, Some(1.0));
    }
}
