//! Monte-Carlo power and level estimation.
//!
//! Each simulation draws one dataset and runs every requested test on it, so
//! methods are compared on paired data. Seeds are derived from the master
//! seed, the scenario name, the sample size and the simulation index (plus
//! the method name for the permutation stream), which makes the estimated
//! powers independent of thread scheduling.

use std::collections::BTreeMap;
use std::fmt::{self, Write as _};
use std::str::FromStr;
use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::{distance_matrix, rank_table, Metric};
use crate::dcov::dcov_pvalue;
use crate::error::{Error, Result};
use crate::permutation::{permutation_pvalue, Estimator, Method, PermutationPlan};
use crate::scenarios::{Generator, Scenario};
use crate::seed::{derive, tag};

pub const DEFAULT_SIMS: usize = 200;
pub const DEFAULT_POWER_REPLICATES: usize = 200;

#[derive(Debug, Clone, PartialEq)]
pub struct PowerSpec {
    pub scenario: Scenario,
    pub sample_sizes: Vec<usize>,
    pub methods: Vec<Method>,
    pub alpha: f64,
    pub sims: usize,
    pub replicates: usize,
    pub estimator: Estimator,
    pub metric: Metric,
    pub master_seed: u64,
}

impl PowerSpec {
    pub fn new(scenario: Scenario, sample_sizes: Vec<usize>) -> Self {
        Self {
            scenario,
            sample_sizes,
            methods: vec![Method::HhgPearson, Method::Dcov],
            alpha: 0.05,
            sims: DEFAULT_SIMS,
            replicates: DEFAULT_POWER_REPLICATES,
            estimator: Estimator::AddOne,
            metric: Metric::L2,
            master_seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParameter(msg));
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return bad(format!("alpha must lie in (0, 1), got {}", self.alpha));
        }
        if self.sims == 0 {
            return bad("number of simulations must be at least 1".into());
        }
        if self.replicates == 0 {
            return Err(Error::ZeroReplicates);
        }
        if self.methods.is_empty() {
            return bad("no methods requested".into());
        }
        if self.sample_sizes.is_empty() {
            return bad("no sample sizes requested".into());
        }
        if let Some(&n) = self.sample_sizes.iter().find(|&&n| n < 3) {
            return bad(format!("sample size {n} is below the minimum of 3"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerRow {
    pub scenario: String,
    pub method: Method,
    pub n: usize,
    pub power: f64,
    pub se: f64,
    pub rejections: usize,
    pub sims: usize,
    /// Time spent inside this method's tests, summed over simulations.
    pub seconds: f64,
}

impl PowerRow {
    fn new(scenario: String, method: Method, n: usize, rejections: usize, sims: usize, elapsed: Duration) -> Self {
        let power = rejections as f64 / sims as f64;
        Self {
            scenario,
            method,
            n,
            power,
            se: (power * (1.0 - power) / sims as f64).sqrt(),
            rejections,
            sims,
            seconds: elapsed.as_secs_f64(),
        }
    }

    fn sort_key(&self) -> (&str, &str, usize) {
        (&self.scenario, self.method.name(), self.n)
    }
}

/// Seed of the scenario's fixed structure (mixture means) for a study.
pub fn structure_seed(master: u64, scenario: &Scenario) -> u64 {
    derive(master, &[tag(&scenario.name())])
}

/// Data seed for one simulation.
pub fn simulation_seed(master: u64, scenario: &Scenario, n: usize, sim: usize) -> u64 {
    derive(master, &[tag(&scenario.name()), n as u64, sim as u64])
}

/// Permutation seed for one method within one simulation.
pub fn method_seed(simulation_seed: u64, method: Method) -> u64 {
    derive(simulation_seed, &[tag(method.name())])
}

struct SimOutcome {
    rejected: Vec<bool>,
    elapsed: Vec<Duration>,
}

fn run_simulation(spec: &PowerSpec, generator: &Generator, n: usize, sim: usize) -> Result<SimOutcome> {
    let seed = simulation_seed(spec.master_seed, &spec.scenario, n, sim);
    let (x, y) = generator.sample(n, seed)?;
    let (dx, dy) = (distance_matrix(&x, spec.metric), distance_matrix(&y, spec.metric));
    let ranks = spec
        .methods
        .iter()
        .any(|m| m.statistic_kind().is_some())
        .then(|| (rank_table(&dx), rank_table(&dy)));

    let mut out = SimOutcome {
        rejected: Vec::with_capacity(spec.methods.len()),
        elapsed: Vec::with_capacity(spec.methods.len()),
    };
    for &method in &spec.methods {
        let plan = PermutationPlan::new(spec.replicates, method_seed(seed, method)).with_estimator(spec.estimator);
        let start = Instant::now();
        let result = match (method.statistic_kind(), &ranks) {
            (Some(kind), Some((rx, ry))) => permutation_pvalue(rx, ry, kind, &plan)?,
            _ => dcov_pvalue(&dx, &dy, &plan)?,
        };
        out.elapsed.push(start.elapsed());
        out.rejected.push(result.p_value <= spec.alpha);
    }
    Ok(out)
}

/// Estimates power for every (sample size, method) of `spec`.
pub fn estimate_power(spec: &PowerSpec) -> Result<Vec<PowerRow>> {
    estimate_power_with_progress(spec, |_| {})
}

/// Like [`estimate_power`], calling `progress` as each row completes.
pub fn estimate_power_with_progress(spec: &PowerSpec, mut progress: impl FnMut(&PowerRow)) -> Result<Vec<PowerRow>> {
    spec.validate()?;
    let generator = Generator::new(spec.scenario, structure_seed(spec.master_seed, &spec.scenario))?;
    let name = spec.scenario.name();
    let mut rows = Vec::with_capacity(spec.sample_sizes.len() * spec.methods.len());
    for &n in &spec.sample_sizes {
        let outcomes: Vec<SimOutcome> = (0..spec.sims)
            .into_par_iter()
            .map(|sim| run_simulation(spec, &generator, n, sim))
            .collect::<Result<_>>()?;
        for (m, &method) in spec.methods.iter().enumerate() {
            let rejections = outcomes.iter().filter(|o| o.rejected[m]).count();
            let elapsed = outcomes.iter().map(|o| o.elapsed[m]).sum();
            let row = PowerRow::new(name.clone(), method, n, rejections, spec.sims, elapsed);
            progress(&row);
            rows.push(row);
        }
    }
    rows.sort_by(|a, b| a.sort_key().cmp(&b.sort_key()));
    Ok(rows)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TableFormat {
    #[default]
    Tsv,
    Json,
    Markdown,
}

impl FromStr for TableFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "tsv" => Ok(TableFormat::Tsv),
            "json" => Ok(TableFormat::Json),
            "markdown" | "md" => Ok(TableFormat::Markdown),
            other => Err(Error::InvalidParameter(format!(
                "unknown table format `{other}` (expected tsv, json or markdown)"
            ))),
        }
    }
}

impl fmt::Display for TableFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TableFormat::Tsv => "tsv",
            TableFormat::Json => "json",
            TableFormat::Markdown => "markdown",
        })
    }
}

/// Serializes rows sorted by (scenario, method, n).
pub fn emit_table(rows: &[PowerRow], format: TableFormat) -> Result<String> {
    if rows.is_empty() {
        return Err(Error::EmptyTable);
    }
    let mut rows = rows.to_vec();
    rows.sort_by(|a, b| a.sort_key().cmp(&b.sort_key()));
    let mut out = String::new();
    match format {
        TableFormat::Tsv => {
            out.push_str("scenario\tmethod\tn\tpower\tse\tseconds\n");
            for r in &rows {
                let _ = writeln!(out, "{}\t{}\t{}\t{}\t{}\t{:.3}", r.scenario, r.method, r.n, r.power, r.se, r.seconds);
            }
        }
        TableFormat::Json => {
            out = serde_json::to_string_pretty(&rows)?;
            out.push('\n');
        }
        TableFormat::Markdown => {
            // one table per scenario: sample sizes down, methods across,
            // cells "power (SE x 100)"
            let mut by_scenario: BTreeMap<&str, Vec<&PowerRow>> = BTreeMap::new();
            for r in &rows {
                by_scenario.entry(&r.scenario).or_default().push(r);
            }
            for (k, (scenario, rs)) in by_scenario.into_iter().enumerate() {
                if k > 0 {
                    out.push('\n');
                }
                let mut methods: Vec<Method> = rs.iter().map(|r| r.method).collect();
                methods.sort_by_key(|m| m.name());
                methods.dedup();
                let mut sizes: Vec<usize> = rs.iter().map(|r| r.n).collect();
                sizes.sort_unstable();
                sizes.dedup();

                let _ = writeln!(out, "### {scenario}\n");
                out.push_str("| Sample size |");
                methods.iter().for_each(|m| {
                    let _ = write!(out, " {m} |");
                });
                out.push_str("\n|---:|");
                methods.iter().for_each(|_| out.push_str("---:|"));
                out.push('\n');
                for n in sizes {
                    let _ = write!(out, "| N={n} |");
                    for m in &methods {
                        match rs.iter().find(|r| r.n == n && r.method == *m) {
                            Some(r) => {
                                let _ = write!(out, " {:.3} ({:.1}) |", r.power, r.se * 100.0);
                            }
                            None => out.push_str(" - |"),
                        }
                    }
                    out.push('\n');
                }
            }
        }
    }
    Ok(out)
}

/// Parses the output of [`emit_table`] in JSON format.
pub fn parse_json_table(text: &str) -> Result<Vec<PowerRow>> {
    Ok(serde_json::from_str(text)?)
}
