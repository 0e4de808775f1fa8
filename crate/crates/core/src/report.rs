//! Batch experiments and the summary table.
//!
//! A batch solves every instance twice: once for the defender-best
//! equilibrium (Price of Security) and once for the attacker-best one
//! (Price of Aggression). One [`BatchRow`] per instance records both; the
//! report then lists the rows and a mean/range aggregate per network size.

use std::collections::BTreeMap;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{CngError, Result};
use crate::metrics::{price_of_aggression, price_of_security};
use crate::model::CngInstance;
use crate::zeroregrets::SolveConfig;

/// Label used in the instance column of aggregate rows.
pub const AGGREGATE_LABEL: &str = "ALL";

pub const REPORT_HEADER: [&str; 10] = [
    "Instance",
    "|V|",
    "POS",
    "POS Range",
    "POA",
    "POA Range",
    "Phi",
    "f^d",
    "f^a",
    "Time (s)",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchRow {
    pub instance: String,
    pub n: usize,
    pub pos: f64,
    pub poa: f64,
    /// Mean certified regret of the two runs.
    pub phi: f64,
    pub pos_phi: f64,
    pub poa_phi: f64,
    /// Defender payoff at the defender-best equilibrium.
    pub defender_payoff: f64,
    /// Attacker payoff at the attacker-best equilibrium.
    pub attacker_payoff: f64,
    /// Mean wall time of the two runs.
    pub time_s: f64,
    pub pos_status: String,
    pub poa_status: String,
}

impl BatchRow {
    pub fn proved(&self) -> bool {
        let p = crate::zeroregrets::SolveStatus::ProvedOptimalNe.as_str();
        self.pos_status == p && self.poa_status == p
    }
}

/// Runs both price computations on one instance.
pub fn run_instance(name: &str, inst: &CngInstance, config: &SolveConfig) -> Result<BatchRow> {
    let pos = price_of_security(inst, config)?;
    let poa = price_of_aggression(inst, config)?;
    let (de, ae) = (&pos.equilibrium, &poa.equilibrium);
    Ok(BatchRow {
        instance: name.to_string(),
        n: inst.n,
        pos: pos.ratio,
        poa: poa.ratio,
        phi: 0.5 * (de.phi + ae.phi),
        pos_phi: de.phi,
        poa_phi: ae.phi,
        defender_payoff: de.defender_value,
        attacker_payoff: ae.attacker_value,
        time_s: 0.5 * (de.wall_time.as_secs_f64() + ae.wall_time.as_secs_f64()),
        pos_status: de.status.as_str().to_string(),
        poa_status: ae.status.as_str().to_string(),
    })
}

/// Runs every instance on a pool of `jobs` worker threads; rows keep the
/// input order.
pub fn run_batch(instances: &[(String, CngInstance)], config: &SolveConfig, jobs: usize) -> Result<Vec<BatchRow>> {
    use rayon::prelude::*;
    if jobs == 0 {
        return Err(CngError::InvalidConfig("jobs must be at least 1".into()));
    }
    config.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| CngError::InvalidConfig(format!("worker pool: {e}")))?;
    pool.install(|| {
        instances
            .par_iter()
            .map(|(name, inst)| {
                let row = run_instance(name, inst, config);
                if let Ok(r) = &row {
                    log::info!(
                        "{name}: pos {:.4} poa {:.4} phi {:.3} t {:.2}s",
                        r.pos,
                        r.poa,
                        r.phi,
                        r.time_s
                    );
                }
                row
            })
            .collect()
    })
}

pub fn write_rows<W: Write>(out: W, rows: &[BatchRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r).map_err(csv_error)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_rows<R: Read>(input: R) -> Result<Vec<BatchRow>> {
    csv::Reader::from_reader(input)
        .deserialize()
        .map(|r| r.map_err(csv_error))
        .collect()
}

fn csv_error(e: csv::Error) -> CngError {
    match e.into_kind() {
        csv::ErrorKind::Io(e) => CngError::Io(e),
        other => CngError::InvalidConfig(format!("csv: {other:?}")),
    }
}

/// One line of the summary table; ranges are `(min, max)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub instance: String,
    pub n: usize,
    pub pos: f64,
    pub pos_range: (f64, f64),
    pub poa: f64,
    pub poa_range: (f64, f64),
    pub phi: f64,
    pub defender_payoff: f64,
    pub attacker_payoff: f64,
    pub time_s: f64,
}

impl ReportRow {
    fn single(r: &BatchRow) -> Self {
        Self {
            instance: r.instance.clone(),
            n: r.n,
            pos: r.pos,
            pos_range: (r.pos, r.pos),
            poa: r.poa,
            poa_range: (r.poa, r.poa),
            phi: r.phi,
            defender_payoff: r.defender_payoff,
            attacker_payoff: r.attacker_payoff,
            time_s: r.time_s,
        }
    }

    fn aggregate(n: usize, rows: &[&BatchRow]) -> Self {
        let mean = |f: fn(&BatchRow) -> f64| rows.iter().map(|r| f(r)).sum::<f64>() / rows.len() as f64;
        let range = |f: fn(&BatchRow) -> f64| {
            rows.iter()
                .map(|r| f(r))
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)))
        };
        Self {
            instance: AGGREGATE_LABEL.to_string(),
            n,
            pos: mean(|r| r.pos),
            pos_range: range(|r| r.pos),
            poa: mean(|r| r.poa),
            poa_range: range(|r| r.poa),
            phi: mean(|r| r.phi),
            defender_payoff: mean(|r| r.defender_payoff),
            attacker_payoff: mean(|r| r.attacker_payoff),
            time_s: mean(|r| r.time_s),
        }
    }

    pub fn cells(&self) -> [String; 10] {
        let f = |v: f64| format!("{v:.2}");
        let range = |(lo, hi): (f64, f64)| format!("[{lo:.2}, {hi:.2}]");
        [
            self.instance.clone(),
            self.n.to_string(),
            f(self.pos),
            range(self.pos_range),
            f(self.poa),
            range(self.poa_range),
            f(self.phi),
            f(self.defender_payoff),
            f(self.attacker_payoff),
            f(self.time_s),
        ]
    }
}

/// Per-instance rows ordered by size then name, followed by one aggregate
/// row per size.
pub fn summarize(rows: &[BatchRow]) -> Vec<ReportRow> {
    let mut by_n: BTreeMap<usize, Vec<&BatchRow>> = BTreeMap::new();
    for r in rows {
        by_n.entry(r.n).or_default().push(r);
    }
    let mut out = Vec::with_capacity(rows.len() + by_n.len());
    for group in by_n.values_mut() {
        group.sort_by(|a, b| a.instance.cmp(&b.instance));
        out.extend(group.iter().map(|r| ReportRow::single(r)));
    }
    out.extend(by_n.iter().map(|(&n, group)| ReportRow::aggregate(n, group)));
    out
}

pub fn write_report<W: Write>(out: W, rows: &[BatchRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(REPORT_HEADER).map_err(csv_error)?;
    for r in summarize(rows) {
        w.write_record(r.cells()).map_err(csv_error)?;
    }
    w.flush()?;
    Ok(())
}
