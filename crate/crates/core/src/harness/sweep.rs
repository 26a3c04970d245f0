//! Epsilon sweeps, power-law rate fits and directory reports.

use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;

use super::io::{write_atomic, CsvTable};
use super::run::{run_single_in, RunSummary};
use super::{RunConfig, EPS_FLOOR};
use crate::error::{Error, Result};

pub const CONVERGENCE_COLUMNS: &[&str] =
    &["eps", "sup_E", "sup_Hm1_rho", "sup_Hm1_J", "sup_weak_gap_rho", "sup_weak_gap_J", "E0"];

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ConvergenceRow {
    pub eps: f64,
    pub sup_e: f64,
    pub sup_hm1_rho: f64,
    pub sup_hm1_j: f64,
    pub sup_weak_gap_rho: f64,
    pub sup_weak_gap_j: f64,
    pub e0: f64,
    /// Wall-clock seconds; kept out of the CSV so that it stays byte-stable.
    pub runtime: f64,
}

impl ConvergenceRow {
    fn from_summary(s: &RunSummary, runtime: f64) -> Self {
        Self {
            eps: s.eps,
            sup_e: s.sup_e,
            sup_hm1_rho: s.sup_hm1_rho,
            sup_hm1_j: s.sup_hm1_j,
            sup_weak_gap_rho: s.sup_weak_gap_rho,
            sup_weak_gap_j: s.sup_weak_gap_j,
            e0: s.initial_energy,
            runtime,
        }
    }

    fn values(&self) -> Vec<f64> {
        vec![self.eps, self.sup_e, self.sup_hm1_rho, self.sup_hm1_j, self.sup_weak_gap_rho, self.sup_weak_gap_j, self.e0]
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SweepReport {
    pub dir: PathBuf,
    /// Sorted by eps, largest first.
    pub rows: Vec<ConvergenceRow>,
    pub complete: bool,
    pub failures: Vec<String>,
    pub runtime: f64,
    pub audits_pass: bool,
}

impl SweepReport {
    pub fn table(&self) -> CsvTable {
        CsvTable::new(CONVERGENCE_COLUMNS, self.rows.iter().map(|r| r.values()).collect())
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        self.table().column(name)
    }
}

/// Parses `0.1,0.05,...`; values must be distinct and at least the floor.
/// The result is sorted descending, so any input order yields the same table.
pub fn parse_eps_list(s: &str) -> Result<Vec<f64>> {
    let mut v = Vec::new();
    for tok in s.split(',').map(str::trim).filter(|t| !t.is_empty()) {
        let e: f64 = tok.parse().map_err(|_| Error::Config(format!("invalid eps '{tok}'")))?;
        v.push(e);
    }
    check_eps_list(v)
}

fn check_eps_list(mut v: Vec<f64>) -> Result<Vec<f64>> {
    if v.is_empty() {
        return Err(Error::Config("empty eps list".into()));
    }
    if let Some(e) = v.iter().find(|e| !(**e >= EPS_FLOOR) || !e.is_finite()) {
        return Err(Error::Config(format!("eps {e} below the floor {EPS_FLOOR}")));
    }
    v.sort_by(|a, b| b.total_cmp(a));
    if v.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::Config("eps list has repeated values".into()));
    }
    Ok(v)
}

fn row_dir(root: &Path, eps: f64) -> PathBuf {
    root.join(format!("eps_{eps:e}"))
}

/// One [`run_single_in`] per eps under `root/eps_<eps>`, then
/// `convergence.csv` and `sweep_summary.json` in `root`.
///
/// Every row uses the configured seed and the configured dt rule; an
/// explicit `dt` is rescaled by `sqrt(eps / eps_config)`.
pub fn sweep_epsilon(config: &RunConfig, eps_list: &[f64], root: &Path) -> Result<SweepReport> {
    let eps_list = check_eps_list(eps_list.to_vec())?;
    std::fs::create_dir_all(root)?;
    let start = Instant::now();
    let mut rows = Vec::new();
    let mut failures = Vec::new();
    let mut audits_pass = true;
    for &eps in &eps_list {
        let mut c = config.clone();
        c.eps = eps;
        c.dt = config.dt.map(|d| d * (eps / config.eps).sqrt());
        let t0 = Instant::now();
        match c.validate().and_then(|_| run_single_in(&c, &row_dir(root, eps))) {
            Ok(rep) => {
                audits_pass &= rep.summary.audits_pass;
                rows.push(ConvergenceRow::from_summary(&rep.summary, t0.elapsed().as_secs_f64()));
            }
            Err(e) => failures.push(format!("eps={eps}: {e}")),
        }
    }
    let rep = SweepReport {
        dir: root.to_path_buf(),
        complete: failures.is_empty(),
        rows,
        failures,
        runtime: start.elapsed().as_secs_f64(),
        audits_pass,
    };
    write_atomic(&root.join("convergence.csv"), rep.table().to_csv().as_bytes())?;
    let json = serde_json::to_string_pretty(&rep).map_err(|e| Error::Format(e.to_string()))?;
    write_atomic(&root.join("sweep_summary.json"), json.as_bytes())?;
    Ok(rep)
}

/// Least-squares slope of `ln value` against `ln eps`.
pub fn fit_rate(eps: &[f64], values: &[f64]) -> Result<f64> {
    if eps.len() != values.len() || eps.len() < 3 {
        return Err(Error::Data(format!("need at least 3 paired rows, got {} and {}", eps.len(), values.len())));
    }
    if let Some(v) = eps.iter().chain(values).find(|v| !(**v > 0.0) || !v.is_finite()) {
        return Err(Error::Data(format!("nonpositive entry {v} in rate fit")));
    }
    let x: Vec<f64> = eps.iter().map(|e| e.ln()).collect();
    let y: Vec<f64> = values.iter().map(|v| v.ln()).collect();
    let n = x.len() as f64;
    let (mx, my) = (x.iter().sum::<f64>() / n, y.iter().sum::<f64>() / n);
    let sxy: f64 = x.iter().zip(&y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::Data("rate fit needs distinct eps values".into()));
    }
    Ok(sxy / sxx)
}

/// Whether `v` strictly decreases along rows ordered by decreasing eps.
pub fn strictly_decreasing(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[1] < w[0])
}

#[derive(Clone, Debug, Serialize)]
pub struct DirReport {
    pub rows: Vec<ConvergenceRow>,
    pub monotone_e: bool,
    pub monotone_hm1_rho: bool,
    pub monotone_hm1_j: bool,
    pub rate_e: Option<f64>,
    pub rate_hm1_rho: Option<f64>,
    pub rate_hm1_j: Option<f64>,
    pub rate_e0: Option<f64>,
    /// Largest `T` such that `sup_{t <= T} E` strictly decreases with eps.
    pub horizon: f64,
}

/// Empirical horizon: the largest sampled time up to which the running
/// supremum of `E` is strictly decreasing in eps. `series[i]` holds
/// `(t, E)` for the i-th eps in decreasing order.
pub fn monotone_horizon(series: &[Vec<(f64, f64)>]) -> f64 {
    if series.is_empty() {
        return 0.0;
    }
    let len = series.iter().map(Vec::len).min().unwrap_or(0);
    let mut run_sup = vec![0.0f64; series.len()];
    let mut horizon = 0.0;
    for k in 0..len {
        for (s, r) in series.iter().zip(run_sup.iter_mut()) {
            *r = r.max(s[k].1);
        }
        if !strictly_decreasing(&run_sup) {
            break;
        }
        horizon = series[0][k].0;
    }
    horizon
}

/// Reads a sweep directory and writes `report.json` next to it.
pub fn report(dir: &Path) -> Result<DirReport> {
    let csv = std::fs::read_to_string(dir.join("convergence.csv"))?;
    let t = CsvTable::parse(&csv)?;
    let col = |n: &str| t.column(n).ok_or_else(|| Error::Format(format!("convergence.csv lacks column {n}")));
    let eps = col("eps")?;
    let (e, hr, hj, wr, wj, e0) =
        (col("sup_E")?, col("sup_Hm1_rho")?, col("sup_Hm1_J")?, col("sup_weak_gap_rho")?, col("sup_weak_gap_J")?, col("E0")?);
    let rows: Vec<ConvergenceRow> = (0..eps.len())
        .map(|i| ConvergenceRow {
            eps: eps[i],
            sup_e: e[i],
            sup_hm1_rho: hr[i],
            sup_hm1_j: hj[i],
            sup_weak_gap_rho: wr[i],
            sup_weak_gap_j: wj[i],
            e0: e0[i],
            runtime: f64::NAN,
        })
        .collect();
    let mut series = Vec::new();
    for &x in &eps {
        let text = std::fs::read_to_string(row_dir(dir, x).join("steps.csv"))?;
        let st = CsvTable::parse(&text)?;
        let (ts, es) = (
            st.column("t").ok_or_else(|| Error::Format("steps.csv lacks t".into()))?,
            st.column("E_total").ok_or_else(|| Error::Format("steps.csv lacks E_total".into()))?,
        );
        series.push(ts.into_iter().zip(es).collect());
    }
    let rep = DirReport {
        monotone_e: strictly_decreasing(&e),
        monotone_hm1_rho: strictly_decreasing(&hr),
        monotone_hm1_j: strictly_decreasing(&hj),
        rate_e: fit_rate(&eps, &e).ok(),
        rate_hm1_rho: fit_rate(&eps, &hr).ok(),
        rate_hm1_j: fit_rate(&eps, &hj).ok(),
        rate_e0: fit_rate(&eps, &e0).ok(),
        horizon: monotone_horizon(&series),
        rows,
    };
    let json = serde_json::to_string_pretty(&rep).map_err(|e| Error::Format(e.to_string()))?;
    write_atomic(&dir.join("report.json"), json.as_bytes())?;
    Ok(rep)
}
