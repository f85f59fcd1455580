//! Ensemble statistics: Pearson correlation of approximators, distribution
//! of `mu(gamma)/mu(0)`, and histograms of minima quality ratios.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::analytic::{default_orders, ApproxOrder, Evaluator};
use crate::encoding::QuditLayout;
use crate::error::{Error, Result};
use crate::lattice::{Lattice, DEFAULT_ENTRY_BOUND};
use crate::optimize::{fmt, ratio_report_from_curve, sweep_gamma, MinimaReport, SweepCurve, DEFAULT_GRID_SIZE};
use crate::simulator::{oracle_mu_curve, DEFAULT_QUBIT_GUARD};

/// Pearson correlation with population moments over the series.
pub fn pearson(xs: &[f64], ys: &[f64]) -> Result<f64> {
    if xs.len() != ys.len() {
        return Err(Error::DimensionMismatch {
            expected: xs.len(),
            actual: ys.len(),
        });
    }
    if xs.len() < 2 {
        return Err(Error::InvalidArgument("correlation needs at least two points".into()));
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (&x, &y) in xs.iter().zip(ys) {
        let (dx, dy) = (x - mx, y - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::ConstantSeries);
    }
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

/// Quantile by linear interpolation between order statistics of sorted data.
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    assert!(!sorted.is_empty());
    let pos = q.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

fn mean_and_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuantileSummary {
    pub min: f64,
    pub q01: f64,
    pub q25: f64,
    pub q50: f64,
    pub q75: f64,
    pub max: f64,
}

impl QuantileSummary {
    pub fn of(values: &[f64]) -> Self {
        let mut sorted = values.to_vec();
        sorted.sort_by(f64::total_cmp);
        Self {
            min: sorted[0],
            q01: quantile_sorted(&sorted, 0.01),
            q25: quantile_sorted(&sorted, 0.25),
            q50: quantile_sorted(&sorted, 0.5),
            q75: quantile_sorted(&sorted, 0.75),
            max: sorted[sorted.len() - 1],
        }
    }

    pub fn iqr(&self) -> f64 {
        self.q75 - self.q25
    }
}

/// All `mu(gamma)/mu(0)` samples for one `k`, in lattice-then-grid order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ViolinData {
    pub k: usize,
    pub ratios: Vec<f64>,
    pub summary: QuantileSummary,
}

pub fn violin_data(k: usize, curves: &[SweepCurve]) -> Result<ViolinData> {
    let mut ratios = Vec::with_capacity(curves.iter().map(SweepCurve::len).sum());
    for c in curves {
        let base = c.mu[0];
        if base <= 0.0 {
            return Err(Error::InvalidArgument(format!(
                "baseline mu(0) = {base} is not positive for {}",
                c.lattice_id
            )));
        }
        ratios.extend(c.mu.iter().map(|m| m / base));
    }
    if ratios.is_empty() {
        return Err(Error::InvalidArgument("no curves".into()));
    }
    let summary = QuantileSummary::of(&ratios);
    Ok(ViolinData { k, ratios, summary })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorrelationRow {
    pub k: usize,
    pub order: usize,
    pub mean_r: f64,
    pub stddev_r: f64,
    pub per_lattice: Vec<f64>,
    /// Lattices skipped because one series was constant (e.g. `mu_1` when `G_ij = 0` off the diagonal).
    pub undefined: usize,
}

/// Per-order mean of `r_A` between `mu_A` and `mu` across curves on a shared grid.
/// Curves whose correlation is undefined are left out of the mean and counted.
pub fn correlation_table(k: usize, curves: &[SweepCurve], orders: &[usize]) -> Result<Vec<CorrelationRow>> {
    if let Some(first) = curves.first() {
        if curves.iter().any(|c| c.gammas != first.gammas) {
            return Err(Error::InvalidArgument("curves do not share a grid".into()));
        }
    } else {
        return Err(Error::InvalidArgument("no curves".into()));
    }
    orders
        .iter()
        .map(|&order| {
            let mut per_lattice = Vec::with_capacity(curves.len());
            let mut undefined = 0;
            for c in curves {
                let approx = c.mu_a.get(&order).ok_or_else(|| {
                    Error::InvalidArgument(format!("curve {} lacks order {order}", c.lattice_id))
                })?;
                match pearson(approx, &c.mu) {
                    Ok(r) => per_lattice.push(r),
                    Err(Error::ConstantSeries) => undefined += 1,
                    Err(e) => return Err(e),
                }
            }
            if per_lattice.is_empty() {
                return Err(Error::ConstantSeries);
            }
            let (mean_r, stddev_r) = mean_and_std(&per_lattice);
            Ok(CorrelationRow {
                k,
                order,
                mean_r,
                stddev_r,
                per_lattice,
                undefined,
            })
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub order: usize,
    pub width: f64,
    /// `(bin_lo, bin_hi, count)` from `1.0` upward.
    pub bins: Vec<(f64, f64, usize)>,
}

impl Histogram {
    pub fn total(&self) -> usize {
        self.bins.iter().map(|b| b.2).sum()
    }
}

/// Bin width for an order: 0.04 for `A = 1`, 0.0015 otherwise.
pub fn default_bin_width(order: usize) -> f64 {
    if order == 1 {
        0.04
    } else {
        0.0015
    }
}

/// Bins ratios into `[1 + n w, 1 + (n + 1) w)`; values below 1 (only from
/// rounding) land in the first bin.
pub fn histogram(order: usize, ratios: &[f64], width: f64) -> Result<Histogram> {
    if ratios.is_empty() {
        return Err(Error::InvalidArgument("no ratios to bin".into()));
    }
    if width.is_nan() || width <= 0.0 {
        return Err(Error::InvalidArgument("bin width must be positive".into()));
    }
    let index = |r: f64| (((r - 1.0) / width).floor().max(0.0)) as usize;
    let nbins = ratios.iter().map(|&r| index(r)).max().unwrap_or(0) + 1;
    let mut counts = vec![0usize; nbins];
    for &r in ratios {
        counts[index(r)] += 1;
    }
    let bins = counts
        .into_iter()
        .enumerate()
        .map(|(n, c)| (1.0 + n as f64 * width, 1.0 + (n + 1) as f64 * width, c))
        .collect();
    Ok(Histogram { order, width, bins })
}

/// Histograms of `mu(gamma_A)/mu(gamma_opt)` per order, pooled over all reports.
pub fn ratio_histograms(
    reports: &[&MinimaReport],
    orders: &[usize],
    width: impl Fn(usize) -> f64,
) -> Result<Vec<Histogram>> {
    if reports.is_empty() {
        return Err(Error::InvalidArgument("no minima reports".into()));
    }
    orders
        .iter()
        .map(|&order| {
            let ratios: Vec<f64> = reports
                .iter()
                .flat_map(|r| r.orders.iter().filter(|o| o.order == order).map(|o| o.ratio))
                .collect();
            histogram(order, &ratios, width(order))
        })
        .collect()
}

/// Pearson chi-square statistic of observed counts against expected counts,
/// with its upper-tail p-value at `counts.len() - 1` degrees of freedom.
pub fn chi_square(observed: &[u64], expected: &[f64]) -> Result<(f64, f64)> {
    if observed.len() != expected.len() {
        return Err(Error::DimensionMismatch {
            expected: expected.len(),
            actual: observed.len(),
        });
    }
    if observed.len() < 2 {
        return Err(Error::InvalidArgument("chi-square needs at least two cells".into()));
    }
    let stat: f64 = observed
        .iter()
        .zip(expected)
        .map(|(&o, &e)| (o as f64 - e).powi(2) / e)
        .sum();
    let dist = ChiSquared::new((observed.len() - 1) as f64)
        .map_err(|e| Error::InvalidArgument(e.to_string()))?;
    Ok((stat, dist.sf(stat)))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnsembleConfig {
    pub num_lattices: usize,
    pub dim: usize,
    pub ks: Vec<usize>,
    /// Approximation orders; `None` means `{1, 2, 3, ceil(m/2), m}` per `k`.
    pub orders: Option<Vec<usize>>,
    pub grid_size: usize,
    pub seed: u64,
    pub entry_bound: u32,
    pub refine: bool,
    /// `k` values pooled into the minima histograms.
    pub histogram_ks: Vec<usize>,
    pub histogram_orders: Vec<usize>,
    pub bin_width_order1: f64,
    pub bin_width_higher: f64,
    /// Cross-check every curve against the statevector simulator.
    pub oracle_validate: bool,
    pub qubit_guard: usize,
}

impl Default for EnsembleConfig {
    fn default() -> Self {
        Self {
            num_lattices: 45,
            dim: 2,
            ks: (1..=7).collect(),
            orders: None,
            grid_size: DEFAULT_GRID_SIZE,
            seed: 0,
            entry_bound: DEFAULT_ENTRY_BOUND,
            refine: true,
            histogram_ks: vec![5, 6, 7],
            histogram_orders: vec![1, 2, 3],
            bin_width_order1: 0.04,
            bin_width_higher: 0.0015,
            oracle_validate: false,
            qubit_guard: DEFAULT_QUBIT_GUARD,
        }
    }
}

impl EnsembleConfig {
    pub fn validate(&self) -> Result<()> {
        if self.num_lattices == 0 || self.dim == 0 || self.ks.is_empty() {
            return Err(Error::InvalidArgument(
                "num_lattices, dim and ks must be non-empty/positive".into(),
            ));
        }
        if self.grid_size < 2 {
            return Err(Error::InvalidArgument("grid size must be >= 2".into()));
        }
        if self.entry_bound == 0 {
            return Err(Error::InvalidArgument("entry bound must be >= 1".into()));
        }
        for &k in &self.ks {
            let layout = QuditLayout::new(self.dim, k)?;
            if let Some(orders) = &self.orders {
                for &a in orders {
                    ApproxOrder::new(a, &layout)?;
                }
            }
            if self.oracle_validate && layout.total_qubits() > self.qubit_guard {
                return Err(Error::GuardExceeded {
                    what: "oracle validation",
                    qubits: layout.total_qubits(),
                    limit: self.qubit_guard,
                });
            }
        }
        Ok(())
    }

    pub fn orders_for(&self, layout: &QuditLayout) -> Result<Vec<ApproxOrder>> {
        match &self.orders {
            Some(list) => {
                let mut v = list
                    .iter()
                    .map(|&a| ApproxOrder::new(a, layout))
                    .collect::<Result<Vec<_>>>()?;
                v.sort();
                v.dedup();
                Ok(v)
            }
            None => Ok(default_orders(layout)),
        }
    }

    pub fn lattice_seed(&self, index: usize) -> u64 {
        self.seed.wrapping_add(index as u64)
    }

    pub fn bin_width(&self, order: usize) -> f64 {
        if order == 1 {
            self.bin_width_order1
        } else {
            self.bin_width_higher
        }
    }
}

pub fn lattice_id(index: usize) -> String {
    format!("L{index:03}")
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct KRun {
    pub k: usize,
    pub orders: Vec<usize>,
    pub curves: Vec<SweepCurve>,
    pub reports: Vec<MinimaReport>,
    /// Largest `|mu - oracle| / max(1, |mu|)` when oracle validation ran.
    pub oracle_max_rel_err: Option<f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EnsembleStats {
    pub config: EnsembleConfig,
    pub lattices: Vec<crate::lattice::LatticeFile>,
    pub runs: Vec<KRun>,
    pub correlations: Vec<CorrelationRow>,
    pub violins: Vec<ViolinData>,
    pub histograms: Vec<Histogram>,
}

impl EnsembleStats {
    pub fn run_for(&self, k: usize) -> Option<&KRun> {
        self.runs.iter().find(|r| r.k == k)
    }

    pub fn mean_r(&self, k: usize, order: usize) -> Option<f64> {
        self.correlations
            .iter()
            .find(|c| c.k == k && c.order == order)
            .map(|c| c.mean_r)
    }

    pub fn violin(&self, k: usize) -> Option<&ViolinData> {
        self.violins.iter().find(|v| v.k == k)
    }

    pub fn histogram(&self, order: usize) -> Option<&Histogram> {
        self.histograms.iter().find(|h| h.order == order)
    }
}

/// Oracle tolerance for curve validation, relative to `max(1, |mu|)`.
pub const ORACLE_TOLERANCE: f64 = 1e-9;

struct CellResult {
    curve: SweepCurve,
    report: MinimaReport,
    oracle_err: Option<f64>,
}

/// Sweeps, minimizes and aggregates every `(lattice, k)` cell. Cells run
/// in parallel; all reductions follow lattice then `k` order.
pub fn ensemble_run(config: &EnsembleConfig) -> Result<EnsembleStats> {
    config.validate()?;
    let lattices = (0..config.num_lattices)
        .map(|n| Lattice::generate(config.dim, config.entry_bound, config.lattice_seed(n)))
        .collect::<Result<Vec<_>>>()?;

    let cells: Vec<(usize, usize)> = config
        .ks
        .iter()
        .flat_map(|&k| (0..lattices.len()).map(move |n| (k, n)))
        .collect();
    let results = cells
        .par_iter()
        .map(|&(k, n)| -> Result<CellResult> {
            let layout = QuditLayout::new(config.dim, k)?;
            let orders = config.orders_for(&layout)?;
            let evaluator = Evaluator::new(&lattices[n].gram, &layout)?;
            let curve = sweep_gamma(&evaluator, &lattice_id(n), config.grid_size, &orders)?;
            let report = ratio_report_from_curve(&evaluator, &curve, config.refine)?;
            let oracle_err = if config.oracle_validate {
                let oracle = oracle_mu_curve(&lattices[n].gram, &layout, &curve.gammas, config.qubit_guard)?;
                Some(
                    curve
                        .mu
                        .iter()
                        .zip(&oracle)
                        .map(|(m, o)| (m - o).abs() / m.abs().max(1.0))
                        .fold(0.0, f64::max),
                )
            } else {
                None
            };
            Ok(CellResult {
                curve,
                report,
                oracle_err,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let mut runs = Vec::with_capacity(config.ks.len());
    let mut correlations = Vec::new();
    let mut violins = Vec::new();
    let mut iter = results.into_iter();
    for &k in &config.ks {
        let layout = QuditLayout::new(config.dim, k)?;
        let orders: Vec<usize> = config.orders_for(&layout)?.into_iter().map(ApproxOrder::get).collect();
        let mut curves = Vec::with_capacity(lattices.len());
        let mut reports = Vec::with_capacity(lattices.len());
        let mut oracle_max: Option<f64> = None;
        for cell in iter.by_ref().take(lattices.len()) {
            curves.push(cell.curve);
            reports.push(cell.report);
            if let Some(e) = cell.oracle_err {
                oracle_max = Some(oracle_max.map_or(e, |m| m.max(e)));
            }
        }
        correlations.extend(correlation_table(k, &curves, &orders)?);
        violins.push(violin_data(k, &curves)?);
        runs.push(KRun {
            k,
            orders,
            curves,
            reports,
            oracle_max_rel_err: oracle_max,
        });
    }

    let pooled: Vec<&MinimaReport> = runs
        .iter()
        .filter(|r| config.histogram_ks.contains(&r.k))
        .flat_map(|r| r.reports.iter())
        .collect();
    let histograms = if pooled.is_empty() {
        Vec::new()
    } else {
        let available: Vec<usize> = config
            .histogram_orders
            .iter()
            .copied()
            .filter(|&a| pooled.iter().all(|r| r.orders.iter().any(|o| o.order == a)))
            .collect();
        ratio_histograms(&pooled, &available, |a| config.bin_width(a))?
    };

    Ok(EnsembleStats {
        config: config.clone(),
        lattices: lattices.iter().map(Lattice::to_file).collect(),
        runs,
        correlations,
        violins,
        histograms,
    })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Manifest {
    pub software: String,
    pub version: String,
    pub config: EnsembleConfig,
    pub beta: f64,
    pub gamma_range: [f64; 2],
    /// Rule used for the `k/2` approximation order.
    pub half_order_rule: String,
    pub orders_per_k: BTreeMap<usize, Vec<usize>>,
    pub outputs: Vec<String>,
}

fn write_csv<P: AsRef<Path>>(path: P, header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(header)?;
    for r in rows {
        w.write_record(&r)?;
    }
    w.flush()?;
    Ok(())
}

/// Writes the figure-data bundle into `dir` and returns the created file names.
pub fn write_outputs(stats: &EnsembleStats, dir: &Path) -> Result<Vec<String>> {
    fs::create_dir_all(dir)?;
    let mut outputs = Vec::new();

    for run in &stats.runs {
        let name = format!("violin_{}.csv", run.k);
        let rows = run.curves.iter().flat_map(|c| {
            let mu0 = c.mu[0];
            c.gammas
                .iter()
                .zip(&c.mu)
                .map(move |(g, m)| vec![fmt(*g), fmt(*m), fmt(mu0), fmt(m / mu0), c.lattice_id.clone()])
        });
        write_csv(dir.join(&name), &["gamma", "mu", "mu0", "ratio", "lattice_id"], rows)?;
        outputs.push(name);
    }

    write_csv(
        dir.join("violin_summary.csv"),
        &["k", "min", "q01", "q25", "q50", "q75", "max", "iqr"],
        stats.violins.iter().map(|v| {
            let s = &v.summary;
            vec![
                v.k.to_string(),
                fmt(s.min),
                fmt(s.q01),
                fmt(s.q25),
                fmt(s.q50),
                fmt(s.q75),
                fmt(s.max),
                fmt(s.iqr()),
            ]
        }),
    )?;
    outputs.push("violin_summary.csv".into());

    write_csv(
        dir.join("correlation.csv"),
        &["k", "A", "mean_r", "stddev_r", "undefined"],
        stats
            .correlations
            .iter()
            .map(|c| {
                vec![
                    c.k.to_string(),
                    c.order.to_string(),
                    fmt(c.mean_r),
                    fmt(c.stddev_r),
                    c.undefined.to_string(),
                ]
            }),
    )?;
    outputs.push("correlation.csv".into());

    let mut dat = String::from("# k A mean_r stddev_r\n");
    let mut last_order = None;
    let mut by_order: Vec<&CorrelationRow> = stats.correlations.iter().collect();
    by_order.sort_by_key(|c| (c.order, c.k));
    for c in by_order {
        if last_order.is_some_and(|o| o != c.order) {
            dat.push_str("\n\n");
        }
        last_order = Some(c.order);
        dat.push_str(&format!("{} {} {} {}\n", c.k, c.order, fmt(c.mean_r), fmt(c.stddev_r)));
    }
    fs::write(dir.join("correlation.dat"), dat)?;
    outputs.push("correlation.dat".into());

    for h in &stats.histograms {
        let name = format!("histogram_A{}.csv", h.order);
        write_csv(
            dir.join(&name),
            &["bin_lo", "bin_hi", "count"],
            h.bins.iter().map(|(lo, hi, c)| vec![fmt(*lo), fmt(*hi), c.to_string()]),
        )?;
        outputs.push(name);
        let mut dat = String::from("# bin_center count\n");
        for (lo, hi, c) in &h.bins {
            dat.push_str(&format!("{} {}\n", fmt(0.5 * (lo + hi)), c));
        }
        let dat_name = format!("histogram_A{}.dat", h.order);
        fs::write(dir.join(&dat_name), dat)?;
        outputs.push(dat_name);
    }

    let reports: Vec<MinimaReport> = stats
        .runs
        .iter()
        .flat_map(|r| {
            r.reports.iter().map(move |rep| MinimaReport {
                lattice_id: format!("{}_k{}", rep.lattice_id, r.k),
                ..rep.clone()
            })
        })
        .collect();
    let file = fs::File::create(dir.join("minima.csv"))?;
    crate::optimize::write_minima_csv(std::io::BufWriter::new(file), &reports)?;
    outputs.push("minima.csv".into());

    let lattice_dir = dir.join("lattices");
    fs::create_dir_all(&lattice_dir)?;
    for (n, lat) in stats.lattices.iter().enumerate() {
        let mut text = serde_json::to_string_pretty(lat)?;
        text.push('\n');
        let name = format!("{}.json", lattice_id(n));
        fs::write(lattice_dir.join(&name), text)?;
        outputs.push(format!("lattices/{name}"));
    }

    outputs.push("manifest.json".into());
    let manifest = Manifest {
        software: env!("CARGO_PKG_NAME").into(),
        version: env!("CARGO_PKG_VERSION").into(),
        config: stats.config.clone(),
        beta: std::f64::consts::FRAC_PI_4,
        gamma_range: [0.0, std::f64::consts::PI],
        half_order_rule: "ceil((k+1)/2)".into(),
        orders_per_k: stats.runs.iter().map(|r| (r.k, r.orders.clone())).collect(),
        outputs: outputs.clone(),
    };
    let mut text = serde_json::to_string_pretty(&manifest)?;
    text.push('\n');
    fs::write(dir.join("manifest.json"), text)?;
    Ok(outputs)
}

pub fn read_manifest(path: &Path) -> Result<Manifest> {
    Ok(serde_json::from_str(&fs::read_to_string(path)?)?)
}

/// Prints a short human-readable digest of the ensemble.
pub fn write_summary<W: Write>(mut out: W, stats: &EnsembleStats) -> Result<()> {
    writeln!(out, "k  IQR(mu/mu0)  min(mu/mu0)  mean r_A")?;
    for run in &stats.runs {
        let v = stats.violin(run.k).expect("violin per k");
        let rs: Vec<String> = run
            .orders
            .iter()
            .map(|&a| format!("r_{a}={:.3}", stats.mean_r(run.k, a).unwrap_or(f64::NAN)))
            .collect();
        writeln!(out, "{}  {:.4}  {:.4}  {}", run.k, v.summary.iqr(), v.summary.min, rs.join(" "))?;
    }
    Ok(())
}

pub fn default_output_dir() -> PathBuf {
    std::env::var_os("QMV_OUT_DIR")
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from("qmv-out"))
}
