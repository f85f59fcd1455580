//! Sweeping and minimizing `mu(gamma)` and `mu_A(gamma)` over `[0, pi]`.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analytic::{ApproxOrder, Evaluator};
use crate::error::{Error, Result};

// 1023 intervals, so the grid contains pi/3 and 2pi/3. A 512-point grid (511 intervals) does not.
pub const DEFAULT_GRID_SIZE: usize = 1024;

/// Width of the bracket at which golden-section refinement stops.
pub const REFINE_TOLERANCE: f64 = 1e-6;

/// Uniform grid of `size` points over `[0, pi]` with both endpoints exact.
pub fn gamma_grid(size: usize) -> Result<Vec<f64>> {
    if size < 2 {
        return Err(Error::InvalidArgument("grid size must be >= 2".into()));
    }
    let last = (size - 1) as f64;
    let mut grid: Vec<f64> = (0..size).map(|n| PI * n as f64 / last).collect();
    grid[size - 1] = PI;
    Ok(grid)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepCurve {
    pub lattice_id: String,
    pub gammas: Vec<f64>,
    pub mu: Vec<f64>,
    pub mu_a: BTreeMap<usize, Vec<f64>>,
}

impl SweepCurve {
    pub fn len(&self) -> usize {
        self.gammas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gammas.is_empty()
    }
}

/// Evaluates `mu` and each `mu_A` on a uniform grid; grid points are
/// computed in parallel and assembled in grid order.
pub fn sweep_gamma(
    evaluator: &Evaluator,
    lattice_id: &str,
    grid_size: usize,
    orders: &[ApproxOrder],
) -> Result<SweepCurve> {
    let gammas = gamma_grid(grid_size)?;
    let results: Vec<_> = gammas
        .par_iter()
        .map(|&g| evaluator.evaluate(g, orders, false))
        .collect();
    let mu = results.iter().map(|r| r.mu).collect();
    let mu_a = orders
        .iter()
        .map(|o| (o.get(), results.iter().map(|r| r.mu_approx[&o.get()]).collect()))
        .collect();
    Ok(SweepCurve {
        lattice_id: lattice_id.to_string(),
        gammas,
        mu,
        mu_a,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Minimum {
    pub gamma: f64,
    pub value: f64,
}

/// Golden-section search for a minimum of `f` on `[lo, hi]`.
pub fn golden_section<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64, tolerance: f64) -> Minimum {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - inv_phi * (hi - lo);
    let mut x2 = lo + inv_phi * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    while hi - lo > tolerance {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = f(x2);
        }
    }
    if f1 <= f2 {
        Minimum { gamma: x1, value: f1 }
    } else {
        Minimum { gamma: x2, value: f2 }
    }
}

/// First grid index attaining the minimum value.
fn grid_argmin(values: &[f64]) -> usize {
    let mut best = 0;
    for (n, &v) in values.iter().enumerate().skip(1) {
        if v < values[best] {
            best = n;
        }
    }
    best
}

/// Grid argmin of a tabulated curve, optionally refined by golden section
/// on `evaluator` inside the neighbouring grid cells. The refined point is
/// kept only if strictly better, so ties stay on the smaller grid `gamma`.
pub fn minimize_curve(
    gammas: &[f64],
    values: &[f64],
    evaluator: Option<&dyn Fn(f64) -> f64>,
) -> Result<Minimum> {
    if gammas.is_empty() || gammas.len() != values.len() {
        return Err(Error::InvalidArgument(
            "curve must be non-empty with one value per grid point".into(),
        ));
    }
    let n = grid_argmin(values);
    let grid_min = Minimum {
        gamma: gammas[n],
        value: values[n],
    };
    let Some(f) = evaluator else {
        return Ok(grid_min);
    };
    let lo = gammas[n.saturating_sub(1)];
    let hi = gammas[(n + 1).min(gammas.len() - 1)];
    if hi <= lo {
        return Ok(grid_min);
    }
    let refined = golden_section(f, lo, hi, REFINE_TOLERANCE);
    if refined.value < grid_min.value {
        Ok(refined)
    } else {
        Ok(grid_min)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OrderMinimum {
    pub order: usize,
    pub gamma_a: f64,
    /// Minimum of the approximator itself.
    pub mu_a_min: f64,
    /// Full `mu` evaluated at `gamma_a`.
    pub mu_at_gamma_a: f64,
    pub ratio: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MinimaReport {
    pub lattice_id: String,
    pub refined: bool,
    pub gamma_opt: f64,
    pub mu_opt: f64,
    pub mu_zero: f64,
    pub baseline_ratio: f64,
    pub orders: Vec<OrderMinimum>,
}

/// Locates `gamma_opt` and every `gamma_A` from an existing sweep.
///
/// `gamma_opt` is the best full-`mu` point among the (refined) minimizer of
/// `mu` and the `gamma_A` candidates, so every ratio is at least 1.
pub fn ratio_report_from_curve(evaluator: &Evaluator, curve: &SweepCurve, refine: bool) -> Result<MinimaReport> {
    let layout = *evaluator.layout();
    let mu_fn = |g: f64| evaluator.mu(g);
    let opt = minimize_curve(&curve.gammas, &curve.mu, refine.then_some(&mu_fn as &dyn Fn(f64) -> f64))?;

    let mut located = Vec::with_capacity(curve.mu_a.len());
    for (&order, values) in &curve.mu_a {
        let o = ApproxOrder::new(order, &layout)?;
        let approx_fn = |g: f64| evaluator.mu_approx(g, o);
        let m = minimize_curve(&curve.gammas, values, refine.then_some(&approx_fn as &dyn Fn(f64) -> f64))?;
        let grid_hit = curve.gammas.iter().position(|&g| g == m.gamma);
        let mu_at = match grid_hit {
            Some(n) => curve.mu[n],
            None => evaluator.mu(m.gamma),
        };
        located.push((order, m, mu_at));
    }

    let mut best = opt;
    for &(_, m, mu_at) in &located {
        if mu_at < best.value || (mu_at == best.value && m.gamma < best.gamma) {
            best = Minimum {
                gamma: m.gamma,
                value: mu_at,
            };
        }
    }

    let mu_zero = curve.mu[0];
    let orders = located
        .into_iter()
        .map(|(order, m, mu_at)| OrderMinimum {
            order,
            gamma_a: m.gamma,
            mu_a_min: m.value,
            mu_at_gamma_a: mu_at,
            ratio: mu_at / best.value,
        })
        .collect();
    Ok(MinimaReport {
        lattice_id: curve.lattice_id.clone(),
        refined: refine,
        gamma_opt: best.gamma,
        mu_opt: best.value,
        mu_zero,
        baseline_ratio: mu_zero / best.value,
        orders,
    })
}

pub fn ratio_report(
    evaluator: &Evaluator,
    lattice_id: &str,
    grid_size: usize,
    orders: &[ApproxOrder],
    refine: bool,
) -> Result<MinimaReport> {
    let curve = sweep_gamma(evaluator, lattice_id, grid_size, orders)?;
    ratio_report_from_curve(evaluator, &curve, refine)
}

/// Sweep CSV: `gamma, mu, mu_A_<A>...`, plus `mu_oracle, oracle_abs_err` when an oracle column is given.
pub fn write_sweep_csv<W: Write>(out: W, curve: &SweepCurve, oracle: Option<&[f64]>) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["gamma".to_string(), "mu".to_string()];
    header.extend(curve.mu_a.keys().map(|a| format!("mu_A_{a}")));
    if oracle.is_some() {
        header.push("mu_oracle".into());
        header.push("oracle_abs_err".into());
    }
    w.write_record(&header)?;
    for n in 0..curve.len() {
        let mut row = vec![fmt(curve.gammas[n]), fmt(curve.mu[n])];
        row.extend(curve.mu_a.values().map(|v| fmt(v[n])));
        if let Some(o) = oracle {
            row.push(fmt(o[n]));
            row.push(fmt((o[n] - curve.mu[n]).abs()));
        }
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

pub const MINIMA_HEADER: [&str; 8] = [
    "lattice_id",
    "gamma_opt",
    "mu_opt",
    "A",
    "gamma_A",
    "mu_at_gamma_A",
    "ratio",
    "baseline_ratio",
];

pub fn write_minima_csv<W: Write>(out: W, reports: &[MinimaReport]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(MINIMA_HEADER)?;
    for r in reports {
        for o in &r.orders {
            w.write_record([
                r.lattice_id.clone(),
                fmt(r.gamma_opt),
                fmt(r.mu_opt),
                o.order.to_string(),
                fmt(o.gamma_a),
                fmt(o.mu_at_gamma_a),
                fmt(o.ratio),
                fmt(r.baseline_ratio),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Shortest round-trip decimal representation.
pub(crate) fn fmt(v: f64) -> String {
    format!("{v:?}")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::encoding::QuditLayout;
    use crate::lattice::GramMatrix;

    #[test]
    fn grid_endpoints() {
        assert_eq!(gamma_grid(2).unwrap(), vec![0.0, PI]);
        assert!(gamma_grid(1).is_err());
        let g = gamma_grid(512).unwrap();
        assert_eq!(g[0], 0.0);
        assert_eq!(g[511], PI);
        assert!(g.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn boundary_minimum_ties_to_zero() {
        let grid = gamma_grid(512).unwrap();
        let f = |g: f64| (1.0 + g.sin()) / 2.0;
        let vals: Vec<f64> = grid.iter().map(|&g| f(g)).collect();
        let m = minimize_curve(&grid, &vals, Some(&f)).unwrap();
        assert_eq!(m.gamma, 0.0);
        assert_eq!(m.value, 0.5);
    }

    #[test]
    fn interior_minimum_is_refined() {
        let grid = gamma_grid(512).unwrap();
        let f = |g: f64| (1.0 - g.sin()) / 2.0;
        let vals: Vec<f64> = grid.iter().map(|&g| f(g)).collect();
        let coarse = minimize_curve(&grid, &vals, None).unwrap();
        let fine = minimize_curve(&grid, &vals, Some(&f)).unwrap();
        assert!((fine.gamma - PI / 2.0).abs() < 1e-6);
        assert!(fine.value < 1e-12);
        assert!(fine.value <= coarse.value);
        assert!(vals.iter().all(|&v| fine.value <= v));
    }

    #[test]
    fn constant_curve_picks_first_point() {
        let grid = gamma_grid(16).unwrap();
        let vals = vec![2.5; 16];
        let f = |_: f64| 2.5;
        assert_eq!(minimize_curve(&grid, &vals, Some(&f)).unwrap().gamma, 0.0);
        assert!(minimize_curve(&[], &[], None).is_err());
    }

    #[test]
    fn sweep_endpoints_and_baseline() {
        let g = GramMatrix::from_rows(vec![vec![5.0, 2.0], vec![2.0, 3.0]]).unwrap();
        let l = QuditLayout::new(2, 2).unwrap();
        let ev = Evaluator::new(&g, &l).unwrap();
        let orders = crate::analytic::default_orders(&l);
        let c = sweep_gamma(&ev, "t", 2, &orders).unwrap();
        assert_eq!(c.gammas, vec![0.0, PI]);
        let uniform = crate::encoding::energy_table(&g, &l, 26).unwrap();
        let mean = uniform.iter().sum::<f64>() / uniform.len() as f64;
        assert!((c.mu[0] - mean).abs() < 1e-12);
        assert_eq!(c.mu_a.len(), orders.len());
    }

    #[test]
    fn report_ratios_at_least_one() {
        let l = QuditLayout::new(2, 3).unwrap();
        for seed in 0..5 {
            let lat = crate::lattice::Lattice::generate(2, 10, seed).unwrap();
            let ev = Evaluator::new(&lat.gram, &l).unwrap();
            let orders = crate::analytic::default_orders(&l);
            for refine in [false, true] {
                let r = ratio_report(&ev, "x", 128, &orders, refine).unwrap();
                assert!(r.baseline_ratio >= 1.0 - 1e-12);
                for o in &r.orders {
                    assert!(o.ratio >= 1.0 - 1e-12);
                }
            }
        }
    }

    #[test]
    fn minima_csv_layout() {
        let report = MinimaReport {
            lattice_id: "L0".into(),
            refined: true,
            gamma_opt: 0.5,
            mu_opt: 2.0,
            mu_zero: 3.0,
            baseline_ratio: 1.5,
            orders: vec![OrderMinimum {
                order: 1,
                gamma_a: 0.25,
                mu_a_min: 1.0,
                mu_at_gamma_a: 2.5,
                ratio: 1.25,
            }],
        };
        let mut buf = Vec::new();
        write_minima_csv(&mut buf, &[report]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(
            text,
            "lattice_id,gamma_opt,mu_opt,A,gamma_A,mu_at_gamma_A,ratio,baseline_ratio\nL0,0.5,2.0,1,0.25,2.5,1.25,1.5\n"
        );
    }
}
