//! Closed-form depth-1 QAOA mean values at driver angle `beta = pi/4`.
//!
//! Writing the problem Hamiltonian in Pauli form, qubit `a = (i, p)` carries
//! a local field `2^p R_i / 2` (with `R_i = sum_v G_iv`) and each qubit pair
//! `(i, p), (t, w)` a coupling `2^(p+w) G_it / 2`. The single-qubit
//! expectation `Omega_a = <Z_a>` is then a sine of the local-field angle
//! times a product of cosines over every other qubit, and the two-qubit
//! expectation `Gamma_ab = <Z_a Z_b>` is the parity resummation of the
//! even/odd subset sums of tangent products:
//!
//! ```text
//! Gamma_ab = S_a S_b (P- + P+) / 2 + C_a C_b (P- - P+) / 2
//! P-/+     = prod_{h != a, b} cos(alpha_h -/+ beta_h)
//! ```
//!
//! with `alpha_h = 2^(p+w) gamma G_it` and `beta_h = 2^(q+w) gamma G_tj`.
//! The literal subset-sum form is kept in [`gamma_pair_literal`] as a
//! small-scale cross-check.

use std::collections::BTreeMap;
use std::f64::consts::{FRAC_PI_2, PI};
use std::ops::RangeInclusive;

use serde::{Deserialize, Serialize};

use crate::encoding::QuditLayout;
use crate::error::{Error, Result};
use crate::lattice::GramMatrix;

/// Sign of the single-qubit expectation relative to `+S_ip * prod cos`.
///
/// Fixed against the statevector built from
/// `exp(-i beta H_D) exp(-i gamma H_P) |+>^T`: for one qudit with `k = 0`
/// and `G = [[1]]` that state gives `<H_P> = (1 + sin gamma) / 2`, which
/// requires `+1` here. The two-qubit expectation is even in `gamma` and
/// does not depend on it.
pub const EVOLUTION_SIGN: f64 = 1.0;

/// Exclusion radius (radians in `gamma`) around singular points of the literal pair formula.
pub const LITERAL_SINGULARITY_TOLERANCE: f64 = 1e-8;

/// Largest number of spectator qubits the literal pair formula will enumerate.
pub const LITERAL_SPECTATOR_GUARD: usize = 20;

/// Number of most-significant qubits per qudit kept by an approximator.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ApproxOrder(usize);

impl ApproxOrder {
    pub fn new(order: usize, layout: &QuditLayout) -> Result<Self> {
        let max = layout.qubits_per_qudit();
        if order == 0 || order > max {
            return Err(Error::ApproxOrderOutOfRange { order, max });
        }
        Ok(Self(order))
    }

    pub fn get(self) -> usize {
        self.0
    }

    /// Significance levels `p` with `k - A < p <= k`.
    pub fn band(self, layout: &QuditLayout) -> RangeInclusive<usize> {
        let k = layout.k();
        (k + 1 - self.0)..=k
    }
}

/// Per-lattice precomputation: row sums and the integer coupling weights
/// `W[a][h] = 2^(p+w) G_it` for every ordered qubit pair.
#[derive(Clone, Debug)]
pub struct Couplings {
    layout: QuditLayout,
    row_sums: Vec<f64>,
    weights: Vec<f64>,
}

impl Couplings {
    pub fn new(gram: &GramMatrix, layout: &QuditLayout) -> Result<Self> {
        layout.check_gram(gram)?;
        let t = layout.total_qubits();
        let mut weights = vec![0.0; t * t];
        for a in 0..t {
            let (i, p) = layout.qubit_position(a);
            for h in 0..t {
                let (v, w) = layout.qubit_position(h);
                weights[a * t + h] = pow2(p + w) * gram.get(i, v);
            }
        }
        Ok(Self {
            layout: *layout,
            row_sums: gram.row_sums(),
            weights,
        })
    }

    pub fn layout(&self) -> &QuditLayout {
        &self.layout
    }

    #[inline]
    pub fn weight(&self, a: usize, h: usize) -> f64 {
        self.weights[a * self.layout.total_qubits() + h]
    }

    /// Local-field weight `2^p R_i` of qubit `a = (i, p)`.
    #[inline]
    pub fn field_weight(&self, a: usize) -> f64 {
        let (i, p) = self.layout.qubit_position(a);
        pow2(p) * self.row_sums[i]
    }

    pub fn trig(&self, gamma: f64) -> TrigCache {
        let t = self.layout.total_qubits();
        let mut sin = Vec::with_capacity(t);
        let mut cos = Vec::with_capacity(t);
        for a in 0..t {
            let (s, c) = (self.field_weight(a) * gamma).sin_cos();
            sin.push(s);
            cos.push(c);
        }
        let mut pair_sin = Vec::with_capacity(t * t);
        let mut pair_cos = Vec::with_capacity(t * t);
        for &w in &self.weights {
            let (s, c) = (w * gamma).sin_cos();
            pair_sin.push(s);
            pair_cos.push(c);
        }
        TrigCache {
            gamma,
            t,
            sin,
            cos,
            pair_sin,
            pair_cos,
        }
    }
}

#[inline]
fn pow2(e: usize) -> f64 {
    (1u64 << e) as f64
}

/// Trigonometric values at one `gamma`.
///
/// `sin[a]`, `cos[a]` are `S_ip`, `C_ip`; `pair_sin`, `pair_cos` hold the
/// sine and cosine of `gamma * W[a][h]`.
#[derive(Clone, Debug)]
pub struct TrigCache {
    gamma: f64,
    t: usize,
    sin: Vec<f64>,
    cos: Vec<f64>,
    pair_sin: Vec<f64>,
    pair_cos: Vec<f64>,
}

impl TrigCache {
    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn s(&self, a: usize) -> f64 {
        self.sin[a]
    }

    pub fn c(&self, a: usize) -> f64 {
        self.cos[a]
    }

    /// `<Z_a>`; the self-coupling term is skipped rather than divided out.
    pub fn omega(&self, a: usize) -> f64 {
        let row = &self.pair_cos[a * self.t..(a + 1) * self.t];
        let prod: f64 = row
            .iter()
            .enumerate()
            .filter(|&(h, _)| h != a)
            .map(|(_, c)| c)
            .product();
        EVOLUTION_SIGN * self.sin[a] * prod
    }

    /// `<Z_a Z_b>` for `a != b`, linear in the qubit count.
    pub fn gamma_pair(&self, a: usize, b: usize) -> f64 {
        debug_assert_ne!(a, b);
        let t = self.t;
        let (ca, sa) = (&self.pair_cos[a * t..(a + 1) * t], &self.pair_sin[a * t..(a + 1) * t]);
        let (cb, sb) = (&self.pair_cos[b * t..(b + 1) * t], &self.pair_sin[b * t..(b + 1) * t]);
        let mut minus = 1.0;
        let mut plus = 1.0;
        for h in 0..t {
            if h == a || h == b {
                continue;
            }
            let cc = ca[h] * cb[h];
            let ss = sa[h] * sb[h];
            minus *= cc + ss;
            plus *= cc - ss;
        }
        let even = 0.5 * (minus + plus);
        let odd = 0.5 * (minus - plus);
        self.sin[a] * self.sin[b] * even + self.cos[a] * self.cos[b] * odd
    }
}

/// Flat `T x T` table of `<Z_a Z_b>` restricted to qubits in `qubits`.
/// Diagonal entries are the identity (1); entries outside `qubits` stay 0.
fn pair_table(cache: &TrigCache, qubits: &[usize]) -> Vec<f64> {
    let t = cache.t;
    let mut table = vec![0.0; t * t];
    for (n, &a) in qubits.iter().enumerate() {
        table[a * t + a] = 1.0;
        for &b in &qubits[n + 1..] {
            let v = cache.gamma_pair(a, b);
            table[a * t + b] = v;
            table[b * t + a] = v;
        }
    }
    table
}

fn band_qubits(layout: &QuditLayout, band: RangeInclusive<usize>) -> Vec<usize> {
    (0..layout.num_qudits())
        .flat_map(|i| band.clone().map(move |p| layout.qubit_index(i, p)))
        .collect()
}

/// `(1/4) sum_ij G_ij sum_{p,q in band} 2^(p+q) Gamma_ijpq` and the number of summands visited.
fn two_qubit_part(
    gram: &GramMatrix,
    layout: &QuditLayout,
    table: &[f64],
    band: RangeInclusive<usize>,
) -> (f64, usize) {
    let t = layout.total_qubits();
    let n = layout.num_qudits();
    let mut total = 0.0;
    let mut count = 0usize;
    for i in 0..n {
        for j in 0..n {
            let g = gram.get(i, j);
            let mut inner = 0.0;
            for p in band.clone() {
                let a = layout.qubit_index(i, p);
                for q in band.clone() {
                    let b = layout.qubit_index(j, q);
                    inner += pow2(p + q) * table[a * t + b];
                    count += 1;
                }
            }
            total += g * inner;
        }
    }
    (0.25 * total, count)
}

/// `(1/4) sum_ij G_ij [1 + sum_p 2^p (Omega_ip + Omega_jp)]`.
fn constant_and_single_part(gram: &GramMatrix, layout: &QuditLayout, omegas: &[f64]) -> f64 {
    let n = layout.num_qudits();
    let weighted: Vec<f64> = (0..n)
        .map(|i| {
            (0..layout.qubits_per_qudit())
                .map(|p| pow2(p) * omegas[layout.qubit_index(i, p)])
                .sum()
        })
        .collect();
    let mut total = 0.0;
    for i in 0..n {
        for j in 0..n {
            total += gram.get(i, j) * (1.0 + weighted[i] + weighted[j]);
        }
    }
    0.25 * total
}

/// Mean value at one `gamma`, optionally with approximators and the raw tables.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExpectationResult {
    pub gamma: f64,
    pub mu: f64,
    pub mu_approx: BTreeMap<usize, f64>,
    /// `Omega` per global qubit.
    pub omega_table: Option<Vec<f64>>,
    /// `Gamma` per ordered qubit pair, row-major `T x T`, identity on the diagonal.
    pub gamma_table: Option<Vec<f64>>,
}

impl ExpectationResult {
    /// Recomputes `mu` from the stored tables.
    pub fn reconstruct_mu(&self, gram: &GramMatrix, layout: &QuditLayout) -> Option<f64> {
        let omegas = self.omega_table.as_ref()?;
        let table = self.gamma_table.as_ref()?;
        let (two, _) = two_qubit_part(gram, layout, table, 0..=layout.k());
        Some(constant_and_single_part(gram, layout, omegas) + two)
    }
}

/// Reusable evaluator for one lattice; all methods are pure.
#[derive(Clone, Debug)]
pub struct Evaluator {
    gram: GramMatrix,
    couplings: Couplings,
}

impl Evaluator {
    pub fn new(gram: &GramMatrix, layout: &QuditLayout) -> Result<Self> {
        Ok(Self {
            gram: gram.clone(),
            couplings: Couplings::new(gram, layout)?,
        })
    }

    pub fn layout(&self) -> &QuditLayout {
        self.couplings.layout()
    }

    pub fn gram(&self) -> &GramMatrix {
        &self.gram
    }

    pub fn couplings(&self) -> &Couplings {
        &self.couplings
    }

    pub fn trig(&self, gamma: f64) -> TrigCache {
        self.couplings.trig(gamma)
    }

    /// `mu(gamma)`.
    pub fn mu(&self, gamma: f64) -> f64 {
        self.evaluate(gamma, &[], false).mu
    }

    /// `mu_A(gamma)`, evaluating only pairs inside the significance band.
    pub fn mu_approx(&self, gamma: f64, order: ApproxOrder) -> f64 {
        let layout = self.layout();
        let band = order.band(layout);
        let cache = self.trig(gamma);
        let table = pair_table(&cache, &band_qubits(layout, band.clone()));
        two_qubit_part(&self.gram, layout, &table, band).0
    }

    /// `mu` and every requested `mu_A` from one shared pair table.
    pub fn evaluate(&self, gamma: f64, orders: &[ApproxOrder], keep_tables: bool) -> ExpectationResult {
        let layout = self.layout();
        let cache = self.trig(gamma);
        let all: Vec<usize> = (0..layout.total_qubits()).collect();
        let omegas: Vec<f64> = all.iter().map(|&a| cache.omega(a)).collect();
        let table = pair_table(&cache, &all);
        let (two, _) = two_qubit_part(&self.gram, layout, &table, 0..=layout.k());
        let mu = constant_and_single_part(&self.gram, layout, &omegas) + two;
        let mu_approx = orders
            .iter()
            .map(|&o| (o.get(), two_qubit_part(&self.gram, layout, &table, o.band(layout)).0))
            .collect();
        ExpectationResult {
            gamma,
            mu,
            mu_approx,
            omega_table: keep_tables.then_some(omegas),
            gamma_table: keep_tables.then_some(table),
        }
    }

    /// Number of two-qubit summands visited by `mu_A` (or by `mu` when `order` is `None`).
    pub fn two_qubit_summand_count(&self, order: Option<ApproxOrder>) -> usize {
        let layout = self.layout();
        let band = match order {
            Some(o) => o.band(layout),
            None => 0..=layout.k(),
        };
        let t = layout.total_qubits();
        two_qubit_part(&self.gram, layout, &vec![0.0; t * t], band).1
    }
}

fn qubit_checked(layout: &QuditLayout, i: usize, p: usize) -> Result<usize> {
    if i >= layout.num_qudits() || p >= layout.qubits_per_qudit() {
        return Err(Error::InvalidArgument(format!(
            "qubit ({i}, {p}) outside layout with {} qudits of {} qubits",
            layout.num_qudits(),
            layout.qubits_per_qudit()
        )));
    }
    Ok(layout.qubit_index(i, p))
}

fn distinct_pair(layout: &QuditLayout, i: usize, p: usize, j: usize, q: usize) -> Result<(usize, usize)> {
    let a = qubit_checked(layout, i, p)?;
    let b = qubit_checked(layout, j, q)?;
    if a == b {
        return Err(Error::InvalidArgument(
            "identity pair (i, p) = (j, q); its expectation is 1".into(),
        ));
    }
    Ok((a, b))
}

/// `<Z_ip>` in the depth-1 state.
pub fn omega(gram: &GramMatrix, layout: &QuditLayout, gamma: f64, i: usize, p: usize) -> Result<f64> {
    let a = qubit_checked(layout, i, p)?;
    Ok(Couplings::new(gram, layout)?.trig(gamma).omega(a))
}

/// `<Z_ip Z_jq>` via the singularity-free product form.
pub fn gamma_pair_factorized(
    gram: &GramMatrix,
    layout: &QuditLayout,
    gamma: f64,
    (i, p): (usize, usize),
    (j, q): (usize, usize),
) -> Result<f64> {
    let (a, b) = distinct_pair(layout, i, p, j, q)?;
    Ok(Couplings::new(gram, layout)?.trig(gamma).gamma_pair(a, b))
}

/// Distance in `gamma` from the nearest zero of `cos(weight * gamma)`.
fn distance_to_cos_zero(weight: f64, gamma: f64) -> f64 {
    if weight == 0.0 {
        return f64::INFINITY;
    }
    let arg = weight * gamma;
    let n = (arg / PI - 0.5).round();
    (arg - (FRAC_PI_2 + n * PI)).abs() / weight.abs()
}

/// `<Z_ip Z_jq>` by the stem-cosine ratio times explicit even/odd subset sums
/// of tangent products over the spectator qubits.
///
/// The even sum includes the empty subset. Fails near any cosine zero in
/// the stem or in a tangent, and when the spectator count exceeds
/// [`LITERAL_SPECTATOR_GUARD`].
pub fn gamma_pair_literal(
    gram: &GramMatrix,
    layout: &QuditLayout,
    gamma: f64,
    (i, p): (usize, usize),
    (j, q): (usize, usize),
) -> Result<f64> {
    let (a, b) = distinct_pair(layout, i, p, j, q)?;
    let t = layout.total_qubits();
    let spectators: Vec<usize> = (0..t).filter(|&h| h != a && h != b).collect();
    if spectators.len() > LITERAL_SPECTATOR_GUARD {
        return Err(Error::GuardExceeded {
            what: "literal pair expansion",
            qubits: spectators.len(),
            limit: LITERAL_SPECTATOR_GUARD,
        });
    }
    let couplings = Couplings::new(gram, layout)?;
    let near = (0..t)
        .flat_map(|h| [couplings.weight(a, h), couplings.weight(b, h)])
        .any(|w| distance_to_cos_zero(w, gamma) < LITERAL_SINGULARITY_TOLERANCE);
    if near {
        return Err(Error::NearSingularity {
            gamma,
            tolerance: LITERAL_SINGULARITY_TOLERANCE,
        });
    }

    // stem: full cosine products over every qubit, divided by the self and mutual terms
    let numerator: f64 = (0..t)
        .map(|h| (couplings.weight(a, h) * gamma).cos() * (couplings.weight(b, h) * gamma).cos())
        .product();
    let mutual = (couplings.weight(a, b) * gamma).cos();
    let denominator = (couplings.weight(a, a) * gamma).cos()
        * (couplings.weight(b, b) * gamma).cos()
        * mutual
        * mutual;
    let zeta = numerator / denominator;

    let tangents: Vec<f64> = spectators
        .iter()
        .map(|&h| (couplings.weight(a, h) * gamma).tan() * (couplings.weight(b, h) * gamma).tan())
        .collect();
    let mut even = 0.0;
    let mut odd = 0.0;
    for mask in 0u64..(1u64 << tangents.len()) {
        let chi: f64 = tangents
            .iter()
            .enumerate()
            .filter(|&(n, _)| mask >> n & 1 == 1)
            .map(|(_, v)| v)
            .product();
        if mask.count_ones() % 2 == 0 {
            even += chi;
        } else {
            odd += chi;
        }
    }
    let (sa, ca) = (couplings.field_weight(a) * gamma).sin_cos();
    let (sb, cb) = (couplings.field_weight(b) * gamma).sin_cos();
    Ok(zeta * (sa * sb * even + ca * cb * odd))
}

/// `mu(gamma)` with the `Omega` and `Gamma` tables attached.
pub fn mean_value(gram: &GramMatrix, layout: &QuditLayout, gamma: f64) -> Result<ExpectationResult> {
    Ok(Evaluator::new(gram, layout)?.evaluate(gamma, &[], true))
}

pub fn mean_value_approx(
    gram: &GramMatrix,
    layout: &QuditLayout,
    gamma: f64,
    order: usize,
) -> Result<f64> {
    let order = ApproxOrder::new(order, layout)?;
    Ok(Evaluator::new(gram, layout)?.mu_approx(gamma, order))
}

/// Default approximation orders `{1, 2, 3, ceil(m/2), m}` clipped to `1..=m`.
pub fn default_orders(layout: &QuditLayout) -> Vec<ApproxOrder> {
    let m = layout.qubits_per_qudit();
    let mut orders: Vec<usize> = vec![1, 2, 3, m.div_ceil(2), m];
    orders.retain(|&a| a >= 1 && a <= m);
    orders.sort_unstable();
    orders.dedup();
    orders.into_iter().map(ApproxOrder).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gram2(a: f64, b: f64, c: f64) -> GramMatrix {
        GramMatrix::from_rows(vec![vec![a, b], vec![b, c]]).unwrap()
    }

    #[test]
    fn trig_cache_invariants() {
        let g = gram2(5.0, -2.0, 7.0);
        let l = QuditLayout::new(2, 2).unwrap();
        let c = Couplings::new(&g, &l).unwrap();
        let zero = c.trig(0.0);
        for a in 0..l.total_qubits() {
            assert_eq!(zero.s(a), 0.0);
            assert_eq!(zero.c(a), 1.0);
        }
        let cache = c.trig(0.37);
        for a in 0..l.total_qubits() {
            assert!((cache.s(a).powi(2) + cache.c(a).powi(2) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn omega_vanishes_at_zero_gamma() {
        let g = gram2(5.0, -2.0, 7.0);
        let l = QuditLayout::new(2, 1).unwrap();
        for i in 0..2 {
            for p in 0..2 {
                assert_eq!(omega(&g, &l, 0.0, i, p).unwrap(), 0.0);
            }
        }
        assert!(omega(&g, &l, 0.0, 2, 0).is_err());
    }

    #[test]
    fn omega_single_qubit_is_sine() {
        let l = QuditLayout::new(1, 0).unwrap();
        for &g in &[1.0, 3.0, 17.0] {
            let gm = GramMatrix::from_rows(vec![vec![g]]).unwrap();
            for n in 0..50 {
                let gamma = n as f64 * 0.0731;
                let v = omega(&gm, &l, gamma, 0, 0).unwrap();
                assert!((v.abs() - (gamma * g).sin().abs()).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn pair_vanishes_at_zero_gamma() {
        let g = gram2(5.0, -2.0, 7.0);
        let l = QuditLayout::new(2, 1).unwrap();
        assert_eq!(gamma_pair_factorized(&g, &l, 0.0, (0, 0), (1, 1)).unwrap(), 0.0);
        assert_eq!(gamma_pair_literal(&g, &l, 0.0, (0, 0), (1, 1)).unwrap(), 0.0);
        assert!(gamma_pair_factorized(&g, &l, 0.3, (0, 1), (0, 1)).is_err());
    }

    #[test]
    fn literal_matches_factorized_on_identity() {
        let g = GramMatrix::identity(2);
        let l = QuditLayout::new(2, 1).unwrap();
        for n in 1..200 {
            let gamma = n as f64 * PI / 200.0 + 1e-3;
            let f = gamma_pair_factorized(&g, &l, gamma, (0, 1), (1, 0)).unwrap();
            match gamma_pair_literal(&g, &l, gamma, (0, 1), (1, 0)) {
                Ok(v) => assert!((v - f).abs() < 1e-10, "gamma={gamma}: {v} vs {f}"),
                Err(Error::NearSingularity { .. }) => {}
                Err(e) => panic!("{e}"),
            }
        }
    }

    #[test]
    fn literal_single_spectator_hand_expansion() {
        // three qubits: two qudits with k=0 plus... use N=3, k=0, so T=3
        let g = GramMatrix::from_rows(vec![
            vec![3.0, 1.0, -1.0],
            vec![1.0, 4.0, 2.0],
            vec![-1.0, 2.0, 5.0],
        ])
        .unwrap();
        let l = QuditLayout::new(3, 0).unwrap();
        let gamma = 0.123;
        // spectator h = qubit 2; alpha = gamma G_02, beta = gamma G_12
        let (al, be) = (-gamma, gamma * 2.0);
        let r0: f64 = 3.0 + 1.0 - 1.0;
        let r1: f64 = 1.0 + 4.0 + 2.0;
        let (sa, ca) = (gamma * r0).sin_cos();
        let (sb, cb) = (gamma * r1).sin_cos();
        let zeta = al.cos() * be.cos();
        let expected = zeta * (sa * sb * 1.0 + ca * cb * al.tan() * be.tan());
        let lit = gamma_pair_literal(&g, &l, gamma, (0, 0), (1, 0)).unwrap();
        let fac = gamma_pair_factorized(&g, &l, gamma, (0, 0), (1, 0)).unwrap();
        assert!((lit - expected).abs() < 1e-14);
        assert!((fac - expected).abs() < 1e-14);
    }

    #[test]
    fn literal_guards() {
        let g = GramMatrix::identity(1);
        let l = QuditLayout::new(1, 1).unwrap();
        // W[a][a] for (0,0) is 1: cos(gamma) vanishes at pi/2
        let err = gamma_pair_literal(&g, &l, FRAC_PI_2, (0, 0), (0, 1)).unwrap_err();
        assert!(matches!(err, Error::NearSingularity { .. }));

        let big = QuditLayout::new(2, 11).unwrap();
        let err = gamma_pair_literal(&GramMatrix::identity(2), &big, 0.1, (0, 0), (1, 0)).unwrap_err();
        assert!(matches!(err, Error::GuardExceeded { .. }));
    }

    #[test]
    fn identity_lattice_mean_at_zero() {
        let l = QuditLayout::new(2, 1).unwrap();
        let r = mean_value(&GramMatrix::identity(2), &l, 0.0).unwrap();
        assert!((r.mu - 3.0).abs() < 1e-15);
        let approx = mean_value_approx(&GramMatrix::identity(2), &l, 0.0, 1).unwrap();
        assert!((approx - 2.0).abs() < 1e-15);
    }

    #[test]
    fn two_level_closed_form() {
        let l = QuditLayout::new(1, 0).unwrap();
        let g = GramMatrix::identity(1);
        for n in 0..64 {
            let gamma = n as f64 * PI / 63.0;
            let mu = mean_value(&g, &l, gamma).unwrap().mu;
            assert!((mu - (1.0 + gamma.sin()) / 2.0).abs() < 1e-14);
        }
    }

    #[test]
    fn full_band_difference_is_constant_and_single_terms() {
        let g = gram2(13.0, -4.0, 9.0);
        let l = QuditLayout::new(2, 2).unwrap();
        let ev = Evaluator::new(&g, &l).unwrap();
        let m = ApproxOrder::new(3, &l).unwrap();
        for n in 0..40 {
            let gamma = n as f64 * 0.0791;
            let r = ev.evaluate(gamma, &[m], true);
            let omegas = r.omega_table.as_ref().unwrap();
            let rest = constant_and_single_part(&g, &l, omegas);
            assert!((r.mu - (r.mu_approx[&3] + rest)).abs() < 1e-10);
            assert!((r.reconstruct_mu(&g, &l).unwrap() - r.mu).abs() <= 1e-10 * r.mu.abs());
            assert!((ev.mu_approx(gamma, m) - r.mu_approx[&3]).abs() < 1e-10);
        }
    }

    #[test]
    fn summand_counts_scale_with_band() {
        let g = gram2(2.0, 1.0, 2.0);
        for k in 0..6 {
            let l = QuditLayout::new(2, k).unwrap();
            let ev = Evaluator::new(&g, &l).unwrap();
            let full = ev.two_qubit_summand_count(None);
            assert_eq!(full, 4 * (k + 1) * (k + 1));
            for a in 1..=k + 1 {
                let o = ApproxOrder::new(a, &l).unwrap();
                assert_eq!(ev.two_qubit_summand_count(Some(o)) * (k + 1) * (k + 1), full * a * a);
            }
        }
    }

    #[test]
    fn approx_order_range() {
        let l = QuditLayout::new(2, 2).unwrap();
        assert!(ApproxOrder::new(0, &l).is_err());
        assert!(ApproxOrder::new(4, &l).is_err());
        assert_eq!(ApproxOrder::new(2, &l).unwrap().band(&l), 1..=2);
        let orders: Vec<usize> = default_orders(&QuditLayout::new(2, 5).unwrap())
            .into_iter()
            .map(ApproxOrder::get)
            .collect();
        assert_eq!(orders, vec![1, 2, 3, 6]);
        let orders: Vec<usize> = default_orders(&QuditLayout::new(2, 0).unwrap())
            .into_iter()
            .map(ApproxOrder::get)
            .collect();
        assert_eq!(orders, vec![1]);
    }

    #[test]
    fn pair_exchange_symmetry_and_bounds() {
        let g = gram2(11.0, 3.0, 6.0);
        let l = QuditLayout::new(2, 2).unwrap();
        let c = Couplings::new(&g, &l).unwrap();
        for n in 0..30 {
            let cache = c.trig(0.1 + n as f64 * 0.1);
            for a in 0..l.total_qubits() {
                assert!(cache.omega(a).abs() <= 1.0 + 1e-15);
                for b in 0..l.total_qubits() {
                    if a != b {
                        let v = cache.gamma_pair(a, b);
                        assert!(v.abs() <= 1.0 + 1e-12);
                        assert!((v - cache.gamma_pair(b, a)).abs() < 1e-15);
                    }
                }
            }
        }
    }
}
