//! Brute-force statevector for `exp(-i beta H_D) exp(-i gamma H_P) |+>^T`.
//!
//! `H_P` is applied as a diagonal phase from the basis-state energies and
//! `H_D = sum_j X_j` as one `exp(-i beta X)` rotation per qubit. Amplitude
//! `z` belongs to the basis state whose bit `g` is global qubit `g`
//! (see [`crate::encoding`]).

use std::f64::consts::FRAC_PI_4;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use num_complex::Complex64;
use rand::distributions::WeightedIndex;
use rand::prelude::Distribution;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::analytic::ApproxOrder;
use crate::encoding::{energy_table, QuditLayout};
use crate::error::{Error, Result};
use crate::lattice::GramMatrix;

/// Default ceiling on simulated qubits (2^26 amplitudes is 1 GiB).
pub const DEFAULT_QUBIT_GUARD: usize = 26;

/// Magic prefix of the amplitude dump header.
pub const DUMP_MAGIC: &[u8; 8] = b"QMVSTATE";

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AngleParams {
    pub beta: f64,
    pub gamma: f64,
}

impl AngleParams {
    /// `beta = pi/4`.
    pub fn with_gamma(gamma: f64) -> Self {
        Self {
            beta: FRAC_PI_4,
            gamma,
        }
    }

    fn validate(&self) -> Result<()> {
        if !self.beta.is_finite() || !self.gamma.is_finite() {
            return Err(Error::InvalidArgument("angles must be finite".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct StateVector {
    layout: QuditLayout,
    amplitudes: Vec<Complex64>,
}

impl StateVector {
    pub fn num_qubits(&self) -> usize {
        self.layout.total_qubits()
    }

    pub fn layout(&self) -> &QuditLayout {
        &self.layout
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.amplitudes.iter().map(|a| a.norm_sqr()).collect()
    }

    fn check_layout(&self, layout: &QuditLayout) -> Result<()> {
        if layout.total_qubits() != self.num_qubits() {
            return Err(Error::DimensionMismatch {
                expected: self.num_qubits(),
                actual: layout.total_qubits(),
            });
        }
        Ok(())
    }

    /// Writes a 16-byte header (magic, then `T` as little-endian u64)
    /// followed by interleaved little-endian `re, im` doubles.
    pub fn dump(&self, path: &Path) -> Result<()> {
        let mut out = BufWriter::new(File::create(path)?);
        out.write_all(DUMP_MAGIC)?;
        out.write_all(&(self.num_qubits() as u64).to_le_bytes())?;
        for a in &self.amplitudes {
            out.write_all(&a.re.to_le_bytes())?;
            out.write_all(&a.im.to_le_bytes())?;
        }
        out.flush()?;
        Ok(())
    }
}

/// Reads back a dump written by [`StateVector::dump`], returning `T` and the amplitudes.
pub fn read_dump(path: &Path) -> Result<(usize, Vec<Complex64>)> {
    let bytes = std::fs::read(path)?;
    if bytes.len() < 16 || &bytes[..8] != DUMP_MAGIC {
        return Err(Error::InvalidArgument("not an amplitude dump".into()));
    }
    let t = u64::from_le_bytes(bytes[8..16].try_into().expect("8 bytes")) as usize;
    let body = &bytes[16..];
    if t >= 64 || body.len() != 16usize << t {
        return Err(Error::InvalidArgument("truncated amplitude dump".into()));
    }
    let amps = body
        .chunks_exact(16)
        .map(|c| {
            Complex64::new(
                f64::from_le_bytes(c[..8].try_into().expect("8 bytes")),
                f64::from_le_bytes(c[8..].try_into().expect("8 bytes")),
            )
        })
        .collect();
    Ok((t, amps))
}

pub fn build_state(
    gram: &GramMatrix,
    layout: &QuditLayout,
    angles: AngleParams,
    guard: usize,
) -> Result<StateVector> {
    angles.validate()?;
    let energies = energy_table(gram, layout, guard)?;
    Ok(build_state_from_energies(layout, &energies, angles))
}

/// Same as [`build_state`] but reuses a precomputed energy table.
pub fn build_state_from_energies(layout: &QuditLayout, energies: &[f64], angles: AngleParams) -> StateVector {
    let t = layout.total_qubits();
    debug_assert_eq!(energies.len(), 1usize << t);
    let uniform = (-(t as f64) * 0.5 * std::f64::consts::LN_2).exp();
    let mut amplitudes: Vec<Complex64> = energies
        .par_iter()
        .map(|&e| Complex64::from_polar(uniform, -angles.gamma * e))
        .collect();
    let (s, c) = angles.beta.sin_cos();
    let minus_is = Complex64::new(0.0, -s);
    for qubit in 0..t {
        let stride = 1usize << qubit;
        amplitudes.par_chunks_mut(stride << 1).for_each(|block| {
            let (lo, hi) = block.split_at_mut(stride);
            for (a0, a1) in lo.iter_mut().zip(hi.iter_mut()) {
                let (x0, x1) = (*a0, *a1);
                *a0 = x0 * c + x1 * minus_is;
                *a1 = x0 * minus_is + x1 * c;
            }
        });
    }
    StateVector {
        layout: *layout,
        amplitudes,
    }
}

/// `<psi| H_P |psi>`.
pub fn expectation_hp(state: &StateVector, gram: &GramMatrix, layout: &QuditLayout) -> Result<f64> {
    state.check_layout(layout)?;
    let energies = energy_table(gram, layout, state.num_qubits())?;
    Ok(diagonal_expectation(state, &energies))
}

pub fn diagonal_expectation(state: &StateVector, diagonal: &[f64]) -> f64 {
    state
        .amplitudes
        .iter()
        .zip(diagonal)
        .map(|(a, d)| a.norm_sqr() * d)
        .sum()
}

/// Diagonal of the truncated Hamiltonian
/// `(1/4) sum_ij G_ij sum_{p,q in band} 2^(p+q) Z_ip Z_jq`.
pub fn truncated_energy_table(gram: &GramMatrix, layout: &QuditLayout, order: ApproxOrder) -> Result<Vec<f64>> {
    layout.check_basis_index(DEFAULT_QUBIT_GUARD.max(layout.total_qubits()), "truncated energy table")?;
    if gram.dim() != layout.num_qudits() {
        return Err(Error::DimensionMismatch {
            expected: layout.num_qudits(),
            actual: gram.dim(),
        });
    }
    let n = layout.num_qudits();
    let band = order.band(layout);
    let size = 1u64 << layout.total_qubits();
    Ok((0..size)
        .into_par_iter()
        .map(|z| {
            // band-weighted spin sums per qudit: sum_{p in band} 2^p s_ip
            let partial: Vec<f64> = (0..n)
                .map(|i| {
                    band.clone()
                        .map(|p| {
                            let bit = (z >> layout.qubit_index(i, p)) & 1;
                            let s = 1.0 - 2.0 * bit as f64;
                            (1u64 << p) as f64 * s
                        })
                        .sum()
                })
                .collect();
            let mut e = 0.0;
            for i in 0..n {
                for j in 0..n {
                    e += gram.get(i, j) * partial[i] * partial[j];
                }
            }
            0.25 * e
        })
        .collect())
}

/// `<psi| H_A |psi>` on a state evolved under the full `H_P`.
pub fn expectation_ha(
    state: &StateVector,
    gram: &GramMatrix,
    layout: &QuditLayout,
    order: usize,
) -> Result<f64> {
    state.check_layout(layout)?;
    let order = ApproxOrder::new(order, layout)?;
    let table = truncated_energy_table(gram, layout, order)?;
    Ok(diagonal_expectation(state, &table))
}

/// Exact `<H_P>` on the depth-1 state (`beta = pi/4`) at every `gamma`.
pub fn oracle_mu_curve(gram: &GramMatrix, layout: &QuditLayout, gammas: &[f64], guard: usize) -> Result<Vec<f64>> {
    let energies = energy_table(gram, layout, guard)?;
    Ok(gammas
        .iter()
        .map(|&g| {
            let state = build_state_from_energies(layout, &energies, AngleParams::with_gamma(g));
            diagonal_expectation(&state, &energies)
        })
        .collect())
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Sample {
    pub index: u64,
    pub bits: Vec<u8>,
    pub x: Vec<i64>,
    pub energy: f64,
}

/// Basis-state indices drawn i.i.d. from `|psi_z|^2`.
pub fn sample_indices(state: &StateVector, count: usize, seed: u64) -> Result<Vec<u64>> {
    if count == 0 {
        return Err(Error::InvalidArgument("sample count must be >= 1".into()));
    }
    let dist = WeightedIndex::new(state.probabilities())
        .map_err(|e| Error::InvalidArgument(format!("invalid state distribution: {e}")))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok((0..count).map(|_| dist.sample(&mut rng) as u64).collect())
}

pub fn sample_bitstrings(
    state: &StateVector,
    gram: &GramMatrix,
    count: usize,
    seed: u64,
) -> Result<Vec<Sample>> {
    let layout = *state.layout();
    layout.check_gram(gram)?;
    let indices = sample_indices(state, count, seed)?;
    Ok(indices
        .into_iter()
        .map(|index| {
            let x = layout.decode_index(index);
            let energy = crate::lattice::quadratic_form(gram, &x);
            Sample {
                index,
                bits: layout.index_to_bits(index),
                x,
                energy,
            }
        })
        .collect())
}
