//! Binary qudit encoding: qubits `(i, p)` to integer coefficients and energies.
//!
//! Each qudit `Q_i` is carried by `m = k + 1` qubits with
//! `Q_i = 1/2 + sum_{p=0..k} 2^(p-1) Z_ip`, so it takes every integer in
//! `[-2^k + 1, 2^k]` exactly once. Bit `b = 0` is the `Z = +1` eigenstate.
//! Global qubit `(i, p)` sits at index `i * m + p` (qudit-major), and a
//! computational basis state is addressed by the integer whose bit `g` is
//! the value of global qubit `g`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{quadratic_form, GramMatrix};

/// Largest supported significance parameter.
pub const MAX_K: usize = 30;

/// Default ceiling on the number of qubits for exhaustive enumeration.
pub const DEFAULT_ENUMERATION_GUARD: usize = 26;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct QuditLayout {
    num_qudits: usize,
    k: usize,
}

impl QuditLayout {
    pub fn new(num_qudits: usize, k: usize) -> Result<Self> {
        if num_qudits == 0 {
            return Err(Error::InvalidArgument("at least one qudit is required".into()));
        }
        if k > MAX_K {
            return Err(Error::InvalidArgument(format!("k = {k} exceeds {MAX_K}")));
        }
        Ok(Self { num_qudits, k })
    }

    pub fn num_qudits(&self) -> usize {
        self.num_qudits
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// Qubits per qudit, `k + 1`.
    pub fn qubits_per_qudit(&self) -> usize {
        self.k + 1
    }

    pub fn total_qubits(&self) -> usize {
        self.num_qudits * (self.k + 1)
    }

    #[inline]
    pub fn qubit_index(&self, qudit: usize, significance: usize) -> usize {
        qudit * (self.k + 1) + significance
    }

    #[inline]
    pub fn qubit_position(&self, index: usize) -> (usize, usize) {
        (index / (self.k + 1), index % (self.k + 1))
    }

    /// Smallest representable coefficient, `-2^k + 1`.
    pub fn min_value(&self) -> i64 {
        1 - (1i64 << self.k)
    }

    /// Largest representable coefficient, `2^k`.
    pub fn max_value(&self) -> i64 {
        1i64 << self.k
    }

    pub(crate) fn check_gram(&self, gram: &GramMatrix) -> Result<()> {
        if gram.dim() != self.num_qudits {
            return Err(Error::DimensionMismatch {
                expected: self.num_qudits,
                actual: gram.dim(),
            });
        }
        Ok(())
    }

    pub(crate) fn check_basis_index(&self, guard: usize, what: &'static str) -> Result<()> {
        let qubits = self.total_qubits();
        if qubits > guard || qubits >= 64 {
            return Err(Error::GuardExceeded {
                what,
                qubits,
                limit: guard.min(63),
            });
        }
        Ok(())
    }

    /// Coefficient vector of a computational basis state.
    pub fn decode_index(&self, index: u64) -> Vec<i64> {
        let mut x = Vec::with_capacity(self.num_qudits);
        self.decode_index_into(index, &mut x);
        x
    }

    #[inline]
    pub(crate) fn decode_index_into(&self, index: u64, out: &mut Vec<i64>) {
        let m = self.k + 1;
        let mask = (1u64 << m) - 1;
        out.clear();
        for i in 0..self.num_qudits {
            let u = (index >> (i * m)) & mask;
            out.push((1i64 << self.k) - u as i64);
        }
    }

    /// Basis-state index carrying coefficients `x`.
    pub fn encode_index(&self, x: &[i64]) -> Result<u64> {
        if x.len() != self.num_qudits {
            return Err(Error::DimensionMismatch {
                expected: self.num_qudits,
                actual: x.len(),
            });
        }
        let m = self.k + 1;
        let mut index = 0u64;
        for (i, &xi) in x.iter().enumerate() {
            if xi < self.min_value() || xi > self.max_value() {
                return Err(Error::InvalidArgument(format!(
                    "coefficient {xi} outside [{}, {}]",
                    self.min_value(),
                    self.max_value()
                )));
            }
            let u = ((1i64 << self.k) - xi) as u64;
            index |= u << (i * m);
        }
        Ok(index)
    }

    /// Expands a basis-state index into one bit per global qubit.
    pub fn index_to_bits(&self, index: u64) -> Vec<u8> {
        (0..self.total_qubits())
            .map(|g| ((index >> g) & 1) as u8)
            .collect()
    }

    pub fn bits_to_index(&self, bits: &[u8]) -> Result<u64> {
        self.check_bits(bits)?;
        Ok(bits
            .iter()
            .enumerate()
            .fold(0u64, |acc, (g, &b)| acc | (u64::from(b) << g)))
    }

    fn check_bits(&self, bits: &[u8]) -> Result<()> {
        if bits.len() != self.total_qubits() {
            return Err(Error::DimensionMismatch {
                expected: self.total_qubits(),
                actual: bits.len(),
            });
        }
        if bits.iter().any(|&b| b > 1) {
            return Err(Error::InvalidArgument("bits must be 0 or 1".into()));
        }
        Ok(())
    }
}

/// Spin `s = 1 - 2b` of a bit.
#[inline]
pub fn spin_of_bit(bit: u8) -> i8 {
    1 - 2 * bit as i8
}

/// `1/2 + sum_p 2^(p-1) s_p` for the `k + 1` spins of one qudit.
pub fn qudit_value(layout: &QuditLayout, spins: &[i8]) -> Result<i64> {
    let m = layout.qubits_per_qudit();
    if spins.len() != m {
        return Err(Error::DimensionMismatch {
            expected: m,
            actual: spins.len(),
        });
    }
    if spins.iter().any(|&s| s != 1 && s != -1) {
        return Err(Error::InvalidArgument("spins must be +1 or -1".into()));
    }
    // 2 * value = 1 + sum_p 2^p s_p, which is always even
    let twice: i64 = 1 + spins
        .iter()
        .enumerate()
        .map(|(p, &s)| (s as i64) << p)
        .sum::<i64>();
    Ok(twice / 2)
}

pub fn decode_bitstring(layout: &QuditLayout, bits: &[u8]) -> Result<Vec<i64>> {
    layout.check_bits(bits)?;
    let m = layout.qubits_per_qudit();
    bits.chunks(m)
        .map(|chunk| {
            let spins: Vec<i8> = chunk.iter().map(|&b| spin_of_bit(b)).collect();
            qudit_value(layout, &spins)
        })
        .collect()
}

pub fn encode_coefficients(layout: &QuditLayout, x: &[i64]) -> Result<Vec<u8>> {
    Ok(layout.index_to_bits(layout.encode_index(x)?))
}

/// Eigenvalue of the problem Hamiltonian on a computational basis state.
pub fn energy_of_bitstring(gram: &GramMatrix, layout: &QuditLayout, bits: &[u8]) -> Result<f64> {
    layout.check_gram(gram)?;
    let x = decode_bitstring(layout, bits)?;
    Ok(quadratic_form(gram, &x))
}

/// Energy of the basis state with the given index.
pub fn energy_of_index(gram: &GramMatrix, layout: &QuditLayout, index: u64) -> Result<f64> {
    layout.check_gram(gram)?;
    Ok(quadratic_form(gram, &layout.decode_index(index)))
}

/// Energies of all `2^T` basis states, indexed by basis state.
pub fn energy_table(gram: &GramMatrix, layout: &QuditLayout, guard: usize) -> Result<Vec<f64>> {
    layout.check_gram(gram)?;
    layout.check_basis_index(guard, "energy table")?;
    let size = 1u64 << layout.total_qubits();
    let mut x = Vec::with_capacity(layout.num_qudits());
    Ok((0..size)
        .map(|z| {
            layout.decode_index_into(z, &mut x);
            quadratic_form(gram, &x)
        })
        .collect())
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SpectrumEntry {
    pub index: u64,
    pub x: Vec<i64>,
    pub energy: f64,
}

/// Every basis state with its coefficients and energy, ascending by energy
/// with ties broken by lexicographic coefficient order.
pub fn spectrum_enumerate(
    gram: &GramMatrix,
    layout: &QuditLayout,
    guard: usize,
) -> Result<Vec<SpectrumEntry>> {
    let energies = energy_table(gram, layout, guard)?;
    let mut entries: Vec<SpectrumEntry> = energies
        .into_iter()
        .enumerate()
        .map(|(z, energy)| SpectrumEntry {
            index: z as u64,
            x: layout.decode_index(z as u64),
            energy,
        })
        .collect();
    entries.sort_by(|a, b| a.energy.total_cmp(&b.energy).then_with(|| a.x.cmp(&b.x)));
    Ok(entries)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn all_spins(m: usize) -> Vec<Vec<i8>> {
        (0..1u32 << m)
            .map(|mask| (0..m).map(|p| if mask >> p & 1 == 0 { 1 } else { -1 }).collect())
            .collect()
    }

    #[test]
    fn qudit_value_extremes() {
        let l = QuditLayout::new(1, 1).unwrap();
        assert_eq!(qudit_value(&l, &[1, 1]).unwrap(), 2);
        assert_eq!(qudit_value(&l, &[-1, -1]).unwrap(), -1);
        assert!(qudit_value(&l, &[1]).is_err());
    }

    #[test]
    fn qudit_value_is_bijective_on_range() {
        for k in 0..6 {
            let l = QuditLayout::new(1, k).unwrap();
            let mut vals: Vec<i64> = all_spins(k + 1)
                .iter()
                .map(|s| qudit_value(&l, s).unwrap())
                .collect();
            vals.sort_unstable();
            let expected: Vec<i64> = (l.min_value()..=l.max_value()).collect();
            assert_eq!(vals, expected, "k={k}");
        }
        let l = QuditLayout::new(1, 2).unwrap();
        assert_eq!((l.min_value(), l.max_value()), (-3, 4));
    }

    #[test]
    fn decode_extremes() {
        let l = QuditLayout::new(2, 1).unwrap();
        assert_eq!(decode_bitstring(&l, &[0, 0, 0, 0]).unwrap(), vec![2, 2]);
        assert_eq!(decode_bitstring(&l, &[1, 1, 1, 1]).unwrap(), vec![-1, -1]);
        assert!(decode_bitstring(&l, &[0, 0, 0]).is_err());
    }

    #[test]
    fn encode_decode_round_trip() {
        let l = QuditLayout::new(2, 2).unwrap();
        for a in l.min_value()..=l.max_value() {
            for b in l.min_value()..=l.max_value() {
                let bits = encode_coefficients(&l, &[a, b]).unwrap();
                assert_eq!(decode_bitstring(&l, &bits).unwrap(), vec![a, b]);
                let idx = l.bits_to_index(&bits).unwrap();
                assert_eq!(l.decode_index(idx), vec![a, b]);
            }
        }
        assert!(l.encode_index(&[5, 0]).is_err());
    }

    #[test]
    fn index_decoding_agrees_with_spin_formula() {
        let l = QuditLayout::new(3, 1).unwrap();
        for z in 0..1u64 << l.total_qubits() {
            let bits = l.index_to_bits(z);
            assert_eq!(decode_bitstring(&l, &bits).unwrap(), l.decode_index(z));
        }
    }

    #[test]
    fn energies() {
        let id = GramMatrix::identity(2);
        let l = QuditLayout::new(2, 1).unwrap();
        let zero = encode_coefficients(&l, &[0, 0]).unwrap();
        assert_eq!(energy_of_bitstring(&id, &l, &zero).unwrap(), 0.0);
        let unit = encode_coefficients(&l, &[1, 0]).unwrap();
        assert_eq!(energy_of_bitstring(&id, &l, &unit).unwrap(), 1.0);

        let g = GramMatrix::from_rows(vec![vec![2.0, 1.0], vec![1.0, 3.0]]).unwrap();
        for z in 0..16u64 {
            let bits = l.index_to_bits(z);
            let x = decode_bitstring(&l, &bits).unwrap();
            let direct = (2 * x[0] * x[0] + 2 * x[0] * x[1] + 3 * x[1] * x[1]) as f64;
            assert_eq!(energy_of_bitstring(&g, &l, &bits).unwrap(), direct);
        }
        let l3 = QuditLayout::new(3, 1).unwrap();
        assert!(energy_of_bitstring(&g, &l3, &[0; 6]).is_err());
    }

    #[test]
    fn spectrum_examples() {
        let l = QuditLayout::new(2, 1).unwrap();
        let s = spectrum_enumerate(&GramMatrix::identity(2), &l, 26).unwrap();
        assert_eq!(s.len(), 16);
        assert_eq!(s[0].energy, 0.0);
        assert_eq!(s[0].x, vec![0, 0]);
        assert_eq!(s[1].energy, 1.0);

        let g = GramMatrix::from_rows(vec![vec![2.0, 1.0], vec![1.0, 2.0]]).unwrap();
        let s = spectrum_enumerate(&g, &l, 26).unwrap();
        // brute force over all coefficient pairs in [-1, 2]^2
        let mut best = f64::INFINITY;
        for a in -1i64..=2 {
            for b in -1i64..=2 {
                if (a, b) != (0, 0) {
                    best = best.min((2 * a * a + 2 * a * b + 2 * b * b) as f64);
                }
            }
        }
        assert_eq!(best, 2.0);
        assert_eq!(s[1].energy, best);
        assert!(s.windows(2).all(|w| w[0].energy <= w[1].energy));
    }

    #[test]
    fn spectrum_guard() {
        let l = QuditLayout::new(2, 3).unwrap();
        let err = spectrum_enumerate(&GramMatrix::identity(2), &l, 6).unwrap_err();
        assert!(matches!(err, Error::GuardExceeded { .. }));
    }

    #[test]
    fn uniform_mean_matches_moments() {
        let g = GramMatrix::from_rows(vec![vec![5.0, -2.0], vec![-2.0, 3.0]]).unwrap();
        for k in 0..4usize {
            let l = QuditLayout::new(2, k).unwrap();
            let table = energy_table(&g, &l, 26).unwrap();
            let mean = table.iter().sum::<f64>() / table.len() as f64;
            let eq = 0.5;
            let eq2 = 0.25 + ((4f64).powi(k as i32 + 1) - 1.0) / 12.0;
            let expected = (g.get(0, 0) + g.get(1, 1)) * eq2 + 2.0 * g.get(0, 1) * eq * eq;
            assert!((mean - expected).abs() < 1e-12, "k={k}: {mean} vs {expected}");
            let zeros = table.iter().filter(|&&e| e == 0.0).count();
            assert_eq!(zeros, 1);
            assert!(table.iter().all(|&e| e >= 0.0));
        }
    }
}
