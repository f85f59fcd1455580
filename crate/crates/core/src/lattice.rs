//! Integer lattice bases, their Gram matrices, and the JSON lattice file.

use std::fs;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default bound on the absolute value of generated basis entries.
pub const DEFAULT_ENTRY_BOUND: u32 = 10;

/// Number of draws attempted before a configuration is declared degenerate.
pub const DEFAULT_RETRY_LIMIT: usize = 1000;

/// `dim` linearly independent integer row vectors.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LatticeBasis {
    rows: Vec<Vec<i64>>,
}

impl LatticeBasis {
    /// Builds a basis from row vectors, rejecting non-square or dependent input.
    pub fn new(rows: Vec<Vec<i64>>) -> Result<Self> {
        let dim = rows.len();
        if dim == 0 {
            return Err(Error::InvalidLattice("basis has no rows".into()));
        }
        if let Some(bad) = rows.iter().find(|r| r.len() != dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                actual: bad.len(),
            });
        }
        if integer_determinant(&rows) == 0 {
            return Err(Error::InvalidLattice(
                "basis rows are linearly dependent".into(),
            ));
        }
        Ok(Self { rows })
    }

    pub fn dim(&self) -> usize {
        self.rows.len()
    }

    pub fn rows(&self) -> &[Vec<i64>] {
        &self.rows
    }

    /// Largest absolute entry.
    pub fn max_abs_entry(&self) -> u64 {
        self.rows
            .iter()
            .flatten()
            .map(|v| v.unsigned_abs())
            .max()
            .unwrap_or(0)
    }

    pub fn determinant(&self) -> i128 {
        integer_determinant(&self.rows)
    }

    /// The lattice vector `sum_i x_i b_i` in ambient coordinates.
    pub fn combine(&self, x: &[i64]) -> Result<Vec<i64>> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                actual: x.len(),
            });
        }
        let mut v = vec![0i64; self.dim()];
        for (coef, row) in x.iter().zip(&self.rows) {
            for (acc, b) in v.iter_mut().zip(row) {
                *acc += coef * b;
            }
        }
        Ok(v)
    }
}

/// Symmetric positive-definite Gram matrix, stored row-major.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<f64>>", into = "Vec<Vec<f64>>")]
pub struct GramMatrix {
    dim: usize,
    entries: Vec<f64>,
}

impl GramMatrix {
    /// Validates symmetry (exact) and positive definiteness.
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let dim = rows.len();
        if dim == 0 {
            return Err(Error::InvalidLattice("Gram matrix has no rows".into()));
        }
        let mut entries = Vec::with_capacity(dim * dim);
        for row in &rows {
            if row.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    actual: row.len(),
                });
            }
            if row.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidLattice("non-finite Gram entry".into()));
            }
            entries.extend_from_slice(row);
        }
        let g = Self { dim, entries };
        g.validate()?;
        Ok(g)
    }

    fn validate(&self) -> Result<()> {
        let n = self.dim;
        for i in 0..n {
            for j in (i + 1)..n {
                if self.get(i, j) != self.get(j, i) {
                    return Err(Error::InvalidLattice(format!(
                        "Gram matrix not symmetric at ({i}, {j})"
                    )));
                }
            }
        }
        if !self.is_positive_definite() {
            return Err(Error::InvalidLattice(
                "Gram matrix is not positive definite".into(),
            ));
        }
        Ok(())
    }

    pub fn identity(dim: usize) -> Self {
        let mut entries = vec![0.0; dim * dim];
        for i in 0..dim {
            entries[i * dim + i] = 1.0;
        }
        Self { dim, entries }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.dim + j]
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.entries.chunks(self.dim).map(<[f64]>::to_vec).collect()
    }

    /// `sum_v G_iv` for every row.
    pub fn row_sums(&self) -> Vec<f64> {
        self.entries.chunks(self.dim).map(|r| r.iter().sum()).collect()
    }

    /// Same matrix with rows and columns reordered: `out[a][b] = self[perm[a]][perm[b]]`.
    pub fn permuted(&self, perm: &[usize]) -> Result<Self> {
        if perm.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                actual: perm.len(),
            });
        }
        let n = self.dim;
        let mut entries = vec![0.0; n * n];
        for a in 0..n {
            for b in 0..n {
                entries[a * n + b] = self.get(perm[a], perm[b]);
            }
        }
        Ok(Self { dim: n, entries })
    }

    /// Cholesky-based check; equivalent to all leading principal minors being positive.
    pub fn is_positive_definite(&self) -> bool {
        let n = self.dim;
        let mut l = vec![0.0f64; n * n];
        for i in 0..n {
            for j in 0..=i {
                let mut sum = self.get(i, j);
                for k in 0..j {
                    sum -= l[i * n + k] * l[j * n + k];
                }
                if i == j {
                    if sum <= 0.0 {
                        return false;
                    }
                    l[i * n + i] = sum.sqrt();
                } else {
                    l[i * n + j] = sum / l[j * n + j];
                }
            }
        }
        true
    }
}

impl TryFrom<Vec<Vec<f64>>> for GramMatrix {
    type Error = Error;

    fn try_from(rows: Vec<Vec<f64>>) -> Result<Self> {
        Self::from_rows(rows)
    }
}

impl From<GramMatrix> for Vec<Vec<f64>> {
    fn from(g: GramMatrix) -> Self {
        g.to_rows()
    }
}

/// Exact determinant by fraction-free (Bareiss) elimination.
pub fn integer_determinant(rows: &[Vec<i64>]) -> i128 {
    let n = rows.len();
    if n == 0 {
        return 1;
    }
    let mut m: Vec<Vec<i128>> = rows
        .iter()
        .map(|r| r.iter().map(|&v| v as i128).collect())
        .collect();
    let mut sign = 1i128;
    let mut prev = 1i128;
    for k in 0..n - 1 {
        if m[k][k] == 0 {
            match (k + 1..n).find(|&r| m[r][k] != 0) {
                Some(r) => {
                    m.swap(k, r);
                    sign = -sign;
                }
                None => return 0,
            }
        }
        for i in k + 1..n {
            for j in k + 1..n {
                m[i][j] = (m[i][j] * m[k][k] - m[i][k] * m[k][j]) / prev;
            }
        }
        prev = m[k][k];
    }
    sign * m[n - 1][n - 1]
}

/// Draws a basis with entries uniform in `[-entry_bound, entry_bound]`,
/// resampling dependent draws up to `retry_limit` times.
pub fn generate_random_lattice_with_limit(
    dim: usize,
    entry_bound: u32,
    seed: u64,
    retry_limit: usize,
) -> Result<LatticeBasis> {
    if dim == 0 {
        return Err(Error::InvalidArgument("lattice dimension must be >= 1".into()));
    }
    let degenerate = Error::DegenerateLattice {
        dim,
        entry_bound,
        attempts: retry_limit,
    };
    if entry_bound == 0 {
        return Err(degenerate);
    }
    let bound = entry_bound as i64;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..retry_limit {
        let rows: Vec<Vec<i64>> = (0..dim)
            .map(|_| (0..dim).map(|_| rng.gen_range(-bound..=bound)).collect())
            .collect();
        if integer_determinant(&rows) != 0 {
            return Ok(LatticeBasis { rows });
        }
    }
    Err(degenerate)
}

pub fn generate_random_lattice(dim: usize, entry_bound: u32, seed: u64) -> Result<LatticeBasis> {
    generate_random_lattice_with_limit(dim, entry_bound, seed, DEFAULT_RETRY_LIMIT)
}

pub fn gram_from_basis(basis: &LatticeBasis) -> GramMatrix {
    let n = basis.dim();
    let rows = basis.rows();
    let mut entries = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            let dot: i64 = rows[i].iter().zip(&rows[j]).map(|(a, b)| a * b).sum();
            entries[i * n + j] = dot as f64;
        }
    }
    GramMatrix { dim: n, entries }
}

/// `x^T G x`, the squared length of the lattice vector with coefficients `x`.
pub fn vector_norm_sq(gram: &GramMatrix, x: &[i64]) -> Result<f64> {
    if x.len() != gram.dim() {
        return Err(Error::DimensionMismatch {
            expected: gram.dim(),
            actual: x.len(),
        });
    }
    Ok(quadratic_form(gram, x))
}

#[inline]
pub(crate) fn quadratic_form(gram: &GramMatrix, x: &[i64]) -> f64 {
    let n = gram.dim();
    let mut total = 0.0;
    for (i, &xi) in x.iter().enumerate().take(n) {
        if xi == 0 {
            continue;
        }
        let row: f64 = x.iter().enumerate().take(n).map(|(j, &xj)| gram.get(i, j) * xj as f64).sum();
        total += xi as f64 * row;
    }
    total
}

/// On-disk lattice document.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LatticeFile {
    pub dim: usize,
    pub basis: Vec<Vec<i64>>,
    pub gram: Vec<Vec<f64>>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub entry_bound: u32,
}

/// A validated lattice together with the provenance it was generated from.
#[derive(Clone, Debug)]
pub struct Lattice {
    pub basis: LatticeBasis,
    pub gram: GramMatrix,
    pub seed: u64,
    pub entry_bound: u32,
}

impl Lattice {
    pub fn generate(dim: usize, entry_bound: u32, seed: u64) -> Result<Self> {
        let basis = generate_random_lattice(dim, entry_bound, seed)?;
        let gram = gram_from_basis(&basis);
        Ok(Self {
            basis,
            gram,
            seed,
            entry_bound,
        })
    }

    pub fn to_file(&self) -> LatticeFile {
        LatticeFile {
            dim: self.basis.dim(),
            basis: self.basis.rows().to_vec(),
            gram: self.gram.to_rows(),
            seed: self.seed,
            entry_bound: self.entry_bound,
        }
    }

    /// Checks the document is self-consistent: the stored Gram matrix must equal the basis's.
    pub fn from_file(file: LatticeFile) -> Result<Self> {
        let basis = LatticeBasis::new(file.basis)?;
        if basis.dim() != file.dim {
            return Err(Error::DimensionMismatch {
                expected: file.dim,
                actual: basis.dim(),
            });
        }
        let gram = gram_from_basis(&basis);
        if gram.to_rows() != file.gram {
            return Err(Error::InvalidLattice(
                "stored Gram matrix does not match the basis".into(),
            ));
        }
        if file.entry_bound > 0 && basis.max_abs_entry() > file.entry_bound as u64 {
            return Err(Error::InvalidLattice(format!(
                "basis entry exceeds entry_bound {}",
                file.entry_bound
            )));
        }
        Ok(Self {
            basis,
            gram,
            seed: file.seed,
            entry_bound: file.entry_bound,
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        Self::from_file(serde_json::from_str(&text)?)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut text = serde_json::to_string_pretty(&self.to_file())?;
        text.push('\n');
        fs::write(path, text)?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_dimensional_unit_bound_gives_plus_minus_one() {
        for seed in 0..50 {
            let b = generate_random_lattice(1, 1, seed).unwrap();
            assert!(b.rows()[0][0] == 1 || b.rows()[0][0] == -1);
        }
    }

    #[test]
    fn generation_is_deterministic() {
        let a = generate_random_lattice(2, 5, 42).unwrap();
        let b = generate_random_lattice(2, 5, 42).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn generated_bases_are_independent_and_bounded() {
        for seed in 0..1000 {
            let b = generate_random_lattice(2, 5, seed).unwrap();
            assert_ne!(b.determinant(), 0, "seed {seed}");
            assert!(b.max_abs_entry() <= 5);
        }
    }

    #[test]
    fn zero_bound_is_degenerate() {
        let err = generate_random_lattice(2, 0, 1).unwrap_err();
        assert!(matches!(err, Error::DegenerateLattice { .. }));
        assert!(generate_random_lattice(0, 3, 1).is_err());
    }

    #[test]
    fn gram_examples() {
        let id = LatticeBasis::new(vec![vec![1, 0], vec![0, 1]]).unwrap();
        assert_eq!(gram_from_basis(&id).to_rows(), vec![vec![1.0, 0.0], vec![0.0, 1.0]]);
        let b = LatticeBasis::new(vec![vec![1, 0], vec![1, 1]]).unwrap();
        assert_eq!(gram_from_basis(&b).to_rows(), vec![vec![1.0, 1.0], vec![1.0, 2.0]]);
    }

    #[test]
    fn random_gram_is_symmetric_positive_definite() {
        for seed in 0..200 {
            let g = gram_from_basis(&generate_random_lattice(3, 10, seed).unwrap());
            for i in 0..3 {
                for j in 0..3 {
                    assert_eq!(g.get(i, j), g.get(j, i));
                }
            }
            assert!(g.is_positive_definite());
        }
    }

    #[test]
    fn norm_examples() {
        let id = GramMatrix::identity(2);
        assert_eq!(vector_norm_sq(&id, &[3, 4]).unwrap(), 25.0);
        let g = GramMatrix::from_rows(vec![vec![2.0, 1.0], vec![1.0, 2.0]]).unwrap();
        assert_eq!(vector_norm_sq(&g, &[1, -1]).unwrap(), 2.0);
        assert_eq!(vector_norm_sq(&g, &[0, 0]).unwrap(), 0.0);
        assert!(matches!(
            vector_norm_sq(&g, &[1, 2, 3]),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn rejects_bad_matrices() {
        assert!(LatticeBasis::new(vec![vec![1, 2], vec![2, 4]]).is_err());
        assert!(LatticeBasis::new(vec![vec![1, 2]]).is_err());
        assert!(GramMatrix::from_rows(vec![vec![1.0, 2.0], vec![0.0, 1.0]]).is_err());
        assert!(GramMatrix::from_rows(vec![vec![1.0, 2.0], vec![2.0, 1.0]]).is_err());
    }

    #[test]
    fn bareiss_matches_known_determinants() {
        assert_eq!(integer_determinant(&[vec![2, 0, 1], vec![1, 3, 2], vec![1, 1, 2]]), 6);
        assert_eq!(integer_determinant(&[vec![0, 1], vec![1, 0]]), -1);
        assert_eq!(integer_determinant(&[vec![4, 3], vec![6, 3]]), -6);
    }

    #[test]
    fn file_round_trip_and_tamper_detection() {
        let lat = Lattice::generate(2, 10, 7).unwrap();
        let file = lat.to_file();
        let text = serde_json::to_string(&file).unwrap();
        let back = Lattice::from_file(serde_json::from_str(&text).unwrap()).unwrap();
        assert_eq!(back.gram, lat.gram);
        assert_eq!(back.seed, 7);

        let mut bad = file.clone();
        bad.gram[0][1] += 1.0;
        assert!(Lattice::from_file(bad).is_err());
    }
}
