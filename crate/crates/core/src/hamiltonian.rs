//! Dense Hamiltonian on the product basis.
//!
//! ```text
//! H   = H_z + H_d + P
//! H_z = ω Σ_i I_z^i
//! H_d = Σ_{i<j} a_ij [I_z^i I_z^j - 1/4 (I_+^i I_-^j + I_-^i I_+^j)]
//! P   = Σ_{i<j} a_ij [I_+^i I_+^j + I_-^i I_-^j]
//! ```
//!
//! Ladder operators use the spin-1/2 normalization `I_+|-1/2> = |+1/2>` with
//! coefficient 1. The matrix is stored densely; a compressed row index of the
//! nonzero entries is kept alongside it so that `apply` costs O(nnz).

use num_complex::Complex64;

use crate::basis::{Basis, MAX_SPINS, MIN_SPINS};
use crate::error::{Error, Result};

/// Static problem definition.
#[derive(Clone, Debug, PartialEq)]
pub struct SpinSystem {
    n: usize,
    omega: f64,
    /// Upper-triangle couplings in row order (1,2), (1,3), ..., (N-1,N).
    couplings: Vec<f64>,
    include_p: bool,
}

fn pair_slot(n: usize, i: usize, j: usize) -> usize {
    debug_assert!(i < j && j < n);
    i * n - i * (i + 1) / 2 + (j - i - 1)
}

impl SpinSystem {
    /// All pairs coupled with the same constant `a`.
    pub fn uniform(n: usize, omega: f64, a: f64, include_p: bool) -> Result<Self> {
        if !(MIN_SPINS..=MAX_SPINS).contains(&n) {
            return Err(Error::Range {
                what: "spin count",
                value: n as i64,
                min: MIN_SPINS as i64,
                max: MAX_SPINS as i64,
            });
        }
        if !omega.is_finite() || !a.is_finite() {
            return Err(Error::InvalidParameter(
                "omega and couplings must be finite".into(),
            ));
        }
        Ok(SpinSystem {
            n,
            omega,
            couplings: vec![a; n * (n - 1) / 2],
            include_p,
        })
    }

    pub fn n_spins(&self) -> usize {
        self.n
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }

    pub fn include_p(&self) -> bool {
        self.include_p
    }

    pub fn set_include_p(&mut self, include_p: bool) {
        self.include_p = include_p;
    }

    pub fn basis(&self) -> Basis {
        Basis::new(self.n).expect("spin count validated at construction")
    }

    pub fn dim(&self) -> usize {
        1 << self.n
    }

    fn check_pair(&self, i: usize, j: usize) -> Result<(usize, usize)> {
        for s in [i, j] {
            if !(1..=self.n).contains(&s) {
                return Err(Error::Range {
                    what: "spin index",
                    value: s as i64,
                    min: 1,
                    max: self.n as i64,
                });
            }
        }
        if i == j {
            return Err(Error::InvalidParameter(format!(
                "coupling a_{i}_{j} pairs a spin with itself"
            )));
        }
        Ok((i.min(j) - 1, i.max(j) - 1))
    }

    /// Coupling `a_ij` for 1-based spins; symmetric in `i`, `j`.
    pub fn coupling(&self, i: usize, j: usize) -> Result<f64> {
        let (lo, hi) = self.check_pair(i, j)?;
        Ok(self.couplings[pair_slot(self.n, lo, hi)])
    }

    pub fn set_coupling(&mut self, i: usize, j: usize, a: f64) -> Result<()> {
        if !a.is_finite() {
            return Err(Error::InvalidParameter(format!("a_{i}_{j} is not finite")));
        }
        let (lo, hi) = self.check_pair(i, j)?;
        self.couplings[pair_slot(self.n, lo, hi)] = a;
        Ok(())
    }

    /// Iterates `(i, j, a_ij)` over unordered pairs with 1-based `i < j`.
    pub fn pairs(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        let n = self.n;
        (0..n)
            .flat_map(move |i| (i + 1..n).map(move |j| (i, j)))
            .map(move |(i, j)| (i + 1, j + 1, self.couplings[pair_slot(n, i, j)]))
    }

    pub fn is_uniform(&self) -> bool {
        self.couplings.windows(2).all(|w| w[0] == w[1])
    }

    /// Relabels spins so that old spin `i` becomes spin `perm[i - 1]`.
    /// `perm` holds 1-based labels.
    pub fn relabeled(&self, perm: &[usize]) -> Result<Self> {
        check_permutation(perm, self.n)?;
        let mut out = self.clone();
        for (i, j, a) in self.pairs() {
            out.set_coupling(perm[i - 1], perm[j - 1], a)?;
        }
        Ok(out)
    }
}

pub(crate) fn check_permutation(perm: &[usize], n: usize) -> Result<()> {
    let mut seen = vec![false; n];
    if perm.len() != n {
        return Err(Error::Shape {
            expected: n,
            got: perm.len(),
        });
    }
    for &p in perm {
        if !(1..=n).contains(&p) || std::mem::replace(&mut seen[p - 1], true) {
            return Err(Error::InvalidParameter(format!(
                "{perm:?} is not a permutation of 1..={n}"
            )));
        }
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq)]
struct RowIndex {
    row_start: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<Complex64>,
}

impl RowIndex {
    fn from_dense(dim: usize, entries: &[Complex64]) -> Self {
        let zero = Complex64::new(0.0, 0.0);
        let mut row_start = Vec::with_capacity(dim + 1);
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        row_start.push(0);
        for row in entries.chunks_exact(dim) {
            for (c, &v) in row.iter().enumerate() {
                if v != zero {
                    cols.push(c);
                    vals.push(v);
                }
            }
            row_start.push(cols.len());
        }
        RowIndex {
            row_start,
            cols,
            vals,
        }
    }
}

/// Dense complex matrix `H_nm` over the product basis, indexed by 0-based
/// offsets.
#[derive(Clone, Debug, PartialEq)]
pub struct HamiltonianMatrix {
    dim: usize,
    entries: Vec<Complex64>,
    rows: RowIndex,
}

impl HamiltonianMatrix {
    pub fn build(sys: &SpinSystem) -> Self {
        let basis = sys.basis();
        let dim = basis.dim();
        let mut entries = vec![Complex64::new(0.0, 0.0); dim * dim];
        let pairs: Vec<_> = sys.pairs().collect();

        for state in basis.iter() {
            let k = state.offset();
            let up = state.up_bits();
            let m = |s: usize| if up >> (s - 1) & 1 == 1 { 0.5 } else { -0.5 };

            let mut diag = sys.omega * state.m_total().as_f64();
            for &(i, j, a) in &pairs {
                diag += a * m(i) * m(j);
            }
            entries[k * dim + k] = Complex64::new(diag, 0.0);

            for &(i, j, a) in &pairs {
                let parallel = m(i) == m(j);
                let coeff = match (parallel, sys.include_p) {
                    (false, _) => -a / 4.0,
                    (true, true) => a,
                    (true, false) => continue,
                };
                let target = state
                    .flip(i)
                    .and_then(|s| s.flip(j))
                    .expect("pair indices validated by SpinSystem");
                entries[target.offset() * dim + k] += Complex64::new(coeff, 0.0);
            }
        }

        Self::from_parts(dim, entries)
    }

    /// Wraps an arbitrary dense row-major matrix. Used for tests and external
    /// inputs; no Hermiticity is enforced.
    pub fn from_entries(dim: usize, entries: Vec<Complex64>) -> Result<Self> {
        if entries.len() != dim * dim {
            return Err(Error::Shape {
                expected: dim * dim,
                got: entries.len(),
            });
        }
        Ok(Self::from_parts(dim, entries))
    }

    fn from_parts(dim: usize, entries: Vec<Complex64>) -> Self {
        let rows = RowIndex::from_dense(dim, &entries);
        HamiltonianMatrix { dim, entries, rows }
    }

    pub fn identity(dim: usize) -> Self {
        let mut entries = vec![Complex64::new(0.0, 0.0); dim * dim];
        for k in 0..dim {
            entries[k * dim + k] = Complex64::new(1.0, 0.0);
        }
        Self::from_parts(dim, entries)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Entry at 0-based `(row, col)`.
    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.entries[row * self.dim + col]
    }

    /// Matrix element `<Φ_l|H|Φ_k>` in 1-based basis numbering.
    pub fn element(&self, l: usize, k: usize) -> Complex64 {
        self.get(l - 1, k - 1)
    }

    pub fn entries(&self) -> &[Complex64] {
        &self.entries
    }

    pub fn into_entries(self) -> Vec<Complex64> {
        self.entries
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.dim).map(|k| self.get(k, k).re).collect()
    }

    pub fn nonzero_count(&self) -> usize {
        self.rows.vals.len()
    }

    /// Nonzero entries of row `r` as `(col, value)`.
    pub fn row_nonzeros(&self, r: usize) -> impl Iterator<Item = (usize, Complex64)> + '_ {
        let span = self.rows.row_start[r]..self.rows.row_start[r + 1];
        self.rows.cols[span.clone()]
            .iter()
            .copied()
            .zip(self.rows.vals[span].iter().copied())
    }

    /// Maximum absolute row sum, an upper bound on the spectral radius.
    pub fn norm_bound(&self) -> f64 {
        self.entries
            .chunks_exact(self.dim)
            .map(|row| row.iter().map(|z| z.norm()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    /// `H·v`.
    pub fn apply(&self, v: &[Complex64]) -> Result<Vec<Complex64>> {
        let mut out = vec![Complex64::new(0.0, 0.0); self.dim];
        self.apply_into(v, &mut out)?;
        Ok(out)
    }

    /// `out = H·v` without allocating.
    pub fn apply_into(&self, v: &[Complex64], out: &mut [Complex64]) -> Result<()> {
        for len in [v.len(), out.len()] {
            if len != self.dim {
                return Err(Error::Shape {
                    expected: self.dim,
                    got: len,
                });
            }
        }
        let RowIndex {
            row_start,
            cols,
            vals,
        } = &self.rows;
        for (r, o) in out.iter_mut().enumerate() {
            let mut acc = Complex64::new(0.0, 0.0);
            for p in row_start[r]..row_start[r + 1] {
                acc += vals[p] * v[cols[p]];
            }
            *o = acc;
        }
        Ok(())
    }

    /// `<v|H|v>`, real part.
    pub fn expectation(&self, v: &[Complex64]) -> Result<f64> {
        let hv = self.apply(v)?;
        Ok(v.iter().zip(&hv).map(|(a, b)| (a.conj() * b).re).sum())
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        check_hermitian(self, tol)
    }
}

/// True iff `max |H_nm - conj(H_mn)| <= tol`.
pub fn check_hermitian(h: &HamiltonianMatrix, tol: f64) -> bool {
    let d = h.dim;
    (0..d).all(|n| (n..d).all(|m| (h.get(n, m) - h.get(m, n).conj()).norm() <= tol))
}
