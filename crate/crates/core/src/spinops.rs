//! Spin-1 and spin-1/2 operator matrices and their embedding into
//! tensor-product Hilbert spaces.
//!
//! Every many-body index in this crate follows the same convention: site 0
//! is the slowest-varying digit (row-major tensor order). Local qutrit
//! states are ordered `(m = +1, 0, -1)` and local qubit states
//! `(+1/2, -1/2)`, so `Sz = diag(1, 0, -1)` and `Z = diag(1, -1)`.

use std::fmt;
use std::ops::{Add, Mul, Sub};

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest Hilbert-space dimension for which dense operators are built.
pub const DENSE_DIM_LIMIT: usize = 4096;

/// Largest Hilbert-space dimension a [`SiteBasis`] may describe.
pub const BASIS_DIM_LIMIT: usize = 1 << 24;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum LocalKind {
    /// Spin-1, local states `m = +1, 0, -1`.
    Qutrit,
    /// Spin-1/2, local states `+1/2, -1/2`.
    Qubit,
}

impl LocalKind {
    pub fn dim(self) -> usize {
        match self {
            LocalKind::Qutrit => 3,
            LocalKind::Qubit => 2,
        }
    }

    /// Eigenvalue of the local z operator on local state `index`: `m` for
    /// qutrits, the Pauli eigenvalue `±1` for qubits.
    pub fn z_value(self, index: usize) -> f64 {
        match (self, index) {
            (LocalKind::Qutrit, 0) => 1.0,
            (LocalKind::Qutrit, 1) => 0.0,
            (LocalKind::Qutrit, 2) => -1.0,
            (LocalKind::Qubit, 0) => 1.0,
            (LocalKind::Qubit, 1) => -1.0,
            _ => panic!("local index {index} out of range for {self:?}"),
        }
    }

    /// Local index of the classical spin value `s = ±1`.
    pub fn index_of_spin(self, s: i8) -> Option<usize> {
        match (self, s) {
            (_, 1) => Some(0),
            (LocalKind::Qutrit, -1) => Some(2),
            (LocalKind::Qubit, -1) => Some(1),
            _ => None,
        }
    }
}

/// Tensor-product basis of `sites` identical local systems.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SiteBasis {
    kind: LocalKind,
    sites: usize,
}

impl SiteBasis {
    pub fn new(kind: LocalKind, sites: usize) -> Result<Self> {
        if sites == 0 {
            return Err(Error::invalid("a basis needs at least one site"));
        }
        let mut dim = 1usize;
        for _ in 0..sites {
            dim = dim.saturating_mul(kind.dim());
        }
        if dim > BASIS_DIM_LIMIT {
            return Err(Error::Capacity {
                what: "basis dimension",
                requested: dim,
                limit: BASIS_DIM_LIMIT,
            });
        }
        Ok(SiteBasis { kind, sites })
    }

    pub fn qutrits(sites: usize) -> Result<Self> {
        Self::new(LocalKind::Qutrit, sites)
    }

    pub fn qubits(sites: usize) -> Result<Self> {
        Self::new(LocalKind::Qubit, sites)
    }

    pub fn kind(&self) -> LocalKind {
        self.kind
    }

    pub fn sites(&self) -> usize {
        self.sites
    }

    pub fn local_dim(&self) -> usize {
        self.kind.dim()
    }

    pub fn dim(&self) -> usize {
        self.local_dim().pow(self.sites as u32)
    }

    /// Distance in the flat index between consecutive local states of `site`.
    pub fn stride(&self, site: usize) -> usize {
        self.local_dim().pow((self.sites - 1 - site) as u32)
    }

    /// Local state of `site` within the flat basis index `index`.
    pub fn local_index(&self, index: usize, site: usize) -> usize {
        (index / self.stride(site)) % self.local_dim()
    }

    pub fn encode(&self, locals: &[usize]) -> Result<usize> {
        if locals.len() != self.sites {
            return Err(Error::invalid(format!(
                "configuration has {} sites, basis has {}",
                locals.len(),
                self.sites
            )));
        }
        let d = self.local_dim();
        locals.iter().try_fold(0usize, |acc, &l| {
            if l >= d {
                Err(Error::invalid(format!("local index {l} out of range 0..{d}")))
            } else {
                Ok(acc * d + l)
            }
        })
    }

    pub fn decode(&self, index: usize) -> Vec<usize> {
        let d = self.local_dim();
        let mut out = vec![0; self.sites];
        let mut rest = index;
        for slot in out.iter_mut().rev() {
            *slot = rest % d;
            rest /= d;
        }
        out
    }

    /// Flat index of the classical configuration `spins ∈ {±1}^n`.
    pub fn index_of_spins(&self, spins: &[i8]) -> Result<usize> {
        let locals = spins
            .iter()
            .map(|&s| {
                self.kind
                    .index_of_spin(s)
                    .ok_or_else(|| Error::invalid(format!("spin value {s} is not ±1")))
            })
            .collect::<Result<Vec<_>>>()?;
        self.encode(&locals)
    }
}

/// Dense complex operator on a finite Hilbert space.
#[derive(Clone, PartialEq)]
pub struct Operator(DMatrix<C64>);

impl fmt::Debug for Operator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Operator(dim = {}) {}", self.dim(), self.0)
    }
}

impl Operator {
    pub fn from_matrix(m: DMatrix<C64>) -> Self {
        assert_eq!(m.nrows(), m.ncols(), "operators are square");
        Operator(m)
    }

    pub fn from_real_rows(dim: usize, rows: &[f64]) -> Self {
        assert_eq!(rows.len(), dim * dim);
        Operator(DMatrix::from_row_iterator(
            dim,
            dim,
            rows.iter().map(|&x| C64::new(x, 0.0)),
        ))
    }

    pub fn from_real_diagonal(diag: &[f64]) -> Self {
        let n = diag.len();
        Operator(DMatrix::from_fn(n, n, |i, j| {
            if i == j {
                C64::new(diag[i], 0.0)
            } else {
                C64::new(0.0, 0.0)
            }
        }))
    }

    pub fn identity(dim: usize) -> Self {
        Operator(DMatrix::identity(dim, dim))
    }

    pub fn zeros(dim: usize) -> Self {
        Operator(DMatrix::zeros(dim, dim))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.0
    }

    pub fn into_matrix(self) -> DMatrix<C64> {
        self.0
    }

    pub fn get(&self, row: usize, col: usize) -> C64 {
        self.0[(row, col)]
    }

    /// `max |M - M†|` over all entries.
    pub fn hermiticity_error(&self) -> f64 {
        let n = self.dim();
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in i..n {
                worst = worst.max((self.0[(i, j)] - self.0[(j, i)].conj()).norm());
            }
        }
        worst
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermiticity_error() < tol
    }

    pub fn trace(&self) -> C64 {
        self.0.trace()
    }

    pub fn max_abs(&self) -> f64 {
        self.0.iter().fold(0.0f64, |m, z| m.max(z.norm()))
    }

    pub fn scaled(&self, c: f64) -> Operator {
        Operator(&self.0 * C64::new(c, 0.0))
    }

    pub fn adjoint(&self) -> Operator {
        Operator(self.0.adjoint())
    }

    pub fn kron(&self, other: &Operator) -> Operator {
        Operator(self.0.kronecker(&other.0))
    }

    pub fn commutator(&self, other: &Operator) -> Operator {
        Operator(&self.0 * &other.0 - &other.0 * &self.0)
    }

    pub fn apply(&self, psi: &[C64]) -> Vec<C64> {
        assert_eq!(psi.len(), self.dim());
        (0..self.dim())
            .map(|i| {
                self.0
                    .row(i)
                    .iter()
                    .zip(psi)
                    .fold(C64::new(0.0, 0.0), |acc, (a, b)| acc + a * b)
            })
            .collect()
    }

    /// `⟨a|M|b⟩`.
    pub fn matrix_element(&self, a: &[C64], b: &[C64]) -> C64 {
        self.apply(b)
            .iter()
            .zip(a)
            .fold(C64::new(0.0, 0.0), |acc, (mb, ai)| acc + ai.conj() * mb)
    }

    /// Eigen-decomposition of a Hermitian operator, eigenvalues ascending.
    /// Column `k` of the returned matrix is the eigenvector of eigenvalue `k`.
    pub fn hermitian_eigen(&self) -> (Vec<f64>, DMatrix<C64>) {
        let eig = SymmetricEigen::new(self.0.clone());
        let mut order: Vec<usize> = (0..self.dim()).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
        let vectors = DMatrix::from_fn(self.dim(), self.dim(), |i, j| eig.eigenvectors[(i, order[j])]);
        (values, vectors)
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        self.hermitian_eigen().0
    }
}

impl Add for &Operator {
    type Output = Operator;
    fn add(self, rhs: &Operator) -> Operator {
        Operator(&self.0 + &rhs.0)
    }
}

impl Sub for &Operator {
    type Output = Operator;
    fn sub(self, rhs: &Operator) -> Operator {
        Operator(&self.0 - &rhs.0)
    }
}

impl Mul for &Operator {
    type Output = Operator;
    fn mul(self, rhs: &Operator) -> Operator {
        Operator(&self.0 * &rhs.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Spin1 {
    Sz,
    Sx,
    Sz2,
    Sx2,
}

/// Spin-1 matrices in the `|+1⟩, |0⟩, |−1⟩` ordering.
pub fn spin1_operator(which: Spin1) -> Operator {
    let r = std::f64::consts::FRAC_1_SQRT_2;
    match which {
        Spin1::Sz => Operator::from_real_diagonal(&[1.0, 0.0, -1.0]),
        Spin1::Sx => Operator::from_real_rows(3, &[0.0, r, 0.0, r, 0.0, r, 0.0, r, 0.0]),
        Spin1::Sz2 => Operator::from_real_diagonal(&[1.0, 0.0, 1.0]),
        Spin1::Sx2 => Operator::from_real_rows(3, &[0.5, 0.0, 0.5, 0.0, 1.0, 0.0, 0.5, 0.0, 0.5]),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Pauli {
    X,
    Z,
}

/// Pauli matrices in the `|+1/2⟩, |−1/2⟩` ordering.
pub fn pauli_operator(which: Pauli) -> Operator {
    match which {
        Pauli::X => Operator::from_real_rows(2, &[0.0, 1.0, 1.0, 0.0]),
        Pauli::Z => Operator::from_real_diagonal(&[1.0, -1.0]),
    }
}

fn check_dense(basis: &SiteBasis) -> Result<()> {
    if basis.dim() > DENSE_DIM_LIMIT {
        return Err(Error::Capacity {
            what: "dense operator dimension",
            requested: basis.dim(),
            limit: DENSE_DIM_LIMIT,
        });
    }
    Ok(())
}

fn check_local(local: &Operator, site: usize, basis: &SiteBasis) -> Result<()> {
    if site >= basis.sites() {
        return Err(Error::invalid(format!(
            "site {site} out of range for {} sites",
            basis.sites()
        )));
    }
    if local.dim() != basis.local_dim() {
        return Err(Error::invalid(format!(
            "local operator has dimension {}, basis expects {}",
            local.dim(),
            basis.local_dim()
        )));
    }
    Ok(())
}

/// Embed `local` at `site`, identity elsewhere.
pub fn lift(local: &Operator, site: usize, basis: &SiteBasis) -> Result<Operator> {
    check_local(local, site, basis)?;
    check_dense(basis)?;
    let d = basis.local_dim();
    let left = Operator::identity(d.pow(site as u32));
    let right = Operator::identity(basis.stride(site));
    Ok(left.kron(local).kron(&right))
}

/// Tensor product of `a` at `site_a` and `b` at `site_b`, identity elsewhere.
pub fn two_site(
    a: &Operator,
    site_a: usize,
    b: &Operator,
    site_b: usize,
    basis: &SiteBasis,
) -> Result<Operator> {
    if site_a == site_b {
        return Err(Error::invalid(format!(
            "two_site needs distinct sites, got {site_a} twice"
        )));
    }
    check_local(a, site_a, basis)?;
    check_local(b, site_b, basis)?;
    check_dense(basis)?;
    let d = basis.local_dim();
    let mut out = Operator::identity(1);
    for site in 0..basis.sites() {
        let factor = if site == site_a {
            a.clone()
        } else if site == site_b {
            b.clone()
        } else {
            Operator::identity(d)
        };
        out = out.kron(&factor);
    }
    Ok(out)
}


#[cfg(test)]
mod tests {
    use super::test_support::*;
    use super::*;
    use proptest::prelude::*;

    fn close(a: &Operator, b: &Operator) -> f64 {
        (a - b).max_abs()
    }

    #[test]
    fn spin1_matrices_match_reference() {
        let sz = spin1_operator(Spin1::Sz);
        assert_eq!(sz.get(0, 0).re, 1.0);
        assert_eq!(sz.get(1, 1).re, 0.0);
        assert_eq!(sz.get(2, 2).re, -1.0);
        let sx2 = spin1_operator(Spin1::Sx2);
        let expected = Operator::from_real_rows(3, &[0.5, 0.0, 0.5, 0.0, 1.0, 0.0, 0.5, 0.0, 0.5]);
        assert!(close(&sx2, &expected) < 1e-15);
        let sx = spin1_operator(Spin1::Sx);
        assert!(close(&(&sx * &sx), &sx2) < 1e-15);
        assert_eq!(spin1_operator(Spin1::Sz2), &sz * &sz);
    }

    #[test]
    fn squares_are_not_identity() {
        let sz2 = spin1_operator(Spin1::Sz2);
        assert!(close(&sz2, &Operator::identity(3)) > 0.5);
    }

    #[test]
    fn pauli_basics() {
        let x = pauli_operator(Pauli::X);
        let z = pauli_operator(Pauli::Z);
        assert_eq!(z, Operator::from_real_diagonal(&[1.0, -1.0]));
        assert_eq!(&x * &x, Operator::identity(2));
    }

    #[test]
    fn spin1_commutator() {
        let sx = spin1_operator(Spin1::Sx);
        let sy = spin1_sy();
        let sz = spin1_operator(Spin1::Sz);
        let lhs = sx.commutator(&sy);
        let rhs = Operator::from_matrix(sz.matrix() * C64::new(0.0, 1.0));
        assert!(close(&lhs, &rhs) < 1e-14);
        // S² = S(S+1) = 2
        let s2 = &(&(&sx * &sx) + &(&sy * &sy)) + &(&sz * &sz);
        assert!(close(&s2, &Operator::identity(3).scaled(2.0)) < 1e-14);
    }

    #[test]
    fn all_operators_hermitian() {
        for w in [Spin1::Sz, Spin1::Sx, Spin1::Sz2, Spin1::Sx2] {
            assert!(spin1_operator(w).is_hermitian(1e-12));
        }
        for w in [Pauli::X, Pauli::Z] {
            assert!(pauli_operator(w).is_hermitian(1e-12));
        }
        let basis = SiteBasis::qutrits(3).unwrap();
        let op = two_site(&spin1_operator(Spin1::Sx), 0, &spin1_operator(Spin1::Sz), 2, &basis)
            .unwrap();
        assert!(op.is_hermitian(1e-12));
    }

    #[test]
    fn lift_acts_on_the_right_site() {
        let basis = SiteBasis::qutrits(2).unwrap();
        let op = lift(&spin1_operator(Spin1::Sz), 0, &basis).unwrap();
        // |m0 = +1, m1 = 0⟩
        let k = basis.encode(&[0, 1]).unwrap();
        let v = op.apply(&basis_vector(9, k));
        assert!((v[k].re - 1.0).abs() < 1e-15);
        assert_eq!(op.dim(), 9);
    }

    #[test]
    fn lift_identity_and_trace() {
        for n in 1..=4 {
            let basis = SiteBasis::qutrits(n).unwrap();
            for i in 0..n {
                let id = lift(&Operator::identity(3), i, &basis).unwrap();
                assert_eq!(id, Operator::identity(basis.dim()));
                let sz = lift(&spin1_operator(Spin1::Sz), i, &basis).unwrap();
                assert!(sz.trace().norm() < 1e-14);
            }
        }
    }

    #[test]
    fn lift_rejects_bad_input() {
        let basis = SiteBasis::qutrits(2).unwrap();
        assert!(matches!(
            lift(&pauli_operator(Pauli::Z), 0, &basis),
            Err(Error::InvalidArgument(_))
        ));
        assert!(lift(&spin1_operator(Spin1::Sz), 2, &basis).is_err());
        let sz = spin1_operator(Spin1::Sz);
        assert!(matches!(
            two_site(&sz, 1, &sz, 1, &basis),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn two_site_examples() {
        let basis = SiteBasis::qutrits(2).unwrap();
        let sz = spin1_operator(Spin1::Sz);
        let op = two_site(&sz, 0, &sz, 1, &basis).unwrap();
        let k = basis.encode(&[0, 2]).unwrap();
        assert!((op.apply(&basis_vector(9, k))[k].re + 1.0).abs() < 1e-15);
        assert_eq!(op, two_site(&sz, 1, &sz, 0, &basis).unwrap());

        let qb = SiteBasis::qubits(2).unwrap();
        let z = pauli_operator(Pauli::Z);
        let zz = two_site(&z, 0, &z, 1, &qb).unwrap();
        assert_eq!(zz, Operator::from_real_diagonal(&[1.0, -1.0, -1.0, 1.0]));
    }

    #[test]
    fn lifted_operators_on_distinct_sites_commute() {
        let basis = SiteBasis::qutrits(3).unwrap();
        let sx = spin1_operator(Spin1::Sx);
        let sz = spin1_operator(Spin1::Sz);
        for i in 0..3 {
            for j in 0..3 {
                if i == j {
                    continue;
                }
                let a = lift(&sx, i, &basis).unwrap();
                let b = lift(&sz, j, &basis).unwrap();
                assert_eq!(a.commutator(&b).max_abs(), 0.0);
            }
        }
    }

    #[test]
    fn lift_preserves_spectrum() {
        let basis = SiteBasis::qutrits(2).unwrap();
        let local = spin1_operator(Spin1::Sx);
        let lifted = lift(&local, 1, &basis).unwrap();
        let mut distinct: Vec<f64> = Vec::new();
        for e in lifted.eigenvalues() {
            if distinct.iter().all(|d| (d - e).abs() > 1e-9) {
                distinct.push(e);
            }
        }
        let local_eigs = local.eigenvalues();
        assert_eq!(distinct.len(), local_eigs.len());
        for (a, b) in distinct.iter().zip(&local_eigs) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn dense_capacity_enforced() {
        let basis = SiteBasis::qutrits(8).unwrap();
        assert!(matches!(
            lift(&spin1_operator(Spin1::Sz), 0, &basis),
            Err(Error::Capacity { .. })
        ));
    }

    proptest! {
        #[test]
        fn encode_decode_round_trip(qutrit in any::<bool>(), sites in 1usize..7, seed in any::<u64>()) {
            let kind = if qutrit { LocalKind::Qutrit } else { LocalKind::Qubit };
            let basis = SiteBasis::new(kind, sites).unwrap();
            let index = (seed as usize) % basis.dim();
            let locals = basis.decode(index);
            prop_assert_eq!(basis.encode(&locals).unwrap(), index);
            for (site, &l) in locals.iter().enumerate() {
                prop_assert_eq!(basis.local_index(index, site), l);
            }
        }
    }
}
