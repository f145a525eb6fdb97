//! Each qutrit realized as the spin-1 (triplet) sector of two qubits,
//! `S = (σ₁ + σ₂)/2`.
//!
//! Logical site `i` lives on physical qubits `2i` and `2i + 1`, so the
//! physical basis index reads as base-4 digits `2·l₁ + l₂` per logical
//! site, ordered `(↑↑, ↑↓, ↓↑, ↓↓)`. The triplet basis is
//!
//! ```text
//! |+1⟩ = |↑↑⟩,   |0⟩ = (|↑↓⟩ + |↓↑⟩)/√2,   |−1⟩ = |↓↓⟩
//! ```
//!
//! with every overlap real and positive. Since `(Sᶻ)² = (σᶻσᶻ + 1)/2`
//! exactly, keeping the `+1` makes the triplet block of the nested
//! Hamiltonian equal to the qutrit Hamiltonian with no offset.

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use std::f64::consts::FRAC_1_SQRT_2;

use crate::error::{Error, Result};
use crate::evolve::StateVector;
use crate::hamiltonians::{
    problem_diagonal, Coefficient, DriverPart, Term, TimeDependentHamiltonian,
};
use crate::instances::{Bond, ProblemInstance};
use crate::schedules::BqaSchedule;
use crate::spinops::{pauli_operator, LocalKind, Operator, Pauli, SiteBasis, DENSE_DIM_LIMIT};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CouplingKind {
    /// `σᶻσᶻ` inside one logical qutrit, weight `1/2` on `−B(t)`.
    Intra,
    /// One of the four bonds replacing a logical `J_ij`.
    Inter,
}

/// A two-qubit `σᶻσᶻ` term of the nested Hamiltonian.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NestedCoupling {
    pub a: usize,
    pub b: usize,
    pub strength: f64,
    pub kind: CouplingKind,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct NestedMapping {
    logical: SiteBasis,
    physical: SiteBasis,
}

impl NestedMapping {
    pub fn new(logical_count: usize) -> Result<Self> {
        if logical_count == 0 {
            return Err(Error::invalid("nested mapping needs at least one qutrit"));
        }
        Ok(NestedMapping {
            logical: SiteBasis::qutrits(logical_count)?,
            physical: SiteBasis::qubits(2 * logical_count)?,
        })
    }

    pub fn logical_count(&self) -> usize {
        self.logical.sites()
    }

    pub fn logical_basis(&self) -> &SiteBasis {
        &self.logical
    }

    pub fn physical_basis(&self) -> &SiteBasis {
        &self.physical
    }

    /// Physical qubits carrying logical site `i`.
    pub fn qubits_of(&self, i: usize) -> (usize, usize) {
        (2 * i, 2 * i + 1)
    }

    /// All `σᶻσᶻ` terms: one intra-pair term per qutrit, then four bonds of
    /// strength `J/4` per logical bond.
    pub fn couplings(&self, instance: &ProblemInstance) -> Result<Vec<NestedCoupling>> {
        self.check_instance(instance)?;
        let mut out: Vec<NestedCoupling> = (0..self.logical_count())
            .map(|i| {
                let (a, b) = self.qubits_of(i);
                NestedCoupling {
                    a,
                    b,
                    strength: 0.5,
                    kind: CouplingKind::Intra,
                }
            })
            .collect();
        for bond in instance.bonds() {
            let (i1, i2) = self.qubits_of(bond.i);
            let (j1, j2) = self.qubits_of(bond.j);
            for a in [i1, i2] {
                for b in [j1, j2] {
                    out.push(NestedCoupling {
                        a,
                        b,
                        strength: bond.strength / 4.0,
                        kind: CouplingKind::Inter,
                    });
                }
            }
        }
        Ok(out)
    }

    /// The physical Ising problem: inter-qutrit bonds `J/4`, fields `h/2`.
    pub fn physical_instance(&self, instance: &ProblemInstance) -> Result<ProblemInstance> {
        let bonds = self
            .couplings(instance)?
            .into_iter()
            .filter(|c| c.kind == CouplingKind::Inter)
            .map(|c| Bond {
                i: c.a,
                j: c.b,
                strength: c.strength,
            })
            .collect();
        let fields = instance.fields().iter().flat_map(|&h| [h / 2.0, h / 2.0]).collect();
        ProblemInstance::new(self.physical.sites(), bonds, fields)
    }

    fn check_instance(&self, instance: &ProblemInstance) -> Result<()> {
        if instance.n() != self.logical_count() {
            return Err(Error::invalid(format!(
                "instance has {} spins, mapping has {} qutrits",
                instance.n(),
                self.logical_count()
            )));
        }
        Ok(())
    }

    /// Physical components of the qutrit basis state `index`.
    fn expansion(&self, index: usize) -> Vec<(usize, f64)> {
        let mut terms = vec![(0usize, 1.0f64)];
        for l in self.logical.decode(index) {
            let pairs: &[(usize, f64)] = match l {
                0 => &[(0, 1.0)],
                1 => &[(1, FRAC_1_SQRT_2), (2, FRAC_1_SQRT_2)],
                _ => &[(3, 1.0)],
            };
            terms = terms
                .iter()
                .flat_map(|&(idx, amp)| pairs.iter().map(move |&(p, w)| (4 * idx + p, amp * w)))
                .collect();
        }
        terms
    }

    /// `V ψ`: qutrit state into the triplet sector.
    pub fn embed_qutrit(&self, psi: &StateVector) -> Result<StateVector> {
        if psi.basis() != &self.logical {
            return Err(Error::invalid("state is not on the logical qutrit basis"));
        }
        let mut out = vec![C64::new(0.0, 0.0); self.physical.dim()];
        for (q, &a) in psi.amplitudes().iter().enumerate() {
            if a.norm_sqr() == 0.0 {
                continue;
            }
            for (p, w) in self.expansion(q) {
                out[p] += a * w;
            }
        }
        StateVector::from_raw(self.physical, out)
    }

    /// `V† ψ` and the leakage `‖ψ‖² − ‖V†ψ‖²` out of the triplet sector.
    pub fn project_to_qutrit(&self, psi: &StateVector) -> Result<(StateVector, f64)> {
        if psi.basis() != &self.physical {
            return Err(Error::invalid("state is not on the physical qubit basis"));
        }
        let (amps, leakage) = self.project_amplitudes(psi.amplitudes());
        Ok((StateVector::from_raw(self.logical, amps)?, leakage))
    }

    /// Same as [`Self::project_to_qutrit`] on a raw amplitude slice.
    pub fn project_amplitudes(&self, amps: &[C64]) -> (Vec<C64>, f64) {
        let out: Vec<C64> = (0..self.logical.dim())
            .map(|q| self.expansion(q).into_iter().map(|(p, w)| amps[p] * w).sum())
            .collect();
        let total: f64 = amps.iter().map(|a| a.norm_sqr()).sum();
        let kept: f64 = out.iter().map(|a| a.norm_sqr()).sum();
        (out, (total - kept).max(0.0))
    }

    /// The isometry `V` (`4^N × 3^N`).
    pub fn isometry(&self) -> Result<DMatrix<C64>> {
        self.check_dense()?;
        let mut v = DMatrix::zeros(self.physical.dim(), self.logical.dim());
        for q in 0..self.logical.dim() {
            for (p, w) in self.expansion(q) {
                v[(p, q)] = C64::new(w, 0.0);
            }
        }
        Ok(v)
    }

    /// `P = V V†`, the projector onto the triplet sector of every pair.
    pub fn triplet_projector(&self) -> Result<Operator> {
        let v = self.isometry()?;
        Ok(Operator::from_matrix(&v * v.adjoint()))
    }

    /// Total spin `S²` of the pair carrying logical site `i`. Uses
    /// `σ₁·σ₂ = 2 SWAP − 1`, so `S² = 1 + SWAP`.
    pub fn pair_spin_squared(&self, i: usize) -> Result<Operator> {
        if i >= self.logical_count() {
            return Err(Error::invalid(format!("logical site {i} out of range")));
        }
        self.check_dense()?;
        let (a, b) = self.qubits_of(i);
        let dim = self.physical.dim();
        let mut m = DMatrix::<C64>::identity(dim, dim);
        for idx in 0..dim {
            let mut locals = self.physical.decode(idx);
            locals.swap(a, b);
            let j = self.physical.encode(&locals)?;
            m[(j, idx)] += C64::new(1.0, 0.0);
        }
        Ok(Operator::from_matrix(m))
    }

    fn check_dense(&self) -> Result<()> {
        if self.physical.dim() > DENSE_DIM_LIMIT {
            return Err(Error::Capacity {
                what: "dense operator dimension",
                requested: self.physical.dim(),
                limit: DENSE_DIM_LIMIT,
            });
        }
        Ok(())
    }
}

/// The bifurcation Hamiltonian on `2N` qubits:
///
/// ```text
/// H(t) = Σ_i [−(A/2)(σˣ_{i1} + σˣ_{i2}) − (B/2)(σᶻ_{i1}σᶻ_{i2} + 1)]
///        − Σ_{ij} (J_ij/4) Σ_{ab} σᶻ_{ia}σᶻ_{jb} − Σ_i (h_i/2)(σᶻ_{i1} + σᶻ_{i2})
/// ```
pub fn nest_hamiltonian(
    instance: &ProblemInstance,
    schedule: &BqaSchedule,
) -> Result<TimeDependentHamiltonian> {
    let mapping = NestedMapping::new(instance.n())?;
    let basis = *mapping.physical_basis();
    let physical = mapping.physical_instance(instance)?;

    let mut bif = vec![0.0; basis.dim()];
    for c in mapping.couplings(instance)? {
        if c.kind != CouplingKind::Intra {
            continue;
        }
        for (idx, v) in bif.iter_mut().enumerate() {
            let za = LocalKind::Qubit.z_value(basis.local_index(idx, c.a));
            let zb = LocalKind::Qubit.z_value(basis.local_index(idx, c.b));
            *v -= c.strength * (za * zb + 1.0);
        }
    }

    let parts = vec![
        DriverPart {
            term: Term::LocalSum {
                local: pauli_operator(Pauli::X).scaled(-0.5),
                sites: (0..basis.sites()).collect(),
            },
            coefficient: Coefficient::Driver(*schedule),
        },
        DriverPart {
            term: Term::Diagonal(bif),
            coefficient: Coefficient::Bifurcation(*schedule),
        },
    ];
    Ok(TimeDependentHamiltonian::new(
        basis,
        Term::Diagonal(problem_diagonal(&physical, &basis)?),
        parts,
        schedule.t_final(),
    ))
}

/// `⊗_i (|↑↓⟩ + |↓↑⟩)/√2`, the image of `|0,…,0⟩`.
pub fn nested_initial_state(n: usize) -> Result<StateVector> {
    let mapping = NestedMapping::new(n)?;
    mapping.embed_qutrit(&StateVector::zero_qutrits(n)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evolve::{evolve, EvolveOptions};
    use crate::hamiltonians::bqa_hamiltonian;
    use crate::spinops::test_support::pauli_y;
    use crate::spinops::{spin1_operator, two_site, Spin1};

    fn sample_instance() -> ProblemInstance {
        ProblemInstance::new(
            2,
            vec![Bond {
                i: 0,
                j: 1,
                strength: 0.8,
            }],
            vec![0.3, -0.45],
        )
        .unwrap()
    }

    #[test]
    fn single_pair_initial_state() {
        let psi = nested_initial_state(1).unwrap();
        let s = FRAC_1_SQRT_2;
        let want = [0.0, s, s, 0.0];
        for (a, w) in psi.amplitudes().iter().zip(want) {
            assert!((a - C64::new(w, 0.0)).norm() < 1e-15);
        }
        assert!((psi.norm() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn initial_state_projects_to_all_zero() {
        let m = NestedMapping::new(3).unwrap();
        let (q, leak) = m.project_to_qutrit(&nested_initial_state(3).unwrap()).unwrap();
        assert!(leak < 1e-15);
        assert!((q.inner(&StateVector::zero_qutrits(3).unwrap()).norm() - 1.0).abs() < 1e-14);
        let p = m.triplet_projector().unwrap();
        let psi = nested_initial_state(3).unwrap();
        let moved = p.apply(psi.amplitudes());
        let d: f64 = moved.iter().zip(psi.amplitudes()).map(|(a, b)| (a - b).norm()).sum();
        assert!(d < 1e-13);
    }

    #[test]
    fn projector_is_idempotent_with_rank_three_to_the_n() {
        for n in 1..=3 {
            let p = NestedMapping::new(n).unwrap().triplet_projector().unwrap();
            let p2 = &p * &p;
            assert!((&p2 - &p).max_abs() < 1e-14);
            assert!(p.hermiticity_error() < 1e-15);
            assert!((p.trace().re - 3f64.powi(n as i32)).abs() < 1e-12);
        }
    }

    #[test]
    fn singlet_leaks() {
        let m = NestedMapping::new(1).unwrap();
        let s = FRAC_1_SQRT_2;
        let singlet = StateVector::new(
            *m.physical_basis(),
            vec![0.0, s, -s, 0.0].into_iter().map(|x| C64::new(x, 0.0)).collect(),
        )
        .unwrap();
        let (_, leak) = m.project_to_qutrit(&singlet).unwrap();
        assert!((leak - 1.0).abs() < 1e-15);
    }

    #[test]
    fn bond_count_matches_four_per_logical_bond() {
        let m = NestedMapping::new(2).unwrap();
        let c = m.couplings(&sample_instance()).unwrap();
        assert_eq!(c.len(), 6);
        assert_eq!(c.iter().filter(|c| c.kind == CouplingKind::Intra).count(), 2);
        assert!(c
            .iter()
            .filter(|c| c.kind == CouplingKind::Inter)
            .all(|c| (c.strength - 0.2).abs() < 1e-15));
    }

    #[test]
    fn pair_spin_squared_has_triplet_and_singlet_values() {
        let m = NestedMapping::new(1).unwrap();
        let s2 = m.pair_spin_squared(0).unwrap();
        let ev = s2.eigenvalues();
        let want = [0.0, 2.0, 2.0, 2.0];
        for (a, b) in ev.iter().zip(want) {
            assert!((a - b).abs() < 1e-12);
        }
        // Σ_k ((σ₁ᵏ + σ₂ᵏ)/2)² from the Pauli matrices directly.
        let id = Operator::identity(2);
        let mut direct = Operator::zeros(4);
        for p in [pauli_operator(Pauli::X), pauli_y(), pauli_operator(Pauli::Z)] {
            let s = (&p.kron(&id) + &id.kron(&p)).scaled(0.5);
            direct = &direct + &(&s * &s);
        }
        assert!((&direct - &s2).max_abs() < 1e-14);
    }

    #[test]
    fn pair_spin_is_conserved() {
        let inst = sample_instance();
        let sched = BqaSchedule::gaussian(1.3, 9.0, 10.0).unwrap();
        let h = nest_hamiltonian(&inst, &sched).unwrap();
        let m = NestedMapping::new(2).unwrap();
        for t in [0.0, 2.5, 5.0, 9.9] {
            let ht = h.evaluate(t).unwrap();
            for i in 0..2 {
                let s2 = m.pair_spin_squared(i).unwrap();
                assert!(ht.commutator(&s2).max_abs() < 1e-12);
            }
        }
    }

    #[test]
    fn triplet_block_equals_qutrit_hamiltonian() {
        // Oracle: spin-1 matrices built independently, H_qutrit = V† H_nested V.
        let inst = sample_instance();
        let sched = BqaSchedule::gaussian(1.3, 9.0, 10.0).unwrap();
        let nested = nest_hamiltonian(&inst, &sched).unwrap();
        let m = NestedMapping::new(2).unwrap();
        let v = m.isometry().unwrap();
        let qb = SiteBasis::qutrits(2).unwrap();
        let sx = spin1_operator(Spin1::Sx);
        let sz = spin1_operator(Spin1::Sz);
        let sz2 = spin1_operator(Spin1::Sz2);
        let id = Operator::identity(3);
        for t in [0.0, 3.0, 5.0, 8.0, 10.0] {
            let (a, b) = sched.coefficients(t).unwrap();
            let mut want = two_site(&sz, 0, &sz, 1, &qb).unwrap().scaled(-0.8);
            want = &want + &sz.kron(&id).scaled(-0.3);
            want = &want + &id.kron(&sz).scaled(0.45);
            for op in [sx.kron(&id), id.kron(&sx)] {
                want = &want + &op.scaled(-a);
            }
            for op in [sz2.kron(&id), id.kron(&sz2)] {
                want = &want + &op.scaled(-b);
            }
            let got = v.adjoint() * nested.evaluate(t).unwrap().matrix() * &v;
            let diff = Operator::from_matrix(got - want.matrix()).max_abs();
            assert!(diff < 1e-12, "t = {t}: {diff}");
        }
    }

    #[test]
    fn nested_and_qutrit_dynamics_agree() {
        let inst = ProblemInstance::random_fully_connected(2, 1.0, 5).unwrap();
        let sched = BqaSchedule::gaussian(2.0, 20.0, 40.0).unwrap();
        let opts = EvolveOptions {
            sample_count: 20,
            ..Default::default()
        };
        let q = evolve(
            &bqa_hamiltonian(&inst, &sched).unwrap(),
            &StateVector::zero_qutrits(2).unwrap(),
            40.0,
            &opts,
        )
        .unwrap();
        let n = evolve(
            &nest_hamiltonian(&inst, &sched).unwrap(),
            &nested_initial_state(2).unwrap(),
            40.0,
            &opts,
        )
        .unwrap();
        let m = NestedMapping::new(2).unwrap();
        for (sq, sn) in q.samples.iter().zip(&n.samples) {
            let (proj, leak) = m.project_amplitudes(&sn.amplitudes);
            assert!(leak < 1e-9);
            for (a, b) in proj.iter().zip(&sq.amplitudes) {
                assert!((a - b).norm() < 1e-6);
            }
        }
    }

    #[test]
    fn mismatched_inputs_are_rejected() {
        let m = NestedMapping::new(2).unwrap();
        assert!(m.couplings(&ProblemInstance::ferromagnetic_ring(3, 1.0, 0.0).unwrap()).is_err());
        assert!(m.project_to_qutrit(&StateVector::zero_qutrits(2).unwrap()).is_err());
        assert!(NestedMapping::new(0).is_err());
        assert!(matches!(NestedMapping::new(7).unwrap().triplet_projector(), Err(Error::Capacity { .. })));
    }
}
