//! Time-dependent Hamiltonians stored in factored form: a static part plus
//! a list of `(term, coefficient(t))` pairs.
//!
//! Terms keep their structure (diagonal, sum of identical one-site
//! operators, or dense) so that `H(t)ψ` can be applied without forming
//! the full matrix; [`TimeDependentHamiltonian::evaluate`] assembles the
//! dense matrix when it is actually needed.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instances::ProblemInstance;
use crate::schedules::{BqaSchedule, QaSchedule};
use crate::spinops::{
    lift, pauli_operator, spin1_operator, Operator, Pauli, SiteBasis, Spin1,
    DENSE_DIM_LIMIT,
};

/// One Hermitian piece of a Hamiltonian.
#[derive(Clone, Debug, PartialEq)]
pub enum Term {
    /// Real diagonal in the computational basis.
    Diagonal(Vec<f64>),
    /// `Σ_{s in sites} lift(local, s)`.
    LocalSum { local: Operator, sites: Vec<usize> },
    Dense(Operator),
}

impl Term {
    pub fn to_operator(&self, basis: &SiteBasis) -> Result<Operator> {
        if basis.dim() > DENSE_DIM_LIMIT {
            return Err(Error::Capacity {
                what: "dense operator dimension",
                requested: basis.dim(),
                limit: DENSE_DIM_LIMIT,
            });
        }
        Ok(match self {
            Term::Diagonal(d) => Operator::from_real_diagonal(d),
            Term::LocalSum { local, sites } => {
                let mut acc = Operator::zeros(basis.dim());
                for &s in sites {
                    acc = &acc + &lift(local, s, basis)?;
                }
                acc
            }
            Term::Dense(op) => op.clone(),
        })
    }

    /// `tr(T) / dim`.
    pub fn mean_diagonal(&self, basis: &SiteBasis) -> f64 {
        match self {
            Term::Diagonal(d) => d.iter().sum::<f64>() / d.len().max(1) as f64,
            Term::LocalSum { local, sites } => {
                local.trace().re / basis.local_dim() as f64 * sites.len() as f64
            }
            Term::Dense(op) => op.trace().re / op.dim().max(1) as f64,
        }
    }

    /// `out += scale · T · psi`.
    pub fn apply_add(&self, basis: &SiteBasis, scale: f64, psi: &[C64], out: &mut [C64]) {
        match self {
            Term::Diagonal(d) => {
                for ((o, p), x) in out.iter_mut().zip(psi).zip(d) {
                    *o += p * (scale * x);
                }
            }
            Term::LocalSum { local, sites } => {
                let d = basis.local_dim();
                let entries: Vec<(usize, usize, C64)> = (0..d)
                    .flat_map(|r| (0..d).map(move |k| (r, k)))
                    .map(|(r, k)| (r, k, local.get(r, k) * scale))
                    .filter(|(_, _, v)| v.norm() != 0.0)
                    .collect();
                let dim = basis.dim();
                for &site in sites {
                    let stride = basis.stride(site);
                    let block = stride * d;
                    for outer in (0..dim).step_by(block) {
                        for base in outer..outer + stride {
                            for &(r, k, v) in &entries {
                                out[base + r * stride] += v * psi[base + k * stride];
                            }
                        }
                    }
                }
            }
            Term::Dense(op) => {
                let m = op.matrix();
                for (i, o) in out.iter_mut().enumerate() {
                    let mut acc = C64::new(0.0, 0.0);
                    for (j, p) in psi.iter().enumerate() {
                        acc += m[(i, j)] * p;
                    }
                    *o += acc * scale;
                }
            }
        }
    }
}

/// Scalar time dependence of a driver part.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum Coefficient {
    /// Constant `1`.
    Unit,
    /// `A(t)` of a bifurcation schedule.
    Driver(BqaSchedule),
    /// `B(t)` of a bifurcation schedule.
    Bifurcation(BqaSchedule),
    /// `1 − t/t_f`.
    TransverseWeight(QaSchedule),
    /// `t/t_f`.
    ProblemWeight(QaSchedule),
}

impl Coefficient {
    /// Unchecked: integrator sub-steps may land an ulp outside `[0, t_f]`.
    pub fn value(&self, t: f64) -> f64 {
        match self {
            Coefficient::Unit => 1.0,
            Coefficient::Driver(s) => s.a(t),
            Coefficient::Bifurcation(s) => s.b(t),
            Coefficient::TransverseWeight(q) => q.driver_weight(t),
            Coefficient::ProblemWeight(q) => q.problem_weight(t),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DriverPart {
    pub term: Term,
    pub coefficient: Coefficient,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TimeDependentHamiltonian {
    basis: SiteBasis,
    static_part: Term,
    parts: Vec<DriverPart>,
    t_final: f64,
}

impl TimeDependentHamiltonian {
    pub fn new(basis: SiteBasis, static_part: Term, parts: Vec<DriverPart>, t_final: f64) -> Self {
        TimeDependentHamiltonian {
            basis,
            static_part,
            parts,
            t_final,
        }
    }

    pub fn basis(&self) -> &SiteBasis {
        &self.basis
    }

    pub fn dim(&self) -> usize {
        self.basis.dim()
    }

    pub fn t_final(&self) -> f64 {
        self.t_final
    }

    pub fn static_part(&self) -> &Term {
        &self.static_part
    }

    pub fn parts(&self) -> &[DriverPart] {
        &self.parts
    }

    /// `H + shift · I`.
    pub fn with_energy_shift(&self, shift: f64) -> Self {
        let mut out = self.clone();
        match &mut out.static_part {
            Term::Diagonal(d) => d.iter_mut().for_each(|x| *x += shift),
            _ => out.parts.push(DriverPart {
                term: Term::Diagonal(vec![shift; self.dim()]),
                coefficient: Coefficient::Unit,
            }),
        }
        out
    }

    fn check_time(&self, t: f64) -> Result<()> {
        if (0.0..=self.t_final).contains(&t) {
            Ok(())
        } else {
            Err(Error::invalid(format!("time {t} outside [0, {}]", self.t_final)))
        }
    }

    /// Dense `H(t)`.
    pub fn evaluate(&self, t: f64) -> Result<Operator> {
        self.check_time(t)?;
        let mut acc = self.static_part.to_operator(&self.basis)?;
        for part in &self.parts {
            let op = part.term.to_operator(&self.basis)?;
            acc = &acc + &op.scaled(part.coefficient.value(t));
        }
        Ok(acc)
    }

    /// `tr H(t) / dim`.
    pub fn mean_energy(&self, t: f64) -> f64 {
        self.static_part.mean_diagonal(&self.basis)
            + self
                .parts
                .iter()
                .map(|p| p.coefficient.value(t) * p.term.mean_diagonal(&self.basis))
                .sum::<f64>()
    }

    /// `out = H(t) psi` without forming `H(t)`.
    pub fn apply(&self, t: f64, psi: &[C64], out: &mut [C64]) {
        out.fill(C64::new(0.0, 0.0));
        self.static_part.apply_add(&self.basis, 1.0, psi, out);
        for part in &self.parts {
            let c = part.coefficient.value(t);
            if c != 0.0 {
                part.term.apply_add(&self.basis, c, psi, out);
            }
        }
    }
}

/// Diagonal of the problem Hamiltonian with `s_i` replaced by the local z
/// operator of `basis` (spin-1 `Sz` or Pauli `Z`).
pub fn problem_diagonal(instance: &ProblemInstance, basis: &SiteBasis) -> Result<Vec<f64>> {
    if basis.sites() != instance.n() {
        return Err(Error::invalid(format!(
            "basis has {} sites, instance has {} spins",
            basis.sites(),
            instance.n()
        )));
    }
    let kind = basis.kind();
    Ok((0..basis.dim())
        .map(|idx| {
            let z = |site: usize| kind.z_value(basis.local_index(idx, site));
            let coupling: f64 = instance
                .bonds()
                .iter()
                .map(|b| b.strength * z(b.i) * z(b.j))
                .sum();
            let field: f64 = instance
                .fields()
                .iter()
                .enumerate()
                .map(|(i, h)| h * z(i))
                .sum();
            -coupling - field
        })
        .collect())
}

pub fn problem_operator(instance: &ProblemInstance, basis: &SiteBasis) -> Result<Operator> {
    let diag = problem_diagonal(instance, basis)?;
    Term::Diagonal(diag).to_operator(basis)
}

fn local_diagonal_sum(basis: &SiteBasis, local: &[f64]) -> Vec<f64> {
    (0..basis.dim())
        .map(|idx| (0..basis.sites()).map(|s| local[basis.local_index(idx, s)]).sum())
        .collect()
}

/// `H(t) = Σ_i [−A(t) Sx_i − B(t) (Sz_i)²] + H_p`, problem part present from `t = 0`.
pub fn bqa_hamiltonian(
    instance: &ProblemInstance,
    schedule: &BqaSchedule,
) -> Result<TimeDependentHamiltonian> {
    bqa_hamiltonian_with_sx2(instance, schedule, 0.0)
}

/// Bifurcation Hamiltonian with an extra `−kappa A(t) Σ_i (Sx_i)²` driver,
/// which couples `|+1⟩` and `|−1⟩` directly. `kappa = 0` is the plain model.
pub fn bqa_hamiltonian_with_sx2(
    instance: &ProblemInstance,
    schedule: &BqaSchedule,
    kappa: f64,
) -> Result<TimeDependentHamiltonian> {
    let basis = SiteBasis::qutrits(instance.n())?;
    let sites: Vec<usize> = (0..instance.n()).collect();
    let mut parts = vec![
        DriverPart {
            term: Term::LocalSum {
                local: spin1_operator(Spin1::Sx).scaled(-1.0),
                sites: sites.clone(),
            },
            coefficient: Coefficient::Driver(*schedule),
        },
        DriverPart {
            term: Term::Diagonal(local_diagonal_sum(&basis, &[-1.0, 0.0, -1.0])),
            coefficient: Coefficient::Bifurcation(*schedule),
        },
    ];
    if kappa != 0.0 {
        parts.push(DriverPart {
            term: Term::LocalSum {
                local: spin1_operator(Spin1::Sx2).scaled(-kappa),
                sites,
            },
            coefficient: Coefficient::Driver(*schedule),
        });
    }
    Ok(TimeDependentHamiltonian::new(
        basis,
        Term::Diagonal(problem_diagonal(instance, &basis)?),
        parts,
        schedule.t_final(),
    ))
}

/// `H(t) = (1 − t/t_f)(−Γ Σ X_i) + (t/t_f) H_p` on qubits.
pub fn qa_hamiltonian(
    instance: &ProblemInstance,
    schedule: &QaSchedule,
) -> Result<TimeDependentHamiltonian> {
    let basis = SiteBasis::qubits(instance.n())?;
    let parts = vec![
        DriverPart {
            term: Term::LocalSum {
                local: pauli_operator(Pauli::X).scaled(-schedule.gamma()),
                sites: (0..instance.n()).collect(),
            },
            coefficient: Coefficient::TransverseWeight(*schedule),
        },
        DriverPart {
            term: Term::Diagonal(problem_diagonal(instance, &basis)?),
            coefficient: Coefficient::ProblemWeight(*schedule),
        },
    ];
    Ok(TimeDependentHamiltonian::new(
        basis,
        Term::Diagonal(vec![0.0; basis.dim()]),
        parts,
        schedule.t_final(),
    ))
}

/// `H(t) = −A(t) Sx − B(t) Sz² − h Sz` for one qutrit.
pub fn single_qutrit_field_hamiltonian(
    h: f64,
    schedule: &BqaSchedule,
) -> Result<TimeDependentHamiltonian> {
    let instance = ProblemInstance::new(1, vec![], vec![h])?;
    bqa_hamiltonian(&instance, schedule)
}

/// Global `m → −m` flip as a permutation matrix.
pub fn global_flip_operator(basis: &SiteBasis) -> Result<Operator> {
    let dim = basis.dim();
    if dim > DENSE_DIM_LIMIT {
        return Err(Error::Capacity {
            what: "dense operator dimension",
            requested: dim,
            limit: DENSE_DIM_LIMIT,
        });
    }
    let d = basis.local_dim();
    let mut m = nalgebra::DMatrix::zeros(dim, dim);
    for idx in 0..dim {
        let flipped: Vec<usize> = basis.decode(idx).iter().map(|l| d - 1 - l).collect();
        let j = basis.encode(&flipped).expect("flipped configuration is valid");
        m[(j, idx)] = C64::new(1.0, 0.0);
    }
    Ok(Operator::from_matrix(m))
}

/// Flip index used by the flip operator: `l → d − 1 − l` on every site.
pub fn flipped_index(basis: &SiteBasis, index: usize) -> usize {
    let d = basis.local_dim();
    let flipped: Vec<usize> = basis.decode(index).iter().map(|l| d - 1 - l).collect();
    basis.encode(&flipped).expect("valid")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instances::Bond;
    use crate::spinops::{two_site, LocalKind};

    fn max_diff(a: &Operator, b: &Operator) -> f64 {
        (a - b).max_abs()
    }

    #[test]
    fn problem_operator_single_qutrit() {
        let inst = ProblemInstance::new(1, vec![], vec![1.0]).unwrap();
        let op = problem_operator(&inst, &SiteBasis::qutrits(1).unwrap()).unwrap();
        assert_eq!(op, Operator::from_real_diagonal(&[-1.0, 0.0, 1.0]));
    }

    #[test]
    fn problem_diagonal_matches_classical_energy() {
        let inst = ProblemInstance::random_fully_connected(4, 1.0, 11).unwrap();
        for kind in [LocalKind::Qutrit, LocalKind::Qubit] {
            let basis = SiteBasis::new(kind, 4).unwrap();
            let diag = problem_diagonal(&inst, &basis).unwrap();
            for bits in 0..16u32 {
                let spins: Vec<i8> = (0..4).map(|i| if bits >> i & 1 == 0 { 1 } else { -1 }).collect();
                let idx = basis.index_of_spins(&spins).unwrap();
                assert!((diag[idx] - inst.classical_energy(&spins).unwrap()).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn problem_operator_matches_lifted_construction() {
        let inst = ProblemInstance::random_fully_connected(3, 1.0, 5).unwrap();
        let basis = SiteBasis::qutrits(3).unwrap();
        let sz = spin1_operator(Spin1::Sz);
        let mut expected = Operator::zeros(27);
        for b in inst.bonds() {
            expected = &expected - &two_site(&sz, b.i, &sz, b.j, &basis).unwrap().scaled(b.strength);
        }
        for (i, h) in inst.fields().iter().enumerate() {
            expected = &expected - &lift(&sz, i, &basis).unwrap().scaled(*h);
        }
        assert!(max_diff(&problem_operator(&inst, &basis).unwrap(), &expected) < 1e-14);
    }

    #[test]
    fn two_qutrit_ferro_minimum() {
        let inst = ProblemInstance::new(2, vec![Bond { i: 0, j: 1, strength: 1.0 }], vec![0.0; 2]).unwrap();
        let basis = SiteBasis::qutrits(2).unwrap();
        let d = problem_diagonal(&inst, &basis).unwrap();
        let min = d.iter().cloned().fold(f64::INFINITY, f64::min);
        assert_eq!(min, -1.0);
        let argmins: Vec<usize> = (0..9).filter(|&k| d[k] == min).collect();
        assert_eq!(argmins, vec![basis.encode(&[0, 0]).unwrap(), basis.encode(&[2, 2]).unwrap()]);
    }

    #[test]
    fn problem_operator_dimension_mismatch() {
        let inst = ProblemInstance::ferromagnetic_ring(3, 1.0, 0.0).unwrap();
        assert!(matches!(
            problem_operator(&inst, &SiteBasis::qutrits(2).unwrap()),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn single_qutrit_spot_checks() {
        let s = BqaSchedule::gaussian(1.0, 20.0, 10.0).unwrap();
        let h = single_qutrit_field_hamiltonian(0.0, &s).unwrap();
        let sx = spin1_operator(Spin1::Sx);
        let sz2 = spin1_operator(Spin1::Sz2);
        for t in [0.0, 5.0, 10.0] {
            let (a, b) = s.coefficients(t).unwrap();
            let expected = &sx.scaled(-a) - &sz2.scaled(b);
            assert!(max_diff(&h.evaluate(t).unwrap(), &expected) < 1e-15, "t = {t}");
        }
        assert!(h.evaluate(10.5).is_err());
    }

    #[test]
    fn field_hamiltonian_end_state() {
        let s = BqaSchedule::gaussian(1.0, 20.0, 10.0).unwrap();
        let h = single_qutrit_field_hamiltonian(0.3, &s).unwrap();
        let (vals, vecs) = h.evaluate(10.0).unwrap().hermitian_eigen();
        assert!(vecs[(0, 0)].norm() > 0.999);
        let a_end = s.coefficients(10.0).unwrap().0;
        assert!((vals[0] - (-20.0 - 0.3)).abs() < a_end * a_end);
        // h → −h leaves the spectrum unchanged
        let hm = single_qutrit_field_hamiltonian(-0.3, &s).unwrap();
        for t in [0.0, 3.3, 5.0, 10.0] {
            let e1 = h.evaluate(t).unwrap().eigenvalues();
            let e2 = hm.evaluate(t).unwrap().eigenvalues();
            for (x, y) in e1.iter().zip(&e2) {
                assert!((x - y).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn bqa_initial_ground_state_is_zero_state() {
        let inst = ProblemInstance::ferromagnetic_ring(3, 1.0, 0.1).unwrap();
        let s = BqaSchedule::gaussian(2.0, 20.0, 100.0).unwrap();
        let h = bqa_hamiltonian(&inst, &s).unwrap();
        let (vals, vecs) = h.evaluate(0.0).unwrap().hermitian_eigen();
        let zero = h.basis().encode(&[1, 1, 1]).unwrap();
        assert!(vecs[(zero, 0)].norm_sqr() > 0.999);
        assert!(vals[0].abs() < 0.01);
    }

    #[test]
    fn bqa_final_ground_state_matches_oracle() {
        let inst = ProblemInstance::ferromagnetic_ring(4, 1.0, 0.1).unwrap();
        let s = BqaSchedule::gaussian(2.0, 20.0, 100.0).unwrap();
        let h = bqa_hamiltonian(&inst, &s).unwrap();
        let oracle = inst.brute_force_ground_states().unwrap();
        let (vals, vecs) = h.evaluate(100.0).unwrap().hermitian_eigen();
        let idx = h.basis().index_of_spins(&oracle.configurations[0]).unwrap();
        assert!(vecs[(idx, 0)].norm_sqr() > 0.999);
        let expected = -4.0 * 20.0 + oracle.energy;
        // residual driver A(t_f) = 2e^-5 shifts the level at second order
        assert!((vals[0] - expected).abs() < 1e-3, "{} vs {}", vals[0], expected);
    }

    #[test]
    fn qa_endpoints() {
        let inst = ProblemInstance::random_fully_connected(3, 1.0, 2).unwrap();
        let q = QaSchedule::new(1.0, 10.0).unwrap();
        let h = qa_hamiltonian(&inst, &q).unwrap();
        let (_, vecs) = h.evaluate(0.0).unwrap().hermitian_eigen();
        for k in 0..8 {
            assert!((vecs[(k, 0)].norm() - 1.0 / 8f64.sqrt()).abs() < 1e-10);
        }
        let oracle = inst.brute_force_ground_states().unwrap();
        let (vals, vecs) = h.evaluate(10.0).unwrap().hermitian_eigen();
        let idx = h.basis().index_of_spins(&oracle.configurations[0]).unwrap();
        assert!(vecs[(idx, 0)].norm() > 1.0 - 1e-12);
        assert!((vals[0] - oracle.energy).abs() < 1e-12);
    }

    #[test]
    fn hermitian_at_many_times() {
        let inst = ProblemInstance::random_fully_connected(3, 1.0, 9).unwrap();
        let s = BqaSchedule::gaussian(2.0, 20.0, 50.0).unwrap();
        let h = bqa_hamiltonian_with_sx2(&inst, &s, 0.5).unwrap();
        let q = qa_hamiltonian(&inst, &QaSchedule::new(1.0, 50.0).unwrap()).unwrap();
        for k in 0..100 {
            let t = 50.0 * ((k as f64 * 0.618_033_988_7) % 1.0);
            assert!(h.evaluate(t).unwrap().is_hermitian(1e-12));
            assert!(q.evaluate(t).unwrap().is_hermitian(1e-12));
        }
    }

    #[test]
    fn commutes_with_global_flip_without_fields() {
        let inst = ProblemInstance::random_fully_connected(3, 1.0, 4).unwrap();
        let inst = ProblemInstance::new(3, inst.bonds().to_vec(), vec![0.0; 3]).unwrap();
        let s = BqaSchedule::gaussian(2.0, 20.0, 30.0).unwrap();
        let h = bqa_hamiltonian(&inst, &s).unwrap();
        let f = global_flip_operator(h.basis()).unwrap();
        let q = qa_hamiltonian(&inst, &QaSchedule::new(1.0, 30.0).unwrap()).unwrap();
        let fq = global_flip_operator(q.basis()).unwrap();
        for t in [0.0, 7.0, 15.0, 22.2, 30.0] {
            assert!(h.evaluate(t).unwrap().commutator(&f).max_abs() < 1e-13);
            assert!(q.evaluate(t).unwrap().commutator(&fq).max_abs() < 1e-13);
        }
    }

    #[test]
    fn no_direct_transition_between_qubit_states() {
        let s = BqaSchedule::gaussian(1.0, 20.0, 10.0).unwrap();
        let h = single_qutrit_field_hamiltonian(0.4, &s).unwrap();
        for k in 0..=20 {
            let t = 0.5 * k as f64;
            assert_eq!(h.evaluate(t).unwrap().get(0, 2).norm(), 0.0);
        }
        let with_sx2 = bqa_hamiltonian_with_sx2(&ProblemInstance::new(1, vec![], vec![0.0]).unwrap(), &s, 1.0).unwrap();
        assert!(with_sx2.evaluate(5.0).unwrap().get(0, 2).norm() > 0.1);
    }

    #[test]
    fn factored_apply_matches_dense() {
        let inst = ProblemInstance::random_fully_connected(3, 1.0, 8).unwrap();
        let s = BqaSchedule::gaussian(2.0, 20.0, 30.0).unwrap();
        let h = bqa_hamiltonian_with_sx2(&inst, &s, 0.3).unwrap();
        let psi: Vec<C64> = (0..27).map(|k| C64::new((k as f64).sin(), (k as f64 * 0.7).cos())).collect();
        for t in [0.0, 11.0, 30.0] {
            let dense = h.evaluate(t).unwrap().apply(&psi);
            let mut out = vec![C64::new(0.0, 0.0); 27];
            h.apply(t, &psi, &mut out);
            for (a, b) in dense.iter().zip(&out) {
                assert!((a - b).norm() < 1e-13);
            }
        }
    }

    #[test]
    fn energy_shift_adds_identity() {
        let inst = ProblemInstance::ferromagnetic_ring(2, 1.0, 0.1).unwrap();
        let s = BqaSchedule::gaussian(2.0, 20.0, 30.0).unwrap();
        let h = bqa_hamiltonian(&inst, &s).unwrap();
        let shifted = h.with_energy_shift(3.5);
        let diff = &shifted.evaluate(12.0).unwrap() - &h.evaluate(12.0).unwrap();
        assert!(max_diff(&diff, &Operator::identity(9).scaled(3.5)) < 1e-14);
    }
}
