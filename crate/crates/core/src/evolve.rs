//! Time-dependent Schrödinger evolution `i dψ/dt = H(t) ψ` (ħ = 1) and
//! instantaneous spectra.
//!
//! Integration uses the explicit Dormand–Prince 8(5,3) pair with adaptive
//! steps. The error of each step, divided by its length, is kept below
//! `tol`. The norm of ψ is never rescaled; its drift is reported instead.
//!
//! The integrator works in the frame that removes `c(t) = tr H(t) / dim`:
//! it evolves φ under `H(t) − c(t)` and restores the phase `exp(−i∫c)` at
//! the end. A constant energy shift therefore leaves the step sequence, and
//! every probability, unchanged to rounding.

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hamiltonians::{Coefficient, TimeDependentHamiltonian};
use crate::spinops::{LocalKind, Operator, SiteBasis};

/// Normalization tolerance for states handed to the integrator.
pub const NORM_TOL: f64 = 1e-9;

/// Relative eigenvalue spacing below which levels count as degenerate.
pub const DEGENERACY_REL_TOL: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    basis: SiteBasis,
    amplitudes: Vec<C64>,
}

impl StateVector {
    /// Requires unit norm within [`NORM_TOL`].
    pub fn new(basis: SiteBasis, amplitudes: Vec<C64>) -> Result<Self> {
        let state = Self::from_raw(basis, amplitudes)?;
        let norm = state.norm();
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(Error::invalid(format!("state norm {norm} is not 1")));
        }
        Ok(state)
    }

    /// Rescales to unit norm.
    pub fn normalized(basis: SiteBasis, amplitudes: Vec<C64>) -> Result<Self> {
        let mut state = Self::from_raw(basis, amplitudes)?;
        let norm = state.norm();
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::invalid("cannot normalize a zero or non-finite state"));
        }
        state.amplitudes.iter_mut().for_each(|a| *a /= norm);
        Ok(state)
    }

    /// No normalization check; used for integrator output.
    pub fn from_raw(basis: SiteBasis, amplitudes: Vec<C64>) -> Result<Self> {
        if amplitudes.len() != basis.dim() {
            return Err(Error::invalid(format!(
                "{} amplitudes for a basis of dimension {}",
                amplitudes.len(),
                basis.dim()
            )));
        }
        Ok(StateVector { basis, amplitudes })
    }

    pub fn basis_state(basis: SiteBasis, index: usize) -> Result<Self> {
        if index >= basis.dim() {
            return Err(Error::invalid(format!("basis index {index} out of range")));
        }
        let mut amps = vec![C64::new(0.0, 0.0); basis.dim()];
        amps[index] = C64::new(1.0, 0.0);
        Ok(StateVector { basis, amplitudes: amps })
    }

    /// `|0, 0, …, 0⟩` on `n` qutrits.
    pub fn zero_qutrits(n: usize) -> Result<Self> {
        let basis = SiteBasis::qutrits(n)?;
        let idx = basis.encode(&vec![1; n])?;
        Self::basis_state(basis, idx)
    }

    pub fn uniform(basis: SiteBasis) -> Self {
        let a = C64::new(1.0 / (basis.dim() as f64).sqrt(), 0.0);
        StateVector {
            basis,
            amplitudes: vec![a; basis.dim()],
        }
    }

    pub fn basis(&self) -> &SiteBasis {
        &self.basis
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amplitudes
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    /// `|⟨k|ψ⟩|²` for every basis index `k`.
    pub fn probabilities(&self) -> Vec<f64> {
        self.amplitudes.iter().map(|a| a.norm_sqr()).collect()
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &StateVector) -> C64 {
        self.amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    pub fn distance(&self, other: &StateVector) -> f64 {
        self.amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            .sqrt()
    }
}

/// How `H(t)ψ` is computed inside the integrator.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Matvec {
    /// Apply the structured terms directly, never forming `H(t)`.
    #[default]
    Factored,
    /// Cache each term as a dense matrix.
    Dense,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvolveOptions {
    /// Local error per unit time.
    pub tol: f64,
    /// Uniformly spaced sample times, endpoints included (at least 2).
    pub sample_count: usize,
    pub max_steps: usize,
    pub matvec: Matvec,
}

impl Default for EvolveOptions {
    fn default() -> Self {
        EvolveOptions {
            tol: 1e-10,
            sample_count: 2,
            max_steps: 20_000_000,
            matvec: Matvec::Factored,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub t: f64,
    pub probabilities: Vec<f64>,
    /// `ψ(t)` including its global phase.
    pub amplitudes: Vec<C64>,
}

impl Sample {
    fn capture(t: f64, y: &[C64], theta: f64) -> Self {
        let phase = C64::from_polar(1.0, -theta);
        Sample {
            t,
            probabilities: y.iter().map(|a| a.norm_sqr()).collect(),
            amplitudes: y.iter().map(|a| a * phase).collect(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EvolutionResult {
    pub final_state: StateVector,
    pub samples: Vec<Sample>,
    /// `max |‖ψ(t)‖ − ‖ψ(0)‖|` over accepted steps.
    pub norm_drift: f64,
    pub step_count: usize,
    pub rejected_steps: usize,
}

enum Matrices<'a> {
    Factored(&'a TimeDependentHamiltonian),
    Dense {
        fixed: DMatrix<C64>,
        parts: Vec<(DMatrix<C64>, Coefficient)>,
    },
}

struct Rhs<'a> {
    matrices: Matrices<'a>,
    fixed_mean: f64,
    part_means: Vec<(f64, Coefficient)>,
}

impl Rhs<'_> {
    fn mean(&self, t: f64) -> f64 {
        self.fixed_mean
            + self
                .part_means
                .iter()
                .map(|(m, c)| m * c.value(t))
                .sum::<f64>()
    }

    /// `out = −i (H(t) − c(t)) psi`.
    fn eval(&self, t: f64, psi: &[C64], out: &mut [C64]) {
        match &self.matrices {
            Matrices::Factored(h) => h.apply(t, psi, out),
            Matrices::Dense { fixed, parts } => {
                let n = psi.len();
                let mut m = fixed.clone();
                for (p, c) in parts {
                    m += p * C64::new(c.value(t), 0.0);
                }
                for (i, o) in out.iter_mut().enumerate().take(n) {
                    *o = (0..n).map(|j| m[(i, j)] * psi[j]).sum();
                }
            }
        }
        let c = self.mean(t);
        for (o, p) in out.iter_mut().zip(psi) {
            let v = *o - p * c;
            *o = C64::new(v.im, -v.re);
        }
    }
}

/// Integrate from `t = 0` to `t_end` (at most the Hamiltonian's `t_f`).
pub fn evolve(
    h: &TimeDependentHamiltonian,
    psi0: &StateVector,
    t_end: f64,
    options: &EvolveOptions,
) -> Result<EvolutionResult> {
    if psi0.basis() != h.basis() {
        return Err(Error::invalid("initial state and Hamiltonian use different bases"));
    }
    if (psi0.norm() - 1.0).abs() > NORM_TOL {
        return Err(Error::invalid(format!("initial state norm {} is not 1", psi0.norm())));
    }
    if !(t_end.is_finite() && t_end >= 0.0 && t_end <= h.t_final()) {
        return Err(Error::invalid(format!(
            "end time {t_end} outside [0, {}]",
            h.t_final()
        )));
    }
    if options.sample_count < 2 {
        return Err(Error::invalid("sample_count must be at least 2"));
    }
    if !(options.tol.is_finite() && options.tol > 0.0) {
        return Err(Error::invalid(format!("tolerance must be positive, got {}", options.tol)));
    }
    let matrices = match options.matvec {
        Matvec::Factored => Matrices::Factored(h),
        Matvec::Dense => {
            let fixed = h.static_part().to_operator(h.basis())?.into_matrix();
            let parts = h
                .parts()
                .iter()
                .map(|p| Ok((p.term.to_operator(h.basis())?.into_matrix(), p.coefficient)))
                .collect::<Result<Vec<_>>>()?;
            Matrices::Dense { fixed, parts }
        }
    };
    let basis = h.basis();
    let rhs = Rhs {
        matrices,
        fixed_mean: h.static_part().mean_diagonal(basis),
        part_means: h
            .parts()
            .iter()
            .map(|p| (p.term.mean_diagonal(basis), p.coefficient))
            .collect(),
    };
    Dop853::new(rhs, psi0.amplitudes().to_vec(), options).run(*psi0.basis(), t_end)
}

struct Dop853<'a> {
    rhs: Rhs<'a>,
    y: Vec<C64>,
    opts: EvolveOptions,
}

impl<'a> Dop853<'a> {
    fn new(rhs: Rhs<'a>, y: Vec<C64>, opts: &EvolveOptions) -> Self {
        Dop853 { rhs, y, opts: *opts }
    }

    fn run(mut self, basis: SiteBasis, t_end: f64) -> Result<EvolutionResult> {
        let n = self.y.len();
        let zero = C64::new(0.0, 0.0);
        let mut k: Vec<Vec<C64>> = vec![vec![zero; n]; 12];
        let mut stage = vec![zero; n];
        let mut y_new = vec![zero; n];
        let mut err5 = vec![zero; n];
        let mut err3 = vec![zero; n];

        let norm0 = l2(&self.y);
        let sample_times: Vec<f64> = (0..self.opts.sample_count)
            .map(|i| t_end * i as f64 / (self.opts.sample_count - 1) as f64)
            .collect();
        let mut samples = vec![Sample::capture(0.0, &self.y, 0.0)];
        // ∫c dt, accumulated with the same weights as ψ
        let mut theta = 0.0f64;
        let mut next_sample = 1;

        let mut t = 0.0f64;
        self.rhs.eval(t, &self.y, &mut k[0]);
        let mut h = initial_step(&self.y, &k[0], t_end);
        let mut last_rejected = false;
        let mut steps = 0usize;
        let mut rejected = 0usize;
        let mut drift = 0.0f64;

        while next_sample < sample_times.len() {
            let target = sample_times[next_sample];
            if target <= t {
                samples.push(Sample::capture(target, &self.y, theta));
                next_sample += 1;
                continue;
            }
            if steps + rejected >= self.opts.max_steps {
                return Err(Error::Integration {
                    t,
                    steps,
                    step_size: h,
                    reason: format!("step budget of {} exhausted", self.opts.max_steps),
                });
            }
            if h < 1e-14 * t.abs().max(1.0) {
                return Err(Error::Integration {
                    t,
                    steps,
                    step_size: h,
                    reason: "step size underflow".into(),
                });
            }
            let hits_sample = t + 1.01 * h >= target;
            let h_step = if hits_sample { target - t } else { h };

            for s in 1..12 {
                stage.copy_from_slice(&self.y);
                for (j, &a) in tableau::A[s - 1].iter().enumerate() {
                    if a != 0.0 {
                        axpy(&mut stage, h_step * a, &k[j]);
                    }
                }
                self.rhs.eval(t + tableau::C[s] * h_step, &stage, &mut k[s]);
            }

            y_new.copy_from_slice(&self.y);
            err5.fill(zero);
            for i in 0..12 {
                if tableau::B[i] != 0.0 {
                    axpy(&mut y_new, h_step * tableau::B[i], &k[i]);
                }
                if tableau::E[i] != 0.0 {
                    axpy(&mut err5, tableau::E[i], &k[i]);
                }
            }
            // third-order estimate: Σ b_i k_i − (bhh1 k1 + bhh2 k9 + bhh3 k12)
            err3.fill(zero);
            for i in 0..12 {
                if tableau::B[i] != 0.0 {
                    axpy(&mut err3, tableau::B[i], &k[i]);
                }
            }
            axpy(&mut err3, -tableau::BHH[0], &k[0]);
            axpy(&mut err3, -tableau::BHH[1], &k[8]);
            axpy(&mut err3, -tableau::BHH[2], &k[11]);

            let e5: f64 = err5.iter().map(|z| z.norm_sqr()).sum();
            let e3: f64 = err3.iter().map(|z| z.norm_sqr()).sum();
            let deno = e5 + 0.01 * e3;
            // local error / step length, in units of tol
            let err = if deno > 0.0 { e5 / deno.sqrt() } else { 0.0 } / self.opts.tol;

            let fac11 = err.powf(1.0 / 8.0);
            let fac = (fac11 / 0.9).clamp(1.0 / 6.0, 1.0 / 0.333);
            let mut h_new = h_step / fac;

            if err <= 1.0 {
                steps += 1;
                theta += h_step
                    * tableau::B
                        .iter()
                        .zip(tableau::C)
                        .filter(|(b, _)| **b != 0.0)
                        .map(|(b, c)| b * self.rhs.mean(t + c * h_step))
                        .sum::<f64>();
                t = if hits_sample { target } else { t + h_step };
                std::mem::swap(&mut self.y, &mut y_new);
                drift = drift.max((l2(&self.y) - norm0).abs());
                self.rhs.eval(t, &self.y, &mut k[0]);
                if last_rejected {
                    h_new = h_new.min(h_step);
                }
                last_rejected = false;
                if hits_sample {
                    samples.push(Sample::capture(t, &self.y, theta));
                    next_sample += 1;
                    // a clipped step says nothing about the natural step size
                    h = h_new.max(h);
                } else {
                    h = h_new;
                }
            } else {
                rejected += 1;
                last_rejected = true;
                h = h_step / (fac11 / 0.9).min(1.0 / 0.333);
            }
        }

        let phase = C64::from_polar(1.0, -theta);
        self.y.iter_mut().for_each(|a| *a *= phase);
        Ok(EvolutionResult {
            final_state: StateVector::from_raw(basis, self.y)?,
            samples,
            norm_drift: drift,
            step_count: steps,
            rejected_steps: rejected,
        })
    }
}

fn l2(v: &[C64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

fn axpy(y: &mut [C64], a: f64, x: &[C64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        yi.re += a * xi.re;
        yi.im += a * xi.im;
    }
}

fn initial_step(y: &[C64], f0: &[C64], t_end: f64) -> f64 {
    let dnf = l2(f0);
    let dny = l2(y);
    let h = if dnf <= 1e-10 || dny <= 1e-10 {
        1e-6
    } else {
        0.01 * dny / dnf
    };
    h.min(t_end.max(1e-12))
}

/// Ascending eigenvalues of `H(t)`.
pub fn instantaneous_spectrum(h: &TimeDependentHamiltonian, t: f64) -> Result<Vec<f64>> {
    Ok(h.evaluate(t)?.eigenvalues())
}

/// Ascending eigenvalues and matching eigenvectors (columns) of `H(t)`.
pub fn instantaneous_eigensystem(
    h: &TimeDependentHamiltonian,
    t: f64,
) -> Result<(Vec<f64>, DMatrix<C64>)> {
    Ok(h.evaluate(t)?.hermitian_eigen())
}

/// Ground state of `H(0)`, phase fixed so its largest component is real
/// and positive. Fails when the lowest level of `H(0)` is degenerate.
pub fn adiabatic_initial_state(h: &TimeDependentHamiltonian) -> Result<StateVector> {
    let op: Operator = h.evaluate(0.0)?;
    let (vals, vecs) = op.hermitian_eigen();
    let scale = vals.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(f64::MIN_POSITIVE);
    if vals.len() > 1 && vals[1] - vals[0] < DEGENERACY_REL_TOL * scale {
        return Err(Error::Indeterminate(format!(
            "ground level of H(0) is degenerate (gap {:.3e})",
            vals[1] - vals[0]
        )));
    }
    let col: Vec<C64> = vecs.column(0).iter().copied().collect();
    let pivot = col
        .iter()
        .copied()
        .max_by(|a, b| a.norm_sqr().total_cmp(&b.norm_sqr()))
        .expect("non-empty");
    let phase = pivot.conj() / pivot.norm();
    StateVector::normalized(*h.basis(), col.into_iter().map(|a| a * phase).collect())
}

/// Initial state selection for annealing runs.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InitialState {
    /// Exact ground state of `H(0)`.
    #[default]
    Ground,
    /// `|0,…,0⟩` for qutrits, uniform superposition for qubits.
    Ideal,
}

pub fn initial_state(h: &TimeDependentHamiltonian, which: InitialState) -> Result<StateVector> {
    match (which, h.basis().kind()) {
        (InitialState::Ground, _) => adiabatic_initial_state(h),
        (InitialState::Ideal, LocalKind::Qutrit) => StateVector::zero_qutrits(h.basis().sites()),
        (InitialState::Ideal, LocalKind::Qubit) => Ok(StateVector::uniform(*h.basis())),
    }
}

mod tableau {
    //! Dormand–Prince 8(5,3) coefficients (Hairer, Nørsett & Wanner, DOP853).

    pub const C: [f64; 12] = [
        0.0,
        0.526001519587677318785587544488e-01,
        0.789002279381515978178381316732e-01,
        0.118350341907227396726757197510e+00,
        0.281649658092772603273242802490e+00,
        0.333333333333333333333333333333e+00,
        0.25e+00,
        0.307692307692307692307692307692e+00,
        0.651282051282051282051282051282e+00,
        0.6e+00,
        0.857142857142857142857142857142e+00,
        1.0,
    ];

    /// Row `s − 1` holds the coefficients of stage `s` (0-based, `s = 1..12`).
    pub const A: [&[f64]; 11] = [
        &[5.26001519587677318785587544488e-2],
        &[1.97250569845378994544595329183e-2, 5.91751709536136983633785987549e-2],
        &[2.95875854768068491816892993775e-2, 0.0, 8.87627564304205475450678981324e-2],
        &[
            2.41365134159266685502369798665e-1,
            0.0,
            -8.84549479328286085344864962717e-1,
            9.24834003261792003115737966543e-1,
        ],
        &[
            3.7037037037037037037037037037e-2,
            0.0,
            0.0,
            1.70828608729473871279604482173e-1,
            1.25467687566822425016691814123e-1,
        ],
        &[
            3.7109375e-2,
            0.0,
            0.0,
            1.70252211019544039314978060272e-1,
            6.02165389804559606850219397283e-2,
            -1.7578125e-2,
        ],
        &[
            3.70920001185047927108779319836e-2,
            0.0,
            0.0,
            1.70383925712239993810214054705e-1,
            1.07262030446373284651809199168e-1,
            -1.53194377486244017527936158236e-2,
            8.27378916381402288758473766002e-3,
        ],
        &[
            6.24110958716075717114429577812e-1,
            0.0,
            0.0,
            -3.36089262944694129406857109825e0,
            -8.68219346841726006818189891453e-1,
            2.75920996994467083049415600797e1,
            2.01540675504778934086186788979e1,
            -4.34898841810699588477366255144e1,
        ],
        &[
            4.77662536438264365890433908527e-1,
            0.0,
            0.0,
            -2.48811461997166764192642586468e0,
            -5.90290826836842996371446475743e-1,
            2.12300514481811942347288949897e1,
            1.52792336328824235832596922938e1,
            -3.32882109689848629194453265587e1,
            -2.03312017085086261358222928593e-2,
        ],
        &[
            -9.3714243008598732571704021658e-1,
            0.0,
            0.0,
            5.18637242884406370830023853209e0,
            1.09143734899672957818500254654e0,
            -8.14978701074692612513997267357e0,
            -1.85200656599969598641566180701e1,
            2.27394870993505042818970056734e1,
            2.49360555267965238987089396762e0,
            -3.0467644718982195003823669022e0,
        ],
        &[
            2.27331014751653820792359768449e0,
            0.0,
            0.0,
            -1.05344954667372501984066689879e1,
            -2.00087205822486249909675718444e0,
            -1.79589318631187989172765950534e1,
            2.79488845294199600508499808837e1,
            -2.85899827713502369474065508674e0,
            -8.87285693353062954433549289258e0,
            1.23605671757943030647266201528e1,
            6.43392746015763530355970484046e-1,
        ],
    ];

    pub const B: [f64; 12] = [
        5.42937341165687622380535766363e-2,
        0.0,
        0.0,
        0.0,
        0.0,
        4.45031289275240888144113950566e0,
        1.89151789931450038304281599044e0,
        -5.8012039600105847814672114227e0,
        3.1116436695781989440891606237e-1,
        -1.52160949662516078556178806805e-1,
        2.01365400804030348374776537501e-1,
        4.47106157277725905176885569043e-2,
    ];

    pub const BHH: [f64; 3] = [
        0.244094488188976377952755905512e+00,
        0.733846688281611857341361741547e+00,
        0.220588235294117647058823529412e-01,
    ];

    pub const E: [f64; 12] = [
        0.1312004499419488073250102996e-01,
        0.0,
        0.0,
        0.0,
        0.0,
        -0.1225156446376204440720569753e+01,
        -0.4957589496572501915214079952e+00,
        0.1664377182454986536961530415e+01,
        -0.3503288487499736816886487290e+00,
        0.3341791187130174790297318841e+00,
        0.8192320648511571246570742613e-01,
        -0.2235530786388629525884427845e-01,
    ];
}
