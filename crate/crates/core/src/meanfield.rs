//! Zero-temperature mean-field theory of the ferromagnetic bifurcation
//! model. Each site feels
//!
//! ```text
//! H_eff(m) = −A Sx − B (Sz)² − Jz m Sz
//! ```
//!
//! and the variational energy per site is `e(m) = ε₀(Jz m) + Jz m²/2`,
//! with `ε₀` the ground energy of `H_eff`. Since `de/dm = Jz (m − ⟨Sz⟩)`,
//! the stationary points of `e` are exactly the self-consistent solutions;
//! the reported magnetization is the global minimizer, taken `≥ 0`.

use nalgebra::{Matrix3, SymmetricEigen};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::FRAC_1_SQRT_2;

use crate::error::{Error, Result};
use crate::schedules::BqaSchedule;
use crate::spinops::{spin1_operator, Operator, Spin1};

/// Spacing of the global search over `m ∈ [0, 1]`.
pub const M_GRID_STEP: f64 = 1e-3;
/// Target for `|m − ⟨Sz⟩|`.
pub const RESIDUAL_TOL: f64 = 1e-10;
/// `m_s` below this counts as paramagnetic.
pub const PARAMAGNET_TOL: f64 = 1e-8;
/// Jump in `m_s` across a refined boundary above which it is first order.
pub const FIRST_ORDER_JUMP: f64 = 1e-3;

const LEVEL_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Order {
    Paramagnetic,
    /// Ferromagnetic, reached continuously: `m = 0` is a local maximum of `e`.
    SecondOrderSide,
    /// Ferromagnetic while `m = 0` is still a local minimum (metastable).
    FirstOrderSide,
}

impl Order {
    pub fn label(self) -> &'static str {
        match self {
            Order::Paramagnetic => "paramagnetic",
            Order::SecondOrderSide => "second-order-side",
            Order::FirstOrderSide => "first-order-side",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeanFieldPoint {
    pub a: f64,
    pub b: f64,
    pub jz: f64,
    pub m_s: f64,
    pub order: Order,
    pub energy_density: f64,
    /// `|m_s − ⟨Sz⟩(m_s)|`.
    pub residual: f64,
}

/// `−A Sx − B Sz² − Jz m Sz` as a 3×3 operator.
pub fn effective_hamiltonian(a: f64, b: f64, jz: f64, m: f64) -> Operator {
    let sx = spin1_operator(Spin1::Sx).scaled(-a);
    let sz2 = spin1_operator(Spin1::Sz2).scaled(-b);
    let sz = spin1_operator(Spin1::Sz).scaled(-jz * m);
    &(&sx + &sz2) + &sz
}

/// Ground energy and `⟨Sz⟩` of `H_eff` with longitudinal field `h = Jz m`.
/// A degenerate ground level is averaged uniformly.
fn ground(a: f64, b: f64, h: f64) -> (f64, f64) {
    let s = FRAC_1_SQRT_2 * a;
    #[rustfmt::skip]
    let m = Matrix3::new(
        -b - h, -s,  0.0,
        -s,     0.0, -s,
        0.0,    -s,  -b + h,
    );
    let eig = SymmetricEigen::new(m);
    let e0 = eig.eigenvalues.min();
    let scale = 1.0 + a.abs() + b.abs() + h.abs();
    let mut sz = 0.0;
    let mut count = 0.0;
    for (k, &e) in eig.eigenvalues.iter().enumerate() {
        if e - e0 <= LEVEL_TOL * scale {
            let v = eig.eigenvectors.column(k);
            sz += v[0] * v[0] - v[2] * v[2];
            count += 1.0;
        }
    }
    (e0, sz / count)
}

/// `⟨Sz⟩` in the ground state of `H_eff(m)`.
pub fn expectation_sz(a: f64, b: f64, jz: f64, m: f64) -> f64 {
    ground(a, b, jz * m).1
}

/// `e(m) = ε₀(A, B, Jz m) + Jz m²/2`.
pub fn variational_energy(a: f64, b: f64, jz: f64, m: f64) -> f64 {
    ground(a, b, jz * m).0 + 0.5 * jz * m * m
}

fn check(a: f64, b: f64, jz: f64) -> Result<()> {
    if !(a.is_finite() && b.is_finite()) {
        return Err(Error::invalid(format!("A = {a}, B = {b} must be finite")));
    }
    if !(jz.is_finite() && jz > 0.0) {
        return Err(Error::invalid(format!("Jz must be positive, got {jz}")));
    }
    Ok(())
}

/// Global minimizer of `e(m)` over `m ∈ [0, 1]`, refined to a fixed point.
pub fn solve_selfconsistent(a: f64, b: f64, jz: f64) -> Result<MeanFieldPoint> {
    check(a, b, jz)?;
    let g = |m: f64| m - expectation_sz(a, b, jz, m);
    let e = |m: f64| variational_energy(a, b, jz, m);

    let steps = (1.0 / M_GRID_STEP).round() as usize;
    let grid: Vec<f64> = (0..=steps).map(|k| k as f64 * M_GRID_STEP).collect();
    let gs: Vec<f64> = grid.iter().map(|&m| g(m)).collect();

    // m = 0 is always stationary; every other local minimum of e sits where
    // g rises through zero (g only jumps downward, so these are continuous).
    let mut candidates = vec![0.0];
    for k in 1..grid.len() {
        let (lo, hi) = (grid[k - 1], grid[k]);
        if gs[k].abs() <= RESIDUAL_TOL && gs[k - 1] < 0.0 {
            candidates.push(hi);
        } else if gs[k - 1] < 0.0 && gs[k] > 0.0 {
            candidates.push(bisect(&g, lo, hi));
        }
    }
    // below the first grid point the sign test above cannot see a root
    if gs[1] > 0.0 && g(1e-9) < 0.0 {
        candidates.push(bisect(&g, 1e-9, grid[1]));
    }

    let mut best = 0.0;
    let mut best_e = e(0.0);
    for &m in &candidates[1..] {
        let em = e(m);
        if em < best_e - 1e-14 * (1.0 + best_e.abs()) {
            best = m;
            best_e = em;
        }
    }
    let residual = g(best).abs();
    if residual >= RESIDUAL_TOL {
        let grid_best = grid
            .iter()
            .copied()
            .min_by(|x, y| e(*x).total_cmp(&e(*y)))
            .unwrap_or(0.0);
        return Err(Error::MeanFieldNotConverged { a, b, jz, grid_best });
    }
    let order = if best < PARAMAGNET_TOL {
        Order::Paramagnetic
    } else if g(1e-6) > 0.0 {
        Order::FirstOrderSide
    } else {
        Order::SecondOrderSide
    };
    Ok(MeanFieldPoint {
        a,
        b,
        jz,
        m_s: best,
        order,
        energy_density: best_e,
        residual,
    })
}

/// Root of `g` in `[lo, hi]` given `g(lo) < 0 < g(hi)`.
fn bisect(g: &impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let gm = g(mid);
        if gm.abs() < 0.01 * RESIDUAL_TOL {
            return mid;
        }
        if gm < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let (gl, gh) = (g(lo).abs(), g(hi).abs());
    if gl < gh {
        lo
    } else {
        hi
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Axis {
    /// Boundary crossed while varying `A` at fixed `B`.
    A,
    /// Boundary crossed while varying `B` at fixed `A`.
    B,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum TransitionOrder {
    First,
    Second,
}

/// A paramagnet–ferromagnet boundary located between two grid points.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundaryPoint {
    pub a: f64,
    pub b: f64,
    pub axis: Axis,
    /// `m_s` on the ferromagnetic side just past the refined boundary.
    pub jump: f64,
    pub order: TransitionOrder,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhaseDiagram {
    pub jz: f64,
    pub a_grid: Vec<f64>,
    pub b_grid: Vec<f64>,
    /// Row-major: all `B` for the first `A`, then the next `A`, …
    pub points: Vec<MeanFieldPoint>,
    pub boundaries: Vec<BoundaryPoint>,
}

impl PhaseDiagram {
    pub fn point(&self, ia: usize, ib: usize) -> &MeanFieldPoint {
        &self.points[ia * self.b_grid.len() + ib]
    }
}

/// Width to which boundaries are bisected before the jump is measured.
const BOUNDARY_WIDTH: f64 = 1e-10;

/// Solve every grid point and locate the boundaries along both axes.
pub fn phase_diagram(a_grid: &[f64], b_grid: &[f64], jz: f64) -> Result<PhaseDiagram> {
    if a_grid.is_empty() || b_grid.is_empty() {
        return Err(Error::invalid("phase diagram grids must be non-empty"));
    }
    let pairs: Vec<(f64, f64)> = a_grid
        .iter()
        .flat_map(|&a| b_grid.iter().map(move |&b| (a, b)))
        .collect();
    let points = pairs
        .par_iter()
        .map(|&(a, b)| solve_selfconsistent(a, b, jz))
        .collect::<Result<Vec<_>>>()?;

    let nb = b_grid.len();
    let para = |p: &MeanFieldPoint| p.order == Order::Paramagnetic;
    let mut crossings: Vec<(MeanFieldPoint, MeanFieldPoint, Axis)> = Vec::new();
    for ia in 0..a_grid.len() {
        for ib in 0..nb {
            let p = points[ia * nb + ib];
            if ib + 1 < nb {
                let q = points[ia * nb + ib + 1];
                if para(&p) != para(&q) {
                    crossings.push((p, q, Axis::B));
                }
            }
            if ia + 1 < a_grid.len() {
                let q = points[(ia + 1) * nb + ib];
                if para(&p) != para(&q) {
                    crossings.push((p, q, Axis::A));
                }
            }
        }
    }
    let boundaries = crossings
        .par_iter()
        .map(|&(p, q, axis)| refine_boundary(p, q, axis, jz))
        .collect::<Result<Vec<_>>>()?;
    Ok(PhaseDiagram {
        jz,
        a_grid: a_grid.to_vec(),
        b_grid: b_grid.to_vec(),
        points,
        boundaries,
    })
}

fn refine_boundary(
    p: MeanFieldPoint,
    q: MeanFieldPoint,
    axis: Axis,
    jz: f64,
) -> Result<BoundaryPoint> {
    let (mut para_x, mut ferro_x, fixed) = match (axis, p.order == Order::Paramagnetic) {
        (Axis::B, true) => (p.b, q.b, p.a),
        (Axis::B, false) => (q.b, p.b, p.a),
        (Axis::A, true) => (p.a, q.a, p.b),
        (Axis::A, false) => (q.a, p.a, p.b),
    };
    let solve = |x: f64| match axis {
        Axis::B => solve_selfconsistent(fixed, x, jz),
        Axis::A => solve_selfconsistent(x, fixed, jz),
    };
    let mut ferro = if p.order == Order::Paramagnetic { q } else { p };
    while (ferro_x - para_x).abs() > BOUNDARY_WIDTH {
        let mid = 0.5 * (para_x + ferro_x);
        if mid == para_x || mid == ferro_x {
            break;
        }
        let pt = solve(mid)?;
        if pt.order == Order::Paramagnetic {
            para_x = mid;
        } else {
            ferro_x = mid;
            ferro = pt;
        }
    }
    let (a, b) = match axis {
        Axis::B => (fixed, 0.5 * (para_x + ferro_x)),
        Axis::A => (0.5 * (para_x + ferro_x), fixed),
    };
    Ok(BoundaryPoint {
        a,
        b,
        axis,
        jump: ferro.m_s,
        order: if ferro.m_s > FIRST_ORDER_JUMP {
            TransitionOrder::First
        } else {
            TransitionOrder::Second
        },
    })
}

/// `(t/t_f, A(t)/Jz, B(t)/Jz)` along an annealing protocol.
pub fn protocol_overlay(
    schedule: &BqaSchedule,
    jz: f64,
    samples: usize,
) -> Result<Vec<(f64, f64, f64)>> {
    if samples < 2 {
        return Err(Error::invalid("overlay needs at least 2 samples"));
    }
    if !(jz.is_finite() && jz > 0.0) {
        return Err(Error::invalid(format!("Jz must be positive, got {jz}")));
    }
    (0..samples)
        .map(|k| {
            let frac = k as f64 / (samples - 1) as f64;
            let (a, b) = schedule.coefficients(frac * schedule.t_final())?;
            Ok((frac, a / jz, b / jz))
        })
        .collect()
}
