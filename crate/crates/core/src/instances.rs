//! Ising problem instances `H_p = −Σ J_ij s_i s_j − Σ h_i s_i` with
//! `s_i = ±1`: construction, random generation, JSON I/O and the exact
//! brute-force ground-state oracle.

use std::path::Path;

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest spin count accepted by [`ProblemInstance::brute_force_ground_states`].
pub const BRUTE_FORCE_LIMIT: usize = 24;

/// Energies within this absolute distance of the minimum belong to the
/// ground manifold.
pub const DEGENERACY_TOL: f64 = 1e-9;

/// Name of the generator behind [`ProblemInstance::random_fully_connected`].
pub const RNG_ALGORITHM: &str = "ChaCha8 (rand_chacha 0.9, seed_from_u64), uniform = (u64 >> 11) * 2^-53";

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Bond {
    pub i: usize,
    pub j: usize,
    pub strength: f64,
}

/// A validated Ising instance. Bonds are stored with `i < j`, unique.
#[derive(Clone, Debug, PartialEq)]
pub struct ProblemInstance {
    n: usize,
    bonds: Vec<Bond>,
    fields: Vec<f64>,
}

/// On-disk layout: `{"n": 4, "bonds": [[0, 1, 1.0], ...], "fields": [...]}`.
#[derive(Serialize, Deserialize)]
struct InstanceFile {
    n: usize,
    #[serde(default)]
    bonds: Vec<(usize, usize, f64)>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    fields: Option<Vec<f64>>,
}

impl ProblemInstance {
    /// Validates and normalizes bond orientation to `i < j`.
    pub fn new(n: usize, bonds: Vec<Bond>, fields: Vec<f64>) -> Result<Self> {
        Self::validate(n, bonds, fields).map_err(|(ctx, msg)| Error::InvalidArgument(format!("{ctx}: {msg}")))
    }

    fn validate(
        n: usize,
        bonds: Vec<Bond>,
        fields: Vec<f64>,
    ) -> std::result::Result<Self, (String, String)> {
        if n == 0 {
            return Err(("n".into(), "instance needs at least one spin".into()));
        }
        if fields.len() != n {
            return Err((
                "fields".into(),
                format!("expected {n} entries, found {}", fields.len()),
            ));
        }
        if let Some(k) = fields.iter().position(|h| !h.is_finite()) {
            return Err((format!("fields[{k}]"), "field is not finite".into()));
        }
        let mut normalized: Vec<Bond> = Vec::with_capacity(bonds.len());
        for (k, b) in bonds.into_iter().enumerate() {
            let ctx = format!("bonds[{k}]");
            if b.i >= n || b.j >= n {
                return Err((ctx, format!("index ({}, {}) out of range for n = {n}", b.i, b.j)));
            }
            if b.i == b.j {
                return Err((ctx, format!("self-coupling on spin {}", b.i)));
            }
            if !b.strength.is_finite() {
                return Err((ctx, "coupling is not finite".into()));
            }
            let (i, j) = if b.i < b.j { (b.i, b.j) } else { (b.j, b.i) };
            if normalized.iter().any(|o| o.i == i && o.j == j) {
                return Err((ctx, format!("duplicate bond ({i}, {j})")));
            }
            normalized.push(Bond { i, j, strength: b.strength });
        }
        Ok(ProblemInstance {
            n,
            bonds: normalized,
            fields,
        })
    }

    /// Periodic chain `J_{i,i+1} = J_{N,1} = j` with uniform field `h`.
    pub fn ferromagnetic_ring(n: usize, j: f64, h: f64) -> Result<Self> {
        if n < 2 {
            return Err(Error::invalid("a ring needs at least two spins"));
        }
        let mut bonds: Vec<Bond> = (0..n - 1)
            .map(|i| Bond { i, j: i + 1, strength: j })
            .collect();
        if n > 2 {
            bonds.push(Bond { i: 0, j: n - 1, strength: j });
        }
        Self::new(n, bonds, vec![h; n])
    }

    /// Fully connected instance with `J_ij = r_ij / n`, `r_ij, h_i ~ U[−scale, scale]`.
    ///
    /// Draw order is `r_01, r_02, …, r_{n−2,n−1}` followed by `h_0 … h_{n−1}`.
    /// The stream is fixed by [`RNG_ALGORITHM`].
    pub fn random_fully_connected(n: usize, scale: f64, seed: u64) -> Result<Self> {
        if n < 2 {
            return Err(Error::invalid("random fully connected instances need n >= 2"));
        }
        if !(scale.is_finite() && scale > 0.0) {
            return Err(Error::invalid(format!("scale must be positive, got {scale}")));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut uniform = || {
            let u = (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64);
            scale * (2.0 * u - 1.0)
        };
        let mut bonds = Vec::with_capacity(n * (n - 1) / 2);
        for i in 0..n {
            for j in i + 1..n {
                bonds.push(Bond { i, j, strength: uniform() / n as f64 });
            }
        }
        let fields = (0..n).map(|_| uniform()).collect();
        Self::new(n, bonds, fields)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn bonds(&self) -> &[Bond] {
        &self.bonds
    }

    pub fn fields(&self) -> &[f64] {
        &self.fields
    }

    /// `−Σ J_ij s_i s_j − Σ h_i s_i`.
    pub fn classical_energy(&self, config: &[i8]) -> Result<f64> {
        if config.len() != self.n {
            return Err(Error::invalid(format!(
                "configuration length {} does not match n = {}",
                config.len(),
                self.n
            )));
        }
        if let Some(k) = config.iter().position(|&s| s != 1 && s != -1) {
            return Err(Error::invalid(format!(
                "configuration entry {k} is {}, expected ±1",
                config[k]
            )));
        }
        Ok(self.energy_unchecked(|i| config[i] as f64))
    }

    fn energy_unchecked(&self, spin: impl Fn(usize) -> f64) -> f64 {
        let coupling: f64 = self
            .bonds
            .iter()
            .map(|b| b.strength * spin(b.i) * spin(b.j))
            .sum();
        let field: f64 = self.fields.iter().enumerate().map(|(i, h)| h * spin(i)).sum();
        -coupling - field
    }

    /// Exhaustive search over all `2^n` configurations.
    pub fn brute_force_ground_states(&self) -> Result<GroundStateSolution> {
        if self.n > BRUTE_FORCE_LIMIT {
            return Err(Error::Capacity {
                what: "brute-force spin count",
                requested: self.n,
                limit: BRUTE_FORCE_LIMIT,
            });
        }
        let n = self.n;
        let total = 1u64 << n;
        let chunk = 1u64 << n.min(12);
        let spin_of = |k: u64, i: usize| if (k >> (n - 1 - i)) & 1 == 0 { 1.0 } else { -1.0 };

        let partial: Vec<(f64, Vec<u64>)> = (0..total.div_ceil(chunk))
            .into_par_iter()
            .map(|c| {
                let mut best = f64::INFINITY;
                let mut members: Vec<(u64, f64)> = Vec::new();
                for k in c * chunk..((c + 1) * chunk).min(total) {
                    let e = self.energy_unchecked(|i| spin_of(k, i));
                    if e < best - DEGENERACY_TOL {
                        best = e;
                        members.retain(|&(_, em)| em <= best + DEGENERACY_TOL);
                    } else if e < best {
                        best = e;
                    }
                    if e <= best + DEGENERACY_TOL {
                        members.push((k, e));
                    }
                }
                members.retain(|&(_, em)| em <= best + DEGENERACY_TOL);
                (best, members.into_iter().map(|(k, _)| k).collect())
            })
            .collect();

        let energy = partial.iter().map(|(e, _)| *e).fold(f64::INFINITY, f64::min);
        let mut configurations: Vec<Vec<i8>> = partial
            .iter()
            .flat_map(|(_, ks)| ks.iter().copied())
            .map(|k| (0..n).map(|i| spin_of(k, i) as i8).collect::<Vec<i8>>())
            .filter(|c| self.energy_unchecked(|i| c[i] as f64) <= energy + DEGENERACY_TOL)
            .collect();
        configurations.sort();
        Ok(GroundStateSolution {
            energy,
            configurations,
        })
    }

    /// Whether the unique ground state differs from `(sign h_1, …, sign h_n)`.
    pub fn is_nontrivial(&self) -> Result<bool> {
        if let Some(k) = self.fields.iter().position(|&h| h == 0.0) {
            return Err(Error::Indeterminate(format!("field h[{k}] is zero, sign undefined")));
        }
        let gs = self.brute_force_ground_states()?;
        if gs.degeneracy() != 1 {
            return Err(Error::Indeterminate(format!(
                "ground state is {}-fold degenerate",
                gs.degeneracy()
            )));
        }
        let trivial: Vec<i8> = self
            .fields
            .iter()
            .map(|&h| if h > 0.0 { 1 } else { -1 })
            .collect();
        Ok(gs.configurations[0] != trivial)
    }

    pub fn to_json(&self) -> String {
        let file = InstanceFile {
            n: self.n,
            bonds: self.bonds.iter().map(|b| (b.i, b.j, b.strength)).collect(),
            fields: Some(self.fields.clone()),
        };
        serde_json::to_string_pretty(&file).expect("instance serializes")
    }

    /// Parse the JSON instance format. `origin` names the source in errors.
    pub fn from_json(text: &str, origin: &str) -> Result<Self> {
        let file: InstanceFile = serde_json::from_str(text).map_err(|e| Error::Parse {
            context: format!("{origin}:{}:{}", e.line(), e.column()),
            message: e.to_string(),
        })?;
        let fields = file.fields.unwrap_or_else(|| vec![0.0; file.n]);
        let bonds = file
            .bonds
            .into_iter()
            .map(|(i, j, strength)| Bond { i, j, strength })
            .collect();
        Self::validate(file.n, bonds, fields).map_err(|(ctx, message)| Error::Parse {
            context: format!("{origin}: {ctx}"),
            message,
        })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)?;
        Self::from_json(&text, &path.display().to_string())
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_json() + "\n")?;
        Ok(())
    }
}

/// Exact ground manifold of an instance.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GroundStateSolution {
    pub energy: f64,
    /// Lexicographically sorted (−1 before +1).
    pub configurations: Vec<Vec<i8>>,
}

impl GroundStateSolution {
    pub fn degeneracy(&self) -> usize {
        self.configurations.len()
    }

    pub fn n(&self) -> usize {
        self.configurations.first().map_or(0, Vec::len)
    }
}

/// Placeholder five-spin frustrated instance with a six-fold degenerate
/// ground manifold (three global-flip pairs).
///
/// Unverified: the bond layout is not taken from a published figure. Spins
/// 0 to 3 hang ferromagnetically off spin 4, and an antiferromagnetic 2–3
/// bond frustrates the 2-3-4 triangle. Swapping spins 2 and 3 maps the
/// "2 flipped" and "3 flipped" ground pairs onto each other; the all-aligned
/// pair has no partner.
/// Supply the exact model through an instance file when it is known.
pub fn five_spin_placeholder() -> ProblemInstance {
    let b = |i, j, strength| Bond { i, j, strength };
    ProblemInstance::new(
        5,
        vec![
            b(0, 4, 1.0),
            b(1, 4, 1.0),
            b(2, 4, 1.0),
            b(3, 4, 1.0),
            b(2, 3, -1.0),
        ],
        vec![0.0; 5],
    )
    .expect("placeholder instance is valid")
}
