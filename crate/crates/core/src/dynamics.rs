//! Integral curves of the Hamiltonian field, `α̇(t) = X(α(t))`.
//!
//! Each structure pairs the eight blocks into four `(q, p)` pairs in which
//! its Hamilton equations take the form `q̇ = ∂H/∂p`, `ṗ = -∂H/∂q`.
//! Symplectic Euler and Verlet run in those canonical coordinates; implicit
//! midpoint and RK4 work on `X` directly.

use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::SimulationConfig;
use crate::error::{Error, Result};
use crate::forms::{symplectic_form, to_matrix};
use crate::hamiltonian::{self, grad, hamiltonian_field, ExprAst, Expr};
use crate::structures::{BlockIndex, SignedBlockMap, StateVector, StructureId, BLOCKS};

pub const MIDPOINT_TOLERANCE: f64 = 1e-13;
pub const MIDPOINT_MAX_ITERATIONS: usize = 50;
pub const JACOBIAN_STEP: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum IntegratorId {
    #[serde(rename = "symplectic-euler")]
    SymplecticEuler,
    #[serde(rename = "verlet")]
    Verlet,
    #[serde(rename = "implicit-midpoint")]
    ImplicitMidpoint,
    #[serde(rename = "rk4")]
    Rk4,
}

impl IntegratorId {
    pub const ALL: [IntegratorId; 4] = [
        IntegratorId::SymplecticEuler,
        IntegratorId::Verlet,
        IntegratorId::ImplicitMidpoint,
        IntegratorId::Rk4,
    ];

    pub fn name(self) -> &'static str {
        match self {
            IntegratorId::SymplecticEuler => "symplectic-euler",
            IntegratorId::Verlet => "verlet",
            IntegratorId::ImplicitMidpoint => "implicit-midpoint",
            IntegratorId::Rk4 => "rk4",
        }
    }

    /// Whether the method works on the canonical splitting (and so needs a
    /// separable Hamiltonian to be symplectic).
    pub fn is_splitting(self) -> bool {
        matches!(self, IntegratorId::SymplecticEuler | IntegratorId::Verlet)
    }
}

impl fmt::Display for IntegratorId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for IntegratorId {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        IntegratorId::ALL
            .into_iter()
            .find(|i| i.name() == s)
            .ok_or_else(|| {
                format!("unknown integrator `{s}` (expected symplectic-euler, verlet, implicit-midpoint or rk4)")
            })
    }
}

/// Four `(q_block, p_block)` pairs covering all eight blocks.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PairingScheme {
    pub pairs: [(BlockIndex, BlockIndex); 4],
}

impl PairingScheme {
    fn from_raw(raw: [(u8, u8); 4]) -> Self {
        let b = |k: u8| BlockIndex::new(k).expect("block in range");
        PairingScheme {
            pairs: raw.map(|(q, p)| (b(q), b(p))),
        }
    }

    pub fn is_partition(&self) -> bool {
        let mut seen = [0u8; BLOCKS];
        for (q, p) in &self.pairs {
            seen[q.get()] += 1;
            seen[p.get()] += 1;
        }
        seen.iter().all(|&c| c == 1)
    }

    /// The pairs implied by a structure table: each `+` entry `s ↦ t` gives
    /// `ẋ_t = +∂H/∂x_s`, i.e. `q = t`, `p = s`. Returned sorted by `p`.
    pub fn derived_from(map: &SignedBlockMap) -> Vec<(BlockIndex, BlockIndex)> {
        BlockIndex::all()
            .filter(|&s| map.sign(s).value() > 0)
            .map(|s| (map.target(s), s))
            .collect()
    }

    pub fn is_q_block(&self, b: BlockIndex) -> bool {
        self.pairs.iter().any(|(q, _)| *q == b)
    }

    /// Original 0-based index of each canonical slot: `q` blocks first (pair
    /// by pair, sites in order), then `p` blocks.
    pub fn canonical_order(&self, n: usize) -> Vec<usize> {
        let mut order = Vec::with_capacity(BLOCKS * n);
        for side in 0..2 {
            for (q, p) in &self.pairs {
                let b = if side == 0 { *q } else { *p };
                order.extend((0..n).map(|i| b.get() * n + i));
            }
        }
        order
    }
}

pub fn pairing_scheme(id: StructureId) -> PairingScheme {
    match id {
        StructureId::J1 => PairingScheme::from_raw([(1, 0), (4, 2), (5, 3), (7, 6)]),
        StructureId::J2 => PairingScheme::from_raw([(2, 0), (1, 4), (5, 7), (6, 3)]),
        StructureId::J3 => PairingScheme::from_raw([(3, 0), (1, 5), (2, 6), (7, 4)]),
    }
}

pub fn to_canonical(scheme: &PairingScheme, x: &StateVector) -> StateVector {
    let order = scheme.canonical_order(x.n());
    let xs = x.components();
    StateVector::from_vec(x.n(), order.iter().map(|&k| xs[k]).collect())
        .expect("permutation keeps length")
}

pub fn from_canonical(scheme: &PairingScheme, y: &StateVector) -> StateVector {
    let order = scheme.canonical_order(y.n());
    let mut out = StateVector::zeros(y.n());
    for (slot, &k) in order.iter().enumerate() {
        out.components_mut()[k] = y.components()[slot];
    }
    out
}

/// Additive terms of `e`, looking through negation and constant factors.
fn additive_terms<'a>(e: &'a Expr, out: &mut Vec<&'a Expr>) {
    match e {
        Expr::Add(a, b) | Expr::Sub(a, b) => {
            additive_terms(a, out);
            additive_terms(b, out);
        }
        Expr::Neg(a) => additive_terms(a, out),
        Expr::Mul(a, b) if a.is_constant() => additive_terms(b, out),
        Expr::Mul(a, b) | Expr::Div(a, b) if b.is_constant() => additive_terms(a, out),
        other => out.push(other),
    }
}

/// Syntactic check that `H = T(p) + V(q)` in the structure's canonical
/// coordinates: no additive term mixes `q` and `p` variables.
pub fn is_separable(h: &ExprAst, scheme: &PairingScheme) -> bool {
    let n = h.n();
    let mut terms = Vec::new();
    additive_terms(h.root(), &mut terms);
    terms.iter().all(|t| {
        let (mut has_q, mut has_p) = (false, false);
        t.visit_vars(&mut |a| {
            let block = BlockIndex::new(((a - 1) / n) as u8).expect("validated variable");
            if scheme.is_q_block(block) {
                has_q = true;
            } else {
                has_p = true;
            }
        });
        !(has_q && has_p)
    })
}

pub fn separability_warning(integrator: IntegratorId, id: StructureId, h: &ExprAst) -> Option<String> {
    if integrator.is_splitting() && !is_separable(h, &pairing_scheme(id)) {
        Some(format!(
            "warning: Hamiltonian is not separable in the {id} canonical coordinates; \
             {integrator} is not guaranteed to be symplectic"
        ))
    } else {
        None
    }
}

/// Prepared right-hand side for one structure and Hamiltonian.
struct Flow<'a> {
    id: StructureId,
    h: &'a ExprAst,
    order: Vec<usize>,
}

impl<'a> Flow<'a> {
    fn new(id: StructureId, h: &'a ExprAst) -> Self {
        Flow {
            id,
            h,
            order: pairing_scheme(id).canonical_order(h.n()),
        }
    }

    fn field(&self, x: &[f64]) -> Result<Vec<f64>> {
        let xs = StateVector::from_vec(self.h.n(), x.to_vec())?;
        Ok(hamiltonian_field(self.id, self.h, &xs)?.into_vec())
    }

    /// Gradient of `H ∘ from_canonical` at canonical point `y`.
    fn canonical_grad(&self, y: &[f64]) -> Result<Vec<f64>> {
        let mut x = vec![0.0; y.len()];
        for (slot, &k) in self.order.iter().enumerate() {
            x[k] = y[slot];
        }
        let g = grad(self.h, &StateVector::from_vec(self.h.n(), x)?)?;
        Ok(self.order.iter().map(|&k| g.components()[k]).collect())
    }

    fn to_canonical(&self, x: &[f64]) -> Vec<f64> {
        self.order.iter().map(|&k| x[k]).collect()
    }

    fn from_canonical(&self, y: &[f64]) -> Vec<f64> {
        let mut x = vec![0.0; y.len()];
        for (slot, &k) in self.order.iter().enumerate() {
            x[k] = y[slot];
        }
        x
    }

    fn step(&self, integrator: IntegratorId, x: &[f64], dt: f64) -> Result<Vec<f64>> {
        let out = match integrator {
            IntegratorId::SymplecticEuler => {
                let mut y = self.to_canonical(x);
                symplectic_euler_canonical(&mut y, dt, |y| self.canonical_grad(y))?;
                self.from_canonical(&y)
            }
            IntegratorId::Verlet => {
                let mut y = self.to_canonical(x);
                verlet_canonical(&mut y, dt, |y| self.canonical_grad(y))?;
                self.from_canonical(&y)
            }
            IntegratorId::ImplicitMidpoint => self.implicit_midpoint(x, dt)?,
            IntegratorId::Rk4 => self.rk4(x, dt)?,
        };
        if out.iter().any(|v| !v.is_finite()) {
            return Err(Error::Domain("state became non-finite".into()));
        }
        Ok(out)
    }

    fn rk4(&self, x: &[f64], dt: f64) -> Result<Vec<f64>> {
        let shifted = |k: &[f64], c: f64| -> Vec<f64> {
            x.iter().zip(k).map(|(xi, ki)| xi + c * ki).collect()
        };
        let k1 = self.field(x)?;
        let k2 = self.field(&shifted(&k1, 0.5 * dt))?;
        let k3 = self.field(&shifted(&k2, 0.5 * dt))?;
        let k4 = self.field(&shifted(&k3, dt))?;
        Ok((0..x.len())
            .map(|i| x[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
            .collect())
    }

    /// Fixed-point iteration on `x' = x + dt·X((x + x')/2)`.
    fn implicit_midpoint(&self, x: &[f64], dt: f64) -> Result<Vec<f64>> {
        let scale = x.iter().fold(1.0f64, |m, v| m.max(v.abs()));
        let f0 = self.field(x)?;
        let mut cur: Vec<f64> = x.iter().zip(&f0).map(|(a, f)| a + dt * f).collect();
        let mut residual = f64::INFINITY;
        for _ in 0..MIDPOINT_MAX_ITERATIONS {
            let mid: Vec<f64> = x.iter().zip(&cur).map(|(a, b)| 0.5 * (a + b)).collect();
            let f = self.field(&mid)?;
            let next: Vec<f64> = x.iter().zip(&f).map(|(a, fi)| a + dt * fi).collect();
            residual = next
                .iter()
                .zip(&cur)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            cur = next;
            if residual <= MIDPOINT_TOLERANCE * scale {
                return Ok(cur);
            }
        }
        Err(Error::MidpointDivergence {
            iterations: MIDPOINT_MAX_ITERATIONS,
            residual,
        })
    }
}

/// `p ← p - dt·∂H/∂q(q, p)`, then `q ← q + dt·∂H/∂p(q, p_new)`, on
/// `y = (q, p)`.
pub fn symplectic_euler_canonical(
    y: &mut [f64],
    dt: f64,
    mut grad: impl FnMut(&[f64]) -> Result<Vec<f64>>,
) -> Result<()> {
    let half = y.len() / 2;
    let g = grad(y)?;
    for i in 0..half {
        y[half + i] -= dt * g[i];
    }
    let g = grad(y)?;
    for i in 0..half {
        y[i] += dt * g[half + i];
    }
    Ok(())
}

/// Half kick, drift, half kick on `y = (q, p)`.
pub fn verlet_canonical(
    y: &mut [f64],
    dt: f64,
    mut grad: impl FnMut(&[f64]) -> Result<Vec<f64>>,
) -> Result<()> {
    let half = y.len() / 2;
    let h = 0.5 * dt;
    let g = grad(y)?;
    for i in 0..half {
        y[half + i] -= h * g[i];
    }
    let g = grad(y)?;
    for i in 0..half {
        y[i] += dt * g[half + i];
    }
    let g = grad(y)?;
    for i in 0..half {
        y[half + i] -= h * g[i];
    }
    Ok(())
}

/// One step of `integrator` for the Hamilton equations of structure `id`.
///
/// `dt` may be negative (backward step); it must be finite.
pub fn step(
    integrator: IntegratorId,
    id: StructureId,
    h: &ExprAst,
    x: &StateVector,
    dt: f64,
) -> Result<StateVector> {
    x.check_same_n(h.n())?;
    if !dt.is_finite() {
        return Err(Error::InvalidConfig(format!("dt must be finite, got {dt}")));
    }
    let out = Flow::new(id, h).step(integrator, x.components(), dt)?;
    StateVector::from_vec(h.n(), out)
}

/// The right-hand side every integrator uses: `X = J ∇H`.
pub fn rhs(id: StructureId, h: &ExprAst, x: &StateVector) -> Result<StateVector> {
    x.check_same_n(h.n())?;
    let v = Flow::new(id, h).field(x.components())?;
    StateVector::from_vec(h.n(), v)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryMeta {
    pub structure: StructureId,
    pub integrator: IntegratorId,
    pub dt: f64,
    pub n: usize,
    pub steps: usize,
    pub hamiltonian: String,
    pub valid: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectorySample {
    pub t: f64,
    pub x: Vec<f64>,
    #[serde(rename = "H")]
    pub energy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub meta: TrajectoryMeta,
    pub samples: Vec<TrajectorySample>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn dim(&self) -> usize {
        BLOCKS * self.meta.n
    }

    pub fn final_state(&self) -> Option<StateVector> {
        self.samples
            .last()
            .and_then(|s| StateVector::from_vec(self.meta.n, s.x.clone()).ok())
    }

    /// CSV with header `t,x1,...,x{8n},H`; numbers carry 17 significant
    /// digits. A trailing `#` line marks an aborted run.
    pub fn write_csv(&self, mut w: impl Write) -> Result<()> {
        let mut header = String::from("t");
        for a in 1..=self.dim() {
            header.push_str(&format!(",x{a}"));
        }
        header.push_str(",H");
        writeln!(w, "{header}")?;
        for s in &self.samples {
            let mut line = format!("{:.16e}", s.t);
            for v in &s.x {
                line.push_str(&format!(",{v:.16e}"));
            }
            line.push_str(&format!(",{:.16e}", s.energy));
            writeln!(w, "{line}")?;
        }
        if !self.meta.valid {
            let reason = self.meta.error.as_deref().unwrap_or("aborted");
            writeln!(w, "# invalid: {}", reason.replace('\n', " "))?;
        }
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("ascii output")
    }

    pub fn to_json_string(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        let t: Trajectory = serde_json::from_str(text)
            .map_err(|e| Error::MalformedTrajectory(e.to_string()))?;
        let dim = t.dim();
        if t.samples.iter().any(|s| s.x.len() != dim) {
            return Err(Error::MalformedTrajectory("sample length differs from 8n".into()));
        }
        Ok(t)
    }

    /// Reads the samples of a CSV trajectory. Metadata other than `n` is not
    /// stored in CSV and comes back as placeholders.
    pub fn read_csv(r: impl BufRead) -> Result<Self> {
        let bad = |m: String| Error::MalformedTrajectory(m);
        let mut lines = r.lines();
        let header = lines.next().ok_or_else(|| bad("empty file".into()))??;
        let cols: Vec<&str> = header.trim().split(',').collect();
        let dim = cols.len().checked_sub(2).unwrap_or(0);
        if cols.len() < 3 || cols[0] != "t" || cols[cols.len() - 1] != "H" || dim % BLOCKS != 0 {
            return Err(bad(format!("unexpected header `{header}`")));
        }
        for (a, c) in cols[1..=dim].iter().enumerate() {
            if *c != format!("x{}", a + 1) {
                return Err(bad(format!("unexpected column `{c}`")));
            }
        }
        let mut samples = Vec::new();
        let mut valid = true;
        for (lineno, line) in lines.enumerate() {
            let line = line?;
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            if line.starts_with('#') {
                valid = false;
                continue;
            }
            let vals: std::result::Result<Vec<f64>, _> = line.split(',').map(str::parse).collect();
            let vals = vals.map_err(|e| bad(format!("line {}: {e}", lineno + 2)))?;
            if vals.len() != dim + 2 {
                return Err(bad(format!("line {}: expected {} fields", lineno + 2, dim + 2)));
            }
            samples.push(TrajectorySample {
                t: vals[0],
                x: vals[1..=dim].to_vec(),
                energy: vals[dim + 1],
            });
        }
        Ok(Trajectory {
            meta: TrajectoryMeta {
                structure: StructureId::J1,
                integrator: IntegratorId::Rk4,
                dt: 0.0,
                n: dim / BLOCKS,
                steps: samples.len().saturating_sub(1),
                hamiltonian: String::new(),
                valid,
                error: None,
            },
            samples,
        })
    }
}

/// Integrates `config` from `t = 0` to `steps·dt`, recording `H` at each
/// sample. A failing step aborts with [`Error::Aborted`], carrying the
/// samples computed so far flagged invalid.
pub fn integrate(config: &SimulationConfig) -> Result<Trajectory> {
    config.validate()?;
    let h = config.parsed_hamiltonian()?;
    let flow = Flow::new(config.structure, &h);
    let mut traj = Trajectory {
        meta: TrajectoryMeta {
            structure: config.structure,
            integrator: config.integrator,
            dt: config.dt,
            n: config.n,
            steps: config.steps,
            hamiltonian: config.hamiltonian.clone(),
            valid: true,
            error: None,
        },
        samples: Vec::with_capacity(config.steps + 1),
    };

    let abort = |mut traj: Trajectory, step: usize, cause: Error| -> Error {
        traj.meta.valid = false;
        traj.meta.error = Some(cause.to_string());
        Error::Aborted {
            step,
            cause: Box::new(cause),
            partial: Box::new(traj),
        }
    };

    let mut x = config.x0.clone();
    let energy = |x: &[f64]| -> Result<f64> {
        hamiltonian::eval(&h, &StateVector::from_vec(config.n, x.to_vec())?)
    };
    match energy(&x) {
        Ok(e) => traj.samples.push(TrajectorySample {
            t: 0.0,
            x: x.clone(),
            energy: e,
        }),
        Err(e) => return Err(abort(traj, 0, e)),
    }
    for k in 1..=config.steps {
        let next = flow
            .step(config.integrator, &x, config.dt)
            .and_then(|nx| energy(&nx).map(|e| (nx, e)));
        match next {
            Ok((nx, e)) => {
                traj.samples.push(TrajectorySample {
                    t: k as f64 * config.dt,
                    x: nx.clone(),
                    energy: e,
                });
                x = nx;
            }
            Err(e) => return Err(abort(traj, k, e)),
        }
    }
    Ok(traj)
}

/// `max_t |H(x_t) - H(x_0)|`.
pub fn energy_drift(traj: &Trajectory) -> f64 {
    let Some(first) = traj.samples.first() else {
        return 0.0;
    };
    traj.samples
        .iter()
        .map(|s| (s.energy - first.energy).abs())
        .fold(0.0, f64::max)
}

fn flow_map(
    flow: &Flow<'_>,
    integrator: IntegratorId,
    x0: &[f64],
    dt: f64,
    steps: usize,
) -> Result<Vec<f64>> {
    let mut x = x0.to_vec();
    for _ in 0..steps {
        x = flow.step(integrator, &x, dt)?;
    }
    Ok(x)
}

/// Central-difference Jacobian `M` of the discrete flow after `steps` steps
/// and the residual `max |MᵀSM - S|` against the structure's symplectic
/// matrix. Columns are computed in parallel.
pub fn symplecticity_check(
    integrator: IntegratorId,
    id: StructureId,
    h: &ExprAst,
    x0: &StateVector,
    dt: f64,
    steps: usize,
) -> Result<f64> {
    x0.check_same_n(h.n())?;
    let s = to_matrix(&symplectic_form(id, h.n())?)?;
    let d = x0.dim();
    let flow = Flow::new(id, h);
    let base = x0.components();

    let columns: Vec<Vec<f64>> = (0..d)
        .into_par_iter()
        .map(|j| -> Result<Vec<f64>> {
            let eps = JACOBIAN_STEP * base[j].abs().max(1.0);
            let mut plus = base.to_vec();
            let mut minus = base.to_vec();
            plus[j] += eps;
            minus[j] -= eps;
            let fp = flow_map(&flow, integrator, &plus, dt, steps)?;
            let fm = flow_map(&flow, integrator, &minus, dt, steps)?;
            let width = plus[j] - minus[j];
            Ok(fp.iter().zip(&fm).map(|(a, b)| (a - b) / width).collect())
        })
        .collect::<Result<_>>()?;
    // columns[j][i] = M[i][j]

    let mut residual = 0.0f64;
    for a in 0..d {
        for b in 0..d {
            let mut acc = 0.0;
            for i in 0..d {
                let mia = columns[a][i];
                if mia == 0.0 {
                    continue;
                }
                for k in 0..d {
                    acc += mia * s.get(i, k) * columns[b][k];
                }
            }
            residual = residual.max((acc - s.get(a, b)).abs());
        }
    }
    Ok(residual)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{corpus, isotropic};
    use crate::hamiltonian::parse;
    use StructureId::*;

    fn st(v: &[f64]) -> StateVector {
        StateVector::from_vec(1, v.to_vec()).unwrap()
    }

    fn e1() -> StateVector {
        StateVector::basis(1, 1)
    }

    fn circle_config(integrator: IntegratorId, steps: usize) -> SimulationConfig {
        SimulationConfig {
            structure: J1,
            n: 1,
            hamiltonian: "0.5*(x1^2 + x2^2)".into(),
            x0: e1().into_vec(),
            integrator,
            dt: 1e-3,
            steps,
            output: None,
        }
    }

    #[test]
    fn pairing_examples() {
        let b = |k: u8| BlockIndex::new(k).unwrap();
        assert_eq!(
            pairing_scheme(J1).pairs,
            [(b(1), b(0)), (b(4), b(2)), (b(5), b(3)), (b(7), b(6))]
        );
        assert!(pairing_scheme(J3).pairs.contains(&(b(3), b(0))));
        for id in StructureId::ALL {
            let scheme = pairing_scheme(id);
            assert!(scheme.is_partition());
            let mut derived = PairingScheme::derived_from(&crate::structures::make_structure(id));
            let mut fixed = scheme.pairs.to_vec();
            derived.sort();
            fixed.sort();
            assert_eq!(derived, fixed, "{id}");
        }
    }

    #[test]
    fn canonical_relabeling() {
        let x = st(&[1., 2., 3., 4., 5., 6., 7., 8.]);
        let y = to_canonical(&pairing_scheme(J1), &x);
        assert_eq!(y.components(), &[2., 5., 6., 8., 1., 3., 4., 7.]);
        assert_eq!(from_canonical(&pairing_scheme(J1), &y), x);
    }

    #[test]
    fn canonical_form_of_equations() {
        // q̇ = ∂H/∂p and ṗ = -∂H/∂q in canonical coordinates
        let x = StateVector::from_vec(2, (0..16).map(|k| 0.1 * k as f64 - 0.7).collect()).unwrap();
        for id in StructureId::ALL {
            let scheme = pairing_scheme(id);
            for entry in corpus(2) {
                let h = parse(&entry.source, 2).unwrap();
                let xdot = to_canonical(&scheme, &rhs(id, &h, &x).unwrap());
                let g = to_canonical(&scheme, &grad(&h, &x).unwrap().to_state());
                let half = 8;
                for i in 0..half {
                    assert_eq!(xdot.components()[i], g.components()[half + i]);
                    assert_eq!(xdot.components()[half + i], -g.components()[i]);
                }
            }
        }
    }

    #[test]
    fn rk4_single_step_matches_rotation() {
        let h = parse("0.5*(x1^2 + x2^2)", 1).unwrap();
        let dt = 1e-3;
        let x = step(IntegratorId::Rk4, J1, &h, &e1(), dt).unwrap();
        assert!((x.components()[0] - dt.cos()).abs() <= 1e-12);
        assert!((x.components()[1] - dt.sin()).abs() <= 1e-12);
    }

    #[test]
    fn constant_hamiltonian_is_stationary() {
        let h = parse("2.5", 1).unwrap();
        let x = st(&[0.3, -1.0, 2.0, 0.0, 1.0, 4.0, 0.5, 9.0]);
        for integrator in IntegratorId::ALL {
            for id in StructureId::ALL {
                assert_eq!(step(integrator, id, &h, &x, 0.1).unwrap(), x);
            }
        }
    }

    #[test]
    fn verlet_commutes_with_pair_rotation() {
        // rotate the first two J1 pairs into each other: q-blocks (1, 4) and
        // p-blocks (0, 2) by the same angle
        let h = parse(&isotropic(1), 1).unwrap();
        let (c, s) = (0.6f64.cos(), 0.6f64.sin());
        let rot = |x: &StateVector| {
            let v = x.components();
            let mut out = v.to_vec();
            out[1] = c * v[1] - s * v[4];
            out[4] = s * v[1] + c * v[4];
            out[0] = c * v[0] - s * v[2];
            out[2] = s * v[0] + c * v[2];
            st(&out)
        };
        let x = st(&[0.3, -1.0, 2.0, 0.1, 1.0, 0.4, 0.5, 0.9]);
        let a = rot(&step(IntegratorId::Verlet, J1, &h, &x, 1e-3).unwrap());
        let b = step(IntegratorId::Verlet, J1, &h, &rot(&x), 1e-3).unwrap();
        assert!(a.max_abs_diff(&b) <= 1e-12);
    }

    #[test]
    fn verlet_is_reversible() {
        let x = st(&[0.3, -1.0, 2.0, 0.1, 1.0, 0.4, 0.5, 0.9]);
        for entry in corpus(1).iter().filter(|e| e.quadratic) {
            let h = parse(&entry.source, 1).unwrap();
            for id in StructureId::ALL {
                if !is_separable(&h, &pairing_scheme(id)) {
                    continue;
                }
                let fwd = step(IntegratorId::Verlet, id, &h, &x, 1e-2).unwrap();
                let back = step(IntegratorId::Verlet, id, &h, &fwd, -1e-2).unwrap();
                assert!(back.max_abs_diff(&x) <= 1e-12, "{} {id}", entry.name);
            }
        }
    }

    #[test]
    fn separability_detection() {
        let s1 = pairing_scheme(J1);
        let sep = |src: &str| is_separable(&parse(src, 1).unwrap(), &s1);
        assert!(sep(&isotropic(1)));
        assert!(sep("0.5*x1^2 + cos(x2) - 3*(x5^2)/2"));
        // x1 is a p-block, x2 a q-block for J1
        assert!(!sep("x1*x2"));
        assert!(!sep("sin(x1 + x2)"));
        assert!(sep("x1*x3 + x2*x5"));
        let h = parse("x1*x2", 1).unwrap();
        assert!(separability_warning(IntegratorId::Verlet, J1, &h).is_some());
        assert!(separability_warning(IntegratorId::Rk4, J1, &h).is_none());
    }

    #[test]
    fn implicit_midpoint_reports_divergence() {
        let h = parse("0.5*x1^2 + exp(x2)", 1).unwrap();
        let err = step(IntegratorId::ImplicitMidpoint, J1, &h, &st(&[0.0, 5.0, 0., 0., 0., 0., 0., 0.]), 1.0);
        assert!(matches!(err, Err(Error::MidpointDivergence { .. }) | Err(Error::Domain(_))));
    }

    #[test]
    fn integrate_examples() {
        let steps = ((std::f64::consts::FRAC_PI_2) / 1e-3).ceil() as usize;
        let traj = integrate(&circle_config(IntegratorId::Rk4, steps)).unwrap();
        assert_eq!(traj.len(), steps + 1);
        let t = steps as f64 * 1e-3;
        let last = traj.final_state().unwrap();
        assert!((last.components()[0] - t.cos()).abs() <= 1e-6);
        assert!((last.components()[1] - t.sin()).abs() <= 1e-6);
        assert!(matches!(
            integrate(&circle_config(IntegratorId::Rk4, 0)),
            Err(Error::InvalidConfig(_))
        ));
    }

    #[test]
    fn aborted_run_keeps_partial_samples() {
        let mut cfg = circle_config(IntegratorId::Rk4, 100);
        // for J1, ẋ3 = -∂H/∂x5 = -1 drives x3 into the log singularity
        cfg.hamiltonian = "x5 + log(x3 + 0.05)".into();
        cfg.x0 = vec![0.0; 8];
        cfg.dt = 1e-2;
        match integrate(&cfg) {
            Err(Error::Aborted { step, partial, .. }) => {
                assert!(step > 1);
                assert!(!partial.meta.valid);
                assert_eq!(partial.len(), step);
                assert!(partial.to_csv_string().lines().last().unwrap().starts_with("# invalid"));
            }
            other => panic!("expected abort, got {other:?}"),
        }
    }

    #[test]
    fn drift_examples() {
        let mut cfg = circle_config(IntegratorId::Verlet, 100);
        cfg.hamiltonian = "1".into();
        assert_eq!(energy_drift(&integrate(&cfg).unwrap()), 0.0);
        let short = energy_drift(&integrate(&circle_config(IntegratorId::Rk4, 2000)).unwrap());
        let long = energy_drift(&integrate(&circle_config(IntegratorId::Rk4, 4000)).unwrap());
        assert!(long >= short);
    }

    #[test]
    fn symplecticity_zero_steps() {
        let h = parse(&isotropic(1), 1).unwrap();
        let r = symplecticity_check(IntegratorId::Verlet, J1, &h, &e1(), 1e-3, 0).unwrap();
        assert_eq!(r, 0.0);
    }

    #[test]
    fn csv_roundtrip() {
        let traj = integrate(&circle_config(IntegratorId::Verlet, 5)).unwrap();
        let csv = traj.to_csv_string();
        assert!(csv.starts_with("t,x1,x2,x3,x4,x5,x6,x7,x8,H\n"));
        let back = Trajectory::read_csv(csv.as_bytes()).unwrap();
        assert_eq!(back.samples, traj.samples);
        let json = traj.to_json_string().unwrap();
        assert_eq!(Trajectory::from_json_str(&json).unwrap(), traj);
        assert!(Trajectory::read_csv("t,x1,H\n".as_bytes()).is_err());
    }
}
