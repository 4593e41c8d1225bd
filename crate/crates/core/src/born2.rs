//! Second-order (two-photon exchange) effective potentials.
//!
//! Both diagrams are written as sums over free intermediate pairs `|rs⟩`.
//! With plane waves and momentum conservation the double sum collapses to a
//! single loop integral `∫ d³k/(2π)³`, discretized on an [`IntermediateGrid`].
//!
//! ```text
//! ladder:  ⟨cd|V_L|ab⟩ =  ½ Σ [⟨cd|r⁻¹|rs⟩⟨rs|V^BM|ab⟩ + ⟨cd|V^BM|rs⟩⟨rs|r⁻¹|ab⟩] / (ε_a+ε_b−ε_r−ε_s)
//! crossed: ⟨cd|V_X|ab⟩ = −½ Σ [⟨cs|r⁻¹|rb⟩⟨rd|V^diff|as⟩ + ⟨cs|V^diff|rb⟩⟨rd|r⁻¹|as⟩] / (ε_a+ε_s−ε_d−ε_r)
//! ```
//!
//! For the crossed diagram particle 2 sees the two vertices in the opposite
//! order from particle 1, so spin operators are combined with
//! [`crossed_product`] instead of the ordinary matrix product.
//!
//! Pure Coulomb exchange is infrared divergent at second order: the
//! integrands have `1/q²` poles on the energy shell. An optional Yukawa mass
//! on the instantaneous factor makes every grid sum finite; without it the
//! grid values only show a convergence trend.

use std::f64::consts::PI;

use nalgebra::{Matrix4, Rotation3};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kinematics::{kinetic_energy, Vec3};
use crate::quadrature::{gauss_legendre_on, SphereRule};
use crate::spin::{SpinOperator, C64};

/// A two-body momentum-space interaction that may depend on the energy
/// transferred across it.
pub trait EnergyKernel: Sync {
    fn eval(&self, energy: f64, q: &Vec3) -> SpinOperator;
}

/// `4π/(q² + μ²)`; energy argument ignored.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StaticCoulomb {
    pub screening: f64,
}

impl StaticCoulomb {
    pub fn new(screening: f64) -> Self {
        StaticCoulomb { screening }
    }

    pub fn scalar(&self, q: &Vec3) -> f64 {
        4.0 * PI / (q.norm_squared() + self.screening * self.screening)
    }
}

impl EnergyKernel for StaticCoulomb {
    fn eval(&self, _energy: f64, q: &Vec3) -> SpinOperator {
        SpinOperator::identity().scale_real(self.scalar(q))
    }
}

/// `U(E, q) = E · K(q)` for a static `K`. Synthetic; used to exercise the
/// energy-dependent parts of the assembly.
#[derive(Clone, Copy, Debug)]
pub struct EnergyLinear<K>(pub K);

impl<K: EnergyKernel> EnergyKernel for EnergyLinear<K> {
    fn eval(&self, energy: f64, q: &Vec3) -> SpinOperator {
        self.0.eval(0.0, q).scale_real(energy)
    }
}

/// A fixed spin operator, independent of energy and transfer.
#[derive(Clone, Copy, Debug)]
pub struct ConstantKernel(pub SpinOperator);

impl EnergyKernel for ConstantKernel {
    fn eval(&self, _energy: f64, _q: &Vec3) -> SpinOperator {
        self.0
    }
}

/// `½[U(ε_a−ε_r) + U(ε_b−ε_s)]` for the transition `ab → rs`.
pub fn brown_mittleman(u: &dyn EnergyKernel, q: &Vec3, ea: f64, er: f64, eb: f64, es: f64) -> SpinOperator {
    (u.eval(ea - er, q) + u.eval(eb - es, q)).scale_real(0.5)
}

/// `−[U(ε_a−ε_r) − U(ε_b−ε_s)]` for the transition `ab → rs`.
pub fn diff_potential(u: &dyn EnergyKernel, q: &Vec3, ea: f64, er: f64, eb: f64, es: f64) -> SpinOperator {
    -(u.eval(ea - er, q) - u.eval(eb - es, q))
}

/// Spin structure of the crossed diagram: for `A = a1⊗a2`, `B = b1⊗b2`
/// returns `a1 b1 ⊗ b2 a2`, extended linearly.
pub fn crossed_product(a: &SpinOperator, b: &SpinOperator) -> SpinOperator {
    let (am, bm) = (a.matrix(), b.matrix());
    let idx = |s1: usize, s2: usize| 2 * s1 + s2;
    let mut out = Matrix4::zeros();
    for i1 in 0..2 {
        for i2 in 0..2 {
            for k1 in 0..2 {
                for k2 in 0..2 {
                    let mut acc = C64::new(0.0, 0.0);
                    for j1 in 0..2 {
                        for j2 in 0..2 {
                            acc += am[(idx(i1, j2), idx(j1, k2))] * bm[(idx(j1, i2), idx(k1, j2))];
                        }
                    }
                    out[(idx(i1, i2), idx(k1, k2))] = acc;
                }
            }
        }
    }
    SpinOperator::from_matrix(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Topology {
    Ladder,
    Crossed,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AngularRule {
    Lebedev26,
    Product { theta: usize, phi: usize },
}

impl AngularRule {
    fn rule(self) -> SphereRule {
        match self {
            AngularRule::Lebedev26 => SphereRule::lebedev26(),
            AngularRule::Product { theta, phi } => SphereRule::product(theta, phi),
        }
    }

    /// Direction in the rule's own frame that is mapped onto the pairing
    /// axis. Chosen so that no node lies in the plane orthogonal to it.
    fn pairing_axis(self) -> Vec3 {
        match self {
            AngularRule::Lebedev26 => Vec3::new(1.0, 2.0, 4.0).normalize(),
            AngularRule::Product { .. } => Vec3::z(),
        }
    }

    /// Whether every node has a partner with the opposite projection on the
    /// pairing axis (and equal weight).
    fn is_reflection_paired(self) -> bool {
        match self {
            AngularRule::Lebedev26 => true,
            AngularRule::Product { theta, .. } => theta.is_multiple_of(2),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridConfig {
    /// Radial nodes; split evenly between the region around the pole and the tail.
    pub radial: usize,
    pub angular: AngularRule,
    /// Fallback regulator `iη` (Hartree) for unpaired nodes close to the pole.
    pub eta: f64,
    /// Smallest `|denominator|` accepted on an unpaired node without `η`.
    pub floor: f64,
    /// Yukawa mass on the instantaneous `r⁻¹` factor.
    pub screening: f64,
}

impl Default for GridConfig {
    fn default() -> Self {
        GridConfig {
            radial: 16,
            angular: AngularRule::Lebedev26,
            eta: 1e-3,
            floor: 1e-8,
            screening: 0.0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct GridNode {
    pub r: Vec3,
    pub s: Vec3,
    /// Includes the `1/(2π)³` loop measure.
    pub weight: f64,
    pub denominator: f64,
    /// Node has a mirror partner with the opposite denominator.
    pub paired: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct IntermediateGrid {
    pub topology: Topology,
    /// External momenta `[a, b, c, d]` the grid was built for.
    pub external: [Vec3; 4],
    pub nodes: Vec<GridNode>,
    pub eta: f64,
    pub floor: f64,
    pub screening: f64,
}

fn check_external(a: &Vec3, b: &Vec3, c: &Vec3, d: &Vec3) -> Result<()> {
    let scale = 1.0f64.max(a.norm()).max(b.norm());
    let mismatch = (a + b - c - d).norm();
    if mismatch > 1e-12 * scale {
        return Err(Error::MomentumNotConserved { mismatch });
    }
    Ok(())
}

fn check_config(config: &GridConfig) -> Result<()> {
    if config.radial < 2 || !config.radial.is_multiple_of(2) {
        return Err(Error::InvalidInput("radial node count must be even and at least 2".into()));
    }
    if let AngularRule::Product { theta, phi } = config.angular {
        if theta == 0 || phi == 0 {
            return Err(Error::InvalidInput("angular rule is empty".into()));
        }
    }
    if !(config.eta >= 0.0 && config.floor >= 0.0 && config.screening >= 0.0) {
        return Err(Error::InvalidInput("eta, floor and screening must be non-negative".into()));
    }
    Ok(())
}

/// Rotation taking `from` onto `to` (both unit).
fn align(from: &Vec3, to: &Vec3) -> Rotation3<f64> {
    Rotation3::rotation_between(from, to).unwrap_or_else(|| {
        let helper = if from.x.abs() < 0.9 { Vec3::x() } else { Vec3::y() };
        let axis = nalgebra::Unit::new_normalize(from.cross(&helper));
        Rotation3::from_axis_angle(&axis, PI)
    })
}

fn oriented_rule(config: &GridConfig, axis: &Vec3) -> Vec<(Vec3, f64)> {
    let rule = config.angular.rule();
    let rot = align(&config.angular.pairing_axis(), axis);
    rule.directions
        .iter()
        .zip(&rule.weights)
        .map(|(d, w)| (rot * d, *w))
        .collect()
}

/// `k ∈ [0, ∞)` split as Gauss–Legendre on `[0, 2 k0]` (symmetric about
/// `k0`) and a mapped tail `k = 2 k0 + k0 t/(1−t)`.
fn radial_nodes(n: usize, k0: f64) -> Vec<(f64, f64)> {
    let half = n / 2;
    let (x, w) = gauss_legendre_on(half, 0.0, 2.0 * k0);
    let mut out: Vec<(f64, f64)> = x.into_iter().zip(w).collect();
    let (t, wt) = gauss_legendre_on(half, 0.0, 1.0);
    for (t, w) in t.into_iter().zip(wt) {
        let k = 2.0 * k0 + k0 * t / (1.0 - t);
        out.push((k, w * k0 / ((1.0 - t) * (1.0 - t))));
    }
    out
}

const LOOP_MEASURE: f64 = 1.0 / (8.0 * PI * PI * PI);

impl IntermediateGrid {
    /// Intermediate pairs `r = P/2 + k`, `s = P/2 − k` about the total
    /// momentum of `ab`; the pole is the sphere `|k| = |a − b|/2`.
    pub fn ladder(a: &Vec3, b: &Vec3, c: &Vec3, d: &Vec3, config: &GridConfig) -> Result<Self> {
        check_external(a, b, c, d)?;
        check_config(config)?;
        let half_p = 0.5 * (a + b);
        let k0 = 0.5 * (a - b).norm();
        if k0 <= 0.0 {
            return Err(Error::InvalidInput("ladder grid needs a nonzero relative momentum".into()));
        }
        let e_in = kinetic_energy(a) + kinetic_energy(b);
        let angular = oriented_rule(config, &Vec3::z());
        let half = config.radial / 2;
        let mut nodes = Vec::with_capacity(config.radial * angular.len());
        for (i, (k, wk)) in radial_nodes(config.radial, k0).into_iter().enumerate() {
            for (dir, wa) in &angular {
                let r = half_p + k * dir;
                let s = half_p - k * dir;
                nodes.push(GridNode {
                    r,
                    s,
                    weight: wk * k * k * wa * LOOP_MEASURE,
                    denominator: e_in - kinetic_energy(&r) - kinetic_energy(&s),
                    paired: i < half,
                });
            }
        }
        Ok(IntermediateGrid {
            topology: Topology::Ladder,
            external: [*a, *b, *c, *d],
            nodes,
            eta: config.eta,
            floor: config.floor,
            screening: config.screening,
        })
    }

    /// Intermediate `s = d + k`, `r = a + s − d`; the pole is the plane
    /// `k·(a − d) = 0`, paired by reflection through it.
    pub fn crossed(a: &Vec3, b: &Vec3, c: &Vec3, d: &Vec3, config: &GridConfig) -> Result<Self> {
        check_external(a, b, c, d)?;
        check_config(config)?;
        let t = a - d;
        let tn = t.norm();
        if tn <= 0.0 {
            return Err(Error::InvalidInput("crossed grid needs a ≠ d".into()));
        }
        let axis = t / tn;
        let angular = oriented_rule(config, &axis);
        let paired = config.angular.is_reflection_paired();
        let scale = 0.5 * tn.max((a - b).norm());
        let (x, w) = gauss_legendre_on(config.radial, 0.0, 1.0);
        let mut nodes = Vec::with_capacity(config.radial * angular.len());
        for (x, wx) in x.into_iter().zip(w) {
            let k = scale * x / (1.0 - x);
            let wk = wx * scale / ((1.0 - x) * (1.0 - x));
            for (dir, wa) in &angular {
                let s = d + k * dir;
                let r = a + s - d;
                nodes.push(GridNode {
                    r,
                    s,
                    weight: wk * k * k * wa * LOOP_MEASURE,
                    denominator: kinetic_energy(a) + kinetic_energy(&s) - kinetic_energy(d) - kinetic_energy(&r),
                    paired,
                });
            }
        }
        Ok(IntermediateGrid {
            topology: Topology::Crossed,
            external: [*a, *b, *c, *d],
            nodes,
            eta: config.eta,
            floor: config.floor,
            screening: config.screening,
        })
    }

    /// Grid with explicit nodes (no geometry checks beyond the external labels).
    pub fn from_nodes(
        topology: Topology,
        external: [Vec3; 4],
        nodes: Vec<GridNode>,
        eta: f64,
        floor: f64,
    ) -> Result<Self> {
        let [a, b, c, d] = external;
        check_external(&a, &b, &c, &d)?;
        Ok(IntermediateGrid { topology, external, nodes, eta, floor, screening: 0.0 })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    fn inverse_denominator(&self, node: &GridNode) -> Result<C64> {
        let d = node.denominator;
        if d != 0.0 && (node.paired || d.abs() >= self.floor) {
            return Ok(C64::new(1.0 / d, 0.0));
        }
        if self.eta > 0.0 {
            return Ok(C64::new(1.0, 0.0) / C64::new(d, self.eta));
        }
        Err(Error::DenominatorUnderflow { value: d, floor: self.floor })
    }

    fn require(&self, topology: Topology, a: &Vec3, b: &Vec3, c: &Vec3, d: &Vec3) -> Result<()> {
        if self.topology != topology {
            return Err(Error::InvalidInput(format!("grid built for {:?}, not {topology:?}", self.topology)));
        }
        let scale = 1.0f64.max(a.norm()).max(b.norm());
        let same = [a, b, c, d]
            .iter()
            .zip(&self.external)
            .all(|(x, y)| (*x - y).norm() <= 1e-12 * scale);
        if !same {
            return Err(Error::InvalidInput("grid was built for different external momenta".into()));
        }
        Ok(())
    }
}

/// Pairwise sum; fixed association order for a given length.
fn pairwise_sum(xs: &[SpinOperator]) -> SpinOperator {
    match xs.len() {
        0 => SpinOperator::zero(),
        1 => xs[0],
        n => pairwise_sum(&xs[..n / 2]) + pairwise_sum(&xs[n / 2..]),
    }
}

fn reduce<F>(grid: &IntermediateGrid, f: F) -> Result<SpinOperator>
where
    F: Fn(&GridNode) -> SpinOperator + Sync,
{
    let terms: Vec<SpinOperator> = grid
        .nodes
        .par_iter()
        .map(|node| {
            let inv = grid.inverse_denominator(node)?;
            Ok(f(node).scale(inv * node.weight))
        })
        .collect::<Result<_>>()?;
    Ok(pairwise_sum(&terms))
}

/// Ladder effective potential `⟨cd|V_L|ab⟩` on `grid`.
pub fn ladder_element(
    c: &Vec3,
    d: &Vec3,
    a: &Vec3,
    b: &Vec3,
    grid: &IntermediateGrid,
    u: &dyn EnergyKernel,
) -> Result<SpinOperator> {
    grid.require(Topology::Ladder, a, b, c, d)?;
    let inst = StaticCoulomb::new(grid.screening);
    let (ea, eb, ec, ed) = (kinetic_energy(a), kinetic_energy(b), kinetic_energy(c), kinetic_energy(d));
    let sum = reduce(grid, |n| {
        let (er, es) = (kinetic_energy(&n.r), kinetic_energy(&n.s));
        let q_out = n.r - c;
        let q_in = a - n.r;
        let first = inst.eval(0.0, &q_out) * brown_mittleman(u, &q_in, ea, er, eb, es);
        let second = brown_mittleman(u, &q_out, er, ec, es, ed) * inst.eval(0.0, &q_in);
        first + second
    })?;
    Ok(sum.scale_real(0.5))
}

/// Crossed effective potential `⟨cd|V_X|ab⟩` on `grid`.
pub fn crossed_element(
    c: &Vec3,
    d: &Vec3,
    a: &Vec3,
    b: &Vec3,
    grid: &IntermediateGrid,
    u: &dyn EnergyKernel,
) -> Result<SpinOperator> {
    grid.require(Topology::Crossed, a, b, c, d)?;
    let inst = StaticCoulomb::new(grid.screening);
    let (ea, eb, ec, ed) = (kinetic_energy(a), kinetic_energy(b), kinetic_energy(c), kinetic_energy(d));
    let sum = reduce(grid, |n| {
        let (er, es) = (kinetic_energy(&n.r), kinetic_energy(&n.s));
        // ⟨cs|·|rb⟩ and ⟨rd|·|as⟩
        let q_late = n.r - c;
        let q_early = a - n.r;
        let v_early = diff_potential(u, &q_early, ea, er, es, ed);
        let v_late = diff_potential(u, &q_late, er, ec, eb, es);
        crossed_product(&inst.eval(0.0, &q_late), &v_early) + crossed_product(&v_late, &inst.eval(0.0, &q_early))
    })?;
    Ok(sum.scale_real(-0.5))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConvergencePoint {
    pub radial: usize,
    pub angular_nodes: usize,
    pub eta: f64,
    /// `tr(V)/4`.
    pub value: C64,
    /// `|value − previous|`; absent on the first level.
    pub change: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConvergenceStudy {
    pub topology: Topology,
    pub points: Vec<ConvergencePoint>,
    /// Successive changes shrink at every level.
    pub decreasing: bool,
}

/// Repeats an element evaluation while doubling the radial nodes, refining
/// the angular rule and halving `η` at each level.
#[allow(clippy::too_many_arguments)]
pub fn convergence_study(
    topology: Topology,
    c: &Vec3,
    d: &Vec3,
    a: &Vec3,
    b: &Vec3,
    u: &dyn EnergyKernel,
    base: &GridConfig,
    levels: usize,
) -> Result<ConvergenceStudy> {
    let mut config = *base;
    let mut points: Vec<ConvergencePoint> = Vec::with_capacity(levels);
    for level in 0..levels {
        if level > 0 {
            config.radial *= 2;
            config.eta *= 0.5;
            config.angular = match config.angular {
                AngularRule::Lebedev26 => AngularRule::Product { theta: 8, phi: 16 },
                AngularRule::Product { theta, phi } => AngularRule::Product { theta: 2 * theta, phi: 2 * phi },
            };
        }
        let (grid, value) = match topology {
            Topology::Ladder => {
                let g = IntermediateGrid::ladder(a, b, c, d, &config)?;
                let v = ladder_element(c, d, a, b, &g, u)?;
                (g, v)
            }
            Topology::Crossed => {
                let g = IntermediateGrid::crossed(a, b, c, d, &config)?;
                let v = crossed_element(c, d, a, b, &g, u)?;
                (g, v)
            }
        };
        let value = value.trace() / 4.0;
        let change = points.last().map(|p| (value - p.value).norm());
        points.push(ConvergencePoint {
            radial: config.radial,
            angular_nodes: grid.len() / config.radial,
            eta: config.eta,
            value,
            change,
        });
    }
    let changes: Vec<f64> = points.iter().filter_map(|p| p.change).collect();
    let decreasing = changes.windows(2).all(|w| w[1] < w[0]);
    Ok(ConvergenceStudy { topology, points, decreasing })
}
