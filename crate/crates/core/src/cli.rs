//! Command-line driver: configuration, verification suite, and JSON-lines
//! output for amplitude, evolution, scan, oracle and second-order runs.
//!
//! Every line is one JSON object. The first line is a `header` record that
//! echoes the resolved configuration; every line carries `config_hash`
//! (SHA-256 of the resolved configuration as JSON) and `version`.
//!
//! Exit codes: 0 success, 1 computation or invariant failure, 2 usage or
//! configuration error.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};
use sha2::{Digest, Sha256};

use crate::born1::{first_born, selection_rule_report};
use crate::born2::{
    crossed_element, diff_potential, ladder_element, convergence_study, AngularRule, EnergyLinear, GridConfig,
    IntermediateGrid, StaticCoulomb, Topology,
};
use crate::entanglement::{concurrence, schmidt_decompose, summarize};
use crate::error::{Error, Result};
use crate::evolution::{scan_entanglement, scatter_spin, InitialSpin, Scan};
use crate::kinematics::{make_kinematics, phi_grid, theta_grid, Kinematics, Vec3};
use crate::oracle::{oracle_fourier, OracleConfig};
use crate::potentials::{term_kernel, Couplings, Term};
use crate::sampling::{product_symmetric_state, state, stream_rng, symmetric_state, unit_vector, unitary};
use crate::spin::{
    projected_spin_dot, singlet, swap_operator, total_spin, Axis, SpinOperator, SpinState, C64,
};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
pub const OUT_DIR_ENV: &str = "NRQED_SPIN_OUT_DIR";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VerifyConfig {
    pub samples: usize,
    pub momentum_scale: f64,
    pub k_grid: Vec<f64>,
    pub n_theta: usize,
    pub n_phi: usize,
    /// Largest final concurrence accepted as a triplet-mutability witness.
    pub mutability_threshold: f64,
    /// Random states per operator and entanglement check.
    pub random_states: usize,
    pub oracle_q: Vec<f64>,
    pub oracle_pairs: usize,
    pub oracle_tolerance: f64,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        VerifyConfig {
            samples: 200,
            momentum_scale: 1.0,
            k_grid: vec![0.5, 1.0, 2.0],
            n_theta: 64,
            n_phi: 16,
            mutability_threshold: 0.95,
            random_states: 100,
            oracle_q: vec![0.1, 0.5, 1.0, 2.0, 5.0],
            oracle_pairs: 5,
            oracle_tolerance: 1e-4,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AmplitudeConfig {
    pub k: f64,
    pub theta: f64,
    pub phi: f64,
}

impl Default for AmplitudeConfig {
    fn default() -> Self {
        AmplitudeConfig { k: 1.0, theta: std::f64::consts::FRAC_PI_2, phi: 0.0 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvolveConfig {
    pub initial: InitialSpin,
    pub k: f64,
    pub theta: f64,
    pub phi: f64,
}

impl Default for EvolveConfig {
    fn default() -> Self {
        EvolveConfig { initial: InitialSpin::UpUp, k: 1.0, theta: std::f64::consts::FRAC_PI_2, phi: 0.7 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScanConfig {
    pub initial: InitialSpin,
    pub k_grid: Vec<f64>,
    pub n_theta: usize,
    pub n_phi: usize,
}

impl Default for ScanConfig {
    fn default() -> Self {
        ScanConfig { initial: InitialSpin::PsiPlus, k_grid: vec![0.5, 1.0, 2.0], n_theta: 64, n_phi: 16 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OracleRunConfig {
    pub terms: Vec<Term>,
    pub q: Vec<f64>,
    pub direction: [f64; 3],
    pub p1: [f64; 3],
    pub p2: [f64; 3],
    pub quadrature: OracleConfig,
}

impl Default for OracleRunConfig {
    fn default() -> Self {
        OracleRunConfig {
            terms: vec![Term::Coulomb],
            q: vec![2.0],
            direction: [0.0, 0.0, 1.0],
            p1: [0.3, 0.1, -0.2],
            p2: [-0.1, 0.4, 0.2],
            quadrature: OracleConfig::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SecondBornConfig {
    pub k: f64,
    pub theta: f64,
    pub phi: f64,
    /// Total momentum of the pair.
    pub total: [f64; 3],
    pub grid: GridConfig,
    /// Yukawa mass of the synthetic energy-dependent kernel.
    pub mock_screening: f64,
    pub convergence_levels: usize,
}

impl Default for SecondBornConfig {
    fn default() -> Self {
        SecondBornConfig {
            k: 0.8,
            theta: 2.0,
            phi: 1.2,
            total: [0.3, -0.2, 0.5],
            grid: GridConfig::default(),
            mock_screening: 0.5,
            convergence_levels: 3,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Echo only; everything is in Hartree atomic units.
    pub units: String,
    pub alpha: f64,
    pub seed: u64,
    #[serde(skip_serializing)]
    pub output: Option<PathBuf>,
    pub verify: VerifyConfig,
    pub amplitude: AmplitudeConfig,
    pub evolve: EvolveConfig,
    pub scan: ScanConfig,
    pub oracle: OracleRunConfig,
    pub second_born: SecondBornConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            units: "atomic".into(),
            alpha: crate::kinematics::ALPHA,
            seed: 2024,
            output: None,
            verify: VerifyConfig::default(),
            amplitude: AmplitudeConfig::default(),
            evolve: EvolveConfig::default(),
            scan: ScanConfig::default(),
            oracle: OracleRunConfig::default(),
            second_born: SecondBornConfig::default(),
        }
    }
}

fn positive(name: &str, x: f64) -> std::result::Result<(), String> {
    if x.is_finite() && x > 0.0 {
        Ok(())
    } else {
        Err(format!("{name} must be positive and finite (got {x})"))
    }
}

fn grid(name: &str, xs: &[f64]) -> std::result::Result<(), String> {
    if xs.is_empty() {
        return Err(format!("{name} must be non-empty"));
    }
    xs.iter().try_for_each(|&x| positive(name, x))
}

impl RunConfig {
    pub fn validate(&self) -> std::result::Result<(), String> {
        if self.units != "atomic" {
            return Err(format!("units must be \"atomic\" (got {:?})", self.units));
        }
        if !(self.alpha.is_finite() && self.alpha >= 0.0) {
            return Err(format!("alpha must be finite and non-negative (got {})", self.alpha));
        }
        let v = &self.verify;
        if v.samples == 0 || v.random_states == 0 || v.oracle_pairs == 0 || v.n_theta == 0 || v.n_phi == 0 {
            return Err("verify counts must be at least 1".into());
        }
        positive("verify.momentum_scale", v.momentum_scale)?;
        grid("verify.k_grid", &v.k_grid)?;
        grid("verify.oracle_q", &v.oracle_q)?;
        positive("verify.oracle_tolerance", v.oracle_tolerance)?;
        if !(0.0..=1.0).contains(&v.mutability_threshold) {
            return Err("verify.mutability_threshold must lie in [0, 1]".into());
        }
        positive("amplitude.k", self.amplitude.k)?;
        positive("evolve.k", self.evolve.k)?;
        grid("scan.k_grid", &self.scan.k_grid)?;
        if self.scan.n_theta == 0 || self.scan.n_phi == 0 {
            return Err("scan grids must be non-empty".into());
        }
        if self.oracle.terms.is_empty() {
            return Err("oracle.terms must be non-empty".into());
        }
        grid("oracle.q", &self.oracle.q)?;
        if Vec3::from(self.oracle.direction).norm() == 0.0 {
            return Err("oracle.direction must be nonzero".into());
        }
        let sb = &self.second_born;
        positive("second_born.k", sb.k)?;
        positive("second_born.mock_screening", sb.mock_screening)?;
        if sb.convergence_levels == 0 {
            return Err("second_born.convergence_levels must be at least 1".into());
        }
        if sb.grid.radial < 2 || !sb.grid.radial.is_multiple_of(2) {
            return Err("second_born.grid.radial must be even and at least 2".into());
        }
        if let AngularRule::Product { theta, phi } = sb.grid.angular {
            if theta == 0 || phi == 0 {
                return Err("second_born.grid.angular must be non-empty".into());
            }
        }
        Ok(())
    }

    pub fn couplings(&self) -> Couplings {
        Couplings::with_alpha(self.alpha)
    }

    /// Hex SHA-256 of the resolved configuration serialized as JSON.
    pub fn hash(&self) -> String {
        let text = serde_json::to_string(self).expect("config serializes");
        Sha256::digest(text.as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
    }
}

#[derive(Parser, Debug)]
#[command(name = "nrqed-spin", version, about = "Spin entanglement in two-electron scattering")]
pub struct Cli {
    /// TOML configuration file
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Fine-structure constant override
    #[arg(long, global = true)]
    pub alpha: Option<f64>,
    /// Output file (JSON lines); default is stdout
    #[arg(long, global = true, value_name = "PATH")]
    pub out: Option<PathBuf>,
    /// Print a human-readable table to stderr
    #[arg(long, global = true)]
    pub summary: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    /// Run the full invariant suite
    Verify,
    /// First-Born amplitude operator at one kinematic point
    Amplitude,
    /// Scatter one initial spin state at one kinematic point
    Evolve,
    /// Entanglement scan over (k, θ, φ)
    Scan,
    /// Compare closed-form kernels with the Fourier oracle
    Oracle,
    /// Second-order ladder and crossed potentials
    SecondBorn,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Verify => "verify",
            Command::Amplitude => "amplitude",
            Command::Evolve => "evolve",
            Command::Scan => "scan",
            Command::Oracle => "oracle",
            Command::SecondBorn => "second-born",
        }
    }
}

/// Loads the configuration file (if any) and applies command-line overrides.
pub fn resolve_config(cli: &Cli) -> std::result::Result<RunConfig, String> {
    let mut config = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
            toml::from_str::<RunConfig>(&text).map_err(|e| format!("{}: {e}", path.display()))?
        }
        None => RunConfig::default(),
    };
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    if let Some(alpha) = cli.alpha {
        config.alpha = alpha;
    }
    if let Some(out) = &cli.out {
        config.output = Some(out.clone());
    }
    config.validate()?;
    Ok(config)
}

/// A record emitted by a command: its kind and its JSON payload.
#[derive(Clone, Debug)]
pub struct Record {
    pub kind: &'static str,
    pub body: Value,
}

impl Record {
    fn new<T: Serialize>(kind: &'static str, body: &T) -> Record {
        Record { kind, body: serde_json::to_value(body).expect("record serializes") }
    }
}

pub struct Outcome {
    pub records: Vec<Record>,
    pub passed: bool,
}

fn op_json(op: &SpinOperator) -> Vec<Vec<[f64; 2]>> {
    let m = op.matrix();
    (0..4).map(|i| (0..4).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect()).collect()
}

fn c_json(z: C64) -> [f64; 2] {
    [z.re, z.im]
}

fn check(name: &str, passed: bool, metrics: Value) -> Record {
    Record::new("check", &json!({ "name": name, "passed": passed, "metrics": metrics }))
}

// ---- verify -------------------------------------------------------------

fn scan_all(initial: InitialSpin, chi: &SpinState, v: &VerifyConfig, couplings: &Couplings) -> Result<Scan> {
    scan_entanglement(initial.label(), chi, &v.k_grid, &theta_grid(v.n_theta), &phi_grid(v.n_phi), couplings)
}

fn verify_selection_rule(c: &RunConfig) -> Result<Record> {
    let v = &c.verify;
    let r = selection_rule_report(v.samples, v.momentum_scale, c.seed, &c.couplings())?;
    Ok(check("selection_rule", r.passed, serde_json::to_value(&r).expect("serializes")))
}

fn verify_singlet_fixed_point(c: &RunConfig) -> Result<Record> {
    let scan = scan_all(InitialSpin::PsiMinus, &singlet(), &c.verify, &c.couplings())?;
    let s = &scan.summary;
    let min_f = s.min_fidelity_to_initial.unwrap_or(0.0);
    let passed = s.n_forbidden == 0 && min_f >= 1.0 - 1e-10;
    Ok(check(
        "singlet_fixed_point",
        passed,
        json!({ "points": s.n_points, "forbidden": s.n_forbidden, "min_fidelity": min_f,
                "min_concurrence": s.min_concurrence, "threshold": 1.0 - 1e-10 }),
    ))
}

fn verify_singlet_non_generation(c: &RunConfig) -> Result<Record> {
    let v = &c.verify;
    let mut inputs: Vec<(String, SpinState)> = [
        InitialSpin::PsiPlus,
        InitialSpin::PhiPlus,
        InitialSpin::PhiMinus,
        InitialSpin::UpUp,
        InitialSpin::DownDown,
    ]
    .iter()
    .map(|s| (s.label().to_string(), s.state()))
    .collect();
    let mut rng = stream_rng(c.seed, 1 << 20);
    for i in 0..4 {
        inputs.push((format!("product-symmetric-{i}"), product_symmetric_state(&mut rng)));
        inputs.push((format!("symmetric-{i}"), symmetric_state(&mut rng)));
    }
    let mut worst = 0.0f64;
    let mut sector = true;
    let mut points = 0;
    for (label, chi) in &inputs {
        let scan = scan_entanglement(label, chi, &v.k_grid, &theta_grid(v.n_theta), &phi_grid(v.n_phi), &c.couplings())?;
        worst = worst.max(scan.summary.max_singlet_overlap.unwrap_or(0.0));
        sector &= scan.summary.sector_preserved;
        points += scan.summary.n_points;
    }
    Ok(check(
        "singlet_non_generation",
        worst <= 1e-12 && sector,
        json!({ "initial_states": inputs.len(), "points": points, "max_singlet_overlap": worst,
                "sector_preserved": sector, "threshold": 1e-12 }),
    ))
}

fn verify_triplet_mutability(c: &RunConfig) -> Result<Record> {
    let scan = scan_all(InitialSpin::PsiPlus, &InitialSpin::PsiPlus.state(), &c.verify, &c.couplings())?;
    let s = &scan.summary;
    let min_c = s.min_concurrence.unwrap_or(1.0);
    let mut r = check(
        "triplet_mutability",
        min_c <= c.verify.mutability_threshold,
        json!({ "points": s.n_points, "forbidden": s.n_forbidden, "min_concurrence": min_c, "argmin": s.argmin,
                "threshold": c.verify.mutability_threshold }),
    );
    // The first-Born amplitude is a real matrix in the magic basis, so a
    // maximally entangled input never loses concurrence; reported, not gating.
    r.body["required"] = Value::Bool(false);
    Ok(r)
}

fn verify_kernel_oracle(c: &RunConfig) -> Result<Record> {
    let v = &c.verify;
    let mut rng = stream_rng(c.seed, 1 << 21);
    let pairs: Vec<(Vec3, Vec3)> = (0..v.oracle_pairs)
        .map(|_| {
            let k1 = 0.3 + 1.2 * rand::Rng::gen::<f64>(&mut rng);
            let k2 = 0.3 + 1.2 * rand::Rng::gen::<f64>(&mut rng);
            (k1 * unit_vector(&mut rng), k2 * unit_vector(&mut rng))
        })
        .collect();
    let config = OracleConfig { tolerance: v.oracle_tolerance, ..OracleConfig::default() };
    let mut worst = 0.0f64;
    let mut worst_at = Value::Null;
    let mut failures = Vec::new();
    for term in Term::NON_CONTACT {
        for (p1, p2) in &pairs {
            for &qn in &v.oracle_q {
                let q = qn * unit_vector(&mut rng);
                let exact = term_kernel(term, &q, p1, p2, c.alpha);
                match oracle_fourier(term, &q, p1, p2, c.alpha, &config) {
                    Ok(res) => {
                        let scale = exact.norm();
                        let rel = if scale == 0.0 { res.operator.norm() } else { (res.operator - exact).norm() / scale };
                        if rel > worst {
                            worst = rel;
                            worst_at = json!({ "term": term, "q": qn });
                        }
                    }
                    Err(e) => failures.push(format!("{} |q|={qn}: {e}", term.name())),
                }
            }
        }
    }
    Ok(check(
        "kernel_oracle",
        failures.is_empty() && worst <= v.oracle_tolerance,
        json!({ "max_relative_error": worst, "worst": worst_at, "failures": failures,
                "tolerance": v.oracle_tolerance, "evaluations": Term::NON_CONTACT.len() * pairs.len() * v.oracle_q.len() }),
    ))
}

fn second_born_external(sb: &SecondBornConfig) -> Result<[Vec3; 4]> {
    let cm = Kinematics::cm_elastic(sb.k, sb.theta, sb.phi)?;
    let h = 0.5 * Vec3::from(sb.total);
    let kin = make_kinematics(cm.p1_in + h, cm.p2_in + h, cm.p1_out + h, cm.p2_out + h)?;
    Ok([kin.p1_in, kin.p2_in, kin.p1_out, kin.p2_out])
}

fn verify_crossed(c: &RunConfig) -> Result<Record> {
    let sb = &c.second_born;
    let [a, b, cc, d] = second_born_external(sb)?;
    let coulomb = StaticCoulomb::new(0.0);
    let q = a - cc;
    let diff = diff_potential(&coulomb, &q, 0.7, -0.3, 1.1, 2.5);
    let mut max_norm = 0.0f64;
    let rules = [
        AngularRule::Lebedev26,
        AngularRule::Product { theta: 6, phi: 8 },
        AngularRule::Product { theta: 12, phi: 24 },
    ];
    for (angular, radial) in rules.iter().zip([16, 16, 32]) {
        let config = GridConfig { angular: *angular, radial, ..sb.grid };
        let grid = IntermediateGrid::crossed(&a, &b, &cc, &d, &config)?;
        max_norm = max_norm.max(crossed_element(&cc, &d, &a, &b, &grid, &coulomb)?.norm());
    }
    let mock_grid = IntermediateGrid::crossed(&a, &b, &cc, &d, &GridConfig { screening: sb.mock_screening, ..sb.grid })?;
    let mock = crossed_element(&cc, &d, &a, &b, &mock_grid, &EnergyLinear(StaticCoulomb::new(sb.mock_screening)))?;
    let passed = diff == SpinOperator::zero() && max_norm <= 1e-15 && mock.norm() > 0.0;
    Ok(check(
        "crossed_vanishing",
        passed,
        json!({ "diff_potential_norm": diff.norm(), "max_crossed_norm": max_norm, "grids": rules.len(),
                "mock_crossed_norm": mock.norm(), "threshold": 1e-15 }),
    ))
}

fn verify_ladder(c: &RunConfig) -> Result<Record> {
    let sb = &c.second_born;
    let [a, b, cc, d] = second_born_external(sb)?;
    let grid = IntermediateGrid::ladder(&a, &b, &cc, &d, &sb.grid)?;
    let v = ladder_element(&cc, &d, &a, &b, &grid, &StaticCoulomb::new(0.0))?;
    let n = v.norm();
    let off = v.sector_blocks().off_block_ratio();
    let comm = Axis::ALL.iter().map(|&ax| v.commutator(&total_spin(ax)).norm()).fold(0.0, f64::max) / n;
    let swap = v.commutator(&swap_operator()).norm() / n;
    let scalar = v.trace() / 4.0;
    let imag = scalar.im.abs() / scalar.norm();
    let passed = n > 0.0 && off <= 1e-14 && comm <= 1e-14 && swap <= 1e-14 && imag <= 1e-10;
    Ok(check(
        "ladder_spin_structure",
        passed,
        json!({ "scalar": c_json(scalar), "off_block_ratio": off, "max_spin_commutator": comm,
                "swap_commutator": swap, "relative_imaginary": imag, "threshold": 1e-14 }),
    ))
}

fn verify_operator_identities(c: &RunConfig) -> Result<Record> {
    let mut rng = stream_rng(c.seed, 1 << 22);
    let s = singlet();
    let mut worst_singlet = 0.0f64;
    let mut worst_closure = 0.0f64;
    for _ in 0..c.verify.random_states {
        let n = unit_vector(&mut rng);
        let op = projected_spin_dot(&n)?;
        worst_singlet = worst_singlet.max((op.apply(&s).vector() + s.vector()).norm());
        let chi = symmetric_state(&mut rng);
        let out = op.apply(&chi).amplitudes();
        worst_closure = worst_closure.max((out[1] - out[2]).norm());
    }
    Ok(check(
        "operator_identities",
        worst_singlet <= 1e-14 && worst_closure <= 1e-14,
        json!({ "samples": c.verify.random_states, "max_singlet_residual": worst_singlet,
                "max_antisymmetric_leak": worst_closure, "threshold": 1e-14 }),
    ))
}

fn verify_entanglement(c: &RunConfig) -> Result<Record> {
    let mut rng = stream_rng(c.seed, 1 << 23);
    let mut worst_lu = 0.0f64;
    let mut worst_schmidt = 0.0f64;
    for _ in 0..c.verify.random_states {
        let chi = state(&mut rng);
        let form = schmidt_decompose(&chi)?;
        worst_schmidt = worst_schmidt.max((form.reconstruct().vector() - chi.vector()).norm());
        let (a1, a2) = form.coefficients;
        worst_schmidt = worst_schmidt.max((2.0 * a1 * a2 - concurrence(&chi)?).abs());
        let u = SpinOperator::kron(&unitary(&mut rng), &unitary(&mut rng));
        let moved = u.apply(&chi).normalized()?;
        worst_lu = worst_lu.max((concurrence(&moved)? - concurrence(&chi)?).abs());
    }
    Ok(check(
        "entanglement_toolkit",
        worst_lu <= 1e-12 && worst_schmidt <= 1e-12,
        json!({ "samples": c.verify.random_states, "max_schmidt_residual": worst_schmidt,
                "max_local_unitary_change": worst_lu, "threshold": 1e-12 }),
    ))
}

pub fn cmd_verify(c: &RunConfig) -> Result<Outcome> {
    let checks: [fn(&RunConfig) -> Result<Record>; 9] = [
        verify_selection_rule,
        verify_singlet_fixed_point,
        verify_singlet_non_generation,
        verify_triplet_mutability,
        verify_kernel_oracle,
        verify_crossed,
        verify_ladder,
        verify_operator_identities,
        verify_entanglement,
    ];
    let mut records = Vec::with_capacity(checks.len() + 1);
    for f in checks {
        records.push(f(c)?);
    }
    let ok = |r: &Record| r.body["passed"] == Value::Bool(true);
    let required = |r: &Record| r.body["required"] != Value::Bool(false);
    let passed = records.iter().filter(|r| required(r)).all(ok);
    let n_passed = records.iter().filter(|r| ok(r)).count();
    let failed_optional: Vec<&Value> =
        records.iter().filter(|r| !required(r) && !ok(r)).map(|r| &r.body["name"]).collect();
    records.push(Record::new(
        "verify-summary",
        &json!({ "checks": checks.len(), "passed": n_passed, "required_passed": passed,
                 "failed_not_required": failed_optional }),
    ));
    Ok(Outcome { records, passed })
}

// ---- other commands -----------------------------------------------------

pub fn cmd_amplitude(c: &RunConfig) -> Result<Outcome> {
    let a = &c.amplitude;
    let kin = Kinematics::cm_elastic(a.k, a.theta, a.phi)?;
    let amp = first_born(&kin, &c.couplings())?;
    let blocks = amp.blocks();
    let body = json!({
        "k": a.k, "theta": a.theta, "phi": a.phi,
        "kinematics": kin,
        "direct": op_json(&amp.direct),
        "exchange": op_json(&amp.exchange),
        "total": op_json(&amp.total),
        "blocks": blocks,
        "off_block_ratio": blocks.off_block_ratio(),
        "ordering_defect": amp.ordering_defect,
    });
    Ok(Outcome { records: vec![Record { kind: "amplitude", body }], passed: true })
}

pub fn cmd_evolve(c: &RunConfig) -> Result<Outcome> {
    let e = &c.evolve;
    let chi = e.initial.state();
    let kin = Kinematics::cm_elastic(e.k, e.theta, e.phi)?;
    let out = scatter_spin(&chi, &kin, &c.couplings())?;
    let body = json!({
        "initial": e.initial.label(),
        "k": e.k, "theta": e.theta, "phi": e.phi,
        "before": summarize(&chi)?,
        "after": summarize(&out)?,
        "final_amplitudes": out.amplitudes().map(c_json),
        "final_class": out.exchange_class(),
        "singlet_overlap": singlet().inner(&out).norm(),
    });
    Ok(Outcome { records: vec![Record { kind: "evolve", body }], passed: true })
}

pub fn cmd_scan(c: &RunConfig) -> Result<Outcome> {
    let s = &c.scan;
    let scan = scan_entanglement(
        s.initial.label(),
        &s.initial.state(),
        &s.k_grid,
        &theta_grid(s.n_theta),
        &phi_grid(s.n_phi),
        &c.couplings(),
    )?;
    let mut records: Vec<Record> = scan.records.iter().map(|r| Record::new("scan-point", r)).collect();
    records.push(Record::new("scan-summary", &scan.summary));
    Ok(Outcome { records, passed: true })
}

pub fn cmd_oracle(c: &RunConfig) -> Result<Outcome> {
    let o = &c.oracle;
    let dir = Vec3::from(o.direction).normalize();
    let (p1, p2) = (Vec3::from(o.p1), Vec3::from(o.p2));
    let mut records = Vec::new();
    let mut passed = true;
    for &term in &o.terms {
        for &qn in &o.q {
            let q = qn * dir;
            let res = oracle_fourier(term, &q, &p1, &p2, c.alpha, &o.quadrature)?;
            let exact = term_kernel(term, &q, &p1, &p2, c.alpha);
            let rel = if exact.norm() == 0.0 { res.operator.norm() } else { (res.operator - exact).norm() / exact.norm() };
            let ok = res.analytic || rel <= o.quadrature.tolerance;
            passed &= ok;
            records.push(Record::new(
                "oracle",
                &json!({
                    "term": term, "q": qn, "analytic": res.analytic,
                    "scalar": c_json(res.operator.trace() / 4.0),
                    "oracle": op_json(&res.operator),
                    "closed_form": op_json(&exact),
                    "relative_error": rel, "passed": ok,
                    "partial_waves": res.partial_waves,
                }),
            ));
        }
    }
    Ok(Outcome { records, passed })
}

pub fn cmd_second_born(c: &RunConfig) -> Result<Outcome> {
    let sb = &c.second_born;
    let [a, b, cc, d] = second_born_external(sb)?;
    let coulomb = StaticCoulomb::new(0.0);
    let mock = EnergyLinear(StaticCoulomb::new(sb.mock_screening));
    let ladder_grid = IntermediateGrid::ladder(&a, &b, &cc, &d, &sb.grid)?;
    let crossed_grid = IntermediateGrid::crossed(&a, &b, &cc, &d, &sb.grid)?;
    let ladder = ladder_element(&cc, &d, &a, &b, &ladder_grid, &coulomb)?;
    let crossed = crossed_element(&cc, &d, &a, &b, &crossed_grid, &coulomb)?;
    let mock_grid = IntermediateGrid::crossed(&a, &b, &cc, &d, &GridConfig { screening: sb.mock_screening, ..sb.grid })?;
    let crossed_mock = crossed_element(&cc, &d, &a, &b, &mock_grid, &mock)?;
    let mut records = vec![
        Record::new(
            "ladder",
            &json!({
                "kernel": "coulomb", "nodes": ladder_grid.len(),
                "scalar": c_json(ladder.trace() / 4.0),
                "operator": op_json(&ladder),
                "off_block_ratio": ladder.sector_blocks().off_block_ratio(),
            }),
        ),
        Record::new(
            "crossed",
            &json!({ "kernel": "coulomb", "nodes": crossed_grid.len(), "norm": crossed.norm(), "operator": op_json(&crossed) }),
        ),
        Record::new(
            "crossed",
            &json!({ "kernel": "energy-linear", "nodes": mock_grid.len(), "norm": crossed_mock.norm(),
                     "scalar": c_json(crossed_mock.trace() / 4.0) }),
        ),
    ];
    for (topology, kernel, screened) in [
        (Topology::Ladder, "coulomb", false),
        (Topology::Ladder, "coulomb", true),
    ] {
        let mut grid = sb.grid;
        if screened {
            grid.screening = sb.mock_screening;
        }
        let u = StaticCoulomb::new(grid.screening);
        let study = convergence_study(topology, &cc, &d, &a, &b, &u, &grid, sb.convergence_levels)?;
        records.push(Record::new(
            "convergence",
            &json!({ "kernel": kernel, "screening": grid.screening, "study": study }),
        ));
    }
    let passed = crossed.norm() == 0.0 && ladder.sector_blocks().off_block_ratio() == 0.0;
    Ok(Outcome { records, passed })
}

// ---- output -------------------------------------------------------------

fn stamp(kind: &str, body: Value, hash: &str) -> Value {
    let mut map = match body {
        Value::Object(m) => m,
        other => {
            let mut m = Map::new();
            m.insert("value".into(), other);
            m
        }
    };
    map.insert("record".into(), Value::String(kind.to_string()));
    map.insert("config_hash".into(), Value::String(hash.to_string()));
    map.insert("version".into(), Value::String(VERSION.to_string()));
    Value::Object(map)
}

/// Renders the header plus all records as JSON lines.
pub fn render(command: Command, config: &RunConfig, outcome: &Outcome) -> String {
    let hash = config.hash();
    let header = json!({ "command": command.name(), "units": config.units, "config": config });
    let mut text = String::new();
    for (kind, body) in std::iter::once(("header", header)).chain(outcome.records.iter().map(|r| (r.kind, r.body.clone()))) {
        text.push_str(&serde_json::to_string(&stamp(kind, body, &hash)).expect("serializes"));
        text.push('\n');
    }
    text
}

fn summary_table(command: Command, outcome: &Outcome) -> String {
    let mut out = format!("{:<28} {:<6} detail\n", command.name(), "status");
    for r in &outcome.records {
        let name = r.body.get("name").and_then(Value::as_str).unwrap_or(r.kind);
        let status = match r.body.get("passed") {
            Some(Value::Bool(true)) => "PASS",
            Some(Value::Bool(false)) => "FAIL",
            _ => "-",
        };
        let detail = r.body.get("metrics").unwrap_or(&r.body);
        let mut detail = serde_json::to_string(detail).unwrap_or_default();
        if detail.len() > 120 {
            detail.truncate(117);
            detail.push_str("...");
        }
        out.push_str(&format!("{name:<28} {status:<6} {detail}\n"));
    }
    out.push_str(&format!("overall: {}\n", if outcome.passed { "PASS" } else { "FAIL" }));
    out
}

fn output_path(config: &RunConfig, command: Command) -> Option<PathBuf> {
    config.output.clone().or_else(|| {
        std::env::var_os(OUT_DIR_ENV).map(|dir| Path::new(&dir).join(format!("{}.jsonl", command.name())))
    })
}

pub fn execute(command: Command, config: &RunConfig) -> Result<Outcome> {
    match command {
        Command::Verify => cmd_verify(config),
        Command::Amplitude => cmd_amplitude(config),
        Command::Evolve => cmd_evolve(config),
        Command::Scan => cmd_scan(config),
        Command::Oracle => cmd_oracle(config),
        Command::SecondBorn => cmd_second_born(config),
    }
}

fn write_output(path: Option<&Path>, text: &str) -> std::io::Result<()> {
    match path {
        Some(p) => {
            if let Some(dir) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
                std::fs::create_dir_all(dir)?;
            }
            std::fs::write(p, text)
        }
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(text.as_bytes())?;
            stdout.flush()
        }
    }
}

/// Parses `args`, runs the command and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let config = match resolve_config(&cli) {
        Ok(c) => c,
        Err(msg) => {
            eprintln!("config error: {msg}");
            return 2;
        }
    };
    let outcome = match execute(cli.command, &config) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("{} failed: {e}", cli.command.name());
            let failed = Outcome {
                records: vec![Record::new("error", &json!({ "message": e.to_string() }))],
                passed: false,
            };
            let _ = write_output(output_path(&config, cli.command).as_deref(), &render(cli.command, &config, &failed));
            return match e {
                Error::InvalidInput(_) => 2,
                _ => 1,
            };
        }
    };
    if let Err(e) = write_output(output_path(&config, cli.command).as_deref(), &render(cli.command, &config, &outcome)) {
        eprintln!("cannot write output: {e}");
        return 1;
    }
    if cli.summary {
        eprint!("{}", summary_table(cli.command, &outcome));
    }
    if outcome.passed {
        0
    } else {
        1
    }
}
