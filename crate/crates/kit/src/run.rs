//! Configurations and runners for the command line subcommands. A config
//! file is merged key by key over the defaults, so `{}` is a valid config.

use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use hoermander_core::interp::{verify_orthogonal_sum, verify_prop_aniso, verify_prop_iso, verify_reiteration};
use hoermander_core::spectra::{inner_product, norm};
use hoermander_core::trial::trial_rng;
use hoermander_core::{
    build_psi, AdmissiblePair, CutoffProfile, FunctionParam, InterpParam, Lattice, RegularityIndex, SpectralField,
};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bench::{estimate_isomorphism, jump_study, BenchCase, JumpCase};
use crate::compat::{check_compatibility, CompatOptions};
use crate::conditions::{check_covering, check_petrovskii};
use crate::cylinder::Cylinder;
use crate::dft;
use crate::grid::GridFn;
use crate::io::read_cauchy;
use crate::problem::{Boundary, Geometry, ParabolicProblem};
use crate::quotient::{quotient_norm, BoxQuotient, CgOptions, QuotientError, SubdomainMask};
use crate::report::Report;
use crate::traces::{lift_t, trace_r, CauchyData, TraceMode};

/// Top-level keys of `user` replace those of `default`.
pub fn merge_config<T: Serialize + serde::de::DeserializeOwned>(default: &T, user: serde_json::Value) -> Result<T> {
    let mut base = serde_json::to_value(default)?;
    match (&mut base, user) {
        (serde_json::Value::Object(b), serde_json::Value::Object(u)) => b.extend(u),
        _ => bail!("config must be a JSON object"),
    }
    Ok(serde_json::from_value(base)?)
}

/// Command line values that replace config fields.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub resolutions: Option<Vec<usize>>,
}

fn heat(geometry: Geometry) -> ParabolicProblem {
    ParabolicProblem::heat(geometry, 0.5, Boundary::Dirichlet).expect("valid heat problem")
}

fn rel(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b).abs() / a.abs().max(b.abs())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum WeightKind {
    Isotropic,
    Parabolic,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NormConfig {
    /// One period per axis; the lattice is `n` points on every axis.
    pub periods: Vec<f64>,
    pub resolutions: Vec<usize>,
    pub s: f64,
    pub phi: FunctionParam,
    pub weight: WeightKind,
    pub trials: usize,
    pub seed: u64,
    /// Window length per axis as a fraction of `n`.
    pub window_fraction: f64,
    pub cg_tol: f64,
    /// CG iteration cap; `None` means 20 per masked point.
    pub cg_max_iter: Option<usize>,
    /// Field file to evaluate instead of random fields.
    pub field: Option<PathBuf>,
}

impl Default for NormConfig {
    fn default() -> Self {
        NormConfig {
            periods: vec![1.0, 1.0],
            resolutions: vec![16],
            s: 2.0,
            phi: FunctionParam::one(),
            weight: WeightKind::Parabolic,
            trials: 20,
            seed: 0,
            window_fraction: 0.5,
            cg_tol: 1e-11,
            cg_max_iter: None,
            field: None,
        }
    }
}

#[derive(Serialize)]
struct NormRecord {
    sizes: Vec<usize>,
    trial: usize,
    norm: f64,
    inner_product_deviation: f64,
    windows: Vec<usize>,
    quotient_cg: Option<f64>,
    quotient_dense: f64,
    quotient_deviation: Option<f64>,
    cg_iterations: usize,
    cg_error: Option<String>,
    pass: bool,
}

fn norm_record(idx: &RegularityIndex, u: &SpectralField, trial: usize, cfg: &NormConfig) -> Result<NormRecord> {
    let lat = u.lattice();
    let n = norm(idx, u)?;
    let ip = inner_product(idx, u, u)?;
    let ip_dev = rel(n * n, ip.re).max(ip.im.abs() / (n * n).max(f64::MIN_POSITIVE));
    let windows: Vec<usize> =
        lat.sizes().iter().map(|&s| ((s as f64 * cfg.window_fraction).round() as usize).clamp(1, s - 1)).collect();
    let mask = SubdomainMask::window(lat.clone(), &windows)?;
    let values = mask.restrict(&dft::inverse(u.coeffs(), lat.sizes()));
    let max_iter = Some(cfg.cg_max_iter.unwrap_or(20 * mask.len()));
    let dense = BoxQuotient::new(idx.clone(), lat.clone(), &windows)?.norm(&values)?;
    let (cg, cg_error) = match quotient_norm(idx, &values, &mask, CgOptions { tol: cfg.cg_tol, max_iter }) {
        Ok(sol) => (Some(sol), None),
        Err(e @ QuotientError::NoConvergence { .. }) => (None, Some(e.to_string())),
        Err(e) => return Err(e.into()),
    };
    let q_dev = cg.as_ref().map(|c| rel(c.value, dense));
    Ok(NormRecord {
        sizes: lat.sizes().to_vec(),
        trial,
        norm: n,
        inner_product_deviation: ip_dev,
        windows,
        quotient_cg: cg.as_ref().map(|c| c.value),
        quotient_dense: dense,
        quotient_deviation: q_dev,
        cg_iterations: cg.as_ref().map_or(max_iter.unwrap_or(0), |c| c.iterations),
        cg_error,
        pass: ip_dev <= 1e-12 && q_dev.is_some_and(|d| d <= 1e-8),
    })
}

pub fn run_norm(mut cfg: NormConfig, ov: &Overrides) -> Result<Report> {
    if let Some(s) = ov.seed {
        cfg.seed = s;
    }
    if let Some(r) = &ov.resolutions {
        cfg.resolutions = r.clone();
    }
    if !(cfg.window_fraction > 0.0 && cfg.window_fraction < 1.0) {
        bail!("window_fraction must lie in (0, 1)");
    }
    let dim = cfg.periods.len();
    let make = |dim| match cfg.weight {
        WeightKind::Isotropic => RegularityIndex::isotropic(cfg.s, cfg.phi.clone(), dim),
        WeightKind::Parabolic => RegularityIndex::parabolic(cfg.s, cfg.phi.clone(), dim),
    };
    let mut report = Report::new("norm");
    if let Some(path) = &cfg.field {
        let u = crate::io::read_field(path).with_context(|| format!("reading {}", path.display()))?;
        let idx = make(u.lattice().dim())?;
        report.push("field", &norm_record(&idx, &u, 0, &cfg)?)?;
        return Ok(report);
    }
    let idx = make(dim)?;
    for &n in &cfg.resolutions {
        let lat = Lattice::new(vec![n; dim], cfg.periods.clone())?;
        let recs: Vec<NormRecord> = (0..cfg.trials)
            .into_par_iter()
            .map(|t| {
                let u = SpectralField::random(lat.clone(), &mut trial_rng(cfg.seed, t as u64));
                norm_record(&idx, &u, t, &cfg)
            })
            .collect::<Result<_>>()?;
        for r in &recs {
            report.push("field", r)?;
        }
    }
    Ok(report)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OrderTuple {
    pub s0: f64,
    pub s: f64,
    pub s1: f64,
    #[serde(default)]
    pub lambda: f64,
    #[serde(default)]
    pub phi: FunctionParam,
}

/// Serializable interpolation parameters.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum ParamSpec {
    Power { theta: f64 },
    FromOrders { s0: f64, s: f64, s1: f64, #[serde(default)] phi: FunctionParam },
}

impl ParamSpec {
    pub fn build(&self) -> Result<InterpParam> {
        Ok(match self {
            ParamSpec::Power { theta } => InterpParam::power(*theta),
            ParamSpec::FromOrders { s0, s, s1, phi } => build_psi(*s0, *s, *s1, phi)?,
        })
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReiterationSpec {
    /// Orders of the parabolic pair `(X₀, X₁)`.
    pub s0: f64,
    pub s1: f64,
    pub alpha: ParamSpec,
    pub beta: ParamSpec,
    pub psi: ParamSpec,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InterpConfig {
    pub lattices: Vec<Lattice>,
    pub tuples: Vec<OrderTuple>,
    pub reiterations: Vec<ReiterationSpec>,
    pub trials: usize,
    pub seed: u64,
}

impl Default for InterpConfig {
    fn default() -> Self {
        let tp = 2.0 * std::f64::consts::PI;
        let log = |t: f64| FunctionParam::log_power(&[t]);
        let tuple = |s0, s, s1, lambda, phi| OrderTuple { s0, s, s1, lambda, phi };
        InterpConfig {
            lattices: vec![
                Lattice::new(vec![32, 32], vec![tp, tp]).expect("lattice"),
                Lattice::new(vec![64, 64], vec![tp, tp]).expect("lattice"),
                Lattice::new(vec![32, 32, 32], vec![tp, tp, tp]).expect("lattice"),
            ],
            tuples: vec![
                tuple(0.0, 1.0, 2.0, 0.0, FunctionParam::one()),
                tuple(0.0, 1.0, 2.0, 0.0, log(1.0)),
                tuple(0.0, 1.0, 2.0, 0.0, log(-1.0)),
                tuple(1.0, 2.5, 4.0, 1.0, log(1.0)),
                tuple(2.0, 3.0, 5.0, 2.0, log(-1.0)),
                tuple(-1.0, 0.5, 3.0, 0.0, FunctionParam::log_power(&[1.0, -0.5])),
            ],
            reiterations: vec![
                ReiterationSpec {
                    s0: 0.0,
                    s1: 4.0,
                    alpha: ParamSpec::FromOrders { s0: 0.0, s: 1.5, s1: 4.0, phi: log(1.0) },
                    beta: ParamSpec::FromOrders { s0: 0.0, s: 3.0, s1: 4.0, phi: log(1.0) },
                    psi: ParamSpec::Power { theta: 0.5 },
                },
                ReiterationSpec {
                    s0: 0.0,
                    s1: 2.0,
                    alpha: ParamSpec::Power { theta: 0.25 },
                    beta: ParamSpec::Power { theta: 0.75 },
                    psi: ParamSpec::FromOrders { s0: 0.0, s: 1.0, s1: 2.0, phi: log(-1.0) },
                },
            ],
            trials: 100,
            seed: 0,
        }
    }
}

pub fn run_interp(mut cfg: InterpConfig, ov: &Overrides) -> Result<Report> {
    if let Some(s) = ov.seed {
        cfg.seed = s;
    }
    if let Some(r) = &ov.resolutions {
        let mut lats: Vec<Lattice> = Vec::new();
        for l in &cfg.lattices {
            for &n in r {
                let lat = Lattice::new(vec![n; l.dim()], l.periods().to_vec())?;
                if !lats.contains(&lat) {
                    lats.push(lat);
                }
            }
        }
        cfg.lattices = lats;
    }
    let mut report = Report::new("interp-check");
    for lat in &cfg.lattices {
        for t in &cfg.tuples {
            if lat.dim() >= 2 {
                let r = verify_prop_aniso(t.s0, t.s, t.s1, t.lambda, &t.phi, lat, cfg.trials, cfg.seed)?;
                report.push("interpolation", &r)?;
            }
            let r = verify_prop_iso(t.s0, t.s, t.s1, t.lambda, &t.phi, lat, cfg.trials, cfg.seed)?;
            report.push("interpolation", &r)?;
        }
        for spec in &cfg.reiterations {
            let x0 = if lat.dim() >= 2 {
                RegularityIndex::parabolic(spec.s0, FunctionParam::one(), lat.dim())?
            } else {
                RegularityIndex::isotropic(spec.s0, FunctionParam::one(), 1)?
            };
            let pair = AdmissiblePair::new(x0.clone(), x0.with_order(spec.s1), lat.clone())?.diagonal()?;
            let r = verify_reiteration(&spec.alpha.build()?, &spec.beta.build()?, &spec.psi.build()?, &pair, cfg.trials, cfg.seed)?;
            report.push("reiteration", &r)?;
        }
    }
    if cfg.lattices.len() >= 2 {
        for t in &cfg.tuples {
            let pairs = cfg
                .lattices
                .iter()
                .map(|lat| {
                    let x0 = RegularityIndex::isotropic(t.s0 - t.lambda, FunctionParam::one(), lat.dim())?;
                    Ok(AdmissiblePair::new(x0.clone(), x0.with_order(t.s1 - t.lambda), lat.clone())?.diagonal()?)
                })
                .collect::<Result<Vec<_>>>()?;
            let psi = build_psi(t.s0, t.s, t.s1, &t.phi)?;
            report.push("orthogonal-sum", &verify_orthogonal_sum(&pairs, &psi, cfg.trials, cfg.seed)?)?;
        }
    }
    Ok(report)
}

fn default_heat_interval() -> ParabolicProblem {
    heat(Geometry::Interval)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CompatConfig {
    pub problem: ParabolicProblem,
    pub s_grid: Vec<f64>,
    pub resolutions: Vec<usize>,
    pub trials: usize,
    pub band: Option<usize>,
    pub seed: u64,
    pub tol: f64,
    pub accuracy: usize,
    /// Also check that data with a shifted boundary value are rejected.
    pub offset: bool,
    /// Sample count for the parabolicity and covering checks.
    pub condition_samples: usize,
}

impl Default for CompatConfig {
    fn default() -> Self {
        CompatConfig {
            problem: default_heat_interval(),
            s_grid: vec![3.0, 3.5, 4.6, 6.0],
            resolutions: vec![32],
            trials: 20,
            band: None,
            seed: 0,
            tol: 1e-8,
            accuracy: 4,
            offset: true,
            condition_samples: 2000,
        }
    }
}

#[derive(Serialize)]
struct CompatRecord {
    s: f64,
    resolution: usize,
    count: usize,
    upper_count: usize,
    jump_point: bool,
    trials: usize,
    /// Largest `ρ_k / max(1, scale_k)` over trials and conditions.
    max_relative_residual: f64,
    pass: bool,
}

#[derive(Serialize)]
struct OffsetRecord {
    s: f64,
    resolution: usize,
    residual: f64,
    rejected: bool,
    pass: bool,
}

pub fn run_compat(mut cfg: CompatConfig, ov: &Overrides) -> Result<Report> {
    if let Some(s) = ov.seed {
        cfg.seed = s;
    }
    if let Some(r) = &ov.resolutions {
        cfg.resolutions = r.clone();
    }
    let mut report = Report::new("compat-check");
    report.push("petrovskii", &check_petrovskii(&cfg.problem, cfg.condition_samples, cfg.seed))?;
    if cfg.problem.first_order().is_ok() {
        report.push("covering", &check_covering(&cfg.problem, cfg.condition_samples, cfg.seed)?)?;
    }
    let opts = CompatOptions { tol: cfg.tol, accuracy: cfg.accuracy };
    for &n in &cfg.resolutions {
        let cyl = Cylinder::new(cfg.problem.clone(), n)?;
        let band = cfg.band.unwrap_or(n / 4);
        let data: Vec<_> = (0..cfg.trials as u64)
            .into_par_iter()
            .map(|t| Ok(cyl.apply_lambda(&cyl.trial(cfg.seed, t, band)?)?))
            .collect::<Result<_>>()?;
        for &s in &cfg.s_grid {
            let reps: Vec<_> = data
                .par_iter()
                .map(|d| Ok(check_compatibility(&cyl, &d.f, &d.g, &d.h, s, opts)?))
                .collect::<Result<_>>()?;
            let worst = reps
                .iter()
                .flat_map(|r| r.residuals.iter().zip(&r.scales).map(|(x, sc)| x / sc.max(1.0)))
                .fold(0.0, f64::max);
            let first = &reps[0];
            report.push(
                "synthesized",
                &CompatRecord {
                    s,
                    resolution: n,
                    count: first.count,
                    upper_count: first.upper_count,
                    jump_point: first.jump_point,
                    trials: reps.len(),
                    max_relative_residual: worst,
                    pass: reps.iter().all(|r| r.pass && r.pass_upper.unwrap_or(true)),
                },
            )?;
            if cfg.offset && first.count > 0 {
                let d = &data[0];
                let g = [shift(&d.g[0]), shift(&d.g[1])];
                let r = check_compatibility(&cyl, &d.f, &g, &d.h, s, opts)?;
                let rejected = !r.pass;
                report.push(
                    "offset",
                    &OffsetRecord { s, resolution: n, residual: r.residuals[0], rejected, pass: rejected },
                )?;
            }
        }
    }
    Ok(report)
}

fn shift(g: &GridFn) -> GridFn {
    g.add_aligned(&GridFn::from_fn(g.axes().to_vec(), |_| Complex64::new(1.0, 0.0))).expect("same grid")
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TraceConfig {
    pub spatial: Lattice,
    pub time_size: usize,
    pub time_period: f64,
    pub r_list: Vec<usize>,
    pub trials: usize,
    pub seed: u64,
    /// Half-width of the centered time stencil; 0 differentiates spectrally.
    pub stencil: usize,
    pub cutoff: CutoffProfile,
    pub tol: f64,
    /// `(m, k)` pairs whose lift constants are reported.
    pub constants: Vec<[usize; 2]>,
    /// Cauchy data file to lift instead of random data.
    pub input: Option<PathBuf>,
}

impl Default for TraceConfig {
    fn default() -> Self {
        TraceConfig {
            spatial: Lattice::new(vec![64], vec![64.0]).expect("lattice"),
            time_size: 1024,
            time_period: 2.5,
            r_list: vec![1, 2, 3],
            trials: 100,
            seed: 0,
            stencil: 4,
            cutoff: CutoffProfile::default(),
            tol: 1e-9,
            constants: vec![[0, 0], [1, 0], [1, 1], [2, 1], [2, 2]],
            input: None,
        }
    }
}

#[derive(Serialize)]
struct TraceRecord {
    spatial_sizes: Vec<usize>,
    r: usize,
    trials: usize,
    max_relative_error: f64,
    pass: bool,
}

pub fn run_trace(mut cfg: TraceConfig, ov: &Overrides) -> Result<Report> {
    if let Some(s) = ov.seed {
        cfg.seed = s;
    }
    let mode = if cfg.stencil == 0 { TraceMode::Spectral } else { TraceMode::Stencil { p: cfg.stencil } };
    let mut report = Report::new("trace-check");
    let identity = |v: &CauchyData| -> Result<f64> {
        let mut sizes = v.lattice().sizes().to_vec();
        sizes.push(cfg.time_size);
        let mut periods = v.lattice().periods().to_vec();
        periods.push(cfg.time_period);
        let u = lift_t(v, &cfg.cutoff, &Lattice::new(sizes, periods)?)?;
        Ok(v.max_relative_error(&trace_r(&u, v.r(), mode)?))
    };
    if let Some(path) = &cfg.input {
        let v = read_cauchy(path).with_context(|| format!("reading {}", path.display()))?;
        let err = identity(&v)?;
        report.push(
            "identity",
            &TraceRecord { spatial_sizes: v.lattice().sizes().to_vec(), r: v.r(), trials: 1, max_relative_error: err, pass: err <= cfg.tol },
        )?;
    } else {
        let spatials: Vec<Lattice> = match &ov.resolutions {
            Some(r) => r
                .iter()
                .map(|&n| Lattice::new(vec![n; cfg.spatial.dim()], cfg.spatial.periods().to_vec()))
                .collect::<Result<_, _>>()?,
            None => vec![cfg.spatial.clone()],
        };
        for spatial in &spatials {
            for &r in &cfg.r_list {
                let errs: Vec<f64> = (0..cfg.trials as u64)
                    .into_par_iter()
                    .map(|t| identity(&CauchyData::random(spatial.clone(), r, cfg.seed.wrapping_mul(1000).wrapping_add(t))?))
                    .collect::<Result<_>>()?;
                let worst = errs.iter().cloned().fold(0.0, f64::max);
                report.push(
                    "identity",
                    &TraceRecord {
                        spatial_sizes: spatial.sizes().to_vec(),
                        r,
                        trials: errs.len(),
                        max_relative_error: worst,
                        pass: worst <= cfg.tol,
                    },
                )?;
            }
        }
    }
    for &[m, k] in &cfg.constants {
        report.push("lift-constants", &cfg.cutoff.lift_constants(m, k))?;
    }
    Ok(report)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IsoConfig {
    pub cases: Vec<BenchCase>,
}

impl Default for IsoConfig {
    fn default() -> Self {
        let case = |geometry, round_trip_trials| BenchCase {
            problem: heat(geometry),
            s_grid: vec![2.6, 3.0, 4.0, 4.6],
            phi_list: vec![FunctionParam::one(), FunctionParam::log_power(&[1.0]), FunctionParam::log_power(&[-1.0])],
            trial_count: 30,
            resolutions: vec![16, 32],
            seed: 0,
            band: None,
            jump_study: false,
            round_trip_trials,
        };
        IsoConfig { cases: vec![case(Geometry::Interval, 10), case(Geometry::PeriodicStrip, 0)] }
    }
}

#[derive(Serialize)]
struct CaseSummary {
    geometry: Geometry,
    l: u8,
    resolutions: Vec<usize>,
    band: usize,
    seed: u64,
    pass: bool,
}

pub fn run_iso(mut cfg: IsoConfig, ov: &Overrides) -> Result<Report> {
    let mut report = Report::new("iso-bench");
    for case in cfg.cases.iter_mut() {
        if let Some(s) = ov.seed {
            case.seed = s;
        }
        if let Some(r) = &ov.resolutions {
            case.resolutions = r.clone();
        }
        let rep = estimate_isomorphism(case)?;
        for row in &rep.rows {
            report.push("cell", row)?;
        }
        for row in &rep.drift {
            report.push("drift", row)?;
        }
        for row in &rep.round_trip {
            report.push("round-trip", row)?;
        }
        report.push(
            "case",
            &CaseSummary {
                geometry: case.problem.geometry(),
                l: case.problem.boundary_kind().l(),
                resolutions: case.resolutions.clone(),
                band: rep.band,
                seed: rep.seed,
                pass: rep.pass,
            },
        )?;
    }
    Ok(report)
}

pub fn default_jump_case() -> JumpCase {
    JumpCase {
        problem: heat(Geometry::Interval),
        s_star: 3.5,
        eps: vec![0.1, 0.2],
        trial_count: 30,
        resolutions: vec![16, 32],
        seed: 0,
        band: None,
        phi: FunctionParam::one(),
        cutoff: CutoffProfile::default(),
    }
}

#[derive(Serialize)]
struct JumpSummary {
    s_star: f64,
    eps: Vec<f64>,
    r: usize,
    envelope_drift: f64,
    violating_growth: bool,
    pass: bool,
}

pub fn run_jump(mut case: JumpCase, ov: &Overrides) -> Result<Report> {
    if let Some(s) = ov.seed {
        case.seed = s;
    }
    if let Some(r) = &ov.resolutions {
        case.resolutions = r.clone();
    }
    let rep = jump_study(&case)?;
    let mut report = Report::new("jump-study");
    for row in &rep.rows {
        report.push("resolution", row)?;
    }
    report.push(
        "summary",
        &JumpSummary {
            s_star: rep.s_star,
            eps: rep.eps.clone(),
            r: rep.r,
            envelope_drift: rep.envelope_drift,
            violating_growth: rep.violating_growth,
            pass: rep.pass,
        },
    )?;
    Ok(report)
}
