//! One function per subcommand: build inputs from the configuration, run
//! the core routine and tabulate the result with its assertions.

use std::sync::Arc;

use carleman_core::cone::{
    c3_constant, membership, sampled_min_time, sweep_cover, vertex, vertex_fraction, ConeSpec,
    Membership, SweepOptions,
};
use carleman_core::field_kit::{derive_seed, sample_brownian, AnalyticFn, FnSpec};
use carleman_core::identity::{
    conjugation_residual, conjugation_suite, d_suite, expansion_suite, fix_local_parameters,
    identity_suite, inequality_gap, qv_check, random_cases, InequalityPreset, InequalitySetup,
    Region, QV_TOL,
};
use carleman_core::propagation::{run_propagation, ucp_decay, PropagationSetup, SupportSet, UcpSetup, HALO_CELLS};
use carleman_core::solver::{solve, Coefficients, SolveOptions, WaveState};
use carleman_core::weights::{
    assumption_check, check_tau, default_fit_lambdas, psd_certificate, AssumptionPreset, WeightFamily,
    WeightParams, PSD_FLOOR,
};
use carleman_core::{Point, SymMatrix};
use rayon::prelude::*;

use crate::config::{function, CoefficientConfig, DataConfig, GridConfig, LabConfig, PointConfig};
use crate::error::CliError;
use crate::table::{format_float, Cell, ResultTable};

pub const DEFAULT_SEED: u64 = 20260101;

/// A named pass/fail claim checked by a subcommand.
#[derive(Clone, Debug, PartialEq)]
pub struct Assertion {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

impl Assertion {
    fn new(name: &str, pass: bool, detail: String) -> Self {
        Assertion {
            name: name.to_string(),
            pass,
            detail,
        }
    }
}

/// Columns a plot script draws, `y` against `x`.
#[derive(Clone, Debug, PartialEq)]
pub struct Plot {
    pub x: String,
    pub y: String,
    pub log_y: bool,
}

#[derive(Clone, Debug)]
pub struct Outcome {
    pub table: ResultTable,
    pub assertions: Vec<Assertion>,
    pub plot: Option<Plot>,
    /// Seed actually used, when the experiment draws random numbers.
    pub seed: Option<u64>,
}

impl Outcome {
    fn new(table: ResultTable) -> Self {
        Outcome {
            table,
            assertions: Vec::new(),
            plot: None,
            seed: None,
        }
    }

    fn assert(&mut self, name: &str, pass: bool, detail: String) {
        self.assertions.push(Assertion::new(name, pass, detail));
    }

    fn plot(mut self, x: &str, y: &str, log_y: bool) -> Self {
        self.plot = Some(Plot {
            x: x.into(),
            y: y.into(),
            log_y,
        });
        self
    }

    pub fn passed(&self) -> bool {
        self.assertions.iter().all(|a| a.pass)
    }
}

fn seed(cfg: &LabConfig) -> u64 {
    cfg.seed.unwrap_or(DEFAULT_SEED)
}

fn count(cfg: &LabConfig, default: usize) -> usize {
    cfg.suite.as_ref().and_then(|s| s.count).unwrap_or(default)
}

fn fmax(it: impl Iterator<Item = f64>) -> f64 {
    it.fold(0.0, f64::max)
}

fn space_cells(x: &[f64]) -> (Cell, Cell) {
    let get = |i: usize| x.get(i).map_or(Cell::Text(String::new()), |v| Cell::Num(*v));
    (get(0), get(1))
}

fn coords_text(x: &[f64]) -> String {
    x.iter().map(|v| format_float(*v)).collect::<Vec<_>>().join(" ")
}

fn bump(center: f64, radius: f64) -> FnSpec {
    FnSpec::SpatialBump {
        center: vec![center],
        radius,
        power: 4,
    }
}

fn grid_or(cfg: &LabConfig, bounds: (f64, f64), dx: f64, dt: f64, t_max: f64) -> GridConfig {
    cfg.grid.clone().unwrap_or(GridConfig {
        bounds: vec![bounds],
        dx,
        dt,
        t_max,
        cfl: None,
    })
}

fn coeffs_or(cfg: &LabConfig, n: usize, default: CoefficientConfig) -> Result<Coefficients, CliError> {
    cfg.coefficients.as_ref().unwrap_or(&default).build(n)
}

fn data_or(cfg: &LabConfig, n: usize, u0: FnSpec) -> Result<(Arc<dyn AnalyticFn>, Arc<dyn AnalyticFn>), CliError> {
    let d = cfg.data.clone().unwrap_or(DataConfig {
        u0,
        u1: FnSpec::constant(0.0),
    });
    Ok((function(&d.u0, n, "u0")?, function(&d.u1, n, "u1")?))
}

fn paths_or(cfg: &LabConfig, default: usize) -> Result<usize, CliError> {
    let p = cfg.paths.unwrap_or(default);
    if p == 0 {
        return Err(CliError::Config("paths must be positive".into()));
    }
    Ok(p)
}

pub fn identity_check(cfg: &LabConfig) -> Result<Outcome, CliError> {
    let seed = seed(cfg);
    let results = identity_suite(seed, count(cfg, 200))?;
    let mut t = ResultTable::new(&[
        "case", "dim", "lambda", "gamma", "mu", "t", "x1", "x2", "lhs", "rhs", "residual",
        "rel_residual", "tolerance", "pass",
    ]);
    for (c, r) in &results {
        let (x1, x2) = space_cells(c.point.space());
        t.push(vec![
            c.index.into(),
            c.point.dim.into(),
            c.params.lambda.into(),
            c.params.gamma.into(),
            c.params.mu.into(),
            c.point.t.into(),
            x1,
            x2,
            r.lhs.into(),
            r.rhs.into(),
            r.residual.into(),
            r.relative_residual().into(),
            r.tolerance.into(),
            r.pass.into(),
        ]);
    }
    let worst = fmax(results.iter().map(|(_, r)| r.relative_residual()));
    let mut o = Outcome::new(t);
    o.seed = Some(seed);
    o.assert(
        "pointwise identity",
        results.iter().all(|(_, r)| r.pass),
        format!("{} cases, max relative residual {worst:e}", results.len()),
    );
    Ok(o.plot("case", "rel_residual", true))
}

pub fn conjugation_check(cfg: &LabConfig) -> Result<Outcome, CliError> {
    let seed = seed(cfg);
    let n = count(cfg, 100);
    let rows: Vec<(usize, f64, f64, carleman_core::identity::ConjugationReport)> = match &cfg.cutoff {
        Some(cut) => {
            cut.validate()?;
            random_cases(seed, n)?
                .par_iter()
                .map(|c| {
                    let r = conjugation_residual(&c.w, &c.family(), cut, &c.point)?;
                    Ok((c.index, cut.c2, cut.eps, r))
                })
                .collect::<Result<_, carleman_core::LabError>>()?
        }
        None => conjugation_suite(seed, n)?
            .into_iter()
            .map(|(c, r)| (c.case.index, c.cutoff.c2, c.cutoff.eps, r))
            .collect(),
    };
    let mut t = ResultTable::new(&[
        "case", "c2", "eps", "chi", "conjugation_rel", "cutoff_rel", "pass",
    ]);
    for (i, c2, eps, r) in &rows {
        t.push(vec![
            (*i).into(),
            (*c2).into(),
            (*eps).into(),
            r.chi.into(),
            r.conjugation.relative_residual().into(),
            r.cutoff.relative_residual().into(),
            r.pass().into(),
        ]);
    }
    let worst = fmax(
        rows.iter()
            .map(|r| r.3.conjugation.relative_residual().max(r.3.cutoff.relative_residual())),
    );
    let mut o = Outcome::new(t);
    o.seed = Some(seed);
    o.assert(
        "conjugation and cutoff identities",
        rows.iter().all(|r| r.3.pass()),
        format!("{} points, max relative residual {worst:e}", rows.len()),
    );
    Ok(o.plot("case", "conjugation_rel", true))
}

/// Tolerances of the λ-fits of `𝓐` and `𝓑`.
pub const A_FIT_TOL: f64 = 1e-6;
pub const B_FIT_TOL: f64 = 1e-5;

pub fn expansion_check(cfg: &LabConfig) -> Result<Outcome, CliError> {
    let seed = seed(cfg);
    let lambdas = cfg
        .weights
        .as_ref()
        .and_then(|w| w.lambdas.clone())
        .unwrap_or_else(default_fit_lambdas);
    let results = expansion_suite(seed, count(cfg, 50), &lambdas)?;
    let mut t = ResultTable::new(&[
        "case", "a_expected", "a_fit", "a_rel_err", "b_expected", "b_fit", "b_rel_err",
    ]);
    for (c, r) in &results {
        t.push(vec![
            c.index.into(),
            r.a_expected.into(),
            r.a_fit.into(),
            r.a_rel_err.into(),
            r.b_expected.into(),
            r.b_fit.into(),
            r.b_rel_err.into(),
        ]);
    }
    let a = fmax(results.iter().map(|(_, r)| r.a_rel_err));
    let b = fmax(results.iter().map(|(_, r)| r.b_rel_err));
    let mut o = Outcome::new(t);
    o.seed = Some(seed);
    o.assert("A leading coefficient", a <= A_FIT_TOL, format!("max relative error {a:e}"));
    o.assert("B leading coefficient", b <= B_FIT_TOL, format!("max relative error {b:e}"));
    Ok(o.plot("case", "b_rel_err", true))
}

pub const D2_TOL: f64 = 1e-9;

pub fn d2_check(cfg: &LabConfig) -> Result<Outcome, CliError> {
    let seed = seed(cfg);
    let results = d_suite(seed, count(cfg, 500))?;
    let mut t = ResultTable::new(&["case", "d1", "d2", "d2_div", "d2_scale", "d3", "gap"]);
    for (c, q) in &results {
        t.push(vec![
            c.index.into(),
            q.d1.into(),
            q.d2.into(),
            q.d2_div.into(),
            q.d2_scale.into(),
            q.d3.into(),
            q.d2_relative_gap().into(),
        ]);
    }
    let worst = fmax(results.iter().map(|(_, q)| q.d2_relative_gap()));
    let mut o = Outcome::new(t);
    o.seed = Some(seed);
    o.assert(
        "D2 forms agree",
        worst <= D2_TOL,
        format!("{} samples, max relative gap {worst:e}", results.len()),
    );
    Ok(o.plot("case", "gap", true))
}

pub fn psd_check(cfg: &LabConfig) -> Result<Outcome, CliError> {
    let seed = seed(cfg);
    let pc = cfg.psd.clone().unwrap_or_default();
    let x0 = pc.x0.unwrap_or_else(|| vec![2.0, 0.0]);
    if x0.is_empty() || x0.len() > 2 {
        return Err(CliError::Config("psd x0 needs one or two coordinates".into()));
    }
    let g = function(&pc.g.unwrap_or(FnSpec::Norm { x0: vec![] }), x0.len(), "g")?;
    let cert = psd_certificate(g.as_ref(), &x0, pc.samples.unwrap_or(50), seed)?;
    let jet = g.jet2(&Point::new(cert.t0, &x0))?;
    let n = x0.len();
    let mut h = SymMatrix::zeros(n);
    for j in 0..n {
        for k in j..n {
            h.set(j, k, jet.hess_xx(j, k));
        }
    }
    let probes: Vec<f64> = pc.probe_taus.unwrap_or_else(|| vec![0.25, 0.5]);
    let mut t = ResultTable::new(&["stage", "tau", "min_eig", "accepted"]);
    let mut probe_ok = true;
    for &tau in &probes {
        if !(tau > 0.0) {
            return Err(CliError::Config(format!("probe tau must be positive, got {tau}")));
        }
        let r = check_tau(&h, tau);
        if tau < cert.tau && r.accepted {
            probe_ok = false;
        }
        t.push(vec!["probe".into(), tau.into(), r.min_eig.into(), r.accepted.into()]);
    }
    for r in &cert.trials {
        t.push(vec!["search".into(), r.tau.into(), r.min_eig.into(), r.accepted.into()]);
    }
    t.push(vec![
        "tangent".into(),
        cert.tau.into(),
        cert.tangent_min_form.into(),
        cert.tangent_pass.into(),
    ]);
    t.push(vec![
        "full_matrix".into(),
        cert.tau.into(),
        cert.m_full_min_eig.into(),
        (cert.m_full_min_eig >= -PSD_FLOOR).into(),
    ]);
    let mut closed_gap: f64 = 0.0;
    for j in 0..n {
        for k in 0..n {
            let (a, b) = (cert.m_tilde.get(j, k), cert.m_tilde_closed.get(j, k));
            closed_gap = closed_gap.max((a - b).abs() / b.abs().max(1.0));
        }
    }
    let mut o = Outcome::new(t);
    o.seed = Some(seed);
    o.assert(
        "smaller tau rejected",
        probe_ok,
        format!("probes {probes:?} against certified tau {}", cert.tau),
    );
    o.assert(
        "certified tau accepted",
        cert.min_eig >= PSD_FLOOR,
        format!("tau {} with min eigenvalue {:e}", cert.tau, cert.min_eig),
    );
    o.assert(
        "tangent quadratic form",
        cert.tangent_pass,
        format!("min over {} tangent vectors {:e}", cert.tangent_samples, cert.tangent_min_form),
    );
    o.assert(
        "closed form of M tilde",
        closed_gap <= 1e-9,
        format!("max relative entry gap {closed_gap:e}"),
    );
    Ok(o)
}

pub fn assumption_cmd(cfg: &LabConfig) -> Result<Outcome, CliError> {
    let ac = cfg.assumption.clone().unwrap_or_default();
    let preset = ac.preset.unwrap_or(AssumptionPreset::A21);
    let points = ac.points.unwrap_or_else(|| {
        vec![
            PointConfig { t: 0.0, x: vec![0.0] },
            PointConfig { t: 0.1, x: vec![0.2] },
            PointConfig { t: -0.1, x: vec![-0.3] },
        ]
    });
    if points.is_empty() {
        return Err(CliError::Config("assumption-check needs at least one point".into()));
    }
    let rho_spec = ac.rho.unwrap_or_else(|| {
        // ρ = t + ½t² + ½|x|²: 𝓜(0) is the identity
        FnSpec::sum(vec![
            FnSpec::time(),
            FnSpec::Quadric { c: 0.0, at: 0.5, ax: 0.5, t0: 0.0, x0: vec![] },
        ])
    });
    let varrho_spec = ac.varrho.unwrap_or(FnSpec::constant(0.0));
    let c0 = ac.c0.unwrap_or(0.5);
    let b1_norm = ac.b1_norm.unwrap_or(0.0);
    let mut t = ResultTable::new(&[
        "t", "x1", "x2", "preset", "min_eig", "matrix_pass", "rho_t", "c0_pass", "pass",
    ]);
    let mut all = true;
    let mut worst = f64::INFINITY;
    for pc in &points {
        let p = pc.build()?;
        let rho = function(&rho_spec, p.dim, "rho")?;
        let varrho = function(&varrho_spec, p.dim, "varrho")?;
        let r = assumption_check(&rho.jet2(&p)?, varrho.value(&p), preset, c0, b1_norm);
        all &= r.pass;
        worst = worst.min(r.min_eig);
        let (x1, x2) = space_cells(p.space());
        t.push(vec![
            p.t.into(),
            x1,
            x2,
            format!("{preset:?}").into(),
            r.min_eig.into(),
            r.matrix_pass.into(),
            r.rho_t.into(),
            r.c0_pass.map_or(Cell::Text(String::new()), Cell::Bool),
            r.pass.into(),
        ]);
    }
    let mut o = Outcome::new(t);
    o.assert(
        "matrix condition",
        all,
        format!("{} points, smallest eigenvalue {worst:e}", points.len()),
    );
    Ok(o)
}

pub fn qv_cmd(cfg: &LabConfig) -> Result<Outcome, CliError> {
    let seed = seed(cfg);
    let grid = grid_or(cfg, (-1.0, 1.0), 0.02, 0.001, 0.02).build()?;
    let coeffs = coeffs_or(
        cfg,
        grid.n,
        CoefficientConfig {
            b2: Some(crate::config::CoefSpec::Const(1.0)),
            ..Default::default()
        },
    )?;
    let (u0, u1) = data_or(cfg, grid.n, bump(0.0, 0.3))?;
    let paths = paths_or(cfg, 200)?;
    let qc = cfg.qv.clone().unwrap_or_default();
    let tol = qc.tolerance.unwrap_or(QV_TOL);
    let init = WaveState::from_fns(&grid, u0.as_ref(), u1.as_ref());
    let opts = SolveOptions {
        record_diffusion: true,
        ..Default::default()
    };
    let runs = (0..paths as u64)
        .into_par_iter()
        .map(|i| {
            let path = sample_brownian(derive_seed(seed, i), grid.dt, grid.t_max)?;
            solve(&init, &coeffs, &grid, &path, &opts)
        })
        .collect::<Result<Vec<_>, _>>()?;
    let r = qv_check(&runs, qc.node, tol)?;
    let mut t = ResultTable::new(&[
        "paths", "node", "empirical", "theory", "stderr", "rel_error", "tolerance", "raw_increments", "pass",
    ]);
    t.push(vec![
        r.paths.into(),
        qc.node.map_or(Cell::Text("all".into()), Cell::from),
        r.empirical.into(),
        r.theory.into(),
        r.stderr.into(),
        r.rel_error.into(),
        r.tolerance.into(),
        r.raw_increments.map_or(Cell::Text(String::new()), Cell::Num),
        r.pass.into(),
    ]);
    let mut o = Outcome::new(t);
    o.seed = Some(seed);
    o.assert(
        "quadratic variation",
        r.pass,
        format!(
            "empirical {:e} vs predicted {:e}, relative error {:e} (tolerance {tol})",
            r.empirical, r.theory, r.rel_error
        ),
    );
    Ok(o)
}

/// Relative tolerance of `gap(s·w) = s²·gap(w)`.
pub const HOMOGENEITY_TOL: f64 = 1e-10;

/// Setting used by `inequality-scan` when the config leaves it open.
struct InequalityDefaults {
    rho: FnSpec,
    varrho: f64,
    center_t: f64,
    /// Time at the middle of the integration patch, when it differs from
    /// the weight center.
    patch_t: Option<f64>,
    b1: f64,
    h: f64,
}

impl InequalityDefaults {
    fn for_preset(preset: &InequalityPreset) -> Self {
        match *preset {
            // rho = alpha/2 (t - t0)^2 - |x|^2, varrho = 2, |b1| = c1, on a
            // patch inside {rho >= c3}. The weight varies fast there, hence the
            // finer quadrature.
            InequalityPreset::T62 { alpha, c1, c3, t0 } => InequalityDefaults {
                rho: FnSpec::Quadric { c: 0.0, at: alpha / 2.0, ax: -1.0, t0, x0: vec![0.0] },
                varrho: 2.0,
                center_t: t0,
                patch_t: Some(t0 + 0.5 + (2.0 * (c3 + 0.0625) / alpha).sqrt()),
                b1: c1,
                h: 0.002,
            },
            _ => InequalityDefaults {
                rho: FnSpec::affine(0.0, 1.0, &[-1.0]),
                varrho: 0.0,
                center_t: 0.0,
                patch_t: None,
                b1: 4.0,
                h: 0.01,
            },
        }
    }
}

pub fn inequality_scan(cfg: &LabConfig) -> Result<Outcome, CliError> {
    let ic = cfg.inequality.clone().unwrap_or(crate::config::InequalityConfig {
        preset: "T4.2".into(),
        c0: None,
        c1: None,
        alpha: None,
        c3: None,
        t0: None,
        w: None,
        b1: None,
        b2: None,
        region: None,
        scale: None,
    });
    let preset = ic.build_preset()?;
    let d = InequalityDefaults::for_preset(&preset);
    let wc = cfg.weights.clone().unwrap_or_default();
    let center = wc
        .center
        .as_ref()
        .map(PointConfig::build)
        .transpose()?
        .unwrap_or(Point::new(d.center_t, &[0.0]));
    let n = center.dim;
    let rho = function(&wc.rho.clone().unwrap_or(d.rho), n, "rho")?;
    let varrho = function(&wc.varrho.clone().unwrap_or(FnSpec::constant(d.varrho)), n, "varrho")?;
    let (gamma, mu, search) = match (wc.gamma, wc.mu, preset) {
        (Some(g), Some(m), _) => (g, m, None),
        (None, None, InequalityPreset::T42 { c0, c1 }) => {
            let lp = fix_local_parameters(rho.as_ref(), varrho.as_ref(), &center, c0, c1)?;
            (lp.gamma, lp.mu, Some(lp))
        }
        (g, m, _) => (g.unwrap_or(1.0), m.unwrap_or(0.0), None),
    };
    let lambdas = wc.lambdas.clone().unwrap_or_else(|| vec![8.0, 16.0, 32.0, 64.0]);
    if lambdas.is_empty() {
        return Err(CliError::Config("inequality-scan needs at least one lambda".into()));
    }
    let mid = Point::new(d.patch_t.unwrap_or(center.t), center.space());
    let w_spec = ic.w.clone().unwrap_or(FnSpec::SpacetimeBump {
        t0: mid.t,
        x0: mid.space().to_vec(),
        radius: 0.2,
        power: 4,
    });
    let region = ic.region.clone().unwrap_or(Region {
        t: (mid.t - 0.25, mid.t + 0.25),
        x: mid.space().iter().map(|c| (c - 0.25, c + 0.25)).collect(),
        h: d.h,
    });
    let scale = ic.scale.unwrap_or(2.0);
    let setup = InequalitySetup {
        preset,
        family: WeightFamily::new(rho, varrho, WeightParams::new(1.0, gamma, mu, center)?),
        w: function(&w_spec, n, "w")?,
        b1: function(&ic.b1.clone().unwrap_or(FnSpec::constant(d.b1)), n, "b1")?,
        b2: function(&ic.b2.clone().unwrap_or(FnSpec::constant(0.0)), n, "b2")?,
        region,
    };
    let base = inequality_gap(&setup, &lambdas)?;
    let mut scaled_setup = setup.clone();
    scaled_setup.w = function(&FnSpec::scale(scale, w_spec), n, "w")?;
    let scaled = inequality_gap(&scaled_setup, &lambdas)?;
    let mut t = ResultTable::new(&[
        "lambda", "lhs", "rhs", "gap", "log_scale", "log_gap", "scaled_gap", "homogeneity_rel",
    ]);
    let s2 = scale * scale;
    let mut worst_h: f64 = 0.0;
    for (a, b) in base.rows.iter().zip(&scaled.rows) {
        let expect = s2 * a.gap;
        let rel = if expect == b.gap { 0.0 } else { (b.gap - expect).abs() / expect.abs().max(f64::MIN_POSITIVE) };
        worst_h = worst_h.max(rel);
        t.push(vec![
            a.lambda.into(),
            a.lhs.into(),
            a.rhs.into(),
            a.gap.into(),
            a.log_scale.into(),
            a.log_gap.into(),
            b.gap.into(),
            rel.into(),
        ]);
    }
    let mut o = Outcome::new(t);
    if preset != InequalityPreset::T32 {
        let min_gap = base.rows.iter().map(|r| r.gap).fold(f64::INFINITY, f64::min);
        o.assert(
            "gap nonnegative",
            base.rows.iter().all(|r| r.gap >= 0.0),
            format!("preset {}, smallest scaled gap {min_gap:e}", preset.name()),
        );
    }
    let kappa = base.kappa.map_or(String::new(), |k| format!(", kappa {k:e}"));
    let fixed = search.map_or(String::new(), |lp| {
        format!(", parameter search {} gamma steps and {} mu steps", lp.gamma_steps, lp.mu_steps)
    });
    o.assert(
        "quadratic homogeneity",
        worst_h <= HOMOGENEITY_TOL,
        format!("scale {scale}, max relative deviation {worst_h:e}; gamma {gamma}, mu {mu:e}{kappa}{fixed}"),
    );
    Ok(o.plot("lambda", "log_gap", false))
}

pub const PROPAGATION_TOL: f64 = 1e-6;

pub fn propagation_cmd(cfg: &LabConfig) -> Result<Outcome, CliError> {
    let seed = seed(cfg);
    let grid = grid_or(cfg, (-1.0, 1.0), 0.005, 0.005, 0.5).build()?;
    let coeffs = coeffs_or(
        cfg,
        grid.n,
        CoefficientConfig {
            b1: Some(crate::config::CoefSpec::Const(0.5)),
            ..Default::default()
        },
    )?;
    let (u0, u1) = data_or(cfg, grid.n, bump(0.0, 0.2))?;
    let support = cfg.support.clone().unwrap_or_else(|| SupportSet::ball(&[0.0], 0.2));
    let pc = cfg.propagation.clone().unwrap_or_default();
    let stride = pc.stride.unwrap_or(1);
    if stride == 0 {
        return Err(CliError::Config("stride must be positive".into()));
    }
    let tol = pc.tolerance.unwrap_or(PROPAGATION_TOL);
    let setup = PropagationSetup {
        grid,
        support,
        u0,
        u1,
        coeffs,
        paths: paths_or(cfg, 200)?,
        seed,
        stride,
        halo_cells: pc.halo_cells.unwrap_or(HALO_CELLS),
    };
    let trace = run_propagation(&setup)?;
    let mut t = ResultTable::new(&[
        "time", "mean_energy", "stderr", "outside_mean", "outside_stderr", "outside_ratio",
    ]);
    for i in 0..trace.times.len() {
        let ratio = if trace.initial_energy > 0.0 {
            trace.outside_mean[i] / trace.initial_energy
        } else {
            trace.outside_mean[i]
        };
        t.push(vec![
            trace.times[i].into(),
            trace.mean[i].into(),
            trace.stderr[i].into(),
            trace.outside_mean[i].into(),
            trace.outside_stderr[i].into(),
            ratio.into(),
        ]);
    }
    let ratio = trace.max_outside_ratio();
    let mut o = Outcome::new(t);
    o.seed = Some(seed);
    o.assert(
        "energy outside light cone",
        ratio <= tol,
        format!(
            "{} paths, max outside/initial {ratio:e} (tolerance {tol:e}), Gronwall constant {:e}",
            trace.paths, trace.gronwall_c
        ),
    );
    Ok(o.plot("time", "mean_energy", false))
}

pub fn ucp_cmd(cfg: &LabConfig) -> Result<Outcome, CliError> {
    let seed = seed(cfg);
    let grid = grid_or(cfg, (-1.0, 1.0), 0.01, 0.005, 0.3).build()?;
    let coeffs = coeffs_or(
        cfg,
        grid.n,
        CoefficientConfig {
            b1: Some(crate::config::CoefSpec::Const(0.5)),
            ..Default::default()
        },
    )?;
    let (u0, u1) = data_or(cfg, grid.n, bump(-0.3, 0.2))?;
    let wc = cfg.weights.clone().unwrap_or_default();
    // front x = 0.25 + t, to the right of the default bump
    let rho = function(&wc.rho.clone().unwrap_or(FnSpec::affine(-0.25, -1.0, &[1.0])), grid.n, "rho")?;
    let uc = cfg.ucp.clone().unwrap_or_default();
    let tol = uc.leak_tolerance.unwrap_or(PROPAGATION_TOL);
    let setup = UcpSetup {
        grid,
        rho,
        gamma: wc.gamma.unwrap_or(1.0),
        u0,
        u1,
        coeffs,
        paths: paths_or(cfg, 50)?,
        seed,
        lambdas: wc.lambdas.clone().unwrap_or_else(|| vec![1.0, 2.0, 4.0, 8.0, 16.0]),
        margin: uc.margin.unwrap_or(HALO_CELLS * grid.dx),
    };
    let r = ucp_decay(&setup)?;
    let mut t = ResultTable::new(&["lambda", "log_norm", "slope", "leak_ratio"]);
    for row in &r.rows {
        t.push(vec![row.lambda.into(), row.log_norm.into(), row.slope.into(), r.leak_ratio.into()]);
    }
    let mut o = Outcome::new(t);
    o.seed = Some(seed);
    o.assert(
        "weighted norm nonincreasing",
        r.monotone,
        format!("{} lambdas over {} paths", r.rows.len(), r.paths),
    );
    o.assert(
        "solution vanishes beyond the front",
        r.leak_ratio <= tol,
        format!("leak ratio {:e} (tolerance {tol:e})", r.leak_ratio),
    );
    Ok(o.plot("lambda", "log_norm", false))
}

fn class(m: Membership) -> Cell {
    Cell::Text(
        match m {
            Membership::Inside => "inside",
            Membership::Boundary => "boundary",
            Membership::Outside => "outside",
        }
        .into(),
    )
}

pub const VERTEX_TOL: f64 = 1e-9;

pub fn geometry(cfg: &LabConfig) -> Result<Outcome, CliError> {
    let cc = cfg.cone.clone().unwrap_or_default();
    let alpha = cc.alpha.unwrap_or(0.5);
    let c1 = cc.c1.unwrap_or(1.0);
    let t0 = cc.t0.unwrap_or(0.0);
    let c3 = c3_constant(alpha, c1)?;
    let x0 = cc.x0.clone().unwrap_or_else(|| vec![0.0]);
    if x0.is_empty() || x0.len() > 2 {
        return Err(CliError::Config("cone x0 needs one or two coordinates".into()));
    }
    let x1 = cc.x1.clone().unwrap_or_else(|| {
        let mut x = x0.clone();
        x[0] += 2.0 * c3.sqrt();
        x
    });
    let v = vertex(t0, &x0, &x1, alpha, c3)?;
    let q0 = ConeSpec::q0(t0, &x0, alpha)?;
    let q1 = ConeSpec::q1(t0, &x1, alpha, c3)?;
    let mut t = ResultTable::new(&["quantity", "index", "value", "t", "x", "q0", "q1"]);
    let blank = || Cell::Text(String::new());
    let scalar = |t: &mut ResultTable, name: &str, v: f64| {
        t.push(vec![name.into(), 0usize.into(), v.into(), blank(), blank(), blank(), blank()]);
    };
    scalar(&mut t, "c3", c3);
    let vp = Point::new(v.t2, &v.x2);
    t.push(vec![
        "vertex".into(),
        0usize.into(),
        v.t2.into(),
        v.t2.into(),
        coords_text(&v.x2).into(),
        class(membership(&vp, &q0)),
        class(membership(&vp, &q1)),
    ]);
    scalar(&mut t, "residual_q0", v.residual_q0);
    scalar(&mut t, "residual_q1", v.residual_q1);
    scalar(&mut t, "t_offset", v.t_offset);
    scalar(&mut t, "x_offset", v.x_offset);
    let k = vertex_fraction();
    let m = cc.witnesses.unwrap_or(20);
    let mut witnesses_ok = true;
    for i in 0..m {
        let kt = -k + 2.0 * k * (i as f64 + 0.5) / m as f64;
        let x: Vec<f64> = x1.iter().zip(&x0).map(|(a, b)| a + kt * (b - a)).collect();
        let p = Point::new(v.t2, &x);
        let (m0, m1) = (membership(&p, &q0), membership(&p, &q1));
        witnesses_ok &= m0 == Membership::Outside && m1 == Membership::Inside;
        t.push(vec!["witness".into(), i.into(), kt.into(), v.t2.into(), coords_text(&x).into(), class(m0), class(m1)]);
    }
    let mesh = cc.mesh_points.unwrap_or(100_000);
    let min_t = sampled_min_time(t0, &x0, &x1, alpha, c3, mesh)?;
    scalar(&mut t, "sampled_min_time", min_t);
    let mut o = Outcome::new(t);
    o.assert(
        "vertex residuals",
        v.residual_q0 <= VERTEX_TOL && v.residual_q1 <= VERTEX_TOL,
        format!("c3 = {c3}, residuals {:e} and {:e}", v.residual_q0, v.residual_q1),
    );
    o.assert(
        "witnesses inside Q1 and outside Q0",
        witnesses_ok,
        format!("{m} fractions in (-{k}, {k})"),
    );
    o.assert(
        "vertex is the lowest intersection point",
        min_t >= v.t2 - 1e-6,
        format!("sampled minimum time {min_t} on {mesh} points, vertex time {}", v.t2),
    );
    Ok(o)
}

pub fn sweep(cfg: &LabConfig) -> Result<Outcome, CliError> {
    let cc = cfg.cone.clone().unwrap_or_default();
    let alpha = cc.alpha.unwrap_or(0.5);
    let c1 = cc.c1.unwrap_or(1.0);
    let c3 = c3_constant(alpha, c1)?;
    let d = 2.0 * c3.sqrt();
    let k = vertex_fraction();
    let (t_off, x_off) = ((1.0 - k) * d / alpha.sqrt(), k * d);
    let target_t = cc.target_t.unwrap_or(2.0 * t_off);
    let radius = cc.radius.unwrap_or(alpha.sqrt() * t_off + 2.5 * x_off);
    let opts = SweepOptions {
        dim: cc.dim.unwrap_or(1),
        mesh: cc.mesh.unwrap_or(1e-2),
        witness_times: cc.witness_times.unwrap_or(5),
    };
    let s = sweep_cover(alpha, c1, target_t, radius, &opts)?;
    let mut t = ResultTable::new(&[
        "step", "radius_offset", "radius_at_t0", "hypothesis_samples", "witnesses",
    ]);
    for st in &s.states {
        t.push(vec![
            st.step.into(),
            st.radius_offset.into(),
            (alpha.sqrt() * s.t_offset + st.radius_offset).into(),
            st.hypothesis_samples.into(),
            st.witnesses.into(),
        ]);
    }
    let reached = alpha.sqrt() * s.t_offset + s.steps_needed as f64 * s.x_offset;
    let mut o = Outcome::new(t);
    o.assert(
        "schedule covers the radius",
        reached >= radius && s.states.len() == s.steps_needed,
        format!(
            "{} steps of X0 = {} from sqrt(alpha) T0 = {} reach {reached} >= {radius}",
            s.steps_needed,
            s.x_offset,
            alpha.sqrt() * s.t_offset
        ),
    );
    Ok(o.plot("step", "radius_at_t0", false))
}
