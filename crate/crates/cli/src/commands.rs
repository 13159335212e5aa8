use std::io::Write;
use std::path::Path;

use subordkit::gen_gamma::{moment_I, moment_I_integer, moment_R, moment_R_integer, GenGammaEvaluator};
use subordkit::harmonic::{hpm_density_with, hpm_numeric, id_test_with_density, HpmConfig, IdConfig, Verdict};
use subordkit::montecarlo::{
    verify_factorization, verify_gordon, verify_joint, verify_moments, verify_undershoot, Criterion, SimConfig,
    SimReport,
};
use subordkit::numerics::{log_grid, InversionMethod, QuadratureConfig};
use subordkit::subordinator::{conjugate, webster_diagnostics};
use subordkit::SubordinatorSpec;

use crate::config::{spec_to_config, Config};
use crate::error::CliError;

pub const SCHEMA_VERSION: u32 = 1;

fn schema(cmd: &str) -> String {
    format!("subordkit.{cmd}.v{SCHEMA_VERSION}")
}

/// 17 significant digits; empty for NaN.
pub fn num(x: f64) -> String {
    if x.is_nan() {
        String::new()
    } else {
        format!("{x:.16e}")
    }
}

fn opt(x: Option<f64>) -> String {
    x.map_or_else(String::new, num)
}

fn writer<W: Write>(out: W) -> csv::Writer<W> {
    csv::WriterBuilder::new().from_writer(out)
}

pub fn quadrature_config(cfg: &Config) -> Result<QuadratureConfig, CliError> {
    let d = QuadratureConfig::default();
    Ok(QuadratureConfig {
        abs_tol: cfg.f64_or("quadrature.abs_tol", d.abs_tol)?,
        rel_tol: cfg.f64_or("quadrature.rel_tol", d.rel_tol)?,
        max_subdivisions: cfg.u64("quadrature.max_subdivisions")?.map_or(d.max_subdivisions, |v| v as usize),
        ..d
    })
}

pub fn hpm_config(cfg: &Config) -> Result<HpmConfig, CliError> {
    let mut h = HpmConfig {
        quadrature: quadrature_config(cfg)?,
        ..HpmConfig::default()
    };
    if let Some(m) = cfg.str("inversion.method") {
        h.inversion.method = match m {
            "talbot" => InversionMethod::Talbot,
            "gaver-stehfest" | "gaver_stehfest" => InversionMethod::GaverStehfest,
            other => {
                return Err(CliError::Config {
                    line: cfg.line_of("inversion.method"),
                    msg: format!("unknown inversion.method `{other}` (talbot, gaver-stehfest)"),
                })
            }
        };
    }
    if let Some(n) = cfg.u64("inversion.nodes")? {
        h.inversion.nodes = n as usize;
    }
    h.inversion.residual = cfg.f64_or("inversion.residual", h.inversion.residual)?;
    h.inversion.validate().map_err(|e| CliError::Config {
        line: cfg.line_of("inversion.nodes"),
        msg: e.to_string(),
    })?;
    Ok(h)
}

pub fn id_config(cfg: &Config) -> Result<IdConfig, CliError> {
    let d = IdConfig::default();
    let c = IdConfig {
        lo: cfg.f64_or("idtest.lo", d.lo)?,
        hi: cfg.f64_or("idtest.hi", d.hi)?,
        points: cfg.u64("idtest.points")?.map_or(d.points, |v| v as usize),
        tol: cfg.f64_or("idtest.tol", d.tol)?,
        ..d
    };
    c.validate().map_err(|e| CliError::Config {
        line: cfg.line_of("idtest.lo"),
        msg: e.to_string(),
    })?;
    Ok(c)
}

pub fn sim_config(cfg: &Config) -> Result<SimConfig, CliError> {
    let d = SimConfig::default();
    let s = SimConfig {
        seed: cfg.u64("sim.seed")?.unwrap_or(d.seed),
        n_samples: cfg.u64("sim.n")?.map_or(d.n_samples, |v| v as usize),
        epsilon: cfg.f64_or("sim.epsilon", d.epsilon)?,
        compensate: cfg.bool("sim.compensate")?.unwrap_or(d.compensate),
        workers: cfg.u64("sim.workers")?.map_or(d.workers, |v| v as usize),
    };
    s.validate().map_err(|e| CliError::Config {
        line: cfg.line_of("sim.n"),
        msg: e.to_string(),
    })?;
    Ok(s)
}

pub fn describe<W: Write>(cfg: &Config, mut out: W) -> Result<(), CliError> {
    let spec = cfg.spec()?;
    writeln!(out, "# subord-kit describe, schema {}", schema("describe"))?;
    for line in spec_to_config(&spec) {
        writeln!(out, "{line}")?;
    }
    let grid = cfg.grid()?.unwrap_or_else(|| vec![0.5, 1.0, 2.0, 4.0, 8.0]);
    writeln!(out, "# lambda,phi,phi_prime")?;
    for l in grid {
        writeln!(out, "# {},{},{}", num(l), num(spec.value(l)), num(spec.derivative(l)))?;
    }
    let w = webster_diagnostics(&spec, &log_grid(0.1, 100.0, 30))?;
    writeln!(out, "# webster.max_log_second_difference = {}", num(w.max_log_second_difference))?;
    writeln!(out, "# webster.max_second_difference = {}", num(w.max_second_difference))?;
    writeln!(out, "# webster.limit_ratio_excess = {}", num(w.limit_ratio_excess))?;
    writeln!(out, "# webster.passes = {}", w.passes(1e-10))?;
    match conjugate(&spec) {
        Ok(pair) => writeln!(out, "# special = {:?}", pair.rule)?,
        Err(_) => writeln!(out, "# special = not recognized")?,
    }
    Ok(())
}

fn check_orders(ns: &[u32], ss: &[f64]) -> Result<(), CliError> {
    if ns.contains(&0) || ss.iter().any(|&s| !(s > -1.0)) {
        return Err(CliError::Usage("moment orders must satisfy n >= 1 and s > -1".into()));
    }
    Ok(())
}

pub fn moments<W: Write>(cfg: &Config, ns: &[u32], ss: &[f64], out: W) -> Result<(), CliError> {
    check_orders(ns, ss)?;
    let spec = cfg.spec()?;
    let dual = conjugate(&spec).ok().map(|p| p.dual);
    let mut rows: Vec<(f64, bool)> = ns.iter().map(|&n| (n as f64, true)).collect();
    rows.extend(ss.iter().map(|&s| (s, false)));
    if rows.is_empty() {
        rows = vec![(1.0, true), (2.0, true), (3.0, true)];
    }
    let mut w = writer(out);
    w.write_record(["schema", "s", "E_I", "E_R", "product_I", "product_R", "duality_residual"])?;
    for (s, integer) in rows {
        let ei = moment_I(&spec, s)?;
        let er = moment_R(&spec, s)?;
        let (pi, pr) = if integer {
            (Some(moment_I_integer(&spec, s as u32)), Some(moment_R_integer(&spec, s as u32)))
        } else {
            (None, None)
        };
        // E[I^s] = E[R*^s] for a special pair.
        let dual_res = dual.as_ref().map(|d| moment_R(d, s).map(|r| r / ei - 1.0)).transpose()?;
        w.write_record([schema("moments"), num(s), num(ei), num(er), opt(pi), opt(pr), opt(dual_res)])?;
    }
    w.flush()?;
    Ok(())
}

pub fn idtest<W: Write>(cfg: &Config, rho_path: Option<&Path>, out: W) -> Result<(), CliError> {
    let spec = cfg.spec()?;
    let icfg = id_config(cfg)?;
    let density = hpm_density_with(&spec, &hpm_config(cfg)?)?;
    let v = id_test_with_density(&spec, &density, &icfg)?;
    let (wx, wr) = match &v.verdict {
        Verdict::NotId { witness: Some(w) } => (Some(w.x), Some(w.rho)),
        _ => (None, None),
    };
    let mut w = writer(out);
    w.write_record(["schema", "label", "verdict", "rule", "sup_rho", "argsup", "witness_x", "witness_rho"])?;
    w.write_record([
        schema("idtest"),
        spec.label().to_string(),
        v.verdict.name().to_string(),
        format!("{:?}", v.rule),
        num(v.sup_rho),
        num(v.argsup),
        opt(wx),
        opt(wr),
    ])?;
    w.flush()?;
    for n in &v.notes {
        eprintln!("note: {n}");
    }
    if let Some(path) = rho_path {
        let file = std::fs::File::create(path)?;
        let mut r = writer(file);
        r.write_record(["schema", "x", "rho"])?;
        let hi = icfg.hi.min(density.valid_up_to());
        for x in log_grid(icfg.lo, hi, icfg.points) {
            r.write_record([schema("rho"), num(x), num(density.eval(x.min(hi))?)])?;
        }
        r.flush()?;
    }
    Ok(())
}

pub fn hpm<W: Write>(cfg: &Config, grid: &[f64], numeric: bool, out: W) -> Result<(), CliError> {
    let spec = cfg.spec()?;
    let hcfg = hpm_config(cfg)?;
    let grid = if grid.is_empty() {
        cfg.grid()?.unwrap_or_else(|| log_grid(0.1, 10.0, 21))
    } else {
        grid.to_vec()
    };
    if grid.iter().any(|&x| !(x > 0.0)) {
        return Err(CliError::Usage("grid points must be positive".into()));
    }
    let d = hpm_density_with(&spec, &hcfg)?;
    let inv = if numeric { Some(hpm_numeric(&spec, &hcfg)?) } else { None };
    if let Some(atoms) = d.atoms() {
        eprintln!("note: H has {} atoms; rho is the density of its continuous part", atoms.len());
    }
    let mut w = writer(out);
    let mut header = vec!["schema", "x", "rho", "provenance"];
    if numeric {
        header.extend(["rho_numeric", "delta"]);
    }
    w.write_record(&header)?;
    let prov = d.provenance().to_string();
    for x in grid {
        let r = d.eval(x)?;
        let mut row = vec![schema("hpm"), num(x), num(r), prov.clone()];
        if let Some(n) = &inv {
            let rn = n.eval(x)?;
            row.extend([num(rn), num(r - rn)]);
        }
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn gamma<W: Write>(cfg: &Config, ss: &[f64], out: W) -> Result<(), CliError> {
    let spec = cfg.spec()?;
    let ss = if ss.is_empty() {
        cfg.grid()?.unwrap_or_else(|| vec![0.5, 1.0, 2.0, 3.0, 5.0])
    } else {
        ss.to_vec()
    };
    if ss.iter().any(|&s| !(s > 0.0)) {
        return Err(CliError::Usage("gamma arguments must be positive".into()));
    }
    let ev = GenGammaEvaluator::for_phi(&spec)?;
    let mut w = writer(out);
    w.write_record(["schema", "s", "gamma_phi", "euler_phi", "functional_residual"])?;
    for s in ss {
        w.write_record([
            schema("gamma"),
            num(s),
            num(ev.gamma(s)?),
            num(ev.euler_constant()),
            num(ev.functional_residual(s)?),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Suite {
    Undershoot,
    Factorization,
    Moments,
    Joint,
    Gordon,
}

pub fn run_suite(cfg: &Config, spec: &SubordinatorSpec, suite: Suite, sim: &SimConfig) -> Result<SimReport, CliError> {
    let alpha = cfg.f64_or("sim.alpha", 1.0)?;
    Ok(match suite {
        Suite::Undershoot => {
            let lams = cfg.list("sim.lambdas")?.unwrap_or_else(|| vec![0.5, 1.0, 2.0]);
            let pairs = cfg.pairs("sim.pairs")?.unwrap_or_else(|| vec![(1.0, 1.0), (0.5, 2.0), (2.0, 0.5)]);
            verify_undershoot(spec, alpha, &lams, &pairs, sim)?
        }
        Suite::Factorization => verify_factorization(spec, sim)?,
        Suite::Moments => verify_moments(spec, cfg.u64("sim.n_max")?.unwrap_or(3) as u32, sim)?,
        Suite::Joint => {
            let pts = cfg.pairs("sim.points")?.unwrap_or_else(|| vec![(1.0, 0.0), (1.0, 1.0), (0.5, 0.5)]);
            verify_joint(spec, alpha, &pts, sim)?
        }
        Suite::Gordon => verify_gordon(spec, cfg.u64("sim.n_trunc")?.unwrap_or(200) as u32, sim)?,
    })
}

/// Writes the report; returns whether every check passed.
pub fn verify<W: Write>(cfg: &Config, suite: Suite, sim: &SimConfig, out: W) -> Result<bool, CliError> {
    let spec = cfg.spec()?;
    let rep = run_suite(cfg, &spec, suite, sim)?;
    let mut w = writer(out);
    w.write_record([
        "schema", "suite", "label", "seed", "n", "check", "estimate", "se", "reference", "criterion", "p_value", "passed",
    ])?;
    for c in &rep.checks {
        let crit = match c.criterion {
            Criterion::WithinSe { k, bias } if bias > 0.0 => format!("|est-ref|<={k}se+{bias:e}"),
            Criterion::WithinSe { k, .. } => format!("|est-ref|<={k}se"),
            Criterion::MinPValue(p) => format!("ks_p>{p}"),
            Criterion::AtMost => "est<=ref".into(),
        };
        w.write_record([
            schema("verify"),
            rep.suite.clone(),
            rep.label.clone(),
            rep.seed.to_string(),
            rep.n_samples.to_string(),
            c.name.clone(),
            num(c.estimate),
            num(c.se),
            num(c.reference),
            crit,
            opt(c.p_value),
            c.passed.to_string(),
        ])?;
    }
    w.flush()?;
    for n in &rep.notes {
        eprintln!("note: {n}");
    }
    Ok(rep.passed())
}
