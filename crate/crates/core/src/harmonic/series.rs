//! Renewal-series densities for arithmetic and tabulated jump laws.
//!
//! With jump law `F` of total rate `c`, no drift and kill rate `q`,
//! `H = Σ_{n≥1} p^n/n · F^{*n}` with `p = c/(c+q)`. With drift `a > 0`,
//! `ρ(x) = (x/a) Σ_{n≥0} c^n/n! · E[t_n^{n-1} e^{-(c+q)t_n}; S_n < x]`, `t_n = (x - S_n)/a`.

use std::sync::Arc;

use statrs::function::gamma::ln_gamma;

use super::{HarmonicDensity, HpmConfig, Provenance, RhoFn};
use crate::error::{Error, Result};
use crate::subordinator::{LevyKind, Triplet};

pub(super) fn for_triplet(t: &Triplet, cfg: &HpmConfig) -> Result<Option<HarmonicDensity>> {
    match t.levy.kind() {
        LevyKind::Atoms(atoms) => {
            let jumps: Vec<(f64, f64)> = atoms.iter().map(|a| (a.location, a.mass)).collect();
            if t.drift == 0.0 {
                atomic(t.kill, &jumps, cfg).map(Some)
            } else {
                drift_atoms(t.kill, t.drift, &jumps, cfg).map(Some)
            }
        }
        LevyKind::Tabulated(_) if t.drift == 0.0 => grid(t, cfg).map(Some),
        _ => Ok(None),
    }
}

/// Merge equal locations (to a relative `1e-12`) of a list sorted by location.
fn merge(mut v: Vec<(f64, f64)>) -> Vec<(f64, f64)> {
    v.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut out: Vec<(f64, f64)> = Vec::with_capacity(v.len());
    for (x, m) in v {
        match out.last_mut() {
            Some(last) if (x - last.0).abs() <= 1e-12 * x.abs().max(1.0) => last.1 += m,
            _ => out.push((x, m)),
        }
    }
    out
}

/// Laws of `S_1, S_2, ...` restricted to `[0, horizon]`.
///
/// Stops at `max_levels`, when a level falls past the horizon, or when the total
/// support exceeds `max_support`. Returns the levels and the range over which they
/// are complete.
fn partial_sum_levels(
    probs: &[(f64, f64)],
    horizon: f64,
    max_levels: usize,
    max_support: usize,
) -> (Vec<Vec<(f64, f64)>>, f64, bool) {
    let min_loc = probs[0].0;
    let mut levels = vec![probs.iter().copied().filter(|p| p.0 <= horizon).collect::<Vec<_>>()];
    let mut support = levels[0].len();
    loop {
        let last = levels.last().unwrap();
        if last.is_empty() {
            levels.pop();
            return (levels, horizon, false);
        }
        let n = levels.len();
        if n >= max_levels || support > max_support {
            // S_{n+1} ≥ (n+1)·min_loc, so nothing is missing below that.
            return (levels, horizon.min((n + 1) as f64 * min_loc), support > max_support);
        }
        let mut next = Vec::with_capacity(last.len() * probs.len());
        for &(s, ps) in last {
            for &(j, pj) in probs {
                if s + j <= horizon {
                    next.push((s + j, ps * pj));
                }
            }
        }
        let next = merge(next);
        support += next.len();
        levels.push(next);
    }
}

fn normalized(jumps: &[(f64, f64)]) -> (f64, Vec<(f64, f64)>) {
    let c: f64 = jumps.iter().map(|j| j.1).sum();
    (c, merge(jumps.iter().map(|&(x, m)| (x, m / c)).collect()))
}

/// Purely atomic `H` for arithmetic jumps without drift.
fn atomic(q: f64, jumps: &[(f64, f64)], cfg: &HpmConfig) -> Result<HarmonicDensity> {
    let (c, probs) = normalized(jumps);
    let p = c / (c + q);
    // Past this level the weights p^n/n drop below 1e-17.
    let negligible = if p < 1.0 {
        (-17.0 * 10f64.ln() / p.ln()).ceil().max(1.0) as usize
    } else {
        usize::MAX
    };
    let levels_cap = cfg.max_terms.min(negligible);
    let (levels, valid, by_support) = partial_sum_levels(&probs, cfg.horizon, levels_cap, cfg.max_support);
    let valid = if !by_support && levels.len() == negligible {
        cfg.horizon
    } else {
        valid
    };
    let mut atoms = Vec::new();
    for (i, lvl) in levels.iter().enumerate() {
        let n = (i + 1) as f64;
        let w = (n * p.ln()).exp() / n;
        atoms.extend(lvl.iter().map(|&(x, m)| (x, w * m)));
    }
    let atoms = merge(atoms);
    let eval: RhoFn = Arc::new(|_| Ok(0.0));
    Ok(HarmonicDensity::new(eval, Provenance::AtomSeries)
        .with_atoms(atoms)
        .with_validity(valid, Vec::new()))
}

/// Absolutely continuous `ρ` for drift plus arithmetic jumps, exact on its range.
fn drift_atoms(q: f64, a: f64, jumps: &[(f64, f64)], cfg: &HpmConfig) -> Result<HarmonicDensity> {
    let (c, probs) = normalized(jumps);
    let max_levels = ((cfg.horizon / probs[0].0).ceil() as usize).clamp(1, 100_000);
    let (levels, valid, _) = partial_sum_levels(&probs, cfg.horizon, max_levels, cfg.max_support);
    let mut breakpoints: Vec<f64> = levels.iter().flatten().map(|p| p.0).collect();
    breakpoints.sort_by(f64::total_cmp);
    breakpoints.dedup();
    breakpoints.truncate(2000);
    let levels = Arc::new(levels);
    let lc = c.ln();
    let rate = c + q;
    let eval: RhoFn = Arc::new(move |x: f64| {
        // n = 0: no jump before reaching x.
        let mut sum = (-rate * x / a).exp();
        for (i, lvl) in levels.iter().enumerate() {
            let n = (i + 1) as f64;
            let log_w = n * lc - ln_gamma(n + 1.0);
            let mut any = false;
            for &(s, ps) in lvl {
                if s >= x {
                    break;
                }
                any = true;
                let t = (x - s) / a;
                let lt = if i == 0 { 0.0 } else { (n - 1.0) * t.ln() };
                sum += x / a * ps * (log_w + lt - rate * t).exp();
            }
            if !any {
                break;
            }
        }
        if sum.is_finite() {
            Ok(sum)
        } else {
            Err(Error::NonConvergent(format!("drift-atom series at x = {x}")))
        }
    });
    Ok(HarmonicDensity::new(eval, Provenance::AtomSeries).with_validity(valid, breakpoints))
}

/// Renewal series on a grid for tabulated jumps without drift.
///
/// Cell masses of the jump law sit at cell midpoints, so `S_n` lives on the lattice
/// `(k + n/2)h`; each level is read back as a density by linear interpolation.
fn grid(t: &Triplet, cfg: &HpmConfig) -> Result<HarmonicDensity> {
    let levy = &t.levy;
    let c = levy.tail(0.0);
    let p = c / (c + t.kill);
    let b = levy.support_bound().unwrap_or(f64::INFINITY);
    let LevyKind::Tabulated(table) = levy.kind() else {
        unreachable!("grid series is only built for tabulated jumps")
    };
    let x_min = table.knots()[0];
    let h = b / 200.0;
    let x_max = cfg.horizon.min(50.0 * b);
    let cells: Vec<f64> = (0..200)
        .map(|k| (levy.tail(k as f64 * h) - levy.tail((k + 1) as f64 * h)) / c)
        .collect();
    let first = cells.iter().position(|&w| w > 0.0).unwrap_or(0);
    let len = (x_max / h).ceil() as usize + 2;
    // even[i] at i·h, odd[i] at (i + 1/2)h; both already divided by h.
    let mut even = vec![0.0; len];
    let mut odd = vec![0.0; len];
    let mut level: Vec<f64> = cells.clone();
    let mut n = 1usize;
    let mut complete = true;
    loop {
        let w = (n as f64 * p.ln()).exp() / n as f64;
        let dest = if n % 2 == 0 { &mut even } else { &mut odd };
        // Level n mass at index j sits at (j + n/2)h.
        let shift = n / 2;
        let mut any = false;
        for (j, &m) in level.iter().enumerate() {
            let i = j + shift;
            if i < len && m > 0.0 {
                dest[i] += w * m / h;
                any = true;
            }
        }
        if !any || w < 1e-17 {
            break;
        }
        if n >= cfg.max_terms {
            complete = false;
            break;
        }
        let max_j = len.saturating_sub(shift + 1);
        let mut next = vec![0.0; (level.len() + cells.len()).min(max_j + 1)];
        for (j, &m) in level.iter().enumerate() {
            if m == 0.0 {
                continue;
            }
            for (k, &w) in cells.iter().enumerate().skip(first) {
                if j + k < next.len() {
                    next[j + k] += m * w;
                }
            }
        }
        level = next;
        n += 1;
    }
    let valid = if complete {
        x_max
    } else {
        x_max.min((cfg.max_terms + 1) as f64 * x_min)
    };
    let even = Arc::new(even);
    let odd = Arc::new(odd);
    let eval: RhoFn = Arc::new(move |x: f64| {
        let read = |v: &[f64], offset: f64| {
            let u = x / h - offset;
            if u < 0.0 {
                return 0.0;
            }
            let i = u.floor() as usize;
            let f = u - i as f64;
            let at = |k: usize| v.get(k).copied().unwrap_or(0.0);
            at(i) * (1.0 - f) + at(i + 1) * f
        };
        Ok(x * (read(&even, 0.0) + read(&odd, 0.5)))
    });
    // The interpolant has kinks on the half-cell lattice.
    let kinks = (1..(2.0 * valid / h) as usize).map(|k| k as f64 * 0.5 * h).collect();
    Ok(HarmonicDensity::new(eval, Provenance::GridSeries).with_validity(valid, kinks))
}
