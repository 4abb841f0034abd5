use anderson_core::disorder::{rv_metadata, DistributionSpec};
use anderson_core::ids::{bootstrap_log_correction, empirical_ids, lifshitz_fit, log_correction_diagnostic, resolution_window};
use anderson_core::lattice::{
    full_spectrum, laplacian_spectrum_closed_form, smallest_eigenvalues, BoxGeometry, HamiltonianOperator,
};
use anderson_core::pam::{
    annealed_heat_trace_grid, annealed_moment, realization_potential, AnnealedEstimate, MomentMethod,
};
use anderson_core::tauber::{lifshitz_envelope, rate_function, shifted_rate_bounds, Boundary, TauberError};
use anderson_core::variational::{
    box_schedule, classical_chi_star, PlusBranchConstant, Variational, VariationalParams, Which,
};
use rayon::prelude::*;

use crate::config::{Command, ExperimentConfig, Side};
use crate::error::CliError;
use crate::output::{Cell, ParsedCsv, Stopwatch, Table};

type Result<T> = std::result::Result<T, CliError>;

/// log N̂, log u, and their standard errors, plus the realization count.
type EmpiricalRow = (f64, f64, f64, f64, usize);

pub fn dispatch(command: Command, cfg: &ExperimentConfig, clock: &mut Stopwatch) -> Result<Vec<Table>> {
    match command {
        Command::Spectrum => spectrum(cfg, clock),
        Command::Pam => pam(cfg, clock),
        Command::Ids => ids(cfg, clock),
        Command::Bounds => bounds(cfg, clock),
        Command::Tauber => tauber(cfg, clock),
        Command::Report => report(cfg, clock),
    }
}

// validate() has already run, so these are present
fn spec(cfg: &ExperimentConfig) -> DistributionSpec {
    cfg.spec.expect("validated spec")
}

fn seed(cfg: &ExperimentConfig) -> u64 {
    cfg.seed.expect("validated seed")
}

fn side_for(cfg: &ExperimentConfig, t: Option<f64>) -> Result<usize> {
    match (cfg.n, t) {
        (Some(Side::Fixed(n)), _) => Ok(n),
        (Some(Side::Auto(_)), Some(t)) => Ok(box_schedule(&spec(cfg), t, cfg.dim())?.l),
        _ => Err(CliError::Validation(vec!["n: missing".into()])),
    }
}

fn log_se(e: &AnnealedEstimate) -> (f64, f64) {
    (e.mean.ln(), e.se / e.mean)
}

fn spectrum(cfg: &ExperimentConfig, clock: &mut Stopwatch) -> Result<Vec<Table>> {
    let (spec, d, n) = (spec(cfg), cfg.dim(), side_for(cfg, None)?);
    let geometry = BoxGeometry::new(d, n)?;
    let runs = cfg.n_disorder.unwrap_or(1);
    let spectra = clock.time("eigensolve", || {
        (0..runs)
            .into_par_iter()
            .map(|r| -> Result<_> {
                let pot = realization_potential(&spec, &geometry, seed(cfg), r)?;
                let h = HamiltonianOperator::new(geometry, Some(pot))?;
                Ok(match cfg.n_eigen {
                    Some(k) => smallest_eigenvalues(&h, k, cfg.lanczos_tol())?,
                    None => full_spectrum(&h)?,
                })
            })
            .collect::<Result<Vec<_>>>()
    })?;
    // constant potentials shift the closed-form Laplacian spectrum
    let closed = match spec {
        DistributionSpec::PointMass { v } => {
            let mut c = laplacian_spectrum_closed_form(d, n);
            c.sort_by(f64::total_cmp);
            Some(c.into_iter().map(|x| x + v).collect::<Vec<f64>>())
        }
        _ => None,
    };
    let mut t = Table::new("spectrum", &["realization", "index", "E", "residual", "closed_form"]);
    t.meta("geometry", format!("d={d} n={n}"));
    for (r, s) in spectra.iter().enumerate() {
        for (i, &e) in s.eigenvalues.iter().enumerate() {
            let res = s.residuals.get(i).copied().unwrap_or(f64::NAN);
            let cf = closed.as_ref().map_or(f64::NAN, |c| c[i]);
            t.push(vec![r.into(), i.into(), e.into(), res.into(), cf.into()]);
        }
    }
    Ok(vec![t])
}

fn pam(cfg: &ExperimentConfig, clock: &mut Stopwatch) -> Result<Vec<Table>> {
    let (spec, d, seed) = (spec(cfg), cfg.dim(), seed(cfg));
    let n_disorder = cfg.n_disorder.expect("validated n_disorder");
    let n_paths = cfg.n_paths.unwrap_or(0);
    let mut t = Table::new(
        "pam",
        &["t", "n", "u_krylov", "se_krylov", "u_mc", "se_mc", "nhat", "nhat_se", "log_u", "log_nhat"],
    );
    t.meta("d", d).meta("n_disorder", n_disorder).meta("n_paths", n_paths);
    for time in cfg.t_values() {
        let n = side_for(cfg, Some(time))?;
        let geometry = BoxGeometry::new(d, n)?;
        let method = MomentMethod::Integrator { tol: cfg.krylov_tol() };
        let u = clock.time("krylov", || annealed_moment(&spec, &geometry, time, n_disorder, method, seed))?;
        let mc = if n_paths > 0 {
            let method = MomentMethod::MonteCarlo { n_paths, mode: cfg.walk_mode.unwrap_or_default() };
            Some(clock.time("feynman_kac", || annealed_moment(&spec, &geometry, time, n_disorder, method, seed))?)
        } else {
            None
        };
        let nhat = clock.time("heat_trace", || annealed_heat_trace_grid(&spec, &geometry, &[time], n_disorder, seed))?[0];
        t.push(vec![
            time.into(),
            n.into(),
            u.mean.into(),
            u.se.into(),
            mc.map_or(f64::NAN, |m| m.mean).into(),
            mc.map_or(f64::NAN, |m| m.se).into(),
            nhat.mean.into(),
            nhat.se.into(),
            u.mean.ln().into(),
            nhat.mean.ln().into(),
        ]);
    }
    Ok(vec![t])
}

fn ids(cfg: &ExperimentConfig, clock: &mut Stopwatch) -> Result<Vec<Table>> {
    let (spec, d, seed) = (spec(cfg), cfg.dim(), seed(cfg));
    let n = side_for(cfg, None)?;
    let geometry = BoxGeometry::new(d, n)?;
    let n_disorder = cfg.n_disorder.expect("validated n_disorder");
    let curve = clock.time("spectra", || empirical_ids(&spec, &geometry, &cfg.e_values(), n_disorder, seed))?;
    let mut t = Table::new("ids", &["E", "N", "se"]);
    t.meta("geometry", format!("d={d} n={n}")).meta("n_disorder", n_disorder);
    t.meta("resolution_floor", format!("{:.6e}", curve.resolution_floor()));
    for ((e, v), s) in curve.energies.iter().zip(&curve.n).zip(&curve.se) {
        t.push(vec![(*e).into(), (*v).into(), (*s).into()]);
    }

    let mut fit = Table::new(
        "ids_fit",
        &[
            "window_lo",
            "window_hi",
            "slope",
            "stderr",
            "points",
            "rss_a",
            "rss_b",
            "preferred",
            "bootstrap_fitted",
            "b_preferred_fraction",
        ],
    );
    fit.meta("model_a", "log N = C E^(-d/2)").meta("model_b", "log N = C E^(-d/2) log E");
    match resolution_window(&curve) {
        Ok(window) => {
            let slope = lifshitz_fit(&curve, window);
            let logc = log_correction_diagnostic(&curve, d, window);
            let resamples = cfg.bootstrap.unwrap_or(0);
            let boot = if resamples > 0 {
                Some(clock.time("bootstrap", || bootstrap_log_correction(&curve, d, window, resamples, seed))?)
            } else {
                None
            };
            let (sl, se, pts) = slope.as_ref().map_or((f64::NAN, f64::NAN, 0), |f| (f.slope, f.stderr, f.points));
            let (ra, rb, pref) = logc
                .as_ref()
                .map_or((f64::NAN, f64::NAN, "none".to_string()), |r| (r.rss_a, r.rss_b, format!("{:?}", r.preferred)));
            fit.meta("bootstrap_resamples", resamples);
            fit.push(vec![
                window.0.into(),
                window.1.into(),
                sl.into(),
                se.into(),
                pts.into(),
                ra.into(),
                rb.into(),
                Cell::S(pref),
                boot.map_or(0, |b| b.fitted).into(),
                boot.map_or(f64::NAN, |b| b.b_preferred_fraction).into(),
            ]);
        }
        Err(e) => {
            fit.meta("note", format!("no fit: {e}"));
        }
    }
    Ok(vec![t, fit])
}

fn bounds(cfg: &ExperimentConfig, clock: &mut Stopwatch) -> Result<Vec<Table>> {
    let (spec, d) = (spec(cfg), cfg.dim());
    let mut params = VariationalParams::new(cfg.c_fk())?.with_mode(cfg.mode.unwrap_or_default());
    if let Some(l) = cfg.ell_max {
        params = params.with_ell_max(l)?;
    }
    let var = Variational::new(spec, d, params)?;
    let ts = cfg.t_values();
    let reports = clock.time("variational", || ts.par_iter().map(|&t| var.sandwich_bounds(t)).collect::<Vec<_>>());

    // empirical columns need a box; with a fixed side one set of spectra serves every t
    let empirical: Vec<Option<EmpiricalRow>> = match cfg.n {
        None => vec![None; ts.len()],
        Some(_) => {
            let (n_disorder, seed) = (cfg.n_disorder.expect("validated n_disorder"), seed(cfg));
            let method = MomentMethod::Integrator { tol: cfg.krylov_tol() };
            clock.time("empirical", || -> Result<_> {
                let mut out = Vec::with_capacity(ts.len());
                let fixed = match cfg.n {
                    Some(Side::Fixed(n)) => {
                        let g = BoxGeometry::new(d, n)?;
                        Some((n, annealed_heat_trace_grid(&spec, &g, &ts, n_disorder, seed)?))
                    }
                    _ => None,
                };
                for (k, &t) in ts.iter().enumerate() {
                    let n = side_for(cfg, Some(t))?;
                    let g = BoxGeometry::new(d, n)?;
                    let nhat = match &fixed {
                        Some((_, v)) => v[k],
                        None => annealed_heat_trace_grid(&spec, &g, &[t], n_disorder, seed)?[0],
                    };
                    let u = annealed_moment(&spec, &g, t, n_disorder, method, seed)?;
                    let (ln_n, se_n) = log_se(&nhat);
                    let (ln_u, se_u) = log_se(&u);
                    out.push(Some((ln_n, ln_u, se_n, se_u, n)));
                }
                Ok(out)
            })?
        }
    };

    let mut table = Table::new(
        "bounds",
        &[
            "t",
            "G",
            "inf_chi_minus",
            "argmin_minus",
            "inf_chi_plus",
            "argmin_plus",
            "lower",
            "upper",
            "log_Nhat_emp",
            "log_u_emp",
            "se",
            "regime",
            "se_u",
            "n",
        ],
    );
    table.meta("d", d).meta("c_fk", cfg.c_fk()).meta("mode", format!("{:?}", var.params.mode));
    table.meta("se", "standard error of log_Nhat_emp (delta method); se_u likewise for log_u_emp");
    for (rep, emp) in reports.into_iter().zip(empirical) {
        let rep = rep?;
        let (ln_n, ln_u, se_n, se_u, n) = emp.unwrap_or((f64::NAN, f64::NAN, f64::NAN, f64::NAN, 0));
        table.push(vec![
            rep.t.into(),
            rep.g.into(),
            rep.chi_minus.value.into(),
            rep.chi_minus.argmin.into(),
            rep.chi_plus.value.into(),
            rep.chi_plus.argmin.into(),
            rep.lower.into(),
            rep.upper.into(),
            ln_n.into(),
            ln_u.into(),
            se_n.into(),
            rep.regime.as_str().into(),
            se_u.into(),
            n.into(),
        ]);
    }
    Ok(vec![table])
}

fn tauber(cfg: &ExperimentConfig, clock: &mut Stopwatch) -> Result<Vec<Table>> {
    let (spec, d) = (spec(cfg), cfg.dim());
    let c = cfg.c_rate.unwrap_or(1.0);
    let meta = rv_metadata(&spec)?;
    let gamma = VariationalParams::new(cfg.c_fk())?.gamma;
    let classical = meta.rho >= 0.0 && !meta.g.is_zero() && meta.c_g > 0.0;
    let envelope_ok = (-1.0..0.0).contains(&meta.rho) && !meta.g.is_zero();
    let es = cfg.e_values();
    let rows = clock.time("legendre", || {
        es.par_iter()
            .map(|&e| -> Result<Vec<Cell>> {
                let rate = rate_function(&spec, e)?;
                if !rate.converged && rate.boundary.is_none() {
                    return Err(CliError::NonConvergence(format!("Legendre minimization at E = {e}")));
                }
                let (lower, upper) = if classical {
                    // χ* evaluated at the minimizing t of the rate function
                    let t = rate.t_star;
                    let minus = classical_chi_star(Which::Minus, t, &meta, d, gamma, PlusBranchConstant::default())?;
                    let plus = classical_chi_star(Which::Plus, t, &meta, d, gamma, PlusBranchConstant::default())?;
                    let b = shifted_rate_bounds(&spec, e, minus.capped, plus.value, d, c)?;
                    (b.lower, b.upper)
                } else {
                    (f64::NAN, f64::NAN)
                };
                // the envelope is an E ↘ 0 asymptotic; no root means E is outside its range
                let envelope = if envelope_ok && e > 0.0 {
                    match lifshitz_envelope(&spec, e, d, c) {
                        Ok(env) => env.log_n_scale,
                        Err(TauberError::NotBracketed(_)) => f64::NAN,
                        Err(err) => return Err(err.into()),
                    }
                } else {
                    f64::NAN
                };
                let boundary = match rate.boundary {
                    None => "interior",
                    Some(Boundary::Zero) => "zero",
                    Some(Boundary::Infinity) => "infinity",
                };
                Ok(vec![
                    e.into(),
                    rate.value.into(),
                    rate.t_star.into(),
                    boundary.into(),
                    lower.into(),
                    upper.into(),
                    envelope.into(),
                ])
            })
            .collect::<Result<Vec<_>>>()
    })?;
    let mut t = Table::new("tauber", &["E", "I", "t_star", "boundary", "shifted_lower", "shifted_upper", "lifshitz_log_n"]);
    t.meta("d", d).meta("c_rate", c).meta("rho", meta.rho);
    for r in rows {
        t.push(r);
    }
    Ok(vec![t])
}

/// Stieltjes sum `Σ e^{−tE_k} (N_k − N_{k−1})` of a tabulated IDS.
pub fn laplace_from_table(energies: &[f64], n: &[f64], t: f64) -> f64 {
    let mut prev = 0.0;
    let mut acc = 0.0;
    for (&e, &v) in energies.iter().zip(n) {
        acc += (-t * e).exp() * (v - prev);
        prev = v;
    }
    acc
}

fn report(cfg: &ExperimentConfig, clock: &mut Stopwatch) -> Result<Vec<Table>> {
    let inputs = cfg.report.as_ref().expect("validated report");
    let read = |p: &std::path::Path| -> Result<(ParsedCsv, String)> {
        let text = std::fs::read_to_string(p)?;
        let parsed = ParsedCsv::parse(&text).map_err(|e| CliError::Validation(vec![format!("{}: {e}", p.display())]))?;
        Ok((parsed, crate::output::sha256_hex(text.as_bytes())))
    };
    let ((b, b_hash), (i, i_hash)) = clock.time("read", || -> Result<_> { Ok((read(&inputs.bounds)?, read(&inputs.ids)?)) })?;
    let col = |p: &ParsedCsv, name: &str| p.column(name).map_err(|e| CliError::Validation(vec![e]));
    let (ts, lower, upper, emp) = (col(&b, "t")?, col(&b, "lower")?, col(&b, "upper")?, col(&b, "log_Nhat_emp")?);
    let (es, ns) = (col(&i, "E")?, col(&i, "N")?);

    let mut t = Table::new(
        "report",
        &["t", "lower", "upper", "log_Nhat_emp", "log_Nhat_ids", "lower_holds", "upper_holds"],
    );
    t.meta("bounds_source", format!("{} sha256={b_hash}", inputs.bounds.display()));
    t.meta("ids_source", format!("{} sha256={i_hash}", inputs.ids.display()));
    t.meta("log_Nhat_ids", "Stieltjes sum over the tabulated IDS grid");
    for k in 0..ts.len() {
        let from_ids = laplace_from_table(&es, &ns, ts[k]).ln();
        t.push(vec![
            ts[k].into(),
            lower[k].into(),
            upper[k].into(),
            emp[k].into(),
            from_ids.into(),
            (lower[k] <= from_ids).into(),
            (from_ids <= upper[k]).into(),
        ]);
    }
    Ok(vec![t])
}
