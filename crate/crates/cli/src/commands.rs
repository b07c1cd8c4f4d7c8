use kinetic_closure::ce_expansion::{self, format_rational};
use kinetic_closure::dispersion::{self, DispersionQuery};
use kinetic_closure::evolution::{self, AttractionRow, AttractionStart, EvolveConfig, Model, SpectralField, SupercriticalPolicy, Trajectory};
use kinetic_closure::operator;
use kinetic_closure::{Complex64, Error};
use num_traits::ToPrimitive;
use serde_json::{json, Value};

use crate::output::{self, fmt_f64, Csv, Format, Sink};
use crate::profile::Profile;
use crate::{CliError, Command, Common};

type Res<T> = Result<T, CliError>;

pub fn run(cmd: Command) -> Res<()> {
    match cmd {
        Command::Dispersion { k_min, k_max, n_points, tau, common } => dispersion_cmd(k_min, k_max, n_points, tau, &common),
        Command::Greens { x_min, x_max, n_points, common } => greens_cmd(x_min, x_max, n_points, &common),
        Command::Spectrum { k, tau, n, common } => spectrum_cmd(k, tau, n, &common),
        Command::Evolve {
            model,
            profile,
            tau,
            grid,
            length,
            t_end,
            dt,
            n_moments,
            policy,
            save_every,
            kinetic_start,
            seed,
            common,
        } => {
            let args = EvolveArgs {
                model,
                profile,
                tau,
                grid,
                length,
                t_end,
                dt,
                n_moments,
                policy,
                save_every,
                kinetic_start,
                seed,
            };
            evolve_cmd(&args, &common)
        }
        Command::Ce { order, common } => ce_cmd(order, &common),
    }
}

fn finite(name: &str, x: f64) -> Res<()> {
    if x.is_finite() {
        Ok(())
    } else {
        Err(CliError::Usage(format!("--{name} must be finite, got {x}")))
    }
}

fn sink(common: &Common) -> Sink {
    Sink { out: common.out.clone() }
}

fn meta(command: &str, common: &Common, config: Value) -> Value {
    json!({
        "artifact": "kclosure",
        "version": env!("CARGO_PKG_VERSION"),
        "command": command,
        "format": common.format.name(),
        "config": config,
    })
}

fn document(meta: Value, data: Value) -> String {
    output::json_string(&json!({"meta": meta, "data": data}))
}

/// `n` points from `a` to `b`; mirrored ranges give exactly mirrored points.
pub fn grid(a: f64, b: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![a];
    }
    let m = (n - 1) as f64;
    (0..n)
        .map(|i| {
            let (p, q) = ((n - 1 - i) as f64, i as f64);
            (a * p + b * q) / m
        })
        .collect()
}

fn dispersion_cmd(k_min: f64, k_max: f64, n_points: usize, tau: f64, common: &Common) -> Res<()> {
    finite("k-min", k_min)?;
    finite("k-max", k_max)?;
    if n_points == 0 {
        return Err(CliError::Usage("--n-points must be >= 1".into()));
    }
    if k_max < k_min {
        return Err(CliError::Usage(format!("--k-max ({k_max}) is below --k-min ({k_min})")));
    }
    let kc = dispersion::k_crit(tau)?;
    let requested = grid(k_min, k_max, n_points);
    let ks: Vec<f64> = requested.iter().copied().filter(|&k| k > 0.0 && k < kc).collect();
    if ks.is_empty() {
        return Err(CliError::Usage(format!(
            "no wave number of [{k_min}, {k_max}] lies in (0, k_crit = {kc})"
        )));
    }
    let mut warnings = Vec::new();
    if ks.len() < requested.len() {
        let w = json!({
            "warning": "clipped",
            "message": format!("kept wave numbers in (0, k_crit = {kc})"),
            "k_crit": kc,
            "requested": requested.len(),
            "kept": ks.len(),
        });
        output::diagnostic(&w);
        warnings.push(w);
    }
    let rows = dispersion::sweep(&ks, tau)?;
    let text = match common.format {
        Format::Csv => {
            let mut c = Csv::new(&["k", "x_star", "lambda_star", "residual"]);
            for r in &rows {
                c.row([r.k, r.x_star, r.lambda_star, r.residual].map(fmt_f64));
            }
            c.into_string()
        }
        Format::Json => {
            let cfg = json!({"k_min": k_min, "k_max": k_max, "n_points": n_points, "tau": tau});
            let col = |f: fn(&dispersion::DispersionResult) -> f64| rows.iter().map(f).collect::<Vec<_>>();
            let data = json!({
                "tau": tau,
                "k_crit": kc,
                "warnings": warnings,
                "k": col(|r| r.k),
                "x_star": col(|r| r.x_star),
                "lambda_star": col(|r| r.lambda_star),
                "residual": col(|r| r.residual),
            });
            document(meta("dispersion", common, cfg), data)
        }
    };
    sink(common).write(&text)?;
    Ok(())
}

fn greens_cmd(x_min: f64, x_max: f64, n_points: usize, common: &Common) -> Res<()> {
    finite("x-min", x_min)?;
    finite("x-max", x_max)?;
    if n_points == 0 {
        return Err(CliError::Usage("--n-points must be >= 1".into()));
    }
    if x_max < x_min {
        return Err(CliError::Usage(format!("--x-max ({x_max}) is below --x-min ({x_min})")));
    }
    let xs = grid(x_min, x_max, n_points);
    // `None` marks the jump at x = 0.
    let g: Vec<Option<f64>> = xs
        .iter()
        .map(|&x| if x == 0.0 { Ok(None) } else { dispersion::g_tilde(x).map(Some) })
        .collect::<Result<_, Error>>()?;
    let text = match common.format {
        Format::Csv => {
            let mut c = Csv::new(&["x", "g_tilde"]);
            for (x, g) in xs.iter().zip(&g) {
                c.row([fmt_f64(*x), g.map_or_else(|| "gap".to_string(), fmt_f64)]);
            }
            c.into_string()
        }
        Format::Json => {
            let cfg = json!({"x_min": x_min, "x_max": x_max, "n_points": n_points});
            let gaps: Vec<usize> = g.iter().enumerate().filter(|(_, v)| v.is_none()).map(|(i, _)| i).collect();
            let data = json!({"x": xs, "g_tilde": g, "gaps": gaps, "jump_at_zero": 2.0});
            document(meta("greens", common, cfg), data)
        }
    };
    sink(common).write(&text)?;
    Ok(())
}

fn spectrum_cmd(k: f64, tau: f64, n: usize, common: &Common) -> Res<()> {
    finite("k", k)?;
    let kc = dispersion::k_crit(tau)?;
    let op = operator::build_truncated(k, tau, n)?;
    let (isolated, slow_n) = if k == 0.0 {
        (vec![0.0, -1.0 / tau], None)
    } else {
        let r = dispersion::lambda_star(DispersionQuery::new(k, tau)?)?;
        let (lam, _) = operator::slow_eigenvalue_truncated(&op, operator::default_guess(k, tau)?, 100)?;
        (vec![r.lambda_star], Some(lam))
    };
    let ritz = operator::ritz_values(&op)?;
    let essential = (k != 0.0).then(|| -1.0 / tau);
    let text = match common.format {
        Format::Csv => {
            let mut c = Csv::new(&["kind", "re", "im"]);
            for &l in &isolated {
                c.row(["isolated".to_string(), fmt_f64(l), fmt_f64(0.0)]);
            }
            if let Some(re) = essential {
                c.row(["essential_line".to_string(), fmt_f64(re), String::new()]);
            }
            if let Some(l) = slow_n {
                c.row(["truncated_slow".to_string(), fmt_f64(l.re), fmt_f64(l.im)]);
            }
            for z in &ritz {
                c.row(["ritz".to_string(), fmt_f64(z.re), fmt_f64(z.im)]);
            }
            c.into_string()
        }
        Format::Json => {
            let cfg = json!({"k": k, "tau": tau, "n": n});
            let line = essential.map(|re| json!({"re": re, "description": "Re = -1/tau, Im = -k s for all real s"}));
            let data = json!({
                "k": k,
                "tau": tau,
                "k_crit": kc,
                "isolated": isolated,
                "essential_line": line,
                "truncated_slow": slow_n.map(|z| json!({"re": z.re, "im": z.im})),
                "ritz_re": ritz.iter().map(|z| z.re).collect::<Vec<_>>(),
                "ritz_im": ritz.iter().map(|z| z.im).collect::<Vec<_>>(),
            });
            document(meta("spectrum", common, cfg), data)
        }
    };
    sink(common).write(&text)?;
    Ok(())
}

fn ce_cmd(order: usize, common: &Common) -> Res<()> {
    if order == 0 {
        return Err(CliError::Usage("--order must be >= 1".into()));
    }
    let ce = ce_expansion::ce_recursion(order)?;
    let value = |t: &ce_expansion::CETerm| t.coeff.to_f64().unwrap_or(f64::NAN);
    let text = match common.format {
        Format::Csv => {
            let mut c = Csv::new(&["tau_power", "k_power", "coeff", "value"]);
            for t in &ce.terms {
                c.row([t.tau_power.to_string(), t.k_power.to_string(), format_rational(&t.coeff), fmt_f64(value(t))]);
            }
            c.into_string()
        }
        Format::Json => {
            let terms: Vec<Value> = ce
                .terms
                .iter()
                .map(|t| {
                    json!({"tau_power": t.tau_power, "k_power": t.k_power, "coeff": format_rational(&t.coeff), "value": value(t)})
                })
                .collect();
            document(meta("ce", common, json!({"order": order})), json!({"terms": terms}))
        }
    };
    sink(common).write(&text)?;
    Ok(())
}

pub struct EvolveArgs {
    pub model: String,
    pub profile: String,
    pub tau: f64,
    pub grid: usize,
    pub length: f64,
    pub t_end: f64,
    pub dt: f64,
    pub n_moments: usize,
    pub policy: String,
    pub save_every: usize,
    pub kinetic_start: String,
    pub seed: u64,
}

/// Per-mode growth over the run for modes `0..=n/2`.
pub struct ModeSummary {
    pub mode: usize,
    pub k: f64,
    pub amp_0: f64,
    pub amp_end: f64,
    pub rate: f64,
    pub growing: bool,
}

/// Relative amplitude increase treated as growth.
const GROWTH_TOL: f64 = 1e-12;

pub fn summarize(tr: &Trajectory<SpectralField>) -> Vec<ModeSummary> {
    let first = &tr.states[0];
    let last = tr.states.last().unwrap_or(first);
    let t = *tr.times.last().unwrap_or(&0.0);
    (0..=first.n_grid / 2)
        .map(|j| {
            let (a0, a1) = (first.modes[j].norm(), last.modes[j].norm());
            let rate = if t > 0.0 && a0 > 0.0 { (a1 / a0).ln() / t } else { f64::NAN };
            ModeSummary {
                mode: j,
                k: first.wave_number(j),
                amp_0: a0,
                amp_end: a1,
                rate,
                growing: a0 > 0.0 && a1 > a0 * (1.0 + GROWTH_TOL),
            }
        })
        .collect()
}

fn summary_json(s: &[ModeSummary]) -> Value {
    let growing: Vec<usize> = s.iter().filter(|m| m.growing).map(|m| m.mode).collect();
    json!({
        "growing": !growing.is_empty(),
        "growing_modes": growing,
        "mode": s.iter().map(|m| m.mode).collect::<Vec<_>>(),
        "k": s.iter().map(|m| m.k).collect::<Vec<_>>(),
        "amp_0": s.iter().map(|m| m.amp_0).collect::<Vec<_>>(),
        "amp_end": s.iter().map(|m| m.amp_end).collect::<Vec<_>>(),
        "rate": s.iter().map(|m| m.rate).collect::<Vec<_>>(),
        "mode_growing": s.iter().map(|m| m.growing).collect::<Vec<_>>(),
    })
}

fn summary_csv(s: &[ModeSummary]) -> String {
    let mut c = Csv::new(&["mode", "k", "amp_0", "amp_end", "rate", "growing"]);
    for m in s {
        c.row([m.mode.to_string(), fmt_f64(m.k), fmt_f64(m.amp_0), fmt_f64(m.amp_end), fmt_f64(m.rate), m.growing.to_string()]);
    }
    c.into_string()
}

fn attraction_json(rows: &[AttractionRow]) -> Value {
    let col = |f: fn(&AttractionRow) -> f64| rows.iter().map(f).collect::<Vec<_>>();
    json!({
        "mode": rows.iter().map(|r| r.mode).collect::<Vec<_>>(),
        "k": col(|r| r.k),
        "excluded": rows.iter().map(|r| r.excluded).collect::<Vec<_>>(),
        "lambda_star": col(|r| r.lambda_star),
        "gap": col(|r| r.gap),
        "fitted_rate": col(|r| r.fitted_rate),
        "mismatch": col(|r| r.mismatch),
        "projected_mismatch": col(|r| r.projected_mismatch),
    })
}

fn attraction_csv(rows: &[AttractionRow]) -> String {
    let mut c = Csv::new(&["mode", "k", "excluded", "lambda_star", "gap", "fitted_rate", "mismatch", "projected_mismatch"]);
    for r in rows {
        c.row([
            r.mode.to_string(),
            fmt_f64(r.k),
            r.excluded.to_string(),
            fmt_f64(r.lambda_star),
            fmt_f64(r.gap),
            fmt_f64(r.fitted_rate),
            fmt_f64(r.mismatch),
            fmt_f64(r.projected_mismatch),
        ]);
    }
    c.into_string()
}

fn evolve_cmd(a: &EvolveArgs, common: &Common) -> Res<()> {
    let model = Model::parse(&a.model)?;
    let policy = SupercriticalPolicy::parse(&a.policy)?;
    let start = match a.kinetic_start.as_str() {
        "equilibrium" => AttractionStart::Equilibrium,
        "white" => AttractionStart::White { seed: a.seed },
        other => return Err(CliError::Usage(format!("--kinetic-start must be equilibrium or white, got '{other}'"))),
    };
    let profile = Profile::parse(&a.profile).map_err(CliError::Usage)?;
    for (name, x) in [("tau", a.tau), ("length", a.length), ("t-end", a.t_end), ("dt", a.dt)] {
        finite(name, x)?;
    }
    let mut cfg = EvolveConfig::new(model, a.tau, a.dt, a.t_end);
    cfg.n_moments = a.n_moments;
    cfg.supercritical_policy = policy;
    cfg.save_every = a.save_every;
    cfg.validate()?;
    let length = a.length;
    let field = SpectralField::from_fn(length, a.grid, |x| profile.eval(x, length))?;
    if profile.max_mode() as usize > a.grid / 2 {
        return Err(CliError::Usage(format!(
            "profile mode {} is not resolved on a grid of {}",
            profile.max_mode(),
            a.grid
        )));
    }
    let tr = evolution::evolve(&field, &cfg)?;
    let summary = summarize(&tr);
    let attraction = if model == Model::KineticTruncated {
        Some(evolution::attraction_report_with(&field, a.tau, a.n_moments, a.t_end, start)?)
    } else {
        None
    };
    let xs: Vec<f64> = (0..field.n_grid).map(|j| field.x(j)).collect();
    let s = sink(common);
    match common.format {
        Format::Csv => {
            let mut header = vec!["t".to_string()];
            header.extend((0..xs.len()).map(|j| format!("x_{j}")));
            header.extend((0..xs.len()).map(|j| format!("rho_{j}")));
            let mut c = Csv::new(&header);
            for (t, f) in tr.times.iter().zip(&tr.states) {
                let cells = std::iter::once(*t).chain(xs.iter().copied()).chain(f.samples.iter().copied());
                c.row(cells.map(fmt_f64));
            }
            s.write(&c.into_string())?;
            match (s.sibling("summary"), s.sibling("attraction")) {
                (Some(sp), Some(ap)) => {
                    std::fs::write(sp, summary_csv(&summary))?;
                    if let Some(rows) = &attraction {
                        std::fs::write(ap, attraction_csv(rows))?;
                    }
                }
                _ => {
                    output::diagnostic(&json!({"summary": summary_json(&summary)}));
                    if let Some(rows) = &attraction {
                        output::diagnostic(&json!({"attraction": attraction_json(rows)}));
                    }
                }
            }
        }
        Format::Json => {
            let cfg_echo = json!({
                "model": model.name(),
                "profile": a.profile,
                "tau": a.tau,
                "grid": a.grid,
                "length": a.length,
                "t_end": a.t_end,
                "dt": a.dt,
                "n_moments": a.n_moments,
                "policy": policy.name(),
                "save_every": a.save_every,
                "kinetic_start": start.name(),
                "seed": a.seed,
            });
            let modes = |f: fn(&Complex64) -> f64| -> Vec<Vec<f64>> {
                tr.states.iter().map(|st| st.modes.iter().map(f).collect()).collect()
            };
            let data = json!({
                "times": tr.times,
                "x": xs,
                "fields": tr.states.iter().map(|st| st.samples.clone()).collect::<Vec<_>>(),
                "modes_re": modes(|c| c.re),
                "modes_im": modes(|c| c.im),
                "summary": summary_json(&summary),
                "attraction": attraction.as_deref().map(attraction_json),
            });
            s.write(&document(meta("evolve", common, cfg_echo), data))?;
        }
    }
    Ok(())
}
