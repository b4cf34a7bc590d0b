use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use anyhow::Context;
use twopoint_core::analytic::Direction;
use twopoint_core::forge::{
    forge_invariants, verify_invariant_drift, DriftOptions, ForgeSummary, PointSampleSet,
};
use twopoint_core::grid::GridSpec;
use twopoint_core::laws::{
    balance_streaming, density, discover_laws, law_inversion, law_local_energy, law_rotation,
    law_translation, random_ensemble, BalanceOptions, BalanceReport, DiscoveryOptions,
    TwoPointLawSpec,
};
use twopoint_core::ops::volume_integral;

use crate::config::{config_err, ExperimentConfig, Ladder, LawKind, MapConfig, RunConfig};

/// Result of a command that ran to completion: `true` when every check passed.
pub type Outcome = anyhow::Result<bool>;

fn prepare_out(dir: &Path) -> anyhow::Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))
}

fn write(dir: &Path, name: &str, text: &str) -> anyhow::Result<()> {
    let p = dir.join(name);
    fs::write(&p, text).with_context(|| format!("cannot write {}", p.display()))
}

fn verdict(ok: bool) -> &'static str {
    if ok {
        "PASS"
    } else {
        "FAIL"
    }
}

fn labelled_laws(
    cfg: &ExperimentConfig,
    grid: &GridSpec,
    base: &Path,
) -> anyhow::Result<Vec<(String, TwoPointLawSpec)>> {
    if cfg.laws.is_empty() {
        return Err(config_err("at least one [[laws]] entry is required"));
    }
    let mut out: Vec<(String, TwoPointLawSpec)> = Vec::new();
    for l in &cfg.laws {
        let label = l.kind.label();
        if out.iter().any(|(n, _)| *n == label) {
            return Err(config_err(format!("law `{label}` is listed twice")));
        }
        out.push((label, l.kind.build(grid, base)?));
    }
    Ok(out)
}

/// `Q(0)` of a translation law for a plane-wave start, when both apply.
fn planewave_reference(
    cfg: &ExperimentConfig,
    grid: &GridSpec,
    kind: &LawKind,
    dt: f64,
) -> Option<f64> {
    let spec = cfg.planewave_spec()?;
    let LawKind::Translation { nodes, steps } = kind else {
        return None;
    };
    if nodes[0] != 0 || nodes[1] != 0 {
        return None;
    }
    let k = spec.wavenumber(grid);
    let d = nodes[2] as f64 * grid.spacing()[2];
    let lag = *steps as f64
        * dt
        * if spec.direction == Direction::Forward {
            1.0
        } else {
            -1.0
        };
    Some(grid.volume() * spec.amplitude.powi(2) * (k * d - k * lag).cos())
}

pub fn verify(cfg: &ExperimentConfig, base: &Path) -> Outcome {
    let grid = cfg.grid()?;
    let (dt, nsteps) = cfg.run.schedule(&grid)?;
    let laws = labelled_laws(cfg, &grid, base)?;
    let initial = cfg.initial.build(&grid)?;
    let opts = BalanceOptions {
        pointwise: cfg.run.pointwise,
        stencil: cfg.run.stencil.into(),
    };
    let specs: Vec<TwoPointLawSpec> = laws.iter().map(|(_, l)| l.clone()).collect();
    let reports = balance_streaming(
        &initial,
        &cfg.source,
        dt,
        nsteps,
        cfg.run.stepper,
        &specs,
        opts,
        cfg.run.stride,
    )?;

    let out = &cfg.output.dir;
    prepare_out(out)?;
    let mut summary = String::new();
    let _ = writeln!(summary, "command verify");
    let _ = writeln!(
        summary,
        "grid {:?} stepper {:?} dt {:e} nsteps {nsteps}",
        grid.dims(),
        cfg.run.stepper,
        dt
    );
    let mut all = true;
    for ((label, _), (lc, rep)) in laws.iter().zip(cfg.laws.iter().zip(&reports)) {
        write(out, &format!("balance_{label}.csv"), &rep.to_csv())?;
        let defect = rep.max_relative_defect();
        let mut ok = defect <= lc.tolerance;
        let _ = write!(
            summary,
            "law {label}: Q0 {:.12e} max_rel_defect {defect:.3e} (tol {:.1e})",
            rep.q[0], lc.tolerance
        );
        if let Some(r) = residual_ratio(rep, &grid) {
            ok &= r <= lc.residual_tolerance;
            let _ = write!(
                summary,
                " max_rel_residual {r:.3e} (tol {:.1e})",
                lc.residual_tolerance
            );
        }
        if let Some(q) = planewave_reference(cfg, &grid, &lc.kind, dt) {
            let scale = grid.volume() * cfg.planewave_spec().map_or(0.0, |s| s.amplitude.powi(2));
            let err = if scale > 0.0 {
                (rep.q[0] - q).abs() / scale
            } else {
                (rep.q[0] - q).abs()
            };
            ok &= err <= lc.tolerance;
            let _ = write!(summary, " analytic_Q0 {q:.12e} rel_err {err:.3e}");
        }
        let _ = writeln!(summary, " {}", verdict(ok));
        all &= ok;
    }
    let _ = writeln!(summary, "overall {}", verdict(all));
    write(out, "summary.txt", &summary)?;
    print!("{summary}");
    Ok(all)
}

/// Largest `r_max / r_scale`, with the scale floored at round-off level so identically vanishing laws pass.
fn residual_ratio(rep: &BalanceReport, grid: &GridSpec) -> Option<f64> {
    let (r, s) = (rep.r_max.as_ref()?, rep.r_scale.as_ref()?);
    let hmin = grid.spacing().into_iter().fold(f64::INFINITY, f64::min);
    let floor = 1e-10 * rep.energy0 / (grid.volume() * hmin);
    Some(r.iter().zip(s).fold(0.0, |m, (r, s)| {
        let d = s.max(floor);
        m.max(if d > 0.0 { r / d } else { *r })
    }))
}

fn max_residual(rep: &BalanceReport) -> anyhow::Result<f64> {
    rep.max_residual()
        .ok_or_else(|| config_err("refinement studies need run.pointwise = true"))
}

pub fn converge(cfg: &ExperimentConfig, base: &Path) -> Outcome {
    let refine = cfg
        .refinement
        .as_ref()
        .ok_or_else(|| config_err("[refinement] section is required"))?;
    if refine.levels < 3 {
        return Err(config_err(format!(
            "a refinement study needs at least 3 levels, got {}",
            refine.levels
        )));
    }
    if refine.factor < 2 {
        return Err(config_err("refinement.factor must be at least 2"));
    }
    if !cfg.run.pointwise {
        return Err(config_err("refinement studies need run.pointwise = true"));
    }
    let grid0 = cfg.grid()?;
    let dt0 = cfg.run.schedule(&grid0)?.0;
    let opts = BalanceOptions::pointwise(cfg.run.stencil.into());

    let names: Vec<String> = cfg.laws.iter().map(|l| l.kind.label()).collect();
    let mut errors: Vec<Vec<f64>> = vec![Vec::new(); cfg.laws.len()];
    let mut levels = Vec::new();
    for level in 0..refine.levels {
        let scale = refine.factor.pow(level as u32);
        let grid = match refine.ladder {
            Ladder::Joint => {
                GridSpec::with_lengths(grid0.dims().map(|n| n * scale), grid0.lengths())?
            }
            Ladder::Dt => grid0,
        };
        let node_scale = if refine.ladder == Ladder::Joint {
            scale
        } else {
            1
        };
        let run = RunConfig {
            dt: Some(dt0 / scale as f64),
            cfl_fraction: None,
            nsteps: cfg.run.nsteps.map(|n| n * scale),
            ..cfg.run.clone()
        };
        let (dt, nsteps) = run.schedule(&grid)?;
        let mut laws = labelled_laws(cfg, &grid, base)?;
        // node shifts follow the grid, step shifts follow dt
        for ((_, law), lc) in laws.iter_mut().zip(&cfg.laws) {
            if let LawKind::Translation { nodes, steps } = lc.kind {
                let label = law.name.clone();
                *law = law_translation(&grid, nodes.map(|n| n * node_scale as i64), steps * scale);
                law.name = label;
            }
        }
        let initial = cfg.initial.build(&grid)?;
        let specs: Vec<TwoPointLawSpec> = laws.into_iter().map(|(_, l)| l).collect();
        let reports = balance_streaming(
            &initial,
            &cfg.source,
            dt,
            nsteps,
            run.stepper,
            &specs,
            opts,
            run.stride,
        )?;
        for (e, rep) in errors.iter_mut().zip(&reports) {
            e.push(max_residual(rep)?);
        }
        levels.push((grid.dims(), dt));
    }

    let out = &cfg.output.dir;
    prepare_out(out)?;
    let lf = (refine.factor as f64).ln();
    let mut csv = String::from("# schema=1\nlaw,level,nx,ny,nz,dt,max_residual,order\n");
    let mut summary = String::from("command converge\n");
    let mut all = true;
    for (name, e) in names.iter().zip(&errors) {
        let orders: Vec<f64> = e.windows(2).map(|w| (w[0] / w[1]).ln() / lf).collect();
        for (level, ((dims, dt), err)) in levels.iter().zip(e).enumerate() {
            let order = if level == 0 {
                String::new()
            } else {
                format!("{:.17e}", orders[level - 1])
            };
            let _ = writeln!(
                csv,
                "{name},{level},{},{},{},{dt:.17e},{err:.17e},{order}",
                dims[0], dims[1], dims[2]
            );
        }
        let ok = orders
            .iter()
            .all(|&p| p >= refine.min_order && refine.max_order.is_none_or(|m| p <= m));
        let shown: Vec<String> = orders.iter().map(|p| format!("{p:.3}")).collect();
        let _ = writeln!(
            summary,
            "law {name}: orders [{}] (min {}) {}",
            shown.join(", "),
            refine.min_order,
            verdict(ok)
        );
        all &= ok;
    }
    let _ = writeln!(summary, "overall {}", verdict(all));
    write(out, "orders.csv", &csv)?;
    write(out, "summary.txt", &summary)?;
    print!("{summary}");
    Ok(all)
}

fn reference_laws(
    map: &MapConfig,
    grid: &GridSpec,
    time_shift: usize,
) -> anyhow::Result<Vec<TwoPointLawSpec>> {
    Ok(match map {
        MapConfig::Identity if time_shift == 0 => vec![law_local_energy()],
        MapConfig::Inversion if time_shift == 0 => vec![law_inversion()],
        MapConfig::Rotation { .. } if time_shift == 0 => vec![law_rotation(&map.build(grid)?)?],
        MapConfig::Translation { nodes } => vec![law_translation(grid, *nodes, time_shift)],
        _ => Vec::new(),
    })
}

pub fn discover(cfg: &ExperimentConfig) -> Outcome {
    let d = cfg
        .discover
        .as_ref()
        .ok_or_else(|| config_err("[discover] section is required"))?;
    let grid = cfg.grid()?;
    let map = d.map.build(&grid)?;
    let ensemble = random_ensemble(&grid, d.kmax, d.ensemble, d.seed, d.dt, d.nsteps)?;
    let opts = DiscoveryOptions {
        null_tolerance: d.null_tolerance,
        ..DiscoveryOptions::default()
    };
    let res = discover_laws(&ensemble, &map, d.time_shift, &opts)?;

    let out = &cfg.output.dir;
    prepare_out(out)?;
    let mut csv = String::from("# schema=1\ncandidate,singular_value,holdout_residual,verified\n");
    for (i, c) in res.candidates.iter().enumerate() {
        let _ = writeln!(
            csv,
            "{i},{:.17e},{:.17e},{}",
            c.singular_value, c.holdout_residual, c.verified
        );
        let mut law = c.law.clone();
        law.name = format!("discovered_{i}");
        write(out, &format!("law_{i}.toml"), &law.to_toml())?;
    }
    write(out, "candidates.csv", &csv)?;

    let mut summary = String::from("command discover\n");
    let _ = writeln!(summary, "rows {} nullity {}", res.rows, res.nullity());
    if let Some(r) = res.reference_residual {
        let _ = writeln!(summary, "reference_holdout_residual {r:.3e}");
    }
    for law in reference_laws(&d.map, &grid, d.time_shift)? {
        let _ = writeln!(
            summary,
            "projection {} {:.6}",
            law.name,
            res.projection(&law)
        );
        if let Some(top) = res.candidates.first() {
            let u = law.normalized().coefficients();
            let overlap: f64 = top
                .law
                .coefficients()
                .iter()
                .zip(&u)
                .map(|(a, b)| a * b)
                .sum();
            let _ = writeln!(
                summary,
                "top_candidate_overlap {} {:.6}",
                law.name,
                overlap.abs()
            );
        }
    }
    let verified = res.candidates.iter().filter(|c| c.verified).count();
    let _ = writeln!(summary, "verified {verified} of {}", res.candidates.len());
    let ok = verified > 0;
    let _ = writeln!(summary, "overall {}", verdict(ok));
    write(out, "summary.txt", &summary)?;
    print!("{summary}");
    Ok(ok)
}

pub fn forge(cfg: &ExperimentConfig) -> Outcome {
    let f = cfg
        .forge
        .as_ref()
        .ok_or_else(|| config_err("[forge] section is required"))?;
    let pde = f.pde()?;
    let f0 = f.initial(&pde);
    let points = PointSampleSet::new(f.points.clone())?;
    let forged = forge_invariants(&pde, &f0, &points, f.order, f.tolerance)?;
    let opts = DriftOptions {
        fit_window: f.fit_window,
        ..DriftOptions::default()
    };

    let out = &cfg.output.dir;
    prepare_out(out)?;
    let mut coeffs = String::from("# schema=1\ninvariant,point,x,alpha\n");
    let mut summary = String::from("command forge\n");
    let inv = &forged.invariants;
    let _ = writeln!(
        summary,
        "points {} n_order {} rank {} nullspace_dim {}",
        points.len(),
        f.order,
        inv.rank(),
        inv.dim()
    );
    let _ = writeln!(
        summary,
        "moment_error_estimate {:.3e} ill_conditioned {}",
        forged
            .moments
            .error_estimate
            .iter()
            .flatten()
            .fold(0.0, |m: f64, e| m.max(e.abs())),
        forged.moments.ill_conditioned
    );
    let mut ok = true;
    let mut worst: Option<f64> = None;
    for (i, alpha) in inv.basis.iter().enumerate() {
        for (j, (x, a)) in points.points().iter().zip(alpha).enumerate() {
            let _ = writeln!(coeffs, "{i},{j},{x:.17e},{a:.17e}");
        }
        let rep = verify_invariant_drift(&pde, &f0, &points, alpha, f.horizon, f.samples, &opts)?;
        write(out, &format!("drift_{i}.csv"), &rep.to_csv())?;
        let drift = rep.max_drift();
        let _ = write!(summary, "invariant {i}: max_drift {drift:.3e}");
        if let Some(m) = f.max_drift {
            ok &= drift <= m;
        }
        match rep.exponent {
            Some(p) => {
                let _ = write!(summary, " exponent {p:.4}");
                worst = Some(worst.map_or(p, |w: f64| w.min(p)));
                if let Some(m) = f.min_exponent {
                    ok &= p >= m;
                }
            }
            None => {
                // a drift that vanishes identically has no exponent and needs none
                if f.min_exponent.is_some() {
                    ok &= drift == 0.0;
                }
            }
        }
        let _ = writeln!(summary);
    }
    let row = ForgeSummary {
        points: points.len(),
        n_order: f.order,
        nullspace_dim: inv.dim(),
        exponent: worst,
    };
    write(out, "coefficients.csv", &coeffs)?;
    write(
        out,
        "forge_summary.csv",
        &format!(
            "# schema=1\n{}\n{}\n",
            ForgeSummary::CSV_HEADER,
            row.csv_row()
        ),
    )?;
    let _ = writeln!(summary, "overall {}", verdict(ok));
    write(out, "summary.txt", &summary)?;
    print!("{summary}");
    Ok(ok)
}

/// Integrated translation density of the configured plane wave against its closed form, node by node along z.
pub fn planewave(cfg: &ExperimentConfig) -> Outcome {
    let grid = cfg.grid()?;
    let spec = cfg
        .planewave_spec()
        .ok_or_else(|| config_err("planewave needs [initial] kind = \"planewave\""))?;
    let state = cfg.initial.build(&grid)?;
    let k = spec.wavenumber(&grid);
    let scale = grid.volume() * spec.amplitude.powi(2);
    let nz = grid.dims()[2] as i64;
    let mut csv = String::from("# schema=1\nnodes,d,analytic,numeric,rel_err\n");
    let mut worst: f64 = 0.0;
    for m in 0..=nz {
        let law = law_translation(&grid, [0, 0, m], 0);
        let numeric = volume_integral(&density(&law, &state, &state)?);
        let d = m as f64 * grid.spacing()[2];
        let exact = scale * (k * d).cos();
        let err = if scale > 0.0 {
            (numeric - exact).abs() / scale
        } else {
            (numeric - exact).abs()
        };
        worst = worst.max(err);
        let _ = writeln!(csv, "{m},{d:.17e},{exact:.17e},{numeric:.17e},{err:.17e}");
    }
    let out = &cfg.output.dir;
    prepare_out(out)?;
    write(out, "planewave.csv", &csv)?;
    let ok = worst <= 1e-8;
    let summary = format!(
        "command planewave\nmax_rel_err {worst:.3e} (tol 1.0e-8)\noverall {}\n",
        verdict(ok)
    );
    write(out, "summary.txt", &summary)?;
    print!("{summary}");
    Ok(ok)
}
