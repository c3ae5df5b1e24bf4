use std::fs::{self, File};
use std::io::BufWriter;
use std::path::Path;
use std::sync::Arc;

use nnls_core::asymptotics::{AsymptoticModel, KinkSide};
use nnls_core::io::{
    write_kink, write_phase_table, write_predictions, write_snapshot, write_spectral, KinkRow, SpectralRow,
};
use nnls_core::pde::{compare, simulate_partial, ErrorReport, FieldSnapshot};
use nnls_core::scattering::{pure_step_spectral, InitialProfile, ProfileSpectral, PureStepSpectral, SpectralData};
use nnls_core::spectrum::{
    find_omegas, find_zeros, pure_step_zeros, to_json, verify_assumptions, winding_at, winding_profile,
    AssumptionReport, OmegaSet, SearchBox, ZeroSet,
};
use nnls_core::table::TabulatedSpectral;
use nnls_core::{Complex64, Error, Result};
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::config::{ExperimentConfig, ProfileSource};

fn create(dir: &Path, name: &str) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(dir.join(name))?))
}

fn write_json(dir: &Path, name: &str, v: &Value) -> Result<()> {
    let mut s = serde_json::to_string_pretty(v)?;
    s.push('\n');
    fs::write(dir.join(name), s)?;
    Ok(())
}

fn cj(z: Complex64) -> Value {
    json!({ "re": z.re, "im": z.im })
}

fn spectral_data(cfg: &ExperimentConfig) -> Result<Arc<dyn SpectralData>> {
    Ok(match cfg.source {
        ProfileSource::PureStep => Arc::new(PureStepSpectral::new(cfg.bg())),
        ProfileSource::Csv(_) => Arc::new(TabulatedSpectral::for_profile(cfg.profile.clone())?),
    })
}

fn model(cfg: &ExperimentConfig) -> Result<AsymptoticModel> {
    match cfg.source {
        ProfileSource::PureStep => AsymptoticModel::for_pure_step(cfg.bg()),
        ProfileSource::Csv(_) => AsymptoticModel::for_profile(cfg.profile.clone()),
    }
}

/// Spectral functions on the k grid from the Jost equation.
pub fn scatter(cfg: &ExperimentConfig) -> Result<Value> {
    let numeric = ProfileSpectral::new(cfg.profile.clone());
    let ks = cfg.k_grid.points();
    let rows: Vec<SpectralRow> = ks
        .par_iter()
        .map(|&k| {
            let v = numeric.real_axis(k)?;
            let (r1, r2) = (v.r1(), v.r2());
            Ok(SpectralRow {
                k,
                a1: v.a1,
                a2: v.a2,
                b: v.b,
                r1,
                r2,
                identity_residual: (v.a1 * v.a2 - v.b * v.b_mirror.conj() - 1.0).norm(),
            })
        })
        .collect::<Result<_>>()?;
    write_spectral(create(&cfg.out, "spectral.csv")?, &rows)?;
    let max_res = rows.iter().map(|r| r.identity_residual).fold(0.0, f64::max);
    let source = match &cfg.source {
        ProfileSource::PureStep => "pure_step".to_string(),
        ProfileSource::Csv(p) => p.display().to_string(),
    };
    let mut summary = json!({ "source": source, "points": rows.len(), "max_identity_residual": max_res });
    if matches!(cfg.source, ProfileSource::PureStep) {
        let mut worst = 0.0f64;
        for r in &rows {
            let (a1, a2, b) = pure_step_spectral(cfg.bg(), Complex64::new(r.k, 0.0))?;
            for (num, exact) in [(r.a1, a1), (r.a2, a2), (r.b, b)] {
                worst = worst.max((num - exact).norm() / exact.norm().max(1e-300));
            }
        }
        summary["max_closed_form_rel_error"] = json!(worst);
    }
    write_json(&cfg.out, "scatter_summary.json", &summary)?;
    Ok(summary)
}

struct SpectrumRun {
    zeros: ZeroSet,
    omegas: OmegaSet,
    report: AssumptionReport,
}

fn spectrum_run(cfg: &ExperimentConfig) -> Result<(SpectrumRun, Value)> {
    let spec = spectral_data(cfg)?;
    let bg = cfg.bg();
    if let Some(n) = bg.bifurcation_index() {
        return Err(Error::Bifurcation { r: bg.r, n, half_a: bg.a / 2.0 });
    }
    let (zeros, support) = match cfg.source {
        ProfileSource::PureStep => (pure_step_zeros(bg)?.with_norming_constants(&InitialProfile::pure_step(bg))?, bg.r),
        ProfileSource::Csv(_) => (
            find_zeros(spec.as_ref(), &SearchBox::for_background(bg))?.with_norming_constants(&cfg.profile)?,
            cfg.profile.support_half_width(),
        ),
    };
    let table = winding_profile(spec.as_ref(), support)?;
    let omegas = find_omegas(spec.as_ref(), &table, zeros.n())?;
    let report = verify_assumptions(spec.as_ref(), &zeros, &omegas, &table)?;

    // winding on a grid reaching past the largest threshold, plus the thresholds
    let mut rows: Vec<(f64, f64, &str)> = Vec::new();
    let top = omegas.omegas.last().copied().unwrap_or(0.0).max(zeros.p.last().map_or(0.5, |p| -p.re)) * 1.5;
    for i in 1..=200 {
        let xi = top * i as f64 / 200.0;
        if let Ok(phi) = winding_at(spec.as_ref(), &table, xi) {
            rows.push((xi, phi, "grid"));
        }
    }
    for &w in &omegas.omegas {
        rows.push((w, winding_at(spec.as_ref(), &table, w)?, "omega"));
    }
    let mut wtr = create(&cfg.out, "winding.csv")?;
    {
        use std::io::Write;
        writeln!(wtr, "xi,phi,phi_over_pi,kind")?;
        for (xi, phi, kind) in &rows {
            writeln!(wtr, "{xi},{phi},{},{kind}", phi / std::f64::consts::PI)?;
        }
        wtr.flush()?;
    }
    let mut zj = to_json(&zeros, &omegas)?;
    zj.push('\n');
    fs::write(cfg.out.join("zeros.json"), zj)?;
    let rep = json!({
        "zeros_ok": report.zeros_ok,
        "a2_nonvanishing": report.a2_nonvanishing,
        "interleaving_ok": report.interleaving_ok,
        "winding_bands_ok": report.winding_bands_ok,
        "all_ok": report.all_ok(),
        "diagnostics": report.diagnostics,
    });
    write_json(&cfg.out, "assumptions.json", &rep)?;
    let summary = json!({
        "n": zeros.n(),
        "p": zeros.p.iter().map(|&z| cj(z)).collect::<Vec<_>>(),
        "eta": zeros.eta.iter().map(|&z| cj(z)).collect::<Vec<_>>(),
        "omegas": omegas.omegas,
        "assumptions": rep,
    });
    Ok((SpectrumRun { zeros, omegas, report }, summary))
}

/// Zeros, thresholds, winding table and assumption report.
pub fn zeros(cfg: &ExperimentConfig) -> Result<Value> {
    let (run, summary) = spectrum_run(cfg)?;
    let _ = (&run.zeros, &run.omegas);
    if !run.report.all_ok() {
        return Err(Error::Assumption(run.report.diagnostics.join("; ")));
    }
    Ok(summary)
}

/// Phase table, predictions and optionally kink tables.
pub fn predict(cfg: &ExperimentConfig, kink: bool) -> Result<Value> {
    let m = model(cfg)?;
    let xis = cfg.xi_grid.points();
    let results: Vec<(f64, Result<Vec<nnls_core::asymptotics::AsymptoticPrediction>>)> = xis
        .par_iter()
        .map(|&xi| (xi, cfg.t_list.iter().map(|&t| m.predict(xi, t)).collect()))
        .collect();
    let mut predictions = Vec::new();
    let mut skipped = Vec::new();
    let mut sectors = Vec::new();
    for (xi, r) in results {
        match r {
            Ok(ps) => {
                if let Some(p) = ps.first() {
                    sectors.push(json!({ "xi": xi, "family": p.sector.family.name(), "m": p.sector.m }));
                }
                predictions.extend(ps);
            }
            Err(e) if matches!(e, Error::TransitionZone { .. } | Error::SingularDirection) => {
                skipped.push(json!({ "xi": xi, "reason": e.to_string() }));
            }
            Err(e) => return Err(e),
        }
    }
    write_predictions(create(&cfg.out, "predictions.csv")?, &predictions)?;

    let mut dirs: Vec<f64> = predictions.iter().map(|p| p.xi.abs()).collect();
    dirs.sort_by(f64::total_cmp);
    dirs.dedup();
    let phase: Vec<_> = dirs.iter().map(|&x| m.engine.phase_values(x)).collect::<Result<_>>()?;
    write_phase_table(create(&cfg.out, "phase.csv")?, &phase)?;

    let mut summary = json!({
        "n": m.n(),
        "omegas": m.omegas.omegas,
        "sectors": sectors,
        "skipped": skipped,
        "predictions": predictions.len(),
    });
    if kink {
        let mut rows = Vec::new();
        let mut singular = 0usize;
        for side in [KinkSide::XPositive, KinkSide::XNegative] {
            let prof = m.kink_profile(cfg.kink_m, side)?;
            for &t in &cfg.kink_t {
                for x0 in cfg.kink_x0.points() {
                    let q = match prof.value(x0, t) {
                        Ok(q) => Some(q),
                        Err(Error::KinkBlowUp(_)) => {
                            singular += 1;
                            None
                        }
                        Err(e) => return Err(e),
                    };
                    rows.push(KinkRow { m: cfg.kink_m, side, x0, t, x: prof.x_of(x0, t), q });
                }
            }
        }
        write_kink(create(&cfg.out, "kink.csv")?, &rows)?;
        summary["kink_rows"] = json!(rows.len());
        summary["kink_singular_rows"] = json!(singular);
    }
    write_json(&cfg.out, "predict_summary.json", &summary)?;
    Ok(summary)
}

fn run_simulation(cfg: &ExperimentConfig, times: &[f64]) -> Result<(Vec<FieldSnapshot>, Value, Option<Error>)> {
    let scfg = cfg.simulation_config(times)?;
    let out = simulate_partial(&cfg.profile, &scfg)?;
    let dir = cfg.out.join("snapshots");
    fs::create_dir_all(&dir)?;
    for (i, s) in out.snapshots.iter().enumerate() {
        write_snapshot(create(&dir, &format!("snapshot_{i:03}.csv"))?, s)?;
    }
    let summary = json!({
        "l": scfg.l,
        "dx": scfg.dx,
        "dt": scfg.dt,
        "sponge_width": scfg.sponge_width,
        "ramp_width": out.ramp_width,
        "snapshot_times": out.snapshots.iter().map(|s| s.t).collect::<Vec<_>>(),
        "blow_up": out.blow_up,
    });
    write_json(&cfg.out, "simulate_summary.json", &summary)?;
    Ok((out.snapshots, summary, out.blow_up.map(Error::from)))
}

/// Direct simulation with snapshots at the t list.
pub fn simulate(cfg: &ExperimentConfig) -> Result<Value> {
    let (_, summary, err) = run_simulation(cfg, &cfg.t_list)?;
    match err {
        Some(e) => Err(e),
        None => Ok(summary),
    }
}

/// Simulation plus predictions on the xi grid, compared ray by ray.
pub fn compare_cmd(cfg: &ExperimentConfig) -> Result<Value> {
    let m = model(cfg)?;
    let (snaps, _, blow) = run_simulation(cfg, &cfg.t_list)?;
    let mut predictions = Vec::new();
    let mut skipped = Vec::new();
    for xi in cfg.xi_grid.points() {
        for s in &snaps {
            if (4.0 * xi * s.t).abs() > s.trusted {
                skipped.push(json!({ "xi": xi, "t": s.t, "reason": "ray outside the trusted region" }));
                continue;
            }
            match m.predict(xi, s.t) {
                Ok(p) => predictions.push(p),
                Err(e @ (Error::TransitionZone { .. } | Error::SingularDirection)) => {
                    skipped.push(json!({ "xi": xi, "t": s.t, "reason": e.to_string() }));
                }
                Err(e) => return Err(e),
            }
        }
    }
    let report: ErrorReport = compare(&predictions, &snaps)?;
    let mut v = serde_json::to_value(&report)?;
    v["skipped"] = json!(skipped);
    v["all_slopes_ok"] = json!(report.all_slopes_ok());
    write_json(&cfg.out, "error_report.json", &v)?;
    match blow {
        Some(e) => Err(e),
        None => Ok(json!({ "records": report.records.len(), "slopes": report.slopes.len(), "all_slopes_ok": report.all_slopes_ok() })),
    }
}

/// zeros + predict (+ compare when a simulation is configured), with a
/// combined report.json.
pub fn report(cfg: &ExperimentConfig, kink: bool) -> Result<Value> {
    let mut v = json!({});
    let mut first_err = None;
    let mut steps = vec!["zeros", "predict"];
    if cfg.simulation.is_some() {
        steps.push("compare");
    }
    for name in steps {
        let out = match name {
            "zeros" => zeros(cfg),
            "predict" => predict(cfg, kink),
            _ => compare_cmd(cfg),
        };
        match out {
            Ok(x) => v[name] = x,
            Err(e) => {
                v[name] = json!({ "error": e.to_string(), "class": e.class().to_string() });
                if first_err.is_none() {
                    first_err = Some(e);
                }
            }
        }
    }
    write_json(&cfg.out, "report.json", &v)?;
    match first_err {
        Some(e) => Err(e),
        None => Ok(v),
    }
}
