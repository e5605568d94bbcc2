//! File artifacts: CSV tables, JSON reports and gnuplot scripts.

use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use serde::Serialize;

use super::run::RunOutput;
use super::sweep::{SweepOutcome, SweepPlan};
use crate::observables::sz_density;
use crate::spectrum::{write_max_imag_csv, SpectrumResult};
use crate::Result;

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path)?))
}

/// `1.5` → `"1.500"`, used in snapshot file names.
pub fn time_tag(t: f64) -> String {
    format!("{t:.3}")
}

pub fn snapshot_file(t: f64) -> String {
    format!("snapshot_t{}.csv", time_tag(t))
}

pub fn density_file(t: f64) -> String {
    format!("sz_density_t{}.csv", time_tag(t))
}

const TRAJECTORY_GP: &str = r#"set datafile separator ','
set key autotitle columnhead
set xlabel 't [hbar/gamma0]'
set ylabel '<S_z>'
set yrange [-1.05:1.05]
set grid
plot 'trajectory.csv' using 1:2 with lines lw 2 title '<S_z>'
"#;

/// Gnuplot script for the trajectory, with the logistic overlay when fitted.
fn trajectory_script(out: &RunOutput) -> String {
    let mut s = String::from(TRAJECTORY_GP);
    if let Some(f) = out.fit.as_ref().and_then(|f| f.fit()) {
        let sign = if f.flipped { "-" } else { "" };
        s = s.trim_end().to_owned();
        s.push_str(&format!(
            ", \\\n     {sign}({a:e}/(1+exp(-({b:e})*(x+({t0:e}))))+({c:e})) dt 2 title 'logistic fit'\n",
            a = f.a,
            b = f.b,
            c = f.c,
            t0 = f.t0
        ));
    }
    s
}

fn density_script(times: &[f64]) -> String {
    let mut s = String::from(
        "set datafile separator ','\nset view map\nset size ratio -1\nset palette defined (-1 'blue', 0 'white', 1 'red')\nset cbrange [*:*]\nset xlabel 'x'\nset ylabel 'y'\n",
    );
    for t in times {
        s.push_str(&format!(
            "set title 't = {}'\nplot '{}' matrix with image notitle\npause -1\n",
            time_tag(*t),
            density_file(*t)
        ));
    }
    s
}

/// Writes `config.toml`, `trajectory.csv`, snapshots, `fit.json`,
/// `summary.json` and plot scripts.
pub fn write_run(out: &RunOutput, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join("config.toml"), out.config.to_toml()?)?;
    out.trajectory.write_csv(create(&dir.join("trajectory.csv"))?)?;
    let mut times = Vec::new();
    for snap in &out.trajectory.snapshots {
        snap.state.write_csv(create(&dir.join(snapshot_file(snap.time)))?)?;
        sz_density(&snap.state).write_grid_csv(create(&dir.join(density_file(snap.time)))?)?;
        times.push(snap.time);
    }
    match &out.fit {
        Some(fit) => write_json(&dir.join("fit.json"), fit)?,
        None => write_json(
            &dir.join("fit.json"),
            &serde_json::json!({ "status": "failed", "error": out.report.fit_error }),
        )?,
    }
    write_json(&dir.join("summary.json"), &out.report)?;
    fs::write(dir.join("trajectory.gp"), trajectory_script(out))?;
    if !times.is_empty() {
        fs::write(dir.join("sz_density.gp"), density_script(&times))?;
    }
    Ok(())
}

fn opt<T: ToString>(v: &Option<T>) -> String {
    v.as_ref().map(|x| x.to_string()).unwrap_or_default()
}

/// Directory name of grid point `i`.
pub fn point_dir(i: usize, param: &str, value: f64) -> PathBuf {
    PathBuf::from(format!("point_{i:03}_{param}_{value}"))
}

fn sweep_script(plan: &SweepPlan, outcome: &SweepOutcome) -> String {
    let param = plan.param.to_string();
    let mut s = format!(
        "set datafile separator ','\nset key autotitle columnhead\nset xlabel '{param}'\nset ylabel 'tau [hbar/gamma0]'\nset grid\n"
    );
    let fit = outcome
        .summary
        .inverse_fit
        .as_ref()
        .map(|f| {
            format!(
                ", \\\n     ({:e})/(({:e})+x)+({:e}) dt 2 title 'alpha/(beta+G)+gamma'",
                f.alpha, f.beta, f.gamma_off
            )
        })
        .unwrap_or_default();
    s.push_str(&format!("plot 'sweep.csv' using 1:3 with linespoints pt 7 title 'tau'{fit}\n"));
    if outcome.spectra.is_some() {
        s.push_str("set ylabel 'max Im E [gamma0]'\nplot 'spectrum.csv' using 1:2 with linespoints pt 5 title 'max Im E'\n");
    }
    s
}

/// Writes `sweep.csv`, `sweep_summary.json`, `inverse_fit.json` and one
/// run directory per grid point.
pub fn write_sweep(outcome: &SweepOutcome, plan: &SweepPlan, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join("config.toml"), plan.base.to_toml()?)?;
    let param = plan.param.to_string();

    let mut w = csv::Writer::from_writer(create(&dir.join("sweep.csv"))?);
    w.write_record([
        param.as_str(),
        "status",
        "tau",
        "tau_fs",
        "threshold_time",
        "final_sz",
        "collapse",
        "fit_converged",
        "fit_residual_rms",
        "max_imag",
        "error",
    ])?;
    for r in &outcome.rows {
        w.write_record([
            r.value.to_string(),
            r.status.clone(),
            opt(&r.tau),
            opt(&r.tau_fs),
            opt(&r.threshold_time),
            opt(&r.final_sz),
            opt(&r.collapse),
            opt(&r.fit_converged),
            opt(&r.fit_residual_rms),
            opt(&r.max_imag),
            opt(&r.error),
        ])?;
    }
    w.flush()?;

    write_json(&dir.join("sweep_summary.json"), &outcome.summary)?;
    if let Some(fit) = &outcome.summary.inverse_fit {
        write_json(&dir.join("inverse_fit.json"), fit)?;
    }
    if let Some(spectra) = &outcome.spectra {
        write_spectrum(spectra, dir)?;
    }
    for (i, (v, res)) in outcome.points.iter().enumerate() {
        let sub = dir.join(point_dir(i, &param, *v));
        match res {
            Ok(out) => write_run(out, &sub)?,
            Err(e) => {
                fs::create_dir_all(&sub)?;
                write_json(&sub.join("error.json"), &serde_json::json!({ "error": e.to_string() }))?;
            }
        }
    }
    fs::write(dir.join("sweep.gp"), sweep_script(plan, outcome))?;
    Ok(())
}

/// Writes `spectrum.csv` (G, max Im) and one `eigenvalues_NNN.csv` per G.
pub fn write_spectrum(spectra: &[SpectrumResult], dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    write_max_imag_csv(spectra, create(&dir.join("spectrum.csv"))?)?;
    for (i, s) in spectra.iter().enumerate() {
        s.write_csv(create(&dir.join(format!("eigenvalues_{i:03}.csv")))?)?;
    }
    let mut gp = String::from(
        "set datafile separator ','\nset key autotitle columnhead\nset xlabel 'Re E'\nset ylabel 'Im E'\nset grid\nplot ",
    );
    let plots: Vec<String> = spectra
        .iter()
        .enumerate()
        .map(|(i, s)| format!("'eigenvalues_{i:03}.csv' using 1:2 with points pt 7 ps 0.4 title 'G = {}'", s.g))
        .collect();
    gp.push_str(&plots.join(", \\\n     "));
    gp.push('\n');
    fs::write(dir.join("spectrum.gp"), gp)?;
    Ok(())
}

