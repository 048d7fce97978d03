//! Seeded experiment runner: resolves a configuration, computes the data
//! tables in memory, then writes them next to a `manifest.json`.
//!
//! Per-run seeds are `split_seed(master, label, run)` where `label` names
//! the experiment (and for `ot-tables` the `(m, n)` cell).

mod params;
pub mod part_a;
pub mod part_b;
mod table;

use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;

pub use params::{ExperimentConfig, ExperimentKind, Params, Value};
pub use table::{Cell, Format, Table};

use crate::error::{Error, Result};
use crate::metrics::tube_design;
use crate::rng::split_seed;
use crate::weights::{ForestParams, WeightMethod};
use part_b::{slice_msrec, tube_msret, MethodTube, OtSettings, OtTimings};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Phase {
    pub name: String,
    pub seconds: f64,
}

/// Wall-clock seconds per named phase, in first-use order.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
#[serde(transparent)]
pub struct Phases(pub Vec<Phase>);

impl Phases {
    pub fn add(&mut self, name: &str, seconds: f64) {
        match self.0.iter_mut().find(|p| p.name == name) {
            Some(p) => p.seconds += seconds,
            None => self.0.push(Phase { name: name.to_string(), seconds }),
        }
    }

    pub fn time<R>(&mut self, name: &str, f: impl FnOnce() -> R) -> R {
        let start = Instant::now();
        let r = f();
        self.add(name, start.elapsed().as_secs_f64());
        r
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.0.iter().find(|p| p.name == name).map(|p| p.seconds)
    }

    fn absorb(&mut self, t: &OtTimings) {
        if t.forest_train > 0.0 {
            self.add("forest_train", t.forest_train);
        }
        for (m, s) in &t.query {
            self.add(&format!("query_{}", m.name()), *s);
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    pub experiment: ExperimentKind,
    pub seed: u64,
    pub format: Format,
    pub overrides: std::collections::BTreeMap<String, String>,
    pub parameters: Params,
    pub code_version: String,
    pub phases: Phases,
    pub files: Vec<String>,
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub manifest: Manifest,
    pub manifest_path: PathBuf,
    pub files: Vec<PathBuf>,
}

/// Validates, computes and writes. Nothing is left on disk on failure.
pub fn run_experiment(config: &ExperimentConfig) -> Result<RunOutcome> {
    let params = config.resolve()?;
    let mut phases = Phases::default();
    let tables = compute_tables(config.experiment, config.seed, &params, &mut phases)?;
    let write_start = Instant::now();
    let mut written = Vec::new();
    let created_dir = !config.output_dir.exists();
    let result = write_all(config, &params, &tables, &mut phases, write_start, &mut written);
    match result {
        Ok((manifest, manifest_path)) => Ok(RunOutcome { manifest, manifest_path, files: written }),
        Err(e) => {
            for f in &written {
                let _ = std::fs::remove_file(f);
            }
            if created_dir {
                let _ = std::fs::remove_dir(&config.output_dir);
            }
            Err(e)
        }
    }
}

fn write_all(
    config: &ExperimentConfig,
    params: &Params,
    tables: &[Table],
    phases: &mut Phases,
    start: Instant,
    written: &mut Vec<PathBuf>,
) -> Result<(Manifest, PathBuf)> {
    let dir: &Path = &config.output_dir;
    std::fs::create_dir_all(dir).map_err(|e| Error::Internal(format!("creating {}: {e}", dir.display())))?;
    for t in tables {
        written.push(dir.join(format!("{}.{}", t.name, config.format.extension())));
        t.write(dir, config.format)?;
    }
    phases.add("write", start.elapsed().as_secs_f64());
    let manifest = Manifest {
        experiment: config.experiment,
        seed: config.seed,
        format: config.format,
        overrides: config.overrides.clone(),
        parameters: params.clone(),
        code_version: env!("CARGO_PKG_VERSION").to_string(),
        phases: phases.clone(),
        files: written.iter().map(|p| p.file_name().unwrap().to_string_lossy().into_owned()).collect(),
    };
    let path = dir.join("manifest.json");
    written.push(path.clone());
    let mut body = serde_json::to_string_pretty(&manifest).map_err(|e| Error::Internal(e.to_string()))?;
    body.push('\n');
    std::fs::write(&path, body).map_err(|e| Error::Internal(format!("writing {}: {e}", path.display())))?;
    written.pop();
    Ok((manifest, path))
}

/// All data tables of one experiment, without touching the disk.
pub fn compute_tables(kind: ExperimentKind, seed: u64, p: &Params, phases: &mut Phases) -> Result<Vec<Table>> {
    match kind {
        ExperimentKind::Motivating => motivating(seed, p, phases),
        ExperimentKind::LocstatMc => locstat(seed, p, phases),
        ExperimentKind::OtContour | ExperimentKind::OtTube => ot_single(kind, seed, p, phases),
        ExperimentKind::OtTables => ot_tables(seed, p, phases),
    }
}

fn motivating(seed: u64, p: &Params, phases: &mut Phases) -> Result<Vec<Table>> {
    let mut scatter = Table::new("scatter", &["case", "tau", "run", "i", "u", "truth", "global", "local"]);
    let mut summary = Table::new("summary", &["case", "tau", "run", "estimator", "phi1", "rmse", "bias", "correlation"]);
    let n = p.int("n");
    for run in 0..p.int("runs") {
        let s = split_seed(seed, "motivating", run as u64);
        for &nonstationary in &[false, true] {
            let case = if nonstationary { "nonstationary" } else { "stationary" };
            for &tau in p.floats("tau") {
                let o = phases.time("fit", || part_a::motivating_case(nonstationary, n, tau, p.float("b_n"), p.int("k"), s))?;
                for (g, &i) in o.index.iter().enumerate() {
                    scatter.push(vec![
                        case.into(),
                        tau.into(),
                        run.into(),
                        i.into(),
                        (i as f64 / n as f64).into(),
                        o.truth[g].into(),
                        o.global[g].into(),
                        o.local[g].into(),
                    ]);
                }
                for (name, stats, phi1) in
                    [("global", o.global_stats()?, Some(o.global_theta[1])), ("local", o.local_stats()?, None)]
                {
                    summary.push(vec![
                        case.into(),
                        tau.into(),
                        run.into(),
                        name.into(),
                        phi1.into(),
                        stats.rmse.into(),
                        stats.bias.into(),
                        stats.correlation.into(),
                    ]);
                }
            }
        }
    }
    Ok(vec![scatter, summary])
}

fn locstat(seed: u64, p: &Params, phases: &mut Phases) -> Result<Vec<Table>> {
    let ks = p.ints("k");
    let n = p.int("n");
    let q = crate::locstat::dgp::ar3_sine(n).p() + 1;
    let coef: Vec<String> = (0..q).map(|j| format!("theta{j}")).collect();
    let mut cols: Vec<String> =
        ["tau", "run", "k", "u", "boundary", "effective_n"].iter().map(|s| s.to_string()).collect();
    cols.extend(coef.iter().cloned());
    let mut fits = Table::with_columns("fits", cols);
    let mut cols: Vec<String> = ["tau", "k", "u"].iter().map(|s| s.to_string()).collect();
    cols.extend(coef.iter().map(|c| format!("mse_{c}")));
    cols.push("mse".into());
    let mut curves = Table::with_columns("mse_curves", cols);
    for &tau in p.floats("tau") {
        let o = phases.time("fit", || {
            part_a::locstat_mc(n, tau, p.float("b_n"), ks, p.int("grid_points"), p.int("runs"), seed)
        })?;
        for (ki, &k) in o.ks.iter().enumerate() {
            for (run, row) in o.fits[ki].iter().enumerate() {
                for f in row {
                    let mut r: Vec<Cell> =
                        vec![tau.into(), run.into(), k.into(), f.u.into(), f.boundary.into(), f.effective_n.into()];
                    r.extend(f.theta0().iter().map(|&v| Cell::from(v)));
                    fits.push(r);
                }
            }
            let c = &o.curves[ki];
            for (g, &u) in c.u.iter().enumerate() {
                let mut r: Vec<Cell> = vec![tau.into(), k.into(), u.into()];
                r.extend(c.per_coef.iter().map(|v| Cell::from(v[g])));
                r.push(c.aggregate[g].into());
                curves.push(r);
            }
        }
    }
    Ok(vec![fits, curves])
}

fn settings(p: &Params) -> Result<OtSettings> {
    let forest = ForestParams { n_trees: p.int("B"), min_leaf: p.int("min_leaf"), ..ForestParams::default() };
    Ok(OtSettings::new(p.grid_spec()?, p.float("b_n"), p.int("k_nn"), forest))
}

fn point_rows(table: &mut Table, head: &[Cell], tubes: &[MethodTube], taus: &[f64], levels: &[usize], with_x: bool) {
    for tube in tubes {
        for (xi, slice) in tube.slices.iter().enumerate() {
            for (&tau, &j) in taus.iter().zip(levels) {
                let c = slice.contours.iter().find(|c| c.level_index == j).expect("requested level");
                for (s, q) in c.points.iter().enumerate() {
                    let mut r = head.to_vec();
                    r.push(tube.method.name().into());
                    r.push(tau.into());
                    if with_x {
                        r.push(xi.into());
                        r.push(slice.x[0].into());
                    }
                    r.push(s.into());
                    r.extend(q.iter().map(|&v| Cell::from(v)));
                    table.push(r);
                }
            }
        }
    }
}

fn ot_single(kind: ExperimentKind, seed: u64, p: &Params, phases: &mut Phases) -> Result<Vec<Table>> {
    let settings = settings(p)?;
    let taus = p.floats("tau");
    let levels = settings.levels(taus)?;
    let (m, n) = (p.int("m"), p.int("n"));
    let contour = kind == ExperimentKind::OtContour;
    let x_list = if contour { vec![p.floats("x").to_vec()] } else { tube_design(m, p.int("n_x")) };
    let (mut points, mut metric) = if contour {
        (
            Table::new("contour", &["run", "method", "tau", "direction", "q1", "q2"]),
            Table::new("msrec", &["run", "method", "tau", "radius", "msrec"]),
        )
    } else {
        (
            Table::new("tube", &["run", "method", "tau", "x_index", "x1", "direction", "q1", "q2"]),
            Table::new("msret", &["run", "method", "tau", "msret"]),
        )
    };
    for run in 0..p.int("runs") {
        let data_seed = split_seed(seed, kind.name(), run as u64);
        let (tubes, t) = part_b::ot_tubes(m, n, data_seed, &x_list, &levels, &settings)?;
        phases.absorb(&t);
        point_rows(&mut points, &[run.into()], &tubes, taus, &levels, !contour);
        for tube in &tubes {
            for (&tau, &j) in taus.iter().zip(&levels) {
                let mut r: Vec<Cell> = vec![run.into(), tube.method.name().into(), tau.into()];
                if contour {
                    let slice = &tube.slices[0];
                    r.push(crate::metrics::population_radius(tau, &slice.x)?.into());
                    r.push(slice_msrec(slice, j, tau)?.into());
                } else {
                    r.push(tube_msret(&tube.slices, j, tau)?.into());
                }
                metric.push(r);
            }
        }
    }
    Ok(vec![points, metric])
}

fn ot_tables(seed: u64, p: &Params, phases: &mut Phases) -> Result<Vec<Table>> {
    let settings = settings(p)?;
    let taus = p.floats("tau");
    let levels = settings.levels(taus)?;
    let mut table = Table::new("msret", &["method", "m", "n", "tau", "seed", "msret"]);
    for &m in p.ints("m") {
        let x_list = tube_design(m, p.int("n_x"));
        for &n in p.ints("n") {
            for run in 0..p.int("runs") {
                let data_seed = split_seed(seed, &format!("ot-tables/m{m}/n{n}"), run as u64);
                let (tubes, t) = part_b::ot_tubes(m, n, data_seed, &x_list, &levels, &settings)?;
                phases.absorb(&t);
                for tube in &tubes {
                    for (&tau, &j) in taus.iter().zip(&levels) {
                        table.push(vec![
                            tube.method.name().into(),
                            m.into(),
                            n.into(),
                            tau.into(),
                            data_seed.into(),
                            tube_msret(&tube.slices, j, tau)?.into(),
                        ]);
                    }
                }
            }
        }
    }
    Ok(vec![table])
}

/// Mean of the `msret` column for one method and level, over all rows.
pub fn mean_metric(table: &Table, method: WeightMethod, tau: f64, metric: &str) -> Option<f64> {
    let (mc, tc, vc) = (table.column("method")?, table.column("tau")?, table.column(metric)?);
    let vals: Vec<f64> = table
        .rows
        .iter()
        .filter(|r| r[mc] == Cell::Text(method.name().into()) && r[tc] == Cell::Num(tau))
        .filter_map(|r| match r[vc] {
            Cell::Num(v) => Some(v),
            _ => None,
        })
        .collect();
    (!vals.is_empty()).then(|| vals.iter().sum::<f64>() / vals.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn locstat_row_counts_and_files() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = ExperimentConfig::new(ExperimentKind::LocstatMc, 1, dir.path().join("o"))
            .set("runs", 2)
            .set("n", 400)
            .set("b_n", 0.2)
            .set("grid_points", 4);
        let out = run_experiment(&cfg).unwrap();
        assert_eq!(out.manifest.files, vec!["fits.csv", "mse_curves.csv"]);
        let fits = std::fs::read_to_string(dir.path().join("o/fits.csv")).unwrap();
        assert_eq!(fits.lines().count(), 1 + 2 * 3 * 4);
        assert!(fits.starts_with("tau,run,k,u,boundary,effective_n,theta0,theta1,theta2,theta3\n"));
        let manifest: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(&out.manifest_path).unwrap()).unwrap();
        assert_eq!(manifest["parameters"]["n"], 400);
        assert_eq!(manifest["overrides"]["runs"], "2");
        assert!(manifest["phases"][0]["seconds"].as_f64().is_some());
    }

    #[test]
    fn invalid_config_writes_nothing() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("never");
        let cfg = ExperimentConfig::new(ExperimentKind::OtTube, 1, &out).set("tau", 0.33);
        assert!(run_experiment(&cfg).unwrap_err().is_validation());
        assert!(!out.exists());
    }

    #[test]
    fn unwritable_output_is_cleaned() {
        let dir = tempfile::tempdir().unwrap();
        let blocker = dir.path().join("file");
        std::fs::write(&blocker, "x").unwrap();
        let cfg = ExperimentConfig::new(ExperimentKind::Motivating, 1, blocker.join("sub")).set("n", 300).set("b_n", 0.3);
        assert!(matches!(run_experiment(&cfg), Err(Error::Internal(_))));
    }

    #[test]
    fn tiny_ot_tables_and_mean() {
        let cfg = ExperimentConfig::new(ExperimentKind::OtTables, 4, "/unused")
            .set("n", "60")
            .set("m", "1,2")
            .set("n_x", 2)
            .set("N_R", 4)
            .set("N_S", 8)
            .set("tau", "0.2,0.4")
            .set("k_nn", 10)
            .set("B", 5)
            .set("b_n", 0.5);
        let p = cfg.resolve().unwrap();
        let mut phases = Phases::default();
        let tables = compute_tables(cfg.experiment, cfg.seed, &p, &mut phases).unwrap();
        assert_eq!(tables[0].len(), 2 * 3 * 2);
        assert!(phases.get("forest_train").is_some());
        assert!(phases.get("query_forest").is_some());
        assert!(mean_metric(&tables[0], WeightMethod::Knn, 0.4, "msret").unwrap() >= 0.0);
    }
}
