//! Experiment names, tunable keys with their defaults, and validation of
//! every override before any computation starts.

use std::collections::BTreeMap;
use std::path::PathBuf;

use serde::Serialize;

use super::table::Format;
use crate::error::{Error, Result};
use crate::locstat::{dgp, u_grid, Kernel};
use crate::transport::GridSpec;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    Motivating,
    LocstatMc,
    OtContour,
    OtTube,
    OtTables,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 5] = [
        ExperimentKind::Motivating,
        ExperimentKind::LocstatMc,
        ExperimentKind::OtContour,
        ExperimentKind::OtTube,
        ExperimentKind::OtTables,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::Motivating => "motivating",
            ExperimentKind::LocstatMc => "locstat-mc",
            ExperimentKind::OtContour => "ot-contour",
            ExperimentKind::OtTube => "ot-tube",
            ExperimentKind::OtTables => "ot-tables",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Self::ALL.into_iter().find(|k| k.name() == s).ok_or_else(|| {
            let names: Vec<_> = Self::ALL.iter().map(|k| k.name()).collect();
            Error::Validation(format!("unknown experiment '{s}' (expected one of {})", names.join(", ")))
        })
    }

    fn schema(self) -> &'static [(&'static str, Kind, &'static str)] {
        use Kind::*;
        const OT: [(&str, Kind, &str); 9] = [
            ("tau", FloatList, "0.2,0.4,0.6"),
            ("N_R", Int, "9"),
            ("N_S", Int, "100"),
            ("N_0", Int, "0"),
            ("b_n", Float, "0.1"),
            ("k_nn", Int, "50"),
            ("B", Int, "200"),
            ("min_leaf", Int, "5"),
            ("runs", Int, "1"),
        ];
        match self {
            ExperimentKind::Motivating => {
                &[("n", Int, "4000"), ("tau", FloatList, "0.15,0.5"), ("b_n", Float, "0.1"), ("k", Int, "0"), ("runs", Int, "1")]
            }
            ExperimentKind::LocstatMc => &[
                ("n", Int, "3000"),
                ("tau", FloatList, "0.5"),
                ("b_n", Float, "0.05"),
                ("k", IntList, "0,1,2"),
                ("runs", Int, "50"),
                ("grid_points", Int, "100"),
            ],
            ExperimentKind::OtContour => {
                const S: [(&str, Kind, &str); 12] = [
                    ("n", Int, "1000"),
                    ("m", Int, "2"),
                    ("x", FloatList, ""),
                    OT[0], OT[1], OT[2], OT[3], OT[4], OT[5], OT[6], OT[7], OT[8],
                ];
                &S
            }
            ExperimentKind::OtTube => {
                const S: [(&str, Kind, &str); 12] = [
                    ("n", Int, "1000"),
                    ("m", Int, "2"),
                    ("n_x", Int, "20"),
                    OT[0], OT[1], OT[2], OT[3], OT[4], OT[5], OT[6], OT[7], OT[8],
                ];
                &S
            }
            ExperimentKind::OtTables => {
                const S: [(&str, Kind, &str); 12] = [
                    ("n", IntList, "500,1000"),
                    ("m", IntList, "1,2,5"),
                    ("n_x", Int, "20"),
                    OT[0], OT[1], OT[2], OT[3], OT[4], OT[5], OT[6], OT[7], OT[8],
                ];
                &S
            }
        }
    }

    pub fn keys(self) -> Vec<&'static str> {
        self.schema().iter().map(|s| s.0).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Kind {
    Int,
    Float,
    IntList,
    FloatList,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum Value {
    Int(usize),
    Float(f64),
    Ints(Vec<usize>),
    Floats(Vec<f64>),
}

fn parse_value(key: &str, kind: Kind, raw: &str) -> Result<Value> {
    let bad = |what: &str| Error::Validation(format!("{key} = '{raw}' is not {what}"));
    let int = |s: &str| s.trim().parse::<usize>().map_err(|_| bad("a nonnegative integer (list)"));
    let float = |s: &str| {
        s.trim().parse::<f64>().ok().filter(|v| v.is_finite()).ok_or_else(|| bad("a finite number (list)"))
    };
    let list = |s: &str| -> Vec<String> {
        if s.trim().is_empty() {
            Vec::new()
        } else {
            s.split(',').map(|p| p.to_string()).collect()
        }
    };
    Ok(match kind {
        Kind::Int => Value::Int(int(raw)?),
        Kind::Float => Value::Float(float(raw)?),
        Kind::IntList => Value::Ints(list(raw).iter().map(|s| int(s)).collect::<Result<_>>()?),
        Kind::FloatList => Value::Floats(list(raw).iter().map(|s| float(s)).collect::<Result<_>>()?),
    })
}

/// Resolved parameters of one experiment.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct Params {
    values: BTreeMap<String, Value>,
}

impl Params {
    pub fn int(&self, key: &str) -> usize {
        match self.values.get(key) {
            Some(Value::Int(v)) => *v,
            other => panic!("parameter {key} is {other:?}"),
        }
    }

    pub fn float(&self, key: &str) -> f64 {
        match self.values.get(key) {
            Some(Value::Float(v)) => *v,
            other => panic!("parameter {key} is {other:?}"),
        }
    }

    pub fn ints(&self, key: &str) -> &[usize] {
        match self.values.get(key) {
            Some(Value::Ints(v)) => v,
            other => panic!("parameter {key} is {other:?}"),
        }
    }

    pub fn floats(&self, key: &str) -> &[f64] {
        match self.values.get(key) {
            Some(Value::Floats(v)) => v,
            other => panic!("parameter {key} is {other:?}"),
        }
    }

    /// Single value or list, as a list.
    pub fn int_list(&self, key: &str) -> Vec<usize> {
        match self.values.get(key) {
            Some(Value::Int(v)) => vec![*v],
            Some(Value::Ints(v)) => v.clone(),
            other => panic!("parameter {key} is {other:?}"),
        }
    }

    /// `key=value` strings, lists comma separated.
    pub fn pairs(&self) -> Vec<String> {
        let join = |v: Vec<String>| v.join(",");
        self.values
            .iter()
            .map(|(k, v)| {
                let text = match v {
                    Value::Int(i) => i.to_string(),
                    Value::Float(f) => f.to_string(),
                    Value::Ints(l) => join(l.iter().map(|x| x.to_string()).collect()),
                    Value::Floats(l) => join(l.iter().map(|x| x.to_string()).collect()),
                };
                format!("{k}={text}")
            })
            .collect()
    }

    pub fn grid_spec(&self) -> Result<GridSpec> {
        GridSpec::new(2, self.int("N_R"), self.int("N_S"), self.int("N_0"))
    }
}

/// One experiment invocation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    pub seed: u64,
    pub overrides: BTreeMap<String, String>,
    pub output_dir: PathBuf,
    pub format: Format,
}

impl ExperimentConfig {
    pub fn new(experiment: ExperimentKind, seed: u64, output_dir: impl Into<PathBuf>) -> Self {
        Self { experiment, seed, overrides: BTreeMap::new(), output_dir: output_dir.into(), format: Format::Csv }
    }

    pub fn set(mut self, key: &str, value: impl ToString) -> Self {
        self.overrides.insert(key.to_string(), value.to_string());
        self
    }

    /// Adds `key=value` pairs.
    pub fn with_overrides<'a>(mut self, pairs: impl IntoIterator<Item = &'a str>) -> Result<Self> {
        for pair in pairs {
            let (k, v) = pair
                .split_once('=')
                .ok_or_else(|| Error::Validation(format!("override '{pair}' is not key=value")))?;
            self.overrides.insert(k.trim().to_string(), v.trim().to_string());
        }
        Ok(self)
    }

    /// Flat `key = value` text; `#` starts a comment. The keys
    /// `experiment`, `seed`, `format` and `out` configure the run, all
    /// others are overrides.
    pub fn from_kv_text(text: &str) -> Result<Self> {
        let mut experiment = None;
        let mut seed = 0u64;
        let mut format = Format::Csv;
        let mut out = PathBuf::from("out");
        let mut overrides = BTreeMap::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Validation(format!("line {}: expected key = value", lineno + 1)))?;
            let (k, v) = (k.trim(), v.trim());
            match k {
                "experiment" => experiment = Some(ExperimentKind::parse(v)?),
                "seed" => seed = v.parse().map_err(|_| Error::Validation(format!("seed '{v}' is not a 64-bit integer")))?,
                "format" => format = Format::parse(v)?,
                "out" => out = PathBuf::from(v),
                _ => {
                    if overrides.insert(k.to_string(), v.to_string()).is_some() {
                        return Err(Error::Validation(format!("key {k} given twice")));
                    }
                }
            }
        }
        let experiment = experiment.ok_or_else(|| Error::Validation("config has no 'experiment' key".into()))?;
        Ok(Self { experiment, seed, overrides, output_dir: out, format })
    }

    /// Defaults merged with overrides, checked against the preconditions
    /// of every component the experiment calls.
    pub fn resolve(&self) -> Result<Params> {
        let schema = self.experiment.schema();
        let mut values = BTreeMap::new();
        for &(key, kind, default) in schema {
            let raw = self.overrides.get(key).map(String::as_str).unwrap_or(default);
            values.insert(key.to_string(), parse_value(key, kind, raw)?);
        }
        if let Some(unknown) = self.overrides.keys().find(|k| !schema.iter().any(|s| s.0 == k.as_str())) {
            return Err(Error::Validation(format!(
                "unknown key '{unknown}' for {} (known: {})",
                self.experiment.name(),
                self.experiment.keys().join(", ")
            )));
        }
        if self.experiment == ExperimentKind::OtContour {
            let m = match values["m"] {
                Value::Int(m) => m,
                _ => unreachable!(),
            };
            if matches!(&values["x"], Value::Floats(v) if v.is_empty()) {
                values.insert("x".into(), Value::Floats(vec![0.7; m]));
            }
        }
        let params = Params { values };
        validate(self.experiment, &params)?;
        Ok(params)
    }
}

fn fail(msg: String) -> Result<()> {
    Err(Error::Validation(msg))
}

fn validate(kind: ExperimentKind, p: &Params) -> Result<()> {
    if p.int("runs") == 0 {
        return fail("runs must be >= 1".into());
    }
    let taus = p.floats("tau");
    if taus.is_empty() {
        return fail("tau list is empty".into());
    }
    if let Some(t) = taus.iter().find(|t| !(**t > 0.0 && **t < 1.0)) {
        return fail(format!("tau = {t} outside (0, 1)"));
    }
    let b = p.float("b_n");
    if !(b > 0.0) {
        return fail(format!("b_n = {b} must be positive"));
    }
    match kind {
        ExperimentKind::Motivating | ExperimentKind::LocstatMc => {
            let n = p.int("n");
            let ks = p.int_list("k");
            if ks.is_empty() {
                return fail("k list is empty".into());
            }
            if let Some(k) = ks.iter().find(|&&k| k > 4) {
                return fail(format!("polynomial order k = {k} above 4"));
            }
            let (ar_p, grid) = if kind == ExperimentKind::Motivating {
                (1, Vec::new())
            } else {
                let g = p.int("grid_points");
                if g == 0 {
                    return fail("grid_points must be >= 1".into());
                }
                (dgp::ar3_sine(n).p(), u_grid(g))
            };
            if n < 2 * (ar_p + 1) {
                return fail(format!("n = {n} too small for an AR({ar_p}) fit"));
            }
            if kind == ExperimentKind::Motivating && b >= 0.5 {
                return fail(format!("b_n = {b} leaves no interior time points"));
            }
            // smallest window on the grid (or at u = b for the scatter)
            let probe: Vec<f64> = if grid.is_empty() { vec![b.min(0.5)] } else { grid.clone() };
            for &k in &ks {
                let need = (k + 1) * (ar_p + 1);
                for &u in &probe {
                    let eff = (1..=n).filter(|&i| Kernel::Epanechnikov.eval((i as f64 / n as f64 - u) / b) > 0.0).count();
                    if eff < need {
                        return fail(format!(
                            "window at u = {u:.4} holds {eff} observations, order k = {k} needs {need} (raise n or b_n)"
                        ));
                    }
                }
            }
        }
        ExperimentKind::OtContour | ExperimentKind::OtTube | ExperimentKind::OtTables => {
            let spec = p.grid_spec()?;
            if let Some(t) = taus.iter().find(|&&t| spec.level_for(t).is_none()) {
                return fail(format!("tau = {t} is not a grid level j/(N_R+1) with N_R = {}", spec.n_r));
            }
            let ns = p.int_list("n");
            let ms = p.int_list("m");
            if ns.is_empty() || ms.is_empty() {
                return fail("n and m lists must be nonempty".into());
            }
            if let Some(m) = ms.iter().find(|&&m| m == 0) {
                return fail(format!("m = {m} must be >= 1"));
            }
            let k_nn = p.int("k_nn");
            let min_leaf = p.int("min_leaf");
            if p.int("B") == 0 || min_leaf == 0 {
                return fail("B and min_leaf must be >= 1".into());
            }
            for &n in &ns {
                if k_nn == 0 || k_nn > n {
                    return fail(format!("k_nn = {k_nn} outside 1..={n}"));
                }
                if n < min_leaf {
                    return fail(format!("n = {n} below min_leaf = {min_leaf}"));
                }
            }
            if kind == ExperimentKind::OtContour {
                let x = p.floats("x");
                if x.len() != ms[0] {
                    return fail(format!("x has {} coordinates, m = {}", x.len(), ms[0]));
                }
                if x.iter().all(|v| *v == 0.0) {
                    return fail("x = 0 has a zero population radius".into());
                }
            } else if p.int("n_x") == 0 {
                return fail("n_x must be >= 1".into());
            }
        }
    }
    Ok(())
}
