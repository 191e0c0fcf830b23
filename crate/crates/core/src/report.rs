//! Tabular output: one row per evaluated parameter point, rendered as CSV
//! or JSON with a fixed column order and fixed number formatting.

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use crate::anneal::{self, AnnealParams};
use crate::error::{Error, Result};
use crate::qsl::{self, BoundReport};
use crate::stirap::{self, StirapParams};

/// Parameters of either worked model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "lowercase")]
pub enum ModelParams {
    Stirap(StirapParams),
    Anneal(AnnealParams),
}

impl ModelParams {
    pub fn name(&self) -> &'static str {
        match self {
            ModelParams::Stirap(_) => "stirap",
            ModelParams::Anneal(_) => "anneal",
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            ModelParams::Stirap(p) => p.validate(),
            ModelParams::Anneal(p) => p.validate(),
        }
    }

    pub fn fields(&self) -> &'static [&'static str] {
        match self {
            ModelParams::Stirap(_) => &StirapParams::FIELDS,
            ModelParams::Anneal(_) => &AnnealParams::FIELDS,
        }
    }

    pub fn set(&mut self, name: &str, value: f64) -> Result<()> {
        match self {
            ModelParams::Stirap(p) => p.set(name, value),
            ModelParams::Anneal(p) => p.set(name, value),
        }
    }

    /// Quadrature bound, plus the propagated overlap when `certify` is set.
    pub fn evaluate(&self, steps: usize, certify: bool) -> Result<BoundReport> {
        match self {
            ModelParams::Stirap(p) if certify => stirap::run(p, steps),
            ModelParams::Stirap(p) => stirap::bound(p, steps),
            ModelParams::Anneal(p) => anneal::bound(p, steps, certify),
        }
    }

    /// `(column, formatted value)` for every parameter, in a fixed order.
    fn columns(&self) -> Vec<(&'static str, String)> {
        match self {
            ModelParams::Stirap(p) => vec![
                ("delta", num(p.delta)),
                ("epsilon", num(p.epsilon)),
                ("t_final", num(p.t_final)),
                ("omega0", num(p.omega0)),
            ],
            ModelParams::Anneal(p) => vec![
                ("n_qubits", p.n_qubits.to_string()),
                ("coupling", num(p.coupling)),
                ("longitudinal", num(p.longitudinal)),
                ("transverse", num(p.transverse)),
                ("eps_gamma", num(p.eps_gamma)),
                ("eps_beta", num(p.eps_beta)),
                ("t_final", num(p.t_final)),
                ("protocol", p.protocol.to_string()),
                ("h0", num(p.h0)),
            ],
        }
    }
}

/// 12 significant digits in scientific notation.
pub fn num(x: f64) -> String {
    format!("{x:.11e}")
}

/// A parameter grid, `name:start:stop:count[:log]` on the command line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub param: String,
    pub start: f64,
    pub stop: f64,
    pub count: usize,
    #[serde(default)]
    pub log: bool,
}

impl SweepSpec {
    pub fn parse(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(':').collect();
        if !(4..=5).contains(&parts.len()) {
            return Err(Error::domain(format!("sweep `{s}` is not name:start:stop:count[:log]")));
        }
        let real = |x: &str| {
            x.trim()
                .parse::<f64>()
                .map_err(|_| Error::domain(format!("sweep bound `{x}` is not a number")))
        };
        let count = parts[3]
            .trim()
            .parse::<usize>()
            .map_err(|_| Error::domain(format!("sweep count `{}` is not an integer", parts[3])))?;
        let log = match parts.get(4).map(|x| x.trim()) {
            None => false,
            Some("log") => true,
            Some("lin") | Some("linear") => false,
            Some(other) => return Err(Error::domain(format!("sweep scale `{other}` is not `log`"))),
        };
        let spec = Self {
            param: parts[0].trim().to_string(),
            start: real(parts[1])?,
            stop: real(parts[2])?,
            count,
            log,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.count < 2 {
            return Err(Error::domain(format!("sweep count must be at least 2, got {}", self.count)));
        }
        if !(self.start.is_finite() && self.stop.is_finite()) {
            return Err(Error::domain("sweep bounds must be finite"));
        }
        if self.log && !(self.start > 0.0 && self.stop > 0.0) {
            return Err(Error::domain("log sweep needs positive bounds"));
        }
        Ok(())
    }

    /// Grid points; the endpoints are hit exactly.
    pub fn values(&self) -> Vec<f64> {
        let n = self.count - 1;
        (0..=n)
            .map(|k| {
                if k == 0 {
                    return self.start;
                }
                if k == n {
                    return self.stop;
                }
                let f = k as f64 / n as f64;
                if self.log {
                    (self.start.ln() + f * (self.stop.ln() - self.start.ln())).exp()
                } else {
                    self.start + f * (self.stop - self.start)
                }
            })
            .collect()
    }
}

/// One evaluated parameter point.
#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub params: ModelParams,
    pub swept_param: Option<String>,
    pub swept_value: Option<f64>,
    pub steps: usize,
    pub report: BoundReport,
    /// The schedule diverged inside the interval; the row carries the
    /// trivial bound.
    pub singular: bool,
}

impl Row {
    /// Evaluates a single point. In a sweep a schedule singularity becomes a
    /// flagged trivial row; any other error propagates.
    pub fn evaluate(
        params: ModelParams,
        swept: Option<(&str, f64)>,
        steps: usize,
        certify: bool,
    ) -> Result<Row> {
        let steps = steps + steps % 2;
        let (report, singular) = match params.evaluate(steps, certify) {
            Ok(r) => (r, false),
            Err(Error::ScheduleSingularity { time, .. }) if swept.is_some() => {
                let mut r = qsl::lower_bound_from_action(f64::INFINITY)?;
                r.set("singular_time", time);
                (r, true)
            }
            Err(e) => return Err(e),
        };
        Ok(Row {
            params,
            swept_param: swept.map(|(n, _)| n.to_string()),
            swept_value: swept.map(|(_, v)| v),
            steps,
            report,
            singular,
        })
    }
}

/// Evaluates every sweep point on the rayon pool. Rows come back in grid
/// order; the first hard error (in grid order) wins.
pub fn run_sweep(base: ModelParams, sweep: &SweepSpec, steps: usize, certify: bool) -> Result<Vec<Row>> {
    sweep.validate()?;
    let points: Vec<Result<ModelParams>> = sweep
        .values()
        .into_iter()
        .map(|v| {
            let mut p = base;
            p.set(&sweep.param, v).map(|_| p)
        })
        .collect();
    let values = sweep.values();
    points
        .into_par_iter()
        .zip(values.into_par_iter())
        .map(|(p, v)| Row::evaluate(p?, Some((sweep.param.as_str(), v)), steps, certify))
        .collect::<Vec<_>>()
        .into_iter()
        .collect()
}

const LEADING: [&str; 10] = [
    "model",
    "swept_param",
    "swept_value",
    "action",
    "lower_bound",
    "trivial",
    "true_overlap",
    "margin",
    "steps",
    "singular",
];

fn opt_num(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

/// CSV with a header line. All rows must share one model.
pub fn to_csv(rows: &[Row]) -> Result<String> {
    let mut out = String::new();
    let Some(first) = rows.first() else {
        return Ok(out);
    };
    let params_header: Vec<&str> = first.params.columns().iter().map(|(k, _)| *k).collect();
    out.push_str(&LEADING.join(","));
    for k in &params_header {
        out.push(',');
        out.push_str(k);
    }
    out.push('\n');
    for row in rows {
        if row.params.name() != first.params.name() {
            return Err(Error::domain("cannot mix models in one CSV table"));
        }
        let r = &row.report;
        let mut fields = vec![
            row.params.name().to_string(),
            row.swept_param.clone().unwrap_or_default(),
            opt_num(row.swept_value),
            num(r.action),
            num(r.lower_bound),
            r.trivial.to_string(),
            opt_num(r.true_overlap),
            opt_num(r.margin),
            row.steps.to_string(),
            row.singular.to_string(),
        ];
        fields.extend(row.params.columns().into_iter().map(|(_, v)| v));
        let _ = writeln!(out, "{}", fields.join(","));
    }
    Ok(out)
}

fn finite_or_null(x: f64) -> Value {
    if x.is_finite() {
        json!(x)
    } else {
        Value::String(x.to_string())
    }
}

/// JSON object mirroring the CSV columns, with the resolved parameters and
/// the diagnostics nested.
pub fn row_json(row: &Row) -> Value {
    let r = &row.report;
    let mut params = Map::new();
    for (k, v) in row.params.columns() {
        let value = v.parse::<f64>().map(finite_or_null).unwrap_or(Value::String(v));
        params.insert(k.to_string(), value);
    }
    if let ModelParams::Anneal(p) = row.params {
        params.insert("n_qubits".into(), json!(p.n_qubits));
    }
    let diagnostics: Map<String, Value> = r
        .diagnostics
        .iter()
        .map(|(k, v)| (k.clone(), finite_or_null(*v)))
        .collect();
    json!({
        "model": row.params.name(),
        "swept_param": row.swept_param,
        "swept_value": row.swept_value,
        "action": finite_or_null(r.action),
        "lower_bound": r.lower_bound,
        "trivial": r.trivial,
        "true_overlap": r.true_overlap,
        "margin": r.margin,
        "steps": row.steps,
        "singular": row.singular,
        "params": Value::Object(params),
        "diagnostics": Value::Object(diagnostics),
    })
}

/// A single row renders as an object, a sweep as an array.
pub fn to_json(rows: &[Row]) -> String {
    let value = match rows {
        [one] if one.swept_param.is_none() => row_json(one),
        _ => Value::Array(rows.iter().map(row_json).collect()),
    };
    let mut s = serde_json::to_string_pretty(&value).expect("json values always serialize");
    s.push('\n');
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn number_format() {
        assert_eq!(num(0.5), "5.00000000000e-1");
        assert_eq!(num(1.0), "1.00000000000e0");
        assert_eq!(num(-1234.5), "-1.23450000000e3");
    }

    #[test]
    #[allow(clippy::approx_constant)]
    fn sweep_parse_and_grid() {
        let s = SweepSpec::parse("eps_gamma:0.02:1.5707:64").unwrap();
        let v = s.values();
        assert_eq!(v.len(), 64);
        assert_eq!((v[0], v[63]), (0.02, 1.5707));
        let s = SweepSpec::parse("delta:0.1:10:3:log").unwrap();
        let v = s.values();
        assert!((v[1] - 1.0).abs() < 1e-12);
        assert!(SweepSpec::parse("delta:0:1:1").is_err());
        assert!(SweepSpec::parse("delta:0:1:5:log").is_err());
        assert!(SweepSpec::parse("delta:0:1").is_err());
    }

    #[test]
    fn csv_shape() {
        let p = ModelParams::Stirap(StirapParams::new(0.0, 0.1, 10.0).unwrap());
        let row = Row::evaluate(p, None, 200, false).unwrap();
        let csv = to_csv(&[row]).unwrap();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines.len(), 2);
        assert!(lines[0].starts_with("model,swept_param,swept_value,action,lower_bound,trivial,true_overlap,margin,steps"));
        assert_eq!(lines[0].split(',').count(), lines[1].split(',').count());
        assert!(lines[1].starts_with("stirap,,,0.00000000000e0,1.00000000000e0,false,,,200,false"));
    }

    #[test]
    fn unknown_sweep_param() {
        let p = ModelParams::Stirap(StirapParams::new(0.0, 0.1, 10.0).unwrap());
        let s = SweepSpec::parse("n_qubits:1:5:3").unwrap();
        assert!(run_sweep(p, &s, 100, false).is_err());
    }
}
