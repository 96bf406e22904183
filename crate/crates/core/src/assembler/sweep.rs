//! Parameter sweeps producing one solved record per sample.
//!
//! Sample parameters depend only on the spec and the sample index: grid
//! sweeps enumerate the cartesian product (first parameter slowest), random
//! sweeps draw from a ChaCha stream selected by the index, so sample `k` is
//! reproducible on its own. Samples run in parallel; output order is the
//! sample order.

use std::fs;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde_json::{json, Map, Value};

use super::{solve_problem, SolveOptions};
use crate::error::{Error, Result};
use crate::examples::build_named;
use crate::export::coeffs_csv;
use crate::linsys::DEFAULT_TOL;
use crate::problem::{problem_from_json, KernelProblem, Orders};
use crate::triseries::TriSeries;

#[derive(Debug, Clone, PartialEq)]
pub enum BaseProblem {
    /// A named reference example; parameters are example parameters.
    Example { name: String, params: Map<String, Value> },
    /// A problem document; parameters address numbers by JSON pointer.
    Problem(Value),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParamSpec {
    pub name: String,
    /// JSON pointer into the problem document (problem bases only).
    pub target: Option<String>,
    pub range: (f64, f64),
    /// Grid points along this parameter (grid mode).
    pub count: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SweepMode {
    Grid,
    Random { samples: usize, seed: u64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub base: BaseProblem,
    pub params: Vec<ParamSpec>,
    pub mode: SweepMode,
    pub orders: Option<Orders>,
    pub tol: f64,
    /// Residual grid size per sample; 0 disables grid residuals.
    pub grid_n: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub enum SampleOutcome {
    Solved {
        kernels: Vec<(usize, &'static str, TriSeries)>,
        residual_linear: f64,
        max_full_residual: Option<f64>,
        sparsity: f64,
    },
    Failed {
        error: String,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SampleRecord {
    pub index: usize,
    pub params: Vec<(String, f64)>,
    pub outcome: SampleOutcome,
}

impl SampleRecord {
    pub fn is_ok(&self) -> bool {
        matches!(self.outcome, SampleOutcome::Solved { .. })
    }

    pub fn to_json(&self) -> Value {
        let params: Map<String, Value> = self
            .params
            .iter()
            .map(|(k, v)| (k.clone(), json!(v)))
            .collect();
        match &self.outcome {
            SampleOutcome::Solved {
                kernels,
                residual_linear,
                max_full_residual,
                sparsity,
            } => json!({
                "index": self.index,
                "params": params,
                "status": "ok",
                "residual_linear": residual_linear,
                "max_full_residual": max_full_residual,
                "sparsity": sparsity,
                "kernels": kernels.iter().map(|(k, r, s)| json!({
                    "kernel": k,
                    "region": r,
                    "order": s.order(),
                    "center": [s.center().0, s.center().1],
                    "coeffs": s.coeffs(),
                })).collect::<Vec<_>>(),
            }),
            SampleOutcome::Failed { error } => json!({
                "index": self.index,
                "params": params,
                "status": "error",
                "error": error,
            }),
        }
    }

    /// Coefficient CSV of a solved sample, identical in layout to the one
    /// written for a single solve.
    pub fn coeffs_csv(&self) -> Option<String> {
        match &self.outcome {
            SampleOutcome::Solved { kernels, .. } => {
                Some(coeffs_csv(kernels.iter().map(|(k, r, s)| (*k, *r, s))))
            }
            SampleOutcome::Failed { .. } => None,
        }
    }
}

impl SweepSpec {
    pub fn sample_count(&self) -> usize {
        match self.mode {
            SweepMode::Grid => self.params.iter().map(|p| p.count).product(),
            SweepMode::Random { samples, .. } => samples,
        }
    }

    /// Parameter values of sample `k`.
    pub fn sample(&self, k: usize) -> Vec<(String, f64)> {
        match self.mode {
            SweepMode::Grid => {
                let mut rest = k;
                let mut vals = vec![0.0; self.params.len()];
                for (d, p) in self.params.iter().enumerate().rev() {
                    let idx = rest % p.count;
                    rest /= p.count;
                    let (lo, hi) = p.range;
                    vals[d] = if p.count == 1 {
                        lo
                    } else {
                        lo + (hi - lo) * idx as f64 / (p.count - 1) as f64
                    };
                }
                self.params
                    .iter()
                    .zip(vals)
                    .map(|(p, v)| (p.name.clone(), v))
                    .collect()
            }
            SweepMode::Random { seed, .. } => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(k as u64);
                self.params
                    .iter()
                    .map(|p| {
                        let u: f64 = rng.random();
                        (p.name.clone(), p.range.0 + (p.range.1 - p.range.0) * u)
                    })
                    .collect()
            }
        }
    }

    /// The problem of sample `k`.
    pub fn problem_for(&self, values: &[(String, f64)]) -> Result<KernelProblem> {
        match &self.base {
            BaseProblem::Example { name, params } => {
                let mut params = params.clone();
                for (k, v) in values {
                    params.insert(k.clone(), json!(v));
                }
                build_named(name, &params)
            }
            BaseProblem::Problem(doc) => {
                let mut doc = doc.clone();
                for (p, (_, v)) in self.params.iter().zip(values) {
                    let ptr = p.target.as_deref().unwrap_or("");
                    let slot = doc.pointer_mut(ptr).ok_or_else(|| {
                        Error::schema(format!("$.parameters.{}", p.name), format!("target {ptr} not found"))
                    })?;
                    *slot = json!(v);
                }
                problem_from_json(&doc, "$.base.problem")
            }
        }
    }

    pub fn from_json(v: &Value) -> Result<SweepSpec> {
        let o = v
            .as_object()
            .ok_or_else(|| Error::schema("$", "expected an object"))?;
        let base_v = o
            .get("base")
            .and_then(Value::as_object)
            .ok_or_else(|| Error::schema("$.base", "missing base object"))?;
        let base = if let Some(name) = base_v.get("example") {
            let name = name
                .as_str()
                .ok_or_else(|| Error::schema("$.base.example", "expected a string"))?;
            let params = match base_v.get("params") {
                None => Map::new(),
                Some(p) => p
                    .as_object()
                    .cloned()
                    .ok_or_else(|| Error::schema("$.base.params", "expected an object"))?,
            };
            BaseProblem::Example {
                name: name.to_string(),
                params,
            }
        } else if let Some(doc) = base_v.get("problem") {
            BaseProblem::Problem(doc.clone())
        } else {
            return Err(Error::schema("$.base", "expected \"example\" or \"problem\""));
        };
        let params_v = o
            .get("parameters")
            .and_then(Value::as_array)
            .ok_or_else(|| Error::schema("$.parameters", "missing parameters array"))?;
        if params_v.is_empty() {
            return Err(Error::schema("$.parameters", "at least one parameter is required"));
        }
        let mut params = Vec::new();
        for (i, p) in params_v.iter().enumerate() {
            let path = format!("$.parameters[{i}]");
            let po = p
                .as_object()
                .ok_or_else(|| Error::schema(&path, "expected an object"))?;
            let name = po
                .get("name")
                .and_then(Value::as_str)
                .ok_or_else(|| Error::schema(format!("{path}.name"), "missing name"))?;
            let range = po
                .get("range")
                .and_then(Value::as_array)
                .filter(|r| r.len() == 2)
                .and_then(|r| Some((r[0].as_f64()?, r[1].as_f64()?)))
                .ok_or_else(|| Error::schema(format!("{path}.range"), "expected [lo, hi]"))?;
            let count = match po.get("count") {
                None => 1,
                Some(c) => c
                    .as_u64()
                    .filter(|&c| c >= 1)
                    .ok_or_else(|| Error::schema(format!("{path}.count"), "expected an integer >= 1"))?
                    as usize,
            };
            let target = po.get("target").and_then(Value::as_str).map(str::to_string);
            if matches!(base, BaseProblem::Problem(_)) && target.is_none() {
                return Err(Error::schema(
                    format!("{path}.target"),
                    "problem bases need a JSON pointer target",
                ));
            }
            params.push(ParamSpec {
                name: name.to_string(),
                target,
                range,
                count,
            });
        }
        let mode = match o.get("mode").and_then(Value::as_str).unwrap_or("grid") {
            "grid" => SweepMode::Grid,
            "random" => SweepMode::Random {
                samples: o
                    .get("samples")
                    .and_then(Value::as_u64)
                    .filter(|&s| s >= 1)
                    .ok_or_else(|| Error::schema("$.samples", "random mode needs samples >= 1"))?
                    as usize,
                seed: o.get("seed").and_then(Value::as_u64).unwrap_or(0),
            },
            other => {
                return Err(Error::schema("$.mode", format!("unknown mode \"{other}\"")));
            }
        };
        let orders = match o.get("order") {
            None | Some(Value::Null) => None,
            Some(Value::Array(list)) => Some(Orders::PerGroup(
                list.iter()
                    .map(|n| n.as_u64().map(|n| n as usize))
                    .collect::<Option<_>>()
                    .ok_or_else(|| Error::schema("$.order", "expected integers"))?,
            )),
            Some(n) => Some(Orders::Uniform(
                n.as_u64()
                    .ok_or_else(|| Error::schema("$.order", "expected an integer"))?
                    as usize,
            )),
        };
        Ok(SweepSpec {
            base,
            params,
            mode,
            orders,
            tol: o.get("tol").and_then(Value::as_f64).unwrap_or(DEFAULT_TOL),
            grid_n: o.get("grid").and_then(Value::as_u64).unwrap_or(0) as usize,
        })
    }

    /// Overrides the seed of a random sweep.
    pub fn with_seed(mut self, seed: u64) -> Self {
        if let SweepMode::Random { samples, .. } = self.mode {
            self.mode = SweepMode::Random { samples, seed };
        }
        self
    }
}

fn run_sample(spec: &SweepSpec, k: usize) -> SampleRecord {
    let params = spec.sample(k);
    let outcome = spec
        .problem_for(&params)
        .and_then(|p| {
            let opts = SolveOptions {
                orders: spec.orders.clone(),
                tol: spec.tol,
                grid_n: spec.grid_n,
            };
            solve_problem(&p, &opts)
        })
        .map_or_else(
            |e| SampleOutcome::Failed {
                error: e.to_string(),
            },
            |r| SampleOutcome::Solved {
                max_full_residual: (spec.grid_n > 0).then(|| r.max_full_residual_ratio()),
                residual_linear: r.residual_linear,
                sparsity: r.sparsity,
                kernels: r
                    .kernels
                    .into_iter()
                    .map(|k| (k.kernel, k.region, k.series))
                    .collect(),
            },
        );
    SampleRecord {
        index: k,
        params,
        outcome,
    }
}

/// Solves every sample. Per-sample failures are recorded, not returned.
pub fn run_sweep(spec: &SweepSpec) -> Result<Vec<SampleRecord>> {
    if spec.params.is_empty() {
        return Err(Error::Param("a sweep needs at least one parameter".into()));
    }
    let n = spec.sample_count();
    if n == 0 {
        return Err(Error::Param("a sweep needs at least one sample".into()));
    }
    Ok((0..n).into_par_iter().map(|k| run_sample(spec, k)).collect())
}

/// Writes `dataset.jsonl` plus `sample_NNNNN.csv` per solved sample.
pub fn write_sweep(records: &[SampleRecord], dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    let mut lines = String::new();
    for r in records {
        lines.push_str(&serde_json::to_string(&r.to_json()).expect("record is serializable"));
        lines.push('\n');
        if let Some(csv) = r.coeffs_csv() {
            fs::write(dir.join(format!("sample_{:05}.csv", r.index)), csv)?;
        }
    }
    fs::write(dir.join("dataset.jsonl"), lines)?;
    Ok(())
}
