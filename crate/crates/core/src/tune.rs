//! Hyperparameter grid search over LFID, and a bridge that scores external
//! generator commands.
//!
//! Grid files list one parameter per line as `name = v1, v2, v3`; blank
//! lines and `#` comments are ignored. Points are visited in lexicographic
//! order of the declared parameter and value order, last parameter fastest.
//! A point is kept only if it strictly lowers the running minimum.

use std::path::Path;
use std::process::Command;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lfid::{lfid_score, SelectionSpec};
use crate::stats::{load_activations, ActivationSet};

pub type ParamSet = Vec<(String, String)>;

#[derive(Debug, Clone, PartialEq)]
pub struct TuningGrid {
    parameters: Vec<(String, Vec<String>)>,
}

impl TuningGrid {
    pub fn new(parameters: Vec<(String, Vec<String>)>) -> Result<Self> {
        if parameters.is_empty() {
            return Err(Error::Validation("grid declares no parameters".into()));
        }
        for (i, (name, values)) in parameters.iter().enumerate() {
            if name.is_empty() {
                return Err(Error::Validation(format!("parameter {i} has an empty name")));
            }
            if values.is_empty() {
                return Err(Error::Validation(format!("parameter {name:?} has no candidates")));
            }
            if parameters[..i].iter().any(|(n, _)| n == name) {
                return Err(Error::Validation(format!("parameter {name:?} declared twice")));
            }
        }
        Ok(Self { parameters })
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut parameters = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (name, values) = line.split_once('=').ok_or_else(|| {
                Error::Format(format!("grid line {}: expected `name = v1, v2`", lineno + 1))
            })?;
            let values: Vec<String> = values
                .split(',')
                .map(|v| v.trim().to_string())
                .filter(|v| !v.is_empty())
                .collect();
            parameters.push((name.trim().to_string(), values));
        }
        Self::new(parameters)
    }

    pub fn parameters(&self) -> &[(String, Vec<String>)] {
        &self.parameters
    }

    pub fn size(&self) -> usize {
        self.parameters.iter().map(|(_, v)| v.len()).product()
    }

    /// The `index`-th point in lexicographic order.
    pub fn point(&self, mut index: usize) -> ParamSet {
        let mut out = vec![(String::new(), String::new()); self.parameters.len()];
        for (slot, (name, values)) in out.iter_mut().zip(&self.parameters).rev() {
            *slot = (name.clone(), values[index % values.len()].clone());
            index /= values.len();
        }
        out
    }

    pub fn points(&self) -> impl Iterator<Item = ParamSet> + '_ {
        (0..self.size()).map(|i| self.point(i))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub params: ParamSet,
    pub lfid: f64,
    pub kept: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TuningResult {
    pub best_params: ParamSet,
    pub best_lfid: f64,
    pub trace: Vec<TrialRecord>,
    pub warnings: Vec<String>,
}

fn describe(params: &ParamSet) -> String {
    params
        .iter()
        .map(|(k, v)| format!("{k}={v}"))
        .collect::<Vec<_>>()
        .join(",")
}

fn fold(outcomes: impl IntoIterator<Item = (ParamSet, Result<f64>)>) -> Result<TuningResult> {
    let mut trace = Vec::new();
    let mut warnings = Vec::new();
    let mut best: Option<(ParamSet, f64)> = None;
    for (params, outcome) in outcomes {
        let lfid = match outcome {
            Ok(v) if v.is_finite() => v,
            Ok(v) => {
                warnings.push(format!("skipped {}: non-finite LFID {v}", describe(&params)));
                continue;
            }
            Err(e) => {
                warnings.push(format!("skipped {}: {e}", describe(&params)));
                continue;
            }
        };
        let kept = best.as_ref().is_none_or(|(_, b)| lfid < *b);
        if kept {
            best = Some((params.clone(), lfid));
        }
        trace.push(TrialRecord { params, lfid, kept });
    }
    let (best_params, best_lfid) = best.ok_or_else(|| {
        Error::Tuning(format!(
            "all grid evaluations failed{}",
            warnings.first().map(|w| format!(" (first: {w})")).unwrap_or_default()
        ))
    })?;
    Ok(TuningResult {
        best_params,
        best_lfid,
        trace,
        warnings,
    })
}

/// Evaluates every grid point in order, keeping a point only when its LFID
/// is strictly below the best so far. Failed points are skipped with a
/// warning; the search fails only if every point fails.
pub fn grid_search<F>(grid: &TuningGrid, mut evaluator: F) -> Result<TuningResult>
where
    F: FnMut(&ParamSet) -> Result<f64>,
{
    fold(grid.points().map(|p| {
        let outcome = evaluator(&p);
        (p, outcome)
    }))
}

/// As [`grid_search`], evaluating up to `jobs` points at once. Results are
/// buffered and folded in grid order, so the outcome matches the serial
/// search for a deterministic evaluator.
pub fn grid_search_parallel<F>(grid: &TuningGrid, jobs: usize, evaluator: F) -> Result<TuningResult>
where
    F: Fn(&ParamSet) -> Result<f64> + Sync,
{
    let jobs = jobs.max(1).min(grid.size());
    if jobs == 1 {
        return grid_search(grid, evaluator);
    }
    let next = AtomicUsize::new(0);
    let slots: Mutex<Vec<Option<Result<f64>>>> = Mutex::new((0..grid.size()).map(|_| None).collect());
    std::thread::scope(|scope| {
        for _ in 0..jobs {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= grid.size() {
                    break;
                }
                let outcome = evaluator(&grid.point(i));
                slots.lock().unwrap()[i] = Some(outcome);
            });
        }
    });
    let slots = slots.into_inner().unwrap();
    fold(grid.points().zip(slots).map(|(p, r)| (p, r.expect("every slot is filled"))))
}

/// Scores external generator commands against a fixed real activation set.
///
/// The template may reference `{param:NAME}` for any grid parameter and must
/// contain `{out}`, which is replaced by a single-quoted path the command is
/// expected to write an ACTB file to. Commands run under `sh -c`.
#[derive(Debug, Clone)]
pub struct ExternalEvaluator {
    template: String,
    real: ActivationSet,
    spec: SelectionSpec,
}

const MAX_CAPTURED_OUTPUT: usize = 4096;

impl ExternalEvaluator {
    pub fn new(template: impl Into<String>, real: ActivationSet, spec: SelectionSpec) -> Result<Self> {
        let template = template.into();
        if !template.contains("{out}") {
            return Err(Error::Validation("command template has no {out} placeholder".into()));
        }
        Ok(Self { template, real, spec })
    }

    pub fn render(&self, params: &ParamSet, out: &Path) -> Result<String> {
        let mut cmd = String::with_capacity(self.template.len());
        let mut rest = self.template.as_str();
        while let Some(start) = rest.find('{') {
            cmd.push_str(&rest[..start]);
            let tail = &rest[start..];
            if let Some(after) = tail.strip_prefix("{out}") {
                cmd.push_str(&shell_quote(&out.to_string_lossy()));
                rest = after;
            } else if let Some(after) = tail.strip_prefix("{param:") {
                let end = after
                    .find('}')
                    .ok_or_else(|| Error::Validation("unterminated {param:...} placeholder".into()))?;
                let name = &after[..end];
                let value = params
                    .iter()
                    .find(|(k, _)| k == name)
                    .map(|(_, v)| v)
                    .ok_or_else(|| Error::Validation(format!("template references unknown parameter {name:?}")))?;
                cmd.push_str(value);
                rest = &after[end + 1..];
            } else {
                cmd.push('{');
                rest = &tail[1..];
            }
        }
        cmd.push_str(rest);
        Ok(cmd)
    }

    pub fn evaluate(&self, params: &ParamSet) -> Result<f64> {
        let dir = tempfile::tempdir().map_err(|e| Error::io(std::env::temp_dir(), e))?;
        let out = dir.path().join("gen.actb");
        let cmd = self.render(params, &out)?;
        let output = Command::new("sh")
            .arg("-c")
            .arg(&cmd)
            .output()
            .map_err(|e| Error::External {
                status: "spawn failed".into(),
                output: e.to_string(),
            })?;
        if !output.status.success() {
            let mut captured = String::from_utf8_lossy(&output.stdout).into_owned();
            captured.push_str(&String::from_utf8_lossy(&output.stderr));
            if captured.len() > MAX_CAPTURED_OUTPUT {
                let mut cut = MAX_CAPTURED_OUTPUT;
                while !captured.is_char_boundary(cut) {
                    cut -= 1;
                }
                captured.truncate(cut);
            }
            return Err(Error::External {
                status: output.status.to_string(),
                output: captured,
            });
        }
        let gen = match load_activations(&out) {
            Err(Error::Io { source, .. }) => {
                return Err(Error::Format(format!("command did not produce {}: {source}", out.display())))
            }
            other => other?,
        };
        Ok(lfid_score(&self.real, &gen, self.spec)?.value)
    }
}

/// One-shot form of [`ExternalEvaluator::evaluate`].
pub fn run_external_evaluation(
    command_template: &str,
    params: &ParamSet,
    real_acts: impl AsRef<Path>,
    spec: SelectionSpec,
) -> Result<f64> {
    let real = load_activations(real_acts)?;
    ExternalEvaluator::new(command_template, real, spec)?.evaluate(params)
}

fn shell_quote(s: &str) -> String {
    format!("'{}'", s.replace('\'', r"'\''"))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ps(pairs: &[(&str, &str)]) -> ParamSet {
        pairs.iter().map(|(a, b)| (a.to_string(), b.to_string())).collect()
    }

    #[test]
    fn parses_grid_file() {
        let g = TuningGrid::parse("# sweep\nlatent_dim = 2, 8\n\noptimizer_type = adam , sgd # two\n").unwrap();
        assert_eq!(g.size(), 4);
        assert_eq!(
            g.points().collect::<Vec<_>>(),
            vec![
                ps(&[("latent_dim", "2"), ("optimizer_type", "adam")]),
                ps(&[("latent_dim", "2"), ("optimizer_type", "sgd")]),
                ps(&[("latent_dim", "8"), ("optimizer_type", "adam")]),
                ps(&[("latent_dim", "8"), ("optimizer_type", "sgd")]),
            ]
        );
    }

    #[test]
    fn grid_validation() {
        assert!(TuningGrid::parse("a = 1\na = 2").is_err());
        assert!(TuningGrid::parse("a =").is_err());
        assert!(matches!(TuningGrid::parse("a 1 2"), Err(Error::Format(_))));
        assert!(TuningGrid::parse("").is_err());
    }

    #[test]
    fn singleton_grid() {
        let g = TuningGrid::parse("n_layers = 3").unwrap();
        let r = grid_search(&g, |_| Ok(7.5)).unwrap();
        assert_eq!(r.best_lfid, 7.5);
        assert_eq!(r.trace.len(), 1);
        assert!(r.trace[0].kept);
    }

    #[test]
    fn ties_keep_first() {
        let g = TuningGrid::parse("batch_size = 32, 64").unwrap();
        let r = grid_search(&g, |_| Ok(5.0)).unwrap();
        assert_eq!(r.best_params, ps(&[("batch_size", "32")]));
        assert_eq!(r.trace.iter().map(|t| t.kept).collect::<Vec<_>>(), vec![true, false]);
    }

    #[test]
    fn matches_exhaustive_scan() {
        let g = TuningGrid::parse("a = 0, 1\nb = 0, 1, 2").unwrap();
        let f = |p: &ParamSet| {
            let a: f64 = p[0].1.parse().unwrap();
            let b: f64 = p[1].1.parse().unwrap();
            (a - 1.0).powi(2) + (b - 1.2).powi(2)
        };
        let r = grid_search(&g, |p| Ok(f(p))).unwrap();
        let best = g
            .points()
            .min_by(|x, y| f(x).total_cmp(&f(y)))
            .unwrap();
        assert_eq!(r.best_params, best);
        assert_eq!(r.best_params, ps(&[("a", "1"), ("b", "1")]));
    }

    #[test]
    fn failures_are_skipped() {
        let g = TuningGrid::parse("a = 1, 2, 3").unwrap();
        let r = grid_search(&g, |p| {
            if p[0].1 == "2" {
                Err(Error::External { status: "exit status: 1".into(), output: String::new() })
            } else {
                Ok(p[0].1.parse::<f64>().unwrap())
            }
        })
        .unwrap();
        assert_eq!(r.trace.len(), 2);
        assert_eq!(r.warnings.len(), 1);
        assert!(matches!(grid_search(&g, |_| Err(Error::Validation("x".into()))), Err(Error::Tuning(_))));
    }

    #[test]
    fn parallel_matches_serial() {
        let g = TuningGrid::parse("a = 1, 2, 3, 4\nb = 5, 6, 7").unwrap();
        let f = |p: &ParamSet| -> Result<f64> {
            let a: f64 = p[0].1.parse().unwrap();
            let b: f64 = p[1].1.parse().unwrap();
            Ok((a * 7.0 + b * 3.0) % 5.0)
        };
        assert_eq!(grid_search(&g, f).unwrap(), grid_search_parallel(&g, 3, f).unwrap());
    }

    #[test]
    fn renders_placeholders() {
        let real = ActivationSet::from_rows(&[[0.0], [1.0]]).unwrap();
        let ev = ExternalEvaluator::new("gen --ld {param:latent_dim} -o {out} {x}", real.clone(), SelectionSpec::All)
            .unwrap();
        let cmd = ev.render(&ps(&[("latent_dim", "4")]), Path::new("/tmp/a b.actb")).unwrap();
        assert_eq!(cmd, "gen --ld 4 -o '/tmp/a b.actb' {x}");
        assert!(ev.render(&ps(&[]), Path::new("/x")).is_err());
        assert!(ExternalEvaluator::new("gen", real, SelectionSpec::All).is_err());
    }
}
