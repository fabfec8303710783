//! Theorem-level experiments: run the Osserman and duality checkers over a
//! corpus and test that their verdicts agree, and search for a tensor that
//! satisfies duality while failing the Osserman condition (the equivalence
//! says the search must come up empty).

use std::fmt;
use std::fs;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{CurvError, Result};
use crate::generators::{perturb, random_curvature, TensorDescriptor};
use crate::scalar::{as_f64, real, Real};
use crate::spectral::{
    duality_report, osserman_report, sample_unit_sphere, ClusterTol, SphereSample,
    DEFAULT_CHECK_TOL, DEFAULT_PROBES_PER_EIGENSPACE,
};
use crate::tensor::{project_to_curvature, AlgebraicCurvatureTensor, RawTensor};

/// Checker configuration shared by both sides of an experiment row.
#[derive(Clone, Copy, Debug)]
pub struct CheckParams<S> {
    pub samples: usize,
    pub seed: u64,
    pub cluster_tol: ClusterTol<S>,
    pub tolerance: S,
    pub probes_per_eigenspace: usize,
}

impl<S: Real> Default for CheckParams<S> {
    fn default() -> Self {
        Self {
            samples: 200,
            seed: 0,
            cluster_tol: ClusterTol::Auto,
            tolerance: real::<S>(DEFAULT_CHECK_TOL),
            probes_per_eigenspace: DEFAULT_PROBES_PER_EIGENSPACE,
        }
    }
}

/// One corpus tensor scored by both checkers on identical samples.
#[derive(Clone, Debug, Serialize)]
#[serde(bound(serialize = "S: Serialize"))]
pub struct EquivalenceRow<S> {
    pub tensor_id: String,
    pub osserman_spread: S,
    pub duality_max_residual: S,
    pub osserman_verdict: bool,
    pub duality_verdict: bool,
    pub agree: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

/// Scores one tensor with both checkers over the same sphere sample.
pub fn score_tensor<S: Real>(
    t: &AlgebraicCurvatureTensor<S>,
    params: &CheckParams<S>,
) -> Result<(S, S, bool, bool)> {
    let sample: SphereSample<S> = sample_unit_sphere(t.n(), params.samples, params.seed);
    let oss = osserman_report(t, &sample, params.cluster_tol, params.tolerance)?;
    let dual = duality_report(
        t,
        &sample,
        params.cluster_tol,
        params.tolerance,
        params.probes_per_eigenspace,
    )?;
    Ok((oss.profile_spread, dual.max_residual, oss.verdict, dual.verdict))
}

/// Runs both checkers on every corpus tensor. A generator or checker failure
/// marks its row and the run continues.
pub fn equivalence_experiment<S: Real>(
    corpus: &[TensorDescriptor],
    params: &CheckParams<S>,
) -> Vec<EquivalenceRow<S>> {
    corpus
        .par_iter()
        .map(|descriptor| {
            let tensor_id = descriptor.to_string();
            let outcome = descriptor.resolve::<S>().and_then(|t| score_tensor(&t, params));
            match outcome {
                Ok((spread, residual, o_verdict, d_verdict)) => EquivalenceRow {
                    tensor_id,
                    osserman_spread: spread,
                    duality_max_residual: residual,
                    osserman_verdict: o_verdict,
                    duality_verdict: d_verdict,
                    agree: o_verdict == d_verdict,
                    error: None,
                },
                Err(e) => EquivalenceRow {
                    tensor_id,
                    osserman_spread: S::nan(),
                    duality_max_residual: S::nan(),
                    osserman_verdict: false,
                    duality_verdict: false,
                    agree: true,
                    error: Some(e.to_string()),
                },
            }
        })
        .collect()
}

/// The corpus of the agreement experiment: known Osserman families crossed
/// with perturbation scales and noise seeds.
pub fn osserman_perturbation_corpus(
    epsilons: &[f64],
    noise_seeds: std::ops::Range<u64>,
) -> Vec<TensorDescriptor> {
    let bases = vec![
        TensorDescriptor::constant(3, 1.0),
        TensorDescriptor::constant(4, 1.0),
        TensorDescriptor::constant(5, 2.0),
        TensorDescriptor::constant(6, -1.0),
        TensorDescriptor::constant(8, 0.5),
        TensorDescriptor::complex(4, 1.0, 1.0),
        TensorDescriptor::complex(4, 1.0, 2.0),
        TensorDescriptor::complex(6, 1.0, 1.0),
        TensorDescriptor::clifford(4, 2, 1.0, vec![1.0, 0.5], 2),
        TensorDescriptor::clifford(8, 3, 1.0, vec![1.0, 1.0, 1.0], 1),
    ];
    let mut corpus = Vec::new();
    for &eps in epsilons {
        for seed in noise_seeds.clone() {
            for base in &bases {
                corpus.push(TensorDescriptor::perturbed(base.clone(), eps, seed));
            }
        }
    }
    corpus
}

// ---------------------------------------------------------------------------
// Falsification search
// ---------------------------------------------------------------------------

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SearchMethod {
    RandomRestart,
    CoordinateDescent,
}

impl std::str::FromStr for SearchMethod {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "random-restart" => Ok(SearchMethod::RandomRestart),
            "coordinate-descent" => Ok(SearchMethod::CoordinateDescent),
            other => Err(format!("unknown method `{other}` (random-restart, coordinate-descent)")),
        }
    }
}

impl fmt::Display for SearchMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SearchMethod::RandomRestart => f.write_str("random-restart"),
            SearchMethod::CoordinateDescent => f.write_str("coordinate-descent"),
        }
    }
}

/// Point on the improvement trace of a search run.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct TraceEntry {
    pub evaluation: usize,
    pub residual: f64,
    pub spread: f64,
    pub objective: f64,
}

/// Checker configuration under which the reported scores were produced;
/// rerunning the public checkers with these parameters on the candidate
/// reproduces `best_residual` and `best_spread`.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct VerificationParams {
    pub samples: usize,
    pub seed: u64,
    pub probes_per_eigenspace: usize,
    pub tolerance: f64,
}

/// Best candidate found when minimizing the duality residual subject to an
/// Osserman-deviation floor.
#[derive(Clone, Debug)]
pub struct FalsifierResult<S> {
    pub best_residual: S,
    pub best_spread: S,
    pub candidate: AlgebraicCurvatureTensor<S>,
    pub evaluations: usize,
    pub restarts: usize,
    pub verification: VerificationParams,
    pub trace: Vec<TraceEntry>,
}

const INNER_SAMPLES: usize = 32;
const INNER_PROBES: usize = 2;
const VERIFY_SAMPLES: usize = 500;
const INITIAL_PENALTY: f64 = 10.0;

struct SearchState<S> {
    t: AlgebraicCurvatureTensor<S>,
    tensor_scores: (S, S), // (spread, residual)
    objective: S,
}

struct Searcher<S: Real> {
    delta: S,
    budget: usize,
    tolerance: S,
    mu: S,
    sample: SphereSample<S>,
    evaluations: usize,
    best_feasible: Option<(S, S, AlgebraicCurvatureTensor<S>)>, // residual, spread, tensor
    best_any: Option<(S, S, AlgebraicCurvatureTensor<S>)>,
    trace: Vec<TraceEntry>,
}

impl<S: Real> Searcher<S> {
    fn objective(&self, spread: S, residual: S) -> S {
        residual + self.mu * (self.delta - spread).max(S::zero())
    }

    fn evaluate(
        &mut self,
        t: &AlgebraicCurvatureTensor<S>,
        cluster_tol: ClusterTol<S>,
    ) -> Result<(S, S, S)> {
        let oss = osserman_report(t, &self.sample, cluster_tol, self.tolerance)?;
        let dual =
            duality_report(t, &self.sample, cluster_tol, self.tolerance, INNER_PROBES)?;
        self.evaluations += 1;
        let spread = oss.profile_spread;
        let residual = dual.max_residual;
        let objective = self.objective(spread, residual);
        let feasible = spread >= self.delta;
        if feasible
            && self
                .best_feasible
                .as_ref()
                .map_or(true, |(best, _, _)| residual < *best)
        {
            self.best_feasible = Some((residual, spread, t.clone()));
            self.trace.push(TraceEntry {
                evaluation: self.evaluations,
                residual: as_f64(residual),
                spread: as_f64(spread),
                objective: as_f64(objective),
            });
        }
        if self
            .best_any
            .as_ref()
            .map_or(true, |(best, _, _)| residual < *best)
        {
            self.best_any = Some((residual, spread, t.clone()));
        }
        Ok((spread, residual, objective))
    }

    fn exhausted(&self) -> bool {
        self.evaluations >= self.budget
    }
}

fn unit_frobenius<S: Real>(t: &AlgebraicCurvatureTensor<S>) -> AlgebraicCurvatureTensor<S> {
    let f = t.frobenius_norm();
    if f > S::zero() {
        t.scale(S::one() / f)
    } else {
        t.clone()
    }
}

/// Minimizes the duality residual over unit-Frobenius curvature tensors
/// subject to `osserman_spread >= delta`, by a penalty formulation
/// `residual + mu * max(0, delta - spread)`. Deterministic in `seed`; budget
/// exhaustion is the normal terminal state.
pub fn falsification_search<S: Real>(
    n: usize,
    delta: S,
    budget: usize,
    seed: u64,
    method: SearchMethod,
) -> Result<FalsifierResult<S>> {
    if !(3..=6).contains(&n) {
        return Err(CurvError::InvalidParameter(format!(
            "falsifier dimension must lie in [3, 6], got {n}"
        )));
    }
    if budget < 1 {
        return Err(CurvError::InvalidParameter("budget must be at least 1".into()));
    }

    let inner_seed = seed ^ 0xC0FF_EE00_D15E_A5E5;
    let tolerance = real::<S>(DEFAULT_CHECK_TOL);
    let mut searcher = Searcher {
        delta,
        budget,
        tolerance,
        mu: real::<S>(INITIAL_PENALTY),
        sample: sample_unit_sphere(n, INNER_SAMPLES, inner_seed),
        evaluations: 0,
        best_feasible: None,
        best_any: None,
        trace: Vec::new(),
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cluster_tol = ClusterTol::Auto;
    let mut restarts = 0usize;

    'outer: loop {
        // fresh start
        let start = random_curvature::<S>(n, rng.random::<u64>(), S::one());
        let (spread, residual, objective) = searcher.evaluate(&start, cluster_tol)?;
        let mut state =
            SearchState { t: start, tensor_scores: (spread, residual), objective };
        if searcher.exhausted() {
            break;
        }

        match method {
            SearchMethod::RandomRestart => {
                let mut sigma = real::<S>(0.5);
                let sigma_floor = real::<S>(1e-9);
                while !searcher.exhausted() {
                    let noise = random_curvature::<S>(n, rng.random::<u64>(), S::one());
                    let proposal = unit_frobenius(&perturb(&state.t, &noise, sigma)?);
                    let (sp, rs, obj) = searcher.evaluate(&proposal, cluster_tol)?;
                    if obj < state.objective {
                        state = SearchState { t: proposal, tensor_scores: (sp, rs), objective: obj };
                        sigma = (sigma * real::<S>(1.3)).min(real::<S>(1.0));
                    } else {
                        sigma = sigma * real::<S>(0.8);
                    }
                    if sigma < sigma_floor {
                        break; // converged locally, restart
                    }
                }
            }
            SearchMethod::CoordinateDescent => {
                let directions = coordinate_directions::<S>(n);
                let mut sigma = real::<S>(0.25);
                let sigma_floor = real::<S>(1e-9);
                while !searcher.exhausted() {
                    let mut improved = false;
                    'cycle: for d in &directions {
                        for sign in [S::one(), -S::one()] {
                            if searcher.exhausted() {
                                break 'cycle;
                            }
                            let proposal =
                                unit_frobenius(&perturb(&state.t, d, sign * sigma)?);
                            let (sp, rs, obj) = searcher.evaluate(&proposal, cluster_tol)?;
                            if obj < state.objective {
                                state = SearchState {
                                    t: proposal,
                                    tensor_scores: (sp, rs),
                                    objective: obj,
                                };
                                improved = true;
                                break; // next direction from the new point
                            }
                        }
                    }
                    if !improved {
                        sigma = sigma * real::<S>(0.5);
                        if sigma < sigma_floor {
                            break;
                        }
                    }
                }
            }
        }

        if searcher.exhausted() {
            break 'outer;
        }
        restarts += 1;
        // escalate the penalty when the incumbent still violates the floor
        if state.tensor_scores.0 < delta {
            searcher.mu = searcher.mu * real::<S>(10.0);
        }
    }

    // candidate: best feasible if the floor was ever met, otherwise best seen
    let (_, _, candidate) = searcher
        .best_feasible
        .clone()
        .or_else(|| searcher.best_any.clone())
        .expect("at least one evaluation happened");

    // re-verify promising candidates with a large sample; report scores that
    // the public checkers reproduce from the candidate
    let evaluations = searcher.evaluations;
    let trace = searcher.trace;
    let preliminary_residual = searcher
        .best_feasible
        .as_ref()
        .or(searcher.best_any.as_ref())
        .map(|(r, _, _)| *r)
        .expect("scored");
    let needs_reverify = preliminary_residual < real::<S>(10.0) * tolerance;
    let (verify_samples, verify_seed) = if needs_reverify {
        (VERIFY_SAMPLES, inner_seed.wrapping_add(1))
    } else {
        (INNER_SAMPLES, inner_seed)
    };
    let verification = VerificationParams {
        samples: verify_samples,
        seed: verify_seed,
        probes_per_eigenspace: INNER_PROBES,
        tolerance: as_f64(tolerance),
    };
    let final_sample: SphereSample<S> = sample_unit_sphere(n, verify_samples, verify_seed);
    let oss = osserman_report(&candidate, &final_sample, cluster_tol, tolerance)?;
    let dual = duality_report(&candidate, &final_sample, cluster_tol, tolerance, INNER_PROBES)?;

    Ok(FalsifierResult {
        best_residual: dual.max_residual,
        best_spread: oss.profile_spread,
        candidate,
        evaluations,
        restarts,
        verification,
        trace,
    })
}

/// Unit-Frobenius projections of the coordinate tensors E_{ijkl}, one per
/// independent curvature component.
fn coordinate_directions<S: Real>(n: usize) -> Vec<AlgebraicCurvatureTensor<S>> {
    let mut out = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            for k in 0..n {
                for l in k + 1..n {
                    if (k, l) < (i, j) {
                        continue;
                    }
                    let mut raw = RawTensor::zeros(n);
                    raw.set(i, j, k, l, S::one());
                    let p = project_to_curvature(&raw).expect("finite");
                    let f = p.frobenius_norm();
                    if f > real::<S>(1e-12) {
                        out.push(p.scale(S::one() / f));
                    }
                }
            }
        }
    }
    out
}

// ---------------------------------------------------------------------------
// Report output
// ---------------------------------------------------------------------------

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ReportFormat {
    Json,
    Csv,
}

impl std::str::FromStr for ReportFormat {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "json" => Ok(ReportFormat::Json),
            "csv" => Ok(ReportFormat::Csv),
            other => Err(format!("unknown format `{other}` (json, csv)")),
        }
    }
}

/// Serializes equivalence rows. Output is byte-stable for fixed inputs. CSV
/// columns: `tensor_id,osserman_spread,duality_max_residual,osserman_verdict,
/// duality_verdict,agree`; rows whose computation failed carry `error` in
/// both verdict columns.
pub fn write_equivalence_report<S: Real + Serialize>(
    rows: &[EquivalenceRow<S>],
    path: &Path,
    format: ReportFormat,
) -> Result<()> {
    let payload = match format {
        ReportFormat::Json => serde_json::to_string_pretty(rows)? + "\n",
        ReportFormat::Csv => equivalence_csv(rows),
    };
    fs::write(path, payload)?;
    Ok(())
}

pub fn equivalence_csv<S: Real>(rows: &[EquivalenceRow<S>]) -> String {
    let mut out = String::from(
        "tensor_id,osserman_spread,duality_max_residual,osserman_verdict,duality_verdict,agree\n",
    );
    for r in rows {
        if r.error.is_some() {
            out.push_str(&format!(
                "{},{},{},error,error,{}\n",
                r.tensor_id,
                as_f64(r.osserman_spread),
                as_f64(r.duality_max_residual),
                r.agree
            ));
        } else {
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                r.tensor_id,
                as_f64(r.osserman_spread),
                as_f64(r.duality_max_residual),
                r.osserman_verdict,
                r.duality_verdict,
                r.agree
            ));
        }
    }
    out
}

/// Serializes a falsifier result, embedding the candidate tensor in the
/// dense tensor-file layout so the scores can be reproduced from the report
/// alone.
pub fn write_falsifier_report<S: Real>(
    result: &FalsifierResult<S>,
    meta: &FalsifierMeta,
    path: &Path,
    format: ReportFormat,
) -> Result<()> {
    let payload = match format {
        ReportFormat::Json => {
            let candidate = serde_json::json!({
                "n": result.candidate.n(),
                "format": crate::io::DENSE_FORMAT,
                "components": result
                    .candidate
                    .components()
                    .iter()
                    .map(|&x| as_f64(x))
                    .collect::<Vec<f64>>(),
            });
            let value = serde_json::json!({
                "check": "falsify",
                "n": meta.n,
                "delta": meta.delta,
                "budget": meta.budget,
                "seed": meta.seed,
                "method": meta.method.to_string(),
                "best_residual": as_f64(result.best_residual),
                "best_spread": as_f64(result.best_spread),
                "evaluations": result.evaluations,
                "restarts": result.restarts,
                "verification": result.verification,
                "trace": result.trace,
                "candidate": candidate,
            });
            serde_json::to_string_pretty(&value)? + "\n"
        }
        ReportFormat::Csv => {
            let mut out = String::from("evaluation,residual,spread,objective\n");
            for t in &result.trace {
                out.push_str(&format!(
                    "{},{},{},{}\n",
                    t.evaluation, t.residual, t.spread, t.objective
                ));
            }
            out
        }
    };
    fs::write(path, payload)?;
    Ok(())
}

/// Search metadata echoed into falsifier reports.
#[derive(Clone, Copy, Debug)]
pub struct FalsifierMeta {
    pub n: usize,
    pub delta: f64,
    pub budget: usize,
    pub seed: u64,
    pub method: SearchMethod,
}
