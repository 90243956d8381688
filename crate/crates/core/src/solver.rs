//! Newton least-squares iteration on the Fay function and the ℓ-sweep
//! decision procedure.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kummer::{
    fay_function, is_trivial, FayContext, FayEvaluation, Pinning, TrisecantTriple, TRIVIAL_TOL,
};
use crate::linalg::{lstsq, CMatrix, CVector};
use crate::matrix::RiemannMatrix;
use crate::siegel::{siegel_reduce, ReductionReport};
use crate::theta::default_radius;
use crate::C64;

/// Truncation target for the theta sums inside the solver.
pub const THETA_TOLERANCE: f64 = 1e-16;

/// Residual growth factor that triggers step halving.
const DAMPING_TRIGGER: f64 = 1e3;
const MAX_HALVINGS: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StartStrategy {
    HalfPeriod,
    Random,
    NearCoincident,
}

impl std::str::FromStr for StartStrategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "half_period" | "half-period" => Ok(Self::HalfPeriod),
            "random" => Ok(Self::Random),
            "near_coincident" | "near-coincident" => Ok(Self::NearCoincident),
            other => Err(Error::InvalidConfig(format!("unknown strategy {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub delta: f64,
    pub ell0: f64,
    pub d_ell: f64,
    pub ell_max: f64,
    pub n_max: usize,
    pub start_strategy: StartStrategy,
    pub seed: u64,
    /// Stop as soon as `‖F‖ < delta`.
    pub residual_stop: bool,
    /// Stop the sweep at the first witness.
    pub early_exit: bool,
    pub pinning: Pinning,
    pub trivial_tol: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            delta: 1e-10,
            ell0: 0.1,
            d_ell: 0.1,
            ell_max: 0.5,
            n_max: 100,
            start_strategy: StartStrategy::HalfPeriod,
            seed: 0,
            residual_stop: true,
            early_exit: true,
            pinning: Pinning::default(),
            trivial_tol: TRIVIAL_TOL,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.delta > 0.0) {
            return Err(Error::InvalidConfig(format!("delta must be positive, got {}", self.delta)));
        }
        if !(0.0 < self.ell0 && self.ell0 <= self.ell_max && self.ell_max < 1.0) {
            return Err(Error::InvalidConfig(format!(
                "need 0 < ell0 <= ell_max < 1, got ell0 = {}, ell_max = {}",
                self.ell0, self.ell_max
            )));
        }
        if !(self.d_ell > 0.0) {
            return Err(Error::InvalidConfig(format!("d_ell must be positive, got {}", self.d_ell)));
        }
        if self.n_max == 0 {
            return Err(Error::InvalidConfig("n_max must be at least 1".into()));
        }
        Ok(())
    }

    /// `ℓ0, ℓ0 + Δℓ, …` up to `ℓ_max`.
    pub fn ells(&self) -> Vec<f64> {
        let mut out = Vec::new();
        let mut k = 0;
        loop {
            let ell = self.ell0 + k as f64 * self.d_ell;
            if ell > self.ell_max + 1e-12 {
                break;
            }
            out.push(ell);
            k += 1;
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    StepSmall,
    ResidualSmall,
    MaxIter,
    /// The start hit a trivial configuration, a vanishing denominator, or
    /// could not be damped.
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub n: usize,
    pub residual: f64,
    pub step_norm: Option<f64>,
    pub delta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationTrace {
    pub ell: f64,
    pub records: Vec<IterationRecord>,
    pub stop_reason: StopReason,
    pub failure: Option<String>,
}

impl IterationTrace {
    pub fn final_record(&self) -> Option<&IterationRecord> {
        self.records.last()
    }

    pub fn best_residual(&self) -> f64 {
        self.records.iter().map(|r| r.residual).fold(f64::INFINITY, f64::min)
    }

    pub fn final_delta(&self) -> f64 {
        self.final_record().map_or(f64::INFINITY, |r| r.delta)
    }
}

#[derive(Debug, Clone)]
pub struct NewtonOutcome {
    pub trace: IterationTrace,
    /// Last successful evaluation, absent if the start failed outright.
    pub last: Option<FayEvaluation>,
}

impl NewtonOutcome {
    pub fn final_delta(&self) -> f64 {
        self.last.as_ref().map_or(f64::INFINITY, |e| e.delta)
    }

    pub fn final_x(&self) -> Option<&CVector> {
        self.last.as_ref().map(|e| &e.x)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub in_locus: bool,
    pub precision: f64,
    pub best_delta: f64,
    pub best_residual: f64,
    pub traces: Vec<IterationTrace>,
    /// Witness triple in the coordinates of the reduced matrix.
    pub witness: Option<TrisecantTriple>,
    pub reduction: ReductionReport,
    pub reduced: RiemannMatrix,
}

impl Verdict {
    pub fn iterations(&self) -> usize {
        self.traces.iter().map(|t| t.records.len().saturating_sub(1)).sum()
    }
}

/// Starting triple for one sweep step.
pub fn initial_triple(
    b: &RiemannMatrix,
    ell: f64,
    strategy: StartStrategy,
    seed: u64,
) -> Result<TrisecantTriple> {
    let g = b.genus();
    match strategy {
        StartStrategy::HalfPeriod => {
            if g < 3 {
                return Err(Error::WrongGenus {
                    got: g,
                    need: "at least 3".into(),
                });
            }
            if !(ell > 0.0 && ell < 1.0) {
                return Err(Error::DegenerateEll(ell));
            }
            let half = |k: usize| {
                let mut e = CVector::zeros(g);
                e[k] = C64::new(1.0, 0.0);
                (&e + b.matrix() * &e) * C64::new(ell / 2.0, 0.0)
            };
            Ok(TrisecantTriple {
                x: half(g - 3),
                y: half(g - 2),
                z: half(g - 1),
            })
        }
        StartStrategy::Random => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            loop {
                let t = TrisecantTriple {
                    x: random_point(b, &mut rng),
                    y: random_point(b, &mut rng),
                    z: random_point(b, &mut rng),
                };
                if !is_trivial(&t.x, &t.y, &t.z, b, TRIVIAL_TOL) {
                    return Ok(t);
                }
            }
        }
        StartStrategy::NearCoincident => {
            if !(ell > 0.0 && ell < 1.0) {
                return Err(Error::DegenerateEll(ell));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            loop {
                let x = random_point(b, &mut rng);
                let z = random_point(b, &mut rng);
                let y = &x * C64::new(1.0 + ell / 10.0, 0.0);
                if !is_trivial(&x, &y, &z, b, TRIVIAL_TOL) {
                    return Ok(TrisecantTriple { x, y, z });
                }
            }
        }
    }
}

fn random_point(b: &RiemannMatrix, rng: &mut ChaCha8Rng) -> CVector {
    let g = b.genus();
    let p = CVector::from_fn(g, |_, _| C64::new(rng.random_range(-0.5..=0.5), 0.0));
    let q = CVector::from_fn(g, |_, _| C64::new(rng.random_range(-0.5..=0.5), 0.0));
    p + b.matrix() * q
}

fn failed(mut trace: IterationTrace, last: Option<FayEvaluation>, why: String) -> NewtonOutcome {
    trace.stop_reason = StopReason::Failed;
    trace.failure = Some(why);
    NewtonOutcome { trace, last }
}

/// Newton least-squares iteration from `triple0` with `ctx` built on the
/// (reduced) matrix.
pub fn newton_solve(
    ctx: &FayContext,
    triple0: &TrisecantTriple,
    cfg: &SolverConfig,
    ell: f64,
) -> NewtonOutcome {
    let pin = &cfg.pinning;
    let mut trace = IterationTrace {
        ell,
        records: Vec::new(),
        stop_reason: StopReason::MaxIter,
        failure: None,
    };
    let (x0, v0) = pin.split(triple0);
    let mut cur = match fay_function(&x0, &v0, pin, ctx, cfg.trivial_tol) {
        Ok(e) => e,
        Err(e) => return failed(trace, None, e.to_string()),
    };
    trace.records.push(IterationRecord {
        n: 0,
        residual: cur.residual,
        step_norm: None,
        delta: cur.delta,
    });
    for n in 1..=cfg.n_max {
        if cfg.residual_stop && cur.residual < cfg.delta {
            trace.stop_reason = StopReason::ResidualSmall;
            return NewtonOutcome {
                trace,
                last: Some(cur),
            };
        }
        let step = lstsq(&cur.jacobian, &(-&cur.f));
        let (next, step_norm) = match damped_step(&cur, &step, pin, ctx, cfg.trivial_tol) {
            Ok(v) => v,
            Err(why) => return failed(trace, Some(cur), why),
        };
        cur = next;
        trace.records.push(IterationRecord {
            n,
            residual: cur.residual,
            step_norm: Some(step_norm),
            delta: cur.delta,
        });
        if step_norm < cfg.delta {
            trace.stop_reason = StopReason::StepSmall;
            return NewtonOutcome {
                trace,
                last: Some(cur),
            };
        }
    }
    if cfg.residual_stop && cur.residual < cfg.delta {
        trace.stop_reason = StopReason::ResidualSmall;
    }
    NewtonOutcome {
        trace,
        last: Some(cur),
    }
}

fn damped_step(
    cur: &FayEvaluation,
    step: &CVector,
    pin: &Pinning,
    ctx: &FayContext,
    tol: f64,
) -> std::result::Result<(FayEvaluation, f64), String> {
    let mut scale = 1.0;
    let mut last_err = String::new();
    for _ in 0..=MAX_HALVINGS {
        let s = step * C64::new(scale, 0.0);
        match fay_function(&(&cur.x + &s), &cur.fixed, pin, ctx, tol) {
            Ok(e) if e.residual <= DAMPING_TRIGGER * cur.residual.max(f64::MIN_POSITIVE) => {
                return Ok((e, s.norm()));
            }
            Ok(e) => last_err = format!("residual grew to {:e}", e.residual),
            Err(e) => last_err = e.to_string(),
        }
        scale *= 0.5;
    }
    Err(format!("step rejected after {MAX_HALVINGS} halvings: {last_err}"))
}

/// Context for a reduced matrix with the default truncation radius.
pub fn context_for(reduced: &RiemannMatrix) -> Result<FayContext> {
    let radius = default_radius(reduced.y_min(), THETA_TOLERANCE)?;
    Ok(FayContext::new(reduced, radius))
}

/// Reduces `b_raw`, then sweeps `ℓ` running one Newton start per value.
pub fn schottky_test(b_raw: &RiemannMatrix, cfg: &SolverConfig) -> Result<Verdict> {
    cfg.validate()?;
    let g = b_raw.genus();
    if g < 3 {
        return Err(Error::WrongGenus {
            got: g,
            need: "at least 3".into(),
        });
    }
    cfg.pinning.validate(g)?;
    let (reduced, reduction) = siegel_reduce(b_raw)?;
    let ctx = context_for(&reduced)?;
    let mut traces = Vec::new();
    let mut best_delta = f64::INFINITY;
    let mut best_residual = f64::INFINITY;
    let mut witness = None;
    for (k, ell) in cfg.ells().into_iter().enumerate() {
        let start = initial_triple(&reduced, ell, cfg.start_strategy, cfg.seed.wrapping_add(k as u64))?;
        let out = newton_solve(&ctx, &start, cfg, ell);
        best_residual = best_residual.min(out.trace.best_residual());
        let d = out.final_delta();
        best_delta = best_delta.min(d);
        if witness.is_none() && d < cfg.delta {
            if let Some(e) = &out.last {
                let t = &e.triple;
                if !is_trivial(&t.x, &t.y, &t.z, &reduced, cfg.trivial_tol) {
                    witness = Some(t.clone());
                }
            }
        }
        traces.push(out.trace);
        if witness.is_some() && cfg.early_exit {
            break;
        }
    }
    Ok(Verdict {
        in_locus: witness.is_some(),
        precision: cfg.delta,
        best_delta,
        best_residual,
        traces,
        witness,
        reduction,
        reduced,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub s: f64,
    pub best_residual: f64,
    pub delta_min: f64,
    pub converged_fraction: f64,
}

/// For each `s`, runs the full sweep on `perturb(s)` with the residual stop
/// disabled and records the smallest residual reached.
pub fn precision_sweep<F>(perturb: F, s_list: &[f64], cfg: &SolverConfig) -> Result<Vec<SweepRow>>
where
    F: Fn(f64) -> Result<RiemannMatrix>,
{
    let cfg = SolverConfig {
        residual_stop: false,
        early_exit: false,
        ..cfg.clone()
    };
    s_list
        .iter()
        .map(|&s| {
            let v = schottky_test(&perturb(s)?, &cfg)?;
            let converged = v.traces.iter().filter(|t| t.final_delta() < cfg.delta).count();
            Ok(SweepRow {
                s,
                best_residual: v.best_residual,
                delta_min: v.best_delta,
                converged_fraction: converged as f64 / v.traces.len().max(1) as f64,
            })
        })
        .collect()
}

/// [`precision_sweep`] for `B + s(M + iM)`.
pub fn residual_vs_precision_sweep(
    b_exact: &RiemannMatrix,
    m: &DMatrix<f64>,
    s_list: &[f64],
    cfg: &SolverConfig,
) -> Result<Vec<SweepRow>> {
    if (m - m.transpose()).amax() > 0.0 {
        return Err(Error::NotSymmetric((m - m.transpose()).amax()));
    }
    let mc: CMatrix = m.map(|x| C64::new(x, x));
    precision_sweep(
        |s| RiemannMatrix::new(b_exact.matrix() + &mc * C64::new(s, 0.0)),
        s_list,
        cfg,
    )
}
