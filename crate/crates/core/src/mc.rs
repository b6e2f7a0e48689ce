//! Monte Carlo simulation of the switched system (Euler-Maruyama), trace
//! extraction, and empirical probability estimates with exact binomial
//! confidence intervals.

use std::fmt;
use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{Beta, ContinuousCDF};
use thiserror::Error;

use crate::assembly::{McCheckRow, VerificationReport};
use crate::barrier::region_points;
use crate::ltl::{FiniteWord, Formula, Proposition};
use crate::poly::PowerTable;
use crate::sampling;
use crate::system::{Predicate, SwitchedSystem, SystemError};

/// Largest allowed per-step jump probability for Markov switching.
pub const MAX_JUMP_PROBABILITY: f64 = 0.1;

#[derive(Debug, Error)]
pub enum McError {
    #[error("jump probability {0:.4} per step exceeds {MAX_JUMP_PROBABILITY}; reduce dt")]
    StepTooLarge(f64),
    #[error("time step {dt} does not divide the horizon {horizon}")]
    BadStep { dt: f64, horizon: f64 },
    #[error("initial state {0:?} lies outside the state space")]
    OutOfStateSpace(Vec<f64>),
    #[error("Markov switching needs a transition-rate matrix")]
    MissingRates,
    #[error("mode index {0} out of range")]
    BadMode(usize),
    #[error(transparent)]
    System(#[from] SystemError),
}

/// Rule generating the switching signal.
#[derive(Clone, Debug)]
pub enum Policy {
    /// Always the mode with this index.
    Constant(usize),
    /// Exponential dwell times with the given mean, each new mode uniform.
    PiecewiseRandom { mean_dwell: f64 },
    /// Jumps with the system's rates, starting in the given mode.
    MarkovJump { initial: usize },
    /// One-step lookahead choosing the mode whose drift moves closest to
    /// `target`; ties go to the noisiest mode.
    Greedy { target: Predicate },
}

impl fmt::Display for Policy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Policy::Constant(m) => write!(f, "constant({m})"),
            Policy::PiecewiseRandom { mean_dwell } => write!(f, "random({mean_dwell})"),
            Policy::MarkovJump { initial } => write!(f, "markov({initial})"),
            Policy::Greedy { .. } => f.write_str("greedy"),
        }
    }
}

/// Constant policies for every mode, random dwell at three time scales,
/// and Markov switching when rates are present and `dt` is small enough.
pub fn default_battery(sys: &SwitchedSystem, dt: f64) -> Vec<Policy> {
    let t = sys.horizon();
    let mut out: Vec<Policy> = (0..sys.modes().len()).map(Policy::Constant).collect();
    if sys.modes().len() > 1 {
        for frac in [0.01, 0.1, 1.0] {
            out.push(Policy::PiecewiseRandom { mean_dwell: frac * t });
        }
        if sys.rates().is_some() && max_jump_probability(sys, dt).is_ok_and(|p| p <= MAX_JUMP_PROBABILITY) {
            out.push(Policy::MarkovJump { initial: 0 });
        }
    }
    out
}

/// Largest `sum_{m' != m} lambda_mm'(x) dt` over a grid of the state space.
pub fn max_jump_probability(sys: &SwitchedSystem, dt: f64) -> Result<f64, McError> {
    let rates = sys.compiled_rates().ok_or(McError::MissingRates)?;
    let sb = sys.state_space();
    let per_axis = sampling::per_axis_for_budget(sb.dim(), 4096);
    let deg = rates.iter().flatten().map(|r| r.degree()).max().unwrap_or(0);
    let mut worst = 0.0f64;
    for x in sampling::grid(&sb.lower, &sb.upper, per_axis) {
        let table = PowerTable::new(&x, deg);
        for (m, row) in rates.iter().enumerate() {
            let out: f64 =
                row.iter().enumerate().filter(|(j, _)| *j != m).map(|(_, r)| r.eval_with(&table).max(0.0)).sum();
            worst = worst.max(out * dt);
        }
    }
    Ok(worst)
}

/// Euler-Maruyama path on the grid `t_j = j dt`, frozen after leaving the
/// state space (the exit point is projected back onto the box).
#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    pub dt: f64,
    pub states: Vec<Vec<f64>>,
    pub modes: Vec<usize>,
    pub stopped_at: Option<usize>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn time(&self, j: usize) -> f64 {
        j as f64 * self.dt
    }

    /// CSV with header `t,x1,...,xn,mode,prop`.
    pub fn to_csv(&self, sys: &SwitchedSystem) -> String {
        let n = sys.dimension();
        let mut s = String::from("t");
        for i in 1..=n {
            let _ = write!(s, ",x{i}");
        }
        s.push_str(",mode,prop\n");
        for (j, x) in self.states.iter().enumerate() {
            let _ = write!(s, "{}", self.time(j));
            for v in x {
                let _ = write!(s, ",{v}");
            }
            let _ = writeln!(s, ",{},{}", sys.modes()[self.modes[j]].id, sys.label_unchecked(x));
        }
        s
    }
}

/// Run-length compressed labels of a trajectory with entry times.
#[derive(Clone, Debug, PartialEq)]
pub struct TraceWord {
    pub letters: Vec<Proposition>,
    pub times: Vec<f64>,
}

impl TraceWord {
    pub fn word(&self) -> FiniteWord {
        FiniteWord::new(self.letters.clone()).expect("trace words are non-empty")
    }

    fn push(&mut self, p: &Proposition, t: f64) {
        if self.letters.last() != Some(p) {
            self.letters.push(p.clone());
            self.times.push(t);
        }
    }
}

fn steps_for(horizon: f64, dt: f64) -> Result<usize, McError> {
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(McError::BadStep { dt, horizon });
    }
    let steps = (horizon / dt).round();
    if (steps * dt - horizon).abs() > 1e-6 * horizon.max(dt) {
        return Err(McError::BadStep { dt, horizon });
    }
    Ok(steps as usize)
}

/// Per-run simulation state shared by path and trace generation.
struct Stepper<'a> {
    sys: &'a SwitchedSystem,
    policy: &'a Policy,
    dt: f64,
    sqrt_dt: f64,
    degree: u32,
    rng: ChaCha8Rng,
    x: Vec<f64>,
    mode: usize,
    next_switch: f64,
    stopped: bool,
    drift: Vec<f64>,
}

impl<'a> Stepper<'a> {
    fn new(sys: &'a SwitchedSystem, policy: &'a Policy, x0: &[f64], dt: f64, seed: u64, stream: u64) -> Result<Self, McError> {
        if !sys.state_space().contains(x0) {
            return Err(McError::OutOfStateSpace(x0.to_vec()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        let nmodes = sys.modes().len();
        let mut degree = sys.compiled_modes().iter().map(|m| m.degree).max().unwrap_or(0);
        if let Some(r) = sys.compiled_rates() {
            degree = degree.max(r.iter().flatten().map(|p| p.degree()).max().unwrap_or(0));
        }
        let mode = match policy {
            Policy::Constant(m) | Policy::MarkovJump { initial: m } => {
                if *m >= nmodes {
                    return Err(McError::BadMode(*m));
                }
                *m
            }
            Policy::PiecewiseRandom { .. } => rng.random_range(0..nmodes),
            Policy::Greedy { .. } => 0,
        };
        let mut s = Stepper {
            sys,
            policy,
            dt,
            sqrt_dt: dt.sqrt(),
            degree,
            rng,
            x: x0.to_vec(),
            mode,
            next_switch: 0.0,
            stopped: false,
            drift: vec![0.0; sys.dimension()],
        };
        if let Policy::PiecewiseRandom { mean_dwell } = policy {
            s.next_switch = s.dwell(*mean_dwell);
        }
        if let Policy::Greedy { target } = policy {
            s.mode = s.greedy_mode(target);
        }
        Ok(s)
    }

    fn dwell(&mut self, mean: f64) -> f64 {
        Exp::new(1.0 / mean).expect("positive mean dwell").sample(&mut self.rng)
    }

    fn greedy_mode(&mut self, target: &Predicate) -> usize {
        let table = PowerTable::new(&self.x, self.degree);
        let mut best = (f64::INFINITY, f64::NEG_INFINITY, 0usize);
        let n = self.sys.dimension();
        for (m, cm) in self.sys.compiled_modes().iter().enumerate() {
            cm.drift_at(&table, &mut self.drift);
            let y: Vec<f64> = self.x.iter().zip(&self.drift).map(|(x, f)| x + f * self.dt).collect();
            let score = target_score(target, &y);
            let noise: f64 = (0..n)
                .flat_map(|i| (0..self.sys.noise_dimension()).map(move |j| (i, j)))
                .map(|(i, j)| cm.diffusion_at(&table, i, j).powi(2))
                .sum();
            if score < best.0 || (score == best.0 && noise > best.1) {
                best = (score, noise, m);
            }
        }
        best.2
    }

    /// Advance one step from time `t`; a stopped path stays frozen.
    fn step(&mut self, t: f64) {
        if self.stopped {
            return;
        }
        let table = PowerTable::new(&self.x, self.degree);
        // mode for [t, t + dt)
        match self.policy {
            Policy::Constant(_) => {}
            Policy::PiecewiseRandom { mean_dwell } => {
                while self.next_switch <= t {
                    self.mode = self.rng.random_range(0..self.sys.modes().len());
                    let d = self.dwell(*mean_dwell);
                    self.next_switch += d;
                }
            }
            Policy::MarkovJump { .. } => {
                if let Some(rates) = self.sys.compiled_rates() {
                    let u: f64 = self.rng.random();
                    let mut acc = 0.0;
                    for (j, r) in rates[self.mode].iter().enumerate() {
                        if j == self.mode {
                            continue;
                        }
                        acc += r.eval_with(&table).max(0.0) * self.dt;
                        if u < acc {
                            self.mode = j;
                            break;
                        }
                    }
                }
            }
            Policy::Greedy { target } => self.mode = self.greedy_mode(target),
        }
        let table = PowerTable::new(&self.x, self.degree);
        let cm = &self.sys.compiled_modes()[self.mode];
        cm.drift_at(&table, &mut self.drift);
        let r = self.sys.noise_dimension();
        let z: Vec<f64> = (0..r).map(|_| StandardNormal.sample(&mut self.rng)).collect();
        let n = self.sys.dimension();
        let mut y = vec![0.0; n];
        for i in 0..n {
            let mut noise = 0.0;
            for (j, zj) in z.iter().enumerate() {
                noise += cm.diffusion_at(&table, i, j) * zj;
            }
            y[i] = self.x[i] + self.drift[i] * self.dt + noise * self.sqrt_dt;
        }
        let sb = self.sys.state_space();
        if !sb.contains(&y) {
            sb.project(&mut y);
            self.stopped = true;
        }
        self.x = y;
    }
}

/// Signed proximity to a predicate: negative inside, larger further away.
fn target_score(target: &Predicate, y: &[f64]) -> f64 {
    use crate::system::SetMember;
    target
        .members()
        .iter()
        .map(|m| match m {
            SetMember::Basic(b) => b.bounds().iter().map(|h| h.eval(y)).fold(f64::NEG_INFINITY, f64::max),
            SetMember::Complement(others) => {
                let inside = others
                    .iter()
                    .map(|b| b.bounds().iter().map(|h| h.eval(y)).fold(f64::NEG_INFINITY, f64::max))
                    .fold(f64::INFINITY, f64::min);
                -inside
            }
        })
        .fold(f64::INFINITY, f64::min)
}

/// One trajectory, deterministic in `(seed, stream)`.
pub fn simulate(
    sys: &SwitchedSystem,
    policy: &Policy,
    x0: &[f64],
    dt: f64,
    seed: u64,
    stream: u64,
) -> Result<Trajectory, McError> {
    check_policy(sys, policy, dt)?;
    let steps = steps_for(sys.horizon(), dt)?;
    let mut s = Stepper::new(sys, policy, x0, dt, seed, stream)?;
    let mut traj = Trajectory { dt, states: vec![s.x.clone()], modes: vec![s.mode], stopped_at: None };
    for j in 0..steps {
        s.step(j as f64 * dt);
        traj.states.push(s.x.clone());
        traj.modes.push(s.mode);
        if s.stopped && traj.stopped_at.is_none() {
            traj.stopped_at = Some(j + 1);
        }
    }
    Ok(traj)
}

fn check_policy(sys: &SwitchedSystem, policy: &Policy, dt: f64) -> Result<(), McError> {
    if let Policy::MarkovJump { .. } = policy {
        let p = max_jump_probability(sys, dt)?;
        if p > MAX_JUMP_PROBABILITY {
            return Err(McError::StepTooLarge(p));
        }
    }
    Ok(())
}

pub fn trace_of(traj: &Trajectory, sys: &SwitchedSystem) -> Result<TraceWord, McError> {
    let mut w = TraceWord { letters: Vec::new(), times: Vec::new() };
    for (j, x) in traj.states.iter().enumerate() {
        w.push(sys.label(x)?, traj.time(j));
    }
    Ok(w)
}

pub fn satisfies(word: &TraceWord, f: &Formula) -> bool {
    f.evaluate(&word.word())
}

/// Trace generated on the fly; `None` when it exceeds `max_word` letters.
fn sampled_trace(
    sys: &SwitchedSystem,
    policy: &Policy,
    x0: &[f64],
    dt: f64,
    steps: usize,
    seed: u64,
    stream: u64,
    max_word: usize,
) -> Result<Option<TraceWord>, McError> {
    let mut s = Stepper::new(sys, policy, x0, dt, seed, stream)?;
    let mut w = TraceWord { letters: Vec::new(), times: Vec::new() };
    w.push(sys.label(&s.x)?, 0.0);
    for j in 0..steps {
        s.step(j as f64 * dt);
        w.push(sys.label(&s.x)?, (j + 1) as f64 * dt);
        if w.letters.len() > max_word {
            return Ok(None);
        }
        if s.stopped {
            break;
        }
    }
    Ok(Some(w))
}

/// Successes out of trials with a 95% Clopper-Pearson interval.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub n: usize,
    pub k: usize,
    pub phat: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    /// Trajectories dropped by the chattering guard.
    pub excluded: usize,
}

impl Estimate {
    pub fn new(k: usize, n: usize) -> Self {
        let (lo, hi) = clopper_pearson(k, n, 0.05);
        Estimate { n, k, phat: if n == 0 { f64::NAN } else { k as f64 / n as f64 }, ci_lo: lo, ci_hi: hi, excluded: 0 }
    }

    /// Binomial standard error of the point estimate.
    pub fn std_err(&self) -> f64 {
        (self.phat * (1.0 - self.phat) / self.n as f64).sqrt()
    }
}

/// Exact two-sided `1 - alpha` interval for a binomial proportion.
pub fn clopper_pearson(k: usize, n: usize, alpha: f64) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let (kf, nf) = (k as f64, n as f64);
    let lo = if k == 0 { 0.0 } else { Beta::new(kf, nf - kf + 1.0).unwrap().inverse_cdf(alpha / 2.0) };
    let hi = if k == n { 1.0 } else { Beta::new(kf + 1.0, nf - kf).unwrap().inverse_cdf(1.0 - alpha / 2.0) };
    (lo, hi)
}

#[derive(Clone, Debug, PartialEq)]
pub struct McConfig {
    pub dt: f64,
    pub trajectories: usize,
    pub seed: u64,
    /// Longest trace word kept; longer traces are excluded.
    pub max_word: usize,
}

impl Default for McConfig {
    fn default() -> Self {
        McConfig { dt: 0.01, trajectories: 10_000, seed: 0, max_word: 64 }
    }
}

/// Fraction of trajectories from `x0` whose trace satisfies `f`.
/// Trajectory `i` uses random stream `i`, so results do not depend on
/// scheduling.
pub fn estimate_satisfaction(
    sys: &SwitchedSystem,
    f: &Formula,
    policy: &Policy,
    x0: &[f64],
    cfg: &McConfig,
) -> Result<Estimate, McError> {
    check_policy(sys, policy, cfg.dt)?;
    let steps = steps_for(sys.horizon(), cfg.dt)?;
    let results: Vec<Option<bool>> = (0..cfg.trajectories as u64)
        .into_par_iter()
        .map(|i| {
            sampled_trace(sys, policy, x0, cfg.dt, steps, cfg.seed, i, cfg.max_word)
                .map(|w| w.map(|w| satisfies(&w, f)))
        })
        .collect::<Result<_, _>>()?;
    let excluded = results.iter().filter(|r| r.is_none()).count();
    let k = results.iter().filter(|r| **r == Some(true)).count();
    let mut e = Estimate::new(k, results.len() - excluded);
    e.excluded = excluded;
    Ok(e)
}

/// Fraction of trajectories from `x0` that enter `target` within the horizon.
pub fn estimate_reach(
    sys: &SwitchedSystem,
    target: &Predicate,
    policy: &Policy,
    x0: &[f64],
    cfg: &McConfig,
) -> Result<Estimate, McError> {
    check_policy(sys, policy, cfg.dt)?;
    let steps = steps_for(sys.horizon(), cfg.dt)?;
    let hits: Vec<bool> = (0..cfg.trajectories as u64)
        .into_par_iter()
        .map(|i| {
            let mut s = Stepper::new(sys, policy, x0, cfg.dt, cfg.seed, i)?;
            if target.contains(&s.x) {
                return Ok(true);
            }
            for j in 0..steps {
                s.step(j as f64 * cfg.dt);
                if target.contains(&s.x) {
                    return Ok(true);
                }
                if s.stopped {
                    break;
                }
            }
            Ok(false)
        })
        .collect::<Result<_, McError>>()?;
    Ok(Estimate::new(hits.iter().filter(|h| **h).count(), hits.len()))
}

#[derive(Clone, Debug, PartialEq)]
pub struct CheckConfig {
    pub mc: McConfig,
    /// Starting points tried per proposition.
    pub points: usize,
    pub slack: f64,
}

impl Default for CheckConfig {
    fn default() -> Self {
        CheckConfig { mc: McConfig::default(), points: 3, slack: 0.01 }
    }
}

/// Starting points in `L^-1(p)`: spread grid points plus the first Halton
/// points of the region, at most `count`.
pub fn start_points(sys: &SwitchedSystem, p: &Proposition, count: usize) -> Result<Vec<Vec<f64>>, McError> {
    let region = sys.region_of(&std::collections::BTreeSet::from([p.clone()]))?;
    let sb = sys.state_space();
    let grid = sampling::grid(&sb.lower, &sb.upper, sampling::per_axis_for_budget(sb.dim(), 4096));
    let pool = region_points(&region, sb, &grid, 256);
    if pool.is_empty() || count == 0 {
        return Ok(Vec::new());
    }
    // the most central pool point first, then evenly spaced picks
    let centre: Vec<f64> =
        (0..sb.dim()).map(|d| pool.iter().map(|x| x[d]).sum::<f64>() / pool.len() as f64).collect();
    let dist = |x: &Vec<f64>| x.iter().zip(&centre).map(|(a, b)| (a - b).powi(2)).sum::<f64>();
    let first = pool.iter().min_by(|a, b| dist(a).total_cmp(&dist(b))).unwrap().clone();
    let mut out = vec![first];
    for i in 0..count.saturating_sub(1) {
        let x = &pool[(2 * i + 1) * pool.len() / (2 * count.saturating_sub(1).max(1))];
        if !out.contains(x) {
            out.push(x.clone());
        }
    }
    Ok(out)
}

/// For each proposition and policy, the worst starting point's estimate
/// must not fall below the report's lower bound by more than the slack.
pub fn check_bound(
    report: &VerificationReport,
    sys: &SwitchedSystem,
    f: &Formula,
    policies: &[Policy],
    cfg: &CheckConfig,
) -> Result<Vec<McCheckRow>, McError> {
    let mut rows = Vec::new();
    for a in &report.propositions {
        let p = Proposition::new(&a.proposition).map_err(|e| McError::System(SystemError::Formula(e)))?;
        let points = start_points(sys, &p, cfg.points)?;
        for policy in policies {
            let mut worst: Option<Estimate> = None;
            for x0 in &points {
                let e = estimate_satisfaction(sys, f, policy, x0, &cfg.mc)?;
                if worst.as_ref().is_none_or(|w| e.ci_lo < w.ci_lo) {
                    worst = Some(e);
                }
            }
            let Some(e) = worst else { continue };
            rows.push(McCheckRow {
                prop: a.proposition.clone(),
                policy: policy.to_string(),
                n: e.n,
                k: e.k,
                phat: e.phat,
                ci_lo: e.ci_lo,
                ci_hi: e.ci_hi,
                bound: a.lower_satisfaction,
                pass: a.lower_satisfaction <= e.ci_lo + cfg.slack,
            });
        }
    }
    Ok(rows)
}
