//! Barrier-certificate synthesis by counterexample-guided refinement of a
//! sampled linear program, with a cell-based verifier and bound minimization.

mod smtlib;
mod verify;

use std::collections::BTreeSet;
use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::generator::{apply_generator, apply_generator_multi, rational_from_f64, BasisSet, CandidateBarrier};
use crate::lp::{self, LpError, Rows};
use crate::poly::{CompiledPoly, PowerTable, RangeBound};
use crate::sampling;
use crate::system::{Predicate, StateBox, SwitchedSystem};
use crate::RatPoly;

pub use smtlib::{export_smtlib, smtlib_text};
pub use verify::{verify_barrier, Verification};

/// Reachability task: from `source` to `target` inside the compact box `state_space`.
#[derive(Clone, Debug)]
pub struct ReachSpec {
    pub source: Predicate,
    pub target: Predicate,
    pub state_space: StateBox,
    pub horizon: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CegisConfig {
    /// Halton samples drawn from the box and from each region at start-up.
    pub initial_samples: usize,
    /// Points of the tensor grid scanned for counterexamples.
    pub scan_budget: usize,
    /// Points kept per region for sampling and scanning.
    pub region_pool: usize,
    pub multistart: usize,
    pub ascent_steps: usize,
    pub max_iterations: usize,
    /// Counterexamples added to the sample set per iteration.
    pub cex_per_iteration: usize,
    /// Base cells of the verification grid.
    pub verify_base_cells: usize,
    pub verify_max_depth: u32,
    /// Total cell evaluations allowed per constraint family.
    pub verify_cell_budget: usize,
    /// Largest constraint violation tolerated by the verifier.
    pub epsilon: f64,
    /// Bound on the magnitude of each template coefficient.
    pub coeff_bound: f64,
    pub bisection_tol: f64,
    pub bisection_cap: usize,
    pub c_schedule: Vec<f64>,
    /// Golden-section evaluations of `c` after the schedule pass.
    pub c_refine_steps: usize,
}

impl Default for CegisConfig {
    fn default() -> Self {
        CegisConfig {
            initial_samples: 64,
            scan_budget: 4096,
            region_pool: 1024,
            multistart: 6,
            ascent_steps: 25,
            max_iterations: 60,
            cex_per_iteration: 8,
            verify_base_cells: 1024,
            verify_max_depth: 12,
            verify_cell_budget: 400_000,
            epsilon: 1e-4,
            coeff_bound: 1e3,
            bisection_tol: 1e-4,
            bisection_cap: 20,
            c_schedule: vec![0.0, 1e-4, 1e-3, 1e-2, 1e-1, 1.0],
            c_refine_steps: 10,
        }
    }
}

impl CegisConfig {
    /// Small budgets for quick runs and tests.
    pub fn quick() -> Self {
        CegisConfig {
            scan_budget: 1024,
            region_pool: 256,
            max_iterations: 30,
            verify_base_cells: 256,
            verify_cell_budget: 100_000,
            bisection_tol: 1e-3,
            ..Self::default()
        }
    }

    fn cex_tol(&self) -> f64 {
        self.epsilon * 0.1
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Nonnegative,
    Source,
    Target,
    Generator,
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Family::Nonnegative => "B >= 0 on X",
            Family::Source => "B <= gamma on X0",
            Family::Target => "B >= 1 on X1",
            Family::Generator => "DB <= c on X",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CertificateKind {
    Common,
    Multiple,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BasisRecord {
    pub degree: u32,
    pub center: Vec<f64>,
    pub scale: Vec<f64>,
    pub exponents: Vec<Vec<u32>>,
}

impl BasisRecord {
    fn of(basis: &BasisSet) -> Self {
        BasisRecord {
            degree: basis.degree(),
            center: basis.center().to_vec(),
            scale: basis.scale().to_vec(),
            exponents: basis.exponents().iter().map(|m| m.exponents().to_vec()).collect(),
        }
    }

    pub fn basis(&self) -> BasisSet {
        BasisSet::with_normalization(self.center.clone(), self.scale.clone(), self.degree)
    }
}

/// Measured violations and the adjusted parameters they imply.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerificationRecord {
    pub epsilon: f64,
    pub delta_nonnegative: f64,
    pub delta_source: f64,
    pub delta_target: f64,
    pub delta_generator: f64,
    pub gamma_effective: f64,
    pub c_effective: f64,
    pub cells: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BarrierCertificate {
    pub kind: CertificateKind,
    pub basis: BasisRecord,
    /// One coefficient vector for a common certificate, one per mode otherwise.
    pub coefficients: Vec<Vec<f64>>,
    pub gamma: f64,
    pub c: f64,
    pub horizon: f64,
    pub verification: Option<VerificationRecord>,
}

impl BarrierCertificate {
    pub fn is_verified(&self) -> bool {
        self.verification.is_some()
    }

    pub fn candidate(&self) -> CandidateBarrier {
        CandidateBarrier { coefficients: self.coefficients.clone() }
    }

    /// Exact polynomials, one per coefficient vector.
    pub fn polys(&self) -> Vec<RatPoly> {
        self.candidate().polys(&self.basis.basis())
    }

    /// `min(1, gamma + c T)`, using the verifier's adjusted values when present.
    pub fn bound(&self) -> f64 {
        let (g, c) = match &self.verification {
            Some(v) => (v.gamma_effective, v.c_effective),
            None => (self.gamma, self.c),
        };
        (g + c * self.horizon).clamp(0.0, 1.0)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("certificate serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Error, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FailureReason {
    #[error("constraints infeasible on the sample set")]
    Infeasible,
    #[error("iteration budget exhausted")]
    BudgetExhausted,
    #[error("source and target sets intersect")]
    Degenerate,
}

#[derive(Debug, Clone, Error, PartialEq)]
pub enum SynthesisError {
    #[error("synthesis failed: {0}")]
    Failure(FailureReason),
    #[error("multiple certificates need a transition-rate matrix")]
    MissingRates,
    #[error("basis has {basis} variables but the system has {system}")]
    DimensionMismatch { basis: usize, system: usize },
    #[error(transparent)]
    Lp(LpError),
}

/// Sample point with the constraint families imposed at it.
#[derive(Clone, Debug, PartialEq)]
pub struct Sample {
    pub x: Vec<f64>,
    pub source: bool,
    pub target: bool,
}

/// A candidate's violation function `V` (required `V <= 0`) for one family.
pub(crate) struct Check {
    pub family: Family,
    pub mode: usize,
    pub v: RangeBound<f64>,
}

/// Counterexample: a point where a family is violated by `violation > 0`.
#[derive(Clone, Debug, PartialEq)]
pub struct Counterexample {
    pub x: Vec<f64>,
    pub family: Family,
    pub mode: usize,
    pub violation: f64,
}

/// Precomputed data shared by every CEGIS run on one reachability task.
pub struct SynthesisProblem<'a> {
    pub spec: &'a ReachSpec,
    pub sys: &'a SwitchedSystem,
    pub basis: &'a BasisSet,
    pub kind: CertificateKind,
    pub cfg: CegisConfig,
    basis_eval: Vec<CompiledPoly<f64>>,
    /// `gen_eval[m][i]`: generator of basis function `i` along mode `m`.
    gen_eval: Vec<Vec<CompiledPoly<f64>>>,
    degree: u32,
    scan_all: Vec<Vec<f64>>,
    scan_source: Vec<Vec<f64>>,
    scan_target: Vec<Vec<f64>>,
}

impl<'a> SynthesisProblem<'a> {
    pub fn new(
        spec: &'a ReachSpec,
        sys: &'a SwitchedSystem,
        basis: &'a BasisSet,
        kind: CertificateKind,
        cfg: CegisConfig,
    ) -> Result<Self, SynthesisError> {
        if basis.nvars() != sys.dimension() {
            return Err(SynthesisError::DimensionMismatch { basis: basis.nvars(), system: sys.dimension() });
        }
        if kind == CertificateKind::Multiple && sys.rates().is_none() {
            return Err(SynthesisError::MissingRates);
        }
        let basis_eval: Vec<CompiledPoly<f64>> = basis.polys().iter().map(CompiledPoly::new).collect();
        let gen_eval: Vec<Vec<CompiledPoly<f64>>> = sys
            .modes()
            .iter()
            .map(|m| {
                basis
                    .polys()
                    .iter()
                    .map(|b| CompiledPoly::new(&apply_generator(b, m).expect("dimensions checked")))
                    .collect()
            })
            .collect();
        let mut degree = basis_eval.iter().chain(gen_eval.iter().flatten()).map(CompiledPoly::degree).max().unwrap_or(0);
        if let Some(rates) = sys.compiled_rates() {
            degree = degree.max(rates.iter().flatten().map(CompiledPoly::degree).max().unwrap_or(0));
        }
        let sb = &spec.state_space;
        let per_axis = sampling::per_axis_for_budget(sb.dim(), cfg.scan_budget);
        let scan_all = sampling::grid(&sb.lower, &sb.upper, per_axis);
        let scan_source = region_points(&spec.source, sb, &scan_all, cfg.region_pool);
        let scan_target = region_points(&spec.target, sb, &scan_all, cfg.region_pool);
        Ok(SynthesisProblem {
            spec,
            sys,
            basis,
            kind,
            cfg,
            basis_eval,
            gen_eval,
            degree,
            scan_all,
            scan_source,
            scan_target,
        })
    }

    fn copies(&self) -> usize {
        match self.kind {
            CertificateKind::Common => 1,
            CertificateKind::Multiple => self.sys.modes().len(),
        }
    }

    /// True if some sampled point lies in both the source and the target.
    pub fn is_degenerate(&self) -> bool {
        self.scan_source.iter().any(|x| self.spec.target.contains(x))
            || self.scan_target.iter().any(|x| self.spec.source.contains(x))
    }

    pub fn sample_at(&self, x: Vec<f64>) -> Sample {
        let source = self.spec.source.contains(&x);
        let target = self.spec.target.contains(&x);
        Sample { x, source, target }
    }

    /// Halton points in the box plus evenly spaced picks from each region pool.
    pub fn initial_samples(&self) -> Vec<Sample> {
        let sb = &self.spec.state_space;
        let k = self.cfg.initial_samples;
        let mut out: Vec<Sample> = (0..k as u64)
            .map(|i| self.sample_at(sampling::scale_to_box(&sampling::halton(i, sb.dim()), &sb.lower, &sb.upper)))
            .collect();
        for (pool, is_source) in [(&self.scan_source, true), (&self.scan_target, false)] {
            for x in spread_pick(pool, k) {
                let mut s = self.sample_at(x.clone());
                // pool points are region members by construction
                if is_source {
                    s.source = true;
                } else {
                    s.target = true;
                }
                out.push(s);
            }
        }
        out
    }

    fn nvars(&self) -> usize {
        self.copies() * self.basis.len()
    }

    /// Linear rows in the stacked coefficient vector for all samples.
    pub fn rows(&self, samples: &[Sample], gamma: f64, c: f64) -> Rows {
        let k = self.basis.len();
        let copies = self.copies();
        let nv = self.nvars();
        let per_sample: Vec<Vec<(Vec<f64>, f64)>> = samples
            .par_iter()
            .map(|s| {
                let table = PowerTable::new(&s.x, self.degree);
                let b: Vec<f64> = self.basis_eval.iter().map(|p| p.eval_with(&table)).collect();
                let mut rows = Vec::new();
                for m in 0..copies {
                    let mut v = vec![0.0; nv];
                    v[m * k..(m + 1) * k].copy_from_slice(&b);
                    // -B <= 0
                    rows.push((v.iter().map(|c| -c).collect(), 0.0));
                    if s.source {
                        rows.push((v.clone(), gamma));
                    }
                    if s.target {
                        rows.push((v.iter().map(|c| -c).collect(), -1.0));
                    }
                }
                match self.kind {
                    CertificateKind::Common => {
                        for gens in &self.gen_eval {
                            let v: Vec<f64> = gens.iter().map(|p| p.eval_with(&table)).collect();
                            rows.push((v, c));
                        }
                    }
                    CertificateKind::Multiple => {
                        let rates = self.sys.compiled_rates().expect("rates checked");
                        for (m, gens) in self.gen_eval.iter().enumerate() {
                            let mut v = vec![0.0; nv];
                            for (i, p) in gens.iter().enumerate() {
                                v[m * k + i] += p.eval_with(&table);
                            }
                            for (m2, lam) in rates[m].iter().enumerate() {
                                let l = lam.eval_with(&table);
                                if l != 0.0 {
                                    for i in 0..k {
                                        v[m2 * k + i] += l * b[i];
                                    }
                                }
                            }
                            rows.push((v, c));
                        }
                    }
                }
                rows
            })
            .collect();
        let mut rows = Rows::new(nv);
        for (v, rhs) in per_sample.into_iter().flatten() {
            rows.push_le(v, rhs);
        }
        rows
    }

    /// Coefficients satisfying every sampled constraint with the largest
    /// minimum normalized slack.
    pub fn feasibility_solve(&self, samples: &[Sample], gamma: f64, c: f64) -> Result<CandidateBarrier, SynthesisError> {
        let rows = self.rows(samples, gamma, c);
        match lp::max_min_slack(&rows, self.cfg.coeff_bound, 1e-9) {
            Ok(sol) => {
                let k = self.basis.len();
                Ok(CandidateBarrier { coefficients: sol.x.chunks(k).map(<[f64]>::to_vec).collect() })
            }
            Err(LpError::Infeasible) => Err(SynthesisError::Failure(FailureReason::Infeasible)),
            Err(e) => Err(SynthesisError::Lp(e)),
        }
    }

    /// Violation functions of a fixed candidate, one per family and mode.
    pub(crate) fn checks(&self, cand: &CandidateBarrier, gamma: f64, c: f64) -> Vec<Check> {
        let n = self.sys.dimension();
        let bs = cand.polys(self.basis);
        let gamma_r = rational_from_f64(gamma);
        let c_r = rational_from_f64(c);
        let one = RatPoly::one(n);
        let mut out = Vec::new();
        for (m, b) in bs.iter().enumerate() {
            out.push(Check { family: Family::Nonnegative, mode: m, v: RangeBound::new(&-b) });
            out.push(Check {
                family: Family::Source,
                mode: m,
                v: RangeBound::new(&(b - &RatPoly::constant(n, gamma_r.clone()))),
            });
            out.push(Check { family: Family::Target, mode: m, v: RangeBound::new(&(&one - b)) });
        }
        let cpoly = RatPoly::constant(n, c_r);
        for (m, mode) in self.sys.modes().iter().enumerate() {
            let d = match self.kind {
                CertificateKind::Common => apply_generator(&bs[0], mode),
                CertificateKind::Multiple => {
                    apply_generator_multi(&bs, m, self.sys.modes(), self.sys.rates().expect("rates checked"))
                }
            }
            .expect("dimensions checked");
            out.push(Check { family: Family::Generator, mode: m, v: RangeBound::new(&(&d - &cpoly)) });
        }
        out
    }

    fn in_domain(&self, family: Family, x: &[f64]) -> bool {
        match family {
            Family::Nonnegative | Family::Generator => true,
            Family::Source => self.spec.source.contains(x),
            Family::Target => self.spec.target.contains(x),
        }
    }

    fn scan_points(&self, family: Family) -> Vec<&Vec<f64>> {
        match family {
            Family::Nonnegative | Family::Generator => self.scan_all.iter().collect(),
            Family::Source => self.scan_source.iter().collect(),
            Family::Target => self.scan_target.iter().collect(),
        }
    }

    /// Grid scan plus multistart gradient ascent on each violation function.
    /// Returns up to `limit` counterexamples, worst first.
    pub fn find_counterexamples(&self, cand: &CandidateBarrier, gamma: f64, c: f64, limit: usize) -> Vec<Counterexample> {
        let tol = self.cfg.cex_tol();
        let checks = self.checks(cand, gamma, c);
        let per_check: Vec<Vec<Counterexample>> = checks
            .par_iter()
            .map(|chk| {
                let mut hits: Vec<(f64, &Vec<f64>)> = self
                    .scan_points(chk.family)
                    .into_iter()
                    .map(|x| (chk.v.eval(x), x))
                    .filter(|(v, _)| *v > tol)
                    .collect();
                hits.sort_by(|a, b| b.0.total_cmp(&a.0));
                let mut found: Vec<Counterexample> = Vec::new();
                for &(v0, x0) in hits.iter().take(self.cfg.multistart) {
                    let (x, v) = self.ascend(chk, x0.clone(), v0);
                    if found.iter().any(|f| f.x == x) {
                        continue;
                    }
                    found.push(Counterexample { x, family: chk.family, mode: chk.mode, violation: v });
                }
                found
            })
            .collect();
        // round-robin over checks so every violated family is represented
        let mut out = Vec::new();
        let mut idx = 0;
        loop {
            let mut any = false;
            for list in &per_check {
                if let Some(cx) = list.get(idx) {
                    any = true;
                    out.push(cx.clone());
                }
            }
            if !any {
                break;
            }
            idx += 1;
        }
        out.sort_by(|a, b| b.violation.total_cmp(&a.violation));
        out.dedup_by(|a, b| a.x == b.x);
        out.truncate(limit);
        out
    }

    pub fn find_counterexample(&self, cand: &CandidateBarrier, gamma: f64, c: f64) -> Option<Counterexample> {
        self.find_counterexamples(cand, gamma, c, 1).into_iter().next()
    }

    fn ascend(&self, chk: &Check, mut x: Vec<f64>, mut v: f64) -> (Vec<f64>, f64) {
        let sb = &self.spec.state_space;
        let width = sb.half_widths().into_iter().fold(f64::INFINITY, f64::min);
        let mut step = 0.02 * width;
        for _ in 0..self.cfg.ascent_steps {
            let g = chk.v.grad_at(&x);
            let norm = g.iter().map(|t| t * t).sum::<f64>().sqrt();
            if norm < 1e-14 {
                break;
            }
            let mut y: Vec<f64> = x.iter().zip(&g).map(|(xi, gi)| xi + step * gi / norm).collect();
            sb.project(&mut y);
            let vy = chk.v.eval(&y);
            if vy > v && self.in_domain(chk.family, &y) {
                x = y;
                v = vy;
                step *= 1.5;
            } else {
                step *= 0.5;
                if step < 1e-9 * width {
                    break;
                }
            }
        }
        (x, v)
    }

    fn certificate(&self, cand: CandidateBarrier, gamma: f64, c: f64) -> BarrierCertificate {
        BarrierCertificate {
            kind: self.kind,
            basis: BasisRecord::of(self.basis),
            coefficients: cand.coefficients,
            gamma,
            c,
            horizon: self.spec.horizon,
            verification: None,
        }
    }

    /// CEGIS at fixed `(gamma, c)`, growing `samples` in place. Only
    /// certificates accepted by the verifier are returned.
    pub fn cegis_with(&self, samples: &mut Vec<Sample>, gamma: f64, c: f64) -> Result<BarrierCertificate, SynthesisError> {
        for _ in 0..self.cfg.max_iterations {
            let cand = self.feasibility_solve(samples, gamma, c)?;
            let cexs = self.find_counterexamples(&cand, gamma, c, self.cfg.cex_per_iteration);
            let fresh: Vec<Counterexample> = if cexs.is_empty() {
                let cert = self.certificate(cand, gamma, c);
                match verify_barrier(&cert, self) {
                    Verification::Verified(cert) => return Ok(*cert),
                    Verification::CounterexampleFound(cx) => vec![cx],
                }
            } else {
                cexs
            };
            let mut grew = false;
            for cx in fresh {
                grew |= self.add_counterexample(samples, cx);
            }
            if !grew {
                return Err(SynthesisError::Failure(FailureReason::BudgetExhausted));
            }
        }
        Err(SynthesisError::Failure(FailureReason::BudgetExhausted))
    }

    /// Adds the point (or new family tags for a known point); false if nothing changed.
    fn add_counterexample(&self, samples: &mut Vec<Sample>, cx: Counterexample) -> bool {
        let mut s = self.sample_at(cx.x);
        match cx.family {
            Family::Source => s.source = true,
            Family::Target => s.target = true,
            _ => {}
        }
        match samples.iter_mut().find(|t| t.x == s.x) {
            Some(t) => {
                let changed = (s.source && !t.source) || (s.target && !t.target);
                t.source |= s.source;
                t.target |= s.target;
                changed
            }
            None => {
                samples.push(s);
                true
            }
        }
    }

    pub fn cegis(&self, gamma: f64, c: f64) -> Result<BarrierCertificate, SynthesisError> {
        let mut samples = self.initial_samples();
        self.cegis_with(&mut samples, gamma, c)
    }

    /// Smallest `gamma` (by bisection) admitting a verified certificate at this `c`.
    fn best_for_c(&self, samples: &mut Vec<Sample>, c: f64) -> Result<BarrierCertificate, SynthesisError> {
        let mut found = self.cegis_with(samples, 1.0, c)?;
        let (mut lo, mut hi) = (0.0, 1.0);
        for _ in 0..self.cfg.bisection_cap {
            if hi - lo <= self.cfg.bisection_tol {
                break;
            }
            let mid = 0.5 * (lo + hi);
            match self.cegis_with(samples, mid, c) {
                Ok(cert) => {
                    hi = mid;
                    found = cert;
                }
                Err(SynthesisError::Failure(_)) => lo = mid,
                Err(e) => return Err(e),
            }
        }
        Ok(found)
    }

    /// Nested search: each `c` on the schedule with bisection on `gamma`,
    /// then golden-section refinement of `c` between the neighbours of the
    /// best schedule point. Returns the certificate with the smallest bound.
    pub fn minimize_bound(&self) -> Result<BarrierCertificate, SynthesisError> {
        if self.is_degenerate() {
            return Err(SynthesisError::Failure(FailureReason::Degenerate));
        }
        let t = self.spec.horizon;
        let mut samples = self.initial_samples();
        let mut best: Option<BarrierCertificate> = None;
        let mut best_idx = 0;
        let mut last_err = SynthesisError::Failure(FailureReason::Infeasible);
        let schedule = &self.cfg.c_schedule;
        for (idx, &c) in schedule.iter().enumerate() {
            if best.as_ref().is_some_and(|b| c * t >= b.bound()) {
                continue;
            }
            match self.best_for_c(&mut samples, c) {
                Ok(found) => {
                    if best.as_ref().is_none_or(|b| found.bound() < b.bound()) {
                        best = Some(found);
                        best_idx = idx;
                    }
                }
                Err(e @ SynthesisError::Failure(_)) => last_err = e,
                Err(e) => return Err(e),
            }
        }
        let Some(mut best) = best else { return Err(last_err) };
        if self.cfg.c_refine_steps == 0 || schedule.len() < 2 {
            return Ok(best);
        }
        let mut lo = schedule[best_idx.saturating_sub(1)];
        let mut hi = schedule[(best_idx + 1).min(schedule.len() - 1)];
        let mut eval = |c: f64, best: &mut BarrierCertificate| -> Result<f64, SynthesisError> {
            if c * t >= best.bound() {
                return Ok(c * t);
            }
            match self.best_for_c(&mut samples, c) {
                Ok(found) => {
                    let b = found.bound();
                    if b < best.bound() {
                        *best = found;
                    }
                    Ok(b)
                }
                Err(SynthesisError::Failure(_)) => Ok(f64::INFINITY),
                Err(e) => Err(e),
            }
        };
        let ratio = 0.5 * (5f64.sqrt() - 1.0);
        let mut c1 = hi - ratio * (hi - lo);
        let mut c2 = lo + ratio * (hi - lo);
        let mut f1 = eval(c1, &mut best)?;
        let mut f2 = eval(c2, &mut best)?;
        for _ in 2..self.cfg.c_refine_steps {
            if f1 <= f2 {
                hi = c2;
                c2 = c1;
                f2 = f1;
                c1 = hi - ratio * (hi - lo);
                f1 = eval(c1, &mut best)?;
            } else {
                lo = c1;
                c1 = c2;
                f1 = f2;
                c2 = lo + ratio * (hi - lo);
                f2 = eval(c2, &mut best)?;
            }
        }
        Ok(best)
    }
}

/// Points of `pred` inside the box: grid points that satisfy it, topped up
/// with Halton points drawn from the hull of grid cells that may meet it.
pub fn region_points(pred: &Predicate, sb: &StateBox, grid: &[Vec<f64>], limit: usize) -> Vec<Vec<f64>> {
    let mut pts: Vec<Vec<f64>> = grid.iter().filter(|x| pred.contains(x)).cloned().collect();
    if pts.len() < limit {
        let n = sb.dim();
        let per_axis = sampling::per_axis_for_budget(n, 4096);
        let cells = verify::base_cells(sb, per_axis);
        let mut lo = vec![f64::INFINITY; n];
        let mut hi = vec![f64::NEG_INFINITY; n];
        for cell in cells.iter().filter(|c| pred.may_intersect(c)) {
            for d in 0..n {
                lo[d] = lo[d].min(cell[d].lo);
                hi[d] = hi[d].max(cell[d].hi);
            }
        }
        if lo.iter().zip(&hi).all(|(l, h)| l < h) {
            let want = limit - pts.len();
            let mut i = 0u64;
            let mut got = 0;
            while got < want && i < 50 * limit as u64 {
                let x = sampling::scale_to_box(&sampling::halton(i, n), &lo, &hi);
                i += 1;
                if pred.contains(&x) {
                    pts.push(x);
                    got += 1;
                }
            }
        }
    }
    spread_pick(&pts, limit)
}

/// At most `k` evenly spaced elements, in order.
fn spread_pick(pts: &[Vec<f64>], k: usize) -> Vec<Vec<f64>> {
    if pts.len() <= k {
        return pts.to_vec();
    }
    (0..k).map(|i| pts[i * pts.len() / k].clone()).collect()
}


/// Common certificate at fixed `(gamma, c)`.
pub fn cegis(
    spec: &ReachSpec,
    sys: &SwitchedSystem,
    basis: &BasisSet,
    gamma: f64,
    c: f64,
    cfg: &CegisConfig,
) -> Result<BarrierCertificate, SynthesisError> {
    SynthesisProblem::new(spec, sys, basis, CertificateKind::Common, cfg.clone())?.cegis(gamma, c)
}

/// Per-mode certificates coupled through the rate matrix, at fixed `(gamma, c)`.
pub fn cegis_multiple(
    spec: &ReachSpec,
    sys: &SwitchedSystem,
    basis: &BasisSet,
    gamma: f64,
    c: f64,
    cfg: &CegisConfig,
) -> Result<BarrierCertificate, SynthesisError> {
    SynthesisProblem::new(spec, sys, basis, CertificateKind::Multiple, cfg.clone())?.cegis(gamma, c)
}

pub fn minimize_bound(
    spec: &ReachSpec,
    sys: &SwitchedSystem,
    basis: &BasisSet,
    kind: CertificateKind,
    cfg: &CegisConfig,
) -> Result<BarrierCertificate, SynthesisError> {
    SynthesisProblem::new(spec, sys, basis, kind, cfg.clone())?.minimize_bound()
}

/// Reachability task between the regions labelled by two proposition sets.
pub fn reach_spec(
    sys: &SwitchedSystem,
    source: &BTreeSet<crate::ltl::Proposition>,
    target: &BTreeSet<crate::ltl::Proposition>,
) -> Result<ReachSpec, crate::system::SystemError> {
    Ok(ReachSpec {
        source: sys.region_of(source)?,
        target: sys.region_of(target)?,
        state_space: sys.state_space().clone(),
        horizon: sys.horizon(),
    })
}
