//! Switched stochastic systems: polynomial modes, labelled regions, optional
//! transition rates, and the JSON problem file that carries them.

use std::collections::BTreeSet;
use std::fmt;
use std::path::Path;

use serde::Deserialize;
use thiserror::Error;

use crate::interval::Interval;
use crate::ltl::{Formula, FormulaError, Proposition};
use crate::poly::{CompiledPoly, PolyParseError, PowerTable, RangeBound};
use crate::sampling;
use crate::RatPoly;

/// Grid budget used when checking that regions do not overlap.
pub const OVERLAP_GRID_BUDGET: usize = 40_000;

#[derive(Debug, Error)]
pub enum SystemError {
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("schema error: {0}")]
    Schema(String),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("region for '{0}' is unbounded")]
    UnboundedRegion(String),
    #[error("regions '{first}' and '{second}' overlap near {point:?}")]
    OverlappingRegions { first: String, second: String, point: Vec<f64> },
    #[error("invalid rate matrix: {0}")]
    BadRateMatrix(String),
    #[error("in {context}: {source}")]
    Polynomial { context: String, source: PolyParseError },
    #[error(transparent)]
    Formula(#[from] FormulaError),
    #[error("point {0:?} lies outside the state space")]
    OutOfStateSpace(Vec<f64>),
    #[error("unknown proposition '{0}'")]
    UnknownProposition(String),
    #[error("empty proposition set")]
    EmptyPropositionSet,
}

#[derive(Deserialize)]
struct SystemFile {
    dimension: usize,
    noise_dimension: usize,
    state_space: BoxFile,
    modes: Vec<ModeFile>,
    regions: Vec<RegionFile>,
    complement_prop: String,
    horizon: f64,
    #[serde(default)]
    rates: Option<Vec<Vec<String>>>,
    formula: String,
}

#[derive(Deserialize)]
struct BoxFile {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

#[derive(Deserialize)]
struct ModeFile {
    id: serde_json::Value,
    drift: Vec<String>,
    diffusion: Vec<Vec<String>>,
}

#[derive(Deserialize)]
struct RegionFile {
    prop: String,
    inequalities: Vec<String>,
}

/// Compact axis-aligned state space.
#[derive(Clone, Debug, PartialEq)]
pub struct StateBox {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl StateBox {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Self {
        assert_eq!(lower.len(), upper.len());
        StateBox { lower, upper }
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.iter().zip(self.lower.iter().zip(&self.upper)).all(|(v, (lo, hi))| lo <= v && v <= hi)
    }

    pub fn interior_contains(&self, x: &[f64]) -> bool {
        x.iter().zip(self.lower.iter().zip(&self.upper)).all(|(v, (lo, hi))| lo < v && v < hi)
    }

    /// Nearest point of the box.
    pub fn project(&self, x: &mut [f64]) {
        for (v, (lo, hi)) in x.iter_mut().zip(self.lower.iter().zip(&self.upper)) {
            *v = v.clamp(*lo, *hi);
        }
    }

    pub fn intervals(&self) -> Vec<Interval<f64>> {
        self.lower.iter().zip(&self.upper).map(|(&l, &u)| Interval::new(l, u)).collect()
    }

    pub fn center(&self) -> Vec<f64> {
        self.lower.iter().zip(&self.upper).map(|(l, u)| 0.5 * (l + u)).collect()
    }

    pub fn half_widths(&self) -> Vec<f64> {
        self.lower.iter().zip(&self.upper).map(|(l, u)| 0.5 * (u - l)).collect()
    }
}

/// Conjunction `h_j(x) <= 0` of polynomial inequalities.
#[derive(Clone, Debug)]
pub struct BasicSet {
    inequalities: Vec<RatPoly>,
    compiled: Vec<RangeBound<f64>>,
}

impl BasicSet {
    pub fn new(inequalities: Vec<RatPoly>) -> Self {
        let compiled = inequalities.iter().map(RangeBound::new).collect();
        BasicSet { inequalities, compiled }
    }

    pub fn inequalities(&self) -> &[RatPoly] {
        &self.inequalities
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        self.compiled.iter().all(|h| h.eval(x) <= 0.0)
    }

    /// Strict interior test, `h_j(x) < -tol` for all `j`.
    pub fn interior_contains(&self, x: &[f64], tol: f64) -> bool {
        self.compiled.iter().all(|h| h.eval(x) < -tol)
    }

    /// False only if the cell provably misses the set.
    pub fn may_intersect(&self, cell: &[Interval<f64>]) -> bool {
        self.compiled.iter().all(|h| h.range(cell).lo <= 0.0)
    }

    /// True only if the whole cell provably lies in the set.
    pub fn covers(&self, cell: &[Interval<f64>]) -> bool {
        self.compiled.iter().all(|h| h.range(cell).hi <= 0.0)
    }

    pub fn bounds(&self) -> &[RangeBound<f64>] {
        &self.compiled
    }
}

/// How a predicate meets a cell: either the constraint must hold on the
/// whole cell, or only where a single inequality `g <= 0` holds.
#[derive(Clone, Copy, Debug)]
pub enum CellPiece<'a> {
    Unconstrained,
    /// `g` is the inequality, negated when `negate` (complement members).
    Active { g: &'a RangeBound<f64>, negate: bool },
}

/// Member of a union predicate.
#[derive(Clone, Debug)]
pub enum SetMember {
    Basic(BasicSet),
    /// Points of the state space outside every listed set.
    Complement(Vec<BasicSet>),
}

impl SetMember {
    fn contains(&self, x: &[f64]) -> bool {
        match self {
            SetMember::Basic(b) => b.contains(x),
            SetMember::Complement(others) => !others.iter().any(|b| b.contains(x)),
        }
    }

    fn may_intersect(&self, cell: &[Interval<f64>]) -> bool {
        match self {
            SetMember::Basic(b) => b.may_intersect(cell),
            SetMember::Complement(others) => !others.iter().any(|b| b.covers(cell)),
        }
    }

    fn piece<'a>(&'a self, cell: &[Interval<f64>]) -> Option<CellPiece<'a>> {
        match self {
            SetMember::Basic(b) => {
                let mut straddling = Vec::new();
                for h in b.bounds() {
                    let r = h.range(cell);
                    if r.lo > 0.0 {
                        return None;
                    }
                    if r.hi > 0.0 {
                        straddling.push(h);
                    }
                }
                Some(match straddling.as_slice() {
                    [g] => CellPiece::Active { g, negate: false },
                    _ => CellPiece::Unconstrained,
                })
            }
            SetMember::Complement(others) => {
                let mut active = Vec::new();
                for b in others {
                    if b.covers(cell) {
                        return None;
                    }
                    if b.may_intersect(cell) {
                        active.push(b);
                    }
                }
                Some(match active.as_slice() {
                    [b] if b.bounds().len() == 1 => CellPiece::Active { g: &b.bounds()[0], negate: true },
                    _ => CellPiece::Unconstrained,
                })
            }
        }
    }
}

/// Union of regions, restricted to the state space by the caller.
#[derive(Clone, Debug)]
pub struct Predicate {
    props: BTreeSet<Proposition>,
    members: Vec<SetMember>,
}

impl Predicate {
    pub fn new(props: BTreeSet<Proposition>, members: Vec<SetMember>) -> Self {
        Predicate { props, members }
    }

    /// Single semi-algebraic set `{x : h_j(x) <= 0}`.
    pub fn basic(inequalities: Vec<RatPoly>) -> Self {
        Predicate { props: BTreeSet::new(), members: vec![SetMember::Basic(BasicSet::new(inequalities))] }
    }

    /// Parse a single set from inequality strings over `nvars` variables.
    pub fn parse_basic(inequalities: &[&str], nvars: usize) -> Result<Self, PolyParseError> {
        let polys = inequalities.iter().map(|s| RatPoly::parse(s, nvars)).collect::<Result<Vec<_>, _>>()?;
        Ok(Predicate::basic(polys))
    }

    pub fn props(&self) -> &BTreeSet<Proposition> {
        &self.props
    }

    pub fn members(&self) -> &[SetMember] {
        &self.members
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        self.members.iter().any(|m| m.contains(x))
    }

    pub fn may_intersect(&self, cell: &[Interval<f64>]) -> bool {
        self.members.iter().any(|m| m.may_intersect(cell))
    }

    /// Pieces of the predicate that may meet `cell`; empty if it provably misses.
    pub fn cell_pieces(&self, cell: &[Interval<f64>]) -> Vec<CellPiece<'_>> {
        self.members.iter().filter_map(|m| m.piece(cell)).collect()
    }
}

#[derive(Clone, Debug)]
pub struct Mode {
    pub id: String,
    pub drift: Vec<RatPoly>,
    /// `n x r` diffusion matrix.
    pub diffusion: Vec<Vec<RatPoly>>,
}

/// Float copy of a mode for simulation.
#[derive(Clone, Debug)]
pub struct CompiledMode {
    pub drift: Vec<CompiledPoly<f64>>,
    pub diffusion: Vec<Vec<CompiledPoly<f64>>>,
    pub degree: u32,
}

impl CompiledMode {
    fn new(m: &Mode) -> Self {
        let drift: Vec<CompiledPoly<f64>> = m.drift.iter().map(CompiledPoly::new).collect();
        let diffusion: Vec<Vec<CompiledPoly<f64>>> =
            m.diffusion.iter().map(|row| row.iter().map(CompiledPoly::new).collect()).collect();
        let degree = drift
            .iter()
            .chain(diffusion.iter().flatten())
            .map(CompiledPoly::degree)
            .max()
            .unwrap_or(0);
        CompiledMode { drift, diffusion, degree }
    }

    pub fn drift_at(&self, table: &PowerTable<f64>, out: &mut [f64]) {
        for (o, f) in out.iter_mut().zip(&self.drift) {
            *o = f.eval_with(table);
        }
    }

    pub fn diffusion_at(&self, table: &PowerTable<f64>, row: usize, col: usize) -> f64 {
        self.diffusion[row][col].eval_with(table)
    }
}

#[derive(Clone, Debug)]
pub struct Region {
    pub prop: Proposition,
    pub set: BasicSet,
}

#[derive(Clone, Debug)]
pub struct SwitchedSystem {
    dimension: usize,
    noise_dimension: usize,
    state_space: StateBox,
    modes: Vec<Mode>,
    compiled: Vec<CompiledMode>,
    regions: Vec<Region>,
    complement: Proposition,
    horizon: f64,
    rates: Option<Vec<Vec<RatPoly>>>,
    compiled_rates: Option<Vec<Vec<CompiledPoly<f64>>>>,
    formula: Formula,
}

impl SwitchedSystem {
    pub fn load(path: impl AsRef<Path>) -> Result<Self, SystemError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|source| SystemError::Io { path: path.display().to_string(), source })?;
        Self::from_json(&text)
    }

    pub fn from_json(text: &str) -> Result<Self, SystemError> {
        let file: SystemFile = serde_json::from_str(text).map_err(|e| SystemError::Schema(e.to_string()))?;
        Self::build(file)
    }

    fn build(file: SystemFile) -> Result<Self, SystemError> {
        let n = file.dimension;
        let r = file.noise_dimension;
        if n == 0 {
            return Err(SystemError::Schema("dimension must be positive".into()));
        }
        if n > 16 {
            return Err(SystemError::Schema("at most 16 state variables are supported".into()));
        }
        if file.state_space.lower.len() != n || file.state_space.upper.len() != n {
            return Err(SystemError::DimensionMismatch(format!(
                "state_space bounds have {} and {} entries, expected {n}",
                file.state_space.lower.len(),
                file.state_space.upper.len()
            )));
        }
        for (lo, hi) in file.state_space.lower.iter().zip(&file.state_space.upper) {
            if !lo.is_finite() || !hi.is_finite() {
                return Err(SystemError::UnboundedRegion("state space".into()));
            }
            if lo >= hi {
                return Err(SystemError::Schema(format!("empty state-space interval [{lo}, {hi}]")));
            }
        }
        if !(file.horizon.is_finite() && file.horizon > 0.0) {
            return Err(SystemError::Schema("horizon must be positive".into()));
        }
        if file.modes.is_empty() {
            return Err(SystemError::Schema("at least one mode is required".into()));
        }

        let parse = |s: &str, context: String| {
            RatPoly::parse(s, n).map_err(|source| SystemError::Polynomial { context, source })
        };

        let mut modes = Vec::with_capacity(file.modes.len());
        for (k, m) in file.modes.iter().enumerate() {
            let id = match &m.id {
                serde_json::Value::String(s) => s.clone(),
                serde_json::Value::Number(v) => v.to_string(),
                other => return Err(SystemError::Schema(format!("mode id {other} is not a string or number"))),
            };
            if m.drift.len() != n {
                return Err(SystemError::DimensionMismatch(format!(
                    "mode {id}: drift has {} entries, expected {n}",
                    m.drift.len()
                )));
            }
            if m.diffusion.len() != n || m.diffusion.iter().any(|row| row.len() != r) {
                return Err(SystemError::DimensionMismatch(format!("mode {id}: diffusion must be {n}x{r}")));
            }
            let drift = m
                .drift
                .iter()
                .enumerate()
                .map(|(i, s)| parse(s, format!("mode {id} drift[{i}]")))
                .collect::<Result<Vec<_>, _>>()?;
            let diffusion = m
                .diffusion
                .iter()
                .enumerate()
                .map(|(i, row)| {
                    row.iter()
                        .enumerate()
                        .map(|(j, s)| parse(s, format!("mode {id} diffusion[{i}][{j}]")))
                        .collect::<Result<Vec<_>, _>>()
                })
                .collect::<Result<Vec<_>, _>>()?;
            if modes.iter().any(|prev: &Mode| prev.id == id) {
                return Err(SystemError::Schema(format!("duplicate mode id {id} (mode #{k})")));
            }
            modes.push(Mode { id, drift, diffusion });
        }

        let complement = Proposition::new(&file.complement_prop)?;
        let mut seen = BTreeSet::from([complement.clone()]);
        let mut regions = Vec::with_capacity(file.regions.len());
        for reg in &file.regions {
            let prop = Proposition::new(&reg.prop)?;
            if !seen.insert(prop.clone()) {
                return Err(SystemError::Schema(format!("proposition '{prop}' declared twice")));
            }
            if reg.inequalities.is_empty() {
                return Err(SystemError::UnboundedRegion(prop.to_string()));
            }
            let polys = reg
                .inequalities
                .iter()
                .enumerate()
                .map(|(j, s)| parse(s, format!("region {prop} inequality {j}")))
                .collect::<Result<Vec<_>, _>>()?;
            regions.push(Region { prop, set: BasicSet::new(polys) });
        }

        let rates = match &file.rates {
            None => None,
            Some(rows) => {
                let m = modes.len();
                if rows.len() != m || rows.iter().any(|row| row.len() != m) {
                    return Err(SystemError::BadRateMatrix(format!("expected a {m}x{m} matrix")));
                }
                let parsed = rows
                    .iter()
                    .enumerate()
                    .map(|(i, row)| {
                        row.iter()
                            .enumerate()
                            .map(|(j, s)| parse(s, format!("rates[{i}][{j}]")))
                            .collect::<Result<Vec<_>, _>>()
                    })
                    .collect::<Result<Vec<_>, _>>()?;
                Some(parsed)
            }
        };

        let formula = Formula::parse(&file.formula)?;

        let compiled = modes.iter().map(CompiledMode::new).collect();
        let compiled_rates = rates
            .as_ref()
            .map(|rows: &Vec<Vec<RatPoly>>| rows.iter().map(|row| row.iter().map(CompiledPoly::new).collect()).collect());
        let sys = SwitchedSystem {
            dimension: n,
            noise_dimension: r,
            state_space: StateBox::new(file.state_space.lower, file.state_space.upper),
            modes,
            compiled,
            regions,
            complement,
            horizon: file.horizon,
            rates,
            compiled_rates,
            formula,
        };
        sys.check_formula_props()?;
        sys.check_overlaps(OVERLAP_GRID_BUDGET)?;
        sys.check_rates()?;
        Ok(sys)
    }

    fn check_formula_props(&self) -> Result<(), SystemError> {
        let props: BTreeSet<Proposition> = self.propositions().into_iter().collect();
        match self.formula.atoms().into_iter().find(|p| !props.contains(p)) {
            Some(p) => Err(SystemError::UnknownProposition(p.to_string())),
            None => Ok(()),
        }
    }

    /// Grid scan of the state space for points strictly inside two regions.
    pub fn check_overlaps(&self, budget: usize) -> Result<(), SystemError> {
        if self.regions.len() < 2 {
            return Ok(());
        }
        let per_axis = sampling::per_axis_for_budget(self.dimension, budget);
        let tol = 1e-12;
        for x in sampling::grid(&self.state_space.lower, &self.state_space.upper, per_axis) {
            let mut hit: Option<&Region> = None;
            for reg in &self.regions {
                if reg.set.interior_contains(&x, tol) {
                    if let Some(first) = hit {
                        return Err(SystemError::OverlappingRegions {
                            first: first.prop.to_string(),
                            second: reg.prop.to_string(),
                            point: x,
                        });
                    }
                    hit = Some(reg);
                }
            }
        }
        Ok(())
    }

    fn check_rates(&self) -> Result<(), SystemError> {
        let Some(rates) = &self.rates else { return Ok(()) };
        for (i, row) in rates.iter().enumerate() {
            let sum = row.iter().fold(RatPoly::zero(self.dimension), |acc, p| &acc + p);
            if !sum.is_zero() {
                return Err(SystemError::BadRateMatrix(format!("row {i} sums to {sum}, not 0")));
            }
        }
        let compiled = self.compiled_rates.as_ref().expect("compiled with rates");
        let per_axis = sampling::per_axis_for_budget(self.dimension, 10_000);
        for x in sampling::grid(&self.state_space.lower, &self.state_space.upper, per_axis) {
            for (i, row) in compiled.iter().enumerate() {
                for (j, rate) in row.iter().enumerate() {
                    if i != j && rate.eval(&x) < -1e-12 {
                        return Err(SystemError::BadRateMatrix(format!("rates[{i}][{j}] is negative at {x:?}")));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn noise_dimension(&self) -> usize {
        self.noise_dimension
    }

    pub fn state_space(&self) -> &StateBox {
        &self.state_space
    }

    pub fn modes(&self) -> &[Mode] {
        &self.modes
    }

    pub fn compiled_modes(&self) -> &[CompiledMode] {
        &self.compiled
    }

    pub fn regions(&self) -> &[Region] {
        &self.regions
    }

    pub fn complement_prop(&self) -> &Proposition {
        &self.complement
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn set_horizon(&mut self, t: f64) {
        assert!(t > 0.0 && t.is_finite(), "horizon must be positive");
        self.horizon = t;
    }

    pub fn rates(&self) -> Option<&[Vec<RatPoly>]> {
        self.rates.as_deref()
    }

    pub fn compiled_rates(&self) -> Option<&[Vec<CompiledPoly<f64>>]> {
        self.compiled_rates.as_deref()
    }

    pub fn formula(&self) -> &Formula {
        &self.formula
    }

    /// Propositions in declaration order, complement last.
    pub fn propositions(&self) -> Vec<Proposition> {
        let mut out: Vec<Proposition> = self.regions.iter().map(|r| r.prop.clone()).collect();
        out.push(self.complement.clone());
        out
    }

    /// Label of a state: first declared region containing it, else the
    /// complement proposition.
    pub fn label(&self, x: &[f64]) -> Result<&Proposition, SystemError> {
        if x.len() != self.dimension {
            return Err(SystemError::DimensionMismatch(format!("point has {} coordinates", x.len())));
        }
        if !self.state_space.contains(x) {
            return Err(SystemError::OutOfStateSpace(x.to_vec()));
        }
        Ok(self.label_unchecked(x))
    }

    /// Label without the state-space check.
    pub fn label_unchecked(&self, x: &[f64]) -> &Proposition {
        self.regions
            .iter()
            .find(|r| r.set.contains(x))
            .map(|r| &r.prop)
            .unwrap_or(&self.complement)
    }

    /// Union of the regions labelled by `props`.
    pub fn region_of(&self, props: &BTreeSet<Proposition>) -> Result<Predicate, SystemError> {
        if props.is_empty() {
            return Err(SystemError::EmptyPropositionSet);
        }
        let mut members = Vec::new();
        for p in props {
            if *p == self.complement {
                members.push(SetMember::Complement(self.regions.iter().map(|r| r.set.clone()).collect()));
            } else {
                let reg = self
                    .regions
                    .iter()
                    .find(|r| r.prop == *p)
                    .ok_or_else(|| SystemError::UnknownProposition(p.to_string()))?;
                members.push(SetMember::Basic(reg.set.clone()));
            }
        }
        Ok(Predicate::new(props.clone(), members))
    }
}

impl fmt::Display for SwitchedSystem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "n = {}, r = {}, modes = {}", self.dimension, self.noise_dimension, self.modes.len())?;
        for m in &self.modes {
            let drift: Vec<String> = m.drift.iter().map(ToString::to_string).collect();
            writeln!(f, "  mode {}: f = ({})", m.id, drift.join(", "))?;
        }
        for r in &self.regions {
            let ineq: Vec<String> = r.set.inequalities().iter().map(|h| format!("{h} <= 0")).collect();
            writeln!(f, "  {}: {}", r.prop, ineq.join(" & "))?;
        }
        write!(f, "  {}: elsewhere", self.complement)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const EXAMPLE: &str = r#"{
        "dimension": 2,
        "noise_dimension": 2,
        "state_space": {"lower": [-8, -8], "upper": [8, 8]},
        "modes": [
            {"id": 1, "drift": ["-0.1*x2^2", "-0.1*x1*x2"], "diffusion": [["1","0"],["0","1"]]},
            {"id": 2, "drift": ["-0.1*x1^2", "-0.1*x1*x2"], "diffusion": [["1","0"],["0","1"]]}
        ],
        "regions": [
            {"prop": "p0", "inequalities": ["(x1+5)^2 + x2^2 - 2.5"]},
            {"prop": "p1", "inequalities": ["(x1-5)^2 + (x2-5)^2 - 3"]},
            {"prop": "p2", "inequalities": ["(x1-4)^2 + (x2+3)^2 - 2"]}
        ],
        "complement_prop": "p3",
        "horizon": 10,
        "formula": "(p0 & (G !p1 | G !p2)) | (p2 & G !p1)"
    }"#;

    fn p(name: &str) -> Proposition {
        Proposition::new(name).unwrap()
    }

    #[test]
    fn loads_two_mode_example() {
        let sys = SwitchedSystem::from_json(EXAMPLE).unwrap();
        assert_eq!(sys.dimension(), 2);
        assert_eq!(sys.noise_dimension(), 2);
        assert_eq!(sys.modes().len(), 2);
        assert_eq!(sys.modes()[0].id, "1");
        assert_eq!(sys.regions()[0].set.inequalities()[0].to_string(), "x1^2 + x2^2 + 10*x1 + 45/2");
    }

    #[test]
    fn labels() {
        let sys = SwitchedSystem::from_json(EXAMPLE).unwrap();
        assert_eq!(sys.label(&[-5.0, 0.0]).unwrap(), &p("p0"));
        assert_eq!(sys.label(&[0.0, 0.0]).unwrap(), &p("p3"));
        assert_eq!(sys.label(&[5.0, 5.0]).unwrap(), &p("p1"));
        assert_eq!(sys.label(&[4.0, -3.0]).unwrap(), &p("p2"));
        assert!(matches!(sys.label(&[9.0, 0.0]), Err(SystemError::OutOfStateSpace(_))));
    }

    #[test]
    fn region_union() {
        let sys = SwitchedSystem::from_json(EXAMPLE).unwrap();
        let u = sys.region_of(&BTreeSet::from([p("p1"), p("p2")])).unwrap();
        assert!(u.contains(&[5.0, 5.0]));
        assert!(u.contains(&[4.0, -3.0]));
        assert!(!u.contains(&[-5.0, 0.0]));
        let c = sys.region_of(&BTreeSet::from([p("p3")])).unwrap();
        assert!(c.contains(&[0.0, 0.0]));
        assert!(!c.contains(&[5.0, 5.0]));
        assert!(matches!(sys.region_of(&BTreeSet::new()), Err(SystemError::EmptyPropositionSet)));
        assert!(matches!(
            sys.region_of(&BTreeSet::from([p("p9")])),
            Err(SystemError::UnknownProposition(_))
        ));
    }

    #[test]
    fn cell_classification() {
        let sys = SwitchedSystem::from_json(EXAMPLE).unwrap();
        let x1 = sys.region_of(&BTreeSet::from([p("p1")])).unwrap();
        let far = [Interval::new(-8.0, -7.0), Interval::new(-8.0, -7.0)];
        assert!(!x1.may_intersect(&far));
        let near = [Interval::new(4.9, 5.1), Interval::new(4.9, 5.1)];
        assert!(x1.may_intersect(&near));
        let rest = sys.region_of(&BTreeSet::from([p("p3")])).unwrap();
        assert!(!rest.may_intersect(&near));
        assert!(rest.may_intersect(&far));
    }

    #[test]
    fn overlapping_disks_rejected() {
        let bad = EXAMPLE.replace("(x1-5)^2 + (x2-5)^2 - 3", "(x1+4)^2 + x2^2 - 3");
        assert!(matches!(SwitchedSystem::from_json(&bad), Err(SystemError::OverlappingRegions { .. })));
    }

    #[test]
    fn schema_and_dimension_errors() {
        let missing = EXAMPLE.replace("\"horizon\": 10,", "");
        assert!(matches!(SwitchedSystem::from_json(&missing), Err(SystemError::Schema(_))));
        let short = EXAMPLE.replace("[\"-0.1*x2^2\", \"-0.1*x1*x2\"]", "[\"-0.1*x2^2\"]");
        assert!(matches!(SwitchedSystem::from_json(&short), Err(SystemError::DimensionMismatch(_))));
        let open = EXAMPLE.replace("[\"(x1+5)^2 + x2^2 - 2.5\"]", "[]");
        assert!(matches!(SwitchedSystem::from_json(&open), Err(SystemError::UnboundedRegion(_))));
        let next = EXAMPLE.replace("G !p1 | G", "X p1 | G");
        assert!(matches!(SwitchedSystem::from_json(&next), Err(SystemError::Formula(_))));
        let poly = EXAMPLE.replace("-0.1*x2^2", "-0.1*y2^2");
        assert!(matches!(SwitchedSystem::from_json(&poly), Err(SystemError::Polynomial { .. })));
    }

    #[test]
    fn rate_matrix_checks() {
        let with = |rates: &str| EXAMPLE.replace("\"horizon\": 10,", &format!("\"horizon\": 10, \"rates\": {rates},"));
        let ok = SwitchedSystem::from_json(&with(r#"[["-1", "1"], ["0.5 + 0.01*x1^2", "-0.5 - 0.01*x1^2"]]"#)).unwrap();
        assert!(ok.rates().is_some());
        for bad in [
            r#"[["-1", "1"], ["1", "-2"]]"#,
            r#"[["1", "-1"], ["0", "0"]]"#,
            r#"[["-1", "1"]]"#,
        ] {
            assert!(matches!(SwitchedSystem::from_json(&with(bad)), Err(SystemError::BadRateMatrix(_))), "{bad}");
        }
    }

    #[test]
    fn dense_grid_partition_is_total() {
        let sys = SwitchedSystem::from_json(EXAMPLE).unwrap();
        let pts = sampling::grid(&sys.state_space().lower, &sys.state_space().upper, 101);
        assert!(pts.len() >= 10_000);
        for x in pts {
            let hits = sys.regions().iter().filter(|r| r.set.contains(&x)).count();
            assert!(hits <= 1);
            assert!(sys.label(&x).is_ok());
        }
    }
}
