use rayon::prelude::*;

use super::{BarrierCertificate, Check, Counterexample, Family, SynthesisProblem, VerificationRecord};
use crate::interval::Interval;
use crate::poly::RangeBound;
use crate::sampling;
use crate::system::{CellPiece, StateBox};

/// Added to every measured violation to absorb rounding in the enclosures.
const PAD: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq)]
pub enum Verification {
    /// The certificate with its verification record filled in.
    Verified(Box<BarrierCertificate>),
    /// A cell at maximum depth whose enclosure still exceeds the tolerance.
    CounterexampleFound(Counterexample),
}

impl Verification {
    pub fn is_verified(&self) -> bool {
        matches!(self, Verification::Verified(_))
    }
}

pub(crate) fn base_cells(sb: &StateBox, per_axis: usize) -> Vec<Vec<Interval<f64>>> {
    let n = sb.dim();
    let total = per_axis.pow(n as u32);
    let mut out = Vec::with_capacity(total);
    let mut idx = vec![0usize; n];
    for _ in 0..total {
        out.push(
            (0..n)
                .map(|d| {
                    let w = (sb.upper[d] - sb.lower[d]) / per_axis as f64;
                    let lo = sb.lower[d] + w * idx[d] as f64;
                    let hi = if idx[d] + 1 == per_axis { sb.upper[d] } else { lo + w };
                    Interval::new(lo, hi)
                })
                .collect(),
        );
        for d in 0..n {
            idx[d] += 1;
            if idx[d] < per_axis {
                break;
            }
            idx[d] = 0;
        }
    }
    out
}

fn split(cell: &[Interval<f64>]) -> Vec<Vec<Interval<f64>>> {
    let n = cell.len();
    (0..1usize << n)
        .map(|mask| {
            cell.iter()
                .enumerate()
                .map(|(d, iv)| {
                    let m = iv.mid();
                    if mask >> d & 1 == 0 {
                        Interval::new(iv.lo, m)
                    } else {
                        Interval::new(m, iv.hi)
                    }
                })
                .collect()
        })
        .collect()
}

/// Upper bound of `v` over the part of `cell` where `g <= 0`, using the
/// multiplier `s >= 0` in `v <= v - s g` chosen from gradients at the centre.
fn bound_with_multiplier(v: &RangeBound<f64>, g: &RangeBound<f64>, negate: bool, cell: &[Interval<f64>]) -> f64 {
    let plain = v.range(cell).hi;
    let sign = if negate { -1.0 } else { 1.0 };
    let centre: Vec<f64> = cell.iter().map(Interval::mid).collect();
    let gv = v.grad_at(&centre);
    let gg: Vec<f64> = g.grad_at(&centre).into_iter().map(|t| sign * t).collect();
    let nn: f64 = gg.iter().map(|t| t * t).sum();
    if nn < 1e-300 {
        return plain;
    }
    let s = (gv.iter().zip(&gg).map(|(a, b)| a * b).sum::<f64>() / nn).max(0.0);
    if s == 0.0 {
        return plain;
    }
    let g_range = g.natural(cell);
    let g_lo = if negate { -g_range.hi } else { g_range.lo };
    let natural = v.natural(cell).hi - s * g_lo;
    let value = v.eval(&centre) - s * sign * g.eval(&centre);
    let spread: f64 = v
        .grad_ranges(cell)
        .into_iter()
        .zip(g.grad_ranges(cell))
        .zip(cell)
        .map(|((a, b), iv)| (a - b.scale(s * sign)).mag() * 0.5 * iv.width())
        .sum();
    plain.min(natural).min(value + spread)
}

struct CellOutcome {
    worst: f64,
    cells: usize,
    failure: Option<(Vec<f64>, f64)>,
}

impl<'a> SynthesisProblem<'a> {
    fn pieces<'s>(&'s self, family: Family, cell: &[Interval<f64>]) -> Vec<CellPiece<'s>> {
        match family {
            Family::Nonnegative | Family::Generator => vec![CellPiece::Unconstrained],
            Family::Source => self.spec.source.cell_pieces(cell),
            Family::Target => self.spec.target.cell_pieces(cell),
        }
    }

    /// Upper bound of the check over its domain within `cell`, or `None`
    /// when the domain provably misses the cell.
    fn cell_bound(&self, chk: &Check, cell: &[Interval<f64>]) -> Option<f64> {
        let pieces = self.pieces(chk.family, cell);
        if pieces.is_empty() {
            return None;
        }
        let mut plain = None;
        let mut worst = f64::NEG_INFINITY;
        for p in pieces {
            let b = match p {
                CellPiece::Unconstrained => *plain.get_or_insert_with(|| chk.v.range(cell).hi),
                CellPiece::Active { g, negate } => bound_with_multiplier(&chk.v, g, negate, cell),
            };
            worst = worst.max(b);
        }
        Some(worst)
    }

    /// Most violating point among the centre and corners of `cell`,
    /// preferring points inside the check's domain.
    fn witness(&self, chk: &Check, cell: &[Interval<f64>]) -> (Vec<f64>, f64) {
        let n = cell.len();
        let mut cands = vec![cell.iter().map(Interval::mid).collect::<Vec<_>>()];
        if n <= 10 {
            for mask in 0..1usize << n {
                cands.push(cell.iter().enumerate().map(|(d, iv)| if mask >> d & 1 == 0 { iv.lo } else { iv.hi }).collect());
            }
        }
        let mut best: Option<(bool, f64, Vec<f64>)> = None;
        for x in cands {
            let inside = self.in_domain(chk.family, &x);
            let v = chk.v.eval(&x);
            let better = match &best {
                None => true,
                Some((bi, bv, _)) => (inside && !bi) || (inside == *bi && v > *bv),
            };
            if better {
                best = Some((inside, v, x));
            }
        }
        let (_, v, x) = best.expect("at least the centre");
        (x, v)
    }

    fn verify_base_cell(&self, chk: &Check, root: Vec<Interval<f64>>, budget: usize) -> CellOutcome {
        let eps = self.cfg.epsilon;
        let refine_above = 0.1 * eps;
        let mut out = CellOutcome { worst: 0.0, cells: 0, failure: None };
        let mut stack = vec![(root, 0u32)];
        while let Some((cell, depth)) = stack.pop() {
            out.cells += 1;
            let Some(ub) = self.cell_bound(chk, &cell) else { continue };
            let at_limit = depth >= self.cfg.verify_max_depth || out.cells + stack.len() >= budget;
            if ub <= refine_above || (at_limit && ub <= eps) {
                out.worst = out.worst.max(ub);
                continue;
            }
            if at_limit {
                out.failure = Some(self.witness(chk, &cell));
                return out;
            }
            stack.extend(split(&cell).into_iter().rev().map(|c| (c, depth + 1)));
        }
        out
    }

    /// Largest violation of one check over its domain, or a counterexample.
    fn measure(&self, chk: &Check) -> Result<(f64, usize), Counterexample> {
        let sb = &self.spec.state_space;
        let per_axis = sampling::per_axis_for_budget(sb.dim(), self.cfg.verify_base_cells).max(1);
        let cells = base_cells(sb, per_axis);
        let budget = (self.cfg.verify_cell_budget / cells.len()).max(1 << sb.dim());
        let outcomes: Vec<CellOutcome> =
            cells.into_par_iter().map(|c| self.verify_base_cell(chk, c, budget)).collect();
        let mut worst = 0.0f64;
        let mut total = 0;
        let mut failure: Option<(Vec<f64>, f64)> = None;
        for o in outcomes {
            worst = worst.max(o.worst);
            total += o.cells;
            if let Some((x, v)) = o.failure {
                if failure.as_ref().is_none_or(|(_, bv)| v > *bv) {
                    failure = Some((x, v));
                }
            }
        }
        match failure {
            Some((x, v)) => Err(Counterexample { x, family: chk.family, mode: chk.mode, violation: v }),
            None => Ok((worst, total)),
        }
    }
}

/// Check a certificate on the whole state space by adaptive interval
/// subdivision. Constraint violations up to the configured tolerance are
/// absorbed into adjusted `gamma` and `c` through an affine rescaling of `B`.
pub fn verify_barrier(cert: &BarrierCertificate, problem: &SynthesisProblem<'_>) -> Verification {
    let checks = problem.checks(&cert.candidate(), cert.gamma, cert.c);
    let mut delta = [0.0f64; 4];
    let mut cells = 0;
    for chk in &checks {
        match problem.measure(chk) {
            Ok((worst, n)) => {
                let slot = match chk.family {
                    Family::Nonnegative => 0,
                    Family::Source => 1,
                    Family::Target => 2,
                    Family::Generator => 3,
                };
                delta[slot] = delta[slot].max(worst);
                cells += n;
            }
            Err(cx) => return Verification::CounterexampleFound(cx),
        }
    }
    let [d0, dg, d1, dc] = delta.map(|d| d.max(0.0) + PAD);
    let denom = 1.0 - d1 + d0;
    let mut out = cert.clone();
    out.verification = Some(VerificationRecord {
        epsilon: problem.cfg.epsilon,
        delta_nonnegative: d0,
        delta_source: dg,
        delta_target: d1,
        delta_generator: dc,
        gamma_effective: (cert.gamma + dg + d0) / denom,
        c_effective: (cert.c + dc) / denom,
        cells,
    });
    Verification::Verified(Box::new(out))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::RatPoly;

    #[test]
    fn base_cells_tile_the_box() {
        let sb = StateBox::new(vec![-1.0, 0.0], vec![1.0, 3.0]);
        let cells = base_cells(&sb, 4);
        assert_eq!(cells.len(), 16);
        let area: f64 = cells.iter().map(|c| c[0].width() * c[1].width()).sum();
        assert!((area - 6.0).abs() < 1e-12);
        assert_eq!(cells[15][1].hi, 3.0);
    }

    #[test]
    fn split_halves_every_axis() {
        let kids = split(&[Interval::new(0.0, 2.0), Interval::new(-1.0, 1.0)]);
        assert_eq!(kids.len(), 4);
        assert!(kids.iter().all(|k| k[0].width() == 1.0 && k[1].width() == 1.0));
    }

    #[test]
    fn multiplier_removes_boundary_slop() {
        // v = x - 1 on {x - 1 <= 0} is at most 0; plain enclosure on [0.9, 1.1] gives 0.1
        let v = RangeBound::<f64>::new(&RatPoly::parse("x1 - 1", 1).unwrap());
        let g = RangeBound::new(&RatPoly::parse("x1 - 1", 1).unwrap());
        let cell = [Interval::new(0.9, 1.1)];
        assert!((v.range(&cell).hi - 0.1).abs() < 1e-12);
        assert!(bound_with_multiplier(&v, &g, false, &cell) <= 1e-12);
    }
}
