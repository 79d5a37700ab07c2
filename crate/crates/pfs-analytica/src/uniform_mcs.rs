//! Rate prediction under the LTE constraint that all RBs granted to one
//! terminal in a TTI share the MCS of the worst assigned RB.
//!
//! The total rate is a sum over RB subsets weighted by assignment
//! probabilities. Exact enumeration is capped at N <= 16; beyond that the
//! subsets are sampled by independent Bernoulli draws, which is an unbiased
//! estimator of the same sum. Each sampled subset still uses the exact inner
//! quadrature, and the minimum-order integral is cached per subset shape.

use std::collections::HashMap;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::mcs::SpectralEfficiency;
use crate::numerics::{integrate_semi_infinite, QuadratureSpec};
use crate::pfs_analytic::ScheduledSinrModel;
use crate::scenario::RbGeometry;
use crate::sinr_dist::SinrLaw;
use crate::Real;

/// A conditional scheduled-SINR law usable in minimum order statistics:
/// closed-form pdf, tabulated CDF.
pub trait ScheduledLaw<R: Real>: Send + Sync {
    fn pdf(&self, x: R) -> Result<R>;
    fn cdf(&self, x: R) -> Result<R>;
    /// Typical magnitude of the law's mass, used to rescale quadrature so
    /// strong links (mass many decades above 1) are not missed.
    fn scale(&self) -> R;
}

/// Monotone CDF table on a compactified grid `x = scale * t / (1 - t)`.
struct CdfTable<R> {
    scale: R,
    t_max: R,
    cum: Vec<R>,
}

impl<R: Real> CdfTable<R> {
    fn build<F: Fn(R) -> Result<R>>(pdf: F, scale: R, x_max: R, n: usize) -> Result<Self> {
        let t_max = x_max / (x_max + scale);
        let h = t_max / R::from_usize(n).unwrap();
        let g = |t: R| -> Result<R> {
            let om = R::one() - t;
            let x = scale * t / om;
            Ok(pdf(x)? * scale / (om * om))
        };
        let mut cum = Vec::with_capacity(n + 1);
        cum.push(R::zero());
        let mut prev = g(R::zero())?;
        let mut acc = R::zero();
        for i in 1..=n {
            let t = h * R::from_usize(i).unwrap();
            let cur = g(t)?;
            acc = acc + R::c(0.5) * h * (prev + cur);
            cum.push(acc);
            prev = cur;
        }
        Ok(CdfTable { scale, t_max, cum })
    }

    fn eval(&self, x: R) -> R {
        if x <= R::zero() {
            return R::zero();
        }
        let t = x / (x + self.scale);
        if t >= self.t_max {
            return R::one();
        }
        let n = self.cum.len() - 1;
        let pos = t / self.t_max * R::from_usize(n).unwrap();
        let idx = pos.floor().to_f64_lossy() as usize;
        let idx = idx.min(n - 1);
        let frac = pos - R::from_usize(idx).unwrap();
        let v = self.cum[idx] + frac * (self.cum[idx + 1] - self.cum[idx]);
        let total = self.cum[n];
        (v / total).min(R::one())
    }
}

/// Conditional scheduled-SINR distribution of one (terminal, RB), backed by
/// a scheduled-SINR model for the pdf and a precomputed table for the CDF.
pub struct ConditionalDist<'a, R: Real, D: SinrLaw<R>> {
    model: &'a ScheduledSinrModel<R, D>,
    j: usize,
    table: CdfTable<R>,
}

impl<'a, R: Real, D: SinrLaw<R>> ConditionalDist<'a, R, D> {
    pub fn new(model: &'a ScheduledSinrModel<R, D>, j: usize) -> Result<Self> {
        let law = model.law(j);
        let scale = law.mean();
        let p = model.sched_prob(j);
        // Tail bound: 1 - F_cond(x) <= (1 - F_j(x)) / P(M=1).
        let mut x_max = scale;
        for _ in 0..200 {
            let tail = (R::one() - law.cdf(x_max)?) / p;
            if tail < R::c(1e-13) {
                break;
            }
            x_max = x_max * R::c(2.0);
        }
        let table = CdfTable::build(|x| model.cond_pdf(j, x), scale, x_max, 8192)?;
        Ok(ConditionalDist { model, j, table })
    }
}

impl<R: Real, D: SinrLaw<R>> ScheduledLaw<R> for ConditionalDist<'_, R, D> {
    fn pdf(&self, x: R) -> Result<R> {
        self.model.cond_pdf(self.j, x)
    }

    fn cdf(&self, x: R) -> Result<R> {
        Ok(self.table.eval(x))
    }

    fn scale(&self) -> R {
        self.table.scale
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum AssignmentStrategy {
    ExactEnumeration,
    MonteCarloAssignments { samples: usize, seed: u64 },
}

/// Per-RB scheduling probabilities of one terminal plus the strategy for
/// summing over RB subsets.
#[derive(Debug, Clone)]
pub struct AssignmentDist<R> {
    pub probs: Vec<R>,
    pub strategy: AssignmentStrategy,
}

impl<R: Real> AssignmentDist<R> {
    pub fn new(probs: Vec<R>, strategy: AssignmentStrategy) -> Result<Self> {
        if probs
            .iter()
            .any(|p| !(*p >= R::zero() && *p <= R::one()))
        {
            return Err(Error::Domain(
                "assignment probabilities must lie in [0, 1]".into(),
            ));
        }
        Ok(AssignmentDist { probs, strategy })
    }
}

/// Probability that exactly the subset `a` (as RB indices) is assigned,
/// under independent per-RB scheduling indicators.
pub fn assignment_probability<R: Real>(probs: &[R], a: &[usize]) -> R {
    let mut in_a = vec![false; probs.len()];
    for &n in a {
        in_a[n] = true;
    }
    probs
        .iter()
        .zip(&in_a)
        .map(|(&p, &inside)| if inside { p } else { R::one() - p })
        .fold(R::one(), |acc, f| acc * f)
}

/// CDF of the minimum conditional scheduled SINR over the subset.
pub fn min_order_cdf<R: Real, L: ScheduledLaw<R>>(conds: &[&L], x: R) -> Result<R> {
    if conds.is_empty() {
        return Err(Error::EmptySubset);
    }
    let mut surv = R::one();
    for c in conds {
        surv = surv * (R::one() - c.cdf(x)?);
    }
    Ok(R::one() - surv)
}

/// Density of the minimum conditional scheduled SINR over the subset.
pub fn min_order_pdf<R: Real, L: ScheduledLaw<R>>(conds: &[&L], x: R) -> Result<R> {
    if conds.is_empty() {
        return Err(Error::EmptySubset);
    }
    let survs: Vec<R> = conds
        .iter()
        .map(|c| Ok(R::one() - c.cdf(x)?))
        .collect::<Result<_>>()?;
    let mut total = R::zero();
    for (n, c) in conds.iter().enumerate() {
        let mut term = c.pdf(x)?;
        for (m, &s) in survs.iter().enumerate() {
            if m != n {
                term = term * s;
            }
        }
        total = total + term;
    }
    Ok(total)
}

/// Expected worst-RB-MCS contribution of one assignment:
/// `P_A * |A| * (R*S/T_TTI) * E[C(min SINR)]`.
pub fn rate_for_assignment<R: Real, L: ScheduledLaw<R>>(
    assignment_prob: R,
    conds: &[&L],
    eff: &SpectralEfficiency<R>,
    geom: &RbGeometry<R>,
    spec: &QuadratureSpec<R>,
) -> Result<R> {
    if conds.is_empty() {
        return Err(Error::EmptySubset);
    }
    let integral = min_efficiency_integral(conds, eff, spec)?;
    Ok(assignment_prob * R::from_usize(conds.len()).unwrap() * geom.symbol_rate() * integral)
}

fn min_efficiency_integral<R: Real, L: ScheduledLaw<R>>(
    conds: &[&L],
    eff: &SpectralEfficiency<R>,
    spec: &QuadratureSpec<R>,
) -> Result<R> {
    // Substitute x = c*u with c the smallest member scale; the minimum's
    // mass then lies at u = O(1) where the quadrature nodes are.
    let c = conds
        .iter()
        .map(|l| l.scale())
        .fold(R::infinity(), R::min);
    integrate_semi_infinite(
        |u| Ok(eff.efficiency(c * u)? * min_order_pdf(conds, c * u)? * c),
        spec,
    )
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E3779B97F4A7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
    z ^ (z >> 31)
}

/// Total uniform-MCS rate of one terminal: the assignment-weighted sum over
/// all nonempty RB subsets (exact) or its Bernoulli-sampled estimate.
///
/// `keys[n]` identifies the conditional law of RB `n`; RBs with equal keys
/// share inner integrals, which makes the RB-invariant reproduction scenario
/// tractable.
pub fn total_rate_uniform<R: Real, L: ScheduledLaw<R>>(
    a: &AssignmentDist<R>,
    conds: &[L],
    keys: &[usize],
    eff: &SpectralEfficiency<R>,
    geom: &RbGeometry<R>,
    spec: &QuadratureSpec<R>,
) -> Result<R> {
    let n = conds.len();
    assert_eq!(n, a.probs.len());
    assert_eq!(n, keys.len());
    let mut cache: HashMap<Vec<usize>, R> = HashMap::new();
    let integral_for = |subset: &[usize], cache: &mut HashMap<Vec<usize>, R>| -> Result<R> {
        let mut key: Vec<usize> = subset.iter().map(|&i| keys[i]).collect();
        key.sort_unstable();
        if let Some(&v) = cache.get(&key) {
            return Ok(v);
        }
        let refs: Vec<&L> = subset.iter().map(|&i| &conds[i]).collect();
        let v = min_efficiency_integral(&refs, eff, spec)?;
        cache.insert(key, v);
        Ok(v)
    };

    match a.strategy {
        AssignmentStrategy::ExactEnumeration => {
            if n > 16 {
                return Err(Error::EnumerationTooLarge { n });
            }
            let mut total = R::zero();
            for mask in 1u32..(1u32 << n) {
                let subset: Vec<usize> = (0..n).filter(|&i| mask & (1 << i) != 0).collect();
                let p = assignment_probability(&a.probs, &subset);
                if p <= R::zero() {
                    continue;
                }
                let integral = integral_for(&subset, &mut cache)?;
                total = total
                    + p * R::from_usize(subset.len()).unwrap() * geom.symbol_rate() * integral;
            }
            Ok(total)
        }
        AssignmentStrategy::MonteCarloAssignments { samples, seed } => {
            let mut acc = R::zero();
            for draw in 0..samples {
                // Per-draw RNG stream derived from (seed, draw index) so the
                // result is independent of evaluation order.
                let mut rng = ChaCha8Rng::seed_from_u64(splitmix64(
                    seed ^ (draw as u64).wrapping_mul(0xA24BAED4963EE407),
                ));
                let mut subset = Vec::new();
                for (i, &p) in a.probs.iter().enumerate() {
                    if R::c(rng.gen::<f64>()) < p {
                        subset.push(i);
                    }
                }
                if subset.is_empty() {
                    continue;
                }
                let integral = integral_for(&subset, &mut cache)?;
                acc = acc
                    + R::from_usize(subset.len()).unwrap() * geom.symbol_rate() * integral;
            }
            Ok(acc / R::from_usize(samples).unwrap())
        }
    }
}
