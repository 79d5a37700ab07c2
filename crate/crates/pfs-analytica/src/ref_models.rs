//! Reference rate predictors from the literature: Gaussian-rate,
//! interference-as-noise (IaN) and the naive mean-SINR split.

use crate::error::{Error, Result};
use crate::mcs::SpectralEfficiency;
use crate::numerics::{integrate_semi_infinite, normal_cdf, QuadratureSpec};
use crate::scenario::{LinkStats, RbGeometry};
use crate::sinr_dist::SinrLaw;
use crate::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReferenceModelKind {
    Gaussian,
    Ian,
    Naive,
}

/// Mean rate SINR ratio used by all three reference models:
/// `P^s / (P^i + eta)`.
pub fn mean_power_sinr<R: Real>(link: &LinkStats<R>) -> R {
    link.p_sig / (link.p_intf + link.noise)
}

/// First two moments of the per-RB rate under the Gaussian model:
/// `E[r] = int C(g*y) e^-y dy`, variance by the second moment, `g` the
/// mean-power SINR.
pub fn gaussian_rate_moments<R: Real>(
    link: &LinkStats<R>,
    eff: &SpectralEfficiency<R>,
    spec: &QuadratureSpec<R>,
) -> Result<(R, R)> {
    let g = mean_power_sinr(link);
    let mean = integrate_semi_infinite(|y| Ok(eff.efficiency(g * y)? * (-y).exp()), spec)?;
    // Central-moment form; the raw second moment cancels catastrophically
    // for near-constant C.
    let var = integrate_semi_infinite(
        |y| {
            let d = eff.efficiency(g * y)? - mean;
            Ok(d * d * (-y).exp())
        },
        spec,
    )?;
    if var < R::zero() {
        return Err(Error::NegativeVariance(var.to_f64_lossy()));
    }
    Ok((mean, var.sqrt()))
}

/// Gaussian-model PFS rate of terminal `j` on one RB, integrated over
/// `[0, inf)` as printed in the reference formulation.
pub fn gaussian_pfs_rate<R: Real>(
    moments: &[(R, R)],
    j: usize,
    geom: &RbGeometry<R>,
    spec: &QuadratureSpec<R>,
) -> Result<R> {
    for (i, &(_, sigma)) in moments.iter().enumerate() {
        if !(sigma > R::zero()) {
            return Err(Error::DegenerateStd(i));
        }
    }
    let (ej, sj) = moments[j];
    let inv_sqrt_2pi = R::c(1.0 / (2.0 * std::f64::consts::PI).sqrt());
    let integral = integrate_semi_infinite(
        |y| {
            let mut v = (y * sj + ej) * inv_sqrt_2pi * (-y * y / R::c(2.0)).exp();
            for (i, &(ei, si)) in moments.iter().enumerate() {
                if i == j {
                    continue;
                }
                v = v * normal_cdf(ei * sj / (ej * si) * y);
            }
            Ok(v)
        },
        spec,
    )?;
    Ok(geom.symbol_rate() * integral)
}

/// Exponential SINR law of the interference-as-noise model; plugs into the
/// scheduled-SINR pipeline in place of the interference-aware law.
#[derive(Debug, Clone, Copy)]
pub struct IanDist<R> {
    lambda: R,
}

impl<R: Real> IanDist<R> {
    pub fn new(link: &LinkStats<R>) -> Self {
        IanDist {
            lambda: (link.p_intf + link.noise) / link.p_sig,
        }
    }
}

impl<R: Real> SinrLaw<R> for IanDist<R> {
    fn pdf(&self, x: R) -> Result<R> {
        if x < R::zero() {
            return Err(Error::Domain(format!("pdf domain is x >= 0, got {x}")));
        }
        Ok(self.lambda * (-self.lambda * x).exp())
    }

    fn cdf(&self, x: R) -> Result<R> {
        if x < R::zero() {
            return Err(Error::Domain(format!("cdf domain is x >= 0, got {x}")));
        }
        Ok(R::one() - (-self.lambda * x).exp())
    }

    fn mean(&self) -> R {
        R::one() / self.lambda
    }
}

pub fn ian_pdf<R: Real>(link: &LinkStats<R>, x: R) -> Result<R> {
    IanDist::new(link).pdf(x)
}

/// Naive model: the rate of the mean-power SINR split evenly over the `J`
/// terminals, summed over the per-RB links of terminal `j`.
pub fn naive_rate<R: Real>(
    links: &[LinkStats<R>],
    n_terminals: usize,
    eff: &SpectralEfficiency<R>,
    geom: &RbGeometry<R>,
) -> Result<R> {
    let share = geom.symbol_rate() / R::from_usize(n_terminals).unwrap();
    let mut total = R::zero();
    for link in links {
        total = total + share * eff.efficiency(mean_power_sinr(link))?;
    }
    Ok(total)
}
