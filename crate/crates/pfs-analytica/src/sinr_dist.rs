//! SINR distribution of a single interference-limited link under Rayleigh
//! fading with one dominant interferer, plus its PFS-scaled variant.

use crate::error::{Error, Result};
use crate::numerics::{exp_integral_ei, integrate_semi_infinite, QuadratureSpec};
use crate::scenario::LinkStats;
use crate::Real;

/// Common interface of every SINR law the scheduling analysis can run on:
/// the interference-limited law here and the exponential "interference as
/// noise" law in `ref_models`.
pub trait SinrLaw<R: Real>: Send + Sync {
    fn pdf(&self, x: R) -> Result<R>;
    fn cdf(&self, x: R) -> Result<R>;
    /// Long-run mean of the SINR; finite whenever noise > 0.
    fn mean(&self) -> R;
}

/// Interference-limited SINR distribution of one (terminal, RB) link.
///
/// The mean is computed once by quadrature of `x * pdf(x)` at construction
/// and cached; every downstream formula reuses it.
#[derive(Debug, Clone)]
pub struct SinrDist<R> {
    link: LinkStats<R>,
    mean: R,
}

impl<R: Real> SinrDist<R> {
    pub fn new(link: LinkStats<R>, spec: &QuadratureSpec<R>) -> Result<Self> {
        if !(link.noise > R::zero()) {
            return Err(Error::DivergentMean);
        }
        let mut d = SinrDist {
            link,
            mean: R::zero(),
        };
        d.mean = integrate_semi_infinite(|x| Ok(x * d.pdf_unchecked(x)), spec)?;
        Ok(d)
    }

    pub fn link(&self) -> &LinkStats<R> {
        &self.link
    }

    fn pdf_unchecked(&self, x: R) -> R {
        let LinkStats {
            p_sig,
            p_intf,
            noise,
        } = self.link;
        let denom = p_intf * x + p_sig;
        (noise / denom + p_sig * p_intf / (denom * denom)) * (-noise * x / p_sig).exp()
    }

    /// Closed-form mean via the exponential integral, with the printed
    /// expression evaluated at its integration bounds:
    /// `E[X] = -(P^s / P^i) * exp(eta / P^i) * Ei(-eta / P^i)`.
    ///
    /// Requires `P^i > 0`; the quadrature mean is authoritative and covers
    /// the interference-free case as well.
    pub fn mean_closed_form(&self) -> Result<R> {
        let LinkStats {
            p_sig,
            p_intf,
            noise,
        } = self.link;
        if !(p_intf > R::zero()) {
            return Err(Error::Domain(
                "closed-form mean needs P^i > 0; use the quadrature mean".into(),
            ));
        }
        let r = noise / p_intf;
        Ok(-(p_sig / p_intf) * r.exp() * exp_integral_ei(-r)?)
    }

    pub fn scaled_pdf(&self, x: R) -> Result<R> {
        Ok(self.mean * self.pdf(self.mean * x)?)
    }

    pub fn scaled_cdf(&self, x: R) -> Result<R> {
        self.cdf(self.mean * x)
    }
}

impl<R: Real> SinrLaw<R> for SinrDist<R> {
    fn pdf(&self, x: R) -> Result<R> {
        if x < R::zero() {
            return Err(Error::Domain(format!("pdf domain is x >= 0, got {x}")));
        }
        Ok(self.pdf_unchecked(x))
    }

    fn cdf(&self, x: R) -> Result<R> {
        if x < R::zero() {
            return Err(Error::Domain(format!("cdf domain is x >= 0, got {x}")));
        }
        let LinkStats {
            p_sig,
            p_intf,
            noise,
        } = self.link;
        Ok(R::one() - p_sig / (p_intf * x + p_sig) * (-noise * x / p_sig).exp())
    }

    fn mean(&self) -> R {
        self.mean
    }
}
