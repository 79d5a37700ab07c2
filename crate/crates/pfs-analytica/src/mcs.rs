//! Spectral-efficiency maps C(gamma) from SINR to bits per symbol.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::Real;

/// SINR-to-efficiency function used for link-to-rate mapping.
///
/// Staircase steps are given as `(sinr_db, bits_per_symbol)` pairs, strictly
/// increasing in both columns; the step value applies from its threshold on
/// (right-continuous lookup).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SpectralEfficiency<R> {
    Shannon,
    TruncatedShannon { cap: R },
    Staircase { steps_db: Vec<(R, R)> },
}

impl<R: Real> SpectralEfficiency<R> {
    pub fn validate(&self) -> Result<()> {
        match self {
            SpectralEfficiency::Shannon => Ok(()),
            SpectralEfficiency::TruncatedShannon { cap } => {
                if *cap > R::zero() {
                    Ok(())
                } else {
                    Err(Error::Config("mcs.efficiency.cap must be > 0".into()))
                }
            }
            SpectralEfficiency::Staircase { steps_db } => {
                if steps_db.is_empty() {
                    return Err(Error::Config(
                        "mcs.efficiency.steps_db must not be empty".into(),
                    ));
                }
                for w in steps_db.windows(2) {
                    if !(w[1].0 > w[0].0 && w[1].1 > w[0].1) {
                        return Err(Error::Config(
                            "mcs.efficiency.steps_db must be strictly increasing in SINR and efficiency".into(),
                        ));
                    }
                }
                if steps_db.iter().any(|s| s.1 < R::zero()) {
                    return Err(Error::Config(
                        "mcs.efficiency.steps_db efficiencies must be >= 0".into(),
                    ));
                }
                Ok(())
            }
        }
    }

    /// Bits per symbol at linear SINR `gamma`.
    pub fn efficiency(&self, gamma: R) -> Result<R> {
        if gamma < R::zero() {
            return Err(Error::Domain(format!("SINR must be >= 0, got {gamma}")));
        }
        Ok(match self {
            SpectralEfficiency::Shannon => (R::one() + gamma).log2(),
            SpectralEfficiency::TruncatedShannon { cap } => {
                (R::one() + gamma).log2().min(*cap)
            }
            SpectralEfficiency::Staircase { steps_db } => {
                let mut eff = R::zero();
                for &(thr_db, bits) in steps_db {
                    let thr = R::c(10.0).powf(thr_db / R::c(10.0));
                    if gamma >= thr {
                        eff = bits;
                    } else {
                        break;
                    }
                }
                eff
            }
        })
    }

    /// Smallest positive efficiency the map can produce; used as the
    /// served-bits floor of the rate-based PFS metric.
    pub fn floor_bits_per_symbol(&self) -> R {
        match self {
            SpectralEfficiency::Staircase { steps_db } => steps_db
                .iter()
                .map(|s| s.1)
                .find(|&b| b > R::zero())
                .unwrap_or(R::one()),
            _ => R::one(),
        }
    }
}
