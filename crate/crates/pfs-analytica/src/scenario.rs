//! Scenario construction: geometry, path loss and the per-(terminal, RB)
//! link statistics that parameterize every model in the crate.

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::mcs::SpectralEfficiency;
use crate::Real;

/// 3GPP urban path loss, `35.2 + 35 log10(d)` dB at distance `d` meters.
pub fn path_loss_db<R: Real>(distance_m: R) -> Result<R> {
    if !(distance_m > R::zero()) {
        return Err(Error::Domain(format!(
            "path loss needs distance > 0, got {distance_m}"
        )));
    }
    Ok(R::c(35.2) + R::c(35.0) * distance_m.log10())
}

/// Average received powers of a single (terminal, RB) link.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkStats<R> {
    /// Average received power of the signal of interest, watts.
    pub p_sig: R,
    /// Average received power of the dominant interferer, watts.
    pub p_intf: R,
    /// Noise power, watts.
    pub noise: R,
}

impl<R: Real> LinkStats<R> {
    pub fn new(p_sig: R, p_intf: R, noise: R) -> Result<Self> {
        if !(p_sig > R::zero()) {
            return Err(Error::Domain("p_sig must be > 0".into()));
        }
        if !(p_intf >= R::zero()) {
            return Err(Error::Domain("p_intf must be >= 0".into()));
        }
        if !(noise > R::zero()) {
            return Err(Error::DivergentMean);
        }
        Ok(Self {
            p_sig,
            p_intf,
            noise,
        })
    }
}

/// A power value carrying the unit it was written in, so serialization
/// round-trips the scenario file representation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Power {
    pub watts: f64,
    unit: PowerUnit,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum PowerUnit {
    Watts,
    Milliwatts,
    Dbm,
}

impl Power {
    pub fn from_watts(w: f64) -> Self {
        Power {
            watts: w,
            unit: PowerUnit::Watts,
        }
    }

    pub fn from_dbm(dbm: f64) -> Self {
        Power {
            watts: 10f64.powf((dbm - 30.0) / 10.0),
            unit: PowerUnit::Dbm,
        }
    }

    pub fn parse(s: &str) -> std::result::Result<Self, String> {
        let t = s.trim();
        let lower = t.to_ascii_lowercase();
        let (num, unit) = if let Some(v) = lower.strip_suffix("dbm") {
            (v, PowerUnit::Dbm)
        } else if let Some(v) = lower.strip_suffix("mw") {
            (v, PowerUnit::Milliwatts)
        } else if let Some(v) = lower.strip_suffix('w') {
            (v, PowerUnit::Watts)
        } else {
            (lower.as_str(), PowerUnit::Watts)
        };
        let value: f64 = num
            .trim()
            .parse()
            .map_err(|_| format!("cannot parse power value {t:?}"))?;
        Ok(match unit {
            PowerUnit::Watts => Power {
                watts: value,
                unit,
            },
            PowerUnit::Milliwatts => Power {
                watts: value * 1e-3,
                unit,
            },
            PowerUnit::Dbm => Power {
                watts: 10f64.powf((value - 30.0) / 10.0),
                unit,
            },
        })
    }
}

impl std::fmt::Display for Power {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self.unit {
            PowerUnit::Watts => write!(f, "{} W", self.watts),
            PowerUnit::Milliwatts => write!(f, "{} mW", self.watts * 1e3),
            PowerUnit::Dbm => write!(f, "{} dBm", 10.0 * (self.watts * 1e3).log10()),
        }
    }
}

impl Serialize for Power {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Power {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Str(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(v) => Ok(Power::from_watts(v)),
            Raw::Str(s) => Power::parse(&s).map_err(D::Error::custom),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TerminalPlacement {
    pub id: usize,
    pub pos_m: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum McsPolicy {
    IndependentPerRb,
    UniformWorstRb,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CellConfig {
    pub n_rbs: usize,
    /// Subcarriers bundled per resource block (R).
    pub subcarriers_per_rb: usize,
    /// Symbols per subcarrier per TTI (S).
    pub symbols_per_subcarrier: usize,
    pub tti_s: f64,
    pub serving_bs_pos_m: f64,
    pub interferer_bs_pos_m: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PowerConfig {
    pub tx_per_rb_signal: Power,
    pub tx_per_rb_interf: Power,
    pub noise_per_rb: Power,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PfsConfig {
    pub window: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct McsConfig {
    pub policy: McsPolicy,
    pub efficiency: SpectralEfficiency<f64>,
}

/// Direct per-link override, bypassing geometry. Applies to one RB when
/// `rb` is set, to all RBs of the terminal otherwise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinkOverride {
    pub terminal: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rb: Option<usize>,
    pub p_sig: Power,
    pub p_intf: Power,
}

/// The single source of truth for a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub cell: CellConfig,
    pub power: PowerConfig,
    pub pfs: PfsConfig,
    pub mcs: McsConfig,
    pub terminals: Vec<TerminalPlacement>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub links: Vec<LinkOverride>,
}

/// Resource-block geometry used by every rate formula:
/// `R * S` resource elements per RB per TTI of `tti_s` seconds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RbGeometry<R> {
    pub subcarriers: usize,
    pub symbols: usize,
    pub tti_s: R,
}

impl<R: Real> RbGeometry<R> {
    pub fn resource_elements(&self) -> R {
        R::from_usize(self.subcarriers * self.symbols).unwrap()
    }

    /// Symbols per second available on one RB.
    pub fn symbol_rate(&self) -> R {
        self.resource_elements() / self.tti_s
    }
}

impl Scenario {
    pub fn from_toml_str(s: &str) -> Result<Self> {
        let scn: Scenario =
            toml::from_str(s).map_err(|e| Error::Config(format!("scenario file: {e}")))?;
        scn.validate()?;
        Ok(scn)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string_pretty(self).expect("scenario serializes")
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml_str(&text)
    }

    pub fn n_terminals(&self) -> usize {
        self.terminals.len()
    }

    pub fn geometry(&self) -> RbGeometry<f64> {
        RbGeometry {
            subcarriers: self.cell.subcarriers_per_rb,
            symbols: self.cell.symbols_per_subcarrier,
            tti_s: self.cell.tti_s,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.cell.n_rbs < 1 {
            return Err(Error::Config("cell.n_rbs must be >= 1".into()));
        }
        if self.cell.subcarriers_per_rb < 1 || self.cell.symbols_per_subcarrier < 1 {
            return Err(Error::Config(
                "cell.subcarriers_per_rb and cell.symbols_per_subcarrier must be >= 1".into(),
            ));
        }
        if !(self.cell.tti_s > 0.0) {
            return Err(Error::Config("cell.tti_s must be > 0".into()));
        }
        if !(self.power.tx_per_rb_signal.watts > 0.0) {
            return Err(Error::Config("power.tx_per_rb_signal must be > 0".into()));
        }
        if !(self.power.tx_per_rb_interf.watts >= 0.0) {
            return Err(Error::Config("power.tx_per_rb_interf must be >= 0".into()));
        }
        if !(self.power.noise_per_rb.watts > 0.0) {
            return Err(Error::Config(
                "power.noise_per_rb must be > 0: with zero noise the mean SINR diverges (DivergentMean)".into(),
            ));
        }
        if self.pfs.window < 1 {
            return Err(Error::Config("pfs.window must be >= 1".into()));
        }
        self.mcs.efficiency.validate()?;
        if self.terminals.is_empty() {
            return Err(Error::Config("at least one terminal required".into()));
        }
        for (i, t) in self.terminals.iter().enumerate() {
            if t.id != i {
                return Err(Error::Config(format!(
                    "terminal ids must be contiguous from 0; entry {i} has id {}",
                    t.id
                )));
            }
            if t.pos_m == self.cell.serving_bs_pos_m || t.pos_m == self.cell.interferer_bs_pos_m {
                return Err(Error::Config(format!(
                    "terminal {} is placed exactly on a base station",
                    t.id
                )));
            }
        }
        for l in &self.links {
            if l.terminal >= self.terminals.len() {
                return Err(Error::Config(format!(
                    "links entry references unknown terminal {}",
                    l.terminal
                )));
            }
            if let Some(rb) = l.rb {
                if rb >= self.cell.n_rbs {
                    return Err(Error::Config(format!("links entry references rb {rb}")));
                }
            }
            if !(l.p_sig.watts > 0.0) || !(l.p_intf.watts >= 0.0) {
                return Err(Error::Config(
                    "links entries need p_sig > 0 and p_intf >= 0".into(),
                ));
            }
        }
        Ok(())
    }

    /// Per-(terminal, RB) average received powers, `[terminal][rb]`.
    ///
    /// Geometry gives frequency-flat averages, identical across RBs;
    /// `links` overrides replace individual rows.
    pub fn build_link_stats<R: Real>(&self) -> Result<Vec<Vec<LinkStats<R>>>> {
        let noise = R::c(self.power.noise_per_rb.watts);
        let mut table = Vec::with_capacity(self.terminals.len());
        for t in &self.terminals {
            let d_s = (t.pos_m - self.cell.serving_bs_pos_m).abs();
            let d_i = (t.pos_m - self.cell.interferer_bs_pos_m).abs();
            let gain_s = R::c(10.0).powf(-path_loss_db(R::c(d_s))? / R::c(10.0));
            let gain_i = R::c(10.0).powf(-path_loss_db(R::c(d_i))? / R::c(10.0));
            let link = LinkStats::new(
                R::c(self.power.tx_per_rb_signal.watts) * gain_s,
                R::c(self.power.tx_per_rb_interf.watts) * gain_i,
                noise,
            )?;
            table.push(vec![link; self.cell.n_rbs]);
        }
        for l in &self.links {
            let link = LinkStats::new(R::c(l.p_sig.watts), R::c(l.p_intf.watts), noise)?;
            match l.rb {
                Some(rb) => table[l.terminal][rb] = link,
                None => table[l.terminal].iter_mut().for_each(|r| *r = link),
            }
        }
        Ok(table)
    }
}
