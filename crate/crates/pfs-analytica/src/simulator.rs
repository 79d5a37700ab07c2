//! TTI-level Monte-Carlo downlink simulator: Rayleigh fading (block-i.i.d.
//! or Jakes sum-of-sinusoids, optionally frequency-correlated via a tapped
//! delay line), SINR-based PFS, rate-based PFS and max-SINR scheduling,
//! per-RB or worst-RB-uniform MCS, full-buffer traffic.
//!
//! One replication is one sequential state machine driven entirely by its
//! seed; replications are independent and may run in parallel.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::scenario::{McsPolicy, Scenario};

/// RB spacing used for tapped-delay-line frequency correlation, Hz.
const RB_SPACING_HZ: f64 = 180e3;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SchedulerKind {
    SinrPfs,
    RatePfs,
    Opportunistic,
}

impl SchedulerKind {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "sinr_pfs" => Ok(SchedulerKind::SinrPfs),
            "rate_pfs" => Ok(SchedulerKind::RatePfs),
            "opportunistic" => Ok(SchedulerKind::Opportunistic),
            other => Err(Error::Config(format!(
                "unknown scheduler {other:?}; expected sinr_pfs, rate_pfs or opportunistic"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum FadingMode {
    /// Independent unit-mean exponential power per TTI.
    BlockIid,
    /// Sum-of-sinusoids Rayleigh process with the classical Doppler spectrum.
    JakesSos { oscillators: usize, doppler_hz: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub enum FreqCorrelation {
    IndependentRbs,
    /// `(delay_s, power_fraction)` taps; fractions must sum to 1.
    TappedDelayLine { taps: Vec<(f64, f64)> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct FadingProcess {
    pub mode: FadingMode,
    pub freq: FreqCorrelation,
}

impl Default for FadingProcess {
    fn default() -> Self {
        FadingProcess {
            mode: FadingMode::BlockIid,
            freq: FreqCorrelation::IndependentRbs,
        }
    }
}

impl FadingProcess {
    pub fn jakes_default() -> Self {
        // 3 km/h at 2 GHz carrier.
        FadingProcess {
            mode: FadingMode::JakesSos {
                oscillators: 16,
                doppler_hz: 5.5,
            },
            freq: FreqCorrelation::IndependentRbs,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if let FadingMode::JakesSos {
            oscillators,
            doppler_hz,
        } = &self.mode
        {
            if *oscillators < 1 {
                return Err(Error::Config("jakes oscillators must be >= 1".into()));
            }
            if !(*doppler_hz > 0.0) {
                return Err(Error::Config("doppler_hz must be > 0".into()));
            }
        }
        if let FreqCorrelation::TappedDelayLine { taps } = &self.freq {
            if taps.is_empty() {
                return Err(Error::Config("tapped delay line needs taps".into()));
            }
            let total: f64 = taps.iter().map(|t| t.1).sum();
            if (total - 1.0).abs() > 1e-9 {
                return Err(Error::Config(format!(
                    "tap power fractions must sum to 1, got {total}"
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct SimOptions {
    pub scheduler: SchedulerKind,
    pub ttis: usize,
    pub seed: u64,
    /// CQI reporting delay of the rate-based PFS feedback, in TTIs.
    pub cqi_delay_ttis: usize,
}

/// Complex sum-of-sinusoids Rayleigh process, unit mean power.
struct SoS {
    omegas: Vec<f64>,
    phases: Vec<f64>,
    amp: f64,
}

impl SoS {
    fn new(rng: &mut ChaCha8Rng, oscillators: usize, doppler_hz: f64) -> Self {
        let two_pi = 2.0 * std::f64::consts::PI;
        let omegas = (0..oscillators)
            .map(|_| two_pi * doppler_hz * (two_pi * rng.gen::<f64>()).cos())
            .collect();
        let phases = (0..oscillators).map(|_| two_pi * rng.gen::<f64>()).collect();
        SoS {
            omegas,
            phases,
            amp: 1.0 / (oscillators as f64).sqrt(),
        }
    }

    fn sample(&self, t: f64) -> (f64, f64) {
        let mut re = 0.0;
        let mut im = 0.0;
        for (w, p) in self.omegas.iter().zip(&self.phases) {
            let arg = w * t + p;
            re += arg.cos();
            im += arg.sin();
        }
        (re * self.amp, im * self.amp)
    }
}

fn exp_draw(rng: &mut ChaCha8Rng) -> f64 {
    -(1.0 - rng.gen::<f64>()).ln()
}

fn gauss_pair(rng: &mut ChaCha8Rng) -> (f64, f64) {
    // Box-Muller.
    let u = 1.0 - rng.gen::<f64>();
    let v = rng.gen::<f64>();
    let r = (-2.0 * u.ln()).sqrt();
    let a = 2.0 * std::f64::consts::PI * v;
    (r * a.cos(), r * a.sin())
}

/// Channel-gain generator for one (terminal, signal-or-interferer) process
/// across all RBs.
enum GainGen {
    BlockIid,
    BlockIidTdl {
        taps: Vec<(f64, f64)>,
    },
    Jakes {
        per_rb: Vec<SoS>,
    },
    JakesTdl {
        taps: Vec<(SoS, f64, f64)>, // (process, delay_s, power_fraction)
    },
}

impl GainGen {
    fn new(fading: &FadingProcess, n_rbs: usize, rng: &mut ChaCha8Rng) -> Self {
        match (&fading.mode, &fading.freq) {
            (FadingMode::BlockIid, FreqCorrelation::IndependentRbs) => GainGen::BlockIid,
            (FadingMode::BlockIid, FreqCorrelation::TappedDelayLine { taps }) => {
                GainGen::BlockIidTdl { taps: taps.clone() }
            }
            (
                FadingMode::JakesSos {
                    oscillators,
                    doppler_hz,
                },
                FreqCorrelation::IndependentRbs,
            ) => GainGen::Jakes {
                per_rb: (0..n_rbs)
                    .map(|_| SoS::new(rng, *oscillators, *doppler_hz))
                    .collect(),
            },
            (
                FadingMode::JakesSos {
                    oscillators,
                    doppler_hz,
                },
                FreqCorrelation::TappedDelayLine { taps },
            ) => GainGen::JakesTdl {
                taps: taps
                    .iter()
                    .map(|&(tau, p)| (SoS::new(rng, *oscillators, *doppler_hz), tau, p))
                    .collect(),
            },
        }
    }

    fn fill(&self, t: f64, rng: &mut ChaCha8Rng, out: &mut [f64]) {
        match self {
            GainGen::BlockIid => {
                for g in out.iter_mut() {
                    *g = exp_draw(rng);
                }
            }
            GainGen::BlockIidTdl { taps } => {
                let coeffs: Vec<(f64, f64)> = taps
                    .iter()
                    .map(|&(_, p)| {
                        let (a, b) = gauss_pair(rng);
                        let s = (p / 2.0).sqrt();
                        (a * s, b * s)
                    })
                    .collect();
                for (n, g) in out.iter_mut().enumerate() {
                    let (mut re, mut im) = (0.0, 0.0);
                    for (&(tau, _), &(cr, ci)) in taps.iter().zip(&coeffs) {
                        let th = -2.0 * std::f64::consts::PI * RB_SPACING_HZ * n as f64 * tau;
                        let (c, s) = (th.cos(), th.sin());
                        re += cr * c - ci * s;
                        im += cr * s + ci * c;
                    }
                    *g = re * re + im * im;
                }
            }
            GainGen::Jakes { per_rb } => {
                for (g, p) in out.iter_mut().zip(per_rb) {
                    let (re, im) = p.sample(t);
                    *g = re * re + im * im;
                }
            }
            GainGen::JakesTdl { taps } => {
                let coeffs: Vec<(f64, f64, f64)> = taps
                    .iter()
                    .map(|(p, tau, frac)| {
                        let (re, im) = p.sample(t);
                        let s = frac.sqrt();
                        (re * s, im * s, *tau)
                    })
                    .collect();
                for (n, g) in out.iter_mut().enumerate() {
                    let (mut re, mut im) = (0.0, 0.0);
                    for &(cr, ci, tau) in &coeffs {
                        let th = -2.0 * std::f64::consts::PI * RB_SPACING_HZ * n as f64 * tau;
                        let (c, s) = (th.cos(), th.sin());
                        re += cr * c - ci * s;
                        im += cr * s + ci * c;
                    }
                    *g = re * re + im * im;
                }
            }
        }
    }
}

/// Fixed-length sliding window with O(1) push and mean.
struct Window {
    buf: Vec<f64>,
    cap: usize,
    head: usize,
    len: usize,
    sum: f64,
}

impl Window {
    fn new(cap: usize) -> Self {
        Window {
            buf: vec![0.0; cap],
            cap,
            head: 0,
            len: 0,
            sum: 0.0,
        }
    }

    fn push(&mut self, v: f64) {
        if self.len == self.cap {
            self.sum -= self.buf[self.head];
        } else {
            self.len += 1;
        }
        self.buf[self.head] = v;
        self.sum += v;
        self.head = (self.head + 1) % self.cap;
    }

    fn mean(&self) -> f64 {
        self.sum / self.len as f64
    }

    fn sum(&self) -> f64 {
        self.sum
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TtiRecord {
    pub tti: u32,
    pub rb: u16,
    pub terminal: u16,
    /// Linear SINR of the winning terminal on this RB.
    pub sinr: f64,
    /// Spectral efficiency actually used, bits/symbol.
    pub efficiency: f64,
    pub bits: f64,
}

#[derive(Debug, Clone)]
pub struct SimTrace {
    pub records: Vec<TtiRecord>,
    pub n_terminals: usize,
    pub n_rbs: usize,
    /// TTIs contributing to statistics (after warm-up).
    pub ttis_counted: usize,
    pub tti_s: f64,
    pub bits_per_terminal: Vec<f64>,
    pub scheduled_rb_ttis: Vec<u64>,
}

impl SimTrace {
    pub fn mean_rate_bps(&self, j: usize) -> f64 {
        self.bits_per_terminal[j] / (self.ttis_counted as f64 * self.tti_s)
    }

    pub fn scheduled_share(&self, j: usize) -> f64 {
        self.scheduled_rb_ttis[j] as f64 / (self.ttis_counted as f64 * self.n_rbs as f64)
    }

    pub fn scheduled_sinr_samples(&self, j: usize, rb: usize) -> Vec<f64> {
        self.records
            .iter()
            .filter(|r| r.terminal as usize == j && r.rb as usize == rb)
            .map(|r| r.sinr)
            .collect()
    }

    /// Normalized histogram of the SINR on TTIs where (j, rb) was scheduled.
    pub fn scheduled_sinr_histogram(&self, j: usize, rb: usize, bins: usize) -> Result<Histogram> {
        let samples = self.scheduled_sinr_samples(j, rb);
        if samples.len() < 100 {
            return Err(Error::InsufficientSamples {
                terminal: j,
                rb,
                got: samples.len(),
                need: 100,
            });
        }
        Ok(Histogram::from_samples(&samples, bins))
    }
}

#[derive(Debug, Clone)]
pub struct Histogram {
    pub edges: Vec<f64>,
    pub density: Vec<f64>,
    pub n_samples: usize,
}

impl Histogram {
    pub fn from_samples(samples: &[f64], bins: usize) -> Self {
        let lo = samples.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = samples.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let width = ((hi - lo) / bins as f64).max(f64::MIN_POSITIVE);
        let mut counts = vec![0usize; bins];
        for &s in samples {
            let idx = (((s - lo) / width) as usize).min(bins - 1);
            counts[idx] += 1;
        }
        let norm = samples.len() as f64 * width;
        Histogram {
            edges: (0..=bins).map(|i| lo + i as f64 * width).collect(),
            density: counts.iter().map(|&c| c as f64 / norm).collect(),
            n_samples: samples.len(),
        }
    }
}

/// Run one replication. Deterministic given (scenario, fading, options).
pub fn run(scn: &Scenario, fading: &FadingProcess, opts: &SimOptions) -> Result<SimTrace> {
    scn.validate()?;
    fading.validate()?;
    let w = scn.pfs.window;
    if opts.ttis <= w {
        return Err(Error::Config(format!(
            "ttis ({}) must exceed the PFS window ({w}) to leave data after warm-up",
            opts.ttis
        )));
    }

    let links = scn.build_link_stats::<f64>()?;
    let n_t = scn.n_terminals();
    let n_rb = scn.cell.n_rbs;
    let geom = scn.geometry();
    let re_per_rb = geom.resource_elements();
    let eff = &scn.mcs.efficiency;

    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    // Generator order is fixed: terminals outer, signal then interferer.
    let mut gens: Vec<(GainGen, GainGen)> = (0..n_t)
        .map(|_| {
            (
                GainGen::new(fading, n_rb, &mut rng),
                GainGen::new(fading, n_rb, &mut rng),
            )
        })
        .collect();

    let mut sinr_windows: Vec<Window> = match opts.scheduler {
        SchedulerKind::SinrPfs => (0..n_t * n_rb).map(|_| Window::new(w)).collect(),
        _ => Vec::new(),
    };
    let mut served_windows: Vec<Window> = match opts.scheduler {
        SchedulerKind::RatePfs => (0..n_t).map(|_| Window::new(w)).collect(),
        _ => Vec::new(),
    };
    // Served-bits floor: one RB at the lowest MCS, so cold-start terminals
    // do not divide by zero.
    let floor_bits = re_per_rb * eff.floor_bits_per_symbol();

    let delay = opts.cqi_delay_ttis;
    let mut feedback_hist: Vec<Vec<f64>> = vec![vec![0.0; n_t * n_rb]; delay + 1];

    let mut gs = vec![0.0f64; n_rb];
    let mut gi = vec![0.0f64; n_rb];
    let mut sinr = vec![0.0f64; n_t * n_rb];
    let mut metric = vec![0.0f64; n_t * n_rb];
    let mut assigned: Vec<Vec<u16>> = vec![Vec::new(); n_t];

    let mut records = Vec::new();
    let mut bits_per_terminal = vec![0.0f64; n_t];
    let mut scheduled_rb_ttis = vec![0u64; n_t];

    for t in 0..opts.ttis {
        let time_s = t as f64 * scn.cell.tti_s;
        for j in 0..n_t {
            let (sig_gen, int_gen) = &mut gens[j];
            sig_gen.fill(time_s, &mut rng, &mut gs);
            int_gen.fill(time_s, &mut rng, &mut gi);
            for n in 0..n_rb {
                let l = &links[j][n];
                sinr[j * n_rb + n] = l.p_sig * gs[n] / (l.p_intf * gi[n] + l.noise);
            }
        }

        match opts.scheduler {
            SchedulerKind::SinrPfs => {
                // The window accumulates every TTI's SINR, scheduled or not.
                for idx in 0..n_t * n_rb {
                    sinr_windows[idx].push(sinr[idx]);
                    metric[idx] = sinr[idx] / sinr_windows[idx].mean();
                }
            }
            SchedulerKind::Opportunistic => {
                metric.copy_from_slice(&sinr);
            }
            SchedulerKind::RatePfs => {
                let slot = t % (delay + 1);
                feedback_hist[slot].copy_from_slice(&sinr);
                let fb_slot = (t + 1) % (delay + 1); // oldest = t - delay
                let fb: &Vec<f64> = if t >= delay {
                    &feedback_hist[fb_slot]
                } else {
                    &feedback_hist[slot] // ramp-up: newest available
                };
                for j in 0..n_t {
                    let served = served_windows[j].sum().max(floor_bits);
                    for n in 0..n_rb {
                        let idx = j * n_rb + n;
                        let r_inst = re_per_rb
                            * eff.efficiency(fb[idx]).map_err(|e| e.at(j, n))?;
                        metric[idx] = r_inst / served;
                    }
                }
            }
        }

        for a in assigned.iter_mut() {
            a.clear();
        }
        for n in 0..n_rb {
            let mut best = 0usize;
            let mut best_m = metric[n];
            for j in 1..n_t {
                let m = metric[j * n_rb + n];
                if m > best_m {
                    best_m = m;
                    best = j;
                }
            }
            assigned[best].push(n as u16);
        }

        let counted = t >= w;
        let mut served_bits = vec![0.0f64; n_t];
        for j in 0..n_t {
            if assigned[j].is_empty() {
                continue;
            }
            match scn.mcs.policy {
                McsPolicy::IndependentPerRb => {
                    for &n in &assigned[j] {
                        let g = sinr[j * n_rb + n as usize];
                        let e = eff.efficiency(g).map_err(|er| er.at(j, n as usize))?;
                        let bits = re_per_rb * e;
                        served_bits[j] += bits;
                        if counted {
                            records.push(TtiRecord {
                                tti: t as u32,
                                rb: n,
                                terminal: j as u16,
                                sinr: g,
                                efficiency: e,
                                bits,
                            });
                        }
                    }
                }
                McsPolicy::UniformWorstRb => {
                    let gmin = assigned[j]
                        .iter()
                        .map(|&n| sinr[j * n_rb + n as usize])
                        .fold(f64::INFINITY, f64::min);
                    let e = eff.efficiency(gmin).map_err(|er| er.at(j, 0))?;
                    for &n in &assigned[j] {
                        let g = sinr[j * n_rb + n as usize];
                        let bits = re_per_rb * e;
                        served_bits[j] += bits;
                        if counted {
                            records.push(TtiRecord {
                                tti: t as u32,
                                rb: n,
                                terminal: j as u16,
                                sinr: g,
                                efficiency: e,
                                bits,
                            });
                        }
                    }
                }
            }
            if counted {
                bits_per_terminal[j] += served_bits[j];
                scheduled_rb_ttis[j] += assigned[j].len() as u64;
            }
        }

        if let SchedulerKind::RatePfs = opts.scheduler {
            for j in 0..n_t {
                served_windows[j].push(served_bits[j]);
            }
        }
    }

    Ok(SimTrace {
        records,
        n_terminals: n_t,
        n_rbs: n_rb,
        ttis_counted: opts.ttis - w,
        tti_s: scn.cell.tti_s,
        bits_per_terminal,
        scheduled_rb_ttis,
    })
}

pub fn derive_seeds(master: u64, count: usize) -> Vec<u64> {
    (0..count as u64)
        .map(|i| {
            let mut z = master ^ i.wrapping_mul(0x9E3779B97F4A7C15);
            z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
            z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
            z ^ (z >> 31)
        })
        .collect()
}

/// Run independent replications (in parallel) and return them in seed order.
pub fn run_replications(
    scn: &Scenario,
    fading: &FadingProcess,
    opts: &SimOptions,
    seeds: &[u64],
) -> Result<Vec<SimTrace>> {
    seeds
        .par_iter()
        .map(|&seed| {
            let mut o = opts.clone();
            o.seed = seed;
            run(scn, fading, &o)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Aggregate {
    pub terminal: usize,
    pub mean_rate_bps: f64,
    pub ci95_halfwidth_bps: f64,
    pub scheduled_share: f64,
}

/// Per-terminal mean rate with a normal-approximation 95% confidence
/// half-width across replications.
pub fn aggregate(traces: &[SimTrace]) -> Vec<Aggregate> {
    assert!(!traces.is_empty());
    let n_t = traces[0].n_terminals;
    let k = traces.len() as f64;
    (0..n_t)
        .map(|j| {
            let rates: Vec<f64> = traces.iter().map(|tr| tr.mean_rate_bps(j)).collect();
            let mean = rates.iter().sum::<f64>() / k;
            let ci = if traces.len() > 1 {
                let var =
                    rates.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / (k - 1.0);
                1.96 * (var / k).sqrt()
            } else {
                0.0
            };
            let share =
                traces.iter().map(|tr| tr.scheduled_share(j)).sum::<f64>() / k;
            Aggregate {
                terminal: j,
                mean_rate_bps: mean,
                ci95_halfwidth_bps: ci,
                scheduled_share: share,
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mcs::SpectralEfficiency;
    use crate::scenario::{
        CellConfig, McsConfig, PfsConfig, Power, PowerConfig, Scenario, TerminalPlacement,
    };
    use crate::sinr_dist::{SinrDist, SinrLaw};

    fn scenario(positions: &[f64]) -> Scenario {
        Scenario {
            cell: CellConfig {
                n_rbs: 4,
                subcarriers_per_rb: 12,
                symbols_per_subcarrier: 7,
                tti_s: 1e-3,
                serving_bs_pos_m: 0.0,
                interferer_bs_pos_m: 500.0,
            },
            power: PowerConfig {
                tx_per_rb_signal: Power::from_watts(0.8),
                tx_per_rb_interf: Power::from_watts(0.8),
                noise_per_rb: Power::from_dbm(-112.0),
            },
            pfs: PfsConfig { window: 100 },
            mcs: McsConfig {
                policy: McsPolicy::IndependentPerRb,
                efficiency: SpectralEfficiency::TruncatedShannon { cap: 5.55 },
            },
            terminals: positions
                .iter()
                .enumerate()
                .map(|(i, &p)| TerminalPlacement { id: i, pos_m: p })
                .collect(),
            links: vec![],
        }
    }

    fn opts(scheduler: SchedulerKind, ttis: usize, seed: u64) -> SimOptions {
        SimOptions {
            scheduler,
            ttis,
            seed,
            cqi_delay_ttis: 0,
        }
    }

    #[test]
    fn deterministic_per_seed() {
        let scn = scenario(&[120.0, 240.0]);
        let fading = FadingProcess::default();
        let a = run(&scn, &fading, &opts(SchedulerKind::SinrPfs, 500, 7)).unwrap();
        let b = run(&scn, &fading, &opts(SchedulerKind::SinrPfs, 500, 7)).unwrap();
        assert_eq!(a.records, b.records);
        assert_eq!(a.bits_per_terminal, b.bits_per_terminal);
        let c = run(&scn, &fading, &opts(SchedulerKind::SinrPfs, 500, 8)).unwrap();
        assert_ne!(a.records, c.records);
    }

    #[test]
    fn warmup_guard() {
        let scn = scenario(&[120.0]);
        let err = run(
            &scn,
            &FadingProcess::default(),
            &opts(SchedulerKind::SinrPfs, 100, 1),
        )
        .unwrap_err();
        assert!(matches!(err, Error::Config(_)));
    }

    #[test]
    fn scheduled_shares_partition_the_grid() {
        let scn = scenario(&[100.0, 180.0, 260.0]);
        let tr = run(
            &scn,
            &FadingProcess::default(),
            &opts(SchedulerKind::SinrPfs, 2_000, 3),
        )
        .unwrap();
        let total: f64 = (0..3).map(|j| tr.scheduled_share(j)).sum();
        assert!((total - 1.0).abs() < 1e-12, "{total}");
    }

    #[test]
    fn symmetric_terminals_share_equally_under_pfs() {
        // Co-located terminals: identical SINR laws. (Mirror placement is
        // not enough — swapping signal and interferer powers changes the
        // distribution shape, and PFS shares are 1/2 only for identical
        // laws.) A wide window keeps the rolling SINR averages nearly
        // constant; short windows make the win indicator autocorrelated
        // and overdisperse the share.
        let mut scn = scenario(&[200.0, 200.0]);
        scn.pfs.window = 2_000;
        let tr = run(
            &scn,
            &FadingProcess::default(),
            &opts(SchedulerKind::SinrPfs, 42_000, 11),
        )
        .unwrap();
        for j in 0..2 {
            let s = tr.scheduled_share(j);
            assert!((s - 0.5).abs() < 0.010, "share[{j}] = {s}");
        }
    }

    #[test]
    fn opportunistic_starves_the_weak_terminal() {
        let scn = scenario(&[50.0, 245.0]);
        let tr = run(
            &scn,
            &FadingProcess::default(),
            &opts(SchedulerKind::Opportunistic, 3_000, 5),
        )
        .unwrap();
        assert!(
            tr.scheduled_share(0) > 0.99,
            "strong terminal share {}",
            tr.scheduled_share(0)
        );
    }

    #[test]
    fn single_terminal_sinr_matches_analytic_law() {
        // J = 1: scheduled every TTI, so the scheduled-SINR samples follow
        // the unconditioned law exactly.
        let scn = scenario(&[220.0]);
        let tr = run(
            &scn,
            &FadingProcess::default(),
            &opts(SchedulerKind::SinrPfs, 40_100, 13),
        )
        .unwrap();
        let links = scn.build_link_stats::<f64>().unwrap();
        let law = SinrDist::new(links[0][0], &crate::numerics::QuadratureSpec::default()).unwrap();
        let mut samples = tr.scheduled_sinr_samples(0, 0);
        assert_eq!(samples.len(), 40_000);
        samples.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let n = samples.len() as f64;
        let mut ks = 0.0f64;
        for (i, &x) in samples.iter().enumerate() {
            let f = law.cdf(x).unwrap();
            ks = ks.max((f - i as f64 / n).abs()).max((f - (i + 1) as f64 / n).abs());
        }
        assert!(ks < 0.02, "KS distance {ks}");
    }

    #[test]
    fn worst_rb_mcs_never_beats_per_rb_mcs() {
        let mut scn = scenario(&[150.0, 280.0]);
        let o = opts(SchedulerKind::SinrPfs, 2_000, 21);
        let per_rb = run(&scn, &FadingProcess::default(), &o).unwrap();
        scn.mcs.policy = McsPolicy::UniformWorstRb;
        let uniform = run(&scn, &FadingProcess::default(), &o).unwrap();
        // The SINR-PFS metric ignores the MCS policy, so the schedules
        // coincide and the comparison is TTI-by-TTI.
        for j in 0..2 {
            assert!(
                uniform.bits_per_terminal[j] <= per_rb.bits_per_terminal[j] + 1e-9,
                "terminal {j}"
            );
        }
        assert!(uniform.bits_per_terminal[0] < per_rb.bits_per_terminal[0]);
    }

    #[test]
    fn rate_pfs_runs_and_serves_everyone() {
        let scn = scenario(&[100.0, 200.0, 245.0]);
        let mut o = opts(SchedulerKind::RatePfs, 8_000, 17);
        o.cqi_delay_ttis = 2;
        let tr = run(&scn, &FadingProcess::default(), &o).unwrap();
        for j in 0..3 {
            let r = tr.mean_rate_bps(j);
            assert!(r.is_finite() && r > 0.0, "rate[{j}] = {r}");
        }
    }

    #[test]
    fn block_iid_gain_has_unit_mean() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let n = 200_000;
        let m: f64 = (0..n).map(|_| exp_draw(&mut rng)).sum::<f64>() / n as f64;
        assert!((m - 1.0).abs() < 0.01, "{m}");
    }

    #[test]
    fn jakes_gain_has_unit_mean_power() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mut acc = 0.0;
        let reps = 400;
        for _ in 0..reps {
            let p = SoS::new(&mut rng, 16, 10.0);
            for i in 0..50 {
                let (re, im) = p.sample(i as f64 * 0.011);
                acc += re * re + im * im;
            }
        }
        let m = acc / (reps * 50) as f64;
        assert!((m - 1.0).abs() < 0.05, "{m}");
    }

    /// Bessel J0 by its power series; plenty accurate for |x| <= pi.
    fn j0(x: f64) -> f64 {
        let q = -x * x / 4.0;
        let mut term = 1.0;
        let mut sum = 1.0;
        for k in 1..30 {
            term *= q / ((k * k) as f64);
            sum += term;
        }
        sum
    }

    #[test]
    fn jakes_autocorrelation_follows_clarke_spectrum() {
        // Ensemble-averaged E[h(0) h*(tau)] = J0(2 pi f_d tau).
        let fd = 30.0;
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let procs: Vec<SoS> = (0..1_500).map(|_| SoS::new(&mut rng, 16, fd)).collect();
        for &fd_tau in &[0.1, 0.25, 0.4, 0.5] {
            let tau = fd_tau / fd;
            let mut re = 0.0;
            for p in &procs {
                let (a, b) = p.sample(0.0);
                let (c, d) = p.sample(tau);
                re += a * c + b * d; // Re(h(0) conj h(tau))
            }
            re /= procs.len() as f64;
            let expect = j0(2.0 * std::f64::consts::PI * fd_tau);
            assert!(
                (re - expect).abs() < 0.05,
                "fd*tau = {fd_tau}: {re} vs {expect}"
            );
        }
    }

    #[test]
    fn single_tap_delay_line_is_flat_across_rbs() {
        let fading = FadingProcess {
            mode: FadingMode::BlockIid,
            freq: FreqCorrelation::TappedDelayLine {
                taps: vec![(0.0, 1.0)],
            },
        };
        fading.validate().unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let gen = GainGen::new(&fading, 8, &mut rng);
        let mut out = vec![0.0; 8];
        gen.fill(0.0, &mut rng, &mut out);
        for g in &out[1..] {
            assert!((g - out[0]).abs() < 1e-15);
        }
    }

    #[test]
    fn multi_tap_delay_line_decorrelates_with_spacing() {
        // Two equal taps spaced so that delta_f * tau = 0.25 for adjacent
        // RBs: power correlation cos^2(pi df tau) is 0.5 one RB apart and
        // 0 two apart; mean power stays 1.
        let tau = 0.25 / RB_SPACING_HZ;
        let fading = FadingProcess {
            mode: FadingMode::BlockIid,
            freq: FreqCorrelation::TappedDelayLine {
                taps: vec![(0.0, 0.5), (tau, 0.5)],
            },
        };
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let gen = GainGen::new(&fading, 4, &mut rng);
        let mut out = vec![0.0; 4];
        let n = 40_000;
        let mut mean = 0.0;
        let (mut c01, mut c02) = (0.0, 0.0);
        let mut sq = 0.0;
        for _ in 0..n {
            gen.fill(0.0, &mut rng, &mut out);
            mean += out.iter().sum::<f64>() / 4.0;
            c01 += (out[0] - 1.0) * (out[1] - 1.0);
            c02 += (out[0] - 1.0) * (out[2] - 1.0);
            sq += (out[0] - 1.0) * (out[0] - 1.0);
        }
        mean /= n as f64;
        assert!((mean - 1.0).abs() < 0.02, "mean {mean}");
        let r01 = c01 / sq;
        let r02 = c02 / sq;
        assert!((r01 - 0.5).abs() < 0.05, "adjacent corr {r01}");
        assert!(r02.abs() < 0.05, "two-apart corr {r02}");
    }

    #[test]
    fn bad_fading_configs_rejected() {
        let f = FadingProcess {
            mode: FadingMode::JakesSos {
                oscillators: 0,
                doppler_hz: 5.0,
            },
            freq: FreqCorrelation::IndependentRbs,
        };
        assert!(f.validate().is_err());
        let f = FadingProcess {
            mode: FadingMode::BlockIid,
            freq: FreqCorrelation::TappedDelayLine {
                taps: vec![(0.0, 0.7)],
            },
        };
        assert!(f.validate().is_err());
    }

    #[test]
    fn histogram_needs_samples() {
        let scn = scenario(&[100.0, 240.0]);
        let tr = run(
            &scn,
            &FadingProcess::default(),
            &opts(SchedulerKind::SinrPfs, 150, 2),
        )
        .unwrap();
        // 50 counted TTIs cannot give 100 samples on one (j, rb) cell.
        let err = tr.scheduled_sinr_histogram(0, 0, 20).unwrap_err();
        assert!(matches!(err, Error::InsufficientSamples { .. }));
    }

    #[test]
    fn replications_aggregate_with_ci() {
        let scn = scenario(&[150.0, 250.0]);
        let seeds = derive_seeds(0xABCD, 4);
        assert_eq!(seeds.len(), 4);
        assert!(seeds.windows(2).all(|w| w[0] != w[1]));
        let traces = run_replications(
            &scn,
            &FadingProcess::default(),
            &opts(SchedulerKind::SinrPfs, 1_200, 0),
            &seeds,
        )
        .unwrap();
        let agg = aggregate(&traces);
        assert_eq!(agg.len(), 2);
        for a in &agg {
            assert!(a.mean_rate_bps > 0.0);
            assert!(a.ci95_halfwidth_bps > 0.0);
            assert!(a.ci95_halfwidth_bps < a.mean_rate_bps);
        }
        let single = aggregate(&traces[..1]);
        assert_eq!(single[0].ci95_halfwidth_bps, 0.0);
    }

    #[test]
    fn scheduler_parse_roundtrip() {
        assert_eq!(
            SchedulerKind::parse("sinr_pfs").unwrap(),
            SchedulerKind::SinrPfs
        );
        assert_eq!(
            SchedulerKind::parse("rate_pfs").unwrap(),
            SchedulerKind::RatePfs
        );
        assert!(SchedulerKind::parse("round_robin").is_err());
    }
}
