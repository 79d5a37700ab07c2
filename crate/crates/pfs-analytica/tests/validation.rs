//! Statistical cross-checks between the simulator and the analytic layer
//! beyond what the acceptance gate pins down: finite-window convergence,
//! the worst-RB minimum law, and fading-model invariance of the SINR
//! marginal.

use pfs_analytica::cli::model_rates;
use pfs_analytica::pfs_analytic::{PfsAnalysis, SchedulingMode};
use pfs_analytica::scenario::{
    CellConfig, McsConfig, McsPolicy, PfsConfig, Power, PowerConfig, Scenario, TerminalPlacement,
};
use pfs_analytica::simulator::{
    aggregate, derive_seeds, run, run_replications, FadingProcess, SchedulerKind, SimOptions,
};
use pfs_analytica::sinr_dist::{SinrDist, SinrLaw};
use pfs_analytica::uniform_mcs::{min_order_cdf, ConditionalDist};
use pfs_analytica::QuadratureSpec64;
use pfs_analytica::SpectralEfficiency64;

fn scenario(positions: &[f64], n_rbs: usize, window: usize) -> Scenario {
    Scenario {
        cell: CellConfig {
            n_rbs,
            subcarriers_per_rb: 12,
            symbols_per_subcarrier: 7,
            tti_s: 0.001,
            serving_bs_pos_m: 0.0,
            interferer_bs_pos_m: 500.0,
        },
        power: PowerConfig {
            tx_per_rb_signal: Power::from_watts(0.8),
            tx_per_rb_interf: Power::from_watts(0.8),
            noise_per_rb: Power::from_dbm(-112.0),
        },
        pfs: PfsConfig { window },
        mcs: McsConfig {
            policy: McsPolicy::IndependentPerRb,
            efficiency: SpectralEfficiency64::TruncatedShannon { cap: 5.55 },
        },
        terminals: positions
            .iter()
            .enumerate()
            .map(|(id, &pos_m)| TerminalPlacement { id, pos_m })
            .collect(),
        links: Vec::new(),
    }
}

fn opts(ttis: usize) -> SimOptions {
    SimOptions {
        scheduler: SchedulerKind::SinrPfs,
        ttis,
        seed: 0,
        cqi_delay_ttis: 0,
    }
}

fn ks_statistic(samples: &mut [f64], cdf: impl Fn(f64) -> f64) -> f64 {
    samples.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = samples.len() as f64;
    let mut ks = 0.0f64;
    for (i, &x) in samples.iter().enumerate() {
        let f = cdf(x);
        ks = ks.max((f - i as f64 / n).abs()).max(((i + 1) as f64 / n - f).abs());
    }
    ks
}

/// Mean absolute relative gap between simulated and analytic rates.
fn rate_gap(scn: &Scenario, analytic: &[f64], ttis: usize, seeds: &[u64]) -> f64 {
    let traces = run_replications(scn, &FadingProcess::default(), &opts(ttis), seeds).unwrap();
    let agg = aggregate(&traces);
    agg.iter()
        .zip(analytic)
        .map(|(a, &m)| ((a.mean_rate_bps - m) / m).abs())
        .sum::<f64>()
        / analytic.len() as f64
}

/// The analytic predictor is the infinite-window limit of SINR-based PFS;
/// widening the simulator window must shrink the gap to it.
#[test]
fn finite_window_bias_shrinks() {
    let base = scenario(&[150.0, 250.0, 350.0], 2, 50);
    let analytic = &model_rates(&base, &["analytic_indep"]).unwrap()[0].1;
    let seeds = derive_seeds(2718, 8);

    let gap: Vec<f64> = [50usize, 500, 5000]
        .iter()
        .map(|&w| {
            let mut scn = base.clone();
            scn.pfs.window = w;
            rate_gap(&scn, analytic, w + 30_000, &seeds)
        })
        .collect();
    assert!(
        gap[0] > gap[1] && gap[1] > gap[2],
        "gaps not shrinking: {gap:?}"
    );
    assert!(gap[2] < 0.01, "wide-window gap too large: {}", gap[2]);
}

/// Per-TTI minimum of a terminal's scheduled SINRs across its assigned RBs
/// follows the minimum-order law of the conditional distributions.
#[test]
fn worst_rb_minimum_matches_order_law() {
    let n_rb = 3;
    let mut scn = scenario(&[200.0, 200.0], n_rb, 2000);
    scn.mcs.policy = McsPolicy::UniformWorstRb;
    let mut o = opts(42_000);
    o.seed = 31;
    let trace = run(&scn, &FadingProcess::default(), &o).unwrap();

    // Minimum scheduled SINR of terminal 0 in TTIs where it won every RB.
    let mut per_tti: std::collections::HashMap<u32, (usize, f64)> = Default::default();
    for r in &trace.records {
        if r.terminal == 0 {
            let e = per_tti.entry(r.tti).or_insert((0, f64::INFINITY));
            e.0 += 1;
            e.1 = e.1.min(r.sinr);
        }
    }
    let mut samples: Vec<f64> = per_tti
        .values()
        .filter(|(k, _)| *k == n_rb)
        .map(|&(_, m)| m)
        .collect();
    assert!(samples.len() > 3000, "only {} full-assignment TTIs", samples.len());

    let spec = QuadratureSpec64::default();
    let links = scn.build_link_stats::<f64>().unwrap();
    let laws: Vec<Vec<SinrDist<f64>>> = (0..n_rb)
        .map(|rb| (0..2).map(|j| SinrDist::new(links[j][rb], &spec).unwrap()).collect())
        .collect();
    let keys = vec![0u64; n_rb];
    let p = PfsAnalysis::new(laws, &keys, SchedulingMode::ProportionalFair, spec).unwrap();
    let conds: Vec<ConditionalDist<f64, SinrDist<f64>>> = (0..n_rb)
        .map(|rb| ConditionalDist::new(p.rb_model(rb), 0).unwrap())
        .collect();
    let refs: Vec<&ConditionalDist<f64, SinrDist<f64>>> = conds.iter().collect();

    let ks = ks_statistic(&mut samples, |x| min_order_cdf(&refs, x).unwrap());
    assert!(ks < 0.03, "KS = {ks}");
}

/// Time-correlated fading changes the sample path, not the stationary SINR
/// law: a single-terminal run under the sum-of-sinusoids process must still
/// match the analytic marginal. Samples are correlated, so the KS bound is
/// looser than the i.i.d. case.
#[test]
fn correlated_fading_keeps_sinr_marginal() {
    let scn = scenario(&[250.0], 1, 100);
    let mut o = opts(200_100);
    o.seed = 7;
    let trace = run(&scn, &FadingProcess::jakes_default(), &o).unwrap();
    let mut samples = trace.scheduled_sinr_samples(0, 0);
    assert_eq!(samples.len(), 200_000);

    let spec = QuadratureSpec64::default();
    let links = scn.build_link_stats::<f64>().unwrap();
    let law = SinrDist::new(links[0][0], &spec).unwrap();
    let ks = ks_statistic(&mut samples, |x| law.cdf(x).unwrap());
    assert!(ks < 0.05, "KS = {ks}");
}
