//! Batch front end: run the analytic models, the simulator and the
//! reference predictors over a scenario file and emit CSV/SVG artifacts.

use std::collections::hash_map::DefaultHasher;
use std::hash::{Hash, Hasher};
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

use crate::error::{Error, Result};
use crate::pfs_analytic::{PfsAnalysis, SchedulingMode};
use crate::ref_models::{gaussian_pfs_rate, gaussian_rate_moments, naive_rate, IanDist};
use crate::report::{scenario_digest, write_svg, Series, Table};
use crate::scenario::Scenario;
use crate::simulator::{
    aggregate, derive_seeds, run_replications, FadingProcess, SchedulerKind, SimOptions,
};
use crate::sinr_dist::SinrDist;
use crate::uniform_mcs::{total_rate_uniform, AssignmentDist, AssignmentStrategy, ConditionalDist};
use crate::QuadratureSpec64;

pub const MODEL_NAMES: [&str; 5] = [
    "analytic_indep",
    "analytic_uniform",
    "gaussian",
    "ian",
    "naive",
];

#[derive(Parser)]
#[command(
    name = "pfs-analytica",
    version,
    about = "Throughput models and a TTI-level simulator for proportional fair \
             scheduling in interference-limited OFDMA downlinks"
)]
pub struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Evaluate analytic rate models over a scenario.
    Analyze {
        #[arg(long)]
        scenario: PathBuf,
        /// Comma-separated subset of analytic_indep, analytic_uniform,
        /// gaussian, ian, naive; or "all".
        #[arg(long, default_value = "all")]
        models: String,
        #[arg(long)]
        out: PathBuf,
        /// Optional rate-vs-position line chart.
        #[arg(long)]
        svg: Option<PathBuf>,
    },
    /// Run Monte-Carlo replications and write per-terminal aggregates.
    Simulate {
        #[arg(long)]
        scenario: PathBuf,
        /// sinr_pfs, rate_pfs or opportunistic.
        #[arg(long, default_value = "sinr_pfs")]
        scheduler: String,
        /// Number of replications.
        #[arg(long, default_value_t = 1)]
        seeds: usize,
        #[arg(long, default_value_t = 0)]
        master_seed: u64,
        #[arg(long, default_value_t = 1100)]
        ttis: usize,
        /// block_iid or jakes.
        #[arg(long, default_value = "block_iid")]
        fading: String,
        #[arg(long)]
        out: PathBuf,
        /// Optional per-TTI trace dump of the first replication.
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Compare report CSVs against a baseline (the last file given).
    Compare {
        /// Report files; all must carry the same scenario digest.
        files: Vec<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Re-evaluate the analytic models while moving one terminal.
    Sweep {
        #[arg(long)]
        scenario: PathBuf,
        /// Terminal id to move.
        #[arg(long)]
        terminal: usize,
        /// Position grid "start:stop:step" in meters.
        #[arg(long)]
        positions: String,
        #[arg(long, default_value = "analytic_indep")]
        models: String,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        svg: Option<PathBuf>,
    },
}

/// Entry point; returns the process exit code (0 ok, 1 config, 2 numerical).
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    if let Err(e) = init_threads() {
        eprintln!("error: {e}");
        return 1;
    }
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            // --help/--version land here too; they are not errors.
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            let mut src = std::error::Error::source(&e);
            while let Some(s) = src {
                eprintln!("  caused by: {s}");
                src = s.source();
            }
            if e.is_config() {
                1
            } else {
                2
            }
        }
    }
}

/// `PFS_ANALYTICA_THREADS` caps the rayon pool size.
fn init_threads() -> Result<()> {
    if let Ok(v) = std::env::var("PFS_ANALYTICA_THREADS") {
        let n: usize = v
            .parse()
            .map_err(|_| Error::Config(format!("PFS_ANALYTICA_THREADS={v:?} is not a count")))?;
        if n == 0 {
            return Err(Error::Config("PFS_ANALYTICA_THREADS must be >= 1".into()));
        }
        // Ignore the error if a global pool already exists (tests).
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    Ok(())
}

fn dispatch(cli: Cli) -> Result<()> {
    match cli.cmd {
        Cmd::Analyze {
            scenario,
            models,
            out,
            svg,
        } => analyze(&scenario, &models, &out, svg.as_deref()),
        Cmd::Simulate {
            scenario,
            scheduler,
            seeds,
            master_seed,
            ttis,
            fading,
            out,
            trace,
        } => simulate(
            &scenario,
            &scheduler,
            seeds,
            master_seed,
            ttis,
            &fading,
            &out,
            trace.as_deref(),
        ),
        Cmd::Compare { files, out } => compare(&files, out.as_deref()),
        Cmd::Sweep {
            scenario,
            terminal,
            positions,
            models,
            out,
            svg,
        } => sweep(&scenario, terminal, &positions, &models, &out, svg.as_deref()),
    }
}

fn parse_models(s: &str) -> Result<Vec<&'static str>> {
    if s == "all" {
        return Ok(MODEL_NAMES.to_vec());
    }
    let mut out = Vec::new();
    for name in s.split(',') {
        let name = name.trim();
        match MODEL_NAMES.iter().find(|m| **m == name) {
            Some(&m) => {
                if !out.contains(&m) {
                    out.push(m)
                }
            }
            None => {
                return Err(Error::Config(format!(
                    "unknown model {name:?}; expected one of {} or \"all\"",
                    MODEL_NAMES.join(", ")
                )))
            }
        }
    }
    if out.is_empty() {
        return Err(Error::Config("empty model list".into()));
    }
    Ok(out)
}

/// Stable key per RB column of the link table so RB-invariant scenarios
/// collapse to one model.
fn column_keys(links: &[Vec<crate::scenario::LinkStats<f64>>], n_rbs: usize) -> Vec<u64> {
    (0..n_rbs)
        .map(|rb| {
            let mut h = DefaultHasher::new();
            for row in links {
                row[rb].p_sig.to_bits().hash(&mut h);
                row[rb].p_intf.to_bits().hash(&mut h);
                row[rb].noise.to_bits().hash(&mut h);
            }
            h.finish()
        })
        .collect()
}

/// Per-terminal rates of every requested analytic model, `[model][terminal]`.
pub fn model_rates(scn: &Scenario, models: &[&'static str]) -> Result<Vec<(String, Vec<f64>)>> {
    scn.validate()?;
    let spec = QuadratureSpec64::default();
    let links = scn.build_link_stats::<f64>()?;
    let n_t = scn.n_terminals();
    let n_rb = scn.cell.n_rbs;
    let geom = scn.geometry();
    let eff = &scn.mcs.efficiency;
    let keys = column_keys(&links, n_rb);
    // Map the u64 keys to small dense indices for the uniform-MCS cache.
    let mut dense: Vec<usize> = Vec::with_capacity(n_rb);
    {
        let mut seen: std::collections::HashMap<u64, usize> = Default::default();
        for &k in &keys {
            let next = seen.len();
            dense.push(*seen.entry(k).or_insert(next));
        }
    }

    let needs_proposed = models
        .iter()
        .any(|m| *m == "analytic_indep" || *m == "analytic_uniform");
    let proposed: Option<PfsAnalysis<f64, SinrDist<f64>>> = if needs_proposed {
        let laws: Vec<Vec<SinrDist<f64>>> = (0..n_rb)
            .map(|rb| {
                (0..n_t)
                    .map(|j| SinrDist::new(links[j][rb], &spec).map_err(|e| e.at(j, rb)))
                    .collect()
            })
            .collect::<Result<_>>()?;
        Some(PfsAnalysis::new(
            laws,
            &keys,
            SchedulingMode::ProportionalFair,
            spec,
        )?)
    } else {
        None
    };

    let mut out = Vec::new();
    for &model in models {
        let rates: Vec<f64> = match model {
            "analytic_indep" => {
                let p = proposed.as_ref().unwrap();
                (0..n_t)
                    .map(|j| p.total_rate(j, eff, &geom))
                    .collect::<Result<_>>()?
            }
            "analytic_uniform" => {
                let p = proposed.as_ref().unwrap();
                let strategy = if n_rb <= 16 {
                    AssignmentStrategy::ExactEnumeration
                } else {
                    AssignmentStrategy::MonteCarloAssignments {
                        samples: 100_000,
                        seed: 0xA551,
                    }
                };
                // Minimum-order integrands over many sharply peaked
                // conditional laws need a deeper subdivision budget than
                // the default.
                let uspec = crate::numerics::QuadratureSpec::new(1e-8, 1e-12, 8192)?;
                let mut rates = Vec::with_capacity(n_t);
                for j in 0..n_t {
                    let conds: Vec<ConditionalDist<f64, SinrDist<f64>>> = (0..n_rb)
                        .map(|rb| {
                            // RBs sharing a model share the (costly) CDF
                            // table; build one per distinct column.
                            ConditionalDist::new(p.rb_model(rb), j).map_err(|e| e.at(j, rb))
                        })
                        .collect::<Result<_>>()?;
                    let a = AssignmentDist::new(p.sched_probs(j), strategy.clone())?;
                    rates.push(total_rate_uniform(&a, &conds, &dense, eff, &geom, &uspec)?);
                }
                rates
            }
            "gaussian" => {
                let mut per_column: std::collections::HashMap<u64, Vec<f64>> = Default::default();
                let mut rates = vec![0.0; n_t];
                for rb in 0..n_rb {
                    if !per_column.contains_key(&keys[rb]) {
                        let moments: Vec<(f64, f64)> = (0..n_t)
                            .map(|j| {
                                gaussian_rate_moments(&links[j][rb], eff, &spec)
                                    .map_err(|e| e.at(j, rb))
                            })
                            .collect::<Result<_>>()?;
                        let col: Vec<f64> = (0..n_t)
                            .map(|j| {
                                gaussian_pfs_rate(&moments, j, &geom, &spec)
                                    .map_err(|e| e.at(j, rb))
                            })
                            .collect::<Result<_>>()?;
                        per_column.insert(keys[rb], col);
                    }
                    for (j, r) in per_column[&keys[rb]].iter().enumerate() {
                        rates[j] += r;
                    }
                }
                rates
            }
            "ian" => {
                let laws: Vec<Vec<IanDist<f64>>> = (0..n_rb)
                    .map(|rb| (0..n_t).map(|j| IanDist::new(&links[j][rb])).collect())
                    .collect();
                let p = PfsAnalysis::new(laws, &keys, SchedulingMode::ProportionalFair, spec)?;
                (0..n_t)
                    .map(|j| p.total_rate(j, eff, &geom))
                    .collect::<Result<_>>()?
            }
            "naive" => (0..n_t)
                .map(|j| naive_rate(&links[j], n_t, eff, &geom))
                .collect::<Result<_>>()?,
            other => unreachable!("validated model name {other}"),
        };
        out.push((model.to_string(), rates));
    }
    Ok(out)
}

fn fmt(v: f64) -> String {
    format!("{v:.6}")
}

fn analyze(scenario: &Path, models: &str, out: &Path, svg: Option<&Path>) -> Result<()> {
    let scn = Scenario::load(scenario)?;
    let models = parse_models(models)?;
    let digest = scenario_digest(&scn);
    let rates = model_rates(&scn, &models)?;

    let mut header: Vec<&str> = vec!["terminal", "pos_m"];
    header.extend(models.iter());
    let mut table = Table::new(&digest, &header);
    for j in 0..scn.n_terminals() {
        let mut row = vec![j.to_string(), fmt(scn.terminals[j].pos_m)];
        row.extend(rates.iter().map(|(_, r)| fmt(r[j])));
        table.push(row);
    }
    table.write(out)?;

    // Per-(terminal, RB) scheduling probabilities as a companion file when
    // the scheduled-SINR pipeline ran.
    if models.contains(&"analytic_indep") {
        let spec = QuadratureSpec64::default();
        let links = scn.build_link_stats::<f64>()?;
        let keys = column_keys(&links, scn.cell.n_rbs);
        let laws: Vec<Vec<SinrDist<f64>>> = (0..scn.cell.n_rbs)
            .map(|rb| {
                (0..scn.n_terminals())
                    .map(|j| SinrDist::new(links[j][rb], &spec).map_err(|e| e.at(j, rb)))
                    .collect()
            })
            .collect::<Result<_>>()?;
        let p = PfsAnalysis::new(laws, &keys, SchedulingMode::ProportionalFair, spec)?;
        let mut probs = Table::new(&digest, &["terminal", "rb", "sched_prob"]);
        for j in 0..scn.n_terminals() {
            for (rb, pr) in p.sched_probs(j).iter().enumerate() {
                probs.push(vec![j.to_string(), rb.to_string(), format!("{pr:.9}")]);
            }
        }
        probs.write(&out.with_extension("probs.csv"))?;
    }

    if let Some(svg_path) = svg {
        let series: Vec<Series> = rates
            .iter()
            .map(|(name, r)| Series {
                label: name.clone(),
                points: scn
                    .terminals
                    .iter()
                    .zip(r)
                    .map(|(t, &y)| (t.pos_m, y))
                    .collect(),
            })
            .collect();
        write_svg(svg_path, "per-terminal rate", "position [m]", "rate [bit/s]", &series)?;
    }
    Ok(())
}

fn parse_fading(s: &str) -> Result<FadingProcess> {
    match s {
        "block_iid" => Ok(FadingProcess::default()),
        "jakes" => Ok(FadingProcess::jakes_default()),
        other => Err(Error::Config(format!(
            "unknown fading {other:?}; expected block_iid or jakes"
        ))),
    }
}

#[allow(clippy::too_many_arguments)]
fn simulate(
    scenario: &Path,
    scheduler: &str,
    seeds: usize,
    master_seed: u64,
    ttis: usize,
    fading: &str,
    out: &Path,
    trace: Option<&Path>,
) -> Result<()> {
    let scn = Scenario::load(scenario)?;
    let sched = SchedulerKind::parse(scheduler)?;
    let fading = parse_fading(fading)?;
    if seeds == 0 {
        return Err(Error::Config("seeds must be >= 1".into()));
    }
    let digest = scenario_digest(&scn);
    let opts = SimOptions {
        scheduler: sched,
        ttis,
        seed: 0,
        cqi_delay_ttis: 0,
    };
    let seed_list = derive_seeds(master_seed, seeds);
    let traces = run_replications(&scn, &fading, &opts, &seed_list)?;
    let agg = aggregate(&traces);

    let mut table = Table::new(
        &digest,
        &["terminal", "mean_rate_bps", "ci95_halfwidth_bps", "scheduled_share"],
    );
    for a in &agg {
        table.push(vec![
            a.terminal.to_string(),
            fmt(a.mean_rate_bps),
            fmt(a.ci95_halfwidth_bps),
            format!("{:.9}", a.scheduled_share),
        ]);
    }
    table.write(out)?;

    if let Some(trace_path) = trace {
        let mut t = Table::new(
            &digest,
            &["tti", "rb", "terminal", "sinr_db", "efficiency_bits_per_symbol", "bits"],
        );
        for r in &traces[0].records {
            t.push(vec![
                r.tti.to_string(),
                r.rb.to_string(),
                r.terminal.to_string(),
                fmt(10.0 * r.sinr.log10()),
                fmt(r.efficiency),
                fmt(r.bits),
            ]);
        }
        t.write(trace_path)?;
    }
    Ok(())
}

/// Baseline rate column: the simulator aggregate column when present,
/// otherwise the first non-key column.
fn rate_column(t: &Table) -> Result<usize> {
    if let Ok(c) = t.col("mean_rate_bps") {
        return Ok(c);
    }
    t.header
        .iter()
        .position(|h| h != "terminal" && h != "pos_m")
        .ok_or_else(|| Error::Config("report has no rate columns".into()))
}

fn compare(files: &[PathBuf], out: Option<&Path>) -> Result<()> {
    if files.len() < 2 {
        return Err(Error::Config(
            "compare needs at least two report files; the last is the baseline".into(),
        ));
    }
    let tables: Vec<Table> = files.iter().map(|p| Table::read(p)).collect::<Result<_>>()?;
    let baseline = tables.last().unwrap();
    for t in &tables {
        t.check_digest(&baseline.digest)?;
    }
    let base_tcol = baseline.col("terminal")?;
    let base_rcol = rate_column(baseline)?;
    let base_rates: std::collections::HashMap<&str, &str> = baseline
        .rows
        .iter()
        .map(|r| (r[base_tcol].as_str(), r[base_rcol].as_str()))
        .collect();

    let mut result = Table::new(
        &baseline.digest,
        &["terminal", "column", "value_bps", "baseline_bps", "rel_err"],
    );
    let mut summary: Vec<(String, f64, f64, usize)> = Vec::new(); // (col, sum|e|, max|e|, n)
    for t in &tables[..tables.len() - 1] {
        let tcol = t.col("terminal")?;
        for (ci, name) in t.header.iter().enumerate() {
            if matches!(name.as_str(), "terminal" | "pos_m" | "ci95_halfwidth_bps" | "scheduled_share") {
                continue;
            }
            let mut acc = (0.0f64, 0.0f64, 0usize);
            for row in &t.rows {
                let term = row[tcol].as_str();
                let base_str = match name.as_str() {
                    // Same column in the baseline takes precedence; else
                    // compare against the baseline rate column.
                    _ if baseline.col(name).is_ok() => {
                        let bc = baseline.col(name)?;
                        baseline
                            .rows
                            .iter()
                            .find(|r| r[base_tcol] == *term)
                            .map(|r| r[bc].as_str())
                    }
                    _ => base_rates.get(term).copied(),
                };
                let Some(base_str) = base_str else {
                    return Err(Error::Config(format!(
                        "terminal {term} missing from baseline report"
                    )));
                };
                let v: f64 = row[ci]
                    .parse()
                    .map_err(|_| Error::Config(format!("bad number {:?}", row[ci])))?;
                let b: f64 = base_str
                    .parse()
                    .map_err(|_| Error::Config(format!("bad number {base_str:?}")))?;
                let rel = if b != 0.0 { (v - b) / b } else { 0.0 };
                result.push(vec![
                    term.to_string(),
                    name.clone(),
                    fmt(v),
                    fmt(b),
                    format!("{rel:.6}"),
                ]);
                acc = (acc.0 + rel.abs(), acc.1.max(rel.abs()), acc.2 + 1);
            }
            if acc.2 > 0 {
                summary.push((name.clone(), acc.0, acc.1, acc.2));
            }
        }
    }
    for (name, sum, max, n) in &summary {
        println!(
            "{name}: mean |rel err| = {:.4}, max |rel err| = {:.4} over {n} terminals",
            sum / *n as f64,
            max
        );
    }
    if let Some(out) = out {
        result.write(out)?;
    }
    Ok(())
}

fn parse_grid(s: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = s.split(':').collect();
    if parts.len() != 3 {
        return Err(Error::Config(format!(
            "positions must be start:stop:step, got {s:?}"
        )));
    }
    let nums: Vec<f64> = parts
        .iter()
        .map(|p| {
            p.parse()
                .map_err(|_| Error::Config(format!("bad grid number {p:?}")))
        })
        .collect::<Result<_>>()?;
    let (start, stop, step) = (nums[0], nums[1], nums[2]);
    if !(step > 0.0) || stop < start {
        return Err(Error::Config("grid needs step > 0 and stop >= start".into()));
    }
    let mut out = Vec::new();
    let mut i = 0usize;
    loop {
        let x = start + step * i as f64;
        if x > stop + 1e-9 {
            break;
        }
        out.push(x);
        i += 1;
    }
    Ok(out)
}

fn sweep(
    scenario: &Path,
    terminal: usize,
    positions: &str,
    models: &str,
    out: &Path,
    svg: Option<&Path>,
) -> Result<()> {
    let base = Scenario::load(scenario)?;
    if terminal >= base.n_terminals() {
        return Err(Error::Config(format!(
            "sweep terminal {terminal} out of range (scenario has {})",
            base.n_terminals()
        )));
    }
    let models = parse_models(models)?;
    let grid = parse_grid(positions)?;
    let digest = scenario_digest(&base);

    let mut header: Vec<&str> = vec!["position_m"];
    header.extend(models.iter());
    let mut table = Table::new(&digest, &header);
    let mut series: Vec<Series> = models
        .iter()
        .map(|m| Series {
            label: m.to_string(),
            points: Vec::new(),
        })
        .collect();
    for &pos in &grid {
        let mut scn = base.clone();
        scn.terminals[terminal].pos_m = pos;
        scn.validate()?;
        let rates = model_rates(&scn, &models)?;
        let mut row = vec![fmt(pos)];
        for (i, (_, r)) in rates.iter().enumerate() {
            row.push(fmt(r[terminal]));
            series[i].points.push((pos, r[terminal]));
        }
        table.push(row);
    }
    table.write(out)?;
    if let Some(svg_path) = svg {
        write_svg(
            svg_path,
            &format!("terminal {terminal} rate vs position"),
            "position [m]",
            "rate [bit/s]",
            &series,
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn model_list_parsing() {
        assert_eq!(parse_models("all").unwrap(), MODEL_NAMES.to_vec());
        assert_eq!(
            parse_models("naive, gaussian").unwrap(),
            vec!["naive", "gaussian"]
        );
        assert!(parse_models("frobnicate").is_err());
        assert!(parse_models("").is_err());
    }

    #[test]
    fn grid_parsing() {
        assert_eq!(parse_grid("0:10:5").unwrap(), vec![0.0, 5.0, 10.0]);
        assert_eq!(parse_grid("25:26:25").unwrap(), vec![25.0]);
        assert!(parse_grid("10:0:5").is_err());
        assert!(parse_grid("1:2").is_err());
        assert!(parse_grid("a:b:c").is_err());
    }
}
