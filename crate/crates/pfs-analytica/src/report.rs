//! Output artifacts: scenario digests, CSV tables (with the digest pinned
//! in a comment line so results can be matched back to their scenario),
//! and a minimal SVG line plot.

use sha2::{Digest, Sha256};
use std::path::Path;

use crate::error::{Error, Result};
use crate::scenario::Scenario;

/// SHA-256 of the canonical (re-serialized) scenario TOML, hex-encoded.
/// Semantically equal scenarios digest equally regardless of formatting.
pub fn scenario_digest(scn: &Scenario) -> String {
    let mut h = Sha256::new();
    h.update(scn.to_toml_string().as_bytes());
    let out = h.finalize();
    out.iter().map(|b| format!("{b:02x}")).collect()
}

/// A CSV table whose first line is `# scenario_digest=<hex>`.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub digest: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(digest: &str, header: &[&str]) -> Self {
        Table {
            digest: digest.to_string(),
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        assert_eq!(row.len(), self.header.len(), "row width mismatch");
        self.rows.push(row);
    }

    pub fn to_csv_string(&self) -> String {
        let mut s = format!("# scenario_digest={}\n", self.digest);
        s.push_str(&self.header.join(","));
        s.push('\n');
        for row in &self.rows {
            s.push_str(&row.join(","));
            s.push('\n');
        }
        s
    }

    pub fn from_csv_str(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        let first = lines
            .next()
            .ok_or_else(|| Error::Config("empty CSV".into()))?;
        let digest = first
            .strip_prefix("# scenario_digest=")
            .ok_or_else(|| Error::Config("CSV missing '# scenario_digest=' line".into()))?
            .trim()
            .to_string();
        let header = lines
            .next()
            .ok_or_else(|| Error::Config("CSV missing header".into()))?
            .split(',')
            .map(|s| s.to_string())
            .collect::<Vec<_>>();
        let mut rows = Vec::new();
        for (i, line) in lines.enumerate() {
            if line.is_empty() {
                continue;
            }
            let row: Vec<String> = line.split(',').map(|s| s.to_string()).collect();
            if row.len() != header.len() {
                return Err(Error::Config(format!(
                    "CSV row {} has {} fields, header has {}",
                    i + 3,
                    row.len(),
                    header.len()
                )));
            }
            rows.push(row);
        }
        Ok(Table {
            digest,
            header,
            rows,
        })
    }

    /// Column index by name.
    pub fn col(&self, name: &str) -> Result<usize> {
        self.header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::Config(format!("CSV column {name:?} not found")))
    }

    pub fn check_digest(&self, expected: &str) -> Result<()> {
        if self.digest != expected {
            return Err(Error::DigestMismatch {
                a: self.digest.clone(),
                b: expected.to_string(),
            });
        }
        Ok(())
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        write_atomic(path, self.to_csv_string().as_bytes())
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::from_csv_str(&std::fs::read_to_string(path)?)
    }
}

/// Write via a temp file in the target directory plus rename, so readers
/// never observe a half-written file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty());
    let tmp = match dir {
        Some(d) => d.join(format!(
            ".{}.tmp",
            path.file_name().unwrap_or_default().to_string_lossy()
        )),
        None => std::path::PathBuf::from(format!(
            ".{}.tmp",
            path.file_name().unwrap_or_default().to_string_lossy()
        )),
    };
    std::fs::write(&tmp, bytes)?;
    std::fs::rename(&tmp, path)?;
    Ok(())
}

/// One labelled line of an SVG plot.
#[derive(Debug, Clone)]
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

const SVG_COLORS: [&str; 6] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf",
];

/// Minimal multi-series line plot; enough to eyeball rate-vs-position
/// curves without pulling in a plotting stack.
pub fn render_svg(title: &str, x_label: &str, y_label: &str, series: &[Series]) -> String {
    let (w, h) = (720.0, 480.0);
    let (ml, mr, mt, mb) = (70.0, 20.0, 40.0, 50.0);
    let pts: Vec<(f64, f64)> = series.iter().flat_map(|s| s.points.iter().cloned()).collect();
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, 0.0f64, f64::NEG_INFINITY);
    for &(x, y) in &pts {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    if !x0.is_finite() || x1 <= x0 {
        x0 = 0.0;
        x1 = 1.0;
    }
    if !y1.is_finite() || y1 <= y0 {
        y1 = y0 + 1.0;
    }
    let sx = |x: f64| ml + (x - x0) / (x1 - x0) * (w - ml - mr);
    let sy = |y: f64| h - mb - (y - y0) / (y1 - y0) * (h - mt - mb);
    let mut svg = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" \
         viewBox=\"0 0 {w} {h}\" font-family=\"sans-serif\" font-size=\"12\">\n\
         <rect width=\"{w}\" height=\"{h}\" fill=\"white\"/>\n\
         <text x=\"{}\" y=\"24\" text-anchor=\"middle\" font-size=\"15\">{title}</text>\n",
        w / 2.0
    );
    // Axes.
    svg.push_str(&format!(
        "<line x1=\"{ml}\" y1=\"{0}\" x2=\"{1}\" y2=\"{0}\" stroke=\"black\"/>\n\
         <line x1=\"{ml}\" y1=\"{mt}\" x2=\"{ml}\" y2=\"{0}\" stroke=\"black\"/>\n",
        h - mb,
        w - mr
    ));
    svg.push_str(&format!(
        "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">{x_label}</text>\n\
         <text x=\"16\" y=\"{}\" text-anchor=\"middle\" transform=\"rotate(-90 16 {})\">{y_label}</text>\n",
        (ml + w - mr) / 2.0,
        h - 12.0,
        (mt + h - mb) / 2.0,
        (mt + h - mb) / 2.0
    ));
    // Tick labels at the extremes.
    svg.push_str(&format!(
        "<text x=\"{ml}\" y=\"{0}\" text-anchor=\"middle\">{x0:.3}</text>\n\
         <text x=\"{1}\" y=\"{0}\" text-anchor=\"middle\">{x1:.3}</text>\n\
         <text x=\"{2}\" y=\"{3}\" text-anchor=\"end\">{y0:.3e}</text>\n\
         <text x=\"{2}\" y=\"{mt}\" text-anchor=\"end\">{y1:.3e}</text>\n",
        h - mb + 16.0,
        w - mr,
        ml - 6.0,
        h - mb
    ));
    for (i, s) in series.iter().enumerate() {
        let color = SVG_COLORS[i % SVG_COLORS.len()];
        let path: Vec<String> = s
            .points
            .iter()
            .map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y)))
            .collect();
        svg.push_str(&format!(
            "<polyline fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\" points=\"{}\"/>\n",
            path.join(" ")
        ));
        svg.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" fill=\"{color}\">{}</text>\n",
            w - mr - 150.0,
            mt + 16.0 * (i + 1) as f64,
            s.label
        ));
    }
    svg.push_str("</svg>\n");
    svg
}

pub fn write_svg(path: &Path, title: &str, x_label: &str, y_label: &str, series: &[Series]) -> Result<()> {
    write_atomic(path, render_svg(title, x_label, y_label, series).as_bytes())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mcs::SpectralEfficiency;
    use crate::scenario::{
        CellConfig, McsConfig, McsPolicy, PfsConfig, Power, PowerConfig, TerminalPlacement,
    };

    fn scn() -> Scenario {
        Scenario {
            cell: CellConfig {
                n_rbs: 2,
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
            terminals: vec![TerminalPlacement { id: 0, pos_m: 100.0 }],
            links: vec![],
        }
    }

    #[test]
    fn digest_is_stable_and_semantic() {
        let a = scenario_digest(&scn());
        let b = scenario_digest(&scn());
        assert_eq!(a, b);
        assert_eq!(a.len(), 64);
        // Formatting-only changes don't alter the digest.
        let text = scn().to_toml_string().replace('\n', "\n\n");
        let reparsed = Scenario::from_toml_str(&text).unwrap();
        assert_eq!(scenario_digest(&reparsed), a);
        // Semantic changes do.
        let mut other = scn();
        other.terminals[0].pos_m = 101.0;
        assert_ne!(scenario_digest(&other), a);
    }

    #[test]
    fn csv_roundtrip() {
        let mut t = Table::new("deadbeef", &["terminal", "rate_bps"]);
        t.push(vec!["0".into(), "1234.5".into()]);
        t.push(vec!["1".into(), "6789.0".into()]);
        let text = t.to_csv_string();
        assert!(text.starts_with("# scenario_digest=deadbeef\n"));
        let back = Table::from_csv_str(&text).unwrap();
        assert_eq!(t, back);
        assert_eq!(back.col("rate_bps").unwrap(), 1);
        assert!(back.col("nope").is_err());
    }

    #[test]
    fn digest_check() {
        let t = Table::new("aa", &["x"]);
        assert!(t.check_digest("aa").is_ok());
        let err = t.check_digest("bb").unwrap_err();
        assert!(matches!(err, Error::DigestMismatch { .. }));
        assert!(err.is_config());
    }

    #[test]
    fn malformed_csv_rejected() {
        assert!(Table::from_csv_str("").is_err());
        assert!(Table::from_csv_str("terminal,rate\n0,1\n").is_err());
        let bad = "# scenario_digest=x\na,b\n1,2,3\n";
        assert!(Table::from_csv_str(bad).is_err());
    }

    #[test]
    fn atomic_write_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("out.csv");
        let mut t = Table::new("cafe", &["a"]);
        t.push(vec!["1".into()]);
        t.write(&path).unwrap();
        assert_eq!(Table::read(&path).unwrap(), t);
        // No temp file left behind.
        assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 1);
    }

    #[test]
    fn svg_contains_series() {
        let s = render_svg(
            "rates",
            "position [m]",
            "rate [bit/s]",
            &[
                Series {
                    label: "model".into(),
                    points: vec![(0.0, 1.0), (1.0, 2.0), (2.0, 1.5)],
                },
                Series {
                    label: "sim".into(),
                    points: vec![(0.0, 1.1), (1.0, 2.1)],
                },
            ],
        );
        assert!(s.starts_with("<svg"));
        assert!(s.contains("polyline"));
        assert!(s.contains("model") && s.contains("sim"));
        assert!(s.trim_end().ends_with("</svg>"));
    }
}
