//! Curve CSV files.

use std::io::Write;
use std::path::Path;

use distauth_core::simkit::DetectionCurve;

use crate::config::ResolvedConfig;
use crate::CliError;

pub const COLUMNS: [&str; 8] = [
    "scheme",
    "label",
    "snr_db",
    "p_d",
    "p_d_stderr",
    "p_fa",
    "p_fa_stderr",
    "trials",
];

/// Full CSV text: `#` header lines carrying the tool version, config digest,
/// seed and resolved config, then one row per (curve, SNR point).
pub fn render_csv(cfg: &ResolvedConfig, curves: &[DetectionCurve]) -> Result<String, CliError> {
    let mut out = Vec::new();
    writeln!(out, "# distauth {}", env!("CARGO_PKG_VERSION"))?;
    writeln!(out, "# config_digest sha256:{}", cfg.digest)?;
    writeln!(out, "# seed {}", cfg.scenario.seed)?;
    for line in cfg.canonical.lines() {
        writeln!(out, "# config {line}")?;
    }
    {
        let mut w = csv::Writer::from_writer(&mut out);
        w.write_record(COLUMNS)?;
        for c in curves {
            for i in 0..c.snr_db.len() {
                w.write_record([
                    c.scheme.as_str().to_string(),
                    c.label.clone(),
                    c.snr_db[i].to_string(),
                    c.p_d[i].to_string(),
                    c.p_d_stderr[i].to_string(),
                    c.p_fa[i].to_string(),
                    c.p_fa_stderr[i].to_string(),
                    c.trials.to_string(),
                ])?;
            }
        }
        w.flush()?;
    }
    Ok(String::from_utf8(out).expect("CSV output is UTF-8"))
}

/// Writes `text` to `path` through a temporary file in the same directory
/// and a rename, so readers never see a partial file.
pub fn write_atomic(path: &Path, text: &str) -> Result<(), CliError> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(text.as_bytes())?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| CliError::Io(e.error))?;
    Ok(())
}

/// One parsed CSV data row.
#[derive(Clone, Debug, PartialEq)]
pub struct Row {
    pub scheme: String,
    pub label: String,
    pub snr_db: f64,
    pub p_d: f64,
    pub p_d_stderr: f64,
    pub p_fa: f64,
    pub p_fa_stderr: f64,
    pub trials: u64,
}

/// Reads the data rows back, skipping `#` header lines.
pub fn parse_csv(text: &str) -> Result<Vec<Row>, CliError> {
    let mut r = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    let bad = |what: &str| CliError::Runtime(format!("malformed CSV field `{what}`"));
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let num = |i: usize| {
            rec.get(i)
                .and_then(|v| v.parse::<f64>().ok())
                .ok_or_else(|| bad(COLUMNS[i]))
        };
        rows.push(Row {
            scheme: rec.get(0).ok_or_else(|| bad("scheme"))?.to_string(),
            label: rec.get(1).ok_or_else(|| bad("label"))?.to_string(),
            snr_db: num(2)?,
            p_d: num(3)?,
            p_d_stderr: num(4)?,
            p_fa: num(5)?,
            p_fa_stderr: num(6)?,
            trials: rec.get(7).and_then(|v| v.parse().ok()).ok_or_else(|| bad("trials"))?,
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::RawConfig;
    use distauth_core::simkit::Scheme;

    fn cfg() -> ResolvedConfig {
        RawConfig::parse(
            "t",
            "scenario.scheme = fc_raw\nscenario.snr_db = 0, 5\ndetector.thresholds = 300\nscenario.seed = 4\n",
        )
        .unwrap()
        .resolve()
        .unwrap()
    }

    #[test]
    fn header_and_round_trip() {
        let c = cfg();
        let curve =
            DetectionCurve::from_counts(Scheme::FcRaw, "delta=300".into(), vec![0.0, 5.0], &[3, 9], &[0, 1], 10);
        let text = render_csv(&c, std::slice::from_ref(&curve)).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert!(lines[0].starts_with("# distauth "));
        assert_eq!(lines[1], format!("# config_digest sha256:{}", c.digest));
        assert_eq!(lines[2], "# seed 4");
        assert!(text.contains("\nscheme,label,snr_db,p_d,p_d_stderr,p_fa,p_fa_stderr,trials\n"));
        assert!(text.contains("\nfc_raw,delta=300,5,0.9,"));
        let rows = parse_csv(&text).unwrap();
        assert_eq!(rows.len(), 2);
        assert_eq!(rows[1].p_d, 0.9);
        assert_eq!(rows[1].p_fa, 0.1);
        assert_eq!(rows[0].p_d_stderr, curve.p_d_stderr[0]);
    }

    #[test]
    fn atomic_write_replaces() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("o.csv");
        write_atomic(&p, "a\n").unwrap();
        write_atomic(&p, "b\n").unwrap();
        assert_eq!(std::fs::read_to_string(&p).unwrap(), "b\n");
        assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 1);
        assert!(write_atomic(&dir.path().join("missing/o.csv"), "x").is_err());
    }
}
