use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use anyhow::{bail, Context, Result};
use epirisk::config::RunConfig;
use epirisk::ingest::{parse_registry, parse_trajectories, CaseRegistry, DayClock, ParseOptions};
use epirisk::riskfield::{parse_risk_map_file_name, read_risk_map, RiskMap};
use epirisk::{Corpus, DayIndex};

pub fn load_config(path: Option<&Path>) -> Result<RunConfig> {
    let Some(path) = path else {
        log::info!("no --config given; using built-in defaults");
        return Ok(RunConfig::default());
    };
    let text = fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
    let (cfg, _warnings) = RunConfig::parse(&text).with_context(|| format!("in config {}", path.display()))?;
    Ok(cfg)
}

pub fn open(path: &Path) -> Result<BufReader<File>> {
    Ok(BufReader::new(File::open(path).with_context(|| format!("opening {}", path.display()))?))
}

pub fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    Ok(BufWriter::new(File::create(path).with_context(|| format!("creating {}", path.display()))?))
}

/// Runs `write` against a buffered file and flushes it.
pub fn write_file(path: &Path, write: impl FnOnce(&mut BufWriter<File>) -> Result<()>) -> Result<()> {
    let mut out = create(path)?;
    write(&mut out)?;
    out.flush().with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

pub fn read_corpus(path: &Path) -> Result<Corpus> {
    let parsed = parse_trajectories(open(path)?, &ParseOptions::default())
        .with_context(|| format!("parsing {}", path.display()))?;
    let r = parsed.rejected;
    if r.malformed + r.bad_coordinates + r.bad_timestamp > 0 {
        log::warn!(
            "{}: rejected {} malformed, {} bad-coordinate, {} bad-timestamp rows",
            path.display(),
            r.malformed,
            r.bad_coordinates,
            r.bad_timestamp
        );
    }
    let corpus = Corpus::from_records(&parsed.records);
    log::info!(
        "{}: {} records, {} users, {} cells",
        path.display(),
        corpus.record_count(),
        corpus.users().len(),
        corpus.cells().len()
    );
    Ok(corpus)
}

pub fn read_registry(path: &Path) -> Result<CaseRegistry> {
    let registry = parse_registry(open(path)?).with_context(|| format!("parsing {}", path.display()))?;
    log::info!("{}: {} entries, {} confirmed", path.display(), registry.len(), registry.confirmed().count());
    Ok(registry)
}

/// Every `riskmap_DAY.csv` in `dir`, ordered by day.
pub fn read_map_dir(dir: &Path) -> Result<Vec<RiskMap>> {
    let mut found: Vec<(DayIndex, std::path::PathBuf)> = Vec::new();
    for entry in fs::read_dir(dir).with_context(|| format!("listing {}", dir.display()))? {
        let path = entry?.path();
        if let Some(day) = path.file_name().and_then(|n| n.to_str()).and_then(parse_risk_map_file_name) {
            found.push((day, path));
        }
    }
    if found.is_empty() {
        bail!("no riskmap_DAY.csv files in {}", dir.display());
    }
    found.sort();
    found
        .into_iter()
        .map(|(day, p)| read_risk_map(open(&p)?, day).with_context(|| format!("reading {}", p.display())))
        .collect()
}

fn parse_day(s: &str, clock: &DayClock) -> Result<DayIndex> {
    if let Ok(d) = s.parse::<DayIndex>() {
        return Ok(d);
    }
    let date = chrono::NaiveDate::parse_from_str(s, "%Y-%m-%d").with_context(|| format!("bad day `{s}`"))?;
    Ok(clock.day_of_date(date))
}

/// `A..B`, inclusive.
pub fn parse_day_range(s: &str, clock: &DayClock) -> Result<(DayIndex, DayIndex)> {
    let Some((a, b)) = s.split_once("..") else {
        bail!("day range must look like A..B, got `{s}`");
    };
    let (a, b) = (parse_day(a.trim(), clock)?, parse_day(b.trim(), clock)?);
    if a > b {
        bail!("empty day range {a}..{b}");
    }
    Ok((a, b))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn day_ranges() {
        let c = DayClock::default();
        assert_eq!(parse_day_range("3..5", &c).unwrap(), (3, 5));
        assert_eq!(parse_day_range("2020-01-02..2020-01-04", &c).unwrap(), (1, 3));
        assert!(parse_day_range("5..3", &c).is_err());
        assert!(parse_day_range("5", &c).is_err());
    }
}
