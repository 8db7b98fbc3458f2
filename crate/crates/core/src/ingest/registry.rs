use std::collections::BTreeMap;
use std::io::{Read, Write};

use chrono::NaiveDate;

use crate::error::{Error, Result};

pub const REGISTRY_HEADER: [&str; 4] = ["user_id", "label", "confirmed_date", "recovery_days"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Label {
    Normal,
    Confirmed,
}

impl Label {
    pub fn as_str(self) -> &'static str {
        match self {
            Label::Normal => "normal",
            Label::Confirmed => "confirmed",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CaseEntry {
    pub user_id: String,
    pub label: Label,
    pub confirmed_date: Option<NaiveDate>,
    /// Per-case override of the default recovery horizon.
    pub recovery_days: Option<u32>,
}

impl CaseEntry {
    pub fn confirmed(user_id: impl Into<String>, date: NaiveDate) -> Self {
        Self { user_id: user_id.into(), label: Label::Confirmed, confirmed_date: Some(date), recovery_days: None }
    }

    pub fn normal(user_id: impl Into<String>) -> Self {
        Self { user_id: user_id.into(), label: Label::Normal, confirmed_date: None, recovery_days: None }
    }

    pub fn with_recovery_days(mut self, days: u32) -> Self {
        self.recovery_days = Some(days);
        self
    }
}

/// Confirmed cases and labelled normal subscribers, keyed by user id.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CaseRegistry {
    entries: BTreeMap<String, CaseEntry>,
}

impl CaseRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    /// Inserts an entry, rejecting inconsistent labels and duplicates.
    pub fn insert(&mut self, entry: CaseEntry) -> std::result::Result<(), String> {
        match (entry.label, entry.confirmed_date) {
            (Label::Confirmed, None) => return Err("confirmed entry without a date".into()),
            (Label::Normal, Some(_)) => return Err("normal entry with a confirmed date".into()),
            _ => {}
        }
        if entry.recovery_days == Some(0) {
            return Err("recovery_days must be positive".into());
        }
        if self.entries.contains_key(&entry.user_id) {
            return Err(format!("duplicate user `{}`", entry.user_id));
        }
        self.entries.insert(entry.user_id.clone(), entry);
        Ok(())
    }

    pub fn get(&self, user_id: &str) -> Option<&CaseEntry> {
        self.entries.get(user_id)
    }

    pub fn label_of(&self, user_id: &str) -> Option<Label> {
        self.entries.get(user_id).map(|e| e.label)
    }

    /// Entries in ascending user-id order.
    pub fn iter(&self) -> impl Iterator<Item = &CaseEntry> {
        self.entries.values()
    }

    pub fn confirmed(&self) -> impl Iterator<Item = &CaseEntry> {
        self.iter().filter(|e| e.label == Label::Confirmed)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

impl FromIterator<CaseEntry> for CaseRegistry {
    /// Panics on inconsistent entries; use [`CaseRegistry::insert`] for fallible input.
    fn from_iter<I: IntoIterator<Item = CaseEntry>>(iter: I) -> Self {
        let mut reg = CaseRegistry::new();
        for e in iter {
            reg.insert(e).expect("consistent registry entry");
        }
        reg
    }
}

/// Parses `user_id,label,confirmed_date,recovery_days` rows. The header line
/// is optional; any invalid row is a fatal error.
pub fn parse_registry<R: Read>(input: R) -> Result<CaseRegistry> {
    let mut reader =
        csv::ReaderBuilder::new().has_headers(false).flexible(true).trim(csv::Trim::All).from_reader(input);
    let mut reg = CaseRegistry::new();
    for (i, row) in reader.records().enumerate() {
        let row = row?;
        let line = i + 1;
        if i == 0 && row.get(0) == Some("user_id") {
            continue;
        }
        if row.iter().all(str::is_empty) {
            continue;
        }
        let fail = |reason: String| Error::Registry { line, reason };
        if !(2..=4).contains(&row.len()) {
            return Err(fail(format!("expected 2-4 fields, got {}", row.len())));
        }
        if row[0].is_empty() {
            return Err(fail("empty user_id".into()));
        }
        let label = match row[1].to_ascii_lowercase().as_str() {
            "confirmed" => Label::Confirmed,
            "normal" => Label::Normal,
            other => return Err(fail(format!("unknown label `{other}`"))),
        };
        let confirmed_date = match row.get(2).filter(|s| !s.is_empty()) {
            Some(s) => {
                Some(NaiveDate::parse_from_str(s, "%Y-%m-%d").map_err(|e| fail(format!("bad date `{s}`: {e}")))?)
            }
            None => None,
        };
        let recovery_days = match row.get(3).filter(|s| !s.is_empty()) {
            Some(s) => Some(s.parse::<u32>().map_err(|_| fail(format!("bad recovery_days `{s}`")))?),
            None => None,
        };
        reg.insert(CaseEntry { user_id: row[0].to_owned(), label, confirmed_date, recovery_days }).map_err(fail)?;
    }
    Ok(reg)
}

pub fn write_registry<W: Write>(output: W, registry: &CaseRegistry) -> Result<()> {
    let mut w = csv::Writer::from_writer(output);
    w.write_record(REGISTRY_HEADER)?;
    for e in registry.iter() {
        let date = e.confirmed_date.map(|d| d.format("%Y-%m-%d").to_string()).unwrap_or_default();
        let rec = e.recovery_days.map(|d| d.to_string()).unwrap_or_default();
        w.write_record([e.user_id.as_str(), e.label.as_str(), &date, &rec])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_with_and_without_header() {
        let text = "user_id,label,confirmed_date,recovery_days\n\
                    u1,confirmed,2020-01-15,\n\
                    u2,normal,,\n\
                    u3,confirmed,2020-01-20,20\n";
        let reg = parse_registry(text.as_bytes()).unwrap();
        assert_eq!(reg.len(), 3);
        let u1 = reg.get("u1").unwrap();
        assert_eq!(u1.confirmed_date, NaiveDate::from_ymd_opt(2020, 1, 15));
        assert_eq!(u1.recovery_days, None);
        assert_eq!(reg.get("u3").unwrap().recovery_days, Some(20));
        assert_eq!(reg.label_of("u2"), Some(Label::Normal));

        let bare = parse_registry("u9,normal\n".as_bytes()).unwrap();
        assert_eq!(bare.len(), 1);
    }

    #[test]
    fn confirmed_requires_date() {
        let err = parse_registry("u1,confirmed,,\n".as_bytes()).unwrap_err();
        assert!(matches!(err, Error::Registry { line: 1, .. }), "{err}");
    }

    #[test]
    fn normal_rejects_date_and_duplicates_fail() {
        assert!(parse_registry("u1,normal,2020-01-01,\n".as_bytes()).is_err());
        assert!(parse_registry("u1,normal,,\nu1,normal,,\n".as_bytes()).is_err());
        assert!(parse_registry("u1,sick,,\n".as_bytes()).is_err());
    }

    #[test]
    fn write_then_parse() {
        let reg: CaseRegistry = [
            CaseEntry::confirmed("a", NaiveDate::from_ymd_opt(2020, 1, 3).unwrap()).with_recovery_days(5),
            CaseEntry::normal("b"),
        ]
        .into_iter()
        .collect();
        let mut buf = Vec::new();
        write_registry(&mut buf, &reg).unwrap();
        assert_eq!(parse_registry(buf.as_slice()).unwrap(), reg);
    }
}
