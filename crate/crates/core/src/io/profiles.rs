//! Load and weather profile tables: CSV with an ISO-8601 timestamp column
//! and named value columns. Normalized load columns stay within [0, 1.05];
//! columns suffixed `_k` carry physical kelvin values.

use std::path::Path;

use chrono::NaiveDateTime;

use super::{IoError, IoResult};

const TIMESTAMP_FORMAT: &str = "%Y-%m-%dT%H:%M:%S";

#[derive(Debug, Clone, PartialEq)]
pub struct ProfileSet {
    timestamps: Vec<NaiveDateTime>,
    step_minutes: i64,
    columns: Vec<(String, Vec<f64>)>,
}

impl ProfileSet {
    pub fn new(
        timestamps: Vec<NaiveDateTime>,
        columns: Vec<(String, Vec<f64>)>,
    ) -> IoResult<Self> {
        if timestamps.len() < 2 {
            return Err(IoError::Profile(
                "profile needs at least two timestamps".into(),
            ));
        }
        let step = timestamps[1] - timestamps[0];
        for (i, pair) in timestamps.windows(2).enumerate() {
            if pair[1] - pair[0] != step {
                return Err(IoError::Profile(format!(
                    "non-uniform timestep between rows {} and {} (at {})",
                    i + 1,
                    i + 2,
                    pair[1]
                )));
            }
        }
        if step.num_minutes() <= 0 {
            return Err(IoError::Profile("timestep must be positive".into()));
        }
        for (name, values) in &columns {
            if values.len() != timestamps.len() {
                return Err(IoError::Profile(format!(
                    "column '{name}' has {} values for {} timestamps",
                    values.len(),
                    timestamps.len()
                )));
            }
        }
        Ok(ProfileSet {
            timestamps,
            step_minutes: step.num_minutes(),
            columns,
        })
    }

    pub fn len(&self) -> usize {
        self.timestamps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.timestamps.is_empty()
    }

    pub fn step_minutes(&self) -> i64 {
        self.step_minutes
    }

    pub fn timestamps(&self) -> &[NaiveDateTime] {
        &self.timestamps
    }

    pub fn column_names(&self) -> impl Iterator<Item = &str> {
        self.columns.iter().map(|(name, _)| name.as_str())
    }

    pub fn column(&self, name: &str) -> Option<&[f64]> {
        self.columns
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, v)| v.as_slice())
    }

    /// Row index of an exact timestamp.
    pub fn index_of(&self, t: NaiveDateTime) -> Option<usize> {
        self.timestamps.iter().position(|&x| x == t)
    }
}

pub fn load_profiles(path: &Path) -> IoResult<ProfileSet> {
    let mut reader = csv::Reader::from_path(path).map_err(csv_error)?;
    let headers = reader.headers().map_err(csv_error)?.clone();
    if headers.is_empty() || headers.get(0) != Some("timestamp") {
        return Err(IoError::Profile(
            "first column must be 'timestamp'".into(),
        ));
    }
    let names: Vec<String> = headers.iter().skip(1).map(|s| s.to_string()).collect();
    let mut timestamps = Vec::new();
    let mut columns: Vec<(String, Vec<f64>)> =
        names.iter().map(|n| (n.clone(), Vec::new())).collect();

    for (row_idx, record) in reader.records().enumerate() {
        let record = record.map_err(csv_error)?;
        let row = row_idx + 2; // header is line 1
        let raw_ts = record.get(0).unwrap_or("");
        let ts = NaiveDateTime::parse_from_str(raw_ts, TIMESTAMP_FORMAT).map_err(|e| {
            IoError::Profile(format!("row {row}: bad timestamp '{raw_ts}': {e}"))
        })?;
        timestamps.push(ts);
        for (col, (name, values)) in columns.iter_mut().enumerate() {
            let raw = record.get(col + 1).unwrap_or("").trim();
            let value: f64 = raw.parse().map_err(|_| {
                IoError::Profile(format!("row {row}, column '{name}': bad value '{raw}'"))
            })?;
            if !value.is_finite() {
                return Err(IoError::Profile(format!(
                    "row {row}, column '{name}': non-finite value"
                )));
            }
            if !name.ends_with("_k") && !(0.0..=1.05).contains(&value) {
                return Err(IoError::Profile(format!(
                    "row {row}, column '{name}': normalized value {value} outside [0, 1.05]"
                )));
            }
            values.push(value);
        }
    }
    ProfileSet::new(timestamps, columns)
}

pub fn save_profiles(set: &ProfileSet, path: &Path) -> IoResult<()> {
    let mut out = String::new();
    out.push_str("timestamp");
    for name in set.column_names() {
        out.push(',');
        out.push_str(name);
    }
    out.push('\n');
    for (i, ts) in set.timestamps().iter().enumerate() {
        out.push_str(&ts.format(TIMESTAMP_FORMAT).to_string());
        for (_, values) in &set.columns {
            out.push(',');
            out.push_str(&format_value(values[i]));
        }
        out.push('\n');
    }
    std::fs::write(path, out)?;
    Ok(())
}

fn format_value(v: f64) -> String {
    // shortest round-trip representation keeps files deterministic
    format!("{v}")
}

fn csv_error(e: csv::Error) -> IoError {
    IoError::Profile(e.to_string())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn write_temp(content: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(content.as_bytes()).unwrap();
        f
    }

    #[test]
    fn constant_column_roundtrip() {
        let f = write_temp(
            "timestamp,household\n\
             2021-01-18T00:00:00,1.0\n\
             2021-01-18T00:15:00,1.0\n\
             2021-01-18T00:30:00,1.0\n\
             2021-01-18T00:45:00,1.0\n",
        );
        let set = load_profiles(f.path()).unwrap();
        assert_eq!(set.len(), 4);
        assert_eq!(set.step_minutes(), 15);
        assert_eq!(set.column("household").unwrap(), &[1.0; 4]);
    }

    #[test]
    fn weekly_quarter_hour_series() {
        let mut content = String::from("timestamp,load\n");
        let start =
            NaiveDateTime::parse_from_str("2021-01-18T00:00:00", TIMESTAMP_FORMAT).unwrap();
        for i in 0..672 {
            let ts = start + chrono::Duration::minutes(15 * i);
            content.push_str(&format!("{},0.5\n", ts.format(TIMESTAMP_FORMAT)));
        }
        let f = write_temp(&content);
        let set = load_profiles(f.path()).unwrap();
        assert_eq!(set.len(), 7 * 24 * 4);
    }

    #[test]
    fn timestamp_gap_is_rejected_with_position() {
        let f = write_temp(
            "timestamp,load\n\
             2021-01-18T00:00:00,0.5\n\
             2021-01-18T00:15:00,0.5\n\
             2021-01-18T01:00:00,0.5\n",
        );
        match load_profiles(f.path()) {
            Err(IoError::Profile(msg)) => {
                assert!(msg.contains("non-uniform timestep"), "{msg}");
                assert!(msg.contains("2021-01-18 01:00:00"), "{msg}");
            }
            other => panic!("expected profile error, got {other:?}"),
        }
    }

    #[test]
    fn nan_is_rejected_naming_the_row() {
        let f = write_temp(
            "timestamp,load\n\
             2021-01-18T00:00:00,0.5\n\
             2021-01-18T00:15:00,NaN\n\
             2021-01-18T00:30:00,0.5\n",
        );
        match load_profiles(f.path()) {
            Err(IoError::Profile(msg)) => assert!(msg.contains("row 3"), "{msg}"),
            other => panic!("expected profile error, got {other:?}"),
        }
    }

    #[test]
    fn normalized_range_is_enforced() {
        let f = write_temp(
            "timestamp,load\n\
             2021-01-18T00:00:00,0.5\n\
             2021-01-18T00:15:00,1.2\n",
        );
        assert!(matches!(load_profiles(f.path()), Err(IoError::Profile(_))));
        // kelvin columns are exempt
        let f = write_temp(
            "timestamp,t_ambient_k\n\
             2021-01-18T00:00:00,265.5\n\
             2021-01-18T00:15:00,266.0\n",
        );
        assert!(load_profiles(f.path()).is_ok());
    }

    #[test]
    fn save_load_roundtrip() {
        let start =
            NaiveDateTime::parse_from_str("2021-01-18T00:00:00", TIMESTAMP_FORMAT).unwrap();
        let timestamps: Vec<_> = (0..4)
            .map(|i| start + chrono::Duration::minutes(15 * i))
            .collect();
        let set = ProfileSet::new(
            timestamps,
            vec![
                ("a".into(), vec![0.1, 0.25, 0.5, 1.0]),
                ("t_ambient_k".into(), vec![265.0, 265.5, 266.0, 266.5]),
            ],
        )
        .unwrap();
        let f = tempfile::NamedTempFile::new().unwrap();
        save_profiles(&set, f.path()).unwrap();
        let loaded = load_profiles(f.path()).unwrap();
        assert_eq!(loaded, set);
    }
}
