//! CSV and JSON surfaces: dataset files, prediction files, and truth
//! specifications. All parsers reject malformed input with line numbers and
//! never panic on arbitrary bytes (they are fuzzed).

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::data::{CensoredObservation, DatasetRow, Features, SurvivalDataset};
use crate::dist::BinMassCdf;
use crate::error::{Error, Result};
use crate::grid::TimeGrid;
use crate::truth::{CensorModel, PiecewiseLinearTruth, PopulationTruth};

fn csv_err(line: usize, message: impl Into<String>) -> Error {
    Error::Csv {
        line,
        message: message.into(),
    }
}

fn split_line(line: &str) -> Vec<String> {
    line.trim_end_matches('\r')
        .split(',')
        .map(|s| s.trim().to_string())
        .collect()
}

/// Parses a survival dataset from CSV text. The header must contain `time`
/// (positive real) and `event` (0/1) columns; when `group_column` names a
/// column, that column provides the group label, otherwise every remaining
/// column is parsed as a numeric feature.
pub fn parse_dataset_csv(text: &str, group_column: Option<&str>) -> Result<SurvivalDataset> {
    let mut lines = text.lines().enumerate();
    let (_, header) = lines.next().ok_or_else(|| csv_err(1, "empty file"))?;
    let header = split_line(header);
    let time_col = header
        .iter()
        .position(|h| h == "time")
        .ok_or_else(|| csv_err(1, "missing `time` column"))?;
    let event_col = header
        .iter()
        .position(|h| h == "event")
        .ok_or_else(|| csv_err(1, "missing `event` column"))?;
    let group_col = match group_column {
        Some(name) => Some(
            header
                .iter()
                .position(|h| h == name)
                .ok_or_else(|| csv_err(1, format!("missing group column `{name}`")))?,
        ),
        None => None,
    };
    let feature_cols: Vec<usize> = (0..header.len())
        .filter(|&i| i != time_col && i != event_col && Some(i) != group_col)
        .collect();

    let mut rows = Vec::new();
    for (idx, line) in lines {
        let lineno = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let fields = split_line(line);
        if fields.len() != header.len() {
            return Err(csv_err(
                lineno,
                format!("expected {} fields, got {}", header.len(), fields.len()),
            ));
        }
        let time: f64 = fields[time_col]
            .parse()
            .map_err(|_| csv_err(lineno, format!("bad time `{}`", fields[time_col])))?;
        if !time.is_finite() || time <= 0.0 {
            return Err(csv_err(
                lineno,
                format!("time must be positive, got {time}"),
            ));
        }
        let event: f64 = fields[event_col]
            .parse()
            .map_err(|_| csv_err(lineno, format!("bad event `{}`", fields[event_col])))?;
        let event = if event == 1.0 {
            true
        } else if event == 0.0 {
            false
        } else {
            return Err(csv_err(
                lineno,
                format!("event must be 0 or 1, got {event}"),
            ));
        };
        let features = match group_col {
            Some(g) => Features::Group(fields[g].clone()),
            None => {
                let mut xs = Vec::with_capacity(feature_cols.len());
                for &i in &feature_cols {
                    let x: f64 = fields[i].parse().map_err(|_| {
                        csv_err(
                            lineno,
                            format!("bad feature `{}` in `{}`", fields[i], header[i]),
                        )
                    })?;
                    if !x.is_finite() {
                        return Err(csv_err(lineno, format!("non-finite feature {x}")));
                    }
                    xs.push(x);
                }
                Features::Numeric(xs)
            }
        };
        rows.push(DatasetRow {
            features,
            obs: CensoredObservation::new(time, event)
                .map_err(|e| csv_err(lineno, e.to_string()))?,
        });
    }
    if rows.is_empty() {
        return Err(csv_err(1, "no data rows"));
    }
    SurvivalDataset::new(rows)
}

pub fn load_dataset_csv(path: &Path, group_column: Option<&str>) -> Result<SurvivalDataset> {
    parse_dataset_csv(&std::fs::read_to_string(path)?, group_column)
}

/// Serializes a dataset; group datasets get a `group` column, numeric ones
/// get `x0..x{d-1}` columns.
pub fn dataset_to_csv(data: &SurvivalDataset) -> String {
    let mut out = String::new();
    match &data.rows()[0].features {
        Features::Group(_) => {
            out.push_str("group,time,event\n");
            for row in data.rows() {
                if let Features::Group(g) = &row.features {
                    out.push_str(&format!(
                        "{},{},{}\n",
                        g,
                        row.obs.time(),
                        u8::from(row.obs.is_event())
                    ));
                }
            }
        }
        Features::Numeric(xs) => {
            let dim = xs.len();
            let mut header: Vec<String> = (0..dim).map(|i| format!("x{i}")).collect();
            header.push("time".into());
            header.push("event".into());
            out.push_str(&header.join(","));
            out.push('\n');
            for row in data.rows() {
                if let Features::Numeric(xs) = &row.features {
                    let mut fields: Vec<String> = xs.iter().map(|x| format!("{x}")).collect();
                    fields.push(format!("{}", row.obs.time()));
                    fields.push(format!("{}", u8::from(row.obs.is_event())));
                    out.push_str(&fields.join(","));
                    out.push('\n');
                }
            }
        }
    }
    out
}

/// Parses a predictions CSV with header `f_0..f_{B-1}`; every row must hold
/// B masses summing to 1 within 1e-6.
pub fn parse_predictions_csv(text: &str) -> Result<Vec<Vec<f64>>> {
    let mut lines = text.lines().enumerate();
    let (_, header) = lines.next().ok_or_else(|| csv_err(1, "empty file"))?;
    let header = split_line(header);
    for (i, h) in header.iter().enumerate() {
        if *h != format!("f_{i}") {
            return Err(csv_err(1, format!("expected column `f_{i}`, found `{h}`")));
        }
    }
    let bins = header.len();
    if bins == 0 {
        return Err(csv_err(1, "no mass columns"));
    }
    let mut rows = Vec::new();
    for (idx, line) in lines {
        let lineno = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let fields = split_line(line);
        if fields.len() != bins {
            return Err(csv_err(
                lineno,
                format!("expected {bins} fields, got {}", fields.len()),
            ));
        }
        let mut masses = Vec::with_capacity(bins);
        for f in &fields {
            let m: f64 = f
                .parse()
                .map_err(|_| csv_err(lineno, format!("bad mass `{f}`")))?;
            if !m.is_finite() || m < 0.0 {
                return Err(csv_err(lineno, format!("mass must be in [0, 1], got {m}")));
            }
            masses.push(m);
        }
        let sum: f64 = masses.iter().sum();
        if (sum - 1.0).abs() > 1e-6 {
            return Err(csv_err(lineno, format!("masses sum to {sum}, expected 1")));
        }
        rows.push(masses);
    }
    if rows.is_empty() {
        return Err(csv_err(1, "no data rows"));
    }
    Ok(rows)
}

pub fn load_predictions_csv(path: &Path) -> Result<Vec<Vec<f64>>> {
    parse_predictions_csv(&std::fs::read_to_string(path)?)
}

/// JSON description of a synthetic population: per group, a weight, event
/// bin masses on a uniform grid over [0, time_upper], and either censoring
/// atoms or censoring bin masses on the same grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TruthSpec {
    pub time_upper: f64,
    pub groups: Vec<GroupSpec>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GroupSpec {
    pub label: String,
    pub weight: f64,
    pub event_masses: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub censor_atoms: Option<Vec<(f64, f64)>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub censor_masses: Option<Vec<f64>>,
}

impl TruthSpec {
    pub fn parse(text: &str) -> Result<TruthSpec> {
        let spec: TruthSpec = serde_json::from_str(text)?;
        spec.to_population()?;
        Ok(spec)
    }

    pub fn load(path: &Path) -> Result<TruthSpec> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn to_population(&self) -> Result<PopulationTruth> {
        if !self.time_upper.is_finite() || self.time_upper <= 0.0 {
            return Err(Error::InvalidInput(format!(
                "time_upper must be positive, got {}",
                self.time_upper
            )));
        }
        let mut groups = Vec::new();
        for g in &self.groups {
            let grid = TimeGrid::uniform(self.time_upper, g.event_masses.len().max(1), 0.0)?;
            let event_cdf = BinMassCdf::new(grid.clone(), g.event_masses.clone())?;
            let censoring = match (&g.censor_atoms, &g.censor_masses) {
                (Some(atoms), None) => CensorModel::Atoms(atoms.clone()),
                (None, Some(masses)) => {
                    CensorModel::Continuous(BinMassCdf::new(grid, masses.clone())?)
                }
                _ => {
                    return Err(Error::InvalidInput(format!(
                        "group `{}` needs exactly one of censor_atoms or censor_masses",
                        g.label
                    )))
                }
            };
            groups.push((
                g.weight,
                PiecewiseLinearTruth::new(g.label.clone(), event_cdf, censoring)?,
            ));
        }
        PopulationTruth::new(groups)
    }

    /// The built-in two-group truth used when no spec file is given.
    ///
    /// Group `a` censors on an even lattice of atoms over [0.25, 1.25]:
    /// the lattice sits at micro-bin midpoints, so under grid refinement the
    /// average gap between a censoring time and the next threshold halves
    /// exactly, and no atom ever falls on a threshold of the 8/16/32-bin
    /// grids. Censoring stays clear of the top bin, keeping the simple
    /// censored log score finite.
    pub fn default_two_group() -> TruthSpec {
        let lattice: Vec<(f64, f64)> = (0..64)
            .map(|j| (0.25 + (j as f64 + 0.5) / 64.0, 1.0 / 64.0))
            .collect();
        TruthSpec {
            time_upper: 2.0,
            groups: vec![
                GroupSpec {
                    label: "a".into(),
                    weight: 0.5,
                    event_masses: vec![0.16, 0.22, 0.18, 0.13, 0.10, 0.08, 0.07, 0.06],
                    censor_atoms: Some(lattice),
                    censor_masses: None,
                },
                GroupSpec {
                    label: "b".into(),
                    weight: 0.5,
                    event_masses: vec![0.05, 0.07, 0.09, 0.12, 0.16, 0.19, 0.18, 0.14],
                    censor_atoms: Some(vec![(0.8, 0.4), (1.5, 0.3), (2.0, 0.3)]),
                    censor_masses: None,
                },
            ],
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("truth spec serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_a_minimal_dataset() {
        let data = parse_dataset_csv("g,time,event\na,1.5,1\n", Some("g")).unwrap();
        assert_eq!(data.len(), 1);
        assert_eq!(data.z_max(), 1.5);
        assert!(data.rows()[0].obs.is_event());
        assert_eq!(data.group_labels(), vec!["a".to_string()]);
    }

    #[test]
    fn rejects_documented_malformed_cases() {
        // Nonpositive time, with the offending line in the error.
        let err = parse_dataset_csv("g,time,event\na,0,1\n", Some("g")).unwrap_err();
        assert!(matches!(err, Error::Csv { line: 2, .. }), "{err}");
        // Missing columns.
        assert!(parse_dataset_csv("g,when,event\na,1,1\n", Some("g")).is_err());
        assert!(parse_dataset_csv("g,time,died\na,1,1\n", Some("g")).is_err());
        // Bad event flag.
        assert!(parse_dataset_csv("g,time,event\na,1,2\n", Some("g")).is_err());
        // Empty input and header-only input.
        assert!(parse_dataset_csv("", Some("g")).is_err());
        assert!(parse_dataset_csv("g,time,event\n", Some("g")).is_err());
        // Ragged row.
        assert!(parse_dataset_csv("g,time,event\na,1\n", Some("g")).is_err());
    }

    #[test]
    fn numeric_features_parse_without_group_column() {
        let data = parse_dataset_csv("x,y,time,event\n0.5,1.0,2.0,0\n", None).unwrap();
        match &data.rows()[0].features {
            Features::Numeric(xs) => assert_eq!(xs, &vec![0.5, 1.0]),
            _ => panic!("expected numeric features"),
        }
        assert!(parse_dataset_csv("x,time,event\noops,1,1\n", None).is_err());
    }

    #[test]
    fn two_groups_are_counted() {
        let text = "g,time,event\na,1,1\na,2,0\na,3,1\nb,1,0\nb,2,1\nb,3,1\n";
        let data = parse_dataset_csv(text, Some("g")).unwrap();
        assert_eq!(data.group_labels().len(), 2);
    }

    #[test]
    fn dataset_csv_round_trips() {
        let text = "group,time,event\na,1.5,1\nb,2.25,0\n";
        let data = parse_dataset_csv(text, Some("group")).unwrap();
        assert_eq!(dataset_to_csv(&data), text);
    }

    #[test]
    fn predictions_csv_checks_mass_sums() {
        let rows = parse_predictions_csv("f_0,f_1\n0.25,0.75\n0.5,0.5\n").unwrap();
        assert_eq!(rows.len(), 2);
        assert!(parse_predictions_csv("f_0,f_1\n0.3,0.3\n").is_err());
        assert!(parse_predictions_csv("f_0,f_2\n0.5,0.5\n").is_err());
        assert!(parse_predictions_csv("f_0,f_1\n0.5\n").is_err());
    }

    #[test]
    fn truth_spec_round_trips_and_validates() {
        let spec = TruthSpec::default_two_group();
        let parsed = TruthSpec::parse(&spec.to_json()).unwrap();
        assert_eq!(parsed, spec);
        let pop = spec.to_population().unwrap();
        assert_eq!(pop.groups().len(), 2);
        assert!(TruthSpec::parse("{\"time_upper\": -1, \"groups\": []}").is_err());
        assert!(TruthSpec::parse("not json").is_err());
    }
}
