//! Tabular training data: CSV ingestion, raster extraction at sample
//! locations, and geolocation predictors.

use std::collections::BTreeSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::raster::RasterStack;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Task {
    Classification,
    Regression,
}

/// Identifies the polygon or cluster a sample came from; the unit that must
/// never be split across spatial folds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct GroupId(pub u32);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleRow {
    pub id: i64,
    pub group: GroupId,
    pub x: f64,
    pub y: f64,
    pub features: Vec<f64>,
    /// Regression value, or class index into `SampleTable::classes`.
    pub response: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleTable {
    feature_names: Vec<String>,
    task: Task,
    /// Sorted label set; empty for regression.
    classes: Vec<String>,
    rows: Vec<SampleRow>,
}

/// A georeferenced observation prior to predictor extraction.
#[derive(Debug, Clone, PartialEq)]
pub struct SamplePoint {
    pub id: i64,
    pub group: GroupId,
    pub x: f64,
    pub y: f64,
    pub response: ResponseValue,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ResponseValue {
    Label(String),
    Value(f64),
}

/// Column names of the required CSV fields; all other columns are features.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CsvSchema {
    pub id: String,
    pub group: String,
    pub x: String,
    pub y: String,
    pub response: String,
}

impl Default for CsvSchema {
    fn default() -> Self {
        Self {
            id: "id".into(),
            group: "group".into(),
            x: "x".into(),
            y: "y".into(),
            response: "response".into(),
        }
    }
}

impl SampleTable {
    pub fn new(
        feature_names: Vec<String>,
        task: Task,
        classes: Vec<String>,
        rows: Vec<SampleRow>,
    ) -> Result<Self> {
        let mut seen_names = BTreeSet::new();
        for name in &feature_names {
            if name.is_empty() {
                return Err(Error::Validation("empty feature name".into()));
            }
            if !seen_names.insert(name) {
                return Err(Error::Validation(format!("duplicate feature name '{name}'")));
            }
        }
        let mut seen_ids = BTreeSet::new();
        for row in &rows {
            if !seen_ids.insert(row.id) {
                return Err(Error::DuplicateId(row.id));
            }
            if row.features.len() != feature_names.len() {
                return Err(Error::Validation(format!(
                    "sample {}: {} feature values for {} feature names",
                    row.id,
                    row.features.len(),
                    feature_names.len()
                )));
            }
            if !row.x.is_finite() || !row.y.is_finite() {
                return Err(Error::Validation(format!("sample {}: non-finite coordinates", row.id)));
            }
            if row.features.iter().any(|v| !v.is_finite()) {
                return Err(Error::Validation(format!("sample {}: non-finite feature value", row.id)));
            }
            match task {
                Task::Regression => {
                    if !row.response.is_finite() {
                        return Err(Error::Validation(format!(
                            "sample {}: non-finite response",
                            row.id
                        )));
                    }
                }
                Task::Classification => {
                    let idx = row.response;
                    if idx.fract() != 0.0 || idx < 0.0 || (idx as usize) >= classes.len() {
                        return Err(Error::Validation(format!(
                            "sample {}: class index {idx} outside the label set",
                            row.id
                        )));
                    }
                }
            }
        }
        Ok(Self { feature_names, task, classes, rows })
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn task(&self) -> Task {
        self.task
    }

    pub fn classes(&self) -> &[String] {
        &self.classes
    }

    pub fn rows(&self) -> &[SampleRow] {
        &self.rows
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn n_features(&self) -> usize {
        self.feature_names.len()
    }

    pub fn feature_index(&self, name: &str) -> Option<usize> {
        self.feature_names.iter().position(|n| n == name)
    }

    /// Appends "coord_x" and "coord_y" features copied from each row's
    /// coordinates.
    pub fn add_geolocation_features(&self) -> Result<SampleTable> {
        for name in ["coord_x", "coord_y"] {
            if self.feature_names.iter().any(|n| n == name) {
                return Err(Error::Validation(format!("feature '{name}' already present")));
            }
        }
        let mut feature_names = self.feature_names.clone();
        feature_names.push("coord_x".into());
        feature_names.push("coord_y".into());
        let rows = self
            .rows
            .iter()
            .map(|r| {
                let mut row = r.clone();
                row.features.push(r.x);
                row.features.push(r.y);
                row
            })
            .collect();
        SampleTable::new(feature_names, self.task, self.classes.clone(), rows)
    }

    /// A table restricted to the named features, in the given order.
    pub fn select_features(&self, names: &[String]) -> Result<SampleTable> {
        let indices: Vec<usize> = names
            .iter()
            .map(|n| {
                self.feature_index(n)
                    .ok_or_else(|| Error::FeatureMismatch(vec![n.clone()]))
            })
            .collect::<Result<_>>()?;
        let rows = self
            .rows
            .iter()
            .map(|r| SampleRow {
                features: indices.iter().map(|&j| r.features[j]).collect(),
                ..r.clone()
            })
            .collect();
        SampleTable::new(names.to_vec(), self.task, self.classes.clone(), rows)
    }

    /// The response label of a classification row.
    pub fn label_of(&self, row: &SampleRow) -> Option<&str> {
        self.classes.get(row.response as usize).map(String::as_str)
    }
}

pub fn read_samples_csv(
    path: impl AsRef<Path>,
    schema: &CsvSchema,
    task: Task,
) -> Result<SampleTable> {
    let path = path.as_ref();
    let mut reader = csv::Reader::from_path(path)
        .map_err(|e| Error::Validation(format!("{}: {e}", path.display())))?;
    let headers: Vec<String> = reader
        .headers()
        .map_err(|e| Error::Validation(format!("{}: {e}", path.display())))?
        .iter()
        .map(str::to_string)
        .collect();

    let find = |name: &str| -> Result<usize> {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::MissingColumn(name.to_string()))
    };
    let id_col = find(&schema.id)?;
    let group_col = find(&schema.group)?;
    let x_col = find(&schema.x)?;
    let y_col = find(&schema.y)?;
    let response_col = find(&schema.response)?;
    let reserved = [id_col, group_col, x_col, y_col, response_col];

    // Features are all remaining columns, in file order.
    let feature_cols: Vec<usize> =
        (0..headers.len()).filter(|i| !reserved.contains(i)).collect();
    let feature_names: Vec<String> =
        feature_cols.iter().map(|&i| headers[i].clone()).collect();

    let mut raw_rows = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let rowno = i + 2; // 1-based, after the header line
        let record =
            record.map_err(|e| Error::Validation(format!("row {rowno}: {e}")))?;
        let cell = |col: usize| record.get(col).unwrap_or("").trim().to_string();
        let number = |col: usize| -> Result<f64> {
            let raw = cell(col);
            raw.parse::<f64>().map_err(|_| Error::ParseCell {
                row: rowno,
                column: headers[col].clone(),
                value: raw,
            })
        };
        let id = cell(id_col).parse::<i64>().map_err(|_| Error::ParseCell {
            row: rowno,
            column: headers[id_col].clone(),
            value: cell(id_col),
        })?;
        let group = cell(group_col).parse::<u32>().map_err(|_| Error::ParseCell {
            row: rowno,
            column: headers[group_col].clone(),
            value: cell(group_col),
        })?;
        let features = feature_cols.iter().map(|&c| number(c)).collect::<Result<Vec<f64>>>()?;
        let response = match task {
            Task::Regression => ResponseValue::Value(number(response_col)?),
            Task::Classification => ResponseValue::Label(cell(response_col)),
        };
        raw_rows.push((id, GroupId(group), number(x_col)?, number(y_col)?, features, response));
    }

    let classes = match task {
        Task::Regression => Vec::new(),
        Task::Classification => {
            let set: BTreeSet<String> = raw_rows
                .iter()
                .map(|(_, _, _, _, _, r)| match r {
                    ResponseValue::Label(l) => l.clone(),
                    ResponseValue::Value(v) => v.to_string(),
                })
                .collect();
            set.into_iter().collect()
        }
    };

    let rows = raw_rows
        .into_iter()
        .map(|(id, group, x, y, features, response)| {
            let response = match response {
                ResponseValue::Value(v) => v,
                ResponseValue::Label(l) => {
                    classes.iter().position(|c| *c == l).expect("label collected above") as f64
                }
            };
            SampleRow { id, group, x, y, features, response }
        })
        .collect();

    SampleTable::new(feature_names, task, classes, rows)
}

pub fn write_samples_csv(table: &SampleTable, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut writer = csv::Writer::from_path(path)
        .map_err(|e| Error::Validation(format!("{}: {e}", path.display())))?;
    let mut header = vec![
        "id".to_string(),
        "group".to_string(),
        "x".to_string(),
        "y".to_string(),
        "response".to_string(),
    ];
    header.extend(table.feature_names.iter().cloned());
    let write_err = |e: csv::Error| Error::Validation(format!("{}: {e}", path.display()));
    writer.write_record(&header).map_err(write_err)?;
    for row in &table.rows {
        let mut record = vec![
            row.id.to_string(),
            row.group.0.to_string(),
            format!("{}", row.x),
            format!("{}", row.y),
        ];
        match table.task {
            Task::Regression => record.push(format!("{}", row.response)),
            Task::Classification => {
                record.push(table.label_of(row).expect("valid class index").to_string())
            }
        }
        record.extend(row.features.iter().map(|v| format!("{v}")));
        writer.write_record(&record).map_err(write_err)?;
    }
    writer.flush().map_err(|e| Error::io(path.display().to_string(), e))?;
    Ok(())
}

/// Build a SampleTable by reading every band of `stack` at each point's
/// owning cell. Feature names are the band names.
pub fn extract_at_samples(
    stack: &RasterStack,
    points: &[SamplePoint],
    task: Task,
) -> Result<SampleTable> {
    let classes = match task {
        Task::Regression => Vec::new(),
        Task::Classification => {
            let set: BTreeSet<String> = points
                .iter()
                .map(|p| match &p.response {
                    ResponseValue::Label(l) => Ok(l.clone()),
                    ResponseValue::Value(_) => Err(Error::Validation(format!(
                        "sample {}: classification requires a label response",
                        p.id
                    ))),
                })
                .collect::<Result<_>>()?;
            set.into_iter().collect()
        }
    };

    let mut rows = Vec::with_capacity(points.len());
    for p in points {
        let template = stack
            .template()
            .ok_or_else(|| Error::Argument("cannot extract from an empty stack".into()))?;
        let (row, col) = template
            .cell_of(p.x, p.y)
            .ok_or(Error::OutOfBounds { id: p.id, x: p.x, y: p.y })?;
        let mut features = Vec::with_capacity(stack.len());
        for (name, grid) in stack.iter() {
            let v = grid.get(row, col);
            if grid.is_nodata(v) {
                return Err(Error::NodataAtSample {
                    id: p.id,
                    band: name.to_string(),
                    x: p.x,
                    y: p.y,
                });
            }
            features.push(v);
        }
        let response = match (&p.response, task) {
            (ResponseValue::Value(v), Task::Regression) => *v,
            (ResponseValue::Label(l), Task::Classification) => {
                classes.iter().position(|c| c == l).expect("label collected above") as f64
            }
            _ => {
                return Err(Error::Validation(format!(
                    "sample {}: response type does not match the task",
                    p.id
                )))
            }
        };
        rows.push(SampleRow { id: p.id, group: p.group, x: p.x, y: p.y, features, response });
    }
    SampleTable::new(stack.names(), task, classes, rows)
}
