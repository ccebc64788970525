//! Flow-record CSV ingestion, label mapping, and class distributions.
//!
//! The canonical input is a CICIDS2017-style flow export: a header row of
//! feature names (often with stray leading spaces), numeric statistics per
//! flow, and a trailing `Label` column. Identity columns (flow id, IPs,
//! ports, timestamps, protocol) are excluded from the feature matrix.

use std::collections::BTreeMap;
use std::collections::HashSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum FlowDataError {
    #[error("no input files")]
    NoInputFiles,
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("csv error in {path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
    #[error("duplicate header '{name}' in {path} after trimming")]
    DuplicateHeader { path: PathBuf, name: String },
    #[error("label column '{label}' not found in {path}; columns: {columns:?}")]
    LabelColumnMissing {
        path: PathBuf,
        label: String,
        columns: Vec<String>,
    },
    #[error("header mismatch: {path} does not match the first file's header")]
    HeaderMismatch { path: PathBuf },
    #[error("{path}:{line}: expected {expected} cells, found {found}")]
    RowArity {
        path: PathBuf,
        line: u64,
        expected: usize,
        found: usize,
    },
    #[error("{path}:{line}: cannot parse '{cell}' in column '{column}' as a number")]
    ParseNumber {
        path: PathBuf,
        line: u64,
        column: String,
        cell: String,
    },
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("invalid schema: {0}")]
    InvalidSchema(String),
    #[error(
        "{path}: missing feature columns {missing:?} (expected {expected} features, found {found})"
    )]
    MissingFeatureColumns {
        path: PathBuf,
        missing: Vec<String>,
        expected: usize,
        found: usize,
    },
}

/// Attack taxonomy of the capture. Unknown attack labels map to `Other`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum AttackType {
    Benign,
    BruteForceFtp,
    BruteForceSsh,
    Dos,
    Heartbleed,
    WebAttack,
    Infiltration,
    Botnet,
    Ddos,
    PortScan,
    Other,
}

impl AttackType {
    pub const ALL: [AttackType; 11] = [
        AttackType::Benign,
        AttackType::BruteForceFtp,
        AttackType::BruteForceSsh,
        AttackType::Dos,
        AttackType::Heartbleed,
        AttackType::WebAttack,
        AttackType::Infiltration,
        AttackType::Botnet,
        AttackType::Ddos,
        AttackType::PortScan,
        AttackType::Other,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            AttackType::Benign => "Benign",
            AttackType::BruteForceFtp => "BruteForceFTP",
            AttackType::BruteForceSsh => "BruteForceSSH",
            AttackType::Dos => "DoS",
            AttackType::Heartbleed => "Heartbleed",
            AttackType::WebAttack => "WebAttack",
            AttackType::Infiltration => "Infiltration",
            AttackType::Botnet => "Botnet",
            AttackType::Ddos => "DDoS",
            AttackType::PortScan => "PortScan",
            AttackType::Other => "Other",
        }
    }

    /// Prefix match against the taxonomy; specific prefixes are checked
    /// before general ones ("ddos" before "dos").
    fn from_attack_label(normalized: &str) -> AttackType {
        const PREFIXES: [(&str, AttackType); 12] = [
            ("ddos", AttackType::Ddos),
            ("dos", AttackType::Dos),
            ("brute force ftp", AttackType::BruteForceFtp),
            ("brute force ssh", AttackType::BruteForceSsh),
            ("ftp", AttackType::BruteForceFtp),
            ("ssh", AttackType::BruteForceSsh),
            ("heartbleed", AttackType::Heartbleed),
            ("web attack", AttackType::WebAttack),
            ("infiltration", AttackType::Infiltration),
            ("portscan", AttackType::PortScan),
            ("port scan", AttackType::PortScan),
            ("bot", AttackType::Botnet),
        ];
        for (prefix, kind) in PREFIXES {
            if normalized.starts_with(prefix) {
                return kind;
            }
        }
        AttackType::Other
    }
}

/// Column layout of a flow export.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FlowSchema {
    /// Feature column names, whitespace-trimmed, in file order.
    pub feature_names: Vec<String>,
    pub label_column: String,
    /// Columns excluded from the feature matrix (identity, not behavior).
    pub id_columns: Vec<String>,
}

/// Identity columns dropped by default when no schema hint is given.
/// Matching is case-insensitive on trimmed names.
pub const DEFAULT_ID_COLUMNS: [&str; 8] = [
    "Flow ID",
    "Source IP",
    "Destination IP",
    "Source Port",
    "Destination Port",
    "Timestamp",
    "Protocol",
    "External IP",
];

pub const DEFAULT_LABEL_COLUMN: &str = "Label";

impl FlowSchema {
    pub fn new(
        feature_names: Vec<String>,
        label_column: String,
        id_columns: Vec<String>,
    ) -> Result<Self, FlowDataError> {
        let feature_names: Vec<String> =
            feature_names.iter().map(|s| s.trim().to_string()).collect();
        if feature_names.is_empty() {
            return Err(FlowDataError::InvalidSchema("no feature columns".into()));
        }
        let mut seen = HashSet::new();
        for name in &feature_names {
            if !seen.insert(name.clone()) {
                return Err(FlowDataError::InvalidSchema(format!(
                    "duplicate feature name '{name}'"
                )));
            }
        }
        if feature_names.contains(&label_column) {
            return Err(FlowDataError::InvalidSchema(format!(
                "label column '{label_column}' listed among features"
            )));
        }
        Ok(FlowSchema { feature_names, label_column, id_columns })
    }

    pub fn feature_count(&self) -> usize {
        self.feature_names.len()
    }
}

/// One parsed flow: the numeric feature vector plus its labels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowRecord {
    pub features: Vec<f64>,
    pub label_raw: String,
    /// 0 = benign, 1 = attack.
    pub label_binary: u8,
    pub attack_type: AttackType,
    /// True for SMOTE-generated rows; they must never reach a test split.
    #[serde(default)]
    pub synthetic: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub schema: FlowSchema,
    pub rows: Vec<FlowRecord>,
    pub provenance: Vec<PathBuf>,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Row indices per binary class: `(benign, attack)`.
    pub fn class_indices(&self) -> (Vec<usize>, Vec<usize>) {
        let mut benign = Vec::new();
        let mut attack = Vec::new();
        for (i, row) in self.rows.iter().enumerate() {
            if row.label_binary == 0 {
                benign.push(i);
            } else {
                attack.push(i);
            }
        }
        (benign, attack)
    }

    /// New dataset holding the given rows, same schema, preserving order.
    pub fn subset(&self, indices: &[usize]) -> Dataset {
        Dataset {
            schema: self.schema.clone(),
            rows: indices.iter().map(|&i| self.rows[i].clone()).collect(),
            provenance: self.provenance.clone(),
        }
    }
}

/// Class counts and fractions over a labeled dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistributionReport {
    pub count_per_attack_type: BTreeMap<AttackType, usize>,
    pub count_benign: usize,
    pub count_attack: usize,
    pub fraction_benign: f64,
    pub fraction_attack: f64,
}

fn parse_cell(cell: &str) -> Option<f64> {
    let cell = cell.trim();
    if cell.is_empty() || cell.eq_ignore_ascii_case("nan") {
        return Some(f64::NAN);
    }
    if cell.eq_ignore_ascii_case("infinity")
        || cell.eq_ignore_ascii_case("inf")
        || cell.eq_ignore_ascii_case("+infinity")
        || cell.eq_ignore_ascii_case("+inf")
    {
        return Some(f64::INFINITY);
    }
    if cell.eq_ignore_ascii_case("-infinity") || cell.eq_ignore_ascii_case("-inf") {
        return Some(f64::NEG_INFINITY);
    }
    cell.parse::<f64>().ok()
}

fn map_one_label(label_raw: &str, benign_tokens: &HashSet<String>) -> (u8, AttackType) {
    let normalized = label_raw.trim().to_lowercase();
    if benign_tokens.contains(&normalized) {
        (0, AttackType::Benign)
    } else {
        (1, AttackType::from_attack_label(&normalized))
    }
}

fn default_benign_tokens() -> HashSet<String> {
    let mut s = HashSet::new();
    s.insert("benign".to_string());
    s
}

/// Parse one or more flow CSV files into a typed dataset.
///
/// Headers are trimmed; all files must share the first file's header. Feature
/// cells parse as `f64` with `Infinity`/`inf` mapping to +∞ and `NaN`/empty
/// to NaN — cleaning those rows is the preprocessing stage's job, not
/// ingestion's. Labels get the default benign/attack mapping; use
/// [`map_labels`] to re-map with custom benign tokens.
pub fn load_flow_csv(
    paths: &[PathBuf],
    schema_hint: Option<&FlowSchema>,
) -> Result<Dataset, FlowDataError> {
    if paths.is_empty() {
        return Err(FlowDataError::NoInputFiles);
    }
    let benign_tokens = default_benign_tokens();
    let mut schema: Option<FlowSchema> = None;
    let mut first_header: Vec<String> = Vec::new();
    // per-column parse plan for the shared header: Some(feature_slot) to
    // parse, None to skip; label column tracked separately
    let mut feature_cols: Vec<Option<usize>> = Vec::new();
    let mut label_col = 0usize;
    let mut rows = Vec::new();

    for path in paths {
        let file = std::fs::File::open(path).map_err(|source| FlowDataError::Io {
            path: path.clone(),
            source,
        })?;
        // flexible: arity is checked per row below so the error can carry
        // file and line
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(true)
            .flexible(true)
            .from_reader(file);
        let headers: Vec<String> = reader
            .headers()
            .map_err(|source| FlowDataError::Csv { path: path.clone(), source })?
            .iter()
            .map(|h| h.trim().to_string())
            .collect();

        match &schema {
            None => {
                let mut seen = HashSet::new();
                for name in &headers {
                    if !seen.insert(name.clone()) {
                        return Err(FlowDataError::DuplicateHeader {
                            path: path.clone(),
                            name: name.clone(),
                        });
                    }
                }
                let label_name = schema_hint
                    .map(|s| s.label_column.clone())
                    .unwrap_or_else(|| DEFAULT_LABEL_COLUMN.to_string());
                let Some(label_idx) = headers.iter().position(|h| *h == label_name) else {
                    return Err(FlowDataError::LabelColumnMissing {
                        path: path.clone(),
                        label: label_name,
                        columns: headers,
                    });
                };
                let id_columns: Vec<String> = match schema_hint {
                    Some(s) => s.id_columns.clone(),
                    None => DEFAULT_ID_COLUMNS.iter().map(|s| s.to_string()).collect(),
                };
                let is_id = |h: &str| id_columns.iter().any(|id| id.eq_ignore_ascii_case(h));
                let mut names = Vec::new();
                let mut plan = vec![None; headers.len()];
                for (i, h) in headers.iter().enumerate() {
                    if i == label_idx || is_id(h) {
                        continue;
                    }
                    plan[i] = Some(names.len());
                    names.push(h.clone());
                }
                let s = FlowSchema::new(names, label_name, id_columns)?;
                label_col = label_idx;
                feature_cols = plan;
                first_header = headers;
                schema = Some(s);
            }
            Some(_) => {
                if headers != first_header {
                    return Err(FlowDataError::HeaderMismatch { path: path.clone() });
                }
            }
        }
        let schema_ref = schema.as_ref().expect("schema set above");
        let n_features = schema_ref.feature_count();

        for record in reader.records() {
            let record = record.map_err(|source| FlowDataError::Csv {
                path: path.clone(),
                source,
            })?;
            let line = record.position().map_or(0, |p| p.line());
            if record.len() != first_header.len() {
                // tolerate fully blank separator lines, common in exports
                if record.len() == 1 && record[0].trim().is_empty() {
                    continue;
                }
                return Err(FlowDataError::RowArity {
                    path: path.clone(),
                    line,
                    expected: first_header.len(),
                    found: record.len(),
                });
            }
            let mut features = vec![0.0; n_features];
            for (col, cell) in record.iter().enumerate() {
                if let Some(slot) = feature_cols[col] {
                    features[slot] =
                        parse_cell(cell).ok_or_else(|| FlowDataError::ParseNumber {
                            path: path.clone(),
                            line,
                            column: first_header[col].clone(),
                            cell: cell.to_string(),
                        })?;
                }
            }
            let label_raw = record[label_col].trim().to_string();
            let (label_binary, attack_type) = map_one_label(&label_raw, &benign_tokens);
            rows.push(FlowRecord {
                features,
                label_raw,
                label_binary,
                attack_type,
                synthetic: false,
            });
        }
    }

    Ok(Dataset {
        schema: schema.expect("at least one file"),
        rows,
        provenance: paths.to_vec(),
    })
}

/// Re-map binary labels and attack types: a row is benign iff its trimmed,
/// case-insensitive raw label is in `benign_tokens`; attack labels match the
/// taxonomy by prefix, or `Other`.
pub fn map_labels(dataset: &Dataset, benign_tokens: &[String]) -> Dataset {
    let tokens: HashSet<String> = benign_tokens
        .iter()
        .map(|t| t.trim().to_lowercase())
        .collect();
    let mut out = dataset.clone();
    for row in &mut out.rows {
        let (binary, attack) = map_one_label(&row.label_raw, &tokens);
        row.label_binary = binary;
        row.attack_type = attack;
    }
    out
}

/// Exact class counts and fractions. Errors on an empty dataset.
pub fn class_distribution(dataset: &Dataset) -> Result<DistributionReport, FlowDataError> {
    if dataset.is_empty() {
        return Err(FlowDataError::EmptyDataset);
    }
    let mut count_per_attack_type: BTreeMap<AttackType, usize> = BTreeMap::new();
    let mut count_benign = 0;
    let mut count_attack = 0;
    for row in &dataset.rows {
        *count_per_attack_type.entry(row.attack_type).or_insert(0) += 1;
        if row.label_binary == 0 {
            count_benign += 1;
        } else {
            count_attack += 1;
        }
    }
    let total = dataset.len() as f64;
    Ok(DistributionReport {
        count_per_attack_type,
        count_benign,
        count_attack,
        fraction_benign: count_benign as f64 / total,
        fraction_attack: count_attack as f64 / total,
    })
}

/// Row-tolerant feature extraction for batch prediction: the file must carry
/// every requested feature column (extra columns and a label column are
/// fine), but individual malformed rows become per-row errors instead of
/// failing the load.
#[derive(Debug)]
pub struct LenientRows {
    /// Per row: the extracted feature vector, or what was wrong with it.
    pub rows: Vec<Result<Vec<f64>, String>>,
    /// Raw label per row when a label column is present.
    pub labels: Option<Vec<String>>,
}

pub fn load_rows_lenient(
    path: &Path,
    feature_names: &[String],
    label_column: &str,
) -> Result<LenientRows, FlowDataError> {
    let file = std::fs::File::open(path).map_err(|source| FlowDataError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(file);
    let headers: Vec<String> = reader
        .headers()
        .map_err(|source| FlowDataError::Csv { path: path.to_path_buf(), source })?
        .iter()
        .map(|h| h.trim().to_string())
        .collect();
    let mut columns = Vec::with_capacity(feature_names.len());
    let mut missing = Vec::new();
    for name in feature_names {
        match headers.iter().position(|h| h == name) {
            Some(i) => columns.push(i),
            None => missing.push(name.clone()),
        }
    }
    if !missing.is_empty() {
        return Err(FlowDataError::MissingFeatureColumns {
            path: path.to_path_buf(),
            missing,
            expected: feature_names.len(),
            found: headers.len().saturating_sub(1),
        });
    }
    let label_idx = headers.iter().position(|h| h == label_column);
    let mut rows = Vec::new();
    let mut labels = label_idx.map(|_| Vec::new());
    for record in reader.records() {
        let record =
            record.map_err(|source| FlowDataError::Csv { path: path.to_path_buf(), source })?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() == 1 && record[0].trim().is_empty() {
            continue;
        }
        let row = if record.len() != headers.len() {
            Err(format!("line {line}: expected {} cells, found {}", headers.len(), record.len()))
        } else {
            columns
                .iter()
                .map(|&c| {
                    parse_cell(&record[c]).ok_or_else(|| {
                        format!("line {line}: cannot parse '{}' in '{}'", &record[c], headers[c])
                    })
                })
                .collect::<Result<Vec<f64>, String>>()
        };
        if let (Some(labels), Some(idx)) = (labels.as_mut(), label_idx) {
            labels.push(record.get(idx).unwrap_or("").trim().to_string());
        }
        rows.push(row);
    }
    Ok(LenientRows { rows, labels })
}

/// Write a dataset back out as a flow CSV (features plus the label column).
/// Floats use shortest-roundtrip formatting, so load(write(ds)) rebuilds the
/// same feature matrix bit for bit.
pub fn write_flow_csv(dataset: &Dataset, path: &Path) -> Result<(), FlowDataError> {
    let file = std::fs::File::create(path).map_err(|source| FlowDataError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut writer = csv::Writer::from_writer(file);
    let mut header: Vec<&str> = dataset.schema.feature_names.iter().map(String::as_str).collect();
    header.push(&dataset.schema.label_column);
    writer
        .write_record(&header)
        .map_err(|source| FlowDataError::Csv { path: path.to_path_buf(), source })?;
    let mut cells: Vec<String> = Vec::with_capacity(header.len());
    for row in &dataset.rows {
        cells.clear();
        for v in &row.features {
            if v.is_nan() {
                cells.push("NaN".to_string());
            } else if *v == f64::INFINITY {
                cells.push("Infinity".to_string());
            } else if *v == f64::NEG_INFINITY {
                cells.push("-Infinity".to_string());
            } else {
                cells.push(format!("{v}"));
            }
        }
        cells.push(row.label_raw.clone());
        writer
            .write_record(cells.iter())
            .map_err(|source| FlowDataError::Csv { path: path.to_path_buf(), source })?;
    }
    writer
        .flush()
        .map_err(|source| FlowDataError::Io { path: path.to_path_buf(), source })?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn write_tmp(content: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(content.as_bytes()).unwrap();
        f
    }

    fn load_one(content: &str) -> Dataset {
        let f = write_tmp(content);
        load_flow_csv(&[f.path().to_path_buf()], None).unwrap()
    }

    #[test]
    fn headers_are_trimmed() {
        let ds = load_one(" Flow Duration, Label\n5.0,BENIGN\n");
        assert_eq!(ds.schema.feature_names, vec!["Flow Duration"]);
        assert_eq!(ds.schema.label_column, "Label");
    }

    #[test]
    fn infinity_cells_parse_to_infinity() {
        let ds = load_one("Flow Bytes/s,Label\nInfinity,BENIGN\ninf,DoS Hulk\n");
        assert_eq!(ds.rows[0].features[0], f64::INFINITY);
        assert_eq!(ds.rows[1].features[0], f64::INFINITY);
    }

    #[test]
    fn nan_and_empty_cells_parse_to_nan() {
        let ds = load_one("a,b,Label\nNaN,,BENIGN\n");
        assert!(ds.rows[0].features[0].is_nan());
        assert!(ds.rows[0].features[1].is_nan());
    }

    #[test]
    fn empty_file_list_errors() {
        let err = load_flow_csv(&[], None).unwrap_err();
        assert!(matches!(err, FlowDataError::NoInputFiles));
        assert_eq!(err.to_string(), "no input files");
    }

    #[test]
    fn id_columns_are_excluded() {
        let ds = load_one(
            "Flow ID,Source IP,Destination Port,Flow Duration,Label\nx,1.2.3.4,80,7.5,BENIGN\n",
        );
        assert_eq!(ds.schema.feature_names, vec!["Flow Duration"]);
        assert_eq!(ds.rows[0].features, vec![7.5]);
    }

    #[test]
    fn duplicate_trimmed_headers_error() {
        let f = write_tmp("a, a,Label\n1,2,BENIGN\n");
        let err = load_flow_csv(&[f.path().to_path_buf()], None).unwrap_err();
        assert!(matches!(err, FlowDataError::DuplicateHeader { .. }));
    }

    #[test]
    fn missing_label_column_errors_with_column_list() {
        let f = write_tmp("a,b\n1,2\n");
        let err = load_flow_csv(&[f.path().to_path_buf()], None).unwrap_err();
        match err {
            FlowDataError::LabelColumnMissing { columns, .. } => {
                assert_eq!(columns, vec!["a", "b"]);
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn header_mismatch_across_files_errors() {
        let f1 = write_tmp("a,Label\n1,BENIGN\n");
        let f2 = write_tmp("b,Label\n1,BENIGN\n");
        let err =
            load_flow_csv(&[f1.path().to_path_buf(), f2.path().to_path_buf()], None).unwrap_err();
        assert!(matches!(err, FlowDataError::HeaderMismatch { .. }));
    }

    #[test]
    fn arity_mismatch_reports_file_and_line() {
        let f = write_tmp("a,b,Label\n1,2,BENIGN\n1,2\n");
        let err = load_flow_csv(&[f.path().to_path_buf()], None).unwrap_err();
        match err {
            FlowDataError::RowArity { line, expected, found, .. } => {
                assert_eq!(line, 3);
                assert_eq!(expected, 3);
                assert_eq!(found, 2);
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn garbage_numeric_cell_errors() {
        let f = write_tmp("a,Label\nnot_a_number,BENIGN\n");
        let err = load_flow_csv(&[f.path().to_path_buf()], None).unwrap_err();
        assert!(matches!(err, FlowDataError::ParseNumber { .. }));
    }

    #[test]
    fn loading_twice_is_identical() {
        let f = write_tmp("a,b,Label\n1,2,BENIGN\n3,4,DDoS\n");
        let d1 = load_flow_csv(&[f.path().to_path_buf()], None).unwrap();
        let d2 = load_flow_csv(&[f.path().to_path_buf()], None).unwrap();
        assert_eq!(d1, d2);
    }

    #[test]
    fn files_concatenate_in_path_order() {
        let f1 = write_tmp("a,Label\n1,BENIGN\n");
        let f2 = write_tmp("a,Label\n2,BENIGN\n");
        let ds = load_flow_csv(&[f1.path().to_path_buf(), f2.path().to_path_buf()], None).unwrap();
        assert_eq!(ds.rows[0].features[0], 1.0);
        assert_eq!(ds.rows[1].features[0], 2.0);
    }

    #[test]
    fn label_mapping_rules() {
        let ds = load_one("a,Label\n1,BENIGN\n2,DDoS\n3,SomeNewAttack\n4,FTP-Patator\n5,Web Attack XSS\n6,Bot\n7,DoS Hulk\n8,PortScan\n");
        let expect = [
            (0, AttackType::Benign),
            (1, AttackType::Ddos),
            (1, AttackType::Other),
            (1, AttackType::BruteForceFtp),
            (1, AttackType::WebAttack),
            (1, AttackType::Botnet),
            (1, AttackType::Dos),
            (1, AttackType::PortScan),
        ];
        for (row, (bin, kind)) in ds.rows.iter().zip(expect) {
            assert_eq!(row.label_binary, bin, "label {:?}", row.label_raw);
            assert_eq!(row.attack_type, kind, "label {:?}", row.label_raw);
        }
    }

    #[test]
    fn custom_benign_tokens_remap() {
        let ds = load_one("a,Label\n1,normal\n2,BENIGN\n");
        assert_eq!(ds.rows[0].label_binary, 1); // default tokens: attack
        let remapped = map_labels(&ds, &["normal".to_string()]);
        assert_eq!(remapped.rows[0].label_binary, 0);
        assert_eq!(remapped.rows[0].attack_type, AttackType::Benign);
        assert_eq!(remapped.rows[1].label_binary, 1);
    }

    #[test]
    fn binary_label_iff_benign_type() {
        let ds = load_one("a,Label\n1,BENIGN\n2,DDoS\n3,zzz\n");
        for row in &ds.rows {
            assert_eq!(row.label_binary == 0, row.attack_type == AttackType::Benign);
        }
    }

    #[test]
    fn distribution_small_arithmetic() {
        let ds = load_one("a,Label\n1,BENIGN\n2,BENIGN\n3,BENIGN\n4,DDoS\n");
        let report = class_distribution(&ds).unwrap();
        assert_eq!(report.count_benign, 3);
        assert_eq!(report.count_attack, 1);
        assert_eq!(report.fraction_benign, 0.75);
        assert_eq!(report.count_per_attack_type[&AttackType::Ddos], 1);
        assert!((report.fraction_benign + report.fraction_attack - 1.0).abs() < 1e-12);
    }

    #[test]
    fn distribution_all_benign() {
        let ds = load_one("a,Label\n1,BENIGN\n2,BENIGN\n");
        let report = class_distribution(&ds).unwrap();
        assert_eq!(report.count_attack, 0);
        assert_eq!(report.fraction_attack, 0.0);
    }

    #[test]
    fn distribution_counts_partition_the_dataset() {
        let ds = load_one("a,Label\n1,BENIGN\n2,DoS x\n3,Bot\n4,weird\n");
        let report = class_distribution(&ds).unwrap();
        assert_eq!(report.count_benign + report.count_attack, ds.len());
        let type_total: usize = report.count_per_attack_type.values().sum();
        assert_eq!(type_total, ds.len());
    }

    #[test]
    fn distribution_empty_errors() {
        let ds = load_one("a,Label\n1,BENIGN\n");
        let empty = ds.subset(&[]);
        assert!(matches!(class_distribution(&empty), Err(FlowDataError::EmptyDataset)));
    }

    #[test]
    fn lenient_loader_tolerates_bad_rows() {
        let f = write_tmp("extra, a,b,Label\nx,1,2,BENIGN\nx,oops,2,DDoS\nx,3\nx,4,5,DoS\n");
        let names = vec!["a".to_string(), "b".to_string()];
        let out = load_rows_lenient(f.path(), &names, "Label").unwrap();
        assert_eq!(out.rows.len(), 4);
        assert_eq!(out.rows[0].as_ref().unwrap(), &vec![1.0, 2.0]);
        assert!(out.rows[1].as_ref().unwrap_err().contains("oops"));
        assert!(out.rows[2].as_ref().unwrap_err().contains("cells"));
        assert_eq!(out.rows[3].as_ref().unwrap(), &vec![4.0, 5.0]);
        assert_eq!(out.labels.as_ref().unwrap()[0], "BENIGN");
    }

    #[test]
    fn lenient_loader_requires_feature_columns() {
        let f = write_tmp("a,Label\n1,BENIGN\n");
        let names = vec!["a".to_string(), "missing_col".to_string()];
        let err = load_rows_lenient(f.path(), &names, "Label").unwrap_err();
        match err {
            FlowDataError::MissingFeatureColumns { missing, expected, found, .. } => {
                assert_eq!(missing, vec!["missing_col"]);
                assert_eq!(expected, 2);
                assert_eq!(found, 1);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn lenient_loader_without_label_column() {
        let f = write_tmp("a,b\n1,2\n");
        let names = vec!["a".to_string(), "b".to_string()];
        let out = load_rows_lenient(f.path(), &names, "Label").unwrap();
        assert!(out.labels.is_none());
        assert_eq!(out.rows.len(), 1);
    }

    #[test]
    fn csv_roundtrip_preserves_features() {
        let ds = load_one("a,b,Label\n1.5,-2.25e-3,BENIGN\nInfinity,NaN,DDoS\n");
        let tmp = tempfile::NamedTempFile::new().unwrap();
        write_flow_csv(&ds, tmp.path()).unwrap();
        let back = load_flow_csv(&[tmp.path().to_path_buf()], None).unwrap();
        assert_eq!(back.schema.feature_names, ds.schema.feature_names);
        for (a, b) in ds.rows.iter().zip(&back.rows) {
            for (x, y) in a.features.iter().zip(&b.features) {
                assert!(x.to_bits() == y.to_bits() || (x.is_nan() && y.is_nan()));
            }
            assert_eq!(a.label_raw, b.label_raw);
        }
    }
}
