//! Flow CSV, feature CSV, model JSON and synth config files.

use std::fs::File;
use std::io::{self, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use botflow_core::dataset::{Dataset, DatasetError, DatasetMeta, RowKey};
use botflow_core::flow::{FlowHeader, FlowTable, HeaderError, Rejection, CANONICAL_COLUMNS};
use botflow_core::model::{ModelArtifact, ModelError};
use botflow_core::synth::SynthConfig;

#[derive(Debug, thiserror::Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    Open { path: PathBuf, source: io::Error },
    #[error("{path}: {source}")]
    Csv { path: PathBuf, source: csv::Error },
    #[error("{path}: {source}")]
    Header { path: PathBuf, source: HeaderError },
    #[error("{path}: feature header must start with window_index,src_addr,label")]
    FeatureHeader { path: PathBuf },
    #[error("{path}: line {line}: {reason}")]
    FeatureRow { path: PathBuf, line: u64, reason: String },
    #[error("{path}: {source}")]
    Dataset { path: PathBuf, source: DatasetError },
    #[error("{path}: {source}")]
    Json { path: PathBuf, source: serde_json::Error },
    #[error("{path}: {source}")]
    Model { path: PathBuf, source: ModelError },
}

fn open(path: &Path) -> Result<BufReader<File>, IoError> {
    File::open(path).map(BufReader::new).map_err(|source| IoError::Open {
        path: path.to_path_buf(),
        source,
    })
}

fn create(path: &Path) -> Result<BufWriter<File>, IoError> {
    File::create(path).map(BufWriter::new).map_err(|source| IoError::Open {
        path: path.to_path_buf(),
        source,
    })
}

/// Streams a flow CSV into a table. Bad rows are counted and skipped; only a
/// missing file or a header without the canonical columns is fatal.
pub fn load_scenario(path: &Path) -> Result<FlowTable, IoError> {
    read_flows(open(path)?, path)
}

pub fn read_flows<R: Read>(reader: R, path: &Path) -> Result<FlowTable, IoError> {
    let csv_err = |source| IoError::Csv {
        path: path.to_path_buf(),
        source,
    };
    let mut rdr = csv::ReaderBuilder::new().flexible(true).from_reader(reader);
    let header = {
        let names = rdr.headers().map_err(csv_err)?;
        FlowHeader::from_names(names.iter()).map_err(|source| IoError::Header {
            path: path.to_path_buf(),
            source,
        })?
    };
    let mut table = FlowTable::new(path.display().to_string());
    let mut record = csv::StringRecord::new();
    loop {
        match rdr.read_record(&mut record) {
            Ok(false) => break,
            Ok(true) => {
                let fields: Vec<&str> = record.iter().collect();
                table.push_row(&fields, &header);
            }
            Err(e) if matches!(e.kind(), csv::ErrorKind::Utf8 { .. }) => {
                let row = table.parse_stats.total() + 1;
                log::warn!("{}: row {row}: not valid UTF-8", path.display());
                table.parse_stats.record_reject(row, Rejection::Malformed);
            }
            Err(e) => return Err(csv_err(e)),
        }
    }
    Ok(table)
}

pub fn write_flows<W: Write>(writer: W, table: &FlowTable) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(CANONICAL_COLUMNS)?;
    for r in &table.records {
        w.write_record(r.to_fields())?;
    }
    w.flush()?;
    Ok(())
}

pub fn save_flows(path: &Path, table: &FlowTable) -> Result<(), IoError> {
    write_flows(create(path)?, table).map_err(|source| IoError::Csv {
        path: path.to_path_buf(),
        source,
    })
}

const KEY_COLUMNS: [&str; 3] = ["window_index", "src_addr", "label"];

/// Writes `window_index,src_addr,label,<features>`. Floats use the shortest
/// representation that parses back to the same value.
pub fn write_features<W: Write>(writer: W, ds: &Dataset) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let mut header: Vec<&str> = KEY_COLUMNS.to_vec();
    header.extend(ds.feature_names().iter().map(String::as_str));
    w.write_record(&header)?;
    let mut fields: Vec<String> = Vec::with_capacity(header.len());
    for (i, row) in ds.rows().enumerate() {
        fields.clear();
        match ds.meta.keys.get(i) {
            Some(k) => {
                fields.push(k.window_index.to_string());
                fields.push(k.src_addr.clone());
            }
            None => {
                fields.push(String::new());
                fields.push(String::new());
            }
        }
        fields.push(ds.labels()[i].to_string());
        fields.extend(row.iter().map(|v| format!("{v}")));
        w.write_record(&fields)?;
    }
    w.flush()?;
    Ok(())
}

pub fn save_features(path: &Path, ds: &Dataset) -> Result<(), IoError> {
    write_features(create(path)?, ds).map_err(|source| IoError::Csv {
        path: path.to_path_buf(),
        source,
    })
}

pub fn read_features<R: Read>(reader: R, path: &Path) -> Result<Dataset, IoError> {
    let csv_err = |source| IoError::Csv {
        path: path.to_path_buf(),
        source,
    };
    let mut rdr = csv::Reader::from_reader(reader);
    let headers = rdr.headers().map_err(csv_err)?.clone();
    if headers.len() < 3 || headers.iter().take(3).ne(KEY_COLUMNS) {
        return Err(IoError::FeatureHeader {
            path: path.to_path_buf(),
        });
    }
    let names: Vec<String> = headers.iter().skip(3).map(str::to_string).collect();
    let d = names.len();
    let mut values = Vec::new();
    let mut labels = Vec::new();
    let mut keys = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(csv_err)?;
        let line = i as u64 + 2;
        let bad = |reason: String| IoError::FeatureRow {
            path: path.to_path_buf(),
            line,
            reason,
        };
        if rec.len() != d + 3 {
            return Err(bad(format!("expected {} fields, found {}", d + 3, rec.len())));
        }
        let window_index = rec[0]
            .parse()
            .map_err(|_| bad(format!("bad window_index {:?}", &rec[0])))?;
        keys.push(RowKey {
            window_index,
            src_addr: rec[1].to_string(),
        });
        labels.push(match &rec[2] {
            "0" => 0,
            "1" => 1,
            other => return Err(bad(format!("label must be 0 or 1, found {other:?}"))),
        });
        for (j, cell) in rec.iter().skip(3).enumerate() {
            let v: f64 = cell
                .trim()
                .parse()
                .map_err(|_| bad(format!("{}: not a number: {cell:?}", names[j])))?;
            values.push(v);
        }
    }
    let meta = DatasetMeta {
        scenario: path.display().to_string(),
        window: None,
        keys,
    };
    Dataset::new(names, values, labels, meta).map_err(|source| IoError::Dataset {
        path: path.to_path_buf(),
        source,
    })
}

pub fn load_features(path: &Path) -> Result<Dataset, IoError> {
    read_features(open(path)?, path)
}

pub fn model_to_json(model: &ModelArtifact) -> serde_json::Result<String> {
    let mut s = serde_json::to_string_pretty(model)?;
    s.push('\n');
    Ok(s)
}

pub fn model_from_json(json: &str, path: &Path) -> Result<ModelArtifact, IoError> {
    let model: ModelArtifact = serde_json::from_str(json).map_err(|source| IoError::Json {
        path: path.to_path_buf(),
        source,
    })?;
    model.validate().map_err(|source| IoError::Model {
        path: path.to_path_buf(),
        source,
    })?;
    Ok(model)
}

pub fn save_model(path: &Path, model: &ModelArtifact) -> Result<(), IoError> {
    let json = model_to_json(model).map_err(|source| IoError::Json {
        path: path.to_path_buf(),
        source,
    })?;
    let mut w = create(path)?;
    w.write_all(json.as_bytes())
        .and_then(|()| w.flush())
        .map_err(|source| IoError::Open {
            path: path.to_path_buf(),
            source,
        })
}

pub fn load_model(path: &Path) -> Result<ModelArtifact, IoError> {
    let mut s = String::new();
    open(path)?.read_to_string(&mut s).map_err(|source| IoError::Open {
        path: path.to_path_buf(),
        source,
    })?;
    model_from_json(&s, path)
}

/// Reads a synth config; fields left out take their defaults.
pub fn load_synth_config(path: &Path) -> Result<SynthConfig, IoError> {
    serde_json::from_reader(open(path)?).map_err(|source| IoError::Json {
        path: path.to_path_buf(),
        source,
    })
}
