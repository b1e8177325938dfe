//! Dataset file format.
//!
//! Labeled datasets are exchanged as CSV with the header
//! `trace_id,label,step,<channel_1>,...,<channel_d>` and one row per
//! (trace, step). Labels are +1/-1 and must be constant within a trace id;
//! every trace must cover steps `0..T-1` exactly once. Externally produced
//! files (real simulator exports, human labels) are ingested through the
//! same reader.

use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::path::Path;

use crate::trace::{DataError, Label, LabeledDataset, Trace};

/// Write a labeled dataset in the CSV exchange format.
pub fn write_dataset<W: Write>(writer: W, dataset: &LabeledDataset) -> Result<(), DataError> {
    let mut w = csv::Writer::from_writer(writer);
    let mut header = vec!["trace_id".to_string(), "label".to_string(), "step".to_string()];
    header.extend(dataset.channel_names().iter().cloned());
    w.write_record(&header).map_err(csv_err)?;
    for (id, (trace, label)) in dataset.iter().enumerate() {
        for t in 0..trace.len() {
            let mut record = vec![id.to_string(), label.to_int().to_string(), t.to_string()];
            for ch in 0..trace.num_channels() {
                record.push(format_float(trace.value(ch, t)));
            }
            w.write_record(&record).map_err(csv_err)?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_dataset_file(path: &Path, dataset: &LabeledDataset) -> Result<(), DataError> {
    let file = std::fs::File::create(path)?;
    write_dataset(std::io::BufWriter::new(file), dataset)
}

/// Read a labeled dataset from the CSV exchange format.
///
/// Traces appear in order of first occurrence of their id; rows within a
/// trace may arrive in any step order.
pub fn read_dataset<R: Read>(reader: R) -> Result<LabeledDataset, DataError> {
    let mut r = csv::Reader::from_reader(reader);
    let headers = r.headers().map_err(csv_err)?.clone();
    let cols: Vec<&str> = headers.iter().collect();
    if cols.len() < 4 || cols[0] != "trace_id" || cols[1] != "label" || cols[2] != "step" {
        return Err(DataError::Format(
            "header must start with trace_id,label,step and list at least one channel".to_string(),
        ));
    }
    let channel_names: Vec<String> = cols[3..].iter().map(|s| s.to_string()).collect();
    let d = channel_names.len();

    struct Partial {
        order: usize,
        label: i64,
        rows: BTreeMap<usize, Vec<f64>>,
    }
    let mut partials: BTreeMap<String, Partial> = BTreeMap::new();
    let mut next_order = 0usize;

    for (line, record) in r.records().enumerate() {
        let record = record.map_err(csv_err)?;
        if record.len() != 3 + d {
            return Err(DataError::Format(format!(
                "row {}: expected {} fields, got {}",
                line + 2,
                3 + d,
                record.len()
            )));
        }
        let id = record[0].to_string();
        let label: i64 = record[1]
            .parse()
            .map_err(|_| DataError::Format(format!("row {}: bad label `{}`", line + 2, &record[1])))?;
        let step: usize = record[2]
            .parse()
            .map_err(|_| DataError::Format(format!("row {}: bad step `{}`", line + 2, &record[2])))?;
        let mut values = Vec::with_capacity(d);
        for k in 0..d {
            let v: f64 = record[3 + k].parse().map_err(|_| {
                DataError::Format(format!(
                    "row {}: bad value `{}` in channel {}",
                    line + 2,
                    &record[3 + k],
                    channel_names[k]
                ))
            })?;
            values.push(v);
        }
        let entry = partials.entry(id.clone()).or_insert_with(|| {
            let p = Partial {
                order: next_order,
                label,
                rows: BTreeMap::new(),
            };
            p
        });
        if entry.rows.is_empty() {
            entry.order = entry.order.min(next_order);
            next_order += 1;
        }
        if entry.label != label {
            return Err(DataError::Format(format!(
                "trace `{id}` has inconsistent labels {} and {label}",
                entry.label
            )));
        }
        if entry.rows.insert(step, values).is_some() {
            return Err(DataError::Format(format!(
                "trace `{id}` repeats step {step}"
            )));
        }
    }

    let mut ordered: Vec<(String, Partial)> = partials.into_iter().collect();
    ordered.sort_by_key(|(_, p)| p.order);

    let mut items = Vec::with_capacity(ordered.len());
    for (id, partial) in ordered {
        let steps = partial.rows.len();
        for (expected, key) in partial.rows.keys().enumerate() {
            if *key != expected {
                return Err(DataError::Format(format!(
                    "trace `{id}` is missing step {expected}"
                )));
            }
        }
        let mut channels = vec![Vec::with_capacity(steps); d];
        for (_, values) in partial.rows {
            for (ch, v) in values.into_iter().enumerate() {
                channels[ch].push(v);
            }
        }
        let trace = Trace::new(channels, channel_names.clone())?;
        items.push((trace, Label::from_int(partial.label)?));
    }
    LabeledDataset::new(items)
}

pub fn read_dataset_file(path: &Path) -> Result<LabeledDataset, DataError> {
    let file = std::fs::File::open(path)?;
    read_dataset(std::io::BufReader::new(file))
}

/// Shortest decimal form that parses back to the identical f64.
pub fn format_float(v: f64) -> String {
    format!("{v}")
}

fn csv_err(e: csv::Error) -> DataError {
    DataError::Format(e.to_string())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> LabeledDataset {
        let names = vec!["latency".to_string(), "backlog".to_string()];
        let t1 = Trace::new(vec![vec![10.0, 20.5], vec![1.0, 2.0]], names.clone()).unwrap();
        let t2 = Trace::new(vec![vec![99.25, 3.0], vec![0.0, 4.75]], names).unwrap();
        LabeledDataset::new(vec![(t1, Label::Positive), (t2, Label::Negative)]).unwrap()
    }

    #[test]
    fn round_trip_preserves_values_exactly() {
        let ds = sample();
        let mut buf = Vec::new();
        write_dataset(&mut buf, &ds).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("trace_id,label,step,latency,backlog\n"));
        let back = read_dataset(buf.as_slice()).unwrap();
        assert_eq!(back.len(), 2);
        for i in 0..2 {
            assert_eq!(back.label(i), ds.label(i));
            assert_eq!(back.trace(i), ds.trace(i));
        }
    }

    #[test]
    fn inconsistent_labels_rejected() {
        let text = "trace_id,label,step,x\n0,1,0,1.0\n0,-1,1,2.0\n";
        let err = read_dataset(text.as_bytes()).unwrap_err();
        assert!(matches!(err, DataError::Format(_)));
    }

    #[test]
    fn missing_step_rejected() {
        let text = "trace_id,label,step,x\n0,1,0,1.0\n0,1,2,2.0\n";
        let err = read_dataset(text.as_bytes()).unwrap_err();
        assert!(matches!(err, DataError::Format(_)));
    }
}
