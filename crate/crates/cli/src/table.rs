//! Datasets as CSV: one point per row, one column per coordinate, and an
//! optional `label` column holding cluster indices `1..=L`.

use std::io::{Read, Write};

use uopc::cone_model::DataSet;

use crate::error::{CliError, CliResult};

pub const LABEL_COLUMN: &str = "label";

pub fn write_dataset<W: Write>(data: &DataSet, out: W) -> CliResult<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header: Vec<String> = (1..=data.dim()).map(|i| format!("x{i}")).collect();
    if data.labels().is_some() {
        header.push(LABEL_COLUMN.into());
    }
    w.write_record(&header)?;
    for i in 0..data.len() {
        let mut row: Vec<String> = data.point(i).iter().map(|v| v.to_string()).collect();
        if let Some(labels) = data.labels() {
            row.push(labels[i].to_string());
        }
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_dataset<R: Read>(input: R) -> CliResult<DataSet> {
    let mut r = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input);
    let header = r.headers()?.clone();
    let label_col = header.iter().position(|h| h == LABEL_COLUMN);
    let dim = header.len() - usize::from(label_col.is_some());
    if dim == 0 {
        return Err(CliError::Data("dataset has no coordinate columns".into()));
    }
    let mut points = Vec::new();
    let mut labels = Vec::new();
    for (line, record) in r.records().enumerate() {
        let record = record?;
        let mut point = Vec::with_capacity(dim);
        for (c, field) in record.iter().enumerate() {
            if Some(c) == label_col {
                let l: usize = field
                    .parse()
                    .map_err(|_| CliError::Data(format!("row {}: bad label {field:?}", line + 1)))?;
                labels.push(l);
            } else {
                let v: f64 = field
                    .parse()
                    .map_err(|_| CliError::Data(format!("row {}: bad value {field:?}", line + 1)))?;
                point.push(v);
            }
        }
        points.push(point);
    }
    if points.is_empty() {
        return Err(CliError::Data("dataset has no rows".into()));
    }
    let (labels, l) = match label_col {
        Some(_) => {
            let l = labels.iter().copied().max().unwrap_or(1);
            (Some(labels), l)
        }
        None => (None, 1),
    };
    Ok(DataSet::from_points(&points, labels, l)?)
}
