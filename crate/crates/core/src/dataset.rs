//! File formats: records as CSV (header row of attribute names, one
//! 0-based category code per column) and schemas as JSON `{"a": [..]}`.

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::mechanism::check_record;
use crate::types::AttributeSchema;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dataset {
    pub names: Vec<String>,
    pub records: Vec<Vec<u32>>,
}

impl Dataset {
    /// Column names default to `a1..ak`.
    pub fn new(records: Vec<Vec<u32>>, k: usize) -> Dataset {
        Dataset {
            names: (1..=k).map(|i| format!("a{i}")).collect(),
            records,
        }
    }

    pub fn validate(&self, schema: &AttributeSchema) -> Result<()> {
        if self.names.len() != schema.k() {
            return Err(Error::Dataset(format!(
                "{} columns but the schema has {} attributes",
                self.names.len(),
                schema.k()
            )));
        }
        for (row, r) in self.records.iter().enumerate() {
            check_record(r, schema.sizes()).map_err(|e| Error::Dataset(format!("row {}: {e}", row + 1)))?;
        }
        Ok(())
    }

    pub fn read_csv<R: Read>(reader: R) -> Result<Dataset> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let names: Vec<String> = rdr.headers()?.iter().map(str::to_owned).collect();
        let mut records = Vec::new();
        for (row, rec) in rdr.records().enumerate() {
            let rec = rec?;
            let values = rec
                .iter()
                .map(|f| {
                    f.parse::<u32>()
                        .map_err(|_| Error::Dataset(format!("row {}: {f:?} is not a category code", row + 1)))
                })
                .collect::<Result<Vec<u32>>>()?;
            if values.len() != names.len() {
                return Err(Error::Dataset(format!(
                    "row {}: {} fields, header has {}",
                    row + 1,
                    values.len(),
                    names.len()
                )));
            }
            records.push(values);
        }
        Ok(Dataset { names, records })
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(&self.names)?;
        for r in &self.records {
            w.write_record(r.iter().map(|v| v.to_string()))?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Dataset> {
        Dataset::read_csv(File::open(path)?)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        self.write_csv(File::create(path)?)
    }
}

pub fn load_schema(path: &Path) -> Result<AttributeSchema> {
    Ok(serde_json::from_reader(File::open(path)?)?)
}

pub fn save_schema(schema: &AttributeSchema, path: &Path) -> Result<()> {
    std::fs::write(path, serde_json::to_string_pretty(schema)?)?;
    Ok(())
}
