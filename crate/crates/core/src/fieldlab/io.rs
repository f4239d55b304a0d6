use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::fieldlab::field::Field;
use crate::fieldlab::grid::GridSpec;

pub const FORMAT_NAME: &str = "onsager-lab-field";
pub const FORMAT_VERSION: u32 = 1;
const LAYOUT: &str = "component-major, last axis fastest";

/// Self-describing header: one JSON line ahead of the payload.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FieldHeader {
    pub format: String,
    pub version: u32,
    pub byte_order: String,
    pub layout: String,
    pub components: usize,
    pub grid: GridSpec,
}

impl FieldHeader {
    fn for_field(field: &Field) -> Self {
        Self {
            format: FORMAT_NAME.into(),
            version: FORMAT_VERSION,
            byte_order: "little-endian".into(),
            layout: LAYOUT.into(),
            components: field.components(),
            grid: field.grid().clone(),
        }
    }

    fn check(&self) -> Result<()> {
        if self.format != FORMAT_NAME || self.version != FORMAT_VERSION {
            return Err(LabError::InvalidField(format!(
                "unsupported field format {} v{}",
                self.format, self.version
            )));
        }
        if self.byte_order != "little-endian" {
            return Err(LabError::InvalidField(format!("unsupported byte order {}", self.byte_order)));
        }
        let axes = self.grid.axes().to_vec();
        // Re-validate the grid instead of trusting the file.
        GridSpec::from_axes(self.grid.has_time(), axes)?;
        Ok(())
    }
}

/// Writes `field` as a JSON header line followed by raw little-endian f64 values.
pub fn write_binary(field: &Field, path: &Path) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer(&mut w, &FieldHeader::for_field(field))?;
    w.write_all(b"\n")?;
    for v in field.values() {
        w.write_all(&v.to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_binary(path: &Path) -> Result<Field> {
    let mut r = BufReader::new(File::open(path)?);
    let mut line = String::new();
    r.read_line(&mut line)?;
    let header: FieldHeader = serde_json::from_str(line.trim_end())?;
    header.check()?;
    let n = header.grid.node_count() * header.components;
    let mut bytes = Vec::with_capacity(n * 8);
    r.read_to_end(&mut bytes)?;
    if bytes.len() != n * 8 {
        return Err(LabError::InvalidField(format!(
            "payload has {} bytes, header implies {}",
            bytes.len(),
            n * 8
        )));
    }
    let values = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
        .collect();
    Field::new(header.grid, header.components, values)
}

/// CSV export: `# <json header>`, a column line `c0,c1,...`, then one row per node.
pub fn write_csv(field: &Field, path: &Path) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(b"# ")?;
    serde_json::to_writer(&mut w, &FieldHeader::for_field(field))?;
    w.write_all(b"\n")?;
    let cols: Vec<String> = (0..field.components()).map(|c| format!("c{c}")).collect();
    writeln!(w, "{}", cols.join(","))?;
    let n = field.len();
    for i in 0..n {
        let row: Vec<String> = (0..field.components())
            .map(|c| format!("{:e}", field.values()[c * n + i]))
            .collect();
        writeln!(w, "{}", row.join(","))?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_csv(path: &Path) -> Result<Field> {
    let r = BufReader::new(File::open(path)?);
    let mut lines = r.lines();
    let first = lines.next().transpose()?.unwrap_or_default();
    let json = first
        .strip_prefix("# ")
        .ok_or_else(|| LabError::InvalidField("missing header line".into()))?;
    let header: FieldHeader = serde_json::from_str(json)?;
    header.check()?;
    lines.next().transpose()?;
    let n = header.grid.node_count();
    let k = header.components;
    let mut values = vec![0.0; n * k];
    let mut count = 0;
    for (i, line) in lines.enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        if i >= n {
            return Err(LabError::InvalidField("more rows than nodes".into()));
        }
        let parts: Vec<&str> = line.split(',').collect();
        if parts.len() != k {
            return Err(LabError::InvalidField(format!("row {i} has {} columns", parts.len())));
        }
        for (c, p) in parts.iter().enumerate() {
            values[c * n + i] = p
                .trim()
                .parse()
                .map_err(|e| LabError::InvalidField(format!("row {i}: {e}")))?;
        }
        count += 1;
    }
    if count != n {
        return Err(LabError::InvalidField(format!("{count} rows, expected {n}")));
    }
    Field::new(header.grid, k, values)
}

/// Picks the format from the extension: `.csv` is CSV, anything else binary.
pub fn write_field(field: &Field, path: &Path) -> Result<()> {
    if is_csv(path) {
        write_csv(field, path)
    } else {
        write_binary(field, path)
    }
}

pub fn read_field(path: &Path) -> Result<Field> {
    if is_csv(path) {
        read_csv(path)
    } else {
        read_binary(path)
    }
}

fn is_csv(path: &Path) -> bool {
    path.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn binary_and_csv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let g = GridSpec::space_time(&[8, 12], &[0.5, 1.0]).unwrap();
        let f = Field::vector_from_fn(&g, 2, |x, out| {
            out[0] = x[0].sin() + 1e-17;
            out[1] = x[1] * 3.0 - 1.0 / 3.0;
        })
        .unwrap();
        let bin = dir.path().join("f.bin");
        write_field(&f, &bin).unwrap();
        assert_eq!(read_field(&bin).unwrap(), f);
        let csv = dir.path().join("f.csv");
        write_field(&f, &csv).unwrap();
        assert_eq!(read_field(&csv).unwrap(), f);
    }

    #[test]
    fn truncated_payload_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let g = GridSpec::stationary(&[16], &[1.0]).unwrap();
        let f = Field::constant(&g, 1, 2.0).unwrap();
        let p = dir.path().join("f.bin");
        write_binary(&f, &p).unwrap();
        let bytes = std::fs::read(&p).unwrap();
        std::fs::write(&p, &bytes[..bytes.len() - 3]).unwrap();
        assert!(read_binary(&p).is_err());
    }
}
