//! Shared report schema ("REP1") and the flat-binary field format ("FLD1"):
//! grid values as little-endian f64 with a JSON sidecar carrying the bbox,
//! spacing and region tags.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::fields::{GridSpec, ScalarField};
use crate::{Error, Result};

/// Envelope of every CLI report. Payloads are serialized with stable field
/// order, so identical configurations and seeds produce byte-identical JSON
/// apart from `wall_seconds`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunReport {
    pub header: String,
    pub command: String,
    pub config: serde_json::Value,
    pub payload: serde_json::Value,
    pub artifacts: Vec<String>,
    pub wall_seconds: f64,
}

impl RunReport {
    pub fn new(command: &str, config: serde_json::Value) -> RunReport {
        RunReport {
            header: "REP1".to_string(),
            command: command.to_string(),
            config,
            payload: serde_json::Value::Null,
            artifacts: Vec::new(),
            wall_seconds: 0.0,
        }
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let mut file = std::fs::File::create(path)?;
        let text = serde_json::to_string_pretty(self).map_err(|e| Error::Parse(e.to_string()))?;
        file.write_all(text.as_bytes())?;
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FieldSidecar {
    pub header: String,
    pub x0: f64,
    pub y0: f64,
    pub nx: usize,
    pub ny: usize,
    pub h: f64,
    pub values_file: String,
    pub tags_file: Option<String>,
}

/// Writes `<base>.fld` (f64 LE node values), optional `<base>.tags` (u8 per
/// node) and the `<base>.json` sidecar.
pub fn write_field(base: &Path, field: &ScalarField, tags: Option<&[u8]>) -> Result<()> {
    let values_file = base.with_extension("fld");
    let mut buf = Vec::with_capacity(field.values.len() * 8);
    for v in &field.values {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    std::fs::write(&values_file, buf)?;
    let tags_file = if let Some(t) = tags {
        let tf = base.with_extension("tags");
        std::fs::write(&tf, t)?;
        Some(tf.file_name().unwrap().to_string_lossy().to_string())
    } else {
        None
    };
    let sidecar = FieldSidecar {
        header: "FLD1".to_string(),
        x0: field.grid.x0,
        y0: field.grid.y0,
        nx: field.grid.nx,
        ny: field.grid.ny,
        h: field.grid.h,
        values_file: values_file
            .file_name()
            .unwrap()
            .to_string_lossy()
            .to_string(),
        tags_file,
    };
    let text =
        serde_json::to_string_pretty(&sidecar).map_err(|e| Error::Parse(e.to_string()))?;
    std::fs::write(base.with_extension("json"), text)?;
    Ok(())
}

/// Reads a field written by [`write_field`].
pub fn read_field(base: &Path) -> Result<(ScalarField, Option<Vec<u8>>)> {
    let text = std::fs::read_to_string(base.with_extension("json"))?;
    let sidecar: FieldSidecar =
        serde_json::from_str(&text).map_err(|e| Error::Parse(e.to_string()))?;
    if sidecar.header != "FLD1" {
        return Err(Error::Parse("missing FLD1 header".into()));
    }
    let dir = base.parent().unwrap_or_else(|| Path::new("."));
    let raw = std::fs::read(dir.join(&sidecar.values_file))?;
    if raw.len() != sidecar.nx * sidecar.ny * 8 {
        return Err(Error::Parse("field payload size mismatch".into()));
    }
    let values: Vec<f64> = raw
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    let grid = GridSpec {
        x0: sidecar.x0,
        y0: sidecar.y0,
        nx: sidecar.nx,
        ny: sidecar.ny,
        h: sidecar.h,
    };
    let tags = match &sidecar.tags_file {
        Some(tf) => Some(std::fs::read(dir.join(tf))?),
        None => None,
    };
    let n = grid.len();
    Ok((
        ScalarField {
            grid,
            values,
            mask: vec![true; n],
            coverage: vec![1.0; n],
        },
        tags,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Point;

    #[test]
    fn field_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let grid = GridSpec::covering(Point::new(0.0, 0.0), Point::new(1.0, 0.5), 0.1);
        let mut f = ScalarField::constant(grid, 0.0);
        for (i, v) in f.values.iter_mut().enumerate() {
            *v = i as f64 * 0.25 - 3.0;
        }
        let tags: Vec<u8> = (0..grid.len()).map(|i| (i % 5) as u8).collect();
        let base = dir.path().join("field");
        write_field(&base, &f, Some(&tags)).unwrap();
        let (back, back_tags) = read_field(&base).unwrap();
        assert_eq!(back.values, f.values);
        assert_eq!(back_tags.unwrap(), tags);
    }
}
