//! Lattice densities on disk: a JSON sidecar holding `dims`, `spacing`,
//! `origin` and the data file, which stores `dims[0]·dims[1]·dims[2]`
//! values row-major with `z` fastest, either as little-endian IEEE-754
//! doubles (`f64le`) or as comma- or newline-separated text (`csv`).

use std::path::{Path, PathBuf};

use nled_core::continuous::GriddedDensity;
use nled_core::Vec3;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Encoding {
    F64le,
    Csv,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sidecar {
    pub dims: [usize; 3],
    pub spacing: [f64; 3],
    pub origin: [f64; 3],
    /// Relative to the sidecar's directory.
    pub data: PathBuf,
    pub encoding: Encoding,
}

pub fn load(sidecar: &Path) -> Result<GriddedDensity, CliError> {
    let text = std::fs::read_to_string(sidecar)
        .map_err(|e| CliError::io(&format!("cannot read sidecar {}", sidecar.display()), e))?;
    let meta: Sidecar = serde_json::from_str(&text)
        .map_err(|e| CliError::Config(format!("invalid sidecar {}: {e}", sidecar.display())))?;
    let data = sidecar.parent().unwrap_or(Path::new(".")).join(&meta.data);
    let values = match meta.encoding {
        Encoding::F64le => read_f64le(&data)?,
        Encoding::Csv => read_csv(&data)?,
    };
    GriddedDensity::new(
        meta.dims,
        meta.spacing,
        Vec3::from_array(meta.origin),
        values,
    )
    .map_err(|e| CliError::Config(format!("lattice {}: {e}", data.display())))
}

fn read_f64le(path: &Path) -> Result<Vec<f64>, CliError> {
    let bytes = std::fs::read(path)
        .map_err(|e| CliError::io(&format!("cannot read {}", path.display()), e))?;
    if bytes.len() % 8 != 0 {
        return Err(CliError::Config(format!(
            "{} holds {} bytes, not a whole number of doubles",
            path.display(),
            bytes.len()
        )));
    }
    Ok(bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
        .collect())
}

fn read_csv(path: &Path) -> Result<Vec<f64>, CliError> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_path(path)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    let mut out = Vec::new();
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        for field in rec.iter().filter(|f| !f.is_empty()) {
            let v = field.parse::<f64>().map_err(|_| {
                CliError::Config(format!(
                    "{} record {}: `{field}` is not a number",
                    path.display(),
                    line + 1
                ))
            })?;
            out.push(v);
        }
    }
    Ok(out)
}

/// Writes `values` and a sidecar next to each other; `data` is the data file name.
pub fn save(sidecar: &Path, meta: &Sidecar, values: &[f64]) -> Result<(), CliError> {
    let data = sidecar.parent().unwrap_or(Path::new(".")).join(&meta.data);
    match meta.encoding {
        Encoding::F64le => {
            let bytes: Vec<u8> = values.iter().flat_map(|v| v.to_le_bytes()).collect();
            std::fs::write(&data, bytes)
                .map_err(|e| CliError::io(&format!("cannot write {}", data.display()), e))?;
        }
        Encoding::Csv => {
            let text: String = values.iter().map(|v| format!("{v:e}\n")).collect();
            std::fs::write(&data, text)
                .map_err(|e| CliError::io(&format!("cannot write {}", data.display()), e))?;
        }
    }
    let json = serde_json::to_string_pretty(meta).expect("sidecar serializes");
    std::fs::write(sidecar, json)
        .map_err(|e| CliError::io(&format!("cannot write {}", sidecar.display()), e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn meta(encoding: Encoding, data: &str) -> Sidecar {
        Sidecar {
            dims: [3, 2, 2],
            spacing: [0.5, 1.0, 2.0],
            origin: [-1.0, 0.0, 1.0],
            data: data.into(),
            encoding,
        }
    }

    #[test]
    fn binary_and_text_agree() {
        let dir = tempfile::tempdir().unwrap();
        let values: Vec<f64> = (0..12).map(|i| 0.1 * i as f64 - 0.3).collect();
        let bin = dir.path().join("rho.json");
        save(&bin, &meta(Encoding::F64le, "rho.bin"), &values).unwrap();
        let txt = dir.path().join("rho_txt.json");
        save(&txt, &meta(Encoding::Csv, "rho.csv"), &values).unwrap();
        let a = load(&bin).unwrap();
        let b = load(&txt).unwrap();
        assert_eq!(a.values(), values.as_slice());
        assert_eq!(a, b);
        // z fastest: node (i, j, k) = (1, 0, 1) is entry 1·4 + 0·2 + 1
        assert_eq!(a.value(Vec3::new(-0.5, 0.0, 3.0)), values[5]);
    }

    #[test]
    fn rejects_malformed_lattices() {
        let dir = tempfile::tempdir().unwrap();
        let short = dir.path().join("short.json");
        save(&short, &meta(Encoding::F64le, "short.bin"), &[1.0; 5]).unwrap();
        assert!(load(&short).is_err());
        std::fs::write(dir.path().join("bad.csv"), "1,2,x\n").unwrap();
        let bad = dir.path().join("bad.json");
        std::fs::write(
            &bad,
            serde_json::to_string(&meta(Encoding::Csv, "bad.csv")).unwrap(),
        )
        .unwrap();
        assert!(load(&bad).is_err());
        std::fs::write(dir.path().join("odd.bin"), [0u8; 13]).unwrap();
        let odd = dir.path().join("odd.json");
        std::fs::write(
            &odd,
            serde_json::to_string(&meta(Encoding::F64le, "odd.bin")).unwrap(),
        )
        .unwrap();
        assert!(load(&odd).is_err());
        assert!(load(&dir.path().join("missing.json")).is_err());
    }
}
