use super::{shared_basis, RadialShape};
use crate::{Error, Result};
use serde::{Deserialize, Serialize};
use std::path::Path;

const HEADER: &str = "#ballstab-shape 1";

#[derive(Serialize, Deserialize)]
struct ShapeRecord {
    dim: usize,
    l_max: usize,
    basis: String,
    coeffs: Vec<f64>,
}

/// Serialize as the versioned header line followed by one JSON record.
pub fn shape_to_string(shape: &RadialShape) -> Result<String> {
    let rec = ShapeRecord {
        dim: shape.dim,
        l_max: shape.l_max(),
        basis: "real_harmonics".into(),
        coeffs: shape.coeffs.clone(),
    };
    Ok(format!("{HEADER}\n{}\n", serde_json::to_string_pretty(&rec)?))
}

pub fn shape_from_str(text: &str) -> Result<RadialShape> {
    let body = text
        .trim_start()
        .strip_prefix(HEADER)
        .ok_or_else(|| Error::Parse(format!("missing header line `{HEADER}`")))?;
    let rec: ShapeRecord = serde_json::from_str(body)?;
    if rec.basis != "real_harmonics" {
        return Err(Error::Parse(format!("unknown basis `{}`", rec.basis)));
    }
    let basis = shared_basis(rec.dim, rec.l_max)?;
    RadialShape::new(basis, rec.coeffs)
}

pub fn write_shape(path: &Path, shape: &RadialShape) -> Result<()> {
    std::fs::write(path, shape_to_string(shape)?)?;
    Ok(())
}

pub fn read_shape(path: &Path) -> Result<RadialShape> {
    shape_from_str(&std::fs::read_to_string(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roundtrip() {
        let b = shared_basis(3, 3).unwrap();
        let s = RadialShape::from_modes(b, &[(2, -1, 0.1), (3, 3, -0.02)]).unwrap();
        let back = shape_from_str(&shape_to_string(&s).unwrap()).unwrap();
        assert_eq!(back.coeffs, s.coeffs);
        assert_eq!(back.dim, 3);
        assert!(shape_from_str("{}").is_err());
        assert!(shape_from_str("#ballstab-shape 1\n{\"dim\":2,\"l_max\":1,\"basis\":\"x\",\"coeffs\":[0,0,0]}").is_err());
    }
}
