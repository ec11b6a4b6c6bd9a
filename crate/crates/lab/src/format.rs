//! Scenario JSON and the two-line snapshot data file.
//!
//! A data file holds the scenario as one line of JSON followed by one line
//! of standard base64: the `N x L` snapshot matrix in row-major order, each
//! entry as little-endian `f64` real part then imaginary part.

use std::fs;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use base64::engine::general_purpose::STANDARD;
use base64::Engine;
use esprit_core::model::ScenarioConfig;
use esprit_core::numerics::ComplexMatrix;
use esprit_core::C64;

use crate::error::{LabError, Result};

pub fn read_scenario(path: &Path) -> Result<ScenarioConfig> {
    let text = fs::read_to_string(path)?;
    let cfg: ScenarioConfig = serde_json::from_str(&text)?;
    cfg.validate()?;
    Ok(cfg)
}

pub fn write_scenario(path: &Path, cfg: &ScenarioConfig) -> Result<()> {
    let mut text = serde_json::to_string_pretty(cfg)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

pub fn encode_payload(y: &ComplexMatrix) -> String {
    let mut bytes = Vec::with_capacity(y.as_slice().len() * 16);
    for z in y.as_slice() {
        bytes.extend_from_slice(&z.re.to_le_bytes());
        bytes.extend_from_slice(&z.im.to_le_bytes());
    }
    STANDARD.encode(bytes)
}

pub fn decode_payload(text: &str, rows: usize, cols: usize) -> Result<ComplexMatrix> {
    let bytes = STANDARD
        .decode(text.trim())
        .map_err(|e| LabError::Format(format!("payload is not base64: {e}")))?;
    if bytes.len() != rows * cols * 16 {
        return Err(LabError::Format(format!(
            "payload holds {} bytes, expected {} for a {rows} x {cols} matrix",
            bytes.len(),
            rows * cols * 16
        )));
    }
    let data = bytes
        .chunks_exact(16)
        .map(|c| {
            let re = f64::from_le_bytes(c[..8].try_into().unwrap());
            let im = f64::from_le_bytes(c[8..].try_into().unwrap());
            C64::new(re, im)
        })
        .collect();
    Ok(ComplexMatrix::from_row_major(rows, cols, data)?)
}

pub fn write_data<W: Write>(mut w: W, cfg: &ScenarioConfig, y: &ComplexMatrix) -> Result<()> {
    if y.shape() != (cfg.n_sensors, cfg.snapshots) {
        return Err(LabError::Format(format!(
            "data is {} x {} but the header declares {} x {}",
            y.rows(),
            y.cols(),
            cfg.n_sensors,
            cfg.snapshots
        )));
    }
    writeln!(w, "{}", serde_json::to_string(cfg)?)?;
    writeln!(w, "{}", encode_payload(y))?;
    Ok(())
}

pub fn read_data<R: Read>(r: R) -> Result<(ScenarioConfig, ComplexMatrix)> {
    let mut lines = BufReader::new(r);
    let mut header = String::new();
    if lines.read_line(&mut header)? == 0 {
        return Err(LabError::Format("empty file".into()));
    }
    let cfg: ScenarioConfig = serde_json::from_str(header.trim())?;
    let mut payload = String::new();
    lines.read_line(&mut payload)?;
    let y = decode_payload(&payload, cfg.n_sensors, cfg.snapshots)?;
    Ok((cfg, y))
}

pub fn save_data(path: &Path, cfg: &ScenarioConfig, y: &ComplexMatrix) -> Result<()> {
    let mut buf = Vec::new();
    write_data(&mut buf, cfg, y)?;
    fs::write(path, buf)?;
    Ok(())
}

pub fn load_data(path: &Path) -> Result<(ScenarioConfig, ComplexMatrix)> {
    read_data(fs::File::open(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg() -> ScenarioConfig {
        ScenarioConfig::noncoherent(&[0.1, 0.5, 0.8], 4, 3, 0.1, 42)
    }

    #[test]
    fn payload_layout_is_row_major_interleaved() {
        let y = ComplexMatrix::from_fn(2, 2, |i, j| C64::new((2 * i + j) as f64, -1.0));
        let text = encode_payload(&y);
        let bytes = STANDARD.decode(&text).unwrap();
        assert_eq!(bytes.len(), 64);
        assert_eq!(f64::from_le_bytes(bytes[16..24].try_into().unwrap()), 1.0);
        assert_eq!(f64::from_le_bytes(bytes[24..32].try_into().unwrap()), -1.0);
        assert_eq!(decode_payload(&text, 2, 2).unwrap(), y);
    }

    #[test]
    fn data_roundtrip_is_bit_exact() {
        let y = ComplexMatrix::from_fn(4, 3, |i, j| C64::new(1.0 / (1.0 + i as f64), (j as f64).sqrt() * 1e-300));
        let mut buf = Vec::new();
        write_data(&mut buf, &cfg(), &y).unwrap();
        let (c, back) = read_data(buf.as_slice()).unwrap();
        assert_eq!(c, cfg());
        assert_eq!(back, y);
    }

    #[test]
    fn wrong_payload_length_rejected() {
        let y = ComplexMatrix::zeros(4, 3);
        let mut buf = Vec::new();
        write_data(&mut buf, &cfg(), &y).unwrap();
        let mut other = cfg();
        other.snapshots = 4;
        let text = String::from_utf8(buf).unwrap();
        let payload = text.lines().nth(1).unwrap();
        let forged = format!("{}\n{}\n", serde_json::to_string(&other).unwrap(), payload);
        assert!(matches!(read_data(forged.as_bytes()), Err(LabError::Format(_))));
        assert!(write_data(Vec::new(), &other, &y).is_err());
    }

    #[test]
    fn scenario_json_field_names() {
        let v = serde_json::to_value(cfg()).unwrap();
        let mut keys: Vec<_> = v.as_object().unwrap().keys().cloned().collect();
        keys.sort();
        assert_eq!(
            keys,
            [
                "core_cov",
                "freqs",
                "group_vectors",
                "groups",
                "n_sensors",
                "noise_sigma",
                "seed",
                "smoothing_p",
                "snapshots",
                "subarray_m"
            ]
        );
        let minimal = r#"{"freqs":[0.2,0.4],"n_sensors":5,"snapshots":10,"noise_sigma":0.5,"seed":1}"#;
        let c: ScenarioConfig = serde_json::from_str(minimal).unwrap();
        assert!(c.groups.is_none() && c.validate().is_ok());
    }
}
