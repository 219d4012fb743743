//! CSV writers. All files are UTF-8, comma-separated, with a header row;
//! floats use Rust's shortest round-trip formatting so reruns are
//! byte-identical.

use std::fmt::Display;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use super::JtiMap;
use crate::error::Result;
use crate::quantum::DensityMatrix;

pub const FRINGE_HEADER: &str = "theta,counts_A0B0,counts_A0B1,counts_A1B0,counts_A1B1";

/// One fringe sample: phase and the four detector-pair coincidence counts.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FringeRow {
    pub theta: f64,
    /// `[A0B0, A0B1, A1B0, A1B1]`.
    pub counts: [u64; 4],
}

pub fn write_rows<P: AsRef<Path>>(path: P, header: &str, rows: &[Vec<String>]) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "{header}")?;
    for row in rows {
        writeln!(w, "{}", row.join(","))?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_fringe_csv<P: AsRef<Path>>(path: P, rows: &[FringeRow]) -> Result<()> {
    let body: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            std::iter::once(r.theta.to_string())
                .chain(r.counts.iter().map(|c| c.to_string()))
                .collect()
        })
        .collect();
    write_rows(path, FRINGE_HEADER, &body)
}

/// `key,value` report.
pub fn write_key_value_csv<P: AsRef<Path>>(path: P, pairs: &[(&str, String)]) -> Result<()> {
    let body: Vec<Vec<String>> = pairs
        .iter()
        .map(|(k, v)| vec![k.to_string(), v.clone()])
        .collect();
    write_rows(path, "key,value", &body)
}

/// Formats any displayable value for [`write_key_value_csv`].
pub fn kv<T: Display>(key: &'static str, value: T) -> (&'static str, String) {
    (key, value.to_string())
}

/// Dense JTI grid: header lists slot-B labels, each row starts with the
/// slot-A label.
pub fn write_jti_csv<P: AsRef<Path>>(path: P, map: &JtiMap) -> Result<()> {
    let labels: Vec<String> = map
        .slot_edges
        .windows(2)
        .map(|w| format!("{}..{}", w[0], w[1]))
        .collect();
    let header = std::iter::once("slot_a\\slot_b".to_string())
        .chain(labels.iter().cloned())
        .collect::<Vec<_>>()
        .join(",");
    let body: Vec<Vec<String>> = map
        .counts
        .iter()
        .zip(&labels)
        .map(|(row, label)| {
            std::iter::once(label.clone())
                .chain(row.iter().map(|c| c.to_string()))
                .collect()
        })
        .collect();
    write_rows(path, &header, &body)
}

/// Real part in rows 1-4, imaginary part in rows 5-8.
pub fn write_density_csv<P: AsRef<Path>>(path: P, rho: &DensityMatrix) -> Result<()> {
    let m = rho.matrix();
    let n = m.nrows();
    let mut body = Vec::with_capacity(2 * n);
    for part in ["re", "im"] {
        for i in 0..n {
            let mut row = vec![format!("{part}{i}")];
            for j in 0..n {
                let z = m[(i, j)];
                row.push(if part == "re" { z.re } else { z.im }.to_string());
            }
            body.push(row);
        }
    }
    let header = std::iter::once("part_row".to_string())
        .chain((0..n).map(|j| format!("c{j}")))
        .collect::<Vec<_>>()
        .join(",");
    write_rows(path, &header, &body)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantum::bell_phi_plus;

    #[test]
    fn fringe_csv_layout() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("f.csv");
        write_fringe_csv(
            &p,
            &[FringeRow {
                theta: 0.5,
                counts: [1, 2, 3, 4],
            }],
        )
        .unwrap();
        let text = std::fs::read_to_string(&p).unwrap();
        assert_eq!(text, format!("{FRINGE_HEADER}\n0.5,1,2,3,4\n"));
    }

    #[test]
    fn density_csv_has_eight_rows() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("rho.csv");
        write_density_csv(&p, &bell_phi_plus().density()).unwrap();
        let text = std::fs::read_to_string(&p).unwrap();
        assert_eq!(text.lines().count(), 9);
        assert!(text.lines().nth(1).unwrap().starts_with("re0,0.5"));
    }
}
