//! Observations stored row-major with their cone, plus CSV ingestion.

use std::io::{Read, Write};

use rand::seq::SliceRandom;

use crate::cone::{ConeElement, ConeSpec};
use crate::error::{Error, Result};
use crate::rng::stream;

/// Ordered sample of cone elements.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    spec: ConeSpec,
    coords: Vec<f64>,
}

impl Dataset {
    /// Builds a dataset from row-major coordinates, validating every row.
    pub fn from_flat(spec: ConeSpec, coords: Vec<f64>) -> Result<Self> {
        let d = spec.dimension();
        if !coords.len().is_multiple_of(d) {
            return Err(Error::Input(format!(
                "{} coordinates do not split into rows of {d}",
                coords.len()
            )));
        }
        for (i, row) in coords.chunks_exact(d).enumerate() {
            spec.check_element(row).map_err(|e| Error::Parse {
                row: i + 1,
                message: e.to_string(),
            })?;
        }
        Ok(Dataset { spec, coords })
    }

    pub fn from_elements(spec: ConeSpec, elements: &[ConeElement]) -> Result<Self> {
        let coords = elements
            .iter()
            .flat_map(|e| e.coords().iter().copied())
            .collect();
        Self::from_flat(spec, coords)
    }

    /// Caller guarantees every row passes `ConeSpec::check_element`.
    pub(crate) fn from_flat_trusted(spec: ConeSpec, coords: Vec<f64>) -> Self {
        debug_assert_eq!(coords.len() % spec.dimension(), 0);
        Dataset { spec, coords }
    }

    pub fn spec(&self) -> &ConeSpec {
        &self.spec
    }

    pub fn len(&self) -> usize {
        self.coords.len() / self.spec.dimension()
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let d = self.spec.dimension();
        &self.coords[i * d..(i + 1) * d]
    }

    pub fn rows(&self) -> std::slice::ChunksExact<'_, f64> {
        self.coords.chunks_exact(self.spec.dimension())
    }

    pub fn as_flat(&self) -> &[f64] {
        &self.coords
    }

    /// Multiplies every observation by `c > 0`.
    pub fn scaled(&self, c: f64) -> Result<Dataset> {
        if !(c > 0.0 && c.is_finite()) {
            return Err(Error::Input(format!("scale must be positive, got {c}")));
        }
        Dataset::from_flat(self.spec, self.coords.iter().map(|v| v * c).collect())
    }

    /// Rows in a uniformly random order drawn from the stream `seed`.
    pub fn shuffled(&self, seed: u64) -> Dataset {
        let mut order: Vec<usize> = (0..self.len()).collect();
        order.shuffle(&mut stream(seed));
        let coords = order
            .iter()
            .flat_map(|&i| self.row(i).iter().copied())
            .collect();
        Dataset {
            spec: self.spec,
            coords,
        }
    }

    /// Reads comma-separated rows of `d` numbers. NaN and infinite values are
    /// rejected with the offending (1-based, data-only) row number.
    pub fn read_csv<R: Read>(reader: R, spec: ConeSpec, has_header: bool) -> Result<Self> {
        let d = spec.dimension();
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(has_header)
            .trim(csv::Trim::All)
            .flexible(true)
            .from_reader(reader);
        let mut coords = Vec::new();
        for (i, rec) in rdr.records().enumerate() {
            let row = i + 1;
            let rec = rec.map_err(|e| Error::Parse {
                row,
                message: e.to_string(),
            })?;
            if rec.len() != d {
                return Err(Error::Parse {
                    row,
                    message: format!("expected {d} columns, found {}", rec.len()),
                });
            }
            let start = coords.len();
            for field in rec.iter() {
                let v: f64 = field.parse().map_err(|_| Error::Parse {
                    row,
                    message: format!("not a number: {field:?}"),
                })?;
                coords.push(v);
            }
            spec.check_element(&coords[start..])
                .map_err(|e| Error::Parse {
                    row,
                    message: e.to_string(),
                })?;
        }
        Ok(Dataset { spec, coords })
    }

    /// Writes one observation per row with shortest round-trip formatting.
    pub fn write_csv<W: Write>(&self, writer: W, header: bool) -> Result<()> {
        let mut w = std::io::BufWriter::new(writer);
        let d = self.spec.dimension();
        if header {
            let names: Vec<String> = (0..d).map(|j| format!("x{j}")).collect();
            writeln!(w, "{}", names.join(","))?;
        }
        for row in self.rows() {
            for (j, v) in row.iter().enumerate() {
                if j > 0 {
                    w.write_all(b",")?;
                }
                write!(w, "{v:?}")?;
            }
            w.write_all(b"\n")?;
        }
        w.flush()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_round_trip_is_exact() {
        let spec = ConeSpec::euclidean(2).unwrap();
        let ds = Dataset::from_flat(spec, vec![0.1, -2.5e-300, 1e17, 3.0]).unwrap();
        let mut buf = Vec::new();
        ds.write_csv(&mut buf, true).unwrap();
        assert_eq!(
            String::from_utf8(buf.clone()).unwrap(),
            "x0,x1\n0.1,-2.5e-300\n1e17,3.0\n"
        );
        let back = Dataset::read_csv(&buf[..], spec, true).unwrap();
        assert_eq!(back, ds);
    }

    #[test]
    fn csv_rejects_non_finite_with_row_number() {
        let spec = ConeSpec::euclidean(2).unwrap();
        let err = Dataset::read_csv("1,2\n3,NaN\n".as_bytes(), spec, false).unwrap_err();
        assert_eq!(err.class().exit_code(), 2);
        assert!(matches!(err, Error::Parse { row: 2, .. }));
        let err = Dataset::read_csv("1,2\n3,4\ninf,1\n".as_bytes(), spec, false).unwrap_err();
        assert!(matches!(err, Error::Parse { row: 3, .. }));
    }

    #[test]
    fn csv_rejects_ragged_rows() {
        let spec = ConeSpec::euclidean(2).unwrap();
        let err = Dataset::read_csv("1,2\n3\n".as_bytes(), spec, false).unwrap_err();
        assert!(matches!(err, Error::Parse { row: 2, .. }));
        let err = Dataset::read_csv("1,x\n".as_bytes(), spec, false).unwrap_err();
        assert!(matches!(err, Error::Parse { row: 1, .. }));
    }

    #[test]
    fn shuffle_permutes_rows() {
        let spec = ConeSpec::euclidean(2).unwrap();
        let coords: Vec<f64> = (0..200).map(f64::from).collect();
        let ds = Dataset::from_flat(spec, coords).unwrap();
        let sh = ds.shuffled(3);
        assert_ne!(sh, ds);
        assert_eq!(sh, ds.shuffled(3));
        let mut rows: Vec<Vec<f64>> = sh.rows().map(<[f64]>::to_vec).collect();
        rows.sort_by(|a, b| a[0].total_cmp(&b[0]));
        assert_eq!(rows, ds.rows().map(<[f64]>::to_vec).collect::<Vec<_>>());
    }

    #[test]
    fn max_cone_rejects_negative() {
        let err = Dataset::read_csv("1\n-1\n".as_bytes(), ConeSpec::max_cone(), false).unwrap_err();
        assert!(matches!(err, Error::Parse { row: 2, .. }));
    }
}
