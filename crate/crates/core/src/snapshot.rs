//! Snapshot matrices: storage, validation, file formats and train/validation
//! splitting.
//!
//! A snapshot matrix holds one full-order state per column and one degree of
//! freedom (cell, or particle coordinate) per row. Column `i` is sampled at
//! `t0 + (i + 1) * dt`, i.e. `t0` is the time of the initial condition, which
//! itself is not stored.
//!
//! # File formats
//!
//! Binary (`ROMSNAP1`), all little-endian:
//!
//! ```text
//! magic  "ROMSNAP1"        8 bytes
//! Nc     u64
//! Nt     u64
//! t0     f64
//! dt     f64
//! field  u8                0 = EulerianScalar, 1..3 = Lagrangian X/Y/Z
//! name   u16 length + UTF-8 bytes
//! values Nc*Nt f64         column-major (one snapshot after another)
//! ```
//!
//! CSV: header `t,<name>_0,...,<name>_{Nc-1}` followed by one row per time
//! instant, every number written with 17 significant digits. The field tag is
//! not stored in CSV and reads back as [`FieldKind::EulerianScalar`].

use std::fmt;
use std::path::Path;

use nalgebra::DMatrix;

use crate::binio::{read_file, write_file, ByteReader, ByteWriter};
use crate::error::{Result, RomError};

pub const SNAPSHOT_MAGIC: &[u8; 8] = b"ROMSNAP1";

/// Relative tolerance on time-stamp spacing when reading CSV.
pub const TIME_SPACING_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FieldKind {
    EulerianScalar,
    LagrangianX,
    LagrangianY,
    LagrangianZ,
}

impl FieldKind {
    pub fn tag(self) -> u8 {
        match self {
            FieldKind::EulerianScalar => 0,
            FieldKind::LagrangianX => 1,
            FieldKind::LagrangianY => 2,
            FieldKind::LagrangianZ => 3,
        }
    }

    pub fn from_tag(tag: u8) -> Option<Self> {
        match tag {
            0 => Some(FieldKind::EulerianScalar),
            1 => Some(FieldKind::LagrangianX),
            2 => Some(FieldKind::LagrangianY),
            3 => Some(FieldKind::LagrangianZ),
            _ => None,
        }
    }
}

impl fmt::Display for FieldKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            FieldKind::EulerianScalar => "eulerian",
            FieldKind::LagrangianX => "lagrangian-x",
            FieldKind::LagrangianY => "lagrangian-y",
            FieldKind::LagrangianZ => "lagrangian-z",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SnapshotFormat {
    Binary,
    Csv,
}

impl SnapshotFormat {
    /// `.csv` selects CSV; anything else is binary.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("csv") => SnapshotFormat::Csv,
            _ => SnapshotFormat::Binary,
        }
    }
}

/// Time history of a full-order field, one snapshot per column.
///
/// Immutable after construction. Derived matrices (validation windows,
/// predictions) may have fewer than two columns; operations that need a
/// sampled series check their own minimum length.
#[derive(Debug, Clone, PartialEq)]
pub struct SnapshotMatrix {
    values: DMatrix<f64>,
    t0: f64,
    dt: f64,
    field: FieldKind,
    name: String,
}

impl SnapshotMatrix {
    pub fn new(
        values: DMatrix<f64>,
        t0: f64,
        dt: f64,
        field: FieldKind,
        name: impl Into<String>,
    ) -> Result<Self> {
        if values.nrows() == 0 {
            return Err(RomError::InvalidInput(
                "snapshot matrix needs at least one degree of freedom".into(),
            ));
        }
        if !(dt.is_finite() && dt > 0.0) {
            return Err(RomError::InvalidInput(format!("dt must be positive, got {dt}")));
        }
        if !t0.is_finite() {
            return Err(RomError::InvalidInput(format!("t0 must be finite, got {t0}")));
        }
        if let Some(idx) = values.iter().position(|v| !v.is_finite()) {
            let (r, c) = (idx % values.nrows(), idx / values.nrows());
            return Err(RomError::InvalidInput(format!(
                "non-finite value {} at row {r}, column {c}",
                values[(r, c)]
            )));
        }
        let name = name.into();
        if name.len() > u16::MAX as usize {
            return Err(RomError::InvalidInput("name longer than 65535 bytes".into()));
        }
        Ok(Self { values, t0, dt, field, name })
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    pub fn into_values(self) -> DMatrix<f64> {
        self.values
    }

    pub fn n_dof(&self) -> usize {
        self.values.nrows()
    }

    pub fn n_time(&self) -> usize {
        self.values.ncols()
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn field(&self) -> FieldKind {
        self.field
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    /// Time stamp of column `i`.
    pub fn time(&self, i: usize) -> f64 {
        self.t0 + (i as f64 + 1.0) * self.dt
    }

    pub fn times(&self) -> Vec<f64> {
        (0..self.n_time()).map(|i| self.time(i)).collect()
    }

    /// Same metadata, new values (must keep the row count).
    pub fn with_values(&self, values: DMatrix<f64>) -> Result<Self> {
        if values.nrows() != self.n_dof() {
            return Err(RomError::Dimension(format!(
                "replacement values have {} rows, expected {}",
                values.nrows(),
                self.n_dof()
            )));
        }
        Self::new(values, self.t0, self.dt, self.field, self.name.clone())
    }

    /// Columns `start..start + len`, with `t0` shifted so time stamps are
    /// preserved.
    pub fn columns(&self, start: usize, len: usize) -> Result<Self> {
        if start + len > self.n_time() {
            return Err(RomError::Dimension(format!(
                "column range {start}..{} exceeds {} columns",
                start + len,
                self.n_time()
            )));
        }
        Ok(Self {
            values: self.values.columns(start, len).into_owned(),
            t0: self.t0 + start as f64 * self.dt,
            dt: self.dt,
            field: self.field,
            name: self.name.clone(),
        })
    }

    /// Column-wise concatenation; `other` must continue this matrix's grid.
    pub fn concat(&self, other: &SnapshotMatrix) -> Result<Self> {
        if other.n_dof() != self.n_dof() {
            return Err(RomError::Dimension(format!(
                "cannot concatenate {} rows with {} rows",
                self.n_dof(),
                other.n_dof()
            )));
        }
        let mut values = DMatrix::zeros(self.n_dof(), self.n_time() + other.n_time());
        values.columns_mut(0, self.n_time()).copy_from(&self.values);
        values.columns_mut(self.n_time(), other.n_time()).copy_from(&other.values);
        Self::new(values, self.t0, self.dt, self.field, self.name.clone())
    }

    pub fn load(path: &Path, format: SnapshotFormat) -> Result<Self> {
        match format {
            SnapshotFormat::Binary => Self::from_binary(&read_file(path)?),
            SnapshotFormat::Csv => {
                let bytes = read_file(path)?;
                let text = std::str::from_utf8(&bytes)
                    .map_err(|e| RomError::at_byte(e.valid_up_to(), "CSV file is not valid UTF-8"))?;
                Self::from_csv(text)
            }
        }
    }

    pub fn save(&self, path: &Path, format: SnapshotFormat) -> Result<()> {
        match format {
            SnapshotFormat::Binary => write_file(path, &self.to_binary()),
            SnapshotFormat::Csv => write_file(path, self.to_csv()?.as_bytes()),
        }
    }

    pub fn to_binary(&self) -> Vec<u8> {
        let mut w = ByteWriter::default();
        w.bytes(SNAPSHOT_MAGIC);
        w.u64(self.n_dof() as u64);
        w.u64(self.n_time() as u64);
        w.f64(self.t0);
        w.f64(self.dt);
        w.u8(self.field.tag());
        w.u16(self.name.len() as u16);
        w.bytes(self.name.as_bytes());
        w.f64_slice(self.values.as_slice());
        w.buf
    }

    pub fn from_binary(bytes: &[u8]) -> Result<Self> {
        let mut r = ByteReader::new(bytes);
        r.expect_magic(SNAPSHOT_MAGIC)?;
        let n_dof = r.usize("Nc")?;
        let n_time = r.usize("Nt")?;
        let t0_at = r.position();
        let t0 = r.f64("t0")?;
        if !t0.is_finite() {
            return Err(RomError::at_byte(t0_at, format!("t0 is not finite ({t0})")));
        }
        let dt_at = r.position();
        let dt = r.f64("dt")?;
        if !(dt.is_finite() && dt > 0.0) {
            return Err(RomError::at_byte(dt_at, format!("dt must be positive, got {dt}")));
        }
        let tag_at = r.position();
        let tag = r.u8("field tag")?;
        let field = FieldKind::from_tag(tag)
            .ok_or_else(|| RomError::at_byte(tag_at, format!("unknown field tag {tag}")))?;
        let name_len = r.u16("name length")? as usize;
        let name_at = r.position();
        let name = std::str::from_utf8(r.take(name_len, "name")?)
            .map_err(|_| RomError::at_byte(name_at, "name is not valid UTF-8"))?
            .to_owned();
        if n_dof == 0 {
            return Err(RomError::at_byte(8, "Nc must be at least 1"));
        }
        let count = n_dof.checked_mul(n_time).ok_or_else(|| RomError::at_byte(8, "Nc*Nt overflows"))?;
        let data =
            r.f64_vec(count, "snapshot values", |i| format!("row {}, column {}", i % n_dof, i / n_dof))?;
        r.finish("snapshot values")?;
        Self::new(DMatrix::from_vec(n_dof, n_time, data), t0, dt, field, name)
    }

    pub fn to_csv(&self) -> Result<String> {
        if self.name.contains([',', '\n', '\r']) {
            return Err(RomError::InvalidInput(format!("name {:?} cannot be written to CSV", self.name)));
        }
        let mut out = String::from("t");
        for j in 0..self.n_dof() {
            out.push_str(&format!(",{}_{j}", self.name));
        }
        out.push('\n');
        for i in 0..self.n_time() {
            out.push_str(&format!("{:.16e}", self.time(i)));
            for v in self.values.column(i).iter() {
                out.push_str(&format!(",{v:.16e}"));
            }
            out.push('\n');
        }
        Ok(out)
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let (_, header) = lines.next().ok_or_else(|| RomError::format("line 1", "empty CSV file"))?;
        let cols: Vec<&str> = header.split(',').map(str::trim).collect();
        if cols.first() != Some(&"t") {
            return Err(RomError::format("line 1, column 1", "first header field must be 't'"));
        }
        if cols.len() < 2 {
            return Err(RomError::format("line 1", "no degree-of-freedom columns"));
        }
        let name = match cols[1].rsplit_once('_') {
            Some((name, "0")) => name.to_owned(),
            _ => {
                return Err(RomError::format(
                    "line 1, column 2",
                    format!("expected '<name>_0', found {:?}", cols[1]),
                ))
            }
        };
        for (j, c) in cols.iter().enumerate().skip(1) {
            if *c != format!("{name}_{}", j - 1) {
                return Err(RomError::format(
                    format!("line 1, column {}", j + 1),
                    format!("expected '{name}_{}', found {c:?}", j - 1),
                ));
            }
        }
        let n_dof = cols.len() - 1;

        let mut times = Vec::new();
        let mut data = Vec::new();
        for (lineno, line) in lines {
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != n_dof + 1 {
                return Err(RomError::format(
                    format!("line {}", lineno + 1),
                    format!("expected {} fields, found {}", n_dof + 1, fields.len()),
                ));
            }
            for (j, f) in fields.iter().enumerate() {
                let loc = || format!("line {}, column {}", lineno + 1, j + 1);
                let v: f64 = f
                    .trim()
                    .parse()
                    .map_err(|_| RomError::format(loc(), format!("cannot parse {f:?} as a number")))?;
                if !v.is_finite() {
                    let what = if j == 0 {
                        "time stamp".to_owned()
                    } else {
                        format!("value for row {} (time index {})", j - 1, times.len())
                    };
                    return Err(RomError::format(loc(), format!("non-finite {what}: {v}")));
                }
                if j == 0 {
                    times.push(v);
                } else {
                    data.push(v);
                }
            }
        }
        let n_time = times.len();
        if n_time < 2 {
            return Err(RomError::format("line 2", "CSV needs at least two time rows to infer dt"));
        }
        let dt = (times[n_time - 1] - times[0]) / (n_time - 1) as f64;
        if !(dt > 0.0) {
            return Err(RomError::format("line 2", "time stamps must increase"));
        }
        for (i, w) in times.windows(2).enumerate() {
            if ((w[1] - w[0]) - dt).abs() > TIME_SPACING_TOLERANCE * dt {
                return Err(RomError::format(
                    format!("data row {}", i + 2),
                    format!("non-uniform time spacing {} (expected {dt})", w[1] - w[0]),
                ));
            }
        }
        // rows in the file are time instants, i.e. matrix columns
        let values = DMatrix::from_vec(n_dof, n_time, data);
        Self::new(values, times[0] - dt, dt, FieldKind::EulerianScalar, name)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SplitSpec {
    pub n_train: usize,
    pub n_validation: usize,
}

/// Training set = first `n_train` columns, validation = the following
/// `n_validation` columns.
pub fn split_train_validation(
    s: &SnapshotMatrix,
    spec: SplitSpec,
) -> Result<(SnapshotMatrix, SnapshotMatrix)> {
    if spec.n_train + spec.n_validation > s.n_time() {
        return Err(RomError::InvalidInput(format!(
            "split {} + {} exceeds {} snapshots",
            spec.n_train,
            spec.n_validation,
            s.n_time()
        )));
    }
    Ok((s.columns(0, spec.n_train)?, s.columns(spec.n_train, spec.n_validation)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn small() -> SnapshotMatrix {
        SnapshotMatrix::new(
            DMatrix::from_vec(3, 2, vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]),
            0.0,
            0.01,
            FieldKind::EulerianScalar,
            "eps",
        )
        .unwrap()
    }

    #[test]
    fn binary_payload_is_column_major() {
        let bytes = small().to_binary();
        let back = SnapshotMatrix::from_binary(&bytes).unwrap();
        assert_eq!(back.values().column(0).as_slice(), &[1.0, 2.0, 3.0]);
        assert_eq!(back.values().column(1).as_slice(), &[4.0, 5.0, 6.0]);
        // header: 8 magic + 8 + 8 + 8 + 8 + 1 + 2 + 3 name bytes
        assert_eq!(bytes.len(), 46 + 6 * 8);
    }

    #[test]
    fn csv_infers_dt_from_time_column() {
        let text = "t,dof0,dof1\n0.5,1,2\n0.75,3,4\n";
        // header names must follow <name>_<j>
        assert!(SnapshotMatrix::from_csv(text).is_err());
        let text = "t,dof_0,dof_1\n0.5,1,2\n0.75,3,4\n";
        let s = SnapshotMatrix::from_csv(text).unwrap();
        assert_eq!((s.n_dof(), s.n_time()), (2, 2));
        assert_eq!(s.dt(), 0.25);
        assert_eq!(s.time(0), 0.5);
        assert_eq!(s.name(), "dof");
        assert_eq!(s.values().column(1).as_slice(), &[3.0, 4.0]);
    }

    #[test]
    fn nan_in_csv_is_located() {
        let text = "t,u_0,u_1\n0.1,1,2\n0.2,NaN,4\n";
        let err = SnapshotMatrix::from_csv(text).unwrap_err().to_string();
        assert!(err.contains("line 3, column 2"), "{err}");
        assert!(err.contains("row 0"), "{err}");
    }

    #[test]
    fn nan_in_binary_is_located() {
        let mut bytes = small().to_binary();
        let off = bytes.len() - 8 * 2; // row 1, column 1
        bytes[off..off + 8].copy_from_slice(&f64::NAN.to_le_bytes());
        let err = SnapshotMatrix::from_binary(&bytes).unwrap_err().to_string();
        assert!(err.contains(&format!("byte {off}")), "{err}");
        assert!(err.contains("row 1, column 1"), "{err}");
    }

    #[test]
    fn truncated_payload_rejected() {
        let bytes = small().to_binary();
        let err = SnapshotMatrix::from_binary(&bytes[..bytes.len() - 3]).unwrap_err();
        assert!(err.to_string().contains("header declares 6 values"), "{err}");
        let mut long = small().to_binary();
        long.push(0);
        assert!(SnapshotMatrix::from_binary(&long).is_err());
    }

    #[test]
    fn bad_magic_and_tag() {
        let mut bytes = small().to_binary();
        bytes[0] = b'X';
        assert!(SnapshotMatrix::from_binary(&bytes).is_err());
        let mut bytes = small().to_binary();
        bytes[40] = 9;
        let err = SnapshotMatrix::from_binary(&bytes).unwrap_err().to_string();
        assert!(err.contains("byte 40"), "{err}");
    }

    #[test]
    fn non_uniform_time_rejected() {
        let text = "t,u_0\n0.1,1\n0.2,2\n0.35,3\n";
        assert!(SnapshotMatrix::from_csv(text).is_err());
    }

    #[test]
    fn binary_to_csv_conversion() {
        let dir = tempfile::tempdir().unwrap();
        let s = small();
        let bin = dir.path().join("s.bin");
        let csv = dir.path().join("s.csv");
        s.save(&bin, SnapshotFormat::Binary).unwrap();
        let loaded = SnapshotMatrix::load(&bin, SnapshotFormat::Binary).unwrap();
        loaded.save(&csv, SnapshotFormat::Csv).unwrap();
        let back = SnapshotMatrix::load(&csv, SnapshotFormat::Csv).unwrap();
        for (a, b) in s.values().iter().zip(back.values().iter()) {
            assert!((a - b).abs() <= 1e-12);
        }
        assert!((back.dt() - s.dt()).abs() < 1e-12);
        assert!((back.t0() - s.t0()).abs() < 1e-12);
    }

    #[test]
    fn minimal_matrix_round_trips() {
        let s = SnapshotMatrix::new(
            DMatrix::from_vec(1, 2, vec![-0.5, 7.25]),
            1.0,
            0.5,
            FieldKind::LagrangianZ,
            "",
        )
        .unwrap();
        assert_eq!(SnapshotMatrix::from_binary(&s.to_binary()).unwrap(), s);
    }

    #[test]
    fn paper_sized_split() {
        let s =
            SnapshotMatrix::new(DMatrix::zeros(4, 500), 0.0, 0.01, FieldKind::EulerianScalar, "eps").unwrap();
        let (train, val) = split_train_validation(&s, SplitSpec { n_train: 450, n_validation: 50 }).unwrap();
        assert_eq!(train.n_time(), 450);
        assert!((train.time(0) - 0.01).abs() < 1e-15);
        assert!((train.time(449) - 4.5).abs() < 1e-12);
        assert_eq!(val.n_time(), 50);
        assert!((val.time(0) - 4.51).abs() < 1e-12);
        assert_eq!(val.dt(), train.dt());

        let s = SnapshotMatrix::new(DMatrix::zeros(4, 460), 0.0, 0.01, FieldKind::LagrangianX, "x").unwrap();
        let (train, val) = split_train_validation(&s, SplitSpec { n_train: 450, n_validation: 10 }).unwrap();
        assert_eq!((train.n_time(), val.n_time()), (450, 10));
        assert_eq!(val.field(), FieldKind::LagrangianX);
    }

    #[test]
    fn degenerate_and_oversized_split() {
        let s = small();
        let (train, val) = split_train_validation(&s, SplitSpec { n_train: 2, n_validation: 0 }).unwrap();
        assert_eq!(train.n_time(), 2);
        assert_eq!(val.n_time(), 0);
        assert!(split_train_validation(&s, SplitSpec { n_train: 2, n_validation: 1 }).is_err());
    }

    fn arb_snapshots() -> impl Strategy<Value = SnapshotMatrix> {
        (1usize..6, 2usize..8).prop_flat_map(|(nc, nt)| {
            (proptest::collection::vec(-1e6f64..1e6, nc * nt), -10.0f64..10.0, 1e-4f64..1.0, 0u8..4).prop_map(
                move |(data, t0, dt, tag)| {
                    SnapshotMatrix::new(
                        DMatrix::from_vec(nc, nt, data),
                        t0,
                        dt,
                        FieldKind::from_tag(tag).unwrap(),
                        "q",
                    )
                    .unwrap()
                },
            )
        })
    }

    proptest! {
        #[test]
        fn binary_round_trip_is_identity(s in arb_snapshots()) {
            prop_assert_eq!(SnapshotMatrix::from_binary(&s.to_binary()).unwrap(), s);
        }

        #[test]
        fn split_concat_reproduces_prefix(s in arb_snapshots(), a in 0usize..8, b in 0usize..8) {
            let n_train = a.min(s.n_time());
            let n_validation = b.min(s.n_time() - n_train);
            let (train, val) = split_train_validation(&s, SplitSpec { n_train, n_validation }).unwrap();
            let joined = train.concat(&val).unwrap();
            prop_assert_eq!(
                joined.values(),
                &s.values().columns(0, n_train + n_validation).into_owned()
            );
        }
    }
}
