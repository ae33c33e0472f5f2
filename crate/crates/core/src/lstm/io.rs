//! Model file (`ROMLSTM1`), all values little-endian:
//!
//! ```text
//! magic "ROMLSTM1"
//! u64 D, u64 H
//! for gate in input, forget, output, candidate:
//!     W_gate  H x D  f64, column-major
//!     A_gate  H x H  f64, column-major
//!     b_gate  H      f64
//! V  D x H  f64, column-major       (read-out weights)
//! v  D      f64                     (read-out bias)
//! D pairs (min, max) f64            (scaler)
//! optional trailing blocks, in this order:
//!     "SEQL" u64 s
//!     "TIME" f64 t_first, f64 t_last, then for each gate H f64 weights on
//!            the time input
//! ```

use std::path::Path;

use nalgebra::DVector;

use super::network::{Gate, LstmParams};
use super::scaler::MinMaxScaler;
use super::{LstmModel, TimeFeature};
use crate::binio::{read_file, write_file, ByteReader, ByteWriter};
use crate::error::{Result, RomError};

pub const MODEL_MAGIC: &[u8; 8] = b"ROMLSTM1";
const SEQ_TAG: &[u8; 4] = b"SEQL";
const TIME_TAG: &[u8; 4] = b"TIME";

impl LstmModel {
    pub fn to_bytes(&self) -> Vec<u8> {
        let p = &self.params;
        let d = p.output_size();
        let h = p.hidden_size();
        let mut w = ByteWriter::default();
        w.bytes(MODEL_MAGIC);
        w.u64(d as u64);
        w.u64(h as u64);
        for gate in Gate::ALL {
            let rows = p.gate_rows(gate);
            for j in 0..d {
                for r in rows.clone() {
                    w.f64(p.w[(r, j)]);
                }
            }
            for j in 0..h {
                for r in rows.clone() {
                    w.f64(p.a[(r, j)]);
                }
            }
            for r in rows {
                w.f64(p.b[r]);
            }
        }
        w.f64_slice(p.head_w.as_slice());
        w.f64_slice(p.head_b.as_slice());
        for k in 0..d {
            w.f64(self.scaler.min[k]);
            w.f64(self.scaler.max[k]);
        }
        if let Some(s) = self.sequence_length {
            w.bytes(SEQ_TAG);
            w.u64(s as u64);
        }
        if let Some(tf) = &self.time_feature {
            w.bytes(TIME_TAG);
            w.f64(tf.t_first);
            w.f64(tf.t_last);
            for gate in Gate::ALL {
                for r in p.gate_rows(gate) {
                    w.f64(p.w[(r, d)]);
                }
            }
        }
        w.buf
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = ByteReader::new(bytes);
        r.expect_magic(MODEL_MAGIC)?;
        let d = r.usize("D")?;
        let h = r.usize("H")?;
        if d == 0 || h == 0 {
            return Err(RomError::at_byte(8, format!("D = {d} and H = {h} must be positive")));
        }
        // fixed-size section: 4(HD + HH + H) + DH + D + 2D values
        let fixed = 4 * (h * d + h * h + h) + d * h + 3 * d;
        if r.remaining() < fixed * 8 {
            return Err(RomError::at_byte(
                r.position(),
                format!(
                    "file too short for D = {d}, H = {h}: need {} bytes of parameters, have {}",
                    fixed * 8,
                    r.remaining()
                ),
            ));
        }
        let mut p = LstmParams::zeros(d, h, d);
        for gate in Gate::ALL {
            let rows = p.gate_rows(gate);
            let name = format!("{gate:?} gate");
            let wv =
                r.f64_vec(h * d, &format!("{name} input weights"), |i| format!("({}, {})", i % h, i / h))?;
            for (i, v) in wv.into_iter().enumerate() {
                p.w[(rows.start + i % h, i / h)] = v;
            }
            let av = r.f64_vec(h * h, &format!("{name} recurrent weights"), |i| {
                format!("({}, {})", i % h, i / h)
            })?;
            for (i, v) in av.into_iter().enumerate() {
                p.a[(rows.start + i % h, i / h)] = v;
            }
            let bv = r.f64_vec(h, &format!("{name} bias"), |i| format!("{i}"))?;
            p.b.rows_mut(rows.start, h).copy_from_slice(&bv);
        }
        let hw = r.f64_vec(d * h, "read-out weights", |i| format!("({}, {})", i % d, i / d))?;
        p.head_w.as_mut_slice().copy_from_slice(&hw);
        let hb = r.f64_vec(d, "read-out bias", |i| format!("{i}"))?;
        p.head_b = DVector::from_vec(hb);
        let pairs = r.f64_vec(2 * d, "scaler", |i| format!("dimension {}", i / 2))?;
        let scaler = MinMaxScaler {
            min: pairs.iter().step_by(2).copied().collect(),
            max: pairs.iter().skip(1).step_by(2).copied().collect(),
        };
        for k in 0..d {
            if scaler.max[k] < scaler.min[k] {
                return Err(RomError::format(
                    "scaler",
                    format!("dimension {k}: max {} < min {}", scaler.max[k], scaler.min[k]),
                ));
            }
        }

        let mut sequence_length = None;
        let mut time_feature = None;
        while r.remaining() > 0 {
            let at = r.position();
            let tag = r.take(4, "block tag")?;
            if tag == SEQ_TAG && sequence_length.is_none() && time_feature.is_none() {
                let s = r.usize("sequence length")?;
                if s == 0 {
                    return Err(RomError::at_byte(at + 4, "sequence length must be positive"));
                }
                sequence_length = Some(s);
            } else if tag == TIME_TAG && time_feature.is_none() {
                let span = r.f64_vec(2, "time window", |i| format!("{i}"))?;
                let weights = r.f64_vec(4 * h, "time input weights", |i| format!("{i}"))?;
                let mut w = p.w.clone().insert_column(d, 0.0);
                for (i, v) in weights.into_iter().enumerate() {
                    w[(i, d)] = v;
                }
                p.w = w;
                time_feature = Some(TimeFeature { t_first: span[0], t_last: span[1] });
            } else {
                return Err(RomError::at_byte(
                    at,
                    format!("unexpected trailing block {:?}", String::from_utf8_lossy(tag)),
                ));
            }
        }
        Ok(LstmModel { params: p, scaler, sequence_length, time_feature })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        write_file(path, &self.to_bytes())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_bytes(&read_file(path)?)
    }
}
