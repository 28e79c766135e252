//! On-disk artifacts: the field snapshot container, trajectory monitor CSV,
//! report JSON files and the run manifest.
//!
//! # Snapshot layout (version 1, all little-endian)
//!
//! ```text
//! magic   : b"DSCT"
//! version : u32
//! header  : band_limit u32, n_alpha u32, n_beta u32, n_gamma u32,
//!           orientation i8 (+1 standard / -1 reversed), c_f f64,
//!           c0 f64, s0 f64, tau f64, hubble f64, n_fields u32
//! field   : name_len u8, name bytes (utf-8),
//!           n_coeffs u64, then n_coeffs pairs (re f64, im f64)
//! ```
//!
//! Fields are written in the fixed order `phi, phi_dot, a1, a2, a3,
//! adot1, adot2, adot3, a0`. The layout is stable: readers must accept any
//! file with `version == 1` exactly as described here.

use std::io::{Read, Write};
use std::path::Path;
use std::sync::Arc;

use num_complex::Complex64 as C;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::evolve::Trajectory;
use crate::s3::basis::{Basis, Orientation};
use crate::s3::field::{ScalarField, TangentOneForm};
use crate::state::FieldState;

const MAGIC: &[u8; 4] = b"DSCT";
const VERSION: u32 = 1;

fn put_u32(buf: &mut Vec<u8>, v: u32) {
    buf.extend_from_slice(&v.to_le_bytes());
}

fn put_f64(buf: &mut Vec<u8>, v: f64) {
    buf.extend_from_slice(&v.to_le_bytes());
}

fn put_field(buf: &mut Vec<u8>, name: &str, coeffs: &[C]) {
    buf.push(name.len() as u8);
    buf.extend_from_slice(name.as_bytes());
    buf.extend_from_slice(&(coeffs.len() as u64).to_le_bytes());
    for c in coeffs {
        put_f64(buf, c.re);
        put_f64(buf, c.im);
    }
}

/// Serialise a state snapshot.
pub fn write_snapshot(path: &Path, state: &FieldState) -> Result<()> {
    let basis = state.basis();
    let mut buf = Vec::new();
    buf.extend_from_slice(MAGIC);
    put_u32(&mut buf, VERSION);
    put_u32(&mut buf, basis.band_limit() as u32);
    let [na, nb, ng] = basis.grid_shape();
    put_u32(&mut buf, na as u32);
    put_u32(&mut buf, nb as u32);
    put_u32(&mut buf, ng as u32);
    buf.push(match basis.spec.orientation {
        Orientation::Standard => 1u8,
        Orientation::Reversed => 255u8,
    });
    put_f64(&mut buf, basis.spec.frame_normalization);
    let (c0, s0) = basis.projector_constants();
    put_f64(&mut buf, c0);
    put_f64(&mut buf, s0);
    put_f64(&mut buf, state.tau);
    put_f64(&mut buf, state.hubble);
    put_u32(&mut buf, 9);
    put_field(&mut buf, "phi", state.phi.coeffs());
    put_field(&mut buf, "phi_dot", state.phi_dot.coeffs());
    for (i, name) in ["a1", "a2", "a3"].iter().enumerate() {
        put_field(&mut buf, name, state.a_vec.comp[i].coeffs());
    }
    for (i, name) in ["adot1", "adot2", "adot3"].iter().enumerate() {
        put_field(&mut buf, name, state.a_vec_dot.comp[i].coeffs());
    }
    put_field(&mut buf, "a0", state.a0.coeffs());
    let mut file = std::fs::File::create(path)?;
    file.write_all(&buf)?;
    Ok(())
}

struct Cursor<'a> {
    data: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.pos + n > self.data.len() {
            return Err(Error::Format("snapshot truncated".into()));
        }
        let out = &self.data[self.pos..self.pos + n];
        self.pos += n;
        Ok(out)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }
}

/// Deserialise a snapshot against an existing basis; the stored
/// discretisation header must match.
pub fn read_snapshot(path: &Path, basis: &Arc<Basis>) -> Result<FieldState> {
    let mut data = Vec::new();
    std::fs::File::open(path)?.read_to_end(&mut data)?;
    let mut cur = Cursor {
        data: &data,
        pos: 0,
    };
    if cur.take(4)? != MAGIC {
        return Err(Error::Format("not a field snapshot".into()));
    }
    if cur.u32()? != VERSION {
        return Err(Error::Format("unsupported snapshot version".into()));
    }
    let k = cur.u32()? as usize;
    let na = cur.u32()? as usize;
    let nb = cur.u32()? as usize;
    let ng = cur.u32()? as usize;
    let orient = cur.u8()?;
    let cf = cur.f64()?;
    let _c0 = cur.f64()?;
    let _s0 = cur.f64()?;
    let tau = cur.f64()?;
    let hubble = cur.f64()?;
    let spec = &basis.spec;
    let orient_match = match spec.orientation {
        Orientation::Standard => orient == 1,
        Orientation::Reversed => orient == 255,
    };
    if k != spec.band_limit
        || [na, nb, ng] != spec.grid_shape
        || !orient_match
        || (cf - spec.frame_normalization).abs() > 1e-12
    {
        return Err(Error::Config(
            "snapshot discretisation does not match the basis".into(),
        ));
    }
    let n_fields = cur.u32()?;
    if n_fields != 9 {
        return Err(Error::Format(format!(
            "expected 9 fields, found {n_fields}"
        )));
    }
    let mut read_field = |expect: &str| -> Result<Vec<C>> {
        let len = cur.u8()? as usize;
        let name = std::str::from_utf8(cur.take(len)?)
            .map_err(|_| Error::Format("bad field name".into()))?;
        if name != expect {
            return Err(Error::Format(format!(
                "expected field {expect}, found {name}"
            )));
        }
        let n = cur.u64()? as usize;
        if n != basis.n_coeffs() {
            return Err(Error::Format("coefficient count mismatch".into()));
        }
        let mut out = Vec::with_capacity(n);
        for _ in 0..n {
            let re = cur.f64()?;
            let im = cur.f64()?;
            out.push(C::new(re, im));
        }
        Ok(out)
    };
    let phi = read_field("phi")?;
    let phi_dot = read_field("phi_dot")?;
    let a1 = read_field("a1")?;
    let a2 = read_field("a2")?;
    let a3 = read_field("a3")?;
    let d1 = read_field("adot1")?;
    let d2 = read_field("adot2")?;
    let d3 = read_field("adot3")?;
    let a0 = read_field("a0")?;
    Ok(FieldState {
        tau,
        hubble,
        phi: ScalarField::from_coeffs(basis.clone(), phi),
        phi_dot: ScalarField::from_coeffs(basis.clone(), phi_dot),
        a_vec: TangentOneForm::from_components([
            ScalarField::from_coeffs(basis.clone(), a1),
            ScalarField::from_coeffs(basis.clone(), a2),
            ScalarField::from_coeffs(basis.clone(), a3),
        ]),
        a_vec_dot: TangentOneForm::from_components([
            ScalarField::from_coeffs(basis.clone(), d1),
            ScalarField::from_coeffs(basis.clone(), d2),
            ScalarField::from_coeffs(basis.clone(), d3),
        ]),
        a0: ScalarField::from_coeffs(basis.clone(), a0),
    })
}

/// Monitor CSV of a trajectory (schema documented in `energy`).
pub fn write_energy_csv(path: &Path, traj: &Trajectory) -> Result<()> {
    let mut out = String::from(crate::energy::ENERGY_CSV_HEADER);
    out.push('\n');
    for s in &traj.samples {
        out.push_str(&crate::energy::energy_csv_row(
            s.tau,
            &s.energy,
            &s.constraints,
        ));
        out.push('\n');
    }
    std::fs::write(path, out)?;
    Ok(())
}

/// Any serialisable report as pretty JSON.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text =
        serde_json::to_string_pretty(value).map_err(|e| Error::Format(format!("json: {e}")))?;
    std::fs::write(path, text)?;
    Ok(())
}

/// Run manifest: configuration echo, calibrated projector pair, crate
/// version and wallclock. Output files are byte-reproducible for identical
/// configurations except for the wallclock entry.
#[derive(Debug, Serialize)]
pub struct Manifest {
    pub config: serde_json::Value,
    pub calibrated_c0: f64,
    pub calibrated_s0: f64,
    pub crate_version: &'static str,
    pub wallclock_s: f64,
}

impl Manifest {
    pub fn new(config: serde_json::Value, basis: &Basis, wallclock_s: f64) -> Self {
        let (c0, s0) = basis.projector_constants();
        Manifest {
            config,
            calibrated_c0: c0,
            calibrated_s0: s0,
            crate_version: env!("CARGO_PKG_VERSION"),
            wallclock_s,
        }
    }
}
