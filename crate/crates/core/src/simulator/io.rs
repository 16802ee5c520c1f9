//! Batch persistence: a columnar binary format with a self-describing
//! header, and four-column CSV for interchange.
//!
//! Binary layout (all little-endian):
//!
//! ```text
//! magic  b"CVQB"          4 bytes
//! version u32             currently 1
//! n       u64             sample count
//! seed    u64
//! theta   f64             angular error the batch was generated with
//! params  11 x f64        V, T_x, T_p, eps_x, eps_p, beta,
//!                         eta_1, eta_2, v_el_1, v_el_2, theta
//! x_a     n x f64
//! p_a     n x f64
//! x_b1    n x f64
//! p_b3    n x f64
//! ```
//!
//! CSV files carry only the four data columns under the header
//! `x_a,p_a,x_b1,p_b3`; metadata travels in a sidecar written by the CLI.

use std::io::{Read, Write};

use crate::error::{Error, Result};
use crate::protocol::LinkParams;
use crate::simulator::QuadratureBatch;

const MAGIC: &[u8; 4] = b"CVQB";
const VERSION: u32 = 1;

fn write_f64<W: Write>(w: &mut W, v: f64) -> Result<()> {
    w.write_all(&v.to_le_bytes())?;
    Ok(())
}

fn read_exact<R: Read, const N: usize>(r: &mut R) -> Result<[u8; N]> {
    let mut buf = [0u8; N];
    r.read_exact(&mut buf)?;
    Ok(buf)
}

fn read_f64<R: Read>(r: &mut R) -> Result<f64> {
    Ok(f64::from_le_bytes(read_exact::<R, 8>(r)?))
}

fn read_u64<R: Read>(r: &mut R) -> Result<u64> {
    Ok(u64::from_le_bytes(read_exact::<R, 8>(r)?))
}

pub fn write_binary<W: Write>(batch: &QuadratureBatch, w: &mut W) -> Result<()> {
    w.write_all(MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    w.write_all(&(batch.n as u64).to_le_bytes())?;
    w.write_all(&batch.seed.to_le_bytes())?;
    write_f64(w, batch.true_theta)?;
    let p = &batch.params;
    for v in [
        p.epr_variance(),
        p.t_x(),
        p.t_p(),
        p.eps_x(),
        p.eps_p(),
        p.beta(),
        p.eta_1(),
        p.eta_2(),
        p.v_el_1(),
        p.v_el_2(),
        p.theta(),
    ] {
        write_f64(w, v)?;
    }
    for column in [&batch.x_a, &batch.p_a, &batch.x_b1, &batch.p_b3] {
        for &v in column.iter() {
            write_f64(w, v)?;
        }
    }
    Ok(())
}

pub fn read_binary<R: Read>(r: &mut R) -> Result<QuadratureBatch> {
    let magic = read_exact::<R, 4>(r)?;
    if &magic != MAGIC {
        return Err(Error::BatchFormat("bad magic, not a batch file".into()));
    }
    let version = u32::from_le_bytes(read_exact::<R, 4>(r)?);
    if version != VERSION {
        return Err(Error::BatchFormat(format!(
            "unsupported version {version}, expected {VERSION}"
        )));
    }
    let n = read_u64(r)? as usize;
    let seed = read_u64(r)?;
    let true_theta = read_f64(r)?;
    let v = read_f64(r)?;
    let t_x = read_f64(r)?;
    let t_p = read_f64(r)?;
    let eps_x = read_f64(r)?;
    let eps_p = read_f64(r)?;
    let beta = read_f64(r)?;
    let eta_1 = read_f64(r)?;
    let eta_2 = read_f64(r)?;
    let v_el_1 = read_f64(r)?;
    let v_el_2 = read_f64(r)?;
    let theta = read_f64(r)?;
    let params = LinkParams::new(v, t_x, t_p, eps_x, eps_p, beta, theta)
        .and_then(|p| p.with_detectors(eta_1, eta_2, v_el_1, v_el_2))
        .map_err(|e| Error::BatchFormat(format!("invalid embedded parameters: {e}")))?;

    let mut columns = [const { Vec::new() }; 4];
    for column in columns.iter_mut() {
        let mut data = Vec::with_capacity(n);
        for _ in 0..n {
            data.push(read_f64(r)?);
        }
        *column = data;
    }
    let [x_a, p_a, x_b1, p_b3] = columns;
    for col in [&x_a, &p_a, &x_b1, &p_b3] {
        if col.iter().any(|v| !v.is_finite()) {
            return Err(Error::BatchFormat("non-finite sample".into()));
        }
    }
    Ok(QuadratureBatch {
        seed,
        n,
        x_a,
        p_a,
        x_b1,
        p_b3,
        true_theta,
        params,
    })
}

pub fn write_csv<W: Write>(batch: &QuadratureBatch, w: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    wtr.write_record(["x_a", "p_a", "x_b1", "p_b3"])
        .map_err(|e| Error::Io(e.to_string()))?;
    for i in 0..batch.n {
        wtr.serialize((batch.x_a[i], batch.p_a[i], batch.x_b1[i], batch.p_b3[i]))
            .map_err(|e| Error::Io(e.to_string()))?;
    }
    wtr.flush()?;
    Ok(())
}

/// Reads the four CSV columns. The caller supplies the metadata a CSV file
/// cannot carry.
pub fn read_csv<R: Read>(r: R, params: LinkParams, seed: u64, true_theta: f64) -> Result<QuadratureBatch> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(r);
    {
        let headers = rdr.headers().map_err(|e| Error::BatchFormat(e.to_string()))?;
        let expected = ["x_a", "p_a", "x_b1", "p_b3"];
        if headers.len() != 4 || headers.iter().zip(expected).any(|(h, e)| h != e) {
            return Err(Error::BatchFormat(format!(
                "unexpected CSV header {headers:?}, expected {expected:?}"
            )));
        }
    }
    let mut x_a = Vec::new();
    let mut p_a = Vec::new();
    let mut x_b1 = Vec::new();
    let mut p_b3 = Vec::new();
    for record in rdr.deserialize() {
        let (a, b, c, d): (f64, f64, f64, f64) =
            record.map_err(|e| Error::BatchFormat(e.to_string()))?;
        x_a.push(a);
        p_a.push(b);
        x_b1.push(c);
        p_b3.push(d);
    }
    Ok(QuadratureBatch {
        seed,
        n: x_a.len(),
        x_a,
        p_a,
        x_b1,
        p_b3,
        true_theta,
        params,
    })
}
