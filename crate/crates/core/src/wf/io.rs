//! Ensemble serialization.
//!
//! CSV: header `path_id,t,x,sigma_sq`, one row per node; `sigma_sq` is the Σ
//! used on the step leaving that node and is empty on each path's last node.
//! Floats are written with 17 significant digits.
//!
//! Binary (all integers and floats little-endian):
//!
//! ```text
//! magic        4 bytes  "WMEN"
//! version      u32      1
//! master_seed  u64
//! x0, t0, eps, horizon  f64 ×4
//! scheme_len   u32, followed by scheme_len bytes of UTF-8
//! n_paths      u64
//! per path:
//!   n_nodes          u64 (≥ 1)
//!   absorption_time  f64 (NaN when not absorbed)
//!   times            f64 × n_nodes
//!   states           f64 × n_nodes
//!   step_variance    f64 × (n_nodes − 1)
//! ```

use std::io::{BufRead, Read, Write};

use super::{PathEnsemble, SamplePath};
use crate::error::{Error, Result};

pub const MAGIC: [u8; 4] = *b"WMEN";
pub const VERSION: u32 = 1;
pub const CSV_HEADER: &str = "path_id,t,x,sigma_sq";

/// Round-trip float formatting used by every CSV writer in the crate.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn write_csv<W: Write>(ens: &PathEnsemble, mut w: W) -> Result<()> {
    writeln!(w, "{CSV_HEADER}")?;
    for (id, p) in ens.paths.iter().enumerate() {
        for k in 0..p.times.len() {
            let sigma = p
                .step_variance
                .get(k)
                .map(|&s| fmt_f64(s))
                .unwrap_or_default();
            writeln!(
                w,
                "{id},{},{},{sigma}",
                fmt_f64(p.times[k]),
                fmt_f64(p.states[k])
            )?;
        }
    }
    w.flush()?;
    Ok(())
}

fn parse_f64(field: &str, line: usize) -> Result<f64> {
    field
        .trim()
        .parse()
        .map_err(|_| Error::Format(format!("line {line}: bad number {field:?}")))
}

/// First node from which the state sits on {0, 1} with zero variance to the end.
fn infer_absorption(times: &[f64], states: &[f64], sig: &[f64]) -> Option<f64> {
    let mut k = states.len();
    while k > 0
        && (states[k - 1] == 0.0 || states[k - 1] == 1.0)
        && sig.get(k - 1).is_none_or(|&s| s == 0.0)
    {
        if k < states.len() && states[k - 1] != states[k] {
            break;
        }
        k -= 1;
    }
    (k < states.len()).then(|| times[k])
}

/// Read paths written by [`write_csv`]. Ensemble metadata is not part of the
/// CSV layout and is left at its defaults.
pub fn read_csv<R: BufRead>(r: R) -> Result<PathEnsemble> {
    let mut lines = r.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::Format("empty CSV".into()))??;
    if header.trim() != CSV_HEADER {
        return Err(Error::Format(format!("unexpected header {header:?}")));
    }
    let mut paths = Vec::new();
    let mut cur: Option<(usize, Vec<f64>, Vec<f64>, Vec<f64>, bool)> = None;
    let finish = |c: (usize, Vec<f64>, Vec<f64>, Vec<f64>, bool)| -> Result<SamplePath> {
        let (_, times, states, sig, closed) = c;
        if !closed {
            return Err(Error::Format(
                "path does not end with an empty sigma_sq field".into(),
            ));
        }
        let absorption_time = infer_absorption(&times, &states, &sig);
        let p = SamplePath {
            times,
            states,
            step_variance: sig,
            absorption_time,
        };
        p.validate()?;
        Ok(p)
    };
    for (n, line) in lines.enumerate() {
        let line = line?;
        let lineno = n + 2;
        if line.trim().is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 4 {
            return Err(Error::Format(format!("line {lineno}: expected 4 fields")));
        }
        let id: usize = f[0]
            .trim()
            .parse()
            .map_err(|_| Error::Format(format!("line {lineno}: bad path_id")))?;
        let (t, x) = (parse_f64(f[1], lineno)?, parse_f64(f[2], lineno)?);
        let sigma = if f[3].trim().is_empty() {
            None
        } else {
            Some(parse_f64(f[3], lineno)?)
        };
        match &mut cur {
            Some(c) if c.0 == id && !c.4 => {
                c.1.push(t);
                c.2.push(x);
                match sigma {
                    Some(s) => c.3.push(s),
                    None => c.4 = true,
                }
            }
            _ => {
                if let Some(c) = cur.take() {
                    if c.0 >= id {
                        return Err(Error::Format(format!(
                            "line {lineno}: path ids must increase"
                        )));
                    }
                    paths.push(finish(c)?);
                }
                let mut sig = Vec::new();
                let closed = match sigma {
                    Some(s) => {
                        sig.push(s);
                        false
                    }
                    None => true,
                };
                cur = Some((id, vec![t], vec![x], sig, closed));
            }
        }
    }
    if let Some(c) = cur {
        paths.push(finish(c)?);
    }
    Ok(PathEnsemble::from_paths(paths, "csv"))
}

fn put_f64s<W: Write>(w: &mut W, v: &[f64]) -> Result<()> {
    for x in v {
        w.write_all(&x.to_le_bytes())?;
    }
    Ok(())
}

pub fn write_binary<W: Write>(ens: &PathEnsemble, mut w: W) -> Result<()> {
    w.write_all(&MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    w.write_all(&ens.master_seed.to_le_bytes())?;
    put_f64s(&mut w, &[ens.x0, ens.t0, ens.eps, ens.horizon])?;
    let scheme = ens.scheme.as_bytes();
    let len =
        u32::try_from(scheme.len()).map_err(|_| Error::Format("scheme name too long".into()))?;
    w.write_all(&len.to_le_bytes())?;
    w.write_all(scheme)?;
    w.write_all(&(ens.paths.len() as u64).to_le_bytes())?;
    for p in &ens.paths {
        w.write_all(&(p.times.len() as u64).to_le_bytes())?;
        put_f64s(&mut w, &[p.absorption_time.unwrap_or(f64::NAN)])?;
        put_f64s(&mut w, &p.times)?;
        put_f64s(&mut w, &p.states)?;
        put_f64s(&mut w, &p.step_variance)?;
    }
    w.flush()?;
    Ok(())
}

struct Reader<R> {
    inner: R,
}

impl<R: Read> Reader<R> {
    fn bytes<const N: usize>(&mut self) -> Result<[u8; N]> {
        let mut b = [0u8; N];
        self.inner
            .read_exact(&mut b)
            .map_err(|e| Error::Format(format!("truncated ensemble file: {e}")))?;
        Ok(b)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.bytes()?))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.bytes()?))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.bytes()?))
    }

    fn f64s(&mut self, n: usize) -> Result<Vec<f64>> {
        (0..n).map(|_| self.f64()).collect()
    }
}

/// Upper bound on counts read from a header before allocating.
const MAX_COUNT: u64 = 1 << 32;

pub fn read_binary<R: Read>(r: R) -> Result<PathEnsemble> {
    let mut r = Reader { inner: r };
    if r.bytes::<4>()? != MAGIC {
        return Err(Error::Format("missing WMEN magic".into()));
    }
    let version = r.u32()?;
    if version != VERSION {
        return Err(Error::Format(format!(
            "unsupported ensemble version {version}"
        )));
    }
    let master_seed = r.u64()?;
    let (x0, t0, eps, horizon) = (r.f64()?, r.f64()?, r.f64()?, r.f64()?);
    let len = r.u32()? as usize;
    let mut scheme = vec![0u8; len.min(1 << 16)];
    if len > scheme.len() {
        return Err(Error::Format("scheme name too long".into()));
    }
    r.inner
        .read_exact(&mut scheme)
        .map_err(|e| Error::Format(format!("truncated ensemble file: {e}")))?;
    let scheme =
        String::from_utf8(scheme).map_err(|_| Error::Format("scheme name is not UTF-8".into()))?;
    let n_paths = r.u64()?;
    if n_paths > MAX_COUNT {
        return Err(Error::Format(format!("implausible path count {n_paths}")));
    }
    let mut paths = Vec::with_capacity(n_paths as usize);
    for _ in 0..n_paths {
        let n = r.u64()?;
        if n == 0 || n > MAX_COUNT {
            return Err(Error::Format(format!("implausible node count {n}")));
        }
        let n = n as usize;
        let abs = r.f64()?;
        let times = r.f64s(n)?;
        let states = r.f64s(n)?;
        let step_variance = r.f64s(n - 1)?;
        let p = SamplePath {
            times,
            states,
            step_variance,
            absorption_time: (!abs.is_nan()).then_some(abs),
        };
        p.validate()?;
        paths.push(p);
    }
    let mut trailing = [0u8; 1];
    if r.inner.read(&mut trailing)? != 0 {
        return Err(Error::Format("trailing bytes after ensemble".into()));
    }
    Ok(PathEnsemble {
        paths,
        master_seed,
        scheme,
        x0,
        t0,
        eps,
        horizon,
    })
}
