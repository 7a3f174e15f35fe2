//! Binary chain checkpoints.
//!
//! Layout (all integers and floats little-endian):
//!
//! ```text
//! magic        8 bytes   "BNRCKPT\0"
//! version      u32       currently 1
//! chain        u64
//! iteration    u64       sweeps completed
//! seed         u64       RNG seed
//! stream       u64       RNG stream id
//! rng_position u128      RNG word offset
//! R, V, q      u64 x 3
//! hyper        R as u64, then eta, nu, a_delta, b_delta, zeta, iota as f64
//! mu, tau2, theta, delta      f64 x 4
//! gamma        f64 x q
//! s            f64 x q
//! u            f64 x (R*V), column-major (u_1, u_2, ...)
//! xi           u8 x V
//! lambda       i8 x R
//! pi_tilde     f64 x (R*3), row-major
//! M            f64 x (R*R), column-major
//! ```

use std::fs;
use std::io::Write;
use std::path::Path;

use nalgebra::{DMatrix, DVector};

use crate::error::{BnrError, Result};
use crate::network::edge_count;
use crate::types::{ChainState, Hyperparameters};

pub const CHECKPOINT_MAGIC: &[u8; 8] = b"BNRCKPT\0";
pub const CHECKPOINT_VERSION: u32 = 1;

/// Everything needed to continue a chain bit-for-bit.
#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub chain: u64,
    pub iteration: u64,
    pub seed: u64,
    pub stream: u64,
    pub rng_position: u128,
    pub hyper: Hyperparameters,
    pub state: ChainState,
}

impl Checkpoint {
    pub fn to_bytes(&self) -> Vec<u8> {
        let st = &self.state;
        let (r, v, q) = (st.r(), st.v(), st.gamma.len());
        let mut out = Vec::with_capacity(128 + 8 * (2 * q + r * v + r * 3 + r * r) + v + r);
        out.extend_from_slice(CHECKPOINT_MAGIC);
        out.extend_from_slice(&CHECKPOINT_VERSION.to_le_bytes());
        for x in [self.chain, self.iteration, self.seed, self.stream] {
            out.extend_from_slice(&x.to_le_bytes());
        }
        out.extend_from_slice(&self.rng_position.to_le_bytes());
        for x in [r, v, q] {
            out.extend_from_slice(&(x as u64).to_le_bytes());
        }
        let h = &self.hyper;
        out.extend_from_slice(&(h.r as u64).to_le_bytes());
        let floats = [h.eta, h.nu, h.a_delta, h.b_delta, h.zeta, h.iota, st.mu, st.tau2, st.theta, st.delta];
        put_f64s(&mut out, floats.iter());
        put_f64s(&mut out, st.gamma.iter());
        put_f64s(&mut out, st.s.iter());
        put_f64s(&mut out, st.u.iter());
        out.extend(st.xi.iter().map(|&b| b as u8));
        out.extend(st.lambda.iter().map(|&l| l as u8));
        for row in 0..r {
            put_f64s(&mut out, st.pi_tilde.row(row).iter());
        }
        put_f64s(&mut out, st.m.iter());
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut rd = Reader { bytes, pos: 0 };
        if rd.take(8)? != CHECKPOINT_MAGIC {
            return Err(BnrError::Checkpoint("bad magic header".into()));
        }
        let version = u32::from_le_bytes(rd.take(4)?.try_into().unwrap());
        if version != CHECKPOINT_VERSION {
            return Err(BnrError::Checkpoint(format!(
                "unsupported version {version} (expected {CHECKPOINT_VERSION})"
            )));
        }
        let chain = rd.u64()?;
        let iteration = rd.u64()?;
        let seed = rd.u64()?;
        let stream = rd.u64()?;
        let rng_position = u128::from_le_bytes(rd.take(16)?.try_into().unwrap());
        let r = rd.u64()? as usize;
        let v = rd.u64()? as usize;
        let q = rd.u64()? as usize;
        if q != edge_count(v) || r == 0 || r > 1 << 16 || v > 1 << 20 {
            return Err(BnrError::Checkpoint(format!(
                "inconsistent dimensions R = {r}, V = {v}, q = {q}"
            )));
        }
        let hyper_r = rd.u64()? as usize;
        let f = rd.f64s(10)?;
        let hyper = Hyperparameters {
            r: hyper_r,
            eta: f[0],
            nu: f[1],
            a_delta: f[2],
            b_delta: f[3],
            zeta: f[4],
            iota: f[5],
        };
        if hyper_r != r {
            return Err(BnrError::Checkpoint(format!(
                "hyperparameter R = {hyper_r} does not match state R = {r}"
            )));
        }
        let gamma = DVector::from_vec(rd.f64s(q)?);
        let s = DVector::from_vec(rd.f64s(q)?);
        let u = DMatrix::from_vec(r, v, rd.f64s(r * v)?);
        let xi = rd.take(v)?.iter().map(|&b| b != 0).collect();
        let lambda = rd.take(r)?.iter().map(|&b| b as i8).collect();
        let pi_tilde = DMatrix::from_row_slice(r, 3, &rd.f64s(r * 3)?);
        let m = DMatrix::from_vec(r, r, rd.f64s(r * r)?);
        if rd.pos != bytes.len() {
            return Err(BnrError::Checkpoint(format!(
                "{} trailing bytes",
                bytes.len() - rd.pos
            )));
        }
        Ok(Self {
            chain,
            iteration,
            seed,
            stream,
            rng_position,
            hyper,
            state: ChainState {
                gamma,
                u,
                xi,
                lambda,
                pi_tilde,
                delta: f[9],
                m,
                s,
                theta: f[8],
                tau2: f[7],
                mu: f[6],
            },
        })
    }

    /// Writes via a temporary file and rename, so a crash never leaves a torn checkpoint.
    pub fn write_to(&self, path: &Path) -> Result<()> {
        let tmp = path.with_extension("tmp");
        let io = |e: std::io::Error| BnrError::Checkpoint(format!("{}: {e}", path.display()));
        let mut f = fs::File::create(&tmp).map_err(io)?;
        f.write_all(&self.to_bytes()).map_err(io)?;
        f.sync_all().map_err(io)?;
        fs::rename(&tmp, path).map_err(io)?;
        Ok(())
    }

    pub fn read_from(path: &Path) -> Result<Self> {
        let bytes = fs::read(path)
            .map_err(|e| BnrError::Checkpoint(format!("{}: {e}", path.display())))?;
        Self::from_bytes(&bytes)
    }
}

fn put_f64s<'a>(out: &mut Vec<u8>, xs: impl Iterator<Item = &'a f64>) {
    for x in xs {
        out.extend_from_slice(&x.to_le_bytes());
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.bytes.len())
            .ok_or_else(|| BnrError::Checkpoint("truncated checkpoint".into()))?;
        let slice = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(slice)
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn f64s(&mut self, n: usize) -> Result<Vec<f64>> {
        let raw = self.take(n.checked_mul(8).ok_or_else(|| {
            BnrError::Checkpoint("checkpoint length overflow".into())
        })?)?;
        Ok(raw
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect())
    }
}
