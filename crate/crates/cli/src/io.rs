//! On-disk formats: dataset directories, binary draws and staged output.
//!
//! A dataset directory holds `header.toml` (format version, `n`, `V`, `q`),
//! `responses.csv` (`sample_id,y`) and `edges.csv`
//! (`sample_id,node_k,node_l,weight`, 1-based ids, `node_k < node_l`). Edges
//! that are not listed have weight zero.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use bnr_core::network::edge_count;
use bnr_core::{NetworkDataset, PosteriorDraws};
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::config::{load_toml, to_toml};
use crate::error::{CliError, Result};

pub const DATASET_FORMAT_VERSION: u32 = 1;
pub const DRAWS_MAGIC: &[u8; 8] = b"BNRDRAWS";
pub const DRAWS_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetHeader {
    pub format_version: u32,
    pub n: usize,
    #[serde(rename = "V")]
    pub v: usize,
    pub q: usize,
}

#[derive(Debug, Serialize, Deserialize)]
struct ResponseRow {
    sample_id: usize,
    y: f64,
}

#[derive(Debug, Serialize, Deserialize)]
struct EdgeRow {
    sample_id: usize,
    node_k: usize,
    node_l: usize,
    weight: f64,
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(CliError::io(path))
}

fn csv_writer(path: &Path) -> Result<csv::Writer<BufWriter<fs::File>>> {
    let file = fs::File::create(path).map_err(CliError::io(path))?;
    Ok(csv::Writer::from_writer(BufWriter::new(file)))
}

fn finish_csv<W: Write>(path: &Path, w: csv::Writer<W>) -> Result<()> {
    w.into_inner()
        .map_err(|e| CliError::format(path, e))?
        .flush()
        .map_err(CliError::io(path))
}

pub fn write_dataset(dir: &Path, data: &NetworkDataset) -> Result<()> {
    fs::create_dir_all(dir).map_err(CliError::io(dir))?;
    let header = DatasetHeader {
        format_version: DATASET_FORMAT_VERSION,
        n: data.n(),
        v: data.v(),
        q: data.q(),
    };
    write_text(&dir.join("header.toml"), &to_toml(&header)?)?;

    let path = dir.join("responses.csv");
    let mut w = csv_writer(&path)?;
    for (i, &y) in data.y().iter().enumerate() {
        w.serialize(ResponseRow { sample_id: i + 1, y })
            .map_err(|e| CliError::format(&path, e))?;
    }
    finish_csv(&path, w)?;

    let path = dir.join("edges.csv");
    let mut w = csv_writer(&path)?;
    w.write_record(["sample_id", "node_k", "node_l", "weight"])
        .map_err(|e| CliError::format(&path, e))?;
    for (i, a) in data.adjacency().iter().enumerate() {
        for k in 0..data.v() {
            for l in k + 1..data.v() {
                if a[(k, l)] != 0.0 {
                    // written by hand: the header above must exist even without edges
                    let row = [(i + 1).to_string(), (k + 1).to_string(), (l + 1).to_string(), a[(k, l)].to_string()];
                    w.write_record(&row).map_err(|e| CliError::format(&path, e))?;
                }
            }
        }
    }
    finish_csv(&path, w)
}

pub fn read_dataset(dir: &Path) -> Result<NetworkDataset> {
    let header_path = dir.join("header.toml");
    let header: DatasetHeader = load_toml(&header_path)?;
    if header.format_version != DATASET_FORMAT_VERSION {
        return Err(CliError::format(
            &header_path,
            format!("unsupported format version {}", header.format_version),
        ));
    }
    let (n, v) = (header.n, header.v);
    if n == 0 || v < 2 || header.q != edge_count(v) {
        return Err(CliError::format(
            &header_path,
            format!("inconsistent header n = {n}, V = {v}, q = {}", header.q),
        ));
    }

    let path = dir.join("responses.csv");
    let mut y = vec![f64::NAN; n];
    let mut seen = vec![false; n];
    let mut rd = csv::Reader::from_path(&path).map_err(|e| CliError::format(&path, e))?;
    for row in rd.deserialize::<ResponseRow>() {
        let row = row.map_err(|e| CliError::format(&path, e))?;
        if row.sample_id == 0 || row.sample_id > n {
            return Err(CliError::format(&path, format!("sample_id {} outside 1..={n}", row.sample_id)));
        }
        if std::mem::replace(&mut seen[row.sample_id - 1], true) {
            return Err(CliError::format(&path, format!("sample_id {} listed twice", row.sample_id)));
        }
        y[row.sample_id - 1] = row.y;
    }
    if let Some(missing) = seen.iter().position(|s| !s) {
        return Err(CliError::format(&path, format!("no response for sample_id {}", missing + 1)));
    }

    let path = dir.join("edges.csv");
    let mut adjacency = vec![DMatrix::zeros(v, v); n];
    let mut rd = csv::Reader::from_path(&path).map_err(|e| CliError::format(&path, e))?;
    for (line, row) in rd.deserialize::<EdgeRow>().enumerate() {
        let row = row.map_err(|e| CliError::format(&path, e))?;
        let at = |msg: String| CliError::format(&path, format!("row {}: {msg}", line + 1));
        if row.sample_id == 0 || row.sample_id > n {
            return Err(at(format!("sample_id {} outside 1..={n}", row.sample_id)));
        }
        if !(1 <= row.node_k && row.node_k < row.node_l && row.node_l <= v) {
            return Err(at(format!(
                "nodes ({}, {}) must satisfy 1 <= node_k < node_l <= {v}",
                row.node_k, row.node_l
            )));
        }
        if !row.weight.is_finite() {
            return Err(at(format!("weight {} is not finite", row.weight)));
        }
        let a = &mut adjacency[row.sample_id - 1];
        let (k, l) = (row.node_k - 1, row.node_l - 1);
        if a[(k, l)] != 0.0 {
            return Err(at(format!("edge ({}, {}) listed twice", row.node_k, row.node_l)));
        }
        a[(k, l)] = row.weight;
        a[(l, k)] = row.weight;
    }
    NetworkDataset::new(y, adjacency).map_err(|e| CliError::format(dir, e))
}

/// Binary draws: magic, version, then `chains`, `retained`, `q`, `V` as u64
/// and the gamma, xi, mu, tau2 and log-joint arrays, all little-endian.
pub fn write_draws(path: &Path, draws: &PosteriorDraws) -> Result<()> {
    let mut out = Vec::with_capacity(48 + 8 * (draws.gamma.len() + 3 * draws.total()) + draws.xi.len());
    out.extend_from_slice(DRAWS_MAGIC);
    out.extend_from_slice(&DRAWS_VERSION.to_le_bytes());
    for x in [draws.chains, draws.retained, draws.q, draws.v] {
        out.extend_from_slice(&(x as u64).to_le_bytes());
    }
    for x in &draws.gamma {
        out.extend_from_slice(&x.to_le_bytes());
    }
    out.extend_from_slice(&draws.xi);
    for arr in [&draws.mu, &draws.tau2, &draws.log_joint] {
        for x in arr.iter() {
            out.extend_from_slice(&x.to_le_bytes());
        }
    }
    fs::write(path, out).map_err(CliError::io(path))
}

pub fn read_draws(path: &Path) -> Result<PosteriorDraws> {
    let bytes = fs::read(path).map_err(CliError::io(path))?;
    let bad = |msg: &str| CliError::format(path, msg);
    if bytes.len() < 44 || &bytes[..8] != DRAWS_MAGIC {
        return Err(bad("not a draws file"));
    }
    let version = u32::from_le_bytes(bytes[8..12].try_into().unwrap());
    if version != DRAWS_VERSION {
        return Err(bad("unsupported draws version"));
    }
    let dims: Vec<usize> = bytes[12..44]
        .chunks_exact(8)
        .map(|c| u64::from_le_bytes(c.try_into().unwrap()) as usize)
        .collect();
    let (chains, retained, q, v) = (dims[0], dims[1], dims[2], dims[3]);
    let total = chains.checked_mul(retained).ok_or_else(|| bad("size overflow"))?;
    let expected = total
        .checked_mul(q)
        .and_then(|g| g.checked_add(3 * total))
        .and_then(|f| f.checked_mul(8))
        .and_then(|b| b.checked_add(total.checked_mul(v)?))
        .and_then(|b| b.checked_add(44))
        .ok_or_else(|| bad("size overflow"))?;
    if bytes.len() != expected || q != edge_count(v) {
        return Err(bad("length does not match the recorded dimensions"));
    }
    let floats = |start: usize, count: usize| -> Vec<f64> {
        bytes[start..start + 8 * count]
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect()
    };
    let mut pos = 44;
    let gamma = floats(pos, total * q);
    pos += 8 * total * q;
    let xi = bytes[pos..pos + total * v].to_vec();
    pos += total * v;
    let mu = floats(pos, total);
    let tau2 = floats(pos + 8 * total, total);
    let log_joint = floats(pos + 16 * total, total);
    Ok(PosteriorDraws {
        chains,
        retained,
        q,
        v,
        gamma,
        xi,
        mu,
        tau2,
        log_joint,
    })
}

/// A directory filled under a temporary name and renamed into place when complete.
pub struct StagedDir {
    staging: PathBuf,
    target: PathBuf,
}

impl StagedDir {
    pub fn new(target: &Path) -> Result<Self> {
        let name = target
            .file_name()
            .ok_or_else(|| CliError::Config(format!("output path {} has no name", target.display())))?;
        let staging = target.with_file_name(format!(".{}.staging", name.to_string_lossy()));
        if staging.exists() {
            fs::remove_dir_all(&staging).map_err(CliError::io(&staging))?;
        }
        fs::create_dir_all(&staging).map_err(CliError::io(&staging))?;
        Ok(Self {
            staging,
            target: target.to_path_buf(),
        })
    }

    pub fn path(&self) -> &Path {
        &self.staging
    }

    pub fn join(&self, name: &str) -> PathBuf {
        self.staging.join(name)
    }

    /// Replaces the target directory with the staged one.
    pub fn commit(self) -> Result<PathBuf> {
        if self.target.exists() {
            fs::remove_dir_all(&self.target).map_err(CliError::io(&self.target))?;
        }
        fs::rename(&self.staging, &self.target).map_err(CliError::io(&self.target))?;
        Ok(self.target.clone())
    }

    pub fn discard(self) {
        let _ = fs::remove_dir_all(&self.staging);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy() -> NetworkDataset {
        let mut a = DMatrix::zeros(3, 3);
        a[(0, 2)] = 0.1 + 0.2;
        a[(2, 0)] = 0.1 + 0.2;
        let mut b = DMatrix::zeros(3, 3);
        b[(1, 2)] = 1.0 / 3.0;
        b[(2, 1)] = 1.0 / 3.0;
        NetworkDataset::new(vec![1e-17, -2.5], vec![a, b]).unwrap()
    }

    #[test]
    fn dataset_round_trip_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let data = toy();
        write_dataset(dir.path(), &data).unwrap();
        let back = read_dataset(dir.path()).unwrap();
        assert_eq!(back.y(), data.y());
        assert_eq!(back.adjacency(), data.adjacency());
        let edges = fs::read_to_string(dir.path().join("edges.csv")).unwrap();
        assert_eq!(edges.lines().count(), 3);
    }

    #[test]
    fn malformed_datasets_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        write_dataset(dir.path(), &toy()).unwrap();
        let edges = dir.path().join("edges.csv");
        for bad in [
            "sample_id,node_k,node_l,weight\n1,3,1,0.5\n",
            "sample_id,node_k,node_l,weight\n3,1,2,0.5\n",
            "sample_id,node_k,node_l,weight\n1,1,2,0.5\n1,1,2,0.5\n",
            "sample_id,node_k,node_l,weight\n1,1,4,0.5\n",
        ] {
            fs::write(&edges, bad).unwrap();
            assert!(read_dataset(dir.path()).is_err(), "{bad}");
        }
        write_dataset(dir.path(), &toy()).unwrap();
        fs::write(dir.path().join("responses.csv"), "sample_id,y\n1,0.5\n").unwrap();
        assert!(read_dataset(dir.path()).is_err());
        fs::write(dir.path().join("header.toml"), "format_version = 1\nn = 2\nV = 3\nq = 4\n").unwrap();
        assert!(read_dataset(dir.path()).is_err());
    }

    #[test]
    fn draws_round_trip() {
        let draws = PosteriorDraws {
            chains: 2,
            retained: 2,
            q: 3,
            v: 3,
            gamma: (0..12).map(|i| i as f64 / 7.0).collect(),
            xi: vec![1, 0, 1, 1, 1, 0, 0, 0, 1, 1, 1, 1],
            mu: vec![0.1, 0.2, 0.3, 0.4],
            tau2: vec![1.0, 2.0, 3.0, 4.0],
            log_joint: vec![-1.0, -2.0, -3.0, f64::NEG_INFINITY],
        };
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("draws.bin");
        write_draws(&path, &draws).unwrap();
        assert_eq!(read_draws(&path).unwrap(), draws);
        let mut bytes = fs::read(&path).unwrap();
        bytes.pop();
        fs::write(&path, &bytes).unwrap();
        assert!(read_draws(&path).is_err());
    }

    #[test]
    fn staged_directory_replaces_target() {
        let dir = tempfile::tempdir().unwrap();
        let target = dir.path().join("out");
        fs::create_dir_all(&target).unwrap();
        fs::write(target.join("old.txt"), "old").unwrap();
        let staged = StagedDir::new(&target).unwrap();
        write_text(&staged.join("new.txt"), "new").unwrap();
        assert!(!target.join("new.txt").exists());
        staged.commit().unwrap();
        assert!(target.join("new.txt").exists());
        assert!(!target.join("old.txt").exists());
    }
}
