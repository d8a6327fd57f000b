//! On-disk cache of sector spectra keyed by `(L, θ, J, solver)`.
//!
//! One file per key, all integers and floats little-endian:
//!
//! ```text
//! magic        8 bytes   "SPNSPEC1"
//! L            u32
//! theta        f64
//! J            f64
//! solver       u8        0 = dense_full, 1 = krylov_extremal
//! sectors      u32
//! per sector:
//!   twice_sz   i32       2·S^z
//!   dim        u64
//!   n_eig      u64
//!   values     n_eig × f64
//!   vectors    u8        0 = absent, 1 = present
//!   [dim × n_eig f64, column-major, if present]
//! ```
//!
//! A file is used only when every key field matches bit for bit; anything
//! else is a miss and gets overwritten on the next store.

use std::fs;
use std::io::{self, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use nalgebra::DMatrix;

use crate::chain::{ChainSpec, SectorSpectrum, SolverKind};
use crate::{Error, Real, Result};

pub const MAGIC: &[u8; 8] = b"SPNSPEC1";

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CacheKey {
    pub chain_len: usize,
    pub theta: f64,
    pub j: f64,
    pub solver: SolverKind,
}

impl CacheKey {
    pub fn new<T: Real>(spec: &ChainSpec<T>, solver: SolverKind) -> Self {
        CacheKey { chain_len: spec.chain_len, theta: spec.theta.as_f64(), j: spec.j.as_f64(), solver }
    }

    fn matches(&self, other: &CacheKey) -> bool {
        self.chain_len == other.chain_len
            && self.theta.to_bits() == other.theta.to_bits()
            && self.j.to_bits() == other.j.to_bits()
            && self.solver == other.solver
    }

    fn file_name(&self) -> String {
        let solver = match self.solver {
            SolverKind::DenseFull => "dense",
            SolverKind::KrylovExtremal => "krylov",
        };
        format!("L{}_th{:016x}_j{:016x}_{solver}.spn", self.chain_len, self.theta.to_bits(), self.j.to_bits())
    }
}

fn solver_code(s: SolverKind) -> u8 {
    match s {
        SolverKind::DenseFull => 0,
        SolverKind::KrylovExtremal => 1,
    }
}

pub fn write_spectra<T: Real, W: Write>(w: &mut W, key: &CacheKey, spectra: &[SectorSpectrum<T>]) -> Result<()> {
    w.write_all(MAGIC)?;
    w.write_all(&(key.chain_len as u32).to_le_bytes())?;
    w.write_all(&key.theta.to_le_bytes())?;
    w.write_all(&key.j.to_le_bytes())?;
    w.write_all(&[solver_code(key.solver)])?;
    w.write_all(&(spectra.len() as u32).to_le_bytes())?;
    for s in spectra {
        w.write_all(&s.twice_sz.to_le_bytes())?;
        w.write_all(&(s.dim as u64).to_le_bytes())?;
        w.write_all(&(s.eigenvalues.len() as u64).to_le_bytes())?;
        for e in &s.eigenvalues {
            w.write_all(&e.as_f64().to_le_bytes())?;
        }
        match &s.eigenvectors {
            Some(v) => {
                w.write_all(&[1])?;
                for x in v.iter() {
                    w.write_all(&x.as_f64().to_le_bytes())?;
                }
            }
            None => w.write_all(&[0])?,
        }
    }
    Ok(())
}

fn take<const N: usize, R: Read>(r: &mut R) -> Result<[u8; N]> {
    let mut buf = [0u8; N];
    r.read_exact(&mut buf).map_err(|e| match e.kind() {
        io::ErrorKind::UnexpectedEof => Error::Cache("truncated file".into()),
        _ => Error::Io(e),
    })?;
    Ok(buf)
}

fn read_f64<R: Read>(r: &mut R) -> Result<f64> {
    Ok(f64::from_le_bytes(take::<8, _>(r)?))
}

pub fn read_spectra<T: Real, R: Read>(r: &mut R) -> Result<(CacheKey, Vec<SectorSpectrum<T>>)> {
    if &take::<8, _>(r)? != MAGIC {
        return Err(Error::Cache("bad magic".into()));
    }
    let chain_len = u32::from_le_bytes(take(r)?) as usize;
    let theta = read_f64(r)?;
    let j = read_f64(r)?;
    let solver = match take::<1, _>(r)?[0] {
        0 => SolverKind::DenseFull,
        1 => SolverKind::KrylovExtremal,
        other => return Err(Error::Cache(format!("unknown solver code {other}"))),
    };
    let count = u32::from_le_bytes(take(r)?) as usize;
    let mut spectra = Vec::with_capacity(count.min(64));
    for _ in 0..count {
        let twice_sz = i32::from_le_bytes(take(r)?);
        let dim = u64::from_le_bytes(take(r)?) as usize;
        let n_eig = u64::from_le_bytes(take(r)?) as usize;
        if n_eig > dim {
            return Err(Error::Cache(format!("{n_eig} eigenvalues for dimension {dim}")));
        }
        let eigenvalues = (0..n_eig).map(|_| read_f64(r).map(T::lit)).collect::<Result<Vec<T>>>()?;
        let eigenvectors = match take::<1, _>(r)?[0] {
            0 => None,
            1 => {
                let data = (0..dim * n_eig).map(|_| read_f64(r).map(T::lit)).collect::<Result<Vec<T>>>()?;
                Some(DMatrix::from_vec(dim, n_eig, data))
            }
            other => return Err(Error::Cache(format!("bad vector flag {other}"))),
        };
        spectra.push(SectorSpectrum { twice_sz, dim, eigenvalues, eigenvectors, solver });
    }
    Ok((CacheKey { chain_len, theta, j, solver }, spectra))
}

/// Directory of cached spectra.
#[derive(Debug, Clone)]
pub struct SpectrumCache {
    dir: PathBuf,
}

impl SpectrumCache {
    pub fn new(dir: impl AsRef<Path>) -> Result<Self> {
        fs::create_dir_all(dir.as_ref())?;
        Ok(SpectrumCache { dir: dir.as_ref().to_path_buf() })
    }

    pub fn path_for(&self, key: &CacheKey) -> PathBuf {
        self.dir.join(key.file_name())
    }

    /// `Ok(None)` on a miss, including unreadable or mismatched files.
    pub fn load<T: Real>(&self, key: &CacheKey) -> Result<Option<Vec<SectorSpectrum<T>>>> {
        let path = self.path_for(key);
        let file = match fs::File::open(&path) {
            Ok(f) => f,
            Err(e) if e.kind() == io::ErrorKind::NotFound => return Ok(None),
            Err(e) => return Err(e.into()),
        };
        match read_spectra(&mut BufReader::new(file)) {
            Ok((found, spectra)) if found.matches(key) => Ok(Some(spectra)),
            Ok(_) => Ok(None),
            Err(e) => {
                log::warn!("ignoring unreadable cache file {}: {e}", path.display());
                Ok(None)
            }
        }
    }

    /// Writes through a temporary file so concurrent readers never see a
    /// partial file.
    pub fn store<T: Real>(&self, key: &CacheKey, spectra: &[SectorSpectrum<T>]) -> Result<()> {
        let path = self.path_for(key);
        let tmp = path.with_extension(format!("tmp{}", std::process::id()));
        {
            let mut w = BufWriter::new(fs::File::create(&tmp)?);
            write_spectra(&mut w, key, spectra)?;
            w.flush()?;
        }
        fs::rename(&tmp, &path)?;
        Ok(())
    }
}
