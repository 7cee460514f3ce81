//! Content-addressed eigenvalue cache in the "ESD1" binary format.

use std::fs;
use std::path::{Path, PathBuf};

use crate::ensembles::{EnsembleSpec, Seed};
use crate::error::{Error, Result};
use crate::spectral_stats::{read_esd1, write_esd1, SpectralSample};

/// FNV-1a over a canonical byte encoding of (spec, seed).
fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        hash ^= b as u64;
        hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
    }
    hash
}

/// Cache file name for one (spec, seed) pair.
pub fn cache_key(spec: &EnsembleSpec, seed: Seed) -> String {
    let mut bytes = Vec::with_capacity(1 + 6 * 8);
    bytes.push(spec.kind.tag() as u8);
    for field in [
        spec.n as u64,
        spec.aspect_num,
        spec.aspect_den,
        spec.beta as u64,
        seed.master,
        seed.trial,
    ] {
        bytes.extend_from_slice(&field.to_le_bytes());
    }
    format!("{:016x}.esd1", fnv1a64(&bytes))
}

pub fn cache_path(dir: &Path, spec: &EnsembleSpec, seed: Seed) -> PathBuf {
    dir.join(cache_key(spec, seed))
}

/// Loads a cached spectral sample if the file exists; `Ok(None)` on a miss.
/// A present-but-invalid file is an error, not a silent miss.
pub fn load(dir: &Path, spec: &EnsembleSpec, seed: Seed) -> Result<Option<SpectralSample>> {
    let path = cache_path(dir, spec, seed);
    let bytes = match fs::read(&path) {
        Ok(b) => b,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(None),
        Err(e) => return Err(Error::io(path, e)),
    };
    let record = read_esd1(&mut bytes.as_slice())
        .map_err(|e| Error::Cache(format!("{}: {e}", path.display())))?;
    SpectralSample::from_record(record, *spec, seed)
        .map(Some)
        .map_err(|e| Error::Cache(format!("{}: {e}", path.display())))
}

/// Writes one spectral sample into the cache directory (created on demand).
pub fn store(dir: &Path, sample: &SpectralSample) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let path = cache_path(dir, sample.spec(), sample.seed());
    let mut bytes = Vec::new();
    write_esd1(&mut bytes, sample).expect("in-memory write cannot fail");
    fs::write(&path, bytes).map_err(|e| Error::io(path, e))
}
