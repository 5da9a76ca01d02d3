//! Content-addressed on-disk cache for density matrices and result tables.
//!
//! Keys are SHA-256 digests of a canonical JSON encoding of the request:
//! object keys sorted, floats in shortest round-trip form. Entries are
//! published with write-to-temporary-then-rename, so concurrent readers see
//! either nothing or a complete file. An entry that fails to parse is
//! reported, recomputed and overwritten.

use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::channels::{apply_channel, AtomicDensityMatrix, ChannelSpec};
use crate::qnd::SystemConfig;
use crate::table::write_atomic;
use crate::{Result, C64};

/// Environment variable naming the default cache directory.
pub const CACHE_DIR_ENV: &str = "QND_CACHE_DIR";

/// Bumped whenever cached payloads could change for the same request.
pub const CACHE_SCHEMA: u32 = 1;

/// Canonical text of a serialisable request: sorted keys, compact, floats
/// in shortest round-trip form.
pub fn canonical_json<T: Serialize>(value: &T) -> Result<String> {
    // `serde_json::Value` objects are B-tree maps, so keys come out sorted
    let v = serde_json::to_value(value)?;
    Ok(serde_json::to_string(&v)?)
}

/// Hex SHA-256 of [`canonical_json`].
pub fn cache_key<T: Serialize>(value: &T) -> Result<String> {
    let digest = Sha256::digest(canonical_json(value)?.as_bytes());
    Ok(hex::encode(digest))
}

/// Serialised form of an [`AtomicDensityMatrix`].
#[derive(Debug, Clone, Serialize, Deserialize)]
struct StoredDensity {
    n_atoms: usize,
    outcome_weight: f64,
    /// Row-major real parts.
    re: Vec<f64>,
    /// Row-major imaginary parts.
    im: Vec<f64>,
}

impl From<&AtomicDensityMatrix> for StoredDensity {
    fn from(r: &AtomicDensityMatrix) -> Self {
        let d = r.dim();
        let mut re = Vec::with_capacity(d * d);
        let mut im = Vec::with_capacity(d * d);
        for i in 0..d {
            for j in 0..d {
                re.push(r.matrix[(i, j)].re);
                im.push(r.matrix[(i, j)].im);
            }
        }
        StoredDensity {
            n_atoms: r.n_atoms,
            outcome_weight: r.outcome_weight,
            re,
            im,
        }
    }
}

impl StoredDensity {
    fn into_density(self) -> Result<AtomicDensityMatrix> {
        let d = (self.n_atoms + 1) * (self.n_atoms + 1);
        if self.re.len() != d * d || self.im.len() != d * d {
            return Err(crate::Error::DimensionMismatch {
                expected: d * d,
                got: self.re.len(),
            });
        }
        let m = DMatrix::from_fn(d, d, |i, j| {
            C64::new(self.re[i * d + j], self.im[i * d + j])
        });
        AtomicDensityMatrix::from_matrix(self.n_atoms, m, self.outcome_weight)
    }
}

#[derive(Serialize)]
struct DensityRequest<'a> {
    kind: &'static str,
    schema: u32,
    version: &'static str,
    cfg: &'a SystemConfig,
    channel: &'a ChannelSpec,
}

/// A directory of digest-named JSON entries.
#[derive(Debug, Clone)]
pub struct Cache {
    dir: PathBuf,
}

impl Cache {
    pub fn new(dir: impl Into<PathBuf>) -> Result<Self> {
        let dir = dir.into();
        std::fs::create_dir_all(&dir)?;
        Ok(Cache { dir })
    }

    /// Cache rooted at `$QND_CACHE_DIR`, if set and non-empty.
    pub fn from_env() -> Result<Option<Self>> {
        match std::env::var_os(CACHE_DIR_ENV) {
            Some(d) if !d.is_empty() => Ok(Some(Cache::new(PathBuf::from(d))?)),
            _ => Ok(None),
        }
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn path_for(&self, key: &str) -> PathBuf {
        self.dir.join(format!("{key}.json"))
    }

    /// Reads an entry; missing entries are `None`, unreadable ones are
    /// reported and treated as missing.
    pub fn get<T: DeserializeOwned>(&self, key: &str) -> Option<T> {
        let path = self.path_for(key);
        let text = match std::fs::read_to_string(&path) {
            Ok(t) => t,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return None,
            Err(e) => {
                log::warn!(
                    "cache entry {} unreadable ({e}); recomputing",
                    path.display()
                );
                return None;
            }
        };
        match serde_json::from_str(&text) {
            Ok(v) => Some(v),
            Err(e) => {
                log::warn!("cache entry {} corrupt ({e}); recomputing", path.display());
                None
            }
        }
    }

    pub fn put<T: Serialize>(&self, key: &str, value: &T) -> Result<()> {
        let text = serde_json::to_string(value)?;
        write_atomic(&self.path_for(key), text.as_bytes())
    }

    /// Returns the cached value for `request`, computing and storing it on a
    /// miss. The flag reports whether the value came from the cache.
    pub fn get_or_compute<R, T, F>(&self, request: &R, compute: F) -> Result<(T, bool)>
    where
        R: Serialize,
        T: Serialize + DeserializeOwned,
        F: FnOnce() -> Result<T>,
    {
        let key = cache_key(request)?;
        if let Some(v) = self.get(&key) {
            return Ok((v, true));
        }
        let v = compute()?;
        self.put(&key, &v)?;
        Ok((v, false))
    }

    /// [`apply_channel`] through the cache.
    pub fn density(
        &self,
        cfg: &SystemConfig,
        channel: &ChannelSpec,
    ) -> Result<AtomicDensityMatrix> {
        let req = DensityRequest {
            kind: "density",
            schema: CACHE_SCHEMA,
            version: env!("CARGO_PKG_VERSION"),
            cfg,
            channel,
        };
        let key = cache_key(&req)?;
        if let Some(stored) = self.get::<StoredDensity>(&key) {
            match stored.into_density() {
                Ok(r) => return Ok(r),
                Err(e) => log::warn!("cache entry {key} malformed ({e}); recomputing"),
            }
        }
        let rho = apply_channel(cfg, channel)?;
        self.put(&key, &StoredDensity::from(&rho))?;
        Ok(rho)
    }
}

/// [`apply_channel`], through `cache` when one is given.
pub fn density_with(
    cache: Option<&Cache>,
    cfg: &SystemConfig,
    channel: &ChannelSpec,
) -> Result<AtomicDensityMatrix> {
    match cache {
        Some(c) => c.density(cfg, channel),
        None => apply_channel(cfg, channel),
    }
}
