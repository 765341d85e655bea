//! On-disk store of solved fixed points, keyed by fractal and exponent.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::energy::{
    fixed_point_solve, sigma_p_sharp, EnergyForm, FixedPointOptions, FormFamily, FormKind,
    ScalingFixedPoint,
};
use crate::geometry::Fractal;
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CacheEntry {
    pub fractal: String,
    pub p: f64,
    pub family: FormFamily,
    pub s: f64,
    pub sigma_sharp: f64,
    /// Basis weights, or profile values at `knots`.
    pub weights: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub knots: Option<Vec<f64>>,
    pub residual: f64,
    pub fit_residual: f64,
}

impl CacheEntry {
    /// Rebuilds the fixed point from the stored parameters.
    pub fn restore(&self, fractal: &Fractal) -> Result<ScalingFixedPoint> {
        let (p, k) = (self.p, fractal.boundary_len());
        let weights = self.weights.clone();
        let form = match self.family {
            FormFamily::Pairwise => {
                EnergyForm::pairwise(p, fractal.symmetry().pair_orbits(), weights, k)?
            }
            FormFamily::Star => EnergyForm::star(p, weights[0], k)?,
            FormFamily::Profile => {
                let knots = self
                    .knots
                    .clone()
                    .ok_or_else(|| Error::Config("profile entry without knots".into()))?;
                EnergyForm::profile(p, knots, weights)?
            }
        };
        Ok(ScalingFixedPoint {
            p,
            s: self.s,
            sigma_sharp: sigma_p_sharp(self.s, fractal.ratio(), fractal.alpha(), p)?,
            form,
            iterations: 0,
            residual: self.residual,
            fit_residual: self.fit_residual,
        })
    }
}

#[derive(Debug, Default, Serialize, Deserialize)]
struct CacheFile {
    entries: Vec<CacheEntry>,
}

#[derive(Debug)]
pub struct FixedPointCache {
    path: PathBuf,
    file: CacheFile,
}

/// `name-hash`, so edited configs never reuse stale entries.
pub fn cache_key(fractal: &Fractal) -> String {
    format!("{}-{}", fractal.name(), fractal.ifs().config_hash())
}

impl FixedPointCache {
    /// Opens the cache at `path`; a missing file is an empty cache.
    pub fn open(path: impl Into<PathBuf>) -> Result<Self> {
        let path = path.into();
        let file = match fs::read_to_string(&path) {
            Ok(text) => serde_json::from_str(&text)
                .map_err(|e| Error::Config(format!("cache {}: {e}", path.display())))?,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => CacheFile::default(),
            Err(e) => return Err(e.into()),
        };
        Ok(FixedPointCache { path, file })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn len(&self) -> usize {
        self.file.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.file.entries.is_empty()
    }

    pub fn lookup(&self, fractal: &Fractal, p: f64) -> Result<Option<ScalingFixedPoint>> {
        let key = cache_key(fractal);
        let Some(e) = self
            .file
            .entries
            .iter()
            .find(|e| e.fractal == key && e.p == p)
        else {
            return Ok(None);
        };
        e.restore(fractal).map(Some)
    }

    pub fn insert(&mut self, fractal: &Fractal, fp: &ScalingFixedPoint) {
        let key = cache_key(fractal);
        self.file
            .entries
            .retain(|e| !(e.fractal == key && e.p == fp.p));
        let knots = match fp.form.kind() {
            FormKind::Profile(pf) => Some(pf.knots().to_vec()),
            FormKind::Linear(_) => None,
        };
        self.file.entries.push(CacheEntry {
            fractal: key,
            p: fp.p,
            family: fp.family(),
            s: fp.s,
            sigma_sharp: fp.sigma_sharp,
            weights: fp.form.weights(),
            knots,
            residual: fp.residual,
            fit_residual: fp.fit_residual,
        });
        self.file
            .entries
            .sort_by(|a, b| a.fractal.cmp(&b.fractal).then(a.p.total_cmp(&b.p)));
    }

    /// Writes the cache atomically.
    pub fn save(&self) -> Result<()> {
        if let Some(dir) = self.path.parent().filter(|d| !d.as_os_str().is_empty()) {
            fs::create_dir_all(dir)?;
        }
        let text =
            serde_json::to_string_pretty(&self.file).map_err(|e| Error::Config(e.to_string()))?;
        let tmp = self.path.with_extension("tmp");
        fs::write(&tmp, text + "\n")?;
        fs::rename(&tmp, &self.path)?;
        Ok(())
    }
}

/// Looks `(fractal, p)` up in `cache` unless `refresh`, solving and storing
/// on a miss. Returns the fixed point and whether it came from the cache.
pub fn solve_cached(
    fractal: &Fractal,
    p: f64,
    cache: Option<&mut FixedPointCache>,
    refresh: bool,
    opts: &FixedPointOptions,
) -> Result<(ScalingFixedPoint, bool)> {
    let Some(cache) = cache else {
        return Ok((fixed_point_solve(fractal, p, opts)?, false));
    };
    if !refresh {
        if let Some(fp) = cache.lookup(fractal, p)? {
            return Ok((fp, true));
        }
    }
    let fp = fixed_point_solve(fractal, p, opts)?;
    cache.insert(fractal, &fp);
    cache.save()?;
    Ok((fp, false))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_preserves_the_form() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("fp.json");
        let f = Fractal::builtin("vicsek").unwrap();
        let mut cache = FixedPointCache::open(&path).unwrap();
        let (fp, hit) = solve_cached(
            &f,
            3.0,
            Some(&mut cache),
            false,
            &FixedPointOptions::default(),
        )
        .unwrap();
        assert!(!hit);
        let mut reopened = FixedPointCache::open(&path).unwrap();
        assert_eq!(reopened.len(), 1);
        let (again, hit) = solve_cached(
            &f,
            3.0,
            Some(&mut reopened),
            false,
            &FixedPointOptions::default(),
        )
        .unwrap();
        assert!(hit);
        assert_eq!(again.s, fp.s);
        assert_eq!(again.form, fp.form);
        let u = [0.3, 0.1, 0.9, 0.4];
        assert_eq!(again.form.eval(&u), fp.form.eval(&u));
    }

    #[test]
    fn corrupt_cache_is_a_config_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("fp.json");
        fs::write(&path, "not json").unwrap();
        assert!(matches!(
            FixedPointCache::open(&path),
            Err(Error::Config(_))
        ));
    }
}
