//! On-disk cache of hidden-state cubes keyed by model, scenario and sample seed.

use std::path::{Path, PathBuf};

use crate::error::Result;
use crate::numkit::split_seed;
use crate::substrate::{HiddenStateCube, ModelConfig, ScenarioSpec};

#[derive(Debug, Clone)]
pub struct CubeCache {
    dir: PathBuf,
}

impl CubeCache {
    pub fn new(dir: &Path) -> Self {
        CubeCache {
            dir: dir.to_path_buf(),
        }
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    /// File for one cube; the name hashes everything the cube depends on.
    pub fn path(&self, model: &ModelConfig, scenario: &ScenarioSpec, seed: u64, kind: &str) -> PathBuf {
        let key = format!(
            "{}|{}",
            serde_json::to_string(model).expect("model serializes"),
            serde_json::to_string(scenario).expect("scenario serializes")
        );
        let h = split_seed(seed, &key);
        self.dir
            .join(&scenario.name)
            .join(format!("{seed:016x}-{h:016x}-{kind}.cube"))
    }

    /// Cached cube, or `None` when absent or unreadable.
    pub fn get(&self, path: &Path) -> Option<HiddenStateCube> {
        if !path.exists() {
            return None;
        }
        match HiddenStateCube::load(path) {
            Ok(c) => Some(c),
            Err(e) => {
                log::warn!("ignoring unreadable cube {}: {e}", path.display());
                None
            }
        }
    }

    pub fn put(&self, path: &Path, cube: &HiddenStateCube) -> Result<()> {
        cube.save(path)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::Array3;

    #[test]
    fn keys_change_with_inputs_and_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let cache = CubeCache::new(dir.path());
        let m = ModelConfig::default();
        let s = ScenarioSpec::new("s", vec![1.0; 16], vec![0.0; 16], 8);
        let mut s2 = s.clone();
        s2.noise_sigma = 0.1;
        let a = cache.path(&m, &s, 1, "cf");
        assert_ne!(a, cache.path(&m, &s2, 1, "cf"));
        assert_ne!(a, cache.path(&m, &s, 2, "cf"));
        assert_ne!(a, cache.path(&m, &s, 1, "std"));
        assert!(cache.get(&a).is_none());
        let cube = HiddenStateCube::new(Array3::from_elem((2, 3, 4), 0.5)).unwrap();
        cache.put(&a, &cube).unwrap();
        assert_eq!(cache.get(&a).unwrap().as_array(), cube.as_array());
    }
}
