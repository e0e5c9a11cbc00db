//! JSON model files: `{"d", "ranks", "scale", "cores"}` with each core
//! flattened row-major as `(left, mode, right)`.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Core, TensorTrain};
use crate::error::{Error, Result};

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TtFile {
    d: usize,
    ranks: Vec<usize>,
    scale: f64,
    cores: Vec<Vec<f64>>,
}

impl TensorTrain {
    pub fn from_json(text: &str) -> Result<Self> {
        let file: TtFile = serde_json::from_str(text)?;
        if file.ranks.len() != file.d + 1 || file.cores.len() != file.d {
            return Err(Error::InvalidTensorTrain(format!(
                "d = {} needs {} ranks and {} cores, found {} and {}",
                file.d,
                file.d + 1,
                file.d,
                file.ranks.len(),
                file.cores.len()
            )));
        }
        let cores = file
            .cores
            .into_iter()
            .enumerate()
            .map(|(k, data)| {
                Core::new(file.ranks[k], file.ranks[k + 1], data)
                    .map_err(|e| Error::InvalidTensorTrain(format!("core {k}: {e}")))
            })
            .collect::<Result<Vec<_>>>()?;
        TensorTrain::with_scale(cores, file.scale)
    }

    pub fn to_json(&self) -> String {
        let file = TtFile {
            d: self.num_variables(),
            ranks: self.ranks(),
            scale: self.scale,
            cores: self.cores.iter().map(|c| c.data.clone()).collect(),
        };
        serde_json::to_string_pretty(&file).expect("TT serialization cannot fail")
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_json() + "\n")?;
        Ok(())
    }
}
