//! Dense networks with reverse-mode gradients and the Adam optimiser.

mod adam;
mod mlp;

pub use adam::Adam;
pub use mlp::{ForwardCache, Mlp};

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MLP_FORMAT: &str = "ecoabr.mlp";
pub const MLP_FORMAT_VERSION: u32 = 1;

/// Serialised network: layer sizes plus the flat row-major parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpFile {
    pub format: String,
    pub version: u32,
    pub sizes: Vec<usize>,
    pub params: Vec<f64>,
}

impl From<&Mlp> for MlpFile {
    fn from(net: &Mlp) -> Self {
        Self {
            format: MLP_FORMAT.into(),
            version: MLP_FORMAT_VERSION,
            sizes: net.sizes().to_vec(),
            params: net.params().to_vec(),
        }
    }
}

impl MlpFile {
    pub fn into_mlp(self) -> Result<Mlp> {
        if self.format != MLP_FORMAT || self.version != MLP_FORMAT_VERSION {
            return Err(Error::validation(format!(
                "unsupported network file {} v{}",
                self.format, self.version
            )));
        }
        Mlp::from_params(self.sizes, self.params)
    }
}

pub fn save_mlp(net: &Mlp, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let text = serde_json::to_string(&MlpFile::from(net))?;
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn load_mlp(path: impl AsRef<Path>) -> Result<Mlp> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str::<MlpFile>(&text)?.into_mlp()
}
