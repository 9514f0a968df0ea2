//! JSON configuration shared by the CLI subcommands.
//!
//! ```json
//! {
//!   "noise": {"0": {"sigma_s_sq": 0.0, "sigma_c_sq": 0.0}},
//!   "isp": {"wb": [1, 1, 1], "ccm": [[1,0,0],[0,1,0],[0,0,1]], "gamma": "srgb"},
//!   "plugins": [{"name": "mynet", "command": "python run.py"}],
//!   "timeout_s": 600
//! }
//! ```

use std::path::Path;

use rgbwkit_core::isp::IspConfig;
use rgbwkit_core::metrics::SsimMode;
use rgbwkit_core::noise::NoiseTable;
use rgbwkit_core::remosaic::RemosaicAlgo;
use rgbwkit_core::{Error, Result};
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PluginDef {
    pub name: String,
    pub command: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    /// Per-gain noise parameters; the default gain model fills missing gains.
    pub noise: Option<NoiseTable>,
    pub isp: IspConfig,
    pub plugins: Vec<PluginDef>,
    pub timeout_s: f64,
    pub ssim_mode: SsimMode,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            noise: None,
            isp: IspConfig::default(),
            plugins: Vec::new(),
            timeout_s: 600.0,
            ssim_mode: SsimMode::PerChannel,
        }
    }
}

impl Config {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let cfg: Config = serde_json::from_str(&text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load_or_default(path: Option<&Path>) -> Result<Self> {
        path.map_or_else(|| Ok(Config::default()), Config::load)
    }

    pub fn validate(&self) -> Result<()> {
        self.isp.validate()?;
        if !(self.timeout_s > 0.0 && self.timeout_s.is_finite()) {
            return Err(Error::InvalidParam(format!("timeout_s {} must be positive", self.timeout_s)));
        }
        if let Some(table) = &self.noise {
            for p in table.0.values() {
                p.validate()?;
            }
        }
        for (i, p) in self.plugins.iter().enumerate() {
            if p.name.is_empty() || p.command.trim().is_empty() {
                return Err(Error::InvalidParam(format!("plugin #{i} needs a name and a command")));
            }
            if self.plugins[..i].iter().any(|q| q.name == p.name) {
                return Err(Error::InvalidParam(format!("plugin {:?} defined twice", p.name)));
            }
        }
        Ok(())
    }

    pub fn plugin(&self, name: &str) -> Option<RemosaicAlgo> {
        self.plugins
            .iter()
            .find(|p| p.name == name)
            .map(|p| RemosaicAlgo::plugin(p.name.clone(), p.command.clone()))
    }
}
