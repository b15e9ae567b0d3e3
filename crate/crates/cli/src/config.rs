//! JSON configuration of the toolkit.

use std::fs;
use std::path::{Path, PathBuf};

use adaptmark::attacks::AttackSpec;
use adaptmark::EmbedParams;
use anyhow::{ensure, Context, Result};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ToolkitConfig {
    /// Embedding parameters; `embed.adaptive` selects the scheme for the
    /// embed command. The bench always runs both schemes.
    pub embed: EmbedParams,
    /// Attacks applied by the bench, in report order.
    pub attacks: Vec<AttackSpec>,
    pub bench: BenchSettings,
    /// Directory receiving bench and calibration reports.
    pub report_dir: PathBuf,
}

impl Default for ToolkitConfig {
    fn default() -> Self {
        Self {
            embed: EmbedParams::default(),
            attacks: default_attacks(),
            bench: BenchSettings::default(),
            report_dir: PathBuf::from("bench-out"),
        }
    }
}

pub fn default_attacks() -> Vec<AttackSpec> {
    let mut attacks = vec![
        AttackSpec::None,
        AttackSpec::MedianFilter { kernel: 3 },
        AttackSpec::SaltPepper {
            density: 0.01,
            seed: 0,
        },
        AttackSpec::HistEqualize,
        AttackSpec::GaussianNoise {
            variance: 0.003,
            seed: 0,
        },
        AttackSpec::GaussianNoise {
            variance: 0.005,
            seed: 0,
        },
    ];
    attacks.extend(JPEG_SWEEP.iter().map(|&quality| AttackSpec::Jpeg { quality }));
    attacks
}

pub const JPEG_SWEEP: [u8; 4] = [30, 50, 70, 90];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImageEntry {
    pub name: String,
    pub path: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BenchSettings {
    /// Random payloads per (image, scheme).
    pub trials: usize,
    pub seed: u64,
    pub images: Vec<ImageEntry>,
    pub calibration: CalibrationSettings,
}

impl Default for BenchSettings {
    fn default() -> Self {
        Self {
            trials: 20,
            seed: 2023,
            images: Vec::new(),
            calibration: CalibrationSettings::default(),
        }
    }
}

/// Grid search for `(alpha, beta)` and `fixed_sf`: maximize mean NC under
/// median filtering subject to a PSNR floor on the calibration image.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CalibrationSettings {
    pub alphas: Vec<f64>,
    pub betas: Vec<f64>,
    pub fixed_sfs: Vec<f64>,
    pub trials: usize,
    pub psnr_floor: f64,
    pub median_kernel: u32,
    /// Entry of `bench.images` used for calibration.
    pub image: usize,
}

fn steps(start: f64, step: f64, count: usize) -> Vec<f64> {
    (1..=count).map(|i| ((start + step * (i - 1) as f64) * 1e6).round() / 1e6).collect()
}

impl Default for CalibrationSettings {
    fn default() -> Self {
        Self {
            alphas: steps(0.1, 0.1, 10),
            betas: steps(0.05, 0.05, 10),
            fixed_sfs: steps(0.01, 0.01, 12),
            trials: 5,
            psnr_floor: 45.0,
            median_kernel: 3,
            image: 0,
        }
    }
}

impl ToolkitConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .with_context(|| format!("cannot read config {}", path.display()))?;
        let cfg: Self = serde_json::from_str(&text)
            .with_context(|| format!("invalid config {}", path.display()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load_or_default(path: Option<&Path>) -> Result<Self> {
        match path {
            Some(p) => Self::load(p),
            None => Ok(Self::default()),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.embed.validate()?;
        for a in &self.attacks {
            a.validate()?;
        }
        ensure!(self.bench.trials > 0, "bench.trials must be positive");
        let cal = &self.bench.calibration;
        ensure!(cal.trials > 0, "calibration.trials must be positive");
        ensure!(
            cal.median_kernel >= 3 && cal.median_kernel % 2 == 1,
            "calibration.median_kernel must be odd and at least 3"
        );
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }
}
