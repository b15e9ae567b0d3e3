//! Robustness benchmark and strength-factor calibration.
//!
//! For every image, both schemes (adaptive and fixed strength) embed `trials`
//! seeded random payloads; each watermarked image is scored for PSNR/SSIM
//! against the cover, then every configured attack is applied and the
//! extracted payload is scored for NC/BER. Payloads and attack noise depend
//! only on the seed and the trial index, so both schemes see identical
//! inputs.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use adaptmark::attacks::AttackSpec;
use adaptmark::codec::{block_strengths, embed_with_strengths, extract};
use adaptmark::image::MacroBlockGrid;
use adaptmark::metrics::{ber, nc, psnr, ssim};
use adaptmark::psychovisual::{self, canny_edges, strength_factor};
use adaptmark::{EmbedParams, GrayImage, Payload};
use anyhow::{ensure, Context, Result};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::ToolkitConfig;

pub struct BenchInput {
    pub name: String,
    pub image: GrayImage,
}

impl BenchInput {
    pub fn load(name: &str, path: &Path) -> Result<Self> {
        let image = adaptmark::image::load_image(path)
            .with_context(|| format!("cannot load bench image {name} ({})", path.display()))?;
        Ok(Self {
            name: name.to_string(),
            image,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    Adaptive,
    NonAdaptive,
}

impl Scheme {
    pub const ALL: [Scheme; 2] = [Scheme::Adaptive, Scheme::NonAdaptive];

    pub fn name(self) -> &'static str {
        match self {
            Scheme::Adaptive => "adaptive",
            Scheme::NonAdaptive => "non_adaptive",
        }
    }

    pub fn params(self, base: &EmbedParams) -> EmbedParams {
        EmbedParams {
            adaptive: self == Scheme::Adaptive,
            ..base.clone()
        }
    }
}

/// SplitMix64 finalizer over `(seed, stream, index)`.
pub fn derive_seed(seed: u64, stream: u64, index: u64) -> u64 {
    let mut z = seed
        .wrapping_add(stream.wrapping_mul(0x9E37_79B9_7F4A_7C15))
        .wrapping_add(index.wrapping_mul(0xD1B5_4A32_D192_ED03));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

const PAYLOAD_STREAM: u64 = 1;
const ATTACK_STREAM: u64 = 2;

pub fn trial_payload(seed: u64, trial: usize) -> Payload {
    Payload::random(&mut ChaCha8Rng::seed_from_u64(derive_seed(seed, PAYLOAD_STREAM, trial as u64)))
}

/// The attack with its noise seed fixed by `(seed, trial, attack index)`.
pub fn trial_attack(spec: AttackSpec, seed: u64, trial: usize, index: usize) -> AttackSpec {
    if spec.is_stochastic() {
        let s = derive_seed(seed ^ spec_seed(&spec), ATTACK_STREAM, (trial * 1024 + index) as u64);
        spec.with_seed(s)
    } else {
        spec
    }
}

fn spec_seed(spec: &AttackSpec) -> u64 {
    match *spec {
        AttackSpec::SaltPepper { seed, .. } | AttackSpec::GaussianNoise { seed, .. } => seed,
        _ => 0,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImperceptibilityRow {
    pub image: String,
    pub scheme: Scheme,
    pub trials: usize,
    pub psnr: f64,
    pub ssim: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RobustnessRow {
    pub image: String,
    pub scheme: Scheme,
    pub attack: String,
    pub spec: AttackSpec,
    pub trials: usize,
    pub nc: f64,
    pub ber: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub config: ToolkitConfig,
    pub seed: u64,
    pub trials: usize,
    /// Taken from `SOURCE_DATE_EPOCH` when set, so reruns stay byte-identical.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub timestamp: Option<String>,
    pub imperceptibility: Vec<ImperceptibilityRow>,
    pub robustness: Vec<RobustnessRow>,
}

struct TrialOutcome {
    psnr: f64,
    ssim: f64,
    scores: Vec<(f64, f64)>,
}

fn run_trial(
    input: &BenchInput,
    strengths: &[f64],
    params: &EmbedParams,
    attacks: &[AttackSpec],
    seed: u64,
    trial: usize,
) -> Result<TrialOutcome> {
    let payload = trial_payload(seed, trial);
    let marked = embed_with_strengths(&input.image, &payload, strengths, params)?;
    let scores = attacks
        .iter()
        .enumerate()
        .map(|(i, &spec)| {
            let attacked = trial_attack(spec, seed, trial, i).apply(&marked)?;
            let got = extract(&attacked, params)?.payload;
            Ok((nc(&payload, &got), ber(&payload, &got)))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(TrialOutcome {
        psnr: psnr(&input.image, &marked)?,
        ssim: ssim(&input.image, &marked)?,
        scores,
    })
}

fn mean(values: impl Iterator<Item = f64>) -> f64 {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    sum / n.max(1) as f64
}

pub fn run_bench(inputs: &[BenchInput], cfg: &ToolkitConfig) -> Result<BenchReport> {
    cfg.validate()?;
    ensure!(!inputs.is_empty(), "no bench images configured");
    let trials = cfg.bench.trials;
    let seed = cfg.bench.seed;

    let mut jobs = Vec::new();
    for (i, input) in inputs.iter().enumerate() {
        for scheme in Scheme::ALL {
            let params = scheme.params(&cfg.embed);
            let strengths = block_strengths(&input.image, &params)
                .with_context(|| format!("image {}", input.name))?;
            jobs.push((i, scheme, params, strengths));
        }
    }

    let outcomes: Vec<Vec<TrialOutcome>> = jobs
        .par_iter()
        .map(|(i, _, params, strengths)| {
            (0..trials)
                .into_par_iter()
                .map(|t| run_trial(&inputs[*i], strengths, params, &cfg.attacks, seed, t))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;

    let mut imperceptibility = Vec::new();
    let mut robustness = Vec::new();
    for ((i, scheme, _, _), runs) in jobs.iter().zip(&outcomes) {
        let image = inputs[*i].name.clone();
        imperceptibility.push(ImperceptibilityRow {
            image: image.clone(),
            scheme: *scheme,
            trials,
            psnr: mean(runs.iter().map(|r| r.psnr)),
            ssim: mean(runs.iter().map(|r| r.ssim)),
        });
        for (a, spec) in cfg.attacks.iter().enumerate() {
            robustness.push(RobustnessRow {
                image: image.clone(),
                scheme: *scheme,
                attack: spec.label(),
                spec: *spec,
                trials,
                nc: mean(runs.iter().map(|r| r.scores[a].0)),
                ber: mean(runs.iter().map(|r| r.scores[a].1)),
            });
        }
    }

    Ok(BenchReport {
        config: cfg.clone(),
        seed,
        trials,
        timestamp: std::env::var("SOURCE_DATE_EPOCH").ok(),
        imperceptibility,
        robustness,
    })
}

impl BenchReport {
    pub fn robustness_cell(&self, image: &str, scheme: Scheme, attack: &str) -> Option<&RobustnessRow> {
        self.robustness
            .iter()
            .find(|r| r.image == image && r.scheme == scheme && r.attack == attack)
    }

    pub fn imperceptibility_row(&self, image: &str, scheme: Scheme) -> Option<&ImperceptibilityRow> {
        self.imperceptibility
            .iter()
            .find(|r| r.image == image && r.scheme == scheme)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes") + "\n"
    }

    pub fn robustness_csv(&self) -> String {
        let mut out = String::from("image,scheme,attack,trials,nc,ber\n");
        for r in &self.robustness {
            let _ = writeln!(
                out,
                "{},{},{},{},{:.6},{:.6}",
                r.image,
                r.scheme.name(),
                r.attack,
                r.trials,
                r.nc,
                r.ber
            );
        }
        out
    }

    pub fn imperceptibility_csv(&self) -> String {
        let mut out = String::from("image,scheme,trials,psnr,ssim\n");
        for r in &self.imperceptibility {
            let _ = writeln!(
                out,
                "{},{},{},{:.4},{:.6}",
                r.image,
                r.scheme.name(),
                r.trials,
                r.psnr,
                r.ssim
            );
        }
        out
    }

    /// Writes `report.json`, `robustness.csv` and `imperceptibility.csv`.
    pub fn write(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
        let files = [
            ("report.json", self.to_json()),
            ("robustness.csv", self.robustness_csv()),
            ("imperceptibility.csv", self.imperceptibility_csv()),
        ];
        files
            .into_iter()
            .map(|(name, body)| {
                let path = dir.join(name);
                fs::write(&path, body).with_context(|| format!("cannot write {}", path.display()))?;
                Ok(path)
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdaptivePoint {
    pub alpha: f64,
    pub beta: f64,
    pub psnr: f64,
    pub nc: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FixedPoint {
    pub fixed_sf: f64,
    pub psnr: f64,
    pub nc: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationReport {
    pub image: String,
    pub trials: usize,
    pub psnr_floor: f64,
    pub median_kernel: u32,
    pub adaptive_grid: Vec<AdaptivePoint>,
    pub fixed_grid: Vec<FixedPoint>,
    pub alpha: f64,
    pub beta: f64,
    /// False when no `(alpha, beta)` reached the PSNR floor; the highest-PSNR
    /// candidate was chosen instead.
    pub adaptive_floor_met: bool,
    pub fixed_sf: f64,
    pub fixed_floor_met: bool,
}

/// Index of the best candidate: highest NC among those meeting the floor,
/// else highest PSNR. Ties keep grid order.
fn select(points: &[(f64, f64)], floor: f64) -> (usize, bool) {
    let better = |a: (f64, f64), b: (f64, f64)| a.0 > b.0 || (a.0 == b.0 && a.1 > b.1);
    let feasible: Vec<usize> = (0..points.len()).filter(|&i| points[i].0 >= floor).collect();
    if let Some(&first) = feasible.first() {
        let mut best = first;
        for &i in &feasible[1..] {
            if better((points[i].1, points[i].0), (points[best].1, points[best].0)) {
                best = i;
            }
        }
        (best, true)
    } else {
        let mut best = 0;
        for i in 1..points.len() {
            if better(points[i], points[best]) {
                best = i;
            }
        }
        (best, false)
    }
}

fn score(
    input: &BenchInput,
    strengths: &[f64],
    params: &EmbedParams,
    attack: AttackSpec,
    seed: u64,
    trials: usize,
) -> Result<(f64, f64)> {
    let runs = (0..trials)
        .map(|t| run_trial(input, strengths, params, &[attack], seed, t))
        .collect::<Result<Vec<_>>>()?;
    Ok((
        mean(runs.iter().map(|r| r.psnr)),
        mean(runs.iter().map(|r| r.scores[0].0)),
    ))
}

pub fn calibrate(input: &BenchInput, cfg: &ToolkitConfig) -> Result<CalibrationReport> {
    cfg.validate()?;
    let cal = &cfg.bench.calibration;
    ensure!(
        !cal.alphas.is_empty() && !cal.betas.is_empty() && !cal.fixed_sfs.is_empty(),
        "calibration grids must not be empty"
    );
    let seed = cfg.bench.seed;
    let attack = AttackSpec::MedianFilter {
        kernel: cal.median_kernel,
    };
    let grid = MacroBlockGrid::for_image(&input.image)?;
    let edges = canny_edges(&input.image, &cfg.embed.psychovisual);
    let stats = psychovisual::block_stats(&input.image, &edges, grid, &cfg.embed.psychovisual)?;

    let pairs: Vec<(f64, f64)> = cal
        .alphas
        .iter()
        .flat_map(|&a| cal.betas.iter().map(move |&b| (a, b)))
        .collect();
    let adaptive_grid = pairs
        .par_iter()
        .map(|&(alpha, beta)| {
            let mut params = Scheme::Adaptive.params(&cfg.embed);
            params.psychovisual.alpha = alpha;
            params.psychovisual.beta = beta;
            let strengths: Vec<f64> = stats
                .iter()
                .map(|s| strength_factor(s, &params.psychovisual))
                .collect();
            let (psnr, nc) = score(input, &strengths, &params, attack, seed, cal.trials)?;
            Ok(AdaptivePoint {
                alpha,
                beta,
                psnr,
                nc,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let fixed_grid = cal
        .fixed_sfs
        .par_iter()
        .map(|&fixed_sf| {
            let params = EmbedParams {
                fixed_sf,
                ..Scheme::NonAdaptive.params(&cfg.embed)
            };
            let strengths = vec![fixed_sf; grid.len()];
            let (psnr, nc) = score(input, &strengths, &params, attack, seed, cal.trials)?;
            Ok(FixedPoint { fixed_sf, psnr, nc })
        })
        .collect::<Result<Vec<_>>>()?;

    let (ai, adaptive_floor_met) = select(
        &adaptive_grid.iter().map(|p| (p.psnr, p.nc)).collect::<Vec<_>>(),
        cal.psnr_floor,
    );
    let (fi, fixed_floor_met) = select(
        &fixed_grid.iter().map(|p| (p.psnr, p.nc)).collect::<Vec<_>>(),
        cal.psnr_floor,
    );
    Ok(CalibrationReport {
        image: input.name.clone(),
        trials: cal.trials,
        psnr_floor: cal.psnr_floor,
        median_kernel: cal.median_kernel,
        alpha: adaptive_grid[ai].alpha,
        beta: adaptive_grid[ai].beta,
        adaptive_floor_met,
        fixed_sf: fixed_grid[fi].fixed_sf,
        fixed_floor_met,
        adaptive_grid,
        fixed_grid,
    })
}

impl CalibrationReport {
    /// `cfg` with the chosen values substituted.
    pub fn apply(&self, cfg: &ToolkitConfig) -> ToolkitConfig {
        let mut out = cfg.clone();
        out.embed.psychovisual.alpha = self.alpha;
        out.embed.psychovisual.beta = self.beta;
        out.embed.fixed_sf = self.fixed_sf;
        out
    }

    /// Writes `calibration.json` and `calibrated-config.json`.
    pub fn write(&self, cfg: &ToolkitConfig, dir: &Path) -> Result<Vec<PathBuf>> {
        fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
        let report = dir.join("calibration.json");
        fs::write(&report, serde_json::to_string_pretty(self)? + "\n")
            .with_context(|| format!("cannot write {}", report.display()))?;
        let config = dir.join("calibrated-config.json");
        fs::write(&config, self.apply(cfg).to_json() + "\n")
            .with_context(|| format!("cannot write {}", config.display()))?;
        Ok(vec![report, config])
    }
}
