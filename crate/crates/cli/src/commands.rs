use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use adaptmark::attacks::AttackSpec;
use adaptmark::image::{load_image, save_image};
use adaptmark::metrics::{psnr, ssim};
use adaptmark::{embed, extract, Payload};
use anyhow::{bail, Context, Result};

use crate::bench::{calibrate, run_bench, BenchInput};
use crate::config::{ImageEntry, ToolkitConfig};
use crate::{AttackArgs, AttackKind, BenchArgs, EmbedArgs, ExtractArgs, ParamOverrides};

pub fn apply_overrides(cfg: &mut ToolkitConfig, o: &ParamOverrides) -> Result<()> {
    let e = &mut cfg.embed;
    if o.non_adaptive {
        e.adaptive = false;
    }
    if let Some(v) = o.fixed_sf {
        e.fixed_sf = v;
    }
    if let Some(v) = o.alpha {
        e.psychovisual.alpha = v;
    }
    if let Some(v) = o.beta {
        e.psychovisual.beta = v;
    }
    if let Some(v) = o.magnitude_floor {
        e.magnitude_floor = v;
    }
    e.validate()?;
    Ok(())
}

/// Hex text, or exactly 32 raw bytes.
pub fn read_payload_file(path: &Path) -> Result<Payload> {
    let bytes = fs::read(path).with_context(|| format!("cannot read {}", path.display()))?;
    if let Ok(text) = std::str::from_utf8(&bytes) {
        if let Ok(p) = Payload::from_hex(text.trim()) {
            return Ok(p);
        }
    }
    if bytes.len() == adaptmark::codec::PAYLOAD_BYTES {
        return Ok(Payload::from_bytes(&bytes)?);
    }
    Ok(Payload::from_hex(String::from_utf8_lossy(&bytes).trim())?)
}

pub fn cmd_embed(a: &EmbedArgs, mut cfg: ToolkitConfig, out: &mut impl Write) -> Result<()> {
    apply_overrides(&mut cfg, &a.params)?;
    let payload = match (&a.payload, &a.payload_file) {
        (Some(hex), _) => Payload::from_hex(hex)?,
        (None, Some(path)) => read_payload_file(path)?,
        (None, None) => bail!("a payload is required (--payload or --payload-file)"),
    };
    let cover = load_image(&a.cover)?;
    let marked = embed(&cover, &payload, &cfg.embed)?;
    save_image(&marked, &a.out)?;
    writeln!(out, "psnr {:.4}", psnr(&cover, &marked)?)?;
    writeln!(out, "ssim {:.6}", ssim(&cover, &marked)?)?;
    Ok(())
}

/// Prints the payload hex, the mean vote confidence, then one confidence
/// per bit.
pub fn cmd_extract(a: &ExtractArgs, mut cfg: ToolkitConfig, out: &mut impl Write) -> Result<()> {
    apply_overrides(&mut cfg, &a.params)?;
    let img = load_image(&a.image)?;
    let got = extract(&img, &cfg.embed)?;
    writeln!(out, "{}", got.payload.to_hex())?;
    writeln!(out, "mean_confidence {:.4}", got.mean_confidence())?;
    let per_bit: Vec<String> = got.confidence.iter().map(|c| format!("{c:.3}")).collect();
    writeln!(out, "confidence {}", per_bit.join(","))?;
    Ok(())
}

pub fn attack_spec(a: &AttackArgs) -> AttackSpec {
    match a.kind {
        AttackKind::None => AttackSpec::None,
        AttackKind::Median => AttackSpec::MedianFilter { kernel: a.kernel },
        AttackKind::SaltPepper => AttackSpec::SaltPepper {
            density: a.density,
            seed: a.seed,
        },
        AttackKind::Gaussian => AttackSpec::GaussianNoise {
            variance: a.variance,
            seed: a.seed,
        },
        AttackKind::HistEq => AttackSpec::HistEqualize,
        AttackKind::Jpeg => AttackSpec::Jpeg { quality: a.quality },
    }
}

pub fn cmd_attack(a: &AttackArgs, out: &mut impl Write) -> Result<()> {
    let spec = attack_spec(a);
    spec.validate()?;
    let img = load_image(&a.image)?;
    save_image(&spec.apply(&img)?, &a.out)?;
    writeln!(out, "{spec} -> {}", a.out.display())?;
    Ok(())
}

fn parse_image_entry(s: &str) -> Result<ImageEntry> {
    match s.split_once('=') {
        Some((name, path)) if !name.is_empty() && !path.is_empty() => Ok(ImageEntry {
            name: name.to_string(),
            path: PathBuf::from(path),
        }),
        _ => bail!("bench image must be NAME=PATH, got {s:?}"),
    }
}

pub fn cmd_bench(a: &BenchArgs, mut cfg: ToolkitConfig, out: &mut impl Write) -> Result<()> {
    apply_overrides(&mut cfg, &a.params)?;
    if !a.images.is_empty() {
        cfg.bench.images = a.images.iter().map(|s| parse_image_entry(s)).collect::<Result<_>>()?;
    }
    if let Some(t) = a.trials {
        cfg.bench.trials = t;
    }
    if let Some(s) = a.seed {
        cfg.bench.seed = s;
    }
    if let Some(dir) = &a.out {
        cfg.report_dir = dir.clone();
    }
    cfg.validate()?;
    if cfg.bench.images.is_empty() {
        bail!("no bench images: pass --image NAME=PATH or set bench.images");
    }

    let written = if a.calibrate {
        let entry = cfg
            .bench
            .images
            .get(cfg.bench.calibration.image)
            .context("calibration.image is out of range")?;
        let input = BenchInput::load(&entry.name, &entry.path)?;
        let report = calibrate(&input, &cfg)?;
        writeln!(
            out,
            "alpha {} beta {} (floor met: {}), fixed_sf {} (floor met: {})",
            report.alpha, report.beta, report.adaptive_floor_met, report.fixed_sf, report.fixed_floor_met
        )?;
        report.write(&cfg, &cfg.report_dir)?
    } else {
        let inputs = cfg
            .bench
            .images
            .iter()
            .map(|e| BenchInput::load(&e.name, &e.path))
            .collect::<Result<Vec<_>>>()?;
        run_bench(&inputs, &cfg)?.write(&cfg.report_dir)?
    };
    for path in written {
        writeln!(out, "wrote {}", path.display())?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn image_entries_parse() {
        let e = parse_image_entry("lena=/x/lena.png").unwrap();
        assert_eq!(e.name, "lena");
        assert_eq!(e.path, PathBuf::from("/x/lena.png"));
        assert!(parse_image_entry("lena").is_err());
        assert!(parse_image_entry("=x").is_err());
    }

    #[test]
    fn overrides_apply_and_validate() {
        let mut cfg = ToolkitConfig::default();
        let o = ParamOverrides {
            non_adaptive: true,
            fixed_sf: Some(0.08),
            alpha: Some(0.3),
            ..Default::default()
        };
        apply_overrides(&mut cfg, &o).unwrap();
        assert!(!cfg.embed.adaptive);
        assert_eq!(cfg.embed.fixed_sf, 0.08);
        assert_eq!(cfg.embed.psychovisual.alpha, 0.3);
        let bad = ParamOverrides {
            magnitude_floor: Some(-1.0),
            ..Default::default()
        };
        assert!(apply_overrides(&mut cfg, &bad).is_err());
    }

    #[test]
    fn payload_file_accepts_hex_and_raw() {
        let dir = tempfile::tempdir().unwrap();
        let p = Payload::from_bytes(&[0xA5; 32]).unwrap();
        let hex = dir.path().join("p.txt");
        fs::write(&hex, format!("{}\n", p.to_hex())).unwrap();
        assert_eq!(read_payload_file(&hex).unwrap(), p);
        let raw = dir.path().join("p.bin");
        fs::write(&raw, p.to_bytes()).unwrap();
        assert_eq!(read_payload_file(&raw).unwrap(), p);
        let short = dir.path().join("short.txt");
        fs::write(&short, "abc").unwrap();
        let err = read_payload_file(&short).unwrap_err().to_string();
        assert!(err.contains("payload must be 256 bits"), "{err}");
    }
}
