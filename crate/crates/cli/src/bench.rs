//! Dataset sweep: stem pairing, the work pool, per-cell metrics, and report
//! assembly.

use crate::args::BenchArgs;
use crate::{Error, Result};
use dsr_core::clustering::{segment, ClusteringParams, Method};
use dsr_core::metrics;
use dsr_core::raster::{load_image, read_ground_truth, GroundTruth, RasterImage};
use dsr_core::spectral::{compute_density, DensityMap, SignConvention, SpectralParams};
use rayon::prelude::*;
use serde::Serialize;
use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

pub const CSV_HEADER: &str = "image,method,k,k_final,ue,br,bp,runtime_s";

#[derive(Debug, Clone)]
pub struct BenchConfig {
    pub image_dir: PathBuf,
    pub gt_dir: PathBuf,
    pub k_values: Vec<usize>,
    pub methods: Vec<Method>,
    pub compactness: f64,
    pub sigma: f64,
    pub tau: f64,
    pub convention: SignConvention,
    pub downsample: u8,
    /// Worker count; 0 lets the pool size itself to the host.
    pub parallelism: usize,
}

impl BenchConfig {
    pub fn from_args(args: &BenchArgs) -> Result<Self> {
        if args.k_values.is_empty() {
            return Err(Error::invalid("at least one k value is required"));
        }
        if args.methods.is_empty() {
            return Err(Error::invalid("at least one method is required"));
        }
        Ok(BenchConfig {
            image_dir: args.images.clone(),
            gt_dir: args.ground_truth.clone(),
            k_values: args.k_values.clone(),
            methods: args.methods.iter().map(|&m| m.into()).collect(),
            compactness: args.compactness,
            sigma: args.sigma,
            tau: args.tau,
            convention: args.density_sign.into(),
            downsample: args.downsample,
            parallelism: effective_parallelism(args.threads)?,
        })
    }
}

/// Flag value unless the DSR_THREADS environment variable is set.
pub fn effective_parallelism(flag: usize) -> Result<usize> {
    match std::env::var("DSR_THREADS") {
        Ok(v) => v
            .trim()
            .parse::<usize>()
            .map_err(|_| Error::invalid(format!("DSR_THREADS must be an integer, got {v:?}"))),
        Err(std::env::VarError::NotPresent) => Ok(flag),
        Err(e) => Err(Error::invalid(format!("DSR_THREADS: {e}"))),
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CellMetrics {
    pub image: String,
    pub method: String,
    pub k: usize,
    pub k_final: usize,
    pub ue: f64,
    pub br: f64,
    pub bp: f64,
    pub runtime_s: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SkippedCell {
    pub image: String,
    pub method: String,
    pub k: usize,
    pub reason: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct Aggregate {
    pub method: String,
    pub k: usize,
    /// Number of completed cells behind the means.
    pub n: usize,
    pub mean_ue: f64,
    pub mean_br: f64,
    pub mean_bp: f64,
    pub mean_runtime_s: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ConfigEcho {
    pub image_dir: String,
    pub gt_dir: String,
    pub k_values: Vec<usize>,
    pub methods: Vec<String>,
    pub compactness: f64,
    pub sigma: f64,
    pub tau: f64,
    pub density_sign: String,
    pub downsample: u8,
    pub parallelism: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct BenchReport {
    pub version: String,
    pub config: ConfigEcho,
    pub rows: Vec<CellMetrics>,
    pub skips: Vec<SkippedCell>,
    pub aggregates: Vec<Aggregate>,
    /// Mean undersegmentation-error improvement of dsr over slic across the
    /// k values both methods completed, as a percentage; absent when either
    /// series is missing or the baseline touches zero.
    pub improvement_ue_dsr_vs_slic_pct: Option<f64>,
}

pub fn method_name(m: Method) -> &'static str {
    match m {
        Method::Slic => "slic",
        Method::Dsr => "dsr",
    }
}

struct LoadedImage {
    stem: String,
    img: RasterImage,
    gt: GroundTruth,
    density: Option<DensityMap>,
}

enum Paired {
    Ok { stem: String, img: PathBuf, gt: PathBuf },
    Skipped { stem: String, reason: String },
}

/// Images are files with a png/ppm extension, sorted by file name; the
/// ground truth for `stem.png` is `gt_dir/stem.seg`, else `gt_dir/stem.png`.
fn pair_inputs(image_dir: &Path, gt_dir: &Path) -> Result<Vec<Paired>> {
    let mut names: Vec<String> = std::fs::read_dir(image_dir)
        .map_err(|e| Error::io(image_dir, e))?
        .filter_map(|entry| entry.ok())
        .filter_map(|entry| entry.file_name().into_string().ok())
        .filter(|name| {
            let lower = name.to_ascii_lowercase();
            lower.ends_with(".png") || lower.ends_with(".ppm")
        })
        .collect();
    names.sort();
    let mut out = Vec::with_capacity(names.len());
    for name in names {
        let stem = Path::new(&name)
            .file_stem()
            .and_then(|s| s.to_str())
            .unwrap_or(&name)
            .to_string();
        let seg = gt_dir.join(format!("{stem}.seg"));
        let png = gt_dir.join(format!("{stem}.png"));
        let gt = if seg.is_file() {
            Some(seg)
        } else if png.is_file() {
            Some(png)
        } else {
            None
        };
        out.push(match gt {
            Some(gt) => Paired::Ok {
                stem,
                img: image_dir.join(&name),
                gt,
            },
            None => Paired::Skipped {
                stem,
                reason: "no ground truth with this stem".to_string(),
            },
        });
    }
    Ok(out)
}

/// Run the whole sweep and assemble the report. Pure with respect to the
/// inputs: rerunning yields the same metric values, and the worker count
/// only affects scheduling.
pub fn run(config: &BenchConfig) -> Result<BenchReport> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.parallelism)
        .build()
        .map_err(|e| Error::invalid(format!("thread pool: {e}")))?;

    let mut skips: Vec<SkippedCell> = Vec::new();
    let skip_image = |skips: &mut Vec<SkippedCell>, stem: &str, reason: &str| {
        for &method in &config.methods {
            for &k in &config.k_values {
                skips.push(SkippedCell {
                    image: stem.to_string(),
                    method: method_name(method).to_string(),
                    k,
                    reason: reason.to_string(),
                });
            }
        }
    };

    let wants_density = config.methods.contains(&Method::Dsr);
    let spectral = SpectralParams {
        sigma: config.sigma,
        convention: config.convention,
        downsample: config.downsample,
        ..SpectralParams::default()
    };

    let mut loaded: Vec<LoadedImage> = Vec::new();
    for pair in pair_inputs(&config.image_dir, &config.gt_dir)? {
        match pair {
            Paired::Skipped { stem, reason } => skip_image(&mut skips, &stem, &reason),
            Paired::Ok { stem, img, gt } => {
                let img = match load_image(&img) {
                    Ok(i) => i,
                    Err(e) => {
                        skip_image(&mut skips, &stem, &format!("image unreadable: {e}"));
                        continue;
                    }
                };
                let gt = match read_ground_truth(&gt) {
                    Ok(g) => g,
                    Err(e) => {
                        skip_image(&mut skips, &stem, &format!("ground truth unreadable: {e}"));
                        continue;
                    }
                };
                if gt.regions.width() != img.width() || gt.regions.height() != img.height() {
                    skip_image(&mut skips, &stem, "ground truth dimensions mismatch");
                    continue;
                }
                loaded.push(LoadedImage {
                    stem,
                    img,
                    gt,
                    density: None,
                });
            }
        }
    }
    if loaded.is_empty() {
        return Err(Error::invalid(format!(
            "no usable image/ground-truth pairs under {}",
            config.image_dir.display()
        )));
    }

    if wants_density {
        let densities: Vec<dsr_core::Result<DensityMap>> = pool.install(|| {
            loaded
                .par_iter()
                .map(|li| compute_density(&li.img, &spectral))
                .collect()
        });
        for (li, d) in loaded.iter_mut().zip(densities) {
            // a failure here only disables the dsr cells of that image
            li.density = d.ok();
        }
    }

    // enumerate the requested cells, splitting out the statically invalid
    struct Cell<'a> {
        image: &'a LoadedImage,
        method: Method,
        k: usize,
    }
    let mut cells: Vec<Cell> = Vec::new();
    for image in &loaded {
        let n = image.img.num_pixels();
        for &method in &config.methods {
            for &k in &config.k_values {
                if k < 4 || k > n / 4 {
                    skips.push(SkippedCell {
                        image: image.stem.clone(),
                        method: method_name(method).to_string(),
                        k,
                        reason: format!("k outside [4, {}] for {n} pixels", n / 4),
                    });
                    continue;
                }
                if method == Method::Dsr && image.density.is_none() {
                    skips.push(SkippedCell {
                        image: image.stem.clone(),
                        method: method_name(method).to_string(),
                        k,
                        reason: "density pipeline failed for this image".to_string(),
                    });
                    continue;
                }
                cells.push(Cell { image, method, k });
            }
        }
    }

    let outcomes: Vec<std::result::Result<CellMetrics, SkippedCell>> = pool.install(|| {
        cells
            .par_iter()
            .map(|cell| {
                let mut params = ClusteringParams::new(cell.method, cell.k);
                params.compactness = config.compactness;
                params.tau = config.tau;
                let density = match cell.method {
                    Method::Dsr => cell.image.density.as_ref(),
                    Method::Slic => None,
                };
                let started = Instant::now();
                let out = segment(&cell.image.img, &params, density);
                let runtime_s = started.elapsed().as_secs_f64();
                let out = match out {
                    Ok(o) => o,
                    Err(e) => {
                        return Err(SkippedCell {
                            image: cell.image.stem.clone(),
                            method: method_name(cell.method).to_string(),
                            k: cell.k,
                            reason: format!("segmentation failed: {e}"),
                        })
                    }
                };
                let gt = &cell.image.gt;
                let metrics_of = || -> dsr_core::Result<(f64, f64, f64)> {
                    Ok((
                        metrics::undersegmentation_error(gt, &out.labels, 0.05)?,
                        metrics::boundary_recall(gt, &out.labels, 2.0)?,
                        metrics::boundary_precision(gt, &out.labels, 2.0)?,
                    ))
                };
                match metrics_of() {
                    Ok((ue, br, bp)) => Ok(CellMetrics {
                        image: cell.image.stem.clone(),
                        method: method_name(cell.method).to_string(),
                        k: cell.k,
                        k_final: out.labels.num_labels(),
                        ue,
                        br,
                        bp,
                        runtime_s,
                    }),
                    Err(e) => Err(SkippedCell {
                        image: cell.image.stem.clone(),
                        method: method_name(cell.method).to_string(),
                        k: cell.k,
                        reason: format!("metrics failed: {e}"),
                    }),
                }
            })
            .collect()
    });

    let mut rows: Vec<CellMetrics> = Vec::new();
    for outcome in outcomes {
        match outcome {
            Ok(row) => rows.push(row),
            Err(skip) => skips.push(skip),
        }
    }
    rows.sort_by(|a, b| {
        (&a.image, &a.method, a.k).cmp(&(&b.image, &b.method, b.k))
    });
    skips.sort_by(|a, b| {
        (&a.image, &a.method, a.k).cmp(&(&b.image, &b.method, b.k))
    });

    let aggregates = aggregate(&rows);
    let improvement = improvement_pct(&aggregates);

    Ok(BenchReport {
        version: env!("CARGO_PKG_VERSION").to_string(),
        config: ConfigEcho {
            image_dir: config.image_dir.display().to_string(),
            gt_dir: config.gt_dir.display().to_string(),
            k_values: config.k_values.clone(),
            methods: config.methods.iter().map(|&m| method_name(m).to_string()).collect(),
            compactness: config.compactness,
            sigma: config.sigma,
            tau: config.tau,
            density_sign: match config.convention {
                SignConvention::Literal => "literal".to_string(),
                SignConvention::Inverted => "inverted".to_string(),
            },
            downsample: config.downsample,
            parallelism: config.parallelism,
        },
        rows,
        skips,
        aggregates,
        improvement_ue_dsr_vs_slic_pct: improvement,
    })
}

fn aggregate(rows: &[CellMetrics]) -> Vec<Aggregate> {
    let mut groups: BTreeMap<(String, usize), Vec<&CellMetrics>> = BTreeMap::new();
    for row in rows {
        groups.entry((row.method.clone(), row.k)).or_default().push(row);
    }
    groups
        .into_iter()
        .map(|((method, k), cells)| {
            let n = cells.len() as f64;
            Aggregate {
                method,
                k,
                n: cells.len(),
                mean_ue: cells.iter().map(|c| c.ue).sum::<f64>() / n,
                mean_br: cells.iter().map(|c| c.br).sum::<f64>() / n,
                mean_bp: cells.iter().map(|c| c.bp).sum::<f64>() / n,
                mean_runtime_s: cells.iter().map(|c| c.runtime_s).sum::<f64>() / n,
            }
        })
        .collect()
}

/// Mean UE improvement of dsr over slic on the k values where both methods
/// aggregated the same image count; None when the series do not line up or
/// the baseline has a zero.
fn improvement_pct(aggregates: &[Aggregate]) -> Option<f64> {
    let series = |method: &str| -> BTreeMap<usize, f64> {
        aggregates
            .iter()
            .filter(|a| a.method == method)
            .map(|a| (a.k, a.mean_ue))
            .collect()
    };
    let dsr = series("dsr");
    let slic = series("slic");
    let shared: Vec<usize> = dsr.keys().filter(|k| slic.contains_key(k)).copied().collect();
    if shared.is_empty() {
        return None;
    }
    let ours: Vec<f64> = shared.iter().map(|k| dsr[k]).collect();
    let baseline: Vec<f64> = shared.iter().map(|k| slic[k]).collect();
    metrics::improvement_rate(&ours, &baseline).ok()
}

pub fn to_csv(report: &BenchReport) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in &report.rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            r.image, r.method, r.k, r.k_final, r.ue, r.br, r.bp, r.runtime_s
        );
    }
    out
}

/// Human-oriented aggregate table printed after a run.
pub fn format_table(report: &BenchReport) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:<6} {:>6} {:>3} {:>10} {:>8} {:>8} {:>10}",
        "method", "k", "n", "mean_ue", "mean_br", "mean_bp", "runtime_s"
    );
    for a in &report.aggregates {
        let _ = writeln!(
            out,
            "{:<6} {:>6} {:>3} {:>10.5} {:>8.5} {:>8.5} {:>10.4}",
            a.method, a.k, a.n, a.mean_ue, a.mean_br, a.mean_bp, a.mean_runtime_s
        );
    }
    match report.improvement_ue_dsr_vs_slic_pct {
        Some(pct) => {
            let _ = writeln!(out, "mean UE improvement, dsr vs slic: {pct:.2}%");
        }
        None => {
            let _ = writeln!(out, "mean UE improvement, dsr vs slic: n/a");
        }
    }
    if !report.skips.is_empty() {
        let _ = writeln!(out, "skipped cells: {}", report.skips.len());
    }
    out
}

pub fn write_reports(report: &BenchReport, csv_path: &Path, json_path: &Path) -> Result<()> {
    std::fs::write(csv_path, to_csv(report)).map_err(|e| Error::io(csv_path, e))?;
    let json = serde_json::to_string_pretty(report)
        .map_err(|e| Error::invalid(format!("report serialization: {e}")))?;
    std::fs::write(json_path, json).map_err(|e| Error::io(json_path, e))
}
