//! Corpus evaluation: every HDR image is rendered into exposure stacks under
//! several exposure conditions, each stack is processed by every method, and
//! the outputs are scored against the HDR image.

use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::image::RgbImage;
use crate::io::{read_image, FormatError, ImageFormat};
use crate::metrics::{mean_hue_difference, tmqi_with, TmqiParams};
use crate::pipeline::{run_pipeline, tone_map_global, Method, PipelineConfig};
use crate::scene::{self, SceneConfig};
use crate::stats;
use crate::synth::{generate_stack, SynthConfig};

/// A named list of exposure values.
#[derive(Clone, Debug, PartialEq)]
pub struct Condition {
    pub name: String,
    pub ev: Vec<f64>,
}

impl Condition {
    pub fn new(name: &str, ev: &[f64]) -> Self {
        Condition {
            name: name.to_string(),
            ev: ev.to_vec(),
        }
    }

    /// Every second stop from `lo` to `hi`, named `ev<lo>_<hi>`.
    pub fn range(lo: i32, hi: i32) -> Self {
        let ev: Vec<f64> = (lo..=hi).step_by(2).map(f64::from).collect();
        Condition::new(&format!("ev{lo}_{hi}"), &ev)
    }

    /// `{-4..4}`, `{-4..0}` and `{0..4}`.
    pub fn standard() -> Vec<Condition> {
        vec![Condition::range(-4, 4), Condition::range(-4, 0), Condition::range(0, 4)]
    }

    /// Parses `lo:hi` or a comma-separated EV list such as `-4,-2,0`.
    pub fn parse(text: &str) -> Result<Self> {
        let bad = || Error::InvalidParameter(format!("condition {text:?}"));
        if let Some((lo, hi)) = text.split_once(':') {
            let lo: i32 = lo.trim().parse().map_err(|_| bad())?;
            let hi: i32 = hi.trim().parse().map_err(|_| bad())?;
            if hi < lo {
                return Err(bad());
            }
            return Ok(Condition::range(lo, hi));
        }
        let ev = text
            .split(',')
            .map(|s| s.trim().parse::<f64>().map_err(|_| bad()))
            .collect::<Result<Vec<_>>>()?;
        let name = ev.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("_");
        Ok(Condition::new(&format!("ev{name}"), &ev))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EvalConfig {
    pub conditions: Vec<Condition>,
    pub methods: Vec<Method>,
    pub pipeline: PipelineConfig,
    pub tmqi: TmqiParams,
    pub gamma: f64,
    pub key: f64,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            conditions: Condition::standard(),
            methods: Method::ALL.to_vec(),
            pipeline: PipelineConfig::default(),
            tmqi: TmqiParams::default(),
            gamma: 2.2,
            key: 0.18,
        }
    }
}

/// One scored output.
#[derive(Clone, Debug, PartialEq)]
pub struct Row {
    pub image: String,
    pub condition: String,
    pub method: Method,
    pub mean_dh: f64,
    pub tmqi_q: f64,
    pub tmqi_s: f64,
    pub tmqi_n: f64,
}

#[derive(Clone, Debug)]
pub struct Failure {
    pub image: String,
    pub condition: String,
    pub error: String,
}

#[derive(Clone, Debug, Default)]
pub struct EvalResult {
    pub rows: Vec<Row>,
    pub failures: Vec<Failure>,
}

/// Box-plot statistics with whiskers at the most extreme values inside
/// `[Q1 - 1.5 IQR, Q3 + 1.5 IQR]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoxStats {
    pub n: usize,
    pub min: f64,
    pub whisker_lo: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub whisker_hi: f64,
    pub max: f64,
    pub mean: f64,
}

impl BoxStats {
    pub fn new(values: &[f64]) -> Option<Self> {
        if values.is_empty() {
            return None;
        }
        let mut v = values.to_vec();
        v.sort_by(f64::total_cmp);
        let q1 = stats::quantile(&v, 0.25);
        let q3 = stats::quantile(&v, 0.75);
        let iqr = q3 - q1;
        let (lo, hi) = (q1 - 1.5 * iqr, q3 + 1.5 * iqr);
        let inside = v.iter().copied().filter(|x| (lo..=hi).contains(x));
        let whisker_lo = inside.clone().fold(f64::INFINITY, f64::min);
        let whisker_hi = inside.fold(f64::NEG_INFINITY, f64::max);
        Some(BoxStats {
            n: v.len(),
            min: v[0],
            whisker_lo,
            q1,
            median: stats::quantile(&v, 0.5),
            q3,
            whisker_hi,
            max: v[v.len() - 1],
            mean: stats::mean(&v),
        })
    }
}

/// HDR images of a directory (`.hdr` and `.pfm`), sorted by file name.
pub fn corpus_files(dir: &Path) -> Result<Vec<PathBuf>> {
    let entries = fs::read_dir(dir).map_err(|e| FormatError::io(dir, e))?;
    let mut files = Vec::new();
    for entry in entries {
        let path = entry.map_err(|e| FormatError::io(dir, e))?.path();
        if matches!(
            ImageFormat::from_path(&path),
            Some(ImageFormat::RadianceHdr | ImageFormat::Pfm)
        ) {
            files.push(path);
        }
    }
    files.sort();
    Ok(files)
}

/// A source of HDR images that are loaded on demand.
#[derive(Clone, Debug)]
pub enum Corpus {
    Files(Vec<PathBuf>),
    Scenes { count: usize, config: SceneConfig },
}

impl Corpus {
    pub fn names(&self) -> Vec<String> {
        match self {
            Corpus::Files(files) => files
                .iter()
                .map(|f| {
                    f.file_stem()
                        .map(|s| s.to_string_lossy().into_owned())
                        .unwrap_or_default()
                })
                .collect(),
            Corpus::Scenes { count, .. } => (0..*count).map(|i| format!("scene{i:03}")).collect(),
        }
    }

    pub fn load(&self, index: usize) -> Result<RgbImage> {
        match self {
            Corpus::Files(files) => Ok(read_image(&files[index])?),
            Corpus::Scenes { config, .. } => Ok(scene::generate(index as u64, config)),
        }
    }

    pub fn len(&self) -> usize {
        match self {
            Corpus::Files(f) => f.len(),
            Corpus::Scenes { count, .. } => *count,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Outputs of every requested method for one stack.
pub fn method_outputs(hdr: &RgbImage, ev: &[f64], cfg: &EvalConfig) -> Result<Vec<(Method, RgbImage)>> {
    let synth = SynthConfig {
        ev: ev.to_vec(),
        gamma: cfg.gamma,
        key: cfg.key,
    };
    let stack = generate_stack(hdr, &synth)?;
    let wants = |m: Method| cfg.methods.contains(&m);
    let mut out = Vec::new();
    if wants(Method::Mertens) {
        let plain = PipelineConfig {
            no_ssla: true,
            ..cfg.pipeline.clone()
        };
        out.push((Method::Mertens, crate::pipeline::fuse_stack(&stack, &plain)?));
    }
    if wants(Method::TmGlobal) || wants(Method::SslaOnly) || wants(Method::Proposed) {
        let p = run_pipeline(
            &stack,
            &PipelineConfig {
                no_ssla: false,
                ..cfg.pipeline.clone()
            },
        )?;
        if wants(Method::TmGlobal) {
            out.push((Method::TmGlobal, tone_map_global(&p.hdr.image, cfg.key, cfg.gamma)?));
        }
        if wants(Method::SslaOnly) {
            out.push((Method::SslaOnly, p.fused));
        }
        if wants(Method::Proposed) {
            out.push((Method::Proposed, p.corrected));
        }
    }
    Ok(out)
}

fn score(image: &str, condition: &Condition, hdr: &RgbImage, cfg: &EvalConfig) -> Result<Vec<Row>> {
    method_outputs(hdr, &condition.ev, cfg)?
        .into_iter()
        .map(|(method, out)| {
            let t = tmqi_with(&out, hdr, &cfg.tmqi)?;
            Ok(Row {
                image: image.to_string(),
                condition: condition.name.clone(),
                method,
                mean_dh: mean_hue_difference(&out, hdr)?,
                tmqi_q: t.q,
                tmqi_s: t.s,
                tmqi_n: t.n,
            })
        })
        .collect()
}

/// Scores the whole corpus. Images are processed in parallel; rows come back
/// ordered by condition (as configured), image name and method.
pub fn evaluate_corpus(corpus: &Corpus, cfg: &EvalConfig) -> EvalResult {
    let names = corpus.names();
    let per_image: Vec<(Vec<Row>, Vec<Failure>)> = (0..corpus.len())
        .into_par_iter()
        .map(|i| {
            let name = &names[i];
            let mut rows = Vec::new();
            let mut failures = Vec::new();
            let hdr = match corpus.load(i) {
                Ok(h) => h,
                Err(e) => {
                    failures.push(Failure {
                        image: name.clone(),
                        condition: String::new(),
                        error: e.to_string(),
                    });
                    return (rows, failures);
                }
            };
            for c in &cfg.conditions {
                match score(name, c, &hdr, cfg) {
                    Ok(r) => rows.extend(r),
                    Err(e) => failures.push(Failure {
                        image: name.clone(),
                        condition: c.name.clone(),
                        error: e.to_string(),
                    }),
                }
            }
            (rows, failures)
        })
        .collect();
    let mut result = EvalResult::default();
    for (r, f) in per_image {
        result.rows.extend(r);
        result.failures.extend(f);
    }
    let cond_index = |name: &str| cfg.conditions.iter().position(|c| c.name == name).unwrap_or(usize::MAX);
    result.rows.sort_by(|a, b| {
        cond_index(&a.condition)
            .cmp(&cond_index(&b.condition))
            .then_with(|| a.image.cmp(&b.image))
            .then_with(|| a.method.cmp(&b.method))
    });
    result
        .failures
        .sort_by(|a, b| a.image.cmp(&b.image).then_with(|| a.condition.cmp(&b.condition)));
    result
}

const METRICS: [&str; 4] = ["mean_dh", "tmqi_q", "tmqi_s", "tmqi_n"];

fn metric(row: &Row, name: &str) -> f64 {
    match name {
        "mean_dh" => row.mean_dh,
        "tmqi_q" => row.tmqi_q,
        "tmqi_s" => row.tmqi_s,
        _ => row.tmqi_n,
    }
}

fn fmt(v: f64) -> String {
    format!("{v:.6}")
}

fn csv_err(path: &Path, e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => FormatError::io(path, io).into(),
        other => Error::InvalidParameter(format!("{}: {other:?}", path.display())),
    }
}

fn write_csv(path: &Path, header: &[&str], records: impl IntoIterator<Item = Vec<String>>) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_err(path, e))?;
    w.write_record(header).map_err(|e| csv_err(path, e))?;
    for r in records {
        w.write_record(&r).map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(|e| FormatError::io(path, e))?;
    Ok(())
}

/// Writes `<out>/<condition>/report.csv` for each condition, plus
/// `<out>/long.csv` (one metric value per line) and `<out>/summary.csv`
/// (box-plot statistics per condition, method and metric).
pub fn write_reports(out: &Path, result: &EvalResult, cfg: &EvalConfig) -> Result<()> {
    fs::create_dir_all(out).map_err(|e| FormatError::io(out, e))?;
    for c in &cfg.conditions {
        let dir = out.join(&c.name);
        fs::create_dir_all(&dir).map_err(|e| FormatError::io(&dir, e))?;
        let rows = result.rows.iter().filter(|r| r.condition == c.name).map(|r| {
            vec![
                r.image.clone(),
                r.method.name().to_string(),
                fmt(r.mean_dh),
                fmt(r.tmqi_q),
                fmt(r.tmqi_s),
                fmt(r.tmqi_n),
            ]
        });
        write_csv(
            &dir.join("report.csv"),
            &["image", "method", "mean_dh", "tmqi_q", "tmqi_s", "tmqi_n"],
            rows,
        )?;
    }

    let long = result.rows.iter().flat_map(|r| {
        METRICS.iter().map(move |m| {
            vec![
                r.condition.clone(),
                r.image.clone(),
                r.method.name().to_string(),
                m.to_string(),
                fmt(metric(r, m)),
            ]
        })
    });
    write_csv(
        &out.join("long.csv"),
        &["condition", "image", "method", "metric", "value"],
        long,
    )?;

    let mut summary = Vec::new();
    for c in &cfg.conditions {
        for &method in &cfg.methods {
            for m in METRICS {
                let values: Vec<f64> = result
                    .rows
                    .iter()
                    .filter(|r| r.condition == c.name && r.method == method)
                    .map(|r| metric(r, m))
                    .collect();
                let Some(b) = BoxStats::new(&values) else { continue };
                summary.push(vec![
                    c.name.clone(),
                    method.name().to_string(),
                    m.to_string(),
                    b.n.to_string(),
                    fmt(b.min),
                    fmt(b.whisker_lo),
                    fmt(b.q1),
                    fmt(b.median),
                    fmt(b.q3),
                    fmt(b.whisker_hi),
                    fmt(b.max),
                    fmt(b.mean),
                ]);
            }
        }
    }
    write_csv(
        &out.join("summary.csv"),
        &[
            "condition",
            "method",
            "metric",
            "n",
            "min",
            "whisker_lo",
            "q1",
            "median",
            "q3",
            "whisker_hi",
            "max",
            "mean",
        ],
        summary,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn standard_conditions() {
        let c = Condition::standard();
        assert_eq!(c[0].ev, vec![-4.0, -2.0, 0.0, 2.0, 4.0]);
        assert_eq!(c[1].ev, vec![-4.0, -2.0, 0.0]);
        assert_eq!(c[2].name, "ev0_4");
        assert_eq!(Condition::parse("-4:0").unwrap(), c[1]);
        assert_eq!(Condition::parse("-1, 1").unwrap().ev, vec![-1.0, 1.0]);
        assert!(Condition::parse("2:-2").is_err());
    }

    #[test]
    fn box_stats_whiskers_exclude_outliers() {
        let b = BoxStats::new(&[1.0, 2.0, 3.0, 4.0, 100.0]).unwrap();
        assert_eq!(b.median, 3.0);
        assert_eq!((b.q1, b.q3), (2.0, 4.0));
        assert_eq!(b.whisker_hi, 4.0);
        assert_eq!(b.max, 100.0);
        assert_eq!(b.whisker_lo, 1.0);
        assert!(BoxStats::new(&[]).is_none());
    }

    #[test]
    fn one_condition_gives_one_row_per_method() {
        let corpus = Corpus::Scenes {
            count: 2,
            config: SceneConfig {
                width: 40,
                height: 32,
                ..Default::default()
            },
        };
        let cfg = EvalConfig {
            conditions: vec![Condition::range(-2, 2)],
            ..Default::default()
        };
        let r = evaluate_corpus(&corpus, &cfg);
        assert!(r.failures.is_empty(), "{:?}", r.failures);
        assert_eq!(r.rows.len(), 8);
        assert_eq!(r.rows[0].image, "scene000");
        assert_eq!(r.rows[0].method, Method::Mertens);
        assert_eq!(r.rows[7].method, Method::Proposed);

        let dir = tempfile::tempdir().unwrap();
        write_reports(dir.path(), &r, &cfg).unwrap();
        let report = fs::read_to_string(dir.path().join("ev-2_2/report.csv")).unwrap();
        assert_eq!(report.lines().count(), 9);
        assert!(report.starts_with("image,method,mean_dh,tmqi_q,tmqi_s,tmqi_n\n"));
        let long = fs::read_to_string(dir.path().join("long.csv")).unwrap();
        assert_eq!(long.lines().count(), 1 + 8 * 4);
        let summary = fs::read_to_string(dir.path().join("summary.csv")).unwrap();
        assert_eq!(summary.lines().count(), 1 + 4 * 4);
    }

    #[test]
    fn unreadable_images_are_reported_not_fatal() {
        let dir = tempfile::tempdir().unwrap();
        let bad = dir.path().join("broken.pfm");
        fs::write(&bad, b"junk").unwrap();
        let corpus = Corpus::Files(vec![bad]);
        let r = evaluate_corpus(&corpus, &EvalConfig::default());
        assert!(r.rows.is_empty());
        assert_eq!(r.failures.len(), 1);
        assert_eq!(r.failures[0].image, "broken");
    }
}
