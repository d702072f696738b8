use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use hpm_core::bovw::{encode_bovw, kmeans_fit, Codebook, KmeansParams};
use hpm_core::classify::{LinearModel, SvmParams};
use hpm_core::evalharness::{
    build_protocols, emit_report, encode_entries, evaluate_model, fit_model, parse_report_csv, run_protocols, Dataset,
    Filter, Mode, PipelineConfig, ReportFormat, ResultsTable, Select,
};
use hpm_core::featstore::{load_feature_file, write_feature_file, BlockKind, DatasetManifest, FeatureSequence};
use hpm_core::ganloss::{discriminator_loss, refiner_loss, DiscOutputs, LossValue, RefinerBatch, DEFAULT_EPSILON};
use hpm_core::posedict::{learn_dictionary, nearest_pose, ClusterParams, PoseDictionary};
use hpm_core::scenegen::{sample_scene_specs, split_cameras, SceneParams};
use hpm_core::skeleton::{center_at_root, parse_skeleton_table};
use hpm_core::temporal::{ftp_encode, FtpConfig, DEFAULT_COEFFS};
use hpm_core::toydata::{generate_toy_dataset, toy_skeleton_csv, ToyDatasetParams, ToySkeletonParams};
use hpm_core::DEFAULT_SEED;
use rayon::prelude::*;
use serde::Deserialize;

use crate::args::*;
use crate::config::{parse_metric, pick, Config};
use crate::io::{read_text, require_file, write_atomic};

pub const TOY_SKELETON: &str = "skeleton.csv";

pub fn run(cli: Cli) -> Result<()> {
    if let Some(p) = &cli.config {
        require_file(p)?;
    }
    let cfg = Config::load(cli.config.as_deref())?;
    if let Some(n) = cli.threads.or(cfg.threads) {
        if n == 0 {
            bail!("--threads must be at least 1");
        }
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    match cli.command {
        Command::ClusterPoses(a) => cluster_poses(a, &cfg),
        Command::AssignPoses(a) => assign_poses(a),
        Command::GenScenes(a) => gen_scenes(a, &cfg),
        Command::SplitCameras(a) => {
            let split = split_cameras(pick(a.seed, cfg.seed, DEFAULT_SEED));
            write_atomic(&a.out, json(&split).as_bytes())
        }
        Command::GanLoss(a) => gan_loss(a, &cfg),
        Command::EncodeFtp(a) => encode_ftp(a, &cfg),
        Command::FitCodebook(a) => fit_codebook(a, &cfg),
        Command::EncodeBovw(a) => encode_bovw_cmd(a),
        Command::TrainSvm(a) => train_svm(a, &cfg),
        Command::Predict(a) => predict(a, &cfg),
        Command::Evaluate(a) => evaluate(a, &cfg),
        Command::Report(a) => report(a),
        Command::GenToy(a) => gen_toy(a, &cfg),
    }
}

fn json<T: serde::Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("serializable");
    s.push('\n');
    s
}

fn cluster_poses(a: ClusterPosesArgs, cfg: &Config) -> Result<()> {
    for p in &a.inputs {
        require_file(p)?;
    }
    let defaults = ClusterParams::default();
    let metric = match a.metric.as_deref().or(cfg.metric.as_deref()) {
        Some(m) => parse_metric(m)?,
        None => defaults.metric,
    };
    let params = ClusterParams {
        min_cluster_size: pick(a.min_cluster_size, cfg.min_cluster_size, defaults.min_cluster_size),
        min_samples: a.min_samples.or(cfg.min_samples),
        sample_count: pick(a.sample_count, cfg.sample_count, defaults.sample_count),
        rng_seed: pick(a.seed, cfg.seed, defaults.rng_seed),
        metric,
    };
    params.validate()?;
    let sequences = a
        .inputs
        .iter()
        .map(|p| {
            let bytes = std::fs::read(p).with_context(|| format!("reading {}", p.display()))?;
            parse_skeleton_table(&bytes, &p.display().to_string()).with_context(|| format!("parsing {}", p.display()))
        })
        .collect::<Result<Vec<_>>>()?;
    let (dict, result) = learn_dictionary(&sequences, &params)?;
    write_atomic(&a.out, dict.to_json().as_bytes())?;
    println!("{} poses from {} frames ({} noise)", dict.len(), result.labels.len(), result.noise_count());
    Ok(())
}

fn load_dict(path: &Path) -> Result<PoseDictionary> {
    require_file(path)?;
    PoseDictionary::from_json(&read_text(path)?).with_context(|| format!("loading {}", path.display()))
}

fn assign_poses(a: AssignPosesArgs) -> Result<()> {
    require_file(&a.input)?;
    let dict = load_dict(&a.dict)?;
    let bytes = std::fs::read(&a.input)?;
    let seq = parse_skeleton_table(&bytes, &a.input.display().to_string())?;
    let rows = seq
        .frames
        .par_iter()
        .map(|f| {
            let (pose, d) = nearest_pose(&center_at_root(f)?, &dict)?;
            Ok(format!("{},{},{}\n", f.frame_id, pose, d))
        })
        .collect::<Result<Vec<String>>>()?;
    let mut out = String::from("frame_id,pose_id,distance\n");
    out.extend(rows);
    write_atomic(&a.out, out.as_bytes())
}

fn gen_scenes(a: GenScenesArgs, cfg: &Config) -> Result<()> {
    let dict = load_dict(&a.dict)?;
    let defaults = SceneParams::default();
    let params = SceneParams {
        seed: pick(a.seed, cfg.seed, defaults.seed),
        camera_radius: pick(a.camera_radius, cfg.camera_radius, defaults.camera_radius),
        ..defaults
    };
    let manifest = sample_scene_specs(dict.len(), &params, &a.dict.display().to_string())?;
    write_atomic(&a.out, manifest.to_json().as_bytes())?;
    println!("{} scene specs for {} poses", manifest.specs.len(), dict.len());
    Ok(())
}

#[derive(Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum LossRequest {
    Refiner {
        d_on_refined: Vec<f64>,
        synthetic: Vec<Vec<f64>>,
        refined: Vec<Vec<f64>>,
        lambda: Option<f64>,
        epsilon: Option<f64>,
    },
    Discriminator {
        on_refined: Vec<f64>,
        on_real: Vec<f64>,
        #[serde(default)]
        swap_targets: bool,
        epsilon: Option<f64>,
    },
}

fn gan_loss(a: GanLossArgs, cfg: &Config) -> Result<()> {
    require_file(&a.input)?;
    let requests: Vec<LossRequest> =
        serde_json::from_str(&read_text(&a.input)?).with_context(|| format!("parsing {}", a.input.display()))?;
    let results = requests
        .into_iter()
        .enumerate()
        .map(|(i, r)| {
            let v: LossValue = match r {
                LossRequest::Refiner {
                    d_on_refined,
                    synthetic,
                    refined,
                    lambda,
                    epsilon,
                } => {
                    let lambda = lambda.or(cfg.lambda).context("refiner batch needs lambda")?;
                    let eps = pick(epsilon, cfg.epsilon, DEFAULT_EPSILON);
                    refiner_loss(&d_on_refined, &RefinerBatch { synthetic, refined }, lambda, eps)?
                }
                LossRequest::Discriminator {
                    on_refined,
                    on_real,
                    swap_targets,
                    epsilon,
                } => {
                    let outputs = DiscOutputs {
                        on_refined,
                        on_real,
                        epsilon: pick(epsilon, cfg.epsilon, DEFAULT_EPSILON),
                    };
                    discriminator_loss(&outputs, swap_targets)?
                }
            };
            Ok::<_, anyhow::Error>(v).with_context(|| format!("batch {i}"))
        })
        .collect::<Result<Vec<_>>>()?;
    write_atomic(&a.out, json(&results).as_bytes())
}

/// Rewrites the selected blocks of every entry into `out_dir/<block>/<id>.hpmf`
/// and writes a manifest pointing at them. Other blocks keep their original
/// files, referenced by absolute path.
fn transform_manifest(
    manifest_path: &Path,
    out_dir: &Path,
    select: impl Fn(BlockKind) -> bool + Sync,
    encode: impl Fn(&FeatureSequence) -> Result<Vec<f64>> + Sync,
) -> Result<usize> {
    require_file(manifest_path)?;
    let manifest = DatasetManifest::load(manifest_path)?;
    if !manifest.blocks.iter().any(|&b| select(b)) {
        bail!("manifest declares no block this command encodes");
    }
    let encoded = manifest
        .entries
        .par_iter()
        .map(|e| {
            let mut paths = BTreeMap::new();
            let mut files = Vec::new();
            for (&b, _) in &e.paths {
                let src = manifest.resolve(e, b).expect("present");
                if select(b) {
                    let seq = load_feature_file(&src)?;
                    let values = encode(&seq).with_context(|| format!("{} {b}", e.video_id))?;
                    let out = FeatureSequence::new(
                        e.video_id.clone(),
                        1,
                        values.len(),
                        values.iter().map(|&v| v as f32).collect(),
                    )?;
                    let rel = PathBuf::from(b.name()).join(format!("{}.hpmf", e.video_id));
                    files.push((rel.clone(), write_feature_file(&out)));
                    paths.insert(b, rel);
                } else {
                    let abs = std::fs::canonicalize(&src).with_context(|| format!("resolving {}", src.display()))?;
                    paths.insert(b, abs);
                }
            }
            Ok((paths, files))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut out = manifest.clone();
    let mut written = 0;
    for (entry, (paths, files)) in out.entries.iter_mut().zip(encoded) {
        entry.paths = paths;
        for (rel, bytes) in files {
            write_atomic(&out_dir.join(rel), &bytes)?;
            written += 1;
        }
    }
    out.base_dir = out_dir.to_path_buf();
    write_atomic(&out_dir.join(hpm_core::toydata::MANIFEST_NAME), out.to_text().as_bytes())?;
    Ok(written)
}

fn single_frame(path: &Path, out: &Path, encode: impl Fn(&FeatureSequence) -> Result<Vec<f64>>) -> Result<()> {
    require_file(path)?;
    let seq = load_feature_file(path)?;
    let values = encode(&seq)?;
    let enc = FeatureSequence::new(seq.video_id.clone(), 1, values.len(), values.iter().map(|&v| v as f32).collect())?;
    write_atomic(out, &write_feature_file(&enc))
}

fn ftp_config(coefficients: Option<usize>, frame_l2: bool, cfg: &Config) -> Result<FtpConfig> {
    let c = pick(coefficients, cfg.coefficients, DEFAULT_COEFFS);
    if c == 0 {
        bail!("coefficient count must be at least 1");
    }
    Ok(FtpConfig {
        coefficients: c,
        frame_l2: frame_l2 || cfg.frame_l2.unwrap_or(false),
    })
}

fn encode_ftp(a: EncodeFtpArgs, cfg: &Config) -> Result<()> {
    let ftp = ftp_config(a.coefficients, a.frame_l2, cfg)?;
    let encode = |s: &FeatureSequence| Ok(ftp_encode(s, &ftp).values);
    match (&a.io.input, &a.io.out, &a.io.manifest, &a.io.out_dir) {
        (Some(i), Some(o), _, _) => single_frame(i, o, encode),
        (_, _, Some(m), Some(d)) => {
            let n = transform_manifest(m, d, BlockKind::is_hpm, encode)?;
            println!("encoded {n} feature files");
            Ok(())
        }
        _ => bail!("give --in/--out or --manifest/--out-dir"),
    }
}

fn load_codebook(path: &Path) -> Result<Codebook> {
    require_file(path)?;
    let bytes = std::fs::read(path)?;
    Codebook::from_bytes(&bytes).with_context(|| format!("loading {}", path.display()))
}

fn encode_bovw_cmd(a: EncodeBovwArgs) -> Result<()> {
    let cb = load_codebook(&a.codebook)?;
    let encode = |s: &FeatureSequence| {
        let rows: Vec<Vec<f32>> = (0..s.frames()).map(|t| s.row(t).to_vec()).collect();
        Ok(encode_bovw(&rows, &cb)?)
    };
    match (&a.io.input, &a.io.out, &a.io.manifest, &a.io.out_dir) {
        (Some(i), Some(o), _, _) => single_frame(i, o, encode),
        (_, _, Some(m), Some(d)) => {
            let n = transform_manifest(m, d, |b| !b.is_hpm(), encode)?;
            println!("encoded {n} feature files");
            Ok(())
        }
        _ => bail!("give --in/--out or --manifest/--out-dir"),
    }
}

fn fit_codebook(a: FitCodebookArgs, cfg: &Config) -> Result<()> {
    require_file(&a.manifest)?;
    let manifest = DatasetManifest::load(&a.manifest)?;
    let views: BTreeSet<u32> = a.views.iter().copied().collect();
    let paths: Vec<PathBuf> = manifest
        .entries
        .iter()
        .filter(|e| views.is_empty() || views.contains(&e.view_id))
        .filter_map(|e| manifest.resolve(e, a.block))
        .collect();
    if paths.is_empty() {
        bail!("no {} files selected", a.block);
    }
    let per_file = paths
        .par_iter()
        .map(|p| {
            let s = load_feature_file(p)?;
            Ok((0..s.frames()).map(|t| s.row(t).to_vec()).collect::<Vec<_>>())
        })
        .collect::<Result<Vec<_>>>()?;
    let descriptors: Vec<Vec<f32>> = per_file.into_iter().flatten().collect();
    let defaults = KmeansParams::default();
    let params = KmeansParams {
        k: pick(a.k, cfg.k, defaults.k),
        seed: pick(a.seed, cfg.seed, defaults.seed),
        max_iters: pick(a.max_iters, cfg.max_iters, defaults.max_iters),
        ..defaults
    };
    let cb = kmeans_fit(&descriptors, &params)?;
    write_atomic(&a.out, &cb.to_bytes())?;
    println!("{} centroids from {} descriptors", cb.k(), descriptors.len());
    Ok(())
}

fn pipeline(enc: &EncodingArgs, svm: Option<&SvmArgs>, cfg: &Config) -> Result<(PipelineConfig, Option<Codebook>)> {
    let d = SvmParams::default();
    let svm = match svm {
        Some(s) => SvmParams {
            c: pick(s.c, cfg.c, d.c),
            tol: pick(s.tol, cfg.tol, d.tol),
            max_epochs: pick(s.max_epochs, cfg.max_epochs, d.max_epochs),
            seed: pick(s.seed, cfg.seed, d.seed),
            fit_bias: !s.no_bias && cfg.fit_bias.unwrap_or(true),
        },
        None => d,
    };
    let codebook = enc.codebook.as_deref().map(load_codebook).transpose()?;
    let config = PipelineConfig {
        ftp: ftp_config(enc.coefficients, enc.frame_l2, cfg)?,
        hpm_precomputed: enc.precomputed || cfg.precomputed.unwrap_or(false),
        svm,
    };
    Ok((config, codebook))
}

fn select(ids: &[u32]) -> Select {
    if ids.is_empty() {
        Select::Any
    } else {
        Select::Only(ids.iter().copied().collect())
    }
}

fn train_svm(a: TrainSvmArgs, cfg: &Config) -> Result<()> {
    require_file(&a.manifest)?;
    let (config, codebook) = pipeline(&a.encoding, Some(&a.svm), cfg)?;
    let manifest = DatasetManifest::load(&a.manifest)?;
    let filter = Filter {
        views: select(&a.train_views),
        subjects: select(&a.train_subjects),
    };
    let train: Vec<_> = manifest.entries.iter().filter(|e| filter.accepts(e.view_id, e.subject_id)).collect();
    if train.is_empty() {
        bail!("no manifest entries match the training filter");
    }
    let blocks = if a.blocks.is_empty() { manifest.blocks.clone() } else { a.blocks.clone() };
    let encoded = encode_entries(&manifest, &train, &blocks, &config, codebook.as_ref())?;
    let model = fit_model(&manifest, &train, &blocks, &encoded, &config.svm)?;
    write_atomic(&a.out, model.to_json().as_bytes())?;
    println!("{} classes, dimension {}, {} training videos", model.classes.len(), model.dim(), train.len());
    Ok(())
}

fn predict(a: PredictArgs, cfg: &Config) -> Result<()> {
    require_file(&a.model)?;
    require_file(&a.manifest)?;
    let (config, codebook) = pipeline(&a.encoding, None, cfg)?;
    let model = LinearModel::from_json(&read_text(&a.model)?).with_context(|| format!("loading {}", a.model.display()))?;
    let layout = model.layout.clone().context("model has no fusion layout")?;
    let manifest = DatasetManifest::load(&a.manifest)?;
    let filter = Filter {
        views: select(&a.views),
        subjects: select(&a.subjects),
    };
    let test: Vec<_> = manifest.entries.iter().filter(|e| filter.accepts(e.view_id, e.subject_id)).collect();
    let blocks: Vec<BlockKind> = layout.blocks.iter().map(|&(b, _)| b).collect();
    let encoded = encode_entries(&manifest, &test, &blocks, &config, codebook.as_ref())?;
    let run = evaluate_model(&model, &test, &encoded, "predict")?;
    write_atomic(&a.out, run.prediction_log().as_bytes())?;
    println!("accuracy\t{:.1}", run.accuracy);
    Ok(())
}

fn file_name(protocol: &str) -> String {
    let s: String = protocol.chars().map(|c| if c.is_ascii_alphanumeric() { c } else { '_' }).collect();
    format!("{}.txt", s.trim_matches('_'))
}

fn evaluate(a: EvaluateArgs, cfg: &Config) -> Result<()> {
    require_file(&a.manifest)?;
    let dataset = match (a.dataset, &cfg.dataset) {
        (Some(d), _) => d,
        (None, Some(s)) => s.parse::<Dataset>().map_err(|e| anyhow::anyhow!("{e}"))?,
        (None, None) => bail!("--dataset is required (uwa, nucla or ntu)"),
    };
    let mode = match (a.mode, &cfg.mode) {
        (Some(m), _) => m,
        (None, Some(s)) => s.parse::<Mode>().map_err(|e| anyhow::anyhow!("{e}"))?,
        (None, None) => Mode::CrossView,
    };
    let (config, codebook) = pipeline(&a.encoding, Some(&a.svm), cfg)?;
    let manifest = DatasetManifest::load(&a.manifest)?;
    let subjects = cfg.ntu_subjects()?;
    let protocols = build_protocols(dataset, mode, Some(&subjects))?;
    let runs = run_protocols(&manifest, &protocols, &config, codebook.as_ref())?;
    let table = ResultsTable::from_runs(&a.method, &runs);
    write_atomic(&a.out, emit_report(std::slice::from_ref(&table), ReportFormat::Csv)?.as_bytes())?;
    if let Some(dir) = &a.log_dir {
        for r in &runs {
            write_atomic(&dir.join(file_name(&r.protocol)), r.prediction_log().as_bytes())?;
        }
    }
    for r in &runs {
        println!("{}\t{:.1}", r.protocol, r.accuracy);
    }
    println!("mean\t{:.1}", table.mean());
    Ok(())
}

fn report(a: ReportArgs) -> Result<()> {
    let mut tables = Vec::new();
    for p in &a.inputs {
        require_file(p)?;
        tables.extend(parse_report_csv(&read_text(p)?).with_context(|| format!("parsing {}", p.display()))?);
    }
    let text = emit_report(&tables, a.format)?;
    match &a.out {
        Some(out) => write_atomic(out, text.as_bytes()),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn gen_toy(a: GenToyArgs, cfg: &Config) -> Result<()> {
    let seed = pick(a.seed, cfg.seed, DEFAULT_SEED);
    let params = ToyDatasetParams {
        classes: a.classes,
        views: a.views,
        videos: a.videos,
        dim: a.dim,
        noise: a.noise,
        with_traj: a.with_traj,
        seed,
        ..Default::default()
    };
    if params.classes < 2 || params.views < 1 || params.videos < 1 || params.dim < 1 {
        bail!("toy dataset needs at least 2 classes, 1 view, 1 video and dimension 1");
    }
    let ds = generate_toy_dataset(&params);
    for (rel, bytes) in &ds.files {
        write_atomic(&a.out_dir.join(rel), bytes)?;
    }
    let skel = toy_skeleton_csv(&ToySkeletonParams {
        seed,
        ..Default::default()
    });
    write_atomic(&a.out_dir.join(TOY_SKELETON), skel.as_bytes())?;
    println!("{} videos written to {}", ds.manifest.entries.len(), a.out_dir.display());
    Ok(())
}
