use std::fs;
use std::path::Path;

use qseg_core::boundary::{instance_boundaries, integrate_method3, nms_thin, Method3Options};
use qseg_core::io;
use qseg_core::metrics::evaluate;
use qseg_core::pixel_affinity::{build_codebook, encode, integrate_method1, AffinityCodebook, Method1Options};
use qseg_core::spectral::CutOptions;
use qseg_core::superpixel::{
    integrate_method2, pair_labels, slic, ColorSpace, Method2Options, PairUniverse, SlicOptions,
};
use qseg_core::synth::{gen_scene, perturb_boundary, perturb_class_map, perturb_pair_labels, SceneSpec, ShapeMix};
use qseg_core::{InstanceLabelMap, InstanceSegResult};
use rayon::prelude::*;

use crate::args::{CodebookArgs, Colors, EvaluateArgs, Method, ReconstructArgs, SlicArgs, SynthArgs, TransformArgs};
use crate::error::{AtPath, CliError, CliResult};
use crate::layout::{self, ensure_dir, file, image_seed, stems};

/// Runs `f` over `items` on `jobs` threads, keeping input order. The first
/// failure in input order is returned.
fn par_map<T: Send>(jobs: u16, items: &[String], f: impl Fn(&str) -> CliResult<T> + Sync) -> CliResult<Vec<T>> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(usize::from(jobs))
        .build()
        .map_err(|e| CliError::Usage(format!("cannot start {jobs} workers: {e}")))?;
    pool.install(|| items.par_iter().map(|s| f(s)).collect::<Vec<_>>()).into_iter().collect()
}

fn load_codebook(path: Option<&Path>) -> CliResult<AffinityCodebook> {
    let path = path.ok_or_else(|| CliError::Usage("--codebook is required for the pixel-affinity method".into()))?;
    io::read_codebook(path).at(path)
}

fn slic_options(a: &SlicArgs) -> SlicOptions {
    SlicOptions {
        target_count: a.superpixels as usize,
        compactness: a.compactness,
        iterations: a.slic_iterations as usize,
        color_space: match a.color_space {
            Colors::Rgb => ColorSpace::Rgb,
            Colors::Lab => ColorSpace::Lab,
        },
    }
}

fn read_instances(path: &Path) -> CliResult<InstanceLabelMap> {
    io::read_instances(path).at(path).map(|(m, _)| m)
}

pub fn transform(a: &TransformArgs, jobs: u16) -> CliResult<()> {
    let (dir, names) = stems(&a.scenes, layout::INSTANCES)?;
    let codebook = match a.method {
        Method::PixelAffinity => Some(load_codebook(a.codebook.as_deref())?),
        _ => None,
    };
    ensure_dir(&a.out)?;
    let size = a.size as usize;
    par_map(jobs, &names, |stem| {
        let inst_path = file(&dir, stem, layout::INSTANCES);
        let inst = read_instances(&inst_path)?;
        let seed = image_seed(a.noise_seed, stem);
        match a.method {
            Method::PixelAffinity => {
                let cb = codebook.as_ref().expect("loaded above");
                let mut cm = encode(&inst.rescale(size, size), cb);
                if a.flip_rate > 0.0 {
                    cm = perturb_class_map(&cm, a.flip_rate, cb.class_count() as u32, seed)?;
                }
                let out = file(&a.out, stem, layout::CLASSES);
                io::write_class_map(&out, &cm).at(&out)
            }
            Method::SpAffinity => {
                let img_path = file(&dir, stem, layout::IMAGE);
                let img = io::read_ppm(&img_path).at(&img_path)?;
                let sp = slic(&img, &slic_options(&a.slic)).at(&img_path)?;
                let mut labels = pair_labels(&sp, &inst, PairUniverse::Hops(a.hops as usize)).at(&inst_path)?;
                if a.flip_rate > 0.0 {
                    labels = perturb_pair_labels(&labels, a.flip_rate, seed)?;
                }
                let sp_out = file(&a.out, stem, layout::SUPERPIXELS);
                io::write_superpixels(&sp_out, &sp).at(&sp_out)?;
                let out = file(&a.out, stem, layout::PAIRS);
                io::write_pairs(&out, &labels).at(&out)
            }
            Method::Boundary => {
                let mut b = instance_boundaries(&inst);
                if a.blur_sigma > 0.0 || a.noise_sigma > 0.0 {
                    b = perturb_boundary(&b, a.blur_sigma, a.noise_sigma, seed)?;
                }
                let out = file(&a.out, stem, layout::BOUNDARY);
                io::write_boundary(&out, &b).at(&out)
            }
        }
    })?;
    Ok(())
}

pub fn reconstruct(a: &ReconstructArgs, jobs: u16) -> CliResult<()> {
    let (dir, names) = stems(&a.semantic, layout::SEMANTIC)?;
    let codebook = match a.method {
        Method::PixelAffinity => Some(load_codebook(a.codebook.as_deref())?),
        _ => None,
    };
    let cut = CutOptions { k_max: a.k_max as usize, tau: a.tau, seed: a.cut_seed };
    ensure_dir(&a.out)?;
    par_map(jobs, &names, |stem| {
        let sem_path = file(&dir, stem, layout::SEMANTIC);
        let sem = io::read_semantic(&sem_path).at(&sem_path)?;
        let result = match a.method {
            Method::PixelAffinity => {
                let path = file(&a.transforms, stem, layout::CLASSES);
                let cm = io::read_class_map(&path).at(&path)?;
                integrate_method1(&sem, &cm, codebook.as_ref().expect("loaded above"), &Method1Options { cut }).at(&path)?
            }
            Method::SpAffinity => {
                let sp_path = file(&a.transforms, stem, layout::SUPERPIXELS);
                let sp = io::read_superpixels(&sp_path).at(&sp_path)?;
                let path = file(&a.transforms, stem, layout::PAIRS);
                let labels = io::read_pairs(&path).at(&path)?;
                integrate_method2(&sem, &sp, &labels, &Method2Options { cut }).at(&path)?
            }
            Method::Boundary => {
                let path = file(&a.transforms, stem, layout::BOUNDARY);
                let mut b = io::read_boundary(&path).at(&path)?;
                if !b.is_binary() {
                    b = nms_thin(&b, a.low_threshold);
                }
                integrate_method3(&sem, &b, &Method3Options { reassign_boundaries: !a.no_reassign }).at(&path)?
            }
        };
        let out = file(&a.out, stem, layout::INSTANCES);
        io::write_result(&out, &result).at(&out)
    })?;
    Ok(())
}

pub fn evaluate_cmd(a: &EvaluateArgs, jobs: u16) -> CliResult<()> {
    let (gt_dir, names) = stems(&a.gt, layout::INSTANCES)?;
    if !a.pred.is_dir() {
        return Err(CliError::File {
            path: a.pred.clone(),
            source: qseg_core::Error::Io(std::io::Error::new(std::io::ErrorKind::NotFound, "not a directory")),
        });
    }
    let pairs = par_map(jobs, &names, |stem| {
        let gt = read_instances(&file(&gt_dir, stem, layout::INSTANCES))?;
        let pred_path = file(&a.pred, stem, layout::INSTANCES);
        let pred = if pred_path.exists() {
            io::read_result(&pred_path).at(&pred_path)?
        } else {
            InstanceSegResult::scored_by_area(InstanceLabelMap::empty(gt.height(), gt.width()))
        };
        Ok((pred, gt))
    })?;
    let (preds, gts): (Vec<_>, Vec<_>) = pairs.into_iter().unzip();
    let report = evaluate(&preds, &gts, &a.ar)?.to_json();
    match &a.out {
        Some(path) => fs::write(path, report).map_err(qseg_core::Error::from).at(path),
        None => {
            print!("{report}");
            Ok(())
        }
    }
}

pub fn synth(a: &SynthArgs, jobs: u16) -> CliResult<()> {
    if a.min_instances > a.max_instances || a.min_size == 0 || a.min_size > a.max_size {
        return Err(CliError::Usage("instance and size ranges must be nonempty".into()));
    }
    ensure_dir(&a.out)?;
    let names: Vec<String> = (0..a.count).map(|i| format!("{}{i:04}", a.prefix)).collect();
    par_map(jobs, &names, |stem| {
        let i: u64 = stem[a.prefix.len()..].parse().expect("formatted above");
        let spec = SceneSpec {
            height: a.height as usize,
            width: a.width as usize,
            class_count: a.classes,
            instances: (a.min_instances, a.max_instances),
            shapes: ShapeMix::default(),
            size: (a.min_size, a.max_size),
            touching_probability: a.touching,
            color_noise: a.color_noise,
            seed: a.seed.wrapping_add(i),
        };
        let scene = gen_scene(&spec)?;
        let img = file(&a.out, stem, layout::IMAGE);
        io::write_ppm(&img, &scene.image).at(&img)?;
        let sem = file(&a.out, stem, layout::SEMANTIC);
        io::write_semantic(&sem, &scene.semantic).at(&sem)?;
        let inst = file(&a.out, stem, layout::INSTANCES);
        io::write_instances(&inst, &scene.instances, None).at(&inst)
    })?;
    Ok(())
}

pub fn codebook(a: &CodebookArgs, jobs: u16) -> CliResult<()> {
    let (dir, names) = stems(&a.train, layout::INSTANCES)?;
    if names.is_empty() {
        return Err(CliError::Usage(format!("no *{} files in {}", layout::INSTANCES, a.train.display())));
    }
    let size = a.size as usize;
    let train = par_map(jobs, &names, |stem| Ok(read_instances(&file(&dir, stem, layout::INSTANCES))?.rescale(size, size)))?;
    let fit = build_codebook(&train, a.patch_size, a.class_count as usize, a.seed)?;
    io::write_codebook(&a.out, &fit.codebook).at(&a.out)?;
    println!(
        "{{\"classes\": {}, \"distinct_patterns\": {}, \"distortion\": {:.6}}}",
        fit.codebook.class_count(),
        fit.distinct_patterns,
        fit.distortion
    );
    Ok(())
}
