//! Browser bindings for a small interactive demo. Every view is returned as
//! RGBA bytes sized `width * height * 4`, ready for `ImageData`.

use qseg_core::boundary::{instance_boundaries, integrate_method3, nms_thin, Method3Options};
use qseg_core::metrics::evaluate;
use qseg_core::superpixel::{integrate_method2, pair_labels, slic, Method2Options, PairUniverse, SlicOptions};
use qseg_core::synth::{gen_scene, perturb_boundary, perturb_pair_labels, Scene, SceneSpec};
use qseg_core::{InstanceLabelMap, InstanceSegResult};
use wasm_bindgen::prelude::*;

const SIZE: usize = 96;

fn js_err(e: qseg_core::Error) -> JsError {
    JsError::new(&e.to_string())
}

/// Golden-ratio hue walk, so neighboring IDs get distant colors.
fn id_color(id: u32) -> [u8; 3] {
    if id == 0 {
        return [24, 24, 28];
    }
    let h = (f64::from(id) * 0.618_033_988_75).fract() * 6.0;
    let x = 1.0 - (h % 2.0 - 1.0).abs();
    let (r, g, b) = match h as u32 {
        0 => (1.0, x, 0.0),
        1 => (x, 1.0, 0.0),
        2 => (0.0, 1.0, x),
        3 => (0.0, x, 1.0),
        4 => (x, 0.0, 1.0),
        _ => (1.0, 0.0, x),
    };
    let c = |v: f64| (60.0 + 180.0 * v) as u8;
    [c(r), c(g), c(b)]
}

fn paint(labels: &[u32]) -> Vec<u8> {
    labels
        .iter()
        .flat_map(|&l| {
            let [r, g, b] = id_color(l);
            [r, g, b, 255]
        })
        .collect()
}

/// A synthetic scene plus the score of the most recent reconstruction.
#[wasm_bindgen]
pub struct Demo {
    scene: Scene,
    last_report: String,
}

#[wasm_bindgen]
impl Demo {
    /// Generates a scene. `touching` is the chance that an instance is
    /// placed against another of its class.
    #[wasm_bindgen(constructor)]
    pub fn new(seed: u64, touching: f64) -> Result<Demo, JsError> {
        let spec = SceneSpec {
            height: SIZE,
            width: SIZE,
            instances: (3, 7),
            size: (16, 34),
            touching_probability: touching,
            seed,
            ..SceneSpec::default()
        };
        Ok(Demo { scene: gen_scene(&spec).map_err(js_err)?, last_report: String::new() })
    }

    pub fn width(&self) -> usize {
        self.scene.image.width()
    }

    pub fn height(&self) -> usize {
        self.scene.image.height()
    }

    pub fn image_rgba(&self) -> Vec<u8> {
        self.scene.image.data().chunks(3).flat_map(|p| [p[0], p[1], p[2], 255]).collect()
    }

    pub fn truth_rgba(&self) -> Vec<u8> {
        paint(self.scene.instances.labels())
    }

    /// The image with superpixel borders drawn in white.
    pub fn superpixels_rgba(&self, count: usize) -> Result<Vec<u8>, JsError> {
        let sp = slic(&self.scene.image, &SlicOptions { target_count: count.max(1), ..SlicOptions::default() })
            .map_err(js_err)?;
        let (h, w) = (self.height(), self.width());
        let ids = sp.ids();
        let mut out = self.image_rgba();
        for y in 0..h {
            for x in 0..w {
                let i = y * w + x;
                let edge = (x + 1 < w && ids[i + 1] != ids[i]) || (y + 1 < h && ids[i + w] != ids[i]);
                if edge {
                    out[i * 4..i * 4 + 3].copy_from_slice(&[255, 255, 255]);
                }
            }
        }
        Ok(out)
    }

    /// Boundary transform with blur and noise, thinned, then reconstructed.
    pub fn boundary_rgba(&mut self, blur_sigma: f64, noise_sigma: f64, seed: u64) -> Result<Vec<u8>, JsError> {
        let mut b = instance_boundaries(&self.scene.instances);
        if blur_sigma > 0.0 || noise_sigma > 0.0 {
            b = nms_thin(&perturb_boundary(&b, blur_sigma, noise_sigma, seed).map_err(js_err)?, 0.1);
        }
        let out = integrate_method3(&self.scene.semantic, &b, &Method3Options::default()).map_err(js_err)?;
        self.finish(out)
    }

    /// Superpixel pair labels with a fraction flipped, then reconstructed.
    pub fn superpixel_rgba(&mut self, count: usize, flip_rate: f64, seed: u64) -> Result<Vec<u8>, JsError> {
        let sp = slic(&self.scene.image, &SlicOptions { target_count: count.max(1), ..SlicOptions::default() })
            .map_err(js_err)?;
        let mut labels = pair_labels(&sp, &self.scene.instances, PairUniverse::default()).map_err(js_err)?;
        if flip_rate > 0.0 {
            labels = perturb_pair_labels(&labels, flip_rate, seed).map_err(js_err)?;
        }
        let out = integrate_method2(&self.scene.semantic, &sp, &labels, &Method2Options::default()).map_err(js_err)?;
        self.finish(out)
    }

    /// Metrics of the last reconstruction as JSON.
    pub fn last_report(&self) -> String {
        self.last_report.clone()
    }
}

impl Demo {
    fn finish(&mut self, out: InstanceSegResult) -> Result<Vec<u8>, JsError> {
        let gts: [InstanceLabelMap; 1] = [self.scene.instances.clone()];
        let rgba = paint(out.map.labels());
        self.last_report = evaluate(&[out], &gts, &[100]).map_err(js_err)?.to_json();
        Ok(rgba)
    }
}
