//! File formats: PGM/PPM rasters, instance sidecars, pair-label text and
//! codebook files.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::boundary::BoundaryMap;
use crate::error::{Error, Result};
use crate::labelmap::{Image, InstanceLabelMap, InstanceSegResult, SemanticLabelMap};
use crate::pixel_affinity::{AffinityCodebook, PatchClassMap};
use crate::superpixel::{SuperpixelAffinityLabels, SuperpixelPartition};

/// A decoded grayscale raster.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Gray {
    pub height: usize,
    pub width: usize,
    pub maxval: u32,
    pub data: Vec<u32>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PnmEncoding {
    Ascii,
    Binary,
}

struct Header<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Header<'a> {
    fn skip_space(&mut self) {
        while self.pos < self.bytes.len() {
            match self.bytes[self.pos] {
                b'#' => {
                    while self.pos < self.bytes.len() && self.bytes[self.pos] != b'\n' {
                        self.pos += 1;
                    }
                }
                c if c.is_ascii_whitespace() => self.pos += 1,
                _ => break,
            }
        }
    }

    fn token(&mut self) -> Result<&'a str> {
        self.skip_space();
        let start = self.pos;
        while self.pos < self.bytes.len() && !self.bytes[self.pos].is_ascii_whitespace() && self.bytes[self.pos] != b'#' {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(Error::format("unexpected end of header"));
        }
        std::str::from_utf8(&self.bytes[start..self.pos]).map_err(|_| Error::format("non-ASCII header"))
    }

    fn number(&mut self, what: &str) -> Result<u32> {
        let t = self.token()?;
        t.parse().map_err(|_| Error::format(format!("bad {what} '{t}'")))
    }
}

fn parse_pnm(bytes: &[u8], ascii_magic: &str, binary_magic: &str, channels: usize) -> Result<Gray> {
    let mut h = Header { bytes, pos: 0 };
    let magic = h.token()?;
    let encoding = if magic == ascii_magic {
        PnmEncoding::Ascii
    } else if magic == binary_magic {
        PnmEncoding::Binary
    } else {
        return Err(Error::format(format!("expected {ascii_magic} or {binary_magic}, found '{magic}'")));
    };
    let width = h.number("width")? as usize;
    let height = h.number("height")? as usize;
    let maxval = h.number("maxval")?;
    if width == 0 || height == 0 {
        return Err(Error::format("zero image dimension"));
    }
    if maxval == 0 || maxval > 65535 {
        return Err(Error::format(format!("maxval {maxval} outside 1..=65535")));
    }
    let count = width
        .checked_mul(height)
        .and_then(|n| n.checked_mul(channels))
        .ok_or_else(|| Error::format("image too large"))?;
    let mut data = Vec::with_capacity(count);
    match encoding {
        PnmEncoding::Ascii => {
            for _ in 0..count {
                data.push(h.number("sample")?);
            }
        }
        PnmEncoding::Binary => {
            // Exactly one whitespace byte separates the header from the raster.
            if h.pos >= bytes.len() || !bytes[h.pos].is_ascii_whitespace() {
                return Err(Error::format("missing raster separator"));
            }
            let raster = &bytes[h.pos + 1..];
            let wide = maxval > 255;
            let need = count * if wide { 2 } else { 1 };
            if raster.len() < need {
                return Err(Error::format(format!("raster truncated: {} of {need} bytes", raster.len())));
            }
            if wide {
                data.extend(raster[..need].chunks_exact(2).map(|c| u32::from(u16::from_be_bytes([c[0], c[1]]))));
            } else {
                data.extend(raster[..need].iter().map(|&b| u32::from(b)));
            }
        }
    }
    if let Some(&v) = data.iter().find(|&&v| v > maxval) {
        return Err(Error::format(format!("sample {v} exceeds maxval {maxval}")));
    }
    Ok(Gray { height, width, maxval, data })
}

fn encode_pnm(magic_ascii: &str, magic_binary: &str, g: &Gray, channels: usize, enc: PnmEncoding) -> Vec<u8> {
    let mut out = Vec::new();
    let magic = if enc == PnmEncoding::Ascii { magic_ascii } else { magic_binary };
    out.extend_from_slice(format!("{magic}\n{} {}\n{}\n", g.width, g.height, g.maxval).as_bytes());
    match enc {
        PnmEncoding::Ascii => {
            for row in g.data.chunks(g.width * channels) {
                let line: Vec<String> = row.iter().map(u32::to_string).collect();
                out.extend_from_slice(line.join(" ").as_bytes());
                out.push(b'\n');
            }
        }
        PnmEncoding::Binary => {
            if g.maxval > 255 {
                for &v in &g.data {
                    out.extend_from_slice(&(v as u16).to_be_bytes());
                }
            } else {
                out.extend(g.data.iter().map(|&v| v as u8));
            }
        }
    }
    out
}

pub fn parse_pgm(bytes: &[u8]) -> Result<Gray> {
    parse_pnm(bytes, "P2", "P5", 1)
}

/// Serializes a grayscale raster. Samples must not exceed `maxval`.
pub fn encode_pgm(g: &Gray, enc: PnmEncoding) -> Result<Vec<u8>> {
    if g.maxval == 0 || g.maxval > 65535 || g.data.len() != g.height * g.width {
        return Err(Error::invalid("inconsistent PGM raster"));
    }
    if g.data.iter().any(|&v| v > g.maxval) {
        return Err(Error::invalid(format!("sample exceeds maxval {}", g.maxval)));
    }
    Ok(encode_pnm("P2", "P5", g, 1, enc))
}

pub fn read_pgm(path: &Path) -> Result<Gray> {
    parse_pgm(&fs::read(path)?).map_err(|e| with_path(e, path))
}

pub fn write_pgm(path: &Path, g: &Gray, enc: PnmEncoding) -> Result<()> {
    write_file(path, &encode_pgm(g, enc)?)
}

fn with_path(e: Error, path: &Path) -> Error {
    match e {
        Error::Format(m) => Error::Format(format!("{}: {m}", path.display())),
        other => other,
    }
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    let mut f = fs::File::create(path)?;
    f.write_all(bytes)?;
    Ok(())
}

/// Smallest conventional maxval (255 or 65535) that holds `max`.
fn label_maxval(max: u32) -> Result<u32> {
    match max {
        0..=255 => Ok(255),
        256..=65535 => Ok(65535),
        _ => Err(Error::invalid(format!("label {max} does not fit in 16 bits"))),
    }
}

fn labels_to_gray(height: usize, width: usize, labels: &[u32]) -> Result<Gray> {
    let maxval = label_maxval(labels.iter().copied().max().unwrap_or(0))?;
    Ok(Gray { height, width, maxval, data: labels.to_vec() })
}

pub fn parse_ppm(bytes: &[u8]) -> Result<Image> {
    let g = parse_pnm(bytes, "P3", "P6", 3)?;
    let data = if g.maxval == 255 {
        g.data.iter().map(|&v| v as u8).collect()
    } else {
        g.data
            .iter()
            .map(|&v| ((f64::from(v) * 255.0 / f64::from(g.maxval)).round()) as u8)
            .collect()
    };
    Image::new(g.height, g.width, data)
}

pub fn encode_ppm(img: &Image, enc: PnmEncoding) -> Vec<u8> {
    let g = Gray {
        height: img.height(),
        width: img.width(),
        maxval: 255,
        data: img.data().iter().map(|&b| u32::from(b)).collect(),
    };
    encode_pnm("P3", "P6", &g, 3, enc)
}

pub fn read_ppm(path: &Path) -> Result<Image> {
    parse_ppm(&fs::read(path)?).map_err(|e| with_path(e, path))
}

pub fn write_ppm(path: &Path, img: &Image) -> Result<()> {
    write_file(path, &encode_ppm(img, PnmEncoding::Binary))
}

pub fn read_semantic(path: &Path) -> Result<SemanticLabelMap> {
    let g = read_pgm(path)?;
    SemanticLabelMap::new(g.height, g.width, g.data)
}

pub fn write_semantic(path: &Path, sem: &SemanticLabelMap) -> Result<()> {
    write_pgm(path, &labels_to_gray(sem.height(), sem.width(), sem.labels())?, PnmEncoding::Binary)
}

/// JSON sidecar stored next to an instance map.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Sidecar {
    pub class_of: BTreeMap<String, u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scores: Option<BTreeMap<String, f64>>,
}

/// Sidecar path for an instance map: `x.pgm` → `x.json`.
pub fn sidecar_path(pgm: &Path) -> std::path::PathBuf {
    pgm.with_extension("json")
}

fn parse_id(key: &str) -> Result<u32> {
    key.parse().map_err(|_| Error::format(format!("bad instance id '{key}' in sidecar")))
}

pub fn parse_sidecar(text: &str) -> Result<(BTreeMap<u32, u32>, Option<BTreeMap<u32, f64>>)> {
    let s: Sidecar = serde_json::from_str(text)?;
    let class_of = s
        .class_of
        .iter()
        .map(|(k, &v)| Ok((parse_id(k)?, v)))
        .collect::<Result<_>>()?;
    let scores = s
        .scores
        .map(|m| m.iter().map(|(k, &v)| Ok((parse_id(k)?, v))).collect::<Result<_>>())
        .transpose()?;
    Ok((class_of, scores))
}

pub fn encode_sidecar(class_of: &BTreeMap<u32, u32>, scores: Option<&BTreeMap<u32, f64>>) -> String {
    let s = Sidecar {
        class_of: class_of.iter().map(|(k, &v)| (k.to_string(), v)).collect(),
        scores: scores.map(|m| m.iter().map(|(k, &v)| (k.to_string(), v)).collect()),
    };
    let mut text = serde_json::to_string_pretty(&s).expect("sidecar serializes");
    text.push('\n');
    text
}

/// Reads an instance map and its optional scores. When the sidecar is
/// missing, every ID gets class 1.
pub fn read_instances(path: &Path) -> Result<(InstanceLabelMap, Option<BTreeMap<u32, f64>>)> {
    let g = read_pgm(path)?;
    let side = sidecar_path(path);
    let (class_of, scores) = if side.exists() {
        parse_sidecar(&fs::read_to_string(&side)?).map_err(|e| with_path(e, &side))?
    } else {
        let ids = g.data.iter().copied().filter(|&l| l != 0).map(|l| (l, 1)).collect();
        (ids, None)
    };
    let map = InstanceLabelMap::new(g.height, g.width, g.data, class_of).map_err(|e| with_path(e, path))?;
    Ok((map, scores))
}

/// Reads an instance map as a scored result; missing scores default to area.
pub fn read_result(path: &Path) -> Result<InstanceSegResult> {
    let (map, scores) = read_instances(path)?;
    match scores {
        Some(s) => InstanceSegResult::new(map, s),
        None => Ok(InstanceSegResult::scored_by_area(map)),
    }
}

pub fn write_instances(path: &Path, map: &InstanceLabelMap, scores: Option<&BTreeMap<u32, f64>>) -> Result<()> {
    write_pgm(path, &labels_to_gray(map.height(), map.width(), map.labels())?, PnmEncoding::Binary)?;
    write_file(&sidecar_path(path), encode_sidecar(map.class_of(), scores).as_bytes())
}

pub fn write_result(path: &Path, r: &InstanceSegResult) -> Result<()> {
    write_instances(path, &r.map, Some(&r.scores))
}

/// Soft maps use maxval 255 (`round(255 v)`); binary maps use maxval 1.
pub fn boundary_to_gray(b: &BoundaryMap) -> Gray {
    let (maxval, data) = if b.is_binary() {
        (1, b.values().iter().map(|&v| v as u32).collect())
    } else {
        (255, b.values().iter().map(|&v| (v * 255.0).round() as u32).collect())
    };
    Gray { height: b.height(), width: b.width(), maxval, data }
}

pub fn gray_to_boundary(g: &Gray) -> Result<BoundaryMap> {
    let m = f64::from(g.maxval);
    BoundaryMap::new(g.height, g.width, g.data.iter().map(|&v| f64::from(v) / m).collect())
}

pub fn read_boundary(path: &Path) -> Result<BoundaryMap> {
    gray_to_boundary(&read_pgm(path)?)
}

pub fn write_boundary(path: &Path, b: &BoundaryMap) -> Result<()> {
    write_pgm(path, &boundary_to_gray(b), PnmEncoding::Binary)
}

pub fn read_class_map(path: &Path) -> Result<PatchClassMap> {
    let g = read_pgm(path)?;
    PatchClassMap::new(g.height, g.width, g.data)
}

pub fn write_class_map(path: &Path, cm: &PatchClassMap) -> Result<()> {
    write_pgm(path, &labels_to_gray(cm.height(), cm.width(), cm.classes())?, PnmEncoding::Binary)
}

pub fn read_superpixels(path: &Path) -> Result<SuperpixelPartition> {
    let g = read_pgm(path)?;
    SuperpixelPartition::from_ids(g.height, g.width, g.data)
}

pub fn write_superpixels(path: &Path, sp: &SuperpixelPartition) -> Result<()> {
    write_pgm(path, &labels_to_gray(sp.height(), sp.width(), sp.ids())?, PnmEncoding::Binary)
}

/// `i j w` per line with `i < j`, sorted; `#` starts a comment.
pub fn parse_pairs(text: &str) -> Result<SuperpixelAffinityLabels> {
    let mut labels = SuperpixelAffinityLabels::default();
    for (n, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        let bad = || Error::format(format!("line {}: expected 'i j w', found '{line}'", n + 1));
        if fields.len() != 3 {
            return Err(bad());
        }
        let i: u32 = fields[0].parse().map_err(|_| bad())?;
        let j: u32 = fields[1].parse().map_err(|_| bad())?;
        let w: f64 = fields[2].parse().map_err(|_| bad())?;
        labels
            .insert(i, j, w)
            .map_err(|e| Error::format(format!("line {}: {e}", n + 1)))?;
    }
    Ok(labels)
}

pub fn encode_pairs(labels: &SuperpixelAffinityLabels) -> String {
    let mut out = String::new();
    for (&(i, j), &w) in &labels.pairs {
        out.push_str(&format!("{i} {j} {w}\n"));
    }
    out
}

pub fn read_pairs(path: &Path) -> Result<SuperpixelAffinityLabels> {
    parse_pairs(&fs::read_to_string(path)?).map_err(|e| with_path(e, path))
}

pub fn write_pairs(path: &Path, labels: &SuperpixelAffinityLabels) -> Result<()> {
    write_file(path, encode_pairs(labels).as_bytes())
}

pub fn read_codebook(path: &Path) -> Result<AffinityCodebook> {
    AffinityCodebook::from_bytes(&fs::read(path)?).map_err(|e| with_path(e, path))
}

pub fn write_codebook(path: &Path, cb: &AffinityCodebook) -> Result<()> {
    write_file(path, &cb.to_bytes())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pgm_ascii_with_comments() {
        let g = parse_pgm(b"P2\n# c\n3 2 # dims\n9\n0 1 2\n3 4 9\n").unwrap();
        assert_eq!((g.height, g.width, g.maxval), (2, 3, 9));
        assert_eq!(g.data, vec![0, 1, 2, 3, 4, 9]);
    }

    #[test]
    fn pgm_round_trips_8_and_16_bit() {
        for (maxval, data) in [(255, vec![0, 7, 255, 1]), (65535, vec![0, 300, 65535, 256])] {
            let g = Gray { height: 2, width: 2, maxval, data };
            for enc in [PnmEncoding::Ascii, PnmEncoding::Binary] {
                assert_eq!(parse_pgm(&encode_pgm(&g, enc).unwrap()).unwrap(), g);
            }
        }
        let wide = encode_pgm(&Gray { height: 1, width: 1, maxval: 65535, data: vec![258] }, PnmEncoding::Binary).unwrap();
        assert_eq!(&wide[wide.len() - 2..], &[1, 2]);
    }

    #[test]
    fn pgm_rejects_bad_input() {
        assert!(parse_pgm(b"P6\n1 1\n255\n\0\0\0").is_err());
        assert!(parse_pgm(b"P5\n2 2\n255\n\0").is_err());
        assert!(parse_pgm(b"P2\n1 1\n3\n4\n").is_err());
        assert!(parse_pgm(b"P2\n1 1\n70000\n4\n").is_err());
        assert!(parse_pgm(b"P2\n0 1\n3\n").is_err());
        assert!(parse_pgm(b"").is_err());
    }

    #[test]
    fn ppm_round_trip_and_rescale() {
        let mut img = Image::filled(2, 3, [1, 2, 3]);
        img.set_pixel(1, 2, [255, 0, 9]);
        for enc in [PnmEncoding::Ascii, PnmEncoding::Binary] {
            assert_eq!(parse_ppm(&encode_ppm(&img, enc)).unwrap(), img);
        }
        let img = parse_ppm(b"P3 1 1 1023 1023 0 512").unwrap();
        assert_eq!(img.pixel(0, 0), [255, 0, 128]);
    }

    #[test]
    fn sidecar_round_trip() {
        let class_of = BTreeMap::from([(1, 3), (12, 1)]);
        let scores = BTreeMap::from([(1, 5.0), (12, 0.25)]);
        let text = encode_sidecar(&class_of, Some(&scores));
        assert_eq!(parse_sidecar(&text).unwrap(), (class_of.clone(), Some(scores)));
        let (c, s) = parse_sidecar(r#"{"class_of": {"4": 2}}"#).unwrap();
        assert_eq!(c, BTreeMap::from([(4, 2)]));
        assert!(s.is_none());
        assert!(parse_sidecar(r#"{"class_of": {"x": 2}}"#).is_err());
    }

    #[test]
    fn pairs_text() {
        let l = parse_pairs("# header\n3 1 1\n0 2 0.5\n\n").unwrap();
        assert_eq!(l.get(1, 3), Some(1.0));
        assert_eq!(encode_pairs(&l), "0 2 0.5\n1 3 1\n");
        assert!(parse_pairs("1 1 1\n").is_err());
        assert!(parse_pairs("1 2\n").is_err());
        assert!(parse_pairs("1 2 1.5\n").is_err());
        assert_eq!(encode_pairs(&SuperpixelAffinityLabels::default()), "");
    }

    #[test]
    fn boundary_quantization() {
        let soft = BoundaryMap::new(1, 3, vec![0.0, 0.5, 1.0]).unwrap();
        let g = boundary_to_gray(&soft);
        assert_eq!((g.maxval, g.data.clone()), (255, vec![0, 128, 255]));
        let bin = BoundaryMap::new(1, 2, vec![0.0, 1.0]).unwrap();
        let g = boundary_to_gray(&bin);
        assert_eq!((g.maxval, g.data.clone()), (1, vec![0, 1]));
        assert_eq!(gray_to_boundary(&g).unwrap(), bin);
    }

    #[test]
    fn instance_files_round_trip() {
        let dir = std::env::temp_dir().join(format!("qseg-io-{}", std::process::id()));
        fs::create_dir_all(&dir).unwrap();
        let path = dir.join("inst.pgm");
        let map = InstanceLabelMap::new(1, 3, vec![0, 300, 2], BTreeMap::from([(2, 1), (300, 4)])).unwrap();
        let r = InstanceSegResult::scored_by_area(map.clone());
        write_result(&path, &r).unwrap();
        assert_eq!(read_result(&path).unwrap(), r);
        fs::remove_file(sidecar_path(&path)).unwrap();
        let (plain, scores) = read_instances(&path).unwrap();
        assert!(scores.is_none());
        assert_eq!(plain.class_of_id(300), Some(1));
        fs::remove_dir_all(&dir).unwrap();
    }
}
