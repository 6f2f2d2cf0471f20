//! Dataset loading (IDX, CIFAR-10 binary, PGM directories, canonical dump),
//! channel derivation and seeded stratified few-shot subsampling.

use crate::error::{EdlgpError, Result};
use crate::image::ImagePlane;
use crate::rng::StreamId;
use crate::types::Channel;
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};
use std::fs;
use std::io::{Read, Write};
use std::path::Path;
use std::sync::atomic::{AtomicU64, Ordering};

static NEXT_UID: AtomicU64 = AtomicU64::new(1);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Split {
    Train,
    Test,
}

/// Shape contract a fitted model checks before predicting.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetSignature {
    pub width: usize,
    pub height: usize,
    pub channels: usize,
    pub num_classes: usize,
}

/// One image instance: 1 (gray) or 3 (RGB) planes of equal size.
#[derive(Clone, Debug)]
pub struct Instance {
    pub channels: Vec<ImagePlane>,
}

#[derive(Clone, Debug)]
pub struct Dataset {
    pub name: String,
    pub split: Split,
    pub instances: Vec<Instance>,
    pub labels: Vec<usize>,
    pub signature: DatasetSignature,
    uid: u64,
}

fn data_err(msg: impl Into<String>) -> EdlgpError {
    EdlgpError::Data(msg.into())
}

impl Dataset {
    pub fn new(
        name: impl Into<String>,
        split: Split,
        instances: Vec<Instance>,
        labels: Vec<usize>,
        num_classes: Option<usize>,
    ) -> Result<Dataset> {
        if instances.is_empty() {
            return Err(data_err("dataset has no instances"));
        }
        if instances.len() != labels.len() {
            return Err(data_err(format!(
                "{} instances but {} labels",
                instances.len(),
                labels.len()
            )));
        }
        let channels = instances[0].channels.len();
        if channels != 1 && channels != 3 {
            return Err(data_err(format!("instances must have 1 or 3 channels, got {channels}")));
        }
        let (width, height) = (instances[0].channels[0].width, instances[0].channels[0].height);
        for (i, inst) in instances.iter().enumerate() {
            if inst.channels.len() != channels {
                return Err(data_err(format!("instance {i} has a different channel count")));
            }
            for plane in &inst.channels {
                if plane.width != width || plane.height != height {
                    return Err(data_err(format!(
                        "instance {i} is {}x{}, expected {}x{}",
                        plane.width, plane.height, width, height
                    )));
                }
                if plane.data.iter().any(|&v| !(0.0..=1.0).contains(&v)) {
                    return Err(data_err(format!("instance {i} has values outside [0, 1]")));
                }
            }
        }
        let max_label = labels.iter().copied().max().unwrap();
        let num_classes = num_classes.unwrap_or(max_label + 1);
        if max_label >= num_classes {
            return Err(data_err(format!("label {max_label} outside [0, {num_classes})")));
        }
        Ok(Dataset {
            name: name.into(),
            split,
            instances,
            labels,
            signature: DatasetSignature { width, height, channels, num_classes },
            uid: NEXT_UID.fetch_add(1, Ordering::Relaxed),
        })
    }

    pub fn len(&self) -> usize {
        self.instances.len()
    }

    pub fn is_empty(&self) -> bool {
        self.instances.is_empty()
    }

    /// Identity for caching; unique per loaded dataset object.
    pub fn uid(&self) -> u64 {
        self.uid
    }

    /// Extract a channel plane; `Gray` is derived for colour instances.
    pub fn channel_plane(&self, index: usize, channel: Channel) -> Result<ImagePlane> {
        let inst = &self.instances[index];
        match (channel, inst.channels.len()) {
            (Channel::Gray, _) => Ok(to_gray(inst)),
            (Channel::Red, 3) => Ok(inst.channels[0].clone()),
            (Channel::Green, 3) => Ok(inst.channels[1].clone()),
            (Channel::Blue, 3) => Ok(inst.channels[2].clone()),
            (c, n) => Err(data_err(format!(
                "channel {} unavailable on a {n}-channel dataset",
                c.name()
            ))),
        }
    }

    /// Per-class instance counts over a row subset.
    pub fn class_counts(&self, rows: &[usize]) -> Vec<usize> {
        let mut counts = vec![0usize; self.signature.num_classes];
        for &r in rows {
            counts[self.labels[r]] += 1;
        }
        counts
    }
}

/// Luminance gray-scale: single-channel instances pass through.
pub fn to_gray(inst: &Instance) -> ImagePlane {
    match inst.channels.len() {
        1 => inst.channels[0].clone(),
        3 => {
            let (r, g, b) = (&inst.channels[0], &inst.channels[1], &inst.channels[2]);
            let data = r
                .data
                .iter()
                .zip(g.data.iter())
                .zip(b.data.iter())
                .map(|((&r, &g), &b)| 0.299 * r + 0.587 * g + 0.114 * b)
                .collect();
            ImagePlane::new(r.width, r.height, data)
        }
        n => panic!("invalid channel count {n}"),
    }
}

fn read_u32_be(bytes: &[u8], offset: usize, path: &Path) -> Result<u32> {
    let end = offset + 4;
    if bytes.len() < end {
        return Err(data_err(format!(
            "{}: truncated at byte offset {offset} (need 4 bytes, have {})",
            path.display(),
            bytes.len().saturating_sub(offset)
        )));
    }
    Ok(u32::from_be_bytes(bytes[offset..end].try_into().unwrap()))
}

const IDX_IMAGES_MAGIC: u32 = 0x0000_0803;
const IDX_LABELS_MAGIC: u32 = 0x0000_0801;

/// Load an IDX image/label file pair (the MNIST family layout): big-endian
/// headers, unsigned pixel bytes scaled by 1/255.
pub fn load_idx(images_path: &Path, labels_path: &Path, split: Split, name: &str) -> Result<Dataset> {
    let ibytes = fs::read(images_path)
        .map_err(|e| data_err(format!("{}: {e}", images_path.display())))?;
    let lbytes = fs::read(labels_path)
        .map_err(|e| data_err(format!("{}: {e}", labels_path.display())))?;

    let magic = read_u32_be(&ibytes, 0, images_path)?;
    if magic != IDX_IMAGES_MAGIC {
        return Err(data_err(format!(
            "{}: bad image magic {magic:#010x} at offset 0, expected {IDX_IMAGES_MAGIC:#010x}",
            images_path.display()
        )));
    }
    let count = read_u32_be(&ibytes, 4, images_path)? as usize;
    let height = read_u32_be(&ibytes, 8, images_path)? as usize;
    let width = read_u32_be(&ibytes, 12, images_path)? as usize;
    let need = 16 + count * width * height;
    if ibytes.len() < need {
        return Err(data_err(format!(
            "{}: truncated at byte offset {} (header promises {} bytes)",
            images_path.display(),
            ibytes.len(),
            need
        )));
    }

    let lmagic = read_u32_be(&lbytes, 0, labels_path)?;
    if lmagic != IDX_LABELS_MAGIC {
        return Err(data_err(format!(
            "{}: bad label magic {lmagic:#010x} at offset 0, expected {IDX_LABELS_MAGIC:#010x}",
            labels_path.display()
        )));
    }
    let lcount = read_u32_be(&lbytes, 4, labels_path)? as usize;
    if lcount != count {
        return Err(data_err(format!(
            "{} has {count} images but {} has {lcount} labels",
            images_path.display(),
            labels_path.display()
        )));
    }
    if lbytes.len() < 8 + count {
        return Err(data_err(format!(
            "{}: truncated at byte offset {}",
            labels_path.display(),
            lbytes.len()
        )));
    }

    let mut instances = Vec::with_capacity(count);
    let px = width * height;
    for i in 0..count {
        let start = 16 + i * px;
        let data = ibytes[start..start + px].iter().map(|&b| f64::from(b) / 255.0).collect();
        instances.push(Instance { channels: vec![ImagePlane::new(width, height, data)] });
    }
    let labels = lbytes[8..8 + count].iter().map(|&b| b as usize).collect();
    Dataset::new(name, split, instances, labels, None)
}

const CIFAR_RECORD: usize = 3073;
const CIFAR_SIDE: usize = 32;

/// Load CIFAR-10-style binary batches: per record one label byte then three
/// 1024-byte channel planes (R, G, B), 32x32.
pub fn load_cifar_binary(paths: &[&Path], split: Split, name: &str) -> Result<Dataset> {
    if paths.is_empty() {
        return Err(data_err("no CIFAR batch files given"));
    }
    let mut instances = Vec::new();
    let mut labels = Vec::new();
    for path in paths {
        let bytes = fs::read(path).map_err(|e| data_err(format!("{}: {e}", path.display())))?;
        if bytes.is_empty() || bytes.len() % CIFAR_RECORD != 0 {
            return Err(data_err(format!(
                "{}: size {} is not a positive multiple of {CIFAR_RECORD}",
                path.display(),
                bytes.len()
            )));
        }
        for rec in bytes.chunks_exact(CIFAR_RECORD) {
            labels.push(rec[0] as usize);
            let mut channels = Vec::with_capacity(3);
            for c in 0..3 {
                let start = 1 + c * CIFAR_SIDE * CIFAR_SIDE;
                let data = rec[start..start + CIFAR_SIDE * CIFAR_SIDE]
                    .iter()
                    .map(|&b| f64::from(b) / 255.0)
                    .collect();
                channels.push(ImagePlane::new(CIFAR_SIDE, CIFAR_SIDE, data));
            }
            instances.push(Instance { channels });
        }
    }
    Dataset::new(name, split, instances, labels, None)
}

/// Load a directory of PGM images through a manifest file with
/// `relative_path,label` lines. Paths resolve against the manifest's
/// directory.
pub fn load_pgm_manifest(manifest: &Path, split: Split, name: &str) -> Result<Dataset> {
    let base = manifest.parent().unwrap_or_else(|| Path::new("."));
    let text = fs::read_to_string(manifest)
        .map_err(|e| data_err(format!("{}: {e}", manifest.display())))?;
    let mut instances = Vec::new();
    let mut labels = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (rel, label) = line.rsplit_once(',').ok_or_else(|| {
            data_err(format!("{}:{}: expected `path,label`", manifest.display(), lineno + 1))
        })?;
        let label: usize = label.trim().parse().map_err(|_| {
            data_err(format!("{}:{}: bad label `{label}`", manifest.display(), lineno + 1))
        })?;
        let img = load_pgm(&base.join(rel.trim()))?;
        instances.push(Instance { channels: vec![img] });
        labels.push(label);
    }
    Dataset::new(name, split, instances, labels, None)
}

/// Load a single PGM image (P2 ascii or P5 binary, maxval <= 255), scaled
/// to [0, 1].
pub fn load_pgm(path: &Path) -> Result<ImagePlane> {
    let bytes = fs::read(path).map_err(|e| data_err(format!("{}: {e}", path.display())))?;
    let mut pos = 0usize;
    let mut next_token = |bytes: &[u8]| -> Result<(usize, String)> {
        loop {
            while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
                pos += 1;
            }
            if pos < bytes.len() && bytes[pos] == b'#' {
                while pos < bytes.len() && bytes[pos] != b'\n' {
                    pos += 1;
                }
                continue;
            }
            break;
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if start == pos {
            return Err(data_err(format!("{}: truncated header at offset {start}", path.display())));
        }
        Ok((start, String::from_utf8_lossy(&bytes[start..pos]).into_owned()))
    };

    let (_, magic) = next_token(&bytes)?;
    if magic != "P2" && magic != "P5" {
        return Err(data_err(format!("{}: not a PGM file (magic {magic})", path.display())));
    }
    let (_, w) = next_token(&bytes)?;
    let (_, h) = next_token(&bytes)?;
    let (_, maxval) = next_token(&bytes)?;
    let width: usize = w.parse().map_err(|_| data_err(format!("{}: bad width", path.display())))?;
    let height: usize =
        h.parse().map_err(|_| data_err(format!("{}: bad height", path.display())))?;
    let maxval: usize =
        maxval.parse().map_err(|_| data_err(format!("{}: bad maxval", path.display())))?;
    if maxval == 0 || maxval > 255 {
        return Err(data_err(format!("{}: unsupported maxval {maxval}", path.display())));
    }
    let n = width * height;
    let data: Vec<f64> = if magic == "P5" {
        let start = pos + 1; // single whitespace byte after maxval
        if bytes.len() < start + n {
            return Err(data_err(format!(
                "{}: truncated pixel data at offset {}",
                path.display(),
                bytes.len()
            )));
        }
        bytes[start..start + n].iter().map(|&b| f64::from(b) / maxval as f64).collect()
    } else {
        let mut vals = Vec::with_capacity(n);
        for _ in 0..n {
            let (at, tok) = next_token(&bytes)?;
            let v: usize = tok
                .parse()
                .map_err(|_| data_err(format!("{}: bad pixel at offset {at}", path.display())))?;
            vals.push(v as f64 / maxval as f64);
        }
        vals
    };
    Ok(ImagePlane::new(width, height, data))
}

/// Canonical internal dump: an ASCII header line `W H C classes count`,
/// then per instance a little-endian u32 label followed by C*H*W
/// little-endian f32 pixels (channel-major, row-major within a channel).
pub fn write_canonical_dump(ds: &Dataset, path: &Path) -> Result<()> {
    let sig = ds.signature;
    let mut f = fs::File::create(path)?;
    writeln!(f, "{} {} {} {} {}", sig.width, sig.height, sig.channels, sig.num_classes, ds.len())?;
    for (inst, &label) in ds.instances.iter().zip(ds.labels.iter()) {
        f.write_all(&(label as u32).to_le_bytes())?;
        for plane in &inst.channels {
            for &v in &plane.data {
                f.write_all(&(v as f32).to_le_bytes())?;
            }
        }
    }
    Ok(())
}

pub fn load_canonical_dump(path: &Path, split: Split, name: &str) -> Result<Dataset> {
    let mut file = fs::File::open(path).map_err(|e| data_err(format!("{}: {e}", path.display())))?;
    let mut bytes = Vec::new();
    file.read_to_end(&mut bytes)?;
    let header_end = bytes
        .iter()
        .position(|&b| b == b'\n')
        .ok_or_else(|| data_err(format!("{}: missing header line", path.display())))?;
    let header = String::from_utf8_lossy(&bytes[..header_end]);
    let fields: Vec<usize> = header
        .split_whitespace()
        .map(|t| t.parse::<usize>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| data_err(format!("{}: bad header `{header}`", path.display())))?;
    let [width, height, channels, num_classes, count] = fields[..] else {
        return Err(data_err(format!(
            "{}: header needs 5 fields, got {}",
            path.display(),
            fields.len()
        )));
    };
    let px = width * height;
    let rec = 4 + channels * px * 4;
    let mut at = header_end + 1;
    let mut instances = Vec::with_capacity(count);
    let mut labels = Vec::with_capacity(count);
    for i in 0..count {
        if bytes.len() < at + rec {
            return Err(data_err(format!(
                "{}: truncated at byte offset {} reading instance {i}",
                path.display(),
                bytes.len()
            )));
        }
        let label = u32::from_le_bytes(bytes[at..at + 4].try_into().unwrap()) as usize;
        at += 4;
        let mut chans = Vec::with_capacity(channels);
        for _ in 0..channels {
            let mut data = Vec::with_capacity(px);
            for _ in 0..px {
                data.push(f64::from(f32::from_le_bytes(bytes[at..at + 4].try_into().unwrap())));
                at += 4;
            }
            chans.push(ImagePlane::new(width, height, data));
        }
        instances.push(Instance { channels: chans });
        labels.push(label);
    }
    Dataset::new(name, split, instances, labels, Some(num_classes))
}

/// Draw exactly `per_class` instances of every class by seeded shuffle
/// within each class; the selection keeps the original instance order.
pub fn stratified_subsample(ds: &Dataset, per_class: usize, stream: StreamId) -> Result<Dataset> {
    let mut by_class: Vec<Vec<usize>> = vec![Vec::new(); ds.signature.num_classes];
    for (i, &l) in ds.labels.iter().enumerate() {
        by_class[l].push(i);
    }
    let mut chosen = Vec::with_capacity(per_class * ds.signature.num_classes);
    for (class, mut idx) in by_class.into_iter().enumerate() {
        if idx.len() < per_class {
            return Err(data_err(format!(
                "class {class} has {} instances, need {per_class}",
                idx.len()
            )));
        }
        let mut rng = stream.child_u64(class as u64).rng();
        idx.shuffle(&mut rng);
        chosen.extend_from_slice(&idx[..per_class]);
    }
    chosen.sort_unstable();
    let instances = chosen.iter().map(|&i| ds.instances[i].clone()).collect();
    let labels = chosen.iter().map(|&i| ds.labels[i]).collect();
    Dataset::new(ds.name.clone(), ds.split, instances, labels, Some(ds.signature.num_classes))
}

#[cfg(test)]
mod tests {
    use super::*;
    use tempfile::tempdir;

    fn gray_instance(w: usize, h: usize, v: f64) -> Instance {
        Instance { channels: vec![ImagePlane::constant(w, h, v)] }
    }

    /// Deterministic synthetic gray dataset with `per_class` instances of
    /// each class, pixel values derived from the instance index.
    fn synthetic_gray(classes: usize, per_class: usize, w: usize, h: usize) -> Dataset {
        let mut instances = Vec::new();
        let mut labels = Vec::new();
        for c in 0..classes {
            for i in 0..per_class {
                let v = (c * per_class + i) as f64 / (classes * per_class) as f64;
                instances.push(gray_instance(w, h, v));
                labels.push(c);
            }
        }
        Dataset::new("synthetic", Split::Train, instances, labels, Some(classes)).unwrap()
    }

    #[test]
    fn to_gray_weights() {
        let red = Instance {
            channels: vec![
                ImagePlane::constant(2, 2, 1.0),
                ImagePlane::constant(2, 2, 0.0),
                ImagePlane::constant(2, 2, 0.0),
            ],
        };
        let g = to_gray(&red);
        assert!(g.data.iter().all(|&v| (v - 0.299).abs() < 1e-12));
        let gray = gray_instance(2, 2, 0.42);
        assert_eq!(to_gray(&gray).data, gray.channels[0].data);
        assert!(g.data.iter().all(|&v| (0.0..=1.0).contains(&v)));
    }

    fn write_idx_pair(
        dir: &Path,
        count: usize,
        w: usize,
        h: usize,
    ) -> (std::path::PathBuf, std::path::PathBuf) {
        let mut img = Vec::new();
        img.extend_from_slice(&0x0000_0803u32.to_be_bytes());
        img.extend_from_slice(&(count as u32).to_be_bytes());
        img.extend_from_slice(&(h as u32).to_be_bytes());
        img.extend_from_slice(&(w as u32).to_be_bytes());
        for i in 0..count * w * h {
            img.push((i % 256) as u8);
        }
        let mut lab = Vec::new();
        lab.extend_from_slice(&0x0000_0801u32.to_be_bytes());
        lab.extend_from_slice(&(count as u32).to_be_bytes());
        for i in 0..count {
            lab.push((i % 10) as u8);
        }
        let ip = dir.join("images-idx3-ubyte");
        let lp = dir.join("labels-idx1-ubyte");
        fs::write(&ip, &img).unwrap();
        fs::write(&lp, &lab).unwrap();
        (ip, lp)
    }

    #[test]
    fn idx_round_trip_and_corner_pixels() {
        let dir = tempdir().unwrap();
        let (ip, lp) = write_idx_pair(dir.path(), 20, 5, 4);
        let ds = load_idx(&ip, &lp, Split::Train, "t").unwrap();
        assert_eq!(ds.len(), 20);
        assert_eq!(
            ds.signature,
            DatasetSignature { width: 5, height: 4, channels: 1, num_classes: 10 }
        );
        // Byte-level oracle: instance 1, pixel (0,0) is byte 16 + 20.
        let raw = fs::read(&ip).unwrap();
        let expect = f64::from(raw[16 + 20]) / 255.0;
        assert_eq!(ds.instances[1].channels[0].get(0, 0), expect);
        // Last pixel of the last instance.
        let expect = f64::from(*raw.last().unwrap()) / 255.0;
        assert_eq!(ds.instances[19].channels[0].get(4, 3), expect);
        assert!(ds.labels.iter().all(|&l| l < 10));
    }

    #[test]
    fn idx_error_paths() {
        let dir = tempdir().unwrap();
        let (ip, lp) = write_idx_pair(dir.path(), 4, 3, 3);
        // Bad magic.
        let mut bad = fs::read(&ip).unwrap();
        bad[3] = 0x99;
        let bp = dir.path().join("bad");
        fs::write(&bp, &bad).unwrap();
        let err = load_idx(&bp, &lp, Split::Train, "t").unwrap_err().to_string();
        assert!(err.contains("magic") && err.contains("offset 0"), "{err}");
        // Truncated images.
        let trunc = &fs::read(&ip).unwrap()[..20];
        fs::write(&bp, trunc).unwrap();
        let err = load_idx(&bp, &lp, Split::Train, "t").unwrap_err().to_string();
        assert!(err.contains("truncated"), "{err}");
    }

    #[test]
    fn cifar_round_trip() {
        let dir = tempdir().unwrap();
        let mut bytes = Vec::new();
        for i in 0..6 {
            bytes.push((i % 10) as u8);
            for v in 0..3072usize {
                bytes.push(((v + i) % 256) as u8);
            }
        }
        let p = dir.path().join("batch.bin");
        fs::write(&p, &bytes).unwrap();
        let ds = load_cifar_binary(&[p.as_path()], Split::Train, "c").unwrap();
        assert_eq!(ds.len(), 6);
        assert_eq!(ds.signature.channels, 3);
        assert_eq!((ds.signature.width, ds.signature.height), (32, 32));
        // Record 0, red plane, first pixel is byte 1.
        assert_eq!(ds.instances[0].channels[0].get(0, 0), f64::from(bytes[1]) / 255.0);
        // Green plane starts 1024 bytes later.
        assert_eq!(ds.instances[0].channels[1].get(0, 0), f64::from(bytes[1 + 1024]) / 255.0);

        let empty = dir.path().join("z.bin");
        fs::write(&empty, b"").unwrap();
        assert!(load_cifar_binary(&[empty.as_path()], Split::Train, "c").is_err());
        let ragged = dir.path().join("r.bin");
        fs::write(&ragged, &bytes[..3072]).unwrap();
        assert!(load_cifar_binary(&[ragged.as_path()], Split::Train, "c").is_err());
    }

    #[test]
    fn pgm_both_flavours() {
        let dir = tempdir().unwrap();
        let p2 = dir.path().join("a.pgm");
        fs::write(&p2, "P2\n# comment\n3 2\n255\n0 128 255\n64 32 16\n").unwrap();
        let img = load_pgm(&p2).unwrap();
        assert_eq!((img.width, img.height), (3, 2));
        assert_eq!(img.get(1, 0), 128.0 / 255.0);

        let p5 = dir.path().join("b.pgm");
        let mut raw: Vec<u8> = b"P5\n3 2\n255\n".to_vec();
        raw.extend_from_slice(&[0, 128, 255, 64, 32, 16]);
        fs::write(&p5, &raw).unwrap();
        let img5 = load_pgm(&p5).unwrap();
        assert_eq!(img.data, img5.data);

        let manifest = dir.path().join("labels.csv");
        fs::write(&manifest, "a.pgm,0\nb.pgm,1\n").unwrap();
        let ds = load_pgm_manifest(&manifest, Split::Train, "faces").unwrap();
        assert_eq!(ds.len(), 2);
        assert_eq!(ds.labels, vec![0, 1]);
    }

    #[test]
    fn canonical_dump_round_trips() {
        let dir = tempdir().unwrap();
        let ds = synthetic_gray(3, 4, 6, 5);
        let p = dir.path().join("ds.bin");
        write_canonical_dump(&ds, &p).unwrap();
        let back = load_canonical_dump(&p, Split::Train, "synthetic").unwrap();
        assert_eq!(back.signature, ds.signature);
        assert_eq!(back.labels, ds.labels);
        for (a, b) in back.instances.iter().zip(ds.instances.iter()) {
            // The f32 round trip is exact for these values.
            for (pa, pb) in a.channels.iter().zip(b.channels.iter()) {
                for (&x, &y) in pa.data.iter().zip(pb.data.iter()) {
                    assert_eq!(x as f32, y as f32);
                }
            }
        }
        assert_ne!(back.uid(), ds.uid());
    }

    #[test]
    fn subsample_exact_counts_and_determinism() {
        let ds = synthetic_gray(5, 8, 4, 4);
        let sub = stratified_subsample(&ds, 3, StreamId::new(9)).unwrap();
        assert_eq!(sub.len(), 15);
        assert_eq!(sub.class_counts(&(0..15).collect::<Vec<_>>()), vec![3; 5]);
        let again = stratified_subsample(&ds, 3, StreamId::new(9)).unwrap();
        assert_eq!(sub.labels, again.labels);
        for (a, b) in sub.instances.iter().zip(again.instances.iter()) {
            assert_eq!(a.channels[0].data, b.channels[0].data);
        }
        // Selection keeps the source order; with class-contiguous sources
        // the labels stay non-decreasing.
        assert!(sub.labels.windows(2).all(|w| w[0] <= w[1]));

        assert!(stratified_subsample(&ds, 9, StreamId::new(9)).is_err());
    }
}
