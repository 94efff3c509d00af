//! Real-data ingestion: MNIST-style IDX files and folders of grayscale
//! face images.

use std::fs;
use std::path::{Path, PathBuf};

use rand::Rng;

use crate::cone_model::DataSet;
use crate::{Error, Result};

pub const IDX_IMAGE_MAGIC: u32 = 0x0000_0803;
pub const IDX_LABEL_MAGIC: u32 = 0x0000_0801;

/// Default face size (height, width).
pub const FACE_SIZE: (usize, usize) = (48, 42);

/// Images and labels from a pair of IDX files.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IdxImages {
    pub rows: usize,
    pub cols: usize,
    /// `count * rows * cols` bytes, each image row-major.
    pub pixels: Vec<u8>,
    pub labels: Vec<u8>,
}

impl IdxImages {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn image(&self, i: usize) -> &[u8] {
        let sz = self.rows * self.cols;
        &self.pixels[i * sz..(i + 1) * sz]
    }

    /// Decodes the contents of an image file and a label file.
    pub fn parse(image_bytes: &[u8], label_bytes: &[u8]) -> Result<Self> {
        let mut img = Reader { bytes: image_bytes, pos: 0 };
        img.magic(IDX_IMAGE_MAGIC)?;
        let count = img.u32()? as usize;
        let rows = img.u32()? as usize;
        let cols = img.u32()? as usize;
        let pixels = img.rest(count * rows * cols)?.to_vec();

        let mut lab = Reader { bytes: label_bytes, pos: 0 };
        lab.magic(IDX_LABEL_MAGIC)?;
        let label_count = lab.u32()? as usize;
        if label_count != count {
            return Err(Error::CountMismatch { images: count, labels: label_count });
        }
        let labels = lab.rest(label_count)?.to_vec();
        Ok(Self { rows, cols, pixels, labels })
    }

    /// Encodes back to `(image file, label file)` bytes.
    pub fn to_bytes(&self) -> (Vec<u8>, Vec<u8>) {
        let mut img = Vec::with_capacity(16 + self.pixels.len());
        for v in [IDX_IMAGE_MAGIC, self.len() as u32, self.rows as u32, self.cols as u32] {
            img.extend_from_slice(&v.to_be_bytes());
        }
        img.extend_from_slice(&self.pixels);
        let mut lab = Vec::with_capacity(8 + self.labels.len());
        for v in [IDX_LABEL_MAGIC, self.len() as u32] {
            lab.extend_from_slice(&v.to_be_bytes());
        }
        lab.extend_from_slice(&self.labels);
        (img, lab)
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl Reader<'_> {
    fn take(&mut self, n: usize) -> Result<&[u8]> {
        let end = self.pos + n;
        if end > self.bytes.len() {
            return Err(Error::Truncated { expected: end, found: self.bytes.len() });
        }
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        let b = self.take(4)?;
        Ok(u32::from_be_bytes([b[0], b[1], b[2], b[3]]))
    }

    fn magic(&mut self, expected: u32) -> Result<()> {
        let found = self.u32()?;
        if found != expected {
            return Err(Error::BadMagic { expected, found });
        }
        Ok(())
    }

    /// Exactly `n` more bytes and nothing after them.
    fn rest(&mut self, n: usize) -> Result<&[u8]> {
        let extra = self.bytes.len().saturating_sub(self.pos + n);
        let s = self.take(n)?;
        if extra > 0 {
            return Err(Error::TrailingData { extra });
        }
        Ok(s)
    }
}

pub fn load_idx(images_path: impl AsRef<Path>, labels_path: impl AsRef<Path>) -> Result<IdxImages> {
    let images = fs::read(images_path)?;
    let labels = fs::read(labels_path)?;
    IdxImages::parse(&images, &labels)
}

/// Draws `per_class` images of every requested digit uniformly without
/// replacement. Digit `digits[k]` becomes cluster `k + 1`; pixels are scaled
/// to `[0, 1]`. All-black images are never drawn.
pub fn select_digits<R: Rng + ?Sized>(idx: &IdxImages, digits: &[u8], per_class: usize, rng: &mut R) -> Result<DataSet> {
    if per_class == 0 || digits.is_empty() {
        return Err(Error::InvalidData("selection would produce an empty dataset".into()));
    }
    let dim = idx.rows * idx.cols;
    let mut flat = Vec::with_capacity(digits.len() * per_class * dim);
    let mut labels = Vec::with_capacity(digits.len() * per_class);
    for (k, &digit) in digits.iter().enumerate() {
        let pool: Vec<usize> = (0..idx.len())
            .filter(|&i| idx.labels[i] == digit && idx.image(i).iter().any(|&p| p != 0))
            .collect();
        if pool.len() < per_class {
            return Err(Error::InsufficientData(format!(
                "digit {digit} has {} usable images, {per_class} requested",
                pool.len()
            )));
        }
        for pick in rand::seq::index::sample(rng, pool.len(), per_class) {
            flat.extend(idx.image(pool[pick]).iter().map(|&p| p as f64 / 255.0));
            labels.push(k + 1);
        }
    }
    DataSet::from_columns(dim, flat, Some(labels), digits.len())
}

/// 8-bit grayscale image, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct GrayImage {
    pub height: usize,
    pub width: usize,
    pub pixels: Vec<f64>,
}

impl GrayImage {
    pub fn new(height: usize, width: usize, pixels: Vec<f64>) -> Self {
        assert_eq!(pixels.len(), height * width);
        Self { height, width, pixels }
    }

    fn at(&self, y: usize, x: usize) -> f64 {
        self.pixels[y * self.width + x]
    }

    /// Bilinear resampling with pixel-center alignment. Resizing to the
    /// current size returns the image unchanged.
    pub fn resize(&self, height: usize, width: usize) -> GrayImage {
        let src = |dst: usize, out_len: usize, in_len: usize| -> (usize, usize, f64) {
            let pos = ((dst as f64 + 0.5) * in_len as f64 / out_len as f64 - 0.5).clamp(0.0, (in_len - 1) as f64);
            let lo = pos.floor() as usize;
            let hi = (lo + 1).min(in_len - 1);
            (lo, hi, pos - lo as f64)
        };
        let lerp = |a: f64, b: f64, t: f64| a + (b - a) * t;
        let mut pixels = Vec::with_capacity(height * width);
        for y in 0..height {
            let (y0, y1, fy) = src(y, height, self.height);
            for x in 0..width {
                let (x0, x1, fx) = src(x, width, self.width);
                let top = lerp(self.at(y0, x0), self.at(y0, x1), fx);
                let bottom = lerp(self.at(y1, x0), self.at(y1, x1), fx);
                pixels.push(lerp(top, bottom, fy));
            }
        }
        GrayImage { height, width, pixels }
    }
}

/// Decodes a binary (`P5`) or ASCII (`P2`) PGM with `maxval <= 255`.
pub fn parse_pgm(bytes: &[u8]) -> std::result::Result<GrayImage, String> {
    let mut pos = 0;
    let mut token = || -> std::result::Result<String, String> {
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
            return Err("unexpected end of header".into());
        }
        Ok(String::from_utf8_lossy(&bytes[start..pos]).into_owned())
    };
    let num = |s: String| s.parse::<usize>().map_err(|_| format!("bad header field {s:?}"));
    let magic = token()?;
    let width = num(token()?)?;
    let height = num(token()?)?;
    let maxval = num(token()?)?;
    if width == 0 || height == 0 {
        return Err("zero image dimension".into());
    }
    if maxval == 0 || maxval > 255 {
        return Err(format!("unsupported maxval {maxval}"));
    }
    let scale = 255.0 / maxval as f64;
    let count = width * height;
    let pixels: Vec<f64> = match magic.as_str() {
        "P5" => {
            let start = pos + 1;
            let data = bytes.get(start..start + count).ok_or("truncated pixel data")?;
            data.iter().map(|&b| b as f64 * scale).collect()
        }
        "P2" => (0..count)
            .map(|_| token().and_then(num).map(|v| v as f64 * scale))
            .collect::<std::result::Result<_, _>>()?,
        other => return Err(format!("unsupported format {other:?}")),
    };
    if pixels.iter().any(|&p| p > 255.0) {
        return Err("pixel above maxval".into());
    }
    Ok(GrayImage::new(height, width, pixels))
}

fn read_image(path: &Path, size: (usize, usize)) -> Result<GrayImage> {
    let bytes = fs::read(path)?;
    let bad = |reason: String| Error::Image { path: path.to_path_buf(), reason };
    let ext = path.extension().and_then(|e| e.to_str()).unwrap_or("").to_ascii_lowercase();
    if ext == "raw" {
        // headerless byte grid, already at the target size
        if bytes.len() != size.0 * size.1 {
            return Err(bad(format!("raw grid has {} bytes, expected {}", bytes.len(), size.0 * size.1)));
        }
        return Ok(GrayImage::new(size.0, size.1, bytes.iter().map(|&b| b as f64).collect()));
    }
    parse_pgm(&bytes).map_err(bad)
}

fn is_image(path: &Path) -> bool {
    matches!(
        path.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase).as_deref(),
        Some("pgm" | "raw")
    )
}

fn sorted_entries(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut entries = fs::read_dir(dir)?.map(|e| e.map(|e| e.path())).collect::<std::io::Result<Vec<_>>>()?;
    entries.sort();
    Ok(entries)
}

/// One cluster per subfolder of `root` (lexicographic order), each holding
/// `.pgm` or `.raw` grayscale images. Images are resized to `size`, scaled
/// to `[0, 1]` and flattened row by row. Other files are ignored.
pub fn load_image_folder(root: impl AsRef<Path>, size: (usize, usize)) -> Result<DataSet> {
    let root = root.as_ref();
    let (h, w) = size;
    if h == 0 || w == 0 {
        return Err(Error::InvalidParameter("target size must be positive".into()));
    }
    let folders: Vec<PathBuf> = sorted_entries(root)?.into_iter().filter(|p| p.is_dir()).collect();
    if folders.is_empty() {
        return Err(Error::EmptyFolder(root.to_path_buf()));
    }
    let mut flat = Vec::new();
    let mut labels = Vec::new();
    for (k, folder) in folders.iter().enumerate() {
        let files: Vec<PathBuf> = sorted_entries(folder)?.into_iter().filter(|p| p.is_file() && is_image(p)).collect();
        if files.is_empty() {
            return Err(Error::EmptyFolder(folder.clone()));
        }
        for file in files {
            let img = read_image(&file, size)?;
            let img = if (img.height, img.width) == size { img } else { img.resize(h, w) };
            if img.pixels.iter().all(|&p| p == 0.0) {
                return Err(Error::Image { path: file, reason: "image is entirely black".into() });
            }
            flat.extend(img.pixels.iter().map(|&p| p / 255.0));
            labels.push(k + 1);
        }
    }
    DataSet::from_columns(h * w, flat, Some(labels), folders.len())
}
