//! Dataset ingestion: `labels.csv` manifests, PGM (P2/P5) and 8-bit
//! grayscale PNG decoding, PGM writing, and bilinear resizing.

use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::matrix::ImageMatrix;

/// One labeled image. Labels are `+1` (malignant) or `-1` (benign).
#[derive(Debug, Clone)]
pub struct Sample {
    pub image: ImageMatrix,
    pub label: i8,
    pub id: String,
}

/// A set of same-resolution labeled images.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub samples: Vec<Sample>,
    pub resolution: (usize, usize),
}

impl Dataset {
    pub fn new(samples: Vec<Sample>, resolution: (usize, usize)) -> Result<Self> {
        for s in &samples {
            if s.image.shape() != resolution {
                return Err(Error::Input(format!(
                    "sample {} has shape {}x{}, dataset resolution is {}x{}",
                    s.id,
                    s.image.rows(),
                    s.image.cols(),
                    resolution.0,
                    resolution.1
                )));
            }
            if s.label != 1 && s.label != -1 {
                return Err(Error::Input(format!(
                    "sample {} has label {}, expected +1 or -1",
                    s.id, s.label
                )));
            }
        }
        Ok(Dataset {
            samples,
            resolution,
        })
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn labels(&self) -> Vec<i8> {
        self.samples.iter().map(|s| s.label).collect()
    }

    /// Loads every image referenced by the manifest, resizing to
    /// `size x size` with bilinear interpolation when needed.
    pub fn load(dir: &Path, manifest: &Path, size: usize) -> Result<Self> {
        if size < 1 {
            return Err(Error::Input("target size must be at least 1".into()));
        }
        let entries = read_manifest(manifest)?;
        if entries.is_empty() {
            return Err(Error::format(manifest, "manifest lists no samples"));
        }
        let mut samples = Vec::with_capacity(entries.len());
        for (id, label) in entries {
            let path = resolve_image_path(dir, &id)?;
            let mut image = load_image(&path)?;
            if image.shape() != (size, size) {
                image = resize_bilinear(&image, size, size);
            }
            samples.push(Sample { image, label, id });
        }
        Dataset::new(samples, (size, size))
    }
}

/// Maps a manifest label to `+1`/`-1`. Accepts the class names
/// `malignant`/`benign` and the literal values `+1`/`1`/`-1`.
pub fn parse_label(raw: &str) -> Result<i8> {
    match raw.trim().to_ascii_lowercase().as_str() {
        "malignant" | "+1" | "1" => Ok(1),
        "benign" | "-1" => Ok(-1),
        other => Err(Error::Input(format!(
            "unknown label {other:?}; expected malignant/benign or +1/-1"
        ))),
    }
}

/// Parses a `labels.csv` manifest: a header line `id,label` followed by one
/// sample per line.
pub fn read_manifest(path: &Path) -> Result<Vec<(String, i8)>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    match lines.next() {
        Some((_, header)) if header.trim().eq_ignore_ascii_case("id,label") => {}
        Some((i, header)) => {
            return Err(Error::format(
                path,
                format!("line {}: expected header 'id,label', got {header:?}", i + 1),
            ))
        }
        None => return Err(Error::format(path, "empty manifest")),
    }
    let mut entries = Vec::new();
    for (i, line) in lines {
        let (id, label) = line.split_once(',').ok_or_else(|| {
            Error::format(path, format!("line {}: expected 'id,label'", i + 1))
        })?;
        let id = id.trim();
        if id.is_empty() {
            return Err(Error::format(path, format!("line {}: empty id", i + 1)));
        }
        let label = parse_label(label)
            .map_err(|e| Error::format(path, format!("line {}: {e}", i + 1)))?;
        entries.push((id.to_string(), label));
    }
    Ok(entries)
}

fn resolve_image_path(dir: &Path, id: &str) -> Result<PathBuf> {
    let direct = dir.join(id);
    if direct.is_file() {
        return Ok(direct);
    }
    for ext in ["pgm", "png"] {
        let candidate = dir.join(format!("{id}.{ext}"));
        if candidate.is_file() {
            return Ok(candidate);
        }
    }
    Err(Error::Input(format!(
        "no image found for manifest id {id:?} under {}",
        dir.display()
    )))
}

/// Decodes an image by extension: `.pgm` (P2 or P5, maxval <= 255) or
/// `.png` (8-bit grayscale).
pub fn load_image(path: &Path) -> Result<ImageMatrix> {
    match path
        .extension()
        .and_then(|e| e.to_str())
        .map(|e| e.to_ascii_lowercase())
        .as_deref()
    {
        Some("pgm") => {
            let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
            decode_pgm(&bytes, path)
        }
        Some("png") => decode_png(path),
        other => Err(Error::Input(format!(
            "unsupported image extension {other:?} for {}",
            path.display()
        ))),
    }
}

fn decode_png(path: &Path) -> Result<ImageMatrix> {
    let decoded = image::open(path)
        .map_err(|e| Error::format(path, format!("png decode failed: {e}")))?;
    match decoded {
        image::DynamicImage::ImageLuma8(img) => {
            let (w, h) = (img.width() as usize, img.height() as usize);
            let data = img.into_raw().into_iter().map(f64::from).collect();
            ImageMatrix::from_vec(h, w, data)
        }
        other => Err(Error::format(
            path,
            format!(
                "expected 8-bit grayscale PNG, got {:?}",
                other.color()
            ),
        )),
    }
}

/// Decodes PGM P2 (ASCII) and P5 (binary) with maxval up to 255.
fn decode_pgm(bytes: &[u8], path: &Path) -> Result<ImageMatrix> {
    let mut cursor = 0usize;
    let magic = next_token(bytes, &mut cursor)
        .ok_or_else(|| Error::format(path, "missing PGM magic"))?;
    let binary = match magic {
        b"P5" => true,
        b"P2" => false,
        _ => {
            return Err(Error::format(
                path,
                format!("unsupported PGM magic {:?}", String::from_utf8_lossy(magic)),
            ))
        }
    };
    let mut header = [0usize; 3];
    for slot in &mut header {
        let token = next_token(bytes, &mut cursor)
            .ok_or_else(|| Error::format(path, "truncated PGM header"))?;
        *slot = std::str::from_utf8(token)
            .ok()
            .and_then(|s| s.parse::<usize>().ok())
            .ok_or_else(|| Error::format(path, "malformed PGM header value"))?;
    }
    let [width, height, maxval] = header;
    if width == 0 || height == 0 {
        return Err(Error::format(path, "PGM dimensions must be positive"));
    }
    if maxval == 0 || maxval > 255 {
        return Err(Error::format(
            path,
            format!("PGM maxval {maxval} outside the 8-bit range"),
        ));
    }
    let mut data = Vec::with_capacity(width * height);
    if binary {
        // single whitespace byte separates the header from the raster
        if cursor >= bytes.len() || !bytes[cursor].is_ascii_whitespace() {
            return Err(Error::format(path, "missing PGM raster separator"));
        }
        cursor += 1;
        let raster = &bytes[cursor..];
        if raster.len() < width * height {
            return Err(Error::format(path, "truncated PGM raster"));
        }
        data.extend(raster[..width * height].iter().map(|&b| f64::from(b)));
    } else {
        for _ in 0..width * height {
            let token = next_token(bytes, &mut cursor)
                .ok_or_else(|| Error::format(path, "truncated PGM raster"))?;
            let v = std::str::from_utf8(token)
                .ok()
                .and_then(|s| s.parse::<usize>().ok())
                .ok_or_else(|| Error::format(path, "malformed PGM sample"))?;
            if v > maxval {
                return Err(Error::format(
                    path,
                    format!("PGM sample {v} exceeds maxval {maxval}"),
                ));
            }
            data.push(v as f64);
        }
    }
    ImageMatrix::from_vec(height, width, data)
}

/// Next whitespace-delimited token, skipping `#` comments.
fn next_token<'a>(bytes: &'a [u8], cursor: &mut usize) -> Option<&'a [u8]> {
    loop {
        while *cursor < bytes.len() && bytes[*cursor].is_ascii_whitespace() {
            *cursor += 1;
        }
        if *cursor < bytes.len() && bytes[*cursor] == b'#' {
            while *cursor < bytes.len() && bytes[*cursor] != b'\n' {
                *cursor += 1;
            }
            continue;
        }
        break;
    }
    if *cursor >= bytes.len() {
        return None;
    }
    let start = *cursor;
    while *cursor < bytes.len() && !bytes[*cursor].is_ascii_whitespace() {
        *cursor += 1;
    }
    Some(&bytes[start..*cursor])
}

/// Writes a binary (P5) PGM with maxval 255, rounding and clamping entries.
pub fn write_pgm(path: &Path, image: &ImageMatrix) -> Result<()> {
    let mut out = format!("P5\n{} {}\n255\n", image.cols(), image.rows()).into_bytes();
    out.extend(
        image
            .as_slice()
            .iter()
            .map(|&v| v.round().clamp(0.0, 255.0) as u8),
    );
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

/// Bilinear resize with half-pixel center alignment; border samples clamp.
pub fn resize_bilinear(x: &ImageMatrix, out_rows: usize, out_cols: usize) -> ImageMatrix {
    let (rows, cols) = x.shape();
    let row_ratio = rows as f64 / out_rows as f64;
    let col_ratio = cols as f64 / out_cols as f64;
    ImageMatrix::from_fn(out_rows, out_cols, |r, c| {
        let src_r = ((r as f64 + 0.5) * row_ratio - 0.5).clamp(0.0, (rows - 1) as f64);
        let src_c = ((c as f64 + 0.5) * col_ratio - 0.5).clamp(0.0, (cols - 1) as f64);
        let r0 = src_r.floor() as usize;
        let c0 = src_c.floor() as usize;
        let r1 = (r0 + 1).min(rows - 1);
        let c1 = (c0 + 1).min(cols - 1);
        let fr = src_r - r0 as f64;
        let fc = src_c - c0 as f64;
        let top = x.get(r0, c0) * (1.0 - fc) + x.get(r0, c1) * fc;
        let bottom = x.get(r1, c0) * (1.0 - fc) + x.get(r1, c1) * fc;
        top * (1.0 - fr) + bottom * fr
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_both_label_conventions() {
        assert_eq!(parse_label("malignant").unwrap(), 1);
        assert_eq!(parse_label(" Benign ").unwrap(), -1);
        assert_eq!(parse_label("+1").unwrap(), 1);
        assert_eq!(parse_label("-1").unwrap(), -1);
        assert!(parse_label("tumor").is_err());
    }

    #[test]
    fn pgm_binary_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("img.pgm");
        let image = ImageMatrix::from_fn(5, 7, |r, c| ((r * 41 + c * 13) % 256) as f64);
        write_pgm(&path, &image).unwrap();
        let back = load_image(&path).unwrap();
        assert!(back.bit_eq(&image));
    }

    #[test]
    fn pgm_ascii_with_comments() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("ascii.pgm");
        std::fs::write(&path, b"P2\n# comment\n3 2\n255\n0 10 20\n30 40 255\n").unwrap();
        let img = load_image(&path).unwrap();
        assert_eq!(img.shape(), (2, 3));
        assert_eq!(img.as_slice(), &[0.0, 10.0, 20.0, 30.0, 40.0, 255.0]);
    }

    #[test]
    fn rejects_malformed_pgm() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.pgm");
        std::fs::write(&path, b"P5\n3 2\n255\n\x00\x01").unwrap(); // truncated raster
        assert!(load_image(&path).is_err());
        std::fs::write(&path, b"P3\n1 1\n255\n0").unwrap();
        assert!(load_image(&path).is_err());
    }

    #[test]
    fn png_grayscale_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("img.png");
        let pixels: Vec<u8> = (0..6 * 4).map(|i| (i * 11 % 256) as u8).collect();
        let buf: image::GrayImage = image::ImageBuffer::from_raw(6, 4, pixels.clone()).unwrap();
        buf.save(&path).unwrap();
        let img = load_image(&path).unwrap();
        assert_eq!(img.shape(), (4, 6));
        for (a, b) in img.as_slice().iter().zip(&pixels) {
            assert_eq!(*a, f64::from(*b));
        }
    }

    #[test]
    fn rejects_non_grayscale_png() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("rgb.png");
        let buf: image::RgbImage = image::ImageBuffer::from_raw(2, 2, vec![0u8; 12]).unwrap();
        buf.save(&path).unwrap();
        assert!(load_image(&path).is_err());
    }

    #[test]
    fn resize_is_identity_at_same_size() {
        let image = ImageMatrix::from_fn(8, 8, |r, c| (r * 8 + c) as f64);
        let out = resize_bilinear(&image, 8, 8);
        assert!(out.bit_eq(&image));
    }

    #[test]
    fn resize_preserves_constant_images() {
        let image = ImageMatrix::constant(10, 6, 37.0);
        let out = resize_bilinear(&image, 56, 56);
        assert_eq!(out.shape(), (56, 56));
        for &v in out.as_slice() {
            assert!((v - 37.0).abs() < 1e-12);
        }
    }

    #[test]
    fn manifest_drives_loading_and_resize() {
        let dir = tempfile::tempdir().unwrap();
        let img = ImageMatrix::from_fn(8, 8, |r, c| ((r + c) % 2 * 255) as f64);
        write_pgm(&dir.path().join("a.pgm"), &img).unwrap();
        write_pgm(&dir.path().join("b.pgm"), &img).unwrap();
        let manifest = dir.path().join("labels.csv");
        std::fs::write(&manifest, "id,label\na,malignant\nb,benign\n").unwrap();
        let ds = Dataset::load(dir.path(), &manifest, 6).unwrap();
        assert_eq!(ds.len(), 2);
        assert_eq!(ds.resolution, (6, 6));
        assert_eq!(ds.labels(), vec![1, -1]);
    }

    #[test]
    fn missing_image_names_the_manifest_id() {
        let dir = tempfile::tempdir().unwrap();
        let manifest = dir.path().join("labels.csv");
        std::fs::write(&manifest, "id,label\nghost,malignant\n").unwrap();
        let err = Dataset::load(dir.path(), &manifest, 8).unwrap_err();
        assert!(err.to_string().contains("ghost"), "{err}");
    }

    #[test]
    fn manifest_requires_header() {
        let dir = tempfile::tempdir().unwrap();
        let manifest = dir.path().join("labels.csv");
        std::fs::write(&manifest, "a,malignant\n").unwrap();
        assert!(read_manifest(&manifest).is_err());
    }
}
