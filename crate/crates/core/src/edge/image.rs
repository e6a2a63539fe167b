//! Binary netpbm images (P5/P6, maxval 255) and bit-level image operations.

use std::path::Path;

use serde::Serialize;

use super::EdgeError;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GrayImage {
    pub width: usize,
    pub height: usize,
    pub data: Vec<u8>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ColorImage {
    pub width: usize,
    pub height: usize,
    pub data: Vec<[u8; 3]>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LoadedImage {
    Gray(GrayImage),
    Color(ColorImage),
}

impl LoadedImage {
    pub fn into_gray(self) -> GrayImage {
        match self {
            LoadedImage::Gray(g) => g,
            LoadedImage::Color(c) => GrayImage {
                width: c.width,
                height: c.height,
                data: c.data.iter().map(|&[r, g, b]| to_gray(r, g, b)).collect(),
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct BinaryImage {
    pub width: usize,
    pub height: usize,
    pub bits: Vec<bool>,
}

impl BinaryImage {
    pub fn new(width: usize, height: usize, bits: Vec<bool>) -> Result<Self, EdgeError> {
        if bits.len() != width * height {
            return Err(EdgeError::SizeMismatch(format!(
                "{} bits for a {width}x{height} image",
                bits.len()
            )));
        }
        Ok(Self {
            width,
            height,
            bits,
        })
    }

    pub fn from_fn(width: usize, height: usize, f: impl Fn(usize, usize) -> bool) -> Self {
        let bits = (0..height)
            .flat_map(|y| (0..width).map(move |x| (x, y)))
            .map(|(x, y)| f(x, y))
            .collect();
        Self {
            width,
            height,
            bits,
        }
    }

    pub fn get(&self, x: usize, y: usize) -> bool {
        self.bits[y * self.width + x]
    }

    pub fn count_ones(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    /// Set bits become 255, clear bits 0.
    pub fn to_gray(&self) -> GrayImage {
        GrayImage {
            width: self.width,
            height: self.height,
            data: self.bits.iter().map(|&b| if b { 255 } else { 0 }).collect(),
        }
    }
}

/// Luma with weights 0.299, 0.587, 0.114, rounded half away from zero.
pub fn to_gray(r: u8, g: u8, b: u8) -> u8 {
    let y = 0.299 * f64::from(r) + 0.587 * f64::from(g) + 0.114 * f64::from(b);
    y.round().clamp(0.0, 255.0) as u8
}

/// Parses a binary P5 or P6 image with maxval 255.
pub fn parse_pnm(bytes: &[u8]) -> Result<LoadedImage, EdgeError> {
    let mut pos = 0;
    let magic =
        next_token(bytes, &mut pos).ok_or_else(|| EdgeError::Header("missing magic".into()))?;
    let channels = match magic.as_str() {
        "P5" => 1,
        "P6" => 3,
        other => return Err(EdgeError::Header(format!("unsupported magic '{other}'"))),
    };
    let mut field = |name: &str| -> Result<usize, EdgeError> {
        let tok = next_token(bytes, &mut pos)
            .ok_or_else(|| EdgeError::Header(format!("missing {name}")))?;
        tok.parse()
            .map_err(|_| EdgeError::Header(format!("bad {name} '{tok}'")))
    };
    let width = field("width")?;
    let height = field("height")?;
    let maxval = field("maxval")?;
    if maxval != 255 {
        return Err(EdgeError::Maxval(maxval));
    }
    if width == 0 || height == 0 {
        return Err(EdgeError::Header("zero image dimension".into()));
    }
    // exactly one whitespace byte separates the header from the raster
    match bytes.get(pos) {
        Some(c) if c.is_ascii_whitespace() => pos += 1,
        _ => return Err(EdgeError::Header("missing whitespace after maxval".into())),
    }
    let need = width * height * channels;
    let payload = &bytes[pos..];
    if payload.len() < need {
        return Err(EdgeError::Truncated {
            expected: need,
            got: payload.len(),
        });
    }
    let payload = &payload[..need];
    Ok(if channels == 1 {
        LoadedImage::Gray(GrayImage {
            width,
            height,
            data: payload.to_vec(),
        })
    } else {
        LoadedImage::Color(ColorImage {
            width,
            height,
            data: payload
                .chunks_exact(3)
                .map(|c| [c[0], c[1], c[2]])
                .collect(),
        })
    })
}

fn next_token(bytes: &[u8], pos: &mut usize) -> Option<String> {
    loop {
        while *pos < bytes.len() && bytes[*pos].is_ascii_whitespace() {
            *pos += 1;
        }
        if *pos < bytes.len() && bytes[*pos] == b'#' {
            while *pos < bytes.len() && bytes[*pos] != b'\n' {
                *pos += 1;
            }
            continue;
        }
        break;
    }
    let start = *pos;
    while *pos < bytes.len() && !bytes[*pos].is_ascii_whitespace() && bytes[*pos] != b'#' {
        *pos += 1;
    }
    (start < *pos).then(|| String::from_utf8_lossy(&bytes[start..*pos]).into_owned())
}

pub fn load_image(path: impl AsRef<Path>) -> Result<LoadedImage, EdgeError> {
    let path = path.as_ref();
    let bytes =
        std::fs::read(path).map_err(|e| EdgeError::Io(format!("{}: {e}", path.display())))?;
    parse_pnm(&bytes)
}

pub fn encode_pgm(img: &GrayImage) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n255\n", img.width, img.height).into_bytes();
    out.extend_from_slice(&img.data);
    out
}

pub fn encode_ppm(img: &ColorImage) -> Vec<u8> {
    let mut out = format!("P6\n{} {}\n255\n", img.width, img.height).into_bytes();
    out.extend(img.data.iter().flatten());
    out
}

pub fn save_pgm(img: &GrayImage, path: impl AsRef<Path>) -> Result<(), EdgeError> {
    let path = path.as_ref();
    std::fs::write(path, encode_pgm(img))
        .map_err(|e| EdgeError::Io(format!("{}: {e}", path.display())))
}

/// Bit is set iff the intensity is at least `threshold`.
pub fn binarize(img: &GrayImage, threshold: u8) -> BinaryImage {
    BinaryImage {
        width: img.width,
        height: img.height,
        bits: img.data.iter().map(|&v| v >= threshold).collect(),
    }
}

/// Otsu's threshold, returned in the `>=` convention used by [`binarize`].
pub fn otsu_threshold(img: &GrayImage) -> u8 {
    let mut hist = [0u64; 256];
    for &v in &img.data {
        hist[v as usize] += 1;
    }
    let total = img.data.len() as f64;
    let sum_all: f64 = hist
        .iter()
        .enumerate()
        .map(|(i, &c)| i as f64 * c as f64)
        .sum();
    let (mut w0, mut sum0) = (0.0, 0.0);
    let (mut best, mut best_t) = (-1.0, 0usize);
    for (t, &c) in hist.iter().enumerate() {
        w0 += c as f64;
        sum0 += t as f64 * c as f64;
        let w1 = total - w0;
        if w0 == 0.0 || w1 == 0.0 {
            continue;
        }
        let (m0, m1) = (sum0 / w0, (sum_all - sum0) / w1);
        let between = w0 * w1 * (m0 - m1) * (m0 - m1);
        if between > best {
            best = between;
            best_t = t;
        }
    }
    (best_t + 1).min(255) as u8
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Direction {
    Horizontal,
    Vertical,
}

/// Replaces each pixel by its left (horizontal) or upper (vertical)
/// neighbour; the first column or row is replicated.
pub fn shift(img: &BinaryImage, dir: Direction) -> Result<BinaryImage, EdgeError> {
    let (w, h) = (img.width, img.height);
    match dir {
        Direction::Horizontal if w < 2 => {
            return Err(EdgeError::Degenerate(format!(
                "{w}x{h} image, horizontal shift"
            )))
        }
        Direction::Vertical if h < 2 => {
            return Err(EdgeError::Degenerate(format!(
                "{w}x{h} image, vertical shift"
            )))
        }
        _ => {}
    }
    Ok(BinaryImage::from_fn(w, h, |x, y| match dir {
        Direction::Horizontal => img.get(x.saturating_sub(1), y),
        Direction::Vertical => img.get(x, y.saturating_sub(1)),
    }))
}

fn zip_bits(
    a: &BinaryImage,
    b: &BinaryImage,
    f: impl Fn(bool, bool) -> bool,
) -> Result<BinaryImage, EdgeError> {
    if (a.width, a.height) != (b.width, b.height) {
        return Err(EdgeError::SizeMismatch(format!(
            "{}x{} vs {}x{}",
            a.width, a.height, b.width, b.height
        )));
    }
    Ok(BinaryImage {
        width: a.width,
        height: a.height,
        bits: a.bits.iter().zip(&b.bits).map(|(&x, &y)| f(x, y)).collect(),
    })
}

pub fn xor_images(a: &BinaryImage, b: &BinaryImage) -> Result<BinaryImage, EdgeError> {
    zip_bits(a, b, |x, y| x ^ y)
}

pub fn or_images(a: &BinaryImage, b: &BinaryImage) -> Result<BinaryImage, EdgeError> {
    zip_bits(a, b, |x, y| x | y)
}

/// Software edge map: `(img ^ shift_h) | (img ^ shift_v)`.
pub fn reference_edges(img: &BinaryImage) -> Result<BinaryImage, EdgeError> {
    let h = xor_images(img, &shift(img, Direction::Horizontal)?)?;
    let v = xor_images(img, &shift(img, Direction::Vertical)?)?;
    or_images(&h, &v)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gray_weights() {
        assert_eq!(to_gray(0, 0, 0), 0);
        assert_eq!(to_gray(255, 255, 255), 255);
        assert_eq!(to_gray(255, 0, 0), 76);
        assert_eq!(to_gray(0, 255, 0), 150);
        assert_eq!(to_gray(0, 0, 255), 29);
    }

    #[test]
    fn parses_p5_and_p6() {
        let img = parse_pnm(b"P5\n1 1\n255\n\x80").unwrap();
        assert_eq!(
            img,
            LoadedImage::Gray(GrayImage {
                width: 1,
                height: 1,
                data: vec![128]
            })
        );
        let img = parse_pnm(b"P6 # comment\n2 1 255\n\xff\x00\x00\x00\x00\xff").unwrap();
        let LoadedImage::Color(c) = img.clone() else {
            panic!()
        };
        assert_eq!(c.data, vec![[255, 0, 0], [0, 0, 255]]);
        assert_eq!(img.into_gray().data, vec![76, 29]);
    }

    #[test]
    fn malformed_inputs_have_distinct_errors() {
        let mut p = b"P5\n4 4\n255\n".to_vec();
        p.extend([0u8; 15]);
        assert_eq!(
            parse_pnm(&p),
            Err(EdgeError::Truncated {
                expected: 16,
                got: 15
            })
        );
        assert_eq!(
            parse_pnm(b"P5\n1 1\n65535\n\0\0"),
            Err(EdgeError::Maxval(65535))
        );
        assert!(matches!(
            parse_pnm(b"P2\n1 1\n255\n0"),
            Err(EdgeError::Header(_))
        ));
        assert!(matches!(
            parse_pnm(b"P5\n1 x\n255\n0"),
            Err(EdgeError::Header(_))
        ));
    }

    #[test]
    fn pgm_round_trip() {
        let img = GrayImage {
            width: 3,
            height: 2,
            data: vec![0, 10, 20, 30, 40, 255],
        };
        assert_eq!(
            parse_pnm(&encode_pgm(&img)).unwrap(),
            LoadedImage::Gray(img)
        );
    }

    #[test]
    fn binarize_boundary() {
        let img = GrayImage {
            width: 3,
            height: 1,
            data: vec![127, 128, 129],
        };
        assert_eq!(binarize(&img, 128).bits, vec![false, true, true]);
        let zero = GrayImage {
            width: 2,
            height: 2,
            data: vec![0; 4],
        };
        assert_eq!(binarize(&zero, 128).count_ones(), 0);
    }

    #[test]
    fn otsu_splits_two_levels() {
        let img = GrayImage {
            width: 4,
            height: 1,
            data: vec![10, 10, 200, 200],
        };
        let t = otsu_threshold(&img);
        assert!(t > 10 && t <= 200, "{t}");
        assert_eq!(binarize(&img, t).bits, vec![false, false, true, true]);
    }

    #[test]
    fn shift_replicates_edges() {
        let row = BinaryImage::new(2, 1, vec![false, true]).unwrap();
        assert_eq!(
            shift(&row, Direction::Horizontal).unwrap().bits,
            vec![false, false]
        );
        assert!(matches!(
            shift(&row, Direction::Vertical),
            Err(EdgeError::Degenerate(_))
        ));
        let uniform = BinaryImage::from_fn(3, 3, |_, _| true);
        assert_eq!(shift(&uniform, Direction::Vertical).unwrap(), uniform);
    }

    #[test]
    fn vertical_xor_marks_row_boundaries() {
        // rows 0,1 clear, rows 2,3 set
        let img = BinaryImage::from_fn(4, 4, |_, y| y >= 2);
        let e = xor_images(&img, &shift(&img, Direction::Vertical).unwrap()).unwrap();
        for y in 0..4 {
            for x in 0..4 {
                assert_eq!(e.get(x, y), y == 2);
            }
        }
    }
}
