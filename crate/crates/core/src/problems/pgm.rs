//! Binary greyscale PGM (P5, 8- or 16-bit) as row-major `f64` images.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use image::codecs::pnm::{PnmDecoder, PnmEncoder, PnmSubtype, SampleEncoding};
use image::{DynamicImage, ExtendedColorType};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct GrayImage {
    pub rows: usize,
    pub cols: usize,
    /// Intensities scaled to `[0, 1]`.
    pub data: Vec<f64>,
}

pub fn read_pgm(path: impl AsRef<Path>) -> Result<GrayImage> {
    let reader = BufReader::new(File::open(path)?);
    let img = DynamicImage::from_decoder(PnmDecoder::new(reader)?)?;
    let (cols, rows) = (img.width() as usize, img.height() as usize);
    let data = match img {
        DynamicImage::ImageLuma8(buf) => buf.into_raw().into_iter().map(|v| v as f64 / 255.0).collect(),
        DynamicImage::ImageLuma16(buf) => buf.into_raw().into_iter().map(|v| v as f64 / 65535.0).collect(),
        _ => return Err(Error::invalid("expected a greyscale PGM image")),
    };
    Ok(GrayImage { rows, cols, data })
}

/// Writes `data` mapped linearly from `[lo, hi]` to the full integer range,
/// clamping values outside it.
pub fn write_pgm(path: impl AsRef<Path>, img: &GrayImage, lo: f64, hi: f64, sixteen_bit: bool) -> Result<()> {
    if img.rows * img.cols != img.data.len() || img.data.is_empty() {
        return Err(Error::invalid("image buffer does not match its shape"));
    }
    if !(hi > lo) {
        return Err(Error::invalid(format!("empty intensity range [{lo}, {hi}]")));
    }
    let scale = |v: f64, max: f64| (((v - lo) / (hi - lo)).clamp(0.0, 1.0) * max).round();
    let mut writer = BufWriter::new(File::create(path)?);
    if sixteen_bit {
        write!(writer, "P5\n{} {}\n65535\n", img.cols, img.rows)?;
        for &v in &img.data {
            writer.write_all(&(scale(v, 65535.0) as u16).to_be_bytes())?;
        }
        writer.flush()?;
    } else {
        let buf: Vec<u8> = img.data.iter().map(|&v| scale(v, 255.0) as u8).collect();
        PnmEncoder::new(writer).with_subtype(PnmSubtype::Graymap(SampleEncoding::Binary)).encode(
            &buf[..],
            img.cols as u32,
            img.rows as u32,
            ExtendedColorType::L8,
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_8_and_16_bit() {
        let dir = tempfile::tempdir().unwrap();
        let img = GrayImage {
            rows: 3,
            cols: 4,
            data: (0..12).map(|k| k as f64 / 11.0).collect(),
        };
        for (bits16, tol) in [(false, 0.5 / 255.0), (true, 0.5 / 65535.0)] {
            let p = dir.path().join(format!("t{bits16}.pgm"));
            write_pgm(&p, &img, 0.0, 1.0, bits16).unwrap();
            let back = read_pgm(&p).unwrap();
            assert_eq!((back.rows, back.cols), (3, 4));
            for (a, b) in back.data.iter().zip(&img.data) {
                assert!((a - b).abs() <= tol + 1e-12);
            }
            let raw = std::fs::read(&p).unwrap();
            assert_eq!(&raw[..2], b"P5");
        }
    }

    #[test]
    fn rejects_bad_shapes() {
        let dir = tempfile::tempdir().unwrap();
        let img = GrayImage { rows: 2, cols: 2, data: vec![0.0; 3] };
        assert!(write_pgm(dir.path().join("x.pgm"), &img, 0.0, 1.0, false).is_err());
        assert!(read_pgm(dir.path().join("missing.pgm")).is_err());
    }
}
