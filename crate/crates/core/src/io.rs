//! PNG and binary PGM/PPM reading, PNG and PGM writing.

use std::path::Path;

use image::{DynamicImage, ImageFormat};

use crate::error::{Error, Result};
use crate::image::{to_luminance, GrayImage, RgbImage};

fn format_for(path: &Path) -> Result<ImageFormat> {
    let ext = path
        .extension()
        .and_then(|e| e.to_str())
        .map(str::to_ascii_lowercase);
    match ext.as_deref() {
        Some("png") => Ok(ImageFormat::Png),
        Some("pgm" | "ppm" | "pnm") => Ok(ImageFormat::Pnm),
        _ => Err(Error::UnsupportedFormat(path.to_path_buf())),
    }
}

fn image_error(path: &Path) -> impl FnOnce(image::ImageError) -> Error + '_ {
    move |source| Error::Image {
        path: path.to_path_buf(),
        source,
    }
}

/// Load an 8-bit grayscale or RGB image as luminance.
pub fn load_gray(path: impl AsRef<Path>) -> Result<GrayImage> {
    let path = path.as_ref();
    let format = format_for(path)?;
    let reader = image::ImageReader::open(path)
        .map_err(|e| image_error(path)(image::ImageError::IoError(e)))?;
    let mut reader = reader;
    reader.set_format(format);
    let decoded = reader.decode().map_err(image_error(path))?;
    let (w, h) = (decoded.width() as usize, decoded.height() as usize);
    match decoded {
        DynamicImage::ImageLuma8(buf) => GrayImage::from_vec(w, h, buf.into_raw()),
        DynamicImage::ImageLumaA8(_) => GrayImage::from_vec(w, h, decoded.to_luma8().into_raw()),
        other => {
            let rgb = other.to_rgb8();
            let data = rgb.pixels().map(|p| p.0).collect();
            to_luminance(&RgbImage {
                width: w,
                height: h,
                data,
            })
        }
    }
}

/// Write as PNG or binary PGM depending on the extension.
pub fn save_gray(img: &GrayImage, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let format = format_for(path)?;
    if path.extension().and_then(|e| e.to_str()).is_some_and(|e| e.eq_ignore_ascii_case("ppm")) {
        return Err(Error::UnsupportedFormat(path.to_path_buf()));
    }
    let buf = image::GrayImage::from_raw(img.width() as u32, img.height() as u32, img.as_slice().to_vec())
        .expect("buffer length matches dimensions");
    buf.save_with_format(path, format).map_err(image_error(path))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn png_and_pgm_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let img = GrayImage::from_fn(7, 5, |x, y| (x * 30 + y) as u8).unwrap();
        for name in ["a.png", "a.pgm"] {
            let path = dir.path().join(name);
            save_gray(&img, &path).unwrap();
            assert_eq!(load_gray(&path).unwrap(), img);
        }
    }

    #[test]
    fn rgb_is_converted_to_luminance() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.ppm");
        let rgb = image::RgbImage::from_fn(2, 1, |x, _| if x == 0 { image::Rgb([255, 0, 0]) } else { image::Rgb([9, 9, 9]) });
        rgb.save_with_format(&path, ImageFormat::Pnm).unwrap();
        let gray = load_gray(&path).unwrap();
        assert_eq!(gray.as_slice(), &[76, 9]);
    }

    #[test]
    fn unknown_formats_and_missing_files() {
        let dir = tempfile::tempdir().unwrap();
        let img = GrayImage::filled(2, 2, 1).unwrap();
        assert!(matches!(save_gray(&img, dir.path().join("x.jpg")), Err(Error::UnsupportedFormat(_))));
        let missing = dir.path().join("missing.png");
        let err = load_gray(&missing).unwrap_err();
        assert!(err.to_string().contains("missing.png"));
    }
}
