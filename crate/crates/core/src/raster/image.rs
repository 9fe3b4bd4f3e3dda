use std::io::Cursor;
use std::path::Path;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum ImageError {
    #[error("png encode: {0}")]
    Encode(#[from] png::EncodingError),
    #[error("png decode: {0}")]
    Decode(#[from] png::DecodingError),
    #[error("unsupported image layout: {0}")]
    Layout(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Row-major RGBA8 raster. `depth` holds view-space depth per pixel while
/// rendering (infinity for background) and is empty for decoded images.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageBuffer {
    pub width: u32,
    pub height: u32,
    pub rgba: Vec<u8>,
    pub depth: Vec<f32>,
}

impl ImageBuffer {
    pub fn transparent(width: u32, height: u32) -> ImageBuffer {
        let n = width as usize * height as usize;
        ImageBuffer {
            width,
            height,
            rgba: vec![0; n * 4],
            depth: vec![f32::INFINITY; n],
        }
    }

    /// Builds an opaque-or-not image from raw RGBA without depth.
    pub fn from_rgba(width: u32, height: u32, rgba: Vec<u8>) -> ImageBuffer {
        assert_eq!(rgba.len(), width as usize * height as usize * 4, "rgba length");
        ImageBuffer {
            width,
            height,
            rgba,
            depth: Vec::new(),
        }
    }

    pub fn pixel_count(&self) -> usize {
        self.width as usize * self.height as usize
    }

    pub fn pixel(&self, x: u32, y: u32) -> [u8; 4] {
        let i = (y as usize * self.width as usize + x as usize) * 4;
        [self.rgba[i], self.rgba[i + 1], self.rgba[i + 2], self.rgba[i + 3]]
    }

    pub fn alpha(&self, x: u32, y: u32) -> u8 {
        self.rgba[(y as usize * self.width as usize + x as usize) * 4 + 3]
    }

    /// Fraction of pixels with nonzero alpha.
    pub fn coverage(&self) -> f64 {
        let covered = self.rgba.chunks_exact(4).filter(|p| p[3] > 0).count();
        covered as f64 / self.pixel_count().max(1) as f64
    }

    /// Drops the render-time depth channel.
    pub fn without_depth(mut self) -> ImageBuffer {
        self.depth = Vec::new();
        self
    }

    /// RGB8 composite over a white background, for previews.
    pub fn composite_over_white(&self) -> Vec<u8> {
        self.rgba
            .chunks_exact(4)
            .flat_map(|p| {
                let a = p[3] as u32;
                let mix = |c: u8| ((c as u32 * a + 255 * (255 - a) + 127) / 255) as u8;
                [mix(p[0]), mix(p[1]), mix(p[2])]
            })
            .collect()
    }

    pub fn encode_png(&self) -> Result<Vec<u8>, ImageError> {
        encode(self.width, self.height, png::ColorType::Rgba, &self.rgba)
    }

    pub fn write_png(&self, path: &Path) -> Result<(), ImageError> {
        std::fs::write(path, self.encode_png()?)?;
        Ok(())
    }

    pub fn write_preview_png(&self, path: &Path) -> Result<(), ImageError> {
        let bytes = encode(self.width, self.height, png::ColorType::Rgb, &self.composite_over_white())?;
        std::fs::write(path, bytes)?;
        Ok(())
    }

    /// Decodes an 8-bit RGBA or RGB PNG (RGB is treated as fully opaque).
    pub fn decode_png(bytes: &[u8]) -> Result<ImageBuffer, ImageError> {
        let mut reader = png::Decoder::new(Cursor::new(bytes)).read_info()?;
        let size = reader
            .output_buffer_size()
            .ok_or_else(|| ImageError::Layout("image too large".into()))?;
        let mut buf = vec![0; size];
        let info = reader.next_frame(&mut buf)?;
        if info.bit_depth != png::BitDepth::Eight {
            return Err(ImageError::Layout(format!("bit depth {:?}", info.bit_depth)));
        }
        let n = info.width as usize * info.height as usize;
        let rgba = match info.color_type {
            png::ColorType::Rgba => buf[..n * 4].to_vec(),
            png::ColorType::Rgb => buf[..n * 3].chunks_exact(3).flat_map(|p| [p[0], p[1], p[2], 255]).collect(),
            other => return Err(ImageError::Layout(format!("color type {other:?}"))),
        };
        Ok(ImageBuffer::from_rgba(info.width, info.height, rgba))
    }

    pub fn read_png(path: &Path) -> Result<ImageBuffer, ImageError> {
        ImageBuffer::decode_png(&std::fs::read(path)?)
    }
}

fn encode(width: u32, height: u32, color: png::ColorType, data: &[u8]) -> Result<Vec<u8>, ImageError> {
    let mut out = Vec::new();
    {
        let mut enc = png::Encoder::new(&mut out, width, height);
        enc.set_color(color);
        enc.set_depth(png::BitDepth::Eight);
        let mut w = enc.write_header()?;
        w.write_image_data(data)?;
    }
    Ok(out)
}
