use crate::error::{ImageError, Result};

/// Height × width × channels image with interleaved 8-bit samples.
///
/// Three channels mean RGB, one channel means luma.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ImageU8 {
    height: usize,
    width: usize,
    channels: usize,
    data: Vec<u8>,
}

impl ImageU8 {
    pub fn new(height: usize, width: usize, channels: usize, data: Vec<u8>) -> Result<Self> {
        if height == 0 || width == 0 {
            return Err(ImageError::Dimensions(format!("{height}x{width}")));
        }
        if channels != 1 && channels != 3 {
            return Err(ImageError::Dimensions(format!("{channels} channels (must be 1 or 3)")));
        }
        if data.len() != height * width * channels {
            return Err(ImageError::Dimensions(format!(
                "{height}x{width}x{channels} needs {} bytes, got {}",
                height * width * channels,
                data.len()
            )));
        }
        Ok(Self { height, width, channels, data })
    }

    pub fn filled(height: usize, width: usize, channels: usize, value: u8) -> Result<Self> {
        Self::new(height, width, channels, vec![value; height * width * channels])
    }

    /// A three-channel image with every pixel set to `rgb`.
    pub fn solid_rgb(height: usize, width: usize, rgb: [u8; 3]) -> Result<Self> {
        let data = rgb.iter().copied().cycle().take(height * width * 3).collect();
        Self::new(height, width, 3, data)
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [u8] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<u8> {
        self.data
    }

    pub fn pixel_count(&self) -> usize {
        self.height * self.width
    }

    #[inline]
    fn offset(&self, y: usize, x: usize) -> usize {
        (y * self.width + x) * self.channels
    }

    #[inline]
    pub fn pixel(&self, y: usize, x: usize) -> &[u8] {
        let o = self.offset(y, x);
        &self.data[o..o + self.channels]
    }

    #[inline]
    pub fn pixel_mut(&mut self, y: usize, x: usize) -> &mut [u8] {
        let o = self.offset(y, x);
        let c = self.channels;
        &mut self.data[o..o + c]
    }

    #[inline]
    pub fn get(&self, y: usize, x: usize, c: usize) -> u8 {
        self.data[self.offset(y, x) + c]
    }

    pub fn require_channels(&self, expected: usize) -> Result<()> {
        if self.channels == expected {
            Ok(())
        } else {
            Err(ImageError::Channels { expected, actual: self.channels })
        }
    }

    /// Single plane `c` as a one-channel image.
    pub fn channel(&self, c: usize) -> Result<ImageU8> {
        if c >= self.channels {
            return Err(ImageError::Channels { expected: c + 1, actual: self.channels });
        }
        let data = self.data.iter().skip(c).step_by(self.channels).copied().collect();
        ImageU8::new(self.height, self.width, 1, data)
    }

    /// Interleave equally sized one-channel planes.
    pub fn from_planes(planes: &[&ImageU8]) -> Result<ImageU8> {
        let first = planes
            .first()
            .ok_or_else(|| ImageError::Dimensions("no planes to merge".into()))?;
        for p in planes {
            p.require_channels(1)?;
            if p.height != first.height || p.width != first.width {
                return Err(ImageError::Dimensions("planes differ in size".into()));
            }
        }
        let n = first.pixel_count();
        let mut data = Vec::with_capacity(n * planes.len());
        for i in 0..n {
            data.extend(planes.iter().map(|p| p.data[i]));
        }
        ImageU8::new(first.height, first.width, planes.len(), data)
    }

    /// Copy of the rectangle `[y0, y0 + h) × [x0, x0 + w)`.
    pub fn sub_image(&self, y0: usize, x0: usize, h: usize, w: usize) -> Result<ImageU8> {
        if h == 0 || w == 0 || y0 + h > self.height || x0 + w > self.width {
            return Err(ImageError::Dimensions(format!(
                "rectangle {h}x{w} at ({y0}, {x0}) outside {}x{}",
                self.height, self.width
            )));
        }
        let mut data = Vec::with_capacity(h * w * self.channels);
        for y in y0..y0 + h {
            let start = self.offset(y, x0);
            data.extend_from_slice(&self.data[start..start + w * self.channels]);
        }
        ImageU8::new(h, w, self.channels, data)
    }
}
