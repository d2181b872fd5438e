use num_complex::Complex64;

use crate::error::{Error, Result};

/// Rank-3 complex array `(channels, height, width)`, row-major, stored as
/// separate real and imaginary planes.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexTensor {
    pub channels: usize,
    pub height: usize,
    pub width: usize,
    pub re: Vec<f64>,
    pub im: Vec<f64>,
}

impl ComplexTensor {
    pub fn zeros(channels: usize, height: usize, width: usize) -> Self {
        let n = channels * height * width;
        Self { channels, height, width, re: vec![0.0; n], im: vec![0.0; n] }
    }

    pub fn from_complex(channels: usize, height: usize, width: usize, values: &[Complex64]) -> Result<Self> {
        if values.len() != channels * height * width {
            return Err(Error::DimensionMismatch(format!(
                "{} values for a {channels}x{height}x{width} tensor",
                values.len()
            )));
        }
        Ok(Self {
            channels,
            height,
            width,
            re: values.iter().map(|v| v.re).collect(),
            im: values.iter().map(|v| v.im).collect(),
        })
    }

    pub fn len(&self) -> usize {
        self.re.len()
    }

    pub fn is_empty(&self) -> bool {
        self.re.is_empty()
    }

    pub fn plane_len(&self) -> usize {
        self.height * self.width
    }

    #[inline]
    pub fn get(&self, c: usize, y: usize, x: usize) -> Complex64 {
        let i = (c * self.height + y) * self.width + x;
        Complex64::new(self.re[i], self.im[i])
    }

    #[inline]
    pub fn set(&mut self, c: usize, y: usize, x: usize, v: Complex64) {
        let i = (c * self.height + y) * self.width + x;
        self.re[i] = v.re;
        self.im[i] = v.im;
    }

    pub fn to_complex(&self) -> Vec<Complex64> {
        self.re.iter().zip(&self.im).map(|(&r, &i)| Complex64::new(r, i)).collect()
    }

    pub fn same_shape(&self, other: &ComplexTensor) -> bool {
        (self.channels, self.height, self.width) == (other.channels, other.height, other.width)
    }
}

/// Rank-3 real array `(channels, height, width)`, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct RealTensor {
    pub channels: usize,
    pub height: usize,
    pub width: usize,
    pub data: Vec<f64>,
}

impl RealTensor {
    pub fn zeros(channels: usize, height: usize, width: usize) -> Self {
        Self { channels, height, width, data: vec![0.0; channels * height * width] }
    }

    pub fn plane_len(&self) -> usize {
        self.height * self.width
    }

    #[inline]
    pub fn get(&self, c: usize, y: usize, x: usize) -> f64 {
        self.data[(c * self.height + y) * self.width + x]
    }

    pub fn same_shape(&self, other: &RealTensor) -> bool {
        (self.channels, self.height, self.width) == (other.channels, other.height, other.width)
    }
}
