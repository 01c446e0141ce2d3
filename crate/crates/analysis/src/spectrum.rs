use std::f64::consts::PI;

use crate::{AnalysisError, Result};

pub const MAX_PLANE: usize = 64;

/// Power averaged over integer-radius annuli around zero frequency.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialSpectrum {
    pub radii: Vec<f64>,
    pub power: Vec<f64>,
    /// Number of frequency bins in each annulus.
    pub counts: Vec<usize>,
    pub dc: f64,
}

impl RadialSpectrum {
    /// Sum of power over every frequency bin.
    pub fn total_power(&self) -> f64 {
        self.dc + self.power.iter().zip(&self.counts).map(|(p, c)| p * *c as f64).sum::<f64>()
    }
}

fn twiddles(n: usize) -> (Vec<f64>, Vec<f64>) {
    (0..n * n)
        .map(|i| {
            let a = -2.0 * PI * ((i / n) * (i % n) % n) as f64 / n as f64;
            (a.cos(), a.sin())
        })
        .unzip()
}

/// Orthonormal 2D DFT of a `height`×`width` plane (row-major), no window.
pub fn radial_power_spectrum(plane: &[f64], height: usize, width: usize) -> Result<RadialSpectrum> {
    if height == 0 || width == 0 {
        return Err(AnalysisError::Empty("plane"));
    }
    if height > MAX_PLANE || width > MAX_PLANE {
        return Err(AnalysisError::PlaneTooLarge { height, width, max: MAX_PLANE });
    }
    if plane.len() != height * width {
        return Err(AnalysisError::LengthMismatch { left: plane.len(), right: height * width });
    }
    let (cw, sw) = twiddles(width);
    let (ch, sh) = twiddles(height);
    // Rows first, then columns.
    let mut re = vec![0.0; height * width];
    let mut im = vec![0.0; height * width];
    for y in 0..height {
        for v in 0..width {
            let (mut a, mut b) = (0.0, 0.0);
            for x in 0..width {
                let p = plane[y * width + x];
                a += p * cw[v * width + x];
                b += p * sw[v * width + x];
            }
            re[y * width + v] = a;
            im[y * width + v] = b;
        }
    }
    let norm = 1.0 / (height * width) as f64;
    let mut power = vec![0.0; height * width];
    for v in 0..width {
        for u in 0..height {
            let (mut a, mut b) = (0.0, 0.0);
            for y in 0..height {
                let (c, s) = (ch[u * height + y], sh[u * height + y]);
                let (r, i) = (re[y * width + v], im[y * width + v]);
                a += r * c - i * s;
                b += r * s + i * c;
            }
            power[u * width + v] = (a * a + b * b) * norm;
        }
    }

    let signed = |k: usize, n: usize| if k < n.div_ceil(2) { k as f64 } else { k as f64 - n as f64 };
    let rmax = ((height / 2).pow(2) as f64 + (width / 2).pow(2) as f64).sqrt().round() as usize;
    let mut sums = vec![0.0; rmax + 1];
    let mut counts = vec![0usize; rmax + 1];
    for u in 0..height {
        for v in 0..width {
            if u == 0 && v == 0 {
                continue;
            }
            let r = signed(u, height).hypot(signed(v, width)).round() as usize;
            sums[r] += power[u * width + v];
            counts[r] += 1;
        }
    }
    let mut spec = RadialSpectrum { radii: vec![], power: vec![], counts: vec![], dc: power[0] };
    for r in 1..=rmax {
        if counts[r] > 0 {
            spec.radii.push(r as f64);
            spec.power.push(sums[r] / counts[r] as f64);
            spec.counts.push(counts[r]);
        }
    }
    Ok(spec)
}
