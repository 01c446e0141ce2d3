//! Block-DCT quantization standing in for JPEG.

/// Standard JPEG luminance quantization table (quality 50), row-major.
pub const LUMINANCE_TABLE: [u16; 64] = [
    16, 11, 10, 16, 24, 40, 51, 61, //
    12, 12, 14, 19, 26, 58, 60, 55, //
    14, 13, 16, 24, 40, 57, 69, 56, //
    14, 17, 22, 29, 51, 87, 80, 62, //
    18, 22, 37, 56, 68, 109, 103, 77, //
    24, 35, 55, 64, 81, 104, 113, 92, //
    49, 64, 78, 87, 103, 121, 120, 101, //
    72, 92, 95, 98, 112, 100, 103, 99,
];

/// Quality-scaled table for a `block`×`block` transform. Blocks of 4 take
/// every second frequency of the 8×8 table.
pub fn quality_table(block: usize, quality: u32) -> Vec<f64> {
    let q = quality.clamp(1, 100);
    let scale = if q < 50 { 5000 / q } else { 200 - 2 * q };
    let stride = 8 / block;
    let mut t = Vec::with_capacity(block * block);
    for u in 0..block {
        for v in 0..block {
            let base = u32::from(LUMINANCE_TABLE[u * stride * 8 + v * stride]);
            t.push(((base * scale + 50) / 100).clamp(1, 255) as f64);
        }
    }
    t
}

/// Orthonormal DCT-II basis, `c[k*n + i] = a_k cos(π(2i+1)k / 2n)`.
fn basis(n: usize) -> Vec<f64> {
    let mut c = vec![0.0; n * n];
    for k in 0..n {
        let a = if k == 0 { (1.0 / n as f64).sqrt() } else { (2.0 / n as f64).sqrt() };
        for i in 0..n {
            c[k * n + i] = a * (std::f64::consts::PI * (2 * i + 1) as f64 * k as f64 / (2 * n) as f64).cos();
        }
    }
    c
}

/// Quantizes one plane in place. Pixels are taken to the 8-bit level scale
/// (×127.5) before the transform, as the table assumes.
pub(crate) fn compress_plane(plane: &mut [f64], width: usize, block: usize, table: &[f64]) {
    let height = plane.len() / width;
    let c = basis(block);
    let n = block;
    let mut blk = vec![0.0; n * n];
    let mut tmp = vec![0.0; n * n];
    for by in (0..height).step_by(n) {
        for bx in (0..width).step_by(n) {
            for i in 0..n {
                for j in 0..n {
                    blk[i * n + j] = plane[(by + i) * width + bx + j] * 127.5;
                }
            }
            // Forward: C · B · Cᵀ.
            for k in 0..n {
                for j in 0..n {
                    tmp[k * n + j] = (0..n).map(|i| c[k * n + i] * blk[i * n + j]).sum();
                }
            }
            for k in 0..n {
                for l in 0..n {
                    let f: f64 = (0..n).map(|j| tmp[k * n + j] * c[l * n + j]).sum();
                    let t = table[k * n + l];
                    blk[k * n + l] = (f / t).round() * t;
                }
            }
            // Inverse: Cᵀ · F · C.
            for i in 0..n {
                for l in 0..n {
                    tmp[i * n + l] = (0..n).map(|k| c[k * n + i] * blk[k * n + l]).sum();
                }
            }
            for i in 0..n {
                for j in 0..n {
                    let v: f64 = (0..n).map(|l| tmp[i * n + l] * c[l * n + j]).sum();
                    plane[(by + i) * width + bx + j] = (v / 127.5).clamp(-1.0, 1.0);
                }
            }
        }
    }
}
