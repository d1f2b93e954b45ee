//! Square-window statistics over mirror-extended single-channel maps.

use rayon::prelude::*;

use crate::image::mirror_index;

/// Summed-area table of a map padded by `radius` on every side with
/// half-sample mirroring, so every `(2r+1)^2` window inside the image is a
/// four-corner lookup.
pub struct SummedArea {
    radius: usize,
    stride: usize,
    table: Vec<f64>,
}

impl SummedArea {
    pub fn new(values: &[f64], width: usize, height: usize, radius: usize) -> Self {
        let pw = width + 2 * radius;
        let ph = height + 2 * radius;
        let stride = pw + 1;
        let mut table = vec![0.0; (ph + 1) * stride];
        let r = radius as isize;
        for y in 0..ph {
            let src_row = mirror_index(y as isize - r, height) * width;
            let mut run = 0.0;
            for x in 0..pw {
                run += values[src_row + mirror_index(x as isize - r, width)];
                table[(y + 1) * stride + x + 1] = table[y * stride + x + 1] + run;
            }
        }
        Self {
            radius,
            stride,
            table,
        }
    }

    /// Sum over the window of radius `radius` centered at image pixel `(i, j)`.
    #[inline]
    pub fn window_sum(&self, i: usize, j: usize) -> f64 {
        let k = 2 * self.radius + 1;
        let (y0, x0) = (i, j);
        let (y1, x1) = (i + k, j + k);
        let s = self.stride;
        self.table[y1 * s + x1] - self.table[y0 * s + x1] - self.table[y1 * s + x0]
            + self.table[y0 * s + x0]
    }
}

/// Mean over every `(2r+1)^2` mirror-extended window.
pub fn box_mean(values: &[f64], width: usize, height: usize, radius: usize) -> Vec<f64> {
    let sat = SummedArea::new(values, width, height, radius);
    let n = ((2 * radius + 1) * (2 * radius + 1)) as f64;
    let mut out = vec![0.0; width * height];
    out.par_chunks_mut(width).enumerate().for_each(|(i, row)| {
        for (j, o) in row.iter_mut().enumerate() {
            *o = sat.window_sum(i, j) / n;
        }
    });
    out
}

/// Windowed population variance, floored at zero.
pub fn box_variance(values: &[f64], width: usize, height: usize, radius: usize) -> Vec<f64> {
    let mean = box_mean(values, width, height, radius);
    let sq: Vec<f64> = values.iter().map(|v| v * v).collect();
    let mean_sq = box_mean(&sq, width, height, radius);
    mean.iter()
        .zip(&mean_sq)
        .map(|(m, m2)| (m2 - m * m).max(0.0))
        .collect()
}
