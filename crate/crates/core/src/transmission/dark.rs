//! Dark channel: minimum over a square window and over color channels.

use rayon::prelude::*;

use crate::image::{mirror_index, PlanarImage};

/// Running minimum of width `2r+1` over a mirror-extended line, in O(1)
/// amortized comparisons per sample (van Herk / Gil-Werman).
pub fn sliding_min(line: &[f64], radius: usize) -> Vec<f64> {
    let n = line.len();
    if radius == 0 || n == 0 {
        return line.to_vec();
    }
    let k = 2 * radius + 1;
    let len = n + 2 * radius;
    let padded: Vec<f64> = (0..len)
        .map(|x| line[mirror_index(x as isize - radius as isize, n)])
        .collect();

    let mut prefix = vec![0.0; len];
    let mut suffix = vec![0.0; len];
    for x in 0..len {
        prefix[x] = if x % k == 0 {
            padded[x]
        } else {
            prefix[x - 1].min(padded[x])
        };
    }
    for x in (0..len).rev() {
        suffix[x] = if x == len - 1 || (x + 1) % k == 0 {
            padded[x]
        } else {
            suffix[x + 1].min(padded[x])
        };
    }
    (0..n).map(|x| suffix[x].min(prefix[x + k - 1])).collect()
}

/// Separable square-window minimum of one plane.
pub fn min_filter(plane: &[f64], width: usize, height: usize, radius: usize) -> Vec<f64> {
    let mut rows = vec![0.0; width * height];
    rows.par_chunks_mut(width)
        .zip(plane.par_chunks(width))
        .for_each(|(out, src)| out.copy_from_slice(&sliding_min(src, radius)));

    let mut cols = vec![0.0; width * height];
    let col_mins: Vec<Vec<f64>> = (0..width)
        .into_par_iter()
        .map(|j| {
            let col: Vec<f64> = (0..height).map(|i| rows[i * width + j]).collect();
            sliding_min(&col, radius)
        })
        .collect();
    for (j, col) in col_mins.iter().enumerate() {
        for (i, &v) in col.iter().enumerate() {
            cols[i * width + j] = v;
        }
    }
    cols
}

/// Per-pixel minimum over channels.
pub fn channel_min(img: &PlanarImage) -> Vec<f64> {
    let mut out = img.plane(0).to_vec();
    for c in 1..img.channels() {
        for (o, &v) in out.iter_mut().zip(img.plane(c)) {
            *o = o.min(v);
        }
    }
    out
}

/// `min` over the `(2 rho + 1)^2` mirror-extended window and over channels.
pub fn dark_channel(img: &PlanarImage, rho: usize) -> PlanarImage {
    let mins = channel_min(img);
    let data = min_filter(&mins, img.width(), img.height(), rho);
    PlanarImage::from_planar(img.width(), img.height(), 1, data).expect("sizes agree")
}
