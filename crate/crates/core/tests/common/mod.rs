//! Brute-force reference implementations shared by the integration tests.
//! Each one is written from the defining formula, with its own boundary
//! handling, and shares no code with the library beyond `PlanarImage`.

#![allow(dead_code)]

use std::collections::BTreeMap;
use std::f64::consts::PI;

use msdehaze::PlanarImage;

/// xorshift64* stream for test fixtures.
pub struct Rng(u64);

impl Rng {
    pub fn new(seed: u64) -> Self {
        Self(seed.wrapping_mul(0x9E37_79B9_7F4A_7C15) | 1)
    }

    pub fn next_u64(&mut self) -> u64 {
        self.0 ^= self.0 >> 12;
        self.0 ^= self.0 << 25;
        self.0 ^= self.0 >> 27;
        self.0.wrapping_mul(0x2545_F491_4F6C_DD1D)
    }

    pub fn unit(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 / (1u64 << 53) as f64
    }

    pub fn range(&mut self, lo: usize, hi: usize) -> usize {
        lo + (self.next_u64() % (hi - lo + 1) as u64) as usize
    }

    pub fn image(&mut self, w: usize, h: usize, c: usize) -> PlanarImage {
        PlanarImage::from_fn(w, h, c, |_, _, _| self.unit())
    }
}

/// Flat `cell x cell` patches of random color, one channel near zero, so
/// that haze lines collect many pixels.
pub fn flat_cells(w: usize, h: usize, cell: usize, seed: u64) -> PlanarImage {
    let mut rng = Rng::new(seed);
    let cols = w.div_ceil(cell);
    let colors: Vec<[f64; 3]> = (0..cols * h.div_ceil(cell))
        .map(|_| {
            let dark = rng.range(0, 2);
            let mut c = [0.0; 3];
            for (k, v) in c.iter_mut().enumerate() {
                *v = if k == dark {
                    0.05 * rng.unit()
                } else {
                    0.3 + 0.6 * rng.unit()
                };
            }
            c
        })
        .collect();
    PlanarImage::from_fn(w, h, 3, |i, j, c| colors[(i / cell) * cols + j / cell][c])
}

/// Half-sample symmetric reflection: `.. 1 0 | 0 1 .. n-1 | n-1 n-2 ..`.
pub fn reflect(i: isize, n: usize) -> usize {
    let n = n as isize;
    let mut k = i.rem_euclid(2 * n);
    if k >= n {
        k = 2 * n - 1 - k;
    }
    k as usize
}

const W: [f64; 3] = [0.25, 0.5, 0.25];

pub fn reduce(img: &PlanarImage) -> PlanarImage {
    let (h, w) = img.dims();
    PlanarImage::from_fn(w.div_ceil(2), h.div_ceil(2), img.channels(), |i, j, c| {
        let mut s = 0.0;
        for m in -1..=1isize {
            for n in -1..=1isize {
                let y = reflect(2 * i as isize + m, h);
                let x = reflect(2 * j as isize + n, w);
                s += W[(m + 1) as usize] * W[(n + 1) as usize] * img.get(y, x, c);
            }
        }
        s
    })
}

/// `4 * sum w(m) w(n) g((i-m)/2, (j-n)/2)` over terms with integer indices.
pub fn expand(img: &PlanarImage, th: usize, tw: usize) -> PlanarImage {
    let (h, w) = img.dims();
    PlanarImage::from_fn(tw, th, img.channels(), |i, j, c| {
        let mut s = 0.0;
        for m in -1..=1isize {
            for n in -1..=1isize {
                let (y, x) = (i as isize - m, j as isize - n);
                if y.rem_euclid(2) != 0 || x.rem_euclid(2) != 0 {
                    continue;
                }
                s += 4.0
                    * W[(m + 1) as usize]
                    * W[(n + 1) as usize]
                    * img.get(reflect(y / 2, h), reflect(x / 2, w), c);
            }
        }
        s
    })
}

pub fn dark_channel(img: &PlanarImage, rho: usize) -> PlanarImage {
    let (h, w) = img.dims();
    let r = rho as isize;
    PlanarImage::from_fn(w, h, 1, |i, j, _| {
        let mut m = f64::INFINITY;
        for di in -r..=r {
            for dj in -r..=r {
                for c in 0..img.channels() {
                    m = m.min(img.get(reflect(i as isize + di, h), reflect(j as isize + dj, w), c));
                }
            }
        }
        m
    })
}

/// Clustering and averaging from scratch: bins by angle, raster-order
/// balanced split, `t = r sum(t0) / sum(r)`, clamp to `[1/255, 1]`.
pub fn haze_line_average(
    img: &PlanarImage,
    a: [f64; 3],
    t0: &[f64],
    step: f64,
    nu: usize,
    r_min: f64,
) -> Vec<f64> {
    let (h, w) = img.dims();
    let psi_bins = (PI / step).round() as usize;
    let theta_bins = 2 * psi_bins;
    let mut radius = vec![0.0; w * h];
    let mut groups: BTreeMap<(usize, usize), Vec<usize>> = BTreeMap::new();
    for i in 0..h {
        for j in 0..w {
            let p = i * w + j;
            let d: Vec<f64> = (0..3).map(|c| img.get(i, j, c) - a[c]).collect();
            let r = (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt();
            radius[p] = r;
            if r == 0.0 || r < r_min {
                continue;
            }
            let mut theta = d[1].atan2(d[0]);
            if theta < 0.0 {
                theta += 2.0 * PI;
            }
            let psi = (d[2] / r).clamp(-1.0, 1.0).acos();
            let tb = ((theta / step).floor() as usize).min(theta_bins - 1);
            let pb = ((psi / step).floor() as usize).min(psi_bins - 1);
            groups.entry((tb, pb)).or_default().push(p);
        }
    }
    let mut out: Vec<f64> = t0.to_vec();
    for members in groups.values() {
        let n = members.len();
        let parts = n.div_ceil(nu);
        let mut start = 0;
        for s in 0..parts {
            let size = n / parts + usize::from(s < n % parts);
            let chunk = &members[start..start + size];
            let st: f64 = chunk.iter().map(|&p| t0[p]).sum();
            let sr: f64 = chunk.iter().map(|&p| radius[p]).sum();
            for &p in chunk {
                out[p] = radius[p] * st / sr;
            }
            start += size;
        }
    }
    out.iter().map(|v| v.clamp(1.0 / 255.0, 1.0)).collect()
}

/// Solves the 2x2 normal equations of
/// `sum_W Gamma_k (a G + b - t)^2 + lambda a^2` for every window, then
/// averages the coefficients of the windows covering each pixel.
pub fn wgif(t: &[f64], g: &[f64], w: usize, h: usize, rho: usize, lambda: f64) -> Vec<f64> {
    let at = |v: &[f64], i: isize, j: isize| v[reflect(i, h) * w + reflect(j, w)];
    let eps = 1e-6;
    let mut var3 = vec![0.0; w * h];
    for i in 0..h as isize {
        for j in 0..w as isize {
            let vals: Vec<f64> = (-1..=1)
                .flat_map(|di| (-1..=1).map(move |dj| (di, dj)))
                .map(|(di, dj)| at(g, i + di, j + dj))
                .collect();
            let m = vals.iter().sum::<f64>() / 9.0;
            var3[i as usize * w + j as usize] =
                vals.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / 9.0;
        }
    }
    let inv_mean = var3.iter().map(|v| 1.0 / (v + eps)).sum::<f64>() / (w * h) as f64;

    let r = rho as isize;
    let n = ((2 * rho + 1) * (2 * rho + 1)) as f64;
    let mut a = vec![0.0; w * h];
    let mut b = vec![0.0; w * h];
    for i in 0..h as isize {
        for j in 0..w as isize {
            let k = i as usize * w + j as usize;
            let gamma = (var3[k] + eps) * inv_mean;
            let (mut sg, mut st, mut sgg, mut sgt) = (0.0, 0.0, 0.0, 0.0);
            for di in -r..=r {
                for dj in -r..=r {
                    let (gv, tv) = (at(g, i + di, j + dj), at(t, i + di, j + dj));
                    sg += gv;
                    st += tv;
                    sgg += gv * gv;
                    sgt += gv * tv;
                }
            }
            // [gamma sgg + n lambda, gamma sg; gamma sg, gamma n] [a; b] = gamma [sgt; st]
            let (m11, m12, m22) = (gamma * sgg + n * lambda, gamma * sg, gamma * n);
            let (r1, r2) = (gamma * sgt, gamma * st);
            let det = m11 * m22 - m12 * m12;
            if det.abs() > 1e-300 {
                a[k] = (r1 * m22 - m12 * r2) / det;
                b[k] = (m11 * r2 - m12 * r1) / det;
            } else {
                a[k] = 0.0;
                b[k] = st / n;
            }
        }
    }
    let mut out = vec![0.0; w * h];
    for i in 0..h as isize {
        for j in 0..w as isize {
            let (mut sa, mut sb) = (0.0, 0.0);
            for di in -r..=r {
                for dj in -r..=r {
                    sa += at(&a, i + di, j + dj);
                    sb += at(&b, i + di, j + dj);
                }
            }
            let k = i as usize * w + j as usize;
            out[k] = (sa / n * g[k] + sb / n).clamp(1.0 / 255.0, 1.0);
        }
    }
    out
}

pub fn max_abs(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}
