//! Distance transforms over binary masks.

use super::SegMask;

/// Sentinel for "no occupied pixel anywhere".
pub const FAR: u32 = u32::MAX / 2;

/// Exact chessboard (L-infinity) distance to the nearest occupied pixel,
/// by two raster passes over the 8-neighbourhood with unit weights.
pub fn chessboard_distance(mask: &SegMask) -> Vec<u32> {
    let (w, h) = (mask.width, mask.height);
    let mut d: Vec<u32> = mask.data.iter().map(|&v| if v != 0 { 0 } else { FAR }).collect();
    if w == 0 || h == 0 {
        return d;
    }
    for y in 0..h {
        for x in 0..w {
            let i = y * w + x;
            let mut best = d[i];
            if best == 0 {
                continue;
            }
            if x > 0 {
                best = best.min(d[i - 1] + 1);
            }
            if y > 0 {
                let up = i - w;
                best = best.min(d[up] + 1);
                if x > 0 {
                    best = best.min(d[up - 1] + 1);
                }
                if x + 1 < w {
                    best = best.min(d[up + 1] + 1);
                }
            }
            d[i] = best;
        }
    }
    for y in (0..h).rev() {
        for x in (0..w).rev() {
            let i = y * w + x;
            let mut best = d[i];
            if best == 0 {
                continue;
            }
            if x + 1 < w {
                best = best.min(d[i + 1] + 1);
            }
            if y + 1 < h {
                let down = i + w;
                best = best.min(d[down] + 1);
                if x + 1 < w {
                    best = best.min(d[down + 1] + 1);
                }
                if x > 0 {
                    best = best.min(d[down - 1] + 1);
                }
            }
            d[i] = best;
        }
    }
    d
}

#[inline]
fn parabola_intersection(f: &[f64], p: usize, q: usize) -> f64 {
    ((f[q] + (q * q) as f64) - (f[p] + (p * p) as f64)) / (2.0 * (q as f64 - p as f64))
}

/// One-dimensional squared distance transform of a sampled function
/// (lower envelope of parabolas), written into `out`.
fn edt_1d(f: &[f64], out: &mut [f64], v: &mut [usize], z: &mut [f64]) {
    let n = f.len();
    let mut k = 0usize;
    v[0] = 0;
    z[0] = f64::NEG_INFINITY;
    z[1] = f64::INFINITY;
    for q in 1..n {
        let mut s = parabola_intersection(f, v[k], q);
        while s <= z[k] {
            k -= 1;
            s = parabola_intersection(f, v[k], q);
        }
        k += 1;
        v[k] = q;
        z[k] = s;
        z[k + 1] = f64::INFINITY;
    }
    k = 0;
    for (q, o) in out.iter_mut().enumerate() {
        while z[k + 1] < q as f64 {
            k += 1;
        }
        let dq = q as f64 - v[k] as f64;
        *o = dq * dq + f[v[k]];
    }
}

/// Exact squared Euclidean distance to the nearest occupied pixel, in
/// linear time (separable lower-envelope method). Pixels of a mask with no
/// occupied pixel get `f64::INFINITY`.
pub fn euclidean_distance_squared(mask: &SegMask) -> Vec<f64> {
    let (w, h) = (mask.width, mask.height);
    if mask.is_empty() {
        return vec![f64::INFINITY; w * h];
    }
    // Large but finite so the parabola intersections stay well defined.
    let inf = 1e20;
    let mut grid: Vec<f64> = mask.data.iter().map(|&v| if v != 0 { 0.0 } else { inf }).collect();
    let n = w.max(h);
    let mut f = vec![0.0; n];
    let mut out = vec![0.0; n];
    let mut v = vec![0usize; n];
    let mut z = vec![0.0; n + 1];
    for x in 0..w {
        for y in 0..h {
            f[y] = grid[y * w + x];
        }
        edt_1d(&f[..h], &mut out[..h], &mut v, &mut z);
        for y in 0..h {
            grid[y * w + x] = out[y];
        }
    }
    for y in 0..h {
        let row = &mut grid[y * w..(y + 1) * w];
        f[..w].copy_from_slice(row);
        edt_1d(&f[..w], &mut out[..w], &mut v, &mut z);
        row.copy_from_slice(&out[..w]);
    }
    grid
}

/// Pixels where the 4-neighbour discrete Laplacian of the mask is nonzero,
/// i.e. both sides of every boundary. Neighbours outside the image take
/// the value of the border pixel, so the frame edge is not an edge.
pub fn laplacian_edges(mask: &SegMask) -> SegMask {
    let (w, h) = (mask.width, mask.height);
    let mut out = SegMask::empty(w, h, mask.class);
    let val = |x: usize, y: usize| mask.data[y * w + x] as i32;
    for y in 0..h {
        for x in 0..w {
            let c = val(x, y);
            let l = val(x.saturating_sub(1), y);
            let r = val((x + 1).min(w - 1), y);
            let u = val(x, y.saturating_sub(1));
            let d = val(x, (y + 1).min(h - 1));
            if l + r + u + d - 4 * c != 0 {
                out.data[y * w + x] = 1;
            }
        }
    }
    out
}
