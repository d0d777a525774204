use rayon::prelude::*;

use super::{check_dims, BlendError, Image};
use crate::mask::BinaryMask;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CloneOptions {
    /// Stop once the largest absolute residual is at most this.
    pub tol: f64,
    /// Conjugate-gradient iterations per channel; `None` means ten times the
    /// number of masked pixels.
    pub max_iter: Option<usize>,
}

impl Default for CloneOptions {
    fn default() -> Self {
        CloneOptions { tol: 1e-6, max_iter: None }
    }
}

struct System {
    // pixel index of each unknown
    pixels: Vec<usize>,
    // unknown index of each 4-neighbour, or None for a boundary pixel
    neighbours: Vec<[Option<usize>; 4]>,
    neighbour_pixels: Vec<[usize; 4]>,
}

impl System {
    fn new(mask: &BinaryMask) -> System {
        let (w, h) = (mask.width() as usize, mask.height() as usize);
        let mut index = vec![usize::MAX; w * h];
        let mut pixels = Vec::new();
        for (x, y) in mask.ink_pixels() {
            let p = y as usize * w + x as usize;
            index[p] = pixels.len();
            pixels.push(p);
        }
        let neighbour_pixels: Vec<[usize; 4]> = pixels.iter().map(|&p| [p - 1, p + 1, p - w, p + w]).collect();
        let neighbours = neighbour_pixels.iter().map(|n| n.map(|q| (index[q] != usize::MAX).then_some(index[q]))).collect();
        System { pixels, neighbours, neighbour_pixels }
    }

    fn apply(&self, x: &[f64], out: &mut [f64]) {
        out.par_iter_mut().enumerate().for_each(|(i, o)| {
            let mut v = 4.0 * x[i];
            for n in self.neighbours[i].iter().flatten() {
                v -= x[*n];
            }
            *o = v;
        });
    }

    fn rhs(&self, src: &[f64], dst: &[f64]) -> Vec<f64> {
        (0..self.pixels.len())
            .map(|i| {
                let p = self.pixels[i];
                let mut b = 0.0;
                for (k, &q) in self.neighbour_pixels[i].iter().enumerate() {
                    b += src[p] - src[q];
                    if self.neighbours[i][k].is_none() {
                        b += dst[q];
                    }
                }
                b
            })
            .collect()
    }

    fn residual(&self, x: &[f64], b: &[f64], scratch: &mut [f64]) -> f64 {
        self.apply(x, scratch);
        scratch.iter_mut().zip(b).for_each(|(s, bi)| *s = bi - *s);
        scratch.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.par_iter().zip(b).map(|(x, y)| x * y).sum()
}

// Conjugate gradient from `x`; returns the final true max-abs residual and
// the iteration count.
fn solve_cg(sys: &System, b: &[f64], x: &mut [f64], tol: f64, max_iter: usize) -> (f64, usize) {
    let n = b.len();
    let mut r = vec![0.0; n];
    let mut res = sys.residual(x, b, &mut r);
    if res <= tol {
        return (res, 0);
    }
    let mut p = r.clone();
    let mut ap = vec![0.0; n];
    let mut rr = dot(&r, &r);
    let mut iterations = 0;
    while iterations < max_iter {
        sys.apply(&p, &mut ap);
        let pap = dot(&p, &ap);
        if pap <= 0.0 {
            break;
        }
        let alpha = rr / pap;
        x.par_iter_mut().zip(&p).for_each(|(xi, pi)| *xi += alpha * pi);
        r.par_iter_mut().zip(&ap).for_each(|(ri, api)| *ri -= alpha * api);
        iterations += 1;
        let approx = r.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if approx <= tol {
            // the recursive residual drifts; confirm against the true one
            res = sys.residual(x, b, &mut r);
            if res <= tol {
                return (res, iterations);
            }
            p.copy_from_slice(&r);
            rr = dot(&r, &r);
            continue;
        }
        let rr_new = dot(&r, &r);
        let beta = rr_new / rr;
        rr = rr_new;
        p.par_iter_mut().zip(&r).for_each(|(pi, ri)| *pi = ri + beta * *pi);
    }
    (sys.residual(x, b, &mut r), iterations)
}

/// Poisson image editing with the source-gradient guidance field: inside
/// `mask` the result has the discrete Laplacian of `src` and matches `dst`
/// on the surrounding ring; outside `mask` it is `dst` unchanged.
///
/// Each channel is solved with conjugate gradient on the 5-point
/// Laplacian system. The returned image is clamped to `[0, 1]`.
pub fn seamless_clone(src: &Image, dst: &Image, mask: &BinaryMask, opts: &CloneOptions) -> Result<Image, BlendError> {
    check_dims(src.dims(), dst.dims())?;
    check_dims(src.dims(), mask.dims())?;
    if mask.touches_border() {
        return Err(BlendError::MaskTouchesBorder);
    }
    let sys = System::new(mask);
    if sys.pixels.is_empty() {
        return Ok(dst.clone());
    }
    let max_iter = opts.max_iter.unwrap_or(10 * sys.pixels.len());
    let results: Vec<(Vec<f64>, f64, usize)> = (0..3)
        .into_par_iter()
        .map(|c| {
            let s: Vec<f64> = src.pixels().iter().map(|p| p[c]).collect();
            let d: Vec<f64> = dst.pixels().iter().map(|p| p[c]).collect();
            let b = sys.rhs(&s, &d);
            let mut x: Vec<f64> = sys.pixels.iter().map(|&p| d[p]).collect();
            let (res, it) = solve_cg(&sys, &b, &mut x, opts.tol, max_iter);
            (x, res, it)
        })
        .collect();

    let mut out = dst.clone();
    for (c, (x, _, _)) in results.iter().enumerate() {
        for (i, &p) in sys.pixels.iter().enumerate() {
            out.data[p][c] = x[i].clamp(0.0, 1.0);
        }
    }
    let residual = results.iter().map(|r| r.1).fold(0.0, f64::max);
    let iterations = results.iter().map(|r| r.2).max().unwrap_or(0);
    if residual > opts.tol || residual.is_nan() {
        return Err(BlendError::NonConvergence { best: Box::new(out), residual, iterations });
    }
    log::debug!("seamless_clone: {} unknowns, {iterations} iterations, residual {residual:e}", sys.pixels.len());
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn interior(w: u32, h: u32, margin: u32) -> BinaryMask {
        let mut m = BinaryMask::new(w, h);
        for y in margin..h - margin {
            for x in margin..w - margin {
                m.set(x, y, true);
            }
        }
        m
    }

    #[test]
    fn identical_src_and_dst() {
        let img = Image::from_fn(24, 24, |x, y| [x as f64 / 24.0, (y as f64 / 24.0).powi(2), 0.3]);
        let out = seamless_clone(&img, &img, &interior(24, 24, 1), &CloneOptions::default()).unwrap();
        assert!(out.max_abs_diff(&img) <= 1e-6);
    }

    #[test]
    fn constant_source_takes_boundary_value() {
        let src = Image::filled(20, 20, [0.9, 0.1, 0.4]);
        let dst = Image::filled(20, 20, [0.3, 0.6, 0.2]);
        let out = seamless_clone(&src, &dst, &interior(20, 20, 2), &CloneOptions::default()).unwrap();
        assert!(out.max_abs_diff(&dst) <= 1e-6);
    }

    #[test]
    fn outside_mask_untouched_and_border_rejected() {
        let src = Image::from_fn(16, 16, |x, _| [x as f64 / 16.0; 3]);
        let dst = Image::from_fn(16, 16, |_, y| [1.0 - y as f64 / 16.0; 3]);
        let mask = interior(16, 16, 4);
        let out = seamless_clone(&src, &dst, &mask, &CloneOptions::default()).unwrap();
        for y in 0..16 {
            for x in 0..16 {
                if !mask.get(x, y) {
                    assert_eq!(out.get(x, y), dst.get(x, y));
                }
            }
        }
        assert_eq!(seamless_clone(&src, &dst, &interior(16, 16, 0), &CloneOptions::default()), Err(BlendError::MaskTouchesBorder));
    }

    #[test]
    fn empty_mask_returns_dst() {
        let dst = Image::filled(8, 8, [0.2; 3]);
        let out = seamless_clone(&Image::filled(8, 8, [0.7; 3]), &dst, &BinaryMask::new(8, 8), &CloneOptions::default()).unwrap();
        assert_eq!(out, dst);
    }

    #[test]
    fn iteration_cap_reports_nonconvergence() {
        let src = Image::from_fn(32, 32, |x, y| [((x * y) % 7) as f64 / 7.0; 3]);
        let dst = Image::filled(32, 32, [0.5; 3]);
        let err = seamless_clone(&src, &dst, &interior(32, 32, 1), &CloneOptions { tol: 1e-6, max_iter: Some(2) }).unwrap_err();
        assert!(matches!(err, BlendError::NonConvergence { iterations: 2, .. }));
    }
}
