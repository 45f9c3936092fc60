//! Gaussian and Laplacian pyramids on single-channel planes.
//!
//! Borders replicate the edge sample. Downsampling blurs with the 5-tap
//! binomial kernel `[1 4 6 4 1]/16` and keeps even samples; upsampling
//! zero-stuffs to the target size, blurs with the same kernel and scales by
//! 4.

use rayon::prelude::*;

const KERNEL: [f64; 5] = [1.0 / 16.0, 4.0 / 16.0, 6.0 / 16.0, 4.0 / 16.0, 1.0 / 16.0];

#[derive(Debug, Clone, PartialEq)]
pub struct Plane {
    pub width: usize,
    pub height: usize,
    pub data: Vec<f64>,
}

impl Plane {
    pub fn new(width: usize, height: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), width * height, "plane size");
        Self {
            width,
            height,
            data,
        }
    }

    pub fn filled(width: usize, height: usize, value: f64) -> Self {
        Self::new(width, height, vec![value; width * height])
    }

    #[inline]
    pub fn at(&self, x: usize, y: usize) -> f64 {
        self.data[y * self.width + x]
    }

    /// Sample with edge replication.
    #[inline]
    fn clamped(&self, x: isize, y: isize) -> f64 {
        let x = x.clamp(0, self.width as isize - 1) as usize;
        let y = y.clamp(0, self.height as isize - 1) as usize;
        self.at(x, y)
    }
}

fn blur(p: &Plane) -> Plane {
    let (w, h) = (p.width, p.height);
    let mut horiz = vec![0.0; w * h];
    horiz.par_chunks_mut(w).enumerate().for_each(|(y, row)| {
        for (x, out) in row.iter_mut().enumerate() {
            *out = KERNEL
                .iter()
                .enumerate()
                .map(|(k, c)| c * p.clamped(x as isize + k as isize - 2, y as isize))
                .sum();
        }
    });
    let horiz = Plane::new(w, h, horiz);
    let mut out = vec![0.0; w * h];
    out.par_chunks_mut(w).enumerate().for_each(|(y, row)| {
        for (x, o) in row.iter_mut().enumerate() {
            *o = KERNEL
                .iter()
                .enumerate()
                .map(|(k, c)| c * horiz.clamped(x as isize, y as isize + k as isize - 2))
                .sum();
        }
    });
    Plane::new(w, h, out)
}

pub fn downsample(p: &Plane) -> Plane {
    let b = blur(p);
    let (w, h) = (p.width.div_ceil(2), p.height.div_ceil(2));
    let mut data = Vec::with_capacity(w * h);
    for y in 0..h {
        for x in 0..w {
            data.push(b.at(2 * x, 2 * y));
        }
    }
    Plane::new(w, h, data)
}

/// Expand to `width × height`: zero-stuff the coarse plane (extended by
/// edge replication), filter with the same kernel and scale by 4.
pub fn upsample(p: &Plane, width: usize, height: usize) -> Plane {
    // only taps landing on even (stuffed) positions contribute, each ×2 per axis
    let expand = |i: usize, len: usize, fetch: &dyn Fn(usize) -> f64| -> f64 {
        KERNEL
            .iter()
            .enumerate()
            .filter_map(|(k, c)| {
                let j = i as isize + k as isize - 2;
                (j.rem_euclid(2) == 0).then(|| {
                    let src = j.div_euclid(2).clamp(0, len as isize - 1) as usize;
                    2.0 * c * fetch(src)
                })
            })
            .sum()
    };
    let mut horiz = vec![0.0; width * p.height];
    horiz.par_chunks_mut(width).enumerate().for_each(|(y, row)| {
        for (x, out) in row.iter_mut().enumerate() {
            *out = expand(x, p.width, &|sx| p.at(sx, y));
        }
    });
    let mut out = vec![0.0; width * height];
    out.par_chunks_mut(width).enumerate().for_each(|(y, row)| {
        for (x, o) in row.iter_mut().enumerate() {
            *o = expand(y, p.height, &|sy| horiz[sy * width + x]);
        }
    });
    Plane::new(width, height, out)
}

pub fn gaussian_pyramid(p: &Plane, levels: usize) -> Vec<Plane> {
    let mut out = vec![p.clone()];
    for _ in 1..levels.max(1) {
        let next = downsample(out.last().expect("non-empty"));
        out.push(next);
    }
    out
}

pub fn laplacian_pyramid(p: &Plane, levels: usize) -> Vec<Plane> {
    let g = gaussian_pyramid(p, levels);
    let mut out = Vec::with_capacity(g.len());
    for k in 0..g.len() - 1 {
        let up = upsample(&g[k + 1], g[k].width, g[k].height);
        let data = g[k].data.iter().zip(&up.data).map(|(a, b)| a - b).collect();
        out.push(Plane::new(g[k].width, g[k].height, data));
    }
    out.push(g.last().expect("non-empty").clone());
    out
}

pub fn collapse(pyr: &[Plane]) -> Plane {
    let mut cur = pyr.last().expect("non-empty pyramid").clone();
    for level in pyr[..pyr.len() - 1].iter().rev() {
        let up = upsample(&cur, level.width, level.height);
        let data = level.data.iter().zip(&up.data).map(|(a, b)| a + b).collect();
        cur = Plane::new(level.width, level.height, data);
    }
    cur
}
