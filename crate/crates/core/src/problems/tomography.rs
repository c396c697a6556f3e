use crate::error::{Error, Result};
use crate::linalg::sparse::CscMatrix;

/// Rectangle `[0, width] × [0, height]` split into `ny × nz` equal pixels.
///
/// Pixel `(iy, iz)` (horizontal index `iy`, vertical index `iz`) has linear
/// index `iz * ny + iy`, so the horizontal index runs fastest.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PixelGrid {
    pub ny: usize,
    pub nz: usize,
    pub width: f64,
    pub height: f64,
}

impl PixelGrid {
    pub fn new(ny: usize, nz: usize, width: f64, height: f64) -> Result<Self> {
        if ny == 0 || nz == 0 {
            return Err(Error::InvalidArgument(format!("grid needs at least one pixel per side, got {ny}x{nz}")));
        }
        if !(width > 0.0 && height > 0.0 && width.is_finite() && height.is_finite()) {
            return Err(Error::InvalidArgument(format!("grid extent must be positive, got {width}x{height}")));
        }
        Ok(Self { ny, nz, width, height })
    }

    /// Pixels of unit size.
    pub fn unit(ny: usize, nz: usize) -> Result<Self> {
        Self::new(ny, nz, ny as f64, nz as f64)
    }

    pub fn len(&self) -> usize {
        self.ny * self.nz
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn index(&self, iy: usize, iz: usize) -> usize {
        iz * self.ny + iy
    }

    pub fn coords(&self, index: usize) -> (usize, usize) {
        (index % self.ny, index / self.ny)
    }

    pub fn dy(&self) -> f64 {
        self.width / self.ny as f64
    }

    pub fn dz(&self) -> f64 {
        self.height / self.nz as f64
    }

    /// Pixel containing `(y, z)`; points on the far boundary belong to the
    /// last pixel.
    pub fn locate(&self, y: f64, z: f64) -> Option<usize> {
        if !(0.0..=self.width).contains(&y) || !(0.0..=self.height).contains(&z) {
            return None;
        }
        let iy = ((y / self.dy()).floor() as usize).min(self.ny - 1);
        let iz = ((z / self.dz()).floor() as usize).min(self.nz - 1);
        Some(self.index(iy, iz))
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Ray {
    pub source: (f64, f64),
    pub receiver: (f64, f64),
}

impl Ray {
    pub fn length(&self) -> f64 {
        let (dy, dz) = (self.receiver.0 - self.source.0, self.receiver.1 - self.source.1);
        dy.hypot(dz)
    }
}

#[derive(Clone, Debug)]
pub struct RaySet {
    pub rays: Vec<Ray>,
    /// `(pixel, length)` pairs per ray, in traversal order.
    pub intersections: Vec<Vec<(usize, f64)>>,
}

/// Intersection lengths of the segment `ray` with the pixels of `grid`,
/// computed by clipping against the bounding box and splitting at every grid
/// line crossing.
pub fn trace_ray(grid: &PixelGrid, ray: &Ray) -> Vec<(usize, f64)> {
    let (y0, z0) = ray.source;
    let (dy, dz) = (ray.receiver.0 - y0, ray.receiver.1 - z0);
    let total = dy.hypot(dz);
    if total == 0.0 {
        return Vec::new();
    }
    // slab clipping against the bounding box
    let mut t0 = 0.0_f64;
    let mut t1 = 1.0_f64;
    for (p, d, hi) in [(y0, dy, grid.width), (z0, dz, grid.height)] {
        if d == 0.0 {
            if p < 0.0 || p > hi {
                return Vec::new();
            }
        } else {
            let (a, b) = ((0.0 - p) / d, (hi - p) / d);
            t0 = t0.max(a.min(b));
            t1 = t1.min(a.max(b));
        }
    }
    if t1 <= t0 {
        return Vec::new();
    }

    let mut ts = vec![t0, t1];
    let mut crossings = |p: f64, d: f64, cells: usize, h: f64| {
        if d == 0.0 {
            return;
        }
        for k in 1..cells {
            let t = (k as f64 * h - p) / d;
            if t > t0 && t < t1 {
                ts.push(t);
            }
        }
    };
    crossings(y0, dy, grid.ny, grid.dy());
    crossings(z0, dz, grid.nz, grid.dz());
    ts.sort_by(f64::total_cmp);
    ts.dedup();

    let mut out: Vec<(usize, f64)> = Vec::with_capacity(ts.len());
    for w in ts.windows(2) {
        let len = (w[1] - w[0]) * total;
        if len <= 0.0 {
            continue;
        }
        let tm = 0.5 * (w[0] + w[1]);
        let (ym, zm) = (y0 + tm * dy, z0 + tm * dz);
        let y = ym.clamp(0.0, grid.width);
        let z = zm.clamp(0.0, grid.height);
        let pix = grid.locate(y, z).expect("midpoint inside the clipped box");
        match out.last_mut() {
            Some((p, l)) if *p == pix => *l += len,
            _ => out.push((pix, len)),
        }
    }
    out
}

/// `n_src` sources on the left edge and `n_rcv` receivers on the right edge,
/// both at cell-centred heights `(k + ½) H / count`. Ray `s * n_rcv + r` joins
/// source `s` and receiver `r`.
pub fn borehole_rays(grid: &PixelGrid, n_src: usize, n_rcv: usize) -> Vec<Ray> {
    let pos = |k: usize, count: usize| (k as f64 + 0.5) * grid.height / count as f64;
    let mut rays = Vec::with_capacity(n_src * n_rcv);
    for s in 0..n_src {
        for r in 0..n_rcv {
            rays.push(Ray {
                source: (0.0, pos(s, n_src)),
                receiver: (grid.width, pos(r, n_rcv)),
            });
        }
    }
    rays
}

/// Sparse ray-pixel matrix for the given rays.
pub fn ray_matrix(grid: &PixelGrid, rays: Vec<Ray>) -> Result<(CscMatrix, RaySet)> {
    let intersections: Vec<Vec<(usize, f64)>> = rays.iter().map(|r| trace_ray(grid, r)).collect();
    let triplets: Vec<(usize, usize, f64)> = intersections
        .iter()
        .enumerate()
        .flat_map(|(i, row)| row.iter().map(move |&(j, l)| (i, j, l)))
        .collect();
    let op = CscMatrix::from_triplets(rays.len(), grid.len(), &triplets)?;
    Ok((op, RaySet { rays, intersections }))
}

/// Cross-borehole geometry: straight rays from every source to every receiver.
pub fn build_crossborehole(grid: &PixelGrid, n_src: usize, n_rcv: usize) -> Result<(CscMatrix, RaySet)> {
    if n_src == 0 || n_rcv == 0 {
        return Err(Error::InvalidArgument("need at least one source and one receiver".into()));
    }
    ray_matrix(grid, borehole_rays(grid, n_src, n_rcv))
}
