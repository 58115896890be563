//! Uniform spatial hash grid for exact neighbor queries.
//!
//! Backs normal estimation (k-NN), feature density, mean-shift ball sums,
//! and the accelerated ADD-S nearest neighbor. All queries are exact: the
//! grid only prunes candidates, every reported neighbor is distance-checked.
//! Points are stored cell-contiguously in structure-of-arrays layout so the
//! hot ball-sum loop runs over plain `f64` slices.

use nalgebra::Vector3;

const MAX_CELLS: usize = 1 << 21;

pub struct SpatialGrid {
    cell: f64,
    origin: Vector3<f64>,
    dims: [usize; 3],
    /// CSR cell boundaries into the reordered arrays.
    starts: Vec<u32>,
    xs: Vec<f64>,
    ys: Vec<f64>,
    zs: Vec<f64>,
    /// Reordered slot → original point index.
    original: Vec<u32>,
}

fn rescan_worst(best: &[(usize, f64)]) -> (usize, f64) {
    let mut slot = 0usize;
    let mut d2 = f64::NEG_INFINITY;
    for (s, &(_, d)) in best.iter().enumerate() {
        if d > d2 {
            d2 = d;
            slot = s;
        }
    }
    (slot, d2)
}

/// Typical nearest-neighbor spacing of `n` points spanning `extent`,
/// robust to thin (planar or linear) distributions.
fn spacing_estimate(extent: &Vector3<f64>, n: usize) -> f64 {
    let mut e = [extent.x.max(0.0), extent.y.max(0.0), extent.z.max(0.0)];
    e.sort_by(f64::total_cmp);
    let (e0, e1, e2) = (e[2].max(1e-9), e[1], e[0]); // descending
    let n = n as f64;
    let s3 = (e0 * e1.max(1e-9) * e2.max(1e-9) / n).cbrt();
    let s2 = (e0 * e1.max(1e-9) / n).sqrt();
    let s1 = e0 / n;
    s3.max(s2).max(s1)
}

impl SpatialGrid {
    /// Builds a grid over `positions` with the requested cell size. Non-finite
    /// or non-positive cell sizes fall back to a spacing heuristic; the cell
    /// grows as needed to keep the table below a memory cap.
    pub fn build(positions: &[Vector3<f64>], cell: f64) -> Self {
        assert!(!positions.is_empty(), "grid needs at least one point");
        let mut lo = positions[0];
        let mut hi = positions[0];
        for p in positions {
            lo = lo.inf(p);
            hi = hi.sup(p);
        }
        let extent = hi - lo;
        let mut cell = if cell.is_finite() && cell > 0.0 {
            cell
        } else {
            spacing_estimate(&extent, positions.len()) * 4.0
        };
        let dims_for = |cell: f64| -> [usize; 3] {
            [
                (extent.x / cell) as usize + 1,
                (extent.y / cell) as usize + 1,
                (extent.z / cell) as usize + 1,
            ]
        };
        while {
            let d = dims_for(cell);
            d[0].saturating_mul(d[1]).saturating_mul(d[2]) > MAX_CELLS
        } {
            cell *= 2.0;
        }
        let dims = dims_for(cell);
        let ncells = dims[0] * dims[1] * dims[2];

        let cell_of = |p: &Vector3<f64>| -> usize {
            let ix = (((p.x - lo.x) / cell) as usize).min(dims[0] - 1);
            let iy = (((p.y - lo.y) / cell) as usize).min(dims[1] - 1);
            let iz = (((p.z - lo.z) / cell) as usize).min(dims[2] - 1);
            (ix * dims[1] + iy) * dims[2] + iz
        };

        // counting sort into cell-contiguous SoA storage
        let mut starts = vec![0u32; ncells + 1];
        for p in positions {
            starts[cell_of(p) + 1] += 1;
        }
        for i in 0..ncells {
            starts[i + 1] += starts[i];
        }
        let mut cursor = starts.clone();
        let n = positions.len();
        let mut xs = vec![0.0; n];
        let mut ys = vec![0.0; n];
        let mut zs = vec![0.0; n];
        let mut original = vec![0u32; n];
        for (i, p) in positions.iter().enumerate() {
            let slot = cursor[cell_of(p)] as usize;
            cursor[cell_of(p)] += 1;
            xs[slot] = p.x;
            ys[slot] = p.y;
            zs[slot] = p.z;
            original[slot] = i as u32;
        }

        Self {
            cell,
            origin: lo,
            dims,
            starts,
            xs,
            ys,
            zs,
            original,
        }
    }

    pub fn len(&self) -> usize {
        self.original.len()
    }

    pub fn is_empty(&self) -> bool {
        self.original.is_empty()
    }

    fn cell_coords(&self, p: &Vector3<f64>) -> [isize; 3] {
        [
            ((p.x - self.origin.x) / self.cell).floor() as isize,
            ((p.y - self.origin.y) / self.cell).floor() as isize,
            ((p.z - self.origin.z) / self.cell).floor() as isize,
        ]
    }

    /// Clamped cell-box range intersected with the grid.
    fn clamp_range(&self, lo: [isize; 3], hi: [isize; 3]) -> Option<[(usize, usize); 3]> {
        let mut out = [(0usize, 0usize); 3];
        for a in 0..3 {
            let lo_a = lo[a].max(0);
            let hi_a = hi[a].min(self.dims[a] as isize - 1);
            if lo_a > hi_a {
                return None;
            }
            out[a] = (lo_a as usize, hi_a as usize);
        }
        Some(out)
    }

    /// Visits every point with `‖p − q‖² ≤ r²` as `(original index, dist²)`.
    pub fn for_each_within(&self, q: &Vector3<f64>, r: f64, mut f: impl FnMut(usize, f64)) {
        let r2 = r * r;
        let lo = self.cell_coords(&(q - Vector3::repeat(r)));
        let hi = self.cell_coords(&(q + Vector3::repeat(r)));
        let Some(range) = self.clamp_range(lo, hi) else {
            return;
        };
        for cx in range[0].0..=range[0].1 {
            for cy in range[1].0..=range[1].1 {
                let row = (cx * self.dims[1] + cy) * self.dims[2];
                for cz in range[2].0..=range[2].1 {
                    let ci = row + cz;
                    let (s, e) = (self.starts[ci] as usize, self.starts[ci + 1] as usize);
                    for j in s..e {
                        let dx = self.xs[j] - q.x;
                        let dy = self.ys[j] - q.y;
                        let dz = self.zs[j] - q.z;
                        let d2 = dx * dx + dy * dy + dz * dz;
                        if d2 <= r2 {
                            f(self.original[j] as usize, d2);
                        }
                    }
                }
            }
        }
    }

    /// Count and positional sum of all points within radius `r` of `q`.
    /// The accumulation is branch-free over cell-contiguous slices.
    pub fn ball_sum(&self, q: &Vector3<f64>, r: f64) -> (Vector3<f64>, usize) {
        let r2 = r * r;
        let lo = self.cell_coords(&(q - Vector3::repeat(r)));
        let hi = self.cell_coords(&(q + Vector3::repeat(r)));
        let Some(range) = self.clamp_range(lo, hi) else {
            return (Vector3::zeros(), 0);
        };
        let (mut sx, mut sy, mut sz, mut count) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
        for cx in range[0].0..=range[0].1 {
            for cy in range[1].0..=range[1].1 {
                let row = (cx * self.dims[1] + cy) * self.dims[2];
                let s = self.starts[row + range[2].0] as usize;
                let e = self.starts[row + range[2].1 + 1] as usize;
                for j in s..e {
                    let x = self.xs[j];
                    let y = self.ys[j];
                    let z = self.zs[j];
                    let dx = x - q.x;
                    let dy = y - q.y;
                    let dz = z - q.z;
                    let d2 = dx * dx + dy * dy + dz * dz;
                    let m = if d2 <= r2 { 1.0 } else { 0.0 };
                    sx += m * x;
                    sy += m * y;
                    sz += m * z;
                    count += m;
                }
            }
        }
        (Vector3::new(sx, sy, sz), count as usize)
    }

    /// Exactk nearest neighbors of `q`, optionally excluding one original
    /// index (the query point itself). Returns `(index, dist²)` ascending.
    pub fn knn(&self, q: &Vector3<f64>, k: usize, exclude: Option<usize>) -> Vec<(usize, f64)> {
        let mut best: Vec<(usize, f64)> = Vec::with_capacity(k + 1);
        let center = self.cell_coords(q);
        // beyond this ring no grid cell can exist
        let max_ring = (0..3)
            .map(|a| {
                let lo = -center[a];
                let hi = self.dims[a] as isize - 1 - center[a];
                lo.abs().max(hi.abs())
            })
            .max()
            .unwrap_or(0);
        // worst admitted candidate, rescanned only on replacement
        let mut worst_slot = 0usize;
        let mut worst_d2 = f64::INFINITY;
        for ring in 0..=max_ring {
            // every point within ring·cell of q is guaranteed found already
            if best.len() == k {
                let guaranteed = ring as f64 * self.cell;
                if worst_d2 <= guaranteed * guaranteed {
                    break;
                }
            }
            self.for_each_ring_cell(center, ring, |ci| {
                let (s, e) = (self.starts[ci] as usize, self.starts[ci + 1] as usize);
                for j in s..e {
                    let idx = self.original[j] as usize;
                    if exclude == Some(idx) {
                        continue;
                    }
                    let dx = self.xs[j] - q.x;
                    let dy = self.ys[j] - q.y;
                    let dz = self.zs[j] - q.z;
                    let d2 = dx * dx + dy * dy + dz * dz;
                    if best.len() < k {
                        best.push((idx, d2));
                        if best.len() == k {
                            (worst_slot, worst_d2) = rescan_worst(&best);
                        }
                    } else if d2 < worst_d2 {
                        best[worst_slot] = (idx, d2);
                        (worst_slot, worst_d2) = rescan_worst(&best);
                    }
                }
            });
        }
        best.sort_by(|a, b| a.1.total_cmp(&b.1));
        best
    }

    /// Distance from `q` to its nearest point (exact).
    pub fn nearest_distance(&self, q: &Vector3<f64>) -> f64 {
        self.knn(q, 1, None)
            .first()
            .map(|(_, d2)| d2.sqrt())
            .unwrap_or(f64::INFINITY)
    }

    /// Visits the cells at Chebyshev distance exactly `ring` from `center`,
    /// iterating only the shell faces clamped to the grid.
    fn for_each_ring_cell(&self, center: [isize; 3], ring: isize, mut f: impl FnMut(usize)) {
        let in_grid = |c: [isize; 3]| -> Option<usize> {
            if c[0] < 0 || c[1] < 0 || c[2] < 0 {
                return None;
            }
            let (x, y, z) = (c[0] as usize, c[1] as usize, c[2] as usize);
            if x >= self.dims[0] || y >= self.dims[1] || z >= self.dims[2] {
                return None;
            }
            Some((x * self.dims[1] + y) * self.dims[2] + z)
        };
        if ring == 0 {
            if let Some(ci) = in_grid(center) {
                f(ci);
            }
            return;
        }
        let clamp = |a: usize, v_lo: isize, v_hi: isize| -> Option<(isize, isize)> {
            let lo = v_lo.max(0);
            let hi = v_hi.min(self.dims[a] as isize - 1);
            (lo <= hi).then_some((lo, hi))
        };
        // x = ±ring faces: full y/z square
        for x in [center[0] - ring, center[0] + ring] {
            if x < 0 || x >= self.dims[0] as isize {
                continue;
            }
            let Some((y0, y1)) = clamp(1, center[1] - ring, center[1] + ring) else {
                continue;
            };
            let Some((z0, z1)) = clamp(2, center[2] - ring, center[2] + ring) else {
                continue;
            };
            for y in y0..=y1 {
                for z in z0..=z1 {
                    f(((x as usize * self.dims[1]) + y as usize) * self.dims[2] + z as usize);
                }
            }
        }
        // y = ±ring faces: x interior, z full
        if let Some((x0, x1)) = clamp(0, center[0] - ring + 1, center[0] + ring - 1) {
            for y in [center[1] - ring, center[1] + ring] {
                if y < 0 || y >= self.dims[1] as isize {
                    continue;
                }
                let Some((z0, z1)) = clamp(2, center[2] - ring, center[2] + ring) else {
                    continue;
                };
                for x in x0..=x1 {
                    for z in z0..=z1 {
                        f(((x as usize * self.dims[1]) + y as usize) * self.dims[2] + z as usize);
                    }
                }
            }
            // z = ±ring faces: x and y interior
            if let Some((y0, y1)) = clamp(1, center[1] - ring + 1, center[1] + ring - 1) {
                for z in [center[2] - ring, center[2] + ring] {
                    if z < 0 || z >= self.dims[2] as isize {
                        continue;
                    }
                    for x in x0..=x1 {
                        for y in y0..=y1 {
                            f(((x as usize * self.dims[1]) + y as usize) * self.dims[2]
                                + z as usize);
                        }
                    }
                }
            }
        }
    }
}
