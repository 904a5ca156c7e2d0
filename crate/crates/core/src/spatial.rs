//! Uniform grid for exact nearest-neighbour queries over a fixed point set.

use crate::Vec3;

#[derive(Debug, Clone)]
pub struct PointGrid {
    points: Vec<Vec3>,
    origin: Vec3,
    cell: f64,
    dims: [usize; 3],
    cell_start: Vec<u32>,
    entries: Vec<u32>,
}

impl PointGrid {
    pub fn new(points: Vec<Vec3>) -> Self {
        let mut lo = Vec3::repeat(f64::INFINITY);
        let mut hi = Vec3::repeat(f64::NEG_INFINITY);
        for p in &points {
            lo = lo.inf(p);
            hi = hi.sup(p);
        }
        if points.is_empty() {
            lo = Vec3::zeros();
            hi = Vec3::zeros();
        }
        let extent = hi - lo;
        let largest = extent.max().max(1e-9);
        // about two points per cell for a surface-like cloud
        let volume: f64 = extent.iter().map(|e| e.max(largest * 1e-3)).product();
        let cell = (volume / points.len().max(1) as f64 * 2.0).cbrt().max(largest / 256.0);
        let dims = [0, 1, 2].map(|k| ((extent[k] / cell).floor() as usize + 1).min(512));
        let cell = cell.max(largest / 511.0);

        let mut grid = Self {
            points,
            origin: lo,
            cell,
            dims,
            cell_start: Vec::new(),
            entries: Vec::new(),
        };
        let ncells = dims.iter().product::<usize>();
        let keys: Vec<usize> = grid.points.iter().map(|p| grid.flat(grid.cell_of(p))).collect();
        let mut counts = vec![0u32; ncells + 1];
        for &k in &keys {
            counts[k + 1] += 1;
        }
        for i in 0..ncells {
            counts[i + 1] += counts[i];
        }
        let mut fill = counts.clone();
        let mut entries = vec![0u32; keys.len()];
        for (i, &k) in keys.iter().enumerate() {
            entries[fill[k] as usize] = i as u32;
            fill[k] += 1;
        }
        grid.cell_start = counts;
        grid.entries = entries;
        grid
    }

    pub fn points(&self) -> &[Vec3] {
        &self.points
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    fn cell_of(&self, p: &Vec3) -> [usize; 3] {
        [0, 1, 2].map(|k| {
            let c = ((p[k] - self.origin[k]) / self.cell).floor();
            (c.max(0.0) as usize).min(self.dims[k] - 1)
        })
    }

    fn flat(&self, c: [usize; 3]) -> usize {
        (c[2] * self.dims[1] + c[1]) * self.dims[0] + c[0]
    }

    /// Index of and squared distance to the closest point; ties go to the
    /// lowest index.
    pub fn nearest(&self, q: &Vec3) -> Option<(usize, f64)> {
        if self.points.is_empty() {
            return None;
        }
        let c = self.cell_of(q);
        let mut best: Option<(usize, f64)> = None;
        let max_r = *self.dims.iter().max().expect("three dims");
        for r in 0..=max_r {
            let lo = c.map(|v| v as isize - r as isize);
            let hi = c.map(|v| v as isize + r as isize);
            for z in lo[2].max(0)..=hi[2].min(self.dims[2] as isize - 1) {
                for y in lo[1].max(0)..=hi[1].min(self.dims[1] as isize - 1) {
                    for x in lo[0].max(0)..=hi[0].min(self.dims[0] as isize - 1) {
                        let on_shell = [x, y, z]
                            .iter()
                            .zip(lo.iter().zip(&hi))
                            .any(|(v, (l, h))| v == l || v == h);
                        if !on_shell {
                            continue;
                        }
                        let cell = self.flat([x as usize, y as usize, z as usize]);
                        let range = self.cell_start[cell] as usize..self.cell_start[cell + 1] as usize;
                        for &i in &self.entries[range] {
                            let i = i as usize;
                            let d = (self.points[i] - q).norm_squared();
                            best = match best {
                                Some((bi, bd)) if bd < d || (bd == d && bi < i) => Some((bi, bd)),
                                _ => Some((i, d)),
                            };
                        }
                    }
                }
            }
            // distance from q to the nearest cell outside the searched block
            let mut bound = f64::INFINITY;
            for k in 0..3 {
                if lo[k] > 0 {
                    let face = self.origin[k] + lo[k] as f64 * self.cell;
                    bound = bound.min((q[k] - face).max(0.0));
                }
                if hi[k] + 1 < self.dims[k] as isize {
                    let face = self.origin[k] + (hi[k] + 1) as f64 * self.cell;
                    bound = bound.min((face - q[k]).max(0.0));
                }
            }
            if bound.is_infinite() {
                break;
            }
            if let Some((_, d)) = best {
                if d < bound * bound {
                    break;
                }
            }
        }
        best
    }
}

/// Exhaustive nearest neighbour with the same tie-break as [`PointGrid`].
pub fn nearest_brute_force(points: &[Vec3], q: &Vec3) -> Option<(usize, f64)> {
    points
        .iter()
        .enumerate()
        .map(|(i, p)| (i, (p - q).norm_squared()))
        .fold(None, |best, (i, d)| match best {
            Some((_, bd)) if bd <= d => best,
            _ => Some((i, d)),
        })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn empty_grid_has_no_neighbour() {
        assert!(PointGrid::new(Vec::new()).nearest(&Vec3::zeros()).is_none());
    }

    #[test]
    fn matches_brute_force_on_a_surface_cloud() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let pts: Vec<Vec3> = (0..2000)
            .map(|_| {
                let t: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
                Vec3::new(0.05 * t.cos(), 0.05 * t.sin(), rng.gen_range(0.0..0.4))
            })
            .collect();
        let grid = PointGrid::new(pts.clone());
        for _ in 0..500 {
            let q = Vec3::new(rng.gen_range(-0.3..0.3), rng.gen_range(-0.3..0.3), rng.gen_range(-0.2..0.6));
            let (gi, gd) = grid.nearest(&q).unwrap();
            let (bi, bd) = nearest_brute_force(&pts, &q).unwrap();
            assert_eq!(gd, bd);
            assert_eq!(gi, bi);
        }
    }

    proptest! {
        #[test]
        fn grid_nearest_is_exact(
            pts in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0, -0.01f64..0.01), 1..60),
            q in (-2.0f64..2.0, -2.0f64..2.0, -2.0f64..2.0),
        ) {
            let pts: Vec<Vec3> = pts.into_iter().map(|(x, y, z)| Vec3::new(x, y, z)).collect();
            let q = Vec3::new(q.0, q.1, q.2);
            let grid = PointGrid::new(pts.clone());
            prop_assert_eq!(grid.nearest(&q), nearest_brute_force(&pts, &q));
        }
    }
}
