//! Exact nearest-neighbor queries over 3D points via a uniform grid.
//!
//! Queries are exact (shell expansion with a conservative lower bound), and
//! ties on distance resolve to the lowest point index, so results match a
//! brute-force scan bit for bit.

/// Uniform-grid spatial index over a fixed set of points.
pub struct GridIndex {
    points: Vec<[f64; 3]>,
    cell: f64,
    lo: [f64; 3],
    dims: [i64; 3],
    cells: Vec<Vec<u32>>,
}

/// Pick a cell size that spreads `points` over roughly cbrt(n) cells per
/// axis. Collapsed clouds fall back to a unit cell.
pub fn auto_cell(points: &[[f64; 3]]) -> f64 {
    let n = points.len().max(1);
    let (lo, hi) = bounds(points);
    let max_extent = (hi[0] - lo[0]).max(hi[1] - lo[1]).max(hi[2] - lo[2]);
    if max_extent <= 0.0 {
        return 1.0;
    }
    let per_axis = (n as f64).cbrt().ceil().max(1.0);
    max_extent / per_axis
}

fn bounds(points: &[[f64; 3]]) -> ([f64; 3], [f64; 3]) {
    let mut lo = points[0];
    let mut hi = points[0];
    for p in points {
        for d in 0..3 {
            lo[d] = lo[d].min(p[d]);
            hi[d] = hi[d].max(p[d]);
        }
    }
    (lo, hi)
}

const MAX_CELLS: i64 = 1 << 22;

impl GridIndex {
    /// Build over `points` with the given cell size (`cell ≤ 0` or
    /// non-finite falls back to the automatic heuristic). `points` must be
    /// nonempty.
    pub fn build(points: &[[f64; 3]], cell: f64) -> GridIndex {
        assert!(!points.is_empty(), "grid index over an empty point set");
        let mut cell = if cell.is_finite() && cell > 0.0 {
            cell
        } else {
            auto_cell(points)
        };
        let (lo, hi) = bounds(points);
        // grow the cell if the requested size would need an absurd grid
        loop {
            let dims = [
                ((hi[0] - lo[0]) / cell).floor() as i64 + 1,
                ((hi[1] - lo[1]) / cell).floor() as i64 + 1,
                ((hi[2] - lo[2]) / cell).floor() as i64 + 1,
            ];
            if dims[0] * dims[1] * dims[2] <= MAX_CELLS {
                break;
            }
            cell *= 2.0;
        }
        let dims = [
            ((hi[0] - lo[0]) / cell).floor() as i64 + 1,
            ((hi[1] - lo[1]) / cell).floor() as i64 + 1,
            ((hi[2] - lo[2]) / cell).floor() as i64 + 1,
        ];
        let mut cells = vec![Vec::new(); (dims[0] * dims[1] * dims[2]) as usize];
        for (i, p) in points.iter().enumerate() {
            let c = Self::cell_of_raw(p, &lo, cell, &dims);
            cells[Self::flat(&c, &dims)].push(i as u32);
        }
        GridIndex {
            points: points.to_vec(),
            cell,
            lo,
            dims,
            cells,
        }
    }

    pub fn points(&self) -> &[[f64; 3]] {
        &self.points
    }

    fn cell_of_raw(p: &[f64; 3], lo: &[f64; 3], cell: f64, dims: &[i64; 3]) -> [i64; 3] {
        let mut c = [0i64; 3];
        for d in 0..3 {
            c[d] = (((p[d] - lo[d]) / cell).floor() as i64).clamp(0, dims[d] - 1);
        }
        c
    }

    fn flat(c: &[i64; 3], dims: &[i64; 3]) -> usize {
        (c[0] + dims[0] * (c[1] + dims[1] * c[2])) as usize
    }

    /// Unclamped cell coordinates of a query (may fall outside the grid).
    fn query_cell(&self, q: &[f64; 3]) -> [i64; 3] {
        [
            ((q[0] - self.lo[0]) / self.cell).floor() as i64,
            ((q[1] - self.lo[1]) / self.cell).floor() as i64,
            ((q[2] - self.lo[2]) / self.cell).floor() as i64,
        ]
    }

    /// Exact nearest neighbor: `(index, distance)`. Ties resolve to the
    /// lowest index.
    pub fn nearest(&self, q: &[f64; 3]) -> (usize, f64) {
        let (idx, d2) = self
            .nearest_sq(q, f64::INFINITY)
            .expect("index is nonempty");
        (idx, d2.sqrt())
    }

    /// Nearest neighbor within `max_dist` (inclusive), or `None`.
    pub fn nearest_within(&self, q: &[f64; 3], max_dist: f64) -> Option<(usize, f64)> {
        let limit = if max_dist.is_finite() {
            max_dist * max_dist
        } else {
            f64::INFINITY
        };
        self.nearest_sq(q, limit).map(|(i, d2)| (i, d2.sqrt()))
    }

    /// True when some point lies within `max_dist` of `q` (inclusive,
    /// compared on squared distances).
    pub fn any_within(&self, q: &[f64; 3], max_dist: f64) -> bool {
        self.nearest_sq(q, max_dist * max_dist).is_some()
    }

    fn nearest_sq(&self, q: &[f64; 3], limit_sq: f64) -> Option<(usize, f64)> {
        let cq = self.query_cell(q);
        let mut best: Option<(usize, f64)> = None;

        // shells closer than this cannot intersect the grid
        let mut shell_min = 0i64;
        // furthest shell that can intersect the grid at all
        let mut shell_cap = 0i64;
        for d in 0..3 {
            shell_min = shell_min.max(-cq[d]).max(cq[d] - (self.dims[d] - 1));
            shell_cap = shell_cap
                .max((cq[d]).abs())
                .max((self.dims[d] - 1 - cq[d]).abs());
        }

        for s in shell_min.max(0)..=shell_cap {
            // every point in shells ≥ s is at least (s−1)·cell away; the
            // strict comparison keeps equal-distance ties in shell s eligible
            // so the lowest index always wins
            let reach = (s as f64 - 1.0).max(0.0) * self.cell;
            if let Some((_, bd2)) = best {
                if s > 0 && bd2 < reach * reach {
                    break;
                }
            }
            if limit_sq.is_finite() && reach * reach > limit_sq {
                break;
            }
            self.scan_shell(&cq, s, q, &mut best);
        }
        match best {
            Some((i, d2)) if d2 <= limit_sq => Some((i, d2)),
            _ => None,
        }
    }

    fn scan_shell(&self, cq: &[i64; 3], s: i64, q: &[f64; 3], best: &mut Option<(usize, f64)>) {
        let lo = [cq[0] - s, cq[1] - s, cq[2] - s];
        let hi = [cq[0] + s, cq[1] + s, cq[2] + s];
        let mut visit = |x: i64, y: i64, z: i64| {
            if x < 0
                || x >= self.dims[0]
                || y < 0
                || y >= self.dims[1]
                || z < 0
                || z >= self.dims[2]
            {
                return;
            }
            for &pi in &self.cells[Self::flat(&[x, y, z], &self.dims)] {
                let p = &self.points[pi as usize];
                let d2 = (p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2) + (p[2] - q[2]).powi(2);
                let better = match *best {
                    None => true,
                    Some((bi, bd2)) => d2 < bd2 || (d2 == bd2 && (pi as usize) < bi),
                };
                if better {
                    *best = Some((pi as usize, d2));
                }
            }
        };
        if s == 0 {
            visit(cq[0], cq[1], cq[2]);
            return;
        }
        // two z faces, then the rim of each intermediate z slice
        for z in [lo[2], hi[2]] {
            for y in lo[1]..=hi[1] {
                for x in lo[0]..=hi[0] {
                    visit(x, y, z);
                }
            }
        }
        for z in lo[2] + 1..hi[2] {
            for x in lo[0]..=hi[0] {
                visit(x, lo[1], z);
                visit(x, hi[1], z);
            }
            for y in lo[1] + 1..hi[1] {
                visit(lo[0], y, z);
                visit(hi[0], y, z);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::CounterRng;

    fn brute(points: &[[f64; 3]], q: &[f64; 3]) -> (usize, f64) {
        let mut best = (0usize, f64::INFINITY);
        for (i, p) in points.iter().enumerate() {
            let d2 = (p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2) + (p[2] - q[2]).powi(2);
            if d2 < best.1 {
                best = (i, d2);
            }
        }
        (best.0, best.1.sqrt())
    }

    #[test]
    fn matches_brute_force_exactly() {
        let mut rng = CounterRng::new(99);
        for trial in 0..20 {
            let n = 50 + 40 * trial;
            let points: Vec<[f64; 3]> = (0..n)
                .map(|_| {
                    [
                        rng.range_f64(-30.0, 30.0),
                        rng.range_f64(-10.0, 10.0),
                        rng.range_f64(-5.0, 50.0),
                    ]
                })
                .collect();
            let index = GridIndex::build(&points, 0.0);
            for _ in 0..200 {
                let q = [
                    rng.range_f64(-40.0, 40.0),
                    rng.range_f64(-20.0, 20.0),
                    rng.range_f64(-10.0, 60.0),
                ];
                let (bi, bd) = brute(&points, &q);
                let (gi, gd) = index.nearest(&q);
                assert_eq!(gi, bi);
                assert_eq!(gd, bd);
            }
        }
    }

    #[test]
    fn nearest_within_honors_limit() {
        let points = vec![[0.0, 0.0, 0.0], [10.0, 0.0, 0.0]];
        let index = GridIndex::build(&points, 1.0);
        assert_eq!(index.nearest_within(&[0.4, 0.0, 0.0], 0.5), Some((0, 0.4)));
        assert!(index.nearest_within(&[5.0, 0.0, 0.0], 0.5).is_none());
        // inclusive boundary
        assert!(index.any_within(&[0.5, 0.0, 0.0], 0.5));
    }

    #[test]
    fn queries_far_outside_the_box() {
        let points = vec![[0.0, 0.0, 0.0], [1.0, 1.0, 1.0]];
        let index = GridIndex::build(&points, 0.5);
        let (i, d) = index.nearest(&[100.0, 100.0, 100.0]);
        assert_eq!(i, 1);
        let expect = ((99.0f64).powi(2) * 3.0).sqrt();
        assert!((d - expect).abs() < 1e-12);
    }

    #[test]
    fn tie_breaks_to_lowest_index() {
        // two points equidistant from the query
        let points = vec![[1.0, 0.0, 0.0], [-1.0, 0.0, 0.0], [1.0, 0.0, 0.0]];
        let index = GridIndex::build(&points, 0.5);
        let (i, d) = index.nearest(&[0.0, 0.0, 0.0]);
        assert_eq!(i, 0);
        assert_eq!(d, 1.0);
    }
}
