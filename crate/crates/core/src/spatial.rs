//! Uniform bucket grid for fixed-radius neighbour queries.

use crate::geometry::Point;

const MAX_CELLS_PER_POINT: usize = 4;

#[derive(Clone, Debug)]
pub(crate) struct SpatialGrid {
    min_x: f64,
    min_y: f64,
    cell: f64,
    nx: usize,
    ny: usize,
    buckets: Vec<Vec<usize>>,
}

impl SpatialGrid {
    /// Buckets `points` into square cells of side at least `cell`.
    pub(crate) fn new(points: &[Point], cell: f64) -> Self {
        let (mut min_x, mut min_y, mut max_x, mut max_y) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
        if let Some(p) = points.first() {
            (min_x, min_y, max_x, max_y) = (p.x, p.y, p.x, p.y);
        }
        for p in points {
            min_x = min_x.min(p.x);
            min_y = min_y.min(p.y);
            max_x = max_x.max(p.x);
            max_y = max_y.max(p.y);
        }
        let w = (max_x - min_x).max(0.0);
        let h = (max_y - min_y).max(0.0);
        // Keep the bucket array proportional to the point count.
        let budget = (MAX_CELLS_PER_POINT * points.len()).max(64) as f64;
        let mut cell = if cell > 0.0 && cell.is_finite() { cell } else { 1.0 };
        if (w / cell + 1.0) * (h / cell + 1.0) > budget {
            cell = cell.max((w * h / budget).sqrt()).max(w.max(h) / budget);
        }
        let nx = (w / cell) as usize + 1;
        let ny = (h / cell) as usize + 1;
        let mut buckets = vec![Vec::new(); nx * ny];
        let mut grid = Self {
            min_x,
            min_y,
            cell,
            nx,
            ny,
            buckets: Vec::new(),
        };
        for (i, p) in points.iter().enumerate() {
            let (cx, cy) = grid.cell_of(*p);
            buckets[cy * nx + cx].push(i);
        }
        grid.buckets = buckets;
        grid
    }

    fn cell_of(&self, p: Point) -> (usize, usize) {
        let cx = ((p.x - self.min_x) / self.cell).floor();
        let cy = ((p.y - self.min_y) / self.cell).floor();
        (
            (cx.max(0.0) as usize).min(self.nx - 1),
            (cy.max(0.0) as usize).min(self.ny - 1),
        )
    }

    fn cell_range(&self, lo: f64, hi: f64, min: f64, n: usize) -> Option<(usize, usize)> {
        let a = ((lo - min) / self.cell).floor();
        let b = ((hi - min) / self.cell).floor();
        if b < 0.0 || a > (n - 1) as f64 {
            return None;
        }
        Some(((a.max(0.0)) as usize, (b as usize).min(n - 1)))
    }

    /// Indices of every point that may lie within `radius` of `p`, in a
    /// fixed cell-major order. Callers filter by exact distance.
    pub(crate) fn candidates(&self, p: Point, radius: f64) -> impl Iterator<Item = usize> + '_ {
        let xs = self.cell_range(p.x - radius, p.x + radius, self.min_x, self.nx);
        let ys = self.cell_range(p.y - radius, p.y + radius, self.min_y, self.ny);
        let ranges = xs.zip(ys);
        ranges
            .into_iter()
            .flat_map(move |((x0, x1), (y0, y1))| {
                (y0..=y1).flat_map(move |cy| (x0..=x1).map(move |cx| cy * self.nx + cx))
            })
            .flat_map(move |cell| self.buckets[cell].iter().copied())
    }
}
