//! Observation windows, point patterns, fixed-radius pair enumeration and
//! regular grid partitions.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    #[inline]
    pub fn distance(self, other: Point) -> f64 {
        distance(self, other)
    }
}

/// Euclidean distance between two planar points.
#[inline]
pub fn distance(a: Point, b: Point) -> f64 {
    let dx = a.x - b.x;
    let dy = a.y - b.y;
    (dx * dx + dy * dy).sqrt()
}

/// Axis-aligned rectangular observation window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[f64; 4]", into = "[f64; 4]")]
pub struct Window {
    x_min: f64,
    x_max: f64,
    y_min: f64,
    y_max: f64,
}

impl TryFrom<[f64; 4]> for Window {
    type Error = Error;

    fn try_from(v: [f64; 4]) -> Result<Self> {
        Window::new(v[0], v[1], v[2], v[3])
    }
}

impl From<Window> for [f64; 4] {
    fn from(w: Window) -> Self {
        [w.x_min, w.x_max, w.y_min, w.y_max]
    }
}

impl Window {
    pub fn new(x_min: f64, x_max: f64, y_min: f64, y_max: f64) -> Result<Self> {
        let finite = [x_min, x_max, y_min, y_max].iter().all(|v| v.is_finite());
        if !finite || x_min >= x_max || y_min >= y_max {
            return Err(Error::invalid(format!(
                "window [{x_min}, {x_max}] x [{y_min}, {y_max}] is empty or not finite"
            )));
        }
        Ok(Self {
            x_min,
            x_max,
            y_min,
            y_max,
        })
    }

    pub fn unit_square() -> Self {
        Self {
            x_min: 0.0,
            x_max: 1.0,
            y_min: 0.0,
            y_max: 1.0,
        }
    }

    pub fn x_min(&self) -> f64 {
        self.x_min
    }
    pub fn x_max(&self) -> f64 {
        self.x_max
    }
    pub fn y_min(&self) -> f64 {
        self.y_min
    }
    pub fn y_max(&self) -> f64 {
        self.y_max
    }

    pub fn width(&self) -> f64 {
        self.x_max - self.x_min
    }

    pub fn height(&self) -> f64 {
        self.y_max - self.y_min
    }

    pub fn area(&self) -> f64 {
        self.width() * self.height()
    }

    /// Closed containment: points on the boundary are inside.
    #[inline]
    pub fn contains(&self, p: Point) -> bool {
        p.x >= self.x_min && p.x <= self.x_max && p.y >= self.y_min && p.y <= self.y_max
    }

    /// The window grown by `margin` on every side.
    pub fn expand(&self, margin: f64) -> Result<Window> {
        Window::new(
            self.x_min - margin,
            self.x_max + margin,
            self.y_min - margin,
            self.y_max + margin,
        )
    }

    pub fn translate(&self, dx: f64, dy: f64) -> Window {
        Window {
            x_min: self.x_min + dx,
            x_max: self.x_max + dx,
            y_min: self.y_min + dy,
            y_max: self.y_max + dy,
        }
    }

    /// Length of the circle of radius `r` around `center` that lies inside the
    /// window.
    pub fn arc_length_inside(&self, center: Point, r: f64) -> f64 {
        if r <= 0.0 {
            return 0.0;
        }
        let mut angles: Vec<f64> = Vec::with_capacity(10);
        for edge in [self.x_min, self.x_max] {
            let c = (edge - center.x) / r;
            if c.abs() < 1.0 {
                let a = c.acos();
                angles.push(a);
                angles.push(2.0 * PI - a);
            }
        }
        for edge in [self.y_min, self.y_max] {
            let s = (edge - center.y) / r;
            if s.abs() < 1.0 {
                let a = s.asin();
                angles.push(a.rem_euclid(2.0 * PI));
                angles.push(PI - a);
            }
        }
        if angles.is_empty() {
            let probe = Point::new(center.x + r, center.y);
            return if self.contains(probe) { 2.0 * PI * r } else { 0.0 };
        }
        angles.sort_by(f64::total_cmp);
        let mut total = 0.0;
        for k in 0..angles.len() {
            let start = angles[k];
            let end = if k + 1 < angles.len() {
                angles[k + 1]
            } else {
                angles[0] + 2.0 * PI
            };
            if end - start <= 0.0 {
                continue;
            }
            let mid = 0.5 * (start + end);
            let probe = Point::new(center.x + r * mid.cos(), center.y + r * mid.sin());
            if self.contains(probe) {
                total += end - start;
            }
        }
        total * r
    }

    pub(crate) fn approx_eq(&self, other: &Window) -> bool {
        let scale = self.width().max(self.height());
        let tol = 1e-12 * scale.max(1.0);
        (self.x_min - other.x_min).abs() <= tol
            && (self.x_max - other.x_max).abs() <= tol
            && (self.y_min - other.y_min).abs() <= tol
            && (self.y_max - other.y_max).abs() <= tol
    }
}

/// A finite set of locations observed in a window. Duplicate locations are
/// allowed.
#[derive(Debug, Clone, PartialEq)]
pub struct PointPattern {
    points: Vec<Point>,
    window: Window,
}

impl PointPattern {
    pub fn new(points: Vec<Point>, window: Window) -> Result<Self> {
        if let Some((i, p)) = points
            .iter()
            .enumerate()
            .find(|(_, p)| !p.x.is_finite() || !p.y.is_finite() || !window.contains(**p))
        {
            return Err(Error::invalid(format!(
                "point {i} at ({}, {}) lies outside the window",
                p.x, p.y
            )));
        }
        Ok(Self { points, window })
    }

    pub fn empty(window: Window) -> Self {
        Self {
            points: Vec::new(),
            window,
        }
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn window(&self) -> &Window {
        &self.window
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Translate points and window together.
    pub fn translate(&self, dx: f64, dy: f64) -> PointPattern {
        PointPattern {
            points: self
                .points
                .iter()
                .map(|p| Point::new(p.x + dx, p.y + dy))
                .collect(),
            window: self.window.translate(dx, dy),
        }
    }
}

/// All ordered pairs `(i, j)`, `i != j`, with `||s_i - s_j|| < radius`.
///
/// Pairs are sorted lexicographically so two indices built from the same
/// pattern compare equal regardless of how they were enumerated.
#[derive(Debug, Clone, PartialEq)]
pub struct PairIndex {
    radius: f64,
    pairs: Vec<(u32, u32)>,
    distances: Vec<f64>,
}

impl PairIndex {
    /// Bucket-grid neighbour search with cells of side at least `radius`.
    pub fn build(pattern: &PointPattern, radius: f64) -> Result<Self> {
        if !(radius > 0.0) || !radius.is_finite() {
            return Err(Error::invalid(format!("pair radius must be > 0, got {radius}")));
        }
        let n = pattern.len();
        if n > u32::MAX as usize {
            return Err(Error::invalid("pattern too large for pair index"));
        }
        let window = pattern.window();
        let pts = pattern.points();

        // Cap the cell count near n so tiny radii don't allocate huge grids.
        let max_cells = (4 * n).max(1) as f64;
        let mut side = radius;
        while (window.width() / side).ceil() * (window.height() / side).ceil() > max_cells {
            side *= 2.0;
        }
        let nx = ((window.width() / side).ceil() as usize).max(1);
        let ny = ((window.height() / side).ceil() as usize).max(1);
        let cell_of = |p: Point| -> (usize, usize) {
            let cx = (((p.x - window.x_min()) / side) as usize).min(nx - 1);
            let cy = (((p.y - window.y_min()) / side) as usize).min(ny - 1);
            (cx, cy)
        };

        // Counting sort of point indices by cell.
        let mut starts = vec![0usize; nx * ny + 1];
        let cells: Vec<(usize, usize)> = pts.iter().map(|&p| cell_of(p)).collect();
        for &(cx, cy) in &cells {
            starts[cy * nx + cx + 1] += 1;
        }
        for c in 0..nx * ny {
            starts[c + 1] += starts[c];
        }
        let mut fill = starts.clone();
        let mut bucket = vec![0u32; n];
        for (i, &(cx, cy)) in cells.iter().enumerate() {
            let c = cy * nx + cx;
            bucket[fill[c]] = i as u32;
            fill[c] += 1;
        }

        let r2 = radius * radius;
        let mut pairs = Vec::new();
        let mut distances = Vec::new();
        let mut row: Vec<(u32, f64)> = Vec::new();
        for (i, &p) in pts.iter().enumerate() {
            row.clear();
            let (cx, cy) = cells[i];
            for gy in cy.saturating_sub(1)..=(cy + 1).min(ny - 1) {
                for gx in cx.saturating_sub(1)..=(cx + 1).min(nx - 1) {
                    let c = gy * nx + gx;
                    for &j in &bucket[starts[c]..starts[c + 1]] {
                        if j as usize == i {
                            continue;
                        }
                        let q = pts[j as usize];
                        let dx = p.x - q.x;
                        let dy = p.y - q.y;
                        let d2 = dx * dx + dy * dy;
                        if d2 < r2 {
                            let d = d2.sqrt();
                            if d < radius {
                                row.push((j, d));
                            }
                        }
                    }
                }
            }
            row.sort_unstable_by_key(|&(j, _)| j);
            for &(j, d) in &row {
                pairs.push((i as u32, j));
                distances.push(d);
            }
        }
        Ok(Self {
            radius,
            pairs,
            distances,
        })
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    /// Number of ordered pairs.
    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.pairs
            .iter()
            .zip(&self.distances)
            .map(|(&(i, j), &d)| (i as usize, j as usize, d))
    }

    pub fn contains(&self, i: usize, j: usize) -> bool {
        self.pairs
            .binary_search(&(i as u32, j as u32))
            .is_ok()
    }

    /// Distances of the unordered pairs (`i < j`).
    pub fn unordered_distances(&self) -> impl Iterator<Item = f64> + '_ {
        self.pairs
            .iter()
            .zip(&self.distances)
            .filter(|((i, j), _)| i < j)
            .map(|(_, &d)| d)
    }

    /// Number of partners of each point.
    pub fn degrees(&self, n: usize) -> Vec<usize> {
        let mut deg = vec![0usize; n];
        for &(i, _) in &self.pairs {
            deg[i as usize] += 1;
        }
        deg
    }
}

/// `nx` by `ny` equal cells tiling a window, indexed row-major
/// (`iy * nx + ix`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridPartition {
    window: Window,
    nx: usize,
    ny: usize,
}

impl GridPartition {
    pub fn new(window: Window, nx: usize, ny: usize) -> Result<Self> {
        if nx == 0 || ny == 0 {
            return Err(Error::invalid("grid needs at least one cell per axis"));
        }
        Ok(Self { window, nx, ny })
    }

    pub fn window(&self) -> &Window {
        &self.window
    }
    pub fn nx(&self) -> usize {
        self.nx
    }
    pub fn ny(&self) -> usize {
        self.ny
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn cell_width(&self) -> f64 {
        self.window.width() / self.nx as f64
    }

    pub fn cell_height(&self) -> f64 {
        self.window.height() / self.ny as f64
    }

    pub fn cell_area(&self) -> f64 {
        self.window.area() / (self.nx * self.ny) as f64
    }

    pub fn cell_center(&self, idx: usize) -> Point {
        let ix = idx % self.nx;
        let iy = idx / self.nx;
        Point::new(
            self.window.x_min() + (ix as f64 + 0.5) * self.cell_width(),
            self.window.y_min() + (iy as f64 + 0.5) * self.cell_height(),
        )
    }

    /// Lower-left corner of a cell.
    pub fn cell_origin(&self, idx: usize) -> Point {
        let ix = idx % self.nx;
        let iy = idx / self.nx;
        Point::new(
            self.window.x_min() + ix as f64 * self.cell_width(),
            self.window.y_min() + iy as f64 * self.cell_height(),
        )
    }

    pub fn cell_centers(&self) -> Vec<Point> {
        (0..self.len()).map(|i| self.cell_center(i)).collect()
    }

    /// Half-open cell assignment `[lo, hi)` with the max boundary folded into
    /// the last cell. `None` for points outside the window.
    pub fn cell_index(&self, p: Point) -> Option<usize> {
        if !self.window.contains(p) {
            return None;
        }
        Some(self.cell_index_clamped(p))
    }

    /// Like [`cell_index`](Self::cell_index) but clamps outside points to the
    /// nearest cell.
    pub fn cell_index_clamped(&self, p: Point) -> usize {
        let fx = (p.x - self.window.x_min()) / self.window.width() * self.nx as f64;
        let fy = (p.y - self.window.y_min()) / self.window.height() * self.ny as f64;
        let ix = (fx.max(0.0) as usize).min(self.nx - 1);
        let iy = (fy.max(0.0) as usize).min(self.ny - 1);
        iy * self.nx + ix
    }
}

/// Number of pattern points in each grid cell.
pub fn cell_counts(pattern: &PointPattern, grid: &GridPartition) -> Result<Vec<usize>> {
    if !grid.window().approx_eq(pattern.window()) {
        return Err(Error::invalid("grid does not tile the pattern window"));
    }
    let mut counts = vec![0usize; grid.len()];
    for &p in pattern.points() {
        // Every pattern point is inside its window, so the clamp never moves it.
        counts[grid.cell_index_clamped(p)] += 1;
    }
    Ok(counts)
}
