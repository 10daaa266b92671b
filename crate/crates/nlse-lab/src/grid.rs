//! Uniform periodic grids in one and two dimensions, and regions built from
//! whole grid cells.
//!
//! Grid points sit at cell centers: along an axis of length `L` with `n`
//! points the coordinates are `x_i = -L/2 + (i + 1/2) Δx`, so a symmetric box
//! splits into two exact half-boxes along cell boundaries. Momentum grids
//! produced by [`Grid::momentum_grid`] instead carry points at the integer
//! wavenumbers `k_j = j·2π/L` (cells centered on resolvable carriers).

use crate::error::{NlseError, Result};

pub const MIN_POINTS_PER_AXIS: usize = 8;

#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    dim: usize,
    points: [usize; 2],
    lengths: [f64; 2],
    origins: [f64; 2],
}

impl Grid {
    /// 1D periodic grid over `[-length/2, length/2)`.
    pub fn new_1d(points: usize, length: f64) -> Result<Self> {
        Self::validate_axis(points, length)?;
        let spacing = length / points as f64;
        Ok(Grid {
            dim: 1,
            points: [points, 1],
            lengths: [length, 0.0],
            origins: [-0.5 * length + 0.5 * spacing, 0.0],
        })
    }

    /// 2D periodic tensor grid.
    pub fn new_2d(points: [usize; 2], lengths: [f64; 2]) -> Result<Self> {
        Self::validate_axis(points[0], lengths[0])?;
        Self::validate_axis(points[1], lengths[1])?;
        let s0 = lengths[0] / points[0] as f64;
        let s1 = lengths[1] / points[1] as f64;
        Ok(Grid {
            dim: 2,
            points,
            lengths,
            origins: [-0.5 * lengths[0] + 0.5 * s0, -0.5 * lengths[1] + 0.5 * s1],
        })
    }

    fn validate_axis(points: usize, length: f64) -> Result<()> {
        if points < MIN_POINTS_PER_AXIS {
            return Err(NlseError::InvalidGrid(format!(
                "points_per_axis {points} < {MIN_POINTS_PER_AXIS}"
            )));
        }
        if !points.is_power_of_two() {
            return Err(NlseError::InvalidGrid(format!(
                "points_per_axis {points} is not a power of two"
            )));
        }
        if !(length.is_finite() && length > 0.0) {
            return Err(NlseError::InvalidGrid(format!("box length {length} must be positive")));
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn points(&self, axis: usize) -> usize {
        self.points[axis]
    }

    pub fn length(&self, axis: usize) -> f64 {
        self.lengths[axis]
    }

    pub fn spacing(&self, axis: usize) -> f64 {
        self.lengths[axis] / self.points[axis] as f64
    }

    /// Coordinate of grid point `i` along `axis`.
    pub fn coord(&self, axis: usize, i: usize) -> f64 {
        self.origins[axis] + i as f64 * self.spacing(axis)
    }

    /// All coordinates along `axis`.
    pub fn coords(&self, axis: usize) -> Vec<f64> {
        (0..self.points[axis]).map(|i| self.coord(axis, i)).collect()
    }

    pub fn total_points(&self) -> usize {
        self.points[0] * self.points[1]
    }

    /// Volume (length in 1D, area in 2D) of one grid cell.
    pub fn cell_volume(&self) -> f64 {
        match self.dim {
            1 => self.spacing(0),
            _ => self.spacing(0) * self.spacing(1),
        }
    }

    /// Flattened index of the 2D cell `(i, j)`; row = axis 0.
    pub fn index2(&self, i: usize, j: usize) -> usize {
        i * self.points[1] + j
    }

    /// Spacing of the conjugate momentum grid, `2π / L`.
    pub fn momentum_spacing(&self, axis: usize) -> f64 {
        std::f64::consts::TAU / self.lengths[axis]
    }

    /// Largest resolvable wavenumber magnitude along `axis` (Nyquist), `π/Δx`.
    pub fn nyquist(&self, axis: usize) -> f64 {
        std::f64::consts::PI / self.spacing(axis)
    }

    /// Sum over axes of the squared Nyquist wavenumber; bounds the kinetic phase.
    pub fn max_wavenumber_sq(&self) -> f64 {
        (0..self.dim).map(|a| self.nyquist(a).powi(2)).sum()
    }

    /// Conjugate grid with points at the integer wavenumbers `k_j = j·dk`,
    /// `j = -n/2 .. n/2-1`, in increasing order.
    pub fn momentum_grid(&self) -> Grid {
        let mut g = self.clone();
        for a in 0..self.dim {
            let n = self.points[a];
            let dk = self.momentum_spacing(a);
            g.lengths[a] = n as f64 * dk;
            g.origins[a] = -((n / 2) as f64) * dk;
        }
        g
    }

    /// Signed wavenumber for FFT bin `j` along `axis` (standard FFT ordering).
    pub fn fft_wavenumber(&self, axis: usize, j: usize) -> f64 {
        let n = self.points[axis];
        let dk = self.momentum_spacing(axis);
        let j = j as isize;
        let half = (n / 2) as isize;
        let m = if j < half { j } else { j - n as isize };
        m as f64 * dk
    }

    pub fn same_shape(&self, other: &Grid) -> bool {
        self.dim == other.dim
            && self.points == other.points
            && (0..self.dim).all(|a| {
                (self.lengths[a] - other.lengths[a]).abs() <= 1e-12 * self.lengths[a].abs()
            })
    }

    pub fn check_same_shape(&self, other: &Grid, context: &str) -> Result<()> {
        if self.same_shape(other) {
            Ok(())
        } else {
            Err(NlseError::ShapeMismatch { context: context.to_string() })
        }
    }
}

/// Axis-aligned union of whole grid cells: disjoint index intervals in 1D,
/// disjoint index rectangles in 2D. Cell `i` covers
/// `[coord(i) - Δ/2, coord(i) + Δ/2)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Region {
    dim: usize,
    /// Half-open index ranges per box; axis 1 range is `0..1` in 1D.
    boxes: Vec<[(usize, usize); 2]>,
}

impl Region {
    pub fn empty(dim: usize) -> Self {
        Region { dim, boxes: Vec::new() }
    }

    /// Every cell of `grid`.
    pub fn whole(grid: &Grid) -> Self {
        let b = match grid.dim() {
            1 => [(0, grid.points(0)), (0, 1)],
            _ => [(0, grid.points(0)), (0, grid.points(1))],
        };
        Region { dim: grid.dim(), boxes: vec![b] }
    }

    /// 1D region from a cell-index interval `[lo, hi)`.
    pub fn from_cells_1d(lo: usize, hi: usize) -> Self {
        Region { dim: 1, boxes: vec![[(lo, hi), (0, 1)]] }
    }

    /// 2D region from cell-index intervals.
    pub fn from_cells_2d(r0: (usize, usize), r1: (usize, usize)) -> Self {
        Region { dim: 2, boxes: vec![[r0, r1]] }
    }

    /// 1D region of cells whose centers lie in the physical interval `[a, b)`.
    pub fn from_physical_1d(grid: &Grid, a: f64, b: f64) -> Result<Self> {
        if grid.dim() != 1 {
            return Err(NlseError::InvalidRegion("from_physical_1d on a 2D grid".into()));
        }
        let (lo, hi) = Self::axis_cells(grid, 0, a, b);
        Ok(Region { dim: 1, boxes: vec![[(lo, hi), (0, 1)]] })
    }

    /// 2D rectangle of cells whose centers lie in `[a0,b0) × [a1,b1)`.
    pub fn from_physical_2d(grid: &Grid, a: [f64; 2], b: [f64; 2]) -> Result<Self> {
        if grid.dim() != 2 {
            return Err(NlseError::InvalidRegion("from_physical_2d on a 1D grid".into()));
        }
        let r0 = Self::axis_cells(grid, 0, a[0], b[0]);
        let r1 = Self::axis_cells(grid, 1, a[1], b[1]);
        Ok(Region { dim: 2, boxes: vec![[r0, r1]] })
    }

    fn axis_cells(grid: &Grid, axis: usize, a: f64, b: f64) -> (usize, usize) {
        let n = grid.points(axis);
        let d = grid.spacing(axis);
        let origin = grid.coord(axis, 0);
        if b <= a {
            return (0, 0);
        }
        // first index with coord >= a, first index with coord >= b
        let lo = ((a - origin) / d).ceil().max(0.0) as usize;
        let hi = ((b - origin) / d).ceil().max(0.0) as usize;
        (lo.min(n), hi.min(n))
    }

    /// Add another box; fails if it overlaps an existing member cell.
    pub fn union_with(mut self, other: &Region) -> Result<Self> {
        if self.dim != other.dim {
            return Err(NlseError::InvalidRegion("dimension mismatch in union".into()));
        }
        for b in &other.boxes {
            for a in &self.boxes {
                let overlap0 = a[0].0 < b[0].1 && b[0].0 < a[0].1;
                let overlap1 = a[1].0 < b[1].1 && b[1].0 < a[1].1;
                if overlap0 && overlap1 && Self::box_nonempty(a) && Self::box_nonempty(b) {
                    return Err(NlseError::InvalidRegion("overlapping cells in union".into()));
                }
            }
            self.boxes.push(*b);
        }
        Ok(self)
    }

    fn box_nonempty(b: &[(usize, usize); 2]) -> bool {
        b[0].1 > b[0].0 && b[1].1 > b[1].0
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn is_empty(&self) -> bool {
        !self.boxes.iter().any(Self::box_nonempty)
    }

    pub fn cell_count(&self) -> usize {
        self.boxes
            .iter()
            .map(|b| (b[0].1 - b[0].0) * (b[1].1 - b[1].0))
            .sum()
    }

    /// Physical measure of the region on `grid`.
    pub fn measure(&self, grid: &Grid) -> f64 {
        self.cell_count() as f64 * grid.cell_volume()
    }

    /// Iterate flattened cell indices (axis-0-major, matching field storage).
    pub fn cells<'a>(&'a self, grid: &'a Grid) -> impl Iterator<Item = usize> + 'a {
        let n1 = if grid.dim() == 1 { 1 } else { grid.points(1) };
        self.boxes.iter().flat_map(move |b| {
            let (i0, i1) = b[0];
            let (j0, j1) = b[1];
            (i0..i1).flat_map(move |i| (j0..j1).map(move |j| i * n1 + j))
        })
    }

    /// The complement region on `grid` (1D only; used for half-box splits).
    pub fn complement_1d(&self, grid: &Grid) -> Result<Region> {
        if self.dim != 1 {
            return Err(NlseError::InvalidRegion("complement_1d on 2D region".into()));
        }
        let n = grid.points(0);
        let mut covered = vec![false; n];
        for b in &self.boxes {
            for i in b[0].0..b[0].1 {
                covered[i] = true;
            }
        }
        let mut out = Region::empty(1);
        let mut i = 0;
        while i < n {
            if !covered[i] {
                let lo = i;
                while i < n && !covered[i] {
                    i += 1;
                }
                out.boxes.push([(lo, i), (0, 1)]);
            } else {
                i += 1;
            }
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_rejects_bad_axes() {
        assert!(Grid::new_1d(4, 10.0).is_err());
        assert!(Grid::new_1d(100, 10.0).is_err()); // not a power of two
        assert!(Grid::new_1d(64, -1.0).is_err());
        assert!(Grid::new_1d(64, f64::NAN).is_err());
    }

    #[test]
    fn coords_are_centered_and_symmetric() {
        let g = Grid::new_1d(8, 8.0).unwrap();
        let xs = g.coords(0);
        assert_eq!(xs.len(), 8);
        // offset grid: mirror-symmetric pairs, no point at 0 or at the edge
        for i in 0..4 {
            assert!((xs[i] + xs[7 - i]).abs() < 1e-15);
        }
        assert!((xs[0] + 3.5).abs() < 1e-15);
        assert!((xs[7] - 3.5).abs() < 1e-15);
    }

    #[test]
    fn momentum_grid_has_integer_wavenumbers() {
        let g = Grid::new_1d(16, 8.0).unwrap();
        let m = g.momentum_grid();
        let dk = std::f64::consts::TAU / 8.0;
        assert!((m.coord(0, 8) - 0.0).abs() < 1e-14); // k = 0 on the grid
        assert!((m.coord(0, 9) - dk).abs() < 1e-14);
        assert!((m.coord(0, 0) + 8.0 * dk).abs() < 1e-13);
    }

    #[test]
    fn fft_wavenumber_ordering() {
        let g = Grid::new_1d(8, 8.0).unwrap();
        let dk = g.momentum_spacing(0);
        assert_eq!(g.fft_wavenumber(0, 0), 0.0);
        assert!((g.fft_wavenumber(0, 1) - dk).abs() < 1e-15);
        assert!((g.fft_wavenumber(0, 7) + dk).abs() < 1e-15);
        assert!((g.fft_wavenumber(0, 4) + 4.0 * dk).abs() < 1e-15);
    }

    #[test]
    fn region_from_physical_snaps_to_cells() {
        let g = Grid::new_1d(8, 8.0).unwrap();
        // right half of the box: cells with center > 0 are indices 4..8
        let r = Region::from_physical_1d(&g, 0.0, 4.0).unwrap();
        let cells: Vec<usize> = r.cells(&g).collect();
        assert_eq!(cells, vec![4, 5, 6, 7]);
        assert!((r.measure(&g) - 4.0).abs() < 1e-14);
    }

    #[test]
    fn region_union_rejects_overlap() {
        let a = Region::from_cells_1d(0, 4);
        let b = Region::from_cells_1d(3, 6);
        assert!(a.clone().union_with(&b).is_err());
        let c = Region::from_cells_1d(4, 6);
        assert!(a.union_with(&c).is_ok());
    }

    #[test]
    fn complement_partitions_grid() {
        let g = Grid::new_1d(16, 4.0).unwrap();
        let r = Region::from_cells_1d(3, 9);
        let c = r.complement_1d(&g).unwrap();
        assert_eq!(r.cell_count() + c.cell_count(), 16);
        let mut all: Vec<usize> = r.cells(&g).chain(c.cells(&g)).collect();
        all.sort_unstable();
        assert_eq!(all, (0..16).collect::<Vec<_>>());
    }
}
