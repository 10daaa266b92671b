//! Wavefunction storage and the primitive field operations: densities,
//! currents, inner products, Born-rule probabilities and the Fourier map to
//! the momentum representation.

use num_complex::Complex64;
use std::f64::consts::TAU;

use crate::error::{NlseError, Result};
use crate::grid::{Grid, Region};
use crate::spectral;

/// Complex field on a periodic grid, flattened row-major (axis 0 major).
#[derive(Debug, Clone)]
pub struct Wavefunction {
    pub grid: Grid,
    pub values: Vec<Complex64>,
    pub time: f64,
}

/// Real scalar field on a grid (density, potential, functional values).
#[derive(Debug, Clone)]
pub struct DensityField {
    pub grid: Grid,
    pub values: Vec<f64>,
}

/// Real vector field on a grid; one component per axis.
#[derive(Debug, Clone)]
pub struct CurrentField {
    pub grid: Grid,
    pub components: Vec<Vec<f64>>,
}

impl Wavefunction {
    pub fn new(grid: Grid, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != grid.total_points() {
            return Err(NlseError::ShapeMismatch {
                context: format!(
                    "value count {} does not match grid size {}",
                    values.len(),
                    grid.total_points()
                ),
            });
        }
        Ok(Wavefunction { grid, values, time: 0.0 })
    }

    pub fn check_finite(&self, context: &str) -> Result<()> {
        if self.values.iter().all(|v| v.re.is_finite() && v.im.is_finite()) {
            Ok(())
        } else {
            Err(NlseError::InvalidState { context: context.to_string() })
        }
    }

    /// Build a 1D state from a closure of the coordinate.
    pub fn from_fn_1d(grid: &Grid, f: impl Fn(f64) -> Complex64) -> Result<Self> {
        if grid.dim() != 1 {
            return Err(NlseError::ShapeMismatch { context: "from_fn_1d on 2D grid".into() });
        }
        let values = (0..grid.points(0)).map(|i| f(grid.coord(0, i))).collect();
        Wavefunction::new(grid.clone(), values)
    }

    /// Build a 2D state from a closure of both coordinates.
    pub fn from_fn_2d(grid: &Grid, f: impl Fn(f64, f64) -> Complex64) -> Result<Self> {
        if grid.dim() != 2 {
            return Err(NlseError::ShapeMismatch { context: "from_fn_2d on 1D grid".into() });
        }
        let mut values = Vec::with_capacity(grid.total_points());
        for i in 0..grid.points(0) {
            for j in 0..grid.points(1) {
                values.push(f(grid.coord(0, i), grid.coord(1, j)));
            }
        }
        Wavefunction::new(grid.clone(), values)
    }

    /// Divide by the L2 norm.
    pub fn normalized(mut self) -> Result<Self> {
        let n = norm(&self)?;
        if n <= 0.0 {
            return Err(NlseError::DegenerateState);
        }
        let s = 1.0 / n;
        for v in &mut self.values {
            *v *= s;
        }
        Ok(self)
    }

    pub fn scaled(mut self, c: Complex64) -> Self {
        for v in &mut self.values {
            *v *= c;
        }
        self
    }
}

/// Born density `rho(x) = |psi(x)|^2`.
pub fn density(psi: &Wavefunction) -> Result<DensityField> {
    psi.check_finite("density input")?;
    Ok(DensityField {
        grid: psi.grid.clone(),
        values: psi.values.iter().map(|v| v.norm_sqr()).collect(),
    })
}

/// Probability current `J = Im(conj(psi) grad psi)`, one component per axis.
pub fn current(psi: &Wavefunction) -> Result<CurrentField> {
    psi.check_finite("current input")?;
    let mut components = Vec::with_capacity(psi.grid.dim());
    for axis in 0..psi.grid.dim() {
        let dpsi = spectral::gradient_axis(&psi.grid, &psi.values, axis);
        components.push(
            psi.values
                .iter()
                .zip(&dpsi)
                .map(|(p, d)| (p.conj() * d).im)
                .collect(),
        );
    }
    Ok(CurrentField { grid: psi.grid.clone(), components })
}

/// Sesquilinear inner product `<phi|psi>` with the grid measure.
pub fn inner(phi: &Wavefunction, psi: &Wavefunction) -> Result<Complex64> {
    phi.grid.check_same_shape(&psi.grid, "inner product operands")?;
    let dv = phi.grid.cell_volume();
    let mut acc = Complex64::default();
    for (a, b) in phi.values.iter().zip(&psi.values) {
        acc += a.conj() * b;
    }
    Ok(acc * dv)
}

/// L2 norm with the grid measure.
pub fn norm(psi: &Wavefunction) -> Result<f64> {
    psi.check_finite("norm input")?;
    let dv = psi.grid.cell_volume();
    Ok((psi.values.iter().map(|v| v.norm_sqr()).sum::<f64>() * dv).sqrt())
}

/// L2 distance between two states on the same grid.
pub fn distance(a: &Wavefunction, b: &Wavefunction) -> Result<f64> {
    a.grid.check_same_shape(&b.grid, "distance operands")?;
    let dv = a.grid.cell_volume();
    let s: f64 = a
        .values
        .iter()
        .zip(&b.values)
        .map(|(x, y)| (x - y).norm_sqr())
        .sum();
    Ok((s * dv).sqrt())
}

/// Born probability of finding the system in `region`:
/// `p_B = sum_{cells in B} rho dV / ||psi||^2`.
pub fn born_probability(psi: &Wavefunction, region: &Region) -> Result<f64> {
    psi.check_finite("born_probability input")?;
    if region.dim() != psi.grid.dim() {
        return Err(NlseError::ShapeMismatch { context: "region dimension".into() });
    }
    let total: f64 = psi.values.iter().map(|v| v.norm_sqr()).sum();
    if total <= 0.0 {
        return Err(NlseError::DegenerateState);
    }
    let mut sel = 0.0;
    for idx in region.cells(&psi.grid) {
        sel += psi.values[idx].norm_sqr();
    }
    Ok(sel / total)
}

/// Fourier map to the momentum representation. The result lives on
/// [`Grid::momentum_grid`] in increasing-wavenumber order and satisfies
/// Parseval: `norm(fourier(psi)) == norm(psi)` up to roundoff.
pub fn fourier(psi: &Wavefunction) -> Result<Wavefunction> {
    psi.check_finite("fourier input")?;
    let g = &psi.grid;
    let mut buf = psi.values.clone();
    spectral::fft_forward(g, &mut buf);

    // continuum normalization dV/(2pi)^{d/2} and the origin phase
    // exp(-i k . x0) per axis, applied in FFT bin order
    let dim = g.dim();
    let norm_factor = g.cell_volume() / TAU.sqrt().powi(dim as i32);
    match dim {
        1 => {
            let x0 = g.coord(0, 0);
            for (j, v) in buf.iter_mut().enumerate() {
                let k = g.fft_wavenumber(0, j);
                *v *= Complex64::new(0.0, -k * x0).exp() * norm_factor;
            }
        }
        _ => {
            let n1 = g.points(1);
            let x0 = g.coord(0, 0);
            let y0 = g.coord(1, 0);
            for (idx, v) in buf.iter_mut().enumerate() {
                let k0 = g.fft_wavenumber(0, idx / n1);
                let k1 = g.fft_wavenumber(1, idx % n1);
                *v *= Complex64::new(0.0, -(k0 * x0 + k1 * y0)).exp() * norm_factor;
            }
        }
    }
    let sorted = spectral::shift_to_sorted(g, &buf);
    let mut out = Wavefunction::new(g.momentum_grid(), sorted)?;
    out.time = psi.time;
    Ok(out)
}

/// Kinetic energy `<psi| k^2/2m |psi> / ||psi||^2`.
pub fn kinetic_energy(psi: &Wavefunction, mass: f64) -> Result<f64> {
    let n2 = norm(psi)?.powi(2);
    if n2 <= 0.0 {
        return Err(NlseError::DegenerateState);
    }
    let dv = psi.grid.cell_volume();
    let mut acc = 0.0;
    for axis in 0..psi.grid.dim() {
        let d = spectral::gradient_axis(&psi.grid, &psi.values, axis);
        acc += d.iter().map(|v| v.norm_sqr()).sum::<f64>() * dv;
    }
    Ok(acc / (2.0 * mass) / n2)
}

/// Potential energy `<psi| V |psi> / ||psi||^2`.
pub fn potential_energy(psi: &Wavefunction, potential: &[f64]) -> Result<f64> {
    if potential.len() != psi.values.len() {
        return Err(NlseError::ShapeMismatch { context: "potential field size".into() });
    }
    let n2: f64 = psi.values.iter().map(|v| v.norm_sqr()).sum();
    if n2 <= 0.0 {
        return Err(NlseError::DegenerateState);
    }
    let acc: f64 = psi
        .values
        .iter()
        .zip(potential)
        .map(|(v, &u)| v.norm_sqr() * u)
        .sum();
    Ok(acc / n2)
}

/// Position variance `<x^2> - <x>^2` along `axis`.
pub fn position_variance(psi: &Wavefunction, axis: usize) -> Result<f64> {
    let rho = density(psi)?;
    let n1 = if psi.grid.dim() == 1 { 1 } else { psi.grid.points(1) };
    let mut m0 = 0.0;
    let mut m1 = 0.0;
    let mut m2 = 0.0;
    for (idx, &r) in rho.values.iter().enumerate() {
        let i = if axis == 0 { idx / n1 } else { idx % n1 };
        let x = psi.grid.coord(axis, i);
        m0 += r;
        m1 += r * x;
        m2 += r * x * x;
    }
    if m0 <= 0.0 {
        return Err(NlseError::DegenerateState);
    }
    let mean = m1 / m0;
    Ok(m2 / m0 - mean * mean)
}

/// Normalized Gaussian wavepacket, synthesized from its Fourier coefficients
/// so the grid state is exactly periodic: width `sigma` (position stddev),
/// center `x_c`, carrier `k0` (snapped to the nearest grid wavenumber).
pub fn gaussian_packet(grid: &Grid, sigma: f64, x_c: f64, k0: f64) -> Result<Wavefunction> {
    if grid.dim() != 1 {
        return Err(NlseError::ShapeMismatch { context: "gaussian_packet needs a 1D grid".into() });
    }
    if !(sigma.is_finite() && sigma > 0.0) {
        return Err(NlseError::Domain(format!("gaussian width {sigma} must be positive")));
    }
    let n = grid.points(0);
    let dk = grid.momentum_spacing(0);
    let k0 = (k0 / dk).round() * dk;
    let x0 = grid.coord(0, 0);
    let mut buf = vec![Complex64::default(); n];
    for (j, v) in buf.iter_mut().enumerate() {
        let k = grid.fft_wavenumber(0, j);
        let amp = (-sigma * sigma * (k - k0) * (k - k0)).exp();
        // synthesize directly on the offset grid: coefficient carries the
        // center shift and the origin phase of the first grid point
        *v = amp * Complex64::new(0.0, -(k - k0) * x_c + k * x0).exp();
    }
    spectral::fft_inverse(grid, &mut buf);
    Wavefunction::new(grid.clone(), buf)?.normalized()
}

/// Plane wave `exp(i k0 x)` with `k0` snapped to the nearest grid wavenumber.
pub fn plane_wave(grid: &Grid, k0: f64) -> Result<Wavefunction> {
    if grid.dim() != 1 {
        return Err(NlseError::ShapeMismatch { context: "plane_wave needs a 1D grid".into() });
    }
    let dk = grid.momentum_spacing(0);
    let k0 = (k0 / dk).round() * dk;
    Wavefunction::from_fn_1d(grid, |x| Complex64::new(0.0, k0 * x).exp())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn random_state(grid: &Grid, seed: u64) -> Wavefunction {
        // band-limited random smooth state
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = grid.points(0);
        let mut buf = vec![Complex64::default(); n];
        for (j, v) in buf.iter_mut().enumerate() {
            let k = grid.fft_wavenumber(0, j);
            if k.abs() <= 6.0 * grid.momentum_spacing(0) {
                *v = Complex64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5);
            }
        }
        spectral::fft_inverse(grid, &mut buf);
        Wavefunction::new(grid.clone(), buf).unwrap().normalized().unwrap()
    }

    #[test]
    fn density_of_plane_wave_is_one() {
        let g = Grid::new_1d(64, 16.0).unwrap();
        let pw = plane_wave(&g, 2.0).unwrap();
        let rho = density(&pw).unwrap();
        for &r in &rho.values {
            assert!((r - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn density_of_gaussian_profile() {
        let g = Grid::new_1d(256, 24.0).unwrap();
        let psi = Wavefunction::from_fn_1d(&g, |x| {
            Complex64::new((-x * x / 2.0).exp(), 0.0)
        })
        .unwrap();
        let rho = density(&psi).unwrap();
        for (i, &r) in rho.values.iter().enumerate() {
            let x = g.coord(0, i);
            assert!((r - (-x * x).exp()).abs() < 1e-14);
        }
    }

    #[test]
    fn density_integrates_to_one_for_normalized_state() {
        let g = Grid::new_1d(128, 20.0).unwrap();
        let psi = random_state(&g, 7);
        let rho = density(&psi).unwrap();
        let total: f64 = rho.values.iter().sum::<f64>() * g.cell_volume();
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn current_vanishes_for_real_state() {
        let g = Grid::new_1d(128, 16.0).unwrap();
        let psi = Wavefunction::from_fn_1d(&g, |x| Complex64::new((-x * x / 4.0).exp(), 0.0))
            .unwrap();
        let j = current(&psi).unwrap();
        for &v in &j.components[0] {
            assert!(v.abs() < 1e-13);
        }
    }

    #[test]
    fn current_of_plane_wave_is_k_rho() {
        let g = Grid::new_1d(512, 16.0).unwrap();
        let dk = g.momentum_spacing(0);
        let k0 = 5.0 * dk;
        let pw = plane_wave(&g, k0).unwrap();
        let j = current(&pw).unwrap();
        // finite-difference oracle: J = Im(conj(psi) dpsi) with 4th-order stencil
        let n = g.points(0);
        let d = g.spacing(0);
        for i in 0..n {
            let pm2 = pw.values[(i + n - 2) % n];
            let pm1 = pw.values[(i + n - 1) % n];
            let pp1 = pw.values[(i + 1) % n];
            let pp2 = pw.values[(i + 2) % n];
            let fd = (pm2 - pm1 * 8.0 + pp1 * 8.0 - pp2) / (12.0 * d);
            let oracle = (pw.values[i].conj() * fd).im;
            assert!((j.components[0][i] - k0).abs() < 1e-10);
            assert!((j.components[0][i] - oracle).abs() < 1e-5);
        }
    }

    #[test]
    fn current_of_boosted_gaussian() {
        let g = Grid::new_1d(1024, 32.0).unwrap();
        let dk = g.momentum_spacing(0);
        let k0 = 4.0 * dk;
        let psi = Wavefunction::from_fn_1d(&g, |x| {
            Complex64::new((-x * x / 4.0).exp(), 0.0) * Complex64::new(0.0, k0 * x).exp()
        })
        .unwrap();
        let j = current(&psi).unwrap();
        let rho = density(&psi).unwrap();
        // J = k0 * rho, checked against a finite-difference oracle as well
        let n = g.points(0);
        let d = g.spacing(0);
        for i in 0..n {
            assert!((j.components[0][i] - k0 * rho.values[i]).abs() < 1e-9);
            let pm2 = psi.values[(i + n - 2) % n];
            let pm1 = psi.values[(i + n - 1) % n];
            let pp1 = psi.values[(i + 1) % n];
            let pp2 = psi.values[(i + 2) % n];
            let fd = (pm2 - pm1 * 8.0 + pp1 * 8.0 - pp2) / (12.0 * d);
            let oracle = (psi.values[i].conj() * fd).im;
            assert!((j.components[0][i] - oracle).abs() < 1e-5);
        }
    }

    #[test]
    fn born_probability_of_whole_box_is_one() {
        let g = Grid::new_1d(128, 16.0).unwrap();
        let psi = random_state(&g, 3);
        let p = born_probability(&psi, &Region::whole(&g)).unwrap();
        assert!((p - 1.0).abs() < 1e-14);
    }

    #[test]
    fn born_probability_half_box_even_state() {
        let g = Grid::new_1d(512, 24.0).unwrap();
        let psi = Wavefunction::from_fn_1d(&g, |x| Complex64::new((-x * x / 2.0).exp(), 0.0))
            .unwrap();
        let right = Region::from_physical_1d(&g, 0.0, 12.0).unwrap();
        let p = born_probability(&psi, &right).unwrap();
        assert!((p - 0.5).abs() < 1e-13, "p = {p}");
    }

    #[test]
    fn born_probability_gaussian_interval_quadrature_oracle() {
        // p([-sigma, sigma]) against high-resolution quadrature of |psi|^2
        let g = Grid::new_1d(512, 24.0).unwrap();
        let sigma = 1.3;
        let psi = Wavefunction::from_fn_1d(&g, |x| {
            Complex64::new((-x * x / (4.0 * sigma * sigma)).exp(), 0.0)
        })
        .unwrap();
        let region = Region::from_physical_1d(&g, -sigma, sigma).unwrap();
        let p = born_probability(&psi, &region).unwrap();
        // oracle: trapezoid quadrature at 16x resolution over the same cell span
        let d = g.spacing(0);
        let a = -sigma;
        let b = sigma;
        // snap to the same cell boundaries the region uses
        let lo_cell = ((a - g.coord(0, 0)) / d).ceil() as usize;
        let hi_cell = ((b - g.coord(0, 0)) / d).ceil() as usize;
        let lo = g.coord(0, lo_cell) - 0.5 * d;
        let hi = g.coord(0, hi_cell) - 0.5 * d;
        let m = 65536;
        let h = (hi - lo) / m as f64;
        let f = |x: f64| (-x * x / (2.0 * sigma * sigma)).exp();
        let mut q = 0.5 * (f(lo) + f(hi));
        for i in 1..m {
            q += f(lo + i as f64 * h);
        }
        q *= h;
        let total = (std::f64::consts::TAU).sqrt() * sigma; // integral of exp(-x^2/2s^2)
        // the grid value is a midpoint-rule sum over the region's cells; its
        // gap to the continuum quadrature is O(dx^2) at the region boundary
        assert!((p - q / total).abs() < 1e-4, "p={p} oracle={}", q / total);
    }

    #[test]
    fn born_zero_norm_is_degenerate() {
        let g = Grid::new_1d(64, 8.0).unwrap();
        let psi = Wavefunction::new(g.clone(), vec![Complex64::default(); 64]).unwrap();
        assert!(matches!(
            born_probability(&psi, &Region::whole(&g)),
            Err(NlseError::DegenerateState)
        ));
    }

    #[test]
    fn inner_and_norm_agree() {
        let g = Grid::new_1d(128, 16.0).unwrap();
        let psi = random_state(&g, 11);
        let n = norm(&psi).unwrap();
        let ip = inner(&psi, &psi).unwrap();
        assert!((ip.re - n * n).abs() < 1e-13);
        assert!(ip.im.abs() < 1e-15);
    }

    #[test]
    fn inner_grid_mismatch_is_error() {
        let g1 = Grid::new_1d(64, 8.0).unwrap();
        let g2 = Grid::new_1d(128, 8.0).unwrap();
        let a = plane_wave(&g1, 1.0).unwrap();
        let b = plane_wave(&g2, 1.0).unwrap();
        assert!(inner(&a, &b).is_err());
    }

    #[test]
    fn fourier_concentrates_plane_wave_at_carrier() {
        let g = Grid::new_1d(64, 16.0).unwrap();
        let dk = g.momentum_spacing(0);
        let k0 = 5.0 * dk;
        let pw = plane_wave(&g, k0).unwrap().normalized().unwrap();
        let ft = fourier(&pw).unwrap();
        // all mass in the k = k0 cell
        let mg = ft.grid.clone();
        let idx = (0..mg.points(0))
            .find(|&j| (mg.coord(0, j) - k0).abs() < 1e-9)
            .unwrap();
        let r = Region::from_cells_1d(idx, idx + 1);
        let p = born_probability(&ft, &r).unwrap();
        assert!((p - 1.0).abs() < 1e-12);
    }

    #[test]
    fn parseval_on_random_state() {
        let g = Grid::new_1d(256, 20.0).unwrap();
        let psi = random_state(&g, 23);
        let ft = fourier(&psi).unwrap();
        // direct-summation oracle on both sides
        let n_x: f64 = psi.values.iter().map(|v| v.norm_sqr()).sum::<f64>() * g.cell_volume();
        let n_k: f64 =
            ft.values.iter().map(|v| v.norm_sqr()).sum::<f64>() * ft.grid.cell_volume();
        assert!((n_x.sqrt() - n_k.sqrt()).abs() < 1e-12);
        assert!((norm(&psi).unwrap() - norm(&ft).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn gaussian_packet_has_expected_moments() {
        let g = Grid::new_1d(512, 48.0).unwrap();
        let psi = gaussian_packet(&g, 2.0, 1.5, 0.0).unwrap();
        let v = position_variance(&psi, 0).unwrap();
        assert!((v - 4.0).abs() < 1e-8, "variance {v}");
        assert!((norm(&psi).unwrap() - 1.0).abs() < 1e-13);
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(16))]

            #[test]
            fn born_additive_over_disjoint_regions(seed in 0u64..1000, split in 8usize..120) {
                let g = Grid::new_1d(128, 16.0).unwrap();
                let psi = random_state(&g, seed);
                let a = Region::from_cells_1d(0, split);
                let b = Region::from_cells_1d(split, 128);
                let pa = born_probability(&psi, &a).unwrap();
                let pb = born_probability(&psi, &b).unwrap();
                let pu = born_probability(&psi, &a.union_with(&b).unwrap()).unwrap();
                // additivity is exact: same summands in the same order
                prop_assert!((pa + pb - pu).abs() < 1e-15);
                prop_assert!((pu - 1.0).abs() < 1e-13);
            }

            #[test]
            fn born_homogeneous_under_scaling(seed in 0u64..1000, re in -3.0f64..3.0, im in -3.0f64..3.0) {
                prop_assume!(re * re + im * im > 1e-4);
                let g = Grid::new_1d(128, 16.0).unwrap();
                let psi = random_state(&g, seed);
                let region = Region::from_cells_1d(20, 90);
                let p1 = born_probability(&psi, &region).unwrap();
                let p2 = born_probability(&psi.clone().scaled(Complex64::new(re, im)), &region).unwrap();
                prop_assert!((p1 - p2).abs() < 1e-12);
            }

            #[test]
            fn sigma_additivity_over_partition(seed in 0u64..1000, parts in 2usize..9) {
                let g = Grid::new_1d(128, 16.0).unwrap();
                let psi = random_state(&g, seed);
                let step = 128 / parts;
                let mut sum = 0.0;
                for p in 0..parts {
                    let lo = p * step;
                    let hi = if p == parts - 1 { 128 } else { (p + 1) * step };
                    sum += born_probability(&psi, &Region::from_cells_1d(lo, hi)).unwrap();
                }
                prop_assert!((sum - 1.0).abs() < 1e-12);
            }
        }
    }
}
