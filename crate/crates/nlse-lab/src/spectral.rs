//! FFT plumbing shared by every module: cached plans, in-place transforms on
//! flattened row-major storage, spectral derivatives, and low-pass projection.
//!
//! Forward transforms are unnormalized; inverse transforms divide by the
//! length, so a forward/inverse round trip is the identity up to roundoff.

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use crate::grid::Grid;

type PlanKey = (usize, bool);

fn plan(len: usize, forward: bool) -> Arc<dyn Fft<f64>> {
    static CACHE: OnceLock<Mutex<(FftPlanner<f64>, HashMap<PlanKey, Arc<dyn Fft<f64>>>)>> =
        OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new((FftPlanner::new(), HashMap::new())));
    let mut guard = cache.lock().expect("fft plan cache poisoned");
    let (planner, map) = &mut *guard;
    map.entry((len, forward))
        .or_insert_with(|| {
            if forward {
                planner.plan_fft_forward(len)
            } else {
                planner.plan_fft_inverse(len)
            }
        })
        .clone()
}

/// In-place forward DFT along every axis of the (flattened) field.
pub fn fft_forward(grid: &Grid, values: &mut [Complex64]) {
    match grid.dim() {
        1 => plan(grid.points(0), true).process(values),
        _ => fft2(grid, values, true),
    }
}

/// In-place inverse DFT along every axis, normalized by the total point count.
pub fn fft_inverse(grid: &Grid, values: &mut [Complex64]) {
    match grid.dim() {
        1 => plan(grid.points(0), false).process(values),
        _ => fft2(grid, values, false),
    }
    let scale = 1.0 / grid.total_points() as f64;
    for v in values.iter_mut() {
        *v *= scale;
    }
}

fn fft2(grid: &Grid, values: &mut [Complex64], forward: bool) {
    let (n0, n1) = (grid.points(0), grid.points(1));
    let row_plan = plan(n1, forward);
    for row in values.chunks_exact_mut(n1) {
        row_plan.process(row);
    }
    let col_plan = plan(n0, forward);
    let mut scratch = vec![Complex64::default(); n0];
    for j in 0..n1 {
        for i in 0..n0 {
            scratch[i] = values[i * n1 + j];
        }
        col_plan.process(&mut scratch);
        for i in 0..n0 {
            values[i * n1 + j] = scratch[i];
        }
    }
}

/// Apply a diagonal-in-k multiplier: `values <- ifft(m(k) * fft(values))`.
/// The multiplier receives the signed wavenumber of each axis.
pub fn apply_multiplier<F>(grid: &Grid, values: &mut [Complex64], mul: F)
where
    F: Fn(&[f64]) -> Complex64,
{
    fft_forward(grid, values);
    match grid.dim() {
        1 => {
            for (j, v) in values.iter_mut().enumerate() {
                *v *= mul(&[grid.fft_wavenumber(0, j)]);
            }
        }
        _ => {
            let n1 = grid.points(1);
            for (idx, v) in values.iter_mut().enumerate() {
                let k0 = grid.fft_wavenumber(0, idx / n1);
                let k1 = grid.fft_wavenumber(1, idx % n1);
                *v *= mul(&[k0, k1]);
            }
        }
    }
    fft_inverse(grid, values);
}

/// Spectral partial derivative along `axis` of a complex field.
pub fn gradient_axis(grid: &Grid, values: &[Complex64], axis: usize) -> Vec<Complex64> {
    let mut out = values.to_vec();
    apply_multiplier(grid, &mut out, |k| Complex64::new(0.0, k[axis]));
    out
}

/// Spectral partial derivative along `axis` of a real field; returns the real part.
pub fn gradient_axis_real(grid: &Grid, values: &[f64], axis: usize) -> Vec<f64> {
    let mut buf: Vec<Complex64> = values.iter().map(|&r| Complex64::new(r, 0.0)).collect();
    apply_multiplier(grid, &mut buf, |k| Complex64::new(0.0, k[axis]));
    buf.iter().map(|c| c.re).collect()
}

/// Spectral Laplacian of a real field.
pub fn laplacian_real(grid: &Grid, values: &[f64]) -> Vec<f64> {
    let mut buf: Vec<Complex64> = values.iter().map(|&r| Complex64::new(r, 0.0)).collect();
    apply_multiplier(grid, &mut buf, |k| {
        Complex64::new(-k.iter().map(|ki| ki * ki).sum::<f64>(), 0.0)
    });
    buf.iter().map(|c| c.re).collect()
}

/// Zero every mode with `|k_axis| > frac * nyquist(axis)` on any axis.
pub fn project_lowpass(grid: &Grid, values: &[Complex64], frac: f64) -> Vec<Complex64> {
    let mut out = values.to_vec();
    let cuts: Vec<f64> = (0..grid.dim()).map(|a| frac * grid.nyquist(a)).collect();
    fft_forward(grid, &mut out);
    match grid.dim() {
        1 => {
            for (j, v) in out.iter_mut().enumerate() {
                if grid.fft_wavenumber(0, j).abs() > cuts[0] {
                    *v = Complex64::default();
                }
            }
        }
        _ => {
            let n1 = grid.points(1);
            for (idx, v) in out.iter_mut().enumerate() {
                let k0 = grid.fft_wavenumber(0, idx / n1).abs();
                let k1 = grid.fft_wavenumber(1, idx % n1).abs();
                if k0 > cuts[0] || k1 > cuts[1] {
                    *v = Complex64::default();
                }
            }
        }
    }
    fft_inverse(grid, &mut out);
    out
}

/// Reorder FFT-ordered bins into increasing-wavenumber order (fftshift).
pub fn shift_to_sorted(grid: &Grid, values: &[Complex64]) -> Vec<Complex64> {
    match grid.dim() {
        1 => {
            let n = grid.points(0);
            let mut out = vec![Complex64::default(); n];
            for j in 0..n {
                out[(j + n / 2) % n] = values[j];
            }
            out
        }
        _ => {
            let (n0, n1) = (grid.points(0), grid.points(1));
            let mut out = vec![Complex64::default(); n0 * n1];
            for i in 0..n0 {
                for j in 0..n1 {
                    out[((i + n0 / 2) % n0) * n1 + (j + n1 / 2) % n1] = values[i * n1 + j];
                }
            }
            out
        }
    }
}

/// Map a sorted-momentum-grid index back to the FFT bin it came from.
pub fn sorted_to_fft_index(n: usize, sorted: usize) -> usize {
    (sorted + n / 2) % n
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::TAU;

    #[test]
    fn roundtrip_is_identity() {
        let g = Grid::new_1d(64, 10.0).unwrap();
        let orig: Vec<Complex64> = (0..64)
            .map(|i| Complex64::new((i as f64 * 0.3).sin(), (i as f64 * 0.7).cos()))
            .collect();
        let mut v = orig.clone();
        fft_forward(&g, &mut v);
        fft_inverse(&g, &mut v);
        for (a, b) in orig.iter().zip(&v) {
            assert!((a - b).norm() < 1e-13);
        }
    }

    #[test]
    fn gradient_of_plane_wave() {
        let g = Grid::new_1d(64, 8.0).unwrap();
        let k0 = 3.0 * TAU / 8.0;
        let v: Vec<Complex64> = (0..64)
            .map(|i| Complex64::new(0.0, k0 * g.coord(0, i)).exp())
            .collect();
        let dv = gradient_axis(&g, &v, 0);
        for (d, orig) in dv.iter().zip(&v) {
            let expect = Complex64::new(0.0, k0) * orig;
            assert!((d - expect).norm() < 1e-11);
        }
    }

    #[test]
    fn gradient_2d_axes_are_independent() {
        let g = Grid::new_2d([16, 32], [4.0, 8.0]).unwrap();
        let k0 = 2.0 * TAU / 4.0;
        let k1 = 3.0 * TAU / 8.0;
        let mut v = vec![Complex64::default(); g.total_points()];
        for i in 0..16 {
            for j in 0..32 {
                let phase = k0 * g.coord(0, i) + k1 * g.coord(1, j);
                v[g.index2(i, j)] = Complex64::new(0.0, phase).exp();
            }
        }
        let d0 = gradient_axis(&g, &v, 0);
        let d1 = gradient_axis(&g, &v, 1);
        for idx in 0..v.len() {
            assert!((d0[idx] - Complex64::new(0.0, k0) * v[idx]).norm() < 1e-10);
            assert!((d1[idx] - Complex64::new(0.0, k1) * v[idx]).norm() < 1e-10);
        }
    }

    #[test]
    fn laplacian_of_gaussian_matches_analytic() {
        let g = Grid::new_1d(256, 24.0).unwrap();
        let rho: Vec<f64> = g.coords(0).iter().map(|&x| (-x * x).exp()).collect();
        let lap = laplacian_real(&g, &rho);
        for (i, &x) in g.coords(0).iter().enumerate() {
            if x.abs() < 3.0 {
                let expect = (4.0 * x * x - 2.0) * (-x * x).exp();
                assert!(
                    (lap[i] - expect).abs() < 1e-10,
                    "x={x}: {} vs {expect}",
                    lap[i]
                );
            }
        }
    }

    #[test]
    fn lowpass_removes_high_modes_only() {
        let g = Grid::new_1d(64, 8.0).unwrap();
        let dk = g.momentum_spacing(0);
        let low: Vec<Complex64> = (0..64)
            .map(|i| Complex64::new(0.0, 2.0 * dk * g.coord(0, i)).exp())
            .collect();
        let high: Vec<Complex64> = (0..64)
            .map(|i| Complex64::new(0.0, 20.0 * dk * g.coord(0, i)).exp())
            .collect();
        let sum: Vec<Complex64> = low.iter().zip(&high).map(|(a, b)| a + b).collect();
        let filtered = project_lowpass(&g, &sum, 1.0 / 3.0);
        for (f, l) in filtered.iter().zip(&low) {
            assert!((f - l).norm() < 1e-12);
        }
    }
}
