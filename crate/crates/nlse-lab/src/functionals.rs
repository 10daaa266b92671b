//! The ratio functionals of the nonlinear family and the local part of its
//! generator.
//!
//! With `rho = |psi|^2` and `J = Im(conj(psi) grad psi)`:
//!
//! ```text
//! R1 = div J / rho      R2 = lap rho / rho       R3 = J.J / rho^2
//! R4 = J.grad rho / rho^2   R5 = grad rho . grad rho / rho^2   LOG = ln rho
//! ```
//!
//! Every denominator (and the logarithm) uses the floored density
//! `rho_eff = rho + epsilon_rel * max(rho)`, a smooth relative floor that
//! keeps the fields defined at density nodes, bounds `LOG` below by roughly
//! `ln(epsilon_rel)`, and is exactly covariant under `psi -> c psi`. All
//! derivatives are spectral.

use num_complex::Complex64;

use crate::dynamics::CoefficientSet;
use crate::error::{NlseError, Result};
use crate::field::{density, Wavefunction};
use crate::grid::Grid;
use crate::spectral;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FunctionalId {
    R1,
    R2,
    R3,
    R4,
    R5,
    Log,
}

impl FunctionalId {
    pub const ALL: [FunctionalId; 6] = [
        FunctionalId::R1,
        FunctionalId::R2,
        FunctionalId::R3,
        FunctionalId::R4,
        FunctionalId::R5,
        FunctionalId::Log,
    ];
}

/// Relative density floor used in every functional denominator and inside LOG.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NodeFloorPolicy {
    pub epsilon_rel: f64,
}

impl Default for NodeFloorPolicy {
    fn default() -> Self {
        NodeFloorPolicy { epsilon_rel: 1e-12 }
    }
}

impl NodeFloorPolicy {
    pub fn new(epsilon_rel: f64) -> Result<Self> {
        if !(epsilon_rel > 0.0 && epsilon_rel <= 1e-6) {
            return Err(NlseError::Domain(format!(
                "epsilon_rel {epsilon_rel} outside (0, 1e-6]"
            )));
        }
        Ok(NodeFloorPolicy { epsilon_rel })
    }

    /// Floored density `rho + epsilon_rel * max(rho)`.
    pub fn effective_density(&self, rho: &[f64]) -> Vec<f64> {
        let max = rho.iter().cloned().fold(0.0_f64, f64::max);
        let floor = self.epsilon_rel * max;
        rho.iter().map(|&r| r + floor).collect()
    }
}

/// All six functional fields of one state, evaluated together (they share
/// intermediate spectral derivatives).
pub struct FunctionalSet {
    pub r1: Vec<f64>,
    pub r2: Vec<f64>,
    pub r3: Vec<f64>,
    pub r4: Vec<f64>,
    pub r5: Vec<f64>,
    pub log: Vec<f64>,
    /// `rho / rho_eff`; 1 in the bulk, falls smoothly to 0 in floored cells.
    pub bulk_mask: Vec<f64>,
}

pub fn evaluate_all(psi: &Wavefunction, policy: &NodeFloorPolicy) -> Result<FunctionalSet> {
    psi.check_finite("functional input")?;
    let norm_sq: f64 = psi.values.iter().map(|v| v.norm_sqr()).sum();
    if norm_sq <= 0.0 {
        return Err(NlseError::DegenerateState);
    }
    let grid = &psi.grid;
    let rho = density(psi)?.values;
    let rho_eff = policy.effective_density(&rho);
    let n = rho.len();

    let mut j_components = Vec::with_capacity(grid.dim());
    for axis in 0..grid.dim() {
        let dpsi = spectral::gradient_axis(grid, &psi.values, axis);
        let j: Vec<f64> = psi
            .values
            .iter()
            .zip(&dpsi)
            .map(|(p, d)| (p.conj() * d).im)
            .collect();
        j_components.push(j);
    }
    let mut grad_rho = Vec::with_capacity(grid.dim());
    for axis in 0..grid.dim() {
        grad_rho.push(spectral::gradient_axis_real(grid, &rho, axis));
    }
    let lap_rho = spectral::laplacian_real(grid, &rho);
    let mut div_j = vec![0.0; n];
    for (axis, j) in j_components.iter().enumerate() {
        let d = spectral::gradient_axis_real(grid, j, axis);
        for (acc, v) in div_j.iter_mut().zip(&d) {
            *acc += v;
        }
    }

    let mut r1 = vec![0.0; n];
    let mut r2 = vec![0.0; n];
    let mut r3 = vec![0.0; n];
    let mut r4 = vec![0.0; n];
    let mut r5 = vec![0.0; n];
    let mut log = vec![0.0; n];
    let mut bulk_mask = vec![0.0; n];
    for i in 0..n {
        let re = rho_eff[i];
        let re2 = re * re;
        let jj: f64 = j_components.iter().map(|j| j[i] * j[i]).sum();
        let j_dot_grad: f64 = j_components
            .iter()
            .zip(&grad_rho)
            .map(|(j, g)| j[i] * g[i])
            .sum();
        let grad_sq: f64 = grad_rho.iter().map(|g| g[i] * g[i]).sum();
        r1[i] = div_j[i] / re;
        r2[i] = lap_rho[i] / re;
        r3[i] = jj / re2;
        r4[i] = j_dot_grad / re2;
        r5[i] = grad_sq / re2;
        log[i] = re.ln();
        bulk_mask[i] = rho[i] / re;
    }
    Ok(FunctionalSet { r1, r2, r3, r4, r5, log, bulk_mask })
}

/// Evaluate one functional field.
pub fn evaluate(
    id: FunctionalId,
    psi: &Wavefunction,
    policy: &NodeFloorPolicy,
) -> Result<Vec<f64>> {
    let set = evaluate_all(psi, policy)?;
    Ok(match id {
        FunctionalId::R1 => set.r1,
        FunctionalId::R2 => set.r2,
        FunctionalId::R3 => set.r3,
        FunctionalId::R4 => set.r4,
        FunctionalId::R5 => set.r5,
        FunctionalId::Log => set.log,
    })
}

/// Local generator `h` of the family, defined through
/// `i dpsi/dt = h(psi) psi + kinetic`:
///
/// `h = i (nu1 R1 + nu2 R2) + mu0 V + sum_k mu_k R_k + alpha1 ln rho`.
pub fn local_generator(
    psi: &Wavefunction,
    coeffs: &CoefficientSet,
    potential: Option<&[f64]>,
    policy: &NodeFloorPolicy,
) -> Result<Vec<Complex64>> {
    if !coeffs.all_finite() {
        return Err(NlseError::Configuration("non-finite coefficients".into()));
    }
    if let Some(v) = potential {
        if v.len() != psi.values.len() {
            return Err(NlseError::ShapeMismatch { context: "potential field size".into() });
        }
    }
    let set = evaluate_all(psi, policy)?;
    let n = psi.values.len();
    let mut h = vec![Complex64::default(); n];
    for i in 0..n {
        let real = coeffs.mu0 * potential.map_or(0.0, |v| v[i])
            + coeffs.mu1 * set.r1[i]
            + coeffs.mu2 * set.r2[i]
            + coeffs.mu3 * set.r3[i]
            + coeffs.mu4 * set.r4[i]
            + coeffs.mu5 * set.r5[i]
            + coeffs.alpha1 * set.log[i];
        let imag = coeffs.nu1 * set.r1[i] + coeffs.nu2 * set.r2[i];
        h[i] = Complex64::new(real, imag);
    }
    Ok(h)
}

/// The local (non-kinetic) part of the right-hand side of the family,
/// `h(psi) * psi`, ready for splitting integration. With only `mu0 = 1` this
/// is the potential term `V psi`.
pub fn nonlinear_rhs(
    psi: &Wavefunction,
    coeffs: &CoefficientSet,
    potential: Option<&[f64]>,
    policy: &NodeFloorPolicy,
) -> Result<Vec<Complex64>> {
    let h = local_generator(psi, coeffs, potential, policy)?;
    Ok(h.iter().zip(&psi.values).map(|(hi, p)| hi * p).collect())
}

/// Grid used by dynamics for the masked, band-limited generator evaluation:
/// the functionals are computed on the low-pass projection of `psi` and the
/// resulting generator is multiplied by the bulk mask `rho/rho_eff`.
pub(crate) fn masked_generator(
    grid: &Grid,
    values: &[Complex64],
    coeffs: &CoefficientSet,
    potential: Option<&[f64]>,
    policy: &NodeFloorPolicy,
    filter_fraction: f64,
) -> Result<Vec<Complex64>> {
    let projected = if filter_fraction < 1.0 {
        spectral::project_lowpass(grid, values, filter_fraction)
    } else {
        values.to_vec()
    };
    let mut proxy = Wavefunction::new(grid.clone(), projected)?;
    proxy.time = 0.0;
    if !coeffs.has_nonlinear_terms() {
        // linear case: the generator is exactly mu0 V, no functional evaluation
        let n = values.len();
        let mut h = vec![Complex64::default(); n];
        if let Some(v) = potential {
            for i in 0..n {
                h[i] = Complex64::new(coeffs.mu0 * v[i], 0.0);
            }
        }
        return Ok(h);
    }
    let set = evaluate_all(&proxy, policy)?;
    let n = values.len();
    let mut h = vec![Complex64::default(); n];
    for i in 0..n {
        let w = set.bulk_mask[i];
        let real = coeffs.mu1 * set.r1[i]
            + coeffs.mu2 * set.r2[i]
            + coeffs.mu3 * set.r3[i]
            + coeffs.mu4 * set.r4[i]
            + coeffs.mu5 * set.r5[i]
            + coeffs.alpha1 * set.log[i];
        let imag = coeffs.nu1 * set.r1[i] + coeffs.nu2 * set.r2[i];
        h[i] = Complex64::new(
            w * real + coeffs.mu0 * potential.map_or(0.0, |v| v[i]),
            w * imag,
        );
    }
    Ok(h)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{gaussian_packet, plane_wave};
    use crate::grid::Grid;

    fn policy() -> NodeFloorPolicy {
        NodeFloorPolicy::default()
    }

    #[test]
    fn policy_range_is_enforced() {
        assert!(NodeFloorPolicy::new(1e-12).is_ok());
        assert!(NodeFloorPolicy::new(0.0).is_err());
        assert!(NodeFloorPolicy::new(1e-3).is_err());
    }

    #[test]
    fn current_functionals_vanish_for_real_state() {
        // J = 0 exactly; numerically the ratios are roundoff-over-density, so
        // the bound is checked where the density is not vanishingly small
        let g = Grid::new_1d(256, 24.0).unwrap();
        let psi = Wavefunction::from_fn_1d(&g, |x| {
            num_complex::Complex64::new((-x * x / 4.0).exp(), 0.0)
        })
        .unwrap();
        let rho = crate::field::density(&psi).unwrap().values;
        let max = rho.iter().cloned().fold(0.0_f64, f64::max);
        let set = evaluate_all(&psi, &policy()).unwrap();
        for i in 0..256 {
            if rho[i] >= 1e-3 * max {
                assert!(set.r1[i].abs() < 1e-9);
                assert!(set.r3[i].abs() < 1e-9);
                assert!(set.r4[i].abs() < 1e-9);
            }
        }
    }

    #[test]
    fn gaussian_r2_r5_match_symbolic_oracle() {
        // rho = exp(-x^2): R2 = 4x^2 - 2, R5 = 4x^2 away from the box edges
        let g = Grid::new_1d(512, 24.0).unwrap();
        let psi = Wavefunction::from_fn_1d(&g, |x| {
            num_complex::Complex64::new((-x * x / 2.0).exp(), 0.0)
        })
        .unwrap();
        let rho = crate::field::density(&psi).unwrap().values;
        let max = rho.iter().cloned().fold(0.0_f64, f64::max);
        let set = evaluate_all(&psi, &policy()).unwrap();
        for (i, &x) in g.coords(0).iter().enumerate() {
            // the floor biases a ratio R by |R| eps/rho_rel; stay where that
            // bias is below the tolerance
            if rho[i] >= 5e-3 * max {
                assert!(
                    (set.r2[i] - (4.0 * x * x - 2.0)).abs() < 1e-8,
                    "R2 at x={x}: {}",
                    set.r2[i]
                );
                assert!(
                    (set.r5[i] - 4.0 * x * x).abs() < 1e-8,
                    "R5 at x={x}: {}",
                    set.r5[i]
                );
            }
        }
    }

    #[test]
    fn plane_wave_functionals_analytic() {
        let g = Grid::new_1d(128, 16.0).unwrap();
        let dk = g.momentum_spacing(0);
        let k0 = 4.0 * dk;
        let psi = plane_wave(&g, k0).unwrap();
        let set = evaluate_all(&psi, &policy()).unwrap();
        for i in 0..128 {
            assert!((set.r3[i] - k0 * k0).abs() < 1e-10);
            assert!(set.r2[i].abs() < 1e-10);
            assert!(set.r5[i].abs() < 1e-10);
            // LOG = ln(1 + eps) ~ eps, not exactly zero under the additive floor
            assert!(set.log[i].abs() < 1e-11);
        }
    }

    #[test]
    fn scale_covariance_of_ratio_functionals() {
        // the ratios are homogeneous of degree zero; checked in the bulk,
        // where their roundoff is far below the 1e-10 tolerance
        let g = Grid::new_1d(256, 24.0).unwrap();
        let psi = gaussian_packet(&g, 1.5, 0.3, 1.0).unwrap();
        let scaled = psi.clone().scaled(num_complex::Complex64::new(0.3, -1.1));
        let rho = crate::field::density(&psi).unwrap().values;
        let max = rho.iter().cloned().fold(0.0_f64, f64::max);
        let a = evaluate_all(&psi, &policy()).unwrap();
        let b = evaluate_all(&scaled, &policy()).unwrap();
        let c_sq = num_complex::Complex64::new(0.3, -1.1).norm_sqr();
        for i in 0..256 {
            if rho[i] < 1e-3 * max {
                continue;
            }
            assert!((a.r1[i] - b.r1[i]).abs() < 1e-10 * (1.0 + a.r1[i].abs()));
            assert!((a.r2[i] - b.r2[i]).abs() < 1e-10 * (1.0 + a.r2[i].abs()));
            assert!((a.r3[i] - b.r3[i]).abs() < 1e-10 * (1.0 + a.r3[i].abs()));
            assert!((a.r4[i] - b.r4[i]).abs() < 1e-10 * (1.0 + a.r4[i].abs()));
            assert!((a.r5[i] - b.r5[i]).abs() < 1e-10 * (1.0 + a.r5[i].abs()));
            // LOG shifts by ln|c|^2 exactly
            assert!((b.log[i] - a.log[i] - c_sq.ln()).abs() < 1e-10);
        }
    }

    #[test]
    fn node_floor_consistency() {
        // halving epsilon changes values materially only where rho is within
        // a few floors of zero
        let g = Grid::new_1d(512, 48.0).unwrap();
        let psi = gaussian_packet(&g, 1.0, 0.0, 0.0).unwrap();
        let rho = density(&psi).unwrap().values;
        let max = rho.iter().cloned().fold(0.0_f64, f64::max);
        let p1 = NodeFloorPolicy::new(1e-10).unwrap();
        let p2 = NodeFloorPolicy::new(5e-11).unwrap();
        let a = evaluate_all(&psi, &p1).unwrap();
        let b = evaluate_all(&psi, &p2).unwrap();
        for i in 0..512 {
            if rho[i] > 1e-7 * max {
                let denom = 1.0 + a.r2[i].abs();
                assert!(
                    ((a.r2[i] - b.r2[i]) / denom).abs() < 1e-3,
                    "bulk cell {i} moved: {} vs {}",
                    a.r2[i],
                    b.r2[i]
                );
            }
        }
        // and the floored tail does move
        let moved = (0..512).any(|i| {
            rho[i] < 2.0 * 1e-10 * max && (a.r2[i] - b.r2[i]).abs() > 1e-6 * (1.0 + a.r2[i].abs())
        });
        assert!(moved);
    }

    #[test]
    fn spectral_resolution_convergence() {
        // on an analytic nodeless state the evaluation converges faster than
        // any fixed power of dx between two resolutions (at n = 64 the error
        // already sits at the roundoff-over-density floor)
        let make_err = |n: usize| -> f64 {
            let g = Grid::new_1d(n, 20.0).unwrap();
            let psi = Wavefunction::from_fn_1d(&g, |x| {
                num_complex::Complex64::new((-x * x / 2.0).exp(), 0.0)
            })
            .unwrap();
            let set = evaluate_all(&psi, &policy()).unwrap();
            let mut worst = 0.0_f64;
            for (i, &x) in g.coords(0).iter().enumerate() {
                if x.abs() < 2.5 {
                    worst = worst.max((set.r2[i] - (4.0 * x * x - 2.0)).abs());
                }
            }
            worst
        };
        let e32 = make_err(32);
        let e64 = make_err(64);
        // a 4th-order method would gain 16x; spectral gains far more
        assert!(e32 / e64.max(1e-14) > 50.0, "e32={e32}, e64={e64}");
    }

    #[test]
    fn rhs_zero_for_zero_coefficients() {
        let g = Grid::new_1d(128, 16.0).unwrap();
        let psi = gaussian_packet(&g, 1.0, 0.0, 0.0).unwrap();
        let rhs = nonlinear_rhs(&psi, &CoefficientSet::zero(), None, &policy()).unwrap();
        for v in rhs {
            assert_eq!(v, num_complex::Complex64::default());
        }
    }

    #[test]
    fn rhs_potential_only_is_v_psi() {
        let g = Grid::new_1d(128, 16.0).unwrap();
        let psi = gaussian_packet(&g, 1.0, 0.0, 0.0).unwrap();
        let v: Vec<f64> = g.coords(0).iter().map(|&x| 0.5 * x * x).collect();
        let mut coeffs = CoefficientSet::zero();
        coeffs.mu0 = 1.0;
        let rhs = nonlinear_rhs(&psi, &coeffs, Some(&v), &policy()).unwrap();
        for i in 0..128 {
            let expect = psi.values[i] * v[i];
            assert!((rhs[i] - expect).norm() < 1e-14);
        }
    }

    #[test]
    fn rhs_matches_per_term_hand_evaluation() {
        // linearizable set at constant gamma on a Gaussian: compare against an
        // independent per-term evaluation from separately computed fields
        let g = Grid::new_1d(256, 24.0).unwrap();
        let psi = gaussian_packet(&g, 1.2, 0.0, 1.0).unwrap();
        let coeffs = crate::dynamics::linearizable_coefficients(0.4, 0.0, 1.0);
        let v: Vec<f64> = g.coords(0).iter().map(|&x| 0.1 * x * x).collect();
        let rhs = nonlinear_rhs(&psi, &coeffs, Some(&v), &policy()).unwrap();

        let pol = policy();
        let r1 = evaluate(FunctionalId::R1, &psi, &pol).unwrap();
        let r2 = evaluate(FunctionalId::R2, &psi, &pol).unwrap();
        let r4 = evaluate(FunctionalId::R4, &psi, &pol).unwrap();
        let r5 = evaluate(FunctionalId::R5, &psi, &pol).unwrap();
        for i in 0..256 {
            let real = coeffs.mu0 * v[i]
                + coeffs.mu1 * r1[i]
                + coeffs.mu2 * r2[i]
                + coeffs.mu4 * r4[i]
                + coeffs.mu5 * r5[i];
            let imag = coeffs.nu2 * r2[i];
            let expect = num_complex::Complex64::new(real, imag) * psi.values[i];
            assert!((rhs[i] - expect).norm() < 1e-10);
        }
    }

    #[test]
    fn degenerate_state_is_rejected() {
        let g = Grid::new_1d(64, 8.0).unwrap();
        let psi =
            Wavefunction::new(g, vec![num_complex::Complex64::default(); 64]).unwrap();
        assert!(matches!(
            evaluate(FunctionalId::R2, &psi, &policy()),
            Err(NlseError::DegenerateState)
        ));
    }
}
