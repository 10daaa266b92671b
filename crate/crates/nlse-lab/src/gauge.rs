//! Nonlinear gauge transformations of the third kind, generalized
//! projections, and sampling-based certification of topological equivalence
//! between two quantum systems.
//!
//! The gauge map is `N_gamma(psi) = psi * exp(i gamma ln|psi|)` with
//! `|psi| = sqrt(rho_eff)`; it preserves every positional probability and
//! composes projectively: `N_a . N_b = N_{a+b}`.

use num_complex::Complex64;

use crate::dynamics::{propagate, EvolutionSpec};
use crate::error::{NlseError, Result};
use crate::field::{born_probability, distance, norm, Wavefunction};
use crate::functionals::NodeFloorPolicy;
use crate::grid::Region;
use crate::spectral;

/// Time-dependent gauge parameter `gamma_t` with its exact derivative.
#[derive(Debug, Clone, PartialEq)]
pub enum GaugeSchedule {
    Constant(f64),
    /// Breakpoint list `(t, gamma)`; `gamma_dot` is the segment slope.
    PiecewiseLinear(Vec<(f64, f64)>),
}

impl GaugeSchedule {
    pub fn validate(&self) -> Result<()> {
        match self {
            GaugeSchedule::Constant(g) => {
                if !g.is_finite() {
                    return Err(NlseError::Configuration("non-finite gamma".into()));
                }
            }
            GaugeSchedule::PiecewiseLinear(pts) => {
                if pts.len() < 2 {
                    return Err(NlseError::Configuration(
                        "piecewise-linear schedule needs at least two breakpoints".into(),
                    ));
                }
                for w in pts.windows(2) {
                    if !(w[1].0 > w[0].0) {
                        return Err(NlseError::Configuration(
                            "schedule breakpoints must be strictly increasing in time".into(),
                        ));
                    }
                }
                if pts.iter().any(|(t, g)| !t.is_finite() || !g.is_finite()) {
                    return Err(NlseError::Configuration("non-finite breakpoint".into()));
                }
            }
        }
        Ok(())
    }

    pub fn gamma(&self, t: f64) -> f64 {
        match self {
            GaugeSchedule::Constant(g) => *g,
            GaugeSchedule::PiecewiseLinear(pts) => {
                if t <= pts[0].0 {
                    return pts[0].1;
                }
                for w in pts.windows(2) {
                    if t <= w[1].0 {
                        let s = (w[1].1 - w[0].1) / (w[1].0 - w[0].0);
                        return w[0].1 + s * (t - w[0].0);
                    }
                }
                pts[pts.len() - 1].1
            }
        }
    }

    pub fn gamma_dot(&self, t: f64) -> f64 {
        match self {
            GaugeSchedule::Constant(_) => 0.0,
            GaugeSchedule::PiecewiseLinear(pts) => {
                if t <= pts[0].0 {
                    return 0.0;
                }
                for w in pts.windows(2) {
                    if t <= w[1].0 {
                        return (w[1].1 - w[0].1) / (w[1].0 - w[0].0);
                    }
                }
                0.0
            }
        }
    }
}

/// `N_gamma(psi) = psi exp(i gamma ln sqrt(rho_eff))`; phase-only, so the
/// density, every Born probability, and the norm are untouched.
pub fn apply_gauge(psi: &Wavefunction, gamma: f64, policy: &NodeFloorPolicy) -> Result<Wavefunction> {
    psi.check_finite("gauge input")?;
    let n2: f64 = psi.values.iter().map(|v| v.norm_sqr()).sum();
    if n2 <= 0.0 {
        return Err(NlseError::DegenerateState);
    }
    if gamma == 0.0 {
        return Ok(psi.clone());
    }
    let rho: Vec<f64> = psi.values.iter().map(|v| v.norm_sqr()).collect();
    let rho_eff = policy.effective_density(&rho);
    let mut out = psi.clone();
    for (v, re) in out.values.iter_mut().zip(&rho_eff) {
        // gamma * ln|psi| = (gamma/2) * ln(rho_eff)
        let phase = 0.5 * gamma * re.ln();
        *v *= Complex64::new(0.0, phase).exp();
    }
    Ok(out)
}

/// Inverse gauge map, `N_gamma^{-1} = N_{-gamma}`.
pub fn invert_gauge(psi: &Wavefunction, gamma: f64, policy: &NodeFloorPolicy) -> Result<Wavefunction> {
    apply_gauge(psi, -gamma, policy)
}

/// A linear orthogonal projection realizable on the grid.
#[derive(Debug, Clone)]
pub enum LinearProjectionSpec {
    Identity,
    /// Indicator of a position-space region.
    PositionRegion(Region),
    /// Band limit: indicator of a region on the sorted momentum grid.
    MomentumBand(Region),
    /// Pointwise multiplication by a 0/1 field (checked for idempotency).
    Mask(Vec<f64>),
}

impl LinearProjectionSpec {
    fn validate(&self, psi: &Wavefunction) -> Result<()> {
        match self {
            LinearProjectionSpec::Mask(m) => {
                if m.len() != psi.values.len() {
                    return Err(NlseError::ShapeMismatch { context: "projection mask size".into() });
                }
                if m.iter().any(|&v| (v * (1.0 - v)).abs() > 1e-15) {
                    return Err(NlseError::InvalidProjection(
                        "mask values must be 0 or 1 (idempotency)".into(),
                    ));
                }
            }
            LinearProjectionSpec::PositionRegion(r) => {
                if r.dim() != psi.grid.dim() {
                    return Err(NlseError::ShapeMismatch { context: "projection region".into() });
                }
            }
            LinearProjectionSpec::MomentumBand(r) => {
                if r.dim() != psi.grid.dim() {
                    return Err(NlseError::ShapeMismatch { context: "momentum band region".into() });
                }
            }
            LinearProjectionSpec::Identity => {}
        }
        Ok(())
    }

    /// Apply the orthogonal projection.
    pub fn apply(&self, psi: &Wavefunction) -> Result<Wavefunction> {
        self.validate(psi)?;
        match self {
            LinearProjectionSpec::Identity => Ok(psi.clone()),
            LinearProjectionSpec::Mask(m) => {
                let mut out = psi.clone();
                for (v, &w) in out.values.iter_mut().zip(m) {
                    *v *= w;
                }
                Ok(out)
            }
            LinearProjectionSpec::PositionRegion(r) => {
                let mut out = psi.clone();
                let mut keep = vec![false; out.values.len()];
                for idx in r.cells(&psi.grid) {
                    keep[idx] = true;
                }
                for (v, k) in out.values.iter_mut().zip(&keep) {
                    if !k {
                        *v = Complex64::default();
                    }
                }
                Ok(out)
            }
            LinearProjectionSpec::MomentumBand(r) => {
                let g = &psi.grid;
                let mut buf = psi.values.clone();
                spectral::fft_forward(g, &mut buf);
                // region indices refer to the sorted momentum grid
                let mut keep = vec![false; buf.len()];
                match g.dim() {
                    1 => {
                        let n = g.points(0);
                        for sorted in r.cells(&g.momentum_grid()) {
                            keep[spectral::sorted_to_fft_index(n, sorted)] = true;
                        }
                    }
                    _ => {
                        let (n0, n1) = (g.points(0), g.points(1));
                        for sorted in r.cells(&g.momentum_grid()) {
                            let i = sorted / n1;
                            let j = sorted % n1;
                            keep[spectral::sorted_to_fft_index(n0, i) * n1
                                + spectral::sorted_to_fft_index(n1, j)] = true;
                        }
                    }
                }
                for (v, k) in buf.iter_mut().zip(&keep) {
                    if !k {
                        *v = Complex64::default();
                    }
                }
                spectral::fft_inverse(g, &mut buf);
                let mut out = Wavefunction::new(g.clone(), buf)?;
                out.time = psi.time;
                Ok(out)
            }
        }
    }
}

/// Generalized projection `E = N_gamma . E_hat . N_gamma^{-1}`; idempotent,
/// and reduces exactly to `E_hat` at `gamma = 0`.
pub fn generalized_projection(
    psi: &Wavefunction,
    e_hat: &LinearProjectionSpec,
    gamma: f64,
    policy: &NodeFloorPolicy,
) -> Result<Wavefunction> {
    let pulled = invert_gauge(psi, gamma, policy)?;
    let projected = e_hat.apply(&pulled)?;
    let n2: f64 = projected.values.iter().map(|v| v.norm_sqr()).sum();
    if n2 <= 0.0 {
        // projected to the zero vector; the gauge map is undefined there but
        // the projection result is unambiguous
        return Ok(projected);
    }
    apply_gauge(&projected, gamma, policy)
}

/// Map spec for equivalence checks: how to carry states from system A to B.
#[derive(Debug, Clone)]
pub enum MapSpec {
    Identity,
    /// Third-kind gauge map with a (possibly time-dependent) parameter.
    ThirdKind(GaugeSchedule),
    /// Ordinary (linear, second-kind) gauge transformation `psi -> e^{i theta(x)} psi`.
    SecondKind { theta: Vec<f64> },
}

impl MapSpec {
    pub fn apply(&self, psi: &Wavefunction, t: f64, policy: &NodeFloorPolicy) -> Result<Wavefunction> {
        match self {
            MapSpec::Identity => Ok(psi.clone()),
            MapSpec::ThirdKind(s) => apply_gauge(psi, s.gamma(t), policy),
            MapSpec::SecondKind { theta } => {
                if theta.len() != psi.values.len() {
                    return Err(NlseError::ShapeMismatch { context: "theta field size".into() });
                }
                let mut out = psi.clone();
                for (v, &th) in out.values.iter_mut().zip(theta) {
                    *v *= Complex64::new(0.0, th).exp();
                }
                Ok(out)
            }
        }
    }

    pub fn apply_inverse(
        &self,
        psi: &Wavefunction,
        t: f64,
        policy: &NodeFloorPolicy,
    ) -> Result<Wavefunction> {
        match self {
            MapSpec::Identity => Ok(psi.clone()),
            MapSpec::ThirdKind(s) => invert_gauge(psi, s.gamma(t), policy),
            MapSpec::SecondKind { theta } => {
                let neg: Vec<f64> = theta.iter().map(|&t| -t).collect();
                MapSpec::SecondKind { theta: neg }.apply(psi, t, policy)
            }
        }
    }
}

/// Worst-case residuals of a sampled topological-equivalence check.
#[derive(Debug, Clone)]
pub struct EquivalenceReport {
    pub max_position_residual: f64,
    pub max_evolution_residual: f64,
    pub sample_count: usize,
    pub position_tolerance: f64,
    pub evolution_tolerance: f64,
    pub pass: bool,
}

/// Check `p_B = p_B . N` on all sampled `(state, region)` pairs and
/// `T_t = N^{-1} . T_hat_t . N` on all sampled `(state, time)` pairs.
/// Sampling-based: a fail verdict is conclusive, a pass verdict only bounds
/// the residual on the sampled sets.
#[allow(clippy::too_many_arguments)]
pub fn check_topological_equivalence(
    system_a: &EvolutionSpec,
    system_b: &EvolutionSpec,
    map: &MapSpec,
    states: &[Wavefunction],
    regions: &[Region],
    times: &[f64],
    position_tolerance: f64,
    evolution_tolerance: f64,
) -> Result<EquivalenceReport> {
    if states.is_empty() || regions.is_empty() || times.is_empty() {
        return Err(NlseError::EmptySamples(
            "equivalence check needs states, regions and times".into(),
        ));
    }
    let policy = system_b.floor;
    let mut max_pos = 0.0_f64;
    for psi in states {
        let mapped = map.apply(psi, 0.0, &policy)?;
        for region in regions {
            let pa = born_probability(psi, region)?;
            let pb = born_probability(&mapped, region)?;
            max_pos = max_pos.max((pa - pb).abs());
        }
    }

    let mut max_evo = 0.0_f64;
    for psi in states {
        let n = norm(psi)?;
        for &t in times {
            let a_side = match propagate(system_a, psi, t)? {
                Some(w) => w,
                None => {
                    max_evo = f64::INFINITY;
                    continue;
                }
            };
            let mapped = map.apply(psi, 0.0, &policy)?;
            let b_evolved = match propagate(system_b, &mapped, t)? {
                Some(w) => w,
                None => {
                    max_evo = f64::INFINITY;
                    continue;
                }
            };
            let pulled_back = map.apply_inverse(&b_evolved, t, &policy)?;
            max_evo = max_evo.max(distance(&a_side, &pulled_back)? / n);
        }
    }

    Ok(EquivalenceReport {
        max_position_residual: max_pos,
        max_evolution_residual: max_evo,
        sample_count: states.len() * (regions.len() + times.len()),
        position_tolerance,
        evolution_tolerance,
        pass: max_pos <= position_tolerance && max_evo <= evolution_tolerance,
    })
}
