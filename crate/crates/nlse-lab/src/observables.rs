//! Derived measurement layer: effects (evolve-then-measure-position),
//! velocity-cone asymptotic momentum, mixtures and their density matrices,
//! state-equivalence testing, and the two-particle signaling experiment.

use nalgebra::{Complex, DMatrix};
use num_complex::Complex64;

use crate::dynamics::{
    propagate, propagate_nonlinear, BlowupDiagnostic, CoefficientSet, EvolutionSpec,
    PropagationOutcome,
};
use crate::error::{NlseError, Result};
use crate::field::{born_probability, fourier, norm, Wavefunction};
use crate::grid::{Grid, Region};

/// Element of the motion group, finitely presented: evolve under `evolution`
/// for `duration`, then measure position in `region`. A `None` evolution is
/// the trivial (instantaneous) effect.
#[derive(Debug, Clone)]
pub struct Effect {
    pub evolution: Option<EvolutionSpec>,
    pub duration: f64,
    pub region: Region,
}

impl Effect {
    /// Position measurement with no evolution.
    pub fn positional(region: Region) -> Self {
        Effect { evolution: None, duration: 0.0, region }
    }

    pub fn evolved(evolution: EvolutionSpec, duration: f64, region: Region) -> Self {
        Effect { evolution: Some(evolution), duration, region }
    }

    /// `f(psi) = born_probability(T(psi), region)`. The implemented family is
    /// quasi-homogeneous, so `f(c psi) = f(psi)` for `c != 0`.
    pub fn value(&self, psi: &Wavefunction) -> Result<f64> {
        let evolved = match &self.evolution {
            None => psi.clone(),
            Some(spec) => propagate(spec, psi, self.duration)?.ok_or_else(|| {
                NlseError::Configuration("blow-up while evaluating an effect".into())
            })?,
        };
        born_probability(&evolved, &self.region)
    }
}

/// Weighted ensemble of wavefunctions with weights summing to one.
#[derive(Debug, Clone)]
pub struct Mixture {
    components: Vec<(f64, Wavefunction)>,
}

impl Mixture {
    pub fn new(components: Vec<(f64, Wavefunction)>) -> Result<Self> {
        if components.is_empty() {
            return Err(NlseError::EmptySamples("mixture needs components".into()));
        }
        let grid = components[0].1.grid.clone();
        let mut total = 0.0;
        for (w, psi) in &components {
            if !(w.is_finite() && *w > 0.0) {
                return Err(NlseError::Domain(format!("mixture weight {w} must be positive")));
            }
            psi.grid.check_same_shape(&grid, "mixture components")?;
            psi.check_finite("mixture component")?;
            total += w;
        }
        if (total - 1.0).abs() > 1e-12 {
            return Err(NlseError::Domain(format!("mixture weights sum to {total}, not 1")));
        }
        Ok(Mixture { components })
    }

    pub fn components(&self) -> &[(f64, Wavefunction)] {
        &self.components
    }

    pub fn grid(&self) -> &Grid {
        &self.components[0].1.grid
    }

    /// Merge two mixtures with weights `w` and `1 - w`.
    pub fn blend(a: &Mixture, b: &Mixture, w: f64) -> Result<Mixture> {
        if !(0.0..=1.0).contains(&w) {
            return Err(NlseError::Domain(format!("blend weight {w} outside [0,1]")));
        }
        let mut components = Vec::new();
        for (wa, psi) in &a.components {
            components.push((w * wa, psi.clone()));
        }
        for (wb, psi) in &b.components {
            components.push(((1.0 - w) * wb, psi.clone()));
        }
        components.retain(|(w, _)| *w > 0.0);
        Mixture::new(components)
    }
}

/// `f[pi] = sum_j lambda_j f(phi_j)`.
pub fn effect_on_mixture(effect: &Effect, mixture: &Mixture) -> Result<f64> {
    let mut acc = 0.0;
    for (w, psi) in mixture.components() {
        let n: f64 = psi.values.iter().map(|v| v.norm_sqr()).sum();
        if n <= 0.0 {
            return Err(NlseError::DegenerateState);
        }
        acc += w * effect.value(psi)?;
    }
    Ok(acc)
}

/// Outcome of a sampled distinguishability test. An `Indistinguishable`
/// verdict is relative to the sampled effect family.
#[derive(Debug, Clone)]
pub enum Distinguishability {
    Indistinguishable { max_gap: f64 },
    Distinguishable { witness: usize, gap: f64 },
}

/// Scan the effect family for a statistic separating the two mixtures.
pub fn mixtures_distinguishable(
    pi1: &Mixture,
    pi2: &Mixture,
    effects: &[Effect],
    tol: f64,
) -> Result<Distinguishability> {
    if effects.is_empty() {
        return Err(NlseError::EmptySamples("effect family is empty".into()));
    }
    let mut max_gap = 0.0_f64;
    let mut witness = 0;
    for (idx, f) in effects.iter().enumerate() {
        let gap = (effect_on_mixture(f, pi1)? - effect_on_mixture(f, pi2)?).abs();
        if gap > max_gap {
            max_gap = gap;
            witness = idx;
        }
    }
    if max_gap > tol {
        Ok(Distinguishability::Distinguishable { witness, gap: max_gap })
    } else {
        Ok(Distinguishability::Indistinguishable { max_gap })
    }
}

/// Dense one-particle density matrix `W(x, x') = sum_j w_j phi_j(x) conj(phi_j(x'))`,
/// desk-scale grids only.
#[derive(Debug, Clone)]
pub struct DensityMatrix {
    pub grid: Grid,
    /// Row-major `n x n`.
    pub data: Vec<Complex64>,
}

pub const DENSITY_MATRIX_MAX_POINTS: usize = 512;

/// Build the density matrix of a mixture (components are normalized first).
pub fn density_matrix(mixture: &Mixture) -> Result<DensityMatrix> {
    let grid = mixture.grid().clone();
    if grid.dim() != 1 {
        return Err(NlseError::Capacity("density matrices are 1D-only".into()));
    }
    let n = grid.points(0);
    if n > DENSITY_MATRIX_MAX_POINTS {
        return Err(NlseError::Capacity(format!(
            "grid has {n} points, density matrices cap at {DENSITY_MATRIX_MAX_POINTS}"
        )));
    }
    let mut data = vec![Complex64::default(); n * n];
    for (w, psi) in mixture.components() {
        let nrm = norm(psi)?;
        if nrm <= 0.0 {
            return Err(NlseError::DegenerateState);
        }
        let scale = w / (nrm * nrm);
        for i in 0..n {
            for j in 0..n {
                data[i * n + j] += scale * psi.values[i] * psi.values[j].conj();
            }
        }
    }
    Ok(DensityMatrix { grid, data })
}

impl DensityMatrix {
    pub fn size(&self) -> usize {
        self.grid.points(0)
    }

    /// Trace with the grid measure; 1 for normalized components.
    pub fn trace(&self) -> f64 {
        let n = self.size();
        let dv = self.grid.cell_volume();
        (0..n).map(|i| self.data[i * n + i].re).sum::<f64>() * dv
    }

    pub fn hermiticity_defect(&self) -> f64 {
        let n = self.size();
        let mut worst = 0.0_f64;
        for i in 0..n {
            for j in 0..n {
                worst = worst.max((self.data[i * n + j] - self.data[j * n + i].conj()).norm());
            }
        }
        worst
    }

    /// Smallest eigenvalue of the (Hermitian) kernel, in trace units.
    pub fn smallest_eigenvalue(&self) -> f64 {
        let n = self.size();
        let m = DMatrix::from_fn(n, n, |i, j| {
            let v = self.data[i * n + j];
            Complex::new(v.re, v.im)
        });
        let eig = m.symmetric_eigenvalues();
        eig.iter().cloned().fold(f64::INFINITY, f64::min) * self.grid.cell_volume()
    }

    pub fn max_abs_difference(&self, other: &DensityMatrix) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// `tr(W . 1_B)` — the positional probability the matrix assigns to a region.
    pub fn region_probability(&self, region: &Region) -> Result<f64> {
        if region.dim() != 1 {
            return Err(NlseError::ShapeMismatch { context: "density-matrix region".into() });
        }
        let n = self.size();
        let dv = self.grid.cell_volume();
        let mut acc = 0.0;
        for idx in region.cells(&self.grid) {
            acc += self.data[idx * n + idx].re;
        }
        Ok(acc * dv / self.trace())
    }
}

/// Two unravelings of the same rank-2 density matrix: the input pair
/// `(w, a), (1-w, b)` and its eigen-mixture. Exact 2x2 eigensolve in the
/// span of the two components.
pub fn eigen_unraveling(w: f64, a: &Wavefunction, b: &Wavefunction) -> Result<Mixture> {
    a.grid.check_same_shape(&b.grid, "unraveling components")?;
    if !(0.0 < w && w < 1.0) {
        return Err(NlseError::Domain(format!("weight {w} outside (0,1)")));
    }
    let a = a.clone().normalized()?;
    let b = b.clone().normalized()?;
    // Gram-Schmidt basis {a, q}
    let s = crate::field::inner(&a, &b)?;
    let mut q = b.clone();
    for (qv, av) in q.values.iter_mut().zip(&a.values) {
        *qv -= s * av;
    }
    let qn = norm(&q)?;
    if qn < 1e-10 {
        // the components coincide: the mixture is pure
        return Mixture::new(vec![(1.0, a)]);
    }
    let q = q.scaled(Complex64::new(1.0 / qn, 0.0));
    // W in the {a, q} basis: w |a><a| + (1-w) |b><b| with b = s a + qn q
    let w2 = 1.0 - w;
    let m00 = w + w2 * s.norm_sqr();
    let m01 = w2 * s * qn; // <a| W |q>
    let m11 = w2 * qn * qn;
    // Hermitian 2x2 eigensolve; the discriminant in this form has no
    // cancellation for nearly-degenerate eigenvalues
    let tr = m00 + m11;
    let delta = 0.5 * (m00 - m11);
    let disc = (delta * delta + m01.norm_sqr()).sqrt();
    let l1 = tr / 2.0 + disc;
    let l2 = tr / 2.0 - disc;
    let mut comps = Vec::new();
    for &l in &[l1, l2] {
        if l <= 1e-14 {
            continue;
        }
        // eigenvector (alpha, beta) of [[m00, m01],[conj(m01), m11]]; the two
        // equivalent forms trade cancellation, keep the better-conditioned one
        let (alpha, beta) = if m01.norm() > 1e-300 {
            if (l - m00).abs() >= (l - m11).abs() {
                (m01, Complex64::new(l - m00, 0.0))
            } else {
                (Complex64::new(l - m11, 0.0), m01.conj())
            }
        } else if (m00 - l).abs() < (m11 - l).abs() {
            (Complex64::new(1.0, 0.0), Complex64::default())
        } else {
            (Complex64::default(), Complex64::new(1.0, 0.0))
        };
        let nv = (alpha.norm_sqr() + beta.norm_sqr()).sqrt();
        let (alpha, beta) = (alpha / nv, beta / nv);
        let mut phi = a.clone();
        for (pv, (av, qv)) in phi.values.iter_mut().zip(a.values.iter().zip(&q.values)) {
            *pv = alpha * av + beta * qv;
        }
        comps.push((l, phi));
    }
    // normalize the weights against roundoff
    let total: f64 = comps.iter().map(|(l, _)| *l).sum();
    for (l, _) in &mut comps {
        *l /= total;
    }
    Mixture::new(comps)
}

/// Velocity cone: position region `B_t = (t/m) B` for a momentum region `B`,
/// snapped to whole cells. Also returns the geometric fraction of the scaled
/// region clipped by the box.
pub fn velocity_cone(
    momentum_region: &Region,
    momentum_grid: &Grid,
    position_grid: &Grid,
    t: f64,
    mass: f64,
) -> Result<(Region, f64)> {
    if t <= 0.0 {
        return Err(NlseError::Domain(format!("velocity cone needs t > 0, got {t}")));
    }
    if momentum_region.dim() != 1 || position_grid.dim() != 1 {
        return Err(NlseError::ShapeMismatch { context: "velocity cone is 1D".into() });
    }
    // the grid holds every representable momentum, so the cone of the whole
    // momentum space is the whole box at any time
    if momentum_region.cell_count() == momentum_grid.total_points() {
        return Ok((Region::whole(position_grid), 0.0));
    }
    let scale = t / mass;
    // scale each maximal run of cells as one interval
    let mut cells: Vec<usize> = momentum_region.cells(momentum_grid).collect();
    cells.sort_unstable();
    let dk = momentum_grid.spacing(0);
    let box_lo = position_grid.coord(0, 0) - 0.5 * position_grid.spacing(0);
    let box_hi = box_lo + position_grid.length(0);
    let mut region = Region::empty(1);
    let mut total_len = 0.0;
    let mut clipped_len = 0.0;
    let mut run_start = None;
    let mut prev = None;
    let mut flush = |lo_cell: usize, hi_cell: usize, region: &mut Region| -> Result<()> {
        let a = momentum_grid.coord(0, lo_cell) - 0.5 * dk;
        let b = momentum_grid.coord(0, hi_cell) + 0.5 * dk;
        let (xa, xb) = (scale * a, scale * b);
        total_len += xb - xa;
        let ca = xa.max(box_lo);
        let cb = xb.min(box_hi);
        if cb > ca {
            clipped_len += (xb - xa) - (cb - ca);
            let piece = Region::from_physical_1d(position_grid, ca, cb)?;
            let merged = std::mem::replace(region, Region::empty(1)).union_with(&piece)?;
            *region = merged;
        } else {
            clipped_len += xb - xa;
        }
        Ok(())
    };
    for c in cells {
        match (run_start, prev) {
            (None, _) => {
                run_start = Some(c);
            }
            (Some(_), Some(p)) if c != p + 1 => {
                flush(run_start.unwrap(), p, &mut region)?;
                run_start = Some(c);
            }
            _ => {}
        }
        prev = Some(c);
    }
    if let (Some(s), Some(p)) = (run_start, prev) {
        flush(s, p, &mut region)?;
    }
    let fraction = if total_len > 0.0 { clipped_len / total_len } else { 0.0 };
    Ok((region, fraction))
}

/// Recorded sequence of cone probabilities `p_{B_t}[T_t^{(0)} psi]` over an
/// increasing time list; the final element is the asymptotic estimate.
#[derive(Debug, Clone)]
pub struct MomentumConeSeries {
    pub times: Vec<f64>,
    pub probabilities: Vec<f64>,
    pub estimate: f64,
    /// Largest increase of |p(t) - fourier value| after the first sample;
    /// 0 for a monotone approach.
    pub fourier_value: f64,
}

const CLIPPING_LIMIT: f64 = 1e-3;

/// Asymptotic momentum probability via the velocity cone; free evolution is
/// exact (one multiplier per sample time).
pub fn asymptotic_momentum_probability(
    psi: &Wavefunction,
    momentum_region: &Region,
    mass: f64,
    t_list: &[f64],
) -> Result<MomentumConeSeries> {
    if t_list.is_empty() {
        return Err(NlseError::EmptySamples("t_list is empty".into()));
    }
    if t_list.windows(2).any(|w| w[1] <= w[0]) || t_list[0] <= 0.0 {
        return Err(NlseError::Domain("t_list must be positive and increasing".into()));
    }
    let ft = fourier(psi)?;
    let momentum_grid = ft.grid.clone();
    let fourier_value = born_probability(&ft, momentum_region)?;

    // mass-weighted clipping precondition at the largest time: how much
    // Fourier mass of B maps outside the box
    let t_max = *t_list.last().unwrap();
    let scale = t_max / mass;
    let box_half = 0.5 * psi.grid.length(0);
    let dk = momentum_grid.spacing(0);
    let total: f64 = ft.values.iter().map(|v| v.norm_sqr()).sum();
    let mut clipped_mass = 0.0;
    for cell in momentum_region.cells(&momentum_grid) {
        let k = momentum_grid.coord(0, cell);
        let edge = (k.abs() + 0.5 * dk) * scale;
        if edge > box_half {
            clipped_mass += ft.values[cell].norm_sqr();
        }
    }
    let fraction = clipped_mass / total;
    if fraction >= CLIPPING_LIMIT {
        return Err(NlseError::BoxTooSmall {
            fraction,
            limit: CLIPPING_LIMIT,
            time: t_max,
        });
    }

    let mut probabilities = Vec::with_capacity(t_list.len());
    for &t in t_list {
        let (cone, _) = velocity_cone(momentum_region, &momentum_grid, &psi.grid, t, mass)?;
        let evolved = crate::dynamics::free_propagate(psi, mass, t)?;
        probabilities.push(born_probability(&evolved, &cone)?);
    }
    Ok(MomentumConeSeries {
        times: t_list.to_vec(),
        probabilities: probabilities.clone(),
        estimate: *probabilities.last().unwrap(),
        fourier_value,
    })
}

/// Momentum probability from the spectral measure: `int_B |psi_hat|^2 / ||psi_hat||^2`.
pub fn fourier_momentum_probability(psi: &Wavefunction, momentum_region: &Region) -> Result<f64> {
    let ft = fourier(psi)?;
    born_probability(&ft, momentum_region)
}

// ---------------------------------------------------------------------------
// two-particle experiment
// ---------------------------------------------------------------------------

/// Two identical-mass particles on a shared 1D axis grid; the wavefunction
/// lives on the tensor grid, the potential is stored separably.
#[derive(Debug, Clone)]
pub struct TwoParticleSpec {
    pub axis_grid: Grid,
    pub v1: Vec<f64>,
    pub v2: Vec<f64>,
    pub psi0: Wavefunction,
    pub coefficients: CoefficientSet,
    pub mass: f64,
    pub dt: f64,
}

impl TwoParticleSpec {
    pub fn validate(&self) -> Result<()> {
        if self.axis_grid.dim() != 1 {
            return Err(NlseError::ShapeMismatch { context: "axis grid must be 1D".into() });
        }
        let n = self.axis_grid.points(0);
        if self.v1.len() != n || self.v2.len() != n {
            return Err(NlseError::ShapeMismatch { context: "separable potential size".into() });
        }
        if self.psi0.grid.dim() != 2
            || self.psi0.grid.points(0) != n
            || self.psi0.grid.points(1) != n
        {
            return Err(NlseError::ShapeMismatch { context: "two-particle state grid".into() });
        }
        self.psi0.check_finite("two-particle initial state")?;
        Ok(())
    }

    /// Tensor grid for the pair.
    pub fn pair_grid(&self) -> Result<Grid> {
        let n = self.axis_grid.points(0);
        let l = self.axis_grid.length(0);
        Grid::new_2d([n, n], [l, l])
    }

    /// Assemble `V(x1, x2) = V1(x1) + V2(x2)` on the tensor grid.
    pub fn assemble_potential(&self, v2: &[f64]) -> Vec<f64> {
        let n = self.axis_grid.points(0);
        let mut v = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                v[i * n + j] = self.v1[i] + v2[j];
            }
        }
        v
    }

    /// Largest Schmidt coefficient of the normalized state; below
    /// `1 - 1e-8` the state counts as entangled.
    pub fn largest_schmidt_coefficient(&self) -> Result<f64> {
        let n = self.axis_grid.points(0);
        let nrm = norm(&self.psi0)?;
        if nrm <= 0.0 {
            return Err(NlseError::DegenerateState);
        }
        let m = DMatrix::from_fn(n, n, |i, j| {
            let v = self.psi0.values[i * n + j] / nrm * self.axis_grid.spacing(0);
            Complex::new(v.re, v.im)
        });
        let svd = m.svd(false, false);
        Ok(svd.singular_values.iter().cloned().fold(0.0, f64::max))
    }

    pub fn is_entangled(&self) -> Result<bool> {
        Ok(self.largest_schmidt_coefficient()? < 1.0 - 1e-8)
    }
}

/// Particle-1 marginal probabilities over the unobserved axis: the
/// two-particle Born rule.
pub fn particle1_marginal(psi: &Wavefunction, regions: &[Region]) -> Result<Vec<f64>> {
    if psi.grid.dim() != 2 {
        return Err(NlseError::ShapeMismatch { context: "marginal needs a 2D state".into() });
    }
    let n0 = psi.grid.points(0);
    let n1 = psi.grid.points(1);
    let mut marginal = vec![0.0; n0];
    for i in 0..n0 {
        for j in 0..n1 {
            marginal[i] += psi.values[i * n1 + j].norm_sqr();
        }
    }
    let total: f64 = marginal.iter().sum();
    if total <= 0.0 {
        return Err(NlseError::DegenerateState);
    }
    let axis = Grid::new_1d(n0, psi.grid.length(0))?;
    let mut out = Vec::with_capacity(regions.len());
    for r in regions {
        if r.dim() != 1 {
            return Err(NlseError::ShapeMismatch { context: "marginal region must be 1D".into() });
        }
        let mut acc = 0.0;
        for idx in r.cells(&axis) {
            acc += marginal[idx];
        }
        out.push(acc / total);
    }
    Ok(out)
}

/// One remote-potential variant of the signaling experiment.
#[derive(Debug, Clone)]
pub struct GisinVariant {
    pub marginals: Vec<f64>,
    pub blowup: Option<BlowupDiagnostic>,
}

/// Report of the signaling experiment: the statistic is the worst-case
/// deviation of a particle-1 marginal probability across remote variants.
#[derive(Debug, Clone)]
pub struct GisinReport {
    pub variants: Vec<GisinVariant>,
    pub statistic: f64,
    pub entangled: bool,
}

/// Evolve the two-particle state under each remote potential `V2` and compare
/// the particle-1 marginals region by region against the first variant.
pub fn gisin_experiment(
    spec: &TwoParticleSpec,
    remote_potentials: &[Vec<f64>],
    t: f64,
    marginal_regions: &[Region],
) -> Result<GisinReport> {
    spec.validate()?;
    if remote_potentials.is_empty() {
        return Err(NlseError::EmptySamples("no remote potential variants".into()));
    }
    if marginal_regions.is_empty() {
        return Err(NlseError::EmptySamples("no marginal regions".into()));
    }
    let entangled = spec.is_entangled()?;
    let pair_grid = spec.pair_grid()?;
    let mut variants = Vec::with_capacity(remote_potentials.len());
    for v2 in remote_potentials {
        if v2.len() != spec.axis_grid.points(0) {
            return Err(NlseError::ShapeMismatch { context: "remote potential size".into() });
        }
        let potential = spec.assemble_potential(v2);
        let evo = EvolutionSpec::new(spec.mass, Some(potential), spec.coefficients, spec.dt);
        evo.validate(&pair_grid)?;
        match propagate_nonlinear(&spec.psi0, &evo, t)? {
            PropagationOutcome::Final(w) => variants.push(GisinVariant {
                marginals: particle1_marginal(&w, marginal_regions)?,
                blowup: None,
            }),
            PropagationOutcome::Blowup(d) => {
                variants.push(GisinVariant { marginals: Vec::new(), blowup: Some(d) })
            }
        }
    }
    let mut statistic = 0.0_f64;
    let baseline = &variants[0];
    if baseline.blowup.is_none() {
        for v in &variants[1..] {
            if v.blowup.is_some() {
                continue;
            }
            for (p, q) in baseline.marginals.iter().zip(&v.marginals) {
                statistic = statistic.max((p - q).abs());
            }
        }
    }
    Ok(GisinReport { variants, statistic, entangled })
}

/// Symmetrized two-Gaussian pair state on the tensor grid.
pub fn symmetrized_pair(
    axis_grid: &Grid,
    phi_a: &Wavefunction,
    phi_b: &Wavefunction,
) -> Result<Wavefunction> {
    phi_a.grid.check_same_shape(axis_grid, "pair factor a")?;
    phi_b.grid.check_same_shape(axis_grid, "pair factor b")?;
    let n = axis_grid.points(0);
    let l = axis_grid.length(0);
    let grid = Grid::new_2d([n, n], [l, l])?;
    let mut values = vec![Complex64::default(); n * n];
    for i in 0..n {
        for j in 0..n {
            values[i * n + j] =
                phi_a.values[i] * phi_b.values[j] + phi_b.values[i] * phi_a.values[j];
        }
    }
    Wavefunction::new(grid, values)?.normalized()
}

/// Product state `phi_a (x) phi_b` on the tensor grid.
pub fn product_pair(
    axis_grid: &Grid,
    phi_a: &Wavefunction,
    phi_b: &Wavefunction,
) -> Result<Wavefunction> {
    phi_a.grid.check_same_shape(axis_grid, "pair factor a")?;
    phi_b.grid.check_same_shape(axis_grid, "pair factor b")?;
    let n = axis_grid.points(0);
    let l = axis_grid.length(0);
    let grid = Grid::new_2d([n, n], [l, l])?;
    let mut values = vec![Complex64::default(); n * n];
    for i in 0..n {
        for j in 0..n {
            values[i * n + j] = phi_a.values[i] * phi_b.values[j];
        }
    }
    Wavefunction::new(grid, values)?.normalized()
}

/// Tensor product of two independently evolved 1D factors; the cross-check
/// for product-state factorization under separable equations.
pub fn tensor_of_factors(
    axis_grid: &Grid,
    a: &Wavefunction,
    b: &Wavefunction,
) -> Result<Wavefunction> {
    product_pair(axis_grid, a, b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{distance, gaussian_packet};
    use crate::functionals::NodeFloorPolicy;

    fn grid() -> Grid {
        Grid::new_1d(256, 40.0).unwrap()
    }

    #[test]
    fn velocity_cone_scales_interval() {
        // B = [1, 2], t = 2, m = 1 -> B_t = [2, 4]
        let pg = grid();
        let mg = pg.momentum_grid();
        let b = Region::from_physical_1d(&mg, 1.0, 2.0).unwrap();
        let (cone, clipped) = velocity_cone(&b, &mg, &pg, 2.0, 1.0).unwrap();
        assert_eq!(clipped, 0.0);
        let cells: Vec<usize> = cone.cells(&pg).collect();
        let lo = pg.coord(0, cells[0]);
        let hi = pg.coord(0, *cells.last().unwrap());
        // both snappings contribute: momentum cells, then position cells
        let tol = 2.0 * mg.spacing(0) + pg.spacing(0);
        assert!((lo - 2.0).abs() <= tol);
        assert!((hi - 4.0).abs() <= tol);
    }

    #[test]
    fn velocity_cone_preserves_symmetry() {
        let pg = grid();
        let mg = pg.momentum_grid();
        let b = Region::from_physical_1d(&mg, -1.0, 1.0).unwrap();
        let (cone, _) = velocity_cone(&b, &mg, &pg, 3.0, 1.0).unwrap();
        let cells: Vec<usize> = cone.cells(&pg).collect();
        let lo = pg.coord(0, cells[0]);
        let hi = pg.coord(0, *cells.last().unwrap());
        assert!((lo + hi).abs() <= pg.spacing(0));
    }

    #[test]
    fn velocity_cone_arithmetic_with_mass() {
        // B = [0.5, 1.0], t = 10, m = 2 -> B_t = [2.5, 5.0]
        let pg = grid();
        let mg = pg.momentum_grid();
        let b = Region::from_physical_1d(&mg, 0.5, 1.0).unwrap();
        let (cone, _) = velocity_cone(&b, &mg, &pg, 10.0, 2.0).unwrap();
        let cells: Vec<usize> = cone.cells(&pg).collect();
        let lo = pg.coord(0, cells[0]);
        let hi = pg.coord(0, *cells.last().unwrap());
        let tol = (10.0 / 2.0) * mg.spacing(0) + pg.spacing(0);
        assert!((lo - 2.5).abs() <= tol);
        assert!((hi - 5.0).abs() <= tol);
    }

    #[test]
    fn velocity_cone_rejects_nonpositive_time() {
        let pg = grid();
        let mg = pg.momentum_grid();
        let b = Region::from_physical_1d(&mg, 0.5, 1.0).unwrap();
        assert!(velocity_cone(&b, &mg, &pg, 0.0, 1.0).is_err());
    }

    #[test]
    fn whole_momentum_space_gives_unit_probability() {
        let pg = Grid::new_1d(512, 128.0).unwrap();
        let psi = gaussian_packet(&pg, 2.0, 0.0, 0.5).unwrap();
        let mg = pg.momentum_grid();
        let b = Region::whole(&mg);
        let series =
            asymptotic_momentum_probability(&psi, &b, 1.0, &[1.0, 2.0, 4.0]).unwrap();
        for p in &series.probabilities {
            assert!((p - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn cone_estimate_approaches_fourier_value() {
        let pg = Grid::new_1d(1024, 256.0).unwrap();
        let psi = gaussian_packet(&pg, 4.0, 0.0, 0.8).unwrap();
        let mg = pg.momentum_grid();
        let b = Region::from_physical_1d(&mg, 0.05, 12.0).unwrap();
        let ts = [5.0, 10.0, 20.0, 35.0, 50.0];
        let series = asymptotic_momentum_probability(&psi, &b, 1.0, &ts).unwrap();
        assert!((series.estimate - series.fourier_value).abs() < 2e-3);
        // right half-line catches essentially all of a k0 = 0.8 packet
        assert!((series.estimate - 1.0).abs() < 1e-3);
    }

    #[test]
    fn box_too_small_is_detected() {
        let pg = Grid::new_1d(256, 40.0).unwrap();
        let psi = gaussian_packet(&pg, 2.0, 0.0, 1.5).unwrap();
        let mg = pg.momentum_grid();
        let b = Region::from_physical_1d(&mg, 0.5, 4.0).unwrap();
        // at t = 100 the cone of the packet's momentum support leaves the box
        let err = asymptotic_momentum_probability(&psi, &b, 1.0, &[10.0, 100.0]);
        assert!(matches!(err, Err(NlseError::BoxTooSmall { .. })));
    }

    #[test]
    fn fourier_momentum_probability_half_line_symmetry() {
        let pg = Grid::new_1d(512, 64.0).unwrap();
        let psi = Wavefunction::from_fn_1d(&pg, |x| {
            Complex64::new((-x * x / 8.0).exp(), 0.0)
        })
        .unwrap();
        let mg = pg.momentum_grid();
        let n = mg.points(0);
        // strictly positive vs strictly negative wavenumbers; the k = 0 and
        // Nyquist cells are shared leftovers
        let pos = Region::from_cells_1d(n / 2 + 1, n);
        let neg = Region::from_cells_1d(1, n / 2);
        let zero = Region::from_cells_1d(n / 2, n / 2 + 1);
        let nyq = Region::from_cells_1d(0, 1);
        let pp = fourier_momentum_probability(&psi, &pos).unwrap();
        let pn = fourier_momentum_probability(&psi, &neg).unwrap();
        let p0 = fourier_momentum_probability(&psi, &zero).unwrap();
        let pq = fourier_momentum_probability(&psi, &nyq).unwrap();
        assert!((pp - pn).abs() < 1e-12);
        assert!((pp + pn + p0 + pq - 1.0).abs() < 1e-12);
        // half-line value is 0.5 up to the mass the symmetric leftover cells hold
        assert!((pp - 0.5).abs() <= 0.5 * (p0 + pq) + 1e-12);
    }

    #[test]
    fn fourier_momentum_partition_sums_to_one() {
        let pg = Grid::new_1d(256, 32.0).unwrap();
        let psi = gaussian_packet(&pg, 1.0, 0.7, 1.3).unwrap();
        let mg = pg.momentum_grid();
        let mut sum = 0.0;
        for lo in (0..256).step_by(32) {
            let r = Region::from_cells_1d(lo, lo + 32);
            sum += fourier_momentum_probability(&psi, &r).unwrap();
        }
        assert!((sum - 1.0).abs() < 1e-12);
    }

    #[test]
    fn effect_on_single_component_mixture() {
        let g = grid();
        let psi = gaussian_packet(&g, 1.0, 0.0, 0.0).unwrap();
        let region = Region::from_physical_1d(&g, 0.0, 20.0).unwrap();
        let f = Effect::positional(region);
        let pi = Mixture::new(vec![(1.0, psi.clone())]).unwrap();
        let direct = f.value(&psi).unwrap();
        assert!((effect_on_mixture(&f, &pi).unwrap() - direct).abs() < 1e-15);
    }

    #[test]
    fn effect_on_two_equal_components() {
        let g = grid();
        let psi = gaussian_packet(&g, 1.0, 0.0, 0.0).unwrap();
        let region = Region::from_physical_1d(&g, -3.0, 1.0).unwrap();
        let f = Effect::positional(region);
        let pi = Mixture::new(vec![(0.5, psi.clone()), (0.5, psi.clone())]).unwrap();
        assert!((effect_on_mixture(&f, &pi).unwrap() - f.value(&psi).unwrap()).abs() < 1e-15);
    }

    #[test]
    fn effect_on_left_right_mixture_averages() {
        let g = grid();
        let l = gaussian_packet(&g, 1.0, -6.0, 0.0).unwrap();
        let r = gaussian_packet(&g, 1.0, 6.0, 0.0).unwrap();
        let region = Region::from_physical_1d(&g, 0.0, 20.0).unwrap();
        let f = Effect::positional(region);
        let pi = Mixture::new(vec![(0.5, l.clone()), (0.5, r.clone())]).unwrap();
        let expect = 0.5 * (f.value(&l).unwrap() + f.value(&r).unwrap());
        assert!((effect_on_mixture(&f, &pi).unwrap() - expect).abs() < 1e-15);
    }

    #[test]
    fn mixture_blend_is_affine() {
        let g = grid();
        let a = Mixture::new(vec![(1.0, gaussian_packet(&g, 1.0, -4.0, 0.0).unwrap())]).unwrap();
        let b = Mixture::new(vec![(1.0, gaussian_packet(&g, 1.0, 4.0, 0.0).unwrap())]).unwrap();
        let w = 0.3;
        let blended = Mixture::blend(&a, &b, w).unwrap();
        let region = Region::from_physical_1d(&g, 0.0, 20.0).unwrap();
        let f = Effect::positional(region);
        let fa = effect_on_mixture(&f, &a).unwrap();
        let fb = effect_on_mixture(&f, &b).unwrap();
        let fc = effect_on_mixture(&f, &blended).unwrap();
        assert!((fc - (w * fa + (1.0 - w) * fb)).abs() < 1e-15);
    }

    #[test]
    fn identical_mixtures_are_indistinguishable() {
        let g = grid();
        let psi = gaussian_packet(&g, 1.0, 0.0, 0.5).unwrap();
        let pi = Mixture::new(vec![(1.0, psi)]).unwrap();
        let effects = vec![Effect::positional(Region::from_physical_1d(&g, -5.0, 5.0).unwrap())];
        match mixtures_distinguishable(&pi, &pi, &effects, 1e-10).unwrap() {
            Distinguishability::Indistinguishable { max_gap } => assert_eq!(max_gap, 0.0),
            _ => panic!("identical mixtures distinguished"),
        }
    }

    #[test]
    fn density_matrix_of_pure_state_is_rank_one_projector() {
        let g = grid();
        let psi = gaussian_packet(&g, 1.0, 0.0, 0.0).unwrap();
        let pi = Mixture::new(vec![(1.0, psi)]).unwrap();
        let w = density_matrix(&pi).unwrap();
        assert!((w.trace() - 1.0).abs() < 1e-10);
        assert!(w.hermiticity_defect() < 1e-12);
        // purity: tr(W^2) = 1 for rank one
        let n = w.size();
        let dv = w.grid.cell_volume();
        let mut tr2 = 0.0;
        for i in 0..n {
            for j in 0..n {
                tr2 += (w.data[i * n + j] * w.data[j * n + i]).re;
            }
        }
        tr2 *= dv * dv;
        assert!((tr2 - 1.0).abs() < 1e-10);
    }

    #[test]
    fn density_matrix_orthogonal_mixture_eigenvalues() {
        let g = grid();
        // two far-separated Gaussians are numerically orthogonal
        let a = gaussian_packet(&g, 1.0, -10.0, 0.0).unwrap();
        let b = gaussian_packet(&g, 1.0, 10.0, 0.0).unwrap();
        let pi = Mixture::new(vec![(0.5, a), (0.5, b)]).unwrap();
        let w = density_matrix(&pi).unwrap();
        assert!((w.trace() - 1.0).abs() < 1e-10);
        assert!(w.smallest_eigenvalue() > -1e-10);
        // tr(W^2) = 1/2 for an equal two-component orthogonal mixture
        let n = w.size();
        let dv = w.grid.cell_volume();
        let mut tr2 = 0.0;
        for i in 0..n {
            for j in 0..n {
                tr2 += (w.data[i * n + j] * w.data[j * n + i]).re;
            }
        }
        tr2 *= dv * dv;
        assert!((tr2 - 0.5).abs() < 1e-8);
    }

    #[test]
    fn eigen_unraveling_reproduces_density_matrix() {
        let g = grid();
        let a = gaussian_packet(&g, 1.2, -2.0, 0.0).unwrap();
        let b = gaussian_packet(&g, 1.0, 2.5, 0.4).unwrap();
        let pi1 = Mixture::new(vec![(0.5, a.clone()), (0.5, b.clone())]).unwrap();
        let pi2 = eigen_unraveling(0.5, &a, &b).unwrap();
        let w1 = density_matrix(&pi1).unwrap();
        let w2 = density_matrix(&pi2).unwrap();
        assert!(w1.max_abs_difference(&w2) <= 1e-12);
    }

    #[test]
    fn density_matrix_capacity_is_enforced() {
        let g = Grid::new_1d(1024, 64.0).unwrap();
        let psi = gaussian_packet(&g, 1.0, 0.0, 0.0).unwrap();
        let pi = Mixture::new(vec![(1.0, psi)]).unwrap();
        assert!(matches!(density_matrix(&pi), Err(NlseError::Capacity(_))));
    }

    #[test]
    fn density_matrix_region_probability_matches_effect() {
        let g = grid();
        let a = gaussian_packet(&g, 1.0, -3.0, 0.0).unwrap();
        let b = gaussian_packet(&g, 1.4, 3.0, 0.0).unwrap();
        let pi = Mixture::new(vec![(0.4, a), (0.6, b)]).unwrap();
        let w = density_matrix(&pi).unwrap();
        let region = Region::from_physical_1d(&g, -1.0, 7.0).unwrap();
        let f = Effect::positional(region.clone());
        let via_effect = effect_on_mixture(&f, &pi).unwrap();
        let via_matrix = w.region_probability(&region).unwrap();
        assert!((via_effect - via_matrix).abs() < 1e-10);
    }

    #[test]
    fn product_pair_is_not_entangled_symmetrized_is() {
        let g = Grid::new_1d(64, 16.0).unwrap();
        let a = gaussian_packet(&g, 1.0, -2.5, 0.0).unwrap();
        let b = gaussian_packet(&g, 1.0, 2.5, 0.0).unwrap();
        let prod = product_pair(&g, &a, &b).unwrap();
        let sym = symmetrized_pair(&g, &a, &b).unwrap();
        let mk = |psi0: Wavefunction| TwoParticleSpec {
            axis_grid: g.clone(),
            v1: vec![0.0; 64],
            v2: vec![0.0; 64],
            psi0,
            coefficients: CoefficientSet::linear(),
            mass: 1.0,
            dt: 1e-3,
        };
        assert!(!mk(prod).is_entangled().unwrap());
        assert!(mk(sym).is_entangled().unwrap());
    }

    #[test]
    fn linear_two_particle_runs_show_no_signaling() {
        let g = Grid::new_1d(64, 16.0).unwrap();
        let a = gaussian_packet(&g, 1.0, -2.0, 0.0).unwrap();
        let b = gaussian_packet(&g, 1.0, 2.0, 0.0).unwrap();
        let sym = symmetrized_pair(&g, &a, &b).unwrap();
        let spec = TwoParticleSpec {
            axis_grid: g.clone(),
            v1: g.coords(0).iter().map(|&x| 0.5 * 0.4f64.powi(2) * x * x).collect(),
            v2: vec![0.0; 64],
            psi0: sym,
            coefficients: CoefficientSet::linear(),
            mass: 1.0,
            dt: 2e-3,
        };
        let variants = vec![
            vec![0.0; 64],
            g.coords(0).iter().map(|&x| 0.5 * 0.7f64.powi(2) * x * x).collect(),
        ];
        let regions = vec![
            Region::from_physical_1d(&g, -8.0, 0.0).unwrap(),
            Region::from_physical_1d(&g, 0.0, 8.0).unwrap(),
        ];
        let report = gisin_experiment(&spec, &variants, 0.3, &regions).unwrap();
        assert!(report.entangled);
        assert!(report.statistic <= 1e-10, "statistic {}", report.statistic);
    }

    #[test]
    fn product_state_factorizes_under_separable_nonlinear_equation() {
        let g = Grid::new_1d(64, 16.0).unwrap();
        let a = gaussian_packet(&g, 1.0, -1.5, 0.0).unwrap();
        let b = gaussian_packet(&g, 1.2, 1.5, 0.0).unwrap();
        let prod = product_pair(&g, &a, &b).unwrap();
        let coeffs = CoefficientSet { mu2: 0.3, mu0: 1.0, ..CoefficientSet::zero() };
        let v1: Vec<f64> = g.coords(0).iter().map(|&x| 0.5 * 0.3f64.powi(2) * x * x).collect();
        let v2 = vec![0.0; 64];
        let spec2d = TwoParticleSpec {
            axis_grid: g.clone(),
            v1: v1.clone(),
            v2: v2.clone(),
            psi0: prod,
            coefficients: coeffs,
            mass: 1.0,
            dt: 2e-3,
        };
        let t = 0.3;
        let pair = spec2d.pair_grid().unwrap();
        let evo2d = EvolutionSpec::new(1.0, Some(spec2d.assemble_potential(&v2)), coeffs, 2e-3);
        evo2d.validate(&pair).unwrap();
        let evolved = propagate_nonlinear(&spec2d.psi0, &evo2d, t)
            .unwrap()
            .into_final()
            .unwrap();
        // evolve the two 1D factors independently under the same equation
        let evo_a = EvolutionSpec::new(1.0, Some(v1), coeffs, 2e-3);
        let evo_b = EvolutionSpec::new(1.0, Some(v2), coeffs, 2e-3);
        let fa = propagate_nonlinear(&a, &evo_a, t).unwrap().into_final().unwrap();
        let fb = propagate_nonlinear(&b, &evo_b, t).unwrap().into_final().unwrap();
        let tensor = tensor_of_factors(&g, &fa, &fb).unwrap();
        // global phases of the two routes differ by the constant alpha1-style
        // terms only when alpha1 != 0; here compare up to a global phase
        let ip = crate::field::inner(&tensor, &evolved).unwrap();
        let phase = ip / ip.norm();
        let aligned = tensor.scaled(phase);
        assert!(distance(&aligned, &evolved).unwrap() <= 1e-5);
    }

    #[test]
    fn gauge_invariance_of_effects() {
        // born probabilities of trivial effects are invariant under the gauge map
        let g = grid();
        let psi = gaussian_packet(&g, 1.0, 1.0, 0.7).unwrap();
        let policy = NodeFloorPolicy::default();
        let mapped = crate::gauge::apply_gauge(&psi, 0.9, &policy).unwrap();
        for lo in (0..256).step_by(64) {
            let f = Effect::positional(Region::from_cells_1d(lo, lo + 64));
            assert!((f.value(&psi).unwrap() - f.value(&mapped).unwrap()).abs() < 1e-12);
        }
    }
}
