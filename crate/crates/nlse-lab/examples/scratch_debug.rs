// temporary diagnostic; removed before release
use nlse_lab::dynamics::{propagate_nonlinear, CoefficientSet, EvolutionSpec};
use nlse_lab::field::{distance, gaussian_packet, inner};
use nlse_lab::grid::Grid;
use nlse_lab::observables::{product_pair, tensor_of_factors, TwoParticleSpec};

fn factorization_residual(
    centers: (f64, f64),
    omega1: f64,
    t: f64,
    dt: f64,
    sigma_b: f64,
) -> f64 {
    let axis = Grid::new_1d(128, 16.0).unwrap();
    let phi_a = gaussian_packet(&axis, 1.0, centers.0, 0.0).unwrap();
    let phi_b = gaussian_packet(&axis, sigma_b, centers.1, 0.0).unwrap();
    let coords = axis.coords(0);
    let v1: Vec<f64> = coords.iter().map(|&x| 0.5 * omega1 * omega1 * x * x).collect();
    let v2 = vec![0.0; 128];
    let nl = CoefficientSet { mu2: 0.3, mu0: 1.0, ..CoefficientSet::zero() };
    let spec = TwoParticleSpec {
        axis_grid: axis.clone(),
        v1: v1.clone(),
        v2: v2.clone(),
        psi0: product_pair(&axis, &phi_a, &phi_b).unwrap(),
        coefficients: nl,
        mass: 1.0,
        dt,
    };
    let pair = spec.pair_grid().unwrap();
    let evo2d = EvolutionSpec::new(1.0, Some(spec.assemble_potential(&v2)), nl, dt);
    evo2d.validate(&pair).unwrap();
    let evolved = propagate_nonlinear(&spec.psi0, &evo2d, t).unwrap().into_final().unwrap();
    let evo_a = EvolutionSpec::new(1.0, Some(v1), nl, dt);
    let evo_b = EvolutionSpec::new(1.0, Some(v2), nl, dt);
    let fa = propagate_nonlinear(&phi_a, &evo_a, t).unwrap().into_final().unwrap();
    let fb = propagate_nonlinear(&phi_b, &evo_b, t).unwrap().into_final().unwrap();
    let tensor = tensor_of_factors(&axis, &fa, &fb).unwrap();
    let ip = inner(&tensor, &evolved).unwrap();
    let aligned = tensor.scaled(ip / ip.norm());
    distance(&aligned, &evolved).unwrap()
}

fn main() {
    println!("unit-test params:     {:.3e}", factorization_residual((-1.5, 1.5), 0.3, 0.3, 2e-3, 1.2));
    println!("criterion, t=0.3:     {:.3e}", factorization_residual((-2.5, 2.5), 0.4, 0.3, 2e-3, 1.0));
    println!("criterion, t=0.4:     {:.3e}", factorization_residual((-2.5, 2.5), 0.4, 0.4, 2e-3, 1.0));
    println!("criterion, sep 1.5:   {:.3e}", factorization_residual((-1.5, 1.5), 0.4, 0.4, 2e-3, 1.0));
    println!("criterion, om 0.3:    {:.3e}", factorization_residual((-2.5, 2.5), 0.3, 0.4, 2e-3, 1.0));
    println!("criterion, dt 1e-3:   {:.3e}", factorization_residual((-2.5, 2.5), 0.4, 0.4, 1e-3, 1.0));
}
