use std::f64::consts::PI;

use fracheat_core::fields::*;
use fracheat_core::kernel::{build_profile, default_profile_grid, kernel_value, BuildMethod, ProfileTable};
use fracheat_core::quad::{adaptive_to_infinity, Tolerance};
use fracheat_core::{ModelParams, RadialGrid};
use proptest::prelude::*;

fn params(a: f64, s: f64, n: u32) -> ModelParams {
    ModelParams::new(a, s, n).unwrap()
}

fn profile(p: &ModelParams) -> ProfileTable {
    build_profile(p, &default_profile_grid(p.dim()).unwrap(), BuildMethod::Direct).unwrap()
}

#[test]
fn closed_form_masses() {
    let g = InitialDatum::gaussian(1.7, 1).unwrap();
    assert!((g.mass() - 1.7 * PI.sqrt()).abs() < 1e-14);
    let g = InitialDatum::gaussian(0.5, 3).unwrap();
    assert!((g.mass() - (0.5 * PI.sqrt()).powi(3)).abs() < 1e-14);
    let b = InitialDatum::indicator(1.0, 3).unwrap();
    assert!((b.mass() - 4.0 * PI / 3.0).abs() < 1e-14);
}

#[test]
fn power_tail_mass_against_refined_quadrature() {
    let d = InitialDatum::power_tail(2.2, 1.0, 1).unwrap();
    let f = |r: f64| 2.0 * (1.0 + r * r).powf(-1.1);
    let coarse = adaptive_to_infinity(f, 0.0, Tolerance::rel(1e-8)).value;
    let fine = adaptive_to_infinity(f, 0.0, Tolerance::rel(1e-12)).value;
    assert!((coarse / fine - 1.0).abs() < 1e-6);
    assert!((d.mass() / fine - 1.0).abs() < 1e-6, "{} vs {fine}", d.mass());
    assert!(d.in_decay_class(2.2));
    assert!(InitialDatum::power_tail(0.9, 1.0, 1).is_err());
}

#[test]
fn potential_of_the_unit_ball() {
    let d = InitialDatum::indicator(1.0, 3).unwrap();
    let p = params(0.5, 0.5, 3);
    let phi = riesz_potential(&d, &p, &[0.0, 1e3]).unwrap();
    assert!((phi[0] - 4.0 * PI).abs() < 1e-7, "{}", phi[0]);
    // |x|^{N−2s} Φ(x) → M
    assert!((phi[1] * 1e6 / d.mass() - 1.0).abs() < 0.01, "{}", phi[1]);
}

#[test]
fn potential_at_origin_in_lower_dimensions() {
    // ∫_{|y|≤1} |y|^{2s−N} dy = |S^{N−1}| / (2s)
    let d = InitialDatum::indicator(1.0, 1).unwrap();
    let v = riesz_potential(&d, &params(0.5, 0.25, 1), &[0.0]).unwrap()[0];
    assert!((v - 4.0).abs() < 1e-7, "{v}");
    let d = InitialDatum::indicator(1.0, 2).unwrap();
    let v = riesz_potential(&d, &params(0.5, 0.5, 2), &[0.0]).unwrap()[0];
    assert!((v - 2.0 * PI).abs() < 1e-7, "{v}");
}

#[test]
fn potential_is_linear_and_needs_subcritical_order() {
    let p = params(0.5, 0.5, 3);
    let d = InitialDatum::gaussian(1.0, 3).unwrap();
    let pts = [0.0, 0.3, 1.0, 4.0];
    let a = riesz_potential(&d, &p, &pts).unwrap();
    let b = riesz_potential(&d.clone().scaled(2.0).unwrap(), &p, &pts).unwrap();
    for (x, y) in a.iter().zip(&b) {
        assert_eq!(2.0 * x, *y);
    }
    let d1 = InitialDatum::gaussian(1.0, 1).unwrap();
    assert!(riesz_potential(&d1, &params(0.5, 0.5, 1), &[0.0]).is_err());
}

#[test]
fn fourier_and_convolution_routes_agree() {
    let p = params(0.5, 0.5, 1);
    let table = profile(&p);
    let d = InitialDatum::gaussian(1.0, 1).unwrap();
    let grid = RadialGrid::uniform(10.0, 201, 1).unwrap();
    for t in [1.0, 16.0, 256.0] {
        let a = mild_solution_fourier(&d, &p, t, &grid).unwrap();
        let b = mild_solution_convolution(&d, &table, t, &grid).unwrap();
        for (x, y) in a.values().iter().zip(b.values()) {
            assert!((x / y - 1.0).abs() <= 1e-4, "t={t}: {x} vs {y}");
        }
    }
}

#[test]
fn routes_agree_in_three_dimensions() {
    let p = params(0.8, 0.5, 3);
    let table = profile(&p);
    let d = InitialDatum::gaussian(1.0, 3).unwrap();
    let grid = RadialGrid::uniform(10.0, 41, 3).unwrap();
    let a = mild_solution_fourier(&d, &p, 4.0, &grid).unwrap();
    let b = mild_solution_convolution(&d, &table, 4.0, &grid).unwrap();
    for (x, y) in a.values().iter().zip(b.values()) {
        assert!((x / y - 1.0).abs() <= 1e-4, "{x} vs {y}");
    }
}

#[test]
fn mass_is_conserved() {
    for (a, s, n) in [(0.5, 0.5, 1), (0.5, 0.75, 1), (0.5, 0.5, 3)] {
        let p = params(a, s, n);
        let d = InitialDatum::gaussian(1.0, n).unwrap();
        for t in [1.0, 10.0, 100.0] {
            let grid = solution_grid(&p, &d, t, 400).unwrap();
            let u = mild_solution_fourier(&d, &p, t, &grid).unwrap();
            assert!(u.mass_check.relative_error <= 1e-4, "({a},{s},{n}) t={t}: {:?}", u.mass_check);
        }
    }
    let p = params(0.5, 0.5, 1);
    let table = profile(&p);
    let d = InitialDatum::bump(1.0, 1).unwrap();
    let grid = solution_grid(&p, &d, 10.0, 300).unwrap();
    let u = mild_solution_convolution(&d, &table, 10.0, &grid).unwrap();
    assert!(u.mass_check.relative_error <= 1e-4, "{:?}", u.mass_check);
}

fn small_time_deviation(alpha: f64) -> f64 {
    let p = params(alpha, 0.5, 1);
    let d = InitialDatum::gaussian(1.0, 1).unwrap();
    let grid = RadialGrid::uniform(1.0, 21, 1).unwrap();
    let u = mild_solution_fourier(&d, &p, 1e-4, &grid).unwrap();
    grid.nodes()
        .iter()
        .zip(u.values())
        .map(|(r, v)| (v / d.value(*r) - 1.0).abs())
        .fold(0.0, f64::max)
}

#[test]
fn recovers_the_datum_at_small_time() {
    let dev = small_time_deviation(0.9);
    assert!(dev <= 0.01, "{dev}");
}

#[test]
#[ignore = "u(·,t) − u₀ ≈ −t^α (−Δ)^s u₀ / Γ(1+α), which is about 1.3% at t = 1e-4 when α = 0.5"]
fn recovers_the_datum_at_small_time_half_order() {
    let dev = small_time_deviation(0.5);
    assert!(dev <= 0.01, "{dev}");
}

#[test]
fn small_time_deviation_follows_the_first_order_term() {
    // at r = 0, (−Δ)^{1/2} e^{−r²} = 2/√π
    let p = params(0.5, 0.5, 1);
    let d = InitialDatum::gaussian(1.0, 1).unwrap();
    let grid = RadialGrid::uniform(1.0, 2, 1).unwrap();
    let t: f64 = 1e-6;
    let u = mild_solution_fourier(&d, &p, t, &grid).unwrap();
    let predicted = -t.sqrt() * 2.0 / PI.sqrt() / statrs::function::gamma::gamma(1.5);
    let dev = u.values()[0] - 1.0;
    assert!((dev / predicted - 1.0).abs() < 0.01, "{dev} vs {predicted}");
}

#[test]
fn narrow_bump_behaves_like_the_kernel() {
    let p = params(0.5, 0.75, 1);
    let table = profile(&p);
    let d = InitialDatum::bump(0.01, 1).unwrap();
    let d = d.clone().scaled(1.0 / d.mass()).unwrap();
    for t in [1e3, 1e4] {
        let solver = ConvolutionSolver::new(&d, &table, t).unwrap();
        let u = solver.eval(0.0).unwrap();
        let z = kernel_value(&table, 0.0, t).unwrap();
        assert!((u / z - 1.0).abs() <= 0.02, "t={t}: {u} vs {z}");
    }
}

#[test]
fn fields_are_nonnegative() {
    let p = params(0.5, 0.5, 1);
    let table = profile(&p);
    for d in [
        InitialDatum::indicator(1.0, 1).unwrap(),
        InitialDatum::power_tail(1.6, 1.0, 1).unwrap(),
        InitialDatum::bump(2.0, 1).unwrap(),
    ] {
        let grid = solution_grid(&p, &d, 3.0, 80).unwrap();
        let u = mild_solution_convolution(&d, &table, 3.0, &grid).unwrap();
        assert!(u.values().iter().all(|v| *v >= 0.0));
    }
    let d = InitialDatum::gaussian(1.0, 1).unwrap();
    let grid = solution_grid(&p, &d, 1e3, 200).unwrap();
    let u = mild_solution_fourier(&d, &p, 1e3, &grid).unwrap();
    assert!(u.values().iter().all(|v| *v >= 0.0));
}

#[test]
fn fourier_needs_a_transform_and_positive_time() {
    let p = params(0.5, 0.5, 1);
    let d = InitialDatum::gaussian(1.0, 1).unwrap();
    let grid = RadialGrid::uniform(1.0, 5, 1).unwrap();
    assert!(mild_solution_fourier(&d, &p, 0.0, &grid).is_err());
    assert!(mild_solution_fourier(&d, &p, -1.0, &grid).is_err());
}

#[test]
fn solution_csv_layout() {
    let p = params(0.5, 0.5, 1);
    let d = InitialDatum::gaussian(1.0, 1).unwrap();
    let grid = RadialGrid::uniform(1.0, 3, 1).unwrap();
    let u = mild_solution_fourier(&d, &p, 1.0, &grid).unwrap();
    let csv = u.to_csv();
    assert!(csv.starts_with("r,u,t,route\n"));
    assert_eq!(csv.lines().count(), 4);
    assert!(csv.lines().nth(1).unwrap().ends_with(",fourier"));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn comparison_principle(a in 0.1f64..1.0, k in 1.0f64..3.0, w1 in 0.3f64..1.0, dw in 0.0f64..1.0, t in 0.1f64..100.0) {
        // a e^{−r²/w₁²} ≤ ka e^{−r²/w₂²} whenever k ≥ 1 and w₂ ≥ w₁
        let p = params(0.5, 0.5, 1);
        let lo = InitialDatum::gaussian(w1, 1).unwrap().scaled(a).unwrap();
        let hi = InitialDatum::gaussian(w1 + dw, 1).unwrap().scaled(k * a).unwrap();
        let grid = RadialGrid::logarithmic(1e-2, 1e2, 30, 1).unwrap();
        let u = mild_solution_fourier(&lo, &p, t, &grid).unwrap();
        let v = mild_solution_fourier(&hi, &p, t, &grid).unwrap();
        for (x, y) in u.values().iter().zip(v.values()) {
            prop_assert!(*x <= y + 1e-8, "{} > {}", x, y);
        }
    }
}
