use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Mutex, OnceLock};

use fracheat_core::kernel::*;
use fracheat_core::{Error, ModelParams};
use proptest::prelude::*;
use statrs::function::gamma::gamma;

type Key = (u64, u64, u32, bool);

fn table(alpha: f64, s: f64, n: u32) -> ProfileTable {
    cached(alpha, s, n, BuildMethod::Direct)
}

fn cached(alpha: f64, s: f64, n: u32, method: BuildMethod) -> ProfileTable {
    static CACHE: OnceLock<Mutex<HashMap<Key, ProfileTable>>> = OnceLock::new();
    let key = (
        alpha.to_bits(),
        s.to_bits(),
        n,
        method == BuildMethod::Subordination,
    );
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(t) = cache.lock().unwrap().get(&key) {
        return t.clone();
    }
    let p = ModelParams::new(alpha, s, n).unwrap();
    let t = build_profile(&p, &default_profile_grid(n).unwrap(), method).unwrap();
    cache.lock().unwrap().insert(key, t.clone());
    t
}

const PRESETS: [(f64, f64, u32); 6] = [
    (0.5, 0.5, 1),
    (0.5, 0.5, 3),
    (0.5, 0.75, 1),
    (0.8, 0.5, 1),
    (0.8, 0.5, 3),
    (0.8, 0.75, 1),
];

/// `R_N(a)` with `F⁻¹[|ξ|^a] = R_N(a)|x|^{−N−a}`.
fn riesz(n: u32, a: f64) -> f64 {
    let n = n as f64;
    2f64.powf(a) * PI.powf(-n / 2.0) * gamma((n + a) / 2.0) / gamma(-a / 2.0)
}

fn poisson(n: u32, r: f64) -> f64 {
    let h = (n as f64 + 1.0) / 2.0;
    gamma(h) / PI.powf(h) * (1.0 + r * r).powf(-h)
}

#[test]
fn classical_limit_is_the_poisson_kernel() {
    for n in [1, 3] {
        let t = table(1.0, 0.5, n);
        for (r, v) in t.grid.nodes().iter().zip(&t.values) {
            if *r >= 1e-3 {
                let e = poisson(n, *r);
                assert!((v / e - 1.0).abs() < 1e-7, "N={n} r={r}: {v} vs {e}");
            }
        }
    }
    let t = table(1.0, 0.5, 1);
    assert!((t.kappa_hat * PI - 1.0).abs() < 0.01, "{}", t.kappa_hat);
}

#[test]
fn unit_mass_on_presets() {
    for (a, s, n) in PRESETS {
        let t = table(a, s, n);
        let m = normalization(&t);
        assert!((m - 1.0).abs() <= 1e-6, "({a},{s},{n}): {m}");
    }
}

#[test]
fn near_origin_constant_matches_riesz_kernel() {
    // F ≈ F⁻¹[|ξ|^{−2s}]/Γ(1−α) where E_α(−z) ≈ z^{−1}/Γ(1−α)
    for (a, n) in [(0.5, 3), (0.8, 3)] {
        let k = estimate_kappa(&table(a, 0.5, n)).unwrap();
        let exact = riesz(n, -1.0) / gamma(1.0 - a);
        assert!((k.value / exact - 1.0).abs() < 0.01, "({a},{n}): {} vs {exact}", k.value);
        assert_eq!(k.law, OriginLaw::Power);
    }
    // 2s = N = 1: F⁻¹[|ξ|^{−1}] = −ln|x|/π + const
    let k = estimate_kappa(&table(0.5, 0.5, 1)).unwrap();
    let exact = 1.0 / (PI * gamma(0.5));
    assert!((k.value / exact - 1.0).abs() < 0.01, "{} vs {exact}", k.value);
    assert_eq!(k.law, OriginLaw::Log);
}

#[test]
fn tail_constant_matches_first_series_coefficient() {
    for (a, s, n) in PRESETS {
        let kh = estimate_kappa_hat(&table(a, s, n)).unwrap();
        let exact = -riesz(n, 2.0 * s) / gamma(1.0 + a);
        assert!((kh.value / exact - 1.0).abs() < 0.01, "({a},{s},{n}): {} vs {exact}", kh.value);
        assert!(kh.variation <= 0.02, "({a},{s},{n}): {}", kh.variation);
    }
}

#[test]
fn value_at_origin_matches_mellin_integral() {
    // F(0) = (1/π) ∫₀^∞ E_α(−ρ^{2s}) dρ = Γ(1/2s)Γ(1−1/2s) / (2πs Γ(1−α/2s))
    for a in [0.5, 0.8] {
        let s = 0.75;
        let t = table(a, s, 1);
        let q = 1.0 / (2.0 * s);
        let exact = gamma(q) * gamma(1.0 - q) / (2.0 * PI * s * gamma(1.0 - a * q));
        let f0 = t.f0.unwrap();
        assert!((f0 / exact - 1.0).abs() < 1e-6, "{a}: {f0} vs {exact}");
    }
}

#[test]
fn near_origin_laws() {
    let t = table(0.5, 0.5, 3);
    let (mut x, mut y) = (Vec::new(), Vec::new());
    for (r, v) in t.grid.nodes().iter().zip(&t.values) {
        if *r <= 1e-2 {
            x.push(r.ln());
            y.push(v.ln());
        }
    }
    let slope = ols(&x, &y);
    assert!((slope / -2.0 - 1.0).abs() <= 0.03, "{slope}");

    let t = table(0.5, 0.5, 1);
    let ratio: Vec<f64> = t
        .grid
        .nodes()
        .iter()
        .zip(&t.values)
        .filter(|(r, _)| **r <= 1e-3)
        .map(|(r, v)| v / -r.ln())
        .collect();
    let (lo, hi) = ratio.iter().fold((f64::INFINITY, 0.0f64), |(a, b), v| (a.min(*v), b.max(*v)));
    assert!(hi / lo - 1.0 <= 0.05, "{lo} {hi}");
}

fn ols(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

#[test]
fn gradient_tail_exponent() {
    for (a, s, n) in PRESETS {
        let g = check_gradient_bounds(&table(a, s, n));
        let expected = -(n as f64 + 2.0 * s + 1.0);
        assert_eq!(g.tail_expected, expected);
        assert!(((g.tail_exponent - expected) / expected).abs() <= 0.05, "({a},{s},{n}): {}", g.tail_exponent);
        assert!(g.tail_consistent);
    }
}

#[test]
fn gradient_near_origin_when_two_s_exceeds_one() {
    // F(r) ≈ F(0) − c r^{2s−1}, so F′ ~ r^{2s−2} blows up for α < 1
    let g = check_gradient_bounds(&table(0.5, 0.75, 1));
    assert!((g.origin_exponent + 0.5).abs() < 0.05, "{}", g.origin_exponent);
    assert!(!g.origin_consistent);
    let g = check_gradient_bounds(&table(0.5, 0.5, 3));
    assert!((g.origin_exponent + 3.0).abs() < 0.15, "{}", g.origin_exponent);
}

#[test]
fn direct_and_subordination_agree() {
    for (a, s, n) in [(0.5, 0.5, 1), (0.5, 0.75, 1), (0.8, 0.5, 2), (0.5, 0.5, 3)] {
        let d = cached(a, s, n, BuildMethod::Direct);
        let b = cached(a, s, n, BuildMethod::Subordination);
        for ((r, x), y) in d.grid.nodes().iter().zip(&d.values).zip(&b.values) {
            if (0.01..=100.0).contains(r) {
                assert!((x / y - 1.0).abs() < 1e-6, "({a},{s},{n}) r={r}: {x} vs {y}");
            }
        }
    }
}

#[test]
fn classical_kappa_is_undefined() {
    let p = ModelParams::new(1.0, 0.5, 1).unwrap();
    let t = build_profile_unchecked(&p, &default_profile_grid(1).unwrap(), BuildMethod::Direct).unwrap();
    assert!(estimate_kappa(&t).is_err());
}

#[test]
fn unsupported_dimension() {
    let p = ModelParams::new(0.5, 0.5, 4).unwrap();
    let grid = fracheat_core::RadialGrid::logarithmic(1e-3, 1e3, 100, 4).unwrap();
    match build_profile(&p, &grid, BuildMethod::Direct) {
        Err(Error::Domain(m)) => assert!(m.contains("N∈{1,2,3}"), "{m}"),
        other => panic!("{other:?}"),
    }
}

#[test]
fn csv_layout() {
    let t = table(0.5, 0.5, 1);
    let csv = t.to_csv();
    assert!(!csv.contains('\r'));
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("r,F,method,alpha,s,N"));
    let first: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(first.len(), 6);
    // 17 significant digits
    assert_eq!(first[0].split('e').next().unwrap().replace(['.', '-'], "").len(), 17);
    assert_eq!(first[0].parse::<f64>().unwrap(), t.grid.nodes()[0]);
    assert_eq!(csv.lines().count(), t.grid.len() + 1);
    let side = t.sidecar();
    assert_eq!(side.status, "ok");
    assert!(side.mass_error <= 1e-6);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn profile_is_radially_decreasing(ln_r in -9.0f64..9.0, dl in 1e-3f64..2.0) {
        for (a, s, n) in [(0.5, 0.5, 1), (0.5, 0.75, 1), (0.8, 0.5, 3)] {
            let t = table(a, s, n);
            let r = ln_r.exp();
            let f1 = profile_value(&t, r).unwrap();
            let f2 = profile_value(&t, r * dl.exp()).unwrap();
            prop_assert!(f1 > 0.0 && f2 < f1, "({},{},{}) r={}: {} {}", a, s, n, r, f1, f2);
        }
    }

    #[test]
    fn kernel_is_self_similar(x in 0.01f64..50.0, t in 0.1f64..100.0, lambda in 0.2f64..5.0) {
        // Z(λx, λ^{2s/α} t) = λ^{−N} Z(x, t)
        let tab = table(0.5, 0.75, 1);
        let z1 = kernel_value(&tab, x, t).unwrap();
        let z2 = kernel_value(&tab, lambda * x, lambda.powf(2.0 * 0.75 / 0.5) * t).unwrap();
        prop_assert!((z2 * lambda / z1 - 1.0).abs() < 1e-10);
    }
}
