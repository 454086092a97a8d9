use std::f64::consts::PI;

use fracheat_core::asymptotics::*;
use fracheat_core::fields::{kernel_field, InitialDatum};
use fracheat_core::kernel::{build_profile, default_profile_grid, BuildMethod, ProfileTable};
use fracheat_core::{Error, ModelParams, NormSpec, RadialField, RadialGrid, ScaleWindow, WindowKind};
use statrs::function::gamma::gamma;

fn profile(p: &ModelParams) -> ProfileTable {
    build_profile(p, &default_profile_grid(p.dim()).unwrap(), BuildMethod::Direct).unwrap()
}

fn run(spec: &ScenarioSpec) -> ScenarioReport {
    run_scenario(spec, &profile(&spec.params)).unwrap()
}

fn summary(r: &ScenarioReport) -> String {
    r.checks
        .iter()
        .map(|c| format!("{}={:.4}/{:.4}", c.name, c.value, c.threshold))
        .collect::<Vec<_>>()
        .join(" ")
}

#[test]
fn relative_error_sup_of_scaled_fields() {
    let p = ModelParams::new(0.5, 0.5, 1).unwrap();
    let table = profile(&p);
    let d = InitialDatum::gaussian(1.0, 1).unwrap();
    let grid = RadialGrid::logarithmic(1e-2, 1e2, 50, 1).unwrap();
    let u = kernel_field(&table, &d, 4.0, &grid).unwrap();
    let w = ScaleWindow::new(WindowKind::WholeSpace, &p, None).unwrap();
    assert_eq!(relative_error_sup(&u, &u.field, &w, 4.0).unwrap(), 0.0);
    let reference = RadialField::new(grid.clone(), u.values().iter().map(|v| v / 1.05).collect()).unwrap();
    let e = relative_error_sup(&u, &reference, &w, 4.0).unwrap();
    assert!((e - 0.05).abs() < 1e-14, "{e}");
    let other = RadialField::new(RadialGrid::logarithmic(1e-2, 1e2, 51, 1).unwrap(), vec![1.0; 51]).unwrap();
    assert!(relative_error_sup(&u, &other, &w, 4.0).is_err());
}

#[test]
fn critical_dimension_table_values() {
    let t = critical_dimension_table(0.5, 0.5, 2.0, &[1, 2, 3]).unwrap();
    let dom: Vec<f64> = t.iter().map(|e| e.dominant).collect();
    assert_eq!(dom, vec![0.25, 0.5, 0.5]);
    assert!(t.iter().all(|e| e.threshold == 2.0));
    let t = critical_dimension_table(0.7, 0.75, f64::INFINITY, &[1, 2, 3]).unwrap();
    assert!(t.iter().all(|e| e.threshold == 1.5));
    assert!(critical_dimension_table(0.5, 0.5, 1.0, &[1]).is_err());
    for p in [1.5, 2.0, 4.0, f64::INFINITY] {
        let t = critical_dimension_table(0.6, 0.4, p, &[1, 2, 3]).unwrap();
        for w in t.windows(2) {
            assert!(w[1].dominant >= w[0].dominant);
        }
        for e in &t {
            if e.dim as f64 >= e.threshold {
                assert_eq!(e.dominant, 0.6);
            }
        }
    }
}

#[test]
fn synthetic_self_comparison_is_exactly_zero() {
    for id in ScenarioId::ALL {
        let mut spec = ScenarioSpec::preset(id).unwrap();
        spec.synthetic = true;
        if id == ScenarioId::CompactSupercritical {
            spec.norm = NormSpec::strong(1.0).unwrap();
        }
        let r = run(&spec);
        if id != ScenarioId::SupercriticalL2 {
            assert!(r.curve.iter().all(|c| c.error == 0.0), "{id}: {:?}", r.curve);
        }
        assert!(r.pass, "{id}: {}", summary(&r));
    }
}

#[test]
fn hypotheses_are_enforced() {
    let mut far = ScenarioSpec::preset(ScenarioId::FarTail).unwrap();
    far.datum = InitialDatum::gaussian(1.0, 1).unwrap();
    assert!(matches!(far.validate(), Err(Error::Hypothesis(_))));

    let mut ext = ScenarioSpec::preset(ScenarioId::ExteriorSupercritical).unwrap();
    ext.datum = InitialDatum::power_tail(3.5, 1.0, 3).unwrap();
    assert!(ext.validate().is_ok());
    assert!(InitialDatum::power_tail(2.5, 1.0, 3).is_err());

    let mut crit = ScenarioSpec::preset(ScenarioId::CompactCritical1d).unwrap();
    crit.params = ModelParams::new(0.5, 0.75, 1).unwrap();
    assert!(matches!(crit.validate(), Err(Error::Hypothesis(_))));

    let mut comp = ScenarioSpec::preset(ScenarioId::CompactSupercritical).unwrap();
    comp.norm = NormSpec::strong(1.5).unwrap();
    assert!(matches!(comp.validate(), Err(Error::Hypothesis(_))));

    let mut ch = ScenarioSpec::preset(ScenarioId::CharacteristicLp).unwrap();
    ch.params = ModelParams::new(0.5, 0.5, 3).unwrap();
    ch.datum = InitialDatum::gaussian(1.0, 3).unwrap();
    ch.norm = NormSpec::strong(4.0).unwrap();
    assert!(matches!(ch.validate(), Err(Error::Hypothesis(_))));

    let mut bad = ScenarioSpec::preset(ScenarioId::CharacteristicLp).unwrap();
    bad.schedule = TimeSchedule::Dyadic { t0: 1.0, k_max: 21 };
    assert!(bad.validate().is_err());
}

#[test]
fn spec_round_trips_through_json() {
    for id in ScenarioId::ALL {
        let spec = ScenarioSpec::preset(id).unwrap();
        let text = serde_json::to_string(&spec).unwrap();
        let back: ScenarioSpec = serde_json::from_str(&text).unwrap();
        assert_eq!(back, spec);
        assert_eq!(id.label().parse::<ScenarioId>().unwrap(), id);
    }
}

#[test]
fn characteristic_error_decays_for_p_one_and_two() {
    for p in [1.0, 2.0] {
        let mut spec = ScenarioSpec::preset(ScenarioId::CharacteristicLp).unwrap();
        spec.norm = NormSpec::strong(p).unwrap();
        let r = run(&spec);
        let first = r.curve.first().unwrap().error;
        let last = r.curve.last().unwrap().error;
        assert!(last <= 0.25 * first, "p={p}: {first} -> {last}");
        assert!(r.pass, "p={p}: {}", summary(&r));
    }
}

#[test]
fn passing_presets() {
    for id in [
        ScenarioId::ExteriorSupercritical,
        ScenarioId::Intermediate,
        ScenarioId::CompactSupercritical,
        ScenarioId::FastMatched,
        ScenarioId::SupercriticalL2,
    ] {
        let r = run(&ScenarioSpec::preset(id).unwrap());
        assert!(r.pass, "{id}: {}", summary(&r));
    }
}

#[test]
fn compact_supercritical_terminal_and_slope() {
    let r = run(&ScenarioSpec::preset(ScenarioId::CompactSupercritical).unwrap());
    assert!(r.terminal_error.unwrap() <= 0.05);
    let slope = r.measured.unwrap().slope;
    assert!((slope / -0.5 - 1.0).abs() <= 0.03, "{slope}");
}

/// `(t^α/ln t) u(0,t) / (Mκα) − 1 ≈ (c₀/κ − ⟨ln|y|⟩) / ln ℓ` for `F(z) ≈ −κ ln z + c₀`,
/// with `⟨ln|y|⟩ = −(γ + 2 ln 2)/2` for `e^{−y²}`.
#[test]
fn critical_one_dimensional_error_is_the_log_correction() {
    let spec = ScenarioSpec::preset(ScenarioId::CompactCritical1d).unwrap();
    let table = profile(&spec.params);
    let r = run_scenario(&spec, &table).unwrap();
    let euler = 0.577_215_664_901_532_9;
    let mean_log = -(euler + 2.0 * 2f64.ln()) / 2.0;
    let o = table.origin;
    for c in r.curve.iter().rev().take(4) {
        let ell = spec.params.length_scale(c.t);
        let predicted = (o.offset / o.coef - mean_log) / ell.ln();
        let e = c.pointwise.unwrap();
        assert!((e / predicted - 1.0).abs() < 0.03, "t={}: {e} vs {predicted}", c.t);
    }
}

#[test]
#[ignore = "the relative error decays like 1/ln t and is 0.20 at t = 1e6; 10% needs t near 1e12"]
fn critical_one_dimensional_terminal_within_ten_percent() {
    let r = run(&ScenarioSpec::preset(ScenarioId::CompactCritical1d).unwrap());
    assert!(r.pass, "{}", summary(&r));
}

/// `F(z) ≈ F(0) − c z^{2s−1}` with `c = Γ(2−2s) cos(π(2s−1)/2) / ((2s−1) π Γ(1−α))`,
/// so `t^{α/2s} u(0,t)/(M F(0)) − 1 ≈ −c ⟨|y|^{2s−1}⟩ ℓ^{1−2s} / F(0)`.
#[test]
fn subcritical_one_dimensional_error_is_the_first_correction() {
    let spec = ScenarioSpec::preset(ScenarioId::CompactSubcritical1d).unwrap();
    let (a, s) = (spec.params.alpha(), spec.params.s());
    let e = 2.0 * s - 1.0;
    let c = gamma(1.0 - e) * (PI * e / 2.0).cos() / (e * PI * gamma(1.0 - a));
    let q = 1.0 / (2.0 * s);
    let f0 = gamma(q) * gamma(1.0 - q) / (2.0 * PI * s * gamma(1.0 - a * q));
    let moment = gamma((e + 1.0) / 2.0) / PI.sqrt();
    let r = run(&spec);
    for point in r.curve.iter().rev().take(4) {
        let ell = spec.params.length_scale(point.t);
        let predicted = c * moment * ell.powf(-e) / f0;
        let err = point.pointwise.unwrap();
        assert!((err / predicted - 1.0).abs() < 0.1, "t={}: {err} vs {predicted}", point.t);
    }
}

#[test]
#[ignore = "the first correction decays like t^{−1/6}; the error is 0.11 at t = 2^14 and 2% needs t near 1e18"]
fn subcritical_one_dimensional_terminal_within_two_percent() {
    let r = run(&ScenarioSpec::preset(ScenarioId::CompactSubcritical1d).unwrap());
    assert!(r.pass, "{}", summary(&r));
}

/// `u|x|^β/A − 1 ≈ M κ̂ t^α h^{β−N−2s} / A` at the inner edge `|x| = h(t)`.
#[test]
fn far_tail_error_is_the_kernel_tail_contribution() {
    let spec = ScenarioSpec::preset(ScenarioId::FarTail).unwrap();
    let table = profile(&spec.params);
    let r = run_scenario(&spec, &table).unwrap();
    let (a, n, s) = (spec.params.alpha(), spec.params.n(), spec.params.s());
    let beta = spec.datum.beta();
    let amp = spec.datum.tail_amplitude().unwrap();
    let m = spec.datum.mass();
    let kh = -(2f64.powf(2.0 * s) * PI.powf(-n / 2.0) * gamma((n + 2.0 * s) / 2.0) / gamma(-s)) / gamma(1.0 + a);
    for c in r.curve.iter().rev().take(4) {
        let predicted = m * kh * c.t.powf(a) * c.window_lo.powf(beta - n - 2.0 * s) / amp;
        let e = c.pointwise.unwrap();
        assert!((e / predicted - 1.0).abs() < 0.05, "t={}: {e} vs {predicted}", c.t);
    }
}

#[test]
#[ignore = "the kernel tail adds M κ̂ t^α h^{β−N−2s}/A ∝ t^{−0.04} at the window edge, about 1.1 at t = 2^14; 5% needs t near 1e37"]
fn far_tail_terminal_within_five_percent() {
    let r = run(&ScenarioSpec::preset(ScenarioId::FarTail).unwrap());
    assert!(r.pass, "{}", summary(&r));
}

#[test]
fn measured_dimension_exponents() {
    let m = measure_critical_dimension(0.5, 0.5, 2.0, &[1, 2, 3], &TimeSchedule::dyadic(14)).unwrap();
    for d in &m {
        assert!(d.relative_error <= 0.05, "{d:?}");
    }
    assert!(m[2].dominant <= m[1].dominant * 1.05);
}

#[test]
fn report_outputs() {
    let mut spec = ScenarioSpec::preset(ScenarioId::FastMatched).unwrap();
    spec.synthetic = true;
    let r = run(&spec);
    let csv = r.curve_csv();
    assert!(csv.starts_with("t,error,norm,pointwise,window_lo,window_hi\n"));
    assert_eq!(csv.lines().count(), r.curve.len() + 1);
    let json: serde_json::Value = serde_json::from_str(&r.to_json().unwrap()).unwrap();
    assert_eq!(json["id"], "fast_matched");
    assert_eq!(json["pass"], true);
}
