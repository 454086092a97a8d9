use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{ball_volume, shell_volume, RadialField};

/// Strong `L^p` or weak (Marcinkiewicz) `M^p`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NormKind {
    Strong,
    Weak,
}

/// Exponent and kind of a norm. `p = ∞` is written `"inf"` in JSON.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawNorm", into = "RawNorm")]
pub struct NormSpec {
    p: f64,
    kind: NormKind,
}

#[derive(Serialize, Deserialize)]
struct RawNorm {
    #[serde(with = "exponent_serde")]
    p: f64,
    #[serde(default = "strong")]
    kind: NormKind,
}

fn strong() -> NormKind {
    NormKind::Strong
}

impl TryFrom<RawNorm> for NormSpec {
    type Error = Error;
    fn try_from(r: RawNorm) -> Result<Self> {
        NormSpec::new(r.p, r.kind)
    }
}

impl From<NormSpec> for RawNorm {
    fn from(n: NormSpec) -> Self {
        RawNorm {
            p: n.p,
            kind: n.kind,
        }
    }
}

/// Serializes an exponent in `[1, ∞]`, writing `∞` as the string `"inf"`.
pub mod exponent_serde {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(p: &f64, s: S) -> Result<S::Ok, S::Error> {
        if p.is_infinite() {
            s.serialize_str("inf")
        } else {
            s.serialize_f64(*p)
        }
    }

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Num(f64),
        Str(String),
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        match Repr::deserialize(d)? {
            Repr::Num(x) => Ok(x),
            Repr::Str(s) if matches!(s.as_str(), "inf" | "infinity" | "∞") => Ok(f64::INFINITY),
            Repr::Str(s) => s
                .parse::<f64>()
                .map_err(|_| serde::de::Error::custom(format!("invalid exponent `{s}`"))),
        }
    }
}

impl NormSpec {
    pub fn new(p: f64, kind: NormKind) -> Result<Self> {
        if !(p >= 1.0) {
            return Err(Error::domain(format!("norm exponent must be ≥ 1, got {p}")));
        }
        if kind == NormKind::Weak && p.is_infinite() {
            return Err(Error::domain("the Marcinkiewicz norm needs finite p"));
        }
        Ok(NormSpec { p, kind })
    }

    pub fn strong(p: f64) -> Result<Self> {
        Self::new(p, NormKind::Strong)
    }

    pub fn weak(p: f64) -> Result<Self> {
        Self::new(p, NormKind::Weak)
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn kind(&self) -> NormKind {
        self.kind
    }

    /// Evaluates this norm of `field` on `region`.
    pub fn eval(&self, field: &RadialField, region: Region) -> Result<f64> {
        match self.kind {
            NormKind::Strong => lp_norm(field, region, *self),
            NormKind::Weak => weak_norm(field, region, self.p),
        }
    }
}

/// Radial interval `lo ≤ |x| ≤ hi` at a fixed time; `hi = None` extends to
/// the end of the grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Region {
    pub lo: f64,
    pub hi: Option<f64>,
}

impl Region {
    pub fn ball(r: f64) -> Self {
        Region { lo: 0.0, hi: Some(r) }
    }

    pub fn shell(lo: f64, hi: f64) -> Self {
        Region { lo, hi: Some(hi) }
    }

    pub fn whole() -> Self {
        Region { lo: 0.0, hi: None }
    }
}

/// Node range selected by a region, snapped outward to grid nodes.
struct Span {
    i0: usize,
    i1: usize,
    origin: bool,
}

fn resolve(field: &RadialField, region: Region) -> Result<Span> {
    let g = &field.grid;
    let hi = region.hi.unwrap_or(g.r_max());
    let slack = 1e-12 * g.r_max();
    let not_covered = || Error::NotCovered {
        lo: region.lo,
        hi,
        grid_lo: if g.r_min() > 0.0 { 0.0 } else { g.r_min() },
        grid_hi: g.r_max(),
    };
    if !(region.lo >= 0.0) || hi < region.lo || hi > g.r_max() + slack {
        return Err(not_covered());
    }
    let origin = region.lo < g.r_min();
    let i0 = if origin { 0 } else { g.floor_index(region.lo) };
    let i1 = g.ceil_index(hi.min(g.r_max()));
    Ok(Span { i0, i1, origin })
}

/// `‖f‖_{L^p(region)}` by radial quadrature; `p = ∞` is the maximum over the
/// nodes in the (outward snapped) region.
pub fn lp_norm(field: &RadialField, region: Region, norm: NormSpec) -> Result<f64> {
    if norm.kind == NormKind::Weak {
        return Err(Error::domain("lp_norm evaluates strong norms only"));
    }
    let span = resolve(field, region)?;
    let vals = &field.values[span.i0..=span.i1];
    let m = vals.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    if norm.p.is_infinite() || m == 0.0 {
        return Ok(m);
    }
    let w = field.grid.range_weights(span.i0, span.i1, span.origin);
    let mut acc = crate::quad::KahanSum::default();
    for (i, wi) in w.iter().enumerate() {
        if *wi != 0.0 {
            acc.add(wi * (field.values[i].abs() / m).powf(norm.p));
        }
    }
    Ok(m * acc.sum().max(0.0).powf(1.0 / norm.p))
}

/// Measure of `{|f| > λ}` within the node span, linear between nodes.
fn level_set_measure(field: &RadialField, span: &Span, lambda: f64) -> f64 {
    let g = &field.grid;
    let dim = g.dim();
    let r = g.nodes();
    let f = &field.values;
    let mut m = 0.0;
    if span.origin && r[0] > 0.0 && f[0].abs() > lambda {
        m += ball_volume(dim, r[0]);
    }
    for i in span.i0..span.i1 {
        let (a, b) = (f[i].abs(), f[i + 1].abs());
        let (ra, rb) = (r[i], r[i + 1]);
        match (a > lambda, b > lambda) {
            (true, true) => m += shell_volume(dim, ra, rb),
            (false, false) => {}
            (true, false) => {
                let rc = ra + (rb - ra) * (a - lambda) / (a - b);
                m += shell_volume(dim, ra, rc);
            }
            (false, true) => {
                let rc = ra + (rb - ra) * (lambda - a) / (b - a);
                m += shell_volume(dim, rc, rb);
            }
        }
    }
    m
}

/// Marcinkiewicz quasinorm `sup_λ λ |{|f| > λ} ∩ region|^{1/p}` over a
/// geometric λ-sweep with local refinement around the best level.
pub fn weak_norm(field: &RadialField, region: Region, p: f64) -> Result<f64> {
    if !(p >= 1.0) || p.is_infinite() {
        return Err(Error::domain(format!(
            "the Marcinkiewicz norm needs finite p ≥ 1, got {p}"
        )));
    }
    let span = resolve(field, region)?;
    let vals = &field.values[span.i0..=span.i1];
    let max = vals.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    if max == 0.0 {
        return Ok(0.0);
    }
    let min_pos = vals
        .iter()
        .map(|v| v.abs())
        .filter(|v| *v > 0.0)
        .fold(f64::INFINITY, f64::min);
    let lo = if min_pos < max { min_pos } else { max * 1e-6 };
    let score = |lambda: f64| lambda * level_set_measure(field, &span, lambda).powf(1.0 / p);

    const SWEEP: usize = 200;
    let sweep = |a: f64, b: f64| -> (f64, usize, Vec<f64>) {
        let ratio = (b / a).powf(1.0 / (SWEEP - 1) as f64);
        let lambdas: Vec<f64> = (0..SWEEP).map(|k| a * ratio.powi(k as i32)).collect();
        let mut best = (0.0, 0);
        for (k, &l) in lambdas.iter().enumerate() {
            let v = score(l);
            if v > best.0 {
                best = (v, k);
            }
        }
        (best.0, best.1, lambdas)
    };
    let (mut best, k, lambdas) = sweep(lo, max);
    let a = lambdas[k.saturating_sub(1)];
    let b = lambdas[(k + 1).min(SWEEP - 1)];
    if b > a {
        best = best.max(sweep(a, b).0);
    }
    best = best.max(score(max * (1.0 - 1e-12)));
    Ok(best)
}
