//! Quenched disorder: i.i.d. edge weights `w_e` and vertex weights `nu_x`.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{Restriction, SiteIndex, WeightedGraph};
use crate::scalar::Scalar;
use crate::seed::site_rng;

/// Law of a single weight.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum WeightDistribution {
    Gaussian { mean: f64, stddev: f64 },
    Uniform { lo: f64, hi: f64 },
    /// `v0` with probability `p`, `v1` otherwise.
    TwoPoint { p: f64, v0: f64, v1: f64 },
    Constant(f64),
    /// Symmetric Pareto: `|w| = scale * U^(-1/shape)` with a fair random sign.
    /// `E|w|^k` is finite exactly for `k < shape`.
    Pareto { scale: f64, shape: f64 },
}

impl WeightDistribution {
    pub fn validate(&self) -> Result<()> {
        let finite = |name: &str, v: f64| {
            if v.is_finite() {
                Ok(())
            } else {
                Err(Error::validation(name, "must be finite"))
            }
        };
        match *self {
            WeightDistribution::Gaussian { mean, stddev } => {
                finite("law.mean", mean)?;
                finite("law.stddev", stddev)?;
                if stddev < 0.0 {
                    return Err(Error::validation("law.stddev", "must be nonnegative"));
                }
            }
            WeightDistribution::Uniform { lo, hi } => {
                finite("law.lo", lo)?;
                finite("law.hi", hi)?;
                if lo > hi {
                    return Err(Error::validation("law.lo", "must not exceed hi"));
                }
            }
            WeightDistribution::TwoPoint { p, v0, v1 } => {
                finite("law.v0", v0)?;
                finite("law.v1", v1)?;
                if !(0.0..=1.0).contains(&p) {
                    return Err(Error::validation("law.p", "must lie in [0, 1]"));
                }
            }
            WeightDistribution::Constant(v) => finite("law.value", v)?,
            WeightDistribution::Pareto { scale, shape } => {
                if !(scale > 0.0 && scale.is_finite()) {
                    return Err(Error::validation("law.scale", "must be positive"));
                }
                if !(shape > 0.0 && shape.is_finite()) {
                    return Err(Error::validation("law.shape", "must be positive"));
                }
            }
        }
        Ok(())
    }

    /// False iff the law is a point mass.
    pub fn is_non_degenerate(&self) -> bool {
        match *self {
            WeightDistribution::Gaussian { stddev, .. } => stddev > 0.0,
            WeightDistribution::Uniform { lo, hi } => lo < hi,
            WeightDistribution::TwoPoint { p, v0, v1 } => v0 != v1 && p > 0.0 && p < 1.0,
            WeightDistribution::Constant(_) => false,
            WeightDistribution::Pareto { .. } => true,
        }
    }

    pub fn is_gaussian(&self) -> bool {
        matches!(self, WeightDistribution::Gaussian { .. })
    }

    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            WeightDistribution::Gaussian { mean, stddev } => {
                if stddev == 0.0 {
                    mean
                } else {
                    Normal::new(mean, stddev).expect("validated").sample(rng)
                }
            }
            WeightDistribution::Uniform { lo, hi } => {
                if lo == hi {
                    lo
                } else {
                    rng.random_range(lo..hi)
                }
            }
            WeightDistribution::TwoPoint { p, v0, v1 } => {
                if rng.random::<f64>() < p {
                    v0
                } else {
                    v1
                }
            }
            WeightDistribution::Constant(v) => v,
            WeightDistribution::Pareto { scale, shape } => {
                // 1 - U lies in (0, 1]
                let u = 1.0 - rng.random::<f64>();
                let magnitude = scale * u.powf(-1.0 / shape);
                if rng.random::<bool>() {
                    magnitude
                } else {
                    -magnitude
                }
            }
        }
    }

    /// `E|w|^k`, `+inf` when the moment does not exist.
    pub fn abs_moment(&self, k: f64) -> f64 {
        match *self {
            WeightDistribution::Gaussian { mean, stddev } => {
                if stddev == 0.0 {
                    return mean.abs().powf(k);
                }
                if mean == 0.0 {
                    // sigma^k 2^(k/2) Gamma((k+1)/2) / sqrt(pi)
                    let g = statrs::function::gamma::gamma((k + 1.0) / 2.0);
                    return stddev.powf(k) * 2f64.powf(k / 2.0) * g / std::f64::consts::PI.sqrt();
                }
                gaussian_abs_moment_quadrature(mean, stddev, k)
            }
            WeightDistribution::Uniform { lo, hi } => {
                if lo == hi {
                    return lo.abs().powf(k);
                }
                // antiderivative of |x|^k is sign(x)|x|^(k+1)/(k+1)
                let anti = |x: f64| x.signum() * x.abs().powf(k + 1.0) / (k + 1.0);
                (anti(hi) - anti(lo)) / (hi - lo)
            }
            WeightDistribution::TwoPoint { p, v0, v1 } => {
                p * v0.abs().powf(k) + (1.0 - p) * v1.abs().powf(k)
            }
            WeightDistribution::Constant(v) => v.abs().powf(k),
            WeightDistribution::Pareto { scale, shape } => {
                if k >= shape {
                    f64::INFINITY
                } else {
                    shape * scale.powf(k) / (shape - k)
                }
            }
        }
    }

    /// `E w^2`.
    pub fn second_moment(&self) -> f64 {
        self.abs_moment(2.0)
    }
}

/// Simpson quadrature of `E|X|^k` for `X ~ N(mean, stddev^2)` over +-12 sd.
fn gaussian_abs_moment_quadrature(mean: f64, stddev: f64, k: f64) -> f64 {
    let n = 20_000;
    let (a, b) = (-12.0, 12.0);
    let h = (b - a) / n as f64;
    let f = |z: f64| {
        let x = mean + stddev * z;
        x.abs().powf(k) * (-0.5 * z * z).exp() / (2.0 * std::f64::consts::PI).sqrt()
    };
    let mut s = f(a) + f(b);
    for i in 1..n {
        let z = a + i as f64 * h;
        s += if i % 2 == 1 { 4.0 } else { 2.0 } * f(z);
    }
    s * h / 3.0
}

fn parse_args<const N: usize>(field: &str, text: &str) -> Result<[f64; N]> {
    let parts: Vec<&str> = text.split(',').collect();
    if parts.len() != N {
        return Err(Error::validation(
            field,
            format!("expected {N} comma-separated numbers, got {text:?}"),
        ));
    }
    let mut out = [0.0; N];
    for (slot, p) in out.iter_mut().zip(parts) {
        *slot = p
            .trim()
            .parse::<f64>()
            .map_err(|_| Error::validation(field, format!("not a number: {p:?}")))?;
    }
    Ok(out)
}

impl FromStr for WeightDistribution {
    type Err = Error;

    /// `gaussian:MEAN,SD`, `uniform:LO,HI`, `twopoint:P,V0,V1`, `const:V`,
    /// `pareto:SCALE,SHAPE`.
    fn from_str(s: &str) -> Result<Self> {
        let (kind, args) = s
            .split_once(':')
            .ok_or_else(|| Error::validation("law", format!("expected KIND:ARGS, got {s:?}")))?;
        let law = match kind {
            "gaussian" | "normal" => {
                let [mean, stddev] = parse_args("law.gaussian", args)?;
                WeightDistribution::Gaussian { mean, stddev }
            }
            "uniform" => {
                let [lo, hi] = parse_args("law.uniform", args)?;
                WeightDistribution::Uniform { lo, hi }
            }
            "twopoint" => {
                let [p, v0, v1] = parse_args("law.twopoint", args)?;
                WeightDistribution::TwoPoint { p, v0, v1 }
            }
            "const" | "constant" => {
                let [v] = parse_args("law.const", args)?;
                WeightDistribution::Constant(v)
            }
            "pareto" => {
                let [scale, shape] = parse_args("law.pareto", args)?;
                WeightDistribution::Pareto { scale, shape }
            }
            _ => return Err(Error::validation("law", format!("unknown law {kind:?}"))),
        };
        law.validate()?;
        Ok(law)
    }
}

impl fmt::Display for WeightDistribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            WeightDistribution::Gaussian { mean, stddev } => write!(f, "gaussian:{mean},{stddev}"),
            WeightDistribution::Uniform { lo, hi } => write!(f, "uniform:{lo},{hi}"),
            WeightDistribution::TwoPoint { p, v0, v1 } => write!(f, "twopoint:{p},{v0},{v1}"),
            WeightDistribution::Constant(v) => write!(f, "const:{v}"),
            WeightDistribution::Pareto { scale, shape } => write!(f, "pareto:{scale},{shape}"),
        }
    }
}

/// Laws and seed a sample was drawn with.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub edge_law: WeightDistribution,
    pub vertex_law: WeightDistribution,
    pub seed: u64,
}

/// One realization of the weight field on a graph.
#[derive(Debug, Clone, PartialEq)]
pub struct DisorderSample<T> {
    pub edge_weights: Vec<T>,
    pub vertex_weights: Vec<T>,
    pub provenance: Provenance,
}

impl<T: Scalar> DisorderSample<T> {
    /// Builds a sample from explicit weights. Values must be finite.
    pub fn from_weights(edge_weights: Vec<T>, vertex_weights: Vec<T>) -> Result<Self> {
        if edge_weights
            .iter()
            .chain(vertex_weights.iter())
            .any(|w| !w.is_finite())
        {
            return Err(Error::validation("weights", "all weights must be finite"));
        }
        Ok(DisorderSample {
            edge_weights,
            vertex_weights,
            provenance: Provenance {
                edge_law: WeightDistribution::Constant(0.0),
                vertex_law: WeightDistribution::Constant(0.0),
                seed: 0,
            },
        })
    }

    /// All-zero weights on `g`.
    pub fn zeros(g: &WeightedGraph) -> Self {
        Self::from_weights(vec![T::zero(); g.edge_count()], vec![T::zero(); g.vertex_count()])
            .expect("zeros are finite")
    }

    pub fn check_graph(&self, g: &WeightedGraph) -> Result<()> {
        if self.edge_weights.len() != g.edge_count() || self.vertex_weights.len() != g.vertex_count() {
            return Err(Error::validation(
                "sample",
                format!(
                    "weights sized {}/{} for a graph with {} edges and {} vertices",
                    self.edge_weights.len(),
                    self.vertex_weights.len(),
                    g.edge_count(),
                    g.vertex_count()
                ),
            ));
        }
        Ok(())
    }

    pub fn get(&self, site: SiteIndex) -> T {
        match site {
            SiteIndex::Vertex(x) => self.vertex_weights[x],
            SiteIndex::Edge(e) => self.edge_weights[e],
        }
    }

    /// Copy with the weight at `site` replaced.
    pub fn with_site(&self, site: SiteIndex, value: T) -> Self {
        let mut out = self.clone();
        match site {
            SiteIndex::Vertex(x) => out.vertex_weights[x] = value,
            SiteIndex::Edge(e) => out.edge_weights[e] = value,
        }
        out
    }

    /// Weights of a materialized subgraph.
    pub fn restrict(&self, r: &Restriction) -> Self {
        DisorderSample {
            edge_weights: r.edge_map.iter().map(|&e| self.edge_weights[e]).collect(),
            vertex_weights: r.vertex_map.iter().map(|&x| self.vertex_weights[x]).collect(),
            provenance: self.provenance,
        }
    }

    fn law_of(&self, site: SiteIndex) -> WeightDistribution {
        match site {
            SiteIndex::Vertex(_) => self.provenance.vertex_law,
            SiteIndex::Edge(_) => self.provenance.edge_law,
        }
    }

    pub fn map<U: Scalar>(&self, f: impl Fn(T) -> U) -> DisorderSample<U> {
        DisorderSample {
            edge_weights: self.edge_weights.iter().map(|&w| f(w)).collect(),
            vertex_weights: self.vertex_weights.iter().map(|&w| f(w)).collect(),
            provenance: self.provenance,
        }
    }

    /// Empirical `mean |w|^k` over edge weights and over vertex weights.
    pub fn empirical_abs_moments(&self, k: f64) -> (f64, f64) {
        let m = |v: &[T]| {
            if v.is_empty() {
                0.0
            } else {
                v.iter().map(|w| w.as_f64().abs().powf(k)).sum::<f64>() / v.len() as f64
            }
        };
        (m(&self.edge_weights), m(&self.vertex_weights))
    }
}

fn draw_site<T: Scalar>(law: &WeightDistribution, seed: u64, site: SiteIndex) -> T {
    let mut rng = site_rng(seed, site);
    T::of(law.draw(&mut rng))
}

/// Draws i.i.d. edge and vertex weights. Each site reads its own stream of
/// `seed`, so the result is a pure function of the arguments.
pub fn sample_weights<T: Scalar>(
    g: &WeightedGraph,
    edge_law: WeightDistribution,
    vertex_law: WeightDistribution,
    seed: u64,
) -> Result<DisorderSample<T>> {
    edge_law.validate()?;
    vertex_law.validate()?;
    let edge_weights = (0..g.edge_count())
        .map(|e| draw_site(&edge_law, seed, SiteIndex::Edge(e)))
        .collect();
    let vertex_weights = (0..g.vertex_count())
        .map(|x| draw_site(&vertex_law, seed, SiteIndex::Vertex(x)))
        .collect();
    Ok(DisorderSample {
        edge_weights,
        vertex_weights,
        provenance: Provenance {
            edge_law,
            vertex_law,
            seed,
        },
    })
}

/// Truncation interpolation
/// `w^t = w 1{|w| <= L} + t w 1{|w| > L}`, applied to every site.
pub fn truncate_weights<T: Scalar>(s: &DisorderSample<T>, level: T, t: T) -> Result<DisorderSample<T>> {
    if !(level > T::zero()) {
        return Err(Error::validation("L", "truncation level must be positive"));
    }
    if !(t >= T::zero() && t <= T::one()) {
        return Err(Error::validation("t", "must lie in [0, 1]"));
    }
    let cut = |w: T| if w.abs() <= level { w } else { t * w };
    Ok(s.map(cut))
}

/// Redraws the weights at `sites` from the original laws using `seed`;
/// other sites are unchanged.
pub fn resample_subset<T: Scalar>(
    s: &DisorderSample<T>,
    sites: &[SiteIndex],
    seed: u64,
) -> Result<DisorderSample<T>> {
    let mut out = s.clone();
    for &site in sites {
        let law = s.law_of(site);
        let v = draw_site(&law, seed, site);
        match site {
            SiteIndex::Vertex(x) if x < out.vertex_weights.len() => out.vertex_weights[x] = v,
            SiteIndex::Edge(e) if e < out.edge_weights.len() => out.edge_weights[e] = v,
            _ => return Err(Error::validation("sites", format!("{site} out of range"))),
        }
    }
    Ok(out)
}

/// Truncation level `n^kappa` for a graph with `n` vertices.
pub fn truncation_level(n: usize, kappa: f64) -> f64 {
    (n as f64).powf(kappa)
}

/// Standard normal draw from a generator.
pub fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.sample(StandardNormal)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{build_grid, build_path};
    use proptest::prelude::*;

    fn gauss() -> WeightDistribution {
        WeightDistribution::Gaussian { mean: 0.0, stddev: 1.0 }
    }

    #[test]
    fn constant_law_gives_zeros() {
        let g = build_grid(3, 3, false).unwrap();
        for seed in [0, 1, 99] {
            let s: DisorderSample<f64> = sample_weights(
                &g,
                WeightDistribution::Constant(0.0),
                WeightDistribution::Constant(0.0),
                seed,
            )
            .unwrap();
            assert!(s.edge_weights.iter().chain(&s.vertex_weights).all(|&w| w == 0.0));
        }
    }

    #[test]
    fn same_seed_same_sample() {
        let g = build_grid(4, 4, false).unwrap();
        let a: DisorderSample<f64> = sample_weights(&g, gauss(), gauss(), 11).unwrap();
        let b: DisorderSample<f64> = sample_weights(&g, gauss(), gauss(), 11).unwrap();
        assert_eq!(a, b);
        let c: DisorderSample<f64> = sample_weights(&g, gauss(), gauss(), 12).unwrap();
        assert_ne!(a.edge_weights, c.edge_weights);
    }

    #[test]
    fn gaussian_law_of_large_numbers() {
        let g = build_path(10_001).unwrap();
        let s: DisorderSample<f64> =
            sample_weights(&g, gauss(), WeightDistribution::Constant(0.0), 5).unwrap();
        let n = s.edge_weights.len() as f64;
        let mean = s.edge_weights.iter().sum::<f64>() / n;
        let var = s.edge_weights.iter().map(|w| (w - mean).powi(2)).sum::<f64>() / (n - 1.0);
        assert!(mean.abs() < 4.0 / n.sqrt(), "mean {mean}");
        assert!((var - 1.0).abs() < 0.1, "var {var}");
    }

    #[test]
    fn truncation_examples() {
        let s = DisorderSample::from_weights(vec![5.0_f64, -2.0], vec![0.5]).unwrap();
        let t0 = truncate_weights(&s, 3.0, 0.0).unwrap();
        assert_eq!(t0.edge_weights, vec![0.0, -2.0]);
        let th = truncate_weights(&s, 3.0, 0.5).unwrap();
        assert_eq!(th.edge_weights[0], 2.5);
        let t1 = truncate_weights(&s, 3.0, 1.0).unwrap();
        assert_eq!(t1, s);
        assert!(truncate_weights(&s, 0.0, 0.5).is_err());
        assert!(truncate_weights(&s, 1.0, 1.5).is_err());
    }

    #[test]
    fn resample_examples() {
        let g = build_grid(3, 3, false).unwrap();
        let s: DisorderSample<f64> = sample_weights(&g, gauss(), gauss(), 3).unwrap();
        assert_eq!(resample_subset(&s, &[], 9).unwrap(), s);

        let r = resample_subset(&s, &[SiteIndex::Edge(4)], 9).unwrap();
        for e in 0..g.edge_count() {
            assert_eq!(r.edge_weights[e] != s.edge_weights[e], e == 4);
        }
        assert_eq!(r.vertex_weights, s.vertex_weights);

        let sites = [SiteIndex::Edge(1), SiteIndex::Vertex(2)];
        let once = resample_subset(&s, &sites, 17).unwrap();
        let twice = resample_subset(&once, &sites, 17).unwrap();
        assert_eq!(once, twice);
        assert!(resample_subset(&s, &[SiteIndex::Edge(999)], 1).is_err());
    }

    #[test]
    fn law_strings() {
        for text in ["gaussian:0,1", "uniform:-1,1", "twopoint:0.5,-1,1", "const:0", "pareto:1,3"] {
            let law: WeightDistribution = text.parse().unwrap();
            assert_eq!(law.to_string(), text);
        }
        assert!("uniform:1,-1".parse::<WeightDistribution>().is_err());
        assert!("gaussian:0,-1".parse::<WeightDistribution>().is_err());
        assert!("twopoint:1.5,0,1".parse::<WeightDistribution>().is_err());
        assert!("cauchy:0,1".parse::<WeightDistribution>().is_err());
        assert!("gaussian:0".parse::<WeightDistribution>().is_err());
    }

    #[test]
    fn degeneracy() {
        assert!(gauss().is_non_degenerate());
        assert!(!WeightDistribution::Constant(1.0).is_non_degenerate());
        assert!(!WeightDistribution::Gaussian { mean: 2.0, stddev: 0.0 }.is_non_degenerate());
        assert!(!WeightDistribution::Uniform { lo: 1.0, hi: 1.0 }.is_non_degenerate());
        assert!(!WeightDistribution::TwoPoint { p: 1.0, v0: 0.0, v1: 1.0 }.is_non_degenerate());
    }

    #[test]
    fn moments() {
        assert!((gauss().abs_moment(2.0) - 1.0).abs() < 1e-12);
        assert!((gauss().abs_moment(4.0) - 3.0).abs() < 1e-12);
        assert!((gauss().abs_moment(1.0) - (2.0 / std::f64::consts::PI).sqrt()).abs() < 1e-12);
        let shifted = WeightDistribution::Gaussian { mean: 1.0, stddev: 2.0 };
        assert!((shifted.abs_moment(2.0) - 5.0).abs() < 1e-8);
        let u = WeightDistribution::Uniform { lo: -1.0, hi: 1.0 };
        assert!((u.abs_moment(2.0) - 1.0 / 3.0).abs() < 1e-12);
        let u2 = WeightDistribution::Uniform { lo: 0.0, hi: 2.0 };
        assert!((u2.abs_moment(2.0) - 4.0 / 3.0).abs() < 1e-12);
        let p = WeightDistribution::Pareto { scale: 1.0, shape: 3.0 };
        assert!((p.abs_moment(2.5) - 6.0).abs() < 1e-12);
        assert!(p.abs_moment(3.0).is_infinite());
    }

    #[test]
    fn pareto_tail_matches_law() {
        let law = WeightDistribution::Pareto { scale: 1.0, shape: 3.0 };
        let g = build_path(20_001).unwrap();
        let s: DisorderSample<f64> =
            sample_weights(&g, law, WeightDistribution::Constant(0.0), 1).unwrap();
        let n = s.edge_weights.len() as f64;
        assert!(s.edge_weights.iter().all(|w| w.abs() >= 1.0));
        let above2 = s.edge_weights.iter().filter(|w| w.abs() > 2.0).count() as f64 / n;
        // P(|w| > 2) = 1/8
        assert!((above2 - 0.125).abs() < 4.0 * (0.125 * 0.875 / n).sqrt());
        let pos = s.edge_weights.iter().filter(|&&w| w > 0.0).count() as f64 / n;
        assert!((pos - 0.5).abs() < 0.02);
    }

    #[test]
    fn f32_samples() {
        let g = build_grid(2, 2, false).unwrap();
        let s: DisorderSample<f32> = sample_weights(&g, gauss(), gauss(), 2).unwrap();
        let d: DisorderSample<f64> = sample_weights(&g, gauss(), gauss(), 2).unwrap();
        for (a, b) in s.edge_weights.iter().zip(&d.edge_weights) {
            assert_eq!(*a, *b as f32);
        }
    }

    proptest! {
        #[test]
        fn truncation_bounds(ws in proptest::collection::vec(-20.0f64..20.0, 1..30),
                             level in 0.1f64..10.0, t in 0.0f64..=1.0) {
            let s = DisorderSample::from_weights(ws.clone(), vec![]).unwrap();
            let tr = truncate_weights(&s, level, t).unwrap();
            let zero = truncate_weights(&s, level, 0.0).unwrap();
            let one = truncate_weights(&s, level, 1.0).unwrap();
            for i in 0..ws.len() {
                let w = tr.edge_weights[i];
                prop_assert!(w.abs() <= ws[i].abs().max(level) + 1e-12);
                // linear in t
                let lin = zero.edge_weights[i] + t * (one.edge_weights[i] - zero.edge_weights[i]);
                prop_assert!((w - lin).abs() < 1e-12);
            }
            let (m0, _) = zero.empirical_abs_moments(2.0);
            let (m1, _) = s.empirical_abs_moments(2.0);
            prop_assert!(m0 <= m1 + 1e-12);
        }
    }
}
