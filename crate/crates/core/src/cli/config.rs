//! Experiment configuration: one JSON object, complex numbers as `[re, im]`,
//! polynomials as ascending coefficient arrays.

use std::collections::BTreeMap;

use clap::Subcommand;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::grid::{GridSpec, Rect};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize, Subcommand)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    /// Solve (f^n)^(k)(z) = λ with multiplicity.
    ///
    /// Checks that the solutions number d^n - k counted with multiplicity,
    /// for every λ, and writes the root cloud.
    PhaseRoots,
    /// Potentials of the root measures against the Green function.
    ///
    /// The normalized potential (log|(f^n)^(k) - λ| - log|L|) / (d^n - k)
    /// converges to the Green function of f locally uniformly on the escaping
    /// region; reports the sup error per n and the rate constant sup·d^n/n.
    PhasePotential,
    /// Average of the first-derivative potentials over λ in a disk.
    ///
    /// Averaging the λ-potentials over a measure with bounded potential
    /// removes the exceptional λ and converges to the Green function.
    PbAverage,
    /// Root measure against backward-orbit sampling of the equilibrium measure.
    ///
    /// Both measures converge weakly to the equilibrium measure of f;
    /// compares their pairings with a 5x5 family of smooth bumps.
    Brolin,
    /// Fate of every critical point of f.
    ///
    /// Certifies hyperbolicity (every critical orbit escapes or is attracted
    /// by a cycle of multiplier below 1) and never guesses on the boundary.
    Classify,
    /// Solve (p_c^n)'(c) = λ(c) in the quadratic family.
    ///
    /// The parameter solutions, weighted 2^-n each, have total mass
    /// (2^n - 1) / 2^n.
    ParamRoots,
    /// Parameter potential against the Green function of the Mandelbrot set.
    ///
    /// 2^-n log|(p_c^n)'(c) - λ(c)| converges to g_M outside the Mandelbrot
    /// set, so the parameter measures converge to its harmonic measure.
    ParamPotential,
    /// Escape-rate constant for 2^-n log|p_c^n(c)| - g_M(c).
    ///
    /// The error is at most C n / 2^n with C universal; reports the empirical
    /// constant per n over sampled escaping parameters.
    EscapeEstimate,
    /// Marked critical value potential on a line in the cubic family.
    ///
    /// Measures whether 3^-n log|(P^n)'(P(c_i)) - λ| tends to the Green
    /// function at the critical point or at the critical value.
    CubicSlice,
    /// Intersection counts behind the tangent-map degree identity.
    ///
    /// For F(z, u) = (f(z), f'(z) u), the pullback of a horizontal line
    /// meets a fiber once and another horizontal line in d^n - 1 points.
    Cohomology,
    /// Exact case f = z^d.
    ///
    /// All solutions of (f^n)'(z) = λ lie on one circle, equally spaced.
    PowerCheck,
    /// Closest approach of root orbits to the critical set.
    ///
    /// Descriptive: roots stay near the Julia set for a while, then their
    /// orbits are ejected, passing close to a critical point.
    OrbitProfile,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::PhaseRoots => "phase-roots",
            ExperimentKind::PhasePotential => "phase-potential",
            ExperimentKind::PbAverage => "pb-average",
            ExperimentKind::Brolin => "brolin",
            ExperimentKind::Classify => "classify",
            ExperimentKind::ParamRoots => "param-roots",
            ExperimentKind::ParamPotential => "param-potential",
            ExperimentKind::EscapeEstimate => "escape-estimate",
            ExperimentKind::CubicSlice => "cubic-slice",
            ExperimentKind::Cohomology => "cohomology",
            ExperimentKind::PowerCheck => "power-check",
            ExperimentKind::OrbitProfile => "orbit-profile",
        }
    }

    /// Experiments drawing random samples; these need a seed.
    pub fn is_sampled(self) -> bool {
        matches!(
            self,
            ExperimentKind::PbAverage | ExperimentKind::Brolin | ExperimentKind::EscapeEstimate
        )
    }

    /// Config keys the experiment reads, besides `experiment`, `thresholds`,
    /// `seed`, `image` and `output`.
    pub fn fields(self) -> &'static [&'static str] {
        match self {
            ExperimentKind::PhaseRoots => &["poly", "n", "k", "lambda", "search"],
            ExperimentKind::PhasePotential => &["poly", "ns", "k", "lambda", "grid", "mask_green"],
            ExperimentKind::PbAverage => &["poly", "n", "radius", "samples", "grid", "mask_green"],
            ExperimentKind::Brolin => &["poly", "n", "k", "lambda", "depth", "count", "rect"],
            ExperimentKind::Classify => &["poly", "budget"],
            ExperimentKind::ParamRoots => &["n", "lambda_poly"],
            ExperimentKind::ParamPotential => &["n", "lambda_poly", "grid", "mask_green"],
            ExperimentKind::EscapeEstimate => &["samples", "rect", "ns", "mask_green"],
            ExperimentKind::CubicSlice => &["slice", "n", "lambda", "grid", "mask_green"],
            ExperimentKind::Cohomology => &["poly", "n", "u0", "z0", "u1"],
            ExperimentKind::PowerCheck => &["d", "n", "lambda"],
            ExperimentKind::OrbitProfile => &["poly", "n", "k", "lambda", "horizon"],
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    /// `[re_min, re_max, im_min, im_max]`.
    pub rect: [f64; 4],
    pub nx: usize,
    pub ny: usize,
}

impl GridConfig {
    pub fn spec(&self) -> GridSpec {
        GridSpec::new(rect(self.rect), self.nx, self.ny)
    }
}

pub fn rect(r: [f64; 4]) -> Rect {
    Rect::new(r[0], r[1], r[2], r[3])
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SearchConfig {
    pub center: Complex64,
    pub half_width: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SliceConfig {
    /// `(c, a)` at the slice origin.
    pub base: [Complex64; 2],
    pub direction: [Complex64; 2],
    pub critical_index: usize,
}

/// Linear grayscale ramp; unset ends default to the field range.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ImageConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub min: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max: Option<f64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub experiment: Option<ExperimentKind>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub poly: Option<Vec<Complex64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ns: Option<Vec<u32>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<Complex64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda_poly: Option<Vec<Complex64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub z0: Option<Complex64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub u0: Option<Complex64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub u1: Option<Complex64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub search: Option<SearchConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rect: Option<[f64; 4]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mask_green: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub radius: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub samples: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub depth: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub count: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub horizon: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub budget: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub slice: Option<SliceConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub image: Option<ImageConfig>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub thresholds: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<String>,
}

fn cx(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn real_poly(coeffs: &[f64]) -> Option<Vec<Complex64>> {
    Some(coeffs.iter().map(|&a| cx(a, 0.0)).collect())
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self, String> {
        serde_json::from_str(text).map_err(|e| format!("config: {e}"))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// Parameters used when the config leaves a field out.
    pub fn defaults(kind: ExperimentKind) -> Self {
        let square = |h: f64, res: usize| GridConfig {
            rect: [-h, h, -h, h],
            nx: res,
            ny: res,
        };
        let basilica = real_poly(&[-1.0, 0.0, 1.0]);
        let mut c = ExperimentConfig {
            experiment: Some(kind),
            ..Default::default()
        };
        match kind {
            ExperimentKind::PhaseRoots => {
                c.poly = real_poly(&[0.0, 0.0, 1.0]);
                c.n = Some(3);
                c.k = Some(1);
                c.lambda = Some(cx(8.0, 0.0));
            }
            ExperimentKind::PhasePotential => {
                c.poly = basilica;
                c.ns = Some(vec![6, 8, 10, 12]);
                c.k = Some(1);
                c.lambda = Some(cx(1.0, 0.0));
                c.grid = Some(square(2.0, 128));
                c.mask_green = Some(0.1);
            }
            ExperimentKind::PbAverage => {
                c.poly = basilica;
                c.n = Some(10);
                c.radius = Some(1.0);
                c.samples = Some(500);
                c.grid = Some(square(2.0, 128));
                c.mask_green = Some(0.1);
            }
            ExperimentKind::Brolin => {
                c.poly = basilica;
                c.n = Some(10);
                c.k = Some(1);
                c.lambda = Some(cx(1.0, 0.0));
                c.depth = Some(30);
                c.count = Some(100_000);
                c.rect = Some([-1.7, 1.7, -0.8, 0.8]);
            }
            ExperimentKind::Classify => {
                c.poly = basilica;
                c.budget = Some(crate::dynamics::DEFAULT_GREEN_BUDGET);
            }
            ExperimentKind::ParamRoots => {
                c.n = Some(8);
                c.lambda_poly = real_poly(&[1.0]);
            }
            ExperimentKind::ParamPotential => {
                c.n = Some(12);
                c.lambda_poly = real_poly(&[1.0]);
                c.grid = Some(GridConfig {
                    rect: [-2.5, 1.5, -2.0, 2.0],
                    nx: 128,
                    ny: 128,
                });
                c.mask_green = Some(0.1);
            }
            ExperimentKind::EscapeEstimate => {
                c.samples = Some(50);
                c.rect = Some([-2.5, 1.5, -2.0, 2.0]);
                c.ns = Some((5..=12).collect());
                c.mask_green = Some(0.05);
            }
            ExperimentKind::CubicSlice => {
                c.slice = Some(SliceConfig {
                    base: [cx(3.0, 0.0), cx(1.2, 0.3)],
                    direction: [cx(0.5, 0.0), cx(0.0, 0.2)],
                    critical_index: 1,
                });
                c.n = Some(10);
                c.lambda = Some(cx(1.0, 0.0));
                c.grid = Some(square(1.0, 64));
                c.mask_green = Some(0.05);
            }
            ExperimentKind::Cohomology => {
                c.poly = real_poly(&[1.0, 0.0, 1.0]);
                c.n = Some(2);
                c.u0 = Some(cx(1.0, 0.0));
                c.z0 = Some(cx(1.0, 0.0));
                c.u1 = Some(cx(0.5, 0.0));
            }
            ExperimentKind::PowerCheck => {
                c.d = Some(2);
                c.n = Some(3);
                c.lambda = Some(cx(8.0, 0.0));
            }
            ExperimentKind::OrbitProfile => {
                c.poly = basilica;
                c.n = Some(10);
                c.k = Some(1);
                c.lambda = Some(cx(1.0, 0.0));
                c.horizon = Some(50);
            }
        }
        c
    }

    /// Keys set in this config that `kind` does not read.
    pub fn unused_fields(&self, kind: ExperimentKind) -> Vec<String> {
        let always = ["experiment", "thresholds", "seed", "image", "output"];
        let value = serde_json::to_value(self).expect("config serializes");
        value
            .as_object()
            .map(|m| {
                m.keys()
                    .filter(|k| !always.contains(&k.as_str()) && !kind.fields().contains(&k.as_str()))
                    .cloned()
                    .collect()
            })
            .unwrap_or_default()
    }

    /// Fills every field left unset from `defaults(kind)`. Fields outside
    /// `kind`'s key list, a mismatched `experiment`, and a missing seed for a
    /// sampled experiment are errors naming the field.
    pub fn resolve(self, kind: ExperimentKind) -> Result<Self, String> {
        if let Some(k) = self.experiment {
            if k != kind {
                return Err(format!(
                    "config field `experiment` is {} but the subcommand is {}",
                    k.name(),
                    kind.name()
                ));
            }
        }
        let unused = self.unused_fields(kind);
        if !unused.is_empty() {
            return Err(format!(
                "config field(s) {} not used by {}",
                unused.iter().map(|k| format!("`{k}`")).collect::<Vec<_>>().join(", "),
                kind.name()
            ));
        }
        if kind.is_sampled() && self.seed.is_none() {
            return Err(format!(
                "config field `seed` is required for {} (or pass --seed)",
                kind.name()
            ));
        }
        let d = Self::defaults(kind);
        Ok(ExperimentConfig {
            experiment: Some(kind),
            poly: self.poly.or(d.poly),
            d: self.d.or(d.d),
            n: self.n.or(d.n),
            ns: self.ns.or(d.ns),
            k: self.k.or(d.k),
            lambda: self.lambda.or(d.lambda),
            lambda_poly: self.lambda_poly.or(d.lambda_poly),
            z0: self.z0.or(d.z0),
            u0: self.u0.or(d.u0),
            u1: self.u1.or(d.u1),
            grid: self.grid.or(d.grid),
            search: self.search.or(d.search),
            rect: self.rect.or(d.rect),
            mask_green: self.mask_green.or(d.mask_green),
            radius: self.radius.or(d.radius),
            samples: self.samples.or(d.samples),
            depth: self.depth.or(d.depth),
            count: self.count.or(d.count),
            horizon: self.horizon.or(d.horizon),
            budget: self.budget.or(d.budget),
            slice: self.slice.or(d.slice),
            image: self.image,
            thresholds: self.thresholds,
            seed: self.seed,
            output: self.output,
        })
    }
}
