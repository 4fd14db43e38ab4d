//! Closed-form models: the Laplace sequence with parameter `1/n`, centred
//! normals with variance `1/n`, robust maxima over finitely many such models,
//! and discrete max-plus sequences on arbitrary finite grids.
//!
//! One-dimensional density models integrate the continuum extension of a grid
//! function: linear interpolation inside each half-cell, linear continuation
//! beyond the box with the function's declared tail slopes (else the slope of
//! the outermost grid interval), and `-inf`
//! on the cells of `-inf` grid values. The interior is split into
//! sub-intervals (plus density kinks) on which the exponent is interpolated
//! linearly and integrated exactly; the two tails are integrated in closed
//! form. The same rule applied to `f ≡ 0` normalizes the result, so constants
//! and translations are reproduced to rounding error.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::fmt;
use std::sync::{Arc, Mutex};

use crate::entropy::{Asymptotics, EntropyModel, Shape, SublinearSequence};
use crate::error::{Error, Result};
use crate::extgrid::{ExtendedValue, GridFunction, GridSpace, PointSet, Regularity};
use crate::extgrid::{Finite, NegInf, PosInf};
use crate::numeric::{log1mexp, log_exp_linear, logaddexp, logsumexp, ln_erfc, ln_normal_sf};

/// Sub-intervals per half-cell (so twenty per grid cell).
pub const HALF_CELL_SUBDIVISIONS: usize = 10;

/// Sub-intervals per half-cell at index `n`: at least the base count, and
/// fine enough that the chord error of a log-density with curvature `n` stays
/// below `1e-6` in relative mass.
fn subdivisions(half_width: f64, n: u32) -> usize {
    let needed = (half_width * (n as f64).sqrt() / 0.003).ceil() as usize;
    needed.max(HALF_CELL_SUBDIVISIONS)
}

/// A one-dimensional probability density depending on the index `n`.
trait Density: Send + Sync + fmt::Debug {
    fn name(&self) -> String;

    fn log_density(&self, x: f64, n: u32) -> f64;

    /// Points where the log-density is not smooth.
    fn kinks(&self) -> Vec<f64> {
        Vec::new()
    }

    /// `ln ∫ e^{a0 + slope (x - anchor)} h_n(x) dx` over `[anchor, ∞)` when
    /// `right`, else over `(-∞, anchor]`.
    fn log_tail(&self, anchor: f64, right: bool, a0: f64, slope: f64, n: u32) -> ExtendedValue;

    /// `ln μ_n([u, v])`; `u` may be `-inf` and `v` may be `+inf`.
    fn log_interval_mass(&self, u: f64, v: f64, n: u32) -> f64;

    fn closed_form(&self, shape: &Shape) -> Option<ExtendedValue>;
}

#[derive(Debug, Clone, Copy)]
struct Laplace;

impl Density for Laplace {
    fn name(&self) -> String {
        "laplace".into()
    }

    fn log_density(&self, x: f64, n: u32) -> f64 {
        let n = n as f64;
        (n / 2.0).ln() - n * x.abs()
    }

    fn kinks(&self) -> Vec<f64> {
        vec![0.0]
    }

    fn log_tail(&self, anchor: f64, right: bool, a0: f64, slope: f64, n: u32) -> ExtendedValue {
        let n = n as f64;
        // anchor lies on the far side of the origin, so the density is a
        // single exponential on the tail.
        let rate = if right { n - slope } else { n + slope };
        if rate <= 0.0 {
            return PosInf;
        }
        Finite((n / 2.0).ln() + a0 - n * anchor.abs() - rate.ln())
    }

    fn log_interval_mass(&self, u: f64, v: f64, n: u32) -> f64 {
        let n = n as f64;
        if u >= v {
            return f64::NEG_INFINITY;
        }
        if u >= 0.0 {
            // ½ e^{-nu} (1 - e^{-n(v-u)})
            (0.5f64).ln() - n * u + if v.is_finite() { log1mexp(n * (v - u)) } else { 0.0 }
        } else if v <= 0.0 {
            (0.5f64).ln() + n * v + if u.is_finite() { log1mexp(n * (v - u)) } else { 0.0 }
        } else {
            let left = if u.is_finite() { 0.5 * (n * u).exp() } else { 0.0 };
            let right = if v.is_finite() { 0.5 * (-n * v).exp() } else { 0.0 };
            (1.0 - left - right).ln()
        }
    }

    fn closed_form(&self, shape: &Shape) -> Option<ExtendedValue> {
        match shape {
            Shape::Constant(c) => Some(Finite(*c)),
            Shape::Linear(y) if y.len() == 1 => Some(if y[0].abs() < 1.0 { Finite(0.0) } else { PosInf }),
            // sup_x { |a| - 2|x - a| - |x| } = 0, attained at x = a.
            Shape::InvertedV(a) if a.len() == 1 => Some(Finite(0.0)),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Gaussian {
    mean: f64,
}

impl Density for Gaussian {
    fn name(&self) -> String {
        format!("gaussian({})", self.mean)
    }

    fn log_density(&self, x: f64, n: u32) -> f64 {
        let n = n as f64;
        let d = x - self.mean;
        0.5 * (n / (2.0 * PI)).ln() - 0.5 * n * d * d
    }

    fn log_tail(&self, anchor: f64, right: bool, a0: f64, slope: f64, n: u32) -> ExtendedValue {
        // Completing the square: the exponent peaks at t* = mean + slope/n.
        let nf = n as f64;
        let peak = self.mean + slope / nf;
        let base = a0 + slope * (self.mean - anchor) + slope * slope / (2.0 * nf) + (0.5f64).ln();
        let z = (anchor - peak) * (nf / 2.0).sqrt();
        Finite(base + if right { ln_erfc(z) } else { ln_erfc(-z) })
    }

    fn log_interval_mass(&self, u: f64, v: f64, n: u32) -> f64 {
        if u >= v {
            return f64::NEG_INFINITY;
        }
        let s = (n as f64).sqrt();
        let zu = (u - self.mean) * s;
        let zv = (v - self.mean) * s;
        if zu >= 0.0 {
            let a = ln_normal_sf(zu);
            let b = ln_normal_sf(zv);
            a + log1mexp(a - b)
        } else if zv <= 0.0 {
            let a = ln_normal_sf(-zv);
            let b = ln_normal_sf(-zu);
            a + log1mexp(a - b)
        } else {
            (1.0 - ln_normal_sf(-zu).exp() - ln_normal_sf(zv).exp()).ln()
        }
    }

    fn closed_form(&self, shape: &Shape) -> Option<ExtendedValue> {
        match shape {
            Shape::Constant(c) => Some(Finite(*c)),
            Shape::Linear(y) if y.len() == 1 => Some(Finite(y[0] * self.mean + 0.5 * y[0] * y[0])),
            Shape::InvertedV(a) if a.len() == 1 => {
                // sup_u { -2|u - b| - u²/2 } with b = a - mean
                let b = a[0] - self.mean;
                let inner = if b.abs() <= 2.0 { -0.5 * b * b } else { 2.0 - 2.0 * b.abs() };
                Some(Finite(a[0].abs() + inner))
            }
            _ => None,
        }
    }
}

/// Entropy model backed by a one-dimensional density sequence.
pub struct DensityModel {
    density: Box<dyn Density>,
    space: GridSpace,
    normalizers: Mutex<HashMap<u32, f64>>,
}

impl fmt::Debug for DensityModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("DensityModel")
            .field("density", &self.density)
            .field("space", &self.space)
            .finish()
    }
}

impl DensityModel {
    fn new(density: Box<dyn Density>, space: &GridSpace) -> Result<Self> {
        if space.dim() != 1 {
            return Err(Error::Dimension(space.dim()));
        }
        let model = Self {
            density,
            space: space.clone(),
            normalizers: Mutex::new(HashMap::new()),
        };
        // The raw quadrature of the density itself must be close to one.
        for n in [1, 16, 256] {
            let mass = model.raw_log_integral(&GridFunction::constant(space, 0.0), n)?;
            let mass = mass.to_f64().exp();
            if (mass - 1.0).abs() > 1e-6 {
                return Err(Error::Numeric(format!(
                    "{} density integrates to {mass} at n = {n}",
                    model.density.name()
                )));
            }
        }
        Ok(model)
    }

    fn normalizer(&self, n: u32) -> Result<f64> {
        if let Some(v) = self.normalizers.lock().unwrap().get(&n) {
            return Ok(*v);
        }
        let v = self
            .raw_log_integral(&GridFunction::constant(&self.space, 0.0), n)?
            .to_f64();
        self.normalizers.lock().unwrap().insert(n, v);
        Ok(v)
    }

    /// `ln ∫ e^{n f̃(x)} h_n(x) dx` for the continuum extension `f̃`.
    fn raw_log_integral(&self, f: &GridFunction, n: u32) -> Result<ExtendedValue> {
        let len = self.space.len();
        let h = self.space.step()[0];
        let nf = n as f64;
        let xs: Vec<f64> = (0..len).map(|i| self.space.point(i)[0]).collect();
        let vals: Vec<Option<f64>> = f.values().iter().map(|v| v.finite()).collect();
        let kinks = self.density.kinks();
        let mut terms = Vec::with_capacity(len * 2 * HALF_CELL_SUBDIVISIONS + 2);

        let slope_between = |i: usize, j: usize| match (vals[i], vals[j]) {
            (Some(a), Some(b)) => Some((b - a) / (xs[j] - xs[i])),
            _ => None,
        };

        for i in 0..len {
            let Some(fi) = vals[i] else { continue };
            // left half-cell
            if i == 0 {
                let s = match f.tail_slopes() {
                    Some((l, _)) => l,
                    None if len > 1 => slope_between(0, 1).unwrap_or(0.0),
                    None => 0.0,
                };
                match self.density.log_tail(xs[0], false, nf * fi, nf * s, n) {
                    PosInf => return Ok(PosInf),
                    Finite(t) => terms.push(t),
                    NegInf => {}
                }
            } else {
                let s = slope_between(i - 1, i).unwrap_or(0.0);
                self.push_piece(&mut terms, xs[i] - h / 2.0, xs[i], xs[i], fi, s, n, &kinks);
            }
            // right half-cell
            if i + 1 == len {
                let s = match f.tail_slopes() {
                    Some((_, r)) => r,
                    None if len > 1 => slope_between(len - 2, len - 1).unwrap_or(0.0),
                    None => 0.0,
                };
                match self.density.log_tail(xs[i], true, nf * fi, nf * s, n) {
                    PosInf => return Ok(PosInf),
                    Finite(t) => terms.push(t),
                    NegInf => {}
                }
            } else {
                let s = slope_between(i, i + 1).unwrap_or(0.0);
                self.push_piece(&mut terms, xs[i], xs[i] + h / 2.0, xs[i], fi, s, n, &kinks);
            }
        }
        let total = logsumexp(&terms);
        ExtendedValue::from_f64(total)
    }

    /// Integrates `e^{n(f0 + s(x - x0))} h_n(x)` over `[a, b]`.
    #[allow(clippy::too_many_arguments)]
    fn push_piece(&self, terms: &mut Vec<f64>, a: f64, b: f64, x0: f64, f0: f64, s: f64, n: u32, kinks: &[f64]) {
        let nf = n as f64;
        let pieces = subdivisions(b - a, n);
        let mut breaks: Vec<f64> = Vec::with_capacity(pieces + 1 + kinks.len());
        for k in 0..=pieces {
            breaks.push(a + (b - a) * k as f64 / pieces as f64);
        }
        breaks.extend(kinks.iter().copied().filter(|&k| k > a && k < b));
        breaks.sort_by(f64::total_cmp);
        let g = |x: f64| nf * (f0 + s * (x - x0)) + self.density.log_density(x, n);
        let mut ga = g(breaks[0]);
        for w in breaks.windows(2) {
            let gb = g(w[1]);
            terms.push(log_exp_linear(w[1] - w[0], ga, gb));
            ga = gb;
        }
    }

    /// Maximal runs of consecutive grid indices as cell intervals.
    fn runs(&self, set: &PointSet) -> Vec<(f64, f64)> {
        let len = self.space.len();
        let h = self.space.step()[0];
        let mut out = Vec::new();
        let mut i = 0;
        while i < len {
            if !set.contains(i) {
                i += 1;
                continue;
            }
            let start = i;
            while i + 1 < len && set.contains(i + 1) {
                i += 1;
            }
            let u = if start == 0 { f64::NEG_INFINITY } else { self.space.point(start)[0] - h / 2.0 };
            let v = if i + 1 == len { f64::INFINITY } else { self.space.point(i)[0] + h / 2.0 };
            out.push((u, v));
            i += 1;
        }
        out
    }
}

impl SublinearSequence for DensityModel {
    fn id(&self) -> String {
        self.density.name()
    }

    fn space(&self) -> &GridSpace {
        &self.space
    }

    fn entropy_at(&self, f: &GridFunction, n: u32) -> Result<ExtendedValue> {
        let raw = self.raw_log_integral(f, n)?;
        Ok(match raw {
            Finite(v) => Finite((v - self.normalizer(n)?) / n as f64),
            other => other,
        })
    }

    fn supports_capacity(&self) -> bool {
        true
    }

    fn log_capacity(&self, set: &PointSet, n: u32) -> Result<ExtendedValue> {
        if set.len() != self.space.len() {
            return Err(Error::SpaceMismatch);
        }
        let total = self
            .runs(set)
            .into_iter()
            .fold(f64::NEG_INFINITY, |acc, (u, v)| logaddexp(acc, self.density.log_interval_mass(u, v, n)));
        ExtendedValue::from_f64(total.min(0.0))
    }

    fn closed_form(&self, shape: &Shape, _f: &GridFunction) -> Option<ExtendedValue> {
        self.density.closed_form(shape)
    }
}

/// Upper envelope `max_i E_n^{(i)}` of finitely many models on one space.
#[derive(Debug)]
pub struct RobustModel {
    components: Vec<Arc<dyn SublinearSequence>>,
}

impl SublinearSequence for RobustModel {
    fn id(&self) -> String {
        let ids: Vec<String> = self.components.iter().map(|c| c.id()).collect();
        format!("robust:{}", ids.join(","))
    }

    fn space(&self) -> &GridSpace {
        self.components[0].space()
    }

    fn entropy_at(&self, f: &GridFunction, n: u32) -> Result<ExtendedValue> {
        let mut best = NegInf;
        for c in &self.components {
            best = best.max(c.entropy_at(f, n)?);
        }
        Ok(best)
    }

    fn supports_capacity(&self) -> bool {
        self.components.iter().all(|c| c.supports_capacity())
    }

    fn log_capacity(&self, set: &PointSet, n: u32) -> Result<ExtendedValue> {
        let mut best = NegInf;
        for c in &self.components {
            best = best.max(c.log_capacity(set, n)?);
        }
        Ok(best)
    }

    fn closed_form(&self, shape: &Shape, f: &GridFunction) -> Option<ExtendedValue> {
        let mut best = NegInf;
        for c in &self.components {
            best = best.max(c.closed_form(shape, f)?);
        }
        Some(best)
    }
}

/// `E_n(g) = Σ_x p_n(x) g(x)` with `p_n ∝ e^{n j}` on a finite grid.
/// Its asymptotic entropy is `max (f + j)` for every `f`.
#[derive(Debug)]
pub struct DiscreteModel {
    density: GridFunction,
}

impl DiscreteModel {
    fn log_weighted_sum(&self, f: &GridFunction, keep: Option<&PointSet>, n: u32) -> f64 {
        let nf = n as f64;
        let terms: Vec<f64> = self
            .density
            .values()
            .iter()
            .zip(f.values())
            .enumerate()
            .filter(|(i, _)| keep.is_none_or(|s| s.contains(*i)))
            .map(|(_, (j, v))| nf * (j.to_f64() + v.to_f64()))
            .map(|t| if t.is_nan() { f64::NEG_INFINITY } else { t })
            .collect();
        logsumexp(&terms)
    }
}

impl SublinearSequence for DiscreteModel {
    fn id(&self) -> String {
        "discrete".into()
    }

    fn space(&self) -> &GridSpace {
        self.density.space()
    }

    fn entropy_at(&self, f: &GridFunction, n: u32) -> Result<ExtendedValue> {
        let zero = GridFunction::constant(self.space(), 0.0);
        let norm = self.log_weighted_sum(&zero, None, n);
        let v = self.log_weighted_sum(f, None, n);
        ExtendedValue::from_f64((v - norm) / n as f64)
    }

    fn supports_capacity(&self) -> bool {
        true
    }

    fn log_capacity(&self, set: &PointSet, n: u32) -> Result<ExtendedValue> {
        let zero = GridFunction::constant(self.space(), 0.0);
        let norm = self.log_weighted_sum(&zero, None, n);
        ExtendedValue::from_f64((self.log_weighted_sum(&zero, Some(set), n) - norm).min(0.0))
    }

    fn closed_form(&self, _shape: &Shape, f: &GridFunction) -> Option<ExtendedValue> {
        self.density
            .values()
            .iter()
            .zip(f.values())
            .map(|(j, v)| j.checked_add(*v).ok())
            .collect::<Option<Vec<_>>>()
            .map(|v| v.into_iter().max().unwrap_or(NegInf))
    }
}

fn check_box(space: &GridSpace, model: &str, lo: f64, hi: f64) -> Result<()> {
    if space.dim() != 1 {
        return Err(Error::Dimension(space.dim()));
    }
    if space.lower()[0] > lo || space.upper()[0] < hi {
        return Err(Error::BoxTooSmall {
            model: model.into(),
            lo,
            hi,
        });
    }
    Ok(())
}

/// `X_n` Laplace with density `(n/2) e^{-n|x|}`; the box must contain `[-3, 3]`.
pub fn laplace_model(space: &GridSpace, asymptotics: Asymptotics) -> Result<EntropyModel> {
    check_box(space, "laplace", -3.0, 3.0)?;
    EntropyModel::new(Arc::new(DensityModel::new(Box::new(Laplace), space)?), asymptotics)
}

/// `X_n` normal with mean 0 and variance `1/n`.
pub fn gaussian_model(space: &GridSpace, asymptotics: Asymptotics) -> Result<EntropyModel> {
    shifted_gaussian_model(space, 0.0, asymptotics)
}

pub fn shifted_gaussian_model(space: &GridSpace, mean: f64, asymptotics: Asymptotics) -> Result<EntropyModel> {
    EntropyModel::new(gaussian_sequence(space, mean)?, asymptotics)
}

fn gaussian_sequence(space: &GridSpace, mean: f64) -> Result<Arc<dyn SublinearSequence>> {
    Ok(Arc::new(DensityModel::new(Box::new(Gaussian { mean }), space)?))
}

/// Sublinear model `max_i E_n^{(i)}` over at least two components.
pub fn robust_model(components: &[EntropyModel], asymptotics: Asymptotics) -> Result<EntropyModel> {
    if components.len() < 2 {
        return Err(Error::Precondition("robust model needs at least two components".into()));
    }
    let space = components[0].space();
    if components.iter().any(|c| c.space() != space) {
        return Err(Error::SpaceMismatch);
    }
    let components = components.iter().map(|c| c.sequence().clone()).collect();
    EntropyModel::new(Arc::new(RobustModel { components }), asymptotics)
}

/// Discrete model with max-plus density `j` (values in `[-inf, 0]`, max 0).
pub fn discrete_model(density: GridFunction, asymptotics: Asymptotics) -> Result<EntropyModel> {
    if density.max_value() != Finite(0.0) || density.values().iter().any(|v| *v > Finite(0.0)) {
        return Err(Error::Precondition("max-plus density must lie in [-inf, 0] with maximum 0".into()));
    }
    let density = density.with_regularity(Regularity::Measurable);
    EntropyModel::new(Arc::new(DiscreteModel { density }), asymptotics)
}

pub fn default_space(model_id: &str) -> Result<GridSpace> {
    let (lo, hi, n) = match model_id.trim() {
        "laplace" => (-3.0, 3.0, 601),
        "gaussian" => (-4.0, 4.0, 801),
        id if id.starts_with("gaussian(") || id.starts_with("robust:") => (-4.0, 4.0, 801),
        other => return Err(Error::Parse(format!("unknown model `{other}`"))),
    };
    GridSpace::interval(lo, hi, n)
}

/// Builds a model from its id: `laplace`, `gaussian`, `gaussian(m)` or
/// `robust:gaussian(-1),gaussian(+1)`.
pub fn model_from_id(id: &str, space: &GridSpace, asymptotics: Asymptotics) -> Result<EntropyModel> {
    let id = id.trim();
    if let Some(rest) = id.strip_prefix("robust:") {
        let parts: Vec<&str> = split_top_level(rest);
        let comps = parts
            .iter()
            .map(|p| model_from_id(p, space, asymptotics.clone()))
            .collect::<Result<Vec<_>>>()?;
        return robust_model(&comps, asymptotics);
    }
    if id == "laplace" {
        return laplace_model(space, asymptotics);
    }
    if id == "gaussian" {
        return gaussian_model(space, asymptotics);
    }
    if let Some(arg) = id.strip_prefix("gaussian(").and_then(|r| r.strip_suffix(')')) {
        let mean: f64 = arg
            .trim()
            .trim_start_matches('+')
            .parse()
            .map_err(|_| Error::Parse(format!("bad gaussian mean `{arg}`")))?;
        return shifted_gaussian_model(space, mean, asymptotics);
    }
    Err(Error::Parse(format!("unknown model `{id}`")))
}

fn split_top_level(s: &str) -> Vec<&str> {
    let mut out = Vec::new();
    let mut depth = 0i32;
    let mut start = 0;
    for (i, c) in s.char_indices() {
        match c {
            '(' => depth += 1,
            ')' => depth -= 1,
            ',' if depth == 0 => {
                out.push(s[start..i].trim());
                start = i + 1;
            }
            _ => {}
        }
    }
    out.push(s[start..].trim());
    out
}
