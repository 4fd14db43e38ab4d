//! Testing families, the conjugate rate `ψ*_H(x) = sup_{f∈H} { f(x) - ψ(f) }`,
//! exposed points and the richness condition.
//!
//! Exposedness is only certified against grid points; reports carry the
//! label [`GRID_CERTIFIED`].

use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cvxint::{RateField, RateProvenance};
use crate::entropy::{EntropyModel, EntropyRoute, Shape};
use crate::error::{Error, Result};
use crate::extgrid::{check_same_space, lattice_ball_at, ExtendedValue, GridFunction, GridSpace, PointSet, Regularity};
use crate::extgrid::{Finite, NegInf, PosInf};

pub const GRID_CERTIFIED: &str = "grid-certified";

/// Gaps at or below this are treated as ties, not strict separation.
pub const STRICT_EPS: f64 = 1e-10;

pub const DEFAULT_MARGIN: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FamilyKind {
    Linear,
    InvertedV,
    Custom,
}

/// A finite family of real-valued test functions on a grid, indexed by
/// parameter vectors in lexicographic order.
#[derive(Debug, Clone)]
pub struct TestingFamily {
    kind: FamilyKind,
    space: GridSpace,
    params: Vec<Vec<f64>>,
    /// Only populated for custom families.
    table: Vec<Vec<f64>>,
    offset: f64,
    spec: String,
}

fn parameter_range(lo: f64, hi: f64, step: f64) -> Result<Vec<f64>> {
    if !(lo.is_finite() && hi.is_finite() && step.is_finite()) || step <= 0.0 || hi < lo {
        return Err(Error::Parse(format!("bad parameter range {lo},{hi},{step}")));
    }
    let count = ((hi - lo) / step + 1e-9).floor() as usize + 1;
    // Rounding to 12 decimals keeps values like -0.95 + 19·0.05 at exactly 0.
    Ok((0..count)
        .map(|i| {
            let v = lo + i as f64 * step;
            let r = (v * 1e12).round() / 1e12;
            if r == 0.0 {
                0.0
            } else {
                r
            }
        })
        .collect())
}

fn product(axis: &[f64], dim: usize) -> Vec<Vec<f64>> {
    let mut out: Vec<Vec<f64>> = vec![Vec::new()];
    for _ in 0..dim {
        out = out
            .into_iter()
            .flat_map(|prefix| {
                axis.iter().map(move |&v| {
                    let mut p = prefix.clone();
                    p.push(v);
                    p
                })
            })
            .collect();
    }
    out
}

fn lex_cmp(a: &[f64], b: &[f64]) -> std::cmp::Ordering {
    for (x, y) in a.iter().zip(b) {
        match x.total_cmp(y) {
            std::cmp::Ordering::Equal => continue,
            other => return other,
        }
    }
    a.len().cmp(&b.len())
}

fn norm(v: impl Iterator<Item = f64>) -> f64 {
    v.map(|t| t * t).sum::<f64>().sqrt()
}

impl TestingFamily {
    /// `x ↦ <y, x>` for `y` on a product grid with the given per-axis range.
    pub fn linear(space: &GridSpace, lo: f64, hi: f64, step: f64) -> Result<Self> {
        let params = product(&parameter_range(lo, hi, step)?, space.dim());
        Ok(Self {
            kind: FamilyKind::Linear,
            space: space.clone(),
            params,
            table: Vec::new(),
            offset: 0.0,
            spec: format!("linear:{lo},{hi},{step}"),
        })
    }

    /// `x ↦ |a| - 2|x - a|` for `a` on a product grid.
    pub fn inverted_v(space: &GridSpace, lo: f64, hi: f64, step: f64) -> Result<Self> {
        let params = product(&parameter_range(lo, hi, step)?, space.dim());
        Ok(Self {
            kind: FamilyKind::InvertedV,
            space: space.clone(),
            params,
            table: Vec::new(),
            offset: 0.0,
            spec: format!("invv:{lo},{hi},{step}"),
        })
    }

    /// A tabulated family; `values[k]` holds member `k` at every grid point.
    pub fn custom(space: &GridSpace, params: Vec<Vec<f64>>, values: Vec<Vec<f64>>, spec: &str) -> Result<Self> {
        if params.is_empty() {
            return Err(Error::EmptyFamily);
        }
        if params.len() != values.len() {
            return Err(Error::Parse(format!("{} parameters but {} members", params.len(), values.len())));
        }
        let width = params[0].len();
        for (p, v) in params.iter().zip(&values) {
            if p.len() != width {
                return Err(Error::Parse("parameters of differing length".into()));
            }
            if v.len() != space.len() {
                return Err(Error::InvalidGrid(format!("member has {} values for {} points", v.len(), space.len())));
            }
            if v.iter().any(|t| !t.is_finite()) {
                return Err(Error::Parse(format!("member {p:?} is not finite on the grid")));
            }
        }
        let mut order: Vec<usize> = (0..params.len()).collect();
        order.sort_by(|&a, &b| lex_cmp(&params[a], &params[b]));
        if order.windows(2).any(|w| lex_cmp(&params[w[0]], &params[w[1]]).is_eq()) {
            return Err(Error::Parse("duplicate family parameter".into()));
        }
        Ok(Self {
            kind: FamilyKind::Custom,
            space: space.clone(),
            params: order.iter().map(|&k| params[k].clone()).collect(),
            table: order.iter().map(|&k| values[k].clone()).collect(),
            offset: 0.0,
            spec: spec.to_string(),
        })
    }

    /// Long-format CSV `p_1..p_k,x_1..x_d,value` with one row per member and
    /// grid point.
    pub fn read_csv<R: Read>(space: &GridSpace, r: R, spec: &str) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(r);
        let headers = reader.headers()?.clone();
        let d = space.dim();
        let width = headers
            .len()
            .checked_sub(d + 1)
            .filter(|k| *k > 0)
            .ok_or_else(|| Error::Parse(format!("family CSV needs p_.., {d} coordinate and value columns")))?;
        let mut members: BTreeMap<Vec<u64>, (Vec<f64>, Vec<Option<f64>>)> = BTreeMap::new();
        for (line, rec) in reader.records().enumerate() {
            let rec = rec?;
            let nums = rec
                .iter()
                .map(|s| s.parse::<f64>().map_err(|_| Error::Parse(format!("row {}: bad number {s:?}", line + 2))))
                .collect::<Result<Vec<f64>>>()?;
            if nums.len() != width + d + 1 {
                return Err(Error::Parse(format!("row {} has {} fields", line + 2, nums.len())));
            }
            let p = nums[..width].to_vec();
            let idx = space.index_of(&nums[width..width + d])?;
            let key: Vec<u64> = p.iter().map(|v| v.to_bits()).collect();
            let entry = members.entry(key).or_insert_with(|| (p, vec![None; space.len()]));
            if entry.1[idx].replace(nums[width + d]).is_some() {
                return Err(Error::Parse(format!("row {}: duplicate grid point", line + 2)));
            }
        }
        let mut params = Vec::new();
        let mut values = Vec::new();
        for (_, (p, vals)) in members {
            let vals = vals
                .into_iter()
                .collect::<Option<Vec<f64>>>()
                .ok_or_else(|| Error::Parse(format!("member {p:?} does not cover the grid")))?;
            params.push(p);
            values.push(vals);
        }
        Self::custom(space, params, values, spec)
    }

    /// Parses `linear:lo,hi,step`, `invv:lo,hi,step` or `custom:<file>`.
    pub fn parse(spec: &str, space: &GridSpace) -> Result<Self> {
        let (kind, rest) = spec
            .split_once(':')
            .ok_or_else(|| Error::Parse(format!("family spec {spec:?} lacks a kind prefix")))?;
        let range = || -> Result<(f64, f64, f64)> {
            let v = rest
                .split(',')
                .map(|s| s.trim().parse::<f64>().map_err(|_| Error::Parse(format!("bad number {s:?} in {spec:?}"))))
                .collect::<Result<Vec<f64>>>()?;
            match v.as_slice() {
                [a, b, c] => Ok((*a, *b, *c)),
                _ => Err(Error::Parse(format!("{spec:?} needs three numbers"))),
            }
        };
        match kind {
            "linear" => {
                let (a, b, c) = range()?;
                Self::linear(space, a, b, c)
            }
            "invv" => {
                let (a, b, c) = range()?;
                Self::inverted_v(space, a, b, c)
            }
            "custom" => {
                let file = std::fs::File::open(Path::new(rest))?;
                Self::read_csv(space, file, spec)
            }
            other => Err(Error::Parse(format!("unknown family kind {other:?}"))),
        }
    }

    /// The same family with every member shifted by `c`.
    pub fn shifted(&self, c: f64) -> Self {
        let mut out = self.clone();
        out.offset += c;
        out.spec = format!("{}+{}", self.spec, out.offset);
        out
    }

    pub fn kind(&self) -> FamilyKind {
        self.kind
    }

    pub fn space(&self) -> &GridSpace {
        &self.space
    }

    pub fn spec(&self) -> &str {
        &self.spec
    }

    pub fn len(&self) -> usize {
        self.params.len()
    }

    pub fn is_empty(&self) -> bool {
        self.params.is_empty()
    }

    pub fn params(&self) -> &[Vec<f64>] {
        &self.params
    }

    pub fn offset(&self) -> f64 {
        self.offset
    }

    pub fn eval(&self, k: usize, i: usize) -> f64 {
        self.eval_at(k, i, &self.space.point(i))
    }

    fn eval_at(&self, k: usize, i: usize, x: &[f64]) -> f64 {
        let p = &self.params[k];
        let base = match self.kind {
            FamilyKind::Linear => p.iter().zip(x).map(|(a, b)| a * b).sum(),
            FamilyKind::InvertedV => norm(p.iter().copied()) - 2.0 * norm(x.iter().zip(p).map(|(a, b)| a - b)),
            FamilyKind::Custom => self.table[k][i],
        };
        base + self.offset
    }

    /// Member values as a `members × points` matrix.
    pub fn matrix(&self) -> Vec<Vec<f64>> {
        let points = self.space.points();
        (0..self.len())
            .into_par_iter()
            .map(|k| points.iter().enumerate().map(|(i, x)| self.eval_at(k, i, x)).collect())
            .collect()
    }

    fn base_member(&self, k: usize) -> GridFunction {
        let points = self.space.points();
        let values = points.iter().enumerate().map(|(i, x)| Finite(self.eval_at(k, i, x) - self.offset)).collect();
        self.with_tails(k, GridFunction::new(self.space.clone(), values, Regularity::Continuous).expect("family members are finite"))
    }

    pub fn member(&self, k: usize) -> GridFunction {
        let points = self.space.points();
        let values = points.iter().enumerate().map(|(i, x)| Finite(self.eval_at(k, i, x))).collect();
        self.with_tails(k, GridFunction::new(self.space.clone(), values, Regularity::Continuous).expect("family members are finite"))
    }

    /// Closed-form continuation of 1-d members beyond the box.
    fn with_tails(&self, k: usize, g: GridFunction) -> GridFunction {
        if self.space.dim() != 1 {
            return g;
        }
        let p = self.params[k][0];
        let (lo, hi) = (self.space.lower()[0], self.space.upper()[0]);
        match self.kind {
            FamilyKind::Linear => g.with_tail_slopes(p, p),
            FamilyKind::InvertedV if (lo..=hi).contains(&p) => g.with_tail_slopes(2.0, -2.0),
            _ => g,
        }
    }

    pub fn shape(&self, k: usize) -> Shape {
        match self.kind {
            FamilyKind::Linear => Shape::Linear(self.params[k].clone()),
            FamilyKind::InvertedV => Shape::InvertedV(self.params[k].clone()),
            FamilyKind::Custom => Shape::Tabulated,
        }
    }

    /// `(lower, upper)` limiting entropy of member `k`; the offset passes
    /// through by translation invariance.
    pub fn member_entropy(&self, model: &EntropyModel, k: usize, route: EntropyRoute) -> Result<(ExtendedValue, ExtendedValue)> {
        let (lo, hi) = model.limit_entropy(&self.shape(k), &self.base_member(k), route)?;
        Ok((lo.add_finite(self.offset), hi.add_finite(self.offset)))
    }

    /// Member index for every grid point, when the family has exactly one
    /// member per grid point.
    pub fn point_index(&self) -> Result<Vec<usize>> {
        let fail = || Error::NotPointIndexed(self.spec.clone());
        if self.len() != self.space.len() {
            return Err(fail());
        }
        let mut out = vec![usize::MAX; self.space.len()];
        for (k, p) in self.params.iter().enumerate() {
            let i = self.space.index_of(p).map_err(|_| fail())?;
            if out[i] != usize::MAX {
                return Err(fail());
            }
            out[i] = k;
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MemberEntropy {
    pub param: Vec<f64>,
    pub lower: ExtendedValue,
    pub upper: ExtendedValue,
}

/// Raw conjugate values with the member entropies that produced them.
#[derive(Debug, Clone)]
pub struct Conjugate {
    pub space: GridSpace,
    /// `sup_k { f_k(x) - ψ̄(f_k) }`, unclamped.
    pub values: Vec<ExtendedValue>,
    pub entropies: Vec<MemberEntropy>,
    /// Members skipped because `ψ̄(f) = +inf`.
    pub skipped: usize,
    /// Attaining member per point (smallest parameter on ties).
    pub argmax: Vec<Option<usize>>,
    pub route: EntropyRoute,
}

impl Conjugate {
    /// The conjugate as a rate field. Values inside `[-tolerance, 0)` are
    /// snapped to 0; anything lower is an error.
    pub fn rate_field(&self, tolerance: f64) -> Result<RateField> {
        let mut values = self.values.clone();
        for (index, v) in values.iter_mut().enumerate() {
            match *v {
                NegInf => return Err(Error::NegInfInRate(index)),
                Finite(x) if x < -tolerance => return Err(Error::NegativeRate { index, value: x }),
                Finite(x) if x < 0.0 => *v = Finite(0.0),
                _ => {}
            }
        }
        RateField::new(self.space.clone(), values, RateProvenance::Conjugate)
    }

    pub fn min_value(&self) -> ExtendedValue {
        self.values.iter().copied().min().unwrap_or(PosInf)
    }
}

/// `ψ̄*_H(x) = sup_{f∈H} { f(x) - ψ̄(f) }` at every grid point.
pub fn conjugate_rate(model: &EntropyModel, family: &TestingFamily, route: EntropyRoute) -> Result<Conjugate> {
    if family.is_empty() {
        return Err(Error::EmptyFamily);
    }
    check_same_space(model.space(), family.space())?;
    let entropies = (0..family.len())
        .into_par_iter()
        .map(|k| {
            let (lower, upper) = family.member_entropy(model, k, route)?;
            Ok(MemberEntropy {
                param: family.params[k].clone(),
                lower,
                upper,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let skipped = entropies.iter().filter(|e| e.upper == PosInf).count();
    let table = family.matrix();
    let (values, argmax): (Vec<ExtendedValue>, Vec<Option<usize>>) = (0..family.space.len())
        .into_par_iter()
        .map(|i| {
            let mut best = NegInf;
            let mut arg = None;
            for (k, e) in entropies.iter().enumerate() {
                let Finite(psi) = e.upper else {
                    // -inf entropy only for the -inf function, which is not a member.
                    continue;
                };
                let v = Finite(table[k][i] - psi);
                if v > best {
                    best = v;
                    arg = Some(k);
                }
            }
            (best, arg)
        })
        .unzip();
    Ok(Conjugate {
        space: family.space.clone(),
        values,
        entropies,
        skipped,
        argmax,
        route,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExposureParams {
    pub margin: f64,
    pub radius: f64,
}

impl ExposureParams {
    pub fn default_for(space: &GridSpace) -> Self {
        Self {
            margin: DEFAULT_MARGIN,
            radius: 2.0 * space.max_step(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExposedSet {
    pub space: GridSpace,
    pub mask: Vec<bool>,
    pub exposing_parameter: Vec<Option<Vec<f64>>>,
    pub nice: Vec<bool>,
    pub params: ExposureParams,
    pub label: String,
}

impl ExposedSet {
    pub fn set(&self) -> PointSet {
        PointSet::from_mask(self.mask.clone())
    }

    pub fn nice_set(&self) -> PointSet {
        PointSet::from_mask(self.mask.iter().zip(&self.nice).map(|(m, n)| *m && *n).collect())
    }

    pub fn count(&self) -> usize {
        self.mask.iter().filter(|m| **m).count()
    }

    /// CSV with columns `x_1..x_d,exposed,nice,param_1..param_k`.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let width = self.exposing_parameter.iter().flatten().map(|p| p.len()).max().unwrap_or(0);
        let mut wtr = csv::Writer::from_writer(w);
        let mut header: Vec<String> = (1..=self.space.dim()).map(|k| format!("x_{k}")).collect();
        header.push("exposed".into());
        header.push("nice".into());
        header.extend((1..=width).map(|k| format!("param_{k}")));
        wtr.write_record(&header)?;
        for i in 0..self.space.len() {
            let mut row: Vec<String> = self.space.point(i).iter().map(|v| v.to_string()).collect();
            row.push(self.mask[i].to_string());
            row.push(self.nice[i].to_string());
            let p = self.exposing_parameter[i].clone().unwrap_or_default();
            row.extend((0..width).map(|k| p.get(k).map(|v| v.to_string()).unwrap_or_default()));
            wtr.write_record(&row)?;
        }
        wtr.flush()?;
        Ok(())
    }
}

/// Whether `row` (one member's values) exposes `x` against `rate`.
fn exposes(space: &GridSpace, row: &[f64], rate: &[ExtendedValue], x: usize, params: ExposureParams) -> bool {
    let Finite(ix) = rate[x] else { return false };
    let base = ix - row[x];
    for y in 0..space.len() {
        if y == x {
            continue;
        }
        let Finite(iy) = rate[y] else { continue };
        let gap = (iy - row[y]) - base;
        if gap <= STRICT_EPS {
            return false;
        }
        if gap < params.margin && space.distance(x, y) >= params.radius * (1.0 - 1e-9) {
            return false;
        }
    }
    true
}

/// Marks `x` exposed when some member `f` makes `y ↦ ψ*(y) - f(y)` strictly
/// minimal at `x` over the grid, with a gap of at least `margin` beyond
/// `radius`. An exposed point is nice when its exposing member has a converged
/// entropy record and passes the growth test.
pub fn detect_exposed(
    model: &EntropyModel,
    family: &TestingFamily,
    conjugate: &Conjugate,
    params: ExposureParams,
) -> Result<ExposedSet> {
    if !(params.margin > 0.0) {
        return Err(Error::Precondition(format!("margin must be positive, got {}", params.margin)));
    }
    let space = family.space();
    check_same_space(space, &conjugate.space)?;
    if params.radius < space.max_step() * (1.0 - 1e-9) {
        return Err(Error::Precondition(format!("radius {} is below the grid step", params.radius)));
    }
    let table = family.matrix();
    // A member can only expose the minimizer of ψ* - f, so each member is
    // tested at that single point.
    let hits: Vec<(usize, usize)> = (0..family.len())
        .into_par_iter()
        .filter(|&k| conjugate.entropies[k].upper.is_finite())
        .filter_map(|k| {
            let row = &table[k];
            let x = (0..space.len())
                .filter_map(|y| conjugate.values[y].finite().map(|v| (y, v - row[y])))
                .min_by(|a, b| a.1.total_cmp(&b.1))?
                .0;
            exposes(space, row, &conjugate.values, x, params).then_some((x, k))
        })
        .collect();
    let mut exposing: Vec<Option<usize>> = vec![None; space.len()];
    for (x, k) in hits {
        // Members are in lexicographic order; keep the smallest.
        if exposing[x].is_none_or(|old| k < old) {
            exposing[x] = Some(k);
        }
    }

    let mut distinct: Vec<usize> = exposing.iter().flatten().copied().collect();
    distinct.sort_unstable();
    distinct.dedup();
    let niceness: BTreeMap<usize, bool> = distinct
        .par_iter()
        .map(|&k| {
            let f = family.member(k);
            let rec = model.asymptotic_entropy(&f)?;
            let growth = model.growth_membership_default(&f)?;
            Ok((k, rec.converged && growth.in_class))
        })
        .collect::<Result<_>>()?;

    Ok(ExposedSet {
        space: space.clone(),
        mask: exposing.iter().map(|e| e.is_some()).collect(),
        exposing_parameter: exposing.iter().map(|e| e.map(|k| family.params[k].clone())).collect(),
        nice: exposing.iter().map(|e| e.map(|k| niceness[&k]).unwrap_or(false)).collect(),
        params,
        label: GRID_CERTIFIED.into(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RichnessOffender {
    pub center: Vec<f64>,
    pub radius: f64,
    pub inf_over_ball: ExtendedValue,
    pub inf_over_exposed: ExtendedValue,
    pub difference: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RichnessReport {
    pub check: String,
    pub pass: bool,
    pub balls_checked: usize,
    pub failing_balls: usize,
    pub worst: Option<RichnessOffender>,
    pub radii: Vec<f64>,
    pub tolerance: f64,
}

/// Default ball radii: two grid steps, 0.2 and 0.5.
pub fn default_richness_radii(space: &GridSpace) -> Vec<f64> {
    vec![2.0 * space.max_step(), 0.2, 0.5]
}

/// Compares `inf_O I` with `inf_{O∩𝓔} I` over every lattice ball `O`.
pub fn check_richness(rate: &RateField, exposed: &ExposedSet, radii: &[f64], tolerance: f64) -> Result<RichnessReport> {
    let space = rate.space();
    check_same_space(space, &exposed.space)?;
    let eset = exposed.set();
    let records: Vec<(usize, f64, ExtendedValue, ExtendedValue)> = radii
        .iter()
        .flat_map(|&r| (0..space.len()).map(move |c| (c, r)))
        .collect::<Vec<_>>()
        .into_par_iter()
        .map(|(c, r)| {
            let ball = lattice_ball_at(space, c, r);
            let all = rate.inf_over(&ball);
            let ex = rate.inf_over(&ball.intersection(&eset));
            (c, r, all, ex)
        })
        .collect();
    let diff = |all: ExtendedValue, ex: ExtendedValue| if ex <= all { 0.0 } else { ex.distance(all) };
    let failing = records.iter().filter(|(_, _, a, e)| diff(*a, *e) > tolerance).count();
    let worst = records
        .iter()
        .filter(|(_, _, a, e)| diff(*a, *e) > 0.0)
        .max_by(|p, q| diff(p.2, p.3).total_cmp(&diff(q.2, q.3)))
        .map(|(c, r, a, e)| RichnessOffender {
            center: space.point(*c),
            radius: *r,
            inf_over_ball: *a,
            inf_over_exposed: *e,
            difference: diff(*a, *e),
        });
    Ok(RichnessReport {
        check: "richness".into(),
        pass: failing == 0,
        balls_checked: records.len(),
        failing_balls: failing,
        worst,
        radii: radii.to_vec(),
        tolerance,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExposingFamilyReport {
    pub check: String,
    pub pass: bool,
    /// `max_x max(|ψ̲(f_x)|, |ψ̄(f_x)|)`.
    pub worst_entropy: f64,
    pub entropy_ok: bool,
    pub strict_ok: bool,
    pub strictness_witness: Option<String>,
    /// On pass: every grid point came out exposed.
    pub all_exposed: Option<bool>,
    /// On pass: largest deviation between the conjugate and `sup_a f_a`.
    pub rate_vs_sup: Option<f64>,
    pub tolerance: f64,
}

/// Checks that a point-indexed family `{f_x}` is exposing: `ψ̲(f_x) = ψ̄(f_x) = 0`
/// and `f_x(y) < sup_a f_a(y)` for `y ≠ x`. On pass also confirms that every
/// point is exposed and the conjugate is the pointwise family sup.
pub fn exposing_family_check(model: &EntropyModel, family: &TestingFamily, route: EntropyRoute) -> Result<ExposingFamilyReport> {
    let index = family.point_index()?;
    check_same_space(model.space(), family.space())?;
    let space = family.space();
    let tol = model.tolerance();
    let entropies = (0..family.len())
        .into_par_iter()
        .map(|k| family.member_entropy(model, k, route))
        .collect::<Result<Vec<_>>>()?;
    let worst_entropy = entropies
        .iter()
        .map(|(lo, hi)| lo.distance(Finite(0.0)).max(hi.distance(Finite(0.0))))
        .fold(0.0, f64::max);
    let entropy_ok = worst_entropy <= tol;

    let table = family.matrix();
    let sup: Vec<f64> = (0..space.len())
        .map(|y| table.iter().map(|row| row[y]).fold(f64::NEG_INFINITY, f64::max))
        .collect();
    let witness = (0..space.len()).find_map(|x| {
        let k = index[x];
        (0..space.len())
            .find(|&y| y != x && table[k][y] >= sup[y] - STRICT_EPS)
            .map(|y| format!("f at {:?} reaches the family sup at {:?}", space.point(x), space.point(y)))
    });
    let strict_ok = witness.is_none();

    let (all_exposed, rate_vs_sup) = if entropy_ok && strict_ok {
        let conj = conjugate_rate(model, family, route)?;
        let exposed = detect_exposed(model, family, &conj, ExposureParams::default_for(space))?;
        let dev = conj
            .values
            .iter()
            .zip(&sup)
            .map(|(v, s)| v.distance(Finite(*s)))
            .fold(0.0, f64::max);
        (Some(exposed.count() == space.len()), Some(dev))
    } else {
        (None, None)
    };
    let pass = entropy_ok && strict_ok && all_exposed == Some(true) && rate_vs_sup.is_some_and(|d| d <= tol);
    Ok(ExposingFamilyReport {
        check: "exposing_family".into(),
        pass,
        worst_entropy,
        entropy_ok,
        strict_ok,
        strictness_witness: witness,
        all_exposed,
        rate_vs_sup,
        tolerance: tol,
    })
}
