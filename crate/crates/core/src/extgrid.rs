//! Extended reals, box-shaped grid state spaces, point-sets and grid functions.
//!
//! A grid point stands for its cell: the axis-aligned box of half-width
//! `step / 2` around it, except that cells on the faces of the box extend to
//! infinity in the outward direction. A point-set therefore represents the
//! union of its cells, and the whole grid represents the whole space.
//!
//! Semicontinuity on a finite grid cannot be computed; [`Regularity`] is a
//! declared tag that decides which checks apply to a function.

use std::cmp::Ordering;
use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// A real number extended by `-inf` and `+inf`.
///
/// Infinities are explicit variants so that the `-inf * 0 = 0` convention is
/// an implemented rule rather than a property of IEEE arithmetic.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ExtendedValue {
    NegInf,
    Finite(f64),
    PosInf,
}

pub use ExtendedValue::{Finite, NegInf, PosInf};

impl ExtendedValue {
    pub const ZERO: ExtendedValue = Finite(0.0);

    /// Maps IEEE infinities onto the dedicated variants; NaN is rejected.
    pub fn from_f64(x: f64) -> Result<Self> {
        if x.is_nan() {
            Err(Error::NotANumber)
        } else if x == f64::NEG_INFINITY {
            Ok(NegInf)
        } else if x == f64::INFINITY {
            Ok(PosInf)
        } else {
            Ok(Finite(x))
        }
    }

    pub fn to_f64(self) -> f64 {
        match self {
            NegInf => f64::NEG_INFINITY,
            Finite(x) => x,
            PosInf => f64::INFINITY,
        }
    }

    pub fn finite(self) -> Option<f64> {
        match self {
            Finite(x) => Some(x),
            _ => None,
        }
    }

    pub fn is_finite(self) -> bool {
        matches!(self, Finite(_))
    }

    /// Extended addition. `-inf + inf` is undefined and reported as an error.
    pub fn checked_add(self, other: Self) -> Result<Self> {
        match (self, other) {
            (NegInf, PosInf) | (PosInf, NegInf) => Err(Error::UndefinedSum),
            (NegInf, _) | (_, NegInf) => Ok(NegInf),
            (PosInf, _) | (_, PosInf) => Ok(PosInf),
            (Finite(a), Finite(b)) => Ok(Finite(a + b)),
        }
    }

    /// `self - other`, with `-inf - (-inf)` and `inf - inf` rejected.
    pub fn checked_sub(self, other: Self) -> Result<Self> {
        self.checked_add(-other)
    }

    pub fn add_finite(self, c: f64) -> Self {
        match self {
            Finite(x) => Finite(x + c),
            other => other,
        }
    }

    /// Product with a finite scalar under the convention `±inf * 0 = 0`.
    pub fn scale(self, k: f64) -> Self {
        if k == 0.0 {
            return Finite(0.0);
        }
        match self {
            Finite(x) => Finite(x * k),
            NegInf if k > 0.0 => NegInf,
            NegInf => PosInf,
            PosInf if k > 0.0 => PosInf,
            PosInf => NegInf,
        }
    }

    pub fn max(self, other: Self) -> Self {
        if other > self {
            other
        } else {
            self
        }
    }

    pub fn min(self, other: Self) -> Self {
        if other < self {
            other
        } else {
            self
        }
    }

    /// Absolute difference of two extended values; equal infinities give 0.
    pub fn distance(self, other: Self) -> f64 {
        match (self, other) {
            (Finite(a), Finite(b)) => (a - b).abs(),
            (a, b) if a == b => 0.0,
            _ => f64::INFINITY,
        }
    }

    fn rank(self) -> u8 {
        match self {
            NegInf => 0,
            Finite(_) => 1,
            PosInf => 2,
        }
    }
}

impl std::ops::Neg for ExtendedValue {
    type Output = ExtendedValue;
    fn neg(self) -> Self {
        match self {
            NegInf => PosInf,
            Finite(x) => Finite(-x),
            PosInf => NegInf,
        }
    }
}

impl Eq for ExtendedValue {}

impl PartialOrd for ExtendedValue {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for ExtendedValue {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self, other) {
            (Finite(a), Finite(b)) => a.total_cmp(b),
            _ => self.rank().cmp(&other.rank()),
        }
    }
}

impl From<f64> for ExtendedValue {
    /// Panics on NaN; use [`ExtendedValue::from_f64`] for untrusted input.
    fn from(x: f64) -> Self {
        ExtendedValue::from_f64(x).expect("NaN is not an extended real")
    }
}

impl fmt::Display for ExtendedValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NegInf => f.write_str("-inf"),
            PosInf => f.write_str("inf"),
            Finite(x) => write!(f, "{x}"),
        }
    }
}

impl FromStr for ExtendedValue {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "-inf" => Ok(NegInf),
            "inf" | "+inf" => Ok(PosInf),
            t => {
                let x: f64 = t
                    .parse()
                    .map_err(|_| Error::Parse(format!("not an extended real: `{t}`")))?;
                ExtendedValue::from_f64(x)
            }
        }
    }
}

impl Serialize for ExtendedValue {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Finite(x) => s.serialize_f64(*x),
            NegInf => s.serialize_str("-inf"),
            PosInf => s.serialize_str("inf"),
        }
    }
}

impl<'de> Deserialize<'de> for ExtendedValue {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Num(f64),
            Str(String),
        }
        match Repr::deserialize(d)? {
            Repr::Num(x) => ExtendedValue::from_f64(x).map_err(serde::de::Error::custom),
            Repr::Str(s) => s.parse().map_err(serde::de::Error::custom),
        }
    }
}

/// Regular lattice on an axis-aligned box in `R^d`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GridSpec", into = "GridSpec")]
pub struct GridSpace {
    lower: Vec<f64>,
    upper: Vec<f64>,
    points_per_axis: Vec<usize>,
    step: Vec<f64>,
}

/// Serialized form of a [`GridSpace`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub points_per_axis: Vec<usize>,
}

impl TryFrom<GridSpec> for GridSpace {
    type Error = Error;
    fn try_from(g: GridSpec) -> Result<Self> {
        GridSpace::new(g.lower, g.upper, g.points_per_axis)
    }
}

impl From<GridSpace> for GridSpec {
    fn from(g: GridSpace) -> Self {
        GridSpec {
            lower: g.lower,
            upper: g.upper,
            points_per_axis: g.points_per_axis,
        }
    }
}

impl GridSpace {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>, points_per_axis: Vec<usize>) -> Result<Self> {
        let dim = lower.len();
        if dim == 0 || upper.len() != dim || points_per_axis.len() != dim {
            return Err(Error::InvalidGrid(
                "lower, upper and points_per_axis must share a positive length".into(),
            ));
        }
        for i in 0..dim {
            if !(lower[i].is_finite() && upper[i].is_finite() && lower[i] < upper[i]) {
                return Err(Error::InvalidGrid(format!(
                    "axis {i}: need finite lower < upper, got [{}, {}]",
                    lower[i], upper[i]
                )));
            }
            if points_per_axis[i] < 2 {
                return Err(Error::InvalidGrid(format!("axis {i}: need at least 2 points")));
            }
        }
        let step = (0..dim)
            .map(|i| (upper[i] - lower[i]) / (points_per_axis[i] - 1) as f64)
            .collect();
        Ok(Self {
            lower,
            upper,
            points_per_axis,
            step,
        })
    }

    pub fn interval(lower: f64, upper: f64, points: usize) -> Result<Self> {
        Self::new(vec![lower], vec![upper], vec![points])
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn points_per_axis(&self) -> &[usize] {
        &self.points_per_axis
    }

    pub fn step(&self) -> &[f64] {
        &self.step
    }

    /// Largest per-axis spacing.
    pub fn max_step(&self) -> f64 {
        self.step.iter().cloned().fold(0.0, f64::max)
    }

    pub fn len(&self) -> usize {
        self.points_per_axis.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Lattice coordinates of a flat index; the last axis varies fastest.
    pub fn coords(&self, mut flat: usize) -> Vec<usize> {
        let mut out = vec![0; self.dim()];
        for axis in (0..self.dim()).rev() {
            out[axis] = flat % self.points_per_axis[axis];
            flat /= self.points_per_axis[axis];
        }
        out
    }

    pub fn flat(&self, coords: &[usize]) -> usize {
        coords
            .iter()
            .zip(&self.points_per_axis)
            .fold(0, |acc, (&c, &n)| acc * n + c)
    }

    pub fn axis_value(&self, axis: usize, k: usize) -> f64 {
        if k + 1 == self.points_per_axis[axis] {
            self.upper[axis]
        } else {
            self.lower[axis] + k as f64 * self.step[axis]
        }
    }

    pub fn point(&self, flat: usize) -> Vec<f64> {
        self.coords(flat)
            .iter()
            .enumerate()
            .map(|(axis, &k)| self.axis_value(axis, k))
            .collect()
    }

    /// All points in flat-index order.
    pub fn points(&self) -> Vec<Vec<f64>> {
        (0..self.len()).map(|i| self.point(i)).collect()
    }

    /// Flat index of a grid point, accepting round-off of a millionth of a step.
    pub fn index_of(&self, x: &[f64]) -> Result<usize> {
        if x.len() != self.dim() {
            return Err(Error::OffGrid(x.to_vec()));
        }
        let mut coords = Vec::with_capacity(self.dim());
        for (axis, &xi) in x.iter().enumerate() {
            let k = ((xi - self.lower[axis]) / self.step[axis]).round();
            if k < 0.0 || k >= self.points_per_axis[axis] as f64 {
                return Err(Error::OffGrid(x.to_vec()));
            }
            let k = k as usize;
            if (self.axis_value(axis, k) - xi).abs() > 1e-6 * self.step[axis] {
                return Err(Error::OffGrid(x.to_vec()));
            }
            coords.push(k);
        }
        Ok(self.flat(&coords))
    }

    /// Nearest grid index, clamping to the box.
    pub fn nearest_index(&self, x: &[f64]) -> usize {
        let coords: Vec<usize> = x
            .iter()
            .enumerate()
            .map(|(axis, &xi)| {
                let k = ((xi - self.lower[axis]) / self.step[axis]).round();
                k.clamp(0.0, (self.points_per_axis[axis] - 1) as f64) as usize
            })
            .collect();
        self.flat(&coords)
    }

    pub fn distance(&self, a: usize, b: usize) -> f64 {
        let (pa, pb) = (self.point(a), self.point(b));
        pa.iter()
            .zip(&pb)
            .map(|(x, y)| (x - y) * (x - y))
            .sum::<f64>()
            .sqrt()
    }

    /// Flat indices of lattice neighbours (all points whose coordinates differ
    /// by at most one on every axis), excluding the point itself.
    pub fn neighbors(&self, flat: usize) -> Vec<usize> {
        let c = self.coords(flat);
        let dim = self.dim();
        let mut out = Vec::new();
        let total = 3usize.pow(dim as u32);
        for code in 0..total {
            let mut m = code;
            let mut nc = Vec::with_capacity(dim);
            let mut ok = true;
            let mut same = true;
            for axis in 0..dim {
                let delta = (m % 3) as isize - 1;
                m /= 3;
                if delta != 0 {
                    same = false;
                }
                let k = c[axis] as isize + delta;
                if k < 0 || k >= self.points_per_axis[axis] as isize {
                    ok = false;
                    break;
                }
                nc.push(k as usize);
            }
            if ok && !same {
                out.push(self.flat(&nc));
            }
        }
        out
    }

    fn check_same(&self, other: &GridSpace) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(Error::SpaceMismatch)
        }
    }
}

/// Subset of grid points, one flag per flat index.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PointSet {
    members: Vec<bool>,
}

impl PointSet {
    pub fn empty(len: usize) -> Self {
        Self {
            members: vec![false; len],
        }
    }

    pub fn full(len: usize) -> Self {
        Self {
            members: vec![true; len],
        }
    }

    pub fn from_mask(members: Vec<bool>) -> Self {
        Self { members }
    }

    pub fn from_indices(len: usize, indices: impl IntoIterator<Item = usize>) -> Self {
        let mut s = Self::empty(len);
        for i in indices {
            s.members[i] = true;
        }
        s
    }

    pub fn from_predicate(space: &GridSpace, pred: impl Fn(&[f64]) -> bool) -> Self {
        Self {
            members: (0..space.len()).map(|i| pred(&space.point(i))).collect(),
        }
    }

    /// Bit `i` of `bits` selects point `i`; for exhaustive enumeration.
    pub fn from_bits(len: usize, bits: u64) -> Self {
        Self {
            members: (0..len).map(|i| bits >> i & 1 == 1).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        !self.members.iter().any(|&b| b)
    }

    pub fn count(&self) -> usize {
        self.members.iter().filter(|&&b| b).count()
    }

    pub fn contains(&self, i: usize) -> bool {
        self.members[i]
    }

    pub fn insert(&mut self, i: usize) {
        self.members[i] = true;
    }

    pub fn mask(&self) -> &[bool] {
        &self.members
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.members
            .iter()
            .enumerate()
            .filter_map(|(i, &b)| b.then_some(i))
    }

    pub fn union(&self, other: &Self) -> Self {
        self.zip_with(other, |a, b| a || b)
    }

    pub fn intersection(&self, other: &Self) -> Self {
        self.zip_with(other, |a, b| a && b)
    }

    pub fn complement(&self) -> Self {
        Self {
            members: self.members.iter().map(|&b| !b).collect(),
        }
    }

    pub fn is_subset(&self, other: &Self) -> bool {
        self.members
            .iter()
            .zip(&other.members)
            .all(|(&a, &b)| !a || b)
    }

    /// One-cell erosion: the grid analogue of the interior. Missing neighbours
    /// beyond the box face do not erode, since face cells extend outward.
    pub fn interior(&self, space: &GridSpace) -> Self {
        Self {
            members: (0..self.len())
                .map(|i| self.members[i] && space.neighbors(i).iter().all(|&j| self.members[j]))
                .collect(),
        }
    }

    /// One-cell dilation: the grid analogue of the closure.
    pub fn closure(&self, space: &GridSpace) -> Self {
        Self {
            members: (0..self.len())
                .map(|i| self.members[i] || space.neighbors(i).iter().any(|&j| self.members[j]))
                .collect(),
        }
    }

    fn zip_with(&self, other: &Self, op: impl Fn(bool, bool) -> bool) -> Self {
        Self {
            members: self
                .members
                .iter()
                .zip(&other.members)
                .map(|(&a, &b)| op(a, b))
                .collect(),
        }
    }
}

/// All grid points within Euclidean distance `radius` of `center`.
pub fn lattice_ball(space: &GridSpace, center: &[f64], radius: f64) -> Result<PointSet> {
    let c = space.index_of(center)?;
    if !(radius >= 0.0) {
        return Err(Error::Precondition(format!("radius must be >= 0, got {radius}")));
    }
    Ok(lattice_ball_at(space, c, radius))
}

/// [`lattice_ball`] around a flat index.
pub fn lattice_ball_at(space: &GridSpace, center: usize, radius: f64) -> PointSet {
    // Tolerance absorbs round-off in radii that are multiples of the step.
    let r = radius * (1.0 + 1e-9) + 1e-12;
    let pc = space.point(center);
    PointSet::from_predicate(space, |x| {
        x.iter()
            .zip(&pc)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
            <= r
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Regularity {
    Continuous,
    LowerSemicontinuous,
    UpperSemicontinuous,
    Measurable,
}

/// Function from grid points into `R ∪ {-inf}`.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    space: GridSpace,
    values: Vec<ExtendedValue>,
    regularity: Regularity,
    bounded_above: bool,
    tail_slopes: Option<(f64, f64)>,
}

impl GridFunction {
    pub fn new(space: GridSpace, values: Vec<ExtendedValue>, regularity: Regularity) -> Result<Self> {
        if values.len() != space.len() {
            return Err(Error::InvalidGrid(format!(
                "{} values for {} grid points",
                values.len(),
                space.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| *v == PosInf) {
            return Err(Error::PosInfInFunction(i));
        }
        Ok(Self {
            space,
            values,
            regularity,
            bounded_above: true,
            tail_slopes: None,
        })
    }

    pub fn from_fn(space: &GridSpace, regularity: Regularity, f: impl Fn(&[f64]) -> f64) -> Result<Self> {
        let values = (0..space.len())
            .map(|i| ExtendedValue::from_f64(f(&space.point(i))))
            .collect::<Result<Vec<_>>>()?;
        Self::new(space.clone(), values, regularity)
    }

    pub fn constant(space: &GridSpace, c: f64) -> Self {
        Self {
            space: space.clone(),
            values: vec![Finite(c); space.len()],
            regularity: Regularity::Continuous,
            bounded_above: true,
            tail_slopes: Some((0.0, 0.0)),
        }
    }

    pub fn space(&self) -> &GridSpace {
        &self.space
    }

    pub fn values(&self) -> &[ExtendedValue] {
        &self.values
    }

    pub fn value(&self, i: usize) -> ExtendedValue {
        self.values[i]
    }

    pub fn regularity(&self) -> Regularity {
        self.regularity
    }

    pub fn with_regularity(mut self, regularity: Regularity) -> Self {
        self.regularity = regularity;
        self
    }

    /// Declared intent for the continuum function this grid function samples.
    pub fn bounded_above(&self) -> bool {
        self.bounded_above
    }

    pub fn declare_bounded_above(mut self, bounded: bool) -> Self {
        self.bounded_above = bounded;
        self
    }

    /// Slopes of the continuation beyond the left and right ends of a 1-d
    /// box, when known from the function's closed form. Without them the
    /// outermost grid intervals are extended.
    pub fn tail_slopes(&self) -> Option<(f64, f64)> {
        self.tail_slopes
    }

    pub fn with_tail_slopes(mut self, left: f64, right: f64) -> Self {
        self.tail_slopes = Some((left, right));
        self
    }

    pub fn max_value(&self) -> ExtendedValue {
        self.values.iter().copied().max().unwrap_or(NegInf)
    }

    pub fn is_neg_inf_everywhere(&self) -> bool {
        self.values.iter().all(|v| *v == NegInf)
    }

    /// Keeps `f` on `set` and sends the complement to `-inf`, i.e.
    /// `f·1_A + (-inf)·1_{A^c}` under `-inf·0 = 0`. The result is tagged
    /// measurable.
    pub fn mask(&self, set: &PointSet) -> Self {
        let values = self
            .values
            .iter()
            .enumerate()
            .map(|(i, &v)| {
                let keep = if set.contains(i) { 1.0 } else { 0.0 };
                v.scale(keep)
                    .checked_add(NegInf.scale(1.0 - keep))
                    .expect("grid functions never hold +inf")
            })
            .collect();
        Self {
            space: self.space.clone(),
            values,
            regularity: Regularity::Measurable,
            bounded_above: self.bounded_above,
            tail_slopes: None,
        }
    }

    pub fn add_const(&self, c: f64) -> Self {
        self.map(|v| v.add_finite(c), self.tail_slopes)
    }

    /// `t·f` for `t >= 0`.
    pub fn scale(&self, t: f64) -> Self {
        self.map(|v| v.scale(t), self.tail_slopes.map(|(l, r)| (t * l, t * r)))
    }

    /// `f ∧ c`.
    pub fn min_const(&self, c: f64) -> Self {
        self.map(|v| v.min(Finite(c)), None)
    }

    /// `f ∨ c`.
    pub fn max_const(&self, c: f64) -> Self {
        self.map(|v| v.max(Finite(c)), None)
    }

    pub fn pointwise_max(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| Ok(a.max(b)))
    }

    pub fn pointwise_min(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| Ok(a.min(b)))
    }

    /// `λ f + (1 - λ) g` with `λ ∈ [0, 1]`.
    pub fn convex_combination(&self, other: &Self, lambda: f64) -> Result<Self> {
        self.zip_with(other, |a, b| a.scale(lambda).checked_add(b.scale(1.0 - lambda)))
    }

    pub fn le(&self, other: &Self) -> bool {
        self.values.iter().zip(&other.values).all(|(a, b)| a <= b)
    }

    /// Level set `{f >= c}`.
    pub fn superlevel(&self, c: f64) -> PointSet {
        PointSet::from_mask(self.values.iter().map(|v| *v >= Finite(c)).collect())
    }

    fn map(&self, op: impl Fn(ExtendedValue) -> ExtendedValue, tail_slopes: Option<(f64, f64)>) -> Self {
        Self {
            space: self.space.clone(),
            values: self.values.iter().map(|&v| op(v)).collect(),
            regularity: self.regularity,
            bounded_above: self.bounded_above,
            tail_slopes,
        }
    }

    fn zip_with(
        &self,
        other: &Self,
        op: impl Fn(ExtendedValue, ExtendedValue) -> Result<ExtendedValue>,
    ) -> Result<Self> {
        self.space.check_same(&other.space)?;
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(&a, &b)| op(a, b))
            .collect::<Result<Vec<_>>>()?;
        let regularity = if self.regularity == other.regularity {
            self.regularity
        } else {
            Regularity::Measurable
        };
        Ok(Self {
            space: self.space.clone(),
            values,
            regularity,
            bounded_above: self.bounded_above && other.bounded_above,
            tail_slopes: None,
        })
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        write_field_csv(&self.space, &self.values, w)
    }

    pub fn read_csv<R: Read>(space: &GridSpace, r: R, regularity: Regularity) -> Result<Self> {
        let values = read_field_csv(space, r)?;
        Self::new(space.clone(), values, regularity)
    }
}

pub(crate) fn check_same_space(a: &GridSpace, b: &GridSpace) -> Result<()> {
    a.check_same(b)
}

/// Writes `x_1,...,x_d,value` rows in flat-index order.
pub(crate) fn write_field_csv<W: Write>(space: &GridSpace, values: &[ExtendedValue], w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    let mut header: Vec<String> = (1..=space.dim()).map(|i| format!("x_{i}")).collect();
    header.push("value".into());
    out.write_record(&header)?;
    for (i, v) in values.iter().enumerate() {
        let mut row: Vec<String> = space.point(i).iter().map(|x| x.to_string()).collect();
        row.push(v.to_string());
        out.write_record(&row)?;
    }
    out.flush()?;
    Ok(())
}

/// Reads a field written by [`write_field_csv`]; rows must cover the grid in
/// flat-index order.
pub(crate) fn read_field_csv<R: Read>(space: &GridSpace, r: R) -> Result<Vec<ExtendedValue>> {
    let mut rdr = csv::Reader::from_reader(r);
    let header = rdr.headers()?.clone();
    if header.len() != space.dim() + 1 || header.get(space.dim()) != Some("value") {
        return Err(Error::Parse(format!(
            "expected header x_1..x_{},value; got {:?}",
            space.dim(),
            header
        )));
    }
    let mut values = Vec::with_capacity(space.len());
    for (row, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let x = (0..space.dim())
            .map(|k| {
                rec.get(k)
                    .unwrap_or("")
                    .trim()
                    .parse::<f64>()
                    .map_err(|_| Error::Parse(format!("row {row}: bad coordinate")))
            })
            .collect::<Result<Vec<_>>>()?;
        let idx = space.index_of(&x)?;
        if idx != row {
            return Err(Error::Parse(format!("row {row}: rows must be in flat-index order")));
        }
        values.push(rec.get(space.dim()).unwrap_or("").parse()?);
    }
    if values.len() != space.len() {
        return Err(Error::Parse(format!(
            "expected {} rows, found {}",
            space.len(),
            values.len()
        )));
    }
    Ok(values)
}

/// Reads a one-dimensional `x_1,value` curve without a predeclared grid.
pub fn read_curve_csv<R: Read>(r: R) -> Result<(Vec<f64>, Vec<ExtendedValue>)> {
    let mut rdr = csv::Reader::from_reader(r);
    let header = rdr.headers()?.clone();
    if header.len() != 2 {
        return Err(Error::Dimension(header.len().saturating_sub(1)));
    }
    let mut xs = Vec::new();
    let mut vs = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let x: f64 = rec
            .get(0)
            .unwrap_or("")
            .trim()
            .parse()
            .map_err(|_| Error::Parse("bad coordinate".into()))?;
        xs.push(x);
        vs.push(rec.get(1).unwrap_or("").parse()?);
    }
    Ok((xs, vs))
}
