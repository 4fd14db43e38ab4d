//! The convex integral `φ_J(f) = sup_c { c + J({f ≥ c}) }`, the minimal rate
//! function, and checkers for the duality bounds and the integral's
//! structural properties.

use std::collections::BTreeMap;
use std::io::{Read, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::concentration::{Concentration, EXHAUSTIVE_LIMIT};
use crate::error::{Error, Result};
use crate::extgrid::{check_same_space, lattice_ball_at, read_field_csv, write_field_csv};
use crate::extgrid::{ExtendedValue, GridFunction, GridSpace, PointSet, Regularity};
use crate::extgrid::{Finite, NegInf, PosInf};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RateProvenance {
    Minimal,
    Conjugate,
    Analytic,
}

/// A `[0, +inf]`-valued function on the grid.
#[derive(Debug, Clone, PartialEq)]
pub struct RateField {
    space: GridSpace,
    values: Vec<ExtendedValue>,
    provenance: RateProvenance,
}

impl RateField {
    pub fn new(space: GridSpace, values: Vec<ExtendedValue>, provenance: RateProvenance) -> Result<Self> {
        if values.len() != space.len() {
            return Err(Error::InvalidGrid(format!(
                "{} rate values for {} grid points",
                values.len(),
                space.len()
            )));
        }
        for (index, v) in values.iter().enumerate() {
            match v {
                NegInf => return Err(Error::NegInfInRate(index)),
                Finite(x) if *x < 0.0 => return Err(Error::NegativeRate { index, value: *x }),
                _ => {}
            }
        }
        Ok(Self {
            space,
            values,
            provenance,
        })
    }

    pub fn analytic(space: &GridSpace, rate: impl Fn(&[f64]) -> f64) -> Result<Self> {
        let values = (0..space.len())
            .map(|i| ExtendedValue::from_f64(rate(&space.point(i))))
            .collect::<Result<Vec<_>>>()?;
        Self::new(space.clone(), values, RateProvenance::Analytic)
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

    pub fn provenance(&self) -> RateProvenance {
        self.provenance
    }

    /// `inf_{x∈A} I(x)`; `+inf` on the empty set.
    pub fn inf_over(&self, set: &PointSet) -> ExtendedValue {
        set.iter().map(|i| self.values[i]).min().unwrap_or(PosInf)
    }

    /// `sup_x { f(x) - I(x) }` over the grid.
    pub fn sup_of_difference(&self, f: &GridFunction) -> ExtendedValue {
        f.values()
            .iter()
            .zip(&self.values)
            .map(|(&fv, &iv)| match (fv, iv) {
                (NegInf, _) | (_, PosInf) => NegInf,
                (Finite(a), Finite(b)) => Finite(a - b),
                _ => unreachable!("grid functions exclude +inf and rates exclude -inf"),
            })
            .max()
            .unwrap_or(NegInf)
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        write_field_csv(&self.space, &self.values, w)
    }

    pub fn read_csv<R: Read>(space: &GridSpace, r: R, provenance: RateProvenance) -> Result<Self> {
        let values = read_field_csv(space, r)?;
        Self::new(space.clone(), values, provenance)
    }
}

/// `sup_c { c + J({f ≥ c}) }` with `c` ranging over the distinct finite values
/// of `f`; `J`'s level sets only change at those values, so the scan is exact.
pub fn convex_integral(j: &dyn Concentration, f: &GridFunction) -> Result<ExtendedValue> {
    check_same_space(j.space(), f.space())?;
    let mut levels: Vec<f64> = f.values().iter().filter_map(|v| v.finite()).collect();
    if levels.is_empty() {
        return Ok(NegInf);
    }
    levels.sort_by(f64::total_cmp);
    levels.dedup();
    let best = levels
        .par_iter()
        .map(|&c| j.eval(&f.superlevel(c)).add_finite(c))
        .max()
        .unwrap_or(NegInf);
    Ok(best)
}

/// Geometric radii from half the box width down to one grid step, then 0.
pub fn default_radii(space: &GridSpace) -> Vec<f64> {
    let half = space
        .lower()
        .iter()
        .zip(space.upper())
        .map(|(a, b)| 0.5 * (b - a))
        .fold(f64::INFINITY, f64::min);
    let step = space.max_step();
    let mut radii = Vec::new();
    let mut r = half;
    while r > step * (1.0 + 1e-9) {
        radii.push(r);
        r *= 0.5;
    }
    radii.push(step);
    radii.push(0.0);
    radii
}

/// `I_min(x) = -inf_r J(ball(x, r))` over a decreasing radius ladder.
pub fn minimal_rate(j: &dyn Concentration, radii: &[f64]) -> Result<RateField> {
    if radii.is_empty() {
        return Err(Error::Precondition("radius ladder must be nonempty".into()));
    }
    if radii.windows(2).any(|w| w[1] >= w[0]) || radii.iter().any(|r| *r < 0.0) {
        return Err(Error::Precondition("radius ladder must be nonnegative and decreasing".into()));
    }
    let space = j.space();
    let values: Vec<ExtendedValue> = (0..space.len())
        .into_par_iter()
        .map(|i| {
            let inf = radii
                .iter()
                .map(|&r| j.eval(&lattice_ball_at(space, i, r)))
                .min()
                .unwrap_or(Finite(0.0));
            -inf.min(Finite(0.0))
        })
        .collect();
    RateField::new(space.clone(), values, RateProvenance::Minimal)
}

fn excess(lhs: ExtendedValue, rhs: ExtendedValue) -> f64 {
    if lhs <= rhs {
        0.0
    } else {
        lhs.distance(rhs)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquivalenceSide {
    pub set_side_holds: bool,
    pub function_side_holds: bool,
    pub worst_set_violation: f64,
    pub worst_function_violation: f64,
    pub set_witness: Option<String>,
    pub function_witness: Option<String>,
}

impl EquivalenceSide {
    fn new() -> Self {
        Self {
            set_side_holds: true,
            function_side_holds: true,
            worst_set_violation: 0.0,
            worst_function_violation: 0.0,
            set_witness: None,
            function_witness: None,
        }
    }

    fn set(&mut self, v: f64, tol: f64, witness: impl FnOnce() -> String) {
        if v > self.worst_set_violation {
            self.worst_set_violation = v;
            self.set_witness = Some(witness());
        }
        if v > tol {
            self.set_side_holds = false;
        }
    }

    fn function(&mut self, v: f64, tol: f64, witness: impl FnOnce() -> String) {
        if v > self.worst_function_violation {
            self.worst_function_violation = v;
            self.function_witness = Some(witness());
        }
        if v > tol {
            self.function_side_holds = false;
        }
    }

    fn consistent(&self) -> bool {
        self.set_side_holds == self.function_side_holds
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DualityReport {
    pub check: String,
    /// Both equivalences agree between their set and function sides.
    pub pass: bool,
    /// `-inf_O I ≤ J_O` on open sets vs `φ_J(f) ≥ sup{f - I}` on lsc `f`.
    pub lower: EquivalenceSide,
    /// `J_C ≤ -inf_C I` on closed sets vs `φ_J(f) ≤ sup{f - I}` on usc `f`.
    pub upper: EquivalenceSide,
    pub counterexample: Option<String>,
    pub mode: String,
    pub tolerance: f64,
}

/// Uniform on multiples of 1/64 in `[-bound, bound]`, so that sums,
/// differences and the convexity weights stay exact in floating point.
fn dyadic(rng: &mut ChaCha8Rng, bound: f64) -> f64 {
    let k = (bound * 64.0) as i64;
    rng.gen_range(-k..=k) as f64 / 64.0
}

fn random_function(space: &GridSpace, rng: &mut ChaCha8Rng, regularity: Regularity) -> GridFunction {
    let values = (0..space.len())
        .map(|_| {
            if rng.gen_bool(0.15) {
                NegInf
            } else {
                Finite(dyadic(rng, 3.0))
            }
        })
        .collect();
    GridFunction::new(space.clone(), values, regularity).expect("values are finite or -inf")
}

fn set_label(space: &GridSpace, set: &PointSet) -> String {
    let pts: Vec<String> = set.iter().map(|i| format!("{:?}", space.point(i))).collect();
    format!("{{{}}}", pts.join(", "))
}

/// Verifies both equivalences between set inequalities and integral
/// inequalities for a pair `(J, I)`.
///
/// On spaces of at most twelve points the topology is discrete: every subset
/// is open and closed and every function is semicontinuous. Set sides are
/// then exhaustive and function sides run over all indicator functions
/// `-∞·1_{A^c}` plus `trials` random functions. Larger grids sample sets as
/// unions of lattice balls, taking one-cell interiors as open sets and
/// one-cell closures as closed sets.
pub fn check_duality_bounds(
    j: &dyn Concentration,
    rate: &RateField,
    trials: usize,
    seed: u64,
    tolerance: f64,
) -> Result<DualityReport> {
    check_same_space(j.space(), rate.space())?;
    let space = j.space();
    let len = space.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut lower = EquivalenceSide::new();
    let mut upper = EquivalenceSide::new();
    let zero = GridFunction::constant(space, 0.0);

    let check_function = |f: &GridFunction, lower: &mut EquivalenceSide, upper: &mut EquivalenceSide, label: &str| -> Result<()> {
        let phi = convex_integral(j, f)?;
        let sup = rate.sup_of_difference(f);
        if f.regularity() != Regularity::UpperSemicontinuous {
            lower.function(excess(sup, phi), tolerance, || format!("{label}: φ_J(f) = {phi} < sup(f - I) = {sup}"));
        }
        if f.regularity() != Regularity::LowerSemicontinuous {
            upper.function(excess(phi, sup), tolerance, || format!("{label}: φ_J(f) = {phi} > sup(f - I) = {sup}"));
        }
        Ok(())
    };

    let (mode, open_sets, closed_sets): (&str, Vec<PointSet>, Vec<PointSet>) = if len <= EXHAUSTIVE_LIMIT {
        let all: Vec<PointSet> = (1u64..(1u64 << len)).map(|b| PointSet::from_bits(len, b)).collect();
        ("exhaustive", all.clone(), all)
    } else {
        let max_r = space.max_step() * 8.0;
        let mut opens = Vec::new();
        let mut closeds = Vec::new();
        for _ in 0..trials.max(1) {
            let mut s = PointSet::empty(len);
            for _ in 0..rng.gen_range(1..=3) {
                let c = rng.gen_range(0..len);
                s = s.union(&lattice_ball_at(space, c, rng.gen_range(0.0..max_r)));
            }
            let o = s.interior(space);
            if !o.is_empty() {
                opens.push(o);
            }
            closeds.push(s.closure(space));
        }
        ("sampled", opens, closeds)
    };

    for o in &open_sets {
        let v = excess(-rate.inf_over(o), j.eval(o));
        lower.set(v, tolerance, || format!("open set {}", set_label(space, o)));
        let f = zero.mask(o).with_regularity(Regularity::LowerSemicontinuous);
        check_function(&f, &mut lower, &mut upper, &format!("f = -∞·1 off {}", set_label(space, o)))?;
    }
    for c in &closed_sets {
        let v = excess(j.eval(c), -rate.inf_over(c));
        upper.set(v, tolerance, || format!("closed set {}", set_label(space, c)));
        let f = zero.mask(c).with_regularity(Regularity::UpperSemicontinuous);
        check_function(&f, &mut lower, &mut upper, &format!("f = -∞·1 off {}", set_label(space, c)))?;
    }
    for t in 0..trials {
        let f = random_function(space, &mut rng, Regularity::Continuous);
        check_function(&f, &mut lower, &mut upper, &format!("random function #{t}"))?;
    }

    let counterexample = if !lower.consistent() {
        Some(format!(
            "lower equivalence broken: sets hold = {}, functions hold = {}",
            lower.set_side_holds, lower.function_side_holds
        ))
    } else if !upper.consistent() {
        Some(format!(
            "upper equivalence broken: sets hold = {}, functions hold = {}",
            upper.set_side_holds, upper.function_side_holds
        ))
    } else {
        None
    };
    Ok(DualityReport {
        check: "duality_bounds".into(),
        pass: counterexample.is_none(),
        lower,
        upper,
        counterexample,
        mode: mode.into(),
        tolerance,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PropertiesReport {
    pub check: String,
    pub pass: bool,
    /// Maximum violation per property, keyed `b1`..`b7`.
    pub violations: BTreeMap<String, f64>,
    pub maxitive: bool,
    pub tolerance: f64,
    pub trials: usize,
}

pub const CONVEXITY_WEIGHTS: [f64; 5] = [0.0, 0.25, 0.5, 0.75, 1.0];

/// Property tests for `φ_J`: b1–b5 always, b6 (maxitivity) and b7 (convexity)
/// when `J` is maxitive.
pub fn check_integral_properties(
    j: &dyn Concentration,
    trials: usize,
    seed: u64,
    tolerance: f64,
) -> Result<PropertiesReport> {
    if trials == 0 {
        return Err(Error::Precondition("trials must be at least 1".into()));
    }
    let space = j.space();
    let len = space.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: BTreeMap<String, f64> = BTreeMap::new();
    let mut note = |key: &str, v: f64| {
        let e = worst.entry(key.to_string()).or_insert(0.0);
        if v > *e {
            *e = v;
        }
    };
    let phi = |f: &GridFunction| convex_integral(j, f);
    let zero = GridFunction::constant(space, 0.0);
    note("b2", phi(&zero)?.distance(Finite(0.0)));

    for _ in 0..trials {
        let f = random_function(space, &mut rng, Regularity::Measurable);
        let g = random_function(space, &mut rng, Regularity::Measurable);
        let a = PointSet::from_mask((0..len).map(|_| rng.gen_bool(0.5)).collect());
        let pf = phi(&f)?;
        let pg = phi(&g)?;

        note("b1", phi(&zero.mask(&a))?.distance(j.eval(&a)));

        let c = dyadic(&mut rng, 3.0);
        note("b3", phi(&f.add_const(c))?.distance(pf.add_finite(c)));

        let bump = GridFunction::from_fn(space, Regularity::Measurable, |_| 0.0)?;
        let bump = GridFunction::new(
            space.clone(),
            bump.values().iter().map(|_| Finite(dyadic(&mut rng, 2.0).abs())).collect(),
            Regularity::Measurable,
        )?;
        let above = f.pointwise_max(&f.pointwise_min(&g)?)?;
        let above = GridFunction::new(
            space.clone(),
            above
                .values()
                .iter()
                .zip(bump.values())
                .map(|(v, b)| v.checked_add(*b))
                .collect::<Result<Vec<_>>>()?,
            Regularity::Measurable,
        )?;
        note("b4", excess(pf, phi(&above)?));

        // b5: truncations converge, from below for f ∧ n; exact once n passes
        // the extreme finite values of f.
        let mut prev = NegInf;
        for n in [-2.0, -1.0, 0.0, 1.0, 2.0, 4.0] {
            let v = phi(&f.min_const(n))?;
            note("b5", excess(prev, v));
            note("b5", excess(v, pf));
            prev = v;
        }
        let big = 1e6;
        note("b5", phi(&f.min_const(big))?.distance(pf));
        let floor = phi(&f.max_const(-big))?;
        note("b5", if pf == NegInf { excess(floor, Finite(-big)) } else { floor.distance(pf) });

        if j.is_maxitive() {
            note("b6", excess(phi(&f.pointwise_max(&g)?)?, pf.max(pg)));
            for &lambda in &CONVEXITY_WEIGHTS {
                let mix = phi(&f.convex_combination(&g, lambda)?)?;
                let bound = pf.scale(lambda).checked_add(pg.scale(1.0 - lambda))?;
                note("b7", excess(mix, bound));
            }
        }
    }
    for key in ["b1", "b2", "b3", "b4", "b5"] {
        worst.entry(key.into()).or_insert(0.0);
    }
    if j.is_maxitive() {
        worst.entry("b6".into()).or_insert(0.0);
        worst.entry("b7".into()).or_insert(0.0);
    }
    Ok(PropertiesReport {
        check: "integral_properties".into(),
        pass: worst.values().all(|v| *v <= tolerance),
        violations: worst,
        maxitive: j.is_maxitive(),
        tolerance,
        trials,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::laplace_model;
    use crate::concentration::{capacity_limit_concentration, CapacityMode, MaxPlusDensity, SetFunction};
    use crate::entropy::Asymptotics;
    use approx::assert_abs_diff_eq;

    fn three_point() -> MaxPlusDensity {
        let s = GridSpace::interval(0.0, 2.0, 3).unwrap();
        MaxPlusDensity::new(
            GridFunction::new(s, vec![Finite(0.0), Finite(-1.0), Finite(-2.0)], Regularity::Measurable).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn convex_integral_examples() {
        let j = three_point();
        let s = j.space().clone();
        let f = GridFunction::new(s.clone(), vec![Finite(1.0), Finite(5.0), Finite(10.0)], Regularity::Measurable).unwrap();
        assert_eq!(convex_integral(&j, &f).unwrap(), Finite(8.0));
        assert_eq!(convex_integral(&j, &GridFunction::constant(&s, 2.5)).unwrap(), Finite(2.5));
        let a = PointSet::from_indices(3, [1, 2]);
        let masked = GridFunction::constant(&s, 0.0).mask(&a);
        assert_eq!(convex_integral(&j, &masked).unwrap(), j.eval(&a));
        let other = GridSpace::interval(0.0, 1.0, 3).unwrap();
        assert!(convex_integral(&j, &GridFunction::constant(&other, 0.0)).is_err());
        assert_eq!(convex_integral(&j, &masked.mask(&PointSet::empty(3))).unwrap(), NegInf);
    }

    #[test]
    fn minimal_rate_examples() {
        let j = three_point();
        let r = minimal_rate(&j, &[1.0, 0.0]).unwrap();
        assert_eq!(r.values(), &[Finite(0.0), Finite(1.0), Finite(2.0)]);

        let s = GridSpace::interval(0.0, 1.0, 5).unwrap();
        let flat = SetFunction::new(s.clone(), |_| Finite(0.0));
        let r = minimal_rate(&flat, &default_radii(&s)).unwrap();
        assert!(r.values().iter().all(|v| *v == Finite(0.0)));

        assert!(minimal_rate(&j, &[0.0, 1.0]).is_err());
        assert!(minimal_rate(&j, &[]).is_err());
    }

    #[test]
    fn laplace_minimal_rate_near_half() {
        let m = laplace_model(&GridSpace::interval(-3.0, 3.0, 601).unwrap(), Asymptotics::default()).unwrap();
        let j = capacity_limit_concentration(&m, CapacityMode::Upper).unwrap();
        let r = minimal_rate(&j, &default_radii(m.space())).unwrap();
        let i = m.space().index_of(&[0.5]).unwrap();
        assert_abs_diff_eq!(r.value(i).to_f64(), 0.5, epsilon = 1e-2);
    }

    #[test]
    fn radii_ladder_shape() {
        let s = GridSpace::interval(-3.0, 3.0, 601).unwrap();
        let r = default_radii(&s);
        assert_eq!(r[0], 3.0);
        assert_eq!(*r.last().unwrap(), 0.0);
        assert!(r.windows(2).all(|w| w[1] < w[0]));
    }

    #[test]
    fn duality_maxplus_with_its_own_rate() {
        let j = three_point();
        let rate = RateField::new(j.space().clone(), vec![Finite(0.0), Finite(1.0), Finite(2.0)], RateProvenance::Minimal).unwrap();
        let r = check_duality_bounds(&j, &rate, 50, 3, 1e-12).unwrap();
        assert!(r.pass);
        assert!(r.lower.set_side_holds && r.lower.function_side_holds);
        assert!(r.upper.set_side_holds && r.upper.function_side_holds);
    }

    #[test]
    fn duality_trivial_pair() {
        let s = GridSpace::interval(0.0, 1.0, 4).unwrap();
        let j = SetFunction::new(s.clone(), |_| Finite(0.0));
        let rate = RateField::new(s, vec![Finite(0.0); 4], RateProvenance::Analytic).unwrap();
        let r = check_duality_bounds(&j, &rate, 20, 1, 1e-12).unwrap();
        assert!(r.pass && r.lower.set_side_holds && r.upper.set_side_holds);
    }

    #[test]
    fn duality_infinite_rate_breaks_upper_side_consistently() {
        let s = GridSpace::interval(0.0, 1.0, 4).unwrap();
        let j = SetFunction::new(s.clone(), |_| Finite(0.0));
        let rate = RateField::new(s, vec![PosInf; 4], RateProvenance::Analytic).unwrap();
        let r = check_duality_bounds(&j, &rate, 20, 1, 1e-12).unwrap();
        assert!(!r.upper.set_side_holds);
        assert!(!r.upper.function_side_holds);
        assert!(r.upper.function_witness.is_some());
        assert!(r.lower.set_side_holds);
        assert!(r.pass);
    }

    #[test]
    fn properties_on_maxplus() {
        let s = GridSpace::interval(0.0, 1.0, 6).unwrap();
        let j = MaxPlusDensity::new(
            GridFunction::new(
                s,
                vec![Finite(-0.5), Finite(0.0), NegInf, Finite(-3.0), Finite(-1.0), Finite(-0.1)],
                Regularity::Measurable,
            )
            .unwrap(),
        )
        .unwrap();
        let r = check_integral_properties(&j, 100, 11, 1e-12).unwrap();
        assert!(r.pass, "{r:?}");
        assert_eq!(r.violations.len(), 7);
    }

    #[test]
    fn rate_field_validation_and_csv() {
        let s = GridSpace::interval(0.0, 1.0, 3).unwrap();
        assert!(RateField::new(s.clone(), vec![Finite(0.0), NegInf, Finite(1.0)], RateProvenance::Analytic).is_err());
        assert!(RateField::new(s.clone(), vec![Finite(0.0), Finite(-0.1), Finite(1.0)], RateProvenance::Analytic).is_err());
        let r = RateField::new(s.clone(), vec![Finite(0.0), PosInf, Finite(1.0)], RateProvenance::Analytic).unwrap();
        let mut buf = Vec::new();
        r.write_csv(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf.clone()).unwrap(), "x_1,value\n0,0\n0.5,inf\n1,1\n");
        let back = RateField::read_csv(&s, buf.as_slice(), RateProvenance::Analytic).unwrap();
        assert_eq!(back, r);
    }
}
