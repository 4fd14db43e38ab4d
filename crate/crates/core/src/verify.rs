//! LDP and Laplace-principle verification against a candidate rate, the
//! implication LDP ⇒ LP, and the end-to-end pipeline
//! tightness → conjugate → exposed points → richness → bounds.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::concentration::{capacity_limit_concentration, check_tightness, CapacityMode, Concentration, TightnessReport};
use crate::conjugate::{
    check_richness, conjugate_rate, default_richness_radii, detect_exposed, ExposedSet, ExposureParams, FamilyKind,
    RichnessReport, TestingFamily,
};
use crate::cvxint::{default_radii, minimal_rate, RateField};
use crate::entropy::{EntropyModel, EntropyRoute, PROXY};
use crate::error::{Error, Result};
use crate::extgrid::{check_same_space, lattice_ball_at, ExtendedValue, GridFunction, GridSpace, PointSet, Regularity};
use crate::extgrid::NegInf;

pub const DEFAULT_TOLERANCE: f64 = 2e-2;

fn excess(lhs: ExtendedValue, rhs: ExtendedValue) -> f64 {
    if lhs <= rhs {
        0.0
    } else {
        lhs.distance(rhs)
    }
}

#[derive(Debug, Clone)]
pub struct LabeledSet {
    pub label: String,
    pub set: PointSet,
}

#[derive(Debug, Clone)]
pub struct LabeledFunction {
    pub label: String,
    pub f: GridFunction,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SetRecord {
    pub set: String,
    /// `-inf I` over the interior, or over interior ∩ exposed when restricted.
    pub lower_bound: ExtendedValue,
    pub j_lower: ExtendedValue,
    pub j_upper: ExtendedValue,
    /// `-inf I` over the closure.
    pub upper_bound: ExtendedValue,
    pub lower_ok: bool,
    pub upper_ok: bool,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FunctionRecord {
    pub function: String,
    pub entropy_lower: ExtendedValue,
    pub entropy_upper: ExtendedValue,
    pub sup_f_minus_rate: ExtendedValue,
    pub skipped: bool,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub ldp_pass: bool,
    pub lp_pass: bool,
    /// Upper bounds on closed sets alone.
    pub upper_pass: bool,
    /// Lower bounds on open sets alone (restricted to exposed points when
    /// not certified).
    pub lower_pass: bool,
    pub status: String,
    pub tolerance: f64,
    pub proxy: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub model: String,
    pub n_ladder: Vec<u32>,
    pub tail_window: usize,
    pub grid: GridSpace,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub family: Option<String>,
}

impl Provenance {
    fn of(model: &EntropyModel, family: Option<&TestingFamily>) -> Self {
        Self {
            model: model.id(),
            n_ladder: model.asymptotics().ladder.clone(),
            tail_window: model.asymptotics().tail_window,
            grid: model.space().clone(),
            family: family.map(|f| f.spec().to_string()),
        }
    }
}

/// Minimal rates of `J̲` and `J̄` against the conjugate at nice exposed points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinimalRateRecord {
    pub pass: bool,
    pub points_checked: usize,
    pub worst_lower_gap: f64,
    pub worst_upper_gap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FiniteDimensionReport {
    pub applicable: bool,
    /// Linear entropies converge (lower = upper) wherever finite.
    pub limits_exist: bool,
    /// The parameter 0 and its grid neighbours have finite entropy.
    pub zero_interior: bool,
    /// Lower semicontinuity is declared, not verified.
    pub lsc_declared: bool,
    pub note: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Stages {
    pub tightness: TightnessReport,
    pub conjugate_skipped_members: usize,
    pub exposed_points: usize,
    pub nice_points: usize,
    pub richness: RichnessReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub minimal_rate_match: Option<MinimalRateRecord>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub finite_dimension: Option<FiniteDimensionReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LdpReport {
    pub summary: Summary,
    pub sets: Vec<SetRecord>,
    pub functions: Vec<FunctionRecord>,
    pub provenance: Provenance,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stages: Option<Stages>,
}

impl LdpReport {
    /// Recomputes every pass flag from the stored numbers.
    pub fn is_consistent(&self) -> bool {
        let tol = self.summary.tolerance;
        let sets_ok = self.sets.iter().all(|r| {
            r.lower_ok == (excess(r.lower_bound, r.j_lower) <= tol)
                && r.upper_ok == (excess(r.j_upper, r.upper_bound) <= tol)
                && r.pass == (r.lower_ok && r.upper_ok && r.j_lower <= r.j_upper)
        });
        let fns_ok = self.functions.iter().all(|r| {
            r.skipped
                || r.pass
                    == (r.entropy_upper.distance(r.sup_f_minus_rate) <= tol
                        && r.entropy_lower.distance(r.sup_f_minus_rate) <= tol)
        });
        sets_ok && fns_ok
    }
}

fn set_records(
    model: &EntropyModel,
    rate: &RateField,
    sets: &[LabeledSet],
    tolerance: f64,
    exposed: Option<&PointSet>,
) -> Result<Vec<SetRecord>> {
    let lower = capacity_limit_concentration(model, CapacityMode::Lower)?;
    let upper = capacity_limit_concentration(model, CapacityMode::Upper)?;
    let space = model.space();
    Ok(sets
        .par_iter()
        .map(|s| {
            let mut interior = s.set.interior(space);
            if let Some(e) = exposed {
                interior = interior.intersection(e);
            }
            let closure = s.set.closure(space);
            let lower_bound = -rate.inf_over(&interior);
            let upper_bound = -rate.inf_over(&closure);
            let j_lower = lower.eval(&s.set);
            let j_upper = upper.eval(&s.set);
            let lower_ok = excess(lower_bound, j_lower) <= tolerance;
            let upper_ok = excess(j_upper, upper_bound) <= tolerance;
            SetRecord {
                set: s.label.clone(),
                lower_bound,
                j_lower,
                j_upper,
                upper_bound,
                lower_ok,
                upper_ok,
                pass: lower_ok && upper_ok && j_lower <= j_upper,
            }
        })
        .collect())
}

fn summary(sets: &[SetRecord], functions: &[FunctionRecord], tolerance: f64, status: Option<&str>) -> Summary {
    let ldp_pass = !sets.is_empty() && sets.iter().all(|r| r.pass);
    let lp_pass = !functions.is_empty() && functions.iter().all(|r| r.pass || r.skipped);
    Summary {
        ldp_pass,
        lp_pass,
        upper_pass: sets.iter().all(|r| r.upper_ok),
        lower_pass: sets.iter().all(|r| r.lower_ok),
        status: status.map(str::to_string).unwrap_or_else(|| {
            if ldp_pass { "pass" } else { "fail" }.to_string()
        }),
        tolerance,
        proxy: PROXY.into(),
    }
}

/// Checks `-inf_{int A} I ≤ J̲(A) + tol` and `J̄(A) ≤ -inf_{cl A} I + tol` on
/// every set, with `J̲`, `J̄` the capacity-limit concentrations.
pub fn verify_ldp(model: &EntropyModel, rate: &RateField, sets: &[LabeledSet], tolerance: f64) -> Result<LdpReport> {
    if sets.is_empty() {
        return Err(Error::Precondition("set battery is empty".into()));
    }
    check_same_space(model.space(), rate.space())?;
    let records = set_records(model, rate, sets, tolerance, None)?;
    Ok(LdpReport {
        summary: summary(&records, &[], tolerance, None),
        sets: records,
        functions: Vec::new(),
        provenance: Provenance::of(model, None),
        stages: None,
    })
}

fn function_records(model: &EntropyModel, rate: &RateField, functions: &[LabeledFunction], tolerance: f64) -> Result<Vec<FunctionRecord>> {
    functions
        .par_iter()
        .map(|lf| {
            let growth = model.growth_membership_default(&lf.f)?;
            let sup = rate.sup_of_difference(&lf.f);
            if !growth.in_class {
                return Ok(FunctionRecord {
                    function: lf.label.clone(),
                    entropy_lower: NegInf,
                    entropy_upper: NegInf,
                    sup_f_minus_rate: sup,
                    skipped: true,
                    pass: false,
                });
            }
            let rec = model.asymptotic_entropy(&lf.f)?;
            Ok(FunctionRecord {
                function: lf.label.clone(),
                entropy_lower: rec.lower,
                entropy_upper: rec.upper,
                sup_f_minus_rate: sup,
                skipped: false,
                pass: rec.upper.distance(sup) <= tolerance && rec.lower.distance(sup) <= tolerance,
            })
        })
        .collect()
}

/// Checks `ψ̲(f) ≈ ψ̄(f) ≈ sup(f - I)` for every function in the growth class;
/// others are reported as skipped.
pub fn verify_lp(model: &EntropyModel, rate: &RateField, functions: &[LabeledFunction], tolerance: f64) -> Result<LdpReport> {
    check_same_space(model.space(), rate.space())?;
    let records = function_records(model, rate, functions, tolerance)?;
    let mut s = summary(&[], &records, tolerance, None);
    s.status = if s.lp_pass { "pass" } else { "fail" }.into();
    Ok(LdpReport {
        summary: s,
        sets: Vec::new(),
        functions: records,
        provenance: Provenance::of(model, None),
        stages: None,
    })
}

fn coarse_indices(points: usize, count: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..count)
        .map(|k| ((points - 1) as f64 * k as f64 / (count - 1) as f64).round() as usize)
        .collect();
    idx.dedup();
    idx
}

/// Boxes with corners on a coarse sub-grid (11 points per axis in one
/// dimension, 5 otherwise) plus complements of balls of radius 0.5 and 1
/// around the coarse points.
pub fn default_set_battery(space: &GridSpace) -> Vec<LabeledSet> {
    let per_axis = if space.dim() == 1 { 11 } else { 5 };
    let axes: Vec<Vec<usize>> = space
        .points_per_axis()
        .iter()
        .map(|&n| coarse_indices(n, per_axis.min(n)))
        .collect();
    let mut boxes: Vec<Vec<(usize, usize)>> = vec![Vec::new()];
    for ax in &axes {
        let pairs: Vec<(usize, usize)> = ax
            .iter()
            .enumerate()
            .flat_map(|(i, &a)| ax[i..].iter().map(move |&b| (a, b)))
            .collect();
        boxes = boxes
            .into_iter()
            .flat_map(|prefix| {
                pairs.iter().map(move |&p| {
                    let mut v = prefix.clone();
                    v.push(p);
                    v
                })
            })
            .collect();
    }
    let fmt = |axis: usize, i: usize| {
        let v = space.axis_value(axis, i);
        format!("{}", (v * 1e9).round() / 1e9)
    };
    let mut out: Vec<LabeledSet> = boxes
        .iter()
        .map(|b| {
            let set = PointSet::from_mask(
                (0..space.len())
                    .map(|i| space.coords(i).iter().zip(b).all(|(c, (lo, hi))| c >= lo && c <= hi))
                    .collect(),
            );
            let label = b
                .iter()
                .enumerate()
                .map(|(axis, (lo, hi))| format!("[{},{}]", fmt(axis, *lo), fmt(axis, *hi)))
                .collect::<Vec<_>>()
                .join("x");
            LabeledSet { label, set }
        })
        .collect();
    let centers: Vec<usize> = (0..space.len())
        .filter(|&i| space.coords(i).iter().zip(&axes).all(|(c, ax)| ax.contains(c)))
        .collect();
    for r in [0.5, 1.0] {
        for &c in &centers {
            let set = lattice_ball_at(space, c, r).complement();
            if set.is_empty() {
                continue;
            }
            let center: Vec<String> = space.point(c).iter().map(|v| format!("{}", (v * 1e9).round() / 1e9)).collect();
            out.push(LabeledSet {
                label: format!("complement of ball({}, {r})", center.join(",")),
                set,
            });
        }
    }
    out
}

/// Linear and inverted-v members plus seeded random piecewise-linear
/// functions with slopes in `[-0.5, 0.5]`, `count` functions in total.
pub fn default_function_battery(space: &GridSpace, count: usize, seed: u64) -> Result<Vec<LabeledFunction>> {
    let mut out = Vec::new();
    let half: f64 = space
        .lower()
        .iter()
        .zip(space.upper())
        .map(|(a, b)| 0.5 * (b - a))
        .fold(f64::INFINITY, f64::min);
    let center: Vec<f64> = space.lower().iter().zip(space.upper()).map(|(a, b)| 0.5 * (a + b)).collect();
    for y in [-0.5, 0.25, 0.5] {
        out.push(LabeledFunction {
            label: format!("linear y={y}"),
            f: GridFunction::from_fn(space, Regularity::Continuous, |x| x.iter().zip(&center).map(|(xi, ci)| y * (xi - ci)).sum())?,
        });
    }
    for frac in [-0.5, 0.0, 1.0 / 3.0, 2.0 / 3.0] {
        let a: Vec<f64> = center.iter().map(|c| c + frac * half).collect();
        let na = a.iter().map(|t| t * t).sum::<f64>().sqrt();
        out.push(LabeledFunction {
            label: format!("inverted-v a={:?}", a.iter().map(|t| (t * 1e9).round() / 1e9).collect::<Vec<_>>()),
            f: GridFunction::from_fn(space, Regularity::Continuous, |x| {
                na - 2.0 * x.iter().zip(&a).map(|(p, q)| (p - q) * (p - q)).sum::<f64>().sqrt()
            })?,
        });
    }
    out.push(LabeledFunction {
        label: "constant 1".into(),
        f: GridFunction::constant(space, 1.0).with_regularity(Regularity::Continuous),
    });
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut k = 0;
    while out.len() < count {
        // Piecewise linear along the first axis through random knots.
        let lo = space.lower()[0];
        let hi = space.upper()[0];
        let mut knots: Vec<f64> = (0..4).map(|_| rng.gen_range(lo..hi)).collect();
        knots.push(lo);
        knots.push(hi);
        knots.sort_by(f64::total_cmp);
        let mut vals = vec![rng.gen_range(-1.0..1.0)];
        for w in knots.windows(2) {
            let slope = rng.gen_range(-0.5..0.5);
            vals.push(vals.last().unwrap() + slope * (w[1] - w[0]));
        }
        let f = GridFunction::from_fn(space, Regularity::Continuous, |x| {
            let t = x[0];
            let j = knots.windows(2).position(|w| t <= w[1]).unwrap_or(knots.len() - 2);
            let (a, b) = (knots[j], knots[j + 1]);
            let s = if b > a { (t - a) / (b - a) } else { 0.0 };
            vals[j] + s * (vals[j + 1] - vals[j])
        })?;
        out.push(LabeledFunction {
            label: format!("random piecewise-linear #{k}"),
            f,
        });
        k += 1;
    }
    out.truncate(count);
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub route: EntropyRoute,
    pub exposure: Option<ExposureParams>,
    pub richness_radii: Option<Vec<f64>>,
    pub tightness_levels: Vec<f64>,
    pub tolerance: f64,
    pub function_count: usize,
    pub seed: u64,
    pub finite_dimension_conditions: bool,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            route: EntropyRoute::Analytic,
            exposure: None,
            richness_radii: None,
            tightness_levels: vec![0.5, 1.0, 2.0],
            tolerance: DEFAULT_TOLERANCE,
            function_count: 20,
            seed: 0,
            finite_dimension_conditions: false,
        }
    }
}

/// Everything the pipeline produced, for writing out alongside the report.
#[derive(Debug, Clone)]
pub struct PipelineOutcome {
    pub report: LdpReport,
    pub rate: RateField,
    pub exposed: ExposedSet,
}

fn finite_dimension(family: &TestingFamily, conj: &crate::conjugate::Conjugate, tolerance: f64) -> FiniteDimensionReport {
    if family.kind() != FamilyKind::Linear {
        return FiniteDimensionReport {
            applicable: false,
            limits_exist: false,
            zero_interior: false,
            lsc_declared: false,
            note: "only defined for linear families".into(),
        };
    }
    let limits_exist = conj
        .entropies
        .iter()
        .all(|e| !e.upper.is_finite() || e.lower.distance(e.upper) <= tolerance);
    let zero = family.params().iter().position(|p| p.iter().all(|v| *v == 0.0));
    let zero_interior = zero.is_some_and(|z| {
        let pz = &family.params()[z];
        let step = family
            .params()
            .iter()
            .filter(|p| *p != pz)
            .map(|p| p.iter().zip(pz).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
            .fold(f64::INFINITY, f64::min);
        family.params().iter().zip(&conj.entropies).all(|(p, e)| {
            let d = p.iter().zip(pz).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            d > step * (1.0 + 1e-9) || e.upper.is_finite()
        })
    });
    FiniteDimensionReport {
        applicable: true,
        limits_exist,
        zero_interior,
        lsc_declared: true,
        note: "sub-checks only; richness remains the ground truth".into(),
    }
}

/// Runs tightness, conjugate, exposed points and richness. When all pass the
/// full LDP and LP are checked against the conjugate, together with
/// `I_min(J̲) = I_min(J̄) = ψ̄*` at nice exposed points; otherwise only the
/// upper bound on closed sets and the lower bound over interior ∩ exposed
/// are reported and the result is "not certified".
pub fn gartner_ellis_pipeline(model: &EntropyModel, family: &TestingFamily, config: &PipelineConfig) -> Result<PipelineOutcome> {
    let space = model.space();
    let tol = config.tolerance;
    let upper = capacity_limit_concentration(model, CapacityMode::Upper)?;
    let tightness = check_tightness(&upper, &config.tightness_levels)?;
    let conj = conjugate_rate(model, family, config.route)?;
    let rate = conj.rate_field(model.asymptotics().exact_tolerance)?;
    let exposure = config.exposure.unwrap_or_else(|| ExposureParams::default_for(space));
    let exposed = detect_exposed(model, family, &conj, exposure)?;
    let radii = config.richness_radii.clone().unwrap_or_else(|| default_richness_radii(space));
    let richness = check_richness(&rate, &exposed, &radii, tol)?;
    let sets = default_set_battery(space);

    let finite_dimension = config
        .finite_dimension_conditions
        .then(|| finite_dimension(family, &conj, model.tolerance()));

    let (records, functions, minimal_rate_match, status) = if tightness.pass && richness.pass {
        let records = set_records(model, &rate, &sets, tol, None)?;
        let battery = default_function_battery(space, config.function_count, config.seed)?;
        let functions = function_records(model, &rate, &battery, tol)?;
        let lower = capacity_limit_concentration(model, CapacityMode::Lower)?;
        let radii = default_radii(space);
        let i_lower = minimal_rate(&lower, &radii)?;
        let i_upper = minimal_rate(&upper, &radii)?;
        let nice = exposed.nice_set();
        let gap = |i: &RateField| nice.iter().map(|x| i.value(x).distance(rate.value(x))).fold(0.0, f64::max);
        let (gl, gu) = (gap(&i_lower), gap(&i_upper));
        let matched = MinimalRateRecord {
            pass: gl <= tol && gu <= tol,
            points_checked: nice.count(),
            worst_lower_gap: gl,
            worst_upper_gap: gu,
        };
        let certified = records.iter().all(|r| r.pass) && functions.iter().all(|r| r.pass || r.skipped) && matched.pass;
        let status = if certified { "certified" } else { "fail" };
        (records, functions, Some(matched), status)
    } else {
        let records = set_records(model, &rate, &sets, tol, Some(&exposed.set()))?;
        (records, Vec::new(), None, "not certified")
    };
    let mut s = summary(&records, &functions, tol, Some(status));
    if minimal_rate_match.is_none() {
        s.ldp_pass = false;
        s.lp_pass = false;
    }
    let stages = Stages {
        tightness,
        conjugate_skipped_members: conj.skipped,
        exposed_points: exposed.count(),
        nice_points: exposed.nice_set().count(),
        richness,
        minimal_rate_match,
        finite_dimension,
    };
    Ok(PipelineOutcome {
        report: LdpReport {
            summary: s,
            sets: records,
            functions,
            provenance: Provenance::of(model, Some(family)),
            stages: Some(stages),
        },
        rate,
        exposed,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImplicationReport {
    pub check: String,
    pub ldp_pass: bool,
    pub lp_pass: bool,
    pub holds: bool,
    pub vacuous: bool,
    pub tolerance: f64,
    pub message: String,
}

/// Whenever the LDP passes on `sets`, the LP must pass on `functions` with
/// the combined tolerance `tol + entropy tolerance`.
pub fn check_ldp_implies_lp(
    model: &EntropyModel,
    rate: &RateField,
    sets: &[LabeledSet],
    functions: &[LabeledFunction],
    tolerance: f64,
) -> Result<ImplicationReport> {
    let ldp = verify_ldp(model, rate, sets, tolerance)?;
    let combined = tolerance + model.tolerance();
    let lp = verify_lp(model, rate, functions, combined)?;
    let (ldp_pass, lp_pass) = (ldp.summary.ldp_pass, lp.summary.lp_pass);
    let holds = !ldp_pass || lp_pass;
    let message = match (ldp_pass, lp_pass) {
        (false, _) => "LDP fails; implication holds vacuously".to_string(),
        (true, true) => "LDP and LP both pass".to_string(),
        (true, false) => {
            let bad: Vec<&str> = lp
                .functions
                .iter()
                .filter(|r| !r.pass && !r.skipped)
                .map(|r| r.function.as_str())
                .collect();
            format!("LDP passes but LP fails on {bad:?}: implementation bug")
        }
    };
    Ok(ImplicationReport {
        check: "ldp_implies_lp".into(),
        ldp_pass,
        lp_pass,
        holds,
        vacuous: !ldp_pass,
        tolerance: combined,
        message,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::{gaussian_model, laplace_model};
    use crate::entropy::Asymptotics;
    use crate::extgrid::Finite;

    fn laplace() -> EntropyModel {
        laplace_model(&GridSpace::interval(-3.0, 3.0, 601).unwrap(), Asymptotics::default()).unwrap()
    }

    fn abs_rate(space: &GridSpace) -> RateField {
        RateField::analytic(space, |x| x[0].abs()).unwrap()
    }

    fn interval(space: &GridSpace, a: f64, b: f64) -> LabeledSet {
        LabeledSet {
            label: format!("[{a},{b}]"),
            set: PointSet::from_predicate(space, |x| x[0] >= a - 1e-9 && x[0] <= b + 1e-9),
        }
    }

    #[test]
    fn laplace_interval_sandwich() {
        let m = laplace();
        let r = verify_ldp(&m, &abs_rate(m.space()), &[interval(m.space(), 1.0, 2.0)], DEFAULT_TOLERANCE).unwrap();
        assert!(r.summary.ldp_pass, "{r:?}");
        let rec = &r.sets[0];
        assert!((rec.j_upper.to_f64() + 1.0).abs() < 1e-2);
        assert!(r.is_consistent());
    }

    #[test]
    fn whole_box_is_all_zero() {
        let m = laplace();
        let r = verify_ldp(&m, &abs_rate(m.space()), &[interval(m.space(), -3.0, 3.0)], 1e-9).unwrap();
        let rec = &r.sets[0];
        assert_eq!(rec.j_lower, Finite(0.0));
        assert_eq!(rec.j_upper, Finite(0.0));
        assert_eq!(rec.upper_bound, Finite(0.0));
        assert!(rec.pass);
    }

    #[test]
    fn wrong_rate_fails_lower_bound() {
        let m = laplace();
        let rate = RateField::analytic(m.space(), |x| 0.5 * x[0] * x[0]).unwrap();
        let r = verify_ldp(&m, &rate, &[interval(m.space(), 1.0, 2.0)], DEFAULT_TOLERANCE).unwrap();
        assert!(!r.summary.ldp_pass);
        assert!(!r.sets[0].lower_ok);
    }

    #[test]
    fn lp_examples() {
        let m = laplace();
        let s = m.space().clone();
        let fns = vec![
            LabeledFunction {
                label: "0.5x".into(),
                f: GridFunction::from_fn(&s, Regularity::Continuous, |x| 0.5 * x[0]).unwrap(),
            },
            LabeledFunction {
                label: "const".into(),
                f: GridFunction::constant(&s, 2.0),
            },
            LabeledFunction {
                label: "f_1".into(),
                f: GridFunction::from_fn(&s, Regularity::Continuous, |x| 1.0 - 2.0 * (x[0] - 1.0).abs()).unwrap(),
            },
            LabeledFunction {
                label: "1.2x".into(),
                f: GridFunction::from_fn(&s, Regularity::Continuous, |x| 1.2 * x[0]).unwrap(),
            },
        ];
        let r = verify_lp(&m, &abs_rate(&s), &fns, DEFAULT_TOLERANCE).unwrap();
        assert!(r.summary.lp_pass, "{:?}", r.functions);
        assert!(r.functions[3].skipped);
        assert!(r.is_consistent());
    }

    #[test]
    fn battery_shapes() {
        let s = GridSpace::interval(-3.0, 3.0, 601).unwrap();
        let sets = default_set_battery(&s);
        assert_eq!(sets.len(), 66 + 22);
        let f = default_function_battery(&s, 20, 7).unwrap();
        assert_eq!(f.len(), 20);
        let again = default_function_battery(&s, 20, 7).unwrap();
        assert_eq!(f[19].f, again[19].f);
    }

    #[test]
    fn implication_examples() {
        let m = laplace();
        let s = m.space().clone();
        let sets = default_set_battery(&s);
        let fns = default_function_battery(&s, 10, 1).unwrap();
        let good = check_ldp_implies_lp(&m, &abs_rate(&s), &sets, &fns, DEFAULT_TOLERANCE).unwrap();
        assert!(good.ldp_pass && good.lp_pass && good.holds);
        let wrong = RateField::analytic(&s, |x| 0.5 * x[0] * x[0]).unwrap();
        let vac = check_ldp_implies_lp(&m, &wrong, &sets, &fns, DEFAULT_TOLERANCE).unwrap();
        assert!(vac.vacuous && vac.holds);
    }

    #[test]
    fn pipeline_laplace_inverted_v_certifies() {
        let m = laplace();
        let fam = TestingFamily::inverted_v(m.space(), -3.0, 3.0, 0.01).unwrap();
        let out = gartner_ellis_pipeline(&m, &fam, &PipelineConfig::default()).unwrap();
        assert_eq!(out.report.summary.status, "certified", "{:?}", out.report.stages);
        assert!(out.report.summary.ldp_pass && out.report.summary.lp_pass);
    }

    #[test]
    fn pipeline_laplace_linear_not_certified() {
        let m = laplace();
        let fam = TestingFamily::linear(m.space(), -0.95, 0.95, 0.05).unwrap();
        let cfg = PipelineConfig {
            finite_dimension_conditions: true,
            ..PipelineConfig::default()
        };
        let out = gartner_ellis_pipeline(&m, &fam, &cfg).unwrap();
        assert_eq!(out.report.summary.status, "not certified");
        assert!(!out.report.summary.ldp_pass);
        assert!(out.report.summary.upper_pass);
        let st = out.report.stages.unwrap();
        assert!(!st.richness.pass);
        let fd = st.finite_dimension.unwrap();
        assert!(fd.applicable && fd.limits_exist && fd.zero_interior);
        // Sets away from the origin only get the trivial lower bound.
        let far = out.report.sets.iter().find(|r| r.set == "[1.2,2.4]").unwrap();
        assert_eq!(far.lower_bound, NegInf);
    }

    #[test]
    fn gaussian_with_quadratic_rate() {
        let m = gaussian_model(&GridSpace::interval(-4.0, 4.0, 801).unwrap(), Asymptotics::default()).unwrap();
        let s = m.space().clone();
        let rate = RateField::analytic(&s, |x| 0.5 * x[0] * x[0]).unwrap();
        let r = check_ldp_implies_lp(
            &m,
            &rate,
            &default_set_battery(&s),
            &default_function_battery(&s, 10, 2).unwrap(),
            DEFAULT_TOLERANCE,
        )
        .unwrap();
        assert!(r.ldp_pass && r.lp_pass, "{r:?}");
    }
}
