//! Concentrations: monotone set functions `J` into `[-inf, 0]` with
//! `J(∅) = -inf` and `J(E) = 0`, plus diagnostics for weak maxitivity and
//! tightness.

use std::fmt;
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::entropy::{EntropyModel, PROXY};
use crate::error::{Error, Result};
use crate::extgrid::{lattice_ball_at, ExtendedValue, GridFunction, GridSpace, PointSet};
use crate::extgrid::{Finite, NegInf};

/// Exhaustive checks are used up to this many grid points.
pub const EXHAUSTIVE_LIMIT: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ConcentrationKind {
    MaxplusDensity,
    CapacityLimit,
    DerivedFromEntropy,
    Custom,
}

pub trait Concentration: Send + Sync {
    fn space(&self) -> &GridSpace;

    fn eval(&self, set: &PointSet) -> ExtendedValue;

    fn kind(&self) -> ConcentrationKind;

    /// Whether `J(A ∪ B) ≤ J(A) ∨ J(B)` holds by construction.
    fn is_maxitive(&self) -> bool {
        false
    }
}

/// `J(A) = max_{x∈A} j(x)`.
#[derive(Debug, Clone)]
pub struct MaxPlusDensity {
    density: GridFunction,
}

impl MaxPlusDensity {
    pub fn new(density: GridFunction) -> Result<Self> {
        if density.max_value() != Finite(0.0) {
            return Err(Error::Precondition("max-plus density must attain its maximum 0".into()));
        }
        Ok(Self { density })
    }

    pub fn density(&self) -> &GridFunction {
        &self.density
    }
}

impl Concentration for MaxPlusDensity {
    fn space(&self) -> &GridSpace {
        self.density.space()
    }

    fn eval(&self, set: &PointSet) -> ExtendedValue {
        set.iter().map(|i| self.density.value(i)).max().unwrap_or(NegInf)
    }

    fn kind(&self) -> ConcentrationKind {
        ConcentrationKind::MaxplusDensity
    }

    fn is_maxitive(&self) -> bool {
        true
    }
}

/// Concentration given by an arbitrary set function. Axioms are the caller's
/// responsibility except `J(∅) = -inf` and `J(E) = 0`, which are enforced.
pub struct SetFunction {
    space: GridSpace,
    eval: Arc<dyn Fn(&PointSet) -> ExtendedValue + Send + Sync>,
}

impl SetFunction {
    pub fn new(space: GridSpace, eval: impl Fn(&PointSet) -> ExtendedValue + Send + Sync + 'static) -> Self {
        Self {
            space,
            eval: Arc::new(eval),
        }
    }
}

impl fmt::Debug for SetFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SetFunction").field("space", &self.space).finish()
    }
}

impl Concentration for SetFunction {
    fn space(&self) -> &GridSpace {
        &self.space
    }

    fn eval(&self, set: &PointSet) -> ExtendedValue {
        if set.is_empty() {
            NegInf
        } else if set.count() == set.len() {
            Finite(0.0)
        } else {
            (self.eval)(set).min(Finite(0.0))
        }
    }

    fn kind(&self) -> ConcentrationKind {
        ConcentrationKind::Custom
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CapacityMode {
    Lower,
    Upper,
}

/// `J(A)` = tail-window min (lower) or max (upper) of `(1/n) log μ_n(A)`.
#[derive(Debug, Clone)]
pub struct CapacityLimit {
    model: EntropyModel,
    mode: CapacityMode,
}

impl CapacityLimit {
    pub fn mode(&self) -> CapacityMode {
        self.mode
    }

    /// Per-index values `(1/n) log μ_n(A)` over the tail window.
    pub fn window_values(&self, set: &PointSet) -> Vec<(u32, ExtendedValue)> {
        self.model
            .asymptotics()
            .tail()
            .iter()
            .map(|&n| {
                let v = self
                    .model
                    .log_capacity(set, n)
                    .expect("capacity support checked at construction");
                (n, v.scale(1.0 / n as f64))
            })
            .collect()
    }
}

impl Concentration for CapacityLimit {
    fn space(&self) -> &GridSpace {
        self.model.space()
    }

    fn eval(&self, set: &PointSet) -> ExtendedValue {
        if set.is_empty() {
            return NegInf;
        }
        let vals = self.window_values(set).into_iter().map(|v| v.1);
        let v = match self.mode {
            CapacityMode::Lower => vals.min(),
            CapacityMode::Upper => vals.max(),
        };
        v.unwrap_or(NegInf).min(Finite(0.0))
    }

    fn kind(&self) -> ConcentrationKind {
        ConcentrationKind::CapacityLimit
    }
}

pub fn capacity_limit_concentration(model: &EntropyModel, mode: CapacityMode) -> Result<CapacityLimit> {
    if !model.supports_capacity() {
        return Err(Error::CapacityUnsupported(model.id()));
    }
    Ok(CapacityLimit {
        model: model.clone(),
        mode,
    })
}

/// `J(A) = ψ(-∞·1_{A^c})` read off the asymptotic entropy of the masked zero
/// function.
#[derive(Debug, Clone)]
pub struct EntropyDerived {
    model: EntropyModel,
    mode: CapacityMode,
}

impl EntropyDerived {
    pub fn new(model: &EntropyModel, mode: CapacityMode) -> Self {
        Self {
            model: model.clone(),
            mode,
        }
    }
}

impl Concentration for EntropyDerived {
    fn space(&self) -> &GridSpace {
        self.model.space()
    }

    fn eval(&self, set: &PointSet) -> ExtendedValue {
        if set.is_empty() {
            return NegInf;
        }
        let f = GridFunction::constant(self.model.space(), 0.0).mask(set);
        let rec = self
            .model
            .asymptotic_entropy(&f)
            .expect("masked zero function lies on the model space");
        match self.mode {
            CapacityMode::Lower => rec.lower,
            CapacityMode::Upper => rec.upper,
        }
        .min(Finite(0.0))
    }

    fn kind(&self) -> ConcentrationKind {
        ConcentrationKind::DerivedFromEntropy
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub check: String,
    pub pass: bool,
    pub worst_violation: f64,
    pub witness: Option<String>,
    pub tolerance: f64,
    pub mode: String,
}

fn describe(space: &GridSpace, set: &PointSet) -> String {
    let pts: Vec<String> = set
        .iter()
        .map(|i| {
            let p = space.point(i);
            if p.len() == 1 {
                format!("{}", p[0])
            } else {
                format!("{p:?}")
            }
        })
        .collect();
    format!("{{{}}}", pts.join(", "))
}

fn excess(lhs: ExtendedValue, rhs: ExtendedValue) -> f64 {
    // Amount by which lhs exceeds rhs; 0 when lhs ≤ rhs.
    if lhs <= rhs {
        0.0
    } else {
        lhs.distance(rhs)
    }
}

/// Checks `J(C) ≤ max_i J(O_i)` for closed `C` covered by open `O_i`.
///
/// Up to [`EXHAUSTIVE_LIMIT`] points every nonempty `C` is tested against its
/// cover by singleton cells, which is the finest cover and hence the
/// hardest one for a monotone `J`. Larger grids sample `C` as unions of
/// lattice balls and covers as lattice balls centred in `C`.
pub fn check_weak_maxitivity(
    j: &dyn Concentration,
    cover_trials: usize,
    seed: u64,
    tolerance: f64,
) -> Result<CheckReport> {
    if cover_trials == 0 {
        return Err(Error::Precondition("cover_trials must be at least 1".into()));
    }
    let space = j.space();
    let len = space.len();
    let mut worst = 0.0f64;
    let mut witness = None;
    let record = |c: &PointSet, cover: &[PointSet], worst: &mut f64, witness: &mut Option<String>| {
        let lhs = j.eval(c);
        let rhs = cover.iter().map(|o| j.eval(o)).max().unwrap_or(NegInf);
        let v = excess(lhs, rhs);
        if v > *worst {
            *worst = v;
            let parts: Vec<String> = cover.iter().map(|o| describe(space, o)).collect();
            *witness = Some(format!("C = {}, cover = [{}]", describe(space, c), parts.join(", ")));
        }
    };

    let mode = if len <= EXHAUSTIVE_LIMIT {
        for bits in 1u64..(1u64 << len) {
            let c = PointSet::from_bits(len, bits);
            let cover: Vec<PointSet> = c.iter().map(|i| PointSet::from_indices(len, [i])).collect();
            record(&c, &cover, &mut worst, &mut witness);
        }
        "exhaustive"
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let max_r = space.max_step() * 6.0;
        for _ in 0..cover_trials {
            let mut c = PointSet::empty(len);
            for _ in 0..rng.gen_range(1..=3) {
                let center = rng.gen_range(0..len);
                c = c.union(&lattice_ball_at(space, center, rng.gen_range(0.0..max_r)));
            }
            let c = c.closure(space);
            let mut cover = Vec::new();
            let mut covered = PointSet::empty(len);
            let mut members: Vec<usize> = c.iter().collect();
            members.shuffle(&mut rng);
            for i in members {
                if covered.contains(i) {
                    continue;
                }
                let ball = lattice_ball_at(space, i, rng.gen_range(0.0..max_r)).interior(space);
                let ball = if ball.contains(i) { ball } else { PointSet::from_indices(len, [i]) };
                covered = covered.union(&ball);
                cover.push(ball);
            }
            record(&c, &cover, &mut worst, &mut witness);
        }
        "sampled"
    };
    Ok(CheckReport {
        check: "weak_maxitivity".into(),
        pass: worst <= tolerance,
        worst_violation: worst,
        witness,
        tolerance,
        mode: mode.into(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TightnessLevel {
    pub level: f64,
    pub found: bool,
    /// Half-width of the smallest sub-box `K` with `J(K^c) < -level`.
    pub half_width: Option<f64>,
    pub complement_value: Option<ExtendedValue>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TightnessReport {
    pub check: String,
    pub pass: bool,
    pub levels: Vec<TightnessLevel>,
    pub proxy: String,
}

/// For each level `m` searches nested sub-boxes `K` (centred at the box
/// centre, shrinking from one step inside the full box) for `J(K^c) < -m`.
pub fn check_tightness(j: &dyn Concentration, levels: &[f64]) -> Result<TightnessReport> {
    if levels.is_empty() {
        return Err(Error::Precondition("levels must be nonempty".into()));
    }
    let space = j.space();
    let center: Vec<f64> = space
        .lower()
        .iter()
        .zip(space.upper())
        .map(|(a, b)| 0.5 * (a + b))
        .collect();
    let steps_max = space
        .points_per_axis()
        .iter()
        .map(|&n| (n - 1) / 2)
        .min()
        .unwrap_or(0);
    let step = space.max_step();
    // candidate half-widths, largest first; the full box is excluded so K^c
    // is never empty.
    let candidates: Vec<(f64, PointSet)> = (0..steps_max)
        .rev()
        .map(|k| {
            let r = k as f64 * step;
            let k_set = PointSet::from_predicate(space, |x| {
                x.iter()
                    .zip(&center)
                    .all(|(xi, ci)| (xi - ci).abs() <= r + 1e-9 * step)
            });
            (r, k_set.complement())
        })
        .collect();
    let values: Vec<ExtendedValue> = candidates.iter().map(|(_, kc)| j.eval(kc)).collect();

    let levels: Vec<TightnessLevel> = levels
        .iter()
        .map(|&m| {
            // smallest K: scan from the smallest box outwards
            let hit = candidates
                .iter()
                .zip(&values)
                .rev()
                .find(|(_, v)| **v < Finite(-m));
            TightnessLevel {
                level: m,
                found: hit.is_some(),
                half_width: hit.map(|((r, _), _)| *r),
                complement_value: hit.map(|(_, v)| *v),
            }
        })
        .collect();
    Ok(TightnessReport {
        check: "tightness".into(),
        pass: levels.iter().all(|l| l.found),
        levels,
        proxy: PROXY.into(),
    })
}
