//! Per-index entropies `(1/n) log E_n(e^{nf})`, their asymptotic lower and
//! upper limits, growth-class membership, and numeric checks of the
//! representation of an asymptotic entropy as a convex integral.
//!
//! Limits are approximated from a finite ladder of indices: the lower and
//! upper asymptotic entropies are the minimum and maximum over the last
//! `tail_window` ladder entries. Every record carries a `proxy` field saying
//! so.

use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::concentration::{capacity_limit_concentration, CapacityMode};
use crate::cvxint::convex_integral;
use crate::error::{Error, Result};
use crate::extgrid::{check_same_space, ExtendedValue, GridFunction, GridSpace, Regularity};
use crate::extgrid::{Finite, NegInf, PosInf};
use crate::numeric::logsumexp;

pub const PROXY: &str = "tail-window";

/// Closed-form description of a test function, used by catalog models that
/// know the limiting entropy of some shapes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Shape {
    Constant(f64),
    /// `x ↦ <y, x>`
    Linear(Vec<f64>),
    /// `x ↦ |a| - 2|x - a|`
    InvertedV(Vec<f64>),
    Tabulated,
}

/// A sequence of sublinear expectations `E_n` on a grid space, evaluated in
/// entropy form.
pub trait SublinearSequence: Send + Sync + fmt::Debug {
    fn id(&self) -> String;

    fn space(&self) -> &GridSpace;

    /// `(1/n) log E_n(e^{nf})`; `+inf` when the expectation diverges.
    fn entropy_at(&self, f: &GridFunction, n: u32) -> Result<ExtendedValue>;

    fn supports_capacity(&self) -> bool {
        false
    }

    /// `log μ_n(A)` where `μ_n(A) = E_n(1_A)` and `A` is the union of the
    /// cells of the point-set.
    fn log_capacity(&self, _set: &crate::extgrid::PointSet, _n: u32) -> Result<ExtendedValue> {
        Err(Error::CapacityUnsupported(self.id()))
    }

    /// Exact limiting entropy for shapes the model can integrate in closed form.
    fn closed_form(&self, _shape: &Shape, _f: &GridFunction) -> Option<ExtendedValue> {
        None
    }
}

/// How limiting entropies of family members are obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum EntropyRoute {
    /// Catalog closed forms where available, tail-window proxy otherwise.
    #[default]
    Analytic,
    /// Always the tail-window proxy.
    Numeric,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Asymptotics {
    pub ladder: Vec<u32>,
    pub tail_window: usize,
    /// Tolerance on asymptotic quantities.
    pub tolerance: f64,
    /// Tolerance on identities that hold exactly at every index.
    pub exact_tolerance: f64,
}

impl Default for Asymptotics {
    fn default() -> Self {
        Self {
            ladder: vec![4, 8, 16, 32, 64, 128, 192, 224, 256],
            tail_window: 3,
            tolerance: 1e-2,
            exact_tolerance: 1e-8,
        }
    }
}

impl Asymptotics {
    pub fn validate(&self) -> Result<()> {
        if self.ladder.is_empty() || self.ladder.windows(2).any(|w| w[0] >= w[1]) || self.ladder[0] == 0 {
            return Err(Error::Precondition("n-ladder must be positive and strictly increasing".into()));
        }
        if self.tail_window == 0 || self.tail_window > self.ladder.len() {
            return Err(Error::Precondition(format!(
                "tail window {} must lie in 1..={}",
                self.tail_window,
                self.ladder.len()
            )));
        }
        Ok(())
    }

    pub fn tail(&self) -> &[u32] {
        &self.ladder[self.ladder.len() - self.tail_window..]
    }
}

/// A sequence of sublinear expectations together with the limit proxy used
/// to read off its asymptotic entropies.
#[derive(Debug, Clone)]
pub struct EntropyModel {
    sequence: Arc<dyn SublinearSequence>,
    asymptotics: Asymptotics,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AsymptoticRecord {
    pub lower: ExtendedValue,
    pub upper: ExtendedValue,
    pub converged: bool,
    pub values: Vec<(u32, ExtendedValue)>,
    pub proxy: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrowthRecord {
    pub in_class: bool,
    pub witness_t: f64,
    pub upper: ExtendedValue,
}

impl EntropyModel {
    pub fn new(sequence: Arc<dyn SublinearSequence>, asymptotics: Asymptotics) -> Result<Self> {
        asymptotics.validate()?;
        Ok(Self {
            sequence,
            asymptotics,
        })
    }

    pub fn with_asymptotics(&self, asymptotics: Asymptotics) -> Result<Self> {
        Self::new(self.sequence.clone(), asymptotics)
    }

    pub fn id(&self) -> String {
        self.sequence.id()
    }

    pub fn space(&self) -> &GridSpace {
        self.sequence.space()
    }

    pub fn sequence(&self) -> &Arc<dyn SublinearSequence> {
        &self.sequence
    }

    pub fn asymptotics(&self) -> &Asymptotics {
        &self.asymptotics
    }

    pub fn tolerance(&self) -> f64 {
        self.asymptotics.tolerance
    }

    pub fn supports_capacity(&self) -> bool {
        self.sequence.supports_capacity()
    }

    pub fn log_capacity(&self, set: &crate::extgrid::PointSet, n: u32) -> Result<ExtendedValue> {
        self.sequence.log_capacity(set, n)
    }

    pub fn closed_form(&self, shape: &Shape, f: &GridFunction) -> Option<ExtendedValue> {
        self.sequence.closed_form(shape, f)
    }

    /// Stabilized `(1/n) log E_n(e^{nf})`.
    pub fn entropy_at(&self, f: &GridFunction, n: u32) -> Result<ExtendedValue> {
        check_same_space(self.space(), f.space())?;
        if n == 0 {
            return Err(Error::Precondition("n must be positive".into()));
        }
        self.sequence.entropy_at(f, n)
    }

    /// Per-index entropies over the full ladder.
    pub fn sweep(&self, f: &GridFunction) -> Result<Vec<(u32, ExtendedValue)>> {
        self.evaluate(f, &self.asymptotics.ladder)
    }

    fn evaluate(&self, f: &GridFunction, ns: &[u32]) -> Result<Vec<(u32, ExtendedValue)>> {
        ns.par_iter()
            .map(|&n| Ok((n, self.entropy_at(f, n)?)))
            .collect()
    }

    /// Lower and upper asymptotic entropy from the tail window.
    pub fn asymptotic_entropy(&self, f: &GridFunction) -> Result<AsymptoticRecord> {
        let values = self.evaluate(f, self.asymptotics.tail())?;
        let mut lower = values.iter().map(|v| v.1).min().unwrap_or(NegInf);
        let mut upper = values.iter().map(|v| v.1).max().unwrap_or(NegInf);

        // A finite sup{f - I} never exceeds max f; sustained growth past it
        // means the limit is +inf.
        if let Finite(fmax) = f.max_value() {
            let rising = values.windows(2).all(|w| w[1].1 > w[0].1);
            if values.len() > 1 && rising && values.iter().all(|v| v.1 > Finite(fmax + 1.0)) {
                lower = PosInf;
                upper = PosInf;
            }
        }
        Ok(AsymptoticRecord {
            lower,
            upper,
            converged: lower.distance(upper) <= self.asymptotics.tolerance,
            values,
            proxy: PROXY.to_string(),
        })
    }

    /// Limiting entropy of a shaped function along the chosen route, returned
    /// as `(lower, upper)`.
    pub fn limit_entropy(
        &self,
        shape: &Shape,
        f: &GridFunction,
        route: EntropyRoute,
    ) -> Result<(ExtendedValue, ExtendedValue)> {
        if route == EntropyRoute::Analytic {
            if let Some(v) = self.closed_form(shape, f) {
                return Ok((v, v));
            }
        }
        let rec = self.asymptotic_entropy(f)?;
        Ok((rec.lower, rec.upper))
    }

    /// `f ∈ C_ψ̄` test: the upper asymptotic entropy of `t·f` is finite.
    pub fn growth_membership(&self, f: &GridFunction, t: f64) -> Result<GrowthRecord> {
        if !(t > 1.0) {
            return Err(Error::Precondition(format!("growth exponent t must exceed 1, got {t}")));
        }
        let rec = self.asymptotic_entropy(&f.scale(t))?;
        Ok(GrowthRecord {
            in_class: rec.upper < PosInf,
            witness_t: t,
            upper: rec.upper,
        })
    }

    /// Growth test with `t = 1.5`, falling back to `t = 1.1`.
    pub fn growth_membership_default(&self, f: &GridFunction) -> Result<GrowthRecord> {
        let first = self.growth_membership(f, 1.5)?;
        if first.in_class {
            return Ok(first);
        }
        self.growth_membership(f, 1.1)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailLemmaReport {
    pub check: String,
    pub pass: bool,
    pub levels: Vec<f64>,
    pub values: Vec<ExtendedValue>,
    pub floor: f64,
    pub proxy: String,
}

/// Upper asymptotic entropy of `f·1_{f≥m} - ∞·1_{f<m}` along the `m`-ladder;
/// passes when the sequence ends below `floor` and does not rise again after
/// its peak.
pub fn check_tail_lemma(
    model: &EntropyModel,
    f: &GridFunction,
    m_ladder: &[f64],
    floor: f64,
) -> Result<TailLemmaReport> {
    let growth = model.growth_membership_default(f)?;
    if !growth.in_class {
        return Err(Error::Precondition("tail lemma needs f in B_ψ̄ (growth test failed)".into()));
    }
    if m_ladder.is_empty() {
        return Err(Error::Precondition("m-ladder must be nonempty".into()));
    }
    let values = m_ladder
        .iter()
        .map(|&m| Ok(model.asymptotic_entropy(&f.mask(&f.superlevel(m)))?.upper))
        .collect::<Result<Vec<_>>>()?;
    let tol = model.tolerance();
    let peak = values
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.cmp(b.1))
        .map(|(i, _)| i)
        .unwrap_or(0);
    let settles = values[peak..]
        .windows(2)
        .all(|w| w[1] <= w[0].add_finite(tol));
    let last = *values.last().unwrap();
    Ok(TailLemmaReport {
        check: "tail_lemma".into(),
        pass: settles && last < Finite(floor),
        levels: m_ladder.to_vec(),
        values,
        floor,
        proxy: PROXY.into(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepresentationReport {
    pub check: String,
    pub pass: bool,
    pub entropy_upper: ExtendedValue,
    pub convex_integral: ExtendedValue,
    pub difference: f64,
    pub tolerance: f64,
    pub proxy: String,
}

/// Compares `ψ̄(f)` with the convex integral of `f` against the upper
/// capacity-limit concentration.
pub fn check_representation(model: &EntropyModel, f: &GridFunction) -> Result<RepresentationReport> {
    if f.regularity() != Regularity::Continuous {
        return Err(Error::Precondition("representation check needs a continuous function".into()));
    }
    if !model.growth_membership_default(f)?.in_class {
        return Err(Error::Precondition("representation check needs f in C_ψ̄".into()));
    }
    let upper = capacity_limit_concentration(model, CapacityMode::Upper)?;
    let integral = convex_integral(&upper, f)?;
    let entropy = model.asymptotic_entropy(f)?.upper;
    let difference = entropy.distance(integral);
    Ok(RepresentationReport {
        check: "representation".into(),
        pass: difference <= model.tolerance(),
        entropy_upper: entropy,
        convex_integral: integral,
        difference,
        tolerance: model.tolerance(),
        proxy: PROXY.into(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LargestTermReport {
    pub check: String,
    pub pass: bool,
    pub limsup_of_sum: f64,
    pub max_of_limsups: f64,
    pub liminf_of_sum: f64,
    pub liminf_bound: f64,
    pub tolerance: f64,
    pub ladder: Vec<u32>,
    pub proxy: String,
}

/// A nonnegative sequence given by `n ↦ ln a_n`.
pub type LogSequence<'a> = &'a (dyn Fn(u32) -> f64 + Sync);

/// Principle of the largest term on a ladder of indices, every index being
/// part of the tail window:
/// `limsup (1/n) log Σ a^i ≤ ∨ limsup (1/n) log a^i` and
/// `liminf (1/n) log Σ a^i ≤ liminf (1/n) log a^1 ∨ ∨_{i≥2} limsup (1/n) log a^i`.
pub fn check_largest_term(sequences: &[LogSequence], ladder: &[u32], tolerance: f64) -> Result<LargestTermReport> {
    if sequences.is_empty() || ladder.is_empty() {
        return Err(Error::Precondition("need at least one sequence and one index".into()));
    }
    let scaled = |g: LogSequence, n: u32| g(n) / n as f64;
    let sum_values: Vec<f64> = ladder
        .iter()
        .map(|&n| {
            let terms: Vec<f64> = sequences.iter().map(|g| g(n)).collect();
            logsumexp(&terms) / n as f64
        })
        .collect();
    let limsup = |vals: &[f64]| vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let liminf = |vals: &[f64]| vals.iter().cloned().fold(f64::INFINITY, f64::min);

    let per_seq: Vec<Vec<f64>> = sequences
        .iter()
        .map(|g| ladder.iter().map(|&n| scaled(*g, n)).collect())
        .collect();
    let max_of_limsups = per_seq.iter().map(|v| limsup(v)).fold(f64::NEG_INFINITY, f64::max);
    let others = per_seq[1..].iter().map(|v| limsup(v)).fold(f64::NEG_INFINITY, f64::max);
    let liminf_bound = liminf(&per_seq[0]).max(others);

    let limsup_of_sum = limsup(&sum_values);
    let liminf_of_sum = liminf(&sum_values);
    Ok(LargestTermReport {
        check: "largest_term".into(),
        pass: limsup_of_sum <= max_of_limsups + tolerance && liminf_of_sum <= liminf_bound + tolerance,
        limsup_of_sum,
        max_of_limsups,
        liminf_of_sum,
        liminf_bound,
        tolerance,
        ladder: ladder.to_vec(),
        proxy: PROXY.into(),
    })
}
