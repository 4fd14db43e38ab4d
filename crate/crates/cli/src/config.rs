//! Run configuration: built-in defaults, overridden by a TOML file, overridden
//! by command-line flags. The resolved config and the source of every key are
//! echoed into each output's provenance.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use clap::Args;
use serde::{Deserialize, Serialize};

use ldplab_core::catalog::{default_space, model_from_id};
use ldplab_core::conjugate::{ExposureParams, TestingFamily, DEFAULT_MARGIN};
use ldplab_core::entropy::{Asymptotics, EntropyModel, EntropyRoute, Shape};
use ldplab_core::extgrid::{GridFunction, GridSpace, Regularity};
use ldplab_core::verify::{PipelineConfig, DEFAULT_TOLERANCE};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridConfig {
    pub lower: f64,
    pub upper: f64,
    pub points: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub model: String,
    pub grid: Option<GridConfig>,
    pub family: Option<String>,
    pub function: Option<String>,
    pub ladder: Vec<u32>,
    pub tail_window: usize,
    pub tolerance: f64,
    pub exact_tolerance: f64,
    pub verify_tolerance: f64,
    pub margin: f64,
    pub radius: Option<f64>,
    pub route: EntropyRoute,
    pub function_count: usize,
    pub seed: u64,
    pub finite_dimension_conditions: bool,
    pub out_dir: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        let a = Asymptotics::default();
        Self {
            model: "laplace".into(),
            grid: None,
            family: None,
            function: None,
            ladder: a.ladder,
            tail_window: a.tail_window,
            tolerance: a.tolerance,
            exact_tolerance: a.exact_tolerance,
            verify_tolerance: DEFAULT_TOLERANCE,
            margin: DEFAULT_MARGIN,
            radius: None,
            route: EntropyRoute::Analytic,
            function_count: 20,
            seed: 0,
            finite_dimension_conditions: false,
            out_dir: PathBuf::from("out"),
        }
    }
}

/// Same keys as [`RunConfig`], all optional; used for the file and the flags.
#[derive(Debug, Clone, Default, Deserialize, Args)]
#[serde(deny_unknown_fields)]
pub struct Overrides {
    /// Config file (TOML) with any of the keys below
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    /// Model id: laplace, gaussian, gaussian(m), robust:gaussian(-1),gaussian(+1)
    #[arg(long)]
    pub model: Option<String>,
    /// Working box as lower,upper,points
    #[arg(long, allow_hyphen_values = true, value_parser = parse_grid)]
    pub grid: Option<GridConfig>,
    /// Testing family: linear:lo,hi,step | invv:lo,hi,step | custom:<file>
    #[arg(long, allow_hyphen_values = true)]
    pub family: Option<String>,
    /// Single function: const:c | linear:y | invv:a | csv:<file>
    #[arg(long = "f", allow_hyphen_values = true)]
    pub function: Option<String>,
    /// Index ladder, comma separated
    #[arg(long, value_delimiter = ',')]
    pub ladder: Option<Vec<u32>>,
    #[arg(long)]
    pub tail_window: Option<usize>,
    /// Tolerance on asymptotic entropies
    #[arg(long)]
    pub tolerance: Option<f64>,
    #[arg(long)]
    pub exact_tolerance: Option<f64>,
    /// Tolerance of the LDP/LP bound checks
    #[arg(long)]
    pub verify_tolerance: Option<f64>,
    #[arg(long)]
    pub margin: Option<f64>,
    #[arg(long)]
    pub radius: Option<f64>,
    /// analytic or numeric
    #[arg(long, value_parser = parse_route)]
    pub route: Option<EntropyRoute>,
    #[arg(long)]
    pub function_count: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub finite_dimension_conditions: Option<bool>,
    #[arg(long = "out")]
    pub out_dir: Option<PathBuf>,
}

fn parse_grid(s: &str) -> Result<GridConfig, String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    if parts.len() != 3 {
        return Err("expected lower,upper,points".into());
    }
    let lower = parts[0].parse::<f64>().map_err(|e| e.to_string())?;
    let upper = parts[1].parse::<f64>().map_err(|e| e.to_string())?;
    let points = parts[2].parse::<usize>().map_err(|e| e.to_string())?;
    Ok(GridConfig { lower, upper, points })
}

fn parse_route(s: &str) -> Result<EntropyRoute, String> {
    match s {
        "analytic" => Ok(EntropyRoute::Analytic),
        "numeric" => Ok(EntropyRoute::Numeric),
        other => Err(format!("unknown route `{other}`")),
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Resolved {
    pub config: RunConfig,
    /// `flag`, `file` or `default` for every key.
    pub sources: BTreeMap<String, String>,
    pub config_file: Option<String>,
}

macro_rules! overlay {
    ($cfg:ident, $src:ident, $ov:expr, $tag:expr, [$($field:ident),*], [$($opt:ident),*]) => {
        $(
            if let Some(v) = $ov.$field.clone() {
                $cfg.$field = v;
                $src.insert(stringify!($field).to_string(), $tag.to_string());
            }
        )*
        $(
            if let Some(v) = $ov.$opt.clone() {
                $cfg.$opt = Some(v);
                $src.insert(stringify!($opt).to_string(), $tag.to_string());
            }
        )*
    };
}

fn apply(cfg: &mut RunConfig, sources: &mut BTreeMap<String, String>, ov: &Overrides, tag: &str) {
    overlay!(
        cfg,
        sources,
        ov,
        tag,
        [model, ladder, tail_window, tolerance, exact_tolerance, verify_tolerance, margin, route, function_count, seed, finite_dimension_conditions, out_dir],
        [grid, family, function, radius]
    );
}

const KEYS: [&str; 16] = [
    "model",
    "grid",
    "family",
    "function",
    "ladder",
    "tail_window",
    "tolerance",
    "exact_tolerance",
    "verify_tolerance",
    "margin",
    "radius",
    "route",
    "function_count",
    "seed",
    "finite_dimension_conditions",
    "out_dir",
];

pub fn resolve(flags: &Overrides) -> anyhow::Result<Resolved> {
    let mut config = RunConfig::default();
    let mut sources: BTreeMap<String, String> = KEYS.iter().map(|k| (k.to_string(), "default".to_string())).collect();
    let mut config_file = None;
    if let Some(path) = &flags.config {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        let file: Overrides = toml::from_str(&text).with_context(|| format!("parsing config {}", path.display()))?;
        apply(&mut config, &mut sources, &file, "file");
        config_file = Some(path.display().to_string());
    }
    apply(&mut config, &mut sources, flags, "flag");
    if config.ladder.is_empty() {
        bail!("ladder must not be empty");
    }
    Ok(Resolved {
        config,
        sources,
        config_file,
    })
}

impl RunConfig {
    pub fn asymptotics(&self) -> Asymptotics {
        Asymptotics {
            ladder: self.ladder.clone(),
            tail_window: self.tail_window,
            tolerance: self.tolerance,
            exact_tolerance: self.exact_tolerance,
        }
    }

    pub fn space(&self) -> anyhow::Result<GridSpace> {
        Ok(match &self.grid {
            Some(g) => GridSpace::interval(g.lower, g.upper, g.points)?,
            None => default_space(&self.model)?,
        })
    }

    pub fn model(&self) -> anyhow::Result<EntropyModel> {
        Ok(model_from_id(&self.model, &self.space()?, self.asymptotics())?)
    }

    pub fn family(&self, space: &GridSpace) -> anyhow::Result<TestingFamily> {
        let spec = self.family.as_deref().context("a testing family is required (--family)")?;
        Ok(TestingFamily::parse(spec, space)?)
    }

    pub fn exposure(&self, space: &GridSpace) -> ExposureParams {
        ExposureParams {
            margin: self.margin,
            radius: self.radius.unwrap_or(2.0 * space.max_step()),
        }
    }

    pub fn pipeline(&self) -> PipelineConfig {
        PipelineConfig {
            route: self.route,
            exposure: None,
            richness_radii: None,
            tolerance: self.verify_tolerance,
            function_count: self.function_count,
            seed: self.seed,
            finite_dimension_conditions: self.finite_dimension_conditions,
            ..PipelineConfig::default()
        }
    }
}

/// Parses `const:c`, `linear:y`, `invv:a` or `csv:<file>` on a 1-d space.
pub fn parse_function(spec: &str, space: &GridSpace) -> anyhow::Result<(Shape, GridFunction)> {
    let (kind, arg) = spec.split_once(':').context("function spec needs a kind prefix")?;
    let num = || arg.trim().parse::<f64>().with_context(|| format!("bad number in `{spec}`"));
    let c = Regularity::Continuous;
    Ok(match kind {
        "const" => {
            let v = num()?;
            (Shape::Constant(v), GridFunction::constant(space, v).with_regularity(c))
        }
        "linear" => {
            let y = num()?;
            (Shape::Linear(vec![y]), GridFunction::from_fn(space, c, |x| y * x[0])?.with_tail_slopes(y, y))
        }
        "invv" => {
            let a = num()?;
            let f = GridFunction::from_fn(space, c, |x| a.abs() - 2.0 * (x[0] - a).abs())?;
            let f = if (space.lower()[0]..=space.upper()[0]).contains(&a) { f.with_tail_slopes(2.0, -2.0) } else { f };
            (Shape::InvertedV(vec![a]), f)
        }
        "csv" => {
            let file = std::fs::File::open(Path::new(arg)).with_context(|| format!("opening {arg}"))?;
            (Shape::Tabulated, GridFunction::read_csv(space, file, c)?)
        }
        other => bail!("unknown function kind `{other}`"),
    })
}
