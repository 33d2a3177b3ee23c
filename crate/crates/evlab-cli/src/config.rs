//! Run configuration: the merged view of defaults, config-file values, and
//! command-line flags, plus the little spec languages for models,
//! constructors, and calibrators.

use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use evlab::families::{
    bounded_mean_eprocess, lr_eprocess, BernoulliModel, BoundedMeanNull, Density, GaussianModel,
    LambdaStrategy, Model,
};
use evlab::evcore::EProcessTrace;

use crate::CliError;

/// The experiment to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Validate,
    Ville,
    Growth,
    Replay,
    Calibrate,
    Compress,
    Glr,
}

impl FromStr for Command {
    type Err = CliError;
    fn from_str(s: &str) -> Result<Self, CliError> {
        match s {
            "validate" => Ok(Command::Validate),
            "ville" => Ok(Command::Ville),
            "growth" => Ok(Command::Growth),
            "replay" => Ok(Command::Replay),
            "calibrate" => Ok(Command::Calibrate),
            "compress" => Ok(Command::Compress),
            "glr" => Ok(Command::Glr),
            other => Err(CliError::Config(format!(
                "unknown command '{other}' (expected one of validate, ville, growth, replay, calibrate, compress, glr)"
            ))),
        }
    }
}

impl Command {
    pub fn as_str(&self) -> &'static str {
        match self {
            Command::Validate => "validate",
            Command::Ville => "ville",
            Command::Growth => "growth",
            Command::Replay => "replay",
            Command::Calibrate => "calibrate",
            Command::Compress => "compress",
            Command::Glr => "glr",
        }
    }
}

/// How an external compressor's output is interpreted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum CompressorMode {
    /// stdout is the compressed byte count as decimal text.
    Count,
    /// stdout is the compressed stream itself; its length is the count.
    #[default]
    Bytes,
}

impl FromStr for CompressorMode {
    type Err = CliError;
    fn from_str(s: &str) -> Result<Self, CliError> {
        match s {
            "count" => Ok(CompressorMode::Count),
            "bytes" => Ok(CompressorMode::Bytes),
            other => Err(CliError::Config(format!(
                "unknown compressor mode '{other}' (expected count or bytes)"
            ))),
        }
    }
}

/// Values as they may appear in a JSON config file; all optional so flags
/// can override. Unknown keys are rejected.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PartialConfig {
    pub command: Option<Command>,
    pub model: Option<String>,
    pub constructor: Option<String>,
    pub scenario: Option<String>,
    pub calibrator: Option<String>,
    pub seed: Option<u64>,
    pub reps: Option<usize>,
    pub horizon: Option<usize>,
    pub alpha: Option<f64>,
    pub input: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub table: Option<bool>,
    pub threads: Option<usize>,
    pub external_compressor: Option<String>,
    pub compressor_mode: Option<CompressorMode>,
}

impl PartialConfig {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text)
            .map_err(|e| CliError::Config(format!("config file: {e}")))
    }

    /// Overlay `self` (higher precedence) on `base`.
    pub fn over(self, base: PartialConfig) -> PartialConfig {
        PartialConfig {
            command: self.command.or(base.command),
            model: self.model.or(base.model),
            constructor: self.constructor.or(base.constructor),
            scenario: self.scenario.or(base.scenario),
            calibrator: self.calibrator.or(base.calibrator),
            seed: self.seed.or(base.seed),
            reps: self.reps.or(base.reps),
            horizon: self.horizon.or(base.horizon),
            alpha: self.alpha.or(base.alpha),
            input: self.input.or(base.input),
            out: self.out.or(base.out),
            table: self.table.or(base.table),
            threads: self.threads.or(base.threads),
            external_compressor: self.external_compressor.or(base.external_compressor),
            compressor_mode: self.compressor_mode.or(base.compressor_mode),
        }
    }
}

/// The effective configuration of one run; echoed verbatim into the
/// report so any run is reconstructible from its own output.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunConfig {
    pub command: Command,
    pub model: Option<String>,
    pub constructor: Option<String>,
    pub scenario: Option<String>,
    pub calibrator: Option<String>,
    pub seed: u64,
    pub reps: usize,
    pub horizon: usize,
    pub alpha: f64,
    pub input: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub table: bool,
    pub threads: Option<usize>,
    pub external_compressor: Option<String>,
    pub compressor_mode: CompressorMode,
}

impl RunConfig {
    /// Fill defaults and check cross-field requirements.
    pub fn from_partial(p: PartialConfig) -> Result<Self, CliError> {
        let command = p
            .command
            .ok_or_else(|| CliError::Config("no command given".into()))?;
        let cfg = RunConfig {
            command,
            model: p.model,
            constructor: p.constructor,
            scenario: p.scenario,
            calibrator: p.calibrator,
            seed: p.seed.unwrap_or(0),
            reps: p.reps.unwrap_or(10_000),
            horizon: p.horizon.unwrap_or(100),
            alpha: p.alpha.unwrap_or(0.05),
            input: p.input,
            out: p.out,
            table: p.table.unwrap_or(false),
            threads: p.threads,
            external_compressor: p.external_compressor,
            compressor_mode: p.compressor_mode.unwrap_or_default(),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<(), CliError> {
        if self.reps == 0 {
            return Err(CliError::Config("reps must be positive".into()));
        }
        if self.horizon == 0 {
            return Err(CliError::Config("horizon must be positive".into()));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(CliError::Config(format!(
                "alpha must lie in (0, 1), got {}",
                self.alpha
            )));
        }
        if self.table && self.out.is_none() {
            return Err(CliError::Config("--table requires --out".into()));
        }
        match self.command {
            Command::Validate | Command::Ville | Command::Growth => {
                if self.model.is_none() {
                    return Err(CliError::Config(format!(
                        "command '{}' requires a model spec (field: model)",
                        self.command.as_str()
                    )));
                }
                if self.constructor.is_none() {
                    return Err(CliError::Config(format!(
                        "command '{}' requires a constructor spec (field: constructor)",
                        self.command.as_str()
                    )));
                }
            }
            Command::Replay => {
                if self.scenario.is_none() {
                    return Err(CliError::Config(
                        "command 'replay' requires a scenario (field: scenario)".into(),
                    ));
                }
            }
            Command::Calibrate => {
                if self.calibrator.is_none() {
                    return Err(CliError::Config(
                        "command 'calibrate' requires a calibrator spec (field: calibrator)"
                            .into(),
                    ));
                }
            }
            Command::Compress => {
                if self.input.is_none() {
                    return Err(CliError::Config(
                        "command 'compress' requires an input file (field: input)".into(),
                    ));
                }
            }
            Command::Glr => {}
        }
        Ok(())
    }
}

/// Splits `name(arg1,arg2,...)` with nesting-aware comma splitting;
/// a bare `name` has no argument list.
fn split_spec(s: &str) -> Result<(&str, Vec<&str>), CliError> {
    let s = s.trim();
    let Some(open) = s.find('(') else {
        if s.contains(')') || s.contains(',') {
            return Err(CliError::Config(format!("malformed spec '{s}'")));
        }
        return Ok((s, vec![]));
    };
    if !s.ends_with(')') {
        return Err(CliError::Config(format!("unbalanced parentheses in spec '{s}'")));
    }
    let name = s[..open].trim();
    let body = &s[open + 1..s.len() - 1];
    let mut args = Vec::new();
    let mut depth = 0usize;
    let mut start = 0usize;
    for (i, c) in body.char_indices() {
        match c {
            '(' => depth += 1,
            ')' => {
                depth = depth.checked_sub(1).ok_or_else(|| {
                    CliError::Config(format!("unbalanced parentheses in spec '{s}'"))
                })?;
            }
            ',' if depth == 0 => {
                args.push(body[start..i].trim());
                start = i + 1;
            }
            _ => {}
        }
    }
    if depth != 0 {
        return Err(CliError::Config(format!("unbalanced parentheses in spec '{s}'")));
    }
    if !body.trim().is_empty() {
        args.push(body[start..].trim());
    }
    Ok((name, args))
}

fn parse_f64(field: &str, s: &str) -> Result<f64, CliError> {
    let v: f64 = s
        .parse()
        .map_err(|_| CliError::Config(format!("{field}: '{s}' is not a number")))?;
    if v.is_nan() {
        return Err(CliError::Config(format!("{field}: NaN is not allowed")));
    }
    Ok(v)
}

/// A parsed model spec: `bernoulli(theta)` or `gaussian(mean,sd)`.
#[derive(Debug, Clone, Copy)]
pub enum ModelSpec {
    Bernoulli(f64),
    Gaussian(f64, f64),
}

impl ModelSpec {
    pub fn parse(s: &str) -> Result<Self, CliError> {
        let (name, args) = split_spec(s)?;
        match (name, args.as_slice()) {
            ("bernoulli", [theta]) => Ok(ModelSpec::Bernoulli(parse_f64("model", theta)?)),
            ("gaussian", [mean, sd]) => Ok(ModelSpec::Gaussian(
                parse_f64("model", mean)?,
                parse_f64("model", sd)?,
            )),
            ("bernoulli", _) => Err(CliError::Config(
                "model: bernoulli takes exactly one argument, e.g. bernoulli(0.5)".into(),
            )),
            ("gaussian", _) => Err(CliError::Config(
                "model: gaussian takes exactly two arguments, e.g. gaussian(0,1)".into(),
            )),
            (other, _) => Err(CliError::Config(format!(
                "model: unknown family '{other}' (expected bernoulli or gaussian)"
            ))),
        }
    }

    pub fn build(&self) -> Result<BuiltModel, CliError> {
        match *self {
            ModelSpec::Bernoulli(theta) => {
                Ok(BuiltModel::Bernoulli(BernoulliModel::new(theta).map_err(|e| {
                    CliError::Config(format!("model: {e}"))
                })?))
            }
            ModelSpec::Gaussian(mean, sd) => {
                Ok(BuiltModel::Gaussian(GaussianModel::new(mean, sd).map_err(|e| {
                    CliError::Config(format!("model: {e}"))
                })?))
            }
        }
    }
}

/// A model built from a spec, usable as sampler and density.
#[derive(Debug, Clone, Copy)]
pub enum BuiltModel {
    Bernoulli(BernoulliModel),
    Gaussian(GaussianModel),
}

impl Density for BuiltModel {
    fn log_pdf(&self, x: f64) -> f64 {
        match self {
            BuiltModel::Bernoulli(m) => m.log_pdf(x),
            BuiltModel::Gaussian(m) => m.log_pdf(x),
        }
    }
}

impl Model for BuiltModel {
    fn sample<R: rand::Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            BuiltModel::Bernoulli(m) => m.sample(rng),
            BuiltModel::Gaussian(m) => m.sample(rng),
        }
    }
}

/// A parsed e-process constructor spec:
/// `constant1`, `lr(<model>,<model>)`,
/// `bounded(<mu>,fixed,<lambda>)`, `bounded(<mu>,agrapa)`,
/// `bounded(<mu>,grid,<lambda>...)`, or `kt`.
#[derive(Debug, Clone)]
pub enum ConstructorSpec {
    Constant1,
    Lr { null: ModelSpec, alt: ModelSpec },
    Bounded { mu: f64, strategy: StrategySpec },
    Kt,
}

#[derive(Debug, Clone)]
pub enum StrategySpec {
    Fixed(f64),
    Agrapa,
    Grid(Vec<f64>),
}

impl ConstructorSpec {
    pub fn parse(s: &str) -> Result<Self, CliError> {
        let (name, args) = split_spec(s)?;
        match (name, args.as_slice()) {
            ("constant1", []) => Ok(ConstructorSpec::Constant1),
            ("kt", []) => Ok(ConstructorSpec::Kt),
            ("lr", [null, alt]) => Ok(ConstructorSpec::Lr {
                null: ModelSpec::parse(null)?,
                alt: ModelSpec::parse(alt)?,
            }),
            ("lr", _) => Err(CliError::Config(
                "constructor: lr takes exactly two model arguments".into(),
            )),
            ("bounded", [mu, rest @ ..]) => {
                let mu = parse_f64("constructor", mu)?;
                let strategy = match rest {
                    ["fixed", lambda] => StrategySpec::Fixed(parse_f64("constructor", lambda)?),
                    ["agrapa"] => StrategySpec::Agrapa,
                    ["grid", lambdas @ ..] if !lambdas.is_empty() => StrategySpec::Grid(
                        lambdas
                            .iter()
                            .map(|l| parse_f64("constructor", l))
                            .collect::<Result<_, _>>()?,
                    ),
                    _ => {
                        return Err(CliError::Config(
                            "constructor: bounded expects (mu,fixed,<lambda>), (mu,agrapa), or (mu,grid,<lambda>...)"
                                .into(),
                        ))
                    }
                };
                Ok(ConstructorSpec::Bounded { mu, strategy })
            }
            (other, _) => Err(CliError::Config(format!(
                "constructor: unknown constructor '{other}' (expected constant1, lr, bounded, or kt)"
            ))),
        }
    }

    /// Builds the trace constructor as a reusable closure.
    pub fn build(
        &self,
    ) -> Result<Box<dyn Fn(&[f64]) -> evlab::Result<EProcessTrace> + Send + Sync>, CliError> {
        match self {
            ConstructorSpec::Constant1 => Ok(Box::new(|data| {
                EProcessTrace::from_factors(vec![1.0; data.len()])
            })),
            ConstructorSpec::Lr { null, alt } => {
                let null = null.build()?;
                let alt = alt.build()?;
                Ok(Box::new(move |data| lr_eprocess(&null, &alt, data)))
            }
            ConstructorSpec::Bounded { mu, strategy } => {
                let null = BoundedMeanNull::new(*mu)
                    .map_err(|e| CliError::Config(format!("constructor: {e}")))?;
                let strategy = match strategy {
                    StrategySpec::Fixed(l) => LambdaStrategy::Fixed(*l),
                    StrategySpec::Agrapa => LambdaStrategy::Agrapa,
                    StrategySpec::Grid(lambdas) => LambdaStrategy::GridMixture {
                        lambdas: lambdas.clone(),
                        weights: vec![1.0 / lambdas.len() as f64; lambdas.len()],
                    },
                };
                Ok(Box::new(move |data| bounded_mean_eprocess(&null, &strategy, data)))
            }
            ConstructorSpec::Kt => Ok(Box::new(|data| {
                let bits = crate::ingest::to_bits(data)?;
                evlab::compress::compression_eprocess(&bits, &evlab::compress::Coder::Kt)
            })),
        }
    }
}

/// A parsed calibrator spec: `power(<kappa>)` or `mixture`.
#[derive(Debug, Clone, Copy)]
pub enum CalibratorSpec {
    Power(f64),
    Mixture,
}

impl CalibratorSpec {
    pub fn parse(s: &str) -> Result<Self, CliError> {
        let (name, args) = split_spec(s)?;
        match (name, args.as_slice()) {
            ("power", [kappa]) => Ok(CalibratorSpec::Power(parse_f64("calibrator", kappa)?)),
            ("mixture", []) => Ok(CalibratorSpec::Mixture),
            (other, _) => Err(CliError::Config(format!(
                "calibrator: unknown calibrator '{other}' (expected power(<kappa>) or mixture)"
            ))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn model_specs_parse() {
        assert!(matches!(ModelSpec::parse("bernoulli(0.5)"), Ok(ModelSpec::Bernoulli(t)) if t == 0.5));
        assert!(matches!(ModelSpec::parse(" gaussian( 0 , 1 ) "), Ok(ModelSpec::Gaussian(0.0, 1.0))));
        assert!(ModelSpec::parse("bernoulli(2,3)").is_err());
        assert!(ModelSpec::parse("cauchy(0)").is_err());
        assert!(ModelSpec::parse("bernoulli(0.5").is_err());
        assert!(ModelSpec::parse("bernoulli(x)").is_err());
        assert!(ModelSpec::Bernoulli(1.5).build().is_err());
    }

    #[test]
    fn constructor_specs_parse() {
        assert!(matches!(ConstructorSpec::parse("constant1"), Ok(ConstructorSpec::Constant1)));
        assert!(matches!(ConstructorSpec::parse("kt"), Ok(ConstructorSpec::Kt)));
        let lr = ConstructorSpec::parse("lr(bernoulli(0.5),bernoulli(0.7))").unwrap();
        assert!(matches!(lr, ConstructorSpec::Lr { .. }));
        assert!(matches!(
            ConstructorSpec::parse("bounded(0.5,agrapa)"),
            Ok(ConstructorSpec::Bounded { .. })
        ));
        assert!(matches!(
            ConstructorSpec::parse("bounded(0.5,fixed,0.2)"),
            Ok(ConstructorSpec::Bounded { strategy: StrategySpec::Fixed(_), .. })
        ));
        assert!(ConstructorSpec::parse("bounded(0.5)").is_err());
        assert!(ConstructorSpec::parse("bounded(0.5,grid)").is_err());
        assert!(ConstructorSpec::parse("lr(bernoulli(0.5))").is_err());
        assert!(ConstructorSpec::parse("nope").is_err());
    }

    #[test]
    fn merged_config_respects_precedence() {
        let file = PartialConfig {
            command: Some(Command::Validate),
            seed: Some(1),
            reps: Some(100),
            model: Some("bernoulli(0.5)".into()),
            constructor: Some("constant1".into()),
            ..Default::default()
        };
        let flags = PartialConfig { seed: Some(9), ..Default::default() };
        let cfg = RunConfig::from_partial(flags.over(file)).unwrap();
        assert_eq!(cfg.seed, 9); // flag wins
        assert_eq!(cfg.reps, 100); // file wins over default
        assert_eq!(cfg.horizon, 100); // default
    }

    #[test]
    fn cross_field_validation() {
        let base = PartialConfig {
            command: Some(Command::Validate),
            ..Default::default()
        };
        let err = RunConfig::from_partial(base).unwrap_err();
        assert!(matches!(err, CliError::Config(ref m) if m.contains("model")));

        let compress = PartialConfig {
            command: Some(Command::Compress),
            ..Default::default()
        };
        let err = RunConfig::from_partial(compress).unwrap_err();
        assert!(matches!(err, CliError::Config(ref m) if m.contains("input")));

        let bad_alpha = PartialConfig {
            command: Some(Command::Glr),
            alpha: Some(1.5),
            ..Default::default()
        };
        assert!(RunConfig::from_partial(bad_alpha).is_err());
    }

    #[test]
    fn config_file_rejects_unknown_keys() {
        assert!(PartialConfig::from_json(r#"{"command":"glr","bogus":1}"#).is_err());
        let p = PartialConfig::from_json(r#"{"command":"glr","seed":7}"#).unwrap();
        assert_eq!(p.seed, Some(7));
    }
}
