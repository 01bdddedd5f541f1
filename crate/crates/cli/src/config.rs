//! Run configuration: flat `key = value` files, built-in examples and
//! command-line overrides.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use ifem_core::assembly::{default_tau, EdgeSet, StabilizationConfig};
use ifem_core::elements::MaterialParams;
use ifem_core::interface::LevelSet;
use ifem_core::pipeline::{Domain, Forcing, Problem, SolverKind, SolverOptions};
use ifem_core::solver::DEFAULT_TOL;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

fn err<T>(msg: impl Into<String>) -> Result<T, ConfigError> {
    Err(ConfigError(msg.into()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InterfaceKind {
    Circle,
    Ellipse,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LambdaSpec {
    /// `lambda = c mu` on both sides
    Ratio(f64),
    Explicit {
        minus: f64,
        plus: f64,
    },
    /// `lambda = 2 mu nu / (1 - 2 nu)` per side
    Poisson {
        minus: f64,
        plus: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ForcingKind {
    Manufactured,
    Unknown,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub name: String,
    pub domain: Domain,
    pub k_min: u32,
    pub k_max: u32,
    pub interface: InterfaceKind,
    pub r0: f64,
    pub mu_minus: f64,
    pub mu_plus: f64,
    pub lambda: LambdaSpec,
    /// `None`: `10 max(mu-, mu+)`
    pub tau: Option<f64>,
    pub edge_set: EdgeSet,
    pub forcing: ForcingKind,
    pub solver: SolverKind,
    pub tol: f64,
    pub max_iter: Option<usize>,
    pub out: PathBuf,
    pub vtk: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            name: "custom".into(),
            domain: Domain::default(),
            k_min: 3,
            k_max: 6,
            interface: InterfaceKind::Circle,
            r0: 0.36,
            mu_minus: 1.0,
            mu_plus: 100.0,
            lambda: LambdaSpec::Ratio(5.0),
            tau: None,
            edge_set: EdgeSet::Interior,
            forcing: ForcingKind::Manufactured,
            solver: SolverKind::Cg,
            tol: DEFAULT_TOL,
            max_iter: None,
            out: PathBuf::from("out"),
            vtk: true,
        }
    }
}

pub const EXAMPLES: [&str; 7] = ["1a", "1b", "2a", "2b", "3a", "3b", "4"];

/// Built-in configuration for one of the example ids.
pub fn example(id: &str) -> Result<RunConfig, ConfigError> {
    let base = RunConfig {
        name: format!("example{id}"),
        ..RunConfig::default()
    };
    let (interface, r0, mu_plus, lambda) = match id {
        "1a" => (InterfaceKind::Circle, 0.36, 100.0, LambdaSpec::Ratio(5.0)),
        "1b" => (InterfaceKind::Circle, 0.48, 10.0, LambdaSpec::Ratio(5.0)),
        "2a" => (InterfaceKind::Circle, 0.7, 10.0, LambdaSpec::Ratio(100.0)),
        "2b" => (InterfaceKind::Circle, 0.6, 10.0, LambdaSpec::Ratio(1000.0)),
        "3a" => (InterfaceKind::Ellipse, 0.4, 10.0, LambdaSpec::Ratio(5.0)),
        "3b" => (InterfaceKind::Ellipse, 0.3, 100.0, LambdaSpec::Ratio(5.0)),
        "4" => (
            InterfaceKind::Ellipse,
            0.3,
            100.0,
            LambdaSpec::Poisson {
                minus: 0.28,
                plus: 0.4,
            },
        ),
        _ => {
            return err(format!(
                "example: unknown id `{id}` (one of {})",
                EXAMPLES.join(", ")
            ))
        }
    };
    Ok(RunConfig {
        interface,
        r0,
        mu_minus: 1.0,
        mu_plus,
        lambda,
        forcing: if id == "4" {
            ForcingKind::Unknown
        } else {
            ForcingKind::Manufactured
        },
        ..base
    })
}

/// Every accepted key with a one-line description.
pub const KEYS: [(&str, &str); 25] = [
    (
        "example",
        "built-in setup: 1a 1b 2a 2b 3a 3b 4 (applied before other keys)",
    ),
    ("name", "prefix of output files"),
    ("xmin", "domain left edge (default -1)"),
    ("xmax", "domain right edge (default 1)"),
    ("ymin", "domain bottom edge (default -1)"),
    ("ymax", "domain top edge (default 1)"),
    ("k_min", "coarsest level, h = 2^-k (default 3)"),
    ("k_max", "finest level (default 6)"),
    (
        "interface",
        "circle (x^2 + y^2 = r0^2) or ellipse (x^2/4 + y^2 = r0^2)",
    ),
    ("r0", "interface radius"),
    ("mu_minus", "shear modulus inside the interface"),
    ("mu_plus", "shear modulus outside the interface"),
    ("lambda_ratio", "lambda = ratio * mu on both sides"),
    ("lambda_minus", "explicit lambda inside (needs lambda_plus)"),
    (
        "lambda_plus",
        "explicit lambda outside (needs lambda_minus)",
    ),
    ("nu_minus", "Poisson ratio inside (needs nu_plus)"),
    ("nu_plus", "Poisson ratio outside (needs nu_minus)"),
    (
        "tau",
        "penalty parameter, > 0 (default 10 * max(mu_minus, mu_plus))",
    ),
    (
        "edge_set",
        "penalized edges: interior or all (default interior)",
    ),
    ("forcing", "manufactured (exact solution known) or unknown"),
    ("solver", "cg or dense (default cg)"),
    ("tol", "relative residual tolerance of cg (default 1e-12)"),
    ("max_iter", "cg iteration cap (default 10 * unknowns)"),
    ("out", "output directory (default out)"),
    (
        "vtk",
        "write a VTK field file per level: true or false (default true)",
    ),
];

pub fn help_text() -> String {
    let mut s =
        String::from("Configuration keys (file lines `key = value`, `#` starts a comment):\n");
    for (k, d) in KEYS {
        s += &format!("  {k:<13} {d}\n");
    }
    s
}

/// Ordered `key -> value` pairs of one configuration layer.
pub type Layer = Vec<(String, String)>;

pub fn parse_text(text: &str, origin: &str) -> Result<Layer, ConfigError> {
    let mut out = Layer::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            return err(format!(
                "{origin}:{}: expected `key = value`, got `{line}`",
                n + 1
            ));
        };
        out.push((k.trim().to_string(), v.trim().to_string()));
    }
    Ok(out)
}

pub fn read_file(path: &Path) -> Result<Layer, ConfigError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| ConfigError(format!("config: cannot read {}: {e}", path.display())))?;
    parse_text(&text, &path.display().to_string())
}

fn value<T: FromStr>(key: &str, v: &str) -> Result<T, ConfigError> {
    v.parse()
        .map_err(|_| ConfigError(format!("{key}: cannot parse `{v}`")))
}

/// Apply layers in order; later layers win. An `example` key in any layer
/// resets the configuration before the remaining keys of all layers apply.
pub fn build(layers: &[Layer]) -> Result<RunConfig, ConfigError> {
    let mut cfg = RunConfig::default();
    let example_id = layers
        .iter()
        .flatten()
        .filter(|(k, _)| k == "example")
        .map(|(_, v)| v.clone())
        .last();
    if let Some(id) = example_id {
        cfg = example(&id)?;
    }
    for layer in layers {
        let keys: BTreeMap<&str, &str> = layer
            .iter()
            .map(|(k, v)| (k.as_str(), v.as_str()))
            .collect();
        let has = |k: &str| keys.contains_key(k);
        let lambda_kinds = [
            has("lambda_ratio"),
            has("lambda_minus") || has("lambda_plus"),
            has("nu_minus") || has("nu_plus"),
        ];
        if lambda_kinds.iter().filter(|&&b| b).count() > 1 {
            return err(
                "lambda_ratio, lambda_minus/lambda_plus and nu_minus/nu_plus are exclusive",
            );
        }
        for (k, v) in layer {
            apply(&mut cfg, k, v, &keys)?;
        }
    }
    validate(&cfg)?;
    Ok(cfg)
}

fn pair(keys: &BTreeMap<&str, &str>, a: &str, b: &str) -> Result<(f64, f64), ConfigError> {
    match (keys.get(a), keys.get(b)) {
        (Some(x), Some(y)) => Ok((value(a, x)?, value(b, y)?)),
        _ => err(format!("{a} and {b} must be given together")),
    }
}

fn apply(
    cfg: &mut RunConfig,
    key: &str,
    v: &str,
    keys: &BTreeMap<&str, &str>,
) -> Result<(), ConfigError> {
    match key {
        "example" => {}
        "name" => cfg.name = v.to_string(),
        "xmin" => cfg.domain.xmin = value(key, v)?,
        "xmax" => cfg.domain.xmax = value(key, v)?,
        "ymin" => cfg.domain.ymin = value(key, v)?,
        "ymax" => cfg.domain.ymax = value(key, v)?,
        "k_min" => cfg.k_min = value(key, v)?,
        "k_max" => cfg.k_max = value(key, v)?,
        "interface" => {
            cfg.interface = match v {
                "circle" => InterfaceKind::Circle,
                "ellipse" => InterfaceKind::Ellipse,
                _ => return err(format!("interface: expected circle or ellipse, got `{v}`")),
            }
        }
        "r0" => cfg.r0 = value(key, v)?,
        "mu_minus" => cfg.mu_minus = value(key, v)?,
        "mu_plus" => cfg.mu_plus = value(key, v)?,
        "lambda_ratio" => cfg.lambda = LambdaSpec::Ratio(value(key, v)?),
        "lambda_minus" | "lambda_plus" => {
            let (minus, plus) = pair(keys, "lambda_minus", "lambda_plus")?;
            cfg.lambda = LambdaSpec::Explicit { minus, plus };
        }
        "nu_minus" | "nu_plus" => {
            let (minus, plus) = pair(keys, "nu_minus", "nu_plus")?;
            cfg.lambda = LambdaSpec::Poisson { minus, plus };
        }
        "tau" => cfg.tau = Some(value(key, v)?),
        "edge_set" => {
            cfg.edge_set = v.parse().map_err(|_| {
                ConfigError(format!("edge_set: expected interior or all, got `{v}`"))
            })?
        }
        "forcing" => {
            cfg.forcing = match v {
                "manufactured" => ForcingKind::Manufactured,
                "unknown" => ForcingKind::Unknown,
                _ => {
                    return err(format!(
                        "forcing: expected manufactured or unknown, got `{v}`"
                    ))
                }
            }
        }
        "solver" => {
            cfg.solver = match v {
                "cg" => SolverKind::Cg,
                "dense" => SolverKind::Dense,
                _ => return err(format!("solver: expected cg or dense, got `{v}`")),
            }
        }
        "tol" => cfg.tol = value(key, v)?,
        "max_iter" => cfg.max_iter = Some(value(key, v)?),
        "out" => cfg.out = PathBuf::from(v),
        "vtk" => cfg.vtk = value(key, v)?,
        _ => return err(format!("unknown key `{key}` (see --help-config)")),
    }
    Ok(())
}

pub fn validate(cfg: &RunConfig) -> Result<(), ConfigError> {
    let d = &cfg.domain;
    if !(d.xmax > d.xmin && d.ymax > d.ymin) {
        return err("xmin/xmax/ymin/ymax: empty domain");
    }
    if cfg.k_min > cfg.k_max {
        return err(format!("k_min: {} exceeds k_max {}", cfg.k_min, cfg.k_max));
    }
    if cfg.k_max > 12 {
        return err(format!(
            "k_max: {} is beyond the supported range (<= 12)",
            cfg.k_max
        ));
    }
    if !(cfg.r0 > 0.0 && cfg.r0.is_finite()) {
        return err(format!("r0: must be positive, got {}", cfg.r0));
    }
    if !(cfg.mu_minus > 0.0 && cfg.mu_minus.is_finite()) {
        return err(format!("mu_minus: must be positive, got {}", cfg.mu_minus));
    }
    if !(cfg.mu_plus > 0.0 && cfg.mu_plus.is_finite()) {
        return err(format!("mu_plus: must be positive, got {}", cfg.mu_plus));
    }
    match cfg.lambda {
        LambdaSpec::Ratio(c) if !(c >= 0.0 && c.is_finite()) => {
            return err(format!("lambda_ratio: must be >= 0, got {c}"))
        }
        LambdaSpec::Explicit { minus, plus } if !(minus >= 0.0 && plus >= 0.0) => {
            return err("lambda_minus/lambda_plus: must be >= 0")
        }
        LambdaSpec::Poisson { minus, plus }
            if !((-1.0..0.5).contains(&minus) && (-1.0..0.5).contains(&plus)) =>
        {
            return err("nu_minus/nu_plus: must lie in (-1, 1/2)")
        }
        _ => {}
    }
    if let Some(t) = cfg.tau {
        if !(t > 0.0 && t.is_finite()) {
            return err(format!("tau: must be positive, got {t}"));
        }
    }
    if !(cfg.tol > 0.0 && cfg.tol < 1.0) {
        return err(format!("tol: must lie in (0, 1), got {}", cfg.tol));
    }
    if cfg.max_iter == Some(0) {
        return err("max_iter: must be positive");
    }
    if cfg.name.is_empty() || cfg.name.contains(['/', '\\']) {
        return err(format!("name: `{}` is not a valid file prefix", cfg.name));
    }
    Ok(())
}

impl RunConfig {
    pub fn material(&self) -> Result<MaterialParams, ConfigError> {
        let (mm, mp) = (self.mu_minus, self.mu_plus);
        let m = match self.lambda {
            LambdaSpec::Ratio(c) => MaterialParams::with_lambda_ratio(mm, mp, c),
            LambdaSpec::Explicit { minus, plus } => MaterialParams::new(mm, mp, minus, plus),
            LambdaSpec::Poisson { minus, plus } => {
                let l = |mu: f64, nu: f64| 2.0 * mu * nu / (1.0 - 2.0 * nu);
                MaterialParams::new(mm, mp, l(mm, minus), l(mp, plus))
            }
        };
        m.map_err(|e| ConfigError(format!("material: {e}")))
    }

    pub fn level_set(&self) -> LevelSet {
        match self.interface {
            InterfaceKind::Circle => LevelSet::Circle { r0: self.r0 },
            InterfaceKind::Ellipse => LevelSet::Ellipse { r0: self.r0 },
        }
    }

    pub fn problem(&self) -> Result<Problem, ConfigError> {
        let mat = self.material()?;
        let ls = self.level_set();
        match self.forcing {
            ForcingKind::Manufactured => Problem::manufactured(self.domain, ls, mat)
                .map_err(|e| ConfigError(format!("forcing: {e}"))),
            ForcingKind::Unknown => Ok(Problem {
                domain: self.domain,
                level_set: ls,
                mat,
                forcing: Forcing::UnknownSolution,
            }),
        }
    }

    pub fn stabilization(&self) -> Result<StabilizationConfig, ConfigError> {
        let mat = self.material()?;
        let tau = self.tau.unwrap_or_else(|| default_tau(&mat));
        StabilizationConfig::new(tau, self.edge_set).map_err(|e| ConfigError(format!("tau: {e}")))
    }

    pub fn solver_options(&self) -> SolverOptions {
        SolverOptions {
            kind: self.solver,
            tol: self.tol,
            max_iter: self.max_iter,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn layer(pairs: &[(&str, &str)]) -> Layer {
        pairs
            .iter()
            .map(|(k, v)| (k.to_string(), v.to_string()))
            .collect()
    }

    #[test]
    fn example_alone_gives_full_config() {
        let cfg = build(&[layer(&[("example", "1a")])]).unwrap();
        assert_eq!(cfg.r0, 0.36);
        assert_eq!((cfg.mu_minus, cfg.mu_plus), (1.0, 100.0));
        assert_eq!(cfg.lambda, LambdaSpec::Ratio(5.0));
        assert_eq!(cfg.stabilization().unwrap().tau, 1000.0);
        assert_eq!(cfg.tol, 1e-12);
        assert_eq!((cfg.k_min, cfg.k_max), (3, 6));
    }

    #[test]
    fn negative_tau_names_the_key() {
        let e = build(&[layer(&[("tau", "-1")])]).unwrap_err();
        assert!(e.0.starts_with("tau"), "{e}");
    }

    #[test]
    fn later_layers_win() {
        let file = parse_text("example = 1b\nk_max = 5 # comment\n", "f").unwrap();
        let flags = layer(&[("k_max", "6")]);
        let cfg = build(&[file, flags]).unwrap();
        assert_eq!(cfg.k_max, 6);
        assert_eq!(cfg.r0, 0.48);
    }

    #[test]
    fn bad_input_is_reported_by_key() {
        assert!(build(&[layer(&[("colour", "red")])])
            .unwrap_err()
            .0
            .contains("colour"));
        assert!(build(&[layer(&[("k_min", "x")])])
            .unwrap_err()
            .0
            .starts_with("k_min"));
        assert!(build(&[layer(&[("k_min", "5"), ("k_max", "4")])])
            .unwrap_err()
            .0
            .starts_with("k_min"));
        assert!(build(&[layer(&[("nu_minus", "0.3")])]).is_err());
        assert!(build(&[layer(&[
            ("lambda_ratio", "5"),
            ("nu_minus", "0.3"),
            ("nu_plus", "0.3")
        ])])
        .is_err());
        assert!(parse_text("no equals sign", "f").is_err());
        assert!(example("5").is_err());
    }

    #[test]
    fn example_four_uses_poisson_ratios() {
        let cfg = example("4").unwrap();
        let m = cfg.material().unwrap();
        assert!((m.lambda_minus - 2.0 * 0.28 / 0.44).abs() < 1e-12);
        assert!((m.lambda_plus - 400.0).abs() < 1e-9);
        assert_eq!(cfg.forcing, ForcingKind::Unknown);
        assert!(m.lambda_ratio().is_none());
    }

    #[test]
    fn every_example_validates() {
        for id in EXAMPLES {
            let cfg = example(id).unwrap();
            validate(&cfg).unwrap();
            cfg.problem().unwrap();
        }
    }
}
