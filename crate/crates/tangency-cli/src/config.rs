//! Configuration resolution: defaults, an optional TOML file, and flag
//! overrides (flags win). The resolved effective config is echoed into the
//! header of every output file so any artifact can be reproduced from its
//! own header.

use std::fmt;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use tangency::model::ModelParams;
use tangency::orbit::NewtonOptions;
use tangency::scan::{DirectionRay, ScanOptions};

/// Largest admitted period count without the explicit override flag.
pub const K_MAX_CAP: u32 = 30;

#[derive(Debug)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Shared command-line flags. Flags override file values, which override
/// built-in defaults.
#[derive(clap::Args, Clone, Debug, Default)]
pub struct CommonArgs {
    /// TOML config file with the same keys as the flags.
    #[arg(long, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Contraction rate alpha, in (0, 1).
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Unfolding parameter mu1.
    #[arg(long)]
    pub mu1: Option<f64>,
    /// Unfolding parameter mu2.
    #[arg(long)]
    pub mu2: Option<f64>,
    /// Unfolding parameter mu3.
    #[arg(long)]
    pub mu3: Option<f64>,
    /// Unfolding parameter mu4.
    #[arg(long)]
    pub mu4: Option<f64>,
    /// Coordinate parameter ray (1..4).
    #[arg(long, conflicts_with = "v")]
    pub direction: Option<usize>,
    /// Arbitrary parameter ray as four comma-separated components.
    #[arg(long, value_name = "a,b,c,d", value_parser = parse_vec4)]
    pub v: Option<Vec4>,
    /// Smallest excursion count k in the sweep range.
    #[arg(long)]
    pub k_min: Option<u32>,
    /// Largest excursion count k.
    #[arg(long)]
    pub k_max: Option<u32>,
    /// Output directory for all generated files.
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Worker threads for the per-k parallel batches (default: all cores).
    #[arg(long, value_name = "N")]
    pub jobs: Option<usize>,
    /// Newton convergence tolerance for orbit solves.
    #[arg(long)]
    pub tol_newton: Option<f64>,
    /// Relative bracket width at which bisection hands over to Newton.
    #[arg(long)]
    pub tol_bisect: Option<f64>,
    /// Allow k_max beyond the default cap of 30.
    #[arg(long)]
    pub allow_large_k: bool,
}

/// Newtype so clap can carry a parsed `[f64; 4]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Vec4(pub [f64; 4]);

fn parse_vec4(s: &str) -> Result<Vec4, String> {
    let parts: Vec<&str> = s.split(',').collect();
    if parts.len() != 4 {
        return Err(format!("expected 4 comma-separated numbers, got {}", parts.len()));
    }
    let mut v = [0.0; 4];
    for (slot, part) in v.iter_mut().zip(&parts) {
        *slot = part
            .trim()
            .parse::<f64>()
            .map_err(|e| format!("bad component {part:?}: {e}"))?;
    }
    Ok(Vec4(v))
}

/// File-side schema: every key optional, flat, mirroring the flags.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    alpha: Option<f64>,
    a10: Option<f64>,
    c20: Option<f64>,
    d50: Option<f64>,
    mu1: Option<f64>,
    mu2: Option<f64>,
    mu3: Option<f64>,
    mu4: Option<f64>,
    direction: Option<usize>,
    v: Option<[f64; 4]>,
    k_min: Option<u32>,
    k_max: Option<u32>,
    out: Option<PathBuf>,
    jobs: Option<usize>,
    tol_newton: Option<f64>,
    tol_bisect: Option<f64>,
    allow_large_k: Option<bool>,
}

/// The chosen parameter ray.
#[derive(Clone, Copy, Debug)]
pub enum DirectionSpec {
    Index(usize),
    Vector([f64; 4]),
}

/// Fully resolved effective configuration.
#[derive(Clone, Debug)]
pub struct RunConfig {
    pub params: ModelParams,
    pub direction: DirectionSpec,
    pub k_min: u32,
    pub k_max: u32,
    pub out: PathBuf,
    pub jobs: Option<usize>,
    pub tol_newton: f64,
    pub tol_bisect: f64,
}

/// Serializable echo of the experiment-defining part of the config. The
/// execution knobs (`out`, `jobs`) are deliberately excluded: they do not
/// affect results, and outputs must be byte-identical across parallelism
/// degrees.
#[derive(Debug, Serialize)]
pub struct ConfigEcho {
    pub alpha: f64,
    pub a10: f64,
    pub c20: f64,
    pub d50: f64,
    pub mu: [f64; 4],
    #[serde(skip_serializing_if = "Option::is_none")]
    pub direction: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub v: Option<[f64; 4]>,
    pub k_min: u32,
    pub k_max: u32,
    pub tol_newton: f64,
    pub tol_bisect: f64,
}

impl RunConfig {
    /// Resolves defaults, the optional config file, and flag overrides.
    /// `default_k_range` differs per command (the portrait defaults to the
    /// fifteen orbits of the reference figure, sweeps to the 8..22 window).
    pub fn resolve(args: &CommonArgs, default_k_range: (u32, u32)) -> Result<RunConfig, ConfigError> {
        let file = match &args.config {
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| ConfigError(format!("cannot read config {}: {e}", path.display())))?;
                toml::from_str::<FileConfig>(&text)
                    .map_err(|e| ConfigError(format!("cannot parse config {}: {e}", path.display())))?
            }
            None => FileConfig::default(),
        };

        let defaults = ModelParams::default();
        let params = ModelParams {
            alpha: args.alpha.or(file.alpha).unwrap_or(defaults.alpha),
            a10: file.a10.unwrap_or(defaults.a10),
            c20: file.c20.unwrap_or(defaults.c20),
            d50: file.d50.unwrap_or(defaults.d50),
            mu: [
                args.mu1.or(file.mu1).unwrap_or(0.0),
                args.mu2.or(file.mu2).unwrap_or(0.0),
                args.mu3.or(file.mu3).unwrap_or(0.0),
                args.mu4.or(file.mu4).unwrap_or(0.0),
            ],
        };
        params.validate().map_err(|e| ConfigError(e.to_string()))?;

        let flag_dir = args.direction;
        let flag_v = args.v.map(|Vec4(v)| v);
        let direction = match (flag_dir, flag_v, file.direction, file.v) {
            (Some(i), _, _, _) => DirectionSpec::Index(i),
            (None, Some(v), _, _) => DirectionSpec::Vector(v),
            (None, None, Some(i), _) => DirectionSpec::Index(i),
            (None, None, None, Some(v)) => DirectionSpec::Vector(v),
            (None, None, None, None) => DirectionSpec::Index(1),
        };
        if let DirectionSpec::Index(i) = direction {
            if !(1..=4).contains(&i) {
                return Err(ConfigError(format!("direction must be 1..4, got {i}")));
            }
        }
        if let DirectionSpec::Vector(v) = direction {
            if v == [0.0; 4] || v.iter().any(|c| !c.is_finite()) {
                return Err(ConfigError("direction vector must be finite and nonzero".into()));
            }
        }

        let k_min = args.k_min.or(file.k_min).unwrap_or(default_k_range.0);
        let k_max = args.k_max.or(file.k_max).unwrap_or(default_k_range.1);
        let allow_large_k = args.allow_large_k || file.allow_large_k.unwrap_or(false);
        if k_max > K_MAX_CAP && !allow_large_k {
            return Err(ConfigError(format!(
                "k_max = {k_max} exceeds the cap of {K_MAX_CAP}; pass --allow-large-k to override"
            )));
        }

        let tol_newton = args.tol_newton.or(file.tol_newton).unwrap_or(1e-12);
        let tol_bisect = args.tol_bisect.or(file.tol_bisect).unwrap_or(1e-2);
        if !(tol_newton > 0.0 && tol_newton.is_finite()) {
            return Err(ConfigError(format!("tol_newton must be positive, got {tol_newton}")));
        }
        if !(tol_bisect > 0.0 && tol_bisect.is_finite()) {
            return Err(ConfigError(format!("tol_bisect must be positive, got {tol_bisect}")));
        }

        Ok(RunConfig {
            params,
            direction,
            k_min,
            k_max,
            out: args.out.clone().or(file.out).unwrap_or_else(|| PathBuf::from("out")),
            jobs: args.jobs.or(file.jobs),
            tol_newton,
            tol_bisect,
        })
    }

    pub fn ray(&self) -> DirectionRay {
        match self.direction {
            DirectionSpec::Index(i) => DirectionRay::coordinate(i),
            DirectionSpec::Vector(v) => DirectionRay::from_vector(v, &self.params),
        }
    }

    pub fn scan_options(&self) -> ScanOptions {
        ScanOptions {
            newton: NewtonOptions {
                tol: self.tol_newton,
                accept_residual: self.tol_newton * 100.0,
                ..NewtonOptions::default()
            },
            bisect_rel_tol: self.tol_bisect,
        }
    }

    pub fn echo(&self) -> ConfigEcho {
        let (direction, v) = match self.direction {
            DirectionSpec::Index(i) => (Some(i), None),
            DirectionSpec::Vector(v) => (None, Some(v)),
        };
        ConfigEcho {
            alpha: self.params.alpha,
            a10: self.params.a10,
            c20: self.params.c20,
            d50: self.params.d50,
            mu: self.params.mu,
            direction,
            v,
            k_min: self.k_min,
            k_max: self.k_max,
            tol_newton: self.tol_newton,
            tol_bisect: self.tol_bisect,
        }
    }

    /// `# key = value` header lines carrying the effective config.
    pub fn header_lines(&self, command: &str) -> String {
        let e = self.echo();
        let mut s = String::new();
        s.push_str(&format!("# command = {command}\n"));
        s.push_str(&format!("# alpha = {}\n", e.alpha));
        s.push_str(&format!("# a10 = {}\n", e.a10));
        s.push_str(&format!("# c20 = {}\n", e.c20));
        s.push_str(&format!("# d50 = {}\n", e.d50));
        s.push_str(&format!("# mu = [{}, {}, {}, {}]\n", e.mu[0], e.mu[1], e.mu[2], e.mu[3]));
        match self.direction {
            DirectionSpec::Index(i) => s.push_str(&format!("# direction = {i}\n")),
            DirectionSpec::Vector(v) => {
                s.push_str(&format!("# v = [{}, {}, {}, {}]\n", v[0], v[1], v[2], v[3]))
            }
        }
        s.push_str(&format!("# k_min = {}\n", e.k_min));
        s.push_str(&format!("# k_max = {}\n", e.k_max));
        s.push_str(&format!("# tol_newton = {}\n", e.tol_newton));
        s.push_str(&format!("# tol_bisect = {}\n", e.tol_bisect));
        s
    }
}
