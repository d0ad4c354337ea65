use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use esmap::form::{build_delta, build_level_one_eigenform, load_form, LEVEL_ONE_WEIGHTS};
use esmap::{Cusp, MomentSpec, NormalizationConvention, Projection, QExpansion};

use crate::UsageError;

const DEFAULT_COEFFS: usize = 20_000;

#[derive(Parser, Debug)]
#[command(name = "esmap", version, about = "Critical values of additive twists, periods and their statistics")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug, Serialize)]
#[serde(tag = "command", rename_all = "lowercase")]
pub enum Command {
    /// Build or load a q-expansion, check its coefficient bounds and export it.
    Form(FormArgs),
    /// Additive-twist L-values at a cusp (all critical integers) or a real point.
    Ltwist(LtwistArgs),
    /// Period vector and period polynomial at a cusp.
    Periods(PeriodsArgs),
    /// Zeros of period polynomials over cusp sweeps.
    Zeros(ZerosArgs),
    /// Single Kloosterman sums, Weil tables and sums over moduli.
    Kloosterman(KloostermanArgs),
    /// Empirical moments of normalized periods against the main term.
    Moments(MomentsArgs),
    /// Empirical distributions, limit-law samples and KS distances.
    Dist(DistArgs),
    /// Invariant suite with a pass/fail summary.
    Verify(VerifyArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Form(_) => "form",
            Command::Ltwist(_) => "ltwist",
            Command::Periods(_) => "periods",
            Command::Zeros(_) => "zeros",
            Command::Kloosterman(_) => "kloosterman",
            Command::Moments(_) => "moments",
            Command::Dist(_) => "dist",
            Command::Verify(_) => "verify",
        }
    }

    pub fn common(&self) -> &Common {
        match self {
            Command::Form(a) => &a.common,
            Command::Ltwist(a) => &a.common,
            Command::Periods(a) => &a.common,
            Command::Zeros(a) => &a.common,
            Command::Kloosterman(a) => &a.common,
            Command::Moments(a) => &a.common,
            Command::Dist(a) => &a.common,
            Command::Verify(a) => &a.common,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ConventionChoice {
    Calibrated,
    Reduced,
    Both,
}

impl ConventionChoice {
    pub fn resolve(self, f: &QExpansion) -> esmap::Result<Vec<NormalizationConvention>> {
        Ok(match self {
            ConventionChoice::Calibrated => vec![NormalizationConvention::calibrated(f)?],
            ConventionChoice::Reduced => vec![NormalizationConvention::reduced(f)?],
            ConventionChoice::Both => vec![NormalizationConvention::calibrated(f)?, NormalizationConvention::reduced(f)?],
        })
    }
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct Common {
    /// `delta`, a level-one weight (12, 16, 18, 20, 22, 26), or a q-expansion file.
    #[arg(long, default_value = "delta")]
    pub form: String,
    /// Number of coefficients M (default 20000 for built-in forms, the whole file otherwise).
    #[arg(long)]
    pub coeffs: Option<usize>,
    /// Tolerance for L-values, relative to the size envelope max(1, c^(k-2s)).
    #[arg(long, default_value_t = 1e-13)]
    pub tol: f64,
    #[arg(long, value_enum, default_value_t = ConventionChoice::Calibrated)]
    pub convention: ConventionChoice,
    #[arg(long, env = "ESMAP_OUT", default_value = "esmap-out")]
    pub out: PathBuf,
    /// Caps the worker threads; outputs do not depend on it.
    #[arg(long)]
    #[serde(skip)]
    pub threads: Option<usize>,
    /// Seed for random cusp and matrix selection.
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
}

impl Common {
    pub fn validate(&self) -> Result<(), UsageError> {
        if !(self.tol > 0.0 && self.tol < 1.0) {
            return Err(UsageError(format!("--tol must lie in (0, 1), got {}", self.tol)));
        }
        if self.coeffs == Some(0) {
            return Err(UsageError("--coeffs must be positive".into()));
        }
        if self.threads == Some(0) {
            return Err(UsageError("--threads must be positive".into()));
        }
        Ok(())
    }

    pub fn load_form(&self) -> Result<QExpansion, anyhow::Error> {
        let sel = self.form.trim();
        let f = if sel.eq_ignore_ascii_case("delta") {
            build_delta(self.coeffs.unwrap_or(DEFAULT_COEFFS))?
        } else if let Ok(k) = sel.parse::<u32>() {
            if !LEVEL_ONE_WEIGHTS.contains(&k) {
                return Err(UsageError(format!("no built-in form of weight {k}; choose one of {LEVEL_ONE_WEIGHTS:?}")).into());
            }
            build_level_one_eigenform(k, self.coeffs.unwrap_or(DEFAULT_COEFFS))?
        } else {
            let path = Path::new(sel);
            if !path.is_file() {
                return Err(UsageError(format!("--form: '{sel}' is neither a built-in form nor a readable file")).into());
            }
            let f = load_form(path)?;
            match self.coeffs {
                Some(m) if m < f.truncation() => f.truncate(m)?,
                Some(m) if m > f.truncation() => {
                    return Err(UsageError(format!("--coeffs {m} exceeds the {} coefficients in {sel}", f.truncation())).into())
                }
                _ => f,
            }
        };
        Ok(f)
    }
}

#[derive(Args, Debug, Serialize)]
pub struct FormArgs {
    #[command(flatten)]
    pub common: Common,
    /// Also write the q-expansion to this path.
    #[arg(long)]
    pub export: Option<PathBuf>,
}

#[derive(Args, Debug, Serialize)]
pub struct LtwistArgs {
    #[command(flatten)]
    pub common: Common,
    /// Cusp `a/c`; evaluates every critical integer unless --s is given.
    #[arg(long, value_parser = parse_cusp, conflicts_with = "x")]
    #[serde(serialize_with = "ser_cusps")]
    pub cusp: Vec<Cusp>,
    /// Real twist point for the plain series (needs s > (k+1)/2).
    #[arg(long)]
    pub x: Option<f64>,
    #[arg(long)]
    pub s: Option<f64>,
}

#[derive(Args, Debug, Serialize)]
pub struct PeriodsArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long, value_parser = parse_cusp, required = true)]
    #[serde(serialize_with = "ser_cusps")]
    pub cusp: Vec<Cusp>,
    /// Divide by C c^(k-2) under the chosen convention.
    #[arg(long)]
    pub normalized: bool,
    /// Compare against direct quadrature (fails if off by more than 1e-7 of the integrand's L1 norm).
    #[arg(long)]
    pub oracle: bool,
}

#[derive(Args, Debug, Serialize)]
pub struct ZerosArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long, value_delimiter = ',', required = true)]
    pub c: Vec<i64>,
    /// Random cusps per modulus drawn with --seed; every cusp of Omega_c when omitted.
    #[arg(long)]
    pub count: Option<usize>,
    /// Fails if some root leaves factor * (1+|a/c|)^((k-3)/(k-2)) c^(-2/(k-2)) of a/c.
    #[arg(long, default_value_t = 3.0)]
    pub factor: f64,
}

#[derive(Args, Debug, Serialize)]
pub struct KloostermanArgs {
    #[command(flatten)]
    pub common: Common,
    /// Weil table over c <= cmax, 1 <= m <= mmax, 1 <= n <= nmax.
    #[arg(long)]
    pub weil: bool,
    #[arg(long, default_value_t = 2000)]
    pub cmax: i64,
    #[arg(long, default_value_t = 10)]
    pub mmax: i64,
    #[arg(long, default_value_t = 10)]
    pub nmax: i64,
    /// Running sums over moduli c <= X with level | c.
    #[arg(long)]
    pub partial: bool,
    #[arg(long = "xmax", default_value_t = 10_000)]
    pub x: i64,
    #[arg(long, default_value_t = 1)]
    pub level: i64,
    #[arg(long, default_value_t = 1)]
    pub m: i64,
    #[arg(long, default_value_t = 1)]
    pub n: i64,
    /// Single sums S(m, n; c) for these moduli.
    #[arg(long, value_delimiter = ',')]
    pub c: Vec<i64>,
}

#[derive(Args, Debug, Serialize)]
pub struct MomentsArgs {
    #[command(flatten)]
    pub common: Common,
    /// Exponents such as `a0=1,b0=1`; repeat the flag for several specs.
    #[arg(long, required = true)]
    pub spec: Vec<String>,
    #[arg(long, value_delimiter = ',', required = true)]
    pub c: Vec<i64>,
    /// Fails if any |empirical - main| exceeds this.
    #[arg(long)]
    pub max_err: Option<f64>,
}

#[derive(Args, Debug, Serialize)]
pub struct DistArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long, value_delimiter = ',', required = true)]
    pub c: Vec<i64>,
    /// `re<j>`, `im<j>` or `ratio<j>`.
    #[arg(long, default_value = "re0")]
    pub projection: String,
    #[arg(long, default_value_t = 50)]
    pub bins: usize,
    /// Limit-law grid in y (twist point).
    #[arg(long, default_value_t = 10_000)]
    pub grid_y: usize,
    /// Limit-law grid in z (the uniform cusp position).
    #[arg(long, default_value_t = 1)]
    pub grid_z: usize,
    /// Fails if the KS distance at the largest c exceeds this.
    #[arg(long)]
    pub max_ks: Option<f64>,
}

#[derive(Args, Debug, Serialize)]
pub struct VerifyArgs {
    #[command(flatten)]
    pub common: Common,
    /// Smaller sample sizes, for smoke runs.
    #[arg(long)]
    pub quick: bool,
}

fn parse_cusp(s: &str) -> Result<Cusp, String> {
    let (a, c) = s.split_once('/').ok_or_else(|| format!("expected a/c, got '{s}'"))?;
    let a: i64 = a.trim().parse().map_err(|e| format!("numerator: {e}"))?;
    let c: i64 = c.trim().parse().map_err(|e| format!("denominator: {e}"))?;
    Cusp::new(a, c).map_err(|e| e.to_string())
}

fn ser_cusps<S: serde::Serializer>(cusps: &[Cusp], s: S) -> Result<S::Ok, S::Error> {
    s.collect_seq(cusps.iter().map(|c| c.to_string()))
}

pub fn parse_specs(texts: &[String], k: u32) -> Result<Vec<MomentSpec>, UsageError> {
    texts
        .iter()
        .map(|t| MomentSpec::parse(t, k).map_err(|e| UsageError(format!("--spec '{t}': {e}"))))
        .collect()
}

pub fn parse_projection(text: &str, k: u32) -> Result<Projection, UsageError> {
    let p: Projection = text.parse().map_err(|e: esmap::Error| UsageError(format!("--projection: {e}")))?;
    let j = match p {
        Projection::Re(j) | Projection::Im(j) | Projection::RatioAbs(j) => j,
    };
    if j > (k - 2) as usize {
        return Err(UsageError(format!("--projection index {j} exceeds k-2 = {}", k - 2)));
    }
    Ok(p)
}

pub fn check_moduli(cs: &[i64], level: u64) -> Result<(), UsageError> {
    for &c in cs {
        if c < 1 || c % level as i64 != 0 {
            return Err(UsageError(format!("modulus {c} must be positive and divisible by the level {level}")));
        }
    }
    Ok(())
}
