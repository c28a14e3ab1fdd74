//! Run configuration, read from a TOML file.
//!
//! Every table and key is optional; missing values take the defaults below,
//! which describe the reference constant-product pool (p² = 1e8, y0 = 1000,
//! λ± = 50, k = 2, S0 = 100, T = 1). Unknown keys are rejected.

use std::path::{Path, PathBuf};

use ammfee_core::{AssetGrid, EventScheme, MarketParams, PoolSpec, SimConfig};
use serde::Deserialize;

use crate::error::CliError;

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub pool: PoolSection,
    pub grid: GridSection,
    pub market: MarketSection,
    pub solver: SolverSection,
    pub sim: SimSection,
    pub limits: LimitsSection,
    pub figures: FiguresSection,
    pub output: OutputSection,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PoolSection {
    pub depth_sq: f64,
    pub y0: f64,
}

impl Default for PoolSection {
    fn default() -> Self {
        Self { depth_sq: 1e8, y0: 1000.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GridKindName {
    /// Each trade moves the marginal rate by `dz`.
    Price,
    /// Constant spacing `delta`.
    Uniform,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridSection {
    pub kind: GridKindName,
    /// N: the grid has 2N + 1 points.
    pub half_width: usize,
    pub dz: f64,
    /// Spacing of the uniform grid. The quadratic solver always uses it.
    pub delta: f64,
}

impl Default for GridSection {
    fn default() -> Self {
        Self { kind: GridKindName::Price, half_width: 20, dz: 0.1, delta: 0.5 }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MarketSection {
    pub lambda_sell: f64,
    pub lambda_buy: f64,
    pub k: f64,
    pub zeta: f64,
    pub s0: f64,
    pub sigma: f64,
    pub phi: f64,
    pub horizon: f64,
    pub exponent_cap: f64,
}

impl Default for MarketSection {
    fn default() -> Self {
        let p = MarketParams::default();
        Self {
            lambda_sell: p.lambda_sell,
            lambda_buy: p.lambda_buy,
            k: p.k,
            zeta: p.zeta,
            s0: p.s0,
            sigma: p.sigma,
            phi: p.phi,
            horizon: p.horizon,
            exponent_cap: p.exponent_cap,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverSection {
    /// Uniform evaluation times on [0, T] for the exact solver.
    pub time_points: usize,
    /// RK4 steps for the coefficient ODEs.
    pub ode_steps: usize,
}

impl Default for SolverSection {
    fn default() -> Self {
        Self { time_points: 1001, ode_steps: 1000 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StrategyName {
    OptimalFa,
    LinearFa,
    Constant,
    OptimalSa,
}

impl StrategyName {
    pub fn as_str(self) -> &'static str {
        match self {
            StrategyName::OptimalFa => "optimal_fa",
            StrategyName::LinearFa => "linear_fa",
            StrategyName::Constant => "constant",
            StrategyName::OptimalSa => "optimal_sa",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SchemeName {
    Bernoulli,
    Thinning,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimSection {
    pub n_paths: u64,
    pub n_steps: u32,
    pub seed: u64,
    pub strategies: Vec<StrategyName>,
    /// Each (k, λ) pair is simulated with λ⁺ = λ⁻ = λ.
    pub k_values: Vec<f64>,
    pub lambda_values: Vec<f64>,
    pub scheme: SchemeName,
    pub record_paths: bool,
    pub fee_bounds: Option<[f64; 2]>,
    /// Time at which the constant benchmark fee is read off the FA schedule.
    pub constant_time: f64,
    /// Worker threads for path simulation; 0 lets rayon decide.
    pub threads: usize,
}

impl Default for SimSection {
    fn default() -> Self {
        Self {
            n_paths: 20_000,
            n_steps: 1000,
            seed: 1,
            strategies: vec![StrategyName::OptimalFa, StrategyName::LinearFa, StrategyName::Constant],
            k_values: vec![2.0, 1.0],
            lambda_values: vec![100.0, 150.0],
            scheme: SchemeName::Bernoulli,
            record_paths: false,
            fee_bounds: None,
            constant_time: 0.5,
            threads: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LimitsSection {
    pub fa_k: Vec<f64>,
    pub sa_k: Vec<f64>,
    pub times: Vec<f64>,
}

impl Default for LimitsSection {
    fn default() -> Self {
        Self { fa_k: vec![0.5, 0.1, 0.02], sa_k: vec![0.25, 0.05, 0.01], times: vec![0.0, 0.5] }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FiguresSection {
    /// Snapshot time of the fee-versus-inventory curves.
    pub t: f64,
    pub k_values: Vec<f64>,
    pub phi_values: Vec<f64>,
    /// Penalty sweeps are repeated for each of these k.
    pub phi_k_values: Vec<f64>,
    /// Time sweeps are produced for each of these k.
    pub time_k_values: Vec<f64>,
    /// Oracle prices for the SA price sweep, as offsets from S0.
    pub s_offsets: Vec<f64>,
    /// Keep every n-th stored time in time sweeps and value surfaces.
    pub time_stride: usize,
    /// Volatility used for the SA fee figures.
    pub sa_sigma: f64,
    /// k used for the SA k-limit figure.
    pub sa_small_k: f64,
}

impl Default for FiguresSection {
    fn default() -> Self {
        Self {
            t: 0.5,
            k_values: vec![2.0, 1.0, 0.25, 0.1],
            phi_values: vec![0.0, 0.01, 0.1, 1.0],
            phi_k_values: vec![2.0, 0.1],
            time_k_values: vec![2.0, 0.1],
            s_offsets: vec![-2.0, -1.0, 0.0, 1.0, 2.0],
            time_stride: 10,
            sa_sigma: 0.2,
            sa_small_k: 0.25,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSection {
    pub dir: PathBuf,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self { dir: PathBuf::from("out") }
    }
}

fn invalid(key: &str, err: impl std::fmt::Display) -> CliError {
    CliError::Config(format!("{key}: {err}"))
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e: toml::de::Error| {
            let msg = e.message().trim().replace('\n', "; ");
            match e.span() {
                Some(span) => {
                    let line = text[..span.start.min(text.len())].lines().count().max(1);
                    CliError::Config(format!("line {line}: {msg}"))
                }
                None => CliError::Config(msg),
            }
        })
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text).map_err(|e| match e {
            CliError::Config(msg) => CliError::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn pool_spec(&self) -> Result<PoolSpec, CliError> {
        PoolSpec::new(self.pool.depth_sq, self.pool.y0).map_err(|e| invalid("pool", e))
    }

    /// The grid selected by `grid.kind`.
    pub fn grid(&self) -> Result<AssetGrid, CliError> {
        match self.grid.kind {
            GridKindName::Price => AssetGrid::price_spaced(self.pool_spec()?, self.grid.dz, self.grid.half_width)
                .map_err(|e| invalid("grid", e)),
            GridKindName::Uniform => self.uniform_grid(),
        }
    }

    /// The uniform grid with spacing `grid.delta`, used by the quadratic solver.
    pub fn uniform_grid(&self) -> Result<AssetGrid, CliError> {
        AssetGrid::uniform(self.pool_spec()?, self.grid.delta, self.grid.half_width).map_err(|e| invalid("grid", e))
    }

    pub fn market(&self) -> Result<MarketParams, CliError> {
        let m = &self.market;
        let p = MarketParams {
            lambda_sell: m.lambda_sell,
            lambda_buy: m.lambda_buy,
            k: m.k,
            zeta: m.zeta,
            s0: m.s0,
            sigma: m.sigma,
            phi: m.phi,
            horizon: m.horizon,
            exponent_cap: m.exponent_cap,
        };
        p.validate().map_err(|e| invalid("market", e))?;
        Ok(p)
    }

    /// Market parameters for one table cell: `k` and `λ⁺ = λ⁻ = lambda`.
    pub fn market_at(&self, k: f64, lambda: f64) -> Result<MarketParams, CliError> {
        let p = MarketParams { k, lambda_sell: lambda, lambda_buy: lambda, ..self.market()? };
        p.validate().map_err(|e| invalid("sim.k_values/lambda_values", e))?;
        Ok(p)
    }

    pub fn sim_config(&self) -> Result<SimConfig, CliError> {
        let s = &self.sim;
        let cfg = SimConfig {
            n_paths: s.n_paths,
            n_steps: s.n_steps,
            seed: s.seed,
            record_paths: s.record_paths,
            scheme: match s.scheme {
                SchemeName::Bernoulli => EventScheme::Bernoulli,
                SchemeName::Thinning => EventScheme::Thinning,
            },
            fee_bounds: s.fee_bounds.map(|[lo, hi]| (lo, hi)),
        };
        cfg.validate().map_err(|e| invalid("sim", e))?;
        Ok(cfg)
    }

    pub fn time_points(&self) -> Result<usize, CliError> {
        if self.solver.time_points < 3 {
            return Err(invalid("solver.time_points", "need at least 3 evaluation times"));
        }
        Ok(self.solver.time_points)
    }

    pub fn ode_steps(&self) -> Result<usize, CliError> {
        if self.solver.ode_steps < 100 {
            return Err(invalid("solver.ode_steps", "need at least 100 steps"));
        }
        Ok(self.solver.ode_steps)
    }

    /// Checks every section up front so that failures surface as config
    /// errors before any solver runs.
    pub fn validate(&self) -> Result<(), CliError> {
        self.grid()?;
        self.uniform_grid()?;
        let market = self.market()?;
        self.time_points()?;
        self.ode_steps()?;
        self.sim_config()?;
        for &k in &self.sim.k_values {
            for &lambda in &self.sim.lambda_values {
                self.market_at(k, lambda)?;
            }
        }
        if self.sim.strategies.is_empty() {
            return Err(invalid("sim.strategies", "at least one strategy is required"));
        }
        if self.sim.k_values.is_empty() || self.sim.lambda_values.is_empty() {
            return Err(invalid("sim.k_values/lambda_values", "must not be empty"));
        }
        if self.sim.strategies.contains(&StrategyName::OptimalSa) && self.grid.kind != GridKindName::Uniform {
            return Err(invalid("sim.strategies", "optimal_sa needs grid.kind = \"uniform\""));
        }
        if !(0.0..=market.horizon).contains(&self.sim.constant_time) {
            return Err(invalid("sim.constant_time", format!("must lie in [0, {}]", market.horizon)));
        }
        if !(0.0..=market.horizon).contains(&self.figures.t) {
            return Err(invalid("figures.t", format!("must lie in [0, {}]", market.horizon)));
        }
        if self.figures.time_stride == 0 {
            return Err(invalid("figures.time_stride", "must be positive"));
        }
        for (key, ks) in [
            ("limits.fa_k", &self.limits.fa_k),
            ("limits.sa_k", &self.limits.sa_k),
            ("figures.k_values", &self.figures.k_values),
            ("figures.phi_k_values", &self.figures.phi_k_values),
            ("figures.time_k_values", &self.figures.time_k_values),
        ] {
            if let Some(k) = ks.iter().find(|k| !(k.is_finite() && **k > 0.0)) {
                return Err(invalid(key, format!("k must be > 0, got {k}")));
            }
        }
        if let Some(phi) = self.figures.phi_values.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
            return Err(invalid("figures.phi_values", format!("phi must be >= 0, got {phi}")));
        }
        if let Some(t) = self.limits.times.iter().find(|t| !(0.0..=market.horizon).contains(*t)) {
            return Err(invalid("limits.times", format!("{t} is outside [0, {}]", market.horizon)));
        }
        if !(self.figures.sa_small_k > 0.0) {
            return Err(invalid("figures.sa_small_k", "must be > 0"));
        }
        MarketParams { sigma: self.figures.sa_sigma, ..market }
            .validate()
            .map_err(|e| invalid("figures.sa_sigma", e))?;
        Ok(())
    }
}
