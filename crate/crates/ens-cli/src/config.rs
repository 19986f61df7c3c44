//! TOML run-configuration schema. Unknown keys are rejected everywhere so a
//! typo cannot silently fall back to a default.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use ens_core::diagnostics::C0Mode;
use ens_core::initial::{NormalizeMode, RhoStyle, Scenario, VelocityStyle};
use ens_core::integrator::StepConfig;
use ens_core::lp::{Band, BesovSpec, SumExp};

use crate::error::{CliError, Result};

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub grid: GridSection,
    pub scenario: ScenarioSection,
    pub step: StepSection,
    #[serde(default)]
    pub diagnostics: DiagnosticsSection,
    pub output: OutputSection,
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub d: usize,
    pub n: usize,
    pub l: f64,
    pub n_cut: usize,
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSection {
    pub name: String,
    pub rho_style: RhoStyleCfg,
    pub velocity_style: VelocityStyleCfg,
    #[serde(default = "default_alpha")]
    pub alpha_target: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub k_extra: u32,
    #[serde(default = "NormalizeCfg::budget")]
    pub normalize: NormalizeCfg,
}

fn default_alpha() -> f64 {
    0.05
}

#[derive(Clone, Copy, Debug, Deserialize, Serialize, PartialEq, Eq)]
#[serde(rename_all = "kebab-case")]
pub enum RhoStyleCfg {
    SignedRandom,
    NonnegBump,
    Zero,
}

#[derive(Clone, Copy, Debug, Deserialize, Serialize, PartialEq, Eq)]
#[serde(rename_all = "kebab-case")]
pub enum VelocityStyleCfg {
    RandomBandlimited,
    TaylorGreen,
    SingleMode,
    Zero,
}

#[derive(Clone, Copy, Debug, Deserialize, Serialize, PartialEq, Eq)]
#[serde(rename_all = "kebab-case")]
pub enum NormalizeCfg {
    BudgetZ0,
    NegReg,
    None,
}

impl NormalizeCfg {
    fn budget() -> Self {
        NormalizeCfg::BudgetZ0
    }
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct StepSection {
    pub dt: f64,
    pub t_end: f64,
    #[serde(default)]
    pub linear_only: bool,
    #[serde(default = "default_abort")]
    pub abort_threshold: f64,
    /// Number of steps between diagnostic snapshots.
    #[serde(default = "default_stride")]
    pub snapshot_stride: usize,
}

fn default_abort() -> f64 {
    1e12
}

fn default_stride() -> usize {
    4
}

#[derive(Clone, Debug, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct DiagnosticsSection {
    /// Record physical sup norms of w and u per snapshot.
    #[serde(default)]
    pub linf: bool,
    /// Clip fit windows where a series leaves its power-law regime.
    #[serde(default)]
    pub detect_floor: bool,
    #[serde(default)]
    pub stability_pair: bool,
    #[serde(default = "default_perturbation")]
    pub perturbation_size: f64,
    /// Extra Besov-norm columns
    #[serde(default, rename = "besov")]
    pub besov_columns: Vec<BesovColumn>,
    /// Decay fits evaluated after the run.
    #[serde(default, rename = "fit")]
    pub fits: Vec<FitSpec>,
}

fn default_perturbation() -> f64 {
    1e-6
}

#[derive(Clone, Debug, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct BesovColumn {
    pub s: f64,
    pub r: SumExpCfg,
    pub band: BandCfg,
    pub field: FieldTag,
}

impl BesovColumn {
    pub fn column_name(&self) -> String {
        format!("b_{}_{}_{}_{}", self.s, self.r.tag(), self.band.tag(), self.field.tag())
    }

    pub fn spec(&self) -> BesovSpec {
        BesovSpec { s: self.s, r: self.r.into(), band: self.band.into() }
    }
}

#[derive(Clone, Copy, Debug, Deserialize, Serialize, PartialEq, Eq)]
#[serde(rename_all = "kebab-case")]
pub enum SumExpCfg {
    One,
    Inf,
}

impl SumExpCfg {
    fn tag(&self) -> &'static str {
        match self {
            SumExpCfg::One => "one",
            SumExpCfg::Inf => "inf",
        }
    }
}

impl From<SumExpCfg> for SumExp {
    fn from(v: SumExpCfg) -> SumExp {
        match v {
            SumExpCfg::One => SumExp::One,
            SumExpCfg::Inf => SumExp::Inf,
        }
    }
}

#[derive(Clone, Copy, Debug, Deserialize, Serialize, PartialEq, Eq)]
#[serde(rename_all = "kebab-case")]
pub enum BandCfg {
    All,
    Low,
    High,
}

impl BandCfg {
    fn tag(&self) -> &'static str {
        match self {
            BandCfg::All => "all",
            BandCfg::Low => "low",
            BandCfg::High => "high",
        }
    }
}

impl From<BandCfg> for Band {
    fn from(v: BandCfg) -> Band {
        match v {
            BandCfg::All => Band::All,
            BandCfg::Low => Band::Low,
            BandCfg::High => Band::High,
        }
    }
}

#[derive(Clone, Copy, Debug, Deserialize, Serialize, PartialEq, Eq)]
#[serde(rename_all = "kebab-case")]
pub enum FieldTag {
    Rho,
    W,
    U,
    Diff,
}

impl FieldTag {
    fn tag(&self) -> &'static str {
        match self {
            FieldTag::Rho => "rho",
            FieldTag::W => "w",
            FieldTag::U => "u",
            FieldTag::Diff => "diff",
        }
    }
}

#[derive(Clone, Debug, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct FitSpec {
    pub name: String,
    /// A column name, or several joined with '+' (summed pointwise).
    pub expr: String,
    pub window: [f64; 2],
    #[serde(default = "C0ModeCfg::fit")]
    pub c0_mode: C0ModeCfg,
    /// Required when c0_mode = "given".
    #[serde(default)]
    pub c0: Option<f64>,
}

impl FitSpec {
    pub fn c0_mode(&self) -> Result<C0Mode> {
        match self.c0_mode {
            C0ModeCfg::Fit => Ok(C0Mode::Fit),
            C0ModeCfg::Unit => Ok(C0Mode::Unit),
            C0ModeCfg::Given => match self.c0 {
                Some(c) => Ok(C0Mode::Given(c)),
                None => Err(CliError::Config(format!(
                    "fit {}: c0_mode = \"given\" requires a c0 value",
                    self.name
                ))),
            },
        }
    }
}

#[derive(Clone, Copy, Debug, Deserialize, Serialize, PartialEq, Eq)]
#[serde(rename_all = "kebab-case")]
pub enum C0ModeCfg {
    Fit,
    Unit,
    Given,
}

impl C0ModeCfg {
    fn fit() -> Self {
        C0ModeCfg::Fit
    }
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    pub dir: PathBuf,
    #[serde(default = "default_series")]
    pub series: String,
    #[serde(default = "default_summary")]
    pub summary: String,
    /// Export the final state in the raw-coefficient binary format.
    #[serde(default)]
    pub save_state: bool,
}

fn default_series() -> String {
    "series.csv".into()
}

fn default_summary() -> String {
    "summary.json".into()
}

impl RunConfig {
    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: RunConfig =
            toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        if !self.step.dt.is_finite() || self.step.dt <= 0.0 {
            return Err(CliError::Config(format!("step.dt must be positive, got {}", self.step.dt)));
        }
        if !self.step.t_end.is_finite() || self.step.t_end <= 0.0 {
            return Err(CliError::Config(format!(
                "step.t_end must be positive, got {}",
                self.step.t_end
            )));
        }
        if self.step.snapshot_stride == 0 {
            return Err(CliError::Config("step.snapshot_stride must be ≥ 1".into()));
        }
        let eps = self.diagnostics.perturbation_size;
        if self.diagnostics.stability_pair && (!eps.is_finite() || eps <= 0.0) {
            return Err(CliError::Config(format!(
                "diagnostics.perturbation_size must be positive, got {}",
                self.diagnostics.perturbation_size
            )));
        }
        for b in &self.diagnostics.besov_columns {
            if !b.s.is_finite() {
                return Err(CliError::Config(format!(
                    "besov column regularity must be finite, got {}",
                    b.s
                )));
            }
        }
        for f in &self.diagnostics.fits {
            let ordered =
                f.window[0].is_finite() && f.window[1].is_finite() && f.window[0] < f.window[1];
            if !ordered {
                return Err(CliError::Config(format!(
                    "fit {}: degenerate window [{}, {}]",
                    f.name, f.window[0], f.window[1]
                )));
            }
            f.c0_mode()?;
        }
        Ok(())
    }

    /// Core scenario carrying both grid and initial-data parameters.
    pub fn scenario(&self) -> Scenario {
        Scenario {
            name: self.scenario.name.clone(),
            d: self.grid.d,
            n: self.grid.n,
            l: self.grid.l,
            n_cut: self.grid.n_cut,
            alpha_target: self.scenario.alpha_target,
            seed: self.scenario.seed,
            rho_style: match self.scenario.rho_style {
                RhoStyleCfg::SignedRandom => RhoStyle::SignedRandom,
                RhoStyleCfg::NonnegBump => RhoStyle::NonnegBump,
                RhoStyleCfg::Zero => RhoStyle::Zero,
            },
            velocity_style: match self.scenario.velocity_style {
                VelocityStyleCfg::RandomBandlimited => VelocityStyle::RandomBandlimited,
                VelocityStyleCfg::TaylorGreen => VelocityStyle::TaylorGreen,
                VelocityStyleCfg::SingleMode => VelocityStyle::SingleMode,
                VelocityStyleCfg::Zero => VelocityStyle::Zero,
            },
            k_extra: self.scenario.k_extra,
            normalize: match self.scenario.normalize {
                NormalizeCfg::BudgetZ0 => Some(NormalizeMode::BudgetZ0),
                NormalizeCfg::NegReg => Some(NormalizeMode::NegReg),
                NormalizeCfg::None => None,
            },
        }
    }

    pub fn step_config(&self) -> StepConfig {
        StepConfig {
            dt: self.step.dt,
            linear_only: self.step.linear_only,
            abort_threshold: self.step.abort_threshold,
        }
    }
}
