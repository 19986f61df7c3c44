//! Named built-in run configurations. Each one is a complete `RunConfig`
//! (the shipped `configs/*.toml` files are generated from these and guarded
//! against drift by a test), so every standard experiment can be launched by
//! name or from its file.

use std::path::PathBuf;

use crate::config::{
    BandCfg, BesovColumn, C0ModeCfg, DiagnosticsSection, FieldTag, FitSpec, GridSection,
    NormalizeCfg, OutputSection, RhoStyleCfg, RunConfig, ScenarioSection, StepSection, SumExpCfg,
    VelocityStyleCfg,
};

pub struct Builtin {
    pub name: &'static str,
    pub about: &'static str,
    pub make: fn() -> RunConfig,
}

pub const BUILTINS: &[Builtin] = &[
    Builtin {
        name: "linear-decay-2d",
        about: "linearized system, 2-d, weak-norm-normalized data; heat-rate check",
        make: linear_decay_2d,
    },
    Builtin {
        name: "small-data-2d",
        about: "full system, 2-d small data; velocity and damped-mode decay rates",
        make: small_data_2d,
    },
    Builtin {
        name: "small-data-3d",
        about: "full system, 3-d small data with shifted-weight and sup-norm tracking",
        make: small_data_3d,
    },
    Builtin {
        name: "stability-2d",
        about: "2-d small data evolved against a perturbed twin; difference functional",
        make: stability_2d,
    },
    Builtin {
        name: "taylor-green-2d",
        about: "cellular vortex velocity with a nonnegative density bump",
        make: taylor_green_2d,
    },
    Builtin { name: "zero", about: "identically zero data; exercises refusal paths", make: zero },
];

pub fn builtin(name: &str) -> Option<RunConfig> {
    BUILTINS.iter().find(|b| b.name == name).map(|b| (b.make)())
}

fn out(name: &str) -> OutputSection {
    OutputSection {
        dir: PathBuf::from(format!("out/{name}")),
        series: "series.csv".into(),
        summary: "summary.json".into(),
        save_state: false,
    }
}

fn b1(s: f64, field: FieldTag) -> BesovColumn {
    BesovColumn { s, r: SumExpCfg::One, band: BandCfg::All, field }
}

fn fit(name: &str, expr: &str, window: [f64; 2]) -> FitSpec {
    FitSpec { name: name.into(), expr: expr.into(), window, c0_mode: C0ModeCfg::Fit, c0: None }
}

fn linear_decay_2d() -> RunConfig {
    RunConfig {
        grid: GridSection { d: 2, n: 128, l: 32.0, n_cut: 42 },
        scenario: ScenarioSection {
            name: "linear-decay-2d".into(),
            rho_style: RhoStyleCfg::SignedRandom,
            velocity_style: VelocityStyleCfg::RandomBandlimited,
            alpha_target: 0.05,
            seed: 13,
            k_extra: 0,
            normalize: NormalizeCfg::NegReg,
        },
        step: StepSection {
            dt: 0.1,
            t_end: 110.0,
            linear_only: true,
            abort_threshold: 1e12,
            snapshot_stride: 5,
        },
        diagnostics: DiagnosticsSection {
            linf: false,
            detect_floor: false,
            stability_pair: false,
            perturbation_size: 1e-6,
            besov_columns: vec![],
            fits: vec![fit("velocity-l2", "l2_w+l2_u", [10.0, 100.0])],
        },
        output: out("linear-decay-2d"),
    }
}

fn small_data_2d() -> RunConfig {
    RunConfig {
        grid: GridSection { d: 2, n: 128, l: 32.0, n_cut: 42 },
        scenario: ScenarioSection {
            name: "small-data-2d".into(),
            rho_style: RhoStyleCfg::SignedRandom,
            velocity_style: VelocityStyleCfg::RandomBandlimited,
            alpha_target: 0.05,
            seed: 13,
            k_extra: 0,
            normalize: NormalizeCfg::BudgetZ0,
        },
        step: StepSection {
            dt: 0.05,
            t_end: 100.0,
            linear_only: false,
            abort_threshold: 1e12,
            snapshot_stride: 10,
        },
        diagnostics: DiagnosticsSection {
            linf: false,
            detect_floor: true,
            stability_pair: false,
            perturbation_size: 1e-6,
            besov_columns: vec![b1(2.0, FieldTag::W), b1(0.0, FieldTag::U)],
            fits: vec![
                fit("velocity-l2", "l2_w+l2_u", [10.0, 90.0]),
                fit("damped-l2", "l2_diff", [4.0, 40.0]),
            ],
        },
        output: out("small-data-2d"),
    }
}

fn small_data_3d() -> RunConfig {
    RunConfig {
        grid: GridSection { d: 3, n: 64, l: 21.0, n_cut: 21 },
        scenario: ScenarioSection {
            name: "small-data-3d".into(),
            rho_style: RhoStyleCfg::SignedRandom,
            velocity_style: VelocityStyleCfg::RandomBandlimited,
            alpha_target: 0.05,
            seed: 11,
            k_extra: 1,
            normalize: NormalizeCfg::BudgetZ0,
        },
        step: StepSection {
            dt: 0.05,
            t_end: 60.0,
            linear_only: false,
            abort_threshold: 1e12,
            snapshot_stride: 8,
        },
        diagnostics: DiagnosticsSection {
            linf: true,
            detect_floor: true,
            stability_pair: false,
            perturbation_size: 1e-6,
            besov_columns: vec![b1(2.5, FieldTag::W), b1(0.5, FieldTag::U)],
            fits: vec![
                fit("velocity-l2", "l2_w+l2_u", [5.0, 50.0]),
                fit("damped-l2", "l2_diff", [20.0, 58.0]),
                fit("sigma-mix", "b_2.5_one_all_w+b_0.5_one_all_u", [8.0, 50.0]),
                fit("velocity-linf", "linf_w+linf_u", [5.0, 50.0]),
            ],
        },
        output: out("small-data-3d"),
    }
}

fn stability_2d() -> RunConfig {
    let mut cfg = small_data_2d();
    cfg.scenario.name = "stability-2d".into();
    cfg.step.t_end = 50.0;
    cfg.diagnostics.stability_pair = true;
    cfg.diagnostics.perturbation_size = 1e-6;
    cfg.output = out("stability-2d");
    cfg
}

fn taylor_green_2d() -> RunConfig {
    RunConfig {
        grid: GridSection { d: 2, n: 64, l: 4.0, n_cut: 21 },
        scenario: ScenarioSection {
            name: "taylor-green-2d".into(),
            rho_style: RhoStyleCfg::NonnegBump,
            velocity_style: VelocityStyleCfg::TaylorGreen,
            alpha_target: 0.05,
            seed: 1,
            k_extra: 0,
            normalize: NormalizeCfg::BudgetZ0,
        },
        step: StepSection {
            dt: 0.05,
            t_end: 20.0,
            linear_only: false,
            abort_threshold: 1e12,
            snapshot_stride: 4,
        },
        diagnostics: DiagnosticsSection {
            linf: false,
            detect_floor: false,
            stability_pair: false,
            perturbation_size: 1e-6,
            besov_columns: vec![],
            fits: vec![fit("velocity-l2", "l2_w+l2_u", [2.0, 18.0])],
        },
        output: out("taylor-green-2d"),
    }
}

fn zero() -> RunConfig {
    RunConfig {
        grid: GridSection { d: 2, n: 16, l: 4.0, n_cut: 5 },
        scenario: ScenarioSection {
            name: "zero".into(),
            rho_style: RhoStyleCfg::Zero,
            velocity_style: VelocityStyleCfg::Zero,
            alpha_target: 0.0,
            seed: 0,
            k_extra: 0,
            normalize: NormalizeCfg::None,
        },
        step: StepSection {
            dt: 0.1,
            t_end: 1.0,
            linear_only: false,
            abort_threshold: 1e12,
            snapshot_stride: 2,
        },
        diagnostics: DiagnosticsSection {
            linf: false,
            detect_floor: false,
            stability_pair: false,
            perturbation_size: 1e-6,
            besov_columns: vec![],
            fits: vec![fit("velocity-l2", "l2_w+l2_u", [0.0, 1.0])],
        },
        output: out("zero"),
    }
}
