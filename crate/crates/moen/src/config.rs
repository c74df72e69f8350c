//! Run configuration.
//!
//! A config file is TOML with the sections `[model]`, `[scenario]`,
//! `[network]`, `[training]`, `[observer]`, `[output]` and `[report]`.
//! Every key is optional. Missing keys come from the preset selected by
//! `scenario.preset` (or implied by `model.name`), unknown keys are errors.
//! [`RunConfig::to_toml`] writes the fully resolved form, which loads back
//! to the same configuration.

use std::path::{Path, PathBuf};

use moen_core::systems::{duffing_model, harmonic_model, Dynamics, SignalKind};
use moen_core::{
    BbRule, EnsembleSpec, Mat, NetworkShape, ObservationRecord, ObserverOptions, Scenario, Signal,
    SystemModel, TrainingConfig,
};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Preset {
    Harmonic,
    DuffingTrain,
    DuffingTest,
}

impl Preset {
    fn model(self) -> ModelName {
        match self {
            Preset::Harmonic => ModelName::Harmonic,
            Preset::DuffingTrain | Preset::DuffingTest => ModelName::Duffing,
        }
    }

    fn scenario(self) -> Scenario {
        match self {
            Preset::Harmonic => Scenario::harmonic_default(),
            Preset::DuffingTrain => Scenario::duffing_training(),
            Preset::DuffingTest => Scenario::duffing_test(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelName {
    Harmonic,
    Duffing,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SignalShape {
    Zero,
    Cosine,
    Sine,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StepRule {
    Long,
    Short,
    Alternate,
}

impl From<StepRule> for BbRule {
    fn from(rule: StepRule) -> Self {
        match rule {
            StepRule::Long => BbRule::Long,
            StepRule::Short => BbRule::Short,
            StepRule::Alternate => BbRule::Alternate,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    pub name: ModelName,
    /// Input matrix `G`, one entry per state (single disturbance channel).
    pub g: Vec<f64>,
    /// Output row `C` (single measurement).
    pub c: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SignalSection {
    pub kind: SignalShape,
    pub amplitude: f64,
    pub frequency: f64,
}

impl SignalSection {
    fn from_core(s: &Signal) -> Self {
        let kind = match s.kind {
            SignalKind::Zero => SignalShape::Zero,
            SignalKind::Cosine => SignalShape::Cosine,
            SignalKind::Sine => SignalShape::Sine,
        };
        SignalSection { kind, amplitude: s.amplitude, frequency: s.frequency }
    }

    fn to_core(self) -> Signal {
        match self.kind {
            SignalShape::Zero => Signal::ZERO,
            SignalShape::Cosine => Signal::cosine(self.amplitude, self.frequency),
            SignalShape::Sine => Signal::sine(self.amplitude, self.frequency),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSection {
    pub preset: Preset,
    #[serde(rename = "T")]
    pub horizon: f64,
    pub grid_steps: usize,
    pub alpha: f64,
    /// `Q₀ = q0_scale · I`
    pub q0_scale: f64,
    pub x0_prior: Vec<f64>,
    pub x_true_init: Vec<f64>,
    pub v: SignalSection,
    pub w: SignalSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkSection {
    pub layers: usize,
    pub time_input: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainingSection {
    pub d: usize,
    pub iters: usize,
    pub shift_enabled: bool,
    pub shift_at: usize,
    pub gamma_max: f64,
    pub first_step: f64,
    pub bb_rule: StepRule,
    pub init_seed: u64,
    pub init_scale: f64,
    pub init_output_diag: f64,
    pub ensemble_seed: u64,
    pub ensemble_stddev: f64,
    /// Defaults to the true terminal state of the scenario.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ensemble_center: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObserverSection {
    pub alpha_in_gain: bool,
    pub ridge: f64,
    pub symmetrize: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    pub out_dir: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReportSection {
    pub samples: Vec<usize>,
    pub alphas: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub model: ModelSection,
    pub scenario: ScenarioSection,
    pub network: NetworkSection,
    pub training: TrainingSection,
    pub observer: ObserverSection,
    pub output: OutputSection,
    pub report: ReportSection,
}

/// Command-line overrides applied after the file is resolved.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub alpha: Option<f64>,
    pub samples: Option<usize>,
    pub iters: Option<usize>,
    pub seed: Option<u64>,
    pub out_dir: Option<PathBuf>,
}

impl RunConfig {
    pub fn preset(preset: Preset) -> Self {
        let sc = preset.scenario();
        let model = &sc.model;
        let (delta, lambda, beta) = match model.dynamics() {
            Dynamics::Duffing { delta, lambda, beta } => (Some(*delta), Some(*lambda), Some(*beta)),
            Dynamics::Linear { .. } => (None, None, None),
        };
        let harmonic = preset == Preset::Harmonic;
        RunConfig {
            model: ModelSection {
                name: preset.model(),
                g: model.g().as_slice().to_vec(),
                c: model.c().as_slice().to_vec(),
                delta,
                lambda,
                beta,
            },
            scenario: ScenarioSection {
                preset,
                horizon: sc.horizon,
                grid_steps: sc.grid_steps,
                alpha: sc.alpha,
                q0_scale: sc.q0[(0, 0)],
                x0_prior: sc.x0_prior.clone(),
                x_true_init: sc.x_true_init.clone(),
                v: SignalSection::from_core(&sc.v),
                w: SignalSection::from_core(&sc.w),
            },
            network: NetworkSection { layers: 2, time_input: false },
            training: TrainingSection {
                d: if harmonic { 20 } else { 5 },
                iters: 50,
                shift_enabled: true,
                shift_at: 20,
                gamma_max: if harmonic { 10.0 } else { 0.1 },
                first_step: if harmonic { 1e-2 } else { 1e-3 },
                bb_rule: StepRule::Alternate,
                init_seed: 42,
                init_scale: 0.1,
                init_output_diag: 1.0,
                ensemble_seed: EnsembleSpec::DEFAULT_SEED,
                ensemble_stddev: if harmonic { EnsembleSpec::DEFAULT_STDDEV } else { 0.5 },
                ensemble_center: None,
            },
            observer: ObserverSection { alpha_in_gain: true, ridge: 1e-8, symmetrize: false },
            output: OutputSection { out_dir: PathBuf::from("out") },
            report: ReportSection { samples: vec![1, 10, 20], alphas: vec![1.0, 10.0] },
        }
    }

    /// Reads and resolves a config file; `None` gives the harmonic preset.
    pub fn load(path: Option<&Path>) -> Result<Self> {
        match path {
            None => Ok(RunConfig::preset(Preset::Harmonic)),
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|e| CliError::io(p, e))?;
                RunConfig::from_toml_str(&text).map_err(|e| match e {
                    CliError::Config(msg) => CliError::Config(format!("{}: {msg}", p.display())),
                    other => other,
                })
            }
        }
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let user: toml::Table = text.parse().map_err(|e: toml::de::Error| CliError::config(e.to_string()))?;
        let preset = implied_preset(&user)?;
        let mut merged = toml::Table::try_from(RunConfig::preset(preset)).expect("config serializes");
        merge(&mut merged, user);
        let config: RunConfig = toml::Value::Table(merged)
            .try_into()
            .map_err(|e: toml::de::Error| CliError::config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn apply(&mut self, o: &Overrides) -> Result<()> {
        if let Some(alpha) = o.alpha {
            self.scenario.alpha = alpha;
            self.report.alphas = vec![alpha];
        }
        if let Some(d) = o.samples {
            self.training.d = d;
            self.report.samples = vec![d];
        }
        if let Some(iters) = o.iters {
            self.training.iters = iters;
        }
        if let Some(seed) = o.seed {
            self.training.ensemble_seed = seed;
        }
        if let Some(dir) = &o.out_dir {
            self.output.out_dir = dir.clone();
        }
        self.validate()
    }

    pub fn validate(&self) -> Result<()> {
        if self.scenario.preset.model() != self.model.name {
            return Err(CliError::config(format!(
                "scenario.preset {:?} does not fit model.name {:?}",
                self.scenario.preset, self.model.name
            )));
        }
        if self.model.name == ModelName::Harmonic
            && (self.model.delta.is_some() || self.model.lambda.is_some() || self.model.beta.is_some())
        {
            return Err(CliError::config("model.delta, model.lambda and model.beta apply to duffing only"));
        }
        let t = &self.training;
        if t.d == 0 {
            return Err(CliError::config("training.d must be at least 1"));
        }
        if t.shift_enabled && t.shift_at > t.iters {
            return Err(CliError::config(format!(
                "training.shift_at = {} exceeds training.iters = {}",
                t.shift_at, t.iters
            )));
        }
        if !(t.ensemble_stddev >= 0.0) {
            return Err(CliError::config("training.ensemble_stddev must be nonnegative"));
        }
        if !(self.observer.ridge >= 0.0) {
            return Err(CliError::config("observer.ridge must be nonnegative"));
        }
        if self.report.alphas.iter().any(|a| !(*a > 0.0)) {
            return Err(CliError::config("report.alphas must be positive"));
        }
        if self.report.samples.contains(&0) {
            return Err(CliError::config("report.samples must be at least 1"));
        }
        let scenario = self.scenario()?;
        if let Some(center) = &t.ensemble_center {
            if center.len() != scenario.model.n() {
                return Err(CliError::config("training.ensemble_center has the wrong length"));
            }
        }
        self.shape()?;
        Ok(())
    }

    pub fn model(&self) -> Result<SystemModel> {
        let m = &self.model;
        let base = match m.name {
            ModelName::Harmonic => harmonic_model(),
            ModelName::Duffing => duffing_model(),
        };
        let dynamics = match base.dynamics() {
            Dynamics::Duffing { delta, lambda, beta } => Dynamics::Duffing {
                delta: m.delta.unwrap_or(*delta),
                lambda: m.lambda.unwrap_or(*lambda),
                beta: m.beta.unwrap_or(*beta),
            },
            linear => linear.clone(),
        };
        let g = Mat::column(&m.g);
        let c = Mat::new(1, m.c.len(), m.c.clone()).map_err(config_err("model.c"))?;
        SystemModel::new(base.name(), dynamics, g, c).map_err(config_err("model"))
    }

    pub fn scenario(&self) -> Result<Scenario> {
        let s = &self.scenario;
        let model = self.model()?;
        let n = model.n();
        let scenario = Scenario {
            model,
            x0_prior: s.x0_prior.clone(),
            x_true_init: s.x_true_init.clone(),
            v: s.v.to_core(),
            w: s.w.to_core(),
            horizon: s.horizon,
            alpha: s.alpha,
            q0: Mat::identity(n).scale(s.q0_scale),
            grid_steps: s.grid_steps,
        };
        scenario.validate().map_err(config_err("scenario"))?;
        Ok(scenario)
    }

    pub fn shape(&self) -> Result<NetworkShape> {
        let n = self.model.g.len();
        NetworkShape::square(n, self.network.layers, self.network.time_input).map_err(config_err("network"))
    }

    pub fn observer_options(&self) -> ObserverOptions {
        let o = &self.observer;
        ObserverOptions { alpha_in_gain: o.alpha_in_gain, ridge: o.ridge, symmetrize: o.symmetrize }
    }

    /// Training setup for `d` samples; the ensemble is centered on the true
    /// terminal state unless `training.ensemble_center` is given.
    pub fn training_config(&self, scenario: Scenario, obs: ObservationRecord, d: usize) -> Result<TrainingConfig> {
        let t = &self.training;
        let center = t.ensemble_center.clone().unwrap_or_else(|| obs.x_truth.last().to_vec());
        let ensemble = EnsembleSpec::Gaussian { center, stddev: t.ensemble_stddev, count: d, seed: t.ensemble_seed };
        let mut tc = TrainingConfig::new(scenario, obs, ensemble);
        tc.shape = self.shape()?;
        tc.iters = t.iters;
        tc.shift_at = t.shift_enabled.then_some(t.shift_at);
        tc.gamma_max = t.gamma_max;
        tc.first_step = t.first_step;
        tc.bb_rule = t.bb_rule.into();
        tc.init_seed = t.init_seed;
        tc.init_scale = t.init_scale;
        tc.init_output_diag = t.init_output_diag;
        tc.observer = self.observer_options();
        tc.validate().map_err(config_err("training"))?;
        Ok(tc)
    }
}

fn config_err(section: &'static str) -> impl Fn(moen_core::Error) -> CliError {
    move |e| CliError::config(format!("{section}: {e}"))
}

fn implied_preset(user: &toml::Table) -> Result<Preset> {
    let lookup = |section: &str, key: &str| user.get(section).and_then(|s| s.get(key)).cloned();
    if let Some(v) = lookup("scenario", "preset") {
        return v.try_into().map_err(|e: toml::de::Error| CliError::config(format!("scenario.preset: {e}")));
    }
    match lookup("model", "name") {
        Some(v) => {
            let name: ModelName =
                v.try_into().map_err(|e: toml::de::Error| CliError::config(format!("model.name: {e}")))?;
            Ok(match name {
                ModelName::Harmonic => Preset::Harmonic,
                ModelName::Duffing => Preset::DuffingTrain,
            })
        }
        None => Ok(Preset::Harmonic),
    }
}

fn merge(base: &mut toml::Table, over: toml::Table) {
    for (key, value) in over {
        match (base.get_mut(&key), value) {
            (Some(toml::Value::Table(b)), toml::Value::Table(o)) => merge(b, o),
            (_, value) => {
                base.insert(key, value);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_is_harmonic_preset() {
        let c = RunConfig::from_toml_str("").unwrap();
        assert_eq!(c, RunConfig::preset(Preset::Harmonic));
    }

    #[test]
    fn resolved_form_round_trips() {
        for p in [Preset::Harmonic, Preset::DuffingTrain, Preset::DuffingTest] {
            let c = RunConfig::preset(p);
            assert_eq!(RunConfig::from_toml_str(&c.to_toml()).unwrap(), c);
        }
    }

    #[test]
    fn unknown_key_is_named() {
        let err = RunConfig::from_toml_str("[scenario]\nalhpa = 2.0\n").unwrap_err();
        assert!(err.to_string().contains("alhpa"), "{err}");
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn unknown_section_is_named() {
        let err = RunConfig::from_toml_str("[trainig]\nd = 2\n").unwrap_err();
        assert!(err.to_string().contains("trainig"), "{err}");
    }

    #[test]
    fn model_name_selects_duffing_defaults() {
        let c = RunConfig::from_toml_str("[model]\nname = \"duffing\"\n").unwrap();
        assert_eq!(c.scenario.preset, Preset::DuffingTrain);
        assert_eq!(c.training.d, 5);
        assert_eq!(c.model.delta, Some(0.3));
    }

    #[test]
    fn partial_sections_keep_other_defaults() {
        let c = RunConfig::from_toml_str("[scenario]\nalpha = 10\n[scenario.v]\namplitude = 0.5\n").unwrap();
        assert_eq!(c.scenario.alpha, 10.0);
        assert_eq!(c.scenario.v.amplitude, 0.5);
        assert_eq!(c.scenario.v.frequency, 1.2);
        assert_eq!(c.scenario.grid_steps, 1000);
    }

    #[test]
    fn preset_model_mismatch_rejected() {
        let err = RunConfig::from_toml_str("[model]\nname = \"harmonic\"\n[scenario]\npreset = \"duffing_test\"\n");
        assert!(matches!(err, Err(CliError::Config(_))));
    }

    #[test]
    fn duffing_parameters_rejected_for_harmonic() {
        assert!(RunConfig::from_toml_str("[model]\ndelta = 0.1\n").is_err());
    }

    #[test]
    fn shift_after_last_iteration_rejected() {
        let err = RunConfig::from_toml_str("[training]\niters = 10\nshift_at = 20\n").unwrap_err();
        assert!(err.to_string().contains("shift_at"), "{err}");
    }

    #[test]
    fn overrides_apply_and_revalidate() {
        let mut c = RunConfig::preset(Preset::Harmonic);
        let o = Overrides { alpha: Some(10.0), samples: Some(3), iters: Some(5), seed: Some(7), out_dir: None };
        assert!(c.apply(&o).is_err(), "shift_at 20 > iters 5");
        c.training.shift_at = 2;
        c.apply(&o).unwrap();
        assert_eq!((c.scenario.alpha, c.training.d, c.training.iters, c.training.ensemble_seed), (10.0, 3, 5, 7));
        assert_eq!(c.report.alphas, vec![10.0]);
        assert_eq!(c.report.samples, vec![3]);
    }

    #[test]
    fn bad_values_are_config_errors() {
        for text in ["[scenario]\nT = -1.0\n", "[scenario]\nalpha = 0.0\n", "[scenario]\nx0_prior = [1.0]\n"] {
            let err = RunConfig::from_toml_str(text).unwrap_err();
            assert_eq!(err.exit_code(), 2, "{text}: {err}");
        }
    }

    #[test]
    fn training_config_mirrors_sections() {
        let c = RunConfig::preset(Preset::Harmonic);
        let sc = c.scenario().unwrap();
        let obs = moen_core::systems::simulate_truth(&sc).unwrap();
        let tc = c.training_config(sc, obs.clone(), 4).unwrap();
        assert_eq!(tc.shift_at, Some(20));
        assert_eq!(tc.bb_rule, BbRule::Alternate);
        match tc.ensemble {
            EnsembleSpec::Gaussian { center, count, stddev, seed } => {
                assert_eq!(center, obs.x_truth.last());
                assert_eq!((count, stddev, seed), (4, 1.2, 42));
            }
            other => panic!("{other:?}"),
        }
    }
}
