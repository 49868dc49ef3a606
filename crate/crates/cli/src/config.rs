//! Strict TOML scenario configuration.
//!
//! Every key is optional and defaults to the reference operating point
//! (g = 20, eta = 100 g, drive delay 5.27, drive width 31, closed system),
//! so an empty file is a complete scenario. Unknown keys are rejected.
//! Semantic problems are reported with the offending key path.

use serde::{Deserialize, Serialize};
use zeno_passage::dynamics::IntegratorSettings;
use zeno_passage::hilbert::Level;
use zeno_passage::model::{
    CouplingSpec, DecoherenceSpec, Family, PulseShape, ScenarioSpec,
};

use crate::{Error, Result};

/// Default integrator step for density-matrix runs, where the automatic
/// stability step would be needlessly small for fidelity work.
pub const OPEN_SYSTEM_STEP: f64 = 2.5e-4;

const FAMILIES: [&str; 3] = ["two-atom", "n-atom", "high-dim"];
const BRANCHES: [&str; 2] = ["right", "left"];
const OBSERVABLES: [&str; 3] = ["populations", "bridge", "leakage"];

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawConfig {
    system: Option<RawSystem>,
    pulses: Option<RawPulses>,
    decoherence: Option<RawDecoherence>,
    integrator: Option<RawIntegrator>,
    sweep: Option<RawSweep>,
    output: Option<RawOutput>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSystem {
    family: Option<String>,
    n: Option<usize>,
    g: Option<f64>,
    eta: Option<f64>,
    cutoff: Option<u8>,
    branch: Option<String>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPulses {
    amplitude_a: Option<f64>,
    delay_a: Option<f64>,
    width_a: Option<f64>,
    amplitude_b: Option<f64>,
    delay_b: Option<f64>,
    width_b: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDecoherence {
    kappa: Option<f64>,
    gamma: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawIntegrator {
    step: Option<f64>,
    stride: Option<f64>,
    tolerance: Option<f64>,
    window: Option<[f64; 2]>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSweep {
    kappa_over_g: Option<Vec<f64>>,
    gamma_over_g: Option<Vec<f64>>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawOutput {
    observables: Option<Vec<String>>,
}

/// A fully resolved scenario: every default filled in, every value
/// validated. Serialized verbatim into result summaries as provenance.
#[derive(Clone, Debug, Serialize)]
pub struct Config {
    pub system: SystemConfig,
    pub pulses: PulseConfig,
    pub decoherence: DecoherenceConfig,
    pub integrator: IntegratorConfig,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepConfig>,
    pub output: OutputConfig,
}

#[derive(Clone, Debug, Serialize)]
pub struct SystemConfig {
    pub family: String,
    pub n: usize,
    pub g: f64,
    pub eta: f64,
    pub cutoff: u8,
    pub branch: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct PulseConfig {
    pub amplitude_a: f64,
    pub delay_a: f64,
    pub width_a: f64,
    pub amplitude_b: f64,
    pub delay_b: f64,
    pub width_b: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct DecoherenceConfig {
    pub kappa: f64,
    pub gamma: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct IntegratorConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub step: Option<f64>,
    pub stride: f64,
    pub tolerance: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub window: Option<[f64; 2]>,
}

#[derive(Clone, Debug, Serialize)]
pub struct SweepConfig {
    pub kappa_over_g: Vec<f64>,
    pub gamma_over_g: Vec<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct OutputConfig {
    pub observables: Vec<String>,
}

/// Parses a configuration file, applying an optional named preset over
/// the file's own values before validation.
pub fn load(text: &str, preset: Option<&str>) -> Result<Config> {
    let mut raw: RawConfig = toml::from_str(text)?;
    if let Some(name) = preset {
        apply_preset(&mut raw, name)?;
    }
    resolve(raw)
}

/// Overrides the physics keys pinned by a named preset. `cs-experiment`
/// is the cesium cavity-QED operating point, g = 2.5 GHz with 10 MHz
/// losses; in drive units (drive peak 125 MHz) that is g = 20, eta = 2000,
/// kappa = gamma = 0.08.
fn apply_preset(raw: &mut RawConfig, name: &str) -> Result<()> {
    match name {
        "cs-experiment" => {
            let system = raw.system.get_or_insert_with(RawSystem::default);
            system.g = Some(20.0);
            system.eta = Some(2000.0);
            let rates = raw.decoherence.get_or_insert_with(RawDecoherence::default);
            rates.kappa = Some(0.08);
            rates.gamma = Some(0.08);
            Ok(())
        }
        other => Err(Error::UnknownPreset(other.into())),
    }
}

fn check_finite(path: &str, value: f64) -> Result<f64> {
    if value.is_finite() {
        Ok(value)
    } else {
        Err(Error::semantic(path, format!("value must be finite, got {value}")))
    }
}

fn check_non_negative(path: &str, value: f64) -> Result<f64> {
    check_finite(path, value)?;
    if value >= 0.0 {
        Ok(value)
    } else {
        Err(Error::semantic(path, format!("value must be non-negative, got {value}")))
    }
}

fn check_positive(path: &str, value: f64) -> Result<f64> {
    check_finite(path, value)?;
    if value > 0.0 {
        Ok(value)
    } else {
        Err(Error::semantic(path, format!("value must be positive, got {value}")))
    }
}

fn check_choice(path: &str, value: String, allowed: &[&str]) -> Result<String> {
    if allowed.contains(&value.as_str()) {
        Ok(value)
    } else {
        Err(Error::semantic(
            path,
            format!("'{value}' is not one of: {}", allowed.join(", ")),
        ))
    }
}

fn check_family_size(path: &str, family: &str, n: usize) -> Result<usize> {
    let ok = match family {
        "two-atom" => n == 2,
        "n-atom" => (2..=16).contains(&n),
        _ => (1..=12).contains(&n),
    };
    if ok {
        Ok(n)
    } else {
        Err(Error::semantic(
            path,
            format!("size {n} is out of range for the {family} family"),
        ))
    }
}

fn resolve(raw: RawConfig) -> Result<Config> {
    let system = raw.system.unwrap_or_default();
    let pulses = raw.pulses.unwrap_or_default();
    let rates = raw.decoherence.unwrap_or_default();
    let integrator = raw.integrator.unwrap_or_default();
    let output = raw.output.unwrap_or_default();

    let family = check_choice(
        "[system].family",
        system.family.unwrap_or_else(|| "two-atom".into()),
        &FAMILIES,
    )?;
    let system = SystemConfig {
        n: check_family_size("[system].n", &family, system.n.unwrap_or(2))?,
        g: check_positive("[system].g", system.g.unwrap_or(20.0))?,
        eta: check_positive("[system].eta", system.eta.unwrap_or(2000.0))?,
        cutoff: match system.cutoff.unwrap_or(1) {
            0 => return Err(Error::semantic("[system].cutoff", "at least one photon is required")),
            c => c,
        },
        branch: check_choice(
            "[system].branch",
            system.branch.unwrap_or_else(|| "right".into()),
            &BRANCHES,
        )?,
        family,
    };

    let pulses = PulseConfig {
        amplitude_a: check_non_negative("[pulses].amplitude_a", pulses.amplitude_a.unwrap_or(1.0))?,
        delay_a: check_non_negative("[pulses].delay_a", pulses.delay_a.unwrap_or(5.27))?,
        width_a: check_positive("[pulses].width_a", pulses.width_a.unwrap_or(31.0))?,
        amplitude_b: check_non_negative("[pulses].amplitude_b", pulses.amplitude_b.unwrap_or(1.0))?,
        delay_b: check_non_negative("[pulses].delay_b", pulses.delay_b.unwrap_or(0.0))?,
        width_b: check_positive("[pulses].width_b", pulses.width_b.unwrap_or(31.0))?,
    };

    let decoherence = DecoherenceConfig {
        kappa: check_non_negative("[decoherence].kappa", rates.kappa.unwrap_or(0.0))?,
        gamma: check_non_negative("[decoherence].gamma", rates.gamma.unwrap_or(0.0))?,
    };

    let integrator = IntegratorConfig {
        step: integrator.step.map(|s| check_positive("[integrator].step", s)).transpose()?,
        stride: check_positive("[integrator].stride", integrator.stride.unwrap_or(0.25))?,
        tolerance: {
            let tol = check_positive("[integrator].tolerance", integrator.tolerance.unwrap_or(1e-8))?;
            if tol > 1e-3 {
                return Err(Error::semantic(
                    "[integrator].tolerance",
                    format!("drift tolerance must be at most 1e-3, got {tol}"),
                ));
            }
            tol
        },
        window: integrator
            .window
            .map(|[t0, t1]| -> Result<[f64; 2]> {
                check_finite("[integrator].window", t0)?;
                check_finite("[integrator].window", t1)?;
                if t1 <= t0 {
                    return Err(Error::semantic(
                        "[integrator].window",
                        format!("window [{t0}, {t1}] has no positive duration"),
                    ));
                }
                Ok([t0, t1])
            })
            .transpose()?,
    };

    let sweep = raw
        .sweep
        .map(|axes| -> Result<SweepConfig> {
            if axes.kappa_over_g.is_none() && axes.gamma_over_g.is_none() {
                return Err(Error::semantic(
                    "[sweep]",
                    "define kappa_over_g and/or gamma_over_g value lists",
                ));
            }
            let kappa_over_g = resolve_axis(
                "[sweep].kappa_over_g",
                axes.kappa_over_g,
                decoherence.kappa / system.g,
            )?;
            let gamma_over_g = resolve_axis(
                "[sweep].gamma_over_g",
                axes.gamma_over_g,
                decoherence.gamma / system.g,
            )?;
            Ok(SweepConfig { kappa_over_g, gamma_over_g })
        })
        .transpose()?;

    let observables = output.observables.unwrap_or_else(|| {
        OBSERVABLES.iter().map(|s| (*s).to_string()).collect()
    });
    if observables.is_empty() {
        return Err(Error::semantic("[output].observables", "at least one observable is required"));
    }
    for (i, name) in observables.iter().enumerate() {
        if !OBSERVABLES.contains(&name.as_str()) {
            return Err(Error::semantic(
                &format!("[output].observables[{i}]"),
                format!("'{name}' is not one of: {}", OBSERVABLES.join(", ")),
            ));
        }
        if observables[..i].contains(name) {
            return Err(Error::semantic(
                &format!("[output].observables[{i}]"),
                format!("'{name}' is listed twice"),
            ));
        }
    }

    Ok(Config {
        system,
        pulses,
        decoherence,
        integrator,
        sweep,
        output: OutputConfig { observables },
    })
}

fn resolve_axis(path: &str, values: Option<Vec<f64>>, pinned: f64) -> Result<Vec<f64>> {
    let values = values.unwrap_or_else(|| vec![pinned]);
    if values.is_empty() {
        return Err(Error::semantic(path, "the value list is empty"));
    }
    for (i, v) in values.iter().enumerate() {
        check_non_negative(&format!("{path}[{i}]"), *v)?;
    }
    Ok(values)
}

/// Applies the protocol command's `--family` flag over a loaded
/// configuration, re-checking the family size against the new choice.
pub fn override_family(config: &mut Config, family: &str) -> Result<()> {
    config.system.family = check_choice("--family", family.to_string(), &FAMILIES)?;
    check_family_size("[system].n", &config.system.family, config.system.n)?;
    Ok(())
}

/// Applies the protocol command's `--n` flag over a loaded configuration.
pub fn override_size(config: &mut Config, n: usize) -> Result<()> {
    config.system.n = check_family_size("--n", &config.system.family, n)?;
    Ok(())
}

impl Config {
    pub fn family(&self) -> Family {
        match self.system.family.as_str() {
            "two-atom" => Family::TwoAtom,
            "n-atom" => Family::NAtom(self.system.n),
            _ => Family::HighDim(self.system.n),
        }
    }

    /// The physics scenario this configuration describes.
    pub fn scenario(&self) -> Result<ScenarioSpec<f64>> {
        self.scenario_with_rates(self.decoherence.kappa, self.decoherence.gamma)
    }

    /// The same scenario with the loss rates replaced, as sweeps do per cell.
    pub fn scenario_with_rates(&self, kappa: f64, gamma: f64) -> Result<ScenarioSpec<f64>> {
        let decoherence = if kappa == 0.0 && gamma == 0.0 {
            DecoherenceSpec::closed()
        } else {
            DecoherenceSpec::new(kappa, gamma)?
        };
        Ok(ScenarioSpec::new(
            self.family(),
            CouplingSpec::new(self.system.g, self.system.eta)?,
            PulseShape::new(self.pulses.amplitude_a, self.pulses.delay_a, self.pulses.width_a)?,
            PulseShape::new(self.pulses.amplitude_b, self.pulses.delay_b, self.pulses.width_b)?,
            decoherence,
            self.system.cutoff,
        )?)
    }

    pub fn is_open(&self) -> bool {
        self.decoherence.kappa > 0.0 || self.decoherence.gamma > 0.0
    }

    /// Integrator settings for a run; density propagation gets a fixed
    /// default step instead of the much smaller automatic one.
    pub fn integrator_settings(&self, density: bool) -> IntegratorSettings<f64> {
        let fallback = if density { Some(OPEN_SYSTEM_STEP) } else { None };
        IntegratorSettings {
            step: self.integrator.step.or(fallback),
            stride: Some(self.integrator.stride),
            tolerance: self.integrator.tolerance,
        }
    }

    /// The propagation window: an explicit override or the pulse support.
    pub fn window(&self, spec: &ScenarioSpec<f64>) -> (f64, f64) {
        match self.integrator.window {
            Some([t0, t1]) => (t0, t1),
            None => (0.0, spec.window_end()),
        }
    }

    /// The control level whose branch the simulate and zeno commands follow.
    pub fn branch_level(&self) -> Level {
        if self.system.branch == "left" {
            Level::One
        } else {
            Level::Zero
        }
    }
}
