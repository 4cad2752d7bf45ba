//! Scenario files.
//!
//! ```toml
//! [units]
//! time = "1 us"
//! length = "1 nm"
//!
//! [system]
//! mass = "1e-15 kg"
//! frequency = "10 Hz"
//! charge = "1 e"
//!
//! [[environment]]
//! kind = "delta"
//! coupling = "1e-28 kg/s"
//! temperature = "0 K"
//!
//! [[environment]]
//! kind = "colored_field"
//! intensity = "6e-10 V^2 m^-2 s"
//! corr_time = "5 us"
//!
//! [cat]
//! separation = "7 nm"
//! width = "0.12 nm"
//!
//! [run]
//! t_max = "40 us"
//! steps = 400
//! methods = ["closed_form", "exact"]
//! ```

use std::path::{Path, PathBuf};

use neqdeco::decoherence::{CatState, Method};
use neqdeco::kernels::{FieldSpec, NoiseModel, ReservoirSpec, SpectralDensity, System};
use neqdeco::trap::{log_spaced, IonSpec};
use neqdeco::units::UnitSystem;
use serde::Deserialize;

use crate::error::CliError;
use crate::quantity::{reduced, si, spectral_scale, Kind};

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    #[serde(default)]
    pub units: UnitsBlock,
    pub system: SystemBlock,
    pub environment: Vec<EnvironmentEntry>,
    pub cat: Option<CatBlock>,
    pub run: Option<RunBlock>,
    pub trap: Option<TrapBlock>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UnitsBlock {
    pub time: String,
    pub length: String,
}

impl Default for UnitsBlock {
    fn default() -> Self {
        UnitsBlock { time: "1 us".into(), length: "1 nm".into() }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemBlock {
    pub mass: String,
    pub frequency: String,
    pub charge: Option<String>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum EnvironmentEntry {
    Delta {
        coupling: String,
        temperature: String,
    },
    Exponential {
        coupling: String,
        corr_time: String,
        temperature: String,
    },
    /// Spectral density table, CSV with header `omega,j`.
    Tabulated {
        file: PathBuf,
        omega_unit: String,
        j_unit: String,
        temperature: String,
    },
    WhiteField {
        intensity: Option<String>,
        force_weight: Option<String>,
    },
    ColoredField {
        intensity: Option<String>,
        force_weight: Option<String>,
        corr_time: String,
    },
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CatBlock {
    pub separation: String,
    pub width: String,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunBlock {
    pub t_max: String,
    pub steps: usize,
    #[serde(default = "default_methods")]
    pub methods: Vec<String>,
}

fn default_methods() -> Vec<String> {
    vec!["closed_form".into()]
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrapBlock {
    pub mass: String,
    pub charge: String,
    pub frequency_min: String,
    pub frequency_max: String,
    pub points: usize,
    pub rel_noise: f64,
    pub seed: u64,
    pub ambient_temperature: String,
    #[serde(default = "default_components")]
    pub max_components: usize,
    /// Reconstruction window; defaults to five times the slowest fitted τ.
    pub t_eff_window: Option<String>,
}

fn default_components() -> usize {
    3
}

#[derive(Debug, Clone)]
pub struct RunPlan {
    pub times: Vec<f64>,
    pub methods: Vec<Method>,
}

#[derive(Debug, Clone)]
pub struct TrapPlan {
    pub ion: IonSpec,
    pub frequencies: Vec<f64>,
    pub rel_noise: f64,
    pub seed: u64,
    pub ambient_temperature: f64,
    pub max_components: usize,
    pub window: Option<f64>,
}

/// Validated scenario in reduced units (trap quantities stay SI).
#[derive(Debug, Clone)]
pub struct Scenario {
    pub units: UnitSystem,
    pub system: System,
    pub reservoirs: Vec<ReservoirSpec>,
    pub fields: Vec<FieldSpec>,
    pub cat: Option<CatState>,
    pub run: Option<RunPlan>,
    pub trap: Option<TrapPlan>,
}

impl Scenario {
    pub fn model(&self) -> Result<NoiseModel, CliError> {
        Ok(NoiseModel::compose(&self.reservoirs, self.system)?.with_fields(&self.fields)?)
    }

    /// The environment without engineered fields.
    pub fn ambient_model(&self) -> Result<NoiseModel, CliError> {
        Ok(NoiseModel::compose(&self.reservoirs, self.system)?)
    }

    pub fn require_cat(&self) -> Result<CatState, CliError> {
        self.cat.ok_or_else(|| CliError::config("cat", "this command needs a [cat] block"))
    }

    pub fn require_run(&self) -> Result<&RunPlan, CliError> {
        self.run.as_ref().ok_or_else(|| CliError::config("run", "this command needs a [run] block"))
    }

    pub fn require_trap(&self) -> Result<&TrapPlan, CliError> {
        self.trap.as_ref().ok_or_else(|| CliError::config("trap", "this command needs a [trap] block"))
    }
}

pub fn parse_method(name: &str, path: &str) -> Result<Method, CliError> {
    Ok(match name {
        "closed_form" => Method::ClosedForm,
        "quadrature" => Method::Quadrature,
        "exact" => Method::ExactGaussian,
        "grid" => Method::GridPde,
        other => {
            return Err(CliError::config(
                path,
                format!("unknown method `{other}` (closed_form, quadrature, exact, grid)"),
            ))
        }
    })
}

pub fn load(path: &Path) -> Result<Scenario, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::config(&path.display().to_string(), format!("cannot read config: {e}")))?;
    parse(&text, path.parent().unwrap_or(Path::new(".")))
}

/// Parses a scenario; relative table paths resolve against `base`.
pub fn parse(text: &str, base: &Path) -> Result<Scenario, CliError> {
    let raw: ScenarioConfig = toml::from_str(text).map_err(|e| {
        let path = e.span().map(|s| locate(text, s.start)).unwrap_or_else(|| "config".into());
        CliError::config(&path, e.message().to_string())
    })?;
    resolve(&raw, base)
}

/// `line N` description of a byte offset, used as the field path when the
/// parser cannot name the key.
fn locate(text: &str, offset: usize) -> String {
    let line = text[..offset.min(text.len())].matches('\n').count() + 1;
    let key = text.lines().nth(line - 1).and_then(|l| l.split('=').next()).map(str::trim).unwrap_or("");
    if key.is_empty() {
        format!("line {line}")
    } else {
        format!("line {line} ({key})")
    }
}

fn positive(v: f64, path: &str) -> Result<f64, CliError> {
    if v > 0.0 {
        Ok(v)
    } else {
        Err(CliError::config(path, format!("must be > 0, got {v}")))
    }
}

pub fn resolve(raw: &ScenarioConfig, base: &Path) -> Result<Scenario, CliError> {
    let base_units = UnitSystem::new(1.0, 1.0);
    let time_s = positive(si(&raw.units.time, Kind::Time, &base_units, "units.time")?, "units.time")?;
    let length_m = positive(si(&raw.units.length, Kind::Length, &base_units, "units.length")?, "units.length")?;
    let units = UnitSystem::new(time_s, length_m);

    let mass = positive(reduced(&raw.system.mass, Kind::Mass, &units, "system.mass")?, "system.mass")?;
    let frequency = reduced(&raw.system.frequency, Kind::Rate, &units, "system.frequency")?;
    let system = System::new(mass, frequency).map_err(|e| CliError::config("system", e.to_string()))?;
    let charge = raw.system.charge.as_deref().map(|c| si(c, Kind::Charge, &units, "system.charge")).transpose()?;

    if raw.environment.is_empty() {
        return Err(CliError::config("environment", "at least one reservoir or field is required"));
    }
    let mut reservoirs = vec![];
    let mut fields = vec![];
    for (i, entry) in raw.environment.iter().enumerate() {
        let path = |key: &str| format!("environment[{i}].{key}");
        let q = |text: &str, kind: Kind, key: &str| reduced(text, kind, &units, &path(key));
        let weight = |intensity: &Option<String>, force: &Option<String>| -> Result<f64, CliError> {
            match (intensity, force) {
                (Some(e2), None) => {
                    let c = charge.ok_or_else(|| {
                        CliError::config(&path("intensity"), "field intensities need system.charge")
                    })?;
                    let e2 = si(e2, Kind::FieldIntensity, &units, &path("intensity"))?;
                    Ok(units.to_reduced(c * c * e2, neqdeco::units::Dimension::ForceNoise))
                }
                (None, Some(w)) => q(w, Kind::ForceNoise, "force_weight"),
                _ => Err(CliError::config(&path("intensity"), "give exactly one of intensity or force_weight")),
            }
        };
        let spec = match entry {
            EnvironmentEntry::Delta { coupling, temperature } => Some(ReservoirSpec::delta(
                q(coupling, Kind::Friction, "coupling")?,
                q(temperature, Kind::Temperature, "temperature")?,
            )),
            EnvironmentEntry::Exponential { coupling, corr_time, temperature } => Some(ReservoirSpec::exponential(
                q(coupling, Kind::Friction, "coupling")?,
                q(corr_time, Kind::Time, "corr_time")?,
                q(temperature, Kind::Temperature, "temperature")?,
            )),
            EnvironmentEntry::Tabulated { file, omega_unit, j_unit, temperature } => {
                let table = load_table(&base.join(file), omega_unit, j_unit, &units, mass, &path("file"))?;
                Some(ReservoirSpec::tabulated(table, q(temperature, Kind::Temperature, "temperature")?))
            }
            EnvironmentEntry::WhiteField { intensity, force_weight } => {
                fields.push(FieldSpec::white(weight(intensity, force_weight)?));
                None
            }
            EnvironmentEntry::ColoredField { intensity, force_weight, corr_time } => {
                let tau = positive(q(corr_time, Kind::Time, "corr_time")?, &path("corr_time"))?;
                fields.push(FieldSpec::colored(weight(intensity, force_weight)?, tau));
                None
            }
        };
        if let Some(spec) = spec {
            spec.validate().map_err(|e| CliError::config(&format!("environment[{i}]"), e.to_string()))?;
            reservoirs.push(spec);
        }
    }
    if reservoirs.is_empty() {
        return Err(CliError::config("environment", "fields need an ambient reservoir to set the friction"));
    }

    let cat = match &raw.cat {
        Some(c) => {
            let d = reduced(&c.separation, Kind::Length, &units, "cat.separation")?;
            let s = reduced(&c.width, Kind::Length, &units, "cat.width")?;
            Some(CatState::new(d, s, mass, frequency).map_err(|e| CliError::config("cat", e.to_string()))?)
        }
        None => None,
    };

    let run = match &raw.run {
        Some(r) => {
            let t_max = positive(reduced(&r.t_max, Kind::Time, &units, "run.t_max")?, "run.t_max")?;
            if r.steps == 0 {
                return Err(CliError::config("run.steps", "must be >= 1"));
            }
            let times = (0..=r.steps).map(|k| t_max * k as f64 / r.steps as f64).collect();
            let methods = r
                .methods
                .iter()
                .enumerate()
                .map(|(i, m)| parse_method(m, &format!("run.methods[{i}]")))
                .collect::<Result<Vec<_>, _>>()?;
            if methods.is_empty() {
                return Err(CliError::config("run.methods", "list at least one method"));
            }
            Some(RunPlan { times, methods })
        }
        None => None,
    };

    let trap = match &raw.trap {
        Some(t) => {
            let ion = IonSpec::new(
                si(&t.mass, Kind::Mass, &units, "trap.mass")?,
                si(&t.charge, Kind::Charge, &units, "trap.charge")?,
                si(&t.frequency_min, Kind::Rate, &units, "trap.frequency_min")?,
                si(&t.frequency_max, Kind::Rate, &units, "trap.frequency_max")?,
            )
            .map_err(|e| CliError::config("trap", e.to_string()))?;
            if t.points < 2 {
                return Err(CliError::config("trap.points", "need at least 2 frequencies"));
            }
            if !(0.0..=0.5).contains(&t.rel_noise) {
                return Err(CliError::config("trap.rel_noise", "must lie in [0, 0.5]"));
            }
            if t.max_components > 3 {
                return Err(CliError::config("trap.max_components", "at most 3"));
            }
            let ambient = positive(si(&t.ambient_temperature, Kind::Temperature, &units, "trap.ambient_temperature")?, "trap.ambient_temperature")?;
            let window = t
                .t_eff_window
                .as_deref()
                .map(|w| si(w, Kind::Time, &units, "trap.t_eff_window").and_then(|v| positive(v, "trap.t_eff_window")))
                .transpose()?;
            Some(TrapPlan {
                frequencies: log_spaced(ion.omega_min, ion.omega_max, t.points),
                ion,
                rel_noise: t.rel_noise,
                seed: t.seed,
                ambient_temperature: ambient,
                max_components: t.max_components,
                window,
            })
        }
        None => None,
    };

    Ok(Scenario { units, system, reservoirs, fields, cat, run, trap })
}

fn load_table(
    file: &Path,
    omega_unit: &str,
    j_unit: &str,
    units: &UnitSystem,
    mass: f64,
    path: &str,
) -> Result<SpectralDensity, CliError> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(file)
        .map_err(|e| CliError::config(path, format!("cannot read {}: {e}", file.display())))?;
    let header = reader.headers().map_err(|e| CliError::config(path, e.to_string()))?.clone();
    if header.iter().collect::<Vec<_>>() != ["omega", "j"] {
        return Err(CliError::config(path, "spectral table header must be `omega,j`"));
    }
    let j_scale = match j_unit {
        "reduced" => 1.0,
        "kg^2 s^-2" => 1.0 / spectral_scale(units),
        other => return Err(CliError::config(path, format!("unknown spectral density unit `{other}`"))),
    };
    let (mut omega, mut values) = (vec![], vec![]);
    for (row, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| CliError::config(path, e.to_string()))?;
        let num = |k: usize| -> Result<f64, CliError> {
            rec.get(k)
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| CliError::config(path, format!("row {row}: bad number")))
        };
        omega.push(reduced(&format!("{} {omega_unit}", num(0)?), Kind::Rate, units, path)?);
        values.push(num(1)? * j_scale);
    }
    SpectralDensity::new(omega, values, mass).map_err(|e| CliError::config(path, e.to_string()))
}
