//! Run configuration: TOML grammar, validation and environment overrides.
//!
//! Every section is optional and falls back to its defaults. Validation walks the
//! whole document and reports every problem it finds, not only the first one.

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SceError};
use crate::noise::NoiseModel;
use crate::scheme::{Dynamics, SolverConfig, TransportScheme};
use crate::thermo::ThermoParams;
use crate::torus::GridSpec;

/// Environment variables `SCE_<SECTION>_<KEY>` (or `SCE_<KEY>` for top-level keys)
/// override the file.
pub const ENV_PREFIX: &str = "SCE_";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    Simulate,
    Compare,
    Defect,
    Ensemble,
    Select,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::Simulate => "simulate",
            ExperimentKind::Compare => "compare",
            ExperimentKind::Defect => "defect",
            ExperimentKind::Ensemble => "ensemble",
            ExperimentKind::Select => "select",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSection {
    pub dim: usize,
    pub n: usize,
    /// Galerkin cutoff; `0` selects the largest admissible value `n / 3`.
    pub modes: usize,
    pub length: f64,
}

impl Default for GridSection {
    fn default() -> Self {
        GridSection { dim: 1, n: 32, modes: 0, length: 1.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ThermoSection {
    pub gamma: f64,
}

impl Default for ThermoSection {
    fn default() -> Self {
        ThermoSection { gamma: 1.4 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NoiseKind {
    None,
    Cosine,
    Constant,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoiseSection {
    pub kind: NoiseKind,
    /// Number of modes `K`.
    pub modes: usize,
    pub sigma: f64,
    pub decay: f64,
}

impl Default for NoiseSection {
    fn default() -> Self {
        NoiseSection { kind: NoiseKind::None, modes: 1, sigma: 0.0, decay: 1.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverSection {
    pub h: f64,
    pub horizon: f64,
    pub substeps: usize,
    pub eps_visc: f64,
    pub r_cutoff: f64,
    pub eps_noise: f64,
    pub mass_solver_tol: f64,
    pub mass_solver_max_iter: usize,
    pub rho_floor: f64,
    /// `0` selects `h / 1024`.
    pub h_min: f64,
    pub transport: TransportScheme,
    pub dynamics: Dynamics,
    pub snapshot_every: usize,
    /// Largest admissible per-step energy-balance residual in `simulate`.
    pub residual_tol: f64,
}

impl Default for SolverSection {
    fn default() -> Self {
        SolverSection {
            h: 1e-3,
            horizon: 0.01,
            substeps: 1,
            eps_visc: 0.0,
            r_cutoff: 1e6,
            eps_noise: 1e-6,
            mass_solver_tol: 1e-10,
            mass_solver_max_iter: 1000,
            rho_floor: 1e-8,
            h_min: 0.0,
            transport: TransportScheme::Spectral,
            dynamics: Dynamics::Full,
            snapshot_every: 1,
            residual_tol: 1e-6,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InitialFamily {
    Stationary,
    DensityPulse,
    IsentropicWave,
    OscillationPair,
    File,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InitialSection {
    pub family: InitialFamily,
    /// Mean density.
    pub rho: f64,
    /// Mean specific entropy `s = S/ρ`.
    pub entropy: f64,
    pub amplitude: f64,
    pub wavenumber: usize,
    /// Pulse width, in units of the domain length.
    pub width: f64,
    /// Relative modulation of the oscillation-pair envelope.
    pub envelope: f64,
    /// Directory holding `rho.bin`, `entropy.bin`, `mom_<i>.bin` for the `file` family.
    pub path: String,
}

impl Default for InitialSection {
    fn default() -> Self {
        InitialSection {
            family: InitialFamily::Stationary,
            rho: 1.0,
            entropy: 0.0,
            amplitude: 0.0,
            wavenumber: 1,
            width: 0.1,
            envelope: 0.0,
            path: String::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CompareSection {
    /// Density perturbation `ρ(1 + δ cos(2π k x₁/L))` of the weak run.
    pub delta: f64,
    pub perturb_mode: usize,
    pub kappa: f64,
    pub rel_tol: f64,
    pub abs_tol: f64,
}

impl Default for CompareSection {
    fn default() -> Self {
        CompareSection { delta: 0.0, perturb_mode: 1, kappa: 1.0, rel_tol: 0.05, abs_tol: 1e-12 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RenormSection {
    Total,
    Specific,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DefectSection {
    pub factor: usize,
    pub clamp: f64,
    pub renormalization: RenormSection,
    pub test_mode: usize,
    /// Required `Exclude / Include` momentum-residual ratio; `0` reports without checking.
    pub min_ablation_ratio: f64,
    pub entropy_tol: f64,
}

impl Default for DefectSection {
    fn default() -> Self {
        DefectSection {
            factor: 2,
            clamp: 1.0,
            renormalization: RenormSection::Specific,
            test_mode: 1,
            min_ablation_ratio: 0.0,
            entropy_tol: 1e-10,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnsembleSection {
    pub paths: usize,
    pub test_mode: usize,
    /// Number of equally spaced report times.
    pub reports: usize,
}

impl Default for EnsembleSection {
    fn default() -> Self {
        EnsembleSection { paths: 100, test_mode: 0, reports: 4 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ToyKind {
    Closed,
    Open,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SelectSection {
    pub toy: ToyKind,
    pub discount: f64,
}

impl Default for SelectSection {
    fn default() -> Self {
        SelectSection { toy: ToyKind::Closed, discount: 0.1 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub kind: ExperimentKind,
    pub seed: u64,
    pub out: String,
    /// Ledger rows are kept every `report_interval` steps in the CSV.
    pub report_interval: usize,
    pub grid: GridSection,
    pub thermo: ThermoSection,
    pub noise: NoiseSection,
    pub solver: SolverSection,
    pub initial: InitialSection,
    pub compare: CompareSection,
    pub defect: DefectSection,
    pub ensemble: EnsembleSection,
    pub select: SelectSection,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            kind: ExperimentKind::Simulate,
            seed: 0,
            out: "sce-out".into(),
            report_interval: 1,
            grid: GridSection::default(),
            thermo: ThermoSection::default(),
            noise: NoiseSection::default(),
            solver: SolverSection::default(),
            initial: InitialSection::default(),
            compare: CompareSection::default(),
            defect: DefectSection::default(),
            ensemble: EnsembleSection::default(),
            select: SelectSection::default(),
        }
    }
}

const TOP_KEYS: [&str; 4] = ["kind", "seed", "out", "report_interval"];
const SECTIONS: [&str; 9] = ["grid", "thermo", "noise", "solver", "initial", "compare", "defect", "ensemble", "select"];

/// Known keys of a section, read off its serialised defaults.
fn section_keys(section: &str) -> Vec<String> {
    let d = toml::Table::try_from(RunConfig::default()).expect("defaults serialise");
    d.get(section).and_then(|v| v.as_table()).map(|t| t.keys().cloned().collect()).unwrap_or_default()
}

fn take_section<T: DeserializeOwned + Default>(doc: &toml::Table, name: &str, errors: &mut Vec<String>) -> T {
    match doc.get(name) {
        None => T::default(),
        Some(toml::Value::Table(t)) => match t.clone().try_into() {
            Ok(v) => v,
            Err(e) => {
                errors.push(format!("[{name}]: {}", e.message()));
                T::default()
            }
        },
        Some(_) => {
            errors.push(format!("{name}: expected a [{name}] section"));
            T::default()
        }
    }
}

fn take_key<T: DeserializeOwned>(doc: &toml::Table, key: &str, default: T, errors: &mut Vec<String>) -> T {
    match doc.get(key) {
        None => default,
        Some(v) => match v.clone().try_into() {
            Ok(x) => x,
            Err(e) => {
                errors.push(format!("{key}: {}", e.message()));
                default
            }
        },
    }
}

/// Parses and validates; on failure the error lists every problem, one per line.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    let doc: toml::Table = text.parse().map_err(|e: toml::de::Error| SceError::Parse(e.to_string()))?;
    from_table(doc)
}

/// Parses, applies `SCE_*` overrides from `vars`, then validates.
pub fn parse_config_with_env<I>(text: &str, vars: I) -> Result<RunConfig>
where
    I: IntoIterator<Item = (String, String)>,
{
    let mut doc: toml::Table = text.parse().map_err(|e: toml::de::Error| SceError::Parse(e.to_string()))?;
    apply_env(&mut doc, vars)?;
    from_table(doc)
}

fn from_table(doc: toml::Table) -> Result<RunConfig> {
    let mut errors = Vec::new();
    for (key, value) in &doc {
        if TOP_KEYS.contains(&key.as_str()) {
            continue;
        }
        if SECTIONS.contains(&key.as_str()) {
            if let Some(t) = value.as_table() {
                let known = section_keys(key);
                for k in t.keys() {
                    if !known.iter().any(|x| x == k) {
                        errors.push(format!("[{key}] {k}: unknown key (expected one of {})", known.join(", ")));
                    }
                }
            }
            continue;
        }
        errors.push(format!("{key}: unknown key or section"));
    }
    let strip_unknown = |name: &str| -> toml::Table {
        let mut d = doc.clone();
        if let Some(toml::Value::Table(t)) = d.get_mut(name) {
            let known = section_keys(name);
            t.retain(|k, _| known.iter().any(|x| x == k));
        }
        d
    };
    let mut cfg = RunConfig::default();
    cfg.kind = take_key(&doc, "kind", cfg.kind, &mut errors);
    cfg.seed = take_key(&doc, "seed", cfg.seed, &mut errors);
    cfg.out = take_key(&doc, "out", cfg.out, &mut errors);
    cfg.report_interval = take_key(&doc, "report_interval", cfg.report_interval, &mut errors);
    cfg.grid = take_section(&strip_unknown("grid"), "grid", &mut errors);
    cfg.thermo = take_section(&strip_unknown("thermo"), "thermo", &mut errors);
    cfg.noise = take_section(&strip_unknown("noise"), "noise", &mut errors);
    cfg.solver = take_section(&strip_unknown("solver"), "solver", &mut errors);
    cfg.initial = take_section(&strip_unknown("initial"), "initial", &mut errors);
    cfg.compare = take_section(&strip_unknown("compare"), "compare", &mut errors);
    cfg.defect = take_section(&strip_unknown("defect"), "defect", &mut errors);
    cfg.ensemble = take_section(&strip_unknown("ensemble"), "ensemble", &mut errors);
    cfg.select = take_section(&strip_unknown("select"), "select", &mut errors);
    errors.extend(cfg.constraint_errors());
    if errors.is_empty() {
        Ok(cfg)
    } else {
        Err(SceError::Config(errors.join("\n")))
    }
}

/// Writes `SCE_SECTION_KEY=value` pairs into the document. Values are read as TOML
/// literals when possible and as bare strings otherwise.
pub fn apply_env<I>(doc: &mut toml::Table, vars: I) -> Result<()>
where
    I: IntoIterator<Item = (String, String)>,
{
    for (name, raw) in vars {
        let Some(rest) = name.strip_prefix(ENV_PREFIX) else { continue };
        let rest = rest.to_ascii_lowercase();
        let value = parse_literal(&raw);
        let top = TOP_KEYS.iter().find(|k| **k == rest);
        if let Some(k) = top {
            doc.insert((*k).to_string(), value);
            continue;
        }
        let section = SECTIONS.iter().find(|s| rest.starts_with(&format!("{s}_")));
        match section {
            Some(s) => {
                let key = rest[s.len() + 1..].to_string();
                let entry = doc.entry((*s).to_string()).or_insert_with(|| toml::Value::Table(toml::Table::new()));
                match entry.as_table_mut() {
                    Some(t) => {
                        t.insert(key, value);
                    }
                    None => return Err(SceError::Config(format!("{name}: [{s}] is not a section"))),
                }
            }
            None => return Err(SceError::Config(format!("{name}: no such configuration key"))),
        }
    }
    Ok(())
}

fn parse_literal(raw: &str) -> toml::Value {
    let wrapped = format!("v = {raw}");
    match wrapped.parse::<toml::Table>() {
        Ok(mut t) => t.remove("v").expect("key present"),
        Err(_) => toml::Value::String(raw.to_string()),
    }
}

/// Serialises a configuration; `parse_config(&emit_config(c))` returns `c`.
pub fn emit_config(cfg: &RunConfig) -> String {
    toml::to_string(cfg).expect("configuration serialises")
}

impl RunConfig {
    pub fn modes(&self) -> usize {
        if self.grid.modes == 0 {
            self.grid.n / 3
        } else {
            self.grid.modes
        }
    }

    fn constraint_errors(&self) -> Vec<String> {
        let mut e = Vec::new();
        let g = &self.grid;
        if !(1..=3).contains(&g.dim) {
            e.push(format!("[grid] dim = {}: must be 1, 2 or 3", g.dim));
        }
        if g.n < 4 || g.n % 2 != 0 {
            e.push(format!("[grid] n = {}: must be even and at least 4", g.n));
        }
        if g.modes > 0 && 3 * g.modes > g.n {
            e.push(format!(
                "[grid] modes = {}: exceeds n/3 = {} (the 2/3 dealiasing rule requires 3·modes <= n)",
                g.modes,
                g.n / 3
            ));
        }
        if !(g.length > 0.0 && g.length.is_finite()) {
            e.push(format!("[grid] length = {}: must be positive", g.length));
        }
        if !(self.thermo.gamma > 1.0 && self.thermo.gamma.is_finite()) {
            e.push(format!("[thermo] gamma = {}: must exceed 1", self.thermo.gamma));
        }
        let nz = &self.noise;
        if nz.kind != NoiseKind::None {
            if !(nz.sigma >= 0.0 && nz.sigma.is_finite()) {
                e.push(format!("[noise] sigma = {}: must be nonnegative", nz.sigma));
            }
            if nz.modes == 0 {
                e.push("[noise] modes = 0: at least one mode is required".into());
            }
        }
        if nz.kind == NoiseKind::Cosine {
            if nz.modes > self.modes() {
                e.push(format!("[noise] modes = {}: exceeds the Galerkin cutoff {}", nz.modes, self.modes()));
            }
            if !(nz.decay > 0.5) {
                e.push(format!("[noise] decay = {}: must exceed 1/2 for a finite noise budget", nz.decay));
            }
        }
        let s = &self.solver;
        for (k, v) in [
            ("h", s.h),
            ("horizon", s.horizon),
            ("r_cutoff", s.r_cutoff),
            ("eps_noise", s.eps_noise),
            ("mass_solver_tol", s.mass_solver_tol),
            ("rho_floor", s.rho_floor),
            ("residual_tol", s.residual_tol),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                e.push(format!("[solver] {k} = {v}: must be positive"));
            }
        }
        if !(s.eps_visc >= 0.0) {
            e.push(format!("[solver] eps_visc = {}: must be nonnegative", s.eps_visc));
        }
        if s.h > 0.0 && (s.h_min < 0.0 || s.h_min > s.h) {
            e.push(format!("[solver] h_min = {}: must lie in [0, h]", s.h_min));
        }
        for (k, v) in [("substeps", s.substeps), ("mass_solver_max_iter", s.mass_solver_max_iter), ("snapshot_every", s.snapshot_every)] {
            if v == 0 {
                e.push(format!("[solver] {k} = 0: must be positive"));
            }
        }
        if self.report_interval == 0 {
            e.push("report_interval = 0: must be positive".into());
        }
        let ic = &self.initial;
        if !(ic.rho > 0.0) {
            e.push(format!("[initial] rho = {}: must be positive", ic.rho));
        }
        if ic.family == InitialFamily::DensityPulse && !(ic.amplitude > -1.0) {
            e.push(format!("[initial] amplitude = {}: a density pulse needs amplitude > -1", ic.amplitude));
        }
        if ic.family == InitialFamily::IsentropicWave && !(ic.amplitude.abs() < 1.0) {
            e.push(format!("[initial] amplitude = {}: an acoustic wave needs |amplitude| < 1", ic.amplitude));
        }
        if ic.family == InitialFamily::File && ic.path.is_empty() {
            e.push("[initial] path: required for family = \"file\"".into());
        }
        if matches!(ic.family, InitialFamily::DensityPulse) && !(ic.width > 0.0) {
            e.push(format!("[initial] width = {}: must be positive", ic.width));
        }
        if matches!(ic.family, InitialFamily::IsentropicWave | InitialFamily::OscillationPair)
            && (ic.wavenumber == 0 || 2 * ic.wavenumber > g.n)
        {
            e.push(format!("[initial] wavenumber = {}: must lie in 1..=n/2", ic.wavenumber));
        }
        if self.defect.factor == 0 || (g.n > 0 && g.n % self.defect.factor.max(1) != 0) {
            e.push(format!("[defect] factor = {}: must divide n = {}", self.defect.factor, g.n));
        }
        if !(self.defect.clamp > 0.0) {
            e.push(format!("[defect] clamp = {}: must be positive", self.defect.clamp));
        }
        if self.ensemble.reports == 0 {
            e.push("[ensemble] reports = 0: must be positive".into());
        }
        if !(self.select.discount >= 0.0) {
            e.push(format!("[select] discount = {}: must be nonnegative", self.select.discount));
        }
        if !(self.compare.kappa >= 0.0) {
            e.push(format!("[compare] kappa = {}: must be nonnegative", self.compare.kappa));
        }
        e
    }

    pub fn grid_spec(&self) -> Result<GridSpec> {
        GridSpec::new(self.grid.dim, self.grid.n, self.modes())?.with_length(self.grid.length)
    }

    pub fn thermo_params(&self) -> Result<ThermoParams> {
        ThermoParams::new(self.thermo.gamma)
    }

    pub fn solver_config(&self) -> Result<SolverConfig> {
        let s = &self.solver;
        let mut c = SolverConfig::new(s.h, self.thermo_params()?);
        c.substeps = s.substeps;
        c.eps_visc = s.eps_visc;
        c.r_cutoff = s.r_cutoff;
        c.eps_noise = s.eps_noise;
        c.mass_solver_tol = s.mass_solver_tol;
        c.mass_solver_max_iter = s.mass_solver_max_iter;
        c.rho_floor = s.rho_floor;
        if s.h_min > 0.0 {
            c.h_min = s.h_min;
        }
        c.transport = s.transport;
        c.dynamics = s.dynamics;
        c.snapshot_every = s.snapshot_every;
        c.validate()?;
        Ok(c)
    }

    pub fn noise_model(&self) -> Result<NoiseModel> {
        let grid = self.grid_spec()?;
        match self.noise.kind {
            NoiseKind::None => Ok(NoiseModel::none(grid)),
            NoiseKind::Cosine => NoiseModel::cosine_family(grid, self.noise.modes, self.noise.sigma, self.noise.decay),
            NoiseKind::Constant => NoiseModel::constant(grid, self.noise.sigma),
        }
    }
}
