//! Sectioned key-value run configuration.
//!
//! ```text
//! # comment
//! [manifold]
//! kind = flat_torus_t2
//! resolution = 32 32
//!
//! [initial]
//! kind = fourier_mode
//! component = x
//! ```
//!
//! Unknown sections and keys are errors. `[manifold.<label>]` adds further
//! manifolds for suites that sweep several; `[initial.<label>]` and
//! `[target.<label>]` add terms that are summed with the unlabelled one.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::einstein::ScalarHeatConfig;
use crate::error::{KvError, Result};
use crate::fields::analytic::{
    fourier_mode, gradient_of, killing_rotation, random_bandlimited, sample_scalar, taylor_green, FourierMode,
    ScalarFn, Trig,
};
use crate::fields::VectorField;
use crate::flow::{FlowConfig, Integrator, Variant};
use crate::manifold::{Manifold, ManifoldKind, ManifoldSpec};
use crate::snapshot;

#[derive(Clone, Debug, PartialEq)]
struct Entry {
    key: String,
    value: String,
    line: usize,
}

#[derive(Clone, Debug, PartialEq)]
struct Section {
    name: String,
    line: usize,
    entries: Vec<Entry>,
}

fn parse_sections(text: &str, path: &str) -> Result<Vec<Section>> {
    let err = |line: usize, message: String| KvError::Parse {
        path: path.to_string(),
        line,
        message,
    };
    let mut sections: Vec<Section> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        if let Some(rest) = content.strip_prefix('[') {
            let name = rest
                .strip_suffix(']')
                .ok_or_else(|| err(line, format!("unterminated section header `{content}`")))?
                .trim();
            if name.is_empty() || !name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '.') {
                return Err(err(line, format!("invalid section name `{name}`")));
            }
            if sections.iter().any(|s| s.name == name) {
                return Err(err(line, format!("duplicate section [{name}]")));
            }
            sections.push(Section {
                name: name.to_string(),
                line,
                entries: Vec::new(),
            });
            continue;
        }
        let (key, value) = content
            .split_once('=')
            .ok_or_else(|| err(line, format!("expected `key = value`, got `{content}`")))?;
        let key = key.trim();
        let value = value.trim();
        if key.is_empty() {
            return Err(err(line, "empty key".into()));
        }
        let section = sections
            .last_mut()
            .ok_or_else(|| err(line, format!("key `{key}` outside any section")))?;
        if section.entries.iter().any(|e| e.key == key) {
            return Err(err(line, format!("duplicate key `{key}` in [{}]", section.name)));
        }
        section.entries.push(Entry {
            key: key.to_string(),
            value: value.to_string(),
            line,
        });
    }
    Ok(sections)
}

/// Typed access to one section; every key must be consumed.
struct Reader<'a> {
    section: &'a Section,
    path: &'a str,
    used: Vec<bool>,
}

impl<'a> Reader<'a> {
    fn new(section: &'a Section, path: &'a str) -> Self {
        Self {
            section,
            path,
            used: vec![false; section.entries.len()],
        }
    }

    fn qualified(&self, key: &str) -> String {
        format!("{}.{key}", self.section.name)
    }

    fn raw(&mut self, key: &str) -> Option<(&'a str, usize)> {
        let idx = self.section.entries.iter().position(|e| e.key == key)?;
        self.used[idx] = true;
        let e = &self.section.entries[idx];
        Some((e.value.as_str(), e.line))
    }

    fn bad(&self, key: &str, line: usize, msg: impl std::fmt::Display) -> KvError {
        KvError::Parse {
            path: self.path.to_string(),
            line,
            message: format!("{}: {msg}", self.qualified(key)),
        }
    }

    fn get<T: FromStr>(&mut self, key: &str) -> Result<Option<T>>
    where
        T::Err: std::fmt::Display,
    {
        match self.raw(key) {
            None => Ok(None),
            Some((v, line)) => v.parse::<T>().map(Some).map_err(|e| self.bad(key, line, e)),
        }
    }

    fn string(&mut self, key: &str) -> Option<String> {
        self.raw(key).map(|(v, _)| v.to_string())
    }

    fn list<T: FromStr>(&mut self, key: &str) -> Result<Option<Vec<T>>>
    where
        T::Err: std::fmt::Display,
    {
        match self.raw(key) {
            None => Ok(None),
            Some((v, line)) => v
                .split_whitespace()
                .map(|t| t.parse::<T>().map_err(|e| self.bad(key, line, e)))
                .collect::<Result<Vec<T>>>()
                .map(Some),
        }
    }

    fn finish(self) -> Result<()> {
        for (e, used) in self.section.entries.iter().zip(&self.used) {
            if !used {
                return Err(KvError::Parse {
                    path: self.path.to_string(),
                    line: e.line,
                    message: format!("unknown key `{}` in [{}]", e.key, self.section.name),
                });
            }
        }
        Ok(())
    }
}

/// One summand of an initial or target field.
#[derive(Clone, Debug, PartialEq)]
pub enum FieldTerm {
    KillingRotation { axis: Option<String> },
    GradientOf { function: ScalarFn },
    FourierMode(FourierMode),
    RandomBandlimited { seed: u64 },
    TaylorGreen,
    File { path: PathBuf },
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScaledTerm {
    pub term: FieldTerm,
    pub scale: f64,
}

/// A field given as a sum of named terms.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct FieldSpec {
    pub terms: Vec<ScaledTerm>,
}

impl FieldSpec {
    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Evaluate on `manifold`. Errors on kind/manifold mismatches.
    pub fn build(&self, manifold: &Manifold) -> Result<VectorField> {
        let mut out = VectorField::zeros(manifold);
        for t in &self.terms {
            let f = build_term(&t.term, manifold)?;
            out.axpy(t.scale, &f);
        }
        Ok(out)
    }

    /// Replace every random seed by `seed` (the CLI `--seed` override).
    pub fn override_seed(&mut self, seed: u64) {
        for (k, t) in self.terms.iter_mut().enumerate() {
            if let FieldTerm::RandomBandlimited { seed: s } = &mut t.term {
                *s = seed.wrapping_add(k as u64);
            }
        }
    }

    pub fn seeds(&self) -> Vec<u64> {
        self.terms
            .iter()
            .filter_map(|t| match t.term {
                FieldTerm::RandomBandlimited { seed } => Some(seed),
                _ => None,
            })
            .collect()
    }
}

fn build_term(term: &FieldTerm, manifold: &Manifold) -> Result<VectorField> {
    match term {
        FieldTerm::KillingRotation { axis } => {
            let default = if manifold.kind().is_torus() { "x" } else if manifold.dim() == 3 { "e01" } else { "z" };
            killing_rotation(manifold, axis.as_deref().unwrap_or(default))
        }
        FieldTerm::GradientOf { function } => gradient_of(manifold, *function),
        FieldTerm::FourierMode(mode) => fourier_mode(manifold, *mode),
        FieldTerm::RandomBandlimited { seed } => Ok(random_bandlimited(manifold, *seed)),
        FieldTerm::TaylorGreen => taylor_green(manifold),
        FieldTerm::File { path } => snapshot::read(path)?.into_field(manifold),
    }
}

/// Output locations.
#[derive(Clone, Debug, PartialEq)]
pub struct OutputConfig {
    pub directory: PathBuf,
    /// Write the final state as a snapshot.
    pub final_snapshot: bool,
    /// Spectral kernel analysis after `run`; `None` decides by problem size.
    pub kernel_analysis: Option<bool>,
}

/// Parameters of the verification suites.
#[derive(Clone, Debug, PartialEq)]
pub struct VerifyConfig {
    /// Number of random fields.
    pub fields: usize,
    pub seed: u64,
    /// Refinement levels; the manifold resolution is the finest.
    pub levels: usize,
    /// Coarse step for the dissipation-residual order test.
    pub dt: f64,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        Self {
            fields: 20,
            seed: 1,
            levels: 3,
            dt: 1e-3,
        }
    }
}

/// Scalar heat equation settings for `verify einstein`.
#[derive(Clone, Debug, PartialEq)]
pub struct EinsteinConfig {
    /// φ as a sum of named functions times `phi_scale`; empty means φ = 0.
    pub phi: Vec<ScalarFn>,
    pub phi_scale: f64,
    /// Source and initial constant of the L² bound run.
    pub bound_phi: Vec<ScalarFn>,
    pub bound_c: f64,
    pub c: f64,
    pub heat: ScalarHeatConfig,
    /// Use X0 = K + ∇h0 with this h0 for the reduction check.
    pub reduction_function: Option<ScalarFn>,
    pub reduction_killing: Option<String>,
}

impl Default for EinsteinConfig {
    fn default() -> Self {
        Self {
            phi: Vec::new(),
            phi_scale: 1.0,
            bound_phi: vec![ScalarFn::CosTheta],
            bound_c: 0.0,
            c: 1.0,
            heat: ScalarHeatConfig::default(),
            reduction_function: None,
            reduction_killing: None,
        }
    }
}

impl EinsteinConfig {
    pub fn phi_values(&self, manifold: &Manifold) -> Result<Vec<f64>> {
        sum_scalars(&self.phi, self.phi_scale, manifold)
    }

    pub fn bound_phi_values(&self, manifold: &Manifold) -> Result<Vec<f64>> {
        sum_scalars(&self.bound_phi, self.phi_scale, manifold)
    }
}

fn sum_scalars(fs: &[ScalarFn], scale: f64, manifold: &Manifold) -> Result<Vec<f64>> {
    let mut out = vec![0.0; manifold.node_count()];
    for &f in fs {
        for (o, v) in out.iter_mut().zip(sample_scalar(manifold, f)?) {
            *o += scale * v;
        }
    }
    Ok(out)
}


/// Expected values and tolerances; absent keys are not checked.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Checks {
    pub values: BTreeMap<String, f64>,
}

impl Checks {
    pub fn get(&self, key: &str) -> Option<f64> {
        self.values.get(key).copied()
    }
}

/// Known check keys; anything else in [checks] is rejected.
pub const CHECK_KEYS: &[&str] = &[
    "kernel_dim",
    "reconstruction_tol",
    "decay_rate",
    "decay_rate_tol",
    "err_expected",
    "err_tol",
    "err_routes_tol",
    "err_max_fraction",
    "oracle_tol",
    "unit_norm_tol",
    "target_tol",
    "divergence_amplitude",
    "divergence_rate",
    "divergence_tol",
    "divergence_max",
    "min_order",
    "max_residual",
    "identity_tol",
    "asymmetry_tol",
    "dissipation_min_ratio",
    "energy_tol",
    "mean_tol",
    "c_x_tol",
    "slack_min",
    "lambda1",
    "reduction_tol",
];

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub source: PathBuf,
    /// Labelled manifolds in file order; the unlabelled one has label "".
    pub manifolds: Vec<(String, ManifoldSpec)>,
    pub flow: FlowConfig,
    pub initial: FieldSpec,
    pub target: FieldSpec,
    /// Compare against the target after M-normalizing it.
    pub target_normalized: bool,
    pub output: OutputConfig,
    pub verify: VerifyConfig,
    pub einstein: EinsteinConfig,
    /// Eigenpairs requested from `spectrum` (all on the dense path).
    pub spectrum_count: Option<usize>,
    pub checks: Checks,
}

impl RunConfig {
    /// The single manifold of commands that need exactly one.
    pub fn manifold(&self) -> Result<&ManifoldSpec> {
        match self.manifolds.as_slice() {
            [(_, spec)] => Ok(spec),
            [] => Err(KvError::config("manifold", "no [manifold] section")),
            _ => Err(KvError::config("manifold", "this command takes exactly one manifold section")),
        }
    }

    pub fn override_seed(&mut self, seed: u64) {
        self.initial.override_seed(seed);
        self.target.override_seed(seed);
        self.verify.seed = seed;
    }
}

pub fn load(path: &Path) -> Result<RunConfig> {
    let text = fs::read_to_string(path).map_err(|e| KvError::io(path, e))?;
    parse(&text, path)
}

/// Parse config text; relative file paths resolve against `source`'s directory.
pub fn parse(text: &str, source: &Path) -> Result<RunConfig> {
    let p = source.display().to_string();
    let base = source.parent().map(Path::to_path_buf).unwrap_or_default();
    let sections = parse_sections(text, &p)?;
    let mut manifolds = Vec::new();
    let mut flow = FlowConfig::default();
    let mut initial = FieldSpec::default();
    let mut target = FieldSpec::default();
    let mut target_normalized = false;
    let stem = source
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "run".into());
    let mut output = OutputConfig {
        directory: PathBuf::from("out").join(stem),
        final_snapshot: true,
        kernel_analysis: None,
    };
    let mut verify = VerifyConfig::default();
    let mut einstein = EinsteinConfig::default();
    let mut spectrum_count = None;
    let mut checks = Checks::default();
    for s in &sections {
        let (head, label) = match s.name.split_once('.') {
            Some((h, l)) => (h, l),
            None => (s.name.as_str(), ""),
        };
        let mut r = Reader::new(s, &p);
        match (head, label.is_empty()) {
            ("manifold", _) => manifolds.push((label.to_string(), read_manifold(&mut r)?)),
            ("flow", true) => read_flow(&mut r, &mut flow)?,
            ("initial", _) => initial.terms.push(read_term(&mut r, &base)?),
            ("target", _) => {
                if let Some(n) = r.get::<bool>("normalized")? {
                    target_normalized = n;
                }
                target.terms.push(read_term(&mut r, &base)?);
            }
            ("output", true) => {
                if let Some(d) = r.string("directory") {
                    output.directory = PathBuf::from(d);
                }
                if let Some(b) = r.get("final_snapshot")? {
                    output.final_snapshot = b;
                }
                if let Some((v, line)) = r.raw("kernel_analysis") {
                    output.kernel_analysis = match v {
                        "auto" => None,
                        "on" | "true" => Some(true),
                        "off" | "false" => Some(false),
                        _ => return Err(r.bad("kernel_analysis", line, "expected auto, on or off")),
                    };
                }
            }
            ("verify", true) => {
                if let Some(v) = r.get("fields")? {
                    verify.fields = v;
                }
                if let Some(v) = r.get("seed")? {
                    verify.seed = v;
                }
                if let Some(v) = r.get("levels")? {
                    verify.levels = v;
                }
                if let Some(v) = r.get("dt")? {
                    verify.dt = v;
                }
                if verify.levels < 2 {
                    return Err(KvError::config("verify.levels", "need at least 2 levels"));
                }
            }
            ("einstein", true) => read_einstein(&mut r, &mut einstein)?,
            ("spectrum", true) => spectrum_count = r.get("count")?,
            ("checks", true) => {
                for e in &s.entries {
                    if !CHECK_KEYS.contains(&e.key.as_str()) {
                        continue;
                    }
                    if let Some(v) = r.get::<f64>(&e.key)? {
                        checks.values.insert(e.key.clone(), v);
                    }
                }
            }
            _ => {
                return Err(KvError::Parse {
                    path: p.clone(),
                    line: s.line,
                    message: format!("unknown section [{}]", s.name),
                })
            }
        }
        r.finish()?;
    }
    flow.validate()?;
    Ok(RunConfig {
        source: source.to_path_buf(),
        manifolds,
        flow,
        initial,
        target,
        target_normalized,
        output,
        verify,
        einstein,
        spectrum_count,
        checks,
    })
}

fn read_manifold(r: &mut Reader<'_>) -> Result<ManifoldSpec> {
    let kind: ManifoldKind = r
        .get("kind")?
        .ok_or_else(|| KvError::config(r.qualified("kind"), "required"))?;
    let resolution: Vec<usize> = r
        .list("resolution")?
        .ok_or_else(|| KvError::config(r.qualified("resolution"), "required"))?;
    let mut spec = ManifoldSpec::new(kind, &resolution);
    if let Some(a) = r.get("perturbation_amplitude")? {
        if kind != ManifoldKind::PerturbedTorus {
            return Err(KvError::config(
                r.qualified("perturbation_amplitude"),
                "only valid for perturbed_torus",
            ));
        }
        spec.perturbation_amplitude = a;
    } else if kind == ManifoldKind::PerturbedTorus {
        return Err(KvError::config(r.qualified("perturbation_amplitude"), "required for perturbed_torus"));
    }
    spec.validate()?;
    Ok(spec)
}

fn read_flow(r: &mut Reader<'_>, flow: &mut FlowConfig) -> Result<()> {
    if let Some(v) = r.get::<Variant>("variant")? {
        flow.variant = v;
    }
    if let Some(v) = r.get::<Integrator>("integrator")? {
        flow.integrator = v;
    }
    if let Some(v) = r.get("dt_safety")? {
        flow.dt_safety = v;
    }
    flow.t_end = r.get("t_end")?.or(flow.t_end);
    flow.dt = r.get("dt")?.or(flow.dt);
    if let Some(v) = r.get("monitor_stride")? {
        flow.monitor_stride = v;
    }
    if let Some(v) = r.get("k_max")? {
        flow.k_max = v;
    }
    if let Some(v) = r.get("checkpoint_stride")? {
        flow.checkpoint_stride = v;
    }
    flow.kernel_tol = r.get("kernel_tol")?.or(flow.kernel_tol);
    Ok(())
}

fn read_term(r: &mut Reader<'_>, base: &Path) -> Result<ScaledTerm> {
    let kind = r
        .string("kind")
        .ok_or_else(|| KvError::config(r.qualified("kind"), "required"))?;
    let scale = r.get("scale")?.unwrap_or(1.0);
    let term = match kind.as_str() {
        "killing_rotation" => FieldTerm::KillingRotation { axis: r.string("axis") },
        "gradient_of" => FieldTerm::GradientOf {
            function: r
                .get("function")?
                .ok_or_else(|| KvError::config(r.qualified("function"), "required for gradient_of"))?,
        },
        "fourier_mode" => {
            let component = match r.string("component").as_deref() {
                Some("x") | Some("0") | None => 0,
                Some("y") | Some("1") => 1,
                Some(other) => {
                    return Err(KvError::config(r.qualified("component"), format!("expected x or y, got `{other}`")))
                }
            };
            FieldTerm::FourierMode(FourierMode {
                component,
                kx: r.get("kx")?.unwrap_or(1),
                ky: r.get("ky")?.unwrap_or(0),
                fx: r.get::<Trig>("fx")?.unwrap_or(Trig::Sin),
                fy: r.get::<Trig>("fy")?.unwrap_or(Trig::Cos),
                amplitude: r.get("amplitude")?.unwrap_or(1.0),
            })
        }
        "random_bandlimited" => FieldTerm::RandomBandlimited {
            seed: r.get("seed")?.unwrap_or(0),
        },
        "taylor_green" => FieldTerm::TaylorGreen,
        "file" => {
            let rel = r
                .string("path")
                .ok_or_else(|| KvError::config(r.qualified("path"), "required for kind = file"))?;
            let path = base.join(rel);
            if !path.is_file() {
                return Err(KvError::config(
                    r.qualified("path"),
                    format!("snapshot `{}` does not exist", path.display()),
                ));
            }
            FieldTerm::File { path }
        }
        other => return Err(KvError::config(r.qualified("kind"), format!("unknown field kind `{other}`"))),
    };
    Ok(ScaledTerm { term, scale })
}

fn read_einstein(r: &mut Reader<'_>, e: &mut EinsteinConfig) -> Result<()> {
    if let Some(v) = r.list("phi")? {
        e.phi = v;
    }
    if let Some(v) = r.list("bound_phi")? {
        e.bound_phi = v;
    }
    if let Some(v) = r.get("bound_c")? {
        e.bound_c = v;
    }
    if let Some(v) = r.get("phi_scale")? {
        e.phi_scale = v;
    }
    if let Some(v) = r.get("c")? {
        e.c = v;
    }
    if let Some(v) = r.get("t_end")? {
        e.heat.t_end = v;
    }
    if let Some(v) = r.get("integrator")? {
        e.heat.integrator = v;
    }
    if let Some(v) = r.get("dt_safety")? {
        e.heat.dt_safety = v;
    }
    e.heat.dt = r.get("dt")?.or(e.heat.dt);
    if let Some(v) = r.get("sample_stride")? {
        e.heat.sample_stride = v;
    }
    e.reduction_function = r.get("reduction_function")?.or(e.reduction_function);
    e.reduction_killing = r.string("reduction_killing").or(e.reduction_killing.take());
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse_str(text: &str) -> Result<RunConfig> {
        parse(text, Path::new("mem.cfg"))
    }

    const MINIMAL: &str = "[manifold]\nkind = flat_torus_t2\nresolution = 16 16\n[initial]\nkind = killing_rotation\n";

    #[test]
    fn minimal_config_gets_defaults() {
        let c = parse_str(MINIMAL).unwrap();
        assert_eq!(c.flow.integrator, Integrator::Rk4);
        assert_eq!(c.flow.dt_safety, 0.5);
        assert_eq!(c.flow.k_max, 2);
        assert_eq!(c.manifold().unwrap().resolution, vec![16, 16]);
        assert_eq!(c.output.directory, PathBuf::from("out/mem"));
    }

    #[test]
    fn unknown_key_names_the_key_and_line() {
        let text = format!("{MINIMAL}[flow]\nflowvariant = main\n");
        let e = parse_str(&text).unwrap_err().to_string();
        assert!(e.contains("flowvariant") && e.contains(":7:"), "{e}");
    }

    #[test]
    fn unknown_section_and_check_keys_are_rejected() {
        assert!(parse_str(&format!("{MINIMAL}[flwo]\n")).is_err());
        assert!(parse_str(&format!("{MINIMAL}[checks]\ndecay_rat = 2\n")).is_err());
        assert!(parse_str(&format!("{MINIMAL}[checks]\ndecay_rate = 2\n")).is_ok());
    }

    #[test]
    fn missing_snapshot_file_is_an_error() {
        let text = "[manifold]\nkind = flat_torus_t2\nresolution = 16 16\n[initial]\nkind = file\npath = nope.kvf\n";
        let e = parse_str(text).unwrap_err().to_string();
        assert!(e.contains("initial.path"), "{e}");
    }

    #[test]
    fn malformed_lines_report_line_numbers() {
        let e = parse_str("[manifold]\nkind flat\n").unwrap_err().to_string();
        assert!(e.contains(":2:"), "{e}");
        let e = parse_str("[manifold]\nkind = flat_torus_t2\nresolution = 16 x\n").unwrap_err().to_string();
        assert!(e.contains(":3:") && e.contains("resolution"), "{e}");
        assert!(parse_str("kind = x\n").is_err());
        assert!(parse_str("[a]\n[a]\n").is_err());
    }

    #[test]
    fn labelled_sections_sum_and_sweep() {
        let text = "[manifold]\nkind = flat_torus_t2\nresolution = 16 16\n\
                    [manifold.fine]\nkind = unit_sphere_s2\nresolution = 16 32\n\
                    [initial]\nkind = killing_rotation\n[initial.wave]\nkind = fourier_mode\nscale = 2\n";
        let c = parse_str(text).unwrap();
        assert_eq!(c.manifolds.len(), 2);
        assert!(c.manifold().is_err());
        assert_eq!(c.initial.terms.len(), 2);
        assert_eq!(c.initial.terms[1].scale, 2.0);
    }

    #[test]
    fn kind_mismatch_surfaces_when_building() {
        let text = "[manifold]\nkind = perturbed_torus\nresolution = 16 16\nperturbation_amplitude = 0.1\n\
                    [initial]\nkind = killing_rotation\n";
        let c = parse_str(text).unwrap();
        let m = crate::manifold::build_manifold(c.manifold().unwrap()).unwrap();
        assert!(c.initial.build(&m).is_err());
    }

    #[test]
    fn seeds_are_deterministic_and_overridable() {
        let text = "[manifold]\nkind = flat_torus_t2\nresolution = 16 16\n[initial]\nkind = random_bandlimited\nseed = 7\n";
        let mut c = parse_str(text).unwrap();
        let m = crate::manifold::build_manifold(c.manifold().unwrap()).unwrap();
        assert_eq!(c.initial.build(&m).unwrap(), c.initial.build(&m).unwrap());
        c.override_seed(11);
        assert_eq!(c.initial.seeds(), vec![11]);
    }
}
