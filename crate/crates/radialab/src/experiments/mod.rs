//! Named, reproducible numerical experiments over magnitude laws.
//!
//! Each runner takes a resolved [`ExperimentConfig`], fans replicates out
//! over workers (one counter stream per replicate and shape, so scheduling
//! cannot change any value), and returns sorted statistic rows. The five
//! experiments:
//!
//! * `sweep` measures how tightly magnitudes concentrate around their
//!   reference radius as d grows.
//! * `limit-ks` compares standardized magnitudes against the Gamma or
//!   normal limit, both on samples and directly between the laws.
//! * `constant-check` compares the quadrature normalizing constant against
//!   its closed-form asymptotic.
//! * `ud-check` compares the concentration radius against the log-poly
//!   expansion formula.
//! * `indistinguishability` runs a two-sample test between two compact
//!   shapes and tracks its power as d grows.

pub mod report;

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use crate::distributions::{build_law, LimitLaw, RadialLaw};
use crate::error::{Error, Result};
use crate::exec;
use crate::fmtnum::g17;
use crate::numerics::stats::{ks_statistic, ks_two_sample, ks_two_sample_threshold};
use crate::sampling::{sample_magnitudes, write_radb};
use crate::shapes::{ShapeSpec, Support};

pub use report::{ExperimentReport, OutputFormat, ReportRow};

/// The experiments the crate knows how to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExperimentKind {
    Sweep,
    LimitKs,
    ConstantCheck,
    UdCheck,
    Indistinguishability,
}

impl ExperimentKind {
    pub fn from_name(name: &str) -> Result<Self> {
        match name.trim().to_ascii_lowercase().replace('_', "-").as_str() {
            "sweep" => Ok(ExperimentKind::Sweep),
            "limit-ks" => Ok(ExperimentKind::LimitKs),
            "constant-check" => Ok(ExperimentKind::ConstantCheck),
            "ud-check" => Ok(ExperimentKind::UdCheck),
            "indistinguishability" => Ok(ExperimentKind::Indistinguishability),
            other => Err(Error::Config(format!(
                "unknown experiment {other:?}; known experiments: sweep, limit-ks, \
                 constant-check, ud-check, indistinguishability"
            ))),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::Sweep => "sweep",
            ExperimentKind::LimitKs => "limit-ks",
            ExperimentKind::ConstantCheck => "constant-check",
            ExperimentKind::UdCheck => "ud-check",
            ExperimentKind::Indistinguishability => "indistinguishability",
        }
    }
}

/// A shape by name plus numeric parameters, as it appears in configs.
#[derive(Debug, Clone, PartialEq)]
pub struct ShapeConfig {
    pub name: String,
    pub params: BTreeMap<String, f64>,
}

impl ShapeConfig {
    pub fn new(name: &str) -> Self {
        ShapeConfig {
            name: name.to_owned(),
            params: BTreeMap::new(),
        }
    }

    pub fn build(&self) -> Result<ShapeSpec> {
        ShapeSpec::from_name(&self.name, &self.params)
    }

    fn echo(&self) -> String {
        if self.params.is_empty() {
            return self.name.clone();
        }
        let params: Vec<String> = self
            .params
            .iter()
            .map(|(k, v)| format!("{k}={}", g17(*v)))
            .collect();
        format!("{}{{{}}}", self.name, params.join(","))
    }
}

/// Everything an experiment run depends on. Field-for-field this is what
/// the config echo in every report records.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    pub shapes: Vec<ShapeConfig>,
    pub d_grid: Vec<f64>,
    pub n: usize,
    pub replicates: usize,
    pub master_seed: u64,
    pub tol: f64,
    pub out: Option<PathBuf>,
    pub format: OutputFormat,
    pub dump_dir: Option<PathBuf>,
}

impl ExperimentConfig {
    /// The per-experiment defaults; config files and flags override these.
    pub fn defaults(kind: ExperimentKind) -> Self {
        let (shapes, d_grid, n, replicates) = match kind {
            ExperimentKind::Sweep | ExperimentKind::LimitKs => (
                vec![ShapeConfig::new("gaussian")],
                vec![10.0, 100.0, 1000.0],
                10_000,
                1,
            ),
            ExperimentKind::ConstantCheck => (
                vec![ShapeConfig::new("gaussian")],
                vec![100.0, 1000.0, 10_000.0],
                10_000,
                1,
            ),
            ExperimentKind::UdCheck => (
                vec![ShapeConfig::new("logpoly")],
                vec![1e4, 1e6, 1e8],
                10_000,
                1,
            ),
            ExperimentKind::Indistinguishability => (
                vec![ShapeConfig::new("uniform-ball"), ShapeConfig::new("triangle")],
                vec![2.0, 10.0, 50.0, 250.0],
                200,
                500,
            ),
        };
        ExperimentConfig {
            experiment: kind,
            shapes,
            d_grid,
            n,
            replicates,
            master_seed: 0,
            tol: 1e-10,
            out: None,
            format: OutputFormat::Csv,
            dump_dir: None,
        }
    }

    /// Layers a set of overrides (from a config file or CLI flags) on top.
    pub fn apply(&mut self, o: Overrides) {
        if let Some(shapes) = o.shapes {
            self.shapes = shapes;
        }
        if let Some(d_grid) = o.d_grid {
            self.d_grid = d_grid;
        }
        if let Some(n) = o.n {
            self.n = n;
        }
        if let Some(replicates) = o.replicates {
            self.replicates = replicates;
        }
        if let Some(seed) = o.master_seed {
            self.master_seed = seed;
        }
        if let Some(tol) = o.tol {
            self.tol = tol;
        }
        if let Some(out) = o.out {
            self.out = Some(out);
        }
        if let Some(format) = o.format {
            self.format = format;
        }
        if let Some(dir) = o.dump_dir {
            self.dump_dir = Some(dir);
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.d_grid.is_empty() {
            return Err(Error::Config("dims grid is empty".into()));
        }
        for &d in &self.d_grid {
            if !d.is_finite() || d <= 0.0 {
                return Err(Error::Config(format!(
                    "dims entries must be positive finite reals, got {d}"
                )));
            }
        }
        if self.d_grid.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Config("dims grid must be strictly increasing".into()));
        }
        if self.n == 0 {
            return Err(Error::Config("n must be at least 1".into()));
        }
        if self.replicates == 0 {
            return Err(Error::Config("replicates must be at least 1".into()));
        }
        let want_shapes = match self.experiment {
            ExperimentKind::Indistinguishability => 2,
            _ => 1,
        };
        if self.shapes.len() != want_shapes {
            return Err(Error::Config(format!(
                "{} takes exactly {} shape{}, got {}",
                self.experiment.name(),
                want_shapes,
                if want_shapes == 1 { "" } else { "s" },
                self.shapes.len()
            )));
        }
        if self.experiment == ExperimentKind::UdCheck {
            let canon = self.shapes[0].name.trim().to_ascii_lowercase().replace('_', "-");
            if canon != "logpoly" && canon != "log-poly" {
                return Err(Error::Config(format!(
                    "ud-check is defined for the logpoly family, got shape {:?}",
                    self.shapes[0].name
                )));
            }
            if self.d_grid.iter().any(|&d| d <= 1.0) {
                return Err(Error::Config(
                    "ud-check needs dims > 1 (the expansion divides by log d)".into(),
                ));
            }
        }
        Ok(())
    }

    fn echo_pairs(&self) -> Vec<(String, String)> {
        let mut pairs = vec![(
            "experiment".to_owned(),
            self.experiment.name().to_owned(),
        )];
        if self.shapes.len() == 1 {
            pairs.push(("shape".to_owned(), self.shapes[0].echo()));
        } else {
            pairs.push(("shape_a".to_owned(), self.shapes[0].echo()));
            pairs.push(("shape_b".to_owned(), self.shapes[1].echo()));
        }
        let dims: Vec<String> = self.d_grid.iter().map(|&d| g17(d)).collect();
        pairs.push(("dims".to_owned(), dims.join(",")));
        pairs.push(("n".to_owned(), self.n.to_string()));
        pairs.push(("replicates".to_owned(), self.replicates.to_string()));
        pairs.push(("master_seed".to_owned(), self.master_seed.to_string()));
        pairs.push(("tol".to_owned(), g17(self.tol)));
        pairs.push(("format".to_owned(), self.format.name().to_owned()));
        pairs
    }
}

/// Optional replacements for config fields, collected from a TOML file or
/// from CLI flags. `None` leaves the existing value in place.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub shapes: Option<Vec<ShapeConfig>>,
    pub d_grid: Option<Vec<f64>>,
    pub n: Option<usize>,
    pub replicates: Option<usize>,
    pub master_seed: Option<u64>,
    pub tol: Option<f64>,
    pub out: Option<PathBuf>,
    pub format: Option<OutputFormat>,
    pub dump_dir: Option<PathBuf>,
}

fn toml_f64(value: &toml::Value, what: &str) -> Result<f64> {
    value
        .as_float()
        .or_else(|| value.as_integer().map(|i| i as f64))
        .ok_or_else(|| Error::Config(format!("{what} must be a number, got {value}")))
}

fn toml_count(value: &toml::Value, what: &str) -> Result<usize> {
    match value.as_integer() {
        Some(i) if i >= 0 => Ok(i as usize),
        _ => Err(Error::Config(format!(
            "{what} must be a nonnegative integer, got {value}"
        ))),
    }
}

fn toml_str<'v>(value: &'v toml::Value, what: &str) -> Result<&'v str> {
    value
        .as_str()
        .ok_or_else(|| Error::Config(format!("{what} must be a string, got {value}")))
}

fn shape_from_table(table: &toml::value::Table, what: &str) -> Result<ShapeConfig> {
    let kind = table
        .get("kind")
        .ok_or_else(|| Error::Config(format!("{what} needs a kind key")))?;
    let mut shape = ShapeConfig::new(toml_str(kind, &format!("{what}.kind"))?);
    for (key, value) in table {
        if key == "kind" {
            continue;
        }
        shape
            .params
            .insert(key.clone(), toml_f64(value, &format!("{what}.{key}"))?);
    }
    Ok(shape)
}

/// Parses config-file text. Returns the experiment name from the file (if
/// any) plus the overrides it sets.
pub fn parse_config_text(text: &str) -> Result<(Option<String>, Overrides)> {
    let root: toml::Value = text
        .parse()
        .map_err(|e| Error::Config(format!("config file: {e}")))?;
    let table = root
        .as_table()
        .ok_or_else(|| Error::Config("config file must be a TOML table".into()))?;
    for key in table.keys() {
        if !matches!(key.as_str(), "experiment" | "shape" | "output") {
            return Err(Error::Config(format!(
                "unknown config section [{key}]; known sections: experiment, shape, output"
            )));
        }
    }
    let mut name = None;
    let mut o = Overrides::default();

    if let Some(exp) = table.get("experiment") {
        let exp = exp
            .as_table()
            .ok_or_else(|| Error::Config("[experiment] must be a table".into()))?;
        for (key, value) in exp {
            match key.as_str() {
                "name" => name = Some(toml_str(value, "experiment.name")?.to_owned()),
                "dims" => {
                    let arr = value.as_array().ok_or_else(|| {
                        Error::Config("experiment.dims must be an array of numbers".into())
                    })?;
                    let mut dims = Vec::with_capacity(arr.len());
                    for v in arr {
                        dims.push(toml_f64(v, "experiment.dims entry")?);
                    }
                    o.d_grid = Some(dims);
                }
                "n" => o.n = Some(toml_count(value, "experiment.n")?),
                "replicates" => o.replicates = Some(toml_count(value, "experiment.replicates")?),
                "seed" => {
                    let i = value.as_integer().ok_or_else(|| {
                        Error::Config(format!("experiment.seed must be an integer, got {value}"))
                    })?;
                    if i < 0 {
                        return Err(Error::Config(format!(
                            "experiment.seed must be nonnegative, got {i}"
                        )));
                    }
                    o.master_seed = Some(i as u64);
                }
                "tol" => o.tol = Some(toml_f64(value, "experiment.tol")?),
                other => {
                    return Err(Error::Config(format!(
                        "unknown key experiment.{other}; known keys: name, dims, n, \
                         replicates, seed, tol"
                    )))
                }
            }
        }
    }

    if let Some(shape) = table.get("shape") {
        let shape = shape
            .as_table()
            .ok_or_else(|| Error::Config("[shape] must be a table".into()))?;
        if shape.contains_key("kind") {
            o.shapes = Some(vec![shape_from_table(shape, "shape")?]);
        } else if shape.contains_key("A") || shape.contains_key("B") {
            let mut pair = Vec::with_capacity(2);
            for slot in ["A", "B"] {
                let sub = shape.get(slot).ok_or_else(|| {
                    Error::Config(format!("two-shape config needs both [shape.A] and [shape.B], missing [shape.{slot}]"))
                })?;
                let sub = sub.as_table().ok_or_else(|| {
                    Error::Config(format!("[shape.{slot}] must be a table"))
                })?;
                pair.push(shape_from_table(sub, &format!("shape.{slot}"))?);
            }
            o.shapes = Some(pair);
        } else {
            return Err(Error::Config(
                "[shape] needs a kind key, or [shape.A] and [shape.B] subtables".into(),
            ));
        }
    }

    if let Some(output) = table.get("output") {
        let output = output
            .as_table()
            .ok_or_else(|| Error::Config("[output] must be a table".into()))?;
        for (key, value) in output {
            match key.as_str() {
                "path" => o.out = Some(PathBuf::from(toml_str(value, "output.path")?)),
                "format" => o.format = Some(OutputFormat::from_name(toml_str(value, "output.format")?)?),
                "dump_samples" => {
                    o.dump_dir = Some(PathBuf::from(toml_str(value, "output.dump_samples")?))
                }
                other => {
                    return Err(Error::Config(format!(
                        "unknown key output.{other}; known keys: path, format, dump_samples"
                    )))
                }
            }
        }
    }

    Ok((name, o))
}

/// Reads and parses a TOML config file.
pub fn load_config_file(path: &Path) -> Result<(Option<String>, Overrides)> {
    let text = fs::read_to_string(path)?;
    parse_config_text(&text)
}

fn make_report(config: &ExperimentConfig, rows: Vec<ReportRow>) -> ExperimentReport {
    let mut report = ExperimentReport {
        experiment: config.experiment.name().to_owned(),
        config_echo: config.echo_pairs(),
        rows,
    };
    report.sort_canonical();
    report
}

fn dump_batch(
    dir: &Path,
    slot: Option<&str>,
    shape_id: &str,
    d: f64,
    replicate: usize,
    seed: u64,
    values: &[f64],
) -> Result<()> {
    let prefix = slot.map(|s| format!("{s}_")).unwrap_or_default();
    let name = format!("{prefix}{shape_id}_d{}_rep{replicate}.radb", g17(d));
    write_radb(&dir.join(name), d, seed, values)
}

/// The reference radius magnitudes concentrate around: the support edge
/// for compact shapes, the density peak otherwise.
fn reference_radius(law: &RadialLaw) -> f64 {
    match law.shape().support() {
        Support::Compact { u_star, .. } => u_star,
        Support::NonCompact { .. } => law.u_d(),
    }
}

fn sample_mean_sd(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let ss = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>();
    (mean, (ss / (n - 1.0)).sqrt())
}

/// Concentration sweep: distribution of U/u_ref per (d, replicate).
pub fn run_concentration_sweep(config: &ExperimentConfig) -> Result<ExperimentReport> {
    config.validate()?;
    let spec = config.shapes[0].build()?;
    let mut rows = Vec::new();
    for &d in &config.d_grid {
        let law = build_law(&spec, d, config.tol)?;
        let u_ref = reference_radius(&law);
        let per_rep = exec::map_indexed(config.replicates, |rep| -> Result<Vec<ReportRow>> {
            let batch = sample_magnitudes(&law, config.n, config.master_seed, rep as u64);
            if let Some(dir) = &config.dump_dir {
                dump_batch(dir, None, law.shape().id(), d, rep, config.master_seed, &batch.values)?;
            }
            let ratios: Vec<f64> = batch.values.iter().map(|u| u / u_ref).collect();
            let (mean, sd) = sample_mean_sd(&ratios);
            let frac = |eps: f64| {
                ratios.iter().filter(|&&r| (r - 1.0).abs() > eps).count() as f64
                    / ratios.len() as f64
            };
            let stat = |name: &str, value: f64| ReportRow {
                shape_id: law.shape().id().to_owned(),
                d,
                n: config.n as u64,
                replicate: rep as i64,
                statistic: name.to_owned(),
                value,
            };
            Ok(vec![
                stat("mean_ratio", mean),
                stat("sd_ratio", sd),
                stat("frac_outside_0.01", frac(0.01)),
                stat("frac_outside_0.05", frac(0.05)),
                stat("frac_outside_0.1", frac(0.1)),
            ])
        });
        for r in per_rep {
            rows.extend(r?);
        }
    }
    Ok(make_report(config, rows))
}

/// Largest gap between the standardized magnitude law and its limit over a
/// dense grid; this is the n-independent convergence measure.
pub fn deterministic_limit_gap(law: &RadialLaw, lim: &LimitLaw) -> f64 {
    const GRID: usize = 100_000;
    let mut worst = 0.0f64;
    if lim.scale > 0.0 {
        // Standardization preserves orientation; compare cdfs directly.
        // Ten limit standard deviations cover both tails past 1e-20.
        let (lo, hi) = (-10.0, 10.0);
        for i in 0..GRID {
            let t = lo + (hi - lo) * i as f64 / (GRID - 1) as f64;
            let gap = (law.cdf(lim.unstandardize(t)) - lim.cdf(t)).abs();
            worst = worst.max(gap);
        }
    } else {
        // Orientation flips (t measures distance below the support edge),
        // so the standardized cdf is one minus the magnitude cdf. The
        // transformed variable never exceeds lim.shift = d * u_star; past
        // that point the gap is the limit's own tail, largest at the edge.
        let mut t_hi = lim.quantile(0.5).max(f64::MIN_POSITIVE);
        while lim.cdf(t_hi) < 1.0 - 1e-13 || law.cdf(lim.unstandardize(t_hi)) > 1e-13 {
            t_hi *= 2.0;
            if t_hi >= lim.shift {
                t_hi = lim.shift;
                break;
            }
        }
        for i in 0..GRID {
            let t = t_hi * i as f64 / (GRID - 1) as f64;
            let gap = ((1.0 - law.cdf(lim.unstandardize(t))) - lim.cdf(t)).abs();
            worst = worst.max(gap);
        }
    }
    worst
}

/// Limit comparison: sampled KS per replicate plus one deterministic gap
/// per d.
pub fn run_limit_ks(config: &ExperimentConfig) -> Result<ExperimentReport> {
    config.validate()?;
    let spec = config.shapes[0].build()?;
    let mut rows = Vec::new();
    for &d in &config.d_grid {
        let law = build_law(&spec, d, config.tol)?;
        let lim = law.limit_law()?;
        rows.push(ReportRow {
            shape_id: law.shape().id().to_owned(),
            d,
            n: config.n as u64,
            replicate: -1,
            statistic: "ks_deterministic".to_owned(),
            value: deterministic_limit_gap(&law, &lim),
        });
        let per_rep = exec::map_indexed(config.replicates, |rep| -> Result<Vec<ReportRow>> {
            let batch = sample_magnitudes(&law, config.n, config.master_seed, rep as u64);
            if let Some(dir) = &config.dump_dir {
                dump_batch(dir, None, law.shape().id(), d, rep, config.master_seed, &batch.values)?;
            }
            let mut t: Vec<f64> = batch.values.iter().map(|&u| lim.standardize(u)).collect();
            t.sort_by(f64::total_cmp);
            let ks = ks_statistic(&t, |x| lim.cdf(x))?;
            Ok(vec![ReportRow {
                shape_id: law.shape().id().to_owned(),
                d,
                n: config.n as u64,
                replicate: rep as i64,
                statistic: "ks_sampled".to_owned(),
                value: ks,
            }])
        });
        for r in per_rep {
            rows.extend(r?);
        }
    }
    Ok(make_report(config, rows))
}

/// Normalizing-constant check: quadrature value vs. asymptotic formula.
pub fn run_constant_check(config: &ExperimentConfig) -> Result<ExperimentReport> {
    config.validate()?;
    let spec = config.shapes[0].build()?;
    let mut rows = Vec::new();
    for &d in &config.d_grid {
        let law = build_law(&spec, d, config.tol)?;
        let exact = law.log_inv_cd();
        let asym = law.asym_log_inv_cd()?;
        let stat = |name: &str, value: f64| ReportRow {
            shape_id: law.shape().id().to_owned(),
            d,
            n: config.n as u64,
            replicate: 0,
            statistic: name.to_owned(),
            value,
        };
        rows.push(stat("log_inv_cd", exact));
        rows.push(stat("log_inv_cd_asym", asym));
        rows.push(stat("abs_delta", (exact - asym).abs()));
    }
    Ok(make_report(config, rows))
}

/// Concentration-radius check: numeric root vs. the log-poly expansion.
pub fn run_ud_asymptotic_check(config: &ExperimentConfig) -> Result<ExperimentReport> {
    config.validate()?;
    let shape_cfg = &config.shapes[0];
    let spec = shape_cfg.build()?;
    let get = |key: &str, default: f64| shape_cfg.params.get(key).copied().unwrap_or(default);
    let (c, alpha, beta) = (get("c", 1.0), get("alpha", 0.0), get("beta", 2.0));
    let mut rows = Vec::new();
    for &d in &config.d_grid {
        let law = build_law(&spec, d, config.tol)?;
        let u_d = law.mode_radius()?;
        let asym = crate::distributions::example1_ud_asymptotic(c, alpha, beta, d);
        let stat = |name: &str, value: f64| ReportRow {
            shape_id: law.shape().id().to_owned(),
            d,
            n: config.n as u64,
            replicate: 0,
            statistic: name.to_owned(),
            value,
        };
        rows.push(stat("u_d", u_d));
        rows.push(stat("u_d_asym", asym));
        rows.push(stat("ratio", u_d / asym));
    }
    Ok(make_report(config, rows))
}

/// Two-sample separation test between two compact shapes sharing a limit.
pub fn run_indistinguishability(config: &ExperimentConfig) -> Result<ExperimentReport> {
    config.validate()?;
    let spec_a = config.shapes[0].build()?;
    let spec_b = config.shapes[1].build()?;
    for spec in [&spec_a, &spec_b] {
        if !spec.is_compact() {
            return Err(Error::Config(format!(
                "indistinguishability compares compact shapes, but {} has unbounded support",
                spec.id()
            )));
        }
    }
    let pair_id = format!("{}_vs_{}", spec_a.id(), spec_b.id());
    let threshold = ks_two_sample_threshold(config.n, config.n);
    let mut rows = Vec::new();
    for &d in &config.d_grid {
        let law_a = build_law(&spec_a, d, config.tol)?;
        let law_b = build_law(&spec_b, d, config.tol)?;
        let per_rep = exec::map_indexed(config.replicates, |rep| -> Result<Vec<ReportRow>> {
            // Stream fan-out: replicate index times shape count plus slot.
            let batch_a =
                sample_magnitudes(&law_a, config.n, config.master_seed, 2 * rep as u64);
            let batch_b =
                sample_magnitudes(&law_b, config.n, config.master_seed, 2 * rep as u64 + 1);
            if let Some(dir) = &config.dump_dir {
                dump_batch(dir, Some("A"), law_a.shape().id(), d, rep, config.master_seed, &batch_a.values)?;
                dump_batch(dir, Some("B"), law_b.shape().id(), d, rep, config.master_seed, &batch_b.values)?;
            }
            let ks = ks_two_sample(&batch_a.values, &batch_b.values)?;
            let stat = |name: &str, value: f64| ReportRow {
                shape_id: pair_id.clone(),
                d,
                n: config.n as u64,
                replicate: rep as i64,
                statistic: name.to_owned(),
                value,
            };
            Ok(vec![
                stat("ks_two_sample", ks),
                stat("reject", if ks > threshold { 1.0 } else { 0.0 }),
            ])
        });
        let mut rejects = 0usize;
        for r in per_rep {
            let group = r?;
            rejects += group
                .iter()
                .filter(|row| row.statistic == "reject" && row.value == 1.0)
                .count();
            rows.extend(group);
        }
        let agg = |name: &str, value: f64| ReportRow {
            shape_id: pair_id.clone(),
            d,
            n: config.n as u64,
            replicate: -1,
            statistic: name.to_owned(),
            value,
        };
        rows.push(agg("power", rejects as f64 / config.replicates as f64));
        rows.push(agg("threshold", threshold));
    }
    Ok(make_report(config, rows))
}

/// Dispatches to the runner for the configured experiment.
pub fn run(config: &ExperimentConfig) -> Result<ExperimentReport> {
    if let Some(dir) = &config.dump_dir {
        fs::create_dir_all(dir)?;
    }
    match config.experiment {
        ExperimentKind::Sweep => run_concentration_sweep(config),
        ExperimentKind::LimitKs => run_limit_ks(config),
        ExperimentKind::ConstantCheck => run_constant_check(config),
        ExperimentKind::UdCheck => run_ud_asymptotic_check(config),
        ExperimentKind::Indistinguishability => run_indistinguishability(config),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quick(kind: ExperimentKind) -> ExperimentConfig {
        let mut config = ExperimentConfig::defaults(kind);
        config.master_seed = 42;
        config
    }

    fn rows_for<'r>(
        report: &'r ExperimentReport,
        d: f64,
        statistic: &str,
    ) -> Vec<&'r ReportRow> {
        report
            .rows
            .iter()
            .filter(|r| r.d == d && r.statistic == statistic)
            .collect()
    }

    #[test]
    fn sweep_concentrates_with_dimension() {
        let mut config = quick(ExperimentKind::Sweep);
        config.shapes = vec![ShapeConfig::new("uniform-ball")];
        config.n = 10_000;
        let report = run(&config).unwrap();
        let outside: Vec<f64> = config
            .d_grid
            .iter()
            .map(|&d| rows_for(&report, d, "frac_outside_0.1")[0].value)
            .collect();
        assert!(outside[0] > outside[2], "no concentration trend: {outside:?}");
        assert_eq!(outside[2], 0.0, "P(|U-1| > 0.1) should vanish at d=1000");
        let mean_100 = rows_for(&report, 100.0, "mean_ratio")[0].value;
        assert!((mean_100 - 1.0).abs() < 0.01, "mean ratio {mean_100}");
        // 5 statistics, 3 dims, 1 replicate.
        assert_eq!(report.rows.len(), 15);
    }

    #[test]
    fn sweep_gaussian_mean_ratio_near_one() {
        let mut config = quick(ExperimentKind::Sweep);
        config.d_grid = vec![100.0];
        config.n = 10_000;
        let report = run(&config).unwrap();
        let mean = rows_for(&report, 100.0, "mean_ratio")[0].value;
        assert!((0.99..1.01).contains(&mean), "mean(U/u_d) = {mean}");
    }

    #[test]
    fn limit_ks_deterministic_gap_shrinks() {
        let mut config = quick(ExperimentKind::LimitKs);
        config.shapes = vec![ShapeConfig::new("uniform-ball")];
        config.d_grid = vec![10.0, 200.0];
        config.n = 2_000;
        let report = run(&config).unwrap();
        let det10 = rows_for(&report, 10.0, "ks_deterministic")[0].value;
        let det200 = rows_for(&report, 200.0, "ks_deterministic")[0].value;
        assert!(det200 < det10, "gap grew: {det10} -> {det200}");
        assert!(det200 <= 0.01, "gap at d=200 is {det200}");
        let ks = rows_for(&report, 200.0, "ks_sampled")[0].value;
        assert!(ks < 1.628 / (config.n as f64).sqrt(), "sampled KS {ks}");
    }

    #[test]
    fn constant_check_has_exact_beta_case() {
        let mut config = quick(ExperimentKind::ConstantCheck);
        config.shapes = vec![ShapeConfig::new("uniform-ball")];
        config.d_grid = vec![10.0, 100.0, 1000.0];
        let report = run(&config).unwrap();
        for &d in &config.d_grid {
            let delta = rows_for(&report, d, "abs_delta")[0].value;
            assert!(delta < 1e-9, "uniform-ball delta at d={d}: {delta}");
        }
    }

    #[test]
    fn ud_check_alpha_zero_is_exact() {
        let mut config = quick(ExperimentKind::UdCheck);
        config.d_grid = vec![100.0, 10_000.0];
        let report = run(&config).unwrap();
        for &d in &config.d_grid {
            let ratio = rows_for(&report, d, "ratio")[0].value;
            assert!(
                (ratio - 1.0).abs() < 1e-9,
                "alpha=0 ratio at d={d}: {ratio}"
            );
        }
    }

    #[test]
    fn ud_check_rejects_non_logpoly_shapes() {
        let mut config = quick(ExperimentKind::UdCheck);
        config.shapes = vec![ShapeConfig::new("gaussian")];
        match run(&config) {
            Err(Error::Config(msg)) => assert!(msg.contains("logpoly"), "message: {msg}"),
            other => panic!("expected config error, got {other:?}"),
        }
    }

    #[test]
    fn null_indistinguishability_is_calibrated() {
        let mut config = quick(ExperimentKind::Indistinguishability);
        config.shapes = vec![
            ShapeConfig::new("uniform-ball"),
            ShapeConfig::new("uniform-ball"),
        ];
        config.d_grid = vec![5.0];
        config.n = 1000;
        config.replicates = 500;
        let report = run(&config).unwrap();
        let power = rows_for(&report, 5.0, "power")[0].value;
        assert!(
            (power - 0.05).abs() <= 0.03,
            "null rejection rate {power} is not near the 0.05 level"
        );
    }

    #[test]
    fn indistinguishability_power_grows_with_sample_size() {
        let mut config = quick(ExperimentKind::Indistinguishability);
        config.d_grid = vec![2.0];
        config.replicates = 200;
        let mut powers = Vec::new();
        for n in [50, 200, 800] {
            config.n = n;
            let report = run(&config).unwrap();
            powers.push(rows_for(&report, 2.0, "power")[0].value);
        }
        assert!(
            powers[0] <= powers[1] && powers[1] <= powers[2],
            "power not nondecreasing in n: {powers:?}"
        );
    }

    #[test]
    fn indistinguishability_requires_compact_shapes() {
        let mut config = quick(ExperimentKind::Indistinguishability);
        config.shapes = vec![ShapeConfig::new("uniform-ball"), ShapeConfig::new("gaussian")];
        match run(&config) {
            Err(Error::Config(msg)) => assert!(msg.contains("gaussian"), "message: {msg}"),
            other => panic!("expected config error, got {other:?}"),
        }
    }

    #[test]
    fn reports_are_identical_across_worker_counts() {
        let mut config = quick(ExperimentKind::Indistinguishability);
        config.d_grid = vec![4.0];
        config.n = 100;
        config.replicates = 32;
        let one = exec::with_threads(1, || run(&config)).unwrap();
        let eight = exec::with_threads(8, || run(&config)).unwrap();
        assert_eq!(one.to_csv(), eight.to_csv());
    }

    #[test]
    fn config_defaults_and_validation() {
        let config = ExperimentConfig::defaults(ExperimentKind::Indistinguishability);
        assert_eq!(config.shapes.len(), 2);
        assert_eq!(config.n, 200);
        assert_eq!(config.replicates, 500);
        config.validate().unwrap();

        let mut bad = ExperimentConfig::defaults(ExperimentKind::Sweep);
        bad.d_grid = vec![10.0, 10.0];
        assert!(matches!(bad.validate(), Err(Error::Config(_))));
        bad.d_grid = vec![];
        assert!(matches!(bad.validate(), Err(Error::Config(_))));
        bad.d_grid = vec![-3.0];
        assert!(matches!(bad.validate(), Err(Error::Config(_))));

        let mut wrong_count = ExperimentConfig::defaults(ExperimentKind::Sweep);
        wrong_count.shapes = vec![ShapeConfig::new("gaussian"), ShapeConfig::new("triangle")];
        assert!(matches!(wrong_count.validate(), Err(Error::Config(_))));
    }

    #[test]
    fn toml_single_shape_round_trip() {
        let text = r#"
            [experiment]
            name = "limit-ks"
            dims = [10, 100]
            n = 500
            replicates = 3
            seed = 7
            tol = 1e-9

            [shape]
            kind = "logpoly"
            alpha = 1
            beta = 2.0

            [output]
            path = "out.csv"
            format = "json"
        "#;
        let (name, o) = parse_config_text(text).unwrap();
        assert_eq!(name.as_deref(), Some("limit-ks"));
        assert_eq!(o.d_grid.as_deref(), Some(&[10.0, 100.0][..]));
        assert_eq!(o.n, Some(500));
        assert_eq!(o.replicates, Some(3));
        assert_eq!(o.master_seed, Some(7));
        assert_eq!(o.tol, Some(1e-9));
        let shapes = o.shapes.unwrap();
        assert_eq!(shapes.len(), 1);
        assert_eq!(shapes[0].name, "logpoly");
        assert_eq!(shapes[0].params.get("alpha"), Some(&1.0));
        assert_eq!(shapes[0].params.get("beta"), Some(&2.0));
        assert_eq!(o.out.as_deref(), Some(Path::new("out.csv")));
        assert_eq!(o.format, Some(OutputFormat::Json));
    }

    #[test]
    fn toml_two_shape_and_error_cases() {
        let text = r#"
            [shape.A]
            kind = "uniform-ball"
            [shape.B]
            kind = "power"
            b = 2
            u_star = 1.0
        "#;
        let (_, o) = parse_config_text(text).unwrap();
        let shapes = o.shapes.unwrap();
        assert_eq!(shapes[0].name, "uniform-ball");
        assert_eq!(shapes[1].name, "power");
        assert_eq!(shapes[1].params.get("b"), Some(&2.0));

        for bad in [
            "[shape]\nalpha = 1",
            "[shape.A]\nkind = \"triangle\"",
            "[experiment]\nworkers = 4",
            "[unknown]\nx = 1",
            "[experiment]\nseed = -3",
            "[shape]\nkind = \"logpoly\"\nbeta = \"two\"",
        ] {
            match parse_config_text(bad) {
                Err(Error::Config(_)) => {}
                other => panic!("config {bad:?} should fail, got {other:?}"),
            }
        }
    }

    #[test]
    fn overrides_layer_on_defaults() {
        let mut config = ExperimentConfig::defaults(ExperimentKind::Sweep);
        let (_, file) = parse_config_text("[experiment]\nn = 777\nseed = 5").unwrap();
        config.apply(file);
        let cli = Overrides {
            master_seed: Some(9),
            ..Overrides::default()
        };
        config.apply(cli);
        assert_eq!(config.n, 777);
        assert_eq!(config.master_seed, 9);
        assert_eq!(config.replicates, 1);
    }

    #[test]
    fn dump_dir_receives_replayable_batches() {
        use crate::sampling::read_radb;
        let dir = tempfile::tempdir().unwrap();
        let mut config = quick(ExperimentKind::Sweep);
        config.shapes = vec![ShapeConfig::new("uniform-ball")];
        config.d_grid = vec![9.0];
        config.n = 64;
        config.dump_dir = Some(dir.path().to_path_buf());
        let report = run(&config).unwrap();
        let (header, values) = read_radb(&dir.path().join("uniform-ball_d9_rep0.radb")).unwrap();
        assert_eq!(header.n, 64);
        assert_eq!(header.d, 9.0);
        assert_eq!(header.seed, 42);
        // The dumped batch reproduces the reported statistic exactly.
        let mean_row = rows_for(&report, 9.0, "mean_ratio")[0];
        let mean = values.iter().map(|u| u / 1.0).sum::<f64>() / values.len() as f64;
        assert_eq!(mean, mean_row.value);
    }
}
