//! Batch experiments: configuration, check plans, execution and report
//! files.
//!
//! A run validates its configuration and loads every instance file before
//! touching the output directory, computes all checks in memory, and only
//! then writes `report.json` and one CSV per suite. CSV bodies depend only
//! on the configuration and seed.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand::seq::index;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::chaining::{self, GAMMA2_EXACT_LIMIT};
use crate::concentration::{self as conc, CoefficientLaw, GaussFunctional, ProductSpaceInstance, SphereFunctional, VectorNorm};
use crate::gp::{self, GaussianProcessSpec};
use crate::rng::{derive_seed, stream};
use crate::spinglass::{self, SKInstance};
use crate::stats::VIOLATION_SIGMAS;
use crate::transport;
use crate::{Error, Result};

/// Chaining instances above this size use greedy covering numbers.
const CHAINING_MAX_POINTS: usize = 64;

/// Slack allowed on the discretized transport–entropy inequality.
pub const T2_SLACK: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Suite {
    Chaining,
    Concentration,
    Transport,
    Sk,
    All,
}

impl Suite {
    fn parts(self) -> Vec<Suite> {
        match self {
            Suite::All => vec![Suite::Chaining, Suite::Concentration, Suite::Transport, Suite::Sk],
            s => vec![s],
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Suite::Chaining => "chaining",
            Suite::Concentration => "concentration",
            Suite::Transport => "transport",
            Suite::Sk => "sk",
            Suite::All => "all",
        }
    }
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        serde_json::from_value(Value::String(s.into())).map_err(|_| Error::Config(format!("unknown suite '{s}'")))
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scale {
    Small,
    #[default]
    Full,
}

impl FromStr for Scale {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "small" => Ok(Scale::Small),
            "full" => Ok(Scale::Full),
            _ => Err(Error::Config(format!("unknown scale '{s}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChainingParams {
    pub instances: usize,
    pub n: usize,
    pub dim: usize,
    pub samples: usize,
    pub us: Vec<f64>,
    pub lambdas: Vec<f64>,
    /// Gaussian process JSON specs or embedding CSVs; replace the random
    /// instances when present.
    pub instance_files: Vec<PathBuf>,
}

impl Default for ChainingParams {
    fn default() -> Self {
        Self {
            instances: 4,
            n: 10,
            dim: 3,
            samples: 20_000,
            us: vec![4.0, 5.0, 6.0],
            lambdas: vec![0.5, 1.0, 2.0],
            instance_files: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConcentrationParams {
    pub q: usize,
    #[serde(rename = "N")]
    pub factors: usize,
    pub instance_file: Option<PathBuf>,
    pub enlargement_ts: Vec<f64>,
    pub dual_points: usize,
    pub trials: usize,
    pub vectors: usize,
    pub vector_dim: usize,
    pub t_grid: Vec<f64>,
    pub sphere_n: usize,
    pub eps_grid: Vec<f64>,
    pub gauss_n: usize,
    pub smooth_p: Vec<f64>,
    pub smooth_dim: usize,
    pub smooth_trials: usize,
}

impl Default for ConcentrationParams {
    fn default() -> Self {
        Self {
            q: 2,
            factors: 4,
            instance_file: None,
            enlargement_ts: vec![0.5, 1.0, 2.0],
            dual_points: 4,
            trials: 20_000,
            vectors: 20,
            vector_dim: 5,
            t_grid: vec![1.0, 2.0, 3.0, 4.0],
            sphere_n: 20,
            eps_grid: vec![0.1, 0.2, 0.3, 0.5],
            gauss_n: 10,
            smooth_p: vec![2.0, 3.0, 4.0],
            smooth_dim: 5,
            smooth_trials: 2_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TransportParams {
    pub m: usize,
    #[serde(rename = "L")]
    pub half_width: f64,
    pub shift: f64,
    pub seeds: usize,
    /// CSV of density vectors; replaces the random perturbations.
    pub density_file: Option<PathBuf>,
}

impl Default for TransportParams {
    fn default() -> Self {
        Self {
            m: 401,
            half_width: 8.0,
            shift: 0.5,
            seeds: 5,
            density_file: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SkParams {
    #[serde(rename = "N_list")]
    pub n_list: Vec<usize>,
    pub beta: f64,
    pub h: f64,
    pub n_disorder: usize,
    #[serde(rename = "convexity_N")]
    pub convexity_n: usize,
    pub beta_grid: Vec<f64>,
}

impl Default for SkParams {
    fn default() -> Self {
        Self {
            n_list: vec![6, 8, 10],
            beta: 0.5,
            h: 0.0,
            n_disorder: 40,
            convexity_n: 8,
            beta_grid: (0..=8).map(|k| 0.25 * f64::from(k)).collect(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SuiteParams {
    pub chaining: ChainingParams,
    pub concentration: ConcentrationParams,
    pub transport: TransportParams,
    pub sk: SkParams,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub suite: Suite,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub scale: Scale,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    #[serde(default)]
    pub params: SuiteParams,
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("suplab-out")
}

impl ExperimentConfig {
    pub fn new(suite: Suite) -> Self {
        Self {
            suite,
            seed: 0,
            scale: Scale::Full,
            output_dir: default_output_dir(),
            params: SuiteParams::default(),
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
}

impl Verdict {
    fn from(ok: bool) -> Self {
        if ok {
            Verdict::Pass
        } else {
            Verdict::Fail
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckRecord {
    pub name: String,
    pub params: Value,
    pub value: f64,
    pub bound: f64,
    pub verdict: Verdict,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub suite: Suite,
    pub seed: u64,
    pub scale: Scale,
    pub started: String,
    pub finished: String,
    pub records: Vec<CheckRecord>,
    pub pass: bool,
}

impl RunReport {
    pub fn failures(&self) -> usize {
        self.records.iter().filter(|r| r.verdict == Verdict::Fail).count()
    }
}

/// Output of a run held in memory until every check has finished.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub report: RunReport,
    /// `(file name, CSV body)` per suite.
    pub tables: Vec<(String, String)>,
}

enum ChainingInstance {
    Random(usize),
    File(PathBuf),
}

/// Validated configuration with instance files loaded and scale caps
/// applied.
struct Prepared {
    config: ExperimentConfig,
    chaining: Vec<(String, GaussianProcessSpec)>,
    product_space: ProductSpaceInstance,
    densities: Option<Vec<Vec<f64>>>,
}

fn cap(scale: Scale, limit: usize) -> usize {
    match scale {
        Scale::Small => limit / 2,
        Scale::Full => limit,
    }
}

/// Small scale clamps `value` to half the module limit; full scale rejects
/// values above the limit.
fn fit(scale: Scale, what: &str, value: usize, limit: usize) -> Result<usize> {
    match scale {
        Scale::Small => Ok(value.min(limit / 2)),
        Scale::Full if value > limit => config_err(format!("{what} = {value} exceeds the limit {limit}")),
        Scale::Full => Ok(value),
    }
}

fn config_err<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Config(msg.into()))
}

fn load_spec(path: &Path) -> Result<GaussianProcessSpec> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let is_json = path.extension().is_some_and(|e| e == "json");
    let spec = if is_json {
        GaussianProcessSpec::from_json(&text)
    } else {
        crate::metric::read_csv_matrix(text.as_bytes()).and_then(GaussianProcessSpec::embedding)
    };
    spec.map_err(|e| Error::Config(format!("{}: {e}", path.display())))
}

fn prepare(config: &ExperimentConfig) -> Result<Prepared> {
    let mut config = config.clone();
    let scale = config.scale;
    let parts = config.suite.parts();
    let p = &mut config.params;

    let mut chaining = Vec::new();
    if parts.contains(&Suite::Chaining) {
        let c = &mut p.chaining;
        c.n = fit(scale, "chaining n", c.n, crate::metric::EXACT_COVER_LIMIT)?;
        if c.n < 2 || c.dim == 0 {
            return config_err("chaining needs n >= 2 and dim >= 1");
        }
        if c.samples < 100 {
            return config_err("chaining needs at least 100 samples");
        }
        if c.us.iter().any(|&u| !(u >= chaining::OMEGA_MIN_U)) {
            return config_err(format!("chaining tail levels must be >= {}", chaining::OMEGA_MIN_U));
        }
        if c.lambdas.iter().any(|l| !l.is_finite()) {
            return config_err("lambdas must be finite");
        }
        let sources: Vec<ChainingInstance> = if c.instance_files.is_empty() {
            (0..c.instances).map(ChainingInstance::Random).collect()
        } else {
            c.instance_files.iter().cloned().map(ChainingInstance::File).collect()
        };
        let seed = derive_seed(config.seed, 1);
        for src in sources {
            let (label, spec) = match src {
                ChainingInstance::Random(i) => {
                    let s = derive_seed(seed, i as u64);
                    let spec = if i % 2 == 0 {
                        GaussianProcessSpec::embedding(random_embedding(c.n, c.dim, EmbedShape::Gaussian, s))?
                    } else {
                        GaussianProcessSpec::covariance(random_factor_covariance(c.n, c.dim, s))?
                    };
                    (i.to_string(), spec)
                }
                ChainingInstance::File(path) => {
                    let spec = load_spec(&path)?;
                    let limit = cap(scale, CHAINING_MAX_POINTS);
                    if spec.len() > limit || spec.len() < 2 {
                        return config_err(format!(
                            "{}: {} points, expected 2..={limit}",
                            path.display(),
                            spec.len()
                        ));
                    }
                    (path.display().to_string(), spec)
                }
            };
            chaining.push((label, spec));
        }
    }

    let mut product_space = ProductSpaceInstance::uniform(2, 1, vec![vec![0]])?;
    if parts.contains(&Suite::Concentration) {
        let c = &mut p.concentration;
        let limit = cap(scale, conc::EXHAUSTIVE_LIMIT);
        product_space = match &c.instance_file {
            Some(path) => {
                let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
                ProductSpaceInstance::from_json(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?
            }
            None => {
                let size = space_size(c.q, c.factors);
                if c.q < 2 || c.factors == 0 || size.is_none_or(|s| s > limit) {
                    return config_err(format!("product space q^N must be in 2..={limit}"));
                }
                random_product_space(c.q, c.factors, derive_seed(config.seed, 2))?
            }
        };
        if product_space.space_size().is_none_or(|s| s > limit) {
            return config_err(format!("product space exceeds {limit} points"));
        }
        if c.trials == 0 || c.vectors == 0 || c.vector_dim == 0 || c.sphere_n < 2 || c.gauss_n == 0 {
            return config_err("concentration sizes must be positive (sphere_n >= 2)");
        }
        if c.smooth_p.iter().any(|&q| !(q >= 2.0)) || c.smooth_dim == 0 || c.smooth_trials == 0 {
            return config_err("two-smoothness needs p >= 2 and positive sizes");
        }
    }

    let mut densities = None;
    if parts.contains(&Suite::Transport) {
        let t = &mut p.transport;
        let limit = cap(scale, transport::TRANSPORT_ATOM_LIMIT);
        t.m = fit(scale, "transport m", t.m, transport::TRANSPORT_ATOM_LIMIT)?;
        if t.m % 2 == 0 && t.m == limit {
            t.m -= 1;
        }
        if t.m < 41 || t.m % 2 == 0 || !(t.half_width >= 6.0) || !t.shift.is_finite() {
            return config_err(format!("transport grid needs odd m in 41..={limit} and L >= 6"));
        }
        if let Some(path) = &t.density_file {
            let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
            let rows = transport::densities_from_csv(file).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
            if rows.iter().any(|r| r.len() != t.m || r.iter().any(|f| !(f.is_finite() && *f > 0.0))) {
                return config_err(format!("{}: densities must have {} positive values", path.display(), t.m));
            }
            densities = Some(rows);
        }
    }

    if parts.contains(&Suite::Sk) {
        let s = &mut p.sk;
        let limit = spinglass::ENUMERATION_LIMIT;
        let mut ns = s
            .n_list
            .iter()
            .map(|&n| fit(scale, "sk N", n, limit))
            .collect::<Result<Vec<usize>>>()?;
        ns.dedup();
        s.n_list = ns;
        s.convexity_n = fit(scale, "sk convexity N", s.convexity_n, limit)?;
        if s.n_list.is_empty() || s.n_list.contains(&0) || s.convexity_n == 0 {
            return config_err("sk sizes must be positive");
        }
        if !(0.0..=1.0).contains(&s.beta) || s.h != 0.0 {
            return config_err("sk reference values need 0 <= beta <= 1 and h = 0");
        }
        if s.n_disorder < 10 {
            return config_err("sk needs at least 10 disorder draws");
        }
        if s.beta_grid.len() < 3 || s.beta_grid.windows(2).any(|w| !(w[1] > w[0])) || s.beta_grid[0] < 0.0 {
            return config_err("beta grid must be increasing, nonnegative, with >= 3 points");
        }
    }

    Ok(Prepared {
        config,
        chaining,
        product_space,
        densities,
    })
}

fn space_size(q: usize, n: usize) -> Option<usize> {
    (0..n).try_fold(1usize, |acc, _| acc.checked_mul(q))
}

/// Check names in execution order.
fn plan(prep: &Prepared) -> Vec<String> {
    let p = &prep.config.params;
    let mut names = Vec::new();
    for part in prep.config.suite.parts() {
        match part {
            Suite::Chaining => {
                for (label, spec) in &prep.chaining {
                    names.push(format!("chaining/{label}/sudakov_le_dudley"));
                    if spec.len() <= GAMMA2_EXACT_LIMIT {
                        names.push(format!("chaining/{label}/gamma2_exact_le_greedy"));
                    }
                    names.push(format!("chaining/{label}/esup_ratio"));
                    for u in &p.chaining.us {
                        names.push(format!("chaining/{label}/chain_tail/u={u}"));
                    }
                    for l in &p.chaining.lambdas {
                        names.push(format!("chaining/{label}/pair_tail/lambda={l}"));
                    }
                }
            }
            Suite::Concentration => {
                let c = &p.concentration;
                names.push("concentration/exp_moment".into());
                for t in &c.enlargement_ts {
                    names.push(format!("concentration/enlargement/t={t}"));
                }
                for x in dual_points(&prep.product_space, c.dual_points) {
                    names.push(format!("concentration/dual/x={x}"));
                }
                for t in &c.t_grid {
                    names.push(format!("concentration/vector_sum/t={t}"));
                }
                for e in &c.eps_grid {
                    names.push(format!("concentration/sphere/eps={e}"));
                }
                for t in &c.t_grid {
                    names.push(format!("concentration/gauss/t={t}"));
                }
                for q in &c.smooth_p {
                    names.push(format!("concentration/two_smooth/p={q}"));
                }
            }
            Suite::Transport => {
                names.push("transport/shift_probe".into());
                let rows = prep.densities.as_ref().map_or(p.transport.seeds, Vec::len);
                for s in 0..rows {
                    names.push(format!("transport/density/{s}"));
                }
            }
            Suite::Sk => {
                for n in &p.sk.n_list {
                    names.push(format!("sk/annealed_bound/N={n}"));
                }
                names.push("sk/beta_convexity".into());
            }
            Suite::All => unreachable!(),
        }
    }
    names
}

/// Point indices used for the dual check, evenly spread over the space.
fn dual_points(instance: &ProductSpaceInstance, count: usize) -> Vec<usize> {
    let size = instance.space_size().unwrap_or(1);
    let count = count.min(size);
    (0..count).map(|k| k * size / count.max(1)).collect()
}

/// Validate `config` and list its checks without running them.
pub fn check_plan(config: &ExperimentConfig) -> Result<Vec<String>> {
    Ok(plan(&prepare(config)?))
}

/// Human-readable check plan.
pub fn describe(config: &ExperimentConfig) -> Result<String> {
    let names = check_plan(config)?;
    let mut out = format!(
        "suite {} (scale {:?}, seed {}): {} checks\n",
        config.suite.name(),
        config.scale,
        config.seed,
        names.len()
    );
    for n in names {
        let _ = writeln!(out, "  {n}");
    }
    Ok(out)
}

struct Recorder {
    records: Vec<CheckRecord>,
}

impl Recorder {
    fn push(&mut self, name: String, params: Value, value: f64, bound: f64, ok: bool) {
        self.records.push(CheckRecord {
            name,
            params,
            value,
            bound,
            verdict: Verdict::from(ok),
        });
    }
}

fn csv_body(header: &[&str], rows: &[Vec<String>]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let csv_err = |e: csv::Error| Error::Domain(format!("csv: {e}"));
    w.write_record(header).map_err(csv_err)?;
    for r in rows {
        w.write_record(r).map_err(csv_err)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Domain(format!("csv: {e}")))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

fn opt(x: Option<f64>) -> String {
    x.map_or_else(String::new, |v| v.to_string())
}

fn run_chaining(prep: &Prepared, rec: &mut Recorder) -> Result<(String, String)> {
    let c = &prep.config.params.chaining;
    let seed = derive_seed(prep.config.seed, 11);
    let mut rows = Vec::new();
    for (k, (label, spec)) in prep.chaining.iter().enumerate() {
        let s = derive_seed(seed, k as u64);
        let r = chaining::sandwich_report(spec, c.samples, s)?;
        let base = json!({ "instance": label, "n": r.n });
        rec.push(
            format!("chaining/{label}/sudakov_le_dudley"),
            base.clone(),
            r.sudakov,
            r.dudley,
            r.sudakov <= r.dudley * (1.0 + 1e-12),
        );
        if let Some(exact) = r.gamma2_exact {
            rec.push(
                format!("chaining/{label}/gamma2_exact_le_greedy"),
                base.clone(),
                exact,
                r.gamma2_greedy,
                exact <= r.gamma2_greedy * (1.0 + 1e-12),
            );
        }
        let ratio = r.ratio_esup_gamma2.unwrap_or(f64::NAN);
        rec.push(
            format!("chaining/{label}/esup_ratio"),
            json!({ "instance": label, "n": r.n, "lower": 0.05 }),
            ratio,
            5.0,
            (0.05..=5.0).contains(&ratio),
        );
        let space = gp::canonical_metric(spec)?;
        let seq = chaining::greedy_admissible_sequence(&space);
        let tail = chaining::chain_tail_functional(&space, &seq)?;
        for t in chaining::empirical_chain_tail(spec, &tail, &c.us, c.samples, derive_seed(s, 1))? {
            rec.push(
                format!("chaining/{label}/chain_tail/u={}", t.param),
                json!({ "instance": label, "u": t.param, "S": tail.s, "stderr": t.stderr }),
                t.empirical,
                t.bound,
                !t.violation,
            );
        }
        let pair = (0, spec.len() - 1);
        for t in gp::pairwise_tail_check(spec, &[pair], &c.lambdas, c.samples, derive_seed(s, 2))? {
            rec.push(
                format!("chaining/{label}/pair_tail/lambda={}", t.lambda),
                json!({ "instance": label, "pair": [t.pair.0, t.pair.1], "lambda": t.lambda, "stderr": t.stderr }),
                t.empirical,
                t.bound,
                !t.violation,
            );
        }
        rows.push(vec![
            label.clone(),
            r.n.to_string(),
            r.sudakov.to_string(),
            r.dudley.to_string(),
            r.gamma2_greedy.to_string(),
            opt(r.gamma2_exact),
            r.esup_mc.mean.to_string(),
            r.esup_mc.std_error.to_string(),
            opt(r.ratio_esup_gamma2),
            opt(r.ratio_esup_dudley),
            opt(r.ratio_esup_sudakov),
        ]);
    }
    let header = [
        "instance",
        "n",
        "sudakov",
        "dudley",
        "gamma2_greedy",
        "gamma2_exact",
        "esup",
        "stderr",
        "ratio_gamma2",
        "ratio_dudley",
        "ratio_sudakov",
    ];
    Ok(("chaining.csv".into(), csv_body(&header, &rows)?))
}

fn run_concentration(prep: &Prepared, rec: &mut Recorder) -> Result<(String, String)> {
    let c = &prep.config.params.concentration;
    let seed = derive_seed(prep.config.seed, 12);
    let inst = &prep.product_space;
    let mut rows: Vec<Vec<String>> = Vec::new();
    let mut add = |rec: &mut Recorder, name: String, params: Value, value: f64, bound: f64, stderr: f64, ok: bool| {
        rows.push(vec![
            name.clone(),
            params.to_string(),
            value.to_string(),
            bound.to_string(),
            stderr.to_string(),
            if ok { "pass" } else { "fail" }.into(),
        ]);
        rec.push(name, params, value, bound, ok);
    };

    let table = conc::convex_distance_table(inst)?;
    let em = conc::exp_moment_from_table(inst, &table);
    add(
        rec,
        "concentration/exp_moment".into(),
        json!({ "q": inst.q(), "N": inst.factors(), "A": inst.set().len() }),
        em.lhs,
        em.rhs,
        0.0,
        em.margin >= -1e-9,
    );
    for &t in &c.enlargement_ts {
        let e = conc::enlargement_from_table(inst, &table, t)?;
        add(
            rec,
            format!("concentration/enlargement/t={t}"),
            json!({ "t": t }),
            e.measure,
            e.bound,
            0.0,
            e.measure >= e.bound - 1e-9,
        );
    }
    for (k, x) in dual_points(inst, c.dual_points).into_iter().enumerate() {
        let point = inst.point(x);
        let t = c.enlargement_ts.first().copied().unwrap_or(1.0);
        let d = conc::dual_check(inst, &point, t, 200, derive_seed(seed, 100 + k as u64))?;
        add(
            rec,
            format!("concentration/dual/x={x}"),
            json!({ "x": point, "t": t }),
            d.convex_distance,
            t,
            0.0,
            d.holds,
        );
    }

    let mut vrng = stream(derive_seed(seed, 1), 0);
    let vectors: Vec<Vec<f64>> = (0..c.vectors)
        .map(|_| (0..c.vector_dim).map(|_| vrng.sample(StandardNormal)).collect())
        .collect();
    let tails = [
        (
            "vector_sum",
            "t",
            conc::vector_sum_tail_check(
                &vectors,
                VectorNorm::L2,
                CoefficientLaw::Rademacher,
                &c.t_grid,
                c.trials,
                derive_seed(seed, 2),
            )?,
        ),
        (
            "sphere",
            "eps",
            conc::sphere_tail_check(c.sphere_n, SphereFunctional::Coordinate, &c.eps_grid, c.trials, derive_seed(seed, 3))?,
        ),
        (
            "gauss",
            "t",
            conc::gauss_tail_check(c.gauss_n, GaussFunctional::EuclideanNorm, &c.t_grid, c.trials, derive_seed(seed, 4))?,
        ),
    ];
    for (check, param, report) in tails {
        for r in &report.records {
            let empirical = match report.asserted_center {
                conc::Center::Median => r.empirical_median,
                conc::Center::Mean => r.empirical_mean,
            };
            add(
                rec,
                format!("concentration/{check}/{param}={}", r.t),
                json!({ param: r.t, "center": report.asserted_center, "trials": report.trials }),
                empirical,
                r.bound,
                r.stderr,
                !r.violation,
            );
        }
    }
    for (k, &p) in c.smooth_p.iter().enumerate() {
        let r = conc::two_smooth_check(p, c.smooth_dim, c.smooth_trials, derive_seed(seed, 200 + k as u64))?;
        add(
            rec,
            format!("concentration/two_smooth/p={p}"),
            json!({ "p": p, "dim": r.dim, "trials": r.trials }),
            r.max_violation,
            0.0,
            0.0,
            r.max_violation <= 1e-9,
        );
    }
    let header = ["check", "params", "empirical", "bound", "stderr", "verdict"];
    Ok(("concentration.csv".into(), csv_body(&header, &rows)?))
}

fn run_transport(prep: &Prepared, rec: &mut Recorder) -> Result<(String, String)> {
    let t = &prep.config.params.transport;
    let seed = derive_seed(prep.config.seed, 13);
    let xs = transport::grid_points(t.m, t.half_width)?;
    let shifted: Vec<f64> = xs.iter().map(|x| (t.shift * x).exp()).collect();
    let probe = transport::t2_check(&shifted, t.m, t.half_width)?;
    rec.push(
        "transport/shift_probe".into(),
        json!({ "m": t.m, "L": t.half_width, "a": t.shift, "continuum": t.shift * t.shift }),
        probe.transport,
        probe.bound,
        probe.margin >= -T2_SLACK,
    );
    let densities: Vec<(u64, Vec<f64>)> = match &prep.densities {
        Some(rows) => rows.iter().cloned().enumerate().map(|(i, r)| (i as u64, r)).collect(),
        None => (0..t.seeds as u64)
            .map(|s| (s, transport::trig_perturbation(&xs, derive_seed(seed, s))))
            .collect(),
    };
    let results: Vec<(u64, transport::T2Result)> = {
        use rayon::prelude::*;
        densities
            .par_iter()
            .map(|(s, f)| transport::t2_check(f, t.m, t.half_width).map(|r| (*s, r)))
            .collect::<Result<_>>()?
    };
    let mut rows = Vec::new();
    for (s, r) in results {
        rec.push(
            format!("transport/density/{s}"),
            json!({ "seed": s, "m": t.m, "L": t.half_width }),
            r.transport,
            r.bound,
            r.margin >= -T2_SLACK,
        );
        rows.push(vec![s.to_string(), r.transport.to_string(), r.bound.to_string(), r.margin.to_string()]);
    }
    Ok(("transport.csv".into(), csv_body(&["seed", "T", "bound", "margin"], &rows)?))
}

fn run_sk(prep: &Prepared, rec: &mut Recorder) -> Result<(String, String)> {
    let s = &prep.config.params.sk;
    let seed = derive_seed(prep.config.seed, 14);
    let table = spinglass::parisi_gap_report(s.beta, s.h, &s.n_list, s.n_disorder, seed)?;
    let mut rows = Vec::new();
    for r in &table {
        rec.push(
            format!("sk/annealed_bound/N={}", r.n),
            json!({ "N": r.n, "beta": r.beta, "h": r.h, "stderr": r.stderr }),
            r.phi,
            r.annealed_bound,
            r.phi <= r.annealed_bound + VIOLATION_SIGMAS * r.stderr + 1e-12,
        );
        rows.push(
            [r.n as f64, r.beta, r.h, r.phi, r.stderr, r.reference, r.annealed_bound, r.gap]
                .iter()
                .map(f64::to_string)
                .collect(),
        );
    }
    let inst = SKInstance::random(s.convexity_n, s.h, derive_seed(seed, u64::MAX), 0)?;
    let conv = spinglass::beta_convexity_check(&inst, &s.beta_grid)?;
    rec.push(
        "sk/beta_convexity".into(),
        json!({ "N": s.convexity_n, "grid": s.beta_grid }),
        conv.min_second_difference,
        -1e-9,
        conv.min_second_difference >= -1e-9,
    );
    let header = ["N", "beta", "h", "phi", "stderr", "reference", "annealed_bound", "gap"];
    Ok(("sk.csv".into(), csv_body(&header, &rows)?))
}

/// Run every check of the configured suite without writing anything.
pub fn execute(config: &ExperimentConfig) -> Result<RunOutput> {
    let started = chrono::Utc::now().to_rfc3339();
    let prep = prepare(config)?;
    let expected = plan(&prep);
    let mut rec = Recorder { records: Vec::new() };
    let mut tables = Vec::new();
    for part in prep.config.suite.parts() {
        tables.push(match part {
            Suite::Chaining => run_chaining(&prep, &mut rec)?,
            Suite::Concentration => run_concentration(&prep, &mut rec)?,
            Suite::Transport => run_transport(&prep, &mut rec)?,
            Suite::Sk => run_sk(&prep, &mut rec)?,
            Suite::All => unreachable!(),
        });
    }
    let got: Vec<&str> = rec.records.iter().map(|r| r.name.as_str()).collect();
    if got != expected {
        return Err(Error::Domain(format!(
            "check plan mismatch: planned {}, recorded {}",
            expected.len(),
            got.len()
        )));
    }
    let pass = rec.records.iter().all(|r| r.verdict == Verdict::Pass);
    Ok(RunOutput {
        report: RunReport {
            suite: config.suite,
            seed: config.seed,
            scale: config.scale,
            started,
            finished: chrono::Utc::now().to_rfc3339(),
            records: rec.records,
            pass,
        },
        tables,
    })
}

/// Execute `config` and write `report.json` plus the suite CSVs into its
/// output directory. Failed checks are reported, not returned as errors.
pub fn run(config: &ExperimentConfig) -> Result<RunReport> {
    let out = execute(config)?;
    let dir = &config.output_dir;
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    for (name, body) in &out.tables {
        let path = dir.join(name);
        fs::write(&path, body).map_err(|e| Error::io(path, e))?;
    }
    let path = dir.join("report.json");
    let json = serde_json::to_string_pretty(&out.report).expect("report serializes");
    fs::write(&path, json + "\n").map_err(|e| Error::io(path, e))?;
    Ok(out.report)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EmbedShape {
    /// Uniform on the unit sphere.
    Sphere,
    /// Standard Gaussian cloud.
    Gaussian,
}

/// `n` points in `R^dim`.
pub fn random_embedding(n: usize, dim: usize, shape: EmbedShape, seed: u64) -> Vec<Vec<f64>> {
    let mut r = stream(seed, 0);
    (0..n)
        .map(|_| {
            let g: Vec<f64> = (0..dim).map(|_| r.sample(StandardNormal)).collect();
            match shape {
                EmbedShape::Gaussian => g,
                EmbedShape::Sphere => {
                    let norm = g.iter().map(|x| x * x).sum::<f64>().sqrt().max(f64::MIN_POSITIVE);
                    g.iter().map(|x| x / norm).collect()
                }
            }
        })
        .collect()
}

/// `A Aᵀ / m` with `A` an `n × m` standard Gaussian matrix.
pub fn random_factor_covariance(n: usize, m: usize, seed: u64) -> Vec<Vec<f64>> {
    let a = random_embedding(n, m, EmbedShape::Gaussian, seed);
    (0..n)
        .map(|i| {
            (0..n)
                .map(|j| a[i].iter().zip(&a[j]).map(|(x, y)| x * y).sum::<f64>() / m as f64)
                .collect()
        })
        .collect()
}

/// Uniform product measure on `{0..q}^N` with a set `A` of size uniform in
/// `[1, q^N - 1]`, drawn without replacement.
pub fn random_product_space(q: usize, n: usize, seed: u64) -> Result<ProductSpaceInstance> {
    let size = space_size(q, n).filter(|&s| s <= conc::EXHAUSTIVE_LIMIT && s >= 2).ok_or_else(|| {
        Error::Config(format!("q^N must be in 2..={}", conc::EXHAUSTIVE_LIMIT))
    })?;
    let mut r = stream(seed, 0);
    let k = r.random_range(1..size);
    let mut picks = index::sample(&mut r, size, k).into_vec();
    picks.sort_unstable();
    let a = picks
        .into_iter()
        .map(|mut idx| {
            (0..n)
                .map(|_| {
                    let d = idx % q;
                    idx /= q;
                    d
                })
                .collect()
        })
        .collect();
    ProductSpaceInstance::uniform(q, n, a)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InstanceKind {
    GpRandomEmbed,
    GpRandomCov,
    ProductSpace,
    Sk,
}

impl FromStr for InstanceKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        serde_json::from_value(Value::String(s.into())).map_err(|_| Error::Config(format!("unknown instance kind '{s}'")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GenerateParams {
    pub n: usize,
    pub dim: usize,
    pub shape: EmbedShape,
    pub q: usize,
    pub h: f64,
    pub count: usize,
}

impl Default for GenerateParams {
    fn default() -> Self {
        Self {
            n: 16,
            dim: 8,
            shape: EmbedShape::Sphere,
            q: 2,
            h: 0.0,
            count: 1,
        }
    }
}

/// Write `params.count` instance files of `kind` into `out_dir`; instance
/// `i` uses a seed derived from `(seed, i)`. For product spaces `n` is the
/// number of factors, for SK it is the number of spins.
pub fn generate_instances(kind: InstanceKind, params: &GenerateParams, seed: u64, out_dir: &Path) -> Result<Vec<PathBuf>> {
    let p = params;
    match kind {
        InstanceKind::GpRandomEmbed | InstanceKind::GpRandomCov if p.n == 0 || p.dim == 0 => {
            return config_err("n and dim must be positive");
        }
        InstanceKind::ProductSpace if space_size(p.q, p.n).is_none_or(|s| s < 2 || s > conc::EXHAUSTIVE_LIMIT) => {
            return config_err(format!("q^N must be in 2..={}", conc::EXHAUSTIVE_LIMIT));
        }
        InstanceKind::Sk if p.n == 0 || p.n > spinglass::ENUMERATION_LIMIT || !p.h.is_finite() => {
            return config_err(format!("sk needs 1 <= N <= {} and a finite field", spinglass::ENUMERATION_LIMIT));
        }
        _ => {}
    }
    if p.count == 0 {
        return config_err("count must be positive");
    }
    let mut files = Vec::new();
    for i in 0..p.count {
        let s = derive_seed(seed, i as u64);
        let (name, body) = match kind {
            InstanceKind::GpRandomEmbed => {
                let rows: Vec<Vec<String>> = random_embedding(p.n, p.dim, p.shape, s)
                    .iter()
                    .map(|r| r.iter().map(f64::to_string).collect())
                    .collect();
                let mut w = csv::Writer::from_writer(Vec::new());
                for r in &rows {
                    w.write_record(r).map_err(|e| Error::Domain(format!("csv: {e}")))?;
                }
                let bytes = w.into_inner().map_err(|e| Error::Domain(format!("csv: {e}")))?;
                (
                    format!("gp-embed-n{}-d{}-{seed}-{i}.csv", p.n, p.dim),
                    String::from_utf8(bytes).expect("utf-8"),
                )
            }
            InstanceKind::GpRandomCov => (
                format!("gp-cov-n{}-m{}-{seed}-{i}.json", p.n, p.dim),
                GaussianProcessSpec::covariance(random_factor_covariance(p.n, p.dim, s))?.to_json(),
            ),
            InstanceKind::ProductSpace => (
                format!("product-q{}-N{}-{seed}-{i}.json", p.q, p.n),
                random_product_space(p.q, p.n, s)?.to_json(),
            ),
            InstanceKind::Sk => (
                format!("sk-N{}-{seed}-{i}.json", p.n),
                SKInstance::random(p.n, p.h, s, 0)?.to_json(),
            ),
        };
        files.push((out_dir.join(name), body));
    }
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    for (path, body) in &files {
        fs::write(path, body).map_err(|e| Error::io(path, e))?;
    }
    Ok(files.into_iter().map(|(p, _)| p).collect())
}
