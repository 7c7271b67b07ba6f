use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use gravclust::baselines::{self, PeakConfig};
use gravclust::clustering::{self, ClusterConfig, ClusterMethod, ClusterResult};
use gravclust::data::{self, preprocess, DataMatrix, GeneratorFamily, GeneratorSpec, PreprocessSpec};
use gravclust::dbgsa;
use gravclust::experiments::{self, ImprovementConfig, SimulationConfig, TableReport};
use gravclust::gravity::{self, GravityConfig, UpdateRule};
use gravclust::manifest::Manifest;
use gravclust::metrics::{self, NMI_NORMALIZATION};
use gravclust::power_mean::PowerMeanConfig;
use gravclust::DivergenceFamily;

use crate::args::*;
use crate::params::*;

const SHIPPED_RECIPES: &str = include_str!("../recipes.conf");
const DEFAULT_CENTERS: &str = "10:10,20:20,40:40";

pub fn run(command: Command) -> CliResult<()> {
    match command {
        Command::Generate(a) => generate(a),
        Command::Improve(a) => improve(a),
        Command::Cluster(a) => cluster(a),
        Command::Dbgsa(a) => dbgsa_cmd(a),
        Command::Metrics(a) => metrics_cmd(a),
        Command::SimulationStudy(a) => simulation(a),
        Command::ImprovementStudy(a) => improvement(a),
        Command::Plotdata(a) => plotdata(a),
    }
}

fn stamp(m: &mut Manifest, command: &str) {
    m.set("command", command).set("version", env!("CARGO_PKG_VERSION"));
}

impl PowerArgs {
    fn apply(&self, p: &mut Params) {
        p.flag("power.s0", self.s0);
        p.flag("power.anneal_factor", self.anneal_factor);
        p.flag("power.s_min", self.s_min);
        p.flag("max_iters", self.max_iters);
        p.flag("tol", self.tol);
    }
}

fn power_config(p: &Params) -> CliResult<PowerMeanConfig> {
    let d = PowerMeanConfig::default();
    Ok(PowerMeanConfig {
        s0: p.get("power.s0", d.s0)?,
        anneal_factor: p.get("power.anneal_factor", d.anneal_factor)?,
        s_min: p.get("power.s_min", d.s_min)?,
    })
}

impl GridArgs {
    fn apply(&self, p: &mut Params, prefix: &str) {
        let key = |s: &str| format!("{prefix}{s}");
        p.flag(&key("eta0"), self.eta0);
        p.flag(&key("delta_eta"), self.delta_eta);
        p.flag(&key("k_min"), self.k_min);
        p.flag(&key("k_max"), self.k_max);
        p.flag(&key("delta_k"), self.delta_k);
        p.flag(&key("d_min"), self.d_min);
        p.flag(&key("d_max"), self.d_max);
        p.flag(&key("delta_d"), self.delta_d);
        p.flag(&key("decoupled_eta"), self.decoupled_eta);
        p.flag(&key("eta_steps"), self.eta_steps);
        p.flag(&key("family"), self.family);
        p.flag(&key("theta"), self.theta);
        p.flag(&key("theta_restarts"), self.theta_restarts);
    }
}

/// A loaded `--input` dataset.
struct Input {
    path: PathBuf,
    sha256: String,
    label_column: String,
    data: DataMatrix,
}

impl Input {
    fn resolve(p: &mut Params, args: &InputArgs) -> CliResult<(PathBuf, String)> {
        p.flag_path("input", args.input.as_ref());
        p.flag("label_column", args.label_column.as_deref());
        Ok((p.required("input")?, p.get("label_column", "auto".to_string())?))
    }

    fn load(p: &Params, path: PathBuf, label_column: &str) -> CliResult<Self> {
        let sha256 = p.verify_file("input", &path)?;
        let (data, label_column) = load_data(&path, label_column)?;
        Ok(Self {
            path,
            sha256,
            label_column,
            data,
        })
    }

    fn record(&self, m: &mut Manifest) {
        m.set("input", self.path.display())
            .set("input.sha256", &self.sha256)
            .set("input.rows", self.data.rows())
            .set("input.cols", self.data.cols())
            .set("label_column", &self.label_column);
    }

    /// `k` from the parameters, else the number of distinct labels.
    fn k(&self, explicit: Option<usize>) -> CliResult<usize> {
        explicit.or_else(|| self.data.label_count()).ok_or_else(|| {
            usage(format!("missing --k ({} has no label column to infer it from)", self.path.display()))
        })
    }
}

fn parse_centers(s: &str) -> CliResult<Vec<Vec<f64>>> {
    s.split(',')
        .map(|c| {
            c.split(':')
                .map(|v| v.trim().parse::<f64>())
                .collect::<Result<Vec<_>, _>>()
                .map_err(|_| usage(format!("bad --centers '{s}' (expected x:y,x:y,...)")))
        })
        .collect()
}

fn format_centers(centers: &[Vec<f64>]) -> String {
    centers
        .iter()
        .map(|c| c.iter().map(f64::to_string).collect::<Vec<_>>().join(":"))
        .collect::<Vec<_>>()
        .join(",")
}

fn generate(a: GenerateArgs) -> CliResult<()> {
    let mut p = Params::load("generate", a.common.config.as_deref())?;
    p.flag("family", a.family);
    p.flag("centers", a.centers);
    p.flag("samples_per_center", a.samples_per_center);
    p.flag("noise_scale", a.noise_scale);
    p.flag("binomial_trials", a.binomial_trials);
    p.flag("gamma_shape", a.gamma_shape);
    p.flag("seed", a.seed);

    let family: GeneratorFamily = p.get("family", GeneratorFamily::Gaussian)?;
    let centers = parse_centers(&p.get("centers", DEFAULT_CENTERS.to_string())?)?;
    let mut spec = GeneratorSpec::new(family, centers, p.get("samples_per_center", 99)?, p.get("seed", 0)?);
    spec.noise_scale = p.get("noise_scale", spec.noise_scale)?;
    spec.binomial_trials = p.get("binomial_trials", spec.binomial_trials)?;
    spec.gamma_shape = p.get("gamma_shape", spec.gamma_shape)?;
    spec.validate().map_err(bad_param)?;

    let data = data::generate(&spec)?;
    let mut out = Outputs::new(&a.common.out_dir)?;
    let path = out.write_data("data.csv", &data)?;
    let mut m = Manifest::new();
    stamp(&mut m, "generate");
    m.set("family", spec.family)
        .set("centers", format_centers(&spec.centers))
        .set("samples_per_center", spec.samples_per_center)
        .set("noise_scale", spec.noise_scale)
        .set("binomial_trials", spec.binomial_trials)
        .set("gamma_shape", spec.gamma_shape)
        .set("seed", spec.seed)
        .set("label_order", "center_index");
    out.finish(m)?;
    println!("wrote {} points in {} clusters to {}", data.rows(), spec.centers.len(), path.display());
    Ok(())
}

fn improve(a: ImproveArgs) -> CliResult<()> {
    let mut p = Params::load("improve", a.common.config.as_deref())?;
    let (path, label_column) = Input::resolve(&mut p, &a.input)?;
    p.flag("eta", a.eta);
    p.flag("K", a.k_neighbors);
    p.flag("d", a.iterations);
    p.flag("rule", a.rule);
    let mut config = GravityConfig::new(p.required("eta")?, p.required("K")?, p.required("d")?);
    config.rule = p.get("rule", UpdateRule::Full)?;
    config.validate(usize::MAX).map_err(bad_param)?;

    let input = Input::load(&p, path, &label_column)?;
    let (improved, trace) = gravity::improve_traced(&input.data, &config)?;

    let mut out = Outputs::new(&a.common.out_dir)?;
    let path = out.write_data("improved.csv", &improved)?;
    let mut t = TableReport::new("", &["iteration", "max_guard", "mean_displacement"]);
    for s in &trace {
        t.push(vec![
            s.iteration.to_string(),
            s.max_guard.to_string(),
            s.mean_displacement.to_string(),
        ]);
    }
    out.write("trace.csv", t.to_csv().as_bytes())?;

    let mut m = Manifest::new();
    stamp(&mut m, "improve");
    input.record(&mut m);
    m.set("eta", config.eta)
        .set("K", config.k_neighbors)
        .set("d", config.iterations)
        .set("rule", config.rule)
        .set("gravity.alpha", gravity::ALPHA)
        .set("gravity.epsilon", gravity::EPSILON)
        .set("gravity.guard", "eta*G*K<2")
        .set("gravity.knn", "euclidean_recomputed_each_iteration");
    out.finish(m)?;
    let peak = trace.iter().map(|s| s.max_guard).fold(0.0, f64::max);
    println!(
        "improved {} points over {} iterations (max eta*G*K = {peak:.4}); wrote {}",
        improved.rows(),
        trace.len(),
        path.display()
    );
    Ok(())
}

#[derive(Clone, Copy)]
enum Method {
    Centroid(ClusterMethod),
    Agglomerative,
    Peak,
}

impl std::str::FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "agglomerative" => Ok(Method::Agglomerative),
            "peak" => Ok(Method::Peak),
            other => other.parse().map(Method::Centroid).map_err(|_| {
                format!(
                    "unknown method '{other}' (expected kmeans|bregman_hard|kmeans_power|bregman_power|agglomerative|peak)"
                )
            }),
        }
    }
}

fn cluster(a: ClusterArgs) -> CliResult<()> {
    let mut p = Params::load("cluster", a.common.config.as_deref())?;
    let (path, label_column) = Input::resolve(&mut p, &a.input)?;
    p.flag("method", a.method);
    p.flag("family", a.family);
    p.flag("k", a.k);
    p.flag("seed", a.seed);
    p.flag("restarts", a.restarts);
    a.power.apply(&mut p);
    p.flag("peak.dc_percentile", a.dc_percentile);

    let method: Method = p.get("method", Method::Centroid(ClusterMethod::BregmanPower))?;
    let k_flag: Option<usize> = p.opt("k")?;
    let mut config = ClusterConfig::new(
        ClusterMethod::BregmanPower,
        p.get("family", DivergenceFamily::SQUARED_EUCLIDEAN)?,
        k_flag.unwrap_or(1),
        p.get("seed", 0)?,
    );
    config.power = power_config(&p)?;
    config.max_iters = p.get("max_iters", config.max_iters)?;
    config.tol = p.get("tol", config.tol)?;
    config.restarts = p.get("restarts", config.restarts)?;
    let dc_percentile = p.get("peak.dc_percentile", PeakConfig::DEFAULT_DC_PERCENTILE)?;
    if let Method::Centroid(cm) = method {
        config.method = cm;
        config.validate().map_err(bad_param)?;
    }
    if k_flag == Some(0) {
        return Err(usage("--k must be >= 1"));
    }

    let input = Input::load(&p, path, &label_column)?;
    config.k = input.k(k_flag)?;

    let mut m = Manifest::new();
    stamp(&mut m, "cluster");
    input.record(&mut m);
    m.set("k", config.k);
    let result: ClusterResult = match method {
        Method::Centroid(cm) => {
            m.set("method", cm)
                .set("family", config.effective_family())
                .set("seed", config.seed)
                .set("restarts", config.restarts)
                .set("max_iters", config.max_iters)
                .set("tol", config.tol)
                .set("init", "uniform_bounding_box")
                .set("restart_selection", "min_hard_objective");
            if cm.is_power() {
                m.set("power.s0", config.power.s0)
                    .set("power.anneal_factor", config.power.anneal_factor)
                    .set("power.s_min", config.power.s_min);
            }
            clustering::fit(&input.data, &config)?
        }
        Method::Agglomerative => {
            m.set("method", "agglomerative")
                .set("agglomerative.linkage", "average")
                .set("agglomerative.tie_break", "smallest_pair_index");
            baselines::agglomerative(&input.data, config.k)?
        }
        Method::Peak => {
            m.set("method", "peak")
                .set("peak.dc_percentile", dc_percentile)
                .set("peak.density", "gaussian_kernel");
            baselines::density_peak(
                &input.data,
                &PeakConfig {
                    k: config.k,
                    dc_percentile,
                },
            )?
        }
    };

    let mut out = Outputs::new(&a.common.out_dir)?;
    let mut t = TableReport::new("", &["cluster"]);
    for &c in &result.assignments {
        t.push(vec![c.to_string()]);
    }
    out.write("assignments.csv", t.to_csv().as_bytes())?;
    let centroids = DataMatrix::new(result.centroids.centroids.clone(), None, "centroids")?;
    out.write_data("centroids.csv", &centroids)?;
    println!(
        "k={} objective={} hard_objective={} iterations={} converged={}",
        config.k, result.objective, result.hard_objective, result.iterations, result.converged
    );
    if let Some(truth) = input.data.labels() {
        let r = metrics::evaluate(truth, &result.assignments)?;
        let mut t = TableReport::new("", &["ari", "nmi"]);
        t.push(vec![r.ari.to_string(), r.nmi.to_string()]);
        out.write("metrics.csv", t.to_csv().as_bytes())?;
        m.set("nmi_normalization", NMI_NORMALIZATION);
        println!("ari={:.6} nmi={:.6}", r.ari, r.nmi);
    }
    out.finish(m)?;
    Ok(())
}

fn dbgsa_cmd(a: DbgsaArgs) -> CliResult<()> {
    let mut p = Params::load("dbgsa", a.common.config.as_deref())?;
    let (path, label_column) = Input::resolve(&mut p, &a.input)?;
    p.flag("k", a.k);
    p.flag("seed", a.seed);
    p.flag("preprocess", a.preprocess);
    a.grid.apply(&mut p, "");

    let seed: u64 = p.get("seed", 0)?;
    let k_flag: Option<usize> = p.opt("k")?;
    let mut opts = experiments::search_from_manifest(p.manifest(), "", 0, seed).map_err(bad_param)?;
    opts.grid.validate().map_err(bad_param)?;
    if opts.restarts == 0 {
        return Err(usage("--theta-restarts must be >= 1"));
    }
    let recipe: PreprocessSpec = p.get("preprocess", PreprocessSpec::Identity)?;
    if k_flag == Some(0) {
        return Err(usage("--k must be >= 1"));
    }

    let input = Input::load(&p, path, &label_column)?;
    opts.k = input.k(k_flag)?;
    let prepared = preprocess(&input.data, &recipe)?;
    let result = dbgsa::search_with(&prepared, &opts)?;

    let mut out = Outputs::new(&a.common.out_dir)?;
    let improved_path = out.write_data("improved.csv", &result.improved_data)?;
    out.write("candidates.csv", experiments::candidates_csv(&result.all_candidates).as_bytes())?;

    let feasible = result.all_candidates.iter().filter(|c| c.feasible).count();
    let best = &result.best;
    let mut m = Manifest::new();
    stamp(&mut m, "dbgsa");
    input.record(&mut m);
    m.set("k", opts.k).set("seed", seed).set("preprocess", recipe);
    experiments::search_to_manifest(&opts, &mut m, "");
    m.set("candidate_seed", "derive(seed,[grid_index])")
        .set("candidates.total", result.all_candidates.len())
        .set("candidates.feasible", feasible)
        .set("best.eta", best.eta)
        .set("best.K", best.k)
        .set("best.d", best.d)
        .set("best.objective", best.objective.map(|o| o.to_string()).unwrap_or_default());
    out.finish(m)?;
    println!(
        "best eta={} K={} d={} objective={} ({feasible}/{} candidates feasible); wrote {}",
        best.eta,
        best.k,
        best.d,
        best.objective.unwrap_or(f64::NAN),
        result.all_candidates.len(),
        improved_path.display()
    );
    Ok(())
}

fn metrics_cmd(a: MetricsArgs) -> CliResult<()> {
    let mut p = Params::load("metrics", a.common.config.as_deref())?;
    p.flag_path("truth", a.truth.as_ref());
    p.flag("truth_column", a.truth_column);
    p.flag_path("pred", a.pred.as_ref());
    p.flag("pred_column", a.pred_column);
    let truth_path: PathBuf = p.required("truth")?;
    let pred_path: PathBuf = p.required("pred")?;
    let truth_column = p.get("truth_column", "label".to_string())?;
    let pred_column = p.get("pred_column", "cluster".to_string())?;

    let truth_sha = p.verify_file("truth", &truth_path)?;
    let pred_sha = p.verify_file("pred", &pred_path)?;
    let truth = read_label_column(&truth_path, &truth_column)?;
    let pred = read_label_column(&pred_path, &pred_column)?;
    let r = metrics::evaluate(&truth, &pred)?;

    let mut out = Outputs::new(&a.common.out_dir)?;
    let mut t = TableReport::new("", &["n", "ari", "nmi"]);
    t.push(vec![r.n.to_string(), r.ari.to_string(), r.nmi.to_string()]);
    out.write("metrics.csv", t.to_csv().as_bytes())?;
    let mut m = Manifest::new();
    stamp(&mut m, "metrics");
    m.set("truth", truth_path.display())
        .set("truth.sha256", truth_sha)
        .set("truth_column", truth_column)
        .set("pred", pred_path.display())
        .set("pred.sha256", pred_sha)
        .set("pred_column", pred_column)
        .set("nmi_normalization", NMI_NORMALIZATION)
        .set("nmi_log", "natural");
    out.finish(m)?;
    println!("n={} ari={:.6} nmi={:.6}", r.n, r.ari, r.nmi);
    Ok(())
}

fn simulation(a: SimulationArgs) -> CliResult<()> {
    let mut p = Params::load("simulation-study", a.common.config.as_deref())?;
    p.flag("replicates", if a.full { Some(250) } else { a.replicates });
    p.flag("seed", a.seed);
    p.flag("families", a.families);
    p.flag("methods", a.methods);
    p.flag("samples_per_center", a.samples_per_center);
    p.flag("noise_scale", a.noise_scale);
    p.flag("binomial_trials", a.binomial_trials);
    p.flag("gamma_shape", a.gamma_shape);
    a.power.apply(&mut p);
    let cfg = SimulationConfig::from_manifest(p.manifest()).map_err(bad_param)?;
    cfg.validate().map_err(bad_param)?;

    let result = experiments::simulation_study(&cfg)?;
    let mut out = Outputs::new(&a.common.out_dir)?;
    out.write("raw.csv", experiments::records_to_csv(&result.records).as_bytes())?;
    out.write("table.csv", result.report.to_csv().as_bytes())?;
    let text = result.report.to_text();
    out.write("table.txt", text.as_bytes())?;
    let mut m = cfg.to_manifest();
    stamp(&mut m, "simulation-study");
    for (family, n) in &result.shifted {
        m.set(format!("shifted_replicates.{family}"), n);
    }
    out.finish(m)?;
    print!("{text}");
    Ok(())
}

/// Recipe table: shipped file or `--recipes`, then recipes recorded in a
/// replayed manifest, then `--recipe` overrides.
fn recipes(a: &ImprovementArgs, p: &Params) -> CliResult<(BTreeMap<String, PreprocessSpec>, String)> {
    let (text, source) = match &a.recipes {
        Some(path) => (
            std::fs::read_to_string(path).map_err(|e| usage(format!("--recipes {}: {e}", path.display())))?,
            path.display().to_string(),
        ),
        None => (SHIPPED_RECIPES.to_string(), "shipped".to_string()),
    };
    let mut table = experiments::parse_recipes(&text).map_err(bad_param)?;
    if a.recipes.is_none() {
        for (k, v) in p.manifest().iter() {
            if let Some(name) = k.strip_prefix("recipe.") {
                table.insert(name.to_string(), PreprocessSpec::parse(v).map_err(bad_param)?);
            }
        }
    }
    for o in &a.recipe_overrides {
        let (name, spec) = o
            .split_once('=')
            .ok_or_else(|| usage(format!("--recipe '{o}': expected NAME=SPEC")))?;
        table.insert(name.trim().to_lowercase(), PreprocessSpec::parse(spec).map_err(bad_param)?);
    }
    Ok((table, source))
}

fn improvement(a: ImprovementArgs) -> CliResult<()> {
    let mut p = Params::load("improvement-study", a.common.config.as_deref())?;
    if !a.datasets.is_empty() {
        let mut joined = Vec::new();
        for d in &a.datasets {
            let s = d.display().to_string();
            if s.contains(',') {
                return Err(usage(format!("--dataset '{s}': paths must not contain ','")));
            }
            joined.push(s);
        }
        p.flag("datasets", Some(joined.join(",")));
    }
    p.flag("label_column", a.label_column.as_deref());
    p.flag("seed", a.seed);
    p.flag("kmeans_restarts", a.kmeans_restarts);
    p.flag("peak.dc_percentile", a.dc_percentile);
    a.grid.apply(&mut p, "dbgsa.");

    let cfg = ImprovementConfig::from_manifest(p.manifest()).map_err(bad_param)?;
    cfg.search.grid.validate().map_err(bad_param)?;
    if cfg.kmeans_restarts == 0 || cfg.search.restarts == 0 {
        return Err(usage("restart counts must be >= 1"));
    }
    let paths: Vec<PathBuf> = p
        .raw("datasets")
        .filter(|s| !s.is_empty())
        .ok_or_else(|| usage("missing --dataset"))?
        .split(',')
        .map(PathBuf::from)
        .collect();
    let label_column = p.get("label_column", "auto".to_string())?;
    let (recipe_table, recipe_source) = recipes(&a, &p)?;

    let mut m = cfg.to_manifest();
    stamp(&mut m, "improvement-study");
    m.set("datasets", paths.iter().map(|d| d.display().to_string()).collect::<Vec<_>>().join(","))
        .set("label_column", &label_column)
        .set("recipes.source", recipe_source);

    let mut datasets = Vec::with_capacity(paths.len());
    let mut names = std::collections::BTreeSet::new();
    for path in &paths {
        let name = path
            .file_stem()
            .map(|s| s.to_string_lossy().to_lowercase())
            .unwrap_or_default();
        if !names.insert(name.clone()) {
            return Err(usage(format!("two datasets are named '{name}'")));
        }
        let sha_key = format!("dataset.{name}.sha256");
        let sha = sha256_checked(&p, "datasets", &sha_key, path)?;
        let (data, _) = load_data(path, &label_column)?;
        require_labels(&data, path, &label_column)?;
        let recipe = match recipe_table.get(&name) {
            Some(r) => *r,
            None => {
                eprintln!("note: no recipe for '{name}', using none");
                PreprocessSpec::Identity
            }
        };
        m.set(sha_key, sha).set(format!("recipe.{name}"), recipe);
        datasets.push((data.with_name(name), recipe));
    }

    let result = experiments::improvement_study(&datasets, &cfg)?;
    let mut out = Outputs::new(&a.common.out_dir)?;
    out.write("table.csv", result.report.to_csv().as_bytes())?;
    let table = result.report.to_text();
    out.write("table.txt", table.as_bytes())?;
    out.write("comparison.csv", result.comparison.to_csv().as_bytes())?;
    let comparison = result.comparison.to_text();
    out.write("comparison.txt", comparison.as_bytes())?;
    for ((data, recipe), o) in datasets.iter().zip(&result.datasets) {
        out.write(
            &format!("candidates_{}.csv", o.name),
            experiments::candidates_csv(&o.candidates).as_bytes(),
        )?;
        let prepared = preprocess(data, recipe)?;
        out.write(&format!("plot_{}.csv", o.name), experiments::plot_csv(&prepared, None)?.as_bytes())?;
        m.set(format!("result.{}.eta", o.name), o.best.eta)
            .set(format!("result.{}.K", o.name), o.best.k)
            .set(format!("result.{}.d", o.name), o.best.d);
    }
    out.finish(m)?;
    print!("{table}\n{comparison}");
    Ok(())
}

/// Hash of `path`, checked against `hash_key` when the list key
/// `paths_key` came from a replayed manifest.
fn sha256_checked(p: &Params, paths_key: &str, hash_key: &str, path: &Path) -> CliResult<String> {
    let hash = gravclust::manifest::sha256_file(path)?;
    if !p.is_flag(paths_key) {
        if let Some(expected) = p.raw(hash_key) {
            if expected != hash {
                return Err(Failure::Data(format!(
                    "{} differs from the file recorded in the manifest (sha256 {hash}, expected {expected})",
                    path.display()
                )));
            }
        }
    }
    Ok(hash)
}

fn plotdata(a: PlotArgs) -> CliResult<()> {
    let mut p = Params::load("plotdata", a.common.config.as_deref())?;
    let (path, label_column) = Input::resolve(&mut p, &a.input)?;
    p.flag_path("assignments", a.assignments.as_ref());
    p.flag("assignments_column", a.assignments_column);
    let assignments_path: Option<PathBuf> = p.opt("assignments")?;
    let assignments_column = p.get("assignments_column", "cluster".to_string())?;

    let input = Input::load(&p, path, &label_column)?;
    let mut m = Manifest::new();
    stamp(&mut m, "plotdata");
    input.record(&mut m);
    let assignments = match &assignments_path {
        Some(ap) => {
            let sha = p.verify_file("assignments", ap)?;
            m.set("assignments", ap.display())
                .set("assignments.sha256", sha)
                .set("assignments_column", &assignments_column);
            Some(read_label_column(ap, &assignments_column)?)
        }
        None => None,
    };
    let projection = match input.data.cols() {
        1 => "first_column_y0",
        2 => "identity",
        _ => "pca2",
    };
    m.set("projection", projection);
    let csv = experiments::plot_csv(&input.data, assignments.as_deref())?;
    let mut out = Outputs::new(&a.common.out_dir)?;
    let path = out.write("plot.csv", csv.as_bytes())?;
    out.finish(m)?;
    println!("wrote {} points ({projection}) to {}", input.data.rows(), path.display());
    Ok(())
}
