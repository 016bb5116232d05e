use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::config::{BackendKind, ExperimentConfig, ExperimentKind, ProblemSource};
use super::report::{ExperimentReport, GroupSummary, Metrics, RepeatRecord, REPORT_SCHEMA_VERSION};
use crate::data::{bundled_boston_path, bundled_mnist_test, bundled_mnist_train, load_boston, load_mnist_limit, synth_linear, synth_separable};
use crate::device::SigmaMode;
use crate::error::{Error, Result};
use crate::learn::{
    evaluate_prediction, fit_linear, fit_logistic, train_two_layer, Backend, ClassLabels, LinearFit, RegressionProblem,
};
use crate::mapping::build_design_matrix;
use crate::numerics::{DenseMatrix, DenseVector};

/// Default output directory when the config does not name one.
pub const OUTPUT_DIR_ENV: &str = "XPOINT_OUTPUT_DIR";

pub fn resolve_output_dir(cfg: &ExperimentConfig) -> Option<PathBuf> {
    cfg.output_dir
        .clone()
        .or_else(|| std::env::var_os(OUTPUT_DIR_ENV).map(PathBuf::from))
}

/// Seed of repeat `k`; repeat 0 uses the master seed itself.
pub fn derive_seed(master: u64, k: u64) -> u64 {
    if k == 0 {
        return master;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(master);
    rng.set_stream(k);
    rng.next_u64()
}

fn invalid(path: &str, detail: impl Into<String>) -> Error {
    Error::ConfigInvalid {
        path: path.into(),
        detail: detail.into(),
    }
}

pub(crate) struct Artifacts {
    dir: Option<PathBuf>,
    files: Vec<PathBuf>,
}

impl Artifacts {
    pub(crate) fn new(dir: Option<PathBuf>) -> Result<Self> {
        if let Some(d) = &dir {
            std::fs::create_dir_all(d).map_err(|e| Error::from(e).context(format!("creating {}", d.display())))?;
        }
        Ok(Self { dir, files: Vec::new() })
    }

    fn write(&mut self, name: &str, f: impl FnOnce(&Path) -> Result<()>) -> Result<()> {
        if let Some(d) = &self.dir {
            let path = d.join(name);
            f(&path).map_err(|e| e.context(format!("writing {}", path.display())))?;
            self.files.push(path);
        }
        Ok(())
    }

    fn table(&mut self, name: &str, header: &[&str], rows: Vec<Vec<String>>) -> Result<()> {
        self.write(name, |p| write_csv(p, header, rows))
    }
}

pub(crate) fn write_csv(path: &Path, header: &[&str], rows: Vec<Vec<String>>) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(header)?;
    for r in rows {
        w.write_record(&r)?;
    }
    w.flush()?;
    Ok(())
}

fn num(v: f64) -> String {
    format!("{v:e}")
}

fn opt(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

/// A regression problem with an optional held-out set.
struct Problem {
    x: DenseMatrix,
    y: DenseVector,
    test: Option<(DenseMatrix, DenseVector)>,
    names: Vec<String>,
}

fn with_bias(f: &DenseMatrix) -> DenseMatrix {
    DenseMatrix::from_fn(f.rows(), f.cols() + 1, |i, j| if j == 0 { 1.0 } else { f[(i, j - 1)] })
}

fn load_problem(cfg: &ExperimentConfig) -> Result<Problem> {
    let d = &cfg.data;
    match d.source {
        ProblemSource::Inline => {
            let x = build_design_matrix(&d.x, d.degree, d.bias).map_err(|e| invalid("data.x", e.to_string()))?;
            let names = (0..x.cols()).map(|j| format!("w{j}")).collect();
            Ok(Problem {
                x,
                y: DenseVector::new(d.y.clone()).map_err(|e| invalid("data.y", e.to_string()))?,
                test: None,
                names,
            })
        }
        ProblemSource::Synthetic => {
            let s = &d.synthetic;
            let w = DenseVector::new(s.w_true.clone()).map_err(|e| invalid("data.synthetic.w_true", e.to_string()))?;
            let (x, y) = synth_linear(s.n, &w, s.noise_sd, cfg.seed).map_err(|e| invalid("data.synthetic", e.to_string()))?;
            let names = (0..x.cols()).map(|j| format!("w{j}")).collect();
            Ok(Problem { x, y, test: None, names })
        }
        ProblemSource::Boston => {
            let path = d.boston_path.clone().unwrap_or_else(bundled_boston_path);
            let ds = load_boston(&path)?
                .with_split(d.train_size)
                .map_err(|e| invalid("data.train_size", e.to_string()))?;
            let (xt, yt) = ds.train();
            let (xs, ys) = ds.test();
            let mut names = vec!["bias".to_string()];
            names.extend(ds.feature_names.iter().cloned());
            Ok(Problem {
                x: with_bias(&xt),
                y: yt,
                test: Some((with_bias(&xs), ys)),
                names,
            })
        }
    }
}

fn relative_errors(w: &DenseVector, oracle: &DenseVector) -> Vec<f64> {
    w.iter().zip(oracle.iter()).map(|(a, b)| (a - b) / b.abs()).collect()
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

fn mean(v: impl IntoIterator<Item = f64>) -> f64 {
    let (s, n) = v.into_iter().fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    s / n as f64
}

struct Outcome {
    backend: &'static str,
    metrics: Metrics,
    repeats: Vec<RepeatRecord>,
}

/// Runs one experiment end to end and writes its CSV artifacts.
pub fn run(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    cfg.validate()?;
    let start = Instant::now();
    let mut art = Artifacts::new(resolve_output_dir(cfg))?;
    let out = match cfg.experiment {
        ExperimentKind::FitLinear => run_regression(cfg, &mut art, false),
        ExperimentKind::Predict => run_regression(cfg, &mut art, true),
        ExperimentKind::Boston => {
            let mut c = cfg.clone();
            c.data.source = ProblemSource::Boston;
            run_regression(&c, &mut art, false)
        }
        ExperimentKind::FitLogistic => run_logistic(cfg, &mut art),
        ExperimentKind::MnistTrain => run_mnist(cfg, &mut art),
        ExperimentKind::NoiseSweep => run_noise_sweep(cfg, &mut art),
        ExperimentKind::WireSweep => run_wire_sweep(cfg, &mut art),
        ExperimentKind::Transient => run_transient(cfg, &mut art, true),
        ExperimentKind::Stability => run_transient(cfg, &mut art, false),
    }
    .map_err(|e| e.context(format!("experiment {}", cfg.experiment)))?;
    let mut report = ExperimentReport {
        schema_version: REPORT_SCHEMA_VERSION,
        experiment: cfg.experiment,
        backend: out.backend.to_string(),
        seed: cfg.seed,
        config: cfg.clone(),
        metrics: out.metrics,
        repeats: out.repeats,
        artifacts: art.files,
        wall_clock_s: 0.0,
    };
    if let Some(d) = resolve_output_dir(cfg) {
        let path = d.join("report.json");
        report.artifacts.push(path.clone());
        report.wall_clock_s = start.elapsed().as_secs_f64();
        report.write_json(&path)?;
    } else {
        report.wall_clock_s = start.elapsed().as_secs_f64();
    }
    Ok(report)
}

fn test_sigma(w: &DenseVector, p: &Problem) -> Result<Option<f64>> {
    p.test.as_ref().map(|(x, y)| evaluate_prediction(w, x, y)).transpose()
}

fn run_regression(cfg: &ExperimentConfig, art: &mut Artifacts, predict: bool) -> Result<Outcome> {
    let p = load_problem(cfg)?;
    let rp = RegressionProblem::new(p.x.clone(), p.y.clone())?.with_names(p.names.clone())?;
    let oracle = fit_linear(&rp, &Backend::Oracle)?;
    let mut m = Metrics {
        oracle_weights: Some(oracle.w.as_slice().to_vec()),
        oracle_sigma_p_train: Some(oracle.sigma_p),
        oracle_sigma_p_test: test_sigma(&oracle.w, &p)?,
        ..Metrics::default()
    };
    let mut repeats = Vec::new();
    let fit: LinearFit = match cfg.backend {
        BackendKind::Oracle => {
            m.sigma_p_train = m.oracle_sigma_p_train;
            m.sigma_p_test = m.oracle_sigma_p_test;
            oracle.clone()
        }
        BackendKind::Circuit => {
            let runs = (0..cfg.repeats as u64)
                .into_par_iter()
                .map(|k| {
                    let seed = derive_seed(cfg.seed, k);
                    let f = fit_linear(&rp, &cfg.backend(seed))?;
                    let test = test_sigma(&f.w, &p)?;
                    Ok((seed, f, test))
                })
                .collect::<Result<Vec<_>>>()?;
            for (seed, f, test) in &runs {
                repeats.push(RepeatRecord {
                    label: "circuit".into(),
                    seed: *seed,
                    sigma_p_train: Some(f.sigma_p),
                    sigma_p_test: *test,
                    max_relative_error: Some(max_abs(&relative_errors(&f.w, &oracle.w))),
                });
            }
            m.sigma_p_train = Some(mean(runs.iter().map(|r| r.1.sigma_p)));
            if p.test.is_some() {
                m.sigma_p_test = Some(mean(runs.iter().map(|r| r.2.unwrap_or(f64::NAN))));
            }
            if runs.len() > 1 {
                m.notes
                    .push(format!("sigma_p averaged over {} seeds; weights from the first", runs.len()));
            }
            let first = runs.into_iter().next().expect("at least one repeat").1;
            if let Some((c, s)) = &first.circuit {
                if s.clamp_violation {
                    m.notes.push(format!("amplifier clamp exceeded (peak {:.3} V)", s.peak_voltage));
                }
                if c.mapped().mismatch_warnings > 0 {
                    m.notes
                        .push(format!("{} device pairs outside program/verify tolerance", c.mapped().mismatch_warnings));
                }
                let mapped = c.mapped().clone();
                art.write("conductances.csv", |path| mapped.write_csv(path))?;
            }
            first
        }
    };
    let rel = relative_errors(&fit.w, &oracle.w);
    m.max_relative_error = Some(max_abs(&rel));
    m.relative_errors = Some(rel.clone());
    m.weights = Some(fit.w.as_slice().to_vec());
    m.lse = Some(fit.lse);
    if p.test.is_none() {
        m.residuals = Some(p.x.matvec(&fit.w)?.sub(&p.y)?.into_vec());
    }
    art.table(
        "weights.csv",
        &["index", "name", "oracle", "backend", "relative_error"],
        (0..fit.w.len())
            .map(|j| vec![j.to_string(), p.names[j].clone(), num(oracle.w[j]), num(fit.w[j]), num(rel[j])])
            .collect(),
    )?;
    if let Some((xs, ys)) = &p.test {
        let mut rows = Vec::new();
        for (split, x, y) in [("train", &p.x, &p.y), ("test", xs, ys)] {
            let po = x.matvec(&oracle.w)?;
            let pb = x.matvec(&fit.w)?;
            for i in 0..x.rows() {
                rows.push(vec![split.to_string(), i.to_string(), num(y[i]), num(po[i]), num(pb[i])]);
            }
        }
        art.table("predictions.csv", &["split", "row", "actual", "oracle", "backend"], rows)?;
    }
    if predict || !cfg.data.predict_at.is_empty() && cfg.data.source != ProblemSource::Boston {
        if cfg.data.predict_at.is_empty() {
            return Err(invalid("data.predict_at", "no points to predict"));
        }
        let rows = build_design_matrix(&cfg.data.predict_at, cfg.data.degree, cfg.data.bias)
            .map_err(|e| invalid("data.predict_at", e.to_string()))?;
        if rows.cols() != fit.w.len() {
            return Err(invalid("data.predict_at", "point dimension does not match the training data"));
        }
        let mut pred = Vec::new();
        let mut pred_o = Vec::new();
        for i in 0..rows.rows() {
            let r = DenseVector::from(rows.row(i).to_vec());
            pred.push(fit.predict(&r)?);
            pred_o.push(r.dot(&oracle.w));
        }
        art.table(
            "prediction_rows.csv",
            &["point", "oracle", "backend"],
            pred.iter()
                .zip(&pred_o)
                .enumerate()
                .map(|(i, (b, o))| vec![i.to_string(), num(*o), num(*b)])
                .collect(),
        )?;
        m.predictions = Some(pred);
        m.oracle_predictions = Some(pred_o);
    }
    Ok(Outcome {
        backend: backend_name(cfg.backend),
        metrics: m,
        repeats,
    })
}

fn backend_name(b: BackendKind) -> &'static str {
    match b {
        BackendKind::Oracle => "oracle",
        BackendKind::Circuit => "circuit",
    }
}

fn run_logistic(cfg: &ExperimentConfig, art: &mut Artifacts) -> Result<Outcome> {
    let lc = &cfg.logistic;
    let (x, labels) = match lc.synthetic_n {
        Some(n) => {
            let s = synth_separable(n, lc.margin, cfg.seed).map_err(|e| invalid("logistic.synthetic_n", e.to_string()))?;
            (s.x, s.labels)
        }
        None => (
            build_design_matrix(&lc.x, 1, true).map_err(|e| invalid("logistic.x", e.to_string()))?,
            lc.labels.clone(),
        ),
    };
    let labels = ClassLabels::new(labels, lc.a).map_err(|e| invalid("logistic.labels", e.to_string()))?;
    let oracle = fit_logistic(&x, &labels, &Backend::Oracle)?;
    let fit = fit_logistic(&x, &labels, &cfg.backend(cfg.seed))?;
    let mut hits = 0;
    let mut rows = Vec::new();
    for i in 0..x.rows() {
        let point = DenseVector::from(x.row(i)[1..].to_vec());
        let class = fit.classify(&point)?;
        hits += usize::from(class == labels.labels[i]);
        let mut r: Vec<String> = point.iter().map(|v| num(*v)).collect();
        r.extend([labels.labels[i].to_string(), num(fit.score(&point)?), class.to_string()]);
        rows.push(r);
    }
    let mut header: Vec<String> = (1..x.cols()).map(|j| format!("x{j}")).collect();
    header.extend(["label", "score", "class"].map(String::from));
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    art.table("points.csv", &header, rows)?;
    let classes = lc
        .classify
        .iter()
        .map(|p| fit.classify(&DenseVector::new(p.clone())?))
        .collect::<Result<Vec<u8>>>()
        .map_err(|e| invalid("logistic.classify", e.to_string()))?;
    let rel = relative_errors(&fit.w, &oracle.w);
    let m = Metrics {
        weights: Some(fit.w.as_slice().to_vec()),
        oracle_weights: Some(oracle.w.as_slice().to_vec()),
        max_relative_error: Some(max_abs(&rel)),
        relative_errors: Some(rel),
        lse: Some(fit.fit.lse),
        training_accuracy: Some(hits as f64 / x.rows() as f64),
        classes: Some(classes),
        ..Metrics::default()
    };
    Ok(Outcome {
        backend: backend_name(cfg.backend),
        metrics: m,
        repeats: Vec::new(),
    })
}

fn run_mnist(cfg: &ExperimentConfig, art: &mut Artifacts) -> Result<Outcome> {
    let mc = &cfg.mnist;
    let (ti, tl) = bundled_mnist_train();
    let (si, sl) = bundled_mnist_test();
    let train = load_mnist_limit(
        mc.train_images.as_deref().unwrap_or(&ti),
        mc.train_labels.as_deref().unwrap_or(&tl),
        Some(mc.train_limit),
    )?;
    let test = load_mnist_limit(
        mc.test_images.as_deref().unwrap_or(&si),
        mc.test_labels.as_deref().unwrap_or(&sl),
        mc.test_limit,
    )?;
    let net = crate::learn::TwoLayerConfig {
        seed: cfg.seed,
        ..mc.network.clone()
    };
    let oracle = train_two_layer(&train.images, &train.labels, &net, &Backend::Oracle)?;
    let oracle_acc = oracle.accuracy(&test.images, &test.labels)?;
    let model = match cfg.backend {
        BackendKind::Oracle => oracle.clone(),
        BackendKind::Circuit => train_two_layer(&train.images, &train.labels, &net, &cfg.backend(cfg.seed))?,
    };
    let mut m = Metrics {
        accuracy: Some(model.accuracy(&test.images, &test.labels)?),
        oracle_accuracy: Some(oracle_acc),
        lse_per_output: Some(model.lse.clone()),
        oracle_lse_per_output: Some(oracle.lse.clone()),
        solves: Some(model.solves),
        ..Metrics::default()
    };
    if mc.open_loop {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let arrays = model.program_arrays(&cfg.device, &mut rng)?;
        m.open_loop_accuracy = Some(arrays.accuracy(&test.images, &test.labels)?);
    }
    m.notes.push(format!("{} training digits, {} test digits", train.len(), test.len()));
    let mut rows = Vec::new();
    for k in 0..model.w2.cols() {
        for r in 0..model.w2.rows() {
            rows.push(vec![k.to_string(), r.to_string(), num(oracle.w2[(r, k)]), num(model.w2[(r, k)])]);
        }
    }
    art.table("w2.csv", &["output", "row", "oracle", "backend"], rows)?;
    art.table(
        "lse.csv",
        &["output", "oracle", "backend"],
        (0..model.lse.len())
            .map(|k| vec![k.to_string(), num(oracle.lse[k]), num(model.lse[k])])
            .collect(),
    )?;
    art.write("model.json", |p| Ok(std::fs::write(p, model.to_json()?)?))?;
    Ok(Outcome {
        backend: backend_name(cfg.backend),
        metrics: m,
        repeats: Vec::new(),
    })
}

/// Per-group means over the repeats, in first-appearance order.
fn summarize(records: &[RepeatRecord]) -> Vec<GroupSummary> {
    let mut labels: Vec<&str> = Vec::new();
    for r in records {
        if !labels.contains(&r.label.as_str()) {
            labels.push(&r.label);
        }
    }
    labels
        .into_iter()
        .map(|l| {
            let g: Vec<&RepeatRecord> = records.iter().filter(|r| r.label == l).collect();
            GroupSummary {
                label: l.to_string(),
                mean_sigma_p_train: mean(g.iter().map(|r| r.sigma_p_train.unwrap_or(f64::NAN))),
                mean_sigma_p_test: g[0].sigma_p_test.map(|_| mean(g.iter().map(|r| r.sigma_p_test.unwrap_or(f64::NAN)))),
                max_relative_error: Some(g.iter().filter_map(|r| r.max_relative_error).fold(0.0, f64::max)),
                runs: g.len(),
            }
        })
        .collect()
}

fn repeat_rows(records: &[RepeatRecord]) -> Vec<Vec<String>> {
    records
        .iter()
        .map(|r| {
            vec![
                r.label.clone(),
                r.seed.to_string(),
                opt(r.sigma_p_train),
                opt(r.sigma_p_test),
                opt(r.max_relative_error),
            ]
        })
        .collect()
}

const REPEAT_HEADER: [&str; 5] = ["setting", "seed", "sigma_p_train", "sigma_p_test", "max_relative_error"];

/// Circuit fits over `settings × repeats`, with common seeds across settings.
fn circuit_grid<T: Sync>(
    cfg: &ExperimentConfig,
    p: &Problem,
    oracle: &DenseVector,
    settings: &[(String, T)],
    apply: impl Fn(&mut crate::learn::CircuitBackend, &T) + Sync,
) -> Result<Vec<RepeatRecord>> {
    let rp = RegressionProblem::new(p.x.clone(), p.y.clone())?;
    let jobs: Vec<(usize, u64)> = (0..settings.len())
        .flat_map(|s| (0..cfg.repeats as u64).map(move |k| (s, k)))
        .collect();
    jobs.par_iter()
        .map(|&(s, k)| {
            let seed = derive_seed(cfg.seed, k);
            let mut cb = cfg.circuit_backend(seed);
            apply(&mut cb, &settings[s].1);
            let f = fit_linear(&rp, &Backend::Circuit(cb))?;
            Ok(RepeatRecord {
                label: settings[s].0.clone(),
                seed,
                sigma_p_train: Some(f.sigma_p),
                sigma_p_test: test_sigma(&f.w, p)?,
                max_relative_error: Some(max_abs(&relative_errors(&f.w, oracle))),
            })
        })
        .collect()
}

fn run_noise_sweep(cfg: &ExperimentConfig, art: &mut Artifacts) -> Result<Outcome> {
    if cfg.sweep.sigma_modes.is_empty() {
        return Err(invalid("sweep.sigma_modes", "empty"));
    }
    let p = load_problem(cfg)?;
    let oracle = fit_linear(&RegressionProblem::new(p.x.clone(), p.y.clone())?, &Backend::Oracle)?;
    let settings: Vec<(String, SigmaMode)> = cfg.sweep.sigma_modes.iter().map(|s| (s.to_string(), *s)).collect();
    let records = circuit_grid(cfg, &p, &oracle.w, &settings, |cb, s| cb.device.sigma_mode = *s)?;
    let groups = summarize(&records);
    let monotone = groups
        .windows(2)
        .all(|w| w[1].mean_sigma_p_train >= w[0].mean_sigma_p_train);
    art.table("noise_sweep.csv", &REPEAT_HEADER, repeat_rows(&records))?;
    let last = groups.last().expect("nonempty");
    let m = Metrics {
        oracle_sigma_p_train: Some(oracle.sigma_p),
        oracle_sigma_p_test: test_sigma(&oracle.w, &p)?,
        sigma_p_train: Some(last.mean_sigma_p_train),
        sigma_p_test: last.mean_sigma_p_test,
        notes: vec![
            format!("top-level sigma_p is the mean at the last setting ({})", last.label),
            format!("mean sigma_p(train) nondecreasing across settings: {monotone}"),
        ],
        groups,
        ..Metrics::default()
    };
    Ok(Outcome {
        backend: "circuit",
        metrics: m,
        repeats: records,
    })
}

fn run_wire_sweep(cfg: &ExperimentConfig, art: &mut Artifacts) -> Result<Outcome> {
    if cfg.sweep.wire_r.is_empty() {
        return Err(invalid("sweep.wire_r", "empty"));
    }
    let p = load_problem(cfg)?;
    let oracle = fit_linear(&RegressionProblem::new(p.x.clone(), p.y.clone())?, &Backend::Oracle)?;
    let settings: Vec<(String, f64)> = cfg.sweep.wire_r.iter().map(|r| (format!("{r}"), *r)).collect();
    let records = circuit_grid(cfg, &p, &oracle.w, &settings, |cb, r| cb.wire_r = *r)?;
    art.table("wire_sweep.csv", &REPEAT_HEADER, repeat_rows(&records))?;
    let m = Metrics {
        oracle_sigma_p_train: Some(oracle.sigma_p),
        oracle_sigma_p_test: test_sigma(&oracle.w, &p)?,
        groups: summarize(&records),
        ..Metrics::default()
    };
    Ok(Outcome {
        backend: "circuit",
        metrics: m,
        repeats: records,
    })
}

fn run_transient(cfg: &ExperimentConfig, art: &mut Artifacts, simulate: bool) -> Result<Outcome> {
    let p = load_problem(cfg)?;
    let circuit = cfg.circuit_backend(cfg.seed).build(&p.x, &[&p.y])?;
    let ss = circuit.state_space()?;
    let spectrum = ss.spectrum()?;
    let steady = circuit.steady_state()?;
    let w = circuit.mapped().weights_from_voltages(&steady.v)?;
    let (eps, lse) = crate::numerics::residual_and_lse(&p.x, &p.y, &w)?;
    let mut m = Metrics {
        lambda_min: Some(spectrum.min_real_magnitude),
        max_real_eigenvalue: Some(spectrum.max_real()),
        stable: Some(spectrum.is_stable()),
        weights: Some(w.as_slice().to_vec()),
        sigma_p_train: Some(crate::learn::population_sd(eps.as_slice())),
        sigma_p_test: test_sigma(&w, &p)?,
        lse: Some(lse),
        ..Metrics::default()
    };
    art.write("spectrum.csv", |path| crate::circuit::write_spectrum_csv(&spectrum, path))?;
    if simulate {
        if !spectrum.is_stable() {
            m.notes.push("unstable spectrum; transient skipped".into());
        } else {
            let tr = ss.transient(&cfg.transient)?;
            let scale = steady.v.norm_inf().max(f64::MIN_POSITIVE);
            m.transient_error = Some(tr.final_v.sub(&steady.v)?.norm_inf() / scale);
            let op = circuit.operating_point()?;
            m.notes.push(format!(
                "end state vs finite-gain operating point: {:.3e} (relative)",
                tr.final_v.sub(&op.v)?.norm_inf() / scale
            ));
            m.settle_time = Some(tr.settle_time);
            m.settled = Some(tr.settled);
            m.clamped = Some(tr.any_clamped());
            art.write("trace.csv", |path| tr.write_csv(path))?;
        }
    }
    Ok(Outcome {
        backend: "circuit",
        metrics: m,
        repeats: Vec::new(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seeds_are_distinct_and_stable() {
        let s: Vec<u64> = (0..5).map(|k| derive_seed(42, k)).collect();
        assert_eq!(s[0], 42);
        assert_eq!(s, (0..5).map(|k| derive_seed(42, k)).collect::<Vec<_>>());
        let mut d = s.clone();
        d.sort_unstable();
        d.dedup();
        assert_eq!(d.len(), 5);
    }

    #[test]
    fn exactly_determined_fit_has_zero_residuals() {
        let mut c = ExperimentConfig::new(ExperimentKind::FitLinear, 1);
        c.data.x = vec![vec![1.0], vec![3.0]];
        c.data.y = vec![0.2, 0.6];
        c.data.predict_at = vec![];
        c.device.quantize = false;
        for b in [BackendKind::Oracle, BackendKind::Circuit] {
            c.backend = b;
            let r = run(&c).unwrap();
            let res = r.metrics.residuals.unwrap();
            assert!(res.iter().all(|v| v.abs() < 1e-9), "{b:?}: {res:?}");
        }
    }

    #[test]
    fn predict_reads_extra_row() {
        let c = ExperimentConfig::preset(ExperimentKind::Predict);
        let r = run(&c).unwrap();
        let (p, o) = (r.metrics.predictions.unwrap(), r.metrics.oracle_predictions.unwrap());
        assert_eq!(p.len(), 1);
        assert!((p[0] - o[0]).abs() < 0.05 * o[0].abs(), "{p:?} {o:?}");
    }

    #[test]
    fn artifacts_and_report_written() {
        let dir = tempfile::tempdir().unwrap();
        let mut c = ExperimentConfig::preset(ExperimentKind::FitLogistic);
        c.output_dir = Some(dir.path().to_path_buf());
        let r = run(&c).unwrap();
        assert_eq!(r.metrics.training_accuracy, Some(1.0));
        for name in ["points.csv", "report.json"] {
            assert!(dir.path().join(name).exists(), "{name}");
        }
        let back: ExperimentReport =
            serde_json::from_str(&std::fs::read_to_string(dir.path().join("report.json")).unwrap()).unwrap();
        assert_eq!(back.config, c);
        assert_eq!(back.metrics, r.metrics);
    }

    #[test]
    fn logistic_reports_classes() {
        let r = run(&ExperimentConfig::preset(ExperimentKind::FitLogistic)).unwrap();
        assert_eq!(r.metrics.classes, Some(vec![1, 0]));
    }

    #[test]
    fn stability_of_small_problem() {
        let mut c = ExperimentConfig::preset(ExperimentKind::Transient);
        c.data.source = ProblemSource::Inline;
        c.device = crate::device::DeviceModel::default();
        c.scaling = crate::mapping::ScalingConfig::default();
        let r = run(&c).unwrap();
        assert_eq!(r.metrics.stable, Some(true));
        assert!(r.metrics.transient_error.unwrap() < 0.01);
        assert_eq!(r.metrics.settled, Some(true));
    }
}
