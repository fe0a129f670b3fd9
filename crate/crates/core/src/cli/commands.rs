use std::path::Path;

use serde::{de::DeserializeOwned, Deserialize, Serialize};

use super::bundle::{BundleWriter, Manifest, Status};
use super::config::RunConfig;
use super::phantom::Phantom;
use crate::error::{Error, Result};
use crate::forward_data::MeasurementSet;
use crate::grid_fem::{RectMesh, ScalarField};
use crate::inversion::{run_inversion_with, ReconstructionResult};
use crate::metrics::{local_maxima, rmse_mae_me, MetricsReport, Peak};
use crate::tail::{first_guess_tail, run_accelerator_with, AcceleratorOutcome, TailFunction};

pub const PHANTOM_FILE: &str = "phantom.field";
pub const MEASUREMENT_FILE: &str = "measurements.txt";
pub const FINAL_FILE: &str = "a_final.field";
pub const HISTORY_FILE: &str = "history.csv";
pub const INNER_FILE: &str = "inner.csv";
pub const METRICS_FILE: &str = "metrics.txt";

/// One accelerator iteration in `history.csv`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HistoryRow {
    pub iteration: usize,
    /// Consecutive difference; `inf` on the first iteration.
    pub criterion: f64,
    pub floored: usize,
    pub clamped: usize,
    /// Relative error against the truth, when a truth was supplied.
    pub rmse: Option<f64>,
}

/// One inner iteration of a derivative stage in `inner.csv`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InnerRow {
    pub stage: usize,
    pub iteration: usize,
    pub difference: f64,
}

/// Error metrics of one stage coefficient in `stages.csv`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StageRow {
    pub stage: usize,
    pub rmse: f64,
    pub mae: f64,
    pub me: f64,
}

fn to_csv<T: Serialize>(rows: &[T]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r).map_err(|e| Error::Parse(e.to_string()))?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Parse(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

fn from_csv<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let mut r = csv::Reader::from_path(path).map_err(|e| Error::IncompleteBundle(format!("{}: {e}", path.display())))?;
    r.deserialize().map(|row| row.map_err(|e| Error::Parse(e.to_string()))).collect()
}

/// Truth coefficient `a = μ_a / D` on `mesh` from an absorption map on any mesh.
pub fn truth_coefficient(config: &RunConfig, mu_a: &ScalarField, mesh: &RectMesh) -> Result<ScalarField> {
    mu_a.resample(mesh)?.map(|v| v / config.diffusion)
}

/// Absorption map of the configured example on the forward mesh.
pub fn cmd_phantom(config: &RunConfig, out: Option<&Path>) -> Result<ScalarField> {
    config.validate()?;
    let mu_a = Phantom::from_config(config)?.sample(&config.outer_mesh()?)?;
    if let Some(dir) = out {
        let mut w = BundleWriter::create(dir, "phantom", config)?;
        w.put(PHANTOM_FILE, &mu_a.to_text())?;
        w.finish(Status::Complete)?;
    }
    Ok(mu_a)
}

/// Simulate, perturb and preprocess the measurements of every source.
pub fn cmd_forward(config: &RunConfig, mu_a: &ScalarField, out: Option<&Path>) -> Result<MeasurementSet> {
    config.validate()?;
    let data = MeasurementSet::simulate(
        mu_a,
        &config.forward_model()?,
        config.schedule()?,
        config.layout()?,
        config.preprocessing(),
    )?;
    if let Some(dir) = out {
        let mut w = BundleWriter::create(dir, "forward", config)?;
        w.input(PHANTOM_FILE, mu_a.to_text().as_bytes());
        w.put(PHANTOM_FILE, &mu_a.to_text())?;
        w.put(MEASUREMENT_FILE, &data.to_text())?;
        w.finish(Status::Complete)?;
    }
    Ok(data)
}

/// Everything an inversion produces.
#[derive(Debug, Clone)]
pub struct InvertOutcome {
    pub first_guess: TailFunction,
    pub accelerator: AcceleratorOutcome,
    pub reconstruction: ReconstructionResult,
    /// Scores of the final coefficient over the evaluation region.
    pub metrics: Option<MetricsReport>,
}

fn check_data(config: &RunConfig, data: &MeasurementSet) -> Result<()> {
    let omega = config.omega()?;
    if *data.layout().omega() != omega {
        return Err(Error::Config(format!(
            "measurements cover {:?}, the configuration reconstructs on {:?}",
            data.layout().omega(),
            omega
        )));
    }
    let count = data.schedule().positions().len();
    if count < 3 || config.tail_sources.iter().any(|&i| i >= count) {
        return Err(Error::TraceCount { expected: config.tail_sources.len().max(3), got: count });
    }
    Ok(())
}

/// First-guess tail, accelerator, then every derivative stage. With `out`
/// the bundle is written as results appear, so a failing stage leaves a
/// partial bundle marked as such.
pub fn cmd_invert(
    config: &RunConfig,
    data: &MeasurementSet,
    truth_mu_a: Option<&ScalarField>,
    out: Option<&Path>,
) -> Result<InvertOutcome> {
    config.validate()?;
    check_data(config, data)?;
    let mesh = config.inversion_mesh()?;
    let basis = config.recovery_basis()?;
    let region = config.region()?;
    let truth = truth_mu_a.map(|t| truth_coefficient(config, t, &mesh)).transpose()?;

    let mut writer = match out {
        Some(dir) => {
            let mut w = BundleWriter::create(dir, "invert", config)?;
            w.input(MEASUREMENT_FILE, data.to_text().as_bytes());
            if let Some(t) = truth_mu_a {
                w.input("truth", t.to_text().as_bytes());
            }
            Some(w)
        }
        None => None,
    };
    let result = invert_into(config, data, truth.as_ref(), &basis, &region, writer.as_mut());
    if let Some(w) = writer {
        let status = match &result {
            Ok(_) => Status::Complete,
            Err(e) => Status::Partial(e.to_string()),
        };
        w.finish(status)?;
    }
    result
}

fn invert_into(
    config: &RunConfig,
    data: &MeasurementSet,
    truth: Option<&ScalarField>,
    basis: &crate::inversion::RecoveryBasis,
    region: &crate::grid_fem::Rect,
    mut writer: Option<&mut BundleWriter>,
) -> Result<InvertOutcome> {
    let mesh = *basis.mesh();
    let first_guess = first_guess_tail(data, &mesh, config.k(), &config.tail_sources)?;
    if let Some(w) = writer.as_deref_mut() {
        w.put("tail_first_guess.field", &first_guess.values().to_text())?;
    }

    let last = data.traces().len() - 1;
    let boundary = data.layout().boundary_values_positive(&data.traces()[last].denoised, &mesh)?;
    let monitor = |a: &ScalarField| truth.map(|t| rmse_mae_me(t, a, region).map(|m| m.rmse).unwrap_or(f64::NAN));
    let accelerator = run_accelerator_with(
        &first_guess,
        &boundary,
        basis,
        config.recovery_options(),
        &config.accelerator(),
        monitor,
    )?;
    if let Some(w) = writer.as_deref_mut() {
        let rows: Vec<HistoryRow> = accelerator
            .history
            .iter()
            .map(|r| HistoryRow {
                iteration: r.iteration,
                criterion: r.criterion,
                floored: r.floored,
                clamped: r.clamped,
                rmse: r.score,
            })
            .collect();
        w.put(HISTORY_FILE, &to_csv(&rows)?)?;
        w.put("tail.field", &accelerator.tail.values().to_text())?;
        w.put("a_stage_1.field", &accelerator.coefficient.to_text())?;
    }
    if let Some(e) = accelerator.failure() {
        return Err(e);
    }

    let mut inner = Vec::new();
    let reconstruction = run_inversion_with(data, &accelerator, basis, &config.inversion(), |n, q, a| {
        inner.extend(q.history.iter().enumerate().map(|(k, &d)| InnerRow { stage: n, iteration: k + 1, difference: d }));
        if let Some(w) = writer.as_deref_mut() {
            w.put(&format!("q_{n}.field"), &q.field.to_text())?;
            let name = if n < data.schedule().intervals() { format!("a_stage_{}.field", n + 1) } else { "a_trailing.field".into() };
            w.put(&name, &a.to_text())?;
            w.put(INNER_FILE, &to_csv(&inner)?)?;
        }
        Ok(())
    })?;
    let metrics = truth.map(|t| rmse_mae_me(t, &reconstruction.coefficient, region)).transpose()?;
    if let Some(w) = writer {
        w.put(FINAL_FILE, &reconstruction.coefficient.to_text())?;
        if let Some(m) = &metrics {
            w.put(METRICS_FILE, &m.to_text())?;
        }
    }
    Ok(InvertOutcome { first_guess, accelerator, reconstruction, metrics })
}

/// Curves and scores recovered from a finished bundle.
#[derive(Debug, Clone)]
pub struct Report {
    pub metrics: MetricsReport,
    /// `(iteration, consecutive difference)` of the accelerator.
    pub convergence: Vec<(usize, f64)>,
    /// `(iteration, RMSE)` of the accelerator, when the run was scored.
    pub accelerator_rmse: Vec<(usize, f64)>,
    pub stages: Vec<StageRow>,
    /// Local maxima of the final coefficient over the evaluation region.
    pub peaks: Vec<Peak>,
}

/// Score a bundle against the truth and write the curves behind the
/// convergence and error plots.
pub fn cmd_report(bundle: &Path, truth_mu_a: &ScalarField, out: Option<&Path>) -> Result<Report> {
    let manifest = Manifest::read(bundle)?;
    manifest.verify(bundle, &[FINAL_FILE, HISTORY_FILE, "a_stage_1.field"])?;
    let config = RunConfig::read(bundle.join(super::bundle::CONFIG))?;
    if config.hash() != manifest.config_hash {
        return Err(Error::IncompleteBundle("configuration does not match the manifest".into()));
    }
    let region = config.region()?;
    let estimate = ScalarField::read(bundle.join(FINAL_FILE))?;
    let truth = truth_coefficient(&config, truth_mu_a, estimate.mesh())?;
    let metrics = rmse_mae_me(&truth, &estimate, &region)?;

    let history: Vec<HistoryRow> = from_csv(&bundle.join(HISTORY_FILE))?;
    let convergence: Vec<(usize, f64)> =
        history.iter().filter(|r| r.criterion.is_finite()).map(|r| (r.iteration, r.criterion)).collect();
    let accelerator_rmse: Vec<(usize, f64)> =
        history.iter().filter_map(|r| r.rmse.map(|v| (r.iteration, v))).collect();

    let mut stages = Vec::new();
    for n in 1.. {
        let path = bundle.join(format!("a_stage_{n}.field"));
        if !path.exists() {
            break;
        }
        let m = rmse_mae_me(&truth, &ScalarField::read(path)?, &region)?;
        stages.push(StageRow { stage: n, rmse: m.rmse, mae: m.mae, me: m.me });
    }
    let peaks = local_maxima(&estimate, &region);

    let dir = out.map(Path::to_path_buf).unwrap_or_else(|| bundle.join("report"));
    std::fs::create_dir_all(&dir)?;
    #[derive(Serialize)]
    struct Curve {
        iteration: usize,
        value: f64,
    }
    let curve = |rows: &[(usize, f64)]| -> Result<String> {
        to_csv(&rows.iter().map(|&(iteration, value)| Curve { iteration, value }).collect::<Vec<_>>())
    };
    std::fs::write(dir.join("convergence.csv"), curve(&convergence)?)?;
    std::fs::write(dir.join("rmse.csv"), curve(&accelerator_rmse)?)?;
    std::fs::write(dir.join("stages.csv"), to_csv(&stages)?)?;
    #[derive(Serialize)]
    struct PeakRow {
        rank: usize,
        x: f64,
        z: f64,
        value: f64,
    }
    let peak_rows: Vec<PeakRow> =
        peaks.iter().enumerate().map(|(i, p)| PeakRow { rank: i + 1, x: p.x, z: p.z, value: p.value }).collect();
    std::fs::write(dir.join("peaks.csv"), to_csv(&peak_rows)?)?;
    std::fs::write(dir.join(METRICS_FILE), metrics.to_text())?;
    Ok(Report { metrics, convergence, accelerator_rmse, stages, peaks })
}
