//! simulate -> series -> spectral (exact only) -> diagnostics -> emit.

use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;

use crate::circuits::{cycle_unitary, CircuitSpec};
use crate::diagnostics::{
    fit_exponential, shape_check, verdict, FitOptions, FitReport, PoeVerdict, ShapeReport, Verdict,
};
use crate::error::{PoeError, Result};
use crate::io::config::{ExperimentConfig, OutputKind, ResolvedExperiment, ResolvedMode, SCHEMA_VERSION};
use crate::io::{atomic_write, exit_code, record_file, svg, EXIT_INSUFFICIENT_DATA, EXIT_OK};
use crate::liouville::unitary_superop;
use crate::noise::{NoiseModel, NoiseSpec};
use crate::poe::{
    inequality_check, run_cross_state, run_recurrence, run_subsystem, sn_series, InequalityViolation,
    PoeRecord, RecordKind, SeriesKind, SnSeries, INEQUALITY_TOL,
};
use crate::spectral::{spectral_report, SpectralReport, OVERLAP_CUTOFF};

/// Diagnostics shared by simulated and ingested records.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Analysis {
    #[serde(skip)]
    pub series: SnSeries,
    pub fit: FitReport,
    pub shape: Option<ShapeReport>,
    pub inequality: Option<Vec<InequalityViolation>>,
    pub verdict: PoeVerdict,
}

impl Analysis {
    pub fn exit_status(&self) -> i32 {
        if self.verdict.verdict == Verdict::InsufficientData {
            EXIT_INSUFFICIENT_DATA
        } else {
            EXIT_OK
        }
    }
}

/// Series, fit, shape and positivity checks for one record.
pub fn analyze_record(rec: &PoeRecord, opts: &FitOptions) -> Result<Analysis> {
    let series = sn_series(rec)?;
    let fit = fit_exponential(&series, opts)?;
    let (shape, inequality) = if series.kind == SeriesKind::S {
        let shape = (series.len() >= 3).then(|| shape_check(&series, None)).transpose()?;
        let ineq = if series.is_exact() {
            inequality_check(&series, INEQUALITY_TOL)?
        } else {
            // sampled: negative beyond three standard deviations
            inequality_check(&series, 0.0)?
                .into_iter()
                .filter(|v| v.value < -3.0 * series.variance_at(v.n).sqrt())
                .collect()
        };
        (shape, Some(ineq))
    } else {
        (None, None)
    };
    let verdict = verdict(Some(&fit), shape.as_ref(), inequality.as_deref(), opts.alpha)?;
    Ok(Analysis {
        series,
        fit,
        shape,
        inequality,
        verdict,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SeriesTable {
    pub n: Vec<usize>,
    pub values: Vec<f64>,
    pub variances: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunReport {
    pub schema_version: u32,
    pub name: String,
    pub kind: RecordKind,
    pub series_kind: SeriesKind,
    pub n_max: usize,
    pub shots: u64,
    pub seed: Option<u64>,
    pub states: Vec<String>,
    pub circuit: Option<CircuitSpec>,
    pub noise: Option<NoiseSpec>,
    pub spectral: Option<SpectralReport>,
    pub record_values: Vec<f64>,
    pub record_variances: Vec<f64>,
    pub series: SeriesTable,
    pub diagnostics: Analysis,
}

impl RunReport {
    pub fn new(name: &str, rec: &PoeRecord, spectral: Option<SpectralReport>, analysis: Analysis) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            name: name.to_string(),
            kind: rec.kind,
            series_kind: analysis.series.kind,
            n_max: rec.n_max,
            shots: rec.shots,
            seed: rec.metadata.seed,
            states: rec.metadata.states.clone(),
            circuit: rec.metadata.circuit.clone(),
            noise: rec.metadata.noise.clone(),
            spectral,
            record_values: rec.values.clone(),
            record_variances: rec.variances.clone(),
            series: SeriesTable {
                n: analysis.series.ns().collect(),
                values: analysis.series.values.clone(),
                variances: analysis.series.variances.clone(),
            },
            diagnostics: analysis,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }
}

/// `n,S_n,ln_S_n,variance,residual_ppt` with 17 significant digits. Empty
/// cells mark an undefined log or a point outside the fit.
pub fn series_csv(analysis: &Analysis) -> Result<String> {
    let s = &analysis.series;
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["n", "S_n", "ln_S_n", "variance", "residual_ppt"])?;
    for n in s.ns() {
        let v = s.at(n);
        let ln = if v > 0.0 { format!("{:.16e}", v.ln()) } else { String::new() };
        let res = analysis
            .fit
            .residual_at(n)
            .map(|r| format!("{r:.16e}"))
            .unwrap_or_default();
        w.write_record([
            n.to_string(),
            format!("{v:.16e}"),
            ln,
            format!("{:.16e}", s.variance_at(n)),
            res,
        ])?;
    }
    let bytes = w
        .into_inner()
        .map_err(|e| PoeError::InvalidRecord(format!("csv buffer: {e}")))?;
    Ok(String::from_utf8_lossy(&bytes).into_owned())
}

/// The unitary the spectral analysis runs on: the configured circuit, with a
/// static XX miscalibration folded in.
fn effective_unitary_circuit(circuit: &CircuitSpec, noise: &NoiseSpec) -> CircuitSpec {
    match noise.model {
        NoiseModel::Miscalibration { delta_theta } => circuit.with_xx_offset(delta_theta),
        _ => circuit.clone(),
    }
}

pub fn spectral_for(exp: &ResolvedExperiment) -> Result<SpectralReport> {
    let circuit = effective_unitary_circuit(&exp.circuit, &exp.noise);
    let u = unitary_superop(&cycle_unitary(&circuit)?)?;
    let rho0 = match &exp.mode {
        ResolvedMode::Recurrence(s) => s.state.clone(),
        ResolvedMode::CrossState(a, _) => a.state.clone(),
        ResolvedMode::Subsystem(p, _) => p
            .with_mixed_ancillas(exp.circuit.n_qubits.saturating_sub(p.n_qubits))
            .state,
    };
    spectral_report(&u, &rho0, OVERLAP_CUTOFF)
}

pub fn simulate(exp: &ResolvedExperiment) -> Result<PoeRecord> {
    match &exp.mode {
        ResolvedMode::Recurrence(s) => run_recurrence(&exp.circuit, &exp.noise, s, &exp.sampling),
        ResolvedMode::CrossState(a, b) => run_cross_state(&exp.circuit, &exp.noise, a, b, &exp.sampling),
        ResolvedMode::Subsystem(p, mode) => run_subsystem(&exp.circuit, &exp.noise, p, &exp.sampling, *mode),
    }
}

/// Default window `[max(n_star, 1), n_max]`, pulled in so at least three
/// points remain.
pub fn default_window(spectral: Option<&SpectralReport>, n_max: usize) -> [usize; 2] {
    let n_star = spectral.map(|r| r.n_star_cycles()).unwrap_or(0);
    [n_star.max(1).min(n_max.saturating_sub(2).max(1)), n_max]
}

/// Everything a run produces, before anything touches the disk.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub name: String,
    pub record: PoeRecord,
    pub report: RunReport,
    pub files: Vec<(PathBuf, String)>,
    pub warnings: Vec<String>,
}

impl RunOutcome {
    pub fn analysis(&self) -> &Analysis {
        &self.report.diagnostics
    }

    pub fn exit_status(&self) -> i32 {
        self.analysis().exit_status()
    }

    pub fn summary_line(&self) -> String {
        let fit = &self.analysis().fit;
        format!(
            "{}: {} (slope {}, max |residual| {} ppt{})",
            self.name,
            self.analysis().verdict.verdict.as_str(),
            fit.slope.map(|s| format!("{s:.6}")).unwrap_or_else(|| "n/a".into()),
            fit.max_abs_residual_ppt
                .map(|r| format!("{r:.3e}"))
                .unwrap_or_else(|| "n/a".into()),
            fit.p_value.map(|p| format!(", p = {p:.3e}")).unwrap_or_default()
        )
    }

    /// Writes every rendered file atomically.
    pub fn emit(&self) -> Result<()> {
        for (path, content) in &self.files {
            atomic_write(path, content.as_bytes())?;
        }
        Ok(())
    }
}

/// Output paths with their contents.
type RenderedFiles = Vec<(PathBuf, String)>;

fn render_outputs(
    name: &str,
    outputs: &[crate::io::config::OutputSpec],
    rec: &PoeRecord,
    report: &RunReport,
) -> Result<(RenderedFiles, Vec<String>)> {
    let analysis = &report.diagnostics;
    let mut files = Vec::new();
    let mut warnings = Vec::new();
    for out in outputs {
        let content = match out.kind {
            OutputKind::Csv => Some(series_csv(analysis)?),
            OutputKind::Json => Some(report.to_json()?),
            OutputKind::Record => Some(record_file::to_record_string(rec)?),
            OutputKind::Svg => svg::log_series_plot(name, &analysis.series, &analysis.fit),
            OutputKind::ResidualSvg => svg::residual_plot(name, &analysis.fit),
        };
        match content {
            Some(c) => files.push((out.path.clone(), c)),
            None => warnings.push(format!(
                "warning: nothing to plot for {}, {} not written",
                name,
                out.path.display()
            )),
        }
    }
    Ok((files, warnings))
}

/// Runs one resolved experiment in memory.
pub fn run_experiment(exp: &ResolvedExperiment) -> Result<RunOutcome> {
    let record = simulate(exp)?;
    let spectral = if exp.sampling.is_exact() {
        Some(spectral_for(exp)?)
    } else {
        None
    };
    let opts = FitOptions {
        window: Some(
            exp.fit
                .window
                .unwrap_or_else(|| default_window(spectral.as_ref(), exp.sampling.n_max)),
        ),
        alpha: exp.fit.alpha,
        residual_units: exp.fit.residual_units,
        exact_residual_tol_ppt: exp.fit.exact_residual_tol_ppt,
    };
    let analysis = analyze_record(&record, &opts)?;
    let report = RunReport::new(&exp.name, &record, spectral, analysis);
    let (files, warnings) = render_outputs(&exp.name, &exp.outputs, &record, &report)?;
    Ok(RunOutcome {
        name: exp.name.clone(),
        record,
        report,
        files,
        warnings,
    })
}

/// Loads, runs and emits a config file.
pub fn run_config(path: &Path) -> Result<RunOutcome> {
    let exp = ExperimentConfig::load(path)?.resolve()?;
    let outcome = run_experiment(&exp)?;
    outcome.emit()?;
    Ok(outcome)
}

/// Analyzes an ingested record with the same diagnostics as simulated data.
pub fn analyze_file(path: &Path, opts: &FitOptions) -> Result<(PoeRecord, RunReport)> {
    let rec = record_file::ingest(path)?;
    let mut opts = *opts;
    if opts.window.is_none() {
        opts.window = Some(default_window(None, rec.n_max));
    }
    let analysis = analyze_record(&rec, &opts)?;
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "record".into());
    let report = RunReport::new(&name, &rec, None, analysis);
    Ok((rec, report))
}

/// Writes the standard analysis files for a report into `dir`.
pub fn write_report_files(dir: &Path, report: &RunReport) -> Result<Vec<String>> {
    let a = &report.diagnostics;
    atomic_write(&dir.join("series.csv"), series_csv(a)?.as_bytes())?;
    atomic_write(&dir.join("report.json"), report.to_json()?.as_bytes())?;
    let mut warnings = Vec::new();
    for (file, svg) in [
        ("log_series.svg", svg::log_series_plot(&report.name, &a.series, &a.fit)),
        ("residuals.svg", svg::residual_plot(&report.name, &a.fit)),
    ] {
        match svg {
            Some(s) => atomic_write(&dir.join(file), s.as_bytes())?,
            None => warnings.push(format!("warning: nothing to plot, {file} not written")),
        }
    }
    Ok(warnings)
}

#[derive(Debug)]
pub struct SweepOutcome {
    pub runs: Vec<std::result::Result<RunOutcome, (String, PoeError)>>,
    pub summary_path: PathBuf,
    pub overlay_path: Option<PathBuf>,
}

impl SweepOutcome {
    /// Worst status over all runs.
    pub fn exit_status(&self) -> i32 {
        self.runs
            .iter()
            .map(|r| match r {
                Ok(o) => o.exit_status(),
                Err((_, e)) => exit_code(e),
            })
            .max()
            .unwrap_or(EXIT_OK)
    }
}

/// Runs every `*.json` config in `dir` in parallel; writes `sweep_summary.csv`
/// and a residual overlay `sweep_residuals.svg` next to them. Every config is
/// parsed and checked before any run starts.
pub fn sweep(dir: &Path) -> Result<SweepOutcome> {
    let mut paths: Vec<PathBuf> = std::fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    paths.sort();
    if paths.is_empty() {
        return Err(PoeError::InvalidArgument(format!("no *.json configs in {}", dir.display())));
    }
    let exps = paths
        .iter()
        .map(|p| ExperimentConfig::load(p)?.resolve())
        .collect::<Result<Vec<_>>>()?;
    let runs: Vec<_> = exps
        .par_iter()
        .map(|exp| {
            run_experiment(exp)
                .and_then(|o| o.emit().map(|_| o))
                .map_err(|e| (exp.name.clone(), e))
        })
        .collect();

    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["name", "verdict", "slope", "intercept", "max_abs_residual_ppt", "p_value", "error"])?;
    let opt = |v: Option<f64>| v.map(|x| format!("{x:.16e}")).unwrap_or_default();
    for run in &runs {
        match run {
            Ok(o) => {
                let f = &o.analysis().fit;
                w.write_record([
                    o.name.clone(),
                    o.analysis().verdict.verdict.as_str().to_string(),
                    opt(f.slope),
                    opt(f.intercept),
                    opt(f.max_abs_residual_ppt),
                    opt(f.p_value),
                    String::new(),
                ])?;
            }
            Err((name, e)) => {
                w.write_record([name.clone(), String::new(), String::new(), String::new(), String::new(), String::new(), e.to_string()])?;
            }
        }
    }
    let bytes = w
        .into_inner()
        .map_err(|e| PoeError::InvalidRecord(format!("csv buffer: {e}")))?;
    let summary_path = dir.join("sweep_summary.csv");
    atomic_write(&summary_path, &bytes)?;

    let overlay: Vec<(String, FitReport)> = runs
        .iter()
        .filter_map(|r| r.as_ref().ok())
        .map(|o| (o.name.clone(), o.analysis().fit.clone()))
        .collect();
    let overlay_path = match svg::overlay_plot("fit residuals", &overlay) {
        Some(s) => {
            let p = dir.join("sweep_residuals.svg");
            atomic_write(&p, s.as_bytes())?;
            Some(p)
        }
        None => None,
    };
    Ok(SweepOutcome {
        runs,
        summary_path,
        overlay_path,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn paper_exp(noise: &str, shots: u64) -> ResolvedExperiment {
        let text = format!(
            r#"{{"schema_version": 1, "circuit": {{"preset": "paper"}}, "initial_state": "00",
                "noise": {noise}, "n_max": 35, "shots": {shots}, "seed": 11}}"#
        );
        ExperimentConfig::from_json(&text).unwrap().resolve().unwrap()
    }

    #[test]
    fn noiseless_paper_run_is_consistent() {
        let o = run_experiment(&paper_exp(r#"{"type": "none"}"#, 0)).unwrap();
        assert_eq!(o.analysis().verdict.verdict, Verdict::ConsistentWithPoe);
        assert!(o.report.spectral.is_some());
        let csv = series_csv(o.analysis()).unwrap();
        assert!(csv.starts_with("n,S_n,ln_S_n,variance,residual_ppt\n"));
        assert_eq!(csv.lines().count(), 36);
    }

    #[test]
    fn damped_paper_run_is_detected() {
        let o = run_experiment(&paper_exp(r#"{"type": "amplitude_damping", "t1_in_cycles": 5}"#, 0)).unwrap();
        assert_eq!(o.analysis().verdict.verdict, Verdict::PoeSensitiveErrorDetected);
    }

    #[test]
    fn sampled_run_has_no_spectral_section() {
        let o = run_experiment(&paper_exp(r#"{"type": "none"}"#, 1000)).unwrap();
        assert!(o.report.spectral.is_none());
        assert!(o.analysis().fit.p_value.is_some());
    }

    #[test]
    fn default_window_respects_n_star() {
        assert_eq!(default_window(None, 35), [1, 35]);
    }
}
