//! Experiment orchestration: baseline methods, paired Monte Carlo sweeps
//! over SNR / surface size / path count / quantization bits, metric
//! aggregation and CSV emission.
//!
//! Within a sweep cell every method consumes the identical channel
//! realization and CSI draw; scenario seeds depend only on the channel-shaping
//! coordinates (surface size, path count, realization index), so cells that
//! differ in SNR or quantization stay paired as well.

use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use serde::Deserialize;

use crate::channel::gen_scenario;
use crate::config::{ConfigFile, SystemConfig};
use crate::csi::{sample_csi_statistical, CsiEstimate};
use crate::error::{Error, Result};
use crate::linalg::derive_seed;
use crate::model::ChannelSet;
use crate::optimizer::{
    alternating_minimize_with, design_without_irs, random_phases, requantize_and_redesign,
    AltMinOptions, PgSettings, RunTrace,
};
use crate::transceiver::{downlink_mse_true_total, sum_rate, TransceiverState};

/// Stream tags for deriving independent random streams from one seed.
mod stream {
    pub const CHANNEL: u64 = 1;
    pub const CSI: u64 = 2;
    pub const INIT: u64 = 3;
}

/// The transceiver design strategies compared in the experiments.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    /// Alternating MSE minimization with projected-gradient phase updates.
    ProposedPg,
    /// Same loop with the amplitude-free surface normalization.
    AfOps,
    /// Duality-optimized precoders, random fixed phases.
    RIrsOps,
    /// MRT precoders, phases optimized by projected gradient.
    OIrsMrt,
    /// MRT precoders and MMSE filters without a surface.
    NoIrsMrt,
    /// Alternating minimization that ignores the error statistics.
    ProposedNonrobust,
    /// Alternating minimization fed with perfect CSI.
    ProposedPerfect,
}

impl Method {
    pub const ALL: [Method; 7] = [
        Method::ProposedPg,
        Method::AfOps,
        Method::RIrsOps,
        Method::OIrsMrt,
        Method::NoIrsMrt,
        Method::ProposedNonrobust,
        Method::ProposedPerfect,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Method::ProposedPg => "proposed_pg",
            Method::AfOps => "af_ops",
            Method::RIrsOps => "r_irs_ops",
            Method::OIrsMrt => "o_irs_mrt",
            Method::NoIrsMrt => "no_irs_mrt",
            Method::ProposedNonrobust => "proposed_nonrobust",
            Method::ProposedPerfect => "proposed_perfect",
        }
    }

    pub fn parse(name: &str) -> Result<Method> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == name)
            .ok_or_else(|| Error::config(format!("unknown method: {name}")))
    }

    /// Whether the method produces a unit-modulus phase vector that can be
    /// quantized afterwards.
    pub fn quantizable(&self) -> bool {
        !matches!(self, Method::AfOps | Method::NoIrsMrt)
    }
}

/// One sweep coordinate. `bits = 0` denotes continuous phases.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cell {
    pub snr_db: f64,
    pub n_irs: usize,
    pub n_path_i: usize,
    pub bits: u32,
}

/// One measured run: method, cell, realization and metrics.
#[derive(Debug, Clone)]
pub struct MetricRow {
    pub method: Method,
    pub snr_db: f64,
    pub n_irs: usize,
    pub n_path_i: usize,
    pub bits: u32,
    pub realization: usize,
    pub sum_rate: f64,
    pub avg_mse: f64,
    pub iterations: usize,
    pub wall_ms: f64,
}

/// Sweep description: base scenario, axes, methods and realization count.
#[derive(Debug, Clone)]
pub struct ExperimentSpec {
    pub base: SystemConfig,
    pub snr_db_list: Vec<f64>,
    pub n_irs_list: Vec<usize>,
    pub n_path_i_list: Vec<usize>,
    pub bits_list: Vec<u32>,
    pub methods: Vec<Method>,
    pub realizations: usize,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ExperimentFile {
    base: ConfigFile,
    #[serde(default)]
    snr_db_list: Option<Vec<f64>>,
    #[serde(default)]
    n_irs_list: Option<Vec<usize>>,
    #[serde(default)]
    n_path_i_list: Option<Vec<usize>>,
    #[serde(default)]
    bits_list: Option<Vec<u32>>,
    methods: Vec<String>,
    realizations: usize,
}

impl ExperimentSpec {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let raw: ExperimentFile =
            toml::from_str(text).map_err(|e| Error::config(format!("spec parse: {e}")))?;
        let base = raw.base.into_config()?;
        let methods = raw
            .methods
            .iter()
            .map(|m| Method::parse(m))
            .collect::<Result<Vec<_>>>()?;
        let spec = ExperimentSpec {
            snr_db_list: raw.snr_db_list.unwrap_or_else(|| vec![base.snr_db]),
            n_irs_list: raw.n_irs_list.unwrap_or_else(|| vec![base.num_irs_elements]),
            n_path_i_list: raw
                .n_path_i_list
                .unwrap_or_else(|| vec![base.paths_irs_user]),
            bits_list: raw.bits_list.unwrap_or_else(|| vec![0]),
            methods,
            realizations: raw.realizations,
            base,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text)
    }

    pub fn validate(&self) -> Result<()> {
        if self.methods.is_empty() {
            return Err(Error::config("at least one method is required"));
        }
        if self.realizations == 0 {
            return Err(Error::config("realizations must be at least 1"));
        }
        if self.snr_db_list.is_empty()
            || self.n_irs_list.is_empty()
            || self.n_path_i_list.is_empty()
            || self.bits_list.is_empty()
        {
            return Err(Error::config("every sweep axis needs at least one point"));
        }
        for &bits in &self.bits_list {
            if bits > 16 {
                return Err(Error::config("quantization_bits above 16 is not supported"));
            }
        }
        for cell in self.cells() {
            self.config_for(&cell)?.validate()?;
        }
        Ok(())
    }

    /// Cells in emission order: SNR, then surface size, then path count,
    /// then bits.
    pub fn cells(&self) -> Vec<Cell> {
        let mut out = Vec::new();
        for &snr_db in &self.snr_db_list {
            for &n_irs in &self.n_irs_list {
                for &n_path_i in &self.n_path_i_list {
                    for &bits in &self.bits_list {
                        out.push(Cell { snr_db, n_irs, n_path_i, bits });
                    }
                }
            }
        }
        out
    }

    /// Scenario configuration for one cell.
    pub fn config_for(&self, cell: &Cell) -> Result<SystemConfig> {
        let mut cfg = self.base.clone();
        cfg.num_irs_elements = cell.n_irs;
        cfg.paths_irs_user = cell.n_path_i;
        cfg.set_snr_db(cell.snr_db);
        cfg.quantization_bits = if cell.bits > 0 { Some(cell.bits) } else { None };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Seed of the channel/CSI draws for one realization. Depends only on
    /// the channel-shaping coordinates, so cells differing in SNR or bits
    /// stay paired.
    pub fn scenario_seed(&self, cell: &Cell, realization: usize) -> u64 {
        derive_seed(
            self.base.rng_seed,
            &[cell.n_irs as u64, cell.n_path_i as u64, realization as u64],
        )
    }
}

fn stream_rng(seed: u64, tag: u64) -> ChaCha12Rng {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    rng.set_stream(tag);
    rng
}

/// Channel realization and CSI estimate shared by every method of one
/// `(cell, realization)` pair.
pub fn draw_inputs(
    cfg: &SystemConfig,
    seed: u64,
) -> Result<(ChannelSet, CsiEstimate)> {
    let mut channel_rng = stream_rng(seed, stream::CHANNEL);
    let scenario = gen_scenario(cfg, &mut channel_rng)?;
    let mut csi_rng = stream_rng(seed, stream::CSI);
    let csi = sample_csi_statistical(&scenario, cfg, &mut csi_rng);
    Ok((scenario, csi))
}

/// Outcome of one method run, before aggregation.
pub struct MethodOutcome {
    pub row: MetricRow,
    pub state: TransceiverState,
    pub trace: RunTrace,
}

#[allow(clippy::too_many_arguments)]
fn evaluate(
    method: Method,
    cell: &Cell,
    realization: usize,
    scenario: &ChannelSet,
    cfg: &SystemConfig,
    state: TransceiverState,
    trace: RunTrace,
    deterministic: bool,
) -> MethodOutcome {
    let (rate_total, _regularized) =
        sum_rate(scenario, &state.precoders, &state.filters, &state.nu, cfg);
    // spectral efficiency in bit/s/Hz: the OFDM band is split into L
    // subcarriers, so the per-subcarrier rates average rather than add
    let rate = rate_total / cfg.num_subcarriers as f64;
    let mse = downlink_mse_true_total(scenario, &state.precoders, &state.filters, &state.nu, cfg)
        / cfg.num_users as f64;
    let wall_ms = if deterministic {
        0.0
    } else {
        trace.wall.as_secs_f64() * 1e3
    };
    let row = MetricRow {
        method,
        snr_db: cell.snr_db,
        n_irs: cell.n_irs,
        n_path_i: cell.n_path_i,
        bits: cell.bits,
        realization,
        sum_rate: rate,
        avg_mse: mse,
        iterations: trace.iterations,
        wall_ms,
    };
    MethodOutcome { row, state, trace }
}

/// Run one method on a shared scenario/CSI pair and evaluate its metrics on
/// the true channels. The phase initialization is drawn from `seed`'s
/// initialization stream, identically across methods.
#[allow(clippy::too_many_arguments)]
pub fn run_method(
    method: Method,
    scenario: &ChannelSet,
    csi: &CsiEstimate,
    cfg: &SystemConfig,
    cell: &Cell,
    realization: usize,
    seed: u64,
    deterministic: bool,
) -> Result<MethodOutcome> {
    let settings = PgSettings::from_config(cfg);
    let mut init_rng = stream_rng(seed, stream::INIT);
    let nu0 = random_phases(cfg.num_irs_elements, &mut init_rng);
    let robust = csi.noisy;
    let (state, trace) = match method {
        Method::ProposedPg => {
            alternating_minimize_with(csi, cfg, &settings, AltMinOptions::proposed(robust), nu0)?
        }
        Method::AfOps => alternating_minimize_with(
            csi,
            cfg,
            &settings,
            AltMinOptions::amplitude_free(robust),
            nu0,
        )?,
        Method::RIrsOps => alternating_minimize_with(
            csi,
            cfg,
            &settings,
            AltMinOptions::fixed_phases(robust),
            nu0,
        )?,
        Method::OIrsMrt => alternating_minimize_with(
            csi,
            cfg,
            &settings,
            AltMinOptions::mrt_with_phase_optimization(robust),
            nu0,
        )?,
        Method::NoIrsMrt => design_without_irs(csi, cfg, robust)?,
        Method::ProposedNonrobust => {
            alternating_minimize_with(csi, cfg, &settings, AltMinOptions::proposed(false), nu0)?
        }
        Method::ProposedPerfect => {
            let perfect = CsiEstimate::perfect(scenario, cfg);
            alternating_minimize_with(&perfect, cfg, &settings, AltMinOptions::proposed(false), nu0)?
        }
    };
    let mut outcome = evaluate(
        method,
        cell,
        realization,
        scenario,
        cfg,
        state,
        trace,
        deterministic,
    );

    // quantization post-pass: snap the optimized phases to the grid and
    // re-derive precoders and filters for the quantized surface
    if cell.bits > 0 && method.quantizable() && cfg.num_irs_elements > 0 {
        let robust_redesign = match method {
            Method::ProposedNonrobust | Method::ProposedPerfect => false,
            _ => robust,
        };
        let redesign_csi;
        let csi_ref = if method == Method::ProposedPerfect {
            redesign_csi = CsiEstimate::perfect(scenario, cfg);
            &redesign_csi
        } else {
            csi
        };
        let (state, trace) = requantize_and_redesign(
            &outcome.state,
            cell.bits,
            csi_ref,
            cfg,
            &settings,
            robust_redesign,
        )?;
        outcome = evaluate(
            method,
            cell,
            realization,
            scenario,
            cfg,
            state,
            trace,
            deterministic,
        );
    }
    Ok(outcome)
}

/// Per-cell aggregate of one metric.
#[derive(Debug, Clone)]
pub struct SummaryRow {
    pub method: Method,
    pub snr_db: f64,
    pub n_irs: usize,
    pub n_path_i: usize,
    pub bits: u32,
    pub realizations: usize,
    pub sum_rate_mean: f64,
    pub sum_rate_se: f64,
    pub avg_mse_mean: f64,
    pub avg_mse_se: f64,
}

/// Mean and standard error of a sample.
pub fn mean_and_se(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if n < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}

/// Aggregate raw rows into per-cell summaries, preserving emission order.
pub fn summarize(rows: &[MetricRow]) -> Vec<SummaryRow> {
    let mut order: Vec<(Method, u64, usize, usize, u32)> = Vec::new();
    let mut groups: std::collections::HashMap<(Method, u64, usize, usize, u32), Vec<&MetricRow>> =
        std::collections::HashMap::new();
    for row in rows {
        let key = (
            row.method,
            row.snr_db.to_bits(),
            row.n_irs,
            row.n_path_i,
            row.bits,
        );
        let entry = groups.entry(key).or_default();
        if entry.is_empty() {
            order.push(key);
        }
        entry.push(row);
    }
    order
        .into_iter()
        .map(|key| {
            let group = &groups[&key];
            let rates: Vec<f64> = group.iter().map(|r| r.sum_rate).collect();
            let mses: Vec<f64> = group.iter().map(|r| r.avg_mse).collect();
            let (rate_mean, rate_se) = mean_and_se(&rates);
            let (mse_mean, mse_se) = mean_and_se(&mses);
            SummaryRow {
                method: key.0,
                snr_db: f64::from_bits(key.1),
                n_irs: key.2,
                n_path_i: key.3,
                bits: key.4,
                realizations: group.len(),
                sum_rate_mean: rate_mean,
                sum_rate_se: rate_se,
                avg_mse_mean: mse_mean,
                avg_mse_se: mse_se,
            }
        })
        .collect()
}

fn cell_rows<'a>(
    rows: &'a [MetricRow],
    method: Method,
    cell: &Cell,
) -> Vec<&'a MetricRow> {
    rows.iter()
        .filter(|r| {
            r.method == method
                && r.snr_db == cell.snr_db
                && r.n_irs == cell.n_irs
                && r.n_path_i == cell.n_path_i
                && r.bits == cell.bits
        })
        .collect()
}

fn paired_mean_difference(
    rows: &[MetricRow],
    minuend: Method,
    subtrahend: Method,
    cell: &Cell,
) -> Result<f64> {
    let a = cell_rows(rows, minuend, cell);
    let b = cell_rows(rows, subtrahend, cell);
    if a.is_empty() || b.is_empty() {
        return Err(Error::Report(format!(
            "cell snr={} N={} paths={} bits={} lacks {} or {} rows",
            cell.snr_db,
            cell.n_irs,
            cell.n_path_i,
            cell.bits,
            minuend.name(),
            subtrahend.name()
        )));
    }
    let mut by_real: std::collections::HashMap<usize, f64> =
        a.iter().map(|r| (r.realization, r.sum_rate)).collect();
    let mut diffs = Vec::with_capacity(b.len());
    for r in b {
        if let Some(rate) = by_real.remove(&r.realization) {
            diffs.push(rate - r.sum_rate);
        }
    }
    if diffs.is_empty() {
        return Err(Error::Report("no paired realizations in cell".into()));
    }
    Ok(diffs.iter().sum::<f64>() / diffs.len() as f64)
}

/// Mean sum-rate increase of the proposed design over random phases for one
/// cell (paired).
pub fn delta_r(rows: &[MetricRow], cell: &Cell) -> Result<f64> {
    paired_mean_difference(rows, Method::ProposedPg, Method::RIrsOps, cell)
}

/// Mean sum-rate gain of the proposed design over the surface-less MRT
/// baseline for one cell (paired).
pub fn g_irs(rows: &[MetricRow], cell: &Cell) -> Result<f64> {
    paired_mean_difference(rows, Method::ProposedPg, Method::NoIrsMrt, cell)
}

/// Execution options for [`monte_carlo`].
#[derive(Debug, Clone)]
pub struct RunOptions {
    pub out_dir: PathBuf,
    pub deterministic: bool,
    pub threads: Option<usize>,
}

/// Output of a Monte Carlo sweep.
pub struct MonteCarloOutput {
    pub rows: Vec<MetricRow>,
    pub summary: Vec<SummaryRow>,
    pub results_path: PathBuf,
    pub summary_path: PathBuf,
}

/// Run every `(cell, realization, method)` combination of the spec, in a
/// paired design, and emit `results.csv` plus `summary.csv`.
///
/// Rows are merged in deterministic order regardless of scheduling; under
/// `deterministic` the output bytes depend only on the spec.
pub fn monte_carlo(spec: &ExperimentSpec, opts: &RunOptions) -> Result<MonteCarloOutput> {
    spec.validate()?;
    let cells = spec.cells();
    let mut jobs: Vec<(Cell, usize)> = Vec::with_capacity(cells.len() * spec.realizations);
    for cell in &cells {
        for r in 0..spec.realizations {
            jobs.push((*cell, r));
        }
    }

    let work = |(cell, realization): &(Cell, usize)| -> Result<Vec<MetricRow>> {
        let cfg = spec.config_for(cell)?;
        let seed = spec.scenario_seed(cell, *realization);
        let (scenario, csi) = draw_inputs(&cfg, seed)?;
        let mut rows = Vec::with_capacity(spec.methods.len());
        for &method in &spec.methods {
            let outcome = run_method(
                method,
                &scenario,
                &csi,
                &cfg,
                cell,
                *realization,
                seed,
                opts.deterministic,
            )?;
            rows.push(outcome.row);
        }
        Ok(rows)
    };

    let nested: Vec<Result<Vec<MetricRow>>> = match opts.threads {
        Some(1) => jobs.iter().map(work).collect(),
        threads => {
            use rayon::prelude::*;
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(threads.unwrap_or(0))
                .build()
                .map_err(|e| Error::config(format!("thread pool: {e}")))?;
            pool.install(|| jobs.par_iter().map(work).collect())
        }
    };
    let mut rows = Vec::with_capacity(jobs.len() * spec.methods.len());
    for r in nested {
        rows.extend(r?);
    }
    let summary = summarize(&rows);

    std::fs::create_dir_all(&opts.out_dir).map_err(|e| Error::io(&opts.out_dir, e))?;
    let results_path = opts.out_dir.join("results.csv");
    let summary_path = opts.out_dir.join("summary.csv");
    write_results_csv(&rows, &results_path, opts.deterministic)?;
    write_summary_csv(&summary, &summary_path, opts.deterministic)?;
    Ok(MonteCarloOutput { rows, summary, results_path, summary_path })
}

/// Floats are serialized with 17 significant digits so that parsing them
/// back is exact.
fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn timestamp_header(deterministic: bool) -> String {
    if deterministic {
        String::new()
    } else {
        let now = std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_millis())
            .unwrap_or(0);
        format!("# generated_unix_ms {now}\n")
    }
}

pub fn write_results_csv(rows: &[MetricRow], path: &Path, deterministic: bool) -> Result<()> {
    let mut buf = timestamp_header(deterministic);
    buf.push_str("method,snr_db,n_irs,n_path_i,bits,realization,sum_rate,avg_mse,iterations,wall_ms\n");
    for r in rows {
        buf.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{}\n",
            r.method.name(),
            fmt_f64(r.snr_db),
            r.n_irs,
            r.n_path_i,
            r.bits,
            r.realization,
            fmt_f64(r.sum_rate),
            fmt_f64(r.avg_mse),
            r.iterations,
            fmt_f64(r.wall_ms),
        ));
    }
    std::fs::write(path, buf).map_err(|e| Error::io(path, e))
}

pub fn write_summary_csv(rows: &[SummaryRow], path: &Path, deterministic: bool) -> Result<()> {
    let mut buf = timestamp_header(deterministic);
    buf.push_str(
        "method,snr_db,n_irs,n_path_i,bits,realizations,sum_rate_mean,sum_rate_se,avg_mse_mean,avg_mse_se\n",
    );
    for r in rows {
        buf.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{}\n",
            r.method.name(),
            fmt_f64(r.snr_db),
            r.n_irs,
            r.n_path_i,
            r.bits,
            r.realizations,
            fmt_f64(r.sum_rate_mean),
            fmt_f64(r.sum_rate_se),
            fmt_f64(r.avg_mse_mean),
            fmt_f64(r.avg_mse_se),
        ));
    }
    std::fs::write(path, buf).map_err(|e| Error::io(path, e))
}

/// Write one optimizer trace as CSV (iteration, mse_ul, step, halvings).
pub fn write_trace_csv(trace: &RunTrace, path: &Path) -> Result<()> {
    let mut buf = String::from("iteration,mse_ul,step,halvings\n");
    for row in &trace.rows {
        buf.push_str(&format!(
            "{},{},{},{}\n",
            row.iteration,
            fmt_f64(row.mse_ul),
            fmt_f64(row.step),
            row.halvings
        ));
    }
    std::fs::write(path, buf).map_err(|e| Error::io(path, e))
}

/// Parse a results CSV produced by [`write_results_csv`] (used for
/// reproducibility checks).
pub fn read_results_csv(path: &Path) -> Result<Vec<MetricRow>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let fail = |line: &str| Error::config(format!("malformed results row: {line}"));
    let mut rows = Vec::new();
    for line in text.lines() {
        if line.starts_with('#') || line.starts_with("method,") || line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 10 {
            return Err(fail(line));
        }
        rows.push(MetricRow {
            method: Method::parse(fields[0])?,
            snr_db: fields[1].parse().map_err(|_| fail(line))?,
            n_irs: fields[2].parse().map_err(|_| fail(line))?,
            n_path_i: fields[3].parse().map_err(|_| fail(line))?,
            bits: fields[4].parse().map_err(|_| fail(line))?,
            realization: fields[5].parse().map_err(|_| fail(line))?,
            sum_rate: fields[6].parse().map_err(|_| fail(line))?,
            avg_mse: fields[7].parse().map_err(|_| fail(line))?,
            iterations: fields[8].parse().map_err(|_| fail(line))?,
            wall_ms: fields[9].parse().map_err(|_| fail(line))?,
        });
    }
    Ok(rows)
}

/// Run a single realization of one method and export its iteration trace.
pub fn run_trace(
    cfg: &SystemConfig,
    method: Method,
    out_dir: &Path,
) -> Result<(MethodOutcome, PathBuf)> {
    cfg.validate()?;
    let cell = Cell {
        snr_db: cfg.snr_db,
        n_irs: cfg.num_irs_elements,
        n_path_i: cfg.paths_irs_user,
        bits: cfg.quantization_bits.unwrap_or(0),
    };
    let seed = derive_seed(cfg.rng_seed, &[cell.n_irs as u64, cell.n_path_i as u64, 0]);
    let (scenario, csi) = draw_inputs(cfg, seed)?;
    let outcome = run_method(method, &scenario, &csi, cfg, &cell, 0, seed, false)?;
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let trace_path = out_dir.join("trace.csv");
    write_trace_csv(&outcome.trace, &trace_path)?;
    Ok((outcome, trace_path))
}
