//! Monte-Carlo error-variance harness.
//!
//! Runs a filter bank over a grid of signal-to-noise ratios, comparing
//! the variance of the streaming estimate against the small-noise
//! prediction. Each trial draws a fresh phase offset and noise
//! realization, feeds the tandem tracker, and pools squared errors over
//! the late analysis window where transients have died out.

use crate::analysis::{expected_variance_db, noise_gain, AnalysisError, Filter};
use crate::realize::{RealizeError, Tracker, UnwrapSource};
use crate::signal::{
    angles, conjugate_product_angles, synthesize_with, triplet_to_spec, FrequencyTriplet,
    NoiseMode, PhaseSignalSpec, SignalError,
};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use std::f64::consts::TAU;
use thiserror::Error;

/// Default margin (dB) between observed and analytical variance that
/// counts as failure when estimating the breakdown threshold.
pub const DEFAULT_MARGIN_DB: f64 = 3.0;

#[derive(Debug, Error)]
pub enum McError {
    #[error("pre-differentiator count must be 0 or 1, got {0}")]
    BadAlpha(usize),
    #[error("aft-differentiator count must be at most 8, got {0}")]
    BadBeta(usize),
    #[error("trial count must be at least 1")]
    BadTrials,
    #[error("analysis window start must lie in [0, 1), got {0}")]
    BadWindow(f64),
    #[error("snr sweep must be nonempty and free of NaN")]
    BadSweep,
    #[error("filter bank is empty")]
    EmptyBank,
    #[error("bank entry {0}: estimator and predictor must be the same kind")]
    MixedPair(String),
    #[error("analysis window leaves no samples")]
    EmptyWindowedRecord,
    #[error(transparent)]
    Signal(#[from] SignalError),
    #[error(transparent)]
    Realize(#[from] RealizeError),
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
}

/// Differentiator placement around the tracking filter.
///
/// `alpha` two-point stages act on the complex signal before angle
/// extraction (realized as delayed-conjugate-product angles), `beta`
/// backward differences act on the estimator output. Their sum is the
/// colouring order the noise actually acquires.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SystemConfig {
    pub alpha: usize,
    pub beta: usize,
}

impl SystemConfig {
    pub fn new(alpha: usize, beta: usize) -> Self {
        Self { alpha, beta }
    }

    /// Colouring order present in the simulated chain.
    pub fn chain_order(&self) -> usize {
        self.alpha + self.beta
    }

    /// True when the aligned reference is a frequency, not a phase.
    pub fn tracks_frequency(&self) -> bool {
        self.chain_order() >= 1
    }
}

/// One estimator/predictor pair under test.
#[derive(Clone, Debug)]
pub struct BankEntry {
    pub id: String,
    pub estimator: Filter,
    pub predictor: Filter,
}

/// Full description of one simulation run.
#[derive(Clone, Debug)]
pub struct Scenario {
    pub triplet: FrequencyTriplet,
    pub n_samples: usize,
    pub config: SystemConfig,
    pub filters: Vec<BankEntry>,
    pub snr_db: Vec<f64>,
    pub trials: usize,
    pub noise_mode: NoiseMode,
    pub seed: u64,
    /// Fraction of the record skipped before errors are collected.
    pub window_start: f64,
    pub unwrap_from: UnwrapSource,
}

impl Scenario {
    /// Scenario with the standard protocol defaults: 1000 samples, SNR
    /// 0..=20 dB in 1 dB steps, 1000 trials, circular complex noise,
    /// predictor-driven unwrapping, analysis window from one eighth of
    /// the record.
    pub fn new(triplet: FrequencyTriplet, config: SystemConfig) -> Self {
        Self {
            triplet,
            n_samples: 1000,
            config,
            filters: Vec::new(),
            snr_db: (0..=20).map(f64::from).collect(),
            trials: 1000,
            noise_mode: NoiseMode::ComplexGaussian,
            seed: 0,
            window_start: 0.125,
            unwrap_from: UnwrapSource::Predictor,
        }
    }

    /// Check protocol bounds before running.
    pub fn validate(&self) -> Result<(), McError> {
        if self.config.alpha > 1 {
            return Err(McError::BadAlpha(self.config.alpha));
        }
        if self.config.beta > 8 {
            return Err(McError::BadBeta(self.config.beta));
        }
        if self.trials == 0 {
            return Err(McError::BadTrials);
        }
        if !(0.0..1.0).contains(&self.window_start) {
            return Err(McError::BadWindow(self.window_start));
        }
        if self.snr_db.is_empty() || self.snr_db.iter().any(|v| v.is_nan()) {
            return Err(McError::BadSweep);
        }
        if self.filters.is_empty() {
            return Err(McError::EmptyBank);
        }
        Ok(())
    }
}

/// Aggregated outcome for one (filter, SNR) cell.
#[derive(Clone, Debug, PartialEq)]
pub struct SnrRow {
    pub filter_id: String,
    pub snr_db: f64,
    pub var_sim_db: f64,
    pub var_ana_db: f64,
    pub trials: usize,
    pub unwrap_corrections: u64,
    pub divergent_trials: usize,
}

/// All rows of a finished scenario, bank-major then SNR-major.
#[derive(Clone, Debug, PartialEq)]
pub struct ScenarioResult {
    pub rows: Vec<SnrRow>,
}

#[derive(Clone, Copy, Default)]
struct CellAgg {
    sum_sq: f64,
    count: usize,
    corrections: u64,
    divergent: bool,
}

/// Order-stable compensated sum.
fn neumaier_sum(values: impl Iterator<Item = f64>) -> f64 {
    let mut sum = 0.0;
    let mut comp = 0.0;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

struct TrialSetup<'a> {
    scenario: &'a Scenario,
    base: &'a PhaseSignalSpec,
    trackers: &'a [Tracker],
    qs: &'a [f64],
    variance: f64,
    snr_index: usize,
    window_first: usize,
}

fn run_one_trial(setup: &TrialSetup<'_>, trial: usize) -> Result<Vec<CellAgg>, McError> {
    let sc = setup.scenario;
    let alpha = sc.config.alpha;
    let beta = sc.config.beta;
    let idx = (setup.snr_index * sc.trials + trial) as u64;
    let mut rng = ChaCha8Rng::seed_from_u64(sc.seed.wrapping_add(idx));
    let theta0 = rng.gen_range(0.0..TAU);
    let spec = setup.base.with_theta0(theta0);
    let x = synthesize_with(&spec, sc.noise_mode, setup.variance, &mut rng)?;
    let raw = if alpha == 1 {
        conjugate_product_angles(&x)?
    } else {
        angles(&x)?
    };

    // branch offset the raw record starts on, from its first sample
    let first_truth = if alpha == 1 {
        setup.base.omega_at(0.5)
    } else {
        spec.theta_at(0.0)
    };
    let branch = TAU * ((first_truth - raw[0]) / TAU).round();

    let mut cells = vec![CellAgg::default(); setup.trackers.len()];
    let mut outputs = Vec::with_capacity(raw.len());
    for (fi, template) in setup.trackers.iter().enumerate() {
        let mut tracker = template.clone();
        outputs.clear();
        outputs.extend(raw.iter().map(|&r| tracker.step(r).estimate));
        for _ in 0..beta {
            for j in 0..outputs.len() - 1 {
                outputs[j] = outputs[j + 1] - outputs[j];
            }
            outputs.pop();
        }

        let q_total = setup.qs[fi] + 0.5 * (alpha + beta) as f64;
        let cell = &mut cells[fi];
        for (j, &y) in outputs.iter().enumerate() {
            let n = j + beta + alpha;
            if n < setup.window_first {
                continue;
            }
            let t = n as f64 - q_total;
            let reference = if sc.config.tracks_frequency() {
                let mut r = setup.base.omega_at(t);
                if beta == 0 {
                    r -= branch;
                }
                r
            } else {
                spec.theta_at(t) - branch
            };
            let err = y - reference;
            if !err.is_finite() {
                cell.divergent = true;
            }
            cell.sum_sq += err * err;
            cell.count += 1;
        }
        cell.corrections = tracker.corrections();
    }
    Ok(cells)
}

/// Run the whole sweep. Trials parallelize across a worker pool; the
/// aggregation order is fixed, so results are bit-identical for a given
/// scenario and seed.
pub fn run_scenario(scenario: &Scenario) -> Result<ScenarioResult, McError> {
    scenario.validate()?;
    let base = triplet_to_spec(&scenario.triplet, scenario.n_samples, 1.0)?;

    let mut trackers = Vec::with_capacity(scenario.filters.len());
    let mut qs = Vec::with_capacity(scenario.filters.len());
    let mut gains = Vec::with_capacity(scenario.filters.len());
    for entry in &scenario.filters {
        let tracker = match (&entry.estimator, &entry.predictor) {
            (Filter::Fir(e), Filter::Fir(p)) => Tracker::from_fir(e, p, scenario.unwrap_from)?,
            (Filter::Iir(e), Filter::Iir(p)) => Tracker::from_iir(e, p, scenario.unwrap_from)?,
            _ => return Err(McError::MixedPair(entry.id.clone())),
        };
        trackers.push(tracker);
        qs.push(entry.estimator.q());
        gains.push(noise_gain(&entry.estimator, scenario.config.chain_order())?);
    }

    let window_first =
        ((scenario.n_samples as f64 - 1.0) * scenario.window_start).ceil() as usize;
    let stream_len = scenario.n_samples - scenario.config.alpha;
    if stream_len <= scenario.config.beta {
        return Err(McError::EmptyWindowedRecord);
    }

    let mut rows = Vec::with_capacity(scenario.filters.len() * scenario.snr_db.len());
    let mut per_snr: Vec<Vec<Vec<CellAgg>>> = Vec::with_capacity(scenario.snr_db.len());
    for (si, &snr) in scenario.snr_db.iter().enumerate() {
        let variance = 1.0 / 10f64.powf(snr / 10.0);
        let setup = TrialSetup {
            scenario,
            base: &base,
            trackers: &trackers,
            qs: &qs,
            variance,
            snr_index: si,
            window_first,
        };
        let trial_cells: Vec<Vec<CellAgg>> = (0..scenario.trials)
            .into_par_iter()
            .map(|t| run_one_trial(&setup, t))
            .collect::<Result<_, _>>()?;
        if trial_cells.iter().any(|c| c.iter().any(|v| v.count == 0)) {
            return Err(McError::EmptyWindowedRecord);
        }
        per_snr.push(trial_cells);
    }

    for (fi, entry) in scenario.filters.iter().enumerate() {
        for (si, &snr) in scenario.snr_db.iter().enumerate() {
            let cells = &per_snr[si];
            let total_sq = neumaier_sum(cells.iter().map(|c| c[fi].sum_sq));
            let total_count: usize = cells.iter().map(|c| c[fi].count).sum();
            let corrections: u64 = cells.iter().map(|c| c[fi].corrections).sum();
            let divergent = cells.iter().filter(|c| c[fi].divergent).count();
            rows.push(SnrRow {
                filter_id: entry.id.clone(),
                snr_db: snr,
                var_sim_db: 10.0 * (total_sq / total_count as f64).log10(),
                var_ana_db: expected_variance_db(gains[fi], snr),
                trials: scenario.trials,
                unwrap_corrections: corrections,
                divergent_trials: divergent,
            });
        }
    }
    Ok(ScenarioResult { rows })
}

/// Lowest SNR from which the observed variance stays within `margin_db`
/// of the analytical value for every higher SNR in `rows` (all rows must
/// belong to one filter). Negative infinity when no row fails, positive
/// infinity when the top of the sweep still fails. Rows with a
/// non-finite analytical value are outside the comparison and skipped.
pub fn threshold_estimate(rows: &[SnrRow], margin_db: f64) -> f64 {
    let mut sorted: Vec<&SnrRow> = rows.iter().collect();
    sorted.sort_by(|a, b| a.snr_db.total_cmp(&b.snr_db));
    let failing = |r: &SnrRow| {
        r.var_ana_db.is_finite() && !(r.var_sim_db - r.var_ana_db < margin_db)
    };
    match sorted.iter().rposition(|r| failing(r)) {
        None => f64::NEG_INFINITY,
        Some(i) if i + 1 == sorted.len() => f64::INFINITY,
        Some(i) => sorted[i + 1].snr_db,
    }
}

impl ScenarioResult {
    /// Rows of one filter, in sweep order.
    pub fn filter_rows(&self, id: &str) -> Vec<&SnrRow> {
        self.rows.iter().filter(|r| r.filter_id == id).collect()
    }

    /// Breakdown threshold per filter, in bank order.
    pub fn thresholds(&self, margin_db: f64) -> Vec<(String, f64)> {
        let mut seen = Vec::new();
        for r in &self.rows {
            if !seen.iter().any(|(id, _)| id == &r.filter_id) {
                let rows: Vec<SnrRow> = self
                    .rows
                    .iter()
                    .filter(|x| x.filter_id == r.filter_id)
                    .cloned()
                    .collect();
                seen.push((r.filter_id.clone(), threshold_estimate(&rows, margin_db)));
            }
        }
        seen
    }

    /// CSV rendering with a header row.
    pub fn to_csv(&self) -> String {
        let mut out = String::from(
            "filter_id,snr_db,var_sim_db,var_ana_db,trials,unwrap_corrections,divergent_trials\n",
        );
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                r.filter_id,
                r.snr_db,
                r.var_sim_db,
                r.var_ana_db,
                r.trials,
                r.unwrap_corrections,
                r.divergent_trials
            ));
        }
        out
    }
}
