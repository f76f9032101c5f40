//! Command-line surface: file-backed design, analysis, and simulation.
//!
//! Three JSON document kinds are exchanged: design requests
//! ([`FilterSpec`]), designed filters ([`DesignedFilterDoc`]), and
//! simulation scenarios ([`ScenarioDoc`]). Bulk numeric output is CSV.
//! Exit codes: 0 on success, 1 when a design or simulation fails
//! numerically, 2 for unusable invocations or malformed input files.

use crate::analysis::{self, Filter};
use crate::catalog;
use crate::fir::{centred_delay, design_fir, FirFilter};
use crate::iir::{design_iir, BasisSet, DelayPolicy, IirFilter};
use crate::mc::{self, BankEntry, Scenario, SystemConfig};
use crate::realize::UnwrapSource;
use crate::signal::{FrequencyTriplet, NoiseMode};
use clap::{Parser, Subcommand};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::f64::consts::TAU;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use thiserror::Error;

/// Failures mapped to process exit codes.
#[derive(Debug, Error)]
pub enum CliError {
    /// Unusable invocation or input document; exit code 2.
    #[error("{0}")]
    Usage(String),
    /// Design or simulation failure on a well-formed request; exit code 1.
    #[error("{0}")]
    Numeric(String),
}

impl CliError {
    fn code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Numeric(_) => 1,
        }
    }
}

fn numeric(err: impl std::fmt::Display) -> CliError {
    CliError::Numeric(err.to_string())
}

/// Passband delay requested by a design document.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum QPolicy {
    /// Centred window delay, or the interior stationary point of the
    /// gain curve for rational designs.
    Optimal,
    /// Stationary point with the smallest coloured-noise gain.
    MinCng,
    /// Smallest stationary delay.
    MinQ,
    /// Caller-chosen delay; `-1` yields a one-step predictor.
    Explicit(f64),
}

/// Pole layout for rational designs.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BasisName {
    Bessel,
    Origin,
    Laguerre,
}

/// On-disk shape of a design request. Field presence depends on `kind`;
/// [`FilterSpec`] holds the validated form.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct FilterSpecDoc {
    kind: String,
    #[serde(rename = "M", default, skip_serializing_if = "Option::is_none")]
    m: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    f_c: Option<f64>,
    #[serde(rename = "K1")]
    k1: usize,
    #[serde(rename = "K0")]
    k0: usize,
    #[serde(rename = "K_phi", default, skip_serializing_if = "Option::is_none")]
    k_phi: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    q_policy: Option<QPolicy>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    basis: Option<BasisName>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    laguerre_p: Option<f64>,
}

/// A validated design request.
#[derive(Clone, Debug, PartialEq)]
pub enum FilterSpec {
    /// Window design with `m` taps.
    Fir {
        m: usize,
        k1: usize,
        k0: usize,
        q_policy: QPolicy,
    },
    /// Rational design on `k_phi` poles.
    Iir {
        f_c: Option<f64>,
        k1: usize,
        k0: usize,
        k_phi: usize,
        q_policy: QPolicy,
        basis: BasisName,
        laguerre_p: Option<f64>,
    },
}

impl FilterSpec {
    /// Parse and validate a request document.
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let doc: FilterSpecDoc =
            serde_json::from_str(text).map_err(|e| CliError::Usage(e.to_string()))?;
        Self::from_doc(doc)
    }

    /// Render back to the document shape.
    pub fn to_json(&self) -> String {
        let mut text = serde_json::to_string_pretty(&self.to_doc()).expect("spec serializes");
        text.push('\n');
        text
    }

    fn from_doc(doc: FilterSpecDoc) -> Result<Self, CliError> {
        let fail = |msg: &str| Err(CliError::Usage(msg.to_string()));
        let q_policy = doc.q_policy.unwrap_or(QPolicy::Optimal);
        match doc.kind.as_str() {
            "fir" => {
                let Some(m) = doc.m else {
                    return fail("fir spec requires M");
                };
                if doc.f_c.is_some() || doc.k_phi.is_some() || doc.basis.is_some() {
                    return fail("f_c, K_phi, and basis apply only to iir specs");
                }
                if doc.laguerre_p.is_some() {
                    return fail("laguerre_p applies only to iir specs");
                }
                if matches!(q_policy, QPolicy::MinCng | QPolicy::MinQ) {
                    return fail("fir specs support q_policy optimal or explicit");
                }
                Ok(FilterSpec::Fir {
                    m,
                    k1: doc.k1,
                    k0: doc.k0,
                    q_policy,
                })
            }
            "iir" => {
                let Some(k_phi) = doc.k_phi else {
                    return fail("iir spec requires K_phi");
                };
                if doc.m.is_some() {
                    return fail("M applies only to fir specs");
                }
                let basis = doc.basis.unwrap_or(BasisName::Bessel);
                match basis {
                    BasisName::Bessel => {
                        if doc.f_c.is_none() {
                            return fail("bessel basis requires f_c");
                        }
                        if doc.laguerre_p.is_some() {
                            return fail("laguerre_p applies only to the laguerre basis");
                        }
                    }
                    BasisName::Origin => {
                        if doc.f_c.is_some() || doc.laguerre_p.is_some() {
                            return fail("origin basis takes neither f_c nor laguerre_p");
                        }
                    }
                    BasisName::Laguerre => {
                        if doc.laguerre_p.is_none() {
                            return fail("laguerre basis requires laguerre_p");
                        }
                        if doc.f_c.is_some() {
                            return fail("laguerre basis takes no f_c");
                        }
                    }
                }
                Ok(FilterSpec::Iir {
                    f_c: doc.f_c,
                    k1: doc.k1,
                    k0: doc.k0,
                    k_phi,
                    q_policy,
                    basis,
                    laguerre_p: doc.laguerre_p,
                })
            }
            other => Err(CliError::Usage(format!(
                "unknown filter kind '{other}' (expected fir or iir)"
            ))),
        }
    }

    fn to_doc(&self) -> FilterSpecDoc {
        match *self {
            FilterSpec::Fir { m, k1, k0, q_policy } => FilterSpecDoc {
                kind: "fir".into(),
                m: Some(m),
                f_c: None,
                k1,
                k0,
                k_phi: None,
                q_policy: Some(q_policy),
                basis: None,
                laguerre_p: None,
            },
            FilterSpec::Iir {
                f_c,
                k1,
                k0,
                k_phi,
                q_policy,
                basis,
                laguerre_p,
            } => FilterSpecDoc {
                kind: "iir".into(),
                m: None,
                f_c,
                k1,
                k0,
                k_phi: Some(k_phi),
                q_policy: Some(q_policy),
                basis: Some(basis),
                laguerre_p,
            },
        }
    }

    /// Same window or pole set, delay forced to one step ahead.
    pub fn predictor_variant(&self) -> FilterSpec {
        let mut spec = self.clone();
        match &mut spec {
            FilterSpec::Fir { q_policy, .. } | FilterSpec::Iir { q_policy, .. } => {
                *q_policy = QPolicy::Explicit(-1.0);
            }
        }
        spec
    }

    /// Run the design this request describes.
    pub fn design(&self) -> Result<Filter, CliError> {
        match *self {
            FilterSpec::Fir { m, k1, k0, q_policy } => {
                let q = match q_policy {
                    QPolicy::Optimal => centred_delay(m),
                    QPolicy::Explicit(q) => q,
                    QPolicy::MinCng | QPolicy::MinQ => {
                        return Err(CliError::Usage(
                            "fir specs support q_policy optimal or explicit".into(),
                        ))
                    }
                };
                design_fir(m, k1, k0, q).map(Filter::Fir).map_err(numeric)
            }
            FilterSpec::Iir {
                f_c,
                k1,
                k0,
                k_phi,
                q_policy,
                basis,
                laguerre_p,
            } => {
                let basis = match basis {
                    BasisName::Bessel => {
                        let f_c = f_c
                            .ok_or_else(|| CliError::Usage("bessel basis requires f_c".into()))?;
                        BasisSet::bessel(k_phi, f_c)
                    }
                    BasisName::Origin => BasisSet::origin(k_phi),
                    BasisName::Laguerre => {
                        let p = laguerre_p.ok_or_else(|| {
                            CliError::Usage("laguerre basis requires laguerre_p".into())
                        })?;
                        BasisSet::laguerre(k_phi, Complex64::new(p, 0.0))
                    }
                }
                .map_err(numeric)?;
                let policy = match q_policy {
                    QPolicy::Optimal => DelayPolicy::Optimal,
                    QPolicy::MinCng => DelayPolicy::MinGain,
                    QPolicy::MinQ => DelayPolicy::MinDelay,
                    QPolicy::Explicit(q) => DelayPolicy::Explicit(q),
                };
                design_iir(&basis, k1, k0, policy)
                    .map(Filter::Iir)
                    .map_err(numeric)
            }
        }
    }
}

/// Design request matching a bundled catalog row.
pub fn catalog_spec(entry: &catalog::CatalogEntry) -> FilterSpec {
    match entry.recipe {
        catalog::Recipe::Fir { m, k1, k0 } => FilterSpec::Fir {
            m,
            k1,
            k0,
            q_policy: QPolicy::Optimal,
        },
        catalog::Recipe::Iir { k1, k0, k_phi, f_c } => FilterSpec::Iir {
            f_c: Some(f_c),
            k1,
            k0,
            k_phi,
            q_policy: QPolicy::Optimal,
            basis: BasisName::Bessel,
            laguerre_p: None,
        },
    }
}

/// Gain diagnostics attached to every designed filter.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiagnosticsDoc {
    #[serde(rename = "v_LPF")]
    pub v_lpf: f64,
    /// Coloured-noise gain keyed by assumed differentiator count "0".."3".
    #[serde(rename = "v_BPF")]
    pub v_bpf: BTreeMap<String, f64>,
}

/// A finished design on disk: request parameters, coefficients, and
/// diagnostics. `analyze` consumes this document.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DesignedFilterDoc {
    pub kind: String,
    #[serde(rename = "M", default, skip_serializing_if = "Option::is_none")]
    pub m: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub f_c: Option<f64>,
    #[serde(rename = "K1")]
    pub k1: usize,
    #[serde(rename = "K0")]
    pub k0: usize,
    #[serde(rename = "K_phi", default, skip_serializing_if = "Option::is_none")]
    pub k_phi: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub basis: Option<BasisName>,
    pub q: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub taps: Option<Vec<f64>>,
    /// Poles, weights `c`, and transfer coefficients as `[re, im]` pairs
    /// or plain arrays; rational designs only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub poles: Option<Vec<[f64; 2]>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c: Option<Vec<[f64; 2]>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a: Option<Vec<f64>>,
    pub diagnostics: DiagnosticsDoc,
}

fn gain_table(filter: &Filter) -> Result<DiagnosticsDoc, CliError> {
    let mut v_bpf = BTreeMap::new();
    for k in 0..=3usize {
        v_bpf.insert(k.to_string(), analysis::noise_gain(filter, k).map_err(numeric)?);
    }
    Ok(DiagnosticsDoc {
        v_lpf: filter.white_noise_gain(),
        v_bpf,
    })
}

fn pairs(values: &[Complex64]) -> Vec<[f64; 2]> {
    values.iter().map(|z| [z.re, z.im]).collect()
}

fn unpairs(values: &[[f64; 2]]) -> Vec<Complex64> {
    values.iter().map(|p| Complex64::new(p[0], p[1])).collect()
}

/// Describe a finished design, carrying over the request parameters the
/// coefficients alone do not record.
pub fn describe(spec: &FilterSpec, filter: &Filter) -> Result<DesignedFilterDoc, CliError> {
    let diagnostics = gain_table(filter)?;
    match (spec, filter) {
        (FilterSpec::Fir { m, .. }, Filter::Fir(f)) => Ok(DesignedFilterDoc {
            kind: "fir".into(),
            m: Some(*m),
            f_c: None,
            k1: f.k1,
            k0: f.k0,
            k_phi: None,
            basis: None,
            q: f.q,
            taps: Some(f.taps.clone()),
            poles: None,
            c: None,
            b: None,
            a: None,
            diagnostics,
        }),
        (
            FilterSpec::Iir {
                f_c, k_phi, basis, ..
            },
            Filter::Iir(f),
        ) => Ok(DesignedFilterDoc {
            kind: "iir".into(),
            m: None,
            f_c: *f_c,
            k1: f.k1,
            k0: f.k0,
            k_phi: Some(*k_phi),
            basis: Some(*basis),
            q: f.q,
            taps: None,
            poles: Some(pairs(&f.poles)),
            c: Some(pairs(&f.weights)),
            b: Some(f.b.clone()),
            a: Some(f.a.clone()),
            diagnostics,
        }),
        _ => Err(CliError::Numeric(
            "design produced a filter of the wrong kind".into(),
        )),
    }
}

impl DesignedFilterDoc {
    /// Parse a designed-filter document.
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Usage(e.to_string()))
    }

    /// Rebuild the runnable filter. Gains are recomputed from the
    /// coefficients rather than trusted from the document.
    pub fn to_filter(&self) -> Result<Filter, CliError> {
        let fail = |msg: &str| CliError::Usage(msg.to_string());
        match self.kind.as_str() {
            "fir" => {
                let taps = self.taps.clone().ok_or_else(|| fail("fir document missing taps"))?;
                Ok(Filter::Fir(FirFilter {
                    taps,
                    q: self.q,
                    k1: self.k1,
                    k0: self.k0,
                }))
            }
            "iir" => {
                let b = self.b.clone().ok_or_else(|| fail("iir document missing b"))?;
                let a = self.a.clone().ok_or_else(|| fail("iir document missing a"))?;
                let poles = self.poles.as_deref().ok_or_else(|| fail("iir document missing poles"))?;
                let weights = self.c.as_deref().map(unpairs).unwrap_or_default();
                let mut f = IirFilter {
                    b,
                    a,
                    poles: unpairs(poles),
                    weights,
                    q: self.q,
                    k1: self.k1,
                    k0: self.k0,
                    white_noise_gain: 0.0,
                    coloured_noise_gain: 0.0,
                    imag_residue: 0.0,
                };
                let probe = Filter::Iir(f.clone());
                f.white_noise_gain = analysis::noise_gain(&probe, 0).map_err(numeric)?;
                f.coloured_noise_gain = analysis::noise_gain(&probe, f.k0).map_err(numeric)?;
                Ok(Filter::Iir(f))
            }
            other => Err(CliError::Usage(format!("unknown filter kind '{other}'"))),
        }
    }

    /// Passband edge used for the deviation column: `0.95 f_c` when a
    /// cutoff is recorded, otherwise the reciprocal window length.
    pub fn passband_edge(&self) -> f64 {
        let guess = if let Some(f_c) = self.f_c {
            0.95 * f_c
        } else if let Some(m) = self.m {
            0.95 / m as f64
        } else if let Some(k_phi) = self.k_phi {
            0.95 / k_phi as f64
        } else {
            0.5
        };
        if guess > 0.0 && guess <= 0.5 {
            guess
        } else {
            0.5
        }
    }
}

/// Scalar half of a response report.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResponseSummaryDoc {
    /// Measured dc group delay, samples.
    pub q: f64,
    #[serde(rename = "v_LPF")]
    pub v_lpf: f64,
    #[serde(rename = "v_BPF")]
    pub v_bpf: BTreeMap<String, f64>,
    /// Upper edge of the reported passband, cycles per sample.
    pub f_upper: f64,
    /// Largest phase-linearity deviation over the passband, degrees.
    pub max_dev_deg: f64,
}

const REPORT_POINTS: usize = 1024;

/// Frequency-response table (CSV) and summary for one filter. The grid
/// is `f = k / 2048` so dyadic landmarks such as `1/64` land exactly on
/// a row; the deviation column is populated only inside the passband.
pub fn response_report(
    filter: &Filter,
    f_upper: f64,
) -> Result<(String, ResponseSummaryDoc), CliError> {
    let mut csv = String::from("f,re,im,mag2,phase_deg,dev_deg\n");
    let q = filter.q();
    for k in 0..=REPORT_POINTS {
        let f = k as f64 / (2 * REPORT_POINTS) as f64;
        let w = TAU * f;
        let h = filter.frequency_response(w);
        let phase_deg = h.arg().to_degrees();
        let dev = if f <= f_upper {
            let rotated = h * Complex64::from_polar(1.0, q * w);
            format!("{}", rotated.arg().to_degrees())
        } else {
            String::new()
        };
        let _ = writeln!(csv, "{f},{},{},{},{phase_deg},{dev}", h.re, h.im, h.norm_sqr());
    }
    let summary = ResponseSummaryDoc {
        q: filter.dc_group_delay(),
        v_lpf: filter.white_noise_gain(),
        v_bpf: gain_table(filter)?.v_bpf,
        f_upper,
        max_dev_deg: analysis::phase_deviation_deg(filter, f_upper).map_err(numeric)?,
    };
    Ok((csv, summary))
}

fn default_samples() -> usize {
    1000
}

fn default_trials() -> usize {
    1000
}

fn default_snr() -> Vec<f64> {
    (0..=20).map(f64::from).collect()
}

fn default_window() -> f64 {
    0.125
}

/// Frequency checkpoints at the start, middle, and end of the record.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TripletDoc {
    pub start: f64,
    pub mid: f64,
    pub end: f64,
}

/// A bank entry: display id plus the design request to build the
/// estimator from. The predictor is the same request at `q = -1`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FilterRefDoc {
    pub id: String,
    pub spec: PathBuf,
}

/// On-disk simulation scenario. Omitted fields take the standard
/// protocol defaults.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioDoc {
    pub triplet: TripletDoc,
    #[serde(rename = "N", default = "default_samples")]
    pub n_samples: usize,
    pub alpha: usize,
    pub beta: usize,
    #[serde(default = "default_snr")]
    pub snr_db: Vec<f64>,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default)]
    pub noise: NoiseMode,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_window")]
    pub window_start: f64,
    #[serde(default)]
    pub unwrap: UnwrapSource,
    pub filters: Vec<FilterRefDoc>,
}

impl ScenarioDoc {
    /// Parse a scenario document.
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Usage(e.to_string()))
    }

    /// Render back to JSON.
    pub fn to_json(&self) -> String {
        let mut text = serde_json::to_string_pretty(self).expect("scenario serializes");
        text.push('\n');
        text
    }
}

fn read_file(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
}

fn write_file(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
}

/// Load and validate a design request from disk.
pub fn load_filter_spec(path: &Path) -> Result<FilterSpec, CliError> {
    FilterSpec::from_json(&read_file(path)?)
        .map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
}

/// Resolve a scenario document into a runnable scenario; `base` anchors
/// relative spec references, which are designed on the spot.
pub fn build_scenario(doc: &ScenarioDoc, base: &Path) -> Result<Scenario, CliError> {
    let triplet = FrequencyTriplet::new(doc.triplet.start, doc.triplet.mid, doc.triplet.end);
    let mut sc = Scenario::new(triplet, SystemConfig::new(doc.alpha, doc.beta));
    sc.n_samples = doc.n_samples;
    sc.snr_db = doc.snr_db.clone();
    sc.trials = doc.trials;
    sc.noise_mode = doc.noise;
    sc.seed = doc.seed;
    sc.window_start = doc.window_start;
    sc.unwrap_from = doc.unwrap;
    for entry in &doc.filters {
        let spec = load_filter_spec(&base.join(&entry.spec))?;
        let estimator = spec.design()?;
        let predictor = spec.predictor_variant().design()?;
        sc.filters.push(BankEntry {
            id: entry.id.clone(),
            estimator,
            predictor,
        });
    }
    sc.validate().map_err(|e| CliError::Usage(e.to_string()))?;
    Ok(sc)
}

fn parse_snr_range(text: &str) -> Result<Vec<f64>, CliError> {
    let bad = || CliError::Usage(format!("bad --snr-range '{text}': expected LO:HI[:STEP]"));
    let parts: Vec<&str> = text.split(':').collect();
    if parts.len() != 2 && parts.len() != 3 {
        return Err(bad());
    }
    let lo: f64 = parts[0].parse().map_err(|_| bad())?;
    let hi: f64 = parts[1].parse().map_err(|_| bad())?;
    let step: f64 = if parts.len() == 3 {
        parts[2].parse().map_err(|_| bad())?
    } else {
        1.0
    };
    if !lo.is_finite() || !hi.is_finite() || !(step > 0.0) || hi < lo {
        return Err(bad());
    }
    let count = ((hi - lo) / step + 1e-9).floor() as usize;
    Ok((0..=count).map(|k| lo + k as f64 * step).collect())
}

fn to_pretty<T: Serialize>(value: &T) -> Result<String, CliError> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| numeric(e))?;
    text.push('\n');
    Ok(text)
}

fn emit(out: Option<&Path>, text: &str) -> Result<(), CliError> {
    match out {
        Some(path) => write_file(path, text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn cmd_design(spec_path: &Path, out: Option<&Path>) -> Result<(), CliError> {
    let spec = load_filter_spec(spec_path)?;
    let filter = spec.design()?;
    let doc = describe(&spec, &filter)?;
    emit(out, &to_pretty(&doc)?)
}

fn cmd_analyze(design_path: &Path, out: Option<&Path>) -> Result<(), CliError> {
    let doc = DesignedFilterDoc::from_json(&read_file(design_path)?)
        .map_err(|e| CliError::Usage(format!("{}: {e}", design_path.display())))?;
    let filter = doc.to_filter()?;
    let (csv, summary) = response_report(&filter, doc.passband_edge())?;
    match out {
        Some(path) => {
            let summary_path = path.with_extension("json");
            if summary_path == path {
                return Err(CliError::Usage(
                    "choose a non-.json --out; the summary takes the .json name".into(),
                ));
            }
            write_file(path, &csv)?;
            write_file(&summary_path, &to_pretty(&summary)?)
        }
        None => {
            print!("{}", to_pretty(&summary)?);
            Ok(())
        }
    }
}

fn cmd_simulate(
    scenario_path: &Path,
    out: Option<&Path>,
    seed: Option<u64>,
    jobs: Option<usize>,
    threshold: bool,
    snr_range: Option<&str>,
) -> Result<(), CliError> {
    if let Some(jobs) = jobs {
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global();
    }
    let doc = ScenarioDoc::from_json(&read_file(scenario_path)?)
        .map_err(|e| CliError::Usage(format!("{}: {e}", scenario_path.display())))?;
    let base = scenario_path.parent().unwrap_or_else(|| Path::new("."));
    let mut sc = build_scenario(&doc, base)?;
    if let Some(seed) = seed {
        sc.seed = seed;
    }
    if let Some(range) = snr_range {
        sc.snr_db = parse_snr_range(range)?;
    }
    let result = mc::run_scenario(&sc).map_err(numeric)?;
    let mut csv = result.to_csv();
    if threshold {
        for (id, thr) in result.thresholds(mc::DEFAULT_MARGIN_DB) {
            csv.push_str(&format!("{id}/threshold,{thr},NaN,NaN,0,0,0\n"));
        }
    }
    emit(out, &csv)
}

fn cmd_tables(out: Option<&Path>) -> Result<(), CliError> {
    let mut csv = String::from("set,id,kind,q,v_LPF,v_BPF_0,v_BPF_1,v_BPF_2,v_BPF_3\n");
    for entry in catalog::entries() {
        let filter = entry.estimator().map_err(numeric)?;
        let kind = match filter {
            Filter::Fir(_) => "fir",
            Filter::Iir(_) => "iir",
        };
        let mut gains = Vec::with_capacity(4);
        for k in 0..=3usize {
            gains.push(analysis::noise_gain(&filter, k).map_err(numeric)?);
        }
        let _ = writeln!(
            csv,
            "{},{},{kind},{},{},{},{},{},{}",
            entry.set,
            entry.id,
            filter.q(),
            filter.white_noise_gain(),
            gains[0],
            gains[1],
            gains[2],
            gains[3]
        );
    }
    emit(out, &csv)
}

#[derive(Parser)]
#[command(
    name = "phasetrack",
    version,
    about = "Smoother-predictor filter design and phase-tracking simulation"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Design a filter from a JSON request and emit the designed-filter document
    Design {
        /// Design request (JSON)
        spec: PathBuf,
        /// Write the document here instead of stdout
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Tabulate a designed filter's frequency response
    Analyze {
        /// Designed-filter document (JSON)
        design: PathBuf,
        /// Response table CSV path; the summary takes the same name with .json
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a Monte-Carlo scenario and emit per-SNR variance rows as CSV
    Simulate {
        /// Scenario document (JSON)
        scenario: PathBuf,
        /// CSV output path instead of stdout
        #[arg(long)]
        out: Option<PathBuf>,
        /// Override the scenario's generator seed
        #[arg(long)]
        seed: Option<u64>,
        /// Cap simulation worker threads
        #[arg(long)]
        jobs: Option<usize>,
        /// Append per-filter breakdown-threshold rows
        #[arg(long)]
        threshold: bool,
        /// Override the SNR sweep in dB, e.g. 0:20:2
        #[arg(long, value_name = "LO:HI[:STEP]")]
        snr_range: Option<String>,
    },
    /// Regenerate the bundled catalog diagnostics as CSV
    Tables {
        /// CSV output path instead of stdout
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// Entry point returning the process exit code.
pub fn main() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            let _ = err.print();
            return err.exit_code();
        }
    };
    let outcome = match &cli.cmd {
        Cmd::Design { spec, out } => cmd_design(spec, out.as_deref()),
        Cmd::Analyze { design, out } => cmd_analyze(design, out.as_deref()),
        Cmd::Simulate {
            scenario,
            out,
            seed,
            jobs,
            threshold,
            snr_range,
        } => cmd_simulate(
            scenario,
            out.as_deref(),
            *seed,
            *jobs,
            *threshold,
            snr_range.as_deref(),
        ),
        Cmd::Tables { out } => cmd_tables(out.as_deref()),
    };
    match outcome {
        Ok(()) => 0,
        Err(err) => {
            eprintln!("error: {err}");
            err.code()
        }
    }
}
