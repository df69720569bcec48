//! Decay rate and oscillation frequencies from a sampled echo.
//!
//! `λ` is the least-squares slope of `ln L` over the last part of the
//! validity window, with the detected oscillations fitted alongside as
//! nuisance terms. Frequencies come from `D(t)`: periodogram peaks of the
//! detrended, Hann-windowed series seed a least-squares sinusoid fit whose
//! frequencies are then refined one at a time. Harmonics and short-lived
//! transients are discarded and at most two fundamentals are kept.

use nalgebra::{DMatrix, DVector};
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::echo::{log_derivative, EchoSeries, QuenchObservables};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExtractionSettings {
    /// Trailing fraction of the window used for the slope of `ln L`.
    pub fit_fraction: f64,
    /// Degree of the polynomial baseline fitted under the oscillations of
    /// `D`; absorbs the onset of a decay.
    pub baseline_degree: usize,
    /// A sinusoid must complete this many periods inside the window.
    pub min_cycles: f64,
    /// Minimum number of periods plus decay constants the window must hold
    /// before anything is reported.
    pub min_characteristic: f64,
    /// Components weaker than this fraction of the strongest are dropped.
    pub relative_threshold: f64,
    /// Components of `D` weaker than this (units of ω) are dropped.
    pub absolute_threshold: f64,
    /// Each half of the window must carry at least this fraction of a
    /// component's amplitude; rejects transients.
    pub persistence: f64,
    /// Slopes with `|λ|` below this (units of ω) are reported as zero.
    pub lambda_floor: f64,
    pub max_components: usize,
    pub max_fundamentals: usize,
    pub max_harmonic: usize,
    /// Zero-padding factor for the periodogram.
    pub padding: usize,
}

impl Default for ExtractionSettings {
    fn default() -> Self {
        Self {
            fit_fraction: 0.5,
            baseline_degree: 3,
            min_cycles: 1.5,
            min_characteristic: 4.0,
            relative_threshold: 0.05,
            absolute_threshold: 1e-3,
            persistence: 0.4,
            lambda_floor: 0.02,
            max_components: 8,
            max_fundamentals: 2,
            max_harmonic: 6,
            padding: 8,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sinusoid {
    /// Cycles per unit time (units of ω).
    pub frequency: f64,
    pub amplitude: f64,
}

/// Qualitative behavior of a quench.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BehaviorClass {
    Static,
    Oscillatory,
    Decaying,
    /// Decay with a persistent oscillation on top.
    Mixed,
}

impl BehaviorClass {
    pub fn of(obs: &QuenchObservables) -> Self {
        match (obs.lambda < 0.0, obs.f > 0.0) {
            (false, false) => BehaviorClass::Static,
            (false, true) => BehaviorClass::Oscillatory,
            (true, false) => BehaviorClass::Decaying,
            (true, true) => BehaviorClass::Mixed,
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            BehaviorClass::Static => "static",
            BehaviorClass::Oscillatory => "oscillatory",
            BehaviorClass::Decaying => "decaying",
            BehaviorClass::Mixed => "mixed",
        }
    }

    pub fn is_decaying(&self) -> bool {
        matches!(self, BehaviorClass::Decaying | BehaviorClass::Mixed)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Extraction {
    pub observables: QuenchObservables,
    /// Length of the window the fits used.
    pub window: f64,
    /// Slope before the floor is applied.
    pub raw_lambda: f64,
    /// Accepted fundamentals, highest frequency first.
    pub fundamentals: Vec<Sinusoid>,
    /// Every persistent component of `D`, strongest first.
    pub components: Vec<Sinusoid>,
}

impl Extraction {
    pub fn class(&self) -> BehaviorClass {
        BehaviorClass::of(&self.observables)
    }
}

pub fn extract(series: &EchoSeries) -> Result<Extraction> {
    extract_with(series, &ExtractionSettings::default())
}

pub fn extract_observables(series: &EchoSeries) -> Result<QuenchObservables> {
    Ok(extract(series)?.observables)
}

pub fn extract_with(series: &EchoSeries, settings: &ExtractionSettings) -> Result<Extraction> {
    let n = series.valid_len();
    if n < 16 {
        return Err(Error::WindowTooShort(format!(
            "{n} valid samples; at least 16 are needed"
        )));
    }
    let times = &series.times[..n];
    let window = times[n - 1] - times[0];
    let d = log_derivative(series)?;
    let d = &d[..n];

    let components = find_components(times, d, window, series.dt, settings);
    let fundamentals = select_fundamentals(&components, window, settings);

    let logs: Vec<f64> = series.values[..n].iter().map(|v| v.ln()).collect();
    let raw_lambda = fit_slope(times, &logs, &fundamentals, settings);
    let lambda = if raw_lambda > -settings.lambda_floor {
        0.0
    } else {
        raw_lambda
    };

    let mut ordered = fundamentals.clone();
    ordered.sort_by(|a, b| b.frequency.total_cmp(&a.frequency));
    let f = ordered.iter().fold(0.0, |acc, s| acc + s.frequency);
    let observables = QuenchObservables {
        lambda,
        f,
        f1: ordered.first().map(|s| s.frequency),
        f2: ordered.get(1).map(|s| s.frequency),
        balance: (lambda < 0.0 && f > 0.0).then_some(lambda),
    };

    let reach = window * (f - lambda);
    if (lambda < 0.0 || f > 0.0) && reach < settings.min_characteristic {
        return Err(Error::WindowTooShort(format!(
            "window {window:.3} holds {reach:.2} periods or decay constants, need {}",
            settings.min_characteristic
        )));
    }
    Ok(Extraction {
        observables,
        window,
        raw_lambda,
        fundamentals: ordered,
        components,
    })
}

/// Least-squares fit of `y` on the given columns. Returns the coefficients
/// and the residual sum of squares.
fn lstsq(columns: &[Vec<f64>], y: &[f64]) -> (Vec<f64>, f64) {
    let p = columns.len();
    let mut gram = DMatrix::<f64>::zeros(p, p);
    let mut rhs = DVector::<f64>::zeros(p);
    for i in 0..p {
        rhs[i] = dot(&columns[i], y);
        for j in 0..=i {
            let g = dot(&columns[i], &columns[j]);
            gram[(i, j)] = g;
            gram[(j, i)] = g;
        }
    }
    // equilibrate before the pseudo-inverse
    let scale: Vec<f64> = (0..p).map(|i| gram[(i, i)].sqrt().max(1e-300)).collect();
    for i in 0..p {
        rhs[i] /= scale[i];
        for j in 0..p {
            gram[(i, j)] /= scale[i] * scale[j];
        }
    }
    let svd = gram.svd(true, true);
    let solved = svd
        .solve(&rhs, 1e-12)
        .unwrap_or_else(|_| DVector::zeros(p));
    let coeffs: Vec<f64> = (0..p).map(|i| solved[i] / scale[i]).collect();
    let rss = y
        .iter()
        .enumerate()
        .map(|(k, v)| {
            let fit: f64 = coeffs.iter().zip(columns).map(|(c, col)| c * col[k]).sum();
            (v - fit).powi(2)
        })
        .sum();
    (coeffs, rss)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Polynomial baseline of the given degree (Legendre polynomials on the
/// rescaled window, so column 1 is the linear trend) and one cos/sin pair per
/// frequency.
fn design(times: &[f64], degree: usize, frequencies: &[f64]) -> Vec<Vec<f64>> {
    let (t0, t1) = (times[0], times[times.len() - 1]);
    let mid = 0.5 * (t0 + t1);
    let half = (0.5 * (t1 - t0)).max(f64::MIN_POSITIVE);
    let x: Vec<f64> = times.iter().map(|t| (t - mid) / half).collect();
    let mut cols = vec![vec![1.0; times.len()], x.clone()];
    for k in 2..=degree {
        let next = (0..x.len())
            .map(|i| {
                let kf = k as f64;
                ((2.0 * kf - 1.0) * x[i] * cols[k - 1][i] - (kf - 1.0) * cols[k - 2][i]) / kf
            })
            .collect();
        cols.push(next);
    }
    cols.truncate(degree.max(1) + 1);
    for f in frequencies {
        let w = 2.0 * std::f64::consts::PI * f;
        cols.push(times.iter().map(|t| (w * t).cos()).collect());
        cols.push(times.iter().map(|t| (w * t).sin()).collect());
    }
    cols
}

fn amplitudes(coeffs: &[f64], degree: usize) -> Vec<f64> {
    coeffs[degree.max(1) + 1..]
        .chunks(2)
        .map(|c| c[0].hypot(c[1]))
        .collect()
}

fn fit(times: &[f64], y: &[f64], degree: usize, frequencies: &[f64]) -> (Vec<f64>, f64) {
    lstsq(&design(times, degree, frequencies), y)
}

/// Hann-windowed, zero-padded power spectrum; returns `(frequency, power)`.
fn periodogram(y: &[f64], dt: f64, padding: usize) -> Vec<(f64, f64)> {
    let n = y.len();
    let size = (n * padding.max(1)).next_power_of_two();
    let mut buf = vec![Complex::new(0.0, 0.0); size];
    for (k, v) in y.iter().enumerate() {
        let w = 0.5 - 0.5 * (2.0 * std::f64::consts::PI * k as f64 / (n - 1) as f64).cos();
        buf[k] = Complex::new(v * w, 0.0);
    }
    FftPlanner::new().plan_fft_forward(size).process(&mut buf);
    (0..=size / 2)
        .map(|k| (k as f64 / (size as f64 * dt), buf[k].norm_sqr()))
        .collect()
}

/// Golden-section search for the frequency of component `index` that
/// minimizes the residual, all other frequencies held fixed.
fn refine(
    times: &[f64],
    y: &[f64],
    degree: usize,
    freqs: &mut [f64],
    index: usize,
    half_width: f64,
) {
    let center = freqs[index];
    let mut lo = (center - half_width).max(1e-12);
    let mut hi = center + half_width;
    let cost = |f: f64, freqs: &mut [f64]| {
        freqs[index] = f;
        fit(times, y, degree, freqs).1
    };
    let ratio = 0.5 * (5f64.sqrt() - 1.0);
    let mut a = hi - ratio * (hi - lo);
    let mut b = lo + ratio * (hi - lo);
    let mut fa = cost(a, freqs);
    let mut fb = cost(b, freqs);
    for _ in 0..40 {
        if fa < fb {
            hi = b;
            b = a;
            fb = fa;
            a = hi - ratio * (hi - lo);
            fa = cost(a, freqs);
        } else {
            lo = a;
            a = b;
            fa = fb;
            b = lo + ratio * (hi - lo);
            fb = cost(b, freqs);
        }
    }
    let best = if fa < fb { a } else { b };
    let at_center = cost(center, freqs);
    freqs[index] = if cost(best, freqs) <= at_center { best } else { center };
}

/// Persistent sinusoidal components of `d`, strongest first.
fn find_components(
    times: &[f64],
    d: &[f64],
    window: f64,
    dt: f64,
    settings: &ExtractionSettings,
) -> Vec<Sinusoid> {
    let n = d.len();
    let f_min = settings.min_cycles / window;
    let f_max = 0.4 / dt;
    let resolution = 1.0 / window;
    let mut freqs: Vec<f64> = Vec::new();
    let deg = settings.baseline_degree;
    let mut residual = {
        let (c, _) = fit(times, d, deg, &[]);
        residual_of(times, d, deg, &[], &c)
    };
    // no single tone can be larger than the detrended signal itself
    let span = residual.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
        - residual.iter().cloned().fold(f64::INFINITY, f64::min);
    let separated = |freqs: &[f64], f0: f64| freqs.iter().all(|f| (f - f0).abs() >= resolution);

    while freqs.len() < settings.max_components {
        let spectrum = periodogram(&residual, dt, settings.padding);
        let mut best: Option<(f64, f64)> = None;
        for k in 1..spectrum.len() - 1 {
            let (f, p) = spectrum[k];
            if f < f_min || f > f_max {
                continue;
            }
            let local_max = p > spectrum[k - 1].1 && p >= spectrum[k + 1].1;
            let band_edge = spectrum[k - 1].0 < f_min || spectrum[k + 1].0 > f_max;
            if local_max
                && !band_edge
                && separated(&freqs, f)
                && best.is_none_or(|(_, bp)| p > bp)
            {
                best = Some((f, p));
            }
        }
        let Some((f0, _)) = best else { break };
        freqs.push(f0);
        let last = freqs.len() - 1;
        refine(times, d, deg, &mut freqs, last, 0.5 * resolution);
        let (coeffs, _) = fit(times, d, deg, &freqs);
        let amps = amplitudes(&coeffs, deg);
        let strongest = amps.iter().cloned().fold(0.0, f64::max);
        if amps[last] < settings.absolute_threshold
            || amps[last] < settings.relative_threshold * strongest
            || strongest > span
            || !separated(&freqs[..last], freqs[last])
        {
            freqs.pop();
            break;
        }
        residual = residual_of(times, d, deg, &freqs, &coeffs);
    }
    if freqs.is_empty() {
        return Vec::new();
    }
    for _ in 0..2 {
        for i in 0..freqs.len() {
            refine(times, d, deg, &mut freqs, i, 0.25 * resolution);
        }
    }

    let (coeffs, _) = fit(times, d, deg, &freqs);
    let amps = amplitudes(&coeffs, deg);
    let strongest = amps.iter().cloned().fold(0.0, f64::max);
    let halves = [(0, n / 2), (n / 2, n)];
    let half_amps: Vec<Vec<f64>> = halves
        .iter()
        .map(|&(a, b)| amplitudes(&fit(&times[a..b], &d[a..b], 1, &freqs).0, 1))
        .collect();
    let mut out: Vec<Sinusoid> = freqs
        .iter()
        .zip(&amps)
        .enumerate()
        .filter(|&(i, (_, &amp))| {
            amp >= settings.absolute_threshold
                && amp >= settings.relative_threshold * strongest
                && half_amps.iter().all(|h| h[i] >= settings.persistence * amp)
        })
        .map(|(_, (&frequency, &amplitude))| Sinusoid {
            frequency,
            amplitude,
        })
        .collect();
    out.sort_by(|a, b| b.amplitude.total_cmp(&a.amplitude));
    out
}

fn residual_of(times: &[f64], y: &[f64], degree: usize, freqs: &[f64], coeffs: &[f64]) -> Vec<f64> {
    let cols = design(times, degree, freqs);
    (0..y.len())
        .map(|k| y[k] - coeffs.iter().zip(&cols).map(|(c, col)| c * col[k]).sum::<f64>())
        .collect()
}

/// Drops harmonics and near-duplicates. A component at `k·F` counts as a
/// harmonic of `F` unless it is clearly stronger than the geometric decay of
/// `F`'s harmonic series predicts.
fn select_fundamentals(
    components: &[Sinusoid],
    window: f64,
    settings: &ExtractionSettings,
) -> Vec<Sinusoid> {
    let resolution = 1.0 / window;
    let strongest = components.first().map_or(0.0, |c| c.amplitude);
    let floor = settings
        .absolute_threshold
        .max(settings.relative_threshold * strongest);
    let near = |a: f64, b: f64| (a - b).abs() <= (0.02 * b).max(0.5 * resolution);
    let mut kept: Vec<Sinusoid> = Vec::new();
    for c in components {
        let harmonic = kept.iter().any(|fund| {
            (2..=settings.max_harmonic).any(|k| {
                if !near(c.frequency, k as f64 * fund.frequency) {
                    return false;
                }
                if k == 2 {
                    return true;
                }
                let ratio = components
                    .iter()
                    .find(|o| near(o.frequency, 2.0 * fund.frequency))
                    .map_or(floor / fund.amplitude, |o| o.amplitude / fund.amplitude);
                c.amplitude <= 3.0 * fund.amplitude * ratio.powi(k as i32 - 1)
            })
        });
        let duplicate = kept.iter().any(|k| near(c.frequency, k.frequency));
        if !harmonic && !duplicate {
            kept.push(*c);
        }
        if kept.len() == settings.max_fundamentals {
            break;
        }
    }
    kept
}

/// Slope of `ln L` over the trailing part of the window, with each
/// fundamental and its first harmonics as nuisance regressors.
fn fit_slope(times: &[f64], logs: &[f64], fundamentals: &[Sinusoid], settings: &ExtractionSettings) -> f64 {
    let n = times.len();
    let start = ((1.0 - settings.fit_fraction) * (n - 1) as f64).floor() as usize;
    let t = &times[start..];
    let y = &logs[start..];
    let span = t[t.len() - 1] - t[0];
    let mut freqs: Vec<f64> = Vec::new();
    for fund in fundamentals {
        for k in 1..=3 {
            let f = k as f64 * fund.frequency;
            // below half a cycle a sinusoid is indistinguishable from the trend
            if f * span < 0.5 || f > 0.4 / (t[1] - t[0]) {
                continue;
            }
            if freqs.iter().all(|g| (g - f).abs() > 0.5 / span) {
                freqs.push(f);
            }
        }
    }
    let (coeffs, _) = fit(t, y, 1, &freqs);
    let half = 0.5 * span;
    coeffs[1] / half
}
