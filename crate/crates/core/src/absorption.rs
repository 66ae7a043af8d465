//! Molecular absorption coefficient model and atmospheric attenuation.
//!
//! Within a single transmission window the coefficient is modeled by the
//! fitted exponential `kappa(f) = exp(sigma1 + sigma2 f) + sigma3`; a
//! user-supplied table of `(frequency, kappa)` samples with linear
//! interpolation is accepted as an alternative. All frequencies are in Hz,
//! distances in m, coefficients in 1/m.

use crate::{Error, Result};

/// Parameters of the exponential absorption fit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AbsorptionFit {
    /// Dimensionless offset of the exponent.
    pub sigma1: f64,
    /// Exponent slope, 1/Hz. Must be non-negative so the fit is monotone.
    pub sigma2: f64,
    /// Additive floor, 1/m. Must be non-negative.
    pub sigma3: f64,
}

impl AbsorptionFit {
    pub fn new(sigma1: f64, sigma2: f64, sigma3: f64) -> Result<Self> {
        if !(sigma2 >= 0.0) {
            return Err(Error::domain(format!(
                "absorption fit requires sigma2 >= 0, got {sigma2}"
            )));
        }
        if !(sigma3 >= 0.0) {
            return Err(Error::domain(format!(
                "absorption fit requires sigma3 >= 0, got {sigma3}"
            )));
        }
        Ok(AbsorptionFit {
            sigma1,
            sigma2,
            sigma3,
        })
    }
}

#[derive(Debug, Clone)]
enum Mode {
    Fitted(AbsorptionFit),
    /// Strictly increasing frequencies with non-negative coefficients.
    Tabulated(Vec<(f64, f64)>),
}

/// Absorption coefficient model over a supported frequency window.
///
/// Immutable after construction; safe to share across worker threads.
#[derive(Debug, Clone)]
pub struct AbsorptionModel {
    mode: Mode,
    f_lo: f64,
    f_hi: f64,
}

impl AbsorptionModel {
    /// Fitted model supported on `[f_lo, f_hi]`.
    pub fn fitted(fit: AbsorptionFit, f_lo: f64, f_hi: f64) -> Result<Self> {
        if !(f_lo.is_finite() && f_hi.is_finite() && f_lo > 0.0 && f_hi > f_lo) {
            return Err(Error::domain(format!(
                "invalid absorption window [{f_lo}, {f_hi}]"
            )));
        }
        Ok(AbsorptionModel {
            mode: Mode::Fitted(fit),
            f_lo,
            f_hi,
        })
    }

    /// Tabulated model; the window is the table's frequency span.
    /// Queries outside the table are rejected, never extrapolated.
    pub fn tabulated(table: Vec<(f64, f64)>) -> Result<Self> {
        if table.len() < 2 {
            return Err(Error::domain(
                "absorption table needs at least two samples".to_string(),
            ));
        }
        for pair in table.windows(2) {
            if !(pair[1].0 > pair[0].0) {
                return Err(Error::domain(format!(
                    "absorption table frequencies must be strictly increasing \
                     ({} then {})",
                    pair[0].0, pair[1].0
                )));
            }
        }
        if let Some(&(f, k)) = table.iter().find(|&&(_, k)| !(k >= 0.0)) {
            return Err(Error::domain(format!(
                "absorption table has negative coefficient {k} at {f} Hz"
            )));
        }
        let f_lo = table[0].0;
        let f_hi = table[table.len() - 1].0;
        Ok(AbsorptionModel {
            mode: Mode::Tabulated(table),
            f_lo,
            f_hi,
        })
    }

    /// Parses a whitespace-delimited two-column table (Hz, 1/m).
    /// Lines starting with `#` and blank lines are skipped.
    pub fn tabulated_from_str(text: &str) -> Result<Self> {
        let mut table = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut cols = line.split_whitespace();
            let parse = |tok: Option<&str>| -> Result<f64> {
                tok.ok_or_else(|| {
                    Error::config(format!("absorption table line {}: missing column", lineno + 1))
                })?
                .parse::<f64>()
                .map_err(|e| {
                    Error::config(format!("absorption table line {}: {e}", lineno + 1))
                })
            };
            let f = parse(cols.next())?;
            let k = parse(cols.next())?;
            table.push((f, k));
        }
        Self::tabulated(table)
    }

    pub fn window(&self) -> (f64, f64) {
        (self.f_lo, self.f_hi)
    }

    fn check_window(&self, f: f64) -> Result<()> {
        if !(f >= self.f_lo && f <= self.f_hi) {
            return Err(Error::domain(format!(
                "frequency {f} Hz outside supported absorption window [{}, {}]",
                self.f_lo, self.f_hi
            )));
        }
        Ok(())
    }

    /// Molecular absorption coefficient `kappa(f)` in 1/m.
    pub fn kappa(&self, f: f64) -> Result<f64> {
        self.check_window(f)?;
        Ok(match &self.mode {
            Mode::Fitted(fit) => (fit.sigma1 + fit.sigma2 * f).exp() + fit.sigma3,
            Mode::Tabulated(table) => {
                let idx = table.partition_point(|&(tf, _)| tf <= f);
                if idx == 0 {
                    table[0].1
                } else if idx == table.len() {
                    table[table.len() - 1].1
                } else {
                    let (f0, k0) = table[idx - 1];
                    let (f1, k1) = table[idx];
                    k0 + (k1 - k0) * (f - f0) / (f1 - f0)
                }
            }
        })
    }

    /// Amplitude attenuation factor `exp(-kappa(f) d / 2)` over a path of
    /// length `d` meters. Value in (0, 1].
    pub fn amplitude(&self, f: f64, d: f64) -> Result<f64> {
        if !(d >= 0.0) {
            return Err(Error::domain(format!("path length must be >= 0, got {d}")));
        }
        Ok((-0.5 * self.kappa(f)? * d).exp())
    }
}

/// Free function forms mirroring the operation contracts.
pub fn kappa(model: &AbsorptionModel, f: f64) -> Result<f64> {
    model.kappa(f)
}

pub fn absorption_amplitude(model: &AbsorptionModel, f: f64, d: f64) -> Result<f64> {
    model.amplitude(f, d)
}
