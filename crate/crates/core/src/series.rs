//! Uniformly sampled time series.

use num_complex::Complex64;

use crate::error::{invalid, Error, Result};

/// Complex amplitudes sampled at t0 + n·dt.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexSeries {
    pub t0: f64,
    pub dt: f64,
    pub values: Vec<Complex64>,
}

impl ComplexSeries {
    /// Validates and wraps samples.
    pub fn new(t0: f64, dt: f64, values: Vec<Complex64>) -> Result<Self> {
        if !(dt > 0.0) {
            return Err(invalid("dt", "must be positive"));
        }
        if values.len() < 2 {
            return Err(invalid("values", "need at least two samples"));
        }
        if values
            .iter()
            .any(|v| !(v.re.is_finite() && v.im.is_finite()))
        {
            return Err(invalid("values", "non-finite sample"));
        }
        Ok(Self { t0, dt, values })
    }

    /// Time of sample `n`.
    pub fn time(&self, n: usize) -> f64 {
        self.t0 + n as f64 * self.dt
    }

    /// Last sampled time.
    pub fn t_end(&self) -> f64 {
        self.time(self.values.len() - 1)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Linear interpolation at `t`; exact at sample times.
    pub fn at(&self, t: f64) -> Result<Complex64> {
        let s = (t - self.t0) / self.dt;
        let last = (self.values.len() - 1) as f64;
        if !(s >= -1e-9 && s <= last + 1e-9) {
            return Err(Error::OutOfRange {
                t,
                t_min: self.t0,
                t_max: self.t_end(),
            });
        }
        let s = s.clamp(0.0, last);
        let i = s.floor() as usize;
        let f = s - i as f64;
        if f < 1e-9 || i + 1 == self.values.len() {
            return Ok(self.values[i]);
        }
        if f > 1.0 - 1e-9 {
            return Ok(self.values[i + 1]);
        }
        Ok(self.values[i] * (1.0 - f) + self.values[i + 1] * f)
    }
}
