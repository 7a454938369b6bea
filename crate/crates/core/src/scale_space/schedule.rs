use crate::error::{Error, Result};

/// Blur coefficients used in the reference decompositions.
pub const PAPER_SIGMAS: [f64; 11] = [1000.0, 500.0, 250.0, 125.0, 60.0, 30.0, 15.0, 8.0, 4.0, 2.0, 1.0];

/// Per-layer spread radii of the 13-layer reference decomposition.
pub const PAPER_SPREAD: [u16; 13] = [30, 30, 30, 30, 30, 30, 30, 30, 20, 10, 5, 3, 2];

/// A strictly decreasing sequence of blur sigmas.
#[derive(Debug, Clone, PartialEq)]
pub struct BlurSchedule {
    sigmas: Vec<f64>,
    factor: f64,
    sigma_min: f64,
}

impl BlurSchedule {
    pub fn from_sigmas(sigmas: Vec<f64>) -> Result<Self> {
        if sigmas.is_empty() {
            return Err(Error::param("empty blur schedule"));
        }
        if let Some(s) = sigmas.iter().find(|s| !(**s > 0.0 && s.is_finite())) {
            return Err(Error::param(format!("sigma {s} is not positive")));
        }
        if sigmas.windows(2).any(|w| w[0] <= w[1]) {
            return Err(Error::param("blur schedule must be strictly decreasing"));
        }
        let sigma_min = *sigmas.last().unwrap();
        let factor = if sigmas.len() > 1 {
            (sigmas[0] / sigma_min).powf(1.0 / (sigmas.len() - 1) as f64)
        } else {
            2.0
        };
        Ok(BlurSchedule {
            sigmas,
            factor,
            sigma_min,
        })
    }

    pub fn paper() -> Self {
        Self::from_sigmas(PAPER_SIGMAS.to_vec()).expect("preset is valid")
    }

    pub fn sigmas(&self) -> &[f64] {
        &self.sigmas
    }

    pub fn len(&self) -> usize {
        self.sigmas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sigmas.is_empty()
    }

    pub fn factor(&self) -> f64 {
        self.factor
    }

    pub fn sigma_min(&self) -> f64 {
        self.sigma_min
    }

    /// Inserts the geometric mean between every adjacent pair of sigmas.
    pub fn densified(&self) -> Self {
        let mut out = Vec::with_capacity(self.sigmas.len() * 2);
        for w in self.sigmas.windows(2) {
            out.push(w[0]);
            out.push((w[0] * w[1]).sqrt());
        }
        out.push(self.sigma_min);
        Self::from_sigmas(out).expect("geometric means keep the order strict")
    }
}

/// `sigma_1 = max(width, height) / 2`, then `floor(sigma / factor)` until the
/// next value would fall below `sigma_min`, which is appended if needed.
pub fn build_schedule(width: usize, height: usize, factor: f64, sigma_min: f64) -> Result<BlurSchedule> {
    if !(factor > 1.0 && factor.is_finite()) {
        return Err(Error::param(format!("reduction factor must exceed 1, got {factor}")));
    }
    if !(sigma_min > 0.0 && sigma_min.is_finite()) {
        return Err(Error::param(format!("sigma_min must be positive, got {sigma_min}")));
    }
    schedule_from(width.max(height) as f64 / 2.0, factor, sigma_min)
}

/// Same halving-with-floor rule from an explicit starting sigma.
pub fn schedule_from(sigma0: f64, factor: f64, sigma_min: f64) -> Result<BlurSchedule> {
    if !(factor > 1.0 && factor.is_finite()) {
        return Err(Error::param(format!("reduction factor must exceed 1, got {factor}")));
    }
    if !(sigma0 > 0.0 && sigma0.is_finite()) {
        return Err(Error::param(format!("initial sigma must be positive, got {sigma0}")));
    }
    let mut sigmas = vec![sigma0.max(sigma_min)];
    loop {
        let next = (sigmas.last().unwrap() / factor).floor();
        if next < sigma_min {
            break;
        }
        sigmas.push(next);
    }
    if *sigmas.last().unwrap() > sigma_min {
        sigmas.push(sigma_min);
    }
    let mut s = BlurSchedule::from_sigmas(sigmas)?;
    s.factor = factor;
    Ok(s)
}

/// Spread radii matched to a schedule of `layers` entries. The reference list
/// is aligned on its finest entries; longer schedules repeat the coarsest radius.
pub fn paper_spread(layers: usize) -> Vec<u16> {
    let n = PAPER_SPREAD.len();
    if layers <= n {
        PAPER_SPREAD[n - layers..].to_vec()
    } else {
        let mut r = vec![PAPER_SPREAD[0]; layers - n];
        r.extend_from_slice(&PAPER_SPREAD);
        r
    }
}
