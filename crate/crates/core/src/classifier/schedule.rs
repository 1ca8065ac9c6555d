//! Learning-rate decay and σ² annealing, both advanced once per epoch.

use crate::error::{Error, Result};

pub const DEFAULT_BETA0: f64 = 0.99;
pub const DEFAULT_ANNEAL_EXPONENT: f64 = 1.1;
pub const DEFAULT_ANNEAL_STOP_OFFSET: f64 = 0.4;
pub const DEFAULT_LR_NUMERATOR_DIVISOR: f64 = 100.0;
pub const DEFAULT_LR_DECAY_BASE: f64 = 0.01;

/// `α(t) = (n ξ / 100) · 0.01^{t/T}` for epoch `t` in `1..=T`.
pub fn learning_rate(t: usize, n: usize, xi: usize, epochs: usize) -> f64 {
    learning_rate_with(
        t,
        n,
        xi,
        epochs,
        DEFAULT_LR_NUMERATOR_DIVISOR,
        DEFAULT_LR_DECAY_BASE,
    )
}

pub fn learning_rate_with(
    t: usize,
    n: usize,
    xi: usize,
    epochs: usize,
    divisor: f64,
    decay_base: f64,
) -> f64 {
    debug_assert!(t >= 1 && t <= epochs);
    (n * xi) as f64 / divisor * decay_base.powf(t as f64 / epochs as f64)
}

/// How σ² evolves between epochs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum AnnealMode {
    /// σ² stays at σ²_opt.
    Off,
    /// `β(t) = β(t-1)^{exponent}`, `σ²(t) = σ²(t-1) β(t)`.
    #[default]
    Geometric,
    /// `β` held at `β(0)`; a slower cooling.
    ConstantBeta,
}

impl AnnealMode {
    pub fn as_str(self) -> &'static str {
        match self {
            AnnealMode::Off => "off",
            AnnealMode::Geometric => "geometric",
            AnnealMode::ConstantBeta => "constant-beta",
        }
    }
}

impl std::str::FromStr for AnnealMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "off" => Ok(AnnealMode::Off),
            "geometric" => Ok(AnnealMode::Geometric),
            "constant-beta" => Ok(AnnealMode::ConstantBeta),
            other => Err(Error::Config(format!("unknown annealing mode '{other}'"))),
        }
    }
}

/// One annealing step with the default constants: returns `(σ², β, active)`.
pub fn anneal_sigma(sigma_sq: f64, beta: f64, sigma_sq_opt: f64) -> (f64, f64, bool) {
    let beta = beta.powf(DEFAULT_ANNEAL_EXPONENT);
    let sigma_sq = sigma_sq * beta;
    (
        sigma_sq,
        beta,
        sigma_sq >= sigma_sq_opt - DEFAULT_ANNEAL_STOP_OFFSET,
    )
}

/// Running state of the σ² schedule.
#[derive(Debug, Clone, PartialEq)]
pub struct AnnealState {
    mode: AnnealMode,
    sigma_sq: f64,
    beta: f64,
    exponent: f64,
    stop_below: f64,
    active: bool,
}

impl AnnealState {
    pub fn new(
        mode: AnnealMode,
        sigma_sq_opt: f64,
        beta0: f64,
        exponent: f64,
        stop_offset: f64,
    ) -> Result<Self> {
        if !(sigma_sq_opt > 0.0) {
            return Err(Error::Config(format!(
                "sigma_sq_opt must be positive, got {sigma_sq_opt}"
            )));
        }
        let stop_below = sigma_sq_opt - stop_offset;
        if mode != AnnealMode::Off {
            if !(stop_below > 0.0) {
                return Err(Error::Config(format!(
                    "annealing needs sigma_sq_opt > {stop_offset}, got {sigma_sq_opt}"
                )));
            }
            if !(beta0 > 0.0 && beta0 < 1.0) || !(exponent >= 1.0) {
                return Err(Error::Config(format!(
                    "annealing needs 0 < beta0 < 1 and exponent >= 1, got {beta0} and {exponent}"
                )));
            }
        }
        Ok(Self {
            mode,
            sigma_sq: sigma_sq_opt,
            beta: beta0,
            exponent,
            stop_below,
            active: mode != AnnealMode::Off,
        })
    }

    pub fn sigma_sq(&self) -> f64 {
        self.sigma_sq
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn is_active(&self) -> bool {
        self.active
    }

    /// Advances one epoch. Once σ² falls below `σ²_opt - offset` the schedule
    /// stops for good and σ² keeps its last value.
    pub fn advance(&mut self) {
        if !self.active {
            return;
        }
        if self.mode == AnnealMode::Geometric {
            self.beta = self.beta.powf(self.exponent);
        }
        self.sigma_sq *= self.beta;
        if self.sigma_sq < self.stop_below {
            self.active = false;
        }
    }
}
