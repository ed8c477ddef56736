//! Central finite-difference verification of tape gradients.

use super::{Tape, Tensor, Var};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GradCheck {
    /// Perturbation `h` in `(f(θ+h) − f(θ−h)) / 2h`.
    pub step: f64,
    pub rel_tol: f64,
    pub abs_tol: f64,
}

impl Default for GradCheck {
    fn default() -> Self {
        Self {
            step: 1e-4,
            rel_tol: 1e-5,
            abs_tol: 1e-7,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GradCheckReport {
    /// Entries compared.
    pub checked: usize,
    /// Entries with `|a − n| > abs_tol + rel_tol·max(|a|, |n|)`.
    pub failures: usize,
    pub max_abs_err: f64,
    /// Largest `|a − n| / max(|a|, |n|)` among entries above `abs_tol`.
    pub max_rel_err: f64,
    /// `(parameter, flat index)` of the largest absolute error.
    pub worst: (usize, usize),
}

impl GradCheckReport {
    pub fn passed(&self) -> bool {
        self.failures == 0
    }
}

/// Compares the tape gradient of `build` with central differences for every
/// entry of every parameter.
///
/// `build` records a scalar loss on a fresh tape from parameter handles laid
/// out like `params`.
pub fn check_gradients<F>(build: F, params: &[Tensor], cfg: &GradCheck) -> Result<GradCheckReport>
where
    F: Fn(&mut Tape, &[Var]) -> Result<Var>,
{
    let eval = |values: &[Tensor]| -> Result<f64> {
        let mut tape = Tape::new();
        let bound = tape.params(values);
        let loss = build(&mut tape, &bound)?;
        Ok(tape.value(loss).get(0, 0))
    };

    let mut tape = Tape::new();
    let bound = tape.params(params);
    let loss = build(&mut tape, &bound)?;
    let grads = tape.backward(loss)?;

    let mut report = GradCheckReport {
        checked: 0,
        failures: 0,
        max_abs_err: 0.0,
        max_rel_err: 0.0,
        worst: (0, 0),
    };
    let mut probe = params.to_vec();
    for (p, var) in bound.iter().enumerate() {
        let analytic = grads
            .get(var)
            .ok_or_else(|| Error::Contract(format!("no gradient for parameter {p}")))?;
        for k in 0..params[p].len() {
            let orig = params[p].data()[k];
            probe[p].data_mut()[k] = orig + cfg.step;
            let up = eval(&probe)?;
            probe[p].data_mut()[k] = orig - cfg.step;
            let down = eval(&probe)?;
            probe[p].data_mut()[k] = orig;

            let numeric = (up - down) / (2.0 * cfg.step);
            let a = analytic.data()[k];
            let err = (a - numeric).abs();
            let scale = a.abs().max(numeric.abs());
            report.checked += 1;
            if err > cfg.abs_tol + cfg.rel_tol * scale {
                report.failures += 1;
            }
            if err > report.max_abs_err {
                report.max_abs_err = err;
                report.worst = (p, k);
            }
            if err > cfg.abs_tol && scale > 0.0 {
                report.max_rel_err = report.max_rel_err.max(err / scale);
            }
        }
    }
    Ok(report)
}
