//! Optional nonlinear refinement of band positions and widths.
//!
//! Bounded Levenberg-Marquardt over the Gaussian centres and FWHMs. The
//! amplitudes are not LM parameters: at every trial shape they are re-solved
//! by NNLS (variable projection), so they stay non-negative and optimal for
//! the current shapes.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use super::{finish, fit_window, solve_coefficients, ComponentModel, DecompositionResult, FitWindow};
use crate::error::{Error, Result};
use crate::types::Spectrum;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RefineBounds {
    /// Each centre may move by at most this much, nm.
    pub center_halfwidth_nm: f64,
    /// Allowed FWHM range as multiples of the starting width.
    pub fwhm_factor: (f64, f64),
    pub max_iterations: usize,
}

impl Default for RefineBounds {
    fn default() -> Self {
        Self {
            center_halfwidth_nm: 10.0,
            fwhm_factor: (0.5, 2.0),
            max_iterations: 200,
        }
    }
}

impl RefineBounds {
    /// Zero-width bounds: shapes stay fixed and only the amplitudes are re-fit.
    pub fn fixed() -> Self {
        Self {
            center_halfwidth_nm: 0.0,
            fwhm_factor: (1.0, 1.0),
            max_iterations: 200,
        }
    }
}

/// Outcome of a refinement run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RefinedShape {
    pub centers_nm: Vec<f64>,
    pub fwhms_nm: Vec<f64>,
    pub converged: bool,
    pub iterations: usize,
    /// Sum of squared residuals of the starting fit (unmasked points).
    pub initial_objective: f64,
    pub final_objective: f64,
}

impl RefinedShape {
    /// `model` with the refined band shapes substituted.
    pub fn apply_to(&self, model: &ComponentModel) -> ComponentModel {
        let mut m = model.clone();
        for (b, (c, w)) in m.bands.iter_mut().zip(self.centers_nm.iter().zip(&self.fwhms_nm)) {
            b.center_nm = *c;
            b.fwhm_nm = *w;
        }
        m
    }
}

struct Evaluation {
    sse: f64,
    residual: DVector<f64>,
    coefficients: Vec<f64>,
    condition: f64,
    cols: Vec<Vec<f64>>,
}

struct Problem<'a> {
    model: &'a ComponentModel,
    win: &'a FitWindow,
    names: Vec<String>,
}

impl Problem<'_> {
    fn shaped(&self, theta: &[f64]) -> ComponentModel {
        let mut m = self.model.clone();
        for (i, b) in m.bands.iter_mut().enumerate() {
            b.center_nm = theta[2 * i];
            b.fwhm_nm = theta[2 * i + 1];
        }
        m
    }

    fn evaluate(&self, theta: &[f64]) -> Result<Evaluation> {
        let cols = self.shaped(theta).components(&self.win.grid)?;
        let (coefficients, condition) = solve_coefficients(&cols, self.win, &self.names)?;
        let residual = DVector::from_iterator(
            self.win.unmasked.len(),
            self.win.unmasked.iter().map(|&i| {
                self.win.target[i] - cols.iter().zip(&coefficients).map(|(c, x)| x * c[i]).sum::<f64>()
            }),
        );
        Ok(Evaluation {
            sse: residual.norm_squared(),
            residual,
            coefficients,
            condition,
            cols,
        })
    }
}

/// Bounded damped least-squares refinement starting from `initial`.
///
/// The objective never increases relative to the starting fit. If the
/// iteration budget runs out before convergence, `initial` is returned with
/// a refinement record marked `converged: false`.
pub fn refine_fit(
    s: &Spectrum,
    model: &ComponentModel,
    initial: &DecompositionResult,
    bounds: &RefineBounds,
) -> Result<DecompositionResult> {
    if !initial.converged {
        return Err(Error::invalid("refinement needs a converged initial fit"));
    }
    let (flo, fhi) = bounds.fwhm_factor;
    if !(bounds.center_halfwidth_nm >= 0.0 && flo > 0.0 && flo <= 1.0 && fhi >= 1.0) {
        return Err(Error::invalid(format!("invalid refinement bounds {bounds:?}")));
    }
    let win = fit_window(s, model)?;
    let problem = Problem {
        model,
        win: &win,
        names: model.component_names(),
    };

    let theta0: Vec<f64> = model.bands.iter().flat_map(|b| [b.center_nm, b.fwhm_nm]).collect();
    let (lower, upper): (Vec<f64>, Vec<f64>) = model
        .bands
        .iter()
        .flat_map(|b| {
            [
                (b.center_nm - bounds.center_halfwidth_nm, b.center_nm + bounds.center_halfwidth_nm),
                (b.fwhm_nm * flo, b.fwhm_nm * fhi),
            ]
        })
        .unzip();
    let free: Vec<usize> = (0..theta0.len()).filter(|&i| upper[i] > lower[i]).collect();

    let initial_objective: f64 = win
        .unmasked
        .iter()
        .map(|&i| {
            let w = win.grid.values()[i];
            initial
                .residual
                .iter()
                .find(|(x, _)| *x == w)
                .map_or(f64::INFINITY, |(_, r)| r * r)
        })
        .sum();

    let split = |theta: &[f64]| -> (Vec<f64>, Vec<f64>) {
        (
            theta.iter().step_by(2).copied().collect(),
            theta.iter().skip(1).step_by(2).copied().collect(),
        )
    };

    let mut theta = theta0.clone();
    let mut current = problem.evaluate(&theta)?;
    let target_norm = win.unmasked.iter().map(|&i| win.target[i].powi(2)).sum::<f64>();
    let floor = (f64::EPSILON * f64::EPSILON) * target_norm;

    let mut converged = free.is_empty() || current.sse <= floor;
    let mut iterations = 0;
    let mut mu = 1e-3;

    while !converged {
        if iterations >= bounds.max_iterations {
            break;
        }
        iterations += 1;

        // central-difference Jacobian of the residual w.r.t. free parameters
        let m = current.residual.len();
        let mut jac = DMatrix::zeros(m, free.len());
        for (col, &p) in free.iter().enumerate() {
            let h = 1e-6 * theta[p].abs().max(1.0);
            let up = (theta[p] + h).min(upper[p]);
            let dn = (theta[p] - h).max(lower[p]);
            let mut t_up = theta.clone();
            t_up[p] = up;
            let mut t_dn = theta.clone();
            t_dn[p] = dn;
            let r_up = problem.evaluate(&t_up)?.residual;
            let r_dn = problem.evaluate(&t_dn)?.residual;
            jac.set_column(col, &((r_up - r_dn) / (up - dn)));
        }
        // parameters pinned at a bound whose descent direction points outward
        // are held for this iteration
        let full_grad = jac.transpose() * &current.residual;
        let step_set: Vec<usize> = (0..free.len())
            .filter(|&k| {
                let p = free[k];
                let descent = -full_grad[k];
                !((theta[p] <= lower[p] && descent < 0.0) || (theta[p] >= upper[p] && descent > 0.0))
            })
            .collect();
        if step_set.is_empty() {
            converged = true;
            break;
        }
        let jac = jac.select_columns(&step_set);
        let jt = jac.transpose();
        let hess = &jt * &jac;
        let grad = &jt * &current.residual;

        let mut accepted = false;
        while !accepted {
            let mut damped = hess.clone();
            for i in 0..step_set.len() {
                damped[(i, i)] += mu * hess[(i, i)].max(1e-12);
            }
            let Some(step) = damped.lu().solve(&(-&grad)) else {
                mu *= 4.0;
                if mu > 1e12 {
                    break;
                }
                continue;
            };
            let mut trial = theta.clone();
            for (k, &j) in step_set.iter().enumerate() {
                let p = free[j];
                trial[p] = (theta[p] + step[k]).clamp(lower[p], upper[p]);
            }
            let moved = trial.iter().zip(&theta).any(|(a, b)| a != b);
            let candidate = if moved { problem.evaluate(&trial).ok() } else { None };
            match candidate {
                Some(c) if c.sse < current.sse => {
                    let rel = (current.sse - c.sse) / current.sse;
                    theta = trial;
                    current = c;
                    mu = (mu / 3.0).max(1e-15);
                    accepted = true;
                    if rel < 1e-12 || current.sse <= floor {
                        converged = true;
                    }
                }
                _ => {
                    mu *= 4.0;
                    if mu > 1e12 {
                        break;
                    }
                }
            }
        }
        if !accepted {
            // no descent direction left within the bounds: stationary point
            converged = true;
        }
    }

    if !converged {
        let (centers_nm, fwhms_nm) = split(&theta0);
        let mut out = initial.clone();
        out.refined_shape = Some(RefinedShape {
            centers_nm,
            fwhms_nm,
            converged: false,
            iterations,
            initial_objective,
            final_objective: initial_objective,
        });
        return Ok(out);
    }

    if current.sse > initial_objective {
        // starting point was not the NNLS optimum for this model; keep the better one
        let mut out = initial.clone();
        let (centers_nm, fwhms_nm) = split(&theta0);
        out.refined_shape = Some(RefinedShape {
            centers_nm,
            fwhms_nm,
            converged: true,
            iterations,
            initial_objective,
            final_objective: initial_objective,
        });
        return Ok(out);
    }

    let (centers_nm, fwhms_nm) = split(&theta);
    let record = RefinedShape {
        centers_nm,
        fwhms_nm,
        converged: true,
        iterations,
        initial_objective,
        final_objective: current.sse,
    };
    finish(win, &current.cols, current.coefficients, current.condition, Some(record))
}
