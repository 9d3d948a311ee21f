//! Projected BFGS with forward-difference gradients, used by the transcription solver.

use nalgebra::{DMatrix, DVector};

use crate::error::Result;

#[derive(Debug, Clone, Copy)]
pub(crate) struct BfgsOptions {
    pub max_iterations: usize,
    pub fd_step: f64,
    /// Stop after three consecutive iterations improving by less than this.
    pub tolerance: f64,
    /// Diagonal of the initial inverse Hessian.
    pub initial_inverse_scale: f64,
}

#[derive(Debug, Clone)]
pub(crate) struct BfgsOutcome {
    pub x: Vec<f64>,
    pub value: f64,
    pub grad_norm: f64,
    pub history: Vec<f64>,
}

fn fd_gradient<F>(f: &F, x: &[f64], fx: f64, step: f64) -> Result<DVector<f64>>
where
    F: Fn(&[f64]) -> Result<f64>,
{
    let mut g = DVector::zeros(x.len());
    let mut probe = x.to_vec();
    for i in 0..x.len() {
        probe[i] = x[i] + step;
        g[i] = match f(&probe) {
            Ok(fp) => (fp - fx) / step,
            Err(_) => {
                probe[i] = x[i] - step;
                (fx - f(&probe)?) / step
            }
        };
        probe[i] = x[i];
    }
    Ok(g)
}

pub(crate) fn minimize<F, P>(f: F, project: P, x0: Vec<f64>, opts: BfgsOptions) -> Result<BfgsOutcome>
where
    F: Fn(&[f64]) -> Result<f64>,
    P: Fn(&mut [f64]),
{
    let n = x0.len();
    let mut x = DVector::from_vec(x0);
    project(x.as_mut_slice());
    let mut fx = f(x.as_slice())?;
    let mut g = fd_gradient(&f, x.as_slice(), fx, opts.fd_step)?;
    let identity = DMatrix::<f64>::identity(n, n) * opts.initial_inverse_scale;
    let mut h_inv = identity.clone();
    let mut fresh = true;
    let mut history = vec![fx];
    let mut stalls = 0;

    for _ in 0..opts.max_iterations {
        if g.norm() < 1e-12 {
            break;
        }
        let mut d = -(&h_inv * &g);
        if g.dot(&d) >= 0.0 {
            h_inv = identity.clone();
            fresh = true;
            d = -(&h_inv * &g);
        }
        // backtracking Armijo on the projected arc
        let mut alpha = 1.0;
        let mut accepted = None;
        for _ in 0..40 {
            let mut trial = &x + alpha * &d;
            project(trial.as_mut_slice());
            if let Ok(ft) = f(trial.as_slice()) {
                let decrease = g.dot(&(&trial - &x));
                if ft <= fx + 1e-4 * decrease && ft <= fx {
                    accepted = Some((trial, ft));
                    break;
                }
            }
            alpha *= 0.5;
        }
        let Some((x_new, f_new)) = accepted else {
            if fresh {
                break;
            }
            h_inv = identity.clone();
            fresh = true;
            continue;
        };
        let g_new = fd_gradient(&f, x_new.as_slice(), f_new, opts.fd_step)?;
        let s = &x_new - &x;
        let y = &g_new - &g;
        let sy = s.dot(&y);
        if sy > 1e-14 * s.norm() * y.norm() && sy > 0.0 {
            if fresh {
                // rescale the initial guess before the first update
                h_inv = DMatrix::identity(n, n) * (sy / y.dot(&y));
            }
            let rho = 1.0 / sy;
            let hy = &h_inv * &y;
            let yhy = y.dot(&hy);
            h_inv += (rho * rho * yhy + rho) * (&s * s.transpose()) - rho * (&hy * s.transpose() + &s * hy.transpose());
            fresh = false;
        }
        let improvement = fx - f_new;
        x = x_new;
        fx = f_new;
        g = g_new;
        history.push(fx);
        if improvement < opts.tolerance * (1.0 + fx.abs()) {
            stalls += 1;
            if stalls >= 3 {
                break;
            }
        } else {
            stalls = 0;
        }
    }
    Ok(BfgsOutcome { grad_norm: g.norm(), x: x.as_slice().to_vec(), value: fx, history })
}
