//! Multistep exponential integrator in λ with a corrector step.
//!
//! Between grid points λ_a → λ_b the exact flow satisfies
//! `x_b = x_a + ∫ α(λ) ρ(λ) dλ` with `ρ = D − α·x`. The scheme interpolates
//! `ρ_j = D_j − α_j·x_a` through the retained history with Lagrange
//! polynomials and integrates against the weight `α_b·e^{λ−λ_b}`:
//!
//! `x_b = x_a + α_b Σ_j w_j ρ_j`, `w_j = ∫_{λ_a}^{λ_b} e^{λ−λ_b} ℓ_j(λ) dλ`.
//!
//! The predictor uses up to `order` past nodes; the corrector adds the fresh
//! evaluation at λ_b and the model is re-evaluated at the corrected state.

use gsteg_codec::NoiseTensor;

use crate::{alpha_of_lambda, sigma_of_lambda, DiffusionError, Result, ScheduleParams, ScoreModel};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    /// From t = T (noise) to t = 0 (data).
    Generate,
    /// From t = 0 back to t = T.
    Invert,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SolverConfig {
    pub order: usize,
    pub steps: usize,
    pub direction: Direction,
}

impl SolverConfig {
    pub fn new(order: usize, steps: usize, direction: Direction) -> Result<Self> {
        let cfg = SolverConfig { order, steps, direction };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(1..=3).contains(&self.order) {
            return Err(DiffusionError::InvalidConfig(format!("order must be 1, 2 or 3, got {}", self.order)));
        }
        if self.steps < self.order {
            return Err(DiffusionError::InvalidConfig(format!(
                "steps ({}) must be at least the order ({})",
                self.steps, self.order
            )));
        }
        Ok(())
    }

    pub fn with_direction(self, direction: Direction) -> Self {
        SolverConfig { direction, ..self }
    }
}

/// `∫_{−h}^0 e^τ τ^p dτ`.
fn exp_moment(p: usize, h: f64) -> f64 {
    if h.abs() < 1.0 {
        // Σ_k (−1)^{k+p} h^{k+p+1} / ((k+p+1)·k!)
        let mut sum = 0.0;
        let mut hk_over_fact = 1.0; // h^k / k!
        for k in 0..60 {
            let m = k + p;
            let sign = if m.is_multiple_of(2) { 1.0 } else { -1.0 };
            let term = sign * hk_over_fact * h.powi(p as i32 + 1) / (m + 1) as f64;
            sum += term;
            if term.abs() <= 1e-18 * sum.abs() {
                break;
            }
            hk_over_fact *= h / (k + 1) as f64;
        }
        sum
    } else {
        let e = (-h).exp();
        let mut r = 1.0 - e;
        for q in 1..=p {
            r = -e * (-h).powi(q as i32) - q as f64 * r;
        }
        r
    }
}

/// Weights `w_j` for Lagrange nodes `nodes` over the step λ_a → λ_b.
fn weights(nodes: &[f64], la: f64, lb: f64) -> Vec<f64> {
    let h = lb - la;
    let taus: Vec<f64> = nodes.iter().map(|n| n - lb).collect();
    (0..taus.len())
        .map(|j| {
            // Coefficients of ℓ_j(τ) in ascending powers.
            let mut c = vec![1.0];
            for (i, &ti) in taus.iter().enumerate() {
                if i == j {
                    continue;
                }
                let denom = taus[j] - ti;
                let mut next = vec![0.0; c.len() + 1];
                for (p, &cp) in c.iter().enumerate() {
                    next[p + 1] += cp / denom;
                    next[p] -= cp * ti / denom;
                }
                c = next;
            }
            c.iter().enumerate().map(|(p, cp)| cp * exp_moment(p, h)).sum()
        })
        .collect()
}

struct Node {
    lambda: f64,
    alpha: f64,
    d: Vec<f64>,
}

/// `x_a + α_b Σ_j w_j (D_j − α_j x_a)`.
fn combine(x: &[f64], nodes: &[&Node], la: f64, lb: f64, out: &mut [f64]) {
    let lambdas: Vec<f64> = nodes.iter().map(|n| n.lambda).collect();
    let w = weights(&lambdas, la, lb);
    let ab = alpha_of_lambda(lb);
    let c: f64 = nodes.iter().zip(&w).map(|(n, wj)| wj * n.alpha).sum();
    let n = out.len();
    let x = &x[..n];
    match nodes {
        [a] => {
            let da = &a.d[..n];
            for i in 0..n {
                out[i] = x[i] + ab * (w[0] * da[i] - c * x[i]);
            }
        }
        [a, b] => {
            let (da, db) = (&a.d[..n], &b.d[..n]);
            for i in 0..n {
                out[i] = x[i] + ab * (w[0] * da[i] + w[1] * db[i] - c * x[i]);
            }
        }
        [a, b, d] => {
            let (da, db, dd) = (&a.d[..n], &b.d[..n], &d.d[..n]);
            for i in 0..n {
                out[i] = x[i] + ab * (w[0] * da[i] + w[1] * db[i] + w[2] * dd[i] - c * x[i]);
            }
        }
        [a, b, d, e] => {
            let (da, db, dd, de) = (&a.d[..n], &b.d[..n], &d.d[..n], &e.d[..n]);
            for i in 0..n {
                out[i] = x[i] + ab * (w[0] * da[i] + w[1] * db[i] + w[2] * dd[i] + w[3] * de[i] - c * x[i]);
            }
        }
        _ => {
            for i in 0..n {
                let acc: f64 = nodes.iter().zip(&w).map(|(nd, wj)| wj * nd.d[i]).sum();
                out[i] = x[i] + ab * (acc - c * x[i]);
            }
        }
    }
}

fn integrate(model: &ScoreModel, grid: &[f64], state: &mut [f64], order: usize) -> Result<()> {
    let eval = |x: &[f64], l: f64, d: &mut Vec<f64>| {
        d.resize(x.len(), 0.0);
        model.data_pred_into(x, alpha_of_lambda(l), sigma_of_lambda(l), d);
    };
    let mut x = state.to_vec();
    let mut first = Vec::new();
    eval(&x, grid[0], &mut first);
    let mut history = vec![Node { lambda: grid[0], alpha: alpha_of_lambda(grid[0]), d: first }];
    let mut pred = vec![0.0; x.len()];
    let mut spare: Vec<Vec<f64>> = Vec::new();
    for (step, pair) in grid.windows(2).enumerate() {
        let (la, lb) = (pair[0], pair[1]);
        let k = order.min(history.len());
        let nodes: Vec<&Node> = history[history.len() - k..].iter().collect();
        combine(&x, &nodes, la, lb, &mut pred);
        let mut fresh = Node { lambda: lb, alpha: alpha_of_lambda(lb), d: spare.pop().unwrap_or_default() };
        eval(&pred, lb, &mut fresh.d);

        let kc = order.min(history.len());
        let mut nodes: Vec<&Node> = history[history.len() - kc..].iter().collect();
        nodes.push(&fresh);
        combine(&x, &nodes, la, lb, &mut pred);
        if pred.iter().any(|v| !v.is_finite()) {
            return Err(DiffusionError::Diverged { step });
        }
        std::mem::swap(&mut x, &mut pred);
        eval(&x, lb, &mut fresh.d);
        history.push(fresh);
        if history.len() > order {
            spare.push(history.remove(0).d);
        }
    }
    state.copy_from_slice(&x);
    Ok(())
}

fn check_inputs(model: &ScoreModel, sched: &ScheduleParams, len: usize, cfg: &SolverConfig) -> Result<()> {
    cfg.validate()?;
    model.validate()?;
    if cfg.steps != sched.steps {
        return Err(DiffusionError::InvalidConfig(format!(
            "solver steps ({}) differ from schedule steps ({})",
            cfg.steps, sched.steps
        )));
    }
    let d = model.dims();
    if len == 0 || !len.is_multiple_of(d) {
        return Err(DiffusionError::DimensionMismatch { expected: d, found: len });
    }
    Ok(())
}

const CHUNK_VALUES: usize = 4096;

fn run_batch(model: &ScoreModel, sched: &ScheduleParams, x: &[f64], cfg: &SolverConfig, want: Direction) -> Result<Vec<f64>> {
    if cfg.direction != want {
        return Err(DiffusionError::InvalidConfig(format!("expected direction {want:?}, got {:?}", cfg.direction)));
    }
    check_inputs(model, sched, x.len(), cfg)?;
    let mut grid = sched.lambda.clone();
    if want == Direction::Invert {
        grid.reverse();
    }
    let mut out = x.to_vec();
    // Samples are independent; integrating a few at a time keeps the
    // per-node buffers in cache.
    let d = model.dims();
    let chunk = (CHUNK_VALUES / d).max(1) * d;
    for part in out.chunks_mut(chunk) {
        integrate(model, &grid, part, cfg.order)?;
    }
    Ok(out)
}

/// Integrates a batch of samples (concatenated) from t = T to t = 0.
pub fn generate_batch(model: &ScoreModel, sched: &ScheduleParams, x_t: &[f64], cfg: &SolverConfig) -> Result<Vec<f64>> {
    run_batch(model, sched, x_t, cfg, Direction::Generate)
}

/// Integrates a batch of samples from t = 0 back to t = T on the reversed grid.
pub fn invert_batch(model: &ScoreModel, sched: &ScheduleParams, x_0: &[f64], cfg: &SolverConfig) -> Result<Vec<f64>> {
    run_batch(model, sched, x_0, cfg, Direction::Invert)
}

pub fn generate(model: &ScoreModel, sched: &ScheduleParams, x_t: &NoiseTensor, cfg: &SolverConfig) -> Result<NoiseTensor> {
    let out = generate_batch(model, sched, x_t.values(), cfg)?;
    Ok(NoiseTensor::new(x_t.shape(), out)?)
}

pub fn invert(model: &ScoreModel, sched: &ScheduleParams, x_0: &NoiseTensor, cfg: &SolverConfig) -> Result<NoiseTensor> {
    let out = invert_batch(model, sched, x_0.values(), cfg)?;
    Ok(NoiseTensor::new(x_0.shape(), out)?)
}

/// First-order integration on a fine uniform-λ grid between the schedule's
/// endpoints. Test oracle only.
pub fn reference_integrate(
    model: &ScoreModel,
    sched: &ScheduleParams,
    x: &[f64],
    direction: Direction,
    fine_steps: usize,
) -> Result<Vec<f64>> {
    if fine_steps < 10 * sched.steps {
        return Err(DiffusionError::InvalidConfig(format!(
            "reference needs at least {} fine steps, got {fine_steps}",
            10 * sched.steps
        )));
    }
    model.validate()?;
    let d = model.dims();
    if x.is_empty() || !x.len().is_multiple_of(d) {
        return Err(DiffusionError::DimensionMismatch { expected: d, found: x.len() });
    }
    let (l_start, l_end) = match direction {
        Direction::Generate => (sched.lambda[0], sched.lambda[sched.steps]),
        Direction::Invert => (sched.lambda[sched.steps], sched.lambda[0]),
    };
    let grid: Vec<f64> = (0..=fine_steps)
        .map(|k| if k == fine_steps { l_end } else { l_start + (l_end - l_start) * k as f64 / fine_steps as f64 })
        .collect();
    let mut out = x.to_vec();
    integrate_first_order(model, &grid, &mut out)?;
    Ok(out)
}

fn integrate_first_order(model: &ScoreModel, grid: &[f64], x: &mut [f64]) -> Result<()> {
    let mut d = vec![0.0; x.len()];
    for (step, pair) in grid.windows(2).enumerate() {
        let (la, lb) = (pair[0], pair[1]);
        let aa = alpha_of_lambda(la);
        model.data_pred_into(x, aa, sigma_of_lambda(la), &mut d);
        let node = Node { lambda: la, alpha: aa, d: std::mem::take(&mut d) };
        let mut next = vec![0.0; x.len()];
        combine(x, &[&node], la, lb, &mut next);
        if next.iter().any(|v| !v.is_finite()) {
            return Err(DiffusionError::Diverged { step });
        }
        x.copy_from_slice(&next);
        d = node.d;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exp_moment_series_and_recurrence_agree() {
        for p in 0..4 {
            for h in [0.999_999, -0.999_999] {
                let a = exp_moment(p, h);
                let b = exp_moment(p, h * (1.0 + 2e-6));
                assert!((a - b).abs() < 1e-5 * (1.0 + a.abs()), "p={p} h={h}: {a} {b}");
            }
        }
        assert!((exp_moment(0, 0.3) - (1.0 - (-0.3f64).exp())).abs() < 1e-16);
    }

    #[test]
    fn single_node_weight() {
        let w = weights(&[0.0], 0.0, 0.2);
        assert!((w[0] - (1.0 - (-0.2f64).exp())).abs() < 1e-16);
    }

    #[test]
    fn weights_integrate_polynomials_exactly() {
        // Σ w_j f(λ_j) equals ∫ e^{λ−λ_b} f(λ) dλ for quadratic f.
        let nodes = [-0.3, -0.1, 0.1];
        let (la, lb) = (0.1, 0.35);
        let w = weights(&nodes, la, lb);
        let f = |l: f64| 1.0 + 2.0 * l - 3.0 * l * l;
        let approx: f64 = nodes.iter().zip(&w).map(|(n, wj)| wj * f(*n)).sum();
        let n = 200_000;
        let dl = (lb - la) / n as f64;
        let exact: f64 = (0..n)
            .map(|i| {
                let l = la + (i as f64 + 0.5) * dl;
                (l - lb).exp() * f(l) * dl
            })
            .sum();
        assert!((approx - exact).abs() < 1e-10, "{approx} {exact}");
    }

    #[test]
    fn config_validation() {
        assert!(SolverConfig::new(3, 2, Direction::Generate).is_err());
        assert!(SolverConfig::new(4, 10, Direction::Generate).is_err());
        assert!(SolverConfig::new(3, 3, Direction::Invert).is_ok());
    }
}
