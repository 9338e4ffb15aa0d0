use ndarray::{Array2, Zip};

use crate::registry::Registry;

/// Hyper-parameters shared by the optimizer factories.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OptimizerParams {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub rho: f64,
    pub eps: f64,
}

impl Default for OptimizerParams {
    fn default() -> Self {
        OptimizerParams {
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            rho: 0.9,
            eps: 1e-8,
        }
    }
}

pub trait Optimizer {
    fn name(&self) -> &'static str;
    fn step(&mut self, params: &mut [Array2<f64>], grads: &[Array2<f64>]);
}

fn zeros_like(params: &[Array2<f64>]) -> Vec<Array2<f64>> {
    params.iter().map(|p| Array2::zeros(p.dim())).collect()
}

pub struct Adam {
    p: OptimizerParams,
    t: i32,
    m: Vec<Array2<f64>>,
    v: Vec<Array2<f64>>,
}

impl Adam {
    pub fn new(p: OptimizerParams) -> Self {
        Adam {
            p,
            t: 0,
            m: Vec::new(),
            v: Vec::new(),
        }
    }
}

impl Optimizer for Adam {
    fn name(&self) -> &'static str {
        "adam"
    }

    fn step(&mut self, params: &mut [Array2<f64>], grads: &[Array2<f64>]) {
        if self.m.is_empty() {
            self.m = zeros_like(params);
            self.v = zeros_like(params);
        }
        self.t += 1;
        let OptimizerParams {
            learning_rate: lr,
            beta1: b1,
            beta2: b2,
            eps,
            ..
        } = self.p;
        let c1 = 1.0 - b1.powi(self.t);
        let c2 = 1.0 - b2.powi(self.t);
        for (((w, g), m), v) in params.iter_mut().zip(grads).zip(&mut self.m).zip(&mut self.v) {
            Zip::from(w).and(g).and(m).and(v).for_each(|w, &g, m, v| {
                *m = b1 * *m + (1.0 - b1) * g;
                *v = b2 * *v + (1.0 - b2) * g * g;
                *w -= lr * (*m / c1) / ((*v / c2).sqrt() + eps);
            });
        }
    }
}

pub struct RmsProp {
    p: OptimizerParams,
    s: Vec<Array2<f64>>,
}

impl RmsProp {
    pub fn new(p: OptimizerParams) -> Self {
        RmsProp { p, s: Vec::new() }
    }
}

impl Optimizer for RmsProp {
    fn name(&self) -> &'static str {
        "rmsprop"
    }

    fn step(&mut self, params: &mut [Array2<f64>], grads: &[Array2<f64>]) {
        if self.s.is_empty() {
            self.s = zeros_like(params);
        }
        let OptimizerParams {
            learning_rate: lr,
            rho,
            eps,
            ..
        } = self.p;
        for ((w, g), s) in params.iter_mut().zip(grads).zip(&mut self.s) {
            Zip::from(w).and(g).and(s).for_each(|w, &g, s| {
                *s = rho * *s + (1.0 - rho) * g * g;
                *w -= lr * g / (s.sqrt() + eps);
            });
        }
    }
}

pub fn optimizers() -> Registry<dyn Optimizer, OptimizerParams> {
    let mut r: Registry<dyn Optimizer, OptimizerParams> = Registry::new("optimizer");
    r.register("adam", |p| Box::new(Adam::new(*p)));
    r.register("rmsprop", |p| Box::new(RmsProp::new(*p)));
    r
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn adam_first_step_moves_by_learning_rate() {
        // with bias correction the first Adam step is lr * sign(g)
        let mut w = vec![ndarray::arr2(&[[1.0, -2.0]])];
        let g = vec![ndarray::arr2(&[[0.3, -5.0]])];
        let mut opt = optimizers().create("adam", &OptimizerParams::default()).unwrap();
        opt.step(&mut w, &g);
        assert!((w[0][[0, 0]] - (1.0 - 1e-3)).abs() < 1e-10);
        assert!((w[0][[0, 1]] - (-2.0 + 1e-3)).abs() < 1e-10);
    }

    #[test]
    fn rmsprop_first_step() {
        let mut w = vec![ndarray::arr2(&[[0.0]])];
        let g = vec![ndarray::arr2(&[[2.0]])];
        let mut opt = optimizers().create("rmsprop", &OptimizerParams::default()).unwrap();
        opt.step(&mut w, &g);
        // s = 0.1 * 4 = 0.4, step = 1e-3 * 2 / sqrt(0.4)
        let expect = -1e-3 * 2.0 / (0.4f64.sqrt() + 1e-8);
        assert!((w[0][[0, 0]] - expect).abs() < 1e-15);
        assert!(optimizers().create("sgd", &OptimizerParams::default()).is_err());
    }
}
