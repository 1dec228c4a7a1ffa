use super::mlp::{Mlp, MlpGrads};

/// Per-parameter adaptive moment estimation with bias correction.
#[derive(Debug, Clone, PartialEq)]
pub struct Adam {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    t: i32,
    m: Vec<f64>,
    v: Vec<f64>,
}

impl Adam {
    pub fn new(net: &Mlp, lr: f64) -> Self {
        let n = net.parameter_count();
        Self {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            t: 0,
            m: vec![0.0; n],
            v: vec![0.0; n],
        }
    }

    pub fn steps(&self) -> i32 {
        self.t
    }

    /// One descent step `θ ← θ − lr · m̂ / (√v̂ + ε)`.
    pub fn step(&mut self, net: &mut Mlp, grads: &MlpGrads) {
        self.t += 1;
        let c1 = 1.0 - self.beta1.powi(self.t);
        let c2 = 1.0 - self.beta2.powi(self.t);
        let g = grads.flatten();
        debug_assert_eq!(g.len(), self.m.len());
        for (((p, g), m), v) in net
            .parameters_mut()
            .zip(g)
            .zip(self.m.iter_mut())
            .zip(self.v.iter_mut())
        {
            *m = self.beta1 * *m + (1.0 - self.beta1) * g;
            *v = self.beta2 * *v + (1.0 - self.beta2) * g * g;
            *p -= self.lr * (*m / c1) / ((*v / c2).sqrt() + self.eps);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::td3::mlp::OutputActivation;

    #[test]
    fn zero_gradient_leaves_parameters() {
        let mut net = Mlp::zeros(&[2, 3, 1], OutputActivation::Identity);
        net.layers[0].w[[0, 0]] = 0.7;
        let before = net.clone();
        let mut opt = Adam::new(&net, 1e-3);
        let g = net.zero_grads();
        opt.step(&mut net, &g);
        assert_eq!(net, before);
    }

    #[test]
    fn first_step_moves_by_lr() {
        let mut net = Mlp::zeros(&[1, 1], OutputActivation::Identity);
        let mut opt = Adam::new(&net, 1e-3);
        let mut g = net.zero_grads();
        g.layers[0].w[[0, 0]] = 5.0;
        opt.step(&mut net, &g);
        assert!((net.layers[0].w[[0, 0]] + 1e-3).abs() < 1e-9);
    }
}
