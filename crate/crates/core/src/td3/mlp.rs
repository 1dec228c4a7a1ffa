//! Fully connected networks with rectifier hidden layers and hand-written
//! reverse-mode gradients.

use ndarray::{Array1, Array2, ArrayView2, Axis};
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::Td3Error;

/// Output squashing of the last layer.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputActivation {
    Identity,
    /// `low + (high − low) · sigmoid(z)`.
    Bounded { low: f64, high: f64 },
}

/// Affine layer `y = x·W + b`, `W` stored `inputs × outputs`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dense {
    pub w: Array2<f64>,
    pub b: Array1<f64>,
}

impl Dense {
    fn zeros(inputs: usize, outputs: usize) -> Self {
        Self {
            w: Array2::zeros((inputs, outputs)),
            b: Array1::zeros(outputs),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    pub layers: Vec<Dense>,
    pub output: OutputActivation,
}

/// Parameter gradients, shaped like the network's layers.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpGrads {
    pub layers: Vec<Dense>,
}

impl MlpGrads {
    pub fn scale(&mut self, factor: f64) {
        for l in &mut self.layers {
            l.w *= factor;
            l.b *= factor;
        }
    }

    /// Every parameter gradient, flattened layer by layer (weights then biases).
    pub fn flatten(&self) -> Vec<f64> {
        self.layers
            .iter()
            .flat_map(|l| l.w.iter().chain(l.b.iter()).copied())
            .collect()
    }
}

/// Intermediate values of a forward pass needed by [`Mlp::backward`].
#[derive(Debug, Clone)]
pub struct ForwardCache {
    /// Input of every layer.
    inputs: Vec<Array2<f64>>,
    /// Pre-activation of every layer.
    pre: Vec<Array2<f64>>,
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

impl Mlp {
    /// Weights and biases drawn from `U(−1/√fan_in, 1/√fan_in)`.
    pub fn new<R: Rng + ?Sized>(sizes: &[usize], output: OutputActivation, rng: &mut R) -> Self {
        assert!(sizes.len() >= 2, "a network needs at least input and output sizes");
        let layers = sizes
            .windows(2)
            .map(|w| {
                let bound = 1.0 / (w[0] as f64).sqrt();
                let mut draw = || rng.random_range(-bound..bound);
                Dense {
                    w: Array2::from_shape_simple_fn((w[0], w[1]), &mut draw),
                    b: Array1::from_shape_simple_fn(w[1], &mut draw),
                }
            })
            .collect();
        Self { layers, output }
    }

    /// All-zero parameters.
    pub fn zeros(sizes: &[usize], output: OutputActivation) -> Self {
        Self {
            layers: sizes.windows(2).map(|w| Dense::zeros(w[0], w[1])).collect(),
            output,
        }
    }

    pub fn sizes(&self) -> Vec<usize> {
        let mut s: Vec<usize> = self.layers.iter().map(|l| l.w.nrows()).collect();
        s.extend(self.layers.last().map(|l| l.w.ncols()));
        s
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].w.nrows()
    }

    pub fn output_dim(&self) -> usize {
        self.layers[self.layers.len() - 1].w.ncols()
    }

    pub fn parameter_count(&self) -> usize {
        self.layers.iter().map(|l| l.w.len() + l.b.len()).sum()
    }

    pub fn zero_grads(&self) -> MlpGrads {
        MlpGrads {
            layers: self
                .layers
                .iter()
                .map(|l| Dense::zeros(l.w.nrows(), l.w.ncols()))
                .collect(),
        }
    }

    fn check_input(&self, x: &ArrayView2<f64>) -> Result<(), Td3Error> {
        if x.ncols() != self.input_dim() {
            return Err(Td3Error::Shape {
                what: "network input",
                expected: self.input_dim(),
                got: x.ncols(),
            });
        }
        Ok(())
    }

    fn activate_output(&self, z: &Array2<f64>) -> Array2<f64> {
        match self.output {
            OutputActivation::Identity => z.clone(),
            OutputActivation::Bounded { low, high } => z.mapv(|v| low + (high - low) * sigmoid(v)),
        }
    }

    /// Forward pass over a batch (one row per sample).
    pub fn forward(&self, x: ArrayView2<f64>) -> Result<Array2<f64>, Td3Error> {
        Ok(self.forward_cached(x)?.0)
    }

    /// Forward pass for a single input vector.
    pub fn forward_one(&self, x: &[f64]) -> Result<Vec<f64>, Td3Error> {
        let view = ArrayView2::from_shape((1, x.len()), x).expect("row vector");
        Ok(self.forward(view)?.row(0).to_vec())
    }

    pub fn forward_cached(
        &self,
        x: ArrayView2<f64>,
    ) -> Result<(Array2<f64>, ForwardCache), Td3Error> {
        self.check_input(&x)?;
        let mut inputs = Vec::with_capacity(self.layers.len());
        let mut pre = Vec::with_capacity(self.layers.len());
        let mut h = x.to_owned();
        let last = self.layers.len() - 1;
        for (i, layer) in self.layers.iter().enumerate() {
            let z = h.dot(&layer.w) + &layer.b;
            let next = if i == last {
                self.activate_output(&z)
            } else {
                z.mapv(|v| v.max(0.0))
            };
            inputs.push(h);
            pre.push(z);
            h = next;
        }
        Ok((h, ForwardCache { inputs, pre }))
    }

    /// Reverse-mode pass: given `∂L/∂output` per sample, returns the
    /// parameter gradients (summed over the batch) and `∂L/∂input`.
    pub fn backward(
        &self,
        cache: &ForwardCache,
        upstream: ArrayView2<f64>,
    ) -> Result<(MlpGrads, Array2<f64>), Td3Error> {
        let batch = cache.inputs[0].nrows();
        if upstream.dim() != (batch, self.output_dim()) {
            return Err(Td3Error::Shape {
                what: "upstream gradient",
                expected: self.output_dim(),
                got: upstream.ncols(),
            });
        }
        let last = self.layers.len() - 1;
        let mut delta = match self.output {
            OutputActivation::Identity => upstream.to_owned(),
            OutputActivation::Bounded { low, high } => {
                let slope = cache.pre[last].mapv(|z| {
                    let s = sigmoid(z);
                    (high - low) * s * (1.0 - s)
                });
                &upstream * &slope
            }
        };
        let mut grads = Vec::with_capacity(self.layers.len());
        for i in (0..self.layers.len()).rev() {
            let layer = &self.layers[i];
            let dw = cache.inputs[i].t().dot(&delta);
            let db = delta.sum_axis(Axis(0));
            let dh = delta.dot(&layer.w.t());
            grads.push(Dense { w: dw, b: db });
            delta = if i > 0 {
                let mask = cache.pre[i - 1].mapv(|z| if z > 0.0 { 1.0 } else { 0.0 });
                dh * &mask
            } else {
                dh
            };
        }
        grads.reverse();
        Ok((MlpGrads { layers: grads }, delta))
    }

    /// `self ← rho · self + (1 − rho) · online`.
    pub fn soft_update_from(&mut self, online: &Mlp, rho: f64) {
        for (t, o) in self.layers.iter_mut().zip(&online.layers) {
            t.w.zip_mut_with(&o.w, |t, &o| *t = rho * *t + (1.0 - rho) * o);
            t.b.zip_mut_with(&o.b, |t, &o| *t = rho * *t + (1.0 - rho) * o);
        }
    }

    /// Mutable access to every parameter, in [`MlpGrads::flatten`] order.
    pub fn parameters_mut(&mut self) -> impl Iterator<Item = &mut f64> {
        self.layers
            .iter_mut()
            .flat_map(|l| l.w.iter_mut().chain(l.b.iter_mut()))
    }
}

/// Serialized weights: layer sizes header plus row-major weight matrices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MlpRecord {
    pub sizes: Vec<usize>,
    pub output: OutputActivation,
    pub layers: Vec<LayerRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LayerRecord {
    /// `inputs` rows of `outputs` entries.
    pub w: Vec<Vec<f64>>,
    pub b: Vec<f64>,
}

impl From<&Mlp> for MlpRecord {
    fn from(net: &Mlp) -> Self {
        Self {
            sizes: net.sizes(),
            output: net.output,
            layers: net
                .layers
                .iter()
                .map(|l| LayerRecord {
                    w: l.w.rows().into_iter().map(|r| r.to_vec()).collect(),
                    b: l.b.to_vec(),
                })
                .collect(),
        }
    }
}

impl TryFrom<MlpRecord> for Mlp {
    type Error = Td3Error;

    fn try_from(rec: MlpRecord) -> Result<Self, Td3Error> {
        if rec.sizes.len() != rec.layers.len() + 1 {
            return Err(Td3Error::Checkpoint(format!(
                "{} layer sizes for {} layers",
                rec.sizes.len(),
                rec.layers.len()
            )));
        }
        let mut layers = Vec::with_capacity(rec.layers.len());
        for (i, l) in rec.layers.into_iter().enumerate() {
            let (rows, cols) = (rec.sizes[i], rec.sizes[i + 1]);
            if l.w.len() != rows || l.w.iter().any(|r| r.len() != cols) || l.b.len() != cols {
                return Err(Td3Error::Checkpoint(format!(
                    "layer {i} does not match declared shape {rows}×{cols}"
                )));
            }
            let flat: Vec<f64> = l.w.into_iter().flatten().collect();
            layers.push(Dense {
                w: Array2::from_shape_vec((rows, cols), flat).expect("checked shape"),
                b: Array1::from(l.b),
            });
        }
        Ok(Mlp { layers, output: rec.output })
    }
}
