use ndarray::{Array1, Array2, ArrayView2, Axis};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::dataset::io::{Container, Persist};
use crate::error::{Error, Result};

/// Feed-forward encoder: input standardization, tanh hidden layers and an
/// identity output layer.
#[derive(Debug, Clone, PartialEq)]
pub struct EncoderStack {
    pub input_mean: Array1<f64>,
    pub input_scale: Array1<f64>,
    /// `in × out` per layer.
    pub weights: Vec<Array2<f64>>,
    pub biases: Vec<Array1<f64>>,
}

/// Parameter gradients, layer by layer.
#[derive(Debug, Clone)]
pub struct EncoderGrads {
    pub weights: Vec<Array2<f64>>,
    pub biases: Vec<Array1<f64>>,
}

impl EncoderStack {
    /// Random layers with weights `N(0, 1/fan_in)` and zero biases.
    pub fn init(sizes: &[usize], rng: &mut impl Rng) -> Result<Self> {
        if sizes.len() < 2 || sizes.contains(&0) {
            return Err(Error::Config(format!("invalid encoder layer sizes {sizes:?}")));
        }
        let mut weights = Vec::new();
        let mut biases = Vec::new();
        for w in sizes.windows(2) {
            let scale = (1.0 / w[0] as f64).sqrt();
            weights.push(Array2::from_shape_simple_fn((w[0], w[1]), || {
                scale * rng.sample::<f64, _>(StandardNormal)
            }));
            biases.push(Array1::zeros(w[1]));
        }
        Ok(EncoderStack {
            input_mean: Array1::zeros(sizes[0]),
            input_scale: Array1::ones(sizes[0]),
            weights,
            biases,
        })
    }

    /// Sets input standardization from training data; constant columns keep
    /// unit scale.
    pub fn standardize_on(&mut self, x: ArrayView2<f64>) {
        self.input_mean = x.mean_axis(Axis(0)).unwrap_or_else(|| Array1::zeros(x.ncols()));
        self.input_scale = x
            .std_axis(Axis(0), 0.0)
            .mapv(|s| if s > 1e-12 { 1.0 / s } else { 1.0 });
    }

    pub fn sizes(&self) -> Vec<usize> {
        let mut s = vec![self.input_dim()];
        s.extend(self.weights.iter().map(|w| w.ncols()));
        s
    }

    pub fn input_dim(&self) -> usize {
        self.weights[0].nrows()
    }

    pub fn output_dim(&self) -> usize {
        self.weights.last().expect("at least one layer").ncols()
    }

    fn check(&self, x: ArrayView2<f64>) -> Result<()> {
        if x.ncols() != self.input_dim() {
            return Err(Error::DimensionMismatch {
                context: "encoder input",
                expected: self.input_dim(),
                found: x.ncols(),
            });
        }
        Ok(())
    }

    /// `x` with the stored input standardization applied.
    pub fn standardize(&self, x: ArrayView2<f64>) -> Result<Array2<f64>> {
        self.check(x)?;
        Ok((&x - &self.input_mean.view().insert_axis(Axis(0))) * &self.input_scale.view().insert_axis(Axis(0)))
    }

    /// Activations of every layer; the first entry is the standardized
    /// input, the last the output.
    pub fn forward_cached(&self, x: ArrayView2<f64>) -> Result<Vec<Array2<f64>>> {
        Ok(self.forward_standardized(self.standardize(x)?))
    }

    /// Like [`EncoderStack::forward_cached`] for input that is already
    /// standardized; it becomes the first entry.
    pub fn forward_standardized(&self, input: Array2<f64>) -> Vec<Array2<f64>> {
        let mut acts = Vec::with_capacity(self.weights.len() + 1);
        acts.push(input);
        let last = self.weights.len() - 1;
        for (l, (w, b)) in self.weights.iter().zip(&self.biases).enumerate() {
            let mut z = acts[l].dot(w) + b;
            if l < last {
                z.mapv_inplace(f64::tanh);
            }
            acts.push(z);
        }
        acts
    }

    pub fn forward(&self, x: ArrayView2<f64>) -> Result<Array2<f64>> {
        Ok(self.forward_cached(x)?.pop().expect("output layer"))
    }

    /// Backpropagates `grad_out` (gradient w.r.t. the output) through the
    /// activations returned by [`EncoderStack::forward_cached`].
    pub fn backward(&self, acts: &[Array2<f64>], grad_out: &Array2<f64>) -> EncoderGrads {
        let n_layers = self.weights.len();
        let mut gw = vec![Array2::zeros((0, 0)); n_layers];
        let mut gb = vec![Array1::zeros(0); n_layers];
        let mut delta = grad_out.clone();
        for l in (0..n_layers).rev() {
            gw[l] = acts[l].t().dot(&delta);
            gb[l] = delta.sum_axis(Axis(0));
            if l > 0 {
                let mut back = delta.dot(&self.weights[l].t());
                back.zip_mut_with(&acts[l], |g, &a| *g *= 1.0 - a * a);
                delta = back;
            }
        }
        EncoderGrads {
            weights: gw,
            biases: gb,
        }
    }

    pub fn is_finite(&self) -> bool {
        self.weights.iter().all(|w| w.iter().all(|v| v.is_finite()))
            && self.biases.iter().all(|b| b.iter().all(|v| v.is_finite()))
    }
}

impl EncoderGrads {
    pub fn zeros_like(enc: &EncoderStack) -> Self {
        EncoderGrads {
            weights: enc.weights.iter().map(|w| Array2::zeros(w.raw_dim())).collect(),
            biases: enc.biases.iter().map(|b| Array1::zeros(b.raw_dim())).collect(),
        }
    }
}

impl Persist for EncoderStack {
    fn to_container(&self) -> Container {
        let mut c = Container::new();
        c.push_vector("input_mean", &self.input_mean);
        c.push_vector("input_scale", &self.input_scale);
        for (l, (w, b)) in self.weights.iter().zip(&self.biases).enumerate() {
            c.push(format!("layer{l}.weight"), w.clone());
            c.push_vector(format!("layer{l}.bias"), b);
        }
        c
    }

    fn from_container(c: &Container) -> Result<Self> {
        let mut weights = Vec::new();
        let mut biases = Vec::new();
        while let Ok(w) = c.matrix(&format!("layer{}.weight", weights.len())) {
            let b = c.vector(&format!("layer{}.bias", weights.len()))?;
            if b.len() != w.ncols() || weights.last().is_some_and(|p: &Array2<f64>| p.ncols() != w.nrows()) {
                return Err(Error::Data("encoder layers do not chain".into()));
            }
            weights.push(w.clone());
            biases.push(b);
        }
        if weights.is_empty() {
            return Err(Error::Data("encoder container has no layers".into()));
        }
        let enc = EncoderStack {
            input_mean: c.vector("input_mean")?,
            input_scale: c.vector("input_scale")?,
            weights,
            biases,
        };
        if enc.input_mean.len() != enc.input_dim() || enc.input_scale.len() != enc.input_dim() {
            return Err(Error::Data("encoder normalization has the wrong width".into()));
        }
        Ok(enc)
    }
}
