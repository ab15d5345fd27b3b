//! Feed-forward ReLU networks: evaluation, JSON I/O and the structural
//! builders used by the composed analyses.

use std::path::Path;

use ndarray::{s, Array1, Array2};
use serde::{Deserialize, Serialize};

use crate::dynamics::AffineDynamics;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum Layer {
    Affine { w: Array2<f64>, b: Array1<f64> },
    Relu,
}

impl Layer {
    pub fn affine(w: Array2<f64>, b: Array1<f64>) -> Self {
        Layer::Affine { w, b }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    in_dim: usize,
    out_dim: usize,
    layers: Vec<Layer>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawNetwork {
    in_dim: usize,
    layers: Vec<RawLayer>,
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase", deny_unknown_fields)]
enum RawLayer {
    Affine { w: Vec<Vec<f64>>, b: Vec<f64> },
    Relu,
    Clamp { lo: f64, hi: f64 },
}

impl Network {
    pub fn new(in_dim: usize, layers: Vec<Layer>) -> Result<Self> {
        if in_dim == 0 {
            return Err(Error::Network { layer: 0, msg: "input dimension must be positive".into() });
        }
        let mut width = in_dim;
        for (i, layer) in layers.iter().enumerate() {
            if let Layer::Affine { w, b } = layer {
                if w.ncols() != width {
                    return Err(Error::Network {
                        layer: i,
                        msg: format!("expects {} inputs but receives {width}", w.ncols()),
                    });
                }
                if w.nrows() != b.len() || w.nrows() == 0 {
                    return Err(Error::Network {
                        layer: i,
                        msg: format!("weight has {} rows, bias has {} entries", w.nrows(), b.len()),
                    });
                }
                if w.iter().chain(b.iter()).any(|v| !v.is_finite()) {
                    return Err(Error::Network { layer: i, msg: "non-finite weight".into() });
                }
                width = w.nrows();
            }
        }
        Ok(Self { in_dim, out_dim: width, layers })
    }

    pub fn identity(n: usize) -> Self {
        Self::affine(Array2::eye(n), Array1::zeros(n)).expect("identity is well formed")
    }

    pub fn affine(w: Array2<f64>, b: Array1<f64>) -> Result<Self> {
        Self::new(w.ncols(), vec![Layer::affine(w, b)])
    }

    pub fn in_dim(&self) -> usize {
        self.in_dim
    }

    pub fn out_dim(&self) -> usize {
        self.out_dim
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn eval(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.in_dim {
            return Err(Error::Dimension(format!("network expects {} inputs, got {}", self.in_dim, x.len())));
        }
        let mut v = Array1::from(x.to_vec());
        for layer in &self.layers {
            match layer {
                Layer::Affine { w, b } => v = w.dot(&v) + b,
                Layer::Relu => v.mapv_inplace(|t| t.max(0.0)),
            }
        }
        Ok(v.to_vec())
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        let raw: RawNetwork = serde_json::from_str(text)?;
        let mut layers = Vec::new();
        let mut width = raw.in_dim;
        for (i, l) in raw.layers.into_iter().enumerate() {
            match l {
                RawLayer::Affine { w, b } => {
                    let rows = w.len();
                    let cols = w.first().map_or(0, Vec::len);
                    if w.iter().any(|r| r.len() != cols) {
                        return Err(Error::Network { layer: i, msg: "ragged weight matrix".into() });
                    }
                    let flat: Vec<f64> = w.into_iter().flatten().collect();
                    let w = Array2::from_shape_vec((rows, cols), flat)
                        .map_err(|e| Error::Network { layer: i, msg: e.to_string() })?;
                    if w.ncols() != width {
                        return Err(Error::Network {
                            layer: i,
                            msg: format!("expects {} inputs but receives {width}", w.ncols()),
                        });
                    }
                    width = w.nrows();
                    layers.push(Layer::affine(w, Array1::from(b)));
                }
                RawLayer::Relu => layers.push(Layer::Relu),
                RawLayer::Clamp { lo, hi } => {
                    if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                        return Err(Error::Network { layer: i, msg: format!("bad clamp range [{lo}, {hi}]") });
                    }
                    layers.extend(clamp_layers(width, lo, hi));
                }
            }
        }
        // Re-validate with layer indices of the lowered network.
        Self::new(raw.in_dim, layers)
    }

    pub fn to_json_string(&self) -> String {
        let raw = RawNetwork {
            in_dim: self.in_dim,
            layers: self
                .layers
                .iter()
                .map(|l| match l {
                    Layer::Affine { w, b } => RawLayer::Affine {
                        w: w.rows().into_iter().map(|r| r.to_vec()).collect(),
                        b: b.to_vec(),
                    },
                    Layer::Relu => RawLayer::Relu,
                })
                .collect(),
        };
        serde_json::to_string(&raw).expect("network serializes")
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json_str(&std::fs::read_to_string(path)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_json_string())?;
        Ok(())
    }

    /// `x ↦ a · self(x) + b`, fused into the last layer when it is affine.
    pub fn append_affine(&self, a: &Array2<f64>, b: &Array1<f64>) -> Result<Self> {
        if a.ncols() != self.out_dim || a.nrows() != b.len() {
            return Err(Error::Dimension(format!(
                "cannot append a {}x{} map to a network with {} outputs",
                a.nrows(),
                a.ncols(),
                self.out_dim
            )));
        }
        self.then(&Network::affine(a.clone(), b.clone())?)
    }

    /// Sequential composition `next ∘ self`; affine layers meeting at the
    /// seam are multiplied out.
    pub fn then(&self, next: &Network) -> Result<Self> {
        if next.in_dim != self.out_dim {
            return Err(Error::Dimension(format!(
                "composing a network with {} outputs into one with {} inputs",
                self.out_dim, next.in_dim
            )));
        }
        let mut layers = self.layers.clone();
        let mut rest = next.layers.iter();
        if let (Some(Layer::Affine { w: w1, b: b1 }), Some(Layer::Affine { .. })) =
            (layers.last(), next.layers.first())
        {
            let Some(Layer::Affine { w: w2, b: b2 }) = rest.next() else { unreachable!() };
            let fused = Layer::affine(w2.dot(w1), w2.dot(b1) + b2);
            *layers.last_mut().unwrap() = fused;
        }
        layers.extend(rest.cloned());
        Self::new(self.in_dim, layers)
    }

    /// Canonical shape `Affine (Relu Affine)*`: adjacent affines fused,
    /// repeated ReLUs merged, identity affines inserted where needed.
    pub fn normalized(&self) -> Self {
        let mut out: Vec<Layer> = Vec::new();
        let mut width = self.in_dim;
        for layer in &self.layers {
            match (out.last_mut(), layer) {
                (Some(Layer::Affine { w: w1, b: b1 }), Layer::Affine { w: w2, b: b2 }) => {
                    let fused = Layer::affine(w2.dot(&*w1), w2.dot(&*b1) + b2);
                    *out.last_mut().unwrap() = fused;
                }
                (Some(Layer::Relu), Layer::Relu) => {}
                (None, Layer::Relu) => {
                    out.push(Layer::affine(Array2::eye(width), Array1::zeros(width)));
                    out.push(Layer::Relu);
                }
                _ => out.push(layer.clone()),
            }
            if let Layer::Affine { w, .. } = layer {
                width = w.nrows();
            }
        }
        if !matches!(out.last(), Some(Layer::Affine { .. })) {
            out.push(Layer::affine(Array2::eye(width), Array1::zeros(width)));
        }
        Self::new(self.in_dim, out).expect("normalization preserves shapes")
    }

    /// Network on inputs `(x, e)` with output `(x[..carry], e, self(x))`.
    ///
    /// Every affine layer gets an extra block carrying the `carry + extra`
    /// channels. Across a ReLU a carried value `s` travels as the pair
    /// `(relu(s), relu(-s))` and is recombined by the next affine layer.
    pub fn passthrough(&self, carry: usize, extra: usize) -> Result<Self> {
        if carry > self.in_dim {
            return Err(Error::Dimension(format!(
                "cannot carry {carry} channels of a {}-input network",
                self.in_dim
            )));
        }
        let net = self.normalized();
        let k = carry + extra;
        let in_total = self.in_dim + extra;
        let n_layers = net.layers.len();
        let mut layers = Vec::with_capacity(n_layers);
        for (i, layer) in net.layers.iter().enumerate() {
            let Layer::Affine { w, b } = layer else {
                layers.push(Layer::Relu);
                continue;
            };
            let paired_out = i + 1 < n_layers;
            let carried_rows = if paired_out { 2 * k } else { k };
            let (carried_in, cols) = if i == 0 { (0, in_total) } else { (2 * k, 2 * k + w.ncols()) };
            let mut wn = Array2::zeros((carried_rows + w.nrows(), cols));
            // value of carried channel j as a row over this layer's inputs
            for j in 0..k {
                let mut row = Array1::<f64>::zeros(cols);
                if i == 0 {
                    let src = if j < carry { j } else { self.in_dim + (j - carry) };
                    row[src] = 1.0;
                } else {
                    row[j] = 1.0;
                    row[k + j] = -1.0;
                }
                wn.row_mut(j).assign(&row);
                if paired_out {
                    wn.row_mut(k + j).assign(&(-row));
                }
            }
            let net_cols = if i == 0 { 0..self.in_dim } else { carried_in..cols };
            wn.slice_mut(s![carried_rows.., net_cols]).assign(w);
            let mut bn = Array1::zeros(carried_rows + w.nrows());
            bn.slice_mut(s![carried_rows..]).assign(b);
            layers.push(Layer::affine(wn, bn));
        }
        Self::new(in_total, layers)
    }

    /// Output `(x_state, self(x))` for state channels in the first
    /// `state_dims` inputs.
    pub fn build_state_passthrough(&self, state_dims: usize) -> Result<Self> {
        self.passthrough(state_dims, 0)
    }

    /// Chains `m` closed-loop periods into one network.
    ///
    /// `self` maps `(x, z)` to the control, with `latent_dims` latent inputs
    /// per period. The result maps `(x0, z0, …, z_{m-1})` to `x_m`.
    pub fn unroll_affine_system(&self, dynamics: &AffineDynamics, m: usize, latent_dims: usize) -> Result<Self> {
        let k = dynamics.state_dim();
        if m == 0 {
            return Err(Error::Config("unrolling needs m >= 1".into()));
        }
        if self.in_dim != k + latent_dims || self.out_dim != dynamics.control_dim() {
            return Err(Error::Dimension(format!(
                "control network is {}→{}, dynamics need {}+{} → {}",
                self.in_dim,
                self.out_dim,
                k,
                latent_dims,
                dynamics.control_dim()
            )));
        }
        let (ax, au, c) = dynamics.period_map();
        let mut acc: Option<Network> = None;
        for j in 0..m {
            let extra = (m - 1 - j) * latent_dims;
            let period = self.passthrough(k, extra)?;
            // (x, rest, u) ↦ (A x + B u + c, rest)
            let width = k + extra + au.ncols();
            let mut w = Array2::zeros((k + extra, width));
            w.slice_mut(s![..k, ..k]).assign(&ax);
            w.slice_mut(s![..k, k + extra..]).assign(&au);
            w.slice_mut(s![k.., k..k + extra]).assign(&Array2::eye(extra));
            let mut b = Array1::zeros(k + extra);
            b.slice_mut(s![..k]).assign(&c);
            let step = period.append_affine(&w, &b)?;
            acc = Some(match acc {
                None => step,
                Some(prev) => prev.then(&step)?,
            });
        }
        Ok(acc.expect("m >= 1"))
    }
}

/// `clamp(x, lo, hi) = lo + relu(x - lo) - relu(x - hi)` per channel.
fn clamp_layers(width: usize, lo: f64, hi: f64) -> Vec<Layer> {
    let eye = Array2::<f64>::eye(width);
    let mut w1 = Array2::zeros((2 * width, width));
    w1.slice_mut(s![..width, ..]).assign(&eye);
    w1.slice_mut(s![width.., ..]).assign(&eye);
    let mut b1 = Array1::zeros(2 * width);
    b1.slice_mut(s![..width]).fill(-lo);
    b1.slice_mut(s![width..]).fill(-hi);
    let mut w2 = Array2::zeros((width, 2 * width));
    w2.slice_mut(s![.., ..width]).assign(&eye);
    w2.slice_mut(s![.., width..]).assign(&(-&eye));
    vec![
        Layer::affine(w1, b1),
        Layer::Relu,
        Layer::affine(w2, Array1::from_elem(width, lo)),
    ]
}
