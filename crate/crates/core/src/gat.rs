//! Graph attention network, written out by hand.
//!
//! A small multi-head attention classifier over graphs: each layer linearly
//! transforms node features, scores every edge with a LeakyReLU of an
//! additive attention form, row-softmaxes the scores over each node's
//! neighborhood (masked pairs get exactly zero weight), and aggregates
//! neighbor features with those weights. Head outputs are *averaged*, not
//! concatenated; an ELU sits between layers. Two affine readouts produce
//! logits: one from the mean-pooled final layer (the classifier) and one
//! from the mean-pooled first-layer activations (an auxiliary encoder head
//! that regularizes training); both feed a summed binary cross-entropy.
//!
//! Everything — forward, reverse-mode gradients, loss — is implemented
//! explicitly so the arithmetic is auditable and exactly reproducible. The
//! finite-difference harness in the tests checks the analytic gradients
//! end to end.

use ndarray::{Array1, Array2, Axis};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// One labeled graph: binary adjacency (with self-loops) plus node features.
#[derive(Debug, Clone, PartialEq)]
pub struct GraphSample {
    adjacency: Array2<u8>,
    features: Array2<f64>,
    label: u8,
}

impl GraphSample {
    /// Validate and wrap a sample.
    ///
    /// The adjacency must be square and 0/1 with a full diagonal (every node
    /// attends at least to itself, so no softmax row is empty); features are
    /// one row per node and must be finite; the label is 0 or 1.
    pub fn new(adjacency: Array2<u8>, features: Array2<f64>, label: u8) -> Result<Self> {
        let n = adjacency.nrows();
        if adjacency.ncols() != n {
            return Err(Error::InvalidGraph {
                reason: format!("adjacency is {}×{}, not square", n, adjacency.ncols()),
            });
        }
        if n == 0 {
            return Err(Error::InvalidGraph {
                reason: "graph has no nodes".into(),
            });
        }
        if features.nrows() != n {
            return Err(Error::InvalidGraph {
                reason: format!("{} feature rows for {} nodes", features.nrows(), n),
            });
        }
        for ((i, j), v) in adjacency.indexed_iter() {
            if *v > 1 {
                return Err(Error::InvalidGraph {
                    reason: format!("adjacency[{i}][{j}] = {v}, expected 0 or 1"),
                });
            }
        }
        for i in 0..n {
            if adjacency[[i, i]] != 1 {
                return Err(Error::InvalidGraph {
                    reason: format!("node {i} lacks a self-loop"),
                });
            }
        }
        for ((i, j), v) in features.indexed_iter() {
            if !v.is_finite() {
                return Err(Error::NonFinite {
                    row: i,
                    col: j,
                    context: "graph features",
                });
            }
        }
        if label > 1 {
            return Err(Error::InvalidGraph {
                reason: format!("label {label} is not binary"),
            });
        }
        Ok(Self {
            adjacency,
            features,
            label,
        })
    }

    pub fn n_nodes(&self) -> usize {
        self.adjacency.nrows()
    }

    pub fn adjacency(&self) -> &Array2<u8> {
        &self.adjacency
    }

    pub fn features(&self) -> &Array2<f64> {
        &self.features
    }

    pub fn label(&self) -> u8 {
        self.label
    }
}

/// One attention head: a linear transform plus the additive attention
/// vector, stored split into its source and target halves.
#[derive(Debug, Clone, PartialEq)]
pub struct AttentionHead {
    /// d_out × d_in transform applied to node features.
    pub weight: Array2<f64>,
    /// Attention vector, length 2·d_out: the first half scores the source
    /// node, the second half the target node.
    pub attn: Array1<f64>,
}

/// One multi-head attention layer.
#[derive(Debug, Clone, PartialEq)]
pub struct GatLayerParams {
    pub heads: Vec<AttentionHead>,
    /// Negative-side slope of the LeakyReLU on raw attention scores.
    pub leaky_slope: f64,
}

impl GatLayerParams {
    pub fn d_in(&self) -> usize {
        self.heads[0].weight.ncols()
    }

    pub fn d_out(&self) -> usize {
        self.heads[0].weight.nrows()
    }
}

/// Scalar affine readout of a pooled representation.
#[derive(Debug, Clone, PartialEq)]
pub struct AffineReadout {
    pub weight: Array1<f64>,
    pub bias: f64,
}

/// Architecture hyperparameters (defaults: 2 layers of 4 heads, hidden
/// width 16, LeakyReLU slope 0.2).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GatArchitecture {
    pub input_dim: usize,
    pub hidden_dim: usize,
    pub n_layers: usize,
    pub n_heads: usize,
    pub leaky_slope: f64,
}

impl GatArchitecture {
    pub fn new(input_dim: usize) -> Self {
        Self {
            input_dim,
            hidden_dim: 16,
            n_layers: 2,
            n_heads: 4,
            leaky_slope: 0.2,
        }
    }

    fn validate(&self) -> Result<()> {
        let fail = |reason: String| Err(Error::InvalidConfig { reason });
        if self.input_dim == 0 {
            return fail("input_dim must be at least 1".into());
        }
        if self.hidden_dim == 0 {
            return fail("hidden_dim must be at least 1".into());
        }
        if self.n_layers == 0 {
            return fail("n_layers must be at least 1".into());
        }
        if self.n_heads == 0 {
            return fail("n_heads must be at least 1".into());
        }
        if !(self.leaky_slope.is_finite() && self.leaky_slope > 0.0 && self.leaky_slope < 1.0) {
            return fail(format!("leaky_slope {} must lie in (0, 1)", self.leaky_slope));
        }
        Ok(())
    }
}

/// The full model: attention layers plus the two readouts.
#[derive(Debug, Clone, PartialEq)]
pub struct GatModel {
    pub layers: Vec<GatLayerParams>,
    /// Classifier head on the mean-pooled final layer.
    pub readout: AffineReadout,
    /// Auxiliary head on the mean-pooled first-layer activations.
    pub encoder_readout: AffineReadout,
    /// Seed the weights were initialized from (kept for provenance).
    pub rng_seed: u64,
}

/// Gradients for one [`AttentionHead`].
#[derive(Debug, Clone)]
pub struct HeadGradients {
    pub weight: Array2<f64>,
    pub attn: Array1<f64>,
}

/// Gradients for one layer.
#[derive(Debug, Clone)]
pub struct LayerGradients {
    pub heads: Vec<HeadGradients>,
}

/// Gradients for an affine readout.
#[derive(Debug, Clone)]
pub struct AffineGradients {
    pub weight: Array1<f64>,
    pub bias: f64,
}

/// Full-model gradients, mirroring [`GatModel`]'s shape.
#[derive(Debug, Clone)]
pub struct GatGradients {
    pub layers: Vec<LayerGradients>,
    pub readout: AffineGradients,
    pub encoder_readout: AffineGradients,
}

struct HeadCache {
    /// Transformed features G = H·Wᵀ, N×d_out.
    transformed: Array2<f64>,
    /// Post-LeakyReLU scores; masked pairs hold −∞.
    scores: Array2<f64>,
    /// Softmax weights; masked pairs hold exactly 0.
    alpha: Array2<f64>,
}

struct LayerCache {
    input: Array2<f64>,
    heads: Vec<HeadCache>,
    /// Layer output after head averaging and (when applied) the ELU.
    output: Array2<f64>,
    elu_applied: bool,
}

struct ForwardCache {
    adjacency: Array2<u8>,
    layers: Vec<LayerCache>,
    pooled_first: Array1<f64>,
    pooled_final: Array1<f64>,
}

/// Result of a forward pass: both logits plus the cached intermediates the
/// backward pass replays.
pub struct ForwardPass {
    pub y_hat: f64,
    pub y_enc: f64,
    cache: ForwardCache,
}

impl ForwardPass {
    /// Attention weights of one layer and head. Row `i` holds the weights
    /// node `i` assigns over all nodes; masked pairs are exactly 0.
    pub fn attention(&self, layer: usize, head: usize) -> ndarray::ArrayView2<'_, f64> {
        self.cache.layers[layer].heads[head].alpha.view()
    }
}

fn elu(x: f64) -> f64 {
    if x >= 0.0 {
        x
    } else {
        x.exp() - 1.0
    }
}

fn leaky_relu(x: f64, slope: f64) -> f64 {
    if x >= 0.0 {
        x
    } else {
        slope * x
    }
}

/// Numerically stable binary cross-entropy of a logit `z` against a 0/1
/// target: `max(z,0) − z·y + ln(1 + e^{−|z|})`.
pub fn bce_with_logits(z: f64, y: f64) -> f64 {
    z.max(0.0) - z * y + (-z.abs()).exp().ln_1p()
}

/// The training objective: summed BCE of the classifier and encoder logits.
pub fn dual_loss(y_hat: f64, y_enc: f64, label: u8) -> f64 {
    let y = f64::from(label);
    bce_with_logits(y_hat, y) + bce_with_logits(y_enc, y)
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Raw masked attention scores for one layer: per head an N×N matrix with
/// `LeakyReLU(a_srcᵀ·g_i + a_dstᵀ·g_j)` where both endpoints are connected,
/// and −∞ elsewhere.
pub fn attention_scores(
    layer: &GatLayerParams,
    features: &Array2<f64>,
    adjacency: &Array2<u8>,
) -> Result<Vec<Array2<f64>>> {
    let n = features.nrows();
    if adjacency.nrows() != n || adjacency.ncols() != n {
        return Err(Error::DimensionMismatch {
            what: "adjacency size",
            expected: n,
            actual: adjacency.nrows(),
        });
    }
    if features.ncols() != layer.d_in() {
        return Err(Error::DimensionMismatch {
            what: "feature width",
            expected: layer.d_in(),
            actual: features.ncols(),
        });
    }
    Ok(layer
        .heads
        .iter()
        .map(|head| head_scores(head, layer.leaky_slope, features, adjacency).1)
        .collect())
}

fn head_scores(
    head: &AttentionHead,
    slope: f64,
    features: &Array2<f64>,
    adjacency: &Array2<u8>,
) -> (Array2<f64>, Array2<f64>) {
    let n = features.nrows();
    let d_out = head.weight.nrows();
    let g = features.dot(&head.weight.t());
    let a_src = head.attn.slice(ndarray::s![..d_out]);
    let a_dst = head.attn.slice(ndarray::s![d_out..]);
    let u = g.dot(&a_src);
    let v = g.dot(&a_dst);
    let mut scores = Array2::from_elem((n, n), f64::NEG_INFINITY);
    for i in 0..n {
        for j in 0..n {
            if adjacency[[i, j]] != 0 {
                scores[[i, j]] = leaky_relu(u[i] + v[j], slope);
            }
        }
    }
    (g, scores)
}

/// Row-wise softmax of masked scores. Masked (−∞) entries come out exactly
/// 0; each row of the result sums to 1 over its unmasked entries.
pub fn attention_softmax(scores: &[Array2<f64>]) -> Result<Vec<Array2<f64>>> {
    scores.iter().map(softmax_rows).collect()
}

fn softmax_rows(scores: &Array2<f64>) -> Result<Array2<f64>> {
    let (n, m) = scores.dim();
    let mut out = Array2::zeros((n, m));
    for i in 0..n {
        let row = scores.row(i);
        let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        if max == f64::NEG_INFINITY {
            return Err(Error::InvalidGraph {
                reason: format!("attention row {i} is fully masked"),
            });
        }
        let mut sum = 0.0;
        let mut exps = vec![0.0; m];
        for (j, s) in row.iter().enumerate() {
            if *s > f64::NEG_INFINITY {
                let e = (s - max).exp();
                exps[j] = e;
                sum += e;
            }
        }
        for j in 0..m {
            if exps[j] != 0.0 {
                out[[i, j]] = exps[j] / sum;
            }
        }
    }
    Ok(out)
}

/// One attention layer applied to node features: transformed neighbors
/// aggregated under the softmax weights, averaged over heads, with an
/// optional trailing ELU.
pub fn gat_layer_forward(
    layer: &GatLayerParams,
    features: &Array2<f64>,
    adjacency: &Array2<u8>,
    apply_elu: bool,
) -> Result<Array2<f64>> {
    let cache = layer_forward_cached(layer, features, adjacency, apply_elu)?;
    Ok(cache.output)
}

fn layer_forward_cached(
    layer: &GatLayerParams,
    features: &Array2<f64>,
    adjacency: &Array2<u8>,
    apply_elu: bool,
) -> Result<LayerCache> {
    let n = features.nrows();
    if features.ncols() != layer.d_in() {
        return Err(Error::DimensionMismatch {
            what: "layer input width",
            expected: layer.d_in(),
            actual: features.ncols(),
        });
    }
    let d_out = layer.d_out();
    let k = layer.heads.len() as f64;
    let mut sum = Array2::zeros((n, d_out));
    let mut heads = Vec::with_capacity(layer.heads.len());
    for head in &layer.heads {
        let (g, scores) = head_scores(head, layer.leaky_slope, features, adjacency);
        let alpha = softmax_rows(&scores)?;
        sum += &alpha.dot(&g);
        heads.push(HeadCache {
            transformed: g,
            scores,
            alpha,
        });
    }
    let mut output = sum / k;
    if apply_elu {
        output.mapv_inplace(elu);
    }
    Ok(LayerCache {
        input: features.clone(),
        heads,
        output,
        elu_applied: apply_elu,
    })
}

impl GatModel {
    /// Initialize a model with Xavier-uniform weights and zero biases from a
    /// single seed. The draw order (layers → heads → transform row-major →
    /// attention vector, then the two readouts) is part of the format: the
    /// same seed always yields the same model.
    pub fn init(arch: &GatArchitecture, rng_seed: u64) -> Result<Self> {
        arch.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
        let xavier = |rows: usize, cols: usize, rng: &mut ChaCha8Rng| -> Array2<f64> {
            let bound = (6.0 / (rows + cols) as f64).sqrt();
            Array2::from_shape_fn((rows, cols), |_| (rng.random::<f64>() * 2.0 - 1.0) * bound)
        };
        let mut layers = Vec::with_capacity(arch.n_layers);
        for l in 0..arch.n_layers {
            let d_in = if l == 0 { arch.input_dim } else { arch.hidden_dim };
            let d_out = arch.hidden_dim;
            let mut heads = Vec::with_capacity(arch.n_heads);
            for _ in 0..arch.n_heads {
                let weight = xavier(d_out, d_in, &mut rng);
                let attn_bound = (6.0 / (2 * d_out + 1) as f64).sqrt();
                let attn = Array1::from_shape_fn(2 * d_out, |_| {
                    (rng.random::<f64>() * 2.0 - 1.0) * attn_bound
                });
                heads.push(AttentionHead { weight, attn });
            }
            layers.push(GatLayerParams {
                heads,
                leaky_slope: arch.leaky_slope,
            });
        }
        let readout_bound = (6.0 / (arch.hidden_dim + 1) as f64).sqrt();
        let affine = |rng: &mut ChaCha8Rng| AffineReadout {
            weight: Array1::from_shape_fn(arch.hidden_dim, |_| {
                (rng.random::<f64>() * 2.0 - 1.0) * readout_bound
            }),
            bias: 0.0,
        };
        let readout = affine(&mut rng);
        let encoder_readout = affine(&mut rng);
        Ok(Self {
            layers,
            readout,
            encoder_readout,
            rng_seed,
        })
    }

    /// Hidden width of the final layer (the readout input size).
    pub fn output_dim(&self) -> usize {
        self.layers.last().expect("at least one layer").d_out()
    }

    /// Input feature width the model expects.
    pub fn input_dim(&self) -> usize {
        self.layers[0].d_in()
    }

    /// Run the network on one sample, caching intermediates for
    /// [`backward`](Self::backward).
    ///
    /// Layer outputs pass through an ELU everywhere except after the final
    /// layer; the encoder logit reads the mean-pooled output of the *first*
    /// layer (post-ELU when one is applied), the classifier logit the
    /// mean-pooled output of the last.
    pub fn forward(&self, sample: &GraphSample) -> Result<ForwardPass> {
        if sample.features.ncols() != self.input_dim() {
            return Err(Error::DimensionMismatch {
                what: "model input width",
                expected: self.input_dim(),
                actual: sample.features.ncols(),
            });
        }
        let n_layers = self.layers.len();
        let mut layers = Vec::with_capacity(n_layers);
        let mut current = sample.features.clone();
        for (l, layer) in self.layers.iter().enumerate() {
            let apply_elu = l + 1 < n_layers;
            let cache = layer_forward_cached(layer, &current, &sample.adjacency, apply_elu)?;
            current = cache.output.clone();
            layers.push(cache);
        }
        let pooled_first = mean_pool(&layers[0].output);
        let pooled_final = mean_pool(&layers[n_layers - 1].output);
        let y_hat = self.readout.weight.dot(&pooled_final) + self.readout.bias;
        let y_enc = self.encoder_readout.weight.dot(&pooled_first) + self.encoder_readout.bias;
        Ok(ForwardPass {
            y_hat,
            y_enc,
            cache: ForwardCache {
                adjacency: sample.adjacency.clone(),
                layers,
                pooled_first,
                pooled_final,
            },
        })
    }

    /// Exact reverse-mode gradients of [`dual_loss`] for one sample.
    ///
    /// The pass must have been produced by [`forward`](Self::forward) on the
    /// same sample; a mismatch is detected and rejected rather than silently
    /// producing wrong gradients.
    pub fn backward(&self, sample: &GraphSample, pass: &ForwardPass) -> Result<GatGradients> {
        let cache = &pass.cache;
        if cache.adjacency != sample.adjacency {
            return Err(Error::StaleCache {
                reason: "cached adjacency differs from the sample",
            });
        }
        if cache.layers[0].input != sample.features {
            return Err(Error::StaleCache {
                reason: "cached features differ from the sample",
            });
        }
        if cache.layers.len() != self.layers.len() {
            return Err(Error::StaleCache {
                reason: "cached layer count differs from the model",
            });
        }

        let n = sample.n_nodes() as f64;
        let y = f64::from(sample.label);
        let g_hat = sigmoid(pass.y_hat) - y;
        let g_enc = sigmoid(pass.y_enc) - y;

        let readout = AffineGradients {
            weight: &cache.pooled_final * g_hat,
            bias: g_hat,
        };
        let encoder_readout = AffineGradients {
            weight: &cache.pooled_first * g_enc,
            bias: g_enc,
        };

        // Gradient at the final layer output: mean-pooling spreads the
        // readout direction evenly over nodes.
        let n_layers = self.layers.len();
        let d_final = broadcast_rows(&(&self.readout.weight * (g_hat / n)), cache.layers[n_layers - 1].output.nrows());
        let d_first_extra = broadcast_rows(
            &(&self.encoder_readout.weight * (g_enc / n)),
            cache.layers[0].output.nrows(),
        );

        let mut d_out = d_final;
        if n_layers == 1 {
            d_out += &d_first_extra;
        }
        let mut layer_grads: Vec<Option<LayerGradients>> = (0..n_layers).map(|_| None).collect();
        for l in (0..n_layers).rev() {
            let (grads, d_in) = layer_backward(&self.layers[l], &cache.layers[l], &d_out)?;
            layer_grads[l] = Some(grads);
            d_out = d_in;
            if l == 1 {
                // The encoder taps the first layer's output.
                d_out += &d_first_extra;
            }
        }
        Ok(GatGradients {
            layers: layer_grads.into_iter().map(|g| g.expect("filled")).collect(),
            readout,
            encoder_readout,
        })
    }
}

fn mean_pool(h: &Array2<f64>) -> Array1<f64> {
    h.mean_axis(Axis(0)).expect("non-empty feature matrix")
}

fn broadcast_rows(v: &Array1<f64>, rows: usize) -> Array2<f64> {
    let mut out = Array2::zeros((rows, v.len()));
    for mut row in out.axis_iter_mut(Axis(0)) {
        row.assign(v);
    }
    out
}

/// Backward through one layer: gradient w.r.t. parameters and input, given
/// the gradient at the layer output (post-ELU if the layer applied one).
fn layer_backward(
    layer: &GatLayerParams,
    cache: &LayerCache,
    d_output: &Array2<f64>,
) -> Result<(LayerGradients, Array2<f64>)> {
    let n = cache.input.nrows();
    let k = layer.heads.len() as f64;

    // ELU'(x) is 1 for x ≥ 0 and e^x = output + 1 otherwise (output here is
    // post-activation, which has the same sign as the pre-activation).
    let d_avg = if cache.elu_applied {
        let mut d = d_output.clone();
        ndarray::Zip::from(&mut d)
            .and(&cache.output)
            .for_each(|g, o| {
                if *o < 0.0 {
                    *g *= *o + 1.0;
                }
            });
        d
    } else {
        d_output.clone()
    };

    let mut head_grads = Vec::with_capacity(layer.heads.len());
    let mut d_input = Array2::zeros((n, layer.d_in()));
    for (head, hc) in layer.heads.iter().zip(cache.heads.iter()) {
        let d_out_k = &d_avg / k;
        let d_alpha = d_out_k.dot(&hc.transformed.t());
        let mut d_g = hc.alpha.t().dot(&d_out_k);

        // Softmax backward, rows independently, masked entries stay zero.
        let mut d_scores = Array2::zeros((n, n));
        for i in 0..n {
            let mut dot = 0.0;
            for j in 0..n {
                if hc.alpha[[i, j]] != 0.0 {
                    dot += hc.alpha[[i, j]] * d_alpha[[i, j]];
                }
            }
            for j in 0..n {
                let a = hc.alpha[[i, j]];
                if a != 0.0 {
                    d_scores[[i, j]] = a * (d_alpha[[i, j]] - dot);
                }
            }
        }

        // LeakyReLU backward; the cached score sign matches the input sign.
        let d_out2 = layer.d_out();
        let a_src = head.attn.slice(ndarray::s![..d_out2]).to_owned();
        let a_dst = head.attn.slice(ndarray::s![d_out2..]).to_owned();
        let mut d_u = Array1::zeros(n);
        let mut d_v = Array1::zeros(n);
        for i in 0..n {
            for j in 0..n {
                let ds = d_scores[[i, j]];
                if ds != 0.0 {
                    let slope = if hc.scores[[i, j]] >= 0.0 { 1.0 } else { layer.leaky_slope };
                    let dz = ds * slope;
                    d_u[i] += dz;
                    d_v[j] += dz;
                }
            }
        }

        // u = G·a_src, v = G·a_dst.
        let d_attn_src = hc.transformed.t().dot(&d_u);
        let d_attn_dst = hc.transformed.t().dot(&d_v);
        for i in 0..n {
            for f in 0..d_out2 {
                d_g[[i, f]] += d_u[i] * a_src[f] + d_v[i] * a_dst[f];
            }
        }

        // G = H·Wᵀ.
        let d_weight = d_g.t().dot(&cache.input);
        d_input += &d_g.dot(&head.weight);

        let mut attn = Array1::zeros(2 * d_out2);
        attn.slice_mut(ndarray::s![..d_out2]).assign(&d_attn_src);
        attn.slice_mut(ndarray::s![d_out2..]).assign(&d_attn_dst);
        head_grads.push(HeadGradients {
            weight: d_weight,
            attn,
        });
    }
    Ok((LayerGradients { heads: head_grads }, d_input))
}

// --- flat parameter vector ------------------------------------------------
//
// Adam, the finite-difference harness, and the checkpoint format all view
// the model as one flat f64 vector. The order is fixed: layers in order,
// heads in order, transform row-major, then the attention vector; then the
// classifier readout (weights, bias) and the encoder readout (weights,
// bias).

impl GatModel {
    /// Total number of scalar parameters.
    pub fn n_params(&self) -> usize {
        let mut count = 0;
        for layer in &self.layers {
            for head in &layer.heads {
                count += head.weight.len() + head.attn.len();
            }
        }
        count + self.readout.weight.len() + 1 + self.encoder_readout.weight.len() + 1
    }

    /// Copy all parameters into one vector (see the module ordering note).
    pub fn flat_params(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.n_params());
        for layer in &self.layers {
            for head in &layer.heads {
                out.extend(head.weight.iter());
                out.extend(head.attn.iter());
            }
        }
        out.extend(self.readout.weight.iter());
        out.push(self.readout.bias);
        out.extend(self.encoder_readout.weight.iter());
        out.push(self.encoder_readout.bias);
        out
    }

    /// Overwrite all parameters from a flat vector in the canonical order.
    pub fn set_flat_params(&mut self, flat: &[f64]) -> Result<()> {
        if flat.len() != self.n_params() {
            return Err(Error::DimensionMismatch {
                what: "flat parameter count",
                expected: self.n_params(),
                actual: flat.len(),
            });
        }
        let mut it = flat.iter();
        let mut next = || *it.next().expect("length checked");
        for layer in &mut self.layers {
            for head in &mut layer.heads {
                for w in head.weight.iter_mut() {
                    *w = next();
                }
                for a in head.attn.iter_mut() {
                    *a = next();
                }
            }
        }
        for w in self.readout.weight.iter_mut() {
            *w = next();
        }
        self.readout.bias = next();
        for w in self.encoder_readout.weight.iter_mut() {
            *w = next();
        }
        self.encoder_readout.bias = next();
        Ok(())
    }
}

impl GatGradients {
    /// Flatten in the same order as [`GatModel::flat_params`].
    pub fn flat(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for layer in &self.layers {
            for head in &layer.heads {
                out.extend(head.weight.iter());
                out.extend(head.attn.iter());
            }
        }
        out.extend(self.readout.weight.iter());
        out.push(self.readout.bias);
        out.extend(self.encoder_readout.weight.iter());
        out.push(self.encoder_readout.bias);
        out
    }
}

// --- checkpoints ------------------------------------------------------------
//
// Binary layout (all integers and floats little-endian):
//   "GATC" | version u32 | rng_seed u64 | n_layers u32
//   per layer: n_heads u32, d_in u32, d_out u32, leaky_slope f64
//   param_count u64 | param_count × f64 in flat order

const CHECKPOINT_MAGIC: &[u8; 4] = b"GATC";
const CHECKPOINT_VERSION: u32 = 1;

impl GatModel {
    /// Write the model to `path`; loading the file reproduces the model
    /// bit for bit.
    pub fn save(&self, path: &std::path::Path) -> Result<()> {
        use std::io::Write;
        let mut buf = Vec::new();
        buf.extend_from_slice(CHECKPOINT_MAGIC);
        buf.extend_from_slice(&CHECKPOINT_VERSION.to_le_bytes());
        buf.extend_from_slice(&self.rng_seed.to_le_bytes());
        buf.extend_from_slice(&(self.layers.len() as u32).to_le_bytes());
        for layer in &self.layers {
            buf.extend_from_slice(&(layer.heads.len() as u32).to_le_bytes());
            buf.extend_from_slice(&(layer.d_in() as u32).to_le_bytes());
            buf.extend_from_slice(&(layer.d_out() as u32).to_le_bytes());
            buf.extend_from_slice(&layer.leaky_slope.to_le_bytes());
        }
        let flat = self.flat_params();
        buf.extend_from_slice(&(flat.len() as u64).to_le_bytes());
        for v in &flat {
            buf.extend_from_slice(&v.to_le_bytes());
        }
        let mut file = std::fs::File::create(path)?;
        file.write_all(&buf)?;
        Ok(())
    }

    /// Read a model previously written by [`save`](Self::save).
    pub fn load(path: &std::path::Path) -> Result<Self> {
        let bytes = std::fs::read(path)?;
        let mut cursor = Cursor { bytes: &bytes, at: 0 };
        let magic = cursor.take(4)?;
        if magic != CHECKPOINT_MAGIC {
            return Err(Error::BadCheckpoint {
                reason: format!("bad magic {magic:?}"),
            });
        }
        let version = cursor.u32()?;
        if version != CHECKPOINT_VERSION {
            return Err(Error::BadCheckpoint {
                reason: format!("unsupported version {version}"),
            });
        }
        let rng_seed = cursor.u64()?;
        let n_layers = cursor.u32()? as usize;
        if n_layers == 0 || n_layers > 64 {
            return Err(Error::BadCheckpoint {
                reason: format!("implausible layer count {n_layers}"),
            });
        }
        let mut layers = Vec::with_capacity(n_layers);
        let mut prev_out: Option<usize> = None;
        for l in 0..n_layers {
            let n_heads = cursor.u32()? as usize;
            let d_in = cursor.u32()? as usize;
            let d_out = cursor.u32()? as usize;
            let leaky_slope = cursor.f64()?;
            if n_heads == 0 || d_in == 0 || d_out == 0 {
                return Err(Error::BadCheckpoint {
                    reason: format!("layer {l} has a zero dimension"),
                });
            }
            if let Some(prev) = prev_out {
                if d_in != prev {
                    return Err(Error::BadCheckpoint {
                        reason: format!("layer {l} input {d_in} != previous output {prev}"),
                    });
                }
            }
            prev_out = Some(d_out);
            let heads = (0..n_heads)
                .map(|_| AttentionHead {
                    weight: Array2::zeros((d_out, d_in)),
                    attn: Array1::zeros(2 * d_out),
                })
                .collect();
            layers.push(GatLayerParams { heads, leaky_slope });
        }
        let width = prev_out.expect("at least one layer");
        let mut model = Self {
            layers,
            readout: AffineReadout {
                weight: Array1::zeros(width),
                bias: 0.0,
            },
            encoder_readout: AffineReadout {
                weight: Array1::zeros(width),
                bias: 0.0,
            },
            rng_seed,
        };
        let count = cursor.u64()? as usize;
        if count != model.n_params() {
            return Err(Error::BadCheckpoint {
                reason: format!("{count} stored parameters, shape needs {}", model.n_params()),
            });
        }
        let mut flat = Vec::with_capacity(count);
        for _ in 0..count {
            flat.push(cursor.f64()?);
        }
        if cursor.at != bytes.len() {
            return Err(Error::BadCheckpoint {
                reason: format!("{} trailing bytes", bytes.len() - cursor.at),
            });
        }
        model.set_flat_params(&flat)?;
        Ok(model)
    }
}

struct Cursor<'a> {
    bytes: &'a [u8],
    at: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.at + n > self.bytes.len() {
            return Err(Error::BadCheckpoint {
                reason: "truncated file".into(),
            });
        }
        let s = &self.bytes[self.at..self.at + n];
        self.at += n;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }
}
