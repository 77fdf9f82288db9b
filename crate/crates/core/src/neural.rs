//! Policy network: two strided convolutions with average pooling, a 4-unit
//! LSTM cell and a two-layer dense head ending in a low-temperature softmax.
//!
//! All weights live in one flat `f32` vector, segment order
//! `conv1, conv2, lstm, dense_hidden, dense_out`. Kernels are stored
//! height-width-input-output, dense matrices input-major.

use rand::RngCore;
use rand_distr::{Distribution, Normal, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const VIEW: usize = 15;
pub const CHANNELS: usize = 3;
pub const OBS_LEN: usize = VIEW * VIEW * CHANNELS;
pub const ACTIONS: usize = 5;
pub const HIDDEN: usize = 4;
/// Softmax runs on `logits * INVERSE_TEMPERATURE`.
pub const INVERSE_TEMPERATURE: f64 = 50.0;

const K: usize = 3;
const C1: usize = 4;
const C2: usize = 8;
// 15 -> conv s2 SAME -> 8 -> pool 2/1 VALID -> 7 -> conv s2 SAME -> 4 -> pool -> 3
const H1: usize = 8;
const P1: usize = 7;
const H2: usize = 4;
const P2: usize = 3;
const FLAT: usize = P2 * P2 * C2;
pub const EMBED: usize = FLAT + ACTIONS + 1;
const GATES: usize = 4 * HIDDEN;
const DENSE: usize = 8;

/// Sizes of the five weight segments, in storage order.
pub const SEGMENTS: [(&str, usize); 5] = [
    ("conv1", K * K * CHANNELS * C1 + C1),
    ("conv2", K * K * C1 * C2 + C2),
    ("lstm", EMBED * GATES + HIDDEN * GATES + GATES),
    ("dense_hidden", (EMBED + HIDDEN) * DENSE + DENSE),
    ("dense_out", DENSE * ACTIONS + ACTIONS),
];

pub const PARAM_COUNT: usize =
    SEGMENTS[0].1 + SEGMENTS[1].1 + SEGMENTS[2].1 + SEGMENTS[3].1 + SEGMENTS[4].1;

const _: () = assert!(PARAM_COUNT == 2445);

const CONV1_W: usize = 0;
const CONV1_B: usize = CONV1_W + K * K * CHANNELS * C1;
const CONV2_W: usize = CONV1_B + C1;
const CONV2_B: usize = CONV2_W + K * K * C1 * C2;
const LSTM_WI: usize = CONV2_B + C2;
const LSTM_WH: usize = LSTM_WI + EMBED * GATES;
const LSTM_B: usize = LSTM_WH + HIDDEN * GATES;
const DH_W: usize = LSTM_B + GATES;
const DH_B: usize = DH_W + (EMBED + HIDDEN) * DENSE;
const DO_W: usize = DH_B + DENSE;
const DO_B: usize = DO_W + DENSE * ACTIONS;
const _: () = assert!(DO_B + ACTIONS == PARAM_COUNT);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[repr(u8)]
pub enum Action {
    Stay = 0,
    Up = 1,
    Down = 2,
    Left = 3,
    Right = 4,
}

impl Action {
    pub const ALL: [Action; ACTIONS] = [
        Action::Stay,
        Action::Up,
        Action::Down,
        Action::Left,
        Action::Right,
    ];

    pub fn from_index(i: usize) -> Option<Action> {
        Self::ALL.get(i).copied()
    }

    pub fn index(self) -> usize {
        self as usize
    }

    /// (d_row, d_col) with row 0 at the top.
    pub fn delta(self) -> (i64, i64) {
        match self {
            Action::Stay => (0, 0),
            Action::Up => (-1, 0),
            Action::Down => (1, 0),
            Action::Left => (0, -1),
            Action::Right => (0, 1),
        }
    }
}

/// Flat weight vector of one agent.
#[derive(Clone, Debug, PartialEq)]
pub struct NetworkParams {
    weights: Box<[f32]>,
}

impl NetworkParams {
    pub fn zeros() -> Self {
        Self {
            weights: vec![0.0; PARAM_COUNT].into_boxed_slice(),
        }
    }

    pub fn from_vec(weights: Vec<f32>) -> Result<Self> {
        if weights.len() != PARAM_COUNT {
            return Err(Error::Contract(format!(
                "expected {PARAM_COUNT} weights, got {}",
                weights.len()
            )));
        }
        if weights.iter().any(|w| !w.is_finite()) {
            return Err(Error::Contract("non-finite weight".into()));
        }
        Ok(Self {
            weights: weights.into_boxed_slice(),
        })
    }

    /// Independent `N(0, std)` weights.
    pub fn random(std: f32, rng: &mut impl RngCore) -> Self {
        let mut p = Self::zeros();
        p.fill_random(std, rng);
        p
    }

    pub(crate) fn fill_random(&mut self, std: f32, rng: &mut impl RngCore) {
        for w in self.weights.iter_mut() {
            let z: f32 = StandardNormal.sample(rng);
            *w = z * std;
        }
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn as_slice(&self) -> &[f32] {
        &self.weights
    }

    pub fn as_mut_slice(&mut self) -> &mut [f32] {
        &mut self.weights
    }

    /// Weights of one named segment.
    pub fn segment(&self, name: &str) -> Option<&[f32]> {
        let mut start = 0;
        for (seg, len) in SEGMENTS {
            if seg == name {
                return Some(&self.weights[start..start + len]);
            }
            start += len;
        }
        None
    }

    pub fn segment_mut(&mut self, name: &str) -> Option<&mut [f32]> {
        let mut start = 0;
        for (seg, len) in SEGMENTS {
            if seg == name {
                return Some(&mut self.weights[start..start + len]);
            }
            start += len;
        }
        None
    }

    /// Copy of `self` with Gaussian noise of standard deviation `sigma` added
    /// to every weight.
    pub fn mutate(&self, sigma: f32, rng: &mut impl RngCore) -> NetworkParams {
        let mut child = self.clone();
        self.mutate_into(&mut child, sigma, rng);
        child
    }

    /// Writes the mutated copy of `self` into `child`, reusing its buffer.
    pub fn mutate_into(&self, child: &mut NetworkParams, sigma: f32, rng: &mut impl RngCore) {
        child.weights.copy_from_slice(&self.weights);
        if sigma == 0.0 {
            return;
        }
        let noise = Normal::new(0.0f32, sigma).expect("sigma is finite and non-negative");
        for w in child.weights.iter_mut() {
            *w += noise.sample(rng);
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct RecurrentState {
    pub hidden: [f32; HIDDEN],
    pub cell: [f32; HIDDEN],
}

/// One agent's view: `VIEW x VIEW` cells, channels innermost.
#[derive(Clone, Debug, PartialEq)]
pub struct Observation(pub [f32; OBS_LEN]);

impl Default for Observation {
    fn default() -> Self {
        Observation([0.0; OBS_LEN])
    }
}

impl Observation {
    #[inline]
    pub fn get(&self, row: usize, col: usize, channel: usize) -> f32 {
        self.0[(row * VIEW + col) * CHANNELS + channel]
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, channel: usize, value: f32) {
        self.0[(row * VIEW + col) * CHANNELS + channel] = value;
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ForwardOutput {
    pub probs: [f64; ACTIONS],
    pub state: RecurrentState,
}

/// Strided 3x3 convolution with SAME padding (extra padding goes after).
#[allow(clippy::too_many_arguments)]
fn conv_same<const CIN: usize, const COUT: usize>(
    input: &[f32],
    size: usize,
    out_size: usize,
    kernel: &[f32],
    bias: &[f32],
    out: &mut [f32],
) {
    let stride = 2;
    let pad_total = ((out_size - 1) * stride + K).saturating_sub(size);
    let pad = pad_total / 2;
    for oy in 0..out_size {
        for ox in 0..out_size {
            let mut acc = [0f32; COUT];
            acc.copy_from_slice(&bias[..COUT]);
            for ky in 0..K {
                let iy = (oy * stride + ky) as isize - pad as isize;
                if iy < 0 || iy as usize >= size {
                    continue;
                }
                for kx in 0..K {
                    let ix = (ox * stride + kx) as isize - pad as isize;
                    if ix < 0 || ix as usize >= size {
                        continue;
                    }
                    let px = &input[(iy as usize * size + ix as usize) * CIN..][..CIN];
                    let kbase = (ky * K + kx) * CIN * COUT;
                    for (ci, &v) in px.iter().enumerate() {
                        if v == 0.0 {
                            continue;
                        }
                        let krow = &kernel[kbase + ci * COUT..][..COUT];
                        for co in 0..COUT {
                            acc[co] += v * krow[co];
                        }
                    }
                }
            }
            out[(oy * out_size + ox) * COUT..][..COUT].copy_from_slice(&acc);
        }
    }
}

/// 2x2 average pool, stride 1, VALID.
fn avg_pool<const C: usize>(input: &[f32], size: usize, out: &mut [f32]) {
    let o = size - 1;
    for y in 0..o {
        for x in 0..o {
            for c in 0..C {
                let s = input[(y * size + x) * C + c]
                    + input[(y * size + x + 1) * C + c]
                    + input[((y + 1) * size + x) * C + c]
                    + input[((y + 1) * size + x + 1) * C + c];
                out[(y * o + x) * C + c] = 0.25 * s;
            }
        }
    }
}

#[inline]
fn sigmoid(x: f32) -> f32 {
    1.0 / (1.0 + (-x).exp())
}

fn check(values: &[f32], stage: &'static str) -> Result<()> {
    if values.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::NetworkFault { stage })
    }
}

/// Softmax of `logits * INVERSE_TEMPERATURE`, evaluated in f64.
pub fn tempered_softmax(logits: &[f32; ACTIONS]) -> [f64; ACTIONS] {
    let scaled = logits.map(|l| l as f64 * INVERSE_TEMPERATURE);
    let max = scaled.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps = scaled.map(|s| (s - max).exp());
    let sum: f64 = exps.iter().sum();
    exps.map(|e| e / sum)
}

/// Logits of the policy and the updated recurrent state.
pub fn forward_logits(
    params: &NetworkParams,
    observation: &Observation,
    prev_action: Option<Action>,
    ate: bool,
    state: &RecurrentState,
) -> Result<([f32; ACTIONS], RecurrentState)> {
    let w = &params.weights;

    let mut c1 = [0f32; H1 * H1 * C1];
    conv_same::<CHANNELS, C1>(
        &observation.0,
        VIEW,
        H1,
        &w[CONV1_W..CONV1_B],
        &w[CONV1_B..CONV2_W],
        &mut c1,
    );
    let mut p1 = [0f32; P1 * P1 * C1];
    avg_pool::<C1>(&c1, H1, &mut p1);

    let mut c2 = [0f32; H2 * H2 * C2];
    conv_same::<C1, C2>(&p1, P1, H2, &w[CONV2_W..CONV2_B], &w[CONV2_B..LSTM_WI], &mut c2);

    let mut embed = [0f32; EMBED + HIDDEN];
    avg_pool::<C2>(&c2, H2, &mut embed[..FLAT]);
    if let Some(a) = prev_action {
        embed[FLAT + a.index()] = 1.0;
    }
    embed[FLAT + ACTIONS] = if ate { 1.0 } else { 0.0 };
    check(&embed[..FLAT], "convolution")?;

    let mut z = [0f32; GATES];
    z.copy_from_slice(&w[LSTM_B..DH_W]);
    for (i, &x) in embed[..EMBED].iter().enumerate() {
        if x == 0.0 {
            continue;
        }
        let row = &w[LSTM_WI + i * GATES..][..GATES];
        for g in 0..GATES {
            z[g] += x * row[g];
        }
    }
    for (i, &h) in state.hidden.iter().enumerate() {
        let row = &w[LSTM_WH + i * GATES..][..GATES];
        for g in 0..GATES {
            z[g] += h * row[g];
        }
    }
    let mut next = RecurrentState::default();
    for j in 0..HIDDEN {
        let input = sigmoid(z[j]);
        let forget = sigmoid(z[HIDDEN + j]);
        let candidate = z[2 * HIDDEN + j].tanh();
        let output = sigmoid(z[3 * HIDDEN + j]);
        let cell = forget * state.cell[j] + input * candidate;
        next.cell[j] = cell;
        next.hidden[j] = output * cell.tanh();
    }
    check(&next.cell, "recurrent cell")?;
    embed[EMBED..].copy_from_slice(&next.hidden);

    let mut hidden = [0f32; DENSE];
    hidden.copy_from_slice(&w[DH_B..DO_W]);
    for (i, &x) in embed.iter().enumerate() {
        let row = &w[DH_W + i * DENSE..][..DENSE];
        for d in 0..DENSE {
            hidden[d] += x * row[d];
        }
    }
    for h in hidden.iter_mut() {
        *h = h.tanh();
    }

    let mut logits = [0f32; ACTIONS];
    logits.copy_from_slice(&w[DO_B..]);
    for (i, &x) in hidden.iter().enumerate() {
        let row = &w[DO_W + i * ACTIONS..][..ACTIONS];
        for a in 0..ACTIONS {
            logits[a] += x * row[a];
        }
    }
    check(&logits, "output layer")?;
    Ok((logits, next))
}

/// Action probabilities and the updated recurrent state.
pub fn forward(
    params: &NetworkParams,
    observation: &Observation,
    prev_action: Option<Action>,
    ate: bool,
    state: &RecurrentState,
) -> Result<ForwardOutput> {
    let (logits, state) = forward_logits(params, observation, prev_action, ate, state)?;
    let probs = tempered_softmax(&logits);
    if probs.iter().any(|p| !p.is_finite()) {
        return Err(Error::NetworkFault { stage: "softmax" });
    }
    Ok(ForwardOutput { probs, state })
}

/// Categorical draw from `probs`.
pub fn sample_action(probs: &[f64; ACTIONS], rng: &mut impl RngCore) -> Result<Action> {
    if probs.iter().any(|p| !p.is_finite() || *p < 0.0) {
        return Err(Error::NetworkFault {
            stage: "action sampling",
        });
    }
    let total: f64 = probs.iter().sum();
    let u = crate::world::unit_f64(rng) * total;
    let mut acc = 0.0;
    let mut last = 0;
    for (i, &p) in probs.iter().enumerate() {
        if p > 0.0 {
            last = i;
        }
        acc += p;
        if u < acc {
            return Ok(Action::ALL[i]);
        }
    }
    Ok(Action::ALL[last])
}
