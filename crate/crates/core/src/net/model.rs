use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Uniform};

use super::config::{NetConfig, HEAD_DIM, JOINT_DIM};
use super::ops::{col2im, gemm, im2col, sigmoid, ConvShape};
use super::NetError;

/// Offsets of every parameter block inside the flat vector.
#[derive(Clone, Debug, PartialEq)]
pub struct Layout {
    /// (weight offset, bias offset) per conv layer.
    pub conv: Vec<(usize, usize)>,
    /// LSTM input weights `[4H, D]`, or the window layer `[H, window * D]`.
    pub rec_in: usize,
    /// LSTM recurrent weights `[4H, H]` (absent without LSTM).
    pub rec_hidden: Option<usize>,
    pub rec_bias: usize,
    pub fc_w: usize,
    pub fc_b: usize,
    pub head_w: usize,
    pub head_b: usize,
    pub total: usize,
}

impl Layout {
    pub fn new(cfg: &NetConfig) -> Self {
        let mut off = 0;
        let mut take = |n: usize| {
            let o = off;
            off += n;
            o
        };
        let mut conv = Vec::new();
        let mut c_in = 3;
        for l in 0..cfg.conv_channels.len() {
            let k = cfg.conv_kernels[l];
            let c_out = cfg.conv_channels[l];
            conv.push((take(c_out * c_in * k * k), take(c_out)));
            c_in = c_out;
        }
        let (h, d) = (cfg.lstm_hidden, cfg.step_input_len());
        let (rec_in, rec_hidden, rec_bias) = if cfg.use_lstm {
            (take(4 * h * d), Some(take(4 * h * h)), take(4 * h))
        } else {
            (take(h * cfg.window * d), None, take(h))
        };
        let f = cfg.fc_hidden;
        let fc_w = take(f * h);
        let fc_b = take(f);
        let head_w = take(HEAD_DIM * f);
        let head_b = take(HEAD_DIM);
        Self {
            conv,
            rec_in,
            rec_hidden,
            rec_bias,
            fc_w,
            fc_b,
            head_w,
            head_b,
            total: off,
        }
    }

    /// Range of the auxiliary head rows (weights and biases) in the flat vector.
    pub fn auxiliary_ranges(&self, cfg: &NetConfig) -> [std::ops::Range<usize>; 2] {
        let first = super::config::VELOCITY_DIM + super::config::ACTION_CLASSES;
        let f = cfg.fc_hidden;
        [
            self.head_w + first * f..self.head_w + HEAD_DIM * f,
            self.head_b + first..self.head_b + HEAD_DIM,
        ]
    }
}

/// Recurrent memory of a set of parallel streams.
#[derive(Clone, Debug, PartialEq)]
pub struct StreamState {
    pub streams: usize,
    pub h: Vec<f64>,
    pub c: Vec<f64>,
    /// Previous `window - 1` step inputs per stream (window layer only).
    pub hist: Vec<f64>,
}

impl StreamState {
    pub fn zeros(cfg: &NetConfig, streams: usize) -> Self {
        Self {
            streams,
            h: vec![0.0; streams * cfg.lstm_hidden],
            c: vec![0.0; streams * cfg.lstm_hidden],
            hist: vec![0.0; streams * (cfg.window - 1) * cfg.step_input_len()],
        }
    }
}

/// A chunk of consecutive steps from `streams` parallel sequences; frame
/// `t * streams + b` is step `t` of stream `b`.
#[derive(Clone, Copy, Debug)]
pub struct Chunk<'a> {
    pub streams: usize,
    pub steps: usize,
    /// `[3, frames, res, res]`, values in [0, 1].
    pub images: &'a [f64],
    /// `[frames, 6]`, normalised joint angles.
    pub joints: &'a [f64],
    /// Recurrent memory is cleared before this step (episode start).
    pub reset: &'a [bool],
}

impl Chunk<'_> {
    pub fn frames(&self) -> usize {
        self.streams * self.steps
    }
}

/// Activations kept for the backward pass.
#[derive(Clone, Debug, Default)]
pub struct Cache {
    conv_cols: Vec<Vec<f64>>,
    conv_out: Vec<Vec<f64>>,
    // backward scratch, kept to avoid reallocating large buffers every chunk
    dcols: Vec<f64>,
    dact: Vec<Vec<f64>>,
    x: Vec<f64>,
    gates: Vec<f64>,
    c: Vec<f64>,
    c_prev: Vec<f64>,
    h_prev: Vec<f64>,
    h: Vec<f64>,
    window_in: Vec<f64>,
    window_src: Vec<Vec<Option<usize>>>,
    a: Vec<f64>,
    /// Stream state after every step: `(h, c)` rows, `[frames, H]` each.
    pub h_steps: Vec<f64>,
    pub c_steps: Vec<f64>,
}

impl Cache {
    /// On/off state of every rectifier in the pass.
    pub fn relu_pattern(&self) -> Vec<bool> {
        let mut out: Vec<bool> = self.conv_out.iter().flatten().map(|v| *v > 0.0).collect();
        if !self.window_in.is_empty() {
            out.extend(self.h.iter().map(|v| *v > 0.0));
        }
        out.extend(self.a.iter().map(|v| *v > 0.0));
        out
    }
}

#[derive(Clone, Debug)]
pub struct ControllerNet {
    pub config: NetConfig,
    pub params: Vec<f64>,
    pub layout: Layout,
    /// Deployment memory: LSTM state before the current window.
    pub recurrent_state: StreamState,
}

impl ControllerNet {
    pub fn new(config: NetConfig, seed: u64) -> Result<Self, NetError> {
        config.validate()?;
        let layout = Layout::new(&config);
        let mut params = vec![0.0; layout.total];
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let he = |rng: &mut ChaCha8Rng, slice: &mut [f64], fan_in: usize, gain: f64| {
            let n = Normal::new(0.0, gain * (1.0 / fan_in as f64).sqrt()).unwrap();
            for v in slice.iter_mut() {
                *v = n.sample(rng);
            }
        };
        let mut c_in = 3;
        for (l, &(w, b)) in layout.conv.iter().enumerate() {
            let k = config.conv_kernels[l];
            let c_out = config.conv_channels[l];
            he(&mut rng, &mut params[w..b], c_in * k * k, 2f64.sqrt());
            c_in = c_out;
        }
        let (h, d) = (config.lstm_hidden, config.step_input_len());
        if let Some(rh) = layout.rec_hidden {
            let bound = 1.0 / (h as f64).sqrt();
            let u = Uniform::new_inclusive(-bound, bound).unwrap();
            for v in params[layout.rec_in..rh + 4 * h * h].iter_mut() {
                *v = u.sample(&mut rng);
            }
            // forget-gate bias starts at one
            for v in params[layout.rec_bias + h..layout.rec_bias + 2 * h].iter_mut() {
                *v = 1.0;
            }
        } else {
            he(&mut rng, &mut params[layout.rec_in..layout.rec_bias], config.window * d, 2f64.sqrt());
        }
        he(&mut rng, &mut params[layout.fc_w..layout.fc_b], h, 2f64.sqrt());
        he(&mut rng, &mut params[layout.head_w..layout.head_b], config.fc_hidden, 1.0);
        let recurrent_state = StreamState::zeros(&config, 1);
        Ok(Self {
            config,
            params,
            layout,
            recurrent_state,
        })
    }

    pub fn with_params(config: NetConfig, params: Vec<f64>) -> Result<Self, NetError> {
        config.validate()?;
        let layout = Layout::new(&config);
        if params.len() != layout.total {
            return Err(NetError::ShapeMismatch(format!(
                "{} parameters for a network of {}",
                params.len(),
                layout.total
            )));
        }
        let recurrent_state = StreamState::zeros(&config, 1);
        Ok(Self {
            config,
            params,
            layout,
            recurrent_state,
        })
    }

    pub fn param_count(&self) -> usize {
        self.layout.total
    }

    fn conv_shape(&self, l: usize, frames: usize) -> ConvShape {
        let cfg = &self.config;
        let sizes = cfg.spatial_sizes();
        ConvShape {
            c_in: if l == 0 { 3 } else { cfg.conv_channels[l - 1] },
            c_out: cfg.conv_channels[l],
            size_in: if l == 0 { cfg.input_resolution } else { sizes[l - 1] },
            size_out: sizes[l],
            kernel: cfg.conv_kernels[l],
            stride: cfg.conv_strides[l],
            pad: cfg.padding(l),
            frames,
        }
    }

    /// Runs the chunk from `state`, leaving the state after the last step.
    /// Returns head outputs `[frames, HEAD_DIM]` and the backward cache.
    pub fn forward_chunk(&self, chunk: &Chunk, state: &mut StreamState) -> Result<(Vec<f64>, Cache), NetError> {
        let mut cache = Cache::default();
        let y = self.forward_into(chunk, state, &mut cache)?;
        Ok((y, cache))
    }

    /// [`forward_chunk`](Self::forward_chunk) reusing the buffers of an earlier cache.
    pub fn forward_into(&self, chunk: &Chunk, state: &mut StreamState, cache: &mut Cache) -> Result<Vec<f64>, NetError> {
        let cfg = &self.config;
        let p = &self.params;
        let (bsz, steps) = (chunk.streams, chunk.steps);
        let n = chunk.frames();
        let res = cfg.input_resolution;
        if chunk.images.len() != 3 * n * res * res || chunk.joints.len() != n * JOINT_DIM || chunk.reset.len() != n {
            return Err(NetError::ShapeMismatch(format!(
                "chunk of {n} frames at {res}px has {} image values, {} joint values, {} reset flags",
                chunk.images.len(),
                chunk.joints.len(),
                chunk.reset.len()
            )));
        }
        if state.streams != bsz {
            return Err(NetError::ShapeMismatch(format!("state for {} streams, chunk has {bsz}", state.streams)));
        }
        // convolution stack, batch layout [channels, frames, h, w]
        let layers = cfg.conv_channels.len();
        cache.conv_cols.resize_with(layers, Vec::new);
        cache.conv_out.resize_with(layers, Vec::new);
        for l in 0..layers {
            let s = self.conv_shape(l, n);
            let (w, b) = self.layout.conv[l];
            let (done, rest) = cache.conv_out.split_at_mut(l);
            let input: &[f64] = if l == 0 { chunk.images } else { &done[l - 1] };
            let cols = &mut cache.conv_cols[l];
            im2col(&s, input, cols);
            let m = s.cols();
            let out = &mut rest[0];
            out.resize(s.c_out * m, 0.0);
            for (co, row) in out.chunks_mut(m).enumerate() {
                row.fill(p[b + co]);
            }
            gemm(s.c_out, s.rows(), m, &p[w..b], false, cols, false, out, 1.0);
            for v in out.iter_mut() {
                *v = v.max(0.0);
            }
        }
        let act = &cache.conv_out[layers - 1];

        // per-frame step inputs [frames, D]
        let fl = cfg.feature_len();
        let d = cfg.step_input_len();
        let c_last = *cfg.conv_channels.last().unwrap();
        let ss = fl / c_last;
        let mut x = vec![0.0; n * d];
        for f in 0..n {
            let row = &mut x[f * d..(f + 1) * d];
            for c in 0..c_last {
                row[c * ss..(c + 1) * ss].copy_from_slice(&act[(c * n + f) * ss..][..ss]);
            }
            if cfg.use_joint_angles {
                row[fl..].copy_from_slice(&chunk.joints[f * JOINT_DIM..(f + 1) * JOINT_DIM]);
            }
        }

        let hd = cfg.lstm_hidden;
        let mut h_all = vec![0.0; n * hd];
        if let Some(rh) = self.layout.rec_hidden {
            let wx = &p[self.layout.rec_in..rh];
            let wh = &p[rh..self.layout.rec_bias];
            let bias = &p[self.layout.rec_bias..self.layout.rec_bias + 4 * hd];
            let mut gates = vec![0.0; n * 4 * hd];
            let mut c_all = vec![0.0; n * hd];
            let mut c_prev_all = vec![0.0; n * hd];
            let mut h_prev_all = vec![0.0; n * hd];
            // input contributions for all frames at once
            let mut zx = vec![0.0; n * 4 * hd];
            gemm(n, d, 4 * hd, &x, false, wx, true, &mut zx, 0.0);
            for t in 0..steps {
                let rows = t * bsz..(t + 1) * bsz;
                for b in 0..bsz {
                    let f = t * bsz + b;
                    if chunk.reset[f] {
                        state.h[b * hd..(b + 1) * hd].fill(0.0);
                        state.c[b * hd..(b + 1) * hd].fill(0.0);
                    }
                }
                let mut z = zx[rows.start * 4 * hd..rows.end * 4 * hd].to_vec();
                gemm(bsz, hd, 4 * hd, &state.h, false, wh, true, &mut z, 1.0);
                for b in 0..bsz {
                    let f = t * bsz + b;
                    h_prev_all[f * hd..(f + 1) * hd].copy_from_slice(&state.h[b * hd..(b + 1) * hd]);
                    c_prev_all[f * hd..(f + 1) * hd].copy_from_slice(&state.c[b * hd..(b + 1) * hd]);
                    let zr = &z[b * 4 * hd..(b + 1) * 4 * hd];
                    let g = &mut gates[f * 4 * hd..(f + 1) * 4 * hd];
                    for j in 0..hd {
                        let i_g = sigmoid(zr[j] + bias[j]);
                        let f_g = sigmoid(zr[hd + j] + bias[hd + j]);
                        let g_g = (zr[2 * hd + j] + bias[2 * hd + j]).tanh();
                        let o_g = sigmoid(zr[3 * hd + j] + bias[3 * hd + j]);
                        g[j] = i_g;
                        g[hd + j] = f_g;
                        g[2 * hd + j] = g_g;
                        g[3 * hd + j] = o_g;
                        let c = f_g * state.c[b * hd + j] + i_g * g_g;
                        state.c[b * hd + j] = c;
                        let h = o_g * c.tanh();
                        state.h[b * hd + j] = h;
                        c_all[f * hd + j] = c;
                        h_all[f * hd + j] = h;
                    }
                }
            }
            cache.h_steps = h_all.clone();
            cache.c_steps = c_all.clone();
            cache.gates = gates;
            cache.c = c_all;
            cache.c_prev = c_prev_all;
            cache.h_prev = h_prev_all;
        } else {
            let win = cfg.window;
            let wd = win * d;
            let w_in = &p[self.layout.rec_in..self.layout.rec_bias];
            let bias = &p[self.layout.rec_bias..self.layout.rec_bias + hd];
            let mut window_in = vec![0.0; n * wd];
            let mut src: Vec<Vec<Option<usize>>> = vec![vec![None; win]; n];
            // source frame of each history slot, per stream
            let mut hist_src: Vec<Vec<Option<usize>>> = vec![vec![None; win - 1]; bsz];
            for t in 0..steps {
                for b in 0..bsz {
                    let f = t * bsz + b;
                    let xf = &x[f * d..(f + 1) * d];
                    let hist = &mut state.hist[b * (win - 1) * d..(b + 1) * (win - 1) * d];
                    if chunk.reset[f] {
                        for k in 0..win - 1 {
                            hist[k * d..(k + 1) * d].copy_from_slice(xf);
                            hist_src[b][k] = Some(f);
                        }
                    }
                    let row = &mut window_in[f * wd..(f + 1) * wd];
                    row[..(win - 1) * d].copy_from_slice(hist);
                    row[(win - 1) * d..].copy_from_slice(xf);
                    src[f][..win - 1].copy_from_slice(&hist_src[b]);
                    src[f][win - 1] = Some(f);
                    if win > 1 {
                        hist.copy_within(d.., 0);
                        hist[(win - 2) * d..].copy_from_slice(xf);
                        hist_src[b].remove(0);
                        hist_src[b].push(Some(f));
                    }
                }
            }
            for f in 0..n {
                h_all[f * hd..(f + 1) * hd].copy_from_slice(bias);
            }
            gemm(n, wd, hd, &window_in, false, w_in, true, &mut h_all, 1.0);
            for v in h_all.iter_mut() {
                *v = v.max(0.0);
            }
            cache.window_in = window_in;
            cache.window_src = src;
        }

        let fd = cfg.fc_hidden;
        let mut a = vec![0.0; n * fd];
        for f in 0..n {
            a[f * fd..(f + 1) * fd].copy_from_slice(&p[self.layout.fc_b..self.layout.fc_b + fd]);
        }
        gemm(n, hd, fd, &h_all, false, &p[self.layout.fc_w..self.layout.fc_b], true, &mut a, 1.0);
        for v in a.iter_mut() {
            *v = v.max(0.0);
        }
        let mut y = vec![0.0; n * HEAD_DIM];
        for f in 0..n {
            y[f * HEAD_DIM..(f + 1) * HEAD_DIM].copy_from_slice(&p[self.layout.head_b..self.layout.head_b + HEAD_DIM]);
        }
        gemm(n, fd, HEAD_DIM, &a, false, &p[self.layout.head_w..self.layout.head_b], true, &mut y, 1.0);

        cache.x = x;
        cache.h = h_all;
        cache.a = a;
        Ok(y)
    }

    /// Accumulates into `grad` the gradient of a loss whose derivative with
    /// respect to the head outputs is `dy` (`[frames, HEAD_DIM]`). Gradients
    /// stop at the chunk's incoming state and at episode resets.
    pub fn backward_chunk(&self, chunk: &Chunk, cache: &mut Cache, dy: &[f64], grad: &mut [f64]) {
        let cfg = &self.config;
        let p = &self.params;
        let l = &self.layout;
        let (bsz, steps) = (chunk.streams, chunk.steps);
        let n = chunk.frames();
        let (hd, fd, d) = (cfg.lstm_hidden, cfg.fc_hidden, cfg.step_input_len());

        // heads
        gemm(HEAD_DIM, n, fd, dy, true, &cache.a, false, &mut grad[l.head_w..l.head_b], 1.0);
        for f in 0..n {
            for k in 0..HEAD_DIM {
                grad[l.head_b + k] += dy[f * HEAD_DIM + k];
            }
        }
        let mut da = vec![0.0; n * fd];
        gemm(n, HEAD_DIM, fd, dy, false, &p[l.head_w..l.head_b], false, &mut da, 0.0);
        for (g, a) in da.iter_mut().zip(&cache.a) {
            if *a <= 0.0 {
                *g = 0.0;
            }
        }
        // fc
        gemm(fd, n, hd, &da, true, &cache.h, false, &mut grad[l.fc_w..l.fc_b], 1.0);
        for f in 0..n {
            for k in 0..fd {
                grad[l.fc_b + k] += da[f * fd + k];
            }
        }
        let mut dh = vec![0.0; n * hd];
        gemm(n, fd, hd, &da, false, &p[l.fc_w..l.fc_b], false, &mut dh, 0.0);

        let mut dx = vec![0.0; n * d];
        if let Some(rh) = l.rec_hidden {
            let mut dz = vec![0.0; n * 4 * hd];
            let mut dh_next = vec![0.0; bsz * hd];
            let mut dc_next = vec![0.0; bsz * hd];
            let wh = &p[rh..l.rec_bias];
            for t in (0..steps).rev() {
                for b in 0..bsz {
                    let f = t * bsz + b;
                    let g = &cache.gates[f * 4 * hd..(f + 1) * 4 * hd];
                    let dzr = &mut dz[f * 4 * hd..(f + 1) * 4 * hd];
                    for j in 0..hd {
                        let (i_g, f_g, g_g, o_g) = (g[j], g[hd + j], g[2 * hd + j], g[3 * hd + j]);
                        let c = cache.c[f * hd + j];
                        let tc = c.tanh();
                        let dht = dh[f * hd + j] + dh_next[b * hd + j];
                        let dct = dc_next[b * hd + j] + dht * o_g * (1.0 - tc * tc);
                        dzr[j] = dct * g_g * i_g * (1.0 - i_g);
                        dzr[hd + j] = dct * cache.c_prev[f * hd + j] * f_g * (1.0 - f_g);
                        dzr[2 * hd + j] = dct * i_g * (1.0 - g_g * g_g);
                        dzr[3 * hd + j] = dht * tc * o_g * (1.0 - o_g);
                        dc_next[b * hd + j] = dct * f_g;
                    }
                }
                // dh into the previous step through the recurrent weights
                let rows = &dz[t * bsz * 4 * hd..(t + 1) * bsz * 4 * hd];
                gemm(bsz, 4 * hd, hd, rows, false, wh, false, &mut dh_next, 0.0);
                for b in 0..bsz {
                    if chunk.reset[t * bsz + b] {
                        dh_next[b * hd..(b + 1) * hd].fill(0.0);
                        dc_next[b * hd..(b + 1) * hd].fill(0.0);
                    }
                }
            }
            gemm(4 * hd, n, d, &dz, true, &cache.x, false, &mut grad[l.rec_in..rh], 1.0);
            gemm(4 * hd, n, hd, &dz, true, &cache.h_prev, false, &mut grad[rh..l.rec_bias], 1.0);
            for f in 0..n {
                for k in 0..4 * hd {
                    grad[l.rec_bias + k] += dz[f * 4 * hd + k];
                }
            }
            gemm(n, 4 * hd, d, &dz, false, &p[l.rec_in..rh], false, &mut dx, 0.0);
        } else {
            let wd = cfg.window * d;
            let mut du = dh;
            for (g, h) in du.iter_mut().zip(&cache.h) {
                if *h <= 0.0 {
                    *g = 0.0;
                }
            }
            gemm(hd, n, wd, &du, true, &cache.window_in, false, &mut grad[l.rec_in..l.rec_bias], 1.0);
            for f in 0..n {
                for k in 0..hd {
                    grad[l.rec_bias + k] += du[f * hd + k];
                }
            }
            let mut dwin = vec![0.0; n * wd];
            gemm(n, hd, wd, &du, false, &p[l.rec_in..l.rec_bias], false, &mut dwin, 0.0);
            for f in 0..n {
                for (slot, src) in cache.window_src[f].iter().enumerate() {
                    if let Some(s) = src {
                        for k in 0..d {
                            dx[s * d + k] += dwin[f * wd + slot * d + k];
                        }
                    }
                }
            }
        }

        // back into the conv stack
        let fl = cfg.feature_len();
        let c_last = *cfg.conv_channels.last().unwrap();
        let ss = fl / c_last;
        let layers = cfg.conv_channels.len();
        let mut dact_bufs = std::mem::take(&mut cache.dact);
        let mut dcols = std::mem::take(&mut cache.dcols);
        dact_bufs.resize_with(layers, Vec::new);
        let dact = &mut dact_bufs[layers - 1];
        dact.resize(c_last * n * ss, 0.0);
        for f in 0..n {
            for c in 0..c_last {
                dact[(c * n + f) * ss..][..ss].copy_from_slice(&dx[f * d + c * ss..][..ss]);
            }
        }
        for li in (0..layers).rev() {
            let s = self.conv_shape(li, n);
            let (w, b) = l.conv[li];
            let m = s.cols();
            let (below, here) = dact_bufs.split_at_mut(li);
            let dact = &mut here[0];
            for (g, o) in dact.iter_mut().zip(&cache.conv_out[li]) {
                if *o <= 0.0 {
                    *g = 0.0;
                }
            }
            gemm(s.c_out, m, s.rows(), dact, false, &cache.conv_cols[li], true, &mut grad[w..b], 1.0);
            for co in 0..s.c_out {
                grad[b + co] += dact[co * m..(co + 1) * m].iter().sum::<f64>();
            }
            if li == 0 {
                break;
            }
            dcols.resize(s.rows() * m, 0.0);
            gemm(s.rows(), s.c_out, m, &p[w..b], true, dact, false, &mut dcols, 0.0);
            let dinput = &mut below[li - 1];
            dinput.clear();
            dinput.resize(s.c_in * n * s.size_in * s.size_in, 0.0);
            col2im(&s, &dcols, dinput);
        }
        cache.dact = dact_bufs;
        cache.dcols = dcols;
    }
}
