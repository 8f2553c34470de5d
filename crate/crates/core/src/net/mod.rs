//! The predictive model: trainable word embeddings, a bidirectional LSTM
//! encoder whose final forward and backward states are concatenated, and
//! two softmax heads giving the reaction and emotion distributions.
//!
//! Parameters live in one flat `Vec<f64>` addressed through [`ParamLayout`]
//! segments, so the same vector feeds the tape builder (training), the
//! plain-value forward pass (evaluation) and the checkpoint serializer.

use std::path::Path;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

use crate::folc::{N_EMOTIONS, N_REACTIONS};
use crate::graph::{sigmoid, NodeId, Tape};
use crate::textprep::Vocabulary;

/// Gate block order inside LSTM weight matrices: input, forget, candidate,
/// output.
const GATE_I: usize = 0;
const GATE_F: usize = 1;
const GATE_G: usize = 2;
const GATE_O: usize = 3;
const N_GATES: usize = 4;

#[derive(Debug, thiserror::Error)]
pub enum NetError {
    #[error("cannot encode an empty token sequence")]
    EmptySequence,
    #[error("token id {id} is outside the vocabulary (size {vocab_size})")]
    UnknownId { id: u32, vocab_size: usize },
    #[error("invalid model config: {0}")]
    InvalidConfig(String),
    #[error("parameter vector holds {got} values, layout needs {expected}")]
    ParamCount { expected: usize, got: usize },
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Json {
        path: String,
        #[source]
        source: serde_json::Error,
    },
    #[error("checkpoint was trained against a different vocabulary (expected hash {expected}, found {found})")]
    VocabMismatch { expected: String, found: String },
    #[error("tensor {name}: expected shape {expected:?}, found {found:?}")]
    ShapeMismatch { name: String, expected: Vec<usize>, found: Vec<usize> },
    #[error("checkpoint is missing tensor {0}")]
    MissingTensor(String),
    #[error("embedding file {path} line {line}: {message}")]
    BadEmbeddingRow { path: String, line: usize, message: String },
}

/// Model dimensions and inference-time options.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct NetConfig {
    /// Total vocabulary size including the special ids.
    pub vocab_size: usize,
    pub d_emb: usize,
    pub d_h: usize,
    /// Optional hidden layer (tanh) in each head; `None` is a single
    /// affine map.
    pub head_hidden_reaction: Option<usize>,
    pub head_hidden_emotion: Option<usize>,
    /// Dropout rate on the concatenated encoder state, training mode only.
    pub dropout: f64,
    pub max_len: usize,
}

impl Default for NetConfig {
    fn default() -> NetConfig {
        NetConfig {
            vocab_size: 0,
            d_emb: 100,
            d_h: 100,
            head_hidden_reaction: None,
            head_hidden_emotion: None,
            dropout: 0.0,
            max_len: 30,
        }
    }
}

/// Contiguous slice of the flat parameter vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Segment {
    pub offset: usize,
    pub len: usize,
}

impl Segment {
    fn slice<'a>(&self, params: &'a [f64]) -> &'a [f64] {
        &params[self.offset..self.offset + self.len]
    }
}

#[derive(Debug, Clone, Copy)]
pub struct LstmLayout {
    /// `[4*d_h, d_in]`, row-major, gate blocks in i, f, g, o order.
    pub w_x: Segment,
    /// `[4*d_h, d_h]`, row-major.
    pub w_h: Segment,
    /// `[4*d_h]`.
    pub b: Segment,
}

#[derive(Debug, Clone, Copy)]
pub struct HeadLayout {
    /// Optional `(w, b)` of a tanh hidden layer.
    pub hidden: Option<(Segment, Segment)>,
    pub w: Segment,
    pub b: Segment,
}

/// Where each tensor lives inside the flat parameter vector.
#[derive(Debug, Clone)]
pub struct ParamLayout {
    pub embedding: Segment,
    pub fwd: LstmLayout,
    pub bwd: LstmLayout,
    pub reaction: HeadLayout,
    pub emotion: HeadLayout,
    pub total: usize,
}

struct Alloc(usize);

impl Alloc {
    fn seg(&mut self, len: usize) -> Segment {
        let offset = self.0;
        self.0 += len;
        Segment { offset, len }
    }

    fn lstm(&mut self, d_in: usize, d_h: usize) -> LstmLayout {
        LstmLayout {
            w_x: self.seg(N_GATES * d_h * d_in),
            w_h: self.seg(N_GATES * d_h * d_h),
            b: self.seg(N_GATES * d_h),
        }
    }

    fn head(&mut self, d_in: usize, hidden: Option<usize>, d_out: usize) -> HeadLayout {
        let (hidden, out_in) = match hidden {
            Some(h) => (Some((self.seg(h * d_in), self.seg(h))), h),
            None => (None, d_in),
        };
        HeadLayout { hidden, w: self.seg(d_out * out_in), b: self.seg(d_out) }
    }
}

impl ParamLayout {
    fn new(cfg: &NetConfig) -> ParamLayout {
        let mut a = Alloc(0);
        let embedding = a.seg(cfg.vocab_size * cfg.d_emb);
        let fwd = a.lstm(cfg.d_emb, cfg.d_h);
        let bwd = a.lstm(cfg.d_emb, cfg.d_h);
        let reaction = a.head(2 * cfg.d_h, cfg.head_hidden_reaction, N_REACTIONS);
        let emotion = a.head(2 * cfg.d_h, cfg.head_hidden_emotion, N_EMOTIONS);
        ParamLayout { embedding, fwd, bwd, reaction, emotion, total: a.0 }
    }
}

/// The model: a config plus the derived parameter layout. Parameter values
/// travel separately as a flat `&[f64]`.
#[derive(Debug, Clone)]
pub struct Net {
    cfg: NetConfig,
    layout: ParamLayout,
}

impl Net {
    pub fn new(cfg: NetConfig) -> Result<Net, NetError> {
        if cfg.vocab_size < 1 {
            return Err(NetError::InvalidConfig("vocab_size must be at least 1".into()));
        }
        if cfg.d_emb < 1 || cfg.d_h < 1 {
            return Err(NetError::InvalidConfig("d_emb and d_h must be at least 1".into()));
        }
        if !(0.0..1.0).contains(&cfg.dropout) {
            return Err(NetError::InvalidConfig("dropout must be in [0, 1)".into()));
        }
        if cfg.max_len < 1 {
            return Err(NetError::InvalidConfig("max_len must be at least 1".into()));
        }
        if cfg.head_hidden_reaction == Some(0) || cfg.head_hidden_emotion == Some(0) {
            return Err(NetError::InvalidConfig("head hidden size must be nonzero".into()));
        }
        let layout = ParamLayout::new(&cfg);
        Ok(Net { cfg, layout })
    }

    pub fn config(&self) -> &NetConfig {
        &self.cfg
    }

    pub fn layout(&self) -> &ParamLayout {
        &self.layout
    }

    pub fn n_params(&self) -> usize {
        self.layout.total
    }

    /// Fresh parameters: embeddings uniform(±0.05), affine maps
    /// uniform(±1/√fan_in), biases zero except the forget-gate block at 1.
    pub fn init_params(&self, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let mut params = vec![0.0; self.layout.total];

        let fill = |params: &mut Vec<f64>, seg: Segment, a: f64, rng: &mut ChaCha20Rng| {
            for v in &mut params[seg.offset..seg.offset + seg.len] {
                *v = rng.random_range(-a..a);
            }
        };

        fill(&mut params, self.layout.embedding, 0.05, &mut rng);
        for lstm in [self.layout.fwd, self.layout.bwd] {
            fill(&mut params, lstm.w_x, 1.0 / (self.cfg.d_emb as f64).sqrt(), &mut rng);
            fill(&mut params, lstm.w_h, 1.0 / (self.cfg.d_h as f64).sqrt(), &mut rng);
            let forget = lstm.b.offset + GATE_F * self.cfg.d_h;
            for v in &mut params[forget..forget + self.cfg.d_h] {
                *v = 1.0;
            }
        }
        for (head, hidden_cfg) in [
            (self.layout.reaction, self.cfg.head_hidden_reaction),
            (self.layout.emotion, self.cfg.head_hidden_emotion),
        ] {
            let mut fan_in = 2 * self.cfg.d_h;
            if let Some((w, _)) = head.hidden {
                fill(&mut params, w, 1.0 / (fan_in as f64).sqrt(), &mut rng);
                fan_in = hidden_cfg.expect("hidden layout implies hidden config");
            }
            fill(&mut params, head.w, 1.0 / (fan_in as f64).sqrt(), &mut rng);
        }
        params
    }

    fn validate_ids<'a>(&self, ids: &'a [u32]) -> Result<&'a [u32], NetError> {
        if ids.is_empty() {
            return Err(NetError::EmptySequence);
        }
        for &id in ids {
            if id as usize >= self.cfg.vocab_size {
                return Err(NetError::UnknownId { id, vocab_size: self.cfg.vocab_size });
            }
        }
        Ok(&ids[..ids.len().min(self.cfg.max_len)])
    }

    // ------------------------------------------------------------- values

    fn affine_values(&self, params: &[f64], w: Segment, b: Segment, x: &[f64], out: &mut [f64]) {
        let w = w.slice(params);
        let b = b.slice(params);
        let d_in = x.len();
        for (row, o) in out.iter_mut().enumerate() {
            let mut acc = 0.0;
            for (j, xv) in x.iter().enumerate() {
                acc += w[row * d_in + j] * xv;
            }
            *o = acc + b[row];
        }
    }

    fn lstm_step_values(
        &self,
        params: &[f64],
        lstm: &LstmLayout,
        x: &[f64],
        h: &mut Vec<f64>,
        c: &mut Vec<f64>,
    ) {
        let d_h = self.cfg.d_h;
        let mut pre = vec![0.0; N_GATES * d_h];
        self.affine_values(params, lstm.w_x, lstm.b, x, &mut pre);
        let w_h = lstm.w_h.slice(params);
        for row in 0..N_GATES * d_h {
            for (j, hv) in h.iter().enumerate() {
                pre[row] += w_h[row * d_h + j] * hv;
            }
        }
        for u in 0..d_h {
            let i = sigmoid(pre[GATE_I * d_h + u]);
            let f = sigmoid(pre[GATE_F * d_h + u]);
            let g = pre[GATE_G * d_h + u].tanh();
            let o = sigmoid(pre[GATE_O * d_h + u]);
            c[u] = f * c[u] + i * g;
            h[u] = o * c[u].tanh();
        }
    }

    /// Concatenated final forward and backward states, evaluation mode.
    pub fn encode_values(&self, params: &[f64], ids: &[u32]) -> Result<Vec<f64>, NetError> {
        self.check_params(params)?;
        let ids = self.validate_ids(ids)?;
        let d = self.cfg.d_emb;
        let emb = |id: u32| {
            let off = self.layout.embedding.offset + id as usize * d;
            &params[off..off + d]
        };

        let mut state = Vec::with_capacity(2 * self.cfg.d_h);
        for (lstm, rev) in [(&self.layout.fwd, false), (&self.layout.bwd, true)] {
            let mut h = vec![0.0; self.cfg.d_h];
            let mut c = vec![0.0; self.cfg.d_h];
            let positions: Vec<usize> =
                if rev { (0..ids.len()).rev().collect() } else { (0..ids.len()).collect() };
            for t in positions {
                self.lstm_step_values(params, lstm, emb(ids[t]), &mut h, &mut c);
            }
            state.extend_from_slice(&h);
        }
        Ok(state)
    }

    fn head_values(&self, params: &[f64], head: &HeadLayout, state: &[f64], n_out: usize) -> Vec<f64> {
        let mut input = state.to_vec();
        if let Some((w, b)) = head.hidden {
            let mut hid = vec![0.0; b.len];
            self.affine_values(params, w, b, &input, &mut hid);
            for v in &mut hid {
                *v = v.tanh();
            }
            input = hid;
        }
        let mut logits = vec![0.0; n_out];
        self.affine_values(params, head.w, head.b, &input, &mut logits);
        softmax_values(&logits)
    }

    /// Both class distributions for one sentence, evaluation mode.
    pub fn forward_values(&self, params: &[f64], ids: &[u32]) -> Result<(Vec<f64>, Vec<f64>), NetError> {
        let state = self.encode_values(params, ids)?;
        let p_r = self.head_values(params, &self.layout.reaction, &state, N_REACTIONS);
        let p_e = self.head_values(params, &self.layout.emotion, &state, N_EMOTIONS);
        Ok((p_r, p_e))
    }

    fn check_params(&self, params: &[f64]) -> Result<(), NetError> {
        if params.len() != self.layout.total {
            return Err(NetError::ParamCount { expected: self.layout.total, got: params.len() });
        }
        Ok(())
    }

    // --------------------------------------------------------------- tape

    fn affine_on_tape(
        &self,
        tape: &mut Tape,
        w: Segment,
        b: Segment,
        x: &[NodeId],
        n_out: usize,
    ) -> Vec<NodeId> {
        let d_in = x.len();
        (0..n_out)
            .map(|row| {
                let mut acc: Option<NodeId> = None;
                for (j, &xn) in x.iter().enumerate() {
                    let wn = tape.param(w.offset + row * d_in + j);
                    let term = tape.mul(wn, xn);
                    acc = Some(match acc {
                        Some(a) => tape.add(a, term),
                        None => term,
                    });
                }
                let bn = tape.param(b.offset + row);
                match acc {
                    Some(a) => tape.add(a, bn),
                    None => bn,
                }
            })
            .collect()
    }

    fn lstm_step_on_tape(
        &self,
        tape: &mut Tape,
        lstm: &LstmLayout,
        x: &[NodeId],
        h: &mut Vec<NodeId>,
        c: &mut Vec<NodeId>,
    ) {
        let d_h = self.cfg.d_h;
        let mut pre = self.affine_on_tape(tape, lstm.w_x, lstm.b, x, N_GATES * d_h);
        for (row, p) in pre.iter_mut().enumerate() {
            for (j, &hn) in h.iter().enumerate() {
                let wn = tape.param(lstm.w_h.offset + row * d_h + j);
                let term = tape.mul(wn, hn);
                *p = tape.add(*p, term);
            }
        }
        for u in 0..d_h {
            let i = tape.sigmoid(pre[GATE_I * d_h + u]);
            let f = tape.sigmoid(pre[GATE_F * d_h + u]);
            let g = tape.tanh(pre[GATE_G * d_h + u]);
            let o = tape.sigmoid(pre[GATE_O * d_h + u]);
            let fc = tape.mul(f, c[u]);
            let ig = tape.mul(i, g);
            c[u] = tape.add(fc, ig);
            let ct = tape.tanh(c[u]);
            h[u] = tape.mul(o, ct);
        }
    }

    fn softmax_on_tape(&self, tape: &mut Tape, logits: &[NodeId]) -> Vec<NodeId> {
        let exps: Vec<NodeId> = logits.iter().map(|&z| tape.exp(z)).collect();
        let total = tape.sum(&exps);
        exps.into_iter().map(|e| tape.div(e, total)).collect()
    }

    fn head_on_tape(
        &self,
        tape: &mut Tape,
        head: &HeadLayout,
        state: &[NodeId],
        n_out: usize,
    ) -> Vec<NodeId> {
        let mut input = state.to_vec();
        if let Some((w, b)) = head.hidden {
            input = self
                .affine_on_tape(tape, w, b, &input, b.len)
                .into_iter()
                .map(|n| tape.tanh(n))
                .collect();
        }
        let logits = self.affine_on_tape(tape, head.w, head.b, &input, n_out);
        self.softmax_on_tape(tape, &logits)
    }

    /// Builds the full forward pass for one sentence. `dropout_mask`, when
    /// given, multiplies the concatenated state componentwise (training
    /// mode; values are expected to be 0 or 1/(1-rate)).
    pub fn build_forward(
        &self,
        tape: &mut Tape,
        ids: &[u32],
        dropout_mask: Option<&[f64]>,
    ) -> Result<(Vec<NodeId>, Vec<NodeId>), NetError> {
        let ids = self.validate_ids(ids)?;
        let d = self.cfg.d_emb;

        let mut state: Vec<NodeId> = Vec::with_capacity(2 * self.cfg.d_h);
        for (lstm, rev) in [(&self.layout.fwd, false), (&self.layout.bwd, true)] {
            let zero = tape.constant(0.0);
            let mut h = vec![zero; self.cfg.d_h];
            let mut c = vec![zero; self.cfg.d_h];
            let positions: Vec<usize> =
                if rev { (0..ids.len()).rev().collect() } else { (0..ids.len()).collect() };
            for t in positions {
                let off = self.layout.embedding.offset + ids[t] as usize * d;
                let x: Vec<NodeId> = (0..d).map(|j| tape.param(off + j)).collect();
                self.lstm_step_on_tape(tape, lstm, &x, &mut h, &mut c);
            }
            state.extend_from_slice(&h);
        }

        if let Some(mask) = dropout_mask {
            assert_eq!(mask.len(), state.len(), "dropout mask length");
            for (s, &m) in state.iter_mut().zip(mask) {
                *s = tape.scale(*s, m);
            }
        }

        let p_r = self.head_on_tape(tape, &self.layout.reaction, &state, N_REACTIONS);
        let p_e = self.head_on_tape(tape, &self.layout.emotion, &state, N_EMOTIONS);
        Ok((p_r, p_e))
    }

    /// Tensor names and shapes in layout order.
    fn tensor_specs(&self) -> Vec<(String, Vec<usize>, Segment)> {
        let c = &self.cfg;
        let l = &self.layout;
        let mut out = vec![(
            "embedding".to_string(),
            vec![c.vocab_size, c.d_emb],
            l.embedding,
        )];
        for (name, lstm) in [("lstm_fwd", &l.fwd), ("lstm_bwd", &l.bwd)] {
            out.push((format!("{name}.w_x"), vec![N_GATES * c.d_h, c.d_emb], lstm.w_x));
            out.push((format!("{name}.w_h"), vec![N_GATES * c.d_h, c.d_h], lstm.w_h));
            out.push((format!("{name}.b"), vec![N_GATES * c.d_h], lstm.b));
        }
        for (name, head, n_out, hidden) in [
            ("head_reaction", &l.reaction, N_REACTIONS, c.head_hidden_reaction),
            ("head_emotion", &l.emotion, N_EMOTIONS, c.head_hidden_emotion),
        ] {
            let mut d_in = 2 * c.d_h;
            if let Some((w, b)) = head.hidden {
                let h = hidden.expect("hidden layout implies hidden config");
                out.push((format!("{name}.hidden_w"), vec![h, d_in], w));
                out.push((format!("{name}.hidden_b"), vec![h], b));
                d_in = h;
            }
            out.push((format!("{name}.w"), vec![n_out, d_in], head.w));
            out.push((format!("{name}.b"), vec![n_out], head.b));
        }
        out
    }

    /// Overwrites embedding rows for vocabulary tokens found in a
    /// whitespace-separated `token v1 .. v_d` file. Returns how many rows
    /// were replaced; absent tokens keep their random initialization.
    pub fn load_pretrained_embeddings(
        &self,
        params: &mut [f64],
        path: &Path,
        vocab: &Vocabulary,
    ) -> Result<usize, NetError> {
        self.check_params(params)?;
        let text = std::fs::read_to_string(path)
            .map_err(|source| NetError::Io { path: path.display().to_string(), source })?;
        let mut replaced = 0;
        for (idx, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let mut fields = line.split_whitespace();
            let token = fields.next().expect("nonblank line has a first field");
            let values: Vec<f64> = fields
                .map(|f| f.parse::<f64>())
                .collect::<Result<_, _>>()
                .map_err(|e| NetError::BadEmbeddingRow {
                    path: path.display().to_string(),
                    line: idx + 1,
                    message: e.to_string(),
                })?;
            if values.len() != self.cfg.d_emb {
                return Err(NetError::BadEmbeddingRow {
                    path: path.display().to_string(),
                    line: idx + 1,
                    message: format!(
                        "expected {} values, found {}",
                        self.cfg.d_emb,
                        values.len()
                    ),
                });
            }
            let id = vocab.id(token);
            if id == crate::textprep::UNK_ID && token != crate::textprep::UNK_TOKEN {
                continue;
            }
            let off = self.layout.embedding.offset + id as usize * self.cfg.d_emb;
            params[off..off + self.cfg.d_emb].copy_from_slice(&values);
            replaced += 1;
        }
        Ok(replaced)
    }
}

/// Softmax without max-shifting, mirroring the tape construction exactly.
pub fn softmax_values(logits: &[f64]) -> Vec<f64> {
    let exps: Vec<f64> = logits.iter().map(|z| z.exp()).collect();
    let total: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / total).collect()
}

/// Index of the largest component; ties break toward the lower index.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate().skip(1) {
        if *v > values[best] {
            best = i;
        }
    }
    best
}

/// One named parameter tensor inside a checkpoint.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct Tensor {
    pub name: String,
    pub shape: Vec<usize>,
    pub data: Vec<f64>,
}

/// Self-describing model container: config echo, vocabulary hash and all
/// parameter tensors with named shapes.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct Checkpoint {
    pub net: NetConfig,
    /// Echo of the run configuration that produced the parameters.
    pub run_config: serde_json::Value,
    pub vocab_sha256: String,
    pub tensors: Vec<Tensor>,
}

impl Checkpoint {
    pub fn assemble(
        net: &Net,
        params: &[f64],
        vocab_sha256: impl Into<String>,
        run_config: serde_json::Value,
    ) -> Result<Checkpoint, NetError> {
        net.check_params(params)?;
        let tensors = net
            .tensor_specs()
            .into_iter()
            .map(|(name, shape, seg)| Tensor { name, shape, data: seg.slice(params).to_vec() })
            .collect();
        Ok(Checkpoint {
            net: net.cfg.clone(),
            run_config,
            vocab_sha256: vocab_sha256.into(),
            tensors,
        })
    }

    pub fn save(&self, path: &Path) -> Result<(), NetError> {
        let file = std::fs::File::create(path)
            .map_err(|source| NetError::Io { path: path.display().to_string(), source })?;
        serde_json::to_writer(std::io::BufWriter::new(file), self)
            .map_err(|source| NetError::Json { path: path.display().to_string(), source })
    }

    pub fn load(path: &Path) -> Result<Checkpoint, NetError> {
        let file = std::fs::File::open(path)
            .map_err(|source| NetError::Io { path: path.display().to_string(), source })?;
        serde_json::from_reader(std::io::BufReader::new(file))
            .map_err(|source| NetError::Json { path: path.display().to_string(), source })
    }

    /// Fails unless the checkpoint was built against the same vocabulary.
    pub fn require_vocab(&self, expected_sha256: &str) -> Result<(), NetError> {
        if self.vocab_sha256 != expected_sha256 {
            return Err(NetError::VocabMismatch {
                expected: expected_sha256.to_string(),
                found: self.vocab_sha256.clone(),
            });
        }
        Ok(())
    }

    /// Rebuilds the model and its flat parameter vector, validating every
    /// tensor name and shape against the config echo.
    pub fn into_net_and_params(self) -> Result<(Net, Vec<f64>), NetError> {
        let net = Net::new(self.net)?;
        let mut params = vec![0.0; net.layout.total];
        for (name, shape, seg) in net.tensor_specs() {
            let tensor = self
                .tensors
                .iter()
                .find(|t| t.name == name)
                .ok_or_else(|| NetError::MissingTensor(name.clone()))?;
            let expected_len: usize = shape.iter().product();
            if tensor.shape != shape || tensor.data.len() != expected_len {
                return Err(NetError::ShapeMismatch {
                    name,
                    expected: shape,
                    found: if tensor.data.len() == tensor.shape.iter().product::<usize>() {
                        tensor.shape.clone()
                    } else {
                        vec![tensor.data.len()]
                    },
                });
            }
            params[seg.offset..seg.offset + seg.len].copy_from_slice(&tensor.data);
        }
        Ok((net, params))
    }
}
