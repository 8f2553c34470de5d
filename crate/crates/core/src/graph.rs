//! Scalar expression tape with reverse-mode differentiation.
//!
//! Nodes are appended in topological order, so one forward sweep evaluates
//! the whole tape and one reverse sweep accumulates exact adjoints. Values
//! for `input` and `param` nodes are supplied at [`Tape::forward`] time from
//! two external slices; [`Tape::backward`] returns the gradient of the
//! output with respect to the parameter slice.
//!
//! The node set is deliberately small (arithmetic, `exp`/`log`, `tanh`,
//! `sigmoid`, clamp-from-below). Everything larger, such as affine maps,
//! softmax and the penalties, is composed from these scalars by the callers.

/// Index of a node on a [`Tape`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct NodeId(pub(crate) u32);

#[derive(Debug, Clone, Copy)]
enum Op {
    Input(u32),
    Param(u32),
    Const(f64),
    Add(NodeId, NodeId),
    Sub(NodeId, NodeId),
    Mul(NodeId, NodeId),
    Div(NodeId, NodeId),
    Exp(NodeId),
    Log(NodeId),
    Tanh(NodeId),
    Sigmoid(NodeId),
    /// `max(x, c)`; derivative 1 above `c`, 0 at and below it.
    MaxConst(NodeId, f64),
}

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum GraphError {
    #[error("tape expects {expected} {kind} values, got {got}")]
    ArityMismatch { kind: &'static str, expected: usize, got: usize },
    #[error("{kind} value at index {index} is NaN")]
    NanInput { kind: &'static str, index: usize },
    #[error("backward called before forward")]
    BackwardBeforeForward,
    #[error("gradient buffer holds {got} slots, tape needs {expected}")]
    GradBufferTooSmall { expected: usize, got: usize },
    #[error("tape is empty")]
    EmptyTape,
}

/// Result of comparing reverse-mode gradients against central differences.
#[derive(Debug, Clone, PartialEq)]
pub struct GradCheckReport {
    pub max_rel_error: f64,
    /// Param slot with the largest relative error; `None` for a
    /// parameter-free tape.
    pub worst_param: Option<usize>,
}

/// Relative error convention used by [`Tape::finite_diff_check`].
pub fn rel_error(a: f64, b: f64) -> f64 {
    (a - b).abs() / (a.abs() + b.abs() + 1e-8)
}

#[derive(Debug, Default, Clone)]
pub struct Tape {
    ops: Vec<Op>,
    vals: Vec<f64>,
    adj: Vec<f64>,
    n_inputs: usize,
    n_params: usize,
    output: Option<NodeId>,
    forwarded: bool,
}

impl Tape {
    pub fn new() -> Tape {
        Tape::default()
    }

    pub fn len(&self) -> usize {
        self.ops.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ops.is_empty()
    }

    /// Number of parameter slots the tape reads (max slot + 1).
    pub fn n_params(&self) -> usize {
        self.n_params
    }

    pub fn n_inputs(&self) -> usize {
        self.n_inputs
    }

    /// Clears all nodes but keeps allocations.
    pub fn reset(&mut self) {
        self.ops.clear();
        self.vals.clear();
        self.adj.clear();
        self.n_inputs = 0;
        self.n_params = 0;
        self.output = None;
        self.forwarded = false;
    }

    fn push(&mut self, op: Op) -> NodeId {
        let id = NodeId(self.ops.len() as u32);
        self.ops.push(op);
        self.forwarded = false;
        id
    }

    /// Placeholder read from the `inputs` slice at forward time.
    pub fn input(&mut self, slot: usize) -> NodeId {
        self.n_inputs = self.n_inputs.max(slot + 1);
        self.push(Op::Input(slot as u32))
    }

    /// Placeholder read from the `params` slice; participates in gradients.
    pub fn param(&mut self, slot: usize) -> NodeId {
        self.n_params = self.n_params.max(slot + 1);
        self.push(Op::Param(slot as u32))
    }

    pub fn constant(&mut self, v: f64) -> NodeId {
        self.push(Op::Const(v))
    }

    pub fn add(&mut self, a: NodeId, b: NodeId) -> NodeId {
        self.push(Op::Add(a, b))
    }

    pub fn sub(&mut self, a: NodeId, b: NodeId) -> NodeId {
        self.push(Op::Sub(a, b))
    }

    pub fn mul(&mut self, a: NodeId, b: NodeId) -> NodeId {
        self.push(Op::Mul(a, b))
    }

    pub fn div(&mut self, a: NodeId, b: NodeId) -> NodeId {
        self.push(Op::Div(a, b))
    }

    pub fn exp(&mut self, a: NodeId) -> NodeId {
        self.push(Op::Exp(a))
    }

    pub fn log(&mut self, a: NodeId) -> NodeId {
        self.push(Op::Log(a))
    }

    pub fn tanh(&mut self, a: NodeId) -> NodeId {
        self.push(Op::Tanh(a))
    }

    pub fn sigmoid(&mut self, a: NodeId) -> NodeId {
        self.push(Op::Sigmoid(a))
    }

    pub fn max_const(&mut self, a: NodeId, c: f64) -> NodeId {
        self.push(Op::MaxConst(a, c))
    }

    /// Sums a slice of nodes; zero for an empty slice.
    pub fn sum(&mut self, nodes: &[NodeId]) -> NodeId {
        match nodes.split_first() {
            None => self.constant(0.0),
            Some((&first, rest)) => {
                let mut acc = first;
                for &n in rest {
                    acc = self.add(acc, n);
                }
                acc
            }
        }
    }

    /// Multiplies a node by a fixed scalar.
    pub fn scale(&mut self, a: NodeId, c: f64) -> NodeId {
        let c = self.constant(c);
        self.mul(a, c)
    }

    /// Node whose value [`Tape::backward`] differentiates. Defaults to the
    /// last node pushed.
    pub fn set_output(&mut self, id: NodeId) {
        self.output = Some(id);
    }

    pub fn output(&self) -> Option<NodeId> {
        self.output.or_else(|| {
            if self.ops.is_empty() {
                None
            } else {
                Some(NodeId(self.ops.len() as u32 - 1))
            }
        })
    }

    /// Value of a node after the last forward pass.
    pub fn value(&self, id: NodeId) -> f64 {
        self.vals[id.0 as usize]
    }

    fn check_feed(kind: &'static str, feed: &[f64], needed: usize) -> Result<(), GraphError> {
        if feed.len() < needed {
            return Err(GraphError::ArityMismatch { kind, expected: needed, got: feed.len() });
        }
        for (index, v) in feed.iter().take(needed).enumerate() {
            if v.is_nan() {
                return Err(GraphError::NanInput { kind, index });
            }
        }
        Ok(())
    }

    /// Evaluates every node and returns the output value.
    pub fn forward(&mut self, inputs: &[f64], params: &[f64]) -> Result<f64, GraphError> {
        let out = self.output().ok_or(GraphError::EmptyTape)?;
        Self::check_feed("input", inputs, self.n_inputs)?;
        Self::check_feed("param", params, self.n_params)?;

        self.vals.clear();
        self.vals.reserve(self.ops.len());
        for op in &self.ops {
            let v = match *op {
                Op::Input(i) => inputs[i as usize],
                Op::Param(i) => params[i as usize],
                Op::Const(c) => c,
                Op::Add(a, b) => self.vals[a.0 as usize] + self.vals[b.0 as usize],
                Op::Sub(a, b) => self.vals[a.0 as usize] - self.vals[b.0 as usize],
                Op::Mul(a, b) => self.vals[a.0 as usize] * self.vals[b.0 as usize],
                Op::Div(a, b) => self.vals[a.0 as usize] / self.vals[b.0 as usize],
                Op::Exp(a) => self.vals[a.0 as usize].exp(),
                Op::Log(a) => self.vals[a.0 as usize].ln(),
                Op::Tanh(a) => self.vals[a.0 as usize].tanh(),
                Op::Sigmoid(a) => sigmoid(self.vals[a.0 as usize]),
                Op::MaxConst(a, c) => self.vals[a.0 as usize].max(c),
            };
            self.vals.push(v);
        }
        self.forwarded = true;
        Ok(self.vals[out.0 as usize])
    }

    /// Reverse sweep. Adds `d output / d param[slot]` into `grad[slot]`
    /// for every parameter slot, so gradients from several tapes can be
    /// accumulated into one buffer.
    pub fn backward_into(&mut self, grad: &mut [f64]) -> Result<(), GraphError> {
        if !self.forwarded {
            return Err(GraphError::BackwardBeforeForward);
        }
        if grad.len() < self.n_params {
            return Err(GraphError::GradBufferTooSmall {
                expected: self.n_params,
                got: grad.len(),
            });
        }
        let out = self.output().ok_or(GraphError::EmptyTape)?;

        self.adj.clear();
        self.adj.resize(self.ops.len(), 0.0);
        self.adj[out.0 as usize] = 1.0;

        for i in (0..self.ops.len()).rev() {
            let d = self.adj[i];
            if d == 0.0 {
                continue;
            }
            match self.ops[i] {
                Op::Input(_) | Op::Const(_) => {}
                Op::Param(slot) => grad[slot as usize] += d,
                Op::Add(a, b) => {
                    self.adj[a.0 as usize] += d;
                    self.adj[b.0 as usize] += d;
                }
                Op::Sub(a, b) => {
                    self.adj[a.0 as usize] += d;
                    self.adj[b.0 as usize] -= d;
                }
                Op::Mul(a, b) => {
                    self.adj[a.0 as usize] += d * self.vals[b.0 as usize];
                    self.adj[b.0 as usize] += d * self.vals[a.0 as usize];
                }
                Op::Div(a, b) => {
                    let vb = self.vals[b.0 as usize];
                    self.adj[a.0 as usize] += d / vb;
                    self.adj[b.0 as usize] -= d * self.vals[i] / vb;
                }
                Op::Exp(a) => self.adj[a.0 as usize] += d * self.vals[i],
                Op::Log(a) => self.adj[a.0 as usize] += d / self.vals[a.0 as usize],
                Op::Tanh(a) => {
                    let t = self.vals[i];
                    self.adj[a.0 as usize] += d * (1.0 - t * t);
                }
                Op::Sigmoid(a) => {
                    let s = self.vals[i];
                    self.adj[a.0 as usize] += d * s * (1.0 - s);
                }
                Op::MaxConst(a, c) => {
                    if self.vals[a.0 as usize] > c {
                        self.adj[a.0 as usize] += d;
                    }
                }
            }
        }
        Ok(())
    }

    /// Gradient of the output over all parameter slots.
    pub fn backward(&mut self) -> Result<Vec<f64>, GraphError> {
        let mut grad = vec![0.0; self.n_params];
        self.backward_into(&mut grad)?;
        Ok(grad)
    }

    /// Compares reverse-mode gradients against central differences of the
    /// parameters at `params`, with step `h`.
    pub fn finite_diff_check(
        &mut self,
        inputs: &[f64],
        params: &[f64],
        h: f64,
    ) -> Result<GradCheckReport, GraphError> {
        assert!(h > 0.0, "finite-difference step must be positive");
        self.forward(inputs, params)?;
        let grad = self.backward()?;

        let mut report = GradCheckReport { max_rel_error: 0.0, worst_param: None };
        let mut perturbed = params[..self.n_params].to_vec();
        for slot in 0..self.n_params {
            let orig = perturbed[slot];
            perturbed[slot] = orig + h;
            let up = self.forward(inputs, &perturbed)?;
            perturbed[slot] = orig - h;
            let down = self.forward(inputs, &perturbed)?;
            perturbed[slot] = orig;

            let fd = (up - down) / (2.0 * h);
            let err = rel_error(grad[slot], fd);
            if err > report.max_rel_error {
                report.max_rel_error = err;
                report.worst_param = Some(slot);
            }
        }
        // Restore values at the unperturbed point.
        self.forward(inputs, params)?;
        Ok(report)
    }
}

pub(crate) fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}
