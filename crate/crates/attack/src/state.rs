use micronet::Tensor;

/// Evolving state of one attack run.
#[derive(Debug, Clone)]
pub struct AttackState {
    /// The benign example anchoring the epsilon ball.
    pub origin: Tensor,
    /// Current adversarial candidate.
    pub x_adv: Tensor,
    /// Running gradient estimate.
    pub g: Vec<f32>,
    /// Current drop ratio.
    pub p: f64,
    /// Iteration index.
    pub t: u64,
    pub queries_used: u64,
}

impl AttackState {
    pub fn new(origin: Tensor, p0: f64) -> Self {
        let n = origin.numel();
        Self {
            x_adv: origin.clone(),
            origin,
            g: vec![0.0; n],
            p: p0,
            t: 0,
            queries_used: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FailureReason {
    /// Remaining budget cannot fund another probe pair.
    Budget,
    /// No queries could be issued for many consecutive iterations
    /// (degenerate zero directions).
    Stalled,
}

/// Outcome of one attack run.
#[derive(Debug, Clone)]
pub struct AttackResult {
    pub success: bool,
    pub queries_used: u64,
    pub iterations: u64,
    pub x_adv: Tensor,
    /// Victim scores at the returned point; empty if the victim was never
    /// queried.
    pub final_scores: Vec<f32>,
    pub failure_reason: Option<FailureReason>,
}

impl AttackResult {
    /// Epsilon-ball and pixel-range audit with float slack, as enforced on
    /// every emitted adversarial example.
    pub fn satisfies_constraints(&self, origin: &Tensor, epsilon: f32) -> bool {
        if self.x_adv.shape() != origin.shape() {
            return false;
        }
        self.x_adv
            .data()
            .iter()
            .zip(origin.data())
            .all(|(&a, &x)| (a - x).abs() <= epsilon + 1e-6 && (-1e-6..=1.0 + 1e-6).contains(&a))
    }
}
