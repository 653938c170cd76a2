use rand::Rng;

/// Metropolis-Hastings chain driven by an independence proposal.
///
/// Each state carries its importance log-weight `log(target / proposal)`;
/// with a proposal independent of the current state the acceptance ratio is
/// `exp(w_new - w_cur)`. A weight of `-inf` marks a state outside the
/// target's support: such candidates are always rejected, and a chain
/// sitting on such a state (only possible for its start) accepts the first
/// supported candidate.
#[derive(Debug, Clone)]
pub struct IndependenceChain<S> {
    state: S,
    log_weight: f64,
    proposed: usize,
    accepted: usize,
}

impl<S: Clone> IndependenceChain<S> {
    pub fn new(state: S, log_weight: f64) -> Self {
        Self {
            state,
            log_weight,
            proposed: 0,
            accepted: 0,
        }
    }

    pub fn state(&self) -> &S {
        &self.state
    }

    pub fn log_weight(&self) -> f64 {
        self.log_weight
    }

    pub fn proposed(&self) -> usize {
        self.proposed
    }

    pub fn accepted(&self) -> usize {
        self.accepted
    }

    /// Acceptance test for a candidate with weight `log_weight` given the
    /// uniform draw `u`.
    pub fn accepts(&self, log_weight: f64, u: f64) -> bool {
        if log_weight == f64::NEG_INFINITY || log_weight.is_nan() {
            return false;
        }
        if self.log_weight == f64::NEG_INFINITY {
            return true;
        }
        u.ln() <= log_weight - self.log_weight
    }

    /// Offers a candidate; returns whether it was accepted.
    pub fn offer(&mut self, candidate: S, log_weight: f64, u: f64) -> bool {
        self.proposed += 1;
        let ok = self.accepts(log_weight, u);
        if ok {
            self.state = candidate;
            self.log_weight = log_weight;
            self.accepted += 1;
        }
        ok
    }

    /// Overwrites the state without counting a move (tempering swaps).
    pub fn replace(&mut self, state: S, log_weight: f64) {
        self.state = state;
        self.log_weight = log_weight;
    }
}

/// Runs `n` independence-sampler iterations and returns the visited states
/// (one per iteration, holds included) and the number of accepted moves.
pub fn metropolis_independence<S, R, P>(
    start: S,
    start_log_weight: f64,
    n: usize,
    rng: &mut R,
    mut propose: P,
) -> (Vec<S>, usize)
where
    S: Clone,
    R: Rng + ?Sized,
    P: FnMut(&mut R) -> (S, f64),
{
    let mut chain = IndependenceChain::new(start, start_log_weight);
    let mut visited = Vec::with_capacity(n);
    for _ in 0..n {
        let (candidate, w) = propose(rng);
        let u: f64 = rng.random();
        chain.offer(candidate, w, u);
        visited.push(chain.state().clone());
    }
    (visited, chain.accepted())
}
