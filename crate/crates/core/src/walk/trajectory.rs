use std::io::Write;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{BlockDraw, DecomposedModel, StepDistribution, StepId, WalkError};

/// Purposes of independent random streams under one seed.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stream {
    Forward,
    Backward,
    /// Randomness for estimating a normalization (drift, variance).
    Estimate,
    /// Probe points and other auxiliary draws.
    Auxiliary,
}

impl Stream {
    /// 64-bit ChaCha stream id for a trial.
    pub fn id(self, trial: u64) -> u64 {
        let tag = match self {
            Stream::Forward => 0u64,
            Stream::Backward => 1,
            Stream::Estimate => 2,
            Stream::Auxiliary => 3,
        };
        (tag << 56) | (trial & ((1 << 56) - 1))
    }
}

/// Generator for `(seed, stream, trial)`, independent of thread scheduling.
pub fn stream_rng(seed: u64, stream: Stream, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream.id(trial));
    rng
}

/// A sampled path of a decomposed model: steps, block draws and the
/// Bernoulli bookkeeping. Positions live in a separate materialization.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub seed: u64,
    pub trial: u64,
    pub stream: Stream,
    /// `6N`.
    pub block_len: usize,
    /// `g_1 … g_n` as alphabet ids.
    pub steps: Vec<StepId>,
    /// One draw per started block; the last may be only partly used.
    pub blocks: Vec<BlockDraw>,
}

impl Trajectory {
    /// Rebuilds the step sequence from block draws.
    pub fn from_blocks<E: Clone + PartialEq>(
        model: &DecomposedModel<E>,
        blocks: Vec<BlockDraw>,
        n: usize,
        seed: u64,
        trial: u64,
        stream: Stream,
    ) -> Self {
        let mut steps = Vec::with_capacity(n + model.block_len());
        for b in &blocks {
            if steps.len() >= n {
                break;
            }
            steps.extend(model.block_steps(b));
        }
        assert!(steps.len() >= n, "not enough blocks for {n} steps");
        steps.truncate(n);
        Self { seed, trial, stream, block_len: model.block_len(), steps, blocks }
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    /// Number of fully realized 6N-blocks at walk time `k`.
    pub fn complete_blocks(&self, k: usize) -> usize {
        k / self.block_len
    }

    /// `B(k)`: Schottky blocks among the first `k` complete blocks.
    pub fn schottky_count(&self, k: usize) -> usize {
        self.blocks[..k.min(self.blocks.len())].iter().filter(|b| matches!(b, BlockDraw::Schottky { .. })).count()
    }

    /// Block indices `T(1) < T(2) < …` (1-based) of the Schottky blocks that
    /// are complete at the end of the path.
    pub fn schottky_blocks(&self) -> Vec<usize> {
        let complete = self.complete_blocks(self.len());
        self.blocks[..complete]
            .iter()
            .enumerate()
            .filter(|(_, b)| matches!(b, BlockDraw::Schottky { .. }))
            .map(|(i, _)| i + 1)
            .collect()
    }

    /// `(a_i, b_i)` of the Schottky block with 1-based block index `t`.
    pub fn schottky_choice(&self, t: usize) -> Option<(u32, u32)> {
        match self.blocks.get(t - 1)? {
            BlockDraw::Schottky { a, b } => Some((*a, *b)),
            BlockDraw::Filler(_) => None,
        }
    }

    /// Writes one JSON record per step: index, generator id and displacement
    /// `d(o, ω_k o)` taken from `displacement[k]`.
    pub fn write_jsonl<W: Write>(&self, mut w: W, displacement: &[f64]) -> Result<(), WalkError> {
        #[derive(Serialize)]
        struct Record {
            index: usize,
            generator: StepId,
            displacement: f64,
        }
        for (k, &g) in self.steps.iter().enumerate() {
            let rec = Record { index: k + 1, generator: g, displacement: displacement[k + 1] };
            let line = serde_json::to_string(&rec).map_err(|e| WalkError::Io(e.to_string()))?;
            writeln!(w, "{line}").map_err(|e| WalkError::Io(e.to_string()))?;
        }
        Ok(())
    }
}

/// [`sample_trajectory`] on an arbitrary stream.
pub fn sample_with<E: Clone + PartialEq>(
    model: &DecomposedModel<E>,
    n: usize,
    seed: u64,
    trial: u64,
    stream: Stream,
) -> Trajectory {
    let mut rng = stream_rng(seed, stream, trial);
    let count = n.div_ceil(model.block_len());
    let blocks = (0..count).map(|_| model.sample_block(&mut rng)).collect();
    Trajectory::from_blocks(model, blocks, n, seed, trial, stream)
}

/// Samples `n` steps block by block. The final partial block is the prefix
/// of a full block draw, so paths for different `n` are nested.
pub fn sample_trajectory<E: Clone + PartialEq>(
    model: &DecomposedModel<E>,
    n: usize,
    seed: u64,
    trial: u64,
) -> Trajectory {
    sample_with(model, n, seed, trial, Stream::Forward)
}

/// Independent backward and forward paths. `backward_model` is the
/// reflected model (see [`DecomposedModel::reflected`]).
pub fn sample_bidirectional<E: Clone + PartialEq>(
    backward_model: &DecomposedModel<E>,
    forward_model: &DecomposedModel<E>,
    n: usize,
    seed: u64,
    trial: u64,
) -> (Trajectory, Trajectory) {
    (
        sample_with(backward_model, n, seed, trial, Stream::Backward),
        sample_with(forward_model, n, seed, trial, Stream::Forward),
    )
}

/// `n` i.i.d. steps of `mu`, for experiments that need no decomposition.
pub fn sample_iid_steps<E: Clone + PartialEq>(
    mu: &StepDistribution<E>,
    n: usize,
    seed: u64,
    stream: Stream,
    trial: u64,
) -> Vec<StepId> {
    let mut rng = stream_rng(seed, stream, trial);
    (0..n).map(|_| mu.sample(&mut rng)).collect()
}
