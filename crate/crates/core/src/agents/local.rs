//! Offline policies.

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::agents::{derive_seed, AgentPolicy, PromptBundle, Proposal};
use crate::context::ResidueContext;
use crate::sequence::{AminoAcid, SsLabel};
use crate::tables::propensities;

pub fn default_temperature() -> f64 {
    0.1
}

/// Leaves every residue as it is.
#[derive(Debug, Clone, Copy, Default)]
pub struct KeepPolicy;

impl AgentPolicy for KeepPolicy {
    fn propose(&self, _: &PromptBundle, ctx: &ResidueContext, _: u64) -> Proposal {
        Proposal::new(ctx.position, ctx.current, "keep")
    }
}

/// Samples residues by their propensity for one secondary structure type.
#[derive(Debug, Clone, Copy)]
pub struct PropensityPolicy {
    pub target_ss: SsLabel,
    pub temperature: f64,
}

impl PropensityPolicy {
    /// Residue with the highest propensity; ties go to the earlier residue
    /// in the canonical alphabet order.
    pub fn argmax(&self) -> AminoAcid {
        let table = propensities();
        let mut best = AminoAcid::ALL[0];
        for aa in AminoAcid::ALL {
            if table.get(aa).for_label(self.target_ss) > table.get(best).for_label(self.target_ss) {
                best = aa;
            }
        }
        best
    }

    /// Softmax weights over the canonical alphabet at this temperature.
    pub fn weights(&self) -> [f64; 20] {
        let table = propensities();
        let values = AminoAcid::ALL.map(|aa| table.get(aa).for_label(self.target_ss));
        let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        values.map(|v| ((v - max) / self.temperature).exp())
    }
}

impl AgentPolicy for PropensityPolicy {
    fn propose(&self, _: &PromptBundle, ctx: &ResidueContext, seed: u64) -> Proposal {
        let aa = if self.temperature == 0.0 {
            self.argmax()
        } else {
            let dist = WeightedIndex::new(self.weights()).expect("softmax weights are positive");
            AminoAcid::ALL[dist.sample(&mut ChaCha8Rng::seed_from_u64(seed))]
        };
        let p = propensities().get(aa).for_label(self.target_ss);
        Proposal::new(
            ctx.position,
            aa,
            format!("{aa} has {} propensity {p:.2}", self.target_ss),
        )
    }
}

/// Uniformly random residues.
#[derive(Debug, Clone, Copy)]
pub struct RandomPolicy {
    pub seed: u64,
}

impl AgentPolicy for RandomPolicy {
    fn propose(&self, _: &PromptBundle, ctx: &ResidueContext, seed: u64) -> Proposal {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(self.seed, seed as usize, ctx.position));
        let aa = AminoAcid::ALL[rng.random_range(0..20)];
        Proposal::new(ctx.position, aa, "random")
    }
}
