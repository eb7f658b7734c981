//! Exact sampling of long edges, one displacement class at a time.
//!
//! For a class with `N` candidate pairs inside the box and edge probability
//! `p`, the number of present edges is drawn as Binomial(N, p) and their
//! positions as a uniform sample without replacement from the `N` candidates.
//! Candidates are indexed by concatenating, over the positive representatives
//! `v` of the class, the sub-box of start points `i` with `i + v` in the box.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};

use crate::error::Result;
use crate::graph::LrpGraph;
use crate::kernel::{DisplacementKernel, ModelConfig};
use crate::lattice::Lattice;
use crate::rng::RngStream;

#[derive(Debug, Clone)]
pub struct ClassPlan {
    pub class: Vec<u64>,
    pub probability: f64,
    /// Positive representatives (first nonzero coordinate > 0).
    pub vectors: Vec<Vec<i64>>,
    /// Candidate pairs per representative.
    pub counts: Vec<u64>,
    pub candidates: u64,
}

/// Sampler for a fixed (d, n, β); reusable across replicates and threads.
#[derive(Debug, Clone)]
pub struct GraphSampler {
    config: ModelConfig,
    lattice: Lattice,
    plans: Vec<ClassPlan>,
}

impl GraphSampler {
    pub fn new(config: &ModelConfig) -> Result<Self> {
        config.validate()?;
        let kernel = DisplacementKernel::build(config.d, config.beta, config.n - 1)?;
        Self::from_kernel(config, &kernel)
    }

    /// Uses the probabilities stored in `kernel`, which must cover every
    /// class with sup-norm below n.
    pub fn from_kernel(config: &ModelConfig, kernel: &DisplacementKernel) -> Result<Self> {
        config.validate()?;
        let lattice = Lattice::new(config.d, config.n)?;
        if kernel.d != config.d || kernel.max_radius + 1 < config.n {
            return Err(crate::error::invalid(
                "kernel",
                "table does not cover every displacement inside the box",
            ));
        }
        let n = config.n as i64;
        let plans = kernel
            .entries
            .iter()
            .filter(|e| (e.class[0] as i64) < n)
            .map(|e| {
                let vectors = positive_representatives(&e.class);
                let counts: Vec<u64> = vectors
                    .iter()
                    .map(|v| v.iter().map(|&c| (n - c.abs()) as u64).product())
                    .collect();
                ClassPlan {
                    class: e.class.clone(),
                    probability: e.probability,
                    candidates: counts.iter().sum(),
                    vectors,
                    counts,
                }
            })
            .collect();
        Ok(Self {
            config: *config,
            lattice,
            plans,
        })
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    pub fn plans(&self) -> &[ClassPlan] {
        &self.plans
    }

    /// Σ N_k p_k.
    pub fn expected_long_edges(&self) -> f64 {
        self.plans
            .iter()
            .map(|c| c.candidates as f64 * c.probability)
            .sum()
    }

    /// Σ N_k p_k (1 − p_k).
    pub fn long_edge_variance(&self) -> f64 {
        self.plans
            .iter()
            .map(|c| c.candidates as f64 * c.probability * (1.0 - c.probability))
            .sum()
    }

    /// Samples with master seed `config.seed`; class `c` uses substream `c`.
    pub fn sample(&self, stream_id: u64) -> LrpGraph {
        self.sample_with(stream_id, |c| c as u64)
    }

    /// Like [`sample`](Self::sample), with an explicit class → substream map.
    pub fn sample_with(&self, stream_id: u64, substream: impl Fn(usize) -> u64) -> LrpGraph {
        let base = RngStream::new(self.config.seed, stream_id, 0);
        let mut edges = Vec::new();
        for (c, plan) in self.plans.iter().enumerate() {
            if plan.candidates == 0 || plan.probability <= 0.0 {
                continue;
            }
            let mut rng = base.substream(substream(c)).rng();
            let m = binomial(&mut rng, plan.candidates, plan.probability);
            if m == 0 {
                continue;
            }
            let picks = rand::seq::index::sample(&mut rng, plan.candidates as usize, m as usize);
            for pos in picks.iter() {
                edges.push(self.locate(plan, pos as u64));
            }
        }
        edges.sort_unstable();
        LrpGraph::from_sorted(self.config, self.lattice, edges)
    }

    fn locate(&self, plan: &ClassPlan, mut pos: u64) -> (u64, u64) {
        let mut which = 0;
        while pos >= plan.counts[which] {
            pos -= plan.counts[which];
            which += 1;
        }
        let v = &plan.vectors[which];
        let n = self.config.n as i64;
        let d = v.len();
        let mut start = [0i64; 8];
        // Mixed radix over the allowed start ranges, last axis fastest.
        for a in (0..d).rev() {
            let width = (n - v[a].abs()) as u64;
            let off = (pos % width) as i64;
            pos /= width;
            start[a] = off + (-v[a]).max(0);
        }
        let mut end = [0i64; 8];
        for a in 0..d {
            end[a] = start[a] + v[a];
        }
        let i = self
            .lattice
            .index(&start[..d])
            .expect("start lies in the box") as u64;
        let j = self.lattice.index(&end[..d]).expect("end lies in the box") as u64;
        if i < j {
            (i, j)
        } else {
            (j, i)
        }
    }
}

/// Convenience wrapper: builds the kernel and samples replicate 0.
pub fn sample_graph(config: &ModelConfig) -> Result<LrpGraph> {
    Ok(GraphSampler::new(config)?.sample(0))
}

/// Signed permutations of `class` whose first nonzero coordinate is
/// positive, sorted and deduplicated.
pub fn positive_representatives(class: &[u64]) -> Vec<Vec<i64>> {
    let d = class.len();
    let mut perm: Vec<i64> = class.iter().map(|&c| c as i64).collect();
    perm.sort_unstable();
    let mut out = Vec::new();
    loop {
        let nonzero: Vec<usize> = (0..d).filter(|&a| perm[a] != 0).collect();
        for signs in 0u32..(1 << nonzero.len()) {
            let mut v = perm.clone();
            for (b, &a) in nonzero.iter().enumerate() {
                if signs >> b & 1 == 1 {
                    v[a] = -v[a];
                }
            }
            if v.iter().find(|&&c| c != 0).is_some_and(|&c| c > 0) {
                out.push(v);
            }
        }
        if !next_permutation(&mut perm) {
            break;
        }
    }
    out.sort_unstable();
    out.dedup();
    out
}

fn next_permutation(v: &mut [i64]) -> bool {
    if v.len() < 2 {
        return false;
    }
    let mut i = v.len() - 1;
    while i > 0 && v[i - 1] >= v[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = v.len() - 1;
    while v[j] <= v[i - 1] {
        j -= 1;
    }
    v.swap(i - 1, j);
    v[i..].reverse();
    true
}

/// Exact Binomial(n, p) draw: sequential inversion when the mean is small,
/// otherwise the `rand_distr` sampler.
pub fn binomial(rng: &mut ChaCha8Rng, n: u64, p: f64) -> u64 {
    if n == 0 || p <= 0.0 {
        return 0;
    }
    if p >= 1.0 {
        return n;
    }
    if p > 0.5 {
        return n - binomial(rng, n, 1.0 - p);
    }
    if (n as f64) * p < 10.0 {
        let ratio = p / (1.0 - p);
        let mut pk = ((n as f64) * (-p).ln_1p()).exp();
        let mut cdf = pk;
        let u: f64 = rng.random();
        let mut k = 0u64;
        while u > cdf && k < n {
            pk *= (n - k) as f64 / (k + 1) as f64 * ratio;
            k += 1;
            cdf += pk;
            if pk == 0.0 {
                break;
            }
        }
        return k;
    }
    Binomial::new(n, p).expect("p lies in (0, 1)").sample(rng)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::class_size;

    #[test]
    fn representatives_cover_half_the_class() {
        for class in [
            vec![3u64],
            vec![2, 0],
            vec![3, 1],
            vec![2, 2],
            vec![4, 2, 0],
            vec![2, 2, 2],
        ] {
            let reps = positive_representatives(&class);
            assert_eq!(reps.len() as u64 * 2, class_size(&class), "{class:?}");
        }
    }

    #[test]
    fn candidate_counts() {
        let cfg = ModelConfig::new(2, 1.0, 5, 1).unwrap();
        let s = GraphSampler::new(&cfg).unwrap();
        // Class (2,0): vectors (0,2),(2,0) each with 5*3 starts.
        let plan = s.plans().iter().find(|p| p.class == vec![2, 0]).unwrap();
        assert_eq!(plan.candidates, 30);
        // Class (4,4): (4,4) and (4,-4), one start each.
        let plan = s.plans().iter().find(|p| p.class == vec![4, 4]).unwrap();
        assert_eq!(plan.candidates, 2);
    }

    #[test]
    fn every_candidate_is_reachable_once() {
        let cfg = ModelConfig::new(2, 1.0, 6, 1).unwrap();
        let s = GraphSampler::new(&cfg).unwrap();
        for plan in s.plans() {
            let mut seen: Vec<(u64, u64)> = (0..plan.candidates)
                .map(|pos| s.locate(plan, pos))
                .collect();
            seen.sort_unstable();
            seen.dedup();
            assert_eq!(seen.len() as u64, plan.candidates);
            for &(i, j) in &seen {
                let disp = s.lattice.displacement(i as usize, j as usize);
                assert_eq!(crate::kernel::canonical_class(&disp), plan.class);
            }
        }
    }

    #[test]
    fn binomial_extremes() {
        let mut rng = RngStream::new(1, 2, 3).rng();
        assert_eq!(binomial(&mut rng, 0, 0.3), 0);
        assert_eq!(binomial(&mut rng, 10, 0.0), 0);
        assert_eq!(binomial(&mut rng, 10, 1.0), 10);
        for _ in 0..100 {
            assert!(binomial(&mut rng, 7, 0.999) <= 7);
            assert!(binomial(&mut rng, 1 << 40, 1e-12) < 100);
        }
    }
}
