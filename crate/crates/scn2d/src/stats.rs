//! Monte Carlo study of near-zero coordinates in randomly drawn weight
//! vectors, comparing three sampling strategies:
//!
//! * M1 — d i.i.d. draws,
//! * M2 — entrywise product of two independent d-vectors,
//! * M3 — vectorized rank-1 outer product `vec(u v^T)`.
//!
//! For each strategy we estimate the probability that at least a fraction `p`
//! of the coordinates fall within `tau` of zero.

use crate::error::{Error, Result};
use crate::linalg::outer;
use crate::rng::child_rng;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    M1,
    M2,
    M3,
}

impl Method {
    pub fn tag(self) -> &'static str {
        match self {
            Method::M1 => "M1",
            Method::M2 => "M2",
            Method::M3 => "M3",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WeightDist {
    /// Uniform on [-1, 1].
    UniformPm1,
    /// Standard normal N(0, 1).
    StandardNormal,
}

impl WeightDist {
    pub fn tag(self) -> &'static str {
        match self {
            WeightDist::UniformPm1 => "uniform",
            WeightDist::StandardNormal => "gaussian",
        }
    }

    fn draw(self, rng: &mut impl Rng) -> f64 {
        match self {
            WeightDist::UniformPm1 => rng.gen_range(-1.0..=1.0),
            WeightDist::StandardNormal => StandardNormal.sample(rng),
        }
    }
}

#[derive(Debug, Clone)]
pub struct StatsSpec {
    pub d1: usize,
    pub d2: usize,
    pub dist: WeightDist,
    pub tau: f64,
    pub p: f64,
    pub trials: usize,
    pub seed: u64,
}

impl StatsSpec {
    pub fn validate(&self) -> Result<()> {
        if self.d1 == 0 || self.d2 == 0 {
            return Err(Error::Config("dimensions must be positive".into()));
        }
        if self.tau.is_nan() || self.tau <= 0.0 {
            return Err(Error::Config(format!("tau must be positive, got {}", self.tau)));
        }
        if self.p.is_nan() || self.p <= 0.0 || self.p >= 1.0 {
            return Err(Error::Config(format!("p must lie in (0,1), got {}", self.p)));
        }
        if self.trials == 0 {
            return Err(Error::Config("trial count must be positive".into()));
        }
        Ok(())
    }

    pub fn d(&self) -> usize {
        self.d1 * self.d2
    }
}

/// One weight vector of length `d1 * d2` under the given strategy.
pub fn sample_weight(method: Method, spec: &StatsSpec, rng: &mut impl Rng) -> Vec<f64> {
    let d = spec.d();
    match method {
        Method::M1 => (0..d).map(|_| spec.dist.draw(rng)).collect(),
        Method::M2 => {
            let a: Vec<f64> = (0..d).map(|_| spec.dist.draw(rng)).collect();
            let b: Vec<f64> = (0..d).map(|_| spec.dist.draw(rng)).collect();
            a.iter().zip(&b).map(|(x, y)| x * y).collect()
        }
        Method::M3 => {
            let u: Vec<f64> = (0..spec.d1).map(|_| spec.dist.draw(rng)).collect();
            let v: Vec<f64> = (0..spec.d2).map(|_| spec.dist.draw(rng)).collect();
            outer(&u, &v).vectorize().data().to_vec()
        }
    }
}

/// Fraction of coordinates with `|w_i| <= tau`.
pub fn small_fraction(w: &[f64], tau: f64) -> f64 {
    if w.is_empty() {
        return 0.0;
    }
    w.iter().filter(|x| x.abs() <= tau).count() as f64 / w.len() as f64
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProbabilityEstimate {
    pub probability: f64,
    pub standard_error: f64,
    pub successes: usize,
    pub trials: usize,
}

fn estimate_from_count(successes: usize, trials: usize) -> ProbabilityEstimate {
    let p = successes as f64 / trials as f64;
    ProbabilityEstimate {
        probability: p,
        standard_error: (p * (1.0 - p) / trials as f64).sqrt(),
        successes,
        trials,
    }
}

/// Monte Carlo estimate of P(small_fraction(w, tau) >= p) for one strategy.
/// Trial `t` draws from the child stream `(seed, method, t)`, so the count is
/// independent of scheduling.
pub fn estimate_probability(method: Method, spec: &StatsSpec) -> Result<ProbabilityEstimate> {
    spec.validate()?;
    let method_tag = match method {
        Method::M1 => 1u64,
        Method::M2 => 2,
        Method::M3 => 3,
    };
    let successes = (0..spec.trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = child_rng(spec.seed, &[0x73746174, method_tag, t as u64]);
            let w = sample_weight(method, spec, &mut rng);
            usize::from(small_fraction(&w, spec.tau) >= spec.p)
        })
        .sum();
    Ok(estimate_from_count(successes, spec.trials))
}

/// One cell of the study grid: all three strategies at a fixed (tau, p).
#[derive(Debug, Clone, Copy)]
pub struct GridCell {
    pub tau: f64,
    pub p: f64,
    pub m1: ProbabilityEstimate,
    pub m2: ProbabilityEstimate,
    pub m3: ProbabilityEstimate,
}

/// Run the full (tau, p) grid, reusing each drawn weight vector across every
/// cell. Each trial draws one vector per strategy and sorts its absolute
/// values once; every (tau, p) cell is then a binary-search count, which keeps
/// a 100k-trial grid fast.
pub fn estimate_grid(
    base: &StatsSpec,
    taus: &[f64],
    ps: &[f64],
) -> Result<Vec<GridCell>> {
    if taus.is_empty() || ps.is_empty() {
        return Err(Error::Config("tau and p grids must be non-empty".into()));
    }
    for &tau in taus {
        StatsSpec { tau, ..base.clone() }.validate()?;
    }
    for &p in ps {
        StatsSpec { p, ..base.clone() }.validate()?;
    }

    let methods = [Method::M1, Method::M2, Method::M3];
    let cells = taus.len() * ps.len();
    // counts[method][tau_idx * ps.len() + p_idx]
    let counts: Vec<Vec<usize>> = methods
        .iter()
        .map(|&method| {
            let method_tag = match method {
                Method::M1 => 1u64,
                Method::M2 => 2,
                Method::M3 => 3,
            };
            (0..base.trials)
                .into_par_iter()
                .map(|t| {
                    let mut rng = child_rng(base.seed, &[0x73746174, method_tag, t as u64]);
                    let mut abs: Vec<f64> =
                        sample_weight(method, base, &mut rng).iter().map(|x| x.abs()).collect();
                    abs.sort_by(|a, b| a.partial_cmp(b).unwrap());
                    let d = abs.len() as f64;
                    let mut local = vec![0usize; cells];
                    for (ti, &tau) in taus.iter().enumerate() {
                        let small = abs.partition_point(|&x| x <= tau);
                        for (pi, &p) in ps.iter().enumerate() {
                            if small as f64 / d >= p {
                                local[ti * ps.len() + pi] += 1;
                            }
                        }
                    }
                    local
                })
                .reduce(
                    || vec![0usize; cells],
                    |mut acc, local| {
                        for (a, l) in acc.iter_mut().zip(&local) {
                            *a += l;
                        }
                        acc
                    },
                )
        })
        .collect();

    let mut out = Vec::with_capacity(cells);
    for (ti, &tau) in taus.iter().enumerate() {
        for (pi, &p) in ps.iter().enumerate() {
            let idx = ti * ps.len() + pi;
            out.push(GridCell {
                tau,
                p,
                m1: estimate_from_count(counts[0][idx], base.trials),
                m2: estimate_from_count(counts[1][idx], base.trials),
                m3: estimate_from_count(counts[2][idx], base.trials),
            });
        }
    }
    Ok(out)
}
