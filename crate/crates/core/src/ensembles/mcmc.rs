//! Metropolis chains for the canonical and microcanonical ensembles.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::stats::integrated_autocorrelation;
use super::EnsembleSample;
use crate::error::{Error, Result};
use crate::kernel::{GreenEvaluator, SINGULAR_RADIUS};
use crate::observables::{min_pair_distance, pair_energy_unchecked};
use crate::torus::{min_displacement, norm, Configuration, TorusPoint};

/// `4π / min_i |ξ_i|`: the canonical weight is integrable only below this β.
pub fn beta_limit(intensities: &[f64]) -> f64 {
    let m = intensities.iter().map(|x| x.abs()).fold(f64::INFINITY, f64::min);
    4.0 * PI / m
}

/// Metropolis acceptance for a proposal changing the energy by `delta`.
#[inline]
pub fn metropolis_accept(beta: f64, delta: f64, u: f64) -> bool {
    u < (-beta * delta).exp()
}

fn default_scale() -> f64 {
    0.1
}

fn default_burn_in() -> usize {
    10_000
}

fn default_thinning() -> usize {
    100
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CanonicalParams {
    pub beta: f64,
    #[serde(default = "default_scale")]
    pub proposal_scale: f64,
    #[serde(default = "default_burn_in")]
    pub burn_in: usize,
    #[serde(default = "default_thinning")]
    pub thinning: usize,
    pub seed: u64,
}

impl CanonicalParams {
    pub fn new(beta: f64, seed: u64) -> Self {
        CanonicalParams {
            beta,
            proposal_scale: default_scale(),
            burn_in: default_burn_in(),
            thinning: default_thinning(),
            seed,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MicrocanonicalParams {
    pub energy: f64,
    /// Half-width of the shell; defaults to `0.01 |E|`.
    #[serde(default)]
    pub shell_width: Option<f64>,
    #[serde(default = "default_scale")]
    pub proposal_scale: f64,
    #[serde(default = "default_burn_in")]
    pub burn_in: usize,
    #[serde(default = "default_thinning")]
    pub thinning: usize,
    pub seed: u64,
    /// Proposal budget for locating the shell.
    #[serde(default = "default_search_budget")]
    pub search_budget: usize,
}

fn default_search_budget() -> usize {
    200_000
}

impl MicrocanonicalParams {
    pub fn new(energy: f64, seed: u64) -> Self {
        MicrocanonicalParams {
            energy,
            shell_width: None,
            proposal_scale: default_scale(),
            burn_in: default_burn_in(),
            thinning: default_thinning(),
            seed,
            search_budget: default_search_budget(),
        }
    }

    pub fn width(&self) -> f64 {
        self.shell_width.unwrap_or(0.01 * self.energy.abs())
    }
}

/// A symmetric proposal kernel.
pub trait Proposal {
    /// Index of the moved vortex and its new position.
    fn propose(&self, x: &Configuration, rng: &mut ChaCha8Rng) -> (usize, TorusPoint);
}

/// Move one uniformly chosen vortex by a uniform displacement in a disk.
#[derive(Clone, Copy, Debug)]
pub struct DiskProposal {
    pub scale: f64,
}

impl Proposal for DiskProposal {
    fn propose(&self, x: &Configuration, rng: &mut ChaCha8Rng) -> (usize, TorusPoint) {
        let k = rng.random_range(0..x.len());
        let (d0, d1) = loop {
            let a = 2.0 * rng.random::<f64>() - 1.0;
            let b = 2.0 * rng.random::<f64>() - 1.0;
            if a * a + b * b <= 1.0 {
                break (a, b);
            }
        };
        (k, x.position(k).translate([self.scale * d0, self.scale * d1]))
    }
}

/// One Metropolis step as logged by the chain.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ChainStep {
    /// Change of the pair energy `Σ_{i<j} ξ_i ξ_j G` of the proposal.
    pub delta: f64,
    pub u: f64,
    pub accepted: bool,
}

/// Energy change when vortex `k` moves to `p`; `None` if `p` hits another vortex.
fn delta_energy(ge: &GreenEvaluator, x: &Configuration, k: usize, p: TorusPoint) -> Option<f64> {
    let xi = x.intensities();
    let mut d = 0.0;
    for (j, q) in x.positions().iter().enumerate() {
        if j == k {
            continue;
        }
        let new = min_displacement(p, *q);
        if norm(new) < SINGULAR_RADIUS {
            return None;
        }
        d += xi[j] * (ge.green_at(new) - ge.green_at(min_displacement(x.position(k), *q)));
    }
    Some(xi[k] * d)
}

/// Metropolis chain targeting `exp(−β E(x))` with `E = Σ_{i<j} ξ_i ξ_j G(x_i − x_j)`.
pub struct MetropolisChain<'a, P: Proposal> {
    ge: &'a GreenEvaluator,
    state: Configuration,
    energy: f64,
    beta: f64,
    proposal: P,
    rng: ChaCha8Rng,
    accepted: usize,
    proposed: usize,
}

impl<'a, P: Proposal> MetropolisChain<'a, P> {
    pub fn new(ge: &'a GreenEvaluator, x0: Configuration, beta: f64, proposal: P, seed: u64) -> Self {
        let energy = if beta == 0.0 { 0.0 } else { pair_energy_unchecked(ge, &x0) };
        MetropolisChain {
            ge,
            state: x0,
            energy,
            beta,
            proposal,
            rng: ChaCha8Rng::seed_from_u64(seed),
            accepted: 0,
            proposed: 0,
        }
    }

    pub fn state(&self) -> &Configuration {
        &self.state
    }

    /// Pair energy of the current state (zero when β = 0, where it is not tracked).
    pub fn energy(&self) -> f64 {
        self.energy
    }

    pub fn accepted(&self) -> usize {
        self.accepted
    }

    pub fn proposed(&self) -> usize {
        self.proposed
    }

    pub fn step(&mut self) -> ChainStep {
        let (k, p) = self.proposal.propose(&self.state, &mut self.rng);
        let u: f64 = self.rng.random();
        self.proposed += 1;
        let delta = if self.beta == 0.0 {
            Some(0.0)
        } else {
            delta_energy(self.ge, &self.state, k, p)
        };
        let Some(delta) = delta else {
            return ChainStep {
                delta: f64::INFINITY,
                u,
                accepted: false,
            };
        };
        let accepted = metropolis_accept(self.beta, delta, u);
        if accepted {
            self.state = self.state.with_position(k, p);
            self.energy += delta;
            self.accepted += 1;
        }
        ChainStep { delta, u, accepted }
    }
}

fn validate_run(scale: f64, thinning: usize, count: usize) -> Result<()> {
    if !(scale > 0.0 && scale.is_finite()) {
        return Err(Error::invalid("proposal_scale must be positive"));
    }
    if thinning == 0 || count == 0 {
        return Err(Error::invalid("thinning and count must be positive"));
    }
    Ok(())
}

fn uniform_configuration(template: &Configuration, rng: &mut ChaCha8Rng) -> Configuration {
    let raw: Vec<[f64; 2]> = (0..template.len()).map(|_| [rng.random(), rng.random()]).collect();
    Configuration::from_raw(&raw, template.intensities()).expect("valid template")
}

fn diagnostics(states: &[Configuration], energy: &[f64]) -> Vec<(String, f64)> {
    let mpd: Vec<f64> = states.iter().map(min_pair_distance).collect();
    let u0: Vec<f64> = states.iter().map(|x| x.position(0).u()).collect();
    vec![
        ("energy".to_string(), integrated_autocorrelation(energy)),
        ("min_pair_distance".to_string(), integrated_autocorrelation(&mpd)),
        ("u0".to_string(), integrated_autocorrelation(&u0)),
    ]
}

/// Draw `count` thinned, post-burn-in states from `exp(−β E) dx^N`.
///
/// `E` is the pair energy `H/2`, so the stated range `β < 4π/min|ξ|` is exactly
/// the range where the weight is integrable.
pub fn sample_canonical(
    ge: &GreenEvaluator,
    template: &Configuration,
    p: &CanonicalParams,
    count: usize,
) -> Result<EnsembleSample> {
    validate_run(p.proposal_scale, p.thinning, count)?;
    if !p.beta.is_finite() {
        return Err(Error::invalid("beta must be finite"));
    }
    let limit = beta_limit(template.intensities());
    if p.beta >= limit {
        return Err(Error::InvalidTemperature {
            beta: p.beta,
            limit,
        });
    }
    if p.beta > 0.0 {
        log::warn!(
            "positive beta {} (limit {limit:.4}): partition function finite but chains may mix slowly",
            p.beta
        );
    }
    let mut rng = ChaCha8Rng::seed_from_u64(p.seed);
    let x0 = uniform_configuration(template, &mut rng);
    let chain_seed = rng.random();
    let mut chain = MetropolisChain::new(
        ge,
        x0,
        p.beta,
        DiskProposal {
            scale: p.proposal_scale,
        },
        chain_seed,
    );
    for _ in 0..p.burn_in {
        chain.step();
    }
    let (acc0, prop0) = (chain.accepted(), chain.proposed());
    let mut states = Vec::with_capacity(count);
    let mut energy = Vec::with_capacity(count);
    for _ in 0..count {
        for _ in 0..p.thinning {
            chain.step();
        }
        states.push(chain.state().clone());
        energy.push(if p.beta == 0.0 {
            pair_energy_unchecked(ge, chain.state())
        } else {
            chain.energy()
        });
    }
    let accepted = chain.accepted() - acc0;
    let proposed = chain.proposed() - prop0;
    let autocorrelation = diagnostics(&states, &energy);
    Ok(EnsembleSample::new(states, accepted, proposed, autocorrelation))
}

/// Greedy search for a configuration in the shell `|H − E| ≤ ΔE`.
fn find_shell(
    ge: &GreenEvaluator,
    template: &Configuration,
    energy: f64,
    width: f64,
    budget: usize,
    rng: &mut ChaCha8Rng,
) -> Result<Configuration> {
    let restart_every = 2_000;
    let mut used = 0;
    while used < budget {
        let mut x = uniform_configuration(template, rng);
        let mut h = 2.0 * pair_energy_unchecked(ge, &x);
        let mut scale: f64 = 0.2;
        for _ in 0..restart_every.min(budget - used) {
            used += 1;
            if (h - energy).abs() <= width {
                return Ok(x);
            }
            let (k, p) = DiskProposal { scale }.propose(&x, rng);
            if let Some(d) = delta_energy(ge, &x, k, p) {
                let h_new = h + 2.0 * d;
                if (h_new - energy).abs() < (h - energy).abs() {
                    x = x.with_position(k, p);
                    h = h_new;
                } else {
                    scale = (scale * 0.99).max(1e-4);
                }
            }
        }
    }
    Err(Error::EmptyShell {
        energy,
        width,
        attempts: used,
    })
}

/// Draw `count` states uniformly from the thickened shell `|H − E| ≤ ΔE`.
pub fn sample_microcanonical(
    ge: &GreenEvaluator,
    template: &Configuration,
    p: &MicrocanonicalParams,
    count: usize,
) -> Result<EnsembleSample> {
    validate_run(p.proposal_scale, p.thinning, count)?;
    let width = p.width();
    if !(width > 0.0 && width.is_finite() && p.energy.is_finite()) {
        return Err(Error::invalid(format!("shell width must be positive, got {width}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(p.seed);
    let mut x = find_shell(ge, template, p.energy, width, p.search_budget, &mut rng)?;
    let mut h = 2.0 * pair_energy_unchecked(ge, &x);
    let proposal = DiskProposal {
        scale: p.proposal_scale,
    };
    let (mut accepted, mut proposed) = (0, 0);
    let mut states = Vec::with_capacity(count);
    let mut energy = Vec::with_capacity(count);
    let total = p.burn_in + count * p.thinning;
    for step in 1..=total {
        let (k, q) = proposal.propose(&x, &mut rng);
        if step > p.burn_in {
            proposed += 1;
        }
        if let Some(d) = delta_energy(ge, &x, k, q) {
            let h_new = h + 2.0 * d;
            if (h_new - p.energy).abs() <= width {
                x = x.with_position(k, q);
                h = h_new;
                if step > p.burn_in {
                    accepted += 1;
                }
            }
        }
        if step > p.burn_in && (step - p.burn_in).is_multiple_of(p.thinning) {
            // refresh to keep the running energy free of accumulated roundoff
            h = 2.0 * pair_energy_unchecked(ge, &x);
            states.push(x.clone());
            energy.push(h);
        }
    }
    let autocorrelation = diagnostics(&states, &energy);
    Ok(EnsembleSample::new(states, accepted, proposed, autocorrelation))
}
