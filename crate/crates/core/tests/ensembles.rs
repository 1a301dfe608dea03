mod common;

use std::sync::Arc;

use common::*;
use pvsplit::dynamics::{FlowEngine, FlowParams, TauDistribution, TauSchedule};
use pvsplit::ensembles::*;
use pvsplit::observables::{hamiltonian, mean_same_sign_nearest};
use pvsplit::{Configuration, Error, GreenEvaluator, TorusPoint};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

fn marginals(sample: &EnsembleSample) -> Vec<Vec<f64>> {
    let n = sample.configurations()[0].len();
    let mut out = vec![Vec::new(); 2 * n];
    for x in sample.configurations() {
        for (i, p) in x.positions().iter().enumerate() {
            out[2 * i].push(p.u());
            out[2 * i + 1].push(p.v());
        }
    }
    out
}

#[test]
fn beta_zero_is_uniform() {
    let g = GreenEvaluator::default();
    let template = random_config(3, &[1.0, -1.0, 2.0], 0);
    let mut p = CanonicalParams::new(0.0, 11);
    p.thinning = 200;
    p.burn_in = 2_000;
    let s = sample_canonical(&g, &template, &p, 5000).unwrap();
    assert_eq!(s.len(), 5000);
    assert_eq!(s.acceptance_rate(), 1.0);
    let crit = ks_critical_one_sample(0.01, 5000);
    for (k, m) in marginals(&s).iter().enumerate() {
        let d = ks_uniform(m);
        assert!(d < crit, "coordinate {k}: KS {d} >= {crit}");
    }
}

#[test]
fn negative_temperature_aggregates() {
    let g = GreenEvaluator::default();
    let xi = [1.0; 6];
    let template = random_config(6, &xi, 0);
    let mut nn = [0.0; 2];
    for (slot, beta) in [0.0, -30.0].into_iter().enumerate() {
        for seed in 0..3 {
            let mut p = CanonicalParams::new(beta, seed);
            p.burn_in = 5_000;
            p.thinning = 50;
            let s = sample_canonical(&g, &template, &p, 300).unwrap();
            nn[slot] += s.configurations().iter().map(mean_same_sign_nearest).sum::<f64>();
        }
    }
    assert!(nn[1] < nn[0], "beta=-30 nn {} not below beta=0 nn {}", nn[1] / 900.0, nn[0] / 900.0);
}

#[test]
fn temperature_limit_is_refused() {
    let g = GreenEvaluator::default();
    let template = random_config(3, &[2.0, -1.0, 0.5], 0);
    let limit = beta_limit(template.intensities());
    assert!((limit - 8.0 * std::f64::consts::PI).abs() < 1e-12);
    let err = sample_canonical(&g, &template, &CanonicalParams::new(limit, 1), 10).unwrap_err();
    assert!(matches!(err, Error::InvalidTemperature { .. }));
    assert!(sample_canonical(&g, &template, &CanonicalParams::new(limit * 0.5, 1), 10).is_ok());
    assert!(sample_canonical(&g, &template, &CanonicalParams::new(-1e3, 1), 10).is_ok());
}

#[test]
fn chains_are_reproducible() {
    let g = GreenEvaluator::default();
    let template = random_config(4, &[1.0, 1.0, -1.0, -1.0], 0);
    let mut p = CanonicalParams::new(5.0, 42);
    p.burn_in = 100;
    p.thinning = 5;
    let a = sample_canonical(&g, &template, &p, 50).unwrap();
    let b = sample_canonical(&g, &template, &p, 50).unwrap();
    assert_eq!(a, b);
    p.seed = 43;
    let c = sample_canonical(&g, &template, &p, 50).unwrap();
    assert_ne!(a.configurations(), c.configurations());
}

#[test]
fn logged_steps_follow_metropolis_rule() {
    let g = GreenEvaluator::default();
    let x0 = spread_config(4, &[1.0, 2.0, -1.0, -0.5], 0.1, 3);
    let beta = 3.0;
    let mut chain = MetropolisChain::new(&g, x0, beta, DiskProposal { scale: 0.2 }, 9);
    let mut accepted = 0;
    for _ in 0..2000 {
        let before = chain.state().clone();
        let e0 = hamiltonian(&g, &before).unwrap() / 2.0;
        let step = chain.step();
        assert_eq!(step.accepted, step.u < (-beta * step.delta).exp());
        if step.accepted {
            accepted += 1;
            let e1 = hamiltonian(&g, chain.state()).unwrap() / 2.0;
            assert!((e1 - e0 - step.delta).abs() < 1e-9);
            assert!((chain.energy() - e1).abs() < 1e-8);
        } else {
            assert_eq!(chain.state(), &before);
        }
    }
    assert_eq!(chain.accepted(), accepted);
    assert_eq!(chain.proposed(), 2000);
}

/// Vortex 1 hops between three fixed sites; vortex 0 sits at the origin.
struct ThreeSites([TorusPoint; 3]);

impl Proposal for ThreeSites {
    fn propose(&self, x: &Configuration, rng: &mut ChaCha8Rng) -> (usize, TorusPoint) {
        let cur = self.site(x);
        let next = (cur + rng.random_range(1..3)) % 3;
        (1, self.0[next])
    }
}

impl ThreeSites {
    fn site(&self, x: &Configuration) -> usize {
        self.0.iter().position(|p| *p == x.position(1)).unwrap()
    }
}

#[test]
fn detailed_balance_three_state_toy() {
    let g = GreenEvaluator::default();
    let sites = [0.08, 0.22, 0.45].map(|u| TorusPoint::wrap([u, 0.1]).unwrap());
    let xi = [1.0, 1.0];
    let beta = -4.0;
    let energy: Vec<f64> = sites
        .iter()
        .map(|p| {
            let x = Configuration::new(vec![TorusPoint::ORIGIN, *p], xi.to_vec()).unwrap();
            hamiltonian(&g, &x).unwrap() / 2.0
        })
        .collect();
    let w: Vec<f64> = energy.iter().map(|e| (-beta * e).exp()).collect();
    let z: f64 = w.iter().sum();
    let pi: Vec<f64> = w.iter().map(|w| w / z).collect();

    let x0 = Configuration::new(vec![TorusPoint::ORIGIN, sites[0]], xi.to_vec()).unwrap();
    let prop = ThreeSites(sites);
    let mut chain = MetropolisChain::new(&g, x0, beta, ThreeSites(sites), 5);
    let steps = 300_000;
    let mut counts = [[0usize; 3]; 3];
    for _ in 0..steps {
        let a = prop.site(chain.state());
        chain.step();
        counts[a][prop.site(chain.state())] += 1;
    }
    for a in 0..3 {
        let na: usize = counts[a].iter().sum();
        let occupancy = na as f64 / steps as f64;
        assert!((occupancy - pi[a]).abs() < 0.02, "occupancy {a}: {occupancy} vs {}", pi[a]);
        for b in 0..3 {
            if a == b {
                continue;
            }
            let exact = 0.5 * (-beta * (energy[b] - energy[a])).exp().min(1.0);
            let nb: usize = counts[b].iter().sum();
            let pab = counts[a][b] as f64 / na as f64;
            let pba = counts[b][a] as f64 / nb as f64;
            let se_ab = (pab * (1.0 - pab) / na as f64).sqrt();
            let se_ba = (pba * (1.0 - pba) / nb as f64).sqrt();
            assert!((pab - exact).abs() < 3.0 * se_ab + 1e-12, "P[{a}][{b}] {pab} vs {exact}");
            let lhs = pi[a] * pab;
            let rhs = pi[b] * pba;
            let se = (pi[a] * se_ab).hypot(pi[b] * se_ba);
            assert!((lhs - rhs).abs() < 3.0 * se, "balance {a}{b}: {lhs} vs {rhs} (se {se})");
        }
    }
}

fn uniform_h_stats(g: &GreenEvaluator, xi: &[f64], n: usize) -> (f64, f64) {
    let h: Vec<f64> = (0..n)
        .map(|s| hamiltonian(g, &random_config(xi.len(), xi, 1000 + s as u64)).unwrap())
        .collect();
    let mean = h.iter().sum::<f64>() / n as f64;
    let var = h.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    let mut sorted = h;
    sorted.sort_by(f64::total_cmp);
    (sorted[n / 2], var.sqrt())
}

#[test]
fn microcanonical_stays_in_shell() {
    let g = Arc::new(GreenEvaluator::default());
    let xi = [1.0, 1.0, -1.0, -1.0];
    let template = random_config(4, &xi, 0);
    let (median, _) = uniform_h_stats(&g, &xi, 400);
    let mut p = MicrocanonicalParams::new(median, 3);
    p.burn_in = 1_000;
    p.thinning = 20;
    let width = p.width();
    let s = sample_microcanonical(&g, &template, &p, 300).unwrap();
    assert!(s.acceptance_rate() > 0.0 && s.acceptance_rate() < 1.0);
    for x in s.configurations() {
        assert!((hamiltonian(&g, x).unwrap() - median).abs() <= width * (1.0 + 1e-9));
    }

    let engine = FlowEngine::new(g.clone(), FlowParams::default()).unwrap();
    for (k, x) in s.configurations().iter().step_by(15).enumerate() {
        let mut sched = TauSchedule::with_stream(TauDistribution::Exponential, 17, k as u64);
        let y = engine.interpolated_flow(x, 0.5, 16, &mut sched).unwrap();
        assert!((hamiltonian(&g, &y).unwrap() - median).abs() <= width * (1.0 + 1e-6));
    }
}

#[test]
fn wide_shell_recovers_uniform_marginals() {
    let g = GreenEvaluator::default();
    let xi = [1.0, 1.0, -1.0];
    let template = random_config(3, &xi, 0);
    let (median, sd) = uniform_h_stats(&g, &xi, 400);
    let mut p = MicrocanonicalParams::new(median, 8);
    p.shell_width = Some(10.0 * sd);
    p.burn_in = 2_000;
    p.thinning = 150;
    let s = sample_microcanonical(&g, &template, &p, 2000).unwrap();
    for (k, m) in marginals(&s).iter().enumerate() {
        let d = ks_uniform(m);
        assert!(d < 0.05, "coordinate {k}: KS {d}");
    }
}

#[test]
fn unreachable_shell_is_reported() {
    let g = GreenEvaluator::default();
    let template = random_config(3, &[1.0, 1.0, 1.0], 0);
    let mut p = MicrocanonicalParams::new(1e4, 1);
    p.search_budget = 3_000;
    match sample_microcanonical(&g, &template, &p, 10) {
        Err(Error::EmptyShell { attempts, .. }) => assert_eq!(attempts, 3_000),
        other => panic!("expected EmptyShell, got {other:?}"),
    }
    p.shell_width = Some(0.0);
    assert!(matches!(
        sample_microcanonical(&g, &template, &p, 10),
        Err(Error::InvalidInput(_))
    ));
}

fn small_sample(count: usize) -> EnsembleSample {
    let xi = [1.0, 1.0, -1.0, -1.0];
    let configs = (0..count).map(|s| spread_config(4, &xi, 0.05, s as u64)).collect();
    EnsembleSample::from_configurations(configs).unwrap()
}

#[test]
fn identity_flow_has_zero_ks() {
    let engine = FlowEngine::new(Arc::new(GreenEvaluator::default()), FlowParams::default()).unwrap();
    let sample = small_sample(500);
    let report = invariance_test(&engine, &sample, &InvarianceSpec::new(16, 0.0, 1)).unwrap();
    assert_eq!(report.rows.len(), 4);
    for row in &report.rows {
        assert_eq!(row.ks, 0.0);
        assert!(row.passed);
    }
    assert!((report.rows[0].critical - ks_critical_two_sample(0.01, 500, 500)).abs() < 1e-15);
}

#[test]
fn invariance_needs_enough_samples() {
    let engine = FlowEngine::new(Arc::new(GreenEvaluator::default()), FlowParams::default()).unwrap();
    let err = invariance_test(&engine, &small_sample(499), &InvarianceSpec::new(16, 0.5, 1)).unwrap_err();
    assert!(matches!(err, Error::InvalidInput(_)));
}

#[test]
fn sample_jsonl_layout() {
    let g = GreenEvaluator::default();
    let template = random_config(2, &[1.0, -1.0], 0);
    let mut p = CanonicalParams::new(1.0, 4);
    p.burn_in = 10;
    p.thinning = 3;
    let s = sample_canonical(&g, &template, &p, 20).unwrap();
    let mut buf = Vec::new();
    s.write_jsonl(&mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 21);
    for (line, x) in lines.iter().zip(s.configurations()) {
        assert_eq!(&Configuration::from_json(line).unwrap(), x);
    }
    let footer: serde_json::Value = serde_json::from_str(lines[20]).unwrap();
    let d = &footer["diagnostics"];
    assert_eq!(d["count"], 20);
    assert_eq!(d["proposed"], 60);
    let rate = d["acceptance_rate"].as_f64().unwrap();
    assert!((rate - d["accepted"].as_f64().unwrap() / 60.0).abs() < 1e-15);
}

#[test]
fn mixed_samples_are_rejected() {
    let a = random_config(3, &[1.0, 1.0, 1.0], 0);
    let b = random_config(3, &[1.0, 1.0, -1.0], 1);
    assert!(EnsembleSample::from_configurations(vec![a, b]).is_err());
}
