use irs_assoc::channel::{sample_fading, ChannelRealization};
use irs_assoc::engine::{
    build_environment, probe_irs_satisfaction, run_replication, run_replications, Environment, SatisfactionTrace, SimulationConfig, Streams,
};
use irs_assoc::policy::PolicyKind;
use irs_assoc::topology::DistributionCase;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn cfg(periods: usize, replications: usize) -> SimulationConfig {
    SimulationConfig {
        periods,
        replications,
        base_seed: 1000,
        ..SimulationConfig::default()
    }
}

#[test]
fn fading_mean_and_variance() {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let n = 100_000;
    let draws: Vec<f64> = (0..n).map(|_| sample_fading(&mut rng)).collect();
    let mean = draws.iter().sum::<f64>() / n as f64;
    let var = draws.iter().map(|g| (g - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    assert!((mean - 1.0).abs() < 0.01, "mean {mean}");
    assert!((var - 1.0).abs() < 0.05, "variance {var}");
}

#[test]
fn rssi_golden_for_first_ue() {
    let cfg = cfg(1, 1);
    let mut streams = Streams::from_seed(0);
    let mut env = build_environment(&cfg, &mut streams).unwrap();
    let topo = env.topology().clone();
    let mut shadow = streams.channel.clone();
    env.next_block(&mut streams.channel);
    let irs = env.candidates(0)[0];
    let got = env.rssi_db(0, irs);

    // straight-line recomputation from the raw draws
    let block = ChannelRealization::for_topology(&topo, &mut shadow);
    let panel = topo.irs_panels[irs];
    let bs = topo.small_cells[panel.cell];
    let ue = topo.ues[0];
    let d1 = ((bs.x - panel.position.x).powi(2) + (bs.y - panel.position.y).powi(2)).sqrt();
    let d2 = ((ue.x - panel.position.x).powi(2) + (ue.y - panel.position.y).powi(2)).sqrt();
    let manual = 5.0 + 65.0 - 22.0 * d1.log10() - 22.0 * d2.max(1.0).log10()
        + 10.0 * (block.bs_irs[irs] * block.irs_ue[irs][0]).log10();
    assert!((got - manual).abs() < 1e-9, "{got} vs {manual}");
    assert!((got - RSSI_GOLDEN_DB).abs() < 1e-9, "rssi {got:.12}");
}

const RSSI_GOLDEN_DB: f64 = 13.941965681738;

#[test]
fn raising_threshold_never_adds_satisfaction() {
    let thresholds = [0.25, 0.5, 1.0, 2.0, 4.0];
    for seed in [3u64, 4, 5] {
        let runs: Vec<Vec<u32>> = thresholds
            .iter()
            .map(|&t| {
                let c = SimulationConfig {
                    rate_threshold: t,
                    policy: irs_assoc::PolicyConfig {
                        kind: PolicyKind::Greedy,
                        ..Default::default()
                    },
                    ..cfg(1, 1)
                };
                run_replication(&c, seed).unwrap().satisfied
            })
            .collect();
        for pair in runs.windows(2) {
            assert!(pair[1][0] <= pair[0][0]);
        }
    }
}

#[test]
fn probe_counts_shrink_with_threshold() {
    let mut previous: Option<Vec<u64>> = None;
    for t in [0.25, 0.5, 1.0, 2.0, 4.0] {
        let c = SimulationConfig {
            rate_threshold: t,
            ..cfg(20, 3)
        };
        let counts: Vec<u64> = probe_irs_satisfaction(&c).unwrap().iter().map(|p| p.satisfied).collect();
        if let Some(prev) = &previous {
            assert!(counts.iter().zip(prev).all(|(now, before)| now <= before));
        }
        previous = Some(counts);
    }
}

#[test]
fn conservation_per_agent() {
    for kind in [PolicyKind::ContextualBandit, PolicyKind::Greedy] {
        let mut c = cfg(60, 1);
        c.policy.kind = kind;
        let rep = run_replication(&c, 21).unwrap();
        for (agent, &sat) in rep.agents.iter().zip(&rep.satisfied_periods) {
            assert_eq!(agent.total_reward(), sat);
        }
        let total: u64 = rep.satisfied.iter().map(|&c| c as u64).sum();
        assert_eq!(total, rep.satisfied_periods.iter().sum::<u64>());
    }
}

#[test]
fn permutation_of_replications_is_invisible() {
    let c = cfg(40, 12);
    let reps = run_replications(&c).unwrap();
    let forward = SatisfactionTrace::from_replications(&c, &reps);
    let mut shuffled = reps.clone();
    shuffled.reverse();
    shuffled.swap(1, 7);
    let backward = SatisfactionTrace::from_replications(&c, &shuffled);
    assert_eq!(forward, backward);
    for (a, b) in forward.mean.iter().zip(&backward.mean) {
        assert_eq!(a.to_bits(), b.to_bits());
    }
}

#[test]
fn pooled_mean_is_weighted_mean() {
    let a = cfg(30, 5);
    let b = SimulationConfig {
        base_seed: 5000,
        replications: 9,
        ..a.clone()
    };
    let ra = run_replications(&a).unwrap();
    let rb = run_replications(&b).unwrap();
    let ta = SatisfactionTrace::from_replications(&a, &ra);
    let tb = SatisfactionTrace::from_replications(&b, &rb);
    let pooled: Vec<_> = ra.iter().chain(&rb).cloned().collect();
    let tp = SatisfactionTrace::from_replications(&a, &pooled);
    assert_eq!(tp.replications(), 14);
    for t in 0..30 {
        let want = (5.0 * ta.mean[t] + 9.0 * tb.mean[t]) / 14.0;
        assert!((tp.mean[t] - want).abs() < 1e-12);
    }
    assert_eq!(tp.blocks_drawn, ta.blocks_drawn + tb.blocks_drawn);
}

#[test]
fn trace_shape_and_range() {
    for case in [DistributionCase::Random, DistributionCase::Clustered] {
        let mut c = cfg(25, 6);
        c.topology.distribution_case = case;
        let trace = irs_assoc::run_monte_carlo(&c).unwrap();
        assert_eq!(trace.periods(), 25);
        assert_eq!(trace.case, case);
        assert!(trace.mean.iter().all(|m| (0.0..=1.0).contains(m)));
        assert!(trace.ci95.iter().all(|h| *h >= 0.0));
        assert!(trace.mean_secrecy.iter().all(|s| *s >= 0.0));
        assert_eq!(trace.seeds, (1000..1006).collect::<Vec<_>>());
    }
}

#[test]
fn default_protocol_draws_ten_thousand_blocks() {
    let mut c = SimulationConfig::default();
    c.topology.ue_count = 2;
    c.topology.distribution_case = DistributionCase::Random;
    let trace = irs_assoc::run_monte_carlo(&c).unwrap();
    assert_eq!(trace.blocks_drawn, 10_000);
    assert_eq!(trace.blocks_drawn, c.channel_budget);
}
