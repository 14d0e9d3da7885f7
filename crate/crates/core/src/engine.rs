//! Monte-Carlo driver.
//!
//! One replication owns a topology, one agent per UE and three independent
//! random streams derived from the replication seed: topology/UE drops,
//! channel fading and policy decisions. Keeping them apart means two runs that
//! differ only in the policy see exactly the same network and fading.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{self, ChannelParams, ChannelRealization};
use crate::error::{invalid, Error, Result};
use crate::policy::{AgentState, PolicyConfig, PolicyKind};
use crate::topology::{self, DistributionCase, NetworkTopology, TopologyConfig};

pub type SimRng = ChaCha8Rng;

/// Window used for "final" satisfaction figures.
pub const FINAL_WINDOW: usize = 20;

const Z_95: f64 = 1.959_963_984_540_054;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationConfig {
    pub topology: TopologyConfig,
    pub channel: ChannelParams,
    pub policy: PolicyConfig,
    /// Rate (bits/s/Hz) a UE needs in a period to count as satisfied.
    pub rate_threshold: f64,
    pub periods: usize,
    pub replications: usize,
    pub base_seed: u64,
    /// Total fading blocks the protocol is meant to draw.
    pub channel_budget: u64,
    pub enforce_channel_budget: bool,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        Self {
            topology: TopologyConfig::default(),
            channel: ChannelParams::default(),
            policy: PolicyConfig::default(),
            rate_threshold: 1.0,
            periods: 100,
            replications: 100,
            base_seed: 0,
            channel_budget: 10_000,
            enforce_channel_budget: false,
        }
    }
}

impl SimulationConfig {
    pub fn validate(&self) -> Result<()> {
        self.topology.validate()?;
        self.channel.validate()?;
        self.policy.validate()?;
        if !(self.rate_threshold > 0.0) {
            return Err(invalid("rate_threshold", "must be positive"));
        }
        if self.periods == 0 {
            return Err(invalid("periods", "must be at least 1"));
        }
        if self.replications == 0 {
            return Err(invalid("replications", "must be at least 1"));
        }
        if self.enforce_channel_budget && self.blocks_required() > self.channel_budget as u128 {
            return Err(invalid(
                "channel_budget",
                format!(
                    "{} periods x {} replications needs {} blocks, budget is {}",
                    self.periods,
                    self.replications,
                    self.blocks_required(),
                    self.channel_budget
                ),
            ));
        }
        Ok(())
    }

    fn blocks_required(&self) -> u128 {
        self.periods as u128 * self.replications as u128
    }

    pub fn seeds(&self) -> impl Iterator<Item = u64> + '_ {
        (0..self.replications as u64).map(move |i| self.base_seed.wrapping_add(i))
    }
}

/// The three per-replication random streams.
#[derive(Debug, Clone)]
pub struct Streams {
    pub topology: SimRng,
    pub channel: SimRng,
    pub policy: SimRng,
}

impl Streams {
    pub fn from_seed(seed: u64) -> Self {
        let stream = |id: u64| {
            let mut rng = SimRng::seed_from_u64(seed);
            rng.set_stream(id);
            rng
        };
        Self {
            topology: stream(0),
            channel: stream(1),
            policy: stream(2),
        }
    }
}

/// What the agents interact with. The engine only needs per-period link
/// rates and an RSSI reading for the warm start; tests plug in abstract
/// environments through this trait.
pub trait Environment {
    fn ue_count(&self) -> usize;
    /// Candidate arms (global IRS indices) of `ue`.
    fn candidates(&self, ue: usize) -> Vec<usize>;
    /// Draws the next fading block.
    fn next_block(&mut self, rng: &mut SimRng);
    fn rssi_db(&self, ue: usize, irs: usize) -> f64;
    /// Achievable rate of `ue` through `irs` in the current block.
    fn rate(&self, ue: usize, irs: usize) -> f64;
    /// Secrecy rate of that link against the strongest eavesdropper.
    fn secrecy_rate(&self, ue: usize, irs: usize) -> f64 {
        self.rate(ue, irs)
    }
}

/// The HetNet itself: cascaded links over the generated topology.
#[derive(Debug, Clone)]
pub struct HetNetEnvironment {
    topo: NetworkTopology,
    params: ChannelParams,
    candidates: Vec<Vec<usize>>,
    cell_eves: Vec<Vec<usize>>,
    block: Option<ChannelRealization>,
}

impl HetNetEnvironment {
    pub fn new(topo: NetworkTopology, params: ChannelParams, detection_threshold_db: Option<f64>) -> Self {
        let candidates = (0..topo.ues.len())
            .map(|ue| {
                let ring = topo.candidate_irs_set(ue);
                match detection_threshold_db {
                    None => ring,
                    Some(threshold) => detected_subset(&topo, &params, ue, ring, threshold),
                }
            })
            .collect();
        let cell_eves = (0..topo.small_cells.len())
            .map(|c| topo.eavesdroppers_of_cell(c))
            .collect();
        Self {
            topo,
            params,
            candidates,
            cell_eves,
            block: None,
        }
    }

    pub fn topology(&self) -> &NetworkTopology {
        &self.topo
    }

    fn block(&self) -> &ChannelRealization {
        self.block.as_ref().expect("next_block must run before link queries")
    }

    fn snr(&self, irs: usize, rx: &topology::Position, g_rx: f64) -> f64 {
        let panel = &self.topo.irs_panels[irs];
        let bs = &self.topo.small_cells[panel.cell];
        channel::cascaded_snr(bs, &panel.position, rx, self.block().bs_irs[irs], g_rx, &self.params)
    }
}

/// Panels whose fading-free RSSI reaches `threshold`; the strongest panel is
/// kept when none does so that the agent always has an arm.
fn detected_subset(
    topo: &NetworkTopology,
    params: &ChannelParams,
    ue: usize,
    ring: Vec<usize>,
    threshold: f64,
) -> Vec<usize> {
    let rx = topo.ues[ue];
    let level = |irs: usize| {
        let panel = &topo.irs_panels[irs];
        params.mean_received_db(&topo.small_cells[panel.cell], &panel.position, &rx)
    };
    let kept: Vec<usize> = ring.iter().copied().filter(|&i| level(i) >= threshold).collect();
    if kept.is_empty() {
        let levels: Vec<f64> = ring.iter().map(|&i| level(i)).collect();
        vec![ring[crate::policy::argmax_lowest(&levels).unwrap_or(0)]]
    } else {
        kept
    }
}

impl Environment for HetNetEnvironment {
    fn ue_count(&self) -> usize {
        self.topo.ues.len()
    }

    fn candidates(&self, ue: usize) -> Vec<usize> {
        self.candidates[ue].clone()
    }

    fn next_block(&mut self, rng: &mut SimRng) {
        self.block = Some(ChannelRealization::for_topology(&self.topo, rng));
    }

    fn rssi_db(&self, ue: usize, irs: usize) -> f64 {
        let panel = &self.topo.irs_panels[irs];
        let b = self.block();
        channel::rssi_db(
            &self.topo.small_cells[panel.cell],
            &panel.position,
            &self.topo.ues[ue],
            b.bs_irs[irs],
            b.irs_ue[irs][ue],
            &self.params,
        )
    }

    fn rate(&self, ue: usize, irs: usize) -> f64 {
        let snr = self.snr(irs, &self.topo.ues[ue], self.block().irs_ue[irs][ue]);
        // cascaded_snr is a product of non-negative terms
        channel::achievable_rate(snr).unwrap_or(0.0)
    }

    fn secrecy_rate(&self, ue: usize, irs: usize) -> f64 {
        let main = self.rate(ue, irs);
        let cell = self.topo.serving_cell(&self.topo.ues[ue]);
        let b = self.block();
        let eves = self.cell_eves[cell].iter().map(|&e| {
            let pos = self.topo.eavesdroppers[e].position;
            channel::achievable_rate(self.snr(irs, &pos, b.irs_eve[irs][e])).unwrap_or(0.0)
        });
        channel::secrecy_rate_multi(main, eves)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UeOutcome {
    pub irs: usize,
    pub rate: f64,
    pub satisfied: bool,
    /// Reported only; never fed back to the agent.
    pub secrecy_rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeriodOutcome {
    pub ues: Vec<UeOutcome>,
}

impl PeriodOutcome {
    pub fn satisfied_count(&self) -> usize {
        self.ues.iter().filter(|u| u.satisfied).count()
    }

    pub fn mean_secrecy_rate(&self) -> f64 {
        if self.ues.is_empty() {
            return 0.0;
        }
        self.ues.iter().map(|u| u.secrecy_rate).sum::<f64>() / self.ues.len() as f64
    }
}

/// Fraction of satisfied UEs in one period.
pub fn mean_satisfaction(outcome: &PeriodOutcome) -> Result<f64> {
    if outcome.ues.is_empty() {
        return Err(Error::NoUes);
    }
    Ok(outcome.satisfied_count() as f64 / outcome.ues.len() as f64)
}

/// One association period: draw a block, let every agent decide (or warm
/// start on its first period), score and update.
pub fn run_period<E: Environment>(
    env: &mut E,
    agents: &mut [AgentState],
    policy: &PolicyConfig,
    rate_threshold: f64,
    channel_rng: &mut SimRng,
    policy_rng: &mut SimRng,
) -> Result<PeriodOutcome> {
    env.next_block(channel_rng);
    let mut ues = Vec::with_capacity(agents.len());
    for (ue, agent) in agents.iter_mut().enumerate() {
        let irs = if agent.is_initialized() {
            agent.select_irs(policy, policy_rng)?
        } else {
            let rssi: Vec<f64> = match policy.kind {
                PolicyKind::ContextualBandit => agent.candidates().iter().map(|&i| env.rssi_db(ue, i)).collect(),
                PolicyKind::Greedy => Vec::new(),
            };
            agent.init_association(policy.kind, &rssi, policy_rng)?
        };
        let rate = env.rate(ue, irs);
        let satisfied = rate >= rate_threshold;
        agent.update(satisfied);
        ues.push(UeOutcome {
            irs,
            rate,
            satisfied,
            secrecy_rate: env.secrecy_rate(ue, irs),
        });
    }
    Ok(PeriodOutcome { ues })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Replication {
    pub seed: u64,
    pub ue_count: usize,
    /// Satisfied UEs per period.
    pub satisfied: Vec<u32>,
    /// Mean secrecy rate over UEs per period.
    pub secrecy: Vec<f64>,
    /// Satisfied periods experienced by each agent.
    pub satisfied_periods: Vec<u64>,
    pub agents: Vec<AgentState>,
    pub blocks_drawn: u64,
}

impl Replication {
    /// Fraction of satisfied UEs per period.
    pub fn satisfaction(&self) -> Vec<f64> {
        let n = self.ue_count as f64;
        self.satisfied.iter().map(|&c| c as f64 / n).collect()
    }

    /// Mean satisfaction over the last `window` periods.
    pub fn window_mean(&self, window: usize) -> f64 {
        window_mean(&self.satisfaction(), window)
    }
}

pub(crate) fn window_mean(series: &[f64], window: usize) -> f64 {
    let w = window.clamp(1, series.len().max(1));
    let tail = &series[series.len().saturating_sub(w)..];
    tail.iter().sum::<f64>() / tail.len().max(1) as f64
}

/// Runs `periods` periods of `env` with fresh agents.
pub fn run_in_environment<E: Environment>(
    env: &mut E,
    policy: &PolicyConfig,
    rate_threshold: f64,
    periods: usize,
    seed: u64,
    streams: &mut Streams,
) -> Result<Replication> {
    let ue_count = env.ue_count();
    if ue_count == 0 {
        return Err(Error::NoUes);
    }
    let mut agents: Vec<AgentState> = (0..ue_count).map(|ue| AgentState::new(env.candidates(ue))).collect();
    let mut satisfied = Vec::with_capacity(periods);
    let mut secrecy = Vec::with_capacity(periods);
    let mut satisfied_periods = vec![0u64; ue_count];
    for _ in 0..periods {
        let out = run_period(
            env,
            &mut agents,
            policy,
            rate_threshold,
            &mut streams.channel,
            &mut streams.policy,
        )?;
        for (count, ue) in satisfied_periods.iter_mut().zip(&out.ues) {
            *count += ue.satisfied as u64;
        }
        satisfied.push(out.satisfied_count() as u32);
        secrecy.push(out.mean_secrecy_rate());
    }
    Ok(Replication {
        seed,
        ue_count,
        satisfied,
        secrecy,
        satisfied_periods,
        agents,
        blocks_drawn: periods as u64,
    })
}

/// Builds the network for `seed` and wraps it as an environment.
pub fn build_environment(cfg: &SimulationConfig, streams: &mut Streams) -> Result<HetNetEnvironment> {
    let topo = topology::generate(&cfg.topology, &mut streams.topology)?;
    Ok(HetNetEnvironment::new(
        topo,
        cfg.channel.clone(),
        cfg.topology.detection_threshold_db,
    ))
}

pub fn run_replication(cfg: &SimulationConfig, seed: u64) -> Result<Replication> {
    cfg.validate()?;
    let mut streams = Streams::from_seed(seed);
    let mut env = build_environment(cfg, &mut streams)?;
    run_in_environment(&mut env, &cfg.policy, cfg.rate_threshold, cfg.periods, seed, &mut streams)
}

/// All replications of `cfg`, in seed order. Runs in parallel.
pub fn run_replications(cfg: &SimulationConfig) -> Result<Vec<Replication>> {
    cfg.validate()?;
    let seeds: Vec<u64> = cfg.seeds().collect();
    seeds.par_iter().map(|&s| run_replication(cfg, s)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SatisfactionTrace {
    pub policy: PolicyKind,
    pub case: DistributionCase,
    pub omega: f64,
    pub phi: u32,
    /// Seeds of the aggregated replications, ascending.
    pub seeds: Vec<u64>,
    /// Per-iteration mean satisfaction across replications.
    pub mean: Vec<f64>,
    /// Per-iteration 95% normal-approximation half-width.
    pub ci95: Vec<f64>,
    pub mean_secrecy: Vec<f64>,
    pub blocks_drawn: u64,
}

impl SatisfactionTrace {
    /// Aggregates replications. Input order does not matter: replications
    /// are reduced in ascending seed order.
    pub fn from_replications(cfg: &SimulationConfig, reps: &[Replication]) -> Self {
        let mut sorted: Vec<&Replication> = reps.iter().collect();
        sorted.sort_by_key(|r| r.seed);
        let periods = sorted.iter().map(|r| r.satisfied.len()).min().unwrap_or(0);
        let n = sorted.len() as f64;

        let series: Vec<Vec<f64>> = sorted.iter().map(|r| r.satisfaction()).collect();
        let mut mean = Vec::with_capacity(periods);
        let mut ci95 = Vec::with_capacity(periods);
        let mut mean_secrecy = Vec::with_capacity(periods);
        for t in 0..periods {
            let m = series.iter().map(|s| s[t]).sum::<f64>() / n;
            let half = if sorted.len() > 1 {
                let var = series.iter().map(|s| (s[t] - m).powi(2)).sum::<f64>() / (n - 1.0);
                Z_95 * (var / n).sqrt()
            } else {
                0.0
            };
            mean.push(m);
            ci95.push(half);
            mean_secrecy.push(sorted.iter().map(|r| r.secrecy[t]).sum::<f64>() / n);
        }

        Self {
            policy: cfg.policy.kind,
            case: cfg.topology.distribution_case,
            omega: cfg.policy.omega,
            phi: cfg.policy.phi,
            seeds: sorted.iter().map(|r| r.seed).collect(),
            mean,
            ci95,
            mean_secrecy,
            blocks_drawn: sorted.iter().map(|r| r.blocks_drawn).sum(),
        }
    }

    pub fn periods(&self) -> usize {
        self.mean.len()
    }

    pub fn replications(&self) -> usize {
        self.seeds.len()
    }

    /// Mean satisfaction over the last `window` iterations.
    pub fn final_mean(&self, window: usize) -> f64 {
        window_mean(&self.mean, window)
    }

    pub fn overall_secrecy(&self) -> f64 {
        if self.mean_secrecy.is_empty() {
            return 0.0;
        }
        self.mean_secrecy.iter().sum::<f64>() / self.mean_secrecy.len() as f64
    }
}

pub fn run_monte_carlo(cfg: &SimulationConfig) -> Result<SatisfactionTrace> {
    let reps = run_replications(cfg)?;
    Ok(SatisfactionTrace::from_replications(cfg, &reps))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IrsSatisfaction {
    pub irs: usize,
    pub trials: u64,
    pub satisfied: u64,
}

impl IrsSatisfaction {
    pub fn frequency(&self) -> f64 {
        if self.trials == 0 {
            0.0
        } else {
            self.satisfied as f64 / self.trials as f64
        }
    }
}

/// Counterfactual probe: in every block, scores every UE on every one of its
/// candidate IRS panels, independent of any policy. Uses the same topology
/// and channel streams as [`run_replication`].
pub fn probe_irs_satisfaction(cfg: &SimulationConfig) -> Result<Vec<IrsSatisfaction>> {
    cfg.validate()?;
    let seeds: Vec<u64> = cfg.seeds().collect();
    let per_seed: Vec<Vec<(u64, u64)>> = seeds
        .par_iter()
        .map(|&seed| -> Result<Vec<(u64, u64)>> {
            let mut streams = Streams::from_seed(seed);
            let mut env = build_environment(cfg, &mut streams)?;
            let mut counts = vec![(0u64, 0u64); env.topology().irs_panels.len()];
            for _ in 0..cfg.periods {
                env.next_block(&mut streams.channel);
                for ue in 0..env.ue_count() {
                    for &irs in &env.candidates[ue] {
                        counts[irs].0 += 1;
                        counts[irs].1 += (env.rate(ue, irs) >= cfg.rate_threshold) as u64;
                    }
                }
            }
            Ok(counts)
        })
        .collect::<Result<_>>()?;

    let n_irs = per_seed.first().map_or(0, Vec::len);
    Ok((0..n_irs)
        .map(|irs| {
            let (trials, satisfied) = per_seed
                .iter()
                .fold((0, 0), |(t, s), c| (t + c[irs].0, s + c[irs].1));
            IrsSatisfaction {
                irs,
                trials,
                satisfied,
            }
        })
        .collect())
}

/// Abstract bandit environment: every UE sees the same arms, arm `k`
/// succeeds independently each block with probability `probs[k]`. A success
/// is reported as rate 1.0 and a failure as 0.0, so use a threshold in (0, 1].
#[derive(Debug, Clone)]
pub struct BernoulliArms {
    probs: Vec<f64>,
    rssi_db: Vec<f64>,
    ue_count: usize,
    success: Vec<Vec<bool>>,
}

impl BernoulliArms {
    pub fn new(probs: Vec<f64>, rssi_db: Vec<f64>, ue_count: usize) -> Self {
        assert_eq!(probs.len(), rssi_db.len(), "one RSSI reading per arm");
        let success = vec![vec![false; probs.len()]; ue_count];
        Self {
            probs,
            rssi_db,
            ue_count,
            success,
        }
    }
}

impl Environment for BernoulliArms {
    fn ue_count(&self) -> usize {
        self.ue_count
    }

    fn candidates(&self, _ue: usize) -> Vec<usize> {
        (0..self.probs.len()).collect()
    }

    fn next_block(&mut self, rng: &mut SimRng) {
        for row in &mut self.success {
            for (s, &p) in row.iter_mut().zip(&self.probs) {
                *s = rng.gen::<f64>() < p;
            }
        }
    }

    fn rssi_db(&self, _ue: usize, irs: usize) -> f64 {
        self.rssi_db[irs]
    }

    fn rate(&self, ue: usize, irs: usize) -> f64 {
        if self.success[ue][irs] {
            1.0
        } else {
            0.0
        }
    }
}
