use std::io::Write;
use std::path::Path;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::conditional::ConditionalRule;
use super::state::{mcmc_sweep, ChainStats, EnsembleState};
use super::EnsembleConfig;
use crate::error::{Error, Result};

/// Minimum number of burn-in sweeps under the default rule.
pub const MIN_BURN_IN: usize = 5000;
pub const TARGET_ACCEPTANCE: f64 = 0.3;
const ADAPT_WINDOW: usize = 50;

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChainOptions {
    /// Total sweeps, burn-in included.
    pub sweeps: usize,
    /// Defaults to `max(20% of sweeps, 5000)`.
    #[serde(default)]
    pub burn_in: Option<usize>,
    pub seed: u64,
    #[serde(default)]
    pub initial_scale: Option<f64>,
    /// Keep a copy of the configuration every this many post-burn-in sweeps (0 = never).
    #[serde(default)]
    pub snapshot_every: usize,
    /// Evaluate the conditional outlier probability every this many sweeps (0 = never).
    #[serde(default)]
    pub conditional_every: usize,
}

impl ChainOptions {
    pub fn new(sweeps: usize, seed: u64) -> Self {
        ChainOptions {
            sweeps,
            burn_in: None,
            seed,
            initial_scale: None,
            snapshot_every: 0,
            conditional_every: 0,
        }
    }

    pub fn burn_in(&self) -> usize {
        self.burn_in
            .unwrap_or_else(|| (self.sweeps / 5).max(MIN_BURN_IN))
    }

    pub fn validate(&self) -> Result<()> {
        if self.sweeps <= self.burn_in() {
            return Err(Error::Config(format!(
                "sweeps ({}) must exceed burn-in ({})",
                self.sweeps,
                self.burn_in()
            )));
        }
        Ok(())
    }
}

/// Everything recorded by one chain after burn-in.
#[derive(Clone, Debug)]
pub struct ChainOutput {
    pub chain_id: usize,
    pub n: usize,
    pub stats: ChainStats,
    /// `z_1` after each post-burn-in sweep.
    pub z1: Vec<Complex64>,
    /// Number of coordinates in `W` after each post-burn-in sweep.
    pub count_in_w: Vec<u32>,
    /// `P(z_k in W | other coordinates)` on the evaluation schedule.
    pub conditional: Vec<f64>,
    pub snapshots: Vec<(usize, Vec<Complex64>)>,
    pub final_state: EnsembleState,
}

/// Run one chain: adapt the proposal scale towards 30% acceptance during
/// burn-in, then freeze it and record.
pub fn run_chain(config: &EnsembleConfig, opts: &ChainOptions, chain_id: usize) -> Result<ChainOutput> {
    opts.validate()?;
    let burn_in = opts.burn_in();
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let n = config.n;
    let mut state = EnsembleState::random(n, &config.grid.domain, &config.field, &mut rng)?;
    let scale0 = opts.initial_scale.unwrap_or_else(|| {
        let d = config.grid.domain.diameter().max(1e-3);
        0.5 * d / (n as f64).sqrt().max(1.0)
    });
    let mut stats = ChainStats {
        proposal_scale: scale0,
        seed: opts.seed,
        burn_in,
        ..Default::default()
    };
    let rule = if opts.conditional_every > 0 {
        Some(ConditionalRule::new(config)?)
    } else {
        None
    };
    let recorded = opts.sweeps - burn_in;
    let mut out = ChainOutput {
        chain_id,
        n,
        stats: ChainStats::default(),
        z1: Vec::with_capacity(recorded),
        count_in_w: Vec::with_capacity(recorded),
        conditional: Vec::new(),
        snapshots: Vec::new(),
        final_state: state.clone(),
    };
    let mut window_acc = 0usize;
    for sweep in 0..opts.sweeps {
        window_acc += mcmc_sweep(&mut state, config, &mut stats, &mut rng);
        if sweep < burn_in {
            if (sweep + 1) % ADAPT_WINDOW == 0 {
                let rate = window_acc as f64 / (ADAPT_WINDOW * n) as f64;
                stats.proposal_scale *= (rate - TARGET_ACCEPTANCE).exp();
                let cap = config.grid.domain.diameter().max(1e-6);
                stats.proposal_scale = stats.proposal_scale.clamp(1e-9 * cap, cap);
                window_acc = 0;
            }
            if sweep + 1 == burn_in {
                stats.proposed = 0;
                stats.accepted = 0;
            }
            continue;
        }
        let t = sweep - burn_in;
        out.z1.push(state.points[0]);
        let inside = state
            .points
            .iter()
            .filter(|z| config.window.contains(**z))
            .count();
        out.count_in_w.push(inside as u32);
        if opts.snapshot_every > 0 && t % opts.snapshot_every == 0 {
            out.snapshots.push((sweep, state.points.clone()));
        }
        if let Some(rule) = &rule {
            if t % opts.conditional_every == 0 {
                // rotate the distinguished coordinate; exchangeability keeps the target
                let k = (t / opts.conditional_every) % n;
                out.conditional.push(rule.probability(&state.points, k, config));
            }
        }
    }
    stats.sweeps = opts.sweeps;
    out.stats = stats;
    out.final_state = state;
    Ok(out)
}

/// Independent chains with seeds `seeds[i]`, run in order.
pub fn run_chains(config: &EnsembleConfig, opts: &ChainOptions, seeds: &[u64]) -> Result<Vec<ChainOutput>> {
    seeds
        .iter()
        .enumerate()
        .map(|(i, &seed)| {
            let o = ChainOptions { seed, ..opts.clone() };
            run_chain(config, &o, i)
        })
        .collect()
}

/// Snapshot log with columns `chain_id, sweep, coordinate_index, x, y`.
pub fn write_chain_csv(path: &Path, chains: &[ChainOutput]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["chain_id", "sweep", "coordinate_index", "x", "y"])?;
    for c in chains {
        for (sweep, pts) in &c.snapshots {
            for (k, z) in pts.iter().enumerate() {
                w.write_record([
                    c.chain_id.to_string(),
                    sweep.to_string(),
                    k.to_string(),
                    format!("{:.17e}", z.re),
                    format!("{:.17e}", z.im),
                ])?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

/// Chain statistics as JSON lines, one object per chain.
pub fn write_chain_stats(path: &Path, chains: &[ChainOutput]) -> Result<()> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    for c in chains {
        serde_json::to_writer(&mut f, &c.stats)?;
        writeln!(f)?;
    }
    Ok(())
}
