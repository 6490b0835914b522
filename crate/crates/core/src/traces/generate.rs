//! Seeded benign and malicious trace generation.
//!
//! A benign trace concatenates `M` sessions drawn from a seed pool. A
//! malicious trace starts from a benign one and overwrites `a_s` distinct
//! session positions with `a_s` distinct attack variants, where
//! `1 <= a_s < min(M, K)` (or exactly 1 when that range is empty).

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::catalog::VariantCatalog;
use super::model::{Session, TraceSkeleton};
use super::TraceError;
use crate::pltl::TraceLabel;

/// How benign sessions are drawn from the pool.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SessionSampling {
    #[default]
    WithReplacement,
    /// Needs at least `M` pool sessions.
    WithoutReplacement,
}

/// Distribution of the number of injected attack sessions.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AttackCount {
    /// Uniform over the allowed range.
    #[default]
    Uniform,
    /// Always one.
    Single,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GenConfig {
    /// Sessions per trace (`M`).
    pub sessions_per_trace: usize,
    /// Number of traces (`n`).
    pub count: usize,
    pub seed: u64,
    #[serde(default)]
    pub sampling: SessionSampling,
    #[serde(default)]
    pub attack_count: AttackCount,
}

impl GenConfig {
    pub fn new(sessions_per_trace: usize, count: usize, seed: u64) -> Self {
        GenConfig {
            sessions_per_trace,
            count,
            seed,
            sampling: SessionSampling::default(),
            attack_count: AttackCount::default(),
        }
    }

    fn check(&self, pool: &[Session]) -> Result<(), TraceError> {
        if pool.is_empty() {
            return Err(TraceError::EmptyPool);
        }
        if self.sessions_per_trace == 0 {
            return Err(TraceError::InvalidConfig("sessions per trace must be at least 1".into()));
        }
        if self.sampling == SessionSampling::WithoutReplacement && self.sessions_per_trace > pool.len() {
            return Err(TraceError::InvalidConfig(format!(
                "cannot draw {} distinct sessions from a pool of {}",
                self.sessions_per_trace,
                pool.len()
            )));
        }
        Ok(())
    }
}

fn benign_skeleton(pool: &[Session], cfg: &GenConfig, rng: &mut ChaCha8Rng) -> TraceSkeleton {
    let m = cfg.sessions_per_trace;
    let sessions = match cfg.sampling {
        SessionSampling::WithReplacement => (0..m)
            .map(|_| pool[rng.gen_range(0..pool.len())].clone())
            .collect(),
        SessionSampling::WithoutReplacement => index::sample(rng, pool.len(), m)
            .into_iter()
            .map(|i| pool[i].clone())
            .collect(),
    };
    TraceSkeleton::new(sessions).with_label(TraceLabel::Benign)
}

pub fn gen_benign(pool: &[Session], cfg: &GenConfig) -> Result<Vec<TraceSkeleton>, TraceError> {
    cfg.check(pool)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    Ok((0..cfg.count).map(|_| benign_skeleton(pool, cfg, &mut rng)).collect())
}

/// The allowed range for `a_s` given `M` sessions and `K` variants.
pub fn attack_session_bounds(m: usize, k: usize) -> (usize, usize) {
    let bound = m.min(k);
    if bound <= 1 {
        (1, 1)
    } else {
        (1, bound - 1)
    }
}

pub fn gen_malicious(
    pool: &[Session],
    catalog: &VariantCatalog,
    attack: &str,
    cfg: &GenConfig,
) -> Result<Vec<TraceSkeleton>, TraceError> {
    cfg.check(pool)?;
    let variants = &catalog.attack(attack)?.variants;
    if variants.is_empty() {
        return Err(TraceError::MalformedSkeleton {
            attack: attack.to_string(),
            message: "no variants".into(),
        });
    }
    let m = cfg.sessions_per_trace;
    let k = variants.len();
    let (lo, hi) = attack_session_bounds(m, k);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut out = Vec::with_capacity(cfg.count);
    for _ in 0..cfg.count {
        let mut t = benign_skeleton(pool, cfg, &mut rng);
        let a_s = match cfg.attack_count {
            AttackCount::Uniform if hi > lo => rng.gen_range(lo..=hi),
            _ => 1,
        };
        let chosen = index::sample(&mut rng, k, a_s);
        let positions = index::sample(&mut rng, m, a_s);
        for (v, pos) in chosen.into_iter().zip(positions.iter()) {
            t.sessions[pos] = variants[v].clone();
        }
        let mut idx = positions.into_vec();
        idx.sort_unstable();
        t.attack_sessions = idx;
        t.label = Some(TraceLabel::Attack(attack.to_string()));
        out.push(t);
    }
    Ok(out)
}
