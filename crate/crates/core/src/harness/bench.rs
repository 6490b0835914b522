//! Replay throughput.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::engine::Engine;
use super::HarnessError;
use crate::automata::RunMode;
use crate::traces::TraceSkeleton;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Throughput {
    /// Events per run.
    pub messages: u64,
    pub runs: usize,
    /// Messages per second over the runs.
    pub mean: f64,
    pub sd: f64,
    /// Hits in one run, so the work cannot be optimized away.
    pub hits: u64,
}

/// Times `repeat` replays of `traces`. Events are interned before the
/// clock starts; each trace gets a fresh stream.
pub fn bench_throughput(
    engine: &mut Engine,
    traces: &[TraceSkeleton],
    repeat: usize,
    mode: RunMode,
) -> Result<Throughput, HarnessError> {
    if repeat == 0 {
        return Err(HarnessError::Invalid("repeat must be at least 1".into()));
    }
    let streams: Vec<Vec<u32>> = traces
        .iter()
        .map(|t| engine.intern_trace(t))
        .collect::<Result<_, _>>()?;
    let messages: u64 = streams.iter().map(|s| s.len() as u64).sum();
    let engine = &*engine;
    let mut rates = Vec::with_capacity(repeat);
    let mut hits = 0;
    for _ in 0..repeat {
        let mut run_hits = 0u64;
        let start = Instant::now();
        for ids in &streams {
            let mut m = engine.stream(mode);
            for &id in ids {
                m.step_with(engine, id, |_, _| run_hits += 1);
            }
        }
        let secs = start.elapsed().as_secs_f64().max(1e-9);
        rates.push(messages as f64 / secs);
        hits = std::hint::black_box(run_hits);
    }
    let mean = rates.iter().sum::<f64>() / rates.len() as f64;
    let sd = if rates.len() > 1 {
        (rates.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / (rates.len() - 1) as f64).sqrt()
    } else {
        0.0
    };
    Ok(Throughput {
        messages,
        runs: repeat,
        mean,
        sd,
        hits,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::SignatureDb;
    use crate::traces::{gen_benign, GenConfig, Layer, VariantCatalog};

    #[test]
    fn empty_db_is_fast() {
        let cat = VariantCatalog::builtin();
        let ts = gen_benign(cat.benign_pool(Layer::Nas), &GenConfig::new(10, 200, 1)).unwrap();
        let mut e = Engine::new(SignatureDb::default());
        let t = bench_throughput(&mut e, &ts, 3, RunMode::ReportAll).unwrap();
        assert!(t.messages > 0);
        assert_eq!(t.hits, 0);
        assert!(t.mean > 1e6, "{}", t.mean);
        assert!(bench_throughput(&mut e, &ts, 0, RunMode::ReportAll).is_err());
    }
}
