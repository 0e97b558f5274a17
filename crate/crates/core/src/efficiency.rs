//! Runtime and memory accounting: per-case wall time against a cap, and the
//! left-Riemann AUC of a sampled memory–time curve.
//!
//! Memory sampling sits behind [`MemorySampler`] so desk builds can use the
//! process-RSS or a synthetic sampler; nothing here talks to GPU drivers.

use std::path::Path;
use std::sync::atomic::{AtomicBool, Ordering};
use std::time::{Duration, Instant};

use crate::error::{Error, Result};

/// A sampled memory curve: (t seconds, m GB) with strictly increasing t.
#[derive(Clone, Debug, PartialEq)]
pub struct MemoryTrace {
    samples: Vec<(f64, f64)>,
}

impl MemoryTrace {
    pub fn new(samples: Vec<(f64, f64)>) -> Result<Self> {
        if samples
            .iter()
            .any(|&(t, m)| !t.is_finite() || !m.is_finite() || m < 0.0)
        {
            return Err(Error::InvalidTrace("non-finite or negative sample".into()));
        }
        for w in samples.windows(2) {
            if w[1].0 <= w[0].0 {
                return Err(Error::InvalidTrace(format!(
                    "timestamps must strictly increase, got {} then {}",
                    w[0].0, w[1].0
                )));
            }
        }
        Ok(MemoryTrace { samples })
    }

    pub fn samples(&self) -> &[(f64, f64)] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Area under the memory–time curve as the left Riemann sum
    /// `Σᵢ m(tᵢ)·(tᵢ₊₁ − tᵢ)` over the first n−1 samples, in GB·s.
    /// The final sample only closes the last interval.
    pub fn auc(&self) -> Result<f64> {
        if self.samples.len() < 2 {
            return Err(Error::TooFewSamples(format!(
                "AUC needs at least 2 samples, got {}",
                self.samples.len()
            )));
        }
        Ok(self
            .samples
            .windows(2)
            .map(|w| w[0].1 * (w[1].0 - w[0].0))
            .sum())
    }
}

/// Runtime cap and sampling cadence.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EfficiencyConfig {
    /// Per-case wall-time cap in seconds.
    pub t_max: f64,
    /// Memory sampling interval in seconds.
    pub sample_interval: f64,
}

impl Default for EfficiencyConfig {
    fn default() -> Self {
        EfficiencyConfig {
            t_max: 60.0,
            sample_interval: 0.1,
        }
    }
}

impl EfficiencyConfig {
    pub fn new(t_max: f64, sample_interval: f64) -> Result<Self> {
        if [t_max, sample_interval]
            .iter()
            .any(|v| v.is_nan() || *v <= 0.0)
        {
            return Err(Error::InvalidSpec(
                "t_max and sample_interval must be positive".into(),
            ));
        }
        Ok(EfficiencyConfig {
            t_max,
            sample_interval,
        })
    }
}

/// Mean runtime and the indices of cases over the cap.
#[derive(Clone, Debug, PartialEq)]
pub struct RuntimeCheck {
    pub mean_runtime: f64,
    pub violations: Vec<usize>,
}

/// Mean per-case runtime plus every index whose runtime exceeds `t_max`.
/// Exactly hitting the cap is compliant.
pub fn check_runtime(times: &[f64], cfg: &EfficiencyConfig) -> Result<RuntimeCheck> {
    if times.is_empty() {
        return Err(Error::EmptyInput("no runtimes to check".into()));
    }
    let mean_runtime = times.iter().sum::<f64>() / times.len() as f64;
    let violations = times
        .iter()
        .enumerate()
        .filter(|(_, &t)| t > cfg.t_max)
        .map(|(i, _)| i)
        .collect();
    Ok(RuntimeCheck {
        mean_runtime,
        violations,
    })
}

/// Source of memory readings in GB.
pub trait MemorySampler {
    fn sample_gb(&mut self) -> f64;
}

/// Cycles through a fixed sequence; for tests and deterministic demos.
#[derive(Clone, Debug)]
pub struct SyntheticSampler {
    values: Vec<f64>,
    at: usize,
}

impl SyntheticSampler {
    pub fn new(values: Vec<f64>) -> Self {
        assert!(!values.is_empty());
        SyntheticSampler { values, at: 0 }
    }
}

impl MemorySampler for SyntheticSampler {
    fn sample_gb(&mut self) -> f64 {
        let v = self.values[self.at % self.values.len()];
        self.at += 1;
        v
    }
}

/// Resident-set size of the current process (VmRSS), in GB. Reads 0.0 where
/// /proc is unavailable.
#[derive(Clone, Copy, Debug, Default)]
pub struct ProcessRssSampler;

impl MemorySampler for ProcessRssSampler {
    fn sample_gb(&mut self) -> f64 {
        let Ok(status) = std::fs::read_to_string("/proc/self/status") else {
            return 0.0;
        };
        for line in status.lines() {
            if let Some(rest) = line.strip_prefix("VmRSS:") {
                if let Some(kb) = rest
                    .split_whitespace()
                    .next()
                    .and_then(|v| v.parse::<f64>().ok())
                {
                    return kb / (1024.0 * 1024.0);
                }
            }
        }
        0.0
    }
}

/// Run `f` while sampling memory every `interval_s` seconds on a side
/// thread. Always yields at least two samples (one at start, one at end).
pub fn trace_while<T>(
    mut sampler: impl MemorySampler + Send,
    interval_s: f64,
    f: impl FnOnce() -> T,
) -> (T, MemoryTrace) {
    let stop = AtomicBool::new(false);
    let start = Instant::now();
    let (out, raw) = std::thread::scope(|scope| {
        let handle = scope.spawn(|| {
            let mut samples = vec![(0.0, sampler.sample_gb().max(0.0))];
            while !stop.load(Ordering::Relaxed) {
                std::thread::sleep(Duration::from_secs_f64(interval_s));
                samples.push((start.elapsed().as_secs_f64(), sampler.sample_gb().max(0.0)));
            }
            samples.push((start.elapsed().as_secs_f64(), sampler.sample_gb().max(0.0)));
            samples
        });
        let out = f();
        stop.store(true, Ordering::Relaxed);
        (out, handle.join().expect("sampler thread panicked"))
    });
    // clock resolution can repeat a timestamp; nudge to keep t strictly increasing
    let mut samples = Vec::with_capacity(raw.len());
    let mut prev = f64::NEG_INFINITY;
    for (t, m) in raw {
        let t = if t <= prev { prev + 1e-9 } else { t };
        prev = t;
        samples.push((t, m));
    }
    (
        out,
        MemoryTrace::new(samples).expect("monotone by construction"),
    )
}

/// Render a trace as `t_seconds,m_gb` CSV (with a header row).
pub fn format_trace(trace: &MemoryTrace) -> String {
    let mut s = String::from("t_seconds,m_gb\n");
    for &(t, m) in trace.samples() {
        s.push_str(&format!("{t},{m}\n"));
    }
    s
}

/// Parse trace CSV; the header row is optional.
pub fn parse_trace(text: &str) -> Result<MemoryTrace> {
    let mut samples = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || (i == 0 && line == "t_seconds,m_gb") {
            continue;
        }
        let (t, m) = line
            .split_once(',')
            .ok_or_else(|| Error::Parse(format!("trace line without comma: {line:?}")))?;
        let t: f64 = t
            .trim()
            .parse()
            .map_err(|_| Error::Parse(format!("bad trace time {t:?}")))?;
        let m: f64 = m
            .trim()
            .parse()
            .map_err(|_| Error::Parse(format!("bad trace memory {m:?}")))?;
        samples.push((t, m));
    }
    MemoryTrace::new(samples)
}

pub fn read_trace(path: impl AsRef<Path>) -> Result<MemoryTrace> {
    parse_trace(&std::fs::read_to_string(path.as_ref())?)
}

pub fn write_trace(path: impl AsRef<Path>, trace: &MemoryTrace) -> Result<()> {
    std::fs::write(path.as_ref(), format_trace(trace))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn auc_left_sum_cases() {
        let flat = MemoryTrace::new(vec![(0.0, 2.0), (1.0, 2.0), (2.0, 2.0), (3.0, 2.0)]).unwrap();
        assert_eq!(flat.auc().unwrap(), 6.0);

        let spike = MemoryTrace::new(vec![(0.0, 0.0), (1.0, 4.0), (2.0, 0.0)]).unwrap();
        assert_eq!(spike.auc().unwrap(), 4.0);

        let single = MemoryTrace::new(vec![(0.0, 1.0)]).unwrap();
        assert!(matches!(single.auc(), Err(Error::TooFewSamples(_))));
    }

    #[test]
    fn auc_additive_and_linear() {
        let a = MemoryTrace::new(vec![(0.0, 1.0), (1.0, 3.0), (2.0, 2.0)]).unwrap();
        let b = MemoryTrace::new(vec![(2.0, 2.0), (3.5, 1.0), (4.0, 5.0)]).unwrap();
        let joined = MemoryTrace::new(
            a.samples()
                .iter()
                .chain(b.samples().iter().skip(1))
                .copied()
                .collect(),
        )
        .unwrap();
        let sum = a.auc().unwrap() + b.auc().unwrap();
        assert!((joined.auc().unwrap() - sum).abs() < 1e-12);

        let scaled =
            MemoryTrace::new(a.samples().iter().map(|&(t, m)| (t, 3.0 * m)).collect()).unwrap();
        assert!((scaled.auc().unwrap() - 3.0 * a.auc().unwrap()).abs() < 1e-12);
    }

    #[test]
    fn trace_invariants() {
        assert!(matches!(
            MemoryTrace::new(vec![(0.0, 1.0), (0.0, 2.0)]),
            Err(Error::InvalidTrace(_))
        ));
        assert!(matches!(
            MemoryTrace::new(vec![(0.0, -1.0)]),
            Err(Error::InvalidTrace(_))
        ));
    }

    #[test]
    fn runtime_cap_cases() {
        let cfg = EfficiencyConfig::default();
        let r = check_runtime(&[10.0, 20.0, 30.0], &cfg).unwrap();
        assert_eq!(r.mean_runtime, 20.0);
        assert!(r.violations.is_empty());

        let r = check_runtime(&[61.0], &cfg).unwrap();
        assert_eq!(r.violations, vec![0]);

        // the boundary is compliant
        let r = check_runtime(&[60.0], &cfg).unwrap();
        assert!(r.violations.is_empty());

        assert!(matches!(
            check_runtime(&[], &cfg),
            Err(Error::EmptyInput(_))
        ));

        let times = [0.25, 1.5, 3.125, 9.0];
        let r = check_runtime(&times, &cfg).unwrap();
        let oracle = times.iter().sum::<f64>() / times.len() as f64;
        assert!((r.mean_runtime - oracle).abs() < 1e-12);
    }

    #[test]
    fn config_validation() {
        assert!(EfficiencyConfig::new(60.0, 0.1).is_ok());
        assert!(matches!(
            EfficiencyConfig::new(0.0, 0.1),
            Err(Error::InvalidSpec(_))
        ));
    }

    #[test]
    fn trace_csv_round_trip() {
        let t = MemoryTrace::new(vec![(0.0, 0.5), (0.125, 1.75), (0.25, 0.5)]).unwrap();
        let text = format_trace(&t);
        assert!(text.starts_with("t_seconds,m_gb\n"));
        let back = parse_trace(&text).unwrap();
        assert_eq!(back, t);
        // headerless form also parses
        let headerless: String = text.lines().skip(1).map(|l| format!("{l}\n")).collect();
        assert_eq!(parse_trace(&headerless).unwrap(), t);
    }

    #[test]
    fn trace_while_collects_samples() {
        let sampler = SyntheticSampler::new(vec![1.0, 2.0, 3.0]);
        let (out, trace) = trace_while(sampler, 0.001, || {
            std::thread::sleep(Duration::from_millis(10));
            42
        });
        assert_eq!(out, 42);
        assert!(trace.len() >= 2);
        assert!(trace.auc().unwrap() >= 0.0);
    }
}
