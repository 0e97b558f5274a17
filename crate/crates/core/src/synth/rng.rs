//! Deterministic counter-based random number generator.
//!
//! Output `i` is a fixed 64-bit mix of `seed + (i+1)·GOLDEN` — the SplitMix64
//! finalizer with its published constants. Because every draw is a pure
//! function of (seed, counter), fixtures generated from a seed are
//! reproducible across runs and reimplementable in other languages from the
//! constants below.

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;
const MIX_1: u64 = 0xBF58_476D_1CE4_E5B9;
const MIX_2: u64 = 0x94D0_49BB_1331_11EB;

/// Counter-based generator: state is just (seed, draw index).
#[derive(Clone, Debug)]
pub struct CounterRng {
    seed: u64,
    counter: u64,
}

impl CounterRng {
    pub fn new(seed: u64) -> Self {
        CounterRng { seed, counter: 0 }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.counter = self.counter.wrapping_add(1);
        let mut z = self.seed.wrapping_add(self.counter.wrapping_mul(GOLDEN));
        z = (z ^ (z >> 30)).wrapping_mul(MIX_1);
        z = (z ^ (z >> 27)).wrapping_mul(MIX_2);
        z ^ (z >> 31)
    }

    /// Uniform in [0, 1): top 53 bits of the counter output.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform in [lo, hi).
    pub fn range_f64(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.next_f64()
    }

    /// Uniform in [0, n).
    pub fn below(&mut self, n: usize) -> usize {
        debug_assert!(n > 0);
        (self.next_u64() % n as u64) as usize
    }

    /// Approximately standard normal via the Irwin–Hall sum of 12 uniforms.
    /// Keeps generation free of transcendental functions.
    pub fn normal_approx(&mut self) -> f64 {
        let mut s = 0.0;
        for _ in 0..12 {
            s += self.next_f64();
        }
        s - 6.0
    }

    /// Uniform direction on the unit sphere by rejection from the cube and
    /// normalization.
    pub fn unit_vector(&mut self) -> [f64; 3] {
        loop {
            let v = [
                self.range_f64(-1.0, 1.0),
                self.range_f64(-1.0, 1.0),
                self.range_f64(-1.0, 1.0),
            ];
            let n2 = v[0] * v[0] + v[1] * v[1] + v[2] * v[2];
            if n2 > 1e-12 && n2 <= 1.0 {
                let n = n2.sqrt();
                return [v[0] / n, v[1] / n, v[2] / n];
            }
        }
    }

    /// Derive an independent stream, e.g. one per fixture.
    pub fn fork(&self, stream: u64) -> CounterRng {
        let mut z = self.seed ^ stream.wrapping_mul(GOLDEN);
        z = (z ^ (z >> 30)).wrapping_mul(MIX_1);
        z = (z ^ (z >> 27)).wrapping_mul(MIX_2);
        CounterRng::new(z ^ (z >> 31))
    }
}
