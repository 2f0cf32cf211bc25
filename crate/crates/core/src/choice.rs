//! Sources of randomness for the estimators.
//!
//! Every estimator consumes randomness only through [`ChoiceSource`]: uniform
//! index picks and draws from known laws. A seeded [`RngSource`] or
//! [`SplitSource`] runs the estimator for real; an [`Enumerator`] replays it
//! along every possible choice path, which yields the exact distribution of
//! its output on finite models.
//!
//! Streams are derived from a master seed by index: stream `i` of seed `s` is
//! ChaCha8 seeded with `s` and switched to stream `i`. Index assignments:
//! 0 resampling picks, 1 known-law draws, 2 synthetic pool generation,
//! `MC_STREAM_BASE + c` Monte Carlo chunk `c`.

use num_rational::BigRational;
use num_traits::{One, Zero};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::model::{exact, DistributionSpec};

pub const RESAMPLE_STREAM: u64 = 0;
pub const LAW_STREAM: u64 = 1;
pub const DATA_STREAM: u64 = 2;
pub const MC_STREAM_BASE: u64 = 16;

pub fn stream(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

pub trait ChoiceSource {
    /// Uniform pick from `0..n`.
    fn uniform_index(&mut self, n: usize) -> usize;
    /// One draw from a known law.
    fn draw(&mut self, law: &DistributionSpec) -> f64;
}

/// Single-stream source.
pub struct RngSource<R>(pub R);

impl<R: Rng> ChoiceSource for RngSource<R> {
    fn uniform_index(&mut self, n: usize) -> usize {
        self.0.gen_range(0..n)
    }
    fn draw(&mut self, law: &DistributionSpec) -> f64 {
        law.sample(&mut self.0)
    }
}

/// Index picks and law draws on separate streams, so adding law draws to a
/// procedure leaves its resampling picks unchanged.
pub struct SplitSource {
    picks: ChaCha8Rng,
    laws: ChaCha8Rng,
}

impl SplitSource {
    pub fn new(seed: u64) -> Self {
        Self {
            picks: stream(seed, RESAMPLE_STREAM),
            laws: stream(seed, LAW_STREAM),
        }
    }
}

impl ChoiceSource for SplitSource {
    fn uniform_index(&mut self, n: usize) -> usize {
        self.picks.gen_range(0..n)
    }
    fn draw(&mut self, law: &DistributionSpec) -> f64 {
        law.sample(&mut self.laws)
    }
}

/// Depth-first replay over all choice paths of a procedure.
pub struct Enumerator {
    script: Vec<usize>,
    radix: Vec<usize>,
    pos: usize,
    prob: BigRational,
    unsupported: Option<String>,
}

impl Enumerator {
    fn new() -> Self {
        Self {
            script: Vec::new(),
            radix: Vec::new(),
            pos: 0,
            prob: BigRational::one(),
            unsupported: None,
        }
    }

    fn next(&mut self, n: usize) -> usize {
        let k = if self.pos < self.script.len() {
            debug_assert_eq!(self.radix[self.pos], n, "choice structure changed on replay");
            self.script[self.pos]
        } else {
            self.script.push(0);
            self.radix.push(n);
            0
        };
        self.pos += 1;
        k
    }

    /// Move to the next path; false when exhausted.
    fn advance(&mut self) -> bool {
        self.script.truncate(self.pos);
        self.radix.truncate(self.pos);
        while let Some(c) = self.script.pop() {
            let r = self.radix.pop().expect("aligned");
            if c + 1 < r {
                self.script.push(c + 1);
                self.radix.push(r);
                return true;
            }
        }
        false
    }
}

impl ChoiceSource for Enumerator {
    fn uniform_index(&mut self, n: usize) -> usize {
        let k = self.next(n);
        self.prob /= BigRational::from_integer((n as i64).into());
        k
    }

    fn draw(&mut self, law: &DistributionSpec) -> f64 {
        match law.finite_support() {
            Some(atoms) => {
                let k = self.next(atoms.len());
                self.prob *= exact(atoms[k].1);
                atoms[k].0
            }
            None => {
                self.unsupported = Some(format!("cannot enumerate draws from {:?}", law.kind()));
                // keep the path structure stable; the run is discarded
                let _ = self.next(1);
                f64::NAN
            }
        }
    }
}

/// Run `procedure` along every choice path, passing each path's probability
/// and output to `sink`. Fails if more than `cap` paths exist or a draw comes
/// from a law without finite support.
pub fn enumerate_paths<T>(
    cap: u64,
    mut procedure: impl FnMut(&mut Enumerator) -> T,
    mut sink: impl FnMut(&BigRational, T),
) -> Result<u64> {
    let mut e = Enumerator::new();
    let mut paths = 0u64;
    loop {
        e.pos = 0;
        e.prob = BigRational::one();
        let out = procedure(&mut e);
        if let Some(msg) = e.unsupported.take() {
            return Err(Error::Unsupported(msg));
        }
        paths += 1;
        if paths > cap {
            return Err(Error::CapExceeded {
                what: "exhaustive enumeration",
                count: paths as u128,
                cap: cap as u128,
                hint: "use the Monte Carlo mode instead",
            });
        }
        if !e.prob.is_zero() {
            sink(&e.prob, out);
        }
        if !e.advance() {
            return Ok(paths);
        }
    }
}

/// Exact mean and variance of a real-valued procedure output.
pub fn exact_mean_variance(
    cap: u64,
    procedure: impl FnMut(&mut Enumerator) -> f64,
) -> Result<(BigRational, BigRational)> {
    let mut m1 = BigRational::zero();
    let mut m2 = BigRational::zero();
    let mut bad = None;
    enumerate_paths(cap, procedure, |p, v| {
        if !v.is_finite() {
            bad = Some(v);
            return;
        }
        let q = exact(v);
        m1 += p * &q;
        m2 += p * &q * &q;
    })?;
    if let Some(v) = bad {
        return Err(Error::Unsupported(format!("procedure produced {v}")));
    }
    let var = &m2 - &m1 * &m1;
    Ok((m1, var))
}
