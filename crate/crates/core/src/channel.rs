//! BPSK over the binary-input AWGN channel.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

/// Default LLR saturation magnitude for channel and BP messages.
pub const DEFAULT_SAT: f64 = 40.0;

/// Noise level for a given Eb/N0 and overall rate, with unit-energy symbols.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ChannelParams {
    pub ebn0_db: f64,
    pub rate: f64,
    pub sigma2: f64,
}

impl ChannelParams {
    pub fn new(ebn0_db: f64, rate: f64) -> Result<Self> {
        if !(rate > 0.0 && rate <= 1.0) {
            return Err(Error::InvalidParameter(format!("rate {rate} not in (0, 1]")));
        }
        let sigma2 = 1.0 / (2.0 * rate * 10f64.powf(ebn0_db / 10.0));
        if !(sigma2.is_finite() && sigma2 > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "Eb/N0 {ebn0_db} dB gives unusable noise variance {sigma2}"
            )));
        }
        Ok(Self {
            ebn0_db,
            rate,
            sigma2,
        })
    }
}

/// Log-likelihood ratios clipped to `[-sat, sat]`.
#[derive(Clone, Debug, PartialEq)]
pub struct LlrVector {
    values: Vec<f64>,
    sat: f64,
}

impl LlrVector {
    pub fn new(values: Vec<f64>, sat: f64) -> Result<Self> {
        if !(sat > 0.0 && sat.is_finite()) {
            return Err(Error::InvalidParameter(format!("saturation {sat} must be positive")));
        }
        Ok(Self::saturated(values, sat))
    }

    pub(crate) fn saturated(mut values: Vec<f64>, sat: f64) -> Self {
        for v in &mut values {
            *v = v.clamp(-sat, sat);
        }
        Self { values, sat }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn sat(&self) -> f64 {
        self.sat
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn hard_decision(&self) -> Vec<u8> {
        hard_decision(&self.values)
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }
}

/// `l >= 0 -> 0`, else `1`.
pub fn hard_decision(llrs: &[f64]) -> Vec<u8> {
    llrs.iter().map(|&l| (l < 0.0) as u8).collect()
}

/// Bit 0 maps to +1, bit 1 to -1.
pub fn bpsk(x: &[u8]) -> Vec<f64> {
    x.iter().map(|&b| if b == 0 { 1.0 } else { -1.0 }).collect()
}

pub fn awgn<R: Rng + ?Sized>(symbols: &[f64], sigma2: f64, rng: &mut R) -> Result<Vec<f64>> {
    if !(sigma2 > 0.0) {
        return Err(Error::InvalidParameter(format!("noise variance {sigma2} must be > 0")));
    }
    let sd = sigma2.sqrt();
    Ok(symbols
        .iter()
        .map(|&s| {
            let z: f64 = rng.sample(StandardNormal);
            s + sd * z
        })
        .collect())
}

/// `2 y / sigma^2`, saturated.
pub fn channel_llrs(y: &[f64], sigma2: f64, sat: f64) -> Result<LlrVector> {
    if !(sigma2 > 0.0) {
        return Err(Error::InvalidParameter(format!("noise variance {sigma2} must be > 0")));
    }
    LlrVector::new(y.iter().map(|&v| 2.0 * v / sigma2).collect(), sat)
}

/// Squared Euclidean distance between `y` and `BPSK(x)`.
pub fn squared_distance(y: &[f64], x: &[u8]) -> f64 {
    y.iter()
        .zip(x)
        .map(|(&v, &b)| {
            let d = v - if b == 0 { 1.0 } else { -1.0 };
            d * d
        })
        .sum()
}

/// Generator for frame `index` of a run seeded with `seed`.
///
/// Each frame gets its own ChaCha stream, so frames can be produced in any
/// order on any thread.
pub fn frame_rng(seed: u64, index: u64) -> ChaCha12Rng {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}
