//! CRC-augmented polar code.

use crate::crc::{CrcPoly, CrcSpec};
use crate::error::{Error, Result};
use crate::gf2::BitMatrix;
use crate::polar::{polar_transform, select_info_set, PolarParams};

/// Default design Eb/N0 (dB) for Gaussian-approximation construction.
pub const DEFAULT_DESIGN_SNR_DB: f64 = 2.5;

/// Polar code whose `K = m + r` information bits carry a systematic CRC
/// codeword. The CRC word fills the information set in ascending index order.
#[derive(Clone, Debug)]
pub struct CodeSpec {
    polar: PolarParams,
    crc: CrcSpec,
    g_aug: BitMatrix,
}

impl CodeSpec {
    pub fn new(polar: PolarParams, poly: CrcPoly) -> Result<Self> {
        let r = poly.degree();
        let k = polar.k();
        if k <= r {
            return Err(Error::InvalidParameter(format!(
                "information set size {k} leaves no room for a message with {r} CRC bits"
            )));
        }
        let crc = CrcSpec::new(poly, k - r)?;
        let g_aug = crc.generator().multiply(&polar.generator()?)?;
        Ok(Self { polar, crc, g_aug })
    }

    /// Code of length `2^n` carrying `m` message bits, information set from
    /// Gaussian-approximation construction at `design_snr_db`.
    pub fn constructed(n: usize, m: usize, poly: CrcPoly, design_snr_db: f64) -> Result<Self> {
        let k = m + poly.degree();
        let polar = select_info_set(n, k, design_snr_db)?;
        Self::new(polar, poly)
    }

    /// Rate-1/2 code with the g6 CRC.
    pub fn half_rate(n: usize) -> Result<Self> {
        let size = 1usize << n;
        Self::constructed(n, size / 2, CrcPoly::g6(), DEFAULT_DESIGN_SNR_DB)
    }

    pub fn polar(&self) -> &PolarParams {
        &self.polar
    }

    pub fn crc(&self) -> &CrcSpec {
        &self.crc
    }

    /// `G_crc * G_N(A)`, `m x N`.
    pub fn g_aug(&self) -> &BitMatrix {
        &self.g_aug
    }

    pub fn n(&self) -> usize {
        self.polar.n()
    }

    pub fn block_len(&self) -> usize {
        self.polar.block_len()
    }

    /// Message length (the code dimension).
    pub fn m(&self) -> usize {
        self.crc.m()
    }

    pub fn k(&self) -> usize {
        self.polar.k()
    }

    /// Overall rate `m / N`.
    pub fn rate(&self) -> f64 {
        self.m() as f64 / self.block_len() as f64
    }

    /// Full `u` vector (frozen bits zero) for a message.
    pub fn message_to_u(&self, msg: &[u8]) -> Result<Vec<u8>> {
        let info = self.crc.encode(msg)?;
        self.polar.embed(&info)
    }

    pub fn encode(&self, msg: &[u8]) -> Result<Vec<u8>> {
        let u = self.message_to_u(msg)?;
        self.polar.encode(&u)
    }

    /// Recovers the message, or `None` if `x` is not a codeword.
    pub fn decode_codeword(&self, x: &[u8]) -> Option<Vec<u8>> {
        if x.len() != self.block_len() {
            return None;
        }
        let mut u = x.to_vec();
        polar_transform(&mut u);
        if (0..u.len()).any(|i| self.polar.is_frozen(i) && u[i] != 0) {
            return None;
        }
        let info = self.polar.extract(&u);
        if !self.crc.syndrome_is_zero(&info) {
            return None;
        }
        Some(info[..self.m()].to_vec())
    }

    /// Membership in the row space of `G_aug`.
    pub fn is_codeword(&self, x: &[u8]) -> bool {
        self.decode_codeword(x).is_some()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gf2::encode_row;

    #[test]
    fn small_augmented_generator_lies_in_polar_code() {
        // N=8, frozen {1,2,3} (1-based), m=2 message bits, 3-bit CRC.
        let polar = PolarParams::new(3, vec![3, 4, 5, 6, 7]).unwrap();
        let code = CodeSpec::new(polar.clone(), "1011".parse().unwrap()).unwrap();
        assert_eq!((code.g_aug().rows(), code.g_aug().cols()), (2, 8));
        let g_a = polar.generator().unwrap();
        // Every row of G_aug must be reachable as v * G_N(A) for some v.
        let reachable: Vec<Vec<u8>> = (0..32u32)
            .map(|v| {
                let bits: Vec<u8> = (0..5).map(|i| ((v >> i) & 1) as u8).collect();
                encode_row(&bits, &g_a).unwrap()
            })
            .collect();
        for r in 0..2 {
            assert!(reachable.contains(&code.g_aug().row(r)));
        }
        assert_eq!(code.g_aug().rank(), 2);
    }

    #[test]
    fn encode_agrees_with_generator() {
        let code = CodeSpec::half_rate(5).unwrap();
        assert_eq!(code.m(), 16);
        assert_eq!(code.k(), 22);
        for v in [0u32, 1, 0xBEEF, 0xFFFF] {
            let msg: Vec<u8> = (0..16).map(|i| ((v >> i) & 1) as u8).collect();
            let x = code.encode(&msg).unwrap();
            assert_eq!(x, encode_row(&msg, code.g_aug()).unwrap());
            assert!(code.is_codeword(&x));
            assert_eq!(code.decode_codeword(&x).unwrap(), msg);
            let mut bad = x.clone();
            bad[3] ^= 1;
            assert!(!code.is_codeword(&bad));
        }
    }

    #[test]
    fn rejects_tiny_information_set() {
        let polar = PolarParams::new(3, vec![5, 6, 7]).unwrap();
        assert!(CodeSpec::new(polar, CrcPoly::g6()).is_err());
    }

    #[test]
    fn paper_sized_codes() {
        let c256 = CodeSpec::half_rate(8).unwrap();
        assert_eq!((c256.m(), c256.k(), c256.block_len()), (128, 134, 256));
        assert_eq!(c256.rate(), 0.5);
        assert_eq!(c256.g_aug().rank(), 128);
    }
}
