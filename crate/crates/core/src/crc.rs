//! CRC viewed as a systematic linear block code.
//!
//! Plain polynomial remainder: no reflection, no initial or final XOR. The
//! first message bit is the highest-degree coefficient.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::gf2::BitMatrix;

/// Generator polynomial, coefficients from `x^r` down to `x^0`.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct CrcPoly {
    coeffs: Vec<u8>,
}

impl CrcPoly {
    pub fn new(coeffs: Vec<u8>) -> Result<Self> {
        if coeffs.len() < 2 {
            return Err(Error::InvalidParameter("CRC polynomial needs degree >= 1".into()));
        }
        if coeffs.iter().any(|&c| c > 1) {
            return Err(Error::InvalidParameter("CRC coefficients must be 0 or 1".into()));
        }
        if coeffs[0] != 1 || *coeffs.last().unwrap() != 1 {
            return Err(Error::InvalidParameter(
                "CRC polynomial must have leading and constant coefficients equal to 1".into(),
            ));
        }
        Ok(Self { coeffs })
    }

    /// `g6(x) = x^6 + x^5 + 1`.
    pub fn g6() -> Self {
        Self::new(vec![1, 1, 0, 0, 0, 0, 1]).expect("valid")
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeffs(&self) -> &[u8] {
        &self.coeffs
    }
}

impl FromStr for CrcPoly {
    type Err = Error;

    /// `0x61` (hex, leading coefficient included) or `1100001` (binary).
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let coeffs: Vec<u8> = if let Some(hex) = s.strip_prefix("0x").or_else(|| s.strip_prefix("0X")) {
            let v = u128::from_str_radix(hex, 16)
                .map_err(|_| Error::Parse(format!("bad hex polynomial `{s}`")))?;
            if v == 0 {
                return Err(Error::Parse("zero polynomial".into()));
            }
            let top = 127 - v.leading_zeros() as usize;
            (0..=top).rev().map(|b| ((v >> b) & 1) as u8).collect()
        } else if !s.is_empty() && s.chars().all(|c| c == '0' || c == '1') {
            s.trim_start_matches('0').bytes().map(|b| b - b'0').collect()
        } else {
            return Err(Error::Parse(format!(
                "polynomial `{s}` is neither 0x-prefixed hex nor binary"
            )));
        };
        Self::new(coeffs)
    }
}

impl fmt::Display for CrcPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &c in &self.coeffs {
            write!(f, "{c}")?;
        }
        Ok(())
    }
}

impl fmt::Debug for CrcPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "CrcPoly({self})")
    }
}

/// CRC code appending `r` parity bits to `m`-bit messages.
#[derive(Clone, Debug)]
pub struct CrcSpec {
    poly: CrcPoly,
    m: usize,
    generator: BitMatrix,
    parity_check: BitMatrix,
}

impl CrcSpec {
    pub fn new(poly: CrcPoly, m: usize) -> Result<Self> {
        if m == 0 {
            return Err(Error::InvalidParameter("CRC message length must be >= 1".into()));
        }
        let r = poly.degree();
        let mut generator = BitMatrix::zeros(m, m + r)?;
        let mut parity_check = BitMatrix::zeros(r, m + r)?;
        let mut unit = vec![0u8; m];
        for i in 0..m {
            unit[i] = 1;
            let parity = remainder(&unit, &poly);
            unit[i] = 0;
            generator.set(i, i, true);
            for (j, &p) in parity.iter().enumerate() {
                if p == 1 {
                    generator.set(i, m + j, true);
                    parity_check.set(j, i, true);
                }
            }
        }
        for j in 0..r {
            parity_check.set(j, m + j, true);
        }
        Ok(Self {
            poly,
            m,
            generator,
            parity_check,
        })
    }

    pub fn poly(&self) -> &CrcPoly {
        &self.poly
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn r(&self) -> usize {
        self.poly.degree()
    }

    /// `m + r`.
    pub fn len(&self) -> usize {
        self.m + self.r()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn rate(&self) -> f64 {
        self.m as f64 / self.len() as f64
    }

    /// `[I_m | P]`.
    pub fn generator(&self) -> &BitMatrix {
        &self.generator
    }

    /// `[P^T | I_r]`.
    pub fn parity_check(&self) -> &BitMatrix {
        &self.parity_check
    }

    pub fn encode(&self, msg: &[u8]) -> Result<Vec<u8>> {
        if msg.len() != self.m {
            return Err(Error::Dimension(format!(
                "CRC message length {} != m={}",
                msg.len(),
                self.m
            )));
        }
        let mut out = msg.to_vec();
        out.extend(remainder(msg, &self.poly));
        Ok(out)
    }

    /// True iff `word * H^T = 0`.
    pub fn check(&self, word: &[u8]) -> Result<bool> {
        if word.len() != self.len() {
            return Err(Error::Dimension(format!(
                "CRC word length {} != m+r={}",
                word.len(),
                self.len()
            )));
        }
        Ok(self.syndrome_is_zero(word))
    }

    pub(crate) fn syndrome_is_zero(&self, word: &[u8]) -> bool {
        (0..self.r()).all(|j| {
            let mut acc = 0u8;
            for (i, &b) in word.iter().enumerate() {
                if b != 0 && self.parity_check.get(j, i) {
                    acc ^= 1;
                }
            }
            acc == 0
        })
    }
}

/// `msg(x) * x^r mod poly(x)`, highest degree first.
fn remainder(msg: &[u8], poly: &CrcPoly) -> Vec<u8> {
    let r = poly.degree();
    let mut reg = vec![0u8; r];
    for &bit in msg {
        let feedback = reg[0] ^ (bit & 1);
        reg.rotate_left(1);
        reg[r - 1] = 0;
        if feedback == 1 {
            for (a, &c) in reg.iter_mut().zip(&poly.coeffs()[1..]) {
                *a ^= c;
            }
        }
    }
    reg
}

pub fn crc_encode(msg: &[u8], spec: &CrcSpec) -> Result<Vec<u8>> {
    spec.encode(msg)
}

pub fn crc_check(word: &[u8], spec: &CrcSpec) -> Result<bool> {
    spec.check(word)
}
