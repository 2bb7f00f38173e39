//! Brute-force references for tiny codes: exhaustive ML, literal OSD(q) and
//! a rank-based MRIB search.

use crate::channel::{hard_decision, squared_distance};
use crate::error::{Error, Result};
use crate::gf2::{encode_row, systematize_by_reliability, BitMatrix};

/// Largest dimension the oracles will enumerate.
pub const MAX_TINY_K: usize = 12;
pub const MAX_TINY_N: usize = 24;

/// A code small enough to list every codeword.
#[derive(Clone, Debug)]
pub struct TinyCode {
    generator: BitMatrix,
}

impl TinyCode {
    pub fn new(generator: BitMatrix) -> Result<Self> {
        if generator.rows() > MAX_TINY_K || generator.cols() > MAX_TINY_N {
            return Err(Error::InvalidParameter(format!(
                "tiny code limited to k <= {MAX_TINY_K}, N <= {MAX_TINY_N} (got {}x{})",
                generator.rows(),
                generator.cols()
            )));
        }
        Ok(Self { generator })
    }

    pub fn generator(&self) -> &BitMatrix {
        &self.generator
    }

    pub fn k(&self) -> usize {
        self.generator.rows()
    }

    pub fn block_len(&self) -> usize {
        self.generator.cols()
    }

    /// All `2^k` codewords, message `v` at index `sum v_i 2^i`.
    pub fn codewords(&self) -> Vec<Vec<u8>> {
        let k = self.k();
        (0u32..1 << k)
            .map(|msg| {
                let v: Vec<u8> = (0..k).map(|i| ((msg >> i) & 1) as u8).collect();
                encode_row(&v, &self.generator).expect("length k")
            })
            .collect()
    }
}

/// Minimum-distance codeword; ties go to the lexicographically smallest.
pub fn ml_decode(y: &[f64], code: &TinyCode) -> Result<Vec<u8>> {
    if y.len() != code.block_len() {
        return Err(Error::Dimension(format!(
            "observation length {} != N={}",
            y.len(),
            code.block_len()
        )));
    }
    let mut best: Option<(f64, Vec<u8>)> = None;
    for c in code.codewords() {
        let d = squared_distance(y, &c);
        let better = match &best {
            None => true,
            Some((bd, bc)) => d < *bd || (d == *bd && c < *bc),
        };
        if better {
            best = Some((d, c));
        }
    }
    Ok(best.expect("at least one codeword").1)
}

/// Result of [`exhaustive_osd`].
#[derive(Clone, Debug)]
pub struct ExhaustiveOsd {
    /// Original coordinates.
    pub codeword: Vec<u8>,
    pub distance: f64,
    /// Number of error patterns re-encoded.
    pub patterns: usize,
}

/// All index subsets of `0..k` of size `w`, lexicographic.
fn subsets(k: usize, w: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, k: usize, w: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == w {
            out.push(cur.clone());
            return;
        }
        for i in start..k {
            cur.push(i);
            rec(i + 1, k, w, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(0, k, w, &mut Vec::new(), &mut out);
    out
}

/// OSD(q) by re-encoding every MRIB error pattern of weight at most `q`.
pub fn exhaustive_osd(y: &[f64], llr: &[f64], code: &TinyCode, q: usize) -> Result<ExhaustiveOsd> {
    let k = code.k();
    if q > k {
        return Err(Error::InvalidParameter(format!("order {q} exceeds k={k}")));
    }
    if y.len() != code.block_len() {
        return Err(Error::Dimension("observation length != N".into()));
    }
    let sys = systematize_by_reliability(code.generator(), llr)?;
    let y_perm = sys.permute(y);
    let base = hard_decision(&sys.permute(llr)[..k]);
    let mut best: Option<(f64, Vec<u8>)> = None;
    let mut patterns = 0;
    for w in 0..=q {
        for e in subsets(k, w) {
            let mut v = base.clone();
            for &i in &e {
                v[i] ^= 1;
            }
            let c = encode_row(&v, &sys.g_tilde)?;
            patterns += 1;
            let d = squared_distance(&y_perm, &c);
            if best.as_ref().is_none_or(|(bd, _)| d < *bd) {
                best = Some((d, c));
            }
        }
    }
    let (_, c) = best.expect("pattern 0 always present");
    let codeword = sys.unpermute(&c);
    let distance = squared_distance(y, &codeword);
    Ok(ExhaustiveOsd {
        codeword,
        distance,
        patterns,
    })
}

/// MRIB positions by scanning columns in decreasing `|llr|` and keeping
/// each one that raises the rank of the selected set.
pub fn mrib_by_rank(g: &BitMatrix, llr: &[f64]) -> Result<Vec<usize>> {
    let n = g.cols();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| llr[b].abs().total_cmp(&llr[a].abs()));
    let gt = g.transpose();
    let mut chosen: Vec<usize> = Vec::new();
    for &c in &order {
        if chosen.len() == g.rows() {
            break;
        }
        let mut trial = chosen.clone();
        trial.push(c);
        if gt.select_rows(&trial)?.rank() == trial.len() {
            chosen = trial;
        }
    }
    Ok(chosen)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    fn random_code(rng: &mut impl Rng, k: usize, n: usize) -> TinyCode {
        loop {
            let rows: Vec<Vec<u8>> = (0..k)
                .map(|_| (0..n).map(|_| rng.gen_range(0..2u8)).collect())
                .collect();
            let g = BitMatrix::from_rows(&rows).unwrap();
            if g.rank() == k {
                return TinyCode::new(g).unwrap();
            }
        }
    }

    #[test]
    fn repetition_code_sign_of_sum() {
        let code = TinyCode::new(BitMatrix::from_rows(&[[1u8, 1, 1]]).unwrap()).unwrap();
        assert_eq!(ml_decode(&[0.1, 0.2, -0.5], &code).unwrap(), vec![1, 1, 1]);
        assert_eq!(ml_decode(&[0.1, 0.2, -0.2], &code).unwrap(), vec![0, 0, 0]);
    }

    #[test]
    fn noiseless_ml_returns_codeword() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        let code = random_code(&mut rng, 4, 9);
        for c in code.codewords() {
            assert_eq!(ml_decode(&crate::channel::bpsk(&c), &code).unwrap(), c);
        }
    }

    #[test]
    fn pattern_counts_and_monotone_distance() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(2);
        for _ in 0..50 {
            let k = rng.gen_range(2..=7);
            let n = rng.gen_range(k + 1..=14);
            let code = random_code(&mut rng, k, n);
            let y: Vec<f64> = (0..n).map(|_| rng.gen_range(-2.0..2.0)).collect();
            let mut prev = f64::INFINITY;
            for q in 0..=k {
                let out = exhaustive_osd(&y, &y, &code, q).unwrap();
                let expected: usize = (0..=q).map(|i| subsets(k, i).len()).sum();
                let binom: usize = (0..=q)
                    .map(|i| (0..i).fold(1usize, |acc, t| acc * (k - t) / (t + 1)))
                    .sum();
                assert_eq!(out.patterns, expected);
                assert_eq!(out.patterns, binom);
                assert!(out.distance <= prev + 1e-12);
                prev = out.distance;
            }
            let ml = ml_decode(&y, &code).unwrap();
            assert!((prev - squared_distance(&y, &ml)).abs() < 1e-12);
        }
    }

    #[test]
    fn order0_is_reencoded_hard_decision() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let code = random_code(&mut rng, 3, 7);
        let y: Vec<f64> = (0..7).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let out = exhaustive_osd(&y, &y, &code, 0).unwrap();
        let decoded = crate::osd::decode_osd(code.generator(), &y, &y, 0, None).unwrap();
        assert_eq!(out.codeword, decoded);
        assert_eq!(out.patterns, 1);
    }

    #[test]
    fn mrib_matches_elimination() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(4);
        for _ in 0..200 {
            let k = rng.gen_range(1..=8);
            let n = rng.gen_range(k..=16);
            let code = random_code(&mut rng, k, n);
            let llr: Vec<f64> = (0..n).map(|_| rng.gen_range(-3.0..3.0)).collect();
            let sys = systematize_by_reliability(code.generator(), &llr).unwrap();
            assert_eq!(mrib_by_rank(code.generator(), &llr).unwrap(), sys.mrib);
        }
    }

    #[test]
    fn size_limits() {
        let g = BitMatrix::zeros(13, 20).unwrap();
        assert!(TinyCode::new(g).is_err());
        let code = TinyCode::new(BitMatrix::identity(3).unwrap()).unwrap();
        assert!(exhaustive_osd(&[0.0; 3], &[0.0; 3], &code, 4).is_err());
    }
}
