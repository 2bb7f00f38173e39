//! Polar transform, code construction and factor-graph layer permutations.
//!
//! Indices are 0-based in this API. Construction files use 1-based indices.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::gf2::BitMatrix;

/// `F^{(x)n}` with `F = [[1,0],[1,1]]`: entry `(i, j)` is one iff the bits of
/// `j` are a subset of the bits of `i`.
pub fn kron_generator(n: usize) -> Result<BitMatrix> {
    if n == 0 {
        return Err(Error::InvalidParameter("polar order n must be >= 1".into()));
    }
    if n > 16 {
        return Err(Error::InvalidParameter(format!("polar order n={n} too large")));
    }
    let size = 1usize << n;
    let mut g = BitMatrix::zeros(size, size)?;
    for i in 0..size {
        for j in 0..size {
            if j & !i == 0 {
                g.set(i, j, true);
            }
        }
    }
    Ok(g)
}

/// In-place butterfly computing `bits * G_N`. Length must be a power of two.
pub fn polar_transform(bits: &mut [u8]) {
    let size = bits.len();
    debug_assert!(size.is_power_of_two());
    let mut h = 1;
    while h < size {
        for block in (0..size).step_by(2 * h) {
            for a in block..block + h {
                bits[a] ^= bits[a + h];
            }
        }
        h <<= 1;
    }
}

/// Information and frozen sets of a length-`2^n` polar code.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PolarParams {
    n: usize,
    info_set: Vec<usize>,
    frozen: Vec<bool>,
}

impl PolarParams {
    pub fn new(n: usize, mut info_set: Vec<usize>) -> Result<Self> {
        if n == 0 || n > 16 {
            return Err(Error::InvalidParameter(format!("polar order n={n} out of range")));
        }
        let size = 1usize << n;
        info_set.sort_unstable();
        info_set.dedup();
        if info_set.is_empty() || info_set.len() > size {
            return Err(Error::InvalidParameter(format!(
                "information set size {} invalid for N={size}",
                info_set.len()
            )));
        }
        if let Some(&bad) = info_set.iter().find(|&&i| i >= size) {
            return Err(Error::InvalidParameter(format!(
                "information index {bad} out of range for N={size}"
            )));
        }
        let mut frozen = vec![true; size];
        for &i in &info_set {
            frozen[i] = false;
        }
        Ok(Self { n, info_set, frozen })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn block_len(&self) -> usize {
        1 << self.n
    }

    pub fn k(&self) -> usize {
        self.info_set.len()
    }

    /// Sorted ascending.
    pub fn info_set(&self) -> &[usize] {
        &self.info_set
    }

    pub fn frozen_set(&self) -> Vec<usize> {
        (0..self.block_len()).filter(|&i| self.frozen[i]).collect()
    }

    pub fn is_frozen(&self, i: usize) -> bool {
        self.frozen[i]
    }

    pub fn frozen_mask(&self) -> &[bool] {
        &self.frozen
    }

    /// Rows of `G_N` indexed by the information set.
    pub fn generator(&self) -> Result<BitMatrix> {
        kron_generator(self.n)?.select_rows(&self.info_set)
    }

    /// Encodes a full-length `u`; frozen positions must be zero.
    pub fn encode(&self, u: &[u8]) -> Result<Vec<u8>> {
        if u.len() != self.block_len() {
            return Err(Error::Dimension(format!(
                "input length {} != N={}",
                u.len(),
                self.block_len()
            )));
        }
        if let Some(index) = (0..u.len()).find(|&i| self.frozen[i] && u[i] != 0) {
            return Err(Error::NonzeroFrozenBit { index });
        }
        let mut x = u.to_vec();
        polar_transform(&mut x);
        Ok(x)
    }

    /// Places `info` (length K) on the information set in ascending order.
    pub fn embed(&self, info: &[u8]) -> Result<Vec<u8>> {
        if info.len() != self.k() {
            return Err(Error::Dimension(format!(
                "information length {} != K={}",
                info.len(),
                self.k()
            )));
        }
        let mut u = vec![0u8; self.block_len()];
        for (&pos, &b) in self.info_set.iter().zip(info) {
            u[pos] = b;
        }
        Ok(u)
    }

    pub fn extract(&self, u: &[u8]) -> Vec<u8> {
        self.info_set.iter().map(|&i| u[i]).collect()
    }

    /// Information set file body: one 1-based index per line.
    pub fn info_set_text(&self) -> String {
        let mut s = String::new();
        for &i in &self.info_set {
            let _ = writeln!(s, "{}", i + 1);
        }
        s
    }

    /// Parses an information set file (1-based indices, any order).
    pub fn from_info_set_text(n: usize, text: &str) -> Result<Self> {
        let indices = parse_one_based(text, 1 << n)?;
        Self::new(n, indices)
    }
}

/// Polar encoding of a full `u` vector under `params` (checks frozen bits).
pub fn polar_encode(u: &[u8], params: &PolarParams) -> Result<Vec<u8>> {
    params.encode(u)
}

fn parse_one_based(text: &str, size: usize) -> Result<Vec<usize>> {
    let mut out = Vec::new();
    for tok in text.split_whitespace() {
        let v: usize = tok
            .parse()
            .map_err(|_| Error::Parse(format!("bad index `{tok}`")))?;
        if v == 0 || v > size {
            return Err(Error::Parse(format!("index {v} outside 1..={size}")));
        }
        out.push(v - 1);
    }
    Ok(out)
}

/// Mean-LLR density-evolution helper of the Gaussian approximation.
fn phi(x: f64) -> f64 {
    if x <= 0.0 {
        1.0
    } else if x < 10.0 {
        (-0.4527 * x.powf(0.86) + 0.0218).exp().min(1.0)
    } else {
        (std::f64::consts::PI / x).sqrt() * (-x / 4.0).exp() * (1.0 - 10.0 / (7.0 * x))
    }
}

fn phi_inv(y: f64) -> f64 {
    if y >= 1.0 {
        return 0.0;
    }
    if y <= 0.0 {
        return f64::INFINITY;
    }
    if y >= phi(10.0) {
        let v = ((0.0218 - y.ln()) / 0.4527).powf(1.0 / 0.86);
        return v.max(0.0);
    }
    // phi is decreasing on [10, inf); bracket and bisect.
    let (mut lo, mut hi) = (10.0f64, 20.0f64);
    while phi(hi) > y {
        lo = hi;
        hi *= 2.0;
        if hi > 1e12 {
            return hi;
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if phi(mid) > y {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-12 * hi {
            break;
        }
    }
    0.5 * (lo + hi)
}

fn check_mean(m: f64) -> f64 {
    let p = phi(m);
    // 1 - (1 - p)^2 without cancellation.
    phi_inv(p * (2.0 - p))
}

/// Gaussian-approximation mean LLR of every synthetic channel, index order.
///
/// The design point is Eb/N0 in dB at rate `rate`.
pub fn ga_channel_means(n: usize, design_ebn0_db: f64, rate: f64) -> Result<Vec<f64>> {
    if n == 0 || n > 16 {
        return Err(Error::InvalidParameter(format!("polar order n={n} out of range")));
    }
    if !(rate > 0.0 && rate <= 1.0) {
        return Err(Error::InvalidParameter(format!("rate {rate} not in (0, 1]")));
    }
    let sigma2 = 1.0 / (2.0 * rate * 10f64.powf(design_ebn0_db / 10.0));
    let mut means = vec![2.0 / sigma2];
    // The most significant index bit selects the first polarization step.
    for _ in 0..n {
        means = means
            .iter()
            .flat_map(|&m| [check_mean(m), 2.0 * m])
            .collect();
    }
    Ok(means)
}

/// Synthetic channel indices sorted most reliable first. Ties go to the larger index.
pub fn reliability_order(n: usize, design_ebn0_db: f64, rate: f64) -> Result<Vec<usize>> {
    let means = ga_channel_means(n, design_ebn0_db, rate)?;
    let mut order: Vec<usize> = (0..means.len()).collect();
    order.sort_by(|&a, &b| means[b].total_cmp(&means[a]).then(b.cmp(&a)));
    Ok(order)
}

/// Picks the `k` most reliable channels under the Gaussian approximation.
///
/// The design rate is `k / N`.
pub fn select_info_set(n: usize, k: usize, design_ebn0_db: f64) -> Result<PolarParams> {
    if n == 0 || n > 16 {
        return Err(Error::InvalidParameter(format!("polar order n={n} out of range")));
    }
    let size = 1usize << n;
    if k == 0 || k > size {
        return Err(Error::InvalidParameter(format!("K={k} must be in 1..={size}")));
    }
    let order = reliability_order(n, design_ebn0_db, k as f64 / size as f64)?;
    PolarParams::new(n, order[..k].to_vec())
}

/// Reliability order file body: 1-based, most reliable first.
pub fn reliability_order_text(order: &[usize]) -> String {
    let mut s = String::new();
    for &i in order {
        let _ = writeln!(s, "{}", i + 1);
    }
    s
}

/// Takes the first `k` entries of a reliability order file.
pub fn info_set_from_order_text(n: usize, k: usize, text: &str) -> Result<PolarParams> {
    let size = 1usize << n;
    let order = parse_one_based(text, size)?;
    let mut seen = vec![false; size];
    for &i in &order {
        if std::mem::replace(&mut seen[i], true) {
            return Err(Error::Parse(format!("index {} repeated", i + 1)));
        }
    }
    if order.len() < k {
        return Err(Error::Parse(format!(
            "reliability order lists {} indices, need at least {k}",
            order.len()
        )));
    }
    PolarParams::new(n, order[..k].to_vec())
}

/// Reordering of the factor-graph stages: the stage that acts on index bit
/// `d` in the standard graph sits at stage `sigma[d]`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct LayerPermutation {
    sigma: Vec<usize>,
}

impl LayerPermutation {
    pub fn new(sigma: Vec<usize>) -> Result<Self> {
        let mut seen = vec![false; sigma.len()];
        for &s in &sigma {
            if s >= sigma.len() || std::mem::replace(&mut seen[s], true) {
                return Err(Error::InvalidParameter(format!(
                    "{sigma:?} is not a permutation"
                )));
            }
        }
        Ok(Self { sigma })
    }

    pub fn identity(n: usize) -> Self {
        Self {
            sigma: (0..n).collect(),
        }
    }

    pub fn sigma(&self) -> &[usize] {
        &self.sigma
    }

    pub fn layers(&self) -> usize {
        self.sigma.len()
    }

    pub fn is_identity(&self) -> bool {
        self.sigma.iter().enumerate().all(|(i, &s)| i == s)
    }

    /// `self` after `other`: layer `t` goes to `self[other[t]]`.
    pub fn compose(&self, other: &LayerPermutation) -> Result<LayerPermutation> {
        if self.layers() != other.layers() {
            return Err(Error::Dimension("layer count mismatch".into()));
        }
        Ok(Self {
            sigma: other.sigma.iter().map(|&t| self.sigma[t]).collect(),
        })
    }

    pub fn inverse(&self) -> LayerPermutation {
        let mut inv = vec![0; self.sigma.len()];
        for (t, &s) in self.sigma.iter().enumerate() {
            inv[s] = t;
        }
        Self { sigma: inv }
    }
}

/// Index map induced by a layer permutation: bit `t` of `i` moves to bit
/// `sigma[t]` of the image.
pub fn bit_index_permutation(p: &LayerPermutation, n: usize) -> Result<Vec<usize>> {
    if p.layers() != n {
        return Err(Error::Dimension(format!(
            "permutation over {} layers used with n={n}",
            p.layers()
        )));
    }
    Ok((0..1usize << n)
        .map(|i| {
            p.sigma
                .iter()
                .enumerate()
                .fold(0, |acc, (t, &s)| acc | (((i >> t) & 1) << s))
        })
        .collect())
}

/// All permutations of the `count` right-most layers (the ones next to the
/// codeword side), identity first, then lexicographic.
pub fn right_most_layer_permutations(n: usize, count: usize) -> Vec<LayerPermutation> {
    let count = count.min(n);
    let base = n - count;
    let mut tail: Vec<usize> = (base..n).collect();
    let mut out = Vec::new();
    loop {
        let mut sigma: Vec<usize> = (0..base).collect();
        sigma.extend_from_slice(&tail);
        out.push(LayerPermutation { sigma });
        if !next_permutation(&mut tail) {
            break;
        }
    }
    out
}

fn next_permutation(v: &mut [usize]) -> bool {
    if v.len() < 2 {
        return false;
    }
    let Some(i) = (0..v.len() - 1).rev().find(|&i| v[i] < v[i + 1]) else {
        return false;
    };
    let j = (i + 1..v.len()).rev().find(|&j| v[j] > v[i]).expect("exists");
    v.swap(i, j);
    v[i + 1..].reverse();
    true
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gf2::encode_row;
    use proptest::prelude::*;

    #[test]
    fn kernel_and_small_powers() {
        let g1 = kron_generator(1).unwrap();
        assert_eq!(g1.to_rows(), vec![vec![1, 0], vec![1, 1]]);
        let g2 = kron_generator(2).unwrap();
        assert_eq!(
            g2.to_rows(),
            vec![
                vec![1, 0, 0, 0],
                vec![1, 1, 0, 0],
                vec![1, 0, 1, 0],
                vec![1, 1, 1, 1]
            ]
        );
        let g3 = kron_generator(3).unwrap();
        assert_eq!(g3.row(7), vec![1; 8]);
        assert_eq!(g3.row(0), vec![1, 0, 0, 0, 0, 0, 0, 0]);
        assert!(kron_generator(0).is_err());
    }

    #[test]
    fn generator_is_lower_triangular_involution() {
        for n in 1..=6 {
            let g = kron_generator(n).unwrap();
            for i in 0..g.rows() {
                assert!(g.get(i, i));
                for j in i + 1..g.cols() {
                    assert!(!g.get(i, j));
                }
            }
            let sq = g.multiply(&g).unwrap();
            assert_eq!(sq, BitMatrix::identity(1 << n).unwrap());
        }
    }

    #[test]
    fn encode_examples() {
        let p = PolarParams::new(2, vec![0, 1, 2, 3]).unwrap();
        assert_eq!(p.encode(&[0; 4]).unwrap(), vec![0; 4]);
        assert_eq!(p.encode(&[0, 0, 0, 1]).unwrap(), vec![1, 1, 1, 1]);
        let frozen = PolarParams::new(2, vec![3]).unwrap();
        assert!(matches!(
            frozen.encode(&[0, 1, 0, 0]),
            Err(Error::NonzeroFrozenBit { index: 1 })
        ));
    }

    #[test]
    fn info_set_k_equals_n() {
        let p = select_info_set(4, 16, 2.5).unwrap();
        assert_eq!(p.info_set(), (0..16).collect::<Vec<_>>().as_slice());
        assert!(p.frozen_set().is_empty());
        assert!(select_info_set(4, 17, 2.5).is_err());
        assert!(select_info_set(4, 0, 2.5).is_err());
    }

    #[test]
    fn single_info_bit_is_last_index() {
        for n in 1..=9 {
            for snr in [-2.0, 0.0, 2.5, 6.0] {
                assert_eq!(select_info_set(n, 1, snr).unwrap().info_set(), &[(1 << n) - 1]);
            }
        }
    }

    /// Exact `1 - E[tanh(u/2)]` for `u ~ N(m, 2m)` by trapezoidal quadrature.
    fn phi_exact(m: f64) -> f64 {
        if m <= 0.0 {
            return 1.0;
        }
        let sd = (2.0 * m).sqrt();
        let steps = 4000;
        let (lo, hi) = (m - 12.0 * sd, m + 12.0 * sd);
        let h = (hi - lo) / steps as f64;
        let mut acc = 0.0;
        for s in 0..=steps {
            let u = lo + s as f64 * h;
            let w = if s == 0 || s == steps { 0.5 } else { 1.0 };
            let pdf = (-(u - m).powi(2) / (4.0 * m)).exp() / (4.0 * std::f64::consts::PI * m).sqrt();
            acc += w * (u / 2.0).tanh() * pdf;
        }
        1.0 - acc * h
    }

    fn phi_exact_inv(y: f64) -> f64 {
        let (mut lo, mut hi) = (0.0, 200.0);
        for _ in 0..100 {
            let mid = 0.5 * (lo + hi);
            if phi_exact(mid) > y {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn info_set_matches_exact_density_evolution() {
        // n=3, K=5, 2.5 dB at rate 5/8.
        let sigma2 = 1.0 / (2.0 * (5.0 / 8.0) * 10f64.powf(0.25));
        let mut means = vec![2.0 / sigma2];
        for _ in 0..3 {
            means = means
                .iter()
                .flat_map(|&m| {
                    let p = phi_exact(m);
                    [phi_exact_inv(1.0 - (1.0 - p).powi(2)), 2.0 * m]
                })
                .collect();
        }
        let mut order: Vec<usize> = (0..8).collect();
        order.sort_by(|&a, &b| means[b].total_cmp(&means[a]));
        let mut expected = order[..5].to_vec();
        expected.sort_unstable();
        let got = select_info_set(3, 5, 2.5).unwrap();
        // Frozen from the quadrature oracle.
        assert_eq!(expected, vec![3, 4, 5, 6, 7]);
        assert_eq!(got.info_set(), expected.as_slice());
    }

    #[test]
    fn construction_is_deterministic() {
        let a = select_info_set(8, 134, 2.5).unwrap();
        let b = select_info_set(8, 134, 2.5).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.k(), 134);
    }

    #[test]
    fn construction_files_round_trip() {
        let order = reliability_order(4, 2.5, 0.5).unwrap();
        let text = reliability_order_text(&order);
        let p = info_set_from_order_text(4, 6, &text).unwrap();
        assert_eq!(p, PolarParams::new(4, order[..6].to_vec()).unwrap());
        let q = PolarParams::from_info_set_text(4, &p.info_set_text()).unwrap();
        assert_eq!(p, q);
        assert!(info_set_from_order_text(4, 6, "1\n1\n2\n").is_err());
        assert!(PolarParams::from_info_set_text(4, "0\n").is_err());
        assert!(PolarParams::from_info_set_text(4, "17\n").is_err());
    }

    #[test]
    fn bit_index_permutation_examples() {
        assert_eq!(
            bit_index_permutation(&LayerPermutation::identity(3), 3).unwrap(),
            (0..8).collect::<Vec<_>>()
        );
        let swap = LayerPermutation::new(vec![1, 0]).unwrap();
        // 1-based index 2 (digits 01) -> index 3 (digits 10).
        assert_eq!(bit_index_permutation(&swap, 2).unwrap()[1], 2);

        let cycle = LayerPermutation::new(vec![1, 2, 0]).unwrap();
        let digits_oracle: Vec<usize> = (0..8usize)
            .map(|i| {
                let d = [i & 1, (i >> 1) & 1, (i >> 2) & 1];
                let mut out = [0; 3];
                out[1] = d[0];
                out[2] = d[1];
                out[0] = d[2];
                out[0] + 2 * out[1] + 4 * out[2]
            })
            .collect();
        let table = bit_index_permutation(&cycle, 3).unwrap();
        assert_eq!(table, digits_oracle);
        let one_based: Vec<usize> = table.iter().map(|i| i + 1).collect();
        assert_eq!(one_based, vec![1, 3, 5, 7, 2, 4, 6, 8]);
        assert!(bit_index_permutation(&cycle, 4).is_err());
        assert!(LayerPermutation::new(vec![0, 0]).is_err());
    }

    #[test]
    fn right_most_permutations() {
        let perms = right_most_layer_permutations(8, 3);
        assert_eq!(perms.len(), 6);
        assert!(perms[0].is_identity());
        for p in &perms {
            assert_eq!(&p.sigma()[..5], &[0, 1, 2, 3, 4]);
        }
        let distinct: std::collections::HashSet<_> = perms.iter().collect();
        assert_eq!(distinct.len(), 6);
        assert_eq!(right_most_layer_permutations(2, 3).len(), 2);
    }

    proptest! {
        #[test]
        fn transform_matches_matrix_and_is_involution(n in 1usize..=6, seed in any::<u64>()) {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let u: Vec<u8> = (0..1usize << n).map(|_| rng.gen_range(0..2u8)).collect();
            let mut x = u.clone();
            polar_transform(&mut x);
            prop_assert_eq!(&x, &encode_row(&u, &kron_generator(n).unwrap()).unwrap());
            polar_transform(&mut x);
            prop_assert_eq!(x, u);
        }

        #[test]
        fn permutation_composition(
            s in Just((0..4usize).collect::<Vec<_>>()).prop_shuffle(),
            t in Just((0..4usize).collect::<Vec<_>>()).prop_shuffle(),
        ) {
            let sigma = LayerPermutation::new(s).unwrap();
            let tau = LayerPermutation::new(t).unwrap();
            let composed = bit_index_permutation(&sigma.compose(&tau).unwrap(), 4).unwrap();
            let ps = bit_index_permutation(&sigma, 4).unwrap();
            let pt = bit_index_permutation(&tau, 4).unwrap();
            let chained: Vec<usize> = (0..16).map(|i| ps[pt[i]]).collect();
            prop_assert_eq!(composed, chained);
            let inv = bit_index_permutation(&sigma.inverse(), 4).unwrap();
            prop_assert!((0..16).all(|i| inv[ps[i]] == i));
        }

        #[test]
        fn transform_commutes_with_index_permutation(seed in any::<u64>()) {
            use rand::{Rng, SeedableRng};
            use rand::seq::SliceRandom;
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let mut s: Vec<usize> = (0..5).collect();
            s.shuffle(&mut rng);
            let p = bit_index_permutation(&LayerPermutation::new(s).unwrap(), 5).unwrap();
            let u: Vec<u8> = (0..32).map(|_| rng.gen_range(0..2u8)).collect();
            let mut pu = vec![0u8; 32];
            for i in 0..32 { pu[p[i]] = u[i]; }
            let mut x = u.clone();
            polar_transform(&mut x);
            polar_transform(&mut pu);
            for i in 0..32 { prop_assert_eq!(pu[p[i]], x[i]); }
        }
    }
}
