//! Dense GF(2) linear algebra.
//!
//! [`BitMatrix`] stores rows packed into `u64` words. Externally every row is
//! a plain `0/1` byte sequence, so callers never see the packing.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

const WORD: usize = 64;

/// Dense matrix over GF(2), row-major, bit-packed.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct BitMatrix {
    rows: usize,
    cols: usize,
    words_per_row: usize,
    bits: Vec<u64>,
}

impl BitMatrix {
    /// All-zero `rows x cols` matrix.
    pub fn zeros(rows: usize, cols: usize) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::Dimension(format!(
                "matrix must be at least 1x1, got {rows}x{cols}"
            )));
        }
        let words_per_row = cols.div_ceil(WORD);
        Ok(Self {
            rows,
            cols,
            words_per_row,
            bits: vec![0; rows * words_per_row],
        })
    }

    pub fn identity(n: usize) -> Result<Self> {
        let mut m = Self::zeros(n, n)?;
        for i in 0..n {
            m.set(i, i, true);
        }
        Ok(m)
    }

    /// Builds a matrix from 0/1 rows. Any nonzero byte counts as a one.
    pub fn from_rows<R: AsRef<[u8]>>(rows: &[R]) -> Result<Self> {
        let cols = rows.first().map(|r| r.as_ref().len()).unwrap_or(0);
        let mut m = Self::zeros(rows.len(), cols)?;
        for (i, row) in rows.iter().enumerate() {
            let row = row.as_ref();
            if row.len() != cols {
                return Err(Error::Dimension(format!(
                    "row {i} has {} entries, expected {cols}",
                    row.len()
                )));
            }
            for (j, &b) in row.iter().enumerate() {
                if b != 0 {
                    m.set(i, j, true);
                }
            }
        }
        Ok(m)
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> bool {
        debug_assert!(r < self.rows && c < self.cols);
        (self.bits[r * self.words_per_row + c / WORD] >> (c % WORD)) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, value: bool) {
        debug_assert!(r < self.rows && c < self.cols);
        let word = &mut self.bits[r * self.words_per_row + c / WORD];
        let mask = 1u64 << (c % WORD);
        if value {
            *word |= mask;
        } else {
            *word &= !mask;
        }
    }

    /// Packed words of row `r`. Bits past `cols` are always zero.
    #[inline]
    pub fn row_words(&self, r: usize) -> &[u64] {
        let start = r * self.words_per_row;
        &self.bits[start..start + self.words_per_row]
    }

    pub fn row(&self, r: usize) -> Vec<u8> {
        (0..self.cols).map(|c| self.get(r, c) as u8).collect()
    }

    pub fn to_rows(&self) -> Vec<Vec<u8>> {
        (0..self.rows).map(|r| self.row(r)).collect()
    }

    pub fn column(&self, c: usize) -> Vec<u8> {
        (0..self.rows).map(|r| self.get(r, c) as u8).collect()
    }

    fn xor_row_into(&mut self, src: usize, dst: usize) {
        let w = self.words_per_row;
        let (s, d) = (src * w, dst * w);
        for k in 0..w {
            let v = self.bits[s + k];
            self.bits[d + k] ^= v;
        }
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        let w = self.words_per_row;
        for k in 0..w {
            self.bits.swap(a * w + k, b * w + k);
        }
    }

    /// Submatrix made of the given rows, in the given order.
    pub fn select_rows(&self, indices: &[usize]) -> Result<Self> {
        let mut m = Self::zeros(indices.len(), self.cols)?;
        let w = self.words_per_row;
        for (i, &r) in indices.iter().enumerate() {
            if r >= self.rows {
                return Err(Error::Dimension(format!("row index {r} out of range")));
            }
            m.bits[i * w..(i + 1) * w].copy_from_slice(self.row_words(r));
        }
        Ok(m)
    }

    /// Matrix whose column `i` is column `perm[i]` of `self`.
    pub fn permute_columns(&self, perm: &[usize]) -> Result<Self> {
        if perm.len() != self.cols {
            return Err(Error::Dimension(format!(
                "permutation length {} != cols {}",
                perm.len(),
                self.cols
            )));
        }
        let mut m = Self::zeros(self.rows, self.cols)?;
        for r in 0..self.rows {
            for (i, &c) in perm.iter().enumerate() {
                if self.get(r, c) {
                    m.set(r, i, true);
                }
            }
        }
        Ok(m)
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows).expect("nonempty");
        for r in 0..self.rows {
            for c in 0..self.cols {
                if self.get(r, c) {
                    t.set(c, r, true);
                }
            }
        }
        t
    }

    /// GF(2) product `self * other`.
    pub fn multiply(&self, other: &BitMatrix) -> Result<BitMatrix> {
        if self.cols != other.rows {
            return Err(Error::Dimension(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = Self::zeros(self.rows, other.cols)?;
        let w = out.words_per_row;
        for i in 0..self.rows {
            let dst = &mut out.bits[i * w..(i + 1) * w];
            for t in 0..self.cols {
                if self.get(i, t) {
                    for (d, s) in dst.iter_mut().zip(other.row_words(t)) {
                        *d ^= s;
                    }
                }
            }
        }
        Ok(out)
    }

    /// Entrywise XOR of two equally shaped matrices.
    pub fn add(&self, other: &BitMatrix) -> Result<BitMatrix> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(Error::Dimension("cannot add matrices of different shape".into()));
        }
        let mut out = self.clone();
        for (d, s) in out.bits.iter_mut().zip(&other.bits) {
            *d ^= s;
        }
        Ok(out)
    }

    pub fn is_zero(&self) -> bool {
        self.bits.iter().all(|&w| w == 0)
    }

    pub fn rank(&self) -> usize {
        let mut m = self.clone();
        let mut rank = 0;
        for c in 0..m.cols {
            if rank == m.rows {
                break;
            }
            if let Some(p) = (rank..m.rows).find(|&r| m.get(r, c)) {
                m.swap_rows(rank, p);
                for r in 0..m.rows {
                    if r != rank && m.get(r, c) {
                        m.xor_row_into(rank, r);
                    }
                }
                rank += 1;
            }
        }
        rank
    }

    /// Plain-text form: `rows cols` header, then one line of 0/1 per row.
    pub fn to_text(&self) -> String {
        let mut s = format!("{} {}\n", self.rows, self.cols);
        for r in 0..self.rows {
            for c in 0..self.cols {
                s.push(if self.get(r, c) { '1' } else { '0' });
            }
            s.push('\n');
        }
        s
    }
}

impl FromStr for BitMatrix {
    type Err = Error;

    fn from_str(text: &str) -> Result<Self> {
        let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty());
        let header = lines
            .next()
            .ok_or_else(|| Error::Parse("empty matrix file".into()))?;
        let dims: Vec<usize> = header
            .split_whitespace()
            .map(|t| t.parse().map_err(|_| Error::Parse(format!("bad header `{header}`"))))
            .collect::<Result<_>>()?;
        let [rows, cols] = dims[..] else {
            return Err(Error::Parse(format!("header must be `rows cols`, got `{header}`")));
        };
        let mut data = Vec::with_capacity(rows);
        for line in lines.by_ref().take(rows) {
            let row = line
                .chars()
                .map(|ch| match ch {
                    '0' => Ok(0u8),
                    '1' => Ok(1u8),
                    other => Err(Error::Parse(format!("unexpected character `{other}`"))),
                })
                .collect::<Result<Vec<u8>>>()?;
            if row.len() != cols {
                return Err(Error::Parse(format!(
                    "row has {} entries, expected {cols}",
                    row.len()
                )));
            }
            data.push(row);
        }
        if data.len() != rows {
            return Err(Error::Parse(format!("expected {rows} rows, found {}", data.len())));
        }
        Self::from_rows(&data)
    }
}

impl fmt::Debug for BitMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "BitMatrix {}x{}", self.rows, self.cols)?;
        for r in 0..self.rows {
            for c in 0..self.cols {
                f.write_str(if self.get(r, c) { "1" } else { "0" })?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

/// Row vector times matrix over GF(2).
pub fn encode_row(v: &[u8], g: &BitMatrix) -> Result<Vec<u8>> {
    if v.len() != g.rows() {
        return Err(Error::Dimension(format!(
            "vector length {} != generator rows {}",
            v.len(),
            g.rows()
        )));
    }
    let mut acc = vec![0u64; g.words_per_row];
    for (i, &b) in v.iter().enumerate() {
        if b != 0 {
            for (a, w) in acc.iter_mut().zip(g.row_words(i)) {
                *a ^= w;
            }
        }
    }
    Ok(unpack(&acc, g.cols()))
}

pub(crate) fn unpack(words: &[u64], len: usize) -> Vec<u8> {
    (0..len).map(|c| ((words[c / WORD] >> (c % WORD)) & 1) as u8).collect()
}

/// A generator reduced to `[I_k | A]` after a reliability-driven column permutation.
#[derive(Clone, Debug)]
pub struct SystematicForm {
    /// `k x N` matrix whose leading `k x k` block is the identity.
    pub g_tilde: BitMatrix,
    /// `perm[i]` is the original column sitting at position `i` of `g_tilde`.
    pub perm: Vec<usize>,
    /// Original indices of the most reliable independent basis, most reliable first.
    pub mrib: Vec<usize>,
}

impl SystematicForm {
    pub fn k(&self) -> usize {
        self.g_tilde.rows()
    }

    /// Applies the permutation: `out[i] = values[perm[i]]`.
    pub fn permute<T: Copy>(&self, values: &[T]) -> Vec<T> {
        self.perm.iter().map(|&p| values[p]).collect()
    }

    /// Undoes [`SystematicForm::permute`].
    pub fn unpermute<T: Copy + Default>(&self, values: &[T]) -> Vec<T> {
        let mut out = vec![T::default(); values.len()];
        for (i, &p) in self.perm.iter().enumerate() {
            out[p] = values[i];
        }
        out
    }
}

/// Orders the columns of `g` by decreasing `|reliab|` (stable, ties by index),
/// picks the first `k` linearly independent ones and reduces to `[I_k | A]`.
///
/// Dependent columns are pushed behind the pivot frontier, keeping their
/// relative sorted order, so `perm` stays a permutation of all columns.
pub fn systematize_by_reliability(g: &BitMatrix, reliab: &[f64]) -> Result<SystematicForm> {
    let (k, n) = (g.rows(), g.cols());
    if reliab.len() != n {
        return Err(Error::Dimension(format!(
            "reliability length {} != cols {n}",
            reliab.len()
        )));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| reliab[b].abs().total_cmp(&reliab[a].abs()));

    let mut m = g.permute_columns(&order)?;
    let mut pivots = Vec::with_capacity(k);
    let mut rest = Vec::with_capacity(n - k.min(n));
    let mut rank = 0;
    for pos in 0..n {
        if rank == k {
            rest.push(pos);
            continue;
        }
        match (rank..k).find(|&r| m.get(r, pos)) {
            Some(p) => {
                m.swap_rows(rank, p);
                for r in 0..k {
                    if r != rank && m.get(r, pos) {
                        m.xor_row_into(rank, r);
                    }
                }
                pivots.push(pos);
                rank += 1;
            }
            None => rest.push(pos),
        }
    }
    if rank < k {
        return Err(Error::RankDeficient { rank, expected: k });
    }

    let layout: Vec<usize> = pivots.iter().chain(&rest).copied().collect();
    let g_tilde = m.permute_columns(&layout)?;
    let perm: Vec<usize> = layout.iter().map(|&pos| order[pos]).collect();
    let mrib = perm[..k].to_vec();
    Ok(SystematicForm { g_tilde, perm, mrib })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::collections::BTreeSet;

    fn m(rows: &[&[u8]]) -> BitMatrix {
        BitMatrix::from_rows(rows).unwrap()
    }

    fn codewords(g: &BitMatrix) -> BTreeSet<Vec<u8>> {
        let k = g.rows();
        (0u32..1 << k)
            .map(|msg| {
                let v: Vec<u8> = (0..k).map(|i| ((msg >> i) & 1) as u8).collect();
                encode_row(&v, g).unwrap()
            })
            .collect()
    }

    fn random_full_rank(k: usize, n: usize, seed: u64) -> BitMatrix {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        loop {
            let rows: Vec<Vec<u8>> = (0..k)
                .map(|_| (0..n).map(|_| rng.gen_range(0..2u8)).collect())
                .collect();
            let g = BitMatrix::from_rows(&rows).unwrap();
            if g.rank() == k {
                return g;
            }
        }
    }

    #[test]
    fn zero_dimensions_rejected() {
        assert!(BitMatrix::zeros(0, 3).is_err());
        assert!(BitMatrix::zeros(3, 0).is_err());
    }

    #[test]
    fn identity_times_matrix() {
        let b = m(&[&[1, 0, 1], &[0, 1, 1]]);
        let i2 = BitMatrix::identity(2).unwrap();
        assert_eq!(i2.multiply(&b).unwrap(), b);
    }

    #[test]
    fn single_row_product() {
        let a = m(&[&[1, 1]]);
        let b = m(&[&[1, 0], &[1, 1]]);
        assert_eq!(a.multiply(&b).unwrap(), m(&[&[0, 1]]));
    }

    #[test]
    fn multiply_dimension_mismatch() {
        let a = m(&[&[1, 1, 0]]);
        let b = m(&[&[1, 0], &[1, 1]]);
        assert!(matches!(a.multiply(&b), Err(Error::Dimension(_))));
    }

    #[test]
    fn encode_row_cases() {
        let g = m(&[&[1, 0, 1], &[0, 1, 1]]);
        assert_eq!(encode_row(&[0, 0], &g).unwrap(), vec![0, 0, 0]);
        assert_eq!(encode_row(&[0, 1], &g).unwrap(), g.row(1));
        assert_eq!(encode_row(&[1, 1], &g).unwrap(), vec![1, 1, 0]);
        assert!(encode_row(&[1], &g).is_err());
    }

    #[test]
    fn worked_systematization() {
        let g = m(&[&[1, 0, 1, 0], &[0, 1, 1, 1]]);
        let sys = systematize_by_reliability(&g, &[0.1, 0.9, 0.5, 0.3]).unwrap();
        // 0-based: columns 1,2 form the MRIB; order (1,2,3,0).
        assert_eq!(sys.mrib, vec![1, 2]);
        assert_eq!(sys.perm, vec![1, 2, 3, 0]);
        assert_eq!(sys.g_tilde, m(&[&[1, 0, 1, 1], &[0, 1, 0, 1]]));
        let permuted: BTreeSet<Vec<u8>> = codewords(&g).iter().map(|c| sys.permute(c)).collect();
        assert_eq!(permuted, codewords(&sys.g_tilde));
    }

    #[test]
    fn systematic_input_is_left_alone() {
        let g = m(&[&[1, 0, 1, 1, 0], &[0, 1, 0, 1, 1]]);
        let sys = systematize_by_reliability(&g, &[5.0, 4.0, 3.0, 2.0, 1.0]).unwrap();
        assert_eq!(sys.perm, vec![0, 1, 2, 3, 4]);
        assert_eq!(sys.g_tilde, g);
    }

    #[test]
    fn dependent_column_is_skipped() {
        // Columns 0 and 1 are equal; column 1 is most reliable after 0, so it
        // must be pushed behind the frontier.
        let g = m(&[&[1, 1, 0, 1], &[0, 0, 1, 1]]);
        let sys = systematize_by_reliability(&g, &[4.0, 3.0, 2.0, 1.0]).unwrap();
        assert_eq!(sys.mrib, vec![0, 2]);
        assert_eq!(sys.perm, vec![0, 2, 1, 3]);
    }

    #[test]
    fn rank_deficient_rejected() {
        let g = m(&[&[1, 1, 0], &[1, 1, 0]]);
        assert!(matches!(
            systematize_by_reliability(&g, &[1.0, 2.0, 3.0]),
            Err(Error::RankDeficient { rank: 1, expected: 2 })
        ));
    }

    #[test]
    fn text_round_trip() {
        let g = m(&[&[1, 0, 1, 0], &[0, 1, 1, 1]]);
        let text = g.to_text();
        assert_eq!(text, "2 4\n1010\n0111\n");
        assert_eq!(text.parse::<BitMatrix>().unwrap(), g);
        assert!("2 4\n1010\n".parse::<BitMatrix>().is_err());
        assert!("1 2\n1x\n".parse::<BitMatrix>().is_err());
    }

    #[test]
    fn wide_rows_cross_word_boundaries() {
        let n = 130;
        let mut a = BitMatrix::zeros(2, n).unwrap();
        a.set(0, 0, true);
        a.set(0, 64, true);
        a.set(1, 129, true);
        let v = encode_row(&[1, 1], &a).unwrap();
        assert_eq!(v.iter().filter(|&&b| b == 1).count(), 3);
        assert_eq!(a.transpose().transpose(), a);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn systematic_form_preserves_code(
            k in 1usize..=8,
            extra in 0usize..=8,
            seed in any::<u64>(),
            reliab_seed in any::<u64>(),
        ) {
            use rand::{Rng, SeedableRng};
            let n = k + extra;
            let g = random_full_rank(k, n, seed);
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(reliab_seed);
            // Coarse values so ties occur.
            let reliab: Vec<f64> = (0..n).map(|_| rng.gen_range(-4i32..=4) as f64 * 0.5).collect();
            let sys = systematize_by_reliability(&g, &reliab).unwrap();

            for i in 0..k {
                for j in 0..k {
                    prop_assert_eq!(sys.g_tilde.get(i, j), i == j);
                }
            }
            let mut seen = sys.perm.clone();
            seen.sort_unstable();
            prop_assert_eq!(seen, (0..n).collect::<Vec<_>>());
            let distinct: BTreeSet<usize> = sys.mrib.iter().copied().collect();
            prop_assert_eq!(distinct.len(), k);

            let permuted: BTreeSet<Vec<u8>> =
                codewords(&g).iter().map(|c| sys.permute(c)).collect();
            prop_assert_eq!(permuted, codewords(&sys.g_tilde));

            // A column more reliable than some MRIB column must depend on
            // the strictly more reliable part of the basis.
            for &c in &sys.perm[k..] {
                for (pos, &b) in sys.mrib.iter().enumerate() {
                    if reliab[c].abs() > reliab[b].abs() {
                        let prefix: Vec<usize> = sys.mrib[..pos].to_vec();
                        let mut cols = prefix.clone();
                        cols.push(c);
                        let sub = g.transpose().select_rows(&cols).unwrap();
                        prop_assert_eq!(sub.rank(), prefix.len());
                    }
                }
            }
        }

        #[test]
        fn multiply_associative_and_distributive(
            a in proptest::collection::vec(0u8..2, 12),
            b in proptest::collection::vec(0u8..2, 20),
            c in proptest::collection::vec(0u8..2, 20),
            d in proptest::collection::vec(0u8..2, 10),
        ) {
            let a = BitMatrix::from_rows(&a.chunks(4).collect::<Vec<_>>()).unwrap(); // 3x4
            let b = BitMatrix::from_rows(&b.chunks(5).collect::<Vec<_>>()).unwrap(); // 4x5
            let c = BitMatrix::from_rows(&c.chunks(5).collect::<Vec<_>>()).unwrap(); // 4x5
            let d = BitMatrix::from_rows(&d.chunks(2).collect::<Vec<_>>()).unwrap(); // 5x2
            let left = a.multiply(&b).unwrap().multiply(&d).unwrap();
            let right = a.multiply(&b.multiply(&d).unwrap()).unwrap();
            prop_assert_eq!(left, right);
            let sum = a.multiply(&b.add(&c).unwrap()).unwrap();
            let split = a.multiply(&b).unwrap().add(&a.multiply(&c).unwrap()).unwrap();
            prop_assert_eq!(sum, split);
        }
    }
}
