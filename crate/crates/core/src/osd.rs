//! Ordered statistics decoding with correlation-based reprocessing.
//!
//! After the reliability-ordered systematic reduction, every candidate is
//! `x_bar ^ (sum of flipped rows of G~)`. Minimizing the Euclidean distance
//! to the permuted observation is the same as maximizing
//! `sum_l s_l (-1)^{g_l}` with `s_l = y~_l (-1)^{x_bar_l}`, so each pattern
//! costs one signed sum and no re-encoding.

use crate::channel::{hard_decision, squared_distance};
use crate::error::{Error, Result};
use crate::gf2::{systematize_by_reliability, BitMatrix, SystematicForm};

/// Everything reprocessing needs, in permuted coordinates.
#[derive(Clone, Debug)]
pub struct OsdContext {
    pub sys: SystematicForm,
    pub y_perm: Vec<f64>,
    pub l_perm: Vec<f64>,
    pub v_hat: Vec<u8>,
    pub x_bar: Vec<u8>,
    pub s: Vec<f64>,
    /// `+-1` for the parity part (columns `k..N`) of each row of `G~`.
    parity_signs: Vec<f64>,
    /// `s` restricted to the parity part, times each row's signs.
    weighted_parity: Vec<f64>,
    sum_sys: f64,
}

/// A reprocessing outcome.
#[derive(Clone, Debug, PartialEq)]
pub struct Candidate {
    /// Flipped MRIB positions (0-based, ascending, at most two).
    pub pattern: Vec<usize>,
    /// `sum_l s_l (-1)^{(flipped rows)_l}`; equals `<BPSK(codeword), y~>`.
    pub score: f64,
    /// Candidate codeword in permuted coordinates.
    pub codeword: Vec<u8>,
}

impl OsdContext {
    pub fn k(&self) -> usize {
        self.sys.k()
    }

    pub fn block_len(&self) -> usize {
        self.s.len()
    }

    fn parity_len(&self) -> usize {
        self.block_len() - self.k()
    }

    fn signs(&self, i: usize) -> &[f64] {
        let w = self.parity_len();
        &self.parity_signs[i * w..(i + 1) * w]
    }

    fn weighted(&self, i: usize) -> &[f64] {
        let w = self.parity_len();
        &self.weighted_parity[i * w..(i + 1) * w]
    }

    /// Score of flipping MRIB bit `i` (0-based).
    #[inline]
    pub fn single_score(&self, i: usize) -> f64 {
        let par: f64 = self.weighted(i).iter().sum();
        self.sum_sys - 2.0 * self.s[i] + par
    }

    #[inline]
    fn no_flip_score(&self) -> f64 {
        self.sum_sys + self.s[self.k()..].iter().sum::<f64>()
    }

    /// Score of flipping MRIB bits `i` and `j` (0-based, `i != j`).
    #[inline]
    pub fn pair_score(&self, i: usize, j: usize) -> f64 {
        self.sum_sys - 2.0 * (self.s[i] + self.s[j]) + dot(self.weighted(i), self.signs(j))
    }

    /// Candidate codeword (permuted coordinates) for a flip pattern.
    pub fn codeword_for(&self, pattern: &[usize]) -> Vec<u8> {
        let mut x = self.x_bar.clone();
        for &i in pattern {
            for (c, b) in x.iter_mut().enumerate() {
                if self.sys.g_tilde.get(i, c) {
                    *b ^= 1;
                }
            }
        }
        x
    }

    fn candidate(&self, pattern: Vec<usize>, score: f64) -> Candidate {
        let codeword = self.codeword_for(&pattern);
        Candidate {
            pattern,
            score,
            codeword,
        }
    }

    /// Order-1 scores for patterns `{}` and `{i}`, summed term by term.
    /// `additions` counts every scalar addition or subtraction performed.
    pub fn order1_scores_reference(&self, additions: &mut usize) -> Vec<f64> {
        let n = self.block_len();
        let g = &self.sys.g_tilde;
        let mut scores = Vec::with_capacity(self.k() + 1);
        for i in 0..=self.k() {
            let term = |l: usize| {
                if i > 0 && g.get(i - 1, l) {
                    -self.s[l]
                } else {
                    self.s[l]
                }
            };
            let mut acc = term(0);
            for l in 1..n {
                acc += term(l);
                *additions += 1;
            }
            scores.push(acc);
        }
        scores
    }

    /// Pair score by explicit row XOR and a plain loop over all positions.
    pub fn pair_score_loop(&self, i: usize, j: usize) -> f64 {
        let g = &self.sys.g_tilde;
        (0..self.block_len())
            .map(|l| {
                if g.get(i, l) != g.get(j, l) {
                    -self.s[l]
                } else {
                    self.s[l]
                }
            })
            .sum()
    }

    /// `C = A * B` with `A_i = s (.) (-1)^{g^i}` and `B_{.,j} = (-1)^{g^j}`,
    /// computed over all `N` columns. Row-major `k x k`.
    pub fn pair_score_matrix(&self) -> Vec<f64> {
        let (k, n) = (self.k(), self.block_len());
        let g = &self.sys.g_tilde;
        let sign = |i: usize, l: usize| if g.get(i, l) { -1.0 } else { 1.0 };
        let a: Vec<f64> = (0..k)
            .flat_map(|i| (0..n).map(move |l| (i, l)))
            .map(|(i, l)| self.s[l] * sign(i, l))
            .collect();
        // B stored transposed so both operands are row-contiguous.
        let bt: Vec<f64> = (0..k)
            .flat_map(|j| (0..n).map(move |l| (j, l)))
            .map(|(j, l)| sign(j, l))
            .collect();
        let mut c = vec![0.0; k * k];
        for i in 0..k {
            for j in 0..k {
                c[i * k + j] = dot(&a[i * n..(i + 1) * n], &bt[j * n..(j + 1) * n]);
            }
        }
        c
    }
}

/// Dot product with independent partial sums so it vectorizes.
#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = [0.0f64; 8];
    let chunks = a.len() / 8;
    for c in 0..chunks {
        let (x, y) = (&a[c * 8..c * 8 + 8], &b[c * 8..c * 8 + 8]);
        for t in 0..8 {
            acc[t] += x[t] * y[t];
        }
    }
    let mut tail = 0.0;
    for t in chunks * 8..a.len() {
        tail += a[t] * b[t];
    }
    ((acc[0] + acc[1]) + (acc[2] + acc[3])) + ((acc[4] + acc[5]) + (acc[6] + acc[7])) + tail
}

/// MRIB search and order-0 quantities for generator `g`, reliabilities
/// `llr` and observation `y`.
pub fn build_context(g: &BitMatrix, llr: &[f64], y: &[f64]) -> Result<OsdContext> {
    let n = g.cols();
    if llr.len() != n || y.len() != n {
        return Err(Error::Dimension(format!(
            "OSD inputs must have length {n} (llr {}, y {})",
            llr.len(),
            y.len()
        )));
    }
    let sys = systematize_by_reliability(g, llr)?;
    let k = sys.k();
    let y_perm = sys.permute(y);
    let l_perm = sys.permute(llr);
    let v_hat = hard_decision(&l_perm[..k]);
    let x_bar = crate::gf2::encode_row(&v_hat, &sys.g_tilde)?;
    let s: Vec<f64> = y_perm
        .iter()
        .zip(&x_bar)
        .map(|(&v, &b)| if b == 0 { v } else { -v })
        .collect();

    let w = n - k;
    let mut parity_signs = Vec::with_capacity(k * w);
    let mut weighted_parity = Vec::with_capacity(k * w);
    for i in 0..k {
        for l in k..n {
            let sg = if sys.g_tilde.get(i, l) { -1.0 } else { 1.0 };
            parity_signs.push(sg);
            weighted_parity.push(sg * s[l]);
        }
    }
    let sum_sys = s[..k].iter().sum();
    Ok(OsdContext {
        sys,
        y_perm,
        l_perm,
        v_hat,
        x_bar,
        s,
        parity_signs,
        weighted_parity,
        sum_sys,
    })
}

pub fn reprocess_order0(ctx: &OsdContext) -> Candidate {
    ctx.candidate(Vec::new(), ctx.no_flip_score())
}

/// Best of the no-flip pattern and all single flips.
pub fn reprocess_order1(ctx: &OsdContext) -> Candidate {
    let mut best = (ctx.no_flip_score(), None);
    for i in 0..ctx.k() {
        let score = ctx.single_score(i);
        if score > best.0 {
            best = (score, Some(i));
        }
    }
    ctx.candidate(best.1.into_iter().collect(), best.0)
}

/// Best pair in `(i, j)` order; ties go to the lexicographically smaller pair.
fn better_pair(score: f64, pair: (usize, usize), best: Option<(f64, (usize, usize))>) -> bool {
    match best {
        None => true,
        Some((bs, bp)) => score > bs || (score == bs && pair < bp),
    }
}

/// Pair scores in the least-reliable-first enumeration order, computed on
/// demand so several partial budgets can share one pass.
#[derive(Clone, Debug)]
pub struct PairSearch<'a> {
    ctx: &'a OsdContext,
    next: Option<(usize, usize)>,
    visited: Vec<((usize, usize), f64)>,
}

impl<'a> PairSearch<'a> {
    pub fn new(ctx: &'a OsdContext) -> Self {
        let k = ctx.k();
        let next = (k >= 2).then(|| (k - 2, k - 1));
        Self {
            ctx,
            next,
            visited: Vec::new(),
        }
    }

    pub fn total_pairs(&self) -> usize {
        let k = self.ctx.k();
        k * k.saturating_sub(1) / 2
    }

    fn advance(&mut self) -> bool {
        let Some((i, j)) = self.next else {
            return false;
        };
        let score = self.ctx.pair_score(i, j);
        self.visited.push(((i, j), score));
        // Inner loop: j descends to i + 1; outer: i descends to 0.
        self.next = if j > i + 1 {
            Some((i, j - 1))
        } else if i > 0 {
            Some((i - 1, self.ctx.k() - 1))
        } else {
            None
        };
        true
    }

    /// Pairs visited so far, in enumeration order.
    pub fn visited(&self) -> &[((usize, usize), f64)] {
        &self.visited
    }

    /// Best among the first `m` enumerated pairs.
    pub fn best_of_first(&mut self, m: usize) -> Option<(f64, (usize, usize))> {
        while self.visited.len() < m && self.advance() {}
        let mut best = None;
        for &(pair, score) in self.visited.iter().take(m) {
            if better_pair(score, pair, best) {
                best = Some((score, pair));
            }
        }
        best
    }

    pub fn best_all(&mut self) -> Option<(f64, (usize, usize))> {
        self.best_of_first(self.total_pairs())
    }
}

fn pair_candidate(ctx: &OsdContext, best: (f64, (usize, usize))) -> Candidate {
    let (score, (i, j)) = best;
    ctx.candidate(vec![i, j], score)
}

/// Best double flip over all `k(k-1)/2` pairs.
pub fn reprocess_order2_full(ctx: &OsdContext) -> Result<Candidate> {
    if ctx.k() < 2 {
        return Err(Error::InvalidParameter("order-2 reprocessing needs k >= 2".into()));
    }
    let best = PairSearch::new(ctx).best_all().expect("k >= 2");
    Ok(pair_candidate(ctx, best))
}

/// Best double flip among the first `m` pairs of the enumeration
/// `i = k-1, k-2, ...` (outer) and `j = k, k-1, ..., i+1` (inner), 1-based.
pub fn reprocess_order2_partial(ctx: &OsdContext, m: usize) -> Result<Candidate> {
    let mut search = PairSearch::new(ctx);
    let total = search.total_pairs();
    if m == 0 || m > total {
        return Err(Error::InvalidParameter(format!(
            "partial pair budget {m} outside 1..={total}"
        )));
    }
    let best = search.best_of_first(m).expect("m >= 1");
    Ok(pair_candidate(ctx, best))
}

/// Reprocessing depth.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum OsdOrder {
    Zero,
    One,
    /// Order 2; `Some(m)` restricts the pair search to the first `m` pairs.
    Two(Option<usize>),
}

impl OsdOrder {
    pub fn from_order(q: usize, partial: Option<usize>) -> Result<Self> {
        match (q, partial) {
            (0, None) => Ok(OsdOrder::Zero),
            (1, None) => Ok(OsdOrder::One),
            (2, p) => Ok(OsdOrder::Two(p)),
            (0 | 1, Some(_)) => Err(Error::InvalidParameter(
                "partial reprocessing only applies to order 2".into(),
            )),
            (q, _) => Err(Error::InvalidParameter(format!(
                "reprocessing order {q} unsupported (0, 1 or 2)"
            ))),
        }
    }
}

/// Final OSD decision.
#[derive(Clone, Debug)]
pub struct OsdOutcome {
    /// Codeword in the original coordinates.
    pub codeword: Vec<u8>,
    /// `||y - BPSK(codeword)||^2`.
    pub distance: f64,
    pub winner: Candidate,
}

/// Picks among the cumulative candidates of `order` for an existing context.
pub fn decide(ctx: &OsdContext, order: OsdOrder) -> Result<Candidate> {
    Ok(match order {
        OsdOrder::Zero => reprocess_order0(ctx),
        OsdOrder::One => reprocess_order1(ctx),
        OsdOrder::Two(partial) => {
            let one = reprocess_order1(ctx);
            if ctx.k() < 2 {
                return Ok(one);
            }
            let pair = match partial {
                None => reprocess_order2_full(ctx)?,
                Some(m) => reprocess_order2_partial(ctx, m)?,
            };
            if pair.score > one.score {
                pair
            } else {
                one
            }
        }
    })
}

pub(crate) fn finish(ctx: &OsdContext, winner: Candidate, y: &[f64]) -> OsdOutcome {
    let codeword = ctx.sys.unpermute(&winner.codeword);
    let distance = squared_distance(y, &codeword);
    OsdOutcome {
        codeword,
        distance,
        winner,
    }
}

/// Full OSD: MRIB by `|llr|`, reprocessing of the requested order, and the
/// winning codeword mapped back to the original coordinates.
pub fn decode_osd_detailed(
    g: &BitMatrix,
    llr: &[f64],
    y: &[f64],
    order: OsdOrder,
) -> Result<OsdOutcome> {
    let ctx = build_context(g, llr, y)?;
    let winner = decide(&ctx, order)?;
    Ok(finish(&ctx, winner, y))
}

/// Codeword-only form of [`decode_osd_detailed`].
pub fn decode_osd(
    g: &BitMatrix,
    llr: &[f64],
    y: &[f64],
    order: usize,
    partial_m: Option<usize>,
) -> Result<Vec<u8>> {
    let order = OsdOrder::from_order(order, partial_m)?;
    Ok(decode_osd_detailed(g, llr, y, order)?.codeword)
}
