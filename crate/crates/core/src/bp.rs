//! Belief propagation on the polar factor graph, optionally concatenated
//! with the CRC check nodes (CBP).
//!
//! The graph has `n + 1` layers of `N` variable nodes; layer 0 holds `u`,
//! layer `n` holds the codeword. Stage `t` joins layers `t` and `t + 1` with
//! `N / 2` processing elements, each pairing the nodes that differ in one
//! index bit. In the standard graph stage `t` acts on bit `t`.

use crate::channel::{hard_decision, LlrVector, DEFAULT_SAT};
use crate::code::CodeSpec;
use crate::error::{Error, Result};
use crate::polar::{bit_index_permutation, polar_transform, LayerPermutation};

/// Check-node combination rule.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub enum Kernel {
    /// `2 atanh(tanh(a/2) tanh(b/2))`.
    #[default]
    Exact,
    /// `sign(a) sign(b) min(|a|, |b|)`.
    MinSum,
}

impl std::str::FromStr for Kernel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exact" => Ok(Kernel::Exact),
            "minsum" | "min-sum" => Ok(Kernel::MinSum),
            other => Err(Error::Parse(format!("unknown kernel `{other}`"))),
        }
    }
}

impl std::fmt::Display for Kernel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Kernel::Exact => "exact",
            Kernel::MinSum => "minsum",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BpConfig {
    pub kernel: Kernel,
    pub i_max: usize,
    /// Iterations run on the polar graph alone before CRC nodes join.
    pub i_thr: usize,
    pub sat: f64,
}

impl Default for BpConfig {
    fn default() -> Self {
        Self {
            kernel: Kernel::Exact,
            i_max: 100,
            i_thr: 50,
            sat: DEFAULT_SAT,
        }
    }
}

impl BpConfig {
    pub fn validate(&self) -> Result<()> {
        if self.i_max == 0 {
            return Err(Error::InvalidParameter("i_max must be >= 1".into()));
        }
        if self.i_thr > self.i_max {
            return Err(Error::InvalidParameter(format!(
                "i_thr={} exceeds i_max={}",
                self.i_thr, self.i_max
            )));
        }
        if !(self.sat > 0.0 && self.sat.is_finite()) {
            return Err(Error::InvalidParameter(format!("sat={} must be positive", self.sat)));
        }
        Ok(())
    }
}

/// Exact boxplus in its numerically stable min-plus-correction form,
/// `sign * min + ln(1 + e^{-|a+b|}) - ln(1 + e^{-|a-b|})`, with the two
/// corrections merged into a single logarithm.
#[inline]
pub fn boxplus(a: f64, b: f64) -> f64 {
    let (aa, ab) = (a.abs(), b.abs());
    let mag = aa.min(ab);
    let signed = if (a < 0.0) != (b < 0.0) { -mag } else { mag };
    let p = (-(a + b).abs()).exp();
    let q = (-(a - b).abs()).exp();
    signed + ((p - q) / (1.0 + q)).ln_1p()
}

#[inline]
pub fn boxplus_minsum(a: f64, b: f64) -> f64 {
    let mag = a.abs().min(b.abs());
    if (a < 0.0) != (b < 0.0) {
        -mag
    } else {
        mag
    }
}

impl Kernel {
    #[inline]
    pub fn combine(self, a: f64, b: f64) -> f64 {
        match self {
            Kernel::Exact => boxplus(a, b),
            Kernel::MinSum => boxplus_minsum(a, b),
        }
    }
}

/// Topology of one factor graph plus the concatenated CRC checks.
#[derive(Clone, Debug)]
pub struct FactorGraph {
    n: usize,
    /// Index bit handled by each stage, left (u side) to right.
    stage_bits: Vec<usize>,
    frozen: Vec<bool>,
    /// For each CRC check, the layer-0 nodes it touches.
    checks: Vec<Vec<usize>>,
    /// Layer-0 node of each information bit, in CRC-word order.
    info_nodes: Vec<usize>,
}

impl FactorGraph {
    pub fn new(
        n: usize,
        stage_bits: Vec<usize>,
        frozen: Vec<bool>,
        info_nodes: Vec<usize>,
        checks: Vec<Vec<usize>>,
    ) -> Result<Self> {
        let size = 1usize << n;
        LayerPermutation::new(stage_bits.clone())?;
        if stage_bits.len() != n || frozen.len() != size {
            return Err(Error::Dimension("factor graph shape mismatch".into()));
        }
        if info_nodes.iter().chain(checks.iter().flatten()).any(|&v| v >= size || frozen[v]) {
            return Err(Error::InvalidParameter(
                "information and check nodes must be unfrozen layer-0 nodes".into(),
            ));
        }
        Ok(Self {
            n,
            stage_bits,
            frozen,
            checks,
            info_nodes,
        })
    }

    /// Standard graph with the code relabelled by `bit_index_permutation(perm)`.
    /// Feed it channel LLRs permuted the same way.
    pub fn standard(code: &CodeSpec, perm: &LayerPermutation) -> Result<Self> {
        let p = bit_index_permutation(perm, code.n())?;
        Self::with_relabel(code, (0..code.n()).collect(), |i| p[i])
    }

    /// Graph whose stages are physically reordered: the stage for bit `d`
    /// sits at position `sigma[d]`. Works in the code's own coordinates.
    pub fn layer_permuted(code: &CodeSpec, perm: &LayerPermutation) -> Result<Self> {
        if perm.layers() != code.n() {
            return Err(Error::Dimension("permutation layer count mismatch".into()));
        }
        let stage_bits = perm.inverse().sigma().to_vec();
        Self::with_relabel(code, stage_bits, |i| i)
    }

    fn with_relabel(
        code: &CodeSpec,
        stage_bits: Vec<usize>,
        relabel: impl Fn(usize) -> usize,
    ) -> Result<Self> {
        let size = code.block_len();
        let mut frozen = vec![false; size];
        for i in 0..size {
            frozen[relabel(i)] = code.polar().is_frozen(i);
        }
        let info_nodes: Vec<usize> = code.polar().info_set().iter().map(|&i| relabel(i)).collect();
        let h = code.crc().parity_check();
        let checks = (0..h.rows())
            .map(|j| {
                (0..h.cols())
                    .filter(|&c| h.get(j, c))
                    .map(|c| info_nodes[c])
                    .collect()
            })
            .collect();
        Self::new(code.n(), stage_bits, frozen, info_nodes, checks)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn block_len(&self) -> usize {
        1 << self.n
    }

    pub fn is_frozen(&self, i: usize) -> bool {
        self.frozen[i]
    }

    pub fn info_nodes(&self) -> &[usize] {
        &self.info_nodes
    }

    pub fn checks(&self) -> &[Vec<usize>] {
        &self.checks
    }
}

/// Messages of one BP run, in graph coordinates.
#[derive(Clone, Debug)]
pub struct BpState {
    n: usize,
    size: usize,
    sat: f64,
    /// `(n + 1) x N` left-propagating messages, layer-major.
    left: Vec<f64>,
    /// `(n + 1) x N` right-propagating messages, layer-major.
    right: Vec<f64>,
    /// Extrinsics from CRC checks, one per check edge, flattened.
    crc_ext: Vec<f64>,
    /// Sum of CRC extrinsics arriving at each layer-0 node.
    crc_sum: Vec<f64>,
    iteration: usize,
}

impl BpState {
    /// Initial messages: channel LLRs on the right edge, `sat` on frozen
    /// inputs, zero elsewhere.
    pub fn new(graph: &FactorGraph, llr_ch: &[f64], sat: f64) -> Result<Self> {
        let size = graph.block_len();
        if llr_ch.len() != size {
            return Err(Error::Dimension(format!(
                "channel LLR length {} != N={size}",
                llr_ch.len()
            )));
        }
        let n = graph.n;
        let mut left = vec![0.0; (n + 1) * size];
        let mut right = vec![0.0; (n + 1) * size];
        for (dst, &l) in left[n * size..].iter_mut().zip(llr_ch) {
            *dst = l.clamp(-sat, sat);
        }
        for i in 0..size {
            if graph.frozen[i] {
                right[i] = sat;
            }
        }
        let edges: usize = graph.checks.iter().map(Vec::len).sum();
        Ok(Self {
            n,
            size,
            sat,
            left,
            right,
            crc_ext: vec![0.0; edges],
            crc_sum: vec![0.0; size],
            iteration: 0,
        })
    }

    pub fn iteration(&self) -> usize {
        self.iteration
    }

    pub fn left(&self, layer: usize) -> &[f64] {
        &self.left[layer * self.size..(layer + 1) * self.size]
    }

    pub fn right(&self, layer: usize) -> &[f64] {
        &self.right[layer * self.size..(layer + 1) * self.size]
    }

    pub fn crc_extrinsics(&self) -> &[f64] {
        &self.crc_ext
    }

    /// Posterior LLRs of layer `layer`: `L + R`.
    pub fn posterior(&self, layer: usize) -> Vec<f64> {
        self.left(layer)
            .iter()
            .zip(self.right(layer))
            .map(|(l, r)| l + r)
            .collect()
    }
}

/// One flooding iteration: right-to-left sweep, optional CRC check update,
/// left-to-right sweep.
pub fn bp_iteration(state: &mut BpState, graph: &FactorGraph, kernel: Kernel, crc_active: bool) {
    let (n, size, sat) = (state.n, state.size, state.sat);
    let f = |a: f64, b: f64| kernel.combine(a, b);

    for t in (0..n).rev() {
        let h = 1usize << graph.stage_bits[t];
        let (lo, hi) = state.left.split_at_mut((t + 1) * size);
        let l_out = &mut lo[t * size..];
        let l_in = &hi[..size];
        let r_in = &state.right[t * size..(t + 1) * size];
        for base in (0..size).step_by(2 * h) {
            for a in base..base + h {
                let b = a + h;
                l_out[a] = f(l_in[a], l_in[b] + r_in[b]).clamp(-sat, sat);
                l_out[b] = (f(r_in[a], l_in[a]) + l_in[b]).clamp(-sat, sat);
            }
        }
    }

    if crc_active && !graph.checks.is_empty() {
        update_crc(state, graph, kernel);
    }

    for t in 0..n {
        let h = 1usize << graph.stage_bits[t];
        let (lo, hi) = state.right.split_at_mut((t + 1) * size);
        let r_in = &lo[t * size..];
        let r_out = &mut hi[..size];
        let l_in = &state.left[(t + 1) * size..(t + 2) * size];
        for base in (0..size).step_by(2 * h) {
            for a in base..base + h {
                let b = a + h;
                r_out[a] = f(r_in[a], l_in[b] + r_in[b]).clamp(-sat, sat);
                r_out[b] = (f(r_in[a], l_in[a]) + r_in[b]).clamp(-sat, sat);
            }
        }
    }
    state.iteration += 1;
}

/// Recomputes every CRC check-to-variable extrinsic from the current
/// layer-0 messages and writes the sums into the layer-0 priors.
fn update_crc(state: &mut BpState, graph: &FactorGraph, kernel: Kernel) {
    let sat = state.sat;
    let size = state.size;
    let mut new_sum = vec![0.0; size];
    let mut offset = 0;
    let mut inputs = Vec::new();
    let mut forward = Vec::new();
    for check in &graph.checks {
        let d = check.len();
        let prev = &state.crc_ext[offset..offset + d];
        inputs.clear();
        inputs.extend(check.iter().zip(prev).map(|(&v, &e)| {
            (state.left[v] + state.crc_sum[v] - e).clamp(-2.0 * sat, 2.0 * sat)
        }));
        // Prefix combinations; suffix folded on the way back.
        forward.clear();
        let mut acc = f64::INFINITY;
        for &q in &inputs {
            forward.push(acc);
            acc = if acc.is_infinite() { q } else { kernel.combine(acc, q) };
        }
        let mut suffix = f64::INFINITY;
        for e in (0..d).rev() {
            let out = match (forward[e].is_infinite(), suffix.is_infinite()) {
                (true, true) => sat,
                (true, false) => suffix,
                (false, true) => forward[e],
                (false, false) => kernel.combine(forward[e], suffix),
            }
            .clamp(-sat, sat);
            state.crc_ext[offset + e] = out;
            new_sum[check[e]] += out;
            suffix = if suffix.is_infinite() {
                inputs[e]
            } else {
                kernel.combine(suffix, inputs[e])
            };
        }
        offset += d;
    }
    for &v in &graph.info_nodes {
        state.right[v] = new_sum[v].clamp(-sat, sat);
    }
    state.crc_sum = new_sum;
}

/// Output of one CBP decoder, in the code's own coordinates.
#[derive(Clone, Debug)]
pub struct CbpResult {
    /// Codeword-bit posteriors `L + R` at the right edge.
    pub soft_out: LlrVector,
    /// Layer-0 posteriors of the information bits, CRC-word order.
    pub info_llrs: LlrVector,
    pub x_hat: Vec<u8>,
    pub u_hat: Vec<u8>,
    /// Both stopping conditions held.
    pub converged: bool,
    pub iters_used: usize,
}

struct GraphDecision {
    soft: Vec<f64>,
    info: Vec<f64>,
    x_hat: Vec<u8>,
    u_hat: Vec<u8>,
    converged: bool,
}

fn decide(state: &BpState, graph: &FactorGraph, crc: &crate::crc::CrcSpec) -> GraphDecision {
    let n = graph.n;
    let layer0 = state.posterior(0);
    let soft = state.posterior(n);
    let u_hat = hard_decision(&layer0);
    let x_hat = hard_decision(&soft);
    let mut reencoded = u_hat.clone();
    polar_transform(&mut reencoded);
    let info_bits: Vec<u8> = graph.info_nodes.iter().map(|&v| u_hat[v]).collect();
    let converged = reencoded == x_hat && crc.syndrome_is_zero(&info_bits);
    let info = graph.info_nodes.iter().map(|&v| layer0[v]).collect();
    GraphDecision {
        soft,
        info,
        x_hat,
        u_hat,
        converged,
    }
}

/// Runs CBP on an explicit graph; all vectors stay in graph coordinates.
pub fn decode_on_graph(
    graph: &FactorGraph,
    code: &CodeSpec,
    llr_graph: &[f64],
    cfg: &BpConfig,
) -> Result<(CbpResult, BpState)> {
    cfg.validate()?;
    let mut state = BpState::new(graph, llr_graph, cfg.sat)?;
    let mut decision;
    loop {
        let crc_active = state.iteration >= cfg.i_thr;
        bp_iteration(&mut state, graph, cfg.kernel, crc_active);
        decision = decide(&state, graph, code.crc());
        if decision.converged || state.iteration >= cfg.i_max {
            break;
        }
    }
    let out_sat = 2.0 * cfg.sat;
    let result = CbpResult {
        soft_out: LlrVector::saturated(decision.soft, out_sat),
        info_llrs: LlrVector::saturated(decision.info, out_sat),
        x_hat: decision.x_hat,
        u_hat: decision.u_hat,
        converged: decision.converged,
        iters_used: state.iteration,
    };
    Ok((result, state))
}

/// CBP with input/output relabelling standing in for a layer-permuted graph.
pub fn cbp_decode(
    llr_ch: &[f64],
    code: &CodeSpec,
    perm: &LayerPermutation,
    cfg: &BpConfig,
) -> Result<CbpResult> {
    let graph = FactorGraph::standard(code, perm)?;
    cbp_decode_prepared(llr_ch, code, perm, &graph, cfg)
}

/// [`cbp_decode`] with a graph already built by [`FactorGraph::standard`].
pub(crate) fn cbp_decode_prepared(
    llr_ch: &[f64],
    code: &CodeSpec,
    perm: &LayerPermutation,
    graph: &FactorGraph,
    cfg: &BpConfig,
) -> Result<CbpResult> {
    let size = code.block_len();
    if llr_ch.len() != size {
        return Err(Error::Dimension(format!(
            "channel LLR length {} != N={size}",
            llr_ch.len()
        )));
    }
    let p = bit_index_permutation(perm, code.n())?;
    let mut permuted = vec![0.0; size];
    for i in 0..size {
        permuted[p[i]] = llr_ch[i];
    }
    let (res, _) = decode_on_graph(graph, code, &permuted, cfg)?;
    let back_f = |v: &[f64]| -> Vec<f64> { (0..size).map(|i| v[p[i]]).collect() };
    let back_b = |v: &[u8]| -> Vec<u8> { (0..size).map(|i| v[p[i]]).collect() };
    let sat = res.soft_out.sat();
    Ok(CbpResult {
        soft_out: LlrVector::saturated(back_f(res.soft_out.values()), sat),
        info_llrs: res.info_llrs,
        x_hat: back_b(&res.x_hat),
        u_hat: back_b(&res.u_hat),
        converged: res.converged,
        iters_used: res.iters_used,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{bpsk, channel_llrs};
    use crate::crc::CrcPoly;
    use crate::polar::right_most_layer_permutations;

    /// N=8, information set {3,...,7} (0-based), two message bits, 3-bit CRC.
    fn tiny_code() -> CodeSpec {
        let polar = crate::polar::PolarParams::new(3, vec![3, 4, 5, 6, 7]).unwrap();
        CodeSpec::new(polar, "1011".parse().unwrap()).unwrap()
    }

    fn direct_boxplus(a: f64, b: f64) -> f64 {
        2.0 * ((a / 2.0).tanh() * (b / 2.0).tanh()).atanh()
    }

    #[test]
    fn boxplus_examples() {
        let expected = 2.0 * (1f64.tanh().powi(2)).atanh();
        assert!((boxplus(2.0, 2.0) - expected).abs() < 1e-12);
        assert!((boxplus(2.0, 2.0) - 1.3250).abs() < 1e-3);
        for a in [-7.5, -1.0, 0.0, 0.3, 12.0] {
            assert!((boxplus(DEFAULT_SAT, a) - a).abs() < 1e-6, "a={a}");
            assert_eq!(boxplus(0.0, a), 0.0);
        }
        for &(a, b) in &[(1.0, -3.0), (-0.2, -0.7), (5.0, 4.5), (10.0, -0.01)] {
            assert!((boxplus(a, b) - direct_boxplus(a, b)).abs() < 1e-9);
            assert_eq!(boxplus(a, b), boxplus(b, a));
        }
        assert_eq!(boxplus_minsum(-3.0, 2.0), -2.0);
        assert_eq!(boxplus_minsum(-3.0, -2.5), 2.5);
    }

    #[test]
    fn repetition_pe_update() {
        let graph = FactorGraph::new(1, vec![0], vec![true, false], vec![1], vec![]).unwrap();
        let (l1, l2) = (1.3, -0.4);
        let mut state = BpState::new(&graph, &[l1, l2], DEFAULT_SAT).unwrap();
        bp_iteration(&mut state, &graph, Kernel::Exact, false);
        let post = state.posterior(0);
        assert!((post[1] - (l1 + l2)).abs() < 1e-9, "{}", post[1]);
        // Frozen clamp.
        assert_eq!(state.right(0)[0], DEFAULT_SAT);
    }

    #[test]
    fn zero_llrs_stay_zero() {
        let code = tiny_code();
        let graph = FactorGraph::standard(&code, &LayerPermutation::identity(3)).unwrap();
        let mut state = BpState::new(&graph, &[0.0; 8], DEFAULT_SAT).unwrap();
        for _ in 0..5 {
            bp_iteration(&mut state, &graph, Kernel::Exact, true);
        }
        for layer in 1..=3 {
            assert!(state.left(layer).iter().all(|&v| v == 0.0));
        }
        for i in 0..8 {
            if !graph.is_frozen(i) {
                assert_eq!(state.left(0)[i], 0.0);
            }
        }
    }

    #[test]
    fn noiseless_codeword_converges_immediately() {
        let code = tiny_code();
        for v in 0..(1u32 << code.m()) {
            let msg: Vec<u8> = (0..code.m()).map(|i| ((v >> i) & 1) as u8).collect();
            let x = code.encode(&msg).unwrap();
            let llr = channel_llrs(&bpsk(&x), 1e-6, DEFAULT_SAT).unwrap();
            for perm in right_most_layer_permutations(3, 3) {
                let res = cbp_decode(llr.values(), &code, &perm, &BpConfig::default()).unwrap();
                assert!(res.converged);
                assert_eq!(res.iters_used, 1);
                assert_eq!(res.x_hat, x);
            }
        }
    }

    #[test]
    fn threshold_equal_to_max_never_runs_crc_nodes() {
        let code = CodeSpec::half_rate(4).unwrap();
        let cfg = BpConfig {
            i_max: 7,
            i_thr: 7,
            ..BpConfig::default()
        };
        let graph = FactorGraph::standard(&code, &LayerPermutation::identity(4)).unwrap();
        let llr: Vec<f64> = (0..16).map(|i| ((i * 37 % 11) as f64 - 5.0) / 3.0).collect();
        let (res, state) = decode_on_graph(&graph, &code, &llr, &cfg).unwrap();
        assert!(state.crc_extrinsics().iter().all(|&e| e == 0.0));
        assert!(res.iters_used <= 7);
    }

    #[test]
    fn config_validation() {
        let bad = BpConfig {
            i_thr: 10,
            i_max: 5,
            ..BpConfig::default()
        };
        assert!(bad.validate().is_err());
        assert!(BpConfig { i_max: 0, i_thr: 0, ..BpConfig::default() }.validate().is_err());
        assert_eq!("minsum".parse::<Kernel>().unwrap(), Kernel::MinSum);
        assert!("tanh".parse::<Kernel>().is_err());
    }

    #[test]
    fn converged_results_satisfy_stop_conditions() {
        let code = CodeSpec::constructed(5, 12, CrcPoly::g6(), 2.5).unwrap();
        let sigma2 = crate::channel::ChannelParams::new(2.0, code.rate()).unwrap().sigma2;
        for frame in 0..50 {
            let mut rng = crate::channel::frame_rng(11, frame);
            let msg: Vec<u8> = (0..code.m()).map(|_| rand::Rng::gen_range(&mut rng, 0..2u8)).collect();
            let x = code.encode(&msg).unwrap();
            let y = crate::channel::awgn(&bpsk(&x), sigma2, &mut rng).unwrap();
            let llr = channel_llrs(&y, sigma2, DEFAULT_SAT).unwrap();
            let perm = LayerPermutation::new(vec![0, 1, 4, 2, 3]).unwrap();
            let res = cbp_decode(llr.values(), &code, &perm, &BpConfig::default()).unwrap();
            if res.converged {
                let mut re = res.u_hat.clone();
                polar_transform(&mut re);
                assert_eq!(re, res.x_hat);
                assert!(code.crc().check(&code.polar().extract(&res.u_hat)).unwrap());
                assert!(code.is_codeword(&res.x_hat));
            }
        }
    }
}
