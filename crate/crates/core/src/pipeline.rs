//! Composite decoders built from parallel CBP branches and OSD.

use std::fmt;
use std::str::FromStr;

use crate::bp::{cbp_decode_prepared, BpConfig, CbpResult, FactorGraph};
use crate::channel::{channel_llrs, squared_distance};
use crate::code::CodeSpec;
use crate::error::{Error, Result};
use crate::osd::{self, OsdContext, OsdOrder, PairSearch};
use crate::polar::{right_most_layer_permutations, LayerPermutation};

/// Default number of CBP branches.
pub const DEFAULT_LIST: usize = 6;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum DecoderKind {
    Cbp,
    Cbpl,
    CbpOsd1,
    CbplOsd1,
    CbplOsd2,
    /// Partial order-2 over `round(alpha * C(m, 2))` pairs.
    PCbplOsd2 { alpha: f64 },
    /// OSD of order `q` on the channel LLRs.
    PlainOsd { q: usize },
}

impl DecoderKind {
    /// Branches this decoder uses for list size `list`.
    pub fn branches(&self, list: usize) -> usize {
        match self {
            DecoderKind::Cbp | DecoderKind::CbpOsd1 => 1,
            DecoderKind::PlainOsd { .. } => 0,
            _ => list,
        }
    }

    fn osd_order(&self, m: usize) -> Option<OsdOrder> {
        match *self {
            DecoderKind::Cbp | DecoderKind::Cbpl => None,
            DecoderKind::CbpOsd1 | DecoderKind::CbplOsd1 => Some(OsdOrder::One),
            DecoderKind::CbplOsd2 => Some(OsdOrder::Two(None)),
            DecoderKind::PCbplOsd2 { alpha } => Some(OsdOrder::Two(Some(partial_pairs(alpha, m)))),
            DecoderKind::PlainOsd { q } => Some(match q {
                0 => OsdOrder::Zero,
                1 => OsdOrder::One,
                _ => OsdOrder::Two(None),
            }),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            DecoderKind::PCbplOsd2 { alpha } if !(alpha > 0.0 && alpha <= 1.0) => Err(
                Error::InvalidParameter(format!("alpha {alpha} must lie in (0, 1]")),
            ),
            DecoderKind::PlainOsd { q } if q > 2 => Err(Error::InvalidParameter(format!(
                "plain OSD order {q} unsupported (0, 1 or 2)"
            ))),
            _ => Ok(()),
        }
    }
}

impl fmt::Display for DecoderKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DecoderKind::Cbp => write!(f, "cbp"),
            DecoderKind::Cbpl => write!(f, "cbpl"),
            DecoderKind::CbpOsd1 => write!(f, "cbposd1"),
            DecoderKind::CbplOsd1 => write!(f, "cbplosd1"),
            DecoderKind::CbplOsd2 => write!(f, "cbplosd2"),
            DecoderKind::PCbplOsd2 { alpha } => write!(f, "pcbplosd2@{alpha}"),
            DecoderKind::PlainOsd { q } => write!(f, "osd{q}"),
        }
    }
}

impl FromStr for DecoderKind {
    type Err = Error;

    /// Names as printed by `Display`; `pcbplosd2` alone means alpha = 1/2
    /// and `osd` alone means order 2.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim().to_ascii_lowercase();
        Ok(match s.as_str() {
            "cbp" => DecoderKind::Cbp,
            "cbpl" => DecoderKind::Cbpl,
            "cbposd1" => DecoderKind::CbpOsd1,
            "cbplosd1" => DecoderKind::CbplOsd1,
            "cbplosd2" => DecoderKind::CbplOsd2,
            "pcbplosd2" => DecoderKind::PCbplOsd2 { alpha: 0.5 },
            "osd" => DecoderKind::PlainOsd { q: 2 },
            _ => {
                if let Some(a) = s.strip_prefix("pcbplosd2@") {
                    let alpha = parse_alpha(a)?;
                    DecoderKind::PCbplOsd2 { alpha }
                } else if let Some(q) = s.strip_prefix("osd") {
                    let q = q
                        .parse()
                        .map_err(|_| Error::Parse(format!("bad OSD order in `{s}`")))?;
                    DecoderKind::PlainOsd { q }
                } else {
                    return Err(Error::Parse(format!("unknown decoder `{s}`")));
                }
            }
        })
    }
}

/// Accepts decimals and simple fractions such as `1/8`.
pub fn parse_alpha(s: &str) -> Result<f64> {
    let bad = || Error::Parse(format!("bad alpha `{s}`"));
    let v = match s.split_once('/') {
        Some((a, b)) => {
            let (a, b): (f64, f64) = (a.trim().parse().map_err(|_| bad())?, b.trim().parse().map_err(|_| bad())?);
            a / b
        }
        None => s.trim().parse().map_err(|_| bad())?,
    };
    Ok(v)
}

/// `max(1, round(alpha * m (m-1) / 2))`, capped at the number of pairs.
pub fn partial_pairs(alpha: f64, m: usize) -> usize {
    let total = m * m.saturating_sub(1) / 2;
    ((alpha * total as f64).round() as usize).clamp(1, total.max(1))
}

#[derive(Clone, Debug, PartialEq)]
pub struct DecoderConfig {
    pub kind: DecoderKind,
    pub list: usize,
    pub bp: BpConfig,
}

impl DecoderConfig {
    pub fn new(kind: DecoderKind) -> Self {
        Self {
            kind,
            list: DEFAULT_LIST,
            bp: BpConfig::default(),
        }
    }

    pub fn validate(&self, code: &CodeSpec) -> Result<()> {
        self.kind.validate()?;
        self.bp.validate()?;
        let available = permutations_for(code.n(), usize::MAX).len();
        if self.list == 0 || self.list > available {
            return Err(Error::InvalidParameter(format!(
                "list size {} outside 1..={available}",
                self.list
            )));
        }
        Ok(())
    }
}

/// Branch permutations: identity first, then the right-most layer orderings.
pub fn permutations_for(n: usize, list: usize) -> Vec<LayerPermutation> {
    let all = right_most_layer_permutations(n, usize::MAX);
    all.into_iter().take(list).collect()
}

/// One decoder's decision for a frame.
#[derive(Clone, Debug, PartialEq)]
pub struct DecodeOutput {
    pub codeword: Vec<u8>,
    /// The output came from a converged branch or from OSD. False only for
    /// the CBP/CBPL hard-decision fallback.
    pub valid: bool,
    pub distance: f64,
    /// Mean BP iterations over the branches this decoder used.
    pub iterations: f64,
}

fn mean_iters(branches: &[CbpResult]) -> f64 {
    if branches.is_empty() {
        return 0.0;
    }
    branches.iter().map(|b| b.iters_used as f64).sum::<f64>() / branches.len() as f64
}

/// CBPL selection over already-decoded branches.
pub fn select_cbpl(y: &[f64], branches: &[CbpResult]) -> DecodeOutput {
    let pick = |only_converged: bool| {
        branches
            .iter()
            .filter(|b| b.converged || !only_converged)
            .map(|b| (squared_distance(y, &b.x_hat), b))
            .fold(None, |best: Option<(f64, &CbpResult)>, cur| match best {
                Some(b) if b.0 <= cur.0 => Some(b),
                _ => Some(cur),
            })
    };
    let (valid, (distance, branch)) = match pick(true) {
        Some(v) => (true, v),
        None => (false, pick(false).expect("at least one branch")),
    };
    DecodeOutput {
        codeword: branch.x_hat.clone(),
        valid,
        distance,
        iterations: mean_iters(branches),
    }
}

/// Runs the first `list` CBP branches.
pub fn run_branches(
    y: &[f64],
    sigma2: f64,
    code: &CodeSpec,
    bp: &BpConfig,
    list: usize,
) -> Result<Vec<CbpResult>> {
    let llr = channel_llrs(y, sigma2, bp.sat)?;
    permutations_for(code.n(), list)
        .iter()
        .map(|p| crate::bp::cbp_decode(llr.values(), code, p, bp))
        .collect()
}

/// CBP (`list = 1`) or CBPL.
pub fn decode_cbpl(y: &[f64], sigma2: f64, cfg: &DecoderConfig, code: &CodeSpec) -> Result<DecodeOutput> {
    cfg.validate(code)?;
    let branches = run_branches(y, sigma2, code, &cfg.bp, cfg.kind.branches(cfg.list).max(1))?;
    Ok(select_cbpl(y, &branches))
}

/// CBPOSD(1), CBPLOSD(q) and P-CBPLOSD(2, alpha): OSD on every branch's soft
/// output, then the candidate closest to `y`.
pub fn decode_cbplosd(
    y: &[f64],
    sigma2: f64,
    cfg: &DecoderConfig,
    code: &CodeSpec,
) -> Result<DecodeOutput> {
    cfg.validate(code)?;
    let order = match cfg.kind {
        DecoderKind::CbpOsd1 | DecoderKind::CbplOsd1 | DecoderKind::CbplOsd2 | DecoderKind::PCbplOsd2 { .. } => {
            cfg.kind.osd_order(code.m()).expect("OSD kind")
        }
        other => {
            return Err(Error::InvalidParameter(format!("{other} is not a CBP+OSD decoder")));
        }
    };
    let branches = run_branches(y, sigma2, code, &cfg.bp, cfg.kind.branches(cfg.list))?;
    let mut best: Option<osd::OsdOutcome> = None;
    for b in &branches {
        let out = osd::decode_osd_detailed(code.g_aug(), b.soft_out.values(), y, order)?;
        if best.as_ref().is_none_or(|cur| out.distance < cur.distance) {
            best = Some(out);
        }
    }
    let best = best.expect("at least one branch");
    Ok(DecodeOutput {
        codeword: best.codeword,
        valid: true,
        distance: best.distance,
        iterations: mean_iters(&branches),
    })
}

/// OSD(q) directly on the channel LLRs.
pub fn decode_plain_osd(y: &[f64], sigma2: f64, q: usize, code: &CodeSpec, sat: f64) -> Result<DecodeOutput> {
    let llr = channel_llrs(y, sigma2, sat)?;
    let out = osd::decode_osd_detailed(code.g_aug(), llr.values(), y, OsdOrder::from_order(q, None)?)?;
    Ok(DecodeOutput {
        codeword: out.codeword,
        valid: true,
        distance: out.distance,
        iterations: 0.0,
    })
}

/// Any decoder kind, run on its own.
pub fn decode(y: &[f64], sigma2: f64, cfg: &DecoderConfig, code: &CodeSpec) -> Result<DecodeOutput> {
    match cfg.kind {
        DecoderKind::Cbp | DecoderKind::Cbpl => decode_cbpl(y, sigma2, cfg, code),
        DecoderKind::PlainOsd { q } => {
            cfg.kind.validate()?;
            decode_plain_osd(y, sigma2, q, code, cfg.bp.sat)
        }
        _ => decode_cbplosd(y, sigma2, cfg, code),
    }
}

/// Everything decoded for one frame by a [`DecoderBank`].
#[derive(Clone, Debug)]
pub struct FrameDecode {
    pub branches: Vec<CbpResult>,
    /// One entry per bank decoder, in bank order.
    pub outputs: Vec<DecodeOutput>,
}

/// Several decoders evaluated on the same frames. CBP branches, OSD
/// contexts and pair scores are computed once per frame and shared, which
/// gives the same decisions as running each decoder separately.
#[derive(Clone, Debug)]
pub struct DecoderBank {
    code: CodeSpec,
    bp: BpConfig,
    list: usize,
    kinds: Vec<DecoderKind>,
    perms: Vec<LayerPermutation>,
    graphs: Vec<FactorGraph>,
}

/// Per-branch OSD state kept across the decoders of one frame.
struct BranchOsd<'a> {
    order1: osd::Candidate,
    pairs: Option<PairSearch<'a>>,
}

impl DecoderBank {
    pub fn new(code: CodeSpec, bp: BpConfig, list: usize, kinds: Vec<DecoderKind>) -> Result<Self> {
        if kinds.is_empty() {
            return Err(Error::InvalidParameter("no decoders given".into()));
        }
        for k in &kinds {
            DecoderConfig { kind: *k, list, bp }.validate(&code)?;
        }
        let needed = kinds.iter().map(|k| k.branches(list)).max().unwrap_or(0);
        let perms = permutations_for(code.n(), needed);
        let graphs = perms
            .iter()
            .map(|p| FactorGraph::standard(&code, p))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            code,
            bp,
            list,
            kinds,
            perms,
            graphs,
        })
    }

    pub fn code(&self) -> &CodeSpec {
        &self.code
    }

    pub fn kinds(&self) -> &[DecoderKind] {
        &self.kinds
    }

    pub fn list(&self) -> usize {
        self.list
    }

    pub fn bp(&self) -> &BpConfig {
        &self.bp
    }

    pub fn decode_frame(&self, y: &[f64], sigma2: f64) -> Result<FrameDecode> {
        let (branches, outputs) = self.decode_frame_masked(y, sigma2, None)?;
        Ok(FrameDecode {
            branches,
            outputs: outputs.into_iter().map(|o| o.expect("unmasked")).collect(),
        })
    }

    /// Like [`decode_frame`](Self::decode_frame) but only for decoders whose
    /// `active` entry is true; only the branches those need are run.
    pub fn decode_frame_masked(
        &self,
        y: &[f64],
        sigma2: f64,
        active: Option<&[bool]>,
    ) -> Result<(Vec<CbpResult>, Vec<Option<DecodeOutput>>)> {
        let is_active = |d: usize| active.is_none_or(|a| a[d]);
        let llr = channel_llrs(y, sigma2, self.bp.sat)?;
        let needed = (0..self.kinds.len())
            .filter(|&d| is_active(d))
            .map(|d| self.kinds[d].branches(self.list))
            .max()
            .unwrap_or(0);
        let branches = self
            .perms
            .iter()
            .zip(&self.graphs)
            .take(needed)
            .map(|(p, g)| cbp_decode_prepared(llr.values(), &self.code, p, g, &self.bp))
            .collect::<Result<Vec<_>>>()?;

        let m = self.code.m();
        let osd_branches = (0..self.kinds.len())
            .filter(|&d| is_active(d))
            .map(|d| self.kinds[d])
            .filter(|k| !matches!(k, DecoderKind::PlainOsd { .. }) && k.osd_order(m).is_some())
            .map(|k| k.branches(self.list))
            .max()
            .unwrap_or(0);
        let contexts: Vec<OsdContext> = branches[..osd_branches]
            .iter()
            .map(|b| osd::build_context(self.code.g_aug(), b.soft_out.values(), y))
            .collect::<Result<_>>()?;
        let mut states: Vec<BranchOsd> = contexts
            .iter()
            .map(|ctx| BranchOsd {
                order1: osd::reprocess_order1(ctx),
                pairs: (ctx.k() >= 2).then(|| PairSearch::new(ctx)),
            })
            .collect();

        let mut outputs = Vec::with_capacity(self.kinds.len());
        for (d, kind) in self.kinds.iter().enumerate() {
            if !is_active(d) {
                outputs.push(None);
                continue;
            }
            let used = kind.branches(self.list);
            let out = match kind.osd_order(m) {
                None => select_cbpl(y, &branches[..used]),
                Some(order) if matches!(kind, DecoderKind::PlainOsd { .. }) => {
                    let o = osd::decode_osd_detailed(self.code.g_aug(), llr.values(), y, order)?;
                    DecodeOutput {
                        codeword: o.codeword,
                        valid: true,
                        distance: o.distance,
                        iterations: 0.0,
                    }
                }
                Some(order) => {
                    let mut best: Option<osd::OsdOutcome> = None;
                    for (ctx, st) in contexts.iter().zip(states.iter_mut()).take(used) {
                        let winner = match order {
                            OsdOrder::Zero => osd::reprocess_order0(ctx),
                            OsdOrder::One => st.order1.clone(),
                            OsdOrder::Two(partial) => match st.pairs.as_mut() {
                                None => st.order1.clone(),
                                Some(search) => {
                                    let found = match partial {
                                        None => search.best_all(),
                                        Some(mm) => search.best_of_first(mm),
                                    };
                                    match found {
                                        Some((score, (i, j))) if score > st.order1.score => osd::Candidate {
                                            pattern: vec![i, j],
                                            score,
                                            codeword: ctx.codeword_for(&[i, j]),
                                        },
                                        _ => st.order1.clone(),
                                    }
                                }
                            },
                        };
                        let o = osd::finish(ctx, winner, y);
                        if best.as_ref().is_none_or(|cur| o.distance < cur.distance) {
                            best = Some(o);
                        }
                    }
                    let best = best.expect("at least one branch");
                    DecodeOutput {
                        codeword: best.codeword,
                        valid: true,
                        distance: best.distance,
                        iterations: mean_iters(&branches[..used]),
                    }
                }
            };
            outputs.push(Some(out));
        }
        Ok((branches, outputs))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{awgn, bpsk, frame_rng, ChannelParams};
    use rand::Rng;

    fn all_kinds() -> Vec<DecoderKind> {
        vec![
            DecoderKind::Cbp,
            DecoderKind::Cbpl,
            DecoderKind::CbpOsd1,
            DecoderKind::CbplOsd1,
            DecoderKind::CbplOsd2,
            DecoderKind::PCbplOsd2 { alpha: 0.5 },
            DecoderKind::PCbplOsd2 { alpha: 0.125 },
            DecoderKind::PlainOsd { q: 1 },
        ]
    }

    fn frame(code: &CodeSpec, seed: u64, idx: u64, sigma2: f64) -> (Vec<u8>, Vec<f64>) {
        let mut rng = frame_rng(seed, idx);
        let msg: Vec<u8> = (0..code.m()).map(|_| rng.gen_range(0..2u8)).collect();
        let x = code.encode(&msg).unwrap();
        let y = awgn(&bpsk(&x), sigma2, &mut rng).unwrap();
        (x, y)
    }

    #[test]
    fn names_round_trip() {
        for k in all_kinds() {
            assert_eq!(k.to_string().parse::<DecoderKind>().unwrap(), k);
        }
        assert_eq!(
            "pcbplosd2@1/8".parse::<DecoderKind>().unwrap(),
            DecoderKind::PCbplOsd2 { alpha: 0.125 }
        );
        assert!("sc".parse::<DecoderKind>().is_err());
        assert!(DecoderKind::PCbplOsd2 { alpha: 0.0 }.validate().is_err());
    }

    #[test]
    fn partial_pair_budget() {
        assert_eq!(partial_pairs(0.5, 128), 4064);
        assert_eq!(partial_pairs(0.125, 128), 1016);
        assert_eq!(partial_pairs(1e-9, 128), 1);
        assert_eq!(partial_pairs(1.0, 3), 3);
    }

    #[test]
    fn permutation_list_is_distinct_and_identity_first() {
        let p = permutations_for(8, 6);
        assert_eq!(p.len(), 6);
        assert!(p[0].is_identity());
        let set: std::collections::HashSet<_> = p.iter().collect();
        assert_eq!(set.len(), 6);
    }

    #[test]
    fn noiseless_frames_decode_everywhere() {
        let code = CodeSpec::half_rate(5).unwrap();
        let bank = DecoderBank::new(code.clone(), BpConfig::default(), 6, all_kinds()).unwrap();
        let (x, _) = frame(&code, 1, 0, 1.0);
        let y = bpsk(&x);
        let fd = bank.decode_frame(&y, 1e-3).unwrap();
        assert!(fd.branches.iter().all(|b| b.converged && b.x_hat == x));
        for out in fd.outputs {
            assert_eq!(out.codeword, x);
            assert!(out.valid);
            assert_eq!(out.distance, 0.0);
        }
    }

    #[test]
    fn selection_prefers_closest_converged_branch() {
        let code = CodeSpec::half_rate(5).unwrap();
        let y = vec![0.5; 32];
        let mut branches = run_branches(&y, 0.5, &code, &BpConfig::default(), 3).unwrap();
        let a = vec![0u8; 32];
        let mut b = vec![0u8; 32];
        b[0] = 1;
        for (br, (cw, conv)) in branches.iter_mut().zip([(b.clone(), true), (a.clone(), false), (b.clone(), true)]) {
            br.x_hat = cw;
            br.converged = conv;
        }
        let out = select_cbpl(&y, &branches);
        assert!(out.valid);
        assert_eq!(out.codeword, b);
        branches[1].converged = true;
        assert_eq!(select_cbpl(&y, &branches).codeword, a);
        for br in &mut branches {
            br.converged = false;
        }
        let fallback = select_cbpl(&y, &branches);
        assert!(!fallback.valid);
        assert_eq!(fallback.codeword, a);
    }

    #[test]
    fn bank_matches_individual_decoders() {
        let code = CodeSpec::half_rate(6).unwrap();
        let sigma2 = ChannelParams::new(1.5, code.rate()).unwrap().sigma2;
        let kinds = all_kinds();
        let bank = DecoderBank::new(code.clone(), BpConfig::default(), 6, kinds.clone()).unwrap();
        for idx in 0..12 {
            let (_, y) = frame(&code, 77, idx, sigma2);
            let fd = bank.decode_frame(&y, sigma2).unwrap();
            for (kind, shared) in kinds.iter().zip(&fd.outputs) {
                let alone = decode(&y, sigma2, &DecoderConfig::new(*kind), &code).unwrap();
                assert_eq!(&alone, shared, "{kind} frame {idx}");
            }
        }
    }

    #[test]
    fn single_branch_list_equals_cbp() {
        let code = CodeSpec::half_rate(5).unwrap();
        let sigma2 = ChannelParams::new(1.0, code.rate()).unwrap().sigma2;
        for idx in 0..10 {
            let (_, y) = frame(&code, 5, idx, sigma2);
            let cfg = DecoderConfig {
                list: 1,
                ..DecoderConfig::new(DecoderKind::Cbpl)
            };
            let list1 = decode(&y, sigma2, &cfg, &code).unwrap();
            let llr = channel_llrs(&y, sigma2, cfg.bp.sat).unwrap();
            let cbp = crate::bp::cbp_decode(llr.values(), &code, &LayerPermutation::identity(5), &cfg.bp).unwrap();
            assert_eq!(list1.codeword, cbp.x_hat);
            assert_eq!(list1.valid, cbp.converged);
        }
    }

    #[test]
    fn per_frame_orderings() {
        let code = CodeSpec::half_rate(6).unwrap();
        let sigma2 = ChannelParams::new(1.0, code.rate()).unwrap().sigma2;
        let kinds = vec![
            DecoderKind::Cbpl,
            DecoderKind::CbplOsd1,
            DecoderKind::CbplOsd2,
            DecoderKind::PCbplOsd2 { alpha: 0.5 },
            DecoderKind::PlainOsd { q: 0 },
            DecoderKind::PlainOsd { q: 1 },
        ];
        let bank = DecoderBank::new(code.clone(), BpConfig::default(), 6, kinds).unwrap();
        for idx in 0..40 {
            let (_, y) = frame(&code, 9, idx, sigma2);
            let o = bank.decode_frame(&y, sigma2).unwrap().outputs;
            let eps = 1e-9;
            if o[0].valid {
                assert!(o[1].distance <= o[0].distance + eps);
            }
            assert!(o[2].distance <= o[3].distance + eps);
            assert!(o[3].distance <= o[1].distance + eps);
            assert!(o[5].distance <= o[4].distance + eps);
            for out in &o[1..] {
                assert!(code.is_codeword(&out.codeword));
            }
        }
    }
}
