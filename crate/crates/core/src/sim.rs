//! Monte-Carlo frame error rate estimation.
//!
//! Frame `i` of every point draws its message and noise from
//! `frame_rng(seed, i)`, so all decoders and all Eb/N0 points see the same
//! underlying randomness. Frames are decoded in fixed-size batches on a
//! worker pool and folded in frame order, which makes every count
//! independent of the thread count.

use std::io::{Read, Write};
use std::path::Path;
use std::time::Instant;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bp::{BpConfig, CbpResult};
use crate::channel::{awgn, bpsk, frame_rng, ChannelParams};
use crate::code::CodeSpec;
use crate::error::{Error, Result};
use crate::pipeline::{DecodeOutput, DecoderBank, DecoderKind, DEFAULT_LIST};

/// Frames decoded between stopping checks.
pub const BATCH: usize = 32;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum StopRule {
    /// A point ends once every decoder has `target_errors` errors, so all
    /// decoders share the same frames.
    #[default]
    Joint,
    /// Each decoder stops on its own count.
    PerDecoder,
}

#[derive(Clone, Debug)]
pub struct SimConfig {
    pub ebn0_db: Vec<f64>,
    pub decoders: Vec<DecoderKind>,
    pub list: usize,
    pub bp: BpConfig,
    pub seed: u64,
    pub max_frames: u64,
    /// Frames simulated before the error target may end a point.
    pub min_frames: u64,
    pub target_errors: u64,
    pub stop: StopRule,
    /// Worker threads; `None` uses the global pool.
    pub threads: Option<usize>,
    /// Replaces the noise variance at every point.
    pub sigma2_override: Option<f64>,
    /// Keep per-frame outcomes for paired analysis.
    pub keep_records: bool,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            ebn0_db: vec![2.0],
            decoders: vec![DecoderKind::CbplOsd1],
            list: DEFAULT_LIST,
            bp: BpConfig::default(),
            seed: 1,
            max_frames: 100_000,
            min_frames: 0,
            target_errors: 100,
            stop: StopRule::Joint,
            threads: None,
            sigma2_override: None,
            keep_records: false,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if self.target_errors == 0 {
            return Err(Error::InvalidParameter("target_errors must be >= 1".into()));
        }
        if self.max_frames == 0 {
            return Err(Error::InvalidParameter("max_frames must be >= 1".into()));
        }
        if self.ebn0_db.is_empty() || self.decoders.is_empty() {
            return Err(Error::InvalidParameter("need at least one Eb/N0 point and one decoder".into()));
        }
        if self.threads == Some(0) {
            return Err(Error::InvalidParameter("threads must be >= 1".into()));
        }
        if let Some(s) = self.sigma2_override {
            if !(s > 0.0) {
                return Err(Error::InvalidParameter(format!("noise variance {s} must be > 0")));
            }
        }
        self.bp.validate()
    }
}

/// One decoder at one Eb/N0 point.
#[derive(Clone, Debug, PartialEq)]
pub struct FerPoint {
    pub decoder: String,
    pub ebn0_db: f64,
    pub frames: u64,
    pub frame_errors: u64,
    pub fer: f64,
    pub ci95_low: f64,
    pub ci95_high: f64,
    pub mean_iters: f64,
    pub seed: u64,
    /// Errors when an invalid (non-converged) CBP/CBPL output also counts
    /// as an error.
    pub strict_errors: u64,
    pub wallclock_s: f64,
}

/// Per-frame outcome of every decoder, in bank order.
#[derive(Clone, Debug)]
pub struct FrameRecord {
    pub index: u64,
    /// `None` once the decoder has stopped (per-decoder rule only).
    pub errors: Vec<Option<bool>>,
    pub distances: Vec<Option<f64>>,
}

#[derive(Clone, Debug)]
pub struct PointRecords {
    pub ebn0_db: f64,
    pub frames: Vec<FrameRecord>,
}

#[derive(Clone, Debug, Default)]
pub struct SimResult {
    /// Ordered by point, then decoder.
    pub points: Vec<FerPoint>,
    pub records: Vec<PointRecords>,
}

impl SimResult {
    pub fn point(&self, decoder: &DecoderKind, ebn0_db: f64) -> Option<&FerPoint> {
        let name = decoder.to_string();
        self.points
            .iter()
            .find(|p| p.decoder == name && p.ebn0_db == ebn0_db)
    }
}

/// What an observer sees for every frame that is counted.
pub struct FrameView<'a> {
    pub ebn0_db: f64,
    pub index: u64,
    pub transmitted: &'a [u8],
    pub y: &'a [f64],
    pub branches: &'a [CbpResult],
    pub outputs: &'a [Option<DecodeOutput>],
}

/// Transmitted codeword and channel output of frame `index`.
pub fn generate_frame(code: &CodeSpec, seed: u64, index: u64, sigma2: f64) -> Result<(Vec<u8>, Vec<f64>)> {
    let mut rng = frame_rng(seed, index);
    let msg: Vec<u8> = (0..code.m()).map(|_| rng.gen_range(0..2u8)).collect();
    let x = code.encode(&msg)?;
    let y = awgn(&bpsk(&x), sigma2, &mut rng)?;
    Ok((x, y))
}

/// 95% Wilson score interval.
pub fn wilson_interval(errors: u64, frames: u64) -> (f64, f64) {
    if frames == 0 {
        return (0.0, 1.0);
    }
    let z = 1.959_963_984_540_054;
    let n = frames as f64;
    let p = errors as f64 / n;
    let denom = 1.0 + z * z / n;
    let centre = (p + z * z / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z * z / (4.0 * n * n)).sqrt() / denom;
    ((centre - half).max(0.0), (centre + half).min(1.0))
}

struct Tally {
    frames: u64,
    errors: u64,
    strict: u64,
    iters: f64,
    done: bool,
}

pub fn run_fer(code: &CodeSpec, cfg: &SimConfig) -> Result<SimResult> {
    run_fer_observed(code, cfg, |_| {})
}

/// [`run_fer`] calling `observe` on every counted frame, in frame order.
pub fn run_fer_observed<F>(code: &CodeSpec, cfg: &SimConfig, mut observe: F) -> Result<SimResult>
where
    F: FnMut(&FrameView<'_>),
{
    cfg.validate()?;
    let bank = DecoderBank::new(code.clone(), cfg.bp, cfg.list, cfg.decoders.clone())?;
    let pool = match cfg.threads {
        Some(t) => Some(
            rayon::ThreadPoolBuilder::new()
                .num_threads(t)
                .build()
                .map_err(|e| Error::InvalidParameter(format!("thread pool: {e}")))?,
        ),
        None => None,
    };
    let mut result = SimResult::default();
    for &db in &cfg.ebn0_db {
        let sigma2 = match cfg.sigma2_override {
            Some(s) => s,
            None => ChannelParams::new(db, code.rate())?.sigma2,
        };
        let (points, records) = run_point(&bank, cfg, db, sigma2, pool.as_ref(), &mut observe)?;
        result.points.extend(points);
        if let Some(r) = records {
            result.records.push(r);
        }
    }
    Ok(result)
}

type Decoded = (Vec<u8>, Vec<f64>, Vec<CbpResult>, Vec<Option<DecodeOutput>>);

fn run_point<F>(
    bank: &DecoderBank,
    cfg: &SimConfig,
    db: f64,
    sigma2: f64,
    pool: Option<&rayon::ThreadPool>,
    observe: &mut F,
) -> Result<(Vec<FerPoint>, Option<PointRecords>)>
where
    F: FnMut(&FrameView<'_>),
{
    let start = Instant::now();
    let nd = bank.kinds().len();
    let mut tallies: Vec<Tally> = (0..nd)
        .map(|_| Tally {
            frames: 0,
            errors: 0,
            strict: 0,
            iters: 0.0,
            done: false,
        })
        .collect();
    let mut records = cfg.keep_records.then(|| PointRecords {
        ebn0_db: db,
        frames: Vec::new(),
    });
    let mut next: u64 = 0;
    let mut finished = false;
    while !finished && next < cfg.max_frames {
        let end = (next + BATCH as u64).min(cfg.max_frames);
        let active: Vec<bool> = tallies.iter().map(|t| !t.done).collect();
        let decode_one = |i: u64| -> Result<Decoded> {
            let (x, y) = generate_frame(bank.code(), cfg.seed, i, sigma2)?;
            let (branches, outputs) = bank.decode_frame_masked(&y, sigma2, Some(&active))?;
            Ok((x, y, branches, outputs))
        };
        let batch: Vec<Result<Decoded>> = match pool {
            Some(p) => p.install(|| (next..end).into_par_iter().map(decode_one).collect()),
            None => (next..end).into_par_iter().map(decode_one).collect(),
        };
        for (offset, item) in batch.into_iter().enumerate() {
            let index = next + offset as u64;
            let (x, y, branches, mut outputs) = item?;
            for (d, t) in tallies.iter().enumerate() {
                if t.done {
                    outputs[d] = None;
                }
            }
            let mut rec = FrameRecord {
                index,
                errors: vec![None; nd],
                distances: vec![None; nd],
            };
            for (d, out) in outputs.iter().enumerate() {
                let Some(out) = out else { continue };
                let t = &mut tallies[d];
                let err = out.codeword != x;
                t.frames += 1;
                t.errors += err as u64;
                t.strict += (err || !out.valid) as u64;
                t.iters += out.iterations;
                rec.errors[d] = Some(err);
                rec.distances[d] = Some(out.distance);
            }
            observe(&FrameView {
                ebn0_db: db,
                index,
                transmitted: &x,
                y: &y,
                branches: &branches,
                outputs: &outputs,
            });
            if let Some(r) = records.as_mut() {
                r.frames.push(rec);
            }
            let frames = index + 1;
            if frames >= cfg.min_frames {
                match cfg.stop {
                    StopRule::Joint => {
                        if tallies.iter().all(|t| t.errors >= cfg.target_errors) {
                            finished = true;
                        }
                    }
                    StopRule::PerDecoder => {
                        for t in tallies.iter_mut() {
                            if t.errors >= cfg.target_errors {
                                t.done = true;
                            }
                        }
                        finished = tallies.iter().all(|t| t.done);
                    }
                }
            }
            if finished {
                break;
            }
        }
        next = end;
    }
    let wall = start.elapsed().as_secs_f64();
    let points = bank
        .kinds()
        .iter()
        .zip(&tallies)
        .map(|(kind, t)| {
            let (lo, hi) = wilson_interval(t.errors, t.frames);
            FerPoint {
                decoder: kind.to_string(),
                ebn0_db: db,
                frames: t.frames,
                frame_errors: t.errors,
                fer: if t.frames == 0 { 0.0 } else { t.errors as f64 / t.frames as f64 },
                ci95_low: lo,
                ci95_high: hi,
                mean_iters: if t.frames == 0 { 0.0 } else { t.iters / t.frames as f64 },
                seed: cfg.seed,
                strict_errors: t.strict,
                wallclock_s: wall,
            }
        })
        .collect();
    Ok((points, records))
}

#[derive(Debug, Serialize, Deserialize)]
struct CsvRow {
    decoder: String,
    ebn0_db: f64,
    frames: u64,
    frame_errors: u64,
    fer: f64,
    ci95_low: f64,
    ci95_high: f64,
    mean_iters: f64,
    seed: u64,
}

pub const CSV_HEADER: &str = "decoder,ebn0_db,frames,frame_errors,fer,ci95_low,ci95_high,mean_iters,seed";

pub fn write_csv<W: Write>(points: &[FerPoint], out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    w.write_record(CSV_HEADER.split(','))?;
    for p in points {
        w.serialize(CsvRow {
            decoder: p.decoder.clone(),
            ebn0_db: p.ebn0_db,
            frames: p.frames,
            frame_errors: p.frame_errors,
            fer: p.fer,
            ci95_low: p.ci95_low,
            ci95_high: p.ci95_high,
            mean_iters: p.mean_iters,
            seed: p.seed,
        })?;
    }
    w.flush()?;
    Ok(())
}

pub fn csv_string(points: &[FerPoint]) -> Result<String> {
    let mut buf = Vec::new();
    write_csv(points, &mut buf)?;
    String::from_utf8(buf).map_err(|e| Error::Parse(e.to_string()))
}

pub fn emit_csv(points: &[FerPoint], path: &Path) -> Result<()> {
    let file = std::fs::File::create(path)?;
    write_csv(points, std::io::BufWriter::new(file))
}

/// Reads rows written by [`write_csv`]; fields absent from the CSV are zero.
pub fn read_csv<R: Read>(input: R) -> Result<Vec<FerPoint>> {
    let mut r = csv::Reader::from_reader(input);
    let header: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
    if header.join(",") != CSV_HEADER {
        return Err(Error::Parse(format!("unexpected CSV header `{}`", header.join(","))));
    }
    r.deserialize::<CsvRow>()
        .map(|row| {
            let row = row?;
            Ok(FerPoint {
                decoder: row.decoder,
                ebn0_db: row.ebn0_db,
                frames: row.frames,
                frame_errors: row.frame_errors,
                fer: row.fer,
                ci95_low: row.ci95_low,
                ci95_high: row.ci95_high,
                mean_iters: row.mean_iters,
                seed: row.seed,
                strict_errors: 0,
                wallclock_s: 0.0,
            })
        })
        .collect()
}

/// Paired comparison of decoders `a` and `b` over shared frames.
#[derive(Clone, Debug, PartialEq)]
pub struct PairedTest {
    pub frames: u64,
    /// Frames where only `a` failed.
    pub a_only: u64,
    /// Frames where only `b` failed.
    pub b_only: u64,
    /// One-sided p-value for `FER(a) > FER(b)` from the discordant counts.
    pub p_value: f64,
}

impl PairedTest {
    /// No significant evidence at 95% that `a` is worse than `b`.
    pub fn a_not_worse(&self) -> bool {
        self.p_value >= 0.05
    }
}

/// Exact sign test on the frames where both decoders were counted.
pub fn paired_test(records: &PointRecords, a: usize, b: usize) -> PairedTest {
    let (mut frames, mut a_only, mut b_only) = (0, 0, 0);
    for f in &records.frames {
        if let (Some(ea), Some(eb)) = (f.errors[a], f.errors[b]) {
            frames += 1;
            match (ea, eb) {
                (true, false) => a_only += 1,
                (false, true) => b_only += 1,
                _ => {}
            }
        }
    }
    let p_value = binomial_upper_tail(a_only, a_only + b_only);
    PairedTest {
        frames,
        a_only,
        b_only,
        p_value,
    }
}

/// `P(X >= k)` for `X ~ Binomial(n, 1/2)`.
fn binomial_upper_tail(k: u64, n: u64) -> f64 {
    use statrs::distribution::{Binomial, DiscreteCDF};
    if k == 0 || n == 0 {
        return 1.0;
    }
    let dist = Binomial::new(0.5, n).expect("valid binomial");
    dist.sf(k - 1)
}
