//! Run settings shared by the command line and `key = value` config files.
//!
//! Every key is the long flag name without dashes, e.g. `ebn0-db = 1.5,2.0`.
//! Blank lines and `#` comments are ignored.

use std::path::PathBuf;

use crate::bp::{BpConfig, Kernel};
use crate::channel::DEFAULT_SAT;
use crate::code::{CodeSpec, DEFAULT_DESIGN_SNR_DB};
use crate::crc::CrcPoly;
use crate::error::{Error, Result};
use crate::pipeline::{parse_alpha, DecoderKind, DEFAULT_LIST};
use crate::polar::{info_set_from_order_text, PolarParams};
use crate::sim::{SimConfig, StopRule};

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub n: usize,
    /// Message length; `None` means `N / 2`.
    pub m: Option<usize>,
    pub crc_poly: CrcPoly,
    pub design_snr: f64,
    pub order_file: Option<PathBuf>,
    pub info_set_file: Option<PathBuf>,
    pub ebn0_db: Vec<f64>,
    pub seed: u64,
    pub sat: f64,
    pub decoders: Vec<String>,
    pub alpha: f64,
    pub list: usize,
    pub osd_order: usize,
    pub kernel: Kernel,
    pub i_max: usize,
    pub i_thr: usize,
    pub threads: Option<usize>,
    pub max_frames: u64,
    pub min_frames: u64,
    pub target_errors: u64,
    pub stop: StopRule,
    pub out: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        let bp = BpConfig::default();
        Self {
            n: 8,
            m: None,
            crc_poly: CrcPoly::g6(),
            design_snr: DEFAULT_DESIGN_SNR_DB,
            order_file: None,
            info_set_file: None,
            ebn0_db: vec![2.0],
            seed: 1,
            sat: DEFAULT_SAT,
            decoders: vec!["cbplosd1".into()],
            alpha: 0.5,
            list: DEFAULT_LIST,
            osd_order: 2,
            kernel: bp.kernel,
            i_max: bp.i_max,
            i_thr: bp.i_thr,
            threads: None,
            max_frames: 100_000,
            min_frames: 0,
            target_errors: 100,
            stop: StopRule::Joint,
            out: None,
        }
    }
}

fn parse<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .trim()
        .parse()
        .map_err(|_| Error::Parse(format!("bad value `{value}` for `{key}`")))
}

fn list(value: &str) -> impl Iterator<Item = &str> {
    value.split(',').map(str::trim).filter(|s| !s.is_empty())
}

impl RunConfig {
    /// Applies one setting.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let key = key.trim().replace('_', "-");
        let v = value.trim();
        match key.as_str() {
            "n" => self.n = parse(&key, v)?,
            "m" => self.m = Some(parse(&key, v)?),
            "crc-poly" => self.crc_poly = v.parse()?,
            "design-snr" => self.design_snr = parse(&key, v)?,
            "order-file" => self.order_file = Some(v.into()),
            "info-set-file" => self.info_set_file = Some(v.into()),
            "ebn0-db" => {
                self.ebn0_db = list(v).map(|s| parse(&key, s)).collect::<Result<_>>()?;
            }
            "seed" => self.seed = parse(&key, v)?,
            "sat" => self.sat = parse(&key, v)?,
            "decoder" => self.decoders = list(v).map(str::to_string).collect(),
            "alpha" => self.alpha = parse_alpha(v)?,
            "list" => self.list = parse(&key, v)?,
            "osd-order" => self.osd_order = parse(&key, v)?,
            "kernel" => self.kernel = v.parse()?,
            "i-max" => self.i_max = parse(&key, v)?,
            "i-thr" => self.i_thr = parse(&key, v)?,
            "threads" => self.threads = Some(parse(&key, v)?),
            "max-frames" => self.max_frames = parse(&key, v)?,
            "min-frames" => self.min_frames = parse(&key, v)?,
            "target-errors" => self.target_errors = parse(&key, v)?,
            "stop" => {
                self.stop = match v {
                    "joint" => StopRule::Joint,
                    "per-decoder" => StopRule::PerDecoder,
                    _ => return Err(Error::Parse(format!("stop rule `{v}` is not joint|per-decoder"))),
                }
            }
            "out" => self.out = Some(v.into()),
            _ => return Err(Error::Parse(format!("unknown setting `{key}`"))),
        }
        Ok(())
    }

    /// Applies every `key = value` line of a config file.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (no, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("line {}: expected key = value", no + 1)))?;
            self.set(k, v)
                .map_err(|e| Error::Parse(format!("line {}: {e}", no + 1)))?;
        }
        Ok(())
    }

    pub fn bp(&self) -> BpConfig {
        BpConfig {
            kernel: self.kernel,
            i_max: self.i_max,
            i_thr: self.i_thr,
            sat: self.sat,
        }
    }

    /// Decoder names resolved with the configured `alpha` and `osd-order`.
    pub fn decoder_kinds(&self) -> Result<Vec<DecoderKind>> {
        self.decoders
            .iter()
            .map(|name| {
                let kind = match name.to_ascii_lowercase().as_str() {
                    "pcbplosd2" => DecoderKind::PCbplOsd2 { alpha: self.alpha },
                    "osd" => DecoderKind::PlainOsd { q: self.osd_order },
                    other => other.parse()?,
                };
                kind.validate()?;
                Ok(kind)
            })
            .collect()
    }

    pub fn message_len(&self) -> usize {
        self.m.unwrap_or((1usize << self.n) / 2)
    }

    /// The code: from an information-set file, a reliability-order file, or
    /// Gaussian-approximation construction.
    pub fn code(&self) -> Result<CodeSpec> {
        let k = self.message_len() + self.crc_poly.degree();
        let polar = if let Some(path) = &self.info_set_file {
            let p = PolarParams::from_info_set_text(self.n, &std::fs::read_to_string(path)?)?;
            if self.m.is_some() && p.k() != k {
                return Err(Error::InvalidParameter(format!(
                    "information set has {} entries, expected {k}",
                    p.k()
                )));
            }
            p
        } else if let Some(path) = &self.order_file {
            info_set_from_order_text(self.n, k, &std::fs::read_to_string(path)?)?
        } else {
            return CodeSpec::constructed(self.n, self.message_len(), self.crc_poly.clone(), self.design_snr);
        };
        CodeSpec::new(polar, self.crc_poly.clone())
    }

    pub fn sim_config(&self) -> Result<SimConfig> {
        let cfg = SimConfig {
            ebn0_db: self.ebn0_db.clone(),
            decoders: self.decoder_kinds()?,
            list: self.list,
            bp: self.bp(),
            seed: self.seed,
            max_frames: self.max_frames,
            min_frames: self.min_frames,
            target_errors: self.target_errors,
            stop: self.stop,
            threads: self.threads,
            sigma2_override: None,
            keep_records: false,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}
