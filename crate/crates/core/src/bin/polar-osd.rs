use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use polar_osd::channel::{bpsk, channel_llrs, squared_distance, ChannelParams};
use polar_osd::config::RunConfig;
use polar_osd::pipeline::{permutations_for, DecoderBank};
use polar_osd::polar::{reliability_order, reliability_order_text};
use polar_osd::sim::{generate_frame, run_fer, write_csv};
use polar_osd::{Error, Result};

#[derive(Parser)]
#[command(name = "polar-osd", version, about = "CRC-aided BP list and OSD decoding of polar codes")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print the information set (1-based, one index per line).
    Construct {
        #[command(flatten)]
        opts: Opts,
        /// Print the full reliability order instead.
        #[arg(long)]
        order: bool,
    },
    /// Run FER simulations and write CSV.
    Simulate {
        #[command(flatten)]
        opts: Opts,
    },
    /// Decode a single frame and print per-branch diagnostics.
    DecodeOne {
        #[command(flatten)]
        opts: Opts,
        /// File with channel LLRs (whitespace separated). Without it a frame
        /// is drawn from the seed at the first Eb/N0 point.
        #[arg(long)]
        llr_file: Option<PathBuf>,
        /// Message as hex, most significant bit first, sent through the
        /// channel at the first Eb/N0 point.
        #[arg(long, conflicts_with = "llr_file")]
        hex: Option<String>,
        /// Frame index used with the seed.
        #[arg(long, default_value_t = 0)]
        frame: u64,
    },
}

/// Flags mirrored by config-file keys of the same name.
#[derive(Args)]
struct Opts {
    /// `key = value` file applied before the other flags.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    n: Option<String>,
    #[arg(long)]
    m: Option<String>,
    #[arg(long)]
    crc_poly: Option<String>,
    #[arg(long)]
    design_snr: Option<String>,
    #[arg(long)]
    order_file: Option<String>,
    #[arg(long)]
    info_set_file: Option<String>,
    /// Comma-separated list.
    #[arg(long, allow_hyphen_values = true)]
    ebn0_db: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    #[arg(long)]
    sat: Option<String>,
    /// Comma-separated list, e.g. `cbp,cbpl,cbplosd1,pcbplosd2`.
    #[arg(long)]
    decoder: Option<String>,
    #[arg(long)]
    alpha: Option<String>,
    #[arg(long)]
    list: Option<String>,
    #[arg(long)]
    osd_order: Option<String>,
    #[arg(long)]
    kernel: Option<String>,
    #[arg(long)]
    i_max: Option<String>,
    #[arg(long)]
    i_thr: Option<String>,
    #[arg(long)]
    threads: Option<String>,
    #[arg(long)]
    max_frames: Option<String>,
    #[arg(long)]
    min_frames: Option<String>,
    #[arg(long)]
    target_errors: Option<String>,
    /// `joint` or `per-decoder`.
    #[arg(long)]
    stop: Option<String>,
    #[arg(long)]
    out: Option<String>,
}

impl Opts {
    fn resolve(&self) -> Result<RunConfig> {
        let mut cfg = RunConfig::default();
        if let Some(path) = &self.config {
            cfg.apply_text(&std::fs::read_to_string(path)?)?;
        }
        let flags = [
            ("n", &self.n),
            ("m", &self.m),
            ("crc-poly", &self.crc_poly),
            ("design-snr", &self.design_snr),
            ("order-file", &self.order_file),
            ("info-set-file", &self.info_set_file),
            ("ebn0-db", &self.ebn0_db),
            ("seed", &self.seed),
            ("sat", &self.sat),
            ("decoder", &self.decoder),
            ("alpha", &self.alpha),
            ("list", &self.list),
            ("osd-order", &self.osd_order),
            ("kernel", &self.kernel),
            ("i-max", &self.i_max),
            ("i-thr", &self.i_thr),
            ("threads", &self.threads),
            ("max-frames", &self.max_frames),
            ("min-frames", &self.min_frames),
            ("target-errors", &self.target_errors),
            ("stop", &self.stop),
            ("out", &self.out),
        ];
        for (key, value) in flags {
            if let Some(v) = value {
                cfg.set(key, v)?;
            }
        }
        Ok(cfg)
    }
}

fn output(cfg: &RunConfig) -> Result<Box<dyn Write>> {
    Ok(match &cfg.out {
        Some(p) => Box::new(std::io::BufWriter::new(std::fs::File::create(p)?)),
        None => Box::new(std::io::stdout().lock()),
    })
}

fn construct(cfg: &RunConfig, order: bool) -> Result<()> {
    let mut out = output(cfg)?;
    if order {
        let k = cfg.message_len() + cfg.crc_poly.degree();
        let rate = k as f64 / (1usize << cfg.n) as f64;
        let order = reliability_order(cfg.n, cfg.design_snr, rate)?;
        out.write_all(reliability_order_text(&order).as_bytes())?;
    } else {
        out.write_all(cfg.code()?.polar().info_set_text().as_bytes())?;
    }
    Ok(())
}

fn simulate(cfg: &RunConfig) -> Result<()> {
    let code = cfg.code()?;
    let sim = cfg.sim_config()?;
    let res = run_fer(&code, &sim)?;
    for p in &res.points {
        eprintln!(
            "{:>16} {:>5.2} dB  {:>7}/{:<8} FER {:.3e}  strict {:>7}  [{:.1}s]",
            p.decoder, p.ebn0_db, p.frame_errors, p.frames, p.fer, p.strict_errors, p.wallclock_s
        );
    }
    write_csv(&res.points, output(cfg)?)
}

fn parse_hex_message(hex: &str, m: usize) -> Result<Vec<u8>> {
    let digits = hex.trim().trim_start_matches("0x");
    let mut bits = Vec::with_capacity(digits.len() * 4);
    for c in digits.chars() {
        let d = c
            .to_digit(16)
            .ok_or_else(|| Error::Parse(format!("bad hex digit `{c}`")))?;
        bits.extend((0..4).rev().map(|b| ((d >> b) & 1) as u8));
    }
    if bits.len() < m {
        return Err(Error::Parse(format!("hex message has {} bits, need {m}", bits.len())));
    }
    // Leading padding bits beyond m must be zero.
    let pad = bits.len() - m;
    if bits[..pad].iter().any(|&b| b != 0) {
        return Err(Error::Parse(format!("hex message longer than {m} bits")));
    }
    Ok(bits[pad..].to_vec())
}

fn decode_one(cfg: &RunConfig, llr_file: Option<&PathBuf>, hex: Option<&str>, frame: u64) -> Result<()> {
    let code = cfg.code()?;
    let bp = cfg.bp();
    let db = *cfg
        .ebn0_db
        .first()
        .ok_or_else(|| Error::InvalidParameter("need an Eb/N0 point".into()))?;
    let sigma2 = ChannelParams::new(db, code.rate())?.sigma2;
    let (x, y) = match (llr_file, hex) {
        (Some(path), _) => {
            let text = std::fs::read_to_string(path)?;
            let llr: Vec<f64> = text
                .split_whitespace()
                .map(|t| t.parse().map_err(|_| Error::Parse(format!("bad LLR `{t}`"))))
                .collect::<Result<_>>()?;
            if llr.len() != code.block_len() {
                return Err(Error::Dimension(format!(
                    "{} LLRs given, N={}",
                    llr.len(),
                    code.block_len()
                )));
            }
            (None, llr.iter().map(|l| l * sigma2 / 2.0).collect::<Vec<f64>>())
        }
        (None, Some(h)) => {
            let msg = parse_hex_message(h, code.m())?;
            let x = code.encode(&msg)?;
            let mut rng = polar_osd::channel::frame_rng(cfg.seed, frame);
            let y = polar_osd::channel::awgn(&bpsk(&x), sigma2, &mut rng)?;
            (Some(x), y)
        }
        (None, None) => {
            let (x, y) = generate_frame(&code, cfg.seed, frame, sigma2)?;
            (Some(x), y)
        }
    };
    let kinds = cfg.decoder_kinds()?;
    let bank = DecoderBank::new(code.clone(), bp, cfg.list, kinds.clone())?;
    let fd = bank.decode_frame(&y, sigma2)?;
    let mut out = output(cfg)?;
    let hard_errors = channel_llrs(&y, sigma2, bp.sat)?
        .hard_decision()
        .iter()
        .zip(x.iter().flatten())
        .filter(|(a, b)| a != b)
        .count();
    writeln!(out, "N={} m={} Eb/N0={db} dB sigma2={sigma2:.5}", code.block_len(), code.m())?;
    if x.is_some() {
        writeln!(out, "channel hard-decision errors: {hard_errors}")?;
    }
    let perms = permutations_for(code.n(), fd.branches.len());
    for (j, (b, p)) in fd.branches.iter().zip(&perms).enumerate() {
        let wrong = x
            .as_ref()
            .map(|x| format!(" bit errors {}", b.x_hat.iter().zip(x).filter(|(a, b)| a != b).count()))
            .unwrap_or_default();
        writeln!(
            out,
            "branch {} sigma={:?} converged={} iters={} distance={:.4}{wrong}",
            j + 1,
            p.sigma(),
            b.converged,
            b.iters_used,
            squared_distance(&y, &b.x_hat)
        )?;
    }
    for (kind, o) in kinds.iter().zip(&fd.outputs) {
        let verdict = match &x {
            Some(x) if &o.codeword == x => "correct",
            Some(_) => "ERROR",
            None => "-",
        };
        writeln!(
            out,
            "{kind:>16}: distance={:.4} valid={} codeword_ok={} {verdict}",
            o.distance,
            o.valid,
            code.is_codeword(&o.codeword)
        )?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let run = || -> Result<()> {
        match &cli.command {
            Command::Construct { opts, order } => construct(&opts.resolve()?, *order),
            Command::Simulate { opts } => simulate(&opts.resolve()?),
            Command::DecodeOne {
                opts,
                llr_file,
                hex,
                frame,
            } => decode_one(&opts.resolve()?, llr_file.as_ref(), hex.as_deref(), *frame),
        }
    };
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
