//! A small paired FER run written as CSV to stdout.

use polar_osd::code::CodeSpec;
use polar_osd::pipeline::DecoderKind;
use polar_osd::sim::{paired_test, run_fer, write_csv, SimConfig};

fn main() -> polar_osd::Result<()> {
    let code = CodeSpec::half_rate(6)?;
    let cfg = SimConfig {
        ebn0_db: vec![1.0, 2.0, 3.0],
        decoders: vec![DecoderKind::Cbpl, DecoderKind::CbplOsd1],
        max_frames: 2_000,
        target_errors: 50,
        seed: 42,
        keep_records: true,
        ..SimConfig::default()
    };
    let res = run_fer(&code, &cfg)?;
    write_csv(&res.points, std::io::stdout().lock())?;
    for rec in &res.records {
        let t = paired_test(rec, 1, 0);
        eprintln!(
            "{} dB: only CBPLOSD(1) wrong {} times, only CBPL wrong {} times",
            rec.ebn0_db, t.a_only, t.b_only
        );
    }
    Ok(())
}
