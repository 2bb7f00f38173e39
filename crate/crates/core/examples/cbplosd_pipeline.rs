//! Every composite decoder on the same frames, sharing the CBP branches.

use polar_osd::bp::BpConfig;
use polar_osd::channel::ChannelParams;
use polar_osd::code::CodeSpec;
use polar_osd::pipeline::{DecoderBank, DecoderKind};
use polar_osd::sim::generate_frame;

fn main() -> polar_osd::Result<()> {
    let code = CodeSpec::half_rate(8)?;
    let kinds = vec![
        DecoderKind::Cbp,
        DecoderKind::Cbpl,
        DecoderKind::CbpOsd1,
        DecoderKind::CbplOsd1,
        DecoderKind::CbplOsd2,
        DecoderKind::PCbplOsd2 { alpha: 0.5 },
        DecoderKind::PCbplOsd2 { alpha: 0.125 },
        DecoderKind::PlainOsd { q: 2 },
    ];
    let bank = DecoderBank::new(code.clone(), BpConfig::default(), 6, kinds.clone())?;
    let sigma2 = ChannelParams::new(1.5, code.rate())?.sigma2;
    let frames = 40;
    let mut errors = vec![0; kinds.len()];
    for i in 0..frames {
        let (x, y) = generate_frame(&code, 2024, i, sigma2)?;
        let fd = bank.decode_frame(&y, sigma2)?;
        for (e, out) in errors.iter_mut().zip(&fd.outputs) {
            *e += (out.codeword != x) as usize;
        }
    }
    for (k, e) in kinds.iter().zip(&errors) {
        println!("{:>16}: {e}/{frames} frame errors", k.to_string());
    }
    Ok(())
}
