//! BPSK over AWGN with per-frame seeded noise.

use polar_osd::channel::{awgn, bpsk, channel_llrs, frame_rng, ChannelParams, DEFAULT_SAT};

fn main() -> polar_osd::Result<()> {
    let ch = ChannelParams::new(2.0, 0.5)?;
    println!("Eb/N0 2 dB at rate 1/2: sigma^2 = {:.4}", ch.sigma2);
    let x = [0u8, 1, 1, 0, 1, 0, 0, 0];
    let y = awgn(&bpsk(&x), ch.sigma2, &mut frame_rng(7, 0))?;
    let llr = channel_llrs(&y, ch.sigma2, DEFAULT_SAT)?;
    for ((b, v), l) in x.iter().zip(&y).zip(llr.values()) {
        println!("bit {b}  y {v:+.3}  llr {l:+.3}");
    }
    let errors = llr.hard_decision().iter().zip(&x).filter(|(a, b)| a != b).count();
    println!("hard-decision errors: {errors}");
    Ok(())
}
