//! CRC-aided BP on the standard and layer-permuted factor graphs.

use polar_osd::bp::{cbp_decode, BpConfig};
use polar_osd::channel::{channel_llrs, ChannelParams};
use polar_osd::code::CodeSpec;
use polar_osd::pipeline::permutations_for;
use polar_osd::sim::generate_frame;

fn main() -> polar_osd::Result<()> {
    let code = CodeSpec::half_rate(8)?;
    let cfg = BpConfig::default();
    let sigma2 = ChannelParams::new(1.75, code.rate())?.sigma2;
    for frame in 0..4 {
        let (x, y) = generate_frame(&code, 3, frame, sigma2)?;
        let llr = channel_llrs(&y, sigma2, cfg.sat)?;
        print!("frame {frame}:");
        for perm in permutations_for(code.n(), 6) {
            let res = cbp_decode(llr.values(), &code, &perm, &cfg)?;
            let tag = match (res.converged, res.x_hat == x) {
                (true, true) => "ok",
                (true, false) => "wrong",
                (false, _) => "--",
            };
            print!(" {tag}/{}", res.iters_used);
        }
        println!();
    }
    Ok(())
}
