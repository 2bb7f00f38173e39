//! Order-1, order-2 and partial order-2 reprocessing on one noisy frame.

use polar_osd::channel::{channel_llrs, squared_distance, ChannelParams, DEFAULT_SAT};
use polar_osd::code::CodeSpec;
use polar_osd::osd::{build_context, decide, reprocess_order2_partial, OsdOrder};
use polar_osd::pipeline::partial_pairs;
use polar_osd::sim::generate_frame;

fn main() -> polar_osd::Result<()> {
    let code = CodeSpec::half_rate(7)?;
    let sigma2 = ChannelParams::new(2.0, code.rate())?.sigma2;
    let (x, y) = generate_frame(&code, 5, 0, sigma2)?;
    let llr = channel_llrs(&y, sigma2, DEFAULT_SAT)?;
    let ctx = build_context(code.g_aug(), llr.values(), &y)?;
    println!("k={} MRIB starts at columns {:?}", ctx.k(), &ctx.sys.mrib[..6]);
    println!("transmitted codeword distance {:.3}", squared_distance(&y, &x));

    for (name, order) in [
        ("order 0", OsdOrder::Zero),
        ("order 1", OsdOrder::One),
        ("order 2", OsdOrder::Two(None)),
        ("order 2, 1/8 of pairs", OsdOrder::Two(Some(partial_pairs(0.125, ctx.k())))),
    ] {
        let c = decide(&ctx, order)?;
        let cw = ctx.sys.unpermute(&c.codeword);
        println!(
            "{name:>22}: flips {:?} score {:.3} distance {:.3} correct {}",
            c.pattern,
            c.score,
            squared_distance(&y, &cw),
            cw == x
        );
    }
    let best_pair = reprocess_order2_partial(&ctx, 10)?;
    println!("best of the first 10 pairs: {:?}", best_pair.pattern);
    Ok(())
}
