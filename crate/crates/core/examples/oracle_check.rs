//! OSD against brute-force decoding on random tiny codes.

use polar_osd::channel::{awgn, bpsk, channel_llrs, squared_distance};
use polar_osd::gf2::BitMatrix;
use polar_osd::oracle::{exhaustive_osd, ml_decode, TinyCode};
use polar_osd::osd::decode_osd;
use rand::{Rng, SeedableRng};

fn main() -> polar_osd::Result<()> {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(9);
    let (mut agree, mut ml_hits) = (0, 0);
    let trials = 100;
    for _ in 0..trials {
        let g = loop {
            let rows: Vec<Vec<u8>> = (0..6).map(|_| (0..12).map(|_| rng.gen_range(0..2u8)).collect()).collect();
            let g = BitMatrix::from_rows(&rows)?;
            if g.rank() == 6 {
                break g;
            }
        };
        let code = TinyCode::new(g.clone())?;
        let x = code.codewords()[rng.gen_range(0..64)].clone();
        let y = awgn(&bpsk(&x), 0.6, &mut rng)?;
        let llr = channel_llrs(&y, 0.6, 40.0)?;
        let fast = decode_osd(&g, llr.values(), &y, 2, None)?;
        let slow = exhaustive_osd(&y, llr.values(), &code, 2)?;
        agree += (squared_distance(&y, &fast) == slow.distance) as usize;
        ml_hits += (fast == ml_decode(&y, &code)?) as usize;
    }
    println!("order-2 OSD matched exhaustive OSD(2) on {agree}/{trials} codes");
    println!("and found the ML codeword on {ml_hits}/{trials}");
    Ok(())
}
