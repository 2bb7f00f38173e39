//! Gaussian-approximation construction and encoding of a CRC-augmented
//! polar code.

use polar_osd::code::CodeSpec;
use polar_osd::polar::{kron_generator, polar_transform};

fn main() -> polar_osd::Result<()> {
    println!("G_8:\n{}", kron_generator(3)?.to_text());

    let code = CodeSpec::half_rate(8)?;
    println!(
        "N={} K={} m={} rate={}",
        code.block_len(),
        code.k(),
        code.m(),
        code.rate()
    );
    let info = code.polar().info_set();
    println!("least reliable information index: {}", info[0] + 1);
    println!("first 8 information indices (1-based): {:?}", info.iter().take(8).map(|i| i + 1).collect::<Vec<_>>());

    let msg: Vec<u8> = (0..code.m()).map(|i| (i * 7 % 3 == 0) as u8).collect();
    let x = code.encode(&msg)?;
    assert!(code.is_codeword(&x));
    let mut u = x.clone();
    polar_transform(&mut u);
    assert!(code.polar().frozen_set().iter().all(|&i| u[i] == 0));
    println!("codeword weight {}", x.iter().filter(|&&b| b == 1).count());
    Ok(())
}
