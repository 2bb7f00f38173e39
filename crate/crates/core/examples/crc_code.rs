//! The g6 CRC as a systematic linear code.

use polar_osd::crc::{CrcPoly, CrcSpec};

fn main() -> polar_osd::Result<()> {
    let poly: CrcPoly = "0x61".parse()?;
    let spec = CrcSpec::new(poly, 8)?;
    println!("g(x) coefficients {} (degree {})", spec.poly(), spec.r());
    let msg = [1, 0, 1, 1, 0, 0, 1, 0];
    let word = spec.encode(&msg)?;
    println!("message {msg:?} -> CRC word {word:?}");
    println!("check passes: {}", spec.check(&word)?);
    let mut bad = word.clone();
    bad[3] ^= 1;
    println!("after one flip: {}", spec.check(&bad)?);
    println!("H:\n{}", spec.parity_check().to_text());
    Ok(())
}
