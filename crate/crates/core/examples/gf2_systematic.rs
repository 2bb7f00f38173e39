//! Reliability-ordered systematic reduction of a small generator matrix.

use polar_osd::gf2::{systematize_by_reliability, BitMatrix};

fn main() -> polar_osd::Result<()> {
    let g: BitMatrix = "2 4\n1010\n0111\n".parse()?;
    let llr = [-0.1, 0.9, -0.5, 0.3];
    let sys = systematize_by_reliability(&g, &llr)?;
    println!("G:\n{}", g.to_text());
    println!("column order (most reliable first): {:?}", sys.perm);
    println!("MRIB columns: {:?}", sys.mrib);
    println!("G~:\n{}", sys.g_tilde.to_text());
    println!("permuted reliabilities: {:?}", sys.permute(&llr));
    Ok(())
}
