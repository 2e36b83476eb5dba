//! The root finder on its own. Counts the zeros of det(s I - A) for a
//! matrix with a complex pair of eigenvalues using the argument principle,
//! then locates them by subdividing the rectangle.
//!
//! cargo run --release --example contour_roots

use mmlindley::polyalg::{count_zeros, find_zeros_right_halfplane, Contour};
use mmlindley::{Complex64, Result};

fn main() -> Result<()> {
    // Eigenvalues 1 +- 2i and -3.
    let det = |s: Complex64| ((s - 1.0) * (s - 1.0) + 4.0) * (s + 3.0);

    let wide = Contour::rectangle((-5.0, 5.0), (-5.0, 5.0));
    println!("zeros in [-5, 5]^2: {}", count_zeros(&det, &wide, 256)?);

    let right = find_zeros_right_halfplane(&det, 2, 20.0)?;
    for (z, flag) in right.zeros.iter().zip(&right.multiplicity_flags) {
        println!("zero {:.12} {:+.12}i (near multiple: {flag})", z.re, z.im);
    }
    println!("min separation {:.6}", right.min_separation());
    Ok(())
}
