//! Convergence of the box-product construction to the isotropic Gaussian:
//! convolve N equal-width boxes spread over the half-circle and print the
//! worst pointwise deviation as a fraction of the Gaussian peak.

use anisobox::kernel::clt_demo;
use anisobox::Result;

fn main() -> Result<()> {
    println!("{:>3}  {:>10}", "N", "max error");
    for n in [2, 3, 4, 6, 8, 12, 16] {
        let (_, err) = clt_demo(n, 1.0, 0.02)?;
        println!("{n:>3}  {:>9.3}%", err * 100.0);
    }
    println!("\nfour boxes already land within ~13% of the peak; the error");
    println!("keeps shrinking as N grows, which is what makes a small");
    println!("directional bank a usable Gaussian surrogate.");
    Ok(())
}
