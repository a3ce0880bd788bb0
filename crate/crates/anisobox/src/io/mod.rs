//! Bit-exact file formats: PGM (P5, 8/16-bit) and PFM grayscale images, and
//! the binary covariance-map container.

mod covmap;
mod pnm;

pub use covmap::{read_covmap, write_covmap};
pub use pnm::{load_image, save_image, ImageFormat};
