//! Filter centered impulses with a few representative target shapes and
//! report how closely each response's measured covariance matches the
//! request. Writes one PFM per shape next to the working directory.

use anisobox::io::{save_image, ImageFormat};
use anisobox::kernel::raster_moments;
use anisobox::pipeline::{filter_basic, CovarianceMap, PipelinePolicy};
use anisobox::shape::covariance_from_shape;
use anisobox::{Basis, Raster, Result, ShapeParams};

fn main() -> Result<()> {
    let size = 65;
    let shapes = [
        ("isotropic", 6.0, 1.0, 0.0, Basis::Theta),
        ("diag_45", 6.0, 3.0, 45.0, Basis::Theta),
        ("steep_22.5", 6.0, 8.0, 22.5, Basis::ThetaPrime),
        ("axis_0", 8.0, 4.0, 0.0, Basis::Theta),
    ];

    for (name, s, rho, theta_deg, basis) in shapes {
        let shape = ShapeParams::new(s, rho, (theta_deg as f64).to_radians())?;
        let target = covariance_from_shape(&shape);
        let image = Raster::impulse(size, size, size / 2, size / 2);
        let covmap = CovarianceMap::constant(size, size, target);
        let response = filter_basic(&image, &covmap, basis, &PipelinePolicy::default())?;

        let m = raster_moments(&response, (size / 2) as f64, (size / 2) as f64, 1.0);
        let dev = ((m.c11 - target.c11).powi(2)
            + 2.0 * (m.c12 - target.c12).powi(2)
            + (m.c22 - target.c22).powi(2))
        .sqrt()
            / target.frobenius_norm();
        println!(
            "{name:>10} ({basis:?}): target ({:.2}, {:.2}, {:.2})  measured ({:.2}, {:.2}, {:.2})  dev {:.2}%",
            target.c11, target.c12, target.c22, m.c11, m.c12, m.c22, dev * 100.0
        );

        let path = std::env::temp_dir().join(format!("blob_{name}.pfm"));
        save_image(&path, &response, ImageFormat::Pfm)?;
        println!("           wrote {}", path.display());
    }
    Ok(())
}
