//! Force-free family profiles: the two-form coefficient B_z against y, its
//! reversal at y = 1/2, and the growth-rate formula. Pass a directory
//! argument to also write a plot-ready CSV.
//!
//! ```bash
//! cargo run --release --example force_free_profiles [out_dir]
//! ```

use hyperdynamo::analytic::{
    force_free_bz, force_free_potential, growth_rate, reversal_line_force_free, ForceFreeParams,
};
use hyperdynamo::diagnostics::reversal_scan;
use hyperdynamo::fields::{Grid, MagneticTwoForm, ScalarField};
use hyperdynamo::geometry::HalfPlanePoint;

fn main() {
    let params = ForceFreeParams { a0: 1.0, k_sep: 1.0, lambda: 1.0, eta: 0.1, v0: 2.0 };
    println!("gamma(eta) = V0*K - lambda^2*eta = {}", growth_rate(&params));

    println!("\nB_z against y at t = 0 (sign flips at y0 = {}):", reversal_line_force_free());
    println!("{:>6} {:>14} {:>14} {:>14}", "y", "A^x", "A^y", "B_z");
    for &y in &[0.3, 0.4, 0.5, 0.6, 0.8, 1.0, 2.0, 4.0] {
        let p = HalfPlanePoint::new(0.0, y).unwrap();
        let (ax, ay) = force_free_potential(&p, 0.0, &params).unwrap();
        let bz = force_free_bz(&p, 0.0, &params).unwrap();
        println!("{y:>6.2} {ax:>14.5e} {ay:>14.5e} {bz:>14.5e}");
    }

    // detect the reversal from gridded samples, the way the diagnostics do
    let grid = Grid::new(0.0, 2.0, 0.25, 4.0, 32, 256).unwrap();
    let bz = ScalarField::try_from_fn(grid.clone(), |x, y| {
        force_free_bz(&HalfPlanePoint::new(x, y)?, 0.0, &params)
    })
    .unwrap();
    let field = MagneticTwoForm::new(bz);
    let crossings = reversal_scan(&field, 1.0).unwrap();
    for c in &crossings {
        println!("\ndetected reversal: y = {:.6} ({:?})", c.y, c.direction);
    }

    if let Some(dir) = std::env::args().nth(1) {
        std::fs::create_dir_all(&dir).unwrap();
        let path = std::path::Path::new(&dir).join("bz_profile.csv");
        let mut text = String::from("y,bz\n");
        for j in 0..grid.ny() {
            text.push_str(&format!("{},{}\n", grid.y(j), field.bz().value(16, j)));
        }
        std::fs::write(&path, text).unwrap();
        println!("profile written to {}", path.display());
    }
}
