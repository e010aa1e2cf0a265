//! Forced-family reversal lines y0 = V0/(2*gamma): physical when y0 > 0,
//! flagged unphysical otherwise, with the detected crossing from gridded
//! samples alongside the closed form.
//!
//! ```bash
//! cargo run --release --example forced_reversal
//! ```

use hyperdynamo::analytic::{forced_bz, reversal_line_forced, ForcedParams};
use hyperdynamo::diagnostics::reversal_scan;
use hyperdynamo::fields::{Grid, MagneticTwoForm, ScalarField};
use hyperdynamo::geometry::HalfPlanePoint;

fn main() {
    let grid = Grid::new(0.0, 2.0, 0.25, 4.0, 32, 256).unwrap();
    let cases = [
        ForcedParams { gamma: -1.0, v0: -2.0, eta: 0.1 },
        ForcedParams { gamma: -0.5, v0: -2.4, eta: 0.1 },
        ForcedParams { gamma: -1.0, v0: 2.0, eta: 0.1 },
    ];
    for params in cases {
        let line = reversal_line_forced(&params).unwrap();
        print!(
            "gamma = {:>5.2}, V0 = {:>5.2}: y0 = {:>6.3} ({})",
            params.gamma,
            params.v0,
            line.y0,
            if line.physical { "physical" } else { "outside the half-plane" }
        );
        let bz = ScalarField::try_from_fn(grid.clone(), |x, y| {
            forced_bz(&HalfPlanePoint::new(x, y)?, 0.0, &params)
        })
        .unwrap();
        let crossings = reversal_scan(&MagneticTwoForm::new(bz), 1.0).unwrap();
        match crossings.as_slice() {
            [] => println!("  -> no crossing on the grid"),
            found => {
                for c in found {
                    println!("  -> detected at y = {:.4} ({:?})", c.y, c.direction);
                }
            }
        }
    }
}
