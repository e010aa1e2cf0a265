//! Geodesic-deviation stretching J'' = J on the unit-curvature hyperbolic
//! plane: fourth-order integration against the sinh closed form.
//!
//! ```bash
//! cargo run --release --example geodesic_deviation
//! ```

use hyperdynamo::analytic::deviation_solution;
use hyperdynamo::diagnostics::integrate_deviation;

fn main() {
    let sol = integrate_deviation(0.0, 1.0, 5.0, 10_000).unwrap();
    println!("{:>6} {:>16} {:>16} {:>12}", "s", "J_numeric", "J0*sinh(s)", "rel_err");
    for k in (0..sol.s.len()).step_by(2000) {
        let s = sol.s[k];
        let exact = deviation_solution(s, 1.0);
        let rel = if exact != 0.0 { (sol.j[k] - exact).abs() / exact } else { 0.0 };
        println!("{s:>6.2} {:>16.10} {exact:>16.10} {rel:>12.2e}", sol.j[k]);
    }

    // separation ratio over unit arc length approaches e: chaotic stretching
    let j4 = *integrate_deviation(0.0, 1.0, 4.0, 4_000).unwrap().j.last().unwrap();
    let j5 = *integrate_deviation(0.0, 1.0, 5.0, 5_000).unwrap().j.last().unwrap();
    println!("\nJ(5)/J(4) = {:.6}  (e = {:.6})", j5 / j4, std::f64::consts::E);

    println!("\nstep-doubling convergence at s_end = 5:");
    let exact = 5f64.sinh();
    let mut prev: Option<f64> = None;
    for n in [125usize, 250, 500, 1000] {
        let err = (integrate_deviation(0.0, 1.0, 5.0, n).unwrap().j.last().unwrap() - exact).abs();
        match prev {
            Some(p) => println!("  n = {n:>5}: err {err:.3e}  ratio {:.2}", p / err),
            None => println!("  n = {n:>5}: err {err:.3e}"),
        }
        prev = Some(err);
    }
}
