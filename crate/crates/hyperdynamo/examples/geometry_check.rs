//! Exact half-plane geometry against the finite-difference curvature
//! oracle.
//!
//! ```bash
//! cargo run --release --example geometry_check
//! ```

use hyperdynamo::geometry::{
    christoffel_at, gaussian_curvature_at, gaussian_curvature_fd, metric_at, riemann_1212_at,
    HalfPlanePoint,
};

fn main() {
    println!("metric and connection at sample heights:");
    println!("{:>6} {:>12} {:>12} {:>12} {:>12}", "y", "g11", "g_inv11", "G^x_xy", "G^y_xx");
    for &y in &[0.5, 1.0, 2.0, 5.0] {
        let p = HalfPlanePoint::new(0.0, y).unwrap();
        let m = metric_at(&p);
        let c = christoffel_at(&p);
        println!(
            "{y:>6.2} {:>12.6} {:>12.6} {:>12.6} {:>12.6}",
            m.g11,
            m.g_inv11,
            c.gamma_x_xy(),
            c.gamma_y_xx()
        );
    }

    println!("\ncurvature: closed form is exactly -1; fd oracle converges in h:");
    println!("{:>6} {:>14} {:>10} {:>14}", "y", "K_exact", "h", "|K_fd + 1|");
    for &y in &[0.35, 1.0, 3.0] {
        let p = HalfPlanePoint::new(0.7, y).unwrap();
        for &h in &[2e-2, 1e-2, 5e-3] {
            let k_fd = gaussian_curvature_fd(&p, h).unwrap();
            println!(
                "{y:>6.2} {:>14} {h:>10.0e} {:>14.3e}",
                gaussian_curvature_at(&p),
                (k_fd + 1.0).abs()
            );
        }
    }

    let p = HalfPlanePoint::new(0.0, 1.7).unwrap();
    let m = metric_at(&p);
    println!(
        "\ncurvature identity R_1212 / g = K: {} (exact at every point)",
        riemann_1212_at(&p) / (m.sqrt_g * m.sqrt_g)
    );
}
