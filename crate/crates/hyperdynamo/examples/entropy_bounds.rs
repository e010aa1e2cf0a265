//! Topological-entropy bound bookkeeping: h_top >= max(gamma, 0), and the
//! fast-dynamo ordering gamma >= 0 <=> V0 >= eta*lambda^2/K checked on a
//! parameter lattice.
//!
//! ```bash
//! cargo run --release --example entropy_bounds
//! ```

use hyperdynamo::analytic::{growth_rate, ForceFreeParams};
use hyperdynamo::diagnostics::entropy_bound_check;

fn main() {
    let params = ForceFreeParams { a0: 1.0, k_sep: 1.0, lambda: 1.0, eta: 0.1, v0: 2.0 };
    let check = entropy_bound_check(&params, growth_rate(&params), 1e-9).unwrap();
    println!("sample parameter set: {params:?}");
    println!("  gamma_formula      = {}", check.gamma_formula);
    println!("  V0 threshold       = {}", check.v0_threshold);
    println!("  h_top lower bound  = {}", check.htop_lower_bound);
    println!("  fast dynamo        = {}", check.fast_dynamo);
    println!("  V0 above threshold = {}", check.v0_above_threshold);

    // ordering across a (V0, eta) lattice: the two flags always agree
    let mut fast = 0usize;
    let mut total = 0usize;
    for iv in 0..20 {
        for ie in 0..20 {
            let p = ForceFreeParams {
                a0: 1.0,
                k_sep: 1.0,
                lambda: 1.0,
                eta: ie as f64 / 19.0,
                v0: 3.0 * iv as f64 / 19.0,
            };
            let c = entropy_bound_check(&p, growth_rate(&p), 1e-12).unwrap();
            assert_eq!(c.fast_dynamo, c.v0_above_threshold);
            total += 1;
            if c.fast_dynamo {
                fast += 1;
            }
        }
    }
    println!("\n20x20 (V0, eta) lattice: flags consistent at {total}/{total} points, {fast} fast-dynamo sets");
    println!("(h_top itself is never computed: the bound is reported, the ordering is what is checkable)");
}
