//! Feedback `C` and coordinate change `D` reducing the oscillator bank to the
//! chain of integrators, with the reduction residuals.
//!
//! ```bash
//! cargo run --release --example canonical_form
//! ```

use nalgebra::DVector;
use oscdamp::canonical::CanonicalForm;
use oscdamp::System;

fn main() -> oscdamp::Result<()> {
    for omegas in [vec![1.0], vec![1.0, 2f64.sqrt()], vec![0.7, 1.3, 2.1, 3.4]] {
        let system = System::new(&omegas)?;
        let form = CanonicalForm::new(&system)?;
        let r = form.residuals();
        println!("omegas = {omegas:?}");
        println!("  C = {:?}", form.c.as_slice());
        println!(
            "  residuals: A {:.1e}, B {:.1e}, blocks vs basis {:.1e}, literal blocks vs basis {:.1e}, cond(D) {:.1e}",
            r.reduction_a, r.reduction_b, r.blocks_vs_basis, r.literal_blocks_vs_basis, r.condition_number
        );
        let x = DVector::from_fn(system.dim(), |i, _| (i + 1) as f64);
        let back = form.from_canonical(&form.to_canonical(&x));
        println!("  round trip error {:.1e}", (back - x).amax());
    }
    Ok(())
}
