//! Gauge `rho(x)` and momentum `p(x)` of a state with respect to the limit set
//! `Omega`, for one oscillator (closed form available) and for two.
//!
//! ```bash
//! cargo run --release --example gauge_momentum
//! ```

use std::f64::consts::PI;

use nalgebra::DVector;
use oscdamp::geometry::{gauge_rho, GaugeOptions, QuadratureConfig, SupportFn, SupportFunction};
use oscdamp::System;

fn main() -> oscdamp::Result<()> {
    let single = System::new(&[3.0])?;
    let h = SupportFunction::new(&single, &QuadratureConfig::for_dimension(1))?;
    let x = DVector::from_vec(vec![1.0, 2.0]);
    let sol = gauge_rho(&h, &x, &GaugeOptions::default())?;
    let exact = PI / 2.0 * (9.0 * x[0] * x[0] + x[1] * x[1]).sqrt();
    println!("N=1, omega=3: rho = {:.12}, closed form = {exact:.12}", sol.rho);

    let pair = System::new(&[1.0, 2f64.sqrt()])?;
    let h = SupportFunction::new(&pair, &QuadratureConfig::for_dimension(2))?;
    let x = DVector::from_vec(vec![5.0, -2.0, 3.0, 7.0]);
    let sol = gauge_rho(&h, &x, &GaugeOptions::default())?;
    println!(
        "N=2: rho = {:.9}, H(p) = {:.3e} off one, (x,p) = {:.9}, {} iterations",
        sol.rho,
        h.value(&sol.p) - 1.0,
        x.dot(&sol.p),
        sol.iterations
    );
    println!("p = {:?}", sol.p.as_slice());
    Ok(())
}
