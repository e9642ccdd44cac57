//! Integrates the flow of the Legendre-map generator and checks the Jacobi
//! bracket of the canonical pair.

use contact_thermo::chart::TpsPoint;
use contact_thermo::dynamics::{integrate, jacobi_bracket, lt_generator, step_halving_ratio};
use contact_thermo::fields::dual_field;

fn main() -> contact_thermo::Result<()> {
    let h = lt_generator(1);
    let x0 = TpsPoint::new(0.0, &[1.0], &[0.0])?;
    let traj = integrate(&h, &x0, std::f64::consts::PI, 1e-2)?;
    // a half turn swaps q into -q
    println!("after t = pi: {:?}", traj.last().map(|p| p.as_slice().to_vec()));
    println!("h drift: {:.2e}", traj.h.iter().map(|v| (v - traj.h[0]).abs()).fold(0.0, f64::max));
    println!("step-halving ratio: {:.2}", step_halving_ratio(&h, &x0, 1.0, 0.1)?);

    let q = dual_field(1, |x| x[1].clone());
    let p = dual_field(1, |x| x[2].clone());
    println!("{{q, p}} = {:.9}", jacobi_bracket(&q, &p, &x0)?);
    Ok(())
}
