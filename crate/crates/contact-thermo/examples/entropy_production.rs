//! Relaxation under H = -w: classification of initial states and the entropy
//! produced along each orbit.

use contact_thermo::chart::TpsPoint;
use contact_thermo::processes::{classify, entropy_production, EQUILIBRIUM_TOL};

fn main() -> contact_thermo::Result<()> {
    println!("{:>5} {:>14} {:>8} {:>20} {:>20}", "H0", "class", "t_f", "numeric", "closed form");
    for h0 in [-1.0, 0.0, 0.5, 2.0] {
        let x0 = TpsPoint::new(-h0, &[1.0, 0.3], &[2.0, 1.0])?;
        let class = classify(&x0, EQUILIBRIUM_TOL)?;
        for t_f in [1.0, 50.0] {
            let e = entropy_production(&x0, t_f)?;
            println!("{h0:5.1} {:>14} {t_f:8.1} {:20.17} {:20.17}", class.kind.to_string(), e.value, e.closed_form);
        }
    }
    Ok(())
}
