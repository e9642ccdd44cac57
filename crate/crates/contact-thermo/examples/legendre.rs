//! Ensemble changes as Legendre maps: the total exchange on the ideal gas is
//! an isometry up to a global sign, a partial one is not, and a subcritical
//! Van der Waals isotherm breaks the map at the spinodal.

use contact_thermo::fields::{SharedPotential, Smooth};
use contact_thermo::legendre::{breakdown_scan, legendre_isometry_check, legendre_potential, IndexSet};
use contact_thermo::models::{IdealGas, Vdw};

fn main() -> contact_thermo::Result<()> {
    let gas: SharedPotential = Smooth::shared(IdealGas::default());
    let grid: Vec<Vec<f64>> = [1.0, 2.0, 3.0].iter().flat_map(|&u| [1.0, 2.0, 3.0].map(|v| vec![u, v])).collect();

    let total = legendre_isometry_check(gas.clone(), &IndexSet::all(2), &grid)?;
    println!("total exchange: sign {}, residual {:.2e}", total.sign, total.residual);
    let partial = legendre_isometry_check(gas.clone(), &IndexSet::new(2, &[0])?, &grid)?;
    println!("exchange of U only: best residual {:.3}", partial.residual);

    let conj = legendre_potential(gas.clone(), &IndexSet::all(2), Some(&grid[0]))?;
    let x: Vec<f64> = gas.jet(&[2.0, 1.5])?.gradient.iter().map(|g| -g).collect();
    println!("conjugate at {x:?}: {:.12}", conj.jet(&x)?.value);

    let m = Vdw::default();
    let path: Vec<Vec<f64>> = (0..100).map(|k| vec![1.2 + 0.07 * k as f64]).collect();
    for tr in [1.2, 0.9] {
        let iso = Smooth(m.isotherm(tr * m.critical().t));
        match breakdown_scan(&iso, &IndexSet::all(1), &path) {
            Ok(()) => println!("T_r = {tr}: no breakdown"),
            Err(e) => println!("T_r = {tr}: {e}"),
        }
    }
    Ok(())
}
