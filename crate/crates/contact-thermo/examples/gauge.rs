//! Energy to entropy representation: rescaling the contact form by 1/p_1
//! turns the Reeb field into d/dS and the induced metric into -g/T.

use contact_thermo::chart::TpsPoint;
use contact_thermo::fields::Smooth;
use contact_thermo::gauge::{gauge_transform, inverse_temperature_gauge, representation_change_demo};
use contact_thermo::metric::StructureBundle;
use contact_thermo::models::IdealGas;

fn main() -> contact_thermo::Result<()> {
    let entropy_chart = gauge_transform(&StructureBundle::fisher_rao(2), inverse_temperature_gauge())?;
    let pt = TpsPoint::new(1.0, &[0.5, 2.0], &[-0.7, 0.4])?;
    println!("Reeb field after the gauge: {:?}", entropy_chart.reeb_at(&pt)?.as_slice());

    let energy = IdealGas::default().energy();
    let grid: Vec<(f64, f64)> = [0.5, 1.0, 1.5].iter().flat_map(|&s| [1.0, 2.0, 3.0].map(|v| (s, v))).collect();
    let report = representation_change_demo(&Smooth(energy), &grid)?;
    println!("{:>6} {:>6} {:>8} {:>12} {:>12}", "S", "V", "T", "conformal", "ratio");
    for p in &report.points {
        println!("{:6.2} {:6.2} {:8.4} {:12.2e} {:12.2e}", p.s, p.v, p.t, p.conformal_residual, p.ratio_max_deviation);
    }
    Ok(())
}
