//! Van der Waals critical point and the coexistence curve in reduced units.

use contact_thermo::models::{coexistence_locus, critical_point, spinodal, Vdw};

fn main() -> contact_thermo::Result<()> {
    let m = Vdw::new(3.6, 0.043, 0.0831)?;
    let c = critical_point(&m)?;
    println!("critical point: v = {:.6}, p = {:.6}, T = {:.6}", c.v, c.p, c.t);

    let temps: Vec<f64> = (0..8).map(|k| c.t * (0.6 + 0.05 * k as f64)).collect();
    println!("{:>6} {:>10} {:>10} {:>10} {:>10} {:>10}", "T_r", "p_r", "v_l/v_c", "v_g/v_c", "v-/v_c", "v+/v_c");
    for co in coexistence_locus(&m, &temps)? {
        let (lo, hi) = spinodal(&m, co.t)?;
        println!(
            "{:6.3} {:10.6} {:10.5} {:10.5} {:10.5} {:10.5}",
            co.t / c.t,
            co.p_coex / c.p,
            co.v_liquid / c.v,
            co.v_gas / c.v,
            lo / c.v,
            hi / c.v
        );
    }
    Ok(())
}
