//! Checks the contact-metric identities at a handful of random points and
//! prints the orthonormal frame at one of them.

use contact_thermo::chart::{heisenberg_residual, PointBox};
use contact_thermo::metric::{canonical_basis, signature, structure_suite, SuiteTolerances};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> contact_thermo::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let pts = PointBox::default().sample_many(&mut rng, 2, 20);

    let report = structure_suite(2, &pts, SuiteTolerances::default());
    for c in &report.checks {
        println!("{:<22} {:>10.3e}  {}", c.name, c.max_residual, if c.pass { "ok" } else { "FAIL" });
    }

    let pt = &pts[0];
    println!("\npoint {:?}", pt.as_slice());
    println!("signature {:?}, Heisenberg residual {:.2e}", signature(pt)?, heisenberg_residual(pt)?);
    for (k, e) in canonical_basis(pt)?.iter().enumerate() {
        println!("e{k} = {:?}", e.as_slice());
    }
    Ok(())
}
