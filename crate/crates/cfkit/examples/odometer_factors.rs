//! Adding-machine factor discrimination over ℤ: block divisibility defects
//! separate a genuinely triadic construction from a Chacon-type one.

use std::sync::Arc;

use cfkit::factor::{
    odometer_defects, search_odometer_telescoping, triadic_rank_one, OdometerSpec,
};
use cfkit::report::{ratio, ratio_string};
use cfkit::seq::CfSequence;

fn main() -> cfkit::Result<()> {
    let odo = OdometerSpec {
        d: vec![1, 3, 3, 3, 3, 3],
    };

    // the triadic rank-one construction is the base-3 machine itself
    let triadic = triadic_rank_one(4)?;
    let k: Vec<usize> = (0..=4).collect();
    println!("triadic rank-one blocks against base 3:");
    for d in odometer_defects(&triadic, &odo, &k)? {
        println!(
            "  block ({}, {}] mod {}: raw {} best {}",
            d.from,
            d.to,
            d.modulus,
            ratio_string(&d.raw),
            ratio_string(&d.best)
        );
    }
    let thresholds: Vec<_> = (1..=4).map(|n| ratio(1, 1 << n)).collect();
    println!(
        "greedy indices: {:?}",
        search_odometer_telescoping(&triadic, &odo, &thresholds)?
    );

    // the Chacon-type spacer breaks divisibility in every block
    let chacon = Arc::new(CfSequence::from_cutting_stacking(
        &[3, 3, 3, 3],
        &vec![vec![0, 1, 0]; 4],
        1,
    )?);
    println!("chacon-type blocks against base 3:");
    for d in odometer_defects(&chacon, &odo, &[0, 1, 2, 3])? {
        println!(
            "  block ({}, {}] mod {}: best-residue defect {} at residue {}",
            d.from,
            d.to,
            d.modulus,
            ratio_string(&d.best),
            d.best_residue
        );
    }
    let thresholds: Vec<_> = (1..=5).map(|n| ratio(1, 1 << n)).collect();
    match search_odometer_telescoping(&chacon, &odo, &thresholds)? {
        Some(k) => println!("greedy indices: {k:?}"),
        None => println!("greedy search: not found within the stored prefix"),
    }
    Ok(())
}
