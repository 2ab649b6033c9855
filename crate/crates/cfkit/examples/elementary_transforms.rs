//! The elementary isomorphisms at the parameter level: calibration (with
//! the identity-normalizing variant), telescoping, and reduction with its
//! exact density scale and domain profile.

use std::sync::Arc;

use cfkit::maps::{
    calibrate, normalize_identity, reduce, reduction_domain_profile, standardize, telescope,
};
use cfkit::report::ratio_string;
use cfkit::seq::{dyadic_odometer, CfSequence};
use cfkit::subset::FiniteSubset;

fn main() -> cfkit::Result<()> {
    let seq = Arc::new(dyadic_odometer(4));
    let z = seq.group().clone();

    // calibrate: shift every level by its own element
    let shifts = vec![z.int(1)?, z.int(0)?, z.int(2)?, z.int(0)?, z.int(0)?];
    let (shifted, _map) = calibrate(&seq, &shifts)?;
    println!("calibrated F_0 = {}, C_1 = {}", shifted.f(0), shifted.c(1));

    // and bring the identity back into every level
    let (normalized, _) = normalize_identity(&shifted)?;
    let report = normalized.validate();
    println!(
        "normalized identity membership: shapes {} / blocks {}",
        report.identity_in_f.iter().all(|&b| b),
        report.identity_in_c.iter().all(|&b| b)
    );

    // telescope levels (0,2,4): blocks multiply out
    let (grouped, _map) = telescope(&seq, &[0, 2, 4])?;
    println!("telescoped blocks: C_1 = {}, C_2 = {}", grouped.c(1), grouped.c(2));

    // reduce: drop one element of C_3, keep track of the exact density
    let chacon = Arc::new(CfSequence::from_cutting_stacking(
        &[3, 3],
        &[vec![0, 1, 0], vec![0, 1, 0]],
        1,
    )?);
    let sets = vec![
        chacon.c(1).clone(),
        FiniteSubset::ints(chacon.group(), &[0, 1])?,
        chacon.c(3).clone(),
    ];
    let (reduced, _map, scale) = reduce(&chacon, &sets)?;
    println!(
        "reduced C_2 to {} with density scale {}",
        reduced.c(2),
        ratio_string(&scale)
    );
    let profile = reduction_domain_profile(&chacon, &sets)?;
    println!(
        "reduction domain fractions per depth: {}",
        profile.iter().map(ratio_string).collect::<Vec<_>>().join(" ")
    );

    // standardize: absorb the window {±1} by telescoping + reduction
    let window = vec![z.int(1)?, z.int(-1)?];
    match standardize(&seq, &window, 4)? {
        Some(found) => println!(
            "standardization: telescope {:?}, kept block sizes {:?}",
            found.telescope_indices,
            found.reduction_sets.iter().map(|s| s.len()).collect::<Vec<_>>()
        ),
        None => println!("standardization: not found within budget"),
    }
    Ok(())
}
