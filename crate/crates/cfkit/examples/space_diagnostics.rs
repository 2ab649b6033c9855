//! Points of the finite-depth space: factorization, the partial action,
//! return-time cocycles, and the per-level diagnostics (definedness,
//! amenability defects, near tilings).

use std::sync::Arc;

use cfkit::report::ratio_string;
use cfkit::seq::dyadic_odometer;
use cfkit::space::{action_definedness, cocycle, folner_defect, near_tiling, DepthPoint};

fn main() -> cfkit::Result<()> {
    let seq = Arc::new(dyadic_odometer(4));
    let z = seq.group().clone();

    // factor a depth point down: 3 = 1 + 2 with 2 in C_2
    let p = DepthPoint::new(seq.clone(), 2, z.int(3)?)?;
    let fac = p.factorize(1)?.unwrap();
    println!(
        "3 at depth 2 factors to ({}, [{}])",
        fac.base_value,
        fac.coords.iter().map(|c| c.to_string()).collect::<Vec<_>>().join(", ")
    );

    // the action leaves a level and re-enters one deeper
    let one = z.int(1)?;
    let moved = p.act(&one, 4)?.unwrap();
    println!("1 + (3 at depth 2) = {} at depth {}", moved.value(), moved.depth());

    // the cocycle recovers the acting element
    let back = cocycle(&moved, &p)?.unwrap();
    println!(
        "cocycle(moved, p) = {} (stabilized: {})",
        back.value, back.stabilized
    );

    // per-level definedness of the +1 action from level 1
    for lvl in action_definedness(&seq, &one, 1)? {
        println!(
            "level {}: inclusion {} | inside fraction {}",
            lvl.m,
            lvl.holds,
            ratio_string(&lvl.ratio)
        );
    }

    // amenability defects shrink geometrically for the odometer
    let defects = folner_defect(&seq, &one)?;
    println!(
        "translation defects: {}",
        defects.iter().map(ratio_string).collect::<Vec<_>>().join(" ")
    );

    // greedy near tiling of F_4 by translates of F_1
    let (shifts, coverage) = near_tiling(&seq, 1, 4)?;
    println!(
        "F_1 tiles F_4 via {} shifts, coverage {}",
        shifts.len(),
        ratio_string(&coverage)
    );
    Ok(())
}
