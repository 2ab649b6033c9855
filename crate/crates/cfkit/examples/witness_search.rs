//! Bounded witness search: deterministic results independent of worker
//! count, and an honest "not found within bounds" on a mismatched pair.

use std::sync::Arc;

use cfkit::iso::{check_witness, default_eps, search_witness, SearchBounds};
use cfkit::report::ratio;
use cfkit::seq::{dyadic_odometer, CfSequence};

fn main() -> cfkit::Result<()> {
    let dyadic = Arc::new(dyadic_odometer(4));
    let eps = default_eps(4);
    let bounds = SearchBounds::desk(4);

    let single = search_witness(&dyadic, &dyadic, &eps, &bounds, 1)?.expect("self-witness");
    let parallel = search_witness(&dyadic, &dyadic, &eps, &bounds, 8)?.expect("self-witness");
    println!(
        "found witness: k = {:?}, l = {:?}",
        single.k, single.l
    );
    println!(
        "identical across workers: {}",
        serde_json::to_string(&single.to_doc()).unwrap()
            == serde_json::to_string(&parallel.to_doc()).unwrap()
    );
    println!(
        "re-passes its own checks: {}",
        check_witness(&dyadic, &dyadic, &single)?.pass
    );

    // dyadic against triadic under tight tolerances: nothing within bounds
    let triadic = Arc::new(CfSequence::odometer(&[1, 3, 3, 3])?);
    let tight = vec![ratio(1, 8); 4];
    let missing = search_witness(&dyadic, &triadic, &tight, &SearchBounds::desk(3), 1)?;
    println!(
        "dyadic vs triadic under tight tolerances: {}",
        if missing.is_none() { "not found within bounds" } else { "found" }
    );

    // loose tolerances always admit some witness when the inclusions permit
    let loose = vec![ratio(10, 1); 3];
    let trivial = search_witness(&dyadic, &triadic, &loose, &SearchBounds::desk(3), 1)?;
    println!(
        "same pair under loose tolerances: found = {} (checkable: {})",
        trivial.is_some(),
        trivial
            .map(|w| check_witness(&dyadic, &triadic, &w).unwrap().pass)
            .unwrap_or(false)
    );
    Ok(())
}
