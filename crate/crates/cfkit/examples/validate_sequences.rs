//! Build parameter sequences with the stock constructors, run the
//! structural checks, and see how violations are reported.

use cfkit::seq::CfSequence;
use cfkit::subset::FiniteSubset;

fn main() -> cfkit::Result<()> {
    // the base-2 adding machine: alternating blocks {0, 2^n}
    let odometer = CfSequence::odometer(&[1, 2, 2, 2, 2])?;
    let report = odometer.validate();
    println!("odometer accepted: {}", report.accepted);
    println!(
        "  identity everywhere: shapes {} / blocks {}",
        report.identity_in_f.iter().all(|&b| b),
        report.identity_in_c.iter().all(|&b| b),
    );

    // classical cutting-and-stacking: three columns, one middle spacer
    let chacon = CfSequence::from_cutting_stacking(
        &[3, 3],
        &[vec![0, 1, 0], vec![0, 1, 0]],
        1,
    )?;
    println!("chacon-type levels: {}", chacon.levels());
    for n in 1..=chacon.levels() {
        println!("  C_{n} = {}", chacon.c(n));
    }
    let report = chacon.validate();
    println!(
        "chacon-type accepted: {} (priming level has a one-element block set: {})",
        report.accepted, !report.levels[0].c_size_ok
    );

    // breaking disjointness is caught at its level, with a witness
    let mut c = odometer.c_levels().to_vec();
    c[1] = FiniteSubset::ints(odometer.group(), &[0, 1])?;
    let broken = CfSequence::new(odometer.group().clone(), odometer.f_levels().to_vec(), c)?;
    let report = broken.validate();
    println!("mutated odometer accepted: {}", report.accepted);
    println!("  first failure: {}", report.first_failure().unwrap());

    // sequences round-trip through their canonical JSON documents
    let text = odometer.to_json();
    let parsed = CfSequence::from_json(&text)?;
    println!("json round trip exact: {}", parsed == odometer);
    Ok(())
}
