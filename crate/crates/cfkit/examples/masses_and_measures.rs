//! Exact mass bookkeeping: level masses, cylinder measures, and the
//! normalized (probability-proxy) variant.

use std::sync::Arc;

use cfkit::report::ratio_string;
use cfkit::seq::CfSequence;
use cfkit::space::Cylinder;
use cfkit::subset::FiniteSubset;

fn main() -> cfkit::Result<()> {
    let chacon = Arc::new(CfSequence::from_cutting_stacking(
        &[3, 3, 3],
        &[vec![0, 1, 0], vec![0, 1, 0], vec![0, 1, 0]],
        1,
    )?);

    let masses = chacon.mass_profile()?;
    println!(
        "chacon-type masses: {}",
        masses.iter().map(ratio_string).collect::<Vec<_>>().join(" ")
    );

    // a two-point cylinder three levels down
    let set = FiniteSubset::ints(chacon.group(), &[0, 1])?;
    let cyl = Cylinder::new(chacon.clone(), 3, set)?;
    let m = cyl.measure(false)?;
    println!("[{{0,1}}]_3 measure: {}", ratio_string(&m.value));
    let normalized = cyl.measure(true)?;
    println!(
        "normalized: {} (warning: {})",
        ratio_string(&normalized.value),
        normalized.warning.as_deref().unwrap_or("none")
    );

    // singleton measures always add up to the level mass
    #[allow(clippy::needless_range_loop)]
    for n in 0..=chacon.levels() {
        let total: num::BigRational = chacon
            .f(n)
            .iter()
            .map(|e| {
                Cylinder::new(chacon.clone(), n, FiniteSubset::singleton(e.clone()))
                    .unwrap()
                    .measure(false)
                    .unwrap()
                    .value
            })
            .sum();
        println!(
            "level {n}: sum of point measures {} = mass {}",
            ratio_string(&total),
            ratio_string(&masses[n])
        );
    }
    Ok(())
}
