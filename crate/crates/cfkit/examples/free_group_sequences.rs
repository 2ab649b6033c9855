//! The machinery is not tied to ℤ: a small parameter sequence over the
//! free group on two generators, with word arithmetic, validation, and
//! cocycles whose stabilization is visible in the tails.

use std::sync::Arc;

use cfkit::group::Group;
use cfkit::report::ratio_string;
use cfkit::seq::CfSequence;
use cfkit::space::{cocycle, folner_defect, DepthPoint};
use cfkit::subset::FiniteSubset;

fn main() -> cfkit::Result<()> {
    let fg = Group::free(2)?;
    let w = |s: &str| fg.parse(s).unwrap();

    // words multiply with cancellation
    let x = w("aB").mul(&w("ba"))?;
    println!("aB · ba = {x}");

    // a two-level sequence: right cosets along distinct letters keep the
    // translates disjoint
    let f0 = FiniteSubset::singleton(fg.identity());
    let c1 = FiniteSubset::new(fg.clone(), vec![fg.identity(), w("a")])?;
    let f1 = c1.clone();
    let c2 = FiniteSubset::new(fg.clone(), vec![fg.identity(), w("bb")])?;
    let f2 = f1.product(&c2)?;
    let seq = Arc::new(CfSequence::new(fg.clone(), vec![f0, f1, f2], vec![c1, c2])?);
    let report = seq.validate();
    println!("free-group sequence accepted: {}", report.accepted);
    println!("F_2 = {}", seq.f(2));

    // cocycles carry reduced words; differing tails stay unstabilized
    let p = DepthPoint::new(seq.clone(), 2, w("abb"))?;
    let q = DepthPoint::new(seq.clone(), 2, w("a"))?;
    let c = cocycle(&p, &q)?.unwrap();
    println!(
        "cocycle(abb, a) = {} (stabilized: {})",
        c.value, c.stabilized
    );
    let same = cocycle(&p, &p)?.unwrap();
    println!("cocycle(abb, abb) = identity: {}", same.value.is_identity());

    // translation defects stay large: free groups are not amenable
    let defects = folner_defect(&seq, &w("a"))?;
    println!(
        "translation defects by a: {}",
        defects.iter().map(ratio_string).collect::<Vec<_>>().join(" ")
    );
    Ok(())
}
