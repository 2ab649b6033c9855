//! Chain equivalence between two mixed-radix odometers: interval block
//! factorizations at alternating scales, the condition checks, and the
//! exact cylinder behavior of the induced map.

use std::sync::Arc;

use cfkit::group::Group;
use cfkit::maps::{chain_check, chain_map, CylinderMap};
use cfkit::report::ratio_string;
use cfkit::seq::CfSequence;
use cfkit::space::Cylinder;
use cfkit::subset::FiniteSubset;

fn main() -> cfkit::Result<()> {
    let z = Group::integers();
    let interval = |scale: i64, count: i64| -> FiniteSubset {
        FiniteSubset::ints(&z, &(0..count).map(|j| j * scale).collect::<Vec<_>>()).unwrap()
    };

    // blocks factor as C_n = A_{n-1}·B_n and C'_n = B_n·A_n with intervals
    // at alternating scales: T has radices (2, 3·2), T' has radices (2·3, 2·2)
    let a = vec![
        FiniteSubset::singleton(z.identity()),
        interval(2, 3), // A_1 = {0, 2, 4}
        interval(12, 2), // A_2 = {0, 12}
    ];
    let b = vec![
        interval(1, 2), // B_1 = {0, 1}
        interval(6, 2), // B_2 = {0, 6}
    ];
    let t = Arc::new(CfSequence::new(
        z.clone(),
        vec![
            interval(1, 1),
            interval(1, 2),
            interval(1, 12),
        ],
        vec![a[0].product(&b[0])?, a[1].product(&b[1])?],
    )?);
    let t_prime = Arc::new(CfSequence::new(
        z.clone(),
        vec![
            interval(1, 1),
            interval(1, 6),
            interval(1, 24),
        ],
        vec![b[0].product(&a[1])?, b[1].product(&a[2])?],
    )?);

    let report = chain_check(&t, &t_prime, &a, &b)?;
    println!("chain conditions pass: {}", report.pass);
    for l in &report.levels {
        println!(
            "  level {}: products {}/{} inclusions {}/{} triviality {}/{}",
            l.level,
            l.left_product_ok,
            l.right_product_ok,
            l.left_inclusion_ok,
            l.right_inclusion_ok,
            l.left_triviality_ok,
            l.right_triviality_ok
        );
    }

    let psi = chain_map(&t, &t_prime, &a, &b)?;

    // the identity block at each level maps onto the matching A-set
    for n in 1..=2usize {
        let block = Cylinder::identity_block(&t, n - 1)?;
        let image = psi.apply_cylinder(&block)?.unwrap();
        println!("image of [0]_{} = {} at level {}", n - 1, image.set(), image.level());
    }

    // the full truncation maps bijectively, preserving every measure
    let full = Cylinder::full_level(&t, 2)?;
    let mut total = 0usize;
    for p in full.points()? {
        let cyl = Cylinder::of_point(&p);
        let img = psi.apply_cylinder(&cyl)?.unwrap();
        assert_eq!(
            cyl.measure(false)?.value,
            img.measure(false)?.value,
            "measure preserved"
        );
        total += img.set().len();
    }
    println!(
        "depth-2 truncation: {} source points cover {} target points (target has {})",
        full.set().len(),
        total,
        psi.target().f(2).len()
    );
    println!(
        "source mass {} = target mass {}",
        ratio_string(&t.mass_profile()?[2]),
        ratio_string(&t_prime.mass_profile()?[2])
    );
    Ok(())
}
