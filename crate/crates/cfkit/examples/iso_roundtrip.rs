//! The full isomorphism round trip on the base-2 adding machine: a witness
//! with zero defects, the auxiliary chain-equivalent pair it generates, and
//! the seven-stage map assembled from it.

use std::sync::Arc;

use cfkit::iso::{
    auxiliary_chain_report, build_auxiliary, build_isomorphism, check_witness, default_eps,
    IsoWitness,
};
use cfkit::maps::{cylinders_equal, CylinderMap};
use cfkit::report::ratio_string;
use cfkit::seq::dyadic_odometer;
use cfkit::space::Cylinder;
use cfkit::subset::FiniteSubset;

fn main() -> cfkit::Result<()> {
    let seq = Arc::new(dyadic_odometer(5));
    let zs = |lists: &[&[i64]]| -> Vec<FiniteSubset> {
        lists
            .iter()
            .map(|ns| FiniteSubset::ints(seq.group(), ns).unwrap())
            .collect()
    };

    // the canonical self-witness: interleaved levels with block-aligned J's
    let witness = IsoWitness {
        k: vec![0, 0, 2, 4],
        l: vec![0, 1, 3, 5],
        j: zs(&[&[0], &[0, 2], &[0, 8]]),
        j_tilde: zs(&[&[0], &[0, 1], &[0, 4], &[0, 16]]),
        eps: default_eps(4),
    };

    let report = check_witness(&seq, &seq, &witness)?;
    println!("witness passes: {}", report.pass);
    for s in &report.steps {
        if let Some(d) = &s.block_defect {
            println!("  step {}: block defect {}", s.n, ratio_string(d));
        }
    }

    let aux = build_auxiliary(&seq, &seq, &witness)?;
    println!(
        "auxiliary pair: {} levels, defect sums {}",
        aux.depth,
        aux.sums.iter().map(ratio_string).collect::<Vec<_>>().join(" ")
    );
    println!(
        "auxiliary chain conditions pass: {}",
        auxiliary_chain_report(&aux, &witness)?.pass
    );

    let phi = build_isomorphism(&seq, &seq, &witness)?;

    // block law: the identity block at level k_n lands on [J̃_n] at level l_n
    for n in 1..=aux.depth {
        let block = Cylinder::identity_block(&seq, witness.k[n])?;
        let image = phi.apply_cylinder(&block)?.unwrap();
        let expected = Cylinder::new(seq.clone(), witness.l[n], witness.j_tilde[n].clone())?;
        println!(
            "image of [0]_{} = {} at level {} (matches J̃_{n}: {})",
            witness.k[n],
            image.set(),
            image.level(),
            cylinders_equal(&image, &expected)?
        );
    }

    // the map is a measure-preserving bijection on the depth-3 truncation
    let mut covered = 0usize;
    for p in Cylinder::full_level(&seq, 3)?.points()? {
        let cyl = Cylinder::of_point(&p);
        let img = phi.apply_cylinder(&cyl)?.unwrap();
        assert_eq!(cyl.measure(false)?.value, img.measure(false)?.value);
        covered += img.set().len();
    }
    println!(
        "depth-3 truncation: images cover {} of {} target points",
        covered,
        phi.target().f(5).len()
    );
    Ok(())
}
