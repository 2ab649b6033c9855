//! The built-in shifted-family scenario: progression blocks with head room,
//! a commutant shift certified by an interleaved witness, and the exact
//! agreement between the assembled pipeline and the direct shift map.

use cfkit::iso::{build_auxiliary, build_isomorphism, check_witness, shifted_family};
use cfkit::maps::{cylinders_equal, map_divergence, CylinderMap, ShiftMap};
use cfkit::report::ratio_string;
use cfkit::seq::shift_family_report;
use cfkit::space::{Cylinder, DepthPoint};

fn main() -> cfkit::Result<()> {
    let fam = shifted_family(3)?;
    let seq = fam.seq.clone();
    println!("levels: {:?}", seq.f_levels().iter().map(|f| f.len()).collect::<Vec<_>>());
    println!("shift steps: {:?}", fam.beta);
    println!("accumulated shifts: {:?}", fam.alpha);

    // overlap ratios of the shifted blocks and shapes
    let overlaps = shift_family_report(&seq, &fam.beta)?;
    println!(
        "block overlaps: {}",
        overlaps.c_overlap.iter().map(ratio_string).collect::<Vec<_>>().join(" ")
    );
    println!(
        "shape overlaps: {}",
        overlaps.f_overlap.iter().map(ratio_string).collect::<Vec<_>>().join(" ")
    );

    // the witness carrying the accumulated shifts passes
    let report = check_witness(&seq, &seq, &fam.witness)?;
    println!("witness passes: {}", report.pass);

    let phi = build_isomorphism(&seq, &seq, &fam.witness)?;
    let theta = ShiftMap::from_steps(&seq, &fam.beta)?;

    // the pipeline agrees with the direct shift on every covered depth
    let aux = build_auxiliary(&seq, &seq, &fam.witness)?;
    let covered: Vec<usize> = fam.witness.k[..=aux.depth].to_vec();
    for &depth in &covered {
        let mut agree = 0usize;
        let mut domain = 0usize;
        for v in seq.f(depth).iter() {
            let p = DepthPoint::new(seq.clone(), depth, v.clone())?;
            let cyl = Cylinder::of_point(&p);
            if let (Some(a), Some(b)) = (phi.apply_cylinder(&cyl)?, theta.apply_cylinder(&cyl)?) {
                domain += 1;
                if cylinders_equal(&a, &b)? {
                    agree += 1;
                }
            }
        }
        println!("depth {depth}: {agree}/{domain} mutual-domain points agree");
    }

    let div = map_divergence(&phi, &theta, &covered)?;
    println!(
        "divergence at depths {:?}: {}",
        covered,
        div.iter().map(ratio_string).collect::<Vec<_>>().join(" ")
    );
    Ok(())
}
