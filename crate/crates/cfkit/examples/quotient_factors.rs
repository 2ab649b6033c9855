//! Factor structure two ways: the exact quotient of a quaternary odometer
//! onto the dyadic one (with the preimage law), and a measure-style factor
//! witness whose map shifts levels.

use std::sync::Arc;

use cfkit::factor::{build_factor_map, check_factor_witness, FactorWitness};
use cfkit::maps::{quotient_check, quotient_map};
use cfkit::report::{ratio, ratio_string};
use cfkit::seq::{dyadic_odometer, CfSequence};
use cfkit::space::DepthPoint;
use cfkit::subset::FiniteSubset;

fn main() -> cfkit::Result<()> {
    // quotient: bases (1,4,4,4) onto (1,2,2,2) via A_n = 2^n·{0..2^n−1}
    let t = Arc::new(CfSequence::odometer(&[1, 4, 4, 4])?);
    let tt = Arc::new(CfSequence::odometer(&[1, 2, 2, 2])?);
    let g = t.group().clone();
    let a: Vec<FiniteSubset> = (1..=3usize)
        .map(|n| {
            let step = 1i64 << n;
            FiniteSubset::ints(&g, &(0..step).map(|j| j * step).collect::<Vec<_>>()).unwrap()
        })
        .collect();
    println!("quotient conditions pass: {}", quotient_check(&t, &tt, &a)?.pass);
    let q = quotient_map(&t, &tt, &a)?;

    // preimage law: the fiber over each level element is its A-translate
    for ft in tt.f(2).iter().take(2) {
        let mut fiber = Vec::new();
        for v in t.f(2).iter() {
            let p = DepthPoint::new(t.clone(), 2, v.clone())?;
            if let Some((img, _)) = q.apply_point(&p)? {
                if img.value() == ft {
                    fiber.push(v.to_string());
                }
            }
        }
        println!("fiber over {ft}: {{{}}}", fiber.join(", "));
    }

    // factor witness: the dyadic machine as a factor of itself, one level up
    let seq = Arc::new(dyadic_odometer(4));
    let w = FactorWitness {
        k: vec![0, 2, 3, 4],
        j: vec![
            FiniteSubset::ints(&g, &[0, 2])?,
            FiniteSubset::ints(&g, &[0, 4])?,
            FiniteSubset::ints(&g, &[0, 8])?,
        ],
        eps: vec![ratio(2, 1), ratio(1, 8), ratio(1, 16)],
    };
    let report = check_factor_witness(&seq, &seq, &w)?;
    println!("factor witness passes: {}", report.pass);
    for s in &report.steps {
        println!(
            "  step {}: fill defect {} | block defect {}",
            s.n,
            ratio_string(&s.fill_defect),
            ratio_string(&s.block_defect)
        );
    }
    let fm = build_factor_map(&seq, &seq, &w)?;
    println!(
        "factor map domain fractions: {}",
        fm.domain_fractions.iter().map(ratio_string).collect::<Vec<_>>().join(" ")
    );
    for v in 0..4 {
        let p = DepthPoint::new(seq.clone(), 2, seq.group().int(v)?)?;
        let (img, _) = fm.map.apply_point(&p)?.unwrap();
        println!("  {v} at depth 2 ↦ {} at factor depth {}", img.value(), img.depth());
    }
    Ok(())
}
