//! Acceptance suite: one test per criterion, each printing a pass/fail
//! line. Everything is exact rational or integer arithmetic; there are no
//! tolerances beyond the bounds the checked conditions themselves carry.

use std::sync::Arc;

use num::BigRational;

use cfkit::factor::{
    approx_eq, non_overlapping, odometer_defects, search_odometer_telescoping, OdometerSpec,
};
use cfkit::group::Group;
use cfkit::iso::{
    auxiliary_chain_report, build_auxiliary, build_isomorphism, check_witness, default_eps,
    search_witness, shifted_family, IsoWitness, SearchBounds,
};
use cfkit::maps::{
    calibrate, chain_check, chain_map, cylinders_equal, map_divergence, reduce, telescope,
    CylinderMap, PointMap, ShiftMap,
};
use cfkit::report::{parse_ratio, ratio_string};
use cfkit::seq::{dyadic_odometer, CfSequence};
use cfkit::space::{cocycle, Cylinder, DepthPoint, SeqRef};
use cfkit::subset::FiniteSubset;

fn report(n: usize, name: &str, ok: bool) {
    println!(
        "criterion {n:2} [{}] {name}",
        if ok { "PASS" } else { "FAIL" }
    );
    assert!(ok, "criterion {n} failed: {name}");
}

fn ratio(n: i64, d: i64) -> BigRational {
    BigRational::new(n.into(), d.into())
}

/// Small deterministic generator so randomized criteria are reproducible.
struct Rng(u64);

impl Rng {
    fn new(seed: u64) -> Rng {
        Rng(seed.max(1))
    }

    fn next(&mut self) -> u64 {
        let mut x = self.0;
        x ^= x << 13;
        x ^= x >> 7;
        x ^= x << 17;
        self.0 = x;
        x
    }

    fn below(&mut self, n: u64) -> u64 {
        self.next() % n
    }
}

fn random_cutting_stacking(rng: &mut Rng) -> CfSequence {
    let cuts_len = 1 + rng.below(3) as usize;
    let mut cuts = Vec::new();
    let mut spacers = Vec::new();
    for _ in 0..cuts_len {
        let r = 2 + rng.below(3) as u32;
        cuts.push(r);
        spacers.push((0..r).map(|_| rng.below(3)).collect::<Vec<u64>>());
    }
    let h1 = 2 + rng.below(3) as i64;
    CfSequence::from_cutting_stacking(&cuts, &spacers, h1).expect("well-formed parameters")
}

// ---------------------------------------------------------------------------

#[test]
fn criterion_01_structural_validation() {
    let odo = CfSequence::odometer(&[1, 2, 2, 2, 2]).unwrap();
    let mut ok = odo.validate().accepted;

    let mut rng = Rng::new(0x5eed_0001);
    for _ in 0..10 {
        let seq = random_cutting_stacking(&mut rng);
        let rep = seq.validate();
        ok &= rep.accepted;

        // mutation 1: break a block set's disjointness by inserting a
        // colliding element next to an existing one
        let level = 1 + rng.below(seq.levels() as u64) as usize;
        let mut c = seq.c_levels().to_vec();
        let base = c[level - 1].elements()[0].clone();
        let collide = base.mul(&seq.group().int(1).unwrap()).unwrap();
        if !c[level - 1].contains(&collide) {
            let mut set = c[level - 1].clone();
            set.insert(collide).unwrap();
            c[level - 1] = set;
            let broken = CfSequence::new(seq.group().clone(), seq.f_levels().to_vec(), c).unwrap();
            let rep = broken.validate();
            let clause = &rep.levels[level - 1];
            ok &= !rep.accepted && (!clause.disjoint_ok || !clause.inclusion_ok);
        }

        // mutation 2: collapse a block set to one element
        let mut c = seq.c_levels().to_vec();
        c[level - 1] = FiniteSubset::singleton(c[level - 1].elements()[0].clone());
        let broken = CfSequence::new(seq.group().clone(), seq.f_levels().to_vec(), c).unwrap();
        let rep = broken.validate();
        ok &= !rep.accepted && !rep.levels[level - 1].c_size_ok;

        // mutation 3: a non-singleton base level
        let mut f = seq.f_levels().to_vec();
        f[0] = FiniteSubset::ints(seq.group(), &[0, 1]).unwrap();
        let broken = CfSequence::new(seq.group().clone(), f, seq.c_levels().to_vec()).unwrap();
        ok &= !broken.validate().f0_singleton;

        // mutation 4: drop the bottom of a tower shape (always covered by
        // the zero translate) so inclusion fails at that level
        let mut f = seq.f_levels().to_vec();
        let trimmed: Vec<_> = f[level].elements()[1..].to_vec();
        f[level] = FiniteSubset::new(seq.group().clone(), trimmed).unwrap();
        let broken = CfSequence::new(seq.group().clone(), f, seq.c_levels().to_vec()).unwrap();
        let rep = broken.validate();
        ok &= !rep.accepted && !rep.levels[level - 1].inclusion_ok;
    }

    report(1, "structural validation with named failing clauses", ok);
}

#[test]
fn criterion_02_measure_exactness() {
    // independent oracle: the height recurrence h_{n+1} = 3h_n + 1 computed
    // by hand, masses 1, 1, h_2/3, h_3/9, h_4/27
    let mut heights = vec![1i64];
    for _ in 0..3 {
        heights.push(3 * heights.last().unwrap() + 1);
    }
    let expected = vec![
        ratio(1, 1),
        ratio(1, 1),
        ratio(heights[1], 3),
        ratio(heights[2], 9),
        ratio(heights[3], 27),
    ];

    let chacon = CfSequence::from_cutting_stacking(
        &[3, 3, 3],
        &[vec![0, 1, 0], vec![0, 1, 0], vec![0, 1, 0]],
        1,
    )
    .unwrap();
    let masses = chacon.mass_profile().unwrap();
    let mut ok = masses == expected;
    ok &= masses
        .iter()
        .map(ratio_string)
        .collect::<Vec<_>>()
        == vec!["1/1", "1/1", "4/3", "13/9", "40/27"];

    // cylinder measures sum to the level mass at every level
    let seq = Arc::new(chacon);
    #[allow(clippy::needless_range_loop)]
    for n in 0..=seq.levels() {
        let total: BigRational = seq
            .f(n)
            .iter()
            .map(|e| {
                Cylinder::new(seq.clone(), n, FiniteSubset::singleton(e.clone()))
                    .unwrap()
                    .measure(false)
                    .unwrap()
                    .value
            })
            .sum();
        ok &= total == masses[n];
    }

    report(2, "exact mass profile with independent recurrence oracle", ok);
}

/// Mixed-radix interval chain data: block factorizations with interval A/B
/// sets at alternating scales. Returns (T, T', A-list, B-list).
fn interval_chain_pair(
    factors: &[(i64, i64)],
) -> (SeqRef, SeqRef, Vec<FiniteSubset>, Vec<FiniteSubset>) {
    let z = Group::integers();
    let interval = |scale: i64, count: i64| -> FiniteSubset {
        FiniteSubset::ints(&z, &(0..count).map(|j| j * scale).collect::<Vec<_>>()).unwrap()
    };
    let mut a_sets = vec![FiniteSubset::singleton(z.identity())];
    let mut b_sets = Vec::new();
    let mut t_f = vec![FiniteSubset::int_range(&z, 1).unwrap()];
    let mut tp_f = vec![FiniteSubset::int_range(&z, 1).unwrap()];
    let mut t_c = Vec::new();
    let mut tp_c = Vec::new();
    let mut scale = 1i64;
    for &(a_count, b_count) in factors {
        let b = interval(scale, b_count);
        let a = interval(scale * b_count, a_count);
        t_c.push(a_sets.last().unwrap().product(&b).unwrap());
        tp_c.push(b.product(&a).unwrap());
        b_sets.push(b);
        a_sets.push(a);
        scale *= a_count * b_count;
        // tower shapes: full intervals at the accumulated sizes
        let t_size = t_f.last().unwrap().len() as i64 * t_c.last().unwrap().len() as i64;
        let tp_size = tp_f.last().unwrap().len() as i64 * tp_c.last().unwrap().len() as i64;
        t_f.push(FiniteSubset::int_range(&z, t_size).unwrap());
        tp_f.push(FiniteSubset::int_range(&z, tp_size).unwrap());
    }
    let t = Arc::new(CfSequence::new(z.clone(), t_f, t_c).unwrap());
    let tp = Arc::new(CfSequence::new(z, tp_f, tp_c).unwrap());
    (t, tp, a_sets, b_sets)
}

#[test]
fn criterion_03_elementary_map_invariants() {
    let mut ok = true;
    let mut rng = Rng::new(0x5eed_0003);

    for _ in 0..20 {
        let seq = Arc::new(random_cutting_stacking(&mut rng));
        let n = seq.levels();

        // (a) telescoping composition law, structurally
        if n >= 2 {
            let mid = 1 + rng.below((n - 1) as u64) as usize;
            let inner: Vec<usize> = vec![0, mid, n];
            let (step1, _) = telescope(&seq, &inner).unwrap();
            let (step2, _) = telescope(&step1, &[0, 1]).unwrap();
            let (direct, _) = telescope(&seq, &[0, mid]).unwrap();
            ok &= *step2 == *direct;
        }

        // (b) reduction scale = exact truncation-count ratio for points
        // based at level 0
        let mut sets = Vec::new();
        for m in 1..=n {
            let c = seq.c(m);
            let keep = if c.len() > 2 && rng.below(2) == 0 {
                c.elements()[..c.len() - 1].to_vec()
            } else {
                c.elements().to_vec()
            };
            sets.push(FiniteSubset::new(seq.group().clone(), keep).unwrap());
        }
        if let Ok((reduced, _map, scale)) = reduce(&seq, &sets) {
            let count_based = |s: &SeqRef| -> usize {
                s.f(s.levels())
                    .iter()
                    .filter(|v| {
                        DepthPoint::new(s.clone(), s.levels(), (*v).clone())
                            .unwrap()
                            .factorize(0)
                            .unwrap()
                            .is_some()
                    })
                    .count()
            };
            let ratio_counts = ratio(count_based(&reduced) as i64, count_based(&seq) as i64);
            ok &= ratio_counts == scale;
        }

        // (c) cocycle preservation under calibration and telescoping
        let z = seq.group().clone();
        let zs: Vec<_> = (0..n + 1)
            .map(|_| z.int(rng.below(5) as i64 - 2).unwrap())
            .collect();
        let (_, cal) = calibrate(&seq, &zs).unwrap();
        let (_, tel) = telescope(&seq, &[0, n]).unwrap();
        let depth = n.min(4);
        let pts: Vec<DepthPoint> = Cylinder::full_level(&seq, depth)
            .unwrap()
            .points()
            .unwrap();
        for p in pts.iter().take(6) {
            for q in pts.iter().take(6) {
                let before = cocycle(p, q).unwrap().unwrap();
                for map in [&cal, &tel] {
                    let ip = map.apply_point(p).unwrap().unwrap().0;
                    let iq = map.apply_point(q).unwrap().unwrap().0;
                    let after = cocycle(&ip, &iq).unwrap().unwrap();
                    ok &= before.value == after.value;
                }
            }
        }
    }

    // (c) continued: chain maps on mixed-radix interval pairs
    for factors in [
        vec![(2i64, 2i64), (2, 2)],
        vec![(2, 3), (3, 2)],
        vec![(3, 2), (2, 2)],
    ] {
        let (t, tp, a, b) = interval_chain_pair(&factors);
        let map = chain_map(&t, &tp, &a, &b).unwrap();
        let depth = t.levels().min(4);
        let pts: Vec<DepthPoint> = Cylinder::full_level(&t, depth).unwrap().points().unwrap();
        for p in &pts {
            for q in &pts {
                let before = cocycle(p, q).unwrap().unwrap();
                let ip = map.apply_point(p).unwrap().unwrap().0;
                let iq = map.apply_point(q).unwrap().unwrap().0;
                let after = cocycle(&ip, &iq).unwrap().unwrap();
                ok &= before.value == after.value;
            }
        }
    }

    report(3, "telescoping law, reduction scale, cocycle preservation", ok);
}

#[test]
fn criterion_04_chain_equivalence_oracle() {
    let mut ok = true;
    let mut instances: Vec<(SeqRef, SeqRef, Vec<FiniteSubset>, Vec<FiniteSubset>)> = vec![
        interval_chain_pair(&[(2, 2), (2, 2)]),
        interval_chain_pair(&[(2, 3), (3, 2)]),
        interval_chain_pair(&[(3, 2), (2, 3)]),
        interval_chain_pair(&[(2, 2), (3, 3)]),
    ];
    // identity chain data over the dyadic odometer
    {
        let seq = Arc::new(dyadic_odometer(4));
        let a = vec![FiniteSubset::singleton(seq.group().identity()); 5];
        let b: Vec<FiniteSubset> = seq.c_levels().to_vec();
        instances.push((seq.clone(), seq, a, b));
    }

    for (t, tp, a, b) in instances.drain(..) {
        let chk = chain_check(&t, &tp, &a, &b).unwrap();
        ok &= chk.pass;
        if !chk.pass {
            continue;
        }
        let map = chain_map(&t, &tp, &a, &b).unwrap();
        let depth = t.levels().min(4);

        // brute-force oracle: enumerate both truncations in full
        for m in 0..=depth {
            let mut images: Vec<Cylinder> = Vec::new();
            let mut total = 0usize;
            let mut union = FiniteSubset::empty(t.group().clone());
            for p in Cylinder::full_level(&t, m).unwrap().points().unwrap() {
                let img = map.apply_cylinder(&Cylinder::of_point(&p)).unwrap().unwrap();
                // measure preservation, cylinder by cylinder
                ok &= Cylinder::of_point(&p).measure(false).unwrap().value
                    == img.measure(false).unwrap().value;
                total += img.set().len();
                union = union.union(img.set()).unwrap();
                images.push(img);
            }
            // bijection: disjoint fibers covering the target truncation
            ok &= union.len() == total;
            ok &= &union == tp.f(m);
        }

        // block image law at every level, via pointwise enumeration at the
        // deepest stored depth
        for n in 1..=depth {
            if !t.f(n - 1).contains(&t.group().identity()) {
                continue;
            }
            let block = Cylinder::identity_block(&t, n - 1).unwrap();
            let expected = Cylinder::new(tp.clone(), n - 1, a[n - 1].clone()).unwrap();
            let image = map.apply_cylinder(&block).unwrap().unwrap();
            ok &= cylinders_equal(&image, &expected).unwrap();

            // oracle route: push every deepest-level point of the block
            let deep = block.refine_to(depth).unwrap();
            let mut union = FiniteSubset::empty(t.group().clone());
            for p in deep.points().unwrap() {
                let img = map.apply_cylinder(&Cylinder::of_point(&p)).unwrap().unwrap();
                union = union.union(img.set()).unwrap();
            }
            let expected_deep = expected.refine_to(depth).unwrap();
            ok &= &union == expected_deep.set();
        }
    }

    report(4, "chain maps are measure-preserving bijections with exact block images", ok);
}

fn dyadic_self_witness(seq: &SeqRef) -> IsoWitness {
    let zs = |lists: &[&[i64]]| -> Vec<FiniteSubset> {
        lists
            .iter()
            .map(|ns| FiniteSubset::ints(seq.group(), ns).unwrap())
            .collect()
    };
    IsoWitness {
        k: vec![0, 0, 2, 4],
        l: vec![0, 1, 3, 5],
        j: zs(&[&[0], &[0, 2], &[0, 8]]),
        j_tilde: zs(&[&[0], &[0, 1], &[0, 4], &[0, 16]]),
        eps: default_eps(4),
    }
}

#[test]
fn criterion_05_witness_round_trip() {
    let seq = Arc::new(dyadic_odometer(5));
    let w = dyadic_self_witness(&seq);
    let mut ok = true;

    // all defects exactly zero
    let rep = check_witness(&seq, &seq, &w).unwrap();
    ok &= rep.pass;
    for s in &rep.steps {
        for d in [&s.block_defect, &s.block_defect_primed].into_iter().flatten() {
            ok &= d == &ratio(0, 1);
        }
    }

    // auxiliary pair with chain data passing the chain conditions
    let aux = build_auxiliary(&seq, &seq, &w).unwrap();
    ok &= aux.sums.iter().all(|s| s == &ratio(0, 1));
    ok &= aux.v.validate().structurally_valid && aux.w.validate().structurally_valid;
    ok &= auxiliary_chain_report(&aux, &w).unwrap().pass;

    // assembled isomorphism: bijective, measure preserving, exact block law
    let phi = build_isomorphism(&seq, &seq, &w).unwrap();
    for n in 1..=aux.depth {
        let block = Cylinder::identity_block(&seq, w.k[n]).unwrap();
        let image = phi.apply_cylinder(&block).unwrap().unwrap();
        let expected = Cylinder::new(seq.clone(), w.l[n], w.j_tilde[n].clone()).unwrap();
        ok &= cylinders_equal(&image, &expected).unwrap();
    }
    let depth = 3;
    let mut union = FiniteSubset::empty(seq.group().clone());
    let mut total = 0usize;
    let mut image_level = None;
    for p in Cylinder::full_level(&seq, depth).unwrap().points().unwrap() {
        let cyl = Cylinder::of_point(&p);
        let img = phi.apply_cylinder(&cyl).unwrap().unwrap();
        ok &= cyl.measure(false).unwrap().value == img.measure(false).unwrap().value;
        total += img.set().len();
        union = union.union(img.set()).unwrap();
        image_level.get_or_insert(img.level());
        ok &= image_level == Some(img.level());
    }
    ok &= union.len() == total;
    if let Some(level) = image_level {
        ok &= &union == phi.target().f(level);
    }

    report(5, "self-witness round trip: defects, chain pair, exact pipeline", ok);
}

#[test]
fn criterion_06_pipeline_matches_direct_shift() {
    let fam = shifted_family(3).unwrap();
    let seq = fam.seq.clone();
    let mut ok = seq.validate().accepted;

    // the witness passes with its stored tolerances
    let rep = check_witness(&seq, &seq, &fam.witness).unwrap();
    ok &= rep.pass;

    let phi = build_isomorphism(&seq, &seq, &fam.witness).unwrap();
    let theta = ShiftMap::from_steps(&seq, &fam.beta).unwrap();

    // the depths the seven-map pipeline stores data for: the k-levels of
    // the interleaving it covers
    let aux = build_auxiliary(&seq, &seq, &fam.witness).unwrap();
    let covered: Vec<usize> = fam.witness.k[..=aux.depth].to_vec();

    // pointwise agreement on 100% of the mutual domain at every covered depth
    for &depth in &covered {
        let mut mutual = 0usize;
        for v in seq.f(depth).iter() {
            let p = DepthPoint::new(seq.clone(), depth, v.clone()).unwrap();
            let cyl = Cylinder::of_point(&p);
            let pipeline_img = phi.apply_cylinder(&cyl).unwrap();
            let direct_img = theta.apply_cylinder(&cyl).unwrap();
            if let (Some(a), Some(b)) = (&pipeline_img, &direct_img) {
                ok &= cylinders_equal(a, b).unwrap();
                mutual += 1;
            }
        }
        ok &= mutual > 0;
    }

    // and the divergence profile vanishes exactly there
    let div = map_divergence(&phi, &theta, &covered).unwrap();
    ok &= div.iter().all(|d| d == &ratio(0, 1));

    report(6, "seven-map pipeline equals the direct shift on its domain", ok);
}

#[test]
fn criterion_07_quotient_preimage_law() {
    // quaternary odometer onto the dyadic one: A_n = 2^n·{0..2^n−1}
    let t = Arc::new(CfSequence::odometer(&[1, 4, 4, 4]).unwrap());
    let tt = Arc::new(CfSequence::odometer(&[1, 2, 2, 2]).unwrap());
    let g = t.group().clone();
    let a: Vec<FiniteSubset> = (1..=3usize)
        .map(|n| {
            let step = 1i64 << n;
            FiniteSubset::ints(&g, &(0..step).map(|j| j * step).collect::<Vec<_>>()).unwrap()
        })
        .collect();
    let mut ok = cfkit::maps::quotient_check(&t, &tt, &a).unwrap().pass;
    let q = cfkit::maps::quotient_map(&t, &tt, &a).unwrap();

    // preimage law at every level, full enumeration
    for n in 1..=3usize {
        for ft in tt.f(n).iter() {
            let mut pre = Vec::new();
            for v in t.f(n).iter() {
                let p = DepthPoint::new(t.clone(), n, v.clone()).unwrap();
                if let Some((img, _)) = q.apply_point(&p).unwrap() {
                    if img.value() == ft && img.depth() == n {
                        pre.push(v.clone());
                    }
                }
            }
            let pre = FiniteSubset::new(g.clone(), pre).unwrap();
            let expected = FiniteSubset::singleton(ft.clone()).product(&a[n - 1]).unwrap();
            ok &= pre == expected;
        }
    }

    // equivariance for |g| ≤ 4 at the deepest level (where the action
    // cannot deepen, so both routes stay at fixed depth)
    let top = t.levels();
    for shift in [-4i64, -3, -2, -1, 1, 2, 3, 4] {
        let gg = g.int(shift).unwrap();
        for v in t.f(top).iter() {
            let p = DepthPoint::new(t.clone(), top, v.clone()).unwrap();
            let Some(moved) = p.act(&gg, top).unwrap() else {
                continue;
            };
            let (Some((img_moved, _)), Some((img, _))) = (
                q.apply_point(&moved).unwrap(),
                q.apply_point(&p).unwrap(),
            ) else {
                continue;
            };
            let Some(img_acted) = img.act(&gg, img.depth()).unwrap() else {
                continue;
            };
            ok &= img_moved == img_acted;
        }
    }

    report(7, "quotient preimage law and equivariance", ok);
}

#[test]
fn criterion_08_odometer_discrimination() {
    let mut ok = true;

    // triadic rank-one against base-3: all block defects exactly zero
    let t = cfkit::factor::triadic_rank_one(4).unwrap();
    let odo = OdometerSpec {
        d: vec![1, 3, 3, 3, 3],
    };
    let k: Vec<usize> = (0..=4).collect();
    for d in odometer_defects(&t, &odo, &k).unwrap() {
        ok &= d.raw == ratio(0, 1) && d.best == ratio(0, 1);
    }
    ok &= search_odometer_telescoping(
        &t,
        &odo,
        &(1..=4).map(|n| ratio(1, 1 << n)).collect::<Vec<_>>(),
    )
    .unwrap()
    .is_some();

    // Chacon-type against the same bases: every product block keeps a
    // best-residue defect of at least 1/3 (exhaustive scan to depth 6)
    let chacon = Arc::new(
        CfSequence::from_cutting_stacking(
            &[3, 3, 3, 3, 3],
            &vec![vec![0, 1, 0]; 5],
            1,
        )
        .unwrap(),
    );
    let odo6 = OdometerSpec {
        d: vec![1, 3, 3, 3, 3, 3, 3],
    };
    for a in 0..chacon.levels() {
        for b in (a + 1)..=chacon.levels() {
            // skip the degenerate priming block {0}
            let block = chacon.product_block(a, b).unwrap();
            if block.len() == 1 {
                continue;
            }
            // exhaustive residue count against the first binding modulus;
            // coarser residue classes only increase the defect
            let mut counts = [0usize; 3];
            for e in block.iter() {
                counts[e.as_int().unwrap().rem_euclid(3) as usize] += 1;
            }
            let best_hits = *counts.iter().max().unwrap();
            let defect = ratio((block.len() - best_hits) as i64, block.len() as i64);
            ok &= defect >= ratio(1, 3);
        }
    }

    // so the greedy with halving thresholds reports not-found
    let thresholds: Vec<BigRational> = (1..=6).map(|n| ratio(1, 1 << n)).collect();
    ok &= search_odometer_telescoping(&chacon, &odo6, &thresholds)
        .unwrap()
        .is_none();

    report(8, "adding-machine factor criterion discriminates", ok);
}

#[test]
fn criterion_09_approx_calculus() {
    let g = Group::integers();
    let mut rng = Rng::new(0x5eed_0009);
    let mut ok = true;

    let random_set = |rng: &mut Rng| -> FiniteSubset {
        let size = 1 + rng.below(12) as usize;
        let elems: Vec<i64> = (0..size).map(|_| rng.below(41) as i64 - 20).collect();
        FiniteSubset::ints(&g, &elems).unwrap()
    };

    for _ in 0..1000 {
        let a = random_set(&mut rng);
        let b = random_set(&mut rng);
        let d = random_set(&mut rng);

        // the tightest tolerances that make the relations hold strictly
        let eps = ratio(a.symmetric_difference(&b).len() as i64, b.len() as i64)
            + ratio(1, 1_000_000);
        let delta = ratio(b.symmetric_difference(&d).len() as i64, d.len() as i64)
            + ratio(1, 1_000_000);
        assert!(approx_eq(&a, &b, &eps));
        assert!(approx_eq(&b, &d, &delta));

        // inverse bound, when meaningful
        if eps < ratio(1, 1) {
            let inv = eps.clone() / (ratio(1, 1) - eps.clone());
            ok &= approx_eq(&b, &a, &inv);
        }

        // transitivity bound
        let tri = eps.clone() + delta.clone() + eps.clone() * delta.clone();
        ok &= approx_eq(&a, &d, &tri);

        // translation compatibility under disjoint translates: spread the
        // shift set far beyond both diameters
        let spread = 200i64;
        let c = FiniteSubset::ints(&g, &[0, spread, 2 * spread]).unwrap();
        let ac = a.product(&c).unwrap();
        let bc = b.product(&c).unwrap();
        ok &= approx_eq(&ac, &bc, &eps);

        // the non-overlap predicate agrees with the interval picture
        let left = FiniteSubset::ints(&g, &[-30, -25]).unwrap();
        ok &= non_overlapping(&left, &c).unwrap();
    }

    report(9, "approximate-equality calculus bounds hold on 1000 triples", ok);
}

#[test]
fn criterion_10_search_determinism() {
    let seq = Arc::new(dyadic_odometer(5));
    let eps = default_eps(5);
    let bounds = SearchBounds::desk(5);

    let single = search_witness(&seq, &seq, &eps, &bounds, 1).unwrap();
    let many = search_witness(&seq, &seq, &eps, &bounds, 8).unwrap();
    let again = search_witness(&seq, &seq, &eps, &bounds, 3).unwrap();

    let encode = |w: &Option<IsoWitness>| -> String {
        w.as_ref()
            .map(|w| serde_json::to_string_pretty(&w.to_doc()).unwrap())
            .unwrap_or_default()
    };
    let ok = single.is_some()
        && encode(&single) == encode(&many)
        && encode(&single) == encode(&again);

    // the found witness re-passes its checks
    let ok = ok
        && check_witness(&seq, &seq, single.as_ref().unwrap())
            .unwrap()
            .pass;

    report(10, "witness search is byte-identical across worker counts", ok);
}

#[test]
fn acceptance_extra_diagnostics_render_exactly() {
    // not a numbered criterion: pins a handful of exact values quoted in
    // module documentation so reports stay stable
    let seq = Arc::new(dyadic_odometer(3));
    let one = seq.group().int(1).unwrap();
    let folner = cfkit::space::folner_defect(&seq, &one).unwrap();
    assert_eq!(ratio_string(&folner[3]), "1/4");
    let (d, coverage) = cfkit::space::near_tiling(&seq, 1, 3).unwrap();
    assert_eq!(d.len(), 4);
    assert_eq!(ratio_string(&coverage), "1/1");
    assert_eq!(parse_ratio("1/1").unwrap(), ratio(1, 1));
    let ident = PointMap::identity(seq.clone());
    assert_eq!(
        map_divergence(&ident, &ident, &[0, 1, 2]).unwrap(),
        vec![ratio(0, 1); 3]
    );
}
