mod common;

use lndimer::rovib::{Block, LParity, build_channels, coupling_matrix};
use lndimer::spintensor::Inversion;
use lndimer::{Species, TensorOp};

fn check(species: Species, j_total: u32) {
    let j = species.ground_j();
    for block in Block::physical(species) {
        let ch = build_channels(j_total, block, species);
        if ch.is_empty() {
            continue;
        }
        for op in TensorOp::ALL {
            let g = coupling_matrix(op, &ch, j).unwrap();
            let b = common::brute_force_coupling(op, &ch, j);
            let d = (&g - &b).amax();
            assert!(d < 1e-10, "{species} J={j_total} {block} {op}: {d:e}");
        }
    }
}

#[test]
fn spherical_harmonics_are_orthonormal() {
    let quad = common::gauss_legendre(20);
    for (l1, m1, l2, m2) in [(2, 1, 2, 1), (3, -2, 3, -2), (3, 1, 1, 1), (4, 0, 2, 0)] {
        let v = common::angular_integral(l1, m1, 0, 0, l2, m2, &quad, 24);
        let expect = if (l1, m1) == (l2, m2) { 1.0 } else { 0.0 };
        assert!((v - expect).abs() < 1e-13);
    }
}

#[test]
fn oracle_cg_matches_library() {
    use lndimer::wigner::cg;
    use lndimer::AngMom;
    for (a, b, c) in [(7u32, 7u32, 6u32), (12, 12, 10), (4, 2, 4)] {
        for ma in -(a as i32)..=(a as i32) {
            if (ma - a as i32) % 2 != 0 {
                continue;
            }
            for mb in -(b as i32)..=(b as i32) {
                if (mb - b as i32) % 2 != 0 {
                    continue;
                }
                let x = cg(AngMom::from_twice(a), AngMom::from_twice(b), ma, mb, AngMom::from_twice(c), ma + mb);
                let y = common::cg2(a as i64, ma as i64, b as i64, mb as i64, c as i64, (ma + mb) as i64);
                assert!((x - y).abs() < 1e-12);
            }
        }
    }
}

#[test]
fn thulium_low_j() {
    for jt in 0..=2 {
        check(Species::Tm, jt);
    }
}

#[test]
fn erbium_j0() {
    check(Species::Er, 0);
}

#[test]
fn erbium_j1_gerade_odd() {
    // unphysical for 168Er, but the algebra is the same
    let j = Species::Er.ground_j();
    let ch = build_channels(1, Block::new(Inversion::Gerade, LParity::Odd), Species::Er);
    let g = coupling_matrix(TensorOp::ANISO, &ch, j).unwrap();
    let b = common::brute_force_coupling(TensorOp::ANISO, &ch, j);
    assert!((&g - &b).amax() < 1e-10);
}
