use fockspec::birman_schwinger::{
    build_bs_blocks, build_bs_matrix, count_above, direct_discretize, discrete_threshold,
    eigenvalue_count, oracle_count,
};
use fockspec::essential::critical_couplings;
use fockspec::friedrichs::Side;
use fockspec::linalg::{asymmetry, sturm_count_above, symmetric_eigenvalues};
use fockspec::torus::{build_grid, ModelParams};
use fockspec::Error;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn blocks_reproduce_the_full_count() {
    for n in [4, 6] {
        let grid = build_grid(n).unwrap();
        let cc = critical_couplings(6.0, &grid).unwrap();
        for (scale, side) in [(1.3, Side::Right), (1.6, Side::Left), (0.9, Side::Right)] {
            let params = ModelParams::new(scale * cc.critical(side).unwrap(), 6.0).unwrap();
            let edge = discrete_threshold(&params, side, &grid).unwrap();
            let z = match side {
                Side::Left => edge - 0.05,
                Side::Right => edge + 0.05,
            };
            let full = build_bs_matrix(&params, z, side, &grid).unwrap();
            assert!(asymmetry(&full.entries) < 1e-12);
            let full_count = count_above(&full, 1.0).unwrap().count;
            assert_eq!(full_count, sturm_count_above(&full.entries, 1.0));
            let blocks = build_bs_blocks(&params, z, side, &grid).unwrap();
            let dims: usize = blocks
                .iter()
                .map(|b| b.dim() * b.block.unwrap().multiplicity)
                .sum();
            assert_eq!(dims, grid.len());
            assert_eq!(
                eigenvalue_count(&params, z, side, &grid).unwrap().count,
                full_count
            );
        }
    }
}

#[test]
fn birman_schwinger_count_equals_direct_model() {
    let grid = build_grid(4).unwrap();
    let cc = critical_couplings(6.0, &grid).unwrap();
    let params = ModelParams::new(1.3 * cc.mu_right.unwrap(), 6.0).unwrap();
    let z = discrete_threshold(&params, Side::Right, &grid).unwrap() + 0.5;
    let bs = eigenvalue_count(&params, z, Side::Right, &grid)
        .unwrap()
        .count;
    assert_eq!(bs, oracle_count(&params, z, Side::Right, &grid).unwrap());
}

#[test]
fn counting_rejects_energies_inside_the_essential_spectrum() {
    let grid = build_grid(6).unwrap();
    let cc = critical_couplings(6.0, &grid).unwrap();
    let params = ModelParams::new(1.5 * cc.mu_right.unwrap(), 6.0).unwrap();
    let edge = discrete_threshold(&params, Side::Right, &grid).unwrap();
    assert!(edge > 18.0);
    let err = eigenvalue_count(&params, 0.5 * (18.0 + edge), Side::Right, &grid).unwrap_err();
    assert!(matches!(err, Error::WrongSign(_)), "{err}");
    assert!(eigenvalue_count(&params, 10.0, Side::Left, &grid).is_err());
}

#[test]
fn direct_model_sectors_make_up_the_dense_spectrum() {
    let grid = build_grid(2).unwrap();
    let model = direct_discretize(&ModelParams::new(0.8, 4.0).unwrap(), &grid).unwrap();
    let dense = model.dense();
    assert!(asymmetry(&dense) < 1e-14);
    let whole = symmetric_eigenvalues(&dense).unwrap();
    let mut parts: Vec<f64> = model
        .sector_blocks()
        .iter()
        .flat_map(|b| symmetric_eigenvalues(b).unwrap())
        .collect();
    parts.sort_by(f64::total_cmp);
    assert_eq!(whole.len(), parts.len());
    for (a, b) in whole.iter().zip(&parts) {
        assert!((a - b).abs() < 1e-10, "{a} vs {b}");
    }
}

#[test]
fn creation_is_adjoint_to_annihilation() {
    let grid = build_grid(3).unwrap();
    let model = direct_discretize(&ModelParams::new(1.1, 2.0).unwrap(), &grid).unwrap();
    let n = model.h1_dim();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..5 {
        let g: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let mut f = vec![0.0; n * n * 8];
        for k in 0..n {
            for t in k..n {
                for s in 0..8 {
                    let v = rng.gen_range(-1.0..1.0);
                    f[(k * n + t) * 8 + s] = v;
                    f[(t * n + k) * 8 + s] = v;
                }
            }
        }
        let lhs = model.inner_one(&model.annihilate(&f), &g);
        let rhs = model.inner_two(&f, &model.create(&g));
        assert!((lhs - rhs).abs() < 1e-12 * lhs.abs().max(1.0));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn sturm_and_faer_agree(seed in any::<u64>(), dim in 1usize..24, lambda in -2.0..2.0_f64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut m = faer::Mat::<f64>::zeros(dim, dim);
        for i in 0..dim {
            for j in 0..=i {
                let v = rng.gen_range(-1.0..1.0);
                m[(i, j)] = v;
                m[(j, i)] = v;
            }
        }
        let ev = symmetric_eigenvalues(&m).unwrap();
        prop_assume!(ev.iter().all(|x| (x - lambda).abs() > 1e-9));
        let faer_count = ev.iter().filter(|&&x| x > lambda).count();
        prop_assert_eq!(faer_count, sturm_count_above(&m, lambda));
    }
}
