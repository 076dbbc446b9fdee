#![allow(dead_code)]

use nolhd::construct::{
    joint_row_permute, kronecker_construct, lemma1_construct, random_centered_lh, KroneckerInputs,
    KroneckerOutput, Lemma1Inputs,
};
use nolhd::design::{rao_hamming_oa, sylvester_sign_matrix};
use nolhd::seed::{rng_from_seed, DesignRng};
use nolhd::{DesignMatrix, SignMatrix};
use rand::seq::index::sample;
use rand::Rng;

pub fn signs(rows: &[&[i8]]) -> SignMatrix {
    SignMatrix::from_rows(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap()
}

/// `m` distinct columns of the Sylvester matrix of order `n`, chosen at random.
pub fn hadamard_columns(n: usize, m: usize, rng: &mut DesignRng) -> SignMatrix {
    let h = sylvester_sign_matrix(n).unwrap();
    let mut cols = sample(rng, n, m).into_vec();
    cols.sort_unstable();
    h.select_columns(&cols).unwrap()
}

/// Orthogonal `s^2 x 2f` Latin hypercube: the OA construction with a single-column seed.
pub fn orthogonal_lh(s: u32, f: usize) -> DesignMatrix {
    let levels = nolhd::design::centered_levels(s as usize).unwrap();
    let b = DesignMatrix::from_columns(vec![levels.levels().to_vec()]).unwrap();
    lemma1_construct(&Lemma1Inputs::new(&rao_hamming_oa(s).unwrap(), b, f).unwrap()).unwrap()
}

/// Outer factors with orthogonal columns, `B^T D = 0`, and negation pairs
/// inside every column: n2 = 4, m2 = 2.
pub fn outer_factors() -> (DesignMatrix, SignMatrix) {
    let b = DesignMatrix::from_rows(&[
        vec![1.5, 0.5],
        vec![0.5, -1.5],
        vec![-0.5, 1.5],
        vec![-1.5, -0.5],
    ])
    .unwrap();
    let d = signs(&[&[1, 1], &[1, -1], &[1, -1], &[1, 1]]);
    (b, d)
}

/// One seeded construction satisfying the hypotheses of the block
/// correlation identities. `orthogonal_blocks` uses orthogonal `C_j`.
pub struct BlockCase {
    pub inputs: KroneckerInputs,
    pub output: KroneckerOutput,
}

pub fn block_case(seed: u64, orthogonal_blocks: bool) -> BlockCase {
    let mut rng = rng_from_seed(seed);
    let (b, d) = outer_factors();
    let (c1, n1, m1) = if orthogonal_blocks {
        let c = if rng.random::<bool>() { orthogonal_lh(2, 1) } else { orthogonal_lh(4, 2) };
        let (n, m) = (c.rows(), c.cols());
        (c, n, m)
    } else {
        let n1 = [4, 8, 16][rng.random_range(0..3)];
        let m1 = rng.random_range(2..=n1.min(6));
        (random_centered_lh(n1, m1, &mut rng).unwrap(), n1, m1)
    };
    let a1 = hadamard_columns(n1, m1, &mut rng);
    let (a2, c2) = joint_row_permute(&a1, &c1, &mut rng).unwrap();
    let inputs = KroneckerInputs::new(vec![a1, a2], vec![c1, c2], b, d, 4.0).unwrap();
    let output = kronecker_construct(&inputs).unwrap();
    BlockCase { inputs, output }
}

/// Largest number of points of the `(x, y)` projection on one straight line.
pub fn max_collinear(x: &[f64], y: &[f64]) -> usize {
    let n = x.len();
    let mut best = 1;
    for i in 0..n {
        for j in i + 1..n {
            let (dx, dy) = (x[j] - x[i], y[j] - y[i]);
            if dx == 0.0 && dy == 0.0 {
                continue;
            }
            let count = (0..n)
                .filter(|&k| (dx * (y[k] - y[i]) - dy * (x[k] - x[i])).abs() < 1e-9)
                .count();
            best = best.max(count);
        }
    }
    best
}
