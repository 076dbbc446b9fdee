use rand::seq::SliceRandom;
use rand::Rng;

use crate::design::{centered_levels, DesignKind, DesignMatrix};
use crate::error::{Error, Result};

fn check_range(range: (f64, f64)) -> Result<()> {
    let (a, b) = range;
    if !(a.is_finite() && b.is_finite() && a < b) {
        return Err(Error::domain(format!("range [{a}, {b}] must satisfy a < b")));
    }
    Ok(())
}

/// The symmetric design region `[-(n-1)/2, (n-1)/2]`.
pub fn centered_range(n: usize) -> (f64, f64) {
    let h = (n as f64 - 1.0) / 2.0;
    (-h, h)
}

/// Random Latin hypercube on `[a, b]^p`.
///
/// Column `j` uses an independent permutation `d` of `1..=n` and jitter
/// `u ~ U[0, 1)`; the entry `z = (d - u) / n` is mapped to `(b - a) z + a`,
/// so each column has one point in each of the `n` equal strata.
pub fn random_latin_hypercube<R: Rng + ?Sized>(
    n: usize,
    p: usize,
    range: (f64, f64),
    rng: &mut R,
) -> Result<DesignMatrix> {
    check_range(range)?;
    if n == 0 || p == 0 {
        return Err(Error::domain(format!("need n >= 1 and p >= 1, got {n}x{p}")));
    }
    let (a, b) = range;
    let mut data = Vec::with_capacity(n * p);
    let mut perm: Vec<usize> = (1..=n).collect();
    for _ in 0..p {
        perm.shuffle(rng);
        for &d in &perm {
            let u: f64 = rng.random();
            let z = (d as f64 - u) / n as f64;
            data.push((b - a) * z + a);
        }
    }
    DesignMatrix::from_column_major(n, p, data)
}

/// `n * p` independent draws from `U[a, b]`.
pub fn iid_uniform_sample<R: Rng + ?Sized>(
    n: usize,
    p: usize,
    range: (f64, f64),
    rng: &mut R,
) -> Result<DesignMatrix> {
    check_range(range)?;
    if n == 0 || p == 0 {
        return Err(Error::domain(format!("need n >= 1 and p >= 1, got {n}x{p}")));
    }
    let (a, b) = range;
    let data = (0..n * p).map(|_| rng.random_range(a..=b)).collect();
    Ok(DesignMatrix::from_column_major(n, p, data)?.assume_kind(DesignKind::IidSample))
}

/// Latin hypercube whose columns are random permutations of the centered levels.
pub fn random_centered_lh<R: Rng + ?Sized>(n: usize, p: usize, rng: &mut R) -> Result<DesignMatrix> {
    let levels = centered_levels(n)?;
    if p == 0 {
        return Err(Error::domain("need p >= 1"));
    }
    let mut data = Vec::with_capacity(n * p);
    let mut col = levels.levels().to_vec();
    for _ in 0..p {
        col.shuffle(rng);
        data.extend_from_slice(&col);
    }
    Ok(DesignMatrix::from_column_major(n, p, data)?.assume_kind(DesignKind::LatinHypercube))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::design::is_latin_hypercube;
    use crate::seed::rng_from_seed;

    fn strata(col: &[f64], n: usize, (a, b): (f64, f64)) -> Vec<usize> {
        let mut s: Vec<usize> = col
            .iter()
            .map(|&v| (((v - a) / (b - a)) * n as f64).ceil() as usize)
            .collect();
        s.sort_unstable();
        s
    }

    #[test]
    fn two_runs_split_the_interval() {
        let x = random_latin_hypercube(2, 1, (0.0, 1.0), &mut rng_from_seed(1)).unwrap();
        let mut v = x.column(0).to_vec();
        v.sort_by(f64::total_cmp);
        assert!(v[0] > 0.0 && v[0] <= 0.5);
        assert!(v[1] > 0.5 && v[1] <= 1.0);
    }

    #[test]
    fn stratification_64_by_192() {
        let range = centered_range(64);
        assert_eq!(range, (-31.5, 31.5));
        let x = random_latin_hypercube(64, 192, range, &mut rng_from_seed(5)).unwrap();
        let want: Vec<usize> = (1..=64).collect();
        for col in x.columns() {
            assert_eq!(strata(col, 64, range), want);
        }
    }

    #[test]
    fn seeded_generators_are_reproducible() {
        let a = random_latin_hypercube(5, 2, (0.0, 1.0), &mut rng_from_seed(9)).unwrap();
        let b = random_latin_hypercube(5, 2, (0.0, 1.0), &mut rng_from_seed(9)).unwrap();
        assert_eq!(a, b);
        let a = iid_uniform_sample(5, 2, (0.0, 1.0), &mut rng_from_seed(9)).unwrap();
        let b = iid_uniform_sample(5, 2, (0.0, 1.0), &mut rng_from_seed(9)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn iid_single_draw_in_range() {
        let x = iid_uniform_sample(1, 1, (0.0, 1.0), &mut rng_from_seed(2)).unwrap();
        assert!((0.0..=1.0).contains(&x.get(0, 0)));
        assert_eq!(x.kind(), DesignKind::IidSample);
    }

    #[test]
    fn bad_ranges_are_rejected() {
        let mut rng = rng_from_seed(0);
        assert!(matches!(random_latin_hypercube(3, 1, (1.0, 1.0), &mut rng), Err(Error::Domain(_))));
        assert!(matches!(iid_uniform_sample(3, 1, (2.0, 1.0), &mut rng), Err(Error::Domain(_))));
    }

    #[test]
    fn centered_lh_is_latin() {
        let x = random_centered_lh(6, 4, &mut rng_from_seed(3)).unwrap();
        assert!(is_latin_hypercube(&x).latin_hypercube);
    }
}
