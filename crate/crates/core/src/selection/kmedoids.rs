use ndarray::{Array2, ArrayView2};
use rand::Rng;

use crate::error::{Error, Result};

const MAX_ITER: usize = 100;

/// Result of a k-medoids fit. `medoids` and `assignment` index rows of the input.
#[derive(Debug, Clone, PartialEq)]
pub struct KMedoids {
    pub medoids: Vec<usize>,
    pub assignment: Vec<usize>,
    pub cost: f64,
}

fn distance_matrix(points: ArrayView2<'_, f64>) -> Array2<f64> {
    let n = points.nrows();
    let mut d = Array2::zeros((n, n));
    for i in 0..n {
        for j in (i + 1)..n {
            let s: f64 = points
                .row(i)
                .iter()
                .zip(points.row(j).iter())
                .map(|(a, b)| (a - b) * (a - b))
                .sum();
            d[[i, j]] = s.sqrt();
            d[[j, i]] = d[[i, j]];
        }
    }
    d
}

fn seed_medoids<R: Rng + ?Sized>(d: &Array2<f64>, k: usize, rng: &mut R) -> Vec<usize> {
    let n = d.nrows();
    let mut medoids = vec![rng.random_range(0..n)];
    let mut nearest: Vec<f64> = (0..n).map(|i| d[[i, medoids[0]]]).collect();
    while medoids.len() < k {
        let weights: Vec<f64> = nearest.iter().map(|x| x * x).collect();
        let total: f64 = weights.iter().sum();
        let next = if total > 0.0 {
            let mut target = rng.random::<f64>() * total;
            let mut pick = None;
            for (i, &w) in weights.iter().enumerate() {
                if w > 0.0 {
                    pick = Some(i);
                    if target < w {
                        break;
                    }
                    target -= w;
                }
            }
            pick.expect("positive total weight")
        } else {
            let free: Vec<usize> = (0..n).filter(|i| !medoids.contains(i)).collect();
            free[rng.random_range(0..free.len())]
        };
        medoids.push(next);
        for i in 0..n {
            nearest[i] = nearest[i].min(d[[i, next]]);
        }
    }
    medoids
}

fn assign(d: &Array2<f64>, medoids: &[usize]) -> (Vec<usize>, f64) {
    let mut cost = 0.0;
    let assignment = (0..d.nrows())
        .map(|i| {
            if let Some(c) = medoids.iter().position(|&m| m == i) {
                return c;
            }
            let mut best = 0;
            for c in 1..medoids.len() {
                if d[[i, medoids[c]]] < d[[i, medoids[best]]] {
                    best = c;
                }
            }
            cost += d[[i, medoids[best]]];
            best
        })
        .collect();
    (assignment, cost)
}

/// Partitions the rows of `points` into `k` clusters around medoids using
/// Euclidean distance, k-medoids++ seeding and alternating assign/update.
pub fn kmedoids<R: Rng + ?Sized>(points: ArrayView2<'_, f64>, k: usize, rng: &mut R) -> Result<KMedoids> {
    let n = points.nrows();
    if k == 0 || k > n {
        return Err(Error::invalid_argument(format!(
            "cannot form {k} clusters from {n} points"
        )));
    }
    if points.iter().any(|x| !x.is_finite()) {
        return Err(Error::numeric("non-finite coordinate in clustering input"));
    }
    let d = distance_matrix(points);
    let mut medoids = seed_medoids(&d, k, rng);
    let (mut assignment, mut cost) = assign(&d, &medoids);
    for _ in 0..MAX_ITER {
        let mut changed = false;
        for (c, medoid) in medoids.iter_mut().enumerate() {
            let members: Vec<usize> = (0..n).filter(|&i| assignment[i] == c).collect();
            let within = |m: usize| members.iter().map(|&i| d[[i, m]]).sum::<f64>();
            let mut best = (*medoid, within(*medoid));
            for &m in &members {
                let s = within(m);
                if s < best.1 {
                    best = (m, s);
                }
            }
            if best.0 != *medoid {
                *medoid = best.0;
                changed = true;
            }
        }
        if !changed {
            break;
        }
        (assignment, cost) = assign(&d, &medoids);
    }
    Ok(KMedoids {
        medoids,
        assignment,
        cost,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn single_cluster_picks_the_middle() {
        let x = array![[0.0], [1.0], [10.0]];
        for s in 0..10 {
            let fit = kmedoids(x.view(), 1, &mut ChaCha8Rng::seed_from_u64(s)).unwrap();
            assert_eq!(fit.medoids, vec![1]);
            assert_eq!(fit.cost, 10.0);
        }
    }

    #[test]
    fn k_equal_to_n_uses_every_point() {
        let x = array![[0.0, 0.0], [0.0, 0.0], [1.0, 1.0]];
        let fit = kmedoids(x.view(), 3, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        let mut m = fit.medoids.clone();
        m.sort_unstable();
        assert_eq!(m, vec![0, 1, 2]);
        assert_eq!(fit.cost, 0.0);
    }

    #[test]
    fn rejects_bad_k() {
        let x = array![[0.0], [1.0]];
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(kmedoids(x.view(), 0, &mut rng).is_err());
        assert!(kmedoids(x.view(), 3, &mut rng).is_err());
    }
}
