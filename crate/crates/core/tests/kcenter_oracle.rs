//! k-center greedy against a brute-force rescan that recomputes every
//! nearest-center distance from scratch each round.

use activecl::ndgrad::Tensor;
use activecl::sampler::{euclidean, k_center_greedy, Candidates};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn rescan(ids: &[u64], points: &[Vec<f64>], seeds: &[Vec<f64>], budget: usize) -> Vec<u64> {
    let mut centers: Vec<Vec<f64>> = seeds.to_vec();
    let mut taken = vec![false; ids.len()];
    let mut picked = Vec::new();
    for _ in 0..budget.min(ids.len()) {
        let mut best: Option<(f64, u64, usize)> = None;
        for (i, p) in points.iter().enumerate() {
            if taken[i] {
                continue;
            }
            let d = centers.iter().map(|c| euclidean(p, c)).fold(f64::INFINITY, f64::min);
            let better = match best {
                None => true,
                Some((bd, bid, _)) => d > bd || (d == bd && ids[i] < bid),
            };
            if better {
                best = Some((d, ids[i], i));
            }
        }
        let (_, id, i) = best.unwrap();
        taken[i] = true;
        picked.push(id);
        centers.push(points[i].clone());
    }
    picked
}

fn instance(rng: &mut ChaCha8Rng, n: usize, dim: usize, seeds: usize, grid: bool) -> (Vec<u64>, Vec<Vec<f64>>, Vec<Vec<f64>>) {
    let point = |rng: &mut ChaCha8Rng| -> Vec<f64> {
        (0..dim)
            .map(|_| if grid { rng.random_range(0..3) as f64 } else { rng.random_range(-1.0..1.0) })
            .collect()
    };
    let mut ids: Vec<u64> = (0..n as u64 * 3).collect();
    ids.shuffle(rng);
    ids.truncate(n);
    let points = (0..n).map(|_| point(rng)).collect();
    let centers = (0..seeds).map(|_| point(rng)).collect();
    (ids, points, centers)
}

fn run(ids: &[u64], points: &[Vec<f64>], centers: &[Vec<f64>], budget: usize) -> Vec<u64> {
    let dim = centers[0].len();
    let c = Candidates::new(ids.to_vec(), Tensor::from_rows(points, dim).unwrap()).unwrap();
    k_center_greedy(&c, &Tensor::from_rows(centers, dim).unwrap(), budget).unwrap()
}

#[test]
fn fifty_points_in_eight_dimensions() {
    let mut rng = ChaCha8Rng::seed_from_u64(50);
    let (ids, points, centers) = instance(&mut rng, 50, 8, 1, false);
    assert_eq!(run(&ids, &points, &centers, 10), rescan(&ids, &points, &centers, 10));
}

#[test]
fn matches_rescan_on_random_instances() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for case in 0..200 {
        let n = rng.random_range(1..60);
        let dim = rng.random_range(1..9);
        let seeds = rng.random_range(1..5);
        let budget = rng.random_range(0..n + 3);
        // every third case on an integer grid to force distance ties
        let (ids, points, centers) = instance(&mut rng, n, dim, seeds, case % 3 == 0);
        assert_eq!(
            run(&ids, &points, &centers, budget),
            rescan(&ids, &points, &centers, budget),
            "case {case}"
        );
    }
}

#[test]
fn selection_never_repeats_and_excludes_nothing_twice() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let (ids, points, centers) = instance(&mut rng, 40, 4, 2, true);
    let picked = run(&ids, &points, &centers, 40);
    let mut sorted = picked.clone();
    sorted.sort_unstable();
    sorted.dedup();
    assert_eq!(sorted.len(), 40);
}
