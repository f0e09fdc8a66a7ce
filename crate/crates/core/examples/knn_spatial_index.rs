//! Compares k-d tree neighbour queries with a linear scan.

use std::time::Instant;

use gdelt_geoclass::classifiers::kdtree::{squared_distance, KdTree};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let points: Vec<[f64; 2]> = (0..50_000)
        .map(|_| [rng.random_range(29.12..37.29), rng.random_range(39.22..48.48)])
        .collect();
    let queries: Vec<[f64; 2]> = (0..2_000)
        .map(|_| [rng.random_range(29.12..37.29), rng.random_range(39.22..48.48)])
        .collect();
    let tree = KdTree::build(points.clone());

    let start = Instant::now();
    let indexed: Vec<Vec<usize>> = queries.iter().map(|&q| tree.nearest(q, 5).iter().map(|n| n.index).collect()).collect();
    let t_tree = start.elapsed();

    let start = Instant::now();
    let scanned: Vec<Vec<usize>> = queries
        .iter()
        .map(|&q| {
            let mut d: Vec<(f64, usize)> = points.iter().enumerate().map(|(i, &p)| (squared_distance(p, q), i)).collect();
            d.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            d[..5].iter().map(|x| x.1).collect()
        })
        .collect();
    let t_scan = start.elapsed();

    let agree = indexed.iter().zip(&scanned).filter(|(a, b)| a == b).count();
    println!("{agree}/{} queries agree; k-d tree {t_tree:.1?}, linear scan {t_scan:.1?}", queries.len());
}
