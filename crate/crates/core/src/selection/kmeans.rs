use rand::Rng;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Clustering {
    /// Cluster index of every input point.
    pub assignment: Vec<usize>,
    pub centroids: Vec<Vec<f64>>,
    /// Sum of squared distances after each Lloyd iteration.
    pub objective: Vec<f64>,
}

impl Clustering {
    pub fn members(&self, cluster: usize) -> impl Iterator<Item = usize> + '_ {
        self.assignment
            .iter()
            .enumerate()
            .filter(move |(_, &c)| c == cluster)
            .map(|(i, _)| i)
    }

    pub fn final_objective(&self) -> f64 {
        self.objective.last().copied().unwrap_or(0.0)
    }
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Greedy k-means++ seeding; returns indices of the chosen points.
///
/// Each step draws `2 + ⌊ln k⌋` candidates with probability proportional
/// to the squared distance to the nearest chosen point and keeps the one
/// that lowers the total squared distance most.
fn seed_centroids(points: &[Vec<f64>], k: usize, rng: &mut impl Rng) -> Vec<usize> {
    let n = points.len();
    let trials = 2 + (k as f64).ln().floor() as usize;
    let mut chosen = vec![rng.gen_range(0..n)];
    let mut d2: Vec<f64> = points.iter().map(|p| sq_dist(p, &points[chosen[0]])).collect();
    while chosen.len() < k {
        let total: f64 = d2.iter().sum();
        if total <= 0.0 {
            // every point coincides with a centroid: pick an unused index
            let free: Vec<usize> = (0..n).filter(|i| !chosen.contains(i)).collect();
            let next = free[rng.gen_range(0..free.len())];
            chosen.push(next);
            continue;
        }
        let mut best: Option<(usize, f64, Vec<f64>)> = None;
        for _ in 0..trials {
            let mut target = rng.gen::<f64>() * total;
            let mut pick = None;
            for (i, &w) in d2.iter().enumerate() {
                if w > 0.0 {
                    pick = Some(i);
                    if target < w {
                        break;
                    }
                    target -= w;
                }
            }
            let cand = pick.expect("positive total implies a positive weight");
            let next_d2: Vec<f64> = d2.iter().zip(points).map(|(w, p)| w.min(sq_dist(p, &points[cand]))).collect();
            let potential: f64 = next_d2.iter().sum();
            if best.as_ref().is_none_or(|b| potential < b.1) {
                best = Some((cand, potential, next_d2));
            }
        }
        let (next, _, next_d2) = best.expect("at least one trial");
        chosen.push(next);
        d2 = next_d2;
    }
    chosen
}

/// Nearest centroid; on a tie the current cluster is kept, then the lowest
/// index wins.
fn assign(points: &[Vec<f64>], centroids: &[Vec<f64>], previous: Option<&[usize]>) -> Vec<usize> {
    points
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let mut best = (0, f64::INFINITY);
            for (c, centroid) in centroids.iter().enumerate() {
                let d = sq_dist(p, centroid);
                if d < best.1 {
                    best = (c, d);
                }
            }
            match previous {
                Some(prev) if sq_dist(p, &centroids[prev[i]]) == best.1 => prev[i],
                _ => best.0,
            }
        })
        .collect()
}

/// Moves the point farthest from its centroid into each empty cluster.
fn repair(points: &[Vec<f64>], centroids: &mut [Vec<f64>], assignment: &mut [usize]) {
    let k = centroids.len();
    loop {
        let mut sizes = vec![0usize; k];
        assignment.iter().for_each(|&c| sizes[c] += 1);
        let Some(empty) = sizes.iter().position(|&s| s == 0) else {
            return;
        };
        let mut far = (usize::MAX, f64::NEG_INFINITY);
        for (i, &c) in assignment.iter().enumerate() {
            if sizes[c] < 2 {
                continue;
            }
            let d = sq_dist(&points[i], &centroids[c]);
            if d > far.1 {
                far = (i, d);
            }
        }
        assignment[far.0] = empty;
        centroids[empty] = points[far.0].clone();
    }
}

fn update(points: &[Vec<f64>], assignment: &[usize], centroids: &mut [Vec<f64>]) {
    let dim = points[0].len();
    let mut sums = vec![vec![0.0; dim]; centroids.len()];
    let mut counts = vec![0usize; centroids.len()];
    for (p, &c) in points.iter().zip(assignment) {
        counts[c] += 1;
        for (s, x) in sums[c].iter_mut().zip(p) {
            *s += x;
        }
    }
    for ((centroid, sum), n) in centroids.iter_mut().zip(sums).zip(counts) {
        *centroid = sum.into_iter().map(|s| s / n as f64).collect();
    }
}

fn objective(points: &[Vec<f64>], assignment: &[usize], centroids: &[Vec<f64>]) -> f64 {
    points.iter().zip(assignment).map(|(p, &c)| sq_dist(p, &centroids[c])).sum()
}

/// Lloyd's algorithm with k-means++ seeding and squared Euclidean distance.
/// Every returned cluster is non-empty.
pub fn kmeans(points: &[Vec<f64>], k: usize, max_iters: usize, rng: &mut impl Rng) -> Result<Clustering> {
    if k == 0 {
        return Err(Error::invalid("k-means needs k >= 1"));
    }
    if k > points.len() {
        return Err(Error::invalid(format!("k-means with k={k} but only {} points", points.len())));
    }
    let dim = points[0].len();
    if points.iter().any(|p| p.len() != dim) {
        return Err(Error::invalid("k-means points have different lengths"));
    }
    let mut centroids: Vec<Vec<f64>> = seed_centroids(points, k, rng).into_iter().map(|i| points[i].clone()).collect();
    let mut assignment = assign(points, &centroids, None);
    repair(points, &mut centroids, &mut assignment);
    update(points, &assignment, &mut centroids);
    let mut history = vec![objective(points, &assignment, &centroids)];
    for _ in 1..max_iters.max(1) {
        let mut next = assign(points, &centroids, Some(&assignment));
        if next == assignment {
            break;
        }
        repair(points, &mut centroids, &mut next);
        assignment = next;
        update(points, &assignment, &mut centroids);
        history.push(objective(points, &assignment, &centroids));
    }
    Ok(Clustering {
        assignment,
        centroids,
        objective: history,
    })
}
