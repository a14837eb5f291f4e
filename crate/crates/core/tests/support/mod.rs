//! Shared helpers for integration tests: random small graphs and an
//! independent brute-force minimizer for obstacle problems.
#![allow(dead_code)]

use finelab_core::space::EdgeSpec;
use finelab_core::{SpaceMeta, WeightedGraphSpace};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Connected graph on `n` nodes: a random spanning tree plus a few chords.
pub fn random_graph(rng: &mut impl Rng, n: usize) -> WeightedGraphSpace {
    let mut edges = Vec::new();
    let mut seen = std::collections::BTreeSet::new();
    for i in 1..n {
        let j = rng.gen_range(0..i);
        seen.insert((j, i));
        edges.push(EdgeSpec {
            a: j as u64,
            b: i as u64,
            length: rng.gen_range(0.5..2.0),
            conductance: rng.gen_range(0.2..3.0),
        });
    }
    let extra = rng.gen_range(0..=n);
    for _ in 0..extra {
        let a = rng.gen_range(0..n);
        let b = rng.gen_range(0..n);
        let key = (a.min(b), a.max(b));
        if a == b || !seen.insert(key) {
            continue;
        }
        edges.push(EdgeSpec {
            a: a as u64,
            b: b as u64,
            length: rng.gen_range(0.5..2.0),
            conductance: rng.gen_range(0.2..3.0),
        });
    }
    let mu = (0..n).map(|_| rng.gen_range(0.1..2.0)).collect();
    WeightedGraphSpace::from_parts((0..n as u64).collect(), mu, None, &edges, 0, SpaceMeta::default())
        .expect("random graph is valid")
}

/// `sum_e c_e (|Δu| / l_e)^p`, recomputed from the edge list.
pub fn energy(space: &WeightedGraphSpace, u: &[f64], p: f64) -> f64 {
    space.edges().iter().map(|e| e.conductance * ((u[e.a] - u[e.b]).abs() / e.length).powf(p)).sum()
}

/// Cyclic coordinate descent with exact one-dimensional minimization by
/// bisection on the (monotone) derivative. Nodes with `free[i] == false` keep
/// their starting value; free nodes stay above `lb[i]`.
pub fn coordinate_descent(space: &WeightedGraphSpace, start: &[f64], free: &[bool], lb: &[f64], p: f64) -> Vec<f64> {
    let n = space.len();
    let mut nbrs: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
    for e in space.edges() {
        let w = e.conductance / e.length.powf(p);
        nbrs[e.a].push((e.b, w));
        nbrs[e.b].push((e.a, w));
    }
    let mut u = start.to_vec();
    let mut last = f64::INFINITY;
    for _sweep in 0..200_000 {
        let mut change: f64 = 0.0;
        for i in 0..n {
            if !free[i] {
                continue;
            }
            let deriv = |t: f64| -> f64 {
                nbrs[i].iter().map(|&(j, w)| w * (t - u[j]).abs().powf(p - 1.0) * (t - u[j]).signum()).sum()
            };
            let mut lo = nbrs[i].iter().map(|&(j, _)| u[j]).fold(f64::INFINITY, f64::min);
            let mut hi = nbrs[i].iter().map(|&(j, _)| u[j]).fold(f64::NEG_INFINITY, f64::max);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if mid <= lo || mid >= hi {
                    break;
                }
                if deriv(mid) > 0.0 {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            let t = (0.5 * (lo + hi)).max(lb[i]);
            change = change.max((t - u[i]).abs());
            u[i] = t;
        }
        for tol in [1e-9, 1e-6, 1e-3] {
            change = change.max(cluster_moves(&nbrs, &mut u, free, lb, p, tol));
        }
        if change < 1e-13 {
            break;
        }
        if _sweep % 100 == 99 {
            let e = energy(space, &u, p);
            if last - e <= 1e-11 * e {
                break;
            }
            last = e;
        }
    }
    u
}

/// Moves each cluster of free nodes joined by differences below `tol` as one
/// block. Plain coordinate descent creeps when p < 2 because such an edge
/// resists any single-node move.
fn cluster_moves(nbrs: &[Vec<(usize, f64)>], u: &mut [f64], free: &[bool], lb: &[f64], p: f64, tol: f64) -> f64 {
    let n = u.len();
    let mut label = vec![usize::MAX; n];
    let mut change: f64 = 0.0;
    for root in 0..n {
        if !free[root] || label[root] != usize::MAX {
            continue;
        }
        let mut members = vec![root];
        label[root] = root;
        let mut k = 0;
        while k < members.len() {
            let i = members[k];
            k += 1;
            for &(j, _) in &nbrs[i] {
                if free[j] && label[j] == usize::MAX && (u[i] - u[j]).abs() <= tol {
                    label[j] = root;
                    members.push(j);
                }
            }
        }
        if members.len() < 2 {
            continue;
        }
        let deriv = |s: f64| -> f64 {
            let mut d = 0.0;
            for &i in &members {
                for &(j, w) in &nbrs[i] {
                    if label[j] != root {
                        let t = u[i] + s - u[j];
                        d += w * t.abs().powf(p - 1.0) * t.signum();
                    }
                }
            }
            d
        };
        let floor = members.iter().map(|&i| lb[i] - u[i]).fold(f64::NEG_INFINITY, f64::max);
        let span = u.iter().fold(1.0_f64, |m, v| m.max(v.abs())) * 4.0;
        let (mut lo, mut hi) = (-span, span);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if deriv(mid) > 0.0 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        let shift = (0.5 * (lo + hi)).max(floor);
        for &i in &members {
            u[i] += shift;
        }
        change = change.max(shift.abs());
    }
    change
}

/// Best energy of coordinate descent over several starting points.
pub fn brute_force_min(
    space: &WeightedGraphSpace,
    boundary: &[f64],
    free: &[bool],
    lb: &[f64],
    p: f64,
    rng: &mut impl Rng,
    starts: usize,
) -> f64 {
    let n = space.len();
    let scale = boundary.iter().chain(lb.iter()).filter(|v| v.is_finite()).fold(1.0_f64, |m, v| m.max(v.abs()));
    let mut best = f64::INFINITY;
    for _ in 0..starts {
        let start: Vec<f64> = (0..n)
            .map(|i| {
                if free[i] {
                    let r = rng.gen_range(-scale..scale);
                    if lb[i].is_finite() {
                        r.max(lb[i])
                    } else {
                        r
                    }
                } else {
                    boundary[i]
                }
            })
            .collect();
        let u = coordinate_descent(space, &start, free, lb, p);
        best = best.min(energy(space, &u, p));
    }
    best
}

/// Random obstacle problem on `space`: a nonempty proper domain, obstacle
/// values (some unconstrained) and boundary values.
pub struct Instance {
    pub free: Vec<bool>,
    pub obstacle: Vec<f64>,
    pub boundary: Vec<f64>,
    pub p: f64,
}

pub fn random_instance(rng: &mut impl Rng, n: usize) -> Instance {
    let mut free: Vec<bool> = (0..n).map(|_| rng.gen_bool(0.6)).collect();
    let fixed = rng.gen_range(0..n);
    free[fixed] = false;
    if !free.iter().any(|&f| f) {
        free[(fixed + 1) % n] = true;
    }
    let obstacle =
        (0..n).map(|_| if rng.gen_bool(0.3) { f64::NEG_INFINITY } else { rng.gen_range(-1.0..1.0) }).collect();
    let boundary = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let p = rng.gen_range(1.3..4.0);
    Instance { free, obstacle, boundary, p }
}
