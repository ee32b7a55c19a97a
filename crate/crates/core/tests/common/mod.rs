//! Independent reference implementations shared by the integration tests.
#![allow(dead_code)]

use std::path::PathBuf;

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

/// Textbook fuzzy C-means on scalars: alternate the closed-form membership and
/// center updates until no center moves by `tol`.
pub fn reference_fcm(x: &[f64], init: &[f64], m: f64, tol: f64, max_iter: usize) -> Vec<f64> {
    let mut v = init.to_vec();
    let c = v.len();
    let p = 2.0 / (m - 1.0);
    for _ in 0..max_iter {
        let mut u = vec![vec![0.0; c]; x.len()];
        for (i, &xi) in x.iter().enumerate() {
            if let Some(j) = v.iter().position(|&vj| vj == xi) {
                u[i][j] = 1.0;
                continue;
            }
            for j in 0..c {
                let dj = (xi - v[j]).abs();
                let s: f64 = v.iter().map(|&vk| (dj / (xi - vk).abs()).powf(p)).sum();
                u[i][j] = 1.0 / s;
            }
        }
        let mut moved: f64 = 0.0;
        let mut next = v.clone();
        for j in 0..c {
            let num: f64 = (0..x.len()).map(|i| u[i][j].powf(m) * x[i]).sum();
            let den: f64 = (0..x.len()).map(|i| u[i][j].powf(m)).sum();
            if den > 0.0 {
                next[j] = num / den;
            }
            moved = moved.max((next[j] - v[j]).abs());
        }
        v = next;
        if moved < tol {
            break;
        }
    }
    v
}

/// All permutations of `0..n` by Heap's algorithm.
pub fn permutations(n: usize) -> Vec<Vec<usize>> {
    fn heap(k: usize, a: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if k <= 1 {
            out.push(a.clone());
            return;
        }
        for i in 0..k {
            heap(k - 1, a, out);
            if k.is_multiple_of(2) {
                a.swap(i, k - 1);
            } else {
                a.swap(0, k - 1);
            }
        }
    }
    let mut a: Vec<usize> = (0..n).collect();
    let mut out = Vec::new();
    heap(n, &mut a, &mut out);
    out
}

pub fn l1_cost(areas: &[f64], abundances: &[f64], mapping: &[usize]) -> f64 {
    areas
        .iter()
        .enumerate()
        .map(|(k, a)| (a - abundances[mapping[k]]).abs())
        .sum()
}

/// Minimum matching cost over every permutation.
pub fn brute_force_min_cost(areas: &[f64], abundances: &[f64]) -> f64 {
    permutations(areas.len())
        .iter()
        .map(|p| l1_cost(areas, abundances, p))
        .fold(f64::INFINITY, f64::min)
}

/// `‖X − U Vᵀ‖²` with explicit loops. `x` is L×N row-major, `u` L×P, `v` N×P.
pub fn frobenius_cost(x: &[f64], u: &[f64], v: &[f64], l: usize, n: usize, p: usize) -> f64 {
    let mut total = 0.0;
    for i in 0..l {
        for k in 0..n {
            let mut approx = 0.0;
            for j in 0..p {
                approx += u[i * p + j] * v[k * p + j];
            }
            let r = x[i * n + k] - approx;
            total += r * r;
        }
    }
    total
}

/// Spectral angle in degrees computed straight from the arccos definition.
pub fn angle_deg(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    (dot / (na * nb)).clamp(-1.0, 1.0).acos().to_degrees()
}
