#![allow(dead_code)]

use affsched::algebra::IntMatrix;

/// Determinant by cofactor expansion along the first row.
pub fn det(m: &[Vec<i128>]) -> i128 {
    let n = m.len();
    match n {
        0 => 1,
        1 => m[0][0],
        _ => (0..n)
            .map(|c| {
                let minor: Vec<Vec<i128>> = m[1..]
                    .iter()
                    .map(|r| {
                        r.iter()
                            .enumerate()
                            .filter(|&(j, _)| j != c)
                            .map(|(_, &v)| v)
                            .collect()
                    })
                    .collect();
                let s = if c % 2 == 0 { 1 } else { -1 };
                s * m[0][c] * det(&minor)
            })
            .sum(),
    }
}

fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    if k == 0 {
        return vec![vec![]];
    }
    if n < k {
        return vec![];
    }
    let mut out = subsets(n - 1, k);
    for mut s in subsets(n - 1, k - 1) {
        s.push(n - 1);
        out.push(s);
    }
    out
}

/// All `k × k` minors of `m`.
pub fn minors(m: &IntMatrix, k: usize) -> Vec<i128> {
    let mut out = Vec::new();
    for rs in subsets(m.rows(), k) {
        for cs in subsets(m.cols(), k) {
            let sub: Vec<Vec<i128>> = rs
                .iter()
                .map(|&r| cs.iter().map(|&c| m[(r, c)] as i128).collect())
                .collect();
            out.push(det(&sub));
        }
    }
    out
}

/// Largest `k` with a nonzero `k × k` minor.
pub fn rank_by_minors(m: &IntMatrix) -> usize {
    (1..=m.rows().min(m.cols()))
        .rev()
        .find(|&k| minors(m, k).iter().any(|&d| d != 0))
        .unwrap_or(0)
}

pub fn gcd(a: i128, b: i128) -> i128 {
    if b == 0 {
        a.abs()
    } else {
        gcd(b, a % b)
    }
}
