//! Brute-force oracles shared by the integration tests. Nothing here calls
//! the descent code it is used to check.
#![allow(dead_code)]

/// All set partitions of `0..n` as restricted growth strings.
pub fn set_partitions(n: usize) -> Vec<Vec<usize>> {
    fn rec(i: usize, n: usize, cur: &mut Vec<usize>, max: usize, out: &mut Vec<Vec<usize>>) {
        if i == n {
            out.push(cur.clone());
            return;
        }
        for l in 0..=max {
            cur.push(l);
            rec(i + 1, n, cur, max.max(l + 1), out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    if n == 0 {
        out.push(Vec::new());
    } else {
        rec(0, n, &mut Vec::new(), 0, &mut out);
    }
    out
}

pub fn mean_of(points: &[&[f64]]) -> Vec<f64> {
    let d = points[0].len();
    let mut m = vec![0.0; d];
    for p in points {
        for j in 0..d {
            m[j] += p[j];
        }
    }
    m.iter().map(|v| v / points.len() as f64).collect()
}

pub fn scatter(points: &[&[f64]]) -> f64 {
    let m = mean_of(points);
    points
        .iter()
        .map(|p| {
            p.iter()
                .zip(&m)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
        })
        .sum()
}

/// Minimum of `WSS + lambda * K` over every set partition, with a minimizer.
pub fn single_optimum(points: &[Vec<f64>], lambda: f64) -> (f64, Vec<usize>) {
    let mut best = (f64::INFINITY, Vec::new());
    for labels in set_partitions(points.len()) {
        let k = labels.iter().max().map_or(0, |m| m + 1);
        let cost: f64 = (0..k)
            .map(|c| {
                let members: Vec<&[f64]> = points
                    .iter()
                    .zip(&labels)
                    .filter(|(_, &l)| l == c)
                    .map(|(p, _)| p.as_slice())
                    .collect();
                scatter(&members)
            })
            .sum::<f64>()
            + lambda * k as f64;
        if cost < best.0 {
            best = (cost, labels);
        }
    }
    best
}

/// Optimal nested structure for the hierarchical objective.
#[derive(Debug, Clone)]
pub struct HierOptimum {
    pub cost: f64,
    pub k_global: usize,
    /// Local cluster count per group.
    pub locals_per_group: Vec<usize>,
    pub global_sizes: Vec<usize>,
}

/// Minimum of `J_h` over every partition of each group into local clusters
/// and every partition of the resulting local clusters into global ones.
pub fn hier_optimum(
    points: &[Vec<f64>],
    groups: &[usize],
    lambda_local: f64,
    lambda_global: f64,
) -> HierOptimum {
    let n_groups = groups.iter().max().map_or(0, |m| m + 1);
    let members: Vec<Vec<usize>> = (0..n_groups)
        .map(|g| (0..points.len()).filter(|&i| groups[i] == g).collect())
        .collect();
    let per_group: Vec<Vec<Vec<usize>>> = members.iter().map(|m| set_partitions(m.len())).collect();

    let mut best = HierOptimum {
        cost: f64::INFINITY,
        k_global: 0,
        locals_per_group: vec![],
        global_sizes: vec![],
    };
    let mut choice = vec![0usize; n_groups];
    loop {
        // Local clusters as lists of row indices.
        let mut locals: Vec<Vec<usize>> = Vec::new();
        let mut counts = Vec::with_capacity(n_groups);
        for g in 0..n_groups {
            let labels = &per_group[g][choice[g]];
            let k = labels.iter().max().map_or(0, |m| m + 1);
            counts.push(k);
            for c in 0..k {
                locals.push(
                    members[g]
                        .iter()
                        .zip(labels)
                        .filter(|(_, &l)| l == c)
                        .map(|(&i, _)| i)
                        .collect(),
                );
            }
        }
        for assign in set_partitions(locals.len()) {
            let kg = assign.iter().max().map_or(0, |m| m + 1);
            let mut sizes = vec![0usize; kg];
            let wss: f64 = (0..kg)
                .map(|p| {
                    let rows: Vec<&[f64]> = locals
                        .iter()
                        .zip(&assign)
                        .filter(|(_, &a)| a == p)
                        .flat_map(|(l, _)| l.iter().map(|&i| points[i].as_slice()))
                        .collect();
                    sizes[p] = rows.len();
                    scatter(&rows)
                })
                .sum();
            let cost = wss + lambda_local * locals.len() as f64 + lambda_global * kg as f64;
            if cost < best.cost {
                best = HierOptimum {
                    cost,
                    k_global: kg,
                    locals_per_group: counts.clone(),
                    global_sizes: sizes,
                };
            }
        }
        // Odometer over per-group choices.
        let mut g = 0;
        loop {
            if g == n_groups {
                return best;
            }
            choice[g] += 1;
            if choice[g] < per_group[g].len() {
                break;
            }
            choice[g] = 0;
            g += 1;
        }
    }
}

/// Bell numbers, to sanity-check the enumerator.
pub fn bell(n: usize) -> usize {
    let mut row = vec![1usize];
    for _ in 0..n {
        let mut next = vec![*row.last().unwrap()];
        for v in &row {
            let last = *next.last().unwrap();
            next.push(last + v);
        }
        row = next;
    }
    row[0]
}

pub fn sq(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Crafted instance: tight clusters on a circle far from the grand mean.
pub fn crafted_instance(index: usize) -> (Vec<Vec<f64>>, f64) {
    let lambda = 4.0;
    // (clusters, points per cluster, dimension)
    let shapes = [
        (1, 3, 1),
        (2, 2, 1),
        (2, 4, 1),
        (3, 2, 1),
        (2, 3, 2),
        (3, 2, 2),
        (4, 2, 2),
        (4, 2, 1),
        (2, 4, 2),
        (4, 1, 2),
    ];
    let (k, per, d) = shapes[index];
    let mut pts = Vec::new();
    for c in 0..k {
        let angle = std::f64::consts::TAU * c as f64 / k as f64 + 0.3 * index as f64;
        let centre = if d == 1 {
            vec![if k == 1 {
                3.0
            } else {
                20.0 * c as f64 - 10.0 * (k - 1) as f64
            }]
        } else {
            vec![10.0 * angle.cos(), 10.0 * angle.sin()]
        };
        for p in 0..per {
            let jitter = 0.05 * (p as f64 + 1.0) * if p % 2 == 0 { 1.0 } else { -1.0 };
            let mut x = centre.clone();
            x[0] += jitter;
            if d == 2 {
                x[1] -= 0.5 * jitter;
            }
            pts.push(x);
        }
    }
    (pts, lambda)
}
