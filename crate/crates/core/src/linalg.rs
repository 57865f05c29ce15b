//! Small dense linear-algebra helpers: Perron roots of nonnegative matrices,
//! strongly connected components and stationary vectors.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Default stopping tolerance for Perron iterations.
pub const PERRON_TOL: f64 = 1e-13;
/// Default iteration cap for Perron iterations.
pub const PERRON_MAX_ITER: usize = 1_000_000;

/// Dominant eigenvalue of a nonnegative matrix with some diagnostics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PerronRoot {
    pub value: f64,
    pub iterations: usize,
    /// Cyclic period of the dominant class. A period `d > 1` means `d`
    /// eigenvalues share the modulus of the real root.
    pub period: usize,
}

/// Strongly connected components of the directed graph with an edge `i -> j`
/// whenever `adj[i]` contains `j`. Components come out in reverse topological order.
pub fn strongly_connected_components(adj: &[Vec<usize>]) -> Vec<Vec<usize>> {
    // Iterative Tarjan.
    let n = adj.len();
    let mut index = vec![usize::MAX; n];
    let mut low = vec![0usize; n];
    let mut on_stack = vec![false; n];
    let mut stack = Vec::new();
    let mut components = Vec::new();
    let mut next_index = 0;

    for root in 0..n {
        if index[root] != usize::MAX {
            continue;
        }
        let mut call: Vec<(usize, usize)> = vec![(root, 0)];
        index[root] = next_index;
        low[root] = next_index;
        next_index += 1;
        stack.push(root);
        on_stack[root] = true;

        while let Some(&mut (v, ref mut edge)) = call.last_mut() {
            if *edge < adj[v].len() {
                let w = adj[v][*edge];
                *edge += 1;
                if index[w] == usize::MAX {
                    index[w] = next_index;
                    low[w] = next_index;
                    next_index += 1;
                    stack.push(w);
                    on_stack[w] = true;
                    call.push((w, 0));
                } else if on_stack[w] {
                    low[v] = low[v].min(index[w]);
                }
            } else {
                call.pop();
                if let Some(&(parent, _)) = call.last() {
                    low[parent] = low[parent].min(low[v]);
                }
                if low[v] == index[v] {
                    let mut comp = Vec::new();
                    loop {
                        let w = stack.pop().expect("tarjan stack underflow");
                        on_stack[w] = false;
                        comp.push(w);
                        if w == v {
                            break;
                        }
                    }
                    comp.sort_unstable();
                    components.push(comp);
                }
            }
        }
    }
    components
}

fn support_graph(m: &DMatrix<f64>) -> Vec<Vec<usize>> {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).filter(|&j| m[(i, j)] > 0.0).collect())
        .collect()
}

/// True when the positive entries of `m` form a strongly connected graph.
pub fn is_irreducible(m: &DMatrix<f64>) -> bool {
    m.nrows() > 0 && strongly_connected_components(&support_graph(m)).len() == 1
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Period of an irreducible class given as a list of vertices.
fn class_period(adj: &[Vec<usize>], class: &[usize]) -> usize {
    let mut level = vec![usize::MAX; adj.len()];
    let member = |v: usize| class.binary_search(&v).is_ok();
    let mut queue = std::collections::VecDeque::new();
    level[class[0]] = 0;
    queue.push_back(class[0]);
    let mut period = 0;
    while let Some(u) = queue.pop_front() {
        for &v in &adj[u] {
            if !member(v) {
                continue;
            }
            if level[v] == usize::MAX {
                level[v] = level[u] + 1;
                queue.push_back(v);
            } else {
                let diff = (level[u] + 1).abs_diff(level[v]);
                period = gcd(period, diff);
            }
        }
    }
    period.max(1)
}

/// Perron root of an irreducible nonnegative matrix given in row-major form.
///
/// Iterates on `(B + I) / 2`, which is primitive, and stops once the
/// Collatz-Wielandt bounds agree to `tol` (relative).
fn irreducible_perron(b: &[f64], n: usize, tol: f64, max_iter: usize) -> Result<(f64, usize)> {
    if n == 1 {
        return Ok((b[0], 0));
    }
    let mut x = vec![1.0; n];
    let mut y = vec![0.0; n];
    let mut previous = f64::NAN;
    for it in 1..=max_iter {
        for i in 0..n {
            let row = &b[i * n..(i + 1) * n];
            let s: f64 = row.iter().zip(&x).map(|(a, v)| a * v).sum();
            y[i] = 0.5 * (s + x[i]);
        }
        let mut lo = f64::INFINITY;
        let mut hi: f64 = 0.0;
        for i in 0..n {
            let r = y[i] / x[i];
            lo = lo.min(r);
            hi = hi.max(r);
        }
        let scale = y.iter().cloned().fold(0.0, f64::max);
        for (xi, yi) in x.iter_mut().zip(&y) {
            // keep entries strictly positive so the ratios stay defined
            *xi = (yi / scale).max(1e-300);
        }
        let mid = 0.5 * (lo + hi);
        if hi - lo <= tol * hi {
            return Ok((2.0 * mid - 1.0, it));
        }
        if it == max_iter {
            return Err(Error::NoConvergence {
                iterations: it,
                last: 2.0 * mid - 1.0,
                previous,
            });
        }
        previous = 2.0 * mid - 1.0;
    }
    unreachable!("loop returns on the last iteration")
}

/// Spectral radius of a nonnegative square matrix.
///
/// The matrix is split into irreducible classes; each class with a cycle
/// contributes its own Perron root and the radius is their maximum. Rows
/// that vanish only contribute the eigenvalue 0.
pub fn perron_root(m: &DMatrix<f64>, tol: f64, max_iter: usize) -> Result<PerronRoot> {
    if m.nrows() != m.ncols() {
        return Err(Error::NotSquare);
    }
    if let Some(v) = m.iter().find(|v| **v < 0.0 || !v.is_finite()) {
        return Err(Error::InvalidInput(format!(
            "perron_root needs a nonnegative matrix, found entry {v}"
        )));
    }
    let adj = support_graph(m);
    let mut best = PerronRoot {
        value: 0.0,
        iterations: 0,
        period: 1,
    };
    for class in strongly_connected_components(&adj) {
        let k = class.len();
        if k == 1 && m[(class[0], class[0])] == 0.0 {
            continue;
        }
        let mut block = vec![0.0; k * k];
        for (a, &i) in class.iter().enumerate() {
            for (b, &j) in class.iter().enumerate() {
                block[a * k + b] = m[(i, j)];
            }
        }
        let (value, iterations) = irreducible_perron(&block, k, tol, max_iter)?;
        if value > best.value {
            best = PerronRoot {
                value,
                iterations,
                period: class_period(&adj, &class),
            };
        }
    }
    Ok(best)
}

/// Spectral radius with the default tolerance and iteration cap.
pub fn spectral_radius_nonnegative(m: &DMatrix<f64>) -> Result<f64> {
    perron_root(m, PERRON_TOL, PERRON_MAX_ITER).map(|r| r.value)
}

/// Stationary distribution `pi P = pi`, `sum pi = 1` of an irreducible
/// row-stochastic matrix by a direct LU solve, falling back to power
/// iteration when the system is numerically singular.
pub fn stationary_vector(p: &DMatrix<f64>) -> Vec<f64> {
    let n = p.nrows();
    let mut a = p.transpose() - DMatrix::<f64>::identity(n, n);
    for j in 0..n {
        a[(n - 1, j)] = 1.0;
    }
    let mut rhs = DVector::<f64>::zeros(n);
    rhs[n - 1] = 1.0;
    if let Some(sol) = a.lu().solve(&rhs) {
        if sol.iter().all(|v| v.is_finite()) {
            let mut pi: Vec<f64> = sol.iter().copied().collect();
            polish_stationary(p, &mut pi);
            return pi;
        }
    }
    let mut pi = vec![1.0 / n as f64; n];
    for _ in 0..100_000 {
        let mut next = vec![0.0; n];
        for i in 0..n {
            for j in 0..n {
                next[j] += 0.5 * pi[i] * p[(i, j)];
            }
        }
        for j in 0..n {
            next[j] += 0.5 * pi[j];
        }
        let diff: f64 = next.iter().zip(&pi).map(|(a, b)| (a - b).abs()).sum();
        pi = next;
        if diff < 1e-16 {
            break;
        }
    }
    let s: f64 = pi.iter().sum();
    pi.iter_mut().for_each(|v| *v /= s);
    pi
}

/// One step of iterative refinement plus renormalisation.
fn polish_stationary(p: &DMatrix<f64>, pi: &mut [f64]) {
    let n = pi.len();
    for _ in 0..3 {
        let mut next = vec![0.0; n];
        for i in 0..n {
            for j in 0..n {
                next[j] += pi[i] * p[(i, j)];
            }
        }
        let s: f64 = next.iter().sum();
        for (a, b) in pi.iter_mut().zip(next) {
            *a = b / s;
        }
    }
}

/// Row vector times matrix.
pub fn row_times(v: &[f64], m: &DMatrix<f64>) -> Vec<f64> {
    let mut out = vec![0.0; m.ncols()];
    for (i, vi) in v.iter().enumerate() {
        if *vi == 0.0 {
            continue;
        }
        for (j, o) in out.iter_mut().enumerate() {
            *o += vi * m[(i, j)];
        }
    }
    out
}
