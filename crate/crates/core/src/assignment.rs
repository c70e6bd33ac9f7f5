//! Sparse rectangular assignment by successive shortest augmenting paths.
//!
//! Rows are matched one at a time along a shortest path in the residual
//! graph. Dijkstra runs on reduced costs `c(r, j) - u[r] - v[j]`, which the
//! potential update keeps nonnegative, so every augmentation preserves
//! optimality among matchings of the rows processed so far.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

/// Minimum-cost matching that covers every row. `adj[r]` lists `(column,
/// cost)` pairs with nonnegative costs. Returns the column of each row, or
/// `None` when some row cannot be matched. Ties are broken towards lower
/// column indices, which makes the result deterministic.
pub fn min_cost_assignment(n_cols: usize, adj: &[Vec<(usize, i64)>]) -> Option<Vec<usize>> {
    const INF: i64 = i64::MAX;
    let n_rows = adj.len();
    let mut u = vec![0i64; n_rows];
    let mut v = vec![0i64; n_cols];
    let mut row_of: Vec<Option<usize>> = vec![None; n_cols];
    let mut col_of: Vec<Option<usize>> = vec![None; n_rows];

    let mut dist = vec![INF; n_cols];
    let mut pred = vec![usize::MAX; n_cols];
    let mut done = vec![false; n_cols];
    let mut touched: Vec<usize> = Vec::new();
    let mut reached_rows: Vec<(usize, i64)> = Vec::new();
    let mut heap = BinaryHeap::new();

    for root in 0..n_rows {
        for &j in &touched {
            dist[j] = INF;
            pred[j] = usize::MAX;
            done[j] = false;
        }
        touched.clear();
        reached_rows.clear();
        heap.clear();

        let relax = |r: usize,
                     base: i64,
                     u: &[i64],
                     v: &[i64],
                     dist: &mut [i64],
                     pred: &mut [usize],
                     done: &[bool],
                     touched: &mut Vec<usize>,
                     heap: &mut BinaryHeap<Reverse<(i64, usize)>>| {
            for &(j, c) in &adj[r] {
                if done[j] {
                    continue;
                }
                let nd = base + c - u[r] - v[j];
                if nd < dist[j] {
                    if dist[j] == INF {
                        touched.push(j);
                    }
                    dist[j] = nd;
                    pred[j] = r;
                    heap.push(Reverse((nd, j)));
                }
            }
        };

        reached_rows.push((root, 0));
        relax(
            root,
            0,
            &u,
            &v,
            &mut dist,
            &mut pred,
            &done,
            &mut touched,
            &mut heap,
        );
        let mut target = None;
        while let Some(Reverse((d, j))) = heap.pop() {
            if done[j] || d > dist[j] {
                continue;
            }
            done[j] = true;
            match row_of[j] {
                None => {
                    target = Some(j);
                    break;
                }
                Some(r) => {
                    reached_rows.push((r, d));
                    relax(
                        r,
                        d,
                        &u,
                        &v,
                        &mut dist,
                        &mut pred,
                        &done,
                        &mut touched,
                        &mut heap,
                    );
                }
            }
        }
        let target = target?;
        let delta = dist[target];
        for &j in &touched {
            if done[j] {
                v[j] -= delta - dist[j];
            }
        }
        for &(r, d) in &reached_rows {
            u[r] += delta - d;
        }
        let mut j = target;
        loop {
            let r = pred[j];
            let prev = col_of[r];
            col_of[r] = Some(j);
            row_of[j] = Some(r);
            match prev {
                Some(pj) if r != root => j = pj,
                _ => break,
            }
        }
    }
    Some(
        col_of
            .into_iter()
            .map(|c| c.expect("every row matched"))
            .collect(),
    )
}
