//! DBSCAN over 2-D points with a uniform-grid neighbour index.
//!
//! A point is core when at least `min_pts` points (itself included) lie within
//! distance `eps`. Clusters are numbered in the order their first core point
//! appears in the input and are expanded one at a time, so a border point
//! reachable from several clusters belongs to the lowest-numbered one.

use std::collections::{HashMap, VecDeque};

use crate::detections::TreePoint;
use crate::error::{Error, Result};

struct GridIndex<'a> {
    points: &'a [[f64; 2]],
    eps: f64,
    eps2: f64,
    cells: HashMap<(i64, i64), Vec<usize>>,
}

impl<'a> GridIndex<'a> {
    fn new(points: &'a [[f64; 2]], eps: f64) -> Self {
        let mut cells: HashMap<(i64, i64), Vec<usize>> = HashMap::new();
        for (i, p) in points.iter().enumerate() {
            cells.entry(Self::key(p, eps)).or_default().push(i);
        }
        Self {
            points,
            eps,
            eps2: eps * eps,
            cells,
        }
    }

    fn key(p: &[f64; 2], eps: f64) -> (i64, i64) {
        ((p[0] / eps).floor() as i64, (p[1] / eps).floor() as i64)
    }

    /// Indices within `eps` of point `i` (including `i`), ascending.
    fn neighbours(&self, i: usize) -> Vec<usize> {
        let p = self.points[i];
        let (cx, cy) = Self::key(&p, self.eps);
        let mut out = Vec::new();
        for dx in -1..=1 {
            for dy in -1..=1 {
                let k = (cx.saturating_add(dx), cy.saturating_add(dy));
                if let Some(ids) = self.cells.get(&k) {
                    out.extend(ids.iter().copied().filter(|&j| {
                        let q = self.points[j];
                        let (ddx, ddy) = (p[0] - q[0], p[1] - q[1]);
                        ddx * ddx + ddy * ddy <= self.eps2
                    }));
                }
            }
        }
        out.sort_unstable();
        out
    }
}

#[derive(Clone, Copy, PartialEq)]
enum State {
    Unvisited,
    Noise,
    Cluster(usize),
}

/// Cluster labels per point: `Some(cluster id)` or `None` for noise.
pub fn dbscan(points: &[[f64; 2]], eps: f64, min_pts: usize) -> Result<Vec<Option<usize>>> {
    if !(eps.is_finite() && eps > 0.0) {
        return Err(Error::InvalidParameter(format!("eps {eps} must be > 0")));
    }
    if min_pts == 0 {
        return Err(Error::InvalidParameter("min_pts must be >= 1".into()));
    }
    if points.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::InvalidParameter("non-finite point coordinate".into()));
    }
    let index = GridIndex::new(points, eps);
    let mut state = vec![State::Unvisited; points.len()];
    let mut next_id = 0;

    for i in 0..points.len() {
        if state[i] != State::Unvisited {
            continue;
        }
        let nb = index.neighbours(i);
        if nb.len() < min_pts {
            state[i] = State::Noise;
            continue;
        }
        let id = next_id;
        next_id += 1;
        state[i] = State::Cluster(id);
        let mut queue: VecDeque<usize> = nb.into_iter().filter(|&j| j != i).collect();
        while let Some(q) = queue.pop_front() {
            match state[q] {
                State::Cluster(_) => {}
                State::Noise => state[q] = State::Cluster(id),
                State::Unvisited => {
                    state[q] = State::Cluster(id);
                    let nq = index.neighbours(q);
                    if nq.len() >= min_pts {
                        queue.extend(nq);
                    }
                }
            }
        }
    }
    Ok(state
        .into_iter()
        .map(|s| match s {
            State::Cluster(c) => Some(c),
            _ => None,
        })
        .collect())
}

pub fn dbscan_points(points: &[TreePoint], eps: f64, min_pts: usize) -> Result<Vec<Option<usize>>> {
    let xy: Vec<[f64; 2]> = points.iter().map(TreePoint::xy).collect();
    dbscan(&xy, eps, min_pts)
}

/// Median distance to the `k`-th nearest other point.
///
/// Points with fewer than `k` others use their farthest neighbour.
pub fn default_eps(points: &[TreePoint], k: usize) -> Result<f64> {
    if points.len() < 2 {
        return Err(Error::InvalidParameter("eps heuristic needs at least 2 points".into()));
    }
    let k = k.clamp(1, points.len() - 1);
    let mut kth: Vec<f64> = points
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let mut d: Vec<f64> = points
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != i)
                .map(|(_, q)| (p.x - q.x).hypot(p.y - q.y))
                .collect();
            let (_, v, _) = d.select_nth_unstable_by(k - 1, f64::total_cmp);
            *v
        })
        .collect();
    kth.sort_by(f64::total_cmp);
    let n = kth.len();
    let median = if n % 2 == 1 {
        kth[n / 2]
    } else {
        (kth[n / 2 - 1] + kth[n / 2]) / 2.0
    };
    if median > 0.0 {
        Ok(median)
    } else {
        Err(Error::InvalidParameter(
            "eps heuristic is zero (coincident points); pass eps explicitly".into(),
        ))
    }
}
