use std::collections::{HashMap, VecDeque};

use crate::geodesy::ProjectedPoint;

/// Grid bucketing with cell size `eps`, so a neighborhood query only looks
/// at the 3×3 block around a point.
struct Grid {
    eps: f64,
    cells: HashMap<(i64, i64), Vec<usize>>,
}

impl Grid {
    fn key(eps: f64, p: &ProjectedPoint) -> (i64, i64) {
        ((p.easting / eps).floor() as i64, (p.northing / eps).floor() as i64)
    }

    fn build(points: &[ProjectedPoint], eps: f64) -> Self {
        let mut cells: HashMap<(i64, i64), Vec<usize>> = HashMap::new();
        for (i, p) in points.iter().enumerate() {
            cells.entry(Self::key(eps, p)).or_default().push(i);
        }
        Self { eps, cells }
    }

    /// Indices within `eps` of `points[i]` (inclusive), including `i`, ascending.
    fn neighbors(&self, points: &[ProjectedPoint], i: usize) -> Vec<usize> {
        let p = &points[i];
        let (cx, cy) = Self::key(self.eps, p);
        let mut out = Vec::new();
        for dx in -1..=1 {
            for dy in -1..=1 {
                if let Some(cell) = self.cells.get(&(cx + dx, cy + dy)) {
                    out.extend(cell.iter().copied().filter(|&j| points[j].distance(p) <= self.eps));
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
    Member(usize),
}

/// Density clustering. A point is core when at least `min_pts` points
/// (itself included) lie within `eps`. Returns a cluster id per point, `None`
/// for noise. Ids are assigned in input order and a border point reachable
/// from several clusters keeps the lowest id.
pub fn dbscan(points: &[ProjectedPoint], eps: f64, min_pts: usize) -> Vec<Option<usize>> {
    if !(eps > 0.0 && eps.is_finite()) {
        return vec![None; points.len()];
    }
    let grid = Grid::build(points, eps);
    let mut state = vec![State::Unvisited; points.len()];
    let mut next_id = 0;
    for i in 0..points.len() {
        if state[i] != State::Unvisited {
            continue;
        }
        let seeds = grid.neighbors(points, i);
        if seeds.len() < min_pts {
            state[i] = State::Noise;
            continue;
        }
        let id = next_id;
        next_id += 1;
        state[i] = State::Member(id);
        let mut queue: VecDeque<usize> = seeds.into_iter().filter(|&j| j != i).collect();
        while let Some(q) = queue.pop_front() {
            match state[q] {
                State::Member(_) => continue,
                State::Noise => {
                    state[q] = State::Member(id);
                    continue;
                }
                State::Unvisited => state[q] = State::Member(id),
            }
            let reach = grid.neighbors(points, q);
            if reach.len() >= min_pts {
                queue.extend(reach.into_iter().filter(|&j| !matches!(state[j], State::Member(_))));
            }
        }
    }
    state
        .into_iter()
        .map(|s| match s {
            State::Member(id) => Some(id),
            _ => None,
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    // Neighbor matrix, core flags, then components of the core graph ordered
    // by their smallest core index; borders join their lowest adjacent id.
    fn brute_force(points: &[ProjectedPoint], eps: f64, min_pts: usize) -> Vec<Option<usize>> {
        let n = points.len();
        let adj: Vec<Vec<bool>> = (0..n)
            .map(|i| (0..n).map(|j| points[i].distance(&points[j]) <= eps).collect())
            .collect();
        let core: Vec<bool> = adj.iter().map(|row| row.iter().filter(|&&b| b).count() >= min_pts).collect();
        let mut comp = vec![None; n];
        let mut next = 0;
        for s in 0..n {
            if !core[s] || comp[s].is_some() {
                continue;
            }
            let mut stack = vec![s];
            comp[s] = Some(next);
            while let Some(u) = stack.pop() {
                for v in 0..n {
                    if adj[u][v] && core[v] && comp[v].is_none() {
                        comp[v] = Some(next);
                        stack.push(v);
                    }
                }
            }
            next += 1;
        }
        (0..n)
            .map(|i| {
                if core[i] {
                    comp[i]
                } else {
                    (0..n).filter(|&j| core[j] && adj[i][j]).filter_map(|j| comp[j]).min()
                }
            })
            .collect()
    }

    fn pts(v: &[(f64, f64)]) -> Vec<ProjectedPoint> {
        v.iter().map(|&(e, n)| ProjectedPoint::new(e, n)).collect()
    }

    #[test]
    fn two_blobs_and_noise() {
        let p = pts(&[(0.0, 0.0), (5.0, 0.0), (100.0, 100.0), (103.0, 100.0), (500.0, 0.0)]);
        assert_eq!(dbscan(&p, 15.0, 2), vec![Some(0), Some(0), Some(1), Some(1), None]);
    }

    #[test]
    fn boundary_is_inclusive() {
        let p = pts(&[(0.0, 0.0), (15.0, 0.0)]);
        assert_eq!(dbscan(&p, 15.0, 2), vec![Some(0), Some(0)]);
        let p = pts(&[(0.0, 0.0), (15.000001, 0.0)]);
        assert_eq!(dbscan(&p, 15.0, 2), vec![None, None]);
    }

    #[test]
    fn empty_input() {
        assert!(dbscan(&[], 15.0, 2).is_empty());
    }

    proptest! {
        #[test]
        fn matches_brute_force(
            raw in prop::collection::vec((-60.0f64..60.0, -60.0f64..60.0), 0..60),
            eps in 1.0f64..25.0,
            min_pts in 1usize..5,
        ) {
            let p = pts(&raw);
            prop_assert_eq!(dbscan(&p, eps, min_pts), brute_force(&p, eps, min_pts));
        }

        #[test]
        fn translation_invariant(
            raw in prop::collection::vec((-60.0f64..60.0, -60.0f64..60.0), 0..40),
            shift in (-1.0e6f64..1.0e6, -1.0e6f64..1.0e6),
        ) {
            // shifts by whole grid cells keep every distance exact
            let (sx, sy) = ((shift.0 / 15.0).round() * 15.0, (shift.1 / 15.0).round() * 15.0);
            let a = pts(&raw);
            let b: Vec<_> = raw.iter().map(|&(e, n)| ProjectedPoint::new(e + sx, n + sy)).collect();
            let la = dbscan(&a, 15.0, 2);
            let lb = dbscan(&b, 15.0, 2);
            prop_assert_eq!(la.iter().filter(|l| l.is_none()).count(), lb.iter().filter(|l| l.is_none()).count());
        }
    }
}
