use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::StopEvent;
use crate::geodesy::PlanarPoint;
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hotspot<T> {
    /// Dwell-weighted mean of member centroids.
    pub centroid: PlanarPoint<T>,
    /// Largest member-centroid distance from `centroid`, m.
    pub radius: T,
    pub members: Vec<StopEvent<T>>,
    pub total_dwell_s: T,
    pub survey_count: usize,
}

fn find(parent: &mut [usize], mut i: usize) -> usize {
    while parent[i] != i {
        parent[i] = parent[parent[i]];
        i = parent[i];
    }
    i
}

/// Single-linkage clustering of stop centroids: events closer than
/// `merge_radius` (directly or through a chain) share a hotspot. Hotspots are
/// ordered by their first member in input order.
pub fn cluster_hotspots<T: Scalar>(events: &[StopEvent<T>], merge_radius: T) -> Vec<Hotspot<T>> {
    let n = events.len();
    let mut parent: Vec<usize> = (0..n).collect();
    for i in 0..n {
        for j in i + 1..n {
            if events[i].centroid.distance(&events[j].centroid) <= merge_radius {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                if a != b {
                    parent[a.max(b)] = a.min(b);
                }
            }
        }
    }
    let mut groups: Vec<(usize, Vec<usize>)> = Vec::new();
    for i in 0..n {
        let root = find(&mut parent, i);
        match groups.iter_mut().find(|(r, _)| *r == root) {
            Some((_, g)) => g.push(i),
            None => groups.push((root, vec![i])),
        }
    }
    groups
        .into_iter()
        .map(|(_, idx)| {
            let members: Vec<StopEvent<T>> = idx.iter().map(|&i| events[i].clone()).collect();
            let total = members.iter().map(|e| e.duration_s).sum::<T>();
            let (we, wn, w) = if total > T::zero() {
                (
                    members.iter().map(|e| e.centroid.easting * e.duration_s).sum::<T>(),
                    members.iter().map(|e| e.centroid.northing * e.duration_s).sum::<T>(),
                    total,
                )
            } else {
                (
                    members.iter().map(|e| e.centroid.easting).sum::<T>(),
                    members.iter().map(|e| e.centroid.northing).sum::<T>(),
                    T::from_usize_lossy(members.len()),
                )
            };
            let centroid = PlanarPoint::new(we / w, wn / w);
            let radius = members
                .iter()
                .map(|e| e.centroid.distance(&centroid))
                .fold(T::zero(), T::max);
            let survey_count = members
                .iter()
                .map(|e| e.survey_id.as_str())
                .collect::<BTreeSet<_>>()
                .len();
            Hotspot {
                centroid,
                radius,
                members,
                total_dwell_s: total,
                survey_count,
            }
        })
        .collect()
}
