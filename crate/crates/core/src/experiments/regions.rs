//! Regions of the unit level set `V_1(R)` used to bin projected points.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Region {
    /// Axis-parallel box `lo <= u <= hi`.
    Box { lo: Vec<f64>, hi: Vec<f64> },
    /// `{u : <u, axis> >= cos_min |u| |axis|}`.
    SphericalCap { axis: Vec<f64>, cos_min: f64 },
    /// `{u : <u, normal> >= offset}`.
    Halfspace { normal: Vec<f64>, offset: f64 },
    /// `{u : <u, normal> < offset}`, the complement of a half-space.
    OpenHalfspaceBelow { normal: Vec<f64>, offset: f64 },
    /// Directions closer (in angle) to `axes[index]` than to any other axis; ties go
    /// to the lowest index. Cells over all indices partition `u != 0`.
    NearestAxis { axes: Vec<Vec<f64>>, index: usize },
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

impl Region {
    pub fn dim(&self) -> usize {
        match self {
            Region::Box { lo, .. } => lo.len(),
            Region::SphericalCap { axis, .. } => axis.len(),
            Region::Halfspace { normal, .. } | Region::OpenHalfspaceBelow { normal, .. } => normal.len(),
            Region::NearestAxis { axes, .. } => axes.first().map_or(0, Vec::len),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidArgument(msg.to_string()));
        match self {
            Region::Box { lo, hi } => {
                if lo.len() != hi.len() || lo.iter().zip(hi).any(|(a, b)| !(a < b)) {
                    return bad("box needs lo < hi in every coordinate");
                }
            }
            Region::SphericalCap { axis, cos_min } => {
                if norm(axis) == 0.0 || !(-1.0..1.0).contains(cos_min) {
                    return bad("cap needs a nonzero axis and cos_min in [-1, 1)");
                }
            }
            Region::Halfspace { normal, offset } | Region::OpenHalfspaceBelow { normal, offset } => {
                if norm(normal) == 0.0 || !offset.is_finite() {
                    return bad("half-space needs a nonzero normal and finite offset");
                }
            }
            Region::NearestAxis { axes, index } => {
                let d = self.dim();
                if *index >= axes.len() || axes.iter().any(|a| a.len() != d || norm(a) == 0.0) {
                    return bad("nearest-axis cell needs nonzero axes of equal length and a valid index");
                }
            }
        }
        Ok(())
    }

    pub fn contains(&self, u: &[f64]) -> bool {
        match self {
            Region::Box { lo, hi } => u.iter().zip(lo.iter().zip(hi)).all(|(v, (a, b))| a <= v && v <= b),
            Region::SphericalCap { axis, cos_min } => {
                let n = norm(u);
                n > 0.0 && dot(u, axis) >= cos_min * n * norm(axis)
            }
            Region::Halfspace { normal, offset } => dot(u, normal) >= *offset,
            Region::OpenHalfspaceBelow { normal, offset } => dot(u, normal) < *offset,
            Region::NearestAxis { axes, index } => nearest_axis(axes, u) == Some(*index),
        }
    }
}

fn nearest_axis(axes: &[Vec<f64>], u: &[f64]) -> Option<usize> {
    if norm(u) == 0.0 {
        return None;
    }
    let mut best = None;
    let mut best_cos = f64::NEG_INFINITY;
    for (i, a) in axes.iter().enumerate() {
        let c = dot(u, a) / norm(a);
        if c > best_cos {
            best_cos = c;
            best = Some(i);
        }
    }
    best
}

/// The nearest-axis cells for a list of axes.
pub fn nearest_axis_partition(axes: Vec<Vec<f64>>) -> Vec<Region> {
    (0..axes.len())
        .map(|index| Region::NearestAxis { axes: axes.clone(), index })
        .collect()
}

/// The `2^n` sign-pattern cells `{(±1, ..., ±1)}`, i.e. the orthants, as nearest-axis cells.
pub fn orthant_caps(n: usize) -> Vec<Region> {
    let axes = (0..1usize << n)
        .map(|mask| (0..n).map(|i| if mask >> i & 1 == 1 { -1.0 } else { 1.0 }).collect())
        .collect();
    nearest_axis_partition(axes)
}

/// `{<u, normal> >= offset}` and its complement.
pub fn halfspace_pair(normal: Vec<f64>, offset: f64) -> Vec<Region> {
    vec![
        Region::Halfspace { normal: normal.clone(), offset },
        Region::OpenHalfspaceBelow { normal, offset },
    ]
}

/// Index of the first region containing `u`.
pub fn locate(regions: &[Region], u: &[f64]) -> Option<usize> {
    regions.iter().position(|r| r.contains(u))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn orthants_are_octants() {
        let cells = orthant_caps(3);
        assert_eq!(cells.len(), 8);
        for u in [[0.3, 0.2, 0.9], [-0.5, 0.1, -0.2], [0.0, -1.0, 0.0]] {
            let hits = cells.iter().filter(|c| c.contains(&u)).count();
            assert_eq!(hits, 1, "{u:?}");
            let i = locate(&cells, &u).unwrap();
            let Region::NearestAxis { axes, .. } = &cells[i] else { panic!() };
            // an interior point of an octant lands in the cell of its sign pattern
            if u.iter().all(|v| *v != 0.0) {
                assert!(axes[i].iter().zip(&u).all(|(a, v)| a * v > 0.0));
            }
        }
        assert!(cells.iter().all(|c| !c.contains(&[0.0, 0.0, 0.0])));
    }

    #[test]
    fn caps_boxes_halfspaces() {
        let cap = Region::SphericalCap { axis: vec![0.0, 0.0, 2.0], cos_min: 0.5 };
        assert!(cap.contains(&[0.0, 0.1, 1.0]) && !cap.contains(&[1.0, 0.0, 0.1]));
        let b = Region::Box { lo: vec![-1.0, -1.0], hi: vec![1.0, 0.0] };
        assert!(b.contains(&[0.5, -0.5]) && !b.contains(&[0.5, 0.5]));
        let pair = halfspace_pair(vec![0.0, 1.0], 0.25);
        assert_eq!(locate(&pair, &[0.0, 0.25]), Some(0));
        assert_eq!(locate(&pair, &[0.0, 0.2]), Some(1));
        assert!(Region::Box { lo: vec![1.0], hi: vec![0.0] }.validate().is_err());
        assert!(Region::SphericalCap { axis: vec![0.0; 3], cos_min: 0.0 }.validate().is_err());
        assert!(cap.validate().is_ok());
    }

    #[test]
    fn json_shape() {
        let r = Region::Halfspace { normal: vec![1.0, 0.0], offset: 0.0 };
        let v = serde_json::to_value(&r).unwrap();
        assert_eq!(v["kind"], "halfspace");
        assert_eq!(serde_json::from_value::<Region>(v).unwrap(), r);
    }
}
