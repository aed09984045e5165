//! Scalarization, dominance filtering and hypervolume metrics.

use crate::error::CoreError;
use serde::{Deserialize, Serialize};

/// Preference vector over objectives: non-negative entries summing to 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Preference {
    lambda: Vec<f64>,
}

impl Preference {
    pub fn new(lambda: Vec<f64>) -> Result<Self, CoreError> {
        if lambda.iter().any(|x| !x.is_finite() || *x < 0.0) {
            return Err(CoreError::InvalidSpec(format!(
                "preference entries must be finite and non-negative: {lambda:?}"
            )));
        }
        let sum: f64 = lambda.iter().sum();
        if (sum - 1.0).abs() > 1e-12 {
            return Err(CoreError::InvalidSpec(format!(
                "preference must sum to 1, got {sum}"
            )));
        }
        Ok(Preference { lambda })
    }

    /// The single-objective preference `[1]`.
    pub fn single() -> Self {
        Preference { lambda: vec![1.0] }
    }

    /// Bi-objective preference `(l1, 1 - l1)`.
    pub fn bi(l1: f64) -> Result<Self, CoreError> {
        Preference::new(vec![l1, 1.0 - l1])
    }

    /// Evenly spaced bi-objective grid with `k` preferences,
    /// `lambda_1 in {0, 1/(k-1), ..., 1}`.
    pub fn grid(k: usize) -> Vec<Preference> {
        assert!(k >= 2, "grid needs at least 2 preferences");
        (0..k)
            .map(|i| {
                let l1 = i as f64 / (k - 1) as f64;
                Preference {
                    lambda: vec![l1, 1.0 - l1],
                }
            })
            .collect()
    }

    pub fn lambda(&self) -> &[f64] {
        &self.lambda
    }

    pub fn dim(&self) -> usize {
        self.lambda.len()
    }
}

fn check_dims(a: usize, b: usize) -> Result<(), CoreError> {
    if a != b {
        return Err(CoreError::DimMismatch { expected: a, got: b });
    }
    Ok(())
}

/// Chebyshev scalarized cost `max_i lambda_i |C_i - z*_i|`.
pub fn chebyshev_cost(
    objectives: &[f64],
    pref: &Preference,
    ideal: &[f64],
) -> Result<f64, CoreError> {
    check_dims(objectives.len(), pref.dim())?;
    check_dims(objectives.len(), ideal.len())?;
    Ok(objectives
        .iter()
        .zip(pref.lambda())
        .zip(ideal)
        .map(|((c, l), z)| l * (c - z).abs())
        .fold(0.0, f64::max))
}

/// Linear scalarized cost `sum_i lambda_i C_i`.
pub fn linear_cost(objectives: &[f64], pref: &Preference) -> Result<f64, CoreError> {
    check_dims(objectives.len(), pref.dim())?;
    Ok(objectives
        .iter()
        .zip(pref.lambda())
        .map(|(c, l)| l * c)
        .sum())
}

/// `a` dominates `b`: no worse in every objective, strictly better in one.
pub fn dominates(a: &[f64], b: &[f64]) -> bool {
    let mut strict = false;
    for (x, y) in a.iter().zip(b) {
        if x > y {
            return false;
        }
        if x < y {
            strict = true;
        }
    }
    strict
}

/// Archive of mutually non-dominated objective vectors with associated
/// route ids. The ideal point starts at the origin (objectives are
/// non-negative sums) and tracks the componentwise minimum.
#[derive(Debug, Clone, PartialEq)]
pub struct ParetoArchive {
    points: Vec<(Vec<f64>, u64)>,
    ideal: Vec<f64>,
}

impl ParetoArchive {
    pub fn new(objective_dim: usize) -> Self {
        ParetoArchive {
            points: Vec::new(),
            ideal: vec![0.0; objective_dim],
        }
    }

    pub fn points(&self) -> &[(Vec<f64>, u64)] {
        &self.points
    }

    pub fn ideal(&self) -> &[f64] {
        &self.ideal
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Inserts a point unless it is dominated; removes any incumbents the
    /// new point dominates. Returns whether the point was added. A point
    /// equal to an incumbent is kept out (it adds nothing).
    pub fn insert(&mut self, point: Vec<f64>, route_id: u64) -> bool {
        assert_eq!(point.len(), self.ideal.len(), "objective dim mismatch");
        if self
            .points
            .iter()
            .any(|(p, _)| dominates(p, &point) || p == &point)
        {
            return false;
        }
        self.points.retain(|(p, _)| !dominates(&point, p));
        for (z, x) in self.ideal.iter_mut().zip(&point) {
            *z = z.min(*x);
        }
        self.points.push((point, route_id));
        true
    }

    /// Merges two archives; pure, associative and commutative up to point
    /// order, so it can serve as a parallel reduction.
    pub fn merge(mut a: ParetoArchive, b: ParetoArchive) -> ParetoArchive {
        for (p, id) in b.points {
            a.insert(p, id);
        }
        a
    }

    /// Normalized 2-D hypervolume with respect to `reference`.
    pub fn hypervolume(&self, reference: &[f64]) -> Result<f64, CoreError> {
        let pts: Vec<&[f64]> = self.points.iter().map(|(p, _)| p.as_slice()).collect();
        hypervolume_2d(&pts, reference)
    }
}

/// Exact 2-D minimization hypervolume via a sorted sweep, normalized by
/// the reference-box volume anchored at the origin (range `[0, 1]`).
pub fn hypervolume_2d(points: &[&[f64]], reference: &[f64]) -> Result<f64, CoreError> {
    let raw = hypervolume_2d_raw(points, reference)?;
    Ok(raw / (reference[0] * reference[1]))
}

/// Unnormalized 2-D minimization hypervolume: the area dominated between
/// the points and the reference.
pub fn hypervolume_2d_raw(points: &[&[f64]], reference: &[f64]) -> Result<f64, CoreError> {
    if reference.len() != 2 {
        return Err(CoreError::DimMismatch {
            expected: 2,
            got: reference.len(),
        });
    }
    for p in points {
        if p.len() != 2 {
            return Err(CoreError::DimMismatch { expected: 2, got: p.len() });
        }
        if p[0] > reference[0] || p[1] > reference[1] {
            return Err(CoreError::ReferenceDominated {
                point: p.to_vec(),
                reference: reference.to_vec(),
            });
        }
    }
    if points.is_empty() {
        return Ok(0.0);
    }
    // Keep the non-dominated staircase: sort by first objective, then keep
    // strictly decreasing second objectives.
    let mut sorted: Vec<(f64, f64)> = points.iter().map(|p| (p[0], p[1])).collect();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut front: Vec<(f64, f64)> = Vec::with_capacity(sorted.len());
    for (x, y) in sorted {
        if front.last().map_or(true, |&(_, py)| y < py) {
            front.push((x, y));
        }
    }
    let mut hv = 0.0;
    for (i, &(x, y)) in front.iter().enumerate() {
        let next_x = front.get(i + 1).map_or(reference[0], |&(nx, _)| nx);
        hv += (reference[1] - y) * (next_x - x);
    }
    Ok(hv)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chebyshev_examples() {
        let p = Preference::new(vec![0.5, 0.5]).unwrap();
        let v = chebyshev_cost(&[10.0, 20.0], &p, &[0.0, 0.0]).unwrap();
        assert_eq!(v, 10.0);
        let axis = Preference::new(vec![1.0, 0.0]).unwrap();
        let v = chebyshev_cost(&[3.0, 99.0], &axis, &[1.0, 0.0]).unwrap();
        assert_eq!(v, 2.0);
        let zero = chebyshev_cost(&[2.0, 3.0], &p, &[2.0, 3.0]).unwrap();
        assert_eq!(zero, 0.0);
    }

    #[test]
    fn linear_examples() {
        let p = Preference::new(vec![0.5, 0.5]).unwrap();
        assert_eq!(linear_cost(&[10.0, 20.0], &p).unwrap(), 15.0);
        let axis = Preference::new(vec![1.0, 0.0]).unwrap();
        assert_eq!(linear_cost(&[3.0, 99.0], &axis).unwrap(), 3.0);
    }

    #[test]
    fn dim_mismatch_is_error() {
        let p = Preference::new(vec![0.5, 0.5]).unwrap();
        assert!(chebyshev_cost(&[1.0], &p, &[0.0]).is_err());
        assert!(linear_cost(&[1.0, 2.0, 3.0], &p).is_err());
    }

    #[test]
    fn preference_invariants() {
        assert!(Preference::new(vec![0.6, 0.5]).is_err());
        assert!(Preference::new(vec![-0.1, 1.1]).is_err());
        let grid = Preference::grid(101);
        assert_eq!(grid.len(), 101);
        assert_eq!(grid[0].lambda()[0], 0.0);
        assert_eq!(grid[100].lambda()[0], 1.0);
    }

    #[test]
    fn insert_dominated_point_keeps_archive() {
        let mut a = ParetoArchive::new(2);
        a.insert(vec![1.0, 2.0], 1);
        a.insert(vec![2.0, 1.0], 2);
        assert!(!a.insert(vec![2.0, 2.0], 3));
        assert_eq!(a.len(), 2);
    }

    #[test]
    fn dominating_point_sweeps_archive() {
        let mut a = ParetoArchive::new(2);
        a.insert(vec![1.0, 2.0], 1);
        a.insert(vec![2.0, 1.0], 2);
        assert!(a.insert(vec![0.0, 0.0], 3));
        assert_eq!(a.len(), 1);
        assert_eq!(a.points()[0].0, vec![0.0, 0.0]);
    }

    #[test]
    fn hv_staircase_example() {
        let pts: Vec<&[f64]> = vec![&[1.0, 3.0], &[2.0, 2.0], &[3.0, 1.0]];
        let raw = hypervolume_2d_raw(&pts, &[4.0, 4.0]).unwrap();
        assert_eq!(raw, 6.0);
        let norm = hypervolume_2d(&pts, &[4.0, 4.0]).unwrap();
        assert!((norm - 6.0 / 16.0).abs() < 1e-15);
    }

    #[test]
    fn hv_point_on_reference_is_zero() {
        let pts: Vec<&[f64]> = vec![&[4.0, 4.0]];
        assert_eq!(hypervolume_2d_raw(&pts, &[4.0, 4.0]).unwrap(), 0.0);
    }

    #[test]
    fn hv_rejects_point_beyond_reference() {
        let pts: Vec<&[f64]> = vec![&[5.0, 1.0]];
        assert!(matches!(
            hypervolume_2d_raw(&pts, &[4.0, 4.0]),
            Err(CoreError::ReferenceDominated { .. })
        ));
    }
}
