//! Planar homography between the image plane and the ground plane.
//!
//! Tracked head positions are assumed to lie on the ground (z = 0), so a
//! single 3x3 projective map rectifies them into metric world coordinates.

use nalgebra::{DMatrix, Matrix3, Vector3};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::trajectory::{Correspondence, Point2, Sample, SceneDataset, Trajectory, Units};

#[derive(Debug, Error, PartialEq)]
pub enum HomographyError {
    #[error("need at least 4 point correspondences, got {0}")]
    InsufficientData(usize),
    #[error("degenerate point configuration, linear system is singular")]
    Singular,
    #[error("point ({x}, {y}) maps to infinity")]
    PointAtInfinity { x: f64, y: f64 },
    #[error("non-finite correspondence")]
    NonFinite,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Homography {
    matrix: Matrix3<f64>,
}

impl Homography {
    pub fn identity() -> Self {
        Self {
            matrix: Matrix3::identity(),
        }
    }

    /// Wraps a matrix, rescaling so the bottom-right entry is 1 when it is
    /// nonzero.
    pub fn from_matrix(matrix: Matrix3<f64>) -> Result<Self, HomographyError> {
        if matrix.iter().any(|v| !v.is_finite()) {
            return Err(HomographyError::NonFinite);
        }
        let norm = matrix.norm();
        if norm == 0.0 {
            return Err(HomographyError::Singular);
        }
        let unit = matrix / norm;
        if unit.determinant().abs() < 1e-12 {
            return Err(HomographyError::Singular);
        }
        let corner = unit[(2, 2)];
        let matrix = if corner.abs() > 1e-12 {
            unit / corner
        } else {
            unit
        };
        Ok(Self { matrix })
    }

    pub fn matrix(&self) -> &Matrix3<f64> {
        &self.matrix
    }

    pub fn apply(&self, p: Point2) -> Result<Point2, HomographyError> {
        let v = self.matrix * Vector3::new(p.x, p.y, 1.0);
        if v.z.abs() < 1e-12 {
            return Err(HomographyError::PointAtInfinity { x: p.x, y: p.y });
        }
        Ok(Point2::new(v.x / v.z, v.y / v.z))
    }

    pub fn inverse(&self) -> Result<Self, HomographyError> {
        let inv = self.matrix.try_inverse().ok_or(HomographyError::Singular)?;
        Self::from_matrix(inv)
    }
}

pub fn apply_homography(h: &Homography, p: Point2) -> Result<Point2, HomographyError> {
    h.apply(p)
}

/// Similarity transform moving the centroid to the origin with mean
/// distance sqrt(2).
fn conditioning(points: &[Point2]) -> Result<Matrix3<f64>, HomographyError> {
    let n = points.len() as f64;
    let cx = points.iter().map(|p| p.x).sum::<f64>() / n;
    let cy = points.iter().map(|p| p.y).sum::<f64>() / n;
    let mean_dist = points
        .iter()
        .map(|p| Point2::new(p.x - cx, p.y - cy).norm())
        .sum::<f64>()
        / n;
    if !(mean_dist > 0.0) {
        return Err(HomographyError::Singular);
    }
    let s = std::f64::consts::SQRT_2 / mean_dist;
    Ok(Matrix3::new(s, 0.0, -s * cx, 0.0, s, -s * cy, 0.0, 0.0, 1.0))
}

fn transform(t: &Matrix3<f64>, p: Point2) -> Point2 {
    let v = t * Vector3::new(p.x, p.y, 1.0);
    Point2::new(v.x / v.z, v.y / v.z)
}

/// Normalized direct linear transform: conditions both point sets, solves
/// `A h = 0` for the right singular vector of the smallest singular value,
/// then undoes the conditioning.
pub fn estimate_homography(
    correspondences: &[Correspondence],
) -> Result<Homography, HomographyError> {
    let n = correspondences.len();
    if n < 4 {
        return Err(HomographyError::InsufficientData(n));
    }
    if correspondences
        .iter()
        .any(|c| !c.image.is_finite() || !c.world.is_finite())
    {
        return Err(HomographyError::NonFinite);
    }

    let image: Vec<Point2> = correspondences.iter().map(|c| c.image).collect();
    let world: Vec<Point2> = correspondences.iter().map(|c| c.world).collect();
    let t_image = conditioning(&image)?;
    let t_world = conditioning(&world)?;

    // pad to at least 9 rows so the full V^T is available
    let rows = (2 * n).max(9);
    let mut a = DMatrix::<f64>::zeros(rows, 9);
    for (i, c) in correspondences.iter().enumerate() {
        let p = transform(&t_image, c.image);
        let q = transform(&t_world, c.world);
        let (r0, r1) = (2 * i, 2 * i + 1);
        a[(r0, 0)] = -p.x;
        a[(r0, 1)] = -p.y;
        a[(r0, 2)] = -1.0;
        a[(r0, 6)] = q.x * p.x;
        a[(r0, 7)] = q.x * p.y;
        a[(r0, 8)] = q.x;

        a[(r1, 3)] = -p.x;
        a[(r1, 4)] = -p.y;
        a[(r1, 5)] = -1.0;
        a[(r1, 6)] = q.y * p.x;
        a[(r1, 7)] = q.y * p.y;
        a[(r1, 8)] = q.y;
    }

    let svd = a.svd(false, true);
    let v_t = svd.v_t.ok_or(HomographyError::Singular)?;
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&i, &j| svd.singular_values[i].total_cmp(&svd.singular_values[j]));
    let largest = svd.singular_values[order[order.len() - 1]];
    let second_smallest = svd.singular_values[order[1]];
    // a two-dimensional null space means the points do not pin down H
    if second_smallest <= 1e-10 * largest {
        return Err(HomographyError::Singular);
    }
    let h = v_t.row(order[0]);
    let conditioned = Matrix3::new(h[0], h[1], h[2], h[3], h[4], h[5], h[6], h[7], h[8]);

    let t_world_inv = t_world.try_inverse().ok_or(HomographyError::Singular)?;
    Homography::from_matrix(t_world_inv * conditioned * t_image)
}

/// Maps every sample of an image-space dataset onto the ground plane.
pub fn rectify_dataset(
    dataset: &SceneDataset,
    h: &Homography,
) -> Result<SceneDataset, HomographyError> {
    let trajectories = dataset
        .trajectories
        .iter()
        .map(|t| {
            let samples = t
                .samples
                .iter()
                .map(|s| {
                    Ok(Sample {
                        frame: s.frame,
                        position: h.apply(s.position)?,
                    })
                })
                .collect::<Result<Vec<_>, HomographyError>>()?;
            Ok(Trajectory {
                person_id: t.person_id,
                samples,
            })
        })
        .collect::<Result<Vec<_>, HomographyError>>()?;
    Ok(SceneDataset {
        trajectories,
        frame_rate: dataset.frame_rate,
        units: Units::WorldMeters,
        label: dataset.label.clone(),
    })
}

/// Largest distance between a mapped image point and its world point.
pub fn max_reprojection_error(h: &Homography, correspondences: &[Correspondence]) -> f64 {
    correspondences
        .iter()
        .map(|c| match h.apply(c.image) {
            Ok(p) => p.distance(c.world),
            Err(_) => f64::INFINITY,
        })
        .fold(0.0, f64::max)
}
