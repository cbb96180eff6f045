//! Camera-pose representation and trajectory metrics.
//!
//! Poses are world-to-camera extrinsics `[R|t]` with the camera frame
//! oriented x-right / y-down / z-forward, so the camera center in world
//! coordinates is `-Rᵀt`. Trajectories are nonempty ordered pose lists.
//!
//! The trajectory text format is one frame per line: 12 whitespace-separated
//! decimal floats, row-major 3×4 `[R|t]`. Lines starting with `#` are
//! comments.

use nalgebra::{Matrix3, Vector3};
use serde::de::Error as DeError;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use std::fmt::Write as _;
use std::path::Path;
use thiserror::Error;

/// Maximum tolerated orthonormality drift before a matrix is rejected as a
/// rotation outright (parsers re-orthonormalize below this, see
/// [`Pose::from_parts_relaxed`]).
const ROTATION_REJECT_TOL: f64 = 1e-6;
/// Drift at which composition chains are snapped back onto SO(3).
const ROTATION_SNAP_TOL: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum GeometryError {
    #[error("pose entries must be finite")]
    NonFinite,
    #[error("matrix is not a rotation (orthonormality drift {drift:.3e})")]
    NotARotation { drift: f64 },
    #[error("frame index {index} out of range for trajectory of length {len}")]
    FrameOutOfRange { index: usize, len: usize },
    #[error("trajectory must contain at least one pose")]
    EmptyTrajectory,
    #[error("trajectory too short: need at least {need} poses, got {got}")]
    TooShort { need: usize, got: usize },
    #[error("scale alignment undefined: first-step camera displacement is zero")]
    DegenerateScale,
    #[error("metric undefined on an empty error list")]
    EmptyMetric,
    #[error("threshold must be positive, got {0}")]
    BadThreshold(f64),
    #[error("trajectory line {line}: {reason}")]
    MalformedLine { line: usize, reason: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, GeometryError>;

/// A world-to-camera rigid transform: `x_cam = R x_world + t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pose {
    rotation: Matrix3<f64>,
    translation: Vector3<f64>,
}

fn orthonormality_drift(r: &Matrix3<f64>) -> f64 {
    let gram = r.transpose() * r - Matrix3::identity();
    let mut drift = gram.amax();
    drift = drift.max((r.determinant() - 1.0).abs());
    drift
}

/// Nearest rotation in Frobenius norm, via the polar factor of the SVD.
fn polar_orthonormalize(m: &Matrix3<f64>) -> Matrix3<f64> {
    let svd = m.svd(true, true);
    let u = svd.u.expect("svd of 3x3 requested with u");
    let v_t = svd.v_t.expect("svd of 3x3 requested with v_t");
    let mut r = u * v_t;
    if r.determinant() < 0.0 {
        let mut flip = Matrix3::identity();
        flip[(2, 2)] = -1.0;
        r = u * flip * v_t;
    }
    r
}

impl Pose {
    pub fn identity() -> Self {
        Pose {
            rotation: Matrix3::identity(),
            translation: Vector3::zeros(),
        }
    }

    /// Builds a pose, requiring `rotation` to be orthonormal with
    /// determinant +1 within `1e-9`.
    pub fn from_parts(rotation: Matrix3<f64>, translation: Vector3<f64>) -> Result<Self> {
        if !rotation.iter().all(|v| v.is_finite()) || !translation.iter().all(|v| v.is_finite()) {
            return Err(GeometryError::NonFinite);
        }
        let drift = orthonormality_drift(&rotation);
        if drift > ROTATION_SNAP_TOL {
            return Err(GeometryError::NotARotation { drift });
        }
        Ok(Pose {
            rotation,
            translation,
        })
    }

    /// Like [`Pose::from_parts`] but tolerates drift up to `1e-6` by snapping
    /// to the nearest rotation. Intended for data read from text files where
    /// decimal truncation loses a few digits.
    pub fn from_parts_relaxed(rotation: Matrix3<f64>, translation: Vector3<f64>) -> Result<Self> {
        if !rotation.iter().all(|v| v.is_finite()) || !translation.iter().all(|v| v.is_finite()) {
            return Err(GeometryError::NonFinite);
        }
        let drift = orthonormality_drift(&rotation);
        if drift > ROTATION_REJECT_TOL {
            return Err(GeometryError::NotARotation { drift });
        }
        let rotation = if drift > ROTATION_SNAP_TOL {
            polar_orthonormalize(&rotation)
        } else {
            rotation
        };
        Ok(Pose {
            rotation,
            translation,
        })
    }

    /// Pose looking from `center` with the given orientation: `t = -R·center`.
    pub fn from_rotation_center(rotation: Matrix3<f64>, center: Vector3<f64>) -> Result<Self> {
        let translation = -rotation * center;
        Pose::from_parts(rotation, translation)
    }

    pub fn rotation(&self) -> &Matrix3<f64> {
        &self.rotation
    }

    pub fn translation(&self) -> &Vector3<f64> {
        &self.translation
    }

    /// Camera center in world coordinates, `-Rᵀt`.
    pub fn center(&self) -> Vector3<f64> {
        -(self.rotation.transpose() * self.translation)
    }

    /// Rigid composition `self ∘ other` (apply `other` first). The rotation is
    /// snapped back onto SO(3) when accumulated drift exceeds `1e-9`, so long
    /// chains stay valid.
    pub fn compose(&self, other: &Pose) -> Result<Pose> {
        let mut rotation = self.rotation * other.rotation;
        let translation = self.rotation * other.translation + self.translation;
        if !translation.iter().all(|v| v.is_finite()) {
            return Err(GeometryError::NonFinite);
        }
        if orthonormality_drift(&rotation) > ROTATION_SNAP_TOL {
            rotation = polar_orthonormalize(&rotation);
        }
        Ok(Pose {
            rotation,
            translation,
        })
    }

    /// Inverse transform: `compose(p, invert(p))` is the identity.
    pub fn invert(&self) -> Pose {
        let rotation = self.rotation.transpose();
        let translation = -(rotation * self.translation);
        Pose {
            rotation,
            translation,
        }
    }

    /// Row-major `[R|t]` flattened to 12 values.
    pub fn to_row12(&self) -> [f64; 12] {
        let r = &self.rotation;
        let t = &self.translation;
        [
            r[(0, 0)],
            r[(0, 1)],
            r[(0, 2)],
            t[0],
            r[(1, 0)],
            r[(1, 1)],
            r[(1, 2)],
            t[1],
            r[(2, 0)],
            r[(2, 1)],
            r[(2, 2)],
            t[2],
        ]
    }

    /// Parses the row-major 12-value layout produced by [`Pose::to_row12`].
    pub fn from_row12(v: &[f64; 12]) -> Result<Self> {
        let rotation = Matrix3::new(v[0], v[1], v[2], v[4], v[5], v[6], v[8], v[9], v[10]);
        let translation = Vector3::new(v[3], v[7], v[11]);
        Pose::from_parts_relaxed(rotation, translation)
    }
}

impl Serialize for Pose {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_row12().serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Pose {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let row = <[f64; 12]>::deserialize(deserializer)?;
        Pose::from_row12(&row).map_err(D::Error::custom)
    }
}

/// Geodesic distance on SO(3) between the rotations of two poses, in degrees.
/// Always in `[0, 180]`. Uses the atan2 form, which stays accurate where
/// arccos((trace-1)/2) loses half the significant digits (near 0° and 180°).
pub fn rot_err_deg(a: &Pose, b: &Pose) -> f64 {
    let rel = a.rotation.transpose() * b.rotation;
    let cos = (rel.trace() - 1.0) / 2.0;
    let sin_axis = Vector3::new(
        rel[(2, 1)] - rel[(1, 2)],
        rel[(0, 2)] - rel[(2, 0)],
        rel[(1, 0)] - rel[(0, 1)],
    ) / 2.0;
    sin_axis.norm().atan2(cos).to_degrees()
}

/// Euclidean distance between the camera centers of two poses.
pub fn trans_err(a: &Pose, b: &Pose) -> f64 {
    (a.center() - b.center()).norm()
}

/// Fraction of `errors` strictly below `threshold_deg`.
pub fn rta_at(errors: &[f64], threshold_deg: f64) -> Result<f64> {
    if errors.is_empty() {
        return Err(GeometryError::EmptyMetric);
    }
    if threshold_deg <= 0.0 {
        return Err(GeometryError::BadThreshold(threshold_deg));
    }
    let below = errors.iter().filter(|&&e| e < threshold_deg).count();
    Ok(below as f64 / errors.len() as f64)
}

/// A nonempty, ordered sequence of camera poses.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    poses: Vec<Pose>,
}

impl Trajectory {
    pub fn new(poses: Vec<Pose>) -> Result<Self> {
        if poses.is_empty() {
            return Err(GeometryError::EmptyTrajectory);
        }
        Ok(Trajectory { poses })
    }

    pub fn len(&self) -> usize {
        self.poses.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn poses(&self) -> &[Pose] {
        &self.poses
    }

    pub fn get(&self, index: usize) -> Option<&Pose> {
        self.poses.get(index)
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Pose> {
        self.poses.iter()
    }

    /// Camera centers of all poses.
    pub fn centers(&self) -> Vec<Vector3<f64>> {
        self.poses.iter().map(Pose::center).collect()
    }

    /// Sub-trajectory over `range` (inclusive start, exclusive end).
    pub fn slice(&self, start: usize, len: usize) -> Result<Trajectory> {
        if start + len > self.poses.len() || len == 0 {
            return Err(GeometryError::FrameOutOfRange {
                index: start + len,
                len: self.poses.len(),
            });
        }
        Trajectory::new(self.poses[start..start + len].to_vec())
    }

    /// Re-expresses every pose relative to `reference`: `out_i = p_i ∘ reference⁻¹`.
    /// Relative poses between frames are preserved.
    pub fn rebase_to_pose(&self, reference: &Pose) -> Result<Trajectory> {
        let inv = reference.invert();
        let poses = self
            .poses
            .iter()
            .map(|p| p.compose(&inv))
            .collect::<Result<Vec<_>>>()?;
        Trajectory::new(poses)
    }

    /// Rebases so the pose at `index` (0-based) becomes exactly the identity.
    pub fn rebase_to_frame(&self, index: usize) -> Result<Trajectory> {
        let reference = *self
            .poses
            .get(index)
            .ok_or(GeometryError::FrameOutOfRange {
                index,
                len: self.poses.len(),
            })?;
        let mut out = self.rebase_to_pose(&reference)?;
        // The reference frame is identity by construction; pin it so the
        // invariant holds bit-exactly.
        out.poses[index] = Pose::identity();
        Ok(out)
    }

    /// Rescales camera centers so the displacement between the first two
    /// centers has the same magnitude as `reference`'s. Rotations unchanged.
    pub fn scale_align(&self, reference: &Trajectory) -> Result<Trajectory> {
        if self.len() < 2 {
            return Err(GeometryError::TooShort {
                need: 2,
                got: self.len(),
            });
        }
        if reference.len() < 2 {
            return Err(GeometryError::TooShort {
                need: 2,
                got: reference.len(),
            });
        }
        let own = (self.poses[1].center() - self.poses[0].center()).norm();
        let reference = (reference.poses[1].center() - reference.poses[0].center()).norm();
        if own < f64::EPSILON || reference < f64::EPSILON {
            return Err(GeometryError::DegenerateScale);
        }
        let factor = reference / own;
        let poses = self
            .poses
            .iter()
            .map(|p| Pose::from_rotation_center(*p.rotation(), p.center() * factor))
            .collect::<Result<Vec<_>>>()?;
        Trajectory::new(poses)
    }

    /// Serializes to the 12-floats-per-line text format.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for pose in &self.poses {
            let row = pose.to_row12();
            let mut first = true;
            for v in row {
                if !first {
                    out.push(' ');
                }
                let _ = write!(out, "{v}");
                first = false;
            }
            out.push('\n');
        }
        out
    }

    /// Parses the text format; `#`-prefixed and blank lines are skipped.
    pub fn from_text(text: &str) -> Result<Trajectory> {
        let mut poses = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let values = line
                .split_whitespace()
                .map(|tok| {
                    tok.parse::<f64>()
                        .map_err(|e| GeometryError::MalformedLine {
                            line: i + 1,
                            reason: format!("bad float {tok:?}: {e}"),
                        })
                })
                .collect::<Result<Vec<f64>>>()?;
            if values.len() != 12 {
                return Err(GeometryError::MalformedLine {
                    line: i + 1,
                    reason: format!("expected 12 floats, got {}", values.len()),
                });
            }
            let mut row = [0.0; 12];
            row.copy_from_slice(&values);
            poses.push(
                Pose::from_row12(&row).map_err(|e| GeometryError::MalformedLine {
                    line: i + 1,
                    reason: e.to_string(),
                })?,
            );
        }
        Trajectory::new(poses)
    }

    pub fn write_file<P: AsRef<Path>>(&self, path: P) -> Result<()> {
        std::fs::write(path, self.to_text())?;
        Ok(())
    }

    pub fn read_file<P: AsRef<Path>>(path: P) -> Result<Trajectory> {
        let text = std::fs::read_to_string(path)?;
        Trajectory::from_text(&text)
    }
}

impl std::ops::Index<usize> for Trajectory {
    type Output = Pose;
    fn index(&self, index: usize) -> &Pose {
        &self.poses[index]
    }
}

impl Serialize for Trajectory {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        self.poses.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Trajectory {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let poses = Vec::<Pose>::deserialize(deserializer)?;
        Trajectory::new(poses).map_err(D::Error::custom)
    }
}

/// Rotation by `angle_deg` about the given axis (unit length not required).
pub fn rotation_about(axis: Vector3<f64>, angle_deg: f64) -> Matrix3<f64> {
    let axis = nalgebra::Unit::new_normalize(axis);
    nalgebra::Rotation3::from_axis_angle(&axis, angle_deg.to_radians()).into_inner()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn rz(deg: f64) -> Pose {
        Pose::from_parts(rotation_about(Vector3::z(), deg), Vector3::zeros()).unwrap()
    }

    pub(crate) fn random_pose(rng: &mut ChaCha8Rng) -> Pose {
        let axis = Vector3::new(
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0f64),
        );
        let axis = if axis.norm() < 1e-6 { Vector3::x() } else { axis };
        let angle = rng.gen_range(-179.0..179.0);
        let t = Vector3::new(
            rng.gen_range(-5.0..5.0),
            rng.gen_range(-5.0..5.0),
            rng.gen_range(-5.0..5.0),
        );
        Pose::from_parts(rotation_about(axis, angle), t).unwrap()
    }

    fn random_trajectory(rng: &mut ChaCha8Rng, len: usize) -> Trajectory {
        Trajectory::new((0..len).map(|_| random_pose(rng)).collect()).unwrap()
    }

    #[test]
    fn compose_identity_and_inverse() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let p = random_pose(&mut rng);
        let id = Pose::identity();
        let same = p.compose(&id).unwrap();
        assert_abs_diff_eq!(same.rotation(), p.rotation(), epsilon = 1e-12);
        assert_abs_diff_eq!(same.translation(), p.translation(), epsilon = 1e-12);

        let round = p.compose(&p.invert()).unwrap();
        assert_abs_diff_eq!(round.rotation(), &Matrix3::identity(), epsilon = 1e-9);
        assert!(round.translation().norm() < 1e-9);
    }

    #[test]
    fn compose_matches_axis_angle_oracle() {
        let sum = rz(10.0).compose(&rz(20.0)).unwrap();
        let expected = rz(30.0);
        assert_abs_diff_eq!(sum.rotation(), expected.rotation(), epsilon = 1e-12);
    }

    #[test]
    fn invert_is_involution_and_negates_translation() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let p = random_pose(&mut rng);
        let back = p.invert().invert();
        assert_abs_diff_eq!(back.rotation(), p.rotation(), epsilon = 1e-12);
        assert_abs_diff_eq!(back.translation(), p.translation(), epsilon = 1e-12);

        let t = Pose::from_parts(Matrix3::identity(), Vector3::new(1.0, -2.0, 3.0)).unwrap();
        let inv = t.invert();
        assert_abs_diff_eq!(inv.translation(), &Vector3::new(-1.0, 2.0, -3.0), epsilon = 1e-15);
    }

    #[test]
    fn rebase_pins_reference_and_preserves_relatives() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let traj = random_trajectory(&mut rng, 6);
        let rebased = traj.rebase_to_frame(2).unwrap();
        assert_eq!(rebased[2], Pose::identity());
        for i in 0..traj.len() {
            for j in 0..traj.len() {
                let orig = traj[i].compose(&traj[j].invert()).unwrap();
                let new = rebased[i].compose(&rebased[j].invert()).unwrap();
                assert!(rot_err_deg(&orig, &new) < 1e-9);
                assert!((orig.translation() - new.translation()).norm() < 1e-9);
            }
        }
    }

    #[test]
    fn rebase_twice_equals_rebase_once() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let traj = random_trajectory(&mut rng, 5);
        let twice = traj.rebase_to_frame(1).unwrap().rebase_to_frame(3).unwrap();
        let once = traj.rebase_to_frame(3).unwrap();
        for (a, b) in twice.iter().zip(once.iter()) {
            assert!(rot_err_deg(a, b) < 1e-9);
            assert!(trans_err(a, b) < 1e-9);
        }
    }

    #[test]
    fn rebase_rejects_out_of_range() {
        let traj = Trajectory::new(vec![Pose::identity()]).unwrap();
        assert!(matches!(
            traj.rebase_to_frame(1),
            Err(GeometryError::FrameOutOfRange { .. })
        ));
    }

    #[test]
    fn rot_err_matches_trace_oracle() {
        let p = rz(10.0);
        assert_abs_diff_eq!(rot_err_deg(&p, &p), 0.0, epsilon = 1e-12);
        // arccos((trace-1)/2) for Rz(10°)
        let expected =
            (((10.0f64.to_radians().cos() * 2.0 + 1.0) - 1.0) / 2.0).acos().to_degrees();
        assert_abs_diff_eq!(rot_err_deg(&Pose::identity(), &p), expected, epsilon = 1e-9);
        assert_abs_diff_eq!(rot_err_deg(&Pose::identity(), &p), 10.0, epsilon = 1e-6);
    }

    #[test]
    fn rot_err_wraps_to_shortest_geodesic() {
        let p = rz(190.0);
        assert_abs_diff_eq!(rot_err_deg(&Pose::identity(), &p), 170.0, epsilon = 1e-6);
    }

    #[test]
    fn trans_err_camera_center_oracle() {
        let a = Pose::identity();
        let b = Pose::from_parts(Matrix3::identity(), Vector3::new(3.0, 4.0, 0.0)).unwrap();
        assert_abs_diff_eq!(trans_err(&a, &b), 5.0, epsilon = 1e-12);
        assert_abs_diff_eq!(trans_err(&a, &a), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn metrics_invariant_under_common_rigid_transform() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..20 {
            let a = random_pose(&mut rng);
            let b = random_pose(&mut rng);
            let m = random_pose(&mut rng);
            let am = a.compose(&m).unwrap();
            let bm = b.compose(&m).unwrap();
            assert_abs_diff_eq!(rot_err_deg(&a, &b), rot_err_deg(&am, &bm), epsilon = 1e-9);
            assert_abs_diff_eq!(trans_err(&a, &b), trans_err(&am, &bm), epsilon = 1e-9);
        }
    }

    #[test]
    fn scale_align_scales_centers() {
        let make = |step: f64| {
            Trajectory::new(
                (0..4)
                    .map(|i| {
                        Pose::from_rotation_center(
                            rotation_about(Vector3::y(), 7.0 * i as f64),
                            Vector3::new(step * i as f64, 0.0, 1.0),
                        )
                        .unwrap()
                    })
                    .collect(),
            )
            .unwrap()
        };
        let traj = make(2.0);
        let reference = make(1.0);
        let aligned = traj.scale_align(&reference).unwrap();
        for (orig, new) in traj.iter().zip(aligned.iter()) {
            assert_abs_diff_eq!(new.center(), orig.center() * 0.5, epsilon = 1e-12);
            assert_abs_diff_eq!(new.rotation(), orig.rotation(), epsilon = 1e-12);
        }
        // fixed point
        let fixed = traj.scale_align(&traj).unwrap();
        for (orig, new) in traj.iter().zip(fixed.iter()) {
            assert!(trans_err(orig, new) < 1e-12);
        }
    }

    #[test]
    fn scale_align_rejects_zero_first_step() {
        let static_traj =
            Trajectory::new(vec![Pose::identity(), Pose::identity()]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let moving = random_trajectory(&mut rng, 2);
        assert!(matches!(
            static_traj.scale_align(&moving),
            Err(GeometryError::DegenerateScale)
        ));
    }

    #[test]
    fn rta_counting() {
        assert_abs_diff_eq!(rta_at(&[10.0, 20.0, 40.0], 15.0).unwrap(), 1.0 / 3.0);
        assert_abs_diff_eq!(rta_at(&[0.0, 0.0], 15.0).unwrap(), 1.0);
        // strict comparison at the boundary
        assert_abs_diff_eq!(rta_at(&[15.0], 15.0).unwrap(), 0.0);
        assert!(matches!(rta_at(&[], 15.0), Err(GeometryError::EmptyMetric)));
        assert!(matches!(
            rta_at(&[1.0], 0.0),
            Err(GeometryError::BadThreshold(_))
        ));
    }

    #[test]
    fn text_round_trip_with_comments() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let traj = random_trajectory(&mut rng, 5);
        let mut text = String::from("# camera trajectory\n\n");
        text.push_str(&traj.to_text());
        let back = Trajectory::from_text(&text).unwrap();
        assert_eq!(back.len(), traj.len());
        for (a, b) in traj.iter().zip(back.iter()) {
            assert!(rot_err_deg(a, b) < 1e-12);
            assert!(trans_err(a, b) < 1e-12);
        }
    }

    #[test]
    fn from_parts_rejects_junk() {
        assert!(matches!(
            Pose::from_parts(Matrix3::identity() * 2.0, Vector3::zeros()),
            Err(GeometryError::NotARotation { .. })
        ));
        assert!(matches!(
            Pose::from_parts(Matrix3::identity(), Vector3::new(f64::NAN, 0.0, 0.0)),
            Err(GeometryError::NonFinite)
        ));
    }

    proptest! {
        #[test]
        fn rot_err_is_a_metric(seed in 0u64..500) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let a = random_pose(&mut rng);
            let b = random_pose(&mut rng);
            let c = random_pose(&mut rng);
            let ab = rot_err_deg(&a, &b);
            let ba = rot_err_deg(&b, &a);
            prop_assert!((ab - ba).abs() < 1e-9);
            prop_assert!(rot_err_deg(&a, &a) < 1e-9);
            prop_assert!(ab >= 0.0 && ab <= 180.0);
            let ac = rot_err_deg(&a, &c);
            let cb = rot_err_deg(&c, &b);
            prop_assert!(ab <= ac + cb + 1e-6);
        }

        #[test]
        fn rebase_is_idempotent(seed in 0u64..200, len in 2usize..8) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let traj = random_trajectory(&mut rng, len);
            let k = (seed as usize) % len;
            let once = traj.rebase_to_frame(k).unwrap();
            let twice = once.rebase_to_frame(k).unwrap();
            prop_assert_eq!(once[k], Pose::identity());
            for (a, b) in once.iter().zip(twice.iter()) {
                prop_assert!(rot_err_deg(a, b) < 1e-9);
                prop_assert!(trans_err(a, b) < 1e-9);
            }
        }
    }
}
