//! Deterministic miniature renderer for parametric dynamic scenes, camera
//! path generation, trajectory validity checks, and full camera-by-time
//! grid rendering.
//!
//! Scenes are a handful of animated primitives (spheres and axis-aligned
//! boxes on piecewise-linear keyframe paths) over an optional ground plane,
//! shaded by a single directional light with primary rays only. The world is
//! y-up; cameras follow the x-right / y-down / z-forward extrinsics
//! convention from [`crate::geometry`]. Rendering is pure f64 per pixel,
//! so identical inputs produce bit-identical images on any thread count.

use crate::geometry::{GeometryError, Pose, Trajectory};
use crate::raster::Image;
use nalgebra::{Matrix3, Vector3};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::path::Path;
use thiserror::Error;

/// Camera centers closer than this to a primitive's swept volume are
/// treated as collisions.
pub const DEFAULT_COLLISION_MARGIN: f64 = 0.05;

const AMBIENT: f64 = 0.25;
const RAY_EPS: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum SceneError {
    #[error("scene spec invalid: {0}")]
    BadScene(String),
    #[error("camera path invalid: {0}")]
    BadPath(String),
    #[error("degenerate camera path geometry: {0}")]
    Degenerate(String),
    #[error("animation time {t} outside [1, {f_anim}]")]
    BadTime { t: f64, f_anim: usize },
    #[error("grid cell ({cam}, {time}) out of range {cams}x{times}")]
    CellOutOfRange { cam: usize, time: usize, cams: usize, times: usize },
    #[error("grid directory invalid: {0}")]
    BadGridDir(String),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("raster: {0}")]
    Raster(#[from] crate::raster::RasterError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, SceneError>;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Shape {
    Sphere { radius: f64 },
    /// Axis-aligned box; `extent` holds half-sizes along x, y, z.
    Box { extent: [f64; 3] },
}

impl Shape {
    /// Radius of the bounding sphere, used by the conservative swept-volume
    /// collision test.
    fn bounding_radius(&self) -> f64 {
        match self {
            Shape::Sphere { radius } => *radius,
            Shape::Box { extent } => {
                (extent[0] * extent[0] + extent[1] * extent[1] + extent[2] * extent[2]).sqrt()
            }
        }
    }
}

/// One animated primitive: a shape whose center follows a piecewise-linear
/// keyframe path over animation time `[1, F_anim]`. Keyframes are spaced
/// uniformly over that interval; a single keyframe means a static primitive.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Primitive {
    pub shape: Shape,
    pub keyframes: Vec<[f64; 3]>,
    pub albedo: [f64; 3],
}

impl Primitive {
    /// Center at animation time `t` via linear keyframe interpolation.
    pub fn center_at(&self, t: f64, f_anim: usize) -> Vector3<f64> {
        let k = self.keyframes.len();
        if k == 1 {
            return Vector3::from(self.keyframes[0]);
        }
        let u = ((t - 1.0) / (f_anim as f64 - 1.0)).clamp(0.0, 1.0) * (k - 1) as f64;
        let seg = (u.floor() as usize).min(k - 2);
        let frac = u - seg as f64;
        let a = Vector3::from(self.keyframes[seg]);
        let b = Vector3::from(self.keyframes[seg + 1]);
        a + (b - a) * frac
    }
}

/// A parametric dynamic scene.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneSpec {
    pub primitives: Vec<Primitive>,
    /// Index of the main primitive used by visibility checks.
    pub subject: usize,
    pub ground_plane: bool,
    /// Direction the light travels (need not be normalized).
    pub light_dir: [f64; 3],
    /// Animation frame count; keyframe paths span `[1, f_anim]`.
    pub f_anim: usize,
    pub background: [f64; 3],
}

impl SceneSpec {
    pub fn validate(&self) -> Result<()> {
        if self.f_anim < 2 {
            return Err(SceneError::BadScene(format!(
                "f_anim must be >= 2, got {}",
                self.f_anim
            )));
        }
        if self.primitives.is_empty() && self.subject != 0 {
            return Err(SceneError::BadScene("subject index with no primitives".into()));
        }
        if !self.primitives.is_empty() && self.subject >= self.primitives.len() {
            return Err(SceneError::BadScene(format!(
                "subject index {} out of range for {} primitives",
                self.subject,
                self.primitives.len()
            )));
        }
        for (i, p) in self.primitives.iter().enumerate() {
            if p.keyframes.is_empty() {
                return Err(SceneError::BadScene(format!("primitive {i} has no keyframes")));
            }
            let ok = match p.shape {
                Shape::Sphere { radius } => radius > 0.0,
                Shape::Box { extent } => extent.iter().all(|&e| e > 0.0),
            };
            if !ok {
                return Err(SceneError::BadScene(format!(
                    "primitive {i} has non-positive size"
                )));
            }
        }
        if Vector3::from(self.light_dir).norm() < 1e-12 {
            return Err(SceneError::BadScene("light direction is zero".into()));
        }
        Ok(())
    }

    /// SHA-256 of the canonical JSON encoding; recorded in grid manifests.
    pub fn content_hash(&self) -> String {
        let json = serde_json::to_string(self).expect("scene serializes");
        let mut hasher = Sha256::new();
        hasher.update(json.as_bytes());
        format!("{:x}", hasher.finalize())
    }

    pub fn save_json<P: AsRef<Path>>(&self, path: P) -> Result<()> {
        std::fs::write(path, serde_json::to_string_pretty(self)?)?;
        Ok(())
    }

    pub fn load_json<P: AsRef<Path>>(path: P) -> Result<Self> {
        let spec: SceneSpec = serde_json::from_str(&std::fs::read_to_string(path)?)?;
        spec.validate()?;
        Ok(spec)
    }

    /// A small demo scene: an orbiting subject sphere, a drifting box, a
    /// static backdrop sphere and a ground plane.
    pub fn demo(f_anim: usize) -> SceneSpec {
        SceneSpec {
            primitives: vec![
                Primitive {
                    shape: Shape::Sphere { radius: 0.45 },
                    keyframes: vec![
                        [-1.2, 0.5, 0.0],
                        [0.0, 1.4, 0.6],
                        [1.2, 0.5, 0.0],
                        [0.0, 0.5, -0.8],
                        [-1.2, 0.5, 0.0],
                    ],
                    albedo: [0.85, 0.25, 0.2],
                },
                Primitive {
                    shape: Shape::Box {
                        extent: [0.25, 0.25, 0.25],
                    },
                    keyframes: vec![[1.6, 0.25, 1.2], [-1.6, 0.25, 1.2]],
                    albedo: [0.2, 0.45, 0.85],
                },
                Primitive {
                    shape: Shape::Sphere { radius: 0.4 },
                    keyframes: vec![[0.0, 0.4, -2.8]],
                    albedo: [0.3, 0.75, 0.35],
                },
            ],
            subject: 0,
            ground_plane: true,
            light_dir: [-0.4, -1.0, -0.25],
            f_anim,
            background: [0.62, 0.68, 0.78],
        }
    }
}

/// Pinhole intrinsics; principal point at the image center.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Intrinsics {
    pub focal_px: f64,
    pub width: u32,
    pub height: u32,
}

impl Intrinsics {
    pub fn validate(&self) -> Result<()> {
        if self.width < 8 || self.height < 8 {
            return Err(SceneError::BadPath(format!(
                "image size must be at least 8x8, got {}x{}",
                self.width, self.height
            )));
        }
        if self.focal_px <= 0.0 {
            return Err(SceneError::BadPath("focal length must be positive".into()));
        }
        Ok(())
    }

    pub fn desk(size: u32) -> Intrinsics {
        Intrinsics {
            focal_px: size as f64,
            width: size,
            height: size,
        }
    }
}

/// Camera path families. Orbit angles are sampled end-open (`span/F` steps),
/// so a 360° span covers the circle without a duplicate pose; linear and arc
/// paths include both endpoints.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum PathFamily {
    Orbit {
        center: [f64; 3],
        radius: f64,
        start_deg: f64,
        span_deg: f64,
        /// Vertical offset of the camera ring above `center`.
        height: f64,
    },
    Linear {
        start: [f64; 3],
        end: [f64; 3],
    },
    Arc {
        start: [f64; 3],
        end: [f64; 3],
        control: [f64; 3],
        /// Look-at anchor (normally the subject).
        target: [f64; 3],
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CameraPathSpec {
    #[serde(flatten)]
    pub family: PathFamily,
    pub frames: usize,
    pub intrinsics: Intrinsics,
}

impl CameraPathSpec {
    pub fn validate(&self) -> Result<()> {
        if self.frames < 2 {
            return Err(SceneError::BadPath(format!(
                "camera path needs F >= 2, got {}",
                self.frames
            )));
        }
        self.intrinsics.validate()?;
        match self.family {
            PathFamily::Orbit { radius, .. } => {
                if radius <= 0.0 {
                    return Err(SceneError::BadPath("orbit radius must be positive".into()));
                }
            }
            PathFamily::Linear { start, end } => {
                if (Vector3::from(start) - Vector3::from(end)).norm() < 1e-12 {
                    return Err(SceneError::Degenerate("linear path with start == end".into()));
                }
            }
            PathFamily::Arc { start, end, control, .. } => {
                let s = Vector3::from(start);
                let e = Vector3::from(end);
                let c = Vector3::from(control);
                if (s - e).norm() < 1e-12 && (s - c).norm() < 1e-12 {
                    return Err(SceneError::Degenerate("arc collapsed to a point".into()));
                }
            }
        }
        Ok(())
    }

    pub fn save_json<P: AsRef<Path>>(&self, path: P) -> Result<()> {
        std::fs::write(path, serde_json::to_string_pretty(self)?)?;
        Ok(())
    }

    pub fn load_json<P: AsRef<Path>>(path: P) -> Result<Self> {
        let spec: CameraPathSpec = serde_json::from_str(&std::fs::read_to_string(path)?)?;
        spec.validate()?;
        Ok(spec)
    }
}

/// World-to-camera rotation for a camera at `eye` looking at `target`, image
/// y pointing against world up (world is y-up).
fn look_at_rotation(eye: Vector3<f64>, target: Vector3<f64>) -> Result<Matrix3<f64>> {
    let forward = target - eye;
    if forward.norm() < 1e-12 {
        return Err(SceneError::Degenerate("camera coincides with look target".into()));
    }
    let z = forward.normalize();
    let mut up = Vector3::y();
    if z.cross(&up).norm() < 1e-9 {
        up = Vector3::z();
    }
    let x = z.cross(&up).normalize();
    let y = z.cross(&x);
    Ok(Matrix3::from_rows(&[x.transpose(), y.transpose(), z.transpose()]))
}

/// Samples `F` poses along the path. Orbit and arc cameras look at their
/// anchor point; linear cameras look along the travel direction.
pub fn make_trajectory(spec: &CameraPathSpec) -> Result<Trajectory> {
    spec.validate()?;
    let f = spec.frames;
    let mut poses = Vec::with_capacity(f);
    match spec.family {
        PathFamily::Orbit {
            center,
            radius,
            start_deg,
            span_deg,
            height,
        } => {
            let center = Vector3::from(center);
            for k in 0..f {
                let theta = (start_deg + span_deg * k as f64 / f as f64).to_radians();
                let eye = center
                    + Vector3::new(radius * theta.cos(), height, radius * theta.sin());
                let rot = look_at_rotation(eye, center)?;
                poses.push(Pose::from_rotation_center(rot, eye)?);
            }
        }
        PathFamily::Linear { start, end } => {
            let start = Vector3::from(start);
            let end = Vector3::from(end);
            let rot = look_at_rotation(start, end)?;
            for k in 0..f {
                let u = k as f64 / (f - 1) as f64;
                let eye = start + (end - start) * u;
                poses.push(Pose::from_rotation_center(rot, eye)?);
            }
        }
        PathFamily::Arc {
            start,
            end,
            control,
            target,
        } => {
            let s = Vector3::from(start);
            let e = Vector3::from(end);
            let c = Vector3::from(control);
            let target = Vector3::from(target);
            for k in 0..f {
                let u = k as f64 / (f - 1) as f64;
                let eye = s * (1.0 - u) * (1.0 - u) + c * 2.0 * u * (1.0 - u) + e * u * u;
                let rot = look_at_rotation(eye, target)?;
                poses.push(Pose::from_rotation_center(rot, eye)?);
            }
        }
    }
    Ok(Trajectory::new(poses)?)
}

// ---------------------------------------------------------------------------
// Trajectory validity
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ViolationKind {
    Collision,
    Visibility,
}

/// Outcome of [`validate_trajectory`]. Violations are data, not errors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidityReport {
    pub collision_free_start: bool,
    pub non_intersecting: bool,
    pub subject_visible: bool,
    /// Earliest violating frame across both checks, if any.
    pub first_violating_frame: Option<usize>,
    pub first_collision_frame: Option<usize>,
    pub first_visibility_frame: Option<usize>,
}

impl ValidityReport {
    pub fn is_valid(&self) -> bool {
        self.collision_free_start && self.non_intersecting && self.subject_visible
    }
}

fn point_segment_distance(p: Vector3<f64>, a: Vector3<f64>, b: Vector3<f64>) -> f64 {
    let ab = b - a;
    let denom = ab.norm_squared();
    if denom < 1e-18 {
        return (p - a).norm();
    }
    let u = ((p - a).dot(&ab) / denom).clamp(0.0, 1.0);
    (p - (a + ab * u)).norm()
}

fn segment_segment_distance(
    p1: Vector3<f64>,
    q1: Vector3<f64>,
    p2: Vector3<f64>,
    q2: Vector3<f64>,
) -> f64 {
    // Closest point pair between two segments (Ericson, Real-Time Collision
    // Detection, §5.1.9).
    let d1 = q1 - p1;
    let d2 = q2 - p2;
    let r = p1 - p2;
    let a = d1.norm_squared();
    let e = d2.norm_squared();
    let f = d2.dot(&r);
    let (s, t);
    if a < 1e-18 && e < 1e-18 {
        return (p1 - p2).norm();
    }
    if a < 1e-18 {
        s = 0.0;
        t = (f / e).clamp(0.0, 1.0);
    } else {
        let c = d1.dot(&r);
        if e < 1e-18 {
            t = 0.0;
            s = (-c / a).clamp(0.0, 1.0);
        } else {
            let b = d1.dot(&d2);
            let denom = a * e - b * b;
            let mut s_tmp = if denom > 1e-18 {
                ((b * f - c * e) / denom).clamp(0.0, 1.0)
            } else {
                0.0
            };
            let mut t_tmp = (b * s_tmp + f) / e;
            if t_tmp < 0.0 {
                t_tmp = 0.0;
                s_tmp = (-c / a).clamp(0.0, 1.0);
            } else if t_tmp > 1.0 {
                t_tmp = 1.0;
                s_tmp = ((b - c) / a).clamp(0.0, 1.0);
            }
            s = s_tmp;
            t = t_tmp;
        }
    }
    ((p1 + d1 * s) - (p2 + d2 * t)).norm()
}

/// Swept volume of one primitive: the union of capsules traced by its
/// bounding sphere along the keyframe path.
struct SweptVolume {
    segments: Vec<(Vector3<f64>, Vector3<f64>)>,
    radius: f64,
}

impl SweptVolume {
    fn of(primitive: &Primitive) -> SweptVolume {
        let pts: Vec<Vector3<f64>> = primitive.keyframes.iter().map(|&k| Vector3::from(k)).collect();
        let segments = if pts.len() == 1 {
            vec![(pts[0], pts[0])]
        } else {
            pts.windows(2).map(|w| (w[0], w[1])).collect()
        };
        SweptVolume {
            segments,
            radius: primitive.shape.bounding_radius(),
        }
    }

    fn distance_to_point(&self, p: Vector3<f64>) -> f64 {
        self.segments
            .iter()
            .map(|&(a, b)| point_segment_distance(p, a, b))
            .fold(f64::INFINITY, f64::min)
            - self.radius
    }

    fn distance_to_segment(&self, a: Vector3<f64>, b: Vector3<f64>) -> f64 {
        self.segments
            .iter()
            .map(|&(p, q)| segment_segment_distance(a, b, p, q))
            .fold(f64::INFINITY, f64::min)
            - self.radius
    }
}

/// Checks the three validity conditions for a camera trajectory over a
/// scene: collision-free start, non-intersecting path (against every
/// primitive's swept volume, with `margin` clearance), and subject
/// visibility at each frame's diagonal animation time. Visibility uses a
/// single ray from the camera center to the subject center, which must hit
/// the subject before any occluder.
pub fn validate_trajectory_with(
    traj: &Trajectory,
    scene: &SceneSpec,
    margin: f64,
) -> Result<ValidityReport> {
    scene.validate()?;
    let swept: Vec<SweptVolume> = scene.primitives.iter().map(SweptVolume::of).collect();
    let centers = traj.centers();

    let mut first_collision = None;
    for (i, &c) in centers.iter().enumerate() {
        let mut hit = swept.iter().any(|s| s.distance_to_point(c) < margin);
        if !hit && i > 0 {
            hit = swept
                .iter()
                .any(|s| s.distance_to_segment(centers[i - 1], c) < margin);
        }
        if hit {
            first_collision = Some(i);
            break;
        }
    }

    let mut first_visibility = None;
    if !scene.primitives.is_empty() {
        for (i, pose) in traj.iter().enumerate() {
            let t = ((i + 1).min(scene.f_anim)) as f64;
            if !subject_visible(scene, pose, t) {
                first_visibility = Some(i);
                break;
            }
        }
    }

    let collision_free_start = first_collision != Some(0);
    let non_intersecting = first_collision.is_none();
    let subject_visible_all = first_visibility.is_none();
    let first = match (first_collision, first_visibility) {
        (Some(a), Some(b)) => Some(a.min(b)),
        (Some(a), None) => Some(a),
        (None, Some(b)) => Some(b),
        (None, None) => None,
    };
    Ok(ValidityReport {
        collision_free_start,
        non_intersecting,
        subject_visible: subject_visible_all,
        first_violating_frame: first,
        first_collision_frame: first_collision,
        first_visibility_frame: first_visibility,
    })
}

/// [`validate_trajectory_with`] at the default collision margin.
pub fn validate_trajectory(traj: &Trajectory, scene: &SceneSpec) -> Result<ValidityReport> {
    validate_trajectory_with(traj, scene, DEFAULT_COLLISION_MARGIN)
}

fn subject_visible(scene: &SceneSpec, pose: &Pose, t: f64) -> bool {
    let eye = pose.center();
    let subject_center = scene.primitives[scene.subject].center_at(t, scene.f_anim);
    let to_subject = subject_center - eye;
    if to_subject.norm() < 1e-12 {
        return false; // camera inside the subject center
    }
    // must be in front of the camera
    let forward = pose.rotation().row(2).transpose();
    if to_subject.dot(&forward) <= 0.0 {
        return false;
    }
    let dir = to_subject.normalize();
    match hit_scene(scene, eye, dir, t) {
        Some(hit) => hit.primitive == Some(scene.subject),
        None => false,
    }
}

// ---------------------------------------------------------------------------
// Ray renderer
// ---------------------------------------------------------------------------

struct Hit {
    dist: f64,
    normal: Vector3<f64>,
    albedo: [f64; 3],
    /// Primitive index, or `None` for the ground plane.
    primitive: Option<usize>,
}

fn ray_sphere(origin: Vector3<f64>, dir: Vector3<f64>, center: Vector3<f64>, radius: f64) -> Option<f64> {
    let oc = origin - center;
    let b = oc.dot(&dir);
    let c = oc.norm_squared() - radius * radius;
    let disc = b * b - c;
    if disc < 0.0 {
        return None;
    }
    let sq = disc.sqrt();
    let t0 = -b - sq;
    if t0 > RAY_EPS {
        return Some(t0);
    }
    let t1 = -b + sq;
    if t1 > RAY_EPS {
        return Some(t1);
    }
    None
}

fn ray_aabb(
    origin: Vector3<f64>,
    dir: Vector3<f64>,
    center: Vector3<f64>,
    extent: [f64; 3],
) -> Option<(f64, Vector3<f64>)> {
    let mut t_near = f64::NEG_INFINITY;
    let mut t_far = f64::INFINITY;
    let mut axis_near = 0usize;
    for axis in 0..3 {
        let lo = center[axis] - extent[axis];
        let hi = center[axis] + extent[axis];
        if dir[axis].abs() < 1e-15 {
            if origin[axis] < lo || origin[axis] > hi {
                return None;
            }
            continue;
        }
        let inv = 1.0 / dir[axis];
        let mut t0 = (lo - origin[axis]) * inv;
        let mut t1 = (hi - origin[axis]) * inv;
        if t0 > t1 {
            std::mem::swap(&mut t0, &mut t1);
        }
        if t0 > t_near {
            t_near = t0;
            axis_near = axis;
        }
        t_far = t_far.min(t1);
        if t_near > t_far {
            return None;
        }
    }
    let t = if t_near > RAY_EPS {
        t_near
    } else if t_far > RAY_EPS {
        // inside the box; use the exit face
        t_far
    } else {
        return None;
    };
    let hit = origin + dir * t;
    let mut normal = Vector3::zeros();
    if t == t_near {
        normal[axis_near] = (hit[axis_near] - center[axis_near]).signum();
    } else {
        // exit face: recompute dominant axis
        let local = hit - center;
        let mut best = 0;
        let mut ratio = 0.0;
        for axis in 0..3 {
            let r = (local[axis] / extent[axis]).abs();
            if r > ratio {
                ratio = r;
                best = axis;
            }
        }
        normal[best] = local[best].signum();
    }
    Some((t, normal))
}

fn hit_scene(scene: &SceneSpec, origin: Vector3<f64>, dir: Vector3<f64>, t: f64) -> Option<Hit> {
    let mut best: Option<Hit> = None;
    let mut consider = |candidate: Hit| {
        if best.as_ref().map_or(true, |b| candidate.dist < b.dist) {
            best = Some(candidate);
        }
    };
    for (i, prim) in scene.primitives.iter().enumerate() {
        let center = prim.center_at(t, scene.f_anim);
        match prim.shape {
            Shape::Sphere { radius } => {
                if let Some(dist) = ray_sphere(origin, dir, center, radius) {
                    let point = origin + dir * dist;
                    consider(Hit {
                        dist,
                        normal: (point - center).normalize(),
                        albedo: prim.albedo,
                        primitive: Some(i),
                    });
                }
            }
            Shape::Box { extent } => {
                if let Some((dist, normal)) = ray_aabb(origin, dir, center, extent) {
                    consider(Hit {
                        dist,
                        normal,
                        albedo: prim.albedo,
                        primitive: Some(i),
                    });
                }
            }
        }
    }
    if scene.ground_plane && dir.y.abs() > 1e-15 {
        let dist = -origin.y / dir.y;
        if dist > RAY_EPS {
            let point = origin + dir * dist;
            // one-unit checkerboard in two grays
            let checker = ((point.x.floor() as i64 + point.z.floor() as i64).rem_euclid(2)) == 0;
            let shade = if checker { 0.55 } else { 0.4 };
            consider(Hit {
                dist,
                normal: Vector3::y(),
                albedo: [shade, shade, shade],
                primitive: None,
            });
        }
    }
    best
}

/// Renders one frame with primary rays and Lambertian shading.
/// Bit-deterministic given identical inputs.
pub fn render_frame(
    scene: &SceneSpec,
    pose: &Pose,
    t: f64,
    intrinsics: &Intrinsics,
) -> Result<Image> {
    scene.validate()?;
    intrinsics.validate()?;
    if !(1.0..=scene.f_anim as f64).contains(&t) {
        return Err(SceneError::BadTime {
            t,
            f_anim: scene.f_anim,
        });
    }
    let width = intrinsics.width;
    let height = intrinsics.height;
    let cx = width as f64 / 2.0;
    let cy = height as f64 / 2.0;
    let eye = pose.center();
    let rot_t = pose.rotation().transpose();
    let light = -Vector3::from(scene.light_dir).normalize();

    let mut img = Image::new(width, height)?;
    for y in 0..height {
        for x in 0..width {
            let dx = (x as f64 + 0.5 - cx) / intrinsics.focal_px;
            let dy = (y as f64 + 0.5 - cy) / intrinsics.focal_px;
            let dir_cam = Vector3::new(dx, dy, 1.0).normalize();
            let dir = rot_t * dir_cam;
            let rgb = match hit_scene(scene, eye, dir, t) {
                Some(hit) => {
                    let lambert = hit.normal.dot(&light).max(0.0);
                    let shade = AMBIENT + (1.0 - AMBIENT) * lambert;
                    [
                        hit.albedo[0] * shade,
                        hit.albedo[1] * shade,
                        hit.albedo[2] * shade,
                    ]
                }
                None => scene.background,
            };
            img.set_pixel(
                x,
                y,
                [
                    (rgb[0].clamp(0.0, 1.0) * 255.0).round() as u8,
                    (rgb[1].clamp(0.0, 1.0) * 255.0).round() as u8,
                    (rgb[2].clamp(0.0, 1.0) * 255.0).round() as u8,
                ],
            );
        }
    }
    Ok(img)
}

// ---------------------------------------------------------------------------
// Cam x Time grid
// ---------------------------------------------------------------------------

/// The full camera-by-time frame grid: `images[i * times + j]` is the render
/// from pose `i` at animation time `times[j]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    pub scene: SceneSpec,
    pub trajectory: Trajectory,
    pub times: Vec<f64>,
    pub intrinsics: Intrinsics,
    images: Vec<Image>,
}

#[derive(Debug, Serialize, Deserialize)]
struct GridMeta {
    cams: usize,
    times: Vec<f64>,
    width: u32,
    height: u32,
    focal_px: f64,
    scene_sha256: String,
    trajectory_file: String,
    scene_file: String,
}

impl Grid {
    pub fn cams(&self) -> usize {
        self.trajectory.len()
    }

    pub fn n_times(&self) -> usize {
        self.times.len()
    }

    pub fn get(&self, cam: usize, time_idx: usize) -> Result<&Image> {
        if cam >= self.cams() || time_idx >= self.n_times() {
            return Err(SceneError::CellOutOfRange {
                cam,
                time: time_idx,
                cams: self.cams(),
                times: self.n_times(),
            });
        }
        Ok(&self.images[cam * self.n_times() + time_idx])
    }

    /// Index of the grid time column nearest to a real-valued timestamp.
    pub fn nearest_time_index(&self, value: f64) -> usize {
        let mut best = 0;
        let mut best_d = f64::INFINITY;
        for (j, &t) in self.times.iter().enumerate() {
            let d = (t - value).abs();
            if d < best_d {
                best_d = d;
                best = j;
            }
        }
        best
    }

    /// Writes the grid as `c{i:03}/t{j:03}.png` (1-based indices) plus
    /// `meta.json`, `scene.json` and `trajectory.txt`.
    pub fn save_dir<P: AsRef<Path>>(&self, dir: P) -> Result<()> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir)?;
        self.scene.save_json(dir.join("scene.json"))?;
        self.trajectory.write_file(dir.join("trajectory.txt"))?;
        let meta = GridMeta {
            cams: self.cams(),
            times: self.times.clone(),
            width: self.intrinsics.width,
            height: self.intrinsics.height,
            focal_px: self.intrinsics.focal_px,
            scene_sha256: self.scene.content_hash(),
            trajectory_file: "trajectory.txt".into(),
            scene_file: "scene.json".into(),
        };
        std::fs::write(dir.join("meta.json"), serde_json::to_string_pretty(&meta)?)?;
        for cam in 0..self.cams() {
            let cam_dir = dir.join(format!("c{:03}", cam + 1));
            std::fs::create_dir_all(&cam_dir)?;
            for j in 0..self.n_times() {
                self.get(cam, j)?
                    .save_png(cam_dir.join(format!("t{:03}.png", j + 1)))?;
            }
        }
        Ok(())
    }

    pub fn load_dir<P: AsRef<Path>>(dir: P) -> Result<Grid> {
        let dir = dir.as_ref();
        let meta: GridMeta = serde_json::from_str(&std::fs::read_to_string(dir.join("meta.json"))?)?;
        let scene = SceneSpec::load_json(dir.join(&meta.scene_file))?;
        if scene.content_hash() != meta.scene_sha256 {
            return Err(SceneError::BadGridDir("scene hash mismatch".into()));
        }
        let trajectory = Trajectory::read_file(dir.join(&meta.trajectory_file))?;
        if trajectory.len() != meta.cams {
            return Err(SceneError::BadGridDir(format!(
                "trajectory has {} poses, meta says {}",
                trajectory.len(),
                meta.cams
            )));
        }
        let mut images = Vec::with_capacity(meta.cams * meta.times.len());
        for cam in 0..meta.cams {
            for j in 0..meta.times.len() {
                let path = dir
                    .join(format!("c{:03}", cam + 1))
                    .join(format!("t{:03}.png", j + 1));
                let img = Image::load_png(&path)?;
                if img.width() != meta.width || img.height() != meta.height {
                    return Err(SceneError::BadGridDir(format!(
                        "cell {cam},{j} has wrong size"
                    )));
                }
                images.push(img);
            }
        }
        Ok(Grid {
            scene,
            trajectory,
            times: meta.times,
            intrinsics: Intrinsics {
                focal_px: meta.focal_px,
                width: meta.width,
                height: meta.height,
            },
            images,
        })
    }
}

/// Renders the full grid: every pose of `traj` at every time in `times`.
/// Cells render in parallel; results are identical for any thread count.
pub fn render_grid(
    scene: &SceneSpec,
    traj: &Trajectory,
    times: &[f64],
    intrinsics: &Intrinsics,
) -> Result<Grid> {
    scene.validate()?;
    intrinsics.validate()?;
    if times.is_empty() {
        return Err(SceneError::BadScene("grid needs at least one time".into()));
    }
    for &t in times {
        if !(1.0..=scene.f_anim as f64).contains(&t) {
            return Err(SceneError::BadTime {
                t,
                f_anim: scene.f_anim,
            });
        }
    }
    let n_times = times.len();
    let cells: Vec<(usize, usize)> = (0..traj.len())
        .flat_map(|i| (0..n_times).map(move |j| (i, j)))
        .collect();
    let images = cells
        .par_iter()
        .map(|&(i, j)| render_frame(scene, &traj[i], times[j], intrinsics))
        .collect::<Result<Vec<Image>>>()?;
    Ok(Grid {
        scene: scene.clone(),
        trajectory: traj.clone(),
        times: times.to_vec(),
        intrinsics: *intrinsics,
        images,
    })
}

/// The integer grid timeline `1..=f` as floats.
pub fn integer_times(f: usize) -> Vec<f64> {
    (1..=f).map(|v| v as f64).collect()
}
