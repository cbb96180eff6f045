//! Pair sampling over the camera-by-time grid and on-disk dataset assembly:
//! diagonal sources, free-form targets, temporally warped multi-view pairs,
//! and two-source memory pairs for autoregressive conditioning.
//!
//! Dataset layout: `samples/{id}/` holds `source/`, `target/` and optional
//! `previous/` PNG frame folders plus `pair.json` (trajectories inline as
//! 12-float rows, time signals, warp spec, seeds). A `manifest.json` at the
//! root records sample order and SHA-256 checksums, verified on read.

use crate::geometry::{Pose, Trajectory};
use crate::raster::Image;
use crate::scenesim::Grid;
use crate::timewarp::{eval_warp, sample_warp, TimeSignal, WarpSpec};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::collections::BTreeMap;
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DataError {
    #[error("sample invalid: {0}")]
    BadSample(String),
    #[error("window [{start}, {end}) outside grid of size {size}")]
    WindowOutOfRange { start: usize, end: usize, size: usize },
    #[error("path index {index} outside grid of size {size}")]
    IndexOutOfRange { index: usize, size: usize },
    #[error("checksum mismatch for {path}")]
    ChecksumMismatch { path: String },
    #[error("dataset file missing: {path}")]
    MissingFile { path: String },
    #[error("manifest error: {0}")]
    BadManifest(String),
    #[error(transparent)]
    Geometry(#[from] crate::geometry::GeometryError),
    #[error(transparent)]
    Warp(#[from] crate::timewarp::WarpError),
    #[error(transparent)]
    Scene(#[from] crate::scenesim::SceneError),
    #[error("raster: {0}")]
    Raster(#[from] crate::raster::RasterError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, DataError>;

/// Frames plus the camera trajectory and animation-time signal describing
/// them. One side of a training pair.
#[derive(Debug, Clone, PartialEq)]
pub struct SideData {
    pub frames: Vec<Image>,
    pub cam: Trajectory,
    pub time: TimeSignal,
}

impl SideData {
    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    fn validate(&self, name: &str) -> Result<()> {
        if self.frames.len() != self.cam.len() || self.frames.len() != self.time.len() {
            return Err(DataError::BadSample(format!(
                "{name}: frames/cam/time lengths differ: {}/{}/{}",
                self.frames.len(),
                self.cam.len(),
                self.time.len()
            )));
        }
        Ok(())
    }

    fn rebased(&self, reference: &Pose) -> Result<SideData> {
        Ok(SideData {
            frames: self.frames.clone(),
            cam: self.cam.rebase_to_pose(reference)?,
            time: self.time.clone(),
        })
    }
}

/// A raw multi-view clip: frames captured along a camera trajectory with the
/// natural forward timeline.
#[derive(Debug, Clone)]
pub struct Video {
    pub frames: Vec<Image>,
    pub cam: Trajectory,
}

/// A source/target training pair (optionally with a `previous` segment for
/// memory conditioning). All sides share one frame count and all camera
/// trajectories are expressed relative to the source pose at `ref_frame`,
/// which is pinned to the identity.
#[derive(Debug, Clone, PartialEq)]
pub struct PairSample {
    pub id: String,
    pub seed: u64,
    /// Index into the source window whose pose is the reference.
    pub ref_frame: usize,
    pub warp: Option<WarpSpec>,
    pub source: SideData,
    pub target: SideData,
    pub previous: Option<SideData>,
}

impl PairSample {
    pub fn validate(&self) -> Result<()> {
        self.source.validate("source")?;
        self.target.validate("target")?;
        let f = self.source.len();
        if self.target.len() != f {
            return Err(DataError::BadSample(format!(
                "target length {} != source length {f}",
                self.target.len()
            )));
        }
        if let Some(prev) = &self.previous {
            prev.validate("previous")?;
            if prev.len() != f {
                return Err(DataError::BadSample(format!(
                    "previous length {} != source length {f}",
                    prev.len()
                )));
            }
        }
        if self.ref_frame >= f {
            return Err(DataError::BadSample(format!(
                "ref_frame {} outside window of length {f}",
                self.ref_frame
            )));
        }
        let anchor = &self.source.cam[self.ref_frame];
        if crate::geometry::rot_err_deg(anchor, &Pose::identity()) > 1e-9
            || anchor.translation().norm() > 1e-9
        {
            return Err(DataError::BadSample(
                "source pose at ref_frame is not the identity".into(),
            ));
        }
        Ok(())
    }
}

fn check_window(grid: &Grid, start: usize, f: usize) -> Result<()> {
    let size = grid.cams().min(grid.n_times());
    if f == 0 || start + f > size {
        return Err(DataError::WindowOutOfRange {
            start,
            end: start + f,
            size,
        });
    }
    Ok(())
}

/// The diagonal source: cells `(start+k, start+k)` with the natural forward
/// timeline and the corresponding trajectory slice (not yet rebased).
pub fn sample_diagonal_source(grid: &Grid, start: usize, f: usize) -> Result<SideData> {
    check_window(grid, start, f)?;
    let mut frames = Vec::with_capacity(f);
    let mut times = Vec::with_capacity(f);
    for k in 0..f {
        frames.push(grid.get(start + k, start + k)?.clone());
        times.push(grid.times[start + k]);
    }
    Ok(SideData {
        frames,
        cam: grid.trajectory.slice(start, f)?,
        time: TimeSignal::new(times)?,
    })
}

/// A free-form grid path: camera and time column indices of equal length.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridPath {
    pub cam: Vec<usize>,
    pub time: Vec<usize>,
}

impl GridPath {
    pub fn len(&self) -> usize {
        self.cam.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cam.is_empty()
    }

    pub fn validate(&self, grid: &Grid) -> Result<()> {
        if self.cam.is_empty() || self.cam.len() != self.time.len() {
            return Err(DataError::BadSample(format!(
                "grid path cam/time lengths differ: {}/{}",
                self.cam.len(),
                self.time.len()
            )));
        }
        for &i in &self.cam {
            if i >= grid.cams() {
                return Err(DataError::IndexOutOfRange {
                    index: i,
                    size: grid.cams(),
                });
            }
        }
        for &j in &self.time {
            if j >= grid.n_times() {
                return Err(DataError::IndexOutOfRange {
                    index: j,
                    size: grid.n_times(),
                });
            }
        }
        Ok(())
    }

    /// The diagonal window `(start+k, start+k)`.
    pub fn diagonal(start: usize, f: usize) -> GridPath {
        GridPath {
            cam: (start..start + f).collect(),
            time: (start..start + f).collect(),
        }
    }
}

/// Samples a target: frame `k` is grid cell `(cam[k], time[k])`, the time
/// signal carries the actual grid times, and the trajectory holds the poses
/// at the camera indices (not yet rebased).
pub fn sample_target(grid: &Grid, path: &GridPath) -> Result<SideData> {
    path.validate(grid)?;
    let mut frames = Vec::with_capacity(path.len());
    let mut times = Vec::with_capacity(path.len());
    let mut poses = Vec::with_capacity(path.len());
    for (&i, &j) in path.cam.iter().zip(&path.time) {
        frames.push(grid.get(i, j)?.clone());
        times.push(grid.times[j]);
        poses.push(grid.trajectory[i]);
    }
    Ok(SideData {
        frames,
        cam: Trajectory::new(poses)?,
        time: TimeSignal::new(times)?,
    })
}

fn assemble(
    id: String,
    seed: u64,
    ref_frame: usize,
    warp: Option<WarpSpec>,
    source_raw: SideData,
    target_raw: SideData,
    previous_raw: Option<SideData>,
) -> Result<PairSample> {
    if ref_frame >= source_raw.len() {
        return Err(DataError::BadSample(format!(
            "ref_frame {ref_frame} outside source window of length {}",
            source_raw.len()
        )));
    }
    let reference = source_raw.cam[ref_frame];
    let mut source = source_raw.rebased(&reference)?;
    // pin the reference pose exactly, matching rebase_to_frame
    let mut poses = source.cam.poses().to_vec();
    poses[ref_frame] = Pose::identity();
    source.cam = Trajectory::new(poses)?;
    let target = target_raw.rebased(&reference)?;
    let previous = match previous_raw {
        Some(p) => Some(p.rebased(&reference)?),
        None => None,
    };
    let sample = PairSample {
        id,
        seed,
        ref_frame,
        warp,
        source,
        target,
        previous,
    };
    sample.validate()?;
    Ok(sample)
}

/// Builds a grid pair: diagonal source window plus a free-form target path,
/// with trajectories rebased to the source pose at `ref_frame`. A real-valued
/// target time signal may be supplied to keep sub-frame timing; otherwise the
/// grid times at the path's indices are used.
#[allow(clippy::too_many_arguments)]
pub fn make_grid_pair(
    grid: &Grid,
    start: usize,
    f: usize,
    target_path: &GridPath,
    target_time: Option<TimeSignal>,
    ref_frame: usize,
    id: String,
    seed: u64,
    warp: Option<WarpSpec>,
) -> Result<PairSample> {
    if target_path.len() != f {
        return Err(DataError::BadSample(format!(
            "target path length {} != window length {f}",
            target_path.len()
        )));
    }
    let source = sample_diagonal_source(grid, start, f)?;
    let mut target = sample_target(grid, target_path)?;
    if let Some(time) = target_time {
        if time.len() != f {
            return Err(DataError::BadSample(format!(
                "target time length {} != window length {f}",
                time.len()
            )));
        }
        target.time = time;
    }
    assemble(id, seed, ref_frame, warp, source, target, None)
}

/// Builds a memory pair: diagonal source, `segment1` as the previous chunk
/// and `segment2` as the target, all relative to the source reference pose.
#[allow(clippy::too_many_arguments)]
pub fn make_memory_pair(
    grid: &Grid,
    start: usize,
    f: usize,
    segment1: &GridPath,
    segment2: &GridPath,
    ref_frame: usize,
    id: String,
    seed: u64,
) -> Result<PairSample> {
    if segment1.len() != f || segment2.len() != f {
        return Err(DataError::BadSample(format!(
            "segment lengths {}/{} != window length {f}",
            segment1.len(),
            segment2.len()
        )));
    }
    let source = sample_diagonal_source(grid, start, f)?;
    let previous = sample_target(grid, segment1)?;
    let target = sample_target(grid, segment2)?;
    assemble(id, seed, ref_frame, None, source, target, Some(previous))
}

/// Builds a temporally warped pair from a multi-view clip: the target frames
/// (and poses) are resampled through the warp while `t_trg` keeps the
/// real-valued signal; the source keeps the forward timeline.
pub fn make_warped_pair(
    src: &Video,
    trg: &Video,
    warp: &WarpSpec,
    ref_frame: usize,
    id: String,
) -> Result<PairSample> {
    let f = src.frames.len();
    if trg.frames.len() != f {
        return Err(DataError::BadSample(format!(
            "source has {f} frames, target has {}",
            trg.frames.len()
        )));
    }
    if src.cam.len() != f || trg.cam.len() != f {
        return Err(DataError::BadSample(
            "video trajectory length differs from frame count".into(),
        ));
    }
    if warp.f != f {
        return Err(DataError::BadSample(format!(
            "warp is over {} frames, clip has {f}",
            warp.f
        )));
    }
    let signal = eval_warp(warp)?;
    let warped_frames = crate::timewarp::apply_warp_frames(&trg.frames, &signal)?;
    let warped_poses = crate::timewarp::apply_warp_frames(trg.cam.poses(), &signal)?;
    let source = SideData {
        frames: src.frames.clone(),
        cam: src.cam.clone(),
        time: TimeSignal::forward(f)?,
    };
    let target = SideData {
        frames: warped_frames,
        cam: Trajectory::new(warped_poses)?,
        time: signal,
    };
    assemble(id, warp.seed, ref_frame, Some(*warp), source, target, None)
}

// ---------------------------------------------------------------------------
// Seeded pair-set sampling
// ---------------------------------------------------------------------------

/// Sampling configuration for [`sample_pair_set`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SamplerConfig {
    pub n: usize,
    pub seed: u64,
    pub families: Vec<String>,
    /// Insert a memory pair every `memory_every`-th sample (0 = never).
    pub memory_every: usize,
    /// Reference frame within the source window.
    pub ref_frame: usize,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        SamplerConfig {
            n: 8,
            seed: 0,
            families: crate::timewarp::FAMILY_NAMES.iter().map(|s| s.to_string()).collect(),
            memory_every: 0,
            ref_frame: 0,
        }
    }
}

fn random_cam_path(rng: &mut ChaCha8Rng, n: usize, f: usize) -> Vec<usize> {
    match rng.gen_range(0..4u8) {
        0 => {
            // fixed viewpoint (the retiming evaluation setup)
            let k = rng.gen_range(0..n);
            vec![k; f]
        }
        1 => (0..f).map(|k| k * (n - 1) / (f - 1).max(1)).collect(),
        2 => (0..f).map(|k| (f - 1 - k) * (n - 1) / (f - 1).max(1)).collect(),
        _ => {
            // bounded random walk
            let mut path = Vec::with_capacity(f);
            let mut pos = rng.gen_range(0..n) as i64;
            for _ in 0..f {
                path.push(pos as usize);
                pos += rng.gen_range(-1..=1);
                pos = pos.clamp(0, n as i64 - 1);
            }
            path
        }
    }
}

/// Draws `n` pairs over the full grid: source is the full diagonal, targets
/// combine a random camera path with a warp-driven time path from the
/// configured families. Deterministic in the seed.
pub fn sample_pair_set(grid: &Grid, config: &SamplerConfig) -> Result<Vec<PairSample>> {
    let f = grid.cams().min(grid.n_times());
    if f < 2 {
        return Err(DataError::BadSample("grid too small to sample pairs".into()));
    }
    let families: Vec<&str> = config.families.iter().map(|s| s.as_str()).collect();
    let mut samples = Vec::with_capacity(config.n);
    for k in 0..config.n {
        let sample_seed = config.seed.wrapping_mul(0x9e3779b97f4a7c15).wrapping_add(k as u64);
        let mut rng = ChaCha8Rng::seed_from_u64(sample_seed);
        let id = format!("{k:04}");
        let memory = config.memory_every > 0 && k % config.memory_every == config.memory_every - 1;
        if memory {
            let half = (f - 1) / 2;
            let seg1 = GridPath {
                cam: (0..f).map(|i| i * half / (f - 1)).collect(),
                time: (0..f).map(|i| i * half / (f - 1)).collect(),
            };
            let seg2 = GridPath {
                cam: (0..f).map(|i| half + i * (f - 1 - half) / (f - 1)).collect(),
                time: (0..f).map(|i| half + i * (f - 1 - half) / (f - 1)).collect(),
            };
            samples.push(make_memory_pair(
                grid,
                0,
                f,
                &seg1,
                &seg2,
                config.ref_frame,
                id,
                sample_seed,
            )?);
            continue;
        }
        let warp = sample_warp(sample_seed, f, &families)?;
        let signal = eval_warp(&warp)?;
        let time_path: Vec<usize> = signal
            .values()
            .iter()
            .map(|&v| grid.nearest_time_index(v))
            .collect();
        let cam_path = random_cam_path(&mut rng, grid.cams(), f);
        let path = GridPath {
            cam: cam_path,
            time: time_path,
        };
        samples.push(make_grid_pair(
            grid,
            0,
            f,
            &path,
            Some(signal),
            config.ref_frame,
            id,
            sample_seed,
            Some(warp),
        )?);
    }
    Ok(samples)
}

// ---------------------------------------------------------------------------
// Dataset on disk
// ---------------------------------------------------------------------------

const DATASET_VERSION: u32 = 1;

#[derive(Debug, Serialize, Deserialize)]
struct SideJson {
    cam: Trajectory,
    time: TimeSignal,
    frames: Vec<String>,
}

#[derive(Debug, Serialize, Deserialize)]
struct PairJson {
    id: String,
    seed: u64,
    ref_frame: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    warp: Option<WarpSpec>,
    source: SideJson,
    target: SideJson,
    #[serde(skip_serializing_if = "Option::is_none")]
    previous: Option<SideJson>,
}

#[derive(Debug, Serialize, Deserialize)]
struct DatasetManifest {
    version: u32,
    samples: Vec<String>,
    /// Path (relative to the dataset root) to SHA-256 hex digest.
    checksums: BTreeMap<String, String>,
}

fn sha256_hex(bytes: &[u8]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(bytes);
    format!("{:x}", hasher.finalize())
}

fn write_side(
    dir: &Path,
    rel_sample: &str,
    side_name: &str,
    side: &SideData,
    checksums: &mut BTreeMap<String, String>,
) -> Result<SideJson> {
    let side_dir = dir.join(side_name);
    std::fs::create_dir_all(&side_dir)?;
    let mut frame_names = Vec::with_capacity(side.frames.len());
    for (i, frame) in side.frames.iter().enumerate() {
        let name = format!("{side_name}/f{i:03}.png");
        frame.save_png(dir.join(&name))?;
        let bytes = std::fs::read(dir.join(&name))?;
        checksums.insert(format!("{rel_sample}/{name}"), sha256_hex(&bytes));
        frame_names.push(name);
    }
    Ok(SideJson {
        cam: side.cam.clone(),
        time: side.time.clone(),
        frames: frame_names,
    })
}

/// Writes samples under `dir` with a checksum manifest. The sample order is
/// preserved and reproduced by [`read_dataset`].
pub fn write_dataset<P: AsRef<Path>>(samples: &[PairSample], dir: P) -> Result<()> {
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir)?;
    let mut checksums = BTreeMap::new();
    let mut ids = Vec::with_capacity(samples.len());
    for sample in samples {
        sample.validate()?;
        if ids.contains(&sample.id) {
            return Err(DataError::BadSample(format!("duplicate sample id {}", sample.id)));
        }
        let rel_sample = format!("samples/{}", sample.id);
        let sample_dir = dir.join(&rel_sample);
        std::fs::create_dir_all(&sample_dir)?;
        let source = write_side(&sample_dir, &rel_sample, "source", &sample.source, &mut checksums)?;
        let target = write_side(&sample_dir, &rel_sample, "target", &sample.target, &mut checksums)?;
        let previous = match &sample.previous {
            Some(prev) => Some(write_side(
                &sample_dir,
                &rel_sample,
                "previous",
                prev,
                &mut checksums,
            )?),
            None => None,
        };
        let pair = PairJson {
            id: sample.id.clone(),
            seed: sample.seed,
            ref_frame: sample.ref_frame,
            warp: sample.warp,
            source,
            target,
            previous,
        };
        let pair_bytes = serde_json::to_vec_pretty(&pair)?;
        std::fs::write(sample_dir.join("pair.json"), &pair_bytes)?;
        checksums.insert(format!("{rel_sample}/pair.json"), sha256_hex(&pair_bytes));
        ids.push(sample.id.clone());
    }
    let manifest = DatasetManifest {
        version: DATASET_VERSION,
        samples: ids,
        checksums,
    };
    std::fs::write(
        dir.join("manifest.json"),
        serde_json::to_vec_pretty(&manifest)?,
    )?;
    Ok(())
}

fn read_side(sample_dir: &Path, json: &SideJson) -> Result<SideData> {
    let mut frames = Vec::with_capacity(json.frames.len());
    for name in &json.frames {
        let path = sample_dir.join(name);
        if !path.exists() {
            return Err(DataError::MissingFile {
                path: path.display().to_string(),
            });
        }
        frames.push(Image::load_png(&path)?);
    }
    Ok(SideData {
        frames,
        cam: json.cam.clone(),
        time: json.time.clone(),
    })
}

/// Reads a dataset back, verifying every file against the manifest
/// checksums. A corrupted or missing file fails with the offending path.
pub fn read_dataset<P: AsRef<Path>>(dir: P) -> Result<Vec<PairSample>> {
    let dir = dir.as_ref();
    let manifest_path = dir.join("manifest.json");
    if !manifest_path.exists() {
        return Err(DataError::MissingFile {
            path: manifest_path.display().to_string(),
        });
    }
    let manifest: DatasetManifest = serde_json::from_str(&std::fs::read_to_string(&manifest_path)?)?;
    if manifest.version != DATASET_VERSION {
        return Err(DataError::BadManifest(format!(
            "unsupported dataset version {}",
            manifest.version
        )));
    }
    for (rel, expected) in &manifest.checksums {
        let path = dir.join(rel);
        if !path.exists() {
            return Err(DataError::MissingFile {
                path: path.display().to_string(),
            });
        }
        let actual = sha256_hex(&std::fs::read(&path)?);
        if &actual != expected {
            return Err(DataError::ChecksumMismatch { path: rel.clone() });
        }
    }
    let mut samples = Vec::with_capacity(manifest.samples.len());
    for id in &manifest.samples {
        let sample_dir = dir.join("samples").join(id);
        let pair: PairJson = serde_json::from_str(&std::fs::read_to_string(sample_dir.join("pair.json"))?)?;
        let sample = PairSample {
            id: pair.id,
            seed: pair.seed,
            ref_frame: pair.ref_frame,
            warp: pair.warp,
            source: read_side(&sample_dir, &pair.source)?,
            target: read_side(&sample_dir, &pair.target)?,
            previous: match &pair.previous {
                Some(p) => Some(read_side(&sample_dir, p)?),
                None => None,
            },
        };
        sample.validate()?;
        samples.push(sample);
    }
    Ok(samples)
}


#[cfg(test)]
mod diag_tests {
    use super::*;
    use super::tests_support::*;

    #[test]
    fn diag_round_trip_fields() {
        let grid = small_grid_pub(6);
        let config = SamplerConfig { n: 5, seed: 7, memory_every: 3, ..Default::default() };
        let samples = sample_pair_set(&grid, &config).unwrap();
        let dir = tempfile::tempdir().unwrap();
        write_dataset(&samples, dir.path()).unwrap();
        let back = read_dataset(dir.path()).unwrap();
        for (a, b) in samples.iter().zip(back.iter()) {
            assert_eq!(a.id, b.id, "id");
            assert_eq!(a.seed, b.seed, "seed");
            assert_eq!(a.ref_frame, b.ref_frame, "ref");
            assert_eq!(a.warp, b.warp, "warp {}", a.id);
            assert_eq!(a.source.frames == b.source.frames, true, "source frames {}", a.id);
            assert_eq!(a.source.time == b.source.time, true, "source time {}", a.id);
            if a.source.cam != b.source.cam {
                for (i,(p,q)) in a.source.cam.iter().zip(b.source.cam.iter()).enumerate() {
                    if p != q { panic!("sample {} source cam pose {i} differs:\n{:?}\n{:?}", a.id, p.to_row12(), q.to_row12()); }
                }
            }
            if a.target.cam != b.target.cam {
                for (i,(p,q)) in a.target.cam.iter().zip(b.target.cam.iter()).enumerate() {
                    if p != q { panic!("sample {} target cam pose {i} differs:\n{:?}\n{:?}", a.id, p.to_row12(), q.to_row12()); }
                }
            }
            assert_eq!(a.target.time == b.target.time, true, "target time {}", a.id);
        }
    }
}
