//! Render manifests for the external renderer: the camera rig, the
//! train/validation camera split, and per-scene randomized appearance.

mod camera;

use std::f64::consts::TAU;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use camera::{
    camera_extrinsics, generate_camera_rig, CameraPose, Mat3, Vec3, ANGLE_STEP_DEG, AZIMUTH_STEPS,
    CAMERA_COUNT, ELEVATION_RINGS,
};

pub const TRAIN_CAMERAS: usize = 162;
pub const LAMPS_PER_SCENE: usize = 3;

#[derive(Debug, Error, PartialEq)]
pub enum SceneError {
    #[error("camera radius must be positive and finite, got {0}")]
    InvalidRadius(f64),
    #[error("elevation must lie in [0, 90) degrees, got {0}")]
    InvalidElevation(f64),
    #[error("pose count must be positive")]
    NoPoses,
    #[error("invalid scene parameters: {0}")]
    InvalidParams(String),
    #[error("invalid render manifest: {0}")]
    InvalidManifest(String),
    #[error("asset index cannot resolve {what} id {id}")]
    MissingAsset { what: &'static str, id: usize },
    #[error("malformed document: {0}")]
    Format(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BodyShape {
    Male,
    HeavyMale,
    Female,
    Child,
}

impl BodyShape {
    pub const ALL: [BodyShape; 4] = [BodyShape::Male, BodyShape::HeavyMale, BodyShape::Female, BodyShape::Child];
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BackgroundMode {
    Planar,
    Hdri,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Modality {
    Rgb,
    Depth,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Background {
    pub mode: BackgroundMode,
    pub id: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Lamp {
    pub position: Vec3,
    pub energy: f64,
}

/// One render job. Depth scenes omit every appearance field.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneSpec {
    pub scene_id: usize,
    pub pose_id: usize,
    pub body_shape: BodyShape,
    pub camera_id: usize,
    pub modality: Modality,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shirt_texture_id: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trouser_texture_id: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub background: Option<Background>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lamps: Option<[Lamp; LAMPS_PER_SCENE]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneParams {
    pub seed: u64,
    pub shirt_textures: usize,
    pub trouser_textures: usize,
    pub backgrounds: usize,
    /// Inclusive lamp energy range.
    pub energy_range: (f64, f64),
    pub subject_height: f64,
    /// Lamp shell radii as multiples of `subject_height`.
    pub lamp_shell: (f64, f64),
    pub camera_radius: f64,
}

impl Default for SceneParams {
    fn default() -> Self {
        Self {
            seed: crate::DEFAULT_SEED,
            shirt_textures: 262,
            trouser_textures: 183,
            backgrounds: 2000,
            energy_range: (100.0, 1000.0),
            subject_height: 1.8,
            lamp_shell: (2.0, 4.0),
            camera_radius: 4.0,
        }
    }
}

impl SceneParams {
    pub fn validate(&self) -> Result<(), SceneError> {
        let bad = |m: &str| Err(SceneError::InvalidParams(m.to_string()));
        if self.shirt_textures == 0 || self.trouser_textures == 0 || self.backgrounds == 0 {
            return bad("asset counts must be positive");
        }
        let (lo, hi) = self.energy_range;
        if !(lo > 0.0 && lo <= hi && hi.is_finite()) {
            return bad("energy range must satisfy 0 < e_min <= e_max");
        }
        let (r0, r1) = self.lamp_shell;
        if !(r0 > 0.0 && r0 <= r1 && r1.is_finite()) {
            return bad("lamp shell must satisfy 0 < inner <= outer");
        }
        if !(self.subject_height > 0.0 && self.subject_height.is_finite()) {
            return bad("subject height must be positive");
        }
        if !(self.camera_radius > 0.0 && self.camera_radius.is_finite()) {
            return Err(SceneError::InvalidRadius(self.camera_radius));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CameraSplit {
    pub train_cameras: Vec<usize>,
    pub val_cameras: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RenderManifest {
    pub rng_seed: u64,
    pub dictionary_ref: String,
    pub pose_count: usize,
    pub params: SceneParams,
    pub split: CameraSplit,
    pub rig: Vec<CameraPose>,
    pub specs: Vec<SceneSpec>,
}

/// Seeded partition of the rig into 162 training and 18 validation cameras,
/// each list ascending.
pub fn split_cameras(seed: u64) -> CameraSplit {
    let mut ids: Vec<usize> = (0..CAMERA_COUNT).collect();
    ids.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut train = ids[..TRAIN_CAMERAS].to_vec();
    let mut val = ids[TRAIN_CAMERAS..].to_vec();
    train.sort_unstable();
    val.sort_unstable();
    CameraSplit {
        train_cameras: train,
        val_cameras: val,
    }
}

fn draw_lamp(rng: &mut ChaCha8Rng, params: &SceneParams, centre: Vec3) -> Lamp {
    // uniform direction on the sphere, radius uniform across the shell
    let z: f64 = rng.gen_range(-1.0..=1.0);
    let phi: f64 = rng.gen_range(0.0..TAU);
    let s = (1.0 - z * z).sqrt();
    let (r0, r1) = params.lamp_shell;
    let r = rng.gen_range(r0..=r1) * params.subject_height;
    let (e0, e1) = params.energy_range;
    Lamp {
        position: [centre[0] + r * s * phi.cos(), centre[1] + r * s * phi.sin(), centre[2] + r * z],
        energy: rng.gen_range(e0..=e1),
    }
}

/// One RGB scene per (pose, camera) with random appearance, followed by the
/// matching depth scenes (same pose, body shape and camera).
pub fn sample_scene_specs(
    pose_count: usize,
    params: &SceneParams,
    dictionary_ref: &str,
) -> Result<RenderManifest, SceneError> {
    if pose_count == 0 {
        return Err(SceneError::NoPoses);
    }
    params.validate()?;
    let rig = generate_camera_rig(params.camera_radius)?;
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let per_modality = pose_count * rig.len();
    let mut specs = Vec::with_capacity(per_modality * 2);

    for pose_id in 0..pose_count {
        for cam in &rig {
            let body_shape = BodyShape::ALL[rng.gen_range(0..BodyShape::ALL.len())];
            let shirt = rng.gen_range(0..params.shirt_textures);
            let trouser = rng.gen_range(0..params.trouser_textures);
            let mode = if rng.gen_bool(0.5) { BackgroundMode::Hdri } else { BackgroundMode::Planar };
            let background = Background {
                mode,
                id: rng.gen_range(0..params.backgrounds),
            };
            let lamps = std::array::from_fn(|_| draw_lamp(&mut rng, params, cam.look_at));
            specs.push(SceneSpec {
                scene_id: specs.len(),
                pose_id,
                body_shape,
                camera_id: cam.camera_id,
                modality: Modality::Rgb,
                shirt_texture_id: Some(shirt),
                trouser_texture_id: Some(trouser),
                background: Some(background),
                lamps: Some(lamps),
            });
        }
    }
    for i in 0..per_modality {
        let rgb = &specs[i];
        let depth = SceneSpec {
            scene_id: per_modality + i,
            pose_id: rgb.pose_id,
            body_shape: rgb.body_shape,
            camera_id: rgb.camera_id,
            modality: Modality::Depth,
            shirt_texture_id: None,
            trouser_texture_id: None,
            background: None,
            lamps: None,
        };
        specs.push(depth);
    }

    Ok(RenderManifest {
        rng_seed: params.seed,
        dictionary_ref: dictionary_ref.to_string(),
        pose_count,
        params: params.clone(),
        split: split_cameras(params.seed),
        rig,
        specs,
    })
}

impl RenderManifest {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string(self).expect("manifest serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self, SceneError> {
        let m: Self = serde_json::from_str(text).map_err(|e| SceneError::Format(e.to_string()))?;
        m.validate()?;
        Ok(m)
    }

    pub fn rgb_specs(&self) -> impl Iterator<Item = &SceneSpec> {
        self.specs.iter().filter(|s| s.modality == Modality::Rgb)
    }

    pub fn depth_specs(&self) -> impl Iterator<Item = &SceneSpec> {
        self.specs.iter().filter(|s| s.modality == Modality::Depth)
    }

    pub fn validate(&self) -> Result<(), SceneError> {
        let bad = |m: String| Err(SceneError::InvalidManifest(m));
        self.params.validate()?;
        if self.rig.len() != CAMERA_COUNT || self.rig.iter().enumerate().any(|(i, c)| c.camera_id != i) {
            return bad("rig must hold cameras 0..180 in order".into());
        }
        let mut seen = vec![0u8; CAMERA_COUNT];
        if self.split.train_cameras.len() != TRAIN_CAMERAS
            || self.split.val_cameras.len() != CAMERA_COUNT - TRAIN_CAMERAS
        {
            return bad("split must hold 162 training and 18 validation cameras".into());
        }
        for &c in self.split.train_cameras.iter().chain(&self.split.val_cameras) {
            if c >= CAMERA_COUNT {
                return bad(format!("split references unknown camera {c}"));
            }
            seen[c] += 1;
        }
        if seen.iter().any(|&s| s != 1) {
            return bad("split is not a partition of the rig".into());
        }
        let p = &self.params;
        for s in &self.specs {
            if s.camera_id >= CAMERA_COUNT {
                return bad(format!("scene {} references unknown camera {}", s.scene_id, s.camera_id));
            }
            if s.pose_id >= self.pose_count {
                return bad(format!("scene {} references unknown pose {}", s.scene_id, s.pose_id));
            }
            match s.modality {
                Modality::Depth => {
                    if s.shirt_texture_id.is_some()
                        || s.trouser_texture_id.is_some()
                        || s.background.is_some()
                        || s.lamps.is_some()
                    {
                        return bad(format!("depth scene {} carries appearance fields", s.scene_id));
                    }
                }
                Modality::Rgb => {
                    let (Some(shirt), Some(trouser), Some(bg), Some(lamps)) =
                        (s.shirt_texture_id, s.trouser_texture_id, s.background, s.lamps)
                    else {
                        return bad(format!("rgb scene {} is missing appearance fields", s.scene_id));
                    };
                    if shirt >= p.shirt_textures || trouser >= p.trouser_textures || bg.id >= p.backgrounds {
                        return bad(format!("rgb scene {} has an out-of-range asset id", s.scene_id));
                    }
                    let (e0, e1) = p.energy_range;
                    if lamps.iter().any(|l| !(e0..=e1).contains(&l.energy)) {
                        return bad(format!("rgb scene {} has a lamp energy out of range", s.scene_id));
                    }
                }
            }
        }
        Ok(())
    }
}

/// Asset catalog mapping manifest ids to files on the renderer's side.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AssetIndex {
    pub body_shapes: Vec<(BodyShape, String)>,
    pub shirt_textures: Vec<String>,
    pub trouser_textures: Vec<String>,
    pub backgrounds: Vec<String>,
}

impl AssetIndex {
    pub fn from_json(text: &str) -> Result<Self, SceneError> {
        serde_json::from_str(text).map_err(|e| SceneError::Format(e.to_string()))
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("asset index serializes");
        s.push('\n');
        s
    }

    /// Fails on the first manifest id the catalog cannot resolve.
    pub fn resolve_all(&self, manifest: &RenderManifest) -> Result<(), SceneError> {
        for s in &manifest.specs {
            if !self.body_shapes.iter().any(|(b, _)| *b == s.body_shape) {
                let id = BodyShape::ALL.iter().position(|b| *b == s.body_shape).unwrap_or(0);
                return Err(SceneError::MissingAsset { what: "body shape", id });
            }
            if let Some(id) = s.shirt_texture_id.filter(|&i| i >= self.shirt_textures.len()) {
                return Err(SceneError::MissingAsset { what: "shirt texture", id });
            }
            if let Some(id) = s.trouser_texture_id.filter(|&i| i >= self.trouser_textures.len()) {
                return Err(SceneError::MissingAsset { what: "trouser texture", id });
            }
            if let Some(bg) = s.background.filter(|b| b.id >= self.backgrounds.len()) {
                return Err(SceneError::MissingAsset { what: "background", id: bg.id });
            }
        }
        Ok(())
    }
}
