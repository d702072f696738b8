//! Look-at cameras on the viewing hemisphere.
//!
//! Conventions: world up is +z, azimuth 0 lies along +x and grows towards +y.
//! Rotations map world to camera coordinates with rows (right, down, forward),
//! so the optical axis is the camera +z axis.

use serde::{Deserialize, Serialize};

use super::SceneError;

pub type Vec3 = [f64; 3];
pub type Mat3 = [[f64; 3]; 3];

pub const AZIMUTH_STEPS: usize = 30;
pub const ELEVATION_RINGS: usize = 6;
pub const ANGLE_STEP_DEG: f64 = 12.0;
pub const CAMERA_COUNT: usize = AZIMUTH_STEPS * ELEVATION_RINGS;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CameraPose {
    pub camera_id: usize,
    pub azimuth_deg: f64,
    pub elevation_deg: f64,
    pub radius: f64,
    pub position: Vec3,
    /// World-to-camera rotation; rows are the camera right, down and forward
    /// axes in world coordinates.
    pub rotation: Mat3,
    pub look_at: Vec3,
}

impl CameraPose {
    pub fn forward(&self) -> Vec3 {
        self.rotation[2]
    }

    pub fn world_to_camera(&self, p: Vec3) -> Vec3 {
        let d = sub(p, self.position);
        [dot(self.rotation[0], d), dot(self.rotation[1], d), dot(self.rotation[2], d)]
    }
}

fn sub(a: Vec3, b: Vec3) -> Vec3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

pub(crate) fn dot(a: Vec3, b: Vec3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn cross(a: Vec3, b: Vec3) -> Vec3 {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

fn normalize(a: Vec3) -> Vec3 {
    let n = dot(a, a).sqrt();
    [a[0] / n, a[1] / n, a[2] / n]
}

/// Camera at the given spherical offset from `look_at`, aimed at it.
pub fn camera_extrinsics(
    azimuth_deg: f64,
    elevation_deg: f64,
    radius: f64,
    look_at: Vec3,
) -> Result<CameraPose, SceneError> {
    if !(radius > 0.0 && radius.is_finite()) {
        return Err(SceneError::InvalidRadius(radius));
    }
    if !(0.0..90.0).contains(&elevation_deg) || !azimuth_deg.is_finite() {
        return Err(SceneError::InvalidElevation(elevation_deg));
    }
    let (a, e) = (azimuth_deg.to_radians(), elevation_deg.to_radians());
    let position = [
        look_at[0] + radius * e.cos() * a.cos(),
        look_at[1] + radius * e.cos() * a.sin(),
        look_at[2] + radius * e.sin(),
    ];
    let forward = normalize(sub(look_at, position));
    let world_up = [0.0, 0.0, 1.0];
    let along = dot(world_up, forward);
    let up = normalize([
        world_up[0] - along * forward[0],
        world_up[1] - along * forward[1],
        world_up[2] - along * forward[2],
    ]);
    let right = cross(forward, up);
    let down = [-up[0], -up[1], -up[2]];
    Ok(CameraPose {
        camera_id: 0,
        azimuth_deg,
        elevation_deg,
        radius,
        position,
        rotation: [right, down, forward],
        look_at,
    })
}

/// The 180-camera rig: 6 elevation rings (0..=60 degrees) by 30 azimuths,
/// 12 degrees apart, all aimed at the origin. `camera_id = ring * 30 + step`.
pub fn generate_camera_rig(radius: f64) -> Result<Vec<CameraPose>, SceneError> {
    let mut rig = Vec::with_capacity(CAMERA_COUNT);
    for ring in 0..ELEVATION_RINGS {
        for step in 0..AZIMUTH_STEPS {
            let mut cam = camera_extrinsics(
                step as f64 * ANGLE_STEP_DEG,
                ring as f64 * ANGLE_STEP_DEG,
                radius,
                [0.0; 3],
            )?;
            cam.camera_id = ring * AZIMUTH_STEPS + step;
            rig.push(cam);
        }
    }
    Ok(rig)
}
