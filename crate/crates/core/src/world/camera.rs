use serde::{Deserialize, Serialize};

use super::{Pose, SceneObject};
use crate::gaze::BBox2D;

/// Points closer than this along the optical axis count as behind the camera.
const NEAR_PLANE: f64 = 0.05;

/// Pinhole stand-in for the head-mounted scene camera. The camera sits
/// above the wheelchair pose looking along its heading; positive `pitch`
/// tilts it downward. The principal point is the image center.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CameraModel {
    pub image_width: u32,
    pub image_height: u32,
    pub focal_px: f64,
    pub mount_height: f64,
    pub pitch: f64,
}

impl Default for CameraModel {
    fn default() -> Self {
        Self {
            image_width: 1280,
            image_height: 960,
            focal_px: 600.0,
            mount_height: 1.2,
            pitch: 0.0,
        }
    }
}

impl CameraModel {
    pub fn validate(&self) -> Result<(), String> {
        if self.image_width == 0 || self.image_height == 0 {
            return Err("camera image size must be positive".into());
        }
        if !(self.focal_px > 0.0) {
            return Err("camera focal_px must be positive".into());
        }
        Ok(())
    }

    pub fn center(&self) -> [f64; 2] {
        [
            self.image_width as f64 / 2.0,
            self.image_height as f64 / 2.0,
        ]
    }

    /// Camera-frame coordinates (right, down, forward) of a world point.
    pub fn to_camera_frame(&self, pose: &Pose, p: [f64; 3]) -> [f64; 3] {
        let (s, c) = pose.theta.sin_cos();
        let (sp, cp) = self.pitch.sin_cos();
        let d = [p[0] - pose.x, p[1] - pose.y, p[2] - self.mount_height];
        let ahead = d[0] * c + d[1] * s;
        let left = -d[0] * s + d[1] * c;
        let up = d[2];
        let forward = ahead * cp - up * sp;
        let cam_up = up * cp + ahead * sp;
        [-left, -cam_up, forward]
    }

    /// Image coordinates of a world point, `None` behind the near plane.
    pub fn project_point(&self, pose: &Pose, p: [f64; 3]) -> Option<[f64; 2]> {
        let [x, y, z] = self.to_camera_frame(pose, p);
        if z <= NEAR_PLANE {
            return None;
        }
        let [cx, cy] = self.center();
        Some([cx + self.focal_px * x / z, cy + self.focal_px * y / z])
    }
}

/// Axis-aligned image boxes of every object with at least one corner in
/// front of the camera whose projection overlaps the image. Boxes are
/// clipped to the image; there is no inter-object occlusion.
pub fn project_objects(
    camera: &CameraModel,
    pose: &Pose,
    objects: &[SceneObject],
) -> Vec<(String, BBox2D)> {
    let (w, h) = (camera.image_width as f64, camera.image_height as f64);
    let mut out = Vec::new();
    for obj in objects {
        let mut bounds: Option<[f64; 4]> = None;
        for corner in obj.corners() {
            if let Some([u, v]) = camera.project_point(pose, corner) {
                let b = bounds.get_or_insert([u, v, u, v]);
                b[0] = b[0].min(u);
                b[1] = b[1].min(v);
                b[2] = b[2].max(u);
                b[3] = b[3].max(v);
            }
        }
        let Some([x0, y0, x1, y1]) = bounds else {
            continue;
        };
        if x1 < 0.0 || y1 < 0.0 || x0 > w || y0 > h {
            continue;
        }
        out.push((
            obj.label.clone(),
            BBox2D::new(x0.clamp(0.0, w), y0.clamp(0.0, h), x1.clamp(0.0, w), y1.clamp(0.0, h)),
        ));
    }
    out
}
