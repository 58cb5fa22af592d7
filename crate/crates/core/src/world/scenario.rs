use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;
use std::path::Path;

use super::{CameraModel, DynamicObstacle, OccupancyGrid, Pose};
use crate::{Error, Result};

/// A labeled target object. `goal_point` is where the wheelchair parks
/// when the object is selected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneObject {
    pub label: String,
    pub center_3d: [f64; 3],
    pub extent_3d: [f64; 3],
    pub goal_point: [f64; 2],
}

impl SceneObject {
    pub fn corners(&self) -> impl Iterator<Item = [f64; 3]> + '_ {
        (0..8).map(move |k| {
            let mut p = self.center_3d;
            for (axis, coord) in p.iter_mut().enumerate() {
                let sign = if k >> axis & 1 == 1 { 0.5 } else { -0.5 };
                *coord += sign * self.extent_3d[axis];
            }
            p
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub grid: OccupancyGrid,
    pub objects: Vec<SceneObject>,
    #[serde(default)]
    pub dynamic_obstacles: Vec<DynamicObstacle>,
    pub start_pose: Pose,
    #[serde(default)]
    pub camera: CameraModel,
    pub robot_radius: f64,
    #[serde(default)]
    pub rng_seed: u64,
}

impl Scenario {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidScenario(m));
        self.camera.validate().map_err(Error::InvalidScenario)?;
        if !(self.robot_radius > 0.0) {
            return bad("robot_radius must be positive".into());
        }
        if !self.grid.is_free_at(self.start_pose.position()) {
            return bad("start pose is not in free space".into());
        }
        let mut labels = BTreeSet::new();
        for o in &self.objects {
            if !labels.insert(o.label.as_str()) {
                return bad(format!("duplicate object label `{}`", o.label));
            }
            if o.extent_3d.iter().any(|e| !(*e > 0.0)) {
                return bad(format!("object `{}` has a non-positive extent", o.label));
            }
            if !self.grid.is_free_at(o.goal_point) {
                return bad(format!("goal point of `{}` is not in a free cell", o.label));
            }
        }
        for d in &self.dynamic_obstacles {
            d.validate().map_err(Error::InvalidScenario)?;
        }
        Ok(())
    }

    pub fn object(&self, label: &str) -> Option<&SceneObject> {
        self.objects.iter().find(|o| o.label == label)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let sc: Scenario = serde_json::from_str(s).map_err(|e| Error::json("<scenario>", e))?;
        sc.validate()?;
        Ok(sc)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let sc: Scenario = serde_json::from_str(&text).map_err(|e| Error::json(path, e))?;
        sc.validate()?;
        Ok(sc)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn minimal() -> String {
        r#"{
            "grid": {"width": 10, "height": 10, "resolution": 0.5, "occupied": [[0,0]]},
            "objects": [{"label": "tv", "center_3d": [4, 4, 1], "extent_3d": [1, 0.1, 0.6], "goal_point": [3, 3]}],
            "start_pose": {"x": 1.2, "y": 1.2, "theta": 0},
            "robot_radius": 0.3
        }"#
        .into()
    }

    #[test]
    fn parses_with_defaults() {
        let sc = Scenario::from_json(&minimal()).unwrap();
        assert_eq!(sc.camera, CameraModel::default());
        assert!(sc.dynamic_obstacles.is_empty());
        assert_eq!(sc.objects[0].corners().count(), 8);
    }

    #[test]
    fn rejects_unknown_keys() {
        let s = minimal().replace("\"robot_radius\"", "\"colour\": 1, \"robot_radius\"");
        assert!(Scenario::from_json(&s).is_err());
    }

    #[test]
    fn rejects_blocked_start_and_duplicate_labels() {
        let s = minimal().replace("\"x\": 1.2, \"y\": 1.2", "\"x\": 0.2, \"y\": 0.2");
        assert!(matches!(Scenario::from_json(&s), Err(Error::InvalidScenario(_))));
        let mut sc = Scenario::from_json(&minimal()).unwrap();
        sc.objects.push(sc.objects[0].clone());
        assert!(sc.validate().is_err());
    }
}
