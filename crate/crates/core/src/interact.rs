//! The three finger-driven interaction techniques: ray-cast selection,
//! plane-relative translation, and stroke-to-rotation mapping.
//!
//! Scene objects are sphere proxies, which keep intersection closed-form
//! while preserving the selection semantics (nearest object along the ray
//! wins). Strokes are 2D vectors in the touch plane; the rotation axis is
//! the stroke's in-plane perpendicular carried into the world frame, so
//! reversing the stroke reverses the rotation.

use alloc::string::String;

#[allow(unused_imports)]
use crate::flt::FloatExt;
use crate::geom::{rotate, Quaternion, Ray, Vec3};
use thiserror::Error;

/// Equal ray parameters within this tie-break on object id instead.
const SELECT_TIE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum InteractError {
    #[error("object {id:?} has non-positive radius {radius}")]
    NonPositiveRadius { id: String, radius: f64 },
    #[error("rotation gain must be positive, got {k}")]
    NonPositiveGain { k: f64 },
}

/// Sphere proxy standing in for a selectable scene object.
#[derive(Debug, Clone, PartialEq)]
pub struct SceneObject {
    pub id: String,
    /// World-frame center, millimeters.
    pub center: Vec3,
    pub radius: f64,
}

impl SceneObject {
    pub fn new(id: impl Into<String>, center: Vec3, radius: f64) -> Result<SceneObject, InteractError> {
        let id = id.into();
        if !(radius > 0.0) {
            return Err(InteractError::NonPositiveRadius { id, radius });
        }
        Ok(SceneObject { id, center, radius })
    }

    /// Smallest nonnegative ray parameter hitting this sphere, if any.
    /// `ray.direction` is unit by construction.
    fn hit(&self, ray: &Ray) -> Option<f64> {
        let oc = ray.origin - self.center;
        let b = oc.dot(ray.direction);
        let c = oc.dot(oc) - self.radius * self.radius;
        let disc = b * b - c;
        if disc < 0.0 {
            return None;
        }
        let root = disc.sqrt();
        let near = -b - root;
        if near >= 0.0 {
            return Some(near);
        }
        let far = -b + root;
        if far >= 0.0 {
            return Some(far);
        }
        None
    }
}

/// Scale from stroke length to rotation angle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RotationGain {
    /// Radians per millimeter of stroke.
    pub k: f64,
}

impl Default for RotationGain {
    /// 0.05 rad/mm: the largest 84 mm target sweeps about 240 degrees.
    fn default() -> Self {
        RotationGain { k: 0.05 }
    }
}

impl RotationGain {
    pub fn new(k: f64) -> Result<RotationGain, InteractError> {
        if !(k > 0.0) {
            return Err(InteractError::NonPositiveGain { k });
        }
        Ok(RotationGain { k })
    }
}

/// A rotation to apply to the selected object.
#[derive(Debug, Clone, PartialEq)]
pub struct RotationCommand {
    /// Unit axis in the world frame.
    pub axis: Vec3,
    /// Radians; always nonnegative, direction is carried by the axis sign.
    pub angle: f64,
    /// Filled in by whoever knows the current selection.
    pub target: Option<String>,
}

impl RotationCommand {
    /// The rotation as a quaternion, for composing with object attitude.
    pub fn quaternion(&self) -> Quaternion {
        Quaternion::from_rotation_vector(self.axis * self.angle)
    }
}

/// World-frame pointing ray: the finger-forward body axis (+y) carried
/// through the given attitude. `orientation` must be normalized.
pub fn pointing_ray(orientation: &Quaternion, origin: Vec3) -> Ray {
    Ray { origin, direction: rotate(orientation, Vec3::new(0.0, 1.0, 0.0)) }
}

/// Nearest object hit by the ray: smallest nonnegative intersection
/// parameter wins; parameters equal within 1e-9 fall back to lexicographic
/// id order, making the result independent of list order.
pub fn select<'a>(ray: &Ray, objects: &'a [SceneObject]) -> Option<&'a str> {
    let mut best: Option<(f64, &str)> = None;
    for obj in objects {
        let Some(t) = obj.hit(ray) else { continue };
        best = match best {
            None => Some((t, &obj.id)),
            Some((bt, bid)) => {
                if t < bt - SELECT_TIE_TOL || ((t - bt).abs() <= SELECT_TIE_TOL && obj.id.as_str() < bid) {
                    Some((t, &obj.id))
                } else {
                    Some((bt, bid))
                }
            }
        };
    }
    best.map(|(_, id)| id)
}

/// Maps a 2D stroke on the touch plane to a rotation command. The axis is
/// the stroke rotated +90 degrees within the plane and carried to the world
/// frame; the angle is gain times stroke length. A zero-length stroke is a
/// no-op and yields no command.
pub fn rotation_from_stroke(stroke: [f64; 2], plane: &Quaternion, gain: RotationGain) -> Option<RotationCommand> {
    let length = (stroke[0] * stroke[0] + stroke[1] * stroke[1]).sqrt();
    if length == 0.0 {
        return None;
    }
    let perp = rotate(plane, Vec3::new(-stroke[1], stroke[0], 0.0));
    // perp is nonzero whenever the stroke is, so the norm is positive.
    let axis = perp * (1.0 / perp.norm());
    Some(RotationCommand { axis, angle: gain.k * length, target: None })
}

/// Applies a fused world-frame displacement to an object position.
pub fn translate_object(position: Vec3, delta: Vec3) -> Vec3 {
    position + delta
}
