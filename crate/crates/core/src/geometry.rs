//! Ground-plane geometric primitives.
//!
//! Everything here works on a flat world plane in meters: oriented
//! rectangles for vehicle footprints, an exact overlap test via the
//! separating axis theorem, the worst-case contact distance between two
//! rectangles over all rotations, and the circular reachable sets used
//! by the potential-collision check.
//!
//! All operations are pure functions on `Copy` values; comparisons are
//! exact (touching counts as overlap, no epsilons).

use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Errors raised by geometric operations on invalid inputs.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeometryError {
    #[error("invalid box dimensions: length={length}, width={width} (must be finite and > 0)")]
    InvalidDimensions { length: f64, width: f64 },
    #[error("non-finite value in {what}")]
    NonFinite { what: &'static str },
    #[error("time must be >= 0, got {t}")]
    NegativeTime { t: f64 },
    #[error("acceleration bound must be finite and > 0, got {a_max}")]
    InvalidAcceleration { a_max: f64 },
}

/// A 2D vector in ground-plane coordinates. Units are meters for
/// positions and m/s for velocities; the role is given by context.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Vec2 {
    pub x: f64,
    pub y: f64,
}

impl Vec2 {
    pub const ZERO: Vec2 = Vec2 { x: 0.0, y: 0.0 };

    pub fn new(x: f64, y: f64) -> Self {
        Vec2 { x, y }
    }

    pub fn dot(self, other: Vec2) -> f64 {
        self.x * other.x + self.y * other.y
    }

    pub fn norm_sq(self) -> f64 {
        self.x * self.x + self.y * self.y
    }

    /// Euclidean length.
    pub fn norm(self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub fn distance(self, other: Vec2) -> f64 {
        (self - other).norm()
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    /// Counter-clockwise rotation by `angle` radians.
    pub fn rotated(self, angle: f64) -> Vec2 {
        let (sin, cos) = angle.sin_cos();
        Vec2 {
            x: cos * self.x - sin * self.y,
            y: sin * self.x + cos * self.y,
        }
    }
}

impl Add for Vec2 {
    type Output = Vec2;
    fn add(self, rhs: Vec2) -> Vec2 {
        Vec2::new(self.x + rhs.x, self.y + rhs.y)
    }
}

impl Sub for Vec2 {
    type Output = Vec2;
    fn sub(self, rhs: Vec2) -> Vec2 {
        Vec2::new(self.x - rhs.x, self.y - rhs.y)
    }
}

impl Mul<f64> for Vec2 {
    type Output = Vec2;
    fn mul(self, rhs: f64) -> Vec2 {
        Vec2::new(self.x * rhs, self.y * rhs)
    }
}

impl Neg for Vec2 {
    type Output = Vec2;
    fn neg(self) -> Vec2 {
        Vec2::new(-self.x, -self.y)
    }
}

/// A rectangle in the ground plane with arbitrary orientation.
///
/// `length` extends along the heading direction, `width` across it.
/// Heading is unrestricted; overlap results are invariant under
/// `heading + 2π` up to floating-point rounding of the trig terms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OrientedBox {
    pub center: Vec2,
    pub heading: f64,
    pub length: f64,
    pub width: f64,
}

impl OrientedBox {
    pub fn new(center: Vec2, heading: f64, length: f64, width: f64) -> Self {
        OrientedBox {
            center,
            heading,
            length,
            width,
        }
    }

    pub fn validate(&self) -> Result<(), GeometryError> {
        if !(self.length > 0.0 && self.width > 0.0)
            || !self.length.is_finite()
            || !self.width.is_finite()
        {
            return Err(GeometryError::InvalidDimensions {
                length: self.length,
                width: self.width,
            });
        }
        if !self.center.is_finite() {
            return Err(GeometryError::NonFinite {
                what: "box center",
            });
        }
        if !self.heading.is_finite() {
            return Err(GeometryError::NonFinite {
                what: "box heading",
            });
        }
        Ok(())
    }

    /// Unit axes of the rectangle: along-heading and across-heading.
    pub fn axes(&self) -> [Vec2; 2] {
        let (sin, cos) = self.heading.sin_cos();
        [Vec2::new(cos, sin), Vec2::new(-sin, cos)]
    }

    /// The four corners, counter-clockwise.
    pub fn corners(&self) -> [Vec2; 4] {
        let [u, v] = self.axes();
        let du = u * (self.length * 0.5);
        let dv = v * (self.width * 0.5);
        [
            self.center + du + dv,
            self.center - du + dv,
            self.center - du - dv,
            self.center + du - dv,
        ]
    }

    /// Half of the footprint diagonal, i.e. the circumradius.
    pub fn half_diagonal(&self) -> f64 {
        0.5 * (self.length * self.length + self.width * self.width).sqrt()
    }
}

/// A disk in the ground plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Circle {
    pub center: Vec2,
    pub radius: f64,
}

fn project(corners: &[Vec2; 4], axis: Vec2) -> (f64, f64) {
    let mut min = f64::INFINITY;
    let mut max = f64::NEG_INFINITY;
    for corner in corners {
        let p = corner.dot(axis);
        min = min.min(p);
        max = max.max(p);
    }
    (min, max)
}

/// Separating-axis overlap test for two oriented rectangles.
///
/// Touching surfaces count as overlap. Symmetric in its arguments.
pub fn obb_overlap(a: &OrientedBox, b: &OrientedBox) -> Result<bool, GeometryError> {
    a.validate()?;
    b.validate()?;
    let ca = a.corners();
    let cb = b.corners();
    let [a0, a1] = a.axes();
    let [b0, b1] = b.axes();
    for axis in [a0, a1, b0, b1] {
        let (a_min, a_max) = project(&ca, axis);
        let (b_min, b_max) = project(&cb, axis);
        // Strict inequality: zero clearance is not a separation.
        if b_min > a_max || a_min > b_max {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Worst-case center distance at which the two rectangles can still
/// touch, maximized over all orientations of both. Attained corner to
/// corner, so it is the sum of the two circumradii. Only dimensions are
/// used; centers and headings are ignored.
pub fn d_crit(a: &OrientedBox, b: &OrientedBox) -> Result<f64, GeometryError> {
    a.validate()?;
    b.validate()?;
    Ok(a.half_diagonal() + b.half_diagonal())
}

/// Reachable set of a point mass at time `t` under acceleration bounded
/// by `a_max`: a disk of radius `½·a_max·t²` around `x0 + v0·t`.
pub fn existence_region(x0: Vec2, v0: Vec2, t: f64, a_max: f64) -> Result<Circle, GeometryError> {
    if !x0.is_finite() {
        return Err(GeometryError::NonFinite { what: "position" });
    }
    if !v0.is_finite() {
        return Err(GeometryError::NonFinite { what: "velocity" });
    }
    if !t.is_finite() || t < 0.0 {
        return Err(GeometryError::NegativeTime { t });
    }
    if !a_max.is_finite() || a_max <= 0.0 {
        return Err(GeometryError::InvalidAcceleration { a_max });
    }
    Ok(Circle {
        center: x0 + v0 * t,
        radius: 0.5 * a_max * t * t,
    })
}

/// Signed distance between two disks: center distance minus both radii.
/// Negative when the disks overlap.
pub fn circle_gap(a: &Circle, b: &Circle) -> f64 {
    a.center.distance(b.center) - a.radius - b.radius
}
