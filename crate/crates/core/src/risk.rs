//! Collision-risk ranking of labeled objects relative to the ego vehicle.
//!
//! The model is worst-case and planar. For each frame (analyzed
//! independently, frame time = 0):
//!
//! 1. The analysis horizon is the ego's time to stop under emergency
//!    braking, including compute latency:
//!    `TTS = (‖v_e(0)‖ + a_max·l_comp) / a_max + l_comp`.
//! 2. *Imminent* (rank 1): propagating both footprints with constant
//!    velocity and heading, the rectangles overlap at some grid time in
//!    `[0, TTS]`.
//! 3. *Potential* (rank 2): the circular reachable sets of both centers
//!    under acceleration bound `a_max` come closer than the worst-case
//!    contact distance `d_crit` at some grid time (strict `<`).
//! 4. Everything else is rank 3 (*Other*).
//!
//! All operations are pure; frames may be ranked concurrently.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{
    circle_gap, d_crit, existence_region, obb_overlap, GeometryError, OrientedBox, Vec2,
};
use crate::ingest::Frame;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RiskError {
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("invalid risk params: {reason}")]
    InvalidParams { reason: String },
    #[error("invalid time grid: {reason}")]
    InvalidGrid { reason: String },
    #[error("invalid world state: {reason}")]
    InvalidState { reason: String },
    #[error("duplicate object_id `{id}` in frame `{frame_id}`")]
    DuplicateObjectId { frame_id: String, id: String },
}

/// Ground-plane pose, kinematics and footprint of the ego vehicle or a
/// labeled object at frame time 0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WorldState {
    pub position: Vec2,
    /// m/s, in the same global frame as `position`.
    pub velocity: Vec2,
    /// Radians; the footprint `length` extends along this direction.
    pub heading: f64,
    pub length: f64,
    pub width: f64,
}

impl WorldState {
    pub fn new(position: Vec2, velocity: Vec2, heading: f64, length: f64, width: f64) -> Self {
        WorldState {
            position,
            velocity,
            heading,
            length,
            width,
        }
    }

    pub fn validate(&self) -> Result<(), RiskError> {
        if !self.position.is_finite() || !self.velocity.is_finite() || !self.heading.is_finite() {
            return Err(RiskError::InvalidState {
                reason: "position, velocity and heading must be finite".into(),
            });
        }
        if !(self.length > 0.0) || !(self.width > 0.0) || !self.length.is_finite()
            || !self.width.is_finite()
        {
            return Err(RiskError::InvalidState {
                reason: format!(
                    "length and width must be finite and > 0 (got {} x {})",
                    self.length, self.width
                ),
            });
        }
        Ok(())
    }

    /// Footprint rectangle at frame time 0.
    pub fn footprint(&self) -> OrientedBox {
        OrientedBox::new(self.position, self.heading, self.length, self.width)
    }
}

/// Parameters of the risk model. Defaults: emergency deceleration
/// 7.5 m/s², compute latency 100 ms, grid step 100 ms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RiskParams {
    /// Maximum acceleration/deceleration magnitude, m/s².
    pub a_max: f64,
    /// Compute latency from sensor input to actuation, seconds.
    pub l_comp: f64,
    /// Discretization step of the analysis grid, seconds.
    pub dt: f64,
}

impl Default for RiskParams {
    fn default() -> Self {
        RiskParams {
            a_max: 7.5,
            l_comp: 0.1,
            dt: 0.1,
        }
    }
}

impl RiskParams {
    pub fn validate(&self) -> Result<(), RiskError> {
        if !(self.a_max > 0.0) || !self.a_max.is_finite() {
            return Err(RiskError::InvalidParams {
                reason: format!("a_max must be finite and > 0, got {}", self.a_max),
            });
        }
        if !(self.l_comp >= 0.0) || !self.l_comp.is_finite() {
            return Err(RiskError::InvalidParams {
                reason: format!("l_comp must be finite and >= 0, got {}", self.l_comp),
            });
        }
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return Err(RiskError::InvalidParams {
                reason: format!("dt must be finite and > 0, got {}", self.dt),
            });
        }
        Ok(())
    }
}

/// Collision-risk rank of one object in one frame. Ordered by
/// decreasing risk: `Imminent < Potential < Other`.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
#[serde(rename_all = "lowercase")]
pub enum RiskRank {
    Imminent,
    Potential,
    Other,
}

impl RiskRank {
    pub const ALL: [RiskRank; 3] = [RiskRank::Imminent, RiskRank::Potential, RiskRank::Other];

    /// Numeric rank: 1 = imminent, 2 = potential, 3 = other.
    pub fn rank(self) -> u8 {
        match self {
            RiskRank::Imminent => 1,
            RiskRank::Potential => 2,
            RiskRank::Other => 3,
        }
    }

    /// Zero-based index, for tally arrays.
    pub fn index(self) -> usize {
        self.rank() as usize - 1
    }
}

impl std::fmt::Display for RiskRank {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            RiskRank::Imminent => write!(f, "imminent"),
            RiskRank::Potential => write!(f, "potential"),
            RiskRank::Other => write!(f, "other"),
        }
    }
}

/// Sample times covering `[0, tts]`: multiples of `dt` with the horizon
/// endpoint appended so boundary collisions are never missed.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeGrid {
    tts: f64,
    steps: Vec<f64>,
}

impl TimeGrid {
    pub fn tts(&self) -> f64 {
        self.tts
    }

    pub fn steps(&self) -> &[f64] {
        &self.steps
    }
}

const MAX_GRID_STEPS: usize = 10_000_000;

/// Time to stop for the ego vehicle: worst-case speed after the compute
/// latency, divided by the braking bound, plus the latency itself.
pub fn time_to_stop(ego_velocity: Vec2, params: &RiskParams) -> f64 {
    (ego_velocity.norm() + params.a_max * params.l_comp) / params.a_max + params.l_comp
}

pub fn make_time_grid(tts: f64, dt: f64) -> Result<TimeGrid, RiskError> {
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(RiskError::InvalidGrid {
            reason: format!("dt must be finite and > 0, got {dt}"),
        });
    }
    if !(tts >= 0.0) || !tts.is_finite() {
        return Err(RiskError::InvalidGrid {
            reason: format!("tts must be finite and >= 0, got {tts}"),
        });
    }
    if tts / dt > MAX_GRID_STEPS as f64 {
        return Err(RiskError::InvalidGrid {
            reason: format!("grid [0, {tts}] at step {dt} exceeds {MAX_GRID_STEPS} samples"),
        });
    }
    let mut steps = Vec::new();
    let mut k: u64 = 0;
    loop {
        let t = k as f64 * dt;
        if t >= tts {
            break;
        }
        steps.push(t);
        k += 1;
    }
    steps.push(tts);
    Ok(TimeGrid { tts, steps })
}

/// Footprint after `t` seconds of constant-velocity, constant-heading
/// motion.
pub fn propagate_box(state: &WorldState, t: f64) -> OrientedBox {
    OrientedBox::new(
        state.position + state.velocity * t,
        state.heading,
        state.length,
        state.width,
    )
}

fn checked_grid(ego: &WorldState, obj: &WorldState, params: &RiskParams) -> Result<TimeGrid, RiskError> {
    ego.validate()?;
    obj.validate()?;
    params.validate()?;
    make_time_grid(time_to_stop(ego.velocity, params), params.dt)
}

/// True when the constant-velocity trajectories of both footprints
/// overlap at some grid time within the ego's stopping horizon.
pub fn is_imminent(
    ego: &WorldState,
    obj: &WorldState,
    params: &RiskParams,
) -> Result<bool, RiskError> {
    let grid = checked_grid(ego, obj, params)?;
    for &t in grid.steps() {
        if obb_overlap(&propagate_box(ego, t), &propagate_box(obj, t))? {
            return Ok(true);
        }
    }
    Ok(false)
}

/// True when the reachable sets of ego and object centers approach
/// closer than `d_crit` (strictly) at some grid time within the
/// stopping horizon. Overlapping regions (negative gap) qualify.
pub fn is_potential(
    ego: &WorldState,
    obj: &WorldState,
    params: &RiskParams,
) -> Result<bool, RiskError> {
    let grid = checked_grid(ego, obj, params)?;
    let critical = d_crit(&ego.footprint(), &obj.footprint())?;
    for &t in grid.steps() {
        let region_e = existence_region(ego.position, ego.velocity, t, params.a_max)?;
        let region_o = existence_region(obj.position, obj.velocity, t, params.a_max)?;
        if circle_gap(&region_e, &region_o) < critical {
            return Ok(true);
        }
    }
    Ok(false)
}

/// Mutually exclusive rank with precedence to higher risk.
pub fn rank_object(
    ego: &WorldState,
    obj: &WorldState,
    params: &RiskParams,
) -> Result<RiskRank, RiskError> {
    if is_imminent(ego, obj, params)? {
        Ok(RiskRank::Imminent)
    } else if is_potential(ego, obj, params)? {
        Ok(RiskRank::Potential)
    } else {
        Ok(RiskRank::Other)
    }
}

/// Ranks every labeled object of one frame. Frames are independent; no
/// state carries across calls.
pub fn rank_frame(
    frame: &Frame,
    params: &RiskParams,
) -> Result<BTreeMap<String, RiskRank>, RiskError> {
    let mut ranks = BTreeMap::new();
    for obj in &frame.objects {
        let rank = rank_object(&frame.ego, &obj.world, params)?;
        if ranks.insert(obj.object_id.clone(), rank).is_some() {
            return Err(RiskError::DuplicateObjectId {
                frame_id: frame.frame_id.clone(),
                id: obj.object_id.clone(),
            });
        }
    }
    Ok(ranks)
}
