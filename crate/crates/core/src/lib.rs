//! Risk-ranked recall evaluation for object detection in driving
//! scenes.
//!
//! Classic recall treats every missed object alike; this toolkit first
//! assigns each labeled object an objective collision-risk rank
//! relative to the ego vehicle (imminent / potential / other, from a
//! worst-case kinematic model) and then scores detections per rank, so
//! a missed object on a collision course is never hidden by hundreds of
//! detected parked cars.
//!
//! Module map:
//!
//! * [`geometry`] — oriented rectangles, SAT overlap, worst-case
//!   contact distance, reachable-set circles.
//! * [`risk`] — stopping-time horizon and the three-way rank.
//! * [`matching`] — IoG / IoU true-positive rules on image boxes.
//! * [`metrics`] — per-rank recall, precision, confidence sweeps.
//! * [`ingest`] — line-delimited interchange formats and streaming IO.
//! * [`scenario`] — synthetic fixtures with ranks known by
//!   construction.
//! * [`cli`] — the `r3eval` command-line tool.

pub mod cli;
pub mod geometry;
pub mod ingest;
pub mod matching;
pub mod metrics;
pub mod risk;
pub mod scenario;
