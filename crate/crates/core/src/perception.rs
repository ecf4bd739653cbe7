//! Human-effect models: redirected-walking geometry with detectability
//! thresholds, hand-offset detectability with a two-link arm mapping, and
//! dispersion-based dizziness metrics over per-frame flow/disparity triples.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::series::SampleSeries;

/// Population-level perceptual thresholds. These are point estimates from
/// small user studies, exposed as configuration rather than constants of
/// nature. Boundaries are inclusive: a stimulus at the threshold counts as
/// detectable.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ThresholdSet {
    /// Speed-ratio JND for redirected walking (v_a / v_t).
    pub speed_ratio_jnd: f64,
    /// Hand-offset JND, metres.
    pub hand_offset_jnd_m: f64,
    /// Normal walking speed, m/s.
    pub walking_speed_mps: f64,
}

impl Default for ThresholdSet {
    fn default() -> Self {
        Self {
            speed_ratio_jnd: 0.2,
            hand_offset_jnd_m: 0.09,
            walking_speed_mps: 1.35,
        }
    }
}

impl ThresholdSet {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("speed_ratio_jnd", self.speed_ratio_jnd),
            ("hand_offset_jnd_m", self.hand_offset_jnd_m),
            ("walking_speed_mps", self.walking_speed_mps),
        ] {
            if !(v > 0.0) {
                return Err(Error::InvalidParameter { name, value: v });
            }
        }
        Ok(())
    }
}

/// A redirected-walking scenario: the display shows motion scaled by
/// `gain` relative to real motion, over a virtual distance to cover.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WalkScenario {
    pub virtual_distance_m: f64,
    /// Locomotion gain k in (0, 1]: virtual displacement per real metre.
    pub gain: f64,
    /// Distance from the walk target to the safety boundary, metres.
    pub boundary_offset_m: f64,
}

impl Default for WalkScenario {
    fn default() -> Self {
        Self {
            virtual_distance_m: 2.25,
            gain: 0.8,
            boundary_offset_m: 0.0,
        }
    }
}

impl WalkScenario {
    pub fn validate(&self) -> Result<()> {
        if !(self.gain > 0.0 && self.gain <= 1.0) {
            return Err(Error::InvalidParameter {
                name: "gain",
                value: self.gain,
            });
        }
        if !(self.virtual_distance_m >= 0.0) {
            return Err(Error::InvalidParameter {
                name: "virtual_distance_m",
                value: self.virtual_distance_m,
            });
        }
        Ok(())
    }
}

/// Real distance covered to see `virtual_distance` of display motion, and
/// how far past the virtual goal the walker overshoots in the real room.
///
/// The path-integration deficit makes walkers compensate the scaled-down
/// visual flow by simply walking further: real = virtual / k.
pub fn real_walk_distance(s: &WalkScenario) -> Result<(f64, f64)> {
    s.validate()?;
    let real = s.virtual_distance_m / s.gain;
    let overshoot = s.virtual_distance_m * (1.0 / s.gain - 1.0);
    Ok((real, overshoot))
}

/// Whether an induced speed offset `v_a` against true speed `v_t` crosses
/// the speed-ratio JND.
pub fn is_speed_attack_detectable(v_a: f64, v_t: f64, th: &ThresholdSet) -> Result<bool> {
    if !(v_t > 0.0) {
        return Err(Error::InvalidParameter {
            name: "v_t",
            value: v_t,
        });
    }
    Ok(v_a / v_t >= th.speed_ratio_jnd)
}

/// Whether a rendered hand offset of `d` metres crosses the hand-offset JND.
pub fn is_hand_offset_detectable(d: f64, th: &ThresholdSet) -> bool {
    d >= th.hand_offset_jnd_m
}

/// Planar two-link arm pose, elbow-down branch.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ArmPose {
    /// Shoulder joint angle, rad.
    pub shoulder_rad: f64,
    /// Elbow joint angle, rad (0 = fully extended).
    pub elbow_rad: f64,
    pub upper_arm_m: f64,
    pub forearm_m: f64,
    /// Wrist position reproduced by the joint angles, metres.
    pub wrist_m: [f64; 2],
}

impl ArmPose {
    /// Forward kinematics from the stored joint angles.
    pub fn forward(&self) -> [f64; 2] {
        let x = self.upper_arm_m * self.shoulder_rad.cos()
            + self.forearm_m * (self.shoulder_rad + self.elbow_rad).cos();
        let y = self.upper_arm_m * self.shoulder_rad.sin()
            + self.forearm_m * (self.shoulder_rad + self.elbow_rad).sin();
        [x, y]
    }
}

/// Two-link planar inverse kinematics, elbow-down branch.
///
/// `elbow = 0` is the fully extended arm; targets beyond `l1 + l2` are a
/// reach error.
pub fn arm_ik(wrist_target: [f64; 2], l1: f64, l2: f64) -> Result<ArmPose> {
    if !(l1 > 0.0) {
        return Err(Error::InvalidParameter {
            name: "l1",
            value: l1,
        });
    }
    if !(l2 > 0.0) {
        return Err(Error::InvalidParameter {
            name: "l2",
            value: l2,
        });
    }
    let [x, y] = wrist_target;
    let d2 = x * x + y * y;
    let d = d2.sqrt();
    if d > l1 + l2 {
        return Err(Error::Unreachable {
            distance: d,
            max_reach: l1 + l2,
        });
    }
    let cos_elbow = ((d2 - l1 * l1 - l2 * l2) / (2.0 * l1 * l2)).clamp(-1.0, 1.0);
    let elbow = cos_elbow.acos(); // elbow-down keeps the positive branch
    let shoulder = y.atan2(x) - (l2 * elbow.sin()).atan2(l1 + l2 * elbow.cos());
    Ok(ArmPose {
        shoulder_rad: shoulder,
        elbow_rad: elbow,
        upper_arm_m: l1,
        forearm_m: l2,
        wrist_m: wrist_target,
    })
}

/// Per-frame (horizontal flow, vertical flow, disparity) triples.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct DizzinessCloud {
    /// Horizontal optical-flow speed per frame, px/frame.
    pub h_flow: Vec<f64>,
    /// Vertical optical-flow speed per frame, px/frame.
    pub v_flow: Vec<f64>,
    /// Disparity proxy per frame, px.
    pub disparity: Vec<f64>,
}

impl DizzinessCloud {
    pub fn len(&self) -> usize {
        self.h_flow.len()
    }

    pub fn is_empty(&self) -> bool {
        self.h_flow.is_empty()
    }

    /// Reads `frame,h_flow,v_flow,disparity` rows.
    pub fn read_csv<R: BufRead>(r: R) -> Result<Self> {
        let mut cloud = DizzinessCloud::default();
        for (lineno, line) in r.lines().enumerate() {
            let line = line?;
            let line = line.trim();
            if lineno == 0 || line.is_empty() {
                continue;
            }
            let cols: Vec<&str> = line.split(',').collect();
            if cols.len() != 4 {
                return Err(Error::Parse {
                    line: lineno + 1,
                    message: format!("expected 4 columns, got {}", cols.len()),
                });
            }
            let parse = |s: &str| -> Result<f64> {
                let v: f64 = s.trim().parse().map_err(|_| Error::Parse {
                    line: lineno + 1,
                    message: format!("bad number `{s}`"),
                })?;
                if !v.is_finite() {
                    return Err(Error::NonFinite { name: "cloud" });
                }
                Ok(v)
            };
            cloud.h_flow.push(parse(cols[1])?);
            cloud.v_flow.push(parse(cols[2])?);
            cloud.disparity.push(parse(cols[3])?);
        }
        Ok(cloud)
    }

    /// Writes `frame,h_flow,v_flow,disparity` rows.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "frame,h_flow,v_flow,disparity")?;
        for i in 0..self.len() {
            writeln!(
                w,
                "{},{:.8e},{:.8e},{:.8e}",
                i, self.h_flow[i], self.v_flow[i], self.disparity[i]
            )?;
        }
        Ok(())
    }

    /// One-line JSON summary of the dispersion score.
    pub fn score_summary_json(&self, weights: [f64; 3]) -> String {
        format!(
            r#"{{"frames":{},"weights":[{},{},{}],"dispersion_score":{:.9e}}}"#,
            self.len(),
            weights[0],
            weights[1],
            weights[2],
            dispersion_score(self, weights)
        )
    }
}

/// Default dispersion weights: horizontal flow is the dominant sickness
/// driver, so it carries double weight.
pub const DEFAULT_DIZZINESS_WEIGHTS: [f64; 3] = [2.0, 1.0, 1.0];

/// Builds flow/disparity triples from display-position and depth streams.
///
/// Flows are per-frame first differences of the display position; the
/// depth stream passes through as the disparity proxy (skipping its first
/// sample so the triples stay frame-aligned).
pub fn dizziness_triples(
    display_x: &SampleSeries,
    display_y: &SampleSeries,
    depth: &SampleSeries,
) -> Result<DizzinessCloud> {
    display_x.check_aligned(display_y)?;
    display_x.check_aligned(depth)?;
    let n = display_x.len();
    let mut cloud = DizzinessCloud::default();
    for i in 1..n {
        cloud
            .h_flow
            .push(display_x.values[i] - display_x.values[i - 1]);
        cloud
            .v_flow
            .push(display_y.values[i] - display_y.values[i - 1]);
        cloud.disparity.push(depth.values[i]);
    }
    Ok(cloud)
}

fn variance(values: &[f64]) -> f64 {
    let n = values.len() as f64;
    if n == 0.0 {
        return 0.0;
    }
    let mean = values.iter().sum::<f64>() / n;
    values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n
}

/// Weighted standard-deviation norm of the cloud:
/// `sqrt(w_h var(h) + w_v var(v) + w_d var(d))`.
///
/// Zero exactly when every triple is constant; homogeneous of degree one
/// under scaling of the triples.
pub fn dispersion_score(cloud: &DizzinessCloud, weights: [f64; 3]) -> f64 {
    (weights[0] * variance(&cloud.h_flow)
        + weights[1] * variance(&cloud.v_flow)
        + weights[2] * variance(&cloud.disparity))
    .sqrt()
}

/// [`dispersion_score`] with the disparity channel scored as its
/// reciprocal, so spread among distant content (small disparity, the
/// riskier motion) weighs more than the same spread among near content.
/// Disparities below `floor_px` clamp to it first. Off by default in the
/// pipelines; the plain variant is the primary metric.
pub fn dispersion_score_inverse_disparity(
    cloud: &DizzinessCloud,
    weights: [f64; 3],
    floor_px: f64,
) -> f64 {
    let inv: Vec<f64> = cloud
        .disparity
        .iter()
        .map(|d| 1.0 / d.max(floor_px))
        .collect();
    (weights[0] * variance(&cloud.h_flow)
        + weights[1] * variance(&cloud.v_flow)
        + weights[2] * variance(&inv))
    .sqrt()
}
