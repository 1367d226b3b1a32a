//! Single-source machinery: bearing-rigid formation representation,
//! formation-level DoA/step estimation from per-agent intensities, and the
//! leader/follower control laws.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::estimation::normalize_angle;
use crate::vec2::Vec2;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FormationError {
    #[error("coincident agents: bearing is undefined")]
    CoincidentAgents,
    #[error("a formation needs at least two leaders (got {0})")]
    NotEnoughLeaders(usize),
    #[error("node index {index} out of range for {nodes} nodes")]
    NodeOutOfRange { index: usize, nodes: usize },
    #[error("all intensity differences vanish: no directional signal")]
    NoSignal,
    #[error("gain {name} must be > 0 (got {value})")]
    NonPositiveGain { name: &'static str, value: f64 },
}

/// Unit vector pointing from `from` toward `to`.
pub fn bearing(from: Vec2, to: Vec2) -> Result<Vec2, FormationError> {
    (to - from).normalized().ok_or(FormationError::CoincidentAgents)
}

/// Component of `v` orthogonal to the unit vector `unit`:
/// `(I - unit unit^T) v`.
pub fn project_orthogonal(unit: Vec2, v: Vec2) -> Vec2 {
    v - unit * unit.dot(v)
}

/// Complete-graph bearing-rigid formation with desired bearings taken from a
/// reference layout, plus the set of leader nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct FormationGraph {
    node_count: usize,
    // Desired bearing from i toward j for every ordered pair i != j,
    // flattened row-major with the diagonal unused.
    desired: Vec<Vec2>,
    leaders: Vec<usize>,
}

impl FormationGraph {
    /// Build the complete graph over `layout`, with desired bearings equal
    /// to the bearings of the layout itself.
    pub fn complete_from_positions(
        layout: &[Vec2],
        leaders: &[usize],
    ) -> Result<Self, FormationError> {
        let n = layout.len();
        if leaders.len() < 2 {
            return Err(FormationError::NotEnoughLeaders(leaders.len()));
        }
        for &l in leaders {
            if l >= n {
                return Err(FormationError::NodeOutOfRange { index: l, nodes: n });
            }
        }
        let mut desired = vec![Vec2::ZERO; n * n];
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    desired[i * n + j] = bearing(layout[i], layout[j])?;
                }
            }
        }
        Ok(FormationGraph {
            node_count: n,
            desired,
            leaders: leaders.to_vec(),
        })
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn leaders(&self) -> &[usize] {
        &self.leaders
    }

    pub fn is_leader(&self, index: usize) -> bool {
        self.leaders.contains(&index)
    }

    /// Desired bearing from `i` toward `j`. Antisymmetric by construction.
    pub fn desired_bearing(&self, i: usize, j: usize) -> Vec2 {
        debug_assert!(i != j && i < self.node_count && j < self.node_count);
        self.desired[i * self.node_count + j]
    }

    pub fn neighbors(&self, i: usize) -> impl Iterator<Item = usize> + '_ {
        (0..self.node_count).filter(move |&j| j != i)
    }

    /// Undirected edges `(i, j)` with `i < j`.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.node_count)
            .flat_map(move |i| (i + 1..self.node_count).map(move |j| (i, j)))
    }
}

/// Control gains for the single-source scenario.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GainSet {
    pub leader_kp: f64,
    pub leader_kd: f64,
    pub follower_kp: f64,
    pub follower_kd: f64,
    /// Reference speed while moving (m/s).
    pub cruise_speed: f64,
    /// Scale applied to inverse-intensity differences when estimating the
    /// step length.
    pub step_scale: f64,
}

impl GainSet {
    pub fn validated(self) -> Result<Self, FormationError> {
        let check = |name: &'static str, value: f64| {
            if value > 0.0 && value.is_finite() {
                Ok(())
            } else {
                Err(FormationError::NonPositiveGain { name, value })
            }
        };
        check("leader_kp", self.leader_kp)?;
        check("leader_kd", self.leader_kd)?;
        check("follower_kp", self.follower_kp)?;
        check("follower_kd", self.follower_kd)?;
        check("cruise_speed", self.cruise_speed)?;
        check("step_scale", self.step_scale)?;
        Ok(self)
    }
}

/// Direction of steepest intensity ascent seen by the formation.
///
/// Sums the intensity differences along the configured edge subset, each
/// weighted by the corresponding inter-agent bearing, and returns the angle
/// of the resulting vector. The edges must span the plane for the estimate
/// to be meaningful.
pub fn formation_doa(
    intensities: &[f64],
    positions: &[Vec2],
    doa_edges: &[(usize, usize)],
) -> Result<f64, FormationError> {
    let mut ascent = Vec2::ZERO;
    for &(i, j) in doa_edges {
        if i >= positions.len() || j >= positions.len() {
            return Err(FormationError::NodeOutOfRange {
                index: i.max(j),
                nodes: positions.len(),
            });
        }
        let b = bearing(positions[i], positions[j])?;
        ascent += b * (intensities[j] - intensities[i]);
    }
    if ascent == Vec2::ZERO {
        return Err(FormationError::NoSignal);
    }
    Ok(normalize_angle(ascent.angle()))
}

/// Step length committed for the next movement phase, from the two opposite
/// agent pairs of the four-agent formation. Shrinks with proximity to the
/// source, which keeps the formation from overshooting.
pub fn formation_step(intensities: &[f64; 4], step_scale: f64) -> f64 {
    let a = (1.0 / intensities[0] - 1.0 / intensities[2]).abs();
    let b = (1.0 / intensities[1] - 1.0 / intensities[3]).abs();
    step_scale * a.max(b)
}

/// Position/velocity reference tracked by the PD law.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReferenceState {
    pub position: Vec2,
    pub velocity: Vec2,
}

impl ReferenceState {
    /// Constant-velocity reference: speed `speed` along `heading`.
    pub fn cruise(position: Vec2, heading: f64, speed: f64) -> Self {
        ReferenceState {
            position,
            velocity: Vec2::from_angle(heading) * speed,
        }
    }

    /// Stationary reference (position hold).
    pub fn hold(position: Vec2) -> Self {
        ReferenceState {
            position,
            velocity: Vec2::ZERO,
        }
    }

    pub fn advance(&mut self, dt: f64) {
        self.position += self.velocity * dt;
    }
}

/// PD tracking law used by leaders (and by every agent while holding
/// position): acceleration from the position and velocity errors.
pub fn pd_tracking_control(
    position: Vec2,
    velocity: Vec2,
    reference: &ReferenceState,
    kp: f64,
    kd: f64,
) -> Vec2 {
    (reference.velocity - velocity) * kd + (reference.position - position) * kp
}

/// Bearing-maintenance law for followers: for each neighbor, the relative
/// position/velocity feedback is projected onto the subspace orthogonal to
/// the desired bearing, so motion along the bearing is left free.
pub fn follower_control(
    index: usize,
    positions: &[Vec2],
    velocities: &[Vec2],
    graph: &FormationGraph,
    kp: f64,
    kd: f64,
) -> Vec2 {
    let mut control = Vec2::ZERO;
    for j in graph.neighbors(index) {
        let feedback = (velocities[index] - velocities[j]) * kd
            + (positions[index] - positions[j]) * kp;
        control += project_orthogonal(graph.desired_bearing(index, j), feedback);
    }
    -control
}
