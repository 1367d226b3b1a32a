//! Single-source scenario: the four-agent bearing-rigid formation drives its
//! centroid onto the one source, alternating listening and movement phases
//! under a shared supervisor.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::acoustics::{omni_intensity, AcousticWorld, MicrophoneArray};
use crate::config::{ScenarioConfig, ScenarioKind};
use crate::estimation::{sample_doa, sample_step};
use crate::formation::{
    bearing, follower_control, formation_doa, formation_step, pd_tracking_control,
    FormationError, FormationGraph, ReferenceState,
};
use crate::hybrid::SupervisorState;
use crate::sim::metrics::{
    ConvergenceTracker, EventKind, MovementPhaseRecord, RunMetrics, SimEvent, TrajectorySample,
};
use crate::sim::{integrate_step, AgentBody, RunOptions, SimClock, SimError};
use crate::vec2::Vec2;

/// Radius around the target within which the centroid must stay for the run
/// to count as converged.
pub const CONVERGENCE_RADIUS_M: f64 = 0.05;

/// Seconds excluded from the bearing-error maximum to let the initial
/// transient die out.
pub const BEARING_TRANSIENT_S: f64 = 5.0;

/// Position residual allowed when declaring a braking unit settled, as a
/// multiple of `settle_speed * 1 s`. A pure speed test can fire at the apex
/// of the braking overshoot where the velocity reverses through zero; the
/// unit then drifts during listening as the hold loop swings back. Bounding
/// the residual keeps the post-settle swing speed under `settle_speed`
/// (release from rest at offset e peaks near e / 1 s with the default
/// gains), so agents are genuinely still while listening.
pub const SETTLE_POSITION_WINDOW_S: f64 = 0.5;

const AGENTS: usize = 4;

enum Phase {
    Listening,
    Cruising {
        references: Vec<ReferenceState>,
        step_target: f64,
    },
    Braking,
}

pub fn run_single_source(config: &ScenarioConfig, seed: u64) -> Result<RunMetrics, SimError> {
    run_single_source_with(config, seed, RunOptions::default())
}

pub fn run_single_source_with(
    config: &ScenarioConfig,
    seed: u64,
    options: RunOptions,
) -> Result<RunMetrics, SimError> {
    if config.scenario != ScenarioKind::Single {
        return Err(SimError::ScenarioMismatch {
            expected: ScenarioKind::Single,
            found: config.scenario,
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sources = config.resolve_sources(&mut rng);
    let target = sources[0].position();
    let world = AcousticWorld::new(sources.clone())?;
    let noise = config.noise_model();
    let thresholds = config.switch_thresholds();
    let gains = config.gain_set();
    let layout = config.agent_positions();
    let leaders = config.leader_indices();
    let graph = FormationGraph::complete_from_positions(&layout, &leaders)?;
    let doa_edges = config.doa_edge_indices();
    let array_radius = config.acoustics.array_radius;
    let dt = config.dt_s;
    let total_steps = (config.duration_s / dt).round() as u64;
    let transient_steps = (BEARING_TRANSIENT_S / dt).round() as u64;
    let decimation = config.trajectory_decimation as u64;

    let mut bodies: [AgentBody; AGENTS] =
        std::array::from_fn(|i| AgentBody::at_rest(layout[i]));
    let mut hold: [Vec2; AGENTS] = std::array::from_fn(|i| layout[i]);
    let centroid0 = centroid(&bodies);
    let mut supervisor = SupervisorState::start(centroid0, &noise);
    let mut phase = Phase::Listening;

    let mut clock = SimClock::new(dt);
    let mut events = vec![SimEvent {
        step: 0,
        time_s: 0.0,
        unit: 0,
        kind: EventKind::ListenStart,
        position: centroid0,
        payload: 0.0,
    }];
    let mut movement_phases: Vec<MovementPhaseRecord> = Vec::new();
    let mut tracker = ConvergenceTracker::new(CONVERGENCE_RADIUS_M);
    let mut listening_steps: u64 = 0;
    let mut listening_phases: usize = 1;
    let mut mode_switches: usize = 0;
    let mut max_bearing_error: f64 = 0.0;
    let mut series: Vec<(f64, f64)> = Vec::new();
    let mut trajectories: Vec<TrajectorySample> = Vec::new();

    while clock.step() < total_steps {
        let positions: [Vec2; AGENTS] = std::array::from_fn(|i| bodies[i].position);
        let center = centroid(&bodies);

        match &mut phase {
            Phase::Listening => {
                let omni: [f64; AGENTS] = std::array::from_fn(|i| {
                    let array = MicrophoneArray::new(positions[i], array_radius)
                        .expect("finite agent position");
                    omni_intensity(&world, &array)
                });
                match formation_doa(&omni, &positions, &doa_edges) {
                    Ok(doa_truth) => {
                        let step_truth = formation_step(&omni, gains.step_scale);
                        let step_meas = sample_step(&mut rng, step_truth, noise.step_variance);
                        let doa_meas = sample_doa(&mut rng, doa_truth, noise.doa_concentration);
                        supervisor.listening_step(step_meas, doa_meas)?;
                        listening_steps += 1;
                        if supervisor.should_start_moving(&thresholds) {
                            // Negative estimates mean "do not move": latch a
                            // zero-length phase rather than a negative target.
                            let step_target = supervisor.step_estimate().mean().max(0.0);
                            let heading = supervisor.doa_estimate().mean();
                            supervisor.start_moving();
                            let references = leaders
                                .iter()
                                .map(|&l| {
                                    ReferenceState::cruise(
                                        positions[l],
                                        heading,
                                        gains.cruise_speed,
                                    )
                                })
                                .collect();
                            phase = Phase::Cruising {
                                references,
                                step_target,
                            };
                            mode_switches += 1;
                            events.push(SimEvent {
                                step: clock.step(),
                                time_s: clock.time_s(),
                                unit: 0,
                                kind: EventKind::MoveStart,
                                position: center,
                                payload: step_target,
                            });
                        }
                    }
                    // A perfectly balanced field carries no directional
                    // information; skip the measurement for this step.
                    Err(FormationError::NoSignal) => {}
                    Err(e) => return Err(e.into()),
                }
            }
            Phase::Cruising { step_target, .. } => {
                if supervisor.should_start_listening(center, *step_target) {
                    movement_phases.push(MovementPhaseRecord {
                        unit: 0,
                        step_target: *step_target,
                        traveled: center.distance(supervisor.measurement_anchor()),
                    });
                    hold = positions;
                    phase = Phase::Braking;
                }
            }
            Phase::Braking => {
                let position_tolerance = thresholds.settle_speed * SETTLE_POSITION_WINDOW_S;
                let settled = bodies.iter().zip(&hold).all(|(b, &h)| {
                    b.speed() < thresholds.settle_speed
                        && b.position.distance(h) < position_tolerance
                });
                if settled {
                    let traveled = center.distance(supervisor.measurement_anchor());
                    supervisor.start_listening(center);
                    debug_assert!(!supervisor.should_start_moving(&thresholds));
                    // Hold exactly where the unit settled so it cannot creep
                    // away from the anchor during a long listening phase.
                    hold = positions;
                    listening_phases += 1;
                    mode_switches += 1;
                    phase = Phase::Listening;
                    events.push(SimEvent {
                        step: clock.step(),
                        time_s: clock.time_s(),
                        unit: 0,
                        kind: EventKind::ListenStart,
                        position: center,
                        payload: traveled,
                    });
                }
            }
        }

        let velocities: [Vec2; AGENTS] = std::array::from_fn(|i| bodies[i].velocity);
        let mut accelerations = [Vec2::ZERO; AGENTS];
        match &mut phase {
            Phase::Listening | Phase::Braking => {
                for i in 0..AGENTS {
                    accelerations[i] = pd_tracking_control(
                        positions[i],
                        velocities[i],
                        &ReferenceState::hold(hold[i]),
                        gains.leader_kp,
                        gains.leader_kd,
                    );
                }
            }
            Phase::Cruising { references, .. } => {
                for r in references.iter_mut() {
                    r.advance(dt);
                }
                for i in 0..AGENTS {
                    accelerations[i] = match leaders.iter().position(|&l| l == i) {
                        Some(slot) => pd_tracking_control(
                            positions[i],
                            velocities[i],
                            &references[slot],
                            gains.leader_kp,
                            gains.leader_kd,
                        ),
                        None => follower_control(
                            i,
                            &positions,
                            &velocities,
                            &graph,
                            gains.follower_kp,
                            gains.follower_kd,
                        ),
                    };
                }
            }
        }
        for (i, body) in bodies.iter_mut().enumerate() {
            if !accelerations[i].is_finite() {
                return Err(SimError::NonFiniteAcceleration {
                    agent: i,
                    step: clock.step(),
                });
            }
            *body = integrate_step(*body, accelerations[i], dt);
        }
        clock.advance();

        let distance = centroid(&bodies).distance(target);
        tracker.observe(
            clock.step(),
            distance,
            supervisor.mode(),
            listening_steps,
            listening_phases,
        );
        if clock.step() > transient_steps {
            for (i, j) in graph.edges() {
                let b = bearing(bodies[i].position, bodies[j].position)?;
                let err = (b - graph.desired_bearing(i, j)).norm();
                if err > max_bearing_error {
                    max_bearing_error = err;
                }
            }
        }
        if clock.step().is_multiple_of(decimation) {
            series.push((clock.time_s(), distance));
            if options.emit_trajectories {
                for (i, b) in bodies.iter().enumerate() {
                    trajectories.push(TrajectorySample {
                        step: clock.step(),
                        time_s: clock.time_s(),
                        agent: i,
                        position: b.position,
                        velocity: b.velocity,
                        mode: supervisor.mode(),
                        step_mean: supervisor.step_estimate().mean(),
                        step_variance: supervisor.step_estimate().variance(),
                        doa_mean: supervisor.doa_estimate().mean(),
                        doa_concentration: supervisor.doa_estimate().concentration(),
                    });
                }
            }
        }
    }

    let converged = tracker.finalize(dt);
    let final_distance = centroid(&bodies).distance(target);
    Ok(RunMetrics {
        scenario: ScenarioKind::Single,
        seed,
        duration_s: config.duration_s,
        dt_s: dt,
        t_s: converged.map(|c| c.0),
        listening_time_to_ts_s: converged.map(|c| c.1),
        listening_phases_to_ts: converged.map(|c| c.2),
        final_centroid_distance: Some(final_distance),
        max_bearing_error_after_transient: Some(max_bearing_error),
        sources_located: None,
        detections: Vec::new(),
        events,
        movement_phases,
        centroid_distance_series: series,
        trajectories,
        mode_switches,
        true_sources: sources.iter().map(|s| s.position()).collect(),
        explored_areas: Vec::new(),
    })
}

fn centroid(bodies: &[AgentBody; AGENTS]) -> Vec2 {
    let mut sum = Vec2::ZERO;
    for b in bodies {
        sum += b.position;
    }
    sum / AGENTS as f64
}
