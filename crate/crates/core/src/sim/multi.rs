//! Multi-source scenario: independent explorer agents with per-agent
//! supervisors, virtual-velocity exploration, and a shared registry of
//! explored areas whose writes land at the end of each step.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::acoustics::{array_intensities, AcousticWorld, MicrophoneArray};
use crate::config::{ScenarioConfig, ScenarioKind};
use crate::estimation::{sample_doa, sample_step};
use crate::exploration::{
    array_doa, array_step, exploration_heading, score_detections, update_virtual_velocity,
    ExploredAreaRegistry,
};
use crate::formation::{pd_tracking_control, ReferenceState};
use crate::hybrid::SupervisorState;
use crate::sim::metrics::{
    DetectionRecord, EventKind, MovementPhaseRecord, RunMetrics, SimEvent, TrajectorySample,
};
use crate::sim::{integrate_step, AgentBody, RunOptions, SimClock, SimError};
use crate::vec2::Vec2;

enum ExplorerPhase {
    Listening,
    Cruising {
        reference: ReferenceState,
        step_target: f64,
    },
    Braking,
}

struct Explorer {
    body: AgentBody,
    supervisor: SupervisorState,
    phase: ExplorerPhase,
    virtual_velocity: Vec2,
    hold: Vec2,
}

pub fn run_multi_source(config: &ScenarioConfig, seed: u64) -> Result<RunMetrics, SimError> {
    run_multi_source_with(config, seed, RunOptions::default())
}

pub fn run_multi_source_with(
    config: &ScenarioConfig,
    seed: u64,
    options: RunOptions,
) -> Result<RunMetrics, SimError> {
    if config.scenario != ScenarioKind::Multi {
        return Err(SimError::ScenarioMismatch {
            expected: ScenarioKind::Multi,
            found: config.scenario,
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // Target placement consumes the first draws of the run's stream.
    let sources = config.resolve_sources(&mut rng);
    let world = AcousticWorld::new(sources.clone())?;
    let noise = config.noise_model();
    let thresholds = config.switch_thresholds();
    let gains = config.gain_set();
    let params = config.exploration_params();
    let array_radius = config.acoustics.array_radius;
    let dt = config.dt_s;
    let total_steps = (config.duration_s / dt).round() as u64;
    let decimation = config.trajectory_decimation as u64;

    let mut explorers: Vec<Explorer> = config
        .agent_positions()
        .into_iter()
        .map(|p| Explorer {
            body: AgentBody::at_rest(p),
            supervisor: SupervisorState::start(p, &noise),
            phase: ExplorerPhase::Listening,
            virtual_velocity: Vec2::ZERO,
            hold: p,
        })
        .collect();

    let mut registry = ExploredAreaRegistry::new();
    let mut pending_detections: Vec<(usize, Vec2)> = Vec::new();
    let mut clock = SimClock::new(dt);
    let mut events: Vec<SimEvent> = explorers
        .iter()
        .enumerate()
        .map(|(i, e)| SimEvent {
            step: 0,
            time_s: 0.0,
            unit: i,
            kind: EventKind::ListenStart,
            position: e.body.position,
            payload: 0.0,
        })
        .collect();
    let mut detections: Vec<DetectionRecord> = Vec::new();
    let mut movement_phases: Vec<MovementPhaseRecord> = Vec::new();
    let mut trajectories: Vec<TrajectorySample> = Vec::new();
    let mut mode_switches: usize = 0;

    while clock.step() < total_steps {
        for (idx, ex) in explorers.iter_mut().enumerate() {
            match &mut ex.phase {
                ExplorerPhase::Listening => {
                    let array = MicrophoneArray::new(ex.body.position, array_radius)
                        .expect("finite agent position");
                    let channels = array_intensities(&world, &array);
                    // A flat field (deep near-field or exact symmetry) gives
                    // no direction; skip the measurement for this step.
                    if let Ok(doa_truth) = array_doa(&channels, &array.positions()) {
                        let step_truth = array_step(&channels, params.step_scale);
                        let step_meas = sample_step(&mut rng, step_truth, noise.step_variance);
                        let doa_meas = sample_doa(&mut rng, doa_truth, noise.doa_concentration);
                        ex.supervisor.listening_step(step_meas, doa_meas)?;
                        if ex.supervisor.should_start_moving(&thresholds) {
                            let step_mean = ex.supervisor.step_estimate().mean();
                            let doa_mean = ex.supervisor.doa_estimate().mean();
                            if step_mean <= params.detection_step_threshold {
                                pending_detections.push((idx, ex.body.position));
                            }
                            // The update sees the registry as of the start of
                            // this step; writes land once all agents moved.
                            ex.virtual_velocity = update_virtual_velocity(
                                ex.virtual_velocity,
                                ex.body.position,
                                &registry,
                                step_mean,
                                doa_mean,
                                &params,
                                &mut rng,
                            );
                            let step_target =
                                params.switch_time * ex.virtual_velocity.norm();
                            let reference = match exploration_heading(ex.virtual_velocity) {
                                Some(heading) => ReferenceState::cruise(
                                    ex.body.position,
                                    heading,
                                    gains.cruise_speed,
                                ),
                                None => ReferenceState::hold(ex.body.position),
                            };
                            ex.supervisor.start_moving();
                            ex.phase = ExplorerPhase::Cruising {
                                reference,
                                step_target,
                            };
                            mode_switches += 1;
                            events.push(SimEvent {
                                step: clock.step(),
                                time_s: clock.time_s(),
                                unit: idx,
                                kind: EventKind::MoveStart,
                                position: ex.body.position,
                                payload: step_target,
                            });
                        }
                    }
                }
                ExplorerPhase::Cruising { step_target, .. } => {
                    if ex
                        .supervisor
                        .should_start_listening(ex.body.position, *step_target)
                    {
                        movement_phases.push(MovementPhaseRecord {
                            unit: idx,
                            step_target: *step_target,
                            traveled: ex
                                .body
                                .position
                                .distance(ex.supervisor.measurement_anchor()),
                        });
                        ex.hold = ex.body.position;
                        ex.phase = ExplorerPhase::Braking;
                    }
                }
                ExplorerPhase::Braking => {
                    // Same settle rule as the formation engine: the speed
                    // test alone can fire at the overshoot apex, so also
                    // require the hold residual to be small enough that the
                    // remaining swing stays below the settle speed.
                    let position_tolerance = thresholds.settle_speed
                        * crate::sim::single::SETTLE_POSITION_WINDOW_S;
                    let settled = ex.body.speed() < thresholds.settle_speed
                        && ex.body.position.distance(ex.hold) < position_tolerance;
                    if settled {
                        let traveled = ex
                            .body
                            .position
                            .distance(ex.supervisor.measurement_anchor());
                        ex.supervisor.start_listening(ex.body.position);
                        debug_assert!(!ex.supervisor.should_start_moving(&thresholds));
                        // Hold at the settle point so the agent cannot creep
                        // away from the anchor while listening.
                        ex.hold = ex.body.position;
                        ex.phase = ExplorerPhase::Listening;
                        mode_switches += 1;
                        events.push(SimEvent {
                            step: clock.step(),
                            time_s: clock.time_s(),
                            unit: idx,
                            kind: EventKind::ListenStart,
                            position: ex.body.position,
                            payload: traveled,
                        });
                    }
                }
            }

            let acceleration = match &mut ex.phase {
                ExplorerPhase::Listening | ExplorerPhase::Braking => pd_tracking_control(
                    ex.body.position,
                    ex.body.velocity,
                    &ReferenceState::hold(ex.hold),
                    gains.leader_kp,
                    gains.leader_kd,
                ),
                ExplorerPhase::Cruising { reference, .. } => {
                    reference.advance(dt);
                    pd_tracking_control(
                        ex.body.position,
                        ex.body.velocity,
                        reference,
                        gains.leader_kp,
                        gains.leader_kd,
                    )
                }
            };
            if !acceleration.is_finite() {
                return Err(SimError::NonFiniteAcceleration {
                    agent: idx,
                    step: clock.step(),
                });
            }
            ex.body = integrate_step(ex.body, acceleration, dt);
        }

        // Registry writes apply in agent order at the end of the step, so
        // every agent saw the same snapshot during the step.
        for (agent, position) in pending_detections.drain(..) {
            let outcome =
                registry.register_detection(position, params.area_growth, params.initial_area_radius);
            detections.push(DetectionRecord {
                step: clock.step(),
                time_s: clock.time_s(),
                agent,
                position,
                area: outcome.area_index(),
                new_area: outcome.is_new(),
            });
            events.push(SimEvent {
                step: clock.step(),
                time_s: clock.time_s(),
                unit: agent,
                kind: EventKind::Detection,
                position,
                payload: outcome.area_index() as f64,
            });
        }

        clock.advance();
        if options.emit_trajectories && clock.step().is_multiple_of(decimation) {
            for (i, ex) in explorers.iter().enumerate() {
                let s = &ex.supervisor;
                trajectories.push(TrajectorySample {
                    step: clock.step(),
                    time_s: clock.time_s(),
                    agent: i,
                    position: ex.body.position,
                    velocity: ex.body.velocity,
                    mode: s.mode(),
                    step_mean: s.step_estimate().mean(),
                    step_variance: s.step_estimate().variance(),
                    doa_mean: s.doa_estimate().mean(),
                    doa_concentration: s.doa_estimate().concentration(),
                });
            }
        }
    }

    let detection_points: Vec<Vec2> = detections.iter().map(|d| d.position).collect();
    let true_positions: Vec<Vec2> = sources.iter().map(|s| s.position()).collect();
    let located = score_detections(&detection_points, &true_positions, params.scoring_radius);

    Ok(RunMetrics {
        scenario: ScenarioKind::Multi,
        seed,
        duration_s: config.duration_s,
        dt_s: dt,
        t_s: None,
        listening_time_to_ts_s: None,
        listening_phases_to_ts: None,
        final_centroid_distance: None,
        max_bearing_error_after_transient: None,
        sources_located: Some(located),
        detections,
        events,
        movement_phases,
        centroid_distance_series: Vec::new(),
        trajectories,
        mode_switches,
        true_sources: true_positions,
        explored_areas: registry.areas().to_vec(),
    })
}
