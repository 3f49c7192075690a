#!/usr/bin/env python3
"""
Tests for the particle swarm: single steps, convergence and the hybrid, refine
and pose-only searches
"""

from dataclasses import replace

import numpy as np
import pytest

from hand_retarget.energy import EnergyWeights, e_pose, e_task
from hand_retarget.errors import ConfigurationError
from hand_retarget.hand_kinematics import (
    ACTION_DIM, ActuatorVector, forward_kinematics, forward_kinematics_batch, scale_factor,
)
from hand_retarget.ik_baseline import ik_retarget
from hand_retarget.optimizer import (
    SwarmConfig, hybrid_pso, hybrid_pso_result, init_swarm, pose_pso, pso_step, run_swarm,
    seed_around, task_refine,
)
from hand_retarget.scene import ContactConfig, HandPoints, contact_distances
from hand_retarget.synth import SynthConfig, solve_grasp


def sphere(positions):
    return np.sum(positions * positions, axis=-1)


def flat(positions):
    return np.ones(len(positions))


def _source(spec):
    """A slightly curled hand above the default cube, in a larger source domain"""
    action = np.zeros(ACTION_DIM)
    action[:3] = [-0.05, 0.0, 0.08]
    action[6 + 8] = 0.4
    action[6 + 12] = 0.4
    return forward_kinematics(spec, action).scaled(1.1)


def _grasp(spec, scene):
    return solve_grasp(scene, spec, SynthConfig(), ContactConfig())


def _contacts(spec, scene, a, w):
    hand = HandPoints.from_state(forward_kinematics_batch(spec, a.values))
    return contact_distances(hand.palm_center, hand.fingertips, scene, w.d_max, w.omega_cost)



# ============================================================================
# Swarm mechanics
# ============================================================================

def test_pso_step_fixed_point(rng):
    """With c1 = c2 = 0, w = 1 and zero velocity nothing moves"""
    cfg = SwarmConfig(c1=0.0, c2=0.0, inertia=1.0)
    swarm = init_swarm(rng.uniform(-1, 1, size=(10, 29)), sphere)
    stepped = pso_step(swarm, sphere, cfg, np.full(29, 0.5), rng)
    np.testing.assert_array_equal(stepped.positions, swarm.positions)
    np.testing.assert_array_equal(stepped.best_positions, swarm.best_positions)
    np.testing.assert_array_equal(stepped.global_best_position, swarm.global_best_position)
    assert stepped.global_best_fitness == swarm.global_best_fitness


def test_velocity_clamped(rng):
    cfg = SwarmConfig(c1=2.0, c2=2.0, inertia=1.0)
    swarm = init_swarm(rng.uniform(-10, 10, size=(20, 29)), sphere)
    v_max = np.full(29, 0.01)
    stepped = pso_step(swarm, sphere, cfg, v_max, rng)
    assert np.all(np.abs(stepped.velocities) <= v_max)


def test_global_best_ties_take_lowest_index():
    positions = np.arange(12, dtype=float).reshape(4, 3)
    swarm = init_swarm(positions, lambda p: np.zeros(len(p)))
    np.testing.assert_array_equal(swarm.global_best_position, positions[0])


def test_non_finite_fitness_resets_particle(rng):
    """A particle scored NaN goes back to its personal best with zero velocity"""
    cfg = SwarmConfig()
    swarm = init_swarm(rng.uniform(-1, 1, size=(5, 29)), sphere)

    def poisoned(positions):
        fit = sphere(positions)
        fit[2] = np.nan
        return fit

    stepped = pso_step(swarm, poisoned, cfg, np.full(29, 0.2), rng)
    np.testing.assert_array_equal(stepped.positions[2], swarm.best_positions[2])
    assert np.all(stepped.velocities[2] == 0.0)
    assert np.isfinite(stepped.global_best_fitness)


def test_particles_track_personal_bests(rng):
    """Each particle's personal best is never worse than its current position nor better than the global best"""
    cfg = SwarmConfig()
    swarm = init_swarm(rng.uniform(-1, 1, size=(6, 29)), sphere)
    for _ in range(4):
        swarm = pso_step(swarm, sphere, cfg, np.full(29, 0.2), rng)
    particles = swarm.particles()
    assert len(particles) == swarm.size == 6
    for i, p in enumerate(particles):
        assert p.position.shape == p.velocity.shape == p.personal_best_position.shape == (29,)
        assert p.personal_best_fitness == pytest.approx(sphere(p.personal_best_position[None])[0])
        assert p.personal_best_fitness <= sphere(p.position[None])[0]
        assert swarm.global_best_fitness <= p.personal_best_fitness
        np.testing.assert_array_equal(p.position, swarm.positions[i])
    best = min(particles, key=lambda p: p.personal_best_fitness)
    np.testing.assert_array_equal(best.personal_best_position, swarm.global_best_position)


def test_sphere_convergence():
    """29-D sphere: under 1e-3 of the initial best within 200 iterations, 5 of 5 seeds"""
    cfg = SwarmConfig(swarm_size=25, iterations=200, inertia=0.6, c1=1.7, c2=1.7, stall_patience=1000)
    v_max = np.full(29, 10.0)
    for seed in range(5):
        initial = np.random.default_rng(seed).uniform(-5.0, 5.0, size=(25, 29))
        result = run_swarm(initial, sphere, cfg, v_max, np.random.default_rng([seed, 1]))
        assert result.best_fitness < 1e-3 * result.initial_best_fitness

        again = run_swarm(initial, sphere, cfg, v_max, np.random.default_rng([seed, 1]))
        assert again.best_fitness == result.best_fitness


def test_global_best_monotone(rng):
    cfg = SwarmConfig(iterations=60, stall_patience=1000)
    result = run_swarm(rng.uniform(-3, 3, size=(15, 29)), sphere, cfg, np.full(29, 1.0), rng)
    assert all(b <= a for a, b in zip(result.history, result.history[1:]))


def test_early_exit_on_stall():
    """With the default config a flat objective stops after one iteration"""
    rng = np.random.default_rng(0)
    initial = rng.uniform(-1, 1, size=(5, 29))
    result = run_swarm(initial, flat, SwarmConfig(), np.full(29, 0.1), rng)
    assert result.iterations_run == 1


def test_stall_patience_is_configurable():
    rng = np.random.default_rng(0)
    cfg = SwarmConfig(iterations=50, stall_patience=3)
    result = run_swarm(rng.uniform(-1, 1, size=(5, 29)), flat, cfg, np.full(29, 0.1), rng)
    assert result.iterations_run == 3


def test_seed_around(rng):
    center = rng.uniform(-1, 1, size=29)
    delta = np.full(29, 0.05)
    seeded = seed_around(center, delta, 25, rng)
    np.testing.assert_array_equal(seeded[0], center)
    assert np.all(np.abs(seeded - center) <= delta)


def test_swarm_config_validation():
    with pytest.raises(ConfigurationError):
        SwarmConfig(swarm_size=0)
    with pytest.raises(ConfigurationError):
        SwarmConfig(iterations=-1)
    with pytest.raises(ConfigurationError):
        SwarmConfig(global_span=(0.1, 0.1))


# ============================================================================
# Hybrid, refine and pose-only search
# ============================================================================

def test_hybrid_degenerates_to_ik(spec, scene, rng):
    """iterations = 0 and no seeding noise return exactly the IK pose"""
    x = _source(spec)
    cfg = SwarmConfig(iterations=0, init_noise_fraction=0.0)
    hybrid = hybrid_pso(x, scene, spec, EnergyWeights(), cfg, rng=rng)
    ik = ik_retarget(x.scaled(scale_factor(x, spec.rest)), spec)
    np.testing.assert_array_equal(hybrid.values, ik.values)


def test_hybrid_bounded_deviation(spec, scene, rng):
    """The best particle stays within delta + T * v_max of the IK pose"""
    x = _source(spec)
    cfg = SwarmConfig(swarm_size=10, iterations=8, stall_patience=1000)
    result = hybrid_pso_result(x, scene, spec, EnergyWeights(), cfg, rng=rng)
    prior = ik_retarget(x.scaled(scale_factor(x, spec.rest)), spec).values
    bound = cfg.init_noise(spec) + result.iterations_run * cfg.v_max(spec)
    assert np.all(np.abs(result.best_position - prior) <= bound + 1e-12)


def test_hybrid_not_worse_than_ik(spec, scene, rng):
    """Particle 0 sits on the IK pose, so the result never scores worse"""
    x = _source(spec)
    cfg = SwarmConfig(swarm_size=10, iterations=10)
    result = hybrid_pso_result(x, scene, spec, EnergyWeights(), cfg, rng=rng)
    assert result.best_fitness <= result.initial_best_fitness
    assert result.history[0] == result.initial_best_fitness


def test_hybrid_reproducible(spec, scene):
    x = _source(spec)
    cfg = SwarmConfig(swarm_size=8, iterations=5, rng_seed=7)
    first = hybrid_pso(x, scene, spec, EnergyWeights(), cfg)
    second = hybrid_pso(x, scene, spec, EnergyWeights(), cfg)
    np.testing.assert_array_equal(first.values, second.values)


def test_task_refine_does_not_increase_task_energy(spec, scene, rng):
    w = EnergyWeights()
    x = _source(spec)
    current = ik_retarget(x.scaled(scale_factor(x, spec.rest)), spec)
    refined = task_refine(scene, current, spec, w, SwarmConfig(swarm_size=10, iterations=10), rng)
    assert e_task(_contacts(spec, scene, refined, w), w) <= e_task(_contacts(spec, scene, current, w), w) + 1e-12


def test_hybrid_pulls_hovering_hand_onto_object(spec, scene):
    """
    Grasp-shaped hand held 0.02 m above its grasp: the search keeps at least
    two contact points within d_max and lowers the task energy below the IK
    pose's, majority over 5 seeds
    """
    w = EnergyWeights()
    hover = _grasp(spec, scene)
    hover[2] += 0.02
    x = forward_kinematics(spec, hover)
    ik = ik_retarget(x.scaled(scale_factor(x, spec.rest)), spec)
    ik_task = e_task(_contacts(spec, scene, ik, w), w)

    wins = 0
    for seed in range(5):
        a = hybrid_pso(x, scene, spec, w, SwarmConfig(swarm_size=25, iterations=50),
                       rng=np.random.default_rng(seed))
        contacts = _contacts(spec, scene, a, w)
        wins += int(np.sum(~contacts.missing) >= 2 and e_task(contacts, w) < ik_task)
    assert wins >= 3


def test_task_refine_closes_fingertip_gap(spec, scene):
    """Index tip 0.01 m off the cube's +x face gets closer, 5 of 5 seeds"""
    w = EnergyWeights()
    grasp = _grasp(spec, scene)
    tip = HandPoints.from_state(forward_kinematics_batch(spec, grasp)).fingertips[1]
    grasp[0] += scene.aabb()[1][0] + 0.01 - tip[0]
    current = ActuatorVector(grasp)
    start = _contacts(spec, scene, current, w).raw[2]
    assert start == pytest.approx(0.01, abs=1e-9)

    for seed in range(5):
        refined = task_refine(scene, current, spec, w, SwarmConfig(), np.random.default_rng(seed))
        assert _contacts(spec, scene, refined, w).raw[2] < start


def test_task_refine_out_of_reach_keeps_pose(spec, scene, rng):
    """Every particle misses a far object, so E_task stays 1 and the pose stays put"""
    w = EnergyWeights()
    far = replace(scene, position=np.array([1.0, 0.0, 0.03]))
    x = _source(spec)
    current = ik_retarget(x.scaled(scale_factor(x, spec.rest)), spec)
    cfg = SwarmConfig()
    refined = task_refine(far, current, spec, w, cfg, rng)

    assert e_task(_contacts(spec, far, refined, w), w) == 1.0
    assert np.all(np.abs(refined.values - current.values) <= cfg.init_noise(spec))


def test_pose_pso_within_limits(spec, rng):
    x = _source(spec)
    w = EnergyWeights(omega_pose=1.0, omega_task=0.0)
    cfg = SwarmConfig(swarm_size=15, iterations=15)
    a = pose_pso(x, spec, w, cfg, rng)
    assert np.all(a.joints >= spec.lower) and np.all(a.joints <= spec.upper)
    assert np.isfinite(e_pose(x, forward_kinematics(spec, a), w))
