"""
hand_retarget - hand motion retargeting with IK-seeded particle swarm optimisation

Maps noisy 21-point hand skeletons onto a 29-DoF hand model, simulates the
grasp against analytic objects, evaluates lifting success and records
state-action demonstrations.
"""

__version__ = '0.1.0'
