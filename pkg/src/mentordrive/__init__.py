"""Reward-free human-in-the-loop driving: a lead vehicle learns from a
mentor's takeovers and from the disturbance it predicts for its following
platoon, with no environment reward ever reaching a loss.

Subpackages and modules:

- ``dynamics``: car-following (IDM) and kinematic-bicycle vehicle models.
- ``env``: the straight multi-lane road scenario, observation, and stepping.
- ``disturbance``: predicted platoon-slowdown cost charged at braking onsets.
- ``intervention``: the takeover switch and cosine takeover cost.
- ``funcapprox``: minimal reverse-mode autodiff, MLPs, and a tanh-Gaussian
  policy in pure numpy.
- ``trainer``: the reward-free actor-critic (proxy value with a human-action
  preference term, explicit/implicit cost critics, entropy temperature).
- ``expert``: the scripted mentor, its takeover triggers, and the measured
  error/miss rates that feed the risk bound.
- ``theory``: exact tabular verification of the mixed-policy risk bound.
- ``harness``: run configs, training/eval loops, metrics CSVs, checkpoints.
- ``bridge``/``service``: wire protocol, live human link, FastAPI endpoints.
"""

__version__ = "0.1.0"
