"""softgrip: a desk-scale lab for stress-aware manipulation of soft objects.

A deformable block on a table, a two-finger gripper, per-particle stress from
an MLS-MPM solver, and an off-policy learner that is paid to be gentle.
"""

__version__ = "0.1.0"
