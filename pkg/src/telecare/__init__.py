"""Privacy-by-design tele-monitoring backend for in-home study pilots.

The package keeps identifying data (D0) strictly inside hospital-scoped
storage, hands every other party a pseudonymous handle, and enforces the
who-sees-what matrix at three levels: role-based access control, per-edge
payload policies, and a tamper-evident audit log.
"""

__version__ = "0.1.0"
