from __future__ import annotations

import numpy as np


class SimulationFault(RuntimeError):
    """State left its admissible region or the integrator guard was violated."""


class Plant:
    """Interface shared by the simulated plants.

    States are flat float arrays whose layout is given by ``state_names``.
    """

    name = "plant"
    state_names: tuple[str, ...] = ()

    @property
    def n_state(self) -> int:
        return len(self.state_names)

    def rhs(self, state, u):
        raise NotImplementedError

    def observable(self, state):
        raise NotImplementedError

    def check_state(self, state) -> None:
        """Raise SimulationFault if ``state`` is not admissible."""

    def check_input(self, u) -> None:
        pass

    def max_step(self, initial) -> float:
        """Largest admissible integration step from ``initial`` (inf if unguarded)."""
        return np.inf

    def equilibrium_guess(self, u) -> np.ndarray:
        raise NotImplementedError

    def state_scale(self) -> np.ndarray:
        return np.ones(self.n_state)

    def time_scale(self) -> float:
        return 1.0

    def normalized_residual(self, state, u) -> float:
        f = np.asarray(self.rhs(state, u))
        return float(np.max(np.abs(f) * self.time_scale() / self.state_scale()))
