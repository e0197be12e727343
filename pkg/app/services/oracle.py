# app/services/oracle.py
import logging
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np
from scipy.optimize import linear_sum_assignment

from ..exceptions import InfeasibleAssignmentError

logger = logging.getLogger(__name__)

OUTAGE_PENALTY = 10.0  # seconds charged for a link that cannot carry the frame


@dataclass(frozen=True)
class Assignment:
    mec_of_ue: Tuple[int, ...]
    total_cost: float


class OracleService:
    """Offline minimum-total-delay assignment of UEs to MEC servers"""

    @staticmethod
    def oracle_assign(delay_matrix: np.ndarray, capacities: Optional[Sequence[int]] = None) -> Assignment:
        """
        Optimal assignment for a |U| x |M| matrix of estimated experienced delays

        Each MEC column is replicated once per capacity slot so the capacitated
        problem becomes a rectangular linear sum assignment.
        """
        matrix = np.asarray(delay_matrix, dtype=float)
        if matrix.ndim != 2:
            raise ValueError("delay_matrix must be two-dimensional")
        if not np.all(np.isfinite(matrix)):
            raise ValueError("delay_matrix must be finite")

        n_ues, n_mecs = matrix.shape
        if capacities is None:
            capacities = [n_ues] * n_mecs
        if len(capacities) != n_mecs:
            raise ValueError(f"Expected {n_mecs} capacities, got {len(capacities)}")
        if sum(capacities) < n_ues:
            raise InfeasibleAssignmentError(
                f"Total capacity {sum(capacities)} cannot hold {n_ues} UEs"
            )

        slot_mec = np.repeat(np.arange(n_mecs), [min(c, n_ues) for c in capacities])
        rows, cols = linear_sum_assignment(matrix[:, slot_mec])
        mec_of_ue = [0] * n_ues
        for u, slot in zip(rows, cols):
            mec_of_ue[u] = int(slot_mec[slot])
        total = float(sum(matrix[u, m] for u, m in enumerate(mec_of_ue)))
        return Assignment(mec_of_ue=tuple(mec_of_ue), total_cost=total)

    @staticmethod
    def assignment_cost(delay_matrix: np.ndarray, mec_of_ue: Sequence[int]) -> float:
        matrix = np.asarray(delay_matrix, dtype=float)
        return float(sum(matrix[u, m] for u, m in enumerate(mec_of_ue)))


# Initialize the global service
oracle_service = OracleService()
