# app/services/mobility.py
import math
import logging
from dataclasses import dataclass, replace
from typing import List, Optional, Sequence, Tuple

import numpy as np

from ..models.scenario import MobilityModel, MobilityParams
from .geometry import Area

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class MobilityState:
    ue_id: int
    x: float
    y: float
    vx: float = 0.0
    vy: float = 0.0
    # random waypoint memory
    waypoint: Optional[Tuple[float, float]] = None
    pause_left: float = 0.0
    # Gauss-Markov memory
    speed: float = 0.0
    direction: float = 0.0
    mean_direction: float = 0.0

    @property
    def position(self) -> Tuple[float, float]:
        return self.x, self.y


@dataclass(frozen=True)
class GaussMarkovParams:
    mean_speed: float
    alpha: float
    speed_std: float
    dir_std: float

    @classmethod
    def from_mobility(cls, params: MobilityParams) -> "GaussMarkovParams":
        return cls(
            mean_speed=params.speed,
            alpha=params.gm_alpha,
            speed_std=params.gm_speed_std_ratio * params.speed,
            dir_std=params.gm_dir_std,
        )


def _uniform_point(area: Area, rng: np.random.Generator) -> Tuple[float, float]:
    return float(rng.uniform(0.0, area.width)), float(rng.uniform(0.0, area.height))


def _reflect(value: float, upper: float) -> Tuple[float, bool]:
    """Mirror a coordinate back into [0, upper]; also report whether it bounced"""
    if value < 0.0:
        return min(-value, upper), True
    if value > upper:
        return max(2 * upper - value, 0.0), True
    return value, False


class MobilityService:
    """Random waypoint, Gauss-Markov and static UE movement as pure step functions"""

    @staticmethod
    def rwp_step(
        state: MobilityState,
        dt: float,
        speed: float,
        area: Area,
        rng: np.random.Generator,
        pause_time: float = 0.0,
    ) -> MobilityState:
        """
        Advance a random waypoint UE by dt seconds

        The UE travels at a fixed speed toward its waypoint. On arrival it pauses for
        pause_time and draws a new waypoint uniformly in the area; any time left in
        the step is spent on the next leg.
        """
        if dt <= 0:
            raise ValueError("dt must be positive")

        x, y = state.x, state.y
        waypoint = state.waypoint if state.waypoint is not None else _uniform_point(area, rng)
        pause = state.pause_left
        remaining = dt

        while remaining > 0.0:
            if pause > 0.0:
                used = min(pause, remaining)
                pause -= used
                remaining -= used
                continue
            if speed <= 0.0:
                break
            dx, dy = waypoint[0] - x, waypoint[1] - y
            distance = math.hypot(dx, dy)
            reach = speed * remaining
            if reach < distance:
                x += dx / distance * reach
                y += dy / distance * reach
                remaining = 0.0
            else:
                x, y = waypoint
                remaining -= distance / speed
                waypoint = _uniform_point(area, rng)
                pause = pause_time

        vx = vy = 0.0
        if pause <= 0.0 and speed > 0.0:
            dx, dy = waypoint[0] - x, waypoint[1] - y
            distance = math.hypot(dx, dy)
            if distance > 0.0:
                vx, vy = dx / distance * speed, dy / distance * speed

        return replace(state, x=x, y=y, vx=vx, vy=vy, waypoint=waypoint, pause_left=pause)

    @staticmethod
    def gauss_markov_step(
        state: MobilityState,
        dt: float,
        params: GaussMarkovParams,
        area: Area,
        rng: np.random.Generator,
    ) -> MobilityState:
        """
        Move along the current velocity, bounce off the area edges, then update the
        speed and direction with the Gauss-Markov recursion
        """
        if not 0.0 <= params.alpha <= 1.0:
            raise ValueError("alpha must be between 0 and 1")

        x = state.x + state.speed * math.cos(state.direction) * dt
        y = state.y + state.speed * math.sin(state.direction) * dt
        direction, mean_direction = state.direction, state.mean_direction

        x, bounced = _reflect(x, area.width)
        if bounced:
            direction = math.pi - direction
            mean_direction = math.pi - mean_direction
        y, bounced = _reflect(y, area.height)
        if bounced:
            direction = -direction
            mean_direction = -mean_direction

        alpha = params.alpha
        memory = math.sqrt(1.0 - alpha * alpha)
        noise_speed, noise_dir = rng.standard_normal(2)
        speed = (
            alpha * state.speed
            + (1.0 - alpha) * params.mean_speed
            + memory * params.speed_std * noise_speed
        )
        speed = max(speed, 0.0)
        direction = alpha * direction + (1.0 - alpha) * mean_direction + memory * params.dir_std * noise_dir

        return replace(
            state,
            x=x,
            y=y,
            vx=speed * math.cos(direction),
            vy=speed * math.sin(direction),
            speed=speed,
            direction=direction,
            mean_direction=mean_direction,
        )

    @staticmethod
    def step(
        state: MobilityState,
        dt: float,
        params: MobilityParams,
        area: Area,
        rng: np.random.Generator,
    ) -> MobilityState:
        if params.model == MobilityModel.RANDOM_WAYPOINT:
            return MobilityService.rwp_step(state, dt, params.speed, area, rng, params.pause_time)
        if params.model == MobilityModel.GAUSS_MARKOV:
            return MobilityService.gauss_markov_step(
                state, dt, GaussMarkovParams.from_mobility(params), area, rng
            )
        return state

    @staticmethod
    def stationary_rwp_state(ue_id: int, speed: float, area: Area, rng: np.random.Generator) -> MobilityState:
        """
        Sample a random waypoint UE from the model's stationary distribution

        Legs are accepted with probability proportional to their length, and the UE
        is placed uniformly along the accepted leg.
        """
        diagonal = math.hypot(area.width, area.height)
        while True:
            start = _uniform_point(area, rng)
            end = _uniform_point(area, rng)
            length = math.hypot(end[0] - start[0], end[1] - start[1])
            if rng.uniform() < length / diagonal:
                break
        u = float(rng.uniform())
        x = start[0] + u * (end[0] - start[0])
        y = start[1] + u * (end[1] - start[1])
        state = MobilityState(ue_id=ue_id, x=x, y=y, waypoint=end)
        if length > 0 and speed > 0:
            state = replace(
                state,
                vx=(end[0] - start[0]) / length * speed,
                vy=(end[1] - start[1]) / length * speed,
            )
        return state

    @staticmethod
    def initial_states(
        params: MobilityParams,
        n_ues: int,
        area: Area,
        rng: np.random.Generator,
        positions: Optional[Sequence[Tuple[float, float]]] = None,
    ) -> List[MobilityState]:
        states: List[MobilityState] = []
        for ue_id in range(n_ues):
            if positions is not None:
                x, y = positions[ue_id]
                if not area.contains(x, y):
                    raise ValueError(f"UE {ue_id} position ({x}, {y}) lies outside the area")
            elif params.model == MobilityModel.RANDOM_WAYPOINT and params.stationary_start:
                states.append(MobilityService.stationary_rwp_state(ue_id, params.speed, area, rng))
                continue
            else:
                x, y = _uniform_point(area, rng)

            if params.model == MobilityModel.GAUSS_MARKOV:
                direction = float(rng.uniform(0.0, 2 * math.pi))
                states.append(
                    MobilityState(
                        ue_id=ue_id,
                        x=x,
                        y=y,
                        vx=params.speed * math.cos(direction),
                        vy=params.speed * math.sin(direction),
                        speed=params.speed,
                        direction=direction,
                        mean_direction=direction,
                    )
                )
            else:
                states.append(MobilityState(ue_id=ue_id, x=x, y=y))

        logger.debug(f"Placed {n_ues} UEs with {params.model.value} mobility")
        return states


# Initialize the global service
mobility_service = MobilityService()
