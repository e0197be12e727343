# app/services/geometry.py
import math
import logging
from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np

from ..exceptions import ConfigurationError
from ..models.radio import Sector
from ..models.scenario import LayoutParams, MecDeployment

logger = logging.getLogger(__name__)

SECTOR_AZIMUTHS = (0.0, 120.0, 240.0)
ROW_SPACING = math.sqrt(3) / 2  # hex row pitch in units of the intersite distance


@dataclass(frozen=True)
class Area:
    width: float
    height: float

    @property
    def center(self) -> Tuple[float, float]:
        return self.width / 2, self.height / 2

    def contains(self, x: float, y: float) -> bool:
        return 0.0 <= x <= self.width and 0.0 <= y <= self.height


@dataclass(frozen=True)
class Layout:
    sites: Tuple[Tuple[float, float], ...]
    site_height: float
    sectors: Tuple[Sector, ...]
    isd: float
    area: Area

    @property
    def n_sectors(self) -> int:
        return len(self.sectors)

    @property
    def n_mecs(self) -> int:
        return len({s.mec_id for s in self.sectors})

    def mec_of(self, sector_id: int) -> int:
        return self.sectors[sector_id].mec_id

    def sector_arrays(self) -> Tuple[np.ndarray, np.ndarray]:
        """Sector positions (S, 2) and azimuths in degrees (S,)"""
        positions = np.array([s.position for s in self.sectors], dtype=float)
        azimuths = np.array([s.azimuth_deg for s in self.sectors], dtype=float)
        return positions, azimuths


class GeometryService:
    @staticmethod
    def _row_lengths(n_sites: int, k: int, long_first: bool) -> Tuple[List[int], int]:
        """Alternate rows of k and k-1 sites; also return the last row's nominal length"""
        rows: List[int] = []
        placed = 0
        long_row = long_first
        nominal = k
        while placed < n_sites:
            nominal = k if long_row or k == 1 else k - 1
            length = min(nominal, n_sites - placed)
            rows.append(length)
            placed += length
            long_row = not long_row
        return rows, nominal

    @staticmethod
    def _choose_rows(n_sites: int, isd: float, area: Area) -> Optional[List[int]]:
        best = None
        best_score = None
        target_aspect = area.width / area.height
        for k in range(1, n_sites + 1):
            for long_first in (True, False):
                rows, nominal = GeometryService._row_lengths(n_sites, k, long_first)
                if k == 1 and len(rows) > 1:
                    continue  # a single column is not a hexagonal grid
                # a truncated last row keeps the lattice only if it drops an even count
                if (nominal - rows[-1]) % 2:
                    continue
                width = (max(rows) - 1) * isd
                height = (len(rows) - 1) * isd * ROW_SPACING
                if width > area.width or height > area.height:
                    continue
                spread = max(width, isd) / max(height, isd * ROW_SPACING)
                score = (rows[-1] != nominal, abs(math.log(spread / target_aspect)), k, not long_first)
                if best_score is None or score < best_score:
                    best, best_score = rows, score
        return best

    @staticmethod
    def build_layout(params: LayoutParams) -> Layout:
        """
        Hexagonal multi-site layout with three sectors per site

        Rows alternate between k and k-1 sites and are centered in the area, so
        neighbours in adjacent rows are exactly one intersite distance apart.
        """
        area = Area(params.area_width, params.area_height)
        rows = GeometryService._choose_rows(params.n_sites, params.isd, area)
        if rows is None:
            raise ConfigurationError(
                f"Area {area.width}x{area.height} m cannot hold {params.n_sites} sites at ISD {params.isd} m"
            )

        cx, cy = area.center
        sites: List[Tuple[float, float]] = []
        for i, length in enumerate(rows):
            y = cy + (i - (len(rows) - 1) / 2) * params.isd * ROW_SPACING
            for j in range(length):
                x = cx + (j - (length - 1) / 2) * params.isd
                sites.append((x, y))

        sectors: List[Sector] = []
        for site_id, position in enumerate(sites):
            for k, azimuth in enumerate(SECTOR_AZIMUTHS):
                sector_id = site_id * len(SECTOR_AZIMUTHS) + k
                mec_id = sector_id if params.mec_deployment == MecDeployment.SECTOR else site_id
                sectors.append(
                    Sector(
                        sector_id=sector_id,
                        site_id=site_id,
                        mec_id=mec_id,
                        position=position,
                        height=params.site_height,
                        azimuth_deg=azimuth,
                    )
                )

        logger.debug(f"Built layout: {len(sites)} sites in rows {rows}, {len(sectors)} sectors")
        return Layout(
            sites=tuple(sites),
            site_height=params.site_height,
            sectors=tuple(sectors),
            isd=params.isd,
            area=area,
        )


# Initialize the global service
geometry_service = GeometryService()
