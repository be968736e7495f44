from dataclasses import dataclass, field as dc_field
from typing import List, Tuple

from app.models.form import FormedSpace
from app.models.matrix import Subspace


@dataclass
class GeneralizedQuadrangle:
    """Обобщённый четырёхугольник (P, L) = (P_1, P_2) пространства с формой

    `line_points[j]` - номера точек на прямой j; после дуализации точки и прямые
    меняются ролями, а `dualized` отмечает это.
    """
    name: str
    q: int
    space: FormedSpace
    points: List[Subspace]
    lines: List[Subspace]
    line_points: List[List[int]]
    order: Tuple[int, int]
    dualized: bool = False
    point_lines: List[List[int]] = dc_field(default_factory=list)

    def __post_init__(self) -> None:
        if not self.point_lines:
            self.point_lines = [[] for _ in self.points]
            for j, pts in enumerate(self.line_points):
                for i in pts:
                    self.point_lines[i].append(j)

    @property
    def s(self) -> int:
        return self.order[0]

    @property
    def t(self) -> int:
        return self.order[1]

    @property
    def label(self) -> str:
        base = f"{self.name}({self.q})"
        return f"dual {base}" if self.dualized else base

    def __repr__(self) -> str:
        return f"GQ({self.label}, order={self.order}, |P|={len(self.points)}, |L|={len(self.lines)})"
