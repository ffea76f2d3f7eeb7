"""Strict JSON run configuration.

Unknown keys are rejected everywhere; omitted keys take the defaults below and
the fully resolved configuration is what gets echoed to the run log and the
manifest.
"""

from __future__ import annotations

import json
from typing import Annotated, Literal, Optional, Union

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from .errors import SchemaError


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class JuttnerFamily(_Strict):
    kind: Literal["juttner"]
    amplitude: float = Field(1.0, ge=0)
    beta: float = Field(gt=0)
    drift: float = 0.0


class GaussianFamily(_Strict):
    kind: Literal["gaussian"]
    amplitude: float = Field(1.0, ge=0)
    center: float = 0.0
    width: float = Field(gt=0)


class TabulatedFamily(_Strict):
    kind: Literal["tabulated"]
    path: str


BoundaryFamilySpec = Annotated[
    Union[JuttnerFamily, GaussianFamily, TabulatedFamily], Field(discriminator="kind")
]


class SpeciesConfig(_Strict):
    label: str
    mass: float = Field(gt=0)
    omega: float = Field(ge=0)
    left: BoundaryFamilySpec
    right: BoundaryFamilySpec

    @model_validator(mode="after")
    def _some_inflow(self):
        amps = [getattr(s, "amplitude", None) for s in (self.left, self.right)]
        if all(a == 0 for a in amps):
            raise ValueError("at least one side needs a positive amplitude")
        return self


class Constants(_Strict):
    c: float = Field(1.0, gt=0)
    k: float = Field(1.0, gt=0)


class GridConfig(_Strict):
    p_max: Optional[float] = Field(None, gt=0)
    n_p1: int = Field(64, ge=4)
    n_rho: int = Field(48, ge=2)
    p1_grading: float = Field(3.0, ge=1, le=8)
    K: int = Field(64, ge=2)
    truncation_tol: float = Field(1e-10, gt=0, lt=1)

    @field_validator("n_p1")
    @classmethod
    def _even(cls, v):
        if v % 2:
            raise ValueError("n_p1 must be even")
        return v


class SolverConfig(_Strict):
    tol: float = Field(1e-10, gt=0, lt=1)
    max_iter: int = Field(200, ge=1)
    normalization: Literal["discrete", "continuum"] = "discrete"
    beta_tol: float = Field(1e-12, gt=0, lt=1)


class ScanConfig(_Strict):
    scales: list[float] = Field(default_factory=lambda: [0.25, 0.5, 1.0, 2.0, 4.0, 8.0])

    @field_validator("scales")
    @classmethod
    def _ladder(cls, v):
        if not v:
            raise ValueError("scale ladder must be nonempty")
        if any(s < 0 for s in v) or any(b <= a for a, b in zip(v, v[1:])):
            raise ValueError("scale ladder must be nonnegative and strictly increasing")
        return v


class OutputConfig(_Strict):
    profiles: str = "profiles.csv"
    manifest: str = "manifest.json"
    report: str = "certificate.txt"
    scan: str = "scan.csv"
    constants: str = "constants.csv"


class RunConfig(_Strict):
    mode: Literal["solve", "scan", "verify", "moments"] = "solve"
    constants: Constants = Constants()
    species: list[SpeciesConfig] = Field(min_length=1)
    grid: GridConfig = GridConfig()
    solver: SolverConfig = SolverConfig()
    scan: ScanConfig = ScanConfig()
    output: OutputConfig = OutputConfig()

    @model_validator(mode="after")
    def _physics(self):
        c = self.constants.c
        labels = [s.label for s in self.species]
        if len(set(labels)) != len(labels):
            raise ValueError(f"species labels must be unique, got {labels}")
        for i, s in enumerate(self.species):
            for side in ("left", "right"):
                spec = getattr(s, side)
                if spec.kind == "juttner" and abs(spec.drift) >= c:
                    raise SchemaError(
                        f"species[{i}].{side}.drift: |drift| = {abs(spec.drift):g} must be below c = {c:g}"
                    )
        return self

    def to_json(self) -> str:
        return json.dumps(self.model_dump(mode="json"), indent=2, sort_keys=True) + "\n"


def _format_loc(loc) -> str:
    out = ""
    for part in loc:
        if isinstance(part, int):
            out += f"[{part}]"
        elif part in ("juttner", "gaussian", "tabulated"):
            # discriminator tag inserted by pydantic, not a user key
            continue
        else:
            out += f".{part}" if out else str(part)
    return out or "<root>"


def parse_config(text: str) -> RunConfig:
    """Validate a JSON document into a :class:`RunConfig`.

    Raises :class:`SchemaError` naming the offending key path, e.g.
    ``species[0].mass``.
    """
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"malformed JSON: {exc}") from exc
    try:
        return RunConfig.model_validate(raw)
    except SchemaError:
        raise
    except ValidationError as exc:
        msgs = []
        for err in exc.errors():
            ctx_err = (err.get("ctx") or {}).get("error")
            if isinstance(ctx_err, SchemaError):
                msgs.append(str(ctx_err))
            else:
                msgs.append(f"{_format_loc(err['loc'])}: {err['msg']}")
        raise SchemaError("; ".join(msgs)) from exc
