"""Flat `section.key = value` scenario configuration.

The schema is intentionally small and diff-friendly: one dotted key per
line, `#` comments, floats serialized with repr so parse(serialize(sc))
reproduces the scenario exactly.

    scenario.geometry      disk | two-ellipses | semicircles | disk-interior
    scenario.problem       exterior | interior
    scenario.rule          bdf2 | trapezoidal
    scenario.scheme        standard | modified
    scenario.num_steps     int
    scenario.horizon       float
    scenario.output_dir    path (optional)
    spatial.kind           mfs | galerkin
    spatial.num_collocation, spatial.num_sources, spatial.radius   (mfs)
    spatial.num_panels, spatial.quad_order                         (galerkin)
    incident.kind          plane-wave | gaussian-pulse
    incident.omega, incident.direction, incident.delay, incident.width
    incident.sharpness, incident.center
    observation.points     x,y pairs joined by ';'
"""

from __future__ import annotations

from .cq import MultistepRule
from .incident import GaussianPulse, WindowedPlaneWave
from .scenarios import (
    GalerkinSpatial,
    Geometry,
    MfsSpatial,
    Problem,
    Scenario,
    Scheme,
)


def _fmt_pair(pair) -> str:
    return f"{float(pair[0])!r},{float(pair[1])!r}"


def _parse_pair(text: str) -> tuple:
    a, b = text.split(",")
    return (float(a), float(b))


def scenario_to_mapping(sc: Scenario) -> dict:
    out = {
        "scenario.geometry": sc.geometry.value,
        "scenario.problem": sc.problem.value,
        "scenario.rule": sc.rule.name.lower(),
        "scenario.scheme": sc.scheme.value,
        "scenario.num_steps": str(sc.num_steps),
        "scenario.horizon": repr(float(sc.horizon)),
    }
    if sc.output_dir:
        out["scenario.output_dir"] = sc.output_dir
    if isinstance(sc.spatial, MfsSpatial):
        out["spatial.kind"] = "mfs"
        out["spatial.num_collocation"] = str(sc.spatial.num_collocation)
        out["spatial.num_sources"] = str(sc.spatial.num_sources)
        out["spatial.radius"] = repr(float(sc.spatial.radius))
    else:
        out["spatial.kind"] = "galerkin"
        out["spatial.num_panels"] = str(sc.spatial.num_panels)
        out["spatial.quad_order"] = str(sc.spatial.quad_order)
    if isinstance(sc.incident, WindowedPlaneWave):
        out["incident.kind"] = "plane-wave"
        out["incident.omega"] = repr(float(sc.incident.omega))
        out["incident.direction"] = _fmt_pair(sc.incident.direction)
        out["incident.delay"] = repr(float(sc.incident.delay))
        out["incident.width"] = repr(float(sc.incident.width))
    else:
        out["incident.kind"] = "gaussian-pulse"
        out["incident.sharpness"] = repr(float(sc.incident.sharpness))
        out["incident.center"] = _fmt_pair(sc.incident.center)
    out["observation.points"] = ";".join(_fmt_pair(p) for p in sc.observation)
    return out


def mapping_to_scenario(mapping: dict) -> Scenario:
    known = dict(mapping)

    def take(key, default=None):
        return known.pop(key, default)

    geometry = Geometry(take("scenario.geometry", "disk"))
    problem_default = "interior" if geometry is Geometry.DISK_INTERIOR else "exterior"
    problem = Problem(take("scenario.problem", problem_default))
    rule = MultistepRule[take("scenario.rule", "bdf2").upper()]
    scheme = Scheme(take("scenario.scheme", "modified"))
    num_steps = int(take("scenario.num_steps", "256"))
    horizon = float(take("scenario.horizon", "10.0"))
    output_dir = take("scenario.output_dir")
    kind = take("spatial.kind", "mfs")
    if kind == "mfs":
        radius_default = "1.1" if problem is Problem.INTERIOR else "0.9"
        spatial = MfsSpatial(
            num_collocation=int(take("spatial.num_collocation", "200")),
            num_sources=int(take("spatial.num_sources", "100")),
            radius=float(take("spatial.radius", radius_default)),
        )
    elif kind == "galerkin":
        spatial = GalerkinSpatial(
            num_panels=int(take("spatial.num_panels", "100")),
            quad_order=int(take("spatial.quad_order", "8")),
        )
    else:
        raise ValueError(f"unknown spatial.kind {kind!r}")
    inc_kind = take("incident.kind")
    incident = None
    if inc_kind == "plane-wave" or (
        inc_kind is None and any(k.startswith("incident.") for k in known)
    ):
        incident = WindowedPlaneWave(
            omega=float(take("incident.omega", "1.0")),
            direction=_parse_pair(take("incident.direction", "0.0,-1.0")),
            delay=float(take("incident.delay", "4.0")),
            width=float(take("incident.width", "0.7")),
        )
    elif inc_kind == "gaussian-pulse":
        incident = GaussianPulse(
            sharpness=float(take("incident.sharpness", "10.0")),
            center=_parse_pair(take("incident.center", "0.25,0.0")),
        )
    elif inc_kind is not None:
        raise ValueError(f"unknown incident.kind {inc_kind!r}")
    obs_text = take("observation.points")
    observation = (
        tuple(_parse_pair(p) for p in obs_text.split(";")) if obs_text else None
    )
    if known:
        raise ValueError(f"unknown configuration keys: {sorted(known)}")
    return Scenario(
        geometry=geometry,
        problem=problem,
        spatial=spatial,
        rule=rule,
        scheme=scheme,
        num_steps=num_steps,
        horizon=horizon,
        incident=incident,
        observation=observation,
        output_dir=output_dir,
    )


def serialize_scenario(sc: Scenario) -> str:
    lines = [f"{key} = {value}" for key, value in scenario_to_mapping(sc).items()]
    return "\n".join(lines) + "\n"


def parse_scenario(text: str) -> Scenario:
    mapping = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"line {lineno}: expected 'section.key = value'")
        key, value = line.split("=", 1)
        mapping[key.strip()] = value.strip()
    return mapping_to_scenario(mapping)


def load_scenario(path: str) -> Scenario:
    with open(path) as fh:
        return parse_scenario(fh.read())


def save_scenario(sc: Scenario, path: str) -> None:
    with open(path, "w") as fh:
        fh.write(serialize_scenario(sc))
