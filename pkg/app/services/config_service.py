"""
Run-configuration grammar (INI):

    equation = qg              # keys before the first section belong to [run]
    resolution = 128           # n, or "n1, n2"
    scenario = saddle
    t_end = 1                  # solver keys are accepted in [run] as well

    [solver]    dt_init, cfl, t_end, dealias, dissipation, nu, p, snapshot_interval, reverse_velocity
    [scenario]  name, plus numeric scenario parameters
    [front]     G1, G2, window = a, b, bracket = lo, hi, bracket2, exit_factor
    [modulus]   pair_count, tau_floor, tau_max, every, center_radius, dump_pairs

All problems are reported together in one ConfigError.
"""
import configparser
import logging
from typing import Any, Dict, List

from pydantic import ValidationError

from app.models.run_config import RunConfig
from app.utils.errors import ConfigError

logger = logging.getLogger("config")

SECTIONS = ("run", "solver", "scenario", "front", "modulus")
SOLVER_KEYS = {
    "dt_init", "cfl", "t_end", "dealias", "dissipation", "snapshot_interval", "reverse_velocity",
}
HYPERVISCOSITY_KEYS = {"nu", "p"}


def _read_sections(text: str) -> Dict[str, Dict[str, str]]:
    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    parser.optionxform = str
    body = text.lstrip("\ufeff")
    first = next(
        (line.strip() for line in body.splitlines() if line.strip() and not line.strip().startswith(("#", ";"))),
        "",
    )
    if first and not first.startswith("["):
        body = "[run]\n" + body
    parser.read_string(body)
    return {name: dict(parser.items(name)) for name in parser.sections()}


def _solver_entry(solver: Dict[str, Any], key: str, value: str, errors: List[str], where: str) -> None:
    target = solver.setdefault("hyperviscosity", {}) if key in HYPERVISCOSITY_KEYS else solver
    if key in target:
        errors.append(f"{where}.{key}: given twice")
    target[key] = value


def _assemble(sections: Dict[str, Dict[str, str]], errors: List[str]) -> Dict[str, Any]:
    data: Dict[str, Any] = {}
    solver: Dict[str, Any] = {}

    for name in sections:
        if name not in SECTIONS:
            errors.append(f"[{name}]: unknown section")

    for key, value in sections.get("run", {}).items():
        if key in SOLVER_KEYS or key in HYPERVISCOSITY_KEYS:
            _solver_entry(solver, key, value, errors, "run")
        elif key == "scenario":
            data.setdefault("scenario", {})["name"] = value
        else:
            data[key] = value

    for key, value in sections.get("solver", {}).items():
        _solver_entry(solver, key, value, errors, "solver")
    if solver:
        data["solver"] = solver

    if "scenario" in sections:
        scenario = data.setdefault("scenario", {})
        params: Dict[str, Any] = {}
        for key, value in sections["scenario"].items():
            if key == "name":
                if "name" in scenario:
                    errors.append("scenario.name: given twice")
                scenario["name"] = value
            else:
                params[key] = value
        scenario["params"] = params

    for name in ("front", "modulus"):
        if name in sections:
            data[name] = dict(sections[name])
    return data


def _format_error(err: Dict[str, Any]) -> str:
    loc = ".".join(str(part) for part in err.get("loc", ())) or "config"
    msg = err.get("msg", "invalid value")
    if msg.startswith("Value error, "):
        msg = msg[len("Value error, "):]
    return f"{loc}: {msg}"


def parse_config(text: str) -> RunConfig:
    errors: List[str] = []
    try:
        sections = _read_sections(text)
    except configparser.Error as exc:
        raise ConfigError([f"syntax: {exc}"])

    data = _assemble(sections, errors)
    try:
        config = RunConfig.model_validate(data)
    except ValidationError as exc:
        errors.extend(_format_error(err) for err in exc.errors())
        raise ConfigError(errors)
    if errors:
        raise ConfigError(errors)
    return config


def format_value(value: Any) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, (tuple, list)):
        return ", ".join(format_value(v) for v in value)
    return str(value)


def dump_config(config: RunConfig) -> str:
    """Canonical text for a config; parse_config(dump_config(c)) == c."""
    lines = ["[run]"]
    lines.append(f"equation = {config.equation}")
    lines.append(f"resolution = {format_value(config.resolution)}")
    lines.append(f"output_dir = {config.output_dir}")
    lines.append(f"seed = {config.seed}")
    if config.checkpoint_every is not None:
        lines.append(f"checkpoint_every = {format_value(config.checkpoint_every)}")

    solver = config.solver
    lines += ["", "[solver]"]
    for key in ("dt_init", "cfl", "t_end", "dealias", "dissipation", "snapshot_interval", "reverse_velocity"):
        lines.append(f"{key} = {format_value(getattr(solver, key))}")
    lines.append(f"nu = {format_value(solver.hyperviscosity.nu)}")
    lines.append(f"p = {solver.hyperviscosity.p}")

    lines += ["", "[scenario]", f"name = {config.scenario.name}"]
    for key in sorted(config.scenario.params):
        lines.append(f"{key} = {format_value(config.scenario.params[key])}")

    for name in ("front", "modulus"):
        section = getattr(config, name)
        if section is None:
            continue
        lines += ["", f"[{name}]"]
        for key, value in section.model_dump().items():
            if value is not None:
                lines.append(f"{key} = {format_value(value)}")
    return "\n".join(lines) + "\n"
