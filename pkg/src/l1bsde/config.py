"""Flat key=value experiment configs with section headers, and result rows."""

from __future__ import annotations

import configparser
from dataclasses import dataclass, field


class ConfigError(ValueError):
    """Unreadable or inconsistent experiment configuration."""


@dataclass
class ExperimentConfig:
    name: str
    seed: int
    out_dir: str
    sections: dict = field(default_factory=dict)

    def get(self, section: str, key: str, default=None, cast=str):
        sec = self.sections.get(section, {})
        if key not in sec:
            return default
        raw = sec[key]
        try:
            if cast is bool:
                return raw.strip().lower() in ("1", "true", "yes", "on")
            return cast(raw)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"bad value for [{section}] {key}: {raw!r}") from exc

    def get_floats(self, section: str, key: str, default=()):
        raw = self.get(section, key)
        if raw is None:
            return list(default)
        try:
            return [float(x) for x in str(raw).split(",") if x.strip()]
        except ValueError as exc:
            raise ConfigError(f"bad list for [{section}] {key}: {raw!r}") from exc

    def section(self, name: str) -> dict:
        return dict(self.sections.get(name, {}))


def load_config(path: str) -> ExperimentConfig:
    parser = configparser.ConfigParser()
    try:
        with open(path, "r", encoding="utf-8") as fh:
            parser.read_file(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except configparser.Error as exc:
        raise ConfigError(f"cannot parse config {path}: {exc}") from exc
    sections = {name: dict(parser.items(name)) for name in parser.sections()}
    exp = sections.get("experiment", {})
    if "name" not in exp:
        raise ConfigError("config needs [experiment] name = <suite>")
    try:
        seed = int(exp.get("seed", "0"))
    except ValueError as exc:
        raise ConfigError(f"bad seed: {exp.get('seed')!r}") from exc
    return ExperimentConfig(
        name=exp["name"].strip(),
        seed=seed,
        out_dir=exp.get("out", "results").strip(),
        sections=sections,
    )


CSV_HEADER = "experiment,instance,param,quantity,value,bound,slack,pass"


@dataclass
class ResultRow:
    experiment: str
    instance: str
    param: str
    quantity: str
    value: float
    bound: float | None = None
    passed: bool | None = None

    @property
    def slack(self) -> float | None:
        return None if self.bound is None else self.bound - self.value

    def sort_key(self):
        return (self.experiment, self.instance, self.param, self.quantity)

    def to_csv_fields(self) -> list[str]:
        def num(x):
            return "" if x is None else repr(float(x))

        ok = self.passed
        if ok is None:
            ok = True if self.bound is None else self.value <= self.bound
        return [
            self.experiment,
            self.instance,
            self.param,
            self.quantity,
            num(self.value),
            num(self.bound),
            num(self.slack),
            "true" if ok else "false",
        ]

    def is_pass(self) -> bool:
        if self.passed is not None:
            return self.passed
        return True if self.bound is None else self.value <= self.bound
