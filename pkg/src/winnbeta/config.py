"""Run configuration: defaults, validation, and a flat key=value file form.

Precedence is resolved by the CLI as flag over file over default; this
module only knows how to hold, check, and (de)serialize the values.  The
file form round-trips losslessly.
"""

import math
from dataclasses import dataclass, fields

from .data_model import MissingPolicy
from .errors import ParameterError
from .stats_tests import VARIANCE_TEST_KINDS

__all__ = ["RunConfig"]


@dataclass
class RunConfig:
    alpha: float = 0.05
    variance_test: str = "fligner"
    lags: int | None = None  # None = rule min(10, n // 5)
    max_df: int = 15
    min_batch_size: int = 20
    missing_policy: MissingPolicy = MissingPolicy.FAIL
    outlier_sigma: float = 3.0
    workers: int | None = None  # None = one per CPU
    seed: int | None = None
    compat_literal_rescale: bool = False

    def validate(self) -> "RunConfig":
        if not (0.0 < self.alpha < 1.0):
            raise ParameterError(f"alpha must lie in (0, 1), got {self.alpha}")
        if self.variance_test not in VARIANCE_TEST_KINDS:
            raise ParameterError(
                f"variance_test must be one of {VARIANCE_TEST_KINDS}, got {self.variance_test!r}"
            )
        if self.lags is not None and self.lags < 1:
            raise ParameterError(f"lags must be at least 1, got {self.lags}")
        if self.max_df < 1:
            raise ParameterError(f"max_df must be at least 1, got {self.max_df}")
        if self.min_batch_size < 1:
            raise ParameterError(
                f"min_batch_size must be positive, got {self.min_batch_size}"
            )
        if not isinstance(self.missing_policy, MissingPolicy):
            self.missing_policy = MissingPolicy.parse(str(self.missing_policy))
        if math.isnan(self.outlier_sigma) or self.outlier_sigma <= 0.0:
            raise ParameterError(f"outlier_sigma must be positive, got {self.outlier_sigma}")
        if self.workers is not None and self.workers < 1:
            raise ParameterError(f"workers must be at least 1, got {self.workers}")
        if self.seed is not None and self.seed < 0:
            raise ParameterError(f"seed must be nonnegative, got {self.seed}")
        return self

    def effective_lags(self, n: int) -> int:
        if self.lags is not None:
            return self.lags
        return min(10, n // 5)

    def df_grid(self, n_plate: int) -> list[int]:
        """Candidate spline freedoms 1..min(max_df, n_plate // 4)."""
        top = min(self.max_df, n_plate // 4)
        return list(range(1, max(top, 1) + 1))

    # -- flat file form ----------------------------------------------------

    def to_mapping(self) -> dict[str, str]:
        def fmt(name: str, value) -> str:
            if value is None:
                return "none" if name == "seed" else "auto"
            if isinstance(value, MissingPolicy):
                return value.value
            if isinstance(value, bool):
                return "true" if value else "false"
            return repr(value) if isinstance(value, float) else str(value)

        return {f.name: fmt(f.name, getattr(self, f.name)) for f in fields(self)}

    @classmethod
    def from_mapping(cls, mapping: dict[str, str]) -> "RunConfig":
        valid = {f.name for f in fields(cls)}
        unknown = sorted(set(mapping) - valid)
        if unknown:
            raise ParameterError(f"unknown config keys {unknown}")
        kwargs = {}
        for key, raw in mapping.items():
            raw = raw.strip()
            try:
                if key == "seed":
                    kwargs[key] = None if raw.lower() == "none" else int(raw)
                elif key in ("lags", "workers"):
                    kwargs[key] = None if raw.lower() == "auto" else int(raw)
                elif key in ("max_df", "min_batch_size"):
                    kwargs[key] = int(raw)
                elif key in ("alpha", "outlier_sigma"):
                    kwargs[key] = float(raw)
                elif key == "missing_policy":
                    kwargs[key] = MissingPolicy.parse(raw)
                elif key == "compat_literal_rescale":
                    if raw.lower() not in ("true", "false"):
                        raise ValueError(raw)
                    kwargs[key] = raw.lower() == "true"
                else:
                    kwargs[key] = raw
            except ValueError:
                raise ParameterError(f"config key {key}: cannot parse {raw!r}") from None
        return cls(**kwargs).validate()

    def to_file(self, path) -> None:
        with open(path, "w") as fh:
            for key, value in self.to_mapping().items():
                fh.write(f"{key} = {value}\n")

    @classmethod
    def from_file(cls, path) -> "RunConfig":
        mapping: dict[str, str] = {}
        with open(path) as fh:
            for lineno, line in enumerate(fh, start=1):
                text = line.split("#", 1)[0].strip()
                if not text:
                    continue
                if "=" not in text:
                    raise ParameterError(f"{path} line {lineno}: expected key = value")
                key, _, value = text.partition("=")
                mapping[key.strip()] = value.strip()
        return cls.from_mapping(mapping)
