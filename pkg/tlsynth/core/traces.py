import logging
import math
from pathlib import Path
from typing import Dict, Iterator, Mapping, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd

from .errors import ConfigError, MissingBound, TraceFormatError, UnknownSignal

logger = logging.getLogger('tlsynth.traces')

TIME_COLUMN = 'time'


class Trace:
    """Discrete-time signal table, one value per signal per integer step."""

    def __init__(self, signals: Mapping[str, Sequence[float]]):
        """Initialize with a mapping from signal name to samples for steps 0..K."""
        if not signals:
            raise TraceFormatError("a trace needs at least one signal")
        self._data: Dict[str, np.ndarray] = {}
        length = None
        for name, values in signals.items():
            array = np.array(values, dtype=float).reshape(-1)
            array.setflags(write=False)
            if length is None:
                length = len(array)
            elif len(array) != length:
                raise TraceFormatError(
                    f"signal '{name}' has {len(array)} samples, expected {length}"
                )
            if name == TIME_COLUMN or name in self._data:
                raise TraceFormatError(f"invalid or duplicate signal name '{name}'")
            self._data[str(name)] = array
        self._length = length

    @property
    def names(self) -> Tuple[str, ...]:
        return tuple(self._data)

    def __len__(self) -> int:
        return self._length

    def __contains__(self, name: object) -> bool:
        return name in self._data

    def __iter__(self) -> Iterator[str]:
        return iter(self._data)

    def __getitem__(self, name: str) -> np.ndarray:
        try:
            return self._data[name]
        except KeyError:
            raise UnknownSignal(name) from None

    def value(self, name: str, step: int) -> float:
        return float(self[name][step])

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Trace):
            return NotImplemented
        return self.names == other.names and all(
            np.array_equal(self._data[n], other._data[n]) for n in self.names
        )

    def __repr__(self) -> str:
        return f"Trace(signals={list(self.names)}, steps={self._length})"

    def window(self, start: int, stop: Optional[int] = None) -> 'Trace':
        """Steps start..stop-1, renumbered from 0."""
        return Trace({n: v[start:stop] for n, v in self._data.items()})

    def merged(self, other: 'Trace', fill: float = 0.0) -> 'Trace':
        """Columns of both traces; `other` is padded with `fill` when shorter."""
        if len(other) > len(self):
            raise TraceFormatError("merged trace is longer than the base trace")
        data: Dict[str, np.ndarray] = dict(self._data)
        for name in other:
            values = other[name]
            if len(values) < len(self):
                values = np.concatenate([values, np.full(len(self) - len(values), fill)])
            data[name] = values
        return Trace(data)

    def to_frame(self) -> pd.DataFrame:
        frame = pd.DataFrame(self._data)
        frame.insert(0, TIME_COLUMN, np.arange(self._length))
        return frame

    @classmethod
    def from_frame(cls, frame: pd.DataFrame) -> 'Trace':
        if frame.columns.empty or frame.columns[0] != TIME_COLUMN:
            raise TraceFormatError(f"first column must be '{TIME_COLUMN}'")
        if frame.isna().to_numpy().any():
            raise TraceFormatError("trace has missing cells")
        time = frame[TIME_COLUMN].to_numpy()
        if not np.array_equal(time, np.arange(len(frame))):
            raise TraceFormatError("time column must count 0, 1, 2, ... in order")
        signals = [c for c in frame.columns if c != TIME_COLUMN]
        try:
            return cls({str(c): frame[c].to_numpy(dtype=float) for c in signals})
        except (TypeError, ValueError) as exc:
            raise TraceFormatError(f"non-numeric trace value: {exc}") from None

    @classmethod
    def from_csv(cls, path: Union[str, Path]) -> 'Trace':
        """Load a time,<signal>,... CSV file. OSError propagates to the caller."""
        try:
            frame = pd.read_csv(path, skipinitialspace=True)
        except (pd.errors.ParserError, pd.errors.EmptyDataError, UnicodeDecodeError) as exc:
            raise TraceFormatError(f"{path}: {exc}") from None
        trace = cls.from_frame(frame)
        logger.debug(f"Loaded trace {path} with {len(trace)} steps")
        return trace

    def to_csv(self, path: Union[str, Path]) -> None:
        self.to_frame().to_csv(path, index=False, float_format='%.12g')


class VarBounds(Mapping[str, Tuple[float, float]]):
    """Per-signal (lower, upper) bounds."""

    def __init__(self, bounds: Optional[Mapping[str, Sequence[float]]] = None):
        self._bounds: Dict[str, Tuple[float, float]] = {}
        for name, pair in (bounds or {}).items():
            try:
                lower, upper = (float(v) for v in pair)
            except (TypeError, ValueError):
                raise ConfigError(f"bounds for '{name}' must be a [lower, upper] pair") from None
            if math.isnan(lower) or math.isnan(upper) or lower > upper:
                raise ConfigError(f"bounds for '{name}' need lower <= upper, got {list(pair)}")
            self._bounds[str(name)] = (lower, upper)

    @classmethod
    def from_mapping(cls, bounds: Mapping[str, Sequence[float]]) -> 'VarBounds':
        return cls(bounds)

    def __getitem__(self, name: str) -> Tuple[float, float]:
        return self._bounds[name]

    def __iter__(self):
        return iter(self._bounds)

    def __len__(self) -> int:
        return len(self._bounds)

    def __repr__(self) -> str:
        return f"VarBounds({self._bounds!r})"

    def get(self, name: str) -> Tuple[float, float]:
        """Bounds of a signal; MissingBound when absent."""
        if name in self._bounds:
            return self._bounds[name]
        raise MissingBound(name)

    def finite(self, name: str) -> Tuple[float, float]:
        lower, upper = self.get(name)
        if not (math.isfinite(lower) and math.isfinite(upper)):
            raise MissingBound(name, "bounds must be finite")
        return lower, upper
