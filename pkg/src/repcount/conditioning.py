"""Angle-trace conditioning: gap filling and outlier normalization.

Gaps (frames where the major joint could not be measured) are filled by
linear extrapolation from the two preceding samples; outliers are pulled to
the mean of their neighbors when they deviate toward the range-of-motion
mid-line against the local trend. Both steps run before the repetition
counter sees the trace.
"""
from __future__ import annotations

from typing import Optional

DEFAULT_OUTLIER_ITERATIONS = 3

# gap-fill modes: "extrapolate" is linear extrapolation 2*a[f-1] - a[f-2]
# clamped to [0, 180]; "reflect-abs" is |2*a[f-2] - a[f-1]|, which lets the
# older sample dominate and reflects negative results upward
GAP_FILL_MODES = ("extrapolate", "reflect-abs")


def _clamp(value: float) -> float:
    return min(180.0, max(0.0, value))


def is_usable(samples: list[Optional[float]]) -> bool:
    """A trace with fewer than 2 valid samples cannot be gap-filled."""
    return sum(1 for s in samples if s is not None) >= 2


def fill_gaps(samples: list[Optional[float]], mode: str = "extrapolate") -> list[Optional[float]]:
    """Replace gap samples (None) with extrapolated angles.

    Leading gaps are back-filled with the first valid value. Traces with
    fewer than 2 valid samples pass through untouched (caller checks
    is_usable). Non-gap samples are never altered.
    """
    if mode not in GAP_FILL_MODES:
        raise ValueError(f"unknown gap fill mode {mode!r}")
    if not is_usable(samples):
        return list(samples)
    out: list[float] = []
    first_valid = next(s for s in samples if s is not None)
    for s in samples:
        if s is not None:
            out.append(s)
        elif len(out) < 2:
            out.append(first_valid if not out else out[-1])
        elif mode == "extrapolate":
            out.append(_clamp(2.0 * out[-1] - out[-2]))
        else:
            out.append(abs(2.0 * out[-2] - out[-1]))
    return out


def _outlier_adjust(prev: float, cur: float, nxt: float, mid: float) -> float:
    """One application of the outlier rule to a single interior sample."""
    neighbor_mean = 0.5 * (prev + nxt)
    if (cur > mid and cur < neighbor_mean) or (cur < mid and cur > neighbor_mean):
        return neighbor_mean
    return cur


def normalize_outliers(samples: list[float], mid: float,
                       iterations: int = DEFAULT_OUTLIER_ITERATIONS) -> list[float]:
    """Pull mid-line-ward spikes to their neighbor mean.

    Runs ``iterations`` in-place left-to-right sweeps over the gap-free
    trace; endpoints are never modified. With iterations=0 this is the
    identity.
    """
    out = list(samples)
    for _ in range(iterations):
        for f in range(1, len(out) - 1):
            out[f] = _outlier_adjust(out[f - 1], out[f], out[f + 1], mid)
    return out


def condition_trace(samples: list[Optional[float]], mid: float,
                    iterations: int = DEFAULT_OUTLIER_ITERATIONS,
                    gap_mode: str = "extrapolate") -> list[float]:
    """Full batch conditioning: fill gaps, then normalize outliers."""
    filled = fill_gaps(samples, mode=gap_mode)
    if any(s is None for s in filled):
        raise ValueError("trace has fewer than 2 valid samples; cannot condition")
    return normalize_outliers(filled, mid, iterations)


class StreamingConditioner:
    """Per-person streaming conditioner with a fixed 1-frame latency.

    Gap filling is causal and immediate; the outlier rule needs the next
    sample, so each sample is emitted once its successor arrives. flush()
    releases the final sample unmodified (it is an endpoint).
    """

    def __init__(self, mid: float, iterations: int = DEFAULT_OUTLIER_ITERATIONS,
                 gap_mode: str = "extrapolate"):
        if gap_mode not in GAP_FILL_MODES:
            raise ValueError(f"unknown gap fill mode {gap_mode!r}")
        self.mid = mid
        self.iterations = iterations
        self.gap_mode = gap_mode
        self._filled_hist: list[float] = []  # last two gap-filled values
        self._pending: Optional[tuple[int, float]] = None  # awaiting right neighbor
        self._last_emitted: Optional[float] = None
        self._leading_gaps: list[int] = []
        self._started = False

    def _fill(self, raw: Optional[float]) -> Optional[float]:
        if raw is not None:
            return raw
        if len(self._filled_hist) < 2:
            # leading gap: back-fill with the first valid value on arrival
            return None
        a1, a2 = self._filled_hist[-1], self._filled_hist[-2]
        if self.gap_mode == "extrapolate":
            return _clamp(2.0 * a1 - a2)
        return abs(2.0 * a2 - a1)

    def feed(self, frame: int, raw: Optional[float]) -> list[tuple[int, float, float]]:
        """Feed one sample; return the (frame, filled, conditioned) samples
        finalized by this arrival (possibly empty)."""
        filled = self._fill(raw)
        if filled is None:
            if not self._started:
                self._leading_gaps.append(frame)
                return []
            # single valid sample so far: repeat it
            filled = self._filled_hist[-1]
        emitted: list[tuple[int, float, float]] = []
        if not self._started:
            self._started = True
            for gap_frame in self._leading_gaps:
                emitted.extend(self._push(gap_frame, filled))
            self._leading_gaps.clear()
        emitted.extend(self._push(frame, filled))
        return emitted

    def _push(self, frame: int, filled: float) -> list[tuple[int, float, float]]:
        self._filled_hist.append(filled)
        if len(self._filled_hist) > 2:
            del self._filled_hist[0]
        out: list[tuple[int, float, float]] = []
        if self._pending is not None:
            pframe, pfilled = self._pending
            pval = pfilled
            if self._last_emitted is not None and self.iterations > 0:
                # one rule application suffices: a replaced sample equals its
                # neighbor mean and cannot re-trigger
                pval = _outlier_adjust(self._last_emitted, pval, filled, self.mid)
            out.append((pframe, pfilled, pval))
            self._last_emitted = pval
        self._pending = (frame, filled)
        return out

    def flush(self) -> list[tuple[int, float, float]]:
        """End of stream: release the trailing sample (endpoint, unmodified)."""
        out: list[tuple[int, float, float]] = []
        if self._pending is not None:
            pframe, pfilled = self._pending
            out.append((pframe, pfilled, pfilled))
            self._last_emitted = pfilled
            self._pending = None
        return out
