def clamp(value: float, min_val: float, max_val: float) -> float:
    """Clamp value between min_val and max_val."""
    return max(min_val, min(max_val, value))


def population(w: float) -> float:
    """Excited-state population (1 + w) / 2, clipped to [0, 1] against round-off."""
    return clamp((1.0 + float(w)) / 2.0, 0.0, 1.0)


def from_unit_box(x, rows) -> list[float]:
    """Map coordinates in [0, 1]^n onto the (lo, hi) rows of a bounds box.

    Coordinates outside [0, 1] are clamped to the box faces.
    """
    return [lo + (hi - lo) * clamp(float(xi), 0.0, 1.0) for (lo, hi), xi in zip(rows, x)]


def to_unit_box(values, rows) -> list[float]:
    """Inverse of from_unit_box for points inside the box."""
    return [(v - lo) / (hi - lo) for v, (lo, hi) in zip(values, rows)]
