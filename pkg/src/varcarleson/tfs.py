"""Time-frequency-scale geometry: grids, trees, strips, fields, pullbacks.

Points of the parameter space are triples (eta, y, t) of modulation,
translation, and scale.  A *tree* with top (xi_T, x_T, s_T) is the image of
the model region {theta in Theta, |zeta| < 1 - sigma, 0 < sigma} under

    (theta, zeta, sigma) -> (xi_T + theta/(s_T sigma), x_T + s_T zeta, s_T sigma),

split into "in" and "out" parts by a subinterval Theta_in.  A *strip* keeps
only the translation-scale constraint |y - x_D| < s_D - t.  Discretized
fields live on a product grid (uniform eta, uniform y, geometric t); the
reference measure deta dy dt gets node weights d_eta * d_y * (t * log rho),
and on a tree the model measure dtheta dzeta dsigma/sigma pulls back to
(deta dy dt)/s_T.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.interpolate import RegularGridInterpolator

from .core import ConfigurationError, NormedSpace, norm_eval

__all__ = [
    "TFSGrid",
    "OuterField",
    "Tree",
    "Strip",
    "TreeDictionary",
    "StripDictionary",
    "coord_forward",
    "coord_inverse",
    "tree_membership",
    "strip_membership",
    "measure_mu",
    "measure_nu",
    "pullback",
    "field_write",
    "field_read",
]


def _uniform_steps(name: str, arr: np.ndarray) -> float:
    d = np.diff(arr)
    if arr.size < 2 or np.any(d <= 0):
        raise ConfigurationError(f"{name} must be ascending with >= 2 points")
    if not np.allclose(d, d[0], rtol=1e-9, atol=0.0):
        raise ConfigurationError(f"{name} must be uniformly spaced")
    return float(d[0])


@dataclass(frozen=True)
class TFSGrid:
    """Product grid: uniform eta and y, geometric t."""

    eta: np.ndarray
    y: np.ndarray
    t: np.ndarray

    def __post_init__(self):
        eta = np.asarray(self.eta, dtype=float)
        y = np.asarray(self.y, dtype=float)
        t = np.asarray(self.t, dtype=float)
        d_eta = _uniform_steps("eta grid", eta)
        d_y = _uniform_steps("y grid", y)
        if t.size < 2 or np.any(t <= 0):
            raise ConfigurationError("t grid needs >= 2 positive points")
        ratios = t[1:] / t[:-1]
        if np.any(ratios <= 1.0) or not np.allclose(ratios, ratios[0], rtol=1e-9, atol=0.0):
            raise ConfigurationError("t grid must be geometric with ratio > 1")
        for name, arr in (("eta", eta), ("y", y), ("t", t)):
            arr = np.ascontiguousarray(arr)
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)
        object.__setattr__(self, "d_eta", d_eta)
        object.__setattr__(self, "d_y", d_y)
        object.__setattr__(self, "log_ratio", float(np.log(ratios[0])))

    @classmethod
    def build(
        cls,
        eta_range: tuple,
        eta_steps: int,
        y_range: tuple,
        y_steps: int,
        t_min: float,
        t_max: float,
        ratio: float,
    ) -> "TFSGrid":
        if not (0 < t_min < t_max) or not ratio > 1.0:
            raise ConfigurationError(
                f"need 0 < t_min < t_max and ratio > 1, got {t_min}, {t_max}, {ratio}"
            )
        # tolerate roundoff when t_max/t_min is an exact power of ratio
        count = int(math.floor(math.log(t_max / t_min) / math.log(ratio) + 1e-9)) + 1
        t = t_min * ratio ** np.arange(max(count, 2))
        return cls(
            np.linspace(eta_range[0], eta_range[1], int(eta_steps)),
            np.linspace(y_range[0], y_range[1], int(y_steps)),
            t,
        )

    @property
    def shape(self) -> tuple:
        return (self.eta.size, self.y.size, self.t.size)

    def cell_weights(self) -> np.ndarray:
        """deta dy dt node weights, shape (n_eta, n_y, n_t)."""
        w_t = self.t * self.log_ratio
        return (
            np.full(self.eta.size, self.d_eta)[:, None, None]
            * np.full(self.y.size, self.d_y)[None, :, None]
            * w_t[None, None, :]
        )


@dataclass(frozen=True)
class OuterField:
    """A C^d-valued function sampled on a TFSGrid."""

    grid: TFSGrid
    values: np.ndarray  # (n_eta, n_y, n_t, d) complex
    space: NormedSpace

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=complex)
        expected = self.grid.shape + (self.space.dim,)
        if vals.shape != expected:
            raise ConfigurationError(f"values must have shape {expected}, got {vals.shape}")
        if not np.all(np.isfinite(vals)):
            raise ConfigurationError("field values must be finite")
        vals = np.ascontiguousarray(vals)
        vals.flags.writeable = False
        object.__setattr__(self, "values", vals)

    def norms(self) -> np.ndarray:
        """Pointwise coordinate-space norms, shape (n_eta, n_y, n_t)."""
        return norm_eval(self.values, self.space)

    def restrict(self, mask: np.ndarray) -> "OuterField":
        """Zero the field outside the boolean node mask."""
        if mask.shape != self.grid.shape:
            raise ValueError(f"mask shape {mask.shape} != grid shape {self.grid.shape}")
        return OuterField(self.grid, np.where(mask[..., None], self.values, 0.0), self.space)


@dataclass(frozen=True)
class Tree:
    """Top (xi, x, s) plus the shared angular windows Theta_in subset Theta."""

    xi: float
    x: float
    s: float
    theta: tuple
    theta_in: tuple

    def __post_init__(self):
        if not (self.s > 0 and math.isfinite(self.s)):
            raise ConfigurationError(f"tree scale must be positive, got {self.s}")
        lo, hi = map(float, self.theta)
        lo_in, hi_in = map(float, self.theta_in)
        if not (lo < hi and lo_in < hi_in):
            raise ConfigurationError("theta windows must be nonempty open intervals")
        if lo_in < lo or hi_in > hi:
            raise ConfigurationError("theta_in must be contained in theta")
        object.__setattr__(self, "theta", (lo, hi))
        object.__setattr__(self, "theta_in", (lo_in, hi_in))

    @property
    def top(self) -> tuple:
        return (self.xi, self.x, self.s)


@dataclass(frozen=True)
class Strip:
    """Translation-scale strip with top (x, s)."""

    x: float
    s: float

    def __post_init__(self):
        if not (self.s > 0 and math.isfinite(self.s)):
            raise ConfigurationError(f"strip scale must be positive, got {self.s}")


def coord_forward(top: tuple, theta, zeta, sigma) -> tuple:
    """Model coordinates -> parameter space, broadcasting elementwise."""
    xi, x, s = (float(v) for v in top)
    theta = np.asarray(theta, dtype=float)
    zeta = np.asarray(zeta, dtype=float)
    sigma = np.asarray(sigma, dtype=float)
    if np.any(sigma <= 0):
        raise ValueError("sigma must be positive")
    t = s * sigma
    return (xi + theta / t, x + s * zeta, t)


def coord_inverse(top: tuple, eta, y, t) -> tuple:
    """Parameter space -> model coordinates; inverse of coord_forward."""
    xi, x, s = (float(v) for v in top)
    eta = np.asarray(eta, dtype=float)
    y = np.asarray(y, dtype=float)
    t = np.asarray(t, dtype=float)
    if np.any(t <= 0):
        raise ValueError("t must be positive")
    return (t * (eta - xi), (y - x) / s, t / s)


def _model_coords(grid: TFSGrid, tree: Tree) -> tuple:
    theta = grid.t[None, :] * (grid.eta[:, None] - tree.xi)  # (n_eta, n_t)
    zeta = (grid.y - tree.x) / tree.s  # (n_y,)
    sigma = grid.t / tree.s  # (n_t,)
    return theta, zeta, sigma


def tree_membership(grid: TFSGrid, tree: Tree, region: str = "full") -> np.ndarray:
    """Boolean node mask for the tree, its in-part, or its out-part.

    Membership uses open conditions: theta strictly inside the window and
    |zeta| < 1 - sigma (so a node at the top scale, sigma = 1, is excluded).
    The in/out parts partition the tree by theta in Theta_in or not.
    """
    theta, zeta, sigma = _model_coords(grid, tree)
    lo, hi = tree.theta
    ang = (theta > lo) & (theta < hi)  # (n_eta, n_t)
    spatial = np.abs(zeta)[None, :, None] < (1.0 - sigma)[None, None, :]  # (1, n_y, n_t)
    full = ang[:, None, :] & spatial
    if region == "full":
        return full
    lo_in, hi_in = tree.theta_in
    inner = (theta > lo_in) & (theta < hi_in)
    if region == "in":
        return full & inner[:, None, :]
    if region == "out":
        return full & ~inner[:, None, :]
    raise ValueError(f"region must be 'full', 'in', or 'out', got {region!r}")


def strip_membership(grid: TFSGrid, strip: Strip) -> np.ndarray:
    """Boolean node mask |y - x_D| < s_D - t (implies t < s_D)."""
    gap = strip.s - grid.t  # (n_t,)
    mask = np.abs(grid.y - strip.x)[None, :, None] < gap[None, None, :]
    return np.broadcast_to(mask, grid.shape)


def measure_mu(tree: Tree) -> float:
    """Tree measure: the top scale."""
    return tree.s


def measure_nu(strip: Strip) -> float:
    """Strip measure: the top scale."""
    return strip.s


def _scale_ladder(t_min: float, t_max: float, factor: float, extra: int) -> np.ndarray:
    if factor <= 1.0:
        raise ConfigurationError(f"scale factor must exceed 1, got {factor}")
    count = int(math.ceil(math.log(t_max / t_min) / math.log(factor))) + 1 + extra
    return t_min * factor ** np.arange(1, count + 1)


@dataclass(frozen=True, eq=False)
class TreeDictionary:
    """Trees with tops on the grid across a ladder of scales, plus node masks."""

    grid: TFSGrid
    trees: tuple
    masks: tuple  # boolean arrays aligned with trees

    @classmethod
    def build(
        cls,
        grid: TFSGrid,
        theta: tuple,
        theta_in: tuple,
        *,
        eta_stride: int = 1,
        y_stride: int = 1,
        scale_factor: float = 2.0,
        extra_scales: int = 1,
    ) -> "TreeDictionary":
        scales = _scale_ladder(grid.t[0], grid.t[-1], scale_factor, extra_scales)
        trees = []
        for s in scales:
            for xi in grid.eta[::eta_stride]:
                for x in grid.y[::y_stride]:
                    trees.append(Tree(float(xi), float(x), float(s), theta, theta_in))
        masks = []
        kept = []
        covered = np.zeros(grid.shape, dtype=bool)
        for tree in trees:
            mask = tree_membership(grid, tree, "full")
            if mask.any():
                m = np.ascontiguousarray(mask)
                m.flags.writeable = False
                kept.append(tree)
                masks.append(m)
                covered |= mask
        if not covered.all():
            missing = int((~covered).sum())
            raise ConfigurationError(
                f"tree dictionary does not cover the grid ({missing} nodes uncovered); "
                "reduce strides or add scales"
            )
        return cls(grid=grid, trees=tuple(kept), masks=tuple(masks))

    def __len__(self) -> int:
        return len(self.trees)


@dataclass(frozen=True, eq=False)
class StripDictionary:
    """Strips with tops on the y grid across a ladder of scales, plus masks."""

    grid: TFSGrid
    strips: tuple
    masks: tuple

    @classmethod
    def build(
        cls,
        grid: TFSGrid,
        *,
        y_stride: int = 1,
        scale_factor: float = 2.0,
        extra_scales: int = 1,
    ) -> "StripDictionary":
        scales = _scale_ladder(grid.t[0], grid.t[-1], scale_factor, extra_scales)
        strips = [Strip(float(x), float(s)) for s in scales for x in grid.y[::y_stride]]
        masks = []
        kept = []
        covered = np.zeros(grid.shape, dtype=bool)
        for strip in strips:
            mask = strip_membership(grid, strip)
            if mask.any():
                m = np.ascontiguousarray(mask)
                m.flags.writeable = False
                kept.append(strip)
                masks.append(m)
                covered |= mask
        if not covered.all():
            missing = int((~covered).sum())
            raise ConfigurationError(
                f"strip dictionary does not cover the grid ({missing} nodes uncovered); "
                "reduce the stride or add scales"
            )
        return cls(grid=grid, strips=tuple(kept), masks=tuple(masks))

    def __len__(self) -> int:
        return len(self.strips)


def pullback(
    tree: Tree,
    field: OuterField,
    theta_pts: np.ndarray,
    zeta_pts: np.ndarray,
    sigma_pts: np.ndarray,
) -> np.ndarray:
    """Demodulated model-coordinate samples of the field on the tree closure.

    Interpolates the field trilinearly in (eta, y, log t) at the image of the
    model points, zero outside the grid and outside the closed model region
    {theta in closure(Theta), |zeta| <= 1 - sigma, sigma <= 1}, and removes
    the top's modulation with the phase exp(-2 pi i xi_T (x_T + s_T zeta)).
    Returns a complex array of shape (len(theta), len(zeta), len(sigma), d).
    """
    theta_pts = np.asarray(theta_pts, dtype=float)
    zeta_pts = np.asarray(zeta_pts, dtype=float)
    sigma_pts = np.asarray(sigma_pts, dtype=float)
    if np.any(sigma_pts <= 0):
        raise ValueError("sigma must be positive")
    grid = field.grid
    interp = RegularGridInterpolator(
        (grid.eta, grid.y, np.log(grid.t)),
        field.values,
        method="linear",
        bounds_error=False,
        fill_value=0.0,
    )
    th, ze, si = np.meshgrid(theta_pts, zeta_pts, sigma_pts, indexing="ij")
    eta, y, t = coord_forward(tree.top, th, ze, si)
    pts = np.stack([eta.ravel(), y.ravel(), np.log(t).ravel()], axis=-1)
    vals = interp(pts).reshape(th.shape + (field.space.dim,))
    lo, hi = tree.theta
    inside = (th >= lo) & (th <= hi) & (np.abs(ze) <= 1.0 - si) & (si <= 1.0)
    phase = np.exp(-2j * np.pi * tree.xi * (tree.x + tree.s * ze))
    return np.where(inside[..., None], vals * phase[..., None], 0.0)


def field_write(field: OuterField, path) -> None:
    """Binary dump (npz): grid axes, values, and the space parameters."""
    np.savez(
        path,
        eta=field.grid.eta,
        y=field.grid.y,
        t=field.grid.t,
        values=field.values,
        dim=np.array([field.space.dim]),
        exponent=np.array([field.space.exponent]),
    )


def field_read(path) -> OuterField:
    """Inverse of :func:`field_write`."""
    with np.load(path) as data:
        grid = TFSGrid(data["eta"], data["y"], data["t"])
        space = NormedSpace(int(data["dim"][0]), float(data["exponent"][0]))
        return OuterField(grid, data["values"], space)
