"""Random elemental mixtures and their attenuation spectra."""

from collections.abc import Collection
from dataclasses import dataclass

import numpy as np

from ..errors import MissingTableError, UnsatisfiableRuleError, ValidationError
from ..physics.grid import EnergyGrid, Spectrum, SpectrumUnits
from ..physics.tables import ElementLibrary

MAX_COMPONENTS = 5


@dataclass(frozen=True)
class MixtureSpec:
    """Elements of one mixture and the uniform (0, 1] scalars their LACs are weighted by."""

    components: tuple[tuple[int, float], ...]

    def __post_init__(self) -> None:
        if not 1 <= len(self.components) <= MAX_COMPONENTS:
            raise ValidationError(f"a mixture has 1..{MAX_COMPONENTS} components, got {len(self.components)}")
        zs = [z for z, _ in self.components]
        if len(set(zs)) != len(zs):
            raise ValidationError(f"mixture elements must be distinct, got {zs}")
        for z, weight in self.components:
            if not 0.0 < weight <= 1.0:
                raise ValidationError(f"mixture weight for Z={z} must be in (0, 1], got {weight}")

    @property
    def atomic_numbers(self) -> list[int]:
        return [z for z, _ in self.components]

    @property
    def weights(self) -> np.ndarray:
        return np.array([w for _, w in self.components])

    def format(self) -> str:
        return ";".join(f"{z}:{w!r}" for z, w in self.components)

    @classmethod
    def parse(cls, text: str) -> "MixtureSpec":
        components = []
        for part in text.split(";"):
            z, weight = part.split(":")
            components.append((int(z), float(weight)))
        return cls(tuple(components))


def check_rule(n_elements: int, k_edges: int | None, pool: Collection[int], k_edge_z: Collection[int]) -> None:
    """Raise if ``n_elements`` distinct elements with exactly ``k_edges`` K-edge elements cannot be drawn."""
    if k_edges is None:
        if n_elements > len(pool):
            raise UnsatisfiableRuleError(f"cannot draw {n_elements} distinct elements from {len(pool)}")
        return
    if k_edges > n_elements:
        raise UnsatisfiableRuleError(f"exactly({k_edges}) K edges needs at least {k_edges} elements, got {n_elements}")
    with_edge = [z for z in pool if z in k_edge_z]
    without_edge = len(pool) - len(with_edge)
    if k_edges > len(with_edge) or n_elements - k_edges > without_edge:
        raise UnsatisfiableRuleError(
            f"exactly({k_edges}) of {n_elements}: only {len(with_edge)} K-edge and {without_edge} other elements available"
        )


def sample_mixture(
    rng: np.random.Generator,
    n_elements: int,
    k_edges: int | None,
    k_edge_z: Collection[int],
    pool: Collection[int] = range(1, 93),
) -> MixtureSpec:
    """Draw distinct elements uniformly; ``k_edges=None`` leaves the K-edge count unconstrained."""
    check_rule(n_elements, k_edges, pool, k_edge_z)
    ordered = np.array(sorted(pool))
    if k_edges is None:
        zs = rng.choice(ordered, size=n_elements, replace=False)
    else:
        in_class = np.isin(ordered, np.array(sorted(k_edge_z), dtype=int))
        edged = rng.choice(ordered[in_class], size=k_edges, replace=False)
        plain = rng.choice(ordered[~in_class], size=n_elements - k_edges, replace=False)
        zs = np.concatenate([edged, plain])
    # 1 - U[0, 1) lies in (0, 1]
    weights = 1.0 - rng.random(n_elements)
    return MixtureSpec(tuple((int(z), float(w)) for z, w in zip(zs, weights, strict=True)))


def mix_spectrum(spec: MixtureSpec, library: ElementLibrary, grid: EnergyGrid) -> Spectrum:
    """Weighted sum of the component LACs."""
    for z in spec.atomic_numbers:
        if z not in library.tables:
            raise MissingTableError(f"no attenuation table for Z={z}")
    lac = library.lac_matrix(grid)
    rows = lac[np.array(spec.atomic_numbers) - 1]
    return Spectrum(spec.weights @ rows, SpectrumUnits.PHYSICAL)
