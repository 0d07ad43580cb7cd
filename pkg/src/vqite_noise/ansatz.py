"""Layered sequential Pauli-rotation ansatz on the |+...+> reference state.

``|Psi(theta)> = prod_mu exp(-i theta_mu P_mu) |+>^N`` with the first generator
applied first.  One layer sweeps the bonds from the chain end inward,
j = N-1, ..., 1, each bond contributing
``Y_{j+1}Y_j, Z_{j+1}Z_j, X_{j+1}X_j, X_{j+1}Y_j`` in that order, followed by
single-site ``X_j`` for j = 1..N.

With this ordering the first bond box acts on the untouched ``|++>`` pair, so
the metric columns of ``Y_N Y_{N-1}`` and ``Z_N Z_{N-1}`` are anti-parallel and
the column of ``X_N X_{N-1}`` vanishes for every theta.  The generators
``Z_N Z_{N-1}``, ``X_N`` and ``X_N X_{N-1}`` of the first layer are dropped by
default.  Both the sweep direction and the intra-bond order are configurable;
:func:`vqite_noise.harness.verify_structure` reports the dependencies of any
choice.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .pauli_state import PauliString, StateVector, pauli_action

__all__ = [
    "DEFAULT_BOND_ORDER",
    "DEFAULT_SWEEP",
    "AnsatzSpec",
    "build_default_ansatz",
    "default_removed",
    "derivative_state",
    "derivative_states",
    "initial_parameters",
    "prepare_array",
    "prepare_state",
    "shifted_states",
]

# (letter on site j+1, letter on site j)
DEFAULT_BOND_ORDER = (("Y", "Y"), ("Z", "Z"), ("X", "X"), ("X", "Y"))
DEFAULT_SWEEP = "descending"


@dataclass(frozen=True)
class AnsatzSpec:
    n: int
    p: int
    generators: tuple[PauliString, ...]
    layers: tuple[int, ...]
    removed: tuple[PauliString, ...] = field(default=())

    def __post_init__(self):
        if len(self.generators) != len(self.layers):
            raise ValueError("one layer index is required per generator")
        for g in self.generators:
            if len(g) != self.n:
                raise ValueError(f"generator {g} does not act on {self.n} qubits")

    @property
    def n_params(self) -> int:
        return len(self.generators)

    def reference(self) -> StateVector:
        return StateVector.plus(self.n)

    def labels(self) -> list[str]:
        return [g.label() for g in self.generators]

    def index(self, label: str, layer: int = 1) -> int:
        """Position of the generator with compact label ``label`` (e.g. ``"Y6Y5"``)."""
        for k, (g, lay) in enumerate(zip(self.generators, self.layers)):
            if lay == layer and g.label() == label:
                return k
        raise KeyError(f"no generator {label} in layer {layer}")

    def to_text(self) -> str:
        """One generator per line as a qubit-ordered letter string."""
        return "".join(f"{g.letters}\n" for g in self.generators)

    @classmethod
    def from_text(cls, text: str, p: int = 1) -> AnsatzSpec:
        gens = tuple(PauliString(line.strip()) for line in text.splitlines() if line.strip())
        if not gens:
            raise ValueError("empty ansatz description")
        per_layer = -(-len(gens) // p)
        layers = tuple(1 + k // per_layer for k in range(len(gens)))
        return cls(len(gens[0]), p, gens, layers)


def default_removed(n: int) -> tuple[PauliString, ...]:
    return (
        PauliString.from_sites(n, {n: "Z", n - 1: "Z"}),
        PauliString.from_sites(n, {n: "X"}),
        PauliString.from_sites(n, {n: "X", n - 1: "X"}),
    )


def _layer(n: int, bond_order, sweep: str) -> list[PauliString]:
    if sweep == "descending":
        bonds = range(n - 1, 0, -1)
    elif sweep == "ascending":
        bonds = range(1, n)
    else:
        raise ValueError(f"unknown sweep direction {sweep!r}")
    gens = []
    for j in bonds:
        for upper, lower in bond_order:
            gens.append(PauliString.from_sites(n, {j + 1: upper, j: lower}))
    gens += [PauliString.from_sites(n, {j: "X"}) for j in range(1, n + 1)]
    return gens


def build_default_ansatz(
    n: int,
    p: int = 1,
    *,
    bond_order=DEFAULT_BOND_ORDER,
    sweep: str = DEFAULT_SWEEP,
    removed: tuple[PauliString, ...] | None = None,
) -> AnsatzSpec:
    """Build the layered ansatz, removing ``removed`` from the first layer.

    ``removed=None`` selects the default three operators on the last bond;
    pass ``()`` for the full, unpruned gate set.
    """
    if n < 3:
        raise ValueError(f"the default ansatz needs n >= 3, got n={n}")
    if p < 1:
        raise ValueError(f"layer count must be positive, got p={p}")
    if removed is None:
        removed = default_removed(n)
    removed = tuple(removed)
    gens, layers = [], []
    for layer in range(1, p + 1):
        for g in _layer(n, bond_order, sweep):
            if layer == 1 and g in removed:
                continue
            gens.append(g)
            layers.append(layer)
    return AnsatzSpec(n, p, tuple(gens), tuple(layers), removed)


def initial_parameters(
    spec: AnsatzSpec, mode: str = "uniform", scale: float = 0.01, seed: int | None = 0
) -> np.ndarray:
    """Starting angles.

    ``theta = 0`` is a stationary point of the energy, so a small offset is
    needed.  ``mode="uniform"`` draws i.i.d. from ``[-scale, scale]``;
    ``mode="constant"`` sets every angle to ``scale``; ``mode="zero"`` is
    provided for tests.
    """
    if mode == "uniform":
        return np.random.default_rng(seed).uniform(-scale, scale, spec.n_params)
    if mode == "constant":
        return np.full(spec.n_params, float(scale))
    if mode == "zero":
        return np.zeros(spec.n_params)
    raise ValueError(f"unknown init mode {mode!r}")


def _check_theta(spec: AnsatzSpec, theta) -> np.ndarray:
    theta = np.asarray(theta, dtype=float)
    if theta.shape != (spec.n_params,):
        raise ValueError(f"expected {spec.n_params} parameters, got shape {theta.shape}")
    return theta


def _actions(spec: AnsatzSpec):
    return [pauli_action(g.letters) for g in spec.generators]


def _rotate_rows(rows: np.ndarray, action, cos, sin) -> np.ndarray:
    source, phase = action
    return cos * rows - 1j * sin * (phase * rows[..., source])


def prepare_array(spec: AnsatzSpec, theta) -> np.ndarray:
    theta = _check_theta(spec, theta)
    psi = spec.reference().amplitudes.copy()
    for action, t in zip(_actions(spec), theta):
        psi = _rotate_rows(psi, action, np.cos(t), np.sin(t))
    return psi


def prepare_state(spec: AnsatzSpec, theta) -> StateVector:
    return StateVector(prepare_array(spec, theta))


def derivative_states(spec: AnsatzSpec, theta) -> tuple[np.ndarray, np.ndarray]:
    """Return ``(psi, dpsi)`` with ``dpsi[mu] = d|Psi>/d theta_mu``.

    All tangent vectors are carried through one left-to-right sweep: after gate
    ``mu`` the row ``-i P_mu |partial>`` is spawned and every later gate acts on
    the whole stack.
    """
    theta = _check_theta(spec, theta)
    n_theta = spec.n_params
    stack = np.zeros((n_theta + 1, 1 << spec.n), dtype=np.complex128)
    stack[0] = spec.reference().amplitudes
    for mu, (action, t) in enumerate(zip(_actions(spec), theta)):
        rows = stack[: mu + 1]
        stack[: mu + 1] = _rotate_rows(rows, action, np.cos(t), np.sin(t))
        source, phase = action
        stack[mu + 1] = -1j * phase * stack[0, source]
    return stack[0].copy(), stack[1:].copy()


def derivative_state(spec: AnsatzSpec, theta, mu: int) -> StateVector:
    """Unnormalized tangent vector ``d|Psi>/d theta_mu`` (norm 1 by construction)."""
    if not 0 <= mu < spec.n_params:
        raise IndexError(f"parameter index {mu} outside 0..{spec.n_params - 1}")
    return StateVector(derivative_states(spec, theta)[1][mu])


def shifted_states(spec: AnsatzSpec, theta, shift: float) -> np.ndarray:
    """States with one angle displaced, shape ``(2 * n_params, 2^N)``.

    Row ``2 mu`` has ``theta_mu + shift`` and row ``2 mu + 1`` has
    ``theta_mu - shift``.
    """
    theta = _check_theta(spec, theta)
    n_theta = spec.n_params
    stack = np.empty((2 * n_theta, 1 << spec.n), dtype=np.complex128)
    # rows of parameters not reached yet all equal the unshifted prefix state
    prefix = spec.reference().amplitudes.copy()
    c_shift, s_shift = np.cos(shift), np.sin(shift)
    for mu, (action, t) in enumerate(zip(_actions(spec), theta)):
        c, s = np.cos(t), np.sin(t)
        if mu:
            stack[: 2 * mu] = _rotate_rows(stack[: 2 * mu], action, c, s)
        source, phase = action
        flipped = phase * prefix[source]
        # exp(-i(t +- shift)P) = cos(t +- shift) - i sin(t +- shift) P
        for row, sign in ((2 * mu, 1.0), (2 * mu + 1, -1.0)):
            ca = c * c_shift - sign * s * s_shift
            sa = s * c_shift + sign * c * s_shift
            stack[row] = ca * prefix - 1j * sa * flipped
        prefix = c * prefix - 1j * s * flipped
    return stack
