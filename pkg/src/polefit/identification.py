"""Frequency-domain identification: residue fitting and iterative pole relocation.

The engine follows the vector-fitting family: residues are found by linear
least squares over a partial-fraction basis, and poles are relocated by
fitting an auxiliary scaling function sigma(s) on the same basis and taking
the zeros of sigma as the new pole set. All solves are done on real-valued
stacked systems so conjugate symmetry holds by construction, and frequencies
are normalized internally to keep the Cauchy-like basis well scaled.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ArgumentError, IllConditionedError, RelocationDegenerateError
from .freqresp import FrequencyResponse
from .rational import COMPLEX_PAIR, REAL, PoleTerm, RationalModel, phase_error_deg

_COND_LIMIT = 1e14
_SIGMA_ZERO_TOL = 1e-12
_DUPLICATE_REL_TOL = 1e-12


@dataclass(frozen=True)
class FitOptions:
    """Knobs for the least-squares fit and the relocation loop.

    ``flip_unstable`` is off by default: right-half-plane poles are the
    signal a stability analysis is looking for, so they are preserved
    unless the caller explicitly asks for macromodeling-style flipping.
    """

    include_d: bool = True
    include_e: bool = False
    weight_rule: str = "uniform"
    max_relocation_iters: int = 20
    pole_motion_tol: float = 1e-8
    flip_unstable: bool = False

    def __post_init__(self):
        if self.weight_rule not in ("uniform", "inverse_magnitude"):
            raise ArgumentError(f"unknown weight_rule {self.weight_rule!r}")
        if self.max_relocation_iters < 1:
            raise ArgumentError("max_relocation_iters must be >= 1")
        if self.pole_motion_tol <= 0.0:
            raise ArgumentError("pole_motion_tol must be > 0")


@dataclass(frozen=True)
class _PoleStruct:
    """Canonical pole layout: real poles and one representative per pair."""

    kinds: tuple[str, ...]
    reps: tuple[complex, ...]

    @property
    def n_cols(self) -> int:
        return sum(1 if k == REAL else 2 for k in self.kinds)

    @property
    def n_poles(self) -> int:
        return sum(1 if k == REAL else 2 for k in self.kinds)

    def expanded(self) -> list[complex]:
        out: list[complex] = []
        for k, p in zip(self.kinds, self.reps):
            out.append(p)
            if k == COMPLEX_PAIR:
                out.append(p.conjugate())
        return out


def _canonicalize(poles) -> _PoleStruct:
    """Group a conjugate-closed pole list into real poles and pairs."""
    pending = [complex(p) for p in poles]
    if not pending:
        raise ArgumentError("need at least one pole")
    kinds: list[str] = []
    reps: list[complex] = []
    used = [False] * len(pending)
    for i, p in enumerate(pending):
        if used[i]:
            continue
        used[i] = True
        if p.imag == 0.0:
            kinds.append(REAL)
            reps.append(p)
            continue
        mate = None
        target = p.conjugate()
        for j in range(i + 1, len(pending)):
            if used[j]:
                continue
            q = pending[j]
            if abs(q - target) <= 1e-9 * max(abs(q), abs(target)):
                mate = j
                break
        if mate is None:
            raise ArgumentError(f"pole {p} has no conjugate partner")
        used[mate] = True
        kinds.append(COMPLEX_PAIR)
        reps.append(p if p.imag > 0 else p.conjugate())
    return _PoleStruct(tuple(kinds), tuple(reps))


def _near_duplicates(struct: _PoleStruct) -> list[tuple[complex, complex]]:
    poles = struct.expanded()
    dups = []
    for i in range(len(poles)):
        for j in range(i + 1, len(poles)):
            scale = max(abs(poles[i]), abs(poles[j]), 1e-30)
            if abs(poles[i] - poles[j]) <= 1e-8 * scale:
                dups.append((poles[i], poles[j]))
    return dups


def _basis_matrix(s_hat: np.ndarray, struct: _PoleStruct, w0: float) -> np.ndarray:
    """Partial-fraction basis columns in the real residue parameterization.

    Real pole: 1/(s-p). Pair (u + jv residues): columns
    1/(s-p) + 1/(s-p*) and j/(s-p) - j/(s-p*).
    """
    cols = []
    for kind, rep in zip(struct.kinds, struct.reps):
        p = rep / w0
        if kind == REAL:
            cols.append(1.0 / (s_hat - p))
        else:
            a = 1.0 / (s_hat - p)
            b = 1.0 / (s_hat - p.conjugate())
            cols.append(a + b)
            cols.append(1j * (a - b))
    return np.stack(cols, axis=1)


def _weights(response: FrequencyResponse, rule: str) -> np.ndarray:
    h = response.sample_array()
    if rule == "inverse_magnitude":
        return 1.0 / np.maximum(np.abs(h), 1e-300)
    return np.ones(len(h))


def _solve_real_lsq(a_cplx: np.ndarray, b_cplx: np.ndarray, struct: _PoleStruct,
                    check_cond: bool = True):
    """Stack Re/Im rows and solve by SVD-based least squares.

    With ``check_cond`` the solve fails above the conditioning limit, naming
    near-duplicate poles when they are the cause. Without it the minimum-norm
    solution is returned: the sigma stage of pole relocation is legitimately
    rank deficient whenever the candidate order exceeds the true order of
    noiseless data, and the minimum-norm sigma is the useful answer there
    (spurious poles barely move and are cleaned up by rho pruning later).
    """
    a = np.vstack([a_cplx.real, a_cplx.imag])
    b = np.concatenate([b_cplx.real, b_cplx.imag])
    col_norms = np.linalg.norm(a, axis=0)
    col_norms[col_norms == 0.0] = 1.0
    y, _, _, sv = np.linalg.lstsq(a / col_norms, b, rcond=None)
    if check_cond:
        cond = math.inf if sv[-1] == 0.0 else float(sv[0] / sv[-1])
        if cond > _COND_LIMIT:
            _raise_ill_conditioned(cond, struct)
    return y / col_norms


def _raise_ill_conditioned(cond: float, struct: _PoleStruct):
    dups = _near_duplicates(struct)
    if dups:
        named = ", ".join(f"{p} ~ {q}" for p, q in dups)
        raise IllConditionedError(
            f"ill-conditioned basis (cond {cond:.2e}); near-duplicate poles: {named}",
            poles=[p for p, _ in dups],
        )
    raise IllConditionedError(
        f"ill-conditioned basis (cond {cond:.2e}) for poles {struct.expanded()}",
        poles=struct.expanded(),
    )


def _unpack_residues(x: np.ndarray, struct: _PoleStruct, w0: float):
    residues: list[complex] = []
    i = 0
    for kind in struct.kinds:
        if kind == REAL:
            residues.append(complex(x[i] * w0))
            i += 1
        else:
            residues.append(complex(x[i], x[i + 1]) * w0)
            i += 2
    return residues, i


def _band_scale(response: FrequencyResponse) -> float:
    g = response.grid
    return 2.0 * math.pi * math.sqrt(g.f_min * g.f_max)


def fit_residues(response: FrequencyResponse, poles, options: FitOptions = FitOptions()) -> RationalModel:
    """Least-squares residues (and d, e) for a fixed conjugate-closed pole set."""
    struct = _canonicalize(poles)
    w0 = _band_scale(response)
    s_hat = 2j * math.pi * response.grid.asarray() / w0
    h = response.sample_array()
    w = _weights(response, options.weight_rule)

    blocks = [_basis_matrix(s_hat, struct, w0)]
    if options.include_d:
        blocks.append(np.ones((len(s_hat), 1)))
    if options.include_e:
        blocks.append(s_hat[:, None])
    a = np.hstack(blocks) * w[:, None]
    x = _solve_real_lsq(a, h * w, struct)

    residues, i = _unpack_residues(x, struct, w0)
    d = float(x[i]) if options.include_d else 0.0
    if options.include_d:
        i += 1
    e = float(x[i]) / w0 if options.include_e else 0.0

    terms = []
    for kind, rep, res in zip(struct.kinds, struct.reps, residues):
        if kind == REAL:
            terms.append(PoleTerm(REAL, rep, complex(res.real)))
        else:
            terms.append(PoleTerm(COMPLEX_PAIR, rep, res))
    band = (response.grid.f_min, response.grid.f_max)
    return RationalModel(tuple(terms), d=d, e=e, band=band)


def _relocation_matrix(struct: _PoleStruct, x_tilde: np.ndarray, w0: float) -> np.ndarray:
    """Real block state matrix A - b*c whose eigenvalues are the zeros of sigma."""
    n = struct.n_poles
    a = np.zeros((n, n))
    bv = np.zeros(n)
    i = 0
    for kind, rep in zip(struct.kinds, struct.reps):
        p = rep / w0
        if kind == REAL:
            a[i, i] = p.real
            bv[i] = 1.0
            i += 1
        else:
            a[i, i] = p.real
            a[i, i + 1] = p.imag
            a[i + 1, i] = -p.imag
            a[i + 1, i + 1] = p.real
            bv[i] = 2.0
            i += 2
    c = np.asarray(x_tilde, dtype=float)
    return a - np.outer(bv, c)


def relocate_poles(response: FrequencyResponse, poles, options: FitOptions = FitOptions()) -> list[complex]:
    """One vector-fitting relocation step.

    Fits sigma(s)*H(s) ~ fit(s) with sigma = 1 + sum c~_k/(s-q_k) and
    fit = d + sum c_k/(s-q_k) sharing the starting poles q_k, then returns
    the zeros of sigma as the relocated pole set (conjugate-closed).
    """
    struct = _canonicalize(poles)
    w0 = _band_scale(response)
    s_hat = 2j * math.pi * response.grid.asarray() / w0
    h = response.sample_array()
    w = _weights(response, options.weight_rule)

    dups = _near_duplicates(struct)
    if dups:
        named = ", ".join(f"{p} ~ {q}" for p, q in dups)
        raise IllConditionedError(
            f"sigma fit is singular; near-duplicate starting poles: {named}",
            poles=[p for p, _ in dups],
        )
    phi = _basis_matrix(s_hat, struct, w0)
    blocks = [phi, np.ones((len(s_hat), 1))]
    if options.include_e:
        blocks.append(s_hat[:, None])
    blocks.append(-phi * h[:, None])
    a = np.hstack(blocks) * w[:, None]
    x = _solve_real_lsq(a, h * w, struct, check_cond=False)

    n_cols = struct.n_cols
    x_tilde = x[-n_cols:]

    sigma = 1.0 + phi @ x_tilde
    n_zero = int(np.sum(np.abs(sigma) < _SIGMA_ZERO_TOL))
    if n_zero > 0.1 * len(sigma):
        raise RelocationDegenerateError(
            f"sigma(s) numerically zero at {n_zero}/{len(sigma)} grid points"
        )

    h_mat = _relocation_matrix(struct, x_tilde, w0)
    eig = np.linalg.eigvals(h_mat) * w0
    if options.flip_unstable:
        eig = np.where(eig.real > 0.0, eig - 2.0 * eig.real, eig)
    return _close_conjugates(eig)


def _close_conjugates(eig: np.ndarray) -> list[complex]:
    """Order eigenvalues of a real matrix into reals plus adjacent conjugate pairs."""
    reals = sorted(float(z.real) for z in eig if z.imag == 0.0)
    pos = sorted((complex(z) for z in eig if z.imag > 0.0), key=lambda z: (z.real, z.imag))
    n_neg = sum(1 for z in eig if z.imag < 0.0)
    if len(pos) != n_neg:
        raise ArgumentError("relocated poles are not conjugate-closed")
    out: list[complex] = [complex(r) for r in reals]
    for p in pos:
        out.append(p)
        out.append(p.conjugate())
    return out


def _pole_displacement(old, new) -> float:
    a = np.sort_complex(np.asarray(old, dtype=complex))
    b = np.sort_complex(np.asarray(new, dtype=complex))
    if len(a) != len(b):
        return math.inf
    scale = np.maximum(np.maximum(np.abs(a), np.abs(b)), 1e-30)
    return float(np.max(np.abs(b - a) / scale))


def identify(response: FrequencyResponse, initial_poles, options: FitOptions = FitOptions()) -> RationalModel:
    """Relocate poles until they settle, then fit residues on the final set."""
    poles = _canonicalize(initial_poles).expanded()
    for _ in range(options.max_relocation_iters):
        new_poles = relocate_poles(response, poles, options)
        motion = _pole_displacement(poles, new_poles)
        poles = new_poles
        if motion < options.pole_motion_tol:
            break
    model = fit_residues(response, poles, options)
    return model.with_annotations(phase_error=phase_error_deg(model, response))


# --- shared-pole (MIMO) variants -------------------------------------------


def _check_common_grid(responses) -> None:
    if len(responses) < 2:
        raise ArgumentError("need at least 2 responses")
    ref = responses[0].grid.points
    for r in responses[1:]:
        if r.grid.points != ref:
            raise ArgumentError("responses must share an identical frequency grid")


def relocate_poles_shared(responses, poles, options: FitOptions = FitOptions()) -> list[complex]:
    """One relocation step on the stacked system of several ports.

    All ports share sigma and the pole set; each port gets its own
    fit-function residues and d term.
    """
    _check_common_grid(responses)
    struct = _canonicalize(poles)
    w0 = _band_scale(responses[0])
    s_hat = 2j * math.pi * responses[0].grid.asarray() / w0
    phi = _basis_matrix(s_hat, struct, w0)
    n_cols = struct.n_cols
    n_port_cols = n_cols + 1 + (1 if options.include_e else 0)
    n_ports = len(responses)
    ns = len(s_hat)

    a = np.zeros((n_ports * ns, n_ports * n_port_cols + n_cols), dtype=complex)
    b = np.zeros(n_ports * ns, dtype=complex)
    for p_idx, resp in enumerate(responses):
        h = resp.sample_array()
        w = _weights(resp, options.weight_rule)
        rows = slice(p_idx * ns, (p_idx + 1) * ns)
        col0 = p_idx * n_port_cols
        a[rows, col0 : col0 + n_cols] = phi * w[:, None]
        a[rows, col0 + n_cols] = w
        if options.include_e:
            a[rows, col0 + n_cols + 1] = s_hat * w
        a[rows, -n_cols:] = -phi * (h * w)[:, None]
        b[rows] = h * w
    dups = _near_duplicates(struct)
    if dups:
        named = ", ".join(f"{p} ~ {q}" for p, q in dups)
        raise IllConditionedError(
            f"sigma fit is singular; near-duplicate starting poles: {named}",
            poles=[p for p, _ in dups],
        )
    x = _solve_real_lsq(a, b, struct, check_cond=False)
    x_tilde = x[-n_cols:]

    sigma = 1.0 + phi @ x_tilde
    n_zero = int(np.sum(np.abs(sigma) < _SIGMA_ZERO_TOL))
    if n_zero > 0.1 * len(sigma):
        raise RelocationDegenerateError(
            f"sigma(s) numerically zero at {n_zero}/{len(sigma)} grid points"
        )
    h_mat = _relocation_matrix(struct, x_tilde, w0)
    eig = np.linalg.eigvals(h_mat) * w0
    if options.flip_unstable:
        eig = np.where(eig.real > 0.0, eig - 2.0 * eig.real, eig)
    return _close_conjugates(eig)


def identify_shared(responses, initial_poles, options: FitOptions = FitOptions()):
    """Shared-pole identification: relocation on the stacked system, then a
    residue fit per port. Returns (poles, list of per-port models)."""
    poles = _canonicalize(initial_poles).expanded()
    for _ in range(options.max_relocation_iters):
        new_poles = relocate_poles_shared(responses, poles, options)
        motion = _pole_displacement(poles, new_poles)
        poles = new_poles
        if motion < options.pole_motion_tol:
            break
    models = []
    for resp in responses:
        m = fit_residues(resp, poles, options)
        models.append(m.with_annotations(phase_error=phase_error_deg(m, resp)))
    return poles, models
