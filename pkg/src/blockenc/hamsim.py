"""Hamiltonian simulation of block-encoded matrices and smooth matrix functions.

Functional blocks are computed spectrally from the symmetrized extracted
block, which is exact at desk scale, while the ledger charges the analytic
costs of the corresponding circuit constructions.  Matrix powers additionally
have a truncated-Taylor "series" path so the two routes can be compared.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .encoding import BlockEncoding, _pad_ancillas
from .errors import DimensionError, PreconditionError, SpectrumError
from .ledger import CostLedger
from .linalg import hermitianize, spectral_norm, unitary_dilation

_SPECTRUM_SLACK = 1e-9


def _sym_block(u: BlockEncoding) -> np.ndarray:
    return hermitianize(u.applied())


def _eigh_target(u: BlockEncoding):
    if u.target is None:
        return None
    return np.linalg.eigh(hermitianize(u.target))


def _log2(x: float) -> float:
    return math.log2(max(x, 2.0))


def block_ham_sim(u: BlockEncoding, t: float, eps: float) -> BlockEncoding:
    """(1, a+2, eps)-encoding of e^{itH} from an (alpha, a, eps/|2t|)-encoding of H."""
    if t != 0.0 and u.epsilon > eps / abs(2.0 * t) + 1e-15:
        raise PreconditionError(
            f"input encoding error {u.epsilon} exceeds eps/|2t| = {eps / abs(2 * t)}"
        )
    h = _sym_block(u)
    w, v = np.linalg.eigh(h)
    func = (v * np.exp(1j * t * w)) @ v.conj().T
    rounds = abs(u.alpha * t) + _log2(1.0 / eps) if eps > 0 else abs(u.alpha * t) + 1.0
    target = None
    eig = _eigh_target(u)
    if eig is not None:
        tw, tv = eig
        target = (tv * np.exp(1j * t * tw)) @ tv.conj().T
    return BlockEncoding(
        unitary=_pad_ancillas(func, u.ancillas + 2),
        alpha=1.0,
        ancillas=u.ancillas + 2,
        epsilon=float(eps),
        system_dim=u.system_dim,
        ledger=u.ledger.scaled(rounds).with_gates(u.ancillas * rounds),
        target=target,
    )


def signed_index(i: int, big_m: int) -> int:
    """Two's-complement decoding of the clock index: m = -b_J 2^J + rest."""
    return i - 2 * big_m if i >= big_m else i


def controlled_factors(h: np.ndarray, big_m: int, gamma: float) -> list[np.ndarray]:
    """The J+1 controlled-evolution factors whose product is the clocked unitary."""
    j_bits = int(round(math.log2(big_m)))
    d = h.shape[0]
    w, v = np.linalg.eigh(h)
    factors = []
    for j in range(j_bits + 1):
        sign = -1.0 if j == j_bits else 1.0
        step = (v * np.exp(1j * sign * (2**j) * gamma * w)) @ v.conj().T
        blocks = []
        for i in range(2 * big_m):
            bit = (i >> j) & 1
            blocks.append(step if bit else np.eye(d))
        factor = np.zeros((2 * big_m * d, 2 * big_m * d), dtype=complex)
        for i, blk in enumerate(blocks):
            factor[i * d : (i + 1) * d, i * d : (i + 1) * d] = blk
        factors.append(factor)
    return factors


def controlled_ham_sim(u: BlockEncoding, big_m: int, gamma: float, eps: float) -> BlockEncoding:
    """(1, a+2, eps)-encoding of sum_m |m><m| (x) e^{i m gamma H}, m in [-M, M).

    The clock register uses the signed-bitstring convention and the unitary is
    assembled as the product of J+1 bit-controlled evolution factors.
    """
    if big_m < 1 or big_m & (big_m - 1):
        raise PreconditionError(f"M must be a power of two, got {big_m}")
    j_bits = int(round(math.log2(big_m)))
    budget = eps / (8.0 * (j_bits + 1) ** 2 * big_m * max(abs(gamma), 1e-300))
    if u.epsilon > budget + 1e-15:
        raise PreconditionError(
            f"input encoding error {u.epsilon} exceeds eps/|8(J+1)^2 M gamma| = {budget}"
        )
    h = _sym_block(u)
    clocked = controlled_factors(h, big_m, gamma)
    unitary = clocked[-1]
    for f in reversed(clocked[:-1]):
        unitary = unitary @ f
    d = u.system_dim
    target = None
    eig = _eigh_target(u)
    if eig is not None:
        tw, tv = eig
        target = np.zeros((2 * big_m * d, 2 * big_m * d), dtype=complex)
        for i in range(2 * big_m):
            m = signed_index(i, big_m)
            blk = (tv * np.exp(1j * m * gamma * tw)) @ tv.conj().T
            target[i * d : (i + 1) * d, i * d : (i + 1) * d] = blk
    rounds = abs(u.alpha * big_m * gamma) + j_bits * _log2(j_bits / eps if eps > 0 else 2.0)
    rounds = max(rounds, 1.0)
    return BlockEncoding(
        unitary=_pad_ancillas(unitary, u.ancillas + 2),
        alpha=1.0,
        ancillas=u.ancillas + 2,
        epsilon=float(eps),
        system_dim=2 * big_m * d,
        ledger=u.ledger.scaled(rounds).with_gates(u.ancillas * rounds),
        target=target,
    )


@dataclass(frozen=True)
class TaylorSeries:
    """Truncated power series f(x0 + x) = sum a_l x^l with an envelope certificate.

    `env_tail` bounds the discarded sum_{l>d} |a_l| (radius+delta)^l, so the
    envelope inequality sum |a_l| (r+delta)^l <= envelope can be verified
    numerically at the truncation degree plus the analytic tail.
    """

    center: float
    radius: float
    coeffs: np.ndarray
    delta: float
    envelope: float
    env_tail: float = 0.0

    def __post_init__(self):
        if not 0.0 < self.delta <= self.radius:
            raise PreconditionError(f"delta must lie in (0, r], got {self.delta}")
        if self.envelope <= 0:
            raise PreconditionError("envelope must be positive")
        if self.envelope_sum() > self.envelope * (1.0 + 1e-9):
            raise PreconditionError(
                f"series violates the envelope: sum |a_l|(r+delta)^l = "
                f"{self.envelope_sum()} > B = {self.envelope}"
            )

    def envelope_sum(self) -> float:
        x = self.radius + self.delta
        return float(np.sum(np.abs(self.coeffs) * x ** np.arange(len(self.coeffs)))) + self.env_tail

    def truncation_degree(self, eps_prime: float) -> int:
        """Smallest d with the geometric tail B (r/(r+delta))^(d+1) <= B eps'/2."""
        ratio = self.radius / (self.radius + self.delta)
        if ratio <= 0.0:
            return 0
        return max(0, math.ceil(math.log(2.0 / eps_prime) / math.log(1.0 / ratio)) - 1)

    def evaluate(self, x: np.ndarray, degree: int | None = None) -> np.ndarray:
        """Horner evaluation of the truncated series at x (array of eigenvalues)."""
        co = self.coeffs if degree is None else self.coeffs[: degree + 1]
        acc = np.zeros_like(np.asarray(x, dtype=float))
        for a in reversed(co):
            acc = acc * (x - self.center) + a
        return acc


def negative_power_series(c: float, kappa: float, eps_prime: float) -> TaylorSeries:
    """Binomial series of x^{-c} at x0=1, r=1-1/kappa, delta=1/(2 kappa max(1,c)), B=2 kappa^c."""
    if c <= 0 or kappa < 2:
        raise PreconditionError("need c > 0 and kappa >= 2")
    q = max(1.0, c)
    r = 1.0 - 1.0 / kappa
    delta = 1.0 / (2.0 * kappa * q)
    envelope = 2.0 * kappa**c
    total = (1.0 - (r + delta)) ** (-c)  # exact value of sum |a_k| (r+delta)^k
    degree = TaylorSeries(
        center=1.0, radius=r, coeffs=np.array([1.0]), delta=delta, envelope=envelope,
        env_tail=total - 1.0,
    ).truncation_degree(eps_prime)
    coeffs = np.empty(degree + 1)
    coeffs[0] = 1.0
    for k in range(degree):
        coeffs[k + 1] = coeffs[k] * (-c - k) / (k + 1)
    partial = float(np.sum(np.abs(coeffs) * (r + delta) ** np.arange(degree + 1)))
    return TaylorSeries(
        center=1.0,
        radius=r,
        coeffs=coeffs,
        delta=delta,
        envelope=envelope,
        env_tail=max(0.0, total - partial),
    )


def positive_power_series(c: float, kappa: float, eps_prime: float) -> TaylorSeries:
    """Binomial series of x^c at x0=1, r=1-1/kappa, delta=1/kappa, B=2 (exact total)."""
    if not 0.0 < c <= 1.0:
        raise PreconditionError(f"positive powers need c in (0, 1], got {c}")
    if kappa < 2:
        raise PreconditionError("kappa must be >= 2")
    r = 1.0 - 1.0 / kappa
    delta = 1.0 / kappa
    degree = TaylorSeries(
        center=1.0, radius=r, coeffs=np.array([1.0]), delta=delta, envelope=2.0,
        env_tail=1.0,
    ).truncation_degree(eps_prime)
    coeffs = np.empty(degree + 1)
    coeffs[0] = 1.0
    for k in range(degree):
        coeffs[k + 1] = coeffs[k] * (c - k) / (k + 1)
    partial = float(np.sum(np.abs(coeffs) * np.ones(degree + 1)))
    return TaylorSeries(
        center=1.0,
        radius=r,
        coeffs=coeffs,
        delta=delta,
        envelope=2.0,
        env_tail=max(0.0, 2.0 - partial),
    )


def smooth_function(
    u: BlockEncoding,
    series: TaylorSeries,
    eps_prime: float,
    exact_f=None,
) -> BlockEncoding:
    """(B, a+2, B eps')-encoding of f(H) by truncated-series evaluation.

    The truncation degree is the smallest one whose geometric tail is below
    half the error budget; the circuit model charges one controlled-simulation
    of H plus the Fourier-combination gate cost.
    """
    if not 0.0 < eps_prime <= 0.5:
        raise PreconditionError(f"eps_prime must lie in (0, 1/2], got {eps_prime}")
    h = _sym_block(u)
    w, v = np.linalg.eigh(h)
    slack = u.epsilon + _SPECTRUM_SLACK
    if np.any(np.abs(w - series.center) > series.radius + slack):
        raise SpectrumError(
            f"spectrum of H not within radius {series.radius} of {series.center}"
        )
    degree = series.truncation_degree(eps_prime)
    if degree >= len(series.coeffs):
        if series.env_tail > 0.0:
            raise PreconditionError(
                f"series holds {len(series.coeffs)} coefficients but degree {degree} is needed"
            )
        degree = len(series.coeffs) - 1  # finite series: the discarded tail is exactly zero
    b = series.envelope
    func = (v * series.evaluate(w, degree)) @ v.conj().T
    block = func / b
    nrm = spectral_norm(block)
    if nrm > 1.0:
        block = block / nrm
    # one controlled (M, gamma)-simulation with M ~ r log(1/eps')/delta, gamma ~ 1/r
    m_sim = series.radius * _log2(1.0 / eps_prime) / series.delta
    sim_rounds = u.alpha * m_sim / max(series.radius, 1e-300) + _log2(m_sim) * _log2(
        m_sim / eps_prime
    )
    gates = (series.radius / series.delta) * _log2(
        series.radius / (series.delta * eps_prime)
    ) * _log2(1.0 / eps_prime)
    target = None
    eig = _eigh_target(u)
    if eig is not None:
        tw, tv = eig
        fw = exact_f(tw) if exact_f is not None else series.evaluate(tw, degree)
        target = (tv * fw) @ tv.conj().T
    return BlockEncoding(
        unitary=_pad_ancillas(unitary_dilation(block), u.ancillas + 1),
        alpha=b,
        ancillas=u.ancillas + 2,
        epsilon=b * eps_prime,
        system_dim=u.system_dim,
        ledger=u.ledger.scaled(max(sim_rounds, 1.0)).with_gates(gates),
        target=target,
    )


def _check_positive_spectrum(u: BlockEncoding, kappa: float, allow_negative: bool):
    w = np.linalg.eigvalsh(_sym_block(u))
    slack = u.epsilon + _SPECTRUM_SLACK
    vals = np.abs(w) if allow_negative else w
    if np.any(vals < 1.0 / kappa - slack) or np.any(vals > 1.0 + slack):
        raise SpectrumError(
            f"eigenvalues must lie in {'± ' if allow_negative else ''}[1/kappa, 1]; got "
            f"range [{vals.min():.3g}, {vals.max():.3g}] for kappa = {kappa}"
        )


def _power_budget(kappa: float, c: float, eps: float) -> float:
    return eps / (kappa ** (1.0 + c) * (1.0 + c) * _log2(kappa ** (1.0 + c) / eps) ** 3)


def negative_power(
    u: BlockEncoding, c: float, kappa: float, eps: float, path: str = "spectral"
) -> BlockEncoding:
    """(2 kappa^c, a+2, eps)-encoding of H^{-c} for I/kappa <= H <= I.

    The spectral path diagonalizes the extracted block (negative eigenvalues
    get the odd extension sign(x)|x|^{-c}, matching the sign-split circuit);
    the series path evaluates a truncated binomial series and requires a
    positive spectrum.
    """
    if c <= 0:
        raise PreconditionError(f"c must be positive, got {c}")
    if kappa < 2:
        raise PreconditionError(f"kappa must be >= 2, got {kappa}")
    if u.epsilon > _power_budget(kappa, c, eps) + 1e-15:
        raise PreconditionError(
            f"input error {u.epsilon} exceeds the negative-power budget "
            f"{_power_budget(kappa, c, eps)}"
        )
    alpha_out = 2.0 * kappa**c
    rounds = u.alpha * kappa * (1.0 + c) * _log2(kappa ** (1.0 + c) / eps)
    if path == "series":
        _check_positive_spectrum(u, kappa, allow_negative=False)
        series = negative_power_series(c, kappa, eps / alpha_out)
        out = smooth_function(u, series, eps / alpha_out, exact_f=lambda x: x ** (-c))
        return out
    if path != "spectral":
        raise ValueError(f"unknown path {path!r}")
    _check_positive_spectrum(u, kappa, allow_negative=True)
    h = _sym_block(u)
    w, v = np.linalg.eigh(h)
    fw = np.sign(w) * np.abs(w) ** (-c)
    block = (v * fw) @ v.conj().T / alpha_out
    nrm = spectral_norm(block)
    if nrm > 1.0:
        block = block / nrm
    target = None
    eig = _eigh_target(u)
    if eig is not None:
        tw, tv = eig
        target = (tv * (np.sign(tw) * np.abs(tw) ** (-c))) @ tv.conj().T
    return BlockEncoding(
        unitary=_pad_ancillas(unitary_dilation(block), u.ancillas + 1),
        alpha=alpha_out,
        ancillas=u.ancillas + 2,
        epsilon=float(eps),
        system_dim=u.system_dim,
        ledger=u.ledger.scaled(max(rounds, 1.0)).with_gates(u.ancillas * rounds),
        target=target,
    )


def positive_power(
    u: BlockEncoding, c: float, kappa: float, eps: float, path: str = "spectral"
) -> BlockEncoding:
    """(2, a+2, eps)-encoding of H^c for c in (0, 1] and I/kappa <= H <= I."""
    if not 0.0 < c <= 1.0:
        raise PreconditionError(f"c must lie in (0, 1], got {c}")
    if kappa < 2:
        raise PreconditionError(f"kappa must be >= 2, got {kappa}")
    _check_positive_spectrum(u, kappa, allow_negative=False)
    if path == "series":
        series = positive_power_series(c, kappa, eps / 2.0)
        return smooth_function(u, series, eps / 2.0, exact_f=lambda x: x**c)
    if path != "spectral":
        raise ValueError(f"unknown path {path!r}")
    h = _sym_block(u)
    w, v = np.linalg.eigh(h)
    block = (v * np.maximum(w, 0.0) ** c) @ v.conj().T / 2.0
    rounds = u.alpha * kappa * _log2(kappa / eps)
    target = None
    eig = _eigh_target(u)
    if eig is not None:
        tw, tv = eig
        target = (tv * np.maximum(tw, 0.0) ** c) @ tv.conj().T
    return BlockEncoding(
        unitary=_pad_ancillas(unitary_dilation(block), u.ancillas + 1),
        alpha=2.0,
        ancillas=u.ancillas + 2,
        epsilon=float(eps),
        system_dim=u.system_dim,
        ledger=u.ledger.scaled(max(rounds, 1.0)).with_gates(u.ancillas * rounds),
        target=target,
    )


@dataclass(frozen=True)
class InversionPatch:
    """Flagged unitary applying ~ H^{-c}/alpha_max on eigenspaces with |eig| >= lam.

    Acts on flag (x) dilation-ancilla (x) system: on the valid span,
    |0>|0>|psi> maps to (1/alpha_max)|1>|0> f(H)|psi> + |0>|perp>.
    """

    unitary: np.ndarray
    lam: float
    eps: float
    alpha_max: float
    power: float
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    ledger: CostLedger

    def good_amplitude(self, eigenvalue: float) -> float:
        """Per-eigenbranch flagged amplitude f(lambda)/alpha_max."""
        lam_eff = max(abs(eigenvalue), self.lam)
        return math.copysign(lam_eff ** (-self.power), eigenvalue) / self.alpha_max

    def apply(self, state: np.ndarray) -> np.ndarray:
        full = np.zeros(4 * state.size, dtype=complex)
        full[: state.size] = state
        return self.unitary @ full


def inversion_patch(
    u: BlockEncoding,
    lam: float,
    eps: float,
    alpha_max: float | None = None,
    power: float = 1.0,
) -> InversionPatch:
    """W(lam, eps) from the efficient-inversion corollary.

    All patches of one solver share the subnormalization alpha_max (default
    2/lam^power, i.e. 2 kappa^c for kappa = 1/lam), which the variable-time
    flag algebra requires.
    """
    if lam <= 0 or lam > 1:
        raise PreconditionError(f"lam must lie in (0, 1], got {lam}")
    budget = eps * lam**2 / _log2(1.0 / (lam * eps)) ** 3
    if u.epsilon > budget + 1e-15:
        raise PreconditionError(
            f"input error {u.epsilon} exceeds the inversion budget {budget}"
        )
    if alpha_max is None:
        alpha_max = 2.0 / lam**power
    h = _sym_block(u)
    w, v = np.linalg.eigh(h)
    lam_eff = np.maximum(np.abs(w), lam)
    fw = np.sign(np.where(w == 0, 1.0, w)) * lam_eff ** (-power)
    block = (v * (fw / alpha_max)) @ v.conj().T
    dil = unitary_dilation(block)
    d = u.system_dim
    x = np.array([[0, 1], [1, 0]], dtype=complex)
    p0 = np.diag([1.0, 0.0])
    p1 = np.diag([0.0, 1.0])
    eye = np.eye(d)
    cx = np.kron(x, np.kron(p0, eye)) + np.kron(np.eye(2), np.kron(p1, eye))
    rounds = u.alpha / lam * _log2(1.0 / (lam * eps))
    return InversionPatch(
        unitary=cx @ np.kron(np.eye(2), dil),
        lam=lam,
        eps=eps,
        alpha_max=alpha_max,
        power=power,
        eigenvalues=w,
        eigenvectors=v,
        ledger=u.ledger.scaled(max(rounds, 1.0)).with_gates(u.ancillas * rounds),
    )
