"""Cross-scheme comparisons: moment differences, validity reports and ratio sweeps."""

from __future__ import annotations

import datetime as _dt
import hashlib
import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .errors import QBMError
from .exact import stationary_closed, stationary_quadrature
from .markov import stationary_markov
from .nonmarkov import stationary_nonmarkov
from .params import ModelParams

CSV_SCHEMA = "qbm-compare/v1"


def fmt(x) -> str:
    """17 significant digits, the CSV number format."""
    return format(float(x), ".17g")


@dataclass(frozen=True)
class MethodDifferences:
    """Stationary differences between the exact, non-Markov (NM) and Markov (M) results.

    ``predicted`` holds leading-order estimates keyed like the fields, and
    ``regime`` says which high-temperature form was used.
    """

    nm_m_q2: float
    nm_m_p2: float
    e_nm_q2: float
    e_nm_p2: float
    e_m_q2: float
    e_m_p2: float
    predicted: dict = field(default_factory=dict)
    regime: str = ""


def leading_differences(params: ModelParams):
    """Leading high-temperature estimates of the scheme differences.

    With ``x = gamma Lambda/Omega^2``: ``(NM - M)`` is ``-T x`` for ``<p^2>``
    and ``-(T/Omega_R^2) x`` for ``<q^2>``, and ``(E - NM)`` has the opposite
    sign. For ``Lambda > T`` the ``(NM - M)`` forms pick up the factor
    ``1 - (Omega^2/(pi T Lambda)) ln(Lambda/2 pi T)``.
    """
    T, lam = params.temperature, params.lam
    x = params.gamma * lam / params.omega_sq
    if lam > T and T > 0:
        regime = "Lambda>>T"
        corr = 1 - params.omega_sq / (math.pi * T * lam) * math.log(lam / (2 * math.pi * T))
    else:
        regime = "T>>Lambda"
        corr = 1.0
    or2 = params.omega_r**2
    pred = {"nm_m_p2": -T * x * corr, "nm_m_q2": -T / or2 * x * corr,
            "e_nm_p2": T * x, "e_nm_q2": T / or2 * x}
    pred["e_m_p2"] = pred["e_nm_p2"] + pred["nm_m_p2"]
    pred["e_m_q2"] = pred["e_nm_q2"] + pred["nm_m_q2"]
    return pred, regime


def exact_stationary(params: ModelParams, exact="closed"):
    """Exact stationary moments: ``closed`` (large-Lambda residue sum) or ``full`` (full-pole quadrature)."""
    if exact == "closed":
        return stationary_closed(params)
    if exact == "full":
        return stationary_quadrature(params, green="full")
    raise ValueError("exact must be 'closed' or 'full'")


def method_differences(params: ModelParams, exact="closed") -> MethodDifferences:
    """All six pairwise differences of the stationary ``<q^2>`` and ``<p^2>``.

    ``exact='full'`` takes the exact moments from the full-pole Green's
    function. The leading-order predictions assume ``<p^2>_E = T`` at high
    temperature, which only the full form satisfies beyond ``O(Omega_R^2/Lambda^2)``.
    """
    e = exact_stationary(params, exact)
    m = stationary_markov(params)
    nm = stationary_nonmarkov(params)
    pred, regime = leading_differences(params)
    return MethodDifferences(
        nm.q2 - m.q2, nm.p2 - m.p2,
        e.q2 - nm.q2, e.p2 - nm.p2,
        e.q2 - m.q2, e.p2 - m.p2,
        pred, regime)


# --------------------------------------------------------------------------- validity

@dataclass(frozen=True)
class ValidityThresholds:
    """Numeric stand-ins for the ``<< 1`` conditions."""

    weak_coupling: float = 0.01   # gamma/Omega
    born: float = 0.1             # gamma Lambda/Omega^2
    coarse_min: float = 10.0      # Lambda/Omega lower edge of the window
    coarse_frac: float = 0.1      # Lambda/Omega upper edge as a fraction of Q


@dataclass(frozen=True)
class ValidityReport:
    """Born-approximation checks.

    ``born_value = gamma Lambda/Omega^2 = (Lambda/Omega)/Q`` and the
    coarse-graining window is ``1 << Lambda/Omega << Q``. Quantities that
    need ``Lambda`` are ``None`` when it is unknown (experimental presets).
    """

    q_factor: float
    ratio_lambda_omega: float | None
    weak_coupling_value: float
    weak_coupling_ok: bool
    born_value: float | None
    born_ok: bool | None
    coarse_grain_ok: bool | None
    stable: bool | None
    lambda_budget: str
    thresholds: ValidityThresholds
    name: str = ""
    omega: float | None = None
    lambda_max: float | None = None
    notes: str = ""

    def to_dict(self):
        d = asdict(self)
        d["thresholds"] = asdict(self.thresholds)
        return d


def _report(q, omega, lam, thr, name="", notes="", unit=""):
    wc = 1.0 / q
    if lam is None:
        r = born = born_ok = coarse = stable = None
    else:
        r = lam / omega
        born = r / q
        born_ok = born < thr.born
        coarse = thr.coarse_min <= r <= thr.coarse_frac * q
        stable = r < q
    budget = f"Lambda/Omega < Q = {q:.6g} (stability); Lambda/Omega << {q:.6g} (Born)"
    lam_max = None if omega is None else omega * q
    if lam_max is not None and unit:
        budget += f"; Lambda << {lam_max:.3g} {unit}"
    return ValidityReport(q, r, wc, wc < thr.weak_coupling, born, born_ok, coarse, stable,
                          budget, thr, name, omega, lam_max, notes)


def validity_report(params: ModelParams, thresholds: ValidityThresholds = ValidityThresholds()) -> ValidityReport:
    """Evaluate ``gamma/Omega << 1`` and ``gamma Lambda/Omega^2 << 1`` for a model point.

    ``Omega`` is the bare frequency, so ``born_value < 1`` holds for every
    stable point.
    """
    om = params.omega
    q = om / params.gamma if params.gamma > 0 else math.inf
    return _report(q, om, params.lam, thresholds)


# Experimental settings: frequency (MHz, linear), quality factor.
PRESETS = {
    "groex": dict(freq_mhz=0.914, q=215.0, angular=True,
                  notes="micromechanical Brownian motion; measured bath spectrum is not Drude-Ohmic"),
    "teufel": dict(freq_mhz=15.9, q=1e5, angular=True,
                   notes="microwave-cavity readout of vacuum fluctuations; Lambda not reported"),
    "norte": dict(freq_mhz=1.0, q=1e8, angular=False,
                  notes="on-chip resonators at room temperature; Omega quoted as about 1 MHz"),
}


def preset_report(name: str, thresholds: ValidityThresholds = ValidityThresholds()) -> ValidityReport:
    """Validity report for a named experimental setting.

    ``Lambda`` is not known for any of them, so only the weak-coupling flag
    and the ``Lambda`` budget ``Lambda << Omega Q`` are filled in. The
    budget is quoted in MHz, with ``Omega = 2 pi f`` where the setting
    states a linear frequency.
    """
    try:
        p = PRESETS[name]
    except KeyError:
        raise QBMError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}") from None
    om = p["freq_mhz"] * (2 * math.pi if p["angular"] else 1.0)
    return _report(p["q"], om, None, thresholds, name, p["notes"], unit="MHz")


# --------------------------------------------------------------------------- sweeps

RATIO_NAMES = ("qm_qe", "pm_pe", "qnm_qe", "pnm_pe")


def _ratio_point(args):
    omega_r, gamma, lam, T, exact = args
    try:
        p = ModelParams(omega_r, gamma, lam, T)
        e = exact_stationary(p, exact)
        m = stationary_markov(p)
        nm = stationary_nonmarkov(p)
    except (QBMError, ValueError, ArithmeticError) as exc:
        return (math.nan,) * 4, f"{type(exc).__name__}: {exc}"
    return (m.q2 / e.q2, m.p2 / e.p2, nm.q2 / e.q2, nm.p2 / e.p2), ""


@dataclass
class SweepResult:
    """Ratios of Born-scheme moments to the exact ones over a ``(T, Lambda)`` grid.

    ``ratios[name]`` has shape ``(len(temperatures), len(lambdas))``.
    ``flags`` holds an error message for points that were skipped.
    """

    gamma: float
    omega_r: float
    lambdas: np.ndarray
    temperatures: np.ndarray
    ratios: dict
    flags: np.ndarray
    exact: str = "full"

    def grid_hash(self):
        h = hashlib.sha256()
        h.update(np.asarray(self.lambdas, dtype=float).tobytes())
        h.update(np.asarray(self.temperatures, dtype=float).tobytes())
        h.update(repr((float(self.gamma), float(self.omega_r), self.exact)).encode())
        return h.hexdigest()[:10]

    def filename(self, ext="csv"):
        return f"ratios_gamma{self.gamma:g}_{self.grid_hash()}.{ext}"

    def rows(self):
        for i, T in enumerate(self.temperatures):
            for j, lam in enumerate(self.lambdas):
                yield T, lam, [self.ratios[k][i, j] for k in RATIO_NAMES], self.flags[i, j]

    def to_csv(self, path=None, *, timestamp=True) -> Path:
        """Write one row per grid point. ``path`` may be a directory."""
        path = Path(path or os.environ.get("QBM_OUTPUT_DIR", "."))
        if path.is_dir() or path.suffix == "":
            path.mkdir(parents=True, exist_ok=True)
            path = path / self.filename("csv")
        header = metadata_header({"kind": "ratio_sweep", "gamma": self.gamma,
                                  "omega_r": self.omega_r, "exact": self.exact,
                                  "grid_hash": self.grid_hash()},
                                 timestamp=timestamp)
        lines = header + [",".join(("temperature", "lambda") + RATIO_NAMES + ("flag",))]
        for T, lam, vals, flag in self.rows():
            lines.append(",".join([fmt(T), fmt(lam)] + [fmt(v) for v in vals] + [flag.replace(",", ";")]))
        path.write_text("\n".join(lines) + "\n")
        return path

    def to_json(self, path=None) -> Path:
        path = Path(path or os.environ.get("QBM_OUTPUT_DIR", "."))
        if path.is_dir() or path.suffix == "":
            path.mkdir(parents=True, exist_ok=True)
            path = path / self.filename("json")
        doc = {"schema": CSV_SCHEMA, "gamma": self.gamma, "omega_r": self.omega_r, "exact": self.exact,
               "lambdas": list(map(float, self.lambdas)),
               "temperatures": list(map(float, self.temperatures)),
               "ratios": {k: np.where(np.isfinite(v), v, None).tolist() for k, v in self.ratios.items()},
               "flags": self.flags.tolist()}
        path.write_text(json.dumps(doc, indent=1))
        return path


def metadata_header(meta: dict, *, timestamp=True):
    """Comment lines opening every CSV; the timestamp line is the only non-deterministic one."""
    lines = [f"# schema={CSV_SCHEMA}"]
    if timestamp:
        lines.append(f"# generated={_dt.datetime.now(_dt.timezone.utc).isoformat(timespec='seconds')}")
    for k, v in meta.items():
        lines.append(f"# {k}={fmt(v) if isinstance(v, float) else v}")
    return lines


DEFAULT_LAMBDAS = np.logspace(1, 4, 13)
DEFAULT_TEMPERATURES = (0.2, 1.0, 5.0, 20.0)


def ratio_sweep(gamma, omega_r=1.0, lambda_grid=DEFAULT_LAMBDAS,
                temperature_grid=DEFAULT_TEMPERATURES, jobs=1, exact="full") -> SweepResult:
    """Ratios ``<x^2>_M/<x^2>_E`` and ``<x^2>_NM/<x^2>_E`` on the grid.

    ``exact`` picks the reference, as in :func:`exact_stationary`. The
    default ``full`` avoids the ``O(Omega_R^2/Lambda^2)`` error of the
    closed residue sum, which is visible at small ``Lambda``.

    Points that fail validation or numerics are flagged and carry NaN.
    With ``jobs > 1`` points go to a process pool; results stay in grid order.
    """
    lams = np.asarray(lambda_grid, dtype=float)
    temps = np.asarray(temperature_grid, dtype=float)
    if exact not in ("closed", "full"):
        raise ValueError("exact must be 'closed' or 'full'")
    tasks = [(omega_r, gamma, lam, T, exact) for T in temps for lam in lams]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            results = list(ex.map(_ratio_point, tasks, chunksize=4))
    else:
        results = [_ratio_point(t) for t in tasks]
    shape = (temps.size, lams.size)
    ratios = {k: np.array([r[0][i] for r in results]).reshape(shape) for i, k in enumerate(RATIO_NAMES)}
    flags = np.array([r[1] for r in results], dtype=object).reshape(shape)
    return SweepResult(gamma, omega_r, lams, temps, ratios, flags, exact)
