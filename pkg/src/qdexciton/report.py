"""Material configs, the end-to-end refutation pipeline and its serialisations."""
from __future__ import annotations

import csv
import io
import json
import math
import re
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
from scipy.constants import physical_constants

from .errors import ConfigError, QdExcitonError
from .model import PhysicalParams, claimed_energy, corrected_energy, to_scaled
from .oracle import GridSpec, SpectrumResult, spectrum
from .qes import constraint_residual, single_condition_alpha, solve_qes
from .series import (
    coefficients,
    count_polynomial_nodes,
    ode_residual,
    tail_diagnostic,
    truncated_candidate,
)

HARTREE_MEV = physical_constants["Hartree energy in eV"][0] * 1e3
UNIT_SYSTEMS = ("scaled", "effective-atomic")
CONFIG_KEYS = ("name", "m_e", "m_h", "omega0", "epsilon", "unit_system")

N_EIGS = 5
SERIES_ORDER = 200
MATCH_TOL = 1e-6
RESIDUAL_THRESHOLD = 1e-8
TAIL_DPS = 40
CONSTRAINT_RTOL = 1e-9

REFUTED = "REFUTED: non-terminating"
CONFIRMED = "CONFIRMED: QES point"
NOT_APPLICABLE = "N/A"


@dataclass(frozen=True)
class MaterialConfig:
    """Flat material description.

    ``unit_system="scaled"`` reads every number with ``hbar = e^2 = 1`` and
    energies in those units.  ``"effective-atomic"`` reads masses in free
    electron masses and ``omega0`` as ``hbar*omega0`` in meV; energies are
    reported in meV.
    """

    name: str
    m_e: float
    m_h: float
    omega0: float
    epsilon: float
    unit_system: str = "scaled"

    def __post_init__(self):
        for key in ("m_e", "m_h", "omega0", "epsilon"):
            v = getattr(self, key)
            if not (isinstance(v, (int, float)) and not isinstance(v, bool) and math.isfinite(v) and v > 0):
                raise ConfigError(f"field '{key}' must be a positive number, got {v!r}")
        if self.unit_system not in UNIT_SYSTEMS:
            raise ConfigError(f"field 'unit_system' must be one of {UNIT_SYSTEMS}, got {self.unit_system!r}")

    def physical(self) -> PhysicalParams:
        omega0 = self.omega0 / HARTREE_MEV if self.unit_system == "effective-atomic" else self.omega0
        return PhysicalParams(self.m_e, self.m_h, float(omega0), float(self.epsilon))

    @property
    def energy_scale(self) -> float:
        """Factor turning model-unit energies into reported energies."""
        return HARTREE_MEV if self.unit_system == "effective-atomic" else 1.0

    @property
    def energy_unit(self) -> str:
        return "meV" if self.unit_system == "effective-atomic" else "hbar=e2=1 units"


def parse_config(path) -> MaterialConfig:
    """Read and validate a flat JSON material config.

    Raises
    ------
    ConfigError
        With the offending field and, where it can be located, its line.
    """
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"{path}: cannot read config: {exc.strerror}") from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}:{exc.lineno}: malformed JSON: {exc.msg}") from exc
    if not isinstance(data, dict):
        raise ConfigError(f"{path}:1: config must be a flat JSON object")

    def where(key: str) -> str:
        m = re.search(r'"%s"\s*:' % re.escape(key), text)
        return f"{path}:{text.count(chr(10), 0, m.start()) + 1}" if m else str(path)

    for key in data:
        if key not in CONFIG_KEYS:
            raise ConfigError(f"{where(key)}: unknown key '{key}' (allowed: {', '.join(CONFIG_KEYS)})")
    for key in CONFIG_KEYS:
        if key not in data:
            raise ConfigError(f"{path}: missing required field '{key}'")
    if not isinstance(data["name"], str):
        raise ConfigError(f"{where('name')}: field 'name' must be a string")
    try:
        return MaterialConfig(**data)
    except ConfigError as exc:
        key = re.search(r"field '(\w+)'", str(exc))
        raise ConfigError(f"{where(key.group(1)) if key else path}: {exc}") from None


def coupling_config(g: float) -> MaterialConfig:
    """Scaled-unit problem with ``mu = hbar = omega0 = 1`` and coupling ``g``.

    ``e^2`` is folded into ``epsilon`` so the printed closed form stays
    comparable: with ``mu = 1``, ``gamma = 2/epsilon``.  ``g = 0`` is not
    representable this way; :func:`run_refutation` accepts a bare ``g`` for it.
    """
    return MaterialConfig(f"scaled-g={g:.12g}", 2.0, 2.0, 1.0, 2.0 / g, "scaled")


@dataclass(frozen=True)
class _Problem:
    name: str
    params: PhysicalParams
    energy_scale: float
    energy_unit: str
    config: dict


def _problem(config) -> _Problem:
    if isinstance(config, MaterialConfig):
        return _Problem(config.name, config.physical(), config.energy_scale, config.energy_unit, asdict(config))
    g = float(config)
    if not (math.isfinite(g) and g >= 0):
        raise ConfigError(f"coupling g must be a non-negative number, got {config!r}")
    # mu = hbar = omega0 = epsilon = 1, e2 = g/2  =>  gamma = g, s = 1
    params = PhysicalParams(2.0, 2.0, 1.0, 1.0, 1.0, g / 2.0)
    return _Problem(f"scaled-g={g:.12g}", params, 1.0, "hbar=e2=1 units", {"g": g})


@dataclass
class RefutationRow:
    material: str
    m: int
    degree: int
    n_r: int
    g: float
    alpha_single_condition: float | None = None
    claimed_energy_printed: float | None = None
    claimed_energy_implied: float | None = None
    corrected_energy: float | None = None
    constraint_residual: float | None = None
    ode_max_residual: float | None = None
    ode_l2_residual: float | None = None
    series_termination: str | None = None
    termination_degree: int | None = None
    candidate_node_count: int | None = None
    oracle_eigenvalues: list = field(default_factory=list)
    matched_index: int | None = None
    nearest_index: int | None = None
    nearest_gap: float | None = None
    overlap: float | None = None
    verdict: str = NOT_APPLICABLE
    note: str = ""


@dataclass
class RefutationReport:
    header: dict
    rows: list[RefutationRow]
    qes: list[dict]
    plots: dict = field(default_factory=dict, repr=False)


def run_refutation(
    config,
    m_list=(0, 1, 2),
    degree_list=(1,),
    spec: GridSpec = GridSpec(),
    n_eigs: int = N_EIGS,
    series_order: int = SERIES_ORDER,
) -> RefutationReport:
    """Check the single-condition quantization against series, QES solver and oracle.

    ``config`` is a :class:`MaterialConfig` or a bare scaled coupling ``g``.
    For each ``(m, degree)`` the row holds the ``abar`` that zeroes only
    ``a_{degree+1}``, the residual and tail of the corresponding truncated
    series, and where that ``abar`` falls in the numerically exact spectrum.
    Failures inside a row are recorded in ``note`` and never abort the report.
    """
    prob = _problem(config)
    derived, scaled = to_scaled(prob.params)
    g = scaled.g
    hw = scaled.energy_unit
    header = {
        "material": prob.name,
        "config": prob.config,
        "energy_unit": prob.energy_unit,
        "mu": derived.mu,
        "M": derived.M,
        "gamma": derived.gamma,
        "s": derived.s,
        "g": g,
        "g_squared": g * g,
        "hbar_omega": hw * prob.energy_scale,
        "length_unit": scaled.length_unit,
        "grid": {"r_max": spec.r_max, "n_points": spec.n_points, "richardson_points": spec.n_points * 2},
        "m_list": [int(m) for m in m_list],
        "degree_list": [int(d) for d in degree_list],
    }
    spectra: dict[int, SpectrumResult | str] = {}
    rows, qes_rows, plots = [], [], {}

    def oracle(m: int, coupling: float) -> SpectrumResult:
        return spectrum(m, coupling, n_eigs, spec)

    for m in m_list:
        m = abs(int(m))
        try:
            spectra[m] = oracle(m, g)
        except QdExcitonError as exc:
            spectra[m] = f"oracle failed: {exc}"
        for degree in degree_list:
            row, plot = _row(prob, m, int(degree), g, hw, spectra[m], series_order)
            rows.append(row)
            if plot is not None:
                plots[(m, int(degree))] = plot
            qes_rows.extend(_qes_rows(m, int(degree), hw * prob.energy_scale, oracle))
    return RefutationReport(header, rows, qes_rows, plots)


def _row(prob: _Problem, m, degree, g, hw, spec_res, series_order):
    n_r = degree - 1
    row = RefutationRow(prob.name, m, degree, n_r, g)
    notes = []
    if isinstance(spec_res, SpectrumResult):
        row.oracle_eigenvalues = [float(x) for x in spec_res.eigenvalues]
    else:
        notes.append(spec_res)
    scale = prob.energy_scale

    if degree == 1:
        row.claimed_energy_printed = claimed_energy(m, prob.params) * scale
        row.constraint_residual = float(constraint_residual(m, g))
        constraint_ok = abs(row.constraint_residual) <= CONSTRAINT_RTOL * max(1.0, g * g)
    else:
        constraint_ok = False
        try:
            pts = solve_qes(m, degree).points
            if pts:
                nearest = min(pts, key=lambda p: abs(g * g - p.g_squared))
                row.constraint_residual = nearest.g_squared - g * g
                constraint_ok = abs(row.constraint_residual) <= CONSTRAINT_RTOL * max(1.0, g * g)
        except QdExcitonError as exc:
            notes.append(f"qes solver: {exc}")
    if constraint_ok:
        row.corrected_energy = corrected_energy(m, hw, 1.0, degree) * scale

    try:
        alpha = float(single_condition_alpha(m, n_r, g))
    except QdExcitonError as exc:
        notes.append(f"single-condition quantization: {exc}")
        row.note = "; ".join(notes)
        return row, None
    row.alpha_single_condition = alpha
    row.claimed_energy_implied = alpha * hw / 2.0 * scale

    state = coefficients(m, g, alpha, max(series_order, degree + 22), precision=TAIL_DPS)
    cand = truncated_candidate(state, degree)
    res = ode_residual(cand, alpha, g)
    row.ode_max_residual, row.ode_l2_residual = res.max_abs, res.l2
    tail = tail_diagnostic(state)
    row.series_termination = tail.kind
    row.termination_degree = tail.degree
    row.candidate_node_count = count_polynomial_nodes(cand)

    plot = None
    if isinstance(spec_res, SpectrumResult):
        idx, gap = spec_res.nearest(alpha)
        row.nearest_index, row.nearest_gap = idx, gap
        u_c = cand.u(spec_res.grid)
        if gap <= MATCH_TOL:
            row.matched_index = idx
            if spec_res.degenerate[idx]:
                notes.append(f"oracle level {idx} is near-degenerate; overlap skipped")
            else:
                row.overlap = spec_res.overlap(idx, u_c)
        sign = 1.0 if spec_res.eigenfunctions[idx] @ u_c >= 0 else -1.0
        plot = {
            "rho": spec_res.grid,
            "candidate": cand(spec_res.grid),
            "oracle": sign * spec_res.phi(idx),
            "oracle_index": idx,
            "oracle_alpha": float(spec_res.eigenvalues[idx]),
        }

    terminated_here = tail.kind == "terminates" and tail.degree == degree
    if terminated_here and res.max_abs < RESIDUAL_THRESHOLD:
        row.verdict = CONFIRMED
    elif tail.kind == "grows" and res.max_abs > RESIDUAL_THRESHOLD:
        row.verdict = REFUTED
    else:
        row.verdict = NOT_APPLICABLE
        if tail.kind == "terminates":
            notes.append(f"series terminates at degree {tail.degree}, not {degree}")
        elif tail.kind == "grows" or res.max_abs > RESIDUAL_THRESHOLD:
            notes.append("termination and residual signals disagree")
        else:
            notes.append("tail inconclusive")
    row.note = "; ".join(notes)
    return row, plot


def _qes_rows(m, degree, hw_report, oracle):
    try:
        sol = solve_qes(m, degree)
    except QdExcitonError as exc:
        return [{"m": m, "degree": degree, "note": f"qes solver: {exc}"}]
    out = []
    for p in sol.points:
        entry = {
            "m": m,
            "degree": degree,
            "alpha_bar": p.alpha_bar,
            "g_squared": p.g_squared,
            "energy": p.alpha_bar * hw_report / 2.0,
            "coupling": "state-dependent",
            "method": p.method,
            "certified_residual": p.residual,
            "candidate_node_count": None,
            "oracle_index": None,
            "oracle_gap": None,
            "oracle_node_count": None,
            "discarded_nonpositive": sol.discarded_nonpositive,
            "discarded_lower_degree": sol.discarded_lower_degree,
            "note": "",
        }
        try:
            state = coefficients(m, p.g, p.alpha_bar, degree + 20)
            entry["candidate_node_count"] = count_polynomial_nodes(truncated_candidate(state, degree))
            spec_res = oracle(m, p.g)
            idx, gap = spec_res.nearest(p.alpha_bar)
            entry["oracle_index"], entry["oracle_gap"] = idx, gap
            entry["oracle_node_count"] = spec_res.node_counts[idx]
        except QdExcitonError as exc:
            entry["note"] = str(exc)
        out.append(entry)
    return out


# --- serialisation ---------------------------------------------------------

CSV_COLUMNS = (
    "material",
    "m",
    "degree",
    "n_r",
    "g",
    "alpha_single_condition",
    "claimed_energy_printed",
    "claimed_energy_implied",
    "corrected_energy",
    "constraint_residual",
    "ode_max_residual",
    "ode_l2_residual",
    "series_termination",
    "termination_degree",
    "candidate_node_count",
    *(f"oracle_e{k}" for k in range(N_EIGS)),
    "matched_index",
    "nearest_index",
    "nearest_gap",
    "overlap",
    "verdict",
    "note",
)

_NUM = {"type": ["number", "null"]}
_INT = {"type": ["integer", "null"]}
REPORT_SCHEMA = {
    "$schema": "http://json-schema.org/draft-07/schema#",
    "type": "object",
    "required": ["header", "rows", "qes"],
    "additionalProperties": False,
    "properties": {
        "header": {
            "type": "object",
            "required": ["material", "energy_unit", "g", "hbar_omega", "mu", "grid"],
        },
        "rows": {
            "type": "array",
            "items": {
                "type": "object",
                "additionalProperties": False,
                "required": [c for c in CSV_COLUMNS if not c.startswith("oracle_e")] + ["oracle_eigenvalues"],
                "properties": {
                    "material": {"type": "string"},
                    "m": {"type": "integer", "minimum": 0},
                    "degree": {"type": "integer", "minimum": 1},
                    "n_r": {"type": "integer", "minimum": 0},
                    "g": {"type": "number", "minimum": 0},
                    "alpha_single_condition": _NUM,
                    "claimed_energy_printed": _NUM,
                    "claimed_energy_implied": _NUM,
                    "corrected_energy": _NUM,
                    "constraint_residual": _NUM,
                    "ode_max_residual": _NUM,
                    "ode_l2_residual": _NUM,
                    "series_termination": {"enum": ["terminates", "grows", "inconclusive", None]},
                    "termination_degree": _INT,
                    "candidate_node_count": _INT,
                    "oracle_eigenvalues": {"type": "array", "items": {"type": "number"}},
                    "matched_index": _INT,
                    "nearest_index": _INT,
                    "nearest_gap": _NUM,
                    "overlap": _NUM,
                    "verdict": {"enum": [REFUTED, CONFIRMED, NOT_APPLICABLE]},
                    "note": {"type": "string"},
                },
            },
        },
        "qes": {
            "type": "array",
            "items": {"type": "object", "required": ["m", "degree"]},
        },
    },
}


def _round(x):
    if isinstance(x, (bool, str)) or x is None:
        return x
    if isinstance(x, (int, np.integer)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        return float(f"{float(x):.12g}")
    if isinstance(x, dict):
        return {k: _round(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_round(v) for v in x]
    return x


def _cell(x) -> str:
    if x is None:
        return ""
    if isinstance(x, (float, np.floating)):
        return f"{float(x):.12g}"
    return str(x)


def to_json_dict(report: RefutationReport) -> dict:
    return {
        "header": _round(report.header),
        "rows": [_round(asdict(r)) for r in report.rows],
        "qes": [_round(q) for q in report.qes],
    }


def render(report: RefutationReport, fmt: str) -> str:
    if fmt == "json":
        return json.dumps(to_json_dict(report), indent=2) + "\n"
    if fmt == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for r in report.rows:
            d = asdict(r)
            eigs = d.pop("oracle_eigenvalues")
            for k in range(N_EIGS):
                d[f"oracle_e{k}"] = eigs[k] if k < len(eigs) else None
            w.writerow([_cell(d[c]) for c in CSV_COLUMNS])
        return buf.getvalue()
    raise ValueError(f"format {fmt!r} has no single-text rendering")


PLOT_RHO_MAX = 6.0
PLOT_STRIDE = 10


def emit(report: RefutationReport, fmt: str, out) -> list[Path]:
    """Write ``csv``/``json`` to the file ``out`` or ``plot-data`` into the directory ``out``."""
    out = Path(out)
    if fmt in ("csv", "json"):
        out.write_text(render(report, fmt))
        return [out]
    if fmt != "plot-data":
        raise ValueError(f"unknown format {fmt!r}")
    out.mkdir(parents=True, exist_ok=True)
    slug = re.sub(r"[^A-Za-z0-9_.-]+", "_", str(report.header["material"]))
    written = []
    for (m, degree), plot in sorted(report.plots.items()):
        keep = slice(0, int(np.searchsorted(plot["rho"], PLOT_RHO_MAX)), PLOT_STRIDE)
        rho = plot["rho"][keep]
        for which, label in (("candidate", "closed-form trial function"), ("oracle", "numerical eigenfunction")):
            path = out / f"{slug}_m{m}_d{degree}_{which}.dat"
            lines = [f"# {label}; m={m} degree={degree}"]
            if which == "oracle":
                lines.append(f"# oracle index={plot['oracle_index']} abar={plot['oracle_alpha']:.12g}")
            lines.append("# rho phi")
            lines += [f"{r:.12g} {v:.12g}" for r, v in zip(rho, plot[which][keep])]
            path.write_text("\n".join(lines) + "\n")
            written.append(path)
    return written
