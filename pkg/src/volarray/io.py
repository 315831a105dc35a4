"""File formats: Touchstone v1 S-parameters, pattern grids, configs, results.

Touchstone support follows the version-1 grammar: `!` comments, a `#` option
line with defaults (GHz, S, MA, R 50), RI / MA / DB numeric formats, the
legacy 2-port column order (S11 S21 S12 S22), and row-major wrapped matrices
with at most four complex entries per line for three or more ports. Noise
parameter sections (2-port, recognized by a decreasing frequency) are
skipped with a warning. Version 2 files are not supported.
"""
from __future__ import annotations

import enum
import hashlib
import json
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import ParseError, PassivityWarning, VolarrayWarning
from .kronecker import EmbeddedPattern, ScatteringMatrix

_FREQ_UNITS = {"hz": 1.0, "khz": 1e3, "mhz": 1e6, "ghz": 1e9}
_FORMATS = ("ri", "ma", "db")
_PARAMETERS = ("s", "y", "z", "g", "h")


class TouchstoneFormat(str, enum.Enum):
    RI = "RI"
    MA = "MA"
    DB = "DB"


@dataclass(frozen=True)
class TouchstoneDocument:
    """One network-parameter dataset: option line, comments, per-frequency matrices."""

    n_ports: int
    freq_unit: str  # Hz | kHz | MHz | GHz
    parameter: str  # S, Y, Z, G, H
    format: TouchstoneFormat
    resistance: float
    comments: tuple[str, ...]
    frequencies: np.ndarray  # in freq_unit
    matrices: np.ndarray  # (F, N, N) complex

    def __post_init__(self):
        f = np.asarray(self.frequencies, dtype=float)
        m = np.asarray(self.matrices, dtype=complex)
        if m.shape != (f.size, self.n_ports, self.n_ports):
            raise ParseError("matrices shape must be (F, N, N)")
        f.setflags(write=False)
        m.setflags(write=False)
        object.__setattr__(self, "frequencies", f)
        object.__setattr__(self, "matrices", m)

    @property
    def frequencies_hz(self) -> np.ndarray:
        return self.frequencies * _FREQ_UNITS[self.freq_unit.lower()]

    def scattering_matrix(self, index: int = 0) -> ScatteringMatrix:
        return ScatteringMatrix(
            self.n_ports,
            float(self.frequencies_hz[index]),
            self.matrices[index],
            self.resistance,
        )


def _decode(fmt: TouchstoneFormat, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    if fmt is TouchstoneFormat.RI:
        return a + 1j * b
    if fmt is TouchstoneFormat.MA:
        return a * np.exp(1j * np.radians(b))
    return 10.0 ** (a / 20.0) * np.exp(1j * np.radians(b))


def _encode(fmt: TouchstoneFormat, v: complex) -> tuple[float, float]:
    if fmt is TouchstoneFormat.RI:
        return v.real, v.imag
    mag = abs(v)
    ang = float(np.degrees(np.angle(v))) if mag > 0 else 0.0
    if fmt is TouchstoneFormat.MA:
        return mag, ang
    if mag == 0.0:
        raise ParseError("DB format cannot represent a zero entry")
    return float(20.0 * np.log10(mag)), ang


def _parse_option_line(tokens: list[str], line_no: int):
    unit, param, fmt, resistance = "ghz", "s", "ma", 50.0
    i = 0
    while i < len(tokens):
        tok = tokens[i].lower()
        if tok in _FREQ_UNITS:
            unit = tok
        elif tok in _PARAMETERS:
            param = tok
        elif tok in _FORMATS:
            fmt = tok
        elif tok == "r":
            if i + 1 >= len(tokens):
                raise ParseError("option line: 'R' without a resistance value", line_no)
            try:
                resistance = float(tokens[i + 1])
            except ValueError:
                raise ParseError(
                    f"option line: bad resistance {tokens[i + 1]!r}", line_no
                ) from None
            i += 1
        else:
            raise ParseError(f"option line: unknown token {tokens[i]!r}", line_no)
        i += 1
    unit_name = {"hz": "Hz", "khz": "kHz", "mhz": "MHz", "ghz": "GHz"}[unit]
    return unit_name, param.upper(), TouchstoneFormat(fmt.upper()), resistance


def parse_touchstone(text: str, n_ports: int) -> TouchstoneDocument:
    """Parse version-1 Touchstone text for the given port count."""
    if n_ports < 1:
        raise ParseError("n_ports must be >= 1")
    comments: list[str] = []
    option = None
    data_lines: list[tuple[int, list[float]]] = []

    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw
        if "!" in line:
            comment = line[line.index("!") + 1 :].strip()
            if comment:
                comments.append(comment)
            line = line[: line.index("!")]
        line = line.strip()
        if not line:
            continue
        if line.startswith("#"):
            if option is None:
                option = _parse_option_line(line[1:].split(), line_no)
            continue
        if line.startswith("["):
            raise ParseError("version-2 keywords are not supported", line_no)
        nums = []
        for tok in line.split():
            try:
                nums.append(float(tok))
            except ValueError:
                raise ParseError(f"bad numeric token {tok!r}", line_no) from None
        data_lines.append((line_no, nums))

    if option is None:
        option = ("GHz", "S", TouchstoneFormat.MA, 50.0)
    unit, param, fmt, resistance = option
    if not data_lines:
        raise ParseError("no data section")

    per_point = 1 + 2 * n_ports * n_ports
    freqs: list[float] = []
    mats: list[np.ndarray] = []
    noise_skipped = False

    if n_ports <= 2:
        # one frequency point per line; a decreasing 2-port frequency starts noise data
        for i, (line_no, nums) in enumerate(data_lines):
            if n_ports == 2 and freqs and nums and nums[0] <= freqs[-1]:
                noise_skipped = True
                break
            if len(nums) != per_point:
                raise ParseError(
                    f"expected {per_point} values per data line, got {len(nums)}",
                    line_no,
                )
            f = nums[0]
            if freqs and f <= freqs[-1]:
                raise ParseError(f"non-monotone frequency {f!r}", line_no)
            chunk = np.array(nums[1:])
            cplx = _decode(fmt, chunk[0::2], chunk[1::2])
            if n_ports == 2:
                # legacy column order: S11 S21 S12 S22
                mat = np.array([[cplx[0], cplx[2]], [cplx[1], cplx[3]]])
            else:
                mat = cplx.reshape(1, 1)
            freqs.append(f)
            mats.append(mat)
    else:
        values: list[float] = []
        value_lines: list[int] = []
        for line_no, nums in data_lines:
            values.extend(nums)
            value_lines.extend([line_no] * len(nums))
        idx = 0
        while idx < len(values):
            if len(values) - idx < per_point:
                raise ParseError(
                    f"incomplete matrix for frequency point {len(freqs) + 1}",
                    value_lines[idx],
                )
            f = values[idx]
            if freqs and f <= freqs[-1]:
                raise ParseError(f"non-monotone frequency {f!r}", value_lines[idx])
            chunk = np.array(values[idx + 1 : idx + per_point])
            cplx = _decode(fmt, chunk[0::2], chunk[1::2])
            freqs.append(f)
            mats.append(cplx.reshape(n_ports, n_ports))
            idx += per_point

    if noise_skipped:
        warnings.warn(
            "noise-parameter section skipped", VolarrayWarning, stacklevel=2
        )
    if not freqs:
        raise ParseError("no complete frequency points")
    _warn_if_not_passive(np.stack(mats))
    return TouchstoneDocument(
        n_ports, unit, param, fmt, resistance, tuple(comments),
        np.array(freqs), np.stack(mats),
    )


def _warn_if_not_passive(mats: np.ndarray) -> None:
    column_power = np.sum(np.abs(mats) ** 2, axis=1)
    if np.abs(mats).max() > 1.0 + 1e-6 or column_power.max() > 1.0 + 1e-6:
        warnings.warn(
            "S-parameter data violates passivity bounds", PassivityWarning, stacklevel=3
        )


def write_touchstone(doc: TouchstoneDocument) -> str:
    """Serialize with 17-significant-digit decimals (round-trips to <= 1e-12)."""
    _warn_if_not_passive(doc.matrices)
    out = [f"! {c}" for c in doc.comments]
    out.append(
        f"# {doc.freq_unit} {doc.parameter} {doc.format.value} R {doc.resistance:.17g}"
    )
    n = doc.n_ports
    for f, mat in zip(doc.frequencies, doc.matrices):
        if n == 2:
            entries = [mat[0, 0], mat[1, 0], mat[0, 1], mat[1, 1]]
        else:
            entries = list(mat.reshape(-1))
        pairs = [_encode(doc.format, v) for v in entries]
        if n <= 2:
            nums = [f"{f:.17g}"] + [f"{x:.17g}" for p in pairs for x in p]
            out.append(" ".join(nums))
        else:
            # row-major, new line per matrix row, at most 4 entries per line
            first = True
            for r in range(n):
                row = pairs[r * n : (r + 1) * n]
                for lo in range(0, n, 4):
                    seg = row[lo : lo + 4]
                    nums = [f"{x:.17g}" for p in seg for x in p]
                    if first:
                        out.append(" ".join([f"{f:.17g}"] + nums))
                        first = False
                    else:
                        out.append(" ".join(nums))
    return "\n".join(out) + "\n"


# --- pattern grids --------------------------------------------------------------

_PATTERN_HEADER = "theta_deg,phi_deg,re_etheta,im_etheta,re_ephi,im_ephi"


def parse_pattern_grid(text: str) -> EmbeddedPattern:
    """Read a rectangular-grid pattern CSV (header `theta_deg,phi_deg,...`)."""
    lines = text.splitlines()
    if not lines or lines[0].strip().replace(" ", "") != _PATTERN_HEADER:
        raise ParseError(f"expected header '{_PATTERN_HEADER}'", line=1)
    rows = []
    for i, ln in enumerate(lines[1:], start=2):
        if not ln.strip():
            continue
        parts = ln.split(",")
        if len(parts) != 6:
            raise ParseError("expected 6 comma-separated values", line=i)
        try:
            rows.append([float(v) for v in parts])
        except ValueError:
            raise ParseError("non-numeric value", line=i) from None
    if not rows:
        raise ParseError("no data rows")
    data = np.array(rows)
    thetas = np.unique(data[:, 0])
    phis = np.unique(data[:, 1])
    for grid, name in ((thetas, "theta"), (phis, "phi")):
        steps = np.diff(grid)
        if steps.size and not np.allclose(steps, steps[0], rtol=0, atol=1e-9):
            raise ParseError(f"non-uniform {name} steps")
    if data.shape[0] != thetas.size * phis.size:
        seen = {(t, p) for t, p in zip(data[:, 0], data[:, 1])}
        for t in thetas:
            for p in phis:
                if (t, p) not in seen:
                    raise ParseError(f"missing grid point (theta={t:g}, phi={p:g})")
        raise ParseError("duplicate grid points")
    ti = np.searchsorted(thetas, data[:, 0])
    pi = np.searchsorted(phis, data[:, 1])
    e_t = np.zeros((thetas.size, phis.size), dtype=complex)
    e_p = np.zeros_like(e_t)
    e_t[ti, pi] = data[:, 2] + 1j * data[:, 3]
    e_p[ti, pi] = data[:, 4] + 1j * data[:, 5]
    return EmbeddedPattern(thetas, phis, e_t, e_p)


def write_pattern_grid(p: EmbeddedPattern) -> str:
    out = [_PATTERN_HEADER]
    for i, t in enumerate(p.theta_deg):
        for j, ph in enumerate(p.phi_deg):
            et, ep = p.e_theta[i, j], p.e_phi[i, j]
            out.append(
                f"{t:.17g},{ph:.17g},{et.real:.17g},{et.imag:.17g},"
                f"{ep.real:.17g},{ep.imag:.17g}"
            )
    return "\n".join(out) + "\n"


# --- scenario configs -------------------------------------------------------------

_CONFIG_SCHEMA: dict[str, dict[str, tuple]] = {
    "geometry": {
        "layout": (str, "planar", ("linear", "planar", "case1", "case2")),
        "lx": (float, 3.0, None),
        "ly": (float, 3.0, None),
        "nx": (int, 7, None),
        "ny": (int, 7, None),
        "n": (int, 7, None),
        "length": (float, 3.0, None),
        "offset": (float, 1.0, None),
    },
    "channel": {
        "model": (str, "clarke", ("clarke", "kronecker", "uma")),
        "snr_db": (float, 20.0, None),
        "carrier_hz": (float, 3.5e9, None),
        "bs_height_m": (float, 25.0, None),
        "cell_radius_m": (float, 200.0, None),
        "n_users": (int, 50, None),
        "user_mode": (str, "2d", ("2d", "3d")),
        "n_clusters": (int, 20, None),
        "rays_per_cluster": (int, 20, None),
        "asa_deg": (float, 60.0, None),
        "asd_deg": (float, 20.0, None),
        "zsa_deg": (float, 10.0, None),
        "zsd_deg": (float, 5.0, None),
        "delay_spread_s": (float, 300e-9, None),
        "los": (str, "probability", ("probability", "always_los", "always_nlos")),
        "element": (str, "iso", ("iso", "cos", "3gpp")),
        "kappa": (float, 1.0, None),
    },
    "sweep": {
        "n_min": (int, 2, None),
        "n_max": (int, 11, None),
        "densify": (str, "x", ("x", "xy")),
        "trials": (int, 500, None),
        "drops": (int, 10, None),
        "seed": (int, 0, None),
        "n_t": (int, 0, None),  # 0 = automatic
    },
    "output": {
        "dir": (str, ".", None),
        "plot": (bool, False, None),
    },
}


@dataclass(frozen=True)
class ScenarioConfig:
    """Fully resolved configuration plus its canonical digest."""

    values: dict
    fingerprint: str

    def __getitem__(self, key: str):
        return self.values[key]


def _coerce(raw: str, typ, line_no: int, key: str):
    raw = raw.strip()
    try:
        if typ is bool:
            if raw.lower() in ("true", "1", "yes", "on"):
                return True
            if raw.lower() in ("false", "0", "no", "off"):
                return False
            raise ValueError(raw)
        if typ is int:
            return int(raw)
        if typ is float:
            return float(raw)
        return raw
    except ValueError:
        raise ParseError(f"bad {typ.__name__} value {raw!r} for {key}", line_no) from None


def config_fingerprint(values: dict) -> str:
    canon = json.dumps(values, sort_keys=True, default=str)
    return hashlib.sha256(canon.encode()).hexdigest()[:16]


def parse_scenario(text: str) -> ScenarioConfig:
    """Parse a sectioned `key = value` config; unknown or duplicate keys fail."""
    values = {
        f"{sec}.{key}": spec[1]
        for sec, keys in _CONFIG_SCHEMA.items()
        for key, spec in keys.items()
    }
    seen: set[str] = set()
    section = None
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].split(";", 1)[0].strip()
        if not line:
            continue
        if line.startswith("[") and line.endswith("]"):
            section = line[1:-1].strip().lower()
            if section not in _CONFIG_SCHEMA:
                raise ParseError(f"unknown section [{section}]", line_no)
            continue
        if "=" not in line:
            raise ParseError("expected 'key = value'", line_no)
        if section is None:
            raise ParseError("key outside any [section]", line_no)
        key, raw_val = (part.strip() for part in line.split("=", 1))
        if key not in _CONFIG_SCHEMA[section]:
            raise ParseError(f"unknown key {key!r} in [{section}]", line_no)
        full = f"{section}.{key}"
        if full in seen:
            raise ParseError(f"duplicate key {key!r} in [{section}]", line_no)
        seen.add(full)
        typ, _, choices = _CONFIG_SCHEMA[section][key]
        val = _coerce(raw_val, typ, line_no, key)
        if choices is not None and val not in choices:
            raise ParseError(
                f"{key} must be one of {', '.join(choices)}; got {val!r}", line_no
            )
        values[full] = val
    return ScenarioConfig(values, config_fingerprint(values))


def default_scenario_config() -> ScenarioConfig:
    return parse_scenario("")


# --- result export ----------------------------------------------------------------

RESULT_COLUMNS = ("n", "edof", "capacity_bps_hz", "ci95", "seed")


def results_to_csv(reports) -> str:
    out = [",".join(RESULT_COLUMNS)]
    for r in reports:
        out.append(
            f"{r.sweep_n},{r.edof:.17g},{r.capacity:.17g},{r.ci95:.17g},{r.seed}"
        )
    return "\n".join(out) + "\n"


def results_to_json(reports, extra: dict | None = None) -> str:
    payload = {
        "fingerprint": reports[0].scenario_fingerprint if reports else "",
        "results": [
            {
                "n": r.sweep_n,
                "n_elements": r.n_elements,
                "edof": r.edof,
                "capacity_bps_hz": r.capacity,
                "ci95": r.ci95,
                "seed": r.seed,
                "avg_efficiency": r.avg_efficiency,
            }
            for r in reports
        ],
    }
    if extra:
        payload.update(extra)
    return json.dumps(payload, indent=2, sort_keys=True) + "\n"
