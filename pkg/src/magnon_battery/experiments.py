"""Experiment orchestration: config parsing, presets, sweeps, CSV emission.

Configs are flat INI-style key-value text with one section per concern
([run], [system], [noise], [sweep]).  Frequencies are given either in
units of the detuning via ``*_over_delta`` keys (with ``delta`` setting
the scale) or as raw frequencies (``g``, ``omega``, ``omega_m``);
mixing the two families in one section is rejected, as is any unknown
key — both with the offending line number.

Named presets expand to ordinary config texts, so a preset run and a
hand-written config follow the same code path and the CSV header can
echo the exact configuration either way.  Output is deterministic:
identical config text produces byte-identical CSV.

Energy columns are reported in units of the spin splitting; power in
units of (splitting x induced coupling magnitude); sweep times in units
of the inverse induced coupling.
"""

from __future__ import annotations

import configparser
import io
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from importlib import metadata

import numpy as np

from .collective import build_collective_hamiltonian, collective_charged_state
from .config import SystemConfig
from .dynamics import Trajectory, charging_horizon, charging_metrics, evolve
from .effective import build_effective_hamiltonian, effective_couplings
from .hilbert import build_full_hamiltonian, charged_initial_state, enumerate_sector_basis
from .analytic import e_n_one, e_one_one, e_two_one, e_two_two
from .qsd import QsdParams, solve_calF

__all__ = [
    "ConfigError",
    "ExperimentSpec",
    "SweepRow",
    "PRESETS",
    "parse_config",
    "run_experiment",
    "sweep_metrics",
]

try:
    TOOL_VERSION = metadata.version("magnon-battery")
except metadata.PackageNotFoundError:  # running from a bare checkout
    TOOL_VERSION = "0.0.0"

MODES = (
    "simulate-full",
    "simulate-effective",
    "collective",
    "analytic",
    "qsd",
    "sweep-n",
    "sweep-nm",
    "sweep-j",
    "compare",
)

# models with a full Hilbert sector; sweeps over these are capped
FULL_SWEEP_CAP = 12

_KNOWN_KEYS = {
    "run": {
        "mode",
        "horizon",
        "horizon_factor",
        "samples",
        "out",
        "seed",
        "threads",
        "tol",
        "allow_large",
    },
    "system": {
        "n_charger",
        "m_battery",
        "fock_cutoff",
        "delta",
        "g_over_delta",
        "g_charger_over_delta",
        "g_battery_over_delta",
        "j_over_delta",
        "j_charger_over_delta",
        "j_battery_over_delta",
        "omega_over_delta",
        "g",
        "g_charger",
        "g_battery",
        "j",
        "j_charger",
        "j_battery",
        "omega",
        "omega_m",
    },
    "noise": {
        "delta",
        "g_over_delta",
        "omega_over_delta",
        "gamma_over_delta",
        "g",
        "omega",
        "omega_m",
        "gamma_noise",
        "memory_gamma",
    },
    "sweep": {
        "models",
        "exchange",
        "n_min",
        "n_max",
        "ratios",
        "m_max",
        "j_values_over_delta",
        "j_values",
    },
}

_RAW_FREQ_KEYS = {"g", "g_charger", "g_battery", "j", "j_charger", "j_battery", "omega", "omega_m", "gamma_noise"}


class ConfigError(ValueError):
    """Malformed, contradictory, or incomplete experiment configuration."""


@dataclass(frozen=True)
class ExperimentSpec:
    """A fully validated experiment: mode, physics, grid, and output plan."""

    mode: str
    text: str
    system: SystemConfig | None
    noise: QsdParams | None
    gammas: tuple[float, ...]
    horizon: float | None
    horizon_factor: float
    samples: int
    out: str | None
    seed: int
    threads: int
    tol: float
    allow_large: bool
    models: tuple[str, ...] | None
    exchanges: tuple[str, ...]
    j_values: tuple[float, ...] | None
    n_range: tuple[int, int]
    ratios: tuple[int, ...]
    m_max: int


@dataclass(frozen=True)
class SweepRow:
    """One grid point of a metrics sweep.

    e_max is in units of the spin splitting, tau in units of the
    inverse induced coupling, p_tau and p_max in units of
    (splitting x induced coupling).
    """

    model: str
    n_charger: int
    m_battery: int
    j_over_delta: float
    e_max: float
    tau: float
    p_tau: float
    p_max: float


# ---------------------------------------------------------------------------
# presets


PRESETS: dict[str, str] = {
    # one-to-one charging over a full oscillation: exact model vs
    # mode-eliminated model
    "fig2": """\
[run]
mode = compare
samples = 2001
horizon_factor = 1.0

[system]
n_charger = 1
m_battery = 1
g_over_delta = 0.1
omega_over_delta = 10.0
delta = 1.0

[sweep]
models = full, effective
""",
    # two chargers, one battery: direct exchange from none to dominant
    "fig3": """\
[run]
mode = compare
samples = 2001
horizon = 500.0

[system]
n_charger = 2
m_battery = 1
g_over_delta = 0.1
omega_over_delta = 10.0
delta = 1.0

[sweep]
models = full, effective
j_values_over_delta = 0.0, 0.01, 0.1
""",
    # charger-count scan of single-battery metrics, with the induced
    # intra-register coupling either left alone or cancelled
    "fig4": """\
[run]
mode = sweep-n
samples = 4001

[system]
n_charger = 1
m_battery = 1
g_over_delta = 0.1
omega_over_delta = 10.0
delta = 1.0

[sweep]
models = effective
exchange = zero, sweet
n_min = 1
n_max = 10
""",
    # collective-spin scaling: charger/battery ratios over battery size;
    # the long horizon captures revival peaks, not just the first rise
    "fig5": """\
[run]
mode = sweep-nm
samples = 20001
horizon_factor = 20.0

[system]
g_over_delta = 0.1
omega_over_delta = 10.0
delta = 1.0

[sweep]
models = collective
exchange = sweet
ratios = 1, 2, 5
m_max = 6
""",
    # noisy-mode charging at several noise strengths
    "fig6": """\
[run]
mode = qsd
samples = 4001
horizon = 800.0

[noise]
g_over_delta = 0.1
omega_over_delta = 10.0
delta = 1.0
gamma_over_delta = 0.0, 0.002, 0.02, 0.2
""",
}


# ---------------------------------------------------------------------------
# config parsing


def _line_map(text: str) -> dict[tuple[str, str], int]:
    """Map (section, key) -> 1-based line number; sections keyed on ''."""
    mapping: dict[tuple[str, str], int] = {}
    section = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if line.startswith("[") and line.endswith("]"):
            section = line[1:-1].strip()
            mapping.setdefault(("", section), lineno)
            continue
        if "=" in line and section is not None:
            key = line.split("=", 1)[0].strip()
            mapping.setdefault((section, key), lineno)
    return mapping


class _Section:
    """Typed access to one config section with line-numbered errors."""

    def __init__(self, name: str, data: dict[str, str], lines: dict[tuple[str, str], int]):
        self.name = name
        self.data = data
        self._lines = lines

    def __contains__(self, key: str) -> bool:
        return key in self.data

    def keys(self):
        return self.data.keys()

    def fail(self, key: str, message: str):
        line = self._lines.get((self.name, key))
        where = f"line {line}: " if line else ""
        raise ConfigError(f"{where}[{self.name}] {key}: {message}")

    def missing(self, message: str):
        raise ConfigError(f"[{self.name}]: {message}")

    def get_str(self, key: str, default: str | None = None) -> str | None:
        return self.data.get(key, default)

    def get_float(self, key, default=None, *, positive=False, nonnegative=False, nonzero=False, allow_inf=False):
        if key not in self.data:
            return default
        raw = self.data[key]
        try:
            value = float(raw)
        except ValueError:
            self.fail(key, f"cannot parse {raw!r} as a number")
        if not allow_inf and not math.isfinite(value):
            self.fail(key, "must be finite")
        if positive and not value > 0.0:
            self.fail(key, "must be > 0")
        if nonnegative and value < 0.0:
            self.fail(key, "must be >= 0")
        if nonzero and value == 0.0:
            self.fail(key, "must be nonzero")
        return value

    def get_int(self, key, default=None, *, minimum=None):
        if key not in self.data:
            return default
        raw = self.data[key]
        try:
            value = int(raw)
        except ValueError:
            self.fail(key, f"cannot parse {raw!r} as an integer")
        if minimum is not None and value < minimum:
            self.fail(key, f"must be >= {minimum}")
        return value

    def get_bool(self, key, default=False):
        if key not in self.data:
            return default
        raw = self.data[key].strip().lower()
        if raw in ("true", "yes", "on", "1"):
            return True
        if raw in ("false", "no", "off", "0"):
            return False
        self.fail(key, f"cannot parse {raw!r} as a boolean")

    def get_float_list(self, key, default=None):
        if key not in self.data:
            return default
        parts = [p.strip() for p in self.data[key].split(",")]
        try:
            return tuple(float(p) for p in parts if p)
        except ValueError:
            self.fail(key, f"cannot parse {self.data[key]!r} as a comma-separated number list")

    def get_int_list(self, key, default=None, *, minimum=None):
        values = self.get_float_list(key, None)
        if values is None:
            return default
        out = []
        for v in values:
            if v != int(v):
                self.fail(key, "entries must be integers")
            if minimum is not None and v < minimum:
                self.fail(key, f"entries must be >= {minimum}")
            out.append(int(v))
        return tuple(out)

    def get_str_list(self, key, allowed, default=None):
        if key not in self.data:
            return default
        parts = tuple(p.strip() for p in self.data[key].split(",") if p.strip())
        for p in parts:
            if p not in allowed:
                self.fail(key, f"unknown entry {p!r}; allowed: {', '.join(sorted(allowed))}")
        if not parts:
            self.fail(key, "list is empty")
        return parts

    def get_matrix(self, key, size: int, scale: float):
        """Scalar or ';'-row matrix value, scaled; validates the shape."""
        raw = self.data[key]
        if ";" not in raw and "," not in raw and len(raw.split()) == 1:
            return self.get_float(key) * scale
        rows = [r for r in raw.split(";") if r.strip()]
        try:
            matrix = [[float(x) for x in row.replace(",", " ").split()] for row in rows]
        except ValueError:
            self.fail(key, f"cannot parse {raw!r} as a matrix (rows split by ';')")
        widths = {len(row) for row in matrix}
        if len(matrix) != size or widths != {size}:
            got = f"{len(matrix)}x{sorted(widths)}"
            self.fail(key, f"expected a {size}x{size} symmetric matrix, got shape {got}")
        return np.asarray(matrix) * scale

    def get_vector(self, key, size: int, scale: float):
        """Scalar or comma/space list value, scaled; validates the length."""
        raw = self.data[key]
        values = self.get_float_list(key)
        if len(values) == 1:
            return values[0] * scale
        if len(values) != size:
            self.fail(key, f"expected {size} entries, got {len(values)} in {raw!r}")
        return tuple(v * scale for v in values)


def _read_sections(text: str) -> dict[str, _Section]:
    lines = _line_map(text)
    # ';' stays out of the comment prefixes: it separates matrix rows
    parser = configparser.ConfigParser(
        delimiters=("=",),
        comment_prefixes=("#",),
        inline_comment_prefixes=("#",),
        interpolation=None,
        empty_lines_in_values=False,
    )
    parser.optionxform = str
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"cannot parse config: {exc}") from None
    if parser.defaults():
        raise ConfigError("unknown section [DEFAULT]")
    sections = {}
    for name in parser.sections():
        if name not in _KNOWN_KEYS:
            line = lines.get(("", name))
            where = f"line {line}: " if line else ""
            raise ConfigError(
                f"{where}unknown section [{name}]; known: "
                + ", ".join(f"[{s}]" for s in _KNOWN_KEYS)
            )
        data = dict(parser.items(name))
        section = _Section(name, data, lines)
        for key in data:
            if key not in _KNOWN_KEYS[name]:
                section.fail(key, "unknown key")
        sections[name] = section
    for name in _KNOWN_KEYS:
        sections.setdefault(name, _Section(name, {}, lines))
    return sections


def _check_unit_family(section: _Section) -> bool:
    """True if the section uses delta-normalized keys; rejects mixing."""
    normalized = sorted(k for k in section.keys() if k.endswith("_over_delta") or k == "delta")
    raw = sorted(k for k in section.keys() if k in _RAW_FREQ_KEYS)
    if normalized and raw:
        section.fail(
            raw[0],
            f"raw-frequency keys ({', '.join(raw)}) cannot be mixed with "
            f"delta-normalized keys ({', '.join(normalized)})",
        )
    return bool(normalized) or not raw


def _parse_system(section: _Section) -> SystemConfig | None:
    if not section.keys():
        return None
    n = section.get_int("n_charger", 1, minimum=1)
    m = section.get_int("m_battery", 1, minimum=1)
    cutoff = section.get_int("fock_cutoff", None, minimum=0)
    if _check_unit_family(section):
        delta = section.get_float("delta", 1.0, nonzero=True)
        omega = section.get_float("omega_over_delta", 10.0, nonzero=True) * delta
        omega_m = omega + delta
        if "g_over_delta" not in section and "g_charger_over_delta" not in section:
            section.missing("coupling required: set g_over_delta (or g_charger_over_delta / g_battery_over_delta)")
        scale, gk, gck, gbk = delta, "g_over_delta", "g_charger_over_delta", "g_battery_over_delta"
        jk, jck, jbk = "j_over_delta", "j_charger_over_delta", "j_battery_over_delta"
    else:
        omega = section.get_float("omega", None, nonzero=True)
        omega_m = section.get_float("omega_m", None, nonzero=True)
        if omega is None or omega_m is None:
            section.missing("raw-frequency configs require omega and omega_m")
        if "g" not in section and "g_charger" not in section:
            section.missing("coupling required: set g (or g_charger / g_battery)")
        scale, gk, gck, gbk = 1.0, "g", "g_charger", "g_battery"
        jk, jck, jbk = "j", "j_charger", "j_battery"

    g_both = section.get_vector(gk, 1, scale) if gk in section else None
    g_charger = section.get_vector(gck, n, scale) if gck in section else g_both
    g_battery = section.get_vector(gbk, m, scale) if gbk in section else g_both
    if g_charger is None or g_battery is None:
        section.missing(f"both registers need couplings; set {gk} or both {gck} and {gbk}")
    j_both = section.get_float(jk, None) if jk in section else None
    if j_both is not None:
        j_both *= scale
    j_charger = section.get_matrix(jck, n, scale) if jck in section else (j_both or 0.0)
    j_battery = section.get_matrix(jbk, m, scale) if jbk in section else (j_both or 0.0)
    try:
        return SystemConfig(
            n_charger=n,
            m_battery=m,
            omega=omega,
            omega_m=omega_m,
            g_charger=g_charger,
            g_battery=g_battery,
            j_charger=j_charger,
            j_battery=j_battery,
            fock_cutoff=cutoff,
        )
    except ValueError as exc:
        raise ConfigError(f"[{section.name}]: {exc}") from None


def _parse_noise(section: _Section) -> tuple[QsdParams | None, tuple[float, ...]]:
    if not section.keys():
        return None, ()
    memory_gamma = section.get_float("memory_gamma", math.inf, positive=True, allow_inf=True)
    if _check_unit_family(section):
        delta = section.get_float("delta", 1.0, nonzero=True)
        if "g_over_delta" not in section:
            section.missing("coupling required: set g_over_delta")
        g = section.get_float("g_over_delta", nonzero=True) * delta
        omega = section.get_float("omega_over_delta", 10.0, nonzero=True) * delta
        omega_m = omega + delta
        gammas = section.get_float_list("gamma_over_delta", (0.0,))
        gammas = tuple(x * delta for x in gammas)
    else:
        g = section.get_float("g", None, nonzero=True)
        omega = section.get_float("omega", None)
        omega_m = section.get_float("omega_m", None)
        if g is None or omega is None or omega_m is None:
            section.missing("raw-frequency configs require g, omega and omega_m")
        gammas = section.get_float_list("gamma_noise", (0.0,))
    for gamma in gammas:
        if gamma < 0.0:
            section.fail("gamma_over_delta" if "gamma_over_delta" in section else "gamma_noise", "noise strengths must be >= 0")
    try:
        template = QsdParams(
            g=g, omega=omega, omega_m=omega_m, gamma_noise=0.0, memory_gamma=memory_gamma
        )
    except ValueError as exc:
        raise ConfigError(f"[{section.name}]: {exc}") from None
    return template, gammas


def parse_config(text: str, mode: str | None = None) -> ExperimentSpec:
    """Validate config text (or a preset name) into an ExperimentSpec.

    The mode may come from the text ([run] mode = ...) or the argument;
    if both are present they must agree.  Unknown sections and keys are
    hard errors carrying the offending line number.
    """
    stripped = text.strip()
    if stripped in PRESETS:
        text = PRESETS[stripped]
    sections = _read_sections(text)
    run = sections["run"]

    text_mode = run.get_str("mode")
    if text_mode is not None and text_mode not in MODES:
        run.fail("mode", f"unknown mode {text_mode!r}; known: {', '.join(MODES)}")
    if mode is not None and mode not in MODES:
        raise ConfigError(f"unknown mode {mode!r}; known: {', '.join(MODES)}")
    if mode is not None and text_mode is not None and mode != text_mode:
        run.fail("mode", f"config says {text_mode!r} but the command line says {mode!r}")
    mode = mode or text_mode
    if mode is None:
        raise ConfigError("mode required: pass it on the command line or set [run] mode")

    system = _parse_system(sections["system"])
    noise, gammas = _parse_noise(sections["noise"])

    sweep = sections["sweep"]
    models = sweep.get_str_list("models", {"full", "effective", "collective", "analytic"}, None)
    exchanges = sweep.get_str_list("exchange", {"zero", "sweet"}, ("sweet",))
    n_min = sweep.get_int("n_min", 1, minimum=1)
    n_max = sweep.get_int("n_max", 10, minimum=1)
    if n_max < n_min:
        sweep.fail("n_max", f"must be >= n_min ({n_min})")
    ratios = sweep.get_int_list("ratios", (1, 2, 5), minimum=1)
    m_max = sweep.get_int("m_max", 6, minimum=1)
    j_norm = sweep.get_float_list("j_values_over_delta", None)
    j_raw = sweep.get_float_list("j_values", None)
    if j_norm is not None and j_raw is not None:
        sweep.fail("j_values", "give either j_values_over_delta or j_values, not both")
    j_values = j_raw
    if j_norm is not None:
        if system is None:
            sweep.fail("j_values_over_delta", "needs a [system] section to supply delta")
        j_values = tuple(x * system.detuning for x in j_norm)

    spec = ExperimentSpec(
        mode=mode,
        text=text,
        system=system,
        noise=noise,
        gammas=gammas,
        horizon=run.get_float("horizon", None, positive=True),
        horizon_factor=run.get_float("horizon_factor", 1.2, positive=True),
        samples=run.get_int("samples", 1001, minimum=2),
        out=run.get_str("out"),
        seed=run.get_int("seed", 0, minimum=0),
        threads=run.get_int("threads", 1, minimum=1),
        tol=run.get_float("tol", 1e-10, positive=True),
        allow_large=run.get_bool("allow_large", False),
        models=models,
        exchanges=exchanges,
        j_values=j_values,
        n_range=(n_min, n_max),
        ratios=ratios,
        m_max=m_max,
    )
    _validate_mode(spec, sections)
    return spec


def _validate_mode(spec: ExperimentSpec, sections: dict[str, _Section]) -> None:
    needs_system = spec.mode not in ("qsd",)
    if needs_system and spec.system is None:
        raise ConfigError(f"mode {spec.mode!r} requires a [system] section")
    if spec.mode == "qsd":
        if spec.noise is None:
            raise ConfigError("mode 'qsd' requires a [noise] section")
        if not spec.noise.is_markov:
            sections["noise"].fail(
                "memory_gamma",
                "reduced dynamics require the white-noise limit; leave memory_gamma unset (inf)",
            )
        if spec.noise.delta == 0.0:
            raise ConfigError("[noise]: the mode must be detuned (omega_m != omega)")
    if spec.mode in ("sweep-n", "sweep-nm", "sweep-j", "compare", "collective", "analytic"):
        if spec.system is not None and not spec.system.is_uniform():
            raise ConfigError(f"mode {spec.mode!r} requires uniform couplings")
    if spec.mode == "sweep-j" and spec.j_values is None:
        raise ConfigError("mode 'sweep-j' requires [sweep] j_values_over_delta or j_values")
    if spec.mode in ("sweep-n", "sweep-nm"):
        models = spec.models or _default_models(spec.mode)
        if "collective" in models and spec.exchanges != ("sweet",):
            raise ConfigError(
                "[sweep]: the collective model is derived at the sweet spot; exchange must be 'sweet'"
            )
    _check_sweep_cap(spec)


def _default_models(mode: str) -> tuple[str, ...]:
    return {
        "sweep-n": ("effective",),
        "sweep-nm": ("collective",),
        "sweep-j": ("effective",),
        "compare": ("full", "effective"),
    }[mode]


def _check_sweep_cap(spec: ExperimentSpec) -> None:
    if spec.mode not in ("sweep-n", "sweep-nm", "sweep-j") or spec.allow_large:
        return
    models = spec.models or _default_models(spec.mode)
    if "full" not in models:
        return
    worst = 0
    if spec.mode == "sweep-n":
        worst = spec.n_range[1] + spec.system.m_battery
    elif spec.mode == "sweep-nm":
        worst = max(r * spec.m_max + spec.m_max for r in spec.ratios)
    elif spec.mode == "sweep-j":
        worst = spec.system.n_charger + spec.system.m_battery
    if worst > FULL_SWEEP_CAP:
        raise ConfigError(
            f"full-model sweep reaches n_charger + m_battery = {worst} > {FULL_SWEEP_CAP}; "
            "set [run] allow_large = true to override"
        )


# ---------------------------------------------------------------------------
# engines


def _coupling_scale(config: SystemConfig) -> float:
    """|G| used for horizons and power units; largest pair value if non-uniform."""
    couplings = effective_couplings(config)
    if config.is_uniform():
        return abs(couplings.uniform_value())
    return float(np.abs(couplings.charger_battery).max())


def _uniform_j(config: SystemConfig) -> float:
    if config.n_charger >= 2:
        return float(config.j_charger[0, 1])
    if config.m_battery >= 2:
        return float(config.j_battery[0, 1])
    return 0.0


def _analytic_energy(config: SystemConfig, times: np.ndarray) -> np.ndarray:
    """Dispatch to the applicable closed form, in splitting units."""
    if not config.is_uniform():
        raise ConfigError("closed forms exist only for uniform couplings")
    g = effective_couplings(config).uniform_value()
    n, m = config.n_charger, config.m_battery
    j_c = float(config.j_charger[0, 1]) if n >= 2 else 0.0
    j_b = float(config.j_battery[0, 1]) if m >= 2 else 0.0
    sweet = abs(g) * 1e-9

    if (n, m) == (1, 1):
        return e_one_one(g, times)
    if (n, m) == (2, 1):
        return e_two_one(g, j_c, times)
    if m == 1:
        if abs(j_c + g) > sweet:
            raise ConfigError(
                f"no closed form for n_charger={n} away from the sweet spot (need exchange = {-g!r})"
            )
        return e_n_one(g, n, times)
    if (n, m) == (2, 2):
        if abs(j_c + g) > sweet or abs(j_b + g) > sweet:
            raise ConfigError(
                f"the two-to-two closed form needs both registers at the sweet spot (exchange = {-g!r})"
            )
        return e_two_two(g, times)
    raise ConfigError(f"no closed form for n_charger={n}, m_battery={m}")


def _trajectory(model: str, config: SystemConfig, times: np.ndarray, tol: float) -> Trajectory:
    if model == "full":
        n_exc = config.n_charger
        cutoff = config.fock_cutoff if config.fock_cutoff is not None else n_exc
        basis = enumerate_sector_basis(config.n_charger, config.m_battery, cutoff, n_exc)
        h = build_full_hamiltonian(config, basis)
        return evolve(h, charged_initial_state(basis), times, tol=tol)
    if model == "effective":
        h = build_effective_hamiltonian(config)
        return evolve(h, charged_initial_state(h.basis), times, tol=tol)
    if model == "collective":
        g = effective_couplings(config).uniform_value()
        h = build_collective_hamiltonian(g, config.n_charger, config.m_battery)
        return evolve(h, collective_charged_state(h.basis), times, tol=tol)
    if model == "analytic":
        energy = np.asarray(_analytic_energy(config, times))
        power = np.zeros_like(energy)
        positive = times > 0
        power[positive] = energy[positive] / times[positive]
        return Trajectory(
            times=times, energy=energy, power=power, norm=np.ones_like(energy)
        )
    raise ConfigError(f"unknown model {model!r}")


# ---------------------------------------------------------------------------
# runners


def _fmt(x: float) -> str:
    return repr(float(x))


def _map_ordered(fn, items, threads: int) -> list:
    items = list(items)
    if threads <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


def _time_grid(spec: ExperimentSpec, horizon: float) -> np.ndarray:
    return np.linspace(0.0, horizon, spec.samples)


def _system_horizon(spec: ExperimentSpec, config: SystemConfig) -> float:
    if spec.horizon is not None:
        return spec.horizon
    return charging_horizon(
        config.n_charger, config.m_battery, _coupling_scale(config), factor=spec.horizon_factor
    )


def _run_trajectory_mode(spec: ExperimentSpec) -> tuple[list[str], list[str]]:
    model = {
        "simulate-full": "full",
        "simulate-effective": "effective",
        "collective": "collective",
        "analytic": "analytic",
    }[spec.mode]
    config = spec.system
    times = _time_grid(spec, _system_horizon(spec, config))
    traj = _trajectory(model, config, times, spec.tol)
    scale = _coupling_scale(config)
    magnon = traj.magnon if traj.magnon is not None else np.zeros_like(traj.energy)
    rows = [
        ",".join((_fmt(t), _fmt(e), _fmt(p / scale), _fmt(nrm), _fmt(nm)))
        for t, e, p, nrm, nm in zip(traj.times, traj.energy, traj.power, traj.norm, magnon)
    ]
    return ["t", "E_over_omega", "P_over_Gomega", "norm", "n_magnon"], rows


def _run_compare(spec: ExperimentSpec) -> tuple[list[str], list[str]]:
    base = spec.system
    models = spec.models or _default_models("compare")
    j_values = spec.j_values if spec.j_values is not None else (_uniform_j(base),)
    delta = base.detuning
    scale = _coupling_scale(base)
    times = _time_grid(spec, _system_horizon(spec, base))
    points = [(model, j) for model in models for j in j_values]

    def one(point):
        model, j = point
        config = replace(base, j_charger=j, j_battery=j)
        traj = _trajectory(model, config, times, spec.tol)
        j_tag = _fmt(j / delta)
        return [
            ",".join((model, j_tag, _fmt(t), _fmt(e), _fmt(p / scale)))
            for t, e, p in zip(traj.times, traj.energy, traj.power)
        ]
    blocks = _map_ordered(one, points, spec.threads)
    rows = [row for block in blocks for row in block]
    return ["model", "j_over_delta", "t", "E_over_omega", "P_over_Gomega"], rows


def _run_qsd(spec: ExperimentSpec) -> tuple[list[str], list[str]]:
    template = spec.noise
    horizon = spec.horizon
    if horizon is None:
        induced = template.g**2 / abs(template.delta)
        horizon = 2.5 * math.pi / induced
    times = _time_grid(spec, horizon)

    def one(gamma):
        return solve_calF(replace(template, gamma_noise=gamma), times, spec.tol)

    solutions = _map_ordered(one, spec.gammas, spec.threads)
    multi = len(spec.gammas) > 1
    columns = ["t", "Re_F", "Im_F", "E_over_omega"]
    if multi:
        columns = ["gamma_over_delta"] + columns
    rows = []
    for gamma, fsol in zip(spec.gammas, solutions):
        tag = _fmt(gamma / template.delta)
        for t, f, e in zip(fsol.times, fsol.calf, fsol.energy):
            cells = (_fmt(t), _fmt(f.real), _fmt(f.imag), _fmt(e / template.omega))
            rows.append(",".join((tag,) + cells if multi else cells))
    return columns, rows


def _sweep_points(spec: ExperimentSpec):
    """Deterministic grid order: model, then exchange/ratio/j, then size."""
    base = spec.system
    models = spec.models or _default_models(spec.mode)
    if spec.mode == "sweep-n":
        n_min, n_max = spec.n_range
        for model in models:
            for exchange in spec.exchanges:
                for n in range(n_min, n_max + 1):
                    yield model, n, base.m_battery, exchange
    elif spec.mode == "sweep-nm":
        for model in models:
            for ratio in spec.ratios:
                for m in range(1, spec.m_max + 1):
                    yield model, ratio * m, m, "sweet"
    elif spec.mode == "sweep-j":
        for model in models:
            for j in spec.j_values:
                yield model, base.n_charger, base.m_battery, j


def sweep_metrics(spec: ExperimentSpec) -> list[SweepRow]:
    """Charging metrics over the sweep grid, in deterministic grid order."""
    base = spec.system
    g_c = base.g_charger[0]
    g_b = base.g_battery[0]
    delta = base.detuning
    induced = g_c * g_b / (base.omega - base.omega_m)

    def one(point):
        model, n, m, exchange = point
        if exchange == "zero":
            j = 0.0
        elif exchange == "sweet":
            j = -induced
        else:
            j = float(exchange)
        config = SystemConfig(
            n_charger=n,
            m_battery=m,
            omega=base.omega,
            omega_m=base.omega_m,
            g_charger=g_c,
            g_battery=g_b,
            j_charger=j,
            j_battery=j,
        )
        horizon = spec.horizon
        if horizon is None:
            horizon = charging_horizon(n, m, induced, factor=spec.horizon_factor)
        times = _time_grid(spec, horizon)
        traj = _trajectory(model, config, times, spec.tol)
        metrics = charging_metrics(traj)
        scale = abs(induced)
        return SweepRow(
            model=model,
            n_charger=n,
            m_battery=m,
            j_over_delta=j / delta,
            e_max=metrics.e_max,
            tau=metrics.tau * scale,
            p_tau=metrics.p_tau / scale,
            p_max=metrics.p_max / scale,
        )

    return _map_ordered(one, _sweep_points(spec), spec.threads)


def _run_sweep(spec: ExperimentSpec) -> tuple[list[str], list[str]]:
    rows = [
        ",".join(
            (
                row.model,
                str(row.n_charger),
                str(row.m_battery),
                _fmt(row.j_over_delta),
                _fmt(row.e_max),
                _fmt(row.tau),
                _fmt(row.p_tau),
                _fmt(row.p_max),
            )
        )
        for row in sweep_metrics(spec)
    ]
    columns = [
        "model",
        "N",
        "M",
        "J_over_delta",
        "E_max_over_omega",
        "tau_G",
        "P_tau_over_Gomega",
        "P_max_over_Gomega",
    ]
    return columns, rows


def run_experiment(spec: ExperimentSpec, out: str | None = None) -> str:
    """Run the experiment and return the CSV text (writing it if out is set)."""
    if spec.mode in ("simulate-full", "simulate-effective", "collective", "analytic"):
        columns, rows = _run_trajectory_mode(spec)
    elif spec.mode == "compare":
        columns, rows = _run_compare(spec)
    elif spec.mode == "qsd":
        columns, rows = _run_qsd(spec)
    elif spec.mode in ("sweep-n", "sweep-nm", "sweep-j"):
        columns, rows = _run_sweep(spec)
    else:
        raise ConfigError(f"unknown mode {spec.mode!r}")

    buffer = io.StringIO()
    buffer.write(f"# magnon-battery {TOOL_VERSION}\n")
    buffer.write(f"# mode = {spec.mode}\n")
    buffer.write("# config:\n")
    for line in spec.text.rstrip("\n").splitlines():
        buffer.write(f"# {line}\n" if line else "#\n")
    buffer.write(",".join(columns) + "\n")
    for row in rows:
        buffer.write(row + "\n")
    text = buffer.getvalue()

    target = out if out is not None else spec.out
    if target is not None:
        with open(target, "w", encoding="utf-8", newline="\n") as handle:
            handle.write(text)
    return text
