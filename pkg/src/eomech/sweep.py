"""Parameter sweeps, figure presets and CSV/gnuplot output."""

from __future__ import annotations

import csv
import io
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .dynamics import build_model
from .metrics import NO_CLONING, teleportation_report
from .params import PARAM_KEYS, PhysicalParams, derive_couplings, default_params
from .spectra import FilterSpec, output_cm

FILTER_KEYS = ("epsilon", "omega_c_norm", "omega_w_norm")
NORMALIZED_KEYS = ("delta_c_norm", "delta_w_norm")
SWEEP_KEYS = PARAM_KEYS + FILTER_KEYS + NORMALIZED_KEYS

DEFAULT_FILTER = {"epsilon": 20.0, "omega_c_norm": -1.0, "omega_w_norm": 1.0}

PRESET_EPSILONS = (1.0, 5.0, 20.0, 100.0)
PRESET_OMEGA_C = (-2.0, 0.0, 201)
PRESET_METRIC = {"fig2": "e_n", "fig3": "f_fock", "fig4": "f_sup"}

RESULT_COLUMNS = ("stable", "max_real_eig", "e_n", "eta_minus", "f_fock", "f_sup",
                  "beats_no_cloning_fock", "beats_no_cloning_sup", "quad_error")


@dataclass(frozen=True)
class Axis:
    name: str
    values: tuple[float, ...]
    label: str = field(default="", compare=False)

    def __post_init__(self):
        if self.name not in SWEEP_KEYS:
            raise ValueError(f"unknown sweep key {self.name!r}")
        if len(self.values) < 2:
            raise ValueError(f"axis {self.name!r} needs at least 2 points")

    @classmethod
    def linear(cls, name, start, stop, count):
        return cls(name, tuple(float(v) for v in np.linspace(start, stop, int(count))),
                   f"linear {start!r}:{stop!r}:{int(count)}")

    @classmethod
    def log(cls, name, start, stop, count):
        if start <= 0 or stop <= 0:
            raise ValueError("log axis bounds must be positive")
        return cls(name, tuple(float(v) for v in np.geomspace(start, stop, int(count))),
                   f"log {start!r}:{stop!r}:{int(count)}")

    @classmethod
    def parse(cls, text: str) -> "Axis":
        """``name=start:stop:count[:log]`` or ``name=v1,v2,...``."""
        if "=" not in text:
            raise ValueError(f"axis must look like name=start:stop:count, got {text!r}")
        name, _, spec = (s.strip() for s in text.partition("="))
        if ":" in spec:
            parts = spec.split(":")
            if len(parts) not in (3, 4) or (len(parts) == 4 and parts[3] not in ("lin", "log")):
                raise ValueError(f"bad axis range {spec!r}")
            start, stop, count = float(parts[0]), float(parts[1]), int(parts[2])
            if count < 2:
                raise ValueError(f"axis {name!r} needs count >= 2")
            if len(parts) == 4 and parts[3] == "log":
                return cls.log(name, start, stop, count)
            return cls.linear(name, start, stop, count)
        return cls(name, tuple(float(v) for v in spec.split(",")))


@dataclass(frozen=True)
class SweepSpec:
    axes: tuple[Axis, ...] = ()
    preset: str = "none"
    overrides: dict = field(default_factory=dict)
    flip_detunings: bool = False
    workers: int | None = None

    def grid(self) -> list[tuple[float, ...]]:
        """Grid points, first axis slowest."""
        if not self.axes:
            return [()]
        mesh = np.meshgrid(*[np.array(a.values) for a in self.axes], indexing="ij")
        return [tuple(float(m.flat[i]) for m in mesh) for i in range(mesh[0].size)]


@dataclass
class SweepRow:
    values: tuple[float, ...]
    stable: bool
    max_real_eig: float
    e_n: float | None = None
    eta_minus: float | None = None
    f_fock: float | None = None
    f_sup: float | None = None
    beats_no_cloning_fock: bool | None = None
    beats_no_cloning_sup: bool | None = None
    quad_error: float | None = None


def resolve_settings(base: PhysicalParams, overrides: dict,
                     flip_detunings: bool = False) -> tuple[PhysicalParams, dict]:
    """Apply ``key=value`` overrides to the physical parameters and filter settings."""
    phys = {}
    filt = dict(DEFAULT_FILTER)
    for key, value in overrides.items():
        value = float(value)
        if key in PARAM_KEYS:
            phys[key] = value
        elif key in FILTER_KEYS:
            filt[key] = value
        elif key == "delta_c_norm":
            phys["delta_c"] = value * phys.get("omega_m", base.omega_m)
        elif key == "delta_w_norm":
            phys["delta_w"] = value * phys.get("omega_m", base.omega_m)
        else:
            raise ValueError(f"unknown key {key!r}")
    p = base.replace(**phys)
    if flip_detunings:
        p = p.replace(delta_c=-p.delta_c, delta_w=-p.delta_w)
    return p, filt


def evaluate_point(p: PhysicalParams, filt: dict, values=()) -> SweepRow:
    """Full pipeline at one parameter point."""
    model = build_model(derive_couplings(p), p)
    if not model.stable:
        return SweepRow(tuple(values), False, model.max_real_eig)
    filters = FilterSpec.from_normalized(filt["epsilon"], filt["omega_c_norm"],
                                         filt["omega_w_norm"], p.omega_m)
    cov = output_cm(model, filters)
    rep = teleportation_report(cov.v_reduced, cov.B, cov.B_prime, cov.C)
    return SweepRow(tuple(values), True, model.max_real_eig, rep.e_n, rep.eta_minus,
                    rep.fidelity_fock, rep.fidelity_superposition,
                    rep.beats_no_cloning_fock, rep.beats_no_cloning_superposition,
                    cov.quad_error)


def _point_task(args):
    base, overrides, flip, names, values = args
    merged = dict(overrides)
    merged.update(zip(names, values))
    p, filt = resolve_settings(base, merged, flip)
    return evaluate_point(p, filt, values)


def run_sweep(base: PhysicalParams, spec: SweepSpec):
    """Yield one :class:`SweepRow` per grid point, in grid order.

    Unstable points yield rows with ``stable=False`` and no metrics.
    """
    # validate every point's parameters before dispatching any work
    names = tuple(a.name for a in spec.axes)
    grid = spec.grid()
    resolve_settings(base, spec.overrides, spec.flip_detunings)
    tasks = [(base, dict(spec.overrides), spec.flip_detunings, names, v) for v in grid]
    workers = spec.workers or os.cpu_count() or 1
    if workers <= 1 or len(tasks) == 1:
        yield from map(_point_task, tasks)
        return
    chunk = max(1, len(tasks) // (4 * workers))
    with ProcessPoolExecutor(max_workers=workers) as pool:
        yield from pool.map(_point_task, tasks, chunksize=chunk)


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    return format(float(v), ".17g")


def header_block(base: PhysicalParams, spec: SweepSpec) -> list[str]:
    p, filt = resolve_settings(base, spec.overrides, spec.flip_detunings)
    lines = [f"eomech {__version__} sweep", f"preset = {spec.preset}",
             f"flip_detunings = {str(spec.flip_detunings).lower()}"]
    lines += [f"{k} = {v!r}" for k, v in p.as_dict().items()]
    lines += [f"{k} = {v!r}" for k, v in filt.items()]
    for a in spec.axes:
        lines.append(f"sweep {a.name} = " + (a.label or ",".join(_fmt(v) for v in a.values)))
    return lines


def write_csv(rows, base: PhysicalParams, spec: SweepSpec, out) -> list[SweepRow]:
    """Write rows as CSV (17 significant digits) after a ``#`` config block.

    ``out`` is a path or a text stream; returns the rows written.
    """
    names = [a.name for a in spec.axes]
    written = []
    own = not hasattr(out, "write")
    fh = open(out, "w", newline="", encoding="utf-8") if own else out
    try:
        writer = csv.writer(fh)
        for line in header_block(base, spec):
            fh.write(f"# {line}\r\n")
        writer.writerow(names + list(RESULT_COLUMNS))
        for row in rows:
            writer.writerow([_fmt(v) for v in row.values] +
                            [_fmt(getattr(row, c)) for c in RESULT_COLUMNS])
            written.append(row)
    finally:
        if own:
            fh.close()
    return written


def sweep_to_csv_text(base: PhysicalParams, spec: SweepSpec) -> str:
    buf = io.StringIO(newline="")
    write_csv(run_sweep(base, spec), base, spec, buf)
    return buf.getvalue()


def preset_spec(preset: str, flip_detunings=False, workers=None,
                epsilons=PRESET_EPSILONS, omega_c=PRESET_OMEGA_C) -> SweepSpec:
    if preset not in PRESET_METRIC:
        raise ValueError(f"unknown preset {preset!r}")
    axes = (Axis("epsilon", tuple(float(e) for e in epsilons)),
            Axis.linear("omega_c_norm", *omega_c))
    return SweepSpec(axes, preset, {"omega_w_norm": 1.0}, flip_detunings, workers)


def summarize(rows: list[SweepRow], preset: str) -> dict:
    """Peak location/value of the preset's quantity for each epsilon."""
    metric = PRESET_METRIC[preset]
    by_eps: dict[float, list[SweepRow]] = {}
    for r in rows:
        by_eps.setdefault(r.values[0], []).append(r)
    per_eps = []
    for eps, group in by_eps.items():
        stable = [r for r in group if r.stable]
        entry = {"epsilon": eps, "stable_points": len(stable), "points": len(group)}
        if stable:
            best = max(stable, key=lambda r: getattr(r, metric))
            entry.update(peak_omega_c_norm=best.values[1], peak_value=getattr(best, metric))
            if metric != "e_n":
                entry["beats_no_cloning"] = entry["peak_value"] > NO_CLONING
        per_eps.append(entry)
    out = {"preset": preset, "metric": metric, "per_epsilon": per_eps}
    peaks = [e.get("peak_value") for e in per_eps]
    complete = all(v is not None for v in peaks)
    if metric == "e_n":
        out["peak_increasing_with_epsilon"] = complete and all(
            a < b for a, b in zip(peaks, peaks[1:]))
    else:
        out["largest_epsilon_beats_no_cloning"] = bool(
            per_eps and per_eps[-1].get("beats_no_cloning", False))
    return out


def format_summary(summary: dict, base: PhysicalParams, spec: SweepSpec) -> str:
    p, _ = resolve_settings(base, spec.overrides, spec.flip_detunings)
    lines = [f"preset {summary['preset']}: peak {summary['metric']} vs omega_c/omega_m",
             f"bath_temperature = {p.bath_temperature!r} K",
             f"delta_c/omega_m = {p.delta_c / p.omega_m:g}, "
             f"delta_w/omega_m = {p.delta_w / p.omega_m:g}, omega_w_center/omega_m = 1", ""]
    for e in summary["per_epsilon"]:
        if "peak_value" not in e:
            lines.append(f"epsilon = {e['epsilon']:g}: no stable points")
            continue
        line = (f"epsilon = {e['epsilon']:g}: peak {summary['metric']} = {e['peak_value']:.6g} "
                f"at omega_c/omega_m = {e['peak_omega_c_norm']:.4g}")
        if "beats_no_cloning" in e:
            line += f", beats no-cloning (2/3): {str(e['beats_no_cloning']).lower()}"
        lines.append(line)
    lines.append("")
    if "peak_increasing_with_epsilon" in summary:
        lines.append("peak E_N strictly increasing with epsilon: "
                     + str(summary["peak_increasing_with_epsilon"]).lower())
    else:
        lines.append("peak F > 2/3 for largest epsilon: "
                     + str(summary["largest_epsilon_beats_no_cloning"]).lower())
    return "\n".join(lines) + "\n"


def write_gnuplot(rows: list[SweepRow], preset: str, path) -> None:
    """One data block per epsilon (blank-line separated; use ``index`` in gnuplot)."""
    metric = PRESET_METRIC[preset]
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"# omega_c_norm {metric}  (blocks: epsilon)\n")
        last = None
        for r in rows:
            if r.values[0] != last:
                if last is not None:
                    fh.write("\n\n")
                fh.write(f"# epsilon = {r.values[0]:g}\n")
                last = r.values[0]
            v = getattr(r, metric)
            fh.write(f"{_fmt(r.values[1])} {'nan' if v is None else _fmt(v)}\n")


def reproduce(preset: str, out_dir, base: PhysicalParams | None = None,
              flip_detunings=False, workers=None, epsilons=PRESET_EPSILONS,
              omega_c=PRESET_OMEGA_C) -> dict:
    """Run a figure preset and write ``<preset>.csv``, ``.dat`` and ``_summary.txt``."""
    base = base or default_params()
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    spec = preset_spec(preset, flip_detunings, workers, epsilons, omega_c)
    rows = write_csv(run_sweep(base, spec), base, spec, out_dir / f"{preset}.csv")
    write_gnuplot(rows, preset, out_dir / f"{preset}.dat")
    summary = summarize(rows, preset)
    (out_dir / f"{preset}_summary.txt").write_text(format_summary(summary, base, spec),
                                                   encoding="utf-8")
    return summary
