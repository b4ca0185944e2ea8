"""Experiment configuration, orchestration and table emission.

Configs are YAML mappings with a fixed schema (unknown keys are errors):

    true_state:
      spherical: [r, theta, phi]      # or  cartesian: [x, y, z]
    povm: xyz                          # or  {effects: [{v: .., w: [..]}, ..]}
    n_grid: [10, 100, 1000]            # or  {min: 10, max: 1e6, points: 20,
                                       #      spacing: log}
    sequences: 10000
    seed: 1234567
    losses: [hs, if]
    outputs: [empirical, approx, crb, nstar]

Result tables are CSVs whose header comment block echoes the full config,
seed and tool version, so every figure can be regenerated from its own
data file.  Missing values are written as the literal string NA.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import yaml

from . import __version__
from .bloch import (
    BlochVector,
    Povm,
    PovmEffect,
    SphericalCoords,
    bloch_from_spherical,
    validate_povm,
    xyz_povm,
)
from .boundary import (
    ApproxLossInputs,
    expected_hs_mixed,
    expected_hs_pure,
    expected_if_mixed,
    expected_if_pure,
)
from .exceptions import ConfigError, DivergentInformationError
from .fisher import cramer_rao_bound, fisher_matrix, n_star, n_star_xyz
from .losses import hesse_hs, hesse_if
from .montecarlo import LOSS_KINDS, SimulationPlan, empirical_expected_loss

#: States at least this close to the unit sphere use the pure-state formulas.
PURE_REGIME_THRESHOLD = 1e-9

DEFAULT_SEQUENCES = 10_000
DEFAULT_SEED = 1234567
OUTPUT_KINDS = ("empirical", "approx", "crb", "nstar")

CURVE_COLUMNS = ("loss_kind", "N", "empirical_mean", "empirical_stderr",
                 "approx", "crb", "n_star")


def default_n_grid() -> tuple[int, ...]:
    """Twenty log-spaced trial counts from 1e1 to 1e6 (deduplicated ints)."""
    raw = np.geomspace(10, 1_000_000, 20)
    grid = sorted({int(round(x)) for x in raw})
    return tuple(grid)


@dataclass(frozen=True)
class ExperimentConfig:
    """Validated experiment description; see the module docstring for the
    file schema."""

    true_state: BlochVector
    povm: Povm
    n_grid: tuple[int, ...]
    sequences: int = DEFAULT_SEQUENCES
    seed: int = DEFAULT_SEED
    losses: tuple[str, ...] = LOSS_KINDS
    outputs: tuple[str, ...] = OUTPUT_KINDS
    povm_name: str = "custom"

    def __post_init__(self):
        if not self.true_state.physical():
            raise ConfigError(f"|true_state| = {self.true_state.norm:.17g} exceeds 1")
        report = validate_povm(self.povm)
        if not report.ok:
            raise ConfigError("invalid POVM: " + "; ".join(report.failures))
        if any(kind not in LOSS_KINDS for kind in self.losses) or not self.losses:
            raise ConfigError(f"losses must be a nonempty subset of {LOSS_KINDS}")
        if any(out not in OUTPUT_KINDS for out in self.outputs) or not self.outputs:
            raise ConfigError(f"outputs must be a nonempty subset of {OUTPUT_KINDS}")

    @property
    def regime(self) -> str:
        return "pure" if self.true_state.norm >= 1.0 - PURE_REGIME_THRESHOLD else "mixed"


@dataclass(frozen=True)
class LossCurveRecord:
    """One row of a result table; None marks an undefined quantity."""

    loss_kind: str
    n: float
    empirical_mean: float | None
    empirical_stderr: float | None
    approx_value: float | None
    crb_value: float | None
    n_star: float | None


# ---------------------------------------------------------------------------
# config (de)serialization


def state_to_dict(s: BlochVector) -> dict:
    return {"cartesian": [s.s1, s.s2, s.s3]}


def state_from_dict(node) -> BlochVector:
    if not isinstance(node, dict):
        raise ConfigError("true_state must be a mapping with 'spherical' or 'cartesian'")
    unknown = set(node) - {"spherical", "cartesian"}
    if unknown:
        raise ConfigError(f"unknown true_state keys: {sorted(unknown)}")
    if ("spherical" in node) == ("cartesian" in node):
        raise ConfigError("true_state needs exactly one of 'spherical' or 'cartesian'")
    if "spherical" in node:
        vals = _float_list(node["spherical"], 3, "true_state.spherical")
        return bloch_from_spherical(SphericalCoords(*vals))
    vals = _float_list(node["cartesian"], 3, "true_state.cartesian")
    return BlochVector(*vals)


def povm_to_dict(povm: Povm) -> dict:
    return {
        "effects": [{"v": eff.v, "w": list(eff.w)} for eff in povm.effects],
        "labels": list(povm.labels),
    }


def povm_from_dict(node) -> tuple[Povm, str]:
    if isinstance(node, str):
        if node.lower() != "xyz":
            raise ConfigError(f"unknown named POVM {node!r}; only 'xyz' is built in")
        return xyz_povm(), "xyz"
    if not isinstance(node, dict):
        raise ConfigError("povm must be 'xyz' or a mapping with an 'effects' list")
    unknown = set(node) - {"effects", "labels"}
    if unknown:
        raise ConfigError(f"unknown povm keys: {sorted(unknown)}")
    effects = []
    for i, raw in enumerate(node.get("effects", [])):
        if not isinstance(raw, dict) or set(raw) - {"v", "w"} or "v" not in raw or "w" not in raw:
            raise ConfigError(f"povm.effects[{i}] must be a mapping with keys 'v' and 'w'")
        effects.append(PovmEffect(float(raw["v"]), tuple(_float_list(raw["w"], 3, "w"))))
    if not effects:
        raise ConfigError("povm.effects must not be empty")
    labels = tuple(str(x) for x in node.get("labels", ())) or ()
    return Povm(tuple(effects), labels), "custom"


def _float_list(values, length: int, name: str) -> list[float]:
    try:
        out = [float(v) for v in values]
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{name} must be a list of {length} numbers") from exc
    if len(out) != length:
        raise ConfigError(f"{name} must have exactly {length} entries")
    return out


def _n_grid_from_node(node) -> tuple[int, ...]:
    if isinstance(node, dict):
        unknown = set(node) - {"min", "max", "points", "spacing"}
        if unknown:
            raise ConfigError(f"unknown n_grid keys: {sorted(unknown)}")
        lo = float(node.get("min", 10))
        hi = float(node.get("max", 1_000_000))
        pts = int(node.get("points", 20))
        spacing = str(node.get("spacing", "log"))
        if spacing not in ("log", "linear"):
            raise ConfigError("n_grid.spacing must be 'log' or 'linear'")
        if lo < 1 or hi <= lo or pts < 2:
            raise ConfigError("n_grid requires 1 <= min < max and points >= 2")
        raw = np.geomspace(lo, hi, pts) if spacing == "log" else np.linspace(lo, hi, pts)
        return tuple(sorted({int(round(x)) for x in raw}))
    try:
        grid = tuple(int(v) for v in node)
    except (TypeError, ValueError) as exc:
        raise ConfigError("n_grid must be a list of integers or a range mapping") from exc
    return grid


_TOP_KEYS = {"true_state", "povm", "n_grid", "sequences", "seed", "losses", "outputs"}


def config_from_dict(data) -> ExperimentConfig:
    if not isinstance(data, dict):
        raise ConfigError("configuration root must be a mapping")
    unknown = set(data) - _TOP_KEYS
    if unknown:
        raise ConfigError(f"unknown configuration keys: {sorted(unknown)}")
    if "true_state" not in data:
        raise ConfigError("configuration needs a true_state")
    state = state_from_dict(data["true_state"])
    povm, povm_name = povm_from_dict(data.get("povm", "xyz"))
    n_grid = _n_grid_from_node(data["n_grid"]) if "n_grid" in data else default_n_grid()
    losses = tuple(str(x) for x in data.get("losses", LOSS_KINDS))
    outputs = tuple(str(x) for x in data.get("outputs", OUTPUT_KINDS))
    return ExperimentConfig(
        true_state=state,
        povm=povm,
        n_grid=n_grid,
        sequences=int(data.get("sequences", DEFAULT_SEQUENCES)),
        seed=int(data.get("seed", DEFAULT_SEED)),
        losses=losses,
        outputs=outputs,
        povm_name=povm_name,
    )


def config_to_dict(config: ExperimentConfig) -> dict:
    return {
        "true_state": state_to_dict(config.true_state),
        "povm": "xyz" if config.povm_name == "xyz" else povm_to_dict(config.povm),
        "n_grid": list(config.n_grid),
        "sequences": config.sequences,
        "seed": config.seed,
        "losses": list(config.losses),
        "outputs": list(config.outputs),
    }


def load_config(path) -> ExperimentConfig:
    with open(path, "r", encoding="utf-8") as fh:
        data = yaml.safe_load(fh)
    return config_from_dict(data)


def save_config(config: ExperimentConfig, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        yaml.safe_dump(config_to_dict(config), fh, sort_keys=False)


# ---------------------------------------------------------------------------
# value formatting


def display_floor(value: float) -> int | None:
    """Round down for display, forgiving float round-off just below an
    integer (relative 1e-12 plus absolute 1e-9 grace).  None means the
    value is infinite."""
    if math.isinf(value):
        return None
    return int(math.floor(value * (1.0 + 1e-12) + 1e-9))


def _fmt(value: float | None) -> str:
    if value is None or (isinstance(value, float) and math.isnan(value)):
        return "NA"
    return repr(float(value))


def _parse(text: str) -> float | None:
    return None if text == "NA" else float(text)


# ---------------------------------------------------------------------------
# curve computation


def _threshold_or_none(config: ExperimentConfig) -> float | None:
    if config.true_state.norm == 0.0:
        return None
    try:
        if config.povm_name == "xyz":
            return n_star_xyz(config.true_state)
        return n_star(config.povm, config.true_state)
    except DivergentInformationError:
        return None


def run_curves(config: ExperimentConfig, *, workers: int = 1) -> list[LossCurveRecord]:
    """Compute the requested series for every (loss, N) cell of the config."""
    s = config.true_state
    pure = config.regime == "pure"
    want = set(config.outputs)

    nstar_value = _threshold_or_none(config) if "nstar" in want else None

    fish = None
    if want & {"approx", "crb"}:
        try:
            fish = fisher_matrix(config.povm, s)
        except DivergentInformationError:
            fish = None  # e.g. pure state aligned with a projective axis

    empirical = None
    if "empirical" in want:
        plan = SimulationPlan(
            povm=config.povm,
            s_true=s,
            n_grid=config.n_grid,
            sequences=config.sequences,
            seed=config.seed,
            losses=config.losses,
        )
        empirical = empirical_expected_loss(plan, workers=workers)

    records: list[LossCurveRecord] = []
    for kind in config.losses:
        hess = None
        if "crb" in want and fish is not None:
            if kind == "hs":
                hess = hesse_hs()
            elif not pure:
                hess = hesse_if(s)  # diverges for pure states: crb stays NA
        for i, n in enumerate(config.n_grid):
            emp_mean = emp_err = None
            if empirical is not None:
                est = empirical[kind][i]
                emp_mean, emp_err = est.mean, est.std_error
            approx = None
            if "approx" in want and fish is not None and s.norm > 0.0:
                if pure:
                    approx = (expected_hs_pure(s, fish, n) if kind == "hs"
                              else expected_if_pure(s, fish, n))
                else:
                    inputs = ApproxLossInputs(s, fish, n)
                    approx = (expected_hs_mixed(inputs) if kind == "hs"
                              else expected_if_mixed(inputs))
            crb = None
            if hess is not None:
                crb = cramer_rao_bound(hess, fish, n)
            records.append(LossCurveRecord(kind, float(n), emp_mean, emp_err,
                                           approx, crb, nstar_value))
    return records


# ---------------------------------------------------------------------------
# file emission


def _metadata_lines(config: ExperimentConfig, extra: dict | None = None) -> list[str]:
    echo = yaml.safe_dump(config_to_dict(config), sort_keys=False,
                          default_flow_style=True, width=10 ** 9).strip()
    lines = [
        f"tool: tomoloss {__version__}",
        f"config: {echo}",
        f"seed: {config.seed}",
        f"regime: {config.regime}",
        f"pure_regime_threshold: {PURE_REGIME_THRESHOLD!r}",
    ]
    for key, val in (extra or {}).items():
        lines.append(f"{key}: {val}")
    return lines


def write_curves_csv(path, records: list[LossCurveRecord],
                     config: ExperimentConfig, extra: dict | None = None) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        for line in _metadata_lines(config, extra):
            fh.write(f"# {line}\n")
        writer = csv.writer(fh)
        writer.writerow(CURVE_COLUMNS)
        for rec in records:
            nstar = "inf" if rec.n_star is not None and math.isinf(rec.n_star) else _fmt(rec.n_star)
            writer.writerow([
                rec.loss_kind, _fmt(rec.n), _fmt(rec.empirical_mean),
                _fmt(rec.empirical_stderr), _fmt(rec.approx_value),
                _fmt(rec.crb_value), nstar,
            ])


def read_curves_csv(path) -> tuple[list[LossCurveRecord], list[str]]:
    """Parse a curves CSV back into records plus its metadata lines."""
    meta: list[str] = []
    body = io.StringIO()
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            if line.startswith("#"):
                meta.append(line[1:].strip())
            else:
                body.write(line)
    body.seek(0)
    reader = csv.reader(body)
    header = next(reader)
    if tuple(header) != CURVE_COLUMNS:
        raise ConfigError(f"unexpected curve columns: {header}")
    records = []
    for row in reader:
        if not row:
            continue
        nstar = math.inf if row[6] == "inf" else _parse(row[6])
        records.append(LossCurveRecord(
            row[0], float(row[1]), _parse(row[2]), _parse(row[3]),
            _parse(row[4]), _parse(row[5]), nstar,
        ))
    return records, meta


def write_series_dat(path, records: list[LossCurveRecord], loss_kind: str,
                     config: ExperimentConfig) -> None:
    """Column-oriented data file (N, empirical, stderr, approx, crb) for one
    loss, consumable by any plotting tool; the threshold rides in the header."""
    rows = [r for r in records if r.loss_kind == loss_kind]
    with open(path, "w", encoding="utf-8") as fh:
        for line in _metadata_lines(config):
            fh.write(f"# {line}\n")
        nstar = rows[0].n_star if rows else None
        nstar_txt = "NA" if nstar is None else ("inf" if math.isinf(nstar) else repr(nstar))
        fh.write(f"# n_star: {nstar_txt}\n")
        fh.write("# columns: N empirical_mean empirical_stderr approx crb\n")
        for rec in rows:
            fh.write(" ".join([_fmt(rec.n), _fmt(rec.empirical_mean),
                               _fmt(rec.empirical_stderr), _fmt(rec.approx_value),
                               _fmt(rec.crb_value)]) + "\n")


# ---------------------------------------------------------------------------
# commands (the CLI is a thin argparse wrapper around these)


def cmd_nstar(state: BlochVector, povm: Povm | None = None, *, out=print) -> dict:
    """Report the boundary threshold for one state; floor only for display."""
    povm = povm if povm is not None else xyz_povm()
    value = n_star(povm, state)
    floored = display_floor(value)
    out(f"state_cartesian: {state.s1!r} {state.s2!r} {state.s3!r}")
    if floored is None:
        out("n_star: infinity")
        out("n_star_floored: infinity")
    else:
        out(f"n_star: {value!r}")
        out(f"n_star_floored: {floored}")
    return {"n_star": value, "floored": floored}


def cmd_curves(config: ExperimentConfig, out_dir, *, dry_run: bool = False,
               workers: int = 1, out=print) -> list[LossCurveRecord]:
    """Compute and write the loss-curve tables for one configuration.

    Emits curves_<loss>.csv and series_<loss>.dat per requested loss plus
    a combined curves_all.csv.  With dry_run the plan is validated and
    printed and nothing is written or sampled.
    """
    if dry_run:
        out("dry run: no sampling performed")
        out(f"state_cartesian: {config.true_state.as_array().tolist()}")
        out(f"regime: {config.regime}")
        out(f"povm: {config.povm_name} ({len(config.povm)} outcomes)")
        out(f"n_grid: {list(config.n_grid)}")
        out(f"sequences: {config.sequences}")
        out(f"seed: {config.seed}")
        out(f"losses: {list(config.losses)}")
        out(f"outputs: {list(config.outputs)}")
        return []
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    records = run_curves(config, workers=workers)
    write_curves_csv(out_dir / "curves_all.csv", records, config)
    for kind in config.losses:
        subset = [r for r in records if r.loss_kind == kind]
        write_curves_csv(out_dir / f"curves_{kind}.csv", subset, config)
        write_series_dat(out_dir / f"series_{kind}.dat", records, kind, config)
    out(f"wrote {len(records)} records to {out_dir}")
    return records


_QUARTER_PI = math.pi / 4.0

#: Canonical true states behind each published panel, in spherical form.
FIGURE_PANELS: dict[str, tuple[tuple[float, float, float], str]] = {
    "EHS-1": ((0.99, _QUARTER_PI, _QUARTER_PI), "hs"),
    "EHS-2": ((1.0, _QUARTER_PI, _QUARTER_PI), "hs"),
    "EIF-1": ((0.9, 0.0, 0.0), "if"),
    "EIF-2": ((0.9, _QUARTER_PI, _QUARTER_PI), "if"),
    "EIF-3": ((0.99, 0.0, 0.0), "if"),
    "EIF-4": ((0.99, _QUARTER_PI, _QUARTER_PI), "if"),
    "EIF-pure": ((1.0, _QUARTER_PI, _QUARTER_PI), "if"),
}

FIGURE_IDS = tuple(FIGURE_PANELS) + ("TypN",)


def figure_config(figure_id: str, *, sequences: int = DEFAULT_SEQUENCES,
                  seed: int = DEFAULT_SEED) -> ExperimentConfig:
    """Canonical configuration reproducing one loss-curve panel."""
    if figure_id not in FIGURE_PANELS:
        raise ConfigError(
            f"unknown figure id {figure_id!r}; valid ids: {', '.join(FIGURE_IDS)}"
        )
    (r, theta, phi), loss = FIGURE_PANELS[figure_id]
    return ExperimentConfig(
        true_state=bloch_from_spherical(SphericalCoords(r, theta, phi)),
        povm=xyz_povm(),
        n_grid=default_n_grid(),
        sequences=sequences,
        seed=seed,
        losses=(loss,),
        outputs=OUTPUT_KINDS,
        povm_name="xyz",
    )


def write_threshold_table(path, radii=None) -> None:
    """Radius dependency of the boundary threshold for the two state
    families: aligned with a measurement axis and equidistant from all
    three axes.  Columns: r, n_star_axis, n_star_diagonal."""
    if radii is None:
        radii = np.linspace(0.0, 0.999, 200)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"# tool: tomoloss {__version__}\n")
        fh.write("# families: axis=(r,0,0) spherical, diagonal=(r,pi/4,pi/4) spherical\n")
        fh.write("# columns: r n_star_axis n_star_diagonal\n")
        for r in radii:
            r = float(r)
            axis = 6.0 * (1.0 + r) / (1.0 - r)
            cross = (5.0 / 8.0) * r ** 2 / (1.0 - r) ** 2
            diag = 6.0 * ((1.0 + r) / (1.0 - r) + cross)
            fh.write(f"{r!r} {axis!r} {diag!r}\n")


def cmd_reproduce(figure_id: str, out_dir, *, sequences: int | None = None,
                  seed: int | None = None, dry_run: bool = False,
                  workers: int = 1, out=print) -> None:
    """Run the canonical configuration of one figure and emit its data."""
    out_dir = Path(out_dir)
    if figure_id == "TypN":
        if dry_run:
            out("dry run: TypN writes the threshold-vs-radius table")
            return
        out_dir.mkdir(parents=True, exist_ok=True)
        path = out_dir / "typn.csv"
        write_threshold_table(path)
        out(f"wrote {path}")
        return
    config = figure_config(
        figure_id,
        sequences=sequences if sequences is not None else DEFAULT_SEQUENCES,
        seed=seed if seed is not None else DEFAULT_SEED,
    )
    cmd_curves(config, out_dir / figure_id.lower(), dry_run=dry_run,
               workers=workers, out=out)


def cmd_validate_povm(povm: Povm, *, out=print) -> bool:
    """Print the three POVM checks; returns overall validity."""
    report = validate_povm(povm)
    out(f"complete: {'pass' if report.complete else 'FAIL'}")
    out(f"effects_psd: {'pass' if report.effects_psd else 'FAIL'}")
    out(f"informationally_complete: {'pass' if report.informationally_complete else 'FAIL'}")
    for failure in report.failures:
        out(f"failure: {failure}")
    return report.ok
