# src/hexdetect/__main__.py
"""
Punto de entrada del paquete `hexdetect`.

Subcomandos:
- derive    : cantidades derivadas (P1, P2, alpha..delta, c, d, tau0) por combinación.
- exact     : tablas conjuntas (T, Z), probabilidades exactas de error y cotas de falsos positivos.
- simulate  : Monte Carlo de S1..S5 / N1..N5 (+ tasa de falsos negativos) por combinación.
- sweep     : barrido del umbral C de la ventana de Occam con números aleatorios comunes.
- record    : simula experimentos controlados de calibración y escribe el fichero de registros.
- calibrate : estima (p1, p2, pc, pw) a partir de un fichero de registros.

Resumen:
1) CLI + YAML → config efectiva (CLI > YAML > settings).
2) Cada combinación de parámetros (producto cartesiano de las listas) produce sus filas, que se
   añaden al CSV en cuanto están listas.
3) Persistencia en reports/<comando>_<fecha>_runNN (o --out) + run_manifest.json + log.txt.

Códigos de salida: 0 ok, 1 uso incorrecto, 2 error de datos (`HexDetectError`).
"""

from __future__ import annotations

import argparse
import itertools
import json
import logging
import subprocess
import sys
from collections.abc import Sequence
from datetime import UTC, datetime
from pathlib import Path
from shutil import copyfile
from typing import Any, NoReturn
from uuid import uuid4

import pandas as pd

try:
    import yaml  # type: ignore[import-untyped]
except Exception:  # pragma: no cover
    yaml = None

from . import settings
from .calibration import calibrate
from .const import (
    BOUNDS_COLUMNS,
    CALIBRATION_COLUMNS,
    DERIVE_COLUMNS,
    ERROR_COLUMNS,
    FLOAT_FORMAT,
    JOINT_COLUMNS,
    JOINT_MODEL_LABELS,
    PARAM_COLUMNS,
    SCHEMA_VERSION,
    SIMULATE_COLUMNS,
    SWEEP_COLUMNS,
)
from .errors import ConfigurationError, HexDetectError, InestimableParameterError
from .hexgrid import MAX_DEGREE, GridTopology, NodeId, build_grid
from .metrics import summary_row, summarize, sweep_rows, trace_frame
from .probability import (
    SensorParams,
    derive_params,
    exact_false_detect,
    exact_miss,
    false_positive_bounds,
    joint_tz,
)
from .records import read_records, write_records
from .simulator import (
    DetectorSettings,
    SimulationConfig,
    simulate_calibration_runs,
    simulate_replications,
    threshold_sweep,
)

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2

# --------------------------------------------------------------------------------------
# Logging
# --------------------------------------------------------------------------------------

_FMT = "%(asctime)s | %(levelname)s | %(name)s | %(message)s"
_DATEFMT = "%Y-%m-%d %H:%M:%S"


def _setup_logging(loglevel: str = "INFO", logfile: Path | None = None) -> logging.Handler | None:
    """Configura el root logger; si hay `logfile`, añade y devuelve su FileHandler."""
    level = getattr(logging, loglevel.upper(), logging.INFO)
    logging.basicConfig(level=level, format=_FMT, datefmt=_DATEFMT)
    logging.getLogger().setLevel(level)
    if logfile is None:
        return None
    try:
        fh = logging.FileHandler(logfile, encoding="utf-8")
        fh.setLevel(level)
        fh.setFormatter(logging.Formatter(fmt=_FMT, datefmt=_DATEFMT))
        logging.getLogger().addHandler(fh)
        return fh
    except Exception as e:  # pragma: no cover
        logger.warning(f"No se pudo crear FileHandler: {e}")
        return None


# --------------------------------------------------------------------------------------
# Argumentos
# --------------------------------------------------------------------------------------


class _ArgumentParser(argparse.ArgumentParser):
    """argparse sale con 2 ante un error de uso; aquí el 2 es para errores de datos."""

    def error(self, message: str) -> NoReturn:
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _float_list(text: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError as e:
        raise argparse.ArgumentTypeError(f"lista de números inválida: {text!r}") from e


def _grid(text: str) -> tuple[int, int]:
    try:
        r, c = text.lower().split("x")
        return int(r), int(c)
    except ValueError as e:
        msg = f"rejilla inválida {text!r}; usa RxC (p.ej. 32x32)"
        raise argparse.ArgumentTypeError(msg) from e


def _node(text: str) -> NodeId:
    try:
        r, c = text.split(",")
        return NodeId(int(r), int(c))
    except ValueError as e:
        raise argparse.ArgumentTypeError(f"nodo inválido {text!r}; usa fila,columna") from e


def _build_parser() -> argparse.ArgumentParser:
    common = _ArgumentParser(add_help=False)
    common.add_argument("--config", type=str, default=None, help="Ruta a YAML")
    for name in PARAM_COLUMNS:
        common.add_argument(
            f"--{name}", type=_float_list, default=None, help=f"{name} (lista separada por comas)"
        )
    common.add_argument("--grid", type=_grid, default=None, help="Rejilla RxC (default 32x32)")
    common.add_argument("--out", type=str, default=None, help="Directorio de salida")
    common.add_argument("--loglevel", default=None, help="Nivel log (DEBUG|INFO|WARNING|ERROR)")

    sim = _ArgumentParser(add_help=False)
    sim.add_argument("--reps", type=int, help=f"Réplicas (default={settings.REPS})")
    sim.add_argument("--seed", type=int, help=f"Semilla (default={settings.SEED})")
    sim.add_argument("--scenario", choices=["normal", "event", "both"], default=None)
    sim.add_argument("--occam-c", type=float, help=f"Umbral C (default={settings.OCCAM_C})")
    sim.add_argument("--p-norm", type=float, help="Prior de M0 para puntuar también BMA")
    sim.add_argument("--event-node", type=_node, help="Evento fijo en fila,columna")
    sim.add_argument(
        "--interior-only", action="store_true", default=None, help="Sólo modelos interiores"
    )
    sim.add_argument("--workers", type=int, help=f"Procesos (default={settings.WORKERS})")
    sim.add_argument("--logevery", type=int, help=f"Log cada N réplicas ({settings.LOG_EVERY})")

    p = _ArgumentParser(prog="hexdetect", description="hexdetect – detección de eventos en WSN")
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("derive", parents=[common], help="Parámetros derivados")
    sub.add_parser("exact", parents=[common], help="Tablas y probabilidades exactas")
    s = sub.add_parser("simulate", parents=[common, sim], help="Monte Carlo S1..S5 / N1..N5")
    s.add_argument("--trace", action="store_true", help="Detalle por réplica en trace.csv")
    w = sub.add_parser("sweep", parents=[common, sim], help="Barrido del umbral C de Occam")
    w.add_argument("--sweep-c", type=_float_list, help="Umbrales C (default 0.6,0.7,0.8,0.9)")
    r = sub.add_parser("record", parents=[common], help="Simula runs de calibración")
    r.add_argument("--normal-runs", type=int, default=None, help="Runs con ROI normal (50)")
    r.add_argument("--event-runs", type=int, default=None, help="Runs con evento (50)")
    r.add_argument("--seed", type=int, help=f"Semilla (default={settings.SEED})")
    r.add_argument("--event-node", type=_node, help="Evento fijo en fila,columna")
    c = sub.add_parser("calibrate", parents=[common], help="Estima parámetros desde registros")
    c.add_argument("runs", type=str, help="Fichero de registros (formato hexdetect-runs)")
    return p


# --------------------------------------------------------------------------------------
# Config (YAML + CLI)
# --------------------------------------------------------------------------------------


def _load_yaml_config(path: str | Path | None) -> dict[str, Any]:
    if path is None:
        return {}
    if yaml is None:
        raise RuntimeError("PyYAML no está instalado. Ejecuta: pip install pyyaml")
    p = Path(path)
    if not p.exists():
        raise ConfigurationError(f"No existe el archivo de configuración: {p}")
    try:
        with p.open("r", encoding="utf-8") as fh:
            cfg = yaml.safe_load(fh) or {}
    except yaml.YAMLError as e:
        raise ConfigurationError(f"YAML inválido en {p}: {e}") from e
    if not isinstance(cfg, dict):
        raise ConfigurationError("El YAML debe tener un objeto dict en la raíz.")
    return cfg


def _section(ycfg: dict[str, Any], name: str) -> dict[str, Any]:
    value = ycfg.get(name) or {}
    if not isinstance(value, dict):
        raise ConfigurationError(f"La sección '{name}' del YAML debe ser un dict")
    return value


def _coerce(value: Any, kind: type, field: str) -> Any:
    try:
        return kind(value)
    except (TypeError, ValueError) as e:
        raise ConfigurationError(f"{field}={value!r} no es un {kind.__name__} válido") from e


def _coerce_bool(x: Any, default: bool) -> bool:
    if x is None:
        return default
    return str(x).strip().lower() in {"1", "true", "yes", "y", "on"}


def _coerce_list(value: Any, field: str) -> list[float]:
    values = value if isinstance(value, list) else [value]
    if not values:
        raise ConfigurationError(f"{field} no puede ser una lista vacía")
    return [_coerce(v, float, field) for v in values]


def _coerce_node(value: Any, field: str) -> NodeId | None:
    if value is None:
        return None
    if isinstance(value, NodeId):
        return value
    try:
        r, c = value.split(",") if isinstance(value, str) else value
        return NodeId(int(r), int(c))
    except (TypeError, ValueError) as e:
        raise ConfigurationError(f"{field}={value!r}; usa 'fila,columna'") from e


def _pick(cli_value: Any, section: dict[str, Any], key: str, default: Any) -> Any:
    """CLI > YAML > default."""
    if cli_value is not None:
        return cli_value
    return section.get(key, default)


def _resolve_config(args: argparse.Namespace) -> dict[str, Any]:
    # 1) YAML (si existe)
    config_path = args.config
    if config_path is None:
        default_cfg = Path("configs/example.yaml")
        config_path = str(default_cfg) if default_cfg.exists() else None
    ycfg = _load_yaml_config(config_path)

    yparams = _section(ycfg, "params")
    ygrid = _section(ycfg, "grid")
    ysim = _section(ycfg, "simulation")
    ydet = _section(ycfg, "detectors")
    yrec = _section(ycfg, "record")
    yrep = _section(ycfg, "reports")

    # 2) Parámetros: CLI > YAML (sin default: deben venir de algún sitio)
    params: dict[str, list[float]] = {}
    for name in PARAM_COLUMNS:
        raw = getattr(args, name, None)
        if raw is None and name in yparams:
            raw = _coerce_list(yparams[name], f"params.{name}")
        params[name] = raw or []

    # 3) Rejilla
    if args.grid is not None:
        rows, cols = args.grid
    else:
        rows = _coerce(ygrid.get("rows", settings.ROWS), int, "grid.rows")
        cols = _coerce(ygrid.get("cols", settings.COLS), int, "grid.cols")
    interior_only = _coerce_bool(
        _pick(getattr(args, "interior_only", None), ygrid, "interior_only", None),
        settings.INTERIOR_ONLY,
    )

    # 4) Simulación y detectores
    simulation = {
        "replications": _coerce(
            _pick(getattr(args, "reps", None), ysim, "replications", settings.REPS),
            int,
            "simulation.replications",
        ),
        "seed": _coerce(
            _pick(getattr(args, "seed", None), ysim, "seed", settings.SEED), int, "seed"
        ),
        "scenario": str(
            _pick(getattr(args, "scenario", None), ysim, "scenario", settings.SCENARIO)
        ),
        "workers": _coerce(
            _pick(getattr(args, "workers", None), ysim, "workers", settings.WORKERS), int, "workers"
        ),
        "log_every": _coerce(
            _pick(getattr(args, "logevery", None), ysim, "log_every", settings.LOG_EVERY),
            int,
            "log_every",
        ),
        "event_node": _coerce_node(
            _pick(getattr(args, "event_node", None), ysim, "event_node", None), "event_node"
        ),
    }
    p_norm = _pick(getattr(args, "p_norm", None), ydet, "p_norm", None)
    sweep_c = getattr(args, "sweep_c", None)
    if sweep_c is None:
        sweep_c = _coerce_list(ydet.get("sweep_c", settings.SWEEP_C), "detectors.sweep_c")
    detectors = {
        "occam_c": _coerce(
            _pick(getattr(args, "occam_c", None), ydet, "occam_c", settings.OCCAM_C),
            float,
            "occam_c",
        ),
        "sweep_c": sweep_c,
        "p_norm": None if p_norm is None else _coerce(p_norm, float, "p_norm"),
    }
    record = {
        "normal_runs": _coerce(
            _pick(getattr(args, "normal_runs", None), yrec, "normal_runs", 50), int, "normal_runs"
        ),
        "event_runs": _coerce(
            _pick(getattr(args, "event_runs", None), yrec, "event_runs", 50), int, "event_runs"
        ),
    }

    # 5) Flags
    loglevel = args.loglevel or str(ycfg.get("loglevel", settings.LOGLEVEL))
    output_dir = args.out
    reports_root = yrep.get("output_dir")

    return {
        "command": args.command,
        "params": params,
        "grid": {"rows": rows, "cols": cols, "interior_only": interior_only},
        "simulation": simulation,
        "detectors": detectors,
        "record": record,
        "flags": {"loglevel": loglevel, "trace": bool(getattr(args, "trace", False))},
        "reports": {"out": output_dir, "output_dir": reports_root},
        "raw_yaml": ycfg,
        "config_path": config_path,
    }


def _param_combinations(cfg: dict[str, Any]) -> list[SensorParams]:
    """Producto cartesiano (orden p1, p2, pc, pw) validando cada combinación."""
    lists = [cfg["params"][name] for name in PARAM_COLUMNS]
    for name, values in zip(PARAM_COLUMNS, lists, strict=True):
        if not values:
            raise ConfigurationError(f"Falta el parámetro {name} (--{name} o params.{name})")
    return [SensorParams(*combo) for combo in itertools.product(*lists)]


def _topology(cfg: dict[str, Any]) -> GridTopology:
    return build_grid(cfg["grid"]["rows"], cfg["grid"]["cols"])


def _simulation_config(
    cfg: dict[str, Any], params: SensorParams, topology: GridTopology
) -> SimulationConfig:
    sim, det = cfg["simulation"], cfg["detectors"]
    feasible = frozenset(topology.interior_nodes()) if cfg["grid"]["interior_only"] else None
    if feasible is not None and not feasible:
        raise ConfigurationError("--interior-only en una rejilla sin nodos interiores")
    return SimulationConfig(
        params=params,
        topology=topology,
        scenario=sim["scenario"],
        replications=sim["replications"],
        seed=sim["seed"],
        detectors=DetectorSettings(
            occam_c=det["occam_c"], p_norm=det["p_norm"], feasible=feasible
        ),
        event_node=sim["event_node"],
        workers=sim["workers"],
        log_every=sim["log_every"],
    )


# --------------------------------------------------------------------------------------
# Escritura incremental de CSV
# --------------------------------------------------------------------------------------


class _CsvAppender:
    """Escribe la cabecera con el primer bloque y añade (flush) cada bloque siguiente."""

    def __init__(self, path: Path, columns: list[str]) -> None:
        self.path = path
        self.columns = columns
        self._started = False

    def write(self, rows: list[dict[str, Any]] | pd.DataFrame) -> None:
        df = rows if isinstance(rows, pd.DataFrame) else pd.DataFrame(rows)
        df = df.reindex(columns=self.columns)
        df.to_csv(
            self.path,
            mode="a" if self._started else "w",
            header=not self._started,
            index=False,
            float_format=FLOAT_FORMAT,
            lineterminator="\n",
        )
        self._started = True


# --------------------------------------------------------------------------------------
# Subcomandos
# --------------------------------------------------------------------------------------


def cmd_derive(cfg: dict[str, Any], out_dir: Path) -> dict[str, Path]:
    path = out_dir / "derive.csv"
    rows = []
    for params in _param_combinations(cfg):
        dp = derive_params(params)
        rows.append({**dp.as_row(), "schema_version": SCHEMA_VERSION})
    writer = _CsvAppender(path, DERIVE_COLUMNS)
    writer.write(rows)
    df = pd.DataFrame(rows, columns=DERIVE_COLUMNS)
    print(df.drop(columns=["schema_version"]).to_string(index=False, float_format="{:.6f}".format))
    logger.info("Parámetros derivados exportados a %s (%s filas)", path, len(rows))
    return {"derive_csv": path}


def cmd_exact(cfg: dict[str, Any], out_dir: Path) -> dict[str, Path]:
    topology = _topology(cfg)
    outputs = {
        "joint_csv": out_dir / "joint_tables.csv",
        "errors_csv": out_dir / "error_probabilities.csv",
        "bounds_csv": out_dir / "false_positive_bounds.csv",
    }
    joint = _CsvAppender(outputs["joint_csv"], JOINT_COLUMNS)
    errors = _CsvAppender(outputs["errors_csv"], ERROR_COLUMNS)
    bounds = _CsvAppender(outputs["bounds_csv"], BOUNDS_COLUMNS)

    for params in _param_combinations(cfg):
        dp = derive_params(params)
        base = {**params.as_dict()}
        joint_rows, error_rows = [], []
        for k in range(MAX_DEGREE + 1):
            for model in ("null", "event"):
                table = joint_tz(model, k, dp)
                for (t, z), prob in sorted(table.entries.items()):
                    q = None
                    if dp.has_q:
                        assert dp.c is not None and dp.d is not None
                        q = dp.c * z + t - dp.d * k
                    joint_rows.append(
                        {**base, "model": JOINT_MODEL_LABELS[model], "k": k, "t": t, "z": z}
                        | {"probability": prob, "q": q}
                    )
            error_rows.append(
                {
                    **base,
                    "k": k,
                    "false_detect": exact_false_detect(k, dp),
                    "miss": exact_miss(k, dp),
                }
            )
        lower, upper = false_positive_bounds(topology, dp)
        for row in (*joint_rows, *error_rows):
            row["schema_version"] = SCHEMA_VERSION
        joint.write(joint_rows)
        errors.write(error_rows)
        bounds.write(
            [
                {
                    **base,
                    "rows": topology.rows,
                    "cols": topology.cols,
                    "lower": lower,
                    "upper": upper,
                    "schema_version": SCHEMA_VERSION,
                }
            ]
        )
        print(
            f"p={tuple(base.values())}  cota falsos positivos {topology.rows}x{topology.cols}: "
            f"[{lower:.6f}, {upper:.6f}]"
        )
    logger.info("Tablas exactas exportadas a %s", out_dir)
    return outputs


def cmd_simulate(cfg: dict[str, Any], out_dir: Path) -> dict[str, Path]:
    topology = _topology(cfg)
    outputs = {"simulate_csv": out_dir / "simulate.csv"}
    writer = _CsvAppender(outputs["simulate_csv"], SIMULATE_COLUMNS)
    tracer = None
    if cfg["flags"]["trace"]:
        outputs["trace_csv"] = out_dir / "trace.csv"

    for params in _param_combinations(cfg):
        config = _simulation_config(cfg, params, topology)
        outcomes = simulate_replications(config)
        row = summary_row(summarize(outcomes))
        writer.write([row])
        if "trace_csv" in outputs:
            frame = trace_frame(outcomes)
            for name in reversed(PARAM_COLUMNS):
                frame.insert(0, name, getattr(params, name))
            if tracer is None:
                tracer = _CsvAppender(outputs["trace_csv"], list(frame.columns))
            tracer.write(frame)
        print(
            "p=({p1}, {p2}, {pc}, {pw})  S1={S1:.4f} S2={S2:.4f} S3={S3:.4f} N3={N3:.3f} "
            "S4={S4:.4f} N4={N4:.3f} S5={S5:.4f} N5={N5:.3f} fnr={fnr:.4f}".format(**row)
        )
    return outputs


def cmd_sweep(cfg: dict[str, Any], out_dir: Path) -> dict[str, Path]:
    topology = _topology(cfg)
    thresholds = cfg["detectors"]["sweep_c"]
    outputs = {"sweep_csv": out_dir / "sweep.csv"}
    writer = _CsvAppender(outputs["sweep_csv"], SWEEP_COLUMNS)
    for params in _param_combinations(cfg):
        config = _simulation_config(cfg, params, topology)
        points = threshold_sweep(config, thresholds)
        writer.write(sweep_rows(config, points))
        for pt in points:
            print(
                f"p={tuple(params.as_dict().values())}  C={pt.C:.2f}  "
                f"éxito={pt.success.value:.4f}  búsqueda={pt.search.value:.3f}"
            )
    return outputs


def cmd_record(cfg: dict[str, Any], out_dir: Path) -> dict[str, Path]:
    combos = _param_combinations(cfg)
    if len(combos) != 1:
        raise ConfigurationError("record necesita una única combinación de parámetros")
    params = combos[0]
    topology = _topology(cfg)
    runs = simulate_calibration_runs(
        params,
        topology,
        n_normal=cfg["record"]["normal_runs"],
        n_event=cfg["record"]["event_runs"],
        seed=cfg["simulation"]["seed"],
        event_node=cfg["simulation"]["event_node"],
    )
    path = write_records(out_dir / "runs.txt", topology, runs, params)
    print(f"Registros de calibración escritos en {path} ({len(runs)} runs)")
    return {"runs_file": path}


def cmd_calibrate(cfg: dict[str, Any], out_dir: Path, runs_path: str) -> dict[str, Path]:
    records = read_records(runs_path)
    report = calibrate(records.runs, records.topology)
    missing = report.missing()
    if missing:
        raise InestimableParameterError(
            f"No estimables con estos runs: {', '.join(missing)} "
            f"({report.n_normal} normales, {report.n_event} de evento)"
        )
    truth = records.params
    rows = []
    for row in report.as_rows():
        name = str(row["parameter"])
        row["true_value"] = truth.get("pw" if name == "pw_normal" else name)
        row["schema_version"] = SCHEMA_VERSION
        rows.append(row)
    path = out_dir / "calibration.csv"
    _CsvAppender(path, CALIBRATION_COLUMNS).write(rows)
    print(f"Estimaciones ({report.n_normal} runs normales, {report.n_event} de evento):")
    for row in rows:
        print(f"  {row['parameter']:<10s} {row['estimate']:.6f} ± {row['se']:.6f}")
    return {"calibration_csv": path}


# --------------------------------------------------------------------------------------
# Run manifest (trazabilidad)
# --------------------------------------------------------------------------------------


def _git_commit_hash() -> str | None:
    try:
        out = subprocess.check_output(
            ["git", "rev-parse", "--short", "HEAD"], stderr=subprocess.STDOUT
        )
        return out.decode("utf-8").strip()
    except Exception:
        return None


def _jsonable(cfg: dict[str, Any]) -> dict[str, Any]:
    sim = {**cfg["simulation"]}
    if sim["event_node"] is not None:
        sim["event_node"] = str(sim["event_node"])
    return {
        "command": cfg["command"],
        "params": cfg["params"],
        "grid": cfg["grid"],
        "simulation": sim,
        "detectors": cfg["detectors"],
        "record": cfg["record"],
        "flags": cfg["flags"],
    }


def _write_run_manifest(
    reports_dir: Path, run_id: str, cfg_effective: dict[str, Any], outputs: dict[str, Path]
) -> None:
    manifest: dict[str, Any] = {}
    manifest["id"] = run_id
    manifest["timestamp_utc"] = datetime.now(tz=UTC).isoformat()
    manifest["git_commit"] = _git_commit_hash()
    manifest["schema_version"] = SCHEMA_VERSION
    manifest["config_path"] = cfg_effective.get("config_path")
    manifest["config_effective"] = _jsonable(cfg_effective)
    cfg_copy_name = None
    if cfg_effective.get("config_path"):
        try:
            src = Path(cfg_effective["config_path"])
            if src.exists():
                cfg_copy_name = "config_used.yaml"
                copyfile(src, reports_dir / cfg_copy_name)
        except Exception as e:  # pragma: no cover
            logger.warning(f"No se pudo copiar el YAML al report: {e}")
    manifest["config_yaml_copy"] = cfg_copy_name
    manifest["outputs"] = {
        **{k: str(v) for k, v in outputs.items()},
        "log_file": str(reports_dir / "log.txt"),
    }
    try:
        out_path = reports_dir / "run_manifest.json"
        with out_path.open("w", encoding="utf-8") as fh:
            json.dump(manifest, fh, indent=2, ensure_ascii=False)
        logger.info("Run manifest escrito en %s", out_path)
    except Exception as e:  # pragma: no cover
        logger.warning(f"No se pudo escribir run_manifest.json: {e}")


# --------------------------------------------------------------------------------------
# Programa principal
# --------------------------------------------------------------------------------------


def _report_dir(cfg: dict[str, Any]) -> Path:
    if cfg["reports"]["out"]:
        out = Path(cfg["reports"]["out"])
        out.mkdir(parents=True, exist_ok=True)
        return out
    root = cfg["reports"]["output_dir"]
    base = Path(root) if root else None
    return settings.generate_report_dir(cfg["command"], base_dir=base)


def main(argv: Sequence[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    _setup_logging(loglevel=args.loglevel or settings.LOGLEVEL)
    file_handler: logging.Handler | None = None
    try:
        cfg = _resolve_config(args)
        _setup_logging(loglevel=cfg["flags"]["loglevel"])

        run_id = str(uuid4())
        reports_dir = _report_dir(cfg)
        file_handler = _setup_logging(
            loglevel=cfg["flags"]["loglevel"], logfile=reports_dir / "log.txt"
        )
        logger.info(
            "Run config: command=%s run_id=%s grid=%sx%s params=%s config_path=%s out=%s",
            cfg["command"],
            run_id,
            cfg["grid"]["rows"],
            cfg["grid"]["cols"],
            cfg["params"],
            cfg["config_path"],
            reports_dir,
        )

        if args.command == "derive":
            outputs = cmd_derive(cfg, reports_dir)
        elif args.command == "exact":
            outputs = cmd_exact(cfg, reports_dir)
        elif args.command == "simulate":
            outputs = cmd_simulate(cfg, reports_dir)
        elif args.command == "sweep":
            outputs = cmd_sweep(cfg, reports_dir)
        elif args.command == "record":
            outputs = cmd_record(cfg, reports_dir)
        else:
            outputs = cmd_calibrate(cfg, reports_dir, args.runs)

        _write_run_manifest(reports_dir, run_id, cfg, outputs)
        print(f"\n[hexdetect] run_id: {run_id} | salidas en {reports_dir}")
        return EXIT_OK
    except HexDetectError as e:
        logger.error("%s: %s", type(e).__name__, e)
        print(f"hexdetect: error: {e}", file=sys.stderr)
        return EXIT_DATA
    except OSError as e:
        logger.error("Error de E/S: %s", e)
        print(f"hexdetect: error: {e}", file=sys.stderr)
        return EXIT_DATA
    except Exception:
        logger.exception("Error inesperado durante el comando %s", args.command)
        raise
    finally:
        if file_handler is not None:
            logging.getLogger().removeHandler(file_handler)
            file_handler.close()


if __name__ == "__main__":
    sys.exit(main())
