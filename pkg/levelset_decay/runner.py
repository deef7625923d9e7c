"""Dispatch a RunConfig to the library and render its artifacts."""
import logging
import math
import os
from concurrent.futures import ThreadPoolExecutor
from typing import Any, Dict, List, Optional, Tuple, Union

import click  # type: ignore
import numpy as np

from .config import RunConfig
from .counterexamples import (
    DoublingParams,
    equivalence_backward_constant,
    equivalence_forward,
    verify_equivalence,
    witness_beta_gt_one,
    witness_beta_one,
)
from .envelope import build_grid, check_admissible, check_dominance, extremal_envelope
from .errors import ConfigError, LevelsetDecayError, ParameterError
from .growth import IDENTITY, LOGLINEAR, growth_from_config, verify_axioms
from .lemmas import compute_bound
from .levelsets import WeakLebesgue
from .models import DecayBound, LemmaParams, PowerEnvelope, StretchedExp, Vanishes
from .pde import (
    PdeSolution,
    analyze_solution,
    build_source,
    problem_from_config,
    read_solution,
    solve_picard,
    source_quasi_norm,
    write_solution,
)
from .utilities import dumps, format_number, log_grid, to_csv

logger = logging.getLogger(__name__)

THREADS_ENV = "LEVELSET_DECAY_THREADS"
ENVELOPE_HEADER = ["level", "envelope", "bound", "ratio"]

Artifact = Union[str, bytes]


def sweep_workers(n_sets: int) -> int:
    raw = os.environ.get(THREADS_ENV)
    if raw is None or raw == "":
        limit = os.cpu_count() or 1
    else:
        try:
            limit = int(raw)
        except ValueError:
            raise ConfigError(f"{THREADS_ENV} must be a positive integer, got '{raw}'")
        if limit < 1:
            raise ConfigError(f"{THREADS_ENV} must be a positive integer, got '{raw}'")
    return max(1, min(limit, n_sets))


def default_k_max(b: DecayBound, k0: float) -> float:
    if isinstance(b, Vanishes):
        return 2.0 * b.level
    if isinstance(b, StretchedExp):
        return b.k0 + 8.0 * b.tau
    if isinstance(b, PowerEnvelope) and k0 > 0:
        return k0 * 2.0 ** 20
    return k0 + 1e6


def _lemma_params(params: Dict[str, Any]) -> LemmaParams:
    return LemmaParams.from_mapping(params)


def _bound_for(params: Dict[str, Any], p: LemmaParams) -> DecayBound:
    return compute_bound(
        p,
        tau_hint=params.get("tau_hint"),
        theta_tilde=params.get("theta_tilde"),
        eps0=params.get("eps0"),
        strict=not params.get("permissive", False),
    )


def run_envelope(params: Dict[str, Any]) -> Dict[str, Any]:
    """Bound, extremal envelope and their comparison for one parameter set."""
    p = _lemma_params(params)
    b = _bound_for(params, p)
    k_max = params.get("k_max") or default_k_max(b, p.k0)
    grid = build_grid(p, k_max, params.get("n_geometric", 64), bound_hint=b)
    prof = extremal_envelope(p, grid)
    dominance = check_dominance(b, prof, p.gf, slack=params.get("slack", 0.05), params=p)
    admissible = check_admissible(prof, p)
    return {
        "params": p.to_dict(),
        "bound": b.to_dict(),
        "k_max": k_max,
        "levels": len(grid),
        "dominance": dominance.to_dict(),
        "admissibility": admissible.to_dict(),
        "rows": dominance.rows(),
    }


class DecayRun:
    def __init__(self, config: RunConfig):
        self.config = config
        self.command = config.command
        self.params = config.params
        self.message: list = []
        self.valid = False
        self.exit_code = 0
        self.artifact: Optional[Artifact] = None
        self.side_artifacts: Dict[str, Artifact] = {}

    def create_err_msg(self, err_type: str, err_msg: str) -> dict:
        self.valid = False
        return {
            "command": self.command,
            "valid": False,
            "error_type": err_type,
            "error_message": err_msg,
        }

    @property
    def fmt(self) -> str:
        return self.config.format

    def gcheck(self) -> Tuple[dict, str]:
        gf = growth_from_config(self.params.get("growth"))
        report = verify_axioms(
            gf, self.params["t_max"], self.params["sample_count"], self.params["tol"]
        )
        lines = [f"growth {report.name} (mu = {report.mu:g}) on (0, {report.t_max:g}]"]
        for name, check in report.checks.items():
            state = "ok" if check.passed else "FAIL"
            lines.append(f"  {name:<20} {state:<5} worst violation {check.worst_violation:.3g}")
        lines.append("all growth assumptions hold" if report.passed else "growth assumptions fail")
        return report.to_dict(), "\n".join(lines)

    def bound(self) -> Tuple[dict, str]:
        p = _lemma_params(self.params)
        b = _bound_for(self.params, p)
        payload = {"params": p.to_dict(), "bound": b.to_dict()}
        fields = ", ".join(f"{k} = {format_number(v)}" for k, v in b.to_dict().items() if k not in ("tag", "notes"))
        lines = [f"{p.variant.value} variant: {b.tag}({fields})"] + [f"  note: {n}" for n in b.notes]
        return payload, "\n".join(lines)

    def envelope(self) -> Tuple[dict, str]:
        if "sweep" in self.params:
            sets = self.params["sweep"]
            workers = sweep_workers(len(sets))
            logger.debug("sweep of %d sets on %d threads", len(sets), workers)
            with ThreadPoolExecutor(max_workers=workers) as pool:
                results = list(pool.map(run_envelope, sets))
            rows = [(i,) + tuple(row) for i, res in enumerate(results) for row in res["rows"]]
            csv_text = to_csv(["set"] + ENVELOPE_HEADER, rows)
            payload = {"sets": [{k: v for k, v in r.items() if k != "rows"} for r in results]}
            return payload, csv_text
        result = run_envelope(self.params)
        csv_text = to_csv(ENVELOPE_HEADER, result["rows"])
        result["rows"] = [list(r) for r in result["rows"]]
        return result, csv_text

    def equivalence(self) -> Tuple[dict, str]:
        dp = DoublingParams(
            c_tilde=self.params["c_tilde"],
            alpha=self.params["alpha"],
            beta=self.params["beta"],
            k0=self.params["k0"],
            gf=growth_from_config(self.params.get("growth")),
            phi0=self.params["phi0"],
        )
        strict = not self.params["permissive"]
        c = self.params["c"]
        if c is None:
            c = equivalence_backward_constant(dp, strict=strict)
        report = verify_equivalence(
            dp,
            c,
            n_pairs=self.params["n_pairs"],
            seed=self.params["seed"],
            per_octave=self.params["per_octave"],
            octaves=self.params["octaves"],
            strict=strict,
        )
        payload = {
            "doubling": dp.to_dict(),
            "forward_c_tilde": equivalence_forward(c),
            "seed": self.params["seed"],
            "report": report.to_dict(),
        }
        return payload, report.to_text()

    def counterexample(self) -> Tuple[dict, str]:
        if self.params["witness"] == "beta1":
            ks = log_grid(1.0, 1e6, self.params["k_count"]) if self.params["k_count"] > 1 else [1.0]
            report = witness_beta_one(ks)
        else:
            report = witness_beta_gt_one(self.params["alpha"], refine=self.params["refine"])
        return report.to_dict(), report.to_text()

    def _solve(self):
        prob = problem_from_config(self.params)
        f = build_source(prob)
        sol = solve_picard(
            prob,
            picard_tol=self.params["picard_tol"],
            linear_tol=self.params["linear_tol"],
            max_picard=self.params["max_picard"],
            omega=self.params["omega"],
            f=f,
        )
        return prob, f, sol

    def pde_solve(self) -> Tuple[dict, Artifact]:
        prob, f, sol = self._solve()
        payload: Dict[str, Any] = {"problem": prob.to_dict(), "solution": sol.to_dict()}
        if prob.source.kind == "radial":
            payload["source_quasi_norm"] = source_quasi_norm(prob, f)
        if self.fmt == "binary":
            write_solution(self.config.output_path, sol.field, prob.n)
            return payload, b""
        return payload, dumps(payload)

    def pde_analyze(self) -> Tuple[dict, str]:
        if self.params.get("solution"):
            path = self.params["solution"]
            values = read_solution(path)
            params = dict(self.params)
            params.update({"n": values.ndim, "resolution": values.shape[0]})
            try:
                prob = problem_from_config(params)
            except ParameterError as err:
                raise ConfigError(f"{path}: stored solution does not describe a valid problem ({err})")
            sol = PdeSolution(values, 0, math.nan, math.nan)
        else:
            prob, _, sol = self._solve()
        report = analyze_solution(sol, prob)
        payload = report.to_dict()
        payload["problem"] = prob.to_dict()
        rows: List[tuple] = []
        if report.profile is not None:
            bound = None
            measured = report.measured
            if isinstance(measured, WeakLebesgue) and measured.quasi_norm is not None:
                gf = LOGLINEAR if measured.composed_with_g else IDENTITY
                g = np.asarray(gf.g(report.profile.levels), dtype=float)
                with np.errstate(divide="ignore"):
                    bound = measured.quasi_norm * np.power(g, -measured.exponent)
            rows = report.profile.to_rows(bound)
        payload["profile"] = [list(r) for r in rows]
        return payload, to_csv(["level", "measure", "bound"], rows)

    def run(self) -> int:
        handlers = {
            "gcheck": self.gcheck,
            "bound": self.bound,
            "envelope": self.envelope,
            "equivalence": self.equivalence,
            "counterexample": self.counterexample,
            "pde-solve": self.pde_solve,
            "pde-analyze": self.pde_analyze,
        }
        message: dict = {"command": self.command}
        try:
            if self.command not in handlers:
                raise ConfigError(f"unknown command '{self.command}'")
            payload, rendered = handlers[self.command]()
            self.valid = True
            message.update({"valid": True, "result": payload})
            if self.fmt == "json":
                self.artifact = dumps(payload)
            elif self.fmt == "binary":
                self.artifact = None
            else:
                self.artifact = rendered
            if self.command == "pde-analyze" and self.fmt == "csv" and self.config.output_path:
                self.side_artifacts[self.config.output_path + ".report.json"] = dumps(
                    {k: v for k, v in payload.items() if k != "profile"}
                )
            self.exit_code = 0
        except LevelsetDecayError as e:
            message.update(self.create_err_msg(type(e).__name__, str(e)))
            self.exit_code = e.exit_code
        except FileNotFoundError as e:
            message.update(self.create_err_msg("FileNotFoundError", str(e)))
            self.exit_code = 2
        except OSError as e:
            message.update(self.create_err_msg("OSError", str(e)))
            self.exit_code = 1
        except (ValueError, ArithmeticError) as e:
            message.update(self.create_err_msg(type(e).__name__, str(e)))
            self.exit_code = 1
        self.message.append(message)
        return self.exit_code


def _write(path: str, content: Artifact) -> None:
    mode = "wb" if isinstance(content, bytes) else "w"
    with open(path, mode) as fh:
        fh.write(content)


def execute(cfg: RunConfig) -> int:
    """Run the command, write its artifacts and return the process exit code."""
    run = DecayRun(cfg)
    code = run.run()
    if code != 0:
        click.echo(dumps(run.message[-1]), err=True)
        return code
    if run.artifact is not None:
        if cfg.output_path:
            _write(cfg.output_path, run.artifact)
        else:
            text = run.artifact.decode() if isinstance(run.artifact, bytes) else run.artifact
            click.echo(text.rstrip("\n"))
    for path, content in run.side_artifacts.items():
        _write(path, content)
    return code
