import json
import logging
import sys

import click  # type: ignore

from . import __version__
from .config import parse_config
from .errors import ConfigError
from .runner import execute

logger = logging.getLogger(__name__)


def _run(command: str, config, output, fmt, overrides, sweep=None):
    try:
        cfg = parse_config(command, config, overrides, output, fmt, sweep)
    except ConfigError as e:
        click.echo(
            json.dumps(
                {
                    "command": command,
                    "valid": False,
                    "error_type": type(e).__name__,
                    "error_message": str(e),
                },
                indent=4,
            ),
            err=True,
        )
        sys.exit(e.exit_code)
    sys.exit(execute(cfg))


def common_options(func):
    func = click.option("--format", "fmt", default=None, help="Output format (json, text, csv or binary).")(func)
    func = click.option("--output", "-o", default=None, help="Write the artifact to this path.")(func)
    func = click.option(
        "--config", default=None, help="JSON config (local filepath or remote URL)."
    )(func)
    return func


def lemma_options(func):
    for name, help_text in reversed(
        [
            ("--variant", "classical, power, first or second."),
            ("--c", "Recursion constant c."),
            ("--alpha", "Exponent alpha."),
            ("--beta", "Exponent beta."),
            ("--theta", "Weight exponent theta."),
            ("--k0", "Initial level k0."),
            ("--phi0", "Initial value phi(k0)."),
            ("--growth", "Growth function kind (identity, loglinear, power, ln2-power, square)."),
            ("--p", "Exponent of the power growth function."),
            ("--tau-hint", "Scale tau for the first generalization with beta = 1."),
            ("--theta-tilde", "Auxiliary exponent for the second generalization with beta = 1."),
            ("--eps0", "Auxiliary epsilon for the second generalization with beta < 1."),
        ]
    ):
        kind = str if name in ("--variant", "--growth") else float
        func = click.option(name, type=kind, default=None, help=help_text)(func)
    func = click.option(
        "--permissive", is_flag=True, default=None, help="Allow non-conforming growth functions."
    )(func)
    return func


def lemma_overrides(variant, c, alpha, beta, theta, k0, phi0, growth, p, tau_hint, theta_tilde, eps0, permissive):
    overrides = {
        "variant": variant,
        "c": c,
        "alpha": alpha,
        "beta": beta,
        "theta": theta,
        "k0": k0,
        "phi0": phi0,
        "tau_hint": tau_hint,
        "theta_tilde": theta_tilde,
        "eps0": eps0,
        "permissive": permissive,
    }
    if growth is not None:
        overrides["growth"] = {"kind": growth, "p": p} if p is not None else growth
    return overrides


@click.group()
@click.option("-v", "--verbose", is_flag=True, help="Log progress to standard error.")
@click.version_option(version=__version__)
def main(verbose):
    """Decay bounds for level-set recursions, their envelopes and PDE checks."""
    logging.basicConfig(
        level=logging.DEBUG if verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
        force=True,
    )


@main.command()
@click.option("--growth", default=None, help="Growth function kind.")
@click.option("--p", type=float, default=None, help="Exponent of the power growth function.")
@click.option("--t-max", type=float, default=None, help="Upper end of the sample range.")
@click.option("--samples", "sample_count", type=int, default=None, help="Number of samples.")
@click.option("--tol", type=float, default=None, help="Relative violation tolerance.")
@common_options
def gcheck(growth, p, t_max, sample_count, tol, config, output, fmt):
    """Check the growth assumptions numerically."""
    overrides = {"t_max": t_max, "sample_count": sample_count, "tol": tol}
    if growth is not None:
        overrides["growth"] = {"kind": growth, "p": p} if p is not None else growth
    _run("gcheck", config, output, fmt, overrides)


@main.command()
@lemma_options
@common_options
def bound(config, output, fmt, **lemma):
    """Compute the decay bound a recursion hypothesis implies."""
    _run("bound", config, output, fmt, lemma_overrides(**lemma))


@main.command()
@lemma_options
@click.option("--k-max", type=float, default=None, help="Largest grid level.")
@click.option("--n-geometric", type=int, default=None, help="Number of geometric grid levels.")
@click.option("--slack", type=float, default=None, help="Multiplicative dominance slack.")
@click.option("--sweep", default=None, help="JSON list of parameter sets to run concurrently.")
@common_options
def envelope(k_max, n_geometric, slack, sweep, config, output, fmt, **lemma):
    """Compare a bound with the extremal envelope on a level grid."""
    overrides = lemma_overrides(**lemma)
    overrides.update({"k_max": k_max, "n_geometric": n_geometric, "slack": slack})
    _run("envelope", config, output, fmt, overrides, sweep)


@main.command()
@click.option("--c-tilde", type=float, default=None, help="Doubling constant.")
@click.option("--alpha", type=float, default=None)
@click.option("--beta", type=float, default=None)
@click.option("--k0", type=float, default=None)
@click.option("--phi0", type=float, default=None)
@click.option("--growth", default=None, help="Growth function kind.")
@click.option("--p", type=float, default=None, help="Exponent of the power growth function.")
@click.option("--c", type=float, default=None, help="Full-form constant to test instead of the computed one.")
@click.option("--pairs", "n_pairs", type=int, default=None, help="Number of sampled (h, k) pairs.")
@click.option("--seed", type=int, default=None, help="Random seed.")
@click.option("--permissive", is_flag=True, default=None)
@common_options
def equivalence(c_tilde, alpha, beta, k0, phi0, growth, p, c, n_pairs, seed, permissive, config, output, fmt):
    """Doubling form to full form for 0 < beta < 1, with a randomized check."""
    overrides = {
        "c_tilde": c_tilde,
        "alpha": alpha,
        "beta": beta,
        "k0": k0,
        "phi0": phi0,
        "c": c,
        "n_pairs": n_pairs,
        "seed": seed,
        "permissive": permissive,
    }
    if growth is not None:
        overrides["growth"] = {"kind": growth, "p": p} if p is not None else growth
    _run("equivalence", config, output, fmt, overrides)


@main.command()
@click.argument("witness", required=False)
@click.option("--alpha", type=float, default=None, help="alpha for the beta > 1 witness.")
@click.option("--refine", is_flag=True, default=None, help="Also report the real root for k0.")
@click.option("--k-count", type=int, default=None, help="Number of levels for the beta = 1 identity.")
@common_options
def counterexample(witness, alpha, refine, k_count, config, output, fmt):
    """Run the beta1 or beta-gt-1 witness."""
    overrides = {"witness": witness, "alpha": alpha, "refine": refine, "k_count": k_count}
    _run("counterexample", config, output, fmt, overrides)


def pde_options(func):
    for name, kind, help_text in reversed(
        [
            ("--n", int, "Dimension."),
            ("--resolution", int, "Interior nodes per axis (odd)."),
            ("--a-low", float, "Coefficient at s = 0."),
            ("--a-high", float, "Upper coefficient bound."),
            ("--theta-deg", float, "Degeneracy exponent."),
            ("--averaging", click.Choice(["arithmetic", "harmonic"]), "Face coefficient averaging."),
            ("--source", click.Choice(["zero", "constant", "radial"]), "Source kind."),
            ("--value", float, "Constant source value."),
            ("--m-target", float, "Integrability exponent of the radial source."),
            ("--picard-tol", float, "Picard update tolerance."),
            ("--linear-tol", float, "Relative residual of the linear solves."),
            ("--max-picard", int, "Largest number of Picard steps."),
        ]
    ):
        func = click.option(name, type=kind, default=None, help=help_text)(func)
    return func


def pde_overrides(n, resolution, a_low, a_high, theta_deg, averaging, source, value, m_target, picard_tol, linear_tol, max_picard):
    overrides = {
        "n": n,
        "resolution": resolution,
        "a_low": a_low,
        "a_high": a_high,
        "theta_deg": theta_deg,
        "averaging": averaging,
        "picard_tol": picard_tol,
        "linear_tol": linear_tol,
        "max_picard": max_picard,
    }
    if source is not None:
        spec = {"kind": source}
        if value is not None:
            spec["value"] = value
        if m_target is not None:
            spec["m_target"] = m_target
        overrides["source"] = spec
    return overrides


@main.command("pde-solve")
@pde_options
@common_options
def pde_solve(config, output, fmt, **pde):
    """Solve the degenerate Dirichlet problem by damped Picard iteration."""
    _run("pde-solve", config, output, fmt, pde_overrides(**pde))


@main.command("pde-analyze")
@pde_options
@click.option("--solution", default=None, help="Binary solution file to analyze instead of solving.")
@common_options
def pde_analyze(solution, config, output, fmt, **pde):
    """Classify the level-set decay of a solution against the predicted regime."""
    overrides = pde_overrides(**pde)
    overrides["solution"] = solution
    _run("pde-analyze", config, output, fmt, overrides)


if __name__ == "__main__":
    main()
