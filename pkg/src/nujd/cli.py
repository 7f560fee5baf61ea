"""Command-line surface for file-based pipelines.

Exit codes: 0 success (or Unique verdict), 1 generic error, 2 usage or
incompatible input, 3 NotUnique verdict, 4 numeric solver failure.
"""

from __future__ import annotations

import json
import sys
import warnings

import click
import numpy as np

from .core import CongruenceKind, DiagonalStack, TAU_RHO
from .errors import (
    ConfigError,
    DegenerateSpectrum,
    NotPositiveDefinite,
    NujdError,
    OrthogonalizationFailure,
    SingularPseudoCovariance,
    SingularSecondMatrix,
)
from . import io as nio
from .core import offdiag_residual
from .simulation import run_experiment
from .solvers import put, sut, two_matrix_same_kind
from .statistics import autocorrelation, covariance, cumulant_slice, pseudo_autocorrelation, pseudo_covariance, windowed_covariances
from .uniqueness import identifiability_master

_NUMERIC_ERRORS = (
    SingularPseudoCovariance,
    OrthogonalizationFailure,
    DegenerateSpectrum,
    NotPositiveDefinite,
    SingularSecondMatrix,
)


def _load_json(path):
    try:
        return nio.read_json(path)
    except json.JSONDecodeError as exc:
        click.echo(f"error: {path}: invalid JSON at line {exc.lineno}, column {exc.colno}", err=True)
        sys.exit(1)
    except OSError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(1)


def _fail(code: int, message: str):
    click.echo(f"error: {message}", err=True)
    sys.exit(code)


@click.group()
def main():
    """Joint-diagonalization toolbox: certify, solve, estimate, simulate."""


@main.command("check")
@click.argument("input_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--tol", type=float, default=TAU_RHO, show_default=True, help="certification tolerance for exact spectra")
@click.option("--margin", type=float, default=None, help="robustness margin for estimated spectra (overrides --tol)")
@click.option("--out", "out_path", type=click.Path(dir_okay=False), default=None, help="also write the report here")
def cmd_check(input_path, tol, margin, out_path):
    """Identifiability verdict for a spectra file (or diagonal matrix set).

    Prints the uniqueness report as JSON; exit code 0 means Unique, 3 means
    NotUnique (witness embedded in the report).
    """
    doc = _load_json(input_path)
    use_tol = margin if margin is not None else tol
    try:
        if "spectra" in doc:
            sym, herm, _ = nio.stacks_from_dict(doc)
        elif "matrices" in doc:
            sym, herm = _stacks_from_matrix_set(doc, use_tol)
        else:
            _fail(1, "input is neither a spectra file nor a matrix-set file")
        report = identifiability_master(sym, herm, use_tol)
    except NujdError as exc:
        _fail(1, str(exc))
    text = nio.write_json(nio.uniqueness_report_to_dict(report), out_path)
    click.echo(text, nl=False)
    sys.exit(0 if report.unique else 3)


def _stacks_from_matrix_set(doc, tol):
    items = nio.matrix_set_from_dict(doc)
    sym_rows, herm_rows = [], []
    for t in items:
        off = t.matrix - np.diag(np.diag(t.matrix))
        scale = max(float(np.linalg.norm(t.matrix)), np.finfo(float).tiny)
        if float(np.linalg.norm(off)) > max(tol, 1e-8) * scale:
            raise ConfigError(
                "matrix-set input to check must hold diagonal matrices "
                "(ground-truth spectra); run solve first for estimated sets"
            )
        (sym_rows if t.kind is CongruenceKind.TRANSPOSE else herm_rows).append(
            np.diag(t.matrix)
        )
    sym = DiagonalStack(CongruenceKind.TRANSPOSE, np.vstack(sym_rows)) if sym_rows else None
    herm = (
        DiagonalStack(CongruenceKind.HERMITIAN, np.vstack([r.real for r in herm_rows]))
        if herm_rows
        else None
    )
    return sym, herm


@main.command("solve")
@click.argument("input_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--method", type=click.Choice(["put", "sut", "gevd"]), default="put", show_default=True)
@click.option("--tol", type=float, default=1e-8, show_default=True, help="residual bound for exit code 0")
@click.option("--out", "out_path", type=click.Path(dir_okay=False), default=None)
def cmd_solve(input_path, method, tol, out_path):
    """Solve a two-matrix set, writing the demixer, spectrum, and residuals.

    Exit 0 when the joint-diagonality residual meets --tol, 2 for sets the
    method cannot consume, 4 for named numeric failures.
    """
    doc = _load_json(input_path)
    try:
        items = nio.matrix_set_from_dict(doc)
    except NujdError as exc:
        _fail(1, str(exc))
    digest = nio.file_digest(input_path)
    herm = [t for t in items if t.kind is CongruenceKind.HERMITIAN]
    sym = [t for t in items if t.kind is CongruenceKind.TRANSPOSE]
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            if method in ("put", "sut"):
                if len(herm) != 1 or len(sym) != 1:
                    _fail(2, f"{method} needs exactly one hermitian and one transpose matrix")
                res = (sut if method == "sut" else put)(herm[0], sym[0])
                ok = res.residual_identity / res.x.m <= tol and res.residual_offdiag <= tol
                out = nio.put_result_to_dict(res, method, digest)
            else:
                if len(items) != 2 or items[0].kind is not items[1].kind:
                    _fail(2, "gevd needs exactly two matrices of one kind")
                x = two_matrix_same_kind(items[0], items[1])
                resid = offdiag_residual(items, x)
                lam = np.diag(x.matrix.conj().T @ items[0].matrix @ (
                    x.matrix if items[0].kind is CongruenceKind.HERMITIAN else x.matrix.conj()
                ))
                ok = resid <= tol
                out = nio.gevd_result_to_dict(x, lam, resid, method, digest)
    except _NUMERIC_ERRORS as exc:
        _fail(4, f"{type(exc).__name__}: {exc}")
    except NujdError as exc:
        _fail(1, str(exc))
    out["tolerance_met"] = bool(ok)
    text = nio.write_json(out, out_path)
    if out_path is None:
        click.echo(text, nl=False)
    sys.exit(0 if ok else 4)


@main.command("estimate")
@click.argument("input_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--cov", is_flag=True, help="covariance matrix")
@click.option("--pseudocov", is_flag=True, help="pseudo-covariance matrix")
@click.option("--lag", "lags", type=int, multiple=True, help="lag-N pair: autocorrelation Hermitian part + pseudo-autocorrelation (repeatable)")
@click.option("--window", "windows", type=str, multiple=True, help="START:LEN windowed covariance (repeatable)")
@click.option("--cum4", "cum4", type=str, nargs=3, multiple=True, metavar="PATTERN AXES FIXED", help="fourth-order slice, e.g. 0000 3,4 1,1 (axes/channels 1-based)")
@click.option("--out", "out_path", type=click.Path(dir_okay=False), default=None)
def cmd_estimate(input_path, cov, pseudocov, lags, windows, cum4, out_path):
    """Estimate matrices from a signal file into a matrix-set file."""
    if not (cov or pseudocov or lags or windows or cum4):
        _fail(2, "empty recipe: pass at least one of --cov --pseudocov --lag --window --cum4")
    doc = _load_json(input_path)
    try:
        block = nio.signal_from_dict(doc)
        items = []
        recipe = []
        if cov:
            items.append(covariance(block))
            recipe.append({"statistic": "covariance"})
        if pseudocov:
            items.append(pseudo_covariance(block))
            recipe.append({"statistic": "pseudo_covariance"})
        for lag in lags:
            items.append(autocorrelation(block, lag).hermitian)
            items.append(pseudo_autocorrelation(block, lag))
            recipe.append({"statistic": "autocorrelation", "lag": lag, "part": "hermitian"})
            recipe.append({"statistic": "pseudo_autocorrelation", "lag": lag})
        parsed_windows = []
        for spec in windows:
            try:
                start, length = (int(v) for v in spec.split(":"))
            except ValueError:
                _fail(2, f"bad --window {spec!r}, expected START:LEN")
            parsed_windows.append((start, length))
        if parsed_windows:
            items.extend(windowed_covariances(block, parsed_windows))
            recipe.append({"statistic": "windowed_covariance", "windows": parsed_windows})
        for pattern, axes_s, fixed_s in cum4:
            if len(pattern) != 4 or set(pattern) - {"0", "1"}:
                _fail(2, f"bad --cum4 pattern {pattern!r}")
            try:
                axes = tuple(int(a) - 1 for a in axes_s.split(","))
                fixed = tuple(int(c) - 1 for c in fixed_s.split(",")) if fixed_s else ()
            except ValueError:
                _fail(2, "bad --cum4 axes/fixed, expected comma-separated integers")
            sl = cumulant_slice(block, pattern, fixed, axes)
            items.append(sl.matrix)
            recipe.append(
                {
                    "statistic": "cumulant_slice",
                    "pattern": pattern,
                    "axes": [a + 1 for a in axes],
                    "fixed": [c + 1 for c in fixed],
                    "kind": sl.kind.value,
                }
            )
        out = nio.matrix_set_to_dict(items, provenance={"source": "estimate", "recipe": recipe})
    except ValueError as exc:
        _fail(2, str(exc))
    except NujdError as exc:
        _fail(1, str(exc))
    text = nio.write_json(out, out_path)
    if out_path is None:
        click.echo(text, nl=False)
    sys.exit(0)


@main.command("simulate")
@click.argument("input_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--seed", type=int, default=None, help="override the config seed")
@click.option("--out", "out_path", type=click.Path(dir_okay=False), default=None)
def cmd_simulate(input_path, seed, out_path):
    """Run a seeded batch experiment from a config file into a report file."""
    doc = _load_json(input_path)
    try:
        if seed is not None:
            doc = dict(doc, seed=seed)
        config = nio.config_from_dict(doc)
        report = run_experiment(config)
    except NujdError as exc:
        _fail(1, str(exc))
    text = nio.write_json(report, out_path)
    if out_path is None:
        click.echo(text, nl=False)
    incomplete = len(report["trials"]) != config.trials
    sys.exit(1 if incomplete else 0)


if __name__ == "__main__":
    main()
