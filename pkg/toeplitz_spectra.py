#!/usr/bin/env python3
"""
Toeplitz Spectral Tables

Command-line front end for spectral functions of Toeplitz operators with
separately radial symbols on weighted Bergman spaces of the unit ball.

Features:
- spectrum: one gamma per (orbit, branch), or the full diagonal with --expand
- orbits: orbit and branch structure of Z_+^n with spanning monomials
- verify: the theorem suite, optionally with a Markdown report
- decompose: tables of a+ and a- with the additivity residual
- apply: the diagonal multiplier on a JSON coefficient sequence
- init-config: write the env-style defaults file

Exit codes: 0 success, 1 a verification check failed, 2 invalid input,
3 classification failure or degree overflow.
"""

import argparse
import json
import logging
import sys
import time
from pathlib import Path
from typing import Dict, List, Optional

import numpy as np
import pandas as pd

from generate_verification_report import render_markdown
from multiindex import (BRANCH_WHOLE, MultiIndexError, degree, enumerate_canonical,
                        orbit_polynomials, validate_multi_index)
from quadrature import QuadratureError
from run_config import DEFAULT_CONFIG_FILE, FORMATS, GROUPS, ConfigError, RunConfig, load_config, write_config
from specfun import WeightParam, WeightParamError
from spectral import (SpectralError, apply_multiplier, build_table, decompose_tables, expanded_frame)
from symbols import (SymbolClassError, SymbolDomainError, SymbolSyntaxError, classify_by_sampling,
                     parse_symbol)
from verify import FAULT_NAMES, VerificationError, reports_frame, theorem_suite

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_INPUT_ERROR = 2
EXIT_CLASS_ERROR = 3


class CoefficientFormatError(ValueError):
    """The coefficient file does not follow [{"m": [...], "re": x, "im": y}, ...]."""


def setup_logging(log_file: str, verbose: bool = False) -> None:
    logging.basicConfig(
        level=logging.DEBUG if verbose else logging.INFO,
        format='%(asctime)s - %(levelname)s - %(message)s',
        handlers=[
            logging.FileHandler(log_file),
            logging.StreamHandler(sys.stderr)
        ],
        force=True
    )


def _plain(value):
    return value.item() if isinstance(value, np.generic) else value


def render_output(df: pd.DataFrame, fmt: str, metadata: Optional[Dict] = None) -> str:
    """CSV with 17 significant digits, or JSON {metadata, rows} with shortest round-trip floats."""
    if fmt == 'csv':
        return df.to_csv(index=False, float_format='%.17g')
    rows = [{k: _plain(v) for k, v in record.items()} for record in df.to_dict('records')]
    return json.dumps({'metadata': metadata or {}, 'rows': rows}, indent=2, ensure_ascii=False) + "\n"


def emit(text: str, output: Optional[str]) -> None:
    if output:
        Path(output).write_text(text)
        logger.info(f"✅ Results saved to: {output}")
    else:
        sys.stdout.write(text)


def _weight(cfg: RunConfig) -> WeightParam:
    return WeightParam(alpha=cfg.alpha, n=cfg.n)


def _symbol(cfg: RunConfig):
    if not cfg.symbol:
        raise ConfigError("This command needs --symbol")
    return parse_symbol(cfg.symbol, cfg.n)


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------

def cmd_spectrum(cfg: RunConfig, expand: bool = False) -> int:
    """Tabulate gamma_a per (orbit, branch); --expand lists every multi-index instead."""
    a = _symbol(cfg)
    symbol_class = classify_by_sampling(a, seed=cfg.seed)
    logger.info(f"📊 Symbol '{a.text}' classified as {symbol_class.value}")
    table = build_table(a, _weight(cfg), cfg.max_degree, order=cfg.order, symbol_class=symbol_class,
                        workers=cfg.workers, progress=not cfg.quiet)
    df = expanded_frame(table) if expand else table.to_frame()
    worst = max((e.error_bound for e in table.entries.values()), default=0.0)
    logger.info(f"✅ {len(table.entries)} entries, largest error estimate {worst:.2e}")
    emit(render_output(df, cfg.format, table.metadata()), cfg.output)
    return EXIT_OK


def orbits_frame(n: int, max_degree: int, group: str) -> pd.DataFrame:
    """One row per orbit (symmetric) or per orbit branch (alternating) with indices and monomials."""
    rows = []
    for orbit in enumerate_canonical(n, max_degree):
        branches = orbit.branches() if group == 'alternating' else {BRANCH_WHOLE: orbit.elements}
        for branch, indices in branches.items():
            row = {f"i{k}": v for k, v in enumerate(orbit.canonical, 1)}
            row.update({
                'degree': orbit.degree,
                'orbit_size': orbit.size,
                'class': orbit.orbit_class.value,
                'branch': branch,
                'multiplicity': len(indices),
                'indices': ';'.join(' '.join(map(str, m)) for m in indices),
                'polynomials': ';'.join(orbit_polynomials(orbit, branch)),
            })
            rows.append(row)
    return pd.DataFrame(rows)


def cmd_orbits(cfg: RunConfig) -> int:
    df = orbits_frame(cfg.n, cfg.max_degree, cfg.group)
    logger.info(f"📊 {len(df)} {cfg.group} blocks for n={cfg.n}, max_degree={cfg.max_degree}")
    metadata = {'n': cfg.n, 'max_degree': cfg.max_degree, 'group': cfg.group}
    emit(render_output(df, cfg.format, metadata), cfg.output)
    return EXIT_OK


def cmd_verify(cfg: RunConfig, report_md: Optional[str] = None) -> int:
    """Run the theorem suite; exit 1 if any check fails."""
    if cfg.n > 4 or cfg.max_degree > 10:
        logger.warning(f"⚠️ n={cfg.n}, max_degree={cfg.max_degree} is beyond desk scale; this may take a while")
    reports = theorem_suite(cfg.n, _weight(cfg), cfg.max_degree, seed=cfg.seed, tol=cfg.tol,
                            order=cfg.order, mc_samples=cfg.mc_samples, inject_fault=cfg.inject_fault,
                            workers=cfg.workers, progress=not cfg.quiet)
    failed = [r for r in reports if not r.passed]
    emit(render_output(reports_frame(reports), cfg.format,
                       {'n': cfg.n, 'alpha': cfg.alpha, 'max_degree': cfg.max_degree, 'seed': cfg.seed}),
         cfg.output)
    if report_md:
        Path(report_md).write_text(render_markdown(reports, cfg))
        logger.info(f"✅ Markdown report saved to: {report_md}")
    if failed:
        for report in failed:
            logger.error(f"❌ {report.name} failed: {report.witness}")
        return EXIT_CHECK_FAILED
    logger.info(f"✅ All {len(reports)} checks passed")
    return EXIT_OK


def cmd_decompose(cfg: RunConfig) -> int:
    a = _symbol(cfg)
    decomposition = decompose_tables(a, _weight(cfg), cfg.max_degree, order=cfg.order,
                                     symbol_class=classify_by_sampling(a, seed=cfg.seed),
                                     workers=cfg.workers, progress=not cfg.quiet)
    logger.info(f"📊 a+ = {decomposition.a_plus.text}")
    logger.info(f"📊 a- = {decomposition.a_minus.text}")
    residual = decomposition.max_residual
    glyph = '✅' if residual <= cfg.tol else '⚠️'
    logger.info(f"{glyph} Largest additivity residual {residual:.2e}")
    metadata = decomposition.table.metadata()
    metadata.update({'a_plus': decomposition.a_plus.text, 'a_minus': decomposition.a_minus.text})
    emit(render_output(decomposition.to_frame(), cfg.format, metadata), cfg.output)
    return EXIT_OK


def read_coefficients(path: str, n: int) -> Dict[tuple, complex]:
    """Parse [{"m": [...], "re": x, "im": y}, ...]; "im" may be omitted."""
    try:
        records = json.loads(Path(path).read_text(encoding='utf-8'))
    except UnicodeDecodeError as exc:
        raise CoefficientFormatError(f"{path} is not UTF-8 text: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise CoefficientFormatError(f"{path} is not valid JSON: {exc}") from exc
    if not isinstance(records, list):
        raise CoefficientFormatError(f"{path} must hold a JSON list of coefficient records")
    coefficients: Dict[tuple, complex] = {}
    for k, record in enumerate(records):
        if not isinstance(record, dict) or 'm' not in record or 're' not in record:
            raise CoefficientFormatError(f"Record {k} must be an object with 'm' and 're'")
        try:
            m = validate_multi_index(record['m'])
        except (MultiIndexError, TypeError) as exc:
            raise CoefficientFormatError(f"Record {k}: {exc}") from exc
        if len(m) != n:
            raise CoefficientFormatError(f"Record {k}: multi-index {m} does not have n={n} entries")
        if m in coefficients:
            raise CoefficientFormatError(f"Record {k}: duplicate multi-index {m}")
        re_part, im_part = record['re'], record.get('im', 0.0)
        if any(isinstance(v, bool) or not isinstance(v, (int, float)) for v in (re_part, im_part)):
            raise CoefficientFormatError(f"Record {k}: 're' and 'im' must be numbers")
        coefficients[m] = complex(re_part, im_part)
    return coefficients


def coefficients_frame(coefficients: Dict[tuple, complex], n: int) -> pd.DataFrame:
    rows = []
    for m, value in coefficients.items():
        row = {f"m{k}": v for k, v in enumerate(m, 1)}
        row.update({'re': value.real, 'im': value.imag})
        rows.append(row)
    return pd.DataFrame(rows, columns=[f"m{k}" for k in range(1, n + 1)] + ['re', 'im'])


def cmd_apply(cfg: RunConfig, coeffs_path: str) -> int:
    """Multiply a coefficient sequence by gamma_a; exit 3 when an index exceeds max_degree."""
    a = _symbol(cfg)
    coefficients = read_coefficients(coeffs_path, cfg.n)
    overflow = [m for m in coefficients if degree(m) > cfg.max_degree]
    if overflow:
        raise SpectralError(f"Coefficient at {overflow[0]} exceeds max_degree={cfg.max_degree}")
    table = build_table(a, _weight(cfg), cfg.max_degree, order=cfg.order,
                        symbol_class=classify_by_sampling(a, seed=cfg.seed),
                        workers=cfg.workers, progress=not cfg.quiet)
    result = apply_multiplier(table, coefficients)
    logger.info(f"✅ Applied T_a to {len(result)} coefficients")
    if cfg.format == 'json':
        records = [{'m': list(m), 're': v.real, 'im': v.imag} for m, v in result.items()]
        emit(json.dumps(records, indent=2) + "\n", cfg.output)
    else:
        emit(render_output(coefficients_frame(result, cfg.n), 'csv'), cfg.output)
    return EXIT_OK


def cmd_init_config(cfg: RunConfig, config_file: Optional[str] = None, force: bool = False) -> int:
    write_config(cfg, config_file, force=force)
    return EXIT_OK


# ---------------------------------------------------------------------------
# Entry point
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument('--config', type=str, default=None,
                        help=f'Configuration file path (default: {DEFAULT_CONFIG_FILE})')
    common.add_argument('--n', type=int, help='Complex dimension (default: 2)')
    common.add_argument('--alpha', type=float, help='Weight exponent, > -1 (default: 0)')
    common.add_argument('--max-degree', dest='max_degree', type=int, help='Degree cut-off (default: 8)')
    common.add_argument('--order', type=int, help='Quadrature order (default: 12 + 2*max_degree)')
    common.add_argument('--mc-samples', dest='mc_samples', type=int, help='Monte Carlo samples (default: 100000)')
    common.add_argument('--seed', type=int, help='Random seed (default: 0)')
    common.add_argument('--tol', type=float, help='Check tolerance (default: 1e-9)')
    common.add_argument('--format', choices=FORMATS, help='Output format (default: csv)')
    common.add_argument('--output', type=str, help='Output file path (default: stdout)')
    common.add_argument('--workers', type=int, help='Worker threads (default: 1)')
    common.add_argument('--log-file', dest='log_file', type=str, help='Log file (default: toeplitz_spectra.log)')
    common.add_argument('--quiet', action='store_true', default=None, help='Hide progress bars')
    common.add_argument('--verbose', action='store_true', help='Debug logging')

    parser = argparse.ArgumentParser(description='Spectral tables of Toeplitz operators with separately radial symbols')
    sub = parser.add_subparsers(dest='command', required=True)

    spectrum = sub.add_parser('spectrum', parents=[common], help='Tabulate gamma per orbit and branch')
    spectrum.add_argument('--symbol', required=True, help='Symbol text, e.g. "r1^2*r2^2"')
    spectrum.add_argument('--expand', action='store_true', help='One row per multi-index')

    orbits = sub.add_parser('orbits', parents=[common], help='List orbits and their monomials')
    orbits.add_argument('--group', choices=GROUPS, help='symmetric (S_n) or alternating (A_n) blocks')

    verify = sub.add_parser('verify', parents=[common], help='Run the theorem suite')
    verify.add_argument('--inject-fault', dest='inject_fault', choices=FAULT_NAMES,
                        help='Corrupt one check (negative control)')
    verify.add_argument('--report-md', dest='report_md', type=str, help='Also write a Markdown report')

    decompose = sub.add_parser('decompose', parents=[common], help='Tables of a+ and a-')
    decompose.add_argument('--symbol', required=True, help='Alternating symbol text')

    apply = sub.add_parser('apply', parents=[common], help='Apply T_a to a coefficient sequence')
    apply.add_argument('--symbol', required=True, help='Symbol text')
    apply.add_argument('--coeffs', required=True, help='JSON list of {"m": [...], "re": x, "im": y}')

    init = sub.add_parser('init-config', parents=[common], help='Write the configuration file')
    init.add_argument('--force', action='store_true', help='Overwrite an existing file')
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)

    try:
        cfg = load_config(args.config).with_overrides(vars(args)).validate()
    except ConfigError as e:
        setup_logging(RunConfig().log_file, args.verbose)
        logger.error(f"❌ {e}")
        return EXIT_INPUT_ERROR
    setup_logging(cfg.log_file, args.verbose)
    logger.info(f"🚀 toeplitz_spectra {args.command}: n={cfg.n}, alpha={cfg.alpha}, max_degree={cfg.max_degree}")
    start = time.time()

    try:
        if args.command == 'spectrum':
            status = cmd_spectrum(cfg, expand=args.expand)
        elif args.command == 'orbits':
            status = cmd_orbits(cfg)
        elif args.command == 'verify':
            status = cmd_verify(cfg, report_md=args.report_md)
        elif args.command == 'decompose':
            status = cmd_decompose(cfg)
        elif args.command == 'apply':
            status = cmd_apply(cfg, args.coeffs)
        else:
            status = cmd_init_config(cfg, args.config, force=args.force)
    except SymbolSyntaxError as e:
        logger.error(f"❌ {e}")
        logger.debug("Traceback", exc_info=True)
        return EXIT_INPUT_ERROR
    except (SymbolClassError, SpectralError, OverflowError) as e:
        logger.error(f"❌ {e}")
        logger.debug("Traceback", exc_info=True)
        return EXIT_CLASS_ERROR
    except (SymbolDomainError, CoefficientFormatError, ConfigError, WeightParamError, MultiIndexError,
            QuadratureError, VerificationError, FileNotFoundError, FileExistsError) as e:
        logger.error(f"❌ {e}")
        logger.debug("Traceback", exc_info=True)
        return EXIT_INPUT_ERROR

    logger.info(f"⏱️ Finished in {time.time() - start:.2f}s")
    return status


if __name__ == "__main__":
    sys.exit(main())
