#!/usr/bin/env python3
"""
Generate a Markdown summary of theorem-suite check reports.

Used by `toeplitz_spectra.py verify --report-md PATH`, or standalone on a
report CSV written by `toeplitz_spectra.py verify --format csv`.
"""

import argparse
import sys
from datetime import datetime
from pathlib import Path
from typing import Optional, Sequence

import pandas as pd

from run_config import RunConfig
from verify import CheckReport, reports_frame


def render_frame(df: pd.DataFrame, parameters: dict, generated_at: Optional[str] = None) -> str:
    """Markdown for a frame with the columns of ``reports_frame``."""
    generated_at = generated_at or datetime.now().strftime('%Y-%m-%d %H:%M:%S')
    total = len(df)
    passed = int(df['passed'].astype(bool).sum()) if total else 0
    failed_df = df[~df['passed'].astype(bool)] if total else df
    status = "✅ All checks passed" if passed == total else f"❌ {total - passed} of {total} checks failed"

    if total:
        margin = (df['residual'] / df['tol'].where(df['tol'] > 0)).fillna(df['residual'])
        worst = df.loc[margin.idxmax()]
        worst_line = f"`{worst['name']}` with residual {worst['residual']:.3e} (tol {worst['tol']:.3e})"
    else:
        worst_line = "no checks ran"

    parameter_rows = "\n".join(f"| {key} | {value} |" for key, value in parameters.items())
    check_rows = "\n".join(
        f"| {row['name']} | {'✅' if row['passed'] else '❌'} | {row['residual']:.3e} | {row['tol']:.3e} |"
        for _, row in df.iterrows())
    witness_lines = "\n".join(
        f"- **{row['name']}**: {row['witness'] or 'no witness recorded'}" for _, row in failed_df.iterrows()
    ) or "None."

    report = f"""# Spectral Table Verification Report

*Generated on {generated_at}*

## Summary

{status}

- **Checks run**: {total}
- **Passed**: {passed}
- **Worst residual relative to tolerance**: {worst_line}

## Parameters

| Parameter | Value |
|-----------|-------|
{parameter_rows}

## Checks

| Check | Result | Residual | Tolerance |
|-------|--------|----------|-----------|
{check_rows}

## Witnesses of failed checks

{witness_lines}
"""
    return report


def render_markdown(reports: Sequence[CheckReport], cfg: RunConfig, generated_at: Optional[str] = None) -> str:
    """
    Markdown summary of a verification run.

    Args:
        reports (Sequence[CheckReport]): Reports in suite order
        cfg (RunConfig): Configuration the suite ran with
        generated_at (str, optional): Timestamp text, default now

    Returns:
        str: The report
    """
    parameters = {
        'n': cfg.n,
        'alpha': cfg.alpha,
        'max_degree': cfg.max_degree,
        'order': cfg.order if cfg.order is not None else 12 + 2 * cfg.max_degree,
        'mc_samples': cfg.mc_samples,
        'seed': cfg.seed,
        'tol': cfg.tol,
    }
    if cfg.inject_fault:
        parameters['inject_fault'] = cfg.inject_fault
    return render_frame(reports_frame(reports), parameters, generated_at)


def main():
    parser = argparse.ArgumentParser(description='Render a verification report CSV as Markdown')
    parser.add_argument('reports_csv', help='CSV written by toeplitz_spectra.py verify --format csv')
    parser.add_argument('--output', '-o', help='Markdown file to write (default: stdout)')
    args = parser.parse_args()

    df = pd.read_csv(args.reports_csv, float_precision='round_trip', keep_default_na=False)
    parameters = {}
    for column in ('n', 'alpha', 'max_degree', 'seed'):
        values = [v for v in df[column].unique() if v != ''] if column in df else []
        if values:
            parameters[column] = ', '.join(str(v) for v in values)
    df['witness'] = df['witness'].astype(str) if 'witness' in df else ''
    report = render_frame(df, parameters)

    if args.output:
        Path(args.output).write_text(report)
        print(f"✅ Markdown report saved to: {args.output}")
    else:
        sys.stdout.write(report)


if __name__ == "__main__":
    main()
