#!/usr/bin/env python3
"""
CubicLab command line tool

Runs one lab command, writes a JSON report to stdout (or --out) and exits
with 0 when every requested check passed, 1 when a check failed and 2 on
usage or input errors.
"""

import argparse
import sys
from typing import Dict, List, Optional

from rich.console import Console
from rich.table import Table

from cubiclab_api import __version__
from cubiclab_api.errors import CubicLabError
from cubiclab_api.gallery import MazyaParams
from cubiclab_api.lab import VERIFY_CHECKS, CommandResult, CubicLab
from cubiclab_tools.report import AnalysisReport, sanitize, write_csv, write_report
from cubiclab_utils.config import ConfigManager
from cubiclab_utils.logger import LogContext, configure_logging, get_logger

logger = get_logger(__name__)

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_USAGE = 2


def _common_options() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument('--seed', type=int, help='Random seed (default from config)')
    common.add_argument('--config', help='YAML or JSON configuration file')
    common.add_argument('--out', help='Write the JSON report to this path instead of stdout')
    common.add_argument('--csv', help='Write sampled data to this CSV file')
    common.add_argument('--workers', type=int, help='Worker threads for sampling loops')
    common.add_argument('--progress', action='store_true', help='Show progress bars on stderr')
    common.add_argument('--summary', action='store_true', help='Print a summary table on stderr')
    common.add_argument('--log-level', help='Log level (DEBUG, INFO, WARNING, ...)')
    common.add_argument('--log-dir', help='Also write rotating log files to this directory')
    return common


def _form_options(parser: argparse.ArgumentParser, default: Optional[str] = None):
    parser.add_argument(
        '--form',
        required=default is None,
        default=default,
        help='Form selector: u5, u5-printed, u9, cartan:D, triality:D, spin:N, random:DIM:SEED, file:PATH',
    )
    parser.add_argument('--normalize', action='store_true', help='Rescale the form so that |grad u|^2 = 9|x|^4')


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog='cubiclab',
        description='Numerical lab for the algebras of cubic forms',
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Examples:
  %(prog)s catalog
  %(prog)s verify --form cartan:1 --checks munzner,harmonic
  %(prog)s analyze --form cartan:2 --scaling eiconal
  %(prog)s hyperbolicity --form u5 --pairs 100000 --orbit --csv pairs.csv
  %(prog)s f5 --points 100 --scale-search
  %(prog)s gallery mazya --n 5 --kappa 15 --mu 25 --nu 9
        """,
    )
    parser.add_argument('--version', action='version', version=f'%(prog)s {__version__}')
    common = _common_options()
    sub = parser.add_subparsers(dest='command', required=True)

    sub.add_parser('catalog', parents=[common], help='List the named forms')

    analyze = sub.add_parser('analyze', parents=[common], help='Idempotents, Peirce spectra, fusion and genericity')
    _form_options(analyze)
    analyze.add_argument('--scaling', choices=['raw', 'eiconal'], default='raw', help='Product scaling (eiconal divides by 6 after normalization)')
    analyze.add_argument('--profile', choices=['eiconal', 'jordan', 'free'], help='Fusion law to test (default: eiconal for eiconal scaling, else free)')

    verify = sub.add_parser('verify', parents=[common], help='Identity and structure checks')
    _form_options(verify)
    verify.add_argument('--checks', default=','.join(VERIFY_CHECKS), help=f'Comma separated subset of {",".join(VERIFY_CHECKS)}')

    hyper = sub.add_parser('hyperbolicity', parents=[common], help='Sampled M-hyperbolicity of the Hessian set of w')
    _form_options(hyper, default='u5')
    hyper.add_argument('--alpha', type=float, help='Exponent in w = u/|x|^alpha, 1 <= alpha < 2')
    hyper.add_argument('--pairs', type=int, help='Number of sampled pairs')
    hyper.add_argument('--orbit', action='store_true', help='Conjugate one Hessian by a Haar-random orthogonal matrix')
    hyper.add_argument('--zero-tol', type=float, default=1e-10, help='Relative tolerance of the all-zero class')

    gap = sub.add_parser('gap-scan', parents=[common], help='Gap ratios of the multiplication operators')
    _form_options(gap)
    gap.add_argument('--dirs', type=int, help='Number of sampled directions')
    gap.add_argument('--delta', type=float, help='Gap margin delta in (0, 1)')

    f5 = sub.add_parser('f5', parents=[common], help='Fifth-order Hessian identity for u5')
    _form_options(f5, default='u5')
    f5.add_argument('--points', type=int, help='Number of sampled points')
    f5.add_argument('--scale-search', action='store_true', help='Search the scale s* (default unless --scale is given)')
    f5.add_argument('--scale', type=float, help='Evaluate at this fixed scale instead of searching')
    f5.add_argument('--coefficients', choices=['derived', 'printed'], default='derived', help='Coefficient set of the identity')

    hsiang = sub.add_parser('hsiang', parents=[common], help='Trace system fit tr L_x^2 = C1|x|^2, tr L_x^3 = C2 u(x)')
    _form_options(hsiang)

    gallery = sub.add_parser('gallery', help='Closed-form counterexamples')
    gallery_sub = gallery.add_subparsers(dest='item', required=True)
    mazya = gallery_sub.add_parser('mazya', parents=[common], help="Exponent of the Maz'ya solution |x|^a")
    mazya.add_argument('--n', type=int, required=True, help='Ambient dimension')
    mazya.add_argument('--kappa', type=float)
    mazya.add_argument('--mu', type=float)
    mazya.add_argument('--nu', type=float)
    mazya.add_argument('--eps', type=float, help='Use kappa = n(n-2), mu = n^2, nu = (n-2)^2 + eps')
    lo = gallery_sub.add_parser('lawson-osserman', parents=[common], help='Lawson-Osserman map checks')
    lo.add_argument('--d', type=int, required=True, choices=[2, 4, 8])
    lo.add_argument('--points', type=int, default=1000)

    return parser


def _mazya_params(args) -> MazyaParams:
    if args.eps is not None:
        if any(v is not None for v in (args.kappa, args.mu, args.nu)):
            raise ValueError('--eps excludes --kappa/--mu/--nu')
        return MazyaParams.from_epsilon(args.n, args.eps)
    if any(v is None for v in (args.kappa, args.mu, args.nu)):
        raise ValueError('gallery mazya needs --kappa, --mu and --nu, or --eps')
    return MazyaParams(n=args.n, kappa=args.kappa, mu=args.mu, nu=args.nu)


def execute(lab: CubicLab, args) -> CommandResult:
    """Dispatch a parsed command to the lab facade"""
    cfg = lab.config
    workers = cfg['workers']

    if args.command == 'catalog':
        return lab.catalog()
    if args.command == 'analyze':
        return lab.analyze(args.form, scaling=args.scaling, normalize=args.normalize,
                           profile=args.profile, workers=workers, progress=args.progress)
    if args.command == 'verify':
        checks = [c.strip() for c in args.checks.split(',') if c.strip()]
        return lab.verify(args.form, checks, normalize=args.normalize)
    if args.command == 'hyperbolicity':
        return lab.hyperbolicity(args.form, alpha=cfg['alpha'], pairs=cfg['pairs'], orbit=args.orbit,
                                 zero_tol=args.zero_tol, normalize=args.normalize,
                                 workers=workers, progress=args.progress)
    if args.command == 'gap-scan':
        return lab.gap_scan(args.form, dirs=cfg['dirs'], delta=cfg['delta'], normalize=args.normalize)
    if args.command == 'f5':
        search = args.scale_search or args.scale is None
        if search:
            return lab.f5(args.form, cfg['f5_points'], scale_search=True, coefficients=args.coefficients)
        return lab.f5(args.form, cfg['f5_points'], scale_search=False, coefficients=args.coefficients, scale=args.scale)
    if args.command == 'hsiang':
        return lab.hsiang(args.form, normalize=args.normalize)
    if args.command == 'gallery':
        if args.item == 'mazya':
            return lab.mazya(_mazya_params(args))
        return lab.lawson_osserman(args.d, args.points)
    raise ValueError(f'unknown command {args.command}')


def _summary_rows(prefix: str, value, rows: List):
    if isinstance(value, dict):
        for key in sorted(value):
            _summary_rows(f'{prefix}.{key}' if prefix else str(key), value[key], rows)
    elif not isinstance(value, list):
        rows.append((prefix, str(value)))


def print_summary(report: AnalysisReport, console: Optional[Console] = None):
    """Scalar results as a table on stderr"""
    console = console or Console(stderr=True)
    table = Table(title=f'cubiclab {report.command}' + (f' {report.form}' if report.form else ''))
    table.add_column('Key', style='cyan')
    table.add_column('Value')
    rows = []
    _summary_rows('', sanitize(report.results), rows)
    for key, value in rows:
        table.add_row(key, value)
    table.add_row('passed', str(report.passed), style='green' if report.passed else 'red')
    console.print(table)


def print_catalog(forms: List[Dict], console: Optional[Console] = None):
    console = console or Console(stderr=True)
    table = Table(title='Catalog')
    table.add_column('Selector', style='cyan')
    table.add_column('Dim', justify='right')
    table.add_column('Description')
    for entry in forms:
        table.add_row(entry['selector'], str(entry['dim']), entry['description'])
    console.print(table)


def run(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_OK if e.code in (0, None) else EXIT_USAGE

    try:
        config = ConfigManager(args.config)
        config.override(
            seed=args.seed,
            workers=args.workers,
            log_level=args.log_level,
            log_dir=args.log_dir,
            alpha=getattr(args, 'alpha', None),
            pairs=getattr(args, 'pairs', None),
            dirs=getattr(args, 'dirs', None),
            delta=getattr(args, 'delta', None),
            f5_points=getattr(args, 'points', None) if args.command == 'f5' else None,
        )
        configure_logging(config['log_level'], config['log_dir'])

        lab = CubicLab(config)
        with LogContext(logger, args.command, form=getattr(args, 'form', None)) as ctx:
            result = execute(lab, args)
    except (CubicLabError, ValueError) as e:
        logger.error(f'{args.command}: {e}')
        return EXIT_USAGE
    except Exception as e:
        logger.exception(f'{args.command} failed unexpectedly: {e}')
        return EXIT_USAGE

    report = AnalysisReport(
        command=args.command if args.command != 'gallery' else f'gallery {args.item}',
        form=getattr(args, 'form', None),
        parameters=result.parameters,
        results=result.results,
        passed=result.passed,
        duration=ctx.duration,
    )

    try:
        write_report(report, args.out)
        if args.csv:
            if result.samples:
                write_csv(result.samples, args.csv)
            else:
                logger.warning(f'{report.command} produces no sampled data; --csv ignored')
    except OSError as e:
        logger.error(f'failed to write output: {e}')
        return EXIT_USAGE

    if args.command == 'catalog':
        print_catalog(result.results['forms'])
    elif args.summary:
        print_summary(report)

    return EXIT_OK if result.passed else EXIT_FAILED


def main():
    """Main entry point"""
    sys.exit(run())


if __name__ == '__main__':
    main()
