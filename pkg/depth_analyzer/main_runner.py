import argparse
import dataclasses
import logging
import sys
from concurrent.futures import ThreadPoolExecutor

from .arch_builders import BUILTIN_ARCHITECTURES, DEFAULT_NUM_CLASSES, BuilderError, ShortcutPolicy, build_architecture
from .archspec_parser import ArchSpecError, load_archspec
from .cost_metrics import MacConvention, cost_report
from .depth_metrics import (
    DEFAULT_MAX_PATH_COUNT,
    DEFAULT_ORACLE_CAP,
    AnalysisError,
    analyze_depth,
    enumerate_paths,
)
from .expectation_checker import ExpectationError, check_records, load_expectations
from .grad_depth import gamma_sweep, gradient_weighted_depth_custom
from .graph_core import DEFAULT_INPUT_SHAPE, GraphValidationError, ShapeInferenceError, infer_shapes
from .reference_data import DATA_DIR, SHIPPED_ACCURACY_FILE, ReferenceDataError, load_custom_weights, load_reference_accuracy
from .report_writer import AnalysisRecord, render_csv, render_depth_accuracy, render_records, render_tradeoff
from .run_config import (
    DEFAULT_DEPTH_CONVENTION,
    DEFAULT_FORMAT,
    DEFAULT_JOBS,
    DEFAULT_MAC_CONVENTION,
    DEFAULT_SHORTCUT,
    DEPTH_CONVENTIONS,
    FORMATS,
    RunConfig,
    RunConfigError,
    Source,
    load_run_config,
    parse_input_shape,
    resolve_options,
    resolve_sources,
)

logger = logging.getLogger(__name__)

SHIPPED_TARGETS_FILE = DATA_DIR / "reproduction_targets.json"
LOG_FORMAT = "%(levelname)s %(name)s: %(message)s"

EXIT_OK = 0
EXIT_INPUT_ERROR = 1
EXIT_ANALYSIS_ERROR = 2

INPUT_ERRORS = (ArchSpecError, GraphValidationError, ShapeInferenceError, BuilderError, ReferenceDataError,
                RunConfigError, ExpectationError, OSError)


class CheckFailed(Exception):
    """Raised when records do not match the expected values."""
    pass


class CliParser(argparse.ArgumentParser):
    """Usage errors print one `error:` line and exit 1."""

    def error(self, message):
        print(f"error: {message}", file=sys.stderr)
        sys.exit(EXIT_INPUT_ERROR)


class SourceAction(argparse.Action):
    """Collects --arch and --spec into one ordered source list."""

    def __call__(self, parser, namespace, values, option_string=None):
        sources = list(getattr(namespace, "sources", None) or [])
        sources.append(Source("arch" if option_string == "--arch" else "spec", values))
        setattr(namespace, "sources", sources)


# --- Pipeline ---

def load_source(source: Source, options):
    if source.kind == "arch":
        return build_architecture(source.value, options.input_shape, options.num_classes, options.shortcut)
    logger.info("MainRunner: reading archspec %s", source.value)
    return load_archspec(source.value)


def _oracle_check(graph, poly, options):
    lengths = enumerate_paths(graph, options.oracle_cap, options.count_fc)
    if poly.exact:
        agrees = lengths == poly.expand()
    else:
        agrees = len(lengths) == round(poly.path_count)
    if not agrees:
        raise AnalysisError(f"oracle mismatch on '{graph.name}': enumeration disagrees with path polynomial")
    logger.info("MainRunner: oracle confirmed %d paths for '%s'", len(lengths), graph.name)


def analyze_source(source: Source, options, weights=None) -> AnalysisRecord:
    """Runs one source through validation, depth, gradient-depth and cost analyses."""
    logger.info("--- Step 1: Loading %s ---", source)
    graph = load_source(source, options)
    name = source.value.lower() if source.kind == "arch" else graph.name

    logger.info("--- Step 2: Validation and shape inference (%s) ---", name)
    shapes = infer_shapes(graph)
    logger.info("MainRunner: %d nodes, output shape %s", len(graph.nodes), shapes[graph.output_id])

    logger.info("--- Step 3: Depth metrics (%s) ---", name)
    depth = analyze_depth(graph, options.count_fc, exact=not options.approximate,
                          max_path_count=options.max_path_count)
    if options.oracle:
        _oracle_check(graph, depth.polynomial, options)

    logger.info("--- Step 4: Gradient-weighted depth (%s) ---", name)
    grads = gamma_sweep(depth.polynomial, options.gammas)
    custom = gradient_weighted_depth_custom(depth.polynomial, weights) if weights is not None else None

    logger.info("--- Step 5: Cost metrics (%s) ---", name)
    costs = cost_report(graph, options.mac_convention)
    for warning in depth.warnings:
        logger.info("MainRunner: %s: %s", name, warning)
    return AnalysisRecord.from_reports(name, depth, grads, costs, custom)


def analyze_all(sources, options, weights=None) -> list[AnalysisRecord]:
    """Analyzes sources, concurrently when jobs > 1; results keep input order."""
    if not sources:
        raise RunConfigError("no sources given; use --arch NAME or --spec PATH")
    if options.jobs == 1 or len(sources) == 1:
        return [analyze_source(s, options, weights) for s in sources]
    with ThreadPoolExecutor(max_workers=options.jobs) as pool:
        return list(pool.map(lambda s: analyze_source(s, options, weights), sources))


def _load_weights(options):
    return load_custom_weights(options.weights) if options.weights else None


def _accuracy_rows(records, options):
    table = load_reference_accuracy(options.accuracy or SHIPPED_ACCURACY_FILE)
    rows = []
    for record in records:
        top1 = table.top1(record.architecture)
        if top1 is None:
            raise ReferenceDataError(f"no accuracy for {record.architecture}")
        rows.append((record, top1))
    return rows


# --- Commands ---

def cmd_analyze(sources, options) -> str:
    if len(sources) != 1:
        raise RunConfigError(f"analyze takes exactly one source, got {len(sources)}; use compare for several")
    records = analyze_all(sources, options, _load_weights(options))
    logger.info("--- Step 6: Rendering (%s) ---", options.format)
    return render_records(records, options.format, options.depth_convention, options.per_node)


def cmd_compare(sources, options) -> str:
    records = analyze_all(sources, options, _load_weights(options))
    logger.info("--- Step 6: Rendering %d rows ---", len(records))
    return render_csv(records)


def cmd_tradeoff(sources, options) -> str:
    records = analyze_all(sources, options)
    return render_tradeoff(_accuracy_rows(records, options))


def cmd_depth_accuracy(sources, options) -> str:
    records = analyze_all(sources, options)
    return render_depth_accuracy(_accuracy_rows(records, options))


def _apply_expectation_options(options, overrides):
    changes = {}
    if "mac_convention" in overrides:
        changes["mac_convention"] = MacConvention(overrides["mac_convention"])
    if "shortcut" in overrides:
        changes["shortcut"] = ShortcutPolicy(overrides["shortcut"])
    if "fc_depth" in overrides:
        changes["count_fc"] = overrides["fc_depth"] == "on"
    if "input_shape" in overrides:
        changes["input_shape"] = parse_input_shape(overrides["input_shape"])
    if "classes" in overrides:
        changes["num_classes"] = overrides["classes"]
    return dataclasses.replace(options, **changes)


def cmd_check(sources, options) -> str:
    expectations = load_expectations(options.expected or SHIPPED_TARGETS_FILE)
    try:
        options = _apply_expectation_options(options, expectations.options)
    except ValueError as e:
        raise ExpectationError(f"invalid option in expected-values file: {e}") from e
    if not sources:
        sources = [Source("arch", name) for name in expectations.records]
    records = analyze_all(sources, options)
    discrepancies = check_records({r.architecture: r.numeric_fields() for r in records}, expectations)
    if discrepancies:
        for d in discrepancies:
            logger.info("MainRunner: %s", d)
        raise CheckFailed(f"{discrepancies[0]} ({len(discrepancies)} discrepancies in total)"
                          if len(discrepancies) > 1 else discrepancies[0])
    return f"{expectations.test_name}: PASSED ({len(expectations.records)} architectures)\n"


COMMANDS = {
    "analyze": cmd_analyze,
    "compare": cmd_compare,
    "tradeoff": cmd_tradeoff,
    "depth-accuracy": cmd_depth_accuracy,
    "check": cmd_check,
}


# --- Command line ---

def _common_parent():
    parent = argparse.ArgumentParser(add_help=False)
    parent.add_argument("--config", help="JSON run-config file; explicit flags override its values.")
    noise = parent.add_mutually_exclusive_group()
    noise.add_argument("-v", "--verbose", action="store_true", help="Log progress at INFO level.")
    noise.add_argument("-q", "--quiet", action="store_true", help="Log errors only.")
    return parent


def _source_parent():
    parent = argparse.ArgumentParser(add_help=False)
    parent.add_argument("--arch", action=SourceAction, dest="sources", metavar="NAME",
                        help=f"Built-in architecture: {', '.join(BUILTIN_ARCHITECTURES)}. Repeatable.")
    parent.add_argument("--spec", action=SourceAction, dest="sources", metavar="PATH",
                        help="Path to an .archspec file. Repeatable.")
    return parent


def _analysis_parent():
    parent = argparse.ArgumentParser(add_help=False)
    parent.add_argument("--input-shape", metavar="CxHxW",
                        help=f"Input shape for built-ins (default: {'x'.join(map(str, DEFAULT_INPUT_SHAPE))}).")
    parent.add_argument("--classes", type=int, metavar="N",
                        help=f"Classifier width for built-ins (default: {DEFAULT_NUM_CLASSES}).")
    parent.add_argument("--gamma", metavar="G1,G2,...",
                        help="Attenuation factors for gradient-weighted depth (default: 1.0,0.9,0.7,0.5).")
    parent.add_argument("--depth-convention", choices=DEPTH_CONVENTIONS,
                        help=f"Nominal depth convention(s) to show (default: {DEFAULT_DEPTH_CONVENTION}).")
    parent.add_argument("--shortcut", choices=[p.value for p in ShortcutPolicy],
                        help=f"Stage-transition shortcut for ResNets (default: {DEFAULT_SHORTCUT}).")
    parent.add_argument("--fc-depth", choices=("on", "off"),
                        help="Count fully connected layers as depth (default: on).")
    parent.add_argument("--oracle", action="store_true", default=None,
                        help="Cross-check the path polynomial against explicit path enumeration.")
    parent.add_argument("--oracle-cap", type=int, metavar="N",
                        help=f"Maximum paths the oracle may enumerate (default: {DEFAULT_ORACLE_CAP}).")
    parent.add_argument("--mac-convention", choices=[c.value for c in MacConvention],
                        help=f"Render MAC/FLOP totals in full or halved (default: {DEFAULT_MAC_CONVENTION}).")
    parent.add_argument("--approximate", action="store_true", default=None,
                        help="Use floating-point path counts instead of exact integers.")
    parent.add_argument("--max-path-count", type=int, metavar="N",
                        help=f"Exact path-count capacity (default: {DEFAULT_MAX_PATH_COUNT}).")
    parent.add_argument("--jobs", type=int, metavar="N",
                        help=f"Sources analyzed concurrently (default: {DEFAULT_JOBS}).")
    return parent


def build_parser() -> argparse.ArgumentParser:
    parser = CliParser(
        prog="depth_analyzer",
        description="Static depth and cost analyzer for feed-forward CNN architectures.",
    )
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")
    common, sources, analysis = _common_parent(), _source_parent(), _analysis_parent()
    parents = [common, sources, analysis]

    analyze = sub.add_parser("analyze", parents=parents, help="Analyze one architecture.")
    analyze.add_argument("--format", choices=FORMATS, help=f"Report format (default: {DEFAULT_FORMAT}).")
    analyze.add_argument("--per-node", action="store_true", default=None,
                         help="Include per-node parameter and MAC counts (table and json formats).")
    analyze.add_argument("--weights", metavar="PATH", help="CSV of length,weight for custom gradient-weighted depth.")

    compare = sub.add_parser("compare", parents=parents, help="CSV with one row per architecture.")
    compare.add_argument("--weights", metavar="PATH", help="CSV of length,weight for custom gradient-weighted depth.")

    for name, help_text in (("tradeoff", "CSV of MACs, parameters and reference top-1 accuracy."),
                            ("depth-accuracy", "CSV of nominal and effective depth against top-1 accuracy.")):
        command = sub.add_parser(name, parents=parents, help=help_text)
        command.add_argument("--accuracy", metavar="PATH",
                             help="Reference accuracy CSV (default: the shipped table).")

    check = sub.add_parser("check", parents=parents, help="Check analyses against expected values.")
    check.add_argument("--expected", metavar="PATH", help="Expected-values JSON (default: the shipped targets).")
    return parser


def configure_logging(verbose: bool = False, quiet: bool = False):
    level = logging.INFO if verbose else logging.ERROR if quiet else logging.WARNING
    logging.basicConfig(level=level, format=LOG_FORMAT, stream=sys.stderr, force=True)


def _fail(message, code):
    print(f"error: {' '.join(str(message).split())}", file=sys.stderr)
    return code


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    configure_logging(args.verbose, args.quiet)
    logger.info("--- Depth Analyzer: %s ---", args.command)

    try:
        config = load_run_config(args.config) if args.config else RunConfig()
        options = resolve_options(args, config)
        sources = resolve_sources(args, config)
        output = COMMANDS[args.command](sources, options)
    except CheckFailed as e:
        return _fail(e, EXIT_INPUT_ERROR)
    except FileNotFoundError as e:
        return _fail(f"file not found: {e.filename}", EXIT_INPUT_ERROR)
    except INPUT_ERRORS as e:
        return _fail(e, EXIT_INPUT_ERROR)
    except AnalysisError as e:
        return _fail(e, EXIT_ANALYSIS_ERROR)
    except Exception as e:
        logger.debug("MainRunner: unexpected failure", exc_info=True)
        return _fail(f"unexpected failure: {e}", EXIT_ANALYSIS_ERROR)

    sys.stdout.write(output)
    logger.info("--- Depth Analyzer: done ---")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
