#!/usr/bin/env python3
"""
mmWave Relay Blockage Analyzer - Entry Point
"""
import sys
import logging
import argparse
from pathlib import Path

# Make the src package importable when run from anywhere
current_dir = Path(__file__).parent
sys.path.insert(0, str(current_dir))

COMMANDS = ("single", "density", "sector-profile", "optimize", "validate")


def check_dependencies():
    """Check if required dependencies are available"""
    missing = []

    try:
        import numpy
    except ImportError:
        missing.append("numpy")

    try:
        import scipy
    except ImportError:
        missing.append("scipy")

    try:
        import pandas
    except ImportError:
        missing.append("pandas")

    try:
        import yaml
    except ImportError:
        missing.append("PyYAML")

    if missing:
        print("❌ Missing required dependencies:")
        for dep in missing:
            print(f"   - {dep}")
        print("\nInstall with: pip install " + " ".join(missing))
        return False

    return True


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        description="mmWave Relay Blockage Analyzer",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Examples:
  %(prog)s single --out results/single.csv          # P(blocked) vs distance
  %(prog)s density                                  # cell mean vs density
  %(prog)s sector-profile --trials 10000            # azimuth study
  %(prog)s optimize --config config/development.yaml --workers 4
  %(prog)s validate --trials 100000                 # analytic vs Monte Carlo

Exit codes: 0 success, 1 runtime error, 2 config error, 3 validation failure
        """
    )

    parser.add_argument(
        "command",
        choices=COMMANDS,
        help="Experiment to run"
    )

    parser.add_argument(
        "--config",
        default="config/default.yaml",
        help="Scenario file path (default: config/default.yaml)"
    )

    parser.add_argument(
        "--out",
        help="Output path (CSV; JSON report for validate)"
    )

    parser.add_argument(
        "--seed",
        type=int,
        help="Monte Carlo seed (overrides config)"
    )

    parser.add_argument(
        "--trials",
        type=int,
        help="Monte Carlo trials per point (overrides config)"
    )

    parser.add_argument(
        "--quad-nodes",
        type=int,
        help="Gauss-Legendre nodes for l, w and theta; h gets half (overrides config)"
    )

    parser.add_argument(
        "--no-budget",
        action="store_true",
        help="Disable link-budget (sensitivity) constraints"
    )

    parser.add_argument(
        "--independent",
        action="store_true",
        help="Also emit the independence baseline (optimize)"
    )

    parser.add_argument(
        "--workers",
        type=int,
        help="Worker processes for quadrature and Monte Carlo (overrides config)"
    )

    parser.add_argument(
        "--dump-config",
        metavar="PATH",
        help="Write the effective configuration as YAML before running"
    )

    parser.add_argument(
        "--verbose", "-v",
        action="store_true",
        help="Verbose output"
    )

    return parser


def main(argv=None):
    """Main entry point"""
    args = build_parser().parse_args(argv)

    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )

    # Print header
    print("📡 mmWave Relay Blockage Analyzer")
    print("=" * 55)

    if not check_dependencies():
        sys.exit(1)

    try:
        from src.cli.cli_interface import run_cli
        sys.exit(run_cli(args))

    except KeyboardInterrupt:
        print("\n🛑 Interrupted by user")
        sys.exit(1)
    except Exception as e:
        print(f"❌ Unexpected error: {e}")
        if args.verbose:
            import traceback
            traceback.print_exc()
        sys.exit(1)


if __name__ == "__main__":
    main()
