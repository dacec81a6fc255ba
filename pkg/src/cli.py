"""Command-line front end."""

import argparse
import sys
from pathlib import Path
from typing import Optional, Sequence

from loguru import logger

from src import __version__
from src.config import settings
from src.errors import (
    ComparisonError,
    ConfigError,
    InvalidDistributionError,
    OpinionLabError,
    ScenarioValidationError,
    ShapeError,
    SimulationError,
)
from src.logging_config import setup_logging
from src.services import CompareService, OutputService, ScenarioService, SimulationPipeline

EXIT_OK = 0
EXIT_INVALID = 1
EXIT_NUMERIC = 2


class App:
    """opinion-lab command-line application."""

    def __init__(self):
        """Initialize the application."""
        self.scenario_service = ScenarioService()
        self.compare_service = CompareService()
        self.parser = self._build_parser()

    def _build_parser(self) -> argparse.ArgumentParser:
        parser = argparse.ArgumentParser(
            prog="opinion-lab",
            description="Multi-population bounded-confidence opinion dynamics",
        )
        parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
        parser.add_argument("--log-level", default=None, help="loguru level (default from settings)")
        commands = parser.add_subparsers(dest="command", required=True)

        run = commands.add_parser("run", help="run a scenario file or a preset")
        source = run.add_mutually_exclusive_group(required=True)
        source.add_argument("scenario", nargs="?", type=Path, help="scenario TOML file")
        source.add_argument("--preset", help="preset name, optionally name:variant")
        run.add_argument("--seed", type=int, default=None, help="override the scenario seed")
        run.add_argument("--out", type=Path, required=True, help="output directory")
        run.add_argument("--format", choices=["csv", "json"], default=settings.output_format)
        run.add_argument("--threads", type=int, default=None, help="worker cap (speed only)")
        run.set_defaults(handler=self.cmd_run, failure_code=EXIT_NUMERIC)

        compare = commands.add_parser("compare", help="per-step W1 between two runs")
        compare.add_argument("run_a", type=Path)
        compare.add_argument("run_b", type=Path)
        compare.add_argument("--out", type=Path, required=True, help="directory for the comparison table")
        compare.add_argument("--format", choices=["csv", "json"], default=settings.output_format)
        compare.set_defaults(handler=self.cmd_compare)

        presets = commands.add_parser("presets", help="list or export presets")
        preset_commands = presets.add_subparsers(dest="preset_command", required=True)
        preset_commands.add_parser("list", help="print every preset variant").set_defaults(
            handler=self.cmd_presets_list
        )
        export = preset_commands.add_parser("export", help="write every preset variant as TOML")
        export.add_argument("--out", type=Path, required=True)
        export.set_defaults(handler=self.cmd_presets_export)

        validate = commands.add_parser("validate", help="check a scenario file")
        validate.add_argument("scenario", type=Path)
        validate.set_defaults(handler=self.cmd_validate)
        return parser

    def run(self, argv: Optional[Sequence[str]] = None) -> int:
        """Parse arguments, dispatch, and map errors to exit codes."""
        args = self.parser.parse_args(argv)
        setup_logging(args.log_level)
        try:
            return args.handler(args)
        except ScenarioValidationError as e:
            for issue in e.issues:
                logger.error(str(issue))
            return EXIT_INVALID
        except (ConfigError, ComparisonError) as e:
            logger.error(str(e))
            return EXIT_INVALID
        except SimulationError as e:
            logger.error(f"Numeric failure: {e}")
            return EXIT_NUMERIC
        except (InvalidDistributionError, ShapeError) as e:
            # inside a run these come from engine state; elsewhere from the inputs
            code = getattr(args, "failure_code", EXIT_INVALID)
            logger.error(f"Numeric failure: {e}" if code == EXIT_NUMERIC else str(e))
            return code
        except OpinionLabError as e:
            logger.error(str(e))
            return EXIT_INVALID

    # ------------------------------------------------------------------
    # Commands
    # ------------------------------------------------------------------

    def cmd_run(self, args: argparse.Namespace) -> int:
        pipeline = SimulationPipeline(threads=args.threads)
        config = pipeline.resolve(args.scenario, args.preset, args.seed)
        pipeline.run(config, args.out, args.format)
        return EXIT_OK

    def cmd_compare(self, args: argparse.Namespace) -> int:
        report = self.compare_service.compare(args.run_a, args.run_b)
        paths = OutputService(args.out, args.format).write_comparison(report)
        logger.info(f"Comparison tables written to {args.out}: {', '.join(p.name for p in paths)}")
        return EXIT_OK

    def cmd_presets_list(self, args: argparse.Namespace) -> int:
        for name in self.scenario_service.variant_names():
            print(name)
        return EXIT_OK

    def cmd_presets_export(self, args: argparse.Namespace) -> int:
        for name in self.scenario_service.variant_names():
            config = self.scenario_service.preset(name)
            self.scenario_service.write(config, args.out / f"{name.replace(':', '--')}.toml")
        logger.info(f"Presets exported to {args.out}")
        return EXIT_OK

    def cmd_validate(self, args: argparse.Namespace) -> int:
        config = self.scenario_service.load(args.scenario)
        logger.info(f"Scenario '{config.name}' is valid")
        return EXIT_OK


def main(argv: Optional[Sequence[str]] = None) -> int:
    return App().run(argv)


if __name__ == "__main__":
    sys.exit(main())
