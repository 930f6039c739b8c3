import argparse

from app.services.config_service import format_value
from app.services.scenario_service import builtin_scenarios


def scenarios_command(args: argparse.Namespace) -> int:
    for name, scenario in sorted(builtin_scenarios().items()):
        print(name)
        print(f"    {scenario.description}")
        print(f"    source: {scenario.provenance}")
        print(f"    equations: {', '.join(scenario.equations)}{'  (steady)' if scenario.steady else ''}")
        if scenario.params:
            print("    params: " + ", ".join(f"{k}={format_value(v)}" for k, v in sorted(scenario.params.items())))
        if args.verbose and scenario.suggested_front is not None:
            front = scenario.suggested_front
            print(f"    front: G1={front.G1:g} G2={front.G2:g} window={format_value(front.window)} bracket={format_value(front.bracket)}")
    return 0


def register(subparsers) -> None:
    parser = subparsers.add_parser("scenarios", help="list the built-in scenarios")
    parser.add_argument("-v", "--verbose", action="store_true", help="also print suggested front settings")
    parser.set_defaults(handler=scenarios_command)
