"""
Command-line verbs. Each module registers one subcommand.
"""

from app.commands import dim_entropy, entropy, factor_check, hexp, lower, subset_entropy, verify

COMMANDS = [entropy, subset_entropy, dim_entropy, lower, hexp, factor_check, verify]


def register_all(subparsers) -> None:
    for command in COMMANDS:
        command.register(subparsers)
