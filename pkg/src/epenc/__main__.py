"""Allow ``python -m epenc``."""

from .cli import main

main()
