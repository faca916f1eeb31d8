"""Allow ``python -m procwatch``."""

from .cli import run_main

run_main()
