#!/usr/bin/env python
"""Django's command-line utility for the region proposal pipeline."""
import os
import sys


def main():
    """Run pipeline commands."""
    os.environ.setdefault('DJANGO_SETTINGS_MODULE', 'mitoregion.settings')
    try:
        from mitoregion.cli import run
    except ImportError as exc:
        raise ImportError(
            "Couldn't import Django. Are you sure it's installed and "
            "available on your PYTHONPATH environment variable? Did you "
            "forget to activate a virtual environment?"
        ) from exc
    sys.exit(run(sys.argv[1:]))


if __name__ == '__main__':
    main()
