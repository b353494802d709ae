"""
Command-line entry point: ``python -m core.cli <suite> [options]``.

Exit status is 0 when every check passes, 1 when a check fails and 2 for
malformed arguments or configurations.
"""
import os
import sys
from typing import List, Optional

EXIT_PASSED = 0
EXIT_FAILED = 1
EXIT_USAGE = 2


def run(argv: Optional[List[str]] = None) -> int:
    os.environ.setdefault('DJANGO_SETTINGS_MODULE', 'resonant_backend.settings')
    import django
    django.setup()

    from django.core.management import call_command
    from django.core.management.base import CommandError

    from core.management.commands.verify import VerificationFailed

    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        call_command('verify', *argv)
    except VerificationFailed as e:
        sys.stderr.write(f'{e}\n')
        return EXIT_FAILED
    except CommandError as e:
        sys.stderr.write(f'{e}\n')
        return EXIT_USAGE
    return EXIT_PASSED


if __name__ == '__main__':
    sys.exit(run())
