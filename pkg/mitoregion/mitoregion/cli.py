"""Single entry point: ``run(argv)`` returns the process exit code."""
import os
import sys

import django
from django.core.management import execute_from_command_line, get_commands

USAGE_ERROR = 2
HELP_ARGUMENTS = ('help', '--help', '-h')


def run(argv):
    """Выполнить подкоманду и вернуть код выхода.

    0: успех, 1: ошибка данных, 2: ошибка вызова.
    """
    os.environ.setdefault('DJANGO_SETTINGS_MODULE', 'mitoregion.settings')
    django.setup()
    if not argv:
        sys.stderr.write('не указана подкоманда, см. help\n')
        return USAGE_ERROR
    if argv[0] not in HELP_ARGUMENTS and argv[0] not in get_commands():
        sys.stderr.write(f'неизвестная подкоманда {argv[0]!r}, см. help\n')
        return USAGE_ERROR
    try:
        execute_from_command_line(['manage.py', *argv])
    except SystemExit as exc:
        if exc.code is None:
            return 0
        return exc.code if isinstance(exc.code, int) else 1
    return 0
