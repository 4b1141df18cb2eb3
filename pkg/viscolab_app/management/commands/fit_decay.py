from django.core.management.base import BaseCommand, CommandError

from viscolab_app.services.decay_bounds import fit_decay
from viscolab_app.services.exceptions import VidLabError
from viscolab_app.services.scenarios import read_trace_csv
from viscolab_app.services.services import EXIT_CODES, status_for

SUMMARY_COLUMNS = ("column", "model", "value", "intercept", "r_squared", "t_lo", "t_hi", "points", "trimmed")


class Command(BaseCommand):
    help = "Подгоняет степенной или экспоненциальный закон затухания к столбцу трассы"

    def add_arguments(self, parser):
        parser.add_argument("trace", help="CSV-трасса, записанная командой simulate")
        parser.add_argument("column", help="Столбец трассы, например E")
        parser.add_argument("model", choices=["power", "exp", "exponential"])
        parser.add_argument("--window", nargs=2, type=float, metavar=("T0", "T1"))
        parser.add_argument("--header", action="store_true", help="Вывести строку заголовка")

    def handle(self, *args, **options):
        try:
            table = read_trace_csv(options["trace"])
            fit = fit_decay(table.times, table.column(options["column"]), options["model"],
                            tuple(options["window"]) if options["window"] else None)
        except VidLabError as e:
            raise CommandError(f"{options['trace']}: {e}", returncode=EXIT_CODES[status_for(e)])

        if options["header"]:
            self.stdout.write(",".join(SUMMARY_COLUMNS))
        row = (options["column"], fit.model, repr(fit.value), repr(fit.intercept), repr(fit.r_squared),
               repr(fit.window[0]), repr(fit.window[1]), str(fit.points), str(fit.trimmed))
        self.stdout.write(",".join(row))
