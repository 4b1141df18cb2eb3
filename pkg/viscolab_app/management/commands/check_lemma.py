from django.core.management.base import BaseCommand, CommandError

from viscolab_app.services.decay_bounds import PolyBoundParams, verify_comparison_bound
from viscolab_app.services.exceptions import VidLabError
from viscolab_app.services.services import EXIT_CODES, status_for


class Command(BaseCommand):
    help = "Сравнивает решение уравнения сравнения с замкнутой степенной оценкой"

    def add_arguments(self, parser):
        parser.add_argument("y0", type=float)
        parser.add_argument("m2", type=float)
        parser.add_argument("m3", type=float)
        parser.add_argument("q", type=float)
        parser.add_argument("--horizon", type=float, default=10.0, help="Горизонт интегрирования T")
        parser.add_argument("--dt", type=float, help="Шаг РК4; по умолчанию 1e-3·max(1, 1/M2)")

    def handle(self, *args, **options):
        try:
            params = PolyBoundParams(options["y0"], options["m2"], options["m3"], options["q"])
            check = verify_comparison_bound(params, options["horizon"], options["dt"])
        except VidLabError as e:
            raise CommandError(str(e), returncode=EXIT_CODES[status_for(e)])

        verdict = "PASS" if check.passed else "FAIL"
        self.stdout.write(f"y0={params.y0!r} M2={params.m2!r} M3={params.m3!r} q={params.q!r}")
        self.stdout.write(f"margin={check.margin!r} worst_t={check.worst_t!r} "
                          f"preconditions_met={check.preconditions_met}")
        self.stdout.write(verdict)
        if not check.passed:
            raise CommandError(f"Оценка нарушена: запас {check.margin} при t={check.worst_t}", returncode=1)
