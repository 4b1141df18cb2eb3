import csv
from pathlib import Path

from django.core.management.base import BaseCommand, CommandError

from viscolab_app.services.exceptions import VidLabError
from viscolab_app.services.kernels import derive_burgers, derive_maxwell, derive_sls
from viscolab_app.services.services import EXIT_CODES, status_for

VARIANTS = {
    "maxwell": (derive_maxwell, ("cs", "eta")),
    "sls": (derive_sls, ("c1", "c2", "eta2")),
    "burgers": (derive_burgers, ("c1", "c2", "eta2", "eta3")),
}


class Command(BaseCommand):
    help = "Выводит мгновенный модуль и ядро Прони для модели пружина-демпфер"

    def add_arguments(self, parser):
        parser.add_argument("variant", choices=sorted(VARIANTS))
        parser.add_argument("params", nargs="+", type=float, help="Константы модели по порядку")
        parser.add_argument("--output", help="CSV со слагаемыми ядра (amplitude, rate)")

    def handle(self, *args, **options):
        derive, names = VARIANTS[options["variant"]]
        params = options["params"]
        if len(params) != len(names):
            raise CommandError(f"Модель {options['variant']} требует параметры {', '.join(names)}", returncode=2)

        try:
            model = derive(*params)
        except VidLabError as e:
            raise CommandError(str(e), returncode=EXIT_CODES[status_for(e)])

        self.stdout.write(f"instantaneous={model.instantaneous.value()!r}")
        self.stdout.write(f"equilibrium={model.equilibrium.value()!r}")
        for name, value in model.details.items():
            self.stdout.write(f"{name}={value!r}")
        for term in model.kernel.terms:
            self.stdout.write(f"term amplitude={term.amplitude.value()!r} rate={term.rate!r}")

        if options["output"]:
            path = Path(options["output"])
            path.parent.mkdir(parents=True, exist_ok=True)
            with path.open("w", newline="", encoding="utf-8") as handle:
                writer = csv.writer(handle, lineterminator="\n")
                writer.writerow(["amplitude", "rate"])
                for term in model.kernel.terms:
                    writer.writerow([repr(term.amplitude.value()), repr(term.rate)])
            self.stdout.write(f"Слагаемые ядра записаны в {path}")
