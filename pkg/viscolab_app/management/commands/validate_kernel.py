import json

from django.core.management.base import BaseCommand, CommandError

from viscolab_app.services.exceptions import VidLabError
from viscolab_app.services.scenarios import scenario_path
from viscolab_app.services.services import EXIT_CODES, LaboratoryService, status_for


class Command(BaseCommand):
    help = "Проверяет допущения о ядре сценария; код 0 только при выполнении всех условий"

    def add_arguments(self, parser):
        parser.add_argument("config", help="Имя встроенного сценария или путь к JSON-конфигурации")

    def handle(self, *args, **options):
        try:
            config, report = LaboratoryService.certify(scenario_path(options["config"]))
        except VidLabError as e:
            raise CommandError(str(e), returncode=EXIT_CODES[status_for(e)])

        self.stdout.write(json.dumps({"scenario": config.name, **report.as_dict()}, indent=2, ensure_ascii=False))
        if not report.satisfied:
            raise CommandError(f"{options['config']}: ядро не прошло сертификацию: {', '.join(report.violations)}",
                               returncode=1)
