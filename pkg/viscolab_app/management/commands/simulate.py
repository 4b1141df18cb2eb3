from django.core.management.base import BaseCommand, CommandError

from viscolab_app.services.scenarios import scenario_path
from viscolab_app.services.services import LaboratoryService

FIT_MODELS = {"power": "power", "exp": "exponential", "exponential": "exponential"}


class Command(BaseCommand):
    help = "Выполняет сценарий VID-системы и записывает трассу энергии в CSV"

    def add_arguments(self, parser):
        parser.add_argument("config", help="Имя встроенного сценария или путь к JSON-конфигурации")
        parser.add_argument("--fit", choices=sorted(FIT_MODELS), help="Подгонка затухания E на [T/2, T]")
        parser.add_argument("--no-record", action="store_true", help="Не сохранять запуск в реестре")
        parser.add_argument("--output-dir", help="Каталог для относительных путей вывода")

    def handle(self, *args, **options):
        fit = FIT_MODELS[options["fit"]] if options["fit"] else None
        result = LaboratoryService.simulate(scenario_path(options["config"]), fit=fit,
                                            record=not options["no_record"], output_dir=options["output_dir"])
        if not result.ok:
            raise CommandError(result.message, returncode=result.exit_code)
        self.stdout.write(result.message)
