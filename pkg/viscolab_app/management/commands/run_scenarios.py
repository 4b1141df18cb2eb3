from django.core.management.base import BaseCommand, CommandError

from viscolab_app.services.scenarios import bundled_scenarios, scenario_path
from viscolab_app.services.services import LaboratoryService


class Command(BaseCommand):
    help = "Ставит сценарии в очередь Celery (по умолчанию всю встроенную библиотеку)"

    def add_arguments(self, parser):
        parser.add_argument("names", nargs="*", help="Имена встроенных сценариев или пути к конфигурациям")

    def handle(self, *args, **options):
        paths = [scenario_path(name) for name in options["names"]] or bundled_scenarios()
        missing = [str(path) for path in paths if not path.exists()]
        if missing:
            raise CommandError(f"Сценарии не найдены: {', '.join(missing)}", returncode=2)

        task_ids = LaboratoryService.enqueue(paths)
        for path, task_id in zip(paths, task_ids):
            self.stdout.write(f"{path.stem}: {task_id}")
