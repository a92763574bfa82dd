from dynamics.management.base import ExperimentCommand


class Command(ExperimentCommand):
    help = 'Certifies dichotomies of perturbed linear cocycles'
    command_name = 'robustness'
