from dynamics.management.base import ExperimentCommand


class Command(ExperimentCommand):
    help = 'Checks the pathwise Ornstein-Uhlenbeck construction and its bounds'
    command_name = 'ou_check'
