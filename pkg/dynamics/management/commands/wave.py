from dynamics.management.base import ExperimentCommand


class Command(ExperimentCommand):
    help = 'Runs the noisy damped wave demonstration'
    command_name = 'wave'
