from dynamics.management.base import ExperimentCommand


class Command(ExperimentCommand):
    help = 'Finds random hyperbolic solutions near a hyperbolic equilibrium'
    command_name = 'hyperbolic'
