"""Multi-user beam/slot scheduling: exact, brute-force and greedy solvers."""
from .bruteforce import solve_bruteforce
from .exact import solve_exact
from .greedy import solve_greedy
from .kernels import BACKEND
from .problem import (
    GLOBAL_N,
    PER_BEAM_N,
    UNASSIGNED,
    InstanceTooLarge,
    ProblemInstance,
    ScheduleSolution,
    check_solution,
    instance_from_dict,
    instance_to_dict,
    load_instance,
    random_instance,
    save_instance,
    solution_to_dict,
)

SOLVERS = {
    "exact": solve_exact,
    "greedy": solve_greedy,
    "bruteforce": solve_bruteforce,
}

__all__ = [
    "BACKEND", "GLOBAL_N", "PER_BEAM_N", "SOLVERS", "UNASSIGNED", "InstanceTooLarge",
    "ProblemInstance", "ScheduleSolution", "check_solution", "instance_from_dict",
    "instance_to_dict", "load_instance", "random_instance", "save_instance", "solution_to_dict",
    "solve_bruteforce", "solve_exact", "solve_greedy",
]
