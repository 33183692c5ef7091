from fractions import Fraction

import pytest

from stochsched import (
    IIDModel,
    JobAlphabet,
    MachineSet,
    MarkovModel,
    MixtureModel,
    SchedulingProblem,
)


@pytest.fixture(scope="session")
def desk_alphabet():
    return JobAlphabet({"a": 1, "b": 3})


@pytest.fixture(scope="session")
def desk_machines():
    return MachineSet((Fraction(1), Fraction(2)))


@pytest.fixture(scope="session")
def iid_problem(desk_alphabet, desk_machines):
    process = IIDModel({"a": Fraction(1, 2), "b": Fraction(1, 2)})
    return SchedulingProblem(desk_alphabet, desk_machines, process)


@pytest.fixture(scope="session")
def markov_problem(desk_alphabet, desk_machines):
    process = MarkovModel(
        symbols=("a", "b"),
        transition=(
            (Fraction(9, 10), Fraction(1, 10)),
            (Fraction(1, 2), Fraction(1, 2)),
        ),
        initial=(Fraction(5, 6), Fraction(1, 6)),
    )
    return SchedulingProblem(desk_alphabet, desk_machines, process)


@pytest.fixture(scope="session")
def mixture_problem(desk_alphabet, desk_machines):
    uniform = IIDModel({"a": Fraction(1, 2), "b": Fraction(1, 2)})
    skewed = IIDModel({"a": Fraction(3, 4), "b": Fraction(1, 4)})
    process = MixtureModel(((Fraction(1, 2), uniform), (Fraction(1, 2), skewed)))
    return SchedulingProblem(desk_alphabet, desk_machines, process)
