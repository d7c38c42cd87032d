"""
`pinn check`: numerical self-tests that need no trained network.

Exact solutions must satisfy their equations, elementary derivatives and
network jets must agree with finite differences, and the reverse sweep of
the total loss must agree with differences of the loss itself.
"""
import logging
from dataclasses import dataclass

import numpy as np

from autodiff.checks import central_difference, derivative_check, scaled_error, second_difference
from autodiff.functions import erf, exp, tanh
from core.exceptions import AcceptanceError
from core.rng import seeded_generator
from networks.activations import GELU, SIGMOID
from networks.mlp import evaluate_jet, init_glorot, predict
from problems.equations import allen_cahn_problem, exact_residual_probe, nws_problem
from sampling.points import sample_uniform
from training.trainer import loss_and_gradient

logger = logging.getLogger(__name__)

FIRST_ORDER = 1e-5
SECOND_ORDER = 1e-3
FD_STEP = 1e-4
PARAMETER_STEP = 1e-6


@dataclass(frozen=True)
class CheckResult:
    name: str
    error: float
    tolerance: float

    @property
    def passed(self):
        return bool(self.error <= self.tolerance)

    def __str__(self):
        verdict = 'ok' if self.passed else 'FAILED'
        return f"{self.name:<28} {self.error:10.3e}  (limit {self.tolerance:.0e})  {verdict}"


def _domain_points(seed, count=1000):
    return seeded_generator(seed, 'check-points').uniform(0.0, 1.0, size=(count, 2))


def check_exact_solutions(seed=0):
    points = _domain_points(seed)
    return [
        CheckResult('nws exact residual', exact_residual_probe(nws_problem(), points), 1e-10),
        CheckResult('allen-cahn exact residual', exact_residual_probe(allen_cahn_problem(), points), 5e-5),
    ]


def check_elementary_functions(seed=0):
    rng = seeded_generator(seed, 'check-functions')
    first = second = 0.0
    for fn in (exp, tanh, erf, GELU, SIGMOID):
        for point in rng.uniform(-2.0, 2.0, size=10):
            report = derivative_check(fn, [point], step=FD_STEP)
            first = max(first, report.first_order, report.gradient)
            second = max(second, report.second_order)
    return [
        CheckResult('function derivatives', first, FIRST_ORDER),
        CheckResult('function second derivatives', second, SECOND_ORDER),
    ]


def check_network_jets(seed=0, networks=10):
    rng = seeded_generator(seed, 'check-jets')
    first = second = 0.0
    for index in range(networks):
        net = init_glorot([2, 8, 8, 1], seed=seed + index)

        def u(t, x):
            return predict(net, t, x)

        for point in rng.uniform(0.0, 1.0, size=(5, 2)):
            jet = evaluate_jet(net, point[0], point[1])
            first = max(first,
                        scaled_error(jet.dt, central_difference(u, point, 0, FD_STEP)),
                        scaled_error(jet.dx, central_difference(u, point, 1, FD_STEP)))
            second = max(second, scaled_error(jet.dxx, second_difference(u, point, 1, FD_STEP)))
    return [
        CheckResult('network jets', first, FIRST_ORDER),
        CheckResult('network second derivatives', second, SECOND_ORDER),
    ]


def check_loss_gradients(seed=0, networks=10):
    """Reverse-sweep gradient of the NWS total loss against central differences."""
    pde = nws_problem()
    samples = sample_uniform(pde, 4, 4, 8, seed=seed)
    worst = 0.0
    for index in range(networks):
        net = init_glorot([2, 5, 5, 1], seed=seed + index)
        _, gradient = loss_and_gradient(net, pde, samples)
        flat = net.parameters()
        reference = np.empty_like(flat)
        for i in range(flat.size):
            up, down = flat.copy(), flat.copy()
            up[i] += PARAMETER_STEP
            down[i] -= PARAMETER_STEP
            loss_up = loss_and_gradient(net.with_parameters(up), pde, samples)[0].total
            loss_down = loss_and_gradient(net.with_parameters(down), pde, samples)[0].total
            reference[i] = (loss_up - loss_down) / (2.0 * PARAMETER_STEP)
        worst = max(worst, scaled_error(gradient, reference))
    return [CheckResult('loss gradients', worst, FIRST_ORDER)]


def run_checks(seed=0):
    results = []
    for check in (check_exact_solutions, check_elementary_functions,
                  check_network_jets, check_loss_gradients):
        results.extend(check(seed))
    for result in results:
        log = logger.info if result.passed else logger.error
        log(str(result))
    return results


def cmd_check(seed=0):
    results = run_checks(seed)
    failed = [result.name for result in results if not result.passed]
    if failed:
        raise AcceptanceError(f"{len(failed)} of {len(results)} self-checks failed: {', '.join(failed)}")
    return results
