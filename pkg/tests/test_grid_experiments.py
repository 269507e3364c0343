"""Grid-scale stability runs from the shipped presets (minutes each)"""

import pytest

from src.cli import load_preset
from src.runner import ExperimentPlan, RunSpec, run_configuration
from src.scheduling.weights import WeightFunctionSpec, WeightKind

pytestmark = pytest.mark.slow

LOGLOG = WeightFunctionSpec(kind=WeightKind.LOGLOG)
LOG_OVER_LOGLOG = WeightFunctionSpec(kind=WeightKind.LOG_OVER_LOGLOG)
SQRT = WeightFunctionSpec(kind=WeightKind.SQRT)


def _run(plan: ExperimentPlan, kind: WeightFunctionSpec, rho: float, seed: int, out_root) -> dict:
    run = RunSpec(kind=kind, rho=rho, seed=seed)
    result = run_configuration(plan.model_dump(mode="json"), run.model_dump(mode="json"), str(out_root))
    assert result["status"] == "completed", result.get("error")
    return result


def _without_oracle(name: str) -> ExperimentPlan:
    plan = load_preset(name)
    return plan.model_copy(update={"sim": plan.sim.model_copy(update={"oracle": False})})


class TestGridStability:
    """log log and log/log log both stay stable; log/log log keeps queues smaller"""

    @pytest.mark.parametrize("seed", [0, 1, 2])
    @pytest.mark.parametrize("rho", [0.80, 0.85])
    def test_ordering(self, rho, seed, tmp_path):
        plan = _without_oracle("paper_grid")
        assert plan.sim.horizon >= 500_000

        loglog = _run(plan, LOGLOG, rho, seed, tmp_path)
        log_over_loglog = _run(plan, LOG_OVER_LOGLOG, rho, seed, tmp_path)

        assert loglog["bounded"]
        assert log_over_loglog["bounded"]
        assert log_over_loglog["time_avg_queue"] < loglog["time_avg_queue"]


class TestSqrtInstability:
    """sqrt weights drive queues far above log/log log at the same load"""

    def test_max_queue_gap(self, tmp_path):
        plan = _without_oracle("sqrt_instability")
        sqrt = _run(plan, SQRT, 0.92, 0, tmp_path)
        log_over_loglog = _run(plan, LOG_OVER_LOGLOG, 0.92, 0, tmp_path)

        # seed 0, 5e5 slots: 16901 vs 3948
        assert sqrt["max_queue"] > 3 * log_over_loglog["max_queue"]
