# pipeline.py
"""End-to-end scenario runs: reach, verify, sample, plot, persist."""
import logging
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Optional, Sequence

from czreach.reach import ReachResult
from czreach.sampling import ContainmentReport, sample_trajectories
from czreach.scenario import Scenario, compute_reach, save_result, write_json
from czreach.verify import VerificationReport, Verdict, check_avoid

logger = logging.getLogger(__name__)

EXIT_SAFE = 0
EXIT_ERROR = 1
EXIT_NOT_SAFE = 2


def exit_code(report: VerificationReport) -> int:
    return EXIT_SAFE if report.verdict is Verdict.SAFE else EXIT_NOT_SAFE


@dataclass
class RunOutcome:
    result: ReachResult
    report: VerificationReport
    artifacts: Dict[str, Path] = field(default_factory=dict)
    containment: Optional[ContainmentReport] = None

    @property
    def exit_code(self):
        return exit_code(self.report)


def run_scenario(
    scenario: Scenario,
    out_dir=None,
    plot_dims: Optional[Sequence[int]] = None,
    samples: int = 0,
    seed: Optional[int] = None,
    method: Optional[str] = None,
    max_members: Optional[int] = None,
) -> RunOutcome:
    """Compute, verify, optionally sample and plot; write result.json and report.json to ``out_dir``."""
    if method is not None and method != scenario.method:
        scenario.method = method
    total = 3 + (samples > 0) + (plot_dims is not None)
    step = 1
    label = scenario.name or scenario.path
    print(f"--- Running scenario '{label}' ({scenario.method}, T={scenario.horizon}) ---")

    print(f"\n[Step {step}/{total}] Computing reachable sets...")
    start = time.perf_counter()
    result = compute_reach(scenario, max_members=max_members)
    print(
        f"Computed {result.horizon} steps in {(time.perf_counter() - start) * 1000.0:.1f} ms; "
        f"members per step: {result.member_counts}"
    )

    step += 1
    print(f"[Step {step}/{total}] Checking {len(scenario.unsafe_sets)} unsafe sets...")
    report = check_avoid(result, scenario.unsafe_sets)
    print(
        f"Verdict: {report.verdict.value} ({report.lp_solved} LPs solved, "
        f"{report.prefiltered} pairs screened by hulls)"
    )
    outcome = RunOutcome(result, report)

    if samples > 0:
        step += 1
        print(f"[Step {step}/{total}] Simulating {samples} trajectories...")
        outcome.containment = sample_trajectories(
            scenario, samples, result=result, seed=scenario.seed if seed is None else seed,
        )
        print(f"Contained per step: {outcome.containment.contained}")

    if plot_dims is not None:
        step += 1
        print(f"[Step {step}/{total}] Plotting dimensions {tuple(plot_dims)}...")
        if out_dir is None:
            print("No output directory given; plot skipped.")
        else:
            from czreach.plotting import plot_reach

            trajectories = outcome.containment.trajectories if outcome.containment is not None else None
            svg = Path(out_dir) / "reach.svg"
            summary = plot_reach(result, plot_dims, svg, scenario.unsafe_sets, trajectories, title=label)
            outcome.artifacts["plot"] = svg
            print(f"Drew {len(summary.drawn)} steps, skipped {len(summary.skipped)}.")

    step += 1
    print(f"[Step {step}/{total}] Writing artifacts...")
    if out_dir is not None:
        out_dir = Path(out_dir)
        outcome.artifacts["result"] = save_result(out_dir / "result.json", result)
        outcome.artifacts["report"] = write_json(out_dir / "report.json", report.to_dict())
        if outcome.containment is not None:
            outcome.artifacts["samples"] = write_json(out_dir / "samples.json", outcome.containment.to_dict())
        for name, path in outcome.artifacts.items():
            print(f"  {name}: {path}")
    else:
        print("No output directory given; nothing written.")

    print("\n--- Run Finished ---")
    return outcome
