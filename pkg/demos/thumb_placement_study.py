"""Compare thumb placements across the builtin study objects.

Runs a small design study: four thumb-mount positions evaluated against the
four primitive objects, ranked by mean alignment energy. Prints the full
report table, which is the same artifact the `handstudio study` command and
the HTTP report endpoint produce.
"""

from handstudio.prefab import default_coupling, make_hand
from handstudio.solver import SolveOptions
from handstudio.studio.objects import OBJECT_NAMES, make_study_task
from handstudio.studio.study import StudyVariant, run_study


def main():
    model = make_hand(n_fingers=2, with_thumb=True)
    coupling = default_coupling(model)

    variants = tuple(
        StudyVariant(name=name, edits=(
            {"joint": "thumb_mount", "translation": list(offset)},))
        for name, offset in (
            ("thumb_stock", (0.0, 0.0, 0.0)),
            ("thumb_forward", (0.01, 0.0, 0.0)),
            ("thumb_back", (-0.01, 0.0, 0.0)),
            ("thumb_raised", (0.0, 0.0, 0.01)),
        ))
    tasks = tuple(make_study_task(model, name) for name in OBJECT_NAMES)

    report = run_study(model, coupling, variants, tasks,
                       options=SolveOptions(restarts=2, max_iterations=150,
                                            seed=0))
    print(report.table())


if __name__ == "__main__":
    main()
