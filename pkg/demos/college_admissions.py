"""
Two colleges, one admission rate
================================

Both toy colleges admit 32% (or 50%) of each gender. Only the causal
view tells them apart: in the first, departments admit on a hobby that
tracks gender exactly.
"""
from fairkit import CausalModel, demographic_parity, justifiably_fair, k_fair, load_csv, load_dag, load_spec
from fairkit.cli import FIXTURE_DIR

for stem in ("college1", "college2"):
    dag = load_dag(FIXTURE_DIR / f"{stem}.dag")
    data = load_csv(FIXTURE_DIR / f"{stem}.csv", schema=dag.variables)
    spec = load_spec(FIXTURE_DIR / f"{stem}.spec").resolve(data.columns)
    print(f"--- {stem} ({data.total} applicants)")

    # associational view: the rates match in both colleges
    print(demographic_parity(data, spec).values)

    # intervene on gender inside each department
    model = CausalModel(data, dag)
    for dept in dag.domain("D"):
        rates = {g: model.prob("O", "1", {"G": g, "D": dept}) for g in dag.domain("G")}
        print(f"  D={dept}: {rates}")

    print("k-fair over {D}:", k_fair(data, dag, spec, ["D"]).verdict)
    verdict = justifiably_fair(data, dag, spec)
    print("justifiably fair:", verdict.verdict, verdict.evidence)
