"""Score every candidate sign placement against the Christoffel oracle,
then show the literal reading failing on a flat metric."""
from orthocurv.curvature import LITERAL, RESOLVED, calibrate, closed_form_table
from orthocurv.fixtures import load_fixture
from orthocurv.oracle import compare, riemann_frame


def main():
    res = calibrate()
    print(f"selected   {res.convention.label}")
    print(f"residual   {res.residual:.2e}   runner-up {res.runner_up:.3f}")
    print(f"passing    {res.candidates_passing} of 1024")
    assert res.convention == RESOLVED

    milne = load_fixture("milne")
    for conv in (RESOLVED, LITERAL):
        r = compare(closed_form_table(milne, conv), riemann_frame(milne), milne)
        where = "" if r.agree else f", worst {r.worst_component}"
        print(f"milne under {conv.label}: {'agree' if r.agree else 'mismatch'}{where}")


if __name__ == "__main__":
    main()
