"""Smoke test for the dafsp_py extension module."""

import json
import pathlib

import dafsp_py

EXAMPLE = pathlib.Path(__file__).resolve().parent.parent / "crates/core/tests/data/example.json"


def main():
    inst = dafsp_py.Instance.from_json(EXAMPLE.read_text())
    assert (inst.jobs, inst.factories, inst.machines, inst.products, inst.buffer) == (5, 2, 3, 2, 3)

    ev = dafsp_py.evaluate(inst, [1, 4, 5, 3, 2], [2, 2, 1, 1, 2])
    assert ev.lambda_prime == [1, 4, 3, 2, 5], ev.lambda_prime
    assert (ev.cm_max, ev.ca_max) == (25, 30)
    assert ev.sigma == [1, 2]

    assert dafsp_py.idam(inst, [1, 4, 5, 3, 2]) == [1, 4, 3, 2, 5]
    assert dafsp_py.iba(inst, [1, 4]) is True
    assert dafsp_py.iba(inst, [2]) is True
    assert dafsp_py.iba(inst, [1, 4, 5]) is False

    best = dafsp_py.solve(inst, seed=3, max_generations=3)
    assert best.ca_max <= 30

    gen = dafsp_py.generate(10, 2, 2, 2, seed=1)
    assert json.loads(gen.to_json())["jobs"] == 10

    try:
        dafsp_py.evaluate(inst, [1, 1, 5, 3, 2], [2, 2, 1, 1, 2])
    except ValueError:
        pass
    else:
        raise AssertionError("duplicate job accepted")
    print("smoke test passed:", ev)


if __name__ == "__main__":
    main()
