"""
Generate the sample scenario files
"""

import os
import sys

sys.path.insert(0, os.path.join(os.path.dirname(os.path.abspath(__file__)), "..", ".."))

from src.cli.scenario import dump_scenario  # noqa: E402
from src.cli.schemas import Scenario  # noqa: E402

EXAMPLE1_B = [
    [0.0, 0.0, 1.0, 0.0],
    [0.25, 0.0, 0.0, 0.5],
    [0.75, 0.0, 0.0, 0.5],
    [0.0, 1.0, 0.0, 0.0],
]

# Principal part of a unit Timoshenko beam, p_t + M p_x = 0
BEAM_M = [
    [0.0, -1.0, 0.0, 0.0],
    [-1.0, 0.0, 0.0, 0.0],
    [0.0, 0.0, 0.0, -1.0],
    [0.0, 0.0, -1.0, 0.0],
]

# Bump on [0.2, 0.5], ramp elsewhere zero
BUMP = {"breakpoints": [0.0, 0.2, 0.5, 1.0], "pieces": [[0.0], [0.0, 4.0, -13.333333333333334], [0.0]]}
RAMP = {"breakpoints": [0.0, 1.0], "pieces": [[0.0, 1.0]]}

scenarios = {
    "example1": {
        "name": "example1",
        "description": "Two edges with one component in each direction; periodic limit with d = 2",
        "port_hamiltonian": {"m_plus": 2, "B": EXAMPLE1_B},
        "initial_data": {"u1+": BUMP, "u2-": RAMP},
        "run": {"times": [0.0, 1.25, 2.5, 10.0]},
    },
    "example1_doubled": {
        "name": "example1_doubled",
        "description": "Example 1 with velocity 2 on the first component; c = 2, multiples (1, 2, 2, 2)",
        "port_hamiltonian": {
            "m_plus": 2,
            "B": EXAMPLE1_B,
            "velocities": [{"pieces": [[2.0]]}] + [{"pieces": [[1.0]]}] * 3,
        },
        "initial_data": {"u1+": BUMP, "u2-": RAMP},
        "run": {"times": [0.0, 0.6, 1.25]},
    },
    "beam": {
        "name": "beam",
        "description": "Chain of two Timoshenko beams, uniformly stable with rate -(ln 2)/2",
        "graph": {"vertices": [1, 2, 3],
                  "edges": [{"id": 1, "tail": 1, "head": 2}, {"id": 2, "tail": 2, "head": 3}]},
        "edge_systems": [{"edge": 1, "M": {"constant": BEAM_M}},
                         {"edge": 2, "M": {"constant": BEAM_M}}],
        "vertex_conditions": [
            {"vertex": 1, "phi": [[1.0, -3.0, 0.0, 0.0],
                                  [0.0, 0.0, 1.0, -3.0]]},
            {"vertex": 2, "phi": [[1.0, 0.0, 0.0, 0.0, -1.0, 0.0, 0.0, 0.0],
                                  [0.0, 1.0, 0.0, 0.0, 0.0, -1.0, 0.0, 0.0],
                                  [0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0],
                                  [0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0]]},
            {"vertex": 3, "phi": [[-3.0, -5.0, 0.0, 0.0],
                                  [0.0, 0.0, -3.0, -5.0]]},
        ],
        "initial_data": {"u1+": BUMP, "u3-": RAMP},
        "run": {"times": [0.0, 1.0, 10.0]},
    },
    "identity": {
        "name": "identity",
        "description": "B = I: every state returns after one unit of time",
        "port_hamiltonian": {"m_plus": 1, "B": [[1.0, 0.0], [0.0, 1.0]]},
        "initial_data": {"u1+": BUMP, "u1-": RAMP},
        "run": {"times": [0.0, 0.5, 1.0]},
    },
    "irrational": {
        "name": "irrational",
        "description": "Traverse times 1 and sqrt(2): no common reference time, oracle only",
        "port_hamiltonian": {
            "m_plus": 1,
            "B": [[0.0, 0.5], [1.0, 0.0]],
            "velocities": [{"pieces": [[1.0]]}, {"pieces": [[0.7071067811865476]]}],
        },
        "initial_data": {"u1+": BUMP},
        "run": {"times": [0.0, 1.0, 3.0]},
    },
    "singular": {
        "name": "singular",
        "description": "Singular Xi_out: assembly fails",
        "port_hamiltonian": {
            "m_plus": 1,
            "xi_out": [[1.0, 1.0], [1.0, 1.0]],
            "xi_in": [[1.0, 0.0], [0.0, 1.0]],
        },
    },
}


def create_sample_files():
    """Create sample scenario files"""

    sample_dir = os.path.join(os.path.dirname(os.path.abspath(__file__)), "scenarios")
    os.makedirs(sample_dir, exist_ok=True)

    print("="*60)
    print("CREATING SAMPLE SCENARIOS")
    print("="*60)

    for name, content in scenarios.items():
        scenario = Scenario.model_validate(content)
        filename = os.path.join(sample_dir, f"{name}.json")
        with open(filename, 'w', encoding='utf-8') as f:
            f.write(dump_scenario(scenario))
        print(f"✓ Created: {name}.json")

    print("\n" + "="*60)
    print(f"{len(scenarios)} scenarios written to {sample_dir}")
    print("="*60)

if __name__ == "__main__":
    create_sample_files()
