import os
import time

import pytest

from hyllkit import kernel as K
from hyllkit.prover import extract_skeletons, load_and_run, witnesses

ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
MODELS = os.path.join(ROOT, "models")
PROOFS = os.path.join(ROOT, "proofs")
GOLDEN = os.path.join(ROOT, "golden")

PROOF_SCRIPTS = ("property1", "property1_split", "property2",
                 "property3", "property4")


class ProofRun:
    """One proof script executed once and shared across tests."""

    def __init__(self, name: str):
        self.name = name
        t0 = time.monotonic()
        self.state = load_and_run(os.path.join(PROOFS, f"{name}.hp"))
        self.derivations = []
        for dname, root, skel in extract_skeletons(self.state):
            d = K.elaborate(root, skel, allow_cut=False)
            K.check_derivation(d, allow_cut=False)
            self.derivations.append((dname, d))
        self.seconds = time.monotonic() - t0
        self.witnesses = witnesses(self.state)
        self.certificate = K.certificate_to_json(
            self.derivations, self.state.signature, allow_cut=False)


@pytest.fixture(scope="session")
def proof_runs():
    return {name: ProofRun(name) for name in PROOF_SCRIPTS}
