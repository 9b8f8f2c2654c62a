import pytest

from choreo.choreo_enums import ProtocolName
from choreo.constants import OUTPUT_DIR_ENV_VAR, SEED_ENV_VAR
from choreo.global_lts import global_compile
from choreo.protocols import build_instance


@pytest.fixture(scope="session", autouse=True)
def choreo_output_dir(tmp_path_factory):
    """Counterexamples and default trace paths land in a throwaway directory."""
    out = tmp_path_factory.mktemp("choreo-out")
    with pytest.MonkeyPatch.context() as mp:
        mp.setenv(OUTPUT_DIR_ENV_VAR, str(out))
        mp.delenv(SEED_ENV_VAR, raising=False)
        yield out


@pytest.fixture(scope="session")
def simple_vote_instance():
    """L(1,0,0), R(4,1,1), p = [true], x = [true, true, false]."""
    return build_instance(ProtocolName.SIMPLE_VOTE)


@pytest.fixture(scope="session")
def bosco_instance():
    return build_instance(ProtocolName.BOSCO, n=3, f=1, b=1, inputs={"R": [True, False]})


@pytest.fixture(scope="session")
def seqpaxos_instance():
    return build_instance(ProtocolName.SEQPAXOS, n=2, f=1, b=0, value_size=2)


@pytest.fixture(scope="session")
def simple_vote_system(simple_vote_instance):
    return global_compile(simple_vote_instance.closed(), simple_vote_instance.config)


@pytest.fixture(scope="session")
def bosco_system(bosco_instance):
    return global_compile(bosco_instance.closed(), bosco_instance.config)


@pytest.fixture(scope="session")
def seqpaxos_system(seqpaxos_instance):
    return global_compile(seqpaxos_instance.closed(), seqpaxos_instance.config)
