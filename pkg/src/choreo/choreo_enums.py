import enum


class LabelKind(enum.Enum):
    SEND = "send"
    BYZ_SEND = "byz"
    RECEIVE = "receive"


class Verdict(enum.Enum):
    HOLDS = "holds"
    VIOLATED = "violated"
    INCONCLUSIVE = "inconclusive"


class CheckName(enum.Enum):
    ONE_STEP = "one-step"
    BOSCO_AGREEMENT = "bosco-agreement"
    SEQPAXOS_AGREEMENT = "seqpaxos-agreement"
    COUNTING_LEMMA = "counting-lemma"
    ADEQUACY = "adequacy"
    ALIGNMENT = "alignment"
    UC_PRIME = "uc-prime"
    SIMPLE_VOTE_SAFETY = "simplevote-safety"


class ProtocolName(enum.Enum):
    SIMPLE_VOTE = "simplevote"
    BOSCO = "bosco"
    SEQPAXOS = "seqpaxos"
