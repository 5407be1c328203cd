import numpy as np
import pytest

from walkstitch.mpc import (CapacityError, Cluster, ClusterConfig, Msg,
                            assign_machine)
from walkstitch.rng import splitmix64, splitmix64_array, substream


class TestAssignMachine:
    def test_single_machine(self):
        cfg = ClusterConfig(num_machines=1)
        assert all(assign_machine(cfg, v) == 0 for v in (0, 1, 999))

    def test_deterministic(self):
        cfg = ClusterConfig(num_machines=7)
        for v in range(50):
            assert assign_machine(cfg, v) == assign_machine(cfg, v)

    def test_balanced_over_10_machines(self):
        cfg = ClusterConfig(num_machines=10)
        loads = np.bincount([assign_machine(cfg, v) for v in range(1000)],
                            minlength=10)
        assert loads.min() >= 50 and loads.max() <= 150

    def test_vectorized_matches_scalar(self):
        cluster = Cluster(ClusterConfig(num_machines=13))
        vs = np.arange(200, dtype=np.int64)
        vec = cluster.assign_machines(vs)
        assert all(vec[v] == cluster.assign_machine(v) for v in range(200))

    def test_splitmix_array_matches_scalar(self):
        xs = np.array([0, 1, 2, 0xDEADBEEF, (1 << 63) + 5], dtype=np.uint64)
        out = splitmix64_array(xs)
        for x, o in zip(xs, out):
            assert splitmix64(int(x)) == int(o)


class TestExchange:
    def test_empty_outbox(self):
        c = Cluster()
        inbox = c.exchange([])
        assert inbox == {}
        assert c.ledger.superstep_count == 1

    def test_three_messages_canonical_order(self):
        c = Cluster()
        msgs = [Msg(dest=4, sender=9, words=1, payload="b"),
                Msg(dest=4, sender=2, words=1, payload="a"),
                Msg(dest=4, sender=9, words=1, payload="c")]
        inbox = c.exchange(msgs)
        assert [m.payload for m in inbox[4]] == ["a", "b", "c"]

    def test_capacity_violation_strict_names_machine(self):
        c = Cluster(ClusterConfig(num_machines=1, machine_capacity=10,
                                  enforce_capacity=True))
        with pytest.raises(CapacityError, match="machine 0"):
            c.exchange([Msg(dest=0, sender=1, words=11)])

    def test_capacity_violation_report_only(self):
        c = Cluster(ClusterConfig(num_machines=1, machine_capacity=10))
        c.exchange([Msg(dest=0, sender=1, words=11)])
        assert c.ledger.violations == [{"round": 0, "machine": 0, "words": 11}]

    def test_message_conservation(self):
        c = Cluster(ClusterConfig(num_machines=4))
        rng = np.random.Generator(np.random.PCG64(8))
        dest = rng.integers(0, 50, size=300)
        sender = rng.integers(0, 50, size=300)
        words = rng.integers(1, 9, size=300)
        order = c.exchange_bulk(dest, sender, words)
        rec = c.ledger.rounds[-1]
        assert rec.messages_sent == 300 == order.size
        assert rec.total_words == int(words.sum())
        assert sorted(order.tolist()) == list(range(300))

    def test_superstep_monotonic(self):
        c = Cluster()
        for i in range(5):
            assert c.ledger.superstep_count == i
            c.exchange([])

    def test_transcript_deterministic(self):
        def run():
            c = Cluster(ClusterConfig(num_machines=3))
            rng = np.random.Generator(np.random.PCG64(1))
            for _ in range(4):
                d = rng.integers(0, 20, size=60)
                s = rng.integers(0, 20, size=60)
                c.exchange_bulk(d, s, words=2)
            return c.ledger.transcript()
        assert run() == run()


class TestReport:
    def test_fresh_ledger(self):
        rep = Cluster().report()
        assert rep["supersteps"] == 0
        assert rep["rounds"] == []
        assert rep["violations"] == []

    def test_after_two_exchanges(self):
        c = Cluster()
        c.exchange([])
        c.exchange([Msg(dest=1, sender=0, words=2)])
        rep = c.report()
        assert rep["supersteps"] == 2
        assert rep["max_machine_words"] == 2

    def test_paper_rounds_pairs(self):
        from walkstitch.mpc import KIND_REPLY, KIND_REQUEST, KIND_UPDATE
        c = Cluster()
        for kind in (KIND_REQUEST, KIND_REPLY, KIND_REQUEST, KIND_REPLY, KIND_UPDATE):
            c.exchange_bulk(np.array([0]), np.array([1]), words=1, kind=kind)
        rep = c.report()
        assert rep["supersteps"] == 5
        assert rep["paper_rounds"] == 3  # two request/reply pairs + one update


class TestSubstreams:
    def test_replayable(self):
        a = substream(42, 1, 2, 3).integers(0, 1000, size=10)
        b = substream(42, 1, 2, 3).integers(0, 1000, size=10)
        assert np.array_equal(a, b)

    def test_distinct_keys_distinct_streams(self):
        a = substream(42, 1, 2, 3).integers(0, 10**9, size=8)
        b = substream(42, 1, 2, 4).integers(0, 10**9, size=8)
        c = substream(43, 1, 2, 3).integers(0, 10**9, size=8)
        assert not np.array_equal(a, b)
        assert not np.array_equal(a, c)
