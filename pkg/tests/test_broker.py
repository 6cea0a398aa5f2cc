from __future__ import annotations

import threading

import pytest

from artifact import Message
from artifact.endpoints import TopicBroker
from artifact.errors import BrokerStoppedError


@pytest.fixture
def broker():
    b = TopicBroker()
    yield b
    b.stop()


def test_single_subscriber_receives_all_in_order(broker):
    sub = broker.subscribe("t")
    for i in range(100):
        assert broker.publish("t", Message(body=[i])) == 1
    got = [sub.poll(1.0).body[0] for _ in range(100)]
    assert got == list(range(100))


def test_three_subscribers_each_receive_ten(broker):
    subs = [broker.subscribe("t") for _ in range(3)]
    for i in range(10):
        assert broker.publish("t", Message(body=[i])) == 3
    for sub in subs:
        got = [sub.poll(1.0).body[0] for _ in range(10)]
        assert got == list(range(10))
    assert broker.delivered == 30


def test_publish_without_subscribers_drops(broker):
    assert broker.publish("empty", Message(body=["x"])) == 0
    sub = broker.subscribe("empty")
    assert sub.poll(0.05) is None  # no retention


def test_subscribers_get_private_copies(broker):
    a = broker.subscribe("t")
    b = broker.subscribe("t")
    broker.publish("t", Message(headers={"k": [1]}, body=[1]))
    got_a = a.poll(1.0)
    got_b = b.poll(1.0)
    got_a.headers["k"].append(2)
    assert got_b.headers["k"] == [1]


def test_stopped_broker_rejects(broker):
    broker.stop()
    with pytest.raises(BrokerStoppedError):
        broker.publish("t", Message())
    with pytest.raises(BrokerStoppedError):
        broker.subscribe("t")


def test_unsubscribe_stops_delivery(broker):
    sub = broker.subscribe("t")
    broker.unsubscribe(sub)
    assert broker.publish("t", Message(body=["x"])) == 0


def test_concurrent_publishers_one_total_order(broker):
    subs = [broker.subscribe("t") for _ in range(2)]
    per_publisher = 200

    def publish(tag):
        for i in range(per_publisher):
            broker.publish("t", Message(body=[f"{tag}:{i}"]))

    threads = [threading.Thread(target=publish, args=(t,)) for t in ("a", "b")]
    for t in threads:
        t.start()
    for t in threads:
        t.join()

    streams = []
    for sub in subs:
        got = [sub.poll(1.0).body[0] for _ in range(2 * per_publisher)]
        assert len(got) == len(set(got))  # no duplicates
        streams.append(got)
    # identical interleaving for every subscriber, each publisher's order kept
    assert streams[0] == streams[1]
    for tag in ("a", "b"):
        seq = [int(x.split(":")[1]) for x in streams[0] if x.startswith(tag)]
        assert seq == list(range(per_publisher))
