import math
import unittest
from collections import Counter

import numpy as np

from streamforge.eventStream import (
    Event, Lifecycle, Stream, case_history, concurrency_at,
    concurrency_profile, is_temporally_ordered, pair_intervals
)

from .oracles import brute_concurrency, brute_pairs, random_stream, stream_of


class TestEvent(unittest.TestCase):
    def test_invalid_events_raise(self):
        with self.subTest("negative ts"):
            self.assertRaises(
                ValueError, Event, "c", "A", -1, Lifecycle.START, 0
            )
        with self.subTest("negative arrival"):
            self.assertRaises(
                ValueError, Event, "c", "A", 0, Lifecycle.START, -3
            )
        with self.subTest("own parent"):
            self.assertRaises(
                ValueError, Event, "c", "A", 0, Lifecycle.START, 0, "c"
            )
        with self.subTest("lifecycle type"):
            self.assertRaises(TypeError, Event, "c", "A", 0, "start", 0)

    def test_lifecycle_flags(self):
        e = Event("c", "A", 0, Lifecycle.END, 0)
        self.assertTrue(e.is_end)
        self.assertFalse(e.is_start)


class TestStream(unittest.TestCase):
    def test_arrival_order_enforced(self):
        a = Event("c", "A", 0, Lifecycle.START, 5)
        b = Event("c", "A", 1, Lifecycle.END, 2)
        self.assertRaises(ValueError, Stream, [a, b])

    def test_from_events_is_stable_and_idempotent(self):
        rng = np.random.default_rng(3)
        stream = random_stream(rng, 50)
        shuffled = list(stream)
        rng.shuffle(shuffled)
        once = Stream.from_events(shuffled)
        self.assertEqual(once, Stream.from_events(list(once)))
        self.assertEqual(
            [e.arrival for e in once], sorted(e.arrival for e in stream)
        )

        ties = [Event("c", str(i), 0, Lifecycle.START, 1) for i in range(5)]
        self.assertEqual(list(Stream.from_events(ties)), ties)

    def test_slice_is_stream(self):
        stream = stream_of(("c", "A", 0, "s"), ("c", "A", 2, "e"))
        self.assertIsInstance(stream[:1], Stream)
        self.assertEqual(len(stream[:1]), 1)

    def test_cases_in_first_arrival_order(self):
        stream = stream_of(
            ("c2", "A", 0, "s"), ("c1", "A", 0, "s"), ("c2", "A", 1, "e")
        )
        self.assertEqual(stream.cases(), ["c2", "c1"])


class TestPairIntervals(unittest.TestCase):
    def test_single_pair(self):
        instances, unmatched = pair_intervals(
            stream_of(("c1", "A", 0, "s"), ("c1", "A", 5, "e"))
        )
        self.assertEqual(
            [(i.case, i.activity, i.start_ts, i.end_ts) for i in instances],
            [("c1", "A", 0, 5)]
        )
        self.assertEqual(unmatched, [])

    def test_empty(self):
        self.assertEqual(pair_intervals(Stream()), ([], []))

    def test_fifo_overlap(self):
        instances, _ = pair_intervals(stream_of(
            ("c1", "A", 0, "s"), ("c1", "A", 2, "s"),
            ("c1", "A", 3, "e"), ("c1", "A", 9, "e"),
        ))
        self.assertEqual(
            sorted((i.start_ts, i.end_ts) for i in instances),
            [(0, 3), (2, 9)]
        )

    def test_unmatched(self):
        stream = stream_of(
            ("c1", "A", 4, "e"), ("c1", "B", 1, "s"), ("c2", "A", 5, "s"),
        )
        instances, unmatched = pair_intervals(stream)
        self.assertEqual(instances, [])
        self.assertEqual(unmatched, list(stream))

    def test_matches_oracle(self):
        rng = np.random.default_rng(0)
        for n in range(300):
            stream = random_stream(rng, int(rng.integers(0, 60)))
            instances, unmatched = pair_intervals(stream)
            pairs, orphan_idx = brute_pairs(stream)
            with self.subTest(stream=n):
                self.assertEqual(
                    Counter((i.case, i.activity, i.start_ts, i.end_ts)
                            for i in instances),
                    Counter(pairs)
                )
                self.assertEqual(unmatched, [stream[i] for i in orphan_idx])
                self.assertEqual(
                    2 * len(instances) + len(unmatched), len(stream)
                )
                self.assertTrue(
                    all(i.end_ts >= i.start_ts for i in instances)
                )


class TestOrdering(unittest.TestCase):
    def test_examples(self):
        def by_ts(*ts):
            return Stream([
                Event("c", "A", t, Lifecycle.START, i) for i, t in enumerate(ts)
            ])

        self.assertTrue(is_temporally_ordered(by_ts(1, 2, 2, 5)))
        self.assertFalse(is_temporally_ordered(by_ts(1, 3, 2)))
        self.assertTrue(is_temporally_ordered(by_ts(7)))


class TestConcurrency(unittest.TestCase):
    def setUp(self):
        self.stream = stream_of(
            ("c1", "A", 0, "s"), ("c2", "B", 3, "s"),
            ("c1", "A", 5, "e"), ("c2", "B", 9, "e"),
        )

    def test_examples(self):
        with self.subTest("overlap"):
            self.assertEqual(concurrency_at(self.stream, 4), 2)
        with self.subTest("before all starts"):
            self.assertEqual(concurrency_at(self.stream[2:], -1), 0)
        with self.subTest("inclusive end"):
            self.assertEqual(concurrency_at(self.stream, 5), 2)
            single = stream_of(("c1", "A", 0, "s"), ("c1", "A", 5, "e"))
            self.assertEqual(concurrency_at(single, 5), 1)
            self.assertEqual(concurrency_at(single, 6), 0)

    def test_open_instances_count_from_start(self):
        stream = stream_of(("c1", "A", 2, "s"))
        self.assertEqual(list(concurrency_profile(stream, [1, 2, 100])), [0, 1, 1])

    def test_matches_oracle(self):
        rng = np.random.default_rng(1)
        for n in range(100):
            stream = random_stream(rng, int(rng.integers(1, 40)))
            grid = np.arange(-1, 32)
            profile = concurrency_profile(stream, grid)
            with self.subTest(stream=n):
                self.assertEqual(
                    list(profile),
                    [brute_concurrency(stream, t) for t in grid]
                )


class TestCaseHistory(unittest.TestCase):
    def setUp(self):
        self.stream = stream_of(
            ("c1", "A", 0, "s"), ("c2", "X", 1, "s"), ("c1", "A", 4, "e"),
            ("c1", "B", 3, "s"), ("c2", "X", 2, "e"), ("c1", "B", 8, "e"),
        )

    def test_absent_case(self):
        self.assertEqual(len(case_history(self.stream, "c9", math.inf)), 0)

    def test_full_history(self):
        history = case_history(self.stream, "c1", 8)
        self.assertEqual(len(history), 4)
        self.assertEqual(
            [(e.activity, e.ts) for e in history.events],
            [("A", 0), ("B", 3), ("A", 4), ("B", 8)]
        )

    def test_mid_time_filter(self):
        history = case_history(self.stream, "c1", 3)
        self.assertEqual(history.activities(), ["A", "B"])

    def test_ties_by_arrival_then_activity(self):
        stream = Stream([
            Event("c", "B", 1, Lifecycle.START, 0),
            Event("c", "A", 1, Lifecycle.START, 0),
            Event("c", "C", 1, Lifecycle.START, 1),
            Event("c", "Z", 0, Lifecycle.START, 2),
        ])
        self.assertEqual(
            case_history(stream, "c", 1).activities(), ["Z", "A", "B", "C"]
        )

    def test_partition_reconstitutes_stream(self):
        stream = random_stream(np.random.default_rng(5), 80)
        events = []
        for case in stream.cases():
            events.extend(case_history(stream, case, math.inf).events)
        self.assertEqual(Counter(events), Counter(stream))


if __name__ == '__main__':
    unittest.main()
