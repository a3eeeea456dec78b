import json
import os
import tempfile
import unittest

import numpy as np

from streamforge.eventStream import Event, Lifecycle
from streamforge.featureOptimizer import GridCell, RunConfig
from streamforge.markovChain import tree_to_chain
from streamforge.processTree import TreeGenParams, generate_tree
from streamforge.simulation import SimulationParams, StreamDefinition, simulate
from streamforge.streamFeatures import FeatureVector
from streamforge.streamIO import (
    FEATURE_HEADER, GRID_HEADER, StreamFormatError, encode_event,
    event_to_record, load_definition, load_run_config, parse_line,
    read_features, read_grid, read_ranges, read_static_log, read_stream,
    save_definition, save_run_config, streamify, write_features, write_grid,
    write_ranges, write_stream
)


def sample_definition(seed=0):
    tree = generate_tree(TreeGenParams(n_activities=5, max_depth=3, seed=seed))
    return StreamDefinition(
        tree_to_chain(tree, n_traces=200, seed=seed),
        SimulationParams(trigger_prob=0.4, ooo_prob=0.2, ooo_max_delay=4,
                         seed=seed),
        tree=tree,
    )


class TempDirTestCase(unittest.TestCase):
    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.addCleanup(self.tmp.cleanup)

    def path(self, name):
        return os.path.join(self.tmp.name, name)

    def write_text(self, name, text):
        with open(self.path(name), "w", encoding="utf-8") as f:
            f.write(text)
        return self.path(name)


class TestRecords(unittest.TestCase):
    def test_record_layout(self):
        event = Event("c1.0", "A", 3, Lifecycle.START, 4, "c1", "src-1")
        self.assertEqual(
            encode_event(event),
            '{"case":"c1.0","activity":"A","ts":3,"lifecycle":"start",'
            '"arrival":4,"parent_case":"c1","source":"src-1"}'
        )
        self.assertEqual(
            list(event_to_record(Event("c", "A", 0, Lifecycle.END, 0))),
            ["case", "activity", "ts", "lifecycle", "arrival"]
        )

    def test_suppressed_case_ids(self):
        event = Event("c1.0", "A", 3, Lifecycle.END, 4, "c1")
        record = event_to_record(event, suppress_case_ids=True)
        self.assertNotIn("case", record)
        self.assertNotIn("parent_case", record)
        self.assertEqual(parse_line(json.dumps(record)).case, "")

    def test_invalid_lines(self):
        for line in ("not json", "[1, 2]", '{"activity":"A"}',
                     '{"case":"c","activity":"A","ts":1.5,'
                     '"lifecycle":"start","arrival":1}',
                     '{"case":"c","activity":"A","ts":1,'
                     '"lifecycle":"begin","arrival":1}',
                     '{"case":"c","activity":"A","ts":1,'
                     '"lifecycle":"start","arrival":1,"cost":3}'):
            with self.subTest(line=line):
                with self.assertRaises(StreamFormatError) as ctx:
                    parse_line(line, 7)
                self.assertEqual(ctx.exception.lineno, 7)


class TestStreamFiles(TempDirTestCase):
    def test_round_trip(self):
        stream = simulate(sample_definition(), 300)
        write_stream(stream, self.path("s.jsonl"))
        self.assertEqual(read_stream(self.path("s.jsonl")), stream)

    def test_error_line_number(self):
        good = encode_event(Event("c", "A", 0, Lifecycle.START, 0))
        path = self.write_text("bad.jsonl", f"{good}\n{good}\n{{oops\n")
        with self.assertRaises(StreamFormatError) as ctx:
            read_stream(path)
        self.assertEqual(ctx.exception.lineno, 3)
        self.assertIn("bad.jsonl:3", str(ctx.exception))

    def test_arrival_order_checked(self):
        late = encode_event(Event("c", "A", 0, Lifecycle.START, 5))
        early = encode_event(Event("c", "A", 1, Lifecycle.END, 2))
        path = self.write_text("order.jsonl", f"{late}\n{early}\n")
        with self.assertRaises(StreamFormatError) as ctx:
            read_stream(path)
        self.assertEqual(ctx.exception.lineno, 2)

    def test_empty_file(self):
        self.assertEqual(len(read_stream(self.write_text("e.jsonl", ""))), 0)


class TestDefinitionFiles(TempDirTestCase):
    def test_round_trip(self):
        definition = sample_definition(1)
        save_definition(definition, self.path("d.json"))
        self.assertEqual(load_definition(self.path("d.json")), definition)

    def test_unknown_field(self):
        data = sample_definition(2).to_dict()
        data["colour"] = "blue"
        path = self.write_text("d.json", json.dumps(data))
        self.assertRaises(StreamFormatError, load_definition, path)

    def test_invalid_json(self):
        path = self.write_text("d.json", '{"version": "1",\n  oops}')
        with self.assertRaises(StreamFormatError) as ctx:
            load_definition(path)
        self.assertEqual(ctx.exception.lineno, 2)

    def test_run_config(self):
        config = RunConfig(targets={"out_of_order": 0.5}, n_init=3, max_iter=6)
        save_run_config(config, self.path("t.json"))
        self.assertEqual(load_run_config(self.path("t.json")), config)
        path = self.write_text("bad.json", '{"targets": {"speed": 1}}')
        self.assertRaises(StreamFormatError, load_run_config, path)


class TestStaticLogs(TempDirTestCase):
    def test_atomic_rows(self):
        path = self.write_text(
            "log.csv",
            "case_id,activity,timestamp\n"
            "c2,B,7\n"
            "c1,A,3\n"
            "c1,C,7\n",
        )
        stream = streamify(read_static_log(path))
        self.assertEqual(
            [(e.case, e.activity, e.ts, e.lifecycle.value) for e in stream],
            [("c1", "A", 3, "start"), ("c1", "A", 3, "end"),
             ("c2", "B", 7, "start"), ("c2", "B", 7, "end"),
             ("c1", "C", 7, "start"), ("c1", "C", 7, "end")]
        )
        self.assertEqual([e.arrival for e in stream], list(range(6)))

    def test_lifecycle_and_iso_timestamps(self):
        path = self.write_text(
            "log.csv",
            "case_id,activity,timestamp,lifecycle\n"
            "c1,A,2024-01-01T00:00:00Z,start\n"
            "c1,A,2024-01-01T00:01:30Z,complete\n"
            "c1,B,2024-01-01T00:02:00Z,\n",
        )
        log = read_static_log(path, tick_seconds=60)
        self.assertEqual(list(log["ts"]), [0, 1, 2])
        stream = streamify(log)
        self.assertEqual(len(stream), 4)
        self.assertTrue(all(
            a.ts <= b.ts for a, b in zip(stream, list(stream)[1:])
        ))

    def test_malformed_logs(self):
        cases = {
            "missing column": "case_id,activity\nc1,A\n",
            "bad timestamp": "case_id,activity,timestamp\nc1,A,3\nc1,B,soon\n",
            "bad lifecycle":
                "case_id,activity,timestamp,lifecycle\nc1,A,3,paused\n",
            "negative": "case_id,activity,timestamp\nc1,A,-3\n",
        }
        for name, text in cases.items():
            with self.subTest(name):
                path = self.write_text("log.csv", text)
                self.assertRaises(StreamFormatError, read_static_log, path)
        with self.subTest("tick"):
            self.assertRaises(ValueError, read_static_log, path, 0)


class TestTables(TempDirTestCase):
    def test_feature_table(self):
        vectors = [
            FeatureVector(temporal_dep=1 / 3, out_of_order=0.25, fractal=0.0),
            FeatureVector(temporal_dep=0.5, out_of_order=0.0, fractal=1.0),
        ]
        write_features(vectors, self.path("f.csv"))
        with open(self.path("f.csv"), encoding="utf-8") as f:
            header, first = f.readline().strip(), f.readline().strip()
        self.assertEqual(header, ",".join(FEATURE_HEADER))
        self.assertTrue(first.startswith("0,0.333333,"))
        loaded = read_features(self.path("f.csv"))
        self.assertEqual(len(loaded), 2)
        self.assertAlmostEqual(loaded[0]["temporal_dep"], 1 / 3, places=6)
        self.assertNotIn("long_term_dep", loaded[0])

    def test_feature_table_header_checked(self):
        path = self.write_text("f.csv", "idx,fractal\n0,0.5\n")
        self.assertRaises(StreamFormatError, read_features, path)

    def test_grid_table(self):
        cells = [
            GridCell("out_of_order", "fractal", 0.0, 0.5, 0.02, 3,
                     {"out_of_order": 0.01, "fractal": 0.48}),
            GridCell("out_of_order", "fractal", 1.0, 0.1, 0.4, 5),
        ]
        write_grid(cells, self.path("grid.csv"))
        with open(self.path("grid.csv"), encoding="utf-8") as f:
            self.assertEqual(f.readline().strip(), ",".join(GRID_HEADER))
        self.assertTrue(os.path.exists(self.path("grid.achieved.csv")))
        loaded = read_grid(self.path("grid.csv"))
        self.assertEqual(
            [(c.target_a, c.target_b, c.trials_used) for c in loaded],
            [(0.0, 0.5, 3), (1.0, 0.1, 5)]
        )
        self.assertAlmostEqual(loaded[0].achieved_value("fractal"), 0.48)
        self.assertTrue(np.isnan(loaded[1].achieved_value("fractal")))

    def test_grid_without_companion(self):
        write_grid(
            [GridCell("fractal", "out_of_order", 0.1, 0.1, 0.3, 2)],
            self.path("g.csv"),
        )
        os.remove(self.path("g.achieved.csv"))
        cell, = read_grid(self.path("g.csv"))
        self.assertIsNone(cell.achieved)

    def test_ranges_file(self):
        ranges = {"out_of_order": (0.0, 0.97), "fractal": (0.0, 0.5)}
        write_ranges(ranges, self.path("ranges.json"), n_points=200)
        with open(self.path("ranges.json"), encoding="utf-8") as f:
            self.assertEqual(json.load(f)["n_points"], 200)
        self.assertEqual(read_ranges(self.path("ranges.json")), ranges)

    def test_invalid_ranges_file(self):
        for data in ({"ranges": {"speed": [0, 1]}},
                     {"ranges": {"fractal": [0.6, 0.2]}},
                     {"ranges": {"fractal": [0.1]}},
                     {}):
            with self.subTest(data=data):
                path = self.write_text("r.json", json.dumps(data))
                self.assertRaises(StreamFormatError, read_ranges, path)


if __name__ == '__main__':
    unittest.main()
