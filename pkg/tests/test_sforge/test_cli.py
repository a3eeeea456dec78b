import contextlib
import io
import json
import os
import socket
import tempfile
import types
import unittest
from unittest import mock

import pandas as pd

from streamforge.cli import EXIT_BUDGET, EXIT_IO, EXIT_OK, EXIT_USAGE, SEED_ENV, main
from streamforge.markovChain import tree_to_chain
from streamforge.processTree import choice, leaf, parallel, sequence
from streamforge.simulation import (
    SimulationParams, StreamDefinition, simulate_with_drift
)
from streamforge.sinks import replay_to_sink
from streamforge.streamIO import (
    FEATURE_HEADER, load_definition, read_ranges, read_stream, save_definition
)

SMALL = {
    "n_seeds": 1, "n_eval_windows": 1, "window_size": 100,
    "fixed": {"n_activities": 4, "max_depth": 2, "nesting_depth": 1},
}


class CliTestCase(unittest.TestCase):
    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.addCleanup(self.tmp.cleanup)
        patcher = mock.patch.dict(os.environ)
        patcher.start()
        self.addCleanup(patcher.stop)
        os.environ.pop(SEED_ENV, None)

    def path(self, *names):
        return os.path.join(self.tmp.name, *names)

    def run_cli(self, *argv):
        with contextlib.redirect_stdout(io.StringIO()), \
                contextlib.redirect_stderr(io.StringIO()) as err:
            code = main(["--quiet", *argv])
        self.stderr = err.getvalue()
        return code

    def write_json(self, name, data):
        with open(self.path(name), "w", encoding="utf-8") as f:
            json.dump(data, f)
        return self.path(name)

    def write_definition(self, name="def.json"):
        tree = sequence(
            leaf("A"), parallel(leaf("B"), leaf("C")),
            choice([leaf("D"), leaf("E")], [0.3, 0.7]),
        )
        definition = StreamDefinition(
            tree_to_chain(tree, n_traces=300, seed=1),
            SimulationParams(ooo_prob=0.1, ooo_max_delay=5, trigger_prob=0.2),
            tree=tree,
        )
        save_definition(definition, self.path(name))
        return self.path(name)

    def read_bytes(self, name):
        with open(self.path(name), "rb") as f:
            return f.read()


class TestGenerate(CliTestCase):
    def test_converged(self):
        targets = self.write_json("targets.json", {
            **SMALL,
            "targets": {"out_of_order": 0.0},
            "budget": {"n_init": 2, "max_iter": 3},
            "fixed": {**SMALL["fixed"], "ooo_prob": 0.0},
        })
        code = self.run_cli(
            "generate", "--targets", targets, "--out", self.path("best.json")
        )
        self.assertEqual(code, EXIT_OK)
        self.assertTrue(os.path.exists(self.path("best.json")))
        history = pd.read_csv(self.path("best.history.csv"))
        self.assertEqual(len(history), 1)

    def test_budget_exhausted(self):
        targets = self.write_json("targets.json", {
            **SMALL,
            "targets": {"non_linear_dep": 1.0, "temporal_dep": 1.0},
            "fixed": {**SMALL["fixed"], "markov_order": 1},
        })
        code = self.run_cli(
            "generate", "--targets", targets, "--out", self.path("best.json"),
            "--budget", "2", "--history", self.path("trials.csv"),
        )
        self.assertEqual(code, EXIT_BUDGET)
        self.assertTrue(os.path.exists(self.path("best.json")))
        self.assertEqual(len(pd.read_csv(self.path("trials.csv"))), 2)

    def test_seed_environment_overrides_flag(self):
        targets = self.write_json("targets.json", {
            **SMALL, "targets": {"fractal": 0.4},
            "budget": {"n_init": 2, "max_iter": 2},
        })
        os.environ[SEED_ENV] = "11"
        for seed, out in (("1", "a.json"), ("2", "b.json")):
            self.run_cli(
                "generate", "--targets", targets, "--out", self.path(out),
                "--seed", seed,
            )
        self.assertEqual(self.read_bytes("a.json"), self.read_bytes("b.json"))

    def test_invalid_seed_environment(self):
        targets = self.write_json("targets.json", {"targets": {"fractal": 0.4}})
        os.environ[SEED_ENV] = "eleven"
        code = self.run_cli(
            "generate", "--targets", targets, "--out", self.path("x.json")
        )
        self.assertEqual(code, EXIT_USAGE)

    def test_malformed_targets(self):
        targets = self.write_json("targets.json", {"targets": {"speed": 1}})
        code = self.run_cli(
            "generate", "--targets", targets, "--out", self.path("x.json")
        )
        self.assertEqual(code, EXIT_USAGE)


class TestReplayAndFeatures(CliTestCase):
    def test_file_replay_is_reproducible(self):
        definition = self.write_definition()
        for name in ("a.jsonl", "b.jsonl"):
            code = self.run_cli(
                "replay", "--def", definition, "--n-events", "300",
                "--out", self.path(name),
            )
            self.assertEqual(code, EXIT_OK)
        self.assertEqual(self.read_bytes("a.jsonl"), self.read_bytes("b.jsonl"))
        self.assertEqual(len(read_stream(self.path("a.jsonl"))), 300)

    def test_replay_streams_events_while_simulating(self):
        definition = self.write_definition()
        with mock.patch(
            "streamforge.cli.replay_to_sink", wraps=replay_to_sink
        ) as replay:
            code = self.run_cli(
                "replay", "--def", definition, "--n-events", "300",
                "--out", self.path("s.jsonl"),
            )
        self.assertEqual(code, EXIT_OK)
        events = replay.call_args[0][0]
        self.assertIsInstance(events, types.GeneratorType)
        self.assertEqual(
            list(read_stream(self.path("s.jsonl"))),
            list(simulate_with_drift(load_definition(definition), 300))
        )

    def test_features(self):
        definition = self.write_definition()
        self.run_cli(
            "replay", "--def", definition, "--n-events", "230",
            "--out", self.path("s.jsonl"),
        )
        code = self.run_cli(
            "features", "--in", self.path("s.jsonl"), "--window", "50",
            "--grouping", "per-case", "--out", self.path("f.csv"),
        )
        self.assertEqual(code, EXIT_OK)
        frame = pd.read_csv(self.path("f.csv"))
        self.assertEqual(tuple(frame.columns), FEATURE_HEADER)
        self.assertEqual(list(frame["window_idx"]), [0, 1, 2, 3])

    def test_malformed_stream_line(self):
        with open(self.path("s.jsonl"), "w", encoding="utf-8") as f:
            f.write('{"case":"c","activity":"A"}\n')
        code = self.run_cli(
            "features", "--in", self.path("s.jsonl"), "--out", self.path("f.csv")
        )
        self.assertEqual(code, EXIT_USAGE)
        self.assertIn(":1", self.stderr)

    def test_missing_definition(self):
        code = self.run_cli(
            "replay", "--def", self.path("nope.json"), "--n-events", "5",
            "--out", self.path("s.jsonl"),
        )
        self.assertEqual(code, EXIT_IO)

    def test_refused_endpoint(self):
        definition = self.write_definition()
        with socket.create_server(("127.0.0.1", 0)) as server:
            port = server.getsockname()[1]
        code = self.run_cli(
            "replay", "--def", definition, "--n-events", "5",
            "--out", f"127.0.0.1:{port}",
        )
        self.assertEqual(code, EXIT_IO)

    def test_streamify(self):
        with open(self.path("log.csv"), "w", encoding="utf-8") as f:
            f.write("case_id,activity,timestamp\nc1,A,4\nc2,B,1\nc1,C,9\n")
        code = self.run_cli(
            "streamify", "--log", self.path("log.csv"),
            "--out", self.path("s.jsonl"),
        )
        self.assertEqual(code, EXIT_OK)
        stream = read_stream(self.path("s.jsonl"))
        self.assertEqual([e.ts for e in stream], [1, 1, 4, 4, 9, 9])

    def test_unknown_flag(self):
        with contextlib.redirect_stderr(io.StringIO()):
            with self.assertRaises(SystemExit) as ctx:
                main(["features", "--colour", "red"])
        self.assertEqual(ctx.exception.code, EXIT_USAGE)


class TestGridPipeline(CliTestCase):
    def test_grid_summarize_analyze(self):
        config = self.write_json("config.json", {
            **SMALL, "targets": {}, "budget": {"n_init": 2, "max_iter": 2},
        })
        code = self.run_cli(
            "grid", "--features", "out_of_order,fractal", "--targets", "0,1",
            "--config", config, "--out", self.path("grid.csv"),
            "--fix", "trigger_prob=0.5",
        )
        self.assertEqual(code, EXIT_OK)
        self.assertEqual(len(pd.read_csv(self.path("grid.csv"))), 4)

        code = self.run_cli(
            "summarize", "--grid", self.path("grid.csv"),
            "--out", self.path("summary.csv"),
        )
        self.assertEqual(code, EXIT_OK)
        summary = pd.read_csv(self.path("summary.csv"), index_col=0)
        self.assertEqual(list(summary.index), ["out_of_order", "fractal"])

        definition = self.write_definition()
        for group in ("generated", "logs"):
            os.makedirs(self.path(group))
        for i in range(3):
            self.run_cli(
                "replay", "--def", definition, "--n-events", "200",
                "--out", self.path(f"s{i}.jsonl"),
            )
            self.run_cli(
                "features", "--in", self.path(f"s{i}.jsonl"), "--window", "50",
                "--out", self.path("generated", f"f{i}.csv"),
            )
        with open(self.path("log.csv"), "w", encoding="utf-8") as f:
            f.write("case_id,activity,timestamp\n")
            f.writelines(
                f"c{i // 4},{'ABCD'[i % 4]},{i}\n" for i in range(120)
            )
        self.run_cli("streamify", "--log", self.path("log.csv"),
                     "--out", self.path("log.jsonl"))
        for i, window in enumerate((40, 60)):
            self.run_cli(
                "features", "--in", self.path("log.jsonl"),
                "--window", str(window),
                "--out", self.path("logs", f"f{i}.csv"),
            )
        code = self.run_cli(
            "analyze", "--generated", self.path("generated"),
            "--logs", self.path("logs"), "--out", self.path("report"),
        )
        self.assertEqual(code, EXIT_OK)
        for name in ("pca.csv", "hulls.csv", "gaps.txt"):
            self.assertTrue(os.path.exists(self.path("report", name)))
        self.assertEqual(len(pd.read_csv(self.path("report", "pca.csv"))), 5)

    def test_sweep(self):
        config = self.write_json("config.json", {**SMALL, "targets": {}})
        code = self.run_cli(
            "sweep", "--n", "2", "--config", config, "--seed", "3",
            "--out", self.path("sweep.csv"), "--ranges", self.path("r.json"),
        )
        self.assertEqual(code, EXIT_OK)
        frame = pd.read_csv(self.path("sweep.csv"))
        self.assertLessEqual(len(frame), 2)
        self.assertIn("out_of_order", frame.columns)
        ranges = read_ranges(self.path("r.json"))
        lo, hi = ranges["out_of_order"]
        self.assertAlmostEqual(lo, frame["out_of_order"].min(), places=5)
        self.assertAlmostEqual(hi, frame["out_of_order"].max(), places=5)

    def test_empty_feature_directory(self):
        os.makedirs(self.path("empty"))
        code = self.run_cli(
            "analyze", "--generated", self.path("empty"),
            "--logs", self.path("empty"), "--out", self.path("report"),
        )
        self.assertEqual(code, EXIT_IO)


if __name__ == '__main__':
    unittest.main()
