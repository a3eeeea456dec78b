import io
import unittest

import numpy as np

from streamforge.utility import (
    conditional_entropy, entropy, mutual_information, print_results,
    stable_softmax
)


class TestSoftmax(unittest.TestCase):
    def test_sums_to_one(self):
        for x in ([0.0, 0.0], [1.0, -2.0, 3.0], [1000.0, 1001.0]):
            with self.subTest(x=x):
                p = stable_softmax(x)
                self.assertAlmostEqual(float(p.sum()), 1.0)
                self.assertTrue(np.all(p > 0))

    def test_uniform_on_equal_logits(self):
        np.testing.assert_allclose(stable_softmax([2.0] * 4), [0.25] * 4)

    def test_rows(self):
        p = stable_softmax([[0.0, 0.0], [0.0, np.log(3.0)]], axis=1)
        np.testing.assert_allclose(p, [[0.5, 0.5], [0.25, 0.75]])


class TestEntropy(unittest.TestCase):
    def test_known_values(self):
        cases = [
            (["a"] * 4, 0.0),
            (["a", "b"], 1.0),
            (["a", "b", "c", "d"], 2.0),
            ([], 0.0),
        ]
        for sample, expected in cases:
            with self.subTest(sample=sample):
                self.assertAlmostEqual(entropy(sample), expected)

    def test_joint(self):
        self.assertAlmostEqual(entropy("aabb", "abab"), 2.0)

    def test_conditional_of_copy_is_zero(self):
        x = list("abcabcab")
        self.assertAlmostEqual(conditional_entropy(x, x), 0.0)
        self.assertAlmostEqual(conditional_entropy(x), entropy(x))

    def test_mutual_information(self):
        x = list("aabb")
        self.assertAlmostEqual(mutual_information(x, x), 1.0)
        self.assertAlmostEqual(mutual_information(x, list("abab")), 0.0)


class TestPrintResults(unittest.TestCase):
    def test_lines(self):
        out = io.StringIO()
        print_results({"fractal": 0.5, "out_of_order": 0.25}, "run", file=out)
        lines = out.getvalue().splitlines()
        self.assertEqual(lines[0], "Features of run:")
        self.assertEqual(len(lines), 3)
        self.assertTrue(lines[1].strip().startswith("fractal"))
        self.assertTrue(lines[2].endswith("0.2500"))


if __name__ == '__main__':
    unittest.main()
