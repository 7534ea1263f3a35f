"""End-to-end checks of the command-line tool."""

import csv
import io
import json
import os
import subprocess
import sys
import tempfile
import unittest

BIN = os.environ.get("TWOTRAIT_CLI", "twotrait")


def run(*args):
    return subprocess.run([BIN, *args], capture_output=True, text=True)


def rows(stdout):
    return list(csv.DictReader(io.StringIO(stdout)))


class Behaviour(unittest.TestCase):
    def test_exit_codes(self):
        self.assertEqual(run("estimate", "--n", "10", "--k", "2", "--counts", "5,3,1,1").returncode, 0)
        r = run("estimate", "--n", "11", "--k", "2", "--counts", "5,3,1,1")
        self.assertEqual(r.returncode, 2)
        self.assertIn("sum to 10", r.stderr)
        self.assertIn("--n is 11", r.stderr)
        r = run("estimate", "--n", "10", "--k", "2", "--counts", "5,3,1,1", "--estimator", "mom")
        self.assertEqual(r.returncode, 2)
        self.assertIn("mom", r.stderr)
        r = run("risk", "--p", "0.5,0.3,0.3", "--n", "5", "--k", "2")
        self.assertEqual(r.returncode, 2)
        r = run("cov", "--p", "0,0.3,0.1", "--k", "2")
        self.assertEqual(r.returncode, 2)
        r = run("reproduce", "--target", "table9", "--out", tempfile.gettempdir())
        self.assertEqual(r.returncode, 2)
        for t in ("table1", "table2", "table8", "figures"):
            self.assertIn(t, r.stderr)
        self.assertNotEqual(run().returncode, 0)
        r = run("risk", "--p", "0.1,0.1,0.1", "--n", "1000", "--k", "2", "--method", "exact")
        self.assertEqual(r.returncode, 1)
        self.assertIn("budget", r.stderr)

    def test_help_documents_flags(self):
        expected = {
            "estimate": ["--n", "--k", "--counts", "--estimator", "--epsilon", "--max-iter", "--start", "--full-loglik"],
            "risk": ["--p", "--n", "--k", "--estimator", "--method", "--samples", "--seed", "--budget"],
            "cov": ["--p", "--k", "--n"],
            "bias": ["--p", "--k", "--estimator", "--n"],
            "reproduce": ["--target", "--out", "--budget", "--seed", "--samples"],
        }
        top = run("--help")
        self.assertEqual(top.returncode, 0)
        for flag in ("--format", "--threads", "--precision"):
            self.assertIn(flag, top.stdout)
        for cmd, flags in expected.items():
            r = run(cmd, "--help")
            self.assertEqual(r.returncode, 0, cmd)
            for f in flags:
                self.assertIn(f, r.stdout, f"{cmd} {f}")

    def test_global_flags_after_subcommand(self):
        r = run("cov", "--p", "0.2,0.3,0.1", "--k", "1", "--format", "json", "--precision", "2")
        self.assertEqual(r.returncode, 0)
        doc = json.loads(r.stdout)
        self.assertEqual(doc["metadata"]["command"], "cov")
        self.assertAlmostEqual(doc["rows"][0]["sigma_10_10"], 0.16, places=15)

    def test_precision_override(self):
        r = run("--precision", "6", "estimate", "--n", "10", "--k", "1", "--counts", "5,3,1,1")
        self.assertEqual(rows(r.stdout)[0]["p10"], "0.300000")

    def test_json_full_precision_and_nulls(self):
        r = run("--format", "json", "estimate", "--n", "10", "--k", "2", "--counts", "5,3,1,1", "--estimator", "all")
        doc = json.loads(r.stdout)
        self.assertEqual(set(doc), {"metadata", "rows"})
        for key in ("version", "command", "args", "method", "threads", "elapsed_seconds"):
            self.assertIn(key, doc["metadata"])
        self.assertEqual(len(doc["rows"]), 3)
        self.assertIsNone(doc["rows"][0]["full_loglik"])
        self.assertAlmostEqual(doc["rows"][2]["p10"], 0.18147, delta=5e-6)

    def test_monte_carlo_is_deterministic(self):
        args = ["risk", "--p", "0.045,0.045,0.005", "--n", "40", "--k", "2", "--method", "mc",
                "--samples", "200000", "--seed", "42"]
        a = run(*args)
        b = run(*args)
        c = run("--threads", "3", *args)
        self.assertEqual(a.returncode, 0)
        self.assertEqual(a.stdout, b.stdout)
        self.assertEqual(a.stdout, c.stdout)
        self.assertNotEqual(a.stdout, run(*args[:-1], "43").stdout)

    def test_auto_switches_to_monte_carlo(self):
        r = run("risk", "--p", "0.1,0.1,0.1", "--n", "30", "--k", "2", "--estimator", "rmm",
                "--budget", "100", "--samples", "10000")
        self.assertEqual(r.returncode, 0)
        self.assertIn("warning", r.stderr)
        self.assertEqual(rows(r.stdout)[0]["method"], "monte_carlo")

    def test_csv_round_trip(self):
        with tempfile.TemporaryDirectory() as d:
            for target in ("table2", "table5"):
                self.assertEqual(run("reproduce", "--target", target, "--out", d).returncode, 0)
                with open(os.path.join(d, target + ".csv"), newline="") as fh:
                    text = fh.read()
                parsed = list(csv.reader(io.StringIO(text)))
                out = io.StringIO()
                csv.writer(out, lineterminator="\n").writerows(parsed)
                self.assertEqual(out.getvalue(), text)
                with open(os.path.join(d, target + ".provenance.json")) as fh:
                    prov = json.load(fh)
                self.assertEqual(prov["target"], target)

    def test_reproduce_is_deterministic(self):
        with tempfile.TemporaryDirectory() as d1, tempfile.TemporaryDirectory() as d2:
            run("reproduce", "--target", "table7", "--out", d1)
            run("--threads", "2", "reproduce", "--target", "table7", "--out", d2)
            with open(os.path.join(d1, "table7.csv")) as a, open(os.path.join(d2, "table7.csv")) as b:
                self.assertEqual(a.read(), b.read())

    def test_reproduce_row_counts(self):
        with tempfile.TemporaryDirectory() as d:
            for target, count in (("table2", 20), ("table5", 72), ("table8", 72)):
                run("reproduce", "--target", target, "--out", d)
                with open(os.path.join(d, target + ".csv")) as fh:
                    self.assertEqual(len(rows(fh.read())), count, target)


class ReferenceExamples(unittest.TestCase):
    def test_table2_estimate(self):
        r = rows(run("--precision", "3", "estimate", "--n", "35", "--k", "10", "--counts", "3,25,5,2",
                     "--estimator", "mle", "--full-loglik").stdout)[0]
        self.assertEqual((r["p10"], r["p01"], r["p11"]), ("0.139", "0.022", "0.000"))
        self.assertAlmostEqual(float(r["full_loglik"]), -8.737, delta=1e-3)

    def test_k1_collapse(self):
        for r in rows(run("estimate", "--n", "10", "--k", "1", "--counts", "5,3,1,1", "--estimator", "all").stdout):
            self.assertEqual((r["p10"], r["p01"], r["p11"]), ("0.3000", "0.1000", "0.1000"))

    def test_burrows_estimate(self):
        r = rows(run("--precision", "5", "estimate", "--n", "10", "--k", "2", "--counts", "5,3,1,1",
                     "--estimator", "burrows").stdout)[0]
        self.assertEqual((r["p10"], r["p01"], r["p11"]), ("0.18147", "0.06519", "0.03766"))

    def test_risk_table3_cell(self):
        r = rows(run("risk", "--p", "0.067,0.028,0.019", "--n", "25", "--k", "10", "--estimator", "burrows",
                     "--method", "exact").stdout)[0]
        self.assertAlmostEqual(float(r["avg_mse_x1000"]), 0.327, delta=0.01)

    def test_single_pool_never_leaves_region(self):
        r = rows(run("risk", "--p", "0.045,0.045,0.005", "--n", "1", "--k", "2").stdout)[0]
        self.assertEqual(float(r["boundary_probability"]), 0.0)

    def test_cov_k1(self):
        doc = json.loads(run("--format", "json", "cov", "--p", "0.2,0.3,0.1", "--k", "1").stdout)
        r = doc["rows"][0]
        self.assertAlmostEqual(r["sigma_10_10"], 0.16, places=12)
        self.assertAlmostEqual(r["sigma_01_01"], 0.21, places=12)
        self.assertAlmostEqual(r["sigma_10_01"], -0.06, places=12)

    def test_cov_psd(self):
        doc = json.loads(run("--format", "json", "cov", "--p", "0.045,0.045,0.005", "--k", "10").stdout)
        self.assertGreaterEqual(doc["rows"][0]["min_eigenvalue"], -1e-10)

    def test_reproduce_table1_cell(self):
        with tempfile.TemporaryDirectory() as d:
            self.assertEqual(run("reproduce", "--target", "table1", "--out", d, "--samples", "20000").returncode, 0)
            with open(os.path.join(d, "table1.csv")) as fh:
                table = rows(fh.read())
        self.assertEqual(len(table), 128)
        cell = [r for r in table if (r["k"], r["n"], r["p10"], r["p11"]) == ("2", "5", "0.0450", "0.0050")]
        self.assertEqual(cell[0]["boundary_probability"], "0.1029")

    def test_reproduce_table4_cell(self):
        with tempfile.TemporaryDirectory() as d:
            run("reproduce", "--target", "table4", "--out", d)
            with open(os.path.join(d, "table4.csv")) as fh:
                table = rows(fh.read())
        self.assertEqual(len(table), 84)
        cell = [r for r in table if (r["n"], r["k"], r["estimator"]) == ("25", "5", "mle")][0]
        self.assertAlmostEqual(float(cell["avg_abs_rel_bias"]), 32.815, delta=0.01)

    def test_reproduce_table6_cell(self):
        with tempfile.TemporaryDirectory() as d:
            run("reproduce", "--target", "table6", "--out", d)
            with open(os.path.join(d, "table6.csv")) as fh:
                table = rows(fh.read())
        cell = [r for r in table
                if (r["n"], r["estimator"], r["p10"], r["p11"]) == ("10", "mle", "0.045", "0.005")][0]
        got = [float(cell[c]) for c in ("rel_bias_pct_p10", "rel_bias_pct_p01", "rel_bias_pct_p11")]
        for g, want in zip(got, (-4.274, -4.274, 108.752)):
            self.assertAlmostEqual(g, want, delta=0.005)

    def test_figures_layout(self):
        with tempfile.TemporaryDirectory() as d:
            run("reproduce", "--target", "figures", "--out", d)
            with open(os.path.join(d, "figures.csv")) as fh:
                table = rows(fh.read())
        self.assertEqual(len(table), 2 * 4 * 7 * 3 * 3 * 2)
        self.assertEqual({r["metric"] for r in table}, {"rel_bias_pct", "mse"})


if __name__ == "__main__":
    if len(sys.argv) > 1 and not sys.argv[1].startswith("-"):
        BIN = sys.argv.pop(1)
    unittest.main()
