import json
import tempfile
from fractions import Fraction
from io import StringIO
from pathlib import Path

from django.conf import settings
from django.core.management import call_command
from django.core.management.base import CommandError
from django.test import SimpleTestCase

from core.models import EXIT_FAILURE, EXIT_OK, EXIT_SCHEMA, SUCCESS, JobConfig, Report
from core.serializers import JobConfigSerializer
from core.services import JobService, ReportService

FIXTURES = Path(settings.FIXTURE_DIRS[0])


def fixture(name: str) -> str:
    return str(FIXTURES / name)


class CommandTestCase(SimpleTestCase):
    def setUp(self):
        workdir = tempfile.TemporaryDirectory()
        self.addCleanup(workdir.cleanup)
        self.workdir = Path(workdir.name)

    def call(self, *args, **options) -> str:
        out = StringIO()
        call_command(*args, stdout=out, **options)
        return out.getvalue()

    def call_json(self, *args, **options):
        return json.loads(self.call(*args, **options))


class VerifyPolyCommandTest(CommandTestCase):
    def test_square_map_certified(self):
        document = self.call_json("verify_poly", fixture("verify_poly_square.json"))
        self.assertEqual(document["status"], SUCCESS)
        verdict, = document["result"]["verdicts"]
        self.assertEqual(verdict["status"], "Certified")

    def test_dihedral_product_refuted(self):
        document = self.call_json("verify_poly", fixture("verify_poly_dihedral.json"))
        statuses = [verdict["status"] for verdict in document["result"]["verdicts"]]
        self.assertEqual(statuses[:2], ["Certified", "Certified"])
        self.assertIn("Refuted", statuses)

    def test_missing_prefiltration(self):
        path = self.workdir / "bad.json"
        path.write_text(json.dumps({"maps": []}), encoding="utf-8")
        with self.assertRaises(CommandError) as cm:
            self.call("verify_poly", str(path))
        self.assertEqual(cm.exception.returncode, EXIT_SCHEMA)


class ComplexityCommandTest(CommandTestCase):
    def test_homomorphism(self):
        document = self.call_json("complexity", fixture("complexity_homomorphism.json"))
        result = document["result"]
        self.assertEqual(document["status"], SUCCESS)
        self.assertLessEqual(result["certificate"]["bound"], 1)
        self.assertTrue(result["within_bound"])


class FolnerCommandTest(CommandTestCase):
    def test_phi_table(self):
        summary = self.workdir / "phi.json"
        text = self.call("folner", fixture("folner_phi.json"), summary=str(summary))
        lines = text.splitlines()
        self.assertEqual(lines[0], "N,sup_ratio")
        self.assertEqual(len(lines), 10)
        self.assertEqual(lines[1], "1,2")
        self.assertEqual(lines[-1], "9,4/9")
        self.assertEqual(json.loads(summary.read_text(encoding="utf-8"))["phi"]["N"], 9)

    def test_ceil(self):
        document = self.call_json("folner", fixture("folner_ceil.json"))
        self.assertEqual(document["status"], SUCCESS)
        self.assertGreaterEqual(document["result"]["n0"], 1)
        self.assertTrue(document["result"]["verified_monotone"])

    def test_search_cap(self):
        config = JobConfig("folner", FIXTURES / "folner_phi.json", {"search_cap": 2})
        self.assertEqual(JobService.run(config), (EXIT_FAILURE, None))


class SimulateCommandTest(CommandTestCase):
    def test_rotation_averages(self):
        document = self.call_json("simulate", fixture("simulate_rotation.json"))
        result = document["result"]
        for entry in result["averages"]:
            self.assertEqual(entry["values"], ["1/4", "0", "0", "0"])
            self.assertTrue(entry["matches_limit"])
        self.assertTrue(result["limit"]["exact"])
        self.assertEqual(result["limit"]["period"], 4)


class ScanCommandTest(CommandTestCase):
    def test_rotation_scan(self):
        lines = self.call("scan", fixture("scan_rotation.json")).splitlines()
        self.assertEqual(lines[0], "M,F_M,N,N2,shift,l2_squared,l2,passed")
        self.assertEqual(len(lines), 6)
        self.assertTrue(lines[3].startswith("3,6,4,5,e|e;e|e,9/1600,"))
        self.assertEqual([line[-1] for line in lines[1:]], ["0", "0", "1", "1", "1"])

    def test_strict_inconclusive(self):
        params = {"epsilon": "1/1000", "M_to": 2}
        loose = JobConfig("scan", FIXTURES / "scan_rotation.json", params)
        strict = JobConfig("scan", FIXTURES / "scan_rotation.json", params, strict=True)
        self.assertEqual(JobService.run(loose)[0], EXIT_OK)
        self.assertEqual(JobService.run(strict)[0], EXIT_FAILURE)

    def test_norm_precondition(self):
        config = JobConfig("scan", FIXTURES / "scan_rotation.json", {"observables": [["2", "0", "0", "0"]] * 2})
        self.assertEqual(JobService.run(config), (EXIT_SCHEMA, None))


class VnCommandTest(CommandTestCase):
    def test_all_pass(self):
        text = self.call("vn", epsilon="1/2", growth="2*M", m0=10, cases=50, seed=3)
        lines = text.splitlines()
        self.assertEqual(lines[0], "case,i,max_oscillation,passed")
        self.assertEqual(len(lines), 51)
        self.assertTrue(all(line.endswith(",1") for line in lines[1:]))

    def test_same_seed_same_bytes(self):
        first, second = self.workdir / "first.csv", self.workdir / "second.csv"
        for path in (first, second):
            self.call("vn", epsilon="1/2", growth="2*M", m0=10, cases=20, seed=11, output=str(path))
        self.assertEqual(first.read_bytes(), second.read_bytes())

    def test_bad_epsilon(self):
        with self.assertRaises(CommandError) as cm:
            self.call("vn", epsilon="3", growth="2*M", cases=1)
        self.assertEqual(cm.exception.returncode, EXIT_SCHEMA)


class RatesCommandTest(CommandTestCase):
    def test_toy_profile(self):
        document = self.call_json("rates", epsilon="6", complexity=1, growth="2*M", ladder_override=2)
        self.assertEqual(document["status"], SUCCESS)
        self.assertIn("count", document["result"])
        self.assertEqual(document["result"]["growth"], "2*M")

    def test_bad_growth(self):
        with self.assertRaises(CommandError) as cm:
            self.call("rates", epsilon="1", complexity=0, growth="2*N")
        self.assertEqual(cm.exception.returncode, EXIT_SCHEMA)


class RunCommandTest(CommandTestCase):
    def test_relative_input(self):
        document = self.call_json("run", fixture("job_verify_poly.json"))
        self.assertEqual(document["result"]["verdicts"][0]["status"], "Certified")

    def test_job_seed(self):
        output = self.workdir / "vn.csv"
        config = {"command": "vn", "params": {"epsilon": "1/2", "growth": "2*M", "m0": 10, "cases": 5}, "seed": 7,
                  "output": str(output)}
        path = self.workdir / "job.json"
        path.write_text(json.dumps(config), encoding="utf-8")
        self.call("run", str(path))
        expected = self.call("vn", epsilon="1/2", growth="2*M", m0=10, cases=5, seed=7)
        self.assertEqual(output.read_text(encoding="utf-8"), expected)

    def test_malformed_json(self):
        path = self.workdir / "broken.json"
        path.write_text("{\"command\": ", encoding="utf-8")
        with self.assertRaises(CommandError) as cm:
            self.call("run", str(path))
        self.assertEqual(cm.exception.returncode, EXIT_SCHEMA)

    def test_malformed_input(self):
        path = self.workdir / "broken.json"
        path.write_text("[1, 2", encoding="utf-8")
        self.assertEqual(JobService.run(JobConfig("simulate", path)), (EXIT_SCHEMA, None))

    def test_unknown_field(self):
        serializer = JobConfigSerializer(data={"command": "vn", "threads": 4})
        self.assertFalse(serializer.is_valid())
        self.assertIn("threads", serializer.errors)

    def test_input_required(self):
        self.assertFalse(JobConfigSerializer(data={"command": "scan"}).is_valid())
        self.assertFalse(JobConfigSerializer(data={"command": "optimize"}).is_valid())


class ReportServiceTest(SimpleTestCase):
    def test_empty_table(self):
        self.assertEqual(ReportService.render(Report(SUCCESS, ("a", "b"))), "a,b\n")

    def test_rationals_as_strings(self):
        text = ReportService.render(Report(SUCCESS, payload={"b": Fraction(3, 4), "a": [Fraction(2), 5]}))
        self.assertEqual(json.loads(text)["result"], {"a": ["2", 5], "b": "3/4"})
        self.assertLess(text.index("\"a\""), text.index("\"b\""))

    def test_emit_is_byte_stable(self):
        report = Report(SUCCESS, payload={"x": Fraction(1, 3), "y": {"z": 1.5, "w": None}})
        with tempfile.TemporaryDirectory() as workdir:
            first, second = Path(workdir) / "1.json", Path(workdir) / "2.json"
            ReportService.emit_report(report, first)
            ReportService.emit_report(report, second)
            self.assertEqual(first.read_bytes(), second.read_bytes())
