import io
import os
import shutil
import tempfile

from django.conf import settings
from django.core.management import call_command
from django.core.management.base import CommandError
from django.test import SimpleTestCase, TestCase, override_settings

from api.v1.master.models import RulePush
from api.v1.master.services import AlertStore
from uplink import AlertRecord as WireRecord

RULESETS = settings.BASE_DIR / "rulesets"
SUBSTATION = str(RULESETS / "substation.rules")
VARS = ["--var", "SRC=10.0.0.1,10.0.0.2", "--var", "DST=10.0.0.2"]


def run(*args):
    out, err = io.StringIO(), io.StringIO()
    call_command(*args, stdout=out, stderr=err)
    return out.getvalue(), err.getvalue()


class CaptureCommandMixin:
    def setUp(self):
        self.tmp = tempfile.mkdtemp()
        self.addCleanup(shutil.rmtree, self.tmp)

    def path(self, name):
        return os.path.join(self.tmp, name)


@override_settings(DNP3IDS_CONFIG="", DNP3IDS_SECRET="")
class BatchCommandTests(CaptureCommandMixin, SimpleTestCase):
    def test_synth_then_parse(self):
        out, _ = run("synth", "benign", self.path("benign.pcap"), "--count", "3")
        self.assertIn("Wrote", out)
        out, err = run("parse", self.path("benign.pcap"))
        lines = out.splitlines()
        self.assertTrue(lines)
        self.assertRegex(lines[0], r"^t=\d+ 10\.0\.0\.1→10\.0\.0\.2 dst_addr=10 fc=0x01 Read crc=ok$")
        self.assertTrue(err.strip().endswith("frames"))

    def test_corrupted_frame_shows_bad_crc(self):
        run("synth", "benign", self.path("bad.pcap"), "--count", "2", "--corrupt", "3")
        out, _ = run("parse", self.path("bad.pcap"))
        self.assertIn("crc=bad", out)

    def test_unknown_scenario_is_a_usage_error(self):
        with self.assertRaises(CommandError):
            run("synth", "no_such_attack", self.path("x.pcap"))

    def test_parse_missing_capture(self):
        with self.assertRaises(CommandError):
            run("parse", self.path("missing.pcap"))

    def test_sensor_missing_rules_file(self):
        run("synth", "benign", self.path("benign.pcap"), "--count", "2")
        missing = self.path("missing.rules")
        with self.assertRaises(CommandError) as raised:
            run("sensor", "--rules", missing, "--source", self.path("benign.pcap"), *VARS)
        self.assertIn(missing, str(raised.exception))

    def test_sensor_without_master(self):
        run("synth", "select_operate_replay", self.path("attack.pcap"), "--count", "10")
        out, err = run("sensor", "--rules", SUBSTATION, "--source", self.path("attack.pcap"), *VARS)
        self.assertIn("packets_in=", err)
        self.assertIn("DNP3 operate from Unknow source", out)

    def test_sensor_ips_needs_output(self):
        run("synth", "benign", self.path("benign.pcap"), "--count", "2")
        with self.assertRaises(CommandError):
            run("sensor", "--rules", SUBSTATION, "--source", self.path("benign.pcap"), "--mode", "ips", *VARS)

    def test_sensor_config_file_and_flag_override(self):
        run("synth", "benign", self.path("benign.pcap"), "--count", "2")
        config = self.path("sensor.env")
        with open(config, "w") as f:
            f.write(f"sensor_id=substation-1\nrules_path={self.path('missing.rules')}\n")
            f.write("var.SRC=10.0.0.1,10.0.0.2\nvar.DST=10.0.0.2\n")
        _, err = run("sensor", "--config", config, "--rules", SUBSTATION, "--source", self.path("benign.pcap"))
        self.assertIn("packets_in=", err)

    def test_bench(self):
        out, _ = run(
            "bench",
            "--seq-a", str(RULESETS / "bench" / "sequence1.rules"),
            "--seq-b", str(RULESETS / "bench" / "sequence2.rules"),
            "--vars-file", str(RULESETS / "bench" / "bench.env"),
            "--repetitions", "2",
        )
        lines = out.splitlines()
        self.assertEqual(lines[0], "rule_sid,ordering,position,mean_us,median_us,p95_us,mean_options")
        self.assertIn("repetitions: 2", out)

    def test_bench_rejects_different_rules(self):
        with self.assertRaises(CommandError):
            run(
                "bench", "--seq-a", str(RULESETS / "bench" / "sequence1.rules"), "--seq-b", SUBSTATION,
                "--vars-file", str(RULESETS / "bench" / "bench.env"), "--repetitions", "1",
            )

    def test_rulegen_is_deterministic(self):
        run("synth", "benign", self.path("benign.pcap"), "--count", "30")
        run("rulegen", self.path("benign.pcap"), "--output", self.path("a.rules"), "--vars-out", self.path("a.env"))
        run("rulegen", self.path("benign.pcap"), "--output", self.path("b.rules"))
        with open(self.path("a.rules")) as a, open(self.path("b.rules")) as b:
            first = a.read()
            self.assertEqual(first, b.read())
        self.assertTrue(first.strip())
        with open(self.path("a.env")) as f:
            self.assertIn("var.MASTERS=10.0.0.1", f.read())

    def test_rulegen_merge_into_repo(self):
        run("synth", "benign", self.path("benign.pcap"), "--count", "30")
        repo = self.path("repo.rules")
        _, err = run("rulegen", self.path("benign.pcap"), "--repo", repo, "--changelog", self.path("changes.log"))
        self.assertIn("skipped", err)
        _, err = run("rulegen", self.path("benign.pcap"), "--repo", repo)
        self.assertTrue(err.strip().startswith("0 added"))
        with open(self.path("changes.log")) as f:
            self.assertIn("ADD", f.read())

    def test_rulegen_without_dnp3(self):
        run("synth", "benign", self.path("empty.pcap"), "--count", "0")
        with self.assertRaises(CommandError):
            run("rulegen", self.path("empty.pcap"))


@override_settings(DNP3IDS_CONFIG="")
class MasterCommandTests(CaptureCommandMixin, TestCase):
    def test_push_rules(self):
        out, _ = run("push_rules", SUBSTATION, *VARS)
        self.assertIn("Recorded rule set v1", out)
        out, _ = run("push_rules", SUBSTATION, *VARS, "--push-version", "4")
        self.assertIn("v4", out)
        self.assertEqual(list(RulePush.objects.values_list("version", flat=True).order_by("version")), [1, 4])

    def test_push_rules_rejects_bad_rules(self):
        broken = self.path("broken.rules")
        with open(broken, "w") as f:
            f.write("alert tcp any any -> any any (content:\"|04\"; sid:1;)\n")
        with self.assertRaises(CommandError) as raised:
            run("push_rules", broken)
        self.assertIn("line 1", str(raised.exception))
        self.assertFalse(RulePush.objects.exists())

    def test_query(self):
        store = AlertStore()
        for seq, sid in ((1, 3), (2, 9), (3, 3)):
            store.append(WireRecord(
                sensor_id="s1", seq=seq, ts_us=seq * 10, sid=sid, gid=0, msg="DNP3 operate",
                src_ip="10.0.0.66", src_port=51066, dst_ip="10.0.0.2", dst_port=20000, proto="tcp",
            ))
        out, _ = run("query", "--sid", "3")
        self.assertEqual(len(out.splitlines()), 2)
        self.assertTrue(out.startswith("10 s1#1 [0:3] DNP3 operate"))
        out, _ = run("query", "--json", "--end-us", "20")
        self.assertEqual(len(out.splitlines()), 1)
        self.assertIn('"seq": 1', out)

    def test_query_bad_limit(self):
        with self.assertRaises(CommandError):
            run("query", "--limit", "0")
