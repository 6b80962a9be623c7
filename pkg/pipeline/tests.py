import os
import random
import tempfile

from django.test import SimpleTestCase
from scapy.layers.inet import IP, TCP, UDP, ICMP
from scapy.layers.l2 import ARP, Ether
from scapy.packet import Raw

from dnp3 import build_frame, encode_frame
from dnp3.constants import FunctionCode
from pipeline import (
    CaptureRecord,
    FlowTable,
    Mode,
    Pipeline,
    Skip,
    SkipReason,
    decode_packet,
    read_capture,
    run_pipeline,
    write_capture,
)
from pipeline.decoder import Protocol
from pipeline.exceptions import BadMagic, TruncatedRecord
from rules import compile_ruleset, parse_variables
from synth import AttackKind, ScenarioConfig, synth_attack, synth_attack_parts, synth_benign

SUBSTATION_TEXT = "\n".join([
    'alert tcp !$SRC any -> $DST any (content:" 04 "; offset:12; depth:1; msg:"DNP3 operate from Unknow source"; sid:3;)',
    'alert tcp !$SRC any -> $DST any (flow: not_established; msg:"Unknown flow"; sid:5;)',
    'alert tcp !$SRC any -> $DST any (content:" 05 64 "; threshold: type both, track by src, count 5, seconds 10; sid:9;)',
    'alert tcp !$SRC any -> $DST any (msg:"DNP3-Bad-CRC"; sid:1; gid:145; metadata: rule-type preproc;)',
    'alert tcp !$SRC any -> $DST any (msg:"DNP3-Invalid sequence no"; sid:3; gid:145; metadata: rule-type preproc;)',
]) + "\n"
VARIABLES = parse_variables(["SRC=10.0.0.1,10.0.0.2", "DST=10.0.0.2"])
SMALL = ScenarioConfig(count=10)
# explicit addresses keep scapy from resolving MACs on the host network
MACS = {"src": "02:00:0a:00:00:01", "dst": "02:00:0a:00:00:02"}


def raw(pkt, ts=0) -> CaptureRecord:
    return CaptureRecord(timestamp=ts, data=bytes(pkt))


class CaptureTests(SimpleTestCase):
    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.path = os.path.join(self.tmp.name, "capture.pcap")

    def tearDown(self):
        self.tmp.cleanup()

    def test_empty_capture_is_header_only(self):
        self.assertEqual(write_capture([], self.path), 0)
        self.assertEqual(os.path.getsize(self.path), 24)
        self.assertEqual(list(read_capture(self.path)), [])

    def test_round_trip_preserves_records(self):
        records = [
            CaptureRecord(timestamp=1_000_000, data=b"\x01" * 60),
            CaptureRecord(timestamp=1_000_000, data=b"\x02" * 61),
            CaptureRecord(timestamp=2_500_001, data=b"\x03" * 14),
        ]
        write_capture(records, self.path)
        self.assertEqual(list(read_capture(self.path)), records)

    def test_synthesized_record_count(self):
        records = synth_benign(SMALL)
        write_capture(records, self.path)
        back = list(read_capture(self.path))
        self.assertEqual(len(back), 3 + 2 * SMALL.count + 3)
        self.assertEqual(back, records)

    def test_bad_magic(self):
        with open(self.path, "wb") as f:
            f.write(b"not a capture file at all, sorry")
        with self.assertRaises(BadMagic):
            list(read_capture(self.path))

    def test_truncated_record(self):
        write_capture([CaptureRecord(timestamp=0, data=b"\x00" * 64)], self.path)
        with open(self.path, "rb") as f:
            data = f.read()
        with open(self.path, "wb") as f:
            f.write(data[:-10])
        with self.assertRaises(TruncatedRecord):
            list(read_capture(self.path))


class DecodeTests(SimpleTestCase):
    def test_arp_is_not_ipv4(self):
        self.assertEqual(decode_packet(raw(Ether(**MACS) / ARP())), Skip(SkipReason.NOT_IPV4))

    def test_other_ip_protocol_is_skipped(self):
        pkt = Ether(**MACS) / IP(src="10.0.0.1", dst="10.0.0.2", proto=47) / Raw(load=b"gre")
        self.assertEqual(decode_packet(raw(pkt)), Skip(SkipReason.NOT_TCP))

    def test_dnp3_payload(self):
        octets = encode_frame(build_frame(10, 1, FunctionCode.READ))
        pkt = Ether(**MACS) / IP(src="10.0.0.1", dst="10.0.0.2") / TCP(sport=50000, dport=20000, flags="PA") / Raw(load=octets)
        parsed = decode_packet(raw(pkt, ts=42))
        self.assertEqual(parsed.timestamp, 42)
        self.assertEqual(parsed.dnp3.function_code, FunctionCode.READ)
        self.assertEqual(parsed.tcp_payload, octets)
        self.assertEqual(parsed.five_tuple, ("10.0.0.1", 50000, "10.0.0.2", 20000, "tcp"))

    def test_pure_ack_has_no_dnp3(self):
        pkt = Ether(**MACS) / IP(src="10.0.0.1", dst="10.0.0.2") / TCP(sport=50000, dport=20000, flags="A")
        parsed = decode_packet(raw(pkt))
        self.assertIsNone(parsed.dnp3)
        self.assertEqual(parsed.tcp_payload, b"")

    def test_truncated_dnp3_is_reported(self):
        octets = encode_frame(build_frame(10, 1, FunctionCode.READ))[:-3]
        pkt = Ether(**MACS) / IP(src="10.0.0.1", dst="10.0.0.2") / TCP(sport=50000, dport=20000) / Raw(load=octets)
        parsed = decode_packet(raw(pkt))
        self.assertIsNone(parsed.dnp3)
        self.assertEqual(parsed.dnp3_error, "truncated")

    def test_frames_before_a_cut_off_tail_are_kept(self):
        leading = encode_frame(build_frame(10, 1, FunctionCode.READ))
        tail = encode_frame(build_frame(10, 1, FunctionCode.OPERATE, b"\x00" * 20))[:12]
        pkt = Ether(**MACS) / IP(src="10.0.0.1", dst="10.0.0.2") / TCP(sport=50000, dport=20000) / Raw(load=leading + tail)
        parsed = decode_packet(raw(pkt))
        self.assertEqual(len(parsed.dnp3_frames), 1)
        self.assertEqual(parsed.dnp3.function_code, FunctionCode.READ)
        self.assertEqual(parsed.dnp3_error, "truncated")

    def test_icmp_and_udp_are_header_only(self):
        icmp = decode_packet(raw(Ether(**MACS) / IP(src="10.0.0.66", dst="10.0.0.2") / ICMP()))
        udp = decode_packet(raw(Ether(**MACS) / IP(src="10.0.0.66", dst="10.0.0.2") / UDP(sport=5, dport=53)))
        self.assertEqual((icmp.protocol, icmp.icmp_type), (Protocol.ICMP, 8))
        self.assertEqual((udp.protocol, udp.dst_port), (Protocol.UDP, 53))

    def test_fuzz_never_raises(self):
        rng = random.Random(1)
        prefix = bytes(Ether(**MACS) / IP(src="10.0.0.1", dst="10.0.0.2") / TCP())
        for _ in range(10_000):
            data = bytes(rng.randrange(256) for _ in range(rng.randrange(80)))
            if rng.random() < 0.5:
                # valid Ethernet/IPv4 prefix so the deeper layers get exercised
                data = prefix[:rng.randrange(14, 54)] + data
            result = decode_packet(CaptureRecord(timestamp=0, data=data))
            self.assertTrue(isinstance(result, Skip) or result.src_ip)


def tcp(src, dst, sport, dport, flags, seq, ack=0, payload=b"", ts=0):
    pkt = Ether(**MACS) / IP(src=src, dst=dst) / TCP(sport=sport, dport=dport, flags=flags, seq=seq, ack=ack)
    if payload:
        pkt = pkt / Raw(load=payload)
    return decode_packet(raw(pkt, ts=ts))


class FlowTests(SimpleTestCase):
    def test_handshake_establishes_on_third_packet(self):
        table = FlowTable()
        syn = table.update(tcp("10.0.0.1", "10.0.0.2", 50000, 20000, "S", 100))
        synack = table.update(tcp("10.0.0.2", "10.0.0.1", 20000, 50000, "SA", 900, 101))
        ack = table.update(tcp("10.0.0.1", "10.0.0.2", 50000, 20000, "A", 101, 901))
        self.assertEqual([v.established for v in (syn, synack, ack)], [False, False, True])
        self.assertTrue(syn.new_flow)
        self.assertFalse(ack.new_flow)

    def test_lone_syn(self):
        verdict = FlowTable().update(tcp("10.0.0.66", "10.0.0.2", 40000, 20000, "S", 5))
        self.assertTrue(verdict.new_flow)
        self.assertFalse(verdict.established)

    def test_midstream_is_not_established(self):
        verdict = FlowTable().update(tcp("10.0.0.1", "10.0.0.2", 50000, 20000, "PA", 5, 7, b"x"))
        self.assertFalse(verdict.established)

    def _established(self):
        table = FlowTable()
        table.update(tcp("10.0.0.1", "10.0.0.2", 50000, 20000, "S", 100))
        table.update(tcp("10.0.0.2", "10.0.0.1", 20000, 50000, "SA", 900, 101))
        table.update(tcp("10.0.0.1", "10.0.0.2", 50000, 20000, "A", 101, 901))
        return table

    def test_in_window_segment(self):
        table = self._established()
        verdict = table.update(tcp("10.0.0.1", "10.0.0.2", 50000, 20000, "PA", 101, 901, b"abc"))
        self.assertTrue(verdict.established)
        self.assertFalse(verdict.seq_anomaly)
        verdict = table.update(tcp("10.0.0.1", "10.0.0.2", 50000, 20000, "PA", 104, 901, b"def"))
        self.assertFalse(verdict.seq_anomaly)

    def test_out_of_window_segment(self):
        table = self._established()
        verdict = table.update(tcp("10.0.0.1", "10.0.0.2", 50000, 20000, "PA", 101 + 10**6, 901, b"abc"))
        self.assertTrue(verdict.seq_anomaly)
        self.assertTrue(verdict.established)

    def test_replayed_old_segment_is_anomalous(self):
        table = self._established()
        table.update(tcp("10.0.0.1", "10.0.0.2", 50000, 20000, "PA", 101, 901, b"abc"))
        verdict = table.update(tcp("10.0.0.1", "10.0.0.2", 50000, 20000, "PA", 101, 901, b"abc"))
        self.assertTrue(verdict.seq_anomaly)

    def test_established_until_close(self):
        table = self._established()
        fin = table.update(tcp("10.0.0.1", "10.0.0.2", 50000, 20000, "FA", 101, 901))
        self.assertTrue(fin.established)
        table.update(tcp("10.0.0.2", "10.0.0.1", 20000, 50000, "FA", 901, 102))
        last = table.update(tcp("10.0.0.1", "10.0.0.2", 50000, 20000, "A", 102, 902))
        self.assertFalse(last.established)

    def test_idle_flows_expire(self):
        table = FlowTable(idle_timeout=1.0)
        table.update(tcp("10.0.0.1", "10.0.0.2", 50000, 20000, "S", 100, ts=0))
        table.update(tcp("10.0.0.3", "10.0.0.2", 50000, 20000, "S", 100, ts=5_000_000))
        self.assertEqual(len(table), 1)


class PipelineTests(SimpleTestCase):
    def setUp(self):
        self.ruleset = compile_ruleset(SUBSTATION_TEXT, VARIABLES)

    def test_benign_capture_is_silent(self):
        records = synth_benign(SMALL)
        result = run_pipeline(records, self.ruleset)
        self.assertEqual(result.alerts, [])
        self.assertEqual(result.output, records)
        self.assertEqual(result.counters.packets_skipped, 0)

    def test_operate_from_attacker_alerts(self):
        records = synth_attack(AttackKind.SELECT_OPERATE_REPLAY, SMALL)
        result = run_pipeline(records, self.ruleset)
        self.assertIn((1, 3), [a.rule_id for a in result.alerts])

    def test_ips_drops_only_matched_frames(self):
        ruleset = compile_ruleset(SUBSTATION_TEXT.replace("alert", "drop", 1), VARIABLES)
        background, injected = synth_attack_parts(AttackKind.BROADCAST_REQUEST, SMALL)
        records = synth_attack(AttackKind.BROADCAST_REQUEST, SMALL)
        result = run_pipeline(records, ruleset, mode=Mode.IPS)

        counters = result.counters
        self.assertEqual(counters.packets_dropped, 1)
        self.assertEqual(counters.packets_in, counters.packets_out + counters.packets_dropped)
        dropped = [r for r in records if r not in result.output]
        self.assertEqual(len(dropped), 1)
        self.assertIn(dropped[0], injected)
        self.assertEqual([r for r in records if r is not dropped[0]], result.output)

    def test_ids_mode_never_drops(self):
        ruleset = compile_ruleset(SUBSTATION_TEXT.replace("alert", "drop", 1), VARIABLES)
        records = synth_attack(AttackKind.BROADCAST_REQUEST, SMALL)
        result = run_pipeline(records, ruleset, mode=Mode.IDS)
        self.assertEqual(result.counters.packets_dropped, 0)
        self.assertEqual(result.output, records)

    def test_conservation_with_garbage(self):
        rng = random.Random(9)
        records = synth_benign(SMALL) + [
            CaptureRecord(timestamp=10**15 + i, data=bytes(rng.randrange(256) for _ in range(40)))
            for i in range(200)
        ]
        result = run_pipeline(records, self.ruleset, mode=Mode.IPS)
        counters = result.counters
        self.assertEqual(counters.packets_in, len(records))
        self.assertEqual(counters.packets_in, counters.packets_out + counters.packets_dropped)
        self.assertGreater(counters.packets_skipped, 0)

    def test_split_frame_is_counted_as_skip(self):
        octets = encode_frame(build_frame(10, 1, FunctionCode.OPERATE, b"\x00" * 21))[:15]
        pkt = Ether(**MACS) / IP(src="10.0.0.66", dst="10.0.0.2") / TCP(sport=51066, dport=20000, flags="PA") / Raw(load=octets)
        records = [raw(pkt, ts=1)]
        result = run_pipeline(records, self.ruleset, mode=Mode.IPS)
        counters = result.counters
        self.assertEqual(counters.packets_skipped, 1)
        self.assertEqual(dict(counters.skip_reasons), {"truncated": 1})
        self.assertEqual(counters.packets_in, counters.packets_out + counters.packets_dropped)
        self.assertEqual(result.output, records)

    def test_expired_threshold_windows_are_purged(self):
        ruleset = compile_ruleset(
            'alert tcp any any -> any any (content:" 05 64 "; threshold: type both, track by_src, count 5, seconds 10; sid:9;)\n',
            {},
        )
        octets = encode_frame(build_frame(10, 1, FunctionCode.READ))
        pipeline = Pipeline(ruleset)
        for i in range(1, 301):
            src = f"10.1.{i // 200}.{i % 200 + 1}"
            pkt = Ether(**MACS) / IP(src=src, dst="10.0.0.2") / TCP(sport=50000, dport=20000, flags="PA") / Raw(load=octets)
            pipeline.process(raw(pkt, ts=i * 60 * 1_000_000))
            self.assertLessEqual(len(pipeline.thresholds.windows), 1)

    def test_threshold_windows_survive_within_horizon(self):
        ruleset = compile_ruleset(
            'alert tcp any any -> any any (content:" 05 64 "; threshold: type both, track by_src, count 5, seconds 10; sid:9;)\n',
            {},
        )
        octets = encode_frame(build_frame(10, 1, FunctionCode.READ))
        pkt = Ether(**MACS) / IP(src="10.0.0.66", dst="10.0.0.2") / TCP(sport=51066, dport=20000, flags="PA") / Raw(load=octets)
        records = [raw(pkt, ts=(i + 1) * 1_500_000) for i in range(5)]
        result = run_pipeline(records, ruleset)
        self.assertEqual([a.rule_id for a in result.alerts], [(1, 9)])

    def test_replay_is_deterministic(self):
        records = synth_attack(AttackKind.SELECT_OPERATE_REPLAY, SMALL)
        first = run_pipeline(records, self.ruleset).alerts
        second = run_pipeline(records, self.ruleset).alerts
        self.assertEqual(first, second)
        self.assertTrue(first)

    def test_ruleset_swap_applies_between_packets(self):
        from rules import RuleSetHolder

        holder = RuleSetHolder(self.ruleset.with_version(1))
        seen = []

        def on_alert(alert):
            seen.append(alert.rule_version)
            holder.swap(self.ruleset.with_version(2))

        pipeline = Pipeline(holder, on_alert=on_alert)
        pipeline.run(synth_attack(AttackKind.SELECT_OPERATE_REPLAY, SMALL))
        self.assertEqual(seen[0], 1)
        self.assertTrue(all(version == 2 for version in seen[1:]))
