import random

from django.test import SimpleTestCase

from dnp3 import (
    crc16_dnp,
    parse_frame,
    parse_frames,
    encode_frame,
    build_frame,
    describe_function,
    is_critical,
    is_broadcast,
)
from dnp3.constants import FunctionCode, FUNCTION_NAMES
from dnp3.exceptions import BadStartBytes, Truncated, LengthOutOfRange, PayloadTooLarge


def bitwise_crc(data: bytes) -> int:
    """Shift-register reference: reflected poly 0x3D65 is 0xA6BC."""
    crc = 0
    for octet in data:
        crc ^= octet
        for _ in range(8):
            if crc & 1:
                crc = (crc >> 1) ^ 0xA6BC
            else:
                crc >>= 1
    return ~crc & 0xFFFF


def with_crc(data: bytes) -> bytes:
    return data + bitwise_crc(data).to_bytes(2, "little")


READ_FRAME = (
    with_crc(bytes([0x05, 0x64, 0x08, 0xC4, 0x0A, 0x00, 0x01, 0x00]))
    + with_crc(bytes([0xC0, 0xC1, 0x01]))
)


class Crc16DnpTests(SimpleTestCase):
    def test_check_value(self):
        self.assertEqual(crc16_dnp(b"123456789"), 0xEA82)
        self.assertEqual(bitwise_crc(b"123456789"), 0xEA82)

    def test_empty_input_anchor(self):
        self.assertEqual(crc16_dnp(b""), 0xFFFF)

    def test_matches_bitwise_oracle(self):
        rng = random.Random(7)
        for _ in range(200):
            data = bytes(rng.randrange(256) for _ in range(rng.randrange(40)))
            self.assertEqual(crc16_dnp(data), bitwise_crc(data))
            self.assertEqual(crc16_dnp(data), crc16_dnp(data))


class ParseFrameTests(SimpleTestCase):
    def test_read_request(self):
        frame = parse_frame(READ_FRAME)
        self.assertEqual(frame.link.destination, 0x000A)
        self.assertEqual(frame.link.source, 0x0001)
        self.assertEqual(frame.function_code, FunctionCode.READ)
        self.assertTrue(frame.is_request)
        self.assertIsNone(frame.app.internal_indications)
        self.assertEqual(frame.crc_valid, (True, True))
        self.assertTrue(frame.transport.fir and frame.transport.fin)

    def test_corrupted_header_flags_header_crc(self):
        data = bytearray(READ_FRAME)
        data[6] ^= 0x01
        frame = parse_frame(bytes(data))
        self.assertFalse(frame.header_crc_valid)
        self.assertTrue(frame.body_crc_valid)

    def test_bad_start(self):
        with self.assertRaises(BadStartBytes):
            parse_frame(b"\xAA\xBB" + READ_FRAME[2:])

    def test_truncated(self):
        with self.assertRaises(Truncated):
            parse_frame(READ_FRAME[:-1])
        with self.assertRaises(Truncated):
            parse_frame(READ_FRAME[:6])

    def test_length_out_of_range(self):
        data = bytearray(READ_FRAME)
        data[2] = 4
        with self.assertRaises(LengthOutOfRange):
            parse_frame(bytes(data))

    def test_multiple_frames_in_one_segment(self):
        frames = parse_frames(READ_FRAME + READ_FRAME)
        self.assertEqual(len(frames), 2)

    def test_response_carries_internal_indications(self):
        frame = build_frame(1, 10, FunctionCode.RESPONSE, b"\x01\x02", request=False, internal_indications=0x0090)
        parsed = parse_frame(encode_frame(frame))
        self.assertEqual(parsed.app.internal_indications, 0x0090)
        self.assertFalse(parsed.is_request)
        self.assertFalse(parsed.dir_mismatch)

    def test_dir_mismatch_is_flagged_not_rejected(self):
        frame = build_frame(10, 1, FunctionCode.RESPONSE, request=True)
        parsed = parse_frame(encode_frame(frame))
        self.assertTrue(parsed.dir_mismatch)


class EncodeFrameTests(SimpleTestCase):
    def test_round_trip_is_identical(self):
        frame = parse_frame(READ_FRAME)
        self.assertEqual(encode_frame(frame), READ_FRAME)

    def test_broadcast_destination_placement(self):
        data = encode_frame(build_frame(0xFFFF, 1, FunctionCode.COLD_RESTART))
        self.assertEqual(data[4:6], b"\xFF\xFF")
        self.assertEqual(data[12], 0x0D)

    def test_seventeen_octets_of_user_data_use_two_blocks(self):
        payload = bytes(range(14))
        frame = build_frame(10, 1, FunctionCode.WRITE, payload)
        self.assertEqual(len(frame.user_data), 17)
        data = encode_frame(frame)
        user = frame.user_data
        self.assertEqual(data[10:26], user[:16])
        self.assertEqual(data[26:28], bitwise_crc(user[:16]).to_bytes(2, "little"))
        self.assertEqual(data[28:29], user[16:])
        self.assertEqual(data[29:31], bitwise_crc(user[16:]).to_bytes(2, "little"))
        self.assertEqual(len(data), 31)

    def test_payload_too_large(self):
        with self.assertRaises(PayloadTooLarge):
            build_frame(10, 1, FunctionCode.WRITE, bytes(248))

    def test_round_trip_random_frames(self):
        rng = random.Random(11)
        for _ in range(300):
            frame = build_frame(
                rng.randrange(0x10000),
                rng.randrange(0x10000),
                rng.randrange(0x22),
                bytes(rng.randrange(256) for _ in range(rng.randrange(200))),
                request=rng.random() < 0.5,
                transport_seq=rng.randrange(64),
                app_seq=rng.randrange(16),
            )
            data = encode_frame(frame)
            self.assertEqual(parse_frame(data), frame)
            self.assertEqual(data[4], frame.link.destination & 0xFF)

    def test_single_bit_flip_is_always_detected(self):
        rng = random.Random(3)
        for _ in range(1000):
            frame = build_frame(
                rng.randrange(0x10000),
                rng.randrange(0x10000),
                rng.randrange(0x1F),
                bytes(rng.randrange(256) for _ in range(rng.randrange(60))),
            )
            data = bytearray(encode_frame(frame))
            # octets 0-2 decide framing itself; flip anywhere after them
            pos = rng.randrange(3, len(data))
            data[pos] ^= 1 << rng.randrange(8)
            self.assertFalse(parse_frame(bytes(data)).all_crc_valid)


class FunctionTableTests(SimpleTestCase):
    GOLDEN = [
        "Confirm", "Read", "Write", "Select", "Operate", "Dir operate",
        "Dir operate-No resp", "Freeze", "Freeze-No resp", "Freeze clear",
        "Freeze clear-No resp", "Freeze at time", "Freeze at time-No resp",
        "Cold restart", "Warm restart", "Initialize data",
        "Initialize application", "Start application", "Stop application",
        "Save configuration", "Enable unsolicited", "Disable unsolicited",
        "Assign class", "Delay measurement", "Record current time",
        "Open file", "Close file", "Delete file", "Get file information",
        "Authenticate file", "Abort file",
    ]

    def test_golden_table(self):
        self.assertEqual([describe_function(code) for code in range(0x1F)], self.GOLDEN)
        self.assertEqual(len(set(FUNCTION_NAMES.values())), 31)

    def test_named_codes(self):
        self.assertEqual(describe_function(0x04), "Operate")
        self.assertEqual(describe_function(0x0D), "Cold restart")
        self.assertEqual(describe_function(0x12), "Stop application")

    def test_unknown_codes(self):
        self.assertEqual(describe_function(0x40), "Unknown(0x40)")
        for code in range(256):
            self.assertIsInstance(describe_function(code), str)

    def test_is_critical(self):
        self.assertFalse(is_critical(0x01))
        self.assertTrue(is_critical(0x04))
        self.assertTrue(is_critical(0x15))
        self.assertTrue(is_critical(0x01, critical={0x01}))

    def test_is_broadcast(self):
        self.assertTrue(is_broadcast(0xFFFF))
        self.assertTrue(is_broadcast(0xFFFD))
        self.assertFalse(is_broadcast(0x000A))
