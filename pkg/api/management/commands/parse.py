from django.core.management.base import BaseCommand

from dnp3.functions import describe_function
from pipeline import Skip, decode_packet, read_capture

from ._options import operational_errors


def format_frame(pkt, frame) -> str:
    code = frame.function_code
    function = f"fc=0x{code:02X} {describe_function(code)}" if code is not None else "fc=- link-only"
    crc = "ok" if frame.all_crc_valid else "bad"
    return (
        f"t={pkt.timestamp} {pkt.src_ip}→{pkt.dst_ip} "
        f"dst_addr={frame.link.destination} {function} crc={crc}"
    )


class Command(BaseCommand):
    help = 'Dump the DNP3 frames of a capture, one line per frame'

    def add_arguments(self, parser):
        parser.add_argument('capture', help='pcap file')

    def handle(self, *args, **options):
        frames = 0
        with operational_errors():
            for record in read_capture(options['capture']):
                pkt = decode_packet(record)
                if isinstance(pkt, Skip):
                    continue
                for frame in pkt.dnp3_frames:
                    self.stdout.write(format_frame(pkt, frame))
                    frames += 1
                if pkt.dnp3_error:
                    self.stdout.write(f"t={pkt.timestamp} {pkt.src_ip}→{pkt.dst_ip} dnp3 error: {pkt.dnp3_error}")
        self.stderr.write(f"{frames} frames")
