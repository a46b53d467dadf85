"""Writes the golden NMEA corpus and the line counts each file must produce.

Counts are tallied while the lines are written, so they do not depend on the
parser under test. Rerun after editing: python3 generate.py
"""
import json
from functools import reduce
from pathlib import Path

HERE = Path(__file__).parent


def cs(body):
    return "%02X" % reduce(lambda a, c: a ^ ord(c), body, 0)


def sentence(body):
    return "$%s*%s" % (body, cs(body))


def bad_checksum(body):
    good = int(cs(body), 16)
    return "$%s*%02X" % (body, good ^ 0x5A)


def gga(sec, talker="GP", quality=1, coord=True):
    lat, lon = ("4540.%04d" % (3200 + sec), "01155.%04d" % (6800 + sec)) if coord else ("", "")
    ns, ew = ("N", "E") if coord else ("", "")
    return "%sGGA,0900%02d.00,%s,%s,%s,%s,%d,09,0.9,45.0,M,47.0,M,," % (
        talker, sec, lat, ns, lon, ew, quality)


def rmc(sec, talker="GP"):
    return "%sRMC,0900%02d.00,A,4540.%04d,N,01155.%04d,E,0.5,90.0,150621,,,A" % (
        talker, sec, 3200 + sec, 6800 + sec)


class Corpus:
    def __init__(self):
        self.lines = []
        self.counts = dict(total_lines=0, accepted=0, rejected_checksum=0,
                           rejected_malformed=0, unsupported=0, fixes=0)

    def add(self, line, bucket, fix=False):
        self.lines.append(line)
        self.counts["total_lines"] += 1
        self.counts[bucket] += 1
        if fix:
            self.counts["fixes"] += 1

    def epoch(self, sec, **kw):
        self.add(sentence(rmc(sec)), "accepted")
        self.add(sentence(gga(sec, **kw)), "accepted", fix=True)


def clean():
    c = Corpus()
    c.add("# device_model: Pixel 4", "unsupported")
    c.add("# start_time: 2021-06-15T09:00:00Z", "unsupported")
    for s in range(10):
        c.epoch(s)
    return c, "\n"


def corrupted():
    c = Corpus()
    for s in range(10):
        if s == 4:
            c.add(bad_checksum(rmc(s)), "rejected_checksum")
        else:
            c.add(sentence(rmc(s)), "accepted")
        if s in (2, 5, 7):
            c.add(bad_checksum(gga(s)), "rejected_checksum")
        else:
            c.add(sentence(gga(s)), "accepted", fix=True)
    # checksum correct for a body that was altered after signing
    signed = sentence(gga(10))
    c.add(signed.replace("4540.3210", "4540.3290"), "rejected_checksum")
    return c, "\n"


def truncated():
    c = Corpus()
    for s in range(8):
        c.epoch(s)
    c.add("", "unsupported")
    c.add(sentence(gga(8))[:20], "rejected_malformed")
    c.add(sentence(gga(9))[:-1], "rejected_malformed")
    c.add("$GPGGA,090010.00", "rejected_malformed")
    c.add("$GPRMC,090011.00,A,4540.3211,N", "rejected_malformed")
    c.add("$", "rejected_malformed")
    c.add(sentence(gga(12))[:40], "rejected_malformed")
    return c, ""


def mixed():
    c = Corpus()
    c.add("#GARDENTRACK,2021-06-15", "unsupported")
    c.add(sentence("GPGSA,A,3,04,05,09,12,,,,,,,,,2.5,1.3,2.1"), "unsupported")
    for i in range(1, 4):
        c.add(sentence("GPGSV,3,%d,11,03,03,111,00,04,15,270,00,06,01,010,00,13,06,292,00" % i),
              "unsupported")
    c.add(sentence("PGLOR,1,FIX,1.0,1.0"), "unsupported")
    c.add(sentence("GPVTG,90.0,T,,M,0.5,N,0.9,K,A"), "unsupported")
    c.add(sentence(rmc(0, talker="GN")), "accepted")
    c.add(sentence(gga(0, talker="GN")), "accepted", fix=True)
    c.add(sentence(gga(1, quality=0, coord=False)), "accepted", fix=True)
    c.add(sentence(gga(2, talker="GL", quality=2)), "accepted", fix=True)
    c.add(sentence(gga(2)), "unsupported")
    c.add(sentence(gga(1)), "rejected_malformed")
    c.add(sentence(gga(3, quality=1, coord=False)), "rejected_malformed")
    c.add(sentence(gga(4)) + "\r", "accepted", fix=True)
    c.add("$GPGGA,090005.00,4540.3205,N,01155.6805,E,1,09,0.9,45.0,M,47.0,M,,*ZZ", "rejected_malformed")
    c.add(sentence("GPGGA,090006.00,4540.3206,N,01155.6806,E,1,09,0.9,45.0,M,47.0,M,,") .replace("$", "$$", 1),
          "rejected_malformed")
    c.add(sentence(gga(7).replace(",N,", ",E,")), "rejected_malformed")
    c.add(sentence(rmc(8).replace("150621", "311321")), "rejected_malformed")
    c.add(sentence(gga(9)).replace("$", "  $", 1), "unsupported")
    c.add(sentence("GPTXT,01,01,02,u-blox ag"), "unsupported")
    c.add(sentence(gga(10)), "accepted", fix=True)
    return c, "\n"


def main():
    expected = {}
    for name, build in [("clean", clean), ("corrupted_checksum", corrupted),
                        ("truncated", truncated), ("mixed", mixed)]:
        corpus, tail = build()
        (HERE / (name + ".nmea")).write_text("\n".join(corpus.lines) + tail, newline="")
        expected[name] = corpus.counts
    (HERE / "expected.json").write_text(json.dumps(expected, indent=2, sort_keys=True) + "\n")


if __name__ == "__main__":
    main()
