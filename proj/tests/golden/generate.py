"""Regenerates the golden traces from a standalone Python model of both protocols.

Usage: python3 generate.py   (writes leap_trace.txt and ameap_trace.txt here)
"""
import hashlib
import hmac

from cryptography.hazmat.primitives.ciphers import Cipher, algorithms, modes

KEY = bytes(range(16))
SENDER = 0x010
PAYLOAD = 0x0A0B0C0D0E0F
PAYLOAD_BITS = 48
MESSAGES = 6


def rc4(key, n):
    s = list(range(256))
    j = 0
    for i in range(256):
        j = (j + s[i] + key[i % len(key)]) % 256
        s[i], s[j] = s[j], s[i]
    out, i, j = [], 0, 0
    for _ in range(n):
        i = (i + 1) % 256
        j = (j + s[i]) % 256
        s[i], s[j] = s[j], s[i]
        out.append(s[(s[i] + s[j]) % 256])
    return out


def leap_frame(ctr):
    k = rc4(KEY + ctr.to_bytes(8, "big"), 256)
    hidden = SENDER ^ (((k[0] << 8) | k[24]) >> 5)
    offset = k[24] % 54
    bits = [(PAYLOAD >> (PAYLOAD_BITS - 1 - i)) & 1 for i in range(PAYLOAD_BITS)]
    field, nxt = [], 0
    for pos in range(64):
        if offset <= pos < offset + 11:
            field.append((hidden >> (10 - (pos - offset))) & 1)
        elif nxt < len(bits):
            field.append(bits[nxt])
            nxt += 1
        else:
            field.append(0)
    plain = int("".join(map(str, field)), 2)
    mask = int.from_bytes(bytes(k[72 + 24 * i] for i in range(8)), "big")
    return plain ^ mask, offset


def text(fid, data):
    return f"{fid:03X}#{data.hex().upper()}"


def leap_trace():
    lines = ["# protocol=LEAP"]
    for ctr in range(MESSAGES):
        cm, _ = leap_frame(ctr)
        frame = text(SENDER, cm.to_bytes(8, "big"))
        lines += [f"{ctr},tx,{frame},sent", f"{ctr},rx,{frame},accept"]
    # A bit flipped inside the tag slot is rejected; the untouched frame then authenticates.
    cm, offset = leap_frame(MESSAGES)
    tampered = cm ^ (1 << (63 - offset))
    lines.append(f"{MESSAGES},tx,{text(SENDER, cm.to_bytes(8, 'big'))},sent")
    lines.append(f"{MESSAGES},rx,{text(SENDER, tampered.to_bytes(8, 'big'))},reject")
    lines.append(f"{MESSAGES},rx,{text(SENDER, cm.to_bytes(8, 'big'))},accept")
    return lines


def ameap_message(ctr):
    block = (PAYLOAD << (64 - PAYLOAD_BITS)).to_bytes(8, "big") + ctr.to_bytes(8, "big")
    enc = Cipher(algorithms.AES(KEY), modes.ECB()).encryptor()
    cipher = enc.update(block) + enc.finalize()
    mac = hmac.new(KEY, SENDER.to_bytes(2, "big") + cipher + ctr.to_bytes(8, "big"), hashlib.sha256).digest()[:4]
    return [cipher[:8], cipher[8:], mac]


def ameap_trace():
    lines = ["# protocol=AMEAP"]
    for ctr in range(MESSAGES):
        frames = " ".join(text(SENDER, part) for part in ameap_message(ctr))
        lines += [f"{ctr},tx,{frames},sent", f"{ctr},rx,{frames},accept"]
    parts = ameap_message(MESSAGES)
    bad = [parts[0], bytes([parts[1][0] ^ 0x01]) + parts[1][1:], parts[2]]
    lines.append(f"{MESSAGES},tx,{' '.join(text(SENDER, p) for p in parts)},sent")
    lines.append(f"{MESSAGES},rx,{' '.join(text(SENDER, p) for p in bad)},reject")
    lines.append(f"{MESSAGES},rx,{' '.join(text(SENDER, p) for p in parts)},accept")
    return lines


if __name__ == "__main__":
    for name, lines in (("leap_trace.txt", leap_trace()), ("ameap_trace.txt", ameap_trace())):
        with open(name, "w") as f:
            f.write("\n".join(lines) + "\n")
