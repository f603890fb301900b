"""Networked mock bench: signal generator plus converter behind a tiny
line protocol, with the matching client used by the sweep's remote backend.

Protocol: UTF-8 lines terminated by "\\n", one request in flight per
connection. Commands:

    IDN?                 -> "OK sigstrength-bench 1"
    FREQ <hz>            carrier frequency
    POW <value>{DBM|VPK} output level (dBm into 50 ohms, or peak volts)
    AM:DEPTH <0..1>      modulation depth
    AM:FREQ <hz>         baseband tone frequency
    TONE SINE|EXPSINE|ZERO
    SEED <u64>           noise seed for the next capture
    OUTP ON|OFF          captures are refused while output is off
    CAPT? <n>            -> "OK <n>", n lines of "index,value", "END"

Every setter replies "OK" or "ERR <reason>". Each connection gets an
isolated session initialized from the server preset, so concurrent clients
never observe each other's settings.
"""

from __future__ import annotations

import socket
import socketserver
import threading
from dataclasses import dataclass

import numpy as np

from .adcmodel import AdcConfig, DigitizedTrace
from .channel import ChannelModel
from .exceptions import TransportError
from .noise import NoiseModel
from .signalgen import AmSpec, ToneSpec
from .sweep import dbm_to_vpk, simulate_capture

IDN_REPLY = "OK sigstrength-bench 1"

_TONE_NAMES = {"SINE": "sine", "EXPSINE": "exp_sine", "ZERO": "zero"}


@dataclass
class BenchPreset:
    """Initial state handed to every new session."""

    adc: AdcConfig
    channel: ChannelModel
    noise: NoiseModel
    tone_kind: str = "sine"
    f_m: float = 1000.0
    f_c: float = 1e6
    depth: float = 1.0
    v_pk: float = 0.5
    seed: int = 0


@dataclass
class BenchSession:
    preset: BenchPreset
    tone_kind: str = ""
    f_m: float = 0.0
    f_c: float = 0.0
    depth: float = 0.0
    v_pk: float = 0.0
    seed: int = 0
    output_enabled: bool = False

    def __post_init__(self):
        self.tone_kind = self.preset.tone_kind
        self.f_m = self.preset.f_m
        self.f_c = self.preset.f_c
        self.depth = self.preset.depth
        self.v_pk = self.preset.v_pk
        self.seed = self.preset.seed

    def capture(self, n: int) -> DigitizedTrace:
        tone = ToneSpec(self.tone_kind, f_m=self.f_m)
        am = AmSpec(f_c=self.f_c, depth=self.depth, v_pk=self.v_pk)
        return simulate_capture(self.preset.adc, self.preset.channel, tone, am,
                                self.preset.noise, self.seed, n)


def _parse_float(token: str) -> float:
    try:
        return float(token)
    except ValueError:
        raise ValueError("parse") from None


class _Handler(socketserver.StreamRequestHandler):
    def handle(self):
        session = BenchSession(self.server.preset)
        while True:
            raw = self.rfile.readline()
            if not raw:
                return
            line = raw.decode("utf-8", errors="replace").strip()
            if not line:
                continue
            try:
                self._dispatch(session, line)
            except BrokenPipeError:
                return

    def _reply(self, text: str):
        self.wfile.write((text + "\n").encode("utf-8"))

    def _dispatch(self, session: BenchSession, line: str):
        parts = line.split()
        cmd = parts[0].upper()
        try:
            if cmd == "IDN?":
                self._reply(IDN_REPLY)
            elif cmd == "FREQ" and len(parts) == 2:
                f_c = _parse_float(parts[1])
                if f_c <= 0:
                    raise ValueError("range")
                session.f_c = f_c
                self._reply("OK")
            elif cmd == "POW" and len(parts) == 2:
                token = parts[1].upper()
                if token.endswith("DBM"):
                    session.v_pk = dbm_to_vpk(_parse_float(token[:-3]))
                elif token.endswith("VPK"):
                    v = _parse_float(token[:-3])
                    if v < 0:
                        raise ValueError("range")
                    session.v_pk = v
                else:
                    raise ValueError("parse")
                self._reply("OK")
            elif cmd == "AM:DEPTH" and len(parts) == 2:
                depth = _parse_float(parts[1])
                if not 0 <= depth <= 1:
                    raise ValueError("range")
                session.depth = depth
                self._reply("OK")
            elif cmd == "AM:FREQ" and len(parts) == 2:
                f_m = _parse_float(parts[1])
                if f_m < 0:
                    raise ValueError("range")
                session.f_m = f_m
                self._reply("OK")
            elif cmd == "TONE" and len(parts) == 2:
                name = parts[1].upper()
                if name not in _TONE_NAMES:
                    raise ValueError("parse")
                session.tone_kind = _TONE_NAMES[name]
                self._reply("OK")
            elif cmd == "SEED" and len(parts) == 2:
                try:
                    seed = int(parts[1])
                except ValueError:
                    raise ValueError("parse") from None
                if not 0 <= seed < 2**64:
                    raise ValueError("range")
                session.seed = seed
                self._reply("OK")
            elif cmd == "OUTP" and len(parts) == 2:
                state = parts[1].upper()
                if state not in ("ON", "OFF"):
                    raise ValueError("parse")
                session.output_enabled = state == "ON"
                self._reply("OK")
            elif cmd == "CAPT?" and len(parts) == 2:
                if not session.output_enabled:
                    self._reply("ERR output disabled")
                    return
                try:
                    n = int(parts[1])
                except ValueError:
                    raise ValueError("parse") from None
                if n < 1:
                    raise ValueError("range")
                dig = session.capture(n)
                self._reply(f"OK {n}")
                for i, v in enumerate(dig.volts):
                    self._reply(f"{i},{float(v)!r}")
                self._reply("END")
            else:
                self._reply("ERR unknown command")
        except ValueError as exc:
            self._reply(f"ERR {exc}")
        except Exception as exc:  # never kill the session on a bad request
            self._reply(f"ERR internal {type(exc).__name__}")


class _Server(socketserver.ThreadingTCPServer):
    allow_reuse_address = True
    daemon_threads = True


class BenchServer:
    """Running server handle; use as a context manager or call close()."""

    def __init__(self, server: _Server, thread: threading.Thread):
        self._server = server
        self._thread = thread
        self.address = server.server_address[:2]

    def close(self):
        self._server.shutdown()
        self._server.server_close()
        self._thread.join(timeout=5)

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def serve(bind, preset: BenchPreset) -> BenchServer:
    """Start the bench server on (host, port); port 0 picks a free port."""
    try:
        server = _Server(tuple(bind), _Handler)
    except OSError as exc:
        raise TransportError(f"cannot bind {bind}: {exc}") from exc
    server.preset = preset
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    return BenchServer(server, thread)


class BenchClient:
    """Blocking line-protocol client, one request in flight at a time."""

    def __init__(self, address, timeout: float = 10.0):
        try:
            self._sock = socket.create_connection(tuple(address), timeout=timeout)
        except OSError as exc:
            raise TransportError(f"cannot connect to {address}: {exc}") from exc
        self._file = self._sock.makefile("rwb")

    def close(self):
        try:
            self._file.close()
        finally:
            self._sock.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()

    def _read_line(self) -> str:
        try:
            raw = self._file.readline()
        except OSError as exc:
            raise TransportError(f"read failed: {exc}") from exc
        if not raw:
            raise TransportError("connection closed by server")
        return raw.decode("utf-8").rstrip("\n")

    def command(self, line: str) -> str:
        """Send one non-capture command; returns the OK/ERR reply line."""
        try:
            self._file.write((line + "\n").encode("utf-8"))
            self._file.flush()
        except OSError as exc:
            raise TransportError(f"write failed: {exc}") from exc
        reply = self._read_line()
        if not (reply.startswith("OK") or reply.startswith("ERR")):
            raise TransportError(f"protocol violation: {reply!r}")
        return reply

    def require_ok(self, line: str) -> str:
        reply = self.command(line)
        if not reply.startswith("OK"):
            raise ValueError(f"bench refused {line!r}: {reply}")
        return reply

    def capture(self, n: int) -> np.ndarray:
        reply = self.command(f"CAPT? {n}")
        if not reply.startswith("OK"):
            raise ValueError(f"bench refused capture: {reply}")
        count = int(reply.split()[1])
        values = np.empty(count)
        for i in range(count):
            line = self._read_line()
            idx, _, value = line.partition(",")
            if int(idx) != i:
                raise TransportError(f"capture stream out of order at {line!r}")
            values[i] = float(value)
        end = self._read_line()
        if end != "END":
            raise TransportError(f"expected END, got {end!r}")
        return values


def client_execute(address, commands, timeout: float = 10.0) -> list:
    """Run a command script; capture queries yield arrays, others replies."""
    results = []
    with BenchClient(address, timeout=timeout) as client:
        for line in commands:
            if line.upper().startswith("CAPT?"):
                n = int(line.split()[1])
                results.append(client.capture(n))
            else:
                results.append(client.command(line))
    return results


def remote_capture(address, adc: AdcConfig, tone: ToneSpec, am: AmSpec,
                   seed: int, n_samples: int,
                   timeout: float = 10.0) -> DigitizedTrace:
    """Capture through a bench server and rebuild the digitized trace.

    The wire carries reconstructed volts with full repr precision; codes are
    recovered exactly from the converter's code-to-volts mapping.
    """
    with BenchClient(address, timeout=timeout) as client:
        client.require_ok(f"TONE {tone.kind.replace('_', '').upper()}")
        client.require_ok(f"AM:FREQ {tone.f_m!r}")
        client.require_ok(f"FREQ {am.f_c!r}")
        client.require_ok(f"POW {am.v_pk!r}VPK")
        client.require_ok(f"AM:DEPTH {am.depth!r}")
        client.require_ok(f"SEED {seed}")
        client.require_ok("OUTP ON")
        volts = client.capture(n_samples)
    codes = np.round((volts - adc.v_min) / adc.lsb - 0.5).astype(np.int64)
    return DigitizedTrace(codes, volts, q=adc.q, sample_rate=adc.f_s, t0=adc.tau)
