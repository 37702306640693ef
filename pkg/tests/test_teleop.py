import asyncio
import json

import numpy as np
import pytest
import websockets

from stepup.config import load_config
from stepup.net import GaussianPolicy, make_value_net, save_params
from stepup.teleop import TeleopService, TeleopSim


@pytest.fixture(scope="module")
def cfg():
    return load_config()


@pytest.fixture(scope="module")
def policy(tmp_path_factory):
    rng = np.random.default_rng(0)
    return GaussianPolicy.create(23, 6, [32, 16], rng)


class TestTeleopSim:
    def test_commanded_direction_reaches_the_observation_exactly(self, cfg, policy):
        sim = TeleopSim(cfg, policy)
        for target in (0.0, 1.0, -1.0, 0.4, -0.75):
            sim.apply_command(direction=target)
            assert sim.observe()[0, 3] == pytest.approx(target, abs=1e-6)

    def test_bool_toggle_flips_the_observation(self, cfg, policy):
        sim = TeleopSim(cfg, policy)
        sim.apply_command(bool_=0)
        assert sim.observe()[0, 6] == 0.0
        sim.apply_command(bool_=1)
        assert sim.observe()[0, 6] == 1.0

    def test_reset_respawns_before_the_step(self, cfg, policy):
        sim = TeleopSim(cfg, policy, kind="stairs_family", level=2)
        for _ in range(30):
            sim.step()
        sim.q[0, 0] += 2.0
        sim.reset()
        assert sim.q[0, 0] < float(sim.field.edges_x[0])
        assert sim.tick == 0

    def test_terrain_select_switches_field(self, cfg, policy):
        sim = TeleopSim(cfg, policy)
        sim.set_terrain("smooth_slope", 4)
        assert sim.kind == "smooth_slope" and sim.level == 4
        assert sim.command["bool"] == 0.0
        msg = sim.terrain_message()
        assert len(msg["points"]) > 50

    def test_snapshot_carries_pose_and_contacts(self, cfg, policy):
        sim = TeleopSim(cfg, policy)
        for _ in range(10):
            sim.step()
        snap = sim.snapshot()
        assert set(snap) >= {"t", "sim", "wheels", "command", "obs"}
        assert len(snap["sim"]["joints"]) == 4
        assert len(snap["wheels"]) == 2


async def _run_service_session(service, client_fn):
    ready = asyncio.Event()
    runner = asyncio.create_task(service.run(ready))
    await asyncio.wait_for(ready.wait(), 5)
    try:
        return await asyncio.wait_for(client_fn(), 20)
    finally:
        service.stop()
        runner.cancel()
        try:
            await runner
        except (asyncio.CancelledError, Exception):
            pass


class TestTeleopService:
    def make_service(self, cfg, policy, port, realtime=True):
        return TeleopService(cfg, policy, port=port, realtime=realtime)

    def test_snapshots_flow_and_bool_toggle_applies_quickly(self, cfg, policy):
        service = self.make_service(cfg, policy, port=18788)

        async def client():
            async with websockets.connect("ws://127.0.0.1:18788") as ws:
                hello = json.loads(await ws.recv())
                assert hello["type"] == "hello"
                terrain = json.loads(await ws.recv())
                assert terrain["type"] == "terrain"

                state = json.loads(await ws.recv())
                assert state["type"] == "state"
                start_t = state["t"]
                await ws.send(json.dumps({"type": "command", "seq": 1,
                                          "bool": 1 - int(state["command"]["bool"]),
                                          "direction": 0.5}))
                flipped_at = None
                last_seq = state["seq"]
                for _ in range(30):
                    msg = json.loads(await ws.recv())
                    assert msg["seq"] > last_seq   # monotone sequence numbers
                    last_seq = msg["seq"]
                    if msg["type"] == "state" and msg["command"]["direction"] == 0.5:
                        flipped_at = msg["t"]
                        assert msg["obs"]["dir"] == pytest.approx(0.5, abs=1e-4)
                        break
                assert flipped_at is not None
                # applied within 2 control ticks (40 ms) of the next snapshot
                assert flipped_at - start_t <= 6 * 0.02 + 1e-9
                return True

        assert asyncio.run(_run_service_session(service, client))

    def test_reset_message_respawns(self, cfg, policy):
        service = self.make_service(cfg, policy, port=18789)

        async def client():
            async with websockets.connect("ws://127.0.0.1:18789") as ws:
                await ws.recv()   # hello
                await ws.recv()   # terrain
                service.sim.q[0, 0] += 1.5
                moved_x = service.sim.q[0, 0]
                await ws.send(json.dumps({"type": "reset", "seq": 1}))
                for _ in range(20):
                    msg = json.loads(await ws.recv())
                    if msg["type"] == "state" and msg["sim"]["x"] < moved_x - 1.0:
                        return True
                return False

        assert asyncio.run(_run_service_session(service, client))

    def test_malformed_messages_get_error_replies_and_session_survives(self, cfg, policy):
        service = self.make_service(cfg, policy, port=18790)

        async def client():
            async with websockets.connect("ws://127.0.0.1:18790") as ws:
                await ws.recv()
                await ws.recv()
                await ws.send("this is not json")
                saw_error = False
                for _ in range(20):
                    msg = json.loads(await ws.recv())
                    if msg["type"] == "error":
                        saw_error = True
                        break
                assert saw_error
                await ws.send(json.dumps({"type": "bogus", "seq": 2}))
                for _ in range(20):
                    msg = json.loads(await ws.recv())
                    if msg["type"] == "error":
                        return True
                return False

        assert asyncio.run(_run_service_session(service, client))

    def test_snapshot_rate_near_25hz(self, cfg, policy):
        service = self.make_service(cfg, policy, port=18791)

        async def client():
            import time as _time
            async with websockets.connect("ws://127.0.0.1:18791") as ws:
                await ws.recv()
                await ws.recv()
                count = 0
                t0 = None
                while count < 25:
                    msg = json.loads(await ws.recv())
                    if msg["type"] != "state":
                        continue
                    if t0 is None:
                        t0 = _time.monotonic()
                    else:
                        count += 1
                rate = count / (_time.monotonic() - t0)
                return rate

        rate = asyncio.run(_run_service_session(service, client))
        assert 20.0 <= rate <= 30.0

    def test_headless_sim_keeps_running_without_clients(self, cfg, policy):
        service = self.make_service(cfg, policy, port=18792, realtime=False)

        async def client():
            await asyncio.sleep(0.3)
            return service.sim.tick

        ticks = asyncio.run(_run_service_session(service, client))
        assert ticks > 5

    def test_sequence_numbers_monotone_and_terrain_select(self, cfg, policy):
        service = self.make_service(cfg, policy, port=18793)

        async def client():
            async with websockets.connect("ws://127.0.0.1:18793") as ws:
                seqs = [json.loads(await ws.recv())["seq"] for _ in range(2)]
                await ws.send(json.dumps({"type": "terrain", "seq": 3,
                                          "kind": "smooth_slope", "level": 6}))
                for _ in range(30):
                    msg = json.loads(await ws.recv())
                    seqs.append(msg["seq"])
                    if msg["type"] == "terrain":
                        assert msg["kind"] == "smooth_slope"
                        assert msg["level"] == 6
                        assert all(b > a for a, b in zip(seqs, seqs[1:]))
                        return True
                return False

        assert asyncio.run(_run_service_session(service, client))
