"""FCD ingestion and synthetic scene construction."""

import io
import math

import pytest

from trafficproof.sim import (
    BadParams,
    NonMonotonicTime,
    ParseError,
    load_fcd,
    synth_scenario,
    write_fcd_csv,
)

FCD_XML = """<?xml version="1.0" encoding="UTF-8"?>
<fcd-export>
    <timestep time="0.00">
        <vehicle id="veh0" x="0.00" y="0.00" angle="90.00" speed="10.00"/>
        <vehicle id="veh1" x="30.00" y="0.00" angle="90.00" speed="10.00"/>
    </timestep>
    <timestep time="1.00">
        <vehicle id="veh0" x="10.00" y="0.00" angle="90.00" speed="10.00"/>
        <vehicle id="veh1" x="40.00" y="0.00" angle="90.00" speed="10.00"/>
    </timestep>
    <timestep time="2.00">
        <vehicle id="veh0" x="20.00" y="0.00" angle="90.00" speed="10.00"/>
        <vehicle id="veh1" x="50.00" y="0.00" angle="90.00" speed="10.00"/>
    </timestep>
</fcd-export>
"""

FCD_CSV = """time,id,x,y,angle,speed
0.00,veh0,0.00,0.00,90.00,10.00
0.00,veh1,30.00,0.00,90.00,10.00
1.00,veh0,10.00,0.00,90.00,10.00
1.00,veh1,40.00,0.00,90.00,10.00
2.00,veh0,20.00,0.00,90.00,10.00
2.00,veh1,50.00,0.00,90.00,10.00
"""


class TestLoadFcd:
    def test_xml_shape(self):
        scenario = load_fcd(io.StringIO(FCD_XML), seed=1)
        assert scenario.n_ticks == 3
        assert [t.t_s for t in scenario.ticks] == [0.0, 1.0, 2.0]
        assert all(len(t.vehicles) == 2 for t in scenario.ticks)
        v0 = scenario.ticks[1].vehicles[0]
        assert (v0.vehicle_key, v0.x_m, v0.heading_deg) == ("veh0", 10.0, 90.0)

    def test_identity_stable_across_ticks(self):
        scenario = load_fcd(io.StringIO(FCD_XML), seed=1)
        for tick in scenario.ticks:
            for v in tick.vehicles:
                assert (v.pseudonym, v.plate) == scenario.identities[v.vehicle_key]

    def test_csv_equals_xml_given_same_seed(self):
        from_xml = load_fcd(io.StringIO(FCD_XML), seed=7)
        from_csv = load_fcd(io.StringIO(FCD_CSV), seed=7)
        assert from_xml.ticks == from_csv.ticks
        assert from_xml.identities == from_csv.identities

    def test_seed_changes_identities_not_geometry(self):
        a = load_fcd(io.StringIO(FCD_XML), seed=1)
        b = load_fcd(io.StringIO(FCD_XML), seed=2)
        assert a.identities != b.identities
        for ta, tb in zip(a.ticks, b.ticks):
            assert [(v.x_m, v.y_m) for v in ta.vehicles] == [(v.x_m, v.y_m) for v in tb.vehicles]

    def test_non_monotonic_time(self):
        bad = FCD_XML.replace('time="2.00"', 'time="0.50"')
        with pytest.raises(NonMonotonicTime):
            load_fcd(io.StringIO(bad), seed=1)
        bad_csv = FCD_CSV + "1.00,veh0,5,5,0,0\n"
        with pytest.raises(NonMonotonicTime):
            load_fcd(io.StringIO(bad_csv), seed=1)

    def test_parse_errors_carry_context(self):
        bad = FCD_XML.replace('x="10.00"', 'x="ten"')
        with pytest.raises(ParseError, match="veh0"):
            load_fcd(io.StringIO(bad), seed=1)
        with pytest.raises(ParseError, match="line 3"):
            load_fcd(io.StringIO("time,id,x,y,angle,speed\n0,veh0,0,0,0,0\n1,veh1,a,0,0,0\n"))
        with pytest.raises(ParseError):
            load_fcd(io.StringIO("not xml and not csv"))

    def test_sedan_filter(self):
        xml = FCD_XML.replace(
            '<vehicle id="veh1" x="30.00" y="0.00" angle="90.00" speed="10.00"/>',
            '<vehicle id="veh1" x="30.00" y="0.00" angle="90.00" speed="10.00" type="truck_heavy"/>',
        )
        scenario = load_fcd(io.StringIO(xml), seed=1)
        assert scenario.dropped_vehicles == 1
        assert len(scenario.ticks[0].vehicles) == 1
        kept = load_fcd(io.StringIO(FCD_XML.replace("veh1\" ", "veh1\" type=\"passenger\" ")), seed=1)
        assert kept.dropped_vehicles == 0

    def test_sedan_filter_csv(self):
        csv_typed = (
            "time,id,x,y,angle,speed,type\n"
            "0,veh0,0,0,90,10,passenger\n"
            "0,veh1,30,0,90,10,bus\n"
            "1,veh0,10,0,90,10,passenger\n"
            "1,veh1,40,0,90,10,bus\n"
        )
        scenario = load_fcd(io.StringIO(csv_typed), seed=1)
        assert scenario.dropped_vehicles == 2
        assert all(len(t.vehicles) == 1 for t in scenario.ticks)

    def test_csv_writer_round_trips(self):
        scenario = synth_scenario("line", 4, 12.0, 3, seed=5)
        buf = io.StringIO()
        write_fcd_csv(scenario, buf)
        again = load_fcd(io.StringIO(buf.getvalue()), seed=5)
        assert again.ticks == scenario.ticks


class TestSynth:
    def test_line_positions(self):
        scenario = synth_scenario("line", 3, 10.0, 1)
        xs = [v.x_m for v in scenario.ticks[0].vehicles]
        assert xs == [0.0, 10.0, 20.0]
        assert {v.heading_deg for v in scenario.ticks[0].vehicles} == {90.0}

    def test_deterministic(self):
        a = synth_scenario("grid", 30, 12.0, 5, seed=11)
        b = synth_scenario("grid", 30, 12.0, 5, seed=11)
        assert a.ticks == b.ticks
        assert a.identities == b.identities

    def test_grid_count(self):
        assert len(synth_scenario("grid", 100, 10.0, 1).ticks[0].vehicles) == 100

    def test_ring_stays_on_circle(self):
        n, spacing = 12, 10.0
        scenario = synth_scenario("ring", n, spacing, 4)
        radius = n * spacing / (2 * math.pi)
        for tick in scenario.ticks:
            for v in tick.vehicles:
                assert math.hypot(v.x_m, v.y_m) == pytest.approx(radius, rel=1e-9)

    def test_vehicles_advance(self):
        scenario = synth_scenario("line", 2, 10.0, 3)
        first, last = scenario.ticks[0].vehicles[0], scenario.ticks[2].vehicles[0]
        assert last.x_m == pytest.approx(first.x_m + 20.0)

    def test_bad_params(self):
        with pytest.raises(BadParams):
            synth_scenario("line", 0, 10.0, 1)
        with pytest.raises(BadParams):
            synth_scenario("line", 3, -1.0, 1)
        with pytest.raises(BadParams):
            synth_scenario("line", 3, 10.0, 0)
        with pytest.raises(BadParams):
            synth_scenario("spiral", 3, 10.0, 1)
