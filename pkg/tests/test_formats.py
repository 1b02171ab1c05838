import struct

import numpy as np
import pytest

from riskroute.dist import DiscreteDistribution as D
from riskroute.exceptions import ParseError, ReferentialIntegrityError
from riskroute.formats import load_graph, load_profile, save_graph, save_profile
from riskroute.network import TimeProfile
from riskroute.synthetic import random_instance

from conftest import line_graph


@pytest.fixture
def instance():
    return random_instance(4)


def write(path, text):
    path.write_text(text)
    return path


class TestGraphIO:
    def test_round_trip(self, tmp_path, instance):
        save_graph(instance.graph, tmp_path)
        assert load_graph(tmp_path) == instance.graph

    def test_empty_nodes(self, tmp_path):
        write(tmp_path / "nodes.csv", "id,lat,lon\n")
        write(tmp_path / "edges.csv", "id,tail,head,length_m,speed_limit_mps\n")
        with pytest.raises(ParseError):
            load_graph(tmp_path)

    def test_unknown_node(self, tmp_path):
        write(tmp_path / "nodes.csv", "id,lat,lon\na,0,0\n")
        write(tmp_path / "edges.csv", "id,tail,head,length_m,speed_limit_mps\ne,a,b,10,10\n")
        with pytest.raises(ReferentialIntegrityError) as exc:
            load_graph(tmp_path)
        assert exc.value.line == 2

    @pytest.mark.parametrize("nodes,edges", [
        ("id,lat\na,0\n", "id,tail,head,length_m,speed_limit_mps\n"),
        ("id,lat,lon\na,x,0\n", "id,tail,head,length_m,speed_limit_mps\n"),
        ("id,lat,lon\na,0,0\na,1,1\n", "id,tail,head,length_m,speed_limit_mps\n"),
        ("id,lat,lon\na,0,0\nb,0,0\n", "id,tail,head,length_m,speed_limit_mps\ne,a,b,0,10\n"),
        ("id,lat,lon\na,0,0\nb,0,0\n", "id,tail,head,length_m,speed_limit_mps\ne,a,b,1,1\ne,b,a,1,1\n"),
        ("", "id,tail,head,length_m,speed_limit_mps\n"),
    ])
    def test_malformed(self, tmp_path, nodes, edges):
        write(tmp_path / "nodes.csv", nodes)
        write(tmp_path / "edges.csv", edges)
        with pytest.raises(ParseError):
            load_graph(tmp_path)

    def test_missing_file(self, tmp_path):
        with pytest.raises(ParseError):
            load_graph(tmp_path)


class TestProfileIO:
    @pytest.mark.parametrize("name", ["p.csv", "p.bin"])
    def test_round_trip(self, tmp_path, instance, name):
        path = tmp_path / name
        save_profile(instance.profile, path)
        back = load_profile(path, instance.graph)
        assert back == instance.profile

    @pytest.mark.parametrize("name", ["p.csv", "p.bin"])
    def test_round_trip_exact_floats(self, tmp_path, name):
        pmf = np.random.default_rng(0).random(7)
        d = D(pmf, 6.0, 18.0, normalize=True)
        p = TimeProfile({"e": [d] * 24}, 6.0, None)
        save_profile(p, tmp_path / name)
        back = load_profile(tmp_path / name)
        assert np.array_equal(back.hourly("e", "weekdays")[5].pmf, d.pmf)
        assert back.edge_cap is None

    def test_unknown_edge(self, tmp_path):
        p = TimeProfile({"nope": [D.degenerate(6.0, 6.0)] * 24}, 6.0)
        save_profile(p, tmp_path / "p.csv")
        with pytest.raises(ReferentialIntegrityError):
            load_profile(tmp_path / "p.csv", line_graph(2))

    def test_truncated_binary(self, tmp_path, instance):
        path = tmp_path / "p.bin"
        save_profile(instance.profile, path)
        raw = path.read_bytes()
        for cut in (6, len(raw) // 2, len(raw) - 3):
            path.write_bytes(raw[:cut])
            with pytest.raises(ParseError):
                load_profile(path)
        path.write_bytes(raw + b"\0")
        with pytest.raises(ParseError):
            load_profile(path)

    def test_binary_bad_bin_width(self, tmp_path):
        path = tmp_path / "p.bin"
        save_profile(TimeProfile({"e": [D.degenerate(6.0, 6.0)] * 24}, 6.0), path)
        raw = bytearray(path.read_bytes())
        struct.pack_into("<d", raw, 4 + 4, 5.0)
        path.write_bytes(bytes(raw))
        with pytest.raises(ParseError):
            load_profile(path)

    def _csv(self, tmp_path, rows, meta="# bin_width=6.0 edge_cap=600.0\n"):
        head = "edge_id,day_class,hour,bin_width,offset,pmf...\n"
        return write(tmp_path / "p.csv", meta + head + "".join(rows))

    def full_rows(self, skip=None, extra=()):
        rows = [f"e,weekdays,{h},6.0,6.0,1.0\n" for h in range(24) if h != skip]
        return rows + list(extra)

    def test_csv_ok(self, tmp_path):
        p = load_profile(self._csv(tmp_path, self.full_rows()))
        assert p.hourly("e", "weekdays")[0] == D.degenerate(6.0, 6.0)
        assert p.edge_cap == 600.0

    @pytest.mark.parametrize("case", ["missing_hour", "duplicate", "bad_mass", "bad_hour", "bw",
                                      "no_meta", "off_grid", "no_values", "nan"])
    def test_csv_errors(self, tmp_path, case):
        meta = "# bin_width=6.0 edge_cap=600.0\n"
        rows = self.full_rows()
        if case == "missing_hour":
            rows = self.full_rows(skip=5)
        elif case == "duplicate":
            rows = self.full_rows(extra=["e,weekdays,3,6.0,6.0,1.0\n"])
        elif case == "bad_mass":
            rows = self.full_rows(skip=0, extra=["e,weekdays,0,6.0,6.0,0.5,0.2\n"])
        elif case == "bad_hour":
            rows = self.full_rows(extra=["e,weekdays,24,6.0,6.0,1.0\n"])
        elif case == "bw":
            rows = self.full_rows(skip=0, extra=["e,weekdays,0,5.0,5.0,1.0\n"])
        elif case == "no_meta":
            meta = ""
        elif case == "off_grid":
            rows = self.full_rows(skip=0, extra=["e,weekdays,0,6.0,7.0,1.0\n"])
        elif case == "no_values":
            rows = self.full_rows(skip=0, extra=["e,weekdays,0,6.0,6.0\n"])
        elif case == "nan":
            rows = self.full_rows(skip=0, extra=["e,weekdays,0,6.0,6.0,nan\n"])
        with pytest.raises(ParseError):
            load_profile(self._csv(tmp_path, rows, meta))

    def test_missing_file(self, tmp_path):
        with pytest.raises(ParseError):
            load_profile(tmp_path / "nope.bin")
