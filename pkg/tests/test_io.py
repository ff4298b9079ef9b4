import os

try:
    from . import common as c
except BaseException:
    import common as c

from dynreg.helpers.data import Verdict
from dynreg.io import csvsink
from dynreg.io import ioutils
from dynreg.io import meshtxt
from dynreg.io import svg
from dynreg.io import verdict as verdict_io


def _row(frame, holds=True):
    row = {name: 0.5 * frame for name in csvsink.RUN_COLUMNS}
    row["frame"] = frame
    row["holds"] = holds
    return row


class IOTest(c.unittest.TestCase):

    def test_fmt_float(self):
        assert ioutils.fmt_float(0.1) == "0.1"
        assert ioutils.fmt_float(float("nan")) == "nan"
        assert ioutils.fmt_float(-float("inf")) == "-inf"
        value = 1. / 3.
        assert float(ioutils.fmt_float(value)) == value

    def test_run_csv(self):
        with c.tmp_dir() as tmp:
            fname = os.path.join(tmp, "nested", "run.csv")
            csvsink.export_run(fname, [_row(0), _row(1, holds=False)])

            with open(fname) as f:
                header = f.readline().strip()
            assert header == ",".join(csvsink.RUN_COLUMNS)

            columns = csvsink.load_run(fname)
            assert c.np.array_equal(columns["frame"], [0, 1])
            assert c.np.array_equal(columns["holds"], [True, False])
            assert c.np.array_equal(columns["bregman"], [0., 0.5])

            bad = _row(0)
            del bad["alpha"]
            with self.assertRaises(KeyError):
                csvsink.export_run(fname, [bad])

    def test_verdict(self):
        verdicts = [
                Verdict("theorem_bregman[delta=0.1]", 10, 0, 0.25),
                Verdict("bound_misfit[delta=0.1]", 10, 2, -1e-3),
        ]
        with c.tmp_dir() as tmp:
            fname = os.path.join(tmp, "verdict.csv")
            verdict_io.export(fname, verdicts)
            loaded = verdict_io.load(fname)

        assert loaded == verdicts
        assert not verdict_io.all_pass(loaded)
        assert verdict_io.all_pass(loaded[:1])
        assert verdict_io.all_pass([])

    def test_mesh_text(self):
        m = c.coarse_mesh()
        with c.tmp_dir() as tmp:
            fname = os.path.join(tmp, "disk.txt")
            meshtxt.export(m, fname)
            loaded = meshtxt.load(fname)

            assert c.np.array_equal(loaded.nodes, m.nodes)
            assert c.np.array_equal(loaded.triangles, m.triangles)
            assert len(loaded.electrodes) == m.n_electrodes

            broken = os.path.join(tmp, "broken.txt")
            with open(broken, "w") as f:
                f.write("nodes 3\n0 0\n1 0\n")
            with self.assertRaises(ValueError):
                meshtxt.load(broken)

    def test_grid_function_csv(self):
        lattice = c.dynreg.Lattice.uniform([(-1., 1.), (0., 1.)], [3, 2])
        f = c.dynreg.GridFunction(lattice, [0., 1., 2., 3., 4., c.np.inf])
        with c.tmp_dir() as tmp:
            fname = os.path.join(tmp, "f.csv")
            csvsink.export_grid_function(fname, f)
            with open(fname) as fh:
                lines = fh.read().splitlines()

        assert lines[0] == "x0,x1,value"
        assert lines[1] == "-1.0,0.0,0.0"
        assert lines[-1] == "1.0,1.0,inf"
        assert len(lines) == 7

    def test_svg(self):
        x = c.np.arange(5)
        curves = [("δ = 0.1", x, 1. / (x + 1.)), ("zero", x, c.np.zeros(5))]
        text = svg.render(curves, title="errors")

        assert text.startswith("<?xml")
        assert text.count("<polyline") == 2
        assert "errors" in text

        with self.assertRaises(ValueError):
            svg.render([])
        with self.assertRaises(ValueError):
            svg.render([("zero", x, c.np.zeros(5))])


if __name__ == "__main__":
    c.unittest.main()
