try:
    from . import common as c
except BaseException:
    import common as c

from dynreg.create import mesh as create_mesh
from dynreg.create import scenario
from dynreg.create import vertices
from dynreg.helpers import raise_if
from dynreg.regularisers import tv_value


class MeshCreatorTest(c.unittest.TestCase):

    def test_disk_counts(self):
        """
        Ring i carries n_electrodes * i nodes, every sector holds rings^2
        triangles.
        """
        m = create_mesh.disk(rings=3, n_electrodes=8)

        assert m.n_nodes == 1 + 8 * (1 + 2 + 3)
        assert m.n_tri == 8 * 3**2
        assert m.n_electrodes == 8
        assert c.np.all(m.areas() > 0)
        area = float(c.np.sum(m.areas()))
        assert 0.95 * c.np.pi < area < c.np.pi
        assert c.np.allclose(m.electrode_lengths(), m.electrode_lengths()[0])

    def test_geometry_computed_once(self):
        m = create_mesh.disk(rings=2, n_electrodes=8)
        areas = m.areas()

        assert m.areas() is areas
        assert not areas.flags.writeable
        assert not m.nodes.flags.writeable
        assert m.boundary_edges().dtype.kind == "i"
        with self.assertRaises(ValueError):
            areas[0] = 1.

    def test_rotation_symmetry(self):
        """
        The recorded permutation is the rotation by one electrode sector.
        """
        n_el = 8
        m = create_mesh.disk(rings=3, n_electrodes=n_el)
        perm = m.symmetry[0]
        angle = 2. * c.np.pi / n_el
        rot = c.np.array(
                [
                        [c.np.cos(angle), -c.np.sin(angle)],
                        [c.np.sin(angle), c.np.cos(angle)],
                ]
        )
        nodes = c.np.asarray(m.nodes)

        assert c.np.allclose(nodes[perm], nodes @ rot.T)

        values = c.rng().standard_normal(m.n_nodes)
        assert c.np.array_equal(m.rotate_nodal(values, n_el), values)
        assert not c.np.array_equal(m.rotate_nodal(values, 1), values)

    def test_bad_arguments(self):
        with self.assertRaises(ValueError):
            create_mesh.disk(rings=1)
        with self.assertRaises(ValueError):
            create_mesh.disk(n_electrodes=2)
        with self.assertRaises(ValueError):
            create_mesh.disk(coverage=1.)

    def test_validation(self):
        m = c.coarse_mesh()
        nodes = c.np.asarray(m.nodes)
        tri = c.np.asarray(m.triangles)

        flipped = tri.copy()
        flipped[0] = flipped[0, ::-1]
        with self.assertRaises(raise_if.AssemblyError):
            c.dynreg.Mesh(nodes, flipped, m.electrodes)

        # center node is not on the boundary
        with self.assertRaises(raise_if.AssemblyError):
            c.dynreg.Mesh(nodes, tri, [[0, 1]])

        with self.assertRaises(raise_if.AssemblyError):
            c.dynreg.Mesh(nodes, tri, [])

        overlap = list(m.electrodes[:2]) + [m.electrodes[0]]
        with self.assertRaises(raise_if.AssemblyError):
            c.dynreg.Mesh(nodes, tri, overlap)


class ScenarioTest(c.unittest.TestCase):

    def test_pixel_centers(self):
        centers = vertices.pixel_centers((2, 4))
        assert centers.shape == (8, 2)
        assert c.np.allclose(centers[0], [-0.75, -0.5])
        assert c.np.allclose(centers[-1], [0.75, 0.5])

        with self.assertRaises(ValueError):
            vertices.pixel_centers((0, 3))

    def test_grid_truth(self):
        spec = c.small_spec()
        truth, motion = scenario.build_scenario(spec, grid=c.GRID)

        assert len(truth) == c.SMALL_FRAMES
        assert truth.frame_dim == c.GRID[0] * c.GRID[1]
        # both inclusions are visible at the start
        assert truth[0].max() == spec.contrast
        # motion stops, frames after the ramp are shared
        assert truth[c.SMALL_RAMP] is truth[c.SMALL_FRAMES - 1]
        assert not c.np.any(motion.displacement(c.SMALL_RAMP))
        assert c.np.any(motion.displacement(0))

    def test_everything_absent(self):
        """
        Motion parameter in [1/2, 3/4) hides both default inclusions.
        """
        spec = c.small_spec()
        truth, motion = scenario.build_scenario(spec, grid=c.GRID)
        p = spec.motion_parameter(8)
        assert 0.5 <= p < 0.75

        assert c.np.all(truth[8] == spec.background)
        assert motion.centers(8) == [None, None]

    def test_presence_events(self):
        events = scenario.presence_events(c.small_spec())
        kinds = sorted((i, kind) for _, i, kind in events)

        assert kinds == [
                (0, "disappear"),
                (0, "reappear"),
                (1, "disappear"),
                (1, "reappear"),
        ]
        frames = {(i, kind): k for k, i, kind in events}
        assert frames[(0, "disappear")] < frames[(1, "disappear")]
        assert frames[(1, "disappear")] < frames[(1, "reappear")]
        assert frames[(0, "reappear")] == frames[(1, "reappear")]

    def test_mesh_truth(self):
        m = c.coarse_mesh()
        truth, motion = scenario.build_scenario(c.small_spec(), mesh=m)

        assert truth.frame_dim == m.n_nodes
        assert motion.shape is None

        with self.assertRaises(ValueError):
            scenario.build_scenario(c.small_spec(), grid=c.GRID, mesh=m)
        with self.assertRaises(ValueError):
            scenario.build_scenario(c.small_spec())

    def test_path_leaving_domain(self):
        spec = c.dynreg.ScenarioSpec(
                total_frames=3,
                ramp_frames=2,
                inclusions=[c.dynreg.core.InclusionSpec(path_radius=0.95)],
        )
        with self.assertRaises(ValueError):
            scenario.build_scenario(spec, grid=c.GRID)


class DegenerateChainTest(c.unittest.TestCase):

    def test_null_direction(self):
        chain = scenario.degenerate_chain(n=8)
        direction = scenario.null_direction(chain)

        assert chain.pair == 3
        assert chain.operator.out_dim == 7
        assert c.np.allclose(chain.operator.apply(direction), 0.)
        assert c.np.isclose(c.np.linalg.norm(direction), 1.)

    def test_solution_set_is_a_segment(self):
        """
        Every sample has the data and the total variation of the truth, and
        there is more than one.
        """
        chain = scenario.degenerate_chain(n=8)
        solutions = scenario.chain_solution_set(chain)
        data = chain.operator.apply(chain.truth)

        assert solutions.shape[0] > 1
        for s in solutions:
            assert c.np.allclose(chain.operator.apply(s), data)
            assert c.np.isclose(
                    tv_value(chain.gradient, s),
                    tv_value(chain.gradient, chain.truth),
            )
        offsets = c.np.linalg.norm(solutions - chain.truth, axis=1)
        assert offsets.min() < 1e-12

    def test_bad_chain(self):
        with self.assertRaises(ValueError):
            scenario.degenerate_chain(n=3)
        with self.assertRaises(ValueError):
            scenario.degenerate_chain(n=8, pair=0)
        with self.assertRaises(ValueError):
            scenario.degenerate_chain(low=1., high=0.)


if __name__ == "__main__":
    c.unittest.main()
