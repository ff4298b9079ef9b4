try:
    from . import common as c
except BaseException:
    import common as c

from dynreg import forward_eit
from dynreg.regularisers import BoxConstraint
from dynreg.helpers import raise_if


def _sigma(m, seed=c.SEED):
    """Smooth admissible conductivity."""
    nodes = c.np.asarray(m.nodes)
    rng = c.rng(seed)
    a, b = rng.uniform(-0.3, 0.3, 2)
    return 1.2 + a * nodes[:, 0] + b * nodes[:, 1] ** 2


class CEMTest(c.unittest.TestCase):

    def setUp(self):
        self.mesh = c.coarse_mesh()
        self.system = forward_eit.CEMSystem(self.mesh)

    def test_current_conservation(self):
        """
        Currents of every pattern sum to zero.
        """
        currents = self.system.solve_forward(_sigma(self.mesh))
        assert currents.shape == (8, 8)
        assert c.np.allclose(currents.sum(axis=0), 0., atol=1e-10)

    def test_reciprocity(self):
        currents = self.system.solve_forward(_sigma(self.mesh))
        assert c.np.allclose(currents, currents.T, atol=1e-10)

    def test_homogeneous_rotation(self):
        """
        Rotating σ by one electrode sector shifts electrodes and patterns by
        one.
        """
        sigma = _sigma(self.mesh)
        rotated = self.mesh.rotate_nodal(sigma)
        currents = self.system.solve_forward(sigma)
        currents_rot = self.system.solve_forward(rotated)

        expected = c.np.roll(c.np.roll(currents, 1, axis=0), 1, axis=1)
        assert c.np.allclose(currents_rot, expected, atol=1e-10)

    def test_scaling(self):
        """
        Scaling σ and the contact admittance together scales the currents.
        """
        sigma = _sigma(self.mesh)
        scaled = forward_eit.CEMSystem(
                self.mesh, contact_impedance=0.5 * 0.01
        )
        assert c.np.allclose(
                scaled.solve_forward(2. * sigma),
                2. * self.system.solve_forward(sigma),
                atol=1e-10,
        )

    def test_conductance_grows_with_sigma(self):
        """
        A uniformly larger σ draws more current at the excited electrode.
        """
        n = self.mesh.n_nodes
        levels = (0.6, 1., 1.5, 2.5)
        excited = c.np.array([
                c.np.abs(c.np.diag(
                        self.system.solve_forward(c.np.full(n, s))
                ))
                for s in levels
        ])

        assert c.np.all(c.np.diff(excited, axis=0) > 0.)

    def test_tangent_matches_finite_differences(self):
        sigma = _sigma(self.mesh)
        h = c.rng(3).standard_normal(self.mesh.n_nodes) * 0.1
        eps = 1e-6
        fd = (
                self.system.solve_forward(sigma + eps * h)
                - self.system.solve_forward(sigma - eps * h)
        ) / (2. * eps)
        tangent = self.system.jacobian_apply(sigma, h)

        assert c.relative_error(tangent, fd) < 1e-6

    def test_adjoint_matches_tangent(self):
        """
        <w, I'(σ) h> = <I'(σ)^* w, h>.
        """
        sigma = _sigma(self.mesh)
        rng = c.rng(5)
        h = rng.standard_normal(self.mesh.n_nodes)
        w = rng.standard_normal((8, 8))

        lhs = float(c.np.sum(w * self.system.jacobian_apply(sigma, h)))
        rhs = float(self.system.jacobian_adjoint_apply(sigma, w) @ h)
        assert abs(lhs - rhs) <= 1e-9 * max(abs(lhs), 1.)

    def test_solve_counters(self):
        """
        Forward and adjoint solves of one frame share a factorisation.
        """
        sigma = _sigma(self.mesh)
        self.system.solve_forward(sigma)
        self.system.jacobian_adjoint_apply(sigma, c.np.ones((8, 8)))

        assert self.system.n_factorisations == 1
        assert self.system.n_forward_solves == 1
        assert self.system.n_adjoint_solves == 1

        self.system.solve_forward(sigma + 0.1)
        assert self.system.n_factorisations == 2

        self.system.reset_counters()
        assert self.system.n_factorisations == 0

    def test_conductivity_bounds(self):
        n = self.mesh.n_nodes
        assert c.np.all(forward_eit.Conductivity.homogeneous(n).values == 1.)
        with self.assertRaises(ValueError):
            forward_eit.Conductivity(c.np.full(n, 10.))
        with self.assertRaises(ValueError):
            forward_eit.Conductivity(c.np.ones(n), lower=2., upper=1.)

    def test_bad_inputs(self):
        with self.assertRaises(raise_if.DimensionError):
            self.system.solve_forward(c.np.ones(3))
        with self.assertRaises(ValueError):
            forward_eit.CEMSystem(self.mesh, contact_impedance=0.)
        with self.assertRaises(raise_if.DimensionError):
            forward_eit.CEMSystem(self.mesh, patterns=c.np.eye(3))


class EITFrameModelTest(c.unittest.TestCase):

    def test_measurement_vector(self):
        currents = c.rng().standard_normal((8, 8))
        vec = forward_eit.measurement_vector(currents)
        assert vec.size == 7 * 8

        back = forward_eit.embed_measurements(vec, 8)
        expected = currents.copy()
        c.np.fill_diagonal(expected, 0.)
        assert c.np.array_equal(back, expected)

        with self.assertRaises(raise_if.DimensionError):
            forward_eit.measurement_vector(c.np.ones((2, 3)))

    def test_data_gradient(self):
        """
        Gradient of 1/2 |W (A(σ) - b)|^2 against central differences.
        """
        m = c.coarse_mesh()
        model = forward_eit.EITFrameModel(forward_eit.CEMSystem(m))
        sigma = _sigma(m)
        b = model.apply(_sigma(m, seed=2))
        _, grad = model.data_gradient(sigma, b, precision=10.)

        h = c.rng(7).standard_normal(m.n_nodes)
        eps = 1e-6
        plus, _ = model.data_gradient(sigma + eps * h, b, precision=10.)
        minus, _ = model.data_gradient(sigma - eps * h, b, precision=10.)
        fd = (plus - minus) / (2. * eps)

        assert abs(fd - grad @ h) <= 1e-5 * max(abs(fd), 1e-3)
        assert model.out_dim == 56

        with self.assertRaises(AttributeError):
            model.adjoint_apply(b)

    def test_one_factorisation_per_online_frame(self):
        """
        Every online frame factorises once and solves forward and adjoint
        once each.
        """
        m = c.coarse_mesh()
        system = forward_eit.CEMSystem(m)
        model = forward_eit.EITFrameModel(system)
        regs = c.dynreg.RegulariserStack(
                c.dynreg.MeshGradient(m),
                BoxConstraint(0.5, 3.),
        )
        frames = 12
        exact = c.np.tile(model.apply(_sigma(m)), (frames, 1))
        stream = c.dynreg.MeasurementStream(exact)
        system.reset_counters()

        trajectory, _ = c.dynreg.run_online(model, stream, regs, alpha=0.01)

        assert len(trajectory) == frames
        assert system.n_factorisations == frames
        assert system.n_forward_solves == frames
        assert system.n_adjoint_solves == frames
        assert system.n_tangent_solves == 0


if __name__ == "__main__":
    c.unittest.main()
