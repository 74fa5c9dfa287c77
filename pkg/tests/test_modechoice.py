import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fourstep.modechoice import ModeChoiceError, NBModel, fit_nb
from oracles import nb_counting


class TestFitNb:
    def test_paper_prior_arithmetic(self):
        X = np.zeros((10, 1), dtype=int)
        labels = ["transit"] * 3 + ["drive"] * 7
        model = fit_nb(X, labels, modes=["transit", "drive"], alpha=0.0)
        np.testing.assert_allclose(model.priors, [0.3, 0.7])

    def test_laplace_likelihood(self):
        # 4 walk records, none with feature 0 == 1, alpha = 1, binary feature
        X = np.array([[0]] * 4 + [[1]] * 2)
        labels = ["walk"] * 4 + ["drive"] * 2
        model = fit_nb(X, labels, modes=["walk", "drive"], alpha=1.0)
        w = model.modes.index("walk")
        assert model.likelihoods[0, 1, w] == pytest.approx(1.0 / 6.0)

    def test_matches_counting_oracle_exactly(self):
        rng = np.random.default_rng(3)
        modes = ["transit", "drive", "walk"]
        X = (rng.random((60, 4)) < 0.5).astype(int)
        labels = [modes[i] for i in rng.integers(0, 3, 60)]
        for alpha in (0.0, 1.0, 2.5):
            model = fit_nb(X, labels, modes=modes, alpha=alpha)
            priors, like = nb_counting(X, labels, modes, alpha)
            for k, m in enumerate(modes):
                assert model.priors[k] == priors[m]
                for i in range(4):
                    for v in (0, 1):
                        assert model.likelihoods[i, v, k] == like[(i, v, m)]

    def test_distributions_normalized(self):
        rng = np.random.default_rng(4)
        X = (rng.random((40, 3)) < 0.5).astype(int)
        labels = ["transit" if r < 0.5 else "drive" for r in rng.random(40)]
        model = fit_nb(X, labels, modes=["transit", "drive"], alpha=1.0)
        assert model.priors.sum() == pytest.approx(1.0, abs=1e-12)
        np.testing.assert_allclose(
            model.likelihoods.sum(axis=1), 1.0, atol=1e-12
        )
        assert np.all(model.likelihoods > 0)

    def test_empty_records_rejected(self):
        with pytest.raises(ModeChoiceError, match="empty"):
            fit_nb(np.zeros((0, 2), dtype=int), [])

    def test_unknown_label_rejected(self):
        with pytest.raises(ModeChoiceError, match="unknown mode"):
            fit_nb(np.zeros((1, 1), dtype=int), ["teleport"])


class TestPosterior:
    def uniform_model(self, n_modes=3, n_features=2):
        modes = [f"m{i}" for i in range(n_modes)]
        return NBModel(
            modes=modes,
            priors=np.full(n_modes, 1.0 / n_modes),
            likelihoods=np.full((n_features, 2, n_modes), 0.5),
            alpha=1.0,
        )

    def test_uniform_everything_gives_uniform_posterior(self):
        model = self.uniform_model()
        post = model.posterior(np.array([1, 0]))
        np.testing.assert_allclose(post, 1.0 / 3.0, atol=1e-12)

    def test_equal_likelihoods_reduce_to_priors(self):
        model = NBModel(
            modes=["a", "b"],
            priors=np.array([0.3, 0.7]),
            likelihoods=np.full((2, 2, 2), 0.5),
            alpha=1.0,
        )
        post = model.posterior(np.array([1, 1]))
        np.testing.assert_allclose(post, [0.3, 0.7], atol=1e-12)

    def test_hand_built_tables_match_direct_products(self):
        likelihoods = np.zeros((2, 2, 2))
        likelihoods[0, :, 0] = [0.8, 0.2]
        likelihoods[0, :, 1] = [0.4, 0.6]
        likelihoods[1, :, 0] = [0.3, 0.7]
        likelihoods[1, :, 1] = [0.9, 0.1]
        model = NBModel(
            modes=["a", "b"],
            priors=np.array([0.25, 0.75]),
            likelihoods=likelihoods,
            alpha=0.0,
        )
        for x in ([0, 0], [0, 1], [1, 0], [1, 1]):
            x = np.array(x)
            raw = np.array([
                0.25 * likelihoods[0, x[0], 0] * likelihoods[1, x[1], 0],
                0.75 * likelihoods[0, x[0], 1] * likelihoods[1, x[1], 1],
            ])
            np.testing.assert_allclose(
                model.posterior(x), raw / raw.sum(), atol=1e-12
            )

    def test_arity_mismatch(self):
        with pytest.raises(ModeChoiceError, match="length"):
            self.uniform_model().posterior(np.array([1, 0, 1]))

    @given(st.integers(0, 10**6))
    @settings(max_examples=100, deadline=None)
    def test_posterior_sums_to_one(self, seed):
        rng = np.random.default_rng(seed)
        n_modes = int(rng.integers(2, 5))
        n_features = int(rng.integers(1, 6))
        priors = rng.dirichlet(np.ones(n_modes))
        like = rng.dirichlet(np.ones(2), size=(n_features, n_modes))
        likelihoods = np.transpose(like, (0, 2, 1))
        model = NBModel(
            modes=[f"m{i}" for i in range(n_modes)],
            priors=priors,
            likelihoods=likelihoods,
            alpha=1.0,
        )
        x = rng.integers(0, 2, n_features)
        post = model.posterior(x)
        assert post.sum() == pytest.approx(1.0, abs=1e-12)
        assert np.all(post >= 0)

    def test_smoothed_posterior_never_exactly_zero(self):
        rng = np.random.default_rng(9)
        X = (rng.random((30, 3)) < 0.5).astype(int)
        labels = ["transit" if r < 0.9 else "walk" for r in rng.random(30)]
        model = fit_nb(X, labels, modes=["transit", "walk"], alpha=1.0)
        for x in ([0, 0, 0], [1, 1, 1]):
            assert np.all(model.posterior(np.array(x)) > 0)

    def test_log_space_matches_direct_product(self):
        rng = np.random.default_rng(10)
        priors = rng.dirichlet([1, 1, 1])
        like = np.transpose(rng.dirichlet(np.ones(2), size=(4, 3)), (0, 2, 1))
        model = NBModel(
            modes=["a", "b", "c"], priors=priors, likelihoods=like, alpha=1.0
        )
        for _ in range(20):
            x = rng.integers(0, 2, 4)
            direct = priors.copy()
            for i, v in enumerate(x):
                direct *= like[i, v]
            direct /= direct.sum()
            np.testing.assert_allclose(model.posterior(x), direct, atol=1e-10)


class TestPredictMode:
    def test_argmax(self):
        model = NBModel(
            modes=["transit", "drive", "walk"],
            priors=np.array([0.6, 0.3, 0.1]),
            likelihoods=np.full((1, 2, 3), 0.5),
            alpha=0.0,
        )
        assert model.predict(np.array([0])) == "transit"

    def test_exact_tie_breaks_by_declared_order(self):
        model = NBModel(
            modes=["transit", "drive"],
            priors=np.array([0.5, 0.5]),
            likelihoods=np.full((1, 2, 2), 0.5),
            alpha=0.0,
        )
        assert model.predict(np.array([1])) == "transit"

    def test_predict_consistent_with_posterior(self):
        rng = np.random.default_rng(11)
        for _ in range(500):
            n_modes = int(rng.integers(2, 4))
            priors = rng.dirichlet(np.ones(n_modes))
            like = np.transpose(rng.dirichlet(np.ones(2), size=(3, n_modes)), (0, 2, 1))
            model = NBModel(
                modes=[f"m{i}" for i in range(n_modes)],
                priors=priors,
                likelihoods=like,
                alpha=1.0,
            )
            x = rng.integers(0, 2, 3)
            post = model.posterior(x)
            assert model.predict(x) == model.modes[int(np.argmax(post))]

    def test_scaling_invariance(self):
        # scaling all unnormalized scores leaves posterior unchanged
        priors = np.array([0.2, 0.8])
        like = np.full((2, 2, 2), 0.5)
        m1 = NBModel(modes=["a", "b"], priors=priors, likelihoods=like, alpha=0.0)
        m2 = NBModel(
            modes=["a", "b"], priors=priors * 1.0, likelihoods=like * 2.0, alpha=0.0
        )
        x = np.array([1, 0])
        np.testing.assert_allclose(m1.posterior(x), m2.posterior(x), atol=1e-12)
        assert m1.predict(x) == m2.predict(x)


class TestSerialization:
    def test_round_trip(self):
        rng = np.random.default_rng(12)
        X = (rng.random((30, 5)) < 0.5).astype(int)
        labels = ["transit", "drive", "walk"] * 10
        model = fit_nb(X, labels, alpha=1.0)
        again = NBModel.from_json(model.to_json())
        np.testing.assert_array_equal(model.priors, again.priors)
        np.testing.assert_array_equal(model.likelihoods, again.likelihoods)
        assert model.modes == again.modes
