import numpy as np
import pytest

from core.errors import ConfigError, MissingArtifactError
from core.rng import Rng
from core.types import DeformationMode, MechanicalProps
from neuralnet.regressor import Normalizer
from search.random_search import incumbents, random_search, search_points
from search.sampling import compare_sampling, heatmap_scores, min_distance, space_filling_plan
from search.scoring import evaluate_latent, load_models, score, score_batch


# --- Scoring ---

def test_score_examples():
    norm = Normalizer(DeformationMode.ShearX, np.array([200.0, 0.1]), np.array([400.0, 0.5]))
    assert score(MechanicalProps(200.0, 0.1, "ShearX"), norm) == 0.0
    assert score(MechanicalProps(400.0, 0.5, "ShearX"), norm) == 1.0
    assert score(MechanicalProps(300.0, 0.3, "ShearX"), norm) == pytest.approx(0.25)
    # below the training minimum clamps to zero instead of flipping sign
    assert score(MechanicalProps(150.0, 0.05, "ShearX"), norm) == 0.0


def test_score_needs_matching_fitted_normalizer():
    props = MechanicalProps(300.0, 0.3, "TensileX")
    with pytest.raises(ConfigError):
        score(props, Normalizer("TensileX"))
    with pytest.raises(ConfigError):
        score(props, Normalizer("ShearY", np.zeros(2), np.ones(2)))


def test_evaluate_latent_constant_stubs(constant_models):
    models = constant_models([0.1, 0.2, 0.3, 0.4])
    image, scores, mode = evaluate_latent([10.0, 20.0], models)
    assert np.allclose(scores, [0.1, 0.2, 0.3, 0.4])
    assert mode is DeformationMode.ShearY
    again = evaluate_latent([10.0, 20.0], models)
    assert np.array_equal(again[0], image) and np.array_equal(again[1], scores)


def test_evaluate_latent_tie_goes_to_lowest_mode(constant_models):
    _, _, mode = evaluate_latent([5.0, 5.0], constant_models([0.3, 0.3, 0.3, 0.3]))
    assert mode is DeformationMode.TensileX


def test_best_mode_invariant_to_common_scaling(constant_models):
    base = [0.12, 0.31, 0.27, 0.05]
    _, _, mode = evaluate_latent([1.0, 1.0], constant_models(base))
    _, _, scaled = evaluate_latent([1.0, 1.0], constant_models([3.0 * v for v in base]))
    assert mode is scaled is DeformationMode.TensileY


def test_score_batch_matches_single_evaluation(quadratic_models):
    zs = Rng(3).uniform(0, 100, size=(600, 2))
    scores, props = score_batch(zs, quadratic_models, chunk=128)
    assert scores.shape == (600, 4) and props.shape == (600, 4, 2)
    for i in (0, 127, 128, 599):
        assert np.allclose(evaluate_latent(zs[i], quadratic_models)[1], scores[i])


def test_load_models_missing(tmp_path):
    with pytest.raises(MissingArtifactError):
        load_models(tmp_path / "generator.mfnn", tmp_path)


# --- Random search ---

def test_incumbents_strict_update():
    scores = np.array([[0.2, 0.1, 0, 0], [0.2, 0.2, 0, 0], [0.1, 0.5, 0, 0], [0.5, 0, 0, 0]])
    best, mode, at = incumbents(scores)
    assert best.tolist() == [0.2, 0.2, 0.5, 0.5]
    assert mode.tolist() == [0, 0, 1, 1]
    assert at.tolist() == [0, 0, 2, 2]


def test_random_search_single_iteration(quadratic_models):
    result = random_search(1, quadratic_models, Rng(1))
    z = result.trace[["z0", "z1"]].to_numpy()[0]
    _, scores, mode = evaluate_latent(z, quadratic_models)
    assert result.best_score == pytest.approx(scores.max())
    assert result.best_mode is mode
    assert np.array_equal(result.best_z, z)
    with pytest.raises(ConfigError):
        random_search(0, quadratic_models, Rng(1))


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_running_best_is_monotone(quadratic_models, seed):
    result = random_search(300, quadratic_models, Rng(seed))
    best = result.running_best
    assert np.all(np.diff(best) >= 0)
    assert best[-1] == result.best_score
    per_iter = result.trace[[f"score_mode{k}" for k in range(4)]].to_numpy().max(axis=1)
    assert result.best_score == per_iter.max()


def test_random_search_is_seeded(quadratic_models):
    a = random_search(200, quadratic_models, Rng(8))
    b = random_search(200, quadratic_models, Rng(8))
    assert a.trace.equals(b.trace)
    assert a.best_score == b.best_score


def test_random_search_matches_grid_oracle(quadratic_models):
    result = random_search(5000, quadratic_models, Rng(2024))
    axis = np.linspace(0, 100, 1001)
    grid_best = 1.0 - ((axis - 50.0) ** 2).min() * 2 / 5000.0
    assert grid_best == 1.0
    assert grid_best - result.best_score < 1e-3
    assert np.max(np.abs(result.best_z - 50.0)) <= 2.0
    assert result.best_mode is DeformationMode.ShearY
    assert len(result.trace) == 5000


def test_search_points_trace_layout(quadratic_models):
    result = search_points([[50.0, 50.0], [0.0, 0.0]], quadratic_models)
    assert list(result.trace.columns) == [
        "iteration", "z0", "z1", "score_mode0", "score_mode1", "score_mode2", "score_mode3",
        "best_so_far", "best_mode",
    ]
    assert result.best_score == 1.0
    assert result.trace["best_mode"].tolist() == [3, 3]


# --- Space-filling plans ---

def test_space_filling_square_counts():
    assert np.allclose(space_filling_plan(1), [[50.0, 50.0]])
    plan = space_filling_plan(4)
    assert sorted(map(tuple, plan)) == [(25.0, 25.0), (25.0, 75.0), (75.0, 25.0), (75.0, 75.0)]


@pytest.mark.parametrize("n", [3, 10, 37])
def test_space_filling_plan_is_latin_and_inside_box(n):
    plan = space_filling_plan(n, seed=4)
    assert plan.shape == (n, 2)
    assert np.all((plan >= 0) & (plan <= 100))
    for axis in range(2):
        strata = np.floor(plan[:, axis] / (100.0 / n)).astype(int)
        assert sorted(strata.tolist()) == list(range(n))
    assert np.array_equal(plan, space_filling_plan(n, seed=4))


@pytest.mark.parametrize("n", [4, 10, 25, 30])
def test_space_filling_beats_random_spacing(n):
    rng = np.random.default_rng(n)
    filling = [min_distance(space_filling_plan(n, seed=t)) for t in range(20)]
    random = [min_distance(rng.uniform(0, 100, size=(n, 2))) for _ in range(20)]
    assert np.median(filling) >= np.median(random)


def test_space_filling_plan_rejects_zero():
    with pytest.raises(ConfigError):
        space_filling_plan(0)


# --- Comparison and heatmaps ---

def test_compare_sampling(quadratic_models):
    table = compare_sampling(quadratic_models, Rng(6), n_grid=(100, 200, 300), repeats=5,
                             reference_points=2000)
    assert list(table.columns) == ["n_points", "strategy", "mean_error", "std_error"]
    assert len(table) == 6
    random = table[table["strategy"] == "random"].set_index("n_points")
    filling = table[table["strategy"] == "space_filling"].set_index("n_points")
    # random runs are prefixes of one stream, so their error never grows with n
    assert np.all(np.diff(random["mean_error"].to_numpy()) <= 0)
    assert filling.loc[300, "mean_error"] <= filling.loc[100, "mean_error"]
    assert table["mean_error"].abs().max() < 0.05

    # space-filling plans do not beat random search by more than the spread at every n
    pooled = np.sqrt((random["std_error"] ** 2 + filling["std_error"] ** 2) / 2)
    assert np.any(filling["mean_error"] >= random["mean_error"] - pooled)


def test_compare_sampling_square_plan_has_no_spread(quadratic_models):
    table = compare_sampling(quadratic_models, Rng(3), n_grid=(16, 20), repeats=4, reference_points=200)
    filling = table[table["strategy"] == "space_filling"].set_index("n_points")
    assert filling.loc[16, "std_error"] == 0.0
    assert filling.loc[20, "std_error"] > 0.0


def test_heatmap_scores(quadratic_models):
    maps = heatmap_scores(quadratic_models, resolution=2)
    assert set(maps) == set(DeformationMode)
    assert all(len(df) == 4 for df in maps.values())
    again = heatmap_scores(quadratic_models, resolution=2)
    assert all(maps[m].equals(again[m]) for m in maps)
    with pytest.raises(ConfigError):
        heatmap_scores(quadratic_models, resolution=1)


def test_fine_heatmap_dominates_random_search(quadratic_models):
    maps = heatmap_scores(quadratic_models, resolution=71)
    grid_best = max(df["score"].max() for df in maps.values())
    assert grid_best >= random_search(500, quadratic_models, Rng(0)).best_score
