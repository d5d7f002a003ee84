import numpy as np
import pytest

from spraycoat.data import Dataset
from spraycoat.features import (
    FEATURE_NAMES,
    GROUP_FEATURE_INDICES,
    N_FEATURES,
    FeatureVector,
    group_feature_names,
)
from spraycoat.semkl import QualityTarget, TargetGroup

# applicability of each feature (by 1-based schema number) per target group
GROUP_MASK_FIXTURE = {
    TargetGroup.PIP: (4, 6, 9, 10, 11, 12, 13, 14, 15, 16, 17, 18, 19, 20),
    TargetGroup.PPP: tuple(k for k in range(1, 28) if k not in (1, 2, 3)),
    TargetGroup.CQP: tuple(range(1, 28)),
}


class TestSchema:
    def test_twenty_seven_features(self):
        assert N_FEATURES == 27
        assert len(FEATURE_NAMES) == 27
        assert len(set(FEATURE_NAMES)) == 27

    def test_group_masks_match_fixture(self):
        for group, numbers in GROUP_MASK_FIXTURE.items():
            expected = tuple(k - 1 for k in numbers)
            assert GROUP_FEATURE_INDICES[group] == expected

    def test_group_sizes(self):
        assert len(GROUP_FEATURE_INDICES[TargetGroup.PIP]) == 14
        assert len(GROUP_FEATURE_INDICES[TargetGroup.PPP]) == 24
        assert len(GROUP_FEATURE_INDICES[TargetGroup.CQP]) == 27

    def test_environment_features_only_in_cqp(self):
        env = {"env_air_pressure_avg", "env_humidity_avg", "env_temperature_avg"}
        assert env.isdisjoint(group_feature_names(TargetGroup.PIP))
        assert env.isdisjoint(group_feature_names(TargetGroup.PPP))
        assert env <= set(group_feature_names(TargetGroup.CQP))

    def test_thermal_features_excluded_from_pip(self):
        thermal = {
            "max_component_temperature",
            "heat_up_rate",
            "cool_down_rate",
            "starting_temperature",
        }
        assert thermal.isdisjoint(group_feature_names(TargetGroup.PIP))
        assert thermal <= set(group_feature_names(TargetGroup.PPP))


class TestFeatureVector:
    def test_wrong_length_rejected(self):
        with pytest.raises(ValueError):
            FeatureVector(values=np.zeros(26))

    def test_group_subset_order_preserved(self):
        fv = FeatureVector(values=np.arange(27, dtype=float))
        sub = fv.for_group(TargetGroup.PIP)
        np.testing.assert_array_equal(sub, [3, 5, 8, 9, 10, 11, 12, 13, 14, 15, 16, 17, 18, 19])

    def test_as_dict_round_trip(self):
        fv = FeatureVector(values=np.arange(27, dtype=float))
        d = fv.as_dict()
        assert list(d) == list(FEATURE_NAMES)
        assert d["stand_off_distance"] == 3.0


class TestDataset:
    def test_csv_round_trip_exact(self, tmp_path, rng):
        X = rng.normal(size=(5, 27))
        labels = {
            QualityTarget.COATING_HARDNESS: rng.normal(size=5),
            QualityTarget.PARTICLE_VELOCITY: rng.normal(size=5),
        }
        ds = Dataset(X=X, labels=labels)
        path = tmp_path / "ds.csv"
        ds.to_csv(path)
        back = Dataset.from_csv(path)
        np.testing.assert_array_equal(back.X, ds.X)
        for t in labels:
            np.testing.assert_array_equal(back.labels[t], ds.labels[t])
        assert back.epoch_ids == ds.epoch_ids

    def test_features_for_uses_group_mask(self, rng):
        X = rng.normal(size=(4, 27))
        ds = Dataset(X=X, labels={QualityTarget.PARTICLE_VELOCITY: np.zeros(4)})
        Xg, _ = ds.xy(QualityTarget.PARTICLE_VELOCITY)
        assert Xg.shape == (4, 14)
        np.testing.assert_array_equal(
            Xg, X[:, list(GROUP_FEATURE_INDICES[TargetGroup.PIP])]
        )

    def test_missing_label_rejected(self, rng):
        ds = Dataset(X=rng.normal(size=(3, 27)))
        with pytest.raises(KeyError):
            ds.xy(QualityTarget.COATING_POROSITY)

    def test_subset_preserves_alignment(self, rng):
        X = rng.normal(size=(6, 27))
        y = np.arange(6.0)
        ds = Dataset(X=X, labels={QualityTarget.DEPOSITION_RATE: y})
        sub = ds.subset([4, 1])
        np.testing.assert_array_equal(sub.X, X[[4, 1]])
        np.testing.assert_array_equal(sub.labels[QualityTarget.DEPOSITION_RATE], [4.0, 1.0])
        assert sub.epoch_ids == ["epoch-4", "epoch-1"]

    def test_wrong_column_count_rejected(self, rng):
        with pytest.raises(ValueError):
            Dataset(X=rng.normal(size=(3, 20)))
