import json

import matplotlib.pyplot as plt
import numpy as np
import pytest

from schedplots.render import (
    prepare_bars_data,
    prepare_boxplot_data,
    prepare_curve_data,
    render,
)
from schedplots.specs import FigureSpec, load_spec


def write(path, text):
    path.write_text(text)
    return str(path)


@pytest.fixture
def violation_feed(tmp_path):
    return write(
        tmp_path / "violation_vs_epoch.csv",
        "delta,epoch,mean,std\n"
        "0.1,1,0.8,0.05\n"
        "0.1,2,0.5,0.04\n"
        "0.1,3,0.25,0.02\n"
        "0.125,1,0.9,0.0\n"
        "0.125,2,0.7,0.0\n"
        "0.125,3,0.6,0.0\n",
    )


@pytest.fixture
def objective_feed(tmp_path):
    return write(
        tmp_path / "objective_vs_epoch.csv",
        "series,delta,epoch,mean,std\n"
        "policy,0.1,1,0.10,0.01\n"
        "policy,0.1,2,0.18,0.01\n"
        "policy,0.1,3,0.22,0.005\n"
        "mis_random_ca,0.1,,0.16,0.0\n"
        "p_persistent_ca,0.1,,0.12,0.0\n",
    )


@pytest.fixture
def transmissions_feed(tmp_path):
    return write(
        tmp_path / "transmissions_per_delta.csv",
        "delta,total,successful,ratio\n"
        "0.1,7000.0,5600.0,0.8\n"
        "0.125,7100.0,5644.5,0.795\n"
        "0.15,7300.0,5766.0,0.79\n",
    )


@pytest.fixture
def violations_feed(tmp_path):
    rows = ["delta,graph_id,link_id,violation_level"]
    rng = np.random.default_rng(1)
    for delta in ("0.1", "0.125", "0.15"):
        for i in range(12):
            rows.append(f"{delta},test_:{i % 3},{i},{rng.uniform(0.01, 0.09):.4f}")
    return write(tmp_path / "violation_levels.csv", "\n".join(rows) + "\n")


class TestSpecs:
    def test_load_and_validate(self, tmp_path, violation_feed):
        spec_path = tmp_path / "spec.json"
        spec_path.write_text(
            json.dumps(
                {
                    "kind": "curve",
                    "input_csv": violation_feed,
                    "output_image": str(tmp_path / "fig.png"),
                    "title": "violation",
                }
            )
        )
        spec = load_spec(spec_path)
        assert spec.kind == "curve"

    def test_rejects_unknown_kind(self, tmp_path):
        with pytest.raises(ValueError, match="kind"):
            FigureSpec(kind="pie", input_csv="x", output_image="y")

    def test_rejects_missing_field(self, tmp_path):
        spec_path = tmp_path / "spec.json"
        spec_path.write_text('{"kind": "curve", "input_csv": "x"}')
        with pytest.raises(ValueError, match="output_image"):
            load_spec(spec_path)

    def test_missing_columns_named(self, tmp_path):
        bad = write(tmp_path / "bad.csv", "delta,epoch\n0.1,1\n")
        spec = FigureSpec(
            kind="curve", input_csv=bad, output_image=str(tmp_path / "f.png")
        )
        with pytest.raises(ValueError, match="mean"):
            prepare_curve_data(spec)


class TestCurve:
    def test_plotted_series_equal_csv(self, tmp_path, violation_feed):
        spec = FigureSpec(
            kind="curve", input_csv=violation_feed, output_image=str(tmp_path / "v.png")
        )
        fig = render(spec)
        ax = fig.axes[0]
        by_label = {line.get_label(): line for line in ax.lines}
        assert np.array_equal(by_label["delta 0.1"].get_ydata(), [0.8, 0.5, 0.25])
        assert np.array_equal(by_label["delta 0.125"].get_ydata(), [0.9, 0.7, 0.6])
        assert np.array_equal(by_label["delta 0.1"].get_xdata(), [1, 2, 3])
        # one std band per series
        assert len(ax.collections) == 2
        assert (tmp_path / "v.png").exists()
        plt.close(fig)

    def test_constant_series_zero_band(self, tmp_path):
        feed = write(
            tmp_path / "const.csv",
            "delta,epoch,mean,std\n0.1,1,0.4,0.0\n0.1,2,0.4,0.0\n",
        )
        spec = FigureSpec(kind="curve", input_csv=feed, output_image=str(tmp_path / "c.png"))
        fig = render(spec)
        ax = fig.axes[0]
        assert np.array_equal(ax.lines[0].get_ydata(), [0.4, 0.4])
        band = ax.collections[0].get_paths()[0].vertices[:, 1]
        assert np.all(band == 0.4)
        plt.close(fig)

    def test_baseline_rows_become_horizontal_lines(self, tmp_path, objective_feed):
        spec = FigureSpec(
            kind="curve", input_csv=objective_feed, output_image=str(tmp_path / "o.png")
        )
        fig = render(spec)
        ax = fig.axes[0]
        curve = next(l for l in ax.lines if l.get_label().startswith("policy"))
        assert np.array_equal(curve.get_ydata(), [0.10, 0.18, 0.22])
        hlines = [l for l in ax.lines if l is not curve]
        levels = sorted(float(l.get_ydata()[0]) for l in hlines)
        assert levels == [0.12, 0.16]
        plt.close(fig)


class TestBars:
    def test_bar_heights_equal_csv(self, tmp_path, transmissions_feed):
        spec = FigureSpec(
            kind="bars", input_csv=transmissions_feed, output_image=str(tmp_path / "b.png")
        )
        data = prepare_bars_data(spec)
        assert np.array_equal(data["total"], [7000.0, 7100.0, 7300.0])
        assert np.array_equal(data["successful"], [5600.0, 5644.5, 5766.0])
        fig = render(spec)
        ax = fig.axes[0]
        heights = [patch.get_height() for patch in ax.patches]
        assert sorted(heights) == sorted([7000.0, 7100.0, 7300.0, 5600.0, 5644.5, 5766.0])
        assert (tmp_path / "b.png").exists()
        plt.close(fig)


class TestBoxplot:
    def test_grouped_values_equal_csv(self, tmp_path, violations_feed):
        spec = FigureSpec(
            kind="boxplot", input_csv=violations_feed, output_image=str(tmp_path / "x.png")
        )
        data = prepare_boxplot_data(spec)
        assert list(data.keys()) == ["0.1", "0.125", "0.15"]
        assert all(len(v) == 12 for v in data.values())
        import csv

        with open(violations_feed) as fh:
            rows = list(csv.DictReader(fh))
        for delta, values in data.items():
            expected = [float(r["violation_level"]) for r in rows if r["delta"] == delta]
            assert np.array_equal(values, expected)

    def test_axis_range_and_whiskers_below_small_levels(self, tmp_path, violations_feed):
        spec = FigureSpec(
            kind="boxplot", input_csv=violations_feed, output_image=str(tmp_path / "x.png")
        )
        fig = render(spec)
        ax = fig.axes[0]
        assert ax.get_ylim() == (0.0, 1.0)
        # all fixture levels are below 0.1, so every whisker must be too
        for line in ax.lines:
            ydata = line.get_ydata()
            if len(ydata):
                assert np.max(ydata) < 0.1
        assert (tmp_path / "x.png").exists()
        plt.close(fig)


class TestCli:
    def test_render_from_spec_files(self, tmp_path, violation_feed, transmissions_feed):
        from schedplots.cli import main

        specs = []
        for kind, feed, name in (
            ("curve", violation_feed, "fig_violation.png"),
            ("bars", transmissions_feed, "fig_tx.png"),
        ):
            spec_path = tmp_path / f"{kind}.json"
            spec_path.write_text(
                json.dumps(
                    {"kind": kind, "input_csv": feed, "output_image": str(tmp_path / name)}
                )
            )
            specs.extend(["--spec", str(spec_path)])
        assert main(["render", *specs]) == 0
        assert (tmp_path / "fig_violation.png").exists()
        assert (tmp_path / "fig_tx.png").exists()

    def test_error_exit_code(self, tmp_path, capsys):
        from schedplots.cli import main

        spec_path = tmp_path / "bad.json"
        spec_path.write_text(
            json.dumps(
                {
                    "kind": "curve",
                    "input_csv": str(tmp_path / "missing.csv"),
                    "output_image": str(tmp_path / "out.png"),
                }
            )
        )
        assert main(["render", "--spec", str(spec_path)]) == 1
        assert "missing.csv" in capsys.readouterr().err
