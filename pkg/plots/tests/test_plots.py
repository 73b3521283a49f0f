"""Secondary-component tests: figures regenerate from solver CSVs.

The solver is exercised only through its command line and file formats,
never imported.
"""

import subprocess
import sys

import pytest

from anchoreg_plots import InputError, PlotSpec, plot_loglog, plot_trajectory, render
from anchoreg_plots.cli import main as cli_main, parse_spec


def solver(*args):
    proc = subprocess.run(
        [sys.executable, "-m", "anchoreg.cli", *args],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 0, proc.stderr + proc.stdout
    return proc


@pytest.fixture(scope="session")
def fixed_run(tmp_path_factory):
    """The fixed-anchor almost-bilinear run (criterion-1 configuration)."""
    out = tmp_path_factory.mktemp("fixed_run")
    solver(
        "run", "--preset", "fig1_fixed", "--override", "alpha0=0.5",
        "--override", "z0=1.0, 1.0", "--output-dir", str(out),
    )
    return out / "fig1_fixed.csv"


@pytest.fixture(scope="session")
def variant_runs(tmp_path_factory):
    """The three varying-step variants used for the rate comparison."""
    out = tmp_path_factory.mktemp("variants")
    solver("run", "--preset", "fig4_all", "--output-dir", str(out))
    return [
        out / "fig4_eagv_fixed.csv",
        out / "fig4_eagv_moving_pos.csv",
        out / "fig4_eagv_moving_neg.csv",
    ]


class TestTrajectoryScatter:
    def test_renders_png(self, fixed_run, tmp_path):
        spec = PlotSpec(
            kind="trajectory_scatter",
            inputs=[(str(fixed_run), "fixed anchor")],
            output=str(tmp_path / "traj.png"),
        )
        path = plot_trajectory(spec)
        assert path.exists() and path.stat().st_size > 0

    def test_two_panel_layout(self, fixed_run, variant_runs, tmp_path):
        spec = PlotSpec(
            kind="trajectory_scatter",
            inputs=[(str(fixed_run), "fixed"), (str(variant_runs[1]), "moving")],
            output=str(tmp_path / "two.png"),
        )
        assert plot_trajectory(spec).exists()

    def test_single_point_trajectory(self, tmp_path):
        out = tmp_path / "tiny"
        solver(
            "run", "--preset", "fig1_fixed", "--override", "iters=0",
            "--override", "output_path=tiny.csv", "--output-dir", str(out),
        )
        spec = PlotSpec(
            kind="trajectory_scatter",
            inputs=[(str(out / "tiny.csv"), "k0")],
            output=str(tmp_path / "tiny.png"),
        )
        assert plot_trajectory(spec).exists()

    def test_missing_sidecar_rejected(self, fixed_run, tmp_path):
        orphan = tmp_path / "orphan.csv"
        orphan.write_bytes(fixed_run.read_bytes())  # no .coords.csv next to it
        spec = PlotSpec(
            kind="trajectory_scatter",
            inputs=[(str(orphan), "orphan")],
            output=str(tmp_path / "x.png"),
        )
        with pytest.raises(InputError, match="sidecar"):
            plot_trajectory(spec)


class TestLoglogDecay:
    def test_three_curves_with_guide(self, variant_runs, tmp_path):
        spec = PlotSpec(
            kind="loglog_decay",
            inputs=[(str(p), p.stem) for p in variant_runs],
            output=str(tmp_path / "decay.png"),
            reference_slope=-2.0,
        )
        path = plot_loglog(spec)
        assert path.exists() and path.stat().st_size > 0

    def test_fast_extragradient_curves(self, tmp_path):
        out = tmp_path / "feg"
        solver("run", "--preset", "fig3_pos", "--output-dir", str(out))
        solver("run", "--preset", "fig3_neg", "--output-dir", str(out))
        spec = PlotSpec(
            kind="loglog_decay",
            inputs=[
                (str(out / "fig3_pos.csv"), "positive"),
                (str(out / "fig3_neg.csv"), "negative"),
            ],
            output=str(tmp_path / "feg.png"),
            reference_slope=-2.0,
        )
        assert plot_loglog(spec).exists()

    def test_mismatched_lengths_ok(self, fixed_run, tmp_path):
        out = tmp_path / "short"
        solver(
            "run", "--preset", "fig1_fixed", "--override", "iters=100",
            "--override", "output_path=short.csv", "--output-dir", str(out),
        )
        spec = PlotSpec(
            kind="loglog_decay",
            inputs=[(str(fixed_run), "long"), (str(out / "short.csv"), "short")],
            output=str(tmp_path / "mixed.png"),
        )
        assert plot_loglog(spec).exists()

    def test_nonpositive_values_clipped_with_warning(self, tmp_path):
        csv = tmp_path / "zero.csv"
        csv.write_text(
            "k,grad_norm_sq,dist_to_saddle_sq,anchor_dist_sq,lyapunov,alpha_k,c_k,gamma_k,bound\n"
            "0,1.0,,,,0.5,1.0,0.0,\n1,0.0,,,,0.5,1.0,0.0,\n2,0.25,,,,0.5,1.0,0.0,\n"
        )
        spec = PlotSpec(
            kind="loglog_decay", inputs=[(str(csv), "z")], output=str(tmp_path / "z.png")
        )
        with pytest.warns(UserWarning, match="clipped"):
            assert plot_loglog(spec).exists()


class TestDeterminism:
    @pytest.mark.parametrize("ext", ["png", "svg"])
    def test_same_csv_same_bytes(self, fixed_run, variant_runs, tmp_path, ext):
        for kind, inputs in (
            ("trajectory_scatter", [(str(fixed_run), "fixed")]),
            ("loglog_decay", [(str(p), p.stem) for p in variant_runs]),
        ):
            a = PlotSpec(kind=kind, inputs=inputs, output=str(tmp_path / f"a.{ext}"),
                         reference_slope=-2.0 if kind == "loglog_decay" else None)
            b = PlotSpec(kind=kind, inputs=inputs, output=str(tmp_path / f"b.{ext}"),
                         reference_slope=-2.0 if kind == "loglog_decay" else None)
            assert render(a).read_bytes() == render(b).read_bytes()


class TestSpecValidation:
    def test_unique_labels_required(self, tmp_path):
        with pytest.raises(InputError, match="unique"):
            PlotSpec(
                kind="loglog_decay",
                inputs=[("a.csv", "x"), ("b.csv", "x")],
                output=str(tmp_path / "o.png"),
            )

    def test_needs_inputs(self, tmp_path):
        with pytest.raises(InputError, match="at least one"):
            PlotSpec(kind="loglog_decay", inputs=[], output="o.png")

    def test_unknown_kind(self):
        with pytest.raises(InputError, match="kind"):
            PlotSpec(kind="pie", inputs=[("a.csv", "a")], output="o.png")

    def test_parse_spec_document(self):
        spec = parse_spec(
            "# comparison\nkind = loglog_decay\n"
            "inputs = runs/a.csv:fixed, runs/b.csv\n"
            "output = fig.svg\nreference_slope = -2\n"
        )
        assert spec.kind == "loglog_decay"
        assert spec.inputs == [("runs/a.csv", "fixed"), ("runs/b.csv", "b")]
        assert spec.reference_slope == -2.0

    def test_parse_spec_rejects_unknown_key(self):
        with pytest.raises(InputError, match="palette"):
            parse_spec("kind = loglog_decay\ninputs = a.csv\noutput = o.png\npalette = mako\n")


class TestCli:
    def test_direct_flags(self, variant_runs, tmp_path, capsys):
        code = cli_main([
            "--kind", "loglog_decay",
            "--input", f"{variant_runs[0]}:fixed",
            "--input", f"{variant_runs[2]}:negative",
            "--output", str(tmp_path / "out.png"),
            "--reference-slope", "-2",
        ])
        assert code == 0
        assert (tmp_path / "out.png").exists()
        assert "wrote:" in capsys.readouterr().out

    def test_spec_file(self, variant_runs, tmp_path):
        spec = tmp_path / "plot.cfg"
        spec.write_text(
            f"kind = loglog_decay\ninputs = {variant_runs[0]}:fixed\n"
            f"output = {tmp_path / 'from_spec.svg'}\n"
        )
        assert cli_main(["--spec", str(spec)]) == 0
        assert (tmp_path / "from_spec.svg").exists()

    def test_unreadable_input_exit_nonzero(self, tmp_path, capsys):
        code = cli_main([
            "--kind", "loglog_decay",
            "--input", str(tmp_path / "missing.csv"),
            "--output", str(tmp_path / "o.png"),
        ])
        assert code == 2
        assert "error:" in capsys.readouterr().err

    def test_flags_require_complete_set(self, tmp_path):
        with pytest.raises(SystemExit):
            cli_main(["--kind", "loglog_decay"])
