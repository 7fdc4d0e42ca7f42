"""CLI behavior: CSV schemas, determinism, config handling, exit codes."""

import csv
from fractions import Fraction

import pytest

from ctorsim.cli import (
    EXIT_INTERRUPTED,
    EXIT_OK,
    EXIT_USAGE,
    main,
    parse_variant_spec,
)
from ctorsim.onion import Variant


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


class TestVariantSpecs:
    def test_parses_all_forms(self):
        assert parse_variant_spec("otor") == (Variant.OTOR, 1, 0)
        assert parse_variant_spec("mtor:4") == (Variant.MTOR, 4, 0)
        assert parse_variant_spec("ctor:10:4") == (Variant.CTOR, 10, 4)

    @pytest.mark.parametrize("bad", ["", "tor", "otor:2", "mtor", "ctor:4", "ctor:4:4", "ctor:4:0", "mtor:x"])
    def test_rejects_malformed(self, bad):
        with pytest.raises(ValueError):
            parse_variant_spec(bad)


class TestAnalytic:
    def test_default_grid(self, tmp_path):
        out = tmp_path / "grid.csv"
        assert main(["analytic", "--out", str(out)]) == EXIT_OK
        rows = read_csv(out)
        assert rows[0] == ["m_known", "variant", "n", "r", "p_exact_num", "p_exact_den", "p_float"]
        assert len(rows) == 1 + 26 * 7
        keys = [(int(r[0]), r[1], int(r[2])) for r in rows[1:]]
        assert keys == sorted(keys)

    def test_known_row_value(self, tmp_path):
        out = tmp_path / "one.csv"
        assert main(["analytic", "--mknown", "5", "--variant", "mtor:4", "--out", str(out)]) == EXIT_OK
        [_, row] = read_csv(out)
        assert row[:4] == ["5", "mtor", "4", "0"]
        assert Fraction(int(row[4]), int(row[5])) == Fraction(14755, 27405)
        assert float(row[6]) == pytest.approx(0.538405400474366)

    def test_stdout_output(self, capsys):
        assert main(["analytic", "--mknown", "3", "--variant", "otor"]) == EXIT_OK
        lines = capsys.readouterr().out.strip().splitlines()
        assert lines[0].startswith("m_known,")
        assert len(lines) == 2

    def test_r_at_least_n_fails_before_compute(self):
        assert main(["analytic", "--variant", "ctor:4:4"]) == EXIT_USAGE

    def test_pool_too_small_fails(self):
        assert main(["analytic", "--mb", "2", "--mknown", "0", "--variant", "mtor:4"]) == EXIT_USAGE


class TestSimulate:
    def test_csv_schema_and_determinism(self, tmp_path):
        args = [
            "simulate",
            "--mknown", "4..5",
            "--variant", "mtor:4",
            "--variant", "ctor:4:1",
            "--trials", "400",
            "--seed", "9",
        ]
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        assert main(args + ["--out", str(a)]) == EXIT_OK
        assert main(args + ["--out", str(b)]) == EXIT_OK
        assert a.read_bytes() == b.read_bytes()
        rows = read_csv(a)
        assert rows[0] == ["m_known", "variant", "n", "r", "p_empirical", "ci95", "trials", "seed"]
        assert len(rows) == 1 + 2 * 2
        for row in rows[1:]:
            assert 0.0 <= float(row[4]) <= 1.0
            assert row[6] == "400" and row[7] == "9"

    def test_single_trial_is_zero_or_one(self, tmp_path):
        out = tmp_path / "t.csv"
        assert main(
            ["simulate", "--mknown", "5", "--variant", "mtor:4", "--trials", "1", "--out", str(out)]
        ) == EXIT_OK
        [_, row] = read_csv(out)
        assert float(row[4]) in (0.0, 1.0)

    def test_grid_keys_match_analytic(self, tmp_path):
        args = ["--mknown", "2..3", "--variant", "mtor:5", "--variant", "ctor:5:2"]
        a_out, s_out = tmp_path / "a.csv", tmp_path / "s.csv"
        assert main(["analytic", *args, "--out", str(a_out)]) == EXIT_OK
        assert main(["simulate", *args, "--trials", "50", "--out", str(s_out)]) == EXIT_OK
        a_keys = [tuple(r[:4]) for r in read_csv(a_out)[1:]]
        s_keys = [tuple(r[:4]) for r in read_csv(s_out)[1:]]
        assert a_keys == s_keys


class TestConfigFile:
    def test_file_values_apply_and_flags_win(self, tmp_path):
        cfg = tmp_path / "exp.cfg"
        cfg.write_text(
            "# sweep setup\n"
            "mb = 10\n"
            "mknown = 2..3\n"
            "variant = mtor:4, ctor:4:1\n"
            "trials = 100\n"
        )
        out = tmp_path / "o.csv"
        assert main(["analytic", "--config", str(cfg), "--out", str(out)]) == EXIT_OK
        assert len(read_csv(out)) == 1 + 2 * 2

        out2 = tmp_path / "o2.csv"
        assert main(
            ["analytic", "--config", str(cfg), "--mknown", "5", "--out", str(out2)]
        ) == EXIT_OK
        rows = read_csv(out2)
        assert len(rows) == 1 + 2
        assert all(r[0] == "5" for r in rows[1:])

    def test_unknown_key_rejected(self, tmp_path):
        cfg = tmp_path / "bad.cfg"
        cfg.write_text("mystery = 1\n")
        assert main(["analytic", "--config", str(cfg)]) == EXIT_USAGE

    def test_missing_file_rejected(self, tmp_path):
        assert main(["analytic", "--config", str(tmp_path / "nope.cfg")]) == EXIT_USAGE


class TestE2E:
    def test_tolerated_block_succeeds(self, capsys):
        rc = main(["e2e", "--variant", "ctor:4:1", "--block", "2", "--message-size", "2000"])
        assert rc == EXIT_OK
        out = capsys.readouterr().out
        assert "outcome: SUCCESS" in out
        assert "delivered 3/4" in out
        assert "byte-identical: yes" in out

    def test_uncoded_block_interrupts(self, capsys):
        rc = main(["e2e", "--variant", "mtor:4", "--block", "2", "--message-size", "100"])
        assert rc == EXIT_INTERRUPTED
        assert "outcome: INTERRUPTED" in capsys.readouterr().out

    def test_blocks_beyond_redundancy_interrupt(self):
        assert main(["e2e", "--variant", "ctor:4:1", "--block", "1,2"]) == EXIT_INTERRUPTED

    def test_message_file_round_trip(self, tmp_path, capsys):
        payload = tmp_path / "msg.bin"
        payload.write_bytes(b"payload-under-test" * 100)
        rc = main(["e2e", "--variant", "ctor:4:1", "--message-file", str(payload), "--block", "3"])
        assert rc == EXIT_OK
        assert "byte-identical: yes" in capsys.readouterr().out

    def test_scenario_seed_mode(self, capsys):
        rc = main(
            ["e2e", "--variant", "ctor:4:1", "--scenario-seed", "5", "--mknown", "5", "--message-size", "600"]
        )
        assert rc in (EXIT_OK, EXIT_INTERRUPTED)
        out = capsys.readouterr().out
        assert "bridges:" in out

    def test_bad_block_index(self):
        assert main(["e2e", "--variant", "mtor:4", "--block", "7"]) == EXIT_USAGE

    def test_block_and_scenario_seed_conflict(self):
        assert main(["e2e", "--block", "0", "--scenario-seed", "1", "--mknown", "5"]) == EXIT_USAGE

    def test_scenario_seed_requires_single_mknown(self):
        assert main(["e2e", "--scenario-seed", "1"]) == EXIT_USAGE
        assert main(["e2e", "--scenario-seed", "1", "--mknown", "2..5"]) == EXIT_USAGE


class TestFig2:
    def test_writes_both_csvs(self, tmp_path, capsys):
        out_dir = tmp_path / "fig2"
        rc = main(
            ["fig2", "--out", str(out_dir), "--trials", "200", "--seed", "1",
             "--mknown", "4..6", "--variant", "mtor:5", "--variant", "ctor:5:2"]
        )
        assert rc == EXIT_OK
        analytic = out_dir / "fig2_analytic.csv"
        simulated = out_dir / "fig2_simulated.csv"
        assert analytic.is_file() and simulated.is_file()
        assert len(read_csv(analytic)) == len(read_csv(simulated)) == 1 + 3 * 2


class TestUsageErrors:
    def test_unknown_subcommand(self):
        assert main(["frobnicate"]) == EXIT_USAGE

    def test_unknown_flag(self):
        assert main(["analytic", "--bogus"]) == EXIT_USAGE

    def test_no_subcommand(self):
        assert main([]) == EXIT_USAGE

    def test_bad_mknown(self):
        assert main(["analytic", "--mknown", "5..2"]) == EXIT_USAGE
        assert main(["analytic", "--mknown", "abc"]) == EXIT_USAGE
