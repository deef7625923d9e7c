import subprocess


def test_correct_sys_exit_error_python():
    try:
        subprocess.run(
            ["levelset_decay", "bound", "--config", "tests/test_data/bound_missing_beta.json"],
            check=True,
        )
        assert False
    except subprocess.CalledProcessError as e:
        assert e.returncode == 2


def test_false_sys_exit_error_python():
    try:
        subprocess.run(
            ["levelset_decay", "bound", "--config", "tests/test_data/bound_classical.json"],
            check=True,
        )
        assert True
    except subprocess.CalledProcessError:
        assert False


def test_bad_parameter_sys_exit_error_python():
    result = subprocess.run(
        ["levelset_decay", "counterexample", "beta-gt-1", "--alpha", "-1"],
        capture_output=True,
    )
    assert result.returncode == 2
