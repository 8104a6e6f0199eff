import pytest

from convexity import geometry

_ACCEPTANCE: dict[int, str] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "acceptance(number, title): one acceptance criterion")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("acceptance")
    if marker is None:
        return
    number, title = marker.args
    failed_setup = report.when == "setup" and not report.passed
    if report.when == "call" or failed_setup:
        detail = "; ".join(f"{k}={v}" for k, v in item.user_properties)
        status = "PASS" if report.passed else "FAIL"
        line = f"{status} criterion {number:2d}: {title}" + (f" [{detail}]" if detail else "")
        _ACCEPTANCE[number] = line
        print("\n" + line)


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for number in sorted(_ACCEPTANCE):
            terminalreporter.write_line(_ACCEPTANCE[number])


@pytest.fixture(scope="session")
def unit_square():
    return geometry.make_polygon([(0, 0), (1, 0), (1, 1), (0, 1)])


@pytest.fixture(scope="session")
def star400():
    return geometry.make_shape("star", 400)


@pytest.fixture(scope="session")
def circle1024():
    return geometry.make_shape("circle", 1024)


@pytest.fixture(scope="session")
def sphere4():
    return geometry.make_sphere_mesh(4)


@pytest.fixture(scope="session")
def circle512_estimate():
    from convexity import crofton

    c = geometry.make_shape("circle", 512)
    return crofton.estimate(crofton.LineSampler((0.0, 0.0), 2.0, seed=0), c, 1_000_000)


@pytest.fixture(scope="session")
def star_estimate(star400):
    from convexity import crofton

    return crofton.estimate(crofton.LineSampler.for_target(star400, seed=0), star400, 1_000_000)
