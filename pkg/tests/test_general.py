import pytest

from hypmix._general import (
    BoundaryError,
    ConfigError,
    DomainError,
    HypmixError,
    _check_inputs,
    _check_range,
    _Dispatcher,
    _map_chunks,
)


class _Greeting:
    @staticmethod
    def text() -> str:
        raise NotImplementedError


class _Hello(_Greeting):
    @staticmethod
    def text() -> str:
        return "hello"


def _add(a, b):
    return a + b


class TestDispatcher:
    dispatcher = _Dispatcher(_Greeting())
    dispatcher.set_method("hello", _Hello())

    def test_dispatch(self):
        assert self.dispatcher.dispatch("hello").text() == "hello"
        assert self.dispatcher.signatures() == ["hello"]
        with pytest.raises(NotImplementedError):
            self.dispatcher.dispatch().text()


class TestChecks:
    def test_check_inputs(self):
        _check_inputs("mode", ["ensemble", "birkhoff"], "ensemble")
        with pytest.raises(
            ConfigError,
            match="Input Error: mode should be ensemble or birkhoff, got x.",
        ):
            _check_inputs("mode", ["ensemble", "birkhoff"], "x")

    def test_check_range(self):
        _check_range("sigma", 0.4, 0.0, 0.49)
        _check_range("n", 1, 1, None, closed=True)
        with pytest.raises(ValueError, match="Input Error: sigma should be"):
            _check_range("sigma", 0.6, 0.0, 0.49)
        with pytest.raises(ConfigError):
            _check_range("n", 1, 1, None)
        with pytest.raises(ConfigError):
            _check_range("x", float("nan"))
        with pytest.raises(ConfigError):
            _check_range("x", True)

    def test_hierarchy(self):
        assert issubclass(BoundaryError, DomainError)
        assert issubclass(DomainError, ValueError)
        assert issubclass(ConfigError, HypmixError)


class TestMapChunks:
    def test_order(self):
        args = [(i, 10 * i) for i in range(5)]
        assert _map_chunks(_add, args, 1) == [0, 11, 22, 33, 44]
        assert _map_chunks(_add, args, 2) == [0, 11, 22, 33, 44]
