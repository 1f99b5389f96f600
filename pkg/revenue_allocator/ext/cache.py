import logging
from functools import wraps

logger = logging.getLogger(__name__)

_internal_cache: dict = {}


def clear_cache():
    _internal_cache.clear()


def cache():
    """
    Memoize a function on the repr of its arguments.
    Arguments must have a repr that identifies their value (games and
    matrices expose a fingerprint for this).
    """
    def decorator(func):
        def _make_key(args, kwargs):
            key = [f'{func.__module__}.{func.__qualname__}']
            key.extend(repr(o) for o in args)

            for k, v in kwargs.items():
                key.append(repr(k))
                key.append(repr(v))

            return ':'.join(key)

        @wraps(func)
        def wrapper(*args, **kwargs):
            key = _make_key(args, kwargs)
            try:
                value = _internal_cache[key]
            except KeyError:
                value = func(*args, **kwargs)
                _internal_cache[key] = value
            else:
                logger.debug("cache hit %s", key)
            return value

        wrapper.cache = _internal_cache
        wrapper.clear_cache = clear_cache
        return wrapper
    return decorator
