import dataclasses


def update_dataclass_from_dict(dc, dct):
    """Overwrites fields of `dc` in place, recursing into nested dataclasses."""
    for key, value in dct.items():
        if not hasattr(dc, key):
            raise ValueError(f"Unknown configuration key '{key}'")
        attr = getattr(dc, key)
        if dataclasses.is_dataclass(attr) and isinstance(value, dict):
            if getattr(type(attr), "__dataclass_params__").frozen:
                setattr(dc, key, dataclasses.replace(attr, **value))
            else:
                update_dataclass_from_dict(attr, value)
        else:
            setattr(dc, key, value)


def apply_overrides(config, **overrides):
    """Applies the overrides that are not None and re-validates the config."""
    update_dataclass_from_dict(config, {k: v for k, v in overrides.items() if v is not None})
    config.__post_init__()
    return config

