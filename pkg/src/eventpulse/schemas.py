"""JSON Schemas (draft 2020-12) for the files the CLI writes."""

_NUM_OR_INF = {"oneOf": [{"type": "number"}, {"enum": ["inf"]}]}

_PROVENANCE = {
    "tool_version": {"type": "string"},
    "config_echo": {"type": "object"},
}

_REGRESSION = {
    "oneOf": [
        {"type": "null"},
        {
            "type": "object",
            "required": ["slope", "intercept", "adj_r2", "k", "v"],
            "properties": {
                "slope": {"type": "number"},
                "intercept": {"type": "number"},
                "adj_r2": {"type": "number", "maximum": 1},
                "k": {"type": "integer"},
                "v": {"type": "integer"},
            },
        },
    ]
}

CLUSTER_REPORT_SCHEMA = {
    "type": "object",
    "required": ["tool_version", "config_echo", "mean_distance_km", "max_distance_km", "assignments"],
    "properties": {
        **_PROVENANCE,
        "mean_distance_km": {"type": "number", "minimum": 0},
        "max_distance_km": {"type": "number", "minimum": 0},
        "assignments": {"type": "object", "additionalProperties": {"type": "string"}},
    },
}

FITS_SCHEMA = {
    "type": "object",
    "required": ["tool_version", "config_echo", "cities", "skipped",
                 "interval_attack_regression", "population_correlation"],
    "properties": {
        **_PROVENANCE,
        "cities": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["city_id", "n", "mu_hat", "ci_lower", "ci_upper",
                             "alpha", "x_min", "n_tail"],
                "properties": {
                    "city_id": {"type": "string"},
                    "n": {"type": "integer", "minimum": 2},
                    "mu_hat": {"type": "number", "exclusiveMinimum": 0},
                    "ci_lower": {"type": "number"},
                    "ci_upper": _NUM_OR_INF,
                    "alpha": {"type": ["number", "null"]},
                    "x_min": {"type": ["integer", "null"]},
                    "n_tail": {"type": ["integer", "null"]},
                    "attack_count": {"type": "integer"},
                    "span_days": {"type": "integer"},
                    "population": {"type": "integer"},
                    "deaths_exponential": {"type": ["object", "null"]},
                    "power_law_error": {"type": "string"},
                },
            },
        },
        "skipped": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["city_id", "attack_count", "reason"],
            },
        },
        "interval_attack_regression": _REGRESSION,
        "population_correlation": _REGRESSION,
    },
}

PREDICTIONS_SCHEMA = {
    "type": "object",
    "required": ["tool_version", "config_echo", "predictions"],
    "properties": {
        **_PROVENANCE,
        "predictions": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["city_id", "mode", "mu", "n", "quantiles", "entropy_nats", "kl_nats"],
                "properties": {
                    "city_id": {"type": "string"},
                    "mode": {"enum": ["ML", "CNML"]},
                    "mu": {"type": "number", "exclusiveMinimum": 0},
                    "n": {"type": "integer", "minimum": 1},
                    "quantiles": {"type": "object", "additionalProperties": {"type": "number"}},
                    "entropy_nats": {"type": "number"},
                    "entropy_bits": {"type": "number"},
                    "kl_nats": {"type": ["number", "null"]},
                    "kl_bits": {"type": ["number", "null"]},
                },
            },
        },
    },
}

BAND_TRENDS_SCHEMA = {
    "type": "object",
    "required": ["tool_version", "config_echo", "city_id", "n_frames", "bands"],
    "properties": {
        **_PROVENANCE,
        "city_id": {"type": "string"},
        "n_frames": {"type": "integer"},
        "bands": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["band", "f_lo", "f_hi", "G", "stderr"],
                "properties": {
                    "band": {"type": "string"},
                    "f_lo": {"type": "number", "minimum": 0, "maximum": 0.5},
                    "f_hi": {"type": "number", "minimum": 0, "maximum": 0.5},
                    "G": {"type": "number"},
                    "stderr": {"type": "number"},
                },
            },
        },
    },
}
