"""Regenerate the packaged anthropometric JSON documents.

Run from the repo root: python3 tools/make_tables.py
"""

import json
from pathlib import Path

OUT = Path(__file__).resolve().parents[1] / "src" / "wheelcom" / "data"

# Frame recipes shared by both documents. Side convention: every limb frame
# keeps y along the long axis pointing proximal and z pointing toward the
# subject's right, so left-side CoM lateral ratios are stored negated.
RECIPES = {
    "head": {
        "origin": "CervicalJC",
        "axis": {"role": "y", "from": "CervicalJC", "to": "HeadVertex"},
        "plane": {"role": "x", "from": "CervicalJC", "to": "Sellion"},
        "length": ["CervicalJC", "HeadVertex"],
        "tracking": "head",
    },
    "thorax": {
        "origin": "CervicalJC",
        "axis": {"role": "y", "from": "LumbarJC", "to": "CervicalJC"},
        "plane": {"role": "x", "from": "LumbarJC", "to": "Suprasternale"},
        "length": ["CervicalJC", "LumbarJC"],
        "tracking": "thorax",
    },
    "pelvis": {
        "origin": "LumbarJC",
        "axis": {"role": "z", "from": "LASIS", "to": "RASIS"},
        "plane": {
            "role": "x",
            "from": "midpoint(LPSIS,RPSIS)",
            "to": "midpoint(LASIS,RASIS)",
        },
        "length": ["LumbarJC", "midpoint(LHipJC,RHipJC)"],
        "tracking": "wheelchair",
    },
    "upper_arm_r": {
        "origin": "RShoulderJC",
        "axis": {"role": "y", "from": "RElbowJC", "to": "RShoulderJC"},
        "plane": {"role": "z", "from": "RElbowMed", "to": "RElbowLat"},
        "length": ["RShoulderJC", "RElbowJC"],
        "tracking": "upper_arm_r",
    },
    "upper_arm_l": {
        "origin": "LShoulderJC",
        "axis": {"role": "y", "from": "LElbowJC", "to": "LShoulderJC"},
        "plane": {"role": "z", "from": "LElbowLat", "to": "LElbowMed"},
        "length": ["LShoulderJC", "LElbowJC"],
        "tracking": "upper_arm_l",
    },
    "forearm_r": {
        "origin": "RElbowJC",
        "axis": {"role": "y", "from": "RWristJC", "to": "RElbowJC"},
        "plane": {"role": "z", "from": "RWristUln", "to": "RWristRad"},
        "length": ["RElbowJC", "RWristJC"],
        "tracking": "forearm_r",
    },
    "forearm_l": {
        "origin": "LElbowJC",
        "axis": {"role": "y", "from": "LWristJC", "to": "LElbowJC"},
        "plane": {"role": "z", "from": "LWristRad", "to": "LWristUln"},
        "length": ["LElbowJC", "LWristJC"],
        "tracking": "forearm_l",
    },
    "hand_r": {
        "origin": "RWristJC",
        "axis": {"role": "y", "from": "midpoint(RMeta2,RMeta5)", "to": "RWristJC"},
        "plane": {"role": "z", "from": "RMeta5", "to": "RMeta2"},
        "length": ["RWristJC", "midpoint(RMeta2,RMeta5)"],
        "tracking": "forearm_r",
    },
    "hand_l": {
        "origin": "LWristJC",
        "axis": {"role": "y", "from": "midpoint(LMeta2,LMeta5)", "to": "LWristJC"},
        "plane": {"role": "z", "from": "LMeta2", "to": "LMeta5"},
        "length": ["LWristJC", "midpoint(LMeta2,LMeta5)"],
        "tracking": "forearm_l",
    },
    "thigh_r": {
        "origin": "RHipJC",
        "axis": {"role": "y", "from": "RKneeJC", "to": "RHipJC"},
        "plane": {"role": "z", "from": "RKneeMed", "to": "RKneeLat"},
        "length": ["RHipJC", "RKneeJC"],
        "tracking": "wheelchair",
    },
    "thigh_l": {
        "origin": "LHipJC",
        "axis": {"role": "y", "from": "LKneeJC", "to": "LHipJC"},
        "plane": {"role": "z", "from": "LKneeLat", "to": "LKneeMed"},
        "length": ["LHipJC", "LKneeJC"],
        "tracking": "wheelchair",
    },
    "shank_r": {
        "origin": "RKneeJC",
        "axis": {"role": "y", "from": "RAnkleJC", "to": "RKneeJC"},
        "plane": {"role": "z", "from": "RAnkleMed", "to": "RAnkleLat"},
        "length": ["RKneeJC", "RAnkleJC"],
        "tracking": "wheelchair",
    },
    "shank_l": {
        "origin": "LKneeJC",
        "axis": {"role": "y", "from": "LAnkleJC", "to": "LKneeJC"},
        "plane": {"role": "z", "from": "LAnkleLat", "to": "LAnkleMed"},
        "length": ["LKneeJC", "LAnkleJC"],
        "tracking": "wheelchair",
    },
    "foot_r": {
        "origin": "RAnkleJC",
        "axis": {"role": "y", "from": "RAnkleJC", "to": "RKneeJC"},
        "plane": {"role": "z", "from": "RAnkleMed", "to": "RAnkleLat"},
        "length": ["RAnkleJC", "RKneeJC"],
        "tracking": "wheelchair",
    },
    "foot_l": {
        "origin": "LAnkleJC",
        "axis": {"role": "y", "from": "LAnkleJC", "to": "LKneeJC"},
        "plane": {"role": "z", "from": "LAnkleLat", "to": "LAnkleMed"},
        "length": ["LAnkleJC", "LKneeJC"],
        "tracking": "wheelchair",
    },
}

# Base values keyed by segment type; bilateral types are expanded to _l/_r
# with the lateral (z) CoM ratio negated on the left.
DEFAULT_VALUES = {
    "female": {
        "head": (0.067, (0.008, 0.559, -0.001)),
        "thorax": (0.304, (-0.016, -0.436, -0.006)),
        "pelvis": (0.146, (-0.009, -0.232, 0.002)),
        "upper_arm": (0.022, (-0.073, -0.454, -0.028)),
        "forearm": (0.013, (0.021, -0.411, 0.019)),
        "hand": (0.005, (0.077, -0.768, 0.048)),
        "thigh": (0.146, (-0.077, -0.377, 0.009)),
        "shank": (0.045, (-0.049, -0.404, 0.031)),
        "foot": (0.010, (0.0, 0.0, 0.0)),
    },
    "male": {
        "head": (0.067, (0.020, 0.536, 0.001)),
        "thorax": (0.333, (-0.036, -0.420, -0.002)),
        "pelvis": (0.142, (0.028, -0.280, -0.006)),
        "upper_arm": (0.024, (0.017, -0.452, -0.026)),
        "forearm": (0.017, (0.010, -0.417, 0.014)),
        "hand": (0.006, (0.082, -0.839, 0.075)),
        "thigh": (0.123, (-0.041, -0.429, 0.033)),
        "shank": (0.048, (-0.048, -0.410, 0.007)),
        "foot": (0.012, (0.0, 0.0, 0.0)),
    },
}

SYNTHETIC_VALUES = {
    "female": {
        "head": (0.08, (0.05, 0.45, 0.02)),
        "thorax": (0.30, (-0.04, -0.40, -0.01)),
        "pelvis": (0.17, (0.02, -0.25, 0.01)),
        "upper_arm": (0.025, (0.02, -0.44, -0.03)),
        "forearm": (0.015, (0.01, -0.42, 0.02)),
        "hand": (0.007, (0.05, -0.70, 0.04)),
        "thigh": (0.112, (-0.03, -0.43, 0.04)),
        "shank": (0.05, (-0.04, -0.42, 0.01)),
        "foot": (0.016, (0.10, -0.20, 0.05)),
    },
    "male": {
        "head": (0.08, (0.04, 0.46, 0.01)),
        "thorax": (0.31, (-0.05, -0.41, -0.02)),
        "pelvis": (0.16, (0.03, -0.26, 0.02)),
        "upper_arm": (0.025, (0.03, -0.45, -0.02)),
        "forearm": (0.015, (0.02, -0.43, 0.03)),
        "hand": (0.007, (0.06, -0.72, 0.05)),
        "thigh": (0.112, (-0.04, -0.44, 0.03)),
        "shank": (0.05, (-0.05, -0.41, 0.02)),
        "foot": (0.016, (0.12, -0.18, 0.04)),
    },
}

REGRESSION = {
    "female": {
        "lumbar_offset": [-0.289, 0.172, 0.0],
        "hip_offset": [-0.197, -0.270, 0.372],
        "cervical_ratio": 0.53,
        "cervical_angle_deg": 14.0,
        "shoulder_ratio": 0.17,
    },
    "male": {
        "lumbar_offset": [-0.264, 0.126, 0.0],
        "hip_offset": [-0.208, -0.278, 0.361],
        "cervical_ratio": 0.55,
        "cervical_angle_deg": 8.0,
        "shoulder_ratio": 0.17,
    },
}

BILATERAL = ("upper_arm", "forearm", "hand", "thigh", "shank", "foot")

DEFAULT_PROVENANCE = (
    "Segment mass fractions and CoM position ratios transcribed from Dumas, "
    "Cheze & Verriest (2007) 'Adjustments to McConville et al. and Young et "
    "al. body segment inertial parameters', J Biomech 40(3):543-553 (with "
    "corrigendum), based on McConville et al. (1980) and Young et al. (1983). "
    "Lumbar and hip joint-centre offsets (fractions of the inter-ASIS "
    "distance in a mid-ASIS pelvis frame) and the cervical ratio/angle rule "
    "follow Reed, Manary & Schneider (1999, SAE 1999-01-0959); the shoulder "
    "rule is 17% of the inter-acromial distance straight below the acromion "
    "after Rab, Petuskey & Bagley (2002). Left-side entries negate the "
    "lateral CoM ratio because every limb frame keeps z toward the subject's "
    "right. The foot CoM is approximated at the ankle joint centre: the "
    "probing protocol carries no distal foot landmarks, and the feet are "
    "rigid with the wheelchair so the residual is a constant offset. "
    "Re-check transcribed values against the original publications before "
    "clinical use."
)

SYNTHETIC_PROVENANCE = (
    "Synthetic verification table. Mass fractions sum to 1 per sex and CoM "
    "ratios are arbitrary nonzero values chosen to exercise every segment "
    "frame, including the feet. Not anthropometric data; use only with "
    "synthetically generated sessions."
)

CONVENTIONS = (
    "Pelvis regression frame: origin at the ASIS midpoint, z from LASIS to "
    "RASIS, plane completed upward by the pubic symphysis, x forward. "
    "Regression offsets are (forward, up, lateral-right) fractions of the "
    "inter-ASIS distance; the hip lateral term is a magnitude mirrored per "
    "side. Segment frames per the lcs_recipes block: y along the long axis "
    "pointing proximal, z toward the subject's right, x forward; CoM ratios "
    "are fractions of the recipe's segment length."
)


def expand(values):
    segments = {}
    for sex, table in values.items():
        for seg_type, (fraction, ratios) in table.items():
            if seg_type in BILATERAL:
                rx, ry, rz = ratios
                targets = {f"{seg_type}_r": (rx, ry, rz), f"{seg_type}_l": (rx, ry, -rz)}
            else:
                targets = {seg_type: ratios}
            for seg_id, r in targets.items():
                segments.setdefault(seg_id, {})[sex] = {
                    "mass_fraction": fraction,
                    "com_ratios": list(r),
                }
    return segments


def write(name, values, provenance):
    doc = {
        "format_version": "1.0",
        "provenance": provenance,
        "conventions": CONVENTIONS,
        "segments": expand(values),
        "regression": REGRESSION,
        "lcs_recipes": RECIPES,
    }
    path = OUT / f"{name}_anthropometry.json"
    path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    print(f"wrote {path}")


if __name__ == "__main__":
    write("default", DEFAULT_VALUES, DEFAULT_PROVENANCE)
    write("synthetic", SYNTHETIC_VALUES, SYNTHETIC_PROVENANCE)
