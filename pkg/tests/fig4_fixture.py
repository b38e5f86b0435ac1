"""Published per-zone count tables for two real patients.

Each row maps a zone to ((truth counts for scores 0..3), (predicted counts
for scores 0..3)).  Blank table cells are zeros.  These two patients are
the only fully published numerical artifact at this granularity, so they
anchor the aggregation acceptance tests.
"""

PATIENT_ONE = {
    "left_anterior_superior": ((5, 44, 0, 0), (2, 45, 2, 0)),
    "left_anterior_inferior": ((6, 60, 0, 0), (12, 55, 1, 0)),
    "left_lateral_superior": ((31, 30, 0, 0), (24, 35, 0, 0)),
    "left_lateral_inferior": ((35, 39, 0, 0), (38, 36, 0, 0)),
    "left_posterior_superior": ((65, 2, 0, 0), (67, 0, 0, 0)),
    "left_posterior_inferior": ((0, 65, 0, 0), (3, 62, 0, 0)),
    "right_anterior_superior": ((21, 36, 0, 0), (20, 35, 2, 0)),
    "right_anterior_inferior": ((2, 26, 14, 0), (1, 29, 12, 0)),
    "right_lateral_superior": ((13, 42, 3, 0), (15, 37, 6, 0)),
    "right_lateral_inferior": ((0, 54, 2, 0), (1, 51, 4, 0)),
    "right_posterior_superior": ((47, 23, 0, 0), (55, 15, 0, 0)),
    "right_posterior_inferior": ((11, 44, 3, 0), (4, 54, 0, 0)),
}
PATIENT_ONE_REGION_SCORES = {
    "truth": (1, 1, 0, 1, 0, 1, 1, 1, 1, 1, 0, 1),
    "predicted": (1, 1, 1, 0, 0, 1, 1, 1, 1, 1, 0, 1),
}
PATIENT_ONE_GLOBALS = (9, 9)
PATIENT_ONE_DISAGREEMENTS = ("left_lateral_superior", "left_lateral_inferior")

PATIENT_TWO = {
    "left_anterior_superior": ((3, 24, 32, 0), (6, 26, 27, 0)),
    "left_anterior_inferior": ((0, 29, 0, 0), (2, 27, 0, 0)),
    "left_lateral_superior": ((0, 42, 7, 0), (0, 47, 2, 0)),
    "left_lateral_inferior": ((0, 39, 0, 0), (4, 35, 0, 0)),
    "left_posterior_superior": ((0, 5, 27, 2), (0, 9, 23, 2)),
    "left_posterior_inferior": ((5, 54, 0, 0), (8, 49, 2, 0)),
    "right_anterior_superior": ((0, 42, 6, 0), (0, 46, 2, 0)),
    "right_anterior_inferior": ((0, 27, 37, 6), (0, 35, 29, 6)),
    "right_lateral_superior": ((0, 34, 13, 0), (0, 37, 10, 0)),
    "right_lateral_inferior": ((0, 54, 22, 0), (4, 61, 11, 0)),
    "right_posterior_superior": ((7, 104, 3, 0), (16, 95, 3, 0)),
    "right_posterior_inferior": ((0, 39, 57, 5), (0, 37, 59, 5)),
}
PATIENT_TWO_REGION_SCORES = {
    "truth": (2, 1, 1, 1, 2, 1, 1, 2, 1, 1, 1, 2),
    "predicted": (2, 1, 1, 1, 2, 1, 1, 1, 1, 1, 1, 2),
}
PATIENT_TWO_GLOBALS = (16, 15)
PATIENT_TWO_DISAGREEMENTS = ("right_anterior_inferior",)


def as_zone_counts(table):
    """Split a fixture table into (truth_counts, predicted_counts) keyed by Zone."""
    from lusscore.data import Zone

    truth = {}
    predicted = {}
    for name, (truth_row, predicted_row) in table.items():
        zone = Zone.parse(name)
        truth[zone] = dict(enumerate(truth_row))
        predicted[zone] = dict(enumerate(predicted_row))
    return truth, predicted
