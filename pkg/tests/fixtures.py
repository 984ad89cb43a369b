"""Published per-feature-set results (percent) for two sensors: (TPR, TNR, BA)."""

SENSOR_A = {
    "TD": (97.81, 80.51, 89.16),
    "TD+f_r": (97.22, 82.58, 89.90),
    "SD": (98.53, 78.13, 88.33),
    "SD+f_r": (99.34, 66.29, 82.81),
    "ENV AMP": (85.55, 95.32, 90.44),
    "ENV AMP+f_r": (86.73, 96.44, 91.58),
    "AMS": (97.35, 72.92, 85.13),
    "AMS+f_r": (99.33, 90.29, 94.81),
    "MFCC (13)": (98.23, 99.34, 98.79),
    "MFCC (13)+f_r": (98.20, 99.62, 98.91),
}

SENSOR_B = {
    "TD": (96.67, 60.91, 78.79),
    "TD+f_r": (97.57, 62.11, 79.84),
    "SD": (97.66, 65.37, 81.51),
    "SD+f_r": (99.34, 66.29, 82.81),
    "ENV AMP": (96.65, 71.99, 84.32),
    "ENV AMP+f_r": (97.96, 71.24, 84.60),
    "AMS": (94.19, 50.37, 72.28),
    "AMS+f_r": (91.15, 82.95, 87.05),
    "MFCC (13)": (98.30, 94.39, 96.35),
    "MFCC (13)+f_r": (98.25, 95.32, 96.79),
}


def counts_for_rates(tpr_pct, tnr_pct, n=100_000):
    """Confusion counts whose rates equal the given percentages exactly."""
    tp = round(tpr_pct * n / 100)
    tn = round(tnr_pct * n / 100)
    return tp, n - tp, n - tn, tn
