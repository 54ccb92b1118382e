"""Column layouts of the per-subject CSV exports."""

from .types import SLEEP_SCORES, SLEEP_STAGES

MANIFEST_COLUMNS = (
    "subject_id", "age", "sex", "height_cm", "initial_weight_kg",
    "final_weight_kg", "start_date", "end_date",
)
TIMESERIES_COLUMNS = ("timestamp", "value")

ACTIVITY_COLUMNS = (
    "date", "calories", "steps", "distance_km",
    "sedentary_min", "lightly_min", "moderately_min", "very_min",
    "fat_burn_min", "cardio_min", "peak_min",
    "below_zone1_min", "zone1_min", "zone2_min", "zone3_min",
    "vo2max", "resting_hr",
)
# csv column -> DailyActivityRecord attribute, where they differ
ACTIVITY_RENAMES = {"distance_km": "distance", "vo2max": "demographic_vo2max"}
ACTIVITY_OPTIONAL = ("vo2max", "resting_hr")

SLEEP_COLUMNS = (
    "start", "end", "asleep_min", "awake_min", "deep_min", "light_min", "rem_min",
    "efficiency", "awakenings", "spo2_avg", "spo2_lower", "spo2_upper",
    "nightly_temp_delta",
    *[f"br_{stage}_{part}" for stage in SLEEP_STAGES for part in ("mean", "std", "snr")],
    "restlessness",
    *[f"score_{name}" for name in SLEEP_SCORES],
    "nightly_rmssd", "nonrem_hr",
)
SLEEP_REQUIRED = ("start", "end", "asleep_min", "awake_min")

STRESS_COLUMNS = (
    "date", "stress_score", "sleep_points", "responsiveness_points", "exertion_points",
)

EXERCISE_COLUMNS = ("start", "duration_min", "avg_hr")
EDA_SESSION_COLUMNS = ("session_id", "start", "hrv_baseline_ms")
EDA_SAMPLE_COLUMNS = ("t_s", "scl_us", "hr_bpm")
ECG_SESSION_COLUMNS = ("session_id", "start", "session_hr")
ECG_SAMPLE_COLUMNS = ("t_s", "mv")

DAILY_FILES = {"activity": "activity.csv", "sleep": "sleep.csv", "stress": "stress.csv"}
SESSION_FILES = {"eda": "eda_sessions.csv", "ecg": "ecg_sessions.csv", "exercise": "exercise.csv"}
SERIES_FILES = {"cgm": "cgm.csv", "hr": "hr.csv"}
MANIFEST_FILE = "subjects.csv"
