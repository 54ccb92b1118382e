from .clean import (
    LOST_GE_2PCT,
    LOST_LT_2PCT,
    CleaningReport,
    label_subject,
    label_value,
    standardize_bundle,
)
from .readers import (
    load_cohort,
    load_subject,
    parse_daily_csv,
    parse_session_csv,
    parse_subject_manifest,
    parse_timeseries_csv,
)
from .types import (
    DailyActivityRecord,
    EcgSession,
    EdaSession,
    ExerciseSession,
    GlucoseSeries,
    HeartRateSeries,
    IngestError,
    SleepEpisode,
    StressDailyRecord,
    SubjectBundle,
    SubjectMeta,
    Timestamp,
)
from .writers import write_cohort, write_subject
