from .filedescriptor import (
    SampleColumns, SummaryColumns, ConcentrationColumns,
    SAMPLE_DUMP, se, eps_column
)
