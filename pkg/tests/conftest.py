import pytest

from jobcube.config import load_codebooks, load_hierarchy, load_sources
from jobcube.datagen import GenConfig, generate
from jobcube.preprocess import CleaningPolicy, run_pipeline
from jobcube.records import NULLABLE_FIELDS
from jobcube.sources import ingest_sources

SMALL_COUNTS = {"tripoli": 400, "misurata": 250, "sirte": 150}


def default_policy(fill: str = "UNKNOWN") -> CleaningPolicy:
    return CleaningPolicy(
        fill_constants={name: fill for name in sorted(NULLABLE_FIELDS)})


def run_etl(gen_result):
    """Ingest the generated files and run the cleaning pipeline the way the
    command-line stages do, using the sidecar configs the generator wrote."""
    out_dir = gen_result.out_dir
    specs = load_sources(out_dir / "sources.yaml")
    staged, ingest_report = ingest_sources(specs, out_dir)
    cleaned, etl_report = run_pipeline(
        staged,
        codebooks=load_codebooks(out_dir / "codebooks.yaml"),
        policy=default_policy(),
        hierarchy=load_hierarchy(out_dir / "hierarchy.yaml"))
    return staged, cleaned, ingest_report, etl_report


@pytest.fixture(scope="session")
def gen_small(tmp_path_factory):
    out = tmp_path_factory.mktemp("gen_small")
    return generate(GenConfig(seed=4242, counts=SMALL_COUNTS), out)


@pytest.fixture(scope="session")
def etl_small(gen_small):
    return run_etl(gen_small)


@pytest.fixture(scope="session")
def clean_small(etl_small):
    return etl_small[1]
