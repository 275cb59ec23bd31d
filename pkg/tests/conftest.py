import pytest

from hatestack.config import RunConfig


def pytest_terminal_summary(terminalreporter):
    """Replay the acceptance suite's per-criterion lines post-capture."""
    try:
        from test_acceptance import CRITERION_LINES
    except ImportError:
        return
    if CRITERION_LINES:
        terminalreporter.write_sep("-", "acceptance criteria")
        for line in CRITERION_LINES:
            terminalreporter.write_line(line)
from hatestack.corpus import Dataset, stratified_split
from hatestack.embeddings import HashedProvider
from hatestack.features import default_resources
from hatestack.stack import prepare_corpus, train_platform_model
from hatestack.synth import default_profiles, generate_corpus


@pytest.fixture(scope="session")
def resources():
    return default_resources()


def small_config(seed=5):
    """A cheap-but-real pipeline configuration for unit tests."""
    return RunConfig(
        seed=seed,
        k_folds=3,
        pls_components=4,
        embedding_provider="hashed:32",
        learner="logistic",
        logistic_epochs=300,
        mlp_epochs=60,
    )


@pytest.fixture(scope="session")
def tiny_study(resources):
    """Two trained platform models plus their train/test splits and corpora."""
    config = small_config()
    provider = HashedProvider(32, seed=config.seed)
    profiles = default_profiles()[:2]
    corpus = generate_corpus(profiles, 150, seed=41)
    models = []
    tests = {}
    prepared = {}
    for profile in profiles:
        ds = Dataset(tuple(m for m in corpus if m.platform == profile.platform))
        train, test = stratified_split(ds, 0.8, config.seed)
        model, _ = train_platform_model(train, config, resources, provider)
        models.append(model)
        tests[profile.platform] = test
        wanted = set(model.oof_ids)
        subset = Dataset(tuple(m for m in train if m.id in wanted))
        pc, _ = prepare_corpus(subset, resources, provider)
        prepared[profile.platform] = pc
    return {
        "config": config,
        "provider": provider,
        "models": models,
        "tests": tests,
        "prepared": prepared,
    }
